//! Component-wise gradient boosting for bivariate distributional regression:
//! bivariate Bernoulli, Poisson and Gaussian responses with every distribution
//! parameter modelled by its own additive predictor.

pub mod data;
pub mod engine;
pub mod error;
pub mod family;
pub mod io;
pub mod learners;
pub mod linalg;
pub mod scoring;
pub mod simulate;

pub use data::{Column, Covariates, Dataset};
pub use engine::{fit, FittedModel, ModelSpec};
pub use error::{Error, Result};
pub use family::{Family, Params};
pub use learners::{Adjacency, BaseLearnerSpec};
