//! Criterion benchmarks for the boosting engine; see `benches/`.
