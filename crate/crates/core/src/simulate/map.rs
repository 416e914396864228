use crate::learners::Adjacency;

/// Rectangular region grid standing in for a real map.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialMap {
    pub labels: Vec<String>,
    pub adjacency: Adjacency,
    /// Standardized centroid coordinates (x, y) per region.
    pub centroids: Vec<(f64, f64)>,
    /// sin(x) cos(0.5 y) at each centroid.
    pub f_spat: Vec<f64>,
}

fn standardize(v: &[f64]) -> Vec<f64> {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    v.iter()
        .map(|x| if sd > 0.0 { (x - mean) / sd } else { 0.0 })
        .collect()
}

/// `rows × cols` grid with rook adjacency; region r_c is labelled `"{r}_{c}"`.
pub fn spatial_map(rows: usize, cols: usize) -> SpatialMap {
    let labels: Vec<String> = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| format!("{r}_{c}")))
        .collect();
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let here = &labels[r * cols + c];
            if c + 1 < cols {
                edges.push((here.clone(), labels[r * cols + c + 1].clone()));
            }
            if r + 1 < rows {
                edges.push((here.clone(), labels[(r + 1) * cols + c].clone()));
            }
        }
    }
    let adjacency = Adjacency::new(&labels, &edges).expect("grid graph has no self-loops");
    let xs: Vec<f64> = (0..rows * cols).map(|i| (i % cols) as f64).collect();
    let ys: Vec<f64> = (0..rows * cols).map(|i| (i / cols) as f64).collect();
    let centroids: Vec<(f64, f64)> = standardize(&xs).into_iter().zip(standardize(&ys)).collect();
    let f_spat = centroids.iter().map(|&(x, y)| x.sin() * (0.5 * y).cos()).collect();
    SpatialMap {
        labels,
        adjacency,
        centroids,
        f_spat,
    }
}
