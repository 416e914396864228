//! Neighbourhood graphs for Markov random field base-learners.

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use super::design::BandedDesign;
use crate::error::{Error, Result};

/// Undirected region graph given as an edge list over string labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "AdjacencyRepr", into = "AdjacencyRepr")]
pub struct Adjacency {
    labels: Vec<String>,
    edges: Vec<(usize, usize)>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct AdjacencyRepr {
    labels: Vec<String>,
    edges: Vec<(usize, usize)>,
}

impl From<AdjacencyRepr> for Adjacency {
    fn from(r: AdjacencyRepr) -> Self {
        let index = r.labels.iter().cloned().enumerate().map(|(i, l)| (l, i)).collect();
        Self {
            labels: r.labels,
            edges: r.edges,
            index,
        }
    }
}

impl From<Adjacency> for AdjacencyRepr {
    fn from(a: Adjacency) -> Self {
        Self {
            labels: a.labels,
            edges: a.edges,
        }
    }
}

impl Adjacency {
    pub fn new<S: AsRef<str>>(regions: &[S], edges: &[(S, S)]) -> Result<Self> {
        let mut adj = Self {
            labels: Vec::new(),
            edges: Vec::new(),
            index: HashMap::new(),
        };
        for r in regions {
            adj.intern(r.as_ref());
        }
        for (a, b) in edges {
            let (a, b) = (adj.intern(a.as_ref()), adj.intern(b.as_ref()));
            if a == b {
                return Err(Error::Parse(format!("self-loop on region '{}'", adj.labels[a])));
            }
            let e = (a.min(b), a.max(b));
            if !adj.edges.contains(&e) {
                adj.edges.push(e);
            }
        }
        Ok(adj)
    }

    pub fn from_edges<S: AsRef<str>>(edges: &[(S, S)]) -> Result<Self> {
        Self::new::<S>(&[], edges)
    }

    /// Parses "regionA,regionB" edge lines and single "region" lines, which
    /// declare a region (possibly isolated) and fix its position in the label order.
    /// Blank lines and `#` comments are skipped.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut regions = Vec::new();
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            match fields.as_slice() {
                [a] if !a.is_empty() => regions.push(a.to_string()),
                [a, b] if !a.is_empty() && !b.is_empty() => edges.push((a.to_string(), b.to_string())),
                _ => {
                    return Err(Error::Parse(format!(
                        "adjacency line {}: expected 'regionA,regionB' or 'region', got '{line}'",
                        lineno + 1
                    )))
                }
            }
        }
        Self::new(&regions, &edges)
    }

    /// Region lines in label order followed by edge lines; parses back to an equal graph.
    pub fn to_edge_list(&self) -> String {
        let mut out: String = self.labels.iter().map(|l| format!("{l}\n")).collect();
        for &(a, b) in &self.edges {
            out.push_str(&format!("{},{}\n", self.labels[a], self.labels[b]));
        }
        out
    }

    fn intern(&mut self, label: &str) -> usize {
        if let Some(&i) = self.index.get(label) {
            return i;
        }
        let i = self.labels.len();
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), i);
        i
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn n_regions(&self) -> usize {
        self.labels.len()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// Graph Laplacian: degree matrix minus adjacency.
    pub fn laplacian(&self) -> Array2<f64> {
        let s = self.n_regions();
        let mut k = Array2::zeros((s, s));
        for &(a, b) in &self.edges {
            k[[a, a]] += 1.0;
            k[[b, b]] += 1.0;
            k[[a, b]] -= 1.0;
            k[[b, a]] -= 1.0;
        }
        k
    }

    pub fn n_components(&self) -> usize {
        let s = self.n_regions();
        let mut parent: Vec<usize> = (0..s).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(a, b) in &self.edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
            }
        }
        (0..s).filter(|&i| find(&mut parent, i) == i).count()
    }

    /// Region-indicator design for observation labels.
    pub fn indicator_design<S: AsRef<str>>(&self, regions: &[S]) -> Result<BandedDesign> {
        let mut start = Vec::with_capacity(regions.len());
        let mut unknown: Vec<String> = Vec::new();
        for r in regions {
            match self.position(r.as_ref()) {
                Some(i) => start.push(i),
                None => {
                    if !unknown.iter().any(|u| u == r.as_ref()) {
                        unknown.push(r.as_ref().to_string());
                    }
                }
            }
        }
        if !unknown.is_empty() {
            return Err(Error::UnknownRegion(unknown));
        }
        let n = start.len();
        Ok(BandedDesign::new(self.n_regions(), 1, start, vec![1.0; n]))
    }
}
