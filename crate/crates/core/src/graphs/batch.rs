use ndarray::{s, Array2, Array3};

use super::DocGraph;
use crate::error::{Error, Result};
use crate::model::Real;

/// Zero-padded mini-batch of graphs.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphBatch<F> {
    /// `B × N_max × d`
    pub features: Array3<F>,
    /// `B × N_max × N_max`
    pub adjacency: Array3<F>,
    /// `B × N_max`, 1 for real nodes (a leading prefix), 0 for padding.
    pub mask: Array2<F>,
    pub node_counts: Vec<usize>,
    pub labels: Vec<usize>,
}

impl<F: Real> GraphBatch<F> {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn max_nodes(&self) -> usize {
        self.mask.ncols()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.dim().2
    }

    /// Builds a batch directly from arrays, deriving node counts from the mask.
    pub fn from_parts(
        features: Array3<F>,
        adjacency: Array3<F>,
        mask: Array2<F>,
        labels: Vec<usize>,
    ) -> Result<Self> {
        let (b, n, _) = features.dim();
        if adjacency.dim() != (b, n, n) || mask.dim() != (b, n) || labels.len() != b {
            return Err(Error::Shape(format!(
                "features {:?}, adjacency {:?}, mask {:?}, labels {}",
                features.dim(),
                adjacency.dim(),
                mask.dim(),
                labels.len()
            )));
        }
        let node_counts = mask
            .rows()
            .into_iter()
            .map(|r| r.iter().filter(|m| **m > F::zero()).count())
            .collect();
        Ok(GraphBatch {
            features,
            adjacency,
            mask,
            node_counts,
            labels,
        })
    }
}

pub fn batch_graphs<F: Real>(graphs: &[&DocGraph]) -> Result<GraphBatch<F>> {
    let first = graphs.first().ok_or(Error::EmptyBatch)?;
    let d = first.features.ncols();
    let b = graphs.len();
    let n_max = graphs.iter().map(|g| g.num_nodes()).max().unwrap_or(0);

    let mut features = Array3::zeros((b, n_max, d));
    let mut adjacency = Array3::zeros((b, n_max, n_max));
    let mut mask = Array2::zeros((b, n_max));
    let mut node_counts = Vec::with_capacity(b);
    let mut labels = Vec::with_capacity(b);
    for (i, g) in graphs.iter().enumerate() {
        if g.features.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: g.features.ncols(),
            });
        }
        let n = g.num_nodes();
        features
            .slice_mut(s![i, ..n, ..])
            .assign(&g.features.mapv(F::of_f32));
        adjacency
            .slice_mut(s![i, ..n, ..n])
            .assign(&g.adjacency.mapv(F::of_f32));
        mask.slice_mut(s![i, ..n]).fill(F::one());
        node_counts.push(n);
        labels.push(g.label);
    }
    Ok(GraphBatch {
        features,
        adjacency,
        mask,
        node_counts,
        labels,
    })
}
