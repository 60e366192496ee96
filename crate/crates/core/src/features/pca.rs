//! Principal component analysis of the training TF-IDF matrix.
//!
//! The decomposition goes through whichever Gram matrix is smaller
//! (`X Xᵀ` for wide data, `Xᵀ X` for tall data) of the centred matrix `X`;
//! its eigenvectors give the right singular vectors of `X`. Components with
//! vanishing variance are emitted as zero rows so the output width is fixed.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::tfidf::SparseVec;
use crate::error::{Error, Result};

pub const DOC_COMPONENTS: usize = 100;

/// Eigenvalues below this fraction of the largest are treated as zero.
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Array1<f64>,
    /// One component per row; rows past the data rank are zero.
    pub components: Array2<f64>,
    pub explained_variance: Array1<f64>,
    #[serde(skip)]
    mean_projection: Option<Array1<f64>>,
}

impl PcaModel {
    pub fn fit(data: ArrayView2<f64>, n_components: usize) -> Result<Self> {
        let (n, dim) = data.dim();
        if n < 2 {
            return Err(Error::Fit(format!("need at least 2 samples, got {n}")));
        }
        let mean = data.mean_axis(Axis(0)).expect("nonempty");
        let centered = &data - &mean;

        // Eigenpairs of the smaller Gram matrix, sorted by decreasing eigenvalue.
        let wide = n <= dim;
        let gram = if wide {
            centered.dot(&centered.t())
        } else {
            centered.t().dot(&centered)
        };
        let g = gram.nrows();
        let eig = SymmetricEigen::new(DMatrix::from_fn(g, g, |i, j| gram[[i, j]]));
        let mut order: Vec<usize> = (0..g).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
        let top = eig.eigenvalues[order[0]].max(0.0);

        let mut components = Array2::<f64>::zeros((n_components, dim));
        let mut explained_variance = Array1::<f64>::zeros(n_components);
        let mut kept = 0;
        for &k in order.iter() {
            if kept == n_components {
                break;
            }
            let lambda = eig.eigenvalues[k];
            if top <= 0.0 || lambda <= top * RANK_TOLERANCE {
                break;
            }
            let u = Array1::from_iter(eig.eigenvectors.column(k).iter().copied());
            let mut v = if wide { centered.t().dot(&u) } else { u };
            // Re-orthogonalise against the accepted components.
            for _ in 0..2 {
                for prev in 0..kept {
                    let p = components.row(prev);
                    let proj = p.dot(&v);
                    v.scaled_add(-proj, &p);
                }
            }
            let norm = v.dot(&v).sqrt();
            if norm <= f64::EPSILON {
                continue;
            }
            v /= norm;
            fix_sign(&mut v);
            components.row_mut(kept).assign(&v);
            explained_variance[kept] = lambda / (n - 1) as f64;
            kept += 1;
        }
        Ok(PcaModel::from_parts(mean, components, explained_variance))
    }

    pub fn from_parts(mean: Array1<f64>, components: Array2<f64>, explained_variance: Array1<f64>) -> Self {
        let mean_projection = Some(components.dot(&mean));
        PcaModel {
            mean,
            components,
            explained_variance,
            mean_projection,
        }
    }

    pub fn n_components(&self) -> usize {
        self.components.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    /// Number of nonzero components.
    pub fn rank(&self) -> usize {
        self.components
            .rows()
            .into_iter()
            .filter(|r| r.iter().any(|&x| x != 0.0))
            .count()
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        let centered = Array1::from_iter(x.iter().zip(self.mean.iter()).map(|(a, m)| a - m));
        self.components.dot(&centered).to_vec()
    }

    pub fn transform_sparse(&self, x: &SparseVec) -> Vec<f64> {
        let owned;
        let mean_proj = match &self.mean_projection {
            Some(p) => p,
            None => {
                owned = self.components.dot(&self.mean);
                &owned
            }
        };
        self.components
            .rows()
            .into_iter()
            .zip(mean_proj.iter())
            .map(|(c, mp)| x.iter().map(|&(j, v)| c[j] * v).sum::<f64>() - mp)
            .collect()
    }

    pub fn reconstruct(&self, projected: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (c, &p) in self.components.rows().into_iter().zip(projected) {
            out.scaled_add(p, &c);
        }
        out.to_vec()
    }
}

pub fn fit_pca(train_doc_vectors: ArrayView2<f64>) -> Result<PcaModel> {
    PcaModel::fit(train_doc_vectors, DOC_COMPONENTS)
}

/// Makes the largest-magnitude coordinate positive (first one on ties).
fn fix_sign(v: &mut Array1<f64>) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.mapv_inplace(|x| -x);
    }
}
