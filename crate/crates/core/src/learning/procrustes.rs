//! W-step: `min_W ||E - W^T X||_F^2` subject to `W^T W = I`.
//!
//! With `S = X E^T = U Sigma V^T` (thin SVD, `U` is `d x l`), the minimizer is
//! `W = U V^T`. Working on `S` directly avoids squaring its condition number
//! through `S S^T` / `S^T S`.

use nalgebra::DMatrix;

use crate::error::{ensure_dim, Error, Result};
use crate::learning::HashMatrix;
use crate::types::{ProjectionMatrix, SignatureMatrix, ORTHONORMAL_TOL};

/// Result of the rank-tolerant solver.
#[derive(Clone, Debug)]
pub struct ProcrustesSolution {
    pub projection: ProjectionMatrix,
    /// Numerical rank of `X E^T`.
    pub rank: usize,
}

/// Solves the W-step, reporting the rank of `X E^T` instead of failing when
/// it is deficient. A rank-deficient problem still has (non-unique) optimal
/// solutions and `U V^T` is one of them.
pub fn procrustes(x: &SignatureMatrix, e: &HashMatrix) -> Result<ProcrustesSolution> {
    ensure_dim("number of codes", x.len(), e.len())?;
    let (d, l) = (x.dim(), e.code_len());
    if l >= d {
        return Err(Error::InvalidInput(format!(
            "code length {l} must be smaller than the signature dimension {d}"
        )));
    }
    let cross: DMatrix<f64> = x.matrix() * e.to_real().transpose();
    let svd = cross.svd(true, true);
    let sigma_max = svd.singular_values.max();
    let cutoff = sigma_max * (d.max(l) as f64) * f64::EPSILON;
    let rank = if sigma_max > 0.0 {
        svd.singular_values.iter().filter(|&&s| s > cutoff).count()
    } else {
        0
    };
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let mut w = u * v_t;
    // U's columns belonging to (near-)zero singular values are not guaranteed
    // to stay orthonormal; re-orthonormalize if the product drifted.
    if (w.tr_mul(&w) - DMatrix::<f64>::identity(l, l)).amax() > ORTHONORMAL_TOL / 10.0 {
        w = reorthonormalize(w);
    }
    Ok(ProcrustesSolution {
        projection: ProjectionMatrix::new(w)?,
        rank,
    })
}

/// W-step that treats a rank-deficient `X E^T` as an error.
pub fn w_step(x: &SignatureMatrix, e: &HashMatrix) -> Result<ProjectionMatrix> {
    let sol = procrustes(x, e)?;
    let required = e.code_len();
    if sol.rank < required {
        return Err(Error::DegenerateProcrustes {
            rank: sol.rank,
            required,
        });
    }
    Ok(sol.projection)
}

/// Modified Gram-Schmidt; columns that collapse are replaced by the next
/// canonical basis vector not yet spanned.
fn reorthonormalize(mut w: DMatrix<f64>) -> DMatrix<f64> {
    let (d, l) = w.shape();
    let mut next_basis = 0;
    for j in 0..l {
        let mut norm = orthogonalize_column(&mut w, j);
        while norm < 1e-6 && next_basis < d {
            w.column_mut(j).fill(0.0);
            w[(next_basis, j)] = 1.0;
            next_basis += 1;
            norm = orthogonalize_column(&mut w, j);
        }
        w.column_mut(j).unscale_mut(norm);
    }
    w
}

/// Removes from column `j` its components along columns `0..j` (two passes)
/// and returns the remaining norm.
fn orthogonalize_column(w: &mut DMatrix<f64>, j: usize) -> f64 {
    for _ in 0..2 {
        for k in 0..j {
            let ck = w.column(k).into_owned();
            let proj = ck.dot(&w.column(j));
            w.column_mut(j).axpy(-proj, &ck, 1.0);
        }
    }
    w.column(j).norm()
}
