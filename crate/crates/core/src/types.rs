//! Shared domain types: enrolled signatures, the orthonormal projection and
//! the model hyper-parameters.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Tolerance on the unit norm of every signature column.
pub const UNIT_NORM_TOL: f64 = 1e-6;
/// Tolerance on `W^T W = I`.
pub const ORTHONORMAL_TOL: f64 = 1e-8;

/// `d x N` matrix of enrolled signatures, one unit-norm signature per column.
#[derive(Clone, Debug, PartialEq)]
pub struct SignatureMatrix {
    data: DMatrix<f64>,
}

impl SignatureMatrix {
    /// Wraps `data`, checking finiteness and unit column norms.
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::InvalidInput(
                "signature matrix needs d >= 1 and N >= 1".into(),
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite signature entry".into()));
        }
        for (j, col) in data.column_iter().enumerate() {
            let norm = col.norm();
            if (norm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::InvalidInput(format!(
                    "signature {j} has norm {norm}, expected 1"
                )));
            }
        }
        Ok(Self { data })
    }

    /// Normalizes every column to unit length first. Zero columns are rejected.
    pub fn normalized(mut data: DMatrix<f64>) -> Result<Self> {
        for (j, mut col) in data.column_iter_mut().enumerate() {
            let norm = col.norm();
            if norm == 0.0 || !norm.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "signature {j} cannot be normalized"
                )));
            }
            col /= norm;
        }
        Self::new(data)
    }

    /// Builds from a list of signatures (each of length `d`).
    pub fn from_columns(columns: &[DVector<f64>]) -> Result<Self> {
        let Some(first) = columns.first() else {
            return Err(Error::InvalidInput("no signatures".into()));
        };
        let d = first.len();
        for c in columns {
            crate::error::ensure_dim("signature length", d, c.len())?;
        }
        Self::new(DMatrix::from_columns(columns))
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn len(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.data.ncols() == 0
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn column(&self, i: usize) -> DVector<f64> {
        self.data.column(i).into_owned()
    }

    pub fn columns(&self) -> impl Iterator<Item = DVector<f64>> + '_ {
        self.data.column_iter().map(|c| c.into_owned())
    }
}

/// `d x l` projection with orthonormal columns, `l < d`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionMatrix {
    data: DMatrix<f64>,
}

impl ProjectionMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        let (d, l) = data.shape();
        if l == 0 || l >= d {
            return Err(Error::InvalidInput(format!(
                "projection must be d x l with 1 <= l < d, got {d} x {l}"
            )));
        }
        let gram = data.tr_mul(&data);
        let err = (gram - DMatrix::<f64>::identity(l, l)).amax();
        if !(err <= ORTHONORMAL_TOL) {
            return Err(Error::InvalidInput(format!(
                "projection columns are not orthonormal (max |W^T W - I| = {err:e})"
            )));
        }
        Ok(Self { data })
    }

    /// Orthonormalized Gaussian `d x l` matrix.
    pub fn random<R: Rng + ?Sized>(d: usize, l: usize, rng: &mut R) -> Result<Self> {
        if l == 0 || l >= d {
            return Err(Error::InvalidInput(format!(
                "projection must be d x l with 1 <= l < d, got {d} x {l}"
            )));
        }
        let g = DMatrix::<f64>::from_fn(d, l, |_, _| rng.sample(StandardNormal));
        let q = g.qr().q();
        Self::new(q)
    }

    pub fn input_dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn code_len(&self) -> usize {
        self.data.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// `W^T x`.
    pub fn project(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        crate::error::ensure_dim("projection input", self.input_dim(), x.len())?;
        Ok(self.data.tr_mul(x))
    }

    /// `W v` for a length-`l` vector.
    pub fn lift(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        crate::error::ensure_dim("projection code", self.code_len(), v.len())?;
        Ok(&self.data * v)
    }
}

/// Hyper-parameters of the joint embedding / partition learner.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    /// Code length `l`.
    pub code_len: usize,
    /// Nonzeros per code, `S`.
    pub sparsity: usize,
    /// Number of groups `M`.
    pub groups: usize,
    /// Weight of the within-group scatter.
    pub lambda: f64,
    /// Weight of the between-group scatter.
    pub gamma: f64,
    pub max_outer_iters: usize,
    pub convergence_tol: f64,
    /// Iteration cap of each inner k-means run.
    pub kmeans_max_iters: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            code_len: 32,
            sparsity: 8,
            groups: 16,
            lambda: 1.0,
            gamma: 0.1,
            max_outer_iters: 30,
            convergence_tol: 1e-6,
            kmeans_max_iters: 100,
            seed: 0,
        }
    }
}

impl ModelConfig {
    /// Checks the data-independent invariants.
    pub fn validate(&self) -> Result<()> {
        if self.sparsity == 0 || self.sparsity >= self.code_len {
            return Err(Error::InvalidSparsity {
                sparsity: self.sparsity,
                len: self.code_len,
            });
        }
        if !(self.gamma > 0.0 && self.lambda > self.gamma && self.lambda.is_finite()) {
            return Err(Error::Config(format!(
                "need lambda > gamma > 0, got lambda={} gamma={}",
                self.lambda, self.gamma
            )));
        }
        if self.groups == 0 {
            return Err(Error::Config("need at least one group".into()));
        }
        if self.max_outer_iters == 0 || self.kmeans_max_iters == 0 {
            return Err(Error::Config("iteration caps must be positive".into()));
        }
        if !(self.convergence_tol >= 0.0) {
            return Err(Error::Config("convergence_tol must be >= 0".into()));
        }
        Ok(())
    }

    /// Checks the invariants that involve the data shape (`l < d`, `M <= N`).
    pub fn validate_for(&self, d: usize, n: usize) -> Result<()> {
        self.validate()?;
        if self.code_len >= d {
            return Err(Error::Config(format!(
                "code length {} must be smaller than the signature dimension {d}",
                self.code_len
            )));
        }
        if self.groups > n {
            return Err(Error::Config(format!(
                "{} groups for {n} signatures",
                self.groups
            )));
        }
        Ok(())
    }

    /// Rescaling applied to the codes before k-means, `lambda / (lambda - gamma)`.
    pub fn kmeans_scale(&self) -> f64 {
        self.lambda / (self.lambda - self.gamma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn signature_matrix_rejects_non_unit_columns() {
        let m = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        assert!(SignatureMatrix::new(m.clone()).is_err());
        let s = SignatureMatrix::normalized(m).unwrap();
        assert!((s.column(0).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn signature_matrix_rejects_nan() {
        let m = DMatrix::from_row_slice(2, 1, &[f64::NAN, 1.0]);
        assert!(SignatureMatrix::normalized(m).is_err());
    }

    #[test]
    fn random_projection_is_orthonormal() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let w = ProjectionMatrix::random(16, 8, &mut rng).unwrap();
        let gram = w.matrix().tr_mul(w.matrix());
        assert!((gram - DMatrix::identity(8, 8)).amax() < 1e-12);
    }

    #[test]
    fn projection_requires_l_below_d() {
        assert!(ProjectionMatrix::new(DMatrix::identity(4, 4)).is_err());
        assert!(ProjectionMatrix::new(DMatrix::identity(4, 2)).is_ok());
        assert!(ProjectionMatrix::new(DMatrix::from_element(4, 2, 0.5)).is_err());
    }

    #[test]
    fn config_requires_lambda_above_gamma() {
        let mut c = ModelConfig::default();
        c.validate().unwrap();
        c.gamma = c.lambda;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        c.gamma = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_shape_checks() {
        let c = ModelConfig {
            code_len: 8,
            sparsity: 2,
            groups: 4,
            ..ModelConfig::default()
        };
        assert!(c.validate_for(8, 10).is_err());
        assert!(c.validate_for(9, 3).is_err());
        c.validate_for(9, 4).unwrap();
    }
}
