use crate::error::{ensure_dim, Error, Result};
use crate::learning::{AssignmentMatrix, GroupRepresentations, HashMatrix};
use crate::ternary::squared_distance;
use crate::types::{ProjectionMatrix, SignatureMatrix};

/// Per-term value of the training objective.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectiveBreakdown {
    /// `||E - W^T X||_F^2`
    pub embedding_cost: f64,
    /// `Tr(S_w)`
    pub within_trace: f64,
    /// `Tr(S_b)`
    pub between_trace: f64,
    /// `embedding_cost + lambda * within_trace - gamma * between_trace`
    pub total: f64,
}

impl ObjectiveBreakdown {
    pub fn from_parts(embedding_cost: f64, within: f64, between: f64, lambda: f64, gamma: f64) -> Self {
        Self {
            embedding_cost,
            within_trace: within,
            between_trace: between,
            total: embedding_cost + lambda * within - gamma * between,
        }
    }
}

/// Quantization loss `sum_i ||e_i - W^T x_i||^2`.
pub fn embedding_cost(x: &SignatureMatrix, w: &ProjectionMatrix, e: &HashMatrix) -> Result<f64> {
    ensure_dim("signature dimension", w.input_dim(), x.dim())?;
    ensure_dim("code length", w.code_len(), e.code_len())?;
    ensure_dim("number of codes", x.len(), e.len())?;
    let projected = w.matrix().tr_mul(x.matrix());
    Ok((e.to_real() - projected).norm_squared())
}

/// `(Tr S_w, Tr S_b)` through `||E - RY||_F^2` and `||RY||_F^2`.
pub fn scatter_traces(
    e: &HashMatrix,
    r: &GroupRepresentations,
    y: &AssignmentMatrix,
) -> Result<(f64, f64)> {
    ensure_dim("code length", e.code_len(), r.code_len())?;
    ensure_dim("number of codes", e.len(), y.len())?;
    ensure_dim("number of groups", r.len(), y.groups())?;
    let mut within = 0i64;
    let mut between = 0i64;
    for (i, code) in e.columns().iter().enumerate() {
        let rep = r.column(y.group_of(i));
        within += squared_distance(code, rep)?;
        between += rep.sparsity() as i64;
    }
    Ok((within as f64, between as f64))
}

/// Full objective. Requires `lambda > gamma > 0`.
pub fn objective(
    x: &SignatureMatrix,
    w: &ProjectionMatrix,
    e: &HashMatrix,
    r: &GroupRepresentations,
    y: &AssignmentMatrix,
    lambda: f64,
    gamma: f64,
) -> Result<ObjectiveBreakdown> {
    if !(gamma > 0.0 && lambda > gamma) {
        return Err(Error::Config(format!(
            "need lambda > gamma > 0, got lambda={lambda} gamma={gamma}"
        )));
    }
    let cost = embedding_cost(x, w, e)?;
    let (within, between) = scatter_traces(e, r, y)?;
    Ok(ObjectiveBreakdown::from_parts(cost, within, between, lambda, gamma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ternary::{ternarize, TernaryCode};
    use crate::learning::CodeMatrix;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn embedding_cost_hand_value() {
        // x chosen so that W^T x = [0.5, 0.5]
        let w = ProjectionMatrix::new(DMatrix::identity(3, 2)).unwrap();
        let x = SignatureMatrix::new(DMatrix::from_column_slice(
            3,
            1,
            &[0.5, 0.5, 0.5f64.sqrt()],
        ))
        .unwrap();
        let e = CodeMatrix::new(vec![TernaryCode::from_symbols(vec![1, 0]).unwrap()]).unwrap();
        assert!((embedding_cost(&x, &w, &e).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn embedding_cost_zero_on_exact_fit() {
        let w = ProjectionMatrix::new(DMatrix::identity(4, 3)).unwrap();
        let cols: Vec<DVector<f64>> = vec![
            DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]),
            DVector::from_vec(vec![0.0, -1.0, 0.0, 0.0]),
        ];
        let x = SignatureMatrix::from_columns(&cols).unwrap();
        let e = CodeMatrix::new(vec![
            TernaryCode::from_symbols(vec![1, 0, 0]).unwrap(),
            TernaryCode::from_symbols(vec![0, -1, 0]).unwrap(),
        ])
        .unwrap();
        assert_eq!(embedding_cost(&x, &w, &e).unwrap(), 0.0);
    }

    #[test]
    fn one_group_between_trace_is_n_times_s() {
        let r = ternarize(&[1.0, -2.0, 0.0, 0.5, 3.0], 3).unwrap();
        let e = CodeMatrix::new(vec![r.clone(); 7]).unwrap();
        let reps = CodeMatrix::new(vec![r]).unwrap();
        let y = AssignmentMatrix::new(vec![0; 7], 1).unwrap();
        let (within, between) = scatter_traces(&e, &reps, &y).unwrap();
        assert_eq!(within, 0.0);
        assert_eq!(between, 21.0);
    }

    #[test]
    fn objective_guards_lambda_gamma() {
        let w = ProjectionMatrix::new(DMatrix::identity(3, 2)).unwrap();
        let x = SignatureMatrix::new(DMatrix::identity(3, 1)).unwrap();
        let c = TernaryCode::from_symbols(vec![1, 0]).unwrap();
        let e = CodeMatrix::new(vec![c.clone()]).unwrap();
        let y = AssignmentMatrix::new(vec![0], 1).unwrap();
        assert!(objective(&x, &w, &e, &e, &y, 1.0, 1.0).is_err());
        // perfect fit: total = -gamma * ||RY||^2
        let b = objective(&x, &w, &e, &e, &y, 2.0, 0.5).unwrap();
        assert_eq!(b.embedding_cost, 0.0);
        assert_eq!(b.within_trace, 0.0);
        assert_eq!(b.total, -0.5);
    }
}
