//! Joint learning of the projection, the enrolled hash codes, the group
//! assignment and the group representations by alternating minimization of
//!
//! ```text
//! ||E - W^T X||_F^2 + lambda * Tr(S_w) - gamma * Tr(S_b)
//! ```
//!
//! with `Tr(S_w) = ||E - R Y||_F^2` and `Tr(S_b) = ||R Y||_F^2`. Each outer
//! iteration runs a W-step ([`w_step`]), an E-step ([`e_step`]) and an
//! (R, Y)-step ([`ry_step`]).

pub mod io;
mod kmeans;
mod objective;
mod procrustes;
mod train;

pub use kmeans::{ry_step, KMEANS_RESTARTS, ry_step_from, update_representations, RyOutcome};
pub use objective::{embedding_cost, objective, scatter_traces, ObjectiveBreakdown};
pub use procrustes::{procrustes, w_step, ProcrustesSolution};
pub use train::{e_step, train, train_random_assignment_baseline, Model};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::ternary::TernaryCode;

/// Column-wise collection of ternary codes sharing one length and sparsity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeMatrix {
    columns: Vec<TernaryCode>,
}

/// The enrolled hash codes `E` (`l x N`).
pub type HashMatrix = CodeMatrix;
/// The group representations `R` (`l x M`).
pub type GroupRepresentations = CodeMatrix;

impl CodeMatrix {
    pub fn new(columns: Vec<TernaryCode>) -> Result<Self> {
        let Some(first) = columns.first() else {
            return Err(Error::InvalidInput("code matrix needs at least one column".into()));
        };
        let (len, s) = (first.len(), first.sparsity());
        for c in &columns {
            if c.len() != len || c.sparsity() != s {
                return Err(Error::InvalidInput(format!(
                    "inconsistent code shape: ({}, S={}) vs ({len}, S={s})",
                    c.len(),
                    c.sparsity()
                )));
            }
        }
        Ok(Self { columns })
    }

    pub fn code_len(&self) -> usize {
        self.columns[0].len()
    }

    pub fn sparsity(&self) -> usize {
        self.columns[0].sparsity()
    }

    /// Number of columns.
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn column(&self, i: usize) -> &TernaryCode {
        &self.columns[i]
    }

    pub fn columns(&self) -> &[TernaryCode] {
        &self.columns
    }

    pub fn to_real(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.code_len(), self.len(), |r, c| {
            f64::from(self.columns[c].symbols()[r])
        })
    }
}

/// Hard assignment of `N` signatures to `M` groups (the one-hot matrix `Y`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssignmentMatrix {
    group_of: Vec<usize>,
    groups: usize,
}

impl AssignmentMatrix {
    pub fn new(group_of: Vec<usize>, groups: usize) -> Result<Self> {
        if groups == 0 {
            return Err(Error::InvalidInput("assignment needs at least one group".into()));
        }
        if let Some(&bad) = group_of.iter().find(|&&g| g >= groups) {
            return Err(Error::GroupOutOfRange { index: bad, groups });
        }
        Ok(Self { group_of, groups })
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    /// Number of assigned signatures `N`.
    pub fn len(&self) -> usize {
        self.group_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.group_of.is_empty()
    }

    pub fn group_of(&self, i: usize) -> usize {
        self.group_of[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.group_of
    }

    pub fn members(&self, g: usize) -> impl Iterator<Item = usize> + '_ {
        self.group_of
            .iter()
            .enumerate()
            .filter(move |(_, &h)| h == g)
            .map(|(i, _)| i)
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.groups];
        for &g in &self.group_of {
            sizes[g] += 1;
        }
        sizes
    }

    /// Dense `M x N` indicator matrix.
    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.groups, self.len(), |g, i| {
            if self.group_of[i] == g {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Number of positions whose group differs from `other`.
    pub fn changes_from(&self, other: &AssignmentMatrix) -> usize {
        self.group_of
            .iter()
            .zip(&other.group_of)
            .filter(|(a, b)| a != b)
            .count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assignment_validation() {
        assert!(matches!(
            AssignmentMatrix::new(vec![0, 2], 2),
            Err(Error::GroupOutOfRange { index: 2, groups: 2 })
        ));
        let y = AssignmentMatrix::new(vec![1, 0, 1], 2).unwrap();
        assert_eq!(y.sizes(), vec![1, 2]);
        assert_eq!(y.members(1).collect::<Vec<_>>(), vec![0, 2]);
        let dense = y.to_dense();
        assert_eq!(dense.row_sum().as_slice(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn code_matrix_shape_checks() {
        let a = TernaryCode::from_symbols(vec![1, 0, 0]).unwrap();
        let b = TernaryCode::from_symbols(vec![1, -1, 0]).unwrap();
        assert!(CodeMatrix::new(vec![a.clone(), b]).is_err());
        assert!(CodeMatrix::new(vec![]).is_err());
        let m = CodeMatrix::new(vec![a.clone(), a]).unwrap();
        assert_eq!(m.to_real().shape(), (3, 2));
    }
}
