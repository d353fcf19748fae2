//! Sparse ternary codes and the sparsifying transform `x -> T_S(W^T x)`.

use std::cmp::Ordering;

use nalgebra::DVector;

use crate::error::{ensure_dim, Error, Result};
use crate::types::ProjectionMatrix;

/// A code over `{-1, 0, +1}` with exactly `S` nonzero symbols, `S < l`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TernaryCode {
    symbols: Vec<i8>,
    sparsity: usize,
}

impl TernaryCode {
    /// Validates alphabet, sparsity and the exact nonzero count.
    pub fn new(symbols: Vec<i8>, sparsity: usize) -> Result<Self> {
        let len = symbols.len();
        if sparsity == 0 || sparsity >= len {
            return Err(Error::InvalidSparsity { sparsity, len });
        }
        if let Some(bad) = symbols.iter().find(|s| !(-1..=1).contains(*s)) {
            return Err(Error::InvalidInput(format!("symbol {bad} not in {{-1,0,+1}}")));
        }
        let nnz = symbols.iter().filter(|&&s| s != 0).count();
        if nnz != sparsity {
            return Err(Error::InvalidInput(format!(
                "code has {nnz} nonzeros, expected exactly {sparsity}"
            )));
        }
        Ok(Self { symbols, sparsity })
    }

    /// Like [`TernaryCode::new`] with `S` taken from the nonzero count.
    pub fn from_symbols(symbols: Vec<i8>) -> Result<Self> {
        let nnz = symbols.iter().filter(|&&s| s != 0).count();
        Self::new(symbols, nnz)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn sparsity(&self) -> usize {
        self.sparsity
    }

    pub fn symbols(&self) -> &[i8] {
        &self.symbols
    }

    /// Positions of the nonzero symbols, ascending.
    pub fn support(&self) -> impl Iterator<Item = (usize, i8)> + '_ {
        self.symbols
            .iter()
            .enumerate()
            .filter(|(_, &s)| s != 0)
            .map(|(i, &s)| (i, s))
    }

    pub fn to_real(&self) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.symbols.iter().map(|&s| f64::from(s)))
    }

    /// Code with every symbol negated.
    pub fn negated(&self) -> Self {
        Self {
            symbols: self.symbols.iter().map(|s| -s).collect(),
            sparsity: self.sparsity,
        }
    }
}

/// `T_S`: keeps the `S` largest-magnitude entries as their signs, zeroes the rest.
///
/// Magnitude ties go to the lowest index and `sign(0) = +1`, so the result
/// always has exactly `S` nonzeros.
pub fn ternarize(v: &[f64], sparsity: usize) -> Result<TernaryCode> {
    let len = v.len();
    if sparsity == 0 || sparsity >= len {
        return Err(Error::InvalidSparsity { sparsity, len });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("non-finite value in ternarize".into()));
    }
    let mut order: Vec<usize> = (0..len).collect();
    let by_magnitude = |&a: &usize, &b: &usize| -> Ordering {
        v[b].abs()
            .partial_cmp(&v[a].abs())
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    };
    order.select_nth_unstable_by(sparsity - 1, by_magnitude);
    let mut symbols = vec![0i8; len];
    for &i in &order[..sparsity] {
        symbols[i] = if v[i] < 0.0 { -1 } else { 1 };
    }
    Ok(TernaryCode { symbols, sparsity })
}

/// Sparsifying transform coding `T_S(W^T x)`.
pub fn embed(w: &ProjectionMatrix, x: &DVector<f64>, sparsity: usize) -> Result<TernaryCode> {
    let projected = w.project(x)?;
    ternarize(projected.as_slice(), sparsity)
}

/// Inner product `p^T r`.
pub fn correlation(p: &TernaryCode, r: &TernaryCode) -> Result<i64> {
    ensure_dim("code length", p.len(), r.len())?;
    Ok(p.symbols
        .iter()
        .zip(&r.symbols)
        .map(|(&a, &b)| i64::from(a) * i64::from(b))
        .sum())
}

/// `||p - r||^2 = ||p||_0 + ||r||_0 - 2 p^T r`; for two exactly-S codes this
/// is `2S - 2 p^T r` and lies in `[0, 4S]`.
pub fn squared_distance(p: &TernaryCode, r: &TernaryCode) -> Result<i64> {
    let corr = correlation(p, r)?;
    Ok(p.sparsity as i64 + r.sparsity as i64 - 2 * corr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    /// Fully sorts by (|v| desc, index asc) and thresholds.
    fn sort_oracle(v: &[f64], s: usize) -> Vec<i8> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| {
            v[b].abs()
                .partial_cmp(&v[a].abs())
                .unwrap()
                .then(a.cmp(&b))
        });
        let mut out = vec![0i8; v.len()];
        for &i in idx.iter().take(s) {
            out[i] = if v[i] >= 0.0 { 1 } else { -1 };
        }
        out
    }

    #[test]
    fn ternarize_keeps_largest() {
        let c = ternarize(&[0.5, -2.0, 0.1, 3.0], 2).unwrap();
        assert_eq!(c.symbols(), &[0, -1, 0, 1]);
    }

    #[test]
    fn ternarize_zero_vector_breaks_ties_low_index() {
        let c = ternarize(&[0.0; 4], 1).unwrap();
        assert_eq!(c.symbols(), &[1, 0, 0, 0]);
    }

    #[test]
    fn ternarize_errors() {
        assert!(matches!(
            ternarize(&[1.0, 2.0], 2),
            Err(Error::InvalidSparsity { .. })
        ));
        assert!(matches!(
            ternarize(&[1.0, f64::INFINITY, 0.0], 1),
            Err(Error::InvalidInput(_))
        ));
        assert!(ternarize(&[1.0, 2.0], 0).is_err());
    }

    #[test]
    fn ternarize_matches_sort_oracle() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for _ in 0..200 {
            let v: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
            assert_eq!(ternarize(&v, 16).unwrap().symbols(), sort_oracle(&v, 16).as_slice());
        }
        // heavy ties
        for _ in 0..200 {
            let v: Vec<f64> = (0..64).map(|_| rng.gen_range(-2i32..=2) as f64).collect();
            assert_eq!(ternarize(&v, 16).unwrap().symbols(), sort_oracle(&v, 16).as_slice());
        }
    }

    #[test]
    fn embed_identity_columns() {
        let mut w = DMatrix::zeros(4, 2);
        w[(0, 0)] = 1.0;
        w[(1, 1)] = 1.0;
        let w = ProjectionMatrix::new(w).unwrap();
        let x = DVector::from_vec(vec![3.0, -1.0, 9.0, 9.0]);
        assert_eq!(embed(&w, &x, 1).unwrap().symbols(), &[1, 0]);
        assert!(embed(&w, &DVector::zeros(3), 1).is_err());
    }

    #[test]
    fn embed_is_ternarize_of_projection() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for _ in 0..50 {
            let w = ProjectionMatrix::random(20, 12, &mut rng).unwrap();
            let x = DVector::from_fn(20, |_, _| rng.gen_range(-1.0..1.0));
            let explicit: Vec<f64> = (0..12)
                .map(|j| (0..20).map(|i| w.matrix()[(i, j)] * x[i]).sum())
                .collect();
            let code = embed(&w, &x, 5).unwrap();
            assert_eq!(code.symbols(), sort_oracle(&explicit, 5).as_slice());
            assert_eq!(code.sparsity(), 5);
        }
    }

    #[test]
    fn correlation_and_distance_edges() {
        let p = TernaryCode::from_symbols(vec![1, -1, 0, 0, 1, 0]).unwrap();
        assert_eq!(correlation(&p, &p).unwrap(), 3);
        assert_eq!(squared_distance(&p, &p).unwrap(), 0);
        assert_eq!(squared_distance(&p, &p.negated()).unwrap(), 12);
        let q = TernaryCode::from_symbols(vec![0, 0, 1, -1, 0, 1]).unwrap();
        assert_eq!(correlation(&p, &q).unwrap(), 0);
        assert_eq!(squared_distance(&p, &q).unwrap(), 6);
        let short = TernaryCode::from_symbols(vec![1, 0]).unwrap();
        assert!(correlation(&p, &short).is_err());
        assert!(squared_distance(&p, &short).is_err());
    }

    #[test]
    fn code_validation() {
        assert!(TernaryCode::new(vec![1, 0, 0], 2).is_err());
        assert!(TernaryCode::new(vec![2, 0, 0], 1).is_err());
        assert!(TernaryCode::new(vec![1, 1], 2).is_err());
        assert!(TernaryCode::new(vec![1, 0, -1], 2).is_ok());
    }

    fn code_strategy(len: usize, s: usize) -> impl Strategy<Value = TernaryCode> {
        prop::collection::vec(-1.0f64..1.0, len).prop_map(move |v| ternarize(&v, s).unwrap())
    }

    proptest! {
        #[test]
        fn scaling_invariance(v in prop::collection::vec(-10.0f64..10.0, 12), c in 0.01f64..100.0) {
            let scaled: Vec<f64> = v.iter().map(|x| c * x).collect();
            prop_assert_eq!(ternarize(&v, 4).unwrap(), ternarize(&scaled, 4).unwrap());
        }

        #[test]
        fn idempotent_on_own_pattern(v in prop::collection::vec(-10.0f64..10.0, 12), c in 0.01f64..100.0) {
            let t = ternarize(&v, 4).unwrap();
            let lifted: Vec<f64> = t.symbols().iter().map(|&s| c * f64::from(s)).collect();
            prop_assert_eq!(ternarize(&lifted, 4).unwrap(), t);
        }

        #[test]
        fn distance_identity(p in code_strategy(16, 5), r in code_strategy(16, 5)) {
            let naive: i64 = p.symbols().iter().zip(r.symbols())
                .map(|(&a, &b)| i64::from(a - b).pow(2)).sum();
            let corr = correlation(&p, &r).unwrap();
            prop_assert_eq!(squared_distance(&p, &r).unwrap(), naive);
            prop_assert_eq!(naive, 10 - 2 * corr);
            prop_assert!((-5..=5).contains(&corr));
        }
    }
}
