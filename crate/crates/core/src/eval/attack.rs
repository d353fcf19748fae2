use nalgebra::DVector;

use crate::error::{ensure_dim, Error, Result};
use crate::eval::{encode_query, QuerySet};
use crate::learning::Model;
use crate::ternary::TernaryCode;
use crate::types::{ProjectionMatrix, SignatureMatrix};

/// Mean squared reconstruction errors per coordinate for a server that
/// knows `W` and applies `rec(v) = beta * W v`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecurityReport {
    /// Enrolled signatures rebuilt from their group representation.
    pub mse_security: f64,
    /// Genuine queries rebuilt from their own code.
    pub mse_privacy: f64,
    pub beta: f64,
}

pub fn reconstruct(w: &ProjectionMatrix, code: &TernaryCode, beta: f64) -> Result<DVector<f64>> {
    Ok(w.lift(&code.to_real())? * beta)
}

/// Scalar least-squares gain `sum x_i' W v_i / sum ||W v_i||^2`. The
/// denominator cannot vanish for valid codes; it is guarded anyway.
pub fn fit_beta(w: &ProjectionMatrix, codes: &[TernaryCode], targets: &[DVector<f64>]) -> Result<f64> {
    ensure_dim("reconstruction targets", codes.len(), targets.len())?;
    if codes.is_empty() {
        return Err(Error::InvalidInput("fit_beta needs at least one pair".into()));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (v, x) in codes.iter().zip(targets) {
        let wv = w.lift(&v.to_real())?;
        ensure_dim("reconstruction target", wv.len(), x.len())?;
        num += x.dot(&wv);
        den += wv.norm_squared();
    }
    Ok(if den == 0.0 { 0.0 } else { num / den })
}

/// `beta` is fitted once on the enrolled pairs `(x_i, embed(x_i))` and used
/// for both errors.
pub fn security_report(x: &SignatureMatrix, queries: &QuerySet, model: &Model) -> Result<SecurityReport> {
    ensure_dim("enrolled signatures", model.assignment.len(), x.len())?;
    ensure_dim("signature dimension", model.projection.input_dim(), x.dim())?;
    if queries.genuine.is_empty() {
        return Err(Error::EmptyQuerySet("no genuine queries"));
    }
    let w = &model.projection;
    let enrolled: Vec<DVector<f64>> = x.columns().collect();
    let codes = enrolled
        .iter()
        .map(|xi| encode_query(model, xi))
        .collect::<Result<Vec<_>>>()?;
    let beta = fit_beta(w, &codes, &enrolled)?;
    let d = x.dim() as f64;

    let reps = model
        .representations
        .columns()
        .iter()
        .map(|r| reconstruct(w, r, beta))
        .collect::<Result<Vec<_>>>()?;
    let security: f64 = enrolled
        .iter()
        .enumerate()
        .map(|(i, xi)| (xi - &reps[model.assignment.group_of(i)]).norm_squared())
        .sum();

    let mut privacy = 0.0;
    for (q, _) in &queries.genuine {
        ensure_dim("query dimension", w.input_dim(), q.len())?;
        privacy += (q - reconstruct(w, &encode_query(model, q)?, beta)?).norm_squared();
    }

    Ok(SecurityReport {
        mse_security: security / (d * enrolled.len() as f64),
        mse_privacy: privacy / (d * queries.genuine.len() as f64),
        beta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::tests_support::{exact_queries, signature_for, toy_model};
    use crate::ternary::{embed, ternarize};
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;
    use rand_distr::StandardNormal;

    fn random_w(d: usize, l: usize, seed: u64) -> ProjectionMatrix {
        ProjectionMatrix::random(d, l, &mut ChaCha20Rng::seed_from_u64(seed)).unwrap()
    }

    fn random_code(l: usize, s: usize, rng: &mut ChaCha20Rng) -> TernaryCode {
        let v: Vec<f64> = (0..l).map(|_| rng.gen_range(-1.0..1.0)).collect();
        ternarize(&v, s).unwrap()
    }

    #[test]
    fn zero_gain_gives_zero() {
        let w = random_w(6, 4, 0);
        let code = TernaryCode::from_symbols(vec![1, 0, -1, 0]).unwrap();
        assert_eq!(reconstruct(&w, &code, 0.0).unwrap(), DVector::zeros(6));
        let short = TernaryCode::from_symbols(vec![1, 0, -1]).unwrap();
        assert!(reconstruct(&w, &short, 1.0).is_err());
    }

    #[test]
    fn reconstruct_matches_matrix_product() {
        let w = random_w(9, 5, 1);
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        for _ in 0..50 {
            let code = random_code(5, 2, &mut rng);
            let beta = rng.gen_range(-2.0..2.0);
            let got = reconstruct(&w, &code, beta).unwrap();
            for i in 0..9 {
                let mut expected = 0.0;
                for j in 0..5 {
                    expected += w.matrix()[(i, j)] * f64::from(code.symbols()[j]);
                }
                assert!((got[i] - beta * expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lossless_code_reconstructs() {
        // x = W v with v = c * (ternary with S nonzeros), S = l - 1
        let (d, l, s) = (8, 5, 4);
        let w = random_w(d, l, 3);
        let v = TernaryCode::from_symbols(vec![1, -1, 0, 1, 1]).unwrap();
        let x = w.lift(&(v.to_real() * 0.5)).unwrap();
        let code = embed(&w, &x, s).unwrap();
        assert_eq!(code, v);
        let beta = fit_beta(&w, &[code.clone()], &[x.clone()]).unwrap();
        assert!((beta - 0.5).abs() < 1e-12);
        assert!((x - reconstruct(&w, &code, beta).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn planted_gain_recovered() {
        let w = random_w(10, 6, 4);
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let codes: Vec<_> = (0..20).map(|_| random_code(6, 3, &mut rng)).collect();
        let targets: Vec<_> = codes.iter().map(|c| reconstruct(&w, c, 0.37).unwrap()).collect();
        assert!((fit_beta(&w, &codes, &targets).unwrap() - 0.37).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_targets_give_zero() {
        // W spans the first four axes, targets live on the rest
        let w = ProjectionMatrix::new(DMatrix::identity(7, 4)).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let codes: Vec<_> = (0..5).map(|_| random_code(4, 2, &mut rng)).collect();
        let targets: Vec<_> = (0..5)
            .map(|_| DVector::from_fn(7, |i, _| if i >= 4 { rng.gen_range(-1.0..1.0) } else { 0.0 }))
            .collect();
        assert_eq!(fit_beta(&w, &codes, &targets).unwrap(), 0.0);
    }

    #[test]
    fn matches_golden_section_search() {
        let w = random_w(12, 7, 8);
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let codes: Vec<_> = (0..15).map(|_| random_code(7, 3, &mut rng)).collect();
        let targets: Vec<DVector<f64>> = (0..15)
            .map(|_| DVector::from_fn(12, |_, _| rng.sample::<f64, _>(StandardNormal)))
            .collect();
        let loss = |b: f64| -> f64 {
            codes
                .iter()
                .zip(&targets)
                .map(|(c, x)| (x - reconstruct(&w, c, b).unwrap()).norm_squared())
                .sum()
        };
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (-10.0, 10.0);
        for _ in 0..200 {
            let c = b - phi * (b - a);
            let d = a + phi * (b - a);
            if loss(c) < loss(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let beta = fit_beta(&w, &codes, &targets).unwrap();
        assert!((beta - (a + b) / 2.0).abs() < 1e-6);
    }

    #[test]
    fn exact_queries_have_zero_privacy_error() {
        let model = toy_model();
        let queries = exact_queries(&model);
        let enrolled: Vec<_> = model.codes.columns().iter().map(signature_for).collect();
        let x = SignatureMatrix::from_columns(&enrolled).unwrap();
        let rep = security_report(&x, &queries, &model).unwrap();
        assert!((rep.beta - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(rep.mse_privacy < 1e-24);
        assert!(rep.mse_security < 1e-24);
    }

    #[test]
    fn rotation_invariant() {
        use crate::data::{generate, SyntheticSpec};
        use crate::learning::train;
        use crate::types::ModelConfig;
        let data = generate(&SyntheticSpec {
            num_identities: 20,
            dim: 12,
            seed: 3,
            ..SyntheticSpec::default()
        })
        .unwrap();
        let config = ModelConfig {
            code_len: 6,
            sparsity: 2,
            groups: 5,
            max_outer_iters: 4,
            ..ModelConfig::default()
        };
        let model = train(&data.enrolled, &config).unwrap();
        let queries = QuerySet::from_dataset(&data, &model).unwrap();
        let base = security_report(&data.enrolled, &queries, &model).unwrap();

        let q = random_w(12, 11, 10);
        // complete an 11-column orthonormal set to a full rotation via QR
        let full = DMatrix::from_fn(12, 12, |i, j| if j < 11 { q.matrix()[(i, j)] } else { (i as f64).sin() + 0.1 });
        let rot = full.qr().q();
        let mut rotated = model.clone();
        rotated.projection = ProjectionMatrix::new(&rot * model.projection.matrix()).unwrap();
        let x = SignatureMatrix::new(&rot * data.enrolled.matrix()).unwrap();
        let rq = QuerySet {
            genuine: queries.genuine.iter().map(|(v, g)| (&rot * v, *g)).collect(),
            impostors: queries.impostors.iter().map(|v| &rot * v).collect(),
        };
        let turned = security_report(&x, &rq, &rotated).unwrap();
        assert!((base.mse_security - turned.mse_security).abs() < 1e-10);
        assert!((base.mse_privacy - turned.mse_privacy).abs() < 1e-10);
        assert!((base.beta - turned.beta).abs() < 1e-10);
    }
}
