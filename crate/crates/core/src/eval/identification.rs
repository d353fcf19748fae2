use crate::error::Result;
use crate::eval::{encode_query, QuerySet, RocCurve};
use crate::learning::Model;
use crate::ternary::{squared_distance, TernaryCode};

/// Open-set identification outcome at one threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentificationReport {
    pub tau: i64,
    /// Fraction of impostors accepted by the first step.
    pub pfp: f64,
    /// Fraction of genuine queries rejected by the first step.
    pub pfn: f64,
    /// Wrong-group rate among accepted genuine queries.
    pub p_epsilon: f64,
    pub dir: f64,
    pub accepted_genuine: usize,
    /// Set when no genuine query was accepted; `p_epsilon` is then 0.
    pub no_accepted_genuine: bool,
}

/// Closest representation and its distance; ties go to the lowest index.
pub fn nearest_group(model: &Model, p: &TernaryCode) -> Result<(usize, i64)> {
    let mut best = (0, i64::MAX);
    for (g, r) in model.representations.columns().iter().enumerate() {
        let d = squared_distance(p, r)?;
        if d < best.1 {
            best = (g, d);
        }
    }
    Ok(best)
}

/// `Some(argmin_j ||p - r_j||^2)` if that minimum is at most `tau`.
pub fn identify(model: &Model, p: &TernaryCode, tau: i64) -> Result<Option<usize>> {
    let (g, d) = nearest_group(model, p)?;
    Ok((d <= tau).then_some(g))
}

/// Minimum distances with their argmin for genuine queries, and minimum
/// distances for impostors.
pub fn identification_scores(
    model: &Model,
    queries: &QuerySet,
) -> Result<(Vec<(i64, usize)>, Vec<i64>)> {
    queries.check(model)?;
    let genuine = queries
        .genuine
        .iter()
        .map(|(q, _)| nearest_group(model, &encode_query(model, q)?).map(|(g, d)| (d, g)))
        .collect::<Result<Vec<_>>>()?;
    let impostor = queries
        .impostors
        .iter()
        .map(|q| nearest_group(model, &encode_query(model, q)?).map(|(_, d)| d))
        .collect::<Result<Vec<_>>>()?;
    Ok((genuine, impostor))
}

fn report(
    genuine: &[(i64, usize)],
    truth: impl Iterator<Item = usize>,
    impostor: &[i64],
    tau: i64,
) -> IdentificationReport {
    let mut accepted = 0;
    let mut wrong = 0;
    for (&(d, g), t) in genuine.iter().zip(truth) {
        if d <= tau {
            accepted += 1;
            if g != t {
                wrong += 1;
            }
        }
    }
    let pfn = (genuine.len() - accepted) as f64 / genuine.len() as f64;
    let pfp = impostor.iter().filter(|&&d| d <= tau).count() as f64 / impostor.len() as f64;
    let p_epsilon = if accepted == 0 {
        0.0
    } else {
        wrong as f64 / accepted as f64
    };
    IdentificationReport {
        tau,
        pfp,
        pfn,
        p_epsilon,
        dir: (1.0 - p_epsilon) * (1.0 - pfn),
        accepted_genuine: accepted,
        no_accepted_genuine: accepted == 0,
    }
}

/// Report at a fixed threshold.
pub fn identification_report_at(
    model: &Model,
    queries: &QuerySet,
    tau: i64,
) -> Result<IdentificationReport> {
    let (genuine, impostor) = identification_scores(model, queries)?;
    Ok(report(&genuine, queries.genuine.iter().map(|(_, g)| *g), &impostor, tau))
}

/// Report at the largest threshold whose impostor acceptance rate on the
/// minimum distance does not exceed `target_pfp`.
pub fn identification_report(
    model: &Model,
    queries: &QuerySet,
    target_pfp: f64,
) -> Result<IdentificationReport> {
    let (genuine, impostor) = identification_scores(model, queries)?;
    let mins: Vec<i64> = genuine.iter().map(|&(d, _)| d).collect();
    let roc = RocCurve::from_scores(&mins, &impostor, 4 * model.sparsity() as i64)?;
    let tau = roc.operating_point(target_pfp).tau;
    Ok(report(&genuine, queries.genuine.iter().map(|(_, g)| *g), &impostor, tau))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate, SyntheticSpec};
    use crate::eval::tests_support::{exact_queries, toy_model, toy_model_groups};
    use crate::learning::train;
    use crate::types::ModelConfig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn exact_representation_is_identified() {
        let model = toy_model();
        let r2 = model.representations.column(2).clone();
        for tau in 0..=8 {
            assert_eq!(identify(&model, &r2, tau).unwrap(), Some(2));
        }
        assert_eq!(identify(&model, &r2, -1).unwrap(), None);
    }

    #[test]
    fn matches_exhaustive_scan() {
        let model = toy_model();
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        for _ in 0..300 {
            let v: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let p = crate::ternary::ternarize(&v, 2).unwrap();
            let tau = rng.gen_range(-1..=8);
            let dists: Vec<i64> = model
                .representations
                .columns()
                .iter()
                .map(|r| p.symbols().iter().zip(r.symbols()).map(|(&a, &b)| i64::from(a - b).pow(2)).sum())
                .collect();
            let min = *dists.iter().min().unwrap();
            let expected = (min <= tau).then(|| dists.iter().position(|&d| d == min).unwrap());
            let got = identify(&model, &p, tau).unwrap();
            assert_eq!(got, expected);
            if let Some(g) = got {
                assert!(dists.iter().all(|&d| dists[g] <= d));
            }
        }
    }

    #[test]
    fn exact_queries_are_perfect() {
        let model = toy_model();
        let rep = identification_report(&model, &exact_queries(&model), 0.05).unwrap();
        assert_eq!((rep.pfn, rep.p_epsilon, rep.dir), (0.0, 0.0, 1.0));
        assert!(!rep.no_accepted_genuine);
    }

    #[test]
    fn single_group_never_misidentifies() {
        let model = toy_model_groups(1);
        let queries = exact_queries(&toy_model());
        let mut q = queries.clone();
        for (_, g) in &mut q.genuine {
            *g = 0;
        }
        for tau in -1..=8 {
            let rep = identification_report_at(&model, &q, tau).unwrap();
            assert_eq!(rep.p_epsilon, 0.0);
        }
    }

    #[test]
    fn nothing_accepted_is_flagged() {
        let model = toy_model();
        let rep = identification_report_at(&model, &exact_queries(&model), -1).unwrap();
        assert!(rep.no_accepted_genuine);
        assert_eq!((rep.pfn, rep.p_epsilon, rep.dir), (1.0, 0.0, 0.0));
    }

    #[test]
    fn synthetic_matches_recount() {
        let data = generate(&SyntheticSpec {
            num_identities: 24,
            dim: 16,
            noise_sigma: 0.3,
            seed: 5,
            ..SyntheticSpec::default()
        })
        .unwrap();
        let config = ModelConfig {
            code_len: 8,
            sparsity: 3,
            groups: 6,
            max_outer_iters: 5,
            ..ModelConfig::default()
        };
        let model = train(&data.enrolled, &config).unwrap();
        let queries = QuerySet::from_dataset(&data, &model).unwrap();
        let rep = identification_report(&model, &queries, 0.05).unwrap();
        // recount from scratch
        let tau = rep.tau;
        let (mut acc, mut wrong) = (0, 0);
        for (q, g) in &queries.genuine {
            let p = encode_query(&model, q).unwrap();
            if let Some(h) = identify(&model, &p, tau).unwrap() {
                acc += 1;
                wrong += usize::from(h != *g);
            }
        }
        let imp = queries
            .impostors
            .iter()
            .filter(|q| identify(&model, &encode_query(&model, q).unwrap(), tau).unwrap().is_some())
            .count();
        assert_eq!(rep.accepted_genuine, acc);
        assert_eq!(rep.pfn, 1.0 - acc as f64 / queries.genuine.len() as f64);
        assert_eq!(rep.pfp, imp as f64 / queries.impostors.len() as f64);
        assert!(rep.pfp <= 0.05);
        let pe = if acc == 0 { 0.0 } else { wrong as f64 / acc as f64 };
        assert_eq!(rep.p_epsilon, pe);
        assert!((rep.dir - (1.0 - rep.p_epsilon) * (1.0 - rep.pfn)).abs() < 1e-12);
    }
}
