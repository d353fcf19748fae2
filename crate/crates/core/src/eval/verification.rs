use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::eval::{encode_query, QuerySet, RocCurve};
use crate::learning::Model;
use crate::ternary::{squared_distance, TernaryCode};

/// Group verification: accept the claim "`p` belongs to group `g`" iff
/// `||p - r_g||^2 <= tau`.
pub fn verify(model: &Model, p: &TernaryCode, group: usize, tau: i64) -> Result<bool> {
    let groups = model.groups();
    if group >= groups {
        return Err(Error::GroupOutOfRange {
            index: group,
            groups,
        });
    }
    Ok(squared_distance(p, model.representations.column(group))? <= tau)
}

/// Distances used by the verification sweep: genuine queries against their
/// true group, each impostor against one uniformly drawn claimed group.
pub fn verification_scores(
    model: &Model,
    queries: &QuerySet,
    seed: u64,
) -> Result<(Vec<i64>, Vec<i64>)> {
    queries.check(model)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let reps = &model.representations;
    let genuine = queries
        .genuine
        .iter()
        .map(|(q, g)| squared_distance(&encode_query(model, q)?, reps.column(*g)))
        .collect::<Result<Vec<_>>>()?;
    let impostor = queries
        .impostors
        .iter()
        .map(|q| {
            let claim = rng.gen_range(0..model.groups());
            squared_distance(&encode_query(model, q)?, reps.column(claim))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((genuine, impostor))
}

pub fn verification_sweep(model: &Model, queries: &QuerySet, seed: u64) -> Result<RocCurve> {
    let (genuine, impostor) = verification_scores(model, queries, seed)?;
    RocCurve::from_scores(&genuine, &impostor, 4 * model.sparsity() as i64)
}
