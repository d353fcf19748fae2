use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{ensure_dim, Error, Result};
use crate::learning::{
    objective, procrustes, ry_step, ry_step_from, update_representations, AssignmentMatrix,
    CodeMatrix, GroupRepresentations, HashMatrix, ObjectiveBreakdown,
};
use crate::ternary::ternarize;
use crate::types::{ModelConfig, ProjectionMatrix, SignatureMatrix};

/// Learned state: projection, enrolled codes, groups and their representations.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub projection: ProjectionMatrix,
    pub codes: HashMatrix,
    pub representations: GroupRepresentations,
    pub assignment: AssignmentMatrix,
    pub config: ModelConfig,
    /// One entry per outer iteration.
    pub objective_trace: Vec<ObjectiveBreakdown>,
    /// Signatures that changed group at each outer iteration.
    pub reassigned_trace: Vec<usize>,
    /// Outer iterations whose W-step hit a rank-deficient `X E^T`.
    pub degenerate_w_steps: usize,
}

impl Model {
    pub fn groups(&self) -> usize {
        self.representations.len()
    }

    pub fn sparsity(&self) -> usize {
        self.config.sparsity
    }

    pub fn validate(&self) -> Result<()> {
        let (d, l) = self.projection.matrix().shape();
        ensure_dim("code length", l, self.codes.code_len())?;
        ensure_dim("representation length", l, self.representations.code_len())?;
        ensure_dim("number of codes", self.codes.len(), self.assignment.len())?;
        ensure_dim("number of groups", self.representations.len(), self.assignment.groups())?;
        ensure_dim("config code length", self.config.code_len, l)?;
        ensure_dim("config sparsity", self.config.sparsity, self.codes.sparsity())?;
        ensure_dim("config groups", self.config.groups, self.representations.len())?;
        self.config.validate_for(d, self.codes.len())
    }
}

/// E-step: column `i` is `T_S(W^T x_i + lambda * r_{g(i)})`.
pub fn e_step(
    w: &ProjectionMatrix,
    x: &SignatureMatrix,
    r: &GroupRepresentations,
    y: &AssignmentMatrix,
    lambda: f64,
    sparsity: usize,
) -> Result<HashMatrix> {
    ensure_dim("signature dimension", w.input_dim(), x.dim())?;
    ensure_dim("representation length", w.code_len(), r.code_len())?;
    ensure_dim("assignment length", x.len(), y.len())?;
    ensure_dim("number of groups", r.len(), y.groups())?;
    if !(lambda >= 0.0) {
        return Err(Error::Config(format!("lambda must be >= 0, got {lambda}")));
    }
    let mut target: DMatrix<f64> = w.matrix().tr_mul(x.matrix());
    for i in 0..x.len() {
        let rep = r.column(y.group_of(i));
        for (k, &s) in rep.symbols().iter().enumerate() {
            target[(k, i)] += lambda * f64::from(s);
        }
    }
    let cols = target
        .column_iter()
        .map(|c| ternarize(c.as_slice(), sparsity))
        .collect::<Result<Vec<_>>>()?;
    CodeMatrix::new(cols)
}

fn initial_codes(w: &ProjectionMatrix, x: &SignatureMatrix, sparsity: usize) -> Result<HashMatrix> {
    let projected = w.matrix().tr_mul(x.matrix());
    let cols = projected
        .column_iter()
        .map(|c| ternarize(c.as_slice(), sparsity))
        .collect::<Result<Vec<_>>>()?;
    CodeMatrix::new(cols)
}

/// How the (R, Y)-step behaves inside the outer loop.
enum Partition {
    Learned,
    Fixed,
}

/// Alternates W-, E- and (R, Y)-steps until the total objective moves by less
/// than `convergence_tol` or `max_outer_iters` is reached. Deterministic for a
/// given `config.seed`.
pub fn train(x: &SignatureMatrix, config: &ModelConfig) -> Result<Model> {
    config.validate_for(x.dim(), x.len())?;
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let w0 = ProjectionMatrix::random(x.dim(), config.code_len, &mut rng)?;
    let e0 = initial_codes(&w0, x, config.sparsity)?;
    let init = ry_step(
        &e0,
        config.lambda,
        config.gamma,
        config.groups,
        config.kmeans_max_iters,
        &mut rng,
    )?;
    run(x, config, w0, e0, init.representations, init.assignment, Partition::Learned)
}

/// Same loop with `Y` fixed to a seeded random balanced partition into groups
/// of `group_size` members; only the representations are refit.
pub fn train_random_assignment_baseline(
    x: &SignatureMatrix,
    config: &ModelConfig,
    group_size: usize,
) -> Result<Model> {
    config.validate_for(x.dim(), x.len())?;
    if group_size == 0 || config.groups * group_size != x.len() {
        return Err(Error::Sizing(format!(
            "{} groups of size {group_size} cannot hold exactly {} signatures",
            config.groups,
            x.len()
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let w0 = ProjectionMatrix::random(x.dim(), config.code_len, &mut rng)?;
    let e0 = initial_codes(&w0, x, config.sparsity)?;
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.shuffle(&mut rng);
    let mut group_of = vec![0; x.len()];
    for (pos, &i) in order.iter().enumerate() {
        group_of[i] = pos / group_size;
    }
    let y = AssignmentMatrix::new(group_of, config.groups)?;
    let r = update_representations(&e0, &y)?;
    run(x, config, w0, e0, r, y, Partition::Fixed)
}

fn run(
    x: &SignatureMatrix,
    config: &ModelConfig,
    mut w: ProjectionMatrix,
    mut e: HashMatrix,
    mut r: GroupRepresentations,
    mut y: AssignmentMatrix,
    partition: Partition,
) -> Result<Model> {
    let mut trace: Vec<ObjectiveBreakdown> = Vec::new();
    let mut reassigned = Vec::new();
    let mut degenerate = 0;
    for _ in 0..config.max_outer_iters {
        let sol = procrustes(x, &e)?;
        if sol.rank < config.code_len {
            degenerate += 1;
        }
        w = sol.projection;
        e = e_step(&w, x, &r, &y, config.lambda, config.sparsity)?;
        match partition {
            Partition::Learned => {
                let out = ry_step_from(&e, config.lambda, config.gamma, &y, config.kmeans_max_iters)?;
                reassigned.push(out.assignment.changes_from(&y));
                r = out.representations;
                y = out.assignment;
            }
            Partition::Fixed => {
                r = update_representations(&e, &y)?;
                reassigned.push(0);
            }
        }
        let obj = objective(x, &w, &e, &r, &y, config.lambda, config.gamma)?;
        if !obj.total.is_finite() {
            return Err(Error::InvalidInput("objective became non-finite".into()));
        }
        let done = trace
            .last()
            .is_some_and(|prev| (prev.total - obj.total).abs() < config.convergence_tol);
        trace.push(obj);
        if done {
            break;
        }
    }
    Ok(Model {
        projection: w,
        codes: e,
        representations: r,
        assignment: y,
        config: config.clone(),
        objective_trace: trace,
        reassigned_trace: reassigned,
        degenerate_w_steps: degenerate,
    })
}
