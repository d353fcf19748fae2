//! (R, Y)-step. With `W` and `E` fixed the partition term reduces to
//! `|| c E - R Y ||_F^2` with `c = lambda / (lambda - gamma)`, which is solved
//! by k-means over the scaled codes; each group representation is then the
//! ternarized centroid.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::learning::{AssignmentMatrix, CodeMatrix, GroupRepresentations, HashMatrix};
use crate::ternary::ternarize;

/// Outcome of one (R, Y)-step.
#[derive(Clone, Debug)]
pub struct RyOutcome {
    pub representations: GroupRepresentations,
    pub assignment: AssignmentMatrix,
    /// Real-valued centroids of the scaled codes, `l x M`.
    pub centroids: DMatrix<f64>,
    /// k-means objective `sum_i ||c e_i - mu_{g(i)}||^2` recorded after every
    /// assignment update and every centroid update.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    /// True when the assignment reached a fixed point before the cap.
    pub converged: bool,
}

fn check_weights(lambda: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && lambda > gamma && lambda.is_finite()) {
        return Err(Error::Config(format!(
            "need lambda > gamma > 0, got lambda={lambda} gamma={gamma}"
        )));
    }
    Ok(lambda / (lambda - gamma))
}

fn scaled_points(e: &HashMatrix, scale: f64) -> Vec<DVector<f64>> {
    e.columns().iter().map(|c| c.to_real() * scale).collect()
}

/// Independent k-means++ seedings tried by [`ry_step`]; the run with the
/// lowest final objective wins.
pub const KMEANS_RESTARTS: usize = 10;

/// k-means with k-means++ seeding on `c * e_i`, best of [`KMEANS_RESTARTS`].
pub fn ry_step<R: Rng + ?Sized>(
    e: &HashMatrix,
    lambda: f64,
    gamma: f64,
    groups: usize,
    max_iters: usize,
    rng: &mut R,
) -> Result<RyOutcome> {
    let scale = check_weights(lambda, gamma)?;
    if groups == 0 || groups > e.len() {
        return Err(Error::Config(format!(
            "need 1 <= M <= N, got M={groups} N={}",
            e.len()
        )));
    }
    let points = scaled_points(e, scale);
    let mut best: Option<RyOutcome> = None;
    for _ in 0..KMEANS_RESTARTS {
        let seeds = kmeans_plus_plus(&points, groups, rng);
        let assign = assign_nearest(&points, &seeds);
        let mut trace = vec![kmeans_objective(&points, &assign, &seeds)];
        let out = run_lloyd(e, &points, assign, groups, max_iters, &mut trace)?;
        if best.as_ref().is_none_or(|b| final_objective(&out) < final_objective(b)) {
            best = Some(out);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn final_objective(out: &RyOutcome) -> f64 {
    *out.objective_trace.last().expect("trace is never empty")
}

/// k-means warm-started from an existing assignment.
pub fn ry_step_from(
    e: &HashMatrix,
    lambda: f64,
    gamma: f64,
    init: &AssignmentMatrix,
    max_iters: usize,
) -> Result<RyOutcome> {
    let scale = check_weights(lambda, gamma)?;
    crate::error::ensure_dim("assignment length", e.len(), init.len())?;
    if init.groups() > e.len() {
        return Err(Error::Config(format!(
            "need M <= N, got M={} N={}",
            init.groups(),
            e.len()
        )));
    }
    let points = scaled_points(e, scale);
    let mut trace = Vec::new();
    run_lloyd(
        e,
        &points,
        init.as_slice().to_vec(),
        init.groups(),
        max_iters,
        &mut trace,
    )
}

/// Representations for a fixed assignment: `r_g = T_S(mean of members)`.
/// Every group must be non-empty.
pub fn update_representations(
    e: &HashMatrix,
    y: &AssignmentMatrix,
) -> Result<GroupRepresentations> {
    crate::error::ensure_dim("assignment length", e.len(), y.len())?;
    let l = e.code_len();
    let mut reps = Vec::with_capacity(y.groups());
    for g in 0..y.groups() {
        let mut sum = DVector::<f64>::zeros(l);
        let mut count = 0usize;
        for i in y.members(g) {
            sum += e.column(i).to_real();
            count += 1;
        }
        if count == 0 {
            return Err(Error::Sizing(format!("group {g} has no members")));
        }
        reps.push(ternarize((sum / count as f64).as_slice(), e.sparsity())?);
    }
    CodeMatrix::new(reps)
}

fn run_lloyd(
    e: &HashMatrix,
    points: &[DVector<f64>],
    mut assign: Vec<usize>,
    groups: usize,
    max_iters: usize,
    trace: &mut Vec<f64>,
) -> Result<RyOutcome> {
    let mut centroids = update_centroids(points, &mut assign, groups);
    trace.push(kmeans_objective(points, &assign, &centroids));
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        let next = assign_nearest(points, &centroids);
        trace.push(kmeans_objective(points, &next, &centroids));
        if next == assign {
            converged = true;
            break;
        }
        assign = next;
        centroids = update_centroids(points, &mut assign, groups);
        trace.push(kmeans_objective(points, &assign, &centroids));
    }
    let reps = centroids
        .iter()
        .map(|c| ternarize(c.as_slice(), e.sparsity()))
        .collect::<Result<Vec<_>>>()?;
    Ok(RyOutcome {
        representations: CodeMatrix::new(reps)?,
        assignment: AssignmentMatrix::new(assign, groups)?,
        centroids: DMatrix::from_columns(&centroids),
        objective_trace: std::mem::take(trace),
        iterations,
        converged,
    })
}

fn sq_dist(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn kmeans_objective(points: &[DVector<f64>], assign: &[usize], centroids: &[DVector<f64>]) -> f64 {
    points
        .iter()
        .zip(assign)
        .map(|(p, &g)| sq_dist(p, &centroids[g]))
        .sum()
}

/// Nearest centroid per point; ties go to the lowest group index.
fn assign_nearest(points: &[DVector<f64>], centroids: &[DVector<f64>]) -> Vec<usize> {
    points
        .iter()
        .map(|p| {
            let mut best = (0, f64::INFINITY);
            for (g, c) in centroids.iter().enumerate() {
                let d = sq_dist(p, c);
                if d < best.1 {
                    best = (g, d);
                }
            }
            best.0
        })
        .collect()
}

fn mean_of(points: &[DVector<f64>], assign: &[usize], g: usize) -> DVector<f64> {
    let mut sum = DVector::zeros(points[0].len());
    let mut count = 0usize;
    for (p, &h) in points.iter().zip(assign) {
        if h == g {
            sum += p;
            count += 1;
        }
    }
    sum / count as f64
}

/// Centroid update. An empty group takes over the point lying farthest from
/// its own centroid (among groups with at least two members), so no group is
/// ever left empty.
fn update_centroids(points: &[DVector<f64>], assign: &mut [usize], groups: usize) -> Vec<DVector<f64>> {
    let l = points[0].len();
    let mut sizes = vec![0usize; groups];
    for &g in assign.iter() {
        sizes[g] += 1;
    }
    let mut centroids: Vec<DVector<f64>> = (0..groups)
        .map(|g| {
            if sizes[g] > 0 {
                mean_of(points, assign, g)
            } else {
                DVector::zeros(l)
            }
        })
        .collect();
    for g in 0..groups {
        if sizes[g] > 0 {
            continue;
        }
        let mut donor: Option<(usize, f64)> = None;
        for (i, p) in points.iter().enumerate() {
            let h = assign[i];
            if sizes[h] < 2 {
                continue;
            }
            let d = sq_dist(p, &centroids[h]);
            if donor.is_none_or(|(_, best)| d > best) {
                donor = Some((i, d));
            }
        }
        let (i, _) = donor.expect("M <= N guarantees a group with two members");
        let old = assign[i];
        assign[i] = g;
        sizes[old] -= 1;
        sizes[g] = 1;
        centroids[g] = points[i].clone();
        centroids[old] = mean_of(points, assign, old);
    }
    centroids
}

fn kmeans_plus_plus<R: Rng + ?Sized>(points: &[DVector<f64>], k: usize, rng: &mut R) -> Vec<DVector<f64>> {
    let n = points.len();
    let mut centroids = vec![points[rng.gen_range(0..n)].clone()];
    let mut nearest: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in nearest.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        let c = points[pick].clone();
        for (d, p) in nearest.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}
