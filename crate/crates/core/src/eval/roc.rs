use crate::error::{Error, Result};

/// One operating point: accept iff `distance <= tau`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RocPoint {
    pub tau: i64,
    pub pfp: f64,
    pub pfn: f64,
}

/// Error rates over every distinct score threshold, sorted by `tau`.
#[derive(Clone, Debug, PartialEq)]
pub struct RocCurve {
    points: Vec<RocPoint>,
}

impl RocCurve {
    /// Builds the curve from genuine and impostor distances. Thresholds are
    /// every distinct observed score plus `-1` (reject all) and `max_tau`
    /// (accept all, must bound every score).
    pub fn from_scores(genuine: &[i64], impostor: &[i64], max_tau: i64) -> Result<Self> {
        if genuine.is_empty() {
            return Err(Error::EmptyQuerySet("no genuine scores"));
        }
        if impostor.is_empty() {
            return Err(Error::EmptyQuerySet("no impostor scores"));
        }
        let mut gen = genuine.to_vec();
        let mut imp = impostor.to_vec();
        gen.sort_unstable();
        imp.sort_unstable();
        if gen.last().max(imp.last()).copied().unwrap_or(0) > max_tau {
            return Err(Error::InvalidInput(format!(
                "score above the accept-all threshold {max_tau}"
            )));
        }
        let mut taus: Vec<i64> = gen.iter().chain(&imp).copied().collect();
        taus.push(-1);
        taus.push(max_tau);
        taus.sort_unstable();
        taus.dedup();
        let (ng, ni) = (gen.len() as f64, imp.len() as f64);
        let points = taus
            .into_iter()
            .map(|tau| {
                let accepted_imp = imp.partition_point(|&s| s <= tau);
                let accepted_gen = gen.partition_point(|&s| s <= tau);
                RocPoint {
                    tau,
                    pfp: accepted_imp as f64 / ni,
                    pfn: (gen.len() - accepted_gen) as f64 / ng,
                }
            })
            .collect();
        let curve = Self { points };
        debug_assert!(curve.is_monotone());
        Ok(curve)
    }

    pub fn points(&self) -> &[RocPoint] {
        &self.points
    }

    /// `pfp` non-decreasing and `pfn` non-increasing in `tau`.
    pub fn is_monotone(&self) -> bool {
        self.points.windows(2).all(|w| {
            w[0].tau < w[1].tau && w[0].pfp <= w[1].pfp && w[0].pfn >= w[1].pfn
        })
    }

    /// Largest-threshold point whose empirical `pfp` does not exceed `target`.
    pub fn operating_point(&self, target: f64) -> RocPoint {
        self.points
            .iter()
            .rev()
            .find(|p| p.pfp <= target)
            .copied()
            .unwrap_or(self.points[0])
    }
}

/// `P_fn` at the conservative operating point for `target` (no interpolation).
pub fn pfn_at_pfp(roc: &RocCurve, target: f64) -> f64 {
    roc.operating_point(target).pfn
}
