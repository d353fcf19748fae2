//! Verification and open-set identification on a trained [`Model`], error
//! rates at a fixed false-positive target, and linear reconstruction attacks
//! by a curious server that knows `W`.
//!
//! All decisions threshold the exact integer squared distance between the
//! query code and a group representation.

mod attack;
mod identification;
mod roc;
mod verification;

pub use attack::{fit_beta, reconstruct, security_report, SecurityReport};
pub use identification::{
    identification_report, identification_report_at, identification_scores, identify, nearest_group,
    IdentificationReport,
};
pub use roc::{pfn_at_pfp, RocCurve, RocPoint};
pub use verification::{verification_scores, verification_sweep, verify};

use nalgebra::DVector;

use crate::data::Dataset;
use crate::error::{ensure_dim, Error, Result};
use crate::learning::Model;
use crate::ternary::{embed, TernaryCode};

/// False-positive target used throughout.
pub const TARGET_PFP: f64 = 0.05;

/// Genuine queries labelled with their true group, plus impostor queries.
#[derive(Clone, Debug)]
pub struct QuerySet {
    pub genuine: Vec<(DVector<f64>, usize)>,
    pub impostors: Vec<DVector<f64>>,
}

impl QuerySet {
    /// Labels each genuine query with the group its identity was assigned to.
    pub fn from_dataset(data: &Dataset, model: &Model) -> Result<Self> {
        ensure_dim("enrolled identities", model.assignment.len(), data.enrolled.len())?;
        let genuine = data
            .genuine
            .columns()
            .zip(&data.genuine_identity)
            .map(|(q, &id)| (q, model.assignment.group_of(id)))
            .collect();
        Ok(Self {
            genuine,
            impostors: data.impostors.columns().collect(),
        })
    }

    pub(crate) fn check(&self, model: &Model) -> Result<()> {
        if self.genuine.is_empty() {
            return Err(Error::EmptyQuerySet("no genuine queries"));
        }
        if self.impostors.is_empty() {
            return Err(Error::EmptyQuerySet("no impostor queries"));
        }
        let d = model.projection.input_dim();
        for (q, g) in &self.genuine {
            ensure_dim("query dimension", d, q.len())?;
            if *g >= model.groups() {
                return Err(Error::GroupOutOfRange {
                    index: *g,
                    groups: model.groups(),
                });
            }
        }
        for q in &self.impostors {
            ensure_dim("query dimension", d, q.len())?;
        }
        Ok(())
    }
}

/// Embeds a query with the model's projection and sparsity.
pub fn encode_query(model: &Model, q: &DVector<f64>) -> Result<TernaryCode> {
    embed(&model.projection, q, model.sparsity())
}

#[cfg(test)]
pub(crate) mod tests_support {
    use nalgebra::{DMatrix, DVector};

    use super::QuerySet;
    use crate::learning::{AssignmentMatrix, CodeMatrix, Model};
    use crate::ternary::TernaryCode;
    use crate::types::{ModelConfig, ProjectionMatrix};

    const REPS: [[i8; 6]; 3] = [[1, 1, 0, 0, 0, 0], [0, 0, 1, 1, 0, 0], [0, 0, 0, 0, 1, -1]];

    /// d = 8, l = 6, S = 2, W = first six canonical axes, two members per
    /// group whose codes equal the group representation.
    pub fn toy_model_groups(groups: usize) -> Model {
        let reps: Vec<TernaryCode> = REPS[..groups]
            .iter()
            .map(|r| TernaryCode::from_symbols(r.to_vec()).unwrap())
            .collect();
        let group_of: Vec<usize> = (0..2 * groups).map(|i| i / 2).collect();
        let codes = group_of.iter().map(|&g| reps[g].clone()).collect();
        let config = ModelConfig {
            code_len: 6,
            sparsity: 2,
            groups,
            ..ModelConfig::default()
        };
        Model {
            projection: ProjectionMatrix::new(DMatrix::identity(8, 6)).unwrap(),
            codes: CodeMatrix::new(codes).unwrap(),
            representations: CodeMatrix::new(reps).unwrap(),
            assignment: AssignmentMatrix::new(group_of, groups).unwrap(),
            config,
            objective_trace: vec![],
            reassigned_trace: vec![],
            degenerate_w_steps: 0,
        }
    }

    pub fn toy_model() -> Model {
        toy_model_groups(3)
    }

    /// Unit signature whose code is exactly `code` under the toy projection.
    pub fn signature_for(code: &TernaryCode) -> DVector<f64> {
        let mut v = DVector::zeros(8);
        for (i, s) in code.support() {
            v[i] = f64::from(s);
        }
        v.normalize()
    }

    /// One genuine query per group that encodes to the representation, and
    /// one impostor at distance >= 4 from every group.
    pub fn exact_queries(model: &Model) -> QuerySet {
        let genuine = (0..model.groups())
            .map(|g| (signature_for(model.representations.column(g)), g))
            .collect();
        let far = TernaryCode::from_symbols(vec![0, 0, 0, 0, -1, 1]).unwrap();
        QuerySet {
            genuine,
            impostors: vec![signature_for(&far)],
        }
    }
}
