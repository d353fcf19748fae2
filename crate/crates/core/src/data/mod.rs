//! Synthetic biometric signatures and the on-disk dataset bundle.
//!
//! Each identity has a mean direction drawn uniformly on the unit sphere;
//! each sample is `normalize(mean + N(0, sigma^2 I))`. One sample of every
//! enrolled identity is enrolled, the remaining ones are genuine queries.
//! Impostor identities never appear in the enrolled set.

mod io;

pub use io::{load_matrix, read_rows, save_matrix, write_rows, Rows};

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::types::SignatureMatrix;

pub const ENROLLED_FILE: &str = "enrolled.csv";
pub const GENUINE_FILE: &str = "genuine.csv";
pub const IMPOSTORS_FILE: &str = "impostors.csv";

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    /// Enrolled identities (`N`).
    pub num_identities: usize,
    pub samples_per_identity: usize,
    pub dim: usize,
    pub noise_sigma: f64,
    /// Impostor identities as a fraction of `num_identities` (at least one).
    pub impostor_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            num_identities: 128,
            samples_per_identity: 3,
            dim: 64,
            noise_sigma: 0.15,
            impostor_fraction: 0.5,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_identities == 0 {
            return Err(Error::Config("num_identities must be positive".into()));
        }
        if self.samples_per_identity < 2 {
            return Err(Error::Config("samples_per_identity must be >= 2".into()));
        }
        if self.dim < 2 {
            return Err(Error::Config("dim must be >= 2".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Config("noise_sigma must be finite and >= 0".into()));
        }
        if !(self.impostor_fraction > 0.0 && self.impostor_fraction < 1.0) {
            return Err(Error::Config("impostor_fraction must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn num_impostor_identities(&self) -> usize {
        ((self.impostor_fraction * self.num_identities as f64).round() as usize).max(1)
    }
}

/// Enrolled signatures with held-out genuine queries and impostor samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub enrolled: SignatureMatrix,
    pub genuine: SignatureMatrix,
    /// Enrolled column index of each genuine query.
    pub genuine_identity: Vec<usize>,
    pub impostors: SignatureMatrix,
}

impl Dataset {
    pub fn validate(&self) -> Result<()> {
        crate::error::ensure_dim("genuine dimension", self.enrolled.dim(), self.genuine.dim())?;
        crate::error::ensure_dim("impostor dimension", self.enrolled.dim(), self.impostors.dim())?;
        crate::error::ensure_dim(
            "genuine identity labels",
            self.genuine.len(),
            self.genuine_identity.len(),
        )?;
        if let Some(&bad) = self.genuine_identity.iter().find(|&&i| i >= self.enrolled.len()) {
            return Err(Error::InvalidInput(format!(
                "genuine query refers to identity {bad}, only {} enrolled",
                self.enrolled.len()
            )));
        }
        Ok(())
    }
}

fn unit_gaussian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DVector<f64> {
    loop {
        let v = DVector::<f64>::from_fn(d, |_, _| rng.sample(StandardNormal));
        let n = v.norm();
        if n > 0.0 {
            return v / n;
        }
    }
}

/// Draws a dataset; bit-deterministic for a given `spec.seed`.
pub fn generate(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let d = spec.dim;
    let sample = |mean: &DVector<f64>, rng: &mut ChaCha20Rng| -> DVector<f64> {
        if spec.noise_sigma == 0.0 {
            return mean.clone();
        }
        let noisy = mean + DVector::<f64>::from_fn(d, |_, _| spec.noise_sigma * rng.sample::<f64, _>(StandardNormal));
        let n = noisy.norm();
        if n > 0.0 {
            noisy / n
        } else {
            mean.clone()
        }
    };
    let mut enrolled = Vec::with_capacity(spec.num_identities);
    let mut genuine = Vec::new();
    let mut genuine_identity = Vec::new();
    for id in 0..spec.num_identities {
        let mean = unit_gaussian(d, &mut rng);
        enrolled.push(sample(&mean, &mut rng));
        for _ in 1..spec.samples_per_identity {
            genuine.push(sample(&mean, &mut rng));
            genuine_identity.push(id);
        }
    }
    let mut impostors = Vec::new();
    for _ in 0..spec.num_impostor_identities() {
        let mean = unit_gaussian(d, &mut rng);
        for _ in 0..spec.samples_per_identity {
            impostors.push(sample(&mean, &mut rng));
        }
    }
    Ok(Dataset {
        enrolled: SignatureMatrix::from_columns(&enrolled)?,
        genuine: SignatureMatrix::from_columns(&genuine)?,
        genuine_identity,
        impostors: SignatureMatrix::from_columns(&impostors)?,
    })
}

/// Accepts exactly-unit columns as stored; anything else is renormalized
/// (precomputed real features need not be normalized on disk).
fn as_signatures(m: DMatrix<f64>) -> Result<SignatureMatrix> {
    match SignatureMatrix::new(m.clone()) {
        Ok(s) => Ok(s),
        Err(_) => SignatureMatrix::normalized(m),
    }
}

/// Writes `enrolled.csv`, `genuine.csv` (identity index first) and
/// `impostors.csv` into `dir`, creating it if needed.
pub fn save_dataset(dir: &Path, data: &Dataset) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    save_matrix(&dir.join(ENROLLED_FILE), data.enrolled.matrix())?;
    save_matrix(&dir.join(IMPOSTORS_FILE), data.impostors.matrix())?;
    let header = format!("d={} n={} identity_column=0", data.genuine.dim(), data.genuine.len());
    write_rows(
        &dir.join(GENUINE_FILE),
        Some(&header),
        data.genuine
            .matrix()
            .column_iter()
            .zip(&data.genuine_identity)
            .map(|(c, id)| {
                std::iter::once(id.to_string())
                    .chain(c.iter().map(|v| v.to_string()))
                    .collect::<Vec<_>>()
            }),
    )
}

pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let enrolled = as_signatures(load_matrix(&dir.join(ENROLLED_FILE))?)?;
    let impostors = as_signatures(load_matrix(&dir.join(IMPOSTORS_FILE))?)?;
    let path = dir.join(GENUINE_FILE);
    let Rows { rows, .. } = read_rows::<String>(&path)?;
    let d = rows[0].len().saturating_sub(1);
    let mut ids = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len() * d);
    for (r, row) in rows.iter().enumerate() {
        let id = row[0].parse::<usize>().map_err(|_| Error::Parse {
            path: path.clone(),
            row: r + 1,
            column: 1,
            message: format!("identity '{}' is not an index", row[0]),
        })?;
        ids.push(id);
        for (c, field) in row[1..].iter().enumerate() {
            let v = field.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
                path: path.clone(),
                row: r + 1,
                column: c + 2,
                message: format!("cannot parse '{field}'"),
            })?;
            values.push(v);
        }
    }
    let genuine = as_signatures(DMatrix::from_column_slice(d, rows.len(), &values))?;
    let data = Dataset {
        enrolled,
        genuine,
        genuine_identity: ids,
        impostors,
    };
    data.validate()?;
    Ok(data)
}
