//! Experiment configuration: an INI file with `[data]`, `[model]`,
//! `[sweep]`, `[output]` and `[protocol]` sections. Precedence, lowest
//! first: built-in defaults, the config file, `GMK_SEED`, `--key=value`
//! flags.
//!
//! A flag is `--section.key=value`, or `--key=value` when the key names a
//! field of `[model]`, `[data]`, `[protocol]`, `[output]` or `[sweep]`
//! (first match in that order). A bare `--seed` sets every seed.

use std::path::{Path, PathBuf};

use ini::Ini;

use crate::data::SyntheticSpec;
use crate::error::{Error, Result};
use crate::learning::io::{apply_model_section, ini_value, MODEL_KEYS};
use crate::protocol::SecurityParams;
use crate::types::ModelConfig;

pub const SEED_ENV: &str = "GMK_SEED";

const SECTIONS: [(&str, &[&str]); 5] = [
    (
        "model",
        &[
            "code_len",
            "sparsity",
            "groups",
            "lambda",
            "gamma",
            "max_outer_iters",
            "convergence_tol",
            "kmeans_max_iters",
            "seed",
            "baseline",
            "group_size",
        ],
    ),
    (
        "data",
        &[
            "dir",
            "num_identities",
            "samples_per_identity",
            "dim",
            "noise_sigma",
            "impostor_fraction",
            "seed",
        ],
    ),
    (
        "protocol",
        &[
            "source",
            "query",
            "tau",
            "seed",
            "additive_bits",
            "multiplicative_bits",
            "mask_a_bound",
            "mask_b_bound",
        ],
    ),
    ("output", &["model_dir", "metrics_dir", "transcript"]),
    ("sweep", &["group_size", "sparsity", "lambda", "gamma"]),
];

/// Which split a protocol-demo query is taken from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuerySource {
    /// The stored code of an enrolled signature.
    Enrolled,
    Genuine,
    Impostor,
}

impl std::str::FromStr for QuerySource {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s {
            "enrolled" => Ok(Self::Enrolled),
            "genuine" => Ok(Self::Genuine),
            "impostor" => Ok(Self::Impostor),
            _ => Err(()),
        }
    }
}

impl QuerySource {
    pub fn name(self) -> &'static str {
        match self {
            Self::Enrolled => "enrolled",
            Self::Genuine => "genuine",
            Self::Impostor => "impostor",
        }
    }
}

/// Sweep axes; an empty list keeps the `[model]` value.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Sweep {
    pub group_size: Vec<usize>,
    pub sparsity: Vec<usize>,
    pub lambda: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl Sweep {
    pub fn is_empty(&self) -> bool {
        self.group_size.is_empty() && self.sparsity.is_empty() && self.lambda.is_empty() && self.gamma.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DemoConfig {
    pub source: QuerySource,
    pub query: usize,
    pub tau: i64,
    pub seed: u64,
    pub security: SecurityParams,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub data: SyntheticSpec,
    pub data_dir: PathBuf,
    pub model: ModelConfig,
    /// Train with a fixed random balanced assignment.
    pub baseline: bool,
    /// When set, `groups = N / group_size`.
    pub group_size: Option<usize>,
    pub sweep: Sweep,
    pub model_dir: PathBuf,
    pub metrics_dir: PathBuf,
    pub transcript: PathBuf,
    pub protocol: DemoConfig,
}

fn parse_list<T: std::str::FromStr>(section: &str, key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::Config(format!("[{section}] {key}: cannot parse '{s}'")))
        })
        .collect()
}

impl ExperimentConfig {
    /// Reads `config` (if any), then applies `GMK_SEED` and the overrides.
    pub fn load(config: Option<&Path>, env_seed: Option<&str>, overrides: &[String]) -> Result<Self> {
        let mut ini = match config {
            Some(path) => Ini::load_from_file(path).map_err(|e| match e {
                ini::Error::Io(e) => Error::io(path, e),
                ini::Error::Parse(p) => Error::Parse {
                    path: path.to_path_buf(),
                    row: p.line,
                    column: p.col,
                    message: p.msg.to_string(),
                },
            })?,
            None => Ini::new(),
        };
        if let Some(seed) = env_seed {
            seed.trim()
                .parse::<u64>()
                .map_err(|_| Error::Config(format!("{SEED_ENV}='{seed}' is not a 64-bit seed")))?;
            set_all_seeds(&mut ini, seed.trim());
        }
        for flag in overrides {
            apply_override(&mut ini, flag)?;
        }
        Self::from_ini(&ini)
    }

    pub fn from_ini(ini: &Ini) -> Result<Self> {
        for (section, props) in ini.iter() {
            let Some(name) = section else {
                if props.is_empty() {
                    continue;
                }
                return Err(Error::Config("keys outside any section".into()));
            };
            let Some((_, keys)) = SECTIONS.iter().find(|(s, _)| *s == name) else {
                return Err(Error::Config(format!("unknown section [{name}]")));
            };
            if let Some((k, _)) = props.iter().find(|(k, _)| !keys.contains(k)) {
                return Err(Error::Config(format!("[{name}] unknown key '{k}'")));
            }
        }
        let empty = ini::Properties::new();
        let section = |name: &str| ini.section(Some(name)).unwrap_or(&empty);

        let d = section("data");
        let mut data = SyntheticSpec::default();
        macro_rules! set {
            ($props:expr, $sec:literal, $target:expr, $key:literal) => {
                if let Some(v) = ini_value($props, $sec, $key)? {
                    $target = v;
                }
            };
        }
        set!(d, "data", data.num_identities, "num_identities");
        set!(d, "data", data.samples_per_identity, "samples_per_identity");
        set!(d, "data", data.dim, "dim");
        set!(d, "data", data.noise_sigma, "noise_sigma");
        set!(d, "data", data.impostor_fraction, "impostor_fraction");
        set!(d, "data", data.seed, "seed");
        let mut data_dir = PathBuf::from("data");
        set!(d, "data", data_dir, "dir");

        let m = section("model");
        let mut model_props = m.clone();
        let mut baseline = false;
        set!(m, "model", baseline, "baseline");
        let group_size: Option<usize> = ini_value(m, "model", "group_size")?;
        model_props.remove("baseline");
        model_props.remove("group_size");
        let mut model = ModelConfig::default();
        apply_model_section(&mut model, &model_props)?;
        debug_assert!(MODEL_KEYS.iter().all(|k| SECTIONS[0].1.contains(k)));

        let s = section("sweep");
        let list = |key: &str| s.get(key).unwrap_or("");
        let sweep = Sweep {
            group_size: parse_list("sweep", "group_size", list("group_size"))?,
            sparsity: parse_list("sweep", "sparsity", list("sparsity"))?,
            lambda: parse_list("sweep", "lambda", list("lambda"))?,
            gamma: parse_list("sweep", "gamma", list("gamma"))?,
        };

        let o = section("output");
        let mut model_dir = PathBuf::from("model");
        let mut metrics_dir = PathBuf::from("metrics");
        let mut transcript = PathBuf::from("transcript.gmkt");
        set!(o, "output", model_dir, "model_dir");
        set!(o, "output", metrics_dir, "metrics_dir");
        set!(o, "output", transcript, "transcript");

        let p = section("protocol");
        let mut security = SecurityParams::default();
        set!(p, "protocol", security.additive_bits, "additive_bits");
        security.multiplicative_bits = 2 * security.additive_bits + 64;
        set!(p, "protocol", security.multiplicative_bits, "multiplicative_bits");
        set!(p, "protocol", security.mask_a_bound, "mask_a_bound");
        set!(p, "protocol", security.mask_b_bound, "mask_b_bound");
        let mut protocol = DemoConfig {
            source: QuerySource::Genuine,
            query: 0,
            tau: 0,
            seed: 0,
            security,
        };
        if let Some(v) = p.get("source") {
            protocol.source = v.trim().parse().map_err(|_| {
                Error::Config(format!("[protocol] source must be enrolled, genuine or impostor, got '{v}'"))
            })?;
        }
        set!(p, "protocol", protocol.query, "query");
        set!(p, "protocol", protocol.tau, "tau");
        set!(p, "protocol", protocol.seed, "seed");

        let cfg = Self {
            data,
            data_dir,
            model,
            baseline,
            group_size,
            sweep,
            model_dir,
            metrics_dir,
            transcript,
            protocol,
        };
        if cfg.group_size == Some(0) || cfg.sweep.group_size.contains(&0) {
            return Err(Error::Config("group_size must be positive".into()));
        }
        Ok(cfg)
    }
}

fn set_all_seeds(ini: &mut Ini, value: &str) {
    for section in ["data", "model", "protocol"] {
        ini.with_section(Some(section)).set("seed", value);
    }
}

/// Applies one `--key=value` or `--section.key=value` flag.
pub fn apply_override(ini: &mut Ini, flag: &str) -> Result<()> {
    let body = flag
        .strip_prefix("--")
        .ok_or_else(|| Error::Usage(format!("expected --key=value, got '{flag}'")))?;
    let (key, value) = body
        .split_once('=')
        .ok_or_else(|| Error::Usage(format!("expected --key=value, got '{flag}'")))?;
    if let Some((section, k)) = key.split_once('.') {
        let known = SECTIONS
            .iter()
            .any(|(s, keys)| *s == section && keys.contains(&k));
        if !known {
            return Err(Error::Usage(format!("unknown setting '{key}'")));
        }
        ini.with_section(Some(section)).set(k, value);
        return Ok(());
    }
    if key == "seed" {
        set_all_seeds(ini, value);
        return Ok(());
    }
    let section = SECTIONS
        .iter()
        .find(|(_, keys)| keys.contains(&key))
        .map(|(s, _)| *s)
        .ok_or_else(|| Error::Usage(format!("unknown setting '{key}'")))?;
    ini.with_section(Some(section)).set(key, value);
    Ok(())
}

/// True for arguments that look like configuration overrides.
pub fn is_override(arg: &str) -> bool {
    let Some(body) = arg.strip_prefix("--") else {
        return false;
    };
    let Some((key, _)) = body.split_once('=') else {
        return false;
    };
    match key.split_once('.') {
        Some((section, k)) => SECTIONS.iter().any(|(s, keys)| *s == section && keys.contains(&k)),
        None => SECTIONS.iter().any(|(_, keys)| keys.contains(&key)),
    }
}
