//! A trained model on disk is a directory:
//!
//! - `config.ini`: `[model]` hyper-parameters and `[training]` notes
//! - `W.csv`: one column of `W` per row (`l` rows of length `d`)
//! - `E.csv`, `R.csv`: one ternary code per row
//! - `Y.csv`: group index of each enrolled signature
//! - `trace.csv`: objective terms per outer iteration

use std::fs;
use std::path::Path;
use std::str::FromStr;

use ini::{Ini, Properties};

use crate::data::{load_matrix, read_rows, save_matrix, write_rows, Rows};
use crate::error::{ensure_dim, Error, Result};
use crate::learning::{AssignmentMatrix, CodeMatrix, Model, ObjectiveBreakdown};
use crate::ternary::TernaryCode;
use crate::types::{ModelConfig, ProjectionMatrix};

pub const CONFIG_FILE: &str = "config.ini";
pub const W_FILE: &str = "W.csv";
pub const E_FILE: &str = "E.csv";
pub const R_FILE: &str = "R.csv";
pub const Y_FILE: &str = "Y.csv";
pub const TRACE_FILE: &str = "trace.csv";

const TRACE_COLUMNS: &str = "iteration,embedding_cost,within_trace,between_trace,total,reassigned";

/// Reads `key` from an INI section, if present.
pub fn ini_value<T: FromStr>(props: &Properties, section: &str, key: &str) -> Result<Option<T>> {
    props
        .get(key)
        .map(|v| {
            v.trim()
                .parse::<T>()
                .map_err(|_| Error::Config(format!("[{section}] {key}: cannot parse '{v}'")))
        })
        .transpose()
}

/// Overwrites the fields of `config` present in `props`.
pub fn apply_model_section(config: &mut ModelConfig, props: &Properties) -> Result<()> {
    let s = "model";
    macro_rules! set {
        ($field:ident) => {
            if let Some(v) = ini_value(props, s, stringify!($field))? {
                config.$field = v;
            }
        };
    }
    set!(code_len);
    set!(sparsity);
    set!(groups);
    set!(lambda);
    set!(gamma);
    set!(max_outer_iters);
    set!(convergence_tol);
    set!(kmeans_max_iters);
    set!(seed);
    for key in props.iter().map(|(k, _)| k) {
        if !MODEL_KEYS.contains(&key) {
            return Err(Error::Config(format!("[model] unknown key '{key}'")));
        }
    }
    Ok(())
}

pub const MODEL_KEYS: [&str; 9] = [
    "code_len",
    "sparsity",
    "groups",
    "lambda",
    "gamma",
    "max_outer_iters",
    "convergence_tol",
    "kmeans_max_iters",
    "seed",
];

pub fn write_model_section(ini: &mut Ini, config: &ModelConfig) {
    ini.with_section(Some("model"))
        .set("code_len", config.code_len.to_string())
        .set("sparsity", config.sparsity.to_string())
        .set("groups", config.groups.to_string())
        .set("lambda", config.lambda.to_string())
        .set("gamma", config.gamma.to_string())
        .set("max_outer_iters", config.max_outer_iters.to_string())
        .set("convergence_tol", config.convergence_tol.to_string())
        .set("kmeans_max_iters", config.kmeans_max_iters.to_string())
        .set("seed", config.seed.to_string());
}

fn write_ini(path: &Path, ini: &Ini) -> Result<()> {
    let mut buf = Vec::new();
    ini.write_to(&mut buf).map_err(|e| Error::io(path, e))?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

fn load_ini(path: &Path) -> Result<Ini> {
    Ini::load_from_file(path).map_err(|e| match e {
        ini::Error::Io(e) => Error::io(path, e),
        ini::Error::Parse(p) => Error::Parse {
            path: path.to_path_buf(),
            row: p.line,
            column: p.col,
            message: p.msg.to_string(),
        },
    })
}

fn save_codes(path: &Path, codes: &CodeMatrix) -> Result<()> {
    let header = format!("l={} n={} s={}", codes.code_len(), codes.len(), codes.sparsity());
    write_rows(path, Some(&header), codes.columns().iter().map(|c| c.symbols().to_vec()))
}

fn load_codes(path: &Path) -> Result<CodeMatrix> {
    let Rows { rows, .. } = read_rows::<i8>(path)?;
    let cols = rows
        .into_iter()
        .enumerate()
        .map(|(r, row)| {
            TernaryCode::from_symbols(row).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                row: r + 1,
                column: 0,
                message: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    CodeMatrix::new(cols)
}

/// Writes `model` into `dir` (created if needed). `notes` land in the
/// `[training]` section of `config.ini`.
pub fn save_model(dir: &Path, model: &Model, notes: &[(&str, String)]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut ini = Ini::new();
    write_model_section(&mut ini, &model.config);
    {
        let mut training = ini.with_section(Some("training"));
        training
            .set("iterations", model.objective_trace.len().to_string())
            .set("degenerate_w_steps", model.degenerate_w_steps.to_string());
        for (k, v) in notes {
            training.set(*k, v.clone());
        }
    }
    write_ini(&dir.join(CONFIG_FILE), &ini)?;
    save_matrix(&dir.join(W_FILE), model.projection.matrix())?;
    save_codes(&dir.join(E_FILE), &model.codes)?;
    save_codes(&dir.join(R_FILE), &model.representations)?;
    write_rows(
        &dir.join(Y_FILE),
        Some(&format!("n={} groups={}", model.assignment.len(), model.assignment.groups())),
        model.assignment.as_slice().iter().map(|g| [g]),
    )?;
    write_rows(
        &dir.join(TRACE_FILE),
        Some(&format!("columns={TRACE_COLUMNS}")),
        model
            .objective_trace
            .iter()
            .zip(&model.reassigned_trace)
            .enumerate()
            .map(|(i, (o, r))| {
                [
                    (i + 1).to_string(),
                    o.embedding_cost.to_string(),
                    o.within_trace.to_string(),
                    o.between_trace.to_string(),
                    o.total.to_string(),
                    r.to_string(),
                ]
            }),
    )
}

/// Reads the `[training]` section of a saved model.
pub fn load_training_notes(dir: &Path) -> Result<Vec<(String, String)>> {
    let ini = load_ini(&dir.join(CONFIG_FILE))?;
    Ok(ini
        .section(Some("training"))
        .map(|p| p.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect())
        .unwrap_or_default())
}

pub fn load_model(dir: &Path) -> Result<Model> {
    let config_path = dir.join(CONFIG_FILE);
    let ini = load_ini(&config_path)?;
    let mut config = ModelConfig::default();
    let props = ini
        .section(Some("model"))
        .ok_or_else(|| Error::Config(format!("{} has no [model] section", config_path.display())))?;
    apply_model_section(&mut config, props)?;
    let degenerate_w_steps = ini
        .section(Some("training"))
        .map(|p| ini_value(p, "training", "degenerate_w_steps"))
        .transpose()?
        .flatten()
        .unwrap_or(0);

    let projection = ProjectionMatrix::new(load_matrix(&dir.join(W_FILE))?)?;
    let codes = load_codes(&dir.join(E_FILE))?;
    let representations = load_codes(&dir.join(R_FILE))?;
    let y_path = dir.join(Y_FILE);
    let Rows { rows, .. } = read_rows::<usize>(&y_path)?;
    if rows[0].len() != 1 {
        return Err(Error::Parse {
            path: y_path,
            row: 1,
            column: 2,
            message: "expected one group index per row".into(),
        });
    }
    let assignment = AssignmentMatrix::new(rows.into_iter().map(|r| r[0]).collect(), representations.len())?;

    let trace_path = dir.join(TRACE_FILE);
    let mut objective_trace = Vec::new();
    let mut reassigned_trace = Vec::new();
    let Rows { rows, .. } = read_rows::<String>(&trace_path)?;
    for (r, row) in rows.iter().enumerate() {
        ensure_dim("trace columns", 6, row.len())?;
        let num = |c: usize| -> Result<f64> {
            row[c].parse().map_err(|_| Error::Parse {
                path: trace_path.clone(),
                row: r + 2,
                column: c + 1,
                message: format!("cannot parse '{}'", row[c]),
            })
        };
        objective_trace.push(ObjectiveBreakdown {
            embedding_cost: num(1)?,
            within_trace: num(2)?,
            between_trace: num(3)?,
            total: num(4)?,
        });
        reassigned_trace.push(num(5)? as usize);
    }

    let model = Model {
        projection,
        codes,
        representations,
        assignment,
        config,
        objective_trace,
        reassigned_trace,
        degenerate_w_steps,
    };
    model.validate()?;
    Ok(model)
}
