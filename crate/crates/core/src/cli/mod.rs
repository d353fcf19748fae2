//! Command-line driver. Subcommands: `gen-data`, `train`, `eval-verify`,
//! `eval-identify`, `eval-security`, `protocol-demo`. Every output is a
//! pure function of the configuration, so runs with the same seed are
//! byte-identical.

mod config;

pub use config::{apply_override, is_override, DemoConfig, ExperimentConfig, QuerySource, Sweep, SEED_ENV};

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::data::{generate, load_dataset, save_dataset, Dataset};
use crate::error::{Error, Result};
use crate::eval::{
    encode_query, identification_report, security_report, verification_sweep, verify, QuerySet,
    TARGET_PFP,
};
use crate::learning::io::{load_model, save_model};
use crate::learning::{train, train_random_assignment_baseline, Model};
use crate::protocol::{run_protocol_with_keys, ProtocolKeys};
use crate::ternary::TernaryCode;
use crate::types::ModelConfig;

pub const INDEX_FILE: &str = "index.csv";
pub const LOG_FILE: &str = "train.log";

#[derive(Parser, Debug)]
#[command(
    name = "gmk",
    version,
    about = "Learned group representations for private group membership verification",
    after_help = "Any configuration key can be set with --section.key=value or --key=value, \
                  e.g. --sparsity=4 --data.dir=out/data. GMK_SEED overrides every seed."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct CommonArgs {
    /// INI configuration file.
    #[arg(long, short)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a synthetic dataset into [data] dir.
    GenData(CommonArgs),
    /// Train one model, or one per sweep point, into [output] model_dir.
    Train(CommonArgs),
    /// P_fn at P_fp = 0.05 for group verification.
    EvalVerify(CommonArgs),
    /// Open-set identification: P_fn, P_epsilon and DIR.
    EvalIdentify(CommonArgs),
    /// Reconstruction errors of a server that knows W.
    EvalSecurity(CommonArgs),
    /// One encrypted verification run with a transcript.
    ProtocolDemo(CommonArgs),
}

/// Parses `args` (without the program name) and runs the command, writing
/// human-readable progress to `out`.
pub fn run(args: &[String], env_seed: Option<&str>, out: &mut dyn Write) -> Result<()> {
    let (overrides, rest): (Vec<String>, Vec<String>) =
        args.iter().cloned().partition(|a| is_override(a));
    let cli = Cli::try_parse_from(std::iter::once("gmk".to_string()).chain(rest))
        .map_err(usage_error)?;
    let (command, common) = match &cli.command {
        Command::GenData(c) => ("gen-data", c),
        Command::Train(c) => ("train", c),
        Command::EvalVerify(c) => ("eval-verify", c),
        Command::EvalIdentify(c) => ("eval-identify", c),
        Command::EvalSecurity(c) => ("eval-security", c),
        Command::ProtocolDemo(c) => ("protocol-demo", c),
    };
    let cfg = ExperimentConfig::load(common.config.as_deref(), env_seed, &overrides)?;
    match command {
        "gen-data" => cmd_gen_data(&cfg, out),
        "train" => cmd_train(&cfg, out),
        "eval-verify" => cmd_eval(&cfg, EvalMode::Verify, out),
        "eval-identify" => cmd_eval(&cfg, EvalMode::Identify, out),
        "eval-security" => cmd_eval(&cfg, EvalMode::Security, out),
        _ => cmd_protocol_demo(&cfg, out),
    }
}

fn usage_error(e: clap::Error) -> Error {
    use clap::error::ErrorKind;
    match e.kind() {
        ErrorKind::MissingSubcommand | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => Error::Usage(
            "missing subcommand (gen-data, train, eval-verify, eval-identify, eval-security, protocol-demo)".into(),
        ),
        _ => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("").trim();
            Error::Usage(first.strip_prefix("error: ").unwrap_or(first).to_string())
        }
    }
}

/// Process entry point: returns the exit code. Errors go to standard error
/// as `ERROR:<category>:<message>`.
pub fn main_entry() -> i32 {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--help" || a == "-h" || a == "--version" || a == "-V") {
        let rest: Vec<String> = args.into_iter().filter(|a| !is_override(a)).collect();
        match Cli::try_parse_from(std::iter::once("gmk".to_string()).chain(rest)) {
            Err(e) => {
                let code = e.exit_code();
                let _ = e.print();
                return code;
            }
            Ok(_) => return 0,
        }
    }
    let env_seed = std::env::var(SEED_ENV).ok();
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(&args, env_seed.as_deref(), &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("ERROR:{}:{}", e.category(), e);
            1
        }
    }
}

fn say(out: &mut dyn Write, line: impl AsRef<str>) -> Result<()> {
    writeln!(out, "{}", line.as_ref()).map_err(|e| Error::io(Path::new("<stdout>"), e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn cmd_gen_data(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<()> {
    let data = generate(&cfg.data)?;
    save_dataset(&cfg.data_dir, &data)?;
    say(
        out,
        format!(
            "wrote {}: {} enrolled, {} genuine, {} impostor samples, d={}",
            cfg.data_dir.display(),
            data.enrolled.len(),
            data.genuine.len(),
            data.impostors.len(),
            data.enrolled.dim()
        ),
    )
}

/// One model to train.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainPoint {
    pub name: String,
    /// Nominal group size `m`, or `N / M` when only `groups` is given.
    pub group_size: f64,
    pub config: ModelConfig,
}

/// Cartesian product of the sweep axes for `n` enrolled signatures.
pub fn train_points(cfg: &ExperimentConfig, n: usize) -> Result<Vec<TrainPoint>> {
    let sizes: Vec<Option<usize>> = if cfg.sweep.group_size.is_empty() {
        vec![cfg.group_size]
    } else {
        cfg.sweep.group_size.iter().copied().map(Some).collect()
    };
    let or = |v: &[usize], d: usize| if v.is_empty() { vec![d] } else { v.to_vec() };
    let orf = |v: &[f64], d: f64| if v.is_empty() { vec![d] } else { v.to_vec() };
    let mut points = Vec::new();
    for m in &sizes {
        for &s in &or(&cfg.sweep.sparsity, cfg.model.sparsity) {
            for &lambda in &orf(&cfg.sweep.lambda, cfg.model.lambda) {
                for &gamma in &orf(&cfg.sweep.gamma, cfg.model.gamma) {
                    let mut config = cfg.model.clone();
                    config.sparsity = s;
                    config.lambda = lambda;
                    config.gamma = gamma;
                    if let Some(m) = *m {
                        if m > n {
                            return Err(Error::Config(format!("group size {m} exceeds {n} enrolled signatures")));
                        }
                        config.groups = n / m;
                    }
                    let group_size = m.map_or(n as f64 / config.groups as f64, |m| m as f64);
                    points.push(TrainPoint {
                        name: format!("point-{:03}", points.len()),
                        group_size,
                        config,
                    });
                }
            }
        }
    }
    Ok(points)
}

fn train_one(x: &Dataset, point: &TrainPoint, baseline: bool) -> Result<Model> {
    if baseline {
        let n = x.enrolled.len();
        if n % point.config.groups != 0 {
            return Err(Error::Sizing(format!(
                "the random-assignment baseline needs {} groups to divide {n} signatures",
                point.config.groups
            )));
        }
        train_random_assignment_baseline(&x.enrolled, &point.config, n / point.config.groups)
    } else {
        train(&x.enrolled, &point.config)
    }
}

fn training_log(model: &Model, data: &Dataset, baseline: bool) -> String {
    let c = &model.config;
    let mut log = format!(
        "data n={} d={}\nmodel code_len={} sparsity={} groups={} lambda={} gamma={} seed={} baseline={}\n",
        data.enrolled.len(),
        data.enrolled.dim(),
        c.code_len,
        c.sparsity,
        c.groups,
        c.lambda,
        c.gamma,
        c.seed,
        baseline
    );
    for (i, (o, r)) in model.objective_trace.iter().zip(&model.reassigned_trace).enumerate() {
        log.push_str(&format!(
            "iter {} embedding_cost={} within_trace={} between_trace={} total={} reassigned={}\n",
            i + 1,
            o.embedding_cost,
            o.within_trace,
            o.between_trace,
            o.total,
            r
        ));
    }
    let last = model.objective_trace.last().expect("at least one iteration");
    let stopped = if model.objective_trace.len() < c.max_outer_iters {
        "converged"
    } else {
        "iteration cap reached"
    };
    log.push_str(&format!(
        "{stopped} after {} iterations\nfinal within_trace={} total={}\ndegenerate_w_steps={}\n",
        model.objective_trace.len(),
        last.within_trace,
        last.total,
        model.degenerate_w_steps
    ));
    log
}

pub fn cmd_train(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<()> {
    let data = load_dataset(&cfg.data_dir)?;
    let points = train_points(cfg, data.enrolled.len())?;
    let single = cfg.sweep.is_empty();
    ensure_dir(&cfg.model_dir)?;
    let mut index = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::io(&cfg.model_dir, std::io::Error::other(e));
    index
        .write_record(["point", "dir", "m", "S", "lambda", "gamma", "groups", "baseline"])
        .map_err(csv_err)?;
    for point in &points {
        let model = train_one(&data, point, cfg.baseline)?;
        let dir = if single { cfg.model_dir.clone() } else { cfg.model_dir.join(&point.name) };
        save_model(
            &dir,
            &model,
            &[("baseline", cfg.baseline.to_string()), ("group_size", point.group_size.to_string())],
        )?;
        let log = training_log(&model, &data, cfg.baseline);
        fs::write(dir.join(LOG_FILE), &log).map_err(|e| Error::io(&dir.join(LOG_FILE), e))?;
        let last = model.objective_trace.last().expect("at least one iteration");
        say(
            out,
            format!(
                "trained {}: groups={} S={} iterations={} total={} within_trace={}",
                dir.display(),
                model.groups(),
                model.sparsity(),
                model.objective_trace.len(),
                last.total,
                last.within_trace
            ),
        )?;
        let c = &point.config;
        index
            .write_record([
                point.name.clone(),
                point.name.clone(),
                point.group_size.to_string(),
                c.sparsity.to_string(),
                c.lambda.to_string(),
                c.gamma.to_string(),
                c.groups.to_string(),
                cfg.baseline.to_string(),
            ])
            .map_err(csv_err)?;
    }
    if !single {
        let bytes = index.into_inner().map_err(|e| Error::io(&cfg.model_dir, std::io::Error::other(e.to_string())))?;
        let path = cfg.model_dir.join(INDEX_FILE);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Saved models under `model_dir`: every sweep point listed in its index, or
/// the directory itself.
pub fn list_models(model_dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let index = model_dir.join(INDEX_FILE);
    if !index.exists() {
        let name = model_dir
            .file_name()
            .map_or_else(|| "model".to_string(), |n| n.to_string_lossy().into_owned());
        return Ok(vec![(name, model_dir.to_path_buf())]);
    }
    let mut reader = csv::Reader::from_path(&index).map_err(|e| Error::Parse {
        path: index.clone(),
        row: 0,
        column: 0,
        message: e.to_string(),
    })?;
    let mut models = Vec::new();
    for (r, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            path: index.clone(),
            row: r + 2,
            column: 0,
            message: e.to_string(),
        })?;
        let (Some(name), Some(dir)) = (rec.get(0), rec.get(1)) else {
            return Err(Error::Parse {
                path: index.clone(),
                row: r + 2,
                column: 1,
                message: "missing point or dir".into(),
            });
        };
        models.push((name.to_string(), model_dir.join(dir)));
    }
    Ok(models)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalMode {
    Verify,
    Identify,
    Security,
}

impl EvalMode {
    fn file(self) -> &'static str {
        match self {
            Self::Verify => "verify.csv",
            Self::Identify => "identify.csv",
            Self::Security => "security.csv",
        }
    }

    fn columns(self) -> &'static [&'static str] {
        match self {
            Self::Verify => &["tau", "pfp", "pfn_at_pfp05"],
            Self::Identify => &["tau", "pfp", "pfn", "p_epsilon", "dir", "accepted_genuine", "no_accepted_genuine"],
            Self::Security => &["mse_security", "mse_privacy", "beta"],
        }
    }
}

/// Metric values of one model, in the order of [`EvalMode::columns`].
pub fn evaluate(model: &Model, data: &Dataset, mode: EvalMode, seed: u64) -> Result<Vec<String>> {
    let queries = QuerySet::from_dataset(data, model)?;
    Ok(match mode {
        EvalMode::Verify => {
            let roc = verification_sweep(model, &queries, seed)?;
            let p = roc.operating_point(TARGET_PFP);
            vec![p.tau.to_string(), p.pfp.to_string(), p.pfn.to_string()]
        }
        EvalMode::Identify => {
            let r = identification_report(model, &queries, TARGET_PFP)?;
            vec![
                r.tau.to_string(),
                r.pfp.to_string(),
                r.pfn.to_string(),
                r.p_epsilon.to_string(),
                r.dir.to_string(),
                r.accepted_genuine.to_string(),
                r.no_accepted_genuine.to_string(),
            ]
        }
        EvalMode::Security => {
            let r = security_report(&data.enrolled, &queries, model)?;
            vec![r.mse_security.to_string(), r.mse_privacy.to_string(), r.beta.to_string()]
        }
    })
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::io(path, std::io::Error::other(e));
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn cmd_eval(cfg: &ExperimentConfig, mode: EvalMode, out: &mut dyn Write) -> Result<()> {
    let data = load_dataset(&cfg.data_dir)?;
    ensure_dir(&cfg.metrics_dir)?;
    let mut header = vec!["point", "m", "S", "lambda", "gamma", "groups"];
    header.extend_from_slice(mode.columns());
    let mut rows = Vec::new();
    for (name, dir) in list_models(&cfg.model_dir)? {
        let model = load_model(&dir)?;
        let c = &model.config;
        let mut row = vec![
            name.clone(),
            (model.assignment.len() as f64 / model.groups() as f64).to_string(),
            c.sparsity.to_string(),
            c.lambda.to_string(),
            c.gamma.to_string(),
            c.groups.to_string(),
        ];
        let metrics = evaluate(&model, &data, mode, cfg.model.seed)?;
        if mode == EvalMode::Verify {
            let queries = QuerySet::from_dataset(&data, &model)?;
            let roc = verification_sweep(&model, &queries, cfg.model.seed)?;
            let roc_rows: Vec<Vec<String>> = roc
                .points()
                .iter()
                .map(|p| vec![p.tau.to_string(), p.pfp.to_string(), p.pfn.to_string()])
                .collect();
            write_csv(&cfg.metrics_dir.join(format!("roc-{name}.csv")), &["tau", "pfp", "pfn"], &roc_rows)?;
        }
        let summary: Vec<String> = mode
            .columns()
            .iter()
            .zip(&metrics)
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        say(out, format!("{name}: {}", summary.join(" ")))?;
        row.extend(metrics);
        rows.push(row);
    }
    let path = cfg.metrics_dir.join(mode.file());
    write_csv(&path, &header, &rows)?;
    say(out, format!("wrote {}", path.display()))
}

/// The code sent by the client in the demo.
pub fn demo_query(cfg: &ExperimentConfig, model: &Model) -> Result<TernaryCode> {
    let i = cfg.protocol.query;
    let out_of_range = |n: usize| {
        Error::InvalidInput(format!(
            "query {i} out of range: {} split has {n} entries",
            cfg.protocol.source.name()
        ))
    };
    match cfg.protocol.source {
        QuerySource::Enrolled => {
            let n = model.codes.len();
            (i < n).then(|| model.codes.column(i).clone()).ok_or_else(|| out_of_range(n))
        }
        QuerySource::Genuine | QuerySource::Impostor => {
            let data = load_dataset(&cfg.data_dir)?;
            let split = if cfg.protocol.source == QuerySource::Genuine { &data.genuine } else { &data.impostors };
            if i >= split.len() {
                return Err(out_of_range(split.len()));
            }
            encode_query(model, &split.column(i))
        }
    }
}

pub fn cmd_protocol_demo(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<()> {
    let model = load_model(&cfg.model_dir)?;
    let p = demo_query(cfg, &model)?;
    let tau = cfg.protocol.tau;
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.protocol.seed);
    let keys = ProtocolKeys::generate(&cfg.protocol.security, &mut rng)?;
    let run = run_protocol_with_keys(&p, &model.representations, tau, &keys, &cfg.protocol.security, &mut rng)?;
    let plaintext = (0..model.groups())
        .map(|g| verify(&model, &p, g, tau))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .any(|a| a);
    let bytes = run.transcript.to_bytes()?;
    if let Some(parent) = cfg.transcript.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    fs::write(&cfg.transcript, &bytes).map_err(|e| Error::io(&cfg.transcript, e))?;
    say(
        out,
        format!(
            "source={} query={} tau={} groups={} code_len={} limbs={}",
            cfg.protocol.source.name(),
            cfg.protocol.query,
            tau,
            model.groups(),
            p.len(),
            run.transcript.limbs
        ),
    )?;
    for m in &run.transcript.messages {
        say(
            out,
            format!(
                "round {} {:?} payloads={} bytes={}",
                m.round,
                m.sender,
                m.payloads.len(),
                m.to_bytes()?.len()
            ),
        )?;
    }
    let word = |a: bool| if a { "accept" } else { "reject" };
    say(out, format!("decision={}", word(run.decision.accept)))?;
    say(out, format!("plaintext_decision={}", word(plaintext)))?;
    say(out, format!("transcript={} ({} bytes)", cfg.transcript.display(), bytes.len()))
}
