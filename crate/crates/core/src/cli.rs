//! Command-line front end. Every command writes `manifest.json` and its
//! results into one output directory.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::dsl::{enumerate_functions, prior_probability, sample_function, SpaceDocument};
use crate::error::{Error, Result};
use crate::experiments::{read_records_csv, resolve_conditions, simulate_participants, write_records_csv, BehavioralRecord, Condition, Regime};
use crate::fit::{consistency, grid_search, write_table_csv, ParamGrid};
use crate::infer::{gibbs_sample, write_samples_csv, GibbsConfig};
use crate::models::{hypothesis_spaces, text_key, ConditionModel, ModelKind, ModelParams};
use crate::rng::{derive_seed, stream};

/// Version string recorded in manifests and printed by `--version`.
pub const BUILD_ID: &str = concat!(env!("CARGO_PKG_VERSION"), "+", env!("CARGO_PKG_NAME"));

/// Default output root when `--out` is absent.
pub const OUT_ENV: &str = "CAUSAL_LAWS_OUT";

#[derive(Debug, Parser)]
#[command(name = "causal-laws", version = BUILD_ID, about = "Causal-law induction and generalization models")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Master seed.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory (default: $CAUSAL_LAWS_OUT/<command> or out/<command>).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Reuse a nonempty output directory.
    #[arg(long, global = true)]
    pub force: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw causal functions from the grammar prior.
    Sample {
        /// `exp1`, `exp2` or a space file.
        #[arg(long, default_value = "exp1")]
        space: String,
        #[arg(short, long, default_value_t = 10)]
        n: usize,
    },
    /// List every causal function with its prior.
    Enumerate {
        #[arg(long, default_value = "exp1")]
        space: String,
    },
    /// Per-task predictive distributions of a model.
    Predict {
        /// Condition id, `exp1`, `exp2`, a file or a directory.
        #[arg(long)]
        condition: String,
        #[arg(long, default_value = "locala")]
        model: ModelKind,
        /// `key=value` list, e.g. `alpha=0.38,beta=0,t=7`.
        #[arg(long, default_value = "")]
        params: String,
        /// near, far or random (default: near for the categorical experiment, random otherwise).
        #[arg(long)]
        regime: Option<String>,
        /// Process-model runs per sequence.
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Fit models to behavioral records by grid search.
    Fit {
        /// Behavioral record CSV.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        condition: String,
        /// A model name or `all`.
        #[arg(long, default_value = "all")]
        model: String,
        /// `exp1`, `exp2` or a grid file (default follows the conditions).
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long, default_value = "")]
        params: String,
        #[arg(long)]
        runs: Option<usize>,
        /// Maximum model cells evaluated per model.
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Synthetic participants answering every scored task.
    Simulate {
        #[arg(long)]
        condition: String,
        #[arg(long, default_value = "uncala")]
        model: ModelKind,
        #[arg(long, default_value = "")]
        params: String,
        /// Comma-separated regimes (default: near,far or random per experiment).
        #[arg(long)]
        regime: Option<String>,
        #[arg(long)]
        runs: Option<usize>,
        /// Participants per condition and regime.
        #[arg(short, long, default_value_t = 10)]
        n: usize,
    },
    /// Inter-participant consistency (Cronbach's alpha) of recorded choices.
    Consistency {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        condition: String,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Sample { .. } => "sample",
            Command::Enumerate { .. } => "enumerate",
            Command::Predict { .. } => "predict",
            Command::Fit { .. } => "fit",
            Command::Simulate { .. } => "simulate",
            Command::Consistency { .. } => "consistency",
        }
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    args: Vec<String>,
    seed: u64,
    jobs: usize,
    out: String,
    version: &'static str,
    started_unix: u64,
    elapsed_seconds: Option<f64>,
    outputs: Vec<String>,
}

struct Output {
    dir: PathBuf,
    files: Vec<String>,
}

impl Output {
    fn prepare(dir: PathBuf, force: bool) -> Result<Self> {
        if dir.exists() {
            let nonempty = std::fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?.next().is_some();
            if nonempty && !force {
                return Err(Error::InvalidParam {
                    name: "out",
                    msg: format!("{} is not empty; pass --force to overwrite", dir.display()),
                });
            }
        }
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Output { dir, files: Vec::new() })
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        self.files.push(name.to_string());
        Ok(BufWriter::new(File::create(&path).map_err(|e| Error::io(&path, e))?))
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w).map_err(|e| Error::io(self.dir.join(name), e))?;
        w.flush().map_err(|e| Error::io(self.dir.join(name), e))
    }
}

fn flush(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn params_from(text: &str, runs: Option<usize>) -> Result<ModelParams> {
    let mut p = ModelParams::default();
    p.apply_kv(text)?;
    if let Some(r) = runs {
        p.runs = r;
        p.validate()?;
    }
    Ok(p)
}

fn default_regimes(conds: &[Condition]) -> Vec<Regime> {
    if conds.iter().any(|c| c.experiment() == Some(1)) {
        vec![Regime::Near, Regime::Far]
    } else {
        vec![Regime::Random]
    }
}

fn regimes(arg: Option<&str>, conds: &[Condition]) -> Result<Vec<Regime>> {
    match arg {
        None => Ok(default_regimes(conds)),
        Some(s) => s.split(',').map(|r| Regime::parse(r.trim())).collect(),
    }
}

fn shared_space(conds: &[Condition]) -> Result<&Condition> {
    let first = conds.first().ok_or_else(|| Error::schema("condition", "no conditions"))?;
    if conds.iter().any(|c| c.feature_space() != first.feature_space()) {
        return Err(Error::schema("condition", "conditions in one run must share a feature space"));
    }
    Ok(first)
}

fn read_records(path: &Path, conds: &[Condition]) -> Result<Vec<BehavioralRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_records_csv(file, conds)
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Run one command inside a pool of `--jobs` workers.
pub fn run(cli: &Cli) -> Result<()> {
    let jobs = cli.global.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if jobs == 0 {
        return Err(Error::InvalidParam {
            name: "jobs",
            msg: "need at least one worker".into(),
        });
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(|e| Error::InvalidParam {
        name: "jobs",
        msg: e.to_string(),
    })?;
    let name = cli.command.name();
    let dir = cli.global.out.clone().unwrap_or_else(|| {
        std::env::var_os(OUT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("out"))
            .join(name)
    });
    let mut out = Output::prepare(dir, cli.global.force)?;
    let started = Instant::now();
    let mut manifest = Manifest {
        command: name,
        args: std::env::args().skip(1).collect(),
        seed: cli.global.seed,
        jobs,
        out: out.dir.display().to_string(),
        version: BUILD_ID,
        started_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        elapsed_seconds: None,
        outputs: Vec::new(),
    };
    let manifest_path = out.dir.join("manifest.json");
    let write_manifest = |m: &Manifest| -> Result<()> {
        let text = serde_json::to_string_pretty(m)? + "\n";
        std::fs::write(&manifest_path, text).map_err(|e| Error::io(&manifest_path, e))
    };
    write_manifest(&manifest)?;
    let result = pool.install(|| dispatch(&cli.command, cli.global.seed, &mut out));
    manifest.elapsed_seconds = Some(started.elapsed().as_secs_f64());
    manifest.outputs = out.files.clone();
    write_manifest(&manifest)?;
    result
}

fn dispatch(cmd: &Command, seed: u64, out: &mut Output) -> Result<()> {
    match cmd {
        Command::Sample { space, n } => cmd_sample(space, *n, seed, out),
        Command::Enumerate { space } => cmd_enumerate(space, out),
        Command::Predict {
            condition,
            model,
            params,
            regime,
            runs,
        } => cmd_predict(condition, *model, &params_from(params, *runs)?, regime.as_deref(), seed, out),
        Command::Fit {
            data,
            condition,
            model,
            grid,
            params,
            runs,
            budget,
        } => cmd_fit(data, condition, model, grid.as_deref(), &params_from(params, *runs)?, *budget, seed, out),
        Command::Simulate {
            condition,
            model,
            params,
            regime,
            runs,
            n,
        } => cmd_simulate(condition, *model, &params_from(params, *runs)?, regime.as_deref(), *n, seed, out),
        Command::Consistency { data, condition } => cmd_consistency(data, condition, out),
    }
}

fn cmd_sample(space: &str, n: usize, seed: u64, out: &mut Output) -> Result<()> {
    let doc = SpaceDocument::load(Path::new(space))?;
    let (space, grammar) = (doc.space(), doc.grammar());
    let mut rng = stream(seed, &[]);
    let mut w = out.create("samples.tsv")?;
    for _ in 0..n {
        let f = sample_function(space, &grammar, &mut rng);
        let p = prior_probability(&f, space, &grammar)?;
        writeln!(w, "{}\t{p}", f.to_text(space)).map_err(|e| Error::io("samples.tsv", e))?;
    }
    flush(w, Path::new("samples.tsv"))
}

fn cmd_enumerate(space: &str, out: &mut Output) -> Result<()> {
    let doc = SpaceDocument::load(Path::new(space))?;
    let (space, grammar) = (doc.space(), doc.grammar());
    let mut w = out.create("hypotheses.tsv")?;
    for (f, p) in enumerate_functions(space, &grammar)? {
        writeln!(w, "{}\t{p}", f.to_text(space)).map_err(|e| Error::io("hypotheses.tsv", e))?;
    }
    flush(w, Path::new("hypotheses.tsv"))
}

fn cmd_predict(condition: &str, model: ModelKind, params: &ModelParams, regime: Option<&str>, seed: u64, out: &mut Output) -> Result<()> {
    let conds = resolve_conditions(condition)?;
    let space = shared_space(&conds)?.feature_space().clone();
    let hyps = hypothesis_spaces(&conds)?;
    let mut w = csv::Writer::from_writer(out.create("predictions.csv")?);
    let mut header: Vec<String> = ["condition", "regime", "position", "task"].map(String::from).to_vec();
    header.extend(space.features().iter().map(|f| format!("rp_{}", f.name)));
    header.push("probability".into());
    w.write_record(&header)?;
    let mut samples_out = None;
    for (cond, hyp) in conds.iter().zip(&hyps) {
        let regime = match regime {
            Some(r) => Regime::parse(r)?,
            None => default_regimes(std::slice::from_ref(cond))[0],
        };
        let mut rng = stream(seed, &[text_key(&cond.id)]);
        let sequence: Vec<usize> = cond
            .sequence_tasks(regime, &mut rng)?
            .into_iter()
            .filter(|&id| cond.tasks[id - 1].scored)
            .collect();
        let preds = ConditionModel::new(model, params, cond, hyp, seed)?.predictions(&sequence)?;
        for (pos, (&task, pred)) in sequence.iter().zip(&preds).enumerate() {
            for (o, p) in pred.outcomes.iter().zip(&pred.probs) {
                let mut row = vec![cond.id.clone(), regime.name().into(), (pos + 1).to_string(), task.to_string()];
                row.extend((0..space.len()).map(|k| space.label(o, k).to_string()));
                row.push(p.to_string());
                w.write_record(&row)?;
            }
        }
        if model == ModelKind::Locala && conds.len() == 1 {
            // the same streams ConditionModel used, so these are its samples
            let cfg = GibbsConfig {
                seed: derive_seed(seed, &[text_key(&cond.id)]),
                ..params.gibbs.clone()
            };
            samples_out = Some(gibbs_sample(&cond.learning, &params.hyper()?, &cfg, hyp)?);
        }
    }
    w.flush().map_err(csv::Error::from)?;
    if let (Some(samples), Some(hyp)) = (samples_out, hyps.first()) {
        write_samples_csv(&samples, hyp, out.create("samples.csv")?)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_fit(
    data: &Path,
    condition: &str,
    model: &str,
    grid: Option<&Path>,
    base: &ModelParams,
    budget: Option<usize>,
    seed: u64,
    out: &mut Output,
) -> Result<()> {
    let conds = resolve_conditions(condition)?;
    let records = read_records(data, &conds)?;
    let grid = match grid {
        Some(p) => ParamGrid::load(p)?,
        None if conds.iter().any(|c| c.experiment() == Some(2)) => ParamGrid::exp2(),
        None => ParamGrid::exp1(),
    };
    let kinds: Vec<ModelKind> = if model == "all" {
        ModelKind::ALL.to_vec()
    } else {
        model.split(',').map(|m| m.trim().parse()).collect::<Result<_>>()?
    };
    #[derive(Serialize)]
    struct Summary {
        model: ModelKind,
        alpha: f64,
        beta: f64,
        gamma: f64,
        t: f64,
        log_likelihood: f64,
        k: usize,
        n: usize,
        bic: f64,
        partial: bool,
        cells_evaluated: usize,
        cells_total: usize,
    }
    let mut summaries = Vec::new();
    let mut partial = None;
    for kind in kinds {
        let fit = grid_search(kind, &grid, base, &records, &conds, budget, seed)?;
        write_table_csv(&fit, out.create(&format!("grid_{kind}.csv"))?)?;
        println!("{kind}: LL {:.2}  BIC {:.2}  (t={}, alpha={}, beta={}, gamma={})", fit.best.log_likelihood, fit.bic, fit.best.t, fit.best.alpha, fit.best.beta, fit.best.gamma);
        if fit.partial {
            partial = Some((fit.cells_evaluated, fit.cells_total));
        }
        summaries.push(Summary {
            model: kind,
            alpha: fit.best.alpha,
            beta: fit.best.beta,
            gamma: fit.best.gamma,
            t: fit.best.t,
            log_likelihood: fit.best.log_likelihood,
            k: fit.k,
            n: fit.n,
            bic: fit.bic,
            partial: fit.partial,
            cells_evaluated: fit.cells_evaluated,
            cells_total: fit.cells_total,
        });
    }
    out.write_json("fit.json", &summaries)?;
    match partial {
        Some((evaluated, total)) => Err(Error::BudgetExhausted { evaluated, total }),
        None => Ok(()),
    }
}

fn cmd_simulate(condition: &str, model: ModelKind, params: &ModelParams, regime: Option<&str>, n: usize, seed: u64, out: &mut Output) -> Result<()> {
    let conds = resolve_conditions(condition)?;
    let space = shared_space(&conds)?.feature_space().clone();
    let hyps = hypothesis_spaces(&conds)?;
    let regimes = regimes(regime, &conds)?;
    let mut records = Vec::new();
    for (cond, hyp) in conds.iter().zip(&hyps) {
        for &r in &regimes {
            let s = derive_seed(seed, &[text_key(&cond.id), text_key(r.name())]);
            records.extend(simulate_participants(model, params, cond, hyp, r, n, s)?);
        }
    }
    write_records_csv(&records, &space, out.create("records.csv")?)
}

fn cmd_consistency(data: &Path, condition: &str, out: &mut Output) -> Result<()> {
    let conds = resolve_conditions(condition)?;
    let records = read_records(data, &conds)?;
    let report = consistency(&records, &conds)?;
    let fmt = |x: Option<f64>| x.map_or_else(String::new, |v| v.to_string());
    let mut w = csv::Writer::from_writer(out.create("consistency_trials.csv")?);
    w.write_record(["condition", "regime", "trial", "participants", "alpha"])?;
    for t in &report.trials {
        w.write_record([t.condition.clone(), t.regime.name().into(), t.trial.to_string(), t.participants.to_string(), fmt(t.alpha)])?;
    }
    w.flush().map_err(csv::Error::from)?;
    let mut w = csv::Writer::from_writer(out.create("consistency_cells.csv")?);
    w.write_record(["condition", "regime", "participants", "mean_alpha", "sd_alpha", "pooled_alpha"])?;
    for c in &report.cells {
        w.write_record([c.condition.clone(), c.regime.name().into(), c.participants.to_string(), fmt(c.mean), fmt(c.sd), fmt(c.pooled)])?;
        println!("{} {}: alpha {} ± {} (pooled {})", c.condition, c.regime.name(), fmt(c.mean), fmt(c.sd), fmt(c.pooled));
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
