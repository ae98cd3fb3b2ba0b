//! Command-line pipeline: `generate`, `split`, `train`, `eval`, `search` and
//! `report`. Every command writes its outputs atomically next to the
//! resolved config that produced them.

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{RunConfig, SplitMode, TrainerKind};
use crate::data::{
    generate_synthetic, generic_split, interactions_csv, kuairec_split, read_episodes, read_interactions, write_atomic,
    write_dir, write_episodes, Dataset, Group, RatingKind, SplitBundle,
};
use crate::error::{Error, Result};
use crate::eval::{evaluate_scenario, parse_report_csv, render_comparison, render_report, report_csv, ReportRow};
use crate::nn::{load_checkpoint, save_checkpoint, Model, ModelContext, ModelKind, Task};
use crate::search::{random_search, write_trial_log, SearchSpace, TrialConfig};
use crate::train::{train_meta, train_standard, write_history, MetaOrder, TrainOutcome};

pub const OUT_ENV: &str = "COLDSTART_OUT";
pub const CONFIG_FILE: &str = "config.txt";
pub const FINGERPRINT_FILE: &str = "fingerprint.txt";
pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const HISTORY_FILE: &str = "history.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const TRAIN_INTERACTIONS_FILE: &str = "train_interactions.csv";
pub const TRIALS_FILE: &str = "trials.csv";
pub const BEST_CONFIG_FILE: &str = "best_config.txt";
pub const ORACLE_FILE: &str = "oracle.ckpt";

/// Exit code for usage and configuration errors.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "coldstart", version, about = "Cold-start recommendation benchmark pipeline")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic latent-factor dataset and its oracle checkpoint.
    Generate(GenerateArgs),
    /// Split a dataset into train, validation and the four test groups.
    Split(SplitArgs),
    /// Train a model on a split.
    Train(TrainArgs),
    /// Score episode files with a checkpoint.
    Eval(EvalArgs),
    /// Random hyperparameter search.
    Search(SearchArgs),
    /// Merge report CSVs into a comparison grid.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Config file of `section.key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, env = OUT_ENV)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long, value_parser = ["generic", "kuairec"])]
    pub mode: Option<String>,
    #[arg(long)]
    pub support_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_parser = ["meta", "standard"])]
    pub trainer: Option<String>,
    #[arg(long, value_parser = ["first", "second"])]
    pub order: Option<String>,
    /// Output directory of `split`.
    #[arg(long)]
    pub split_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Episode files, one test group each.
    #[arg(long, num_args = 1.., required = true)]
    pub episodes: Vec<PathBuf>,
    #[arg(long, value_parser = ["meta", "direct"])]
    pub path: Option<String>,
    /// ndcg@K or auc.
    #[arg(long)]
    pub metric: Option<String>,
    #[arg(long)]
    pub inner_steps: Option<usize>,
    #[arg(long)]
    pub inner_lr: Option<f64>,
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long)]
    pub split_dir: Option<PathBuf>,
    /// Model label in the report.
    #[arg(long, default_value = "model")]
    pub name: String,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Search space file; the built-in grid when omitted.
    #[arg(long)]
    pub space: Option<PathBuf>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub split_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report CSVs written by `eval`.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, env = OUT_ENV)]
    pub out: Option<PathBuf>,
}

/// A failed command: message plus process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if matches!(e, Error::Config(_)) { EXIT_USAGE } else { 1 };
        let message = match e {
            Error::Config(list) => format!("invalid configuration:\n  {}", list.join("\n  ")),
            other => other.to_string(),
        };
        Failure { code, message }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parses `args` (program name first), runs the command and returns the exit
/// code. Output for the user goes to stdout, errors to stderr.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(f) => {
            eprintln!("error: {f}");
            f.code
        }
    }
}

/// Runs a parsed command and returns what it would print.
pub fn run(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Split(a) => cmd_split(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Search(a) => cmd_search(a),
        Command::Report(a) => cmd_report(a),
    }
}

fn load_config(common: &CommonArgs, required: bool, extra: &[(&str, String)]) -> CliResult<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) if !p.is_file() => {
            return Err(Failure { code: EXIT_USAGE, message: format!("config file not found: {}", p.display()) })
        }
        Some(p) => RunConfig::load_settings(p)?,
        None if required => return Err(Failure { code: EXIT_USAGE, message: "--config is required".into() }),
        None => RunConfig::default(),
    };
    let mut pairs: Vec<(String, String)> = Vec::new();
    let mut errors = Vec::new();
    for o in &common.overrides {
        match o.split_once('=') {
            Some((k, v)) => pairs.push((k.trim().to_string(), v.trim().to_string())),
            None => errors.push(format!("--set {o}: expected KEY=VALUE")),
        }
    }
    if let Some(seed) = common.seed {
        pairs.push(("seed".into(), seed.to_string()));
    }
    pairs.extend(extra.iter().map(|(k, v)| (k.to_string(), v.clone())));
    if let Err(Error::Config(e)) = cfg.apply(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str()))) {
        errors.extend(e);
    }
    errors.extend(cfg.validate());
    if !errors.is_empty() {
        return Err(Error::Config(errors).into());
    }
    Ok(cfg)
}

fn out_dir(common: &CommonArgs, cfg: &RunConfig) -> CliResult<PathBuf> {
    common.out.clone().or_else(|| cfg.out.clone()).ok_or_else(|| Failure {
        code: EXIT_USAGE,
        message: format!("no output directory: pass --out, set {OUT_ENV} or set `out` in the config"),
    })
}

fn path_arg(key: &'static str, p: &Option<PathBuf>) -> Option<(&'static str, String)> {
    p.as_ref().map(|p| (key, p.display().to_string()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes())
}

fn write_config(dir: &Path, cfg: &RunConfig) -> Result<()> {
    write_text(&dir.join(CONFIG_FILE), &cfg.resolved())?;
    write_text(&dir.join(FINGERPRINT_FILE), &format!("{}\n", cfg.fingerprint()))
}

fn cmd_generate(a: GenerateArgs) -> CliResult<String> {
    let cfg = load_config(&a.common, false, &[])?;
    let out = out_dir(&a.common, &cfg)?;
    let data = generate_synthetic(&cfg.synthetic_spec())?;
    write_dir(&data.dataset, &out)?;
    let task = match data.dataset.rating_kind {
        RatingKind::Binary => Task::Classification,
        RatingKind::Scale { .. } => Task::Rating,
    };
    let mut spec = cfg.model_spec(&data.dataset);
    spec.kind = ModelKind::LatentOracle;
    spec.task = task;
    let (_, init) = Model::new(&spec, 0)?;
    let params = init.with_tensors(vec![data.user_latents.clone(), data.item_latents.clone()])?;
    save_checkpoint(&out.join(ORACLE_FILE), &spec, &params, &cfg.fingerprint())?;
    write_config(&out, &cfg)?;
    let d = &data.dataset;
    Ok(format!(
        "generated {} users, {} items, {} interactions in {}\n",
        d.num_users(),
        d.num_items(),
        d.interactions.len(),
        out.display()
    ))
}

fn episodes_file(dir: &Path, group: Group) -> PathBuf {
    dir.join(format!("{group}.episodes"))
}

fn cmd_split(a: SplitArgs) -> CliResult<String> {
    let mut extra: Vec<(&str, String)> = Vec::new();
    extra.extend(path_arg("data.dir", &a.data_dir));
    extra.extend(a.mode.clone().map(|m| ("split.mode", m)));
    extra.extend(a.support_size.map(|s| ("split.support_size", s.to_string())));
    let cfg = load_config(&a.common, false, &extra)?;
    let out = out_dir(&a.common, &cfg)?;
    let d = cfg.dataset()?;
    let seed = crate::derive_seed(cfg.seed, "split", 0);
    let mut summary = format!("# fingerprint {}\n", cfg.fingerprint());
    let bundle = match cfg.split_mode {
        SplitMode::Generic => generic_split(&d, &cfg.split, seed),
        SplitMode::Kuairec => {
            let (part, bundle) = kuairec_split(&d, &cfg.split, seed)?;
            for (name, set) in part.sets() {
                write_text(&out.join(format!("partition_{name}.csv")), &interactions_csv(&d, set))?;
                summary.push_str(&format!("partition_{name}\t{}\n", set.len()));
            }
            bundle
        }
    };
    write_split(&out, &d, &bundle)?;
    summary.push_str(&bundle.summary());
    write_text(&out.join(SUMMARY_FILE), &summary)?;
    write_config(&out, &cfg)?;
    Ok(summary)
}

fn write_split(out: &Path, d: &Dataset, bundle: &SplitBundle) -> Result<()> {
    write_text(&out.join(TRAIN_INTERACTIONS_FILE), &interactions_csv(d, &bundle.train_interactions))?;
    for g in [Group::Train, Group::Validation].into_iter().chain(Group::TESTS) {
        write_episodes(&episodes_file(out, g), d, bundle.episodes(g))?;
    }
    Ok(())
}

/// The full dataset and its training subset as recorded by `split`.
struct LoadedSplit {
    full: Dataset,
    train: Dataset,
    dir: PathBuf,
}

fn load_split(cfg: &RunConfig) -> Result<LoadedSplit> {
    let dir = cfg
        .split_dir
        .clone()
        .ok_or_else(|| Error::Config(vec!["split.dir is required (or pass --split-dir)".into()]))?;
    let full = cfg.dataset()?;
    let train_interactions = read_interactions(&dir.join(TRAIN_INTERACTIONS_FILE), &full.users, &full.items)?;
    let train = full.with_interactions(train_interactions);
    Ok(LoadedSplit { full, train, dir })
}

fn train_with(cfg: &RunConfig, split: &LoadedSplit) -> Result<(Model, TrainOutcome)> {
    let train_eps = read_episodes(&episodes_file(&split.dir, Group::Train), &split.full)?;
    let val_eps = read_episodes(&episodes_file(&split.dir, Group::Validation), &split.full)?;
    let spec = cfg.model_spec(&split.train);
    let (model, init) = Model::new(&spec, crate::derive_seed(cfg.seed, "model", 0))?;
    let ctx = ModelContext::new(&spec, &split.train)?;
    let tc = cfg.train_config();
    let outcome = match cfg.trainer {
        TrainerKind::Meta => train_meta(&model, &ctx, &init, &train_eps, &val_eps, &tc)?,
        TrainerKind::Standard => train_standard(&model, &ctx, &init, &train_eps, &val_eps, &tc)?,
    };
    Ok((model, outcome))
}

fn cmd_train(a: TrainArgs) -> CliResult<String> {
    let mut extra: Vec<(&str, String)> = Vec::new();
    extra.extend(a.trainer.clone().map(|t| ("train.trainer", t)));
    extra.extend(a.order.clone().map(|o| ("train.order", o)));
    extra.extend(path_arg("split.dir", &a.split_dir));
    let cfg = load_config(&a.common, true, &extra)?;
    let out = out_dir(&a.common, &cfg)?;
    let split = load_split(&cfg)?;
    let (model, outcome) = train_with(&cfg, &split)?;
    let fp = cfg.fingerprint();
    save_checkpoint(&out.join(CHECKPOINT_FILE), &model.spec, &outcome.params, &fp)?;
    write_history(&out.join(HISTORY_FILE), &outcome.history)?;
    write_config(&out, &cfg)?;
    let order = match cfg.trainer {
        TrainerKind::Meta => {
            format!(" ({} order)", if cfg.train.order == MetaOrder::First { "first" } else { "second" })
        }
        TrainerKind::Standard => String::new(),
    };
    Ok(format!(
        "trained {}{order}: best epoch {} of {}, validation loss {:.6}\nfingerprint {fp}\n",
        cfg.trainer.as_str(),
        outcome.best_epoch,
        outcome.history.len().saturating_sub(1),
        outcome.best_val_loss()
    ))
}

fn cmd_eval(a: EvalArgs) -> CliResult<String> {
    let mut extra: Vec<(&str, String)> = Vec::new();
    extra.extend(path_arg("data.dir", &a.data_dir));
    extra.extend(path_arg("split.dir", &a.split_dir));
    extra.extend(a.inner_steps.map(|s| ("train.eval_inner_steps", s.to_string())));
    extra.extend(a.inner_lr.map(|s| ("train.inner_lr", s.to_string())));
    extra.extend(a.path.clone().map(|p| ("eval.path", p)));
    extra.extend(a.metric.clone().map(|m| ("eval.metric", m)));
    let cfg = load_config(&a.common, false, &extra)?;
    let out = out_dir(&a.common, &cfg)?;
    let ckpt = load_checkpoint(&a.checkpoint)?;
    let split = load_split(&cfg)?;
    let ctx = ModelContext::new(&ckpt.model.spec, &split.train)?;
    let mut reports = Vec::new();
    for file in &a.episodes {
        let eps = read_episodes(file, &split.full)?;
        let mut r = evaluate_scenario(&ckpt.model, &ctx, &ckpt.params, &eps, cfg.path, cfg.metric)?;
        r.model = a.name.clone();
        r.fingerprint = ckpt.fingerprint.clone();
        reports.push(r);
    }
    let mut shown = String::new();
    for r in &reports {
        let table = format!("# fingerprint {}\n{}", r.fingerprint, render_report(std::slice::from_ref(r)));
        let stem = format!("{}_{}", r.scenario, r.metric).replace('@', "");
        write_text(&out.join(format!("{stem}.txt")), &table)?;
        write_text(&out.join(format!("{stem}.csv")), &report_csv(&[ReportRow::from(r)]))?;
        if r.excluded > 0 {
            shown.push_str(&format!("# {}: {} episodes with an undefined metric excluded\n", r.scenario, r.excluded));
        }
    }
    let all = render_report(&reports);
    write_text(&out.join("report.txt"), &format!("# fingerprint {}\n{all}", ckpt.fingerprint))?;
    write_text(&out.join("report.csv"), &report_csv(&reports.iter().map(ReportRow::from).collect::<Vec<_>>()))?;
    write_config(&out, &cfg)?;
    Ok(shown + &all)
}

/// `base` with a sampled trial applied and the trial seed as master seed.
pub fn trial_config(base: &RunConfig, trial: &TrialConfig, seed: u64) -> Result<RunConfig> {
    let mut cfg = base.clone();
    cfg.apply(trial.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
    cfg.seed = seed;
    let errors = cfg.validate();
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(errors))
    }
}

fn cmd_search(a: SearchArgs) -> CliResult<String> {
    let mut extra: Vec<(&str, String)> = Vec::new();
    extra.extend(a.budget.map(|b| ("search.budget", b.to_string())));
    extra.extend(path_arg("split.dir", &a.split_dir));
    let cfg = load_config(&a.common, false, &extra)?;
    let out = out_dir(&a.common, &cfg)?;
    let space = match &a.space {
        Some(p) => SearchSpace::load(p)?,
        None => SearchSpace::default_grid(),
    };
    let mut probe = cfg.clone();
    let mut unknown = Vec::new();
    for (k, values) in &space.dims {
        for v in values {
            if let Err(e) = probe.set(k, v) {
                unknown.push(format!("search space {k} = {v}: {e}"));
            }
        }
    }
    if !unknown.is_empty() {
        return Err(Error::Config(unknown).into());
    }
    let split = load_split(&cfg)?;
    let outcome = random_search(&space, cfg.search_budget, cfg.seed, |trial, seed| {
        let (_, trained) = train_with(&trial_config(&cfg, trial, seed)?, &split)?;
        Ok(trained.best_val_loss())
    })?;
    write_trial_log(&out.join(TRIALS_FILE), &outcome.trials)?;
    let best = outcome.best_trial();
    let winner = trial_config(&cfg, &best.config, best.seed)?;
    write_text(&out.join(BEST_CONFIG_FILE), &winner.resolved())?;
    write_config(&out, &cfg)?;
    let failed = outcome.trials.iter().filter(|t| !t.val_loss.is_finite()).count();
    Ok(format!(
        "{} trials ({failed} diverged or failed); best trial {} with validation loss {:.6}\n{}",
        outcome.trials.len(),
        best.index,
        best.val_loss,
        winner.resolved()
    ))
}

fn cmd_report(a: ReportArgs) -> CliResult<String> {
    let mut rows = Vec::new();
    for p in &a.inputs {
        let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
        rows.extend(parse_report_csv(&p.display().to_string(), &text)?);
    }
    let grid = render_comparison(&rows);
    if let Some(out) = &a.out {
        write_text(&out.join("comparison.txt"), &grid)?;
        write_text(&out.join("merged.csv"), &report_csv(&rows))?;
    }
    Ok(grid)
}
