//! `kbjoint` command-line driver.
//!
//! Every subcommand reads the same run configuration: an optional TOML file
//! (`--config`) whose values are overridden by flags of the same name.
//! Exit status is 0 on success, 1 for usage or configuration errors and 2 for
//! data errors.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kbjoint::candidates::{
    build_candidates, read_predictions, write_candidates, MentionPrediction,
};
use kbjoint::clues::{clues_to_json, load_clues, mine_clues, prune_clues, ClueSet};
use kbjoint::config::{Mode, RunConfig};
use kbjoint::constraints::dump_constraints;
use kbjoint::eval::{
    diff_analysis, mintzpp, peak_f1, pr_csv, pr_curve, read_ranked, rule_based, write_ranked,
    PeakF1, RankedPrediction,
};
use kbjoint::ilp::write_lp;
use kbjoint::kb_store::{load_triples, read_triples};
use kbjoint::pipeline::{build_program, run_ilp, PipelineParams, SolveReport};
use kbjoint::testbed::{generate, SynthConfig};
use log::info;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "kbjoint",
    version,
    about = "Joint relation extraction with knowledge-base clues"
)]
struct Cli {
    #[command(flatten)]
    run: RunFlags,

    #[command(subcommand)]
    command: Command,
}

/// Overrides for the fields of the run configuration.
#[derive(Debug, Args)]
struct RunFlags {
    /// TOML file with run configuration; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    kappa: Option<f64>,
    #[arg(long, global = true)]
    uniq_threshold: Option<f64>,
    #[arg(long, global = true)]
    conf_threshold: Option<f64>,
    #[arg(long, global = true)]
    top_k: Option<usize>,
    /// One value, or a comma-separated list for a sweep (one output directory per value).
    #[arg(long, global = true, value_delimiter = ',')]
    alpha: Vec<f64>,
    #[arg(long, global = true)]
    mode: Option<ModeArg>,
    /// Keep clues only for this many most frequent candidate relations (0 = all).
    #[arg(long, global = true)]
    max_relations: Option<usize>,
    #[arg(long, global = true)]
    time_budget_ms: Option<u64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Knowledge-base triples (TSV).
    #[arg(long, global = true)]
    triples: Option<PathBuf>,
    /// Mention-level predictions (JSON lines).
    #[arg(long, global = true)]
    predictions: Option<PathBuf>,
    /// Gold triples (TSV).
    #[arg(long, global = true)]
    gold: Option<PathBuf>,
    /// Clue file (JSON).
    #[arg(long, global = true)]
    clues: Option<PathBuf>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Hard,
    Soft,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Ilp,
    RuleBased,
    Mintzpp,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Preset {
    Standard,
    Riedel,
    Noiseless,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Mine clues from the knowledge base and write them as JSON.
    Mine {
        /// Manual clue file merged into the mined clues; manual clues win on conflicts.
        #[arg(long)]
        manual_clues: Option<PathBuf>,
    },
    /// Aggregate mention predictions into per-pair candidates (JSON lines).
    Candidates,
    /// Select predictions with the integer program or a baseline.
    Solve {
        #[arg(long, value_enum, default_value = "ilp")]
        method: Method,
        /// Also write the instantiated constraints to `constraints.tsv`.
        #[arg(long)]
        dump_constraints: bool,
        /// Also write the program to `model.lp`.
        #[arg(long)]
        write_lp: bool,
    },
    /// Score a ranked prediction file against gold triples.
    Eval {
        /// Ranked predictions (TSV) produced by `solve`.
        run: PathBuf,
        /// Second ranked prediction file; writes the difference analysis.
        #[arg(long)]
        baseline: Option<PathBuf>,
    },
    /// Generate a seeded synthetic world.
    Synth {
        #[arg(long, value_enum, default_value = "standard")]
        preset: Preset,
        #[arg(long)]
        pairs: Option<usize>,
        #[arg(long)]
        noise: Option<f64>,
    },
    /// Write the integer program in LP format.
    ExportLp,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }

    fn data(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<kbjoint::Error> for Failure {
    fn from(e: kbjoint::Error) -> Self {
        Failure {
            code: if e.is_config_error() { 1 } else { 2 },
            message: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let (cfg, alphas) = resolve(&cli.run)?;
    match cli.command {
        Command::Mine { manual_clues } => cmd_mine(&cfg, manual_clues.as_deref()),
        Command::Candidates => cmd_candidates(&cfg),
        Command::Solve {
            method,
            dump_constraints,
            write_lp,
        } => cmd_solve(&cfg, &alphas, method, dump_constraints, write_lp),
        Command::Eval { run, baseline } => cmd_eval(&cfg, &run, baseline.as_deref()),
        Command::Synth {
            preset,
            pairs,
            noise,
        } => cmd_synth(&cfg, preset, pairs, noise),
        Command::ExportLp => cmd_export_lp(&cfg),
    }
}

/// Merges the config file with flag overrides and validates the result.
/// Returns the configuration and the alpha values to run.
fn resolve(flags: &RunFlags) -> CliResult<(RunConfig, Vec<f64>)> {
    let mut cfg = match &flags.config {
        Some(path) => RunConfig::load(path).map_err(|e| Failure::usage(e.to_string()))?,
        None => RunConfig::default(),
    };
    macro_rules! apply {
        ($($field:ident),*) => {$(
            if let Some(v) = flags.$field.clone() {
                cfg.$field = v;
            }
        )*};
    }
    apply!(
        kappa,
        uniq_threshold,
        conf_threshold,
        top_k,
        max_relations,
        time_budget_ms,
        seed
    );
    let paths = [
        (&flags.triples, &mut cfg.triples),
        (&flags.predictions, &mut cfg.predictions),
        (&flags.gold, &mut cfg.gold),
        (&flags.clues, &mut cfg.clues),
        (&flags.output_dir, &mut cfg.output_dir),
    ];
    for (flag, field) in paths {
        if flag.is_some() {
            field.clone_from(flag);
        }
    }
    if let Some(mode) = flags.mode {
        cfg.mode = match mode {
            ModeArg::Hard => Mode::Hard,
            ModeArg::Soft => Mode::Soft,
        };
    }
    if let Some(&first) = flags.alpha.first() {
        cfg.alpha = first;
    }
    let alphas = if flags.alpha.is_empty() {
        vec![cfg.alpha]
    } else {
        flags.alpha.clone()
    };
    let mut seen = BTreeSet::new();
    for &a in &alphas {
        RunConfig {
            alpha: a,
            ..cfg.clone()
        }
        .validate()?;
        if !seen.insert(a.to_bits()) {
            return Err(Failure::usage(format!("alpha {a} given twice")));
        }
    }
    Ok((cfg, alphas))
}

fn require<'a>(path: &'a Option<PathBuf>, flag: &str) -> CliResult<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Failure::usage(format!("--{flag} is required (flag or config file)")))
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::data(format!("failed to write {}: {e}", path.display()))
}

/// Writes `contents` to `dir/name`, or to stdout when no directory is configured.
fn emit(dir: Option<&Path>, name: &str, contents: &[u8]) -> CliResult<()> {
    match dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
            let path = dir.join(name);
            fs::write(&path, contents).map_err(|e| io_failure(&path, e))?;
            info!("wrote {}", path.display());
            Ok(())
        }
        None => std::io::stdout()
            .write_all(contents)
            .map_err(|e| Failure::data(format!("failed to write stdout: {e}"))),
    }
}

fn output_dir<'a>(cfg: &'a RunConfig, command: &str) -> CliResult<&'a Path> {
    cfg.output_dir.as_deref().ok_or_else(|| {
        Failure::usage(format!(
            "{command} writes several files; --output-dir is required"
        ))
    })
}

fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("report serialisation");
    text.push('\n');
    text.into_bytes()
}

/// Clues from the clue file, or mined from the triples when no clue file is given.
fn obtain_clues(cfg: &RunConfig) -> CliResult<ClueSet> {
    if let Some(path) = &cfg.clues {
        return Ok(load_clues(path)?);
    }
    let triples = cfg.triples.as_deref().ok_or_else(|| {
        Failure::usage("either --clues or --triples is required (flag or config file)")
    })?;
    let kb = load_triples(triples)?;
    Ok(mine_clues(&kb, cfg.mining_params())?)
}

fn load_mentions(cfg: &RunConfig) -> CliResult<Vec<MentionPrediction>> {
    Ok(read_predictions(require(&cfg.predictions, "predictions")?)?)
}

fn cmd_mine(cfg: &RunConfig, manual: Option<&Path>) -> CliResult<()> {
    let kb = load_triples(require(&cfg.triples, "triples")?)?;
    let mut clues = mine_clues(&kb, cfg.mining_params())?;
    if let Some(path) = manual {
        clues = clues.merge(load_clues(path)?);
    }
    info!("{} clues from {} triples", clues.len(), kb.len());
    emit(
        cfg.output_dir.as_deref(),
        "clues.json",
        clues_to_json(&clues).as_bytes(),
    )
}

fn cmd_candidates(cfg: &RunConfig) -> CliResult<()> {
    let pairs = build_candidates(&load_mentions(cfg)?, cfg.candidate_params())?;
    let mut buf = Vec::new();
    write_candidates(&mut buf, &pairs).expect("in-memory write");
    emit(cfg.output_dir.as_deref(), "candidates.jsonl", &buf)
}

#[derive(Serialize)]
struct BaselineReport {
    method: &'static str,
    pairs: usize,
    clues_used: usize,
    selected: usize,
}

fn ranked_tsv(preds: &[RankedPrediction]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_ranked(&mut buf, preds).expect("in-memory write");
    buf
}

fn cmd_solve(
    cfg: &RunConfig,
    alphas: &[f64],
    method: Method,
    dump: bool,
    lp: bool,
) -> CliResult<()> {
    let out_dir = output_dir(cfg, "solve")?;
    let mentions = load_mentions(cfg)?;
    match method {
        Method::Mintzpp => {
            let preds = mintzpp(&mentions);
            let report = BaselineReport {
                method: "mintzpp",
                pairs: mentions
                    .iter()
                    .map(|m| &m.pair_id)
                    .collect::<BTreeSet<_>>()
                    .len(),
                clues_used: 0,
                selected: preds.len(),
            };
            emit(Some(out_dir), "predictions.tsv", &ranked_tsv(&preds))?;
            emit(Some(out_dir), "report.json", &json(&report))
        }
        Method::RuleBased => {
            let clues = obtain_clues(cfg)?;
            let pairs = build_candidates(&mentions, cfg.candidate_params())?;
            let used = prune_clues(&clues, &pairs, cfg.max_relations);
            let preds = rule_based(&pairs, &used)?;
            let report = BaselineReport {
                method: "rule-based",
                pairs: pairs.len(),
                clues_used: used.len(),
                selected: preds.len(),
            };
            emit(Some(out_dir), "predictions.tsv", &ranked_tsv(&preds))?;
            emit(Some(out_dir), "report.json", &json(&report))
        }
        Method::Ilp => {
            let clues = obtain_clues(cfg)?;
            for &alpha in alphas {
                let run_cfg = RunConfig {
                    alpha,
                    ..cfg.clone()
                };
                let dir = if alphas.len() > 1 {
                    out_dir.join(format!("alpha_{alpha}"))
                } else {
                    out_dir.to_path_buf()
                };
                let out = run_ilp(&mentions, &clues, &PipelineParams::from(&run_cfg))?;
                let report = SolveReport::new(&out, cfg.mode);
                info!(
                    "alpha {alpha}: {} vars, objective {}, optimal {}",
                    report.decision_vars, report.objective, report.optimal
                );
                if !report.optimal {
                    log::warn!("time budget exhausted; the reported selection may be suboptimal");
                }
                emit(Some(&dir), "predictions.tsv", &ranked_tsv(&out.predictions))?;
                emit(Some(&dir), "report.json", &json(&report))?;
                if dump {
                    let text = dump_constraints(
                        &out.program.generated.vars,
                        &out.program.generated.constraints,
                    );
                    emit(Some(&dir), "constraints.tsv", text.as_bytes())?;
                }
                if lp {
                    emit(
                        Some(&dir),
                        "model.lp",
                        write_lp(&out.program.model).as_bytes(),
                    )?;
                }
            }
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct EvalSummary {
    predictions: usize,
    gold: usize,
    peak: Option<PeakF1>,
    baseline_peak: Option<PeakF1>,
}

fn cmd_eval(cfg: &RunConfig, run: &Path, baseline: Option<&Path>) -> CliResult<()> {
    let out_dir = output_dir(cfg, "eval")?;
    let gold: BTreeSet<_> = read_triples(require(&cfg.gold, "gold")?)?
        .into_iter()
        .collect();
    let system = read_ranked(run)?;
    let curve = pr_curve(&system, &gold)?;
    let mut summary = EvalSummary {
        predictions: system.len(),
        gold: gold.len(),
        peak: (!curve.is_empty()).then(|| peak_f1(&curve)),
        baseline_peak: None,
    };
    emit(Some(out_dir), "pr.csv", pr_csv(&curve).as_bytes())?;
    if let Some(path) = baseline {
        let base = read_ranked(path)?;
        let base_curve = pr_curve(&base, &gold)?;
        summary.baseline_peak = (!base_curve.is_empty()).then(|| peak_f1(&base_curve));
        emit(
            Some(out_dir),
            "diff.json",
            &json(&diff_analysis(&base, &system, &gold)),
        )?;
    }
    emit(Some(out_dir), "summary.json", &json(&summary))
}

fn cmd_synth(
    cfg: &RunConfig,
    preset: Preset,
    pairs: Option<usize>,
    noise: Option<f64>,
) -> CliResult<()> {
    let out_dir = output_dir(cfg, "synth")?;
    let mut synth = match preset {
        Preset::Standard => SynthConfig::standard(cfg.seed),
        Preset::Riedel => SynthConfig::riedel(cfg.seed),
        Preset::Noiseless => SynthConfig::noiseless(cfg.seed),
    };
    if let Some(p) = pairs {
        synth.pairs = p;
    }
    if let Some(n) = noise {
        synth.noise = n;
    }
    synth
        .validate()
        .map_err(|e| Failure::usage(e.to_string()))?;
    let world = generate(&synth)?;
    world.write_to_dir(out_dir)?;
    info!(
        "{} KB triples, {} gold triples, {} mentions",
        world.kb.len(),
        world.gold.len(),
        world.predictions.len()
    );
    Ok(())
}

fn cmd_export_lp(cfg: &RunConfig) -> CliResult<()> {
    let mentions = load_mentions(cfg)?;
    let clues = obtain_clues(cfg)?;
    let params = PipelineParams::from(cfg);
    let pairs = build_candidates(&mentions, params.candidates)?;
    let program = build_program(&pairs, &clues, &params)?;
    emit(
        cfg.output_dir.as_deref(),
        "model.lp",
        write_lp(&program.model).as_bytes(),
    )
}
