use std::fs::File;
use std::io::BufWriter;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use chasepi_core::distfit::{fit_phases, PhaseFits, DEFAULT_BOOTSTRAP};
use chasepi_core::evaluate::{
    default_bins, evaluate_predictions, event_calibration, precision_sweep, win_rate_by_threshold, write_calibration_csv,
    write_metrics_csv, write_pressure_curves_csv, write_sweep_csv, write_win_rates_csv, Grouping, MembershipRule,
};
use chasepi_core::ingest::{build_sequences, filter_corpus, load_dir, load_match_file, Corpus, CorpusFilter, MatchFormat};
use chasepi_core::interval::Interval;
use chasepi_core::markov::{select_order, split_by_match, Discretizer, PRECISION_SWEEP};
use chasepi_core::models::{ModelSet, DEFAULT_CONFIDENCE};
use chasepi_core::phase::PhaseScheme;
use chasepi_core::strategy::{default_zone_table, recommend, ZoneTable};
use chasepi_service::cli::{parse_pi_list, parse_state};
use chasepi_service::engine::calculator;
use chasepi_service::journal::Journal;
use chasepi_service::{serve, AppState, Engine, EngineConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "chasepi", version, about = "Pressure Index modelling for T20 run chases")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse match files, filter them and write a PI corpus.
    Ingest(IngestArgs),
    /// Train transition models on a seeded match split.
    BuildModel(BuildArgs),
    /// Compare model orders by held-out likelihood, AIC and BIC.
    SelectOrder(SelectArgs),
    /// Fit the per-phase PI distributions.
    FitPhases(FitArgs),
    /// Score saved models on the matches they were not trained on.
    Evaluate(EvalArgs),
    /// Predict the PI at the end of one over.
    Predict(PredictArgs),
    /// Zone recommendation for a match state.
    Recommend(RecommendArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
    /// Export or check a zone table.
    #[command(subcommand)]
    Zones(ZonesCommand),
}

#[derive(Args)]
struct IngestArgs {
    /// A match file or a directory of them.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "json")]
    format: MatchFormat,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    resource_table: Option<PathBuf>,
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Successful chases must bat more than this many overs.
    #[arg(long, default_value_t = 18)]
    min_overs_if_won: u32,
    /// Failed chases must lose by at most this many runs.
    #[arg(long, default_value_t = 10)]
    max_loss_margin: u32,
    /// Keep every match with a result.
    #[arg(long)]
    no_filter: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelKind {
    Phase,
    Global,
    Both,
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 3)]
    order: usize,
    #[arg(long, default_value_t = 0.1)]
    precision: f64,
    #[arg(long, value_enum, default_value = "both")]
    kind: ModelKind,
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Phase fits to bundle; fitted on the training split when absent.
    #[arg(long)]
    fits: Option<PathBuf>,
    /// Bootstrap replicates when fitting on the training split.
    #[arg(long, default_value_t = 0)]
    bootstrap: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 5)]
    k_max: usize,
    #[arg(long, default_value_t = 0.1)]
    precision: f64,
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = DEFAULT_BOOTSTRAP)]
    bootstrap: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ModelArgs {
    /// Directory written by `build-model`.
    #[arg(long, env = "CHASEPI_MODEL_DIR")]
    models: PathBuf,
    /// Phase fits overriding the directory's own.
    #[arg(long)]
    fits: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_CONFIDENCE)]
    confidence: f64,
}

impl ModelArgs {
    fn load(&self) -> Result<ModelSet> {
        let fits = self.fits.as_deref().map(PhaseFits::load).transpose()?;
        ModelSet::load_dir(&self.models, fits).with_context(|| format!("loading models from {}", self.models.display()))
    }
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    corpus: PathBuf,
    /// JSON report.
    #[arg(long)]
    out: PathBuf,
    /// Directory for the CSV exports.
    #[arg(long)]
    csv_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    calibration_bins: usize,
    #[arg(long, value_enum, default_value = "any-over")]
    membership: Membership,
}

#[derive(Clone, Copy, ValueEnum)]
enum Membership {
    AnyOver,
    LastOver,
}

impl From<Membership> for MembershipRule {
    fn from(m: Membership) -> Self {
        match m {
            Membership::AnyOver => MembershipRule::AnyOver,
            Membership::LastOver => MembershipRule::LastOver,
        }
    }
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Over whose end-of-over PI is predicted.
    #[arg(long)]
    over: u32,
    /// The preceding over-end PI values, oldest first.
    #[arg(long)]
    pi: String,
}

#[derive(Args)]
struct RecommendArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, env = "CHASEPI_ZONE_TABLE")]
    zones: Option<PathBuf>,
    #[arg(long, env = "CHASEPI_RESOURCE_TABLE")]
    resource_table: Option<PathBuf>,
    #[arg(long)]
    weights: Option<PathBuf>,
    /// For example `t=12;pi=1.3,1.4,1.5;venue=home;target=170;runs=95;wkts=3`.
    #[arg(long)]
    state: String,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = "CHASEPI_MODEL_DIR")]
    models: PathBuf,
    #[arg(long)]
    fits: Option<PathBuf>,
    #[arg(long, env = "CHASEPI_ZONE_TABLE")]
    zones: Option<PathBuf>,
    #[arg(long, env = "CHASEPI_RESOURCE_TABLE")]
    resource_table: Option<PathBuf>,
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long)]
    confidence: Option<f64>,
    #[arg(long, env = "CHASEPI_LISTEN", default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    #[arg(long, env = "CHASEPI_JOURNAL")]
    journal: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ZonesCommand {
    /// Write the built-in zone table as CSV.
    Export {
        #[arg(long)]
        out: PathBuf,
    },
    /// Check that a zone CSV tiles every section.
    Validate {
        #[arg(long)]
        input: PathBuf,
    },
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    match Cli::parse().command {
        Command::Ingest(a) => ingest(a),
        Command::BuildModel(a) => build_model(a),
        Command::SelectOrder(a) => select(a),
        Command::FitPhases(a) => fit(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Predict(a) => predict(a),
        Command::Recommend(a) => recommend_cmd(a),
        Command::Serve(a) => serve_cmd(a),
        Command::Zones(z) => zones(z),
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let f = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(f, value)?;
    Ok(())
}

fn print_json(value: &impl Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn load_corpus(path: &Path) -> Result<Corpus> {
    Corpus::load(path).with_context(|| format!("reading corpus {}", path.display()))
}

fn ingest(a: IngestArgs) -> Result<()> {
    let calc = calculator(a.resource_table.as_deref(), a.weights.as_deref())?;
    let matches = if a.input.is_dir() {
        let (ok, failed) = load_dir(&a.input, a.format)?;
        for (path, e) in &failed {
            tracing::warn!(%path, error = %e, "skipping match file");
        }
        ok
    } else {
        vec![load_match_file(&a.input, a.format)?]
    };
    let filter = CorpusFilter {
        min_overs_batted_if_won: a.min_overs_if_won,
        max_loss_margin: a.max_loss_margin,
    };
    let (kept, summary) = if a.no_filter {
        let n = matches.len();
        let (kept, mut s) = filter_corpus(matches, &CorpusFilter {
            min_overs_batted_if_won: 0,
            max_loss_margin: u32::MAX,
        });
        s.excluded = n - kept.len() - s.dropped_no_result;
        (kept, s)
    } else {
        filter_corpus(matches, &filter)
    };
    let mut corpus = Corpus::new(build_sequences(&kept, &calc));
    corpus.filter = Some(summary.clone());
    corpus.resource_table = Some(match &a.resource_table {
        Some(p) => p.display().to_string(),
        None => "bundled".into(),
    });
    corpus.save(&a.out)?;
    println!(
        "{} sequences written to {} (retained {}, excluded {}, no result {}, ties {})",
        corpus.sequences.len(),
        a.out.display(),
        summary.retained,
        summary.excluded,
        summary.dropped_no_result,
        summary.ties_retained
    );
    Ok(())
}

fn build_model(a: BuildArgs) -> Result<()> {
    let corpus = load_corpus(&a.corpus)?;
    let seqs = &corpus.sequences;
    let split = split_by_match(seqs.len(), a.train_fraction, a.seed)?;
    let train = split.train(seqs);
    let scheme = PhaseScheme::default();
    let fits = match &a.fits {
        Some(p) => PhaseFits::load(p)?,
        None => {
            let owned: Vec<_> = train.iter().map(|s| (*s).clone()).collect();
            fit_phases(&owned, &scheme, a.bootstrap, a.seed)?
        }
    };
    let (phase_wise, global) = match a.kind {
        ModelKind::Phase => (true, false),
        ModelKind::Global => (false, true),
        ModelKind::Both => (true, true),
    };
    let models = ModelSet::train(&train, a.order, Discretizer::new(a.precision)?, scheme, phase_wise, global, fits)?
        .with_split_seed(a.seed);
    models.save_dir(&a.out)?;
    println!(
        "order {} models on {} of {} matches written to {}",
        a.order,
        split.train.len(),
        seqs.len(),
        a.out.display()
    );
    for s in models.summaries() {
        println!("  {:<9} {:>8} transitions {:>6} states", s.name, s.n_transitions, s.n_states);
    }
    Ok(())
}

fn select(a: SelectArgs) -> Result<()> {
    let corpus = load_corpus(&a.corpus)?;
    let report = select_order(&corpus.sequences, a.k_max, Discretizer::new(a.precision)?, a.train_fraction, a.seed)?;
    println!("{:>2} {:>14} {:>14} {:>14} {:>8} {:>9}", "k", "log-lik", "AIC", "BIC", "m/n", "unseen");
    for s in &report.orders {
        println!(
            "{:>2} {:>14.2} {:>14.2} {:>14.2} {:>8.3} {:>9}",
            s.order, s.log_likelihood, s.aic, s.bic, s.ratio, s.uncovered
        );
    }
    match report.recommended {
        Some(k) => println!("recommended order: {k}"),
        None => println!("no order has fewer parameters than observations"),
    }
    if let Some(out) = &a.out {
        write_json(out, &report)?;
    }
    Ok(())
}

fn fit(a: FitArgs) -> Result<()> {
    let corpus = load_corpus(&a.corpus)?;
    let fits = fit_phases(&corpus.sequences, &PhaseScheme::default(), a.bootstrap, a.seed)?;
    for f in &fits.phases {
        let best = f.best();
        let p = f.bootstrap.as_ref().map(|b| format!("{:.3}", b.p_value)).unwrap_or_else(|| "-".into());
        println!(
            "{:<10} n={:<6} {:<12} AIC {:>10.2} KS {:.4} p {}",
            f.phase.as_str(),
            best.n,
            best.family().as_str(),
            best.aic,
            best.ks_statistic,
            p
        );
    }
    for (p, why) in &fits.skipped {
        println!("{:<10} skipped: {why}", p.as_str());
    }
    fits.save(&a.out)?;
    Ok(())
}

fn table_bins() -> Vec<Interval> {
    vec![
        Interval::new(0.0, 0.5),
        Interval::new(0.5, 1.0),
        Interval::new(1.0, 1.5),
        Interval::new(1.5, 2.5),
        Interval::from(2.5),
    ]
}

fn evaluate(a: EvalArgs) -> Result<()> {
    let models = a.model.load()?;
    let corpus = load_corpus(&a.corpus)?;
    let trained = models.training_ids();
    let test: Vec<_> = corpus.sequences.iter().filter(|s| !trained.contains(s.match_id.as_str())).collect();
    if test.is_empty() {
        bail!("every corpus match was used for training");
    }
    let confidence = a.model.confidence;
    let report = evaluate_predictions(&models, &test, confidence)?;
    let rule = MembershipRule::from(a.membership);
    let test_owned: Vec<_> = test.iter().map(|s| (*s).clone()).collect();
    let by_phase = Grouping::Phase { scheme: models.scheme() };
    let win_rates = win_rate_by_threshold(&test_owned, &by_phase, &default_bins(), rule);
    let zone_bins = win_rate_by_threshold(&test_owned, &by_phase, &table_bins(), rule);
    let late = win_rate_by_threshold(&test_owned, &Grouping::Overs { overs: (16..=19).collect() }, &default_bins(), rule);
    let cal_target = event_calibration(&models, &test, Interval::new(0.0, 0.5), confidence, a.calibration_bins)?;
    let cal_accept = event_calibration(&models, &test, Interval::new(0.5, 3.5), confidence, a.calibration_bins)?;
    let seed = models
        .global()
        .or_else(|| chasepi_core::phase::Phase::ALL.iter().find_map(|&p| models.phase_model(p)))
        .and_then(|m| m.metadata.split_seed)
        .unwrap_or(42);
    let sweep = precision_sweep(&corpus.sequences, models.order(), &PRECISION_SWEEP, 0.8, seed)?;

    let g = &report.global;
    println!(
        "{} predictions on {} matches: MAE {:.4} RMSE {:.4} coverage {:.1}% markov {:.1}%",
        g.n_predictions,
        test.len(),
        g.mae,
        g.rmse,
        g.coverage_pct,
        g.markov_usage_pct
    );
    for (p, m) in &report.by_phase {
        println!("  {:<10} n={:<6} MAE {:.4} RMSE {:.4} coverage {:.1}%", p.as_str(), m.n_predictions, m.mae, m.rmse, m.coverage_pct);
    }

    #[derive(Serialize)]
    struct Full<'a> {
        metrics: &'a chasepi_core::evaluate::EvalReport,
        test_matches: usize,
        win_rates_by_phase: &'a chasepi_core::evaluate::WinRateTable,
        win_rates_zone_bins: &'a chasepi_core::evaluate::WinRateTable,
        win_rates_late_overs: &'a chasepi_core::evaluate::WinRateTable,
        calibration_target: &'a chasepi_core::evaluate::CalibrationReport,
        calibration_acceptable: &'a chasepi_core::evaluate::CalibrationReport,
        precision_sweep: &'a [chasepi_core::evaluate::SweepRow],
    }
    let summary = report.clone().without_records();
    write_json(
        &a.out,
        &Full {
            metrics: &summary,
            test_matches: test.len(),
            win_rates_by_phase: &win_rates,
            win_rates_zone_bins: &zone_bins,
            win_rates_late_overs: &late,
            calibration_target: &cal_target,
            calibration_acceptable: &cal_accept,
            precision_sweep: &sweep,
        },
    )?;

    if let Some(dir) = &a.csv_dir {
        std::fs::create_dir_all(dir)?;
        let open = |name: &str| -> Result<BufWriter<File>> { Ok(BufWriter::new(File::create(dir.join(name))?)) };
        write_metrics_csv(&report, open("metrics.csv")?)?;
        write_win_rates_csv(&win_rates, open("win_rates_by_phase.csv")?)?;
        write_win_rates_csv(&zone_bins, open("win_rates_zone_bins.csv")?)?;
        write_win_rates_csv(&late, open("win_rates_late_overs.csv")?)?;
        write_calibration_csv(&cal_target, open("calibration_target.csv")?)?;
        write_calibration_csv(&cal_accept, open("calibration_acceptable.csv")?)?;
        write_sweep_csv(&sweep, open("precision_sweep.csv")?)?;
        write_pressure_curves_csv(&test_owned, open("pressure_curves.csv")?)?;
    }
    Ok(())
}

fn predict(a: PredictArgs) -> Result<()> {
    let models = a.model.load()?;
    let recent = parse_pi_list(&a.pi).map_err(anyhow::Error::msg)?;
    let k = models.order();
    if recent.len() < k {
        bail!("order {k} models need {k} PI values, got {}", recent.len());
    }
    let p = models.predict(&recent[recent.len() - k..], a.over, a.model.confidence)?;
    print_json(&p)
}

fn recommend_cmd(a: RecommendArgs) -> Result<()> {
    let models = a.model.load()?;
    let state = parse_state(&a.state).map_err(anyhow::Error::msg)?;
    let table = match &a.zones {
        Some(p) => ZoneTable::load(p)?,
        None => default_zone_table(),
    };
    let calc = calculator(a.resource_table.as_deref(), a.weights.as_deref())?;
    let r = recommend(&state, &models, &table, &calc, a.model.confidence)?;
    print_json(&r)
}

fn serve_cmd(a: ServeArgs) -> Result<()> {
    let config = EngineConfig {
        model_dir: a.models,
        fits: a.fits,
        zone_table: a.zones,
        resource_table: a.resource_table,
        weights: a.weights,
        confidence: a.confidence,
    };
    let engine = match Engine::load(&config) {
        Ok(e) => Some(e),
        Err(e) => {
            tracing::error!(error = %format!("{e:#}"), "starting without models");
            None
        }
    };
    let events = match &a.journal {
        Some(p) => Journal::read(p)?,
        None => Vec::new(),
    };
    let journal = a.journal.as_deref().map(Journal::open).transpose()?;
    let state = Arc::new(AppState::new(engine, Some(config), journal));
    if !events.is_empty() {
        match state.recover(events) {
            Ok(n) => tracing::info!(events = n, "journal replayed"),
            Err(e) => bail!("journal recovery failed: {}", e.message),
        }
    }
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?
        .block_on(serve(state, a.addr))
}

fn zones(z: ZonesCommand) -> Result<()> {
    match z {
        ZonesCommand::Export { out } => {
            default_zone_table().save(&out)?;
            println!("zone table written to {}", out.display());
        }
        ZonesCommand::Validate { input } => {
            let t = ZoneTable::load(&input)?;
            println!("{}: {} rows, every section tiles [0, inf)", input.display(), t.rows().len());
        }
    }
    Ok(())
}
