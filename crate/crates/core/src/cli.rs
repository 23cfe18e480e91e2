//! The `patchleak` command line.
//!
//! Exit status is 0 on success, 2 on a usage error and 1 when the command
//! itself fails. Setting `PATCHLEAK_THREADS` caps the worker threads.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::corpus::{load_corpus, Corpus, BUG_EVENTS_FILE, LABELS_FILE, PATCHES_FILE, TIMELINE_FILE};
use crate::features::infogain::rank_features;
use crate::features::{value_proportions, FeatureGroup, FeatureId, FeatureMask};
use crate::learner::{default_grid, KernelParams};
use crate::linkattack::{link_attack_daily, BugIdExtractor, LinkAttackConfig, DEFAULT_BUG_PATTERN};
use crate::randmodel::{effort_vs_pool_curves, window_vs_budget_curves};
use crate::simulator::{
    default_cdf_start, effort_cdf, random_effort_cdf, random_window_increase, simulate_link_daily,
    simulate_random_daily, simulate_svm_daily, simulation_grid, window_increase, EffortSeries, RankedRun,
    SeverityFilter, SimConfig, DEFAULT_BASELINE_DAYS,
};
use crate::synthgen::{generate_to_dir, SynthConfig};

type CliResult<T = ()> = Result<T, Box<dyn std::error::Error + Send + Sync>>;

#[derive(Parser, Debug)]
#[command(name = "patchleak", version, about = "Measure how patch metadata leaks unannounced security fixes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic corpus.
    Synth {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Feature analysis.
    Features {
        #[command(subcommand)]
        command: FeaturesCommand,
    },
    /// Random-ranker model.
    Randmodel {
        #[command(subcommand)]
        command: RandmodelCommand,
    },
    /// Bug-tracker link attack, one row per day.
    Linkattack {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        absent_means_restricted: bool,
        #[arg(long, default_value = DEFAULT_BUG_PATTERN)]
        bug_pattern: String,
    },
    /// Day-by-day attack simulation.
    Simulate(SimulateArgs),
    /// Join simulation outputs into gnuplot data files.
    Report {
        /// Comma-separated simulate output directories.
        #[arg(long, value_delimiter = ',', required = true)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum FeaturesCommand {
    /// Gain ratio of every feature against the ground truth.
    Rank {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Share of security fixes per value of a nominal feature.
    Proportions {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_enum)]
        feature: NominalFeature,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum NominalFeature {
    Author,
    TopDir,
    FileType,
}

#[derive(Subcommand, Debug)]
enum RandmodelCommand {
    /// Expected effort against pool size and expected window increase
    /// against budget, for constant security fractions.
    Curve {
        #[arg(long, default_value_t = 31)]
        days: usize,
        #[arg(long, default_value_t = 39)]
        daily: u64,
        #[arg(long, value_delimiter = ',', default_value = "0.0032,0.01,0.032,0.1,0.32")]
        fracs: Vec<f64>,
        /// Largest pool size on the effort curves.
        #[arg(long, default_value_t = 1209)]
        max_n: u64,
        #[arg(long, default_value_t = 40)]
        max_budget: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Ranker {
    Svm,
    Random,
    Link,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum SeverityArg {
    All,
    Severe,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum GridArg {
    /// Nine points spread over the full grid.
    Simulation,
    /// The full 110-point grid.
    Full,
}

#[derive(Args, Debug, Serialize)]
struct SimulateArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum)]
    ranker: Ranker,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, value_enum, default_value = "all")]
    severity: SeverityArg,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,7")]
    budget_list: Vec<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "simulation")]
    grid: GridArg,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 100_000)]
    trials: usize,
    /// Feature groups left out of the SVM's features.
    #[arg(long, value_delimiter = ',')]
    exclude: Vec<FeatureGroup>,
    /// First day of the CDF window; defaults to 50 days into the period.
    #[arg(long)]
    from_day: Option<NaiveDate>,
    #[arg(long, default_value_t = 500)]
    max_effort: u64,
    #[arg(long, default_value_t = DEFAULT_BASELINE_DAYS)]
    baseline: f64,
    #[arg(long)]
    absent_means_restricted: bool,
    #[serde(skip)]
    #[arg(long)]
    out: PathBuf,
}

/// Parses `argv` (program name first) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let threads = std::env::var("PATCHLEAK_THREADS").ok().and_then(|v| v.parse::<usize>().ok());
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads.unwrap_or(0)).build();
    let result = match pool {
        Ok(pool) => pool.install(|| dispatch(cli.command)),
        Err(e) => Err(e.into()),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("patchleak: {e}");
            1
        }
    }
}

fn dispatch(cmd: Command) -> CliResult {
    match cmd {
        Command::Synth { config, seed, out } => synth(config.as_deref(), seed, &out),
        Command::Features { command: FeaturesCommand::Rank { corpus, out } } => features_rank(&corpus, &out),
        Command::Features { command: FeaturesCommand::Proportions { corpus, feature, out } } => {
            features_proportions(&corpus, feature, &out)
        }
        Command::Randmodel { command: RandmodelCommand::Curve { days, daily, fracs, max_n, max_budget, out } } => {
            randmodel_curve(days, daily, &fracs, max_n, max_budget, &out)
        }
        Command::Linkattack { corpus, k, out, absent_means_restricted, bug_pattern } => {
            linkattack(&corpus, k, &out, absent_means_restricted, &bug_pattern)
        }
        Command::Simulate(args) => simulate(&args),
        Command::Report { runs, out } => report(&runs, &out),
    }
}

/// `%.9g`-style formatting: nine significant digits, trailing zeros removed.
pub fn fmt_float(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let m = mantissa.trim_end_matches('0').trim_end_matches('.');
        return format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    let s = format!("{:.*}", (8 - exp).max(0) as usize, x);
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn opt_float(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

fn load(dir: &Path) -> CliResult<Corpus> {
    Ok(load_corpus(dir)?)
}

fn create_dir(dir: &Path) -> CliResult {
    fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()).into())
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<fs::File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    csv::Writer::from_path(path).map_err(|e| format!("cannot write {}: {e}", path.display()).into())
}

fn write_text(path: &Path, text: &str) -> CliResult {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()).into())
}

fn synth(config: Option<&Path>, seed: Option<u64>, out: &Path) -> CliResult {
    let mut cfg = match config {
        Some(p) => SynthConfig::from_file(p)?,
        None => SynthConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    create_dir(out)?;
    let corpus = generate_to_dir(&cfg, out)?;
    eprintln!("wrote {} patches ({} security) to {}", corpus.patches().len(), corpus.security_count(), out.display());
    Ok(())
}

fn features_rank(corpus: &Path, out: &Path) -> CliResult {
    let corpus = load(corpus)?;
    let mut w = csv_writer(out)?;
    w.write_record(["feature", "gain", "gain_ratio", "best_threshold"])?;
    for s in rank_features(&corpus) {
        w.write_record([
            s.feature.name().to_string(),
            fmt_float(s.gain),
            fmt_float(s.gain_ratio),
            opt_float(s.threshold),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn features_proportions(corpus: &Path, feature: NominalFeature, out: &Path) -> CliResult {
    let corpus = load(corpus)?;
    let feature = match feature {
        NominalFeature::Author => FeatureId::Author,
        NominalFeature::TopDir => FeatureId::TopDir,
        NominalFeature::FileType => FeatureId::FileType,
    };
    let labelled = corpus.patches().iter().enumerate().map(|(i, p)| (p, corpus.is_security(i)));
    let rows = value_proportions(labelled, feature)?;
    let mut w = csv_writer(out)?;
    w.write_record(["rank", "value", "security", "total", "proportion"])?;
    for (r, row) in rows.iter().enumerate() {
        w.write_record([
            (r + 1).to_string(),
            row.value.clone(),
            row.security.to_string(),
            row.total.to_string(),
            fmt_float(row.proportion()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn randmodel_curve(days: usize, daily: u64, fracs: &[f64], max_n: u64, max_budget: u64, out: &Path) -> CliResult {
    let mut w = csv_writer(out)?;
    w.write_record(["curve", "fraction", "x", "value"])?;
    for p in effort_vs_pool_curves(fracs, 1..=max_n)? {
        w.write_record([
            "effort_vs_pool".into(),
            fmt_float(p.fraction),
            p.n.to_string(),
            fmt_float(p.expected_effort),
        ])?;
    }
    for p in window_vs_budget_curves(days, daily, fracs, 1..=max_budget)? {
        w.write_record([
            "window_vs_budget".into(),
            fmt_float(p.fraction),
            p.budget.to_string(),
            fmt_float(p.expected_increase),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn link_config(absent_means_restricted: bool, pattern: &str) -> CliResult<LinkAttackConfig> {
    Ok(LinkAttackConfig { extractor: BugIdExtractor::new(pattern)?, absent_means_restricted })
}

fn linkattack(corpus: &Path, k: usize, out: &Path, absent: bool, pattern: &str) -> CliResult {
    let corpus = load(corpus)?;
    let series = link_attack_daily(&corpus, k, &link_config(absent, pattern)?)?;
    let mut w = csv_writer(out)?;
    w.write_record([
        "day",
        "found_count",
        "first_found_patch_id",
        "window_contribution_days",
        "flagged_count",
        "pool_size",
    ])?;
    for d in &series.days {
        w.write_record([
            d.day.to_string(),
            d.found_count.to_string(),
            d.first_found_patch_id.clone().unwrap_or_default(),
            d.window_contribution_days.to_string(),
            d.flagged_count.to_string(),
            d.pool_size.to_string(),
        ])?;
    }
    w.flush()?;
    eprintln!(
        "{} of {} days satisfied, window gain {} days",
        series.days_satisfied().len(),
        series.days.len(),
        series.total_window_increase()
    );
    Ok(())
}

/// Hex SHA-256 over the corpus files in a fixed order.
pub fn corpus_hash(dir: &Path) -> CliResult<String> {
    let mut h = Sha256::new();
    for name in [PATCHES_FILE, LABELS_FILE, TIMELINE_FILE, BUG_EVENTS_FILE] {
        let path = dir.join(name);
        match fs::read(&path) {
            Ok(bytes) => {
                h.update(name.as_bytes());
                h.update((bytes.len() as u64).to_le_bytes());
                h.update(&bytes);
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound && name == BUG_EVENTS_FILE => {}
            Err(e) => return Err(format!("cannot read {}: {e}", path.display()).into()),
        }
    }
    Ok(hex::encode(h.finalize()))
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    args: &'a SimulateArgs,
    grid: &'a [KernelParams],
    corpus_sha256: String,
    cdf_from_day: NaiveDate,
    cdf_days: usize,
    cdf_asymptote: f64,
    fallback_days: usize,
}

fn simulate(args: &SimulateArgs) -> CliResult {
    let corpus = load(&args.corpus)?;
    let mut mask = FeatureMask::all();
    for g in &args.exclude {
        mask = mask.without_group(*g);
    }
    let grid = match args.grid {
        GridArg::Simulation => simulation_grid(),
        GridArg::Full => default_grid(),
    };
    let cfg = SimConfig {
        k: args.k,
        severity: match args.severity {
            SeverityArg::All => SeverityFilter::All,
            SeverityArg::Severe => SeverityFilter::HighOrCritical,
        },
        mask,
        grid: grid.clone(),
        folds: args.folds,
        seed: args.seed,
        trials: args.trials,
    };
    let from_day = args.from_day.unwrap_or_else(|| default_cdf_start(&corpus));

    let (series, run): (EffortSeries, Option<RankedRun>) = match args.ranker {
        Ranker::Svm => {
            let r = simulate_svm_daily(&corpus, &cfg)?;
            (r.series.clone(), Some(r))
        }
        Ranker::Link => {
            let link = link_config(args.absent_means_restricted, DEFAULT_BUG_PATTERN)?;
            let r = simulate_link_daily(&corpus, &cfg, &link)?;
            (r.series.clone(), Some(r))
        }
        Ranker::Random => (simulate_random_daily(&corpus, &cfg)?, None),
    };

    create_dir(&args.out)?;
    let mut w = csv_writer(&args.out.join("efforts.csv"))?;
    w.write_record([
        "day",
        "ranker",
        "k",
        "pool_size",
        "pool_security_count",
        "effort",
        "effort_se",
        "status",
        "c",
        "gamma",
        "note",
    ])?;
    for d in &series.days {
        w.write_record([
            d.day.to_string(),
            series.ranker.name().to_string(),
            series.k.to_string(),
            d.pool_size.to_string(),
            d.pool_security_count.to_string(),
            opt_float(d.effort),
            opt_float(d.effort_se),
            serde_json::to_value(d.status)?.as_str().unwrap_or_default().to_string(),
            opt_float(d.params.map(|p| p.c)),
            opt_float(d.params.map(|p| p.gamma)),
            d.note.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;

    let cdf = effort_cdf(&series, from_day, args.max_effort)?;
    let mixture = match args.ranker {
        Ranker::Random => Some(random_effort_cdf(&corpus, &cfg, from_day, args.max_effort)?),
        _ => None,
    };
    let mut w = csv_writer(&args.out.join("cdf.csv"))?;
    w.write_record(["effort", "cdf", "mixture_cdf"])?;
    for (i, (e, v)) in cdf.points.iter().enumerate() {
        w.write_record([e.to_string(), fmt_float(*v), opt_float(mixture.as_ref().map(|m| m.points[i].1))])?;
    }
    w.flush()?;

    let mut w = csv_writer(&args.out.join("window.csv"))?;
    w.write_record(["budget", "total_increase_days", "standard_error", "baseline_days", "factor"])?;
    for &b in &args.budget_list {
        let report = match &run {
            Some(r) => window_increase(&corpus, r, b),
            None => random_window_increase(&corpus, &cfg, b)?,
        }
        .with_baseline(args.baseline);
        w.write_record([
            b.to_string(),
            fmt_float(report.total_increase_days),
            opt_float(report.standard_error),
            fmt_float(report.baseline_days),
            opt_float(report.multiplicative_factor),
        ])?;
    }
    w.flush()?;

    let manifest = Manifest {
        tool: "patchleak",
        version: env!("CARGO_PKG_VERSION"),
        command: "simulate",
        args,
        grid: &grid,
        corpus_sha256: corpus_hash(&args.corpus)?,
        cdf_from_day: from_day,
        cdf_days: cdf.days,
        cdf_asymptote: cdf.asymptote,
        fallback_days: series.days.iter().filter(|d| d.status != crate::simulator::DayStatus::Ok).count(),
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    write_text(&args.out.join("run_manifest.json"), &text)?;
    Ok(())
}

struct RunData {
    label: String,
    efforts: Vec<(String, Option<f64>)>,
    cdf: Vec<(u64, f64)>,
    window: Vec<(u64, f64)>,
}

fn read_csv(path: &Path) -> CliResult<Vec<csv::StringRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    r.records().collect::<Result<Vec<_>, _>>().map_err(|e| format!("malformed {}: {e}", path.display()).into())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, path: &Path) -> CliResult<T> {
    rec.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| format!("malformed {}: bad column {} in {:?}", path.display(), i + 1, rec).into())
}

fn read_run(dir: &Path) -> CliResult<RunData> {
    let manifest_path = dir.join("run_manifest.json");
    let text =
        fs::read_to_string(&manifest_path).map_err(|e| format!("cannot read {}: {e}", manifest_path.display()))?;
    let m: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| format!("malformed {}: {e}", manifest_path.display()))?;
    let a = &m["args"];
    let mut label =
        format!("{}_k{}_{}", a["ranker"].as_str().unwrap_or("?"), a["k"], a["severity"].as_str().unwrap_or("?"));
    if let Some(ex) = a["exclude"].as_array().filter(|x| !x.is_empty()) {
        let names: Vec<&str> = ex.iter().filter_map(|v| v.as_str()).collect();
        label.push_str(&format!("_minus_{}", names.join("+")));
    }

    let path = dir.join("efforts.csv");
    let efforts = read_csv(&path)?
        .iter()
        .map(|r| Ok((r.get(0).unwrap_or_default().to_string(), r.get(5).and_then(|s| s.parse().ok()))))
        .collect::<CliResult<Vec<_>>>()?;
    let path = dir.join("cdf.csv");
    let cdf = read_csv(&path)?
        .iter()
        .map(|r| {
            // The random ranker's exact mixture CDF replaces the CDF of its daily means.
            let col = if r.get(2).is_some_and(|s| !s.is_empty()) { 2 } else { 1 };
            Ok((field(r, 0, &path)?, field(r, col, &path)?))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let path = dir.join("window.csv");
    let window = read_csv(&path)?
        .iter()
        .map(|r| Ok((field(r, 0, &path)?, field(r, 1, &path)?)))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(RunData { label, efforts, cdf, window })
}

/// Writes `effort_series.dat` (per-day effort, one index block per run, blank
/// lines between runs of defined days), `effort_cdf.dat` and `window.dat`
/// (one column per run).
fn report(runs: &[PathBuf], out: &Path) -> CliResult {
    let data: Vec<RunData> = runs.iter().map(|d| read_run(d)).collect::<CliResult<_>>()?;
    create_dir(out)?;

    let mut s = String::new();
    for (i, r) in data.iter().enumerate() {
        if i > 0 {
            s.push_str("\n\n");
        }
        s.push_str(&format!("# {}\n# day_index date effort\n", r.label));
        let mut gap = false;
        for (t, (day, effort)) in r.efforts.iter().enumerate() {
            match effort {
                Some(e) => {
                    if gap {
                        s.push('\n');
                        gap = false;
                    }
                    s.push_str(&format!("{t} {day} {}\n", fmt_float(*e)));
                }
                None => gap = true,
            }
        }
    }
    write_text(&out.join("effort_series.dat"), &s)?;

    let labels: Vec<&str> = data.iter().map(|r| r.label.as_str()).collect();
    let table = |rows: &mut dyn Iterator<Item = u64>, get: &dyn Fn(&RunData, u64) -> Option<f64>, head: &str| {
        let mut s = format!("# {head} {}\n", labels.join(" "));
        for x in rows {
            let cols: Vec<String> = data.iter().map(|r| get(r, x).map_or("NaN".into(), fmt_float)).collect();
            s.push_str(&format!("{x} {}\n", cols.join(" ")));
        }
        s
    };
    let max_e = data.iter().map(|r| r.cdf.len() as u64).max().unwrap_or(0);
    let cdf = table(&mut (1..=max_e), &|r, e| r.cdf.iter().find(|p| p.0 == e).map(|p| p.1), "effort");
    write_text(&out.join("effort_cdf.dat"), &cdf)?;
    let mut budgets: Vec<u64> = data.iter().flat_map(|r| r.window.iter().map(|p| p.0)).collect();
    budgets.sort_unstable();
    budgets.dedup();
    let win = table(&mut budgets.into_iter(), &|r, b| r.window.iter().find(|p| p.0 == b).map(|p| p.1), "budget");
    write_text(&out.join("window.dat"), &win)?;
    eprintln!("wrote effort_series.dat, effort_cdf.dat and window.dat to {}", out.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_float(0.1 + 0.2), "0.3");
        assert_eq!(fmt_float(50.5), "50.5");
        assert_eq!(fmt_float(2.0), "2");
        assert_eq!(fmt_float(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_float(123456789.4), "123456789");
        assert_eq!(fmt_float(1234567890.0), "1.23456789e+09");
        assert_eq!(fmt_float(0.000012345), "1.2345e-05");
        assert_eq!(fmt_float(0.0001), "0.0001");
        assert_eq!(fmt_float(-2.5), "-2.5");
        assert_eq!(fmt_float(9.9999999999), "10");
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(["patchleak", "simulate", "--bogus"]), 2);
        assert_eq!(run(["patchleak"]), 2);
        assert_eq!(run(["patchleak", "--help"]), 0);
    }

    #[test]
    fn missing_corpus_exits_one() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("x.csv");
        let missing = dir.path().join("nope");
        assert_eq!(
            run([
                "patchleak".as_ref(),
                "features".as_ref(),
                "rank".as_ref(),
                "--corpus".as_ref(),
                missing.as_os_str(),
                "--out".as_ref(),
                out.as_os_str()
            ]),
            1
        );
    }
}
