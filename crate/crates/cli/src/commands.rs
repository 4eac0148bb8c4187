use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use ntier::codecs::{characterize, CalibrationTable, CharacterizeOptions};
use ntier::models::{score_tiers, ScoringPolicy, TierRow};
use ntier::sim::{
    generate_trace, read_trace, run_experiment, run_experiment_with_trace, split_windows,
    write_trace, ExperimentConfig, ExperimentReport,
};
use ntier::tiers::TierId;

use crate::config::ConfigFile;
use crate::{Cli, CliError, Command};

const DEFAULT_OUT_DIR: &str = "ntier-out";

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Characterize { pages, passes } => {
            let config = load(&cli, Some("preset:characterize"))?;
            cmd_characterize(&config, *pages, *passes, cli.out.as_deref())
        }
        Command::GenTrace => {
            let config = load(&cli, None)?;
            cmd_gen_trace(&config, cli.out.as_deref())
        }
        Command::Simulate { calibration, trace } => {
            let config = load(&cli, None)?;
            let table = calibration_table(calibration.as_deref())?;
            let out = cli.out.clone().unwrap_or_else(|| DEFAULT_OUT_DIR.into());
            cmd_simulate(&config, &table, trace.as_deref(), &out)
        }
        Command::Compare {
            configs,
            calibration,
        } => {
            if cli.config.is_some() {
                bail!(CliError::usage(
                    "compare takes config paths as arguments, not --config"
                ));
            }
            let table = calibration_table(calibration.as_deref())?;
            let out = cli.out.clone().unwrap_or_else(|| DEFAULT_OUT_DIR.into());
            let mut files = Vec::with_capacity(configs.len());
            for path in configs {
                let mut c = ConfigFile::load(path)?;
                if let Some(seed) = cli.seed {
                    c.experiment.seed = seed;
                }
                files.push(c);
            }
            cmd_compare(&files, &table, &out)
        }
        Command::ScoreTiers {
            calibration,
            weights,
        } => {
            let config = load(&cli, None)?;
            let table = calibration_table(calibration.as_deref())?;
            cmd_score_tiers(&config, &table, weights, &mut io::stdout().lock())
        }
        Command::Report { summary } => {
            let text = fs::read_to_string(summary)
                .with_context(|| format!("reading `{}`", summary.display()))?;
            let report: ExperimentReport = serde_json::from_str(&text).map_err(|e| {
                CliError::config(format!("`{}` is not a summary: {e}", summary.display()))
            })?;
            write_report(&report, &mut io::stdout().lock())?;
            Ok(())
        }
    }
}

fn load(cli: &Cli, fallback: Option<&str>) -> anyhow::Result<ConfigFile> {
    let mut config = match (&cli.config, fallback) {
        (Some(path), _) => ConfigFile::load(path)?,
        (None, Some(preset)) => ConfigFile::load(Path::new(preset))?,
        (None, None) => ConfigFile::default(),
    };
    if let Some(seed) = cli.seed {
        config.experiment.seed = seed;
    }
    Ok(config)
}

fn calibration_table(path: Option<&Path>) -> anyhow::Result<CalibrationTable> {
    match path {
        None => Ok(CalibrationTable::builtin()),
        Some(p) => {
            let file = File::open(p)
                .map_err(|e| CliError::config(format!("cannot read calibration `{}`: {e}", p.display())))?;
            CalibrationTable::from_csv(file).map_err(|e| {
                CliError::config(format!("calibration `{}`: {e}", p.display())).into()
            })
        }
    }
}

/// Writes to `path`, or to stdout when there is none.
fn sink(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).with_context(|| format!("creating `{}`", dir.display()))?;
            }
            Box::new(BufWriter::new(
                File::create(p).with_context(|| format!("creating `{}`", p.display()))?,
            ))
        }
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn cmd_characterize(
    config: &ConfigFile,
    pages: usize,
    passes: usize,
    out: Option<&Path>,
) -> anyhow::Result<()> {
    let descs = config.tier_descs()?;
    if descs.is_empty() {
        bail!(CliError::config("config lists no tiers"));
    }
    let table = characterize(&descs, &config.data_profile(), CharacterizeOptions { pages, passes })
        .map_err(|e| match e {
            ntier::Error::Config(m) | ntier::Error::Codec { reason: m, .. } => {
                anyhow::Error::from(CliError::config(m))
            }
            other => other.into(),
        })?;
    let mut w = sink(out)?;
    table.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn cmd_gen_trace(config: &ConfigFile, out: Option<&Path>) -> anyhow::Result<()> {
    let spec = config.workload();
    spec.validate().map_err(|e| CliError::config(e.to_string()))?;
    let window_us = config.profiling.window_seconds * 1_000_000;
    let windows = generate_trace(&spec, config.experiment.windows, window_us)?;
    let mut w = sink(out)?;
    write_trace(&mut w, &windows.concat())?;
    w.flush()?;
    Ok(())
}

fn write_outputs(report: &ExperimentReport, dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating `{}`", dir.display()))?;
    fs::write(dir.join("summary.json"), report.to_json()? + "\n")
        .with_context(|| format!("writing summary in `{}`", dir.display()))?;
    let mut csv = BufWriter::new(File::create(dir.join("windows.csv"))?);
    report.write_csv(&mut csv)?;
    csv.flush()?;
    Ok(())
}

fn summary_line(r: &ExperimentReport) -> String {
    format!(
        "{}: savings {:.2}%, slowdown {:.2}%, p99 {} ns, fault {} ns, tax {} ns",
        r.name,
        r.summary.mean_savings_pct,
        r.summary.slowdown_pct,
        r.summary.p99_ns,
        r.summary.total_fault_ns,
        r.summary.total_migration_tax_ns
    )
}

fn cmd_simulate(
    config: &ConfigFile,
    table: &CalibrationTable,
    trace: Option<&Path>,
    out: &Path,
) -> anyhow::Result<()> {
    let experiment = config.experiment(table)?;
    let report = match trace {
        None => run_experiment(&experiment)?,
        Some(path) => {
            let file = File::open(path)
                .map_err(|e| CliError::config(format!("cannot read trace `{}`: {e}", path.display())))?;
            let records = read_trace(file)?;
            let windows = split_windows(
                &records,
                experiment.profiling.window_us(),
                experiment.windows,
            )?;
            run_experiment_with_trace(&experiment, &windows)?
        }
    };
    write_outputs(&report, out)?;
    fs::write(out.join("config.toml"), config.to_toml()?)?;
    println!("{}", summary_line(&report));
    for v in &report.fault_order_violations {
        eprintln!(
            "warning: {} took {} faults, more than faster tier {} ({})",
            v.tier, v.faults, v.faster_tier, v.faster_faults
        );
    }
    Ok(())
}

/// Worker cap from `NTIER_WORKERS`, else the available parallelism.
fn workers() -> anyhow::Result<usize> {
    match std::env::var("NTIER_WORKERS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => bail!(CliError::usage(format!(
                "NTIER_WORKERS must be a positive integer, got `{v}`"
            ))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn run_all(configs: &[ExperimentConfig], workers: usize) -> anyhow::Result<Vec<ExperimentReport>> {
    let mut out = Vec::with_capacity(configs.len());
    for chunk in configs.chunks(workers) {
        let batch: Vec<ntier::Result<ExperimentReport>> = std::thread::scope(|s| {
            let handles: Vec<_> = chunk.iter().map(|c| s.spawn(move || run_experiment(c))).collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("experiment thread panicked"))
                .collect()
        });
        for (c, r) in chunk.iter().zip(batch) {
            out.push(r.with_context(|| format!("experiment `{}`", c.name))?);
        }
    }
    Ok(out)
}

fn cmd_compare(
    files: &[ConfigFile],
    table: &CalibrationTable,
    out: &Path,
) -> anyhow::Result<()> {
    if files.len() < 2 {
        bail!(CliError::usage("compare needs at least two configs"));
    }
    let seed = files[0].experiment.seed;
    if let Some(f) = files.iter().find(|f| f.experiment.seed != seed) {
        bail!(CliError::config(format!(
            "`{}` uses workload seed {} but `{}` uses {seed}; refusing to compare different workloads",
            f.experiment.name, f.experiment.seed, files[0].experiment.name
        )));
    }
    let mut names: Vec<&str> = files.iter().map(|f| f.experiment.name.as_str()).collect();
    names.sort_unstable();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        bail!(CliError::usage(format!("experiment name `{}` appears twice", w[0])));
    }
    let configs = files
        .iter()
        .map(|f| f.experiment(table))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let reports = run_all(&configs, workers()?)?;

    fs::create_dir_all(out).with_context(|| format!("creating `{}`", out.display()))?;
    let mut table_csv = csv::Writer::from_path(out.join("comparison.csv"))?;
    table_csv.write_record(["name", "model", "savings_pct", "slowdown_pct", "p99_ns", "fault_ns", "tax_ns"])?;
    let mut plot = csv::Writer::from_path(out.join("plot_data.csv"))?;
    plot.write_record(["name", "window", "savings_pct", "slowdown_pct"])?;
    println!(
        "{:<14} {:<10} {:>10} {:>12} {:>10}",
        "name", "model", "savings%", "slowdown%", "p99_ns"
    );
    for ((r, c), f) in reports.iter().zip(&configs).zip(files) {
        write_outputs(r, &out.join(sanitize(&r.name)))?;
        let s = &r.summary;
        table_csv.write_record([
            r.name.clone(),
            r.model.clone(),
            format!("{:.4}", s.mean_savings_pct),
            format!("{:.4}", s.slowdown_pct),
            s.p99_ns.to_string(),
            s.total_fault_ns.to_string(),
            s.total_migration_tax_ns.to_string(),
        ])?;
        fs::write(out.join(sanitize(&r.name)).join("config.toml"), f.to_toml()?)?;
        for w in r.windows.iter().filter(|w| !w.warmup) {
            let slowdown = if w.ops == 0 {
                0.0
            } else {
                w.realized_fault_ns as f64 / (w.ops * c.dram_latency_ns) as f64 * 100.0
            };
            plot.write_record([
                r.name.clone(),
                w.window.to_string(),
                format!("{:.4}", w.tco_savings_pct),
                format!("{slowdown:.4}"),
            ])?;
        }
        println!(
            "{:<14} {:<10} {:>10.2} {:>12.2} {:>10}",
            r.name, r.model, s.mean_savings_pct, s.slowdown_pct, s.p99_ns
        );
    }
    table_csv.flush()?;
    plot.flush()?;
    Ok(())
}

fn sanitize(name: &str) -> PathBuf {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect::<String>()
        .into()
}

fn parse_weights(text: &str) -> anyhow::Result<ScoringPolicy> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let values = parts
        .iter()
        .map(|p| p.parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| CliError::usage(format!("weights `{text}` must be numbers")))?;
    let [c, l, u] = values[..] else {
        bail!(CliError::usage(format!(
            "weights `{text}` must have three entries: compressibility,latency,cost"
        )));
    };
    ScoringPolicy::new(c, l, u).map_err(|e| {
        let msg = match e {
            ntier::Error::Config(m) => m,
            other => other.to_string(),
        };
        CliError::usage(msg).into()
    })
}

/// Scores every calibration row. The cost column is the media price of one
/// stored page over the measured ratio.
fn cmd_score_tiers(
    config: &ConfigFile,
    table: &CalibrationTable,
    weights: &str,
    w: &mut dyn Write,
) -> anyhow::Result<()> {
    let policy = parse_weights(weights)?;
    if table.rows.is_empty() {
        bail!(CliError::config("calibration table is empty"));
    }
    let mut rows = Vec::with_capacity(table.rows.len());
    for (i, r) in table.rows.iter().enumerate() {
        let media = config.media.media_of_tier(&r.tier_id)?;
        rows.push(TierRow {
            id: TierId::from_index(i),
            ratio: r.ratio,
            latency_ns: r.decomp_ns as f64,
            cost: media.cost_per_gb / r.ratio,
        });
    }
    let scores = score_tiers(&rows, &policy)?;
    writeln!(
        w,
        "{:>4}  {:<12} {:>7}  {:>8} {:>8} {:>8}",
        "rank", "tier", "score", "compr", "latency", "cost"
    )?;
    for (rank, s) in scores.iter().enumerate() {
        let row = &table.rows[s.id.index()];
        writeln!(
            w,
            "{:>4}  {:<12} {:>7.4}  {:>8.4} {:>8.4} {:>8.4}",
            rank + 1,
            row.tier_id,
            s.score,
            s.scaled[0],
            s.scaled[1],
            s.scaled[2]
        )?;
    }
    Ok(())
}

fn write_report(r: &ExperimentReport, w: &mut dyn Write) -> anyhow::Result<()> {
    writeln!(w, "{} ({}), seed {}", r.name, r.model, r.seed)?;
    if let Some(t) = r.hotness_threshold {
        writeln!(w, "hotness threshold {t}")?;
    }
    writeln!(w, "tiers:")?;
    for t in &r.tiers {
        writeln!(
            w,
            "  {} {:<10} access {} ns, compress {} ns",
            t.id, t.name, t.access_latency_ns, t.compress_latency_ns
        )?;
    }
    writeln!(
        w,
        "{:>6} {:>9} {:>14} {:>10} {:>10} {:>14}",
        "window", "savings%", "fault_ns", "p50", "p99", "tax_ns"
    )?;
    for m in &r.windows {
        writeln!(
            w,
            "{:>6} {:>9.2} {:>14} {:>10} {:>10} {:>14}{}",
            m.window,
            m.tco_savings_pct,
            m.realized_fault_ns,
            m.p50_ns,
            m.p99_ns,
            m.migration_tax_ns,
            if m.warmup { "  warmup" } else { "" }
        )?;
    }
    writeln!(w, "{}", summary_line(r))?;
    if r.summary.empty {
        writeln!(w, "no windows were counted")?;
    }
    for v in &r.fault_order_violations {
        writeln!(
            w,
            "fault order: {} took {} faults, more than faster tier {} ({})",
            v.tier, v.faults, v.faster_tier, v.faster_faults
        )?;
    }
    Ok(())
}
