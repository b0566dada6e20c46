use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use scsparc_sim::basefile::write_base_matrix;
use scsparc_sim::config::parse_pairs;
use scsparc_sim::format::fmt_g9;
use scsparc_sim::output::{write_json, write_outputs};
use scsparc_sim::predict::{predict, prop_one_verdict, render};
use scsparc_sim::{run_experiment, ExperimentConfig, RunOptions, SimError, SimResult};

/// Spatially coupled sparse regression codes: simulation and state evolution.
#[derive(Parser)]
#[command(name = "scsparc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run Monte Carlo coding trials and write CSV/JSON results.
    Simulate(Common),
    /// Exact SE, asymptotic SE and design bounds, without coding trials.
    Predict(Common),
    /// Exact (Monte Carlo) state evolution only.
    Se(Common),
    /// Design bounds for band base matrices only.
    Threshold(Common),
    /// Write the configured base matrices as CSV.
    ExportBaseMatrix(Common),
}

#[derive(Args)]
struct Common {
    /// Flat key = value configuration file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// fig3_wave, fig4_ser_vs_rate, fig5_omega_sweep or custom.
    #[arg(long)]
    preset: Option<String>,
    /// Comma list or start:stop:step.
    #[arg(long)]
    rate: Option<String>,
    #[arg(long, value_name = "bits|nats")]
    rate_unit: Option<String>,
    /// Coupling widths, comma separated.
    #[arg(long)]
    omega: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    snr: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long, value_name = "gaussian|hadamard")]
    backend: Option<String>,
    /// Output directory (a file path for export-base-matrix with one base).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use the full-scale trial counts.
    #[arg(long)]
    full: bool,
    #[arg(long)]
    workers: Option<String>,
    /// Any other configuration key, e.g. `--set sections=512`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn config(&self) -> SimResult<ExperimentConfig> {
        let mut pairs = Vec::new();
        let mut base_dir = PathBuf::from(".");
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)
                .map_err(|e| SimError::Config(format!("{}: {e}", path.display())))?;
            pairs = parse_pairs(&text)?;
            if let Some(dir) = path.parent() {
                base_dir = dir.to_path_buf();
            }
        }
        let flags = [
            ("preset", &self.preset),
            ("rates", &self.rate),
            ("rate_unit", &self.rate_unit),
            ("omega", &self.omega),
            ("lambda", &self.lambda),
            ("snr", &self.snr),
            ("trials", &self.trials),
            ("seed", &self.seed),
            ("backend", &self.backend),
            ("workers", &self.workers),
        ];
        pairs.extend(flags.iter().filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone()))));
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| SimError::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let mut cfg = ExperimentConfig::from_pairs(&pairs, self.full, &base_dir)?;
        if let Some(out) = &self.out {
            cfg.out = Some(out.clone());
        }
        Ok(cfg)
    }
}

fn create(path: &Path) -> SimResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| SimError::Io { path: dir.into(), source: e })?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| SimError::Io { path: path.into(), source: e })
}

fn json_out(cfg: &ExperimentConfig, what: &str) -> Option<PathBuf> {
    cfg.out.as_ref().map(|d| d.join(format!("{}_{what}.json", cfg.preset)))
}

fn simulate(cfg: &ExperimentConfig) -> SimResult<()> {
    let agg = run_experiment(cfg, RunOptions { progress: true })?;
    let mut stdout = io::stdout().lock();
    let w = &mut stdout;
    let _ = writeln!(w, "base,rate_bits,trials,mean_ser,ser_std_err,ser_binomial_std_err,mean_iters");
    for p in &agg.points {
        let _ = writeln!(
            w,
            "{},{},{},{},{},{},{}",
            p.base_spec,
            fmt_g9(p.rate_nats / core::f64::consts::LN_2),
            p.records.len(),
            fmt_g9(p.mean_ser()),
            fmt_g9(p.ser_std_err()),
            fmt_g9(p.ser_binomial_std_err()),
            fmt_g9(p.mean_iterations())
        );
    }
    if let Some(dir) = &cfg.out {
        let paths = write_outputs(&agg, dir)?;
        eprintln!("wrote {}", paths.trials_csv.display());
        eprintln!("wrote {}", paths.summary_json.display());
        eprintln!("wrote {}", paths.wave_csv.display());
    }
    Ok(())
}

fn run(command: Command) -> SimResult<()> {
    match command {
        Command::Simulate(c) => simulate(&c.config()?),
        Command::Predict(c) => {
            let cfg = c.config()?;
            let points = predict(&cfg, cfg.exact_se)?;
            print!("{}", render(&points));
            if let Some(path) = json_out(&cfg, "predict") {
                write_json(create(&path)?, &points)?;
            }
            Ok(())
        }
        Command::Se(c) => {
            let cfg = c.config()?;
            let points = predict(&cfg, true)?;
            for p in &points {
                let se = p.exact_se.as_ref().expect("exact SE requested");
                println!("{} R={} bits: {} iterations, converged={}", p.base, fmt_g9(p.rate_bits), se.iterations, se.converged);
                for (t, psi) in se.psi.iter().enumerate() {
                    let row: Vec<String> = psi.iter().map(|&v| format!("{v:.4}")).collect();
                    println!("  t={t:<3} {}", row.join(" "));
                }
            }
            if let Some(path) = json_out(&cfg, "se") {
                write_json(create(&path)?, &points)?;
            }
            Ok(())
        }
        Command::Threshold(c) => {
            let cfg = c.config()?;
            let points = predict(&cfg, false)?;
            let reports: Vec<_> = points.iter().filter_map(|p| p.prop_one.clone()).collect();
            if reports.is_empty() {
                return Err(SimError::Config("threshold needs at least one band base matrix".into()));
            }
            for r in &reports {
                println!("{}x{} R={} bits: {}", r.omega, r.lambda, fmt_g9(r.rate_bits), prop_one_verdict(r));
            }
            if let Some(path) = json_out(&cfg, "threshold") {
                write_json(create(&path)?, &reports)?;
            }
            Ok(())
        }
        Command::ExportBaseMatrix(c) => {
            let cfg = c.config()?;
            for spec in &cfg.bases {
                let base = spec.build(cfg.power)?;
                match &cfg.out {
                    Some(out) if cfg.bases.len() == 1 && out.extension().is_some() => {
                        create(out)?;
                        write_base_matrix(out, &base)?;
                    }
                    Some(dir) => {
                        fs::create_dir_all(dir).map_err(|e| SimError::Io { path: dir.clone(), source: e })?;
                        let name = spec.to_string().replace([':', '/', '\\'], "_");
                        write_base_matrix(&dir.join(format!("base_{name}.csv")), &base)?;
                    }
                    None => {
                        println!("# {spec}");
                        for r in 0..base.rows() {
                            let row: Vec<String> = base.row(r).iter().map(|v| v.to_string()).collect();
                            println!("{}", row.join(","));
                        }
                    }
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
