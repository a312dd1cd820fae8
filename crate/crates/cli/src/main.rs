//! `fbec`: validation suite, failure-rate sweeps and threshold runs.

mod config;
mod output;

use std::process::ExitCode;

use clap::{Arg, ArgMatches, Command};
use fbec_core::constructions::{Construction, CorrelatedLoss};
use fbec_core::decoder::FailureAggregation;
use fbec_core::experiments::{Experiment, ExperimentConfig, ExperimentError, FailureProxy, SweepRecord};
use fbec_core::lattice::LatticeDims;
use fbec_core::noise::LossOrder;
use fbec_core::validation::run_validation;
use serde_json::{json, Value};

use config::{failed, keys, parse_config, CliError, Settings};
use output::{curve_csv, emit, records_csv, Format};

const COMMANDS: [(&str, &str); 5] = [
    ("validate", "Run the stabilizer oracle suite and layout replays"),
    ("rate", "Failure rate at one noise point and size"),
    ("sweep", "Failure rates over a grid of noise points and sizes"),
    ("threshold", "Threshold in p_fail or p_loss from a fitted sweep"),
    ("curve", "Loss threshold at each of several failure rates"),
];

fn cli() -> Command {
    let mut cmd = Command::new("fbec")
        .about("Fusion-based error correction on the XZZX cluster state")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true);
    for (name, about) in COMMANDS {
        let mut sub = Command::new(name).about(about).arg(
            Arg::new("config")
                .long("config")
                .value_name("PATH")
                .help("key = value file; flags take precedence"),
        );
        for &(key, help) in keys(name) {
            sub = sub.arg(Arg::new(key).long(key).value_name("VALUE").help(help));
        }
        cmd = cmd.subcommand(sub);
    }
    cmd
}

fn settings(name: &str, m: &ArgMatches) -> Result<Settings, CliError> {
    let file = match m.get_one::<String>("config") {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{path}: {e}")))?;
            Some(parse_config(&text)?)
        }
        None => None,
    };
    let flags = keys(name)
        .iter()
        .filter_map(|&(k, _)| m.get_one::<String>(k).map(|v| (k.to_string(), v.clone())))
        .collect();
    Settings::resolve(name, file, flags)
}

fn experiment_error(e: ExperimentError) -> CliError {
    match e {
        ExperimentError::Config(_) | ExperimentError::Noise(_) | ExperimentError::Lattice(_) => {
            CliError::Usage(e.to_string())
        }
        _ => CliError::Failed(e.to_string()),
    }
}

fn experiment_config(s: &Settings, default_sizes: &str) -> Result<ExperimentConfig, CliError> {
    let construction: Construction = s.require("construction")?;
    let sizes: Vec<usize> = s.list_or("d", default_sizes)?;
    let dz: Option<usize> = s.get("dz")?;
    let dims = sizes
        .iter()
        .map(|&d| LatticeDims::new(d, d, dz.unwrap_or(d)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let mut cfg = ExperimentConfig::new(construction, dims, s.get_or("trials", 20_000)?, s.require("seed")?);
    cfg.aggregation = s.get_or("aggregation", FailureAggregation::default())?;
    cfg.correlated_loss = s.get_or("correlated-loss", CorrelatedLoss::default())?;
    cfg.loss_order = s.get_or("loss-order", LossOrder::default())?;
    cfg.fit.bootstrap_reps = s.get_or("bootstrap-reps", cfg.fit.bootstrap_reps)?;
    cfg.fit.window = s.get_or("fit-window", cfg.fit.window)?;
    cfg.loss_search.tolerance = s.get_or("loss-tolerance", cfg.loss_search.tolerance)?;
    cfg.validate().map_err(experiment_error)?;
    Ok(cfg)
}

fn progress(r: &SweepRecord) {
    eprintln!(
        "{} d={} p_fail={} p_loss={} rate={:.5} ({}/{})",
        r.construction, r.dims.dx, r.params.p_fail, r.params.p_loss, r.estimate.rate, r.estimate.failures, r.estimate.trials
    );
}

struct Run<'a> {
    name: &'a str,
    settings: Settings,
    format: Format,
    output: Option<String>,
    workers: Option<usize>,
}

impl Run<'_> {
    fn resolved(&self, cfg: &ExperimentConfig, extra: Value) -> Value {
        let mut v = json!({
            "command": self.name,
            "experiment": cfg,
            "workers": self.workers.unwrap_or_else(rayon::current_num_threads),
        });
        if let (Value::Object(a), Value::Object(b)) = (&mut v, extra) {
            a.extend(b);
        }
        v
    }

    fn records_out(&self, cfg: &ExperimentConfig, records: &[SweepRecord]) -> Result<Vec<u8>, CliError> {
        match self.format {
            Format::Csv => records_csv(records),
            _ => {
                let config = self.resolved(cfg, json!({}));
                let rows: Vec<Value> = records
                    .iter()
                    .map(|r| json!({ "record": r, "config": config }))
                    .collect();
                output::json(&rows)
            }
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        let s = &self.settings;
        let dims: Vec<usize> = s.list_or("dims", "2,2,2")?;
        let dims = match dims[..] {
            [d] => LatticeDims::cubic(d),
            [dx, dy, dz] => LatticeDims::new(dx, dy, dz),
            _ => return Err(CliError::Usage("--dims takes d or dx,dy,dz".into())),
        }
        .map_err(|e| CliError::Usage(e.to_string()))?;
        let constructions = match s.raw("construction").unwrap_or("all") {
            "all" => Construction::ALL.to_vec(),
            c => vec![c.parse::<Construction>().map_err(|e| CliError::Usage(e.to_string()))?],
        };
        let report = run_validation(dims, &constructions);
        let bytes = match self.format {
            Format::Json => output::json(&json!({
                "command": self.name,
                "dims": dims,
                "constructions": constructions,
                "passed": report.all_passed(),
                "checks": report.checks,
            }))?,
            _ => format!("{report}\n").into_bytes(),
        };
        emit(self.output.as_deref(), &bytes)?;
        if report.all_passed() {
            Ok(())
        } else {
            let n = report.checks.iter().filter(|c| !c.passed).count();
            Err(CliError::Failed(format!("{n} validation checks failed")))
        }
    }

    fn rate(&self) -> Result<(), CliError> {
        let s = &self.settings;
        let _: usize = s.require("d")?;
        let cfg = experiment_config(s, "0")?;
        let e = Experiment::new(cfg.clone()).map_err(experiment_error)?;
        let params = cfg
            .params(s.require("pfail")?, s.get_or("ploss", 0.0)?)
            .map_err(experiment_error)?;
        let r = e.record(&e.simulators[0], params).map_err(experiment_error)?;
        progress(&r);
        emit(self.output.as_deref(), &self.records_out(&cfg, &[r])?)
    }

    fn sweep(&self) -> Result<(), CliError> {
        let s = &self.settings;
        let cfg = experiment_config(s, "8,12,16")?;
        let p_fails: Vec<f64> = s
            .list("pfail")?
            .ok_or_else(|| CliError::Usage("--pfail is required".into()))?;
        let p_losses: Vec<f64> = s.list_or("ploss", "0")?;
        let grid: Vec<(f64, f64)> = p_fails
            .iter()
            .flat_map(|&pf| p_losses.iter().map(move |&pl| (pf, pl)))
            .collect();
        let e = Experiment::new(cfg.clone()).map_err(experiment_error)?;
        let records = e.sweep(&grid, progress).map_err(experiment_error)?;
        emit(self.output.as_deref(), &self.records_out(&cfg, &records)?)
    }

    fn threshold(&self) -> Result<(), CliError> {
        let s = &self.settings;
        let cfg = experiment_config(s, "8,12,16")?;
        let vary_loss = match s.raw("vary").unwrap_or("fail") {
            "fail" => false,
            "loss" => true,
            v => return Err(CliError::Usage(format!("--vary {v:?}: expected fail or loss"))),
        };
        let proxy = match s.raw("proxy").unwrap_or("decoder") {
            "decoder" => FailureProxy::Decoder,
            "percolation" => FailureProxy::Percolation,
            v => return Err(CliError::Usage(format!("--proxy {v:?}: expected decoder or percolation"))),
        };
        let grid: Vec<(f64, f64)> = if vary_loss {
            let pf: f64 = s.require("pfail")?;
            let pl: Vec<f64> = s
                .list("ploss")?
                .ok_or_else(|| CliError::Usage("--ploss is required with --vary loss".into()))?;
            pl.into_iter().map(|l| (pf, l)).collect()
        } else {
            let pl: f64 = s.get_or("ploss", 0.0)?;
            let pf: Vec<f64> = s
                .list("pfail")?
                .ok_or_else(|| CliError::Usage("--pfail is required".into()))?;
            pf.into_iter().map(|f| (f, pl)).collect()
        };
        let e = Experiment::new(cfg.clone()).map_err(experiment_error)?;
        let records = e.sweep(&grid, progress).map_err(experiment_error)?;
        let est = e.fit_records(&records, vary_loss, proxy).map_err(experiment_error)?;
        eprintln!(
            "threshold {} = {:.5} +- {:.5} ({:?}, pairwise {:.5})",
            if vary_loss { "p_loss" } else { "p_fail" },
            est.p_th,
            est.uncertainty,
            est.kind,
            est.pairwise
        );
        let bytes = match self.format {
            Format::Csv => records_csv(&records)?,
            _ => output::json(&json!({
                "config": self.resolved(&cfg, json!({ "vary": if vary_loss { "loss" } else { "fail" }, "proxy": proxy })),
                "threshold": est,
                "records": records,
            }))?,
        };
        emit(self.output.as_deref(), &bytes)
    }

    fn curve(&self) -> Result<(), CliError> {
        let s = &self.settings;
        let cfg = experiment_config(s, "8,12,16")?;
        let presets: Vec<f64> = s.list_or("pfail-presets", "0.5,0.25,0.125")?;
        let e = Experiment::new(cfg.clone()).map_err(experiment_error)?;
        let points = e
            .threshold_curve(&presets, |msg| eprintln!("{msg}"))
            .map_err(experiment_error)?;
        let bytes = match self.format {
            Format::Csv => curve_csv(cfg.construction.name(), cfg.seed, &points)?,
            _ => {
                let config = self.resolved(&cfg, json!({}));
                let rows: Vec<Value> = points
                    .iter()
                    .map(|p| {
                        json!({
                            "p_fail": p.p_fail,
                            "p_loss_th": p.threshold.as_ref().map(|t| t.p_loss),
                            "uncertainty": p.threshold.as_ref().map(|t| t.uncertainty),
                            "bracket": p.threshold.as_ref().map(|t| t.bracket),
                            "config": config,
                        })
                    })
                    .collect();
                output::json(&rows)?
            }
        };
        emit(self.output.as_deref(), &bytes)
    }

    fn dispatch(&self) -> Result<(), CliError> {
        match self.name {
            "validate" => self.validate(),
            "rate" => self.rate(),
            "sweep" => self.sweep(),
            "threshold" => self.threshold(),
            "curve" => self.curve(),
            other => Err(CliError::Usage(format!("unknown command {other}"))),
        }
    }
}

fn run(m: &ArgMatches) -> Result<(), CliError> {
    let (name, sub) = m
        .subcommand()
        .ok_or_else(|| CliError::Usage("missing command".into()))?;
    let settings = settings(name, sub)?;
    let default_format = if name == "validate" { Format::Text } else { Format::Csv };
    let format = settings.get_or("format", default_format)?;
    if format == Format::Text && name != "validate" {
        return Err(CliError::Usage("--format takes csv or json".into()));
    }
    if format == Format::Csv && name == "validate" {
        return Err(CliError::Usage("validate --format takes text or json".into()));
    }
    let workers: Option<usize> = settings.get("workers")?;
    let run = Run {
        name,
        output: settings.raw("output").map(String::from),
        settings,
        format,
        workers,
    };
    match workers {
        Some(0) => Err(CliError::Usage("--workers must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(failed)?
            .install(|| run.dispatch()),
        None => run.dispatch(),
    }
}

fn main() -> ExitCode {
    let m = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => e.exit(),
    };
    match run(&m) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_definition_is_consistent() {
        cli().debug_assert();
    }
}
