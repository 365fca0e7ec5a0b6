//! Command-line front end for `entcert-core`.
//!
//! [`run`] takes the argument list and the two output streams and returns the
//! process exit code, so the binary and the tests share one code path.
//! Exit codes: 0 success, 1 usage or format error, 2 infeasible data.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use entcert_core::scenarios::EPS_POS;
use entcert_core::{
    dual_value, lower_bound, noise_threshold, propagate_uncertainty, sweep, verify_dual, BoundResult,
    BoundStatus, DualConfig, Error, LowerBoundConfig, MeasureKind, RecordFile, Scenario, Uncertainty,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "entcert", version, about = "Certified entanglement lower bounds from measured expectation values")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lower-bound the entanglement of a measurement record.
    Certify(CertifyArgs),
    /// Bounds of a preset family over a grid of noise weights, as CSV.
    Sweep(SweepArgs),
    /// Noise threshold of a preset family.
    Threshold(ThresholdArgs),
    /// Dual function of a single observable, with a sampling audit.
    Dual(DualArgs),
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub measure: Option<MeasureKind>,
    #[arg(long, env = "ENTCERT_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Random starts per dual evaluation.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Monte-Carlo trials when the record carries sigmas.
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Bell,
    Cluster,
    W3,
}

#[derive(Debug, Args)]
pub struct PresetArgs {
    #[arg(long, value_enum)]
    pub preset: Preset,
    /// Local dimension of the Bell preset.
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    /// Qubit count of the cluster preset.
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    /// Correlators of the Bell preset (3 or 4).
    #[arg(long, default_value_t = 3)]
    pub ops: usize,
    #[arg(long, env = "ENTCERT_SEED", default_value_t = 0)]
    pub seed: u64,
}

impl PresetArgs {
    pub fn scenario(&self) -> Scenario {
        match self.preset {
            Preset::Bell => Scenario::BellEmbedded { d: self.d, ops: self.ops },
            Preset::Cluster => Scenario::ClusterLinear { n: self.n },
            Preset::W3 => Scenario::W3,
        }
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub preset: PresetArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub p_min: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub p_max: f64,
    #[arg(long)]
    pub step: f64,
    /// CSV destination; standard output when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[command(flatten)]
    pub preset: PresetArgs,
    #[arg(long, default_value_t = 0.01)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct DualArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(long)]
    pub measure: Option<MeasureKind>,
    #[arg(long, env = "ENTCERT_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Audit sample count.
    #[arg(long, default_value_t = 5000)]
    pub samples: usize,
}

/// JSON written by `certify -o`.
#[derive(Debug, Clone, Serialize)]
pub struct CertifyReport {
    pub measure: MeasureKind,
    pub eps_pos: f64,
    pub entangled: String,
    #[serde(flatten)]
    pub result: BoundResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uncertainty: Option<Uncertainty>,
}

struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: EXIT_USAGE, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Certify(a) => certify(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::Threshold(a) => threshold(a),
        Command::Dual(a) => dual(a),
    };
    match outcome {
        Ok((text, code)) => {
            let _ = out.write_all(text.as_bytes());
            code
        }
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn entangled_label(bound: f64, measure: MeasureKind) -> &'static str {
    match (bound > EPS_POS, measure) {
        (false, _) => "unknown",
        (true, MeasureKind::Ggm) => "yes (genuine)",
        (true, MeasureKind::Geometric) => "yes",
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

fn certify(a: &CertifyArgs) -> Result<(String, i32), Failure> {
    let file = RecordFile::load(&a.input)?;
    let record = file.to_record()?;
    let measure = a.measure.unwrap_or_else(|| file.effective_measure());
    let mut cfg = LowerBoundConfig { seed: a.seed, ..LowerBoundConfig::default() };
    if let Some(r) = a.restarts {
        cfg.cold_restarts = r;
    }
    let result = lower_bound(&record.observables, &record.values, measure, &cfg)?;
    let infeasible = result.status == BoundStatus::InfeasibleSuspected;
    let uncertainty = match &record.sigmas {
        Some(s) if !infeasible => Some(propagate_uncertainty(
            &record.observables,
            &record.values,
            s,
            measure,
            a.trials,
            &cfg,
        )?),
        _ => None,
    };
    let entangled = entangled_label(result.bound, measure);

    let mut text = String::new();
    let _ = writeln!(text, "measure: {measure}");
    let _ = writeln!(text, "bound: {:.3}", result.bound);
    let _ = writeln!(text, "raw: {:.6e}", result.raw);
    let _ = writeln!(text, "slope: {}", fmt_vec(&result.slope));
    let _ = writeln!(text, "intercept: {:.6}", result.intercept);
    let _ = writeln!(text, "status: {}", result.status);
    if let Some(u) = result.upper_estimate {
        let _ = writeln!(text, "upper_estimate: {u:.6}");
    }
    let _ = writeln!(text, "eps_pos: {EPS_POS:e}");
    let _ = writeln!(text, "entangled: {entangled}");
    if let Some(u) = &uncertainty {
        let _ = writeln!(text, "uncertainty: {:.3} ± {:.3} ({} trials)", u.mean, u.std, u.trials);
    }

    if let Some(path) = &a.output {
        let report = CertifyReport {
            measure,
            eps_pos: EPS_POS,
            entangled: entangled.to_string(),
            result,
            uncertainty,
        };
        let json = serde_json::to_string_pretty(&report).expect("reports always serialize");
        std::fs::write(path, json + "\n").map_err(|e| usage(format!("{}: {e}", path.display())))?;
    }
    Ok((text, if infeasible { EXIT_INFEASIBLE } else { EXIT_OK }))
}

/// CSV text of a sweep: header, one row per point, trailing threshold comment.
pub fn sweep_csv(rows: &[entcert_core::scenarios::SweepRow], threshold: f64) -> String {
    let mut text = String::from("p,bound,status\n");
    for r in rows {
        let _ = writeln!(text, "{},{},{}", r.p, r.bound, r.status);
    }
    let _ = writeln!(text, "# threshold={threshold}");
    text
}

fn sweep_cmd(a: &SweepArgs) -> Result<(String, i32), Failure> {
    if !(0.0..=1.0).contains(&a.p_min) || !(0.0..=1.0).contains(&a.p_max) || a.p_min > a.p_max {
        return Err(usage(format!("invalid range: need 0 <= p-min <= p-max <= 1, got [{}, {}]", a.p_min, a.p_max)));
    }
    let s = a.preset.scenario();
    let cfg = LowerBoundConfig { seed: a.preset.seed, ..LowerBoundConfig::default() };
    let res = sweep(&s, a.p_min, a.p_max, a.step, &cfg)?;
    let csv = sweep_csv(&res.rows, res.threshold);
    match &a.output {
        Some(path) => {
            std::fs::write(path, &csv).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            Ok((format!("{s}: {} rows written to {}, threshold={:.4}\n", res.rows.len(), path.display(), res.threshold), EXIT_OK))
        }
        None => Ok((csv, EXIT_OK)),
    }
}

fn threshold(a: &ThresholdArgs) -> Result<(String, i32), Failure> {
    let s = a.preset.scenario();
    s.observables()?;
    let cfg = LowerBoundConfig { seed: a.preset.seed, ..LowerBoundConfig::default() };
    let th = noise_threshold(&s, a.tol, &cfg)?;
    let witness = match s.witness_threshold() {
        Some(w) => format!("{w:.4}"),
        None => "n/a".to_string(),
    };
    Ok((format!("preset={s} threshold={th:.4} witness_threshold={witness}\n"), EXIT_OK))
}

fn dual(a: &DualArgs) -> Result<(String, i32), Failure> {
    let file = RecordFile::load(&a.input)?;
    let ops = file.build_observables()?;
    if ops.len() != 1 {
        return Err(usage(format!("dual takes exactly one observable, got {}", ops.len())));
    }
    let op = &ops[0];
    let measure = a.measure.unwrap_or_else(|| file.effective_measure());
    let mut cfg = DualConfig { seed: a.seed, ..DualConfig::new(measure) };
    if let Some(r) = a.restarts {
        cfg.restarts = r;
    }
    let eval = dual_value(op, &ops, &cfg)?;
    let mut text = String::new();
    let _ = writeln!(text, "measure: {measure}");
    let _ = writeln!(text, "dual_value: {:.6}", eval.value);
    let _ = writeln!(text, "expectation {}: {:.6}", op.label(), eval.witness_expectations[0]);
    let _ = writeln!(text, "maximizer_entanglement: {:.6}", eval.entanglement);
    let _ = writeln!(text, "converged: {}", eval.converged);
    match verify_dual(op, measure, &eval, a.samples, a.seed) {
        Ok(rep) => {
            let _ = writeln!(
                text,
                "audit: samples={} max_objective={:.6} worst_excess={:.3e} violations=0",
                rep.samples, rep.max_objective, rep.worst_excess
            );
            Ok((text, EXIT_OK))
        }
        Err(Error::DualViolation { excess, .. }) => {
            let _ = writeln!(text, "audit: samples={} worst_excess={excess:.3e} violations>=1", a.samples);
            Err(Failure { code: EXIT_USAGE, message: format!("{text}dual audit failed") })
        }
        Err(e) => Err(e.into()),
    }
}
