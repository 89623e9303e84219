use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use threshold_core::error::{Error, Result};
use threshold_core::harness::{self, Experiment, Format, SweepReport, Verdict};
use threshold_core::potential::{PiecewisePotential, ScalingFamily};
use threshold_core::quasimode::build_quasimode;
use threshold_core::resonance::{detect_resonance, tune_to_resonance, DEFAULT_TOL};
use threshold_core::spectrum::find_negative_eigenvalues;
use threshold_core::threshold::{Case, CaseSelector};

const TUNE_TOL: f64 = 1e-12;

#[derive(Parser)]
#[command(name = "threshold-lab", version, about = "Weak-coupling threshold experiments for 1D Schrodinger operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect a zero-energy resonance of U and print its half-bound state.
    Resonance(Inputs),
    /// Find the coupling gamma in [lo, hi] at which gamma * U is resonant.
    Tune(Inputs),
    /// Negative eigenvalues of U + lambda alpha V(alpha x).
    Spectrum(Inputs),
    /// Threshold prediction for (U, V, scaling).
    Predict(Inputs),
    /// Quasimode for a higher-order case at one lambda.
    Quasimode(Inputs),
    /// Lambda sweep comparing measured and predicted threshold eigenvalues.
    Sweep(Inputs),
    /// Sweep plus quasimode certificates.
    Verify(Inputs),
}

#[derive(Args)]
struct Inputs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Potential for resonance and tune (defaults to U).
    #[arg(long)]
    potential: Option<PathBuf>,
    #[arg(long = "U")]
    u: Option<PathBuf>,
    #[arg(long = "V")]
    v: Option<PathBuf>,
    #[arg(long)]
    scaling: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    lo: Option<f64>,
    #[arg(long)]
    hi: Option<f64>,
    /// auto, t1, t2, t3 or t4.
    #[arg(long)]
    case: Option<CaseSelector>,
    /// Output file; sweep reports use the extension (.csv or .json) to pick the format.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run even when the prediction's hypotheses fail.
    #[arg(long)]
    force: bool,
    /// Resonance tolerance, or bracket width for tune.
    #[arg(long)]
    tol: Option<f64>,
}

impl Inputs {
    fn experiment(&self) -> Result<Experiment> {
        let mut exp = match &self.config {
            Some(path) => Experiment::load(path)?,
            None => {
                let v: PiecewisePotential = harness::load_json(require(&self.v, "--V")?)?;
                let family: ScalingFamily = harness::load_json(require(&self.scaling, "--scaling")?)?;
                let u = PiecewisePotential::zero(v.half_width());
                Experiment::new(u, v, family)
            }
        };
        if let Some(p) = &self.u {
            exp.u = harness::load_json(p)?;
        }
        if self.config.is_some() {
            if let Some(p) = &self.v {
                exp.v = harness::load_json(p)?;
            }
            if let Some(p) = &self.scaling {
                exp.family = harness::load_json(p)?;
            }
        }
        if let Some(c) = self.case {
            exp.case = c;
        }
        if let Some(l) = self.lambda {
            exp.lambda = Some(l);
        }
        if let Some(t) = self.tol {
            exp.tolerances.resonance = t;
        }
        exp.force |= self.force;
        Ok(exp)
    }

    fn potential(&self) -> Result<PiecewisePotential> {
        match (&self.potential, &self.u, &self.config) {
            (Some(p), _, _) | (None, Some(p), _) => harness::load_json(p),
            (None, None, Some(_)) => Ok(self.experiment()?.u),
            _ => Err(Error::Config("missing --potential".into())),
        }
    }
}

fn require<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    value.as_deref().ok_or_else(|| Error::Config(format!("missing {flag} (or --config)")))
}

fn lambda_of(exp: &Experiment) -> Result<f64> {
    exp.lambda.ok_or_else(|| Error::Config("missing --lambda".into()))
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    println!("{text}");
    if let Some(path) = out {
        fs::write(path, text + "\n")?;
    }
    Ok(())
}

fn emit_report(report: &SweepReport, exp: &Experiment, out: Option<&Path>) -> Result<bool> {
    harness::write_json(report, std::io::stdout().lock())?;
    let target = out
        .map(|p| (p.to_path_buf(), None))
        .or_else(|| exp.output.as_ref().map(|o| (o.path.clone(), o.format)));
    if let Some((path, format)) = target {
        let format = if out.is_some() { Some(Format::from_path(&path)) } else { format };
        harness::write_report(report, &path, format)?;
    }
    for r in &report.reasons {
        eprintln!("fail: {r}");
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(report.verdict == Verdict::Pass)
}

fn quasimode_case(exp: &Experiment) -> Result<Case> {
    match exp.case {
        CaseSelector::T2 => Ok(Case::T2),
        CaseSelector::T3 => Ok(Case::T3),
        CaseSelector::T4 => Ok(Case::T4),
        CaseSelector::T1 => Err(Error::Config("quasimodes exist only for t2, t3 and t4".into())),
        CaseSelector::Auto => {
            let h = exp.half_bound_state()?;
            let case = exp.prediction(&h)?.case;
            if case.is_higher_order() {
                Ok(case)
            } else {
                Err(Error::Config(format!("auto selected {case:?}, which has no quasimode; pass --case")))
            }
        }
    }
}

fn run(command: &Command) -> Result<bool> {
    let (Command::Resonance(inputs)
    | Command::Tune(inputs)
    | Command::Spectrum(inputs)
    | Command::Predict(inputs)
    | Command::Quasimode(inputs)
    | Command::Sweep(inputs)
    | Command::Verify(inputs)) = command;
    let out = inputs.out.as_deref();
    match command {
        Command::Resonance(_) => {
            let h = detect_resonance(&inputs.potential()?, inputs.tol.unwrap_or(DEFAULT_TOL))?;
            emit(&h, out)?;
        }
        Command::Tune(_) => {
            let lo = inputs.lo.ok_or_else(|| Error::Config("missing --lo".into()))?;
            let hi = inputs.hi.ok_or_else(|| Error::Config("missing --hi".into()))?;
            let gamma = tune_to_resonance(&inputs.potential()?, lo, hi, inputs.tol.unwrap_or(TUNE_TOL))?;
            emit(&serde_json::json!({ "gamma": gamma }), out)?;
        }
        Command::Spectrum(_) => {
            let exp = inputs.experiment()?;
            let q = exp.problem(lambda_of(&exp)?).q()?;
            emit(&find_negative_eigenvalues(&q, None)?, out)?;
        }
        Command::Predict(_) => {
            let exp = inputs.experiment()?;
            let h = exp.half_bound_state()?;
            match exp.prediction(&h) {
                Ok(p) => emit(&p, out)?,
                Err(Error::ConditionsViolated { failed, prediction: Some(p) }) => {
                    emit(&p, out)?;
                    eprintln!("conditions violated: {}", failed.join(", "));
                    return Ok(false);
                }
                Err(e) => return Err(e),
            }
        }
        Command::Quasimode(_) => {
            let exp = inputs.experiment()?;
            let case = quasimode_case(&exp)?;
            let h = exp.half_bound_state()?;
            let qm = build_quasimode(case, &exp.u, &exp.v, &exp.family, lambda_of(&exp)?, &h)?;
            emit(&qm, out)?;
        }
        Command::Sweep(_) => {
            let exp = inputs.experiment()?;
            return emit_report(&harness::sweep(&exp)?, &exp, out);
        }
        Command::Verify(_) => {
            let exp = inputs.experiment()?;
            return emit_report(&harness::verify(&exp)?, &exp, out);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(if err.is_config_error() {
                2
            } else if err.is_solver_failure() {
                3
            } else {
                1
            })
        }
    }
}
