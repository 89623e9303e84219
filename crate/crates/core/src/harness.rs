//! Experiment configs, lambda sweeps, rate fitting and report output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{PiecewisePotential, ScalingFamily};
use crate::quasimode::build_quasimode;
use crate::resonance::{detect_resonance, HalfBoundState, DEFAULT_TOL};
use crate::spectrum::{threshold_eigenvalue, ScaledProblem};
use crate::threshold::{predict, Case, CaseSelector, ThresholdPrediction};

/// Environment variable capping row concurrency.
pub const THREADS_ENV: &str = "THRESHOLD_LAB_THREADS";
/// Default grid density.
pub const POINTS_PER_DECADE: f64 = 8.0;
/// Slack allowed when checking that a sequence trends monotonically.
pub const TREND_SLACK: f64 = 1e-4;

/// A file reference or an inline value.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Source<T> {
    Path(PathBuf),
    Inline(T),
}

#[derive(Debug, Clone, Copy, Deserialize)]
pub struct GridSpec {
    pub max: f64,
    pub min: f64,
    #[serde(default)]
    pub points: Option<usize>,
}

impl GridSpec {
    /// Geometric grid from `max` down to `min`.
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.min > 0.0 && self.min < self.max && self.max.is_finite()) {
            return Err(Error::Config(format!(
                "lambda grid needs 0 < min < max, got min = {}, max = {}",
                self.min, self.max
            )));
        }
        let decades = (self.max / self.min).log10();
        let n = self.points.unwrap_or_else(|| (POINTS_PER_DECADE * decades).round() as usize + 1);
        if n < 3 {
            return Err(Error::Config(format!("lambda grid needs at least 3 points, got {n}")));
        }
        let step = decades / (n - 1) as f64;
        Ok((0..n)
            .map(|i| match i {
                0 => self.max,
                i if i == n - 1 => self.min,
                i => self.max * 10f64.powf(-step * i as f64),
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub relative: f64,
    pub resonance: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { relative: 0.05, resonance: DEFAULT_TOL }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl Format {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Json,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct OutputSpec {
    pub path: PathBuf,
    #[serde(default)]
    pub format: Option<Format>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    #[serde(rename = "U", default)]
    u: Option<Source<PiecewisePotential>>,
    #[serde(rename = "V")]
    v: Source<PiecewisePotential>,
    scaling: Source<ScalingFamily>,
    #[serde(default)]
    case: CaseSelector,
    #[serde(default)]
    lambda_grid: Option<GridSpec>,
    #[serde(default)]
    lambda: Option<f64>,
    #[serde(default)]
    tolerances: Tolerances,
    #[serde(default)]
    output: Option<OutputSpec>,
    #[serde(default)]
    force: bool,
}

/// A fully loaded experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub u: PiecewisePotential,
    pub v: PiecewisePotential,
    pub family: ScalingFamily,
    pub case: CaseSelector,
    pub grid: Option<GridSpec>,
    pub lambda: Option<f64>,
    pub tolerances: Tolerances,
    pub output: Option<OutputSpec>,
    pub force: bool,
}

fn config_error(path: &Path, err: impl std::fmt::Display) -> Error {
    Error::Config(format!("{}: {err}", path.display()))
}

/// Reads and validates a JSON file, reporting any failure as a config error.
pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| config_error(path, e))?;
    serde_json::from_str(&text).map_err(|e| config_error(path, e))
}

fn resolve<T: DeserializeOwned>(source: Source<T>, base: &Path) -> Result<T> {
    match source {
        Source::Inline(v) => Ok(v),
        Source::Path(p) => load_json(&if p.is_absolute() { p } else { base.join(p) }),
    }
}

impl Experiment {
    pub fn new(u: PiecewisePotential, v: PiecewisePotential, family: ScalingFamily) -> Self {
        Self {
            u,
            v,
            family,
            case: CaseSelector::Auto,
            grid: None,
            lambda: None,
            tolerances: Tolerances::default(),
            output: None,
            force: false,
        }
    }

    /// Loads a config; relative paths inside it are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let raw: RawExperiment = load_json(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let v: PiecewisePotential = resolve(raw.v, &base)?;
        let u = match raw.u {
            Some(s) => resolve(s, &base)?,
            None => PiecewisePotential::zero(v.half_width()),
        };
        let output = raw.output.map(|mut o| {
            if o.path.is_relative() {
                o.path = base.join(&o.path);
            }
            o
        });
        let exp = Self {
            u,
            v,
            family: resolve(raw.scaling, &base)?,
            case: raw.case,
            grid: raw.lambda_grid,
            lambda: raw.lambda,
            tolerances: raw.tolerances,
            output,
            force: raw.force,
        };
        if let Some(g) = &exp.grid {
            g.values()?;
        }
        Ok(exp)
    }

    pub fn grid_values(&self) -> Result<Vec<f64>> {
        self.grid
            .as_ref()
            .ok_or_else(|| Error::Config("experiment has no lambda_grid".into()))?
            .values()
    }

    pub fn half_bound_state(&self) -> Result<HalfBoundState> {
        detect_resonance(&self.u, self.tolerances.resonance)
    }

    /// The prediction, honoring `force` for violated hypotheses.
    pub fn prediction(&self, h: &HalfBoundState) -> Result<ThresholdPrediction> {
        match predict(self.case, &self.u, &self.v, &self.family, h) {
            Err(Error::ConditionsViolated { failed, prediction: Some(p) }) if self.force => {
                let mut p = *p;
                p.warnings.push(format!("forced despite violated conditions: {}", failed.join(", ")));
                Ok(p)
            }
            other => other,
        }
    }

    pub fn problem(&self, lambda: f64) -> ScaledProblem {
        ScaledProblem::new(self.u.clone(), self.v.clone(), self.family.clone(), lambda)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Quasimode data recorded next to a measured eigenvalue.
#[derive(Debug, Clone, Serialize)]
pub struct CertificateRow {
    pub omega: f64,
    pub k_lambda: f64,
    pub norm: f64,
    pub residual: f64,
    pub accuracy_ratio: f64,
    /// `||r|| / ||psi||`.
    pub bound: f64,
    /// `|e_measured + omega^2|`.
    pub gap: f64,
    pub certified: bool,
    pub junction_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub alpha: Option<f64>,
    pub e_measured: Option<f64>,
    pub e_predicted: Option<f64>,
    pub ratio: Option<f64>,
    pub omega: Option<f64>,
    pub residual_ratio: Option<f64>,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateRow>,
}

impl SweepRow {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub exponent: f64,
    pub constant: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub case: Case,
    pub k_predicted: f64,
    pub prediction: ThresholdPrediction,
    pub rows: Vec<SweepRow>,
    pub fitted_k: Option<f64>,
    pub relative_error: Option<f64>,
    pub fit: Option<RateFit>,
    pub verdict: Verdict,
    pub reasons: Vec<String>,
    pub warnings: Vec<String>,
}

/// Least-squares fit of `log|e| = exponent * log(scale) + log(constant)`.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(s, e)| *s > 0.0 && *e != 0.0 && e.is_finite())
        .map(|(s, e)| (s.ln(), e.abs().ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(pts.len()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData(1));
    }
    let exponent = sxy / sxx;
    Ok(RateFit { exponent, constant: (my - exponent * mx).exp() })
}

/// True when `|x - 1|` does not grow along the sequence (up to [`TREND_SLACK`]).
pub fn trending_to_one(values: &[f64]) -> bool {
    values.windows(2).all(|w| (w[1] - 1.0).abs() <= (w[0] - 1.0).abs() + TREND_SLACK)
}

/// True when the sequence does not increase (up to [`TREND_SLACK`] relative).
pub fn non_increasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] * (1.0 + TREND_SLACK))
}

fn measure_row(exp: &Experiment, prediction: &ThresholdPrediction, h: &HalfBoundState, lambda: f64, certify: bool) -> SweepRow {
    let mut row = SweepRow {
        lambda,
        alpha: exp.family.alpha_at(lambda).ok(),
        e_measured: None,
        e_predicted: prediction.predicted_e(lambda).ok(),
        ratio: None,
        omega: None,
        residual_ratio: None,
        status: "ok".into(),
        certificate: None,
    };
    match threshold_eigenvalue(&exp.problem(lambda)) {
        Ok((e, w)) => {
            row.e_measured = Some(e);
            row.omega = Some(w);
            row.ratio = row.e_predicted.filter(|p| *p != 0.0).map(|p| e / p);
        }
        Err(Error::NotFound) => row.status = "not-found".into(),
        Err(err) => row.status = format!("error: {err}"),
    }
    if certify && prediction.case.is_higher_order() {
        match build_quasimode(prediction.case, &exp.u, &exp.v, &exp.family, lambda, h) {
            Ok(qm) => {
                let bound = qm.residual / qm.norm;
                let gap = row.e_measured.map(|e| (e + qm.omega * qm.omega).abs());
                row.residual_ratio = Some(qm.accuracy_ratio);
                row.certificate = Some(CertificateRow {
                    omega: qm.omega,
                    k_lambda: qm.k_lambda,
                    norm: qm.norm,
                    residual: qm.residual,
                    accuracy_ratio: qm.accuracy_ratio,
                    bound,
                    gap: gap.unwrap_or(f64::NAN),
                    certified: gap.is_some_and(|g| g <= bound),
                    junction_error: qm.junction_errors.max(),
                });
            }
            Err(err) => {
                if row.ok() {
                    row.status = format!("quasimode: {err}");
                }
            }
        }
    }
    row
}

fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    let threads = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0);
    match threads.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

fn run(exp: &Experiment, certify: bool) -> Result<SweepReport> {
    let grid = exp.grid_values()?;
    let h = exp.half_bound_state()?;
    let prediction = exp.prediction(&h)?;
    let rows: Vec<SweepRow> =
        with_pool(|| grid.par_iter().map(|&l| measure_row(exp, &prediction, &h, l, certify)).collect());

    let mut reasons = Vec::new();
    let mut warnings = prediction.warnings.clone();
    let k = prediction.k.abs();

    let smallest = rows.last().expect("grid has at least three points");
    let fitted_k = match smallest.e_measured {
        Some(e) => Some((-e).sqrt() / prediction.rate_scale(smallest.lambda)?),
        None => None,
    };
    let relative_error = fitted_k.map(|f| if k > 0.0 { (f - k).abs() / k } else { f64::INFINITY });

    if rows.iter().all(|r| r.status == "not-found") {
        reasons.push("no-bound-state".into());
    } else if fitted_k.is_none() {
        reasons.push(format!("smallest-lambda row failed: {}", smallest.status));
    }
    if let Some(err) = relative_error {
        if !(err <= exp.tolerances.relative) {
            reasons.push(format!("relative error {err:.4e} exceeds {}", exp.tolerances.relative));
        }
    }
    let tail: Vec<f64> = rows.iter().rev().take(3).rev().filter_map(|r| r.ratio).collect();
    if tail.len() < 3 || !trending_to_one(&tail) {
        reasons.push("ratio is not trending toward 1 over the last three grid points".into());
    }
    if !prediction.conditions_hold() {
        reasons.push(format!("conditions violated: {}", prediction.failed_conditions().join(", ")));
    }
    if certify && prediction.case.is_higher_order() {
        let certs: Vec<&CertificateRow> = rows.iter().filter_map(|r| r.certificate.as_ref()).collect();
        if certs.len() < rows.len() || certs.iter().any(|c| !c.certified) {
            reasons.push("quasimode certificate failed at some lambda".into());
        }
        let acc: Vec<f64> = certs.iter().rev().take(3).rev().map(|c| c.accuracy_ratio).collect();
        if acc.len() < 3 || !non_increasing(&acc) {
            reasons.push("accuracy ratio does not decrease over the last three grid points".into());
        }
    }

    let fit_points: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| Some((prediction.rate_scale(r.lambda).ok()?, r.e_measured?)))
        .collect();
    let fit = fit_rate(&fit_points).ok();
    if fit.is_none() {
        warnings.push("rate fit skipped: fewer than 3 successful rows".into());
    }

    Ok(SweepReport {
        case: prediction.case,
        k_predicted: k,
        rows,
        fitted_k,
        relative_error,
        fit,
        verdict: if reasons.is_empty() { Verdict::Pass } else { Verdict::Fail },
        reasons,
        warnings,
        prediction,
    })
}

/// Measures the threshold eigenvalue along the grid and compares with the prediction.
pub fn sweep(exp: &Experiment) -> Result<SweepReport> {
    run(exp, false)
}

/// [`sweep`] plus a quasimode certificate at every grid point for the higher-order cases.
pub fn verify(exp: &Experiment) -> Result<SweepReport> {
    run(exp, true)
}

fn csv_field(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

pub fn write_csv(report: &SweepReport, mut out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(["lambda", "alpha", "e_measured", "e_predicted", "ratio", "omega", "residual_ratio", "status"])?;
    for r in &report.rows {
        w.write_record([
            format!("{:e}", r.lambda),
            csv_field(r.alpha),
            csv_field(r.e_measured),
            csv_field(r.e_predicted),
            csv_field(r.ratio),
            csv_field(r.omega),
            csv_field(r.residual_ratio),
            r.status.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json(report: &SweepReport, mut out: impl Write) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, report)?;
    writeln!(out)?;
    Ok(())
}

/// Writes the report to `path` in the requested format (or the one implied by the extension).
pub fn write_report(report: &SweepReport, path: &Path, format: Option<Format>) -> Result<()> {
    let file = fs::File::create(path)?;
    let out = std::io::BufWriter::new(file);
    match format.unwrap_or_else(|| Format::from_path(path)) {
        Format::Json => write_json(report, out),
        Format::Csv => write_csv(report, out),
    }
}
