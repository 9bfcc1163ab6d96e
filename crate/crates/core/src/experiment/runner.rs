use rayon::prelude::*;
use serde::Serialize;

use super::config::{ScenarioConfig, SweepAxis};
use crate::error::{Error, Result};
use crate::estimation::{
    estimate_closed_form, mle_numeric, sample_stream, statistics, trial_stream, ArccosBranch, EstimateMethod,
    EstimateRecord, EstimatorStats, MleOptions,
};
use crate::fisher::{
    crb, crb_pseudo, crb_total_asymptotic, fim_exact_at, fim_noise_asymptotic, fim_signal_asymptotic,
    fim_total_asymptotic, phi_bound_asymptotic, ExactFisher, FisherMatrix,
};
use crate::gaussian::Probe;
use crate::homodyne::{output_distribution, resolve_lo, HomodyneDistribution, LoSetting};
use crate::interferometer::PhasePair;
use crate::numeric::compensated_sum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunKind {
    Fig2,
    Fig3,
    Custom,
}

impl RunKind {
    pub fn name(&self) -> &'static str {
        match self {
            RunKind::Fig2 => "fig2",
            RunKind::Fig3 => "fig3",
            RunKind::Custom => "custom",
        }
    }
}

/// Where the CRB columns come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CrbSource {
    /// Closed-form bounds of the total asymptotic information.
    Asymptotic,
    /// Inverse of the exact Fisher matrix.
    Exact,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub x: f64,
    pub nu: u64,
    pub squeezed_photons: f64,
    pub coherent_photons: f64,
    pub beta: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub stats: EstimatorStats,
    /// CRB standard deviations.
    pub crb_s: f64,
    pub crb_d: f64,
    pub repetitions: u32,
    pub failures: u32,
    pub fail_rate: f64,
    pub branch_plus: u32,
    pub branch_minus: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScalingFits {
    pub rmse_s: LineFit,
    pub rmse_d: LineFit,
    pub crb_s: LineFit,
    pub crb_d: LineFit,
}

#[derive(Debug, Clone, Serialize)]
pub struct FimRow {
    pub x: f64,
    pub nu: u64,
    pub exact: [f64; 3],
    pub exact_signal: [f64; 3],
    pub exact_noise: [f64; 3],
    pub asymptotic: Option<[f64; 3]>,
    pub trace_inverse_exact: f64,
    pub trace_inverse_asymptotic: Option<f64>,
    /// Pseudo-inverse bound on `w·φ` from the asymptotic signal information.
    pub phi_bound: Option<f64>,
    /// Same from the exact signal information.
    pub phi_bound_exact_signal: Option<f64>,
    pub phi_bound_closed_form: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunResult {
    pub kind: RunKind,
    pub axis: SweepAxis,
    pub method: EstimateMethod,
    pub crb_source: CrbSource,
    pub truth: PhasePair,
    pub rows: Vec<SweepRow>,
    pub fits: Option<ScalingFits>,
    pub fim: Vec<FimRow>,
}

struct PointContext {
    index: u32,
    probe: Probe,
    nu: u64,
    theta: (f64, f64),
    dist: HomodyneDistribution,
    truth: PhasePair,
    reference: PhasePair,
    method: EstimateMethod,
    seed: u64,
    digest: u64,
}

impl PointContext {
    fn trial(&self, trial: u32) -> Result<EstimateRecord> {
        let batch = sample_stream(
            &self.dist,
            self.nu as usize,
            self.seed,
            trial_stream(self.index, trial),
            self.digest,
        )?;
        match self.method {
            EstimateMethod::ClosedForm => estimate_closed_form(&batch, self.probe.r, self.theta.0, self.reference),
            EstimateMethod::NumericMle => {
                let rec = mle_numeric(&batch, &self.probe, self.theta, self.truth, &MleOptions::default());
                if rec.converged {
                    Ok(rec)
                } else {
                    Err(Error::Estimator("numeric MLE did not converge".into()))
                }
            }
        }
    }
}

fn tuned_equal_k(lo: &LoSetting) -> Option<f64> {
    lo.k()
}

fn closed_form_supported(cfg: &ScenarioConfig, lo: &LoSetting) -> bool {
    let equal_shift = match *lo {
        LoSetting::Tuned { k1, k2 } => k1 == k2,
        LoSetting::Offset { offset1, offset2 } => offset1 == offset2,
        LoSetting::Explicit { .. } => false,
    };
    let port1_dark = match cfg.sweep.axis {
        SweepAxis::Beta => cfg.sweep.values.iter().all(|&b| b == 0.0),
        _ => cfg.probe.alpha1 == 0.0,
    };
    equal_shift && port1_dark && cfg.probe.r > 0.0
}

pub fn run_fig2(cfg: &ScenarioConfig) -> Result<RunResult> {
    if cfg.sweep.axis != SweepAxis::Nu {
        return Err(Error::Config("fig2 needs sweep.axis = \"nu\"".into()));
    }
    run(cfg, RunKind::Fig2)
}

pub fn run_fig3(cfg: &ScenarioConfig) -> Result<RunResult> {
    if cfg.sweep.axis != SweepAxis::Photons {
        return Err(Error::Config("fig3 needs sweep.axis = \"N\"".into()));
    }
    run(cfg, RunKind::Fig3)
}

pub fn run_custom(cfg: &ScenarioConfig) -> Result<RunResult> {
    run(cfg, RunKind::Custom)
}

pub fn run_kind(cfg: &ScenarioConfig, kind: RunKind) -> Result<RunResult> {
    match kind {
        RunKind::Fig2 => run_fig2(cfg),
        RunKind::Fig3 => run_fig3(cfg),
        RunKind::Custom => run_custom(cfg),
    }
}

fn run(cfg: &ScenarioConfig, kind: RunKind) -> Result<RunResult> {
    cfg.validate()?;
    let lo = cfg.lo.setting()?;
    let truth = cfg.truth();
    let reference = PhasePair::new(cfg.run.reference_phi_s.unwrap_or(truth.phi_s), truth.phi_d);
    let default_method = match kind {
        RunKind::Custom => EstimateMethod::NumericMle,
        _ => EstimateMethod::ClosedForm,
    };
    let method = cfg.run.estimator.unwrap_or(default_method);
    if method == EstimateMethod::ClosedForm && !closed_form_supported(cfg, &lo) {
        return Err(Error::Config(
            "run.estimator = \"closed_form\" needs alpha1 = 0, r > 0 and equal LO shifts on both detectors".into(),
        ));
    }
    let crb_source = match kind {
        RunKind::Custom => CrbSource::Exact,
        _ => {
            if tuned_equal_k(&lo).is_none() {
                return Err(Error::Config(format!(
                    "{} needs lo.mode = \"tuned\" with k1 = k2",
                    kind.name()
                )));
            }
            CrbSource::Asymptotic
        }
    };
    let digest = cfg.digest();
    let seed = cfg.run.seed;

    let mut rows = Vec::with_capacity(cfg.sweep.values.len());
    let mut fim = Vec::new();
    for (index, &x) in cfg.sweep.values.iter().enumerate() {
        let (probe, nu) = cfg.point(x);
        let theta = resolve_lo(&lo, truth, &probe)?;
        let dist = output_distribution(truth, &probe, theta.0, theta.1)?;
        let ctx = PointContext {
            index: index as u32,
            probe,
            nu,
            theta,
            dist,
            truth,
            reference,
            method,
            seed,
            digest,
        };
        let outcomes: Vec<Result<EstimateRecord>> = (0..cfg.run.repetitions)
            .into_par_iter()
            .map(|t| ctx.trial(t))
            .collect();
        let records: Vec<EstimateRecord> = outcomes.iter().filter_map(|o| o.as_ref().ok().copied()).collect();
        let failures = (outcomes.len() - records.len()) as u32;
        let count_branch = |b: ArccosBranch| records.iter().filter(|r| r.branch == Some(b)).count() as u32;

        let (crb_s, crb_d, fim_row) = match crb_source {
            CrbSource::Asymptotic => {
                let k = tuned_equal_k(&lo).unwrap_or(0.25);
                let r = crb_total_asymptotic(
                    probe.beta(),
                    probe.squeezed_photons(),
                    probe.coherent_photons(),
                    k,
                    nu,
                );
                (r.var_phi_s.sqrt(), r.var_phi_d.sqrt(), None)
            }
            CrbSource::Exact => {
                let exact = fim_exact_at(truth, &probe, theta.0, theta.1)?;
                let (s, d) = match crb(&exact.total, nu) {
                    Ok(r) => (r.var_phi_s.sqrt(), r.var_phi_d.sqrt()),
                    Err(_) => (f64::NAN, f64::NAN),
                };
                (s, d, Some(fim_row(cfg, &lo, &probe, x, nu, &exact)))
            }
        };
        if let Some(f) = fim_row {
            fim.push(f);
        }

        rows.push(SweepRow {
            x,
            nu,
            squeezed_photons: probe.squeezed_photons(),
            coherent_photons: probe.coherent_photons(),
            beta: probe.beta(),
            theta1: theta.0,
            theta2: theta.1,
            stats: statistics(&records, truth),
            crb_s,
            crb_d,
            repetitions: cfg.run.repetitions,
            failures,
            fail_rate: failures as f64 / cfg.run.repetitions as f64,
            branch_plus: count_branch(ArccosBranch::Plus),
            branch_minus: count_branch(ArccosBranch::Minus),
            seed,
        });
    }

    let fits = match cfg.sweep.axis {
        SweepAxis::Beta => None,
        _ if rows.len() >= 2 => Some(ScalingFits {
            rmse_s: fit_log_log(&rows, |r| r.stats.rmse_s),
            rmse_d: fit_log_log(&rows, |r| r.stats.rmse_d),
            crb_s: fit_log_log(&rows, |r| r.crb_s),
            crb_d: fit_log_log(&rows, |r| r.crb_d),
        }),
        _ => None,
    };

    Ok(RunResult {
        kind,
        axis: cfg.sweep.axis,
        method,
        crb_source,
        truth,
        rows,
        fits,
        fim,
    })
}

fn entries(f: &FisherMatrix) -> [f64; 3] {
    [f.ss(), f.sd(), f.dd()]
}

fn fim_row(cfg: &ScenarioConfig, lo: &LoSetting, probe: &Probe, x: f64, nu: u64, exact: &ExactFisher) -> FimRow {
    let (ns, nc, beta) = (probe.squeezed_photons(), probe.coherent_photons(), probe.beta());
    let phi_d = cfg.truth.phi_d;
    let (asymptotic, signal_asym) = match *lo {
        LoSetting::Tuned { k1, k2 } if k1 == k2 => (
            Some(fim_total_asymptotic(beta, ns, nc, k1)),
            Some(fim_signal_asymptotic(beta, ns, nc, k1, k1, phi_d)),
        ),
        LoSetting::Tuned { k1, k2 } => {
            let s = fim_signal_asymptotic(beta, ns, nc, k1, k2, phi_d);
            (Some(s + fim_noise_asymptotic(ns, k1, k2, phi_d)), Some(s))
        }
        _ => (None, None),
    };
    let weights = cfg.run.weights;
    let phi_bound = match (weights, signal_asym) {
        (Some(w), Some(f)) => crb_pseudo(&f, w, nu).ok(),
        _ => None,
    };
    let phi_bound_exact_signal = weights.and_then(|w| crb_pseudo(&exact.signal, w, nu).ok());
    let phi_bound_closed_form = match (weights, lo.k()) {
        (Some(_), Some(k)) => Some(phi_bound_asymptotic(ns, nc, k, nu)),
        _ => None,
    };
    FimRow {
        x,
        nu,
        exact: entries(&exact.total),
        exact_signal: entries(&exact.signal),
        exact_noise: entries(&exact.noise),
        asymptotic: asymptotic.as_ref().map(entries),
        trace_inverse_exact: exact.total.trace_of_inverse(),
        trace_inverse_asymptotic: asymptotic.as_ref().map(FisherMatrix::trace_of_inverse),
        phi_bound,
        phi_bound_exact_signal,
        phi_bound_closed_form,
    }
}

/// Least-squares fit of `log y = a + b log x` over rows with finite positive `y`.
fn fit_log_log(rows: &[SweepRow], y: impl Fn(&SweepRow) -> f64) -> LineFit {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| y(r) > 0.0 && y(r).is_finite())
        .map(|r| (r.x.ln(), y(r).ln()))
        .collect();
    line_fit(&pts)
}

pub fn line_fit(pts: &[(f64, f64)]) -> LineFit {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return LineFit {
            slope: f64::NAN,
            slope_stderr: f64::NAN,
            intercept: f64::NAN,
        };
    }
    let mx = compensated_sum(pts.iter().map(|p| p.0)) / n;
    let my = compensated_sum(pts.iter().map(|p| p.1)) / n;
    let sxx = compensated_sum(pts.iter().map(|p| (p.0 - mx).powi(2)));
    let sxy = compensated_sum(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)));
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr = compensated_sum(pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)));
    let slope_stderr = if pts.len() > 2 {
        (ssr / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    LineFit {
        slope,
        slope_stderr,
        intercept,
    }
}
