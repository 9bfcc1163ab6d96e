//! Sampling of joint homodyne outcomes and phase estimators.
//!
//! Two estimator families are provided: closed-form inversions valid in the
//! `α₁ = 0`, `k₁ = k₂` tuned regime, and a numeric maximum-likelihood fit that
//! works for any probe and LO setting.
//!
//! RNG streams: every batch is drawn from `ChaCha20Rng::seed_from_u64(seed)`
//! with `set_stream(stream)`. Experiments use [`trial_stream`] to map a
//! `(sweep point, trial)` pair to a stream, so trials are independent and the
//! result does not depend on scheduling.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::fisher::fisher_from_moments;
use crate::gaussian::Probe;
use crate::homodyne::{moment_derivatives, output_distribution, HomodyneDistribution};
use crate::interferometer::PhasePair;
use crate::numeric::{wrap_angle, CompensatedSum};

/// `μ̃` with a smaller norm leaves `φ̃_d` undefined.
pub const MIN_MEAN_NORM: f64 = 1e-12;

/// Arccos arguments this far outside `[−1, 1]` are clamped; beyond it the
/// closed-form `φ̃_s` fails.
pub const ARCCOS_CLAMP: f64 = 1e-6;

/// Stream index for trial `trial` of sweep point `point`.
pub fn trial_stream(point: u32, trial: u32) -> u64 {
    ((point as u64) << 32) | trial as u64
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub outcomes: Vec<Vector2<f64>>,
    pub seed: u64,
    pub stream: u64,
    /// Identifier of the generating configuration.
    pub digest: u64,
}

impl SampleBatch {
    pub fn new(outcomes: Vec<Vector2<f64>>, seed: u64, stream: u64, digest: u64) -> Self {
        Self {
            outcomes,
            seed,
            stream,
            digest,
        }
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    /// `μ̃ = (1/ν) Σ x⃗ᵢ`.
    pub fn mean(&self) -> Vector2<f64> {
        let mut acc = [CompensatedSum::default(); 2];
        for x in &self.outcomes {
            acc[0].add(x[0]);
            acc[1].add(x[1]);
        }
        let nu = self.len() as f64;
        Vector2::new(acc[0].value() / nu, acc[1].value() / nu)
    }

    /// `Σ̃ = (1/ν) Σ (x⃗ᵢ − μ̃)(x⃗ᵢ − μ̃)ᵀ`.
    pub fn covariance(&self) -> Matrix2<f64> {
        let m = self.mean();
        let mut acc = [CompensatedSum::default(); 3];
        for x in &self.outcomes {
            let d = x - m;
            acc[0].add(d[0] * d[0]);
            acc[1].add(d[0] * d[1]);
            acc[2].add(d[1] * d[1]);
        }
        let nu = self.len() as f64;
        let (a, b, c) = (acc[0].value() / nu, acc[1].value() / nu, acc[2].value() / nu);
        Matrix2::new(a, b, b, c)
    }

    pub fn moments(&self) -> SampleMoments {
        SampleMoments {
            mean: self.mean(),
            covariance: self.covariance(),
            nu: self.len(),
        }
    }
}

/// Sufficient statistics of a batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleMoments {
    pub mean: Vector2<f64>,
    pub covariance: Matrix2<f64>,
    pub nu: usize,
}

/// `ν` draws on stream 0 of `seed`.
pub fn sample(dist: &HomodyneDistribution, nu: usize, seed: u64) -> Result<SampleBatch> {
    sample_stream(dist, nu, seed, 0, 0)
}

/// `ν` draws `x = μ + L z` with `Σ = L Lᵀ`.
pub fn sample_stream(
    dist: &HomodyneDistribution,
    nu: usize,
    seed: u64,
    stream: u64,
    digest: u64,
) -> Result<SampleBatch> {
    if nu == 0 {
        return Err(Error::Config("sample size must be at least 1".into()));
    }
    let chol = dist.sigma.cholesky().ok_or(Error::NotPositiveDefinite { det: dist.det_sigma })?;
    let l = chol.l();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let outcomes = (0..nu)
        .map(|_| {
            let z = Vector2::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
            dist.mu + l * z
        })
        .collect();
    Ok(SampleBatch::new(outcomes, seed, stream, digest))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    ClosedForm,
    NumericMle,
}

/// Sign chosen in `2θ₁ − 2π ± arccos(X)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ArccosBranch {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EstimateRecord {
    pub phi_s_hat: f64,
    pub phi_d_hat: f64,
    pub method: EstimateMethod,
    pub converged: bool,
    /// Closed form only.
    pub branch: Option<ArccosBranch>,
}

/// `φ̃_d = 2·atan2(−μ̃₁, μ̃₂)`, reported in `(−π, π]`.
///
/// With tuned oscillators the mean is even in `φ_d`: the tuning follows
/// `γ₂₁`, which absorbs the sign of `sin(φ_d/2)`. The estimate therefore
/// lands in `(0, π)` and recovers `|φ_d|`.
pub fn phi_d_from_mean(mean: &Vector2<f64>) -> Result<f64> {
    if mean.norm() < MIN_MEAN_NORM {
        return Err(Error::Estimator("sample mean vanishes; φ_d is undefined".into()));
    }
    Ok(wrap_angle(2.0 * (-mean[0]).atan2(mean[1])))
}

pub fn mle_phi_d(batch: &SampleBatch) -> Result<f64> {
    phi_d_from_mean(&batch.mean())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiSEstimate {
    /// Representative nearest the reference.
    pub value: f64,
    pub branch: ArccosBranch,
    pub clamped: bool,
}

/// `φ̃_s = 2θ₁ − 2π ± arccos X` with
/// `X = (2(p₁Σ̃₁₁ + p₂Σ̃₂₂ + 2√(p₁p₂)Σ̃₁₂) − cosh 2r) / sinh 2r` and
/// `p₁ = cos²(φ̃_d/2)`. The sign and the `2π` multiple are those placing the
/// estimate nearest `reference`.
pub fn phi_s_from_covariance(
    cov: &Matrix2<f64>,
    phi_d_hat: f64,
    r: f64,
    theta1: f64,
    reference: f64,
) -> Result<PhiSEstimate> {
    let sinh2r = (2.0 * r).sinh();
    if sinh2r == 0.0 {
        return Err(Error::Estimator("φ_s estimator needs squeezing (sinh 2r = 0)".into()));
    }
    let p1 = (0.5 * phi_d_hat).cos().powi(2);
    let p2 = 1.0 - p1;
    let combo = p1 * cov[(0, 0)] + p2 * cov[(1, 1)] + 2.0 * (p1 * p2).sqrt() * cov[(0, 1)];
    let mut x = (2.0 * combo - (2.0 * r).cosh()) / sinh2r;
    let mut clamped = false;
    if x.abs() > 1.0 {
        if x.abs() > 1.0 + ARCCOS_CLAMP {
            return Err(Error::Estimator(format!("arccos argument {x} outside [-1, 1]")));
        }
        x = x.signum();
        clamped = true;
    }
    let acos = x.acos();
    let base = 2.0 * theta1 - 2.0 * PI;
    let nearest = |candidate: f64| reference + wrap_angle(candidate - reference);
    let plus = nearest(base + acos);
    let minus = nearest(base - acos);
    let (value, branch) = if (plus - reference).abs() <= (minus - reference).abs() {
        (plus, ArccosBranch::Plus)
    } else {
        (minus, ArccosBranch::Minus)
    };
    Ok(PhiSEstimate { value, branch, clamped })
}

pub fn mle_phi_s(batch: &SampleBatch, phi_d_hat: f64, r: f64, theta1: f64, reference: f64) -> Result<PhiSEstimate> {
    phi_s_from_covariance(&batch.covariance(), phi_d_hat, r, theta1, reference)
}

/// Both closed-form estimates from sample moments.
pub fn closed_form_from_moments(
    mean: &Vector2<f64>,
    cov: &Matrix2<f64>,
    r: f64,
    theta1: f64,
    reference: PhasePair,
) -> Result<EstimateRecord> {
    let phi_d = phi_d_from_mean(mean)?;
    let phi_d = reference.phi_d + wrap_angle(phi_d - reference.phi_d);
    let s = phi_s_from_covariance(cov, phi_d, r, theta1, reference.phi_s)?;
    Ok(EstimateRecord {
        phi_s_hat: s.value,
        phi_d_hat: phi_d,
        method: EstimateMethod::ClosedForm,
        converged: true,
        branch: Some(s.branch),
    })
}

pub fn estimate_closed_form(batch: &SampleBatch, r: f64, theta1: f64, reference: PhasePair) -> Result<EstimateRecord> {
    let m = batch.moments();
    closed_form_from_moments(&m.mean, &m.covariance, r, theta1, reference)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleOptions {
    pub max_iterations: usize,
    /// Per-sample gradient norm.
    pub gradient_tolerance: f64,
    pub step_tolerance: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            gradient_tolerance: 1e-8,
            step_tolerance: 1e-10,
        }
    }
}

/// `log L(φ) = −ν log 2π − (ν/2) log det Σ − ½ Tr[Σ⁻¹ S]`, with
/// `S = ν(Σ̃ + (μ̃ − μ)(μ̃ − μ)ᵀ)`.
pub fn log_likelihood(m: &SampleMoments, probe: &Probe, theta: (f64, f64), phases: PhasePair) -> Result<f64> {
    let dist = output_distribution(phases, probe, theta.0, theta.1)?;
    let nu = m.nu as f64;
    let s = scatter(m, &dist);
    Ok(-nu * (2.0 * PI).ln() - 0.5 * nu * dist.det_sigma.ln() - 0.5 * (dist.precision() * s).trace())
}

fn scatter(m: &SampleMoments, dist: &HomodyneDistribution) -> Matrix2<f64> {
    let e = m.mean - dist.mu;
    (m.covariance + e * e.transpose()) * m.nu as f64
}

/// `∇ log L = ∂μᵀ Σ⁻¹ (Σᵢx⃗ᵢ − νμ) + ½ Tr[Σ⁻¹ ∂Σ Σ⁻¹ (S − νΣ)]`.
pub fn log_likelihood_gradient(
    m: &SampleMoments,
    probe: &Probe,
    theta: (f64, f64),
    phases: PhasePair,
) -> Result<[f64; 2]> {
    let dist = output_distribution(phases, probe, theta.0, theta.1)?;
    let der = moment_derivatives(phases, probe, theta.0, theta.1)?;
    Ok(gradient(m, &dist, &der.dmu, &der.dsigma))
}

fn gradient(m: &SampleMoments, dist: &HomodyneDistribution, dmu: &[Vector2<f64>; 2], dsigma: &[Matrix2<f64>; 2]) -> [f64; 2] {
    let nu = m.nu as f64;
    let prec = dist.precision();
    let resid = prec * (m.mean - dist.mu) * nu;
    let excess = prec * (scatter(m, dist) - dist.sigma * nu) * prec;
    let mut g = [0.0; 2];
    for k in 0..2 {
        g[k] = dmu[k].dot(&resid) + 0.5 * (dsigma[k] * excess).trace();
    }
    g
}

/// Fisher-scoring maximization of the likelihood from `init`, with the LO
/// angles fixed at `theta`.
///
/// Steps are `(νF)⁻¹∇ log L`, halved until the likelihood does not decrease.
/// Stops when the per-sample gradient norm or the step falls below
/// tolerance; otherwise returns the best iterate with `converged = false`.
pub fn mle_numeric(
    batch: &SampleBatch,
    probe: &Probe,
    theta: (f64, f64),
    init: PhasePair,
    options: &MleOptions,
) -> EstimateRecord {
    mle_numeric_from_moments(&batch.moments(), probe, theta, init, options)
}

pub fn mle_numeric_from_moments(
    m: &SampleMoments,
    probe: &Probe,
    theta: (f64, f64),
    init: PhasePair,
    options: &MleOptions,
) -> EstimateRecord {
    let record = |p: PhasePair, converged: bool| EstimateRecord {
        phi_s_hat: p.phi_s,
        phi_d_hat: p.phi_d,
        method: EstimateMethod::NumericMle,
        converged,
        branch: None,
    };
    let nu = m.nu as f64;
    let mut current = init;
    let mut current_ll = match log_likelihood(m, probe, theta, current) {
        Ok(v) => v,
        Err(_) => return record(init, false),
    };
    for _ in 0..options.max_iterations {
        let Ok(dist) = output_distribution(current, probe, theta.0, theta.1) else {
            break;
        };
        let Ok(der) = moment_derivatives(current, probe, theta.0, theta.1) else {
            break;
        };
        let g = gradient(m, &dist, &der.dmu, &der.dsigma);
        if (g[0].hypot(g[1])) / nu < options.gradient_tolerance {
            return record(current, true);
        }
        let (fs, fn_) = fisher_from_moments(&dist, &der);
        let mut f = (fs.matrix + fn_.matrix) * nu;
        let tr = f.trace();
        if !(tr > 0.0) {
            break;
        }
        if f.determinant() <= 1e-12 * tr * tr {
            f += Matrix2::identity() * (1e-6 * tr);
        }
        let Some(inv) = f.try_inverse() else {
            break;
        };
        let mut step = inv * Vector2::new(g[0], g[1]);
        let mut accepted = false;
        for _ in 0..40 {
            let trial = PhasePair::new(current.phi_s + step[0], current.phi_d + step[1]);
            if let Ok(ll) = log_likelihood(m, probe, theta, trial) {
                if ll >= current_ll {
                    current = trial;
                    current_ll = ll;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        if step.norm() < options.step_tolerance {
            return record(current, true);
        }
    }
    record(current, false)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EstimatorStats {
    pub count: usize,
    pub bias_s: f64,
    pub bias_d: f64,
    pub rmse_s: f64,
    pub rmse_d: f64,
    /// Standard errors of the biases.
    pub stderr_s: f64,
    pub stderr_d: f64,
    /// Standard errors of the rmse values (delta method).
    pub rmse_stderr_s: f64,
    pub rmse_stderr_d: f64,
}

struct ErrorMoments {
    bias: f64,
    rmse: f64,
    stderr: f64,
    rmse_stderr: f64,
}

fn error_moments(errors: &[f64]) -> ErrorMoments {
    let n = errors.len() as f64;
    let mut s1 = CompensatedSum::default();
    let mut s2 = CompensatedSum::default();
    for &e in errors {
        s1.add(e);
        s2.add(e * e);
    }
    let bias = s1.value() / n;
    let msq = s2.value() / n;
    let mut dev = CompensatedSum::default();
    let mut dev2 = CompensatedSum::default();
    for &e in errors {
        dev.add((e - bias).powi(2));
        dev2.add((e * e - msq).powi(2));
    }
    let var = dev.value() / (n - 1.0);
    let var_sq = dev2.value() / (n - 1.0);
    let rmse = msq.sqrt();
    let rmse_stderr = if rmse > 0.0 { (var_sq / n).sqrt() / (2.0 * rmse) } else { 0.0 };
    ErrorMoments {
        bias,
        rmse,
        stderr: (var / n).sqrt(),
        rmse_stderr,
    }
}

/// Bias, rmse and their standard errors. Errors are circular differences
/// `wrap(φ̃ − φ)`. Fewer than two records give NaN standard errors.
pub fn statistics(records: &[EstimateRecord], truth: PhasePair) -> EstimatorStats {
    let es: Vec<f64> = records.iter().map(|r| wrap_angle(r.phi_s_hat - truth.phi_s)).collect();
    let ed: Vec<f64> = records.iter().map(|r| wrap_angle(r.phi_d_hat - truth.phi_d)).collect();
    let s = error_moments(&es);
    let d = error_moments(&ed);
    EstimatorStats {
        count: records.len(),
        bias_s: s.bias,
        bias_d: d.bias,
        rmse_s: s.rmse,
        rmse_d: d.rmse,
        stderr_s: s.stderr,
        stderr_d: d.stderr,
        rmse_stderr_s: s.rmse_stderr,
        rmse_stderr_d: d.rmse_stderr,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homodyne::{resolve_lo, LoSetting};
    use approx::assert_abs_diff_eq;

    fn rec(s: f64, d: f64) -> EstimateRecord {
        EstimateRecord {
            phi_s_hat: s,
            phi_d_hat: d,
            method: EstimateMethod::ClosedForm,
            converged: true,
            branch: None,
        }
    }

    #[test]
    fn phi_d_examples() {
        assert_eq!(phi_d_from_mean(&Vector2::new(0.0, 2.0)).unwrap(), 0.0);
        assert_abs_diff_eq!(phi_d_from_mean(&Vector2::new(-1.0, 1.0)).unwrap(), PI / 2.0, epsilon = 1e-15);
        assert!(phi_d_from_mean(&Vector2::zeros()).is_err());
    }

    #[test]
    fn phi_s_needs_squeezing() {
        assert!(phi_s_from_covariance(&Matrix2::identity(), 0.3, 0.0, 0.1, 0.0).is_err());
    }

    #[test]
    fn phi_s_rejects_far_out_of_domain() {
        let cov = Matrix2::identity() * 100.0;
        assert!(matches!(
            phi_s_from_covariance(&cov, 0.3, 1.0, 0.1, 0.0),
            Err(Error::Estimator(_))
        ));
    }

    #[test]
    fn exact_moments_round_trip() {
        let probe = Probe::from_photons(7.0, 10.0, 0.0);
        let truth = PhasePair::new(0.7, 1.1);
        let (t1, t2) = resolve_lo(&LoSetting::tuned(0.25), truth, &probe).unwrap();
        let dist = output_distribution(truth, &probe, t1, t2).unwrap();
        let est = closed_form_from_moments(&dist.mu, &dist.sigma, probe.r, t1, truth).unwrap();
        assert_abs_diff_eq!(est.phi_d_hat, 1.1, epsilon = 1e-12);
        assert_abs_diff_eq!(est.phi_s_hat, 0.7, epsilon = 1e-10);
    }

    #[test]
    fn batch_moments() {
        let b = SampleBatch::new(
            vec![Vector2::new(1.0, 0.0), Vector2::new(-1.0, 2.0)],
            0,
            0,
            0,
        );
        assert_eq!(b.mean(), Vector2::new(0.0, 1.0));
        assert_eq!(b.covariance(), Matrix2::new(1.0, -1.0, -1.0, 1.0));
    }

    #[test]
    fn sampling_is_deterministic_per_stream() {
        let dist = HomodyneDistribution::new(Vector2::new(1.0, -2.0), Matrix2::new(2.0, 0.3, 0.3, 0.7)).unwrap();
        let a = sample_stream(&dist, 50, 9, trial_stream(1, 2), 0).unwrap();
        let b = sample_stream(&dist, 50, 9, trial_stream(1, 2), 0).unwrap();
        let c = sample_stream(&dist, 50, 9, trial_stream(1, 3), 0).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.outcomes, c.outcomes);
        assert!(sample(&dist, 0, 1).is_err());
    }

    #[test]
    fn stats_examples() {
        let truth = PhasePair::new(0.2, -0.4);
        let s = statistics(&[rec(0.2, -0.4), rec(0.2, -0.4)], truth);
        assert_eq!((s.bias_s, s.bias_d, s.rmse_s, s.rmse_d), (0.0, 0.0, 0.0, 0.0));
        let d = 0.01;
        let records: Vec<_> = (0..10)
            .map(|i| if i % 2 == 0 { rec(0.2 + d, -0.4 - d) } else { rec(0.2 - d, -0.4 + d) })
            .collect();
        let s = statistics(&records, truth);
        assert_abs_diff_eq!(s.bias_s, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.rmse_s, d, epsilon = 1e-15);
        assert_abs_diff_eq!(s.rmse_d, d, epsilon = 1e-15);
    }

    #[test]
    fn stats_wrap_across_branch_cut() {
        let truth = PhasePair::new(PI - 0.01, 0.0);
        let s = statistics(&[rec(-PI + 0.01, 0.0), rec(PI - 0.03, 0.0)], truth);
        assert_abs_diff_eq!(s.bias_s, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.rmse_s, 0.02, epsilon = 1e-12);
    }

    #[test]
    fn numeric_mle_stationary_at_exact_moments() {
        let probe = Probe::from_photons(7.0, 10.0, 0.3);
        let truth = PhasePair::new(0.4, 1.3);
        let theta = resolve_lo(&LoSetting::tuned(0.25), truth, &probe).unwrap();
        let dist = output_distribution(truth, &probe, theta.0, theta.1).unwrap();
        let m = SampleMoments {
            mean: dist.mu,
            covariance: dist.sigma,
            nu: 1000,
        };
        let g = log_likelihood_gradient(&m, &probe, theta, truth).unwrap();
        assert!(g[0].abs() < 1e-9 && g[1].abs() < 1e-9);
        let est = mle_numeric_from_moments(&m, &probe, theta, PhasePair::new(0.42, 1.27), &MleOptions::default());
        assert!(est.converged);
        assert_abs_diff_eq!(est.phi_s_hat, 0.4, epsilon = 1e-8);
        assert_abs_diff_eq!(est.phi_d_hat, 1.3, epsilon = 1e-8);
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let probe = Probe::new(0.8, 2.0, 0.9);
        let theta = (0.3, -1.2);
        let m = SampleMoments {
            mean: Vector2::new(0.4, -1.1),
            covariance: Matrix2::new(1.3, 0.2, 0.2, 0.8),
            nu: 37,
        };
        let p = PhasePair::new(0.5, 0.9);
        let g = log_likelihood_gradient(&m, &probe, theta, p).unwrap();
        let h = 1e-6;
        let ll = |s: f64, d: f64| log_likelihood(&m, &probe, theta, PhasePair::new(s, d)).unwrap();
        let fd_s = (ll(0.5 + h, 0.9) - ll(0.5 - h, 0.9)) / (2.0 * h);
        let fd_d = (ll(0.5, 0.9 + h) - ll(0.5, 0.9 - h)) / (2.0 * h);
        assert_abs_diff_eq!(g[0], fd_s, epsilon = 1e-6 * fd_s.abs().max(1.0));
        assert_abs_diff_eq!(g[1], fd_d, epsilon = 1e-6 * fd_d.abs().max(1.0));
    }
}
