//! Joint distribution of the two homodyne outcomes at the MZI output.
//!
//! The local oscillators are modelled as an extra phase rotation
//! `diag(e^{−iθ₁}, e^{−iθ₂})` after the interferometer. The measured
//! quadratures are then the `q` marginal of the propagated state, a bivariate
//! Gaussian with mean `μ` and covariance `Σ`.
//!
//! Writing `a = γ₁₁ − θ₁`, `b = γ₂₁ − θ₂`, `s = sinh² r` and `c = sinh r cosh r`:
//!
//! ```text
//! μ₁  = √2 (α₁ √p₁ cos a + α₂ √p₂ cos(γ₁₂ − θ₁))
//! μ₂  = √2 (α₁ √p₂ cos b + α₂ √p₁ cos(γ₂₂ − θ₂))
//! Σ₁₁ = ½ + p₁ (s + c cos 2a)
//! Σ₂₂ = ½ + p₂ (s + c cos 2b)
//! Σ₁₂ = √(p₁p₂) (s cos(a − b) + c cos(a + b))
//! det Σ = ¼ + (s/2)(1 − 2p₁p₂ sin²(a − b)) + (c/2)(p₁ cos 2a + p₂ cos 2b)
//! ```

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::gaussian::{ModeUnitary, Probe};
use crate::interferometer::{decompose, mzi_unitary, PhasePair, UnitaryDecomposition};

/// Local-oscillator phase settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LoSetting {
    /// Fixed angles `θ₁, θ₂`.
    Explicit { theta1: f64, theta2: f64 },
    /// `θ_i = γ_{i1} + π/2 + k_i/N_s`, evaluated at the true phases.
    Tuned { k1: f64, k2: f64 },
    /// `θ_i = γ_{i1} + π/2 + δ_i` with a fixed offset that does not shrink with `N_s`.
    Offset { offset1: f64, offset2: f64 },
}

impl LoSetting {
    pub fn tuned(k: f64) -> Self {
        LoSetting::Tuned { k1: k, k2: k }
    }

    /// Common `k` when both detectors are tuned with `k₁ = k₂`.
    pub fn k(&self) -> Option<f64> {
        match *self {
            LoSetting::Tuned { k1, k2 } if k1 == k2 => Some(k1),
            _ => None,
        }
    }
}

/// Resolves the LO angles `(θ₁, θ₂)` for the given operating point.
///
/// Tuned and offset modes read `γ_{i1}` at the *true* phases, i.e. the
/// oscillators are assumed locked to the operating point.
pub fn resolve_lo(setting: &LoSetting, phases: PhasePair, probe: &Probe) -> Result<(f64, f64)> {
    let (shift1, shift2) = match *setting {
        LoSetting::Explicit { theta1, theta2 } => return Ok((theta1, theta2)),
        LoSetting::Tuned { k1, k2 } => {
            let ns = probe.squeezed_photons();
            if !(ns > 0.0) {
                return Err(Error::Config(
                    "tuned local oscillators need squeezing (N_s > 0)".into(),
                ));
            }
            (k1 / ns, k2 / ns)
        }
        LoSetting::Offset { offset1, offset2 } => (offset1, offset2),
    };
    let dec = decompose(phases);
    let gamma = |row: usize| {
        dec.phase(row, 0).map_err(|_| {
            Error::Config(format!(
                "cannot tune LO {}: output channel {} receives no light from input 1 at φ_d = {}",
                row + 1,
                row + 1,
                phases.phi_d
            ))
        })
    };
    Ok((
        gamma(0)? + FRAC_PI_2 + shift1,
        gamma(1)? + FRAC_PI_2 + shift2,
    ))
}

/// Bivariate Gaussian law of the two homodyne outcomes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomodyneDistribution {
    pub mu: Vector2<f64>,
    pub sigma: Matrix2<f64>,
    pub det_sigma: f64,
}

impl HomodyneDistribution {
    /// Builds the distribution, computing `det Σ` from the matrix.
    pub fn new(mu: Vector2<f64>, sigma: Matrix2<f64>) -> Result<Self> {
        let det = sigma[(0, 0)] * sigma[(1, 1)] - sigma[(0, 1)] * sigma[(1, 0)];
        Self::with_determinant(mu, sigma, det)
    }

    fn with_determinant(mu: Vector2<f64>, sigma: Matrix2<f64>, det_sigma: f64) -> Result<Self> {
        if !(det_sigma > 0.0) || !(sigma[(0, 0)] > 0.0) {
            return Err(Error::NotPositiveDefinite { det: det_sigma });
        }
        Ok(Self { mu, sigma, det_sigma })
    }

    /// Cofactor matrix `C = det(Σ)·Σ⁻¹`: `C₁₁ = Σ₂₂`, `C₂₂ = Σ₁₁`, `C₁₂ = −Σ₂₁`.
    pub fn cofactor(&self) -> Matrix2<f64> {
        let s = &self.sigma;
        Matrix2::new(s[(1, 1)], -s[(0, 1)], -s[(1, 0)], s[(0, 0)])
    }

    pub fn precision(&self) -> Matrix2<f64> {
        self.cofactor() / self.det_sigma
    }

    pub fn log_density(&self, x: &Vector2<f64>) -> f64 {
        let r = x - self.mu;
        let q = r.dot(&(self.precision() * r));
        -(2.0 * PI * self.det_sigma.sqrt()).ln() - 0.5 * q
    }
}

pub fn log_density(dist: &HomodyneDistribution, x: &Vector2<f64>) -> f64 {
    dist.log_density(x)
}

/// Trigonometric ingredients shared by the closed forms.
struct Angles {
    dec: UnitaryDecomposition,
    /// `γ_ij − θ_i`.
    rel: [[f64; 2]; 2],
    s: f64,
    c: f64,
}

impl Angles {
    fn new(phases: PhasePair, r: f64, theta1: f64, theta2: f64) -> Self {
        let dec = decompose(phases);
        let theta = [theta1, theta2];
        let mut rel = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                rel[i][j] = dec.gamma[i][j] - theta[i];
            }
        }
        let (sh, ch) = (r.sinh(), r.cosh());
        Self {
            dec,
            rel,
            s: sh * sh,
            c: sh * ch,
        }
    }

    fn a(&self) -> f64 {
        self.rel[0][0]
    }

    fn b(&self) -> f64 {
        self.rel[1][0]
    }
}

/// Closed-form `(μ, Σ, det Σ)` of the homodyne outcomes.
pub fn output_distribution(
    phases: PhasePair,
    probe: &Probe,
    theta1: f64,
    theta2: f64,
) -> Result<HomodyneDistribution> {
    let ang = Angles::new(phases, probe.r, theta1, theta2);
    let amp = &ang.dec.amplitude;
    let p = &ang.dec.p;
    let (a, b) = (ang.a(), ang.b());
    let (s, c) = (ang.s, ang.c);

    let mu = Vector2::new(
        SQRT_2 * (probe.alpha1 * amp[0][0] * a.cos() + probe.alpha2 * amp[0][1] * ang.rel[0][1].cos()),
        SQRT_2 * (probe.alpha1 * amp[1][0] * b.cos() + probe.alpha2 * amp[1][1] * ang.rel[1][1].cos()),
    );
    let s11 = 0.5 + p[0][0] * (s + c * (2.0 * a).cos());
    let s22 = 0.5 + p[1][0] * (s + c * (2.0 * b).cos());
    let s12 = amp[0][0] * amp[1][0] * (s * (a - b).cos() + c * (a + b).cos());
    let (p1, p2) = (p[0][0], p[1][0]);
    let det = 0.25
        + 0.5 * s * (1.0 - 2.0 * p1 * p2 * (a - b).sin().powi(2))
        + 0.5 * c * (p1 * (2.0 * a).cos() + p2 * (2.0 * b).cos());
    HomodyneDistribution::with_determinant(mu, Matrix2::new(s11, s12, s12, s22), det)
}

/// Same distribution obtained by propagating the probe's moments through
/// `diag(e^{−iθ}) · U_MZI` and reading the `q` marginal.
pub fn output_distribution_propagated(
    phases: PhasePair,
    probe: &Probe,
    theta1: f64,
    theta2: f64,
) -> Result<HomodyneDistribution> {
    let lo = ModeUnitary::phase_shifts(&[-theta1, -theta2]);
    let network = lo.then_after(&mzi_unitary(phases))?;
    let out = probe.state().apply_network(&network)?;
    let (d, g) = out.q_marginal();
    HomodyneDistribution::new(
        Vector2::new(d[0], d[1]),
        Matrix2::new(g[(0, 0)], g[(0, 1)], g[(1, 0)], g[(1, 1)]),
    )
}

/// Partial derivatives of `μ` and `Σ` with respect to `(φ_s, φ_d)`, with the
/// LO angles held fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentDerivatives {
    /// `[∂_{φ_s} μ, ∂_{φ_d} μ]`.
    pub dmu: [Vector2<f64>; 2],
    /// `[∂_{φ_s} Σ, ∂_{φ_d} Σ]`.
    pub dsigma: [Matrix2<f64>; 2],
}

/// Differentiates the closed forms through the analytic `∂√p`, `∂p`, `∂γ`.
pub fn moment_derivatives(
    phases: PhasePair,
    probe: &Probe,
    theta1: f64,
    theta2: f64,
) -> Result<MomentDerivatives> {
    let ang = Angles::new(phases, probe.r, theta1, theta2);
    if let Some((row, col)) = ang.dec.any_indeterminate() {
        return Err(Error::IndeterminatePhase { row, col });
    }
    let dec = &ang.dec;
    let amp = &dec.amplitude;
    let p = &dec.p;
    let rel = &ang.rel;
    let (a, b) = (ang.a(), ang.b());
    let (s, c) = (ang.s, ang.c);
    let alpha = [probe.alpha1, probe.alpha2];

    let mut dmu = [Vector2::zeros(); 2];
    let mut dsigma = [Matrix2::zeros(); 2];
    for m in 0..2 {
        let (damp, dp, dg) = if m == 0 {
            (&dec.damplitude_s, &dec.dp_s, &dec.dgamma_s)
        } else {
            (&dec.damplitude_d, &dec.dp_d, &dec.dgamma_d)
        };
        for i in 0..2 {
            let mut acc = 0.0;
            for j in 0..2 {
                acc += alpha[j] * (damp[i][j] * rel[i][j].cos() - amp[i][j] * rel[i][j].sin() * dg[i][j]);
            }
            dmu[m][i] = SQRT_2 * acc;
        }
        let d11 = dp[0][0] * (s + c * (2.0 * a).cos()) - 2.0 * p[0][0] * c * (2.0 * a).sin() * dg[0][0];
        let d22 = dp[1][0] * (s + c * (2.0 * b).cos()) - 2.0 * p[1][0] * c * (2.0 * b).sin() * dg[1][0];
        let prod = amp[0][0] * amp[1][0];
        let dprod = damp[0][0] * amp[1][0] + amp[0][0] * damp[1][0];
        let bracket = s * (a - b).cos() + c * (a + b).cos();
        let dbracket = -s * (a - b).sin() * (dg[0][0] - dg[1][0]) - c * (a + b).sin() * (dg[0][0] + dg[1][0]);
        let d12 = dprod * bracket + prod * dbracket;
        dsigma[m] = Matrix2::new(d11, d12, d12, d22);
    }
    Ok(MomentDerivatives { dmu, dsigma })
}

/// Coefficients of `det Σ = N_s B₁ + B₂ + B₃/N_s + O(N_s⁻²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetExpansion {
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
}

impl DetExpansion {
    pub fn reconstruct(&self, squeezed_photons: f64) -> f64 {
        squeezed_photons * self.b1 + self.b2 + self.b3 / squeezed_photons
    }
}

/// Large-`N_s` expansion of `det Σ`. The coefficients depend only on the
/// interferometer phases and the LO angles.
///
/// ```text
/// B₁ = (p₁cos²a + p₂cos²b)² + ¼(p₁ sin 2a + p₂ sin 2b)²
/// B₂ = ¼(1 + p₁cos 2a + p₂cos 2b)
/// B₃ = −(p₁cos 2a + p₂cos 2b)/16
/// ```
pub fn det_sigma_expansion(phases: PhasePair, theta1: f64, theta2: f64) -> DetExpansion {
    let ang = Angles::new(phases, 0.0, theta1, theta2);
    let (p1, p2) = (ang.dec.p1(), ang.dec.p2());
    let (a, b) = (ang.a(), ang.b());
    let cc = p1 * a.cos().powi(2) + p2 * b.cos().powi(2);
    let ss = p1 * (2.0 * a).sin() + p2 * (2.0 * b).sin();
    let c2 = p1 * (2.0 * a).cos() + p2 * (2.0 * b).cos();
    DetExpansion {
        b1: cc * cc + 0.25 * ss * ss,
        b2: 0.25 * (1.0 + c2),
        b3: -c2 / 16.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn explicit_lo_passes_through() {
        let lo = LoSetting::Explicit { theta1: 0.1, theta2: 0.2 };
        let got = resolve_lo(&lo, PhasePair::new(0.3, 0.4), &Probe::new(0.0, 1.0, 0.0)).unwrap();
        assert_eq!(got, (0.1, 0.2));
    }

    #[test]
    fn tuned_lo_offsets_by_k_over_ns() {
        let phases = PhasePair::new(0.0, FRAC_PI_2);
        let probe = Probe::from_photons(7.0, 10.0, 0.0);
        let (t1, t2) = resolve_lo(&LoSetting::tuned(0.25), phases, &probe).unwrap();
        // U = [[1, i], [i, 1]]/√2 at φ_s = 0, so γ₁₁ = 0 and γ₂₁ = π/2.
        assert_abs_diff_eq!(t1, FRAC_PI_2 + 1.0 / 28.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t2, PI + 1.0 / 28.0, epsilon = 1e-12);
    }

    #[test]
    fn tuned_lo_approaches_minimum_variance_quadrature() {
        let phases = PhasePair::new(0.2, 1.0);
        let dec = decompose(phases);
        let probe = Probe::from_photons(1e8, 1.0, 0.0);
        let (t1, t2) = resolve_lo(&LoSetting::tuned(0.25), phases, &probe).unwrap();
        assert_abs_diff_eq!(t1, dec.gamma[0][0] + FRAC_PI_2, epsilon = 1e-8);
        assert_abs_diff_eq!(t2, dec.gamma[1][0] + FRAC_PI_2, epsilon = 1e-8);
    }

    #[test]
    fn tuned_lo_errors() {
        let lo = LoSetting::tuned(0.25);
        let err = resolve_lo(&lo, PhasePair::new(0.0, 1.0), &Probe::new(0.0, 1.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let err = resolve_lo(&lo, PhasePair::new(0.0, 0.0), &Probe::new(0.0, 1.0, 1.0)).unwrap_err();
        match err {
            Error::Config(msg) => assert!(msg.contains("channel 2"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn vacuum_distribution() {
        let d = output_distribution(PhasePair::new(0.3, 0.9), &Probe::new(0.0, 0.0, 0.0), 0.4, -1.0).unwrap();
        assert_abs_diff_eq!(d.mu, Vector2::zeros(), epsilon = 1e-15);
        assert_abs_diff_eq!(d.sigma, Matrix2::identity() * 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(d.det_sigma, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn closed_form_matches_propagation_under_tuning() {
        let probe = Probe::new(0.0, 10f64.sqrt(), 1.7);
        let phases = PhasePair::new(0.3, FRAC_PI_2);
        let (t1, t2) = resolve_lo(&LoSetting::tuned(0.25), phases, &probe).unwrap();
        let a = output_distribution(phases, &probe, t1, t2).unwrap();
        let b = output_distribution_propagated(phases, &probe, t1, t2).unwrap();
        assert_abs_diff_eq!(a.mu, b.mu, epsilon = 1e-10);
        assert_abs_diff_eq!(a.sigma, b.sigma, epsilon = 1e-10);
        assert_abs_diff_eq!(a.det_sigma, b.det_sigma, epsilon = 1e-10);
    }

    #[test]
    fn tuned_determinant_scales_inversely_with_ns() {
        let probe = Probe::from_photons(100.0, 10.0, 0.0);
        let phases = PhasePair::new(0.7, 1.1);
        let (t1, t2) = resolve_lo(&LoSetting::tuned(0.25), phases, &probe).unwrap();
        let d = output_distribution(phases, &probe, t1, t2).unwrap();
        let rho = 0.25f64.powi(2) + 1.0 / 16.0;
        assert!((100.0 * d.det_sigma / rho - 1.0).abs() < 0.05);
    }

    #[test]
    fn expansion_vanishes_at_minimum_variance_quadrature() {
        let phases = PhasePair::new(0.5, 1.3);
        let dec = decompose(phases);
        let e = det_sigma_expansion(phases, dec.gamma[0][0] + FRAC_PI_2, dec.gamma[1][0] + FRAC_PI_2);
        assert_abs_diff_eq!(e.b1, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn expansion_at_in_phase_quadrature() {
        // a = b = 0: all cosines are one and p₁ + p₂ = 1.
        let phases = PhasePair::new(0.5, 1.3);
        let dec = decompose(phases);
        let e = det_sigma_expansion(phases, dec.gamma[0][0], dec.gamma[1][0]);
        assert_abs_diff_eq!(e.b1, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.b2, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(e.b3, -1.0 / 16.0, epsilon = 1e-14);
    }

    #[test]
    fn log_density_values() {
        let vac = output_distribution(PhasePair::new(0.0, 1.0), &Probe::new(0.0, 0.0, 0.0), 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(vac.log_density(&Vector2::new(1.0, 0.0)), -PI.ln() - 1.0, epsilon = 1e-14);
        let d = output_distribution(PhasePair::new(0.4, 1.2), &Probe::new(0.5, 1.5, 0.6), 0.3, 2.0).unwrap();
        assert_abs_diff_eq!(
            d.log_density(&d.mu),
            -(2.0 * PI * d.det_sigma.sqrt()).ln(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn non_positive_covariance_is_rejected() {
        let err = HomodyneDistribution::new(Vector2::zeros(), Matrix2::new(1.0, 2.0, 2.0, 1.0)).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { .. }));
    }

    #[test]
    fn cofactor_layout() {
        let d = HomodyneDistribution::new(Vector2::zeros(), Matrix2::new(2.0, 0.5, 0.5, 1.0)).unwrap();
        let c = d.cofactor();
        assert_eq!(c, Matrix2::new(1.0, -0.5, -0.5, 2.0));
        assert_abs_diff_eq!(d.precision() * d.sigma, Matrix2::identity(), epsilon = 1e-15);
    }
}
