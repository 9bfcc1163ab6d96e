//! Fisher information of the homodyne outcome distribution and the resulting
//! Cramér–Rao bounds.
//!
//! For a Gaussian law with parameter-dependent mean and covariance,
//!
//! ```text
//! F_mn = ∂_m μᵀ Σ⁻¹ ∂_n μ  +  ½ Tr[Σ⁻¹ ∂_m Σ Σ⁻¹ ∂_n Σ]
//!        └──── signal ────┘   └──────── noise ────────┘
//! ```
//!
//! in the basis `(φ_s, φ_d)`. The exact matrix is evaluated from the analytic
//! moment derivatives at fixed LO angles. The asymptotic forms are the
//! large-`N_s` limits under the LO tuning `θ_i = γ_{i1} + π/2 + k_i/N_s`.

use nalgebra::{Matrix2, SymmetricEigen, Vector2};

use crate::error::{Error, Result};
use crate::gaussian::Probe;
use crate::homodyne::{
    moment_derivatives, output_distribution, resolve_lo, HomodyneDistribution, LoSetting, MomentDerivatives,
};
use crate::interferometer::PhasePair;

/// Eigenvalues below `PSEUDO_RANK_THRESHOLD · tr F` count as zero in [`crb_pseudo`].
pub const PSEUDO_RANK_THRESHOLD: f64 = 1e-9;

/// [`crb`] refuses matrices with a larger condition number.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FisherKind {
    Exact,
    ExactSignal,
    ExactNoise,
    SignalAsymptotic,
    NoiseAsymptotic,
    TotalAsymptotic,
}

/// Symmetric 2×2 Fisher matrix in the `(φ_s, φ_d)` basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherMatrix {
    pub matrix: Matrix2<f64>,
    pub kind: FisherKind,
}

impl FisherMatrix {
    pub fn new(matrix: Matrix2<f64>, kind: FisherKind) -> Self {
        let matrix = (matrix + matrix.transpose()) * 0.5;
        Self { matrix, kind }
    }

    pub fn from_entries(ss: f64, sd: f64, dd: f64, kind: FisherKind) -> Self {
        Self {
            matrix: Matrix2::new(ss, sd, sd, dd),
            kind,
        }
    }

    pub fn ss(&self) -> f64 {
        self.matrix[(0, 0)]
    }

    pub fn sd(&self) -> f64 {
        self.matrix[(0, 1)]
    }

    pub fn dd(&self) -> f64 {
        self.matrix[(1, 1)]
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let (a, b, d) = (self.ss(), self.sd(), self.dd());
        let half_tr = 0.5 * (a + d);
        let disc = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        [half_tr - disc, half_tr + disc]
    }

    /// PSD up to `10⁻⁸ · tr F`.
    pub fn is_psd(&self) -> bool {
        self.eigenvalues()[0] >= -1e-8 * self.trace().abs()
    }

    /// `Tr F⁻¹`, infinite when singular.
    pub fn trace_of_inverse(&self) -> f64 {
        let det = self.matrix.determinant();
        if det <= 0.0 {
            f64::INFINITY
        } else {
            self.trace() / det
        }
    }

    pub fn relative_distance(&self, reference: &FisherMatrix) -> f64 {
        (self.matrix - reference.matrix).norm() / reference.matrix.norm()
    }
}

impl std::ops::Add for FisherMatrix {
    type Output = FisherMatrix;

    fn add(self, rhs: FisherMatrix) -> FisherMatrix {
        FisherMatrix::new(self.matrix + rhs.matrix, self.kind)
    }
}

/// Exact Fisher information split into signal and noise parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactFisher {
    pub signal: FisherMatrix,
    pub noise: FisherMatrix,
    pub total: FisherMatrix,
    /// LO angles the matrix was evaluated at.
    pub theta: (f64, f64),
}

/// Exact Fisher information at `phases`.
///
/// The LO angles are resolved once at the operating point and then held fixed
/// while differentiating: they are instrument settings, not functions of the
/// unknown phases.
pub fn fim_exact(phases: PhasePair, probe: &Probe, lo: &LoSetting) -> Result<ExactFisher> {
    let (t1, t2) = resolve_lo(lo, phases, probe)?;
    fim_exact_at(phases, probe, t1, t2)
}

pub fn fim_exact_at(phases: PhasePair, probe: &Probe, theta1: f64, theta2: f64) -> Result<ExactFisher> {
    let dist = output_distribution(phases, probe, theta1, theta2)?;
    let der = moment_derivatives(phases, probe, theta1, theta2)?;
    let (signal, noise) = fisher_from_moments(&dist, &der);
    Ok(ExactFisher {
        signal,
        noise,
        total: FisherMatrix::new(signal.matrix + noise.matrix, FisherKind::Exact),
        theta: (theta1, theta2),
    })
}

/// Gaussian Fisher information from moments and their derivatives.
pub fn fisher_from_moments(dist: &HomodyneDistribution, der: &MomentDerivatives) -> (FisherMatrix, FisherMatrix) {
    let prec = dist.precision();
    let mut signal = Matrix2::zeros();
    let mut noise = Matrix2::zeros();
    let a = [prec * der.dsigma[0], prec * der.dsigma[1]];
    for m in 0..2 {
        for n in 0..2 {
            signal[(m, n)] = der.dmu[m].dot(&(prec * der.dmu[n]));
            noise[(m, n)] = 0.5 * (a[m] * a[n]).trace();
        }
    }
    (
        FisherMatrix::new(signal, FisherKind::ExactSignal),
        FisherMatrix::new(noise, FisherKind::ExactNoise),
    )
}

/// Per-outcome score `∇_φ log p(x | φ)`.
pub fn score(dist: &HomodyneDistribution, der: &MomentDerivatives, x: &Vector2<f64>) -> [f64; 2] {
    let prec = dist.precision();
    let r = x - dist.mu;
    let w = prec * r;
    let mut out = [0.0; 2];
    for (m, o) in out.iter_mut().enumerate() {
        let ds = der.dsigma[m];
        *o = -0.5 * (prec * ds).trace() + der.dmu[m].dot(&w) + 0.5 * w.dot(&(ds * w));
    }
    out
}

/// `D(k₁, k₂, φ_d) = 4 cos φ_d ((k₁−k₂)² cos φ_d + 2(k₁²−k₂²)) + 4(k₁+k₂)² + 1`,
/// equal to `16(p₁k₁ + p₂k₂)² + 1`.
pub fn tuning_denominator(k1: f64, k2: f64, phi_d: f64) -> f64 {
    let c = phi_d.cos();
    let dk = k1 - k2;
    4.0 * c * (dk * dk * c + 2.0 * (k1 * k1 - k2 * k2)) + 4.0 * (k1 + k2).powi(2) + 1.0
}

/// Leading-order signal information for general `k₁, k₂`. With `N_c1 = βN_c`
/// and `N_c2 = (1−β)N_c` this is the rank-one matrix
/// `4N_s/D · [[N_c1, √(N_c1N_c2)], [√(N_c1N_c2), N_c2]]`.
pub fn fim_signal_asymptotic(beta: f64, ns: f64, nc: f64, k1: f64, k2: f64, phi_d: f64) -> FisherMatrix {
    let nc1 = beta * nc;
    let nc2 = (1.0 - beta) * nc;
    let scale = 4.0 * ns / tuning_denominator(k1, k2, phi_d);
    FisherMatrix::from_entries(
        scale * nc1,
        scale * (nc1 * nc2).sqrt(),
        scale * nc2,
        FisherKind::SignalAsymptotic,
    )
}

/// Leading terms of the noise information for general `k₁, k₂`:
/// `F^N_ss` at `O(N_s²)`, `F^N_sd` and `F^N_dd` at `O(N_s)`.
pub fn fim_noise_asymptotic(ns: f64, k1: f64, k2: f64, phi_d: f64) -> FisherMatrix {
    let c = phi_d.cos();
    let dk = k1 - k2;
    let d = tuning_denominator(k1, k2, phi_d);
    let d2 = d * d;
    let ss = 32.0 * ns * ns * (dk * c + k1 + k2).powi(2) / d2;
    let sd = 2.0
        * ns
        * dk
        * ((15.0 * k1 * k1 + 18.0 * k1 * k2 + 15.0 * k2 * k2 - 1.0) * phi_d.sin()
            + 12.0 * (k1 * k1 - k2 * k2) * (2.0 * phi_d).sin()
            + 3.0 * dk * dk * (3.0 * phi_d).sin())
        / d2;
    let dd = ns / noise_dd_denominator(k1, k2, phi_d);
    FisherMatrix::from_entries(ss, sd, dd, FisherKind::NoiseAsymptotic)
}

/// `1 + 6k₁² + 6k₂² + 4k₁k₂ + 8(k₁²−k₂²) cos φ_d + 2(k₁−k₂)² cos 2φ_d`.
/// Algebraically identical to [`tuning_denominator`].
fn noise_dd_denominator(k1: f64, k2: f64, phi_d: f64) -> f64 {
    1.0 + 6.0 * k1 * k1 + 6.0 * k2 * k2 + 4.0 * k1 * k2
        + 8.0 * (k1 * k1 - k2 * k2) * phi_d.cos()
        + 2.0 * (k1 - k2).powi(2) * (2.0 * phi_d).cos()
}

/// `O(N_s²)` noise information for `k₁ = k₂ = k`: `diag(128N_s²k²/(16k²+1)², 0)`.
pub fn fim_noise_leading(ns: f64, k: f64) -> FisherMatrix {
    let q = 16.0 * k * k + 1.0;
    FisherMatrix::from_entries(128.0 * ns * ns * k * k / (q * q), 0.0, 0.0, FisherKind::NoiseAsymptotic)
}

/// Total asymptotic information for `k₁ = k₂ = k`:
/// `4N_sN_c/(16k²+1) · [[β + 32N_sk²/(N_c(16k²+1)), √(β(1−β))], [√(β(1−β)), 1−β]]`.
pub fn fim_total_asymptotic(beta: f64, ns: f64, nc: f64, k: f64) -> FisherMatrix {
    let q = 16.0 * k * k + 1.0;
    let scale = 4.0 * ns * nc / q;
    let off = (beta * (1.0 - beta)).sqrt();
    FisherMatrix::new(
        Matrix2::new(
            scale * beta + 128.0 * ns * ns * k * k / (q * q),
            scale * off,
            scale * off,
            scale * (1.0 - beta),
        ),
        FisherKind::TotalAsymptotic,
    )
}

/// Bound on an identifiable linear combination `Φ = w·φ`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LinearComboBound {
    pub weights: [f64; 2],
    pub variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CrbReport {
    pub var_phi_s: f64,
    pub var_phi_d: f64,
    pub nu: u64,
    pub linear_combo: Option<LinearComboBound>,
}

impl CrbReport {
    pub fn std_phi_s(&self) -> f64 {
        self.var_phi_s.sqrt()
    }

    pub fn std_phi_d(&self) -> f64 {
        self.var_phi_d.sqrt()
    }

    pub fn with_linear_combo(mut self, weights: [f64; 2], variance: f64) -> Self {
        self.linear_combo = Some(LinearComboBound { weights, variance });
        self
    }
}

/// `Cov[φ̃] ≥ F⁻¹/ν`; errors for singular or ill-conditioned `F`.
pub fn crb(f: &FisherMatrix, nu: u64) -> Result<CrbReport> {
    let [lo, hi] = f.eigenvalues();
    if !(lo > 0.0) || hi / lo >= MAX_CONDITION {
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        return Err(Error::SingularFisher { condition });
    }
    let det = f.matrix.determinant();
    let nu_f = nu as f64;
    Ok(CrbReport {
        var_phi_s: f.dd() / det / nu_f,
        var_phi_d: f.ss() / det / nu_f,
        nu,
        linear_combo: None,
    })
}

/// `(ΔΦ)² ≥ w F⁺ wᵀ / ν` using the Moore–Penrose pseudo-inverse.
pub fn crb_pseudo(f: &FisherMatrix, weights: [f64; 2], nu: u64) -> Result<f64> {
    crb_pseudo_with_threshold(f, weights, nu, PSEUDO_RANK_THRESHOLD)
}

/// As [`crb_pseudo`] with an explicit relative rank threshold.
///
/// Only the component of `weights` in the range of `F` contributes; weights
/// with no such component are rejected as not identifiable.
pub fn crb_pseudo_with_threshold(f: &FisherMatrix, weights: [f64; 2], nu: u64, rel_threshold: f64) -> Result<f64> {
    let w = Vector2::new(weights[0], weights[1]);
    let trace = f.trace();
    if !(trace > 0.0) || w.norm() == 0.0 {
        return Err(Error::NotIdentifiable);
    }
    let eig = SymmetricEigen::new(f.matrix);
    let cutoff = rel_threshold * trace;
    let mut quad = 0.0;
    let mut in_range = 0.0;
    for i in 0..2 {
        let lambda = eig.eigenvalues[i];
        if lambda > cutoff {
            let proj = eig.eigenvectors.column(i).dot(&w);
            in_range += proj * proj;
            quad += proj * proj / lambda;
        }
    }
    if in_range <= 1e-12 * w.norm_squared() {
        return Err(Error::NotIdentifiable);
    }
    Ok(quad / nu as f64)
}

/// Closed-form bounds from [`fim_total_asymptotic`]:
/// `(Δφ_s)² ≥ (16k²+1)²/(128N_s²k²ν)` and
/// `(Δφ_d)² ≥ (16k²+1)(16k²(βN_c + 2N_s) + βN_c)/(128N_cN_s²(1−β)k²ν)`.
pub fn crb_total_asymptotic(beta: f64, ns: f64, nc: f64, k: f64, nu: u64) -> CrbReport {
    let q = 16.0 * k * k + 1.0;
    let nu_f = nu as f64;
    CrbReport {
        var_phi_s: q * q / (128.0 * ns * ns * k * k * nu_f),
        var_phi_d: q * (16.0 * k * k * (beta * nc + 2.0 * ns) + beta * nc)
            / (128.0 * nc * ns * ns * (1.0 - beta) * k * k * nu_f),
        nu,
        linear_combo: None,
    }
}

/// Leading-order bounds from the noise information alone (general `k₁, k₂`):
/// `(Δφ_s)² ≥ D²/(32N_s²[k₁+k₂+(k₁−k₂)cos φ_d]²ν)`, `(Δφ_d)² ≥ D/(N_sν)`.
pub fn crb_noise_asymptotic(ns: f64, k1: f64, k2: f64, phi_d: f64, nu: u64) -> CrbReport {
    let d = noise_dd_denominator(k1, k2, phi_d);
    let nu_f = nu as f64;
    let lin = k1 + k2 + (k1 - k2) * phi_d.cos();
    CrbReport {
        var_phi_s: d * d / (32.0 * ns * ns * lin * lin * nu_f),
        var_phi_d: d / (ns * nu_f),
        nu,
        linear_combo: None,
    }
}

/// `(ΔΦ)² ≥ (16k²+1)/(4N_sN_cν)` for `Φ = √β φ_s + √(1−β) φ_d` from the
/// signal information alone.
pub fn phi_bound_asymptotic(ns: f64, nc: f64, k: f64, nu: u64) -> f64 {
    (16.0 * k * k + 1.0) / (4.0 * ns * nc * nu as f64)
}
