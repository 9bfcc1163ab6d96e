//! Test-side oracles built without the library's closed forms or propagation.
//!
//! Output quadrature `x_i = (b_i + b_i†)/√2` with `b_i = e^{−iθ_i} Σ_j U_ij a_j`
//! gives `x = A q_in − B p_in`, `A = Re C`, `B = Im C`, `C_ij = e^{−iθ_i} U_ij`.

#![allow(dead_code)]

use nalgebra::{Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use twophase::gaussian::Complex64;
use twophase::{PhasePair, Probe};

pub fn mzi(phases: PhasePair) -> [[Complex64; 2]; 2] {
    let g = Complex64::from_polar(1.0, 0.5 * phases.phi_s);
    let c = Complex64::new((0.5 * phases.phi_d).cos(), 0.0);
    let s = Complex64::new(0.0, (0.5 * phases.phi_d).sin());
    [[g * c, g * s], [g * s, g * c]]
}

pub fn moments(phases: PhasePair, probe: &Probe, theta: (f64, f64)) -> (Vector2<f64>, Matrix2<f64>) {
    let u = mzi(phases);
    let th = [theta.0, theta.1];
    let mut a = Matrix2::zeros();
    let mut b = Matrix2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let c = Complex64::from_polar(1.0, -th[i]) * u[i][j];
            a[(i, j)] = c.re;
            b[(i, j)] = c.im;
        }
    }
    let r = probe.r;
    let mean_q = Vector2::new(2f64.sqrt() * probe.alpha1, 2f64.sqrt() * probe.alpha2);
    let var_q = Matrix2::new(0.5 * (2.0 * r).exp(), 0.0, 0.0, 0.5);
    let var_p = Matrix2::new(0.5 * (-2.0 * r).exp(), 0.0, 0.0, 0.5);
    let mu = a * mean_q;
    let sigma = a * var_q * a.transpose() + b * var_p * b.transpose();
    (mu, sigma)
}

/// Central differences of the oracle moments in `(φ_s, φ_d)`.
pub fn moment_derivatives_fd(
    phases: PhasePair,
    probe: &Probe,
    theta: (f64, f64),
    h: f64,
) -> ([Vector2<f64>; 2], [Matrix2<f64>; 2]) {
    let mut dmu = [Vector2::zeros(); 2];
    let mut dsig = [Matrix2::zeros(); 2];
    for k in 0..2 {
        let shift = |sgn: f64| {
            let mut p = phases;
            if k == 0 {
                p.phi_s += sgn * h;
            } else {
                p.phi_d += sgn * h;
            }
            moments(p, probe, theta)
        };
        let (mp, sp) = shift(1.0);
        let (mm, sm) = shift(-1.0);
        dmu[k] = (mp - mm) / (2.0 * h);
        dsig[k] = (sp - sm) / (2.0 * h);
    }
    (dmu, dsig)
}

/// `F_mn = ∂μ_mᵀ Σ⁻¹ ∂μ_n + ½ Tr[Σ⁻¹∂_mΣ Σ⁻¹∂_nΣ]`.
pub fn gaussian_fim(sigma: &Matrix2<f64>, dmu: &[Vector2<f64>; 2], dsig: &[Matrix2<f64>; 2]) -> (Matrix2<f64>, Matrix2<f64>) {
    let inv = sigma.try_inverse().expect("oracle covariance invertible");
    let mut fs = Matrix2::zeros();
    let mut fnn = Matrix2::zeros();
    for m in 0..2 {
        for n in 0..2 {
            fs[(m, n)] = (dmu[m].transpose() * inv * dmu[n])[(0, 0)];
            fnn[(m, n)] = 0.5 * (inv * dsig[m] * inv * dsig[n]).trace();
        }
    }
    (fs, fnn)
}

pub fn fd_fim(phases: PhasePair, probe: &Probe, theta: (f64, f64)) -> Matrix2<f64> {
    let (_, sigma) = moments(phases, probe, theta);
    let (dmu, dsig) = moment_derivatives_fd(phases, probe, theta, 1e-5);
    let (fs, fnn) = gaussian_fim(&sigma, &dmu, &dsig);
    fs + fnn
}

/// Per-outcome score of `N(μ, Σ)` given moment derivatives.
pub fn score(
    x: &Vector2<f64>,
    mu: &Vector2<f64>,
    inv: &Matrix2<f64>,
    dmu: &[Vector2<f64>; 2],
    dsig: &[Matrix2<f64>; 2],
) -> [f64; 2] {
    let w = inv * (x - mu);
    let mut s = [0.0; 2];
    for k in 0..2 {
        s[k] = -0.5 * (inv * dsig[k]).trace() + dmu[k].dot(&w) + 0.5 * w.dot(&(dsig[k] * w));
    }
    s
}

pub struct ScoreMoments {
    pub mean: [f64; 2],
    pub mean_se: [f64; 2],
    pub outer: Matrix2<f64>,
    pub outer_se: Matrix2<f64>,
}

/// Monte Carlo mean of the score and of its outer product from `n` draws.
pub fn mc_score(phases: PhasePair, probe: &Probe, theta: (f64, f64), n: usize, seed: u64) -> ScoreMoments {
    let (mu, sigma) = moments(phases, probe, theta);
    let (dmu, dsig) = moment_derivatives_fd(phases, probe, theta, 1e-5);
    let inv = sigma.try_inverse().unwrap();
    let l11 = sigma[(0, 0)].sqrt();
    let l21 = sigma[(1, 0)] / l11;
    let l22 = (sigma[(1, 1)] - l21 * l21).sqrt();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut s1 = [0.0; 2];
    let mut s2 = [0.0; 2];
    let mut o1 = [0.0; 3];
    let mut o2 = [0.0; 3];
    for _ in 0..n {
        let z1: f64 = StandardNormal.sample(&mut rng);
        let z2: f64 = StandardNormal.sample(&mut rng);
        let x = mu + Vector2::new(l11 * z1, l21 * z1 + l22 * z2);
        let s = score(&x, &mu, &inv, &dmu, &dsig);
        for k in 0..2 {
            s1[k] += s[k];
            s2[k] += s[k] * s[k];
        }
        let o = [s[0] * s[0], s[0] * s[1], s[1] * s[1]];
        for k in 0..3 {
            o1[k] += o[k];
            o2[k] += o[k] * o[k];
        }
    }
    let nf = n as f64;
    let se = |sum: f64, sq: f64| ((sq / nf - (sum / nf).powi(2)) / nf).sqrt();
    ScoreMoments {
        mean: [s1[0] / nf, s1[1] / nf],
        mean_se: [se(s1[0], s2[0]), se(s1[1], s2[1])],
        outer: Matrix2::new(o1[0] / nf, o1[1] / nf, o1[1] / nf, o1[2] / nf),
        outer_se: Matrix2::new(
            se(o1[0], o2[0]),
            se(o1[1], o2[1]),
            se(o1[1], o2[1]),
            se(o1[2], o2[2]),
        ),
    }
}

/// Tuned LO angles computed from the oracle unitary.
pub fn tuned_theta(phases: PhasePair, probe: &Probe, k1: f64, k2: f64) -> (f64, f64) {
    let u = mzi(phases);
    let ns = probe.r.sinh().powi(2);
    (
        u[0][0].arg() + std::f64::consts::FRAC_PI_2 + k1 / ns,
        u[1][0].arg() + std::f64::consts::FRAC_PI_2 + k2 / ns,
    )
}

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Phases away from the points where an output channel is dark.
pub fn random_phases(rng: &mut ChaCha20Rng) -> PhasePair {
    let phi_s = rng.random_range(-3.1..3.1);
    let mut phi_d: f64 = rng.random_range(0.15..2.95);
    if rng.random::<bool>() {
        phi_d = -phi_d;
    }
    PhasePair::new(phi_s, phi_d)
}

pub fn rel_frobenius(a: &Matrix2<f64>, reference: &Matrix2<f64>) -> f64 {
    (a - reference).norm() / reference.norm()
}
