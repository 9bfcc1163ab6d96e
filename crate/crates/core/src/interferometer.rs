//! Balanced Mach-Zehnder interferometer in the `(φ_s, φ_d)` parametrization.
//!
//! With 50:50 beam splitters `U_BS = exp(iπσ_y/4)` and arm phases `φ₁, φ₂`, the
//! network `U = U_BS† · diag(e^{iφ₁}, e^{iφ₂}) · U_BS` equals
//!
//! ```text
//! U = e^{iφ_s/2} [[cos(φ_d/2),  i sin(φ_d/2)],
//!                 [i sin(φ_d/2), cos(φ_d/2)]]
//! ```
//!
//! Each entry is written `U_ij = √p_ij · e^{iγ_ij}`. Since `φ_s` is a global
//! phase, `∂_{φ_s} p_ij = 0` and `∂_{φ_s} γ_ij = ½`, while `∂_{φ_d} γ_ij = 0`
//! away from the zeros of `U_ij`.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gaussian::{Complex64, ModeUnitary};

/// Below this transmission probability the phase `γ_ij` is treated as undefined.
pub const INDETERMINATE_PROBABILITY: f64 = 1e-12;

/// Phase sum and difference of the two interferometer arms.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PhasePair {
    pub phi_s: f64,
    pub phi_d: f64,
}

impl PhasePair {
    pub fn new(phi_s: f64, phi_d: f64) -> Self {
        Self { phi_s, phi_d }
    }

    pub fn from_arms(phi1: f64, phi2: f64) -> Self {
        Self {
            phi_s: phi1 + phi2,
            phi_d: phi1 - phi2,
        }
    }

    /// `(φ₁, φ₂) = ((φ_s + φ_d)/2, (φ_s − φ_d)/2)`.
    pub fn arms(&self) -> (f64, f64) {
        (
            0.5 * (self.phi_s + self.phi_d),
            0.5 * (self.phi_s - self.phi_d),
        )
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.phi_s, self.phi_d]
    }
}

/// Closed-form MZI unitary.
pub fn mzi_unitary(phases: PhasePair) -> ModeUnitary {
    let g = Complex64::from_polar(1.0, 0.5 * phases.phi_s);
    let (s, c) = (0.5 * phases.phi_d).sin_cos();
    let diag = g * c;
    let off = g * Complex64::new(0.0, s);
    ModeUnitary::from_matrix_unchecked(DMatrix::from_row_slice(2, 2, &[diag, off, off, diag]))
}

/// 50:50 beam splitter `exp(iπσ_y/4) = [[1, 1], [−1, 1]]/√2`.
pub fn beam_splitter() -> ModeUnitary {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    ModeUnitary::from_matrix_unchecked(DMatrix::from_row_slice(2, 2, &[h, h, -h, h]))
}

/// `U_BS† · U_PH(φ₁, φ₂) · U_BS`, built factor by factor.
pub fn mzi_unitary_factored(phases: PhasePair) -> ModeUnitary {
    let (phi1, phi2) = phases.arms();
    let bs = beam_splitter();
    let ph = ModeUnitary::phase_shifts(&[phi1, phi2]);
    let m = bs.adjoint().matrix() * ph.matrix() * bs.matrix();
    ModeUnitary::from_matrix_unchecked(m)
}

/// Amplitude/phase decomposition of the MZI unitary with analytic
/// derivatives in `φ_s` and `φ_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryDecomposition {
    /// `p_ij = |U_ij|²`.
    pub p: [[f64; 2]; 2],
    /// `√p_ij`.
    pub amplitude: [[f64; 2]; 2],
    /// `γ_ij = Arg U_ij` in `(−π, π]`; zero where [`Self::indeterminate`] is set.
    pub gamma: [[f64; 2]; 2],
    pub indeterminate: [[bool; 2]; 2],
    pub dp_s: [[f64; 2]; 2],
    pub dp_d: [[f64; 2]; 2],
    pub damplitude_s: [[f64; 2]; 2],
    pub damplitude_d: [[f64; 2]; 2],
    pub dgamma_s: [[f64; 2]; 2],
    pub dgamma_d: [[f64; 2]; 2],
}

impl UnitaryDecomposition {
    /// `p₁ = p₁₁ = p₂₂`.
    pub fn p1(&self) -> f64 {
        self.p[0][0]
    }

    /// `p₂ = p₁₂ = p₂₁`.
    pub fn p2(&self) -> f64 {
        self.p[0][1]
    }

    /// `γ_ij`, or an error when the entry's amplitude vanishes.
    pub fn phase(&self, row: usize, col: usize) -> Result<f64> {
        if self.indeterminate[row][col] {
            Err(Error::IndeterminatePhase { row, col })
        } else {
            Ok(self.gamma[row][col])
        }
    }

    pub fn any_indeterminate(&self) -> Option<(usize, usize)> {
        for i in 0..2 {
            for j in 0..2 {
                if self.indeterminate[i][j] {
                    return Some((i, j));
                }
            }
        }
        None
    }
}

pub fn decompose(phases: PhasePair) -> UnitaryDecomposition {
    let u = mzi_unitary(phases);
    let (half_s, half_c) = (0.5 * phases.phi_d).sin_cos();
    let sin_d = phases.phi_d.sin();

    let mut out = UnitaryDecomposition {
        p: [[0.0; 2]; 2],
        amplitude: [[0.0; 2]; 2],
        gamma: [[0.0; 2]; 2],
        indeterminate: [[false; 2]; 2],
        dp_s: [[0.0; 2]; 2],
        dp_d: [[0.0; 2]; 2],
        damplitude_s: [[0.0; 2]; 2],
        damplitude_d: [[0.0; 2]; 2],
        dgamma_s: [[0.0; 2]; 2],
        dgamma_d: [[0.0; 2]; 2],
    };
    for i in 0..2 {
        for j in 0..2 {
            let diagonal = i == j;
            let (amp, p, dp_d, damp_d) = if diagonal {
                // |cos(φ_d/2)|, derivative −½ sin(φ_d/2)·sgn cos(φ_d/2)
                (half_c.abs(), half_c * half_c, -0.5 * sin_d, -0.5 * half_s * sign(half_c))
            } else {
                (half_s.abs(), half_s * half_s, 0.5 * sin_d, 0.5 * half_c * sign(half_s))
            };
            out.p[i][j] = p;
            out.amplitude[i][j] = amp;
            out.dp_d[i][j] = dp_d;
            out.damplitude_d[i][j] = damp_d;
            if p < INDETERMINATE_PROBABILITY {
                out.indeterminate[i][j] = true;
                out.damplitude_d[i][j] = 0.0;
            } else {
                out.gamma[i][j] = u.entry(i, j).arg();
                out.dgamma_s[i][j] = 0.5;
            }
        }
    }
    out
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
