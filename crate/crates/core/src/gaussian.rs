//! Gaussian bosonic states described by first and second moments.
//!
//! Units: `ħ = 1`, vacuum quadrature variance `½`, and a coherent amplitude `α`
//! displaces `q` by `√2·α`. Quadratures are stored in block order
//! `(q₁ … q_m, p₁ … p_m)` so that the symplectic form is `Ω = [[0, I], [−I, 0]]`.
//!
//! Passive linear networks act on the moments through the orthogonal,
//! symplectic matrix `R = [[Re U, −Im U], [Im U, Re U]]`.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type Complex64 = Complex<f64>;

/// Minimum eigenvalue of `Γ + iΩ/2` tolerated before a state is rejected.
pub const UNCERTAINTY_TOLERANCE: f64 = 1e-10;

const UNITARY_TOLERANCE: f64 = 1e-10;

/// Complex `m × m` unitary acting on mode operators.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeUnitary {
    matrix: DMatrix<Complex64>,
}

impl ModeUnitary {
    /// Wraps `matrix` after checking `U U† = I`.
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Dimension {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let m = matrix.nrows();
        let product = &matrix * matrix.adjoint();
        let deviation = (product - DMatrix::<Complex64>::identity(m, m))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if deviation > UNITARY_TOLERANCE {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self { matrix })
    }

    pub fn identity(modes: usize) -> Self {
        Self {
            matrix: DMatrix::identity(modes, modes),
        }
    }

    /// `diag(e^{iφ₁}, …, e^{iφ_m})`.
    pub fn phase_shifts(phases: &[f64]) -> Self {
        let diag = DVector::from_iterator(
            phases.len(),
            phases.iter().map(|&p| Complex64::from_polar(1.0, p)),
        );
        Self {
            matrix: DMatrix::from_diagonal(&diag),
        }
    }

    pub fn modes(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
        }
    }

    /// `self · other`: apply `other` first, then `self`.
    pub fn then_after(&self, other: &ModeUnitary) -> Result<Self> {
        if self.modes() != other.modes() {
            return Err(Error::Dimension {
                expected: self.modes(),
                found: other.modes(),
            });
        }
        Ok(Self {
            matrix: &self.matrix * &other.matrix,
        })
    }

    pub(crate) fn from_matrix_unchecked(matrix: DMatrix<Complex64>) -> Self {
        Self { matrix }
    }
}

/// Real `2m × 2m` rotation induced on quadratures by a [`ModeUnitary`].
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticRotation {
    matrix: DMatrix<f64>,
}

impl SymplecticRotation {
    pub fn from_unitary(u: &ModeUnitary) -> Self {
        let m = u.modes();
        let mut r = DMatrix::zeros(2 * m, 2 * m);
        for i in 0..m {
            for j in 0..m {
                let z = u.entry(i, j);
                r[(i, j)] = z.re;
                r[(i, j + m)] = -z.im;
                r[(i + m, j)] = z.im;
                r[(i + m, j + m)] = z.re;
            }
        }
        Self { matrix: r }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn modes(&self) -> usize {
        self.matrix.nrows() / 2
    }
}

/// Symplectic form `Ω = [[0, I], [−I, 0]]` for `m` modes.
pub fn symplectic_form(modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * modes, 2 * modes);
    for i in 0..modes {
        omega[(i, i + modes)] = 1.0;
        omega[(i + modes, i)] = -1.0;
    }
    omega
}

/// First and second moments of an `m`-mode Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    displacement: DVector<f64>,
    covariance: DMatrix<f64>,
}

impl GaussianState {
    /// Validates shapes, symmetrizes `covariance` and checks the uncertainty
    /// relation `Γ + iΩ/2 ⪰ 0`.
    pub fn new(displacement: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let n = displacement.len();
        if n == 0 || n % 2 != 0 {
            return Err(Error::Dimension {
                expected: n + n % 2,
                found: n,
            });
        }
        if covariance.nrows() != n || covariance.ncols() != n {
            return Err(Error::Dimension {
                expected: n,
                found: covariance.nrows(),
            });
        }
        let covariance = symmetrize(covariance);
        let min_eigenvalue = uncertainty_min_eigenvalue(&covariance);
        if min_eigenvalue < -UNCERTAINTY_TOLERANCE {
            return Err(Error::Uncertainty { min_eigenvalue });
        }
        Ok(Self {
            displacement,
            covariance,
        })
    }

    pub fn vacuum(modes: usize) -> Self {
        Self {
            displacement: DVector::zeros(2 * modes),
            covariance: DMatrix::identity(2 * modes, 2 * modes) * 0.5,
        }
    }

    pub fn modes(&self) -> usize {
        self.displacement.len() / 2
    }

    pub fn displacement(&self) -> &DVector<f64> {
        &self.displacement
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// Smallest eigenvalue of the Hermitian matrix `Γ + iΩ/2`.
    pub fn uncertainty_margin(&self) -> f64 {
        uncertainty_min_eigenvalue(&self.covariance)
    }

    /// `½(tr Γ + |d|²) − m/2`.
    pub fn mean_photon_number(&self) -> f64 {
        0.5 * (self.covariance.trace() + self.displacement.norm_squared()) - 0.5 * self.modes() as f64
    }

    /// Propagates the state through the passive network `u`:
    /// `d ↦ R d`, `Γ ↦ R Γ Rᵀ`.
    pub fn apply_network(&self, u: &ModeUnitary) -> Result<Self> {
        if u.modes() != self.modes() {
            return Err(Error::Dimension {
                expected: self.modes(),
                found: u.modes(),
            });
        }
        let rot = SymplecticRotation::from_unitary(u);
        let r = rot.matrix();
        let displacement = r * &self.displacement;
        let covariance = r * &self.covariance * r.transpose();
        GaussianState::new(displacement, covariance)
    }

    /// Marginal over the `q` quadratures: the first `m` entries of `d` and
    /// the leading `m × m` block of `Γ`.
    pub fn q_marginal(&self) -> (DVector<f64>, DMatrix<f64>) {
        let m = self.modes();
        (
            self.displacement.rows(0, m).into_owned(),
            self.covariance.view((0, 0), (m, m)).into_owned(),
        )
    }
}

/// Free functional form of [`GaussianState::apply_network`].
pub fn apply_network(state: &GaussianState, u: &ModeUnitary) -> Result<GaussianState> {
    state.apply_network(u)
}

pub fn mean_photon_number(state: &GaussianState) -> f64 {
    state.mean_photon_number()
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

fn uncertainty_min_eigenvalue(cov: &DMatrix<f64>) -> f64 {
    let n = cov.nrows();
    let omega = symplectic_form(n / 2);
    let h = DMatrix::from_fn(n, n, |i, j| Complex64::new(cov[(i, j)], 0.5 * omega[(i, j)]));
    SymmetricEigen::new(h).eigenvalues.min()
}

/// Input probe `|α₁, r⟩ ⊗ |α₂⟩`: a displaced squeezed state in port 1 and a
/// coherent state in port 2, with real amplitudes and real squeezing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub alpha1: f64,
    pub alpha2: f64,
    pub r: f64,
}

impl Probe {
    pub fn new(alpha1: f64, alpha2: f64, r: f64) -> Self {
        Self { alpha1, alpha2, r }
    }

    /// Probe with `N_s` squeezed photons and `N_c` coherent photons, a fraction
    /// `beta` of which enters port 1.
    pub fn from_photons(squeezed: f64, coherent: f64, beta: f64) -> Self {
        Self {
            alpha1: (beta * coherent).sqrt(),
            alpha2: ((1.0 - beta) * coherent).sqrt(),
            r: squeezed.sqrt().asinh(),
        }
    }

    /// `N_c1 = α₁²`.
    pub fn coherent_photons_port1(&self) -> f64 {
        self.alpha1 * self.alpha1
    }

    /// `N_c2 = α₂²`.
    pub fn coherent_photons_port2(&self) -> f64 {
        self.alpha2 * self.alpha2
    }

    /// `N_c = N_c1 + N_c2`.
    pub fn coherent_photons(&self) -> f64 {
        self.coherent_photons_port1() + self.coherent_photons_port2()
    }

    /// `N_s = sinh² r`.
    pub fn squeezed_photons(&self) -> f64 {
        let s = self.r.sinh();
        s * s
    }

    pub fn total_photons(&self) -> f64 {
        self.coherent_photons() + self.squeezed_photons()
    }

    /// `β = N_c1 / N_c`; zero when there is no coherent light.
    pub fn beta(&self) -> f64 {
        let nc = self.coherent_photons();
        if nc > 0.0 {
            self.coherent_photons_port1() / nc
        } else {
            0.0
        }
    }

    /// Moments `d = √2(α₁, α₂, 0, 0)`, `Γ = ½·diag(e^{2r}, 1, e^{−2r}, 1)`.
    pub fn state(&self) -> GaussianState {
        let s2 = std::f64::consts::SQRT_2;
        let displacement = DVector::from_vec(vec![s2 * self.alpha1, s2 * self.alpha2, 0.0, 0.0]);
        let covariance = DMatrix::from_diagonal(&DVector::from_vec(vec![
            0.5 * (2.0 * self.r).exp(),
            0.5,
            0.5 * (-2.0 * self.r).exp(),
            0.5,
        ]));
        GaussianState {
            displacement,
            covariance,
        }
    }
}

/// State of the two-mode probe `|α₁, r⟩ ⊗ |α₂⟩`.
pub fn make_probe(alpha1: f64, alpha2: f64, r: f64) -> GaussianState {
    Probe::new(alpha1, alpha2, r).state()
}
