use num_traits::Zero;

use super::direction::Direction;
use super::matrix::{Matrix2, Matrix4, C};
use crate::scalar::Real;
use crate::{Error, Result};

/// Two-qubit density matrix in the `(++, +-, -+, --)` basis.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityState<T> {
    matrix: Matrix4<T>,
    label: String,
}

impl<T: Real> DensityState<T> {
    /// Validates Hermiticity, unit trace and positivity (eigenvalues ≥ `-psd_floor`).
    pub fn new(matrix: Matrix4<T>, label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        let tol = T::identity_tol();
        if matrix.0.iter().flatten().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidState(format!("'{label}' has non-finite entries")));
        }
        if !matrix.is_hermitian(tol) {
            return Err(Error::InvalidState(format!("'{label}' is not Hermitian")));
        }
        let tr = matrix.trace();
        if (tr.re - T::one()).abs() > tol || tr.im.abs() > tol {
            return Err(Error::InvalidState(format!("'{label}' has trace {} + {}i, expected 1", tr.re, tr.im)));
        }
        if !matrix.is_positive_with_shift(T::psd_floor()) {
            return Err(Error::InvalidState(format!("'{label}' has an eigenvalue below -{}", T::psd_floor())));
        }
        Ok(Self { matrix, label })
    }

    /// `|psi><psi|` for a normalized amplitude vector.
    pub fn pure(amplitudes: [C<T>; 4], label: impl Into<String>) -> Result<Self> {
        let norm: T = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - T::one()).abs() > T::identity_tol() {
            return Err(Error::InvalidState(format!("state vector has squared norm {norm}, expected 1")));
        }
        Self::new(Matrix4::outer(&amplitudes), label)
    }

    /// `(|+,-> - |-,+>)/√2`.
    pub fn singlet() -> Self {
        let h = T::FRAC_1_SQRT_2();
        let z = C::zero();
        let v = [z, C::from(h), C::from(-h), z];
        Self { matrix: Matrix4::outer(&v), label: "singlet".to_string() }
    }

    /// Product of two pure spin states, each spin-up along its direction.
    pub fn product(first: &Direction<T>, second: &Direction<T>) -> Self {
        let m = spin_up_projector(first).kron(&spin_up_projector(second));
        let label =
            format!("product[{},{},{};{},{},{}]", first.x(), first.y(), first.z(), second.x(), second.y(), second.z());
        Self { matrix: m, label }
    }

    pub fn maximally_mixed() -> Self {
        let q = T::lit(0.25);
        Self { matrix: Matrix4::identity().scale(C::from(q)), label: "maximally-mixed".to_string() }
    }

    /// `v |singlet><singlet| + (1 - v) I/4`, valid for `v` in `[-1/3, 1]`.
    pub fn werner(visibility: T) -> Result<Self> {
        let mix = Self::maximally_mixed().matrix.scale(C::from(T::one() - visibility));
        let m = Self::singlet().matrix.scale(C::from(visibility)) + mix;
        Self::new(m, format!("werner[{visibility}]"))
    }

    /// Applies `U_1 ⊗ U_2` by conjugation.
    pub fn transformed(&self, first: &Matrix2<T>, second: &Matrix2<T>) -> Result<Self> {
        let u = first.kron(second);
        Self::new(u * self.matrix * u.adjoint(), self.label.clone())
    }

    pub fn matrix(&self) -> &Matrix4<T> {
        &self.matrix
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Used by the Lüders update: the caller has already normalized the matrix.
    pub(crate) fn from_parts_hermitized(matrix: Matrix4<T>, label: String) -> Result<Self> {
        let half = C::from(T::lit(0.5));
        let m = (matrix + matrix.adjoint()).scale(half);
        Self::new(m, label)
    }
}

/// Single-qubit projector `(I + σ·n)/2`.
pub(crate) fn spin_up_projector<T: Real>(n: &Direction<T>) -> Matrix2<T> {
    spin_projector(n, T::one())
}

/// `(I + sign σ·n)/2` in closed form.
pub(crate) fn spin_projector<T: Real>(n: &Direction<T>, sign: T) -> Matrix2<T> {
    let half = T::lit(0.5);
    let (x, y, z) = (n.x() * sign, n.y() * sign, n.z() * sign);
    Matrix2([
        [C::new(half * (T::one() + z), T::zero()), C::new(half * x, -half * y)],
        [C::new(half * x, half * y), C::new(half * (T::one() - z), T::zero())],
    ])
}
