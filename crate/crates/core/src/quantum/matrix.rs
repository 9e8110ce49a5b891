//! Fixed-size complex matrices for one and two qubits.
//!
//! Two-qubit matrices use the product basis ordered `(++, +-, -+, --)`, i.e. the
//! row index of `|s1, s2>` is `2 * s1 + s2` with `+ = 0` and `- = 1`.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex;
use num_traits::Zero;

use crate::scalar::Real;

pub type C<T> = Complex<T>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Matrix2<T>(pub [[C<T>; 2]; 2]);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Matrix4<T>(pub [[C<T>; 4]; 4]);

impl<T: Real> Matrix2<T> {
    pub fn zero() -> Self {
        Self([[C::zero(); 2]; 2])
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        m.0[0][0] = C::new(T::one(), T::zero());
        m.0[1][1] = C::new(T::one(), T::zero());
        m
    }

    pub fn pauli_x() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self([[C::new(z, z), C::new(o, z)], [C::new(o, z), C::new(z, z)]])
    }

    pub fn pauli_y() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self([[C::new(z, z), C::new(z, -o)], [C::new(z, o), C::new(z, z)]])
    }

    pub fn pauli_z() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self([[C::new(o, z), C::new(z, z)], [C::new(z, z), C::new(-o, z)]])
    }

    pub fn scale(&self, s: C<T>) -> Self {
        let mut out = *self;
        out.0.iter_mut().flatten().for_each(|v| *v = *v * s);
        out
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero();
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] = self.0[j][i].conj();
            }
        }
        out
    }

    /// `exp(-i angle n.sigma / 2)` for a unit axis `n`.
    pub fn rotation(axis: [T; 3], angle: T) -> Self {
        let half = angle / T::lit(2.0);
        let (s, c) = half.sin_cos();
        let n_sigma = Self::pauli_x().scale(C::from(axis[0]))
            + Self::pauli_y().scale(C::from(axis[1]))
            + Self::pauli_z().scale(C::from(axis[2]));
        Self::identity().scale(C::from(c)) + n_sigma.scale(C::new(T::zero(), -s))
    }

    /// Tensor product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &Self) -> Matrix4<T> {
        let mut out = Matrix4::zero();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        out.0[2 * i + k][2 * j + l] = self.0[i][j] * rhs.0[k][l];
                    }
                }
            }
        }
        out
    }
}

impl<T: Real> Add for Matrix2<T> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for i in 0..2 {
            for j in 0..2 {
                self.0[i][j] = self.0[i][j] + rhs.0[i][j];
            }
        }
        self
    }
}

impl<T: Real> Mul for Matrix2<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::zero();
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] = self.0[i][0] * rhs.0[0][j] + self.0[i][1] * rhs.0[1][j];
            }
        }
        out
    }
}

/// Which tensor factor a two-qubit operator acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Support {
    /// Of the form `M ⊗ I`.
    First,
    /// Of the form `I ⊗ M`.
    Second,
    /// A multiple of the identity (acts trivially on both).
    Trivial,
    /// Neither local form.
    Joint,
}

impl<T: Real> Matrix4<T> {
    pub fn zero() -> Self {
        Self([[C::zero(); 4]; 4])
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        for i in 0..4 {
            m.0[i][i] = C::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_real(rows: [[T; 4]; 4]) -> Self {
        let mut m = Self::zero();
        for (dst, src) in m.0.iter_mut().zip(rows) {
            for (d, x) in dst.iter_mut().zip(src) {
                *d = C::from(x);
            }
        }
        m
    }

    /// Outer product `|v><v|`.
    pub fn outer(v: &[C<T>; 4]) -> Self {
        let mut m = Self::zero();
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = v[i] * v[j].conj();
            }
        }
        m
    }

    pub fn scale(&self, s: C<T>) -> Self {
        let mut out = *self;
        out.0.iter_mut().flatten().for_each(|v| *v = *v * s);
        out
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero();
        for i in 0..4 {
            for j in 0..4 {
                out.0[i][j] = self.0[j][i].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> C<T> {
        (0..4).map(|i| self.0[i][i]).fold(C::zero(), |a, b| a + b)
    }

    /// `Tr[self * rhs]` without forming the product.
    pub fn trace_product(&self, rhs: &Self) -> C<T> {
        let mut acc = C::zero();
        for i in 0..4 {
            for k in 0..4 {
                acc = acc + self.0[i][k] * rhs.0[k][i];
            }
        }
        acc
    }

    /// Largest entrywise modulus of `self - rhs`.
    pub fn max_abs_diff(&self, rhs: &Self) -> T {
        self.0.iter().flatten().zip(rhs.0.iter().flatten()).map(|(a, b)| (*a - *b).norm()).fold(T::zero(), T::max)
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.max_abs_diff(&self.adjoint()) <= tol
    }

    pub fn commutes_with(&self, rhs: &Self, tol: T) -> bool {
        (*self * *rhs).max_abs_diff(&(*rhs * *self)) <= tol
    }

    /// Cholesky test for positive definiteness of a Hermitian matrix shifted by `shift * I`.
    ///
    /// The shifted matrix is positive definite iff every eigenvalue of `self`
    /// exceeds `-shift`.
    pub fn is_positive_with_shift(&self, shift: T) -> bool {
        let mut a = *self;
        for i in 0..4 {
            a.0[i][i] = a.0[i][i] + C::from(shift);
        }
        let mut l = Self::zero();
        for j in 0..4 {
            let mut d = a.0[j][j].re;
            for k in 0..j {
                d = d - l.0[j][k].norm_sqr();
            }
            if d.partial_cmp(&T::zero()) != Some(core::cmp::Ordering::Greater) {
                return false;
            }
            let ljj = d.sqrt();
            l.0[j][j] = C::from(ljj);
            for i in (j + 1)..4 {
                let mut s = a.0[i][j];
                for k in 0..j {
                    s = s - l.0[i][k] * l.0[j][k].conj();
                }
                l.0[i][j] = s / ljj;
            }
        }
        true
    }

    /// Classifies the operator as local to one factor, trivial, or joint.
    pub fn support(&self, tol: T) -> Support {
        let first = self.is_first_local(tol);
        let second = self.is_second_local(tol);
        match (first, second) {
            (true, true) => Support::Trivial,
            (true, false) => Support::First,
            (false, true) => Support::Second,
            (false, false) => Support::Joint,
        }
    }

    // M[2i+k][2j+l] = P[i][j] δ_kl
    fn is_first_local(&self, tol: T) -> bool {
        for i in 0..2 {
            for j in 0..2 {
                let p = self.0[2 * i][2 * j];
                for k in 0..2 {
                    for l in 0..2 {
                        let expect = if k == l { p } else { C::zero() };
                        if (self.0[2 * i + k][2 * j + l] - expect).norm() > tol {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    // M[2i+k][2j+l] = δ_ij Q[k][l]
    fn is_second_local(&self, tol: T) -> bool {
        for k in 0..2 {
            for l in 0..2 {
                let q = self.0[k][l];
                for i in 0..2 {
                    for j in 0..2 {
                        let expect = if i == j { q } else { C::zero() };
                        if (self.0[2 * i + k][2 * j + l] - expect).norm() > tol {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }
}

impl<T: Real> Add for Matrix4<T> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for i in 0..4 {
            for j in 0..4 {
                self.0[i][j] = self.0[i][j] + rhs.0[i][j];
            }
        }
        self
    }
}

impl<T: Real> Sub for Matrix4<T> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for i in 0..4 {
            for j in 0..4 {
                self.0[i][j] = self.0[i][j] - rhs.0[i][j];
            }
        }
        self
    }
}

impl<T: Real> Mul for Matrix4<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::zero();
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = C::zero();
                for k in 0..4 {
                    acc = acc + self.0[i][k] * rhs.0[k][j];
                }
                out.0[i][j] = acc;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_places_blocks_in_product_basis() {
        let m = Matrix2::<f64>::pauli_z().kron(&Matrix2::identity());
        let diag: Vec<f64> = (0..4).map(|i| m.0[i][i].re).collect();
        assert_eq!(diag, vec![1.0, 1.0, -1.0, -1.0]);
        let m = Matrix2::<f64>::identity().kron(&Matrix2::pauli_z());
        let diag: Vec<f64> = (0..4).map(|i| m.0[i][i].re).collect();
        assert_eq!(diag, vec![1.0, -1.0, 1.0, -1.0]);
    }

    #[test]
    fn support_classification() {
        let x = Matrix2::<f64>::pauli_x();
        let i = Matrix2::identity();
        assert_eq!(x.kron(&i).support(1e-12), Support::First);
        assert_eq!(i.kron(&x).support(1e-12), Support::Second);
        assert_eq!(Matrix4::<f64>::identity().support(1e-12), Support::Trivial);
        assert_eq!(x.kron(&x).support(1e-12), Support::Joint);
    }

    #[test]
    fn cholesky_shift_detects_negative_eigenvalue() {
        let diag = Matrix4::from_real([
            [0.5, 0.0, 0.0, 0.0],
            [0.0, 0.5, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
        ]);
        assert!(diag.is_positive_with_shift(1e-10));
        let mut neg = diag;
        neg.0[3][3] = C::from(-1e-6);
        assert!(!neg.is_positive_with_shift(1e-10));
    }

    #[test]
    fn rotation_is_unitary() {
        let r = Matrix2::<f64>::rotation([0.0, 1.0, 0.0], 0.7);
        let p = r * r.adjoint();
        let id = Matrix2::<f64>::identity();
        for i in 0..2 {
            for j in 0..2 {
                assert!((p.0[i][j] - id.0[i][j]).norm() < 1e-15);
            }
        }
    }
}
