use serde::Serialize;

use crate::scalar::Real;
use crate::{Error, Result};

/// Unit vector in physical space, used for spin measurement axes and hidden variables.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Direction<T> {
    x: T,
    y: T,
    z: T,
}

impl<T: Real> Direction<T> {
    /// Builds a direction, rejecting vectors whose squared norm is not 1 within the
    /// identity tolerance.
    pub fn new(x: T, y: T, z: T) -> Result<Self> {
        let n2 = x * x + y * y + z * z;
        if !n2.is_finite() || (n2 - T::one()).abs() > T::identity_tol() {
            return Err(Error::InvalidInput(format!("direction ({x}, {y}, {z}) is not a unit vector (|v|^2 = {n2})")));
        }
        Ok(Self { x, y, z })
    }

    /// Rescales a nonzero vector onto the unit sphere.
    pub fn normalized(x: T, y: T, z: T) -> Result<Self> {
        let n = (x * x + y * y + z * z).sqrt();
        if !n.is_finite() || n <= T::zero() {
            return Err(Error::InvalidInput(format!("cannot normalize vector ({x}, {y}, {z})")));
        }
        Ok(Self { x: x / n, y: y / n, z: z / n })
    }

    /// Point on the sphere from a cosine of the polar angle and an azimuth.
    /// Any `cos_theta` in `[-1, 1]` yields a unit vector up to roundoff.
    pub(crate) fn from_polar_unchecked(cos_theta: T, phi: T) -> Self {
        let r = (T::one() - cos_theta * cos_theta).max(T::zero()).sqrt();
        let (s, c) = phi.sin_cos();
        Self { x: r * c, y: r * s, z: cos_theta }
    }

    pub fn x_axis() -> Self {
        Self { x: T::one(), y: T::zero(), z: T::zero() }
    }

    pub fn y_axis() -> Self {
        Self { x: T::zero(), y: T::one(), z: T::zero() }
    }

    pub fn z_axis() -> Self {
        Self { x: T::zero(), y: T::zero(), z: T::one() }
    }

    /// Direction in the x–z measurement plane, `angle` radians from +z towards +x.
    ///
    /// All scans and optimizations work in this plane; the angle between two such
    /// directions is the difference of their angles.
    pub fn in_plane(angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        Self { x: s, y: T::zero(), z: c }
    }

    pub fn in_plane_degrees(degrees: T) -> Self {
        Self::in_plane(degrees.to_radians())
    }

    pub fn x(&self) -> T {
        self.x
    }

    pub fn y(&self) -> T {
        self.y
    }

    pub fn z(&self) -> T {
        self.z
    }

    pub fn components(&self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(&self, other: &Self) -> T {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn neg(&self) -> Self {
        Self { x: -self.x, y: -self.y, z: -self.z }
    }
}
