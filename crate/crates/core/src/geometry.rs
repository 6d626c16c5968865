//! Unit vectors on the sphere and the ±1 outcome type.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Deviation from unit norm tolerated without renormalizing.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-9;

/// Vectors shorter than this cannot be normalized.
pub const MIN_NORM: f64 = 1e-12;

/// A plain 3-vector, used for intermediate sums such as `x0 + x1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn dot(&self, other: &Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// A direction on the unit sphere: a measurement setting or a shared random vector.
///
/// Construction accepts any finite vector whose norm is at least [`MIN_NORM`].
/// Inputs already within [`UNIT_NORM_TOLERANCE`] of unit length are kept
/// verbatim so that exact directions like `(0, 0, 1)` stay bit-exact; anything
/// else is rescaled.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(into = "[f64; 3]")]
pub struct UnitVector3(Vec3);

impl UnitVector3 {
    pub const X: UnitVector3 = UnitVector3(Vec3::new(1.0, 0.0, 0.0));
    pub const Y: UnitVector3 = UnitVector3(Vec3::new(0.0, 1.0, 0.0));
    pub const Z: UnitVector3 = UnitVector3(Vec3::new(0.0, 0.0, 1.0));

    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::from_vec(Vec3::new(x, y, z))
    }

    pub fn from_vec(v: Vec3) -> Result<Self> {
        if !(v.x.is_finite() && v.y.is_finite() && v.z.is_finite()) {
            return Err(Error::InvalidGeometry(format!(
                "non-finite component in ({}, {}, {})",
                v.x, v.y, v.z
            )));
        }
        let norm = v.norm();
        if norm < MIN_NORM {
            return Err(Error::ZeroVector);
        }
        if (norm - 1.0).abs() <= UNIT_NORM_TOLERANCE {
            Ok(Self(v))
        } else {
            Ok(Self(v.scale(1.0 / norm)))
        }
    }

    /// Rescales `v` without the tolerance check; `v` must be finite with norm above [`MIN_NORM`].
    #[inline]
    pub(crate) fn normalized_unchecked(v: Vec3) -> Self {
        Self(v.scale(1.0 / v.norm()))
    }

    pub fn from_array(a: [f64; 3]) -> Result<Self> {
        Self::new(a[0], a[1], a[2])
    }

    /// Unit vector in the x–z plane at polar angle `theta` from the z axis.
    pub fn from_polar_xz(theta: f64) -> Self {
        Self(Vec3::new(theta.sin(), 0.0, theta.cos()))
    }

    pub fn x(&self) -> f64 {
        self.0.x
    }

    pub fn y(&self) -> f64 {
        self.0.y
    }

    pub fn z(&self) -> f64 {
        self.0.z
    }

    pub fn as_vec(&self) -> Vec3 {
        self.0
    }

    #[inline]
    pub fn dot(&self, other: &UnitVector3) -> f64 {
        self.0.dot(&other.0)
    }

    #[inline]
    pub fn dot_vec(&self, v: &Vec3) -> f64 {
        self.0.dot(v)
    }

    pub fn to_array(self) -> [f64; 3] {
        self.0.to_array()
    }
}

impl Neg for UnitVector3 {
    type Output = UnitVector3;
    fn neg(self) -> UnitVector3 {
        UnitVector3(-self.0)
    }
}

impl From<UnitVector3> for [f64; 3] {
    fn from(v: UnitVector3) -> [f64; 3] {
        v.to_array()
    }
}

impl<'de> Deserialize<'de> for UnitVector3 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let a = <[f64; 3]>::deserialize(d)?;
        UnitVector3::from_array(a).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for UnitVector3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.0.x, self.0.y, self.0.z)
    }
}

/// A ±1 measurement outcome or communicated bit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Sign {
    // Declared first so that `+1` sorts before `-1`, matching table layouts.
    Plus,
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn value(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.value())
    }

    /// 0 for `+1`, 1 for `-1`; the row/column index used by 2×2 tables.
    pub fn index(self) -> usize {
        match self {
            Sign::Plus => 0,
            Sign::Minus => 1,
        }
    }

    pub fn from_index(i: usize) -> Sign {
        if i == 0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn is_minus(self) -> bool {
        self == Sign::Minus
    }
}

impl std::ops::Mul for Sign {
    type Output = Sign;
    fn mul(self, rhs: Sign) -> Sign {
        if self == rhs {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl Neg for Sign {
    type Output = Sign;
    fn neg(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        s.value()
    }
}

impl TryFrom<i8> for Sign {
    type Error = Error;
    fn try_from(v: i8) -> Result<Sign> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            other => Err(Error::InvalidSign(i64::from(other))),
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// Sign of a finite real, with `sgn(0) = +1`.
pub fn sgn(t: f64) -> Result<Sign> {
    if !t.is_finite() {
        return Err(Error::InvalidGeometry(format!("sign of non-finite value {t}")));
    }
    Ok(sign_of(t))
}

/// Infallible form of [`sgn`] for dot products of unit vectors, which are always finite.
#[inline]
pub(crate) fn sign_of(t: f64) -> Sign {
    debug_assert!(t.is_finite());
    if t >= 0.0 {
        Sign::Plus
    } else {
        Sign::Minus
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sgn_examples() {
        assert_eq!(sgn(0.3).unwrap(), Sign::Plus);
        assert_eq!(sgn(-0.3).unwrap(), Sign::Minus);
        assert_eq!(sgn(0.0).unwrap(), Sign::Plus);
        assert_eq!(sgn(-0.0).unwrap(), Sign::Plus);
    }

    #[test]
    fn sgn_rejects_non_finite() {
        assert!(matches!(sgn(f64::NAN), Err(Error::InvalidGeometry(_))));
        assert!(matches!(sgn(f64::INFINITY), Err(Error::InvalidGeometry(_))));
    }

    #[test]
    fn unit_vector_renormalizes() {
        let v = UnitVector3::new(1.0, 1.0, 1.0).unwrap();
        assert!((v.dot(&v) - 1.0).abs() < 1e-15);
        let d = 0.57735026919;
        let w = UnitVector3::new(d, d, d).unwrap();
        assert!((w.dot(&w) - 1.0).abs() < UNIT_NORM_TOLERANCE);
    }

    #[test]
    fn exact_axes_are_kept_verbatim() {
        let z = UnitVector3::new(0.0, 0.0, 1.0).unwrap();
        assert_eq!(z, UnitVector3::Z);
        let v = UnitVector3::new(0.6, 0.0, 0.8).unwrap();
        assert_eq!(v.to_array(), [0.6, 0.0, 0.8]);
    }

    #[test]
    fn zero_and_tiny_vectors_rejected() {
        assert!(matches!(UnitVector3::new(0.0, 0.0, 0.0), Err(Error::ZeroVector)));
        assert!(matches!(UnitVector3::new(1e-13, 0.0, 0.0), Err(Error::ZeroVector)));
        assert!(UnitVector3::new(1e-11, 0.0, 0.0).is_ok());
        assert!(UnitVector3::new(f64::NAN, 0.0, 1.0).is_err());
    }

    #[test]
    fn sign_algebra() {
        assert_eq!(Sign::Minus * Sign::Minus, Sign::Plus);
        assert_eq!(Sign::Plus * Sign::Minus, Sign::Minus);
        assert_eq!(-Sign::Plus, Sign::Minus);
        assert_eq!(Sign::try_from(0i8).unwrap_err(), Error::InvalidSign(0));
        assert!(Sign::Plus < Sign::Minus);
    }
}
