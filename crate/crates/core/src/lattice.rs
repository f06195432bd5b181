//! Lattice geometry and value-semantic field containers.
//!
//! A [`LatticeSpec`] describes the periodic truncation of `hℤ^d` with `N`
//! sites per axis. Fields store their `N^d` values row-major over the integer
//! coordinates `(k_1, …, k_d)`, so site `k` sits at the physical point `h·k`
//! and the last axis is contiguous in memory.
//!
//! Norms are plain power sums with no `h^d` quadrature weight.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Sub, SubAssign};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Periodic lattice `hℤ^d / (N h ℤ)^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLatticeSpec", into = "RawLatticeSpec")]
pub struct LatticeSpec {
    dim: usize,
    n: usize,
    h: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLatticeSpec {
    dim: usize,
    n: usize,
    h: f64,
}

impl TryFrom<RawLatticeSpec> for LatticeSpec {
    type Error = Error;
    fn try_from(raw: RawLatticeSpec) -> Result<Self> {
        LatticeSpec::new(raw.dim, raw.n, raw.h)
    }
}

impl From<LatticeSpec> for RawLatticeSpec {
    fn from(spec: LatticeSpec) -> Self {
        RawLatticeSpec {
            dim: spec.dim,
            n: spec.n,
            h: spec.h,
        }
    }
}

impl LatticeSpec {
    pub fn new(dim: usize, n: usize, h: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("lattice dimension must be at least 1".into()));
        }
        if n < 2 {
            return Err(Error::Config(format!("need at least 2 sites per axis, got {n}")));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::Config(format!("lattice spacing must be positive, got {h}")));
        }
        let fits = (0..dim).try_fold(1usize, |acc, _| acc.checked_mul(n));
        match fits {
            Some(total) if total <= isize::MAX as usize / 32 => {}
            _ => {
                return Err(Error::Config(format!(
                    "{n}^{dim} sites do not fit in addressable memory"
                )))
            }
        }
        Ok(LatticeSpec { dim, n, h })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Total number of sites, `N^d`.
    pub fn sites(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Memory stride of `axis` in the flat layout.
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.dim - 1 - axis) as u32)
    }

    /// Integer coordinates `(k_1, …, k_d)` of a flat index.
    pub fn coords(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim];
        for slot in out.iter_mut().rev() {
            *slot = index % self.n;
            index /= self.n;
        }
        out
    }

    pub fn index_of(&self, coords: &[usize]) -> usize {
        debug_assert_eq!(coords.len(), self.dim);
        coords.iter().fold(0, |acc, &k| acc * self.n + (k % self.n))
    }

    /// Index of the site `offset` steps away from `index` along `axis`, with periodic wrap.
    #[inline]
    pub fn shift(&self, index: usize, axis: usize, offset: isize) -> usize {
        let stride = self.stride(axis);
        let k = (index / stride) % self.n;
        let n = self.n as isize;
        let shifted = ((k as isize + offset) % n + n) % n;
        index - k * stride + shifted as usize * stride
    }

    /// Centered representative of a coordinate, in `(-N/2, N/2]`.
    pub fn signed(&self, k: usize) -> isize {
        let n = self.n as isize;
        let k = k as isize;
        if 2 * k > n {
            k - n
        } else {
            k
        }
    }

    /// Dual-grid frequency `ξ_m = 2π m / (N h)` for the flat index of `m`.
    pub fn frequency(&self, index: usize) -> Vec<f64> {
        let scale = 2.0 * std::f64::consts::PI / (self.n as f64 * self.h);
        self.coords(index)
            .into_iter()
            .map(|m| m as f64 * scale)
            .collect()
    }

    /// Quadrature weight `(2π/(N h))^d` of one dual-grid cell.
    pub fn dual_cell_volume(&self) -> f64 {
        (2.0 * std::f64::consts::PI / (self.n as f64 * self.h)).powi(self.dim as i32)
    }

    /// Volume `(2π/h)^d` of the dual torus `I_h`.
    pub fn dual_torus_volume(&self) -> f64 {
        (2.0 * std::f64::consts::PI / self.h).powi(self.dim as i32)
    }
}

impl fmt::Display for LatticeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d={} N={} h={}", self.dim, self.n, self.h)
    }
}

/// Exponent `p ∈ [1, ∞]` of an `l^p` norm. `Infinity` is the `p = ∞` sentinel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if p == f64::INFINITY {
            Ok(Exponent::Infinity)
        } else if p.is_finite() && p >= 1.0 {
            Ok(Exponent::Finite(p))
        } else {
            Err(Error::Domain(format!("l^p exponent must satisfy p >= 1, got {p}")))
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Exponent::Finite(p) => p,
            Exponent::Infinity => f64::INFINITY,
        }
    }

    /// `|1 - 2/p|`, the interpolation weight in the linear growth envelopes.
    pub fn interpolation_weight(self) -> f64 {
        match self {
            Exponent::Finite(p) => (1.0 - 2.0 / p).abs(),
            Exponent::Infinity => 1.0,
        }
    }

    /// The grid `{1, 3/2, 2, 4, ∞}` used throughout the bound checks.
    pub fn standard_grid() -> Vec<Exponent> {
        vec![
            Exponent::Finite(1.0),
            Exponent::Finite(1.5),
            Exponent::Finite(2.0),
            Exponent::Finite(4.0),
            Exponent::Infinity,
        ]
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => write!(f, "inf"),
        }
    }
}

impl std::str::FromStr for Exponent {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Exponent::Infinity),
            other => {
                let p: f64 = other
                    .parse()
                    .map_err(|_| Error::Parse(format!("not an exponent: {other:?}")))?;
                Exponent::new(p)
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawExponent {
    Number(f64),
    Text(String),
}

impl Serialize for Exponent {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(p) => RawExponent::Number(*p),
            Exponent::Infinity => RawExponent::Text("inf".into()),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = RawExponent::deserialize(deserializer)?;
        match raw {
            RawExponent::Number(p) => Exponent::new(p),
            RawExponent::Text(s) => s.parse(),
        }
        .map_err(serde::de::Error::custom)
    }
}

/// Entry type of a lattice field: `f64` or `Complex64`.
pub trait Scalar:
    Copy
    + Default
    + Send
    + Sync
    + PartialEq
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<f64, Output = Self>
    + AddAssign
    + SubAssign
{
    fn modulus(self) -> f64;
    fn modulus_sqr(self) -> f64;
    /// `self · conj(other)`.
    fn mul_conj(self, other: Self) -> Self;
    fn to_complex(self) -> Complex64;
    fn is_finite(self) -> bool;
}

impl Scalar for f64 {
    #[inline]
    fn modulus(self) -> f64 {
        self.abs()
    }
    #[inline]
    fn modulus_sqr(self) -> f64 {
        self * self
    }
    #[inline]
    fn mul_conj(self, other: Self) -> Self {
        self * other
    }
    #[inline]
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Scalar for Complex64 {
    #[inline]
    fn modulus(self) -> f64 {
        self.norm()
    }
    #[inline]
    fn modulus_sqr(self) -> f64 {
        self.norm_sqr()
    }
    #[inline]
    fn mul_conj(self, other: Self) -> Self {
        self * other.conj()
    }
    #[inline]
    fn to_complex(self) -> Complex64 {
        self
    }
    #[inline]
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// A lattice function: `N^d` values on a [`LatticeSpec`], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField<T> {
    spec: LatticeSpec,
    values: Vec<T>,
}

/// Complex-valued lattice field.
pub type Field = LatticeField<Complex64>;
/// Real-valued lattice field.
pub type RealField = LatticeField<f64>;

impl<T: Scalar> LatticeField<T> {
    pub fn zeros(spec: LatticeSpec) -> Self {
        LatticeField {
            spec,
            values: vec![T::default(); spec.sites()],
        }
    }

    pub fn constant(spec: LatticeSpec, value: T) -> Self {
        LatticeField {
            spec,
            values: vec![value; spec.sites()],
        }
    }

    pub fn from_values(spec: LatticeSpec, values: Vec<T>) -> Result<Self> {
        if values.len() != spec.sites() {
            return Err(Error::Shape(format!(
                "expected {} values for lattice {spec}, got {}",
                spec.sites(),
                values.len()
            )));
        }
        Ok(LatticeField { spec, values })
    }

    pub fn from_fn(spec: LatticeSpec, mut f: impl FnMut(usize) -> T) -> Self {
        LatticeField {
            spec,
            values: (0..spec.sites()).map(&mut f).collect(),
        }
    }

    /// `amplitude` at site `coords`, zero elsewhere.
    pub fn delta_at(spec: LatticeSpec, coords: &[usize], amplitude: T) -> Self {
        let mut field = Self::zeros(spec);
        let idx = spec.index_of(coords);
        field.values[idx] = amplitude;
        field
    }

    /// `amplitude` at the origin, zero elsewhere.
    pub fn delta(spec: LatticeSpec, amplitude: T) -> Self {
        let mut field = Self::zeros(spec);
        field.values[0] = amplitude;
        field
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn ensure_same_lattice<U>(&self, other: &LatticeField<U>) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::Shape(format!(
                "lattice mismatch: {} vs {}",
                self.spec, other.spec
            )));
        }
        Ok(())
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> LatticeField<U> {
        LatticeField {
            spec: self.spec,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.ensure_same_lattice(other)?;
        Ok(LatticeField {
            spec: self.spec,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.map(|v| v * factor)
    }

    /// `self + factor·other`.
    pub fn add_scaled(&self, factor: f64, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + b * factor)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    /// `l^p` norm without lattice weights; `p = ∞` is the max modulus.
    pub fn norm(&self, p: Exponent) -> f64 {
        match p {
            Exponent::Infinity => self.sup_norm(),
            Exponent::Finite(1.0) => self.values.iter().map(|v| v.modulus()).sum(),
            Exponent::Finite(2.0) => {
                self.values.iter().map(|v| v.modulus_sqr()).sum::<f64>().sqrt()
            }
            Exponent::Finite(p) => {
                let scale = self.sup_norm();
                if scale == 0.0 || !scale.is_finite() {
                    return scale;
                }
                let sum: f64 = self
                    .values
                    .iter()
                    .map(|v| (v.modulus() / scale).powf(p))
                    .sum();
                scale * sum.powf(1.0 / p)
            }
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.modulus()))
    }

    /// `Σ_n f_n · conj(g_n)`.
    pub fn inner(&self, other: &Self) -> Result<T> {
        self.ensure_same_lattice(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(T::default(), |mut acc, (&a, &b)| {
                acc += a.mul_conj(b);
                acc
            }))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn to_complex(&self) -> Field {
        self.map(Scalar::to_complex)
    }
}

impl Field {
    pub fn re(&self) -> RealField {
        self.map(|z| z.re)
    }

    pub fn im(&self) -> RealField {
        self.map(|z| z.im)
    }

    pub fn scaled_complex(&self, factor: Complex64) -> Field {
        self.map(|v| v * factor)
    }
}

/// `l^p` norm for a raw exponent; `f64::INFINITY` selects the sup norm.
pub fn lp_norm<T: Scalar>(field: &LatticeField<T>, p: f64) -> Result<f64> {
    Ok(field.norm(Exponent::new(p)?))
}

/// `Σ_n f_n · conj(g_n)`.
pub fn inner<T: Scalar>(f: &LatticeField<T>, g: &LatticeField<T>) -> Result<T> {
    f.inner(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec1(n: usize) -> LatticeSpec {
        LatticeSpec::new(1, n, 1.0).unwrap()
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(LatticeSpec::new(0, 4, 1.0).is_err());
        assert!(LatticeSpec::new(1, 1, 1.0).is_err());
        assert!(LatticeSpec::new(1, 4, 0.0).is_err());
        assert!(LatticeSpec::new(1, 4, f64::NAN).is_err());
        assert!(LatticeSpec::new(64, 1 << 20, 1.0).is_err());
    }

    #[test]
    fn delta_norm_is_one_for_every_p() {
        let spec = LatticeSpec::new(2, 8, 0.5).unwrap();
        let delta = Field::delta(spec, Complex64::new(1.0, 0.0));
        for p in Exponent::standard_grid() {
            assert_relative_eq!(delta.norm(p), 1.0, epsilon = 1e-15);
        }
        assert_relative_eq!(delta.norm(Exponent::Finite(3.7)), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn constant_field_norms() {
        let ones = RealField::constant(spec1(4), 1.0);
        assert_relative_eq!(lp_norm(&ones, 1.0).unwrap(), 4.0);
        assert_relative_eq!(lp_norm(&ones, 2.0).unwrap(), 2.0);
        assert_relative_eq!(lp_norm(&ones, f64::INFINITY).unwrap(), 1.0);
        assert_relative_eq!(lp_norm(&ones, 4.0).unwrap(), 4f64.powf(0.25), epsilon = 1e-15);
    }

    #[test]
    fn exponent_below_one_is_a_domain_error() {
        let ones = RealField::constant(spec1(4), 1.0);
        assert!(matches!(lp_norm(&ones, 0.5), Err(Error::Domain(_))));
        assert!(matches!(lp_norm(&ones, f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn inner_of_disjoint_deltas_vanishes() {
        let spec = spec1(6);
        let a = Field::delta(spec, Complex64::new(1.0, 0.0));
        let b = Field::delta_at(spec, &[3], Complex64::new(0.0, 2.0));
        assert_eq!(a.inner(&b).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn inner_rejects_mismatched_lattices() {
        let a = Field::zeros(spec1(4));
        let b = Field::zeros(spec1(8));
        assert!(matches!(a.inner(&b), Err(Error::Shape(_))));
        assert!(Field::from_values(spec1(4), vec![Complex64::default(); 3]).is_err());
    }

    #[test]
    fn shift_wraps_periodically() {
        let spec = LatticeSpec::new(2, 4, 1.0).unwrap();
        let idx = spec.index_of(&[0, 3]);
        assert_eq!(spec.coords(spec.shift(idx, 1, 1)), vec![0, 0]);
        assert_eq!(spec.coords(spec.shift(idx, 0, -1)), vec![3, 3]);
        assert_eq!(spec.signed(3), -1);
        assert_eq!(spec.signed(2), 2);
    }

    #[test]
    fn exponent_parsing_and_serde() {
        assert_eq!("inf".parse::<Exponent>().unwrap(), Exponent::Infinity);
        assert_eq!("1.5".parse::<Exponent>().unwrap(), Exponent::Finite(1.5));
        assert!("0.3".parse::<Exponent>().is_err());
        assert_eq!(Exponent::Infinity.interpolation_weight(), 1.0);
        assert_eq!(Exponent::Finite(2.0).interpolation_weight(), 0.0);
    }
}
