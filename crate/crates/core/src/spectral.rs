//! Discrete Laplacian, dual-torus symbols and the linear propagators.
//!
//! On the dual grid the Laplacian acts as multiplication by `-s(ξ)` with
//! `s(ξ) = (4/h²) Σ_j sin²(h ξ_j / 2)`, and `1 - Δ_h` by `M(ξ) = 1 + s(ξ)`.
//! Every operator here is diagonal in that basis, so powers and exponentials
//! are applied by one forward transform, a pointwise product, and one inverse.
//!
//! Propagator phases follow the evolution equations rather than the operator
//! notation alone:
//!
//! * `i ∂_t u - Δ_h u = 0` gives `û(t, ξ) = e^{+i t s(ξ)} û(0, ξ)`;
//! * `i ∂_t u - √(1 - Δ_h) u = 0` gives `û(t, ξ) = e^{-i t √M(ξ)} û(0, ξ)`.
//!
//! Both are written as `e^{-i t ω(ξ)}` with a [`LinearFlow`]-specific
//! dispersion relation `ω`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::{forward_in_place, inverse_in_place};
use crate::lattice::{Field, LatticeField, LatticeSpec, RealField, Scalar};

/// `(Δ_h f)_n = h^{-2} Σ_j (f_{n+he_j} + f_{n-he_j} - 2 f_n)` with periodic wrap.
pub fn discrete_laplacian<T: Scalar>(f: &LatticeField<T>) -> LatticeField<T> {
    let spec = *f.spec();
    let inv_h2 = 1.0 / (spec.h() * spec.h());
    let values = f.values();
    LatticeField::from_fn(spec, |idx| {
        let center = values[idx];
        let mut acc = T::default();
        for axis in 0..spec.dim() {
            let fwd = values[spec.shift(idx, axis, 1)];
            let bwd = values[spec.shift(idx, axis, -1)];
            acc += fwd + bwd - center * 2.0;
        }
        acc * inv_h2
    })
}

/// Per-axis table of `(4/h²) sin²(π m / N)` for `m = 0..N`.
fn axis_symbol_table(spec: &LatticeSpec) -> Vec<f64> {
    let n = spec.n();
    let scale = 4.0 / (spec.h() * spec.h());
    (0..n)
        .map(|m| {
            let s = (std::f64::consts::PI * m as f64 / n as f64).sin();
            scale * s * s
        })
        .collect()
}

/// `s(ξ_m)` at every dual-grid point.
pub fn laplacian_symbol_values(spec: &LatticeSpec) -> Vec<f64> {
    let table = axis_symbol_table(spec);
    let n = spec.n();
    (0..spec.sites())
        .map(|mut idx| {
            let mut sum = 0.0;
            for _ in 0..spec.dim() {
                sum += table[idx % n];
                idx /= n;
            }
            sum
        })
        .collect()
}

/// `s(ξ) = (4/h²) Σ_j sin²(h ξ_j / 2)` at an arbitrary point of the dual torus.
pub fn laplacian_symbol_at(h: f64, xi: &[f64]) -> f64 {
    let scale = 4.0 / (h * h);
    xi.iter()
        .map(|&x| {
            let s = (0.5 * h * x).sin();
            scale * s * s
        })
        .sum()
}

/// `M(ξ) = 1 + s(ξ)`, the symbol of `1 - Δ_h`.
pub fn bessel_symbol_at(h: f64, xi: &[f64]) -> f64 {
    1.0 + laplacian_symbol_at(h, xi)
}

/// A function on the dual grid acting by pointwise multiplication of spectra.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierSymbol {
    spec: LatticeSpec,
    values: Vec<Complex64>,
}

impl MultiplierSymbol {
    pub fn from_values(spec: LatticeSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != spec.sites() {
            return Err(Error::Shape(format!(
                "symbol has {} samples, lattice {spec} needs {}",
                values.len(),
                spec.sites()
            )));
        }
        if values.iter().any(|z| !z.is_finite()) {
            return Err(Error::Domain("symbol samples must be finite".into()));
        }
        Ok(MultiplierSymbol { spec, values })
    }

    /// Sample `m(ξ)` at the dual grid.
    pub fn from_fn(spec: LatticeSpec, m: impl Fn(&[f64]) -> Complex64) -> Result<Self> {
        let values = (0..spec.sites()).map(|idx| m(&spec.frequency(idx))).collect();
        Self::from_values(spec, values)
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Multiply the spectrum of `f` by the symbol and transform back.
    pub fn apply(&self, f: &Field) -> Result<Field> {
        if *f.spec() != self.spec {
            return Err(Error::Shape(format!(
                "symbol on {} applied to field on {}",
                self.spec,
                f.spec()
            )));
        }
        let mut data = f.values().to_vec();
        forward_in_place(&self.spec, &mut data);
        for (z, m) in data.iter_mut().zip(&self.values) {
            *z *= m;
        }
        inverse_in_place(&self.spec, &mut data);
        Field::from_values(self.spec, data)
    }
}

/// Symbol `s(ξ)` of `-Δ_h`; `Δ_h` itself multiplies spectra by `-s`.
pub fn laplacian_symbol(spec: LatticeSpec) -> MultiplierSymbol {
    let values = laplacian_symbol_values(&spec)
        .into_iter()
        .map(|s| Complex64::new(s, 0.0))
        .collect();
    MultiplierSymbol { spec, values }
}

fn check_bessel_exponent(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha.abs() <= 1.0) {
        return Err(Error::Domain(format!(
            "Bessel power exponent must lie in [-1, 1], got {alpha}"
        )));
    }
    Ok(())
}

/// Symbol `M(ξ)^α` of `(1 - Δ_h)^α`.
pub fn bessel_symbol(spec: LatticeSpec, alpha: f64) -> Result<MultiplierSymbol> {
    check_bessel_exponent(alpha)?;
    let values = laplacian_symbol_values(&spec)
        .into_iter()
        .map(|s| Complex64::new((1.0 + s).powf(alpha), 0.0))
        .collect();
    Ok(MultiplierSymbol { spec, values })
}

/// `(1 - Δ_h)^α f` for `α ∈ [-1, 1]`.
pub fn bessel_power(f: &Field, alpha: f64) -> Result<Field> {
    check_bessel_exponent(alpha)?;
    if alpha == 0.0 {
        return Ok(f.clone());
    }
    bessel_symbol(*f.spec(), alpha)?.apply(f)
}

/// `(1 - Δ_h)^α f` for real `f`; the symbol is even so the result stays real.
pub fn bessel_power_real(f: &RealField, alpha: f64) -> Result<RealField> {
    Ok(bessel_power(&f.to_complex(), alpha)?.re())
}

/// The two constant-coefficient linear flows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearFlow {
    /// `i ∂_t u - Δ_h u = 0`.
    Schrodinger,
    /// `i ∂_t u - √(1 - Δ_h) u = 0`.
    KleinGordon,
}

/// Dispersion relation `ω(ξ_m)` of a [`LinearFlow`] on one lattice; the flow
/// multiplies spectra by `e^{-i t ω}`.
#[derive(Debug, Clone)]
pub struct Dispersion {
    spec: LatticeSpec,
    flow: LinearFlow,
    omega: Vec<f64>,
}

impl Dispersion {
    pub fn new(spec: LatticeSpec, flow: LinearFlow) -> Self {
        let s = laplacian_symbol_values(&spec);
        let omega = match flow {
            LinearFlow::Schrodinger => s.into_iter().map(|v| -v).collect(),
            LinearFlow::KleinGordon => s.into_iter().map(|v| (1.0 + v).sqrt()).collect(),
        };
        Dispersion { spec, flow, omega }
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn flow(&self) -> LinearFlow {
        self.flow
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    /// Multiply a spectrum in place by `e^{-i t ω}`.
    pub fn evolve_spectrum(&self, spectrum: &mut [Complex64], t: f64) {
        for (z, &w) in spectrum.iter_mut().zip(&self.omega) {
            *z *= Complex64::from_polar(1.0, -t * w);
        }
    }

    /// Precomputed phases `e^{-i t ω}` for a fixed `t`.
    pub fn phases(&self, t: f64) -> Vec<Complex64> {
        self.omega
            .iter()
            .map(|&w| Complex64::from_polar(1.0, -t * w))
            .collect()
    }

    /// Evolve raw physical-space values in place by time `t`.
    pub fn evolve_in_place(&self, data: &mut [Complex64], t: f64) {
        if t == 0.0 {
            return;
        }
        forward_in_place(&self.spec, data);
        self.evolve_spectrum(data, t);
        inverse_in_place(&self.spec, data);
    }

    pub fn evolve(&self, f: &Field, t: f64) -> Result<Field> {
        if *f.spec() != self.spec {
            return Err(Error::Shape(format!(
                "propagator on {} applied to field on {}",
                self.spec,
                f.spec()
            )));
        }
        let mut data = f.values().to_vec();
        self.evolve_in_place(&mut data, t);
        Field::from_values(self.spec, data)
    }
}

/// Exact solution of `i ∂_t u - Δ_h u = 0` at time `t` with `u(0) = f`.
pub fn schrodinger_propagator(f: &Field, t: f64) -> Field {
    Dispersion::new(*f.spec(), LinearFlow::Schrodinger)
        .evolve(f, t)
        .expect("dispersion built on the field's own lattice")
}

/// Exact solution of `i ∂_t u - √(1 - Δ_h) u = 0` at time `t` with `u(0) = f`.
pub fn kg_propagator(f: &Field, t: f64) -> Field {
    Dispersion::new(*f.spec(), LinearFlow::KleinGordon)
        .evolve(f, t)
        .expect("dispersion built on the field's own lattice")
}
