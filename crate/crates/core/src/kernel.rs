//! Convolution kernels of Fourier multipliers.
//!
//! For a symbol `m` on the dual torus the operator `T f = F^{-1}[m F f]` acts
//! on the infinite lattice as `(T f)_n = Σ_k b_k f_{n+k}` with
//!
//! ```text
//! b_k = (h/2π)^d ∫_{[0, 2π/h]^d} e^{-i h k·ξ} m(ξ) dξ .
//! ```
//!
//! Young's inequality then bounds `T` on every `l^p` by `Σ_k |b_k|`. The
//! integral is evaluated with the periodic trapezoid rule at `Q` and `2Q`
//! points per axis; the difference of the two is reported as the quadrature
//! error estimate.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::forward_in_place;
use crate::lattice::{Field, LatticeSpec};

/// Default relative tolerance on the quadrature error estimate.
pub const DEFAULT_QUADRATURE_TOL: f64 = 1e-10;

/// Outer-shell mass fraction above which the kernel box is flagged as too small.
pub const TAIL_WARNING_FRACTION: f64 = 0.01;

/// Kernel coefficients `b_k` for `|k_j| ≤ R` (index units).
#[derive(Debug, Clone)]
pub struct KernelCoefficients {
    dim: usize,
    h: f64,
    radius: usize,
    quadrature_points: usize,
    /// Row-major over offsets `-R..=R` on each axis.
    values: Vec<Complex64>,
    quadrature_error: f64,
    converged: bool,
}

impl KernelCoefficients {
    /// Kernel equal to `amplitude` at the origin and zero elsewhere.
    pub fn delta(dim: usize, h: f64, radius: usize, amplitude: Complex64) -> Self {
        let side = 2 * radius + 1;
        let mut values = vec![Complex64::default(); side.pow(dim as u32)];
        let center = (0..dim).fold(0, |acc, _| acc * side + radius);
        values[center] = amplitude;
        KernelCoefficients {
            dim,
            h,
            radius,
            quadrature_points: 0,
            values,
            quadrature_error: 0.0,
            converged: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn quadrature_points(&self) -> usize {
        self.quadrature_points
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// `max_k |b_k(Q) - b_k(2Q)|`.
    pub fn quadrature_error(&self) -> f64 {
        self.quadrature_error
    }

    /// False when the quadrature error estimate exceeded the requested tolerance.
    pub fn converged(&self) -> bool {
        self.converged
    }

    fn side(&self) -> usize {
        2 * self.radius + 1
    }

    /// Offsets `(k_1, …, k_d)` of a flat box index.
    pub fn offset(&self, mut index: usize) -> Vec<isize> {
        let side = self.side();
        let mut out = vec![0isize; self.dim];
        for slot in out.iter_mut().rev() {
            *slot = (index % side) as isize - self.radius as isize;
            index /= side;
        }
        out
    }

    /// `b_k` at the given offset, zero outside the stored box.
    pub fn get(&self, offset: &[isize]) -> Complex64 {
        let side = self.side() as isize;
        let r = self.radius as isize;
        let mut idx = 0isize;
        for &k in offset {
            if k.abs() > r {
                return Complex64::default();
            }
            idx = idx * side + (k + r);
        }
        self.values[idx as usize]
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= factor;
        }
        out
    }

    /// Iterate `(offset, b_k)` over the box.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<isize>, Complex64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(idx, &b)| (self.offset(idx), b))
    }

    /// `(T f)_n = Σ_k b_k f_{n+k}` on a periodic lattice.
    pub fn convolve(&self, f: &Field) -> Result<Field> {
        let spec = *f.spec();
        if spec.dim() != self.dim {
            return Err(Error::Shape(format!(
                "{}-dimensional kernel applied to a {}-dimensional field",
                self.dim,
                spec.dim()
            )));
        }
        let terms: Vec<(Vec<isize>, Complex64)> =
            self.iter().filter(|(_, b)| b.norm() > 0.0).collect();
        let src = f.values();
        Ok(Field::from_fn(spec, |idx| {
            let mut acc = Complex64::default();
            for (offset, b) in &terms {
                let mut j = idx;
                for (axis, &k) in offset.iter().enumerate() {
                    j = spec.shift(j, axis, k);
                }
                acc += b * src[j];
            }
            acc
        }))
    }
}

/// Trapezoid coefficients `b_k`, `|k_j| ≤ radius`, from `q` samples per axis.
fn trapezoid_coefficients(
    m: &(dyn Fn(&[f64]) -> Complex64 + Sync),
    dim: usize,
    h: f64,
    radius: usize,
    q: usize,
) -> Result<Vec<Complex64>> {
    let grid = LatticeSpec::new(dim, q, h)?;
    let mut samples: Vec<Complex64> = (0..grid.sites()).map(|idx| m(&grid.frequency(idx))).collect();
    if samples.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Domain("symbol is not finite on the dual torus".into()));
    }
    forward_in_place(&grid, &mut samples);
    let norm = 1.0 / grid.sites() as f64;
    let side = 2 * radius + 1;
    let count = side.pow(dim as u32);
    let coeffs = (0..count)
        .map(|mut idx| {
            let mut coords = vec![0usize; dim];
            for slot in coords.iter_mut().rev() {
                let k = (idx % side) as isize - radius as isize;
                *slot = k.rem_euclid(q as isize) as usize;
                idx /= side;
            }
            samples[grid.index_of(&coords)] * norm
        })
        .collect();
    Ok(coeffs)
}

/// Kernel of the multiplier `m` on `hℤ^d`, truncated to `|k_j| ≤ radius`.
///
/// Requires `quadrature_points ≥ 8 (2R + 1)`. The returned coefficients come
/// from the finer (`2Q`) rule; `converged()` is false when the `Q`/`2Q`
/// discrepancy exceeds `tol` relative to `max |b_k|`.
pub fn multiplier_kernel(
    m: &(dyn Fn(&[f64]) -> Complex64 + Sync),
    dim: usize,
    h: f64,
    radius: usize,
    quadrature_points: usize,
    tol: f64,
) -> Result<KernelCoefficients> {
    if dim == 0 || !(h > 0.0) {
        return Err(Error::Config(format!("invalid kernel lattice d={dim} h={h}")));
    }
    if radius == 0 {
        return Err(Error::Config("kernel radius must be positive".into()));
    }
    let min_q = 8 * (2 * radius + 1);
    if quadrature_points < min_q {
        return Err(Error::Precondition(format!(
            "quadrature needs at least {min_q} points per axis for radius {radius}, got {quadrature_points}"
        )));
    }
    let coarse = trapezoid_coefficients(m, dim, h, radius, quadrature_points)?;
    let fine = trapezoid_coefficients(m, dim, h, radius, 2 * quadrature_points)?;
    let quadrature_error = coarse
        .iter()
        .zip(&fine)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let scale = fine.iter().map(|b| b.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    Ok(KernelCoefficients {
        dim,
        h,
        radius,
        quadrature_points: 2 * quadrature_points,
        values: fine,
        quadrature_error,
        converged: quadrature_error <= tol * scale,
    })
}

/// `l¹` norm of a kernel together with its truncation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelNorm {
    pub l1: f64,
    /// `Σ |b_k|` over the outermost shell `max_j |k_j| = R`.
    pub outer_shell_mass: f64,
    /// `outer_shell_mass / l1`.
    pub tail_fraction: f64,
    /// Set when the tail fraction exceeds [`TAIL_WARNING_FRACTION`].
    pub truncation_warning: bool,
}

pub fn kernel_l1_norm(b: &KernelCoefficients) -> KernelNorm {
    let r = b.radius as isize;
    let mut l1 = 0.0;
    let mut shell = 0.0;
    for (offset, value) in b.iter() {
        let mag = value.norm();
        l1 += mag;
        if offset.iter().any(|k| k.abs() == r) {
            shell += mag;
        }
    }
    let tail_fraction = if l1 > 0.0 { shell / l1 } else { 0.0 };
    KernelNorm {
        l1,
        outer_shell_mass: shell,
        tail_fraction,
        truncation_warning: tail_fraction > TAIL_WARNING_FRACTION,
    }
}

/// Smallest power of two that satisfies the `Q ≥ 8(2R+1)` requirement.
pub fn default_quadrature_points(radius: usize) -> usize {
    (8 * (2 * radius + 1)).next_power_of_two()
}
