//! Brute-force reference computations for small lattices.
//!
//! Nothing here touches the FFT path: operators are assembled row by row from
//! the stencil and matrix functions come from a symmetric eigendecomposition.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{Field, LatticeSpec};

/// Largest lattice (in sites) the dense oracles accept.
pub const DENSE_CAP: usize = 4096;

fn check_cap(spec: &LatticeSpec) -> Result<()> {
    if spec.sites() > DENSE_CAP {
        return Err(Error::SizeCap {
            sites: spec.sites(),
            cap: DENSE_CAP,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DenseOp {
    Laplacian,
    BesselPower(f64),
    SchrodingerPropagator(f64),
    KgPropagator(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    spec: LatticeSpec,
    entries: DMatrix<Complex64>,
}

impl DenseOperator {
    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn apply(&self, f: &Field) -> Result<Field> {
        if *f.spec() != self.spec {
            return Err(Error::Shape(format!(
                "dense operator on {} applied to field on {}",
                self.spec,
                f.spec()
            )));
        }
        let x = DVector::from_column_slice(f.values());
        let y = &self.entries * x;
        Field::from_values(self.spec, y.as_slice().to_vec())
    }

    /// `max |(P* P - I)_{jk}|`.
    pub fn unitarity_defect(&self) -> f64 {
        let prod = self.entries.adjoint() * &self.entries;
        let n = prod.nrows();
        let mut worst = 0.0_f64;
        for j in 0..n {
            for k in 0..n {
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((prod[(j, k)] - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }
}

/// Real symmetric matrix of `Δ_h`, one stencil row per site.
pub fn laplacian_matrix(spec: &LatticeSpec) -> Result<DMatrix<f64>> {
    check_cap(spec)?;
    let m = spec.sites();
    let inv_h2 = 1.0 / (spec.h() * spec.h());
    let mut a = DMatrix::<f64>::zeros(m, m);
    for row in 0..m {
        for axis in 0..spec.dim() {
            a[(row, spec.shift(row, axis, 1))] += inv_h2;
            a[(row, spec.shift(row, axis, -1))] += inv_h2;
            a[(row, row)] -= 2.0 * inv_h2;
        }
    }
    Ok(a)
}

/// Eigenvalues of `-Δ_h`, ascending.
pub fn negative_laplacian_eigenvalues(spec: &LatticeSpec) -> Result<Vec<f64>> {
    let a = -laplacian_matrix(spec)?;
    let mut values: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Assemble `op` densely; matrix functions act on the eigenvalues `λ ≥ 0` of `-Δ_h`.
pub fn assemble_dense(op: DenseOp, spec: &LatticeSpec) -> Result<DenseOperator> {
    let lap = laplacian_matrix(spec)?;
    if op == DenseOp::Laplacian {
        return Ok(DenseOperator {
            spec: *spec,
            entries: lap.map(|x| Complex64::new(x, 0.0)),
        });
    }
    let eig = SymmetricEigen::new(-lap);
    let func: Box<dyn Fn(f64) -> Complex64> = match op {
        DenseOp::Laplacian => unreachable!(),
        DenseOp::BesselPower(alpha) => {
            if !(alpha.is_finite() && alpha.abs() <= 1.0) {
                return Err(Error::Domain(format!("Bessel power exponent must lie in [-1, 1], got {alpha}")));
            }
            Box::new(move |l| Complex64::new((1.0 + l).powf(alpha), 0.0))
        }
        // u' = -iΔu, and -Δ has eigenvalue l, so the mode turns by e^{+itl}
        DenseOp::SchrodingerPropagator(t) => Box::new(move |l| Complex64::from_polar(1.0, t * l)),
        DenseOp::KgPropagator(t) => Box::new(move |l| Complex64::from_polar(1.0, -t * (1.0 + l).sqrt())),
    };
    let q = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
    let diag = DMatrix::from_diagonal(&DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| func(l.max(0.0))),
    ));
    let entries = &q * diag * q.transpose();
    Ok(DenseOperator {
        spec: *spec,
        entries,
    })
}

/// Literal `ĝ(ξ_m) = Σ_k g_k e^{-2πi k·m/N}`, with the phase index reduced mod `N`.
pub fn direct_dft(f: &Field) -> Result<Field> {
    let spec = *f.spec();
    check_cap(&spec)?;
    let n = spec.n();
    let roots: Vec<Complex64> = (0..n)
        .map(|j| Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * j as f64 / n as f64))
        .collect();
    let coords: Vec<Vec<usize>> = (0..spec.sites()).map(|i| spec.coords(i)).collect();
    Ok(Field::from_fn(spec, |m| {
        let mc = &coords[m];
        let mut acc = Complex64::default();
        for (k, value) in f.values().iter().enumerate() {
            let phase = coords[k].iter().zip(mc).map(|(a, b)| a * b).sum::<usize>() % n;
            acc += value * roots[phase];
        }
        acc
    }))
}

/// Centered second differences `(y_{i+1} - 2y_i + y_{i-1}) / τ²` at the interior points.
pub fn finite_diff_second(series: &[f64], tau: f64) -> Result<Vec<f64>> {
    if series.len() < 3 {
        return Err(Error::Precondition(format!(
            "second differences need at least 3 samples, got {}",
            series.len()
        )));
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::Config(format!("sample spacing must be positive, got {tau}")));
    }
    Ok(series
        .windows(3)
        .map(|w| (w[2] - 2.0 * w[1] + w[0]) / (tau * tau))
        .collect())
}

/// `b_k = Q^{-d} Σ_m m(ξ_m) e^{-i h k·ξ_m}` by explicit summation over a
/// `Q^d` grid of the dual torus, for one offset `k`.
pub fn direct_kernel_coefficient(
    m: &dyn Fn(&[f64]) -> Complex64,
    dim: usize,
    h: f64,
    offset: &[isize],
    q: usize,
) -> Result<Complex64> {
    if offset.len() != dim || q == 0 {
        return Err(Error::Config("offset dimension or grid size mismatch".into()));
    }
    let step = 2.0 * std::f64::consts::PI / (q as f64 * h);
    let total = q.pow(dim as u32);
    let mut xi = vec![0.0; dim];
    let mut acc = Complex64::default();
    for mut idx in 0..total {
        let mut phase = 0.0;
        for j in (0..dim).rev() {
            let c = idx % q;
            idx /= q;
            xi[j] = c as f64 * step;
            // reduce k·c mod Q in integers to keep the phase small
            let kc = (offset[j].rem_euclid(q as isize) as usize * c) % q;
            phase += kc as f64;
        }
        let angle = -2.0 * std::f64::consts::PI * phase / q as f64;
        acc += m(&xi) * Complex64::from_polar(1.0, angle);
    }
    Ok(acc / total as f64)
}
