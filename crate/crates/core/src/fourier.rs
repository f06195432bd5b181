//! Discrete Fourier transform on the periodic lattice.
//!
//! The forward transform samples `ĝ(ξ) = Σ_n g_n e^{-i n·ξ}` at the dual grid
//! `ξ_m = 2π m/(N h)`. Since `n = h k`, the phase is `2π k·m/N` and the
//! transform is the unnormalized d-dimensional DFT. The inverse carries the
//! `N^{-d}` factor, which is the dual-grid quadrature of the continuous
//! inversion formula `g_n = (h/2π)^d ∫_{I_h} ĝ(ξ) e^{i n·ξ} dξ`.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::lattice::{Field, LatticeSpec};

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plan_table() -> &'static RwLock<HashMap<usize, Arc<Plans>>> {
    static TABLE: OnceLock<RwLock<HashMap<usize, Arc<Plans>>>> = OnceLock::new();
    TABLE.get_or_init(|| RwLock::new(HashMap::new()))
}

fn plans(n: usize) -> Arc<Plans> {
    if let Some(p) = plan_table().read().expect("fft plan table poisoned").get(&n) {
        return p.clone();
    }
    let mut table = plan_table().write().expect("fft plan table poisoned");
    table
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plans {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            })
        })
        .clone()
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Direction {
    Forward,
    Inverse,
}

fn transform_axes(dim: usize, n: usize, data: &mut [Complex64], direction: Direction) {
    let plans = plans(n);
    let fft = match direction {
        Direction::Forward => &plans.forward,
        Direction::Inverse => &plans.inverse,
    };
    let total = data.len();
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    let mut lines: Vec<Complex64> = Vec::new();
    for axis in 0..dim {
        let stride = n.pow((dim - 1 - axis) as u32);
        if stride == 1 {
            fft.process_with_scratch(data, &mut scratch);
            continue;
        }
        // Gather every line along `axis` into contiguous storage, transform, scatter back.
        lines.resize(total, Complex64::default());
        let block = stride * n;
        let mut line = 0;
        for outer in (0..total).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                let dst = &mut lines[line * n..(line + 1) * n];
                for (k, slot) in dst.iter_mut().enumerate() {
                    *slot = data[base + k * stride];
                }
                line += 1;
            }
        }
        fft.process_with_scratch(&mut lines, &mut scratch);
        line = 0;
        for outer in (0..total).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                let src = &lines[line * n..(line + 1) * n];
                for (k, &value) in src.iter().enumerate() {
                    data[base + k * stride] = value;
                }
                line += 1;
            }
        }
    }
}

/// In-place forward transform of raw row-major values on `spec`.
pub fn forward_in_place(spec: &LatticeSpec, data: &mut [Complex64]) {
    debug_assert_eq!(data.len(), spec.sites());
    transform_axes(spec.dim(), spec.n(), data, Direction::Forward);
}

/// In-place inverse transform (including the `N^{-d}` normalization).
pub fn inverse_in_place(spec: &LatticeSpec, data: &mut [Complex64]) {
    debug_assert_eq!(data.len(), spec.sites());
    transform_axes(spec.dim(), spec.n(), data, Direction::Inverse);
    let norm = 1.0 / spec.sites() as f64;
    for v in data.iter_mut() {
        *v *= norm;
    }
}

/// Forward lattice Fourier transform sampled on the dual grid.
pub fn dft(f: &Field) -> Field {
    let spec = *f.spec();
    let mut values = f.values().to_vec();
    forward_in_place(&spec, &mut values);
    Field::from_values(spec, values).expect("transform preserves length")
}

/// Inverse of [`dft`].
pub fn idft(spectrum: &Field) -> Field {
    let spec = *spectrum.spec();
    let mut values = spectrum.values().to_vec();
    inverse_in_place(&spec, &mut values);
    Field::from_values(spec, values).expect("transform preserves length")
}

/// `(h/2π)^d ∫_{I_h} |ĝ|² dξ` evaluated with the dual-grid quadrature weight
/// `(2π/(N h))^d`. Equals `‖g‖²_{l²}` when `spectrum = dft(g)`.
pub fn plancherel_l2_sqr(spectrum: &Field) -> f64 {
    let spec = spectrum.spec();
    let integral: f64 =
        spectrum.values().iter().map(|z| z.norm_sqr()).sum::<f64>() * spec.dual_cell_volume();
    integral / spec.dual_torus_volume()
}
