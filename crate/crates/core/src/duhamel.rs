//! Fixed-point solution of Duhamel integral equations
//!
//! ```text
//! y(t) = P(t) y0 + ∫_0^t P(t - s) S(y(s)) ds ,    P(t) = e^{-i t ω(D)} ,
//! ```
//!
//! on a uniform time grid. The integral is carried in Fourier space as
//! `P(t) [ŷ0 + ∫_0^t P(-s) Ŝ(s) ds]`, so the integrand is smooth and free of
//! the fast linear phase. The cumulative integral uses fourth-order rules at
//! every node. Long horizons are split into windows, each solved by Picard
//! iteration from the previous window's endpoint.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::{forward_in_place, inverse_in_place};
use crate::lattice::{Field, LatticeSpec};
use crate::spectral::Dispersion;

/// Spectrum `Ŝ` of the source term for a physical-space state.
pub type Source<'a> = dyn Fn(&[Complex64]) -> Vec<Complex64> + Sync + 'a;

/// Cumulative integrals `∫_0^{t_i} g` for `i = 0..=n` from samples on a
/// uniform grid with spacing `dt`, fourth-order accurate at every node.
///
/// Even nodes use composite Simpson; odd nodes past the first end with the
/// 3/8 rule; node 1 uses the cubic through the first four samples.
pub fn cumulative_quadrature(g: &[Vec<Complex64>], dt: f64) -> Result<Vec<Vec<Complex64>>> {
    let n = g.len();
    if n < 4 {
        return Err(Error::Precondition(format!(
            "cumulative quadrature needs at least 4 nodes, got {n}"
        )));
    }
    let width = g[0].len();
    let mut cum = vec![vec![Complex64::default(); width]; n];
    let third = dt / 3.0;
    let three_eighths = 3.0 * dt / 8.0;
    let cubic = dt / 24.0;
    for k in 0..width {
        cum[1][k] = cubic * (9.0 * g[0][k] + 19.0 * g[1][k] - 5.0 * g[2][k] + g[3][k]);
    }
    for i in 2..n {
        if i % 2 == 0 {
            for k in 0..width {
                cum[i][k] = cum[i - 2][k] + third * (g[i - 2][k] + 4.0 * g[i - 1][k] + g[i][k]);
            }
        } else {
            for k in 0..width {
                cum[i][k] = cum[i - 3][k]
                    + three_eighths
                        * (g[i - 3][k] + 3.0 * g[i - 2][k] + 3.0 * g[i - 1][k] + g[i][k]);
            }
        }
    }
    Ok(cum)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardControl {
    /// Stop when successive iterates differ by at most this in sup-t `l²`.
    pub tol: f64,
    pub max_iter: usize,
}

/// Time-sampled fixed point.
#[derive(Debug, Clone)]
pub struct DuhamelSolution {
    pub times: Vec<f64>,
    pub states: Vec<Field>,
    /// Iterations used in each window.
    pub iterations: Vec<usize>,
    /// Largest `sup_t ‖y - Φ(y)‖_{l²}` over the windows, for the returned iterate.
    pub residual: f64,
}

struct Window<'a> {
    spec: LatticeSpec,
    dispersion: &'a Dispersion,
    source: &'a Source<'a>,
    dt: f64,
    intervals: usize,
    /// `e^{+i τ_i ω}` at local node times.
    back_phases: Vec<Vec<Complex64>>,
}

impl<'a> Window<'a> {
    fn new(dispersion: &'a Dispersion, source: &'a Source<'a>, dt: f64, intervals: usize) -> Self {
        let back_phases = (0..=intervals)
            .map(|i| dispersion.phases(-(i as f64) * dt))
            .collect();
        Window {
            spec: *dispersion.spec(),
            dispersion,
            source,
            dt,
            intervals,
            back_phases,
        }
    }

    /// One application of the Duhamel map to the node values `ys`.
    fn apply(&self, y0_hat: &[Complex64], ys: &[Vec<Complex64>]) -> Result<Vec<Vec<Complex64>>> {
        let sites = self.spec.sites();
        let integrand: Vec<Vec<Complex64>> = ys
            .iter()
            .zip(&self.back_phases)
            .map(|(y, phase)| {
                let mut s = (self.source)(y);
                debug_assert_eq!(s.len(), sites);
                for (z, p) in s.iter_mut().zip(phase) {
                    *z *= p;
                }
                s
            })
            .collect();
        let cum = cumulative_quadrature(&integrand, self.dt)?;
        Ok(cum
            .into_iter()
            .zip(&self.back_phases)
            .map(|(c, phase)| {
                let mut y: Vec<Complex64> = y0_hat
                    .iter()
                    .zip(&c)
                    .zip(phase)
                    .map(|((a, b), p)| (a + b) * p.conj())
                    .collect();
                inverse_in_place(&self.spec, &mut y);
                y
            })
            .collect())
    }

    fn solve(&self, y0: &[Complex64], control: PicardControl) -> Result<(Vec<Vec<Complex64>>, usize, f64)> {
        let mut y0_hat = y0.to_vec();
        forward_in_place(&self.spec, &mut y0_hat);
        // free evolution as the starting guess
        let mut ys: Vec<Vec<Complex64>> = (0..=self.intervals)
            .map(|i| {
                let mut y = y0.to_vec();
                self.dispersion.evolve_in_place(&mut y, i as f64 * self.dt);
                y
            })
            .collect();
        let mut diff = f64::INFINITY;
        for iter in 1..=control.max_iter {
            let next = self.apply(&y0_hat, &ys)?;
            diff = sup_l2_distance(&next, &ys);
            ys = next;
            if !diff.is_finite() {
                break;
            }
            if diff <= control.tol {
                let check = self.apply(&y0_hat, &ys)?;
                let residual = sup_l2_distance(&check, &ys);
                return Ok((ys, iter, residual));
            }
        }
        Err(Error::NonContraction {
            iterations: control.max_iter,
            residual: diff,
        })
    }
}

fn sup_l2_distance(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            x.iter()
                .zip(y)
                .map(|(p, q)| (p - q).norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

/// Solve on consecutive windows of `window_intervals[w]` steps of size `dt`.
///
/// Each window needs at least 3 intervals (four nodes).
pub fn solve_windows(
    dispersion: &Dispersion,
    source: &Source<'_>,
    y0: &Field,
    dt: f64,
    window_intervals: &[usize],
    control: PicardControl,
) -> Result<DuhamelSolution> {
    if y0.spec() != dispersion.spec() {
        return Err(Error::Shape(format!(
            "initial data on {} for a flow on {}",
            y0.spec(),
            dispersion.spec()
        )));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Config(format!("time step must be positive, got {dt}")));
    }
    if let Some(&bad) = window_intervals.iter().find(|&&m| m < 3) {
        return Err(Error::Config(format!(
            "every window needs at least 3 intervals, got {bad}"
        )));
    }
    let spec = *y0.spec();
    let mut times = vec![0.0];
    let mut states = vec![y0.clone()];
    let mut iterations = Vec::with_capacity(window_intervals.len());
    let mut residual = 0.0_f64;
    let mut offset = 0usize;
    let mut start = y0.values().to_vec();
    let mut windows: Vec<(usize, Window<'_>)> = Vec::new();
    for &m in window_intervals {
        // windows of equal length share their phase tables
        if windows.iter().all(|(len, _)| *len != m) {
            windows.push((m, Window::new(dispersion, source, dt, m)));
        }
        let window = &windows.iter().find(|(len, _)| *len == m).expect("inserted above").1;
        let (ys, iters, res) = window.solve(&start, control)?;
        iterations.push(iters);
        residual = residual.max(res);
        for (i, y) in ys.into_iter().enumerate().skip(1) {
            times.push((offset + i) as f64 * dt);
            if i == m {
                start = y.clone();
            }
            states.push(Field::from_values(spec, y)?);
        }
        offset += m;
    }
    Ok(DuhamelSolution {
        times,
        states,
        iterations,
        residual,
    })
}

/// Split `total` intervals into windows of at most `max_per_window`, each at
/// least 3 long.
pub fn partition_intervals(total: usize, max_per_window: usize) -> Result<Vec<usize>> {
    if total < 3 {
        return Err(Error::Config(format!(
            "horizon covers {total} steps; at least 3 are needed"
        )));
    }
    let cap = max_per_window.max(3);
    let windows = total.div_ceil(cap);
    let base = total / windows;
    let extra = total % windows;
    Ok((0..windows).map(|w| base + usize::from(w < extra)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::LinearFlow;

    fn scalar(values: &[f64]) -> Vec<Vec<Complex64>> {
        values.iter().map(|&v| vec![Complex64::new(v, 0.0)]).collect()
    }

    #[test]
    fn quadrature_is_exact_on_cubics() {
        let dt = 0.1;
        let f = |t: f64| 1.0 - 2.0 * t + 3.0 * t * t - 0.5 * t.powi(3);
        let antiderivative = |t: f64| t - t * t + t.powi(3) - 0.125 * t.powi(4);
        let samples: Vec<f64> = (0..9).map(|i| f(i as f64 * dt)).collect();
        let cum = cumulative_quadrature(&scalar(&samples), dt).unwrap();
        for (i, c) in cum.iter().enumerate() {
            let exact = antiderivative(i as f64 * dt);
            assert!((c[0].re - exact).abs() < 1e-14, "node {i}");
        }
    }

    #[test]
    fn quadrature_is_fourth_order() {
        let err = |n: usize| {
            let dt = 1.0 / n as f64;
            let samples: Vec<f64> = (0..=n).map(|i| (3.0 * i as f64 * dt).cos()).collect();
            let cum = cumulative_quadrature(&scalar(&samples), dt).unwrap();
            cum.iter()
                .enumerate()
                .map(|(i, c)| (c[0].re - (3.0 * i as f64 * dt).sin() / 3.0).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(20) / err(40);
        assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
    }

    #[test]
    fn partitions_cover_total() {
        assert_eq!(partition_intervals(10, 4).unwrap(), vec![4, 3, 3]);
        assert_eq!(partition_intervals(64, 64).unwrap(), vec![64]);
        assert!(partition_intervals(2, 64).is_err());
        let parts = partition_intervals(1001, 64).unwrap();
        assert_eq!(parts.iter().sum::<usize>(), 1001);
        assert!(parts.iter().all(|&m| (3..=64).contains(&m)));
    }

    #[test]
    fn zero_source_is_free_evolution() {
        let spec = LatticeSpec::new(1, 16, 1.0).unwrap();
        let disp = Dispersion::new(spec, LinearFlow::KleinGordon);
        let y0 = crate::random::FieldRng::new(4).complex_field(spec, 1.0);
        let zero = |y: &[Complex64]| vec![Complex64::default(); y.len()];
        let control = PicardControl { tol: 1e-14, max_iter: 5 };
        let sol = solve_windows(&disp, &zero, &y0, 0.05, &[8, 8], control).unwrap();
        assert_eq!(sol.iterations, vec![1, 1]);
        let last = sol.states.last().unwrap();
        let exact = disp.evolve(&y0, 0.8).unwrap();
        assert!(last.sub(&exact).unwrap().sup_norm() < 1e-13);
        assert!((sol.times[16] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn linear_damping_source_matches_exponential() {
        // y' = -iωy - γ y has solution e^{-γ t} P(t) y0.
        let spec = LatticeSpec::new(1, 8, 1.0).unwrap();
        let disp = Dispersion::new(spec, LinearFlow::Schrodinger);
        let y0 = crate::random::FieldRng::new(8).complex_field(spec, 1.0);
        let gamma = 0.7;
        let damping = move |y: &[Complex64]| {
            let mut s: Vec<Complex64> = y.iter().map(|z| -gamma * z).collect();
            forward_in_place(&spec, &mut s);
            s
        };
        let control = PicardControl { tol: 1e-13, max_iter: 60 };
        let sol = solve_windows(&disp, &damping, &y0, 0.01, &[40, 40], control).unwrap();
        let t = 0.8;
        let exact = disp.evolve(&y0, t).unwrap().scaled((-gamma * t).exp());
        let err = sol.states.last().unwrap().sub(&exact).unwrap().sup_norm();
        assert!(err < 1e-9, "err {err}");
        assert!(sol.residual <= 1e-12);
    }

    #[test]
    fn exhausted_iterations_report_non_contraction() {
        let spec = LatticeSpec::new(1, 8, 1.0).unwrap();
        let disp = Dispersion::new(spec, LinearFlow::Schrodinger);
        let y0 = Field::constant(spec, Complex64::new(1.0, 0.0));
        let growth = move |y: &[Complex64]| {
            let mut s: Vec<Complex64> = y.iter().map(|z| 50.0 * z).collect();
            forward_in_place(&spec, &mut s);
            s
        };
        let control = PicardControl { tol: 1e-12, max_iter: 3 };
        let err = solve_windows(&disp, &growth, &y0, 0.1, &[10], control).unwrap_err();
        assert!(matches!(err, Error::NonContraction { iterations: 3, .. }));
    }
}
