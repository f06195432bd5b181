//! Discrete nonlinear Schrödinger flow
//!
//! ```text
//! i u' - Δ_h u + V u + λ |u|^{2σ} u = 0 ,   i.e.   u' = -i Δ_h u + i (V + λ |u|^{2σ}) u .
//! ```
//!
//! The right-hand side splits into two exactly solvable pieces: the linear
//! lattice flow (diagonal in Fourier space) and a pointwise phase rotation
//! (diagonal in physical space, since `|u_n|` is constant along it). Both are
//! `l²` isometries and the rotation preserves every `l^p` norm.

use num_complex::Complex64;

use crate::duhamel::{solve_windows, DuhamelSolution, PicardControl};
use crate::error::{Error, Result};
use crate::fourier::forward_in_place;
use crate::lattice::{Exponent, Field, LatticeSpec, RealField};
use crate::report::{BoundReport, Param};
use crate::spectral::{Dispersion, LinearFlow};

/// `l^∞` level past which a trajectory is declared diverged.
pub const OVERFLOW_THRESHOLD: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct DnlsParams {
    sigma: f64,
    lambda: f64,
    potential: RealField,
}

impl DnlsParams {
    pub fn new(sigma: f64, lambda: f64, potential: RealField) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::Config(format!("nonlinearity power must be positive, got {sigma}")));
        }
        if lambda != 1.0 && lambda != -1.0 {
            return Err(Error::Config(format!("sign must be +1 or -1, got {lambda}")));
        }
        if !potential.is_finite() {
            return Err(Error::Config("potential has non-finite entries".into()));
        }
        Ok(DnlsParams {
            sigma,
            lambda,
            potential,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn potential(&self) -> &RealField {
        &self.potential
    }

    pub fn spec(&self) -> &LatticeSpec {
        self.potential.spec()
    }

    /// `|z|^{2σ}`, with `0^{2σ} = 0`.
    #[inline]
    fn power(&self, z: Complex64) -> f64 {
        let m2 = z.norm_sqr();
        if m2 == 0.0 {
            0.0
        } else if self.sigma == 1.0 {
            m2
        } else {
            m2.powf(self.sigma)
        }
    }

    fn check_lattice(&self, u: &Field) -> Result<()> {
        if u.spec() != self.spec() {
            return Err(Error::Shape(format!(
                "state on {} but potential on {}",
                u.spec(),
                self.spec()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DnlsState {
    pub t: f64,
    pub u: Field,
    pub diverged: bool,
}

impl DnlsState {
    pub fn new(u: Field) -> Self {
        let diverged = !is_bounded(&u);
        DnlsState { t: 0.0, u, diverged }
    }
}

fn is_bounded(u: &Field) -> bool {
    u.is_finite() && u.sup_norm() <= OVERFLOW_THRESHOLD
}

fn rotate_in_place(values: &mut [Complex64], tau: f64, params: &DnlsParams) {
    for (z, &v) in values.iter_mut().zip(params.potential.values()) {
        let angle = tau * (v + params.lambda * params.power(*z));
        *z *= Complex64::from_polar(1.0, angle);
    }
}

/// Exact flow of `u' = i (V + λ|u|^{2σ}) u` for time `τ`: each site turns by
/// `τ (V_n + λ |u_n|^{2σ})` and keeps its modulus.
pub fn pointwise_phase_flow(u: &Field, tau: f64, params: &DnlsParams) -> Result<Field> {
    params.check_lattice(u)?;
    let mut out = u.clone();
    rotate_in_place(out.values_mut(), tau, params);
    Ok(out)
}

/// Strang splitting with the two exact subflows. Reuses one dispersion table.
#[derive(Debug, Clone)]
pub struct StrangSplitting {
    params: DnlsParams,
    dispersion: Dispersion,
}

impl StrangSplitting {
    pub fn new(params: DnlsParams) -> Self {
        let dispersion = Dispersion::new(*params.spec(), LinearFlow::Schrodinger);
        StrangSplitting { params, dispersion }
    }

    pub fn params(&self) -> &DnlsParams {
        &self.params
    }

    /// `steps` Strang steps of size `τ`, fusing adjacent linear half steps.
    /// Diverged input is returned unchanged; divergence along the way stops
    /// the loop and flags the state.
    pub fn advance(&self, state: &DnlsState, tau: f64, steps: usize) -> Result<DnlsState> {
        if !tau.is_finite() {
            return Err(Error::Config(format!("step size must be finite, got {tau}")));
        }
        self.params.check_lattice(&state.u)?;
        if state.diverged || steps == 0 {
            return Ok(state.clone());
        }
        let spec = *self.params.spec();
        let half = self.dispersion.phases(0.5 * tau);
        let full = self.dispersion.phases(tau);
        let mut data = state.u.values().to_vec();
        forward_in_place(&spec, &mut data);
        apply_phases(&mut data, &half);
        let mut done = 0;
        let mut diverged = false;
        while done < steps {
            crate::fourier::inverse_in_place(&spec, &mut data);
            rotate_in_place(&mut data, tau, &self.params);
            done += 1;
            if data.iter().any(|z| !(z.re.is_finite() && z.im.is_finite()) || z.norm() > OVERFLOW_THRESHOLD) {
                diverged = true;
                break;
            }
            forward_in_place(&spec, &mut data);
            apply_phases(&mut data, if done == steps { &half } else { &full });
        }
        if !diverged {
            crate::fourier::inverse_in_place(&spec, &mut data);
        }
        Ok(DnlsState {
            t: state.t + done as f64 * tau,
            u: Field::from_values(spec, data)?,
            diverged,
        })
    }

    pub fn step(&self, state: &DnlsState, tau: f64) -> Result<DnlsState> {
        self.advance(state, tau, 1)
    }
}

fn apply_phases(data: &mut [Complex64], phases: &[Complex64]) {
    for (z, p) in data.iter_mut().zip(phases) {
        *z *= p;
    }
}

/// Half linear step, full pointwise step, half linear step.
pub fn strang_step(state: &DnlsState, tau: f64, params: &DnlsParams) -> Result<DnlsState> {
    StrangSplitting::new(params.clone()).step(state, tau)
}

/// Largest horizon on which the Duhamel map is a contraction of the ball of
/// radius `R = 2‖u0‖_{l²}`, using the Lipschitz bound
/// `||a|^{2σ}a - |b|^{2σ}b| ≤ (2σ+1) max(|a|,|b|)^{2σ} |a - b|`:
///
/// `e^{2dT/h²} ≤ 3/2`, `12 T ‖V‖_∞ ≤ 1`, `12 T (2σ+1) R^{2σ} ≤ 1`.
pub fn contraction_window(u0: &Field, params: &DnlsParams) -> f64 {
    let spec = params.spec();
    let h = spec.h();
    let d = spec.dim() as f64;
    let linear = h * h * 1.5f64.ln() / (2.0 * d);
    let v_sup = params.potential.sup_norm();
    let potential = if v_sup > 0.0 { 1.0 / (12.0 * v_sup) } else { f64::INFINITY };
    let radius = 2.0 * u0.norm(Exponent::Finite(2.0));
    let lip = (2.0 * params.sigma + 1.0) * radius.powf(2.0 * params.sigma);
    let nonlinear = if lip > 0.0 { 1.0 / (12.0 * lip) } else { f64::INFINITY };
    linear.min(potential).min(nonlinear)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Quadrature intervals per contraction window.
    pub nodes_per_window: usize,
    /// Optional cap on the quadrature step.
    pub max_dt: Option<f64>,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions {
            tol: 1e-13,
            max_iter: 200,
            nodes_per_window: 64,
            max_dt: None,
        }
    }
}

/// Picard iteration of the Duhamel map
/// `Φ(u)(t) = P(t) u0 + i ∫_0^t P(t - s) (V + λ|u|^{2σ}) u(s) ds`.
///
/// Horizons longer than [`contraction_window`] are split into equal windows.
pub fn picard_solve(
    u0: &Field,
    horizon: f64,
    params: &DnlsParams,
    tol: f64,
    max_iter: usize,
) -> Result<DuhamelSolution> {
    picard_solve_with(
        u0,
        horizon,
        params,
        PicardOptions {
            tol,
            max_iter,
            ..PicardOptions::default()
        },
    )
}

pub fn picard_solve_with(
    u0: &Field,
    horizon: f64,
    params: &DnlsParams,
    options: PicardOptions,
) -> Result<DuhamelSolution> {
    params.check_lattice(u0)?;
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::Config(format!("horizon must be positive, got {horizon}")));
    }
    if options.nodes_per_window < 3 {
        return Err(Error::Config("a window needs at least 3 quadrature intervals".into()));
    }
    let window = contraction_window(u0, params);
    let windows = (horizon / window).ceil().max(1.0) as usize;
    let per_window = horizon / windows as f64;
    let mut intervals = options.nodes_per_window;
    if let Some(max_dt) = options.max_dt {
        intervals = intervals.max((per_window / max_dt - 1e-9).ceil() as usize);
    }
    let dt = per_window / intervals as f64;
    let dispersion = Dispersion::new(*params.spec(), LinearFlow::Schrodinger);
    let spec = *params.spec();
    let source = |y: &[Complex64]| {
        let mut s: Vec<Complex64> = y
            .iter()
            .zip(params.potential.values())
            .map(|(&z, &v)| Complex64::new(0.0, v + params.lambda * params.power(z)) * z)
            .collect();
        forward_in_place(&spec, &mut s);
        s
    };
    let control = PicardControl {
        tol: options.tol,
        max_iter: options.max_iter,
    };
    solve_windows(&dispersion, &source, u0, dt, &vec![intervals; windows], control)
}

/// How a DNLS run advances in time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DnlsIntegrator {
    Strang { tau: f64 },
    /// Duhamel fixed point with quadrature step `tau`.
    Picard { tau: f64, tol: f64, max_iter: usize },
}

#[derive(Debug, Clone)]
pub struct DnlsRun {
    pub params: DnlsParams,
    pub u0: Field,
    pub integrator: DnlsIntegrator,
    pub horizon: f64,
    /// Time between recorded samples; a multiple of the step.
    pub cadence: f64,
    pub p_list: Vec<Exponent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DnlsSample {
    pub t: f64,
    /// `‖u(t)‖_p` in the order of the run's `p_list`.
    pub norms: Vec<f64>,
    pub diverged: bool,
}

#[derive(Debug, Clone)]
pub struct DnlsTrajectory {
    pub spec: LatticeSpec,
    pub p_list: Vec<Exponent>,
    pub initial_norms: Vec<f64>,
    pub samples: Vec<DnlsSample>,
    pub final_state: DnlsState,
    pub diverged: bool,
}

impl DnlsTrajectory {
    /// Growth envelope `e^{2d t/h²}` of the a priori bound.
    pub fn envelope(&self, t: f64) -> f64 {
        let h = self.spec.h();
        (2.0 * self.spec.dim() as f64 * t / (h * h)).exp()
    }

    /// `‖u(t)‖_p / (e^{2dt/h²} ‖u0‖_p)`; zero data gives ratio 0.
    pub fn bound_ratio(&self, sample: &DnlsSample, k: usize) -> f64 {
        let base = self.initial_norms[k];
        if base == 0.0 {
            return if sample.norms[k] == 0.0 { 0.0 } else { f64::INFINITY };
        }
        sample.norms[k] / (self.envelope(sample.t) * base)
    }

    /// `‖u(t)‖_p / ‖u0‖_p`.
    pub fn growth(&self, sample: &DnlsSample, k: usize) -> f64 {
        let base = self.initial_norms[k];
        if base == 0.0 {
            1.0
        } else {
            sample.norms[k] / base
        }
    }

    /// Check of the a priori envelope over every sample and every `p`.
    pub fn a_priori_report(&self, tolerance: f64) -> BoundReport {
        let mut report = BoundReport::ratio_check("lemma-3.1", tolerance)
            .param("d", self.spec.dim())
            .param("N", self.spec.n())
            .param("h", self.spec.h());
        for sample in &self.samples {
            for (k, &p) in self.p_list.iter().enumerate() {
                report.observe(self.bound_ratio(sample, k), [("t", Param::from(sample.t)), ("p", Param::from(p))]);
            }
        }
        if self.diverged {
            report.passed = false;
            report = report.note("trajectory diverged");
        }
        report
    }

    /// Measurement against the conjectured sharper envelope `e^{2d|1-2/p|t/h²}`,
    /// with the empirical exponent `max_t ln(‖u(t)‖_p/‖u0‖_p) h²/(2d t)` as the
    /// fitted constant (worst over `p`).
    pub fn sharp_envelope_measurement(&self) -> BoundReport {
        let h = self.spec.h();
        let d = self.spec.dim() as f64;
        let mut report = BoundReport::measurement("thm-1.3-remark")
            .param("d", self.spec.dim())
            .param("h", h);
        let mut exponent = 0.0_f64;
        for sample in &self.samples {
            for (k, &p) in self.p_list.iter().enumerate() {
                let growth = self.growth(sample, k);
                let envelope = (2.0 * d * p.interpolation_weight() * sample.t / (h * h)).exp();
                report.observe(growth / envelope, [("t", Param::from(sample.t)), ("p", Param::from(p))]);
                if sample.t > 0.0 && growth > 0.0 {
                    exponent = exponent.max(growth.ln() * h * h / (2.0 * d * sample.t));
                }
            }
        }
        report.fitted_constant = Some(exponent);
        report
    }

    /// Global well-posedness embodiment: the run must not diverge.
    pub fn global_existence_report(&self) -> BoundReport {
        let mut report = BoundReport::ratio_check("thm-1.3", 0.0)
            .param("d", self.spec.dim())
            .param("h", self.spec.h());
        let t_end = self.samples.last().map_or(0.0, |s| s.t);
        report.observe(if self.diverged { f64::INFINITY } else { 0.0 }, [("t", t_end)]);
        report
    }
}

fn steps_for(duration: f64, tau: f64, what: &str) -> Result<usize> {
    let steps = (duration / tau).round();
    if !(tau > 0.0) || steps < 1.0 || ((steps * tau - duration).abs() > 1e-9 * duration.max(1.0)) {
        return Err(Error::Config(format!(
            "{what} {duration} is not a whole number of steps of size {tau}"
        )));
    }
    Ok(steps as usize)
}

/// Integrate and record `l^p` norms at every cadence point.
pub fn run_dnls(run: &DnlsRun) -> Result<DnlsTrajectory> {
    run.params.check_lattice(&run.u0)?;
    if run.p_list.is_empty() {
        return Err(Error::Config("p-list is empty".into()));
    }
    let spec = *run.params.spec();
    let norms_of = |u: &Field| run.p_list.iter().map(|&p| u.norm(p)).collect::<Vec<_>>();
    let initial_norms = norms_of(&run.u0);
    let mut samples = vec![DnlsSample {
        t: 0.0,
        norms: initial_norms.clone(),
        diverged: false,
    }];
    let final_state = match run.integrator {
        DnlsIntegrator::Strang { tau } => {
            let per_sample = steps_for(run.cadence, tau, "cadence")?;
            let total = steps_for(run.horizon, tau, "horizon")?;
            if total % per_sample != 0 {
                return Err(Error::Config("horizon is not a whole number of cadence intervals".into()));
            }
            let scheme = StrangSplitting::new(run.params.clone());
            let mut state = DnlsState::new(run.u0.clone());
            for k in 1..=total / per_sample {
                state = scheme.advance(&state, tau, per_sample)?;
                // pin sample times to the step grid
                if !state.diverged {
                    state.t = (k * per_sample) as f64 * tau;
                }
                samples.push(DnlsSample {
                    t: state.t,
                    norms: norms_of(&state.u),
                    diverged: state.diverged,
                });
                if state.diverged {
                    break;
                }
            }
            state
        }
        DnlsIntegrator::Picard { tau, tol, max_iter } => {
            let per_sample = steps_for(run.cadence, tau, "cadence")?;
            let total = steps_for(run.horizon, tau, "horizon")?;
            let window = contraction_window(&run.u0, &run.params);
            let per_window = ((window / tau).floor() as usize).max(3);
            let parts = crate::duhamel::partition_intervals(total, per_window)?;
            let dispersion = Dispersion::new(spec, LinearFlow::Schrodinger);
            let params = &run.params;
            let source = |y: &[Complex64]| {
                let mut s: Vec<Complex64> = y
                    .iter()
                    .zip(params.potential.values())
                    .map(|(&z, &v)| Complex64::new(0.0, v + params.lambda * params.power(z)) * z)
                    .collect();
                forward_in_place(&spec, &mut s);
                s
            };
            let sol = solve_windows(
                &dispersion,
                &source,
                &run.u0,
                tau,
                &parts,
                PicardControl { tol, max_iter },
            )?;
            for (i, (t, u)) in sol.times.iter().zip(&sol.states).enumerate().skip(1) {
                if i % per_sample == 0 {
                    samples.push(DnlsSample {
                        t: *t,
                        norms: norms_of(u),
                        diverged: !is_bounded(u),
                    });
                }
            }
            let u = sol.states.last().expect("solution has nodes").clone();
            DnlsState {
                t: *sol.times.last().expect("solution has nodes"),
                diverged: !is_bounded(&u),
                u,
            }
        }
    };
    let diverged = samples.iter().any(|s| s.diverged);
    Ok(DnlsTrajectory {
        spec,
        p_list: run.p_list.clone(),
        initial_norms,
        samples,
        final_state,
        diverged,
    })
}
