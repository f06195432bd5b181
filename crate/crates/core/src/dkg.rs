//! Discrete Klein-Gordon flow
//!
//! ```text
//! ∂_t² u - Δ_h u + V u + λ |u|^{2σ} u = 0 ,   u(0) = f ,  ∂_t u(0) = g ,
//! ```
//!
//! with real `u`. Written with `v = ∂_t u`, the conserved energy is
//!
//! ```text
//! E = ½ Σ_n [ v_n² + h^{-2} Σ_j (u_{n+e_j} - u_n)² + V_n u_n² + λ/(σ+1) |u_n|^{2σ+2} ] .
//! ```
//!
//! The complex variable `ψ = A v - i u`, `A = (1 - Δ_h)^{-1/2}`, turns the
//! equation into `ψ' = -i √(1-Δ_h) ψ - A[(V - 1) u + λ |u|^{2σ} u]` with
//! `u = -Im ψ` and `v = Re(√(1-Δ_h) ψ)`.

use num_complex::Complex64;
use serde::Serialize;

use crate::duhamel::{partition_intervals, solve_windows, PicardControl};
use crate::error::{Error, Result};
use crate::fourier::forward_in_place;
use crate::lattice::{Exponent, Field, LatticeSpec, RealField};
use crate::potentials::{validate_blowup_assumption, validate_kg_defocusing};
use crate::report::{BoundReport, Param};
use crate::spectral::{bessel_power, discrete_laplacian, laplacian_symbol_values, Dispersion, LinearFlow};

/// `l^∞` level that counts as numerical blow-up.
pub const BLOWUP_THRESHOLD: f64 = 1e6;

/// Smallest step the adaptive integrator will take before giving up.
pub const TAU_MIN: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct KgParams {
    sigma: f64,
    lambda: f64,
    potential: RealField,
}

impl KgParams {
    pub fn new(sigma: f64, lambda: f64, potential: RealField) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::Config(format!("nonlinearity power must be nonnegative, got {sigma}")));
        }
        if lambda != 1.0 && lambda != -1.0 {
            return Err(Error::Config(format!("sign must be +1 or -1, got {lambda}")));
        }
        if !potential.is_finite() {
            return Err(Error::Config("potential has non-finite entries".into()));
        }
        Ok(KgParams {
            sigma,
            lambda,
            potential,
        })
    }

    /// The linear equation `∂_t² u - Δ_h u + V u = 0`.
    pub fn linear(potential: RealField) -> Result<Self> {
        if !potential.is_finite() {
            return Err(Error::Config("potential has non-finite entries".into()));
        }
        Ok(KgParams {
            sigma: 0.0,
            lambda: 0.0,
            potential,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `±1`, or `0` for the linear equation.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn potential(&self) -> &RealField {
        &self.potential
    }

    pub fn spec(&self) -> &LatticeSpec {
        self.potential.spec()
    }

    /// `|x|^{2σ}` with `0^{2σ} = 0` for `σ > 0` and `|x|^0 = 1`.
    #[inline]
    fn power(&self, x: f64) -> f64 {
        if self.sigma == 0.0 {
            1.0
        } else if x == 0.0 {
            0.0
        } else if self.sigma == 1.0 {
            x * x
        } else {
            x.abs().powf(2.0 * self.sigma)
        }
    }

    fn check(&self, f: &RealField) -> Result<()> {
        if f.spec() != self.spec() {
            return Err(Error::Shape(format!(
                "field on {} but potential on {}",
                f.spec(),
                self.spec()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KgState {
    pub t: f64,
    pub u: RealField,
    /// `∂_t u`.
    pub v: RealField,
}

impl KgState {
    pub fn new(u: RealField, v: RealField) -> Result<Self> {
        u.ensure_same_lattice(&v)?;
        Ok(KgState { t: 0.0, u, v })
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }
}

fn gradient_sum(u: &RealField) -> f64 {
    let spec = u.spec();
    let values = u.values();
    let mut acc = 0.0;
    for idx in 0..values.len() {
        for axis in 0..spec.dim() {
            let diff = values[spec.shift(idx, axis, 1)] - values[idx];
            acc += diff * diff;
        }
    }
    acc / (spec.h() * spec.h())
}

pub fn energy(state: &KgState, params: &KgParams) -> Result<f64> {
    params.check(&state.u)?;
    params.check(&state.v)?;
    let kinetic: f64 = state.v.values().iter().map(|v| v * v).sum();
    let mut potential = 0.0;
    let mut nonlinear = 0.0;
    for (&u, &vn) in state.u.values().iter().zip(params.potential.values()) {
        potential += vn * u * u;
        if params.lambda != 0.0 {
            nonlinear += params.power(u) * u * u;
        }
    }
    let nonlinear = if params.lambda == 0.0 {
        0.0
    } else {
        params.lambda / (params.sigma + 1.0) * nonlinear
    };
    Ok(0.5 * (kinetic + gradient_sum(&state.u) + potential + nonlinear))
}

/// `∂_t² u = Δ_h u - V u - λ |u|^{2σ} u`.
pub fn acceleration(u: &RealField, params: &KgParams) -> RealField {
    let lap = discrete_laplacian(u);
    RealField::from_fn(*u.spec(), |idx| {
        let x = u.values()[idx];
        let mut a = lap.values()[idx] - params.potential.values()[idx] * x;
        if params.lambda != 0.0 {
            a -= params.lambda * params.power(x) * x;
        }
        a
    })
}

/// `h / √(4d + h² sup V⁺ + h² (2σ+1) |λ| ‖u‖_∞^{2σ})`, the largest admissible
/// leapfrog step for data of size `‖u‖_∞`.
pub fn stability_limit(params: &KgParams, u: &RealField) -> f64 {
    let spec = params.spec();
    let h = spec.h();
    let v_max = params
        .potential
        .values()
        .iter()
        .copied()
        .fold(0.0_f64, f64::max);
    let stiffness = if params.lambda == 0.0 {
        0.0
    } else {
        (2.0 * params.sigma + 1.0) * params.power(u.sup_norm())
    };
    h / (4.0 * spec.dim() as f64 + h * h * (v_max + stiffness)).sqrt()
}

fn check_stability(params: &KgParams, state: &KgState, tau: f64) -> Result<()> {
    if !(tau.is_finite() && tau != 0.0) {
        return Err(Error::Config(format!("step size must be finite and nonzero, got {tau}")));
    }
    let limit = stability_limit(params, &state.u);
    if tau.abs() > limit {
        return Err(Error::Config(format!(
            "leapfrog step {} exceeds the stability limit {limit:.6e}",
            tau.abs()
        )));
    }
    Ok(())
}

/// Kick-drift-kick leapfrog.
#[derive(Debug, Clone)]
pub struct Verlet {
    params: KgParams,
}

impl Verlet {
    pub fn new(params: KgParams) -> Self {
        Verlet { params }
    }

    pub fn params(&self) -> &KgParams {
        &self.params
    }

    /// One step with a precomputed `a(u)`; returns the new state and `a(u_new)`.
    fn step_with(&self, state: &KgState, acc: &RealField, tau: f64) -> (KgState, RealField) {
        let half = 0.5 * tau;
        let v_half: Vec<f64> = state
            .v
            .values()
            .iter()
            .zip(acc.values())
            .map(|(v, a)| v + half * a)
            .collect();
        let u_new = RealField::from_fn(*state.u.spec(), |i| state.u.values()[i] + tau * v_half[i]);
        let acc_new = acceleration(&u_new, &self.params);
        let v_new = RealField::from_fn(*state.u.spec(), |i| v_half[i] + half * acc_new.values()[i]);
        (
            KgState {
                t: state.t + tau,
                u: u_new,
                v: v_new,
            },
            acc_new,
        )
    }

    pub fn step(&self, state: &KgState, tau: f64) -> KgState {
        let acc = acceleration(&state.u, &self.params);
        self.step_with(state, &acc, tau).0
    }
}

/// One leapfrog step; rejects steps above [`stability_limit`].
pub fn verlet_step(state: &KgState, tau: f64, params: &KgParams) -> Result<KgState> {
    params.check(&state.u)?;
    params.check(&state.v)?;
    check_stability(params, state, tau)?;
    Ok(Verlet::new(params.clone()).step(state, tau))
}

/// `(I, I') = (Σ u_n², 2 Σ u_n v_n)`.
pub fn blowup_functional(state: &KgState) -> (f64, f64) {
    let i: f64 = state.u.values().iter().map(|u| u * u).sum();
    let ip: f64 = state
        .u
        .values()
        .iter()
        .zip(state.v.values())
        .map(|(u, v)| u * v)
        .sum();
    (i, 2.0 * ip)
}

/// Scalar diagnostics of one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KgSample {
    pub t: f64,
    /// Step in use when the sample was taken.
    pub tau: f64,
    pub l2_u: f64,
    pub l2_v: f64,
    pub energy: f64,
    #[serde(rename = "I")]
    pub i: f64,
    #[serde(rename = "Iprime")]
    pub i_prime: f64,
    /// `I''' = 6 Σ v a + 2 Σ u ȧ`, with `ȧ = Δ_h v - V v - λ(2σ+1)|u|^{2σ} v`.
    #[serde(rename = "Ithird")]
    pub i_third: f64,
    /// `Σ v_n²`.
    pub kinetic: f64,
    pub linf_u: f64,
}

pub fn sample(state: &KgState, params: &KgParams, tau: f64) -> Result<KgSample> {
    let (i, i_prime) = blowup_functional(state);
    let acc = acceleration(&state.u, params);
    let lap_v = discrete_laplacian(&state.v);
    let mut i_third = 0.0;
    for idx in 0..state.u.len() {
        let u = state.u.values()[idx];
        let v = state.v.values()[idx];
        let mut jerk = lap_v.values()[idx] - params.potential.values()[idx] * v;
        if params.lambda != 0.0 {
            jerk -= params.lambda * (2.0 * params.sigma + 1.0) * params.power(u) * v;
        }
        i_third += 6.0 * v * acc.values()[idx] + 2.0 * u * jerk;
    }
    let kinetic: f64 = state.v.values().iter().map(|v| v * v).sum();
    Ok(KgSample {
        t: state.t,
        tau,
        l2_u: i.sqrt(),
        l2_v: kinetic.sqrt(),
        energy: energy(state, params)?,
        i,
        i_prime,
        i_third,
        kinetic,
        linf_u: state.u.sup_norm(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KgRunOptions {
    pub tau: f64,
    pub horizon: f64,
    /// Record a sample every this many steps (ignored when adaptive).
    pub cadence_steps: usize,
    /// Halve the step each time `‖u‖_∞` doubles and sample every step.
    pub adaptive: bool,
    pub tau_min: f64,
    /// `l^∞` level that ends the run as diverged.
    pub overflow: f64,
}

impl KgRunOptions {
    pub fn fixed(tau: f64, horizon: f64, cadence_steps: usize) -> Self {
        KgRunOptions {
            tau,
            horizon,
            cadence_steps,
            adaptive: false,
            tau_min: TAU_MIN,
            overflow: crate::dnls::OVERFLOW_THRESHOLD,
        }
    }

    pub fn blowup(tau: f64, horizon: f64) -> Self {
        KgRunOptions {
            tau,
            horizon,
            cadence_steps: 1,
            adaptive: true,
            tau_min: TAU_MIN,
            overflow: BLOWUP_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KgTrajectory {
    pub samples: Vec<KgSample>,
    pub final_state: KgState,
    pub diverged: bool,
    /// Time of the first sample past the overflow level.
    pub t_diverged: Option<f64>,
}

impl KgTrajectory {
    pub fn initial_energy(&self) -> f64 {
        self.samples[0].energy
    }

    /// `max_t |E(t) - E(0)| / |E(0)|`.
    pub fn relative_energy_drift(&self) -> f64 {
        let e0 = self.initial_energy();
        let scale = if e0 != 0.0 { e0.abs() } else { 1.0 };
        self.samples
            .iter()
            .map(|s| (s.energy - e0).abs() / scale)
            .fold(0.0, f64::max)
    }

    pub fn energy_report(&self, tolerance: f64) -> BoundReport {
        let e0 = self.initial_energy();
        let scale = if e0 != 0.0 { e0.abs() } else { 1.0 };
        let mut report = BoundReport::ratio_check("kg-energy", tolerance)
            .param("E0", e0)
            .note("ratio is 1 + relative energy drift");
        for s in &self.samples {
            report.observe(1.0 + (s.energy - e0).abs() / scale, [("t", s.t)]);
        }
        report
    }
}

fn steps_for(duration: f64, tau: f64) -> Result<usize> {
    let steps = (duration / tau).round();
    if !(tau > 0.0) || steps < 1.0 || (steps * tau - duration).abs() > 1e-9 * duration.max(1.0) {
        return Err(Error::Config(format!(
            "horizon {duration} is not a whole number of steps of size {tau}"
        )));
    }
    Ok(steps as usize)
}

fn overflowed(state: &KgState, level: f64) -> bool {
    !state.is_finite() || state.u.sup_norm() > level
}

/// Leapfrog integration with diagnostics.
pub fn run_kg(initial: &KgState, params: &KgParams, options: KgRunOptions) -> Result<KgTrajectory> {
    params.check(&initial.u)?;
    params.check(&initial.v)?;
    check_stability(params, initial, options.tau)?;
    let scheme = Verlet::new(params.clone());
    let mut state = initial.clone();
    let mut acc = acceleration(&state.u, params);
    let mut samples = vec![sample(&state, params, options.tau)?];
    let mut t_diverged = None;
    if options.adaptive {
        let mut tau = options.tau;
        let mut level = state.u.sup_norm().max(f64::MIN_POSITIVE);
        let mut elapsed = 0.0;
        while elapsed < options.horizon * (1.0 - 1e-12) {
            let step = tau.min(options.horizon - elapsed);
            let (next, next_acc) = scheme.step_with(&state, &acc, step);
            state = next;
            acc = next_acc;
            elapsed += step;
            if overflowed(&state, options.overflow) {
                samples.push(sample(&state, params, step)?);
                t_diverged = Some(state.t);
                break;
            }
            samples.push(sample(&state, params, step)?);
            let linf = state.u.sup_norm();
            while linf >= 2.0 * level {
                level *= 2.0;
                tau *= 0.5;
            }
            if tau < options.tau_min {
                t_diverged = Some(state.t);
                break;
            }
        }
    } else {
        if options.cadence_steps == 0 {
            return Err(Error::Config("sample cadence must be at least one step".into()));
        }
        let total = steps_for(options.horizon, options.tau)?;
        for k in 1..=total {
            let (next, next_acc) = scheme.step_with(&state, &acc, options.tau);
            state = next;
            acc = next_acc;
            state.t = k as f64 * options.tau;
            let blown = overflowed(&state, options.overflow);
            if k % options.cadence_steps == 0 || k == total || blown {
                samples.push(sample(&state, params, options.tau)?);
            }
            if blown {
                t_diverged = Some(state.t);
                break;
            }
        }
    }
    Ok(KgTrajectory {
        samples,
        final_state: state,
        diverged: t_diverged.is_some(),
        t_diverged,
    })
}

/// ψ-representation of a Klein-Gordon state.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiState {
    pub t: f64,
    pub psi: Field,
}

/// `ψ = (1 - Δ_h)^{-1/2} v - i u`. The real part is taken from a real
/// transform, so `Im ψ = -u` holds exactly.
pub fn psi_transform(state: &KgState) -> Result<PsiState> {
    state.u.ensure_same_lattice(&state.v)?;
    let av = bessel_power(&state.v.to_complex(), -0.5)?;
    let psi = Field::from_fn(*state.u.spec(), |i| {
        Complex64::new(av.values()[i].re, -state.u.values()[i])
    });
    Ok(PsiState { t: state.t, psi })
}

/// `u = -Im ψ`, `v = Re((1 - Δ_h)^{1/2} ψ)`.
pub fn psi_inverse(psi: &PsiState) -> Result<KgState> {
    let u = psi.psi.im().scaled(-1.0);
    let v = bessel_power(&psi.psi, 0.5)?.re();
    Ok(KgState { t: psi.t, u, v })
}

#[derive(Debug, Clone)]
pub struct LinearKgSolution {
    pub times: Vec<f64>,
    pub states: Vec<KgState>,
    pub iterations: Vec<usize>,
    pub residual: f64,
}

/// Linear equation `∂_t² v - Δ_h v + V v = 0` through the ψ Duhamel formula
///
/// ```text
/// ψ(t) = e^{-it√(1-Δ_h)} ψ0 + ∫_0^t e^{-i(t-s)√(1-Δ_h)} (1-Δ_h)^{-1/2} [(1 - V) v](s) ds ,
/// ```
///
/// solved by Picard iteration with quadrature step `τ`, windowed so that each
/// window is a contraction.
pub fn linear_kg_solve(
    f: &RealField,
    g: &RealField,
    potential: &RealField,
    horizon: f64,
    tau: f64,
) -> Result<LinearKgSolution> {
    f.ensure_same_lattice(g)?;
    f.ensure_same_lattice(potential)?;
    let spec = *f.spec();
    let total = steps_for(horizon, tau)?;
    let coupling: Vec<f64> = potential.values().iter().map(|v| 1.0 - v).collect();
    let lip = coupling.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    let per_window = if lip > 0.0 {
        ((0.25 / lip / tau).floor() as usize).max(3)
    } else {
        total
    };
    let parts = partition_intervals(total, per_window)?;
    let resolvent: Vec<f64> = laplacian_symbol_values(&spec)
        .into_iter()
        .map(|s| (1.0 + s).powf(-0.5))
        .collect();
    let source = |y: &[Complex64]| {
        let mut s: Vec<Complex64> = y
            .iter()
            .zip(&coupling)
            .map(|(z, c)| Complex64::new(-c * z.im, 0.0))
            .collect();
        forward_in_place(&spec, &mut s);
        for (z, a) in s.iter_mut().zip(&resolvent) {
            *z *= a;
        }
        s
    };
    let initial = KgState {
        t: 0.0,
        u: f.clone(),
        v: g.clone(),
    };
    let psi0 = psi_transform(&initial)?;
    let dispersion = Dispersion::new(spec, LinearFlow::KleinGordon);
    let scale = psi0.psi.norm(Exponent::Finite(2.0)).max(1.0);
    let control = PicardControl {
        tol: 1e-13 * scale,
        max_iter: 200,
    };
    let sol = solve_windows(&dispersion, &source, &psi0.psi, tau, &parts, control)?;
    let mut states = Vec::with_capacity(sol.states.len());
    states.push(initial);
    for (t, psi) in sol.times.iter().zip(&sol.states).skip(1) {
        states.push(psi_inverse(&PsiState { t: *t, psi: psi.clone() })?);
    }
    Ok(LinearKgSolution {
        times: sol.times,
        states,
        iterations: sol.iterations,
        residual: sol.residual,
    })
}

/// Smallest `C ≥ 0` with `ratio(t) ≤ C h^{-1} e^{C h^{-1} t}` at every sample.
pub fn fit_linear_growth_constant(samples: &[(f64, f64)], h: f64) -> f64 {
    let holds = |c: f64| samples.iter().all(|&(t, r)| r <= c / h * (c * t / h).exp());
    let mut hi = 1.0;
    while !holds(hi) {
        hi *= 2.0;
        if hi > 1e12 {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

impl LinearKgSolution {
    /// Measured `‖(v, ∂_t v)‖_{l^p × l^p} / ‖(f, g)‖` for each `p` (pair norm is
    /// the sum of the two component norms), with the fitted constant of the
    /// linear growth envelope `C h^{-1} e^{C h^{-1} t}`.
    pub fn growth_report(&self, p_list: &[Exponent]) -> BoundReport {
        let spec = *self.states[0].u.spec();
        let h = spec.h();
        let pair = |s: &KgState, p: Exponent| s.u.norm(p) + s.v.norm(p);
        let mut report = BoundReport::measurement("lemma-4.1")
            .param("d", spec.dim())
            .param("h", h)
            .note("worst_ratio is the largest pair-norm growth factor");
        let mut points = Vec::new();
        for &p in p_list {
            let base = pair(&self.states[0], p);
            if base == 0.0 {
                continue;
            }
            for s in &self.states {
                let r = pair(s, p) / base;
                report.observe(r, [("t", Param::from(s.t)), ("p", Param::from(p))]);
                points.push((s.t, r));
            }
        }
        report.fitted_constant = Some(fit_linear_growth_constant(&points, h));
        report
    }
}

/// Outcome of the focusing blow-up checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupReport {
    #[serde(rename = "E0")]
    pub e0: f64,
    pub t1: Option<f64>,
    #[serde(rename = "I_t1")]
    pub i_t1: Option<f64>,
    #[serde(rename = "Iprime_t1")]
    pub iprime_t1: Option<f64>,
    #[serde(rename = "T_pred")]
    pub t_pred: Option<f64>,
    #[serde(rename = "T_num")]
    pub t_num: Option<f64>,
    /// Smallest `t + (2/σ) I/I'` over the samples with `I' > 0`; informational.
    #[serde(rename = "T_pred_min")]
    pub t_pred_min: Option<f64>,
    /// `min_i [I''_i - (4+2σ) Σv² + (4+4σ) E0]` over interior samples.
    pub virial_min_margin: f64,
    /// Samples where the margin fell below `-tol_fd`.
    pub virial_violations: usize,
    /// `max_i (-margin_i / tol_fd_i)`; at most 1 when the check passes.
    pub virial_worst_ratio: f64,
    /// Largest `Δ²y / |y|` of `y = I^{-σ/2}` after `t1`.
    pub concavity_max: f64,
    pub concavity_violations: usize,
    pub slack: f64,
    pub passed: bool,
}

/// Second derivative from three possibly unevenly spaced samples.
fn second_derivative(t: [f64; 3], y: [f64; 3]) -> f64 {
    let left = (y[1] - y[0]) / (t[1] - t[0]);
    let right = (y[2] - y[1]) / (t[2] - t[1]);
    2.0 * (right - left) / (t[2] - t[0])
}

/// Check the virial inequality and the concavity of `I^{-σ/2}` along a
/// focusing trajectory, and compare the overflow time with the upper bound
/// `T_pred = t1 + (2/σ) I(t1)/I'(t1)`.
///
/// `I''` comes from second differences of the sampled `I`. The tolerance at
/// each sample is the local truncation budget `|Δ₊ - Δ₋| |I'''|/3 +
/// max(Δ)² |I''''|/12` (doubled) plus a roundoff allowance.
pub fn blowup_monitor(
    trajectory: &KgTrajectory,
    params: &KgParams,
    e0: f64,
    slack: f64,
) -> Result<BlowupReport> {
    if params.lambda != -1.0 {
        return Err(Error::Precondition("blow-up monitor needs the focusing sign".into()));
    }
    if !(e0 < 0.0) {
        return Err(Error::Precondition(format!("initial energy must be negative, got {e0}")));
    }
    if !validate_blowup_assumption(&params.potential) {
        return Err(Error::Precondition("potential must be bounded below by a positive constant".into()));
    }
    let sigma = params.sigma;
    let s = &trajectory.samples;
    // only samples below the overflow level enter the checks
    let valid = s
        .iter()
        .position(|x| !(x.linf_u.is_finite() && x.linf_u <= BLOWUP_THRESHOLD && x.i.is_finite()))
        .unwrap_or(s.len());
    let mut min_margin = f64::INFINITY;
    let mut worst_ratio = f64::NEG_INFINITY;
    let mut violations = 0;
    for i in 1..valid.saturating_sub(1) {
        let t = [s[i - 1].t, s[i].t, s[i + 1].t];
        let ipp = second_derivative(t, [s[i - 1].i, s[i].i, s[i + 1].i]);
        let margin = ipp - (4.0 + 2.0 * sigma) * s[i].kinetic + (4.0 + 4.0 * sigma) * e0;
        let (dm, dp) = (t[1] - t[0], t[2] - t[1]);
        let i4 = (s[i + 1].i_third - s[i - 1].i_third) / (t[2] - t[0]);
        let scale = s[i - 1].i.abs().max(s[i].i.abs()).max(s[i + 1].i.abs());
        let tol = 2.0 * ((dp - dm).abs() / 3.0 * s[i].i_third.abs() + dm.max(dp).powi(2) / 12.0 * i4.abs())
            + 16.0 * f64::EPSILON * scale / (dm * dp);
        min_margin = min_margin.min(margin);
        worst_ratio = worst_ratio.max(-margin / tol);
        if margin < -tol {
            violations += 1;
        }
    }
    let first = s[..valid].iter().find(|x| x.i_prime > 0.0 && x.i > 0.0);
    let (t1, i_t1, iprime_t1, t_pred) = match first {
        Some(x) => (
            Some(x.t),
            Some(x.i),
            Some(x.i_prime),
            Some(x.t + 2.0 / sigma * x.i / x.i_prime),
        ),
        None => (None, None, None, None),
    };
    let t_pred_min = s[..valid]
        .iter()
        .filter(|x| x.i_prime > 0.0 && x.i > 0.0)
        .map(|x| x.t + 2.0 / sigma * x.i / x.i_prime)
        .reduce(f64::min);
    let mut concavity_max = f64::NEG_INFINITY;
    let mut concavity_violations = 0;
    if let Some(t1) = t1 {
        let y: Vec<f64> = s[..valid].iter().map(|x| x.i.powf(-0.5 * sigma)).collect();
        for i in 1..valid.saturating_sub(1) {
            if s[i - 1].t < t1 {
                continue;
            }
            let t = [s[i - 1].t, s[i].t, s[i + 1].t];
            let spacing = 0.5 * (t[2] - t[0]);
            let d2 = second_derivative(t, [y[i - 1], y[i], y[i + 1]]) * spacing * spacing;
            let rel = d2 / y[i].abs();
            concavity_max = concavity_max.max(rel);
            if rel > 1e-8 {
                concavity_violations += 1;
            }
        }
    }
    let t_num = s
        .iter()
        .find(|x| !(x.linf_u.is_finite() && x.linf_u <= BLOWUP_THRESHOLD))
        .map(|x| x.t)
        .or(trajectory.t_diverged);
    let within = matches!((t_num, t_pred), (Some(tn), Some(tp)) if tn <= tp * (1.0 + slack));
    Ok(BlowupReport {
        e0,
        t1,
        i_t1,
        iprime_t1,
        t_pred,
        t_num,
        t_pred_min,
        virial_min_margin: min_margin,
        virial_violations: violations,
        virial_worst_ratio: worst_ratio,
        concavity_max,
        concavity_violations,
        slack,
        passed: within && violations == 0 && concavity_violations == 0,
    })
}

/// Single-site focusing data with negative energy: `g = 0`,
/// `f = A δ_0`, `A = [2(σ+1)(V_0 + 2d h^{-2})]^{1/(2σ)}`, so that
/// `E(f, 0) = -½ A² (V_0 + 2d h^{-2})`.
pub fn negative_energy_seed(params: &KgParams) -> Result<(RealField, RealField)> {
    if params.lambda != -1.0 {
        return Err(Error::Precondition("negative-energy data needs the focusing sign".into()));
    }
    if !(params.sigma > 0.0) {
        return Err(Error::Precondition("negative-energy data needs σ > 0".into()));
    }
    if !validate_blowup_assumption(&params.potential) {
        return Err(Error::Precondition("potential must be bounded below by a positive constant".into()));
    }
    let spec = *params.spec();
    let h = spec.h();
    let v0 = params.potential.values()[0];
    let base = v0 + 2.0 * spec.dim() as f64 / (h * h);
    let amplitude = (2.0 * (params.sigma + 1.0) * base).powf(1.0 / (2.0 * params.sigma));
    let f = RealField::delta(spec, amplitude);
    let g = RealField::zeros(spec);
    let state = KgState::new(f.clone(), g.clone())?;
    let e = energy(&state, params)?;
    let predicted = -0.5 * amplitude * amplitude * base;
    if !(e < 0.0) || (e - predicted).abs() > 1e-9 * predicted.abs() {
        return Err(Error::Internal(format!(
            "seed energy {e} does not match the predicted {predicted}"
        )));
    }
    Ok((f, g))
}

/// `Ẽ = Σ [ (V_n + 2d h^{-2}) w_n²/2 + (∂_t w_n)²/2 + |u_n|^{2σ+2}/(2σ+2) ]`.
pub fn modified_energy(w: &RealField, wt: &RealField, u: &RealField, params: &KgParams) -> f64 {
    let spec = u.spec();
    let shift = 2.0 * spec.dim() as f64 / (spec.h() * spec.h());
    let mut quadratic = 0.0;
    for ((w, wt), v) in w.values().iter().zip(wt.values()).zip(params.potential.values()) {
        quadratic += (v + shift) * w * w / 2.0 + wt * wt / 2.0;
    }
    quadratic + nonlinear_part(u, params)
}

fn nonlinear_part(u: &RealField, params: &KgParams) -> f64 {
    let exponent = 2.0 * params.sigma + 2.0;
    u.values()
        .iter()
        .map(|x| params.power(*x) * x * x)
        .sum::<f64>()
        / exponent
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModifiedEnergySample {
    pub t: f64,
    pub modified_energy: f64,
    /// `‖(u, ∂_t u)‖_{l² × l²}`.
    pub l2_pair: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModifiedEnergyReport {
    pub e_tilde0: f64,
    /// `Σ |f_n|^{2σ+2} / (2σ+2)`.
    pub e_tilde0_identity: f64,
    pub identity_error: f64,
    pub delta0: f64,
    pub samples: Vec<ModifiedEnergySample>,
    /// `max_{t>0} ln(Ẽ(t)/Ẽ(0)) / t`.
    pub growth_rate: f64,
    /// Smallest `C` with `‖(u,∂_t u)(t)‖ ≤ e^{C h^{-2} t} ‖(f,g)‖` on the samples.
    pub l2_growth_constant: f64,
    pub finite: bool,
    pub diverged: bool,
}

impl ModifiedEnergyReport {
    pub fn bound_reports(&self, h: f64) -> Vec<BoundReport> {
        let mut modified = BoundReport::measurement("prop-4.2")
            .param("delta0", self.delta0)
            .note("fitted_constant is the exponential growth rate of the modified energy");
        let mut growth = BoundReport::measurement("lemma-2.6")
            .param("h", h)
            .note("fitted_constant is C in exp(C t / h^2)");
        let e0 = self.e_tilde0;
        let l0 = self.samples.first().map_or(0.0, |s| s.l2_pair);
        for s in &self.samples {
            if e0 > 0.0 {
                modified.observe(s.modified_energy / e0, [("t", s.t)]);
            }
            if l0 > 0.0 {
                growth.observe(s.l2_pair / l0, [("t", s.t)]);
            }
        }
        modified.fitted_constant = Some(self.growth_rate);
        growth.fitted_constant = Some(self.l2_growth_constant);
        let mut global = BoundReport::ratio_check("thm-1.5", 0.0).param("delta0", self.delta0);
        let t_end = self.samples.last().map_or(0.0, |s| s.t);
        global.observe(
            if self.finite && !self.diverged { 0.0 } else { f64::INFINITY },
            [("t", t_end)],
        );
        vec![modified, growth, global]
    }
}

/// Split the defocusing solution `u` into the linear evolution `v` of the same
/// data and the remainder `w = u - v`, and track the modified energy of `w`.
pub fn decomposition_experiment(
    f: &RealField,
    g: &RealField,
    params: &KgParams,
    horizon: f64,
    tau: f64,
    cadence_steps: usize,
) -> Result<ModifiedEnergyReport> {
    if params.lambda != 1.0 {
        return Err(Error::Precondition("decomposition needs the defocusing sign".into()));
    }
    let check = validate_kg_defocusing(&params.potential, params.spec().h());
    if !check.ok {
        return Err(Error::Precondition(format!(
            "potential violates inf(h²V + 2d) > 0 (δ0 = {})",
            check.delta0
        )));
    }
    let initial = KgState::new(f.clone(), g.clone())?;
    params.check(f)?;
    check_stability(params, &initial, tau)?;
    let total = steps_for(horizon, tau)?;
    if cadence_steps == 0 {
        return Err(Error::Config("sample cadence must be at least one step".into()));
    }
    let linear = linear_kg_solve(f, g, &params.potential, horizon, tau)?;
    let scheme = Verlet::new(params.clone());
    let h = params.spec().h();
    let pair = |s: &KgState| (s.u.norm(Exponent::Finite(2.0)).powi(2) + s.v.norm(Exponent::Finite(2.0)).powi(2)).sqrt();
    let record = |s: &KgState, lin: &KgState| -> Result<ModifiedEnergySample> {
        let w = s.u.sub(&lin.u)?;
        let wt = s.v.sub(&lin.v)?;
        Ok(ModifiedEnergySample {
            t: s.t,
            modified_energy: modified_energy(&w, &wt, &s.u, params),
            l2_pair: pair(s),
        })
    };
    let mut samples = vec![record(&initial, &linear.states[0])?];
    let mut state = initial.clone();
    let mut acc = acceleration(&state.u, params);
    let mut diverged = false;
    for k in 1..=total {
        let (next, next_acc) = scheme.step_with(&state, &acc, tau);
        state = next;
        acc = next_acc;
        state.t = k as f64 * tau;
        if overflowed(&state, crate::dnls::OVERFLOW_THRESHOLD) {
            diverged = true;
        }
        if k % cadence_steps == 0 || k == total || diverged {
            samples.push(record(&state, &linear.states[k])?);
        }
        if diverged {
            break;
        }
    }
    let e_tilde0 = samples[0].modified_energy;
    let identity = nonlinear_part(f, params);
    let mut growth_rate = 0.0_f64;
    let mut l2c = 0.0_f64;
    let l0 = samples[0].l2_pair;
    for s in samples.iter().skip(1) {
        if e_tilde0 > 0.0 && s.modified_energy > 0.0 {
            growth_rate = growth_rate.max((s.modified_energy / e_tilde0).ln() / s.t);
        }
        if l0 > 0.0 {
            l2c = l2c.max((s.l2_pair / l0).ln() * h * h / s.t);
        }
    }
    let finite = samples
        .iter()
        .all(|s| s.modified_energy.is_finite() && s.l2_pair.is_finite());
    Ok(ModifiedEnergyReport {
        e_tilde0,
        e_tilde0_identity: identity,
        identity_error: (e_tilde0 - identity).abs(),
        delta0: check.delta0,
        samples,
        growth_rate,
        l2_growth_constant: l2c,
        finite,
        diverged,
    })
}
