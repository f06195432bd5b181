//! Single runs: `simulate` and `blowup`.

use std::path::Path;

use lattice_flow::dkg::{
    blowup_monitor, decomposition_experiment, energy, linear_kg_solve, negative_energy_seed, run_kg,
    BlowupReport, KgParams, KgRunOptions, KgState, KgTrajectory,
};
use lattice_flow::dnls::{run_dnls, DnlsIntegrator, DnlsParams, DnlsRun};
use lattice_flow::io::read_field_csv;
use lattice_flow::potentials::{generate, validate_blowup_assumption, validate_kg_defocusing};
use lattice_flow::random::FieldRng;
use lattice_flow::spectral::{Dispersion, LinearFlow};
use lattice_flow::bounds::{envelope_rate, flow_claim};
use lattice_flow::{BoundReport, Exponent, Field, LatticeSpec, Param, RealField};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::artifacts::{self, Table};
use crate::config::{InitialData, Integrator, Model, RunConfig};
use crate::CliError;

/// What a run produced, before it is written out.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trajectory: Table,
    pub reports: Vec<BoundReport>,
    pub blowup: Option<BlowupSummary>,
    pub seeds: Value,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(BoundReport::ok) && self.blowup.as_ref().is_none_or(|b| b.passed())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ControlRun {
    pub horizon: f64,
    pub diverged: bool,
    pub t_diverged: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlowupSummary {
    #[serde(flatten)]
    pub report: BlowupReport,
    pub control: Option<ControlRun>,
}

impl BlowupSummary {
    pub fn passed(&self) -> bool {
        self.report.passed && self.control.as_ref().is_none_or(|c| !c.diverged)
    }
}

fn cadence_steps(cadence: f64, tau: f64) -> Result<usize, CliError> {
    let k = (cadence / tau).round();
    if k < 1.0 || (k * tau - cadence).abs() > 1e-9 * cadence {
        return Err(CliError::Config(format!(
            "cadence {cadence} is not a whole number of steps of size {tau}"
        )));
    }
    Ok(k as usize)
}

fn gaussian(spec: LatticeSpec, width: f64, amplitude: f64) -> Field {
    let center = spec.n() as f64 / 2.0;
    Field::from_fn(spec, |idx| {
        let r2: f64 = spec
            .coords(idx)
            .iter()
            .map(|&c| {
                let x = (c as f64 - center) * spec.h();
                x * x
            })
            .sum();
        Complex64::new(amplitude * (-0.5 * r2 / (width * width)).exp(), 0.0)
    })
}

/// Initial data as one complex field; for `dkg` this is `u + i ∂_t u`.
fn initial_field(
    cfg: &RunConfig,
    seed: Option<u64>,
    base: Option<&Path>,
    kg: Option<&KgParams>,
) -> Result<Field, CliError> {
    let spec = cfg.lattice;
    Ok(match &cfg.initial {
        InitialData::Delta { amplitude } => Field::delta(spec, Complex64::new(*amplitude, 0.0)),
        InitialData::Gaussian { width, amplitude } => gaussian(spec, *width, *amplitude),
        InitialData::Random { seed: s, amplitude } => {
            FieldRng::new(seed.unwrap_or(*s)).complex_field(spec, *amplitude)
        }
        InitialData::File { path } => {
            let full = artifacts::resolve(base, path);
            let text = std::fs::read_to_string(&full)
                .map_err(|e| CliError::Io(format!("{}: {e}", full.display())))?;
            let f = read_field_csv(&text)?;
            if *f.spec() != spec {
                return Err(CliError::Config(format!(
                    "initial data lives on {}, config lattice is {spec}",
                    f.spec()
                )));
            }
            f
        }
        InitialData::NegativeEnergySeed => {
            let params = kg.ok_or_else(|| CliError::Config("negative_energy_seed needs model dkg".into()))?;
            let (f, g) = negative_energy_seed(params)?;
            Field::from_values(
                spec,
                f.values().iter().zip(g.values()).map(|(&a, &b)| Complex64::new(a, b)).collect(),
            )?
        }
    })
}

fn seeds_of(cfg: &RunConfig, seed: Option<u64>) -> Value {
    let initial = match &cfg.initial {
        InitialData::Random { seed: s, .. } => json!(seed.unwrap_or(*s)),
        _ => Value::Null,
    };
    let potential = match &cfg.params.potential {
        lattice_flow::potentials::PotentialSpec::IidUniform { seed, .. } => json!(seed),
        _ => Value::Null,
    };
    json!({ "initial": initial, "potential": potential })
}

fn norm_header(prefix: &str, p_list: &[Exponent]) -> Vec<String> {
    p_list.iter().map(|p| format!("{prefix}_p{p}")).collect()
}

/// Run one configuration. `seed` overrides the seed of random initial data.
pub fn simulate(cfg: &RunConfig, seed: Option<u64>, base: Option<&Path>) -> Result<RunOutcome, CliError> {
    cfg.validate()?;
    let spec = cfg.lattice;
    let potential = generate(&cfg.params.potential, spec)?;
    let seeds = seeds_of(cfg, seed);
    match cfg.model {
        Model::Dnls => run_dnls_model(cfg, seed, base, potential, seeds),
        Model::Dkg => run_dkg_model(cfg, seed, base, potential, seeds, false),
        Model::LinearSchrodinger | Model::LinearKg => run_linear_model(cfg, seed, base, potential, seeds),
    }
}

/// Blow-up campaign: focusing `dkg` with negative energy, adaptive stepping,
/// monitor and defocusing control.
pub fn blowup(cfg: &RunConfig, seed: Option<u64>, base: Option<&Path>) -> Result<RunOutcome, CliError> {
    cfg.validate()?;
    if cfg.model != Model::Dkg || cfg.params.lambda != -1.0 {
        return Err(CliError::Config("blowup needs model dkg with lambda = -1".into()));
    }
    let potential = generate(&cfg.params.potential, cfg.lattice)?;
    let seeds = seeds_of(cfg, seed);
    run_dkg_model(cfg, seed, base, potential, seeds, true)
}

fn run_dnls_model(
    cfg: &RunConfig,
    seed: Option<u64>,
    base: Option<&Path>,
    potential: RealField,
    seeds: Value,
) -> Result<RunOutcome, CliError> {
    let params = DnlsParams::new(cfg.params.sigma, cfg.params.lambda, potential)?;
    let u0 = initial_field(cfg, seed, base, None)?;
    let integrator = match cfg.integrator {
        Integrator::Strang { tau } => DnlsIntegrator::Strang { tau },
        Integrator::Picard { tau, tol, max_iter } => DnlsIntegrator::Picard { tau, tol, max_iter },
        _ => unreachable!("validated"),
    };
    let run = DnlsRun {
        params,
        u0,
        integrator,
        horizon: cfg.horizon,
        cadence: cfg.diagnostics.cadence,
        p_list: cfg.diagnostics.p_list.clone(),
    };
    let traj = run_dnls(&run)?;
    let p_list = &run.p_list;
    let mut header = vec!["t".to_string()];
    header.extend(norm_header("norm", p_list));
    header.extend(norm_header("bound", p_list));
    header.push("diverged".into());
    let mut table = Table::new(header);
    for s in &traj.samples {
        let mut row = vec![s.t];
        row.extend(&s.norms);
        row.extend(traj.initial_norms.iter().map(|b| b * traj.envelope(s.t)));
        table.push(&row, Some(s.diverged));
    }
    let reports = vec![
        traj.a_priori_report(cfg.diagnostics.tolerance),
        traj.global_existence_report(),
        traj.sharp_envelope_measurement(),
    ];
    Ok(RunOutcome {
        trajectory: table,
        reports,
        blowup: None,
        seeds,
    })
}

fn kg_table(traj: &KgTrajectory, overflow: f64) -> Table {
    let header = ["t", "l2_u", "l2_v", "energy", "I", "Iprime", "linf_u", "diverged"];
    let mut table = Table::new(header.iter().map(|s| s.to_string()).collect());
    for s in &traj.samples {
        let over = !(s.linf_u.is_finite() && s.linf_u <= overflow);
        table.push(&[s.t, s.l2_u, s.l2_v, s.energy, s.i, s.i_prime, s.linf_u], Some(over));
    }
    table
}

fn run_dkg_model(
    cfg: &RunConfig,
    seed: Option<u64>,
    base: Option<&Path>,
    potential: RealField,
    seeds: Value,
    force_blowup: bool,
) -> Result<RunOutcome, CliError> {
    let spec = cfg.lattice;
    let params = KgParams::new(cfg.params.sigma, cfg.params.lambda, potential.clone())?;
    let data = initial_field(cfg, seed, base, Some(&params))?;
    let initial = KgState::new(data.re(), data.im())?;
    let Integrator::Verlet { tau, adaptive } = cfg.integrator else {
        unreachable!("validated")
    };
    let e0 = energy(&initial, &params)?;
    let focusing = cfg.params.lambda == -1.0;
    let blowup_mode = focusing && (force_blowup || (e0 < 0.0 && validate_blowup_assumption(&potential)));
    if force_blowup {
        if !(e0 < 0.0) {
            return Err(lattice_flow::Error::Precondition(format!("initial energy must be negative, got {e0}")).into());
        }
        if !validate_blowup_assumption(&potential) {
            return Err(lattice_flow::Error::Precondition(
                "potential must be bounded below by a positive constant".into(),
            )
            .into());
        }
    }
    if !focusing {
        let check = validate_kg_defocusing(&potential, spec.h());
        if !check.ok {
            return Err(lattice_flow::Error::Precondition(format!(
                "defocusing runs need inf(h²V + 2d) > 0, found δ0 = {}",
                check.delta0
            ))
            .into());
        }
    }
    let options = if blowup_mode && (adaptive || force_blowup) {
        KgRunOptions::blowup(tau, cfg.horizon)
    } else {
        KgRunOptions::fixed(tau, cfg.horizon, cadence_steps(cfg.diagnostics.cadence, tau)?)
    };
    let traj = run_kg(&initial, &params, options)?;
    let table = kg_table(&traj, options.overflow);
    let mut reports = Vec::new();
    let mut energy_report = traj.energy_report(cfg.diagnostics.tolerance);
    if traj.diverged {
        energy_report.enforced = false;
        energy_report = energy_report.note("not enforced: the run reached the overflow level");
    }
    reports.push(energy_report);
    let mut summary = None;
    if blowup_mode {
        let report = blowup_monitor(&traj, &params, e0, cfg.diagnostics.slack)?;
        let mut virial = BoundReport::ratio_check("lemma-4.3", 0.0)
            .param("min_margin", report.virial_min_margin)
            .param("violations", report.virial_violations)
            .note("worst_ratio is max(-margin / tol_fd); concavity of I^(-sigma/2) enforced separately");
        virial.observe(report.virial_worst_ratio, [("samples", Param::from(traj.samples.len()))]);
        let mut concave = BoundReport::ratio_check("thm-1.6", cfg.diagnostics.slack)
            .param("concavity_max", report.concavity_max)
            .param("concavity_violations", report.concavity_violations)
            .note("worst_ratio is T_num / T_pred");
        match (report.t_num, report.t_pred) {
            (Some(tn), Some(tp)) => concave.observe(tn / tp, [("T_num", tn), ("T_pred", tp)]),
            _ => concave.observe(f64::INFINITY, [("T_num", Param::from("none"))]),
        }
        concave.passed = concave.passed && report.concavity_violations == 0;
        reports.push(virial);
        reports.push(concave);
        let control = match (cfg.diagnostics.control_run, report.t_pred) {
            (true, Some(t_pred)) => {
                let calm = KgParams::new(cfg.params.sigma, 1.0, potential.clone())?;
                let step = cfg.diagnostics.control_tau.unwrap_or(0.1 * spec.h());
                let steps = (5.0 * t_pred / step).ceil();
                let horizon = steps * step;
                let every = (steps as usize / 1000).max(1);
                let run = run_kg(&initial, &calm, KgRunOptions::fixed(step, horizon, every))?;
                let mut global = BoundReport::ratio_check("thm-1.5", 0.0)
                    .param("horizon", horizon)
                    .param("tau", step)
                    .note("defocusing control with the blow-up data");
                global.observe(if run.diverged { f64::INFINITY } else { 0.0 }, [("t", horizon)]);
                reports.push(global);
                Some(ControlRun {
                    horizon,
                    diverged: run.diverged,
                    t_diverged: run.t_diverged,
                })
            }
            _ => None,
        };
        summary = Some(BlowupSummary { report, control });
    } else if !focusing {
        let mut global = BoundReport::ratio_check("thm-1.5", 0.0).param("h", spec.h());
        let t_end = traj.samples.last().map_or(0.0, |s| s.t);
        global.observe(if traj.diverged { f64::INFINITY } else { 0.0 }, [("t", t_end)]);
        if cfg.diagnostics.decomposition {
            let every = cadence_steps(cfg.diagnostics.cadence, tau)?;
            let dec = decomposition_experiment(&initial.u, &initial.v, &params, cfg.horizon, tau, every)?;
            reports.extend(dec.bound_reports(spec.h()));
        } else {
            reports.push(global);
        }
    }
    Ok(RunOutcome {
        trajectory: table,
        reports,
        blowup: summary,
        seeds,
    })
}

fn run_linear_model(
    cfg: &RunConfig,
    seed: Option<u64>,
    base: Option<&Path>,
    potential: RealField,
    seeds: Value,
) -> Result<RunOutcome, CliError> {
    let spec = cfg.lattice;
    let data = initial_field(cfg, seed, base, None)?;
    let p_list = &cfg.diagnostics.p_list;
    let cadence = cfg.diagnostics.cadence;
    let samples = (cfg.horizon / cadence).round() as usize;
    if ((samples as f64) * cadence - cfg.horizon).abs() > 1e-9 * cfg.horizon {
        return Err(CliError::Config("horizon must be a whole number of cadence intervals".into()));
    }
    let mut reports = Vec::new();
    let table = match (cfg.model, &cfg.integrator) {
        (Model::LinearKg, Integrator::Duhamel { tau }) => {
            let every = cadence_steps(cadence, *tau)?;
            let sol = linear_kg_solve(&data.re(), &data.im(), &potential, cfg.horizon, *tau)?;
            let mut header = vec!["t".to_string()];
            header.extend(norm_header("pair_norm", p_list));
            let mut table = Table::new(header);
            for (k, s) in sol.states.iter().enumerate() {
                if k % every != 0 {
                    continue;
                }
                let mut row = vec![s.t];
                row.extend(p_list.iter().map(|&p| s.u.norm(p) + s.v.norm(p)));
                table.push(&row, None);
            }
            reports.push(sol.growth_report(p_list));
            table
        }
        (model, _) => {
            let flow = if model == Model::LinearKg {
                LinearFlow::KleinGordon
            } else {
                LinearFlow::Schrodinger
            };
            let dispersion = Dispersion::new(spec, flow);
            let mut report = BoundReport::ratio_check(flow_claim(flow), cfg.diagnostics.tolerance)
                .param("d", spec.dim())
                .param("h", spec.h());
            let mut header = vec!["t".to_string()];
            header.extend(norm_header("norm", p_list));
            header.extend(norm_header("bound", p_list));
            let mut table = Table::new(header);
            let base_norms: Vec<f64> = p_list.iter().map(|&p| data.norm(p)).collect();
            for k in 0..=samples {
                let t = k as f64 * cadence;
                let u = dispersion.evolve(&data, t)?;
                let norms: Vec<f64> = p_list.iter().map(|&p| u.norm(p)).collect();
                let bounds: Vec<f64> = p_list
                    .iter()
                    .zip(&base_norms)
                    .map(|(&p, b)| b * (envelope_rate(flow, &spec, p) * t).exp())
                    .collect();
                for ((&p, n), b) in p_list.iter().zip(&norms).zip(&bounds) {
                    if *b > 0.0 {
                        report.observe(n / b, [("t", Param::from(t)), ("p", Param::from(p))]);
                    }
                }
                let mut row = vec![t];
                row.extend(norms);
                row.extend(bounds);
                table.push(&row, None);
            }
            reports.push(report);
            table
        }
    };
    Ok(RunOutcome {
        trajectory: table,
        reports,
        blowup: None,
        seeds,
    })
}

/// Write the artifacts of a finished run into `dir`.
pub fn write_outcome(dir: &Path, command: &str, cfg: &RunConfig, outcome: &RunOutcome) -> Result<(), CliError> {
    artifacts::ensure_dir(dir)?;
    artifacts::write_text(&dir.join(artifacts::TRAJECTORY_FILE), &outcome.trajectory.render())?;
    artifacts::write_json(&dir.join(artifacts::REPORTS_FILE), &outcome.reports)?;
    if let Some(b) = &outcome.blowup {
        artifacts::write_json(&dir.join(artifacts::BLOWUP_FILE), b)?;
    }
    let echo = serde_json::to_value(cfg).map_err(|e| CliError::Io(e.to_string()))?;
    let meta = artifacts::metadata(command, &echo, outcome.seeds.clone(), outcome.passed());
    artifacts::write_json(&dir.join(artifacts::METADATA_FILE), &meta)
}
