//! Parameter sweeps. Points run on a rayon pool; results come back in input
//! order, so the merged artifacts do not depend on scheduling.

use std::path::Path;

use lattice_flow::bounds::{
    bessel_growth_report, bessel_kernel, growth_point, kernel_record, kernel_sweep_report, radius_for,
    GrowthPoint, KernelRecord,
};
use lattice_flow::io::write_kernel_csv;
use lattice_flow::spectral::LinearFlow;
use lattice_flow::{BoundReport, Exponent, LatticeSpec};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::artifacts;
use crate::config::{GrowthSweepConfig, KernelSweepConfig, SweepFlow};
use crate::CliError;

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Io(format!("cannot start worker pool: {e}")))
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthSummaryRow {
    pub flow: SweepFlow,
    pub d: usize,
    pub n: usize,
    pub h: f64,
    pub p: Exponent,
    pub worst_ratio: f64,
    pub min_ratio: f64,
    pub envelope_rate: f64,
    pub empirical_rate: f64,
    pub delta_rate: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct GrowthSweepOutcome {
    pub rows: Vec<GrowthSummaryRow>,
    pub reports: Vec<BoundReport>,
    pub bessel: Vec<BoundReport>,
}

impl GrowthSweepOutcome {
    pub fn passed(&self) -> bool {
        self.reports.iter().chain(&self.bessel).all(BoundReport::ok)
    }
}

pub fn growth_sweep(cfg: &GrowthSweepConfig, seed: Option<u64>, jobs: Option<usize>) -> Result<GrowthSweepOutcome, CliError> {
    cfg.validate()?;
    let seed = seed.unwrap_or(cfg.seed);
    let t_grid = cfg.t_grid.points();
    let mut points = Vec::new();
    for &flow in &cfg.flows {
        for (&d, &n) in cfg.dims.iter().zip(&cfg.n) {
            for &h in &cfg.h_list {
                points.push((flow, LatticeSpec::new(d, n, h)?));
            }
        }
    }
    let workers = pool(jobs)?;
    let results: Vec<Result<Vec<lattice_flow::bounds::GrowthRow>, CliError>> = workers.install(|| {
        points
            .par_iter()
            .map(|&(flow, spec)| {
                let point = GrowthPoint {
                    flow: match flow {
                        SweepFlow::Schrodinger => LinearFlow::Schrodinger,
                        SweepFlow::Kg => LinearFlow::KleinGordon,
                    },
                    spec,
                    p_list: cfg.p_list.clone(),
                    t_grid: t_grid.clone(),
                    trials: cfg.trials,
                    seed,
                    include_delta: true,
                };
                growth_point(&point).map_err(CliError::from)
            })
            .collect()
    });
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for ((flow, spec), result) in points.iter().zip(results) {
        for row in result? {
            let rate = match row.report.parameters.get("envelope_rate") {
                Some(lattice_flow::Param::Num(x)) => *x,
                _ => f64::NAN,
            };
            rows.push(GrowthSummaryRow {
                flow: *flow,
                d: spec.dim(),
                n: spec.n(),
                h: spec.h(),
                p: row.p,
                worst_ratio: row.report.worst_ratio,
                min_ratio: row.min_ratio,
                envelope_rate: rate,
                empirical_rate: row.empirical_rate,
                delta_rate: row.delta_rate,
                passed: row.report.passed,
            });
            reports.push(row.report);
        }
    }
    let mut bessel_points = Vec::new();
    for (&d, &n) in cfg.dims.iter().zip(&cfg.n) {
        for &h in &cfg.h_list {
            for &alpha in &cfg.bessel_alphas {
                bessel_points.push((LatticeSpec::new(d, n, h)?, alpha));
            }
        }
    }
    let bessel: Vec<Result<BoundReport, CliError>> = workers.install(|| {
        bessel_points
            .par_iter()
            .map(|&(spec, alpha)| {
                bessel_growth_report(spec, alpha, &cfg.p_list, cfg.trials, seed).map_err(CliError::from)
            })
            .collect()
    });
    let bessel = bessel.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(GrowthSweepOutcome { rows, reports, bessel })
}

pub fn write_growth(dir: &Path, cfg: &GrowthSweepConfig, seed: Option<u64>, out: &GrowthSweepOutcome) -> Result<(), CliError> {
    artifacts::ensure_dir(dir)?;
    let summary = json!({
        "schema_version": crate::config::SCHEMA_VERSION,
        "rows": out.rows,
        "bessel": out.bessel,
        "passed": out.passed(),
    });
    artifacts::write_json(&dir.join(artifacts::GROWTH_FILE), &summary)?;
    let all: Vec<&BoundReport> = out.reports.iter().chain(&out.bessel).collect();
    artifacts::write_json(&dir.join(artifacts::REPORTS_FILE), &all)?;
    let echo = serde_json::to_value(cfg).map_err(|e| CliError::Io(e.to_string()))?;
    let meta = artifacts::metadata("growth-sweep", &echo, json!({ "sweep": seed.unwrap_or(cfg.seed) }), out.passed());
    artifacts::write_json(&dir.join(artifacts::METADATA_FILE), &meta)
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelSweepEntry {
    pub d: usize,
    pub records: Vec<KernelRecord>,
    pub report: BoundReport,
    /// Some `h` needed a larger radius (outer-shell mass above 1%).
    pub inconclusive: bool,
}

#[derive(Debug, Clone)]
pub struct KernelSweepOutcome {
    pub alpha: f64,
    pub entries: Vec<KernelSweepEntry>,
    /// `(d, h, csv)` when kernel export was requested.
    pub kernels: Vec<(usize, f64, String)>,
}

impl KernelSweepOutcome {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.report.ok())
    }
}

pub fn kernel_sweep(cfg: &KernelSweepConfig, jobs: Option<usize>) -> Result<KernelSweepOutcome, CliError> {
    cfg.validate()?;
    let mut points = Vec::new();
    for (di, &d) in cfg.dims.iter().enumerate() {
        for &h in &cfg.h_list {
            let radius = cfg.radius.unwrap_or_else(|| radius_for(h, cfg.length_for(di)));
            points.push((d, h, radius));
        }
    }
    let workers = pool(jobs)?;
    let results: Vec<Result<(KernelRecord, Option<String>), CliError>> = workers.install(|| {
        points
            .par_iter()
            .map(|&(d, h, radius)| {
                let b = bessel_kernel(cfg.alpha, d, h, radius, cfg.quadrature_points)?;
                let csv = cfg.export_kernels.then(|| write_kernel_csv(&b));
                Ok((kernel_record(cfg.alpha, &b), csv))
            })
            .collect()
    });
    let mut entries = Vec::new();
    let mut kernels = Vec::new();
    let mut results = results.into_iter();
    for &d in &cfg.dims {
        let mut records = Vec::new();
        for &h in &cfg.h_list {
            let (record, csv) = results.next().expect("one result per point")?;
            if let Some(csv) = csv {
                kernels.push((d, h, csv));
            }
            records.push(record);
        }
        let report = kernel_sweep_report(cfg.alpha, d, &records, cfg.spread)?;
        let inconclusive = records
            .iter()
            .any(|r| r.tail_fraction > lattice_flow::kernel::TAIL_WARNING_FRACTION);
        entries.push(KernelSweepEntry {
            d,
            records,
            report,
            inconclusive,
        });
    }
    Ok(KernelSweepOutcome {
        alpha: cfg.alpha,
        entries,
        kernels,
    })
}

pub fn write_kernel(dir: &Path, cfg: &KernelSweepConfig, out: &KernelSweepOutcome) -> Result<(), CliError> {
    artifacts::ensure_dir(dir)?;
    let summary = json!({
        "schema_version": crate::config::SCHEMA_VERSION,
        "alpha": out.alpha,
        "sweeps": out.entries,
        "passed": out.passed(),
    });
    artifacts::write_json(&dir.join(artifacts::KERNEL_FILE), &summary)?;
    let reports: Vec<&BoundReport> = out.entries.iter().map(|e| &e.report).collect();
    artifacts::write_json(&dir.join(artifacts::REPORTS_FILE), &reports)?;
    for (d, h, csv) in &out.kernels {
        artifacts::write_text(&dir.join(format!("kernel_d{d}_h{h}.csv")), csv)?;
    }
    let echo = serde_json::to_value(cfg).map_err(|e| CliError::Io(e.to_string()))?;
    let meta = artifacts::metadata("kernel-sweep", &echo, serde_json::Value::Null, out.passed());
    artifacts::write_json(&dir.join(artifacts::METADATA_FILE), &meta)
}
