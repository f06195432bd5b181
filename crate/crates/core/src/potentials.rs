//! Bounded real potentials `V_n` and the standing assumptions on them.
//!
//! On a periodic truncation a quasiperiodic potential is only an
//! approximation: the sampled sequence repeats with period `N` no matter how
//! irrational the frequency is.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LatticeSpec, RealField};
use crate::random::FieldRng;

/// Declarative description of a potential. Serialized with a `kind` tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Zero,
    Constant {
        value: f64,
    },
    /// `V_k = pattern[(k_1 + … + k_d) mod L]`.
    Periodic {
        pattern: Vec<f64>,
    },
    /// I.i.d. uniform entries in `[lo, hi)`.
    IidUniform {
        lo: f64,
        hi: f64,
        seed: u64,
    },
    /// `V_k = A cos(2π Σ_j (θ_j + k_j α_j))`.
    Quasiperiodic {
        amplitude: f64,
        phase: Vec<f64>,
        frequency: Vec<f64>,
    },
}

impl PotentialSpec {
    /// Analytic bound on `sup |V_n|` implied by the description.
    pub fn sup_bound(&self) -> f64 {
        match self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::Constant { value } => value.abs(),
            PotentialSpec::Periodic { pattern } => {
                pattern.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
            }
            PotentialSpec::IidUniform { lo, hi, .. } => lo.abs().max(hi.abs()),
            PotentialSpec::Quasiperiodic { amplitude, .. } => amplitude.abs(),
        }
    }

    fn validate(&self, lat: &LatticeSpec) -> Result<()> {
        let finite = |x: f64, what: &str| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("potential {what} must be finite, got {x}")))
            }
        };
        match self {
            PotentialSpec::Zero => Ok(()),
            PotentialSpec::Constant { value } => finite(*value, "value"),
            PotentialSpec::Periodic { pattern } => {
                if pattern.is_empty() {
                    return Err(Error::Config("periodic pattern is empty".into()));
                }
                if !lat.n().is_multiple_of(pattern.len()) {
                    return Err(Error::Config(format!(
                        "periodic pattern length {} does not divide N = {}",
                        pattern.len(),
                        lat.n()
                    )));
                }
                pattern.iter().try_for_each(|&v| finite(v, "pattern entry"))
            }
            PotentialSpec::IidUniform { lo, hi, .. } => {
                finite(*lo, "lower bound")?;
                finite(*hi, "upper bound")?;
                if lo > hi {
                    return Err(Error::Config(format!("iid_uniform needs lo <= hi, got [{lo}, {hi})")));
                }
                Ok(())
            }
            PotentialSpec::Quasiperiodic {
                amplitude,
                phase,
                frequency,
            } => {
                finite(*amplitude, "amplitude")?;
                if phase.len() != lat.dim() || frequency.len() != lat.dim() {
                    return Err(Error::Config(format!(
                        "quasiperiodic phase and frequency need {} components, got {} and {}",
                        lat.dim(),
                        phase.len(),
                        frequency.len()
                    )));
                }
                phase
                    .iter()
                    .chain(frequency)
                    .try_for_each(|&v| finite(v, "phase/frequency"))
            }
        }
    }
}

/// Sample the potential on `lat`. Deterministic in `(spec, lat)`.
pub fn generate(spec: &PotentialSpec, lat: LatticeSpec) -> Result<RealField> {
    spec.validate(&lat)?;
    Ok(match spec {
        PotentialSpec::Zero => RealField::zeros(lat),
        PotentialSpec::Constant { value } => RealField::constant(lat, *value),
        PotentialSpec::Periodic { pattern } => {
            let len = pattern.len();
            RealField::from_fn(lat, |idx| {
                let sum: usize = lat.coords(idx).iter().sum();
                pattern[sum % len]
            })
        }
        PotentialSpec::IidUniform { lo, hi, seed } => {
            FieldRng::new(*seed).uniform_field(lat, *lo, *hi)
        }
        PotentialSpec::Quasiperiodic {
            amplitude,
            phase,
            frequency,
        } => RealField::from_fn(lat, |idx| {
            let arg: f64 = lat
                .coords(idx)
                .iter()
                .zip(phase.iter().zip(frequency))
                .map(|(&k, (&theta, &alpha))| theta + k as f64 * alpha)
                .sum();
            amplitude * (2.0 * std::f64::consts::PI * arg).cos()
        }),
    })
}

/// Outcome of the defocusing Klein-Gordon assumption `inf_n (h² V_n + 2d) > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DefocusingCheck {
    pub ok: bool,
    /// Largest admissible `δ0 = min_n h² V_n + 2d`.
    pub delta0: f64,
}

pub fn validate_kg_defocusing(v: &RealField, h: f64) -> DefocusingCheck {
    let d = v.spec().dim() as f64;
    let min_v = v.values().iter().copied().fold(f64::INFINITY, f64::min);
    let delta0 = h * h * min_v + 2.0 * d;
    DefocusingCheck {
        ok: delta0 > 0.0,
        delta0,
    }
}

/// `inf_n V_n > 0`, required for the blow-up argument.
pub fn validate_blowup_assumption(v: &RealField) -> bool {
    v.values().iter().copied().fold(f64::INFINITY, f64::min) > 0.0
}
