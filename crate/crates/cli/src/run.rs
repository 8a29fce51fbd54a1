//! Turn a validated configuration into tables.

use dephasing::decoherence::{dephasing_time, ContinuumOptions, DecoherenceModel, DecoherencePoint};
use dephasing::fidelity::{chi_discrete, dynamical_fidelity, lambda_phase, theta_phase, BasisPair};
use dephasing::register::{DifferenceVector, QubitLayout, StateFamily};
use dephasing::reservoir::{DiscreteModeSet, Mode, OccupationDensity, SpectralDensity};
use dephasing::scaling::{ScalingReport, ScalingThresholds};
use dephasing::susceptibility::{susceptibility_curve, susceptibility_histogram, SusceptibilityMethod};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{
    Command, ConfigError, Method, ModeSpec, OccupationSpec, Preset, ReservoirSpec, RunConfig, StateSpec, TimeSpec,
};
use crate::presets;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error(transparent)]
    Compute(#[from] dephasing::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl RunError {
    /// 2 for numerical failures, 1 for everything the user can fix.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Compute(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Config(e) => e.kind(),
            RunError::UnknownPreset(_) => "unknown-preset",
            RunError::Compute(e) if e.is_numerical() => "quadrature-failure",
            RunError::Compute(_) => "invalid-input",
            RunError::Io { .. } => "io-error",
            RunError::Usage(_) => "usage-error",
        }
    }

    /// Machine-readable form written to stderr.
    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        });
        if let RunError::Config(e) = self {
            v["issues"] = serde_json::to_value(e.issues()).expect("issues serialize");
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(usize),
    Float(f64),
}

impl Cell {
    /// Integers verbatim, floats with 17 significant digits.
    pub fn render(&self) -> String {
        match *self {
            Cell::Int(n) => n.to_string(),
            Cell::Float(x) => format!("{x:.16e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

/// One CSV file; `suffix` distinguishes the curves of a figure.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub suffix: Option<String>,
    pub table: Table,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub outputs: Vec<Output>,
    pub summary: Value,
}

pub fn execute(cfg: &RunConfig) -> Result<RunResult, RunError> {
    match cfg.command {
        Command::Susceptibility => susceptibility(cfg),
        Command::Decoherence => decoherence(cfg),
        Command::Sweep => size_sweep(cfg),
        Command::Fidelity => fidelity(cfg),
        Command::Histogram => histogram(cfg),
        Command::Figure => figure(cfg.preset.expect("validated"), cfg.tolerance),
    }
}

/// Configuration of each curve of a preset, with the run tolerance applied.
pub fn preset_configs(preset: Preset, tolerance: f64) -> Result<Vec<(String, RunConfig)>, RunError> {
    presets::expand(preset)
        .into_iter()
        .map(|s| {
            let cfg = RunConfig::parse_with_overrides(&s.config, &[("tolerance", tolerance.to_string())])?;
            Ok((s.suffix, cfg))
        })
        .collect()
}

fn figure(preset: Preset, tolerance: f64) -> Result<RunResult, RunError> {
    let mut outputs = Vec::new();
    let mut summary = serde_json::Map::new();
    for (suffix, cfg) in preset_configs(preset, tolerance)? {
        let result = execute(&cfg)?;
        for out in result.outputs {
            outputs.push(Output {
                suffix: Some(suffix.clone()),
                table: out.table,
            });
        }
        summary.insert(
            suffix,
            json!({ "config": cfg.entries(), "summary": result.summary }),
        );
    }
    Ok(RunResult {
        outputs,
        summary: json!({ "preset": preset.name(), "series": summary }),
    })
}

fn single(table: Table, summary: Value) -> RunResult {
    RunResult {
        outputs: vec![Output { suffix: None, table }],
        summary,
    }
}

fn difference(cfg: &RunConfig, len: usize) -> Result<DifferenceVector, RunError> {
    Ok(match cfg.state.as_ref().expect("validated") {
        StateSpec::Family(f) => f.difference(len)?,
        StateSpec::Explicit(d) => DifferenceVector::new(d.clone())?,
    })
}

fn layout(cfg: &RunConfig, len: usize) -> Result<QubitLayout, RunError> {
    Ok(QubitLayout::linear_array(len, cfg.spacing)?)
}

fn susceptibility(cfg: &RunConfig) -> Result<RunResult, RunError> {
    let len = cfg.sizes[0];
    let d = difference(cfg, len)?;
    let method = match cfg.method {
        Method::Direct => SusceptibilityMethod::Direct,
        Method::ClosedForm => SusceptibilityMethod::ClosedForm,
        _ => SusceptibilityMethod::Fourier,
    };
    let k = cfg.k.as_ref().expect("validated").values();
    let curve = susceptibility_curve(&d, &layout(cfg, len)?, &k, method)?;
    let rows = curve
        .k_grid
        .iter()
        .zip(&curve.values)
        .map(|(&k, &g)| vec![Cell::Float(k), Cell::Float(g)])
        .collect();
    Ok(single(
        Table {
            header: vec!["k", "gamma"],
            rows,
        },
        json!({ "method": method.name(), "L": len }),
    ))
}

fn modes(specs: &[ModeSpec]) -> Result<DiscreteModeSet, RunError> {
    Ok(DiscreteModeSet::new(
        specs
            .iter()
            .map(|m| Mode {
                k: vec![m.k],
                omega: m.omega,
                coupling: Complex64::new(m.coupling_re, m.coupling_im),
                occupation: m.occupation,
            })
            .collect(),
    )?)
}

/// The engine a decoherence run uses.
pub fn model(cfg: &RunConfig) -> Result<DecoherenceModel, RunError> {
    let reservoir = cfg.reservoir.as_ref().expect("validated");
    if let ReservoirSpec::Discrete(specs) = reservoir {
        return Ok(DecoherenceModel::Discrete(modes(specs)?));
    }
    if let ReservoirSpec::Ohmic { alpha, dim, omega_c } = *reservoir {
        let closed = match cfg.method {
            Method::ClosedForm => true,
            Method::Auto => cfg.occupation == OccupationSpec::Vacuum && cfg.solid_angle == 1.0,
            _ => false,
        };
        if closed {
            return Ok(DecoherenceModel::ClosedForm {
                dim,
                alpha,
                cutoff: omega_c,
            });
        }
    }
    let spectral = match *reservoir {
        ReservoirSpec::Ohmic { alpha, dim, omega_c } => SpectralDensity::ohmic(alpha, dim, omega_c)?,
        ReservoirSpec::BandLimited { alpha, omega_max } => SpectralDensity::band_limited(alpha, omega_max)?,
        ReservoirSpec::Discrete(_) => unreachable!("handled above"),
    };
    let occupation = match cfg.occupation {
        OccupationSpec::Vacuum => OccupationDensity::Vacuum,
        OccupationSpec::Thermal { temperature } => OccupationDensity::thermal(temperature)?,
        OccupationSpec::Gaussian { center, width, total } => OccupationDensity::gaussian(center, width, total)?,
        OccupationSpec::Delta { center, total } => OccupationDensity::delta(center, total)?,
    };
    Ok(DecoherenceModel::Quadrature {
        spectral,
        occupation,
        solid_angle_factor: cfg.solid_angle,
        options: ContinuumOptions {
            rel_tol: cfg.tolerance,
            max_evaluations: cfg.max_evaluations,
        },
    })
}

fn point_cells(p: &DecoherencePoint) -> [Cell; 3] {
    [Cell::Float(p.vacuum), Cell::Float(p.excitation), Cell::Float(p.total())]
}

fn decoherence(cfg: &RunConfig) -> Result<RunResult, RunError> {
    let len = cfg.sizes[0];
    let d = difference(cfg, len)?;
    let layout = layout(cfg, len)?;
    let model = model(cfg)?;
    let Some(TimeSpec::Grid(grid)) = &cfg.times else {
        unreachable!("validated")
    };
    let times = grid.values();
    let series = model.series(&d, &layout, &times)?;
    let rows = (0..series.times.len())
        .map(|i| {
            vec![
                Cell::Float(series.times[i]),
                Cell::Float(series.gamma_vac[i]),
                Cell::Float(series.gamma_ex[i]),
                Cell::Float(series.gamma_total[i]),
            ]
        })
        .collect();
    let t_deph = dephasing_time(&series, |t| Ok(model.evaluate(&d, &layout, t)?.total()))?;
    Ok(single(
        Table {
            header: vec!["t", "gamma_vac", "gamma_ex", "gamma_total"],
            rows,
        },
        json!({
            "method": model.method().name(),
            "solid_angle_factor": model.solid_angle_factor(),
            "dephasing_time": t_deph,
        }),
    ))
}

fn size_sweep(cfg: &RunConfig) -> Result<RunResult, RunError> {
    let model = model(cfg)?;
    let observable = cfg.times.clone().expect("validated");
    let points = cfg
        .sizes
        .par_iter()
        .map(|&len| {
            let d = difference(cfg, len)?;
            let layout = layout(cfg, len)?;
            Ok(match &observable {
                TimeSpec::LeadingOrder => model.leading_coefficient(&d, &layout)?,
                TimeSpec::Grid(g) => model.evaluate(&d, &layout, g.values()[0])?,
            })
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    let rows = cfg
        .sizes
        .iter()
        .zip(&points)
        .map(|(&l, p)| {
            let mut row = vec![Cell::Int(l)];
            row.extend(point_cells(p));
            row
        })
        .collect();

    let thresholds = ScalingThresholds::default();
    let scaling = match ScalingReport::from_points(cfg.sizes.clone(), points, &thresholds) {
        Ok(r) => json!({
            "classification": r.classification.to_string(),
            "terminal_exponent": r.terminal_exponent(),
            "crossover_L": r.crossover_l,
            "windows": r.window_exponents.iter().map(|w| json!({
                "L_start": w.l_start, "L_end": w.l_end, "exponent": w.exponent,
            })).collect::<Vec<_>>(),
        }),
        Err(e) => json!({ "unavailable": e.to_string() }),
    };
    Ok(single(
        Table {
            header: vec!["L", "gamma_vac", "gamma_ex", "gamma_total"],
            rows,
        },
        json!({
            "method": model.method().name(),
            "solid_angle_factor": model.solid_angle_factor(),
            "observable": observable.to_string(),
            "scaling": scaling,
        }),
    ))
}

fn fidelity(cfg: &RunConfig) -> Result<RunResult, RunError> {
    let len = cfg.sizes[0];
    let pair = match (&cfg.pair, &cfg.state) {
        (Some((i, j)), _) => BasisPair::from_signs(i.clone(), j.clone())?,
        (None, Some(StateSpec::Family(StateFamily::Ghz))) => BasisPair::ghz(len)?,
        (None, Some(StateSpec::Family(StateFamily::GhzPrime))) => BasisPair::ghz_prime(len)?,
        _ => unreachable!("validated"),
    };
    let layout = layout(cfg, len)?;
    let Some(ReservoirSpec::Discrete(specs)) = &cfg.reservoir else {
        unreachable!("validated")
    };
    let base = modes(specs)?;
    let scaled = base.scaled_couplings(cfg.strength);
    let Some(TimeSpec::Grid(grid)) = &cfg.times else {
        unreachable!("validated")
    };
    let d = pair.difference();
    let rows = grid
        .values()
        .par_iter()
        .map(|&t| {
            let gamma = dephasing::decoherence::gamma_discrete(&d, &layout, &scaled, t)?.total();
            Ok(vec![
                Cell::Float(t),
                Cell::Float(theta_phase(&pair, &layout, &scaled, t)?),
                Cell::Float(lambda_phase(&pair, &layout, &scaled, t)?),
                Cell::Float(gamma),
                Cell::Float(dynamical_fidelity(&pair, &layout, &base, t, cfg.strength)?),
            ])
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    let chi = chi_discrete(&pair, &layout, &scaled)?;
    Ok(single(
        Table {
            header: vec!["t", "theta", "lambda", "gamma", "fidelity"],
            rows,
        },
        json!({ "chi": chi }),
    ))
}

fn histogram(cfg: &RunConfig) -> Result<RunResult, RunError> {
    let len = cfg.sizes[0];
    let k = cfg.k.as_ref().expect("validated").values();
    let h = susceptibility_histogram(len, &layout(cfg, len)?, &k, cfg.samples, cfg.seed)?;
    let rows = h
        .bins
        .iter()
        .map(|b| vec![Cell::Float(b.lower), Cell::Float(b.upper), Cell::Int(b.count)])
        .collect();
    Ok(single(
        Table {
            header: vec!["lower", "upper", "count"],
            rows,
        },
        json!({
            "samples": h.samples(),
            "mean": h.mean,
            "stddev": h.stddev,
            "std_error": h.std_error,
            "tail_threshold": cfg.tail_threshold,
            "tail_fraction": cfg.tail_threshold.map(|x| h.tail_fraction(x)),
        }),
    ))
}
