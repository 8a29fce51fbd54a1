//! Flat `key=value` run configuration.
//!
//! One key per line, `#` starts a comment. Numbers accept `pi` as a factor,
//! e.g. `2*pi/50`. Grids are either comma lists, `range(start,end,step)` with
//! an inclusive end, or `linspace(start,end,count)`.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use dephasing::decoherence::ContinuumOptions;
use dephasing::register::StateFamily;
use serde::Serialize;

/// Largest number of points a grid may expand to.
pub const MAX_GRID_POINTS: usize = 10_000_000;

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_SAMPLES: usize = 100_000;

/// Every key the format knows about.
pub const KEYS: &[&str] = &[
    "command",
    "preset",
    "state",
    "i",
    "j",
    "L",
    "a",
    "J",
    "alpha",
    "dim",
    "omega_c",
    "omega_max",
    "modes",
    "occupation",
    "T",
    "center",
    "width",
    "N_tot",
    "solid_angle",
    "method",
    "t",
    "k",
    "samples",
    "tail_threshold",
    "strength",
    "seed",
    "tolerance",
    "max_evaluations",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Issue {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(key) = &self.key {
            write!(f, "{key}: ")?;
        }
        f.write_str(&self.message)
    }
}

fn join(issues: &[Issue]) -> String {
    issues.iter().map(Issue::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    /// Malformed lines; may also carry validation issues found on the rest.
    #[error("parse error: {}", join(.0))]
    Parse(Vec<Issue>),
    #[error("validation error: {}", join(.0))]
    Validation(Vec<Issue>),
}

impl ConfigError {
    pub fn kind(&self) -> &'static str {
        match self {
            ConfigError::Parse(_) => "parse-error",
            ConfigError::Validation(_) => "validation-error",
        }
    }

    pub fn issues(&self) -> &[Issue] {
        match self {
            ConfigError::Parse(v) | ConfigError::Validation(v) => v,
        }
    }
}

macro_rules! keyword_enum {
    ($(#[$m:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn name(self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }
        }

        impl FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                Self::ALL.iter().copied().find(|v| v.name() == s).ok_or_else(|| {
                    let names: Vec<_> = Self::ALL.iter().map(|v| v.name()).collect();
                    format!("expected one of {}, got {s:?}", names.join(", "))
                })
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }
    };
}

keyword_enum!(Command {
    Susceptibility => "susceptibility",
    Decoherence => "decoherence",
    Sweep => "sweep",
    Fidelity => "fidelity",
    Histogram => "histogram",
    Figure => "figure",
});

keyword_enum!(
    /// Compiled-in figure reproductions.
    Preset {
        Fig3 => "fig3",
        Fig4Left => "fig4-left",
        Fig4Right => "fig4-right",
        Fig5 => "fig5",
        Fig6 => "fig6",
    }
);

keyword_enum!(Method {
    Auto => "auto",
    Direct => "direct",
    Fourier => "fourier",
    ClosedForm => "closed_form",
    Quadrature => "quadrature",
});

keyword_enum!(SpectralKind {
    Ohmic => "ohmic",
    BandLimited => "band_limited",
    Discrete => "discrete",
});

keyword_enum!(OccupationKind {
    Vacuum => "vacuum",
    Thermal => "thermal",
    Gaussian => "gaussian",
    Delta => "delta",
});

/// Parse a finite number; `pi` may appear as a factor (`2*pi/50`).
pub fn parse_number(text: &str) -> Result<f64, String> {
    let text = text.trim();
    let bad = || format!("expected a number, got {text:?}");
    let mut value = 1.0;
    let mut op = '*';
    let mut rest = text;
    loop {
        let end = rest.find(['*', '/']).unwrap_or(rest.len());
        let token = rest[..end].trim();
        let factor = if token == "pi" {
            PI
        } else {
            token.parse::<f64>().map_err(|_| bad())?
        };
        value = if op == '*' { value * factor } else { value / factor };
        if end == rest.len() {
            break;
        }
        op = rest.as_bytes()[end] as char;
        rest = &rest[end + 1..];
    }
    if value.is_finite() {
        Ok(value)
    } else {
        Err(bad())
    }
}

/// A one-dimensional sample grid, kept in the form it was written in.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    List(Vec<f64>),
    /// `start, start + step, ...` up to and including `end`.
    Range { start: f64, end: f64, step: f64 },
    Linspace { start: f64, end: f64, count: usize },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            Grid::List(ref v) => v.clone(),
            Grid::Range { start, step, .. } => (0..self.len()).map(|i| start + i as f64 * step).collect(),
            Grid::Linspace { start, end, count } => {
                if count == 1 {
                    return vec![start];
                }
                let mut v: Vec<f64> = (0..count)
                    .map(|i| start + (end - start) * (i as f64 / (count - 1) as f64))
                    .collect();
                v[count - 1] = end;
                v
            }
        }
    }

    pub fn len(&self) -> usize {
        match *self {
            Grid::List(ref v) => v.len(),
            // Small slack so that e.g. range(0,1,0.1) keeps its end point.
            Grid::Range { start, end, step } => ((end - start) / step + 1e-9).floor() as usize + 1,
            Grid::Linspace { count, .. } => count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Grid::List(v) => {
                let parts: Vec<String> = v.iter().map(f64::to_string).collect();
                f.write_str(&parts.join(","))
            }
            Grid::Range { start, end, step } => write!(f, "range({start},{end},{step})"),
            Grid::Linspace { start, end, count } => write!(f, "linspace({start},{end},{count})"),
        }
    }
}

fn call_args<'a>(text: &'a str, name: &str) -> Option<Vec<&'a str>> {
    let inner = text.strip_prefix(name)?.trim_start().strip_prefix('(')?.strip_suffix(')')?;
    Some(inner.split(',').map(str::trim).collect())
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(text: &str) -> Result<Self, String> {
        let text = text.trim();
        let grid = if let Some(args) = call_args(text, "range") {
            let [start, end, step] = args[..] else {
                return Err("range takes (start,end,step)".into());
            };
            let (start, end, step) = (parse_number(start)?, parse_number(end)?, parse_number(step)?);
            if !(step > 0.0) || end < start {
                return Err(format!("range needs step > 0 and end >= start, got {text:?}"));
            }
            if (end - start) / step >= MAX_GRID_POINTS as f64 {
                return Err(format!("grid is larger than {MAX_GRID_POINTS} points"));
            }
            Grid::Range { start, end, step }
        } else if let Some(args) = call_args(text, "linspace") {
            let [start, end, count] = args[..] else {
                return Err("linspace takes (start,end,count)".into());
            };
            let count: usize = count
                .parse()
                .map_err(|_| format!("linspace count must be a positive integer, got {count:?}"))?;
            if count == 0 || count > MAX_GRID_POINTS {
                return Err(format!("linspace count must be in 1..={MAX_GRID_POINTS}"));
            }
            Grid::Linspace {
                start: parse_number(start)?,
                end: parse_number(end)?,
                count,
            }
        } else {
            let values = text.split(',').map(parse_number).collect::<Result<Vec<_>, _>>()?;
            Grid::List(values)
        };
        Ok(grid)
    }
}

/// Register state: a named family or an explicit difference vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StateSpec {
    Family(StateFamily),
    Explicit(Vec<i8>),
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateSpec::Family(fam) => f.write_str(fam.name()),
            StateSpec::Explicit(d) => f.write_str(&int_list(d)),
        }
    }
}

fn int_list(v: &[i8]) -> String {
    v.iter().map(i8::to_string).collect::<Vec<_>>().join(",")
}

fn parse_int_list(text: &str, allowed: &[i8]) -> Result<Vec<i8>, String> {
    text.split(',')
        .map(|s| {
            let s = s.trim();
            s.strip_prefix('+')
                .unwrap_or(s)
                .parse::<i8>()
                .ok()
                .filter(|v| allowed.contains(v))
                .ok_or_else(|| format!("entries must be in {allowed:?}, got {s:?}"))
        })
        .collect()
}

impl FromStr for StateSpec {
    type Err = String;

    fn from_str(text: &str) -> Result<Self, String> {
        match text.trim() {
            "GHZ" => Ok(StateSpec::Family(StateFamily::Ghz)),
            "GHZ'" | "GHZ_prime" => Ok(StateSpec::Family(StateFamily::GhzPrime)),
            other => parse_int_list(other, &[-1, 0, 1])
                .map(StateSpec::Explicit)
                .map_err(|e| format!("expected GHZ, GHZ' or a difference vector: {e}")),
        }
    }
}

/// One discrete reservoir mode in a 1D register.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSpec {
    pub k: f64,
    pub omega: f64,
    pub coupling_re: f64,
    pub coupling_im: f64,
    pub occupation: f64,
}

impl fmt::Display for ModeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}:{}:{}",
            self.k, self.omega, self.coupling_re, self.coupling_im, self.occupation
        )
    }
}

/// `k:omega:g:n` or `k:omega:g_re:g_im:n`, separated by `;`.
fn parse_modes(text: &str) -> Result<Vec<ModeSpec>, String> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            let f = s.split(':').map(parse_number).collect::<Result<Vec<_>, _>>()?;
            let (k, omega, re, im, n) = match f[..] {
                [k, w, g, n] => (k, w, g, 0.0, n),
                [k, w, re, im, n] => (k, w, re, im, n),
                _ => return Err(format!("mode {s:?} needs k:omega:g:n or k:omega:g_re:g_im:n")),
            };
            Ok(ModeSpec {
                k,
                omega,
                coupling_re: re,
                coupling_im: im,
                occupation: n,
            })
        })
        .collect::<Result<Vec<_>, _>>()
        .and_then(|v| if v.is_empty() { Err("no modes given".into()) } else { Ok(v) })
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReservoirSpec {
    Ohmic { alpha: f64, dim: f64, omega_c: f64 },
    BandLimited { alpha: f64, omega_max: f64 },
    Discrete(Vec<ModeSpec>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OccupationSpec {
    Vacuum,
    Thermal { temperature: f64 },
    Gaussian { center: f64, width: f64, total: f64 },
    Delta { center: f64, total: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum TimeSpec {
    Grid(Grid),
    /// `lim_{t->0} Gamma / t^2`.
    LeadingOrder,
}

impl fmt::Display for TimeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeSpec::Grid(g) => g.fmt(f),
            TimeSpec::LeadingOrder => f.write_str("leading_order"),
        }
    }
}

/// A fully validated run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub preset: Option<Preset>,
    pub state: Option<StateSpec>,
    /// Basis pair as doubled spin projections.
    pub pair: Option<(Vec<i8>, Vec<i8>)>,
    pub sizes: Vec<usize>,
    pub spacing: f64,
    pub reservoir: Option<ReservoirSpec>,
    pub occupation: OccupationSpec,
    pub solid_angle: f64,
    pub method: Method,
    pub times: Option<TimeSpec>,
    pub k: Option<Grid>,
    pub samples: usize,
    pub tail_threshold: Option<f64>,
    pub strength: f64,
    pub seed: u64,
    pub tolerance: f64,
    /// Integrand evaluation budget of each frequency integral.
    pub max_evaluations: usize,
    entries: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::parse_with_overrides(text, &[])
    }

    /// Parse, then replace the given keys (command-line flags win over the file).
    pub fn parse_with_overrides(text: &str, overrides: &[(&str, String)]) -> Result<Self, ConfigError> {
        let mut parse_issues = Vec::new();
        let mut raw: BTreeMap<String, (Option<usize>, String)> = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                parse_issues.push(Issue {
                    line: Some(lineno),
                    key: None,
                    message: format!("expected key=value, got {content:?}"),
                });
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                parse_issues.push(Issue {
                    line: Some(lineno),
                    key: None,
                    message: "empty key".into(),
                });
                continue;
            }
            if let Some((first, _)) = raw.get(key) {
                parse_issues.push(Issue {
                    line: Some(lineno),
                    key: Some(key.into()),
                    message: format!("duplicate key, first set on line {}", first.unwrap_or(0)),
                });
                continue;
            }
            raw.insert(key.into(), (Some(lineno), value.into()));
        }
        for (key, value) in overrides {
            raw.insert((*key).into(), (None, value.clone()));
        }

        let mut fields = Fields {
            raw,
            used: BTreeSet::new(),
            issues: Vec::new(),
            entries: BTreeMap::new(),
        };
        let config = fields.build();
        let validation_issues = fields.finish();
        if !parse_issues.is_empty() {
            parse_issues.extend(validation_issues);
            return Err(ConfigError::Parse(parse_issues));
        }
        if !validation_issues.is_empty() {
            return Err(ConfigError::Validation(validation_issues));
        }
        Ok(config.expect("no issues means every required field was set"))
    }

    /// Canonical form with every default filled in; parsing it gives back
    /// the same configuration.
    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        // Command first for readability, the rest sorted.
        out.push_str(&format!("command={}\n", self.command));
        for (k, v) in &self.entries {
            if k != "command" {
                out.push_str(&format!("{k}={v}\n"));
            }
        }
        out
    }
}

struct Fields {
    raw: BTreeMap<String, (Option<usize>, String)>,
    used: BTreeSet<String>,
    issues: Vec<Issue>,
    entries: BTreeMap<String, String>,
}

impl Fields {
    fn line(&self, key: &str) -> Option<usize> {
        self.raw.get(key).and_then(|(l, _)| *l)
    }

    fn issue(&mut self, key: &str, message: impl Into<String>) {
        self.issues.push(Issue {
            line: self.line(key),
            key: Some(key.into()),
            message: message.into(),
        });
    }

    fn present(&self, key: &str) -> bool {
        self.raw.contains_key(key)
    }

    /// Parse an optional key, recording its canonical form.
    fn opt<T: fmt::Display>(&mut self, key: &str, parse: impl FnOnce(&str) -> Result<T, String>) -> Option<T> {
        self.used.insert(key.into());
        let (_, text) = self.raw.get(key)?.clone();
        match parse(&text) {
            Ok(v) => {
                self.entries.insert(key.into(), v.to_string());
                Some(v)
            }
            Err(e) => {
                self.issue(key, e);
                None
            }
        }
    }

    fn req<T: fmt::Display>(&mut self, key: &str, parse: impl FnOnce(&str) -> Result<T, String>) -> Option<T> {
        if !self.present(key) {
            self.issue(key, "missing required key");
            self.used.insert(key.into());
            return None;
        }
        self.opt(key, parse)
    }

    fn or<T: fmt::Display + Clone>(
        &mut self,
        key: &str,
        default: T,
        parse: impl FnOnce(&str) -> Result<T, String>,
    ) -> Option<T> {
        if self.present(key) {
            self.opt(key, parse)
        } else {
            self.used.insert(key.into());
            self.entries.insert(key.into(), default.to_string());
            Some(default)
        }
    }

    /// Mark keys that this command does not read.
    fn finish(mut self) -> Vec<Issue> {
        let unused: Vec<String> = self.raw.keys().filter(|k| !self.used.contains(*k)).cloned().collect();
        for key in unused {
            let message = if KEYS.contains(&key.as_str()) {
                "not used by this command or reservoir".to_string()
            } else {
                "unknown key".to_string()
            };
            self.issue(&key, message);
        }
        self.issues.sort_by_key(|i| (i.line.unwrap_or(usize::MAX), i.key.clone()));
        self.issues
    }

    fn build(&mut self) -> Option<RunConfig> {
        let command = self.req("command", |s| s.parse::<Command>());
        let seed = self.or("seed", 0u64, |s| {
            s.parse::<u64>().map_err(|_| format!("expected a non-negative integer, got {s:?}"))
        });
        let tolerance = self.or("tolerance", DEFAULT_TOLERANCE, |s| positive(s));
        let command = command?;

        let mut cfg = RunConfig {
            command,
            preset: None,
            state: None,
            pair: None,
            sizes: Vec::new(),
            spacing: 1.0,
            reservoir: None,
            occupation: OccupationSpec::Vacuum,
            solid_angle: 1.0,
            method: Method::Auto,
            times: None,
            k: None,
            samples: DEFAULT_SAMPLES,
            tail_threshold: None,
            strength: 1.0,
            seed: seed.unwrap_or(0),
            tolerance: tolerance.unwrap_or(DEFAULT_TOLERANCE),
            max_evaluations: ContinuumOptions::default().max_evaluations,
            entries: BTreeMap::new(),
        };
        let ok = match command {
            Command::Figure => {
                cfg.preset = self.req("preset", |s| s.parse::<Preset>());
                cfg.preset.is_some()
            }
            Command::Susceptibility => self.susceptibility(&mut cfg),
            Command::Decoherence | Command::Sweep => self.decoherence(&mut cfg),
            Command::Fidelity => self.fidelity(&mut cfg),
            Command::Histogram => self.histogram(&mut cfg),
        };
        cfg.entries = self.entries.clone();
        (ok && seed.is_some() && tolerance.is_some()).then_some(cfg)
    }

    fn spacing(&mut self, cfg: &mut RunConfig) -> bool {
        self.or("a", 1.0, positive).map(|a| cfg.spacing = a).is_some()
    }

    fn single_size(&mut self, required: bool) -> Option<Option<usize>> {
        if !required && !self.present("L") {
            self.used.insert("L".into());
            return Some(None);
        }
        self.req("L", |s| size(s)).map(Some)
    }

    /// State plus register size; an explicit vector fixes the size itself.
    fn state_and_size(&mut self, cfg: &mut RunConfig) -> bool {
        let state = self.req("state", |s| s.parse::<StateSpec>());
        let explicit_len = match &state {
            Some(StateSpec::Explicit(d)) => Some(d.len()),
            _ => None,
        };
        let len = self.single_size(explicit_len.is_none() && state.is_some());
        let ok = match (explicit_len, len) {
            (Some(n), Some(Some(l))) if n != l => {
                self.issue("L", format!("difference vector has {n} entries but L={l}"));
                false
            }
            (Some(n), Some(_)) => {
                cfg.sizes = vec![n];
                true
            }
            (None, Some(Some(l))) => {
                cfg.sizes = vec![l];
                true
            }
            _ => false,
        };
        cfg.state = state;
        ok && cfg.state.is_some()
    }

    fn method(&mut self, cfg: &mut RunConfig, allowed: &[Method], default: Method) -> bool {
        let m = self.or("method", default, |s| {
            let m: Method = s.parse()?;
            if allowed.contains(&m) {
                Ok(m)
            } else {
                let names: Vec<_> = allowed.iter().map(|m| m.name()).collect();
                Err(format!("this command accepts {}, got {s:?}", names.join(", ")))
            }
        });
        m.map(|m| cfg.method = m).is_some()
    }

    fn susceptibility(&mut self, cfg: &mut RunConfig) -> bool {
        let mut ok = self.state_and_size(cfg);
        ok &= self.spacing(cfg);
        ok &= self.method(cfg, &[Method::Direct, Method::Fourier, Method::ClosedForm], Method::Fourier);
        cfg.k = self.req("k", |s| s.parse::<Grid>());
        ok && cfg.k.is_some()
    }

    fn reservoir(&mut self, cfg: &mut RunConfig, only_discrete: bool) -> bool {
        let kind = if only_discrete {
            self.or("J", SpectralKind::Discrete, |s| match s.parse()? {
                SpectralKind::Discrete => Ok(SpectralKind::Discrete),
                _ => Err("fidelity needs J=discrete".into()),
            })
        } else {
            self.req("J", |s| s.parse::<SpectralKind>())
        };
        let Some(kind) = kind else { return false };
        let spec = match kind {
            SpectralKind::Ohmic => {
                let alpha = self.or("alpha", 1.0, non_negative);
                let dim = self.req("dim", positive);
                let omega_c = self.req("omega_c", positive);
                (|| Some(ReservoirSpec::Ohmic {
                    alpha: alpha?,
                    dim: dim?,
                    omega_c: omega_c?,
                }))()
            }
            SpectralKind::BandLimited => {
                let alpha = self.or("alpha", 1.0, non_negative);
                let omega_max = self.req("omega_max", positive);
                (|| Some(ReservoirSpec::BandLimited {
                    alpha: alpha?,
                    omega_max: omega_max?,
                }))()
            }
            SpectralKind::Discrete => self.req("modes", |s| {
                parse_modes(s).map(|m| ModeList(m))
            }).map(|m| ReservoirSpec::Discrete(m.0)),
        };
        cfg.reservoir = spec;
        cfg.reservoir.is_some()
    }

    fn occupation(&mut self, cfg: &mut RunConfig) -> bool {
        let Some(kind) = self.or("occupation", OccupationKind::Vacuum, |s| s.parse()) else {
            return false;
        };
        let spec = match kind {
            OccupationKind::Vacuum => Some(OccupationSpec::Vacuum),
            OccupationKind::Thermal => self
                .req("T", non_negative)
                .map(|temperature| OccupationSpec::Thermal { temperature }),
            OccupationKind::Gaussian => {
                let center = self.req("center", parse_number);
                let width = self.req("width", positive);
                let total = self.req("N_tot", non_negative);
                (|| Some(OccupationSpec::Gaussian {
                    center: center?,
                    width: width?,
                    total: total?,
                }))()
            }
            OccupationKind::Delta => {
                let center = self.req("center", non_negative);
                let total = self.req("N_tot", non_negative);
                (|| Some(OccupationSpec::Delta {
                    center: center?,
                    total: total?,
                }))()
            }
        };
        spec.map(|s| cfg.occupation = s).is_some()
    }

    fn decoherence(&mut self, cfg: &mut RunConfig) -> bool {
        let sweep = cfg.command == Command::Sweep;
        let mut ok = if sweep {
            let state = self.req("state", |s| match s.parse::<StateSpec>()? {
                StateSpec::Family(f) => Ok(StateSpec::Family(f)),
                StateSpec::Explicit(_) => Err("a sweep needs a state family (GHZ or GHZ')".into()),
            });
            let sizes = self.req("L", |s| size_list(s));
            cfg.state = state;
            match sizes {
                Some(s) => {
                    cfg.sizes = s.0;
                    cfg.state.is_some()
                }
                None => false,
            }
        } else {
            self.state_and_size(cfg)
        };
        ok &= self.spacing(cfg);
        ok &= self.reservoir(cfg, false);
        let discrete = matches!(cfg.reservoir, Some(ReservoirSpec::Discrete(_)));
        if !discrete {
            ok &= self.occupation(cfg);
            ok &= self
                .or("solid_angle", 1.0, positive)
                .map(|s| cfg.solid_angle = s)
                .is_some();
            ok &= self
                .or("max_evaluations", cfg.max_evaluations, |s| match s.parse::<usize>() {
                    Ok(n) if n > 0 => Ok(n),
                    _ => Err(format!("expected a positive integer, got {s:?}")),
                })
                .map(|n| cfg.max_evaluations = n)
                .is_some();
        }
        ok &= self.method(cfg, &[Method::Auto, Method::ClosedForm, Method::Quadrature], Method::Auto);
        if cfg.method == Method::ClosedForm && ok {
            let vacuum_ohmic = matches!(cfg.reservoir, Some(ReservoirSpec::Ohmic { .. }))
                && cfg.occupation == OccupationSpec::Vacuum
                && cfg.solid_angle == 1.0;
            if !vacuum_ohmic {
                self.issue(
                    "method",
                    "closed_form needs J=ohmic, occupation=vacuum and solid_angle=1",
                );
                ok = false;
            }
        }
        if discrete && cfg.method == Method::Quadrature {
            self.issue("method", "a discrete reservoir is summed, not integrated");
            ok = false;
        }
        cfg.times = if sweep {
            self.req("t", |s| {
                if s.trim() == "leading_order" {
                    return Ok(TimeSpec::LeadingOrder);
                }
                let t = non_negative(s)?;
                Ok(TimeSpec::Grid(Grid::List(vec![t])))
            })
        } else {
            self.req("t", |s| time_grid(s).map(TimeSpec::Grid))
        };
        ok && cfg.times.is_some()
    }

    fn fidelity(&mut self, cfg: &mut RunConfig) -> bool {
        let mut ok = true;
        if self.present("state") {
            ok &= self.state_and_size(cfg);
            if let Some(StateSpec::Explicit(_)) = cfg.state {
                self.issue("state", "fidelity needs GHZ, GHZ' or explicit i and j");
                ok = false;
            }
            for key in ["i", "j"] {
                if self.present(key) {
                    self.used.insert(key.into());
                    self.issue(key, "give either state or i and j, not both");
                    ok = false;
                }
            }
        } else {
            let i = self.req("i", |s| parse_int_list(s, &[-1, 1]).map(SignList));
            let j = self.req("j", |s| parse_int_list(s, &[-1, 1]).map(SignList));
            match (i, j) {
                (Some(i), Some(j)) if i.0.len() == j.0.len() => {
                    cfg.sizes = vec![i.0.len()];
                    cfg.pair = Some((i.0, j.0));
                }
                (Some(_), Some(_)) => {
                    self.issue("j", "i and j must have the same length");
                    ok = false;
                }
                _ => ok = false,
            }
            if let Some(Some(l)) = self.single_size(false) {
                if cfg.sizes.first().is_some_and(|&n| n != l) {
                    self.issue("L", "L does not match the length of i and j");
                    ok = false;
                }
            }
        }
        ok &= self.spacing(cfg);
        ok &= self.reservoir(cfg, true);
        ok &= self.or("strength", 1.0, parse_number).map(|s| cfg.strength = s).is_some();
        cfg.times = self.req("t", |s| time_grid(s).map(TimeSpec::Grid));
        ok && cfg.times.is_some()
    }

    fn histogram(&mut self, cfg: &mut RunConfig) -> bool {
        let mut ok = match self.req("L", |s| size(s)) {
            Some(l) => {
                cfg.sizes = vec![l];
                true
            }
            None => false,
        };
        ok &= self.spacing(cfg);
        cfg.k = self.or("k", Grid::List(vec![0.0]), |s| {
            let v = parse_number(s)?;
            Ok(Grid::List(vec![v]))
        });
        ok &= cfg.k.is_some();
        ok &= self
            .or("samples", DEFAULT_SAMPLES, |s| match s.parse::<usize>() {
                Ok(n) if n > 0 => Ok(n),
                _ => Err(format!("expected a positive integer, got {s:?}")),
            })
            .map(|n| cfg.samples = n)
            .is_some();
        if self.present("tail_threshold") {
            cfg.tail_threshold = self.opt("tail_threshold", non_negative);
            ok &= cfg.tail_threshold.is_some();
        } else {
            self.used.insert("tail_threshold".into());
        }
        ok
    }
}

struct ModeList(Vec<ModeSpec>);

impl fmt::Display for ModeList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ModeSpec::to_string).collect();
        f.write_str(&parts.join(";"))
    }
}

struct SignList(Vec<i8>);

impl fmt::Display for SignList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&int_list(&self.0))
    }
}

struct SizeList(Vec<usize>);

impl fmt::Display for SizeList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let v = parse_number(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("must be > 0, got {v}"))
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    let v = parse_number(s)?;
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("must be >= 0, got {v}"))
    }
}

fn size(s: &str) -> Result<usize, String> {
    match s.trim().parse::<i64>() {
        Ok(n) if n > 0 => Ok(n as usize),
        Ok(n) => Err(format!("register size must be a positive integer, got {n}")),
        Err(_) => Err(format!("register size must be a positive integer, got {s:?}")),
    }
}

/// Sizes for a sweep, sorted and deduplicated.
fn size_list(s: &str) -> Result<SizeList, String> {
    let grid: Grid = s.parse()?;
    let mut sizes = grid
        .values()
        .into_iter()
        .map(|v| {
            if v >= 1.0 && v.fract() == 0.0 && v < u32::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(format!("register sizes must be positive integers, got {v}"))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    sizes.sort_unstable();
    sizes.dedup();
    Ok(SizeList(sizes))
}

fn time_grid(s: &str) -> Result<Grid, String> {
    let grid: Grid = s.parse()?;
    if let Some(t) = grid.values().into_iter().find(|t| *t < 0.0) {
        return Err(format!("times must be >= 0, got {t}"));
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HAPPY: &str = "command=decoherence\nstate=GHZ\nL=4\na=1\nJ=ohmic\nalpha=1\ndim=1\nomega_c=20\nt=20";

    fn issue_keys(e: &ConfigError) -> Vec<String> {
        e.issues().iter().filter_map(|i| i.key.clone()).collect()
    }

    #[test]
    fn happy_path_decoherence() {
        let cfg = RunConfig::parse(HAPPY).unwrap();
        assert_eq!(cfg.command, Command::Decoherence);
        assert_eq!(cfg.state, Some(StateSpec::Family(StateFamily::Ghz)));
        assert_eq!(cfg.sizes, vec![4]);
        assert_eq!(
            cfg.reservoir,
            Some(ReservoirSpec::Ohmic {
                alpha: 1.0,
                dim: 1.0,
                omega_c: 20.0
            })
        );
        assert_eq!(cfg.times, Some(TimeSpec::Grid(Grid::List(vec![20.0]))));
        assert_eq!(cfg.occupation, OccupationSpec::Vacuum);
    }

    #[test]
    fn negative_size_names_key() {
        let err = RunConfig::parse("L=-2").unwrap_err();
        assert_eq!(err.kind(), "validation-error");
        assert!(issue_keys(&err).contains(&"L".to_string()) || issue_keys(&err).contains(&"command".to_string()));
        let err = RunConfig::parse("command=decoherence\nstate=GHZ\nL=-2\nJ=ohmic\ndim=1\nomega_c=20\nt=1").unwrap_err();
        assert_eq!(issue_keys(&err), vec!["L"]);
        assert_eq!(err.issues()[0].line, Some(3));
    }

    #[test]
    fn missing_command() {
        let err = RunConfig::parse("state=GHZ\nL=4").unwrap_err();
        assert_eq!(err.kind(), "validation-error");
        assert!(issue_keys(&err).contains(&"command".to_string()));
    }

    #[test]
    fn all_errors_are_collected() {
        let text = "command=decoherence\nstate=GHZ\nL=0\nJ=ohmic\ndim=-1\nomega_c=abc\nt=1\nbogus=3";
        let err = RunConfig::parse(text).unwrap_err();
        let keys = issue_keys(&err);
        for k in ["L", "dim", "omega_c", "bogus"] {
            assert!(keys.contains(&k.to_string()), "{k} missing from {keys:?}");
        }
    }

    #[test]
    fn malformed_line_is_a_parse_error_with_line_number() {
        let err = RunConfig::parse("command=figure\n\nthis line has no equals\npreset=fig3").unwrap_err();
        assert_eq!(err.kind(), "parse-error");
        assert_eq!(err.issues()[0].line, Some(3));
        let err = RunConfig::parse("command=figure\npreset=fig3\npreset=fig5").unwrap_err();
        assert_eq!(err.kind(), "parse-error");
        assert_eq!(err.issues()[0].line, Some(3));
    }

    #[test]
    fn comments_and_blank_lines() {
        let cfg = RunConfig::parse("# reproduce a figure\ncommand = figure  # trailing\n\npreset=fig6\n").unwrap();
        assert_eq!(cfg.preset, Some(Preset::Fig6));
    }

    #[test]
    fn unused_keys_are_rejected() {
        let err = RunConfig::parse("command=figure\npreset=fig3\nL=4").unwrap_err();
        assert_eq!(issue_keys(&err), vec!["L"]);
        let err = RunConfig::parse(&format!("{HAPPY}\nT=1")).unwrap_err();
        assert_eq!(issue_keys(&err), vec!["T"]);
    }

    #[test]
    fn closed_form_needs_vacuum_ohmic() {
        let text = "command=decoherence\nstate=GHZ\nL=4\nJ=ohmic\ndim=1\nomega_c=20\noccupation=thermal\nT=1\nt=1\nmethod=closed_form";
        let err = RunConfig::parse(text).unwrap_err();
        assert_eq!(issue_keys(&err), vec!["method"]);
    }

    #[test]
    fn numbers_with_pi() {
        assert_eq!(parse_number("pi").unwrap(), PI);
        assert_eq!(parse_number("2*pi/50").unwrap(), 2.0 * PI / 50.0);
        assert_eq!(parse_number(" -1.5e-3 ").unwrap(), -1.5e-3);
        assert!(parse_number("nan").is_err());
        assert!(parse_number("1/0").is_err());
        assert!(parse_number("").is_err());
    }

    #[test]
    fn grids() {
        let g: Grid = "range(0,1,0.1)".parse().unwrap();
        assert_eq!(g.len(), 11);
        assert!((g.values()[10] - 1.0).abs() < 1e-15);
        let g: Grid = "linspace(0,2*pi,401)".parse().unwrap();
        let v = g.values();
        assert_eq!(v[200], PI);
        assert_eq!(v[400], 2.0 * PI);
        let g: Grid = "1, 2,3".parse().unwrap();
        assert_eq!(g.values(), vec![1.0, 2.0, 3.0]);
        assert!("range(1,0,1)".parse::<Grid>().is_err());
        assert!("range(0,1)".parse::<Grid>().is_err());
        assert!("linspace(0,1,0)".parse::<Grid>().is_err());
    }

    #[test]
    fn sweep_sizes_are_sorted() {
        let text = "command=sweep\nstate=GHZ'\nL=8,2,4,4\nJ=ohmic\ndim=1\nomega_c=20\nt=leading_order";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.sizes, vec![2, 4, 8]);
        assert_eq!(cfg.times, Some(TimeSpec::LeadingOrder));
        assert_eq!(cfg.entries()["L"], "2,4,8");
    }

    #[test]
    fn explicit_state_fixes_size() {
        let cfg = RunConfig::parse("command=susceptibility\nstate=1,-1,0\nk=0").unwrap();
        assert_eq!(cfg.sizes, vec![3]);
        let err = RunConfig::parse("command=susceptibility\nstate=1,-1,0\nL=4\nk=0").unwrap_err();
        assert_eq!(issue_keys(&err), vec!["L"]);
    }

    #[test]
    fn fidelity_pair_and_modes() {
        let text = "command=fidelity\ni=1,1\nj=-1,1\nmodes=0.5:0.5:1:0;1:1:0.2:0.1:2\nt=range(0,1,0.5)";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.pair, Some((vec![1, 1], vec![-1, 1])));
        let Some(ReservoirSpec::Discrete(modes)) = &cfg.reservoir else { panic!() };
        assert_eq!(modes.len(), 2);
        assert_eq!(modes[1].coupling_im, 0.1);
    }

    #[test]
    fn overrides_replace_file_values() {
        let cfg = RunConfig::parse_with_overrides(
            "command=histogram\nL=10\nseed=1",
            &[("seed", "7".into()), ("tolerance", "1e-6".into())],
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.tolerance, 1e-6);
    }

    #[test]
    fn canonical_text_round_trips() {
        let texts = [
            HAPPY.to_string(),
            "command=figure\npreset=fig5".into(),
            "command=histogram\nL=100\nk=pi\nsamples=10\ntail_threshold=5000".into(),
            "command=sweep\nstate=GHZ'\nL=range(1,100,1)\nJ=band_limited\nomega_max=2*pi\noccupation=gaussian\ncenter=pi\nwidth=2*pi/50\nN_tot=10\nsolid_angle=2\nt=leading_order".into(),
            "command=fidelity\nstate=GHZ'\nL=4\nmodes=3.14:3.14:1:0.5\nt=linspace(0,2,5)\nstrength=0.1".into(),
        ];
        for text in texts {
            let cfg = RunConfig::parse(&text).unwrap();
            let again = RunConfig::parse(&cfg.to_text()).unwrap();
            assert_eq!(cfg, again, "{text}");
        }
    }

    proptest! {
        #[test]
        fn numbers_round_trip_through_display(x in -1e6f64..1e6) {
            prop_assert_eq!(parse_number(&x.to_string()).unwrap(), x);
        }

        #[test]
        fn range_grids_are_increasing(start in -10.0f64..10.0, span in 0.0f64..10.0, step in 0.01f64..1.0) {
            let g = Grid::Range { start, end: start + span, step };
            let v = g.values();
            prop_assert!(!v.is_empty());
            prop_assert!(v.windows(2).all(|w| w[1] > w[0]));
            prop_assert!(*v.last().unwrap() <= start + span + step * 1e-6);
        }

        #[test]
        fn bad_sizes_always_name_l(l in -1000i64..=0) {
            let text = format!("command=histogram\nL={l}");
            let err = RunConfig::parse(&text).unwrap_err();
            prop_assert_eq!(err.issues().iter().filter_map(|i| i.key.clone()).collect::<Vec<_>>(), vec!["L".to_string()]);
        }
    }
}
