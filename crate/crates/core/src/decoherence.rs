//! The decoherence function `Gamma_d(t)` governing `|rho_ij(t)| = exp(-Gamma) |rho_ij(0)|`.
//!
//! Three engines are provided:
//!
//! * a sum over a discrete mode set,
//! * adaptive quadrature of the isotropic frequency integral
//!   `factor * int J(w) gamma_d(w) tau(t, w) (1 + 2 N(w)) dw`, split into its
//!   vacuum and excitation parts,
//! * the closed-form vacuum solution for a linear array and an Ohmic-family
//!   spectral density, with its short-time and plateau limits.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadratureOptions};
use crate::register::{DifferenceVector, QubitLayout, StateFamily};
use crate::reservoir::{DiscreteModeSet, OccupationDensity, SpectralDensity};
use crate::special::gamma;
use crate::susceptibility::gamma_fourier;

/// `(1 - cos(w t)) / w^2`, with the limit `t^2 / 2` at `w = 0`.
pub fn tau(t: f64, omega: f64) -> f64 {
    if omega == 0.0 {
        return 0.5 * t * t;
    }
    // Half-angle form avoids cancellation at small w t.
    let s = (0.5 * omega * t).sin() / omega;
    2.0 * s * s
}

/// Vacuum and excitation parts of the decoherence function at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DecoherencePoint {
    pub vacuum: f64,
    pub excitation: f64,
}

impl DecoherencePoint {
    pub fn total(&self) -> f64 {
        self.vacuum + self.excitation
    }

    fn scaled(self, c: f64) -> Self {
        Self {
            vacuum: c * self.vacuum,
            excitation: c * self.excitation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoherenceMethod {
    Discrete,
    Quadrature,
    ClosedForm,
}

impl DecoherenceMethod {
    pub fn name(self) -> &'static str {
        match self {
            DecoherenceMethod::Discrete => "discrete",
            DecoherenceMethod::Quadrature => "quadrature",
            DecoherenceMethod::ClosedForm => "closed-form",
        }
    }
}

/// Decoherence function sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoherenceSeries {
    pub times: Vec<f64>,
    pub gamma_vac: Vec<f64>,
    pub gamma_ex: Vec<f64>,
    pub gamma_total: Vec<f64>,
    pub method: DecoherenceMethod,
    pub solid_angle_factor: f64,
}

impl DecoherenceSeries {
    pub fn from_points(
        times: Vec<f64>,
        points: &[DecoherencePoint],
        method: DecoherenceMethod,
        solid_angle_factor: f64,
    ) -> Self {
        Self {
            gamma_vac: points.iter().map(|p| p.vacuum).collect(),
            gamma_ex: points.iter().map(|p| p.excitation).collect(),
            gamma_total: points.iter().map(DecoherencePoint::total).collect(),
            times,
            method,
            solid_angle_factor,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// `sum_k gamma_d(k) |g_k|^2 tau(t, w_k) (1 + 2 N_k)`.
pub fn gamma_discrete(
    d: &DifferenceVector,
    layout: &QubitLayout,
    modes: &DiscreteModeSet,
    t: f64,
) -> Result<DecoherencePoint> {
    discrete_sum(d, layout, modes, |omega| tau(t, omega))
}

fn discrete_sum<K: Fn(f64) -> f64>(
    d: &DifferenceVector,
    layout: &QubitLayout,
    modes: &DiscreteModeSet,
    kernel: K,
) -> Result<DecoherencePoint> {
    layout.check_register(d)?;
    let mut vacuum = Vec::with_capacity(modes.len());
    let mut excitation = Vec::with_capacity(modes.len());
    for mode in modes.modes() {
        let weight = gamma_fourier(d, layout, &mode.k)? * mode.coupling.norm_sqr() * kernel(mode.omega);
        vacuum.push(weight);
        excitation.push(2.0 * mode.occupation * weight);
    }
    Ok(DecoherencePoint {
        vacuum: crate::quadrature::pairwise_sum(&vacuum),
        excitation: crate::quadrature::pairwise_sum(&excitation),
    })
}

/// Leading short-time coefficient `lim_{t->0} Gamma / t^2` of the discrete sum.
pub fn leading_coefficient_discrete(
    d: &DifferenceVector,
    layout: &QubitLayout,
    modes: &DiscreteModeSet,
) -> Result<DecoherencePoint> {
    discrete_sum(d, layout, modes, |_| 0.5)
}

/// Accuracy controls for the frequency integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuumOptions {
    pub rel_tol: f64,
    pub max_evaluations: usize,
}

impl Default for ContinuumOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            max_evaluations: 40_000_000,
        }
    }
}

/// `|sum_l d_l exp(-i w x_l)|^2` for a 1D register, evaluated by Horner's
/// rule on lattices.
struct Susceptibility1d {
    entries: Vec<f64>,
    coords: Vec<f64>,
    spacing: Option<f64>,
    extent: f64,
    max_value: f64,
}

impl Susceptibility1d {
    fn new(d: &DifferenceVector, layout: &QubitLayout) -> Result<Self> {
        layout.check_register(d)?;
        let coords = layout.coordinates_1d()?;
        let lo = coords.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = coords.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let n = d.norm_squared() as f64;
        Ok(Self {
            entries: d.entries().iter().map(|&e| e as f64).collect(),
            coords,
            spacing: layout.spacing(),
            extent: hi - lo,
            max_value: n * n,
        })
    }

    fn eval(&self, omega: f64) -> f64 {
        match self.spacing {
            Some(a) => {
                let z = Complex64::from_polar(1.0, -omega * a);
                let mut acc = Complex64::new(0.0, 0.0);
                for &e in self.entries.iter().rev() {
                    acc = acc * z + e;
                }
                acc.norm_sqr()
            }
            None => self
                .entries
                .iter()
                .zip(&self.coords)
                .filter(|(&e, _)| e != 0.0)
                .map(|(&e, &x)| Complex64::from_polar(e, -omega * x))
                .sum::<Complex64>()
                .norm_sqr(),
        }
    }

    /// Quarter of the shortest half-period of `gamma`.
    fn panel_cap(&self) -> f64 {
        let scale = match self.spacing {
            Some(a) => a * self.entries.len() as f64,
            None => self.extent,
        };
        if scale > 0.0 {
            PI / scale / 4.0
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Kernel {
    Tau(f64),
    /// `lim tau / t^2`.
    LeadingOrder,
}

impl Kernel {
    fn eval(self, omega: f64) -> f64 {
        match self {
            Kernel::Tau(t) => tau(t, omega),
            Kernel::LeadingOrder => 0.5,
        }
    }

    fn bound(self, omega: f64) -> f64 {
        match self {
            Kernel::Tau(t) => (0.5 * t * t).min(2.0 / (omega * omega)),
            Kernel::LeadingOrder => 0.5,
        }
    }

    /// Exponent of the kernel's high-frequency bound.
    fn tail_power(self) -> f64 {
        match self {
            Kernel::Tau(_) => -2.0,
            Kernel::LeadingOrder => 0.0,
        }
    }

    fn panel_cap(self) -> f64 {
        match self {
            Kernel::Tau(t) if t > 0.0 => PI / t / 4.0,
            _ => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Part {
    Vacuum,
    Excitation,
}

struct ContinuumProblem<'a> {
    gamma: Susceptibility1d,
    spectral: &'a SpectralDensity,
    occupation: &'a OccupationDensity,
    kernel: Kernel,
    options: ContinuumOptions,
}

impl ContinuumProblem<'_> {
    fn weight(&self, part: Part, omega: f64) -> f64 {
        match part {
            Part::Vacuum => 1.0,
            Part::Excitation => 2.0 * self.occupation.eval(omega),
        }
    }

    fn integrand(&self, part: Part, omega: f64) -> f64 {
        let w = self.weight(part, omega);
        if w == 0.0 {
            return 0.0;
        }
        let j = self.spectral.eval_unchecked(omega);
        if j == 0.0 {
            return 0.0;
        }
        j * self.gamma.eval(omega) * self.kernel.eval(omega) * w
    }

    fn quad_options(&self) -> QuadratureOptions {
        QuadratureOptions {
            rel_tol: self.options.rel_tol,
            abs_tol: 1e-300,
            max_panel_width: self.gamma.panel_cap().min(self.kernel.panel_cap()),
            max_evaluations: self.options.max_evaluations,
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut b = self.spectral.breakpoints();
        b.extend(self.occupation.breakpoints());
        b
    }

    /// Width of the near-origin interval handled by substitution, when the
    /// excitation integrand diverges like `w^(dim - 1)` there.
    fn singular_origin(&self, part: Part) -> Option<(f64, f64)> {
        if part != Part::Excitation {
            return None;
        }
        let temperature = match self.occupation {
            OccupationDensity::BoseEinstein { temperature } if *temperature > 0.0 => *temperature,
            _ => return None,
        };
        let (_, power) = self.spectral.small_omega_behaviour();
        if !(power > 0.0 && power < 1.0) {
            return None;
        }
        let mut scale = temperature;
        if let SpectralDensity::OhmicFamily { cutoff, .. } = self.spectral {
            scale = scale.min(*cutoff);
        }
        if let Kernel::Tau(t) = self.kernel {
            scale = scale.min(1.0 / t);
        }
        if let Some(end) = self.spectral.support_end() {
            scale = scale.min(end);
        }
        Some((scale / 100.0, power))
    }

    fn integrate_part(&self, part: Part) -> Result<f64> {
        if matches!(part, Part::Excitation) && self.occupation.is_vacuum() {
            return Ok(0.0);
        }
        let options = self.quad_options();
        let f = |w: f64| self.integrand(part, w);

        let mut start = 0.0;
        let mut total = 0.0;
        if let Some((eps, power)) = self.singular_origin(part) {
            // w = u^(1/p) turns w^(p-1) dw into a bounded integrand in u.
            let inv = 1.0 / power;
            let g = |u: f64| {
                if u <= 0.0 {
                    return 0.0;
                }
                let w = u.powf(inv);
                f(w) * inv * w / u
            };
            total += integrate(g, 0.0, eps.powf(power), &[], &options)?.value;
            start = eps;
        }

        let bps = self.breakpoints();
        if let Some(end) = self.spectral.support_end() {
            total += integrate(f, start, end, &bps, &options)?.value;
            return Ok(total);
        }

        let cutoff = match self.spectral {
            SpectralDensity::OhmicFamily { cutoff, .. } => *cutoff,
            _ => return Err(Error::CutoffViolation),
        };
        // N(w) / N(W) <= exp(-(w - W) / T) for w >= W, so thermal weight shortens the tail.
        let decay = match (part, self.occupation) {
            (Part::Excitation, OccupationDensity::BoseEinstein { temperature }) if *temperature > 0.0 => {
                1.0 / (1.0 / cutoff + 1.0 / temperature)
            }
            _ => cutoff,
        };
        let (_, j_power) = self.spectral.small_omega_behaviour();
        let power = (j_power + self.kernel.tail_power()).max(0.0);
        let monotone_from = (2.0 * power * decay).max(self.occupation.decay_onset());
        let mut upper = (10.0 * decay).max(monotone_from).max(start);
        total += integrate(f, start, upper, &bps, &options)?.value;

        let envelope = |w: f64| {
            self.spectral.eval_unchecked(w)
                * self.gamma.max_value
                * self.kernel.bound(w)
                * self.weight(part, w).max(if part == Part::Vacuum { 1.0 } else { 0.0 })
        };
        for _ in 0..1000 {
            let tail_bound = envelope(upper) * 2.0 * decay;
            if tail_bound <= 0.1 * self.options.rel_tol * total.abs() || tail_bound == 0.0 {
                return Ok(total);
            }
            let next = upper + 10.0 * decay;
            total += integrate(f, upper, next, &bps, &options)?.value;
            upper = next;
        }
        Err(Error::QuadratureFailure {
            lower: 0.0,
            upper,
            estimate: total,
            error: envelope(upper) * 2.0 * decay,
            evaluations: options.max_evaluations,
        })
    }

    fn delta_contribution(&self) -> f64 {
        match self.occupation {
            OccupationDensity::DeltaPeak { center, total } => {
                let j = self.spectral.eval_unchecked(*center);
                j * self.gamma.eval(*center) * self.kernel.eval(*center) * 2.0 * total
            }
            _ => 0.0,
        }
    }

    fn solve(&self, with_vacuum: bool) -> Result<DecoherencePoint> {
        let (vacuum, excitation) = rayon::join(
            || if with_vacuum { self.integrate_part(Part::Vacuum) } else { Ok(0.0) },
            || self.integrate_part(Part::Excitation),
        );
        Ok(DecoherencePoint {
            vacuum: vacuum?,
            excitation: excitation? + self.delta_contribution(),
        })
    }
}

fn continuum(
    d: &DifferenceVector,
    layout: &QubitLayout,
    spectral: &SpectralDensity,
    occupation: &OccupationDensity,
    kernel: Kernel,
    solid_angle_factor: f64,
    options: &ContinuumOptions,
    with_vacuum: bool,
) -> Result<DecoherencePoint> {
    if !spectral.cutoff_check() {
        return Err(Error::CutoffViolation);
    }
    if !(solid_angle_factor > 0.0 && solid_angle_factor.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "solid angle factor must be > 0, got {solid_angle_factor}"
        )));
    }
    if !(options.rel_tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be > 0".into()));
    }
    let problem = ContinuumProblem {
        gamma: Susceptibility1d::new(d, layout)?,
        spectral,
        occupation,
        kernel,
        options: *options,
    };
    if d.is_zero() {
        return Ok(DecoherencePoint::default());
    }
    Ok(problem.solve(with_vacuum)?.scaled(solid_angle_factor))
}

/// Isotropic continuum decoherence function for a 1D register, split into
/// vacuum and excitation parts.
///
/// A delta-peak occupation contributes `J(w0) gamma(w0) tau(t, w0) 2 N_tot`
/// to the excitation part exactly; bounded occupations are integrated.
pub fn gamma_continuum(
    d: &DifferenceVector,
    layout: &QubitLayout,
    spectral: &SpectralDensity,
    occupation: &OccupationDensity,
    t: f64,
    solid_angle_factor: f64,
    options: &ContinuumOptions,
) -> Result<DecoherencePoint> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("time must be >= 0, got {t}")));
    }
    if t == 0.0 {
        layout.check_register(d)?;
        return Ok(DecoherencePoint::default());
    }
    continuum(d, layout, spectral, occupation, Kernel::Tau(t), solid_angle_factor, options, true)
}

/// `lim_{t->0} Gamma(t) / t^2` of the continuum decoherence function.
pub fn leading_coefficient_continuum(
    d: &DifferenceVector,
    layout: &QubitLayout,
    spectral: &SpectralDensity,
    occupation: &OccupationDensity,
    solid_angle_factor: f64,
    options: &ContinuumOptions,
) -> Result<DecoherencePoint> {
    continuum(d, layout, spectral, occupation, Kernel::LeadingOrder, solid_angle_factor, options, true)
}

/// Value with a bound on its relative error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub relative_error_bound: f64,
}

/// Parameters of the closed-form vacuum solution: linear array with spacing
/// `a`, spectral density `alpha w^dim exp(-w / cutoff)`, and the lag
/// autocorrelation of the difference vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormContext {
    pub dim: f64,
    pub alpha: f64,
    pub cutoff: f64,
    pub spacing: f64,
    pub autocorrelation: Vec<f64>,
}

impl ClosedFormContext {
    pub fn new(dim: f64, alpha: f64, cutoff: f64, spacing: f64, d: &DifferenceVector) -> Result<Self> {
        if !(dim > 0.0 && dim.is_finite()) {
            return Err(Error::InvalidArgument(format!("dimension must be > 0, got {dim}")));
        }
        if !(cutoff > 0.0 && cutoff.is_finite()) {
            return Err(Error::InvalidArgument(format!("cutoff must be > 0, got {cutoff}")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidArgument(format!("spacing must be > 0, got {spacing}")));
        }
        Ok(Self {
            dim,
            alpha,
            cutoff,
            spacing,
            autocorrelation: d.autocorrelation(),
        })
    }

    pub fn norm_squared(&self) -> f64 {
        self.autocorrelation[0]
    }

    fn q(&self, r: usize, j: f64, t: f64) -> Complex64 {
        Complex64::new(1.0 / (self.spacing * self.cutoff), j * t / self.spacing - r as f64)
    }

    fn is_log_branch(&self) -> bool {
        self.dim == 1.0
    }

    /// `I_r(t) = int w^dim tau(t, w) exp(-w / cutoff) cos(a w r) dw`.
    pub fn lag_integral(&self, r: usize, t: f64) -> f64 {
        let (q0, qm, qp) = (self.q(r, 0.0, t), self.q(r, -1.0, t), self.q(r, 1.0, t));
        let z = if self.is_log_branch() {
            0.25 * (-2.0 * q0.ln() + qm.ln() + qp.ln())
        } else {
            let e = 1.0 - self.dim;
            let pre = self.spacing.powf(e) / 4.0 * gamma(self.dim - 1.0);
            (2.0 * q0.powf(e) - qm.powf(e) - qp.powf(e)) * pre
        };
        2.0 * z.re
    }

    /// Closed-form vacuum decoherence `alpha sum_r f_r I_r(t)`.
    pub fn vacuum(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!("time must be >= 0, got {t}")));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        let terms: Vec<f64> = self
            .autocorrelation
            .iter()
            .enumerate()
            .filter(|(_, &f)| f != 0.0)
            .map(|(r, &f)| f * self.lag_integral(r, t))
            .collect();
        Ok(self.alpha * crate::quadrature::pairwise_sum(&terms))
    }

    /// Exact `lim_{t->0} Gamma_vac / t^2`.
    pub fn leading_coefficient(&self) -> f64 {
        let e = -(self.dim + 1.0);
        let pre = self.spacing.powf(-1.0 - self.dim) / 4.0 * gamma(1.0 + self.dim);
        let terms: Vec<f64> = self
            .autocorrelation
            .iter()
            .enumerate()
            .map(|(r, &f)| f * pre * 2.0 * self.q(r, 0.0, 0.0).powf(e).re)
            .collect();
        self.alpha * crate::quadrature::pairwise_sum(&terms)
    }

    /// Second-order short-time approximation from the `r = 0` term.
    ///
    /// The error bound takes the constants hidden in the order symbols as 1:
    /// `(t wc)^2 + 4 / (a wc)^(dim+1) + t^2 / (a^5 wc^3)`.
    pub fn small_time(&self, t: f64) -> Estimate {
        let wc = self.cutoff;
        let a = self.spacing;
        let value = 0.5
            * self.alpha
            * self.norm_squared()
            * gamma(1.0 + self.dim)
            * wc.powf(self.dim - 1.0)
            * (t * wc).powi(2);
        let bound = (t * wc).powi(2) + 4.0 / (a * wc).powf(self.dim + 1.0) + t * t / (a.powi(5) * wc.powi(3));
        Estimate {
            value,
            relative_error_bound: bound,
        }
    }

    /// Infinite-time plateau height `alpha |d|^2 Gamma(dim - 1) wc^(dim - 1)`,
    /// valid with relative error below `2 / (a wc)^dim` for `dim >= 2`.
    pub fn plateau(&self) -> Result<Estimate> {
        if self.dim < 2.0 {
            return Err(Error::InvalidArgument(format!(
                "plateau estimate needs dim >= 2, got {}",
                self.dim
            )));
        }
        Ok(Estimate {
            value: self.alpha
                * self.norm_squared()
                * gamma(self.dim - 1.0)
                * self.cutoff.powf(self.dim - 1.0),
            relative_error_bound: 2.0 / (self.spacing * self.cutoff).powf(self.dim),
        })
    }
}

/// `lim_{t->inf} dGamma/dt = (pi/2) lim_{w->0} J(w) gamma(w) (1 + 2 N(w))`,
/// from the leading power laws of the three factors at the origin.
///
/// Zero signals a quasi-plateau; infinity an integrand that diverges at the
/// origin.
pub fn infinite_time_slope(
    d: &DifferenceVector,
    layout: &QubitLayout,
    spectral: &SpectralDensity,
    occupation: &OccupationDensity,
) -> Result<f64> {
    layout.check_register(d)?;
    let coords = layout.coordinates_1d()?;
    if d.is_zero() {
        return Ok(0.0);
    }
    let (cj, pj) = spectral.small_omega_behaviour();
    let (cg, pg) = susceptibility_at_origin(d, &coords);
    let (cn, pn) = occupation.small_omega_weight();
    if cj == 0.0 || cg == 0.0 {
        return Ok(0.0);
    }
    let power = pj + pg + pn;
    if power > 1e-12 {
        Ok(0.0)
    } else if power < -1e-12 {
        Ok(f64::INFINITY)
    } else {
        Ok(0.5 * PI * cj * cg * cn)
    }
}

/// `(c, p)` with `gamma_d(w) ~ c w^p` near the origin: the lowest nonzero
/// moment `m_n = sum_l d_l x_l^n` gives `c = (m_n / n!)^2`, `p = 2n`.
fn susceptibility_at_origin(d: &DifferenceVector, coords: &[f64]) -> (f64, f64) {
    let mean = coords.iter().sum::<f64>() / coords.len() as f64;
    let centred: Vec<f64> = coords.iter().map(|x| x - mean).collect();
    let mut factorial = 1.0;
    for n in 0..coords.len() {
        if n > 0 {
            factorial *= n as f64;
        }
        let (moment, scale) = d
            .entries()
            .iter()
            .zip(&centred)
            .fold((0.0, 0.0), |(m, s), (&e, &x)| {
                let xn = x.powi(n as i32);
                (m + e as f64 * xn, s + (e as f64 * xn).abs())
            });
        if moment.abs() > 1e-9 * scale {
            return ((moment / factorial).powi(2), 2.0 * n as f64);
        }
    }
    (0.0, 0.0)
}

/// Parameters for [`subohmic_excitation_sweep`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubohmicSweep {
    pub spacing: f64,
    pub alpha: f64,
    pub dim: f64,
    pub cutoff: f64,
    pub temperature: f64,
    pub time: f64,
    pub family: StateFamily,
}

/// Thermal excitation part `Gamma_ex(t0)` for each register size, in a
/// subohmic reservoir (`0 < dim < 1`, `T > 0`).
pub fn subohmic_excitation_sweep(
    l_values: &[usize],
    params: &SubohmicSweep,
    options: &ContinuumOptions,
) -> Result<Vec<f64>> {
    if !(params.dim > 0.0 && params.dim < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "subohmic sweep needs 0 < dim < 1, got {}",
            params.dim
        )));
    }
    if !(params.temperature > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "subohmic sweep needs T > 0, got {}",
            params.temperature
        )));
    }
    if !(params.time >= 0.0 && params.time.is_finite()) {
        return Err(Error::InvalidArgument(format!("time must be >= 0, got {}", params.time)));
    }
    let spectral = SpectralDensity::ohmic(params.alpha, params.dim, params.cutoff)?;
    let occupation = OccupationDensity::thermal(params.temperature)?;
    l_values
        .par_iter()
        .map(|&len| {
            let d = params.family.difference(len)?;
            let layout = QubitLayout::linear_array(len, params.spacing)?;
            if params.time == 0.0 {
                return Ok(0.0);
            }
            let kernel = Kernel::Tau(params.time);
            let p = continuum(&d, &layout, &spectral, &occupation, kernel, 1.0, options, false)?;
            Ok(p.excitation)
        })
        .collect()
}

/// Engine choice for evaluating the decoherence function.
#[derive(Debug, Clone, PartialEq)]
pub enum DecoherenceModel {
    Discrete(DiscreteModeSet),
    Quadrature {
        spectral: SpectralDensity,
        occupation: OccupationDensity,
        solid_angle_factor: f64,
        options: ContinuumOptions,
    },
    /// Vacuum only; needs a linear-array layout.
    ClosedForm { dim: f64, alpha: f64, cutoff: f64 },
}

impl DecoherenceModel {
    pub fn method(&self) -> DecoherenceMethod {
        match self {
            DecoherenceModel::Discrete(_) => DecoherenceMethod::Discrete,
            DecoherenceModel::Quadrature { .. } => DecoherenceMethod::Quadrature,
            DecoherenceModel::ClosedForm { .. } => DecoherenceMethod::ClosedForm,
        }
    }

    pub fn solid_angle_factor(&self) -> f64 {
        match self {
            DecoherenceModel::Quadrature { solid_angle_factor, .. } => *solid_angle_factor,
            _ => 1.0,
        }
    }

    fn closed_form(&self, d: &DifferenceVector, layout: &QubitLayout) -> Result<ClosedFormContext> {
        let DecoherenceModel::ClosedForm { dim, alpha, cutoff } = self else {
            unreachable!("only called for the closed-form engine")
        };
        let (a, _) = layout.require_lattice()?;
        layout.check_register(d)?;
        ClosedFormContext::new(*dim, *alpha, *cutoff, a, d)
    }

    pub fn evaluate(&self, d: &DifferenceVector, layout: &QubitLayout, t: f64) -> Result<DecoherencePoint> {
        match self {
            DecoherenceModel::Discrete(modes) => gamma_discrete(d, layout, modes, t),
            DecoherenceModel::Quadrature {
                spectral,
                occupation,
                solid_angle_factor,
                options,
            } => gamma_continuum(d, layout, spectral, occupation, t, *solid_angle_factor, options),
            DecoherenceModel::ClosedForm { .. } => Ok(DecoherencePoint {
                vacuum: self.closed_form(d, layout)?.vacuum(t)?,
                excitation: 0.0,
            }),
        }
    }

    /// `lim_{t->0} Gamma / t^2`.
    pub fn leading_coefficient(&self, d: &DifferenceVector, layout: &QubitLayout) -> Result<DecoherencePoint> {
        match self {
            DecoherenceModel::Discrete(modes) => leading_coefficient_discrete(d, layout, modes),
            DecoherenceModel::Quadrature {
                spectral,
                occupation,
                solid_angle_factor,
                options,
            } => leading_coefficient_continuum(d, layout, spectral, occupation, *solid_angle_factor, options),
            DecoherenceModel::ClosedForm { .. } => Ok(DecoherencePoint {
                vacuum: self.closed_form(d, layout)?.leading_coefficient(),
                excitation: 0.0,
            }),
        }
    }

    pub fn series(&self, d: &DifferenceVector, layout: &QubitLayout, times: &[f64]) -> Result<DecoherenceSeries> {
        let points = times
            .par_iter()
            .map(|&t| self.evaluate(d, layout, t))
            .collect::<Result<Vec<_>>>()?;
        Ok(DecoherenceSeries::from_points(
            times.to_vec(),
            &points,
            self.method(),
            self.solid_angle_factor(),
        ))
    }
}

/// Tolerance in `t` of [`dephasing_time`].
pub const DEPHASING_TIME_TOLERANCE: f64 = 1e-6;

/// Smallest `t` with `Gamma(t) = 1`, located from the first upward crossing
/// in `series` and refined by bisection on `gamma_at`.
pub fn dephasing_time<F>(series: &DecoherenceSeries, gamma_at: F) -> Result<Option<f64>>
where
    F: Fn(f64) -> Result<f64>,
{
    let crossing = series
        .gamma_total
        .windows(2)
        .position(|w| w[0] < 1.0 && w[1] >= 1.0);
    let Some(i) = crossing else {
        return Ok(None);
    };
    let (mut lo, mut hi) = (series.times[i], series.times[i + 1]);
    while hi - lo > DEPHASING_TIME_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if gamma_at(mid)? >= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}
