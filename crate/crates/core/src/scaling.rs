//! Register-size sweeps and power-law exponents of `Gamma(L)`.
//!
//! Exponents are least-squares slopes of `ln Gamma` against `ln L` over
//! sliding windows of consecutive sizes. With the default thresholds a
//! terminal slope of at least 1.9 counts as quadratic, one at most 1.1 as
//! linear, and anything between as superlinear.

use std::fmt;
use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;

use crate::decoherence::{ContinuumOptions, DecoherenceModel, DecoherencePoint};
use crate::error::{Error, Result};
use crate::register::{DifferenceVector, QubitLayout, StateFamily};
use crate::reservoir::{OccupationDensity, SpectralDensity};

/// Values below this are left out of fits.
pub const FIT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingThresholds {
    pub window: usize,
    pub linear: f64,
    pub crossover: f64,
    pub quadratic: f64,
}

impl Default for ScalingThresholds {
    fn default() -> Self {
        Self {
            window: 4,
            linear: 1.1,
            crossover: 1.5,
            quadratic: 1.9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingClass {
    Linear,
    Superlinear,
    QuadraticResonant,
}

impl fmt::Display for ScalingClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScalingClass::Linear => "linear",
            ScalingClass::Superlinear => "superlinear",
            ScalingClass::QuadraticResonant => "quadratic-resonant",
        })
    }
}

/// Least-squares line through `(ln L, ln Gamma)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub log_prefactor: f64,
    /// Root-mean-square residual in `ln Gamma`.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowFit {
    pub l_start: usize,
    pub l_end: usize,
    pub exponent: f64,
    pub residual: f64,
}

/// Fit `Gamma = c L^p` over all points with `Gamma >= FIT_FLOOR`.
pub fn fit_power_law(l_values: &[f64], gamma_values: &[f64]) -> Result<PowerLawFit> {
    if l_values.len() != gamma_values.len() {
        return Err(Error::DimensionMismatch {
            expected: l_values.len(),
            found: gamma_values.len(),
        });
    }
    let (x, y): (Vec<f64>, Vec<f64>) = l_values
        .iter()
        .zip(gamma_values)
        .filter(|(&l, &g)| l > 0.0 && g >= FIT_FLOOR)
        .map(|(&l, &g)| (l.ln(), g.ln()))
        .unzip();
    if x.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "a power-law fit needs at least 2 usable points, got {}",
            x.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all sizes are equal".into()));
    }
    let exponent = sxy / sxx;
    let log_prefactor = my - exponent * mx;
    let ss: f64 = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (b - log_prefactor - exponent * a).powi(2))
        .sum();
    Ok(PowerLawFit {
        exponent,
        log_prefactor,
        residual: (ss / n).sqrt(),
    })
}

/// Fits over every run of `window` consecutive usable points.
pub fn window_exponents(l_values: &[usize], gamma_values: &[f64], window: usize) -> Vec<WindowFit> {
    let usable: Vec<(usize, f64)> = l_values
        .iter()
        .zip(gamma_values)
        .filter(|(_, &g)| g >= FIT_FLOOR)
        .map(|(&l, &g)| (l, g))
        .collect();
    if window < 2 || usable.len() < window {
        return Vec::new();
    }
    usable
        .windows(window)
        .filter_map(|w| {
            let ls: Vec<f64> = w.iter().map(|p| p.0 as f64).collect();
            let gs: Vec<f64> = w.iter().map(|p| p.1).collect();
            fit_power_law(&ls, &gs).ok().map(|fit| WindowFit {
                l_start: w[0].0,
                l_end: w[window - 1].0,
                exponent: fit.exponent,
                residual: fit.residual,
            })
        })
        .collect()
}

pub fn classify(terminal_exponent: f64, thresholds: &ScalingThresholds) -> ScalingClass {
    if terminal_exponent >= thresholds.quadratic {
        ScalingClass::QuadraticResonant
    } else if terminal_exponent > thresholds.linear {
        ScalingClass::Superlinear
    } else {
        ScalingClass::Linear
    }
}

/// End size of the first window whose slope is below the crossover threshold.
pub fn crossover_size(windows: &[WindowFit], threshold: f64) -> Option<usize> {
    windows.iter().find(|w| w.exponent < threshold).map(|w| w.l_end)
}

/// Running maximum, the upper envelope of an oscillating sequence.
pub fn running_max(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .scan(f64::NEG_INFINITY, |m, &v| {
            *m = m.max(v);
            Some(*m)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub l_values: Vec<usize>,
    pub points: Vec<DecoherencePoint>,
    pub gamma_values: Vec<f64>,
    pub window_exponents: Vec<WindowFit>,
    pub classification: ScalingClass,
    pub crossover_l: Option<usize>,
}

impl ScalingReport {
    pub fn from_points(
        l_values: Vec<usize>,
        points: Vec<DecoherencePoint>,
        thresholds: &ScalingThresholds,
    ) -> Result<Self> {
        let gamma_values: Vec<f64> = points.iter().map(DecoherencePoint::total).collect();
        let window_exponents = window_exponents(&l_values, &gamma_values, thresholds.window);
        let Some(terminal) = window_exponents.last() else {
            return Err(Error::InsufficientData(format!(
                "need {} sizes with decoherence above {FIT_FLOOR:e}",
                thresholds.window
            )));
        };
        Ok(Self {
            classification: classify(terminal.exponent, thresholds),
            crossover_l: crossover_size(&window_exponents, thresholds.crossover),
            l_values,
            points,
            gamma_values,
            window_exponents,
        })
    }

    pub fn terminal_exponent(&self) -> f64 {
        self.window_exponents.last().map_or(f64::NAN, |w| w.exponent)
    }

    /// Fit over the sizes in `[lower, upper]`.
    pub fn exponent_between(&self, lower: usize, upper: usize) -> Result<PowerLawFit> {
        let (ls, gs): (Vec<f64>, Vec<f64>) = self
            .l_values
            .iter()
            .zip(&self.gamma_values)
            .filter(|(&l, _)| l >= lower && l <= upper)
            .map(|(&l, &g)| (l as f64, g))
            .unzip();
        fit_power_law(&ls, &gs)
    }
}

pub type DifferenceGenerator = Arc<dyn Fn(usize) -> Result<DifferenceVector> + Send + Sync>;

/// Register states to sweep over.
#[derive(Clone)]
pub enum StateGenerator {
    Family(StateFamily),
    Custom(DifferenceGenerator),
}

impl StateGenerator {
    pub fn generate(&self, len: usize) -> Result<DifferenceVector> {
        match self {
            StateGenerator::Family(f) => f.difference(len),
            StateGenerator::Custom(g) => g(len),
        }
    }
}

impl fmt::Debug for StateGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateGenerator::Family(fam) => write!(f, "Family({})", fam.name()),
            StateGenerator::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// What is evaluated at each size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observable {
    At(f64),
    /// `lim_{t->0} Gamma / t^2`.
    LeadingOrder,
}

/// Evaluate the decoherence function of a linear array for each size and fit
/// its exponents.
pub fn sweep(
    states: &StateGenerator,
    l_values: &[usize],
    model: &DecoherenceModel,
    observable: Observable,
    spacing: f64,
    thresholds: &ScalingThresholds,
) -> Result<ScalingReport> {
    if l_values.len() < thresholds.window.max(4) {
        return Err(Error::InsufficientData(format!(
            "a sweep needs at least {} sizes, got {}",
            thresholds.window.max(4),
            l_values.len()
        )));
    }
    if l_values.windows(2).any(|w| w[1] <= w[0]) || l_values[0] == 0 {
        return Err(Error::InvalidArgument(
            "sizes must be positive and strictly increasing".into(),
        ));
    }
    let points = l_values
        .par_iter()
        .map(|&len| {
            let d = states.generate(len)?;
            let layout = QubitLayout::linear_array(len, spacing)?;
            match observable {
                Observable::At(t) => model.evaluate(&d, &layout, t),
                Observable::LeadingOrder => model.leading_coefficient(&d, &layout),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    ScalingReport::from_points(l_values.to_vec(), points, thresholds)
}

/// Finite-size reference model: band-limited `J = alpha w / 2` up to
/// `2 pi`, Gaussian occupation at `pi` with total 10, two-sided solid angle.
/// A zero width selects the delta-peak limit.
pub fn finite_size_model(width: f64, options: ContinuumOptions) -> Result<DecoherenceModel> {
    let occupation = if width == 0.0 {
        OccupationDensity::delta(PI, 10.0)?
    } else {
        OccupationDensity::gaussian(PI, width, 10.0)?
    };
    Ok(DecoherenceModel::Quadrature {
        spectral: SpectralDensity::band_limited(1.0, 2.0 * PI)?,
        occupation,
        solid_angle_factor: 2.0,
        options,
    })
}

/// Crossover size of the leading-order GHZ' decoherence for each occupation
/// width, `None` where the slope never drops below the threshold.
pub fn crossover_sigma(
    widths: &[f64],
    l_values: &[usize],
    options: ContinuumOptions,
    thresholds: &ScalingThresholds,
) -> Result<Vec<Option<usize>>> {
    widths
        .iter()
        .map(|&w| {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidArgument(format!("width must be >= 0, got {w}")));
            }
            let model = finite_size_model(w, options)?;
            let report = sweep(
                &StateGenerator::Family(StateFamily::GhzPrime),
                l_values,
                &model,
                Observable::LeadingOrder,
                1.0,
                thresholds,
            )?;
            Ok(report.crossover_l)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeCrossover {
    pub crossover_l: Option<usize>,
    /// Whether `a L` at the crossover lies within a factor 2 of `t`.
    pub near_time: bool,
    pub initial_exponent: f64,
    pub report: ScalingReport,
}

impl TimeCrossover {
    pub fn entered(&self) -> bool {
        self.crossover_l.is_some() && self.near_time
    }
}

/// Does the GHZ quadratic regime end once the array outgrows the light cone
/// `a L ~ t`? Uses the closed-form vacuum engine.
pub fn time_crossover(
    dim: f64,
    t: f64,
    l_values: &[usize],
    cutoff: f64,
    spacing: f64,
    thresholds: &ScalingThresholds,
) -> Result<TimeCrossover> {
    let model = DecoherenceModel::ClosedForm {
        dim,
        alpha: 1.0,
        cutoff,
    };
    let report = sweep(
        &StateGenerator::Family(StateFamily::Ghz),
        l_values,
        &model,
        Observable::At(t),
        spacing,
        thresholds,
    )?;
    let crossover_l = report.crossover_l;
    let near_time = crossover_l.is_some_and(|l| {
        let size = spacing * l as f64;
        size >= 0.5 * t && size <= 2.0 * t
    });
    Ok(TimeCrossover {
        crossover_l,
        near_time,
        initial_exponent: report.window_exponents[0].exponent,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reservoir::DiscreteModeSet;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn sizes() -> Vec<usize> {
        (1..=20).map(|i| 2 * i).collect()
    }

    #[test]
    fn fitter_recovers_exact_powers() {
        let ls: Vec<f64> = sizes().iter().map(|&l| l as f64).collect();
        for p in [1.0, 2.0] {
            let gs: Vec<f64> = ls.iter().map(|l| 3.7 * l.powf(p)).collect();
            let fit = fit_power_law(&ls, &gs).unwrap();
            assert!((fit.exponent - p).abs() < 1e-9);
            assert!((fit.log_prefactor - 3.7f64.ln()).abs() < 1e-9);
            assert!(fit.residual < 1e-9);
        }
    }

    #[test]
    fn fitter_skips_tiny_values() {
        let ls = [1.0, 2.0, 3.0, 4.0];
        let gs = [0.0, 4.0, 9.0, 16.0];
        assert!((fit_power_law(&ls, &gs).unwrap().exponent - 2.0).abs() < 1e-12);
        assert!(matches!(
            fit_power_law(&ls, &[0.0, 0.0, 1e-13, 1.0]),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn windows_and_crossover() {
        let ls: Vec<usize> = (1..=12).collect();
        // Quadratic up to 6, linear after.
        let gs: Vec<f64> = ls
            .iter()
            .map(|&l| if l <= 6 { (l * l) as f64 } else { 6.0 * l as f64 })
            .collect();
        let w = window_exponents(&ls, &gs, 4);
        assert_eq!(w.len(), 9);
        assert!((w[0].exponent - 2.0).abs() < 1e-12);
        assert!((w[8].exponent - 1.0).abs() < 1e-12);
        let c = crossover_size(&w, 1.5).unwrap();
        assert!((7..=10).contains(&c));
        assert_eq!(crossover_size(&w[..2], 1.5), None);
    }

    #[test]
    fn classification_bands() {
        let t = ScalingThresholds::default();
        assert_eq!(classify(2.0, &t), ScalingClass::QuadraticResonant);
        assert_eq!(classify(1.9, &t), ScalingClass::QuadraticResonant);
        assert_eq!(classify(1.5, &t), ScalingClass::Superlinear);
        assert_eq!(classify(1.1, &t), ScalingClass::Linear);
        assert_eq!(classify(0.4, &t), ScalingClass::Linear);
    }

    #[test]
    fn running_max_is_envelope() {
        assert_eq!(running_max(&[1.0, 3.0, 2.0, 5.0, 0.0]), vec![1.0, 3.0, 3.0, 5.0, 5.0]);
    }

    #[test]
    fn sweep_needs_four_sizes() {
        let model = DecoherenceModel::ClosedForm {
            dim: 1.0,
            alpha: 1.0,
            cutoff: 20.0,
        };
        let states = StateGenerator::Family(StateFamily::Ghz);
        let t = ScalingThresholds::default();
        assert!(matches!(
            sweep(&states, &[2, 4, 6], &model, Observable::At(20.0), 1.0, &t),
            Err(Error::InsufficientData(_))
        ));
        assert!(sweep(&states, &[2, 6, 4, 8], &model, Observable::At(20.0), 1.0, &t).is_err());
    }

    #[test]
    fn resonant_mode_is_exactly_quadratic() {
        let modes = DiscreteModeSet::single_1d(PI, Complex64::new(1.0, 0.0), 0.0).unwrap();
        let report = sweep(
            &StateGenerator::Family(StateFamily::GhzPrime),
            &sizes(),
            &DecoherenceModel::Discrete(modes),
            Observable::At(1.0),
            1.0,
            &ScalingThresholds::default(),
        )
        .unwrap();
        for w in &report.window_exponents {
            assert!((w.exponent - 2.0).abs() < 1e-6);
        }
        assert_eq!(report.classification, ScalingClass::QuadraticResonant);
        assert_eq!(report.crossover_l, None);
    }

    #[test]
    fn custom_generator() {
        let states = StateGenerator::Custom(Arc::new(|len| Ok(DifferenceVector::uniform(len))));
        let modes = DiscreteModeSet::single_1d(0.0, Complex64::new(1.0, 0.0), 0.0).unwrap();
        let report = sweep(
            &states,
            &[1, 2, 3, 4, 5],
            &DecoherenceModel::Discrete(modes),
            Observable::LeadingOrder,
            1.0,
            &ScalingThresholds::default(),
        )
        .unwrap();
        assert!((report.terminal_exponent() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn time_crossover_short_time() {
        let ls: Vec<usize> = (1..=15).map(|i| 2 * i).collect();
        let tc = time_crossover(1.0, 2.0, &ls, 20.0, 1.0, &ScalingThresholds::default()).unwrap();
        assert!(tc.crossover_l.unwrap() <= 8);
    }

    proptest! {
        #[test]
        fn classification_ignores_scale(c in 1e-6..1e6f64, p in 0.2..2.2f64) {
            let ls: Vec<usize> = (1..=10).map(|i| 3 * i).collect();
            let base: Vec<f64> = ls.iter().map(|&l| (l as f64).powf(p) * (1.0 + 0.1 * (l as f64).sin())).collect();
            let scaled: Vec<f64> = base.iter().map(|g| c * g).collect();
            let t = ScalingThresholds::default();
            let a = window_exponents(&ls, &base, 4);
            let b = window_exponents(&ls, &scaled, 4);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x.exponent - y.exponent).abs() < 1e-9);
            }
            prop_assert_eq!(
                classify(a.last().unwrap().exponent, &t),
                classify(b.last().unwrap().exponent, &t)
            );
        }
    }
}
