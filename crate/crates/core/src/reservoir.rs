//! Reservoir descriptions: spectral densities, occupation densities and
//! discrete mode sets.
//!
//! Units are `hbar = k_B = 1` with a linear dispersion of unit velocity, so
//! frequencies and wavenumbers are interchangeable in the isotropic pipeline.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Piecewise-linear function on a strictly increasing grid, held at its last
/// value beyond the grid and at its first value before it.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl Tabulated {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.is_empty() || grid.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "tabulated function needs matching nonempty grid and values ({} vs {})",
                grid.len(),
                values.len()
            )));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("tabulated grid must be strictly increasing".into()));
        }
        if grid[0] < 0.0 {
            return Err(Error::InvalidArgument("tabulated grid must start at omega >= 0".into()));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument("tabulated values must be finite and >= 0".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.grid.len();
        if x <= self.grid[0] {
            return self.values[0];
        }
        if x >= self.grid[n - 1] {
            return self.values[n - 1];
        }
        let i = self.grid.partition_point(|&g| g <= x) - 1;
        let (x0, x1) = (self.grid[i], self.grid[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    fn last(&self) -> (f64, f64) {
        let n = self.grid.len();
        (self.grid[n - 1], self.values[n - 1])
    }
}

/// `J(omega)`: mode density times squared coupling.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectralDensity {
    /// `alpha omega^dim exp(-omega / cutoff)`; `dim` may be non-integer.
    OhmicFamily { alpha: f64, dim: f64, cutoff: f64 },
    /// `(alpha / 2) omega` for `omega < omega_max`, zero above.
    BandLimited { alpha: f64, omega_max: f64 },
    Tabulated(Tabulated),
}

impl SpectralDensity {
    pub fn ohmic(alpha: f64, dim: f64, cutoff: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("coupling alpha must be >= 0, got {alpha}")));
        }
        if !(dim > 0.0 && dim.is_finite()) {
            return Err(Error::InvalidArgument(format!("dimension must be > 0, got {dim}")));
        }
        if !(cutoff > 0.0 && cutoff.is_finite()) {
            return Err(Error::InvalidArgument(format!("cutoff must be > 0, got {cutoff}")));
        }
        Ok(SpectralDensity::OhmicFamily { alpha, dim, cutoff })
    }

    pub fn band_limited(alpha: f64, omega_max: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("coupling alpha must be >= 0, got {alpha}")));
        }
        if !(omega_max > 0.0 && omega_max.is_finite()) {
            return Err(Error::InvalidArgument(format!("band edge must be > 0, got {omega_max}")));
        }
        Ok(SpectralDensity::BandLimited { alpha, omega_max })
    }

    pub fn eval(&self, omega: f64) -> Result<f64> {
        if !(omega >= 0.0) {
            return Err(Error::Domain(format!(
                "spectral density is defined for omega >= 0, got {omega}"
            )));
        }
        Ok(self.eval_unchecked(omega))
    }

    pub(crate) fn eval_unchecked(&self, omega: f64) -> f64 {
        match self {
            SpectralDensity::OhmicFamily { alpha, dim, cutoff } => {
                if omega == 0.0 {
                    0.0
                } else {
                    alpha * omega.powf(*dim) * (-omega / cutoff).exp()
                }
            }
            SpectralDensity::BandLimited { alpha, omega_max } => {
                if omega < *omega_max {
                    0.5 * alpha * omega
                } else {
                    0.0
                }
            }
            SpectralDensity::Tabulated(t) => t.eval(omega),
        }
    }

    /// True iff high frequencies are suppressed at least exponentially or the
    /// support is bounded.
    pub fn cutoff_check(&self) -> bool {
        match self {
            SpectralDensity::OhmicFamily { .. } | SpectralDensity::BandLimited { .. } => true,
            SpectralDensity::Tabulated(t) => t.last().1 == 0.0,
        }
    }

    /// Right end of the support, when it is bounded.
    pub fn support_end(&self) -> Option<f64> {
        match self {
            SpectralDensity::OhmicFamily { .. } => None,
            SpectralDensity::BandLimited { omega_max, .. } => Some(*omega_max),
            SpectralDensity::Tabulated(t) => {
                let (g, v) = t.last();
                (v == 0.0).then_some(g)
            }
        }
    }

    /// Frequencies where `J` has a kink or jump.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            SpectralDensity::OhmicFamily { .. } => vec![],
            SpectralDensity::BandLimited { omega_max, .. } => vec![*omega_max],
            SpectralDensity::Tabulated(t) => t.grid().to_vec(),
        }
    }

    /// `(c, p)` with `J(omega) ~ c omega^p` as `omega -> 0`; `c = 0` when `J`
    /// vanishes identically near the origin.
    pub fn small_omega_behaviour(&self) -> (f64, f64) {
        match self {
            SpectralDensity::OhmicFamily { alpha, dim, .. } => (*alpha, *dim),
            SpectralDensity::BandLimited { alpha, .. } => (0.5 * alpha, 1.0),
            SpectralDensity::Tabulated(t) => {
                let (g0, v0) = (t.grid[0], t.values[0]);
                if v0 > 0.0 {
                    (v0, 0.0)
                } else if g0 > 0.0 || t.grid.len() == 1 {
                    (0.0, 0.0)
                } else {
                    ((t.values[1] - v0) / (t.grid[1] - g0), 1.0)
                }
            }
        }
    }
}

/// `1 / (exp(omega / T) - 1)`, or zero at `T = 0`.
pub fn bose_einstein(omega: f64, temperature: f64) -> Result<f64> {
    if !(temperature >= 0.0) {
        return Err(Error::Domain(format!("temperature must be >= 0, got {temperature}")));
    }
    if !(omega > 0.0) {
        return Err(Error::Domain(format!(
            "Bose-Einstein occupation needs omega > 0, got {omega}"
        )));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (omega / temperature).exp_m1())
}

/// `N(omega)`: excitation level of the reservoir modes.
#[derive(Debug, Clone, PartialEq)]
pub enum OccupationDensity {
    Vacuum,
    BoseEinstein { temperature: f64 },
    /// Normal density with the given center and width, scaled to integrate to `total`.
    GaussianPeak { center: f64, width: f64, total: f64 },
    /// All `total` quanta in the single frequency `center`; unbounded.
    DeltaPeak { center: f64, total: f64 },
    /// Arbitrary isotropic occupation, e.g. a frequency-dependent temperature.
    Tabulated(Tabulated),
}

impl OccupationDensity {
    pub fn thermal(temperature: f64) -> Result<Self> {
        if !(temperature >= 0.0 && temperature.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "temperature must be >= 0, got {temperature}"
            )));
        }
        Ok(OccupationDensity::BoseEinstein { temperature })
    }

    pub fn gaussian(center: f64, width: f64, total: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::InvalidArgument(format!("peak width must be > 0, got {width}")));
        }
        if !(total >= 0.0 && total.is_finite()) || !center.is_finite() {
            return Err(Error::InvalidArgument("peak center and total must be finite, total >= 0".into()));
        }
        Ok(OccupationDensity::GaussianPeak { center, width, total })
    }

    pub fn delta(center: f64, total: f64) -> Result<Self> {
        if !(center >= 0.0 && center.is_finite()) {
            return Err(Error::InvalidArgument(format!("peak center must be >= 0, got {center}")));
        }
        if !(total >= 0.0 && total.is_finite()) {
            return Err(Error::InvalidArgument(format!("peak total must be >= 0, got {total}")));
        }
        Ok(OccupationDensity::DeltaPeak { center, total })
    }

    /// True for the delta peak, which needs the discrete-excitation path.
    pub fn is_unbounded(&self) -> bool {
        matches!(self, OccupationDensity::DeltaPeak { .. })
    }

    pub fn is_vacuum(&self) -> bool {
        match self {
            OccupationDensity::Vacuum => true,
            OccupationDensity::BoseEinstein { temperature } => *temperature == 0.0,
            OccupationDensity::GaussianPeak { total, .. }
            | OccupationDensity::DeltaPeak { total, .. } => *total == 0.0,
            OccupationDensity::Tabulated(t) => t.values().iter().all(|&v| v == 0.0),
        }
    }

    /// Bounded (continuous) part of the occupation at `omega > 0`. A delta
    /// peak has no continuous part.
    pub fn eval(&self, omega: f64) -> f64 {
        match self {
            OccupationDensity::Vacuum | OccupationDensity::DeltaPeak { .. } => 0.0,
            OccupationDensity::BoseEinstein { temperature } => {
                if *temperature == 0.0 || omega <= 0.0 {
                    if *temperature == 0.0 { 0.0 } else { f64::INFINITY }
                } else {
                    1.0 / (omega / temperature).exp_m1()
                }
            }
            OccupationDensity::GaussianPeak { center, width, total } => {
                gaussian_occupation(*center, *width, *total, omega)
            }
            OccupationDensity::Tabulated(t) => t.eval(omega),
        }
    }

    /// Frequencies where the occupation has sharp features.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            OccupationDensity::GaussianPeak { center, width, .. } => (-10..=10)
                .map(|j| center + j as f64 * width)
                .filter(|&w| w > 0.0)
                .collect(),
            OccupationDensity::Tabulated(t) => t.grid().to_vec(),
            _ => vec![],
        }
    }

    /// Frequency beyond which the occupation is negligible and decaying, if any.
    pub(crate) fn decay_onset(&self) -> f64 {
        match self {
            OccupationDensity::GaussianPeak { center, width, .. } => center + 12.0 * width,
            OccupationDensity::Tabulated(t) => t.last().0,
            OccupationDensity::DeltaPeak { center, .. } => *center,
            _ => 0.0,
        }
    }

    /// `(c, p)` with `1 + 2 N(omega) ~ c omega^p` as `omega -> 0`.
    pub fn small_omega_weight(&self) -> (f64, f64) {
        match self {
            OccupationDensity::Vacuum => (1.0, 0.0),
            OccupationDensity::BoseEinstein { temperature } => {
                if *temperature == 0.0 {
                    (1.0, 0.0)
                } else {
                    (2.0 * temperature, -1.0)
                }
            }
            OccupationDensity::GaussianPeak { center, width, total } => {
                (1.0 + 2.0 * gaussian_occupation(*center, *width, *total, 0.0), 0.0)
            }
            OccupationDensity::DeltaPeak { center, .. } => {
                if *center == 0.0 {
                    (f64::INFINITY, 0.0)
                } else {
                    (1.0, 0.0)
                }
            }
            OccupationDensity::Tabulated(t) => (1.0 + 2.0 * t.values()[0], 0.0),
        }
    }
}

/// `total exp(-(omega - center)^2 / (2 width^2)) / (sqrt(2 pi) width)`.
pub fn gaussian_occupation(center: f64, width: f64, total: f64, omega: f64) -> f64 {
    let z = (omega - center) / width;
    total * (-0.5 * z * z).exp() / ((2.0 * PI).sqrt() * width)
}

/// A single reservoir mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub k: Vec<f64>,
    pub omega: f64,
    pub coupling: Complex64,
    pub occupation: f64,
}

/// Finite set of reservoir modes.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteModeSet {
    modes: Vec<Mode>,
}

impl DiscreteModeSet {
    pub fn new(modes: Vec<Mode>) -> Result<Self> {
        let dim = modes.first().map(|m| m.k.len());
        for (i, m) in modes.iter().enumerate() {
            if Some(m.k.len()) != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim.unwrap_or(0),
                    found: m.k.len(),
                });
            }
            if !(m.omega >= 0.0 && m.omega.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "mode {i} has frequency {}, expected >= 0",
                    m.omega
                )));
            }
            if !(m.occupation >= 0.0 && m.occupation.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "mode {i} has occupation {}, expected >= 0",
                    m.occupation
                )));
            }
            if !(m.coupling.re.is_finite() && m.coupling.im.is_finite())
                || m.k.iter().any(|x| !x.is_finite())
            {
                return Err(Error::InvalidArgument(format!("mode {i} is not finite")));
            }
        }
        Ok(Self { modes })
    }

    /// One 1D mode with `omega = |k|`.
    pub fn single_1d(k: f64, coupling: Complex64, occupation: f64) -> Result<Self> {
        Self::new(vec![Mode {
            k: vec![k],
            omega: k.abs(),
            coupling,
            occupation,
        }])
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Copy with every coupling multiplied by `factor`.
    pub fn scaled_couplings(&self, factor: f64) -> Self {
        Self {
            modes: self
                .modes
                .iter()
                .map(|m| Mode {
                    coupling: m.coupling * factor,
                    ..m.clone()
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, QuadratureOptions};
    use proptest::prelude::*;

    #[test]
    fn ohmic_values() {
        let j = SpectralDensity::ohmic(1.0, 1.0, 20.0).unwrap();
        assert!((j.eval(20.0).unwrap() - 7.357_588_823_428_847).abs() < 1e-12);
        for dim in [0.3, 1.0, 2.5] {
            let j = SpectralDensity::ohmic(2.0, dim, 5.0).unwrap();
            assert_eq!(j.eval(0.0).unwrap(), 0.0);
        }
        assert!(matches!(j.eval(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn band_limited_values() {
        let j = SpectralDensity::band_limited(1.0, 2.0 * PI).unwrap();
        assert!((j.eval(PI).unwrap() - PI / 2.0).abs() < 1e-15);
        assert_eq!(j.eval(2.0 * PI).unwrap(), 0.0);
        assert_eq!(j.eval(7.0).unwrap(), 0.0);
    }

    #[test]
    fn constructors_validate() {
        assert!(SpectralDensity::ohmic(1.0, 0.0, 1.0).is_err());
        assert!(SpectralDensity::ohmic(1.0, 1.0, 0.0).is_err());
        assert!(SpectralDensity::band_limited(1.0, -1.0).is_err());
        assert!(OccupationDensity::gaussian(1.0, 0.0, 1.0).is_err());
        assert!(OccupationDensity::thermal(-1.0).is_err());
        assert!(Tabulated::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(Tabulated::new(vec![0.0, 1.0], vec![1.0, -1.0]).is_err());
    }

    #[test]
    fn cutoff_checks() {
        assert!(SpectralDensity::ohmic(1.0, 1.0, 1.0).unwrap().cutoff_check());
        assert!(SpectralDensity::band_limited(1.0, 1.0).unwrap().cutoff_check());
        let open = Tabulated::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.5]).unwrap();
        assert!(!SpectralDensity::Tabulated(open).cutoff_check());
        let closed = Tabulated::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.0]).unwrap();
        let closed = SpectralDensity::Tabulated(closed);
        assert!(closed.cutoff_check());
        assert_eq!(closed.support_end(), Some(2.0));
    }

    #[test]
    fn bose_einstein_values() {
        let t = 0.7;
        assert!((bose_einstein(t * 2f64.ln(), t).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(bose_einstein(5.0, 0.0).unwrap(), 0.0);
        let want = 1.0 / (0.01f64.exp() - 1.0);
        assert!((bose_einstein(0.01, 1.0).unwrap() - want).abs() < 1e-6);
        assert!((bose_einstein(0.01, 1.0).unwrap() - 99.500_833_331_944_43).abs() < 1e-9);
        assert!(matches!(bose_einstein(0.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn bose_einstein_small_omega_limit() {
        let t = 2.0;
        for x in [1e-3, 1e-5] {
            let omega = x * t;
            let got = bose_einstein(omega, t).unwrap() * omega;
            assert!(((got - t) / t).abs() <= x / 2.0 + 1e-9);
        }
    }

    #[test]
    fn gaussian_peak_values() {
        let n = OccupationDensity::gaussian(PI, 2.0 * PI / 50.0, 10.0).unwrap();
        let peak = 10.0 * 50.0 / ((2.0 * PI).sqrt() * 2.0 * PI);
        assert!((n.eval(PI) - peak).abs() < 1e-12);
        assert!((peak - 31.746_817_967_120_49).abs() < 1e-10);
    }

    #[test]
    fn gaussian_normalisation() {
        for (center, width, total) in [(PI, 0.1, 10.0), (3.0, 1.5, 2.0)] {
            let n = OccupationDensity::gaussian(center, width, total).unwrap();
            let opts = QuadratureOptions {
                rel_tol: 1e-13,
                ..QuadratureOptions::default()
            };
            let r = integrate(|w| n.eval(w), center - 8.0 * width, center + 8.0 * width, &[center], &opts)
                .unwrap();
            assert!(((r.value - total) / total).abs() < 1e-8);
        }
    }

    #[test]
    fn tabulated_interpolation() {
        let t = Tabulated::new(vec![1.0, 2.0, 4.0], vec![0.0, 2.0, 1.0]).unwrap();
        assert_eq!(t.eval(0.5), 0.0);
        assert_eq!(t.eval(1.5), 1.0);
        assert_eq!(t.eval(3.0), 1.5);
        assert_eq!(t.eval(9.0), 1.0);
    }

    #[test]
    fn mode_set_validation() {
        let bad = Mode {
            k: vec![1.0],
            omega: -1.0,
            coupling: Complex64::new(1.0, 0.0),
            occupation: 0.0,
        };
        assert!(DiscreteModeSet::new(vec![bad]).is_err());
        let a = Mode {
            k: vec![1.0],
            omega: 1.0,
            coupling: Complex64::new(1.0, 0.0),
            occupation: 0.0,
        };
        let b = Mode {
            k: vec![1.0, 0.0],
            ..a.clone()
        };
        assert!(matches!(
            DiscreteModeSet::new(vec![a, b]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    proptest! {
        #[test]
        fn spectral_densities_nonnegative(
            alpha in 0.0f64..10.0, dim in 0.05f64..6.0, cutoff in 0.1f64..100.0, omega in 0.0f64..500.0
        ) {
            let j = SpectralDensity::ohmic(alpha, dim, cutoff).unwrap();
            prop_assert!(j.eval(omega).unwrap() >= 0.0);
            let b = SpectralDensity::band_limited(alpha, cutoff).unwrap();
            prop_assert!(b.eval(omega).unwrap() >= 0.0);
        }

        #[test]
        fn tabulated_nonnegative(values in prop::collection::vec(0.0f64..5.0, 2..10), omega in 0.0f64..20.0) {
            let grid: Vec<f64> = (0..values.len()).map(|i| i as f64).collect();
            let j = SpectralDensity::Tabulated(Tabulated::new(grid, values).unwrap());
            prop_assert!(j.eval(omega).unwrap() >= 0.0);
        }
    }
}
