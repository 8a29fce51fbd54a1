//! Globally adaptive Gauss-Kronrod quadrature on finite intervals.
//!
//! The interval is first cut at caller-supplied breakpoints and into panels no
//! wider than `max_panel_width`, which is how oscillatory integrands get
//! resolved: the caller knows the fastest oscillation and caps the panel width
//! accordingly. The panel with the largest error estimate is then bisected
//! until the summed error meets the tolerance or the evaluation budget runs
//! out.
//!
//! Panel values are combined by pairwise summation in left-to-right order, so
//! the result does not depend on the order in which panels were refined.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// 15-point Kronrod abscissae on [-1, 1], nonnegative half. Odd indices are
// the embedded 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const EVALS_PER_PANEL: usize = 15;

/// Controls for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Upper bound on the width of the initial panels.
    pub max_panel_width: f64,
    /// Budget of integrand evaluations, including the initial pass.
    pub max_evaluations: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 0.0,
            max_panel_width: f64::INFINITY,
            max_evaluations: 20_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lower: f64,
    upper: f64,
    value: f64,
    error: f64,
    abs_value: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.lower.total_cmp(&self.lower))
    }
}

/// One 15-point Kronrod panel with the QUADPACK error heuristic.
fn kronrod_panel<F: Fn(f64) -> f64>(f: &F, lower: f64, upper: f64) -> Panel {
    let center = 0.5 * (lower + upper);
    let half = 0.5 * (upper - lower);

    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = kronrod.abs();
    let mut f1 = [0.0; 7];
    let mut f2 = [0.0; 7];

    for j in 0..7 {
        let dx = half * XGK[j];
        let a = f(center - dx);
        let b = f(center + dx);
        f1[j] = a;
        f2[j] = b;
        kronrod += WGK[j] * (a + b);
        abs_sum += WGK[j] * (a.abs() + b.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (a + b);
        }
    }

    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((f1[j] - mean).abs() + (f2[j] - mean).abs());
    }

    let value = kronrod * half;
    let abs_value = abs_sum * half.abs();
    let asc = asc * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && error != 0.0 {
        error = asc * (200.0 * error / asc).powf(1.5).min(1.0);
    }
    let roundoff = 50.0 * f64::EPSILON * abs_value;
    if roundoff > f64::MIN_POSITIVE {
        error = error.max(roundoff);
    }
    Panel {
        lower,
        upper,
        value,
        error,
        abs_value,
    }
}

/// Sum in a fixed binary tree so rounding does not depend on refinement order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n if n <= 8 => values.iter().sum(),
        n => {
            let (left, right) = values.split_at(n / 2);
            pairwise_sum(left) + pairwise_sum(right)
        }
    }
}

/// Integrate `f` over `[lower, upper]`.
///
/// `breakpoints` outside the open interval are ignored; the rest become panel
/// edges, which is where discontinuities or sharp features of `f` belong.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    lower: f64,
    upper: f64,
    breakpoints: &[f64],
    options: &QuadratureOptions,
) -> Result<QuadratureResult> {
    if !(lower.is_finite() && upper.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "integration limits must be finite, got [{lower}, {upper}]"
        )));
    }
    if upper < lower {
        return Err(Error::InvalidArgument(format!(
            "integration limits out of order: [{lower}, {upper}]"
        )));
    }
    if upper == lower {
        return Ok(QuadratureResult {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }

    let mut edges: Vec<f64> = std::iter::once(lower)
        .chain(breakpoints.iter().copied().filter(|&b| b > lower && b < upper))
        .chain(std::iter::once(upper))
        .collect();
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    let mut heap = BinaryHeap::new();
    let mut evaluations = 0usize;
    for pair in edges.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let pieces = if options.max_panel_width.is_finite() && options.max_panel_width > 0.0 {
            ((b - a) / options.max_panel_width).ceil().max(1.0) as usize
        } else {
            1
        };
        let width = (b - a) / pieces as f64;
        for i in 0..pieces {
            let lo = a + width * i as f64;
            let hi = if i + 1 == pieces { b } else { a + width * (i + 1) as f64 };
            heap.push(kronrod_panel(&f, lo, hi));
            evaluations += EVALS_PER_PANEL;
        }
    }

    let mut total: f64 = heap.iter().map(|p| p.value).sum();
    let mut total_error: f64 = heap.iter().map(|p| p.error).sum();
    let mut total_abs: f64 = heap.iter().map(|p| p.abs_value).sum();

    loop {
        // Each panel error is floored at 50 eps |f|; asking for less is futile.
        let target = options
            .abs_tol
            .max(options.rel_tol * total.abs())
            .max(100.0 * f64::EPSILON * total_abs);
        if total_error <= target {
            break;
        }
        let worst = *heap.peek().expect("at least one panel");
        let mid = 0.5 * (worst.lower + worst.upper);
        let splittable = mid > worst.lower && mid < worst.upper;
        if !splittable || evaluations + 2 * EVALS_PER_PANEL > options.max_evaluations {
            return Err(Error::QuadratureFailure {
                lower: worst.lower,
                upper: worst.upper,
                estimate: total,
                error: total_error,
                evaluations,
            });
        }
        heap.pop();
        let left = kronrod_panel(&f, worst.lower, mid);
        let right = kronrod_panel(&f, mid, worst.upper);
        evaluations += 2 * EVALS_PER_PANEL;
        total += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        total_abs += left.abs_value + right.abs_value - worst.abs_value;
        heap.push(left);
        heap.push(right);
    }

    let mut panels = heap.into_vec();
    panels.sort_by(|a, b| a.lower.total_cmp(&b.lower));
    let values: Vec<f64> = panels.iter().map(|p| p.value).collect();
    let errors: Vec<f64> = panels.iter().map(|p| p.error).collect();
    Ok(QuadratureResult {
        value: pairwise_sum(&values),
        error: pairwise_sum(&errors),
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn opts(rel_tol: f64) -> QuadratureOptions {
        QuadratureOptions {
            rel_tol,
            ..QuadratureOptions::default()
        }
    }

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x.powi(5) - 3.0 * x * x, 0.0, 2.0, &[], &opts(1e-14)).unwrap();
        assert!((r.value - (64.0 / 6.0 - 8.0)).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_with_panel_cap() {
        let o = QuadratureOptions {
            max_panel_width: 0.05,
            ..opts(1e-12)
        };
        let r = integrate(|x| (50.0 * x).cos() * (-x).exp(), 0.0, 10.0, &[], &o).unwrap();
        // Closed form of the integral of e^{-x} cos(50 x) over [0, 10].
        let w: f64 = 50.0;
        let exact = (1.0 + (-10.0f64).exp() * (w * (w * 10.0).sin() - (w * 10.0).cos()))
            / (1.0 + w * w);
        assert!(((r.value - exact) / exact).abs() < 1e-11);
    }

    #[test]
    fn algebraic_endpoint_singularity() {
        let r = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, &[], &opts(1e-10)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn discontinuity_at_breakpoint() {
        let step = |x: f64| if x < PI { 1.0 } else { 0.0 };
        let r = integrate(step, 0.0, 5.0, &[PI], &opts(1e-14)).unwrap();
        assert!((r.value - PI).abs() < 1e-14);
    }

    #[test]
    fn empty_interval() {
        let r = integrate(|x| x, 1.0, 1.0, &[], &opts(1e-9)).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn budget_exhaustion_reports_diagnostics() {
        let o = QuadratureOptions {
            max_evaluations: 100,
            ..opts(1e-15)
        };
        let err = integrate(|x: f64| (1.0 / x).sin(), 1e-6, 1.0, &[], &o).unwrap_err();
        match err {
            Error::QuadratureFailure { evaluations, .. } => assert!(evaluations <= 100),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn pairwise_sum_matches_naive_on_small_input() {
        let v: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 5050.0);
    }
}
