//! Dephasing susceptibility `gamma_d(k) = |sum_l d_l exp(-i k.r_l)|^2`.
//!
//! Three routes are provided and cross-checked in the tests: the double sum
//! over qubit pairs, the squared modulus of the discrete Fourier amplitude,
//! and the closed forms for the GHZ and GHZ' difference vectors on a linear
//! lattice.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadratureOptions};
use crate::register::{DifferenceVector, QubitLayout};

/// Below this value of the closed-form denominator the removable singularity
/// is resolved by the direct sum instead.
pub const SINGULARITY_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SusceptibilityMethod {
    Direct,
    Fourier,
    ClosedForm,
}

impl SusceptibilityMethod {
    pub fn name(self) -> &'static str {
        match self {
            SusceptibilityMethod::Direct => "direct",
            SusceptibilityMethod::Fourier => "fourier",
            SusceptibilityMethod::ClosedForm => "closed-form",
        }
    }
}

/// Susceptibility sampled on a grid of scalar wavenumbers (1D layouts).
#[derive(Debug, Clone, PartialEq)]
pub struct SusceptibilityCurve {
    pub k_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub method: SusceptibilityMethod,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `sum_{l,m} d_l d_m cos(k . (r_l - r_m))`.
pub fn gamma_direct(d: &DifferenceVector, layout: &QubitLayout, k: &[f64]) -> Result<f64> {
    layout.check_register(d)?;
    layout.check_wave_vector(k)?;
    let pos = layout.positions();
    let e = d.entries();
    let mut total = 0.0;
    for l in 0..e.len() {
        if e[l] == 0 {
            continue;
        }
        // Diagonal terms contribute exactly d_l^2 = 1.
        total += 1.0;
        for m in (l + 1)..e.len() {
            if e[m] == 0 {
                continue;
            }
            let phase = dot(k, &pos[l]) - dot(k, &pos[m]);
            total += 2.0 * (e[l] * e[m]) as f64 * phase.cos();
        }
    }
    Ok(total)
}

/// Fourier amplitude `sum_l d_l exp(-i k . r_l)`.
pub fn fourier_amplitude(d: &DifferenceVector, layout: &QubitLayout, k: &[f64]) -> Result<Complex64> {
    layout.check_register(d)?;
    layout.check_wave_vector(k)?;
    Ok(d
        .entries()
        .iter()
        .zip(layout.positions())
        .filter(|(&e, _)| e != 0)
        .map(|(&e, r)| Complex64::from_polar(e as f64, -dot(k, r)))
        .sum())
}

/// `|sum_l d_l exp(-i k . r_l)|^2`.
pub fn gamma_fourier(d: &DifferenceVector, layout: &QubitLayout, k: &[f64]) -> Result<f64> {
    Ok(fourier_amplitude(d, layout, k)?.norm_sqr())
}

fn check_closed_form_args(len: usize, spacing: f64) -> Result<()> {
    if len < 2 || len % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "closed forms need an even register size >= 2, got {len}"
        )));
    }
    if !(spacing > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lattice spacing must be positive, got {spacing}"
        )));
    }
    Ok(())
}

/// `sin^2(a k L / 2) / sin^2(a k / 2)` for the all-ones vector; the value at
/// `a k = 2 pi n` is the limit `L^2`.
pub fn gamma_ghz_closed(len: usize, spacing: f64, k: f64) -> Result<f64> {
    check_closed_form_args(len, spacing)?;
    let half = 0.5 * spacing * k;
    let denom = half.sin().powi(2);
    if denom < SINGULARITY_THRESHOLD {
        let layout = QubitLayout::linear_array(len, spacing)?;
        return gamma_direct(&DifferenceVector::uniform(len), &layout, &[k]);
    }
    Ok((half * len as f64).sin().powi(2) / denom)
}

/// `sin^2(a k L / 2) / cos^2(a k / 2)` for the alternating vector (even `L`);
/// the value at odd multiples of `pi` is the limit `L^2`.
pub fn gamma_ghz_prime_closed(len: usize, spacing: f64, k: f64) -> Result<f64> {
    check_closed_form_args(len, spacing)?;
    let half = 0.5 * spacing * k;
    let denom = half.cos().powi(2);
    if denom < SINGULARITY_THRESHOLD {
        let layout = QubitLayout::linear_array(len, spacing)?;
        return gamma_direct(&DifferenceVector::alternating(len), &layout, &[k]);
    }
    Ok((half * len as f64).sin().powi(2) / denom)
}

/// Zeros of the GHZ' susceptibility, `a k = pi + 2 pi n / L` for `n` not a
/// multiple of `L`, restricted to `a k` in `[lower, upper]`.
pub fn ghz_prime_zeros(len: usize, spacing: f64, lower: f64, upper: f64) -> Result<Vec<f64>> {
    check_closed_form_args(len, spacing)?;
    let step = 2.0 * PI / len as f64;
    let n_min = ((lower * spacing - PI) / step).ceil() as i64;
    let n_max = ((upper * spacing - PI) / step).floor() as i64;
    Ok((n_min..=n_max)
        .filter(|n| n.rem_euclid(len as i64) != 0)
        .map(|n| (PI + step * n as f64) / spacing)
        .collect())
}

/// Distance between the two zeros of the GHZ' susceptibility that flank the
/// peak at `a k = pi`, located by bisection on the Fourier amplitude.
pub fn ghz_prime_zero_gap(len: usize, spacing: f64) -> Result<f64> {
    check_closed_form_args(len, spacing)?;
    let layout = QubitLayout::linear_array(len, spacing)?;
    let d = DifferenceVector::alternating(len);
    let center = 0.5 * spacing * (len - 1) as f64;
    // For an antisymmetric d about the array center the centred amplitude is
    // purely imaginary, so its imaginary part changes sign at every zero.
    let signed = |k: f64| -> f64 {
        let amp = fourier_amplitude(&d, &layout, &[k]).expect("consistent layout");
        (amp * Complex64::from_polar(1.0, k * center)).im
    };
    let peak = PI / spacing;
    let scan = PI / (spacing * len as f64 * 16.0);
    let find = |direction: f64| -> f64 {
        let mut lo = peak;
        let mut f_lo = signed(lo);
        loop {
            let hi = lo + direction * scan;
            let f_hi = signed(hi);
            if f_lo * f_hi <= 0.0 {
                return bisect(&signed, lo, hi);
            }
            lo = hi;
            f_lo = f_hi;
        }
    };
    Ok(find(1.0) - find(-1.0))
}

fn bisect<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid == a || mid == b {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fa * fm < 0.0 {
            b = mid;
        } else {
            a = mid;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

/// Integral of `gamma_d` over one reciprocal unit cell `[0, 2 pi / a)`.
///
/// On a lattice the exact value is `(2 pi / V) |d|^2 <= 2 pi L / V`.
pub fn parseval_integral(d: &DifferenceVector, layout: &QubitLayout) -> Result<f64> {
    let (spacing, _) = layout.require_lattice()?;
    layout.check_register(d)?;
    let period = 2.0 * PI / spacing;
    let options = QuadratureOptions {
        rel_tol: 1e-12,
        abs_tol: 1e-300,
        max_panel_width: period / (4.0 * d.len() as f64),
        ..QuadratureOptions::default()
    };
    let res = integrate(
        |k| gamma_fourier(d, layout, &[k]).expect("validated above"),
        0.0,
        period,
        &[],
        &options,
    )?;
    Ok(res.value)
}

/// Exact right-hand side of the Parseval identity, `(2 pi / V) |d|^2`.
pub fn parseval_exact(d: &DifferenceVector, layout: &QubitLayout) -> Result<f64> {
    let (_, volume) = layout.require_lattice()?;
    Ok(2.0 * PI / volume * d.norm_squared() as f64)
}

/// Sample a 1D susceptibility curve.
pub fn susceptibility_curve(
    d: &DifferenceVector,
    layout: &QubitLayout,
    k_grid: &[f64],
    method: SusceptibilityMethod,
) -> Result<SusceptibilityCurve> {
    let values = k_grid
        .iter()
        .map(|&k| match method {
            SusceptibilityMethod::Direct => gamma_direct(d, layout, &[k]),
            SusceptibilityMethod::Fourier => gamma_fourier(d, layout, &[k]),
            SusceptibilityMethod::ClosedForm => {
                let (a, _) = layout.require_lattice()?;
                layout.check_register(d)?;
                if *d == DifferenceVector::uniform(d.len()) {
                    gamma_ghz_closed(d.len(), a, k)
                } else if *d == DifferenceVector::alternating(d.len()) {
                    gamma_ghz_prime_closed(d.len(), a, k)
                } else {
                    Err(Error::InvalidArgument(
                        "closed forms exist only for GHZ and GHZ' difference vectors".into(),
                    ))
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SusceptibilityCurve {
        k_grid: k_grid.to_vec(),
        values,
        method,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

/// Distribution of `gamma_{i-j}(k)` over uniformly random basis pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct SusceptibilityHistogram {
    pub mean: f64,
    pub stddev: f64,
    /// Standard error of the mean, `stddev / sqrt(n)`.
    pub std_error: f64,
    pub bins: Vec<HistogramBin>,
    sorted: Vec<f64>,
}

impl SusceptibilityHistogram {
    /// Fraction of samples with `gamma >= threshold`.
    pub fn tail_fraction(&self, threshold: f64) -> f64 {
        let below = self.sorted.partition_point(|&g| g < threshold);
        (self.sorted.len() - below) as f64 / self.sorted.len() as f64
    }

    pub fn samples(&self) -> usize {
        self.sorted.len()
    }
}

pub const HISTOGRAM_BINS: usize = 50;

/// Random difference vector for sample `index`: each qubit of `i` and `j` is
/// independently `+1/2` or `-1/2`.
///
/// Every sample owns a ChaCha8 stream selected by its index under the given
/// seed, so the draws are identical on every platform and for any number of
/// worker threads.
pub fn random_difference(len: usize, seed: u64, index: u64) -> DifferenceVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut entries = Vec::with_capacity(len);
    let mut bits = 0u64;
    for l in 0..len {
        if l % 32 == 0 {
            bits = rng.gen();
        }
        let i_up = bits & 1;
        let j_up = (bits >> 1) & 1;
        bits >>= 2;
        entries.push(i_up as i8 - j_up as i8);
    }
    DifferenceVector::new(entries).expect("entries are in {-1, 0, 1}")
}

pub fn susceptibility_histogram(
    len: usize,
    layout: &QubitLayout,
    k: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<SusceptibilityHistogram> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    if layout.len() != len {
        return Err(Error::DimensionMismatch {
            expected: layout.len(),
            found: len,
        });
    }
    layout.check_wave_vector(k)?;

    let values: Vec<f64> = (0..n_samples as u64)
        .into_par_iter()
        .map(|idx| {
            let d = random_difference(len, seed, idx);
            gamma_fourier(&d, layout, k).expect("validated above")
        })
        .collect();

    let n = values.len() as f64;
    let mean = crate::quadrature::pairwise_sum(&values) / n;
    let sq: Vec<f64> = values.iter().map(|g| (g - mean).powi(2)).collect();
    let variance = if values.len() > 1 {
        crate::quadrature::pairwise_sum(&sq) / (n - 1.0)
    } else {
        0.0
    };
    let stddev = variance.sqrt();

    let top = (len * len) as f64;
    let width = top / HISTOGRAM_BINS as f64;
    let mut bins: Vec<HistogramBin> = (0..HISTOGRAM_BINS)
        .map(|b| HistogramBin {
            lower: width * b as f64,
            upper: width * (b + 1) as f64,
            count: 0,
        })
        .collect();
    for &g in &values {
        let b = ((g / width).floor().max(0.0) as usize).min(HISTOGRAM_BINS - 1);
        bins[b].count += 1;
    }

    let mut sorted = values;
    sorted.sort_by(f64::total_cmp);
    Ok(SusceptibilityHistogram {
        mean,
        stddev,
        std_error: stddev / n.sqrt(),
        bins,
        sorted,
    })
}
