//! Dynamical fidelity of `(|i> + |j>) / sqrt(2)` under the dephasing coupling.
//!
//! Unlike the decoherence function, the phases entering the fidelity depend
//! on the basis states themselves and not only on their difference.

use num_complex::Complex64;

use crate::decoherence::{gamma_discrete, tau};
use crate::error::{Error, Result};
use crate::register::{DifferenceVector, QubitLayout};
use crate::reservoir::DiscreteModeSet;
use crate::susceptibility::gamma_fourier;

/// Two computational basis states given by spin projections `+-1/2`,
/// stored doubled as `+-1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisPair {
    i: Vec<i8>,
    j: Vec<i8>,
}

impl BasisPair {
    /// From doubled projections in `{-1, +1}`.
    pub fn from_signs(i: Vec<i8>, j: Vec<i8>) -> Result<Self> {
        if i.len() != j.len() {
            return Err(Error::DimensionMismatch {
                expected: i.len(),
                found: j.len(),
            });
        }
        if i.is_empty() {
            return Err(Error::InvalidArgument("basis states need at least one qubit".into()));
        }
        if let Some(v) = i.iter().chain(&j).find(|v| v.abs() != 1) {
            return Err(Error::InvalidArgument(format!("spin sign must be +-1, got {v}")));
        }
        Ok(Self { i, j })
    }

    /// From projections in `{-1/2, +1/2}`.
    pub fn from_projections(i: &[f64], j: &[f64]) -> Result<Self> {
        let sign = |x: &f64| -> Result<i8> {
            match *x {
                v if v == 0.5 => Ok(1),
                v if v == -0.5 => Ok(-1),
                v => Err(Error::InvalidArgument(format!("spin projection must be +-1/2, got {v}"))),
            }
        };
        Self::from_signs(
            i.iter().map(sign).collect::<Result<_>>()?,
            j.iter().map(sign).collect::<Result<_>>()?,
        )
    }

    /// `|up...up>` and `|down...down>`.
    pub fn ghz(len: usize) -> Result<Self> {
        Self::from_signs(vec![1; len], vec![-1; len])
    }

    /// Alternating spins and their complement.
    pub fn ghz_prime(len: usize) -> Result<Self> {
        let i: Vec<i8> = (0..len).map(|l| if l % 2 == 0 { 1 } else { -1 }).collect();
        let j = i.iter().map(|v| -v).collect();
        Self::from_signs(i, j)
    }

    pub fn len(&self) -> usize {
        self.i.len()
    }

    pub fn is_empty(&self) -> bool {
        self.i.is_empty()
    }

    pub fn swapped(&self) -> Self {
        Self {
            i: self.j.clone(),
            j: self.i.clone(),
        }
    }

    pub fn difference(&self) -> DifferenceVector {
        DifferenceVector::new(self.i.iter().zip(&self.j).map(|(a, b)| (a - b) / 2).collect())
            .expect("entries lie in {-1, 0, 1}")
    }

    /// `sum_l s_l exp(i k . r_l)` with `s_l = +-1/2`.
    fn amplitudes(&self, layout: &QubitLayout, k: &[f64]) -> (Complex64, Complex64) {
        let mut a = Complex64::new(0.0, 0.0);
        let mut b = Complex64::new(0.0, 0.0);
        for ((si, sj), r) in self.i.iter().zip(&self.j).zip(layout.positions()) {
            let phase = Complex64::from_polar(0.5, k.iter().zip(r).map(|(x, y)| x * y).sum());
            a += phase * *si as f64;
            b += phase * *sj as f64;
        }
        (a, b)
    }
}

fn check(pair: &BasisPair, layout: &QubitLayout, modes: &DiscreteModeSet) -> Result<()> {
    if pair.len() != layout.len() {
        return Err(Error::DimensionMismatch {
            expected: layout.len(),
            found: pair.len(),
        });
    }
    for m in modes.modes() {
        if m.k.len() != layout.dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.dim(),
                found: m.k.len(),
            });
        }
    }
    Ok(())
}

/// Fidelity susceptibility `1/4 sum_k |g_k|^2 gamma_d(k) (1 + 2 N_k)`.
pub fn chi_discrete(pair: &BasisPair, layout: &QubitLayout, modes: &DiscreteModeSet) -> Result<f64> {
    check(pair, layout, modes)?;
    let d = pair.difference();
    let terms = modes
        .modes()
        .iter()
        .map(|m| Ok(m.coupling.norm_sqr() * gamma_fourier(&d, layout, &m.k)? * (1.0 + 2.0 * m.occupation)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(0.25 * crate::quadrature::pairwise_sum(&terms))
}

/// `(w t - sin(w t)) / w^2`, by series for small `w t`.
fn phase_kernel(omega: f64, t: f64) -> f64 {
    let x = omega * t;
    if x.abs() < 1e-3 {
        let t3 = t * t * t;
        omega * t3 / 6.0 * (1.0 - x * x / 20.0)
    } else {
        (x - x.sin()) / (omega * omega)
    }
}

/// Phase `sum_k |g_k|^2 (w t - sin w t) / w^2 sum_lm (i_l i_m - j_l j_m) cos(k . r_lm)`.
pub fn theta_phase(pair: &BasisPair, layout: &QubitLayout, modes: &DiscreteModeSet, t: f64) -> Result<f64> {
    check(pair, layout, modes)?;
    let terms: Vec<f64> = modes
        .modes()
        .iter()
        .map(|m| {
            let (a, b) = pair.amplitudes(layout, &m.k);
            m.coupling.norm_sqr() * phase_kernel(m.omega, t) * (a.norm_sqr() - b.norm_sqr())
        })
        .collect();
    Ok(crate::quadrature::pairwise_sum(&terms))
}

/// Phase `2 sum_k |g_k|^2 tau(t, w) sum_lm i_l j_m sin(k . r_lm)`.
pub fn lambda_phase(pair: &BasisPair, layout: &QubitLayout, modes: &DiscreteModeSet, t: f64) -> Result<f64> {
    check(pair, layout, modes)?;
    let terms: Vec<f64> = modes
        .modes()
        .iter()
        .map(|m| {
            let (a, b) = pair.amplitudes(layout, &m.k);
            2.0 * m.coupling.norm_sqr() * tau(t, m.omega) * (a * b.conj()).im
        })
        .collect();
    Ok(crate::quadrature::pairwise_sum(&terms))
}

/// `F = 1/2 + 1/2 cos(Theta - Lambda) exp(-Gamma)` with every coupling scaled
/// by `strength`.
pub fn dynamical_fidelity(
    pair: &BasisPair,
    layout: &QubitLayout,
    modes: &DiscreteModeSet,
    t: f64,
    strength: f64,
) -> Result<f64> {
    check(pair, layout, modes)?;
    if t == 0.0 {
        return Ok(1.0);
    }
    let scaled = modes.scaled_couplings(strength);
    let gamma = gamma_discrete(&pair.difference(), layout, &scaled, t)?.total();
    let phase = theta_phase(pair, layout, &scaled, t)? - lambda_phase(pair, layout, &scaled, t)?;
    Ok(0.5 + 0.5 * phase.cos() * (-gamma).exp())
}
