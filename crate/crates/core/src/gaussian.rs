//! Decoherence for Gaussian reservoir states.
//!
//! For a Gaussian reservoir the characteristic function is fixed by its
//! covariance matrix, and the decoherence function becomes the quadratic form
//! `Gamma = 1/2 Lambda^T sigma Lambda` with `Lambda = sqrt(2) (Re l_1, Im l_1, ...)`.
//! Quadratures are ordered `(q_1, p_1, q_2, p_2, ...)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::register::{DifferenceVector, QubitLayout};
use crate::reservoir::DiscreteModeSet;
use crate::susceptibility::fourier_amplitude;

/// Per-mode displacement amplitudes `l_k = g_k conj(d~(k)) (1 - exp(i w t)) / w`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaVector {
    pub entries: Vec<Complex64>,
}

impl LambdaVector {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Real vector `sqrt(2) (Re l_1, Im l_1, ...)`.
    pub fn quadratures(&self) -> Vec<f64> {
        let s = std::f64::consts::SQRT_2;
        self.entries.iter().flat_map(|l| [s * l.re, s * l.im]).collect()
    }
}

/// `(1 - exp(i w t)) / w`, continuous through `w = 0` where it equals `-i t`.
fn displacement_kernel(omega: f64, t: f64) -> Complex64 {
    let half = 0.5 * omega * t;
    let sinc = if omega == 0.0 { 0.5 * t } else { half.sin() / omega };
    // 1 - e^{2ix} = -2i sin(x) e^{ix}
    Complex64::new(0.0, -2.0 * sinc) * Complex64::from_polar(1.0, half)
}

pub fn lambda_vector(
    d: &DifferenceVector,
    layout: &QubitLayout,
    modes: &DiscreteModeSet,
    t: f64,
) -> Result<LambdaVector> {
    layout.check_register(d)?;
    let entries = modes
        .modes()
        .iter()
        .map(|m| {
            let amp = fourier_amplitude(d, layout, &m.k)?;
            Ok(m.coupling * amp.conj() * displacement_kernel(m.omega, t))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LambdaVector { entries })
}

pub type Block = [[f64; 2]; 2];

fn check_occupation(occupation: f64) -> Result<()> {
    if !(occupation >= 0.0 && occupation.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "occupation must be >= 0, got {occupation}"
        )));
    }
    Ok(())
}

/// Thermal single-mode covariance `diag(N + 1/2, N + 1/2)`.
pub fn covariance_thermal(occupation: f64) -> Result<Block> {
    check_occupation(occupation)?;
    let v = occupation + 0.5;
    Ok([[v, 0.0], [0.0, v]])
}

/// Squeezed thermal single-mode covariance with squeeze `r` along angle `phi`.
pub fn covariance_squeezed_thermal(occupation: f64, squeeze: f64, angle: f64) -> Result<Block> {
    check_occupation(occupation)?;
    let v = occupation + 0.5;
    let (c, s) = ((2.0 * squeeze).cosh(), (2.0 * squeeze).sinh());
    let off = -v * s * angle.sin();
    Ok([[v * (c + s * angle.cos()), off], [off, v * (c - s * angle.cos())]])
}

pub fn block_determinant(b: &Block) -> f64 {
    b[0][0] * b[1][1] - b[0][1] * b[1][0]
}

/// Reservoir covariance matrix, either mode-diagonal or fully general.
#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceMatrix {
    BlockDiagonal(Vec<Block>),
    Full(Vec<Vec<f64>>),
}

fn symmetric(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

impl CovarianceMatrix {
    pub fn block_diagonal(blocks: Vec<Block>) -> Result<Self> {
        for (i, b) in blocks.iter().enumerate() {
            if !symmetric(b[0][1], b[1][0]) {
                return Err(Error::InvalidArgument(format!("covariance block {i} is not symmetric")));
            }
        }
        Ok(Self::BlockDiagonal(blocks))
    }

    pub fn full(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "covariance matrix needs an even order, got {n}"
            )));
        }
        for row in &rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
        }
        for i in 0..n {
            for j in 0..i {
                if !symmetric(rows[i][j], rows[j][i]) {
                    return Err(Error::InvalidArgument(format!(
                        "covariance matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self::Full(rows))
    }

    pub fn thermal(occupations: &[f64]) -> Result<Self> {
        Ok(Self::BlockDiagonal(
            occupations.iter().map(|&n| covariance_thermal(n)).collect::<Result<_>>()?,
        ))
    }

    /// Thermal blocks from the occupations of a mode set.
    pub fn thermal_for(modes: &DiscreteModeSet) -> Result<Self> {
        let n: Vec<f64> = modes.modes().iter().map(|m| m.occupation).collect();
        Self::thermal(&n)
    }

    /// Number of modes.
    pub fn modes(&self) -> usize {
        match self {
            Self::BlockDiagonal(b) => b.len(),
            Self::Full(rows) => rows.len() / 2,
        }
    }

    fn to_dense(&self) -> Vec<Vec<f64>> {
        match self {
            Self::Full(rows) => rows.clone(),
            Self::BlockDiagonal(blocks) => {
                let n = 2 * blocks.len();
                let mut rows = vec![vec![0.0; n]; n];
                for (m, b) in blocks.iter().enumerate() {
                    for i in 0..2 {
                        for j in 0..2 {
                            rows[2 * m + i][2 * m + j] = b[i][j];
                        }
                    }
                }
                rows
            }
        }
    }

    /// Whether the matrix describes a physical state, i.e. satisfies the
    /// uncertainty relation `sigma + i Omega / 2 >= 0`.
    ///
    /// Squeezed states have ordinary eigenvalues below 1/2, so the test is
    /// on the complex Hermitian matrix, via a Cholesky factorisation with a
    /// small diagonal shift to admit pure states on the boundary.
    pub fn is_physical(&self) -> bool {
        let a = self.to_dense();
        let n = a.len();
        let scale = a.iter().enumerate().map(|(i, r)| r[i].abs()).fold(1.0, f64::max);
        let shift = 1e-10 * scale;
        let mut h: Vec<Vec<Complex64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let mut v = Complex64::new(a[i][j], 0.0);
                        // Omega = direct sum of [[0, 1], [-1, 0]].
                        if i / 2 == j / 2 && i != j {
                            v.im += if i % 2 == 0 { 0.5 } else { -0.5 };
                        }
                        if i == j {
                            v.re += shift;
                        }
                        v
                    })
                    .collect()
            })
            .collect();
        for k in 0..n {
            let pivot = h[k][k].re
                - (0..k).map(|m| h[k][m].norm_sqr()).sum::<f64>();
            if !(pivot > 0.0) {
                return false;
            }
            let diag = pivot.sqrt();
            h[k][k] = Complex64::new(diag, 0.0);
            for i in k + 1..n {
                let dot: Complex64 = (0..k).map(|m| h[i][m] * h[k][m].conj()).sum();
                h[i][k] = (h[i][k] - dot) / diag;
            }
        }
        true
    }
}

/// `1/2 Lambda^T sigma Lambda`.
pub fn gamma_from_covariance(lambda: &LambdaVector, sigma: &CovarianceMatrix) -> Result<f64> {
    if sigma.modes() != lambda.len() {
        return Err(Error::DimensionMismatch {
            expected: lambda.len(),
            found: sigma.modes(),
        });
    }
    let x = lambda.quadratures();
    let terms: Vec<f64> = match sigma {
        CovarianceMatrix::BlockDiagonal(blocks) => blocks
            .iter()
            .zip(x.chunks(2))
            .map(|(b, v)| {
                b[0][0] * v[0] * v[0] + (b[0][1] + b[1][0]) * v[0] * v[1] + b[1][1] * v[1] * v[1]
            })
            .collect(),
        CovarianceMatrix::Full(rows) => rows
            .iter()
            .zip(&x)
            .map(|(row, xi)| xi * row.iter().zip(&x).map(|(a, xj)| a * xj).sum::<f64>())
            .collect(),
    };
    Ok(0.5 * crate::quadrature::pairwise_sum(&terms))
}

/// Single-mode squeezed thermal state, optionally displaced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleModeGaussianState {
    pub occupation: f64,
    pub squeeze: f64,
    pub angle: f64,
    /// Recorded for completeness; the decoherence function does not see it.
    pub displacement: Complex64,
}

impl SingleModeGaussianState {
    pub fn new(occupation: f64, squeeze: f64, angle: f64, displacement: Complex64) -> Result<Self> {
        check_occupation(occupation)?;
        Ok(Self {
            occupation,
            squeeze,
            angle,
            displacement,
        })
    }

    pub fn coherent(displacement: Complex64) -> Self {
        Self {
            occupation: 0.0,
            squeeze: 0.0,
            angle: 0.0,
            displacement,
        }
    }

    pub fn covariance(&self) -> Block {
        covariance_squeezed_thermal(self.occupation, self.squeeze, self.angle)
            .expect("occupation checked on construction")
    }
}

/// Displacing a state leaves its covariance, hence its decoherence, unchanged.
pub fn displacement_irrelevance_check(state: &SingleModeGaussianState) -> bool {
    let undisplaced = SingleModeGaussianState {
        displacement: Complex64::new(0.0, 0.0),
        ..*state
    };
    state.covariance() == undisplaced.covariance()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoherence::{gamma_discrete, tau};
    use crate::reservoir::Mode;
    use crate::susceptibility::gamma_fourier;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{E, PI};

    fn random_modes(rng: &mut ChaCha8Rng, count: usize, thermal: bool) -> DiscreteModeSet {
        let modes = (0..count)
            .map(|_| {
                let k: f64 = rng.gen_range(-4.0..4.0);
                Mode {
                    k: vec![k],
                    omega: k.abs(),
                    coupling: Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                    occupation: if thermal { rng.gen_range(0.0..3.0) } else { 0.0 },
                }
            })
            .collect();
        DiscreteModeSet::new(modes).unwrap()
    }

    #[test]
    fn lambda_at_time_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let modes = random_modes(&mut rng, 10, true);
        let d = DifferenceVector::alternating(4);
        let layout = QubitLayout::linear_array(4, 1.0).unwrap();
        let l = lambda_vector(&d, &layout, &modes, 0.0).unwrap();
        assert!(l.entries.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn lambda_single_mode_half_period() {
        let modes = DiscreteModeSet::single_1d(1.0, Complex64::new(1.0, 0.0), 0.0).unwrap();
        let layout = QubitLayout::from_positions(vec![vec![0.0]]).unwrap();
        let l = lambda_vector(&DifferenceVector::uniform(1), &layout, &modes, PI).unwrap();
        assert!((l.entries[0] - Complex64::new(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn lambda_zero_frequency_limit() {
        let modes = DiscreteModeSet::new(vec![Mode {
            k: vec![0.0],
            omega: 0.0,
            coupling: Complex64::new(0.5, 0.0),
            occupation: 0.0,
        }])
        .unwrap();
        let layout = QubitLayout::linear_array(2, 1.0).unwrap();
        let l = lambda_vector(&DifferenceVector::uniform(2), &layout, &modes, 3.0).unwrap();
        assert!((l.entries[0] - Complex64::new(0.0, -3.0)).norm() < 1e-15);
    }

    #[test]
    fn lambda_modulus_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let modes = random_modes(&mut rng, 100, false);
        let d = DifferenceVector::new(vec![1, -1, 0, 1, 1]).unwrap();
        let layout = QubitLayout::linear_array(5, 0.8).unwrap();
        let t = 2.7;
        let l = lambda_vector(&d, &layout, &modes, t).unwrap();
        for (z, m) in l.entries.iter().zip(modes.modes()) {
            let want = m.coupling.norm_sqr() * gamma_fourier(&d, &layout, &m.k).unwrap() * 2.0 * tau(t, m.omega);
            assert!((z.norm_sqr() - want).abs() <= 1e-12 * want.max(1e-300) + 1e-15);
        }
    }

    #[test]
    fn thermal_blocks() {
        assert_eq!(covariance_thermal(0.0).unwrap(), [[0.5, 0.0], [0.0, 0.5]]);
        assert_eq!(covariance_thermal(1.0).unwrap(), [[1.5, 0.0], [0.0, 1.5]]);
        let b = covariance_thermal(1.0 / (E - 1.0)).unwrap();
        assert!((b[0][0] - 1.081_976_706_869_326_4).abs() < 1e-12);
        assert!(covariance_thermal(-0.1).is_err());
    }

    #[test]
    fn squeezed_blocks() {
        assert_eq!(
            covariance_squeezed_thermal(0.7, 0.0, 1.3).unwrap(),
            covariance_thermal(0.7).unwrap()
        );
        let b = covariance_squeezed_thermal(0.0, 1.0, 0.0).unwrap();
        assert!((b[0][0] - 0.5 * E * E).abs() < 1e-14);
        assert!((b[1][1] - 0.5 / (E * E)).abs() < 1e-15);
        assert_eq!(b[0][1], 0.0);
        assert!(covariance_squeezed_thermal(-1.0, 0.1, 0.0).is_err());
    }

    #[test]
    fn covariance_rejects_asymmetry() {
        assert!(CovarianceMatrix::block_diagonal(vec![[[1.0, 0.2], [0.1, 1.0]]]).is_err());
        assert!(CovarianceMatrix::full(vec![vec![1.0, 0.0], vec![0.3, 1.0]]).is_err());
        assert!(CovarianceMatrix::full(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).is_err());
    }

    #[test]
    fn gamma_requires_matching_sizes() {
        let l = LambdaVector {
            entries: vec![Complex64::new(1.0, 0.0); 3],
        };
        let s = CovarianceMatrix::thermal(&[0.0, 1.0]).unwrap();
        assert!(matches!(
            gamma_from_covariance(&l, &s),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn vacuum_and_zero_lambda() {
        let l = LambdaVector {
            entries: vec![Complex64::new(1.0, 2.0), Complex64::new(-0.5, 0.0)],
        };
        let vac = CovarianceMatrix::thermal(&[0.0, 0.0]).unwrap();
        assert!((gamma_from_covariance(&l, &vac).unwrap() - 0.5 * (5.0 + 0.25)).abs() < 1e-15);
        let zero = LambdaVector {
            entries: vec![Complex64::new(0.0, 0.0); 2],
        };
        assert_eq!(gamma_from_covariance(&zero, &vac).unwrap(), 0.0);
    }

    #[test]
    fn block_and_full_forms_agree() {
        let blocks = vec![
            covariance_squeezed_thermal(0.3, 0.4, 0.9).unwrap(),
            covariance_thermal(2.0).unwrap(),
        ];
        let block = CovarianceMatrix::block_diagonal(blocks).unwrap();
        let full = CovarianceMatrix::full(block.to_dense()).unwrap();
        let l = LambdaVector {
            entries: vec![Complex64::new(0.3, -1.2), Complex64::new(0.7, 0.1)],
        };
        let a = gamma_from_covariance(&l, &block).unwrap();
        let b = gamma_from_covariance(&l, &full).unwrap();
        assert!((a - b).abs() < 1e-14 * a);
    }

    #[test]
    fn physicality() {
        assert!(CovarianceMatrix::thermal(&[0.0, 1.0]).unwrap().is_physical());
        let sq = covariance_squeezed_thermal(0.0, 1.5, 0.3).unwrap();
        assert!(CovarianceMatrix::block_diagonal(vec![sq]).unwrap().is_physical());
        let too_small = CovarianceMatrix::full(vec![vec![0.4, 0.0], vec![0.0, 0.4]]).unwrap();
        assert!(!too_small.is_physical());
        // Well-defined quadratic form even when unphysical.
        let l = LambdaVector {
            entries: vec![Complex64::new(1.0, 0.0)],
        };
        assert!((gamma_from_covariance(&l, &too_small).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn path_equivalence_with_thermal_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = DifferenceVector::new(vec![1, 0, -1, 1]).unwrap();
        let layout = QubitLayout::linear_array(4, 1.0).unwrap();
        for _ in 0..20 {
            let modes = random_modes(&mut rng, 30, true);
            let t = rng.gen_range(0.0..10.0);
            let l = lambda_vector(&d, &layout, &modes, t).unwrap();
            let g = gamma_from_covariance(&l, &CovarianceMatrix::thermal_for(&modes).unwrap()).unwrap();
            let want = gamma_discrete(&d, &layout, &modes, t).unwrap().total();
            assert!((g - want).abs() <= 1e-12 * want.abs().max(1e-300));
        }
    }

    #[test]
    fn coherent_state_is_vacuum() {
        let s = SingleModeGaussianState::coherent(Complex64::new(3.0, 4.0));
        assert_eq!(s.covariance(), covariance_thermal(0.0).unwrap());
        assert!(displacement_irrelevance_check(&s));
    }

    proptest! {
        #[test]
        fn squeezed_determinant_is_invariant(n in 0.0..5.0f64, r in -2.0..2.0f64, phi in -7.0..7.0f64) {
            let b = covariance_squeezed_thermal(n, r, phi).unwrap();
            let want = (n + 0.5) * (n + 0.5);
            prop_assert!((block_determinant(&b) - want).abs() <= 1e-12 * want * (4.0 * r.abs()).exp());
            prop_assert_eq!(b[0][1], b[1][0]);
        }

        #[test]
        fn displacement_never_matters(n in 0.0..5.0f64, r in -2.0..2.0f64, phi in -7.0..7.0f64,
                                      re in -10.0..10.0f64, im in -10.0..10.0f64) {
            let s = SingleModeGaussianState::new(n, r, phi, Complex64::new(re, im)).unwrap();
            prop_assert!(displacement_irrelevance_check(&s));
        }

        #[test]
        fn quadratic_form_is_nonnegative(n in 0.0..5.0f64, r in -2.0..2.0f64, phi in -7.0..7.0f64,
                                         re in -10.0..10.0f64, im in -10.0..10.0f64) {
            let b = covariance_squeezed_thermal(n, r, phi).unwrap();
            let l = LambdaVector { entries: vec![Complex64::new(re, im)] };
            let s = CovarianceMatrix::block_diagonal(vec![b]).unwrap();
            prop_assert!(gamma_from_covariance(&l, &s).unwrap() >= 0.0);
        }
    }
}
