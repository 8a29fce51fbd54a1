//! Register geometry and the difference vectors that index density-matrix
//! elements.
//!
//! A density-matrix element `rho_ij` of an `L`-qubit register is indexed by
//! two basis states whose entries are `+1/2` or `-1/2`. Only the difference
//! `d = i - j` enters the decoherence function, so that is what is stored.

use std::fmt;

use crate::error::{Error, Result};

/// `d = i - j` for a pair of computational basis states; entries in {-1, 0, +1}.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DifferenceVector {
    entries: Vec<i8>,
}

impl DifferenceVector {
    pub fn new(entries: Vec<i8>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument(
                "difference vector must have at least one entry".into(),
            ));
        }
        if let Some(pos) = entries.iter().position(|e| !(-1..=1).contains(e)) {
            return Err(Error::InvalidArgument(format!(
                "difference vector entry {pos} is {}, expected -1, 0 or +1",
                entries[pos]
            )));
        }
        Ok(Self { entries })
    }

    /// Difference vector of the off-diagonal element of `|GHZ>`: all ones.
    pub fn ghz(len: usize) -> Result<Self> {
        check_even(len)?;
        Ok(Self::uniform(len))
    }

    /// Difference vector of the off-diagonal element of `|GHZ'>`: `(1, -1, 1, -1, ...)`.
    pub fn ghz_prime(len: usize) -> Result<Self> {
        check_even(len)?;
        Ok(Self::alternating(len))
    }

    /// All-ones vector of any positive length.
    ///
    /// # Panics
    /// If `len` is zero.
    pub fn uniform(len: usize) -> Self {
        assert!(len > 0, "difference vector length must be positive");
        Self {
            entries: vec![1; len],
        }
    }

    /// Alternating `+1, -1, ...` vector of any positive length.
    ///
    /// # Panics
    /// If `len` is zero.
    pub fn alternating(len: usize) -> Self {
        assert!(len > 0, "difference vector length must be positive");
        Self {
            entries: (0..len).map(|l| if l % 2 == 0 { 1 } else { -1 }).collect(),
        }
    }

    pub fn entries(&self) -> &[i8] {
        &self.entries
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// `sum_l |d_l|^2`, the number of nonzero entries.
    pub fn norm_squared(&self) -> usize {
        self.entries.iter().filter(|&&e| e != 0).count()
    }

    pub fn sum(&self) -> i64 {
        self.entries.iter().map(|&e| e as i64).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&e| e == 0)
    }

    /// Lag autocorrelation `f_r = (2 - delta_{0r}) sum_m d_m d_{m+r}` for
    /// `r = 0..L-1`. On a lattice with spacing `a` the susceptibility is the
    /// cosine series `sum_r f_r cos(a k r)`.
    pub fn autocorrelation(&self) -> Vec<f64> {
        let l = self.entries.len();
        (0..l)
            .map(|r| {
                let s: i64 = (0..l - r)
                    .map(|m| (self.entries[m] * self.entries[m + r]) as i64)
                    .sum();
                if r == 0 {
                    s as f64
                } else {
                    2.0 * s as f64
                }
            })
            .collect()
    }
}

impl fmt::Display for DifferenceVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

fn check_even(len: usize) -> Result<()> {
    if len < 2 || len % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "GHZ difference vectors need an even length >= 2, got {len}"
        )));
    }
    Ok(())
}

/// How a difference vector grows with register size in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateFamily {
    Ghz,
    GhzPrime,
}

impl StateFamily {
    /// Difference vector for `len` qubits. Odd lengths are allowed here, since
    /// size sweeps step through every `L`.
    pub fn difference(self, len: usize) -> Result<DifferenceVector> {
        if len == 0 {
            return Err(Error::InvalidArgument("register size must be positive".into()));
        }
        Ok(match self {
            StateFamily::Ghz => DifferenceVector::uniform(len),
            StateFamily::GhzPrime => DifferenceVector::alternating(len),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            StateFamily::Ghz => "GHZ",
            StateFamily::GhzPrime => "GHZ'",
        }
    }
}

/// Qubit positions in real space.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitLayout {
    positions: Vec<Vec<f64>>,
    dim: usize,
    spacing: Option<f64>,
    unit_cell_volume: Option<f64>,
}

impl QubitLayout {
    /// `L` qubits on a line at `0, a, 2a, ...`; the unit cell volume is `a`.
    pub fn linear_array(len: usize, spacing: f64) -> Result<Self> {
        if len == 0 {
            return Err(Error::InvalidArgument("array needs at least one qubit".into()));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lattice spacing must be positive, got {spacing}"
            )));
        }
        Ok(Self {
            positions: (0..len).map(|l| vec![spacing * l as f64]).collect(),
            dim: 1,
            spacing: Some(spacing),
            unit_cell_volume: Some(spacing),
        })
    }

    /// Arbitrary positions, all of the same spatial dimension. The result is
    /// not treated as a lattice even if the points happen to be regular.
    pub fn from_positions(positions: Vec<Vec<f64>>) -> Result<Self> {
        let dim = positions
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidArgument("layout needs at least one qubit".into()))?;
        if dim == 0 {
            return Err(Error::InvalidArgument("positions must have dimension >= 1".into()));
        }
        if let Some(p) = positions.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.len(),
            });
        }
        if positions.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("positions must be finite".into()));
        }
        Ok(Self {
            positions,
            dim,
            spacing: None,
            unit_cell_volume: None,
        })
    }

    pub fn positions(&self) -> &[Vec<f64>] {
        &self.positions
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Lattice spacing, if built by [`QubitLayout::linear_array`].
    pub fn spacing(&self) -> Option<f64> {
        self.spacing
    }

    pub fn unit_cell_volume(&self) -> Option<f64> {
        self.unit_cell_volume
    }

    pub fn is_lattice(&self) -> bool {
        self.spacing.is_some()
    }

    /// Spacing and cell volume, or `UnsupportedLayout` for non-lattice layouts.
    pub fn require_lattice(&self) -> Result<(f64, f64)> {
        match (self.spacing, self.unit_cell_volume) {
            (Some(a), Some(v)) => Ok((a, v)),
            _ => Err(Error::UnsupportedLayout(
                "operation requires a linear lattice layout".into(),
            )),
        }
    }

    /// Coordinates of a one-dimensional layout.
    pub fn coordinates_1d(&self) -> Result<Vec<f64>> {
        if self.dim != 1 {
            return Err(Error::UnsupportedLayout(format!(
                "expected a one-dimensional layout, got dimension {}",
                self.dim
            )));
        }
        Ok(self.positions.iter().map(|p| p[0]).collect())
    }

    pub(crate) fn check_register(&self, d: &DifferenceVector) -> Result<()> {
        if d.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: d.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_wave_vector(&self, k: &[f64]) -> Result<()> {
        if k.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: k.len(),
            });
        }
        Ok(())
    }
}
