//! Sparse multimode photon-number states.
//!
//! A [`SparseFockState`] maps occupation vectors to complex amplitudes and
//! carries a scalar ℓ2 upper bound on the amplitude mass that truncation has
//! discarded so far. Terms are kept in a `BTreeMap`, so iteration follows the
//! canonical (lexicographic, declaration-order) key order.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest number of optical modes a state may have.
pub const MAX_MODES: usize = 8;

/// Probability amplitude.
pub type Amplitude = Complex64;

/// Photon counts per mode.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OccupationVector {
    len: u8,
    counts: [u16; MAX_MODES],
}

impl OccupationVector {
    pub fn new(counts: &[u32]) -> Result<Self> {
        if counts.is_empty() || counts.len() > MAX_MODES {
            return Err(Error::InvalidParameter(format!(
                "mode count {} outside 1..={MAX_MODES}",
                counts.len()
            )));
        }
        let mut out = [0u16; MAX_MODES];
        for (slot, &c) in out.iter_mut().zip(counts) {
            *slot = u16::try_from(c)
                .map_err(|_| Error::InvalidParameter(format!("occupation {c} exceeds {}", u16::MAX)))?;
        }
        Ok(Self {
            len: counts.len() as u8,
            counts: out,
        })
    }

    pub fn vacuum(modes: usize) -> Result<Self> {
        Self::new(&vec![0; modes])
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, mode: usize) -> u32 {
        assert!(mode < self.len(), "mode {mode} out of range");
        u32::from(self.counts[mode])
    }

    pub fn counts(&self) -> Vec<u32> {
        self.counts[..self.len()].iter().map(|&c| u32::from(c)).collect()
    }

    pub fn total(&self) -> u32 {
        self.counts[..self.len()].iter().map(|&c| u32::from(c)).sum()
    }

    /// Copy with the occupation of `mode` replaced. Panics if `n` does not fit.
    pub(crate) fn with(mut self, mode: usize, n: u32) -> Self {
        self.counts[mode] = u16::try_from(n).expect("occupation overflow");
        self
    }
}

impl fmt::Debug for OccupationVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for OccupationVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, c) in self.counts[..self.len()].iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "⟩")
    }
}

impl FromStr for OccupationVector {
    type Err = Error;

    /// Parses a comma-separated list such as `1,1,0,2`.
    fn from_str(s: &str) -> Result<Self> {
        let counts = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::InvalidParameter(format!("bad occupation '{t}' in '{s}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(&counts)
    }
}

/// Cutoffs applied when summing the infinite pair-creation series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    /// Coefficient magnitude below which the series may stop.
    pub term_floor: f64,
    /// Hard cap on the number of created pairs summed per input ket.
    pub k_max: usize,
    /// Largest occupation kept in any squeezed mode.
    pub photon_cap: u32,
    /// Amplitudes smaller than this are pruned after each squeezer.
    pub prune_floor: f64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            term_floor: 1e-14,
            k_max: 64,
            photon_cap: 40,
            prune_floor: 1e-14,
        }
    }
}

impl TruncationPolicy {
    pub fn validate(&self) -> Result<()> {
        let ok = self.term_floor > 0.0
            && self.term_floor.is_finite()
            && self.prune_floor > 0.0
            && self.prune_floor.is_finite()
            && self.k_max >= 1
            && self.photon_cap >= 1
            && self.photon_cap <= u32::from(u16::MAX);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid truncation policy {self:?}")))
        }
    }

    pub fn with_photon_cap(mut self, cap: u32) -> Self {
        self.photon_cap = cap;
        self
    }

    pub fn with_k_max(mut self, k_max: usize) -> Self {
        self.k_max = k_max;
        self
    }

    pub fn with_term_floor(mut self, floor: f64) -> Self {
        self.term_floor = floor;
        self
    }

    pub fn with_prune_floor(mut self, floor: f64) -> Self {
        self.prune_floor = floor;
        self
    }

    /// Policy whose photon cap is large enough that the vacuum pair series
    /// of a squeezer with strength `r_max` has decayed below `term_floor`.
    /// `k_max` is raised to match. Inputs that already carry photons shift
    /// their pair series upward and need extra headroom on top.
    pub fn sized_for(r_max: f64) -> Self {
        let base = Self::default();
        let t = r_max.abs().tanh();
        if t <= 0.0 {
            return base;
        }
        let n = (base.term_floor.ln() / t.ln()).ceil().max(1.0) as u32;
        let cap = n.clamp(base.photon_cap, u32::from(u16::MAX) / 2);
        Self {
            photon_cap: cap,
            k_max: (2 * cap as usize).max(base.k_max),
            ..base
        }
    }
}

/// Sparse superposition of Fock states.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseFockState {
    modes: usize,
    terms: BTreeMap<OccupationVector, Amplitude>,
    tail_error: f64,
}

impl SparseFockState {
    /// State with no terms.
    pub fn empty(modes: usize) -> Result<Self> {
        if modes == 0 || modes > MAX_MODES {
            return Err(Error::InvalidParameter(format!(
                "mode count {modes} outside 1..={MAX_MODES}"
            )));
        }
        Ok(Self {
            modes,
            terms: BTreeMap::new(),
            tail_error: 0.0,
        })
    }

    pub fn vacuum(modes: usize) -> Result<Self> {
        Self::basis(OccupationVector::vacuum(modes)?)
    }

    /// The single ket `occ` with amplitude 1.
    pub fn basis(occ: OccupationVector) -> Result<Self> {
        let mut s = Self::empty(occ.len())?;
        s.terms.insert(occ, Amplitude::new(1.0, 0.0));
        Ok(s)
    }

    /// Builds a state from explicit terms. Repeated keys are summed and exact
    /// zeros dropped.
    pub fn from_terms<I>(modes: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (OccupationVector, Amplitude)>,
    {
        let mut s = Self::empty(modes)?;
        for (occ, amp) in terms {
            if occ.len() != modes {
                return Err(Error::DimensionMismatch {
                    expected: modes,
                    found: occ.len(),
                });
            }
            if !(amp.re.is_finite() && amp.im.is_finite()) {
                return Err(Error::InvalidParameter(format!("non-finite amplitude at {occ}")));
            }
            *s.terms.entry(occ).or_default() += amp;
        }
        s.terms.retain(|_, a| *a != Amplitude::new(0.0, 0.0));
        Ok(s)
    }

    pub(crate) fn from_parts(modes: usize, terms: BTreeMap<OccupationVector, Amplitude>, tail_error: f64) -> Self {
        Self {
            modes,
            terms,
            tail_error,
        }
    }

    pub fn mode_count(&self) -> usize {
        self.modes
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Accumulated upper bound on the ℓ2 norm of discarded amplitude.
    pub fn tail_error(&self) -> f64 {
        self.tail_error
    }

    /// Terms in canonical key order.
    pub fn iter(&self) -> impl Iterator<Item = (&OccupationVector, &Amplitude)> {
        self.terms.iter()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Stored amplitude of `pattern`, or exact zero when absent.
    pub fn amplitude_of(&self, pattern: &OccupationVector) -> Result<Amplitude> {
        if pattern.len() != self.modes {
            return Err(Error::DimensionMismatch {
                expected: self.modes,
                found: pattern.len(),
            });
        }
        Ok(self.terms.get(pattern).copied().unwrap_or_default())
    }

    /// Removes every term with |amplitude| < `floor`, charging their ℓ2 mass
    /// to the tail error.
    pub fn prune(&self, floor: f64) -> SparseFockState {
        let mut out = self.clone();
        out.prune_in_place(floor);
        out
    }

    pub(crate) fn prune_in_place(&mut self, floor: f64) {
        if floor <= 0.0 {
            return;
        }
        let mut removed = 0.0;
        self.terms.retain(|_, a| {
            let keep = a.norm() >= floor;
            if !keep {
                removed += a.norm_sqr();
            }
            keep
        });
        self.tail_error += removed.sqrt();
    }

    /// Largest amplitude difference between two states over the union of
    /// their keys.
    pub fn max_deviation(&self, other: &SparseFockState) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, a) in &self.terms {
            let b = other.terms.get(k).copied().unwrap_or_default();
            worst = worst.max((a - b).norm());
        }
        for (k, b) in &other.terms {
            if !self.terms.contains_key(k) {
                worst = worst.max(b.norm());
            }
        }
        worst
    }
}
