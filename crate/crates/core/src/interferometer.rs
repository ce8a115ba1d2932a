//! Circuits of squeezers and phase shifters, and the standard multi-crystal
//! geometries.

use std::fmt;
use std::str::FromStr;

use crate::engine::{apply_phase, apply_squeezer, PhaseShifter, TwoModeSqueezer};
use crate::error::{Error, Result};
use crate::fock::{Amplitude, OccupationVector, SparseFockState, TruncationPolicy, MAX_MODES};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Element {
    Squeeze(TwoModeSqueezer),
    Phase(PhaseShifter),
}

impl Element {
    fn modes(&self) -> [usize; 2] {
        match self {
            Element::Squeeze(s) => [s.mode_a, s.mode_b],
            Element::Phase(p) => [p.mode, p.mode],
        }
    }

    /// Inverse element: `S₂(r, θ + π)` undoes `S₂(r, θ)`.
    pub fn adjoint(&self) -> Result<Element> {
        Ok(match self {
            Element::Squeeze(s) => Element::Squeeze(TwoModeSqueezer::new(
                s.mode_a,
                s.mode_b,
                s.r,
                s.theta + std::f64::consts::PI,
            )?),
            Element::Phase(p) => Element::Phase(PhaseShifter::new(p.mode, -p.phi)?),
        })
    }
}

/// Elements act in listed order on `input`.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    mode_count: usize,
    elements: Vec<Element>,
    input: OccupationVector,
}

impl Circuit {
    /// Empty circuit on vacuum.
    pub fn new(mode_count: usize) -> Result<Self> {
        Ok(Self {
            mode_count,
            elements: Vec::new(),
            input: OccupationVector::vacuum(mode_count)?,
        })
    }

    pub fn with_input(mut self, input: OccupationVector) -> Result<Self> {
        if input.len() != self.mode_count {
            return Err(Error::DimensionMismatch {
                expected: self.mode_count,
                found: input.len(),
            });
        }
        self.input = input;
        Ok(self)
    }

    pub fn push(&mut self, element: Element) -> Result<()> {
        for mode in element.modes() {
            if mode >= self.mode_count {
                return Err(Error::ModeOutOfRange {
                    mode,
                    modes: self.mode_count,
                });
            }
        }
        if let Element::Squeeze(s) = &element {
            s.validate()?;
        }
        self.elements.push(element);
        Ok(())
    }

    pub fn squeeze(mut self, mode_a: usize, mode_b: usize, r: f64, theta: f64) -> Result<Self> {
        self.push(Element::Squeeze(TwoModeSqueezer::new(mode_a, mode_b, r, theta)?))?;
        Ok(self)
    }

    pub fn phase(mut self, mode: usize, phi: f64) -> Result<Self> {
        self.push(Element::Phase(PhaseShifter::new(mode, phi)?))?;
        Ok(self)
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn input(&self) -> &OccupationVector {
        &self.input
    }

    /// Largest squeezing strength in the circuit.
    pub fn max_r(&self) -> f64 {
        self.elements
            .iter()
            .filter_map(|e| match e {
                Element::Squeeze(s) => Some(s.r),
                Element::Phase(_) => None,
            })
            .fold(0.0, f64::max)
    }
}

/// Propagates the circuit input through every element.
pub fn run(circuit: &Circuit, policy: &TruncationPolicy) -> Result<SparseFockState> {
    policy.validate()?;
    let mut state = SparseFockState::basis(circuit.input)?;
    for element in &circuit.elements {
        state = apply(&state, element, policy)?;
    }
    Ok(state)
}

/// Amplitude of one output pattern and the truncation bound it inherits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeResult {
    pub amplitude: Amplitude,
    pub error_bound: f64,
}

impl AmplitudeResult {
    pub fn probability(&self) -> f64 {
        self.amplitude.norm_sqr()
    }
}

/// Amplitude of `pattern` at the circuit output.
///
/// The input is propagated through the first half of the squeezers and the
/// pattern backwards through the adjoints of the rest; the amplitude is the
/// overlap of the two states. Each half then only spans the photon numbers
/// its own squeezers reach. The bound combines the tails of both halves.
pub fn amplitude(circuit: &Circuit, pattern: &OccupationVector, policy: &TruncationPolicy) -> Result<AmplitudeResult> {
    if pattern.len() != circuit.mode_count {
        return Err(Error::DimensionMismatch {
            expected: circuit.mode_count,
            found: pattern.len(),
        });
    }
    policy.validate()?;
    let squeezers: Vec<usize> = circuit
        .elements
        .iter()
        .enumerate()
        .filter(|(_, e)| matches!(e, Element::Squeeze(_)))
        .map(|(i, _)| i)
        .collect();
    let split = squeezers
        .get(squeezers.len().div_ceil(2))
        .copied()
        .unwrap_or(circuit.elements.len());

    let mut fwd = SparseFockState::basis(circuit.input)?;
    for element in &circuit.elements[..split] {
        fwd = apply(&fwd, element, policy)?;
    }
    let mut back = SparseFockState::basis(*pattern)?;
    for element in circuit.elements[split..].iter().rev() {
        back = apply(&back, &element.adjoint()?, policy)?;
    }

    let (small, large, conj_small) = if fwd.len() <= back.len() {
        (&fwd, &back, false)
    } else {
        (&back, &fwd, true)
    };
    let mut amp = Amplitude::new(0.0, 0.0);
    for (occ, &a) in small.iter() {
        let b = large.amplitude_of(occ)?;
        amp += if conj_small { a.conj() * b } else { a * b.conj() };
    }
    let (tf, tb) = (fwd.tail_error(), back.tail_error());
    Ok(AmplitudeResult {
        amplitude: amp,
        error_bound: tf + tb + tf * tb,
    })
}

fn apply(state: &SparseFockState, element: &Element, policy: &TruncationPolicy) -> Result<SparseFockState> {
    match element {
        Element::Squeeze(s) => apply_squeezer(state, s, policy),
        Element::Phase(p) => apply_phase(state, p),
    }
}

/// Named geometries, all squeezing phases zero. Modes are `a, b` (0, 1) for
/// the two-mode setups and `a, b, c, d` (0..4) for four crystals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CircuitKind {
    /// One crystal seeded with `|1,1⟩`; parameter `r`.
    SingleSeeded,
    /// `S_ab(r2) Φ_a(phi) S_ab(r1)` on vacuum.
    TwoCrystal,
    /// `S_ab(r3) Φ_a(phi2) S_ab(r2) Φ_a(phi1) S_ab(r1)` on vacuum.
    ThreeCrystal,
    /// `S_cd(r4) S_ab(r3) Φ_a(phi) S_bd(r2) S_ac(r1)` on vacuum.
    FourCrystal,
}

impl CircuitKind {
    pub const ALL: [CircuitKind; 4] = [
        CircuitKind::SingleSeeded,
        CircuitKind::TwoCrystal,
        CircuitKind::ThreeCrystal,
        CircuitKind::FourCrystal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CircuitKind::SingleSeeded => "single_seeded",
            CircuitKind::TwoCrystal => "two_crystal",
            CircuitKind::ThreeCrystal => "three_crystal",
            CircuitKind::FourCrystal => "four_crystal",
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            CircuitKind::SingleSeeded => &["r"],
            CircuitKind::TwoCrystal => &["r1", "r2", "phi"],
            CircuitKind::ThreeCrystal => &["r1", "r2", "r3", "phi1", "phi2"],
            CircuitKind::FourCrystal => &["r1", "r2", "r3", "r4", "phi"],
        }
    }

    pub fn mode_count(self) -> usize {
        match self {
            CircuitKind::FourCrystal => 4,
            _ => 2,
        }
    }

    /// Pattern whose amplitude the geometry is built to study.
    pub fn detection_pattern(self) -> OccupationVector {
        let ones = [1; MAX_MODES];
        OccupationVector::new(&ones[..self.mode_count()]).expect("small pattern")
    }

    /// Photon cap of 40 for two-mode circuits and 24 per mode for four modes.
    pub fn default_policy(self) -> TruncationPolicy {
        match self {
            CircuitKind::FourCrystal => TruncationPolicy::default().with_photon_cap(24),
            _ => TruncationPolicy::default(),
        }
    }
}

impl fmt::Display for CircuitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CircuitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown circuit kind '{s}'")))
    }
}

/// Builds a named geometry from its parameters, in the order of
/// [`CircuitKind::param_names`].
pub fn standard_circuit(kind: CircuitKind, params: &[f64]) -> Result<Circuit> {
    let expected = kind.param_names().len();
    if params.len() != expected {
        return Err(Error::Arity {
            kind: kind.name(),
            expected,
            found: params.len(),
        });
    }
    let p = params;
    match kind {
        CircuitKind::SingleSeeded => Circuit::new(2)?
            .with_input(OccupationVector::new(&[1, 1])?)?
            .squeeze(0, 1, p[0], 0.0),
        CircuitKind::TwoCrystal => Circuit::new(2)?
            .squeeze(0, 1, p[0], 0.0)?
            .phase(0, p[2])?
            .squeeze(0, 1, p[1], 0.0),
        CircuitKind::ThreeCrystal => Circuit::new(2)?
            .squeeze(0, 1, p[0], 0.0)?
            .phase(0, p[3])?
            .squeeze(0, 1, p[1], 0.0)?
            .phase(0, p[4])?
            .squeeze(0, 1, p[2], 0.0),
        CircuitKind::FourCrystal => Circuit::new(4)?
            .squeeze(0, 2, p[0], 0.0)?
            .squeeze(1, 3, p[1], 0.0)?
            .phase(0, p[4])?
            .squeeze(0, 1, p[2], 0.0)?
            .squeeze(2, 3, p[3], 0.0),
    }
}
