//! Self-checks of the engine against independent computations.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use sqfock::closed_forms::{amp_four_crystal_1111, amp_single_crystal_11, amp_three_crystal_11, amp_two_crystal_11};
use sqfock::oracle::oracle_squeeze;
use sqfock::series::{four_crystal_series_state, three_crystal_series_state, two_crystal_series_state};
use sqfock::{amplitude, run, squeeze_pair_coefficients, standard_circuit, CircuitKind, TruncationPolicy};

use crate::config::auto_policy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Oracle,
    Closedform,
    Series,
    All,
}

impl Suite {
    pub fn default_tol(self) -> f64 {
        match self {
            Suite::Oracle => 1e-8,
            Suite::Closedform => 1e-9,
            Suite::Series | Suite::All => 1e-10,
        }
    }
}

/// Largest deviation found by one check.
#[derive(Debug, Clone)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub deviation: f64,
}

const GRID_R: [f64; 4] = [0.05, 0.3, 0.8, 1.2];
const GRID_PHI: [f64; 4] = [0.0, PI / 3.0, PI, 5.0 * PI / 3.0];

// The truncated matrix exponential reflects amplitude off its photon-number
// edge, so only outputs well inside the basis are compared.
const ORACLE_N_MAX: u32 = 80;
const ORACLE_INTERIOR: u32 = 20;

fn oracle_gap(p: u32, q: u32, r: f64, theta: f64) -> sqfock::Result<f64> {
    let exp = squeeze_pair_coefficients(p, q, r, theta, &TruncationPolicy::sized_for(r))?;
    let mut worst: f64 = 0.0;
    for (po, qo, want) in oracle_squeeze(p, q, r, theta, ORACLE_N_MAX)? {
        if po.max(qo) > ORACLE_INTERIOR {
            continue;
        }
        let got = exp
            .coefficients
            .iter()
            .find(|c| c.0 == po && c.1 == qo)
            .map_or(Complex64::default(), |c| c.2);
        worst = worst.max((got - want).norm());
    }
    Ok(worst)
}

fn oracle() -> sqfock::Result<Vec<Check>> {
    [0.2, 0.6, 1.0, 1.2]
        .par_iter()
        .map(|&r| {
            let mut worst: f64 = 0.0;
            for theta in [0.0, 0.7] {
                for p in 0..=3 {
                    for q in 0..=3 {
                        worst = worst.max(oracle_gap(p, q, r, theta)?);
                    }
                }
            }
            Ok(Check {
                suite: "oracle",
                name: format!("r={r} p,q<=3"),
                deviation: worst,
            })
        })
        .collect()
}

fn engine(kind: CircuitKind, params: &[f64]) -> sqfock::Result<Complex64> {
    let c = standard_circuit(kind, params)?;
    Ok(amplitude(&c, &kind.detection_pattern(), &auto_policy(&c))?.amplitude)
}

fn closed_form(kind: CircuitKind) -> sqfock::Result<Check> {
    let mut worst: f64 = 0.0;
    for r in GRID_R {
        if kind == CircuitKind::SingleSeeded {
            worst = worst.max((engine(kind, &[r])? - amp_single_crystal_11(r)).norm());
            continue;
        }
        for phi in GRID_PHI {
            let (params, want) = match kind {
                CircuitKind::TwoCrystal => (vec![r, 0.7 * r, phi], amp_two_crystal_11(r, 0.7 * r, phi)),
                CircuitKind::ThreeCrystal => {
                    let p = [r, 0.5 * r, 0.8 * r, phi, PI - phi];
                    (p.to_vec(), amp_three_crystal_11(p[0], p[1], p[2], p[3], p[4]))
                }
                _ => {
                    let p = [r, 0.9 * r, 0.6 * r, 1.1 * r, phi];
                    (p.to_vec(), amp_four_crystal_1111(p[0], p[1], p[2], p[3], p[4]))
                }
            };
            worst = worst.max((engine(kind, &params)? - want).norm());
        }
    }
    Ok(Check {
        suite: "closedform",
        name: kind.name().to_string(),
        deviation: worst,
    })
}

fn series(kind: CircuitKind) -> sqfock::Result<Check> {
    let policy = kind.default_policy();
    let mut worst: f64 = 0.0;
    for r in GRID_R {
        for phi in GRID_PHI {
            let (params, s) = match kind {
                CircuitKind::TwoCrystal => (vec![r, r, phi], two_crystal_series_state(r, r, phi, &policy)?),
                CircuitKind::ThreeCrystal => (
                    vec![r, r, r, phi, phi],
                    three_crystal_series_state(r, r, r, phi, phi, &policy)?,
                ),
                _ => (
                    vec![r, r, r, r, phi],
                    four_crystal_series_state(r, r, r, r, phi, &policy)?,
                ),
            };
            let state = run(&standard_circuit(kind, &params)?, &policy)?;
            worst = worst.max(state.max_deviation(&s));
        }
    }
    Ok(Check {
        suite: "series",
        name: kind.name().to_string(),
        deviation: worst,
    })
}

pub fn run_suite(suite: Suite) -> sqfock::Result<Vec<Check>> {
    let mut out = Vec::new();
    if matches!(suite, Suite::Oracle | Suite::All) {
        out.extend(oracle()?);
    }
    if matches!(suite, Suite::Closedform | Suite::All) {
        let checks: sqfock::Result<Vec<Check>> = CircuitKind::ALL.par_iter().map(|&k| closed_form(k)).collect();
        out.extend(checks?);
    }
    if matches!(suite, Suite::Series | Suite::All) {
        let kinds = [
            CircuitKind::TwoCrystal,
            CircuitKind::ThreeCrystal,
            CircuitKind::FourCrystal,
        ];
        let checks: sqfock::Result<Vec<Check>> = kinds.par_iter().map(|&k| series(k)).collect();
        out.extend(checks?);
    }
    Ok(out)
}
