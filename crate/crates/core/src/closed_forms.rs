//! Closed-form detection amplitudes and null conditions for the standard
//! one- to four-crystal geometries (all squeezing phases zero).
//!
//! Everything is written in terms of `t = tanh r` and `s = sech r`, with `r`
//! capped at [`R_CAP`] before `cosh` is taken.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::Amplitude;

/// Squeezing strengths above this are clamped before evaluating `cosh`.
pub const R_CAP: f64 = 350.0;

/// Slack allowed when an `arccos` argument sits just outside `[-1, 1]`.
pub const ACOS_SLACK: f64 = 1e-12;

fn sech(r: f64) -> f64 {
    1.0 / r.min(R_CAP).cosh()
}

fn cis(phi: f64) -> Complex64 {
    Complex64::from_polar(1.0, phi)
}

/// `arccos(x)` for `x` within [`ACOS_SLACK`] of `[-1, 1]`.
fn acos_clamped(x: f64) -> Option<f64> {
    if x.abs() <= 1.0 {
        Some(x.acos())
    } else if x.abs() <= 1.0 + ACOS_SLACK {
        Some(x.signum().acos())
    } else {
        None
    }
}

/// Reduces an angle to `[0, 2π)`.
pub fn wrap_angle(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

fn check_r(name: &str, r: f64) -> Result<()> {
    if r >= 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be finite and >= 0, got {r}"
        )))
    }
}

fn check_positive(name: &str, r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be finite and > 0, got {r}"
        )))
    }
}

/// `⟨1,1|S₂(r)|1,1⟩ = (1 − sinh²r) / cosh³r`.
pub fn amp_single_crystal_11(r: f64) -> Amplitude {
    let t = r.tanh();
    let s = sech(r);
    // (1 − sinh²r)/cosh³r = s (s² − t²)
    Amplitude::new(s * (s * s - t * t), 0.0)
}

/// Same amplitude in terms of the gain `g = cosh²r`: `(2 − g) / g^{3/2}`.
pub fn amp_single_crystal_11_gain(g: f64) -> f64 {
    (2.0 - g) / g.powf(1.5)
}

/// `|1,1⟩` amplitude behind two crystals with a phase `phi` on mode `a` in
/// between, starting from vacuum.
pub fn amp_two_crystal_11(r1: f64, r2: f64, phi: f64) -> Amplitude {
    let (t1, t2) = (r1.tanh(), r2.tanh());
    let e = cis(phi);
    let den = Complex64::new(1.0, 0.0) + e * t1 * t2;
    -(t2 + e * t1) * (sech(r1) * sech(r2)) / (den * den)
}

/// [`amp_two_crystal_11`] for equal strengths, written with the common
/// factor `1 + e^{iφ}` pulled out so the null at `φ = π` is exact.
pub fn amp_two_crystal_11_equal(r: f64, phi: f64) -> Amplitude {
    let t = r.tanh();
    let s = sech(r);
    let e = cis(phi);
    let den = Complex64::new(1.0, 0.0) + e * t * t;
    -(Complex64::new(1.0, 0.0) + e) * (s * s * t) / (den * den)
}

/// Partial sum over `terms` pair-exchange orders of the geometric series
/// behind [`amp_two_crystal_11`]. Requires `r2 > 0`.
pub fn amp_two_crystal_11_series(r1: f64, r2: f64, phi: f64, terms: usize) -> Amplitude {
    let (t1, t2) = (r1.tanh(), r2.tanh());
    let c1 = r1.cosh();
    let c2 = r2.cosh();
    let sh2 = r2.sinh().powi(2);
    let z = -cis(phi) * (t1 * t2);
    let scale = 1.0 / (c1 * c2.powi(3) * t2);
    let mut zn = Complex64::new(1.0, 0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for n in 0..terms {
        acc += zn * (n as f64 - sh2);
        zn *= z;
    }
    acc * scale
}

/// Second derivative of `|A₁₁|²` with respect to the phase at `φ = π`,
/// two equal crystals: `sinh²(2r) / 2`.
pub fn curvature_two_crystal(r: f64) -> f64 {
    (2.0 * r).sinh().powi(2) / 2.0
}

/// `|1,1⟩` amplitude behind three crystals with phases `phi1`, `phi2` on
/// mode `a` after the first and second crystal.
pub fn amp_three_crystal_11(r1: f64, r2: f64, r3: f64, phi1: f64, phi2: f64) -> Amplitude {
    let (t1, t2, t3) = (r1.tanh(), r2.tanh(), r3.tanh());
    let s = sech(r1) * sech(r2) * sech(r3);
    let e1 = cis(phi1);
    let e2 = cis(phi2);
    let one = Complex64::new(1.0, 0.0);
    let num = (one + e1 * t1 * t2) * t3 + e2 * (e1 * t1 + t2);
    let den = one + e1 * (t1 * t2) + e2 * (t2 * t3) + e1 * e2 * (t1 * t3);
    -num * s / (den * den)
}

/// Phase `ϑ(r) = 2 arccos(sech r / 2)` at which three equal crystals with
/// `φ₁ = φ₂ = ϑ` (or `2π − ϑ`) emit no `|1,1⟩` component.
pub fn three_crystal_equal_null_phase(r: f64) -> f64 {
    2.0 * (sech(r) / 2.0).acos()
}

/// A phase pair `(φ₁, φ₂)` that cancels the three-crystal `|1,1⟩` amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeCrystalNull {
    pub phi1: f64,
    pub phi2: f64,
    pub feasible: bool,
}

impl ThreeCrystalNull {
    const INFEASIBLE: Self = Self {
        phi1: 0.0,
        phi2: 0.0,
        feasible: false,
    };
}

/// Interval of `tanh r₃` for which a three-crystal null exists.
pub fn three_crystal_t3_window(r1: f64, r2: f64) -> (f64, f64) {
    let (t1, t2) = (r1.tanh(), r2.tanh());
    ((t1 - t2).abs() / (1.0 - t1 * t2), (t1 + t2) / (1.0 + t1 * t2))
}

/// Both phase pairs cancelling the three-crystal `|1,1⟩` amplitude, or two
/// infeasible entries when `tanh r₃` lies outside
/// [`three_crystal_t3_window`]. Phases are in `[0, 2π)`.
pub fn three_crystal_null(r1: f64, r2: f64, r3: f64) -> Result<[ThreeCrystalNull; 2]> {
    check_positive("r1", r1)?;
    check_positive("r2", r2)?;
    check_positive("r3", r3)?;
    let (t1, t2, t3) = (r1.tanh(), r2.tanh(), r3.tanh());
    let (lo, hi) = three_crystal_t3_window(r1, r2);
    let slack = ACOS_SLACK * hi.max(1.0);
    if t3 < lo - slack || t3 > hi + slack {
        return Ok([ThreeCrystalNull::INFEASIBLE; 2]);
    }
    let c = (t3 * t3 * (1.0 + t1 * t1 * t2 * t2) - t1 * t1 - t2 * t2) / (2.0 * t1 * t2 * (1.0 - t3 * t3));
    let Some(a) = acos_clamped(c) else {
        return Ok([ThreeCrystalNull::INFEASIBLE; 2]);
    };
    let solve = |phi1: f64| {
        let e1 = cis(phi1);
        let w = -(Complex64::new(1.0, 0.0) + e1 * (t1 * t2)) * t3 / (e1 * t1 + t2);
        ThreeCrystalNull {
            phi1: wrap_angle(phi1),
            phi2: wrap_angle(w.arg()),
            feasible: true,
        }
    };
    Ok([solve(a), solve(TAU - a)])
}

/// `|1,1,1,1⟩` amplitude of the four-crystal geometry: crystals I (modes
/// a,c) and II (b,d) fire first, then a phase `phi` on `a`, then crystals
/// III (a,b) and IV (c,d).
pub fn amp_four_crystal_1111(r1: f64, r2: f64, r3: f64, r4: f64, phi: f64) -> Amplitude {
    let (t1, t2, t3, t4) = (r1.tanh(), r2.tanh(), r3.tanh(), r4.tanh());
    let (s1, s2, s3, s4) = (sech(r1), sech(r2), sech(r3), sech(r4));
    let e = cis(phi);
    let one = Complex64::new(1.0, 0.0);
    // (cosh 2r₃ cosh 2r₄ − 3) / (cosh²r₃ cosh²r₄)
    let upper = (1.0 + t3 * t3) * (1.0 + t4 * t4) - 3.0 * s3 * s3 * s4 * s4;
    let den = e * (t1 * t2 * t3 * t4) - one;
    let bracket = e * (upper * t1 * t2) - (one + e * e * (t1 * t1 * t2 * t2)) * (2.0 * t3 * t4);
    bracket * (s1 * s2 * s3 * s4) / (2.0 * den * den * den)
}

/// [`amp_four_crystal_1111`] with all four strengths equal, in its
/// polynomial-in-`e^{iφ}` form. Intended for moderate `r`.
pub fn amp_four_crystal_1111_equal(r: f64, phi: f64) -> Amplitude {
    let t = r.tanh();
    let s = sech(r);
    let e = cis(phi);
    let den = e * t.powi(4) - 1.0;
    let poly = Complex64::new(3.0 + 4.0 * (2.0 * r).cosh() + (4.0 * r).cosh(), 0.0)
        + e * (2.0 * (5.0 - (4.0 * r).cosh()))
        + e * e * (8.0 * r.sinh().powi(4));
    -poly * (s.powi(8) * t * t) / (8.0 * den * den * den)
}

/// [`amp_four_crystal_1111`] with `r₂ = r₁` and `r₄ = r₃`.
pub fn amp_four_crystal_1111_rows(r1: f64, r3: f64, phi: f64) -> Amplitude {
    let (t1, t3) = (r1.tanh(), r3.tanh());
    let (s1, s3) = (sech(r1), sech(r3));
    let e = cis(phi);
    let one = Complex64::new(1.0, 0.0);
    let den = e * (t1 * t1 * t3 * t3) - one;
    // (cosh 4r₃ − 5) sech⁴r₃ = 2(1 + t₃²)² − 6 s₃⁴
    let upper = 2.0 * (1.0 + t3 * t3).powi(2) - 6.0 * s3.powi(4);
    let bracket = e * (upper * t1 * t1) - (one + e * e * t1.powi(4)) * (4.0 * t3 * t3);
    bracket * (s1 * s1 * s3 * s3) / (4.0 * den * den * den)
}

/// Upper-row strength `r₃ = r₄` that cancels `|1,1,1,1⟩` at `φ = π` when
/// `r₂ = r₁`: `r₃ = ½ arsinh(tanh 2r₁)`.
pub fn four_crystal_null_r3(r1: f64) -> Result<f64> {
    check_r("r1", r1)?;
    Ok(0.5 * (2.0 * r1).tanh().asinh())
}

/// Lower-row strength `r₁ = r₂` that cancels `|1,1,1,1⟩` at `φ = 0` for an
/// asymmetric upper row, or `None` unless `|r₃ − r₄| > arsinh(1)`.
pub fn four_crystal_phi0_null_r1(r3: f64, r4: f64) -> Result<Option<f64>> {
    check_positive("r3", r3)?;
    check_positive("r4", r4)?;
    let delta = (r3 - r4).abs();
    if delta <= 1f64.asinh() {
        return Ok(None);
    }
    let den = (2.0 * delta).cosh() - 3.0;
    if den <= 0.0 {
        return Ok(None);
    }
    let arg = 2.0 * (2.0 * r3).sinh() * (2.0 * r4).sinh() / den;
    Ok(Some(0.5 * arg.sqrt().asinh()))
}

/// Low-gain leading term of the two-crystal amplitude, `−(1 + e^{iφ}) r`.
pub fn two_crystal_low_gain(r: f64, phi: f64) -> Amplitude {
    -(Complex64::new(1.0, 0.0) + cis(phi)) * r
}

/// Low-gain expansion of the equal-strength four-crystal amplitude through
/// fourth order, `(1 + e^{iφ}) r² − 4/3 (2 + 5e^{iφ}) r⁴`.
pub fn four_crystal_low_gain(r: f64, phi: f64) -> Amplitude {
    let e = cis(phi);
    (Complex64::new(1.0, 0.0) + e) * (r * r) - (Complex64::new(2.0, 0.0) + e * 5.0) * (4.0 / 3.0 * r.powi(4))
}

/// Limit of [`three_crystal_equal_null_phase`] as `r → 0`.
pub const THREE_CRYSTAL_LOW_GAIN_PHASE: f64 = 2.0 * PI / 3.0;
