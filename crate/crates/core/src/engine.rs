//! Two-mode squeezing and phase shifts acting on sparse Fock states.
//!
//! The squeezer `S₂(ζ) = exp(ζ* ab − ζ a†b†)`, `ζ = r e^{iθ}`, is applied
//! through its normal-ordered Fock-basis expansion
//!
//! ```text
//! S₂|p,q⟩ = Σ_k Σ_{n ≤ min(p,q)} (e^{-iθ} t)^n (−e^{iθ} t)^k / c^{p+q−2n+1}
//!           · sqrt(C(p,n) C(q,n) C(p−n+k,k) C(q−n+k,k)) |p−n+k, q−n+k⟩
//! ```
//!
//! with `t = tanh r`, `c = cosh r`. For each output ket the inner `n` sum is
//! finite and alternating; its terms can exceed the result by many orders of
//! magnitude once photon numbers and gain are large. When the direct sum
//! would lose precision, the same finite sum is evaluated in its resummed
//! Jacobi-polynomial form,
//!
//! ```text
//! ⟨m'+δ, m'|S₂|m+δ, m⟩ = (−1)^{m'} e^{iθ(m'−m)} t^{|m'−m|} c^{−(δ+1)}
//!     · sqrt((m+δ)!/m! · (m'+δ)!/m'!) · μ!/(μ+δ)! · P_μ^{(δ,|m'−m|)}(1 − 2/c²),
//! ```
//!
//! `μ = min(m, m')`, whose degree recurrence is stable on `[-1, 1]`.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{Amplitude, SparseFockState, TruncationPolicy};
use crate::special::{jacobi_scaled, ln_binomial, ln_cosh, ln_rising};

/// Largest `tanh r` for which the pair series is summed.
pub const TANH_LIMIT: f64 = 1.0 - 1e-12;

/// Two-mode squeezer `S₂(r e^{iθ})` acting on `(mode_a, mode_b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoModeSqueezer {
    pub mode_a: usize,
    pub mode_b: usize,
    pub r: f64,
    pub theta: f64,
}

impl TwoModeSqueezer {
    pub fn new(mode_a: usize, mode_b: usize, r: f64, theta: f64) -> Result<Self> {
        let sq = Self {
            mode_a,
            mode_b,
            r,
            theta,
        };
        sq.validate()?;
        Ok(sq)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode_a == self.mode_b {
            return Err(Error::InvalidParameter(format!(
                "squeezer needs two distinct modes, got {} twice",
                self.mode_a
            )));
        }
        if !(self.r >= 0.0 && self.r.is_finite()) || !self.theta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "squeezer needs finite r >= 0 and finite theta, got r={} theta={}",
                self.r, self.theta
            )));
        }
        Ok(())
    }
}

/// Single-mode phase shift `e^{iφ n}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseShifter {
    pub mode: usize,
    pub phi: f64,
}

impl PhaseShifter {
    pub fn new(mode: usize, phi: f64) -> Result<Self> {
        if !phi.is_finite() {
            return Err(Error::InvalidParameter(format!("phase must be finite, got {phi}")));
        }
        Ok(Self { mode, phi })
    }
}

/// Output of [`squeeze_pair_coefficients`]: the kept coefficients
/// `(p', q', ⟨p',q'|S₂|p,q⟩)` in increasing `p'` order, plus an upper bound on
/// the ℓ2 norm of everything not returned.
#[derive(Debug, Clone, PartialEq)]
pub struct PairExpansion {
    pub coefficients: Vec<(u32, u32, Amplitude)>,
    pub tail_bound: f64,
    /// Part of `tail_bound` that may belong to outputs inside the photon
    /// cap: nonzero only when the series stopped on `term_floor` before
    /// leaving the cap.
    pub inside_cap: f64,
}

/// Precomputed quantities for one squeezing strength.
#[derive(Debug, Clone, Copy)]
struct Kernel {
    t: f64,
    ln_t: f64,
    ln_c: f64,
    ln_sh: f64,
    x: f64,
    theta: f64,
}

impl Kernel {
    fn new(r: f64, theta: f64) -> Result<Self> {
        let t = r.tanh();
        if t >= TANH_LIMIT {
            return Err(Error::Unconvergent { tanh_r: t });
        }
        let ln_c = ln_cosh(r);
        Ok(Self {
            t,
            ln_t: t.ln(),
            ln_c,
            ln_sh: t.ln() + ln_c,
            x: 1.0 - 2.0 * (-2.0 * ln_c).exp(),
            theta,
        })
    }

    /// Direct evaluation of the finite `n` sum for one output ket, or `None`
    /// when cancellation between its terms would cost accuracy.
    fn direct(&self, p: u32, q: u32, p_out: u32, q_out: u32) -> Option<f64> {
        // d = k − n is the net number of created pairs.
        let d = i64::from(p_out) - i64::from(p);
        let n_lo = (-d).max(0) as u32;
        let n_hi = p.min(q);
        if n_lo > n_hi {
            return Some(0.0);
        }
        let k_of = |n: u32| (i64::from(n) + d) as u32;

        let n = n_lo;
        let k = k_of(n);
        let mut ln_mag = f64::from(n + k) * self.ln_t - f64::from(p + q - 2 * n + 1) * self.ln_c
            + 0.5 * (ln_binomial(p, n) + ln_binomial(q, n) + ln_binomial(p_out, k) + ln_binomial(q_out, k));

        let mut sum = 0.0;
        let mut l1 = 0.0;
        let count = n_hi - n_lo + 1;
        for n in n_lo..=n_hi {
            let k = k_of(n);
            if ln_mag > 700.0 {
                return None;
            }
            let mag = ln_mag.exp();
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * mag;
            l1 += mag;
            if l1 * f64::from(count + 2) > 8.0 {
                return None;
            }
            if n < n_hi {
                let num = f64::from(p - n) * f64::from(q - n) * f64::from(p_out - k) * f64::from(q_out - k);
                let den = f64::from(n + 1) * f64::from(n + 1) * f64::from(k + 1) * f64::from(k + 1);
                ln_mag += 2.0 * self.ln_sh + 0.5 * (num / den).ln();
            }
        }
        // Rounding error of the alternating sum is about count · ε · ℓ1.
        if l1 * f64::from(count + 2) <= 8.0 {
            Some(sum)
        } else {
            None
        }
    }

    /// Resummed evaluation, valid for every output ket.
    fn jacobi(&self, p: u32, q: u32, p_out: u32, q_out: u32) -> f64 {
        let (delta, m, m_out) = if p >= q { (p - q, q, q_out) } else { (q - p, p, p_out) };
        let mu = m.min(m_out);
        let beta = m.abs_diff(m_out);
        let ln_pref = f64::from(beta) * self.ln_t - f64::from(delta + 1) * self.ln_c
            + 0.5 * (ln_rising(m, delta) + ln_rising(m_out, delta))
            - ln_rising(mu, delta);
        let (poly, ln_scale) = jacobi_scaled(mu as usize, f64::from(delta), f64::from(beta), self.x);
        let sign = if m_out % 2 == 0 { 1.0 } else { -1.0 };
        sign * poly * (ln_pref + ln_scale).exp()
    }

    fn coefficient(&self, p: u32, q: u32, p_out: u32, q_out: u32) -> Amplitude {
        if i64::from(p_out) - i64::from(p) != i64::from(q_out) - i64::from(q) {
            return Amplitude::new(0.0, 0.0);
        }
        let real = self
            .direct(p, q, p_out, q_out)
            .unwrap_or_else(|| self.jacobi(p, q, p_out, q_out));
        let d = f64::from(p_out) - f64::from(p);
        if self.theta == 0.0 || d == 0.0 {
            Amplitude::new(real, 0.0)
        } else {
            Complex64::from_polar(real, self.theta * d)
        }
    }
}

/// Single matrix element `⟨p',q'|S₂(r e^{iθ})|p,q⟩`.
pub fn pair_coefficient(p: u32, q: u32, p_out: u32, q_out: u32, r: f64, theta: f64) -> Result<Amplitude> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("r must be finite and >= 0, got {r}")));
    }
    if r == 0.0 {
        let hit = p == p_out && q == q_out;
        return Ok(Amplitude::new(if hit { 1.0 } else { 0.0 }, 0.0));
    }
    Ok(Kernel::new(r, theta)?.coefficient(p, q, p_out, q_out))
}

/// Expands `S₂(r e^{iθ})|p,q⟩` into its Fock coefficients.
///
/// Outputs are indexed by the net number of created pairs. Pair creation is
/// summed until the coefficients are past their peak and either fall below
/// `policy.term_floor` or leave the photon cap; the remainder is bounded
/// geometrically with ratio `max(tanh r, last observed ratio)`. Coefficients
/// beyond `policy.photon_cap` are not returned, their mass goes into
/// `tail_bound`.
pub fn squeeze_pair_coefficients(
    p: u32,
    q: u32,
    r: f64,
    theta: f64,
    policy: &TruncationPolicy,
) -> Result<PairExpansion> {
    policy.validate()?;
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("r must be finite and >= 0, got {r}")));
    }
    if r == 0.0 {
        return Ok(PairExpansion {
            coefficients: vec![(p, q, Amplitude::new(1.0, 0.0))],
            tail_bound: 0.0,
            inside_cap: 0.0,
        });
    }
    let kernel = Kernel::new(r, theta)?;
    let m = p.min(q);
    let cap = policy.photon_cap;

    let mut coefficients = Vec::new();
    let mut dropped_sq = 0.0;
    let mut prev_mag: Option<f64> = None;
    let mut m_out: u32 = 0;
    loop {
        let p_out = p - m + m_out;
        let q_out = q - m + m_out;
        let c = kernel.coefficient(p, q, p_out, q_out);
        let mag = c.norm();
        let kept = p_out <= cap && q_out <= cap;

        let ratio = match prev_mag {
            Some(pm) if pm > 0.0 => mag / pm,
            Some(_) => 0.0,
            None => f64::INFINITY,
        };
        let past_peak = m_out > m && ratio < 1.0;
        let rho = kernel.t.max(ratio);
        let remainder = mag * rho / (1.0 - rho);

        if kept {
            coefficients.push((p_out, q_out, c));
        } else {
            dropped_sq += mag * mag;
        }
        if past_peak && (mag < policy.term_floor || !kept) {
            return Ok(PairExpansion {
                coefficients,
                tail_bound: dropped_sq.sqrt() + remainder,
                inside_cap: if kept { remainder } else { 0.0 },
            });
        }
        if m_out > m && (m_out - m) as usize >= policy.k_max {
            let tail_bound = if past_peak {
                dropped_sq.sqrt() + remainder
            } else {
                f64::INFINITY
            };
            return Err(Error::KMaxExceeded {
                k_max: policy.k_max,
                tail_bound,
            });
        }
        prev_mag = Some(mag);
        m_out += 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct ExpansionKey {
    p: u32,
    q: u32,
    r: u64,
    theta: u64,
    photon_cap: u32,
    k_max: usize,
    term_floor: u64,
}

#[derive(Default)]
struct ExpansionCache {
    map: HashMap<ExpansionKey, Arc<PairExpansion>>,
    stored: usize,
}

/// Coefficients held per thread before the cache is flushed.
const CACHE_LIMIT: usize = 1 << 21;

thread_local! {
    // Sweeps revisit the same squeezers with only phases or other crystals
    // changing; the expansions are pure functions of the key.
    static EXPANSIONS: RefCell<ExpansionCache> = RefCell::new(ExpansionCache::default());
}

fn cached_expansion(p: u32, q: u32, r: f64, theta: f64, policy: &TruncationPolicy) -> Result<Arc<PairExpansion>> {
    let key = ExpansionKey {
        p,
        q,
        r: r.to_bits(),
        theta: theta.to_bits(),
        photon_cap: policy.photon_cap,
        k_max: policy.k_max,
        term_floor: policy.term_floor.to_bits(),
    };
    if let Some(e) = EXPANSIONS.with(|c| c.borrow().map.get(&key).cloned()) {
        return Ok(e);
    }
    let e = Arc::new(squeeze_pair_coefficients(p, q, r, theta, policy)?);
    EXPANSIONS.with(|c| {
        let mut c = c.borrow_mut();
        if c.stored + e.coefficients.len() > CACHE_LIMIT {
            c.map.clear();
            c.stored = 0;
        }
        c.stored += e.coefficients.len();
        c.map.insert(key, Arc::clone(&e));
    });
    Ok(e)
}

fn check_mode(state: &SparseFockState, mode: usize) -> Result<()> {
    if mode >= state.mode_count() {
        return Err(Error::ModeOutOfRange {
            mode,
            modes: state.mode_count(),
        });
    }
    Ok(())
}

/// Applies a two-mode squeezer to every term of `state`; spectator modes are
/// carried through unchanged.
pub fn apply_squeezer(
    state: &SparseFockState,
    sq: &TwoModeSqueezer,
    policy: &TruncationPolicy,
) -> Result<SparseFockState> {
    sq.validate()?;
    policy.validate()?;
    check_mode(state, sq.mode_a)?;
    check_mode(state, sq.mode_b)?;

    let pairs: BTreeSet<(u32, u32)> = state
        .iter()
        .map(|(occ, _)| (occ.get(sq.mode_a), occ.get(sq.mode_b)))
        .collect();
    let expansions: HashMap<(u32, u32), Arc<PairExpansion>> = pairs
        .into_par_iter()
        .map(|(p, q)| cached_expansion(p, q, sq.r, sq.theta, policy).map(|e| ((p, q), e)))
        .collect::<Result<_>>()?;

    let mut acc: HashMap<_, Amplitude> = HashMap::with_capacity(state.len() * 4);
    let mut column_bound = 0.0;
    let mut inside_cap = 0.0;
    for (occ, &amp) in state.iter() {
        let e = &expansions[&(occ.get(sq.mode_a), occ.get(sq.mode_b))];
        column_bound += amp.norm() * e.tail_bound;
        inside_cap += amp.norm() * e.inside_cap;
        for &(p_out, q_out, c) in &e.coefficients {
            let key = occ.with(sq.mode_a, p_out).with(sq.mode_b, q_out);
            *acc.entry(key).or_default() += amp * c;
        }
    }
    let terms: BTreeMap<_, _> = acc.into_iter().collect();
    let in_sq = compensated_norm_sqr(state.iter().map(|(_, a)| a));
    let out_sq = compensated_norm_sqr(terms.values());
    let step = column_bound.min(unitarity_bound(in_sq, out_sq, inside_cap));
    let mut out = SparseFockState::from_parts(state.mode_count(), terms, state.tail_error() + step);
    out.prune_in_place(policy.prune_floor);
    Ok(out)
}

/// `Σ|a|²` with Neumaier compensation.
fn compensated_norm_sqr<'a>(amps: impl Iterator<Item = &'a Amplitude>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for a in amps {
        let x = a.norm_sqr();
        let t = sum + x;
        comp += if sum.abs() >= x { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + comp
}

/// Bound on `‖S x − y‖` for the computed output `y` of a unitary `S`,
/// from the mass `y` is missing: everything past the cap has norm
/// `sqrt(‖x‖² − ‖P S x‖²)` and `‖P S x − y‖ ≤ inside_cap`.
fn unitarity_bound(in_sq: f64, out_sq: f64, inside_cap: f64) -> f64 {
    let kept = (out_sq.sqrt() - inside_cap).max(0.0);
    let slack = 8.0 * f64::EPSILON * (in_sq + out_sq);
    (in_sq - kept * kept + slack).max(0.0).sqrt() + inside_cap
}

/// Multiplies each term by `e^{iφ n}`, `n` the occupation of `ph.mode`.
pub fn apply_phase(state: &SparseFockState, ph: &PhaseShifter) -> Result<SparseFockState> {
    check_mode(state, ph.mode)?;
    let terms = state
        .iter()
        .map(|(occ, &amp)| {
            let n = f64::from(occ.get(ph.mode));
            (*occ, amp * Complex64::from_polar(1.0, ph.phi * n))
        })
        .collect();
    Ok(SparseFockState::from_parts(
        state.mode_count(),
        terms,
        state.tail_error(),
    ))
}

/// Two-mode squeezed vacuum `S₂(r e^{iθ})|0,0⟩`.
pub fn squeezed_vacuum(r: f64, theta: f64, policy: &TruncationPolicy) -> Result<SparseFockState> {
    let vac = SparseFockState::vacuum(2)?;
    apply_squeezer(&vac, &TwoModeSqueezer::new(0, 1, r, theta)?, policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::OccupationVector;
    use std::f64::consts::PI;

    fn occ(c: &[u32]) -> OccupationVector {
        OccupationVector::new(c).unwrap()
    }

    fn coeff_map(e: &PairExpansion) -> HashMap<(u32, u32), Amplitude> {
        e.coefficients.iter().map(|&(a, b, c)| ((a, b), c)).collect()
    }

    /// Direct term-by-term sum of the double series with exact integer
    /// binomials; only usable for small arguments.
    fn brute_eq3(p: u32, q: u32, p_out: u32, q_out: u32, r: f64, theta: f64) -> Amplitude {
        fn binom(n: u32, k: u32) -> f64 {
            (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
        }
        let t = r.tanh();
        let c = r.cosh();
        let mut s = Amplitude::new(0.0, 0.0);
        for n in 0..=p.min(q) {
            for k in 0..200u32 {
                if p - n + k == p_out && q - n + k == q_out {
                    let phase = Complex64::from_polar(1.0, -theta * f64::from(n))
                        * Complex64::from_polar(1.0, theta * f64::from(k));
                    let mag = t.powi(n as i32) * (-t).powi(k as i32) / c.powi((p + q - 2 * n + 1) as i32)
                        * (binom(p, n) * binom(q, n) * binom(p - n + k, k) * binom(q - n + k, k)).sqrt();
                    s += phase * mag;
                }
            }
        }
        s
    }

    #[test]
    fn identity_at_zero_squeezing() {
        let e = squeeze_pair_coefficients(0, 0, 0.0, 0.0, &TruncationPolicy::default()).unwrap();
        assert_eq!(e.coefficients, vec![(0, 0, Amplitude::new(1.0, 0.0))]);
        assert_eq!(e.tail_bound, 0.0);
        assert_eq!(e.inside_cap, 0.0);
    }

    #[test]
    fn vacuum_coefficients_follow_geometric_law() {
        let (r, theta) = (0.45, 0.9);
        let e = squeeze_pair_coefficients(0, 0, r, theta, &TruncationPolicy::default()).unwrap();
        for &(a, b, c) in &e.coefficients {
            assert_eq!(a, b);
            let expect = (-Complex64::from_polar(r.tanh(), theta)).powi(a as i32) / r.cosh();
            assert!((c - expect).norm() < 1e-15, "m={a}: {c} vs {expect}");
        }
    }

    #[test]
    fn single_crystal_null_coefficient() {
        let r = 1f64.asinh();
        let e = squeeze_pair_coefficients(1, 1, r, 0.0, &TruncationPolicy::default()).unwrap();
        assert!(coeff_map(&e)[&(1, 1)].norm() < 1e-12);
    }

    #[test]
    fn matches_brute_force_double_sum() {
        for &(p, q) in &[(2, 1), (0, 3), (3, 3), (4, 1)] {
            for &r in &[0.2, 0.7, 1.1] {
                let e = squeeze_pair_coefficients(p, q, r, 0.3, &TruncationPolicy::default()).unwrap();
                for &(a, b, c) in e.coefficients.iter().filter(|c| c.0 < 25) {
                    let want = brute_eq3(p, q, a, b, r, 0.3);
                    assert!((c - want).norm() < 1e-13, "({p},{q})->({a},{b}) r={r}: {c} vs {want}");
                }
            }
        }
    }

    #[test]
    fn direct_and_resummed_routes_agree() {
        let k = Kernel::new(0.8, 0.0).unwrap();
        for p in 0..6 {
            for q in 0..6 {
                for m_out in 0..12u32 {
                    let m = p.min(q);
                    let (po, qo) = (p - m + m_out, q - m + m_out);
                    if let Some(d) = k.direct(p, q, po, qo) {
                        let j = k.jacobi(p, q, po, qo);
                        assert!((d - j).abs() < 1e-14, "({p},{q})->({po},{qo}) {d} vs {j}");
                    }
                }
            }
        }
    }

    #[test]
    fn high_photon_elements_match_extended_precision_values() {
        // Reference values from a 400-digit evaluation of the same finite sum.
        let cases = [
            (80, 80, 80, 80, 1.2, 0.034_462_451_932_444_76),
            (80, 80, 20, 20, 1.2, 0.042_174_826_072_346_14),
            (400, 400, 400, 400, 2.0, 0.006_930_064_159_917_926),
            (400, 400, 380, 380, 2.0, -0.005_065_982_497_677_353),
            (300, 300, 350, 350, 1.5, 0.003_627_963_904_832_486),
        ];
        for &(p, q, po, qo, r, want) in &cases {
            let got = pair_coefficient(p, q, po, qo, r, 0.0).unwrap();
            assert!((got.re - want).abs() < 1e-13, "({p},{q})->({po},{qo}): {got} vs {want}");
            assert_eq!(got.im, 0.0);
        }
    }

    #[test]
    fn too_strong_squeezing_is_reported() {
        let err = squeeze_pair_coefficients(0, 0, 20.0, 0.0, &TruncationPolicy::default()).unwrap_err();
        assert!(matches!(err, Error::Unconvergent { .. }));
    }

    #[test]
    fn k_max_overrun_carries_a_bound() {
        let policy = TruncationPolicy::default().with_photon_cap(500).with_k_max(10);
        let err = squeeze_pair_coefficients(0, 0, 1.0, 0.0, &policy).unwrap_err();
        match err {
            Error::KMaxExceeded { k_max, tail_bound } => {
                assert_eq!(k_max, 10);
                assert!(tail_bound.is_finite() && tail_bound > 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn photon_cap_moves_mass_into_tail() {
        let policy = TruncationPolicy::default().with_photon_cap(10);
        let r: f64 = 1.0;
        let e = squeeze_pair_coefficients(0, 0, r, 0.0, &policy).unwrap();
        assert!(e.coefficients.iter().all(|c| c.0 <= 10));
        let t2 = r.tanh().powi(2);
        let missing = (t2.powi(11) / (1.0 - t2)).sqrt() / r.cosh();
        assert!(e.tail_bound >= missing * 0.999, "{} < {missing}", e.tail_bound);
    }

    #[test]
    fn four_mode_vacuum_squeezes_the_chosen_pair() {
        let vac = SparseFockState::vacuum(4).unwrap();
        let sq = TwoModeSqueezer::new(0, 2, 0.5, 0.0).unwrap();
        let s = apply_squeezer(&vac, &sq, &TruncationPolicy::default()).unwrap();
        for (o, a) in s.iter() {
            assert_eq!(o.get(1), 0);
            assert_eq!(o.get(3), 0);
            assert_eq!(o.get(0), o.get(2));
            let k = o.get(0) as i32;
            assert!((a.re - (-0.5f64.tanh()).powi(k) / 0.5f64.cosh()).abs() < 1e-15);
        }
    }

    #[test]
    fn seeded_pair_null() {
        let s = SparseFockState::basis(occ(&[1, 1])).unwrap();
        let sq = TwoModeSqueezer::new(0, 1, 0.881_373_587_019_543, 0.0).unwrap();
        let out = apply_squeezer(&s, &sq, &TruncationPolicy::default()).unwrap();
        assert!(out.amplitude_of(&occ(&[1, 1])).unwrap().norm() < 1e-12);
    }

    #[test]
    fn cached_expansions_match_fresh_ones() {
        let policy = TruncationPolicy::sized_for(0.9);
        for (p, q) in [(0, 0), (3, 1), (7, 7)] {
            let fresh = squeeze_pair_coefficients(p, q, 0.9, 0.2, &policy).unwrap();
            assert_eq!(*cached_expansion(p, q, 0.9, 0.2, &policy).unwrap(), fresh);
            assert_eq!(*cached_expansion(p, q, 0.9, 0.2, &policy).unwrap(), fresh);
        }
        let other = policy.with_photon_cap(policy.photon_cap + 1);
        let e = cached_expansion(0, 0, 0.9, 0.2, &other).unwrap();
        assert_eq!(*e, squeeze_pair_coefficients(0, 0, 0.9, 0.2, &other).unwrap());
    }

    #[test]
    fn zero_squeezing_leaves_vacuum() {
        let vac = SparseFockState::vacuum(2).unwrap();
        let sq = TwoModeSqueezer::new(0, 1, 0.0, 0.0).unwrap();
        assert_eq!(apply_squeezer(&vac, &sq, &TruncationPolicy::default()).unwrap(), vac);
    }

    #[test]
    fn phase_shifts() {
        let s = SparseFockState::basis(occ(&[1, 1])).unwrap();
        let out = apply_phase(&s, &PhaseShifter::new(0, PI).unwrap()).unwrap();
        let a = out.amplitude_of(&occ(&[1, 1])).unwrap();
        assert!((a - Amplitude::new(-1.0, 0.0)).norm() < 1e-15);

        let sv = squeezed_vacuum(0.6, 0.0, &TruncationPolicy::default()).unwrap();
        assert_eq!(apply_phase(&sv, &PhaseShifter::new(1, 0.0).unwrap()).unwrap(), sv);
        let phi = 0.4;
        let shifted = apply_phase(&sv, &PhaseShifter::new(0, phi).unwrap()).unwrap();
        for (o, a) in shifted.iter() {
            let m = f64::from(o.get(0));
            let want = sv.amplitude_of(o).unwrap() * Complex64::from_polar(1.0, phi * m);
            assert!((a - want).norm() < 1e-15);
        }
        assert!((shifted.norm() - sv.norm()).abs() <= 1e-15);
    }

    #[test]
    fn bad_modes_are_rejected() {
        let vac = SparseFockState::vacuum(2).unwrap();
        assert!(TwoModeSqueezer::new(1, 1, 0.3, 0.0).is_err());
        let sq = TwoModeSqueezer::new(0, 2, 0.3, 0.0).unwrap();
        assert!(matches!(
            apply_squeezer(&vac, &sq, &TruncationPolicy::default()),
            Err(Error::ModeOutOfRange { mode: 2, modes: 2 })
        ));
        assert!(apply_phase(&vac, &PhaseShifter::new(5, 0.1).unwrap()).is_err());
    }

    #[test]
    fn squeezed_vacuum_values() {
        let p = TruncationPolicy::default();
        assert_eq!(
            squeezed_vacuum(0.0, 0.0, &p).unwrap(),
            SparseFockState::vacuum(2).unwrap()
        );
        let r: f64 = 0.3;
        let sv = squeezed_vacuum(r, 0.0, &p).unwrap();
        let a11 = sv.amplitude_of(&occ(&[1, 1])).unwrap();
        assert!((a11.re + r.tanh() / r.cosh()).abs() < 1e-15);
        let a22 = sv.amplitude_of(&occ(&[2, 2])).unwrap();
        assert!((a22.re - r.tanh().powi(2) / r.cosh()).abs() < 1e-15);

        let r: f64 = 1.0;
        let sv = squeezed_vacuum(r, 0.0, &p).unwrap();
        let t2 = r.tanh().powi(2);
        let bound = t2.powi(40) / r.cosh().powi(2) / (1.0 - t2);
        assert!((1.0 - sv.norm_sqr()).abs() < bound);
        assert!(1.0 - sv.norm() <= sv.tail_error() + 1e-12);
    }
}
