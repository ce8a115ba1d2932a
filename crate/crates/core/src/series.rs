//! Output states of the standard two-, three- and four-crystal geometries
//! written as explicit nested sums over pair-creation and pair-annihilation
//! indices. Each crystal's `(n, k)` terms are evaluated in double-double
//! precision and summed per output ket; the crystals are then chained by
//! explicit loops over those kets. No code is shared with the engine.

use std::collections::{BTreeMap, HashMap};

use ndarray::{Array2, Array4};
use num_complex::Complex64;
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::fock::{Amplitude, OccupationVector, SparseFockState, TruncationPolicy};

/// Output of a crystal acting on `|p,q⟩` after `n` pairs are removed and
/// `k` created. Columns keep one entry per output ket, with `n = 0` or
/// `k = 0`.
#[derive(Debug, Clone, Copy)]
struct Term {
    n: u32,
    k: u32,
    coef: f64,
}

#[derive(Debug, Clone)]
struct Column {
    terms: Vec<Term>,
    tail: f64,
}

/// `C(n, j)` as a running product.
fn binom(n: u32, j: u32) -> TwoFloat {
    (0..j).fold(TwoFloat::from(1.0), |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// Coefficients of a zero-phase squeezer on `|p,q⟩`, restricted to outputs
/// within the photon cap.
///
/// Every `(n, k)` term is evaluated and summed in double-double arithmetic:
/// the terms feeding one output alternate in sign and grow like a central
/// binomial in the input occupation, so a plain double sum loses about
/// `log10 C(m, m/2)` digits. Output `m'` (the smaller output occupation is
/// `min(p,q) − n + k = m'`) is complete once `k = m'`; the `k` series stops
/// when completed outputs are past their peak and either below `term_floor`
/// or beyond the cap. The tail is the dropped beyond-cap mass plus a
/// geometric remainder with ratio `max(tanh r, last observed ratio)`.
fn column(p: u32, q: u32, r: f64, policy: &TruncationPolicy) -> Result<Column> {
    if r == 0.0 {
        return Ok(Column {
            terms: vec![Term { n: 0, k: 0, coef: 1.0 }],
            tail: 0.0,
        });
    }
    if r.tanh() >= crate::engine::TANH_LIMIT {
        return Err(Error::Unconvergent { tanh_r: r.tanh() });
    }
    // `t` is the rounded tanh taken as exact; `s` then satisfies
    // `t² + s² = 1` to double-double accuracy, which the cancellation needs.
    let tf = r.tanh();
    let t = TwoFloat::from(tf);
    let s = (TwoFloat::from(1.0) - t * t).sqrt();
    let cap = policy.photon_cap;
    let m = p.min(q);
    let within = |m_out: u32| p - m + m_out <= cap && q - m + m_out <= cap;
    let lower: Vec<TwoFloat> = (0..=m).map(|n| (binom(p, n) * binom(q, n)).sqrt()).collect();
    let mut sums: BTreeMap<u32, TwoFloat> = BTreeMap::new();
    let mut terms = Vec::new();
    let mut dropped_sq = 0.0;
    let mut prev: Option<f64> = None;
    for k in 0.. {
        if k > m && (k - m) as usize > policy.k_max {
            return Err(Error::KMaxExceeded {
                k_max: policy.k_max,
                tail_bound: f64::INFINITY,
            });
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        for n in 0..=m {
            let upper = (binom(p - n + k, k) * binom(q - n + k, k)).sqrt();
            let coef = t.powi((n + k) as i32) * s.powi((p + q - 2 * n + 1) as i32) * lower[n as usize] * upper * sign;
            *sums.entry(k + m - n).or_default() += coef;
        }
        let done = f64::from(sums.remove(&k).unwrap_or_default());
        if within(k) {
            let (n, kk) = if k <= m { (m - k, 0) } else { (0, k - m) };
            terms.push(Term { n, k: kk, coef: done });
        } else {
            dropped_sq += done * done;
        }
        let mag = done.abs();
        let ratio = match prev {
            Some(pm) if pm > 0.0 => mag / pm,
            Some(_) => 0.0,
            None => f64::INFINITY,
        };
        if k > m && ratio < 1.0 && (mag < policy.term_floor || !within(k)) {
            let rho = tf.max(ratio);
            return Ok(Column {
                terms,
                tail: dropped_sq.sqrt() + mag * rho / (1.0 - rho),
            });
        }
        prev = Some(mag);
    }
    unreachable!()
}

#[derive(Default)]
struct ColumnCache {
    r: f64,
    cols: HashMap<(u32, u32), Column>,
}

impl ColumnCache {
    fn new(r: f64) -> Self {
        Self {
            r,
            cols: HashMap::new(),
        }
    }

    fn get(&mut self, p: u32, q: u32, policy: &TruncationPolicy) -> Result<&Column> {
        if !self.cols.contains_key(&(p, q)) {
            let col = column(p, q, self.r, policy)?;
            self.cols.insert((p, q), col);
        }
        Ok(&self.cols[&(p, q)])
    }
}

fn check(rs: &[f64], policy: &TruncationPolicy) -> Result<()> {
    policy.validate()?;
    for &r in rs {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!("r must be finite and >= 0, got {r}")));
        }
    }
    Ok(())
}

fn cis(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, x)
}

fn finish(
    terms: BTreeMap<OccupationVector, Amplitude>,
    modes: usize,
    tail: f64,
    policy: &TruncationPolicy,
) -> SparseFockState {
    let mut s = SparseFockState::from_parts(modes, terms, tail);
    s.prune_in_place(policy.prune_floor);
    s
}

fn diagonal_state(acc: &Array2<Complex64>, tail: f64, policy: &TruncationPolicy) -> Result<SparseFockState> {
    let mut terms = BTreeMap::new();
    for ((a, b), &v) in acc.indexed_iter() {
        if v.norm_sqr() > 0.0 {
            terms.insert(OccupationVector::new(&[a as u32, b as u32])?, v);
        }
    }
    Ok(finish(terms, 2, tail, policy))
}

/// `S_ab(r2) Φ_a(phi) S_ab(r1) |0,0⟩` as a triple sum over `(k₁, n, k₂)`.
pub fn two_crystal_series_state(r1: f64, r2: f64, phi: f64, policy: &TruncationPolicy) -> Result<SparseFockState> {
    check(&[r1, r2], policy)?;
    let dim = policy.photon_cap as usize + 1;
    let mut acc = Array2::<Complex64>::zeros((dim, dim));
    let first = column(0, 0, r1, policy)?;
    let mut second = ColumnCache::new(r2);
    let mut tail = first.tail;
    for t1 in &first.terms {
        let k1 = t1.k;
        let a1 = cis(phi * f64::from(k1)) * t1.coef;
        let col = second.get(k1, k1, policy)?;
        tail += a1.norm() * col.tail;
        for t2 in &col.terms {
            let j = (k1 - t2.n + t2.k) as usize;
            acc[[j, j]] += a1 * t2.coef;
        }
    }
    diagonal_state(&acc, tail, policy)
}

/// `S_ab(r3) Φ_a(phi2) S_ab(r2) Φ_a(phi1) S_ab(r1) |0,0⟩` as a five-fold sum
/// over `(k₁, n, k₂, m, k₃)`.
pub fn three_crystal_series_state(
    r1: f64,
    r2: f64,
    r3: f64,
    phi1: f64,
    phi2: f64,
    policy: &TruncationPolicy,
) -> Result<SparseFockState> {
    check(&[r1, r2, r3], policy)?;
    let dim = policy.photon_cap as usize + 1;
    let mut acc = Array2::<Complex64>::zeros((dim, dim));
    let first = column(0, 0, r1, policy)?;
    let mut second = ColumnCache::new(r2);
    let mut third = ColumnCache::new(r3);
    let mut tail = first.tail;
    for t1 in &first.terms {
        let k1 = t1.k;
        let a1 = cis(phi1 * f64::from(k1)) * t1.coef;
        let col2 = second.get(k1, k1, policy)?.clone();
        tail += a1.norm() * col2.tail;
        for t2 in &col2.terms {
            let j = k1 - t2.n + t2.k;
            let a2 = a1 * cis(phi2 * f64::from(j)) * t2.coef;
            let col3 = third.get(j, j, policy)?;
            tail += a2.norm() * col3.tail;
            for t3 in &col3.terms {
                let o = (j - t3.n + t3.k) as usize;
                acc[[o, o]] += a2 * t3.coef;
            }
        }
    }
    diagonal_state(&acc, tail, policy)
}

/// `S_cd(r4) S_ab(r3) Φ_a(phi) S_bd(r2) S_ac(r1) |0,0,0,0⟩` as a six-fold
/// sum over `(k₁, k₂, n, k₃, m, k₄)`, modes ordered `a, b, c, d`.
pub fn four_crystal_series_state(
    r1: f64,
    r2: f64,
    r3: f64,
    r4: f64,
    phi: f64,
    policy: &TruncationPolicy,
) -> Result<SparseFockState> {
    check(&[r1, r2, r3, r4], policy)?;
    let dim = policy.photon_cap as usize + 1;
    let mut acc = Array4::<Complex64>::zeros((dim, dim, dim, dim));
    let first = column(0, 0, r1, policy)?;
    let second = column(0, 0, r2, policy)?;
    let mut third = ColumnCache::new(r3);
    let mut fourth = ColumnCache::new(r4);
    let norm1: f64 = first.terms.iter().map(|t| t.coef * t.coef).sum::<f64>().sqrt();
    let mut tail = first.tail + norm1 * second.tail;
    for t1 in &first.terms {
        for t2 in &second.terms {
            let (k1, k2) = (t1.k, t2.k);
            let a = cis(phi * f64::from(k1)) * (t1.coef * t2.coef);
            let col3 = third.get(k1, k2, policy)?.clone();
            let col4 = fourth.get(k1, k2, policy)?;
            // Crystals III and IV act on disjoint modes, so their tails add.
            tail += a.norm() * (col3.tail + col4.tail);
            for t3 in &col3.terms {
                let (oa, ob) = ((k1 - t3.n + t3.k) as usize, (k2 - t3.n + t3.k) as usize);
                let a3 = a * t3.coef;
                for t4 in &col4.terms {
                    let (oc, od) = ((k1 - t4.n + t4.k) as usize, (k2 - t4.n + t4.k) as usize);
                    acc[[oa, ob, oc, od]] += a3 * t4.coef;
                }
            }
        }
    }
    let mut terms = BTreeMap::new();
    for ((a, b, c, d), &v) in acc.indexed_iter() {
        if v.norm_sqr() > 0.0 {
            terms.insert(OccupationVector::new(&[a as u32, b as u32, c as u32, d as u32])?, v);
        }
    }
    Ok(finish(terms, 4, tail, policy))
}
