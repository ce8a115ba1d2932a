//! Brute-force reference: the squeezing generator as a dense matrix on a
//! truncated two-mode space, exponentiated by scaling and a Taylor series.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::Amplitude;

/// Largest scaled-generator norm fed to the Taylor series.
const SCALED_NORM: f64 = 0.5;
/// Taylor terms below this (relative to the input norm) end the series.
const SERIES_FLOOR: f64 = 1e-18;
const MAX_TERMS: usize = 60;

/// Two-mode Fock basis with both occupations in `0..=n_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruncatedBasis {
    n_max: u32,
}

impl TruncatedBasis {
    pub fn new(n_max: u32) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidParameter("n_max must be at least 1".into()));
        }
        Ok(Self { n_max })
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        let side = self.n_max as usize + 1;
        side * side
    }

    pub fn index(&self, p: u32, q: u32) -> Option<usize> {
        if p > self.n_max || q > self.n_max {
            return None;
        }
        Some(p as usize * (self.n_max as usize + 1) + q as usize)
    }

    pub fn pair(&self, index: usize) -> (u32, u32) {
        let side = self.n_max as usize + 1;
        ((index / side) as u32, (index % side) as u32)
    }

    pub fn basis_vector(&self, p: u32, q: u32) -> Result<Array1<Complex64>> {
        let i = self
            .index(p, q)
            .ok_or_else(|| Error::InvalidParameter(format!("|{p},{q}⟩ lies outside n_max = {}", self.n_max)))?;
        let mut v = Array1::zeros(self.dim());
        v[i] = Complex64::new(1.0, 0.0);
        Ok(v)
    }
}

/// Dense matrix of `ζ* ab − ζ a†b†`, `ζ = r e^{iθ}`, on the truncated basis.
pub fn build_generator(basis: &TruncatedBasis, r: f64, theta: f64) -> Array2<Complex64> {
    let dim = basis.dim();
    let mut g = Array2::zeros((dim, dim));
    let zeta = Complex64::from_polar(r, theta);
    for p in 0..=basis.n_max {
        for q in 0..=basis.n_max {
            let col = basis.index(p, q).unwrap();
            if p > 0 && q > 0 {
                let row = basis.index(p - 1, q - 1).unwrap();
                g[[row, col]] += zeta.conj() * (f64::from(p) * f64::from(q)).sqrt();
            }
            if let Some(row) = basis.index(p + 1, q + 1) {
                g[[row, col]] -= zeta * (f64::from(p + 1) * f64::from(q + 1)).sqrt();
            }
        }
    }
    g
}

/// Column-compressed nonzeros of a dense matrix.
struct Sparse {
    cols: Vec<Vec<(usize, Complex64)>>,
}

impl Sparse {
    fn from_dense(m: &Array2<Complex64>) -> Self {
        let cols = (0..m.ncols())
            .map(|j| {
                m.column(j)
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| v.norm_sqr() > 0.0)
                    .map(|(i, &v)| (i, v))
                    .collect()
            })
            .collect();
        Self { cols }
    }

    /// Same nonzeros as [`build_generator`], without the dense matrix.
    fn generator(basis: &TruncatedBasis, r: f64, theta: f64) -> Self {
        let zeta = Complex64::from_polar(r, theta);
        let mut cols = vec![Vec::new(); basis.dim()];
        for p in 0..=basis.n_max {
            for q in 0..=basis.n_max {
                let col = &mut cols[basis.index(p, q).unwrap()];
                if p > 0 && q > 0 && r != 0.0 {
                    let row = basis.index(p - 1, q - 1).unwrap();
                    col.push((row, zeta.conj() * (f64::from(p) * f64::from(q)).sqrt()));
                }
                if let Some(row) = basis.index(p + 1, q + 1).filter(|_| r != 0.0) {
                    col.push((row, -zeta * (f64::from(p + 1) * f64::from(q + 1)).sqrt()));
                }
            }
        }
        Self { cols }
    }

    fn norm_1(&self) -> f64 {
        self.cols
            .iter()
            .map(|c| c.iter().map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn apply(&self, v: &Array1<Complex64>, scale: f64, out: &mut Array1<Complex64>) {
        out.fill(Complex64::new(0.0, 0.0));
        for (j, col) in self.cols.iter().enumerate() {
            let x = v[j];
            if x.norm_sqr() == 0.0 {
                continue;
            }
            for &(i, g) in col {
                out[i] += g * x * scale;
            }
        }
    }
}

fn vec_norm(v: &Array1<Complex64>) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// `exp(G) v`, computed as `s` successive applications of the Taylor series
/// of `exp(G/s)` with `‖G/s‖₁ ≤ 0.5`.
pub fn expm_apply(g: &Array2<Complex64>, v: &Array1<Complex64>) -> Result<Array1<Complex64>> {
    if g.nrows() != g.ncols() || g.ncols() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: g.ncols(),
            found: v.len(),
        });
    }
    expm_sparse(&Sparse::from_dense(g), v)
}

fn expm_sparse(sparse: &Sparse, v: &Array1<Complex64>) -> Result<Array1<Complex64>> {
    let norm = sparse.norm_1();
    let steps = ((norm / SCALED_NORM).ceil() as usize).max(1);
    let scale = 1.0 / steps as f64;

    let mut x = v.clone();
    let mut term = Array1::zeros(v.len());
    let mut next = Array1::zeros(v.len());
    for _ in 0..steps {
        let floor = SERIES_FLOOR * vec_norm(&x).max(f64::MIN_POSITIVE);
        term.assign(&x);
        let mut acc = x.clone();
        let mut converged = false;
        for k in 1..=MAX_TERMS {
            sparse.apply(&term, scale / k as f64, &mut next);
            std::mem::swap(&mut term, &mut next);
            acc += &term;
            if vec_norm(&term) <= floor {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::ExpmNonConvergence {
                residual: vec_norm(&term),
            });
        }
        x = acc;
    }
    Ok(x)
}

/// Coefficients of `S₂(r e^{iθ})|p,q⟩` from the truncated matrix
/// exponential, in increasing `p'` order. Requires `p, q ≤ n_max / 2`.
pub fn oracle_squeeze(p: u32, q: u32, r: f64, theta: f64, n_max: u32) -> Result<Vec<(u32, u32, Amplitude)>> {
    let basis = TruncatedBasis::new(n_max)?;
    if 2 * p > n_max || 2 * q > n_max {
        return Err(Error::InvalidParameter(format!(
            "input |{p},{q}⟩ needs n_max >= {}",
            2 * p.max(q)
        )));
    }
    if !(r >= 0.0 && r.is_finite()) || !theta.is_finite() {
        return Err(Error::InvalidParameter(format!("bad squeezing r={r} theta={theta}")));
    }
    let g = Sparse::generator(&basis, r, theta);
    let out = expm_sparse(&g, &basis.basis_vector(p, q)?)?;
    let m = p.min(q);
    Ok((0..=n_max - p.max(q) + m)
        .map(|m_out| {
            let (po, qo) = (p - m + m_out, q - m + m_out);
            (po, qo, out[basis.index(po, qo).unwrap()])
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_indexing_round_trips() {
        let b = TruncatedBasis::new(5).unwrap();
        assert_eq!(b.dim(), 36);
        for i in 0..b.dim() {
            let (p, q) = b.pair(i);
            assert_eq!(b.index(p, q), Some(i));
        }
        assert_eq!(b.index(6, 0), None);
        assert!(TruncatedBasis::new(0).is_err());
    }

    #[test]
    fn generator_elements() {
        let b = TruncatedBasis::new(4).unwrap();
        assert!(build_generator(&b, 0.0, 0.0).iter().all(|v| v.norm() == 0.0));
        let (r, th) = (0.3, 0.4);
        let g = build_generator(&b, r, th);
        let zeta = Complex64::from_polar(r, th);
        let e = g[[b.index(1, 1).unwrap(), b.index(0, 0).unwrap()]];
        assert!((e + zeta).norm() < 1e-16);
        let e = g[[b.index(1, 2).unwrap(), b.index(2, 3).unwrap()]];
        assert!((e - zeta.conj() * 6f64.sqrt()).norm() < 1e-15);
        let resid = (&g + &g.t().mapv(|c| c.conj()))
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        assert!(resid < 1e-15);
    }

    #[test]
    fn sparse_generator_matches_dense() {
        let b = TruncatedBasis::new(6).unwrap();
        let dense = Sparse::from_dense(&build_generator(&b, 0.7, 1.1));
        let direct = Sparse::generator(&b, 0.7, 1.1);
        for (x, y) in dense.cols.iter().zip(&direct.cols) {
            let mut x = x.clone();
            let mut y = y.clone();
            x.sort_by_key(|e| e.0);
            y.sort_by_key(|e| e.0);
            assert_eq!(x.len(), y.len());
            for (a, b) in x.iter().zip(&y) {
                assert_eq!(a.0, b.0);
                assert!((a.1 - b.1).norm() < 1e-15);
            }
        }
        let v = b.basis_vector(1, 2).unwrap();
        let a = expm_apply(&build_generator(&b, 0.7, 1.1), &v).unwrap();
        let c = expm_sparse(&direct, &v).unwrap();
        assert!((&a - &c).iter().all(|d| d.norm() < 1e-15));
    }

    #[test]
    fn zero_generator_is_identity() {
        let b = TruncatedBasis::new(3).unwrap();
        let v = b.basis_vector(1, 2).unwrap();
        assert_eq!(expm_apply(&build_generator(&b, 0.0, 0.0), &v).unwrap(), v);
    }

    #[test]
    fn squeezed_vacuum_from_matrix_exponential() {
        let r: f64 = 0.4;
        let out = oracle_squeeze(0, 0, r, 0.0, 30).unwrap();
        for &(m, _, c) in out.iter().take(12) {
            let want = (-r.tanh()).powi(m as i32) / r.cosh();
            assert!((c.re - want).abs() < 1e-9 && c.im.abs() < 1e-12, "m={m}");
        }
    }

    #[test]
    fn seeded_null_and_norm() {
        let out = oracle_squeeze(1, 1, 1f64.asinh(), 0.0, 30).unwrap();
        assert!(out[1].2.norm() < 1e-8);
        let norm: f64 = out.iter().map(|c| c.2.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-10);
    }

    #[test]
    fn interior_columns_are_orthonormal() {
        let b = TruncatedBasis::new(30).unwrap();
        let g = build_generator(&b, 0.6, 0.3);
        let cols: Vec<_> = [(0, 0), (1, 1), (2, 1), (1, 2), (3, 3)]
            .iter()
            .map(|&(p, q)| expm_apply(&g, &b.basis_vector(p, q).unwrap()).unwrap())
            .collect();
        for (i, a) in cols.iter().enumerate() {
            for (j, c) in cols.iter().enumerate() {
                let dot: Complex64 = a.iter().zip(c.iter()).map(|(x, y)| x.conj() * y).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).norm() < 1e-9, "({i},{j}) {dot}");
            }
        }
    }

    #[test]
    fn rejects_inputs_without_headroom() {
        assert!(oracle_squeeze(6, 0, 0.2, 0.0, 10).is_err());
        let b = TruncatedBasis::new(3).unwrap();
        let g = build_generator(&b, 0.1, 0.0);
        assert!(matches!(
            expm_apply(&g, &Array1::zeros(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
