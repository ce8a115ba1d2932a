//! Scaled Jacobi polynomials and log-factorial ratios.

const RESCALE_ABOVE: f64 = 1e150;

/// Jacobi polynomial `P_n^{(alpha, beta)}(x)` by the forward three-term
/// recurrence in the degree, returned as `(mantissa, ln_scale)` with
/// `P = mantissa * exp(ln_scale)` so that large `n`, `beta` cannot overflow.
/// Forward recurrence is stable for `x` in `[-1, 1]`.
pub(crate) fn jacobi_scaled(n: usize, alpha: f64, beta: f64, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let ab = alpha + beta;
    let mut p0 = 1.0;
    let mut p1 = (alpha + 1.0) + (ab + 2.0) * (x - 1.0) / 2.0;
    let mut ln_scale = 0.0;
    for k in 1..n {
        let k = k as f64;
        let s = 2.0 * k + ab;
        let a1 = 2.0 * (k + 1.0) * (k + ab + 1.0) * s;
        let a2 = (s + 1.0) * (alpha * alpha - beta * beta);
        let a3 = s * (s + 1.0) * (s + 2.0);
        let a4 = 2.0 * (k + alpha) * (k + beta) * (s + 2.0);
        let p2 = ((a2 + a3 * x) * p1 - a4 * p0) / a1;
        p0 = p1;
        p1 = p2;
        if p1.abs() > RESCALE_ABOVE {
            p0 /= RESCALE_ABOVE;
            p1 /= RESCALE_ABOVE;
            ln_scale += RESCALE_ABOVE.ln();
        }
    }
    (p1, ln_scale)
}

/// `ln((k + d)! / k!)`, summed term by term.
pub(crate) fn ln_rising(k: u32, d: u32) -> f64 {
    (1..=d).map(|i| f64::from(k + i).ln()).sum()
}

/// `ln C(n, j)` as a cumulative sum of log ratios.
pub(crate) fn ln_binomial(n: u32, j: u32) -> f64 {
    debug_assert!(j <= n);
    let j = j.min(n - j);
    (1..=j).map(|i| (f64::from(n - j + i) / f64::from(i)).ln()).sum()
}

/// `ln cosh r` without overflow for large `r`.
pub(crate) fn ln_cosh(r: f64) -> f64 {
    let a = r.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}
