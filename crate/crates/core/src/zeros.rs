//! Parameter scans and null refinement for detection amplitudes.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::Amplitude;

/// Residual below which a refined minimum counts as a null.
pub const NULL_TOLERANCE: f64 = 1e-9;
/// Default coarse spacing used to bracket a minimum before refinement.
pub const COARSE_STEP: f64 = 1e-3;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// One named sweep axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

impl Axis {
    /// `count` evenly spaced samples from `lo` to `hi` inclusive.
    pub fn linspace(name: impl Into<String>, lo: f64, hi: f64, count: usize) -> Result<Self> {
        let name = name.into();
        if count < 2 || !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(Error::InvalidParameter(format!(
                "axis {name}: need finite lo < hi and at least 2 samples, got {lo}:{hi}:{count}"
            )));
        }
        let step = (hi - lo) / (count - 1) as f64;
        let values = (0..count)
            .map(|i| if i == count - 1 { hi } else { lo + step * i as f64 })
            .collect();
        Ok(Self { name, values })
    }

    /// Explicit list of values.
    pub fn list(name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "axis {name}: values must be finite and non-empty"
            )));
        }
        Ok(Self { name, values })
    }
}

/// Cartesian product of axes; the first axis varies slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub axes: Vec<Axis>,
}

impl SweepGrid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidParameter("sweep grid needs at least one axis".into()));
        }
        Ok(Self { axes })
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn names(&self) -> Vec<&str> {
        self.axes.iter().map(|a| a.name.as_str()).collect()
    }

    /// Parameter vector of the `index`-th point in lexicographic order.
    pub fn point(&self, mut index: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.axes.len()];
        for (slot, axis) in out.iter_mut().zip(&self.axes).rev() {
            let n = axis.values.len();
            *slot = axis.values[index % n];
            index /= n;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub params: Vec<f64>,
    pub amplitude: Amplitude,
}

impl ScanRow {
    pub fn magnitude(&self) -> f64 {
        self.amplitude.norm()
    }

    pub fn probability(&self) -> f64 {
        self.amplitude.norm_sqr()
    }
}

fn at(params: &[f64], e: Error) -> Error {
    Error::Objective {
        at: params.to_vec(),
        source: Box::new(e),
    }
}

/// Evaluates `objective` on every grid point in parallel; rows come back in
/// grid order.
pub fn scan<F>(objective: F, grid: &SweepGrid) -> Result<Vec<ScanRow>>
where
    F: Fn(&[f64]) -> Result<Amplitude> + Sync,
{
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let params = grid.point(i);
            let amplitude = objective(&params).map_err(|e| at(&params, e))?;
            Ok(ScanRow { params, amplitude })
        })
        .collect()
}

/// Outcome of [`refine_null`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullSearch {
    /// Location of the smallest `|A|` found.
    pub param: f64,
    /// `|A|` there.
    pub residual: f64,
}

impl NullSearch {
    pub fn is_null(&self) -> bool {
        self.residual < NULL_TOLERANCE
    }
}

/// Minimizes `|A|²` over `[lo, hi]`: coarse samples at roughly
/// [`COARSE_STEP`] spacing bracket the smallest value, golden-section search
/// narrows the bracket and a parabolic step through the final triple is
/// accepted when it improves the residual. `objective` returns `|A|`.
pub fn refine_null<F>(objective: F, lo: f64, hi: f64) -> Result<NullSearch>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidParameter(format!("bad bracket [{lo}, {hi}]")));
    }
    let f = |x: f64| -> Result<f64> {
        let a = objective(x).map_err(|e| at(&[x], e))?;
        Ok(a * a)
    };
    let n = (((hi - lo) / COARSE_STEP).ceil() as usize).clamp(8, 100_000);
    let xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let mut best = 0;
    let mut fbest = f64::INFINITY;
    for (i, &x) in xs.iter().enumerate() {
        let v = f(x)?;
        if v < fbest {
            fbest = v;
            best = i;
        }
    }
    let mut a = xs[best.saturating_sub(1)];
    let mut b = xs[(best + 1).min(n)];

    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let mut iterations = 0;
    while (b - a) > 1e-15 * (1.0 + a.abs().max(b.abs())) && iterations < 200 {
        iterations += 1;
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2)?;
        }
    }
    let (mut x, mut fx) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    if fbest < fx {
        x = xs[best];
        fx = fbest;
    }
    // Parabola through (x1, f1), (x2, f2) and the midpoint.
    let xm = 0.5 * (x1 + x2);
    let fm = f(xm)?;
    let denom = (x1 - xm) * (f1 - f2) - (x1 - x2) * (f1 - fm);
    if denom != 0.0 {
        let num = (x1 - xm).powi(2) * (f1 - f2) - (x1 - x2).powi(2) * (f1 - fm);
        let xp = x1 - 0.5 * num / denom;
        if xp.is_finite() && (lo..=hi).contains(&xp) {
            let fp = f(xp)?;
            if fp < fx {
                x = xp;
                fx = fp;
            }
        }
    }
    if fm < fx {
        x = xm;
        fx = fm;
    }
    Ok(NullSearch {
        param: x,
        residual: fx.sqrt(),
    })
}

/// Root of a real-valued `objective` on `[lo, hi]` by bisection. Returns
/// `None` when the endpoints do not bracket a sign change.
pub fn bisect_real<F>(objective: F, lo: f64, hi: f64) -> Result<Option<f64>>
where
    F: Fn(f64) -> Result<f64>,
{
    let f = |x: f64| objective(x).map_err(|e| at(&[x], e));
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a)?;
    let fb = f(b)?;
    if fa == 0.0 {
        return Ok(Some(a));
    }
    if fb == 0.0 {
        return Ok(Some(b));
    }
    if fa.signum() == fb.signum() {
        return Ok(None);
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(Some(m));
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(Some(0.5 * (a + b)))
}

/// Central second difference `(f(x+h) − 2f(x) + f(x−h)) / h²`.
pub fn curvature_at<F>(objective: F, x0: f64, step: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {step}")));
    }
    let f = |x: f64| objective(x).map_err(|e| at(&[x], e));
    Ok((f(x0 + step)? - 2.0 * f(x0)? + f(x0 - step)?) / (step * step))
}
