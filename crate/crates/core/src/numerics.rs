//! One-dimensional numeric kernel shared by every higher module.
//!
//! Three primitives live here:
//!
//! * [`find_root`]: a bracketing root finder in the style of Brent's
//!   `zeroin`. Each step tries inverse quadratic interpolation (or a secant
//!   step when only two distinct points are known) and falls back to
//!   bisection whenever the interpolated point would leave the bracket or
//!   shrink it too slowly. The bracket never grows.
//! * [`minimize_unimodal`]: golden-section search. One function evaluation
//!   per contraction after the two initial interior points.
//! * [`integrate`]: adaptive Simpson quadrature with Richardson correction.
//!
//! None of these carry state between calls.

use crate::error::{Error, Result};

/// Stopping rule shared by the kernel routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Absolute width target for brackets; absolute error target (per unit
    /// of interval length) for quadrature.
    pub abs_x: f64,
    /// A root is accepted as soon as `|f(x)| <= abs_f`.
    pub abs_f: f64,
    pub max_iter: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs_x: 1e-12,
            abs_f: 0.0,
            max_iter: 200,
        }
    }
}

impl Tolerance {
    pub fn with_abs_x(abs_x: f64) -> Self {
        Tolerance {
            abs_x,
            ..Default::default()
        }
    }
}

/// An interval together with the function values at its ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

impl Bracket {
    /// Evaluates `f` at both ends.
    pub fn new<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::Invalid(format!(
                "bracket requires lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Bracket {
            lo,
            hi,
            f_lo: f(lo),
            f_hi: f(hi),
        })
    }

    pub fn has_sign_change(&self) -> bool {
        self.f_lo == 0.0 || self.f_hi == 0.0 || (self.f_lo < 0.0) != (self.f_hi < 0.0)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Finds a root of `f` inside `bracket`.
///
/// The returned abscissa always lies in `[bracket.lo, bracket.hi]`. The
/// search stops once the enclosing interval is narrower than `tol.abs_x`
/// (floored at a few ulps of the iterate), when `|f| <= tol.abs_f`, or when
/// `f` hits zero exactly.
pub fn find_root<F: FnMut(f64) -> f64>(mut f: F, bracket: Bracket, tol: Tolerance) -> Result<f64> {
    if bracket.f_lo.is_nan() || bracket.f_hi.is_nan() || !bracket.has_sign_change() {
        return Err(Error::NoSignChange {
            lo: bracket.lo,
            hi: bracket.hi,
            f_lo: bracket.f_lo,
            f_hi: bracket.f_hi,
        });
    }
    if bracket.f_lo == 0.0 {
        return Ok(bracket.lo);
    }
    if bracket.f_hi == 0.0 {
        return Ok(bracket.hi);
    }

    // b is the best iterate, a the previous one, c the counterpoint so that
    // [b, c] always encloses the root.
    let (mut a, mut b) = (bracket.lo, bracket.hi);
    let (mut fa, mut fb) = (bracket.f_lo, bracket.f_hi);
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;

    for _ in 0..tol.max_iter {
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }

        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol.abs_x;
        let m = 0.5 * (c - b);
        if m.abs() <= tol1 || fb == 0.0 || fb.abs() <= tol.abs_f {
            return Ok(b);
        }

        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                (2.0 * m * s, 1.0 - s)
            } else {
                let q0 = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * m * q0 * (q0 - r) - (b - a) * (r - 1.0)),
                    (q0 - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }

        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(m) };
        fb = f(b);
        if fb.is_nan() {
            return Err(Error::Invalid(format!("function returned NaN at x = {b}")));
        }
    }
    Err(Error::NoConvergence {
        method: "find_root",
        max_iter: tol.max_iter,
    })
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the minimum of a unimodal `f` on `[lo, hi]`.
///
/// Returns `(x_min, f(x_min))`. Contraction stops when the interval is
/// narrower than `tol.abs_x` or cannot shrink further in floating point.
pub fn minimize_unimodal<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    tol: Tolerance,
) -> Result<(f64, f64)> {
    if !(lo < hi) {
        return Err(Error::Invalid(format!(
            "minimize_unimodal requires lo < hi, got [{lo}, {hi}]"
        )));
    }
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);

    for _ in 0..tol.max_iter {
        let floor = 4.0 * f64::EPSILON * (a.abs() + b.abs());
        if b - a <= tol.abs_x.max(floor) {
            return Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) });
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    Err(Error::NoConvergence {
        method: "minimize_unimodal",
        max_iter: tol.max_iter,
    })
}

const MAX_SIMPSON_DEPTH: usize = 50;

/// Adaptive Simpson estimate of the integral of `f` over `[lo, hi]`.
///
/// The absolute error target is `tol.abs_x * (hi - lo)`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: Tolerance) -> Result<f64> {
    if lo == hi {
        return Ok(0.0);
    }
    if !(lo < hi) {
        return Err(Error::Invalid(format!(
            "integrate requires lo <= hi, got [{lo}, {hi}]"
        )));
    }
    let flo = f(lo);
    let fhi = f(hi);
    let mid = 0.5 * (lo + hi);
    let fmid = f(mid);
    let whole = simpson(lo, hi, flo, fmid, fhi);
    let eps = tol.abs_x * (hi - lo);
    simpson_step(
        &mut f,
        lo,
        hi,
        flo,
        fmid,
        fhi,
        whole,
        eps,
        MAX_SIMPSON_DEPTH,
    )
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * eps {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::QuadratureDepth {
            depth: MAX_SIMPSON_DEPTH,
            at: m,
        });
    }
    let l = simpson_step(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1)?;
    let r = simpson_step(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1)?;
    Ok(l + r)
}
