//! Bracketed root finding for monotone functions.

use crate::{Error, Result};

/// Value and (optionally) derivative of the function being inverted.
pub type Eval = (f64, Option<f64>);

/// Solves `f(x) = target` on `[lo, hi]` for an increasing `f` with
/// `f(lo) <= target <= f(hi)`.
///
/// Newton steps are taken when `f` reports a derivative and the step stays
/// inside the bracket; otherwise an Illinois false-position step is used. A
/// bisection is forced whenever the bracket fails to halve over two
/// iterations. Terminates when `|f(x) - target| <= tol` or the bracket has
/// collapsed to a few ulps.
pub fn solve_increasing<F>(mut f: F, target: f64, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Eval,
{
    if !(lo < hi) {
        return Err(Error::Root(format!("empty bracket [{lo}, {hi}]")));
    }
    let mut r_lo = f(lo).0 - target;
    let mut r_hi = f(hi).0 - target;
    if r_lo.abs() <= tol {
        return Ok(lo);
    }
    if r_hi.abs() <= tol {
        return Ok(hi);
    }
    if !(r_lo < 0.0 && r_hi > 0.0) {
        return Err(Error::Root(format!(
            "target {target} not bracketed: residuals {r_lo} at {lo}, {r_hi} at {hi}"
        )));
    }
    let mut x = 0.5 * (lo + hi);
    let (mut fx, mut dfx) = f(x);
    let mut widths = [hi - lo, hi - lo];
    // Illinois bookkeeping: which side was retained last time.
    let mut last_side = 0i8;
    for _ in 0..300 {
        let r = fx - target;
        if r.abs() <= tol {
            return Ok(x);
        }
        if r < 0.0 {
            lo = x;
            r_lo = r;
            if last_side == -1 {
                r_hi *= 0.5;
            }
            last_side = -1;
        } else {
            hi = x;
            r_hi = r;
            if last_side == 1 {
                r_lo *= 0.5;
            }
            last_side = 1;
        }
        let width = hi - lo;
        if width <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE) {
            return Ok(if r_lo.abs() < r_hi.abs() { lo } else { hi });
        }
        let stalled = width > 0.5 * widths[0];
        widths = [widths[1], width];
        let newton = dfx.filter(|d| *d > 0.0 && d.is_finite()).map(|d| x - r / d);
        let candidate = match newton {
            Some(c) if c > lo && c < hi => c,
            _ => lo - r_lo * (hi - lo) / (r_hi - r_lo),
        };
        x = if stalled || !(candidate > lo && candidate < hi) { 0.5 * (lo + hi) } else { candidate };
        (fx, dfx) = f(x);
        if !fx.is_finite() {
            return Err(Error::Root(format!("non-finite function value at {x}")));
        }
    }
    Err(Error::Root(format!("no convergence for target {target} in [{lo}, {hi}]")))
}
