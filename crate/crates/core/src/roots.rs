//! Bracketed scalar root finding.

use crate::error::{Error, Result};

/// Finds a root of `f` in `[a, b]` given `f(a)` and `f(b)` of opposite sign.
///
/// Secant (regula falsi with the Illinois modification) steps are taken while
/// they shrink the bracket fast enough; otherwise the step falls back to
/// bisection. Stops when `|f| <= ftol` or the bracket is at machine width.
pub fn bracketed_root(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    ftol: f64,
) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoBracket(format!(
            "f({a}) = {fa:e} and f({b}) = {fb:e} share a sign"
        )));
    }
    let mut side = 0i8;
    let mut width = (b - a).abs();
    for _ in 0..200 {
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !c.is_finite() || c <= a.min(b) || c >= a.max(b) {
            c = 0.5 * (a + b);
        }
        let fc = f(c);
        if fc.abs() <= ftol || fc == 0.0 {
            return Ok(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        let new_width = (b - a).abs();
        if new_width > 0.5 * width {
            // slow progress: force a bisection step
            let m = 0.5 * (a + b);
            let fm = f(m);
            if fm.abs() <= ftol || fm == 0.0 {
                return Ok(m);
            }
            if fm.signum() == fb.signum() {
                b = m;
                fb = fm;
            } else {
                a = m;
                fa = fm;
            }
            side = 0;
        }
        width = (b - a).abs();
        if width <= 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(1.0) {
            break;
        }
    }
    Ok(if fa.abs() < fb.abs() { a } else { b })
}

/// Newton's method for an increasing function on `[lo, hi]`, falling back to
/// bisection whenever the Newton step leaves the bracket.
pub fn monotone_newton(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    guess: f64,
    xtol: f64,
) -> f64 {
    let mut x = guess.clamp(lo, hi);
    for _ in 0..100 {
        let fx = f(x);
        if fx == 0.0 {
            return x;
        }
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = df(x);
        let mut next = x - fx / d;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= xtol {
            return next;
        }
        x = next;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt2() {
        let r = bracketed_root(|x| x * x - 2.0, 0.0, 2.0, 0.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn handles_flat_function_by_bisection() {
        // regula falsi alone stalls on this one
        let r = bracketed_root(|x: f64| x.powi(9) - 1e-9, -1.0, 4.0, 0.0).unwrap();
        assert!((r - 0.1).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_bracket() {
        assert!(matches!(
            bracketed_root(|x| x * x + 1.0, -1.0, 1.0, 0.0),
            Err(Error::NoBracket(_))
        ));
    }

    #[test]
    fn newton_inverts_monotone_map() {
        let t = monotone_newton(|x| x + 0.5 * x.sin() - 1.0, |x| 1.0 + 0.5 * x.cos(), 0.0, 2.0, 1.0, 1e-15);
        assert!((t + 0.5 * t.sin() - 1.0).abs() < 1e-14);
    }
}
