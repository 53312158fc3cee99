//! Bracketed scalar root finding.

/// Newton iteration safeguarded by a sign-change bracket.
///
/// Falls back to bisection whenever the Newton step leaves the bracket or
/// fails to shrink the residual. Requires `f(lo)` and `f(hi)` of opposite
/// signs (either may be zero). Converges to `|f| <= f_tol` or `|hi - lo| <=
/// x_tol`.
pub fn newton_bracketed<F, D>(
    f: F,
    df: D,
    mut lo: f64,
    mut hi: f64,
    x_tol: f64,
    f_tol: f64,
) -> Option<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut flo = f(lo);
    if flo == 0.0 {
        return Some(lo);
    }
    let fhi = f(hi);
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }

    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = f(x);
        if fx.abs() <= f_tol {
            return Some(x);
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
        } else {
            hi = x;
        }
        if (hi - lo).abs() <= x_tol {
            return Some(0.5 * (lo + hi));
        }
        let d = df(x);
        let newton = if d != 0.0 { x - fx / d } else { f64::NAN };
        x = if newton.is_finite() && newton > lo.min(hi) && newton < lo.max(hi) {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Some(0.5 * (lo + hi))
}

/// Bisection with secant acceleration on a bracketing interval.
///
/// A light-weight Brent variant: tries the secant point, keeps the bracket,
/// and bisects whenever the secant step is outside or too slow.
pub fn brent<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, x_tol: f64) -> Option<f64> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    for _ in 0..400 {
        if (b - a).abs() <= x_tol {
            return Some(0.5 * (a + b));
        }
        // Secant candidate, clipped to the interior of the bracket.
        let s = b - fb * (b - a) / (fb - fa);
        let mid = 0.5 * (a + b);
        let x = if s.is_finite() && (s - a).signum() != (s - b).signum() { s } else { mid };
        let x = if (x - a).abs() < 0.01 * (b - a).abs() || (x - b).abs() < 0.01 * (b - a).abs() {
            mid
        } else {
            x
        };
        let fx = f(x);
        if fx == 0.0 {
            return Some(x);
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
    }
    Some(0.5 * (a + b))
}
