use super::{check_finite, Bracket, ToleranceSpec};
use crate::error::{Error, Result};

/// Brent's method: inverse quadratic interpolation and secant steps, with a
/// bisection step whenever the interpolant leaves the bracket or converges
/// too slowly.
///
/// Terminates once the bracket half-width drops below
/// `2 eps |x| + tol.at(x) / 2` or an exact zero is hit.
pub fn find_root<F>(mut f: F, bracket: Bracket, tol: &ToleranceSpec) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    tol.validate()?;
    let (mut a, mut b) = (bracket.lo, bracket.hi);
    let mut fa = check_finite(a, f(a)?)?;
    let mut fb = check_finite(b, f(b)?)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoSignChange {
            lo: a,
            hi: b,
            f_lo: fa,
            f_hi: fb,
        });
    }

    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;

    for _ in 0..tol.max_iter {
        if fb.signum() == fc.signum() {
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

        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol.at(b);
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }

        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                // secant
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                // inverse quadratic interpolation
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }

        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = check_finite(b, f(b)?)?;
    }
    Err(Error::MaxIterExceeded(tol.max_iter))
}
