//! Small scalar routines shared across modules: bracketed root finding,
//! golden-section minimization, and bounded-denominator rationalization.

use num_rational::Ratio;

/// Finds a root of `f` on `[lo, hi]` by bisection. `f(lo)` and `f(hi)` must
/// have opposite signs (or one of them be zero). Stops once the bracket is
/// narrower than `tol`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() || !flo.is_finite() || !fhi.is_finite() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid == lo || mid == hi {
            return Some(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Golden-section search for the minimum of a unimodal `f` on `[lo, hi]`.
/// Returns `(argmin, min)`.
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    let (mut best_x, mut best_f) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    for x in [lo, hi] {
        let fx = f(x);
        if fx < best_f {
            best_x = x;
            best_f = fx;
        }
    }
    (best_x, best_f)
}

/// Best rational approximation `num/den` of `x >= 0` with `den <= max_den`,
/// accepted only if it reproduces `x` within `tol`.
pub fn rationalize(x: f64, max_den: u64, tol: f64) -> Option<(u64, u64)> {
    if !x.is_finite() || x < 0.0 {
        return None;
    }
    // continued-fraction convergents
    let (mut h0, mut h1) = (0u64, 1u64);
    let (mut k0, mut k1) = (1u64, 0u64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a > u64::MAX as f64 / 2.0 {
            break;
        }
        let a = a as u64;
        let h2 = a.checked_mul(h1).and_then(|v| v.checked_add(h0))?;
        let k2 = a.checked_mul(k1).and_then(|v| v.checked_add(k0))?;
        if k2 > max_den {
            break;
        }
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        if (h1 as f64 / k1 as f64 - x).abs() <= tol {
            return Some((h1, k1));
        }
        let frac = r - a as f64;
        if frac <= f64::EPSILON {
            break;
        }
        r = 1.0 / frac;
    }
    if k1 > 0 && (h1 as f64 / k1 as f64 - x).abs() <= tol {
        Some((h1, k1))
    } else {
        None
    }
}

/// Exact rational for a finite float that is an integer or a ratio with a
/// small denominator (up to 10^6), used where results must come out as exact
/// fractions.
pub fn exact_ratio(x: f64) -> Option<Ratio<i128>> {
    let sign = if x < 0.0 { -1 } else { 1 };
    let (n, d) = rationalize(x.abs(), 1_000_000, 1e-12 * x.abs().max(1.0))?;
    Some(Ratio::new(sign * n as i128, d as i128))
}

/// Renders a ratio as `p/q`, or `p` when the denominator is one.
pub fn ratio_string(r: &Ratio<i128>) -> String {
    if *r.denom() == 1 {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Rounds to 12 significant digits, the precision reports are emitted with.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.11e}", x).parse().unwrap_or(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn bisect_rejects_unbracketed() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-10).is_none());
    }

    #[test]
    fn golden_finds_parabola_vertex() {
        let (x, fx) = golden_min(|x| (x - 0.3) * (x - 0.3), -2.0, 2.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8);
        assert!(fx < 1e-15);
    }

    #[test]
    fn rationalize_recovers_fractions() {
        assert_eq!(rationalize(0.9925, 1_000_000, 1e-12), Some((397, 400)));
        assert_eq!(rationalize(1.0 / 3.0, 1_000_000, 1e-12), Some((1, 3)));
        assert_eq!(rationalize(0.5, 10, 1e-12), Some((1, 2)));
        assert_eq!(rationalize(std::f64::consts::PI, 1000, 1e-12), None);
    }

    #[test]
    fn exact_ratio_of_quarter_steps() {
        assert_eq!(exact_ratio(15.5), Some(Ratio::new(31, 2)));
        assert_eq!(exact_ratio(-0.25), Some(Ratio::new(-1, 4)));
        assert_eq!(ratio_string(&Ratio::new(31, 2)), "31/2");
        assert_eq!(ratio_string(&Ratio::new(12, 1)), "12");
    }

    #[test]
    fn round12_keeps_twelve_digits() {
        assert_eq!(round12(2.0 / 3.0), 0.666666666667);
        assert_eq!(round12(19.0 / 8.0), 2.375);
    }
}
