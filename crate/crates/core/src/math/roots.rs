//! Bracketed bisection for monotone scalar equations.
//!
//! All root finding in the crate goes through this routine: the equations
//! involved are monotone, so bisection down to a fixed bracket width is the
//! most robust choice and is exactly reproducible.

/// Width at which bisection stops.
pub const BRACKET_WIDTH: f64 = 1e-12;

/// Find the root of `f` in `[lo, hi]`, assuming `f(lo) <= 0 <= f(hi)` or the
/// reverse. Returns the bracket midpoint once the bracket is narrower than
/// [`BRACKET_WIDTH`].
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    debug_assert!(lo <= hi);
    let rising = f(lo) <= 0.0;
    for _ in 0..200 {
        if hi - lo <= BRACKET_WIDTH {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if (fm <= 0.0) == rising {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_square_root() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0);
        assert!((r - 2.0f64.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn falling_function() {
        let r = bisect(|x| 1.0 - x.exp(), -1.0, 3.0);
        assert!(r.abs() < 1e-11);
    }
}
