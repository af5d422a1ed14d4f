//! One-dimensional maximisation helpers shared by the capacity routines.

/// Location and value of a maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;
const MAX_GOLDEN_ITER: usize = 400;

/// Golden-section search for a maximum of a unimodal `f` on `[lo, hi]`,
/// stopping once the bracket is narrower than `tol`.
pub fn golden_section_max<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Maximum
where
    F: Fn(f64) -> f64,
{
    let mut a = hi - INV_PHI * (hi - lo);
    let mut b = lo + INV_PHI * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    for _ in 0..MAX_GOLDEN_ITER {
        if hi - lo <= tol {
            break;
        }
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + INV_PHI * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - INV_PHI * (hi - lo);
            fa = f(a);
        }
    }
    let mut best = if fa >= fb {
        Maximum { x: a, value: fa }
    } else {
        Maximum { x: b, value: fb }
    };
    for x in [lo, hi] {
        let v = f(x);
        if v > best.value {
            best = Maximum { x, value: v };
        }
    }
    best
}

/// Dense scan of `points` equally spaced abscissae on `[lo, hi]`, followed by
/// golden-section refinement inside the cells adjacent to the best sample.
///
/// The scan guards against the objective not being unimodal on the whole
/// interval.
pub fn scan_then_golden<F>(f: F, lo: f64, hi: f64, points: usize, tol: f64) -> Maximum
where
    F: Fn(f64) -> f64,
{
    assert!(points >= 2, "scan needs at least two points");
    assert!(hi >= lo);
    let step = (hi - lo) / (points - 1) as f64;
    let at = |i: usize| {
        if i == points - 1 {
            hi
        } else {
            lo + step * i as f64
        }
    };
    let mut best = Maximum {
        x: lo,
        value: f(lo),
    };
    let mut best_i = 0;
    for i in 1..points {
        let x = at(i);
        let v = f(x);
        if v > best.value {
            best = Maximum { x, value: v };
            best_i = i;
        }
    }
    let a = at(best_i.saturating_sub(1));
    let b = at((best_i + 1).min(points - 1));
    let refined = golden_section_max(&f, a, b, tol);
    if refined.value >= best.value {
        refined
    } else {
        best
    }
}

/// Root of a function that is positive at `lo` and non-positive at `hi`
/// (or vice versa), by bisection down to floating-point resolution.
pub fn bisect_root<F>(f: F, mut lo: f64, mut hi: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    let f_lo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
