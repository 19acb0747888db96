//! Scalar minimization, root bracketing, and small vector helpers.

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// `a + s * d`
pub(crate) fn axpy(a: &[f64], s: f64, d: &[f64]) -> Vec<f64> {
    a.iter().zip(d).map(|(x, y)| x + s * y).collect()
}

pub(crate) fn lerp(a: &[f64], b: &[f64], s: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * (y - x)).collect()
}

pub(crate) fn dist_sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a minimum of a unimodal `f` on `[a, b]`.
///
/// Stops once the bracket is narrower than `width`. Returns `(x, f(x))`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, width: f64) -> (f64, f64) {
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    // the bracket shrinks by 1/phi per step; 200 steps exhaust f64 resolution anyway
    for _ in 0..200 {
        if (b - a).abs() <= width {
            break;
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
    let (fa, fb) = (f(a), f(b));
    [(x1, f1), (x2, f2), (a, fa), (b, fb)]
        .into_iter()
        .fold((x1, f1), |best, c| if c.1 < best.1 { c } else { best })
}

/// Minimize a unimodal function on the whole real line: walk downhill with
/// doubling steps from `x0` until the value rises, then golden-section the bracket.
///
/// `limit` bounds `|x - x0|`; if the walk reaches it the boundary point is returned.
pub fn minimize_unimodal(f: impl Fn(f64) -> f64, x0: f64, step: f64, limit: f64, width: f64) -> (f64, f64) {
    let f0 = f(x0);
    let (fr, fl) = (f(x0 + step), f(x0 - step));
    let dir = if fr < f0 {
        1.0
    } else if fl < f0 {
        -1.0
    } else {
        return golden_section(&f, x0 - step, x0 + step, width);
    };
    let mut prev = x0;
    let mut cur = x0 + dir * step;
    let mut fcur = if dir > 0.0 { fr } else { fl };
    let mut h = step;
    loop {
        h *= 2.0;
        let mut next = cur + dir * h;
        if (next - x0).abs() > limit {
            next = x0 + dir * limit;
        }
        let fnext = f(next);
        if fnext >= fcur {
            let (lo, hi) = if dir > 0.0 { (prev, next) } else { (next, prev) };
            return golden_section(&f, lo, hi, width);
        }
        if (next - x0).abs() >= limit {
            return (next, fnext);
        }
        prev = cur;
        cur = next;
        fcur = fnext;
    }
}

/// Bisection for the boundary between `pred == true` at `a` and `pred == false` at `b`.
/// Returns the last point known to satisfy `pred`.
pub fn bisect(pred: impl Fn(f64) -> bool, mut a: f64, mut b: f64, iterations: usize) -> f64 {
    for _ in 0..iterations {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        if pred(m) {
            a = m;
        } else {
            b = m;
        }
    }
    a
}

/// Point `index` of the Halton sequence in `dim` dimensions (unit cube).
pub fn halton(index: usize, dim: usize) -> Vec<f64> {
    const PRIMES: [usize; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    (0..dim)
        .map(|j| {
            let base = PRIMES[j % PRIMES.len()];
            let mut f = 1.0;
            let mut r = 0.0;
            let mut i = index + 1;
            while i > 0 {
                f /= base as f64;
                r += f * (i % base) as f64;
                i /= base;
            }
            r
        })
        .collect()
}

/// Linear interpolation of a vector-valued table at abscissa `x` (table sorted, nondecreasing).
pub(crate) fn interp_table(xs: &[f64], ys: &[Vec<f64>], x: f64) -> Vec<f64> {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0].clone();
    }
    if x >= xs[n - 1] {
        return ys[n - 1].clone();
    }
    let k = xs.partition_point(|&v| v <= x).saturating_sub(1).min(n - 2);
    let span = xs[k + 1] - xs[k];
    if span <= 0.0 {
        return ys[k + 1].clone();
    }
    lerp(&ys[k], &ys[k + 1], (x - xs[k]) / span)
}
