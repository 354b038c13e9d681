//! One-dimensional root finding and maximization helpers shared by the
//! variational solvers.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Bisection on a bracket with `f(lo)` and `f(hi)` of opposite sign (or zero).
/// Stops when the bracket is narrower than `tol`.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    for _ in 0..200 {
        if (hi - lo).abs() <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Brent's method on a bracket `[a, b]` whose endpoint values `fa`, `fb` have
/// opposite signs (or one is zero). Converges to `tol` in `x` with far fewer
/// evaluations than bisection on smooth functions.
pub fn brent_root<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64, tol: f64) -> f64 {
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    let (mut c, mut fc) = (b, fb);
    let (mut d, mut e) = (b - a, b - a);
    for _ in 0..200 {
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
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return b;
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
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
        fb = f(b);
    }
    b
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
/// Returns `(argmax, max)`; endpoints are compared too, so monotone functions
/// return the better endpoint.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..300 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let (mut best_x, mut best_f) = if fc >= fd { (c, fc) } else { (d, fd) };
    for x in [lo, hi] {
        let fx = f(x);
        if fx > best_f {
            best_x = x;
            best_f = fx;
        }
    }
    (best_x, best_f)
}

/// All sign changes of `f` over the increasing sample points `xs`, each
/// refined by Brent's method to `tol`. Sample points where `f` is exactly zero are
/// reported as roots. Results are sorted and deduplicated within `dedup`.
pub fn scan_roots<F: FnMut(f64) -> f64>(mut f: F, xs: &[f64], tol: f64, dedup: f64) -> Vec<f64> {
    let mut roots: Vec<f64> = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for &x in xs {
        let fx = f(x);
        if fx == 0.0 {
            roots.push(x);
        } else if let Some((px, pf)) = prev {
            if pf != 0.0 && (pf > 0.0) != (fx > 0.0) {
                roots.push(brent_root(&mut f, px, x, pf, fx, tol));
            }
        }
        prev = Some((x, fx));
    }
    roots.sort_by(|a, b| a.partial_cmp(b).expect("finite roots"));
    roots.dedup_by(|a, b| (*a - *b).abs() <= dedup);
    roots
}

/// Roots of `exact` on `[start, grid.last()]`, scanning sign changes of the
/// cheap `approx` over `grid` and confirming every bracket on `exact` before
/// refining it with Brent's method. Scan values within `guard` of zero are
/// recomputed exactly, so an approximation error below `guard` cannot flip a
/// sign. A zero of `exact` at `start` is reported as a root.
pub(crate) fn guarded_scan<E, A>(exact: E, approx: A, start: f64, grid: &[f64], guard: f64, tol: f64, dedup: f64) -> Vec<f64>
where
    E: Fn(f64) -> f64,
    A: Fn(f64) -> f64,
{
    let mut roots = Vec::new();
    let f0 = exact(start);
    let mut prev = if f0 == 0.0 {
        roots.push(start);
        None
    } else {
        Some((start, f0))
    };
    for &x in grid {
        let mut fx = approx(x);
        if fx.abs() < guard {
            fx = exact(x);
        }
        if fx == 0.0 {
            roots.push(x);
            prev = None;
            continue;
        }
        if let Some((px, pf)) = prev {
            if (pf > 0.0) != (fx > 0.0) {
                let (ea, eb) = (exact(px), exact(x));
                if ea == 0.0 || eb == 0.0 || (ea > 0.0) != (eb > 0.0) {
                    roots.push(brent_root(&exact, px, x, ea, eb, tol));
                }
            }
        }
        prev = Some((x, fx));
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= dedup);
    roots
}

/// Scan points for root searches on `[0, top]`: a geometric ladder from
/// `top * 1e-9` up to the first uniform step, then `steps` uniform points.
/// The ladder resolves roots that sit very close to zero.
pub fn scan_grid(top: f64, steps: usize) -> Vec<f64> {
    let h = top / steps as f64;
    let mut xs = Vec::with_capacity(steps + 40);
    let mut x = top * 1e-9;
    while x < h {
        xs.push(x);
        x *= 2.0;
    }
    xs.extend((1..=steps).map(|k| k as f64 * h));
    xs
}

/// `count` evenly spaced points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![start],
        _ => (0..count)
            .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}
