//! Derivative-free one-dimensional minimization: golden-section search and
//! a coarse grid scan followed by golden-section refinement.

/// Golden ratio conjugate, `(√5 − 1)/2`.
const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// Golden-section search for a minimum of a unimodal `f` on `[lo, hi]`,
/// stopping when the bracket is narrower than `tol`.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> Minimum {
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut evaluations = 2;
    while (b - a).abs() > tol {
        if fc <= fd {
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
        evaluations += 1;
    }
    let (x, value) = if fc <= fd { (c, fc) } else { (d, fd) };
    Minimum { x, value, evaluations }
}

/// Result of [`grid_then_golden`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridMinimum {
    pub x: f64,
    pub value: f64,
    /// The best grid point was an end of the bracket; no interior minimum
    /// was bracketed.
    pub at_boundary: bool,
    /// Every `(x, f(x))` evaluated, in order.
    pub trace: Vec<(f64, f64)>,
}

/// Scans `grid` equally spaced points on `[lo, hi]` and refines the best
/// interior point with golden-section search over its two neighbouring
/// cells. Non-finite values count as `+∞`.
pub fn grid_then_golden<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, grid: usize, tol: f64) -> GridMinimum {
    assert!(grid >= 3, "grid needs at least three points");
    assert!(hi > lo, "empty bracket [{lo}, {hi}]");
    let mut trace = Vec::new();
    let mut eval = |x: f64, trace: &mut Vec<(f64, f64)>| {
        let v = f(x);
        trace.push((x, v));
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let step = (hi - lo) / (grid - 1) as f64;
    let values: Vec<f64> = (0..grid)
        .map(|k| {
            let x = if k == grid - 1 { hi } else { lo + step * k as f64 };
            eval(x, &mut trace)
        })
        .collect();
    let best = values.iter().enumerate().fold(0, |best, (k, &v)| if v < values[best] { k } else { best });
    if best == 0 || best == grid - 1 {
        let x = if best == 0 { lo } else { hi };
        return GridMinimum { x, value: values[best], at_boundary: true, trace };
    }
    let left = lo + step * (best - 1) as f64;
    let right = lo + step * (best + 1) as f64;
    let refined = golden_section(|x| eval(x, &mut trace), left, right, tol);
    let (x, value) = if refined.value <= values[best] {
        (refined.x, refined.value)
    } else {
        (lo + step * best as f64, values[best])
    };
    GridMinimum { x, value, at_boundary: false, trace }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_quadratic_minimum() {
        let m = golden_section(|x| (x - 1.234).powi(2) + 0.5, -3.0, 4.0, 1e-10);
        assert!((m.x - 1.234).abs() < 1e-7);
        assert!((m.value - 0.5).abs() < 1e-15);
    }

    #[test]
    fn grid_refines_quadratic() {
        let r = grid_then_golden(|x| 3.0 * (x + 0.377).powi(2) - 2.0, -2.0, 2.0, 11, 1e-9);
        assert!(!r.at_boundary);
        assert!((r.x + 0.377).abs() < 1e-8);
        assert!(r.trace.len() > 11);
    }

    #[test]
    fn grid_flags_boundary_minimum() {
        let r = grid_then_golden(|x| x, 0.0, 1.0, 5, 1e-9);
        assert!(r.at_boundary);
        assert_eq!(r.x, 0.0);
        assert_eq!(r.trace.len(), 5);
    }

    #[test]
    fn grid_skips_non_finite() {
        let r = grid_then_golden(|x| if x < 0.0 { f64::NAN } else { (x - 0.5).powi(2) }, -1.0, 2.0, 13, 1e-9);
        assert!((r.x - 0.5).abs() < 1e-8);
    }
}
