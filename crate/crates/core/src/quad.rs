//! Quadrature building blocks: Gauss-Legendre panels, adaptive doubling,
//! deterministic pairwise summation, and Wynn epsilon extrapolation for
//! slowly converging oscillatory tails.

use std::sync::OnceLock;

/// Gauss-Legendre nodes and weights on [-1, 1].
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Newton iteration on the Legendre polynomial; standard construction.
    pub fn new(n: usize) -> Self {
        assert!(n >= 2);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_and_deriv(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussRule { nodes, weights }
    }

    /// Integrate f over [a, b] with a single panel.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(c + h * x);
        }
        acc * h
    }
}

fn legendre_and_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

pub fn gl16() -> &'static GaussRule {
    static R: OnceLock<GaussRule> = OnceLock::new();
    R.get_or_init(|| GaussRule::new(16))
}

pub fn gl32() -> &'static GaussRule {
    static R: OnceLock<GaussRule> = OnceLock::new();
    R.get_or_init(|| GaussRule::new(32))
}

/// Composite Gauss-Legendre with a fixed panel count.
pub fn integrate_panels<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    let rule = gl32();
    let n = panels.max(1);
    let step = (b - a) / n as f64;
    let mut vals = Vec::with_capacity(n);
    for i in 0..n {
        let lo = a + i as f64 * step;
        vals.push(rule.integrate(f, lo, lo + step));
    }
    pairwise_sum(&vals)
}

/// Panel count doubled until two successive composites agree.
///
/// `freq` is a hint for the oscillation rate (radians per unit); the initial
/// panel count resolves it. Returns (value, error estimate).
pub fn integrate_adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    freq: f64,
    rel_tol: f64,
    abs_floor: f64,
) -> (f64, f64) {
    if b <= a {
        return (0.0, 0.0);
    }
    let mut panels = (((b - a) * freq.abs()) / std::f64::consts::TAU).ceil() as usize + 1;
    panels = panels.clamp(1, 1 << 20);
    let mut prev = integrate_panels(f, a, b, panels);
    let mut prev_err = f64::INFINITY;
    let mut stalls = 0u32;
    for round in 0..22 {
        panels = (panels * 2).min(1 << 21);
        let cur = integrate_panels(f, a, b, panels);
        let err = (cur - prev).abs();
        if err <= rel_tol * cur.abs() + abs_floor {
            return (cur, err);
        }
        // stagnation: refinement stopped helping (noise floor of the
        // integrand itself); live with the current estimate, but only after
        // the rule has genuinely resolved the integrand
        if err >= 0.5 * prev_err && round >= 4 {
            stalls += 1;
            if stalls >= 2 {
                return (cur, err.max(prev_err));
            }
        } else {
            stalls = 0;
        }
        prev = cur;
        prev_err = err;
    }
    (prev, prev_err)
}

/// Graded panels accumulating toward the endpoint `a` (for integrable
/// endpoint singularities like log). `levels` geometric halvings.
pub fn integrate_graded_left<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    levels: usize,
    panels_per_level: usize,
) -> f64 {
    let mut vals = Vec::new();
    let mut hi = b;
    let width = b - a;
    for lev in 0..levels {
        let lo = if lev + 1 == levels {
            a
        } else {
            a + width * 0.5f64.powi(lev as i32 + 1)
        };
        vals.push(integrate_panels(f, lo, hi, panels_per_level));
        hi = lo;
    }
    pairwise_sum(&vals)
}

/// Deterministic pairwise-tree summation; independent of thread count and
/// reproducible bit-for-bit for a fixed input order.
pub fn pairwise_sum(vals: &[f64]) -> f64 {
    match vals.len() {
        0 => 0.0,
        1 => vals[0],
        2 => vals[0] + vals[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&vals[..mid]) + pairwise_sum(&vals[mid..])
        }
    }
}

/// Six-point Lagrange interpolation on a uniform table; `pos` is the
/// fractional index (x - x0) / step.
pub fn interp6_uniform(vals: &[f64], pos: f64) -> f64 {
    let n = vals.len();
    debug_assert!(n >= 6);
    let mut i0 = pos.floor() as isize - 2;
    i0 = i0.clamp(0, n as isize - 6);
    let i0 = i0 as usize;
    let mut acc = 0.0;
    for (a, &va) in vals[i0..i0 + 6].iter().enumerate() {
        let xa = (i0 + a) as f64;
        let mut l = 1.0;
        for b in 0..6 {
            if b != a {
                let xb = (i0 + b) as f64;
                l *= (pos - xb) / (xa - xb);
            }
        }
        acc += l * va;
    }
    acc
}

/// Wynn epsilon algorithm on a sequence of partial sums. Returns the best
/// even-column estimate and a crude error gauge from the last two entries.
pub fn wynn_epsilon(partials: &[f64]) -> (f64, f64) {
    let n = partials.len();
    if n == 0 {
        return (0.0, f64::INFINITY);
    }
    if n == 1 {
        return (partials[0], f64::INFINITY);
    }
    let mut cur: Vec<f64> = partials.to_vec();
    let mut prev: Vec<f64> = vec![0.0; n + 1];
    let mut best = *partials.last().unwrap();
    let mut second = best;
    let mut col = 0usize;
    while cur.len() >= 2 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for i in 0..cur.len() - 1 {
            let diff = cur[i + 1] - cur[i];
            if diff == 0.0 {
                // exact convergence
                return (cur[i + 1], 0.0);
            }
            next.push(prev[i + 1] + 1.0 / diff);
        }
        prev = cur;
        cur = next;
        col += 1;
        if col % 2 == 0 && !cur.is_empty() {
            second = best;
            best = *cur.last().unwrap();
        }
    }
    (best, (best - second).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rule_integrates_polynomials() {
        let r = GaussRule::new(8);
        // degree-15 exactness
        let v = r.integrate(&|x: f64| x.powi(14), -1.0, 1.0);
        assert!((v - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_matches_closed_form() {
        let (v, _) = integrate_adaptive(&|x: f64| (3.0 * x).sin(), 0.0, 2.0, 3.0, 1e-13, 1e-15);
        let exact = (1.0 - (6.0f64).cos()) / 3.0;
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn graded_handles_log_endpoint() {
        let v = integrate_graded_left(&|x: f64| x.ln(), 0.0, 1.0, 40, 4);
        assert!((v + 1.0).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn pairwise_sum_matches_naive_on_small_input() {
        let vals = [1.0, 2.0, 3.0, 4.0, 5.5];
        assert_eq!(pairwise_sum(&vals), 15.5);
    }

    #[test]
    fn wynn_accelerates_alternating_harmonic() {
        let mut partials = Vec::new();
        let mut s = 0.0;
        for k in 1..=20 {
            s += (-1.0f64).powi(k + 1) / k as f64;
            partials.push(s);
        }
        let (v, _) = wynn_epsilon(&partials);
        assert!((v - 2.0f64.ln()).abs() < 1e-12, "got {v}");
    }
}
