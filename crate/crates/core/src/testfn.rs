//! Smooth compactly supported test functions on (0, inf) and their
//! multiplicative autocorrelations.
//!
//! A test function is a finite sum of mollifier bumps in the log coordinate,
//! so its support is known exactly: the support parameter mu is always the
//! tightest value with supp(g) inside (sqrt(mu), 1/sqrt(mu)). The
//! autocorrelation h(x) = int_0^inf g(xy) g(y) dy is cached on a uniform log
//! grid together with its first two x-derivatives; the grid spacing is
//! refined until six-point interpolation reproduces direct quadrature to
//! 1e-11 of the sup norm.

use crate::error::{Error, Result};
use crate::quad::{self, integrate_adaptive};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// integral of exp(-1/(1-t^2)) over (-1, 1)
const BUMP_MASS: f64 = 0.443_993_816_168_079_44;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Bump {
    pub center: f64,
    pub half_width: f64,
    pub amplitude: f64,
}

impl Bump {
    fn profile(t: f64) -> f64 {
        if t.abs() >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - t * t)).exp()
        }
    }

    /// d/dt and d2/dt2 of the profile.
    fn profile_d(t: f64) -> (f64, f64) {
        if t.abs() >= 1.0 {
            return (0.0, 0.0);
        }
        let q = 1.0 - t * t;
        let p = (-1.0 / q).exp();
        let u1 = -2.0 * t / (q * q);
        let u2 = -2.0 * (1.0 + 3.0 * t * t) / (q * q * q);
        (p * u1, p * (u2 + u1 * u1))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "TestFunctionSpec", into = "TestFunctionSpec")]
pub struct TestFunction {
    bumps: Vec<Bump>,
    mu: f64,
}

/// Wire form: only the bumps travel; mu is re-derived on deserialize.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct TestFunctionSpec {
    bumps: Vec<Bump>,
}

impl From<TestFunction> for TestFunctionSpec {
    fn from(g: TestFunction) -> Self {
        TestFunctionSpec { bumps: g.bumps }
    }
}

impl TryFrom<TestFunctionSpec> for TestFunction {
    type Error = Error;
    fn try_from(s: TestFunctionSpec) -> Result<TestFunction> {
        TestFunction::from_bumps(s.bumps)
    }
}

fn extent_of(bumps: &[Bump]) -> f64 {
    bumps
        .iter()
        .map(|b| b.center.abs() + b.half_width)
        .fold(0.005, f64::max)
}

impl TestFunction {
    /// Single mollifier bump; mu is set to the tightest admissible value
    /// exp(-2 (|center| + half_width)).
    pub fn make_bump(center: f64, half_width: f64, amplitude: f64) -> Result<Self> {
        Self::from_bumps(vec![Bump {
            center,
            half_width,
            amplitude,
        }])
    }

    pub fn from_bumps(bumps: Vec<Bump>) -> Result<Self> {
        for b in &bumps {
            if !(b.half_width > 0.0) || !b.half_width.is_finite() || !b.center.is_finite() {
                return Err(Error::InvalidHalfWidth(b.half_width));
            }
        }
        let mu = (-2.0 * extent_of(&bumps)).exp();
        Ok(TestFunction { bumps, mu })
    }

    pub fn zero() -> Self {
        TestFunction {
            bumps: Vec::new(),
            mu: (-0.01f64).exp(),
        }
    }

    pub fn bumps(&self) -> &[Bump] {
        &self.bumps
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Half-width of the log support: supp(g) = (e^-E, e^E) with E = extent.
    pub fn extent(&self) -> f64 {
        extent_of(&self.bumps)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.eval_log(x.ln())
    }

    pub fn eval_log(&self, s: f64) -> f64 {
        let mut acc = 0.0;
        for b in &self.bumps {
            acc += b.amplitude * Bump::profile((s - b.center) / b.half_width);
        }
        acc
    }

    /// dg/dx.
    pub fn deriv1(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let s = x.ln();
        let mut gs = 0.0;
        for b in &self.bumps {
            let (d1, _) = Bump::profile_d((s - b.center) / b.half_width);
            gs += b.amplitude * d1 / b.half_width;
        }
        gs / x
    }

    /// d2g/dx2.
    pub fn deriv2(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let s = x.ln();
        let mut gs = 0.0;
        let mut gss = 0.0;
        for b in &self.bumps {
            let (d1, d2) = Bump::profile_d((s - b.center) / b.half_width);
            gs += b.amplitude * d1 / b.half_width;
            gss += b.amplitude * d2 / (b.half_width * b.half_width);
        }
        (gss - gs) / (x * x)
    }

    fn amp_scale(&self) -> f64 {
        self.bumps
            .iter()
            .map(|b| b.amplitude.abs() * b.half_width * BUMP_MASS)
            .sum::<f64>()
            .max(1e-300)
    }

    /// Mellin transform g_hat(s) = int_0^inf g(u) u^(s-1) du.
    pub fn mellin(&self, s: Complex64) -> Complex64 {
        let e = self.extent();
        if self.bumps.is_empty() {
            return Complex64::new(0.0, 0.0);
        }
        let floor = 1e-16 * self.amp_scale();
        let re = integrate_adaptive(
            &|t: f64| self.eval_log(t) * (s.re * t).exp() * (s.im * t).cos(),
            -e,
            e,
            s.im.abs(),
            1e-12,
            floor,
        )
        .0;
        let im = integrate_adaptive(
            &|t: f64| self.eval_log(t) * (s.re * t).exp() * (s.im * t).sin(),
            -e,
            e,
            s.im.abs(),
            1e-12,
            floor,
        )
        .0;
        Complex64::new(re, im)
    }

    /// int g(u) du/u = g_hat(0).
    pub fn moment0(&self) -> f64 {
        self.mellin(Complex64::new(0.0, 0.0)).re
    }

    /// Subtract a disjointly supported reference bump scaled so that
    /// g_hat(0) = 0; then h_hat(0) = h_hat(1) = 0 for the autocorrelation.
    ///
    /// `mu_floor`, when given, caps how far the support window may grow: the
    /// projected function keeps mu >= mu_floor or the call fails.
    pub fn project_vanishing_moment(&self, mu_floor: Option<f64>) -> Result<TestFunction> {
        let m = self.moment0();
        if m.abs() <= 1e-13 * self.amp_scale() {
            return Ok(self.clone());
        }
        let e_max = match mu_floor {
            Some(mf) => {
                if !(0.0 < mf && mf < 1.0) {
                    return Err(Error::InvalidMu(mf));
                }
                -mf.ln() / 2.0
            }
            None => f64::INFINITY,
        };
        let e_cur = self.extent();

        // occupied intervals in the log coordinate
        let mut occ: Vec<(f64, f64)> = self
            .bumps
            .iter()
            .map(|b| (b.center - b.half_width, b.center + b.half_width))
            .collect();
        occ.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

        // largest free gap inside the current window
        let w = e_cur.min(e_max);
        let mut best: Option<(f64, f64)> = None; // (width, mid)
        let mut cursor = -w;
        for &(lo, hi) in &occ {
            let gap = lo.min(w) - cursor;
            if gap > best.map_or(0.0, |b| b.0) {
                best = Some((gap, cursor + gap / 2.0));
            }
            cursor = cursor.max(hi);
        }
        let tail_gap = w - cursor;
        if tail_gap > best.map_or(0.0, |b| b.0) {
            best = Some((tail_gap, cursor + tail_gap / 2.0));
        }

        let (center, half_width) = match best {
            Some((gap, mid)) if gap >= 0.05 => (mid, 0.38 * gap),
            _ => {
                // extend outside the current support, preferring the side
                // that grows the window least
                let pad = 0.02;
                let wb = self
                    .bumps
                    .iter()
                    .map(|b| b.half_width)
                    .fold(f64::INFINITY, f64::min)
                    .clamp(0.04, 0.15);
                let left_end = occ.first().map_or(0.0, |i| i.0);
                let right_end = occ.last().map_or(0.0, |i| i.1);
                let cand_l = left_end - pad - wb;
                let cand_r = right_end + pad + wb;
                let ext_l = cand_l.abs() + wb;
                let ext_r = cand_r.abs() + wb;
                let (c, ext) = if ext_l <= ext_r {
                    (cand_l, ext_l)
                } else {
                    (cand_r, ext_r)
                };
                if ext > e_max {
                    return Err(Error::NoRoomForCounterBump);
                }
                (c, wb)
            }
        };

        let reference = TestFunction::make_bump(center, half_width, 1.0)?;
        let c = m / reference.moment0();
        let mut bumps = self.bumps.clone();
        bumps.push(Bump {
            center,
            half_width,
            amplitude: -c,
        });
        TestFunction::from_bumps(bumps)
    }
}

// ---------------------------------------------------------------------------
// Autocorrelation
// ---------------------------------------------------------------------------

/// h(x) = int_0^inf g(xy) g(y) dy, supported in (mu, 1/mu), cached with two
/// derivatives on a uniform log grid.
#[derive(Debug, Clone)]
pub struct HFunction {
    source: TestFunction,
    mu: f64,
    t0: f64,
    dt: f64,
    vals: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
    max_abs: f64,
    h1: f64,
    h1p: f64,
    h1pp: f64,
    is_zero: bool,
}

fn h_direct(g: &TestFunction, s: f64, floor: f64) -> f64 {
    let e = g.extent();
    let lo = (-e).max(-e - s);
    let hi = e.min(e - s);
    if lo >= hi {
        return 0.0;
    }
    integrate_adaptive(
        &|t: f64| g.eval_log(s + t) * g.eval_log(t) * t.exp(),
        lo,
        hi,
        0.0,
        1e-12,
        floor,
    )
    .0
}

fn h_d1_direct(g: &TestFunction, s: f64, floor: f64) -> f64 {
    let e = g.extent();
    let lo = (-e).max(-e - s);
    let hi = e.min(e - s);
    if lo >= hi {
        return 0.0;
    }
    integrate_adaptive(
        &|t: f64| g.deriv1((s + t).exp()) * g.eval_log(t) * (2.0 * t).exp(),
        lo,
        hi,
        0.0,
        1e-12,
        floor,
    )
    .0
}

fn h_d2_direct(g: &TestFunction, s: f64, floor: f64) -> f64 {
    let e = g.extent();
    let lo = (-e).max(-e - s);
    let hi = e.min(e - s);
    if lo >= hi {
        return 0.0;
    }
    integrate_adaptive(
        &|t: f64| g.deriv2((s + t).exp()) * g.eval_log(t) * (3.0 * t).exp(),
        lo,
        hi,
        0.0,
        1e-12,
        floor,
    )
    .0
}

impl HFunction {
    pub fn autocorrelate(g: &TestFunction) -> Self {
        let e = g.extent();
        let mu = g.mu();
        let is_zero = g.bumps().is_empty() || g.bumps().iter().all(|b| b.amplitude == 0.0);
        if is_zero {
            return HFunction {
                source: g.clone(),
                mu,
                t0: -2.0 * e,
                dt: e / 2.0,
                vals: vec![0.0; 9],
                d1: vec![0.0; 9],
                d2: vec![0.0; 9],
                max_abs: 0.0,
                h1: 0.0,
                h1p: 0.0,
                h1pp: 0.0,
                is_zero: true,
            };
        }
        let floor = 1e-17 * g.amp_scale() * g.amp_scale().max(1.0);
        let min_w = g
            .bumps()
            .iter()
            .map(|b| b.half_width)
            .fold(f64::INFINITY, f64::min);

        let range = 4.0 * e;
        let mut dt = min_w / 8.0;
        let mut grids = None;
        for _ in 0..5 {
            let m = ((range / dt).ceil() as usize + 1).max(9);
            let dt_eff = range / (m - 1) as f64;
            let t0 = -2.0 * e;
            let vals: Vec<f64> = (0..m)
                .map(|i| h_direct(g, t0 + i as f64 * dt_eff, floor))
                .collect();
            let max_abs = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            // Richardson-style validation: interpolation vs direct quadrature
            // at off-grid points
            let mut worst = 0.0f64;
            for k in 1..40 {
                let s = t0 + range * (k as f64 + 0.41) / 41.0;
                let pos = (s - t0) / dt_eff;
                let interp = quad::interp6_uniform(&vals, pos);
                let direct = h_direct(g, s, floor);
                worst = worst.max((interp - direct).abs());
            }
            if worst <= 1e-11 * max_abs.max(1e-300) || dt <= min_w / 64.0 {
                let d1: Vec<f64> = (0..m)
                    .map(|i| h_d1_direct(g, t0 + i as f64 * dt_eff, floor))
                    .collect();
                let d2: Vec<f64> = (0..m)
                    .map(|i| h_d2_direct(g, t0 + i as f64 * dt_eff, floor))
                    .collect();
                grids = Some((t0, dt_eff, vals, d1, d2, max_abs));
                break;
            }
            dt /= 2.0;
        }
        let (t0, dt, vals, d1, d2, max_abs) = grids.expect("grid refinement loop always yields");
        HFunction {
            source: g.clone(),
            mu,
            t0,
            dt,
            vals,
            d1,
            d2,
            max_abs,
            h1: h_direct(g, 0.0, floor),
            h1p: h_d1_direct(g, 0.0, floor),
            h1pp: h_d2_direct(g, 0.0, floor),
            is_zero: false,
        }
    }

    pub fn source(&self) -> &TestFunction {
        &self.source
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Closed support (mu, 1/mu).
    pub fn support(&self) -> (f64, f64) {
        (self.mu, 1.0 / self.mu)
    }

    pub fn max_abs(&self) -> f64 {
        self.max_abs
    }

    pub fn is_zero(&self) -> bool {
        self.is_zero
    }

    /// h(1) = int g^2 > 0 for nonzero g; direct quadrature, not interpolated.
    pub fn at_one(&self) -> f64 {
        self.h1
    }

    pub fn deriv1_at_one(&self) -> f64 {
        self.h1p
    }

    pub fn deriv2_at_one(&self) -> f64 {
        self.h1pp
    }

    pub fn eval(&self, x: f64) -> f64 {
        if self.is_zero || x <= self.mu || x >= 1.0 / self.mu {
            return 0.0;
        }
        quad::interp6_uniform(&self.vals, (x.ln() - self.t0) / self.dt)
    }

    /// dh/dx.
    pub fn deriv1(&self, x: f64) -> f64 {
        if self.is_zero || x <= self.mu || x >= 1.0 / self.mu {
            return 0.0;
        }
        quad::interp6_uniform(&self.d1, (x.ln() - self.t0) / self.dt)
    }

    /// d2h/dx2.
    pub fn deriv2(&self, x: f64) -> f64 {
        if self.is_zero || x <= self.mu || x >= 1.0 / self.mu {
            return 0.0;
        }
        quad::interp6_uniform(&self.d2, (x.ln() - self.t0) / self.dt)
    }

    /// h_hat(s) = int_0^inf h(u) u^(s-1) du.
    pub fn mellin(&self, s: Complex64) -> Complex64 {
        if self.is_zero {
            return Complex64::new(0.0, 0.0);
        }
        let e = -self.t0;
        let floor = 1e-16 * self.max_abs.max(1e-300);
        let re = integrate_adaptive(
            &|t: f64| self.eval(t.exp()) * (s.re * t).exp() * (s.im * t).cos(),
            -e,
            e,
            s.im.abs(),
            1e-12,
            floor,
        )
        .0;
        let im = integrate_adaptive(
            &|t: f64| self.eval(t.exp()) * (s.re * t).exp() * (s.im * t).sin(),
            -e,
            e,
            s.im.abs(),
            1e-12,
            floor,
        )
        .0;
        Complex64::new(re, im)
    }

    /// int |h'(u)| du over the support, for the integration-by-parts bounds.
    pub fn abs_deriv1_integral(&self) -> f64 {
        if self.is_zero {
            return 0.0;
        }
        let e = -self.t0;
        integrate_adaptive(
            &|t: f64| self.deriv1(t.exp()).abs() * t.exp(),
            -e,
            e,
            0.0,
            1e-9,
            1e-14 * self.max_abs.max(1e-300),
        )
        .0
    }

    /// int |h''(u)| du over [1, 1/mu].
    pub fn abs_deriv2_integral_tail(&self) -> f64 {
        if self.is_zero {
            return 0.0;
        }
        integrate_adaptive(
            &|u: f64| self.deriv2(u).abs(),
            1.0,
            1.0 / self.mu,
            0.0,
            1e-9,
            1e-14 * self.max_abs.max(1e-300),
        )
        .0
    }
}
