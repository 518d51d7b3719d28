//! Special functions behind the regularized integrals: the complex gamma
//! function, the zeta functional-equation factor chi(s), the sine integral,
//! and the Abel-regularized log-weighted cosine integrals together with the
//! auxiliary transforms
//!
//!   G(a) = int_1^inf (log v / v) sin(av) dv        (improper, Dirichlet)
//!   M(a) = int_1^inf (log v / v^2) cos(av) dv      (absolutely convergent)
//!
//! which reduce every outer oscillatory integral of the trace series to the
//! sine integral plus one smooth profile J(a) = int_0^a (log w / w) sin w dw.

use crate::error::{Error, Result};
use crate::quad::{self, gl16, gl32};
use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::sync::OnceLock;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

// ---------------------------------------------------------------------------
// Gamma and friends
// ---------------------------------------------------------------------------

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn is_nonpositive_integer(z: Complex64) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round()
}

/// Complex gamma function by the Lanczos approximation with reflection,
/// accurate to ~13 significant digits on the strip used here.
pub fn gamma_complex(s: Complex64) -> Result<Complex64> {
    if is_nonpositive_integer(s) {
        return Err(Error::GammaPole(s.re));
    }
    Ok(gamma_unchecked(s))
}

fn gamma_unchecked(s: Complex64) -> Complex64 {
    if s.re < 0.5 {
        // reflection: Gamma(s) = pi / (sin(pi s) Gamma(1 - s))
        let pi_s = Complex64::new(PI, 0.0) * s;
        return Complex64::new(PI, 0.0) / (pi_s.sin() * gamma_unchecked(Complex64::new(1.0, 0.0) - s));
    }
    let z = s - Complex64::new(1.0, 0.0);
    let mut x = Complex64::new(LANCZOS[0], 0.0);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        x += Complex64::new(c, 0.0) / (z + Complex64::new(i as f64, 0.0));
    }
    let t = z + Complex64::new(LANCZOS_G + 0.5, 0.0);
    (TAU as f64).sqrt() * t.powc(z + Complex64::new(0.5, 0.0)) * (-t).exp() * x
}

/// Principal-branch log-gamma by the same Lanczos form; the Gamma factors of
/// chi and the cosine moment decay like exp(-pi |t| / 2) while their trig
/// partners grow at the same rate, so products are assembled in log space to
/// stay finite at any contour height.
pub fn ln_gamma(s: Complex64) -> Complex64 {
    if s.re < 0.5 {
        // ln Gamma(s) = ln pi - ln sin(pi s) - ln Gamma(1 - s), mod 2 pi i
        return Complex64::new(PI.ln(), 0.0)
            - ln_sin(Complex64::new(PI, 0.0) * s)
            - ln_gamma(Complex64::new(1.0, 0.0) - s);
    }
    let z = s - Complex64::new(1.0, 0.0);
    let mut x = Complex64::new(LANCZOS[0], 0.0);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        x += Complex64::new(c, 0.0) / (z + Complex64::new(i as f64, 0.0));
    }
    let t = z + Complex64::new(LANCZOS_G + 0.5, 0.0);
    Complex64::new(0.5 * (TAU).ln(), 0.0) + (z + Complex64::new(0.5, 0.0)) * t.ln() - t + x.ln()
}

/// log sin(z), switching to the dominant exponential for large |Im z|.
pub fn ln_sin(z: Complex64) -> Complex64 {
    if z.im > 30.0 {
        // sin z ~ i e^{-iz} / 2
        Complex64::new(0.0, -1.0) * z + Complex64::new(-(2.0f64.ln()), FRAC_PI_2)
    } else if z.im < -30.0 {
        Complex64::new(0.0, 1.0) * z + Complex64::new(-(2.0f64.ln()), -FRAC_PI_2)
    } else {
        z.sin().ln()
    }
}

/// log cos(z), same large-|Im| handling.
pub fn ln_cos(z: Complex64) -> Complex64 {
    if z.im > 30.0 {
        Complex64::new(0.0, -1.0) * z - Complex64::new(2.0f64.ln(), 0.0)
    } else if z.im < -30.0 {
        Complex64::new(0.0, 1.0) * z - Complex64::new(2.0f64.ln(), 0.0)
    } else {
        z.cos().ln()
    }
}

/// chi(s) = 2^s pi^(s-1) Gamma(1-s) sin(pi s / 2).
///
/// Points where Gamma(1-s) has a pole (s a positive integer) are reported as
/// poles even when the product has a finite limit; callers that need the
/// continuation must take it themselves.
pub fn chi(s: Complex64) -> Result<Complex64> {
    let one_minus = Complex64::new(1.0, 0.0) - s;
    if is_nonpositive_integer(one_minus) {
        return Err(Error::ChiPole(s.re));
    }
    let log = s * Complex64::new(2.0f64.ln(), 0.0)
        + (s - Complex64::new(1.0, 0.0)) * Complex64::new(PI.ln(), 0.0)
        + ln_gamma(one_minus)
        + ln_sin(Complex64::new(FRAC_PI_2, 0.0) * s);
    Ok(log.exp())
}

/// Gamma(s) cos(pi s / 2) as an entire-strip continuation, assembled in log
/// space so it stays representable at large |Im s|.
pub fn gamma_cos_half(s: Complex64) -> Complex64 {
    if s.im == 0.0 && is_nonpositive_integer(s) {
        return Complex64::new(f64::NAN, f64::NAN);
    }
    (ln_gamma(s) + ln_cos(Complex64::new(FRAC_PI_2, 0.0) * s)).exp()
}

/// Gamma(s) cos(pi s / 2): the regularized cosine moment
/// int_0^inf t^(s-1) cos t dt on the strip 0 < Re s < 1.
pub fn cosine_moment(s: Complex64) -> Result<Complex64> {
    if s.re <= 0.0 || s.re >= 1.0 {
        return Err(Error::CosineMomentStrip(s.re));
    }
    Ok(gamma_cos_half(s))
}

// ---------------------------------------------------------------------------
// Sine integral
// ---------------------------------------------------------------------------

/// Si(x) = int_0^x sin t / t dt for x >= 0, 12+ digits.
pub fn sine_integral(x: f64) -> Result<f64> {
    if x < 0.0 {
        return Err(Error::NonPositive(x));
    }
    Ok(si(x))
}

pub fn si(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x <= 2.0 {
        si_series(x)
    } else if x < 40.0 {
        FRAC_PI_2 - si_comp(x)
    } else {
        FRAC_PI_2 - si_comp_asym(x)
    }
}

/// pi/2 - Si(x), computed without the catastrophic cancellation that the
/// naive subtraction suffers for large x. The mid range is tabulated once
/// (continued fraction) because this sits in the innermost quadrature loops.
pub fn si_comp(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x <= 2.0 {
        FRAC_PI_2 - si_series(x)
    } else if x < 40.0 {
        let t = si_comp_table();
        quad::interp6_uniform(&t.vals, (x - 2.0) / t.step)
    } else {
        si_comp_asym(x)
    }
}

struct SiTable {
    step: f64,
    vals: Vec<f64>,
}

fn si_comp_table() -> &'static SiTable {
    static T: OnceLock<SiTable> = OnceLock::new();
    T.get_or_init(|| {
        let step: f64 = 1.0 / 128.0;
        let n = ((40.0 - 2.0) / step).round() as usize + 6;
        let vals = (0..n)
            .map(|i| {
                let x = 2.0 + i as f64 * step;
                if x <= 4.0 {
                    FRAC_PI_2 - si_series(x)
                } else {
                    si_comp_cf(x)
                }
            })
            .collect();
        SiTable { step, vals }
    })
}

fn si_series(x: f64) -> f64 {
    // sum (-1)^k x^(2k+1) / ((2k+1) (2k+1)!)
    let mut term = x;
    let mut sum = x;
    let x2 = x * x;
    let mut k = 1u32;
    loop {
        let m = 2 * k as u64;
        term *= -x2 / ((m * (m + 1)) as f64);
        let contrib = term / (m + 1) as f64;
        sum += contrib;
        if contrib.abs() < 1e-18 * sum.abs().max(1e-30) || k > 60 {
            return sum;
        }
        k += 1;
    }
}

/// pi/2 - Si(x) = Im E1(ix) sign-adjusted, via the modified Lentz continued
/// fraction for E1.
fn si_comp_cf(x: f64) -> f64 {
    let z = Complex64::new(0.0, x);
    let tiny = Complex64::new(1e-300, 0.0);
    let mut b = z + Complex64::new(1.0, 0.0);
    let mut c = Complex64::new(1e300, 0.0);
    let mut d = b.inv();
    let mut h = d;
    for i in 1..300 {
        let a = Complex64::new(-((i * i) as f64), 0.0);
        b += Complex64::new(2.0, 0.0);
        d = (a * d + b).inv();
        if d.norm() == 0.0 {
            d = tiny;
        }
        c = b + a / c;
        if c.norm() == 0.0 {
            c = tiny;
        }
        let del = c * d;
        h *= del;
        if (del - Complex64::new(1.0, 0.0)).norm() < 1e-16 {
            break;
        }
    }
    let e1 = (-z).exp() * h;
    // E1(ix) = -Ci(x) - i (pi/2 - Si(x))
    -e1.im
}

fn si_comp_asym(x: f64) -> f64 {
    // pi/2 - Si(x) = f(x) cos x + g(x) sin x
    let x2 = x * x;
    let mut f = 0.0;
    let mut g = 0.0;
    let mut num = 1.0; // (2k)!  /  (2k+1)! interleaved
    let mut pow = 1.0;
    for k in 0..10u32 {
        let t_f = num * pow; // (2k)! / x^(2k)
        f += if k % 2 == 0 { t_f } else { -t_f };
        let num_g = num * (2 * k + 1) as f64; // (2k+1)!
        let t_g = num_g * pow;
        g += if k % 2 == 0 { t_g } else { -t_g };
        num = num_g * (2 * k + 2) as f64; // (2k+2)!
        pow /= x2;
        if num * pow > num_g * pow * x2 {
            // terms started growing; asymptotic optimum reached
        }
    }
    f /= x;
    g /= x2;
    f * x.cos() + g * x.sin()
}

/// Exponential integral E1(z) for Re z >= 0, z != 0: power series near the
/// origin, modified Lentz continued fraction elsewhere.
pub fn e1_complex(z: Complex64) -> Complex64 {
    if z.norm() <= 4.0 {
        // E1(z) = -gamma - ln z + sum_{k>=1} (-1)^{k+1} z^k / (k k!)
        let mut sum = Complex64::new(0.0, 0.0);
        let mut term = Complex64::new(1.0, 0.0);
        for k in 1..=80 {
            term *= -z / Complex64::new(k as f64, 0.0);
            let contrib = -term / Complex64::new(k as f64, 0.0);
            sum += contrib;
            if contrib.norm() < 1e-18 * sum.norm().max(1e-30) {
                break;
            }
        }
        Complex64::new(-EULER_GAMMA, 0.0) - z.ln() + sum
    } else {
        e1_cf(z)
    }
}

fn e1_cf(z: Complex64) -> Complex64 {
    let tiny = Complex64::new(1e-300, 0.0);
    let mut b = z + Complex64::new(1.0, 0.0);
    let mut c = Complex64::new(1e300, 0.0);
    let mut d = b.inv();
    let mut h = d;
    for i in 1..400 {
        let a = Complex64::new(-((i * i) as f64), 0.0);
        b += Complex64::new(2.0, 0.0);
        d = (a * d + b).inv();
        if d.norm() == 0.0 {
            d = tiny;
        }
        c = b + a / c;
        if c.norm() == 0.0 {
            c = tiny;
        }
        let del = c * d;
        h *= del;
        if (del - Complex64::new(1.0, 0.0)).norm() < 1e-16 {
            break;
        }
    }
    (-z).exp() * h
}

/// Si(a)/a extended evenly through a = 0 (entire function of a^2).
pub fn si_over(a: f64) -> f64 {
    let x = a.abs();
    if x < 1e-2 {
        // 1 - a^2/18 + a^4/600 - ...
        let x2 = x * x;
        return 1.0 - x2 / 18.0 + x2 * x2 / 600.0 - x2 * x2 * x2 / 35_280.0;
    }
    si(x) / x
}

// ---------------------------------------------------------------------------
// J(a) = int_0^a (log w / w) sin w dw and the derived G, M transforms
// ---------------------------------------------------------------------------

const HARMONIC: [f64; 13] = [
    0.0,
    1.0,
    1.5,
    1.833_333_333_333_333_3,
    2.083_333_333_333_333_3,
    2.283_333_333_333_333_3,
    2.45,
    2.592_857_142_857_142_8,
    2.717_857_142_857_142_8,
    2.828_968_253_968_254,
    2.928_968_253_968_254,
    3.019_877_344_877_345,
    3.103_210_678_210_678,
];

struct JTable {
    step: f64,
    vals: Vec<f64>,
}

fn j_table() -> &'static JTable {
    static T: OnceLock<JTable> = OnceLock::new();
    T.get_or_init(|| {
        let step = 1.0 / 128.0;
        let top = 32.0f64;
        let n = (top / step).round() as usize + 1;
        let mut vals = Vec::with_capacity(n);
        let rule = gl16();
        let mut acc = 0.0;
        let mut comp = 0.0; // Kahan carry
        vals.push(0.0);
        for i in 1..n {
            let lo = (i - 1) as f64 * step;
            let hi = i as f64 * step;
            let piece = if i == 1 {
                j_series(hi)
            } else {
                rule.integrate(&|w: f64| w.ln() * w.sin() / w, lo, hi)
            };
            let y = piece - comp;
            let t = acc + y;
            comp = (t - acc) - y;
            acc = t;
            vals.push(acc);
        }
        JTable { step, vals }
    })
}

fn j_series(a: f64) -> f64 {
    // int_0^a w^(2k) log w dw = a^(2k+1) (log a / (2k+1) - 1/(2k+1)^2)
    let la = a.ln();
    let mut sum = 0.0;
    let mut coeff = 1.0; // 1/(2k+1)! with sign
    let mut apow = a;
    let a2 = a * a;
    for k in 0..30u32 {
        let m = (2 * k + 1) as f64;
        let term = coeff * apow * (la / m - 1.0 / (m * m));
        sum += term;
        if term.abs() < 1e-19 {
            break;
        }
        coeff *= -1.0 / ((m + 1.0) * (m + 2.0));
        apow *= a2;
    }
    sum
}

/// J(a) = int_0^a (log w / w) sin w dw, a >= 0.
pub fn jlog(a: f64) -> f64 {
    debug_assert!(a >= 0.0);
    if a == 0.0 {
        return 0.0;
    }
    if a < 0.5 {
        return j_series(a);
    }
    if a <= 32.0 {
        let t = j_table();
        return quad::interp6_uniform(&t.vals, a / t.step);
    }
    // J(a) = -pi/2 gamma - int_a^inf (log w / w) sin w dw
    -FRAC_PI_2 * EULER_GAMMA - j_tail_asym(a)
}

/// int_a^inf (log w / w) sin w dw by iterated parts:
/// sum_j (-1)^j [phi^(2j)(a) cos a - phi^(2j+1)(a) sin a],
/// phi^(n)(a) = (-1)^n n! (log a - H_n) / a^(n+1).
fn j_tail_asym(a: f64) -> f64 {
    let la = a.ln();
    let (sa, ca) = a.sin_cos();
    let mut sum = 0.0;
    let mut fact = 1.0;
    let mut apow = a; // a^(n+1) for n = 0
    let mut sign_j = 1.0;
    for j in 0..6u32 {
        let n_even = 2 * j as usize;
        let phi_even = even_sign(n_even) * fact * (la - HARMONIC[n_even]) / apow;
        fact *= (n_even + 1) as f64;
        apow *= a;
        let phi_odd = even_sign(n_even + 1) * fact * (la - HARMONIC[n_even + 1]) / apow;
        fact *= (n_even + 2) as f64;
        apow *= a;
        sum += sign_j * (phi_even * ca - phi_odd * sa);
        sign_j = -sign_j;
    }
    sum
}

fn even_sign(n: usize) -> f64 {
    if n % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// G(a) = int_1^inf (log v / v) sin(av) dv for a > 0
///      = log(1/a) (pi/2 - Si(a)) - (pi/2) gamma_E - J(a).
pub fn glog(a: f64) -> f64 {
    debug_assert!(a > 0.0);
    -a.ln() * si_comp(a) - FRAC_PI_2 * EULER_GAMMA - jlog(a)
}

/// Odd extension of G with the regularized value G(0) = 0: the exact
/// zero-frequency term sin(0 v) = 0, used at resonant lattice pairs.
pub fn glog_signed(a: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else if a > 0.0 {
        glog(a)
    } else {
        -glog(-a)
    }
}

/// M(a) = int_1^inf (log v / v^2) cos(av) dv, even, M(0) = 1.
pub fn mlog(a: f64) -> f64 {
    let x = a.abs();
    if x == 0.0 {
        return 1.0;
    }
    x.cos() - x * si_comp(x) - x * glog(x)
}

// ---------------------------------------------------------------------------
// Regularized log-weighted cosine integrals
// ---------------------------------------------------------------------------

/// Abel-regularized int_1^inf log v cos(omega v) dv = -(pi/2 - Si(omega))/omega.
pub fn osc_log_cos_tail(omega: f64) -> Result<f64> {
    if omega <= 0.0 {
        return Err(Error::NonPositive(omega));
    }
    Ok(-si_comp(omega) / omega)
}

/// Abel-regularized int_0^inf log t cos(omega t) dt = -pi/(2 omega).
pub fn osc_log_cos_full(omega: f64) -> Result<f64> {
    if omega <= 0.0 {
        return Err(Error::NonPositive(omega));
    }
    Ok(-FRAC_PI_2 / omega)
}

// ---------------------------------------------------------------------------
// Truncated Mellin line integrals
// ---------------------------------------------------------------------------

/// A vertical contour Re s = c truncated at |Im s| <= height.
#[derive(Debug, Clone, Copy)]
pub struct ContourSpec {
    pub c: f64,
    pub height: f64,
    pub nodes: usize,
}

impl ContourSpec {
    pub fn new(c: f64, height: f64, nodes: usize) -> Result<Self> {
        if !(0.0 < c && c < 1.0) {
            return Err(Error::InvalidContour(format!("abscissa {c} outside (0,1)")));
        }
        if height <= 0.0 {
            return Err(Error::InvalidContour(format!("height {height} <= 0")));
        }
        if nodes < 16 {
            return Err(Error::InvalidContour(format!("{nodes} nodes < 16")));
        }
        Ok(ContourSpec { c, height, nodes })
    }
}

/// (1/2 pi i) int over the truncated line Re s = c, with a Wynn-epsilon
/// accelerated cycle tail for the slowly decaying oscillatory remainder.
///
/// The gamma factors carried by these integrands oscillate with a phase rate
/// that grows like log|t| along the line, so panel widths shrink accordingly;
/// `nodes` sets a floor on the node density for whatever extra oscillation the
/// caller's integrand brings (adequate for phase rates up to ~2 rad/unit).
///
/// The integrand must decay at least like |Im s|^(-3/2) along the line.
/// Returns (value, remainder estimate); errors when the estimate exceeds `tol`.
pub fn mellin_line_integral<F>(spec: &ContourSpec, tol: f64, f: F) -> Result<(Complex64, f64)>
where
    F: Fn(Complex64) -> Complex64,
{
    let rule = gl32();
    let floor_density = spec.nodes as f64 / (2.0 * spec.height * 32.0); // panels per unit
    let panel_width = |t: f64| -> f64 {
        let rate = 2.0 + (1.0 + t.abs()).ln();
        (6.0 / rate).min(if floor_density > 0.0 {
            1.0 / floor_density
        } else {
            f64::INFINITY
        })
    };
    let eval_strip = |lo: f64, hi: f64| -> Complex64 {
        let mut re_parts = Vec::new();
        let mut im_parts = Vec::new();
        let mut a = lo;
        while a < hi {
            let w_here = panel_width(a).min(panel_width(hi.min(a + 1.0)));
            let b = (a + w_here).min(hi);
            let cm = 0.5 * (a + b);
            let hw = 0.5 * (b - a);
            let mut acc = Complex64::new(0.0, 0.0);
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let t = cm + hw * x;
                acc += Complex64::new(*w, 0.0) * f(Complex64::new(spec.c, t));
            }
            let v = acc * Complex64::new(hw, 0.0);
            re_parts.push(v.re);
            im_parts.push(v.im);
            a = b;
        }
        Complex64::new(quad::pairwise_sum(&re_parts), quad::pairwise_sum(&im_parts))
    };

    let core = eval_strip(-spec.height, spec.height);

    // cycle tail, Wynn-accelerated
    let cycles = 24usize;
    let delta = (spec.height / 8.0).max(2.0);
    let mut partial_re = Vec::with_capacity(cycles + 1);
    let mut partial_im = Vec::with_capacity(cycles + 1);
    let mut acc = core;
    partial_re.push(acc.re);
    partial_im.push(acc.im);
    for m in 0..cycles {
        let lo = spec.height + m as f64 * delta;
        let hi = lo + delta;
        acc += eval_strip(lo, hi) + eval_strip(-hi, -lo);
        partial_re.push(acc.re);
        partial_im.push(acc.im);
    }
    let (vre, ere) = quad::wynn_epsilon(&partial_re);
    let (vim, eim) = quad::wynn_epsilon(&partial_im);
    // 1/(2 pi i) ds with ds = i dt
    let value = Complex64::new(vre, vim) / Complex64::new(TAU, 0.0);
    let t_end = spec.height + cycles as f64 * delta;
    let f_end = f(Complex64::new(spec.c, t_end)).norm() + f(Complex64::new(spec.c, -t_end)).norm();
    // |s|^(-3/2) decay model for whatever the acceleration left behind
    let model = f_end * t_end / TAU;
    let est = ((ere + eim) * 4.0 / TAU).min(model) + 1e-16 * value.norm();
    if !value.re.is_finite() || !value.im.is_finite() {
        return Err(Error::NonFinite);
    }
    if est > tol {
        return Err(Error::ContourTruncation { est, tol });
    }
    Ok((value, est))
}
