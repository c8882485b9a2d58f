//! Integer-order Bessel and Hankel functions.
//!
//! `J_m(z)` is evaluated by the ascending power series when `|z| < 12` and by
//! Miller's downward recurrence beyond that. The recurrence is normalized with
//! `J_0 + 2 Σ J_2k = 1` on the real line and with the generating-function
//! identity `e^{∓iz} = J_0 + 2 Σ (∓i)^n J_n` for complex arguments, picking
//! the sign that keeps the normalizing sum free of cancellation.
//!
//! `Y_0` and `Y_1` come from the Neumann expansions in terms of `J_n` and
//! higher orders from forward recurrence, which is stable for `Y`.
//!
//! Derivatives always use the two-term recurrence
//! `C'_m = (C_{m-1} - C_{m+1}) / 2`, `C'_0 = -C_1`.

use std::f64::consts::FRAC_2_PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Largest supported order.
pub const MAX_ORDER: u32 = 200;
/// Largest supported argument magnitude.
pub const MAX_ARGUMENT: f64 = 700.0;

const SERIES_RADIUS: f64 = 12.0;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const RESCALE_AT: f64 = 1e250;

fn check_order(order: u32) -> Result<()> {
    if order > MAX_ORDER {
        return Err(Error::domain(format!("Bessel order {order} exceeds {MAX_ORDER}")));
    }
    Ok(())
}

fn check_complex_arg(z: Complex64) -> Result<()> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::domain("non-finite Bessel argument"));
    }
    if z.norm() > MAX_ARGUMENT {
        return Err(Error::domain(format!("|z| = {} exceeds {MAX_ARGUMENT}", z.norm())));
    }
    Ok(())
}

fn check_positive_arg(x: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("argument must be positive, got {x}")));
    }
    if x > MAX_ARGUMENT {
        return Err(Error::domain(format!("x = {x} exceeds {MAX_ARGUMENT}")));
    }
    Ok(())
}

fn finite(v: Complex64, what: &str) -> Result<Complex64> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::domain(format!("{what} overflowed")))
    }
}

/// `J_order(z)` for complex `z`. Real inputs yield an exactly real result.
pub fn bessel_j(order: u32, z: Complex64) -> Result<Complex64> {
    check_order(order)?;
    check_complex_arg(z)?;
    if z.im == 0.0 {
        return Ok(Complex64::new(j_real(order, z.re), 0.0));
    }
    Ok(j_complex(order, z))
}

/// `J_order(x)` for real `x`.
pub fn bessel_j_real(order: u32, x: f64) -> Result<f64> {
    check_order(order)?;
    check_complex_arg(Complex64::new(x, 0.0))?;
    Ok(j_real(order, x))
}

/// `Y_order(x)` for `x > 0`.
pub fn bessel_y(order: u32, x: f64) -> Result<f64> {
    check_order(order)?;
    check_positive_arg(x)?;
    let y = y_real(order, x);
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::domain(format!("Y_{order}({x}) overflows")))
    }
}

/// First-kind Hankel function `H^(1)_order(x) = J_order(x) + i Y_order(x)`.
///
/// For real `x` its conjugate is the second-kind function `H^(2)_order(x)`.
pub fn hankel1(order: u32, x: f64) -> Result<Complex64> {
    check_order(order)?;
    check_positive_arg(x)?;
    finite(Complex64::new(j_real(order, x), y_real(order, x)), "H^(1)")
}

/// `J'_order(z)` via the derivative recurrence.
pub fn bessel_j_prime(order: u32, z: Complex64) -> Result<Complex64> {
    check_order(order)?;
    check_complex_arg(z)?;
    let j = |m: u32| {
        if z.im == 0.0 {
            Complex64::new(j_real(m, z.re), 0.0)
        } else {
            j_complex(m, z)
        }
    };
    Ok(if order == 0 {
        -j(1)
    } else {
        (j(order - 1) - j(order + 1)) * 0.5
    })
}

/// `(H^(1)_order)'(x)` via the derivative recurrence.
pub fn hankel1_prime(order: u32, x: f64) -> Result<Complex64> {
    check_order(order)?;
    check_positive_arg(x)?;
    let h = |m: u32| Complex64::new(j_real(m, x), y_real(m, x));
    let d = if order == 0 {
        -h(1)
    } else {
        (h(order - 1) - h(order + 1)) * 0.5
    };
    finite(d, "H^(1)'")
}

/// Free-space Helmholtz fundamental solution `Φ(x, y) = (i/4) H^(1)_0(k|x - y|)`.
pub fn fundamental_solution(k: f64, x: Point, y: Point) -> Result<Complex64> {
    if !(k > 0.0) {
        return Err(Error::domain(format!("wavenumber must be positive, got {k}")));
    }
    let r = x.dist(y);
    if r == 0.0 {
        return Err(Error::domain("fundamental solution is singular at x = y"));
    }
    Ok(Complex64::new(0.0, 0.25) * hankel1(0, k * r)?)
}

// ---------------------------------------------------------------------------
// real argument

fn j_real(order: u32, x: f64) -> f64 {
    let sign = if x < 0.0 && order % 2 == 1 { -1.0 } else { 1.0 };
    let ax = x.abs();
    if ax < SERIES_RADIUS {
        sign * j_series_real(order, ax)
    } else {
        sign * j_miller_real(order as usize, ax)[order as usize]
    }
}

fn j_series_real(order: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for j in 1..=order {
        term *= half / j as f64;
    }
    if term == 0.0 {
        return 0.0;
    }
    let q = -half * half;
    let mut sum = term;
    let m = order as f64;
    for k in 1..400 {
        let kf = k as f64;
        term *= q / (kf * (kf + m));
        sum += term;
        if term.abs() <= f64::EPSILON * 1e-2 * sum.abs() {
            break;
        }
    }
    sum
}

fn miller_start(max_order: usize, magnitude: f64) -> usize {
    let base = (max_order as f64).max(magnitude.ceil());
    let n = base as usize + 20 + (40.0 * base).sqrt() as usize;
    n + n % 2
}

/// `J_0(x) ..= J_N(x)` for `x > 0` by normalized downward recurrence, where
/// `N >= max_order` is the recurrence start.
fn j_miller_real(max_order: usize, x: f64) -> Vec<f64> {
    let start = miller_start(max_order, x);
    let mut vals = vec![0.0; start + 1];
    let mut next = 0.0;
    let mut cur = 1e-30;
    vals[start] = cur;
    let mut norm = 2.0 * cur; // start is even
    for n in (1..=start).rev() {
        let prev = (2.0 * n as f64 / x) * cur - next;
        next = cur;
        cur = prev;
        vals[n - 1] = cur;
        if (n - 1) % 2 == 0 {
            norm += if n == 1 { cur } else { 2.0 * cur };
        }
        if cur.abs() > RESCALE_AT {
            for v in &mut vals[n - 1..] {
                *v /= RESCALE_AT;
            }
            norm /= RESCALE_AT;
            cur /= RESCALE_AT;
            next /= RESCALE_AT;
        }
    }
    for v in &mut vals {
        *v /= norm;
    }
    vals
}

fn y_real(order: u32, x: f64) -> f64 {
    let js = j_miller_real(1, x);
    let log_term = (0.5 * x).ln() + EULER_GAMMA;

    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut k = 1;
    while 2 * k + 1 < js.len() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let kf = k as f64;
        s0 += sign * js[2 * k] / kf;
        s1 += sign * (js[2 * k - 1] - js[2 * k + 1]) / kf;
        k += 1;
    }
    let y0 = FRAC_2_PI * (log_term * js[0] - 2.0 * s0);
    if order == 0 {
        return y0;
    }
    let y1 = FRAC_2_PI * (log_term * js[1] - js[0] / x + s1);
    let (mut prev, mut cur) = (y0, y1);
    for n in 1..order {
        let next = (2.0 * n as f64 / x) * cur - prev;
        prev = cur;
        cur = next;
        if !cur.is_finite() {
            return cur;
        }
    }
    cur
}

// ---------------------------------------------------------------------------
// complex argument

fn j_complex(order: u32, z: Complex64) -> Complex64 {
    if z.norm() < SERIES_RADIUS {
        j_series_complex(order, z)
    } else {
        j_miller_complex(order as usize, z)
    }
}

fn j_series_complex(order: u32, z: Complex64) -> Complex64 {
    let half = z * 0.5;
    let mut term = Complex64::new(1.0, 0.0);
    for j in 1..=order {
        term *= half / j as f64;
    }
    if term.norm_sqr() == 0.0 {
        return term;
    }
    let q = -half * half;
    let mut sum = term;
    let m = order as f64;
    for k in 1..400 {
        let kf = k as f64;
        term *= q / (kf * (kf + m));
        sum += term;
        if term.norm() <= f64::EPSILON * 1e-2 * sum.norm() {
            break;
        }
    }
    sum
}

fn j_miller_complex(order: usize, z: Complex64) -> Complex64 {
    let start = miller_start(order, z.norm());
    // e^{-iz} when Im z >= 0, e^{iz} otherwise; both have modulus >= 1.
    let (unit, target) = if z.im >= 0.0 {
        (Complex64::new(0.0, -1.0), (Complex64::new(0.0, -1.0) * z).exp())
    } else {
        (Complex64::new(0.0, 1.0), (Complex64::new(0.0, 1.0) * z).exp())
    };
    // unit^n for n = start .. 0, built by repeated multiplication by unit^{-1}
    let unit_pow = |n: usize| match n % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => unit,
        2 => Complex64::new(-1.0, 0.0),
        _ => -unit,
    };

    let two_over_z = Complex64::new(2.0, 0.0) / z;
    let mut next = Complex64::new(0.0, 0.0);
    let mut cur = Complex64::new(1e-30, 0.0);
    let mut wanted = if start == order { cur } else { Complex64::new(0.0, 0.0) };
    let mut norm = cur * unit_pow(start) * 2.0;
    for n in (1..=start).rev() {
        let prev = two_over_z * (n as f64) * cur - next;
        next = cur;
        cur = prev;
        let idx = n - 1;
        if idx == order {
            wanted = cur;
        }
        norm += if idx == 0 { cur } else { cur * unit_pow(idx) * 2.0 };
        if cur.norm() > RESCALE_AT {
            cur /= RESCALE_AT;
            next /= RESCALE_AT;
            norm /= RESCALE_AT;
            wanted /= RESCALE_AT;
        }
    }
    wanted * (target / norm)
}

/// Series for `Φ(x, y)` with `|y| > |x|`, truncated at `|m| <= terms`:
/// `(i/4) Σ H^(1)_m(k|y|) J_m(k|x|) e^{im(ŷ - x̂)}`.
///
/// Independent route to [`fundamental_solution`] through the addition theorem.
pub fn fundamental_solution_addition(k: f64, x: Point, y: Point, terms: u32) -> Result<Complex64> {
    let (rx, ry) = (x.norm(), y.norm());
    if !(ry > rx) {
        return Err(Error::domain("addition theorem needs |y| > |x|"));
    }
    let dtheta = y.angle() - x.angle();
    let mut sum = hankel1(0, k * ry)? * j_real(0, k * rx);
    for m in 1..=terms {
        let c = hankel1(m, k * ry)? * j_real(m, k * rx);
        // J_{-m} H_{-m} = J_m H_m for integer m
        sum += c * 2.0 * (m as f64 * dtheta).cos();
    }
    Ok(Complex64::new(0.0, 0.25) * sum)
}
