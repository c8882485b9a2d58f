//! Shared helpers for the integration tests, including a high-precision Bessel
//! series used as an independent oracle.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};

/// Binary fixed point with `FRAC` fractional bits; rounding error ~2^-FRAC per op.
const FRAC: u32 = 600;

fn fixed(x: f64) -> BigInt {
    if x == 0.0 {
        return BigInt::zero();
    }
    // x = mant · 2^exp exactly
    let bits = x.abs().to_bits();
    let e = ((bits >> 52) & 0x7ff) as i32;
    let (mant, exp) = if e == 0 {
        (bits & ((1 << 52) - 1), -1074)
    } else {
        ((bits & ((1 << 52) - 1)) | (1 << 52), e - 1075)
    };
    let v = BigInt::from(mant);
    let shift = exp + FRAC as i32;
    let v = if shift >= 0 {
        v << shift as u32
    } else {
        v >> (-shift) as u32
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

fn to_f64(v: &BigInt) -> f64 {
    // keep 64 leading bits so the conversion itself cannot overflow
    let extra = v.bits().saturating_sub(64);
    let head = (v >> extra).to_f64().unwrap_or(f64::NAN);
    head * 2f64.powi(extra as i32 - FRAC as i32)
}

fn mul(a: &BigInt, b: &BigInt) -> BigInt {
    (a * b) >> FRAC
}

/// `J_m(z) = (z/2)^m Σ_k (-z²/4)^k / (k! (m+k)!)` in 600-bit fixed point.
pub fn bessel_j_series_exact(m: u32, z: Complex64) -> Complex64 {
    let (hr, hi) = (fixed(z.re / 2.0), fixed(z.im / 2.0));
    let (mut tr, mut ti) = (BigInt::from(1) << FRAC, BigInt::zero());
    for j in 1..=m {
        let r = (mul(&tr, &hr) - mul(&ti, &hi)) / j;
        ti = (mul(&tr, &hi) + mul(&ti, &hr)) / j;
        tr = r;
    }
    // -(z/2)²
    let qr = -(mul(&hr, &hr) - mul(&hi, &hi));
    let qi: BigInt = -(mul(&hr, &hi) << 1u32);
    let (mut sr, mut si) = (tr.clone(), ti.clone());
    let zabs = z.norm();
    for k in 1..2000u64 {
        let d = k * (k + m as u64);
        let r = (mul(&tr, &qr) - mul(&ti, &qi)) / d;
        ti = (mul(&tr, &qi) + mul(&ti, &qr)) / d;
        tr = r;
        sr += &tr;
        si += &ti;
        // past the peak the terms shrink at least geometrically
        let t = to_f64(&tr).hypot(to_f64(&ti));
        let s = to_f64(&sr).hypot(to_f64(&si));
        if (k as f64) > zabs && t <= 1e-30 * s.max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Complex64::new(to_f64(&sr), to_f64(&si))
}
