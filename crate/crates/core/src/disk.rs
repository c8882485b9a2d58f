//! Closed-form scattering by the homogeneous unit disk with `A = aI` and constant `n`,
//! measured on the circle of radius 2.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::born::MultistaticMatrix;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry::{make_sensor_array, Point, SensorArray};
use crate::linalg::{ComplexMatrix, Regime};
use crate::specfun::{bessel_j, bessel_j_prime, fundamental_solution, hankel1, hankel1_prime, MAX_ORDER};

pub const DISK_RADIUS: f64 = 1.0;
pub const MEASUREMENT_RADIUS: f64 = 2.0;
pub const RESONANCE_TOL: f64 = 1e-14;
pub const DEFAULT_TRUNCATION: usize = 20;
pub const DEFAULT_QUAD_POINTS: usize = 64;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiskMedium {
    pub a: Complex64,
    pub n: Complex64,
    #[serde(default = "default_k")]
    pub k: f64,
}

fn default_k() -> f64 {
    1.0
}

impl DiskMedium {
    pub fn new(a: Complex64, n: Complex64, k: f64) -> Result<Self> {
        let m = DiskMedium { a, n, k };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0) || !self.k.is_finite() {
            return Err(Error::domain(format!("wavenumber must be positive, got {}", self.k)));
        }
        if !(self.a.re > 0.0) || !self.a.im.is_finite() {
            return Err(Error::domain(format!("Re(a) must be positive, got {}", self.a)));
        }
        if !self.n.re.is_finite() || !self.n.im.is_finite() || self.n == Complex64::new(0.0, 0.0) {
            return Err(Error::domain(format!("invalid refractive index {}", self.n)));
        }
        Ok(())
    }

    /// Which sign condition the coefficients satisfy, if any.
    pub fn regime(&self) -> Option<Regime> {
        if self.a.im < 0.0 && self.n.im > 0.0 {
            Some(Regime::AbsorbingConjugate)
        } else if self.a.im == 0.0 && self.n.im == 0.0 && self.a.re != 1.0 {
            Some(Regime::Nonabsorbing)
        } else {
            None
        }
    }
}

/// Scattering coefficient of mode `m`; `σ_{-m} = σ_m`.
pub fn sigma_m(medium: &DiskMedium, m: u32) -> Result<Complex64> {
    medium.validate()?;
    let k = medium.k;
    let kc = Complex64::new(k, 0.0);
    let eta = (medium.n / medium.a).sqrt();
    let s = (medium.n * medium.a).sqrt();
    let ji = bessel_j(m, eta * k)?;
    let dji = bessel_j_prime(m, eta * k)?;
    let jo = bessel_j(m, kc)?;
    let djo = bessel_j_prime(m, kc)?;
    let h = hankel1(m, k)?;
    let dh = hankel1_prime(m, k)?;
    let num = ji * djo - s * dji * jo;
    let den = ji * dh - s * dji * h;
    if !(den.norm() > RESONANCE_TOL) {
        return Err(Error::Resonance {
            order: m,
            magnitude: den.norm(),
        });
    }
    Ok(num / den)
}

/// `σ_m` and the kernel weights `c_m = (i/4) σ_m |H_m(2k)|²` for `m = 0..=M`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesCoefficients {
    pub sigma: Vec<Complex64>,
    pub kernel: Vec<Complex64>,
}

impl SeriesCoefficients {
    pub fn truncation(&self) -> usize {
        self.sigma.len() - 1
    }

    /// `u^s` as a function of the angle difference `x̂ - ŷ`.
    pub fn eval(&self, theta: f64) -> Complex64 {
        let mut acc = self.kernel[0];
        for (m, c) in self.kernel.iter().enumerate().skip(1) {
            acc += c * (2.0 * (m as f64 * theta).cos());
        }
        acc
    }
}

pub fn series_coefficients(medium: &DiskMedium, truncation: usize) -> Result<SeriesCoefficients> {
    if truncation > MAX_ORDER as usize {
        return Err(Error::domain(format!("truncation {truncation} exceeds {MAX_ORDER}")));
    }
    let mut sigma = Vec::with_capacity(truncation + 1);
    let mut kernel = Vec::with_capacity(truncation + 1);
    for m in 0..=truncation as u32 {
        let s = sigma_m(medium, m)?;
        let h = hankel1(m, MEASUREMENT_RADIUS * medium.k)?;
        sigma.push(s);
        kernel.push(I * 0.25 * s * h.norm_sqr());
    }
    Ok(SeriesCoefficients { sigma, kernel })
}

/// Scattered field for source angle `ŷ` and receiver angle `x̂` on the radius-2 circle.
pub fn disk_scattered_field(medium: &DiskMedium, truncation: usize, x_angle: f64, y_angle: f64) -> Result<Complex64> {
    Ok(series_coefficients(medium, truncation)?.eval(x_angle - y_angle))
}

/// Riemann-sum discretization `(2π/Q) u^s(x̂_i, ŷ_j)` of the truncated near-field operator.
pub fn assemble_nearfield_matrix(medium: &DiskMedium, truncation: usize, quad_points: usize) -> Result<ComplexMatrix> {
    assemble_nearfield_matrix_with(medium, truncation, quad_points, Exec::default())
}

pub fn assemble_nearfield_matrix_with(
    medium: &DiskMedium,
    truncation: usize,
    quad_points: usize,
    exec: Exec,
) -> Result<ComplexMatrix> {
    let q = quad_points;
    if q < 2 * truncation + 2 {
        return Err(Error::domain(format!(
            "{q} quadrature points cannot resolve truncation {truncation} (need >= {})",
            2 * truncation + 2
        )));
    }
    let coefs = series_coefficients(medium, truncation)?;
    let w = 2.0 * PI / q as f64;
    // circulant: one kernel evaluation per offset (i - j) mod Q
    let kernel: Vec<Complex64> = (0..q).map(|d| coefs.eval(w * d as f64) * w).collect();
    let rows = exec.map(q, |i| (0..q).map(|j| kernel[(i + q - j) % q]).collect::<Vec<_>>());
    ComplexMatrix::from_row_major(q, q, rows.concat())
}

/// Analytic eigenvalues of the discretized operator, indexed by DFT bin `l`
/// (Fourier mode `l` for `l <= Q/2`, `l - Q` above).
pub fn circulant_eigenvalues(medium: &DiskMedium, truncation: usize, quad_points: usize) -> Result<Vec<Complex64>> {
    let coefs = series_coefficients(medium, truncation)?;
    Ok((0..quad_points)
        .map(|l| {
            let m = if l <= quad_points / 2 { l } else { quad_points - l };
            if m <= truncation {
                coefs.kernel[m] * (2.0 * PI)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect())
}

/// The `Q` equispaced sensors on the measurement circle, first one at angle 0.
pub fn disk_sensors(quad_points: usize) -> Result<SensorArray> {
    make_sensor_array(quad_points, MEASUREMENT_RADIUS)
}

pub fn disk_multistatic(medium: &DiskMedium, truncation: usize, quad_points: usize) -> Result<MultistaticMatrix> {
    let data = assemble_nearfield_matrix(medium, truncation, quad_points)?;
    MultistaticMatrix::new(data, disk_sensors(quad_points)?, medium.k)
}

/// `φ_z` with components `Φ(x_i, z)`.
pub fn rhs_point_source(z: Point, k: f64, sensors: &SensorArray) -> Result<Vec<Complex64>> {
    if !sensors.encloses(z) {
        return Err(Error::domain(format!(
            "sampling point ({}, {}) is not inside the measurement circle",
            z.x, z.y
        )));
    }
    sensors
        .points()
        .iter()
        .map(|&x| fundamental_solution(k, x, z))
        .collect()
}
