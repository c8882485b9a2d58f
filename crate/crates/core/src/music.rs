//! MUSIC: localize small scatterers by testing whether `φ_z` lies in the
//! signal subspace of `NN*`.

use num_complex::Complex64;

use crate::born::MultistaticMatrix;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::field::IndicatorField;
use crate::geometry::{Point, SamplingGrid, SensorArray};
use crate::linalg::{hermitian_eig, inner, numerical_rank, EigenSystem};
use crate::specfun::fundamental_solution;

/// Returned instead of `+∞` when `φ_z` has no noise-subspace component.
pub const INDICATOR_CAP: f64 = 1e12;

/// Default relative cut on the eigenvalues of `NN*` (squared singular values of `N`).
pub const DEFAULT_RANK_TOL: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct MusicModel {
    eig: EigenSystem,
    rank: usize,
    sensors: SensorArray,
    k: f64,
}

impl MusicModel {
    pub fn eig(&self) -> &EigenSystem {
        &self.eig
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn sensors(&self) -> &SensorArray {
        &self.sensors
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// `Σ_{j>r} |(φ_z, w_j)|²`.
    pub fn noise_projection_sq(&self, phi: &[Complex64]) -> f64 {
        (self.rank..self.eig.dim())
            .map(|j| {
                let w = self.eig.vector(j);
                inner(phi, &w).norm_sqr()
            })
            .sum()
    }
}

pub fn build_music(n: &MultistaticMatrix, rank_override: Option<usize>) -> Result<MusicModel> {
    build_music_with_tol(n, rank_override, DEFAULT_RANK_TOL)
}

pub fn build_music_with_tol(n: &MultistaticMatrix, rank_override: Option<usize>, rank_tol: f64) -> Result<MusicModel> {
    if !n.data.is_square() {
        return Err(Error::domain("multi-static matrix must be square"));
    }
    let nn = &n.data * &n.data.adjoint();
    let eig = hermitian_eig(&nn)?;
    let rank = match rank_override {
        Some(r) if r > eig.dim() => return Err(Error::domain(format!("rank {r} exceeds matrix size {}", eig.dim()))),
        Some(r) => r,
        None => numerical_rank(&eig, rank_tol),
    };
    Ok(MusicModel {
        eig,
        rank,
        sensors: n.sensors.clone(),
        k: n.k,
    })
}

/// `(Φ(x_1, z), ..., Φ(x_N, z))ᵀ`.
pub fn steering_vector(z: Point, sensors: &SensorArray, k: f64) -> Result<Vec<Complex64>> {
    sensors
        .points()
        .iter()
        .map(|&x| fundamental_solution(k, x, z))
        .collect()
}

pub fn music_indicator(model: &MusicModel, z: Point) -> Result<f64> {
    if !model.sensors.encloses(z) {
        return Err(Error::domain(format!(
            "sampling point ({}, {}) is outside the sensor circle",
            z.x, z.y
        )));
    }
    let phi = steering_vector(z, &model.sensors, model.k)?;
    let s = model.noise_projection_sq(&phi);
    Ok(if s > 1.0 / INDICATOR_CAP {
        1.0 / s
    } else {
        INDICATOR_CAP
    })
}

/// Indicator on every grid point strictly inside the sensor circle.
pub fn music_field(model: &MusicModel, grid: &SamplingGrid) -> Result<IndicatorField> {
    music_field_with(model, grid, Exec::default())
}

pub fn music_field_with(model: &MusicModel, grid: &SamplingGrid, exec: Exec) -> Result<IndicatorField> {
    IndicatorField::evaluate(grid, exec, |z| model.sensors.encloses(z), |z| music_indicator(model, z))
}
