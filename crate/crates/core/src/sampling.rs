//! Factorization method (Picard indicator `W`) and the modified linear sampling
//! method (filtered solutions of `N♯ g = φ_z`).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::disk::rhs_point_source;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::field::IndicatorField;
use crate::geometry::{SamplingGrid, SensorArray};
use crate::linalg::{
    hermitian_eig, inner, machine_rank_tol, norm, nsharp, numerical_rank, ComplexMatrix, EigenSystem, Regime,
};
use crate::music::INDICATOR_CAP;

/// Eigenvalues at or below `PICARD_CLIP · λ_1` are dropped from all spectral sums.
pub const PICARD_CLIP: f64 = 1e-12;
/// Negative eigenvalues of `N♯` larger than this (relative) are rejected.
pub const NEGATIVE_TOL: f64 = 1e-8;

/// Regularization filter `f_ε(t)` applied to `t = λ²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FilterSpec {
    Tikhonov { eps: f64 },
    SpectralCutoff { eps: f64 },
    Landweber { eps: f64, a: f64 },
}

/// Filter family without its parameter, for ε sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    Tikhonov,
    SpectralCutoff,
}

impl FilterKind {
    pub fn with_eps(self, eps: f64) -> FilterSpec {
        match self {
            FilterKind::Tikhonov => FilterSpec::Tikhonov { eps },
            FilterKind::SpectralCutoff => FilterSpec::SpectralCutoff { eps },
        }
    }
}

impl FilterSpec {
    pub fn eps(&self) -> f64 {
        match *self {
            FilterSpec::Tikhonov { eps } | FilterSpec::SpectralCutoff { eps } | FilterSpec::Landweber { eps, .. } => {
                eps
            }
        }
    }

    /// Bound `C_reg` on `t f_ε(t)`.
    pub fn c_reg(&self) -> f64 {
        1.0
    }

    pub fn validate(&self, lambda1: f64) -> Result<()> {
        let eps = self.eps();
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::domain(format!("filter parameter must be positive, got {eps}")));
        }
        if let FilterSpec::Landweber { a, .. } = *self {
            if !(a > 0.0) || !(a < lambda1 * lambda1) {
                return Err(Error::domain(format!(
                    "Landweber step {a} must lie in (0, λ₁² = {})",
                    lambda1 * lambda1
                )));
            }
        }
        Ok(())
    }

    /// `t f_ε(t)`, computed so that it never exceeds 1 in floating point.
    pub fn factor(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::domain(format!("filter argument must be positive, got {t}")));
        }
        Ok(match *self {
            FilterSpec::Tikhonov { eps } => t / (t + eps),
            FilterSpec::SpectralCutoff { eps } => {
                if t > eps {
                    1.0
                } else {
                    0.0
                }
            }
            FilterSpec::Landweber { eps, a } => 1.0 - (1.0 - a * t).powf(1.0 / eps),
        })
    }
}

/// `f_ε(t)`.
pub fn filter_value(f: &FilterSpec, t: f64) -> Result<f64> {
    let v = f.factor(t)?;
    Ok(match *f {
        FilterSpec::Tikhonov { eps } => 1.0 / (t + eps),
        FilterSpec::SpectralCutoff { .. } => {
            if v > 0.0 {
                1.0 / t
            } else {
                0.0
            }
        }
        FilterSpec::Landweber { .. } => v / t,
    })
}

/// Spectral data of `N♯` together with the quadrature weight of the `L²(C)`
/// pairing that the discrete sums approximate.
#[derive(Clone, Debug)]
pub struct PicardData {
    matrix: ComplexMatrix,
    eig: EigenSystem,
    weight: f64,
    retained: usize,
}

/// Weight `2π/Q` of a `Q`-point Riemann sum over the angle.
pub fn angular_weight(q: usize) -> f64 {
    2.0 * PI / q as f64
}

impl PicardData {
    pub fn new(nsharp_matrix: ComplexMatrix, weight: f64) -> Result<Self> {
        if !(weight > 0.0) {
            return Err(Error::domain("quadrature weight must be positive"));
        }
        let eig = hermitian_eig(&nsharp_matrix)?;
        let lmax = eig.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(lmax > 0.0) {
            return Err(Error::DegenerateSpectrum(format!(
                "largest eigenvalue of N# is {lmax:e}"
            )));
        }
        if let Some(&bad) = eig.values().iter().find(|&&l| l < -NEGATIVE_TOL * lmax) {
            return Err(Error::domain(format!(
                "N# is indefinite: eigenvalue {bad:e} against maximum {lmax:e}"
            )));
        }
        // values are sorted by |λ| and the negatives are tiny, so the retained ones come first
        let retained = eig.values().iter().take_while(|&&l| l > PICARD_CLIP * lmax).count();
        Ok(PicardData {
            matrix: nsharp_matrix,
            eig,
            weight,
            retained,
        })
    }

    /// `N♯` of `n` for `regime`, weighted by `2π/Q`.
    pub fn from_operator(n: &ComplexMatrix, regime: Regime) -> Result<Self> {
        PicardData::new(nsharp(n, regime)?, angular_weight(n.rows()))
    }

    pub fn eig(&self) -> &EigenSystem {
        &self.eig
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn retained(&self) -> usize {
        self.retained
    }

    pub fn lambda1(&self) -> f64 {
        self.eig.values()[0]
    }

    fn check_len(&self, v: &[Complex64]) -> Result<()> {
        if v.len() != self.eig.dim() {
            return Err(Error::domain(format!(
                "vector of length {} for operator of size {}",
                v.len(),
                self.eig.dim()
            )));
        }
        Ok(())
    }

    /// Picard terms `w |(φ, ψ_j)|² / λ_j` over the retained spectrum.
    pub fn picard_terms(&self, phi: &[Complex64]) -> Result<Vec<f64>> {
        self.check_len(phi)?;
        Ok((0..self.retained)
            .map(|j| self.weight * inner(phi, &self.eig.vector(j)).norm_sqr() / self.eig.values()[j])
            .collect())
    }

    /// Spectral cutoff that keeps exactly the leading `rank` eigenvalues.
    pub fn cutoff_at_rank(&self, rank: usize) -> FilterSpec {
        let v = self.eig.values();
        let eps = if rank == 0 {
            v[0] * v[0]
        } else if rank < v.len() && v[rank] > 0.0 {
            v[rank] * v[rank]
        } else {
            0.5 * v[rank.min(v.len()) - 1].powi(2)
        };
        FilterSpec::SpectralCutoff { eps }
    }

    /// Cutoff at the numerical rank of `N♯` (`dim · ε_machine` relative tolerance).
    pub fn cutoff_at_numerical_rank(&self) -> FilterSpec {
        self.cutoff_at_rank(numerical_rank(&self.eig, machine_rank_tol(self.eig.dim())))
    }
}

/// `W(z) = [Σ_j w |(φ_z, ψ_j)|² / λ_j]^{-1}` over the retained spectrum.
pub fn picard_indicator(data: &PicardData, phi_z: &[Complex64]) -> Result<f64> {
    let s: f64 = data.picard_terms(phi_z)?.iter().sum();
    Ok(if s > 1.0 / INDICATOR_CAP {
        1.0 / s
    } else {
        INDICATOR_CAP
    })
}

/// `g = Σ_j λ_j f_ε(λ_j²) (φ_z, ψ_j) ψ_j` over the retained spectrum.
pub fn mlsm_solve(data: &PicardData, phi_z: &[Complex64], f: &FilterSpec) -> Result<Vec<Complex64>> {
    data.check_len(phi_z)?;
    f.validate(data.lambda1())?;
    let v = data.eig.values();
    let mut coefs = vec![Complex64::new(0.0, 0.0); data.eig.dim()];
    for j in 0..data.retained {
        let l = v[j];
        coefs[j] = inner(phi_z, &data.eig.vector(j)) * (l * filter_value(f, l * l)?);
    }
    Ok(data.eig.synthesize(&coefs))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MlsmIndicators {
    /// `|(N♯g, g)_w|^{-1}`.
    pub p: f64,
    /// `‖g‖_w^{-1}`.
    pub i: f64,
    /// `(N♯g, g)_w`.
    pub quadratic: f64,
}

fn capped_inverse(x: f64) -> f64 {
    if x > 1.0 / INDICATOR_CAP {
        (1.0 / x).min(INDICATOR_CAP)
    } else {
        INDICATOR_CAP
    }
}

pub fn mlsm_indicators(data: &PicardData, g: &[Complex64]) -> Result<MlsmIndicators> {
    data.check_len(g)?;
    if g.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::domain("non-finite density"));
    }
    let q = data.weight * inner(&data.matrix.matvec(g), g).re;
    let gn = data.weight.sqrt() * norm(g);
    Ok(MlsmIndicators {
        p: capped_inverse(q.abs()),
        i: capped_inverse(gn),
        quadratic: q,
    })
}

/// `‖N♯^{1/2} g_z^ε‖²` in closed spectral form `Σ_j (λ_j² f_ε(λ_j²))² · w|(φ,ψ_j)|²/λ_j`.
pub fn filtered_picard_value(data: &PicardData, terms: &[f64], f: &FilterSpec) -> Result<f64> {
    let v = data.eig.values();
    let mut s = 0.0;
    for (j, p) in terms.iter().enumerate() {
        let r = f.factor(v[j] * v[j])?;
        s += r * r * p;
    }
    Ok(s)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceRow {
    pub eps: f64,
    pub value: f64,
    /// Modes whose filter factor is exactly one.
    pub passed_modes: usize,
    /// `Σ_{j ≤ M} w|(φ,ψ_j)|²/λ_j` with `M = m_terms`.
    pub partial_picard: f64,
    /// The same partial sum with each term damped by `(λ_j² f_ε(λ_j²))²`.
    pub damped_partial: f64,
    pub full_picard: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub m_terms: usize,
    pub rows: Vec<EquivalenceRow>,
    pub violations: Vec<String>,
}

pub const EQUIVALENCE_TOL: f64 = 1e-9;

impl EquivalenceReport {
    /// Relative change of the value between the last two ε.
    pub fn last_step_change(&self) -> f64 {
        let n = self.rows.len();
        if n < 2 {
            return 0.0;
        }
        let (a, b) = (self.rows[n - 2].value, self.rows[n - 1].value);
        (b - a).abs() / a.abs().max(f64::MIN_POSITIVE)
    }

    /// Ratio of the last value to the first.
    pub fn growth(&self) -> f64 {
        let first = self.rows.first().map_or(1.0, |r| r.value);
        self.rows.last().map_or(1.0, |r| r.value) / first
    }
}

/// Sweeps ε and records the bounds `partial Picard ≤ ‖N♯^{1/2}g_z^ε‖² ≤ full Picard`.
///
/// The upper bound is checked at every ε. The undamped lower bound is a limit
/// statement; at finite ε it is checked only when the first `m_terms` modes
/// all pass the filter unchanged (spectral cutoff), otherwise the damped form is.
pub fn fm_mlsm_equivalence_check(
    data: &PicardData,
    phi_z: &[Complex64],
    m_terms: usize,
    eps_sequence: &[f64],
    kind: FilterKind,
) -> Result<EquivalenceReport> {
    if eps_sequence.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::domain("ε sequence must be strictly decreasing"));
    }
    let terms = data.picard_terms(phi_z)?;
    let m = m_terms.min(terms.len());
    let full: f64 = terms.iter().sum();
    let partial: f64 = terms[..m].iter().sum();
    let v = data.eig.values();
    let mut rows = Vec::with_capacity(eps_sequence.len());
    let mut violations = Vec::new();
    for &eps in eps_sequence {
        let f = kind.with_eps(eps);
        f.validate(data.lambda1())?;
        let value = filtered_picard_value(data, &terms, &f)?;
        let mut damped = 0.0;
        let mut passed = 0;
        for (j, p) in terms.iter().enumerate() {
            let r = f.factor(v[j] * v[j])?;
            if r == 1.0 && passed == j {
                passed += 1;
            }
            if j < m {
                damped += r * r * p;
            }
        }
        if value > full + EQUIVALENCE_TOL {
            violations.push(format!("eps {eps:e}: value {value:e} exceeds full Picard sum {full:e}"));
        }
        let lower = if passed >= m { partial } else { damped };
        if lower > value + EQUIVALENCE_TOL {
            violations.push(format!("eps {eps:e}: lower bound {lower:e} exceeds value {value:e}"));
        }
        rows.push(EquivalenceRow {
            eps,
            value,
            passed_modes: passed,
            partial_picard: partial,
            damped_partial: damped,
            full_picard: full,
        });
    }
    Ok(EquivalenceReport {
        m_terms: m,
        rows,
        violations,
    })
}

/// `1e-1, 1e-2, ..., 1e-8`.
pub fn default_eps_sequence() -> Vec<f64> {
    (1..=8).map(|p| 10f64.powi(-p)).collect()
}

pub fn fm_field(data: &PicardData, sensors: &SensorArray, k: f64, grid: &SamplingGrid) -> Result<IndicatorField> {
    fm_field_with(data, sensors, k, grid, Exec::default())
}

pub fn fm_field_with(
    data: &PicardData,
    sensors: &SensorArray,
    k: f64,
    grid: &SamplingGrid,
    exec: Exec,
) -> Result<IndicatorField> {
    IndicatorField::evaluate(
        grid,
        exec,
        |z| sensors.encloses(z),
        |z| picard_indicator(data, &rhs_point_source(z, k, sensors)?),
    )
}

/// Sweep of `P = |(N♯g_z, g_z)|^{-1}`.
pub fn mlsm_field(
    data: &PicardData,
    sensors: &SensorArray,
    k: f64,
    grid: &SamplingGrid,
    filter: &FilterSpec,
) -> Result<IndicatorField> {
    mlsm_field_with(data, sensors, k, grid, filter, Exec::default())
}

pub fn mlsm_field_with(
    data: &PicardData,
    sensors: &SensorArray,
    k: f64,
    grid: &SamplingGrid,
    filter: &FilterSpec,
    exec: Exec,
) -> Result<IndicatorField> {
    filter.validate(data.lambda1())?;
    IndicatorField::evaluate(
        grid,
        exec,
        |z| sensors.encloses(z),
        |z| {
            let g = mlsm_solve(data, &rhs_point_source(z, k, sensors)?, filter)?;
            Ok(mlsm_indicators(data, &g)?.p)
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disk::{assemble_nearfield_matrix, disk_sensors, DiskMedium};
    use crate::geometry::Point;
    use crate::linalg::sqrt_op_apply;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn diag4() -> PicardData {
        PicardData::new(ComplexMatrix::diagonal(&[4.0, 3.0, 2.0, 1.0]), 1.0).unwrap()
    }

    fn fig6() -> (PicardData, SensorArray) {
        let md = DiskMedium::new(c(0.5, 0.0), c(5.0, 0.0), 1.0).unwrap();
        let n = assemble_nearfield_matrix(&md, 20, 64).unwrap();
        (
            PicardData::from_operator(&n, Regime::Nonabsorbing).unwrap(),
            disk_sensors(64).unwrap(),
        )
    }

    #[test]
    fn filter_examples() {
        let eps = 0.3;
        let t = FilterSpec::Tikhonov { eps };
        assert!((filter_value(&t, eps).unwrap() - 1.0 / (2.0 * eps)).abs() < 1e-15);
        let cut = FilterSpec::SpectralCutoff { eps };
        assert_eq!(filter_value(&cut, eps).unwrap(), 0.0);
        assert_eq!(filter_value(&cut, 0.5).unwrap(), 2.0);
        let lw = FilterSpec::Landweber { eps: 1.0, a: 0.5 };
        assert!((filter_value(&lw, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(filter_value(&t, 0.0).is_err());
        assert!(filter_value(&t, -1.0).is_err());
    }

    #[test]
    fn filter_axiom_on_grid() {
        let l1 = 2.0f64;
        for f in [
            FilterSpec::Tikhonov { eps: 1e-3 },
            FilterSpec::SpectralCutoff { eps: 1e-3 },
            FilterSpec::Landweber {
                eps: 0.01,
                a: 0.9 * l1 * l1,
            },
            FilterSpec::Landweber { eps: 0.5, a: 0.1 },
        ] {
            f.validate(l1).unwrap();
            for i in 1..=2000 {
                let t = l1 * l1 * i as f64 / 2000.0;
                assert!(t * filter_value(&f, t).unwrap() <= f.c_reg() + 1e-15);
                assert!(f.factor(t).unwrap() <= 1.0);
            }
        }
        assert!(FilterSpec::Landweber { eps: 0.1, a: 4.0 }.validate(l1).is_err());
        assert!(FilterSpec::Tikhonov { eps: 0.0 }.validate(l1).is_err());
    }

    #[test]
    fn picard_single_mode() {
        let d = diag4();
        let psi1 = d.eig().vector(0);
        assert!((picard_indicator(&d, &psi1).unwrap() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn picard_orthogonal_is_capped() {
        let n = ComplexMatrix::diagonal(&[4.0, 3.0, 0.0, 0.0]);
        let d = PicardData::new(n, 1.0).unwrap();
        assert_eq!(d.retained(), 2);
        let phi = vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)];
        assert_eq!(picard_indicator(&d, &phi).unwrap(), INDICATOR_CAP);
    }

    #[test]
    fn degenerate_and_indefinite_spectra() {
        assert!(matches!(
            PicardData::new(ComplexMatrix::zeros(3, 3), 1.0),
            Err(Error::DegenerateSpectrum(_))
        ));
        assert!(PicardData::new(ComplexMatrix::diagonal(&[1.0, -0.5]), 1.0).is_err());
    }

    #[test]
    fn mlsm_exact_inverse_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = ComplexMatrix::from_fn(6, 6, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let n = &(&a * &a.adjoint()) + &ComplexMatrix::identity(6);
        let d = PicardData::new(n.clone(), 1.0).unwrap();
        let phi: Vec<Complex64> = (0..6).map(|i| c(i as f64, 1.0)).collect();
        let g = mlsm_solve(&d, &phi, &FilterSpec::Tikhonov { eps: 1e-14 }).unwrap();
        let r: Vec<Complex64> = n.matvec(&g).iter().zip(&phi).map(|(a, b)| a - b).collect();
        assert!(norm(&r) <= 1e-6 * norm(&phi));
    }

    #[test]
    fn mlsm_cutoff_single_mode() {
        let d = diag4();
        let psi1 = d.eig().vector(0);
        let g = mlsm_solve(&d, &psi1, &d.cutoff_at_rank(1)).unwrap();
        for (a, b) in g.iter().zip(&psi1) {
            assert!((a - b / 4.0).norm() < 1e-15);
        }
    }

    #[test]
    fn indicators_of_zero_density() {
        let d = diag4();
        let m = mlsm_indicators(&d, &[c(0.0, 0.0); 4]).unwrap();
        assert_eq!((m.p, m.i), (INDICATOR_CAP, INDICATOR_CAP));
    }

    #[test]
    fn half_power_identity() {
        let (d, sensors) = fig6();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let g: Vec<Complex64> = (0..64)
                .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let q = mlsm_indicators(&d, &g).unwrap().quadratic;
            let h = sqrt_op_apply(d.eig(), &g).unwrap();
            let want = d.weight() * norm(&h).powi(2);
            assert!((q - want).abs() <= 1e-9 * want);
        }
        let phi = rhs_point_source(Point::new(0.2, 0.1), 1.0, &sensors).unwrap();
        let f = FilterSpec::Tikhonov { eps: 1e-6 };
        let g = mlsm_solve(&d, &phi, &f).unwrap();
        let q = mlsm_indicators(&d, &g).unwrap().quadratic;
        let spectral = filtered_picard_value(&d, &d.picard_terms(&phi).unwrap(), &f).unwrap();
        assert!((q - spectral).abs() <= 1e-9 * spectral);
    }

    #[test]
    fn diagonal_tikhonov_limit() {
        let d = diag4();
        let phi = vec![c(0.5, 0.0); 4];
        let eps: Vec<f64> = (1..=12).map(|p| 10f64.powi(-p)).collect();
        let rep = fm_mlsm_equivalence_check(&d, &phi, 4, &eps, FilterKind::Tikhonov).unwrap();
        let want = 0.25 * (1.0 / 4.0 + 1.0 / 3.0 + 1.0 / 2.0 + 1.0);
        assert!((rep.rows.last().unwrap().value - want).abs() < 1e-10);
        assert!(rep.violations.is_empty(), "{:?}", rep.violations);
    }

    #[test]
    fn undamped_lower_bound_fails_at_finite_eps() {
        // one mode: value = p (λ²/(λ²+ε))² < p for every ε > 0
        let d = PicardData::new(ComplexMatrix::diagonal(&[1.0]), 1.0).unwrap();
        let rep = fm_mlsm_equivalence_check(&d, &[c(1.0, 0.0)], 1, &[0.5], FilterKind::Tikhonov).unwrap();
        assert!(rep.rows[0].partial_picard > rep.rows[0].value);
        assert!(rep.violations.is_empty());
    }

    #[test]
    fn rejects_increasing_eps() {
        let d = diag4();
        assert!(fm_mlsm_equivalence_check(&d, &[c(1.0, 0.0); 4], 2, &[1e-3, 1e-2], FilterKind::Tikhonov).is_err());
    }

    #[test]
    fn phase_invariance() {
        let (d, sensors) = fig6();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let phases: Vec<f64> = (0..64).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
        let rotated = PicardData {
            eig: d.eig().with_phases(&phases),
            ..d.clone()
        };
        for z in [Point::new(0.3, 0.2), Point::new(1.4, -0.3)] {
            let phi = rhs_point_source(z, 1.0, &sensors).unwrap();
            let a = picard_indicator(&d, &phi).unwrap();
            let b = picard_indicator(&rotated, &phi).unwrap();
            assert!((a - b).abs() <= 1e-12 * a);
        }
    }

    #[test]
    fn scaling_covariance() {
        let (d, sensors) = fig6();
        let scaled = PicardData::new(d.matrix().scale(c(3.0, 0.0)), d.weight()).unwrap();
        let pts = [
            Point::new(0.1, 0.1),
            Point::new(0.7, 0.0),
            Point::new(1.5, 0.2),
            Point::new(-1.0, 1.2),
        ];
        let w: Vec<f64> = pts
            .iter()
            .map(|&z| picard_indicator(&d, &rhs_point_source(z, 1.0, &sensors).unwrap()).unwrap())
            .collect();
        let ws: Vec<f64> = pts
            .iter()
            .map(|&z| picard_indicator(&scaled, &rhs_point_source(z, 1.0, &sensors).unwrap()).unwrap())
            .collect();
        // interior values scale exactly; exterior ones are dominated by eigenvalues
        // near the clip, where roundoff in the eigensolver is visible
        for (a, b) in w.iter().zip(&ws).take(2) {
            assert!((b - 3.0 * a).abs() <= 1e-9 * b);
        }
        for (a, b) in w.iter().zip(&ws).skip(2) {
            assert!((b - 3.0 * a).abs() <= 1e-2 * b);
        }
        let order = |v: &[f64]| {
            let mut idx: Vec<usize> = (0..v.len()).collect();
            idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
            idx
        };
        assert_eq!(order(&w), order(&ws));
    }

    #[test]
    fn inside_outside_contrast() {
        let (d, sensors) = fig6();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut sample = |r0: f64, r1: f64| -> Vec<Point> {
            (0..40)
                .map(|_| Point::polar(rng.gen_range(r0..r1), rng.gen_range(0.0..2.0 * PI)))
                .collect()
        };
        let (inner_pts, outer_pts) = (sample(0.0, 0.8), sample(1.2, 1.8));
        let mean = |pts: &[Point], f: &dyn Fn(Point) -> f64| pts.iter().map(|&z| f(z)).sum::<f64>() / pts.len() as f64;
        let w = |z: Point| picard_indicator(&d, &rhs_point_source(z, 1.0, &sensors).unwrap()).unwrap();
        assert!(mean(&inner_pts, &w) >= 10.0 * mean(&outer_pts, &w));
        let cut = d.cutoff_at_numerical_rank();
        let p = |z: Point| {
            let g = mlsm_solve(&d, &rhs_point_source(z, 1.0, &sensors).unwrap(), &cut).unwrap();
            mlsm_indicators(&d, &g).unwrap().p
        };
        assert!(mean(&inner_pts, &p) >= 10.0 * mean(&outer_pts, &p));
    }

    #[test]
    fn absorbing_conjugate_solution_is_finite() {
        let md = DiskMedium::new(c(3.0, -1.0), c(0.25, 2.0), 1.0).unwrap();
        let n = assemble_nearfield_matrix(&md, 20, 64).unwrap();
        let d = PicardData::from_operator(&n, Regime::AbsorbingConjugate).unwrap();
        let phi = rhs_point_source(Point::new(0.3, -0.2), 1.0, &disk_sensors(64).unwrap()).unwrap();
        let g = mlsm_solve(&d, &phi, &FilterSpec::Tikhonov { eps: 1e-8 }).unwrap();
        assert!(g.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        assert!(PicardData::from_operator(&n, Regime::Absorbing).is_err());
    }
}
