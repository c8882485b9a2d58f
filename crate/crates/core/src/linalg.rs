//! Dense complex matrices, a cyclic Jacobi eigensolver for Hermitian
//! matrices, and the spectral operator calculus built on it.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexVector = Vec<Complex64>;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Inner product `(a, b) = Σ a_i conj(b_i)`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn<F: FnMut(usize, usize) -> Complex64>(rows: usize, cols: usize, mut f: F) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::domain(format!(
                "expected {} entries for {rows}x{cols}, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::domain("matrix entries must be finite"));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    /// `Σ_j c_j v_j v_j*` over the given columns.
    pub fn from_outer_products(vectors: &[&[Complex64]], coefs: &[f64]) -> Self {
        let n = vectors.first().map_or(0, |v| v.len());
        let mut m = Self::zeros(n, n);
        for (v, &c) in vectors.iter().zip(coefs) {
            for i in 0..n {
                let vi = v[i] * c;
                for j in 0..n {
                    m.data[i * n + j] += vi * v[j].conj();
                }
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> ComplexVector {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn matvec(&self, v: &[Complex64]) -> ComplexVector {
        assert_eq!(v.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// `‖A - A*‖_F / ‖A‖_F` (0 for the zero matrix).
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut d = 0.0;
        for i in 0..n {
            for j in 0..n {
                d += (self[(i, j)] - self[(j, i)].conj()).norm_sqr();
            }
        }
        let f = self.frobenius_norm();
        if f == 0.0 {
            0.0
        } else {
            d.sqrt() / f
        }
    }

    /// Spectral norm by power iteration on `A*A`.
    pub fn spectral_norm_power(&self, max_iter: usize, tol: f64) -> f64 {
        let n = self.cols;
        if n == 0 {
            return 0.0;
        }
        let ah = self.adjoint();
        // deterministic, non-degenerate start vector
        let mut v: ComplexVector = (0..n)
            .map(|i| Complex64::new(1.0 + 0.1 * i as f64, 0.01 * (i % 7) as f64))
            .collect();
        let nv = norm(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        let mut sigma2 = 0.0;
        for _ in 0..max_iter {
            let w = ah.matvec(&self.matvec(&v));
            let nw = norm(&w);
            if nw == 0.0 {
                return 0.0;
            }
            let converged = (nw - sigma2).abs() <= tol * nw;
            sigma2 = nw;
            v = w.into_iter().map(|x| x / nw).collect();
            if converged {
                break;
            }
        }
        sigma2.sqrt()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, o: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, o: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, o: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(o)
    }
}

/// Eigenvalues (descending by magnitude) and orthonormal eigenvectors stored
/// as the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    values: Vec<f64>,
    vectors: ComplexMatrix,
}

impl EigenSystem {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &ComplexMatrix {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, j: usize) -> ComplexVector {
        self.vectors.column(j)
    }

    /// Coefficients `(g, ψ_j)` for every eigenvector.
    pub fn coefficients(&self, g: &[Complex64]) -> ComplexVector {
        let n = self.dim();
        let mut c = vec![ZERO; n];
        for (i, gi) in g.iter().enumerate() {
            let row = self.vectors.row(i);
            for (cj, v) in c.iter_mut().zip(row) {
                *cj += gi * v.conj();
            }
        }
        c
    }

    /// `Σ_j c_j ψ_j`.
    pub fn synthesize(&self, coefs: &[Complex64]) -> ComplexVector {
        (0..self.dim())
            .map(|i| self.vectors.row(i).iter().zip(coefs).map(|(v, c)| v * c).sum())
            .collect()
    }

    /// `Σ_j f(λ_j) ψ_j ψ_j*`.
    pub fn apply_function<F: Fn(f64) -> f64>(&self, f: F) -> ComplexMatrix {
        let n = self.dim();
        let weights: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        ComplexMatrix::from_fn(n, n, |i, j| {
            let ri = self.vectors.row(i);
            let rj = self.vectors.row(j);
            ri.iter()
                .zip(rj)
                .zip(&weights)
                .map(|((a, b), &w)| a * b.conj() * w)
                .sum()
        })
    }

    /// `Ψ Λ Ψ*`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply_function(|l| l)
    }

    /// Multiplies every eigenvector by a unit phase; the spectral data of the
    /// operator are unchanged.
    pub fn with_phases(&self, phases: &[f64]) -> EigenSystem {
        let mut vectors = self.vectors.clone();
        let n = self.dim();
        for (j, &p) in phases.iter().enumerate().take(n) {
            let u = Complex64::from_polar(1.0, p);
            for i in 0..n {
                vectors[(i, j)] *= u;
            }
        }
        EigenSystem {
            values: self.values.clone(),
            vectors,
        }
    }
}

pub const HERMITIAN_TOL: f64 = 1e-8;
pub const JACOBI_MAX_SWEEPS: usize = 100;
pub const JACOBI_TOL: f64 = 1e-13;

/// Full eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations.
///
/// Ordering is by descending `|λ|`, ties by descending `λ`. Each eigenvector's
/// first component above `1e-10` in modulus is made real and positive.
pub fn hermitian_eig(a: &ComplexMatrix) -> Result<EigenSystem> {
    if !a.is_square() {
        return Err(Error::domain(format!(
            "eigensolver needs a square matrix, got {}x{}",
            a.rows, a.cols
        )));
    }
    let defect = a.hermitian_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian {
            relative_defect: defect,
        });
    }
    let n = a.rows;
    // work on the exactly Hermitian part
    let mut m = ComplexMatrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)].conj()));
    for i in 0..n {
        m[(i, i)].im = 0.0;
    }
    let mut v = ComplexMatrix::identity(n);
    let scale = m.frobenius_norm();

    let off = |m: &ComplexMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    if scale > 0.0 {
        while off(&m) > JACOBI_TOL * scale {
            if sweeps == JACOBI_MAX_SWEEPS {
                return Err(Error::Convergence {
                    sweeps,
                    off_diagonal: off(&m) / scale,
                });
            }
            sweeps += 1;
            for p in 0..n {
                for q in p + 1..n {
                    rotate(&mut m, &mut v, p, q);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&i, &j| {
        diag[j]
            .abs()
            .total_cmp(&diag[i].abs())
            .then(diag[j].total_cmp(&diag[i]))
    });
    let values = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (new_j, &old_j) in order.iter().enumerate() {
        let phase = (0..n)
            .map(|i| v[(i, old_j)])
            .find(|z| z.norm() > 1e-10)
            .map(|z| z.conj() / z.norm())
            .unwrap_or(Complex64::new(1.0, 0.0));
        for i in 0..n {
            vectors[(i, new_j)] = v[(i, old_j)] * phase;
        }
    }
    Ok(EigenSystem { values, vectors })
}

/// Annihilates `m[p][q]` with the unitary rotation
/// `V = [[c, s e^{iφ}], [-s e^{-iφ}, c]]` where `m[p][q] = r e^{iφ}`.
fn rotate(m: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = m[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    if r < f64::MIN_POSITIVE {
        m[(p, q)] = ZERO;
        m[(q, p)] = ZERO;
        return;
    }
    let e = apq / r;
    let theta = (aqq - app) / (2.0 * r);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let n = m.rows;

    // columns: A V
    for k in 0..n {
        let akp = m[(k, p)];
        let akq = m[(k, q)];
        m[(k, p)] = akp * c - akq * e.conj() * s;
        m[(k, q)] = akp * e * s + akq * c;
    }
    // rows: V* (A V)
    for k in 0..n {
        let apk = m[(p, k)];
        let aqk = m[(q, k)];
        m[(p, k)] = apk * c - aqk * e * s;
        m[(q, k)] = apk * e.conj() * s + aqk * c;
    }
    m[(p, p)] = Complex64::new(app - t * r, 0.0);
    m[(q, q)] = Complex64::new(aqq + t * r, 0.0);
    m[(p, q)] = ZERO;
    m[(q, p)] = ZERO;

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * e.conj() * s;
        v[(k, q)] = vkp * e * s + vkq * c;
    }
}

fn require_square(n: &ComplexMatrix) -> Result<()> {
    if n.is_square() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "operator must be square, got {}x{}",
            n.rows, n.cols
        )))
    }
}

/// `Re(N) = (N + N*) / 2`.
pub fn real_part_op(n: &ComplexMatrix) -> Result<ComplexMatrix> {
    require_square(n)?;
    let d = n.rows;
    Ok(ComplexMatrix::from_fn(d, d, |i, j| {
        0.5 * (n[(i, j)] + n[(j, i)].conj())
    }))
}

/// `Im(N) = (N - N*) / (2i)`.
pub fn imag_part_op(n: &ComplexMatrix) -> Result<ComplexMatrix> {
    require_square(n)?;
    let d = n.rows;
    let half_over_i = Complex64::new(0.0, -0.5);
    Ok(ComplexMatrix::from_fn(d, d, |i, j| {
        (n[(i, j)] - n[(j, i)].conj()) * half_over_i
    }))
}

/// `|B| = Σ |λ_j| ψ_j ψ_j*` for Hermitian `B`.
pub fn abs_op(b: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(hermitian_eig(b)?.apply_function(f64::abs))
}

/// Which positive combination of the near-field operator to form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `|Re N| + |Im N|`.
    Nonabsorbing,
    /// `-Im N`.
    Absorbing,
    /// `+Im N`: absorbing media probed by the conjugated point source, where the
    /// imaginary part of the data carries the opposite sign.
    AbsorbingConjugate,
}

pub const POSITIVITY_WARN_TOL: f64 = 1e-8;

/// `N♯` for the chosen regime. A negative spectrum beyond
/// `-1e-8·λ_max` is logged as a warning.
pub fn nsharp(n: &ComplexMatrix, regime: Regime) -> Result<ComplexMatrix> {
    require_square(n)?;
    let out = match regime {
        Regime::Nonabsorbing => &abs_op(&real_part_op(n)?)? + &abs_op(&imag_part_op(n)?)?,
        Regime::Absorbing => imag_part_op(n)?.scale(Complex64::new(-1.0, 0.0)),
        Regime::AbsorbingConjugate => imag_part_op(n)?,
    };
    if out.frobenius_norm() > 0.0 {
        let eig = hermitian_eig(&out)?;
        let lmax = eig.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lmin = eig.values.iter().cloned().fold(f64::INFINITY, f64::min);
        if lmin < -POSITIVITY_WARN_TOL * lmax.abs() {
            log::warn!("N# is not positive for regime {regime:?}: lambda_min = {lmin:e}, lambda_max = {lmax:e}");
        }
    }
    Ok(out)
}

pub const SQRT_NEGATIVE_TOL: f64 = 1e-8;

/// `B^{1/2} g = Σ λ_j^{1/2} (g, ψ_j) ψ_j`, with slightly negative eigenvalues
/// clipped to zero.
pub fn sqrt_op_apply(eig: &EigenSystem, g: &[Complex64]) -> Result<ComplexVector> {
    let lmax = eig.values.iter().cloned().fold(0.0, f64::max);
    if let Some(&bad) = eig.values.iter().find(|&&l| l < -SQRT_NEGATIVE_TOL * lmax) {
        return Err(Error::domain(format!(
            "square root of an indefinite operator: eigenvalue {bad:e} vs max {lmax:e}"
        )));
    }
    let coefs: ComplexVector = eig
        .coefficients(g)
        .into_iter()
        .zip(&eig.values)
        .map(|(c, &l)| c * l.max(0.0).sqrt())
        .collect();
    Ok(eig.synthesize(&coefs))
}

/// Relative tolerance `max_dim · ε_machine`, the usual default for rank decisions.
pub fn machine_rank_tol(dim: usize) -> f64 {
    dim.max(1) as f64 * f64::EPSILON
}

/// Number of eigenvalues with `|λ_j| > rel_tol · |λ_1|`.
pub fn numerical_rank(eig: &EigenSystem, rel_tol: f64) -> usize {
    let Some(&l1) = eig.values.first() else {
        return 0;
    };
    if l1 == 0.0 {
        return 0;
    }
    let cut = rel_tol * l1.abs();
    eig.values.iter().filter(|l| l.abs() > cut).count()
}
