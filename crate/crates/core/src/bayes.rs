//! Hierarchical Bayesian estimate of a constant contrast `γ ≈ n(x₀) - 1`.
//!
//! Model: `u_i = k² Σ_p ω_p η_p Φ(x_i, z_p) Φ(z_p, y_i) + noise` over a rule on the
//! reconstructed support, `η_p ~ N(γ, h²)`, `γ ~ N(0, prior_sd²)`. Real and
//! imaginary residuals are independent `N(0, δ²)`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::born::{add_noise_with, noise_component_sd, MultistaticMatrix, NoiseKind};
use crate::error::{Error, Result};
use crate::geometry::{gauss_quadrature, Point, QuadratureRule, Shape};
use crate::specfun::fundamental_solution;

pub const DEFAULT_PRIOR_SD: f64 = 1e5;
pub const DEFAULT_SUPPORT_ORDER: usize = 3;
pub const MIN_ACCEPTANCE: f64 = 0.01;
pub const MAP_BINS: usize = 60;

/// One source/receiver reading.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reading {
    pub x: Point,
    pub y: Point,
    pub u: Complex64,
}

/// Readings on a common measurement circle with per-component noise sd `delta`.
#[derive(Clone, Debug, PartialEq)]
pub struct Readings {
    items: Vec<Reading>,
    delta: f64,
}

impl Readings {
    pub fn new(items: Vec<Reading>, delta: f64) -> Result<Self> {
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::domain(format!("noise sd must be >= 0, got {delta}")));
        }
        if let Some(first) = items.first() {
            let r = first.x.norm();
            let off = items
                .iter()
                .flat_map(|it| [it.x, it.y])
                .find(|p| (p.norm() - r).abs() > 1e-12 * r.max(1.0));
            if let Some(p) = off {
                return Err(Error::domain(format!(
                    "reading point ({}, {}) is not on the circle of radius {r}",
                    p.x, p.y
                )));
            }
        }
        Ok(Readings { items, delta })
    }

    /// Every entry of a multi-static matrix.
    pub fn from_matrix(m: &MultistaticMatrix, delta: f64) -> Result<Self> {
        let n = m.sensors.len();
        let mut items = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                items.push(Reading {
                    x: m.sensors.point(i),
                    y: m.sensors.point(j),
                    u: m.data[(i, j)],
                });
            }
        }
        Readings::new(items, delta)
    }

    pub fn items(&self) -> &[Reading] {
        &self.items
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Noisy readings `u(1 + δE)` from clean data, with the likelihood sd set to the
/// RMS per-component size of the injected noise, `δ · rms|u| / ‖G‖₂`.
pub fn noisy_readings(clean: &MultistaticMatrix, delta: f64, seed: u64) -> Result<Readings> {
    let noisy = add_noise_with(clean, delta, seed, NoiseKind::Complex)?;
    let n = clean.sensors.len();
    let rms = (clean.data.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>() / (n * n) as f64).sqrt();
    let sd = if delta == 0.0 {
        0.0
    } else {
        delta * rms * noise_component_sd(n, seed, NoiseKind::Complex)
    };
    Readings::from_matrix(&noisy, sd)
}

/// Chain length and seed. `iterations` counts burn-in.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub seed: u64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            iterations: 20_000,
            burn_in: 5_000,
            thinning: 1,
            seed: 0,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations <= self.burn_in {
            return Err(Error::Config(format!(
                "iterations ({}) must exceed burn-in ({})",
                self.iterations, self.burn_in
            )));
        }
        if self.thinning == 0 {
            return Err(Error::Config("thinning must be >= 1".into()));
        }
        if (self.iterations - self.burn_in) / self.thinning < 2 {
            return Err(Error::Config("chain keeps fewer than two samples".into()));
        }
        Ok(())
    }

    pub fn kept(&self) -> usize {
        (self.iterations - self.burn_in) / self.thinning
    }
}

#[derive(Clone, Debug)]
pub struct BayesModel {
    support: Shape,
    rule: QuadratureRule,
    pub k: f64,
    pub h: f64,
    pub prior_sd: f64,
    /// Multiplier on the `2.38/√d` random-walk step in posterior-covariance units.
    pub proposal_scale: f64,
    pub chain: ChainConfig,
}

impl BayesModel {
    /// `h` defaults to the diameter of the support.
    pub fn new(support: Shape, rule_order: usize, k: f64, h: Option<f64>) -> Result<Self> {
        if !(k > 0.0) {
            return Err(Error::domain("wavenumber must be positive"));
        }
        let rule = gauss_quadrature(&support, rule_order)?;
        let h = h.unwrap_or_else(|| support.diameter());
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::domain(format!("spread h must be positive, got {h}")));
        }
        Ok(BayesModel {
            support,
            rule,
            k,
            h,
            prior_sd: DEFAULT_PRIOR_SD,
            proposal_scale: 1.0,
            chain: ChainConfig::default(),
        })
    }

    pub fn support(&self) -> &Shape {
        &self.support
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn nodes(&self) -> usize {
        self.rule.len()
    }

    fn validate(&self) -> Result<()> {
        if !(self.prior_sd > 0.0) {
            return Err(Error::Config(format!(
                "prior sd must be positive, got {}",
                self.prior_sd
            )));
        }
        if !(self.proposal_scale > 0.0) || !self.proposal_scale.is_finite() {
            return Err(Error::Config(format!(
                "proposal scale must be positive, got {}",
                self.proposal_scale
            )));
        }
        self.chain.validate()
    }

    /// `k² ω_p Φ(x, z_p) Φ(z_p, y)` for every node.
    fn design_row(&self, x: Point, y: Point) -> Result<Vec<Complex64>> {
        for p in [x, y] {
            if self.support.contains(p) {
                return Err(Error::domain(format!(
                    "point ({}, {}) lies inside the support",
                    p.x, p.y
                )));
            }
        }
        let k2 = self.k * self.k;
        self.rule
            .nodes()
            .iter()
            .zip(self.rule.weights())
            .map(|(&z, &w)| Ok(fundamental_solution(self.k, x, z)? * fundamental_solution(self.k, z, y)? * (w * k2)))
            .collect()
    }
}

pub fn predicted_mean(model: &BayesModel, eta: &[f64], x: Point, y: Point) -> Result<Complex64> {
    if eta.len() != model.nodes() {
        return Err(Error::domain(format!(
            "expected {} node values, got {}",
            model.nodes(),
            eta.len()
        )));
    }
    let row = model.design_row(x, y)?;
    Ok(row.iter().zip(eta).map(|(b, &e)| b * e).sum())
}

/// Unnormalized log posterior for fixed model and readings.
#[derive(Clone, Debug)]
pub struct Posterior {
    design: Vec<Vec<Complex64>>,
    data: Vec<Complex64>,
    sigma: f64,
    h: f64,
    prior_sd: f64,
}

impl Posterior {
    pub fn new(model: &BayesModel, readings: &Readings) -> Result<Self> {
        if !(readings.delta > 0.0) {
            return Err(Error::domain(format!(
                "noise sd must be positive, got {}",
                readings.delta
            )));
        }
        let design = readings
            .items
            .iter()
            .map(|r| model.design_row(r.x, r.y))
            .collect::<Result<Vec<_>>>()?;
        Ok(Posterior {
            design,
            data: readings.items.iter().map(|r| r.u).collect(),
            sigma: readings.delta,
            h: model.h,
            prior_sd: model.prior_sd,
        })
    }

    fn nodes(&self) -> usize {
        self.design.first().map_or(0, Vec::len)
    }

    pub fn log_density(&self, gamma: f64, eta: &[f64]) -> f64 {
        let mut misfit = 0.0;
        for (row, u) in self.design.iter().zip(&self.data) {
            let mu: Complex64 = row.iter().zip(eta).map(|(b, &e)| b * e).sum();
            misfit += (u - mu).norm_sqr();
        }
        let spread: f64 = eta.iter().map(|e| (e - gamma).powi(2)).sum();
        -misfit / (2.0 * self.sigma * self.sigma)
            - spread / (2.0 * self.h * self.h)
            - gamma * gamma / (2.0 * self.prior_sd * self.prior_sd)
    }

    /// Log density of the reduced model `η ≡ γ`.
    pub fn log_density_collapsed(&self, gamma: f64) -> f64 {
        let eta = vec![gamma; self.nodes()];
        self.log_density(gamma, &eta)
    }

    /// Exact Gaussian posterior over `(γ, η)`.
    pub fn closed_form(&self) -> Result<Gaussian> {
        let p = self.nodes();
        let s2 = self.sigma * self.sigma;
        let h2 = self.h * self.h;
        let mut prec = DMatrix::<f64>::zeros(p + 1, p + 1);
        let mut lin = DVector::<f64>::zeros(p + 1);
        prec[(0, 0)] = 1.0 / (self.prior_sd * self.prior_sd) + p as f64 / h2;
        for a in 0..p {
            prec[(0, a + 1)] = -1.0 / h2;
            prec[(a + 1, 0)] = -1.0 / h2;
            prec[(a + 1, a + 1)] += 1.0 / h2;
        }
        for (row, u) in self.design.iter().zip(&self.data) {
            for a in 0..p {
                lin[a + 1] += (row[a].conj() * u).re / s2;
                for b in 0..p {
                    prec[(a + 1, b + 1)] += (row[a].conj() * row[b]).re / s2;
                }
            }
        }
        Gaussian::from_precision(prec, lin)
    }

    /// Exact Gaussian posterior of `γ` under `η ≡ γ`.
    pub fn collapsed_closed_form(&self) -> (f64, f64) {
        let s2 = self.sigma * self.sigma;
        let (mut cc, mut cu) = (0.0, 0.0);
        for (row, u) in self.design.iter().zip(&self.data) {
            let c: Complex64 = row.iter().sum();
            cc += c.norm_sqr();
            cu += (c.conj() * u).re;
        }
        let prec = cc / s2 + 1.0 / (self.prior_sd * self.prior_sd);
        (cu / s2 / prec, prec.sqrt().recip())
    }
}

/// Multivariate normal in mean/covariance form.
#[derive(Clone, Debug)]
pub struct Gaussian {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl Gaussian {
    fn from_precision(prec: DMatrix<f64>, lin: DVector<f64>) -> Result<Self> {
        let chol = prec
            .cholesky()
            .ok_or_else(|| Error::DegenerateSpectrum("posterior precision is not positive definite".into()))?;
        Ok(Gaussian {
            mean: chol.solve(&lin),
            cov: chol.inverse(),
        })
    }

    pub fn sd(&self, i: usize) -> f64 {
        self.cov[(i, i)].sqrt()
    }
}

/// `log_posterior` without precomputation; the chain uses [`Posterior`] directly.
pub fn log_posterior(model: &BayesModel, readings: &Readings, gamma: f64, eta: &[f64]) -> Result<f64> {
    if eta.len() != model.nodes() {
        return Err(Error::domain(format!(
            "expected {} node values, got {}",
            model.nodes(),
            eta.len()
        )));
    }
    Ok(Posterior::new(model, readings)?.log_density(gamma, eta))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub samples: Vec<f64>,
    pub log_post: Vec<f64>,
    /// Chain iteration of each kept sample.
    pub iterations: Vec<usize>,
    pub mean: f64,
    pub sd: f64,
    pub map: f64,
    pub acceptance_rate: f64,
    /// Batch-means Monte Carlo standard error of the mean.
    pub mcse: f64,
}

impl PosteriorSummary {
    fn from_chain(samples: Vec<f64>, log_post: Vec<f64>, iterations: Vec<usize>, acceptance_rate: f64) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let sd = (samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let map = histogram_mode(&samples, MAP_BINS);
        let mcse = batch_means_se(&samples);
        PosteriorSummary {
            samples,
            log_post,
            iterations,
            mean,
            sd,
            map,
            acceptance_rate,
            mcse,
        }
    }

    /// Sample variance standard error by batch means on `(γ - mean)²`.
    pub fn variance_mcse(&self) -> f64 {
        let sq: Vec<f64> = self.samples.iter().map(|s| (s - self.mean).powi(2)).collect();
        batch_means_se(&sq)
    }

    pub fn write_chain_csv(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut body = String::from("iteration,gamma,log_post\n");
        for ((it, g), lp) in self.iterations.iter().zip(&self.samples).zip(&self.log_post) {
            body.push_str(&format!("{it},{g:.16e},{lp:.16e}\n"));
        }
        w.write_all(body.as_bytes())
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "mean": self.mean,
            "sd": self.sd,
            "map": self.map,
            "acceptance_rate": self.acceptance_rate,
            "mcse": self.mcse,
            "samples": self.samples.len(),
        })
    }
}

fn histogram_mode(xs: &[f64], bins: usize) -> f64 {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return lo;
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in xs {
        counts[(((x - lo) / width) as usize).min(bins - 1)] += 1;
    }
    // first maximal bin, so ties resolve deterministically
    let best = counts
        .iter()
        .enumerate()
        .fold(0, |b, (i, &c)| if c > counts[b] { i } else { b });
    lo + (best as f64 + 0.5) * width
}

fn batch_means_se(xs: &[f64]) -> f64 {
    let n = xs.len();
    let size = ((n as f64).sqrt() as usize).max(1);
    let batches = n / size;
    if batches < 2 {
        return f64::NAN;
    }
    let means: Vec<f64> = (0..batches)
        .map(|b| xs[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let m = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (var / batches as f64).sqrt()
}

/// Random-walk Metropolis with proposal `θ + L ξ`, `ξ ~ N(0, I)`.
fn metropolis<F: Fn(&[f64]) -> f64>(
    log_density: F,
    start: Vec<f64>,
    step: &DMatrix<f64>,
    chain: &ChainConfig,
) -> Result<PosteriorSummary> {
    chain.validate()?;
    let d = start.len();
    let mut rng = ChaCha8Rng::seed_from_u64(chain.seed);
    let mut theta = start;
    let mut lp = log_density(&theta);
    let mut accepted = 0usize;
    let mut samples = Vec::with_capacity(chain.kept());
    let mut log_post = Vec::with_capacity(chain.kept());
    let mut iterations = Vec::with_capacity(chain.kept());
    let mut xi = vec![0.0; d];
    for t in 0..chain.iterations {
        for v in xi.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let proposal: Vec<f64> = (0..d)
            .map(|i| theta[i] + (0..=i).map(|j| step[(i, j)] * xi[j]).sum::<f64>())
            .collect();
        let lp_new = log_density(&proposal);
        let u: f64 = rng.gen();
        let accept = u.ln() < lp_new - lp;
        if accept {
            theta = proposal;
            lp = lp_new;
        }
        if t >= chain.burn_in {
            accepted += accept as usize;
            if (t + 1 - chain.burn_in).is_multiple_of(chain.thinning) {
                samples.push(theta[0]);
                log_post.push(lp);
                iterations.push(t);
            }
        }
    }
    let rate = accepted as f64 / (chain.iterations - chain.burn_in) as f64;
    if rate < MIN_ACCEPTANCE {
        return Err(Error::Chain(format!(
            "acceptance rate {rate:.4} below {MIN_ACCEPTANCE}; proposal is badly scaled"
        )));
    }
    Ok(PosteriorSummary::from_chain(samples, log_post, iterations, rate))
}

/// Joint random-walk MH over `(γ, η)`, preconditioned by the posterior covariance
/// and started at the posterior mode. From a cold start the walk needs on the order
/// of `(distance/sd)²` steps along the directions the data pin down.
pub fn run_mh(model: &BayesModel, readings: &Readings) -> Result<PosteriorSummary> {
    model.validate()?;
    let post = Posterior::new(model, readings)?;
    let g = post.closed_form()?;
    let d = g.mean.len();
    let chol = g
        .cov
        .clone()
        .cholesky()
        .ok_or_else(|| Error::DegenerateSpectrum("posterior covariance is not positive definite".into()))?;
    let step = chol.l() * (model.proposal_scale * 2.38 / (d as f64).sqrt());
    let start = g.mean.iter().copied().collect();
    metropolis(|th| post.log_density(th[0], &th[1..]), start, &step, &model.chain)
}

/// One-dimensional MH on the reduction `η ≡ γ`.
pub fn run_mh_collapsed(model: &BayesModel, readings: &Readings) -> Result<PosteriorSummary> {
    model.validate()?;
    let post = Posterior::new(model, readings)?;
    let (mode, sd) = post.collapsed_closed_form();
    let step = DMatrix::from_element(1, 1, model.proposal_scale * 2.38 * sd);
    metropolis(|th| post.log_density_collapsed(th[0]), vec![mode], &step, &model.chain)
}
