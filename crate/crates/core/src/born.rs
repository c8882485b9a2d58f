//! Born-approximation near-field data for small penetrable scatterers.
//!
//! The scattered field for a source at `y` measured at `x` is
//! `u(x, y) = k² Σ_p ω_p (n(z_p) - 1) Φ(x, z_p) Φ(z_p, y)`
//! with a Gauss rule `(z_p, ω_p)` over each scatterer.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry::{gauss_quadrature, make_sensor_array, Point, ScattererSpec, SensorArray};
use crate::linalg::{hermitian_eig, ComplexMatrix};
use crate::specfun::fundamental_solution;

pub const DEFAULT_RULE_ORDER: usize = 16;

/// Quadrature nodes of all scatterers with weights `ω_p (n(z_p) - 1)`.
#[derive(Clone, Debug)]
pub struct ContrastNodes {
    nodes: Vec<Point>,
    contrast_weights: Vec<Complex64>,
    regions: Vec<crate::geometry::Shape>,
}

impl ContrastNodes {
    pub fn new(scatterers: &[ScattererSpec], rule_order: usize) -> Result<Self> {
        let mut nodes = Vec::new();
        let mut contrast_weights = Vec::new();
        let mut regions = Vec::new();
        for s in scatterers {
            s.validate()?;
            let region = s.region();
            let rule = gauss_quadrature(&region, rule_order)?;
            for (&p, &w) in rule.nodes().iter().zip(rule.weights()) {
                nodes.push(p);
                contrast_weights.push((s.index.eval(p) - 1.0) * w);
            }
            regions.push(region);
        }
        Ok(ContrastNodes {
            nodes,
            contrast_weights,
            regions,
        })
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn contrast_weights(&self) -> &[Complex64] {
        &self.contrast_weights
    }

    fn check_outside(&self, p: Point) -> Result<()> {
        if let Some(r) = self.regions.iter().find(|r| r.contains(p)) {
            return Err(Error::domain(format!(
                "point ({}, {}) lies inside scatterer {r:?}",
                p.x, p.y
            )));
        }
        Ok(())
    }

    /// `Φ(x, z_p)` for every node.
    fn kernel_row(&self, k: f64, x: Point) -> Result<Vec<Complex64>> {
        self.nodes.iter().map(|&z| fundamental_solution(k, x, z)).collect()
    }

    pub fn field(&self, k: f64, x: Point, y: Point) -> Result<Complex64> {
        self.check_outside(x)?;
        self.check_outside(y)?;
        let fx = self.kernel_row(k, x)?;
        let fy = self.kernel_row(k, y)?;
        Ok(pair_sum(k, &self.contrast_weights, &fx, &fy))
    }
}

fn pair_sum(k: f64, c: &[Complex64], a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let s: Complex64 = c.iter().zip(a).zip(b).map(|((c, a), b)| c * a * b).sum();
    s * (k * k)
}

/// Born scattered field at receiver `x` for a point source at `y`.
pub fn born_scattered_field(
    scatterers: &[ScattererSpec],
    rule_order: usize,
    k: f64,
    x: Point,
    y: Point,
) -> Result<Complex64> {
    if !(k > 0.0) {
        return Err(Error::domain("wavenumber must be positive"));
    }
    ContrastNodes::new(scatterers, rule_order)?.field(k, x, y)
}

/// Which components of the noise matrix are random.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    Complex,
    Real,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseRecord {
    pub delta: f64,
    pub seed: u64,
    pub kind: NoiseKind,
}

/// Multi-static response matrix `[u(x_i, y_j)]` with its acquisition geometry.
#[derive(Clone, Debug)]
pub struct MultistaticMatrix {
    pub data: ComplexMatrix,
    pub sensors: SensorArray,
    pub k: f64,
    pub noise: Option<NoiseRecord>,
}

impl MultistaticMatrix {
    pub fn new(data: ComplexMatrix, sensors: SensorArray, k: f64) -> Result<Self> {
        if data.rows() != sensors.len() || data.cols() != sensors.len() {
            return Err(Error::domain(format!(
                "{}x{} matrix does not match {} sensors",
                data.rows(),
                data.cols(),
                sensors.len()
            )));
        }
        Ok(MultistaticMatrix {
            data,
            sensors,
            k,
            noise: None,
        })
    }

    /// Largest `|N_ij - N_ji|` relative to the largest entry.
    pub fn reciprocity_defect(&self) -> f64 {
        let n = self.data.rows();
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.data[(i, j)] - self.data[(j, i)]).norm());
                scale = scale.max(self.data[(i, j)].norm());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }
}

pub fn assemble_multistatic(
    scatterers: &[ScattererSpec],
    sensors: &SensorArray,
    k: f64,
    rule_order: usize,
) -> Result<MultistaticMatrix> {
    assemble_multistatic_with(scatterers, sensors, k, rule_order, Exec::default())
}

/// [`assemble_multistatic`] with an explicit execution policy.
pub fn assemble_multistatic_with(
    scatterers: &[ScattererSpec],
    sensors: &SensorArray,
    k: f64,
    rule_order: usize,
    exec: Exec,
) -> Result<MultistaticMatrix> {
    if !(k > 0.0) {
        return Err(Error::domain("wavenumber must be positive"));
    }
    let model = ContrastNodes::new(scatterers, rule_order)?;
    for &x in sensors.points() {
        model.check_outside(x)?;
    }
    let n = sensors.len();
    let table = exec.try_map(n, |i| model.kernel_row(k, sensors.point(i)))?;
    let upper = exec.map(n, |i| {
        (i..n)
            .map(|j| pair_sum(k, &model.contrast_weights, &table[i], &table[j]))
            .collect::<Vec<_>>()
    });
    let mut data = ComplexMatrix::zeros(n, n);
    for (i, row) in upper.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            data[(i, i + off)] = v;
            data[(i + off, i)] = v;
        }
    }
    MultistaticMatrix::new(data, sensors.clone(), k)
}

/// Random matrix with i.i.d. standard-normal entries scaled to unit spectral norm.
pub fn unit_noise_matrix(n: usize, seed: u64, kind: NoiseKind) -> ComplexMatrix {
    let (raw, s) = raw_noise(n, seed, kind);
    raw.scale(Complex64::new(1.0 / s, 0.0))
}

/// Standard deviation of each real component of the unit-norm noise matrix,
/// i.e. `1/‖G‖₂` for the underlying standard-normal draw `G`.
pub fn noise_component_sd(n: usize, seed: u64, kind: NoiseKind) -> f64 {
    1.0 / raw_noise(n, seed, kind).1
}

fn raw_noise(n: usize, seed: u64, kind: NoiseKind) -> (ComplexMatrix, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = ComplexMatrix::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = match kind {
            NoiseKind::Complex => StandardNormal.sample(&mut rng),
            NoiseKind::Real => 0.0,
        };
        Complex64::new(re, im)
    });
    // power iteration stalls on the clustered top of a random spectrum
    let gram = &raw.adjoint() * &raw;
    let s = hermitian_eig(&gram).map_or_else(|_| raw.spectral_norm_power(500, 1e-15), |e| e.values()[0].sqrt());
    (raw, s)
}

/// Multiplicative noise `u_ij (1 + δ E_ij)` with `‖E‖₂ = 1`, complex `E`.
pub fn add_noise(matrix: &MultistaticMatrix, delta: f64, seed: u64) -> Result<MultistaticMatrix> {
    add_noise_with(matrix, delta, seed, NoiseKind::Complex)
}

pub fn add_noise_with(matrix: &MultistaticMatrix, delta: f64, seed: u64, kind: NoiseKind) -> Result<MultistaticMatrix> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::domain(format!("noise level must be >= 0, got {delta}")));
    }
    if delta == 0.0 {
        return Ok(matrix.clone());
    }
    let n = matrix.data.rows();
    let e = unit_noise_matrix(n, seed, kind);
    let data = ComplexMatrix::from_fn(n, n, |i, j| matrix.data[(i, j)] * (1.0 + e[(i, j)] * delta));
    Ok(MultistaticMatrix {
        data,
        sensors: matrix.sensors.clone(),
        k: matrix.k,
        noise: Some(NoiseRecord { delta, seed, kind }),
    })
}

/// `max_x k² |Σ_p ω_p (n(z_p) - 1) Φ(x, z_p)|` over the sensors: the size of the
/// first Neumann term, which the Born approximation assumes is small.
pub fn born_smallness(scatterers: &[ScattererSpec], sensors: &SensorArray, k: f64, rule_order: usize) -> Result<f64> {
    let model = ContrastNodes::new(scatterers, rule_order)?;
    let mut worst: f64 = 0.0;
    for &x in sensors.points() {
        let row = model.kernel_row(k, x)?;
        let s: Complex64 = row.iter().zip(&model.contrast_weights).map(|(a, c)| a * c).sum();
        worst = worst.max((s * k * k).norm());
    }
    Ok(worst)
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    n: usize,
    k: f64,
    sensor_radius: f64,
    delta: f64,
    seed: Option<u64>,
    #[serde(default)]
    noise_kind: Option<NoiseKind>,
}

/// Path of the JSON sidecar belonging to a matrix CSV.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Writes `i,j,re,im` rows (0-based) plus the JSON sidecar.
pub fn write_matrix(m: &MultistaticMatrix, csv: &Path) -> Result<()> {
    let file = fs::File::create(csv).map_err(|e| Error::io(csv, e))?;
    let mut w = BufWriter::new(file);
    let n = m.data.rows();
    let mut body = String::from("i,j,re,im\n");
    for i in 0..n {
        for j in 0..n {
            let z = m.data[(i, j)];
            body.push_str(&format!("{i},{j},{:e},{:e}\n", z.re, z.im));
        }
    }
    w.write_all(body.as_bytes()).map_err(|e| Error::io(csv, e))?;
    w.flush().map_err(|e| Error::io(csv, e))?;

    let side = Sidecar {
        n,
        k: m.k,
        sensor_radius: m.sensors.radius(),
        delta: m.noise.map_or(0.0, |r| r.delta),
        seed: m.noise.map(|r| r.seed),
        noise_kind: m.noise.map(|r| r.kind),
    };
    let path = sidecar_path(csv);
    let text = serde_json::to_string_pretty(&side).map_err(|source| Error::Json {
        context: "serializing matrix sidecar".into(),
        source,
    })?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

pub fn read_matrix(csv: &Path) -> Result<MultistaticMatrix> {
    let side_path = sidecar_path(csv);
    let text = fs::read_to_string(&side_path).map_err(|e| Error::io(&side_path, e))?;
    let side: Sidecar = serde_json::from_str(&text).map_err(|source| Error::Json {
        context: format!("reading {}", side_path.display()),
        source,
    })?;
    let parse_err = |line: usize, msg: &str| Error::Parse {
        path: csv.to_path_buf(),
        message: format!("line {line}: {msg}"),
    };

    let file = fs::File::open(csv).map_err(|e| Error::io(csv, e))?;
    let n = side.n;
    let mut data = ComplexMatrix::zeros(n, n);
    let mut seen = vec![false; n * n];
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(csv, e))?;
        if lineno == 0 {
            if line.trim() != "i,j,re,im" {
                return Err(parse_err(1, "expected header i,j,re,im"));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(parse_err(lineno + 1, "expected 4 fields"));
        }
        let i: usize = f[0]
            .trim()
            .parse()
            .map_err(|_| parse_err(lineno + 1, "bad row index"))?;
        let j: usize = f[1]
            .trim()
            .parse()
            .map_err(|_| parse_err(lineno + 1, "bad column index"))?;
        let re: f64 = f[2]
            .trim()
            .parse()
            .map_err(|_| parse_err(lineno + 1, "bad real part"))?;
        let im: f64 = f[3]
            .trim()
            .parse()
            .map_err(|_| parse_err(lineno + 1, "bad imaginary part"))?;
        if i >= n || j >= n {
            return Err(parse_err(lineno + 1, "index out of range"));
        }
        data[(i, j)] = Complex64::new(re, im);
        seen[i * n + j] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(parse_err(0, "missing entries"));
    }
    let sensors = make_sensor_array(n, side.sensor_radius)?;
    let mut m = MultistaticMatrix::new(data, sensors, side.k)?;
    if let Some(seed) = side.seed {
        m.noise = Some(NoiseRecord {
            delta: side.delta,
            seed,
            kind: side.noise_kind.unwrap_or_default(),
        });
    }
    Ok(m)
}
