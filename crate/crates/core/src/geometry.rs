//! Sensor arrays, sampling grids, scatterer shapes and volume quadrature.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn polar(radius: f64, angle: f64) -> Self {
        Point::new(radius * angle.cos(), radius * angle.sin())
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    /// Polar angle in `[0, 2π)`.
    pub fn angle(self) -> f64 {
        let a = self.y.atan2(self.x);
        if a < 0.0 {
            a + 2.0 * PI
        } else {
            a
        }
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

/// Coincident sources and receivers equally spaced on a circle about the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct SensorArray {
    radius: f64,
    points: Vec<Point>,
}

/// Places `n` sensors at `radius·(cos 2πi/n, sin 2πi/n)`, `i = 0..n`.
pub fn make_sensor_array(n: usize, radius: f64) -> Result<SensorArray> {
    if n == 0 {
        return Err(Error::domain("sensor array needs at least one sensor"));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::domain(format!("sensor radius must be positive, got {radius}")));
    }
    let points = (0..n)
        .map(|i| Point::polar(radius, 2.0 * PI * i as f64 / n as f64))
        .collect();
    Ok(SensorArray { radius, points })
}

impl SensorArray {
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, i: usize) -> Point {
        self.points[i]
    }

    /// Whether `z` lies strictly inside the measurement circle.
    pub fn encloses(&self, z: Point) -> bool {
        z.norm() < self.radius
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Bounds {
    pub fn square(half_width: f64) -> Self {
        Bounds {
            xmin: -half_width,
            xmax: half_width,
            ymin: -half_width,
            ymax: half_width,
        }
    }
}

/// Uniform lattice over a rectangle, stored row-major with `y` as the outer index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingGrid {
    bounds: Bounds,
    nx: usize,
    ny: usize,
}

pub fn make_grid(bounds: Bounds, nx: usize, ny: usize) -> Result<SamplingGrid> {
    if nx < 2 || ny < 2 {
        return Err(Error::domain(format!("grid needs nx, ny >= 2, got {nx} x {ny}")));
    }
    let b = bounds;
    let ok = [b.xmin, b.xmax, b.ymin, b.ymax].iter().all(|v| v.is_finite()) && b.xmin < b.xmax && b.ymin < b.ymax;
    if !ok {
        return Err(Error::domain(format!("invalid grid bounds {b:?}")));
    }
    Ok(SamplingGrid { bounds, nx, ny })
}

impl SamplingGrid {
    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> (f64, f64) {
        let b = self.bounds;
        (
            (b.xmax - b.xmin) / (self.nx - 1) as f64,
            (b.ymax - b.ymin) / (self.ny - 1) as f64,
        )
    }

    pub fn point_at(&self, ix: usize, iy: usize) -> Point {
        let (hx, hy) = self.spacing();
        let b = self.bounds;
        // pin the far edge so the corners are exact
        let x = if ix + 1 == self.nx {
            b.xmax
        } else {
            b.xmin + ix as f64 * hx
        };
        let y = if iy + 1 == self.ny {
            b.ymax
        } else {
            b.ymin + iy as f64 * hy
        };
        Point::new(x, y)
    }

    /// Point with flat (row-major) index `idx`.
    pub fn point(&self, idx: usize) -> Point {
        self.point_at(idx % self.nx, idx / self.nx)
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }
}

/// Scatterer geometry. Ellipse semi-axes `a`, `b` run along `x` and `y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Disk { center: Point, radius: f64 },
    Ellipse { center: Point, a: f64, b: f64 },
    Rectangle { min: Point, max: Point },
}

impl Shape {
    pub fn center(&self) -> Point {
        match *self {
            Shape::Disk { center, .. } | Shape::Ellipse { center, .. } => center,
            Shape::Rectangle { min, max } => (min + max) * 0.5,
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Shape::Disk { radius, .. } => PI * radius * radius,
            Shape::Ellipse { a, b, .. } => PI * a * b,
            Shape::Rectangle { min, max } => (max.x - min.x) * (max.y - min.y),
        }
    }

    /// Largest distance between two points of the shape.
    pub fn diameter(&self) -> f64 {
        match *self {
            Shape::Disk { radius, .. } => 2.0 * radius,
            Shape::Ellipse { a, b, .. } => 2.0 * a.max(b),
            Shape::Rectangle { min, max } => min.dist(max),
        }
    }

    /// Closed-set membership.
    pub fn contains(&self, p: Point) -> bool {
        match *self {
            Shape::Disk { center, radius } => p.dist(center) <= radius,
            Shape::Ellipse { center, a, b } => {
                let d = p - center;
                (d.x / a).powi(2) + (d.y / b).powi(2) <= 1.0
            }
            Shape::Rectangle { min, max } => p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y,
        }
    }

    /// The shape `c + s·(B - c)` about its own center `c`.
    pub fn scaled(&self, s: f64) -> Shape {
        match *self {
            Shape::Disk { center, radius } => Shape::Disk {
                center,
                radius: radius * s,
            },
            Shape::Ellipse { center, a, b } => Shape::Ellipse {
                center,
                a: a * s,
                b: b * s,
            },
            Shape::Rectangle { min, max } => {
                let c = (min + max) * 0.5;
                Shape::Rectangle {
                    min: c + (min - c) * s,
                    max: c + (max - c) * s,
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Shape::Disk { radius, .. } => radius > 0.0,
            Shape::Ellipse { a, b, .. } => a > 0.0 && b > 0.0,
            Shape::Rectangle { min, max } => min.x < max.x && min.y < max.y,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!("degenerate shape {self:?}")))
        }
    }
}

/// One term `coef · x^px · y^py` of a polynomial refractive index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub px: u32,
    pub py: u32,
    pub coef: Complex64,
}

/// Refractive index `n(x)` inside a scatterer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum RefractiveIndex {
    Constant(Complex64),
    Polynomial(Vec<Monomial>),
}

impl RefractiveIndex {
    pub fn constant(re: f64, im: f64) -> Self {
        RefractiveIndex::Constant(Complex64::new(re, im))
    }

    /// `n(x1, x2) = x1² + 2`.
    pub fn quadratic_in_x() -> Self {
        RefractiveIndex::Polynomial(vec![
            Monomial {
                px: 2,
                py: 0,
                coef: Complex64::new(1.0, 0.0),
            },
            Monomial {
                px: 0,
                py: 0,
                coef: Complex64::new(2.0, 0.0),
            },
        ])
    }

    pub fn eval(&self, p: Point) -> Complex64 {
        match self {
            RefractiveIndex::Constant(c) => *c,
            RefractiveIndex::Polynomial(terms) => terms
                .iter()
                .map(|t| t.coef * p.x.powi(t.px as i32) * p.y.powi(t.py as i32))
                .sum(),
        }
    }
}

/// A penetrable scatterer `D = z + εB` carrying its refractive index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScattererSpec {
    pub shape: Shape,
    pub index: RefractiveIndex,
    #[serde(default = "unit_scale")]
    pub epsilon_scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

impl ScattererSpec {
    pub fn new(shape: Shape, index: RefractiveIndex) -> Result<Self> {
        Self::with_scale(shape, index, 1.0)
    }

    pub fn with_scale(shape: Shape, index: RefractiveIndex, epsilon_scale: f64) -> Result<Self> {
        let spec = ScattererSpec {
            shape,
            index,
            epsilon_scale,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks the shape and that `Re n > 0`, `Im n >= 0` at the probe nodes.
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon_scale > 0.0) {
            return Err(Error::domain("epsilon_scale must be positive"));
        }
        self.shape.validate()?;
        let region = self.region();
        let probe = gauss_quadrature(&region, 6)?;
        for &p in probe.nodes().iter().chain(std::iter::once(&region.center())) {
            let n = self.index.eval(p);
            if !(n.re > 0.0) || n.im < 0.0 || !n.re.is_finite() || !n.im.is_finite() {
                return Err(Error::domain(format!(
                    "refractive index {n} at ({}, {}) violates Re n > 0, Im n >= 0",
                    p.x, p.y
                )));
            }
        }
        Ok(())
    }

    /// The physical region occupied by the scatterer.
    pub fn region(&self) -> Shape {
        self.shape.scaled(self.epsilon_scale)
    }
}

/// Nodes and area weights for a volume integral over a shape.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<Point>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(Point) -> Complex64>(&self, f: F) -> Complex64 {
        self.nodes.iter().zip(&self.weights).map(|(&p, &w)| f(p) * w).sum()
    }
}

pub const MIN_RULE_ORDER: usize = 2;
pub const MAX_RULE_ORDER: usize = 64;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n
        let mut t = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, t);
            dp = d;
            let dt = p / d;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, t);
        dp = if d != 0.0 { d } else { dp };
        let wi = 2.0 / ((1.0 - t * t) * dp * dp);
        x[i] = -t;
        x[n - 1 - i] = t;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, t: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = t;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (t * p1 - p0) / (t * t - 1.0);
    (p1, d)
}

/// Tensor-product Gauss–Legendre rule of `order` points per direction.
///
/// Rectangles use an affine map. Disks and ellipses use polar coordinates with
/// the rule applied in `s = r²`, so the Jacobian is constant and the origin of
/// the polar map is never sampled.
pub fn gauss_quadrature(shape: &Shape, order: usize) -> Result<QuadratureRule> {
    if !(MIN_RULE_ORDER..=MAX_RULE_ORDER).contains(&order) {
        return Err(Error::domain(format!(
            "quadrature order {order} outside [{MIN_RULE_ORDER}, {MAX_RULE_ORDER}]"
        )));
    }
    shape.validate()?;
    let (t, w) = gauss_legendre(order);
    let mut nodes = Vec::with_capacity(2 * order * order);
    let mut weights = Vec::with_capacity(2 * order * order);
    match *shape {
        Shape::Rectangle { min, max } => {
            let (hx, hy) = (0.5 * (max.x - min.x), 0.5 * (max.y - min.y));
            let c = (min + max) * 0.5;
            for (i, &ti) in t.iter().enumerate() {
                for (j, &tj) in t.iter().enumerate() {
                    nodes.push(Point::new(c.x + hx * ti, c.y + hy * tj));
                    weights.push(w[i] * w[j] * hx * hy);
                }
            }
        }
        Shape::Disk { center, radius } => {
            polar_rule(&t, &w, center, radius, radius, &mut nodes, &mut weights);
        }
        Shape::Ellipse { center, a, b } => {
            polar_rule(&t, &w, center, a, b, &mut nodes, &mut weights);
        }
    }
    Ok(QuadratureRule { nodes, weights })
}

fn polar_rule(t: &[f64], w: &[f64], center: Point, a: f64, b: f64, nodes: &mut Vec<Point>, weights: &mut Vec<f64>) {
    // x = c + (a√s cos θ, b√s sin θ), s ∈ [0, 1], θ ∈ [0, 2π); dA = (ab/2) ds dθ.
    // Periodic trapezoid in θ with 2q points is exact for trigonometric degree
    // 2q - 1; what survives the angular sum is a polynomial in s, so the rule is
    // exact for total degree 2q - 1 like the rectangle rule.
    let n = 2 * t.len();
    let dtheta = 2.0 * PI / n as f64;
    for (i, &ti) in t.iter().enumerate() {
        let s = 0.5 * (ti + 1.0);
        let r = s.sqrt();
        for j in 0..n {
            let theta = dtheta * (j as f64 + 0.5);
            nodes.push(Point::new(
                center.x + a * r * theta.cos(),
                center.y + b * r * theta.sin(),
            ));
            weights.push(w[i] * 0.5 * dtheta * 0.5 * a * b);
        }
    }
}
