//! Indicator values on a sampling grid, with CSV/PGM export and a few
//! summary statistics used to judge reconstructions.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry::{Point, SamplingGrid};

/// Grid values in row-major order (y outer). Points outside the admissible
/// region carry `0` and are flagged in `mask`.
#[derive(Clone, Debug, PartialEq)]
pub struct IndicatorField {
    grid: SamplingGrid,
    values: Vec<f64>,
    mask: Vec<bool>,
}

impl IndicatorField {
    pub fn new(grid: SamplingGrid, values: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        if values.len() != grid.len() || mask.len() != grid.len() {
            return Err(Error::domain("field size does not match grid"));
        }
        Ok(IndicatorField { grid, values, mask })
    }

    /// Evaluates `f` at every point where `admissible` holds.
    pub fn evaluate<A, F>(grid: &SamplingGrid, exec: Exec, admissible: A, f: F) -> Result<Self>
    where
        A: Fn(Point) -> bool + Sync,
        F: Fn(Point) -> Result<f64> + Sync,
    {
        let mask: Vec<bool> = grid.points().map(&admissible).collect();
        let values = exec.try_map(grid.len(), |i| if mask[i] { f(grid.point(i)) } else { Ok(0.0) })?;
        IndicatorField::new(grid.clone(), values, mask)
    }

    pub fn grid(&self) -> &SamplingGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn value_at(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.grid.nx() + ix]
    }

    /// `(point, value)` for the admissible points.
    pub fn inside(&self) -> impl Iterator<Item = (Point, f64)> + '_ {
        (0..self.values.len())
            .filter(|&i| self.mask[i])
            .map(|i| (self.grid.point(i), self.values[i]))
    }

    pub fn argmax(&self) -> Option<Point> {
        self.inside().max_by(|a, b| a.1.total_cmp(&b.1)).map(|(p, _)| p)
    }

    /// Admissible points that dominate their 8-neighbourhood, strongest first.
    /// A candidate within `separation` cells (Chebyshev) of a stronger accepted
    /// maximum is dropped, which also collapses plateaus.
    pub fn local_maxima(&self, separation: usize) -> Vec<(Point, f64)> {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let mut candidates = Vec::new();
        for iy in 0..ny {
            for ix in 0..nx {
                let i = iy * nx + ix;
                if !self.mask[i] {
                    continue;
                }
                let v = self.values[i];
                let mut dominant = true;
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let (jx, jy) = (ix as i64 + dx, iy as i64 + dy);
                        if (dx, dy) == (0, 0) || jx < 0 || jy < 0 || jx >= nx as i64 || jy >= ny as i64 {
                            continue;
                        }
                        let j = jy as usize * nx + jx as usize;
                        if self.mask[j] && self.values[j] > v {
                            dominant = false;
                        }
                    }
                }
                if dominant {
                    candidates.push((ix, iy, v));
                }
            }
        }
        candidates.sort_by(|a, b| b.2.total_cmp(&a.2));
        let mut kept: Vec<(usize, usize, f64)> = Vec::new();
        for c in candidates {
            let near = kept
                .iter()
                .any(|k| k.0.abs_diff(c.0).max(k.1.abs_diff(c.1)) <= separation);
            if !near {
                kept.push(c);
            }
        }
        kept.into_iter()
            .map(|(ix, iy, v)| (self.grid.point_at(ix, iy), v))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,value\n");
        for (i, v) in self.values.iter().enumerate() {
            let p = self.grid.point(i);
            let _ = writeln!(out, "{:.16e},{:.16e},{:.16e}", p.x, p.y, v);
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// ASCII P2, 8 bit, top row = largest y. Values are scaled linearly over the
    /// admissible points; masked pixels are 0 and a constant field is all 128.
    pub fn to_pgm(&self) -> String {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let (lo, hi) = self
            .inside()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, v)| {
                (lo.min(v), hi.max(v))
            });
        let mut out = format!("P2\n{nx} {ny}\n255\n");
        for iy in (0..ny).rev() {
            let row: Vec<String> = (0..nx)
                .map(|ix| {
                    let i = iy * nx + ix;
                    let level = if !self.mask[i] {
                        0
                    } else if !(hi > lo) {
                        128
                    } else {
                        ((self.values[i] - lo) / (hi - lo) * 255.0).round() as u32
                    };
                    level.to_string()
                })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_pgm()).map_err(|e| Error::io(path, e))
    }
}

/// Parses `x,y,value` rows written by [`IndicatorField::to_csv`].
pub fn parse_field_csv(text: &str) -> std::result::Result<Vec<(f64, f64, f64)>, String> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("x,y,value") {
        return Err("missing x,y,value header".into());
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 3 {
                return Err(format!("line {}: expected 3 fields", n + 2));
            }
            let num = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("line {}: {e}", n + 2));
            Ok((num(f[0])?, num(f[1])?, num(f[2])?))
        })
        .collect()
}

/// Checks a P2 image and returns `(width, height, pixels)`.
pub fn parse_pgm(text: &str) -> std::result::Result<(usize, usize, Vec<u32>), String> {
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace);
    if tokens.next() != Some("P2") {
        return Err("not a P2 image".into());
    }
    let mut num = |what: &str| -> std::result::Result<usize, String> {
        tokens
            .next()
            .ok_or_else(|| format!("missing {what}"))?
            .parse()
            .map_err(|_| format!("bad {what}"))
    };
    let (w, h, maxval) = (num("width")?, num("height")?, num("maxval")?);
    if maxval != 255 {
        return Err(format!("maxval {maxval}, expected 255"));
    }
    let mut px = Vec::with_capacity(w * h);
    for _ in 0..w * h {
        let v = num("pixel")? as u32;
        if v > 255 {
            return Err(format!("pixel {v} exceeds maxval"));
        }
        px.push(v);
    }
    if num("trailing").is_ok() {
        return Err("trailing data".into());
    }
    Ok((w, h, px))
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    pearson(&ranks(a), &ranks(b))
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut r = vec![0.0; v.len()];
    let mut s = 0;
    while s < idx.len() {
        let mut e = s;
        while e + 1 < idx.len() && v[idx[e + 1]] == v[idx[s]] {
            e += 1;
        }
        let avg = 0.5 * (s + e) as f64 + 1.0;
        for &i in &idx[s..=e] {
            r[i] = avg;
        }
        s = e + 1;
    }
    r
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// `|A ∩ B| / |A ∪ B|`; two empty sets count as identical.
pub fn jaccard(a: &[bool], b: &[bool]) -> f64 {
    assert_eq!(a.len(), b.len());
    let inter = a.iter().zip(b).filter(|(x, y)| **x && **y).count();
    let union = a.iter().zip(b).filter(|(x, y)| **x || **y).count();
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Median of a non-empty sample.
pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}
