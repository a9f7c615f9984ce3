//! Knot energies of closed polygons: the triple integral `M_p` of Menger
//! curvature, the intermediate `I_p` and the sup energy `U_p`.
//!
//! Arclength integrals are discretized at the vertices with weights equal to
//! half the lengths of the two adjacent segments (first-order accurate).
//! Suprema scan vertices only. Triples with a repeated index are skipped.

use std::io::Read;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{dist, k_kernel, menger_curvature, PointTuple};

/// Ordered vertices with cumulative arclength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    dim: usize,
    coords: Vec<f64>,
    closed: bool,
    arclength: Vec<f64>,
}

impl Polyline {
    pub fn new(points: &[Vec<f64>], closed: bool) -> Result<Self> {
        let dim = points.first().map_or(0, |p| p.len());
        if dim < 2 {
            return invalid("polyline vertices need at least two coordinates");
        }
        if points.iter().any(|p| p.len() != dim) {
            return invalid("polyline vertices must share one dimension");
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return invalid("polyline coordinates must be finite");
        }
        let min = if closed { 3 } else { 2 };
        if points.len() < min {
            return invalid(format!(
                "a {} polyline needs at least {min} vertices",
                if closed { "closed" } else { "open" }
            ));
        }
        let m = points.len();
        let segments = if closed { m } else { m - 1 };
        let mut arclength = Vec::with_capacity(segments + 1);
        arclength.push(0.0);
        for i in 0..segments {
            let len = dist(&points[i], &points[(i + 1) % m]);
            if len == 0.0 {
                return invalid(format!("consecutive vertices {i} and {} coincide", (i + 1) % m));
            }
            arclength.push(arclength[i] + len);
        }
        Ok(Self {
            dim,
            coords: points.concat(),
            closed,
            arclength,
        })
    }

    /// Regular `N`-gon inscribed in the circle of radius `r` in the plane.
    pub fn circle(vertices: usize, radius: f64) -> Result<Self> {
        Self::ellipse(vertices, radius, radius)
    }

    pub fn ellipse(vertices: usize, a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return invalid("ellipse semi-axes must be positive");
        }
        let pts: Vec<Vec<f64>> = (0..vertices)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / vertices as f64;
                vec![a * t.cos(), b * t.sin()]
            })
            .collect();
        Self::new(&pts, true)
    }

    /// `(P, Q)` torus knot on the torus with radii `major > minor` in R³.
    pub fn torus_knot(vertices: usize, p: u32, q: u32, major: f64, minor: f64) -> Result<Self> {
        if !(major > minor && minor > 0.0) {
            return invalid("torus radii must satisfy major > minor > 0");
        }
        if p == 0 || q == 0 {
            return invalid("torus knot winding numbers must be positive");
        }
        let pts: Vec<Vec<f64>> = (0..vertices)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / vertices as f64;
                let rad = major + minor * (q as f64 * t).cos();
                vec![
                    rad * (p as f64 * t).cos(),
                    rad * (p as f64 * t).sin(),
                    minor * (q as f64 * t).sin(),
                ]
            })
            .collect();
        Self::new(&pts, true)
    }

    /// One vertex per row; a non-numeric first row is taken as a header. A
    /// closed polyline whose last row repeats the first drops the repeat.
    pub fn read_csv(reader: impl Read, closed: bool) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut pts: Vec<Vec<f64>> = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(format!("polyline CSV: {e}")))?;
            let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
            match parsed {
                Ok(v) => pts.push(v),
                Err(_) if line == 0 => continue,
                Err(e) => return Err(Error::Parse(format!("polyline CSV line {}: {e}", line + 1))),
            }
        }
        if closed && pts.len() > 3 && pts.first() == pts.last() {
            pts.pop();
        }
        Self::new(&pts, closed)
    }

    pub fn load_csv(path: &Path, closed: bool) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::read_csv(file, closed)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Cumulative arclength at each vertex (and the total length last).
    pub fn arclength(&self) -> &[f64] {
        &self.arclength
    }

    pub fn length(&self) -> f64 {
        *self.arclength.last().expect("at least one entry")
    }

    /// Half the sum of the adjacent segment lengths.
    pub fn weights(&self) -> Vec<f64> {
        let m = self.len();
        let seg = |i: usize| self.arclength[i + 1] - self.arclength[i];
        (0..m)
            .map(|i| {
                let before = if i > 0 {
                    seg(i - 1)
                } else if self.closed {
                    seg(m - 1)
                } else {
                    0.0
                };
                let after = if i + 1 < m || self.closed { seg(i) } else { 0.0 };
                0.5 * (before + after)
            })
            .collect()
    }

    /// Image under `x ↦ A x + b`.
    pub fn mapped(&self, map: &crate::geometry::AffineMap) -> Result<Self> {
        if map.dim() != self.dim {
            return invalid("map dimension differs from the polyline dimension");
        }
        let pts: Vec<Vec<f64>> = (0..self.len()).map(|i| map.apply(self.vertex(i))).collect();
        Self::new(&pts, self.closed)
    }

    fn require_closed(&self) -> Result<()> {
        if self.closed {
            Ok(())
        } else {
            invalid("knot energies are defined for closed polylines")
        }
    }

    /// `c(x_i, x_j, x_k)`, zero for coincident (self-intersecting) vertices.
    fn curvature(&self, i: usize, j: usize, k: usize) -> f64 {
        menger_curvature(self.vertex(i), self.vertex(j), self.vertex(k)).unwrap_or(0.0)
    }
}

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p.is_finite() {
        Ok(())
    } else {
        invalid("the energy exponent p must be positive and finite")
    }
}

/// The three knot energies of one polyline at one exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnotEnergies {
    pub mp: f64,
    pub ip: f64,
    pub up: f64,
}

/// Curvature of every unordered triple, evaluated once: the weighted sum of
/// `c^p` and, if requested, the maximum of `c` over the third index per pair.
struct TriplePass {
    sum: f64,
    pair_max: Vec<f64>,
}

fn triple_pass(c: &Polyline, p: f64, want_max: bool) -> TriplePass {
    let w = c.weights();
    let m = c.len();
    let pair_len = if want_max { m * m } else { 0 };
    let (rows, pair_max) = (0..m)
        .into_par_iter()
        .fold(
            || (Vec::new(), vec![0.0f64; pair_len]),
            |(mut rows, mut pm), i| {
                let mut acc = 0.0;
                for j in i + 1..m {
                    let mut inner = 0.0;
                    for k in j + 1..m {
                        let v = c.curvature(i, j, k);
                        inner += v.powf(p) * w[k];
                        if want_max {
                            for (a, b) in [(i, j), (i, k), (j, k)] {
                                let slot = &mut pm[a * m + b];
                                *slot = slot.max(v);
                            }
                        }
                    }
                    acc += inner * w[j];
                }
                rows.push((i, acc * w[i]));
                (rows, pm)
            },
        )
        .reduce(
            || (Vec::new(), vec![0.0f64; pair_len]),
            |(mut ra, mut pa), (rb, pb)| {
                ra.extend(rb);
                for (x, y) in pa.iter_mut().zip(pb) {
                    *x = x.max(y);
                }
                (ra, pa)
            },
        );
    let mut rows = rows;
    rows.sort_by_key(|r| r.0);
    // Each unordered triple stands for its 6 orderings.
    TriplePass {
        sum: 6.0 * rows.iter().map(|r| r.1).sum::<f64>(),
        pair_max,
    }
}

fn sup_energies(c: &Polyline, p: f64, pair_max: &[f64]) -> (f64, f64) {
    let w = c.weights();
    let m = c.len();
    let mut ip = 0.0;
    let mut up = 0.0;
    for i in 0..m {
        let mut row = 0.0;
        let mut vertex = 0.0f64;
        for j in 0..m {
            if j == i {
                continue;
            }
            let v = pair_max[i.min(j) * m + i.max(j)];
            vertex = vertex.max(v);
            row += v.powf(p) * w[j];
        }
        ip += row * w[i];
        up += vertex.powf(p) * w[i];
    }
    (ip, up)
}

/// `M_p = Σ_{i,j,k distinct} c(x_i,x_j,x_k)^p w_i w_j w_k`.
pub fn menger_energy_mp(c: &Polyline, p: f64) -> Result<f64> {
    c.require_closed()?;
    check_p(p)?;
    Ok(triple_pass(c, p, false).sum)
}

/// `I_p = Σ_{i≠j} (max_{k∉{i,j}} c(x_i,x_j,x_k))^p w_i w_j`.
pub fn intermediate_energy_ip(c: &Polyline, p: f64) -> Result<f64> {
    Ok(knot_energies(c, p)?.ip)
}

/// `U_p = Σ_i (max_{j,k} c(x_i,x_j,x_k))^p w_i`.
pub fn sup_energy_up(c: &Polyline, p: f64) -> Result<f64> {
    Ok(knot_energies(c, p)?.up)
}

/// `M_p`, `I_p` and `U_p` from a single pass over the triples.
pub fn knot_energies(c: &Polyline, p: f64) -> Result<KnotEnergies> {
    c.require_closed()?;
    check_p(p)?;
    let pass = triple_pass(c, p, true);
    let (ip, up) = sup_energies(c, p, &pass.pair_max);
    Ok(KnotEnergies { mp: pass.sum, ip, up })
}

/// `Σ_{i,j,k distinct} K(x_i,x_j,x_k)^p w_i w_j w_k` with `K = area/diam³`;
/// since `4K ≤ c` per triple, `4^p` times this never exceeds `M_p`.
pub fn kernel_energy(c: &Polyline, p: f64) -> Result<f64> {
    c.require_closed()?;
    check_p(p)?;
    let w = c.weights();
    let m = c.len();
    let rows: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for j in i + 1..m {
                for k in j + 1..m {
                    let t = PointTuple::new(&[c.vertex(i).to_vec(), c.vertex(j).to_vec(), c.vertex(k).to_vec()])
                        .expect("vertices share a dimension");
                    acc += k_kernel(&t).unwrap_or(0.0).powf(p) * w[j] * w[k];
                }
            }
            acc * w[i]
        })
        .collect();
    Ok(6.0 * rows.iter().sum::<f64>())
}
