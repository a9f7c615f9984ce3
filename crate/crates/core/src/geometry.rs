//! Exact finite-dimensional geometry: diameters, circumradii, Menger curvature,
//! simplex volumes and the curvature kernels built from them.
//!
//! Volumes of parallelotopes are computed from a Householder QR factorization
//! of the spanning vectors, `|w_1 ∧ … ∧ w_k| = ∏ |R_ii|`. This is the square
//! root of the Gram determinant without ever forming the Gram matrix, so
//! nearly degenerate configurations keep full relative accuracy.

use crate::error::{invalid, Result};
use crate::funcspace::EnergyParams;

/// Default threshold of the collinearity test
/// `2·Area / (product of the two longest sides) < tol`.
pub const COLLINEAR_TOL: f64 = 1e-12;

/// An ordered list of points sharing one ambient dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct PointTuple {
    dim: usize,
    coords: Vec<f64>,
}

impl PointTuple {
    pub fn new(points: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = points.first() else {
            return invalid("a point tuple needs at least one point");
        };
        let dim = first.len();
        if dim == 0 {
            return invalid("points must have positive dimension");
        }
        if points.iter().any(|p| p.len() != dim) {
            return invalid("all points must share one dimension");
        }
        Ok(Self {
            dim,
            coords: points.concat(),
        })
    }

    /// Builds a tuple from row-major coordinates.
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return invalid("flat coordinates must hold a positive number of points");
        }
        Ok(Self { dim, coords })
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

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    /// Applies `map` to every point.
    pub fn mapped(&self, map: &AffineMap) -> Result<Self> {
        if map.dim() != self.dim {
            return invalid("affine map dimension differs from the tuple dimension");
        }
        let coords = self.points().flat_map(|p| map.apply(p)).collect();
        Ok(Self { dim: self.dim, coords })
    }
}

/// `x ↦ A x + b` on R^d.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    dim: usize,
    linear: Vec<f64>,
    offset: Vec<f64>,
}

impl AffineMap {
    /// `linear` is row-major `d × d`.
    pub fn new(linear: Vec<f64>, offset: Vec<f64>) -> Result<Self> {
        let dim = offset.len();
        if dim == 0 || linear.len() != dim * dim {
            return invalid("linear part must be a d×d matrix matching the offset");
        }
        if linear.iter().chain(&offset).any(|v| !v.is_finite()) {
            return invalid("affine map entries must be finite");
        }
        Ok(Self { dim, linear, offset })
    }

    /// Rotation by `angle` in the `(i, j)` coordinate plane followed by a translation.
    pub fn plane_rotation(dim: usize, i: usize, j: usize, angle: f64, offset: Vec<f64>) -> Result<Self> {
        if i >= dim || j >= dim || i == j {
            return invalid("rotation plane indices out of range");
        }
        let mut linear = vec![0.0; dim * dim];
        for k in 0..dim {
            linear[k * dim + k] = 1.0;
        }
        let (s, c) = angle.sin_cos();
        linear[i * dim + i] = c;
        linear[i * dim + j] = -s;
        linear[j * dim + i] = s;
        linear[j * dim + j] = c;
        Self::new(linear, offset)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|r| {
                let row = &self.linear[r * self.dim..(r + 1) * self.dim];
                row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.offset[r]
            })
            .collect()
    }
}

#[inline]
pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Maximum pairwise distance of `dim`-dimensional points stored row-major.
#[inline]
pub(crate) fn diameter_flat(coords: &[f64], dim: usize) -> f64 {
    let k = coords.len() / dim;
    let mut best2 = 0.0f64;
    for i in 0..k {
        let pi = &coords[i * dim..(i + 1) * dim];
        for j in i + 1..k {
            let pj = &coords[j * dim..(j + 1) * dim];
            let d2: f64 = pi.iter().zip(pj).map(|(a, b)| (a - b) * (a - b)).sum();
            best2 = best2.max(d2);
        }
    }
    best2.sqrt()
}

pub fn diameter(t: &PointTuple) -> Result<f64> {
    if t.len() < 2 {
        return invalid("diameter needs at least two points");
    }
    Ok(diameter_flat(&t.coords, t.dim))
}

/// Volume of the parallelotope spanned by `k` vectors of R^d stored row-major
/// in `vectors` (`k·d` entries). The buffer is overwritten.
pub(crate) fn parallelotope_volume(vectors: &mut [f64], k: usize, d: usize) -> f64 {
    debug_assert!(k <= d && vectors.len() == k * d);
    let mut volume = 1.0;
    for col in 0..k {
        let (head, tail) = vectors.split_at_mut((col + 1) * d);
        let u = &mut head[col * d..];
        let norm = u[col..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        volume *= norm;
        if col + 1 == k {
            break;
        }
        let alpha = if u[col] > 0.0 { -norm } else { norm };
        u[col] -= alpha;
        let unorm2: f64 = u[col..].iter().map(|v| v * v).sum();
        if unorm2 == 0.0 {
            continue;
        }
        for w in tail.chunks_exact_mut(d) {
            let dot: f64 = u[col..].iter().zip(&w[col..]).map(|(a, b)| a * b).sum();
            let scale = 2.0 * dot / unorm2;
            for (wr, ur) in w[col..].iter_mut().zip(&u[col..]) {
                *wr -= scale * ur;
            }
        }
    }
    volume
}

/// `|w_1 ∧ … ∧ w_k|`, the k-volume of the parallelotope spanned by the vectors.
pub fn wedge_norm(vectors: &[&[f64]]) -> Result<f64> {
    let Some(first) = vectors.first() else {
        return invalid("wedge product needs at least one vector");
    };
    let d = first.len();
    if vectors.iter().any(|v| v.len() != d) {
        return invalid("wedge product arguments must share one dimension");
    }
    let k = vectors.len();
    if k > d {
        return invalid(format!("cannot wedge {k} vectors in R^{d}"));
    }
    let mut buf: Vec<f64> = vectors.concat();
    Ok(parallelotope_volume(&mut buf, k, d))
}

/// Volume `ω_n` of the unit ball of R^n.
pub fn unit_ball_volume(n: usize) -> f64 {
    let mut w = [1.0, 2.0];
    for k in 2..=n {
        w[k % 2] *= std::f64::consts::TAU / k as f64;
    }
    w[n % 2]
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// k-volume of the simplex on `k + 1` points: wedge of the edge vectors over k!.
pub fn simplex_volume(t: &PointTuple) -> Result<f64> {
    let k = t.len().saturating_sub(1);
    if k == 0 {
        return Ok(0.0);
    }
    if k > t.dim {
        return invalid(format!("{} points do not span a simplex in R^{}", t.len(), t.dim));
    }
    let base = t.point(0);
    let mut edges = Vec::with_capacity(k * t.dim);
    for p in t.points().skip(1) {
        edges.extend(p.iter().zip(base).map(|(a, b)| a - b));
    }
    Ok(parallelotope_volume(&mut edges, k, t.dim) / factorial(k))
}

/// Triangle measurements shared by the circumradius and Menger curvature.
struct Triangle {
    twice_area: f64,
    sides: [f64; 3],
}

fn triangle(x: &[f64], y: &[f64], z: &[f64]) -> Result<Triangle> {
    let d = x.len();
    if d < 2 || y.len() != d || z.len() != d {
        return invalid("triangle vertices must share a dimension of at least 2");
    }
    let pts = [x, y, z];
    // side[i] is opposite vertex i
    let sides = [dist(y, z), dist(x, z), dist(x, y)];
    if sides.contains(&0.0) {
        return invalid("Menger curvature needs pairwise distinct points");
    }
    // Span the two shortest edges from the vertex opposite the longest side.
    let apex = (0..3).max_by(|&a, &b| sides[a].total_cmp(&sides[b])).unwrap_or(0);
    let (i, j) = ((apex + 1) % 3, (apex + 2) % 3);
    let mut stack = [0.0; 16];
    let mut heap = Vec::new();
    let buf: &mut [f64] = if d <= 8 {
        &mut stack[..2 * d]
    } else {
        heap.resize(2 * d, 0.0);
        &mut heap
    };
    for k in 0..d {
        buf[k] = pts[i][k] - pts[apex][k];
        buf[d + k] = pts[j][k] - pts[apex][k];
    }
    let twice_area = parallelotope_volume(buf, 2, d);
    Ok(Triangle { twice_area, sides })
}

impl Triangle {
    fn is_collinear(&self, tol: f64) -> bool {
        let mut s = self.sides;
        s.sort_by(f64::total_cmp);
        self.twice_area / (s[1] * s[2]) < tol
    }
}

/// Circumradius of three distinct points; `+∞` for collinear triples.
pub fn circumradius(x: &[f64], y: &[f64], z: &[f64]) -> Result<f64> {
    circumradius_with_tol(x, y, z, COLLINEAR_TOL)
}

pub fn circumradius_with_tol(x: &[f64], y: &[f64], z: &[f64], tol: f64) -> Result<f64> {
    let t = triangle(x, y, z)?;
    if t.is_collinear(tol) {
        return Ok(f64::INFINITY);
    }
    let [a, b, c] = t.sides;
    Ok(a * b * c / (2.0 * t.twice_area))
}

/// `c(x, y, z) = 4·Area / (|x−y||y−z||z−x|)`, zero for collinear triples.
pub fn menger_curvature(x: &[f64], y: &[f64], z: &[f64]) -> Result<f64> {
    menger_curvature_with_tol(x, y, z, COLLINEAR_TOL)
}

pub fn menger_curvature_with_tol(x: &[f64], y: &[f64], z: &[f64], tol: f64) -> Result<f64> {
    let t = triangle(x, y, z)?;
    if t.is_collinear(tol) {
        return Ok(0.0);
    }
    let [a, b, c] = t.sides;
    Ok(2.0 * t.twice_area / (a * b * c))
}

/// `K = H^{n+1}(Δ) / diam^{n+2}` for `n + 2` points of R^{n+m}.
pub fn k_kernel(t: &PointTuple) -> Result<f64> {
    if t.len() < 3 {
        return invalid("the kernel needs at least three points");
    }
    let n = t.len() - 2;
    if t.dim < n + 1 {
        return invalid(format!("{} points need ambient dimension at least {}", t.len(), n + 1));
    }
    let diam = diameter(t)?;
    if diam == 0.0 {
        return invalid("all points coincide");
    }
    Ok(simplex_volume(t)? / diam.powi(n as i32 + 2))
}

/// Result of evaluating `K_{p,q}` on one tuple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelValue {
    Value(f64),
    /// All domain points coincide (or the lift is not finite); the sample is skipped.
    Degenerate,
}

impl KernelValue {
    pub fn value(self) -> Option<f64> {
        match self {
            KernelValue::Value(v) => Some(v),
            KernelValue::Degenerate => None,
        }
    }
}

/// `K_{p,q}(x_0,…,x_{n+1}) = H^{n+1}(Δ(F(x_0),…))^p / diam(x_0,…)^{(n+2)q}`
/// with `F(x) = (x, f(x))`. The diameter is measured in the domain R^n.
pub fn k_pq_kernel(points: &PointTuple, f_values: &[f64], params: &EnergyParams) -> Result<KernelValue> {
    let n = params.n();
    if points.dim() != n || points.len() != n + 2 {
        return invalid(format!("K_pq needs {} points of R^{}", n + 2, n));
    }
    if f_values.len() != n + 2 {
        return invalid("one function value per point is required");
    }
    let mut scratch = KernelScratch::new(n);
    Ok(scratch.eval(points.as_flat(), f_values, params.p(), params.q()))
}

/// Reusable buffers for evaluating `K_{p,q}` in hot loops.
#[derive(Debug, Clone)]
pub(crate) struct KernelScratch {
    n: usize,
    edges: Vec<f64>,
    inv_factorial: f64,
}

impl KernelScratch {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            n,
            edges: vec![0.0; (n + 1) * (n + 1)],
            inv_factorial: 1.0 / factorial(n + 1),
        }
    }

    /// Lifted simplex volume of the tuple (row-major `xs`, one value per point).
    ///
    /// The square edge matrix is factored by columns with the value column
    /// last, so rounding in the factorization perturbs the value differences
    /// only relative to their own size and the result is exactly linear in
    /// any shear `v ↦ v + a·x` up to that rounding.
    #[inline]
    pub(crate) fn lifted_volume(&mut self, xs: &[f64], vals: &[f64]) -> f64 {
        let n = self.n;
        let d = n + 1;
        let (x0, v0) = (&xs[..n], vals[0]);
        for i in 1..=d {
            let xi = &xs[i * n..(i + 1) * n];
            for c in 0..n {
                self.edges[c * d + i - 1] = xi[c] - x0[c];
            }
            self.edges[n * d + i - 1] = vals[i] - v0;
        }
        parallelotope_volume(&mut self.edges, d, d) * self.inv_factorial
    }

    #[inline]
    pub(crate) fn eval(&mut self, xs: &[f64], vals: &[f64], p: f64, q: f64) -> KernelValue {
        let n = self.n;
        let diam = diameter_flat(xs, n);
        if diam == 0.0 || vals.iter().any(|v| !v.is_finite()) {
            return KernelValue::Degenerate;
        }
        let vol = self.lifted_volume(xs, vals);
        let k = (vol.powf(p)) / diam.powf((n + 2) as f64 * q);
        if k.is_finite() {
            KernelValue::Value(k)
        } else {
            KernelValue::Degenerate
        }
    }
}
