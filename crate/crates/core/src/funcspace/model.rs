use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};

type ValueFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradientFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Axis-aligned closed box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| *v >= *a && *v <= *b)
    }

    pub fn contains_box(&self, lo: &[f64], hi: &[f64]) -> bool {
        self.contains(lo) && self.contains(hi)
    }

    pub fn diameter(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            lo: self.lo.iter().map(|v| f(*v)).collect(),
            hi: self.hi.iter().map(|v| f(*v)).collect(),
        }
    }
}

/// A scalar function on R^n, either analytic or interpolated from grid samples.
///
/// Models are immutable and cheap to clone. Besides evaluation they carry the
/// metadata the integrators need: the region where evaluation is defined, a
/// box containing the support, a bound on `|f|`, and (in one dimension) the
/// points where the function is not smooth.
#[derive(Clone)]
pub struct FunctionModel {
    dim: usize,
    label: String,
    value: ValueFn,
    gradient: Option<GradientFn>,
    region: Option<BoxRegion>,
    support: Option<BoxRegion>,
    sup_abs: Option<f64>,
    breakpoints: Vec<f64>,
    affine: bool,
    grid_spacing: Option<Vec<f64>>,
}

impl fmt::Debug for FunctionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionModel")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .field("gradient", &self.gradient.is_some())
            .field("region", &self.region)
            .field("support", &self.support)
            .field("sup_abs", &self.sup_abs)
            .finish()
    }
}

impl FunctionModel {
    pub fn analytic(
        dim: usize,
        label: impl Into<String>,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        assert!(dim > 0, "function dimension must be positive");
        Self {
            dim,
            label: label.into(),
            value: Arc::new(value),
            gradient: None,
            region: None,
            support: None,
            sup_abs: None,
            breakpoints: Vec::new(),
            affine: false,
            grid_spacing: None,
        }
    }

    /// `c + a·x`.
    pub fn affine(intercept: f64, slope: Vec<f64>) -> Self {
        let dim = slope.len();
        let g = slope.clone();
        let a = slope.clone();
        let mut m = Self::analytic(dim, "affine", move |x| {
            intercept + x.iter().zip(&a).map(|(u, v)| u * v).sum::<f64>()
        })
        .with_gradient(move |_, out| out.copy_from_slice(&g));
        m.affine = true;
        m
    }

    pub fn with_gradient(mut self, gradient: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    /// Declares that `f` vanishes outside `[lo, hi]`.
    pub fn with_support(mut self, lo: Vec<f64>, hi: Vec<f64>) -> Self {
        self.support = Some(BoxRegion::new(lo, hi));
        self
    }

    /// Declares that evaluation is only defined on `[lo, hi]`.
    pub fn with_region(mut self, lo: Vec<f64>, hi: Vec<f64>) -> Self {
        self.region = Some(BoxRegion::new(lo, hi));
        self
    }

    pub fn with_sup_abs(mut self, bound: f64) -> Self {
        self.sup_abs = Some(bound);
        self
    }

    /// One-dimensional points where the function is not smooth.
    pub fn with_breakpoints(mut self, points: Vec<f64>) -> Self {
        self.breakpoints = points;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn gradient(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        match &self.gradient {
            Some(g) => {
                g(x, out);
                Ok(())
            }
            None => Err(Error::Unsupported(format!("`{}` has no analytic gradient", self.label))),
        }
    }

    /// True when the model is known to be exactly affine.
    pub fn is_affine(&self) -> bool {
        self.affine
    }

    pub fn region(&self) -> Option<&BoxRegion> {
        self.region.as_ref()
    }

    pub fn support(&self) -> Option<&BoxRegion> {
        self.support.as_ref()
    }

    pub fn sup_abs(&self) -> Option<f64> {
        self.sup_abs
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn grid_spacing(&self) -> Option<&[f64]> {
        self.grid_spacing.as_deref()
    }

    /// Whether evaluation is defined on all of `[lo, hi]`.
    pub fn covers(&self, lo: &[f64], hi: &[f64]) -> bool {
        self.region.as_ref().is_none_or(|r| r.contains_box(lo, hi))
    }

    pub fn require_covers(&self, lo: &[f64], hi: &[f64], what: &str) -> Result<()> {
        if self.covers(lo, hi) {
            Ok(())
        } else {
            invalid(format!("{what} leaves the evaluatable region of `{}`", self.label))
        }
    }

    /// `c·f`.
    pub fn scaled(&self, c: f64) -> Self {
        let base = self.value.clone();
        let mut m = self.clone();
        m.value = Arc::new(move |x| c * base(x));
        m.gradient = self.gradient.clone().map(|g| -> GradientFn {
            Arc::new(move |x, out| {
                g(x, out);
                out.iter_mut().for_each(|v| *v *= c);
            })
        });
        m.sup_abs = self.sup_abs.map(|s| s * c.abs());
        if c == 0.0 {
            m.affine = true;
        }
        m.label = format!("{c}*{}", self.label);
        m
    }

    /// `f + b + a·x`.
    pub fn plus_affine(&self, intercept: f64, slope: &[f64]) -> Result<Self> {
        if slope.len() != self.dim {
            return invalid("affine slope dimension differs from the model dimension");
        }
        let base = self.value.clone();
        let a = slope.to_vec();
        let mut m = self.clone();
        m.value = Arc::new(move |x| base(x) + intercept + x.iter().zip(&a).map(|(u, v)| u * v).sum::<f64>());
        let a = slope.to_vec();
        m.gradient = self.gradient.clone().map(|g| -> GradientFn {
            Arc::new(move |x, out| {
                g(x, out);
                out.iter_mut().zip(&a).for_each(|(v, s)| *v += s);
            })
        });
        m.support = None;
        m.sup_abs = None;
        m.label = format!("{}+affine", self.label);
        Ok(m)
    }

    /// `λ^{1+s} f(x/λ)`, the anisotropic rescaling under which the energy and
    /// the seminorm scale by `λ^n`.
    pub fn rescaled(&self, lambda: f64, s: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return invalid("rescaling factor must be positive");
        }
        let amp = lambda.powf(1.0 + s);
        let base = self.value.clone();
        let dim = self.dim;
        let mut m = self.clone();
        m.value = Arc::new(move |x| {
            let mut y = [0.0f64; 8];
            if dim <= 8 {
                for (yi, xi) in y.iter_mut().zip(x) {
                    *yi = xi / lambda;
                }
                amp * base(&y[..dim])
            } else {
                let y: Vec<f64> = x.iter().map(|v| v / lambda).collect();
                amp * base(&y)
            }
        });
        let grad_amp = lambda.powf(s);
        m.gradient = self.gradient.clone().map(|g| -> GradientFn {
            Arc::new(move |x, out| {
                let y: Vec<f64> = x.iter().map(|v| v / lambda).collect();
                g(&y, out);
                out.iter_mut().for_each(|v| *v *= grad_amp);
            })
        });
        m.region = self.region.as_ref().map(|r| r.map(|v| v * lambda));
        m.support = self.support.as_ref().map(|r| r.map(|v| v * lambda));
        m.sup_abs = self.sup_abs.map(|v| v * amp);
        m.breakpoints = self.breakpoints.iter().map(|b| b * lambda).collect();
        m.grid_spacing = self
            .grid_spacing
            .as_ref()
            .map(|h| h.iter().map(|v| v * lambda).collect());
        m.label = format!("{}@{lambda}", self.label);
        Ok(m)
    }

    /// `f(x − c)`.
    pub fn translated(&self, c: &[f64]) -> Result<Self> {
        if c.len() != self.dim {
            return invalid("translation dimension differs from the model dimension");
        }
        let base = self.value.clone();
        let shift = c.to_vec();
        let mut m = self.clone();
        m.value = Arc::new(move |x| {
            let y: Vec<f64> = x.iter().zip(&shift).map(|(a, b)| a - b).collect();
            base(&y)
        });
        let shift = c.to_vec();
        m.gradient = self.gradient.clone().map(|g| -> GradientFn {
            Arc::new(move |x, out| {
                let y: Vec<f64> = x.iter().zip(&shift).map(|(a, b)| a - b).collect();
                g(&y, out);
            })
        });
        let tr = |r: &BoxRegion| BoxRegion {
            lo: r.lo.iter().zip(c).map(|(a, b)| a + b).collect(),
            hi: r.hi.iter().zip(c).map(|(a, b)| a + b).collect(),
        };
        m.region = self.region.as_ref().map(tr);
        m.support = self.support.as_ref().map(tr);
        if self.dim == 1 {
            m.breakpoints = self.breakpoints.iter().map(|b| b + c[0]).collect();
        }
        Ok(m)
    }
}

/// Samples on a uniform tensor grid, interpolated multilinearly.
#[derive(Debug, Clone, PartialEq)]
pub struct GridData {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Nodes per axis (at least 2).
    pub counts: Vec<usize>,
    /// Row-major values, last axis fastest.
    pub values: Vec<f64>,
}

impl GridData {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, counts: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let n = lo.len();
        if n == 0 || hi.len() != n || counts.len() != n {
            return invalid("grid bounds and counts must share one positive dimension");
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(b > a)) {
            return invalid("grid extents must be positive");
        }
        if counts.iter().any(|c| *c < 2) {
            return invalid("a grid needs at least two nodes per axis");
        }
        if values.len() != counts.iter().product::<usize>() {
            return invalid("grid value count does not match the node counts");
        }
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("grid values must be finite");
        }
        Ok(Self { lo, hi, counts, values })
    }

    /// Samples `f` on the grid.
    pub fn sample(f: &FunctionModel, lo: Vec<f64>, hi: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        let total: usize = counts.iter().product();
        let n = lo.len();
        let mut values = Vec::with_capacity(total);
        let mut x = vec![0.0; n];
        for flat in 0..total {
            let mut rem = flat;
            for axis in (0..n).rev() {
                let i = rem % counts[axis];
                rem /= counts[axis];
                x[axis] = node(lo[axis], hi[axis], counts[axis], i);
            }
            values.push(f.value(&x));
        }
        Self::new(lo, hi, counts, values)
    }

    pub fn spacing(&self) -> Vec<f64> {
        (0..self.lo.len())
            .map(|a| (self.hi[a] - self.lo[a]) / (self.counts[a] - 1) as f64)
            .collect()
    }

    fn interpolate(&self, x: &[f64]) -> f64 {
        let n = self.lo.len();
        let mut base = 0usize;
        let mut frac = [0.0f64; 8];
        let mut strides = [0usize; 8];
        let mut stride = 1usize;
        for axis in (0..n).rev() {
            let (a, b, c) = (self.lo[axis], self.hi[axis], self.counts[axis]);
            let v = x[axis];
            if !(v >= a && v <= b) {
                return f64::NAN;
            }
            let u = (v - a) / (b - a) * (c - 1) as f64;
            let i = (u.floor() as usize).min(c - 2);
            frac[axis] = u - i as f64;
            strides[axis] = stride;
            base += i * stride;
            stride *= c;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut idx = base;
            for axis in 0..n {
                if corner >> axis & 1 == 1 {
                    w *= frac[axis];
                    idx += strides[axis];
                } else {
                    w *= 1.0 - frac[axis];
                }
            }
            if w != 0.0 {
                acc += w * self.values[idx];
            }
        }
        acc
    }

    /// Box of cells touching a nonzero node, or `None` if every node is nonzero
    /// on the grid boundary.
    fn support_box(&self) -> Option<BoxRegion> {
        let n = self.lo.len();
        let mut lo_idx = self.counts.clone();
        let mut hi_idx = vec![0usize; n];
        let mut any = false;
        for (flat, v) in self.values.iter().enumerate() {
            if *v == 0.0 {
                continue;
            }
            any = true;
            let mut rem = flat;
            for axis in (0..n).rev() {
                let i = rem % self.counts[axis];
                rem /= self.counts[axis];
                lo_idx[axis] = lo_idx[axis].min(i);
                hi_idx[axis] = hi_idx[axis].max(i);
            }
        }
        if !any {
            return Some(BoxRegion::new(self.lo.clone(), self.lo.clone()));
        }
        let interior = (0..n).all(|a| lo_idx[a] > 0 && hi_idx[a] + 1 < self.counts[a]);
        interior.then(|| BoxRegion {
            lo: (0..n)
                .map(|a| node(self.lo[a], self.hi[a], self.counts[a], lo_idx[a] - 1))
                .collect(),
            hi: (0..n)
                .map(|a| node(self.lo[a], self.hi[a], self.counts[a], hi_idx[a] + 1))
                .collect(),
        })
    }
}

fn node(lo: f64, hi: f64, count: usize, i: usize) -> f64 {
    if i + 1 == count {
        hi
    } else {
        lo + (hi - lo) * i as f64 / (count - 1) as f64
    }
}

impl FunctionModel {
    /// Multilinear interpolant of grid samples, defined on the grid hull only
    /// (`NaN` outside).
    pub fn grid(data: GridData) -> Self {
        let n = data.lo.len();
        assert!(n <= 8, "grid models support at most 8 dimensions");
        let sup = data.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let spacing = data.spacing();
        let support = data.support_box();
        let breakpoints = if n == 1 {
            (0..data.counts[0])
                .map(|i| node(data.lo[0], data.hi[0], data.counts[0], i))
                .collect()
        } else {
            Vec::new()
        };
        let (lo, hi) = (data.lo.clone(), data.hi.clone());
        let data = Arc::new(data);
        let mut m = Self::analytic(n, "grid", move |x| data.interpolate(x))
            .with_region(lo, hi)
            .with_sup_abs(sup)
            .with_breakpoints(breakpoints);
        m.support = support;
        m.grid_spacing = Some(spacing);
        m
    }
}
