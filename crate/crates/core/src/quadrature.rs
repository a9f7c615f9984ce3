//! Gauss-Legendre rules and panel layouts for singular one-dimensional integrands.

use std::sync::OnceLock;

/// Nodes and weights of the `order`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Shared rule of a commonly used order.
    pub fn cached(order: usize) -> &'static GaussLegendre {
        static RULES: OnceLock<Vec<GaussLegendre>> = OnceLock::new();
        let rules = RULES.get_or_init(|| (1..=64).map(GaussLegendre::new).collect());
        assert!((1..=64).contains(&order), "cached orders are 1..=64");
        &rules[order - 1]
    }

    /// `(node, weight)` pairs mapped onto `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.on(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Panels `[lo, hi]` split geometrically toward `lo`: the top panel is
/// `[lo + w/2, hi]`, then `[lo + w/4, lo + w/2]`, ... for `levels` halvings,
/// and a final panel `[lo, lo + w/2^levels]` (omitted when `include_bottom`
/// is false). Each geometric level is further split into `sub` equal pieces.
pub fn geometric_panels(lo: f64, hi: f64, levels: usize, sub: usize, include_bottom: bool) -> Vec<(f64, f64)> {
    let width = hi - lo;
    let mut panels = Vec::with_capacity(levels * sub + 1);
    let mut upper = width;
    for _ in 0..levels {
        let lower = 0.5 * upper;
        let step = (upper - lower) / sub as f64;
        for k in 0..sub {
            panels.push((lo + lower + step * k as f64, lo + lower + step * (k + 1) as f64));
        }
        upper = lower;
    }
    if include_bottom {
        panels.push((lo, lo + upper));
    }
    panels
}

/// Splits `[a, b]` at the given interior breakpoints and grades each piece
/// geometrically toward every breakpoint it touches.
pub fn graded_panels(a: f64, b: f64, breakpoints: &[f64], base: usize, grade: usize) -> Vec<(f64, f64)> {
    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|c| *c > a && *c < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(a);
    edges.extend(cuts.iter().copied());
    edges.push(b);
    let is_break = |x: f64| cuts.contains(&x);

    let mut panels = Vec::new();
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        match (is_break(lo), is_break(hi)) {
            (false, false) => {
                let step = (hi - lo) / base as f64;
                panels.extend((0..base).map(|k| (lo + step * k as f64, lo + step * (k + 1) as f64)));
            }
            (true, false) => panels.extend(geometric_panels(lo, hi, grade, 1, true)),
            (false, true) => panels.extend(
                geometric_panels(-hi, -lo, grade, 1, true)
                    .into_iter()
                    .map(|(x, y)| (-y, -x)),
            ),
            (true, true) => {
                let mid = 0.5 * (lo + hi);
                panels.extend(
                    geometric_panels(-mid, -lo, grade, 1, true)
                        .into_iter()
                        .map(|(x, y)| (-y, -x)),
                );
                panels.extend(geometric_panels(mid, hi, grade, 1, true));
            }
        }
    }
    panels.sort_by(|x, y| x.0.total_cmp(&y.0));
    panels
}
