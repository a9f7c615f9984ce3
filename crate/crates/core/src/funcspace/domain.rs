use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::unit_ball_volume;
use crate::rng::SampleDraws;

/// The open set `U`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Domain {
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    /// A bounding box standing in for all of R^n. Test functions must be
    /// supported at distance at least `margin` from its boundary.
    TruncatedFullSpace {
        lo: Vec<f64>,
        hi: Vec<f64>,
        margin: f64,
    },
}

/// The set `H_x = {h : x + h ∈ U, x − h ∈ U}`.
#[derive(Debug, Clone, PartialEq)]
pub enum HSet {
    /// `∏ (−m_i, m_i)`.
    Box { half_widths: Vec<f64> },
    /// Intersection of `B(c − x, R)` and `B(x − c, R)` for a ball domain.
    Lens { offset: Vec<f64>, radius: f64 },
}

impl HSet {
    pub fn contains(&self, h: &[f64]) -> bool {
        match self {
            HSet::Box { half_widths } => h.iter().zip(half_widths).all(|(v, m)| v.abs() < *m),
            HSet::Lens { offset, radius } => {
                let (mut a, mut b) = (0.0, 0.0);
                for (v, o) in h.iter().zip(offset) {
                    a += (v - o) * (v - o);
                    b += (v + o) * (v + o);
                }
                a < radius * radius && b < radius * radius
            }
        }
    }

    /// Radius of the largest centered ball inside the set.
    pub fn inscribed_radius(&self) -> f64 {
        match self {
            HSet::Box { half_widths } => half_widths.iter().copied().fold(f64::INFINITY, f64::min),
            HSet::Lens { offset, radius } => radius - norm(offset),
        }
    }

    /// Radius of the smallest centered ball containing the set.
    pub fn outer_radius(&self) -> f64 {
        match self {
            HSet::Box { half_widths } => norm(half_widths),
            HSet::Lens { offset, radius } => {
                let d = norm(offset);
                (radius * radius - d * d).max(0.0).sqrt()
            }
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn check_box(lo: &[f64], hi: &[f64]) -> Result<()> {
    if lo.is_empty() || lo.len() != hi.len() {
        return invalid("box bounds must be nonempty and of equal length");
    }
    if lo.iter().chain(hi).any(|v| !v.is_finite()) {
        return invalid("box bounds must be finite");
    }
    if lo.iter().zip(hi).any(|(a, b)| b <= a) {
        return invalid("box edges must have positive length");
    }
    Ok(())
}

impl Domain {
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::new_box(vec![a], vec![b])
    }

    /// The cube `(a, b)^n`.
    pub fn cube(n: usize, a: f64, b: f64) -> Result<Self> {
        Self::new_box(vec![a; n], vec![b; n])
    }

    pub fn new_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_box(&lo, &hi)?;
        Ok(Domain::Box { lo, hi })
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() || center.iter().any(|v| !v.is_finite()) {
            return invalid("ball center must be a finite point");
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return invalid("ball radius must be positive");
        }
        Ok(Domain::Ball { center, radius })
    }

    pub fn truncated_full_space(lo: Vec<f64>, hi: Vec<f64>, margin: f64) -> Result<Self> {
        check_box(&lo, &hi)?;
        let min_half = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| 0.5 * (b - a))
            .fold(f64::INFINITY, f64::min);
        if !(margin > 0.0 && margin < min_half) {
            return invalid("support margin must be positive and below half the box width");
        }
        Ok(Domain::TruncatedFullSpace { lo, hi, margin })
    }

    /// Parses `a,b[,a2,b2,…]` (a box; a single pair is repeated for every
    /// axis), `ball:c_1,…,c_n,r`, or `full:a,b[,…],margin`.
    pub fn parse(desc: &str, n: usize) -> Result<Self> {
        let nums = |s: &str| -> Result<Vec<f64>> {
            s.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad number `{t}` in domain `{desc}`")))
                })
                .collect()
        };
        let pairs = |v: &[f64]| -> Result<(Vec<f64>, Vec<f64>)> {
            if v.len() == 2 {
                Ok((vec![v[0]; n], vec![v[1]; n]))
            } else if v.len() == 2 * n {
                Ok((
                    v.iter().step_by(2).copied().collect(),
                    v.iter().skip(1).step_by(2).copied().collect(),
                ))
            } else {
                Err(Error::Parse(format!("domain `{desc}` needs 2 or {} bounds", 2 * n)))
            }
        };
        if let Some(rest) = desc.strip_prefix("ball:") {
            let v = nums(rest)?;
            if v.len() != n + 1 {
                return Err(Error::Parse(format!(
                    "ball domain needs {n} center coordinates and a radius"
                )));
            }
            return Self::ball(v[..n].to_vec(), v[n]);
        }
        if let Some(rest) = desc.strip_prefix("full:") {
            let v = nums(rest)?;
            let Some((margin, bounds)) = v.split_last() else {
                return Err(Error::Parse("empty full-space domain".into()));
            };
            let (lo, hi) = pairs(bounds)?;
            return Self::truncated_full_space(lo, hi, *margin);
        }
        let (lo, hi) = pairs(&nums(desc.strip_prefix("box:").unwrap_or(desc))?)?;
        Self::new_box(lo, hi)
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Box { lo, .. } | Domain::TruncatedFullSpace { lo, .. } => lo.len(),
            Domain::Ball { center, .. } => center.len(),
        }
    }

    pub fn represents_full_space(&self) -> bool {
        matches!(self, Domain::TruncatedFullSpace { .. })
    }

    /// Support margin of a truncated full-space domain.
    pub fn margin(&self) -> Option<f64> {
        match self {
            Domain::TruncatedFullSpace { margin, .. } => Some(*margin),
            _ => None,
        }
    }

    /// Axis-aligned bounding box.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Domain::Box { lo, hi } | Domain::TruncatedFullSpace { lo, hi, .. } => (lo.clone(), hi.clone()),
            Domain::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
        }
    }

    /// Membership in the open set.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Domain::Box { lo, hi } | Domain::TruncatedFullSpace { lo, hi, .. } => {
                x.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| *v > *a && *v < *b)
            }
            Domain::Ball { center, radius } => {
                x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() < radius * radius
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Domain::Box { lo, hi } | Domain::TruncatedFullSpace { lo, hi, .. } => {
                lo.iter().zip(hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
            }
            Domain::Ball { radius, .. } => 2.0 * radius,
        }
    }

    /// Lebesgue measure.
    pub fn volume(&self) -> f64 {
        match self {
            Domain::Box { lo, hi } | Domain::TruncatedFullSpace { lo, hi, .. } => {
                lo.iter().zip(hi).map(|(a, b)| b - a).product()
            }
            Domain::Ball { center, radius } => unit_ball_volume(center.len()) * radius.powi(center.len() as i32),
        }
    }

    /// Uniform point of the domain.
    pub fn sample(&self, draws: &mut SampleDraws, out: &mut [f64]) {
        match self {
            Domain::Box { lo, hi } | Domain::TruncatedFullSpace { lo, hi, .. } => {
                for ((o, a), b) in out.iter_mut().zip(lo).zip(hi) {
                    *o = a + (b - a) * draws.uniform();
                }
            }
            Domain::Ball { center, radius } => {
                draws.in_ball(*radius, out);
                out.iter_mut().zip(center).for_each(|(o, c)| *o += c);
            }
        }
    }

    /// The box (or lens) of admissible second-difference offsets at `x`.
    pub fn h_box(&self, x: &[f64]) -> Result<HSet> {
        if x.len() != self.dim() {
            return invalid("point dimension differs from the domain dimension");
        }
        if !self.contains(x) {
            return invalid("h_box requires x inside the domain");
        }
        Ok(match self {
            Domain::Box { lo, hi } | Domain::TruncatedFullSpace { lo, hi, .. } => HSet::Box {
                half_widths: x
                    .iter()
                    .zip(lo.iter().zip(hi))
                    .map(|(v, (a, b))| (v - a).min(b - v))
                    .collect(),
            },
            Domain::Ball { center, radius } => HSet::Lens {
                offset: center.iter().zip(x).map(|(c, v)| c - v).collect(),
                radius: *radius,
            },
        })
    }

    /// The same domain mapped by `x ↦ λx`.
    pub fn dilated(&self, lambda: f64) -> Self {
        let sc = |v: &Vec<f64>| v.iter().map(|a| a * lambda).collect::<Vec<_>>();
        match self {
            Domain::Box { lo, hi } => Domain::Box { lo: sc(lo), hi: sc(hi) },
            Domain::Ball { center, radius } => Domain::Ball {
                center: sc(center),
                radius: radius * lambda,
            },
            Domain::TruncatedFullSpace { lo, hi, margin } => Domain::TruncatedFullSpace {
                lo: sc(lo),
                hi: sc(hi),
                margin: margin * lambda,
            },
        }
    }

    /// The same domain shifted by `c`.
    pub fn translated(&self, c: &[f64]) -> Self {
        let tr = |v: &Vec<f64>| v.iter().zip(c).map(|(a, b)| a + b).collect::<Vec<_>>();
        match self {
            Domain::Box { lo, hi } => Domain::Box { lo: tr(lo), hi: tr(hi) },
            Domain::Ball { center, radius } => Domain::Ball {
                center: tr(center),
                radius: *radius,
            },
            Domain::TruncatedFullSpace { lo, hi, margin } => Domain::TruncatedFullSpace {
                lo: tr(lo),
                hi: tr(hi),
                margin: *margin,
            },
        }
    }

    /// `Some((a, b))` for one-dimensional domains.
    pub fn as_interval(&self) -> Option<(f64, f64)> {
        if self.dim() != 1 {
            return None;
        }
        let (lo, hi) = self.bounding_box();
        Some((lo[0], hi[0]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;
    use proptest::prelude::*;

    #[test]
    fn h_box_examples() {
        let u = Domain::interval(0.0, 1.0).unwrap();
        assert_eq!(
            u.h_box(&[0.25]).unwrap(),
            HSet::Box {
                half_widths: vec![0.25]
            }
        );
        let sq = Domain::cube(2, 0.0, 1.0).unwrap();
        match sq.h_box(&[0.5, 0.9]).unwrap() {
            HSet::Box { half_widths } => {
                assert_eq!(half_widths[0], 0.5);
                assert!((half_widths[1] - 0.1).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
        let ball = Domain::ball(vec![0.0, 0.0], 1.0).unwrap();
        let h = ball.h_box(&[0.0, 0.0]).unwrap();
        assert_eq!(h.inscribed_radius(), 1.0);
        assert_eq!(h.outer_radius(), 1.0);
        assert!(h.contains(&[0.6, -0.7]));
        assert!(!h.contains(&[0.8, 0.7]));
        assert!(u.h_box(&[1.5]).is_err());
    }

    #[test]
    fn parse_descriptors() {
        assert_eq!(Domain::parse("0,1", 1).unwrap(), Domain::interval(0.0, 1.0).unwrap());
        assert_eq!(Domain::parse("0,1", 2).unwrap(), Domain::cube(2, 0.0, 1.0).unwrap());
        assert_eq!(
            Domain::parse("0,1,-2,2", 2).unwrap(),
            Domain::new_box(vec![0.0, -2.0], vec![1.0, 2.0]).unwrap()
        );
        assert_eq!(
            Domain::parse("ball:0,0,2", 2).unwrap(),
            Domain::ball(vec![0.0, 0.0], 2.0).unwrap()
        );
        assert!(Domain::parse("full:-1,1,0.25", 1).unwrap().represents_full_space());
        assert!(Domain::parse("1,0", 1).is_err());
        assert!(Domain::parse("0,x", 1).is_err());
    }

    #[test]
    fn ball_samples_stay_inside() {
        let u = Domain::ball(vec![1.0, -1.0, 0.5], 0.3).unwrap();
        let rng = CounterRng::new(3);
        let mut x = [0.0; 3];
        for i in 0..2000 {
            u.sample(&mut rng.sample(i), &mut x);
            assert!(u.contains(&x));
        }
    }

    proptest! {
        #[test]
        fn h_box_is_symmetric_and_admissible(
            x in prop::collection::vec(0.001f64..0.999, 2),
            u in prop::collection::vec(-1.0f64..1.0, 2),
        ) {
            let dom = Domain::new_box(vec![0.0, 0.0], vec![1.0, 2.0]).unwrap();
            let x = vec![x[0], 2.0 * x[1]];
            let hs = dom.h_box(&x).unwrap();
            let HSet::Box { half_widths } = &hs else { unreachable!() };
            let h: Vec<f64> = u.iter().zip(half_widths).map(|(t, m)| 0.999 * t * m).collect();
            let neg: Vec<f64> = h.iter().map(|v| -v).collect();
            prop_assert!(hs.contains(&h) && hs.contains(&neg));
            let plus: Vec<f64> = x.iter().zip(&h).map(|(a, b)| a + b).collect();
            let minus: Vec<f64> = x.iter().zip(&h).map(|(a, b)| a - b).collect();
            prop_assert!(dom.contains(&plus) && dom.contains(&minus));
        }

        #[test]
        fn lens_membership_matches_definition(
            x in prop::collection::vec(-0.7f64..0.7, 2),
            h in prop::collection::vec(-2.0f64..2.0, 2),
        ) {
            let dom = Domain::ball(vec![0.0, 0.0], 1.0).unwrap();
            prop_assume!(dom.contains(&x));
            let hs = dom.h_box(&x).unwrap();
            let plus: Vec<f64> = x.iter().zip(&h).map(|(a, b)| a + b).collect();
            let minus: Vec<f64> = x.iter().zip(&h).map(|(a, b)| a - b).collect();
            prop_assert_eq!(hs.contains(&h), dom.contains(&plus) && dom.contains(&minus));
            let r = norm(&h);
            if r < hs.inscribed_radius() { prop_assert!(hs.contains(&h)); }
            if r > hs.outer_radius() { prop_assert!(!hs.contains(&h)); }
        }
    }
}
