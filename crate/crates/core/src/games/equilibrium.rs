//! Equilibrium sets `EQ(θ)` and distances between them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::strategy::StrategyProfile;

/// Number of sampled members used when a distance has no closed form.
pub const HAUSDORFF_SAMPLES: usize = 256;

/// Box kinds with more free coordinates than this are not vertex-enumerated.
const MAX_VERTEX_DIM: usize = 12;

/// A description of the equilibrium set of a game under some belief.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EquilibriumSet {
    /// A unique equilibrium.
    Point { q: StrategyProfile },
    /// All profiles with every flattened coordinate between `lo` and `hi`.
    Box {
        lo: StrategyProfile,
        hi: StrategyProfile,
    },
    /// The segment of profiles `from + t (to - from)`, `t ∈ [0, 1]`.
    Line {
        from: StrategyProfile,
        to: StrategyProfile,
    },
    /// Finitely many isolated equilibria.
    FiniteList { points: Vec<StrategyProfile> },
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

impl EquilibriumSet {
    fn dims(&self) -> Vec<usize> {
        match self {
            EquilibriumSet::Point { q } => q.dims(),
            EquilibriumSet::Box { lo, .. } => lo.dims(),
            EquilibriumSet::Line { from, .. } => from.dims(),
            EquilibriumSet::FiniteList { points } => points[0].dims(),
        }
    }

    fn unflatten(&self, flat: &[f64]) -> StrategyProfile {
        StrategyProfile::from_flat(flat, &self.dims()).expect("dimensions match")
    }

    /// True for the convex kinds (point, box, line).
    pub fn is_convex(&self) -> bool {
        !matches!(self, EquilibriumSet::FiniteList { .. })
    }

    /// True when the set contains exactly one profile.
    pub fn is_singleton(&self) -> bool {
        match self {
            EquilibriumSet::Point { .. } => true,
            EquilibriumSet::Box { lo, hi } => lo == hi,
            EquilibriumSet::Line { from, to } => from == to,
            EquilibriumSet::FiniteList { points } => points.len() == 1,
        }
    }

    /// Euclidean projection of `q` onto the set.
    pub fn nearest(&self, q: &StrategyProfile) -> StrategyProfile {
        let x = q.flat();
        match self {
            EquilibriumSet::Point { q } => q.clone(),
            EquilibriumSet::Box { lo, hi } => {
                let p: Vec<f64> = x
                    .iter()
                    .zip(lo.flat().iter().zip(hi.flat()))
                    .map(|(v, (l, h))| v.clamp(*l, h))
                    .collect();
                self.unflatten(&p)
            }
            EquilibriumSet::Line { from, to } => {
                let a = from.flat();
                let b = to.flat();
                let d: Vec<f64> = b.iter().zip(&a).map(|(u, v)| u - v).collect();
                let dd: f64 = d.iter().map(|v| v * v).sum();
                let t = if dd == 0.0 {
                    0.0
                } else {
                    (x.iter().zip(&a).zip(&d).map(|((v, a), d)| (v - a) * d).sum::<f64>() / dd)
                        .clamp(0.0, 1.0)
                };
                let p: Vec<f64> = a.iter().zip(&d).map(|(a, d)| a + t * d).collect();
                self.unflatten(&p)
            }
            EquilibriumSet::FiniteList { points } => points
                .iter()
                .min_by(|u, v| u.distance(q).total_cmp(&v.distance(q)))
                .expect("finite list is non-empty")
                .clone(),
        }
    }

    /// Euclidean distance from `q` to the set.
    pub fn distance(&self, q: &StrategyProfile) -> f64 {
        dist(&self.nearest(q).flat(), &q.flat())
    }

    /// True when `q` lies within `tol` of the set.
    pub fn contains(&self, q: &StrategyProfile, tol: f64) -> bool {
        self.distance(q) <= tol
    }

    /// A canonical member: the point, the box center, the segment midpoint,
    /// or the first listed equilibrium.
    pub fn representative(&self) -> StrategyProfile {
        match self {
            EquilibriumSet::Point { q } => q.clone(),
            EquilibriumSet::Box { lo, hi } => {
                let c: Vec<f64> = lo
                    .flat()
                    .iter()
                    .zip(hi.flat())
                    .map(|(l, h)| 0.5 * (l + h))
                    .collect();
                self.unflatten(&c)
            }
            EquilibriumSet::Line { from, to } => {
                let c: Vec<f64> = from
                    .flat()
                    .iter()
                    .zip(to.flat())
                    .map(|(a, b)| 0.5 * (a + b))
                    .collect();
                self.unflatten(&c)
            }
            EquilibriumSet::FiniteList { points } => points[0].clone(),
        }
    }

    /// Extreme points of a convex kind, or all members of a finite list.
    pub fn vertices(&self) -> Vec<StrategyProfile> {
        match self {
            EquilibriumSet::Point { q } => vec![q.clone()],
            EquilibriumSet::Box { lo, hi } => {
                let l = lo.flat();
                let h = hi.flat();
                let free: Vec<usize> = (0..l.len()).filter(|&k| h[k] > l[k]).collect();
                if free.len() > MAX_VERTEX_DIM {
                    return vec![lo.clone(), hi.clone()];
                }
                (0..1usize << free.len())
                    .map(|mask| {
                        let mut v = l.clone();
                        for (bit, &k) in free.iter().enumerate() {
                            if mask >> bit & 1 == 1 {
                                v[k] = h[k];
                            }
                        }
                        self.unflatten(&v)
                    })
                    .collect()
            }
            EquilibriumSet::Line { from, to } => vec![from.clone(), to.clone()],
            EquilibriumSet::FiniteList { points } => points.clone(),
        }
    }

    /// Draws `n` members (uniform on boxes and segments; cycling through lists).
    pub fn sample_members<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<StrategyProfile> {
        (0..n)
            .map(|k| match self {
                EquilibriumSet::Point { q } => q.clone(),
                EquilibriumSet::Box { lo, hi } => {
                    let p: Vec<f64> = lo
                        .flat()
                        .iter()
                        .zip(hi.flat())
                        .map(|(l, h)| if h > *l { rng.gen_range(*l..=h) } else { *l })
                        .collect();
                    self.unflatten(&p)
                }
                EquilibriumSet::Line { from, to } => {
                    let t: f64 = rng.gen();
                    let p: Vec<f64> = from
                        .flat()
                        .iter()
                        .zip(to.flat())
                        .map(|(a, b)| a + t * (b - a))
                        .collect();
                    self.unflatten(&p)
                }
                EquilibriumSet::FiniteList { points } => points[k % points.len()].clone(),
            })
            .collect()
    }

    /// Members on a regular grid with `resolution` points along each free
    /// direction (boxes, segments); points and lists return all members.
    pub fn grid_members(&self, resolution: usize) -> Vec<StrategyProfile> {
        let r = resolution.max(2);
        match self {
            EquilibriumSet::Box { lo, hi } => {
                let l = lo.flat();
                let h = hi.flat();
                let free: Vec<usize> = (0..l.len()).filter(|&k| h[k] > l[k]).collect();
                let total = r.pow(free.len() as u32);
                (0..total)
                    .map(|mut idx| {
                        let mut v = l.clone();
                        for &k in &free {
                            let step = idx % r;
                            idx /= r;
                            v[k] = l[k] + (h[k] - l[k]) * step as f64 / (r - 1) as f64;
                        }
                        self.unflatten(&v)
                    })
                    .collect()
            }
            EquilibriumSet::Line { from, to } => {
                let a = from.flat();
                let b = to.flat();
                (0..r)
                    .map(|k| {
                        let t = k as f64 / (r - 1) as f64;
                        let p: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + t * (y - x)).collect();
                        self.unflatten(&p)
                    })
                    .collect()
            }
            _ => self.vertices(),
        }
    }

    /// One-sided excess `sup_{a ∈ self} d(a, other)`.
    ///
    /// Exact whenever `other` is convex (the supremum of a convex function over
    /// a polytope is attained at a vertex) or both sets are finite; otherwise
    /// evaluated on [`HAUSDORFF_SAMPLES`] sampled members plus the vertices.
    pub fn excess(&self, other: &EquilibriumSet) -> f64 {
        let candidates = if other.is_convex() || !self.is_convex() {
            self.vertices()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_ba5e);
            let mut c = self.sample_members(HAUSDORFF_SAMPLES, &mut rng);
            c.extend(self.vertices());
            c
        };
        candidates
            .iter()
            .map(|a| other.distance(a))
            .fold(0.0, f64::max)
    }

    /// Hausdorff distance between two equilibrium sets.
    pub fn hausdorff(&self, other: &EquilibriumSet) -> f64 {
        self.excess(other).max(other.excess(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[f64]) -> StrategyProfile {
        StrategyProfile::scalars(v)
    }

    #[test]
    fn distances_to_each_kind() {
        let point = EquilibriumSet::Point { q: p(&[1.0, 1.0]) };
        assert!((point.distance(&p(&[4.0, 5.0])) - 5.0).abs() < 1e-15);

        let bx = EquilibriumSet::Box {
            lo: p(&[0.0, 0.0]),
            hi: p(&[0.0, 3.0]),
        };
        assert_eq!(bx.distance(&p(&[0.0, 2.0])), 0.0);
        assert!((bx.distance(&p(&[1.0, 4.0])) - 2f64.sqrt()).abs() < 1e-15);

        let line = EquilibriumSet::Line {
            from: p(&[0.5, 1.0]),
            to: p(&[2.0, 2.5]),
        };
        assert!(line.distance(&p(&[1.0, 1.5])) < 1e-15);
        assert!((line.distance(&p(&[1.0, 1.0])) - 0.125f64.sqrt()).abs() < 1e-15);

        let list = EquilibriumSet::FiniteList {
            points: vec![p(&[0.0, 0.0]), p(&[3.0, 4.0])],
        };
        assert!((list.distance(&p(&[3.0, 3.0])) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hausdorff_of_nested_boxes_is_one_sided() {
        let small = EquilibriumSet::Box {
            lo: p(&[0.0, 0.0]),
            hi: p(&[0.0, 1.0]),
        };
        let big = EquilibriumSet::Box {
            lo: p(&[0.0, 0.0]),
            hi: p(&[0.0, 3.0]),
        };
        assert_eq!(small.excess(&big), 0.0);
        assert_eq!(big.excess(&small), 2.0);
        assert_eq!(small.hausdorff(&big), 2.0);
    }

    #[test]
    fn grid_members_cover_segment_endpoints() {
        let line = EquilibriumSet::Line {
            from: p(&[0.5, 1.0]),
            to: p(&[2.0, 2.5]),
        };
        let g = line.grid_members(4);
        assert_eq!(g.len(), 4);
        assert_eq!(g[0], p(&[0.5, 1.0]));
        assert_eq!(g[3], p(&[2.0, 2.5]));
    }
}
