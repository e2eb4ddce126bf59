//! Truncated computational grids on [−L, L] × ω with Dirichlet walls.

use crate::cross_section::CrossSection;
use crate::error::{input, Error, Result};

/// Fewest interior transverse nodes per axis accepted by default.
pub const MIN_TRANSVERSE_NODES: usize = 8;

/// Interior nodes of a tensor grid on the bounding box of ω, restricted to ω.
#[derive(Debug, Clone, PartialEq)]
pub struct TransverseGrid {
    /// Node coordinates u ∈ ℝ^{d−1}.
    pub points: Vec<Vec<f64>>,
    /// Spacing per axis.
    pub spacing: Vec<f64>,
    /// Per node and axis: neighbour index in the (−, +) direction, `None` on a wall.
    pub neighbours: Vec<Vec<(Option<usize>, Option<usize>)>>,
    /// Coordinates of the wall positions in the (−, +) direction per node and axis,
    /// used when a coefficient is needed on a boundary face.
    pub wall_points: Vec<Vec<(Vec<f64>, Vec<f64>)>>,
}

impl TransverseGrid {
    /// Nodes with spacing close to `spacing` (each box side is split into a whole
    /// number of intervals). Requires `min_nodes` interior nodes along every axis.
    pub fn new(omega: &CrossSection, spacing: f64, min_nodes: usize) -> Result<Self> {
        if !(spacing > 0.0) {
            return input("transverse spacing must be positive");
        }
        let bbox = omega.bounding_box();
        let counts: Vec<usize> = bbox
            .iter()
            .map(|(lo, hi)| ((hi - lo) / spacing).round().max(1.0) as usize)
            .collect();
        for &c in &counts {
            if c < min_nodes + 1 {
                return Err(Error::Resolution(format!(
                    "{} interior transverse nodes along an axis, need at least {min_nodes}",
                    c.saturating_sub(1)
                )));
            }
        }
        let steps: Vec<f64> = bbox.iter().zip(&counts).map(|((lo, hi), c)| (hi - lo) / *c as f64).collect();
        let coord = |axis: usize, i: usize| bbox[axis].0 + i as f64 * steps[axis];
        let dims = bbox.len();
        let mut total = 1usize;
        for c in &counts {
            total *= c - 1;
        }
        let multi = |mut flat: usize| -> Vec<usize> {
            (0..dims)
                .map(|a| {
                    let i = flat % (counts[a] - 1) + 1;
                    flat /= counts[a] - 1;
                    i
                })
                .collect()
        };
        let flat = |idx: &[usize]| -> usize {
            let mut f = 0;
            for a in (0..dims).rev() {
                f = f * (counts[a] - 1) + (idx[a] - 1);
            }
            f
        };
        let full = matches!(omega, CrossSection::Interval { .. } | CrossSection::Rectangle { .. });
        let mut node_of = vec![usize::MAX; total];
        let mut points = Vec::new();
        let mut cells = Vec::new();
        for f in 0..total {
            let idx = multi(f);
            let u: Vec<f64> = idx.iter().enumerate().map(|(a, &i)| coord(a, i)).collect();
            if full || omega.contains(&u) {
                node_of[f] = points.len();
                points.push(u);
                cells.push(idx);
            }
        }
        if points.is_empty() {
            return Err(Error::Resolution("no transverse node inside the cross-section".into()));
        }
        let mut neighbours = Vec::with_capacity(points.len());
        let mut wall_points = Vec::with_capacity(points.len());
        for (k, idx) in cells.iter().enumerate() {
            let mut nb = Vec::with_capacity(dims);
            let mut walls = Vec::with_capacity(dims);
            for a in 0..dims {
                let look = |delta: isize| -> (Option<usize>, Vec<f64>) {
                    let mut j = idx.clone();
                    let ia = idx[a] as isize + delta;
                    let mut wall = points[k].clone();
                    wall[a] = coord(a, ia.max(0) as usize);
                    if ia <= 0 || ia as usize >= counts[a] {
                        return (None, wall);
                    }
                    j[a] = ia as usize;
                    let m = node_of[flat(&j)];
                    if m == usize::MAX {
                        (None, wall)
                    } else {
                        (Some(m), wall)
                    }
                };
                let (minus, wm) = look(-1);
                let (plus, wp) = look(1);
                nb.push((minus, plus));
                walls.push((wm, wp));
            }
            neighbours.push(nb);
            wall_points.push(walls);
        }
        Ok(Self {
            points,
            spacing: steps,
            neighbours,
            wall_points,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.spacing.len()
    }
}

/// The truncated tube [−L, L] × ω. Node index = i_s · n_t + t, with the transverse
/// index fastest, so every operator built on it has bandwidth n_t.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedGrid {
    pub half_length: f64,
    pub ds: f64,
    /// Interior s nodes −L + i·ds, i = 1 … n_s − 1.
    pub s: Vec<f64>,
    pub transverse: TransverseGrid,
}

impl TruncatedGrid {
    pub fn new(omega: &CrossSection, half_length: f64, ds: f64, du: f64) -> Result<Self> {
        Self::with_min_nodes(omega, half_length, ds, du, MIN_TRANSVERSE_NODES)
    }

    pub fn with_min_nodes(omega: &CrossSection, half_length: f64, ds: f64, du: f64, min_nodes: usize) -> Result<Self> {
        if !(half_length > 0.0 && ds > 0.0) {
            return input("grid half-length and spacing must be positive");
        }
        let n_s = (2.0 * half_length / ds).round() as usize;
        if n_s < 2 {
            return Err(Error::Resolution("no interior s node".into()));
        }
        let ds = 2.0 * half_length / n_s as f64;
        let s = (1..n_s).map(|i| -half_length + i as f64 * ds).collect();
        Ok(Self {
            half_length,
            ds,
            s,
            transverse: TransverseGrid::new(omega, du, min_nodes)?,
        })
    }

    pub fn n_s(&self) -> usize {
        self.s.len()
    }

    pub fn n_t(&self) -> usize {
        self.transverse.len()
    }

    pub fn len(&self) -> usize {
        self.n_s() * self.n_t()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i_s: usize, t: usize) -> usize {
        i_s * self.n_t() + t
    }

    /// s coordinate of s-index `i` including the walls: i = 0 is −L, i = n_s + 1 is +L.
    pub fn s_with_walls(&self, i: usize) -> f64 {
        -self.half_length + i as f64 * self.ds
    }

    /// Nodes within `margin` s-steps of either wall.
    pub fn near_s_wall(&self, node: usize, margin: usize) -> bool {
        let i = node / self.n_t();
        i < margin || i + margin >= self.n_s()
    }
}
