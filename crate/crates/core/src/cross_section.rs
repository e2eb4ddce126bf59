//! Dirichlet spectrum of the cross-section ω: the threshold ν₁ of the essential
//! spectrum and the threshold set 𝒯.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{input, Error, Result};
use crate::numerics::richardson;
use crate::sparse::TripletBuilder;
use crate::spectral_engine::{lowest_eigenvalues, EigenOptions};

pub type MaskPredicate = Arc<dyn Fn(f64, f64) -> bool + Send + Sync>;

/// A planar cross-section described by a membership predicate on a bounding box,
/// discretized on node grids whose boundary nodes lie on the box edges.
#[derive(Clone)]
pub struct GridMask {
    pub lower: [f64; 2],
    pub upper: [f64; 2],
    pub inside: MaskPredicate,
}

impl fmt::Debug for GridMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GridMask({:?}..{:?})", self.lower, self.upper)
    }
}

/// Nodes of a mask at one resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskNodes {
    pub spacing: f64,
    pub points: Vec<[f64; 2]>,
    /// Grid index of each inside node.
    pub index: Vec<(usize, usize)>,
    pub counts: (usize, usize),
}

impl GridMask {
    pub fn new(lower: [f64; 2], upper: [f64; 2], inside: impl Fn(f64, f64) -> bool + Send + Sync + 'static) -> Result<Self> {
        if !(lower[0] < upper[0] && lower[1] < upper[1]) {
            return input("grid mask: empty bounding box");
        }
        Ok(Self {
            lower,
            upper,
            inside: Arc::new(inside),
        })
    }

    /// Mask from a character image ('#' inside, anything else outside) covering the
    /// box; membership is looked up at the nearest pixel.
    pub fn from_image(lower: [f64; 2], upper: [f64; 2], rows: &[String]) -> Result<Self> {
        let ny = rows.len();
        let nx = rows.first().map_or(0, |r| r.chars().count());
        if ny == 0 || nx == 0 || rows.iter().any(|r| r.chars().count() != nx) {
            return input("grid mask image must be a non-empty rectangle of characters");
        }
        let cells: Vec<Vec<bool>> = rows.iter().map(|r| r.chars().map(|c| c == '#').collect()).collect();
        let (lo, hi) = (lower, upper);
        Self::new(lower, upper, move |x, y| {
            let fx = (x - lo[0]) / (hi[0] - lo[0]) * nx as f64;
            let fy = (y - lo[1]) / (hi[1] - lo[1]) * ny as f64;
            if fx <= 0.0 || fy <= 0.0 || fx >= nx as f64 || fy >= ny as f64 {
                return false;
            }
            // row 0 of the image is the top edge
            cells[ny - 1 - fy.floor() as usize][fx.floor() as usize]
        })
    }

    /// Inside nodes with `n` intervals along the shorter box side.
    pub fn nodes(&self, n: usize) -> MaskNodes {
        let wx = self.upper[0] - self.lower[0];
        let wy = self.upper[1] - self.lower[1];
        let h = wx.min(wy) / n as f64;
        let nx = (wx / h).round() as usize;
        let ny = (wy / h).round() as usize;
        let mut points = Vec::new();
        let mut index = Vec::new();
        for j in 1..ny {
            for i in 1..nx {
                let x = self.lower[0] + i as f64 * wx / nx as f64;
                let y = self.lower[1] + j as f64 * wy / ny as f64;
                if (self.inside)(x, y) {
                    points.push([x, y]);
                    index.push((i, j));
                }
            }
        }
        MaskNodes {
            spacing: h,
            points,
            index,
            counts: (nx, ny),
        }
    }
}

impl MaskNodes {
    fn lookup(&self) -> std::collections::HashMap<(usize, usize), usize> {
        self.index.iter().enumerate().map(|(k, &ij)| (ij, k)).collect()
    }

    pub fn is_connected(&self) -> bool {
        if self.points.is_empty() {
            return false;
        }
        let map = self.lookup();
        let mut seen = vec![false; self.points.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(k) = queue.pop_front() {
            let (i, j) = self.index[k];
            for (di, dj) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                let key = ((i as i64 + di) as usize, (j as i64 + dj) as usize);
                if let Some(&m) = map.get(&key) {
                    if !seen[m] {
                        seen[m] = true;
                        queue.push_back(m);
                    }
                }
            }
        }
        seen.into_iter().all(|v| v)
    }

    /// Five-point Dirichlet Laplacian on the inside nodes.
    pub fn laplacian(&self) -> crate::sparse::CsrMatrix {
        let map = self.lookup();
        let inv = 1.0 / (self.spacing * self.spacing);
        let mut b = TripletBuilder::new(self.points.len());
        for (k, &(i, j)) in self.index.iter().enumerate() {
            b.push(k, k, 4.0 * inv);
            for (di, dj) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                let key = ((i as i64 + di) as usize, (j as i64 + dj) as usize);
                if let Some(&m) = map.get(&key) {
                    b.push(k, m, -inv);
                }
            }
        }
        b.build()
    }

    pub fn centroid(&self) -> [f64; 2] {
        let n = self.points.len().max(1) as f64;
        let sx: f64 = self.points.iter().map(|p| p[0]).sum();
        let sy: f64 = self.points.iter().map(|p| p[1]).sum();
        [sx / n, sy / n]
    }
}

/// Bounded open connected cross-section ω ⊂ ℝ^{d−1}, centred at the origin.
#[derive(Debug, Clone)]
pub enum CrossSection {
    /// (−a, a)
    Interval { half_width: f64 },
    /// Centred box with the given side lengths.
    Rectangle { sides: Vec<f64> },
    Disc { radius: f64 },
    GridMask(GridMask),
}

/// Intervals along the shorter side used when a grid-mask resolution is not given.
pub const DEFAULT_MASK_RESOLUTION: usize = 32;
/// Fewest interior nodes per shortest side accepted for a grid mask.
pub const MIN_MASK_INTERIOR: usize = 16;

impl CrossSection {
    pub fn interval(half_width: f64) -> Self {
        CrossSection::Interval { half_width }
    }

    /// Dimension d − 1 of ω.
    pub fn dimension(&self) -> usize {
        match self {
            CrossSection::Interval { .. } => 1,
            CrossSection::Rectangle { sides } => sides.len(),
            CrossSection::Disc { .. } | CrossSection::GridMask(_) => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            CrossSection::Interval { half_width } => *half_width > 0.0 && half_width.is_finite(),
            CrossSection::Rectangle { sides } => !sides.is_empty() && sides.iter().all(|l| *l > 0.0 && l.is_finite()),
            CrossSection::Disc { radius } => *radius > 0.0 && radius.is_finite(),
            CrossSection::GridMask(mask) => {
                let nodes = mask.nodes(DEFAULT_MASK_RESOLUTION);
                if !nodes.is_connected() {
                    return input("grid-mask cross-section is empty or disconnected");
                }
                true
            }
        };
        if ok {
            Ok(())
        } else {
            input(format!("invalid cross-section {self:?}"))
        }
    }

    /// a = sup_{u∈ω} |u|. For grid masks, measured from the node centroid and padded
    /// by one fine spacing.
    pub fn radius(&self) -> f64 {
        match self {
            CrossSection::Interval { half_width } => *half_width,
            CrossSection::Rectangle { sides } => 0.5 * sides.iter().map(|l| l * l).sum::<f64>().sqrt(),
            CrossSection::Disc { radius } => *radius,
            CrossSection::GridMask(mask) => {
                let nodes = mask.nodes(2 * DEFAULT_MASK_RESOLUTION);
                let c = nodes.centroid();
                nodes
                    .points
                    .iter()
                    .map(|p| ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt())
                    .fold(0.0, f64::max)
                    + nodes.spacing
            }
        }
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        match self {
            CrossSection::Interval { half_width } => u[0].abs() < *half_width,
            CrossSection::Rectangle { sides } => u.iter().zip(sides).all(|(x, l)| x.abs() < 0.5 * l),
            CrossSection::Disc { radius } => u.iter().map(|x| x * x).sum::<f64>() < radius * radius,
            CrossSection::GridMask(mask) => (mask.inside)(u[0], u[1]),
        }
    }

    /// Axis-aligned bounding box (lower, upper) per transverse axis.
    pub fn bounding_box(&self) -> Vec<(f64, f64)> {
        match self {
            CrossSection::Interval { half_width } => vec![(-half_width, *half_width)],
            CrossSection::Rectangle { sides } => sides.iter().map(|l| (-0.5 * l, 0.5 * l)).collect(),
            CrossSection::Disc { radius } => vec![(-radius, *radius); 2],
            CrossSection::GridMask(mask) => vec![(mask.lower[0], mask.upper[0]), (mask.lower[1], mask.upper[1])],
        }
    }

    pub fn describe(&self) -> String {
        match self {
            CrossSection::Interval { half_width } => format!("interval(-{half_width}, {half_width})"),
            CrossSection::Rectangle { sides } => format!("rectangle{sides:?}"),
            CrossSection::Disc { radius } => format!("disc({radius})"),
            CrossSection::GridMask(mask) => format!("grid-mask({:?}..{:?})", mask.lower, mask.upper),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exactness {
    Analytic,
    Discretized,
}

/// Increasing Dirichlet eigenvalues ν₁ ≤ ν₂ ≤ … of ω, repeated with multiplicity.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSet {
    pub nu: Vec<f64>,
    pub exactness: Vec<Exactness>,
}

impl ThresholdSet {
    pub fn new(nu: Vec<f64>, exactness: Exactness) -> Result<Self> {
        if nu.is_empty() || !(nu[0] > 0.0) || nu.windows(2).any(|w| w[1] < w[0]) {
            return input("thresholds must be positive and non-decreasing");
        }
        let n = nu.len();
        Ok(Self {
            nu,
            exactness: vec![exactness; n],
        })
    }

    pub fn nu1(&self) -> f64 {
        self.nu[0]
    }

    pub fn len(&self) -> usize {
        self.nu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu.is_empty()
    }

    /// Distinct threshold values.
    pub fn distinct(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for &v in &self.nu {
            if out.last().is_none_or(|&l| v > l * (1.0 + 1e-12)) {
                out.push(v);
            }
        }
        out
    }
}

/// J_m(x) from Bessel's integral, evaluated by the (spectrally accurate) periodic
/// trapezoidal rule.
pub fn bessel_j(m: u32, x: f64) -> f64 {
    let n = (64.0 + 2.0 * (x.abs() + m as f64)).ceil() as usize;
    let step = 2.0 * PI / n as f64;
    let sum: f64 = (0..n)
        .map(|k| {
            let t = k as f64 * step;
            (m as f64 * t - x * t.sin()).cos()
        })
        .sum();
    sum / n as f64
}

/// First `count` positive zeros of J_m, bracketed by a scan and refined by bisection.
pub fn bessel_zeros(m: u32, count: usize) -> Vec<f64> {
    let mut zeros = Vec::with_capacity(count);
    let step = 0.1;
    let mut a = (m as f64).max(step);
    let mut fa = bessel_j(m, a);
    while zeros.len() < count {
        let b = a + step;
        let fb = bessel_j(m, b);
        if fa == 0.0 {
            zeros.push(a);
        } else if fa * fb < 0.0 {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            while hi - lo > 1e-13 {
                let mid = 0.5 * (lo + hi);
                let fm = bessel_j(m, mid);
                if fm * flo <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            zeros.push(0.5 * (lo + hi));
        }
        a = b;
        fa = fb;
    }
    zeros
}

/// Dirichlet eigenvalues of ω up to `n_max` entries. `grid_resolution` (intervals
/// along the shorter side at the coarse level) only matters for grid masks.
pub fn cross_section_spectrum(omega: &CrossSection, n_max: usize, grid_resolution: Option<usize>) -> Result<ThresholdSet> {
    if n_max == 0 {
        return input("n_max must be at least 1");
    }
    omega.validate()?;
    match omega {
        CrossSection::Interval { half_width } => {
            let nu1 = PI * PI / (4.0 * half_width * half_width);
            ThresholdSet::new((1..=n_max).map(|n| (n * n) as f64 * nu1).collect(), Exactness::Analytic)
        }
        CrossSection::Rectangle { sides } => {
            let mut values = Vec::new();
            let dims = sides.len();
            let total = n_max.pow(dims as u32);
            for code in 0..total {
                let mut c = code;
                let mut v = 0.0;
                for l in sides {
                    let m = (c % n_max + 1) as f64;
                    c /= n_max;
                    v += PI * PI * m * m / (l * l);
                }
                values.push(v);
            }
            values.sort_by(f64::total_cmp);
            values.truncate(n_max);
            ThresholdSet::new(values, Exactness::Analytic)
        }
        CrossSection::Disc { radius } => {
            let mut values = Vec::new();
            for m in 0..=n_max as u32 {
                for z in bessel_zeros(m, n_max) {
                    let v = z * z / (radius * radius);
                    values.push(v);
                    if m > 0 {
                        values.push(v);
                    }
                }
            }
            values.sort_by(f64::total_cmp);
            values.truncate(n_max);
            ThresholdSet::new(values, Exactness::Analytic)
        }
        CrossSection::GridMask(mask) => {
            let n = grid_resolution.unwrap_or(DEFAULT_MASK_RESOLUTION);
            if n < MIN_MASK_INTERIOR + 1 {
                return Err(Error::Resolution(format!(
                    "grid mask needs at least {MIN_MASK_INTERIOR} interior nodes per shortest side, got {}",
                    n.saturating_sub(1)
                )));
            }
            let coarse = mask.nodes(n);
            let fine = mask.nodes(2 * n);
            if !coarse.is_connected() || !fine.is_connected() {
                return input("grid-mask cross-section is empty or disconnected");
            }
            if n_max > coarse.points.len() / 4 {
                return Err(Error::Truncation(format!(
                    "{n_max} modes requested but the coarse mask resolves at most {}",
                    coarse.points.len() / 4
                )));
            }
            let opts = EigenOptions::default();
            let lc = lowest_eigenvalues(&coarse.laplacian(), n_max, &opts)?.values;
            let lf = lowest_eigenvalues(&fine.laplacian(), n_max, &opts)?.values;
            let mut values: Vec<f64> = lc.iter().zip(&lf).map(|(c, f)| richardson(*c, *f, 2.0)).collect();
            values.sort_by(f64::total_cmp);
            ThresholdSet::new(values, Exactness::Discretized)
        }
    }
}

/// ρ(λ), with the value +∞ below ν₁ kept as a distinct variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rho {
    Infinite,
    Finite(f64),
}

impl Rho {
    pub fn finite(self) -> Option<f64> {
        match self {
            Rho::Finite(v) => Some(v),
            Rho::Infinite => None,
        }
    }
}

impl fmt::Display for Rho {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rho::Infinite => write!(f, "inf"),
            Rho::Finite(v) => write!(f, "{v}"),
        }
    }
}

/// ρ(λ) = λ − sup{ζ ∈ 𝒯 : ζ ≤ λ}, and +∞ for λ < ν₁.
pub fn rho_of_lambda(thresholds: &ThresholdSet, lambda: f64) -> Result<Rho> {
    if !lambda.is_finite() {
        return input("λ must be finite");
    }
    if lambda < thresholds.nu1() {
        return Ok(Rho::Infinite);
    }
    let last = thresholds.nu[thresholds.len() - 1];
    if lambda > last {
        return Err(Error::Coverage(format!(
            "λ = {lambda} lies above the largest computed threshold {last}; raise n_max"
        )));
    }
    let below = thresholds.nu.iter().copied().filter(|&z| z <= lambda).fold(f64::NEG_INFINITY, f64::max);
    Ok(Rho::Finite(lambda - below))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_thresholds() {
        let t = cross_section_spectrum(&CrossSection::interval(1.0), 3, None).unwrap();
        let expected = [PI * PI / 4.0, PI * PI, 9.0 * PI * PI / 4.0];
        for (a, b) in t.nu.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((t.nu[0] - 2.4674).abs() < 1e-4);
        let half = cross_section_spectrum(&CrossSection::interval(0.5), 1, None).unwrap();
        assert!((half.nu1() - PI * PI).abs() < 1e-12);
    }

    #[test]
    fn unit_square_and_multiplicity() {
        let t = cross_section_spectrum(&CrossSection::Rectangle { sides: vec![1.0, 1.0] }, 3, None).unwrap();
        assert!((t.nu1() - 2.0 * PI * PI).abs() < 1e-12);
        assert_eq!(t.nu[1], t.nu[2]);
        assert!((t.nu[1] - 5.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn bessel_zeros_match_tables() {
        let z0 = bessel_zeros(0, 3);
        let z1 = bessel_zeros(1, 2);
        for (a, b) in z0.iter().zip([2.404825557695773, 5.520078110286311, 8.653727912911013]) {
            assert!((a - b).abs() < 1e-11, "{a} vs {b}");
        }
        assert!((z1[0] - 3.831705970207512).abs() < 1e-11);
        let t = cross_section_spectrum(&CrossSection::Disc { radius: 1.0 }, 3, None).unwrap();
        assert_eq!(t.nu[1], t.nu[2]);
        assert!((t.nu[1] - 3.831705970207512f64.powi(2)).abs() < 1e-9);
    }

    #[test]
    fn rho_piecewise() {
        let t = cross_section_spectrum(&CrossSection::interval(1.0), 4, None).unwrap();
        let (n1, n2) = (t.nu[0], t.nu[1]);
        assert_eq!(rho_of_lambda(&t, n1).unwrap(), Rho::Finite(0.0));
        let mid = rho_of_lambda(&t, 0.5 * (n1 + n2)).unwrap().finite().unwrap();
        assert!((mid - 3.0 * PI * PI / 8.0).abs() < 1e-12);
        assert_eq!(rho_of_lambda(&t, n1 - 1.0).unwrap(), Rho::Infinite);
        assert!(matches!(rho_of_lambda(&t, t.nu[3] + 1.0), Err(Error::Coverage(_))));
    }

    #[test]
    fn disconnected_mask_is_rejected() {
        let mask = GridMask::new([-1.0, -1.0], [1.0, 1.0], |x, _| x.abs() > 0.3).unwrap();
        let err = cross_section_spectrum(&CrossSection::GridMask(mask), 1, Some(32));
        assert!(matches!(err, Err(Error::Input(_))));
    }

    #[test]
    fn coarse_mask_is_refused() {
        let mask = GridMask::new([-0.5, -0.5], [0.5, 0.5], |_, _| true).unwrap();
        let err = cross_section_spectrum(&CrossSection::GridMask(mask), 1, Some(8));
        assert!(matches!(err, Err(Error::Resolution(_))));
    }
}
