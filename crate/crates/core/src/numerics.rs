//! Small numerical building blocks shared by the geometry, metric and checker modules.

/// Finite-difference weights for derivatives `0..=max_order` at `x0` on arbitrary `nodes`
/// (Fornberg's recursion). Result is indexed `[order][node]`.
pub fn fd_weights(x0: f64, nodes: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    if n == 0 {
        return c;
    }
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Estimates the `order`-th derivative of sampled data at sample `idx`.
///
/// Interior samples use a centred stencil of fourth-order accuracy; where the
/// centred stencil does not fit, a one-sided stencil of second-order accuracy
/// anchored at the nearest end is used instead.
pub fn sampled_derivative(xs: &[f64], ys: &[f64], idx: usize, order: usize) -> f64 {
    if order == 0 {
        return ys[idx];
    }
    let n = xs.len();
    let centred = 2 * order.div_ceil(2) + 3;
    let half = centred / 2;
    let (lo, hi) = if idx >= half && idx + half < n {
        (idx - half, idx + half + 1)
    } else {
        let width = (order + 2).min(n);
        if idx < half {
            (0, width)
        } else {
            (n - width, n)
        }
    };
    let w = fd_weights(xs[idx], &xs[lo..hi], order);
    w[order].iter().zip(&ys[lo..hi]).map(|(a, b)| a * b).sum()
}

/// Local cubic (four-point Lagrange) interpolation on a sorted grid.
/// Exact at the grid nodes; clamps the stencil at the ends.
pub fn cubic_interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let (lo, hi) = cubic_stencil(xs, x);
    lagrange_eval(&xs[lo..hi], &ys[lo..hi], x)
}

/// Index range `[lo, hi)` of the (up to) four nodes used by [`cubic_interp`].
pub fn cubic_stencil(xs: &[f64], x: f64) -> (usize, usize) {
    let n = xs.len();
    if n <= 4 {
        return (0, n);
    }
    let right = xs.partition_point(|&v| v <= x).clamp(1, n - 1);
    let lo = (right as isize - 2).clamp(0, n as isize - 4) as usize;
    (lo, lo + 4)
}

/// Lagrange weights of the nodes `xs` at `x`.
pub fn lagrange_weights(xs: &[f64], x: f64) -> Vec<f64> {
    (0..xs.len())
        .map(|i| {
            xs.iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &xj)| (x - xj) / (xs[i] - xj))
                .product()
        })
        .collect()
}

fn lagrange_eval(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    lagrange_weights(xs, x)
        .iter()
        .zip(ys)
        .map(|(w, y)| w * y)
        .sum()
}

/// Radical inverse of `index` in `base` (the Halton/van der Corput digit reversal).
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut value = 0.0;
    let mut scale = inv;
    while index > 0 {
        value += (index % base) as f64 * scale;
        index /= base;
        scale *= inv;
    }
    value
}

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Point `index` of the Halton sequence in `[0,1)^dim` (dim ≤ 8).
pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    PRIMES[..dim]
        .iter()
        .map(|&b| radical_inverse(index + 1, b))
        .collect()
}

/// Ordinary least squares for `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    /// Root-mean-square residual.
    pub rms: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum::<f64>()
        / nf)
        .sqrt();
    Some(LineFit {
        intercept,
        slope,
        rms,
    })
}

/// Uniform grid of `n` points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => {
            let h = (b - a) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { b } else { a + h * i as f64 })
                .collect()
        }
    }
}

/// Richardson extrapolation of a quantity with error `C·h^order` from two
/// levels with refinement ratio 2.
pub fn richardson(coarse: f64, fine: f64, order: f64) -> f64 {
    let f = 2f64.powf(order);
    (f * fine - coarse) / (f - 1.0)
}
