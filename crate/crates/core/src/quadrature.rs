//! Gauss-Legendre rules on the reference interval `[0, 1]` and their mapped variants.

use crate::error::{config, Result};

pub const MAX_GAUSS_POINTS: usize = 32;

/// Points and weights on `[0, 1]`; weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Highest polynomial degree integrated exactly.
    pub fn exactness(&self) -> usize {
        2 * self.points.len() - 1
    }

    /// Nodes and weights mapped affinely onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = b - a;
        self.points
            .iter()
            .zip(&self.weights)
            .map(move |(&p, &w)| (a + h * p, h * w))
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// `n`-point Gauss-Legendre rule on `[0, 1]`, exact for degree `2n - 1`.
pub fn gauss_rule(n: usize) -> Result<QuadratureRule> {
    if n == 0 || n > MAX_GAUSS_POINTS {
        return config(format!("Gauss rule with {n} points unsupported (1..={MAX_GAUSS_POINTS})"));
    }
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    // Roots are symmetric; solve for the upper half with Newton on P_n.
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        // Map from [-1, 1] to [0, 1].
        points[i] = 0.5 * (1.0 - z);
        points[n - 1 - i] = 0.5 * (1.0 + z);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    Ok(QuadratureRule { points, weights })
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

const GRADED_RATIO: f64 = 0.5;
const GRADED_MAX_LEVELS: usize = 60;

/// Composite rule on `[a, b]` with panels shrinking geometrically toward `a`.
///
/// Handles integrands with an algebraic singularity at the origin when `a` is at or
/// just above it, e.g. `x^{1/3}` or `x^{-2/3}` on the first element of a mesh starting
/// near zero. Refinement stops once panels are small compared with their distance to
/// the origin or with the element itself.
pub fn graded_points(rule: &QuadratureRule, a: f64, b: f64) -> Vec<(f64, f64)> {
    let span = b - a;
    let floor = (span * 1e-15).max(0.5 * a.abs());
    let mut out = Vec::with_capacity(rule.len() * 32);
    let mut hi = span;
    for _ in 0..GRADED_MAX_LEVELS {
        if hi <= floor {
            break;
        }
        let lo = hi * GRADED_RATIO;
        out.extend(rule.mapped(a + lo, a + hi));
        hi = lo;
    }
    out.extend(rule.mapped(a, a + hi));
    out
}
