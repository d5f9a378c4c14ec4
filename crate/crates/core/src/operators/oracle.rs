//! Brute-force evaluation of the weak loss and gain forms by nested quadrature.
//!
//! Nothing here uses the factorized operators: the collision kernel is evaluated
//! pointwise, the inner breakage integral runs over `[x, x_max]` for every outer point,
//! and combs are resolved by the substitution `∫ δ(x − a y) F(y) dy = F(x / a) / a`.

use std::collections::HashMap;

use crate::basis::DofMap;
use crate::error::{Error, Result};
use crate::kernel::{product_smoothness, BreakageAxis, BreakageKernel, CollisionKernel, Smoothness};
use crate::quadrature::{gauss_rule, graded_points, QuadratureRule};

use super::near_origin;

pub const ORACLE_DOF_LIMIT: usize = 200;

const ORACLE_NONPOLYNOMIAL_POINTS: usize = 14;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResidual {
    pub loss: Vec<f64>,
    pub gain: Vec<f64>,
    pub residual: Vec<f64>,
}

struct AxisRule {
    rule: QuadratureRule,
    graded: bool,
    nodes: Vec<f64>,
    x_min: f64,
    x_max: f64,
}

impl AxisRule {
    fn panel(&self, a: f64, b: f64, out: &mut Vec<(f64, f64)>) {
        if b <= a {
            return;
        }
        if self.graded && near_origin(a, b) {
            out.extend(graded_points(&self.rule, a, b));
        } else {
            out.extend(self.rule.mapped(a, b));
        }
    }

    /// Points on `[a, x_max]` with panels split at mesh nodes and `extra` breakpoints.
    fn split(&self, a: f64, extra: &[f64]) -> Vec<(f64, f64)> {
        let mut breaks: Vec<f64> = std::iter::once(a)
            .chain(self.nodes.iter().chain(extra).copied().filter(|&x| x > a && x < self.x_max))
            .chain(std::iter::once(self.x_max))
            .collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let mut out = Vec::new();
        for w in breaks.windows(2) {
            self.panel(w[0], w[1], &mut out);
        }
        out
    }
}

/// Loss, gain and residual of the consistent forms at `alpha`, by nested quadrature.
pub fn dense_oracle_residual(
    dofs: &DofMap,
    gamma: &CollisionKernel,
    beta: &BreakageKernel,
    alpha: &[f64],
) -> Result<OracleResidual> {
    Ok(dense_oracle_residuals(dofs, gamma, beta, &[alpha])?.remove(0))
}

/// [`dense_oracle_residual`] for several coefficient vectors sharing one set of kernel
/// evaluations.
pub fn dense_oracle_residuals(
    dofs: &DofMap,
    gamma: &CollisionKernel,
    beta: &BreakageKernel,
    alphas: &[&[f64]],
) -> Result<Vec<OracleResidual>> {
    let n = dofs.len();
    if n > ORACLE_DOF_LIMIT {
        return Err(Error::SizeGuard { what: "dense oracle", size: n, limit: ORACLE_DOF_LIMIT });
    }
    if let Some(bad) = alphas.iter().find(|a| a.len() != n) {
        return Err(Error::Config(format!("coefficient vector has length {}, expected {n}", bad.len())));
    }
    let m = alphas.len();
    let d = dofs.dim();
    let r = dofs.degree();
    let rule_for = |smooth: Smoothness| -> Result<(QuadratureRule, bool)> {
        Ok(match smooth {
            Smoothness::Polynomial(_) => (gauss_rule(r + 3)?, false),
            Smoothness::Smooth => (gauss_rule(ORACLE_NONPOLYNOMIAL_POINTS)?, false),
            Smoothness::Singular => (gauss_rule(ORACLE_NONPOLYNOMIAL_POINTS)?, true),
        })
    };
    let mut axes = Vec::with_capacity(d);
    let mut z_axes = Vec::with_capacity(d);
    for a in 0..d {
        let mut smooth = Smoothness::Polynomial(0);
        let mut z_smooth = Smoothness::Polynomial(0);
        for t in &gamma.terms {
            smooth = smooth.merge(t.g[a].smoothness()).merge(t.h[a].smoothness());
            z_smooth = z_smooth.merge(t.h[a].smoothness());
            for s in &beta.terms {
                if let BreakageAxis::Smooth { f, q } = &s.axes[a] {
                    smooth = smooth.merge(f.smoothness()).merge(product_smoothness(&[*q, t.g[a]]));
                }
            }
        }
        let ax = dofs.axis(a).axis();
        let make = |(rule, graded): (QuadratureRule, bool)| AxisRule {
            rule,
            graded,
            nodes: ax.nodes().to_vec(),
            x_min: ax.x_min(),
            x_max: ax.x_max(),
        };
        axes.push(make(rule_for(smooth)?));
        z_axes.push(make(rule_for(z_smooth)?));
    }

    let values = |x: &[f64]| -> Result<Vec<f64>> {
        let shapes = dofs.shape_functions(x)?;
        Ok(alphas.iter().map(|al| shapes.iter().map(|&(i, v)| al[i] * v).sum()).collect())
    };
    // Z(y) = ∫ Γ(y, z) u(z) dz on the full domain, one entry per vector.
    let z_points: Vec<(Vec<f64>, f64, Vec<f64>)> = tensor(
        &z_axes.iter().map(|ax| ax.split(ax.x_min, &[])).collect::<Vec<_>>(),
    )
    .into_iter()
    .map(|(z, w)| Ok((z.clone(), w, values(&z)?)))
    .collect::<Result<_>>()?;
    let z_integral = |y: &[f64]| -> Vec<f64> {
        let mut acc = vec![0.0; m];
        for (z, w, uz) in &z_points {
            let g = w * gamma.eval(y, z);
            for (a, u) in acc.iter_mut().zip(uz) {
                *a += g * u;
            }
        }
        acc
    };

    // Outer points: elements, further split where combs map element boundaries.
    let outer_axes: Vec<Vec<(f64, f64)>> = (0..d)
        .map(|a| {
            let mut extra = Vec::new();
            for s in &beta.terms {
                if let BreakageAxis::Comb { atoms } = &s.axes[a] {
                    extra.extend(atoms.iter().flat_map(|at| axes[a].nodes.iter().map(move |x| at.ratio * x)));
                }
            }
            axes[a].split(axes[a].x_min, &extra)
        })
        .collect();

    // inner points on whole elements repeat for every outer point of an element
    let mut cache: HashMap<Vec<u64>, Vec<f64>> = HashMap::new();
    let mut loss = vec![vec![0.0; n]; m];
    let mut gain = vec![vec![0.0; n]; m];
    for (x, wx) in tensor(&outer_axes) {
        let shapes = dofs.shape_functions(&x)?;
        let ux = values(&x)?;
        let zx = z_integral(&x);
        let mut g = vec![0.0; m];
        for s in &beta.terms {
            let per_axis: Vec<Vec<(f64, f64)>> = (0..d)
                .map(|a| match &s.axes[a] {
                    BreakageAxis::Smooth { f, q } => {
                        let fx = f.eval(x[a]);
                        axes[a]
                            .split(x[a], &[])
                            .into_iter()
                            .map(|(y, w)| (y, w * fx * q.eval(y)))
                            .collect()
                    }
                    BreakageAxis::Comb { atoms } => atoms
                        .iter()
                        .filter(|at| x[a] / at.ratio <= axes[a].x_max)
                        .map(|at| (x[a] / at.ratio, at.weight / at.ratio))
                        .collect(),
                })
                .collect();
            for (y, w) in tensor(&per_axis) {
                let key: Vec<u64> = y.iter().map(|v| v.to_bits()).collect();
                if !cache.contains_key(&key) {
                    let uy = values(&y)?;
                    let zy = z_integral(&y);
                    cache.insert(key.clone(), uy.iter().zip(&zy).map(|(u, z)| u * z).collect());
                }
                for (gk, v) in g.iter_mut().zip(&cache[&key]) {
                    *gk += s.coeff * w * v;
                }
            }
        }
        for k in 0..m {
            let l = wx * ux[k] * zx[k];
            for &(j, phi) in &shapes {
                loss[k][j] += l * phi;
                gain[k][j] += wx * g[k] * phi;
            }
        }
    }
    Ok(loss
        .into_iter()
        .zip(gain)
        .map(|(loss, gain)| {
            let residual = loss.iter().zip(&gain).map(|(l, g)| l - g).collect();
            OracleResidual { loss, gain, residual }
        })
        .collect())
}

fn tensor(axes: &[Vec<(f64, f64)>]) -> Vec<(Vec<f64>, f64)> {
    let mut out = vec![(Vec::new(), 1.0)];
    for pts in axes {
        let mut next = Vec::with_capacity(out.len() * pts.len());
        for (x, w) in &out {
            for &(p, pw) in pts {
                let mut y = x.clone();
                y.push(p);
                next.push((y, w * pw));
            }
        }
        out = next;
    }
    out
}
