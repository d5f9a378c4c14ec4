//! Moments, error norms, convergence orders and conservation diagnostics.

use crate::basis::DofMap;
use crate::error::{config, Result};
use crate::linalg::dot;
use crate::operators::{kron_vectors, OperatorSet};
use crate::quadrature::gauss_rule;
use crate::stepper::Trajectory;

/// Per-axis functional `∫ x^k φ_i`.
fn axis_moment(dofs: &DofMap, a: usize, k: u32) -> Result<Vec<f64>> {
    let ax = dofs.axis(a);
    let r = ax.degree();
    let rule = gauss_rule((r + k as usize + 2).div_ceil(2).max(1))?;
    let mut v = vec![0.0; ax.len()];
    for e in 0..ax.axis().num_elements() {
        let (lo, hi) = ax.axis().element(e);
        let g0 = ax.global(e, 0);
        for (x, w) in rule.mapped(lo, hi) {
            let vals = dofs.basis().values((x - lo) / (hi - lo));
            let wx = w * x.powi(k as i32);
            for m in 0..=r {
                v[g0 + m] += wx * vals[m];
            }
        }
    }
    Ok(v)
}

/// Coefficient functional of the moment `∫ Π x_a^{k_a} u_h`.
pub fn moment_vector(dofs: &DofMap, k: &[u32]) -> Result<Vec<f64>> {
    if k.len() != dofs.dim() {
        return config(format!("moment index has {} entries, mesh dimension is {}", k.len(), dofs.dim()));
    }
    let per_axis = (0..dofs.dim()).map(|a| axis_moment(dofs, a, k[a])).collect::<Result<Vec<_>>>()?;
    Ok(kron_vectors(&per_axis))
}

pub fn moment(alpha: &[f64], dofs: &DofMap, k: &[u32]) -> Result<f64> {
    Ok(dot(&moment_vector(dofs, k)?, alpha))
}

/// Exact solution with gradient.
pub trait ExactSolution {
    fn value(&self, x: &[f64], t: f64) -> f64;
    fn gradient(&self, x: &[f64], t: f64) -> Vec<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NormKind {
    L1,
    L2,
    /// Node-sampled maximum error.
    Linf,
    /// `Linf` divided by the node-sampled maximum of the exact solution.
    RelLinf,
    /// Full `H¹` norm `(‖e‖² + ‖∇e‖²)^{1/2}`.
    H1,
}

impl NormKind {
    pub const ALL: [NormKind; 5] = [NormKind::L1, NormKind::L2, NormKind::Linf, NormKind::RelLinf, NormKind::H1];

    pub fn name(&self) -> &'static str {
        match self {
            NormKind::L1 => "L1",
            NormKind::L2 => "L2",
            NormKind::Linf => "Linf",
            NormKind::RelLinf => "RelLinf",
            NormKind::H1 => "H1",
        }
    }
}

impl std::str::FromStr for NormKind {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> Result<Self> {
        NormKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .map_or_else(|| config(format!("unknown norm `{s}`")), Ok)
    }
}

/// Axis-aligned box restricting where errors are measured; only whole elements and
/// nodes inside it count.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Region {
    fn contains_interval(&self, a: usize, lo: f64, hi: f64) -> bool {
        lo >= self.lo[a] - 1e-12 && hi <= self.hi[a] + 1e-12
    }

    fn contains_point(&self, x: &[f64]) -> bool {
        x.iter().enumerate().all(|(a, &v)| v >= self.lo[a] - 1e-12 && v <= self.hi[a] + 1e-12)
    }
}

/// All error norms at once; `region` restricts the measurement set.
pub fn error_norms(
    alpha: &[f64],
    dofs: &DofMap,
    exact: &dyn ExactSolution,
    t: f64,
    region: Option<&Region>,
) -> Result<Vec<(NormKind, f64)>> {
    let d = dofs.dim();
    let r = dofs.degree();
    let rule = gauss_rule(r + 5)?;
    let per_axis: Vec<Vec<Vec<(f64, f64)>>> = (0..d)
        .map(|a| {
            let ax = dofs.axis(a).axis();
            (0..ax.num_elements())
                .filter_map(|e| {
                    let (lo, hi) = ax.element(e);
                    let inside = region.is_none_or(|reg| reg.contains_interval(a, lo, hi));
                    inside.then(|| rule.mapped(lo, hi).collect())
                })
                .collect()
        })
        .collect();
    let points: Vec<Vec<(f64, f64)>> = per_axis.iter().map(|els| els.concat()).collect();
    if points.iter().any(|p| p.is_empty()) {
        return config("error region contains no complete element");
    }
    let (mut l1, mut l2, mut h1) = (0.0, 0.0, 0.0);
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    'cells: loop {
        let mut w = 1.0;
        for a in 0..d {
            x[a] = points[a][idx[a]].0;
            w *= points[a][idx[a]].1;
        }
        let e = dofs.eval(alpha, &x)? - exact.value(&x, t);
        let grad_h = dofs.gradient(alpha, &x)?;
        let grad = exact.gradient(&x, t);
        let ge: f64 = grad_h.iter().zip(&grad).map(|(u, v)| (u - v).powi(2)).sum();
        l1 += w * e.abs();
        l2 += w * e * e;
        h1 += w * ge;
        let mut a = d;
        loop {
            if a == 0 {
                break 'cells;
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < points[a].len() {
                break;
            }
            idx[a] = 0;
        }
    }
    let (mut linf, mut umax) = (0.0f64, 0.0f64);
    for i in 0..dofs.len() {
        let xn = dofs.node_coordinates(i);
        if region.is_some_and(|reg| !reg.contains_point(&xn)) {
            continue;
        }
        let u = exact.value(&xn, t);
        linf = linf.max((alpha[i] - u).abs());
        umax = umax.max(u.abs());
    }
    Ok(vec![
        (NormKind::L1, l1),
        (NormKind::L2, l2.sqrt()),
        (NormKind::Linf, linf),
        (NormKind::RelLinf, if umax > 0.0 { linf / umax } else { f64::NAN }),
        (NormKind::H1, (l2 + h1).sqrt()),
    ])
}

pub fn norm_error(
    alpha: &[f64],
    dofs: &DofMap,
    exact: &dyn ExactSolution,
    t: f64,
    kind: NormKind,
    region: Option<&Region>,
) -> Result<f64> {
    let all = error_norms(alpha, dofs, exact, t, region)?;
    Ok(all.into_iter().find(|(k, _)| *k == kind).map(|(_, v)| v).unwrap_or(f64::NAN))
}

/// Pairwise orders `ln(E_i / E_{i+1}) / ln(h_i / h_{i+1})`; `None` where an error vanishes.
pub fn eoc(errors: &[f64], hs: &[f64]) -> Result<Vec<Option<f64>>> {
    if errors.len() != hs.len() || errors.len() < 2 {
        return config("EOC needs matching error and mesh-size sequences of length ≥ 2");
    }
    if hs.iter().any(|h| !(*h > 0.0)) || errors.iter().any(|e| *e < 0.0) {
        return config("EOC needs positive mesh sizes and nonnegative errors");
    }
    Ok(errors
        .windows(2)
        .zip(hs.windows(2))
        .map(|(e, h)| {
            (e[0] > 0.0 && e[1] > 0.0).then(|| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        })
        .collect())
}

/// Relative error `|exact − num| / |exact|`.
pub fn relative_error(exact: f64, num: f64) -> f64 {
    if exact == 0.0 {
        (exact - num).abs()
    } else {
        (exact - num).abs() / exact.abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentSeries {
    pub k: Vec<u32>,
    pub times: Vec<f64>,
    pub numerical: Vec<f64>,
    pub exact: Option<Vec<f64>>,
}

impl MomentSeries {
    pub fn from_trajectory(
        traj: &Trajectory,
        dofs: &DofMap,
        k: &[u32],
        exact: Option<&dyn Fn(f64) -> f64>,
    ) -> Result<Self> {
        let w = moment_vector(dofs, k)?;
        let times: Vec<f64> = traj.snapshots.iter().map(|s| s.t).collect();
        let numerical = traj.snapshots.iter().map(|s| dot(&w, &s.alpha)).collect();
        let exact = exact.map(|f| times.iter().map(|&t| f(t)).collect());
        Ok(Self { k: k.to_vec(), times, numerical, exact })
    }

    pub fn relative_errors(&self) -> Option<Vec<f64>> {
        self.exact
            .as_ref()
            .map(|ex| ex.iter().zip(&self.numerical).map(|(e, n)| relative_error(*e, *n)).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub label: String,
    pub h: f64,
    pub dofs: usize,
    pub norms: Vec<(NormKind, f64)>,
}

impl ErrorRow {
    pub fn get(&self, kind: NormKind) -> Option<f64> {
        self.norms.iter().find(|(k, _)| *k == kind).map(|(_, v)| *v)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorReport {
    pub rows: Vec<ErrorRow>,
}

impl ErrorReport {
    /// Orders between consecutive rows for one norm.
    pub fn eoc(&self, kind: NormKind) -> Result<Vec<Option<f64>>> {
        let errs: Vec<f64> = self.rows.iter().map(|r| r.get(kind).unwrap_or(f64::NAN)).collect();
        let hs: Vec<f64> = self.rows.iter().map(|r| r.h).collect();
        eoc(&errs, &hs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConservationReport {
    /// `(t, |M₁(t) − M₁(0)| / |M₁(0)|)` per recorded step.
    pub drift: Vec<(f64, f64)>,
    pub max_drift: f64,
    pub number_nondecreasing: bool,
    pub min_nodal: f64,
}

pub fn conservation_report(traj: &Trajectory, ops: &OperatorSet) -> Result<ConservationReport> {
    let _ = ops;
    let first = traj.steps.first().ok_or_else(|| crate::error::Error::Config("empty trajectory".into()))?;
    let m1 = first.hypervolume;
    let drift: Vec<(f64, f64)> = traj.steps.iter().map(|s| (s.t, relative_error(m1, s.hypervolume))).collect();
    let max_drift = drift.iter().fold(0.0f64, |m, (_, d)| m.max(*d));
    let number_nondecreasing = traj.steps.windows(2).all(|w| w[1].number >= w[0].number - 1e-10);
    let min_nodal = traj.steps.iter().map(|s| s.min_nodal).fold(f64::INFINITY, f64::min);
    Ok(ConservationReport { drift, max_drift, number_nondecreasing, min_nodal })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_dof_map, interpolate};
    use crate::mesh::TensorMesh;
    use proptest::prelude::*;

    struct Linear;
    impl ExactSolution for Linear {
        fn value(&self, x: &[f64], _t: f64) -> f64 {
            1.0 + 2.0 * x[0] - x.get(1).copied().unwrap_or(0.0)
        }
        fn gradient(&self, x: &[f64], _t: f64) -> Vec<f64> {
            if x.len() == 1 {
                vec![2.0]
            } else {
                vec![2.0, -1.0]
            }
        }
    }

    struct Exp;
    impl ExactSolution for Exp {
        fn value(&self, x: &[f64], _t: f64) -> f64 {
            (-x[0]).exp()
        }
        fn gradient(&self, x: &[f64], _t: f64) -> Vec<f64> {
            vec![-(-x[0]).exp()]
        }
    }

    #[test]
    fn zeroth_moment_of_ones_is_measure() {
        let dofs = build_dof_map(&TensorMesh::uniform(1, 1e-9, 5.0, 7).unwrap(), 2).unwrap();
        let m = moment(&vec![1.0; dofs.len()], &dofs, &[0]).unwrap();
        assert!((m - (5.0 - 1e-9)).abs() < 1e-13);
        let dofs = build_dof_map(&TensorMesh::uniform(2, 0.0, 2.0, 3).unwrap(), 1).unwrap();
        let c = interpolate(&dofs, |x| x[0] * x[1]);
        assert!((moment(&c, &dofs, &[1, 0]).unwrap() - 16.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn interpolated_linear_solution_has_zero_error() {
        for dim in [1, 2] {
            let dofs = build_dof_map(&TensorMesh::uniform(dim, 0.0, 1.0, 4).unwrap(), 1).unwrap();
            let c = interpolate(&dofs, |x| Linear.value(x, 0.0));
            for (_, v) in error_norms(&c, &dofs, &Linear, 0.0, None).unwrap() {
                assert!(v.abs() < 1e-13);
            }
        }
    }

    #[test]
    fn sobolev_ordering_and_sign_symmetry() {
        let dofs = build_dof_map(&TensorMesh::uniform(1, 1e-9, 5.0, 20).unwrap(), 1).unwrap();
        let c = interpolate(&dofs, |x| (-x[0]).exp() + 0.01 * (x[0] * 3.0).sin());
        let l2 = norm_error(&c, &dofs, &Exp, 0.0, NormKind::L2, None).unwrap();
        let h1 = norm_error(&c, &dofs, &Exp, 0.0, NormKind::H1, None).unwrap();
        assert!(h1 >= l2 && l2 > 0.0);
        let base = interpolate(&dofs, |x| Linear.value(x, 0.0));
        let bump: Vec<f64> = (0..dofs.len()).map(|i| 0.01 * (i as f64).sin()).collect();
        let up: Vec<f64> = base.iter().zip(&bump).map(|(b, d)| b + d).collect();
        let down: Vec<f64> = base.iter().zip(&bump).map(|(b, d)| b - d).collect();
        let (nu, nd) = (
            error_norms(&up, &dofs, &Linear, 0.0, None).unwrap(),
            error_norms(&down, &dofs, &Linear, 0.0, None).unwrap(),
        );
        for ((k, a), (_, b)) in nu.iter().zip(&nd) {
            if *k != NormKind::RelLinf {
                assert!((a - b).abs() <= 1e-12 * a.abs(), "{k:?}");
            }
        }
    }

    #[test]
    fn region_restriction() {
        let dofs = build_dof_map(&TensorMesh::uniform(1, 0.0, 2.0, 4).unwrap(), 1).unwrap();
        let mut c = interpolate(&dofs, |x| Linear.value(x, 0.0));
        c[4] += 1.0;
        let region = Region { lo: vec![0.0], hi: vec![1.0] };
        let all = norm_error(&c, &dofs, &Linear, 0.0, NormKind::Linf, None).unwrap();
        let part = norm_error(&c, &dofs, &Linear, 0.0, NormKind::Linf, Some(&region)).unwrap();
        assert_eq!(all, 1.0);
        assert_eq!(part, 0.0);
        let empty = Region { lo: vec![0.0], hi: vec![0.1] };
        assert!(norm_error(&c, &dofs, &Linear, 0.0, NormKind::L2, Some(&empty)).is_err());
    }

    #[test]
    fn eoc_examples() {
        let e = eoc(&[4e-2, 1e-2], &[0.2, 0.1]).unwrap();
        assert!((e[0].unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(eoc(&[1.0, 1.0], &[0.2, 0.1]).unwrap()[0], Some(0.0));
        assert_eq!(eoc(&[1.0, 0.0], &[0.2, 0.1]).unwrap()[0], None);
        assert!(eoc(&[1.0], &[0.2]).is_err());
    }

    #[test]
    fn projected_exponential_zeroth_moment_converges() {
        use crate::kernel::{BreakageKernel, CollisionKernel};
        use crate::operators::{AssemblyOptions, OperatorSet};
        use crate::stepper::{project_initial, InitialDatum};
        let target = 1.0 - (-5.0f64).exp();
        let err = |n: usize| {
            let dofs = build_dof_map(&TensorMesh::uniform(1, 0.0, 5.0, n).unwrap(), 1).unwrap();
            let ops = OperatorSet::assemble(
                &dofs,
                &CollisionKernel::zero(1).unwrap(),
                &BreakageKernel::zero(1).unwrap(),
                AssemblyOptions::default(),
            )
            .unwrap();
            let a = project_initial(&InitialDatum::Separable(vec![std::sync::Arc::new(|x: f64| (-x).exp())]), &ops)
                .unwrap();
            (moment(&a, &dofs, &[0]).unwrap() - target).abs()
        };
        // The L² projection preserves ∫u exactly, since 1 lies in the space.
        assert!(err(10) < 1e-13 && err(20) < 1e-13);
    }

    proptest! {
        #[test]
        fn eoc_recovers_power_laws(c in 0.1f64..10.0, p in 0.5f64..5.0, h0 in 0.05f64..1.0) {
            let hs = [h0, h0 / 2.0, h0 / 4.0, h0 / 8.0];
            let es: Vec<f64> = hs.iter().map(|h| c * h.powf(p)).collect();
            for v in eoc(&es, &hs).unwrap() {
                prop_assert!((v.unwrap() - p).abs() < 1e-12);
            }
        }
    }
}
