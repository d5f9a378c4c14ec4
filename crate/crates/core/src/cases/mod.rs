//! Registry of the moment and convergence experiments.

pub mod reference;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::basis::DofMap;
use crate::error::{Error, Result};
use crate::kernel::{Atom, BreakageKernel, CollisionKernel};
use crate::mesh::{TensorMesh, DEFAULT_X_MIN};
use crate::observables::{ExactSolution, Region};
use crate::operators::{assemble_load, kron_vectors, AxisQuadrature};
use crate::quadrature::{gauss_rule, graded_points};
use crate::stepper::{ForcingFn, InitialDatum};

/// Elements left of the atom in `c2` that are excluded from error norms.
pub const C2_EXCLUDED_ELEMENTS: usize = 12;

/// Reported `M₀` growth rate for the polymerization case.
pub const M4_REPORTED_RATE: f64 = 49.0 / 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CaseId {
    M1,
    M2,
    M3,
    M4,
    M5,
    M6,
    C1,
    C2,
    C3,
    C4,
}

impl CaseId {
    pub const ALL: [CaseId; 10] = [
        CaseId::M1,
        CaseId::M2,
        CaseId::M3,
        CaseId::M4,
        CaseId::M5,
        CaseId::M6,
        CaseId::C1,
        CaseId::C2,
        CaseId::C3,
        CaseId::C4,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CaseId::M1 => "m1",
            CaseId::M2 => "m2",
            CaseId::M3 => "m3",
            CaseId::M4 => "m4",
            CaseId::M5 => "m5",
            CaseId::M6 => "m6",
            CaseId::C1 => "c1",
            CaseId::C2 => "c2",
            CaseId::C3 => "c3",
            CaseId::C4 => "c4",
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CaseId::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownCase(s.to_string()))
    }
}

/// Closed-form solutions attached to the convergence cases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CaseSolution {
    /// `κ^{2d} e^{−κ Σx}` with `κ = 1 + t`.
    Exponential { dim: usize },
    /// Smooth branch `e^{−tx}[2t + t²(1−x)]` on `(0, 1)`; the atom `e^{−t} δ(x−1)` is
    /// reported by [`TestCase::atom_weight`].
    AtomSplit,
}

impl ExactSolution for CaseSolution {
    fn value(&self, x: &[f64], t: f64) -> f64 {
        match *self {
            CaseSolution::Exponential { dim } => {
                let k = 1.0 + t;
                k.powi(2 * dim as i32) * (-k * x.iter().sum::<f64>()).exp()
            }
            CaseSolution::AtomSplit => {
                let x = x[0];
                if x < 1.0 {
                    (-t * x).exp() * (2.0 * t + t * t * (1.0 - x))
                } else {
                    0.0
                }
            }
        }
    }

    fn gradient(&self, x: &[f64], t: f64) -> Vec<f64> {
        match *self {
            CaseSolution::Exponential { dim } => {
                let g = -(1.0 + t) * self.value(x, t);
                vec![g; dim]
            }
            CaseSolution::AtomSplit => {
                let x = x[0];
                if x < 1.0 {
                    let e = (-t * x).exp();
                    vec![-t * e * (2.0 * t + t * t * (1.0 - x)) - t * t * e]
                } else {
                    vec![0.0]
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct TestCase {
    pub id: CaseId,
    pub title: &'static str,
    pub dim: usize,
    pub gamma: CollisionKernel,
    /// Breakage kernel as stated for the case.
    pub beta: BreakageKernel,
    /// Alternative kernels selectable by name.
    pub beta_variants: Vec<BreakageKernel>,
    pub initial: InitialDatum,
    pub x_min: f64,
    pub x_max: f64,
    pub t_final: f64,
    pub snapshots: Vec<f64>,
    pub tau: f64,
    pub default_n: usize,
    pub default_degree: usize,
    pub mass_conserving: bool,
}

fn exp_datum(dim: usize) -> InitialDatum {
    let f: crate::stepper::AxisFn = Arc::new(|x: f64| (-x).exp());
    InitialDatum::Separable(vec![f; dim])
}

fn times(step: f64, count: usize) -> Vec<f64> {
    (1..=count).map(|i| step * i as f64).collect()
}

/// All ten cases in registry order.
pub fn registry() -> Vec<TestCase> {
    CaseId::ALL.into_iter().map(|id| case(id).expect("registry kernels are valid")).collect()
}

pub fn case(id: CaseId) -> Result<TestCase> {
    let product = |d| CollisionKernel::product(d);
    let uniform = |d| BreakageKernel::multi_uniform(d);
    let dirac = |d| InitialDatum::DiracProduct { location: vec![1.0; d], weight: 1.0 };
    let base = |title, dim, gamma, beta, initial, x_max, t_final, snapshots, tau, n| TestCase {
        id,
        title,
        dim,
        gamma,
        beta,
        beta_variants: Vec::new(),
        initial,
        x_min: DEFAULT_X_MIN,
        x_max,
        t_final,
        snapshots,
        tau,
        default_n: n,
        default_degree: 1,
        mass_conserving: true,
    };
    let c = match id {
        CaseId::M1 => base(
            "product kernel, binary uniform breakage, exponential data",
            1,
            product(1)?,
            uniform(1)?,
            exp_datum(1),
            5.0,
            10.0,
            times(2.0, 5),
            1e-3,
            320,
        ),
        CaseId::M2 => base(
            "constant kernel, binary deterministic breakage at 0.4y and 0.6y, exponential data",
            1,
            CollisionKernel::constant(1)?,
            BreakageKernel::dirac(
                1,
                vec![Atom { ratio: 0.4, weight: 1.0 }, Atom { ratio: 0.6, weight: 1.0 }],
            )?,
            exp_datum(1),
            5.0,
            0.75,
            times(0.15, 5),
            1e-3,
            320,
        ),
        CaseId::M3 => {
            let mut c = base(
                "product kernel, ternary breakage (3/2) x^{1/2} y^{1/2}, exponential data",
                1,
                product(1)?,
                BreakageKernel::ternary_literal()?,
                exp_datum(1),
                5.0,
                5.0,
                times(1.0, 5),
                1e-3,
                320,
            );
            c.beta_variants = vec![BreakageKernel::ternary_normalized()?];
            c.mass_conserving = false;
            c
        }
        CaseId::M4 => base(
            "polymerization kernel x^{1/3} y^{1/3}, binary uniform breakage, exponential data",
            1,
            CollisionKernel::polymerization(1, 0.0)?,
            uniform(1)?,
            exp_datum(1),
            5.0,
            5.0,
            times(1.0, 5),
            1e-3,
            320,
        ),
        CaseId::M5 => base(
            "2D product kernel, breakage 4/(y1 y2), monodisperse data at (1, 1)",
            2,
            product(2)?,
            uniform(2)?,
            dirac(2),
            2.0,
            3.0,
            times(0.6, 5),
            1e-3,
            80,
        ),
        CaseId::M6 => base(
            "3D product kernel, breakage 8/(y1 y2 y3), monodisperse data at (1, 1, 1)",
            3,
            product(3)?,
            uniform(3)?,
            dirac(3),
            2.0,
            2.0,
            times(0.4, 5),
            1e-3,
            20,
        ),
        CaseId::C1 => base(
            "exact exponential solution (1+t)^2 exp(-(1+t)x)",
            1,
            product(1)?,
            uniform(1)?,
            exp_datum(1),
            5.0,
            1.0,
            vec![0.3, 0.6, 0.9, 1.0],
            1e-4,
            320,
        ),
        CaseId::C2 => base(
            "monodisperse data at x = 1 with exact smooth branch plus decaying atom",
            1,
            product(1)?,
            uniform(1)?,
            dirac(1),
            5.0,
            1.0,
            vec![1.0],
            1e-4,
            320,
        ),
        CaseId::C3 => base(
            "2D manufactured exponential solution (1+t)^4 exp(-(1+t)(x1+x2))",
            2,
            product(2)?,
            uniform(2)?,
            exp_datum(2),
            2.0,
            1.0,
            vec![1.0],
            1e-3,
            8,
        ),
        CaseId::C4 => base(
            "3D manufactured exponential solution (1+t)^6 exp(-(1+t)(x1+x2+x3))",
            3,
            product(3)?,
            uniform(3)?,
            exp_datum(3),
            2.0,
            1.0,
            vec![1.0],
            1e-3,
            4,
        ),
    };
    Ok(c)
}

pub fn lookup(name: &str) -> Result<TestCase> {
    case(name.parse()?)
}

impl TestCase {
    pub fn mesh(&self, n: usize) -> Result<TensorMesh> {
        TensorMesh::uniform(self.dim, self.x_min, self.x_max, n)
    }

    /// The stated kernel or a variant selected by name.
    pub fn breakage(&self, name: Option<&str>) -> Result<BreakageKernel> {
        match name {
            None => Ok(self.beta.clone()),
            Some(n) if n == self.beta.name => Ok(self.beta.clone()),
            Some(n) => self
                .beta_variants
                .iter()
                .find(|b| b.name == n)
                .cloned()
                .ok_or_else(|| Error::Config(format!("case {} has no breakage variant `{n}`", self.id))),
        }
    }

    pub fn has_exact_solution(&self) -> bool {
        self.exact_solution().is_some()
    }

    pub fn exact_solution(&self) -> Option<CaseSolution> {
        match self.id {
            CaseId::C1 | CaseId::C3 | CaseId::C4 => Some(CaseSolution::Exponential { dim: self.dim }),
            CaseId::C2 => Some(CaseSolution::AtomSplit),
            _ => None,
        }
    }

    /// Weight of the atom carried at `x = 1` by `c2`.
    pub fn atom_weight(&self, t: f64) -> Option<f64> {
        (self.id == CaseId::C2).then(|| (-t).exp())
    }

    /// Region where errors against the exact solution are measured.
    pub fn error_region(&self, mesh: &TensorMesh) -> Option<Region> {
        match self.id {
            CaseId::C2 => {
                let h = mesh.axis(0).max_element_size();
                Some(Region { lo: vec![self.x_min], hi: vec![1.0 - C2_EXCLUDED_ELEMENTS as f64 * h] })
            }
            _ => None,
        }
    }

    /// Moment closure `M_k(t)` as stated for the case.
    pub fn exact_moment(&self, k: &[u32], t: f64) -> Result<f64> {
        let missing = || Error::NoClosedForm(format!("moment {k:?} of case {}", self.id));
        if k.len() != self.dim {
            return Err(missing());
        }
        let all = |v: u32| k.iter().all(|&e| e == v);
        match self.id {
            CaseId::C1 | CaseId::C3 | CaseId::C4 => {
                let kappa = 1.0 + t;
                let mut m = kappa.powi(2 * self.dim as i32);
                for &e in k {
                    m *= factorial(e) / kappa.powi(e as i32 + 1);
                }
                Ok(m)
            }
            _ if all(1) => Ok(1.0),
            _ if all(0) => Ok(match self.id {
                CaseId::M1 | CaseId::M3 | CaseId::C2 => 1.0 + t,
                CaseId::M2 => 1.0 / (1.0 - t),
                CaseId::M4 => 1.0 + M4_REPORTED_RATE * t,
                CaseId::M5 => 1.0 + 3.0 * t,
                CaseId::M6 => 1.0 + 7.0 * t,
                _ => unreachable!(),
            }),
            _ => Err(missing()),
        }
    }

    /// `dM₀/dt` at `t = 0` implied by the stated closure.
    pub fn closure_number_rate(&self) -> f64 {
        match self.id {
            CaseId::M1 | CaseId::M2 | CaseId::M3 | CaseId::C1 | CaseId::C2 => 1.0,
            CaseId::M4 => M4_REPORTED_RATE,
            CaseId::M5 => 3.0,
            CaseId::M6 => 7.0,
            CaseId::C3 => 2.0,
            CaseId::C4 => 3.0,
        }
    }

    /// Source term that turns the exact solution into a solution of the discrete model on
    /// the truncated box; `None` when no source is needed.
    pub fn forcing(&self, dofs: &DofMap) -> Result<Option<ForcingFn>> {
        if !matches!(self.id, CaseId::C1 | CaseId::C3 | CaseId::C4) {
            return Ok(None);
        }
        if dofs.dim() != self.dim {
            return Err(Error::Config("mesh dimension does not match the case".into()));
        }
        let d = self.dim;
        let (lo, hi) = (self.x_min, self.x_max);
        let axes: Vec<_> = dofs.axes().to_vec();
        let quads = axes
            .iter()
            .map(|ax| AxisQuadrature::gauss(ax, ax.degree() + 4))
            .collect::<Result<Vec<_>>>()?;
        let f: ForcingFn = Arc::new(move |t: f64| {
            let k = 1.0 + t;
            let kd = k.powi(2 * d as i32);
            let i1 = |a: f64, b: f64| -> f64 {
                let prim = |x: f64| -(x / k + 1.0 / (k * k)) * (-k * x).exp();
                prim(b) - prim(a)
            };
            let h = kd * i1(lo, hi).powi(d as i32);
            let load = |a: usize, f: &dyn Fn(f64) -> f64| assemble_load(&axes[a], f, &quads[a]).expect("valid degree");
            let e: Vec<Vec<f64>> = (0..d).map(|a| load(a, &|x| (-k * x).exp())).collect();
            let xe: Vec<Vec<f64>> = (0..d).map(|a| load(a, &|x| x * (-k * x).exp())).collect();
            let tail: Vec<Vec<f64>> =
                (0..d).map(|a| load(a, &|x| ((-k * x).exp() - (-k * hi).exp()) / k)).collect();
            let mut out: Vec<f64> = kron_vectors(&e).into_iter().map(|v| 2.0 * d as f64 * kd / k * v).collect();
            for a in 0..d {
                let mut parts = e.clone();
                parts[a] = xe[a].clone();
                for (o, v) in out.iter_mut().zip(kron_vectors(&parts)) {
                    *o -= kd * v;
                }
            }
            let gain_scale = (1u32 << d) as f64 * kd * h;
            for ((o, l), g) in out.iter_mut().zip(kron_vectors(&xe)).zip(kron_vectors(&tail)) {
                *o += kd * h * l - gain_scale * g;
            }
            out
        });
        Ok(Some(f))
    }

    /// `∬ (ν(y) − 1) Γ(y, z) u₀(y) u₀(z)`, the number growth rate at `t = 0`, by direct
    /// double quadrature over the untruncated half-line.
    pub fn number_rate_oracle(&self, beta: &BreakageKernel) -> Result<f64> {
        match &self.initial {
            InitialDatum::DiracProduct { location, weight } => {
                let nu = beta.multiplicity(location)?;
                Ok(weight * weight * (nu - 1.0) * self.gamma.eval(location, location))
            }
            InitialDatum::Separable(fs) if self.dim == 1 => {
                let pts = half_line_points()?;
                let nu = pts.iter().map(|&(y, _)| beta.multiplicity(&[y])).collect::<Result<Vec<_>>>()?;
                let u: Vec<f64> = pts.iter().map(|&(y, _)| fs[0](y)).collect();
                let mut total = 0.0;
                for (i, &(y, wy)) in pts.iter().enumerate() {
                    let mut inner = 0.0;
                    for (j, &(z, wz)) in pts.iter().enumerate() {
                        inner += wz * self.gamma.eval(&[y], &[z]) * u[j];
                    }
                    total += wy * (nu[i] - 1.0) * u[i] * inner;
                }
                Ok(total)
            }
            _ => Err(Error::NoClosedForm(format!("number rate oracle for case {}", self.id))),
        }
    }

    /// `M_k(0)` of the initial datum over the untruncated half-line.
    pub fn initial_moment(&self, k: &[u32]) -> Result<f64> {
        if k.len() != self.dim {
            return Err(Error::Config("moment index has the wrong length".into()));
        }
        match &self.initial {
            InitialDatum::DiracProduct { location, weight } => {
                Ok(weight * location.iter().zip(k).map(|(x, &e)| x.powi(e as i32)).product::<f64>())
            }
            InitialDatum::Separable(fs) => {
                let pts = half_line_points()?;
                Ok(fs
                    .iter()
                    .zip(k)
                    .map(|(f, &e)| pts.iter().map(|&(x, w)| w * x.powi(e as i32) * f(x)).sum::<f64>())
                    .product())
            }
            InitialDatum::Smooth(_) => Err(Error::NoClosedForm("moments of a non-separable datum".into())),
        }
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Graded points on `(0, 1]` followed by unit panels up to 60.
fn half_line_points() -> Result<Vec<(f64, f64)>> {
    let rule = gauss_rule(16)?;
    let mut pts = graded_points(&rule, 0.0, 1.0);
    for p in 1..60 {
        pts.extend(rule.mapped(p as f64, p as f64 + 1.0));
    }
    Ok(pts)
}

/// Closure rate against the direct rate for one kernel choice.
#[derive(Debug, Clone, PartialEq)]
pub struct RateCheck {
    pub case: CaseId,
    pub kernel: String,
    pub closure: f64,
    pub oracle: f64,
    pub consistent: bool,
}

/// Growth-rate consistency of the moment closures of the moment cases, every kernel
/// variant included.
pub fn rate_checks() -> Result<Vec<RateCheck>> {
    let mut out = Vec::new();
    for id in [CaseId::M1, CaseId::M2, CaseId::M3, CaseId::M4, CaseId::M5, CaseId::M6] {
        let c = case(id)?;
        for beta in std::iter::once(&c.beta).chain(&c.beta_variants) {
            let oracle = c.number_rate_oracle(beta)?;
            let closure = c.closure_number_rate();
            out.push(RateCheck {
                case: id,
                kernel: beta.name.clone(),
                closure,
                oracle,
                consistent: (oracle - closure).abs() <= 1e-6 * closure.abs().max(1.0),
            });
        }
    }
    Ok(out)
}

/// Stated property that cannot be reproduced from the stated data.
#[derive(Debug, Clone, PartialEq)]
pub struct Discrepancy {
    pub case: CaseId,
    pub quantity: String,
    pub stated: f64,
    pub derived: f64,
    pub detail: String,
}

pub fn discrepancy_report() -> Result<Vec<Discrepancy>> {
    let mut out = Vec::new();
    let m3 = case(CaseId::M3)?;
    let check = m3.beta.check_hypervolume_conservation(&[1.0], 1e-12)?;
    out.push(Discrepancy {
        case: CaseId::M3,
        quantity: "hypervolume defect at y=1".into(),
        stated: 0.0,
        derived: check.defect,
        detail: format!("kernel {} does not conserve volume although M1 = 1 is stated", m3.beta.name),
    });
    for rc in rate_checks()?.into_iter().filter(|r| !r.consistent) {
        out.push(Discrepancy {
            case: rc.case,
            quantity: "dM0/dt at t=0".into(),
            stated: rc.closure,
            derived: rc.oracle,
            detail: format!("double quadrature with kernel {}", rc.kernel),
        });
    }
    Ok(out)
}

/// Discrepancies as CSV with shortest round-trip numbers.
pub fn discrepancy_csv(rows: &[Discrepancy]) -> String {
    let mut s = String::from("case,quantity,stated,derived,detail\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{},{}\n", r.case, r.quantity, r.stated, r.derived, r.detail));
    }
    s
}
