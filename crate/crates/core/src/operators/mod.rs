//! Mass matrix and factorized loss/gain operators of the Galerkin system, with the
//! nonlinear residual and its Jacobian.

mod dump;
pub mod oracle;

pub use dump::OperatorDump;

use crate::basis::{interpolate, AxisDofs, DofMap, ReferenceBasis, MAX_DEGREE};
use crate::error::{config, Error, Result};
use crate::kernel::{product_smoothness, BreakageAxis, BreakageKernel, CollisionKernel, Factor, Smoothness};
use crate::linalg::{apply_mode, dot, kron_solve_in_place, BandedCholesky, DenseMatrix};
use crate::quadrature::{gauss_rule, graded_points, QuadratureRule};

/// Largest system for which a dense Jacobian is materialized.
pub const DENSE_JACOBIAN_LIMIT: usize = 4096;

const NONPOLYNOMIAL_POINTS: usize = 12;

/// How the quadratic nonlinearity is contracted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Nonlinearity {
    /// Full bilinear form `A(u_h, u_h; φ_j) − B(u_h, u_h; φ_j)`.
    #[default]
    Consistent,
    /// Diagonal interactions only: `Σ_i (A − B)(φ_i, φ_i; φ_j) α_i²`.
    Hadamard,
}

impl std::str::FromStr for Nonlinearity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "consistent" => Ok(Self::Consistent),
            "hadamard" => Ok(Self::Hadamard),
            _ => config(format!("unknown nonlinearity mode `{s}` (consistent|hadamard)")),
        }
    }
}

impl std::fmt::Display for Nonlinearity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Consistent => "consistent",
            Self::Hadamard => "hadamard",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AssemblyOptions {
    pub mode: Nonlinearity,
    /// Gauss points per element and axis; derived from the kernels when `None`.
    pub quad_points: Option<usize>,
}

/// Element quadrature for one axis; loss and gain use the same outer points.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisQuadrature {
    points: Vec<Vec<(f64, f64)>>,
    base: QuadratureRule,
    graded: bool,
}

impl AxisQuadrature {
    /// Plain Gauss rule with `n` points on every element.
    pub fn gauss(axis: &AxisDofs, n: usize) -> Result<Self> {
        Self::build(axis, gauss_rule(n)?, false)
    }

    /// Rule chosen from the regularity of every integrand that appears on axis `a`.
    pub fn for_kernels(
        axis: &AxisDofs,
        a: usize,
        gamma: &CollisionKernel,
        beta: &BreakageKernel,
        override_n: Option<usize>,
    ) -> Result<Self> {
        let r = axis.degree();
        let mut smooth = Smoothness::Polynomial(0);
        let mut degree = 2 * r;
        let deg = |s: Smoothness| match s {
            Smoothness::Polynomial(d) => d,
            _ => 0,
        };
        for t in &gamma.terms {
            let (sg, sh) = (t.g[a].smoothness(), t.h[a].smoothness());
            smooth = smooth.merge(sg).merge(sh);
            degree = degree.max(2 * r + deg(sg)).max(r + deg(sh));
            for s in &beta.terms {
                if let BreakageAxis::Smooth { f, q } = &s.axes[a] {
                    let sqg = product_smoothness(&[*q, t.g[a]]);
                    let sf = f.smoothness();
                    smooth = smooth.merge(sqg).merge(sf);
                    degree = degree.max(2 * r + 1 + deg(sqg) + deg(sf));
                }
            }
        }
        let (n, graded) = match smooth {
            Smoothness::Polynomial(_) => ((r + 3).max((degree + 1).div_ceil(2)).min(32), false),
            Smoothness::Smooth => ((r + 3).max(NONPOLYNOMIAL_POINTS), false),
            Smoothness::Singular => ((r + 3).max(NONPOLYNOMIAL_POINTS), true),
        };
        Self::build(axis, gauss_rule(override_n.unwrap_or(n))?, graded)
    }

    fn build(axis: &AxisDofs, base: QuadratureRule, graded: bool) -> Result<Self> {
        let ax = axis.axis();
        let points = (0..ax.num_elements())
            .map(|e| {
                let (a, b) = ax.element(e);
                if graded && near_origin(a, b) {
                    graded_points(&base, a, b)
                } else {
                    base.mapped(a, b).collect()
                }
            })
            .collect();
        Ok(Self { points, base, graded })
    }

    pub fn element(&self, e: usize) -> &[(f64, f64)] {
        &self.points[e]
    }

    pub fn points_per_element(&self) -> usize {
        self.base.len()
    }

    pub fn is_graded(&self) -> bool {
        self.graded
    }
}

pub(crate) fn near_origin(a: f64, b: f64) -> bool {
    a < 0.5 * (b - a)
}

fn local_values(basis: &ReferenceBasis, axis: &AxisDofs, e: usize, x: f64) -> [f64; MAX_DEGREE + 1] {
    let (a, b) = axis.axis().element(e);
    basis.values((x - a) / (b - a))
}

/// Gram matrix `∫ φ_i φ_j` of one axis.
pub fn assemble_mass(axis: &AxisDofs, quad: &AxisQuadrature) -> Result<DenseMatrix> {
    assemble_weighted_mass(axis, &Factor::Constant, quad)
}

/// `W[j, i] = ∫ φ_j φ_i g`.
pub fn assemble_weighted_mass(axis: &AxisDofs, g: &Factor, quad: &AxisQuadrature) -> Result<DenseMatrix> {
    let basis = ReferenceBasis::new(axis.degree())?;
    let r = axis.degree();
    let mut m = DenseMatrix::zeros(axis.len(), axis.len());
    for e in 0..axis.axis().num_elements() {
        let g0 = axis.global(e, 0);
        for &(x, w) in quad.element(e) {
            let v = local_values(&basis, axis, e, x);
            let wg = w * g.eval(x);
            for k in 0..=r {
                for l in 0..=r {
                    m[(g0 + k, g0 + l)] += wg * v[k] * v[l];
                }
            }
        }
    }
    Ok(m)
}

/// `v[k] = ∫ h φ_k`.
pub fn assemble_load(axis: &AxisDofs, h: impl Fn(f64) -> f64, quad: &AxisQuadrature) -> Result<Vec<f64>> {
    let basis = ReferenceBasis::new(axis.degree())?;
    let mut v = vec![0.0; axis.len()];
    for e in 0..axis.axis().num_elements() {
        let g0 = axis.global(e, 0);
        for &(x, w) in quad.element(e) {
            let vals = local_values(&basis, axis, e, x);
            let wh = w * h(x);
            for k in 0..=axis.degree() {
                v[g0 + k] += wh * vals[k];
            }
        }
    }
    Ok(v)
}

/// Loss factors of one axis: `W = ∫ φ_j φ_i g` and `v = ∫ h φ_k`.
pub fn assemble_loss(
    axis: &AxisDofs,
    g: &Factor,
    h: &Factor,
    quad: &AxisQuadrature,
) -> Result<(DenseMatrix, Vec<f64>)> {
    Ok((assemble_weighted_mass(axis, g, quad)?, assemble_load(axis, |x| h.eval(x), quad)?))
}

/// Gain factor of one axis for breakage factor `b` and collision factor `g`.
///
/// Smooth factors `f(x) q(y)` give `Ĝ[j, i] = ∫ q g φ_i (y) ∫_{x_min}^{y} f φ_j dx dy`, the
/// double integral taken with the outer variable `y` on the same points as the loss
/// operator. Combs give `Σ_m w_m ∫ φ_j(a_m y) g(y) φ_i(y) dy` over `a_m y ≥ x_min`.
pub fn assemble_gain(
    axis: &AxisDofs,
    b: &BreakageAxis,
    g: &Factor,
    quad: &AxisQuadrature,
) -> Result<DenseMatrix> {
    match b {
        BreakageAxis::Smooth { f, q } => smooth_gain(axis, f, q, g, quad),
        BreakageAxis::Comb { atoms } => {
            let mut total = DenseMatrix::zeros(axis.len(), axis.len());
            for atom in atoms {
                if !(atom.ratio > 0.0 && atom.ratio < 1.0) {
                    return config(format!("atom ratio {} outside (0, 1)", atom.ratio));
                }
                total.add_scaled(atom.weight, &comb_gain(axis, atom.ratio, g, quad)?);
            }
            Ok(total)
        }
    }
}

fn smooth_gain(axis: &AxisDofs, f: &Factor, q: &Factor, g: &Factor, quad: &AxisQuadrature) -> Result<DenseMatrix> {
    let r = axis.degree();
    let basis = ReferenceBasis::new(r)?;
    let n = axis.len();
    let (inner, inner_graded) = match f.smoothness() {
        Smoothness::Polynomial(d) => (gauss_rule((r + d + 2).div_ceil(2).max(r + 2))?, false),
        Smoothness::Smooth => (gauss_rule(NONPOLYNOMIAL_POINTS.max(r + 3))?, false),
        Smoothness::Singular => (gauss_rule(NONPOLYNOMIAL_POINTS.max(r + 3))?, true),
    };
    let ax = axis.axis();
    let (elem0_a, elem0_b) = ax.element(0);
    let partial = |e: usize, a: f64, y: f64| -> [f64; MAX_DEGREE + 1] {
        let mut out = [0.0; MAX_DEGREE + 1];
        let pts: Vec<(f64, f64)> = if inner_graded && e == 0 && near_origin(elem0_a, elem0_b) {
            graded_points(&inner, a, y)
        } else {
            inner.mapped(a, y).collect()
        };
        for (x, w) in pts {
            let vals = local_values(&basis, axis, e, x);
            let wf = w * f.eval(x);
            for k in 0..=r {
                out[k] += wf * vals[k];
            }
        }
        out
    };
    let mut gain = DenseMatrix::zeros(n, n);
    let mut cum = vec![0.0; n];
    for e in 0..ax.num_elements() {
        let (a, b) = ax.element(e);
        let g0 = axis.global(e, 0);
        for &(y, wy) in quad.element(e) {
            let vi = local_values(&basis, axis, e, y);
            let p = partial(e, a, y);
            let base = wy * q.eval(y) * g.eval(y);
            for i in 0..=r {
                let coef = base * vi[i];
                if coef == 0.0 {
                    continue;
                }
                let col = g0 + i;
                for (j, cj) in cum.iter().enumerate().take(g0 + 1) {
                    gain[(j, col)] += coef * cj;
                }
                for k in 0..=r {
                    gain[(g0 + k, col)] += coef * p[k];
                }
            }
        }
        let full = partial(e, a, b);
        for k in 0..=r {
            cum[g0 + k] += full[k];
        }
    }
    Ok(gain)
}

fn comb_gain(axis: &AxisDofs, ratio: f64, g: &Factor, quad: &AxisQuadrature) -> Result<DenseMatrix> {
    let r = axis.degree();
    let basis = ReferenceBasis::new(r)?;
    let ax = axis.axis();
    let nodes = ax.nodes();
    let y_min = ax.x_min() / ratio;
    let mut d = DenseMatrix::zeros(axis.len(), axis.len());
    let rule = &quad.base;
    for e in 0..ax.num_elements() {
        let (a, b) = ax.element(e);
        let lo = a.max(y_min);
        if lo >= b {
            continue;
        }
        let mut breaks = vec![lo];
        breaks.extend(nodes.iter().map(|&x| x / ratio).filter(|&y| y > lo && y < b));
        breaks.push(b);
        let g0 = axis.global(e, 0);
        for win in breaks.windows(2) {
            let (p, q) = (win[0], win[1]);
            let Some(ex) = ax.locate(ratio * 0.5 * (p + q)) else { continue };
            let gx = axis.global(ex, 0);
            let pts: Vec<(f64, f64)> = if quad.graded && near_origin(p, q) {
                graded_points(rule, p, q)
            } else {
                rule.mapped(p, q).collect()
            };
            for (y, w) in pts {
                let vi = local_values(&basis, axis, e, y);
                let vj = local_values(&basis, axis, ex, ratio * y);
                let wg = w * g.eval(y);
                for i in 0..=r {
                    for k in 0..=r {
                        d[(gx + k, g0 + i)] += wg * vj[k] * vi[i];
                    }
                }
            }
        }
    }
    Ok(d)
}

/// `coeff · (A_0 ⊗ … ⊗ A_{d-1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct KronOp {
    pub coeff: f64,
    pub factors: Vec<DenseMatrix>,
}

impl KronOp {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let dims: Vec<usize> = self.factors.iter().map(|f| f.cols()).collect();
        let mut cur = x.to_vec();
        for (a, f) in self.factors.iter().enumerate() {
            cur = apply_mode(f, &cur, &dims, a);
        }
        if self.coeff != 1.0 {
            cur.iter_mut().for_each(|v| *v *= self.coeff);
        }
        cur
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = self.factors[0].clone();
        for f in &self.factors[1..] {
            m = m.kron(f);
        }
        m.scale(self.coeff);
        m
    }
}

/// Operators generated by one collision term `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionOps {
    /// `c_t ⊗ W_{t,a}`
    pub loss: KronOp,
    /// Per-axis moment vectors `v_{t,a}`.
    pub moments: Vec<Vec<f64>>,
    /// `⊗ v_{t,a}`
    pub v: Vec<f64>,
    /// One entry per breakage term.
    pub gains: Vec<KronOp>,
}

/// Constants of the stability diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityBound {
    pub c0: f64,
    pub b0: Option<f64>,
    pub measure: f64,
    /// `C₀ b₀ |D|^{3/2} + C₀ |D|^{1/2}`.
    pub k: Option<f64>,
}

impl StabilityBound {
    /// Largest step covered by the stability lemma, `1 / (4K)`.
    pub fn max_step(&self) -> Option<f64> {
        self.k.map(|k| if k > 0.0 { 0.25 / k } else { f64::INFINITY })
    }
}

/// Everything the time stepper needs on one degree-of-freedom map.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    dofs: DofMap,
    mass: Vec<DenseMatrix>,
    mass_chol: Vec<BandedCholesky>,
    terms: Vec<CollisionOps>,
    merged: Option<Vec<DenseMatrix>>,
    c0: Vec<f64>,
    c1: Vec<f64>,
    w0: Vec<f64>,
    w1: Vec<f64>,
    mode: Nonlinearity,
    stability: StabilityBound,
    kernel_id: String,
}

impl OperatorSet {
    pub fn assemble(
        dofs: &DofMap,
        gamma: &CollisionKernel,
        beta: &BreakageKernel,
        opts: AssemblyOptions,
    ) -> Result<Self> {
        let d = dofs.dim();
        if gamma.dim != d || beta.dim != d {
            return config(format!(
                "kernel dimensions ({}, {}) do not match the mesh dimension {d}",
                gamma.dim, beta.dim
            ));
        }
        let quads = (0..d)
            .map(|a| AxisQuadrature::for_kernels(dofs.axis(a), a, gamma, beta, opts.quad_points))
            .collect::<Result<Vec<_>>>()?;
        let mut mass = Vec::with_capacity(d);
        for a in 0..d {
            let mq = AxisQuadrature::gauss(dofs.axis(a), dofs.degree() + 1)?;
            mass.push(assemble_mass(dofs.axis(a), &mq)?);
        }
        let mut terms = Vec::with_capacity(gamma.terms.len());
        for t in &gamma.terms {
            let mut w = Vec::with_capacity(d);
            let mut moments = Vec::with_capacity(d);
            for a in 0..d {
                let (wa, va) = assemble_loss(dofs.axis(a), &t.g[a], &t.h[a], &quads[a])?;
                w.push(wa);
                moments.push(va);
            }
            let mut gains = Vec::with_capacity(beta.terms.len());
            for s in &beta.terms {
                let factors = (0..d)
                    .map(|a| assemble_gain(dofs.axis(a), &s.axes[a], &t.g[a], &quads[a]))
                    .collect::<Result<Vec<_>>>()?;
                gains.push(KronOp { coeff: s.coeff * t.coeff, factors });
            }
            terms.push(CollisionOps {
                loss: KronOp { coeff: t.coeff, factors: w },
                v: kron_vectors(&moments),
                moments,
                gains,
            });
        }
        let lo: Vec<f64> = dofs.axes().iter().map(|a| a.axis().x_min()).collect();
        let hi: Vec<f64> = dofs.axes().iter().map(|a| a.axis().x_max()).collect();
        let measure: f64 = lo.iter().zip(&hi).map(|(l, h)| h - l).product();
        let c0 = gamma.bound(&lo, &hi);
        let b0 = beta.bound(&lo, &hi);
        let stability = StabilityBound {
            c0,
            b0,
            measure,
            k: b0.map(|b0| c0 * b0 * measure.powf(1.5) + c0 * measure.sqrt()),
        };
        Self::from_parts(
            dofs.clone(),
            mass,
            terms,
            opts.mode,
            stability,
            format!("{}|{}", gamma.name, beta.name),
        )
    }

    pub(crate) fn from_parts(
        dofs: DofMap,
        mass: Vec<DenseMatrix>,
        terms: Vec<CollisionOps>,
        mode: Nonlinearity,
        stability: StabilityBound,
        kernel_id: String,
    ) -> Result<Self> {
        let mass_chol = mass.iter().map(BandedCholesky::factor).collect::<Result<Vec<_>>>()?;
        let merged = (dofs.dim() == 1).then(|| {
            terms
                .iter()
                .map(|t| {
                    let mut k = t.loss.to_dense();
                    for g in &t.gains {
                        k.add_scaled(-1.0, &g.to_dense());
                    }
                    k
                })
                .collect()
        });
        let c0 = vec![1.0; dofs.len()];
        let c1 = interpolate(&dofs, |x| x.iter().product());
        let mut ops = Self {
            dofs,
            mass,
            mass_chol,
            terms,
            merged,
            c0,
            c1,
            w0: Vec::new(),
            w1: Vec::new(),
            mode,
            stability,
            kernel_id,
        };
        ops.w0 = ops.mass_apply(&ops.c0);
        ops.w1 = ops.mass_apply(&ops.c1);
        Ok(ops)
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn mode(&self) -> Nonlinearity {
        self.mode
    }

    pub fn with_mode(mut self, mode: Nonlinearity) -> Self {
        self.mode = mode;
        self
    }

    pub fn kernel_id(&self) -> &str {
        &self.kernel_id
    }

    pub fn terms(&self) -> &[CollisionOps] {
        &self.terms
    }

    pub fn axis_mass(&self) -> &[DenseMatrix] {
        &self.mass
    }

    pub fn stability(&self) -> StabilityBound {
        self.stability
    }

    /// Number functional `w⁽⁰⁾_j = ∫ φ_j`.
    pub fn w0(&self) -> &[f64] {
        &self.w0
    }

    /// Hypervolume functional `w⁽¹⁾_j = ∫ (Π x_i) φ_j`.
    pub fn w1(&self) -> &[f64] {
        &self.w1
    }

    /// Nodal coefficients of the constant one.
    pub fn c0(&self) -> &[f64] {
        &self.c0
    }

    /// Nodal coefficients of `Π x_i`.
    pub fn c1(&self) -> &[f64] {
        &self.c1
    }

    fn dims(&self) -> Vec<usize> {
        self.dofs.axis_lens()
    }

    pub fn mass_apply(&self, x: &[f64]) -> Vec<f64> {
        let dims = self.dims();
        let mut cur = x.to_vec();
        for (a, m) in self.mass.iter().enumerate() {
            cur = apply_mode(m, &cur, &dims, a);
        }
        cur
    }

    pub fn mass_solve_in_place(&self, x: &mut [f64]) {
        let f: Vec<&BandedCholesky> = self.mass_chol.iter().collect();
        kron_solve_in_place(&f, x);
    }

    pub fn mass_dense(&self) -> Result<DenseMatrix> {
        self.guard_dense("dense mass matrix")?;
        let mut m = self.mass[0].clone();
        for f in &self.mass[1..] {
            m = m.kron(f);
        }
        Ok(m)
    }

    fn guard_dense(&self, what: &'static str) -> Result<()> {
        if self.len() > DENSE_JACOBIAN_LIMIT {
            return Err(Error::SizeGuard { what, size: self.len(), limit: DENSE_JACOBIAN_LIMIT });
        }
        Ok(())
    }

    /// `K_t x = (c_t ⊗W_t − Σ_s G_{s,t}) x`.
    pub fn k_apply(&self, t: usize, x: &[f64]) -> Vec<f64> {
        if let Some(m) = &self.merged {
            return m[t].matvec(x);
        }
        let term = &self.terms[t];
        let mut out = term.loss.apply(x);
        for g in &term.gains {
            for (o, v) in out.iter_mut().zip(g.apply(x)) {
                *o -= v;
            }
        }
        out
    }

    fn k_dense(&self, t: usize) -> DenseMatrix {
        if let Some(m) = &self.merged {
            return m[t].clone();
        }
        let term = &self.terms[t];
        let mut k = term.loss.to_dense();
        for g in &term.gains {
            k.add_scaled(-1.0, &g.to_dense());
        }
        k
    }

    fn coupling(&self, t: usize, alpha: &[f64]) -> Vec<f64> {
        match self.mode {
            Nonlinearity::Consistent => alpha.to_vec(),
            Nonlinearity::Hadamard => self.terms[t].v.iter().zip(alpha).map(|(v, a)| v * a * a).collect(),
        }
    }

    /// Collision loss `A(u_h, u_h; φ_j)`.
    pub fn loss(&self, alpha: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (t, term) in self.terms.iter().enumerate() {
            let (scale, x) = self.contraction(t, alpha);
            for (o, v) in out.iter_mut().zip(term.loss.apply(&x)) {
                *o += scale * v;
            }
        }
        out
    }

    /// Breakage gain `B(u_h, u_h; φ_j)`.
    pub fn gain(&self, alpha: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (t, term) in self.terms.iter().enumerate() {
            let (scale, x) = self.contraction(t, alpha);
            for g in &term.gains {
                for (o, v) in out.iter_mut().zip(g.apply(&x)) {
                    *o += scale * v;
                }
            }
        }
        out
    }

    fn contraction(&self, t: usize, alpha: &[f64]) -> (f64, Vec<f64>) {
        match self.mode {
            Nonlinearity::Consistent => (dot(&self.terms[t].v, alpha), alpha.to_vec()),
            Nonlinearity::Hadamard => (1.0, self.coupling(t, alpha)),
        }
    }

    /// `N(α) = loss(α) − gain(α)`.
    pub fn nonlinear_residual(&self, alpha: &[f64]) -> Vec<f64> {
        self.linearize(alpha).residual
    }

    /// Residual and the data needed for Jacobian products at `alpha`.
    pub fn linearize(&self, alpha: &[f64]) -> Linearization {
        let n = self.len();
        let mut residual = vec![0.0; n];
        let mut parts = Vec::with_capacity(self.terms.len());
        for (t, term) in self.terms.iter().enumerate() {
            match self.mode {
                Nonlinearity::Consistent => {
                    let s = dot(&term.v, alpha);
                    let ka = self.k_apply(t, alpha);
                    for (r, k) in residual.iter_mut().zip(&ka) {
                        *r += s * k;
                    }
                    parts.push(TermLinearization::Consistent { s, k_alpha: ka });
                }
                Nonlinearity::Hadamard => {
                    let x = self.coupling(t, alpha);
                    for (r, k) in residual.iter_mut().zip(self.k_apply(t, &x)) {
                        *r += k;
                    }
                    let scale = term.v.iter().zip(alpha).map(|(v, a)| 2.0 * v * a).collect();
                    parts.push(TermLinearization::Hadamard { scale });
                }
            }
        }
        Linearization { residual, parts }
    }

    /// `∂N/∂α · d`.
    pub fn jacobian_apply(&self, lin: &Linearization, d: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (t, part) in lin.parts.iter().enumerate() {
            match part {
                TermLinearization::Consistent { s, k_alpha } => {
                    let kd = self.k_apply(t, d);
                    let vd = dot(&self.terms[t].v, d);
                    for ((o, k), ka) in out.iter_mut().zip(&kd).zip(k_alpha) {
                        *o += s * k + vd * ka;
                    }
                }
                TermLinearization::Hadamard { scale } => {
                    let x: Vec<f64> = scale.iter().zip(d).map(|(s, v)| s * v).collect();
                    for (o, k) in out.iter_mut().zip(self.k_apply(t, &x)) {
                        *o += k;
                    }
                }
            }
        }
        out
    }

    /// Dense `∂N/∂α`, available up to [`DENSE_JACOBIAN_LIMIT`] unknowns.
    pub fn nonlinear_jacobian(&self, alpha: &[f64]) -> Result<DenseMatrix> {
        let lin = self.linearize(alpha);
        self.jacobian_dense(&lin)
    }

    pub fn jacobian_dense(&self, lin: &Linearization) -> Result<DenseMatrix> {
        self.guard_dense("dense Jacobian")?;
        let n = self.len();
        let mut j = DenseMatrix::zeros(n, n);
        for (t, part) in lin.parts.iter().enumerate() {
            let k = self.k_dense(t);
            match part {
                TermLinearization::Consistent { s, k_alpha } => {
                    j.add_scaled(*s, &k);
                    j.add_outer(1.0, k_alpha, &self.terms[t].v);
                }
                TermLinearization::Hadamard { scale } => {
                    for row in 0..n {
                        for col in 0..n {
                            j[(row, col)] += k[(row, col)] * scale[col];
                        }
                    }
                }
            }
        }
        Ok(j)
    }

    /// `c⁽¹⁾ · N(α)`; vanishes when breakage conserves hypervolume.
    pub fn hypervolume_defect(&self, alpha: &[f64]) -> f64 {
        dot(&self.c1, &self.nonlinear_residual(alpha))
    }

    /// `∫ Π x_i u_h`.
    pub fn hypervolume(&self, alpha: &[f64]) -> f64 {
        dot(&self.w1, alpha)
    }

    /// `∫ u_h`.
    pub fn number(&self, alpha: &[f64]) -> f64 {
        dot(&self.w0, alpha)
    }

    /// Serializable copy of all assembled blocks.
    pub fn to_dump(&self) -> OperatorDump {
        OperatorDump::from_operators(self)
    }

    /// Rebuilds operators from a dump made on the same degree-of-freedom map.
    pub fn from_dump(dump: &OperatorDump, dofs: &DofMap, mode: Nonlinearity) -> Result<Self> {
        dump.to_operators(dofs, mode)
    }
}

/// State-dependent parts of the Jacobian.
#[derive(Debug, Clone, PartialEq)]
pub struct Linearization {
    pub residual: Vec<f64>,
    parts: Vec<TermLinearization>,
}

#[derive(Debug, Clone, PartialEq)]
enum TermLinearization {
    Consistent { s: f64, k_alpha: Vec<f64> },
    Hadamard { scale: Vec<f64> },
}

pub(crate) fn kron_vectors(vs: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![1.0];
    for v in vs {
        let mut next = Vec::with_capacity(out.len() * v.len());
        for &o in &out {
            next.extend(v.iter().map(|x| o * x));
        }
        out = next;
    }
    out
}

/// Assembles on `dofs`, after checking that the kernels are separable per axis.
pub fn kronecker_compose(
    dofs: &DofMap,
    gamma: &CollisionKernel,
    beta: &BreakageKernel,
    opts: AssemblyOptions,
) -> Result<OperatorSet> {
    if gamma.terms.iter().any(|t| t.g.len() != dofs.dim() || t.h.len() != dofs.dim()) {
        return Err(Error::NotSeparable(format!("collision kernel `{}`", gamma.name)));
    }
    OperatorSet::assemble(dofs, gamma, beta, opts)
}
