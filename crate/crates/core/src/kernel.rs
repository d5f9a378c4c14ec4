//! Separable collision and breakage kernels and their structural checks.

use std::fmt;

use crate::error::{config, Error, Result};

/// One-dimensional factor of a separable kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Factor {
    Constant,
    /// `x^p`
    Monomial { p: f64 },
    /// `(x + c)^p`
    ShiftedPower { c: f64, p: f64 },
    /// `e^{-λx}`
    Exponential { lambda: f64 },
}

/// Regularity class of a product of factors, used to pick quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothness {
    Polynomial(usize),
    /// Analytic on `[0, ∞)` but not polynomial.
    Smooth,
    /// Algebraic singularity (of the function or a derivative) at the origin.
    Singular,
}

impl Smoothness {
    pub fn merge(self, other: Smoothness) -> Smoothness {
        use Smoothness::*;
        match (self, other) {
            (Singular, _) | (_, Singular) => Singular,
            (Smooth, _) | (_, Smooth) => Smooth,
            (Polynomial(a), Polynomial(b)) => Polynomial(a.max(b)),
        }
    }
}

fn as_nonneg_int(p: f64) -> Option<usize> {
    (p >= 0.0 && p.fract() == 0.0 && p <= 64.0).then_some(p as usize)
}

impl Factor {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Factor::Constant => 1.0,
            Factor::Monomial { p } => pow(x, p),
            Factor::ShiftedPower { c, p } => pow(x + c, p),
            Factor::Exponential { lambda } => (-lambda * x).exp(),
        }
    }

    /// Supremum of the factor on `[a, b]` (all factors are monotone).
    pub fn sup(&self, a: f64, b: f64) -> f64 {
        self.eval(a).max(self.eval(b))
    }

    /// `∫_a^b x^k f(x) dx` in closed form.
    pub fn moment_integral(&self, k: u32, a: f64, b: f64) -> Result<f64> {
        let kf = k as f64;
        match *self {
            Factor::Constant => Ok(power_integral(kf, a, b)?),
            Factor::Monomial { p } => power_integral(p + kf, a, b).map_err(|_| self.non_integrable(k)),
            Factor::ShiftedPower { c, p } => {
                if c == 0.0 {
                    return power_integral(p + kf, a, b).map_err(|_| self.non_integrable(k));
                }
                // Expand x^k = ((x + c) - c)^k binomially.
                let mut sum = 0.0;
                let mut binom = 1.0;
                for m in 0..=k {
                    let coeff = binom * (-c).powi((k - m) as i32);
                    sum += coeff
                        * power_integral(p + m as f64, a + c, b + c)
                            .map_err(|_| self.non_integrable(k))?;
                    binom = binom * (k - m) as f64 / (m + 1) as f64;
                }
                Ok(sum)
            }
            Factor::Exponential { lambda } => {
                if lambda == 0.0 {
                    return power_integral(kf, a, b);
                }
                // ∫ x^k e^{-λx} via the recurrence I_k = [-x^k e^{-λx}/λ] + (k/λ) I_{k-1}.
                let boundary = |x: f64, m: u32| -pow(x, m as f64) * (-lambda * x).exp() / lambda;
                let mut val = boundary(b, 0) - boundary(a, 0);
                for m in 1..=k {
                    val = boundary(b, m) - boundary(a, m) + m as f64 / lambda * val;
                }
                Ok(val)
            }
        }
    }

    fn non_integrable(&self, k: u32) -> Error {
        Error::NonIntegrable(format!("x^{k} * {self}"))
    }

    pub fn smoothness(&self) -> Smoothness {
        product_smoothness(&[*self])
    }
}

fn pow(x: f64, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else if p.fract() == 0.0 && p.abs() <= 64.0 {
        x.powi(p as i32)
    } else {
        x.powf(p)
    }
}

/// `∫_a^b x^q dx`, requiring `q > -1` when `a = 0`.
fn power_integral(q: f64, a: f64, b: f64) -> Result<f64> {
    if (q + 1.0).abs() < 1e-15 {
        if a <= 0.0 {
            return Err(Error::NonIntegrable(format!("x^{q} near 0")));
        }
        return Ok((b / a).ln());
    }
    if q < -1.0 && a <= 0.0 {
        return Err(Error::NonIntegrable(format!("x^{q} near 0")));
    }
    Ok((pow(b, q + 1.0) - pow(a, q + 1.0)) / (q + 1.0))
}

/// Regularity of the pointwise product of `factors`.
pub fn product_smoothness(factors: &[Factor]) -> Smoothness {
    let mut power = 0.0;
    let mut degree = 0usize;
    let mut result = Smoothness::Polynomial(0);
    for f in factors {
        match *f {
            Factor::Constant => {}
            Factor::Monomial { p } => power += p,
            Factor::ShiftedPower { c, p } => match as_nonneg_int(p) {
                Some(d) => degree += d,
                None if c == 0.0 => power += p,
                None if c < 1e-3 => result = result.merge(Smoothness::Singular),
                None => result = result.merge(Smoothness::Smooth),
            },
            Factor::Exponential { .. } => result = result.merge(Smoothness::Smooth),
        }
    }
    let monomial = match as_nonneg_int(power) {
        Some(d) => Smoothness::Polynomial(d + degree),
        None => Smoothness::Singular,
    };
    result.merge(monomial)
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Factor::Constant => write!(f, "1"),
            Factor::Monomial { p } => write!(f, "x^{p}"),
            Factor::ShiftedPower { c, p } => write!(f, "(x+{c})^{p}"),
            Factor::Exponential { lambda } => write!(f, "exp(-{lambda}x)"),
        }
    }
}

/// `c · Π_a g_a(y_a) h_a(z_a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionTerm {
    pub coeff: f64,
    pub g: Vec<Factor>,
    pub h: Vec<Factor>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollisionKernel {
    pub name: String,
    pub dim: usize,
    pub terms: Vec<CollisionTerm>,
}

impl CollisionKernel {
    pub fn new(name: impl Into<String>, dim: usize, terms: Vec<CollisionTerm>) -> Result<Self> {
        check_dim(dim)?;
        for t in &terms {
            if t.g.len() != dim || t.h.len() != dim {
                return config("collision term has the wrong number of axis factors");
            }
        }
        Ok(Self { name: name.into(), dim, terms })
    }

    /// `Γ = Π_a y_a z_a`
    pub fn product(dim: usize) -> Result<Self> {
        let x = Factor::Monomial { p: 1.0 };
        Self::new("product", dim, vec![CollisionTerm { coeff: 1.0, g: vec![x; dim], h: vec![x; dim] }])
    }

    pub fn constant(dim: usize) -> Result<Self> {
        Self::new(
            "constant",
            dim,
            vec![CollisionTerm { coeff: 1.0, g: vec![Factor::Constant; dim], h: vec![Factor::Constant; dim] }],
        )
    }

    /// `Γ = Π_a (y_a + c)^{1/3} (z_a + c)^{1/3}`
    pub fn polymerization(dim: usize, c: f64) -> Result<Self> {
        if c < 0.0 {
            return config("polymerization shift must be nonnegative");
        }
        let f = if c == 0.0 {
            Factor::Monomial { p: 1.0 / 3.0 }
        } else {
            Factor::ShiftedPower { c, p: 1.0 / 3.0 }
        };
        Self::new(format!("poly({c})"), dim, vec![CollisionTerm { coeff: 1.0, g: vec![f; dim], h: vec![f; dim] }])
    }

    pub fn zero(dim: usize) -> Result<Self> {
        Self::new("zero", dim, Vec::new())
    }

    pub fn eval(&self, y: &[f64], z: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.coeff
                    * (0..self.dim)
                        .map(|a| t.g[a].eval(y[a]) * t.h[a].eval(z[a]))
                        .product::<f64>()
            })
            .sum()
    }

    /// Upper bound `C₀` of `Γ` on `[lo, hi]^d` from factor maxima.
    pub fn bound(&self, lo: &[f64], hi: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.coeff.abs()
                    * (0..self.dim)
                        .map(|a| t.g[a].sup(lo[a], hi[a]) * t.h[a].sup(lo[a], hi[a]))
                        .product::<f64>()
            })
            .sum()
    }

    /// Largest symmetry defect over `samples` random pairs in `[lo, hi]^d`.
    pub fn symmetry_defect(&self, lo: &[f64], hi: &[f64], samples: usize, seed: u64) -> f64 {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let y: Vec<f64> = (0..self.dim).map(|a| rng.gen_range(lo[a]..=hi[a])).collect();
            let z: Vec<f64> = (0..self.dim).map(|a| rng.gen_range(lo[a]..=hi[a])).collect();
            let (u, v) = (self.eval(&y, &z), self.eval(&z, &y));
            worst = worst.max((u - v).abs() / u.abs().max(1.0));
        }
        worst
    }
}

/// Per-axis breakage factor.
#[derive(Debug, Clone, PartialEq)]
pub enum BreakageAxis {
    /// `f(x) q(y)` for `x ≤ y`, zero otherwise.
    Smooth { f: Factor, q: Factor },
    /// `Σ_m w_m δ(x − a_m y)`
    Comb { atoms: Vec<Atom> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub ratio: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BreakageTerm {
    pub coeff: f64,
    pub axes: Vec<BreakageAxis>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BreakageKernel {
    pub name: String,
    pub dim: usize,
    pub terms: Vec<BreakageTerm>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypervolumeCheck {
    pub pass: bool,
    pub defect: f64,
}

impl BreakageKernel {
    pub fn new(name: impl Into<String>, dim: usize, terms: Vec<BreakageTerm>) -> Result<Self> {
        check_dim(dim)?;
        for t in &terms {
            if t.axes.len() != dim {
                return config("breakage term has the wrong number of axis factors");
            }
            for ax in &t.axes {
                if let BreakageAxis::Comb { atoms } = ax {
                    if atoms.is_empty() {
                        return config("dirac comb needs at least one atom");
                    }
                    for at in atoms {
                        if !(at.ratio > 0.0 && at.ratio < 1.0) {
                            return config(format!("atom ratio {} outside (0, 1)", at.ratio));
                        }
                        if !(at.weight.is_finite() && at.weight >= 0.0) {
                            return config(format!("atom weight {} must be nonnegative", at.weight));
                        }
                    }
                }
            }
        }
        Ok(Self { name: name.into(), dim, terms })
    }

    /// `β = 2^d / Π_a y_a`
    pub fn multi_uniform(dim: usize) -> Result<Self> {
        let axis = BreakageAxis::Smooth { f: Factor::Constant, q: Factor::Monomial { p: -1.0 } };
        let name = if dim == 1 { "binary_uniform".to_string() } else { format!("multi_uniform({dim})") };
        Self::new(name, dim, vec![BreakageTerm { coeff: (1u32 << dim) as f64, axes: vec![axis; dim] }])
    }

    pub fn binary_uniform() -> Result<Self> {
        Self::multi_uniform(1)
    }

    /// Same comb on every axis.
    pub fn dirac(dim: usize, atoms: Vec<Atom>) -> Result<Self> {
        let name = format!(
            "dirac({})",
            atoms.iter().map(|a| format!("{}:{}", a.ratio, a.weight)).collect::<Vec<_>>().join(",")
        );
        Self::new(name, dim, vec![BreakageTerm { coeff: 1.0, axes: vec![BreakageAxis::Comb { atoms }; dim] }])
    }

    /// `β = (3/2) x^{1/2} y^{1/2}`, as printed for the ternary case.
    pub fn ternary_literal() -> Result<Self> {
        let axis = BreakageAxis::Smooth { f: Factor::Monomial { p: 0.5 }, q: Factor::Monomial { p: 0.5 } };
        Self::new("tc3_literal", 1, vec![BreakageTerm { coeff: 1.5, axes: vec![axis] }])
    }

    /// `β = (5/2) x^{1/2} y^{-3/2}`: same profile in `x`, rescaled so that volume is conserved.
    pub fn ternary_normalized() -> Result<Self> {
        let axis = BreakageAxis::Smooth { f: Factor::Monomial { p: 0.5 }, q: Factor::Monomial { p: -1.5 } };
        Self::new("tc3_normalized", 1, vec![BreakageTerm { coeff: 2.5, axes: vec![axis] }])
    }

    pub fn zero(dim: usize) -> Result<Self> {
        Self::new("zero", dim, Vec::new())
    }

    pub fn has_comb(&self) -> bool {
        self.terms
            .iter()
            .any(|t| t.axes.iter().any(|a| matches!(a, BreakageAxis::Comb { .. })))
    }

    /// Point value of a smooth kernel; combs have none.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let mut sum = 0.0;
        for t in &self.terms {
            let mut prod = t.coeff;
            for (a, ax) in t.axes.iter().enumerate() {
                match ax {
                    BreakageAxis::Smooth { f, q } => {
                        if x[a] > y[a] {
                            prod = 0.0;
                        } else {
                            prod *= f.eval(x[a]) * q.eval(y[a]);
                        }
                    }
                    BreakageAxis::Comb { .. } => {
                        return Err(Error::NoClosedForm("dirac comb has no point values".into()))
                    }
                }
            }
            sum += prod;
        }
        Ok(sum)
    }

    /// `Σ_s c_s Π_a ∫_0^{y_a} x_a^k β_{s,a}(x_a, y_a) dx_a`.
    fn axis_moments(&self, y: &[f64], k: u32) -> Result<f64> {
        let mut sum = 0.0;
        for t in &self.terms {
            let mut prod = t.coeff;
            for (a, ax) in t.axes.iter().enumerate() {
                prod *= match ax {
                    BreakageAxis::Smooth { f, q } => q.eval(y[a]) * f.moment_integral(k, 0.0, y[a])?,
                    BreakageAxis::Comb { atoms } => atoms
                        .iter()
                        .map(|at| at.weight * (at.ratio * y[a]).powi(k as i32))
                        .sum(),
                };
            }
            sum += prod;
        }
        Ok(sum)
    }

    /// Expected number of fragments `ν(y)`.
    pub fn multiplicity(&self, y: &[f64]) -> Result<f64> {
        self.check_point(y)?;
        self.axis_moments(y, 0)
    }

    /// Defect `∫ Πx β dx − Πy`, passing when `|defect| ≤ tol·Πy`.
    pub fn check_hypervolume_conservation(&self, y: &[f64], tol: f64) -> Result<HypervolumeCheck> {
        self.check_point(y)?;
        let target: f64 = y.iter().product();
        let defect = self.axis_moments(y, 1)? - target;
        Ok(HypervolumeCheck { pass: defect.abs() <= tol * target.abs(), defect })
    }

    /// Upper bound `b₀` of a smooth kernel on `[lo, hi]^d`; `None` for combs.
    pub fn bound(&self, lo: &[f64], hi: &[f64]) -> Option<f64> {
        let mut sum = 0.0;
        for t in &self.terms {
            let mut prod = t.coeff.abs();
            for (a, ax) in t.axes.iter().enumerate() {
                match ax {
                    BreakageAxis::Smooth { f, q } => prod *= f.sup(lo[a], hi[a]) * q.sup(lo[a], hi[a]),
                    BreakageAxis::Comb { .. } => return None,
                }
            }
            sum += prod;
        }
        Some(sum)
    }

    fn check_point(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.dim || y.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::OutsideDomain { point: y.to_vec() });
        }
        Ok(())
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if !(1..=3).contains(&dim) {
        return config(format!("dimension must be 1, 2 or 3, got {dim}"));
    }
    Ok(())
}

/// Parses `product`, `constant`, `poly(c)` or `zero`.
pub fn parse_collision(spec: &str, dim: usize) -> Result<CollisionKernel> {
    let (head, arg) = split_call(spec)?;
    match (head, arg) {
        ("product", None) => CollisionKernel::product(dim),
        ("constant", None) => CollisionKernel::constant(dim),
        ("zero", None) => CollisionKernel::zero(dim),
        ("poly", Some(c)) => CollisionKernel::polymerization(dim, parse_num(c)?),
        _ => config(format!("unknown collision kernel `{spec}`")),
    }
}

/// Parses `binary_uniform`, `multi_uniform(d)`, `dirac(a:w,...)`, `tc3_literal`,
/// `tc3_normalized` or `zero`.
pub fn parse_breakage(spec: &str, dim: usize) -> Result<BreakageKernel> {
    let (head, arg) = split_call(spec)?;
    let kernel = match (head, arg) {
        ("binary_uniform", None) => BreakageKernel::binary_uniform()?,
        ("multi_uniform", Some(d)) => {
            let d: usize = d.trim().parse().map_err(|_| Error::Config(format!("bad dimension `{d}`")))?;
            BreakageKernel::multi_uniform(d)?
        }
        ("tc3_literal", None) => BreakageKernel::ternary_literal()?,
        ("tc3_normalized", None) => BreakageKernel::ternary_normalized()?,
        ("zero", None) => BreakageKernel::zero(dim)?,
        ("dirac", Some(list)) => {
            let atoms = list
                .split(',')
                .map(|item| {
                    let (r, w) = item
                        .split_once(':')
                        .ok_or_else(|| Error::Config(format!("atom `{item}` must be ratio:weight")))?;
                    Ok(Atom { ratio: parse_num(r)?, weight: parse_num(w)? })
                })
                .collect::<Result<Vec<_>>>()?;
            BreakageKernel::dirac(dim, atoms)?
        }
        _ => return config(format!("unknown breakage kernel `{spec}`")),
    };
    if kernel.dim != dim {
        return config(format!("breakage kernel `{spec}` is {}-dimensional, expected {dim}", kernel.dim));
    }
    Ok(kernel)
}

fn split_call(spec: &str) -> Result<(&str, Option<&str>)> {
    let spec = spec.trim();
    match spec.find('(') {
        None => Ok((spec, None)),
        Some(open) => {
            let rest = spec[open + 1..]
                .strip_suffix(')')
                .ok_or_else(|| Error::Config(format!("unbalanced parentheses in `{spec}`")))?;
            Ok((spec[..open].trim(), Some(rest)))
        }
    }
}

fn parse_num(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Config(format!("bad number `{s}`")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn collision_spot_values() {
        assert_eq!(CollisionKernel::product(1).unwrap().eval(&[2.0], &[3.0]), 6.0);
        assert_eq!(CollisionKernel::constant(2).unwrap().eval(&[0.2, 4.0], &[3.0, 1.0]), 1.0);
        let poly = CollisionKernel::polymerization(1, 0.0).unwrap();
        assert!((poly.eval(&[8.0], &[27.0]) - 6.0).abs() < 1e-13);
        let p2 = CollisionKernel::product(2).unwrap();
        assert_eq!(p2.eval(&[1.0, 2.0], &[3.0, 4.0]), 24.0);
    }

    #[test]
    fn multiplicities() {
        assert!((BreakageKernel::binary_uniform().unwrap().multiplicity(&[3.7]).unwrap() - 2.0).abs() < 1e-14);
        let d = parse_breakage("dirac(0.4:1,0.6:1)", 1).unwrap();
        assert_eq!(d.multiplicity(&[0.7]).unwrap(), 2.0);
        let m2 = BreakageKernel::multi_uniform(2).unwrap();
        assert!((m2.multiplicity(&[0.3, 1.9]).unwrap() - 4.0).abs() < 1e-13);
        let m3 = BreakageKernel::multi_uniform(3).unwrap();
        assert!((m3.multiplicity(&[0.3, 1.9, 1.0]).unwrap() - 8.0).abs() < 1e-12);
        let lit = BreakageKernel::ternary_literal().unwrap();
        assert!((lit.multiplicity(&[1.0]).unwrap() - 1.0).abs() < 1e-14);
        let norm = BreakageKernel::ternary_normalized().unwrap();
        assert!((norm.multiplicity(&[2.0]).unwrap() - 5.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn hypervolume_checks() {
        let b = BreakageKernel::binary_uniform().unwrap();
        let c = b.check_hypervolume_conservation(&[2.5], 1e-12).unwrap();
        assert!(c.pass && c.defect.abs() < 1e-14);
        let d = parse_breakage("dirac(0.4:1,0.6:1)", 1).unwrap();
        assert!(d.check_hypervolume_conservation(&[1.3], 1e-12).unwrap().pass);
        let lit = BreakageKernel::ternary_literal().unwrap();
        let c = lit.check_hypervolume_conservation(&[1.0], 1e-12).unwrap();
        assert!(!c.pass);
        assert!((c.defect + 0.4).abs() < 1e-14);
        let norm = BreakageKernel::ternary_normalized().unwrap();
        assert!(norm.check_hypervolume_conservation(&[1.7], 1e-12).unwrap().pass);
        let m3 = BreakageKernel::multi_uniform(3).unwrap();
        assert!(m3.check_hypervolume_conservation(&[0.5, 1.0, 2.0], 1e-12).unwrap().pass);
    }

    #[test]
    fn closed_form_integrals() {
        let sp = Factor::ShiftedPower { c: 0.5, p: 1.0 / 3.0 };
        let rule = crate::quadrature::gauss_rule(30).unwrap();
        for k in 0..3 {
            let q = rule.integrate(0.2, 2.0, |x| x.powi(k as i32) * sp.eval(x));
            assert!((sp.moment_integral(k, 0.2, 2.0).unwrap() - q).abs() < 1e-13);
        }
        let e = Factor::Exponential { lambda: 1.3 };
        for k in 0..4 {
            let q = rule.integrate(0.0, 3.0, |x| x.powi(k as i32) * e.eval(x));
            assert!((e.moment_integral(k, 0.0, 3.0).unwrap() - q).abs() < 1e-13);
        }
        assert!(Factor::Monomial { p: -1.0 }.moment_integral(0, 0.0, 1.0).is_err());
        assert!(Factor::Monomial { p: -1.0 }.moment_integral(1, 0.0, 1.0).is_ok());
    }

    #[test]
    fn smoothness_classes() {
        use Smoothness::*;
        let x = Factor::Monomial { p: 1.0 };
        let inv = Factor::Monomial { p: -1.0 };
        let cube = Factor::Monomial { p: 1.0 / 3.0 };
        assert_eq!(product_smoothness(&[x, inv]), Polynomial(0));
        assert_eq!(product_smoothness(&[x, x]), Polynomial(2));
        assert_eq!(product_smoothness(&[cube]), Singular);
        assert_eq!(product_smoothness(&[inv, cube]), Singular);
        assert_eq!(product_smoothness(&[Factor::Exponential { lambda: 1.0 }, x]), Smooth);
        assert_eq!(product_smoothness(&[Factor::ShiftedPower { c: 1.0, p: 0.5 }]), Smooth);
    }

    #[test]
    fn bounds() {
        let lo = [1e-9];
        let hi = [5.0];
        assert!((CollisionKernel::product(1).unwrap().bound(&lo, &hi) - 25.0).abs() < 1e-12);
        assert!((BreakageKernel::binary_uniform().unwrap().bound(&lo, &hi).unwrap() - 2e9).abs() < 1.0);
        assert!(parse_breakage("dirac(0.5:2)", 1).unwrap().bound(&lo, &hi).is_none());
    }

    #[test]
    fn parser_rejects_garbage() {
        assert!(parse_collision("banana", 1).is_err());
        assert!(parse_collision("poly(0", 1).is_err());
        assert!(parse_breakage("dirac(1.2:1)", 1).is_err());
        assert!(parse_breakage("dirac(0.5)", 1).is_err());
        assert!(parse_breakage("multi_uniform(2)", 3).is_err());
        assert_eq!(parse_collision(" poly( 0.0 ) ", 2).unwrap().dim, 2);
    }

    fn comb_strategy() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((0.01f64..0.99, 0.0f64..3.0), 1..5)
    }

    proptest! {
        #[test]
        fn collision_kernels_are_symmetric(seed in any::<u64>(), c in 0.0f64..2.0) {
            for k in [
                CollisionKernel::product(2).unwrap(),
                CollisionKernel::constant(3).unwrap(),
                CollisionKernel::polymerization(1, c).unwrap(),
            ] {
                let d = k.dim;
                let defect = k.symmetry_defect(&vec![1e-9; d], &vec![5.0; d], 200, seed);
                prop_assert!(defect <= 1e-13);
            }
        }

        #[test]
        fn comb_conservation_iff_unit_first_moment(atoms in comb_strategy(), y in 0.1f64..5.0) {
            let atoms: Vec<Atom> = atoms.into_iter().map(|(ratio, weight)| Atom { ratio, weight }).collect();
            let first: f64 = atoms.iter().map(|a| a.ratio * a.weight).sum();
            let k = BreakageKernel::dirac(1, atoms.clone()).unwrap();
            let check = k.check_hypervolume_conservation(&[y], 1e-12).unwrap();
            prop_assert_eq!(check.pass, (first - 1.0).abs() <= 1e-12);

            // Rescaling the weights to unit first moment must always pass.
            prop_assume!(first > 1e-6);
            let scaled: Vec<Atom> = atoms.iter().map(|a| Atom { ratio: a.ratio, weight: a.weight / first }).collect();
            let k = BreakageKernel::dirac(1, scaled).unwrap();
            prop_assert!(k.check_hypervolume_conservation(&[y], 1e-12).unwrap().pass);
        }
    }
}
