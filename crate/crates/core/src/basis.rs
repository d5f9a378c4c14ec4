//! Equispaced Lagrange bases on `[0, 1]`, tensor-product degree-of-freedom maps and
//! evaluation of finite-element functions.

use crate::error::{config, Error, Result};
use crate::mesh::{Axis1D, TensorMesh};

pub const MAX_DEGREE: usize = 3;

/// Lagrange basis of degree `r` with nodes `ξ_k = k / r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReferenceBasis {
    degree: usize,
}

impl ReferenceBasis {
    pub fn new(degree: usize) -> Result<Self> {
        if degree == 0 || degree > MAX_DEGREE {
            return config(format!("polynomial degree must be in 1..={MAX_DEGREE}, got {degree}"));
        }
        Ok(Self { degree })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn node(&self, k: usize) -> f64 {
        k as f64 / self.degree as f64
    }

    /// All `r + 1` basis values at `xi`.
    pub fn values(&self, xi: f64) -> [f64; MAX_DEGREE + 1] {
        let mut out = [0.0; MAX_DEGREE + 1];
        for (k, v) in out.iter_mut().enumerate().take(self.degree + 1) {
            *v = self.value_unchecked(k, xi);
        }
        out
    }

    /// All `r + 1` derivatives with respect to `xi`.
    pub fn derivatives(&self, xi: f64) -> [f64; MAX_DEGREE + 1] {
        let mut out = [0.0; MAX_DEGREE + 1];
        for (k, v) in out.iter_mut().enumerate().take(self.degree + 1) {
            *v = self.derivative_unchecked(k, xi);
        }
        out
    }

    fn value_unchecked(&self, k: usize, xi: f64) -> f64 {
        let xk = self.node(k);
        (0..=self.degree)
            .filter(|&m| m != k)
            .map(|m| {
                let xm = self.node(m);
                (xi - xm) / (xk - xm)
            })
            .product()
    }

    fn derivative_unchecked(&self, k: usize, xi: f64) -> f64 {
        let xk = self.node(k);
        let mut sum = 0.0;
        for l in (0..=self.degree).filter(|&l| l != k) {
            let mut term = 1.0 / (xk - self.node(l));
            for m in (0..=self.degree).filter(|&m| m != k && m != l) {
                let xm = self.node(m);
                term *= (xi - xm) / (xk - xm);
            }
            sum += term;
        }
        sum
    }
}

/// Value of the `k`-th degree-`r` Lagrange basis function at `xi`.
pub fn lagrange_eval(r: usize, k: usize, xi: f64) -> Result<f64> {
    let basis = ReferenceBasis::new(r)?;
    if k > r {
        return Err(Error::IndexOutOfRange { index: k, limit: r });
    }
    Ok(basis.value_unchecked(k, xi))
}

/// Derivative of the `k`-th degree-`r` Lagrange basis function at `xi`.
pub fn lagrange_grad(r: usize, k: usize, xi: f64) -> Result<f64> {
    let basis = ReferenceBasis::new(r)?;
    if k > r {
        return Err(Error::IndexOutOfRange { index: k, limit: r });
    }
    Ok(basis.derivative_unchecked(k, xi))
}

/// Continuous degree-`r` numbering along one axis: element `e`, local node `k` maps to `e r + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisDofs {
    axis: Axis1D,
    degree: usize,
}

impl AxisDofs {
    pub fn new(axis: Axis1D, degree: usize) -> Result<Self> {
        ReferenceBasis::new(degree)?;
        Ok(Self { axis, degree })
    }

    pub fn axis(&self) -> &Axis1D {
        &self.axis
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.degree * self.axis.num_elements() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn global(&self, element: usize, local: usize) -> usize {
        element * self.degree + local
    }

    /// Coordinate of the Lagrange node carrying global index `i`.
    pub fn coordinate(&self, i: usize) -> f64 {
        let n = self.axis.num_elements();
        let e = (i / self.degree).min(n - 1);
        let k = i - e * self.degree;
        let (a, b) = self.axis.element(e);
        if k == self.degree {
            b
        } else {
            a + (b - a) * k as f64 / self.degree as f64
        }
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.coordinate(i)).collect()
    }

    /// Element and reference coordinate of `x`, or `None` outside the axis.
    pub fn locate(&self, x: f64) -> Option<(usize, f64)> {
        let e = self.axis.locate(x)?;
        let (a, b) = self.axis.element(e);
        Some((e, ((x - a) / (b - a)).clamp(0.0, 1.0)))
    }
}

/// Tensor-product degree-of-freedom map; the last axis varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    axes: Vec<AxisDofs>,
    strides: Vec<usize>,
    basis: ReferenceBasis,
}

impl DofMap {
    pub fn new(mesh: &TensorMesh, degree: usize) -> Result<Self> {
        let basis = ReferenceBasis::new(degree)?;
        let axes = mesh
            .axes()
            .iter()
            .map(|a| AxisDofs::new(a.clone(), degree))
            .collect::<Result<Vec<_>>>()?;
        let mut strides = vec![1; axes.len()];
        for a in (0..axes.len().saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * axes[a + 1].len();
        }
        Ok(Self { axes, strides, basis })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn basis(&self) -> &ReferenceBasis {
        &self.basis
    }

    pub fn axes(&self) -> &[AxisDofs] {
        &self.axes
    }

    pub fn axis(&self, a: usize) -> &AxisDofs {
        &self.axes[a]
    }

    pub fn axis_lens(&self) -> Vec<usize> {
        self.axes.iter().map(AxisDofs::len).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(AxisDofs::len).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        self.strides
            .iter()
            .map(|s| {
                let i = flat / s;
                flat -= i * s;
                i
            })
            .collect()
    }

    pub fn node_coordinates(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .zip(&self.axes)
            .map(|(&i, ax)| ax.coordinate(i))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && self
                .axes
                .iter()
                .zip(x)
                .all(|(a, &xi)| xi >= a.axis().x_min() && xi <= a.axis().x_max())
    }

    /// Local tensor evaluation: for every axis the element, first global index, and
    /// either basis values or derivatives (per `deriv_axis`).
    fn local_tables(
        &self,
        x: &[f64],
        deriv_axis: Option<usize>,
    ) -> Result<Vec<(usize, [f64; MAX_DEGREE + 1])>> {
        if x.len() != self.dim() {
            return config(format!("point has {} coordinates, mesh has {}", x.len(), self.dim()));
        }
        let mut tables = Vec::with_capacity(self.dim());
        for (a, ax) in self.axes.iter().enumerate() {
            let (e, xi) = ax
                .locate(x[a])
                .ok_or_else(|| Error::OutsideDomain { point: x.to_vec() })?;
            let vals = if deriv_axis == Some(a) {
                let h = ax.axis().element_size(e);
                let mut d = self.basis.derivatives(xi);
                d.iter_mut().for_each(|v| *v /= h);
                d
            } else {
                self.basis.values(xi)
            };
            tables.push((ax.global(e, 0), vals));
        }
        Ok(tables)
    }

    fn contract(&self, coeffs: &[f64], tables: &[(usize, [f64; MAX_DEGREE + 1])]) -> f64 {
        let r = self.degree();
        let d = tables.len();
        let mut local = vec![0usize; d];
        let mut sum = 0.0;
        loop {
            let mut idx = 0;
            let mut w = 1.0;
            for a in 0..d {
                idx += (tables[a].0 + local[a]) * self.strides[a];
                w *= tables[a].1[local[a]];
            }
            sum += w * coeffs[idx];
            let mut a = d;
            loop {
                if a == 0 {
                    return sum;
                }
                a -= 1;
                local[a] += 1;
                if local[a] <= r {
                    break;
                }
                local[a] = 0;
            }
        }
    }

    /// Nonzero basis functions at `x` as `(global index, value)` pairs.
    pub fn shape_functions(&self, x: &[f64]) -> Result<Vec<(usize, f64)>> {
        let tables = self.local_tables(x, None)?;
        let r = self.degree();
        let d = tables.len();
        let mut out = Vec::with_capacity((r + 1).pow(d as u32));
        let mut local = vec![0usize; d];
        loop {
            let mut idx = 0;
            let mut w = 1.0;
            for a in 0..d {
                idx += (tables[a].0 + local[a]) * self.strides[a];
                w *= tables[a].1[local[a]];
            }
            out.push((idx, w));
            let mut a = d;
            loop {
                if a == 0 {
                    return Ok(out);
                }
                a -= 1;
                local[a] += 1;
                if local[a] <= r {
                    break;
                }
                local[a] = 0;
            }
        }
    }

    pub fn eval(&self, coeffs: &[f64], x: &[f64]) -> Result<f64> {
        check_len(coeffs, self.len())?;
        let tables = self.local_tables(x, None)?;
        Ok(self.contract(coeffs, &tables))
    }

    pub fn gradient(&self, coeffs: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        check_len(coeffs, self.len())?;
        (0..self.dim())
            .map(|a| {
                let tables = self.local_tables(x, Some(a))?;
                Ok(self.contract(coeffs, &tables))
            })
            .collect()
    }
}

fn check_len(coeffs: &[f64], n: usize) -> Result<()> {
    if coeffs.len() != n {
        return config(format!("coefficient vector has length {}, expected {n}", coeffs.len()));
    }
    Ok(())
}

pub fn build_dof_map(mesh: &TensorMesh, degree: usize) -> Result<DofMap> {
    DofMap::new(mesh, degree)
}

/// `Σ_i α_i φ_i(x)`.
pub fn eval_fe_function(coeffs: &[f64], dofs: &DofMap, x: &[f64]) -> Result<f64> {
    dofs.eval(coeffs, x)
}

/// Nodal interpolation of `f` into the finite-element space.
pub fn interpolate(dofs: &DofMap, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    (0..dofs.len()).map(|i| f(&dofs.node_coordinates(i))).collect()
}
