//! Rectilinear partitions of the truncated property domain.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{config, Error, Result};

/// Default lower bound of every property axis; keeps kernels such as `2/y` finite.
pub const DEFAULT_X_MIN: f64 = 1e-9;

const RANDOM_GRID_RETRIES: usize = 16;

/// Partition of one property axis into consecutive elements `(x_{i-1}, x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis1D {
    nodes: Vec<f64>,
}

/// Grading of a non-uniform axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Grading {
    /// Element sizes grow geometrically; `ratio` is last-size / first-size.
    Geometric { ratio: f64 },
    /// Interior nodes drawn i.i.d. uniform from a seeded generator, then sorted.
    Random,
}

impl Axis1D {
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return config("an axis needs at least one element");
        }
        if !(nodes[0] >= 0.0) {
            return config(format!("axis must start at x >= 0, got {}", nodes[0]));
        }
        if let Some(w) = nodes.windows(2).find(|w| !(w[1] > w[0])) {
            return config(format!("axis nodes not strictly increasing at {} -> {}", w[0], w[1]));
        }
        Ok(Self { nodes })
    }

    /// `n` equal elements spanning `[x_min, x_max]`.
    pub fn uniform(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        check_span(x_min, x_max, n)?;
        let h = (x_max - x_min) / n as f64;
        let mut nodes: Vec<f64> = (0..=n).map(|i| x_min + i as f64 * h).collect();
        nodes[n] = x_max;
        Self::from_nodes(nodes)
    }

    pub fn nonuniform(x_min: f64, x_max: f64, n: usize, grading: Grading, seed: u64) -> Result<Self> {
        check_span(x_min, x_max, n)?;
        match grading {
            Grading::Geometric { ratio } => {
                if !(ratio > 0.0) {
                    return config(format!("geometric ratio must be positive, got {ratio}"));
                }
                if n == 1 {
                    return Self::from_nodes(vec![x_min, x_max]);
                }
                let q = ratio.powf(1.0 / (n - 1) as f64);
                let sizes: Vec<f64> = (0..n).map(|i| q.powi(i as i32)).collect();
                let total: f64 = sizes.iter().sum();
                let span = x_max - x_min;
                let mut nodes = Vec::with_capacity(n + 1);
                let mut acc = 0.0;
                nodes.push(x_min);
                for s in &sizes[..n - 1] {
                    acc += s;
                    nodes.push(x_min + span * acc / total);
                }
                nodes.push(x_max);
                Self::from_nodes(nodes)
            }
            Grading::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let span = x_max - x_min;
                let min_gap = 1e-12 * span;
                for _ in 0..RANDOM_GRID_RETRIES {
                    let mut interior: Vec<f64> =
                        (1..n).map(|_| rng.gen_range(x_min..x_max)).collect();
                    interior.sort_by(|a, b| a.total_cmp(b));
                    let mut nodes = Vec::with_capacity(n + 1);
                    nodes.push(x_min);
                    nodes.extend(interior);
                    nodes.push(x_max);
                    if nodes.windows(2).all(|w| w[1] - w[0] > min_gap) {
                        return Self::from_nodes(nodes);
                    }
                }
                config(format!(
                    "random grid with {n} elements kept producing coincident nodes after \
                     {RANDOM_GRID_RETRIES} draws"
                ))
            }
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn num_elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn x_min(&self) -> f64 {
        self.nodes[0]
    }

    pub fn x_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn element(&self, e: usize) -> (f64, f64) {
        (self.nodes[e], self.nodes[e + 1])
    }

    pub fn element_size(&self, e: usize) -> f64 {
        self.nodes[e + 1] - self.nodes[e]
    }

    pub fn max_element_size(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Element containing `x`; interior nodes belong to the element on their left.
    pub fn locate(&self, x: f64) -> Option<usize> {
        let n = self.num_elements();
        if !(x >= self.x_min() && x <= self.x_max()) {
            return None;
        }
        let idx = self.nodes.partition_point(|&node| node < x);
        Some(idx.saturating_sub(1).min(n - 1))
    }
}

fn check_span(x_min: f64, x_max: f64, n: usize) -> Result<()> {
    if n == 0 {
        return config("element count must be at least 1");
    }
    if !(x_min >= 0.0) || !(x_max > x_min) || !x_max.is_finite() {
        return config(format!("invalid axis span [{x_min}, {x_max}]"));
    }
    Ok(())
}

/// Tensor-product grid: one [`Axis1D`] per property, `d` in 1..=3.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorMesh {
    axes: Vec<Axis1D>,
}

impl TensorMesh {
    pub fn new(axes: Vec<Axis1D>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 3 {
            return config(format!("dimension must be 1, 2 or 3, got {}", axes.len()));
        }
        Ok(Self { axes })
    }

    /// Same uniform axis repeated `dim` times.
    pub fn uniform(dim: usize, x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        let axis = Axis1D::uniform(x_min, x_max, n)?;
        Self::new(vec![axis; dim])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis1D] {
        &self.axes
    }

    pub fn axis(&self, a: usize) -> &Axis1D {
        &self.axes[a]
    }

    /// Global mesh parameter: element size in 1D, largest cell diameter otherwise.
    pub fn mesh_size(&self) -> f64 {
        if self.axes.len() == 1 {
            return self.axes[0].max_element_size();
        }
        self.axes
            .iter()
            .map(|a| a.max_element_size().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Lebesgue measure of the box.
    pub fn measure(&self) -> f64 {
        self.axes.iter().map(|a| a.x_max() - a.x_min()).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && self.axes.iter().zip(x).all(|(a, &xi)| xi >= a.x_min() && xi <= a.x_max())
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::OutsideDomain { point: x.to_vec() })
        }
    }

    /// Node coordinates, one column per axis; shorter axes leave trailing cells empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (0..self.dim()).map(|a| format!("x{a}")).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        let rows = self.axes.iter().map(|a| a.nodes.len()).max().unwrap_or(0);
        for i in 0..rows {
            let cells: Vec<String> = self
                .axes
                .iter()
                .map(|a| a.nodes.get(i).map(|x| x.to_string()).unwrap_or_default())
                .collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_nodes_and_spacing() {
        let ax = Axis1D::uniform(0.0, 5.0, 5).unwrap();
        assert_eq!(ax.nodes(), &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);

        let ax = Axis1D::uniform(1e-9, 5.0, 320).unwrap();
        assert_eq!(ax.nodes().len(), 321);
        let h = (5.0 - 1e-9) / 320.0;
        for e in 0..320 {
            assert!((ax.element_size(e) - h).abs() < 1e-14);
        }
        assert_eq!(Axis1D::uniform(1e-9, 2.0, 80).unwrap().nodes().len(), 81);
    }

    #[test]
    fn invalid_spans_are_rejected() {
        assert!(matches!(Axis1D::uniform(0.0, 1.0, 0), Err(Error::Config(_))));
        assert!(Axis1D::uniform(1.0, 1.0, 4).is_err());
        assert!(Axis1D::uniform(-1.0, 1.0, 4).is_err());
        assert!(Axis1D::from_nodes(vec![0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn geometric_two_elements() {
        let ax = Axis1D::nonuniform(0.0, 1.0, 2, Grading::Geometric { ratio: 2.0 }, 0).unwrap();
        assert!((ax.nodes()[1] - 1.0 / 3.0).abs() < 1e-15);
        let ax = Axis1D::nonuniform(0.0, 1.0, 10, Grading::Geometric { ratio: 2.0 }, 0).unwrap();
        let ratio = ax.element_size(9) / ax.element_size(0);
        assert!((ratio - 2.0).abs() < 1e-12);
    }

    #[test]
    fn random_grid_is_reproducible() {
        let a = Axis1D::nonuniform(1e-9, 5.0, 60, Grading::Random, 7).unwrap();
        let b = Axis1D::nonuniform(1e-9, 5.0, 60, Grading::Random, 7).unwrap();
        let c = Axis1D::nonuniform(1e-9, 5.0, 60, Grading::Random, 8).unwrap();
        assert_eq!(a.nodes().len(), 61);
        assert_eq!(a, b);
        assert_ne!(a, c);
        let big = Axis1D::nonuniform(1e-9, 5.0, 960, Grading::Random, 1).unwrap();
        assert_eq!(big.num_elements(), 960);
    }

    #[test]
    fn mesh_size_examples() {
        let m = TensorMesh::uniform(1, 0.0, 1.0, 4).unwrap();
        assert!((m.mesh_size() - 0.25).abs() < 1e-15);
        let m = TensorMesh::uniform(2, 0.0, 2.0, 2).unwrap();
        assert!((m.mesh_size() - 2f64.sqrt()).abs() < 1e-15);
        let m = TensorMesh::uniform(3, 0.0, 2.0, 1).unwrap();
        assert!((m.mesh_size() - 2.0 * 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn mesh_size_halves_under_refinement() {
        for d in 1..=3 {
            let coarse = TensorMesh::uniform(d, 1e-9, 2.0, 4).unwrap().mesh_size();
            let fine = TensorMesh::uniform(d, 1e-9, 2.0, 8).unwrap().mesh_size();
            assert!((coarse / fine - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn locate_uses_left_element_for_interior_nodes() {
        let ax = Axis1D::uniform(0.0, 4.0, 4).unwrap();
        assert_eq!(ax.locate(0.0), Some(0));
        assert_eq!(ax.locate(1.0), Some(0));
        assert_eq!(ax.locate(1.5), Some(1));
        assert_eq!(ax.locate(4.0), Some(3));
        assert_eq!(ax.locate(4.1), None);
    }

    #[test]
    fn csv_dump_has_column_per_axis() {
        let m = TensorMesh::new(vec![
            Axis1D::uniform(0.0, 1.0, 2).unwrap(),
            Axis1D::uniform(0.0, 1.0, 1).unwrap(),
        ])
        .unwrap();
        let csv = m.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "x0,x1");
        assert_eq!(lines[3], "1,");
    }
}
