//! Grid-sampled càdlàg paths on `[-r, T]`.
//!
//! Nodes sit at `t_j = j / n` for `j = -delay_steps, ..., steps`. Between nodes
//! the path is read as piecewise constant, so the left limit at `t_k` for
//! `s` in `(t_k, t_{k+1}]` is the value stored at node `k`.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CadlagPath {
    dim: usize,
    n_per_unit: u32,
    delay_steps: usize,
    values: Vec<f64>,
}

fn norm(v: &[f64]) -> f64 {
    if v.len() == 1 {
        v[0].abs()
    } else {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

impl CadlagPath {
    /// A path holding only its initial segment: `init` lists the node values on
    /// `[-r, 0]` (oldest first), `dim` entries per node.
    pub fn from_init(dim: usize, n_per_unit: u32, init: Vec<f64>) -> Result<Self> {
        if dim == 0 || n_per_unit == 0 {
            return Err(Error::Argument("path dimension and grid density must be positive".into()));
        }
        if init.is_empty() || !init.len().is_multiple_of(dim) {
            return Err(Error::Argument(format!(
                "initial segment length {} is not a positive multiple of dim {dim}",
                init.len()
            )));
        }
        Ok(CadlagPath { dim, n_per_unit, delay_steps: init.len() / dim - 1, values: init })
    }

    /// Constant initial segment `z` on `[-r, 0]`, rounded up to whole grid steps.
    pub fn constant_init(z: &[f64], n_per_unit: u32, delay_r: f64) -> Result<Self> {
        if !(delay_r >= 0.0 && delay_r.is_finite()) {
            return Err(Error::Argument(format!("delay r = {delay_r} must be finite and non-negative")));
        }
        let steps = (delay_r * n_per_unit as f64 - 1e-9).ceil().max(0.0) as usize;
        let init = z.iter().copied().cycle().take(z.len() * (steps + 1)).collect();
        Self::from_init(z.len(), n_per_unit, init)
    }

    /// One-dimensional path starting at time 0 (no delay segment).
    pub fn from_scalars(n_per_unit: u32, values: Vec<f64>) -> Result<Self> {
        Self::from_init(1, n_per_unit, values).map(|mut p| {
            p.delay_steps = 0;
            p
        })
    }

    pub fn push(&mut self, node: &[f64]) {
        assert_eq!(node.len(), self.dim, "node dimension mismatch");
        self.values.extend_from_slice(node);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_per_unit(&self) -> u32 {
        self.n_per_unit
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.n_per_unit as f64
    }

    pub fn delay_steps(&self) -> usize {
        self.delay_steps
    }

    pub fn delay_r(&self) -> f64 {
        self.delay_steps as f64 * self.dt()
    }

    /// Number of grid steps after time 0.
    pub fn steps(&self) -> usize {
        self.values.len() / self.dim - 1 - self.delay_steps
    }

    pub fn horizon(&self) -> f64 {
        self.steps() as f64 * self.dt()
    }

    /// Value at node `k >= 0`, i.e. at time `k / n`.
    pub fn at(&self, k: usize) -> &[f64] {
        self.raw(self.delay_steps + k)
    }

    /// Value at grid offset `j` relative to time 0; negative offsets read the initial segment.
    pub fn at_offset(&self, j: isize) -> &[f64] {
        let idx = self.delay_steps as isize + j;
        assert!(idx >= 0, "offset {j} precedes the initial segment");
        self.raw(idx as usize)
    }

    fn raw(&self, idx: usize) -> &[f64] {
        &self.values[idx * self.dim..(idx + 1) * self.dim]
    }

    /// Last stored value.
    pub fn terminal(&self) -> &[f64] {
        self.raw(self.values.len() / self.dim - 1)
    }

    /// First coordinate of every node from time 0 onward.
    pub fn scalars(&self) -> Vec<f64> {
        (0..=self.steps()).map(|k| self.at(k)[0]).collect()
    }

    pub fn norm_at(&self, k: usize) -> f64 {
        norm(self.at(k))
    }

    fn node_of(&self, t: f64) -> Result<usize> {
        if !(t >= 0.0) {
            return Err(Error::Argument(format!("time {t} must be non-negative")));
        }
        let k = (t * self.n_per_unit as f64 + 1e-9).floor() as usize;
        if t > self.horizon() * (1.0 + 1e-12) + 1e-12 {
            return Err(Error::Argument(format!("time {t} lies beyond the path horizon {}", self.horizon())));
        }
        Ok(k)
    }

    /// `max |x(s)|` over nodes in `[0, t]`, or `[-r, t]` when `from_minus_r`.
    pub fn running_sup(&self, t: f64, from_minus_r: bool) -> Result<f64> {
        let k = self.node_of(t)?;
        let start = if from_minus_r { 0 } else { self.delay_steps };
        Ok((start..=self.delay_steps + k)
            .map(|i| norm(self.raw(i)))
            .fold(0.0, f64::max))
    }

    /// Running supremum of `|x|` over `[0, t_k]` at every node `k`.
    pub fn running_sup_series(&self) -> Vec<f64> {
        let mut acc = 0.0f64;
        (0..=self.steps())
            .map(|k| {
                acc = acc.max(self.norm_at(k));
                acc
            })
            .collect()
    }

    /// `max_k |x(t_k) - y(t_k)|` over common nodes `t_k >= 0`.
    pub fn sup_distance(&self, other: &CadlagPath) -> Result<f64> {
        if self.dim != other.dim {
            return Err(Error::Argument("paths differ in dimension".into()));
        }
        let (fine, coarse) = if self.n_per_unit >= other.n_per_unit { (self, other) } else { (other, self) };
        if fine.n_per_unit % coarse.n_per_unit != 0 {
            return Err(Error::Argument("grid densities are not nested".into()));
        }
        let factor = (fine.n_per_unit / coarse.n_per_unit) as usize;
        let common = coarse.steps().min(fine.steps() / factor);
        let mut d = 0.0f64;
        for k in 0..=common {
            let (a, b) = (coarse.at(k), fine.at(k * factor));
            let diff = if a.len() == 1 {
                (a[0] - b[0]).abs()
            } else {
                a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
            };
            d = d.max(diff);
        }
        Ok(d)
    }

    /// View of the path stopped at node `k`: the only history a coefficient
    /// frozen on the cell `(t_k, t_{k+1}]` may read.
    pub fn view(&self, k: usize) -> PathView<'_> {
        assert!(k <= self.steps(), "node {k} not yet simulated");
        PathView { path: self, k }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PathView<'a> {
    path: &'a CadlagPath,
    k: usize,
}

impl<'a> PathView<'a> {
    /// Cell start `t_k`.
    pub fn time(&self) -> f64 {
        self.k as f64 * self.path.dt()
    }

    pub fn step(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.path.dim
    }

    pub fn dt(&self) -> f64 {
        self.path.dt()
    }

    /// `x(s^-)` for every `s` in the cell.
    pub fn left_limit(&self) -> &'a [f64] {
        self.path.at(self.k)
    }

    /// Node `back` steps before the cell start, clipped to the start of the initial segment.
    pub fn lagged(&self, back: usize) -> &'a [f64] {
        let j = self.k as isize - back as isize;
        self.path.at_offset(j.max(-(self.path.delay_steps as isize)))
    }

    /// `max |x(s)|` over nodes in `[t_k - len, t_k - dt]`, the grid reading of
    /// `sup_{[t_k - len, t_k)} |x|`; 0 when the window holds no node.
    pub fn window_sup(&self, len: f64) -> f64 {
        let back = ((len * self.path.n_per_unit as f64).round() as isize).max(1);
        let k = self.k as isize;
        let lo = (k - back).max(-(self.path.delay_steps as isize));
        (lo..k).map(|j| norm(self.path.at_offset(j))).fold(0.0, f64::max)
    }
}
