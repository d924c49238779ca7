//! Uniform time meshes and the composite trapezoid rule on them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("grid interval [{lo}, {hi}] is empty or not finite")]
    BadInterval { lo: f64, hi: f64 },
}

/// Uniform mesh `lo = t_0 < t_1 < ... < t_{n-1} = hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    lo: f64,
    hi: f64,
    nodes: usize,
}

impl Grid {
    pub fn new(lo: f64, hi: f64, nodes: usize) -> Result<Self, GridError> {
        if nodes < 2 {
            return Err(GridError::TooFewNodes(nodes));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(GridError::BadInterval { lo, hi });
        }
        Ok(Self { lo, hi, nodes })
    }

    /// The unit interval with `nodes` points.
    pub fn unit(nodes: usize) -> Result<Self, GridError> {
        Self::new(0.0, 1.0, nodes)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.nodes
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.nodes - 1) as f64
    }

    /// Node `k`; the last node is exactly `hi`.
    pub fn node(&self, k: usize) -> f64 {
        if k + 1 == self.nodes {
            self.hi
        } else {
            self.lo + k as f64 * self.step()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.nodes).map(|k| self.node(k)).collect()
    }

    /// Trapezoid weights over the whole grid.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let h = self.step();
        let mut w = vec![h; self.nodes];
        w[0] = 0.5 * h;
        w[self.nodes - 1] = 0.5 * h;
        w
    }

    /// Same mesh with `2 * (n - 1) + 1` nodes; every old node survives at index `2k`.
    pub fn refined(&self) -> Self {
        Self {
            nodes: 2 * (self.nodes - 1) + 1,
            ..*self
        }
    }
}

/// Composite trapezoid integral of uniformly spaced samples.
pub fn trapezoid(values: &[f64], step: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => step * (0.5 * (values[0] + values[n - 1]) + values[1..n - 1].iter().sum::<f64>()),
    }
}

/// Running trapezoid integrals `∫_{t_0}^{t_k}` for every node `k`.
pub fn cumulative_trapezoid(values: &[f64], step: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for (k, v) in values.iter().enumerate() {
        if k > 0 {
            acc += 0.5 * step * (values[k - 1] + v);
        }
        out.push(acc);
    }
    out
}

/// `∫_{t_0}^{t_k} (t_k - h) f(h) dh` at every node, by the trapezoid rule on `[t_0, t_k]`.
///
/// Computed as `t_k·F_k - G_k` with running integrals of `f` and `h·f`, which is
/// algebraically identical to summing the weighted products node by node.
pub fn cumulative_moment(grid: &Grid, values: &[f64]) -> Vec<f64> {
    let t = grid.points();
    let h = grid.step();
    let hf: Vec<f64> = t.iter().zip(values).map(|(t, f)| t * f).collect();
    let f_int = cumulative_trapezoid(values, h);
    let hf_int = cumulative_trapezoid(&hf, h);
    t.iter()
        .zip(f_int.iter().zip(&hf_int))
        .map(|(t, (fi, hfi))| t * fi - hfi)
        .collect()
}

/// Piecewise-linear interpolation of samples taken on a uniform mesh over `[lo, hi]`.
/// Arguments outside the mesh are clamped to the end samples.
pub fn interpolate(lo: f64, hi: f64, samples: &[f64], t: f64) -> f64 {
    let n = samples.len();
    if n == 1 {
        return samples[0];
    }
    let pos = ((t - lo) / (hi - lo)).clamp(0.0, 1.0) * (n - 1) as f64;
    let k = (pos.floor() as usize).min(n - 2);
    let frac = pos - k as f64;
    samples[k] * (1.0 - frac) + samples[k + 1] * frac
}
