use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::region::{Condenser, DefiningFunction};

pub const MIN_NODES: usize = 8;

/// Axis-aligned node lattice over a box in exponential coordinates.
/// Linear indices are row-major with axis 0 slowest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub counts: Vec<usize>,
}

impl GridSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        let g = GridSpec { lo, hi, counts };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.lo.len();
        if n == 0 || self.hi.len() != n || self.counts.len() != n {
            return Err(Error::Config(
                "grid lo, hi and counts need the same nonzero length".into(),
            ));
        }
        for d in 0..n {
            if !(self.lo[d] < self.hi[d]) || !self.lo[d].is_finite() || !self.hi[d].is_finite() {
                return Err(Error::Config(format!("grid axis {d} has empty extent")));
            }
            if self.counts[d] < MIN_NODES {
                return Err(Error::Config(format!(
                    "grid axis {d} has {} nodes, need at least {MIN_NODES}",
                    self.counts[d]
                )));
            }
        }
        Ok(())
    }

    /// Symmetric box `[-w, w]` per axis.
    pub fn centered(half_widths: &[f64], counts: &[usize]) -> Result<Self> {
        Self::new(
            half_widths.iter().map(|w| -w).collect(),
            half_widths.to_vec(),
            counts.to_vec(),
        )
    }

    /// Box around the condenser's outer set with `margin` spare cells per side.
    pub fn around(condenser: &Condenser, counts: &[usize], margin: f64) -> Result<Self> {
        let base = condenser.spec.outer.half_widths(&condenser.alg);
        if counts.len() != base.len() {
            return Err(Error::DimensionMismatch {
                expected: base.len(),
                got: counts.len(),
            });
        }
        let half: Vec<f64> = base
            .iter()
            .zip(counts)
            .map(|(w, &n)| {
                let cells = n.saturating_sub(1) as f64;
                w / (1.0 - 2.0 * margin / cells).max(0.1)
            })
            .collect();
        Self::centered(&half, counts)
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|d| (self.hi[d] - self.lo[d]) / (self.counts[d] - 1) as f64)
            .collect()
    }

    pub fn strides(&self) -> Vec<usize> {
        let n = self.dim();
        let mut s = vec![1usize; n];
        for d in (0..n.saturating_sub(1)).rev() {
            s[d] = s[d + 1] * self.counts[d + 1];
        }
        s
    }

    pub fn multi_index(&self, mut idx: usize, out: &mut [usize]) {
        for d in (0..self.dim()).rev() {
            out[d] = idx % self.counts[d];
            idx /= self.counts[d];
        }
    }

    pub fn node_coords(&self, idx: usize, out: &mut [f64]) {
        let h = self.spacing();
        let mut mi = vec![0usize; self.dim()];
        self.multi_index(idx, &mut mi);
        for d in 0..self.dim() {
            out[d] = self.lo[d] + mi[d] as f64 * h[d];
        }
    }

    pub fn node_point(&self, idx: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.dim()];
        self.node_coords(idx, &mut p);
        p
    }

    /// Every other node, when all counts are odd and stay above the minimum.
    pub fn coarsened(&self) -> Option<GridSpec> {
        let counts: Vec<usize> = self.counts.iter().map(|&n| (n - 1) / 2 + 1).collect();
        let ok = self.counts.iter().all(|n| n % 2 == 1)
            && counts.iter().all(|&n| n >= 2 * MIN_NODES - 1);
        ok.then(|| GridSpec {
            lo: self.lo.clone(),
            hi: self.hi.clone(),
            counts,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Interior,
    Dirichlet0,
    Dirichlet1,
    Exterior,
}

impl NodeKind {
    pub fn is_interior(self) -> bool {
        self == NodeKind::Interior
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindCounts {
    pub interior: usize,
    pub dirichlet0: usize,
    pub dirichlet1: usize,
    pub exterior: usize,
}

/// Node values on a grid, with classification and the condenser they solve.
#[derive(Clone, Debug)]
pub struct DiscreteField {
    pub grid: GridSpec,
    pub kinds: Vec<NodeKind>,
    pub values: Vec<f64>,
    pub condenser: Arc<Condenser>,
}

impl DiscreteField {
    pub fn counts(&self) -> KindCounts {
        let mut c = KindCounts::default();
        for k in &self.kinds {
            match k {
                NodeKind::Interior => c.interior += 1,
                NodeKind::Dirichlet0 => c.dirichlet0 += 1,
                NodeKind::Dirichlet1 => c.dirichlet1 += 1,
                NodeKind::Exterior => c.exterior += 1,
            }
        }
        c
    }

    /// Same grid and classification, values from `f` at every node.
    pub fn map_nodes<F: Fn(&[f64], NodeKind) -> f64>(&self, f: F) -> DiscreteField {
        let mut p = vec![0.0; self.grid.dim()];
        let values = (0..self.grid.len())
            .map(|i| {
                self.grid.node_coords(i, &mut p);
                f(&p, self.kinds[i])
            })
            .collect();
        DiscreteField {
            values,
            ..self.clone()
        }
    }

    pub fn with_values(&self, values: Vec<f64>) -> DiscreteField {
        assert_eq!(values.len(), self.values.len());
        DiscreteField {
            values,
            ..self.clone()
        }
    }

    /// Multilinear interpolation; points outside the box are clamped onto it.
    pub fn interpolate(&self, p: &[f64]) -> f64 {
        let n = self.grid.dim();
        let h = self.grid.spacing();
        let strides = self.grid.strides();
        let mut base = 0usize;
        let mut frac = [0.0f64; 16];
        let mut step = [0usize; 16];
        for d in 0..n {
            let last = self.grid.counts[d] - 1;
            let s = ((p[d] - self.grid.lo[d]) / h[d]).clamp(0.0, last as f64);
            let i = (s.floor() as usize).min(last - 1);
            frac[d] = s - i as f64;
            base += i * strides[d];
            step[d] = strides[d];
        }
        let mut acc = 0.0;
        for mask in 0..(1usize << n) {
            let mut w = 1.0;
            let mut idx = base;
            for d in 0..n {
                if mask >> d & 1 == 1 {
                    w *= frac[d];
                    idx += step[d];
                } else {
                    w *= 1.0 - frac[d];
                }
            }
            if w != 0.0 {
                acc += w * self.values[idx];
            }
        }
        acc
    }

    /// Largest central-difference slope over interior nodes, per unit coordinate length.
    pub fn lipschitz_estimate(&self) -> f64 {
        let n = self.grid.dim();
        let h = self.grid.spacing();
        let strides = self.grid.strides();
        let mut mi = vec![0usize; n];
        let mut best = 0.0f64;
        for (i, k) in self.kinds.iter().enumerate() {
            if !k.is_interior() {
                continue;
            }
            self.grid.multi_index(i, &mut mi);
            let mut g2 = 0.0;
            for d in 0..n {
                if mi[d] == 0 || mi[d] + 1 == self.grid.counts[d] {
                    continue;
                }
                let g = (self.values[i + strides[d]] - self.values[i - strides[d]]) / (2.0 * h[d]);
                g2 += g * g;
            }
            best = best.max(g2.sqrt());
        }
        best
    }

    pub fn interior_range(&self) -> (f64, f64) {
        self.kinds
            .iter()
            .zip(&self.values)
            .filter(|(k, _)| k.is_interior())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, &v)| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// Classify nodes against the condenser and set boundary values 0 / 1.
/// Interior nodes start at 0.
pub fn classify_nodes(grid: &GridSpec, condenser: Arc<Condenser>) -> Result<DiscreteField> {
    grid.validate()?;
    let n = grid.dim();
    if n != condenser.alg.dim() {
        return Err(Error::DimensionMismatch {
            expected: condenser.alg.dim(),
            got: n,
        });
    }
    let total = grid.len();
    let mut kinds = vec![NodeKind::Exterior; total];
    let mut p = vec![0.0; n];
    let mut mi = vec![0usize; n];
    let mut any_interior = false;
    for i in 0..total {
        grid.node_coords(i, &mut p);
        let in_outer = condenser.outer.eval(&p) < 0.0;
        if condenser.inner.eval(&p) <= 0.0 {
            if !in_outer {
                return Err(Error::DegenerateCondenser(format!(
                    "inner set is not compactly contained in the outer set (node {p:?})"
                )));
            }
            kinds[i] = NodeKind::Dirichlet1;
        } else if in_outer {
            kinds[i] = NodeKind::Interior;
            any_interior = true;
        }
        if kinds[i] != NodeKind::Exterior {
            grid.multi_index(i, &mut mi);
            if (0..n).any(|d| mi[d] == 0 || mi[d] + 1 == grid.counts[d]) {
                return Err(Error::DegenerateCondenser(
                    "grid box does not contain the outer set with a one-cell margin".into(),
                ));
            }
        }
    }
    if !any_interior {
        return Err(Error::DegenerateCondenser("no interior nodes".into()));
    }
    // Off-domain nodes touching an interior node through the stencil carry 0.
    let strides = grid.strides();
    let neighbours = chebyshev_offsets(n, &strides);
    let snapshot = kinds.clone();
    for i in 0..total {
        if snapshot[i] != NodeKind::Interior {
            continue;
        }
        for &off in &neighbours {
            let j = (i as isize + off) as usize;
            if snapshot[j] == NodeKind::Exterior {
                kinds[j] = NodeKind::Dirichlet0;
            }
        }
    }
    let values = kinds
        .iter()
        .map(|k| if *k == NodeKind::Dirichlet1 { 1.0 } else { 0.0 })
        .collect();
    Ok(DiscreteField {
        grid: grid.clone(),
        kinds,
        values,
        condenser,
    })
}

/// Linear offsets of the 3^N − 1 surrounding nodes.
pub(crate) fn chebyshev_offsets(n: usize, strides: &[usize]) -> Vec<isize> {
    let mut out = Vec::new();
    for code in 0..3usize.pow(n as u32) {
        let mut c = code;
        let mut off = 0isize;
        for s in strides.iter().take(n) {
            off += ((c % 3) as isize - 1) * *s as isize;
            c /= 3;
        }
        if off != 0 {
            out.push(off);
        }
    }
    out
}
