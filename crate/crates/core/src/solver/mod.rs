//! Finite-difference Dirichlet solver for condenser potentials.
//!
//! `Σ A_ij X_i X_j` is expanded into coordinate derivatives through the
//! frame and discretized with centered differences (2N axis neighbours and
//! four-point mixed corners). Linear systems are relaxed with SOR over the
//! 2^N parity colours; the nonlinear operators use Picard iteration on the
//! frozen, normalized coefficient matrix.

mod grid;

use std::ops::Range;
use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::algebra::{Algebra, GroupPoint};
use crate::calculus::{coordinate_coefficients, frame_apply, OperatorKind, OperatorSpec};
use crate::error::{Error, Result};
use crate::geometry::region::{Condenser, DefiningFunction};

pub(crate) use grid::chebyshev_offsets;
pub use grid::{classify_nodes, DiscreteField, GridSpec, KindCounts, NodeKind, MIN_NODES};

/// Node offsets (in cells) and matching weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Stencil {
    pub offsets: Vec<Vec<i32>>,
    pub weights: Vec<f64>,
}

impl Stencil {
    pub fn apply<F: Fn(&[f64]) -> f64>(&self, f: F, p: &[f64], h: &[f64]) -> f64 {
        let mut q = p.to_vec();
        self.offsets
            .iter()
            .zip(&self.weights)
            .map(|(o, w)| {
                for d in 0..p.len() {
                    q[d] = p[d] + o[d] as f64 * h[d];
                }
                w * f(&q)
            })
            .sum()
    }
}

/// Fixed stencil layout: centre, ±e_r, then the four corners of each (r, s) plane.
#[derive(Clone, Debug)]
struct Shape {
    n: usize,
    offsets: Vec<Vec<i32>>,
    deltas: Vec<isize>,
}

impl Shape {
    fn new(n: usize, strides: &[usize]) -> Self {
        let mut offsets = vec![vec![0; n]];
        for r in 0..n {
            for sign in [1, -1] {
                let mut o = vec![0; n];
                o[r] = sign;
                offsets.push(o);
            }
        }
        for r in 0..n {
            for s in r + 1..n {
                for (a, b) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
                    let mut o = vec![0; n];
                    o[r] = a;
                    o[s] = b;
                    offsets.push(o);
                }
            }
        }
        let deltas = offsets
            .iter()
            .map(|o| {
                o.iter()
                    .zip(strides)
                    .map(|(&k, &s)| k as isize * s as isize)
                    .sum()
            })
            .collect();
        Shape { n, offsets, deltas }
    }

    fn len(&self) -> usize {
        self.offsets.len()
    }

    fn fill(&self, second: &[f64], first: &[f64], h: &[f64], out: &mut [f64]) {
        let n = self.n;
        let mut centre = 0.0;
        for r in 0..n {
            let brr = second[r * n + r] / (h[r] * h[r]);
            let br = first[r] / (2.0 * h[r]);
            out[1 + 2 * r] = brr + br;
            out[2 + 2 * r] = brr - br;
            centre -= 2.0 * brr;
        }
        out[0] = centre;
        let mut k = 1 + 2 * n;
        for r in 0..n {
            for s in r + 1..n {
                let c = 0.25 * (second[r * n + s] + second[s * n + r]) / (h[r] * h[s]);
                out[k] = c;
                out[k + 1] = -c;
                out[k + 2] = -c;
                out[k + 3] = c;
                k += 4;
            }
        }
    }
}

/// Stencil for `trace(A(ξ) ∇²_H f)` at `p` with `ξ` frozen.
pub fn build_stencil(
    alg: &Algebra,
    op: &OperatorSpec,
    xi: &DVector<f64>,
    p: &GroupPoint,
    h: &[f64],
) -> Result<Stencil> {
    let n = alg.dim();
    if p.len() != n || h.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: if p.len() != n { p.len() } else { h.len() },
        });
    }
    let m = alg.horizontal_dim();
    if xi.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: xi.len(),
        });
    }
    let a = op.coefficient_matrix(xi)?;
    let a_rows: Vec<f64> = (0..m)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .map(|(i, j)| a[(i, j)])
        .collect();
    let mut second = vec![0.0; n * n];
    let mut first = vec![0.0; n];
    coordinate_coefficients(alg, p, &a_rows, &mut second, &mut first);
    let strides: Vec<usize> = vec![0; n];
    let shape = Shape::new(n, &strides);
    let mut weights = vec![0.0; shape.len()];
    shape.fill(&second, &first, h, &mut weights);
    Ok(Stencil {
        offsets: shape.offsets,
        weights,
    })
}

fn default_max_sweeps() -> usize {
    20_000
}
fn default_max_outer() -> usize {
    200
}
fn default_eps_reg() -> f64 {
    1e-8
}
fn default_coefficient_relaxation() -> f64 {
    0.5
}
fn default_true() -> bool {
    true
}
fn default_check_every() -> usize {
    10
}

/// How a stencil link leaving the domain sees the Dirichlet data.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryTreatment {
    /// The off-domain node's stored value is used as is.
    Clamp,
    /// Ghost value extrapolated linearly so the data is met where the link
    /// crosses the boundary.
    #[default]
    Linear,
}

/// Crossing fractions below this are raised to it.
pub const THETA_MIN: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub operator: OperatorSpec,
    /// Residual sup-norm target (linear) or iterate-change target (nonlinear).
    /// Defaults: 1e-8 and 1e-6.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default = "default_max_sweeps")]
    pub max_sweeps: usize,
    /// SOR factor; by default `2 / (1 + sin(π / n))` with `n` the largest
    /// node count, capped at 1.5 for the ∞-Laplacean.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relaxation: Option<f64>,
    #[serde(default = "default_max_outer")]
    pub max_outer: usize,
    #[serde(default = "default_coefficient_relaxation")]
    pub coefficient_relaxation: f64,
    /// Gradient regularization used by the nonlinear operators.
    #[serde(default = "default_eps_reg")]
    pub eps_reg: f64,
    /// Initialize from the solution on the grid with every other node.
    #[serde(default = "default_true")]
    pub nested: bool,
    #[serde(default = "default_check_every")]
    pub check_every: usize,
    #[serde(default)]
    pub boundary: BoundaryTreatment,
}

impl SolveConfig {
    pub fn new(operator: OperatorSpec) -> Self {
        SolveConfig {
            operator,
            tolerance: None,
            max_sweeps: default_max_sweeps(),
            relaxation: None,
            max_outer: default_max_outer(),
            coefficient_relaxation: default_coefficient_relaxation(),
            eps_reg: default_eps_reg(),
            nested: true,
            check_every: default_check_every(),
            boundary: BoundaryTreatment::default(),
        }
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance.unwrap_or(if self.operator.is_linear() {
            1e-8
        } else {
            1e-6
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.operator.validate()?;
        let tol = self.tolerance();
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::Config(format!(
                "tolerance must be positive, got {tol}"
            )));
        }
        if let Some(w) = self.relaxation {
            if !(w > 0.0 && w < 2.0) {
                return Err(Error::Config(format!(
                    "relaxation must lie in (0, 2), got {w}"
                )));
            }
        }
        if !(self.coefficient_relaxation > 0.0 && self.coefficient_relaxation <= 1.0) {
            return Err(Error::Config(
                "coefficient_relaxation must lie in (0, 1]".into(),
            ));
        }
        if !(self.eps_reg >= 0.0 && self.eps_reg.is_finite()) {
            return Err(Error::Config("eps_reg must be nonnegative".into()));
        }
        if self.max_sweeps == 0 || self.max_outer == 0 || self.check_every == 0 {
            return Err(Error::Config(
                "sweep and iteration limits must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn relaxation_for(&self, grid: &GridSpec) -> f64 {
        self.relaxation.unwrap_or_else(|| {
            let n = grid.counts.iter().copied().max().unwrap_or(2).max(2) as f64;
            let w = 2.0 / (1.0 + (std::f64::consts::PI / n).sin());
            if self.operator.kind == OperatorKind::Inflap {
                w.min(1.5)
            } else {
                w
            }
        })
    }

    /// Operator with the solver's gradient regularization applied.
    pub fn regularized_operator(&self) -> OperatorSpec {
        if self.operator.is_linear() {
            self.operator
        } else {
            self.operator.with_eps(self.eps_reg)
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub counts: KindCounts,
    pub sweeps: usize,
    pub outer_iterations: usize,
    pub residual_history: Vec<f64>,
    pub change_history: Vec<f64>,
    /// Sup-norm residual of the (regularized) operator at the returned field.
    pub residual: f64,
    pub min_value: f64,
    pub max_value: f64,
    /// Interior values outside `[-1e-10, 1 + 1e-10]`.
    pub range_violation: bool,
    pub coarse_levels: usize,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub field: DiscreteField,
    pub stats: SolveStats,
}

pub const RANGE_SLACK: f64 = 1e-10;

/// Classify, initialize (nested if possible) and solve.
pub fn solve(grid: &GridSpec, condenser: Arc<Condenser>, config: &SolveConfig) -> Result<Solution> {
    config.validate()?;
    let mut field = classify_nodes(grid, condenser.clone())?;
    let mut levels = 0;
    let mut initialized = false;
    if config.nested {
        if let Some(coarse) = grid.coarsened() {
            let mut cc = config.clone();
            cc.tolerance = Some(config.tolerance() * 10.0);
            if let Ok(sol) = solve(&coarse, condenser, &cc) {
                levels = sol.stats.coarse_levels + 1;
                let mut p = vec![0.0; grid.dim()];
                for i in 0..field.values.len() {
                    if field.kinds[i].is_interior() {
                        grid.node_coords(i, &mut p);
                        field.values[i] = sol.field.interpolate(&p).clamp(0.0, 1.0);
                    }
                }
                initialized = true;
            }
        }
    }
    let mut sol = solve_from(field, config, initialized)?;
    sol.stats.coarse_levels = levels;
    Ok(sol)
}

/// Solve with the boundary data and initial guess already stored in `field`.
pub fn solve_field(field: DiscreteField, config: &SolveConfig) -> Result<Solution> {
    config.validate()?;
    solve_from(field, config, true)
}

fn solve_from(
    mut field: DiscreteField,
    config: &SolveConfig,
    initialized: bool,
) -> Result<Solution> {
    let alg = field.condenser.alg.clone();
    let op = config.regularized_operator();
    let mut stats = SolveStats {
        counts: field.counts(),
        ..Default::default()
    };
    let nodes = NodeSet::new(&field, config.boundary);
    let omega = config.relaxation_for(&field.grid);
    let m = alg.horizontal_dim();
    let identity: Vec<f64> = (0..m * m)
        .map(|k| if k % (m + 1) == 0 { 1.0 } else { 0.0 })
        .collect();

    let hlap_system = nodes.system(&field, &alg, |_| identity.clone());
    if op.is_linear() {
        relax_to_residual(
            &hlap_system,
            &mut field.values,
            config,
            omega,
            config.tolerance(),
            &mut stats,
        )?;
    } else {
        if !initialized {
            relax_to_residual(
                &hlap_system,
                &mut field.values,
                config,
                omega,
                1e-6,
                &mut stats,
            )?;
        }
        drop(hlap_system);
        picard(&mut field, &nodes, &alg, &op, config, omega, &mut stats)?;
    }

    let (lo, hi) = field.interior_range();
    stats.min_value = lo;
    stats.max_value = hi;
    stats.range_violation = lo < -RANGE_SLACK || hi > 1.0 + RANGE_SLACK;
    stats.residual = residual(&field, &op, config.boundary)?.sup;
    Ok(Solution { field, stats })
}

fn picard(
    field: &mut DiscreteField,
    nodes: &NodeSet,
    alg: &Algebra,
    op: &OperatorSpec,
    config: &SolveConfig,
    omega: f64,
    stats: &mut SolveStats,
) -> Result<()> {
    let m = alg.horizontal_dim();
    let tol = config.tolerance();
    let theta = config.coefficient_relaxation;
    let mut frozen = nodes.normalized_coefficients(field, alg, op);
    let mut previous = field.values.clone();
    for outer in 1..=config.max_outer {
        let system = nodes.system(field, alg, |t| frozen[t * m * m..(t + 1) * m * m].to_vec());
        previous.copy_from_slice(&field.values);
        relax_to_change(&system, &mut field.values, config, omega, 0.05 * tol, stats)?;
        let change = nodes
            .order
            .iter()
            .map(|&i| (field.values[i] - previous[i]).abs())
            .fold(0.0, f64::max);
        stats.change_history.push(change);
        stats.outer_iterations = outer;
        if !change.is_finite() {
            break;
        }
        if change <= tol {
            return Ok(());
        }
        let fresh = nodes.normalized_coefficients(field, alg, op);
        for (a, b) in frozen.iter_mut().zip(&fresh) {
            *a = (1.0 - theta) * *a + theta * b;
        }
    }
    Err(Error::NonConvergence {
        iterations: stats.outer_iterations,
        last: stats.change_history.last().copied().unwrap_or(f64::NAN),
        history: stats.change_history.clone(),
    })
}

/// Interior nodes grouped by parity colour, plus the stencil layout and
/// the links that leave the domain.
struct NodeSet {
    order: Vec<usize>,
    colours: Vec<Range<usize>>,
    shape: Shape,
    h: Vec<f64>,
    /// (node position in `order`, stencil slot, crossing fraction θ).
    ghosts: Vec<(usize, usize, f64)>,
}

impl NodeSet {
    fn new(field: &DiscreteField, boundary: BoundaryTreatment) -> Self {
        let grid = &field.grid;
        let n = grid.dim();
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); 1 << n];
        let mut mi = vec![0usize; n];
        for (i, k) in field.kinds.iter().enumerate() {
            if k.is_interior() {
                grid.multi_index(i, &mut mi);
                let c = (0..n).fold(0, |acc, d| acc | ((mi[d] & 1) << d));
                buckets[c].push(i);
            }
        }
        let mut order = Vec::new();
        let mut colours = Vec::new();
        for b in buckets {
            let start = order.len();
            order.extend(b);
            colours.push(start..order.len());
        }
        let shape = Shape::new(n, &grid.strides());
        let mut ghosts = Vec::new();
        if boundary == BoundaryTreatment::Linear {
            let c = &field.condenser;
            let mut p = vec![0.0; n];
            let mut q = vec![0.0; n];
            for (t, &i) in order.iter().enumerate() {
                grid.node_coords(i, &mut p);
                for (slot, &delta) in shape.deltas.iter().enumerate().skip(1) {
                    let j = (i as isize + delta) as usize;
                    let rho: &dyn DefiningFunction = match field.kinds[j] {
                        NodeKind::Dirichlet1 => &c.inner,
                        NodeKind::Dirichlet0 | NodeKind::Exterior => &c.outer,
                        NodeKind::Interior => continue,
                    };
                    grid.node_coords(j, &mut q);
                    let theta = crossing_fraction(rho, &p, &q);
                    if theta < 1.0 {
                        ghosts.push((t, slot, theta.max(THETA_MIN)));
                    }
                }
            }
        }
        NodeSet {
            order,
            colours,
            shape,
            h: grid.spacing(),
            ghosts,
        }
    }

    fn system<F: Fn(usize) -> Vec<f64>>(
        &self,
        field: &DiscreteField,
        alg: &Algebra,
        coefficients: F,
    ) -> System {
        let n = field.grid.dim();
        let k = self.shape.len();
        let mut weights = vec![0.0; self.order.len() * k];
        let mut second = vec![0.0; n * n];
        let mut first = vec![0.0; n];
        let mut p = vec![0.0; n];
        for (t, &i) in self.order.iter().enumerate() {
            field.grid.node_coords(i, &mut p);
            coordinate_coefficients(alg, &p, &coefficients(t), &mut second, &mut first);
            self.shape
                .fill(&second, &first, &self.h, &mut weights[t * k..(t + 1) * k]);
        }
        let mut constant = vec![0.0; self.order.len()];
        for &(t, slot, theta) in &self.ghosts {
            // v_ghost = v_i + (g - v_i) / θ
            let i = self.order[t];
            let g = field.values[(i as isize + self.shape.deltas[slot]) as usize];
            let w = weights[t * k + slot];
            weights[t * k] += w * (1.0 - 1.0 / theta);
            constant[t] += w * g / theta;
            weights[t * k + slot] = 0.0;
        }
        let scale = weights.iter().fold(0.0f64, |a, w| a.max(w.abs()));
        System {
            order: self.order.clone(),
            colours: self.colours.clone(),
            deltas: self.shape.deltas.clone(),
            weights,
            constant,
            skip_below: scale * 1e-12,
        }
    }

    /// Discrete horizontal gradient at interior nodes, in node order.
    fn gradients(&self, field: &DiscreteField, alg: &Algebra) -> Vec<f64> {
        let n = field.grid.dim();
        let m = alg.horizontal_dim();
        let strides = field.grid.strides();
        let mut out = vec![0.0; self.order.len() * m];
        let mut p = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut e = vec![0.0; n];
        for (t, &i) in self.order.iter().enumerate() {
            field.grid.node_coords(i, &mut p);
            for s in 0..n {
                d[s] = (field.values[i + strides[s]] - field.values[i - strides[s]])
                    / (2.0 * self.h[s]);
            }
            for b in 0..m {
                e.iter_mut().for_each(|x| *x = 0.0);
                e[b] = 1.0;
                let col = frame_apply(alg, &p, &e);
                out[t * m + b] = col.iter().zip(&d).map(|(c, g)| c * g).sum();
            }
        }
        out
    }

    fn normalized_coefficients(
        &self,
        field: &DiscreteField,
        alg: &Algebra,
        op: &OperatorSpec,
    ) -> Vec<f64> {
        let m = alg.horizontal_dim();
        let grads = self.gradients(field, alg);
        let mut out = vec![0.0; self.order.len() * m * m];
        for t in 0..self.order.len() {
            op.normalized_coefficients(
                &grads[t * m..(t + 1) * m],
                &mut out[t * m * m..(t + 1) * m * m],
            );
        }
        out
    }
}

/// Assembled weights for every interior node.
struct System {
    order: Vec<usize>,
    colours: Vec<Range<usize>>,
    deltas: Vec<isize>,
    weights: Vec<f64>,
    constant: Vec<f64>,
    skip_below: f64,
}

impl System {
    /// One SOR pass over all colours; returns the largest correction.
    fn sweep(&self, v: &mut [f64], omega: f64) -> f64 {
        let k = self.deltas.len();
        let mut biggest = 0.0f64;
        for range in &self.colours {
            for t in range.clone() {
                let i = self.order[t];
                let w = &self.weights[t * k..(t + 1) * k];
                if w[0].abs() <= self.skip_below {
                    continue;
                }
                let mut s = self.constant[t];
                for j in 1..k {
                    s += w[j] * v[(i as isize + self.deltas[j]) as usize];
                }
                let corr = omega * (-s / w[0] - v[i]);
                v[i] += corr;
                biggest = biggest.max(corr.abs());
            }
        }
        biggest
    }

    fn residual(&self, v: &[f64]) -> f64 {
        let k = self.deltas.len();
        let mut worst = 0.0f64;
        for (t, &i) in self.order.iter().enumerate() {
            let w = &self.weights[t * k..(t + 1) * k];
            if w[0].abs() <= self.skip_below {
                continue;
            }
            let r: f64 = self.constant[t]
                + (0..k)
                    .map(|j| w[j] * v[(i as isize + self.deltas[j]) as usize])
                    .sum::<f64>();
            worst = worst.max(r.abs());
        }
        worst
    }
}

fn relax_to_residual(
    system: &System,
    v: &mut [f64],
    config: &SolveConfig,
    omega: f64,
    tol: f64,
    stats: &mut SolveStats,
) -> Result<()> {
    let mut sweeps = 0;
    loop {
        let r = system.residual(v);
        stats.residual_history.push(r);
        if r <= tol {
            return Ok(());
        }
        if !r.is_finite() || sweeps >= config.max_sweeps {
            return Err(Error::NonConvergence {
                iterations: sweeps,
                last: r,
                history: stats.residual_history.clone(),
            });
        }
        for _ in 0..config.check_every {
            system.sweep(v, omega);
        }
        sweeps += config.check_every;
        stats.sweeps += config.check_every;
    }
}

fn relax_to_change(
    system: &System,
    v: &mut [f64],
    config: &SolveConfig,
    omega: f64,
    tol: f64,
    stats: &mut SolveStats,
) -> Result<()> {
    for _ in 0..config.max_sweeps {
        let c = system.sweep(v, omega);
        stats.sweeps += 1;
        if c <= tol {
            return Ok(());
        }
        if !c.is_finite() {
            break;
        }
    }
    let r = system.residual(v);
    stats.residual_history.push(r);
    Err(Error::NonConvergence {
        iterations: config.max_sweeps,
        last: r,
        history: stats.residual_history.clone(),
    })
}

/// Where `ρ` changes sign along `p → q`, as a fraction of the link; 1 if it
/// does not.
fn crossing_fraction(rho: &dyn DefiningFunction, p: &[f64], q: &[f64]) -> f64 {
    let at = |s: f64| {
        let x: Vec<f64> = p.iter().zip(q).map(|(a, b)| a + s * (b - a)).collect();
        rho.eval(&x)
    };
    let (mut a, mut b) = (0.0, 1.0);
    let (mut fa, mut fb) = (at(a), at(b));
    if (fa < 0.0) == (fb < 0.0) {
        return 1.0;
    }
    // Illinois variant of regula falsi.
    let mut side = 0;
    for _ in 0..12 {
        let s = (a * fb - b * fa) / (fb - fa);
        let fs = at(s);
        if (fs < 0.0) == (fa < 0.0) {
            a = s;
            fa = fs;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = s;
            fb = fs;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
        if b - a < 1e-10 {
            break;
        }
    }
    0.5 * (a + b)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualReport {
    pub sup: f64,
    /// One entry per grid node; zero off the interior.
    pub per_node: Vec<f64>,
}

/// Stencil residual of `op` (with its own `ε_reg`) at every interior node.
pub fn residual(
    field: &DiscreteField,
    op: &OperatorSpec,
    boundary: BoundaryTreatment,
) -> Result<ResidualReport> {
    let alg = field.condenser.alg.clone();
    let nodes = NodeSet::new(field, boundary);
    let m = alg.horizontal_dim();
    let grads = if op.is_linear() {
        Vec::new()
    } else {
        nodes.gradients(field, &alg)
    };
    let mut coeffs = Vec::with_capacity(nodes.order.len() * m * m);
    for t in 0..nodes.order.len() {
        let xi = if op.is_linear() {
            DVector::zeros(m)
        } else {
            DVector::from_column_slice(&grads[t * m..(t + 1) * m])
        };
        let a = op.coefficient_matrix(&xi)?;
        for i in 0..m {
            for j in 0..m {
                coeffs.push(a[(i, j)]);
            }
        }
    }
    let system = nodes.system(field, &alg, |t| coeffs[t * m * m..(t + 1) * m * m].to_vec());
    let k = system.deltas.len();
    let mut per_node = vec![0.0; field.values.len()];
    let mut sup = 0.0f64;
    for (t, &i) in system.order.iter().enumerate() {
        let w = &system.weights[t * k..(t + 1) * k];
        let r: f64 = system.constant[t]
            + (0..k)
                .map(|j| w[j] * field.values[(i as isize + system.deltas[j]) as usize])
                .sum::<f64>();
        per_node[i] = r;
        sup = sup.max(r.abs());
    }
    Ok(ResidualReport { sup, per_node })
}
