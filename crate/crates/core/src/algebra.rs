//! Stratified nilpotent Lie algebras in exponential coordinates.
//!
//! A point of the group is stored through its logarithm, so the group law is
//! the Baker-Campbell-Hausdorff product truncated at the step of the algebra.
//! Basis indices are 0-based and ordered layer by layer.

use std::ops::{Deref, DerefMut, Range};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Largest step the truncated BCH expansion supports.
pub const MAX_STEP: usize = 4;

const CHECK_TOL: f64 = 1e-12;

pub type Coords = SmallVec<[f64; 8]>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketTerm {
    pub c: usize,
    pub coef: f64,
}

/// One row of the structure-constant table: `[e_a, e_b] = sum coef * e_c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketEntry {
    pub a: usize,
    pub b: usize,
    pub out: Vec<BracketTerm>,
}

/// Serializable description of a stratified Lie algebra.
///
/// Brackets listed only as `(a, b)` get their antisymmetric partner filled in;
/// when both orders are given they are taken literally, which lets
/// [`validate_spec`] catch inconsistent tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgebraSpec {
    pub step: usize,
    pub layer_dims: Vec<usize>,
    #[serde(default)]
    pub brackets: Vec<BracketEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gauge_weights: Option<Vec<f64>>,
}

impl AlgebraSpec {
    /// Heisenberg algebra of dimension 2n+1: `[e_i, e_{n+i}] = e_{2n}`.
    /// The layer-2 gauge weight is 16.
    pub fn heisenberg(n: usize) -> Self {
        let brackets = (0..n)
            .map(|i| BracketEntry {
                a: i,
                b: n + i,
                out: vec![BracketTerm {
                    c: 2 * n,
                    coef: 1.0,
                }],
            })
            .collect();
        AlgebraSpec {
            step: 2,
            layer_dims: vec![2 * n, 1],
            brackets,
            gauge_weights: Some(vec![1.0, 16.0]),
        }
    }

    /// Engel algebra: layers [2,1,1], `[e0,e1] = e2`, `[e0,e2] = e3`.
    pub fn engel() -> Self {
        AlgebraSpec {
            step: 3,
            layer_dims: vec![2, 1, 1],
            brackets: vec![
                BracketEntry {
                    a: 0,
                    b: 1,
                    out: vec![BracketTerm { c: 2, coef: 1.0 }],
                },
                BracketEntry {
                    a: 0,
                    b: 2,
                    out: vec![BracketTerm { c: 3, coef: 1.0 }],
                },
            ],
            gauge_weights: None,
        }
    }

    pub fn abelian(n: usize) -> Self {
        AlgebraSpec {
            step: 1,
            layer_dims: vec![n],
            brackets: Vec::new(),
            gauge_weights: None,
        }
    }

    /// Parses `heisenberg-<n>`, `engel` or `abelian-<n>`.
    pub fn preset(name: &str) -> Result<Self> {
        let parse_n = |rest: &str| -> Result<usize> {
            match rest.parse::<usize>() {
                Ok(n) if n > 0 => Ok(n),
                _ => Err(Error::UnknownPreset(name.to_string())),
            }
        };
        if name == "engel" {
            Ok(Self::engel())
        } else if let Some(rest) = name.strip_prefix("heisenberg-") {
            Ok(Self::heisenberg(parse_n(rest)?))
        } else if let Some(rest) = name.strip_prefix("abelian-") {
            Ok(Self::abelian(parse_n(rest)?))
        } else {
            Err(Error::UnknownPreset(name.to_string()))
        }
    }

    pub fn dim(&self) -> usize {
        self.layer_dims.iter().sum()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.gauge_weights
            .clone()
            .unwrap_or_else(|| vec![1.0; self.step])
    }
}

macro_rules! coords_newtype {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub Coords);

        impl $name {
            pub fn new(coords: &[f64]) -> Self {
                $name(Coords::from_slice(coords))
            }

            pub fn zeros(n: usize) -> Self {
                $name(smallvec::smallvec![0.0; n])
            }

            pub fn coords(&self) -> &[f64] {
                &self.0
            }
        }

        impl Deref for $name {
            type Target = [f64];
            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl DerefMut for $name {
            fn deref_mut(&mut self) -> &mut [f64] {
                &mut self.0
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(v: Vec<f64>) -> Self {
                $name(Coords::from_vec(v))
            }
        }
    };
}

coords_newtype!(
    /// Element `u = u_1 + ... + u_k` of the Lie algebra.
    AlgebraVector
);
coords_newtype!(
    /// Group element `p = exp(u)` stored by its logarithmic coordinates `u`.
    GroupPoint
);

impl GroupPoint {
    pub fn identity(n: usize) -> Self {
        Self::zeros(n)
    }

    pub fn log(&self) -> AlgebraVector {
        AlgebraVector(self.0.clone())
    }
}

impl AlgebraVector {
    pub fn exp(&self) -> GroupPoint {
        GroupPoint(self.0.clone())
    }

    pub fn basis(n: usize, i: usize) -> Self {
        let mut v = Self::zeros(n);
        v[i] = 1.0;
        v
    }
}

/// Validated-shape algebra with a dense structure-constant table.
#[derive(Clone, Debug)]
pub struct Algebra {
    spec: AlgebraSpec,
    dim: usize,
    layer_of: Vec<usize>,
    layer_ranges: Vec<Range<usize>>,
    /// `table[(a*N + b)*N + c] = c_{ab}^c`
    table: Vec<f64>,
    /// Nonzero structure constants `(a, b, c, coef)`.
    nonzero: Vec<(usize, usize, usize, f64)>,
    gauge: Gauge,
}

fn shape_errors(spec: &AlgebraSpec) -> Vec<String> {
    let mut errs = Vec::new();
    if spec.step == 0 {
        errs.push("step must be at least 1".into());
    }
    if spec.step > MAX_STEP {
        errs.push(format!(
            "step {} exceeds supported maximum {MAX_STEP}",
            spec.step
        ));
    }
    if spec.layer_dims.len() != spec.step {
        errs.push(format!(
            "layer_dims has {} entries but step is {}",
            spec.layer_dims.len(),
            spec.step
        ));
    }
    if spec.layer_dims.contains(&0) {
        errs.push("every layer must have positive dimension".into());
    }
    let n = spec.dim();
    let mut seen = std::collections::HashSet::new();
    for e in &spec.brackets {
        if e.a >= n || e.b >= n {
            errs.push(format!("bracket ({}, {}) index out of range", e.a, e.b));
        }
        if !seen.insert((e.a, e.b)) {
            errs.push(format!("bracket ({}, {}) listed twice", e.a, e.b));
        }
        for t in &e.out {
            if t.c >= n {
                errs.push(format!(
                    "bracket ({}, {}) output index {} out of range",
                    e.a, e.b, t.c
                ));
            }
            if !t.coef.is_finite() {
                errs.push(format!(
                    "bracket ({}, {}) has non-finite coefficient",
                    e.a, e.b
                ));
            }
        }
    }
    if let Some(w) = &spec.gauge_weights {
        if w.len() != spec.step {
            errs.push(format!(
                "gauge_weights has {} entries but step is {}",
                w.len(),
                spec.step
            ));
        }
        if w.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            errs.push("gauge weights must be positive".into());
        }
    }
    errs
}

fn build_table(spec: &AlgebraSpec) -> Vec<f64> {
    let n = spec.dim();
    let mut table = vec![0.0; n * n * n];
    let given: std::collections::HashSet<(usize, usize)> =
        spec.brackets.iter().map(|e| (e.a, e.b)).collect();
    for e in &spec.brackets {
        for t in &e.out {
            table[(e.a * n + e.b) * n + t.c] += t.coef;
            if !given.contains(&(e.b, e.a)) {
                table[(e.b * n + e.a) * n + t.c] -= t.coef;
            }
        }
    }
    table
}

impl Algebra {
    /// Builds the algebra after shape checks. Semantic invariants (Jacobi,
    /// grading, ...) are reported by [`validate_spec`], not enforced here.
    pub fn new(spec: AlgebraSpec) -> Result<Self> {
        let errs = shape_errors(&spec);
        if !errs.is_empty() {
            return Err(Error::InvalidSpec(errs.join("; ")));
        }
        let dim = spec.dim();
        let mut layer_of = Vec::with_capacity(dim);
        let mut layer_ranges = Vec::with_capacity(spec.step);
        let mut start = 0;
        for (i, &m) in spec.layer_dims.iter().enumerate() {
            layer_ranges.push(start..start + m);
            layer_of.extend(std::iter::repeat_n(i + 1, m));
            start += m;
        }
        let table = build_table(&spec);
        let mut nonzero = Vec::new();
        for a in 0..dim {
            for b in 0..dim {
                for c in 0..dim {
                    let x = table[(a * dim + b) * dim + c];
                    if x != 0.0 {
                        nonzero.push((a, b, c, x));
                    }
                }
            }
        }
        let gauge = Gauge::new(spec.step, layer_ranges.clone(), spec.weights());
        Ok(Algebra {
            spec,
            dim,
            layer_of,
            layer_ranges,
            table,
            nonzero,
            gauge,
        })
    }

    /// Builds the algebra and rejects it unless every invariant holds.
    pub fn validated(spec: AlgebraSpec) -> Result<Self> {
        let report = validate_spec(&spec);
        if !report.passed {
            return Err(Error::InvalidSpec(report.failures().join("; ")));
        }
        Self::new(spec)
    }

    pub fn preset(name: &str) -> Result<Self> {
        Self::new(AlgebraSpec::preset(name)?)
    }

    pub fn spec(&self) -> &AlgebraSpec {
        &self.spec
    }

    /// Topological dimension N.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn step(&self) -> usize {
        self.spec.step
    }

    /// Dimension m of the horizontal layer.
    pub fn horizontal_dim(&self) -> usize {
        self.spec.layer_dims[0]
    }

    /// 1-based layer of basis index `i`.
    pub fn layer_of(&self, i: usize) -> usize {
        self.layer_of[i]
    }

    pub fn layer_range(&self, layer: usize) -> Range<usize> {
        self.layer_ranges[layer - 1].clone()
    }

    pub fn structure_constant(&self, a: usize, b: usize, c: usize) -> f64 {
        self.table[(a * self.dim + b) * self.dim + c]
    }

    pub(crate) fn nonzero_constants(&self) -> &[(usize, usize, usize, f64)] {
        &self.nonzero
    }

    pub fn gauge(&self) -> &Gauge {
        &self.gauge
    }

    /// Homogeneous dimension `Q = sum i * dim g_i`.
    pub fn homogeneous_dimension(&self) -> usize {
        self.spec
            .layer_dims
            .iter()
            .enumerate()
            .map(|(i, m)| (i + 1) * m)
            .sum()
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: len,
            });
        }
        Ok(())
    }

    /// Bracket on raw coordinate slices; callers guarantee the lengths.
    pub fn bracket_raw(&self, u: &[f64], v: &[f64]) -> Coords {
        let mut out: Coords = smallvec::smallvec![0.0; self.dim];
        for &(a, b, c, x) in &self.nonzero {
            out[c] += x * u[a] * v[b];
        }
        out
    }

    pub fn bracket(&self, u: &AlgebraVector, v: &AlgebraVector) -> Result<AlgebraVector> {
        self.check_dim(u.len())?;
        self.check_dim(v.len())?;
        Ok(AlgebraVector(self.bracket_raw(u, v)))
    }

    /// Truncated BCH series `log(exp u exp v)` on raw slices.
    pub fn bch_raw(&self, u: &[f64], v: &[f64]) -> Coords {
        let mut z: Coords = u.iter().zip(v).map(|(a, b)| a + b).collect();
        let k = self.spec.step;
        if k >= 2 {
            let uv = self.bracket_raw(u, v);
            axpy(&mut z, 0.5, &uv);
            if k >= 3 {
                let u_uv = self.bracket_raw(u, &uv);
                let v_uv = self.bracket_raw(v, &uv);
                axpy(&mut z, 1.0 / 12.0, &u_uv);
                axpy(&mut z, -1.0 / 12.0, &v_uv);
                if k >= 4 {
                    let v_u_uv = self.bracket_raw(v, &u_uv);
                    axpy(&mut z, -1.0 / 24.0, &v_u_uv);
                }
            }
        }
        z
    }

    pub fn bch_product(&self, u: &AlgebraVector, v: &AlgebraVector) -> Result<AlgebraVector> {
        self.check_dim(u.len())?;
        self.check_dim(v.len())?;
        Ok(AlgebraVector(self.bch_raw(u, v)))
    }

    pub fn group_mul(&self, p: &GroupPoint, q: &GroupPoint) -> Result<GroupPoint> {
        self.check_dim(p.len())?;
        self.check_dim(q.len())?;
        Ok(GroupPoint(self.bch_raw(p, q)))
    }

    pub fn inverse(&self, p: &GroupPoint) -> GroupPoint {
        GroupPoint(p.iter().map(|x| -x).collect())
    }

    pub(crate) fn dilate_raw(&self, lambda: f64, p: &[f64]) -> Coords {
        let mut out = Coords::from_slice(p);
        let mut scale = 1.0;
        for range in &self.layer_ranges {
            scale *= lambda;
            for x in &mut out[range.clone()] {
                *x *= scale;
            }
        }
        out
    }

    /// Group dilation: layer-i coordinates scaled by `lambda^i`.
    pub fn dilate(&self, lambda: f64, p: &GroupPoint) -> Result<GroupPoint> {
        check_scale(lambda)?;
        self.check_dim(p.len())?;
        Ok(GroupPoint(self.dilate_raw(lambda, p)))
    }

    pub(crate) fn centered_dilate_raw(&self, center: &[f64], lambda: f64, p: &[f64]) -> Coords {
        let neg: Coords = center.iter().map(|x| -x).collect();
        let rel = self.bch_raw(&neg, p);
        let scaled = self.dilate_raw(lambda, &rel);
        self.bch_raw(center, &scaled)
    }

    /// `p0 ∘ δ_λ(p0⁻¹ ∘ p)`.
    pub fn centered_dilate(
        &self,
        center: &GroupPoint,
        lambda: f64,
        p: &GroupPoint,
    ) -> Result<GroupPoint> {
        check_scale(lambda)?;
        self.check_dim(center.len())?;
        self.check_dim(p.len())?;
        Ok(GroupPoint(self.centered_dilate_raw(center, lambda, p)))
    }

    /// Non-isotropic gauge of `p`.
    pub fn gauge_of(&self, p: &[f64]) -> f64 {
        self.gauge.eval(p)
    }
}

fn check_scale(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveScale(lambda))
    }
}

fn axpy(z: &mut [f64], a: f64, x: &[f64]) {
    for (zi, xi) in z.iter_mut().zip(x) {
        *zi += a * xi;
    }
}

/// Homogeneous gauge `(sum_i w_i ||u_i||^{2k!/i})^{1/(2k!)}`.
#[derive(Clone, Debug)]
pub struct Gauge {
    layer_ranges: Vec<Range<usize>>,
    weights: Vec<f64>,
    /// `2 k!`
    exponent: i32,
}

impl Gauge {
    fn new(step: usize, layer_ranges: Vec<Range<usize>>, weights: Vec<f64>) -> Self {
        let fact: i32 = (1..=step as i32).product();
        Gauge {
            layer_ranges,
            weights,
            exponent: 2 * fact,
        }
    }

    pub fn exponent(&self) -> i32 {
        self.exponent
    }

    pub fn layer_exponent(&self, layer: usize) -> i32 {
        self.exponent / layer as i32
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn eval(&self, p: &[f64]) -> f64 {
        // Factor out the homogeneous scale so no power overflows.
        let norms: SmallVec<[f64; 4]> = self
            .layer_ranges
            .iter()
            .map(|r| p[r.clone()].iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect();
        let scale = norms
            .iter()
            .enumerate()
            .map(|(i, n)| n.powf(1.0 / (i + 1) as f64))
            .fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let sum: f64 = norms
            .iter()
            .enumerate()
            .map(|(i, n)| {
                let layer = i + 1;
                let ratio = n / scale.powi(layer as i32);
                self.weights[i] * ratio.powi(self.exponent / layer as i32)
            })
            .sum();
        scale * sum.powf(1.0 / self.exponent as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub details: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn failures(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{}: {}", c.name, c.details.join(", ")))
            .collect()
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn check(name: &str, details: Vec<String>) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        passed: details.is_empty(),
        details,
    }
}

/// Checks antisymmetry, grading, Jacobi and stratification of a spec.
pub fn validate_spec(spec: &AlgebraSpec) -> ValidationReport {
    let shape = shape_errors(spec);
    if !shape.is_empty() {
        return ValidationReport {
            passed: false,
            checks: vec![check("shape", shape)],
        };
    }
    let n = spec.dim();
    let table = build_table(spec);
    let c = |a: usize, b: usize, k: usize| table[(a * n + b) * n + k];
    let mut layer_of = Vec::with_capacity(n);
    for (i, &m) in spec.layer_dims.iter().enumerate() {
        layer_of.extend(std::iter::repeat_n(i + 1, m));
    }

    let mut antisym = Vec::new();
    for a in 0..n {
        for b in a..n {
            for k in 0..n {
                if (c(a, b, k) + c(b, a, k)).abs() > CHECK_TOL {
                    antisym.push(format!("c[{a}][{b}]^{k} != -c[{b}][{a}]^{k}"));
                }
            }
        }
    }

    let mut grading = Vec::new();
    for a in 0..n {
        for b in 0..n {
            let target = layer_of[a] + layer_of[b];
            for k in 0..n {
                if c(a, b, k).abs() > CHECK_TOL && layer_of[k] != target {
                    grading.push(format!(
                        "[e{a}, e{b}] has a component on e{k} (layer {}), expected layer {target}",
                        layer_of[k]
                    ));
                }
            }
        }
    }

    let br = |u: &[f64], v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; n];
        for a in 0..n {
            if u[a] == 0.0 {
                continue;
            }
            for b in 0..n {
                if v[b] == 0.0 {
                    continue;
                }
                for k in 0..n {
                    out[k] += c(a, b, k) * u[a] * v[b];
                }
            }
        }
        out
    };
    let basis = |i: usize| {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        e
    };
    let mut jacobi = Vec::new();
    for a in 0..n {
        for b in 0..n {
            for d in 0..n {
                let (ea, eb, ed) = (basis(a), basis(b), basis(d));
                let t1 = br(&ea, &br(&eb, &ed));
                let t2 = br(&eb, &br(&ed, &ea));
                let t3 = br(&ed, &br(&ea, &eb));
                let worst = (0..n)
                    .map(|k| (t1[k] + t2[k] + t3[k]).abs())
                    .fold(0.0, f64::max);
                if worst > CHECK_TOL {
                    jacobi.push(format!("Jacobi fails on (e{a}, e{b}, e{d}) by {worst:e}"));
                }
            }
        }
    }

    let mut strat = Vec::new();
    let mut start = 0;
    let ranges: Vec<Range<usize>> = spec
        .layer_dims
        .iter()
        .map(|&m| {
            let r = start..start + m;
            start += m;
            r
        })
        .collect();
    for j in 1..spec.step {
        let mut cols = Vec::new();
        for a in ranges[0].clone() {
            for b in ranges[j - 1].clone() {
                cols.push(br(&basis(a), &basis(b)));
            }
        }
        let target = ranges[j].clone();
        let mat = DMatrix::from_fn(target.len(), cols.len(), |r, col| {
            cols[col][target.start + r]
        });
        let rank = mat.rank(1e-9);
        if rank != target.len() {
            strat.push(format!(
                "[g1, g{}] spans dimension {rank}, layer {} has dimension {}",
                j,
                j + 1,
                target.len()
            ));
        }
    }

    let checks = vec![
        check("antisymmetry", antisym),
        check("grading", grading),
        check("jacobi", jacobi),
        check("stratification", strat),
    ];
    ValidationReport {
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}
