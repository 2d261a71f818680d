//! Oracles and experiment drivers: the Heisenberg fundamental solution,
//! the 𝒵 property suite, the starshapedness pipeline for condenser
//! potentials and the scaling probe.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{Algebra, AlgebraSpec, GroupPoint};
use crate::calculus::{
    evaluate_operator, horizontal_gradient, horizontal_hessian, symbolic_frame, z_apply,
    z_divergence, HorizontalJet, OperatorSpec,
};
use crate::error::{Error, Result};
use crate::geometry::{
    self, is_starshaped, lambda_grid, ray_boundary_points, sample_box, star_envelope, Condenser,
    CondenserSpec, DefiningFunction, StarReport, Superlevel,
};
use crate::poly::Poly;
use crate::solver::{self, DiscreteField, GridSpec, NodeKind, Solution, SolveConfig, SolveStats};

/// `E(p) = |p|^{2-Q}`, without normalization constant. On the `heisenberg-n`
/// presets this is the fundamental solution of `Δ_H`.
pub fn fundamental_solution(alg: &Algebra, p: &[f64]) -> Result<f64> {
    if p.len() != alg.dim() {
        return Err(Error::DimensionMismatch {
            expected: alg.dim(),
            got: p.len(),
        });
    }
    let g = alg.gauge_of(p);
    if g == 0.0 {
        return Err(Error::SingularEvaluation(
            "fundamental solution at the identity".into(),
        ));
    }
    Ok(g.powf(2.0 - alg.homogeneous_dimension() as f64))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FundamentalSolutionReport {
    pub homogeneity_cases: usize,
    pub homogeneity_max_rel_error: f64,
    pub z_points: usize,
    /// `max |𝒵E − (2−Q)E| / |E|` at steps `h` and `h/2`.
    pub z_max_rel_error: [f64; 2],
    pub laplacian_points: usize,
    pub laplacian_step: f64,
    /// `max |Δ_H E|` by flow differences at steps `h` and `h/2`.
    pub laplacian_max: [f64; 2],
    pub laplacian_ratio: f64,
    /// Same as `laplacian_max` on the gauge annulus `[0.5, 1.5]`, where the
    /// `O(h²)` constant is larger (it grows like `|p|^{-6}`).
    pub near_laplacian_max: [f64; 2],
    pub passed: bool,
}

/// Random points with gauge in `[lo, hi]`.
fn annulus_points<R: Rng>(
    rng: &mut R,
    alg: &Algebra,
    count: usize,
    lo: f64,
    hi: f64,
) -> Vec<GroupPoint> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p = random_point(rng, alg.dim());
        let g = alg.gauge_of(&p);
        if g >= lo && g <= hi {
            out.push(p);
        }
    }
    out
}

/// Homogeneity, `𝒵E = (2−Q)E` and `Δ_H E = 0` checks for the fundamental solution.
pub fn fundamental_solution_checks(alg: &Algebra, seed: u64) -> FundamentalSolutionReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = alg.homogeneous_dimension() as f64;
    let e = |x: &GroupPoint| fundamental_solution(alg, x).unwrap_or(f64::NAN);

    let cases = 1000;
    let mut homog: f64 = 0.0;
    for p in annulus_points(&mut rng, alg, cases, 0.05, 2.0) {
        let lambda = rng.random_range(0.1..10.0);
        let lhs = e(&GroupPoint(alg.dilate_raw(lambda, &p)));
        let rhs = lambda.powf(2.0 - q) * e(&p);
        homog = homog.max((lhs - rhs).abs() / rhs.abs());
    }

    let pts = annulus_points(&mut rng, alg, 100, 2.0, 4.0);
    let near = annulus_points(&mut rng, alg, 100, 0.5, 1.5);
    let h = 1e-3;
    let mut zerr = [0.0f64; 2];
    let mut lap = [0.0f64; 2];
    let mut near_lap = [0.0f64; 2];
    for (p, r) in pts.iter().zip(&near) {
        for (k, step) in [h, h / 2.0].into_iter().enumerate() {
            let v = e(r);
            zerr[k] = zerr[k]
                .max((z_apply(alg, e, r, Z_STEP / (k + 1) as f64) - (2.0 - q) * v).abs() / v.abs());
            lap[k] = lap[k].max(horizontal_hessian(alg, e, p, step).trace().abs());
            near_lap[k] = near_lap[k].max(horizontal_hessian(alg, e, r, step).trace().abs());
        }
    }
    let ratio = lap[0] / lap[1];
    let passed =
        homog <= 1e-12 && lap[0] <= 1e-6 && zerr[0] <= 1e-6 && (3.0..=5.0).contains(&ratio);
    FundamentalSolutionReport {
        homogeneity_cases: cases,
        homogeneity_max_rel_error: homog,
        z_points: pts.len(),
        z_max_rel_error: zerr,
        laplacian_points: pts.len(),
        laplacian_step: h,
        laplacian_max: lap,
        laplacian_ratio: ratio,
        near_laplacian_max: near_lap,
        passed,
    }
}

/// `X_b f` for a polynomial `f`, using the symbolic frame.
pub fn x_poly(frame: &[Vec<Poly>], b: usize, f: &Poly) -> Poly {
    frame[b]
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .fold(Poly::zero(f.nvars()), |acc, (s, c)| {
            &acc + &(c * &f.derivative(s))
        })
}

/// `𝒵f = Σ layer(s) u_s ∂_s f`.
pub fn z_poly(alg: &Algebra, f: &Poly) -> Poly {
    let n = alg.dim();
    (0..n).fold(Poly::zero(n), |acc, s| {
        let term = &Poly::var(n, s).scale(alg.layer_of(s) as f64) * &f.derivative(s);
        &acc + &term
    })
}

/// `Δ_H f = Σ_b X_b X_b f`.
pub fn hlap_poly(alg: &Algebra, frame: &[Vec<Poly>], f: &Poly) -> Poly {
    (0..alg.horizontal_dim()).fold(Poly::zero(alg.dim()), |acc, b| {
        &acc + &x_poly(frame, b, &x_poly(frame, b, f))
    })
}

/// Random polynomial of coordinate degree ≤ `degree` with coefficients in [-1, 1].
pub fn random_poly<R: Rng>(rng: &mut R, nvars: usize, degree: u8, terms: usize) -> Poly {
    let mut p = Poly::zero(nvars);
    for _ in 0..terms {
        let mut e = vec![0u8; nvars];
        let mut left = rng.random_range(0..=degree);
        while left > 0 {
            e[rng.random_range(0..nvars)] += 1;
            left -= 1;
        }
        p = &p + &Poly::monomial(nvars, &e, rng.random_range(-1.0..1.0));
    }
    p
}

fn random_point<R: Rng>(rng: &mut R, n: usize) -> GroupPoint {
    GroupPoint((0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZPropertyReport {
    pub homogeneous_dimension: usize,
    pub divergence: f64,
    pub divergence_exact: bool,
    pub samples: usize,
    pub step: f64,
    pub tolerance: f64,
    /// `max |[X_i, 𝒵]f − X_i f|`.
    pub commutator_max_error: f64,
    /// `max |Δ_H(𝒵f) − 𝒵Δ_H f − 2Δ_H f|`.
    pub conjugation_max_error: f64,
    /// `max |𝒵m − κ m|` over layer-adapted monomials of weighted degree κ.
    pub euler_max_error: f64,
    /// `max |Δ_H(𝒵E)|` away from the identity; only on the Heisenberg presets.
    pub annihilation_max: Option<f64>,
    pub passed: bool,
}

pub const Z_STEP: f64 = 1e-4;
pub const Z_TOLERANCE: f64 = 1e-6;

/// Checks the identities satisfied by the generator of dilations on
/// `samples` random polynomials and points.
pub fn property_suite_z(alg: &Algebra, samples: usize, seed: u64) -> ZPropertyReport {
    let n = alg.dim();
    let m = alg.horizontal_dim();
    let h = Z_STEP;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frame = symbolic_frame(alg);
    let q = alg.homogeneous_dimension();
    let div = z_divergence(alg);
    let layers: Vec<usize> = (0..n).map(|s| alg.layer_of(s)).collect();

    let mut commutator: f64 = 0.0;
    let mut conjugation: f64 = 0.0;
    let mut euler: f64 = 0.0;
    for _ in 0..samples {
        let f = random_poly(&mut rng, n, 3, 8);
        let p = random_point(&mut rng, n);

        // Nested differences: X_i(𝒵f) − 𝒵(X_i f), all by flows and dilations.
        let zf = |x: &GroupPoint| z_apply(alg, |y: &GroupPoint| f.eval(y), x, h);
        for i in 0..m {
            let xi_zf = (zf(&GroupPoint(crate::calculus::flow(alg, &p, i, h)))
                - zf(&GroupPoint(crate::calculus::flow(alg, &p, i, -h))))
                / (2.0 * h);
            let xif = |x: &GroupPoint| {
                (f.eval(&crate::calculus::flow(alg, x, i, h))
                    - f.eval(&crate::calculus::flow(alg, x, i, -h)))
                    / (2.0 * h)
            };
            let z_xif = z_apply(alg, xif, &p, h);
            let lhs = xi_zf - z_xif;
            let rhs = x_poly(&frame, i, &f).eval(&p);
            commutator = commutator.max((lhs - rhs).abs());
        }

        // Δ_H(𝒵f) by flow differences of the exact 𝒵f; right side symbolic.
        let zf_exact = z_poly(alg, &f);
        let lhs = horizontal_hessian(alg, |y: &GroupPoint| zf_exact.eval(y), &p, h).trace();
        let lap = hlap_poly(alg, &frame, &f);
        let rhs = (&z_poly(alg, &lap) + &lap.scale(2.0)).eval(&p);
        conjugation = conjugation.max((lhs - rhs).abs());

        // Euler identity on a layer-adapted monomial of weighted degree ≤ 6,
        // which keeps the O(κ³h²) differencing error below 1e-6.
        let mono = loop {
            let mut e = vec![0u8; n];
            for _ in 0..rng.random_range(1..=4) {
                e[rng.random_range(0..n)] += 1;
            }
            let mono = Poly::monomial(n, &e, 1.0);
            if mono.weighted_degree(&layers).unwrap_or(0) <= 6 {
                break mono;
            }
        };
        let kappa = mono.weighted_degree(&layers).unwrap_or(0) as f64;
        let z = z_apply(alg, |y: &GroupPoint| mono.eval(y), &p, h);
        euler = euler.max((z - kappa * mono.eval(&p)).abs());
    }

    let annihilation = if alg.spec() == &AlgebraSpec::heisenberg(m / 2) && m.is_multiple_of(2) {
        let mut worst: f64 = 0.0;
        let e = |x: &GroupPoint| fundamental_solution(alg, x).unwrap_or(f64::NAN);
        for _ in 0..samples {
            let p = random_point(&mut rng, n);
            if alg.gauge_of(&p) < 0.3 {
                continue;
            }
            let ze = |x: &GroupPoint| z_apply(alg, e, x, 1e-3);
            worst = worst.max(horizontal_hessian(alg, ze, &p, 1e-3).trace().abs());
        }
        Some(worst)
    } else {
        None
    };

    let divergence_exact = div == q as f64;
    let passed = divergence_exact
        && commutator <= Z_TOLERANCE
        && conjugation <= Z_TOLERANCE
        && euler <= Z_TOLERANCE;
    ZPropertyReport {
        homogeneous_dimension: q,
        divergence: div,
        divergence_exact,
        samples,
        step: h,
        tolerance: Z_TOLERANCE,
        commutator_max_error: commutator,
        conjugation_max_error: conjugation,
        euler_max_error: euler,
        annihilation_max: annihilation,
        passed,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub lambda: f64,
    pub points: usize,
    pub gradient_max_rel_error: f64,
    pub hessian_max_rel_error: f64,
    /// `ℱ(ψ) = λ^{-α} ℱ(φ)` when the operator has an exact scaling law.
    pub operator_max_rel_error: Option<f64>,
}

/// Chain-rule identities for `ψ = φ ∘ δ^{p₀}_{1/λ}` at `δ^{p₀}_λ(p)`.
pub fn scaling_stability_probe<F>(
    alg: &Algebra,
    op: &OperatorSpec,
    phi: F,
    p0: &[f64],
    lambdas: &[f64],
    points: &[Vec<f64>],
    h: f64,
) -> Result<Vec<ScalingReport>>
where
    F: Fn(&GroupPoint) -> f64,
{
    let rel = |a: f64, b: f64, scale: f64| (a - b).abs() / scale.max(1e-12);
    let mut out = Vec::new();
    for &lambda in lambdas {
        if !(lambda > 0.0) {
            return Err(Error::NonPositiveScale(lambda));
        }
        let psi = |x: &GroupPoint| phi(&GroupPoint(alg.centered_dilate_raw(p0, 1.0 / lambda, x)));
        let (mut ge, mut he, mut oe) = (0.0f64, 0.0f64, 0.0f64);
        for p in points {
            let p = GroupPoint::new(p);
            let q = GroupPoint(alg.centered_dilate_raw(p0, lambda, &p));
            let gp: DVector<f64> = horizontal_gradient(alg, &phi, &p, h);
            let gq: DVector<f64> = horizontal_gradient(alg, psi, &q, h);
            let hp: DMatrix<f64> = horizontal_hessian(alg, &phi, &p, h);
            let hq: DMatrix<f64> = horizontal_hessian(alg, psi, &q, h);
            let gs = gp.amax();
            for i in 0..gp.len() {
                ge = ge.max(rel(gq[i], gp[i] / lambda, gs));
            }
            let hs = hp.amax();
            for i in 0..hp.nrows() {
                for j in 0..hp.ncols() {
                    he = he.max(rel(hq[(i, j)], hp[(i, j)] / (lambda * lambda), hs));
                }
            }
            if let Some(alpha) = op.scaling_exponent() {
                let fp = evaluate_operator(op, &p, &HorizontalJet::new(phi(&p), gp, hp))?;
                let fq = evaluate_operator(op, &q, &HorizontalJet::new(psi(&q), gq, hq))?;
                oe = oe.max(rel(
                    fq,
                    fp * lambda.powf(-alpha),
                    fp.abs() * lambda.powf(-alpha),
                ));
            }
        }
        out.push(ScalingReport {
            lambda,
            points: points.len(),
            gradient_max_rel_error: ge,
            hessian_max_rel_error: he,
            operator_max_rel_error: op.scaling_exponent().map(|_| oe),
        });
    }
    Ok(out)
}

/// Algebra given by preset name or in full.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlgebraChoice {
    Preset(String),
    Spec(AlgebraSpec),
}

impl AlgebraChoice {
    pub fn spec(&self) -> Result<AlgebraSpec> {
        match self {
            AlgebraChoice::Preset(name) => AlgebraSpec::preset(name),
            AlgebraChoice::Spec(s) => Ok(s.clone()),
        }
    }

    pub fn build(&self) -> Result<Algebra> {
        Algebra::validated(self.spec()?)
    }
}

fn default_margin() -> f64 {
    2.0
}

/// Node counts and box; the box defaults to the outer set's bounding box
/// plus `margin` cells per side. A single count applies to every axis; no
/// count means 41 per axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub counts: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_widths: Option<Vec<f64>>,
    #[serde(default = "default_margin")]
    pub margin: f64,
}

impl GridConfig {
    pub fn cube(n: usize, dim: usize) -> Self {
        GridConfig {
            counts: vec![n; dim],
            half_widths: None,
            margin: default_margin(),
        }
    }

    pub fn build(&self, condenser: &Condenser) -> Result<GridSpec> {
        let dim = condenser.alg.dim();
        let counts = match self.counts.len() {
            0 => vec![DEFAULT_NODES; dim],
            1 => vec![self.counts[0]; dim],
            _ => self.counts.clone(),
        };
        match &self.half_widths {
            Some(w) => GridSpec::centered(w, &counts),
            None => GridSpec::around(condenser, &counts, self.margin),
        }
    }
}

pub const DEFAULT_NODES: usize = 41;

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            counts: Vec::new(),
            half_widths: None,
            margin: default_margin(),
        }
    }
}

fn default_levels() -> Vec<f64> {
    (1..=9).map(|k| k as f64 / 10.0).collect()
}
fn default_lambda_min() -> f64 {
    geometry::DEFAULT_LAMBDA_MIN
}
fn default_per_decade() -> usize {
    geometry::DEFAULT_PER_DECADE
}
fn default_envelope_tolerance() -> f64 {
    5e-2
}
fn default_one() -> usize {
    1
}
fn default_hypothesis_samples() -> usize {
    4000
}
fn default_condenser() -> CondenserSpec {
    CondenserSpec::gauge_balls(0.4, 1.0)
}
fn default_solve() -> SolveConfig {
    SolveConfig::new(OperatorSpec::hlap())
}
fn default_props_samples() -> usize {
    100
}
fn default_boundary_directions() -> usize {
    400
}
fn default_star_tolerance() -> f64 {
    1e-9
}
fn default_search_per_axis() -> usize {
    8
}

/// Options for checking the condenser sets themselves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StarCheckOptions {
    #[serde(default = "default_hypothesis_samples")]
    pub samples: usize,
    #[serde(default = "default_boundary_directions")]
    pub boundary_directions: usize,
    #[serde(default = "default_star_tolerance")]
    pub tolerance: f64,
    /// Also scan for centers about which the outer gauge ball is not starshaped.
    #[serde(default)]
    pub non_star_search: bool,
    #[serde(default = "default_search_per_axis")]
    pub search_per_axis: usize,
}

impl Default for StarCheckOptions {
    fn default() -> Self {
        StarCheckOptions {
            samples: default_hypothesis_samples(),
            boundary_directions: default_boundary_directions(),
            tolerance: default_star_tolerance(),
            non_star_search: false,
            search_per_axis: default_search_per_axis(),
        }
    }
}

/// One schema for every experiment and CLI subcommand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algebra: AlgebraChoice,
    #[serde(default = "default_condenser")]
    pub condenser: CondenserSpec,
    #[serde(default = "default_solve")]
    pub solve: SolveConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default = "default_levels")]
    pub levels: Vec<f64>,
    #[serde(default = "default_lambda_min")]
    pub lambda_min: f64,
    #[serde(default = "default_per_decade")]
    pub per_decade: usize,
    /// Upper dilation `Λ` for the envelope; estimated when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_upper: Option<f64>,
    /// Fixed star tolerance; the grid-coupled one is used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub star_tolerance: Option<f64>,
    #[serde(default = "default_envelope_tolerance")]
    pub envelope_tolerance: f64,
    /// Every `sample_stride`-th node per axis is a star-test sample.
    #[serde(default = "default_one")]
    pub sample_stride: usize,
    #[serde(default = "default_hypothesis_samples")]
    pub hypothesis_samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; 0 picks automatically.
    #[serde(default)]
    pub threads: usize,
    #[serde(default)]
    pub star_check: StarCheckOptions,
    /// Random test functions for the 𝒵 identities.
    #[serde(default = "default_props_samples")]
    pub props_samples: usize,
    /// Root directory for run outputs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl ExperimentConfig {
    /// Gauge-ball condenser `(0.4, 1.0)` on `heisenberg-1` with an `n³` grid.
    pub fn heisenberg_balls(op: OperatorSpec, n: usize) -> Self {
        ExperimentConfig {
            algebra: AlgebraChoice::Preset("heisenberg-1".into()),
            condenser: CondenserSpec::gauge_balls(0.4, 1.0),
            solve: SolveConfig::new(op),
            grid: GridConfig::cube(n, 3),
            levels: default_levels(),
            lambda_min: default_lambda_min(),
            per_decade: default_per_decade(),
            lambda_upper: None,
            star_tolerance: None,
            envelope_tolerance: default_envelope_tolerance(),
            sample_stride: 1,
            hypothesis_samples: default_hypothesis_samples(),
            seed: 0,
            threads: 0,
            star_check: StarCheckOptions::default(),
            props_samples: default_props_samples(),
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() || self.levels.iter().any(|&l| !(l > 0.0 && l < 1.0)) {
            return Err(Error::Config(
                "levels must be nonempty and lie in (0, 1)".into(),
            ));
        }
        if !(self.lambda_min > 0.0 && self.lambda_min < 1.0) || self.per_decade == 0 {
            return Err(Error::Config(
                "lambda_min must lie in (0, 1) and per_decade be positive".into(),
            ));
        }
        if let Some(l) = self.lambda_upper {
            if !(l >= 1.0) {
                return Err(Error::Config(format!("lambda_upper must be ≥ 1, got {l}")));
            }
        }
        if !(self.envelope_tolerance > 0.0) || self.sample_stride == 0 {
            return Err(Error::Config(
                "envelope_tolerance and sample_stride must be positive".into(),
            ));
        }
        self.solve.validate()
    }

    pub fn build_condenser(&self) -> Result<Arc<Condenser>> {
        let alg = Arc::new(self.algebra.build()?);
        Ok(Arc::new(self.condenser.build(alg)?))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: f64,
    pub star: StarReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub outer: StarReport,
    pub inner: StarReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub algebra: AlgebraSpec,
    pub operator: OperatorSpec,
    pub grid: GridSpec,
    pub solve: SolveStats,
    pub hypothesis: HypothesisReport,
    pub lambda_upper: f64,
    pub envelope_count: usize,
    pub levels: Vec<LevelReport>,
    pub envelope_gap: f64,
    pub envelope_tolerance: f64,
    /// Largest `f*` at sampled points of `∂Ω₀`.
    pub envelope_outer_boundary_max: f64,
    /// Largest `|f* − 1|` on nodes of `Ω̄₁`.
    pub envelope_inner_deviation: f64,
    pub residual: f64,
    pub passed: bool,
}

pub struct TheoremRun {
    pub report: TheoremReport,
    pub solution: Solution,
    pub envelope: DiscreteField,
}

/// Star-test tolerance for `{f ≥ ℓ}`: twice the largest one-cell change of `f`
/// at nodes where the level set crosses an adjacent edge.
pub fn level_tolerance(field: &DiscreteField, level: f64) -> f64 {
    let grid = &field.grid;
    let n = grid.dim();
    let strides = grid.strides();
    let mut mi = vec![0usize; n];
    let mut jump: f64 = 0.0;
    for (i, k) in field.kinds.iter().enumerate() {
        if *k != NodeKind::Interior {
            continue;
        }
        grid.multi_index(i, &mut mi);
        let v = field.values[i];
        let mut crosses = false;
        let mut local: f64 = 0.0;
        for d in 0..n {
            if mi[d] == 0 || mi[d] + 1 == grid.counts[d] {
                continue;
            }
            let (a, b) = (field.values[i + strides[d]], field.values[i - strides[d]]);
            crosses |= (a >= level) != (v >= level) || (b >= level) != (v >= level);
            local = local.max(0.5 * (a - b).abs());
        }
        if crosses {
            jump = jump.max(local);
        }
    }
    2.0 * jump
}

/// Grid nodes of `Ω̄₀` (interior and inner Dirichlet), subsampled by `stride`.
pub fn node_samples(field: &DiscreteField, stride: usize) -> Vec<Vec<f64>> {
    let n = field.grid.dim();
    let mut mi = vec![0usize; n];
    (0..field.grid.len())
        .filter(|&i| matches!(field.kinds[i], NodeKind::Interior | NodeKind::Dirichlet1))
        .filter(|&i| {
            field.grid.multi_index(i, &mut mi);
            mi.iter().all(|k| k % stride == 0)
        })
        .map(|i| field.grid.node_point(i))
        .collect()
}

/// Both condenser sets must be starshaped about the center.
pub fn check_hypothesis(condenser: &Condenser, cfg: &ExperimentConfig) -> Result<HypothesisReport> {
    let alg = &condenser.alg;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let half = condenser.spec.outer.half_widths(alg);
    let p0 = condenser.center.coords();
    let lambdas = lambda_grid(cfg.lambda_min, cfg.per_decade);
    let outer_pts = sample_box(&mut rng, &half, cfg.hypothesis_samples, |p| {
        condenser.outer.eval(p) < 0.0
    });
    let inner_half = condenser.spec.inner.half_widths(alg);
    let inner_pts = sample_box(&mut rng, &inner_half, cfg.hypothesis_samples, |p| {
        condenser.inner.eval(p) < 0.0
    });
    let outer = is_starshaped(
        alg.as_ref(),
        &condenser.outer,
        p0,
        &outer_pts,
        &lambdas,
        1e-12,
    )?;
    if !outer.passed {
        return Err(Error::NotStarshaped {
            set: "outer".into(),
            report: Box::new(outer),
        });
    }
    let inner = is_starshaped(
        alg.as_ref(),
        &condenser.inner,
        p0,
        &inner_pts,
        &lambdas,
        1e-12,
    )?;
    if !inner.passed {
        return Err(Error::NotStarshaped {
            set: "inner".into(),
            report: Box::new(inner),
        });
    }
    Ok(HypothesisReport { outer, inner })
}

/// Dilation grid size for `[1, Λ]` at `per_decade` points per decade.
pub fn envelope_count(upper: f64, per_decade: usize) -> usize {
    ((upper.log10() * per_decade as f64).ceil() as usize + 1).max(2)
}

/// Hypothesis gate, solve, per-level star tests, envelope and its checks.
pub fn run_theorem_experiment(cfg: &ExperimentConfig) -> Result<TheoremRun> {
    cfg.validate()?;
    let condenser = cfg.build_condenser()?;
    let hypothesis = check_hypothesis(&condenser, cfg)?;
    let grid = cfg.grid.build(&condenser)?;
    let solution = solver::solve(&grid, condenser.clone(), &cfg.solve)?;
    let field = &solution.field;
    let alg = condenser.alg.clone();
    let p0 = condenser.center.coords().to_vec();

    let lambdas = lambda_grid(cfg.lambda_min, cfg.per_decade);
    let samples = node_samples(field, cfg.sample_stride);
    let mut levels = Vec::new();
    for &level in &cfg.levels {
        let tol = cfg
            .star_tolerance
            .unwrap_or_else(|| level_tolerance(field, level));
        let oracle = Superlevel { field, level };
        let star = is_starshaped(alg.as_ref(), &oracle, &p0, &samples, &lambdas, tol)?;
        levels.push(LevelReport { level, star });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let upper = match cfg.lambda_upper {
        Some(l) => l,
        None => geometry::estimate_lambda_for(&condenser, cfg.hypothesis_samples, &mut rng)?,
    };
    let count = envelope_count(upper, cfg.per_decade);
    let envelope = star_envelope(field, &p0, upper, count)?;

    let envelope_gap = field
        .values
        .iter()
        .zip(&envelope.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let inner_dev = field
        .kinds
        .iter()
        .zip(&envelope.values)
        .filter(|(k, _)| **k == NodeKind::Dirichlet1)
        .map(|(_, v)| (v - 1.0).abs())
        .fold(0.0, f64::max);
    let half = condenser.spec.outer.half_widths(&alg);
    let dirs = sample_box(&mut rng, &half, 200, |p| p.iter().any(|x| *x != 0.0));
    let boundary = ray_boundary_points(&alg, &condenser.outer, &p0, &dirs, 1.0, 200);
    let envelope_grid = geometry::envelope_grid(upper, count);
    let outer_max = boundary
        .iter()
        .map(|p| {
            // f* at a boundary point, dilates outside Ω̄₀ skipped as in the envelope.
            let mut best = field.interpolate(p);
            for &l in &envelope_grid[1..] {
                let q = alg.centered_dilate_raw(&p0, l, p);
                if condenser.outer.eval(&q) <= 0.0 {
                    best = best.max(field.interpolate(&q));
                }
            }
            best
        })
        .fold(0.0, f64::max);

    let residual = solution.stats.residual;
    let passed = levels.iter().all(|l| l.star.passed)
        && envelope_gap <= cfg.envelope_tolerance
        && outer_max <= cfg.envelope_tolerance
        && inner_dev <= 1e-12
        && !solution.stats.range_violation;
    let report = TheoremReport {
        algebra: alg.spec().clone(),
        operator: cfg.solve.operator,
        grid,
        solve: solution.stats.clone(),
        hypothesis,
        lambda_upper: upper,
        envelope_count: count,
        levels,
        envelope_gap,
        envelope_tolerance: cfg.envelope_tolerance,
        envelope_outer_boundary_max: outer_max,
        envelope_inner_deviation: inner_dev,
        residual,
        passed,
    };
    Ok(TheoremRun {
        report,
        solution,
        envelope,
    })
}
