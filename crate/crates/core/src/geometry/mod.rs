//! Starshapedness predicates, the starshaped envelope and dilation searches.

pub mod region;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{Algebra, Coords};
use crate::calculus::z_apply;
use crate::error::{Error, Result};
use crate::solver::{DiscreteField, NodeKind};

pub use region::{Condenser, CondenserSpec, DefiningFunction, FnRegion, Region, RegionSpec};

/// Signed membership margin: positive inside, negative outside.
pub trait MembershipOracle: Sync {
    fn margin(&self, p: &[f64]) -> f64;

    fn classify(&self, p: &[f64], band: f64) -> Membership {
        let m = self.margin(p);
        if m > band {
            Membership::Inside
        } else if m < -band {
            Membership::Outside
        } else {
            Membership::Band
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Membership {
    Inside,
    Band,
    Outside,
}

impl<T: DefiningFunction + ?Sized> MembershipOracle for T {
    fn margin(&self, p: &[f64]) -> f64 {
        -self.eval(p)
    }
}

/// `{f ≥ level}` for a discrete field, by multilinear interpolation.
pub struct Superlevel<'a> {
    pub field: &'a DiscreteField,
    pub level: f64,
}

impl MembershipOracle for Superlevel<'_> {
    fn margin(&self, p: &[f64]) -> f64 {
        self.field.interpolate(p) - self.level
    }
}

/// Geometric grid from `min` up to 1 inclusive with `per_decade` points per decade.
pub fn lambda_grid(min: f64, per_decade: usize) -> Vec<f64> {
    assert!(min > 0.0 && min < 1.0 && per_decade > 0);
    let steps = ((-min.log10()) * per_decade as f64).ceil() as usize;
    (0..=steps)
        .map(|k| min.powf(k as f64 / steps as f64))
        .collect()
}

/// Geometric grid of `count` points on `[1, upper]`, starting at 1.
pub fn envelope_grid(upper: f64, count: usize) -> Vec<f64> {
    if count <= 1 || upper == 1.0 {
        return vec![1.0];
    }
    (0..count)
        .map(|k| upper.powf(k as f64 / (count - 1) as f64))
        .collect()
}

pub const DEFAULT_LAMBDA_MIN: f64 = 0.05;
pub const DEFAULT_PER_DECADE: usize = 64;
pub const REFINEMENT: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarViolation {
    pub point: Vec<f64>,
    pub lambda: f64,
    /// Depth outside the set: negated oracle margin at the dilated point.
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarReport {
    pub tested: usize,
    pub violations: Vec<StarViolation>,
    pub max_violation_margin: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl StarReport {
    fn from_worst(
        tested: usize,
        mut violations: Vec<StarViolation>,
        worst: f64,
        tolerance: f64,
    ) -> Self {
        violations.sort_by(|a, b| b.margin.total_cmp(&a.margin));
        StarReport {
            tested,
            violations,
            max_violation_margin: worst,
            tolerance,
            passed: worst <= tolerance,
        }
    }
}

/// Checks `δ^{p₀}_λ(p)` stays in the set for every inside sample `p` and
/// every `λ` in `lambdas`. The worst `λ` of each sample is refined ×8 on
/// the neighbouring grid interval before reporting.
pub fn is_starshaped<O: MembershipOracle + ?Sized>(
    alg: &Algebra,
    oracle: &O,
    p0: &[f64],
    samples: &[Vec<f64>],
    lambdas: &[f64],
    tol: f64,
) -> Result<StarReport> {
    if oracle.margin(p0) <= 0.0 {
        return Err(Error::Precondition(
            "star center is not inside the set".into(),
        ));
    }
    if lambdas.iter().any(|&l| !(l > 0.0 && l <= 1.0)) {
        return Err(Error::Config(
            "star-test dilation factors must lie in (0, 1]".into(),
        ));
    }
    let mut sorted = lambdas.to_vec();
    sorted.sort_by(f64::total_cmp);
    let per_sample: Vec<Option<(f64, StarViolation)>> = samples
        .par_iter()
        .map(|p| {
            if oracle.margin(p) <= 0.0 {
                return None;
            }
            let depth = |l: f64| -oracle.margin(&alg.centered_dilate_raw(p0, l, p));
            let mut worst = (f64::NEG_INFINITY, 1.0, 0usize);
            for (k, &l) in sorted.iter().enumerate() {
                let d = depth(l);
                if d > worst.0 {
                    worst = (d, l, k);
                }
            }
            if worst.0 > -tol {
                let k = worst.2;
                let lo = if k > 0 { sorted[k - 1] } else { sorted[k] };
                let hi = if k + 1 < sorted.len() {
                    sorted[k + 1]
                } else {
                    sorted[k]
                };
                for j in 1..2 * REFINEMENT {
                    let l = lo * (hi / lo).powf(j as f64 / (2 * REFINEMENT) as f64);
                    let d = depth(l);
                    if d > worst.0 {
                        worst = (d, l, k);
                    }
                }
            }
            Some((
                worst.0,
                StarViolation {
                    point: p.clone(),
                    lambda: worst.1,
                    margin: worst.0,
                },
            ))
        })
        .collect();
    let tested = per_sample.iter().flatten().count();
    let worst = per_sample
        .iter()
        .flatten()
        .map(|(d, _)| *d)
        .fold(0.0f64, f64::max);
    let violations = per_sample
        .into_iter()
        .flatten()
        .filter(|(d, _)| *d > tol)
        .map(|(_, v)| v)
        .collect();
    Ok(StarReport::from_worst(tested, violations, worst, tol))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryStarReport {
    pub tested: usize,
    /// Smallest `𝒵ρ` (recentered at `p₀`) over samples with nonvanishing gradient.
    pub min_z: f64,
    /// Samples where `𝒵ρ < -tol`.
    pub violations: Vec<Vec<f64>>,
    /// Samples with vanishing `∇ρ`; excluded from `min_z`.
    pub flagged: Vec<Vec<f64>>,
    pub tolerance: f64,
    pub passed: bool,
    pub strict: bool,
}

/// `𝒵ρ ≥ 0` on boundary samples, with `𝒵` recentered at `p₀`.
pub fn boundary_star_test<D: DefiningFunction + ?Sized>(
    alg: &Algebra,
    rho: &D,
    p0: &[f64],
    samples: &[Vec<f64>],
    tol: f64,
) -> BoundaryStarReport {
    let inv: Coords = p0.iter().map(|x| -x).collect();
    let results: Vec<(f64, bool)> = samples
        .par_iter()
        .map(|p| {
            let grad = rho.gradient(p);
            if grad.iter().map(|g| g * g).sum::<f64>().sqrt() < 1e-8 {
                return (f64::NAN, true);
            }
            let q = crate::algebra::GroupPoint(alg.bch_raw(&inv, p));
            let recentered = |x: &crate::algebra::GroupPoint| rho.eval(&alg.bch_raw(p0, x));
            (z_apply(alg, recentered, &q, 1e-5), false)
        })
        .collect();
    let mut min_z = f64::INFINITY;
    let mut violations = Vec::new();
    let mut flagged = Vec::new();
    for (p, &(z, flag)) in samples.iter().zip(&results) {
        if flag {
            flagged.push(p.clone());
            continue;
        }
        min_z = min_z.min(z);
        if z < -tol {
            violations.push(p.clone());
        }
    }
    BoundaryStarReport {
        tested: samples.len(),
        min_z,
        violations,
        flagged,
        tolerance: tol,
        passed: min_z >= -tol,
        strict: min_z > tol,
    }
}

/// Boundary points along dilation rays from `p₀` through `directions`:
/// every sign change of `ρ(δ^{p₀}_s(q))` for `s ∈ (0, s_max]`.
pub fn ray_boundary_points<D: DefiningFunction + ?Sized>(
    alg: &Algebra,
    rho: &D,
    p0: &[f64],
    directions: &[Vec<f64>],
    s_max: f64,
    steps: usize,
) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for q in directions {
        let at = |s: f64| alg.centered_dilate_raw(p0, s, &alg.bch_raw(p0, q));
        let mut prev_s = s_max / steps as f64;
        let mut prev = rho.eval(&at(prev_s));
        for k in 2..=steps {
            let s = s_max * k as f64 / steps as f64;
            let v = rho.eval(&at(s));
            if (v < 0.0) != (prev < 0.0) {
                let (mut a, mut b, fa_neg) = (prev_s, s, prev < 0.0);
                for _ in 0..60 {
                    let mid = 0.5 * (a + b);
                    if (rho.eval(&at(mid)) < 0.0) == fa_neg {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                out.push(at(0.5 * (a + b)).to_vec());
            }
            prev = v;
            prev_s = s;
        }
    }
    out
}

/// Points uniform in the box `[-w, w]` that satisfy `keep`.
pub fn sample_box<R: Rng, F: Fn(&[f64]) -> bool>(
    rng: &mut R,
    half_widths: &[f64],
    count: usize,
    keep: F,
) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    let mut tries = 0usize;
    while out.len() < count && tries < count * 1000 {
        tries += 1;
        let p: Vec<f64> = half_widths
            .iter()
            .map(|&w| rng.random_range(-w..=w))
            .collect();
        if keep(&p) {
            out.push(p);
        }
    }
    out
}

fn check_envelope_args(field: &DiscreteField, upper: f64, count: usize) -> Result<()> {
    if !(upper >= 1.0 && upper.is_finite()) {
        return Err(Error::Config(format!(
            "envelope upper dilation must be ≥ 1, got {upper}"
        )));
    }
    if count == 0 {
        return Err(Error::Config(
            "envelope needs at least one dilation value".into(),
        ));
    }
    if field.condenser.alg.dim() != field.grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: field.condenser.alg.dim(),
            got: field.grid.dim(),
        });
    }
    Ok(())
}

/// `(max, argmax)` of `λ ↦ f(δ^{p₀}_λ p)` over the grid, skipping dilates
/// outside `Ω̄₀`; ties go to the smallest `λ`.
fn envelope_at(field: &DiscreteField, p0: &[f64], lambdas: &[f64], p: &[f64]) -> (f64, f64) {
    let c = &field.condenser;
    let mut best = (field.interpolate(p), 1.0);
    for &l in lambdas.iter().skip_while(|&&l| l == 1.0) {
        let q = c.alg.centered_dilate_raw(p0, l, p);
        if c.outer.eval(&q) > 0.0 {
            continue;
        }
        let v = field.interpolate(&q);
        if v > best.0 {
            best = (v, l);
        }
    }
    best
}

/// `f*(p) = max_{λ ∈ [1, Λ]} f(δ^{p₀}_λ p)` at every node of `Ω̄₀`; other
/// nodes keep their values.
pub fn star_envelope(
    field: &DiscreteField,
    p0: &[f64],
    upper: f64,
    count: usize,
) -> Result<DiscreteField> {
    check_envelope_args(field, upper, count)?;
    let lambdas = envelope_grid(upper, count);
    let grid = &field.grid;
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| match field.kinds[i] {
            NodeKind::Interior => envelope_at(field, p0, &lambdas, &grid.node_point(i)).0,
            _ => field.values[i],
        })
        .collect();
    Ok(field.with_values(values))
}

/// Smallest grid `λ ≥ 1` attaining the envelope maximum at `p`.
pub fn lambda_bar(
    field: &DiscreteField,
    p0: &[f64],
    upper: f64,
    count: usize,
    p: &[f64],
) -> Result<f64> {
    check_envelope_args(field, upper, count)?;
    if field.condenser.inner.eval(p) <= 0.0 {
        return Ok(1.0);
    }
    Ok(envelope_at(field, p0, &envelope_grid(upper, count), p).1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelIdentity {
    pub level: f64,
    pub envelope_nodes: usize,
    pub hull_nodes: usize,
    pub mismatches: usize,
    /// Mismatched nodes more than one cell away from both set boundaries.
    pub unexplained: usize,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuperlevelIdentityReport {
    pub levels: Vec<LevelIdentity>,
    pub passed: bool,
}

/// Compares `{f* ≥ ℓ}` with the star hull of `{f ≥ ℓ}` on the nodes of `Ω̄₀`.
/// The hull is built forward: every node of `{f ≥ ℓ}` is pushed along
/// `λ ∈ [1/Λ, 1]` and the corners of each visited cell are marked.
pub fn superlevel_identity_check(
    field: &DiscreteField,
    envelope: &DiscreteField,
    p0: &[f64],
    upper: f64,
    levels: &[f64],
) -> Result<SuperlevelIdentityReport> {
    check_envelope_args(field, upper, 2)?;
    let grid = &field.grid;
    let n = grid.dim();
    let h = grid.spacing();
    let strides = grid.strides();
    let alg = &field.condenser.alg;
    let in_domain =
        |i: usize| field.kinds[i] == NodeKind::Interior || field.kinds[i] == NodeKind::Dirichlet1;
    let per_decade = 512.0;
    let steps = (upper.log10() * per_decade).ceil().max(1.0) as usize;
    let pushes: Vec<f64> = (0..=steps)
        .map(|k| upper.powf(-(k as f64) / steps as f64))
        .collect();
    let neighbours = crate::solver::chebyshev_offsets(n, &strides);
    let mut out = Vec::new();
    for &level in levels {
        let mut hull = vec![false; grid.len()];
        for i in (0..grid.len()).filter(|&i| in_domain(i) && field.values[i] >= level) {
            let q = grid.node_point(i);
            for &l in &pushes {
                let d = alg.centered_dilate_raw(p0, l, &q);
                let mut base = 0usize;
                let mut ok = true;
                for a in 0..n {
                    let s = (d[a] - grid.lo[a]) / h[a];
                    if s < 0.0 || s > (grid.counts[a] - 1) as f64 {
                        ok = false;
                        break;
                    }
                    base += (s.floor() as usize).min(grid.counts[a] - 2) * strides[a];
                }
                if !ok {
                    continue;
                }
                for mask in 0..(1usize << n) {
                    let idx = base
                        + (0..n)
                            .filter(|a| mask >> a & 1 == 1)
                            .map(|a| strides[a])
                            .sum::<usize>();
                    hull[idx] = true;
                }
            }
        }
        let env: Vec<bool> = (0..grid.len())
            .map(|i| envelope.values[i] >= level)
            .collect();
        let boundary_of = |set: &[bool], i: usize| {
            neighbours.iter().any(|&o| {
                let j = i as isize + o;
                j >= 0 && (j as usize) < set.len() && set[j as usize] != set[i]
            })
        };
        let (mut e_count, mut h_count, mut mism, mut unexplained) = (0, 0, 0, 0);
        for i in (0..grid.len()).filter(|&i| in_domain(i)) {
            e_count += env[i] as usize;
            h_count += hull[i] as usize;
            if env[i] != hull[i] {
                mism += 1;
                if !boundary_of(&env, i) && !boundary_of(&hull, i) {
                    unexplained += 1;
                }
            }
        }
        out.push(LevelIdentity {
            level,
            envelope_nodes: e_count,
            hull_nodes: h_count,
            mismatches: mism,
            unexplained,
            passed: unexplained == 0,
        });
    }
    let passed = out.iter().all(|l| l.passed);
    Ok(SuperlevelIdentityReport {
        levels: out,
        passed,
    })
}

pub const LAMBDA_CAP: f64 = 1e4;

/// Smallest `Λ` with every sample of `Ω₀` inside `δ^{p₀}_Λ(Ω₁)`, times 1.1.
pub fn estimate_lambda<D0, D1>(
    alg: &Algebra,
    outer: &D0,
    inner: &D1,
    p0: &[f64],
    samples: &[Vec<f64>],
) -> Result<f64>
where
    D0: DefiningFunction + ?Sized,
    D1: DefiningFunction + ?Sized,
{
    if inner.eval(p0) >= 0.0 {
        return Err(Error::Precondition(
            "star center is not inside the inner set".into(),
        ));
    }
    let needed = |q: &[f64]| -> Result<f64> {
        let inside = |big: f64| inner.eval(&alg.centered_dilate_raw(p0, 1.0 / big, q)) < 0.0;
        if inside(1.0) {
            return Ok(1.0);
        }
        let mut lo = 1.0;
        let mut hi = 1.01;
        while !inside(hi) {
            lo = hi;
            hi *= 1.01;
            if hi > LAMBDA_CAP {
                return Err(Error::UnboundedCondenser { cap: LAMBDA_CAP });
            }
        }
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if inside(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    };
    let mut big = 1.0f64;
    for q in samples.iter().filter(|q| outer.eval(q) <= 0.0) {
        big = big.max(needed(q)?);
    }
    Ok(1.1 * big)
}

/// `estimate_lambda` with samples drawn uniformly from the outer set's box
/// plus boundary points along dilation rays.
pub fn estimate_lambda_for<R: Rng>(
    condenser: &Condenser,
    count: usize,
    rng: &mut R,
) -> Result<f64> {
    let alg = &condenser.alg;
    let half = condenser.spec.outer.half_widths(alg);
    let p0 = condenser.center.coords();
    let mut samples = sample_box(rng, &half, count, |p| condenser.outer.eval(p) <= 0.0);
    let dirs = sample_box(rng, &half, count / 4 + 1, |_| true);
    let s_max = 4.0 * half.iter().fold(1.0f64, |a, &b| a.max(b))
        / half.iter().fold(f64::INFINITY, |a, &b| a.min(b)).max(1e-3);
    samples.extend(ray_boundary_points(
        alg,
        &condenser.outer,
        p0,
        &dirs,
        s_max.min(50.0),
        400,
    ));
    estimate_lambda(alg, &condenser.outer, &condenser.inner, p0, &samples)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonStarCenterHit {
    pub center: Vec<f64>,
    pub point: Vec<f64>,
    pub lambda: f64,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonStarCenterReport {
    pub centers_scanned: usize,
    pub hits: Vec<NonStarCenterHit>,
    pub found: bool,
}

/// Scans two families of centers inside the gauge ball `B(e, radius)`:
/// `s e_i` along every coordinate axis, and centers at gauge distance
/// `ε · radius` from the sphere on rays mixing the first coordinate with the
/// last (top-layer) one. Each center is tested for starshapedness of the ball.
pub fn non_star_center_search<R: Rng>(
    alg: &Algebra,
    radius: f64,
    per_axis: usize,
    samples: usize,
    rng: &mut R,
) -> Result<NonStarCenterReport> {
    let ball = FnRegion(|p: &[f64]| alg.gauge_of(p) - radius);
    let n = alg.dim();
    let half: Vec<f64> = (0..n)
        .map(|s| {
            let layer = alg.layer_of(s);
            let w = alg.gauge().weights()[layer - 1];
            radius.powi(layer as i32) * w.powf(-(layer as f64) / alg.gauge().exponent() as f64)
        })
        .collect();
    // Points near the sphere are where violations show first.
    let pts = sample_box(rng, &half, samples, |p| {
        let g = alg.gauge_of(p);
        g < radius && g > 0.8 * radius
    });
    let lambdas = lambda_grid(DEFAULT_LAMBDA_MIN, DEFAULT_PER_DECADE);
    let mut hits = Vec::new();
    let mut scanned = 0;
    let mut centers = Vec::new();
    for axis in 0..n {
        for k in 1..=per_axis {
            let s = half[axis] * k as f64 / (per_axis + 1) as f64;
            for sign in [1.0, -1.0] {
                let mut c = vec![0.0; n];
                c[axis] = sign * s;
                centers.push(c);
            }
        }
    }
    if n > 1 {
        for k in 1..=per_axis {
            let angle = std::f64::consts::FRAC_PI_2 * k as f64 / (per_axis + 1) as f64;
            let mut dir = vec![0.0; n];
            dir[0] = angle.cos();
            dir[n - 1] = angle.sin();
            let g = alg.gauge_of(&dir);
            for eps in [0.02, 0.05, 0.1] {
                for sign in [1.0, -1.0] {
                    let mut d = dir.clone();
                    d[n - 1] *= sign;
                    centers.push(alg.dilate_raw(radius * (1.0 - eps) / g, &d).to_vec());
                }
            }
        }
    }
    for c in centers {
        scanned += 1;
        let rep = is_starshaped(alg, &ball, &c, &pts, &lambdas, 1e-12)?;
        if let Some(v) = rep.violations.first() {
            hits.push(NonStarCenterHit {
                center: c,
                point: v.point.clone(),
                lambda: v.lambda,
                margin: v.margin,
            });
        }
    }
    let found = !hits.is_empty();
    Ok(NonStarCenterReport {
        centers_scanned: scanned,
        hits,
        found,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::AlgebraSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn heis() -> Arc<Algebra> {
        Arc::new(Algebra::new(AlgebraSpec::heisenberg(1)).unwrap())
    }

    #[test]
    fn lambda_grids() {
        let g = lambda_grid(0.05, 64);
        assert_eq!(g[0], 1.0);
        assert!((g.last().unwrap() - 0.05).abs() < 1e-12);
        assert_eq!(g.len(), 85);
        let e = envelope_grid(2.0, 5);
        assert_eq!(e[0], 1.0);
        assert!((e[4] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn gauge_ball_is_starshaped_about_identity() {
        let alg = heis();
        let ball = RegionSpec::gauge_ball(1.0).build(alg.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pts = sample_box(&mut rng, &[1.0, 1.0, 0.25], 10_000, |_| true);
        let rep =
            is_starshaped(&alg, &ball, &[0.0; 3], &pts, &lambda_grid(0.05, 64), 1e-12).unwrap();
        assert!(rep.passed && rep.violations.is_empty());
        assert!(rep.tested > 1000);
    }

    #[test]
    fn center_outside_is_rejected() {
        let alg = heis();
        let ball = RegionSpec::gauge_ball(1.0).build(alg.clone()).unwrap();
        assert!(matches!(
            is_starshaped(&alg, &ball, &[2.0, 0.0, 0.0], &[], &[1.0], 0.0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn euclidean_ball_any_center() {
        let alg = Algebra::new(AlgebraSpec::abelian(3)).unwrap();
        let ball = FnRegion(|p: &[f64]| p.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts = sample_box(&mut rng, &[1.0; 3], 2000, |_| true);
        let rep = is_starshaped(
            &alg,
            &ball,
            &[0.5, -0.3, 0.2],
            &pts,
            &lambda_grid(0.05, 64),
            1e-12,
        )
        .unwrap();
        assert!(rep.passed);
    }

    #[test]
    fn boundary_test_on_gauge_ball() {
        let alg = heis();
        let ball = RegionSpec::gauge_ball(0.7).build(alg.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let dirs = sample_box(&mut rng, &[1.0, 1.0, 0.25], 200, |p| alg.gauge_of(p) > 0.1);
        let pts = ray_boundary_points(&alg, &ball, &[0.0; 3], &dirs, 20.0, 400);
        assert!(pts.len() >= 200);
        let rep = boundary_star_test(&alg, &ball, &[0.0; 3], &pts, 1e-6);
        assert!(rep.strict, "{}", rep.min_z);
        assert!((rep.min_z - 0.7).abs() < 1e-6);
    }

    #[test]
    fn half_space_is_non_strict() {
        let alg = Algebra::new(AlgebraSpec::abelian(3)).unwrap();
        let rho = FnRegion(|p: &[f64]| p[0]);
        let pts: Vec<Vec<f64>> = (0..10).map(|k| vec![0.0, k as f64 * 0.1, -0.3]).collect();
        let rep = boundary_star_test(&alg, &rho, &[0.0; 3], &pts, 1e-8);
        assert!(rep.passed && !rep.strict);
        assert!(rep.min_z.abs() < 1e-8);
    }

    #[test]
    fn lambda_for_balls() {
        let alg = heis();
        let c = CondenserSpec::gauge_balls(0.4, 1.0)
            .build(alg.clone())
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let big = estimate_lambda_for(&c, 2000, &mut rng).unwrap();
        assert!((big - 2.75).abs() < 0.01, "{big}");
        assert!(matches!(
            estimate_lambda(&alg, &c.outer, &c.inner, &[0.9, 0.0, 0.0], &[]),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn non_star_centers_exist_in_heisenberg_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rep = non_star_center_search(&heis(), 1.0, 4, 2000, &mut rng).unwrap();
        assert!(rep.found);
        let h = &rep.hits[0];
        assert!(heis().gauge_of(&h.center) < 1.0 && h.margin > 1e-3);
        let euclid = Algebra::new(AlgebraSpec::abelian(3)).unwrap();
        let rep = non_star_center_search(&euclid, 1.0, 4, 2000, &mut rng).unwrap();
        assert!(!rep.found);
    }
}
