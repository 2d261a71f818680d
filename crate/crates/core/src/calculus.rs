//! Left-invariant frames, horizontal derivatives, the dilation generator 𝒵
//! and the model operators.
//!
//! Derivatives along a left-invariant field `X_j` are differences along the
//! group flow `s ↦ p ∘ exp(s e_j)`, so they are exactly left-invariant.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{Algebra, Coords, GroupPoint};
use crate::error::{Error, Result};
use crate::poly::Poly;

/// Coordinate components of the left-invariant frame at a point: column `b`
/// is `X_b(p) = dL_p(e_b)`. The first `m` columns are the horizontal frame.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameCoefficients(pub DMatrix<f64>);

impl FrameCoefficients {
    pub fn column(&self, b: usize) -> DVector<f64> {
        self.0.column(b).into_owned()
    }
}

/// `v + ½[u,v] + (1/12)[u,[u,v]]`, the derivative of `s ↦ log(exp u exp sv)`
/// at `s = 0`. Higher terms of the series vanish for step ≤ 4.
pub(crate) fn frame_apply(alg: &Algebra, u: &[f64], v: &[f64]) -> Coords {
    let uv = alg.bracket_raw(u, v);
    let mut out = Coords::from_slice(v);
    for (o, x) in out.iter_mut().zip(&uv) {
        *o += 0.5 * x;
    }
    if alg.step() >= 3 {
        let uuv = alg.bracket_raw(u, &uv);
        for (o, x) in out.iter_mut().zip(&uuv) {
            *o += x / 12.0;
        }
    }
    out
}

fn basis(n: usize, i: usize) -> Coords {
    let mut e: Coords = smallvec::smallvec![0.0; n];
    e[i] = 1.0;
    e
}

pub fn frame_at(alg: &Algebra, p: &GroupPoint) -> FrameCoefficients {
    let n = alg.dim();
    let mut mat = DMatrix::zeros(n, n);
    for b in 0..n {
        let col = frame_apply(alg, p, &basis(n, b));
        for s in 0..n {
            mat[(s, b)] = col[s];
        }
    }
    FrameCoefficients(mat)
}

/// The frame with polynomial entries: `frame[b][s]` is the `s`-th coordinate
/// component of `X_b`.
pub fn symbolic_frame(alg: &Algebra) -> Vec<Vec<Poly>> {
    let n = alg.dim();
    let u: Vec<Poly> = (0..n).map(|i| Poly::var(n, i)).collect();
    let bracket = |x: &[Poly], y: &[Poly]| -> Vec<Poly> {
        let mut out = vec![Poly::zero(n); n];
        for &(a, b, c, coef) in alg.nonzero_constants() {
            if x[a].is_zero() || y[b].is_zero() {
                continue;
            }
            out[c] = &out[c] + &(&x[a] * &y[b]).scale(coef);
        }
        out
    };
    (0..n)
        .map(|b| {
            let e: Vec<Poly> = (0..n)
                .map(|s| Poly::constant(n, if s == b { 1.0 } else { 0.0 }))
                .collect();
            let ue = bracket(&u, &e);
            let uue = bracket(&u, &ue);
            (0..n)
                .map(|s| &(&e[s] + &ue[s].scale(0.5)) + &uue[s].scale(1.0 / 12.0))
                .collect()
        })
        .collect()
}

/// Coordinate form of `sum_ij A_ij X_i X_j` at `u`: second-order
/// coefficients `B` (N×N, symmetric) and first-order coefficients `b`.
///
/// `a` is a symmetric m×m matrix stored row-major.
pub(crate) fn coordinate_coefficients(
    alg: &Algebra,
    u: &[f64],
    a: &[f64],
    second: &mut [f64],
    first: &mut [f64],
) {
    let n = alg.dim();
    let m = alg.horizontal_dim();
    let cols: Vec<Coords> = (0..m).map(|j| frame_apply(alg, u, &basis(n, j))).collect();
    second.iter_mut().for_each(|x| *x = 0.0);
    first.iter_mut().for_each(|x| *x = 0.0);
    for i in 0..m {
        for j in 0..m {
            let aij = a[i * m + j];
            if aij == 0.0 {
                continue;
            }
            for r in 0..n {
                let wr = cols[i][r];
                if wr == 0.0 {
                    continue;
                }
                for s in 0..n {
                    second[r * n + s] += aij * wr * cols[j][s];
                }
            }
        }
    }
    // X_i applied to the coefficients of X_j: ½[w,e_j] + (1/12)([w,[u,e_j]] + [u,[w,e_j]]).
    if alg.step() >= 2 {
        for i in 0..m {
            for j in 0..m {
                let aij = a[i * m + j];
                if aij == 0.0 {
                    continue;
                }
                let ej = basis(n, j);
                let w = &cols[i];
                let we = alg.bracket_raw(w, &ej);
                for s in 0..n {
                    first[s] += aij * 0.5 * we[s];
                }
                if alg.step() >= 3 {
                    let ue = alg.bracket_raw(u, &ej);
                    let w_ue = alg.bracket_raw(w, &ue);
                    let u_we = alg.bracket_raw(u, &we);
                    for s in 0..n {
                        first[s] += aij * (w_ue[s] + u_we[s]) / 12.0;
                    }
                }
            }
        }
    }
}

/// `p ∘ exp(s e_i)`.
pub fn flow(alg: &Algebra, p: &[f64], i: usize, s: f64) -> Coords {
    let mut v: Coords = smallvec::smallvec![0.0; alg.dim()];
    v[i] = s;
    alg.bch_raw(p, &v)
}

fn eval_at<F: Fn(&GroupPoint) -> f64>(f: &F, c: Coords) -> f64 {
    f(&GroupPoint(c))
}

/// Central flow differences `(X_j f)(p)`, `j < m`.
pub fn horizontal_gradient<F>(alg: &Algebra, f: F, p: &GroupPoint, h: f64) -> DVector<f64>
where
    F: Fn(&GroupPoint) -> f64,
{
    let m = alg.horizontal_dim();
    DVector::from_fn(m, |j, _| {
        (eval_at(&f, flow(alg, p, j, h)) - eval_at(&f, flow(alg, p, j, -h))) / (2.0 * h)
    })
}

/// Symmetrized horizontal Hessian `[(X_iX_j f + X_jX_i f)/2]` by flow differences.
pub fn horizontal_hessian<F>(alg: &Algebra, f: F, p: &GroupPoint, h: f64) -> DMatrix<f64>
where
    F: Fn(&GroupPoint) -> f64,
{
    let m = alg.horizontal_dim();
    let f0 = f(p);
    let mut hess = DMatrix::zeros(m, m);
    for i in 0..m {
        let fp = eval_at(&f, flow(alg, p, i, h));
        let fm = eval_at(&f, flow(alg, p, i, -h));
        hess[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
    }
    // X_i X_j f(p) = ∂s∂t f(p ∘ exp(s e_i) ∘ exp(t e_j)) at 0.
    let mixed = |i: usize, j: usize| {
        let g = |s: f64, t: f64| eval_at(&f, flow(alg, &flow(alg, p, i, s), j, t));
        (g(h, h) - g(h, -h) - g(-h, h) + g(-h, -h)) / (4.0 * h * h)
    };
    for i in 0..m {
        for j in (i + 1)..m {
            let v = 0.5 * (mixed(i, j) + mixed(j, i));
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    hess
}

/// Value, horizontal gradient and symmetrized horizontal Hessian at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct HorizontalJet {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

impl HorizontalJet {
    pub fn new(value: f64, gradient: DVector<f64>, hessian: DMatrix<f64>) -> Self {
        HorizontalJet {
            value,
            gradient,
            hessian,
        }
    }

    pub fn of<F: Fn(&GroupPoint) -> f64>(alg: &Algebra, f: F, p: &GroupPoint, h: f64) -> Self {
        HorizontalJet {
            value: f(p),
            gradient: horizontal_gradient(alg, &f, p, h),
            hessian: horizontal_hessian(alg, &f, p, h),
        }
    }
}

/// Coordinate components of 𝒵: layer-i block is `i` times the layer-i coordinates.
pub fn z_at(alg: &Algebra, p: &GroupPoint) -> Vec<f64> {
    p.iter()
        .enumerate()
        .map(|(s, x)| alg.layer_of(s) as f64 * x)
        .collect()
}

/// `𝒵f(p)` by a central difference in the dilation parameter.
pub fn z_apply<F>(alg: &Algebra, f: F, p: &GroupPoint, h: f64) -> f64
where
    F: Fn(&GroupPoint) -> f64,
{
    let up = GroupPoint(alg.dilate_raw(1.0 + h, p));
    let down = GroupPoint(alg.dilate_raw(1.0 - h, p));
    (f(&up) - f(&down)) / (2.0 * h)
}

/// Coordinate divergence of 𝒵, computed from its polynomial components.
pub fn z_divergence(alg: &Algebra) -> f64 {
    let n = alg.dim();
    let div = (0..n).fold(Poly::zero(n), |acc, s| {
        let zs = Poly::var(n, s).scale(alg.layer_of(s) as f64);
        &acc + &zs.derivative(s)
    });
    div.eval(&vec![0.0; n])
}

/// Polynomial coefficients `Q_b` with `𝒵 = sum_b Q_b X_b`.
#[derive(Clone, Debug)]
pub struct ZDecomposition {
    pub coefficients: Vec<Poly>,
}

impl ZDecomposition {
    pub fn eval(&self, p: &[f64]) -> Vec<f64> {
        self.coefficients.iter().map(|q| q.eval(p)).collect()
    }

    /// `‖F(p) q(p) − Z(p)‖_∞` with the numeric frame.
    pub fn residual_at(&self, alg: &Algebra, p: &GroupPoint) -> f64 {
        let frame = frame_at(alg, p).0;
        let q = DVector::from_vec(self.eval(p));
        let z = DVector::from_vec(z_at(alg, p));
        (frame * q - z).amax()
    }
}

/// Solves `frame · q = Z` exactly by forward substitution over layers: the
/// frame is the identity plus a part mapping layer j into layers above j.
pub fn z_horizontal_decomposition(alg: &Algebra) -> ZDecomposition {
    let n = alg.dim();
    let frame = symbolic_frame(alg);
    let mut q: Vec<Poly> = vec![Poly::zero(n); n];
    for layer in 1..=alg.step() {
        for s in alg.layer_range(layer) {
            let mut qs = Poly::var(n, s).scale(layer as f64);
            for b in 0..alg.layer_range(layer).start {
                let entry = &frame[b][s];
                if !entry.is_zero() && !q[b].is_zero() {
                    qs = &qs - &(entry * &q[b]);
                }
            }
            q[s] = qs;
        }
    }
    ZDecomposition { coefficients: q }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    Hlap,
    Qlap,
    Inflap,
}

fn default_q() -> f64 {
    2.0
}

/// Which model operator, with its exponent and gradient regularization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub kind: OperatorKind,
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default)]
    pub eps_reg: f64,
}

impl OperatorSpec {
    pub fn hlap() -> Self {
        OperatorSpec {
            kind: OperatorKind::Hlap,
            q: 2.0,
            eps_reg: 0.0,
        }
    }

    pub fn qlap(q: f64) -> Self {
        OperatorSpec {
            kind: OperatorKind::Qlap,
            q,
            eps_reg: 0.0,
        }
    }

    pub fn inflap() -> Self {
        OperatorSpec {
            kind: OperatorKind::Inflap,
            q: 2.0,
            eps_reg: 0.0,
        }
    }

    pub fn with_eps(mut self, eps_reg: f64) -> Self {
        self.eps_reg = eps_reg;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q > 1.0 && self.q.is_finite()) {
            return Err(Error::Config(format!(
                "q must lie in (1, ∞), got {}",
                self.q
            )));
        }
        if !(self.eps_reg >= 0.0 && self.eps_reg.is_finite()) {
            return Err(Error::Config(format!(
                "eps_reg must be nonnegative, got {}",
                self.eps_reg
            )));
        }
        Ok(())
    }

    pub fn is_linear(&self) -> bool {
        self.kind == OperatorKind::Hlap
    }

    /// Exponent α with `ℱ(λξ, λ²M) = λ^α ℱ(ξ, M)`, when the law is exact.
    pub fn scaling_exponent(&self) -> Option<f64> {
        match self.kind {
            OperatorKind::Hlap => Some(2.0),
            OperatorKind::Qlap if self.eps_reg == 0.0 => Some(self.q),
            OperatorKind::Qlap => None,
            OperatorKind::Inflap => Some(4.0),
        }
    }

    /// `A(ξ)` with `ℱ(ξ, M) = trace(A(ξ) M)`.
    pub fn coefficient_matrix(&self, xi: &DVector<f64>) -> Result<DMatrix<f64>> {
        let m = xi.len();
        match self.kind {
            OperatorKind::Hlap => Ok(DMatrix::identity(m, m)),
            OperatorKind::Inflap => Ok(xi * xi.transpose()),
            OperatorKind::Qlap => {
                let norm2 = xi.norm_squared() + self.eps_reg * self.eps_reg;
                if norm2 == 0.0 {
                    return if self.q < 2.0 {
                        Err(Error::SingularEvaluation(format!(
                            "q-Laplacean with q = {} < 2 at vanishing gradient",
                            self.q
                        )))
                    } else if self.q == 2.0 {
                        Ok(DMatrix::identity(m, m))
                    } else {
                        Ok(DMatrix::zeros(m, m))
                    };
                }
                let scale = norm2.powf(0.5 * (self.q - 2.0));
                let mut a = (xi * xi.transpose()) * ((self.q - 2.0) / norm2);
                for i in 0..m {
                    a[(i, i)] += 1.0;
                }
                Ok(a * scale)
            }
        }
    }

    /// `A(ξ)` divided by a positive scalar; same zero set, better scaled rows.
    pub(crate) fn normalized_coefficients(&self, xi: &[f64], out: &mut [f64]) {
        let m = xi.len();
        let norm2 = xi.iter().map(|x| x * x).sum::<f64>() + self.eps_reg * self.eps_reg;
        out.iter_mut().for_each(|x| *x = 0.0);
        match self.kind {
            OperatorKind::Hlap => {
                for i in 0..m {
                    out[i * m + i] = 1.0;
                }
            }
            OperatorKind::Qlap => {
                for i in 0..m {
                    out[i * m + i] = 1.0;
                }
                if norm2 > 0.0 {
                    for i in 0..m {
                        for j in 0..m {
                            out[i * m + j] += (self.q - 2.0) * xi[i] * xi[j] / norm2;
                        }
                    }
                }
            }
            OperatorKind::Inflap => {
                if norm2 > 0.0 {
                    for i in 0..m {
                        for j in 0..m {
                            out[i * m + j] = xi[i] * xi[j] / norm2;
                        }
                    }
                }
            }
        }
    }
}

/// `ℱ(p, r, ξ, M)` for the model operators; none depends on `p` or `r`.
pub fn evaluate_operator(op: &OperatorSpec, _p: &GroupPoint, jet: &HorizontalJet) -> Result<f64> {
    let a = op.coefficient_matrix(&jet.gradient)?;
    let sym = (&jet.hessian + jet.hessian.transpose()) * 0.5;
    Ok((a * sym).trace())
}

/// One sample for the structural checks: a jet, a second value `other_value`
/// for properness, a PSD increment for ellipticity and a factor `lambda ≥ 1`.
#[derive(Clone, Debug)]
pub struct StructuralSample {
    pub point: GroupPoint,
    pub jet: HorizontalJet,
    pub other_value: f64,
    pub psd_increment: DMatrix<f64>,
    pub lambda: f64,
}

impl StructuralSample {
    pub fn random_set<R: Rng>(alg: &Algebra, count: usize, rng: &mut R) -> Vec<StructuralSample> {
        let m = alg.horizontal_dim();
        let n = alg.dim();
        (0..count)
            .map(|_| {
                let point = GroupPoint::from(
                    (0..n)
                        .map(|_| rng.random_range(-1.0..1.0))
                        .collect::<Vec<_>>(),
                );
                let mut gradient = DVector::from_fn(m, |_, _| rng.random_range(-2.0..2.0));
                if gradient.norm() < 1e-3 {
                    gradient[0] += 1.0;
                }
                let raw = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
                let hessian = (&raw + raw.transpose()) * 0.5;
                let r = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
                let psd_increment = &r * r.transpose();
                StructuralSample {
                    point,
                    jet: HorizontalJet::new(rng.random_range(0.0..1.0), gradient, hessian),
                    other_value: rng.random_range(0.0..1.0),
                    psd_increment,
                    lambda: rng.random_range(1.0..4.0),
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StructuralReport {
    pub operator: OperatorSpec,
    pub samples: usize,
    pub proper: bool,
    pub elliptic_pairs: usize,
    pub elliptic_violations: usize,
    pub elliptic_min_gap: f64,
    pub expected_alpha: Option<f64>,
    pub alpha_samples: usize,
    pub measured_alpha_min: f64,
    pub measured_alpha_max: f64,
    pub alpha_max_deviation: f64,
    pub scaling_implication_violations: usize,
    pub passed: bool,
}

/// Numerical checks of properness, degenerate ellipticity and stability
/// under the scalings `(ξ, M) ↦ (λξ, λ²M)`, `λ ≥ 1`.
pub fn check_structural(
    op: &OperatorSpec,
    samples: &[StructuralSample],
) -> Result<StructuralReport> {
    const ALPHA_TOL: f64 = 1e-10;
    let mut proper = true;
    let mut elliptic_violations = 0;
    let mut elliptic_min_gap = f64::INFINITY;
    let mut alphas = Vec::new();
    let mut implication_violations = 0;
    for s in samples {
        let f = evaluate_operator(op, &s.point, &s.jet)?;
        let mut other = s.jet.clone();
        other.value = s.other_value;
        if evaluate_operator(op, &s.point, &other)? != f {
            proper = false;
        }

        let mut larger = s.jet.clone();
        larger.hessian += &s.psd_increment;
        let g = evaluate_operator(op, &s.point, &larger)?;
        let scale = 1.0 + f.abs().max(g.abs());
        let gap = (g - f) / scale;
        elliptic_min_gap = elliptic_min_gap.min(gap);
        if gap < -1e-12 {
            elliptic_violations += 1;
        }

        let lambda = s.lambda;
        let scaled = HorizontalJet::new(
            s.jet.value,
            &s.jet.gradient * lambda,
            &s.jet.hessian * (lambda * lambda),
        );
        let fs = evaluate_operator(op, &s.point, &scaled)?;
        if f >= 0.0 && fs < 0.0 {
            implication_violations += 1;
        }
        // Only well-conditioned samples give a meaningful log-ratio.
        let a = op.coefficient_matrix(&s.jet.gradient)?;
        let bound = a.norm() * s.jet.hessian.norm();
        if lambda > 1.2 && f.abs() > 0.05 * bound && bound > 0.0 {
            alphas.push((fs / f).ln() / lambda.ln());
        }
    }
    let expected = op.scaling_exponent();
    let (amin, amax) = alphas
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &a| {
            (lo.min(a), hi.max(a))
        });
    let deviation = match expected {
        Some(e) => alphas.iter().map(|a| (a - e).abs()).fold(0.0, f64::max),
        None => f64::NAN,
    };
    let passed = proper
        && elliptic_violations == 0
        && implication_violations == 0
        && expected.is_none_or(|_| !alphas.is_empty() && deviation <= ALPHA_TOL);
    Ok(StructuralReport {
        operator: *op,
        samples: samples.len(),
        proper,
        elliptic_pairs: samples.len(),
        elliptic_violations,
        elliptic_min_gap,
        expected_alpha: expected,
        alpha_samples: alphas.len(),
        measured_alpha_min: amin,
        measured_alpha_max: amax,
        alpha_max_deviation: deviation,
        scaling_implication_violations: implication_violations,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::AlgebraSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn heis() -> Algebra {
        Algebra::new(AlgebraSpec::heisenberg(1)).unwrap()
    }

    #[test]
    fn heisenberg_frame_closed_form() {
        let g = heis();
        let p = GroupPoint::new(&[0.7, -1.3, 0.4]);
        let f = frame_at(&g, &p).0;
        assert_eq!(f.column(0).as_slice(), &[1.0, 0.0, 0.65]);
        assert_eq!(f.column(1).as_slice(), &[0.0, 1.0, 0.35]);
        assert_eq!(f.column(2).as_slice(), &[0.0, 0.0, 1.0]);
        let e = frame_at(&g, &GroupPoint::zeros(3)).0;
        assert_eq!(e, DMatrix::identity(3, 3));
    }

    #[test]
    fn symbolic_frame_matches_numeric() {
        let g = Algebra::preset("engel").unwrap();
        let sym = symbolic_frame(&g);
        let p = GroupPoint::new(&[0.3, -0.8, 1.1, 0.2]);
        let num = frame_at(&g, &p).0;
        for b in 0..4 {
            for s in 0..4 {
                assert!((sym[b][s].eval(&p) - num[(s, b)]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn heisenberg_coordinate_coefficients() {
        let g = heis();
        let (x, y) = (0.6, -0.2);
        let mut b2 = [0.0; 9];
        let mut b1 = [0.0; 3];
        coordinate_coefficients(&g, &[x, y, 0.3], &[1.0, 0.0, 0.0, 1.0], &mut b2, &mut b1);
        assert!((b2[8] - (x * x + y * y) / 4.0).abs() < 1e-15);
        // 2 B_xt = -y, 2 B_yt = x
        assert!((2.0 * b2[2] + y).abs() < 1e-15);
        assert!((2.0 * b2[5] - x).abs() < 1e-15);
        assert_eq!(b2[1], 0.0);
        assert_eq!(b1, [0.0; 3]);
    }

    #[test]
    fn gradient_of_t() {
        let g = heis();
        let p = GroupPoint::new(&[0.5, 0.25, -1.0]);
        let grad = horizontal_gradient(&g, |q| q[2], &p, 1e-3);
        assert!((grad[0] + 0.125).abs() < 1e-12);
        assert!((grad[1] - 0.25).abs() < 1e-12);
        let hess = horizontal_hessian(&g, |q| q[0], &p, 1e-3);
        assert!(hess.amax() < 1e-8);
        let c = horizontal_hessian(&g, |_| 3.0, &p, 1e-3);
        assert_eq!(c.amax(), 0.0);
    }

    #[test]
    fn z_field_examples() {
        let g = heis();
        assert_eq!(
            z_at(&g, &GroupPoint::new(&[1.0, 2.0, 3.0])),
            vec![1.0, 2.0, 6.0]
        );
        let e = Algebra::preset("engel").unwrap();
        assert_eq!(
            z_at(&e, &GroupPoint::new(&[1.0, 1.0, 1.0, 1.0])),
            vec![1.0, 1.0, 2.0, 3.0]
        );
        assert_eq!(z_divergence(&g), 4.0);
        assert_eq!(z_divergence(&e), 7.0);
    }

    #[test]
    fn z_decomposition_heisenberg() {
        let g = heis();
        let d = z_horizontal_decomposition(&g);
        assert_eq!(d.coefficients[0], Poly::var(3, 0));
        assert_eq!(d.coefficients[1], Poly::var(3, 1));
        assert_eq!(d.coefficients[2], Poly::var(3, 2).scale(2.0));
    }

    #[test]
    fn z_decomposition_abelian_is_radial() {
        let g = Algebra::preset("abelian-3").unwrap();
        let d = z_horizontal_decomposition(&g);
        for i in 0..3 {
            assert_eq!(d.coefficients[i], Poly::var(3, i));
        }
    }

    #[test]
    fn operator_examples() {
        let p = GroupPoint::zeros(3);
        let jet = HorizontalJet::new(
            0.0,
            DVector::from_vec(vec![0.3, -1.2]),
            DMatrix::from_row_slice(2, 2, &[1.5, 0.2, 0.2, -0.7]),
        );
        let h = evaluate_operator(&OperatorSpec::hlap(), &p, &jet).unwrap();
        let q2 = evaluate_operator(&OperatorSpec::qlap(2.0), &p, &jet).unwrap();
        assert!((h - 0.8).abs() < 1e-15);
        assert!((h - q2).abs() < 1e-15);

        let id = HorizontalJet::new(
            0.0,
            DVector::from_vec(vec![1.0, 0.0]),
            DMatrix::identity(2, 2),
        );
        assert_eq!(
            evaluate_operator(&OperatorSpec::hlap(), &p, &id).unwrap(),
            2.0
        );

        let e1 = HorizontalJet::new(0.0, DVector::from_vec(vec![1.0, 0.0]), jet.hessian.clone());
        assert_eq!(
            evaluate_operator(&OperatorSpec::inflap(), &p, &e1).unwrap(),
            1.5
        );
    }

    #[test]
    fn singular_qlap_evaluation() {
        let p = GroupPoint::zeros(3);
        let zero = HorizontalJet::new(0.0, DVector::zeros(2), DMatrix::identity(2, 2));
        assert!(matches!(
            evaluate_operator(&OperatorSpec::qlap(1.5), &p, &zero),
            Err(Error::SingularEvaluation(_))
        ));
        assert!(evaluate_operator(&OperatorSpec::qlap(1.5).with_eps(1e-3), &p, &zero).is_ok());
        assert_eq!(
            evaluate_operator(&OperatorSpec::qlap(3.0), &p, &zero).unwrap(),
            0.0
        );
        assert_eq!(
            evaluate_operator(&OperatorSpec::qlap(2.0), &p, &zero).unwrap(),
            2.0
        );
    }

    #[test]
    fn operator_uses_symmetric_part() {
        let p = GroupPoint::zeros(3);
        let xi = DVector::from_vec(vec![0.4, 0.9]);
        let m = DMatrix::from_row_slice(2, 2, &[0.3, 1.0, -0.6, 0.2]);
        let sym = (&m + m.transpose()) * 0.5;
        for op in [
            OperatorSpec::hlap(),
            OperatorSpec::qlap(3.5),
            OperatorSpec::inflap(),
        ] {
            let a = evaluate_operator(&op, &p, &HorizontalJet::new(0.0, xi.clone(), m.clone()))
                .unwrap();
            let b = evaluate_operator(&op, &p, &HorizontalJet::new(0.0, xi.clone(), sym.clone()))
                .unwrap();
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn structural_checks_pass() {
        let g = heis();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let samples = StructuralSample::random_set(&g, 200, &mut rng);
        for (op, alpha) in [
            (OperatorSpec::hlap(), 2.0),
            (OperatorSpec::qlap(3.0), 3.0),
            (OperatorSpec::inflap(), 4.0),
        ] {
            let r = check_structural(&op, &samples).unwrap();
            assert!(r.passed, "{r:?}");
            assert_eq!(r.expected_alpha, Some(alpha));
            assert!(r.alpha_samples > 20);
        }
    }

    #[test]
    fn operator_spec_validation() {
        assert!(OperatorSpec::qlap(1.0).validate().is_err());
        assert!(OperatorSpec::hlap().with_eps(-1.0).validate().is_err());
        assert!(OperatorSpec::qlap(4.0).with_eps(1e-8).validate().is_ok());
        let op: OperatorSpec = serde_json::from_str(r#"{"kind": "qlap", "q": 4}"#).unwrap();
        assert_eq!(op, OperatorSpec::qlap(4.0));
    }
}
