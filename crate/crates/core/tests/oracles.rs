//! Independent oracles: a hand-written Heisenberg frame, closed-form
//! potentials and exact polynomial derivatives.

use carnot::algebra::{Algebra, GroupPoint};
use carnot::calculus::{symbolic_frame, OperatorSpec};
use carnot::harness::{hlap_poly, x_poly};
use carnot::poly::Poly;
use carnot::solver::build_stencil;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn x(i: usize) -> Poly {
    Poly::var(3, i)
}

/// `X₁ = ∂x − (y/2)∂t`, `X₂ = ∂y + (x/2)∂t`, written out by hand.
fn x1(f: &Poly) -> Poly {
    &f.derivative(0) - &(&x(1) * &f.derivative(2)).scale(0.5)
}

fn x2(f: &Poly) -> Poly {
    &f.derivative(1) + &(&x(0) * &f.derivative(2)).scale(0.5)
}

fn phi() -> Poly {
    let r2 = &(&x(0) * &x(0)) + &(&x(1) * &x(1));
    &(&r2 * &r2) + &(&x(2) * &x(2)).scale(16.0)
}

fn assert_poly_zero(p: &Poly, tol: f64) {
    let worst = p.terms().map(|(_, c)| c.abs()).fold(0.0, f64::max);
    assert!(worst <= tol, "largest coefficient {worst}");
}

#[test]
fn gauge_power_is_horizontally_harmonic() {
    // With E = φ^{-1/2}: Δ_H E = φ^{-5/2}(3|∇_H φ|² − 2φ Δ_H φ)/4.
    let f = phi();
    let (a, b) = (x1(&f), x2(&f));
    let lap = &x1(&a) + &x2(&b);
    let grad2 = &(&a * &a) + &(&b * &b);
    let numerator = &grad2.scale(3.0) - &(&f * &lap).scale(2.0);
    assert_poly_zero(&numerator, 1e-12);
    // A wrong layer-2 weight breaks the identity.
    let r2 = &(&x(0) * &x(0)) + &(&x(1) * &x(1));
    let wrong = &(&r2 * &r2) + &(&x(2) * &x(2)).scale(4.0);
    let (a, b) = (x1(&wrong), x2(&wrong));
    let lap = &x1(&a) + &x2(&b);
    let bad = &(&(&a * &a) + &(&b * &b)).scale(3.0) - &(&wrong * &lap).scale(2.0);
    assert!(!bad.is_zero());
}

#[test]
fn library_frame_matches_hand_frame() {
    let alg = Algebra::preset("heisenberg-1").unwrap();
    let frame = symbolic_frame(&alg);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let mut f = Poly::zero(3);
        for _ in 0..6 {
            let e: Vec<u8> = (0..3).map(|_| rng.random_range(0..4)).collect();
            f = &f + &Poly::monomial(3, &e, rng.random_range(-1.0..1.0));
        }
        assert_poly_zero(&(&x_poly(&frame, 0, &f) - &x1(&f)), 1e-14);
        assert_poly_zero(&(&x_poly(&frame, 1, &f) - &x2(&f)), 1e-14);
        let hand = &x1(&x1(&f)) + &x2(&x2(&f));
        assert_poly_zero(&(&hlap_poly(&alg, &frame, &f) - &hand), 1e-12);
    }
}

fn random_quadratic<R: Rng>(rng: &mut R, n: usize) -> Poly {
    let mut f = Poly::constant(n, rng.random_range(-1.0..1.0));
    for i in 0..n {
        f = &f + &Poly::var(n, i).scale(rng.random_range(-1.0..1.0));
        for j in i..n {
            f = &f + &(&Poly::var(n, i) * &Poly::var(n, j)).scale(rng.random_range(-1.0..1.0));
        }
    }
    f
}

/// `Σ A_ij X_i X_j f` from exact polynomial derivatives.
fn exact_operator(alg: &Algebra, a: &nalgebra::DMatrix<f64>, f: &Poly, p: &[f64]) -> f64 {
    let frame = symbolic_frame(alg);
    let m = alg.horizontal_dim();
    let mut s = 0.0;
    for i in 0..m {
        for j in 0..m {
            let xij = x_poly(&frame, i, &x_poly(&frame, j, f));
            let xji = x_poly(&frame, j, &x_poly(&frame, i, f));
            s += a[(i, j)] * 0.5 * (xij.eval(p) + xji.eval(p));
        }
    }
    s
}

#[test]
fn stencil_is_exact_on_quadratics() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for name in ["heisenberg-1", "heisenberg-2", "engel", "abelian-3"] {
        let alg = Algebra::preset(name).unwrap();
        let n = alg.dim();
        let m = alg.horizontal_dim();
        for op in [
            OperatorSpec::hlap(),
            OperatorSpec::qlap(4.0),
            OperatorSpec::inflap(),
        ] {
            for _ in 0..10 {
                let f = random_quadratic(&mut rng, n);
                let p: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let h: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..0.05)).collect();
                let xi = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
                let st = build_stencil(&alg, &op, &xi, &GroupPoint::new(&p), &h).unwrap();
                let got = st.apply(|q| f.eval(q), &p, &h);
                let want = exact_operator(&alg, &op.coefficient_matrix(&xi).unwrap(), &f, &p);
                assert!(
                    (got - want).abs() <= 1e-8 * (1.0 + want.abs()),
                    "{name} {op:?}: {got} vs {want}"
                );
            }
        }
    }
}

#[test]
fn stencil_truncation_is_second_order() {
    let alg = Algebra::preset("heisenberg-1").unwrap();
    let f = &(&phi() * &x(0)) + &(&x(1) * &x(2));
    let frame = symbolic_frame(&alg);
    let lap = hlap_poly(&alg, &frame, &f);
    let p = [0.3, -0.4, 0.2];
    let xi = DVector::from_vec(vec![1.0, 0.0]);
    let err = |h: f64| {
        let hs = [h; 3];
        let st =
            build_stencil(&alg, &OperatorSpec::hlap(), &xi, &GroupPoint::new(&p), &hs).unwrap();
        (st.apply(|q| f.eval(q), &p, &hs) - lap.eval(&p)).abs()
    };
    let (e1, e2) = (err(0.02), err(0.01));
    let ratio = e1 / e2;
    assert!((3.5..4.5).contains(&ratio), "{e1} {e2} {ratio}");
}

/// `(ρ⁻² − 1)/5.25` solves `Δ_H u = 0` on the ring with data 1 on `ρ = 0.4`
/// and 0 on `ρ = 1`.
fn radial_potential(alg: &Algebra, p: &[f64]) -> f64 {
    let r = alg.gauge_of(p);
    (r.powi(-2) - 1.0) / 5.25
}

#[test]
fn radial_potential_matches_boundary_data() {
    let alg = Algebra::preset("heisenberg-1").unwrap();
    assert!((radial_potential(&alg, &[0.4, 0.0, 0.0]) - 1.0).abs() < 1e-14);
    assert!(radial_potential(&alg, &[0.0, 1.0, 0.0]).abs() < 1e-14);
    // Layer-2 point on the unit sphere: 16 t² = 1.
    assert!(radial_potential(&alg, &[0.0, 0.0, 0.25]).abs() < 1e-14);
}

#[test]
fn discrete_residual_of_exact_potential_is_second_order() {
    let alg = Algebra::preset("heisenberg-1").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut pts = Vec::new();
    while pts.len() < 50 {
        let p: Vec<f64> = vec![
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-0.25..0.25),
        ];
        let g = alg.gauge_of(&p);
        if (0.55..0.85).contains(&g) {
            pts.push(p);
        }
    }
    let xi = DVector::from_vec(vec![1.0, 0.0]);
    let worst = |h: f64| {
        pts.iter()
            .map(|p| {
                let hs = [h, h, h / 4.0];
                let st = build_stencil(&alg, &OperatorSpec::hlap(), &xi, &GroupPoint::new(p), &hs)
                    .unwrap();
                st.apply(|q| radial_potential(&alg, q), p, &hs).abs()
            })
            .fold(0.0, f64::max)
    };
    let (r1, r2) = (worst(0.01), worst(0.005));
    let ratio = r1 / r2;
    assert!((3.5..4.5).contains(&ratio), "{r1} {r2} {ratio}");
}
