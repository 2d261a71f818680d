use std::sync::{Arc, OnceLock};

use carnot::algebra::{Algebra, AlgebraVector, GroupPoint};
use carnot::calculus::OperatorSpec;
use carnot::geometry::{star_envelope, CondenserSpec};
use carnot::solver::{self, classify_nodes, DiscreteField, GridSpec, NodeKind, SolveConfig};
use proptest::prelude::*;

const PRESETS: [&str; 4] = ["heisenberg-1", "heisenberg-2", "engel", "abelian-3"];

fn algebras() -> &'static Vec<Algebra> {
    static ALGS: OnceLock<Vec<Algebra>> = OnceLock::new();
    ALGS.get_or_init(|| {
        PRESETS
            .iter()
            .map(|n| Algebra::preset(n).unwrap())
            .collect()
    })
}

fn point(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, dim)
}

/// An algebra index together with three points of matching dimension.
fn alg_and_points() -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>, Vec<f64>)> {
    (0..PRESETS.len()).prop_flat_map(|k| {
        let n = algebras()[k].dim();
        (Just(k), point(n), point(n), point(n))
    })
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter()
        .zip(b)
        .all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())))
}

fn gp(v: &[f64]) -> GroupPoint {
    GroupPoint::new(v)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn bch_is_associative((k, p, q, r) in alg_and_points()) {
        let alg = &algebras()[k];
        let left = alg.group_mul(&alg.group_mul(&gp(&p), &gp(&q)).unwrap(), &gp(&r)).unwrap();
        let right = alg.group_mul(&gp(&p), &alg.group_mul(&gp(&q), &gp(&r)).unwrap()).unwrap();
        prop_assert!(close(left.coords(), right.coords(), 1e-12));
    }

    #[test]
    fn inverse_and_identity((k, p, _q, _r) in alg_and_points()) {
        let alg = &algebras()[k];
        let e = alg.group_mul(&gp(&p), &alg.inverse(&gp(&p))).unwrap();
        prop_assert!(e.coords().iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn dilations_are_automorphisms(
        (k, p, q, _r) in alg_and_points(),
        lambda in 0.1..10.0f64,
        mu in 0.1..10.0f64,
    ) {
        let alg = &algebras()[k];
        let pq = alg.group_mul(&gp(&p), &gp(&q)).unwrap();
        let left = alg.dilate(lambda, &pq).unwrap();
        let right = alg
            .group_mul(&alg.dilate(lambda, &gp(&p)).unwrap(), &alg.dilate(lambda, &gp(&q)).unwrap())
            .unwrap();
        prop_assert!(close(left.coords(), right.coords(), 1e-12));
        let twice = alg.dilate(lambda, &alg.dilate(mu, &gp(&p)).unwrap()).unwrap();
        let once = alg.dilate(lambda * mu, &gp(&p)).unwrap();
        prop_assert!(close(twice.coords(), once.coords(), 1e-12));
    }

    #[test]
    fn gauge_is_homogeneous((k, p, _q, _r) in alg_and_points(), lambda in 0.05..20.0f64) {
        let alg = &algebras()[k];
        let g = alg.gauge_of(&p);
        let gl = alg.gauge_of(alg.dilate(lambda, &gp(&p)).unwrap().coords());
        prop_assert!((gl - lambda * g).abs() <= 1e-12 * (1.0 + lambda * g));
        let inv = alg.inverse(&gp(&p));
        prop_assert!((alg.gauge_of(inv.coords()) - g).abs() <= 1e-12 * (1.0 + g));
    }

    #[test]
    fn centered_dilations_fix_center_and_compose(
        (k, c, p, _r) in alg_and_points(),
        lambda in 0.1..10.0f64,
        mu in 0.1..10.0f64,
    ) {
        let alg = &algebras()[k];
        let fixed = alg.centered_dilate(&gp(&c), lambda, &gp(&c)).unwrap();
        prop_assert!(close(fixed.coords(), &c, 1e-12));
        let twice = alg
            .centered_dilate(&gp(&c), lambda, &alg.centered_dilate(&gp(&c), mu, &gp(&p)).unwrap())
            .unwrap();
        let once = alg.centered_dilate(&gp(&c), lambda * mu, &gp(&p)).unwrap();
        prop_assert!(close(twice.coords(), once.coords(), 1e-10));
    }

    #[test]
    fn bracket_is_antisymmetric((k, p, q, _r) in alg_and_points()) {
        let alg = &algebras()[k];
        let u = AlgebraVector::new(&p);
        let v = AlgebraVector::new(&q);
        let a = alg.bracket(&u, &v).unwrap();
        let b = alg.bracket(&v, &u).unwrap();
        prop_assert!(a.coords().iter().zip(b.coords()).all(|(x, y)| (x + y).abs() < 1e-12));
    }
}

fn ring_field(counts: usize) -> DiscreteField {
    let alg = Arc::new(Algebra::preset("heisenberg-1").unwrap());
    let condenser = Arc::new(CondenserSpec::gauge_balls(0.4, 1.0).build(alg).unwrap());
    let grid = GridSpec::around(&condenser, &[counts; 3], 2.0).unwrap();
    classify_nodes(&grid, condenser).unwrap()
}

fn base_field() -> &'static DiscreteField {
    static F: OnceLock<DiscreteField> = OnceLock::new();
    F.get_or_init(|| ring_field(17))
}

/// Random interior values with the condenser data on the Dirichlet nodes.
fn random_values() -> impl Strategy<Value = Vec<f64>> {
    let len = base_field().values.len();
    prop::collection::vec(0.0..1.0f64, len).prop_map(|mut v| {
        for (x, k) in v.iter_mut().zip(&base_field().kinds) {
            match k {
                NodeKind::Dirichlet1 => *x = 1.0,
                NodeKind::Interior => {}
                _ => *x = 0.0,
            }
        }
        v
    })
}

const UPPER: f64 = 2.75;
const COUNT: usize = 12;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn envelope_dominates_and_is_monotone(v in random_values(), bump in 0.0..0.5f64) {
        let f = base_field().with_values(v.clone());
        let g_values: Vec<f64> = v
            .iter()
            .zip(&f.kinds)
            .map(|(x, k)| if *k == NodeKind::Interior { (x + bump).min(1.0) } else { *x })
            .collect();
        let g = f.with_values(g_values);
        let p0 = [0.0; 3];
        let fs = star_envelope(&f, &p0, UPPER, COUNT).unwrap();
        let gs = star_envelope(&g, &p0, UPPER, COUNT).unwrap();
        for i in 0..f.values.len() {
            prop_assert!(fs.values[i] >= f.values[i] - 1e-12);
            prop_assert!(gs.values[i] >= fs.values[i] - 1e-12);
        }
        // A second pass never lowers the envelope.
        let again = star_envelope(&fs, &p0, UPPER, COUNT).unwrap();
        for i in 0..f.values.len() {
            prop_assert!(again.values[i] >= fs.values[i] - 1e-12);
        }
    }

    #[test]
    fn envelope_of_decreasing_profile_is_itself(a in 0.5..3.0f64) {
        // f = φ(|p|) with φ decreasing: dilating outwards never increases f.
        let f = base_field();
        let alg = f.condenser.alg.clone();
        let field = f.map_nodes(|p, k| match k {
            NodeKind::Dirichlet1 => 1.0,
            NodeKind::Interior => (-a * alg.gauge_of(p)).exp(),
            _ => 0.0,
        });
        let env = star_envelope(&field, &[0.0; 3], UPPER, COUNT).unwrap();
        let lip = field.lipschitz_estimate();
        let h = field.grid.spacing().into_iter().fold(0.0, f64::max);
        let gap = field.values.iter().zip(&env.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(gap <= lip * h, "{gap} vs {}", lip * h);
    }
}

fn solved_with_inner(r1: f64) -> Vec<f64> {
    let alg = Arc::new(Algebra::preset("heisenberg-1").unwrap());
    let condenser = Arc::new(CondenserSpec::gauge_balls(r1, 1.0).build(alg).unwrap());
    // Fixed box so that different condensers share nodes.
    let grid = GridSpec::centered(&[1.2, 1.2, 0.36], &[21, 21, 21]).unwrap();
    let cfg = SolveConfig::new(OperatorSpec::hlap());
    solver::solve(&grid, condenser, &cfg).unwrap().field.values
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn larger_inner_set_raises_the_potential(r1 in 0.25..0.45f64, dr in 0.05..0.2f64) {
        let small = solved_with_inner(r1);
        let large = solved_with_inner(r1 + dr);
        for (a, b) in small.iter().zip(&large) {
            prop_assert!(*a <= *b + 1e-8, "{a} > {b}");
            prop_assert!((-1e-10..=1.0 + 1e-10).contains(a));
        }
    }

    #[test]
    fn scaled_boundary_data_scales_the_solution(c in 0.1..2.0f64) {
        let f = ring_field(17);
        let scaled = f.map_nodes(|_, k| if k == NodeKind::Dirichlet1 { c } else { 0.0 });
        let cfg = SolveConfig::new(OperatorSpec::hlap());
        let unit = solver::solve_field(f, &cfg).unwrap().field.values;
        let other = solver::solve_field(scaled, &cfg).unwrap().field.values;
        for (u, v) in unit.iter().zip(&other) {
            prop_assert!((c * u - v).abs() <= 1e-6, "{} vs {v}", c * u);
        }
    }
}
