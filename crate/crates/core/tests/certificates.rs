mod common;

use extremal_core::certify::{
    self, certify_girth, certify_lambda1, certify_tree_number, equiarboreal_check, farkas_cone, Certificate,
    Objective, Status,
};
use extremal_core::families::{complete, cycle, moebius_wheel, path, petersen, triangle_with_pendant};
use extremal_core::{spectral, Graph, Space};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn assert_witness_improves(g: &Graph, f: &[f64], cert: &Certificate) {
    let w = cert.witness.as_ref().expect("not_maximal carries a witness");
    assert!(w.step <= 1e-3);
    let base = cert.objective.evaluate(g, f).unwrap();
    let moved: Vec<f64> = f.iter().zip(&w.direction).map(|(a, b)| a + w.step * b).collect();
    assert!(cert.objective.evaluate(g, &moved).unwrap() > base);
    let t = extremal_core::tangent_basis(g, cert.space).unwrap();
    assert!(common::sup_dist(&t.project(&w.direction), &w.direction) <= 1e-9);
}

#[test]
fn farkas_examples() {
    let inside = farkas_cone(&[vec![1.0, 1.0]], &[], Some(&[2.0, 2.0])).unwrap();
    assert!(inside.inside);
    assert!((inside.multipliers[0] - 2.0).abs() < 1e-9);

    let outside = farkas_cone(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[], Some(&[1.0, -1.0])).unwrap();
    assert!(!outside.inside);
    let w = outside.separator.unwrap();
    assert!(w[0] >= -1e-12 && w[1] >= -1e-12);
    assert!(w[0] - w[1] < 0.0);

    let g = complete(4).unwrap();
    let sys = extremal_core::metric::systoles(&g, &[1.0; 6], 1e-9).unwrap();
    let c = farkas_cone(&sys.edge_vectors(), &[], Some(&[1.0; 6])).unwrap();
    assert!(c.inside && c.open);
    for mu in &c.multipliers {
        assert!((mu - 0.5).abs() < 1e-9);
    }
}

#[test]
fn girth_certificate_examples() {
    let c5 = cycle(5).unwrap();
    let cert = certify_girth(&c5, &[1.0; 5], Space::P).unwrap();
    assert_eq!(cert.status, Status::Maximal);
    assert!((cert.multipliers[0] - 1.0).abs() < 1e-9);
    assert_eq!(cert.unique, Some(false));

    let k4 = complete(4).unwrap();
    let cert = certify_girth(&k4, &[1.0; 6], Space::P).unwrap();
    assert_eq!(cert.status, Status::Maximal);
    assert_eq!(cert.multipliers.len(), 4);
    // four triangles and the all-ones vector span only a 4-dimensional space
    assert_eq!(cert.unique, Some(false));

    let k3p = triangle_with_pendant().unwrap();
    let f = [1.0; 4];
    let cert = certify_girth(&k3p, &f, Space::P).unwrap();
    assert_eq!(cert.status, Status::NotMaximal);
    assert_witness_improves(&k3p, &f, &cert);
    let pendant = (0..4).find(|&e| k3p.degree(k3p.edge(e).1) == 1 || k3p.degree(k3p.edge(e).0) == 1).unwrap();
    assert!(cert.witness.unwrap().direction[pendant] < 0.0);
}

#[test]
fn tree_number_certificate_examples() {
    let k4 = complete(4).unwrap();
    let cert = certify_tree_number(&k4, &[1.0; 6], Space::P).unwrap();
    assert_eq!(cert.status, Status::Maximal);
    for r in spectral::effective_resistances(&k4, &[1.0; 6]).unwrap() {
        assert!((r - 0.5).abs() < 1e-12);
    }
    let p = petersen().unwrap();
    assert_eq!(certify_tree_number(&p, &[1.0; 15], Space::P).unwrap().status, Status::Maximal);

    let k3 = complete(3).unwrap();
    let f = [2.0, 0.5, 0.5];
    let cert = certify_tree_number(&k3, &f, Space::P).unwrap();
    assert_eq!(cert.status, Status::NotMaximal);
    assert_witness_improves(&k3, &f, &cert);
}

#[test]
fn equiarboreal_examples() {
    let tree = path(5).unwrap();
    let r = equiarboreal_check(&tree).unwrap();
    assert!(r.equiarboreal);
    assert_eq!(r.tree_number, 1);
    assert!(r.trees_through_edge.iter().all(|&t| t == 1));

    let r = equiarboreal_check(&complete(4).unwrap()).unwrap();
    assert!(r.equiarboreal && r.matches_formula && r.divisible);
    assert!(r.trees_through_edge.iter().all(|&t| t == 8));

    let r = equiarboreal_check(&moebius_wheel().unwrap()).unwrap();
    assert!(!r.equiarboreal);
    assert_eq!(r.tree_number, 392);
}

#[test]
fn lambda1_certificate_examples() {
    let c4 = cycle(4).unwrap();
    let cert = certify_lambda1(&c4, &[1.0; 4], Space::P).unwrap();
    assert_eq!(cert.status, Status::Maximal);
    assert_eq!(cert.eigenspace_dim, Some(2));

    let k3 = complete(3).unwrap();
    let f = [2.0, 0.5, 0.5];
    let cert = certify_lambda1(&k3, &f, Space::P).unwrap();
    assert_eq!(cert.status, Status::NotMaximal);
    assert_witness_improves(&k3, &f, &cert);
}

#[test]
fn maximal_lambda1_embeds_edges_on_an_ellipsoid() {
    for g in [cycle(4).unwrap(), complete(4).unwrap(), petersen().unwrap()] {
        let cert = certify_lambda1(&g, &vec![1.0; g.m()], Space::P).unwrap();
        assert_eq!(cert.status, Status::Maximal);
        let phi: Vec<f64> = serde_json::from_value(cert.diagnostics["edge_pairing"].clone()).unwrap();
        let hi = phi.iter().cloned().fold(f64::MIN, f64::max);
        let lo = phi.iter().cloned().fold(f64::MAX, f64::min);
        assert!(hi - lo <= 1e-7 * hi);
    }
}

#[test]
fn boundary_valuations_are_inconclusive() {
    let g = complete(3).unwrap();
    let f = [3.0 - 2e-6, 1e-6, 1e-6];
    for obj in Objective::ALL {
        let cert = certify::certify(&g, &f, Space::P, obj).unwrap();
        assert_eq!(cert.status, Status::Inconclusive, "{obj}");
        assert!(cert.note.is_some());
    }
}

fn small_graph() -> impl Strategy<Value = usize> {
    0usize..5
}

fn small(i: usize) -> Graph {
    [
        complete(3).unwrap(),
        complete(4).unwrap(),
        cycle(4).unwrap(),
        cycle(5).unwrap(),
        triangle_with_pendant().unwrap(),
    ][i]
        .clone()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn farkas_never_returns_both_sides(
        vs in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 4), 1..6),
        target in prop::collection::vec(-2.0f64..2.0, 4),
    ) {
        let c = farkas_cone(&vs, &[], Some(&target)).unwrap();
        prop_assert!(!(c.inside && c.separator.is_some()));
        if let Some(w) = &c.separator {
            for v in &vs {
                let p: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
                prop_assert!(p >= -1e-9);
            }
            let p: f64 = target.iter().zip(w).map(|(a, b)| a * b).sum();
            prop_assert!(p < 0.0);
        }
        if c.inside {
            prop_assert!(c.multipliers.iter().all(|&m| m >= -1e-12));
            let mut comb = vec![0.0; 4];
            for (m, v) in c.multipliers.iter().zip(&vs) {
                for (o, x) in comb.iter_mut().zip(v) {
                    *o += m * x;
                }
            }
            prop_assert!(common::sup_dist(&comb, &target) <= 1e-7);
        }
    }

    #[test]
    fn certificates_are_sound(gi in small_graph(), seed in any::<u64>(), si in 0usize..3, oi in 0usize..3) {
        use rand::Rng;
        let g = small(gi);
        let space = Space::ALL[si];
        let obj = Objective::ALL[oi];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = if rng.gen_bool(0.3) { vec![1.0; g.m()] } else { common::random_in_space(&mut rng, &g, space) };
        let cert = certify::certify(&g, &f, space, obj).unwrap();
        let base = obj.evaluate(&g, &f).unwrap();
        match cert.status {
            Status::Maximal => {
                prop_assert!(cert.residual <= certify::CERT_TOL);
                for _ in 0..200 {
                    let h = common::random_tangent(&mut rng, &g, space);
                    let moved: Vec<f64> = f.iter().zip(&h).map(|(a, b)| a + 1e-4 * b).collect();
                    let v = obj.evaluate(&g, &moved).unwrap();
                    prop_assert!(v <= base + 1e-10, "{obj} {space}: {v} > {base}");
                }
            }
            Status::NotMaximal => assert_witness_improves(&g, &f, &cert),
            Status::Inconclusive => {}
        }
    }

    #[test]
    fn simple_eigenvalue_conditions_coincide(gi in small_graph(), seed in any::<u64>()) {
        let g = small(gi);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = common::random_in_space(&mut rng, &g, Space::T);
        let cert = certify_lambda1(&g, &f, Space::T).unwrap();
        if cert.eigenspace_dim == Some(1) {
            prop_assert_eq!(&cert.diagnostics["df_const"], &cert.diagnostics["dfconst2"]);
            let p = certify_lambda1(&g, &f, Space::P).unwrap();
            prop_assert_eq!(p.diagnostics["df_const"].clone(), cert.diagnostics["df_const"].clone());
        }
    }
}
