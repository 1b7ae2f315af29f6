use std::f64::consts::TAU;
use std::sync::OnceLock;

use calib7::cr::{coassociativity_residual, gamma_construction, project_p, OrientedTwoPlane};
use calib7::families::*;
use calib7::forms::{cross, evaluate, hodge_star, phi, phi_eval, star_phi_eval, wedge, Form};
use calib7::g2::{exp_frame, g2_basis, G2AlgebraElement, G2Frame};
use calib7::invariants::{extract_ab, gauge_transform, invariants_of, ABData};
use calib7::{Vector7, C64};
use nalgebra::Matrix2;
use proptest::prelude::*;

fn vec7() -> impl Strategy<Value = Vector7> {
    prop::array::uniform7(-2.0..2.0f64).prop_map(|a| Vector7::from_column_slice(&a))
}

fn form(grade: usize) -> impl Strategy<Value = Form> {
    prop::collection::vec((prop::sample::subsequence((1..=7).collect::<Vec<usize>>(), grade), -1.0..1.0f64), 1..6)
        .prop_map(move |terms| {
            terms.into_iter().fold(Form::zero(grade).unwrap(), |acc, (idx, c)| {
                acc.checked_add(&Form::monomial(&idx).unwrap().scale(c)).unwrap()
            })
        })
}

/// A g2 element from 14 coordinates in the frozen basis.
fn g2_element() -> impl Strategy<Value = G2AlgebraElement> {
    prop::collection::vec(-1.0..1.0f64, 14).prop_map(|c| {
        g2_basis().iter().zip(c).fold(G2AlgebraElement::zero(), |acc, (b, x)| acc.add(&b.scale(x)))
    })
}

fn unitary() -> impl Strategy<Value = Matrix2<C64>> {
    prop::array::uniform8(-1.0..1.0f64).prop_filter_map("degenerate draw", |a| {
        let m = Matrix2::new(C64::new(a[0], a[1]), C64::new(a[2], a[3]), C64::new(a[4], a[5]), C64::new(a[6], a[7]));
        (m.determinant().norm() > 1e-3).then(|| m.qr().q())
    })
}

fn binormal_ab() -> &'static ABData {
    static AB: OnceLock<ABData> = OnceLock::new();
    AB.get_or_init(|| extract_ab(&binormal_fixture().unwrap().lift, 1e-4).unwrap())
}

proptest! {
    #[test]
    fn hodge_star_is_an_involution(a in form(3)) {
        // in dimension 7 the sign (-1)^{p(7-p)} is always +1
        prop_assert!(hodge_star(&hodge_star(&a)).distance(&a) < 1e-14);
    }

    #[test]
    fn wedge_is_graded_commutative(a in form(2), b in form(3)) {
        // sign (-1)^{2*3} = +1
        let ab = wedge(&a, &b).unwrap();
        let ba = wedge(&b, &a).unwrap();
        prop_assert!(ab.distance(&ba) < 1e-14);
    }

    #[test]
    fn cross_product_norm_identity(x in vec7(), y in vec7()) {
        let c = cross(&x, &y);
        let lhs = c.norm_squared();
        let rhs = x.norm_squared() * y.norm_squared() - x.dot(&y).powi(2);
        prop_assert!((lhs - rhs).abs() < 1e-11 * (1.0 + rhs));
        prop_assert!((phi_eval(&x, &y, &c) - lhs).abs() < 1e-11 * (1.0 + lhs));
        prop_assert!(c.dot(&x).abs() < 1e-11 * (1.0 + lhs));
    }

    #[test]
    fn cross_product_of_orthonormal_pair_is_unit(x in vec7(), y in vec7()) {
        let q = calib7::linalg::gram_schmidt(&[x, y], 1e-6);
        prop_assume!(q.is_some());
        let q = q.unwrap();
        prop_assert!((cross(&q[0], &q[1]).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn phi_evaluation_agrees_with_generic(x in vec7(), y in vec7(), z in vec7()) {
        let g = evaluate(&phi(), &[x, y, z]).unwrap();
        prop_assert!((g - phi_eval(&x, &y, &z)).abs() < 1e-12);
    }

    #[test]
    fn exponentials_preserve_phi(a in g2_element(), t in -2.0..2.0f64, x in vec7(), y in vec7(), z in vec7()) {
        let g = exp_frame(&a, t, &G2Frame::identity()).unwrap();
        prop_assert!(g.adaptation_residual() < 1e-10);
        let m = g.matrix();
        let lhs = phi_eval(&(m * x), &(m * y), &(m * z));
        prop_assert!((lhs - phi_eval(&x, &y, &z)).abs() < 1e-10 * (1.0 + x.norm() * y.norm() * z.norm()));
    }

    #[test]
    fn p_is_rotation_invariant(a in g2_element(), angle in 0.0..TAU) {
        let f = exp_frame(&a, 1.0, &G2Frame::identity()).unwrap();
        let plane = OrientedTwoPlane::from_frame(&f);
        let p = project_p(&plane);
        prop_assert!((p.norm() - 1.0).abs() < 1e-12);
        prop_assert!((project_p(&plane.rotated(angle)) - p).norm() < 1e-12);
    }

    #[test]
    fn p_is_g2_equivariant(a in g2_element(), b in g2_element()) {
        let plane = OrientedTwoPlane::from_frame(&exp_frame(&a, 1.0, &G2Frame::identity()).unwrap());
        let g = exp_frame(&b, 1.0, &G2Frame::identity()).unwrap();
        let moved = project_p(&plane.transformed(g.matrix()));
        prop_assert!((moved - g.matrix() * project_p(&plane)).norm() < 1e-11);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn invariants_are_gauge_invariant(u in unitary()) {
        let ab = binormal_ab();
        let before = invariants_of(ab);
        let after = invariants_of(&gauge_transform(ab, &u).unwrap());
        for (p, q) in before.nodes.iter().zip(&after.nodes) {
            prop_assert!((p.a - q.a).abs() < 1e-12);
            prop_assert!((p.b - q.b).abs() < 1e-12);
            prop_assert!((p.rho_abs - q.rho_abs).abs() < 1e-12);
        }
        prop_assert_eq!(before.classification, after.classification);
    }

    #[test]
    fn invariants_are_nonnegative(u in unitary()) {
        let inv = invariants_of(&gauge_transform(binormal_ab(), &u).unwrap());
        prop_assert!(inv.nodes.iter().all(|n| n.a >= 0.0 && n.b >= 0.0 && n.rho_abs >= 0.0));
    }

    #[test]
    fn fiber_action_closes_orbits(alpha in -1.0..1.0f64, beta in -1.0..1.0f64, t in 0.2..4.0f64, angle in 0.0..TAU, shift in 0.0..TAU, k in 0.3..3.0f64) {
        prop_assume!((t - ASYMPTOTE_SLOPE).abs() > 1e-2);
        let x = round_bundle_map(k, [alpha, beta, t, angle]).unwrap();
        let y = round_bundle_map(k, [alpha, beta, t, angle + shift]).unwrap();
        // the rotated sample lies on the same level set and the same circle about u
        prop_assert!(hl_implicit_residual(&y, k).abs() < 1e-12);
        let u = RoundS2.frame(alpha, beta).column(4).into_owned();
        prop_assert!((x.dot(&u) - y.dot(&u)).abs() < 1e-12 * (1.0 + x.norm()));
        prop_assert!((x.norm() - y.norm()).abs() < 1e-12 * (1.0 + x.norm()));
        // a full turn returns the sample
        let z = round_bundle_map(k, [alpha, beta, t, angle + TAU]).unwrap();
        prop_assert!((z - x).norm() < 1e-12 * (1.0 + x.norm()));
    }

    #[test]
    fn k_scales_samples(alpha in -1.0..1.0f64, beta in -1.0..1.0f64, t in 0.2..4.0f64, angle in 0.0..TAU, k in 0.3..3.0f64, lambda in 0.2..5.0f64) {
        prop_assume!((t - ASYMPTOTE_SLOPE).abs() > 1e-2);
        let x = round_bundle_map(k, [alpha, beta, t, angle]).unwrap();
        let y = round_bundle_map(lambda * k, [alpha, beta, t, angle]).unwrap();
        prop_assert!((y - x * lambda).norm() < 1e-12 * y.norm());
    }

    #[test]
    fn profile_points_satisfy_implicit_equation(t in 0.02..8.0f64, k in 0.1..4.0f64) {
        prop_assume!((t - ASYMPTOTE_SLOPE).abs() > 1e-3);
        let (z, w) = profile_point(t, k).unwrap();
        prop_assert!(implicit_residual(z, w, k).abs() < 1e-10);
        prop_assert!(z > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn ruled_cone_residual_is_scale_invariant(lambda in 0.1..10.0f64) {
        let lift = binormal_fixture().unwrap().lift;
        let r: Vec<(f64, f64)> = vec![(1.0, 0.0), (0.0, 1.0), (0.6, 0.8), (-0.3, 0.5)];
        let scaled: Vec<(f64, f64)> = r.iter().map(|&(a, b)| (lambda * a, lambda * b)).collect();
        let base = coassociativity_residual(&gamma_construction(&lift, &r).unwrap(), 1e-5);
        let other = coassociativity_residual(&gamma_construction(&lift, &scaled).unwrap(), 1e-5);
        prop_assert!((base.max() - other.max()).abs() < 1e-10);
        prop_assert!(other.passed);
    }

    #[test]
    fn framing_is_calibrated(alpha in -1.0..1.0f64, beta in -1.0..1.0f64, t in 0.2..4.0f64, angle in 0.0..TAU) {
        prop_assume!((t - ASYMPTOTE_SLOPE).abs() > 1e-2);
        let f = G2Frame::new(RoundS2.frame(alpha, beta)).unwrap();
        let h = verification_framing(&f, t, angle).unwrap();
        prop_assert!((star_phi_eval(&h) - 1.0).abs() < 1e-12);
    }
}
