mod common;

use std::sync::Arc;

use common::random;
use common::*;
use leray::cr::{CRChart, PolarSubmanifold};
use leray::residue::{
    check_transition, d_ds, decompose, iterate_ds, laurent_expand, multi_operator, reduce_pole, residue_class, residue_multi,
    residue_simple, SIGN_CONVENTION,
};
use leray::{AdaptedFrame, Coordinates, DifferentialForm, Divisor, Error, Expr, SemiMeromorphicForm, SmoothMap};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn same(a: &DifferentialForm, b: &DifferentialForm) -> bool {
    a.sub(b).unwrap().simplify().is_zero()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn plane_divisor(order: u32) -> Divisor {
    let c = plane();
    let chart = standard_chart(&c, 1, 0);
    divisor(&chart, map(&point_coords(), &c, &["0", "0"]), "z", order)
}

fn over_z(numerator: &str, order: u32) -> SemiMeromorphicForm {
    let d = plane_divisor(order);
    SemiMeromorphicForm::simple(form(&plane(), numerator), d).unwrap()
}

fn value(r: &leray::ResidueResult) -> Expr {
    r.form.as_scalar().unwrap()
}

fn t3_divisor() -> Divisor {
    let c = t3();
    let chart = standard_chart(&c, 1, 1);
    divisor(&chart, map(&circle_coords(), &c, &["0", "0", "y"]), "z", 1)
}

fn ab() -> Arc<Coordinates> {
    Arc::new(Coordinates::new(&["a", "b"]).unwrap())
}

/// `S = {z1 = 0}` in `ℂ²`, parametrized by `(a, b) ↦ (0, 0, a, b)`.
fn c2_divisor(s: &str) -> Divisor {
    let c = c2();
    let chart = standard_chart(&c, 2, 0);
    divisor(&chart, map(&ab(), &c, &["0", "0", "a", "b"]), s, 1)
}

/// `ds/s ∧ ψ + θ` as a numerator over `s`.
fn split_numerator(d: &Divisor, psi: &DifferentialForm, theta: &DifferentialForm) -> DifferentialForm {
    d.frame.ds().wedge(psi).unwrap().add(&theta.scale(d.s())).unwrap()
}

// ---- examples ----

#[test]
fn decompose_examples() {
    let fr = plane_divisor(1).frame;
    let c = plane();
    let (a, b) = decompose(&form(&c, "exp(z)*dz"), &fr).unwrap();
    assert!(a.is_zero());
    assert_eq!(b.as_scalar().unwrap(), scalar(&c, "exp(z)"));
    let (a, b) = decompose(&form(&c, "dzbar"), &fr).unwrap();
    assert_eq!(a, form(&c, "dzbar"));
    assert!(b.is_zero());

    let c = t3();
    let fr = t3_divisor().frame;
    let (a, b) = decompose(&form(&c, "x3*dz^dx3"), &fr).unwrap();
    assert!(a.is_zero());
    assert_eq!(b, form(&c, "x3*dx3"));
}

#[test]
fn d_ds_examples() {
    let fr = plane_divisor(1).frame;
    let c = plane();
    let f = |t: &str| DifferentialForm::scalar(&c, scalar(&c, t));
    assert_eq!(d_ds(&f("exp(z)"), &fr).unwrap(), f("exp(z)"));
    assert!(d_ds(&f("zbar"), &fr).unwrap().is_zero());
    // ½(∂/∂x1 − i ∂/∂x2) x1² = x1
    assert_eq!(d_ds(&f("x1^2"), &fr).unwrap(), f("x1"));
    assert!(matches!(d_ds(&form(&c, "dz"), &fr), Err(Error::FrameViolated(_))));
}

#[test]
fn iterate_ds_examples() {
    let fr = plane_divisor(1).frame;
    let c = plane();
    let w = form(&c, "z^3*dz");
    assert_eq!(iterate_ds(&w, &fr, 2).unwrap().as_scalar().unwrap(), scalar(&c, "6*z"));
    assert_eq!(iterate_ds(&w, &fr, 0).unwrap(), decompose(&w, &fr).unwrap().1);
    for r in 0..4 {
        assert!(iterate_ds(&form(&c, "dzbar"), &fr, r).unwrap().is_zero());
    }
}

#[test]
fn simple_residue_examples() {
    let r = residue_simple(&over_z("dz", 1)).unwrap();
    assert_eq!(value(&r), Expr::one());
    assert!(r.closed_input.is_zero() && r.closed_output.is_zero());

    let c = t3();
    let phi = SemiMeromorphicForm::simple(form(&c, "dz^dx3"), t3_divisor()).unwrap();
    let r = residue_simple(&phi).unwrap();
    assert_eq!(r.form, DifferentialForm::dx(&circle_coords(), 0));
    assert_eq!(r.cr_output, Some(true));

    assert!(matches!(residue_simple(&over_z("dz", 2)), Err(Error::PoleOrder(_))));
    assert_eq!(residue_simple(&over_z("x1*dz", 1)), Err(Error::NotClosed));
}

#[test]
fn residue_class_examples() {
    for (num, want) in [("exp(z)*dz", 1), ("z*dz", 1), ("dz", 0)] {
        assert_eq!(value(&residue_class(&over_z(num, 2)).unwrap()), Expr::int(want), "{num}");
    }
    // agrees with the simple residue at order one
    let phi = over_z("exp(2*z)*dz", 1);
    assert_eq!(residue_class(&phi).unwrap(), residue_simple(&phi).unwrap());
    assert_eq!(residue_class(&over_z("x2*dz", 3)), Err(Error::NotClosed));
}

#[test]
fn reduce_pole_examples() {
    let c = plane();
    let phi = over_z("exp(z)*dz", 2);
    let red = reduce_pole(&phi).unwrap();
    assert!(red.identity_numerator(&phi).unwrap().is_zero());
    assert_eq!(red.reduced.omega, form(&c, "exp(z)*dz"));
    assert_eq!(red.reduced.divisors[0].order, 1);
    assert_eq!(red.rho.omega.as_scalar().unwrap(), scalar(&c, "-exp(z)"));
    assert_eq!(value(&residue_simple(&red.reduced).unwrap()), Expr::one());

    let phi = over_z("dz", 2);
    let red = reduce_pole(&phi).unwrap();
    assert!(red.reduced.omega.is_zero());
    assert_eq!(red.rho.omega.as_scalar().unwrap(), Expr::int(-1));
    assert_eq!(value(&residue_simple(&red.reduced).unwrap()), Expr::zero());

    let phi = over_z("z^2*dz", 3);
    let once = reduce_pole(&phi).unwrap();
    let twice = reduce_pole(&once.reduced).unwrap();
    assert!(once.identity_numerator(&phi).unwrap().is_zero());
    assert!(twice.identity_numerator(&once.reduced).unwrap().is_zero());
    assert_eq!(value(&residue_simple(&twice.reduced).unwrap()), Expr::one());

    assert!(matches!(reduce_pole(&over_z("dz", 1)), Err(Error::PoleOrder(_))));
}

#[test]
fn laurent_examples() {
    let l = laurent_expand(&over_z("exp(z)*dz", 3)).unwrap();
    assert_eq!(l.principal.len(), 2);
    assert_eq!(l.principal.iter().map(|p| p.0).collect::<Vec<_>>(), vec![2, 1]);
    assert!(l.reconstruction.is_zero());
    let last = SemiMeromorphicForm::simple(l.simple_part, plane_divisor(1)).unwrap();
    assert_eq!(value(&residue_simple(&last).unwrap()), Expr::ratio(1, 2));

    let l = laurent_expand(&over_z("dz", 1)).unwrap();
    assert!(l.principal.is_empty());
    assert_eq!(l.simple_part, form(&plane(), "dz"));

    let l = laurent_expand(&over_z("(1 + 5*z)*dz", 2)).unwrap();
    let last = SemiMeromorphicForm::simple(l.simple_part, plane_divisor(1)).unwrap();
    assert_eq!(value(&residue_simple(&last).unwrap()), Expr::int(5));
}

fn c2_point_divisors(q1: u32, q2: u32) -> (Vec<Divisor>, SmoothMap) {
    let c = c2();
    let chart = standard_chart(&c, 2, 0);
    let d1 = divisor(&chart, map(&plane(), &c, &["0", "0", "x1", "x2"]), "z1", q1);
    let d2 = divisor(&chart, map(&plane(), &c, &["x1", "x2", "0", "0"]), "z2", q2);
    (vec![d1, d2], map(&point_coords(), &c, &["0", "0", "0", "0"]))
}

#[test]
fn residue_multi_examples() {
    let c = c2();
    let (ds, locus) = c2_point_divisors(1, 1);
    let phi = SemiMeromorphicForm::new(form(&c, "dz1^dz2"), ds).unwrap();
    let r = residue_multi(&phi, &locus).unwrap();
    // one transposition: (-1)^{m(m-1)/2} with m = 2
    assert_eq!(value(&r), Expr::int(-1));
    assert_eq!(r.sign_convention, SIGN_CONVENTION);

    let (ds, locus) = c2_point_divisors(2, 2);
    let phi = SemiMeromorphicForm::new(form(&c, "z1*z2*exp(z1 + z2)*dz1^dz2"), ds).unwrap();
    assert_eq!(value(&residue_multi(&phi, &locus).unwrap()), Expr::int(-1));

    let (ds, locus) = c2_point_divisors(1, 1);
    // the operator kills it, but the form itself is not closed
    assert!(multi_operator(&form(&c, "dz1bar^dz2"), &ds).unwrap().is_zero());
    let phi = SemiMeromorphicForm::new(form(&c, "dz1bar^dz2"), ds).unwrap();
    assert_eq!(residue_multi(&phi, &locus), Err(Error::NotClosed));
}

#[test]
fn residue_multi_rejects_tangent_divisors() {
    let c = c2();
    let chart = standard_chart(&c, 2, 0);
    let (mut ds, locus) = c2_point_divisors(1, 1);
    let s = scalar(&c, "z1 + z2");
    let sub = PolarSubmanifold::new(&chart, map(&plane(), &c, &["x1", "x2", "-x1", "-x2"]), s.clone()).unwrap();
    ds[1] = Divisor::new(sub, AdaptedFrame::new(&c, s, 2, 3).unwrap(), 1).unwrap();
    let phi = SemiMeromorphicForm::new(form(&c, "dz1^dz2"), ds).unwrap();
    assert!(matches!(residue_multi(&phi, &locus), Err(Error::NotTransversal(_))));
}

#[test]
fn transition_functions() {
    let c = t3();
    let d = c.sample_domain();
    let z = scalar(&c, "z");
    let g = scalar(&c, "2 + cos(x3)");
    assert!(check_transition(&g.mul(&z), &z, &g, &d).unwrap().is_zero());
    assert!(!check_transition(&z, &z, &g, &d).unwrap().is_zero());
    let g0 = scalar(&c, "x3 - x3");
    assert!(matches!(check_transition(&z, &z, &g0, &d), Err(Error::FrameViolated(_))));
}

// ---- invariants ----

proptest! {
    #![proptest_config(config(25))]

    #[test]
    fn decomposition_reconstructs(seed in any::<u64>(), p in 1usize..=3, kind in 0usize..3) {
        let mut g = rng(seed);
        let c = c2();
        let s = scalar(&c, ["z1", "z1 + z1^2", "3*z1 - i*z1*x3"][kind]);
        let fr = AdaptedFrame::new(&c, s, 0, 1).unwrap();
        let w = random::form(&mut g, &c, p);
        let (a, b) = decompose(&w, &fr).unwrap();
        prop_assert!(same(&w, &a.add(&fr.ds().wedge(&b).unwrap()).unwrap()));
        prop_assert!(a.contract(fr.dual()).unwrap().simplify().is_zero());
    }

    #[test]
    fn residue_depends_only_on_psi(seed in any::<u64>(), p in 1usize..=3) {
        let mut g = rng(seed);
        let c = c2();
        let d = c2_divisor("z1");
        let psi = random::closed_form(&mut g, &c, p - 1);
        let theta = random::closed_form(&mut g, &c, p);
        let phi = SemiMeromorphicForm::simple(split_numerator(&d, &psi, &theta), d.clone()).unwrap();
        let r = residue_simple(&phi).unwrap();
        prop_assert!(same(&r.form, &psi.pullback(d.sub.param()).unwrap()));
        prop_assert!(r.closed_output.is_zero());
    }

    #[test]
    fn residue_ignores_unit_factor(seed in any::<u64>(), p in 1usize..=3) {
        let mut g = rng(seed);
        let c = c2();
        let d = c2_divisor("z1");
        let psi = random::closed_form(&mut g, &c, p - 1);
        let theta = random::closed_form(&mut g, &c, p);
        let omega = split_numerator(&d, &psi, &theta);
        let q = random::real_poly(&mut g, 4, 2, 1);
        let h = Expr::one().add(&q.mul(&q));
        let hs = h.mul(d.s());
        let sub = PolarSubmanifold::new(d.sub.host(), d.sub.param().clone(), hs.clone()).unwrap();
        let dh = Divisor::new(sub, AdaptedFrame::new(&c, hs, 0, 1).unwrap(), 1).unwrap();
        let a = residue_simple(&SemiMeromorphicForm::simple(omega.clone(), d).unwrap()).unwrap();
        let b = residue_simple(&SemiMeromorphicForm::simple(omega.scale(&h), dh).unwrap()).unwrap();
        prop_assert!(a.form.sub(&b.form).unwrap().vanishes().is_zero());
    }

    #[test]
    fn residue_of_wedge_with_closed_form(seed in any::<u64>(), p in 1usize..=2, r in 0usize..=2) {
        let mut g = rng(seed);
        let c = c2();
        let d = c2_divisor("z1");
        let psi = random::closed_form(&mut g, &c, p - 1);
        let theta = random::closed_form(&mut g, &c, p);
        let chi = random::closed_form(&mut g, &c, r);
        let omega = split_numerator(&d, &psi, &theta);
        let lhs = residue_simple(&SemiMeromorphicForm::simple(omega.wedge(&chi).unwrap(), d.clone()).unwrap()).unwrap();
        let res = residue_simple(&SemiMeromorphicForm::simple(omega, d.clone()).unwrap()).unwrap();
        let rhs = res.form.wedge(&chi.pullback(d.sub.param()).unwrap()).unwrap();
        prop_assert!(same(&lhs.form, &rhs));
    }

    #[test]
    fn two_sided_product_formula(seed in any::<u64>(), p1 in 1usize..=2, p2 in 1usize..=2) {
        let mut g = rng(seed);
        let c = c2();
        let d = c2_divisor("z1");
        let ds = d.frame.ds();
        let (psi1, theta1) = (random::closed_form(&mut g, &c, p1 - 1), random::closed_form(&mut g, &c, p1));
        let (psi2, theta2) = (random::closed_form(&mut g, &c, p2 - 1), random::closed_form(&mut g, &c, p2));
        let w1 = split_numerator(&d, &psi1, &theta1);
        let w2 = split_numerator(&d, &psi2, &theta2);
        // φ₁∧φ₂ = ds/s ∧ (ψ₁∧θ₂ + (−1)^{p₁} θ₁∧ψ₂) + θ₁∧θ₂
        let sign = if p1 % 2 == 0 { 1 } else { -1 };
        let mixed = psi1.wedge(&theta2).unwrap().add(&theta1.wedge(&psi2).unwrap().scale(&Expr::int(sign))).unwrap();
        let product = split_numerator(&d, &mixed, &theta1.wedge(&theta2).unwrap());
        prop_assert!(same(&product.scale(d.s()), &w1.wedge(&w2).unwrap()));

        // φ₁∧ds/s = θ₁∧ds/s and ds/s∧φ₂ = ds∧θ₂/s
        let left = theta1.wedge(&ds).unwrap();
        let right = ds.wedge(&theta2).unwrap();
        prop_assert!(same(&left.scale(d.s()), &w1.wedge(&ds).unwrap()));
        prop_assert!(same(&right.scale(d.s()), &ds.wedge(&w2).unwrap()));

        let res = |w: DifferentialForm| residue_simple(&SemiMeromorphicForm::simple(w, d.clone()).unwrap()).unwrap().form;
        let lhs = res(product);
        let rhs = res(left).wedge(&res(w2)).unwrap().add(&res(w1).wedge(&res(right)).unwrap()).unwrap();
        prop_assert!(same(&lhs, &rhs));
    }

    #[test]
    fn residue_commutes_with_transversal_pullback(seed in any::<u64>(), p in 1usize..=3) {
        // F(z1, z2) = (z1 + z2², z2), S* = {z1 = −z2²}; F maps S* onto S
        // compatibly with both parametrizations.
        let mut g = rng(seed);
        let c = c2();
        let d = c2_divisor("z1");
        let psi = random::closed_form(&mut g, &c, p - 1);
        let theta = random::closed_form(&mut g, &c, p);
        let omega = split_numerator(&d, &psi, &theta);
        let f = map(&c, &c, &["x1 + x3^2 - x4^2", "x2 + 2*x3*x4", "x3", "x4"]);
        let s_star = f.pull_scalar(d.s()).unwrap();
        let param = map(&ab(), &c, &["b^2 - a^2", "-2*a*b", "a", "b"]);
        let chart = standard_chart(&c, 2, 0);
        let sub = PolarSubmanifold::new(&chart, param, s_star.clone()).unwrap();
        let d_star = Divisor::new(sub, AdaptedFrame::new(&c, s_star, 0, 1).unwrap(), 1).unwrap();
        let pulled = SemiMeromorphicForm::simple(omega.pullback(&f).unwrap(), d_star).unwrap();
        let a = residue_simple(&pulled).unwrap();
        let b = residue_simple(&SemiMeromorphicForm::simple(omega, d).unwrap()).unwrap();
        prop_assert!(same(&a.form, &b.form));
    }

    #[test]
    fn residue_vanishes_where_phi_does(seed in any::<u64>(), p in 2usize..=3) {
        // Σ₁ = {x4 = 0}; ψ, θ lie in the ideal generated by x4 and dx4
        let mut g = rng(seed);
        let c = c2();
        let d = c2_divisor("z1");
        let x4 = DifferentialForm::scalar(&c, Expr::var(3));
        let psi = x4.wedge(&random::form(&mut g, &c, p - 2)).unwrap().d();
        let theta = x4.wedge(&random::form(&mut g, &c, p - 1)).unwrap().d();
        let omega = split_numerator(&d, &psi, &theta);
        let sigma = map(&Arc::new(Coordinates::numbered(3)), &c, &["x1", "x2", "x3", "0"]);
        prop_assert!(omega.pullback(&sigma).unwrap().simplify().is_zero());
        let r = residue_simple(&SemiMeromorphicForm::simple(omega, d).unwrap()).unwrap();
        let on_both = map(&Arc::new(Coordinates::new(&["a"]).unwrap()), &ab(), &["a", "0"]);
        prop_assert!(r.form.pullback(&on_both).unwrap().simplify().is_zero());
    }

    #[test]
    fn pointwise_estimate(seed in any::<u64>(), p in 1usize..=3) {
        let mut g = rng(seed);
        let c = c2();
        let q = random::real_poly(&mut g, 4, 2, 1);
        let h = Expr::one().add(&q.mul(&q));
        let hs = h.mul(&scalar(&c, "z1"));
        let chart = standard_chart(&c, 2, 0);
        let sub = PolarSubmanifold::new(&chart, map(&ab(), &c, &["0", "0", "a", "b"]), hs.clone()).unwrap();
        let d = Divisor::new(sub, AdaptedFrame::new(&c, hs, 0, 1).unwrap(), 1).unwrap();
        let omega = split_numerator(&d, &random::closed_form(&mut g, &c, p - 1), &random::closed_form(&mut g, &c, p));
        let r = residue_simple(&SemiMeromorphicForm::simple(omega.clone(), d.clone()).unwrap()).unwrap();
        let ds = d.frame.ds();
        for _ in 0..32 {
            let (a, b) = (g.gen_range(-1.5..1.5), g.gen_range(-1.5..1.5));
            let x = [0.0, 0.0, a, b];
            let lhs = r.form.norm_at(&[a, b]).unwrap();
            let rhs = omega.norm_at(&x).unwrap() / ds.norm_at(&x).unwrap();
            prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-14, "{} > {}", lhs, rhs);
        }
    }

    #[test]
    fn reduction_bookkeeping(seed in any::<u64>(), q in 2u32..=4) {
        let mut g = rng(seed);
        let c = plane();
        let z = scalar(&c, "z");
        let f = random::holomorphic(&mut g, &[z], 3, 4);
        let d = plane_divisor(q);
        let phi = SemiMeromorphicForm::simple(form(&c, "dz").scale(&f), d).unwrap();
        let mut cur = phi.clone();
        while cur.divisors[0].order > 1 {
            let red = reduce_pole(&cur).unwrap();
            prop_assert!(red.identity_numerator(&cur).unwrap().is_zero());
            cur = red.reduced;
        }
        let full = residue_class(&phi).unwrap();
        prop_assert_eq!(value(&full), value(&residue_simple(&cur).unwrap()));
        prop_assert!(laurent_expand(&phi).unwrap().reconstruction.is_zero());
    }

    #[test]
    fn iterated_residue_is_nested(seed in any::<u64>(), q1 in 1u32..=3, q2 in 1u32..=3, with_exp in any::<bool>()) {
        let mut g = rng(seed);
        let c = c2();
        let zs = [scalar(&c, "z1"), scalar(&c, "z2")];
        let mut f = random::holomorphic(&mut g, &zs, 3, 3);
        if with_exp {
            f = f.mul(&scalar(&c, "exp(z1 - 2*z2)"));
        }
        let omega = form(&c, "dz1^dz2").scale(&f);
        let (ds, locus) = c2_point_divisors(q1, q2);
        let multi = residue_multi(&SemiMeromorphicForm::new(omega.clone(), ds.clone()).unwrap(), &locus).unwrap();

        // last divisor first: residue along z2 on ℂ², then along z on the plane
        let inner = residue_class(&SemiMeromorphicForm::simple(omega.clone(), ds[1].clone()).unwrap()).unwrap();
        let outer = residue_class(&SemiMeromorphicForm::simple(inner.form, plane_divisor(q1)).unwrap()).unwrap();
        prop_assert_eq!(value(&multi).simplify(), value(&outer).simplify());

        let swapped = vec![ds[1].clone(), ds[0].clone()];
        let rev = residue_multi(&SemiMeromorphicForm::new(omega, swapped).unwrap(), &locus).unwrap();
        prop_assert!(value(&rev).add(&value(&multi)).simplify().is_zero());
    }
}

#[test]
fn residue_on_induced_cr_structure() {
    // T³ divisor with a declared empty induced frame of type (0, 1)
    let c = t3();
    let d = t3_divisor();
    let induced = CRChart::new(&circle_coords(), 0, 1, Vec::new()).unwrap();
    let sub = d.sub.clone().with_induced(induced).unwrap();
    let d = Divisor::new(sub, d.frame, 1).unwrap();
    let phi = SemiMeromorphicForm::simple(form(&c, "exp(z)*(2 + sin(x3))*dz^dx3"), d).unwrap();
    let r = residue_simple(&phi).unwrap();
    assert_eq!(r.cr_output, Some(true));
    assert!(same(&r.form, &form(&circle_coords(), "(2 + sin(y))*dy")));
}
