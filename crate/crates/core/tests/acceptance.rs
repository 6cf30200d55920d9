//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use common::random;
use common::*;
use leray::chains::{abel_sum, verify_residue_formula, Component, VerifyOptions};
use leray::cr::{check_cr_form, check_integrability, PolarSubmanifold};
use leray::residue::{laurent_expand, reduce_pole, residue_class, residue_multi, residue_simple};
use leray::{
    AdaptedFrame, Coeff, Coordinates, DifferentialForm, Divisor, Expr, SemiMeromorphicForm, VectorField, ZeroVerdict,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn same(a: &DifferentialForm, b: &DifferentialForm) -> bool {
    a.sub(b).unwrap().simplify().is_zero()
}

fn plane_divisor(order: u32) -> Divisor {
    let c = plane();
    divisor(&standard_chart(&c, 1, 0), map(&point_coords(), &c, &["0", "0"]), "z", order)
}

// ---- 1 ----

fn classical_residue_formula() -> Outcome {
    let start = Instant::now();
    let c = plane();
    let phi = SemiMeromorphicForm::simple(form(&c, "dz"), plane_divisor(1)).unwrap();
    let opts = VerifyOptions {
        radius: 0.5,
        order: 32,
        tolerance: 1e-10,
    };
    let r = verify_residue_formula(&phi, &point_chain(), opts, None).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    let err = (r.lhs - TWO_PI_I).norm();
    ensure(err <= 1e-10, || format!("|LHS - 2πi| = {err:e}"))?;
    ensure(r.abs_error <= 1e-10, || format!("|LHS - RHS| = {:e}", r.abs_error))?;
    ensure(elapsed < 1.0, || format!("took {elapsed:.3} s"))?;
    Ok(format!("|LHS - 2πi| = {err:.1e}, |LHS - RHS| = {:.1e}, {elapsed:.3} s", r.abs_error))
}

// ---- 2, 3 ----

/// Twenty numerators `p(z) = Σ c_k z^k` of degree at most five, with their
/// coefficient lists.
fn numerators() -> Vec<(Expr, Vec<Coeff>)> {
    let mut g = ChaCha8Rng::seed_from_u64(2);
    let z = scalar(&plane(), "z");
    (0..20)
        .map(|_| {
            let deg = g.gen_range(0..=5);
            let coeffs: Vec<Coeff> = (0..=deg)
                .map(|_| {
                    &Coeff::from_ratio(g.gen_range(-9..=9), g.gen_range(1..=7))
                        + &(&Coeff::i() * &Coeff::from_ratio(g.gen_range(-9..=9), g.gen_range(1..=7)))
                })
                .collect();
            let mut p = Expr::zero();
            for (k, ck) in coeffs.iter().enumerate() {
                p = p.add(&z.powi(k as i64).unwrap().scale(ck));
            }
            (p, coeffs)
        })
        .collect()
}

/// Coefficient of `1/z` in `p(z)/z^q`, read off the Taylor coefficients.
fn taylor_oracle(coeffs: &[Coeff], q: u32) -> Expr {
    coeffs.get(q as usize - 1).map(|c| Expr::constant(c.clone())).unwrap_or_else(Expr::zero)
}

fn over_z(p: &Expr, q: u32) -> SemiMeromorphicForm {
    SemiMeromorphicForm::simple(form(&plane(), "dz").scale(p), plane_divisor(q)).unwrap()
}

fn higher_order_oracle() -> Outcome {
    let mut checked = 0;
    for (i, (p, coeffs)) in numerators().iter().enumerate() {
        for q in 2..=4 {
            let got = residue_class(&over_z(p, q)).map_err(|e| e.to_string())?.form.as_scalar().unwrap();
            let want = taylor_oracle(coeffs, q);
            ensure(got == want, || format!("instance {i}, q = {q}: {got:?} vs {want:?}"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} exact matches"))
}

fn reduction_chain() -> Outcome {
    let mut steps = 0;
    for (i, (p, coeffs)) in numerators().iter().enumerate() {
        for q in 2..=4 {
            let phi = over_z(p, q);
            let mut cur = phi.clone();
            while cur.divisors[0].order > 1 {
                let red = reduce_pole(&cur).map_err(|e| e.to_string())?;
                let id = red.identity_numerator(&cur).unwrap();
                ensure(id.is_zero(), || format!("instance {i}, q = {q}: φ̂ − φ + dρ = {}", id.show()))?;
                cur = red.reduced;
                steps += 1;
            }
            let got = residue_simple(&cur).map_err(|e| e.to_string())?.form.as_scalar().unwrap();
            ensure(got == taylor_oracle(coeffs, q), || format!("instance {i}, q = {q}: final residue {got:?}"))?;
            let l = laurent_expand(&phi).map_err(|e| e.to_string())?;
            ensure(l.reconstruction == ZeroVerdict::Exact(true), || {
                format!("instance {i}, q = {q}: reconstruction {:?}", l.reconstruction)
            })?;
        }
    }
    Ok(format!("{steps} exact reduction steps, 60 reconstructions"))
}

// ---- 4 ----

fn factorial(n: i64) -> i64 {
    (1..=n).product()
}

/// Coefficient of `1/z` in `z^a e^z / z^q`.
fn laurent_1d(a: u32, q: u32) -> Coeff {
    let k = q as i64 - 1 - a as i64;
    if k < 0 {
        Coeff::zero()
    } else {
        Coeff::from_ratio(1, factorial(k))
    }
}

fn multivariable_residues() -> Outcome {
    let c = c2();
    let chart = standard_chart(&c, 2, 0);
    let locus = map(&point_coords(), &c, &["0", "0", "0", "0"]);
    let mut count = 0;
    for a in 0..=2 {
        for b in 0..=2 {
            let omega = form(&c, &format!("z1^{a}*z2^{b}*exp(z1 + z2)*dz1^dz2"));
            for q1 in 1..=3 {
                for q2 in 1..=3 {
                    let d1 = divisor(&chart, map(&plane(), &c, &["0", "0", "x1", "x2"]), "z1", q1);
                    let d2 = divisor(&chart, map(&plane(), &c, &["x1", "x2", "0", "0"]), "z2", q2);
                    let phi = SemiMeromorphicForm::new(omega.clone(), vec![d1, d2]).unwrap();
                    let got = residue_multi(&phi, &locus).map_err(|e| e.to_string())?.form.as_scalar().unwrap();
                    // (-1)^{m(m-1)/2} = -1 for m = 2
                    let want = Expr::constant(-(&laurent_1d(a, q1) * &laurent_1d(b, q2)));
                    ensure(got == want, || format!("a={a} b={b} q=({q1},{q2}): {got:?} vs {want:?}"))?;
                    count += 1;
                }
            }
        }
    }
    Ok(format!("{count} exact matches (sign -1, last divisor first)"))
}

// ---- 5 ----

fn cr_residue_formula_t3() -> Outcome {
    let c = t3();
    let chart = standard_chart(&c, 1, 1);
    let d = divisor(&chart, map(&circle_coords(), &c, &["0", "0", "y"]), "z", 1);
    let phi = SemiMeromorphicForm::simple(form(&c, "dz^dx3"), d).unwrap();
    let opts = VerifyOptions {
        radius: 0.5,
        order: 32,
        tolerance: 1e-8,
    };
    let r = verify_residue_formula(&phi, &circle_chain(), opts, None).map_err(|e| e.to_string())?;
    let err = (r.lhs - TWO_PI_I).norm();
    ensure(err <= 1e-8, || format!("|LHS - 2πi| = {err:e}"))?;
    let induced = phi.divisors[0].sub.induced_chart().unwrap();
    let rep = check_cr_form(&induced, &r.residue, r.residue.degree()).map_err(|e| e.to_string())?;
    ensure(rep.pass(), || "residue form fails the CR-form check".into())?;
    Ok(format!("|LHS - 2πi| = {err:.1e}, residue {} is CR", r.residue.show()))
}

// ---- 6 ----

fn abel_sums() -> Outcome {
    let start = Instant::now();
    let c = t3();
    let chart = standard_chart(&c, 1, 1);
    let y = circle_coords();

    // (a) a = 1/4 + i/4, b = 3/4 + i/2: 1/(z−a) − 1/(z−b) = (a − b)/((z−a)(z−b))
    let za = map(&y, &c, &["1/4", "1/4", "y"]);
    let zb = map(&y, &c, &["3/4", "1/2", "y"]);
    let d = divisor(&chart, za.clone(), "(z - (1/4 + i/4))*(z - (3/4 + i/2))", 1);
    let phi = SemiMeromorphicForm::simple(form(&c, "(-1/2 - i/4)*dz^dx3"), d).unwrap();
    let comps = [(za, circle_chain()), (zb, circle_chain())].map(|(locus, cycle)| Component { locus, cycle });
    let a = abel_sum(&phi, &comps, 32, 1e-10, false).map_err(|e| e.to_string())?;
    ensure(a.pass, || format!("(a) residue sum {:e}", a.sum.norm()))?;

    // (b) truncated ℘ with a double pole along z = 0
    let d = divisor(&chart, map(&y, &c, &["0", "0", "y"]), "z", 2);
    let omega = form(&c, "(1 + z^2*lattice_sum(w, 1, i, 20, 1/(z - w)^2 - 1/w^2))*dz^dx3");
    let phi = SemiMeromorphicForm::simple(omega, d.clone()).unwrap();
    let comp = Component {
        locus: d.sub.param().clone(),
        cycle: circle_chain(),
    };
    let b = abel_sum(&phi, &[comp], 32, 1e-6, false).map_err(|e| e.to_string())?;
    ensure(b.pass, || format!("(b) residue sum {:e}", b.sum.norm()))?;
    let elapsed = start.elapsed().as_secs_f64();
    ensure(elapsed < 30.0, || format!("took {elapsed:.1} s"))?;
    Ok(format!("(a) {:.1e}, (b) {:.1e}, {elapsed:.2} s", a.sum.norm(), b.sum.norm()))
}

// ---- 7 ----

fn numbered(n: usize) -> Arc<Coordinates> {
    Arc::new(Coordinates::numbered(n))
}

fn exterior_calculus() -> Outcome {
    let mut g = ChaCha8Rng::seed_from_u64(7);
    for i in 0..100 {
        let n = g.gen_range(1..=5);
        let c = numbered(n);
        let deg = g.gen_range(0..=n);
        let a = random::form(&mut g, &c, deg);
        ensure(a.d().d().simplify().is_zero(), || format!("d∘d, instance {i}"))?;
    }
    for i in 0..100 {
        let n = g.gen_range(1..=5);
        let c = numbered(n);
        let p = g.gen_range(0..=n.min(3));
        let a = random::form(&mut g, &c, p);
        let q = g.gen_range(0..=n.min(2));
        let b = random::form(&mut g, &c, q);
        let second = a.wedge(&b.d()).unwrap();
        let second = if p % 2 == 1 { second.neg() } else { second };
        let rhs = a.d().wedge(&b).unwrap().add(&second).unwrap();
        ensure(same(&a.wedge(&b).unwrap().d(), &rhs), || format!("Leibniz, instance {i}"))?;
    }
    for i in 0..100 {
        let n = g.gen_range(1..=5);
        let c = numbered(n);
        let (p, q) = (g.gen_range(0..=n.min(4)), g.gen_range(0..=n.min(4)));
        let a = random::form(&mut g, &c, p);
        let b = random::form(&mut g, &c, q);
        let ba = b.wedge(&a).unwrap();
        let ba = if (p * q) % 2 == 1 { ba.neg() } else { ba };
        ensure(same(&a.wedge(&b).unwrap(), &ba), || format!("graded commutativity, instance {i}"))?;
    }
    for i in 0..100 {
        let (k, n, m) = (g.gen_range(1..=3), g.gen_range(1..=4), g.gen_range(1..=4));
        let (sk, sn, sm) = (numbered(k), numbered(n), numbered(m));
        let f = random::polynomial_map(&mut g, &sk, &sn);
        let h = random::polynomial_map(&mut g, &sn, &sm);
        let deg = g.gen_range(0..=m.min(3));
        let a = random::form(&mut g, &sm, deg);
        let b = random::form(&mut g, &sm, 1);
        ensure(same(&a.d().pullback(&h).unwrap(), &a.pullback(&h).unwrap().d()), || {
            format!("pullback commutes with d, instance {i}")
        })?;
        let composed = a.pullback(&f.then(&h).unwrap()).unwrap();
        ensure(same(&composed, &a.pullback(&h).unwrap().pullback(&f).unwrap()), || {
            format!("pullback of a composite, instance {i}")
        })?;
        let lhs = a.wedge(&b).unwrap().pullback(&h).unwrap();
        let rhs = a.pullback(&h).unwrap().wedge(&b.pullback(&h).unwrap()).unwrap();
        ensure(same(&lhs, &rhs), || format!("pullback of a wedge, instance {i}"))?;
    }
    Ok("4 × 100 instances exact".into())
}

// ---- 8 ----

fn c2_divisor(s: Expr) -> Divisor {
    let c = c2();
    let chart = standard_chart(&c, 2, 0);
    let ab = Arc::new(Coordinates::new(&["a", "b"]).unwrap());
    let sub = PolarSubmanifold::new(&chart, map(&ab, &c, &["0", "0", "a", "b"]), s.clone()).unwrap();
    Divisor::new(sub, AdaptedFrame::new(&c, s, 0, 1).unwrap(), 1).unwrap()
}

fn split(d: &Divisor, psi: &DifferentialForm, theta: &DifferentialForm) -> DifferentialForm {
    d.frame.ds().wedge(psi).unwrap().add(&theta.scale(d.s())).unwrap()
}

fn residue_properties() -> Outcome {
    let c = c2();
    let d = c2_divisor(scalar(&c, "z1"));
    let res = |w: DifferentialForm, d: &Divisor| {
        residue_simple(&SemiMeromorphicForm::simple(w, d.clone()).unwrap()).map(|r| r.form)
    };
    let mut g = ChaCha8Rng::seed_from_u64(8);
    for i in 0..25 {
        let p = g.gen_range(1..=3);
        let psi = random::closed_form(&mut g, &c, p - 1);
        let theta = random::closed_form(&mut g, &c, p);
        let got = res(split(&d, &psi, &theta), &d).map_err(|e| e.to_string())?;
        ensure(same(&got, &psi.pullback(d.sub.param()).unwrap()), || format!("uniqueness, instance {i}"))?;
    }
    for i in 0..25 {
        let p = g.gen_range(1..=2);
        let r = g.gen_range(0..=2);
        let omega = split(&d, &random::closed_form(&mut g, &c, p - 1), &random::closed_form(&mut g, &c, p));
        let chi = random::closed_form(&mut g, &c, r);
        let lhs = res(omega.wedge(&chi).unwrap(), &d).map_err(|e| e.to_string())?;
        let rhs = res(omega, &d).unwrap().wedge(&chi.pullback(d.sub.param()).unwrap()).unwrap();
        ensure(same(&lhs, &rhs), || format!("product rule, instance {i}"))?;
    }
    let mut points = 0;
    for i in 0..10 {
        let q = random::real_poly(&mut g, 4, 2, 1);
        let h = Expr::one().add(&q.mul(&q));
        let dh = c2_divisor(h.mul(&scalar(&c, "z1")));
        let p = g.gen_range(1..=3);
        let omega = split(&dh, &random::closed_form(&mut g, &c, p - 1), &random::closed_form(&mut g, &c, p));
        let r = res(omega.clone(), &dh).map_err(|e| e.to_string())?;
        let ds = dh.frame.ds();
        for _ in 0..32 {
            let (a, b) = (g.gen_range(-1.5..1.5), g.gen_range(-1.5..1.5));
            let x = [0.0, 0.0, a, b];
            let lhs = r.norm_at(&[a, b]).unwrap();
            let rhs = omega.norm_at(&x).unwrap() / ds.norm_at(&x).unwrap();
            ensure(lhs <= rhs * (1.0 + 1e-12) + 1e-14, || format!("estimate, instance {i}: {lhs} > {rhs}"))?;
            points += 1;
        }
    }
    Ok(format!("25 uniqueness + 25 product-rule instances exact, estimate at {points} points"))
}

// ---- 9 ----

fn integrability_detector() -> Outcome {
    let lewy = check_integrability(&lewy_chart()).map_err(|e| e.to_string())?;
    ensure(lewy.integrable(), || "the Lewy frame was rejected".into())?;
    let chart = twisted_chart();
    let rep = check_integrability(&chart).map_err(|e| e.to_string())?;
    let fail: Vec<_> = rep.failures().collect();
    ensure(fail.len() == 1, || format!("{} failing pairs", fail.len()))?;
    let dt = VectorField::partial(chart.coords(), 4);
    ensure(fail[0].bracket == dt, || format!("bracket {:?}", fail[0].bracket))?;
    Ok(format!("Lewy accepted; twisted rejected with [L{}, L{}] = ∂/∂t", fail[0].i + 1, fail[0].j + 1))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("classical residue formula", classical_residue_formula),
        ("higher-order pole oracle", higher_order_oracle),
        ("pole reduction chain", reduction_chain),
        ("multivariable residues", multivariable_residues),
        ("CR residue formula on T³", cr_residue_formula_t3),
        ("Abel sums", abel_sums),
        ("exterior calculus", exterior_calculus),
        ("residue-form properties", residue_properties),
        ("integrability detector", integrability_detector),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {detail}", i + 1)
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
