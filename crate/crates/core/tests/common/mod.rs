#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use leray::chains::{cube, Cell, Chain};
use leray::cr::{CRChart, PolarSubmanifold};
use leray::expr::parse_ast;
use leray::lang::Env;
use leray::{Coordinates, DifferentialForm, Divisor, Expr, SmoothMap, VectorField};
use num_complex::Complex64;

pub const TWO_PI_I: Complex64 = Complex64 { re: 0.0, im: 2.0 * PI };

pub fn plane() -> Arc<Coordinates> {
    Arc::new(Coordinates::new(&["x1", "x2"]).unwrap().with_complex("z", "x1", "x2").unwrap())
}

pub fn c2() -> Arc<Coordinates> {
    Arc::new(
        Coordinates::new(&["x1", "x2", "x3", "x4"])
            .unwrap()
            .with_complex("z1", "x1", "x2")
            .unwrap()
            .with_complex("z2", "x3", "x4")
            .unwrap(),
    )
}

/// Unit-periodic `x1, x2, x3` with `z = x1 + i x2`.
pub fn t3() -> Arc<Coordinates> {
    let mut c = Coordinates::new(&["x1", "x2", "x3"]).unwrap();
    for n in ["x1", "x2", "x3"] {
        c = c.with_period(n, 1.0).unwrap();
    }
    Arc::new(c.with_complex("z", "x1", "x2").unwrap())
}

pub fn t2() -> Arc<Coordinates> {
    let c = Coordinates::new(&["x1", "x2"]).unwrap().with_period("x1", 1.0).unwrap().with_period("x2", 1.0).unwrap();
    Arc::new(c.with_complex("z", "x1", "x2").unwrap())
}

pub fn point_coords() -> Arc<Coordinates> {
    Arc::new(Coordinates::new::<&str>(&[]).unwrap())
}

pub fn circle_coords() -> Arc<Coordinates> {
    Arc::new(Coordinates::new(&["y"]).unwrap().with_period("y", 1.0).unwrap())
}

pub fn scalar(c: &Arc<Coordinates>, text: &str) -> Expr {
    Env::shared(c).eval_scalar(&parse_ast(text).unwrap()).unwrap()
}

pub fn form(c: &Arc<Coordinates>, text: &str) -> DifferentialForm {
    Env::shared(c).eval_form(&parse_ast(text).unwrap()).unwrap()
}

/// Chart whose frame is `∂/∂z̄` for each complex coordinate.
pub fn standard_chart(c: &Arc<Coordinates>, n: usize, k: usize) -> CRChart {
    let frame = c
        .complex_coords()
        .iter()
        .map(|z| VectorField::d_dzbar(c, &z.name).unwrap())
        .collect();
    CRChart::new(c, n, k, frame).unwrap()
}

pub fn map(source: &Arc<Coordinates>, target: &Arc<Coordinates>, comps: &[&str]) -> SmoothMap {
    let comps = comps.iter().map(|t| scalar(source, t)).collect();
    SmoothMap::new(source, target, comps).unwrap()
}

pub fn divisor(chart: &CRChart, param: SmoothMap, s: &str, order: u32) -> Divisor {
    let s = scalar(chart.coords(), s);
    let sub = PolarSubmanifold::new(chart, param, s).unwrap();
    Divisor::auto(sub, order).unwrap()
}

/// The point of a 0-dimensional parameter space.
pub fn point_chain() -> Chain {
    Chain::single(Cell::point(&point_coords(), vec![]).unwrap())
}

/// Identity cycle on the periodic circle `y`.
pub fn circle_chain() -> Chain {
    let m = SmoothMap::new(&cube(1), &circle_coords(), vec![Expr::var(0)]).unwrap();
    Chain::single(Cell::closed(m).unwrap())
}

pub fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol
}

pub mod random {
    use std::sync::Arc;

    use leray::{Blade, Coeff, Coordinates, DifferentialForm, Expr, SmoothMap, VectorField};
    use rand::seq::SliceRandom;
    use rand::Rng;

    fn monomial<R: Rng>(rng: &mut R, nvars: usize, max_deg: i32) -> Expr {
        let mut t = Expr::one();
        for i in 0..nvars {
            let k = rng.gen_range(0..=max_deg);
            t = t.mul(&Expr::var(i).powi(k as i64).unwrap());
        }
        t
    }

    /// Gaussian-rational polynomial.
    pub fn poly<R: Rng>(rng: &mut R, nvars: usize, max_terms: usize, max_deg: i32) -> Expr {
        let mut e = Expr::zero();
        for _ in 0..rng.gen_range(1..=max_terms) {
            let c = &Coeff::from_ratio(rng.gen_range(-5..=5), rng.gen_range(1..=3))
                + &(&Coeff::i() * &Coeff::from_int(rng.gen_range(-2..=2)));
            e = e.add(&monomial(rng, nvars, max_deg).scale(&c));
        }
        e
    }

    /// Real integer polynomial.
    pub fn real_poly<R: Rng>(rng: &mut R, nvars: usize, max_terms: usize, max_deg: i32) -> Expr {
        let mut e = Expr::zero();
        for _ in 0..rng.gen_range(1..=max_terms) {
            e = e.add(&monomial(rng, nvars, max_deg).scale(&Coeff::from_int(rng.gen_range(-3..=3))));
        }
        e
    }

    /// A polynomial, sometimes divided by a nonvanishing `1 + q²`.
    pub fn rational<R: Rng>(rng: &mut R, nvars: usize) -> Expr {
        let p = poly(rng, nvars, 3, 2);
        if rng.gen_bool(0.3) {
            let q = real_poly(rng, nvars, 2, 1);
            p.mul(&Expr::one().add(&q.mul(&q)).recip().unwrap())
        } else {
            p
        }
    }

    pub fn form<R: Rng>(rng: &mut R, c: &Arc<Coordinates>, degree: usize) -> DifferentialForm {
        let n = c.dim();
        if degree > n {
            return DifferentialForm::zero(c, degree);
        }
        let mut terms = Vec::new();
        let count = rng.gen_range(1..=3);
        for _ in 0..count {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(rng);
            idx.truncate(degree);
            if let Some((sign, blade)) = Blade::from_indices(&idx) {
                terms.push((blade, rational(rng, n).scale(&Coeff::from_int(sign as i64))));
            }
        }
        DifferentialForm::from_terms(c, degree, terms).unwrap()
    }

    /// `dμ` plus a constant-coefficient form; closed by construction.
    pub fn closed_form<R: Rng>(rng: &mut R, c: &Arc<Coordinates>, degree: usize) -> DifferentialForm {
        let n = c.dim();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(rng);
        idx.truncate(degree);
        let (sign, blade) = Blade::from_indices(&idx).unwrap();
        let k = Coeff::from_int(rng.gen_range(-3..=3) * sign as i64);
        let constant = DifferentialForm::from_terms(c, degree, [(blade, Expr::constant(k))]).unwrap();
        if degree == 0 {
            return constant;
        }
        form(rng, c, degree - 1).d().add(&constant).unwrap()
    }

    /// Polynomial in the given holomorphic coordinates.
    pub fn holomorphic<R: Rng>(rng: &mut R, zs: &[Expr], max_terms: usize, max_deg: i64) -> Expr {
        let mut e = Expr::zero();
        for _ in 0..rng.gen_range(1..=max_terms) {
            let c = &Coeff::from_ratio(rng.gen_range(-5..=5), rng.gen_range(1..=3))
                + &(&Coeff::i() * &Coeff::from_int(rng.gen_range(-2..=2)));
            let mut t = Expr::constant(c);
            for z in zs {
                t = t.mul(&z.powi(rng.gen_range(0..=max_deg)).unwrap());
            }
            e = e.add(&t);
        }
        e
    }

    pub fn polynomial_map<R: Rng>(rng: &mut R, source: &Arc<Coordinates>, target: &Arc<Coordinates>) -> SmoothMap {
        let comps = (0..target.dim()).map(|_| real_poly(rng, source.dim(), 3, 1)).collect();
        SmoothMap::new(source, target, comps).unwrap()
    }

    pub fn vector<R: Rng>(rng: &mut R, c: &Arc<Coordinates>) -> VectorField {
        let comps = (0..c.dim()).map(|_| poly(rng, c.dim(), 2, 2)).collect();
        VectorField::new(c, comps).unwrap()
    }
}

/// Property-test settings with a fixed seed, so every run sees the same cases.
pub fn config(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases,
        rng_seed: proptest::test_runner::RngSeed::Fixed(0x1e7a_5eed),
        failure_persistence: None,
        ..Default::default()
    }
}

/// `ℝ⁵` with coordinates `x, y, u, v, t`, `z = x + iy`, `w = u + iv`.
pub fn r5() -> Arc<Coordinates> {
    Arc::new(
        Coordinates::new(&["x", "y", "u", "v", "t"])
            .unwrap()
            .with_complex("z", "x", "y")
            .unwrap()
            .with_complex("w", "u", "v")
            .unwrap(),
    )
}

pub fn vector(c: &Arc<Coordinates>, text: &str) -> VectorField {
    Env::shared(c).eval_vector(&parse_ast(text).unwrap()).unwrap()
}

/// The frame `∂/∂z̄ − i z ∂/∂t + w f ∂/∂w`, `∂/∂w̄` with `f = x t + i y`.
pub fn lewy_chart() -> CRChart {
    let c = r5();
    let l1 = vector(&c, "D(zbar) - i*z*D(t) + w*(x*t + i*y)*D(w)");
    let l2 = vector(&c, "D(wbar)");
    CRChart::new(&c, 2, 1, vec![l1, l2]).unwrap()
}

/// `∂/∂z̄`, `∂/∂w̄ + z̄ ∂/∂t`, whose bracket is `∂/∂t`.
pub fn twisted_chart() -> CRChart {
    let c = r5();
    let l1 = vector(&c, "D(zbar)");
    let l2 = vector(&c, "D(wbar) + zbar*D(t)");
    CRChart::new(&c, 2, 1, vec![l1, l2]).unwrap()
}
