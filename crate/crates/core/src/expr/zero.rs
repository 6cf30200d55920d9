//! Cancellation and zero recognition.
//!
//! For expressions built only from coordinates, `π` and polynomial bases the
//! test is exact: everything is brought over a common denominator, and a
//! vanishing numerator is a proof. Expressions with `exp`, `sin` or `cos`, and
//! rational expressions too large to put over one denominator, are sampled at
//! deterministic pseudo-random points instead.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{add_term, normalize_term, Atom, Coeff, Expr, Monomial};

/// Number of points a sampled verdict is based on.
pub const SAMPLE_COUNT: usize = 64;
/// Relative tolerance for a sampled zero: `|e(p)| ≤ tol · max(1, Σ|term(p)|)`.
pub const ZERO_TOLERANCE: f64 = 1e-9;

/// Upper bound on the estimated size of a common-denominator numerator.
pub(super) const TOGETHER_BUDGET: usize = 40_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZeroVerdict {
    /// Decided symbolically.
    Exact(bool),
    /// Decided by sampling.
    Probable(bool),
    /// Too few sample points could be evaluated.
    Undecidable,
}

impl ZeroVerdict {
    pub fn is_zero(self) -> bool {
        matches!(self, ZeroVerdict::Exact(true) | ZeroVerdict::Probable(true))
    }

    pub fn is_nonzero(self) -> bool {
        matches!(self, ZeroVerdict::Exact(false) | ZeroVerdict::Probable(false))
    }
}

/// Axis-aligned box that sample points are drawn from.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub seed: u64,
}

impl SampleDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        SampleDomain { lo, hi, seed: 0x5eed_1e7a }
    }

    /// `[-1.3, 1.7]^dim`; deliberately not symmetric about the origin.
    pub fn default_box(dim: usize) -> Self {
        SampleDomain::new(vec![-1.3; dim], vec![1.7; dim])
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Deterministic stream of points.
    pub fn points(&self, n: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..n)
            .map(|_| {
                self.lo
                    .iter()
                    .zip(&self.hi)
                    .map(|(a, b)| a + (b - a) * rng.gen::<f64>())
                    .collect()
            })
            .collect()
    }
}

impl Expr {
    /// Bring over a common denominator and cancel common factors.
    ///
    /// Idempotent. Bases containing `exp` are kept but not cancelled.
    pub fn simplify(&self) -> Expr {
        let e = self.simplify_args();
        match together(&e, TOGETHER_BUDGET) {
            Some(t) => t.rebuild(),
            None => e,
        }
    }

    /// Zero test; see the module documentation for the decision procedure.
    pub fn is_zero_on(&self, domain: &SampleDomain) -> ZeroVerdict {
        if self.is_zero() {
            return ZeroVerdict::Exact(true);
        }
        let e = self.simplify_args();
        if let Some(t) = together(&e, TOGETHER_BUDGET) {
            if t.num.is_zero() {
                return ZeroVerdict::Exact(true);
            }
            if !e.has_transcendental() {
                return ZeroVerdict::Exact(false);
            }
        }
        e.sample_zero(domain)
    }

    /// Numerical zero test only.
    pub fn sample_zero(&self, domain: &SampleDomain) -> ZeroVerdict {
        let candidates = domain.points(SAMPLE_COUNT * 4);
        let mut ok = 0;
        for p in &candidates {
            match self.eval_with_scale(p) {
                Ok((v, scale)) => {
                    if v.norm() > ZERO_TOLERANCE * scale.max(1.0) {
                        return ZeroVerdict::Probable(false);
                    }
                    ok += 1;
                    if ok == SAMPLE_COUNT {
                        return ZeroVerdict::Probable(true);
                    }
                }
                Err(_) => continue,
            }
        }
        ZeroVerdict::Undecidable
    }

    /// Recursively simplify the arguments of transcendental atoms so that
    /// equal atoms compare equal.
    fn simplify_args(&self) -> Expr {
        let needs = self
            .terms
            .keys()
            .any(|m| m.0.iter().any(|(a, _)| !matches!(a, Atom::Var(_) | Atom::Pi)));
        if !needs {
            return self.clone();
        }
        let mut map = BTreeMap::new();
        for (m, c) in self.terms.iter() {
            let factors: Vec<(Atom, i32)> = m
                .0
                .iter()
                .map(|(a, k)| {
                    let a2 = match a {
                        Atom::Exp(x) => Atom::Exp(x.simplify()),
                        Atom::Sin(x) => Atom::Sin(x.simplify()),
                        Atom::Cos(x) => Atom::Cos(x.simplify()),
                        Atom::Poly(p) => Atom::Poly(p.simplify_args()),
                        other => other.clone(),
                    };
                    (a2, *k)
                })
                .collect();
            for (m2, c2) in normalize_term(c.clone(), factors).terms.iter() {
                add_term(&mut map, m2.clone(), c2.clone());
            }
        }
        Expr::from_map(map)
    }
}

/// `num · Π den[a]^{-k}`.
pub(super) struct Together {
    pub(super) num: Expr,
    pub(super) den: BTreeMap<Atom, i32>,
}

impl Together {
    fn rebuild(self) -> Expr {
        if self.num.is_zero() {
            return Expr::zero();
        }
        let inv: Vec<(Atom, i32)> = self.den.into_iter().map(|(a, k)| (a, -k)).collect();
        if inv.is_empty() {
            return self.num;
        }
        self.num.mul(&normalize_term(Coeff::one(), inv))
    }
}

pub(super) fn together(e: &Expr, budget: usize) -> Option<Together> {
    let mut den: BTreeMap<Atom, i32> = BTreeMap::new();
    for m in e.terms.keys() {
        for (a, k) in &m.0 {
            if *k < 0 {
                let slot = den.entry(a.clone()).or_insert(0);
                *slot = (*slot).max(-k);
            }
        }
    }
    if den.is_empty() {
        return Some(Together { num: e.clone(), den });
    }
    let mut estimate: usize = 1;
    for (a, k) in &den {
        if let Atom::Poly(p) = a {
            for _ in 0..*k {
                estimate = estimate.saturating_mul(p.term_count());
            }
        }
    }
    if estimate.saturating_mul(e.term_count()) > budget {
        return None;
    }

    // Multiply every term by the full denominator, sharing the expansion of
    // the base products across terms with the same denominator pattern.
    let mut cache: BTreeMap<Vec<(Atom, i32)>, Expr> = BTreeMap::new();
    let mut acc = BTreeMap::new();
    for (m, c) in e.terms.iter() {
        let mut pos: Vec<(Atom, i32)> = Vec::new();
        let mut missing: BTreeMap<Atom, i32> = den.clone();
        for (a, k) in &m.0 {
            if *k < 0 {
                *missing.get_mut(a).unwrap() += k;
            } else {
                pos.push((a.clone(), *k));
            }
        }
        let key: Vec<(Atom, i32)> = missing.into_iter().filter(|(_, k)| *k > 0).collect();
        let mult = cache
            .entry(key.clone())
            .or_insert_with(|| normalize_term(Coeff::one(), key))
            .clone();
        let term = normalize_term(c.clone(), pos).mul(&mult);
        for (m2, c2) in term.terms.iter() {
            add_term(&mut acc, m2.clone(), c2.clone());
        }
    }
    let mut num = Expr::from_map(acc);
    if num.is_zero() {
        return Some(Together { num, den });
    }

    // Cancel monomial factors.
    let mut content: BTreeMap<Atom, i32> = BTreeMap::new();
    for (a, _) in den.iter().filter(|(a, _)| !matches!(a, Atom::Poly(_))) {
        let min = num.terms.keys().map(|m| m.exponent_of(a)).min().unwrap_or(0);
        if min > 0 {
            content.insert(a.clone(), min.min(den[a]));
        }
    }
    if !content.is_empty() {
        let inv: Vec<(Atom, i32)> = content.iter().map(|(a, k)| (a.clone(), -k)).collect();
        num = num.mul(&normalize_term(Coeff::one(), inv));
        for (a, k) in content {
            *den.get_mut(&a).unwrap() -= k;
        }
    }

    // Cancel polynomial bases by exact division.
    let bases: Vec<Atom> = den.keys().filter(|a| matches!(a, Atom::Poly(_))).cloned().collect();
    for a in bases {
        let Atom::Poly(b) = &a else { unreachable!() };
        if has_exp(b) || has_denominator(b) {
            continue;
        }
        while den[&a] > 0 {
            match exact_div(&num, b) {
                Some(q) => {
                    num = q;
                    *den.get_mut(&a).unwrap() -= 1;
                }
                None => break,
            }
        }
    }
    den.retain(|_, k| *k > 0);
    Some(Together { num, den })
}

fn has_denominator(e: &Expr) -> bool {
    e.terms.keys().any(|m| m.0.iter().any(|(_, k)| *k < 0))
}

fn has_exp(e: &Expr) -> bool {
    e.terms.keys().any(|m| m.0.iter().any(|(a, _)| matches!(a, Atom::Exp(_))))
}

/// Graded lexicographic order on monomials with nonnegative exponents.
fn grlex(a: &Monomial, b: &Monomial) -> Ordering {
    match a.total_degree().cmp(&b.total_degree()) {
        Ordering::Equal => {}
        o => return o,
    }
    let (mut i, mut j) = (0, 0);
    while i < a.0.len() || j < b.0.len() {
        let ord = match (a.0.get(i), b.0.get(j)) {
            (Some(x), Some(y)) => x.0.cmp(&y.0),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => unreachable!(),
        };
        match ord {
            Ordering::Less => return Ordering::Greater,
            Ordering::Greater => return Ordering::Less,
            Ordering::Equal => {
                match a.0[i].1.cmp(&b.0[j].1) {
                    Ordering::Equal => {}
                    o => return o,
                }
                i += 1;
                j += 1;
            }
        }
    }
    Ordering::Equal
}

fn leading(e: &Expr) -> Option<(&Monomial, &Coeff)> {
    e.terms.iter().max_by(|x, y| grlex(x.0, y.0))
}

/// `a / b` when `b` divides `a` exactly, for polynomials in the atoms.
fn exact_div(a: &Expr, b: &Expr) -> Option<Expr> {
    let (lm_b, lc_b) = leading(b)?;
    let lc_inv = lc_b.recip()?;
    let mut rem: BTreeMap<Monomial, Coeff> = (*a.terms).clone();
    let mut quot = BTreeMap::new();
    let mut steps = 0usize;
    while !rem.is_empty() {
        steps += 1;
        if steps > 100_000 {
            return None;
        }
        let (lm_r, lc_r) = rem.iter().max_by(|x, y| grlex(x.0, y.0)).map(|(m, c)| (m.clone(), c.clone()))?;
        let t = monomial_quotient(&lm_r, lm_b)?;
        let c = &lc_r * &lc_inv;
        for (m, k) in b.terms.iter() {
            let prod = monomial_product(&t, m);
            add_term(&mut rem, prod, -(&c * k));
        }
        add_term(&mut quot, t, c);
    }
    Some(Expr::from_map(quot))
}

fn monomial_quotient(a: &Monomial, b: &Monomial) -> Option<Monomial> {
    let mut out = a.0.clone();
    for (atom, k) in &b.0 {
        let pos = out.iter().position(|(x, _)| x == atom)?;
        let r = out[pos].1 - k;
        if r < 0 {
            return None;
        }
        if r == 0 {
            out.remove(pos);
        } else {
            out[pos].1 = r;
        }
    }
    Some(Monomial(out))
}

fn monomial_product(a: &Monomial, b: &Monomial) -> Monomial {
    let mut out: BTreeMap<Atom, i32> = a.0.iter().cloned().collect();
    for (atom, k) in &b.0 {
        *out.entry(atom.clone()).or_insert(0) += k;
    }
    Monomial(out.into_iter().filter(|(_, k)| *k != 0).collect())
}
