//! Symbolic complex-valued scalar expressions over real chart coordinates.
//!
//! An [`Expr`] is always kept in a normal form: a finite sum of terms
//! `c · Π aᵢ^kᵢ` with `c ∈ ℚ(i)` and atoms `aᵢ` drawn from coordinates, `π`,
//! `exp`, `sin`, `cos`, and reciprocal polynomial bases. Complex conjugation
//! never survives normalization since every coordinate is real.
//!
//! Rules applied eagerly:
//! * like terms are collected and zero terms dropped;
//! * positive powers of sums are expanded;
//! * `exp(a)·exp(b) = exp(a + b)`, `exp(0) = 1`, `sin(0) = 0`, `cos(0) = 1`;
//! * a reciprocal of a sum is stored as a monic, content-free base raised to a
//!   negative power.
//!
//! Full cancellation of common factors between numerators and denominators is
//! done on request by [`Expr::simplify`].

mod calculus;
mod coeff;
mod eval;
pub mod parse;
mod print;
mod zero;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

pub use coeff::Coeff;
pub use parse::{parse, parse_ast, Ast, AstKind, Span};
pub use zero::{SampleDomain, ZeroVerdict, SAMPLE_COUNT, ZERO_TOLERANCE};

use crate::error::{Error, Result};

/// Indivisible factor of a monomial.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Var(usize),
    Pi,
    Exp(Expr),
    Sin(Expr),
    Cos(Expr),
    /// A monic, content-free polynomial of at least two terms; only ever
    /// carries a negative exponent.
    Poly(Expr),
}

impl Atom {
    pub fn is_transcendental(&self) -> bool {
        match self {
            Atom::Var(_) | Atom::Pi => false,
            Atom::Exp(_) | Atom::Sin(_) | Atom::Cos(_) => true,
            Atom::Poly(p) => p.has_transcendental(),
        }
    }
}

/// Sorted product of atoms with nonzero integer exponents.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(Vec<(Atom, i32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn factors(&self) -> &[(Atom, i32)] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    fn exponent_of(&self, atom: &Atom) -> i32 {
        self.0
            .iter()
            .find(|(a, _)| a == atom)
            .map(|(_, k)| *k)
            .unwrap_or(0)
    }

    fn total_degree(&self) -> i64 {
        self.0.iter().map(|(_, k)| *k as i64).sum()
    }
}

/// Normal-form scalar expression. Cheap to clone.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr {
    terms: Arc<BTreeMap<Monomial, Coeff>>,
}

impl std::fmt::Debug for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.to_string_with(&print::default_names))
    }
}

fn add_term(map: &mut BTreeMap<Monomial, Coeff>, m: Monomial, c: Coeff) {
    if c.is_zero() {
        return;
    }
    match map.entry(m) {
        std::collections::btree_map::Entry::Vacant(v) => {
            v.insert(c);
        }
        std::collections::btree_map::Entry::Occupied(mut o) => {
            let s = o.get() + &c;
            if s.is_zero() {
                o.remove();
            } else {
                *o.get_mut() = s;
            }
        }
    }
}

/// Term accumulator for building large sums without quadratic copying.
#[derive(Default)]
pub struct Accum(BTreeMap<Monomial, Coeff>);

impl Accum {
    pub fn new() -> Self {
        Accum::default()
    }

    pub fn push(&mut self, e: &Expr) {
        for (m, c) in e.terms.iter() {
            add_term(&mut self.0, m.clone(), c.clone());
        }
    }

    pub fn finish(self) -> Expr {
        Expr::from_map(self.0)
    }
}

impl Expr {
    fn from_map(map: BTreeMap<Monomial, Coeff>) -> Self {
        Expr {
            terms: Arc::new(map),
        }
    }

    pub fn zero() -> Self {
        Expr::from_map(BTreeMap::new())
    }

    pub fn one() -> Self {
        Expr::constant(Coeff::one())
    }

    pub fn constant(c: Coeff) -> Self {
        let mut map = BTreeMap::new();
        add_term(&mut map, Monomial::one(), c);
        Expr::from_map(map)
    }

    pub fn int(n: i64) -> Self {
        Expr::constant(Coeff::from_int(n))
    }

    pub fn ratio(p: i64, q: i64) -> Self {
        Expr::constant(Coeff::from_ratio(p, q))
    }

    pub fn imag_unit() -> Self {
        Expr::constant(Coeff::i())
    }

    pub fn pi() -> Self {
        Expr::atom(Atom::Pi)
    }

    pub fn var(index: usize) -> Self {
        Expr::atom(Atom::Var(index))
    }

    fn atom(a: Atom) -> Self {
        let mut map = BTreeMap::new();
        map.insert(Monomial(vec![(a, 1)]), Coeff::one());
        Expr::from_map(map)
    }

    pub fn exp(arg: &Expr) -> Self {
        if arg.is_zero() {
            return Expr::one();
        }
        Expr::atom(Atom::Exp(arg.clone()))
    }

    pub fn sin(arg: &Expr) -> Self {
        if arg.is_zero() {
            return Expr::zero();
        }
        Expr::atom(Atom::Sin(arg.clone()))
    }

    pub fn cos(arg: &Expr) -> Self {
        if arg.is_zero() {
            return Expr::one();
        }
        Expr::atom(Atom::Cos(arg.clone()))
    }

    /// Structural zero. Use [`Expr::is_zero_on`] for a semantic test.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Coeff)> {
        self.terms.iter()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn as_constant(&self) -> Option<Coeff> {
        match self.terms.len() {
            0 => Some(Coeff::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn has_transcendental(&self) -> bool {
        self.terms
            .keys()
            .any(|m| m.0.iter().any(|(a, _)| a.is_transcendental()))
    }

    /// Coordinate indices this expression depends on.
    pub fn free_vars(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<usize>) {
        for m in self.terms.keys() {
            for (a, _) in &m.0 {
                match a {
                    Atom::Var(i) => {
                        out.insert(*i);
                    }
                    Atom::Pi => {}
                    Atom::Exp(e) | Atom::Sin(e) | Atom::Cos(e) | Atom::Poly(e) => e.collect_vars(out),
                }
            }
        }
    }

    pub fn depends_on(&self, var: usize) -> bool {
        self.free_vars().contains(&var)
    }

    pub fn scale(&self, c: &Coeff) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        let map = self
            .terms
            .iter()
            .map(|(m, k)| (m.clone(), k * c))
            .collect();
        Expr::from_map(map)
    }

    pub fn add(&self, other: &Expr) -> Expr {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let (big, small) = if self.terms.len() >= other.terms.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut map = (*big.terms).clone();
        for (m, c) in small.terms.iter() {
            add_term(&mut map, m.clone(), c.clone());
        }
        Expr::from_map(map)
    }

    pub fn sub(&self, other: &Expr) -> Expr {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Expr {
        self.scale(&Coeff::from_int(-1))
    }

    pub fn mul(&self, other: &Expr) -> Expr {
        if self.is_zero() || other.is_zero() {
            return Expr::zero();
        }
        if let Some(c) = self.as_constant() {
            return other.scale(&c);
        }
        if let Some(c) = other.as_constant() {
            return self.scale(&c);
        }
        let mut map = BTreeMap::new();
        for (m1, c1) in self.terms.iter() {
            for (m2, c2) in other.terms.iter() {
                let c = c1 * c2;
                match merge_simple(m1, m2) {
                    Some(m) => add_term(&mut map, m, c),
                    None => {
                        let mut factors = m1.0.clone();
                        factors.extend(m2.0.iter().cloned());
                        let prod = normalize_term(c, factors);
                        for (m, c) in prod.terms.iter() {
                            add_term(&mut map, m.clone(), c.clone());
                        }
                    }
                }
            }
        }
        Expr::from_map(map)
    }

    /// Exact quotient; fails when the divisor is structurally zero.
    pub fn div(&self, other: &Expr) -> Result<Expr> {
        Ok(self.mul(&other.recip()?))
    }

    pub fn recip(&self) -> Result<Expr> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if self.terms.len() == 1 {
            let (m, c) = self.terms.iter().next().unwrap();
            return Ok(single_term_pow(c, m, -1));
        }
        // Clear denominators when that stays small; otherwise the sum itself
        // becomes the base.
        let (mut num, mut content_total) = match zero::together(self, zero::TOGETHER_BUDGET) {
            Some(t) => (t.num, t.den.into_iter().map(|(a, k)| (a, -k)).collect::<Vec<_>>()),
            None => (self.clone(), Vec::new()),
        };
        if num.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if num.terms.len() == 1 {
            let (m, c) = num.terms.iter().next().unwrap();
            let inv = single_term_pow(c, m, -1);
            let factors: Vec<(Atom, i32)> = content_total.into_iter().map(|(a, k)| (a, -k)).collect();
            return Ok(normalize_term(Coeff::one(), factors).mul(&inv));
        }
        loop {
            let content = num.content();
            if content.is_empty() {
                break;
            }
            let inv: Vec<(Atom, i32)> = content.iter().map(|(a, k)| (a.clone(), -k)).collect();
            num = num.mul(&normalize_term(Coeff::one(), inv));
            content_total.extend(content);
        }
        let mut factors: Vec<(Atom, i32)> = content_total.into_iter().map(|(a, k)| (a, -k)).collect();
        if num.terms.len() == 1 {
            let (m, c) = num.terms.iter().next().unwrap();
            let inv = single_term_pow(c, m, -1);
            return Ok(normalize_term(Coeff::one(), factors).mul(&inv));
        }
        let (_, lc) = num.terms.iter().next_back().unwrap();
        let lc_inv = lc.recip().ok_or(Error::DivisionByZero)?;
        let base = num.scale(&lc_inv);
        factors.push((Atom::Poly(base), -1));
        Ok(normalize_term(lc_inv, factors))
    }

    /// Integer power; negative exponents go through [`Expr::recip`].
    pub fn powi(&self, n: i64) -> Result<Expr> {
        if n == 0 {
            return Ok(Expr::one());
        }
        if self.terms.len() == 1 {
            let (m, c) = self.terms.iter().next().unwrap();
            if n < 0 && c.is_zero() {
                return Err(Error::DivisionByZero);
            }
            return Ok(single_term_pow(c, m, n as i32));
        }
        if n < 0 {
            return self.recip()?.powi(-n);
        }
        let mut result = Expr::one();
        let mut base = self.clone();
        let mut e = n as u64;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        Ok(result)
    }

    /// Common monomial factor of all terms (exp atoms excluded).
    fn content(&self) -> Vec<(Atom, i32)> {
        if self.terms.len() < 2 {
            return Vec::new();
        }
        let mut atoms: BTreeSet<&Atom> = BTreeSet::new();
        for m in self.terms.keys() {
            for (a, _) in &m.0 {
                if !matches!(a, Atom::Exp(_)) {
                    atoms.insert(a);
                }
            }
        }
        let mut out = Vec::new();
        for a in atoms {
            let min = self
                .terms
                .keys()
                .map(|m| m.exponent_of(a))
                .min()
                .unwrap_or(0);
            if min > 0 {
                out.push((a.clone(), min));
            }
        }
        out
    }

    /// Complex conjugate, pushed through to the atoms.
    pub fn conj(&self) -> Expr {
        calculus::conj(self)
    }

    /// Real part `(e + ē)/2`.
    pub fn re(&self) -> Expr {
        self.add(&self.conj()).scale(&Coeff::from_ratio(1, 2))
    }

    /// Imaginary part `(e − ē)/(2i)`.
    pub fn im(&self) -> Expr {
        self.sub(&self.conj())
            .scale(&(&Coeff::i() * &Coeff::from_ratio(-1, 2)))
    }
}

/// Merge two monomials on the fast path. Returns `None` when exp atoms must
/// be combined or a positive power of a base must be expanded.
fn merge_simple(a: &Monomial, b: &Monomial) -> Option<Monomial> {
    let has_exp = |m: &Monomial| m.0.iter().any(|(x, _)| matches!(x, Atom::Exp(_)));
    if has_exp(a) && has_exp(b) {
        return None;
    }
    let mut out = Vec::with_capacity(a.0.len() + b.0.len());
    let (mut i, mut j) = (0, 0);
    while i < a.0.len() && j < b.0.len() {
        match a.0[i].0.cmp(&b.0[j].0) {
            std::cmp::Ordering::Less => {
                out.push(a.0[i].clone());
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b.0[j].clone());
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                let atom = &a.0[i].0;
                let k = a.0[i].1 + b.0[j].1;
                if k > 0 && matches!(atom, Atom::Poly(_)) {
                    return None;
                }
                if k != 0 {
                    out.push((atom.clone(), k));
                }
                i += 1;
                j += 1;
            }
        }
    }
    out.extend(a.0[i..].iter().cloned());
    out.extend(b.0[j..].iter().cloned());
    Some(Monomial(out))
}

/// Build `c · Π factors` in normal form.
pub(crate) fn normalize_term(c: Coeff, factors: Vec<(Atom, i32)>) -> Expr {
    if c.is_zero() {
        return Expr::zero();
    }
    let mut exp_arg = Expr::zero();
    let mut acc: BTreeMap<Atom, i32> = BTreeMap::new();
    for (a, k) in factors {
        match a {
            Atom::Exp(arg) => exp_arg = exp_arg.add(&arg.scale(&Coeff::from_int(k as i64))),
            other => *acc.entry(other).or_insert(0) += k,
        }
    }
    let mut expand: Vec<(Expr, i32)> = Vec::new();
    let mut mono: Vec<(Atom, i32)> = Vec::new();
    for (a, k) in acc {
        if k == 0 {
            continue;
        }
        match a {
            Atom::Poly(p) if k > 0 => expand.push((p, k)),
            other => mono.push((other, k)),
        }
    }
    if !exp_arg.is_zero() {
        mono.push((Atom::Exp(exp_arg), 1));
        mono.sort_by(|x, y| x.0.cmp(&y.0));
    }
    let mut map = BTreeMap::new();
    map.insert(Monomial(mono), c);
    let mut out = Expr::from_map(map);
    for (p, k) in expand {
        let pk = p.powi(k as i64).expect("positive power");
        out = out.mul(&pk);
    }
    out
}

fn single_term_pow(c: &Coeff, m: &Monomial, n: i32) -> Expr {
    let coeff = if n >= 0 {
        c.pow(n as u32)
    } else {
        c.recip().expect("nonzero coefficient").pow((-n) as u32)
    };
    let factors = m.0.iter().map(|(a, k)| (a.clone(), k * n)).collect();
    normalize_term(coeff, factors)
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::add(&self, &rhs)
    }
}

impl std::ops::Add for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        Expr::add(self, rhs)
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::sub(&self, &rhs)
    }
}

impl std::ops::Sub for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        Expr::sub(self, rhs)
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::mul(&self, &rhs)
    }
}

impl std::ops::Mul for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        Expr::mul(self, rhs)
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(&self)
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::int(n)
    }
}

impl From<Coeff> for Expr {
    fn from(c: Coeff) -> Self {
        Expr::constant(c)
    }
}
