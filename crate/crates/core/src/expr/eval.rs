use std::collections::HashMap;

use num_complex::Complex64;

use super::{Atom, Expr};
use crate::error::{Error, Result};

/// Magnitude below which a denominator is treated as a pole.
const POLE_EPS: f64 = 1e-300;

impl Expr {
    /// Double-precision value at a real coordinate point.
    pub fn eval(&self, point: &[f64]) -> Result<Complex64> {
        let mut cache = HashMap::new();
        let v = self.eval_cached(point, &mut cache)?;
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::Overflow);
        }
        Ok(v)
    }

    /// Value together with the sum of absolute term values, used as the scale
    /// for tolerance checks.
    pub(crate) fn eval_with_scale(&self, point: &[f64]) -> Result<(Complex64, f64)> {
        let mut cache = HashMap::new();
        let mut sum = Complex64::new(0.0, 0.0);
        let mut scale = 0.0;
        for (m, c) in self.terms.iter() {
            let t = c.to_complex() * eval_monomial(m.factors(), point, &mut cache)?;
            scale += t.norm();
            sum += t;
        }
        if !sum.re.is_finite() || !sum.im.is_finite() || !scale.is_finite() {
            return Err(Error::Overflow);
        }
        Ok((sum, scale))
    }

    fn eval_cached(&self, point: &[f64], cache: &mut Cache) -> Result<Complex64> {
        let mut sum = Complex64::new(0.0, 0.0);
        for (m, c) in self.terms.iter() {
            sum += c.to_complex() * eval_monomial(m.factors(), point, cache)?;
        }
        Ok(sum)
    }
}

/// Atom values for one evaluation point. Composite atoms are keyed by the
/// address of their shared argument, so a base reused across terms (or nested
/// inside other bases) is evaluated once.
type Cache = HashMap<(u8, usize), Complex64>;

fn key(atom: &Atom) -> (u8, usize) {
    let addr = |e: &Expr| std::sync::Arc::as_ptr(&e.terms) as usize;
    match atom {
        Atom::Var(i) => (0, *i),
        Atom::Pi => (1, 0),
        Atom::Exp(a) => (2, addr(a)),
        Atom::Sin(a) => (3, addr(a)),
        Atom::Cos(a) => (4, addr(a)),
        Atom::Poly(a) => (5, addr(a)),
    }
}

fn eval_monomial(factors: &[(Atom, i32)], point: &[f64], cache: &mut Cache) -> Result<Complex64> {
    let mut prod = Complex64::new(1.0, 0.0);
    for (atom, k) in factors {
        let base = match cache.get(&key(atom)) {
            Some(v) => *v,
            None => {
                let v = eval_atom(atom, point, cache)?;
                cache.insert(key(atom), v);
                v
            }
        };
        if *k < 0 && base.norm() < POLE_EPS {
            return Err(Error::DivisionByZero);
        }
        prod *= base.powi(*k);
    }
    Ok(prod)
}

fn eval_atom(atom: &Atom, point: &[f64], cache: &mut Cache) -> Result<Complex64> {
    Ok(match atom {
        Atom::Var(i) => {
            let x = point.get(*i).ok_or(Error::DimensionMismatch {
                expected: i + 1,
                found: point.len(),
            })?;
            Complex64::new(*x, 0.0)
        }
        Atom::Pi => Complex64::new(std::f64::consts::PI, 0.0),
        Atom::Exp(a) => a.eval_cached(point, cache)?.exp(),
        Atom::Sin(a) => a.eval_cached(point, cache)?.sin(),
        Atom::Cos(a) => a.eval_cached(point, cache)?.cos(),
        Atom::Poly(p) => p.eval_cached(point, cache)?,
    })
}
