use std::collections::HashMap;

use super::{normalize_term, Accum, Atom, Coeff, Expr};
use crate::error::Result;

impl Expr {
    /// Exact partial derivative with respect to coordinate `var`.
    pub fn partial(&self, var: usize) -> Expr {
        let mut out = Accum::new();
        let mut cache: HashMap<&Atom, Expr> = HashMap::new();
        for (m, c) in self.terms.iter() {
            for (idx, (atom, k)) in m.0.iter().enumerate() {
                let da = cache
                    .entry(atom)
                    .or_insert_with(|| atom_partial(atom, var))
                    .clone();
                if da.is_zero() {
                    continue;
                }
                let rest = if let Atom::Exp(_) = atom {
                    // d exp(a) = exp(a) da; the exponent is always one.
                    m.0.clone()
                } else {
                    let mut f = m.0.clone();
                    f[idx].1 = k - 1;
                    f
                };
                let coeff = if let Atom::Exp(_) = atom {
                    c.clone()
                } else {
                    c * &Coeff::from_int(*k as i64)
                };
                out.push(&normalize_term(coeff, rest).mul(&da));
            }
        }
        out.finish()
    }

    /// Substitute every coordinate `i` by `f(i)`.
    pub fn subst(&self, f: &dyn Fn(usize) -> Expr) -> Result<Expr> {
        let mut cache: HashMap<Atom, Expr> = HashMap::new();
        self.subst_cached(f, &mut cache)
    }

    fn subst_cached(&self, f: &dyn Fn(usize) -> Expr, cache: &mut HashMap<Atom, Expr>) -> Result<Expr> {
        let mut out = Accum::new();
        for (m, c) in self.terms.iter() {
            let mut term = Expr::constant(c.clone());
            for (atom, k) in &m.0 {
                let base = match cache.get(atom) {
                    Some(v) => v.clone(),
                    None => {
                        let v = match atom {
                            Atom::Var(i) => f(*i),
                            Atom::Pi => Expr::pi(),
                            Atom::Exp(a) => Expr::exp(&a.subst_cached(f, cache)?),
                            Atom::Sin(a) => Expr::sin(&a.subst_cached(f, cache)?),
                            Atom::Cos(a) => Expr::cos(&a.subst_cached(f, cache)?),
                            Atom::Poly(p) => p.subst_cached(f, cache)?,
                        };
                        cache.insert(atom.clone(), v.clone());
                        v
                    }
                };
                term = term.mul(&base.powi(*k as i64)?);
                if term.is_zero() {
                    break;
                }
            }
            out.push(&term);
        }
        Ok(out.finish())
    }

    /// Substitute a single coordinate.
    pub fn subst_var(&self, var: usize, value: &Expr) -> Result<Expr> {
        self.subst(&|i| if i == var { value.clone() } else { Expr::var(i) })
    }
}

fn atom_partial(atom: &Atom, var: usize) -> Expr {
    match atom {
        Atom::Var(i) => {
            if *i == var {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Atom::Pi => Expr::zero(),
        Atom::Exp(a) => a.partial(var),
        Atom::Sin(a) => Expr::cos(a).mul(&a.partial(var)),
        Atom::Cos(a) => Expr::sin(a).mul(&a.partial(var)).neg(),
        Atom::Poly(p) => p.partial(var),
    }
}

pub(super) fn conj(e: &Expr) -> Expr {
    let mut out = Accum::new();
    let mut cache: HashMap<&Atom, Expr> = HashMap::new();
    for (m, c) in e.terms.iter() {
        let mut term = Expr::constant(c.conj());
        let mut plain: Vec<(Atom, i32)> = Vec::new();
        for (atom, k) in &m.0 {
            match atom {
                Atom::Var(_) | Atom::Pi => plain.push((atom.clone(), *k)),
                _ => {
                    let base = cache
                        .entry(atom)
                        .or_insert_with(|| match atom {
                            Atom::Exp(a) => Expr::exp(&a.conj()),
                            Atom::Sin(a) => Expr::sin(&a.conj()),
                            Atom::Cos(a) => Expr::cos(&a.conj()),
                            Atom::Poly(p) => p.conj(),
                            _ => unreachable!(),
                        })
                        .clone();
                    // conj of a nonzero base is nonzero
                    term = term.mul(&base.powi(*k as i64).expect("nonzero base"));
                }
            }
        }
        if !plain.is_empty() {
            term = term.mul(&normalize_term(Coeff::one(), plain));
        }
        out.push(&term);
    }
    out.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(i: usize) -> Expr {
        Expr::var(i)
    }

    #[test]
    fn polynomial_rule() {
        // d/dx1 (x1^2 x2) = 2 x1 x2
        let e = &(&x(0) * &x(0)) * &x(1);
        assert_eq!(e.partial(0), &Expr::int(2) * &(&x(0) * &x(1)));
    }

    #[test]
    fn exp_rule() {
        let e = Expr::exp(&x(0));
        assert_eq!(e.partial(0), e);
        assert!(Expr::int(7).partial(0).is_zero());
    }

    #[test]
    fn conj_is_coordinatewise_real() {
        // d/dx2 conj(x1 + i x2) = -i
        let z = &x(0) + &(&Expr::imag_unit() * &x(1));
        assert_eq!(z.conj().partial(1), Expr::imag_unit().neg());
    }

    #[test]
    fn quotient_rule_through_bases() {
        let p = &x(0) + &Expr::int(1);
        let r = p.recip().unwrap();
        let expect = p.powi(-2).unwrap().neg();
        assert_eq!(r.partial(0), expect);
    }

    #[test]
    fn substitution_evaluates_bases() {
        let p = &x(0) + &x(1);
        let r = p.recip().unwrap();
        let v = r.subst(&|i| if i == 0 { Expr::int(1) } else { Expr::int(3) }).unwrap();
        assert_eq!(v, Expr::ratio(1, 4));
        let bad = r.subst(&|i| if i == 0 { Expr::int(1) } else { Expr::int(-1) });
        assert!(bad.is_err());
    }
}
