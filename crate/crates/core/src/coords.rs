//! Real chart coordinates, optional periods, and complex-coordinate sugar.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::expr::{Expr, SampleDomain};

/// `name = x_re + i·x_im`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexCoord {
    pub name: String,
    pub re: usize,
    pub im: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Coordinates {
    names: Vec<String>,
    periods: Vec<Option<f64>>,
    complex: Vec<ComplexCoord>,
}

fn valid_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

const RESERVED: &[&str] = &["i", "pi", "exp", "sin", "cos", "conj", "re", "im", "d", "D", "lattice_sum"];

impl Coordinates {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for n in names {
            let n = n.as_ref();
            if !valid_name(n) || RESERVED.contains(&n) {
                return Err(Error::InvalidCoordinates(format!("`{}` is not a valid coordinate name", n)));
            }
            if !seen.insert(n.to_string()) {
                return Err(Error::InvalidCoordinates(format!("duplicate coordinate `{}`", n)));
            }
            out.push(n.to_string());
        }
        if out.len() > 32 {
            return Err(Error::InvalidCoordinates("at most 32 coordinates are supported".into()));
        }
        let dim = out.len();
        Ok(Coordinates {
            names: out,
            periods: vec![None; dim],
            complex: Vec::new(),
        })
    }

    /// Coordinates `x1, …, x_dim`.
    pub fn numbered(dim: usize) -> Self {
        let names: Vec<String> = (1..=dim).map(|i| format!("x{}", i)).collect();
        Coordinates::new(&names).expect("numbered names are valid")
    }

    pub fn with_period(mut self, name: &str, period: f64) -> Result<Self> {
        let i = self.index(name).ok_or_else(|| Error::UnknownCoordinate(name.to_string()))?;
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidCoordinates(format!("period of `{}` must be positive", name)));
        }
        self.periods[i] = Some(period);
        Ok(self)
    }

    /// Declare `name = re + i·im`. Also introduces `{name}bar`.
    pub fn with_complex(mut self, name: &str, re: &str, im: &str) -> Result<Self> {
        let r = self.index(re).ok_or_else(|| Error::UnknownCoordinate(re.to_string()))?;
        let m = self.index(im).ok_or_else(|| Error::UnknownCoordinate(im.to_string()))?;
        if r == m {
            return Err(Error::InvalidCoordinates(format!("`{}` needs two distinct real coordinates", name)));
        }
        if !valid_name(name) || RESERVED.contains(&name) {
            return Err(Error::InvalidCoordinates(format!("`{}` is not a valid name", name)));
        }
        let bar = format!("{}bar", name);
        let taken = |s: &str| self.index(s).is_some() || self.complex.iter().any(|c| c.name == s || format!("{}bar", c.name) == s);
        if taken(name) || taken(&bar) {
            return Err(Error::InvalidCoordinates(format!("`{}` is already declared", name)));
        }
        if self.complex.iter().any(|c| c.re == r || c.im == r || c.re == m || c.im == m) {
            return Err(Error::InvalidCoordinates(format!("real coordinates of `{}` already used", name)));
        }
        self.complex.push(ComplexCoord {
            name: name.to_string(),
            re: r,
            im: m,
        });
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn period(&self, i: usize) -> Option<f64> {
        self.periods[i]
    }

    pub fn periods(&self) -> &[Option<f64>] {
        &self.periods
    }

    pub fn all_periodic(&self) -> bool {
        self.periods.iter().all(|p| p.is_some())
    }

    pub fn complex_coords(&self) -> &[ComplexCoord] {
        &self.complex
    }

    pub fn complex(&self, name: &str) -> Option<&ComplexCoord> {
        self.complex.iter().find(|c| c.name == name)
    }

    /// `re + i·im` for a complex coordinate.
    pub fn complex_expr(c: &ComplexCoord) -> Expr {
        &Expr::var(c.re) + &(&Expr::imag_unit() * &Expr::var(c.im))
    }

    /// Value of a coordinate-like symbol: a real coordinate, a complex
    /// coordinate, or its conjugate.
    pub fn resolve(&self, name: &str) -> Option<Expr> {
        if let Some(i) = self.index(name) {
            return Some(Expr::var(i));
        }
        if let Some(c) = self.complex(name) {
            return Some(Self::complex_expr(c));
        }
        let base = name.strip_suffix("bar")?;
        self.complex(base).map(|c| Self::complex_expr(c).conj())
    }

    /// Box used for sampling: one period on periodic axes, a fixed
    /// asymmetric interval elsewhere.
    pub fn sample_domain(&self) -> SampleDomain {
        let lo = self.periods.iter().map(|p| if p.is_some() { 0.0 } else { -1.3 }).collect();
        let hi = self.periods.iter().map(|p| p.unwrap_or(1.7)).collect();
        SampleDomain::new(lo, hi)
    }

    /// Name printer for expressions over these coordinates.
    pub fn printer(&self) -> impl Fn(usize) -> String + '_ {
        move |i| self.names.get(i).cloned().unwrap_or_else(|| format!("x{}", i + 1))
    }

    pub fn show(&self, e: &Expr) -> String {
        e.to_string_with(&self.printer())
    }
}
