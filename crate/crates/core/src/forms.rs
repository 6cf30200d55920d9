//! Exterior algebra over a chart: forms, vector fields, and smooth maps.
//!
//! A form is stored as a map from increasing multi-indices to coefficients.
//! Multi-indices are bitmasks, so chart dimension is limited to 32.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::coords::Coordinates;
use crate::error::{Error, Result};
use crate::expr::{Accum, Coeff, Expr, SampleDomain, ZeroVerdict};

/// Increasing multi-index `i₁ < … < i_p` encoded as a bitmask.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Blade(pub u32);

impl Blade {
    pub const EMPTY: Blade = Blade(0);

    pub fn single(i: usize) -> Blade {
        Blade(1 << i)
    }

    /// Sorts `indices`, returning the permutation sign, or `None` on repeats.
    pub fn from_indices(indices: &[usize]) -> Option<(i32, Blade)> {
        let mut v = indices.to_vec();
        let mut sign = 1;
        for i in 0..v.len() {
            for j in 0..v.len() - 1 - i {
                if v[j] > v[j + 1] {
                    v.swap(j, j + 1);
                    sign = -sign;
                }
            }
        }
        let mut bits = 0u32;
        for w in v.windows(2) {
            if w[0] == w[1] {
                return None;
            }
        }
        for i in v {
            bits |= 1 << i;
        }
        Some((sign, Blade(bits)))
    }

    pub fn degree(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 & (1 << i) != 0
    }

    pub fn indices(self) -> Vec<usize> {
        (0..32).filter(|i| self.contains(*i)).collect()
    }

    fn below(self, i: usize) -> u32 {
        (self.0 & ((1u32 << i) - 1)).count_ones()
    }

    /// Sign and result of `self ∧ other`, or `None` if they overlap.
    pub fn wedge(self, other: Blade) -> Option<(i32, Blade)> {
        if self.0 & other.0 != 0 {
            return None;
        }
        let mut swaps = 0u32;
        for j in other.indices() {
            swaps += (self.0 >> j >> 1).count_ones();
        }
        Some((if swaps % 2 == 0 { 1 } else { -1 }, Blade(self.0 | other.0)))
    }
}

fn same(a: &Arc<Coordinates>, b: &Arc<Coordinates>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

fn check(a: &Arc<Coordinates>, b: &Arc<Coordinates>) -> Result<()> {
    if same(a, b) {
        Ok(())
    } else {
        Err(Error::CoordinateMismatch)
    }
}

fn sign_expr(e: &Expr, sign: i32) -> Expr {
    if sign < 0 {
        e.neg()
    } else {
        e.clone()
    }
}

fn combine(verdicts: impl IntoIterator<Item = ZeroVerdict>) -> ZeroVerdict {
    let mut out = ZeroVerdict::Exact(true);
    for v in verdicts {
        match v {
            ZeroVerdict::Exact(true) => {}
            ZeroVerdict::Probable(true) => out = ZeroVerdict::Probable(true),
            other => return other,
        }
    }
    out
}

#[derive(Clone, PartialEq)]
pub struct DifferentialForm {
    coords: Arc<Coordinates>,
    degree: usize,
    terms: BTreeMap<Blade, Expr>,
}

impl std::fmt::Debug for DifferentialForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.show())
    }
}

impl DifferentialForm {
    pub fn zero(coords: &Arc<Coordinates>, degree: usize) -> Self {
        DifferentialForm {
            coords: coords.clone(),
            degree,
            terms: BTreeMap::new(),
        }
    }

    pub fn scalar(coords: &Arc<Coordinates>, f: Expr) -> Self {
        let mut out = Self::zero(coords, 0);
        out.insert(Blade::EMPTY, f);
        out
    }

    /// `dx_i`.
    pub fn dx(coords: &Arc<Coordinates>, i: usize) -> Self {
        assert!(i < coords.dim());
        let mut out = Self::zero(coords, 1);
        out.insert(Blade::single(i), Expr::one());
        out
    }

    /// `dz = dx_re + i·dx_im` for a declared complex coordinate.
    pub fn dz(coords: &Arc<Coordinates>, name: &str) -> Result<Self> {
        let c = coords.complex(name).ok_or_else(|| Error::UnknownCoordinate(name.to_string()))?;
        let mut out = Self::zero(coords, 1);
        out.insert(Blade::single(c.re), Expr::one());
        out.insert(Blade::single(c.im), Expr::imag_unit());
        Ok(out)
    }

    pub fn dzbar(coords: &Arc<Coordinates>, name: &str) -> Result<Self> {
        Ok(Self::dz(coords, name)?.conj())
    }

    /// Form with a single term `f dx_{indices}` (indices in any order).
    pub fn monomial(coords: &Arc<Coordinates>, f: Expr, indices: &[usize]) -> Self {
        let mut out = Self::zero(coords, indices.len());
        if let Some((sign, b)) = Blade::from_indices(indices) {
            out.insert(b, sign_expr(&f, sign));
        }
        out
    }

    pub fn from_terms(coords: &Arc<Coordinates>, degree: usize, terms: impl IntoIterator<Item = (Blade, Expr)>) -> Result<Self> {
        let mut out = Self::zero(coords, degree);
        for (b, e) in terms {
            if b.degree() != degree || b.0 >> coords.dim() != 0 {
                return Err(Error::Degree(format!("multi-index {:?} does not fit degree {}", b.indices(), degree)));
            }
            out.insert(b, e);
        }
        Ok(out)
    }

    fn insert(&mut self, b: Blade, e: Expr) {
        if e.is_zero() {
            return;
        }
        match self.terms.get(&b) {
            Some(old) => {
                let s = old.add(&e);
                if s.is_zero() {
                    self.terms.remove(&b);
                } else {
                    self.terms.insert(b, s);
                }
            }
            None => {
                self.terms.insert(b, e);
            }
        }
    }

    pub fn coords(&self) -> &Arc<Coordinates> {
        &self.coords
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.coords.dim()
    }

    /// Structural zero.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Blade, &Expr)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, indices: &[usize]) -> Expr {
        match Blade::from_indices(indices) {
            Some((sign, b)) => self.terms.get(&b).map(|e| sign_expr(e, sign)).unwrap_or_else(Expr::zero),
            None => Expr::zero(),
        }
    }

    /// Coefficient of `dx_1∧…∧dx_N` for a top-degree form, or of `1` for a
    /// 0-form.
    pub fn top_coefficient(&self) -> Result<Expr> {
        if self.degree != self.dim() {
            return Err(Error::Degree(format!("expected degree {}, found {}", self.dim(), self.degree)));
        }
        Ok(self.coefficient(&(0..self.dim()).collect::<Vec<_>>()))
    }

    /// The 0-form coefficient.
    pub fn as_scalar(&self) -> Result<Expr> {
        if self.degree != 0 {
            return Err(Error::Degree(format!("expected a 0-form, found degree {}", self.degree)));
        }
        Ok(self.coefficient(&[]))
    }

    pub fn map_coeffs(&self, f: impl Fn(&Expr) -> Expr) -> Self {
        let mut out = Self::zero(&self.coords, self.degree);
        for (b, e) in &self.terms {
            out.insert(*b, f(e));
        }
        out
    }

    pub fn try_map_coeffs(&self, f: impl Fn(&Expr) -> Result<Expr>) -> Result<Self> {
        let mut out = Self::zero(&self.coords, self.degree);
        for (b, e) in &self.terms {
            out.insert(*b, f(e)?);
        }
        Ok(out)
    }

    pub fn scale(&self, f: &Expr) -> Self {
        self.map_coeffs(|e| e.mul(f))
    }

    pub fn scale_c(&self, c: &Coeff) -> Self {
        self.map_coeffs(|e| e.scale(c))
    }

    pub fn neg(&self) -> Self {
        self.map_coeffs(|e| e.neg())
    }

    pub fn conj(&self) -> Self {
        self.map_coeffs(|e| e.conj())
    }

    pub fn simplify(&self) -> Self {
        self.map_coeffs(|e| e.simplify())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check(&self.coords, &other.coords)?;
        if other.is_zero() {
            return Ok(self.clone());
        }
        if self.is_zero() {
            return Ok(other.clone());
        }
        if self.degree != other.degree {
            return Err(Error::Degree(format!("cannot add forms of degree {} and {}", self.degree, other.degree)));
        }
        let mut out = self.clone();
        for (b, e) in &other.terms {
            out.insert(*b, e.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        check(&self.coords, &other.coords)?;
        let mut acc: BTreeMap<Blade, Accum> = BTreeMap::new();
        for (a, ea) in &self.terms {
            for (b, eb) in &other.terms {
                if let Some((sign, c)) = a.wedge(*b) {
                    acc.entry(c).or_default().push(&sign_expr(&ea.mul(eb), sign));
                }
            }
        }
        let mut out = Self::zero(&self.coords, self.degree + other.degree);
        for (b, a) in acc {
            out.insert(b, a.finish());
        }
        Ok(out)
    }

    /// Exterior derivative.
    pub fn d(&self) -> Self {
        let mut acc: BTreeMap<Blade, Accum> = BTreeMap::new();
        for (b, e) in &self.terms {
            for j in e.free_vars() {
                if b.contains(j) {
                    continue;
                }
                let de = e.partial(j);
                if de.is_zero() {
                    continue;
                }
                let sign = if b.below(j) % 2 == 0 { 1 } else { -1 };
                acc.entry(Blade(b.0 | (1 << j))).or_default().push(&sign_expr(&de, sign));
            }
        }
        let mut out = Self::zero(&self.coords, self.degree + 1);
        for (b, a) in acc {
            out.insert(b, a.finish());
        }
        out
    }

    /// Interior product `ι_X`.
    pub fn contract(&self, x: &VectorField) -> Result<Self> {
        check(&self.coords, &x.coords)?;
        if self.degree == 0 {
            return Err(Error::Degree("cannot contract a 0-form".into()));
        }
        let mut acc: BTreeMap<Blade, Accum> = BTreeMap::new();
        for (b, e) in &self.terms {
            for (k, i) in b.indices().into_iter().enumerate() {
                let xi = &x.comps[i];
                if xi.is_zero() {
                    continue;
                }
                let sign = if k % 2 == 0 { 1 } else { -1 };
                acc.entry(Blade(b.0 & !(1 << i))).or_default().push(&sign_expr(&xi.mul(e), sign));
            }
        }
        let mut out = Self::zero(&self.coords, self.degree - 1);
        for (b, a) in acc {
            out.insert(b, a.finish());
        }
        Ok(out)
    }

    /// `F^*` of this form, which must live on `F`'s target.
    pub fn pullback(&self, f: &SmoothMap) -> Result<Self> {
        check(&self.coords, &f.target)?;
        let src = &f.source;
        let dfs: Vec<Option<DifferentialForm>> = {
            let mut used = 0u32;
            for b in self.terms.keys() {
                used |= b.0;
            }
            (0..self.dim())
                .map(|i| (used & (1 << i) != 0).then(|| DifferentialForm::scalar(src, f.comps[i].clone()).d()))
                .collect()
        };
        let sub = |e: &Expr| e.subst(&|i| f.comps[i].clone());
        let mut out = Self::zero(src, self.degree);
        let mut acc: BTreeMap<Blade, Accum> = BTreeMap::new();
        for (b, e) in &self.terms {
            let mut piece = DifferentialForm::scalar(src, sub(e)?);
            for i in b.indices() {
                if piece.is_zero() {
                    break;
                }
                piece = piece.wedge(dfs[i].as_ref().unwrap())?;
            }
            for (c, v) in piece.terms {
                acc.entry(c).or_default().push(&v);
            }
        }
        out.degree = self.degree;
        for (b, a) in acc {
            out.insert(b, a.finish());
        }
        Ok(out)
    }

    /// Substitute coordinates without changing the chart (coefficients only).
    pub fn subst_coeffs(&self, f: &dyn Fn(usize) -> Expr) -> Result<Self> {
        self.try_map_coeffs(|e| e.subst(f))
    }

    /// Coefficientwise zero test.
    pub fn is_zero_on(&self, domain: &SampleDomain) -> ZeroVerdict {
        combine(self.terms.values().map(|e| e.is_zero_on(domain)))
    }

    /// Zero test on the chart's default sample box.
    pub fn vanishes(&self) -> ZeroVerdict {
        self.is_zero_on(&self.coords.sample_domain())
    }

    /// Coefficient values at a point.
    pub fn eval(&self, point: &[f64]) -> Result<Vec<(Blade, Complex64)>> {
        self.terms.iter().map(|(b, e)| Ok((*b, e.eval(point)?))).collect()
    }

    /// Flat Hermitian length `(Σ|c_I|²)^{1/2}` at a point.
    pub fn norm_at(&self, point: &[f64]) -> Result<f64> {
        Ok(self.eval(point)?.iter().map(|(_, v)| v.norm_sqr()).sum::<f64>().sqrt())
    }

    pub fn show(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let names = self.coords.printer();
        let mut parts = Vec::new();
        for (b, e) in &self.terms {
            let coeff = e.to_string_with(&names);
            if b.degree() == 0 {
                parts.push(coeff);
                continue;
            }
            let basis: Vec<String> = b.indices().into_iter().map(|i| format!("d{}", names(i))).collect();
            let basis = basis.join("^");
            let text = if coeff == "1" {
                basis
            } else if e.term_count() == 1 && !coeff.contains('/') {
                format!("{}*{}", coeff, basis)
            } else {
                format!("({})*{}", coeff, basis)
            };
            parts.push(text);
        }
        parts.join(" + ")
    }
}

impl std::fmt::Display for DifferentialForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.show())
    }
}

/// Complex vector field `Σ X^i ∂/∂x_i`.
#[derive(Clone, PartialEq)]
pub struct VectorField {
    coords: Arc<Coordinates>,
    comps: Vec<Expr>,
}

impl std::fmt::Debug for VectorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.show())
    }
}

impl VectorField {
    pub fn new(coords: &Arc<Coordinates>, comps: Vec<Expr>) -> Result<Self> {
        if comps.len() != coords.dim() {
            return Err(Error::DimensionMismatch {
                expected: coords.dim(),
                found: comps.len(),
            });
        }
        Ok(VectorField {
            coords: coords.clone(),
            comps,
        })
    }

    pub fn zero(coords: &Arc<Coordinates>) -> Self {
        VectorField {
            coords: coords.clone(),
            comps: vec![Expr::zero(); coords.dim()],
        }
    }

    /// `∂/∂x_i`.
    pub fn partial(coords: &Arc<Coordinates>, i: usize) -> Self {
        let mut v = Self::zero(coords);
        v.comps[i] = Expr::one();
        v
    }

    /// `∂/∂z = ½(∂/∂x_re − i ∂/∂x_im)`.
    pub fn d_dz(coords: &Arc<Coordinates>, name: &str) -> Result<Self> {
        let c = coords.complex(name).ok_or_else(|| Error::UnknownCoordinate(name.to_string()))?;
        let mut v = Self::zero(coords);
        v.comps[c.re] = Expr::ratio(1, 2);
        v.comps[c.im] = Expr::constant(&Coeff::i() * &Coeff::from_ratio(-1, 2));
        Ok(v)
    }

    /// `∂/∂z̄ = ½(∂/∂x_re + i ∂/∂x_im)`.
    pub fn d_dzbar(coords: &Arc<Coordinates>, name: &str) -> Result<Self> {
        Ok(Self::d_dz(coords, name)?.conj())
    }

    pub fn coords(&self) -> &Arc<Coordinates> {
        &self.coords
    }

    pub fn comps(&self) -> &[Expr] {
        &self.comps
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(|c| c.is_zero())
    }

    /// `X f`.
    pub fn apply(&self, f: &Expr) -> Expr {
        let mut acc = Accum::new();
        for (i, x) in self.comps.iter().enumerate() {
            if !x.is_zero() && f.depends_on(i) {
                acc.push(&x.mul(&f.partial(i)));
            }
        }
        acc.finish()
    }

    /// Lie bracket `[X, Y]`.
    pub fn bracket(&self, other: &Self) -> Result<Self> {
        check(&self.coords, &other.coords)?;
        let comps = (0..self.comps.len())
            .map(|i| self.apply(&other.comps[i]).sub(&other.apply(&self.comps[i])))
            .collect();
        Ok(VectorField {
            coords: self.coords.clone(),
            comps,
        })
    }

    pub fn conj(&self) -> Self {
        VectorField {
            coords: self.coords.clone(),
            comps: self.comps.iter().map(|c| c.conj()).collect(),
        }
    }

    pub fn scale(&self, f: &Expr) -> Self {
        VectorField {
            coords: self.coords.clone(),
            comps: self.comps.iter().map(|c| c.mul(f)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check(&self.coords, &other.coords)?;
        Ok(VectorField {
            coords: self.coords.clone(),
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a.add(b)).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&Expr::int(-1)))
    }

    pub fn simplify(&self) -> Self {
        VectorField {
            coords: self.coords.clone(),
            comps: self.comps.iter().map(|c| c.simplify()).collect(),
        }
    }

    pub fn eval(&self, point: &[f64]) -> Result<Vec<Complex64>> {
        self.comps.iter().map(|c| c.eval(point)).collect()
    }

    pub fn is_zero_on(&self, domain: &SampleDomain) -> ZeroVerdict {
        combine(self.comps.iter().map(|c| c.is_zero_on(domain)))
    }

    pub fn show(&self) -> String {
        let names = self.coords.printer();
        let parts: Vec<String> = self
            .comps
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| {
                let t = c.to_string_with(&names);
                if t == "1" {
                    format!("D({})", names(i))
                } else {
                    format!("({})*D({})", t, names(i))
                }
            })
            .collect();
        if parts.is_empty() {
            "0".to_string()
        } else {
            parts.join(" + ")
        }
    }
}

impl std::fmt::Display for VectorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.show())
    }
}

/// Map between charts given by one expression per target coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothMap {
    source: Arc<Coordinates>,
    target: Arc<Coordinates>,
    comps: Vec<Expr>,
}

impl SmoothMap {
    pub fn new(source: &Arc<Coordinates>, target: &Arc<Coordinates>, comps: Vec<Expr>) -> Result<Self> {
        if comps.len() != target.dim() {
            return Err(Error::DimensionMismatch {
                expected: target.dim(),
                found: comps.len(),
            });
        }
        for c in &comps {
            if let Some(v) = c.free_vars().into_iter().find(|v| *v >= source.dim()) {
                return Err(Error::InvalidCoordinates(format!(
                    "map component uses coordinate index {} outside a {}-dimensional source",
                    v,
                    source.dim()
                )));
            }
        }
        Ok(SmoothMap {
            source: source.clone(),
            target: target.clone(),
            comps,
        })
    }

    pub fn identity(coords: &Arc<Coordinates>) -> Self {
        SmoothMap {
            source: coords.clone(),
            target: coords.clone(),
            comps: (0..coords.dim()).map(Expr::var).collect(),
        }
    }

    pub fn source(&self) -> &Arc<Coordinates> {
        &self.source
    }

    pub fn target(&self) -> &Arc<Coordinates> {
        &self.target
    }

    pub fn comps(&self) -> &[Expr] {
        &self.comps
    }

    /// `outer ∘ self`.
    pub fn then(&self, outer: &SmoothMap) -> Result<SmoothMap> {
        check(&self.target, &outer.source)?;
        let comps = outer
            .comps
            .iter()
            .map(|c| c.subst(&|i| self.comps[i].clone()))
            .collect::<Result<Vec<_>>>()?;
        Ok(SmoothMap {
            source: self.source.clone(),
            target: outer.target.clone(),
            comps,
        })
    }

    /// `f ∘ self` for a scalar on the target.
    pub fn pull_scalar(&self, f: &Expr) -> Result<Expr> {
        f.subst(&|i| self.comps[i].clone())
    }

    pub fn eval(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.comps.iter().map(|c| Ok(c.eval(point)?.re)).collect()
    }

    /// Jacobian columns `∂F/∂u_j` evaluated at a point.
    pub fn jacobian_at(&self, point: &[f64]) -> Result<Vec<Vec<Complex64>>> {
        (0..self.source.dim())
            .map(|j| self.comps.iter().map(|c| c.partial(j).eval(point)).collect())
            .collect()
    }
}
