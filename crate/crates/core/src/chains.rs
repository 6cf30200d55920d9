//! Parametrized chains, tubes around polar loci, and numerical integration.
//!
//! A [`Cell`] is a smooth map from the unit cube `[0,1]^p` into a chart. Axes
//! flagged periodic are closed circles and use the uniform rule; the others use
//! Gauss-Legendre. Integration evaluates the form at the image point and
//! multiplies by the Jacobian minors, so no symbolic pullback is built.
//!
//! Tubes are explicit only for defining functions that are affine in their
//! leaf coordinates, `s = a·u + b·v + c(transverse)` with constant `a`, `b`.
//! The circle parameter is prepended to the cell parameters; with this
//! orientation `∫ dz/z` over the tube of a point is `+2πi`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::coords::Coordinates;
use crate::error::{Error, Result};
use crate::expr::{Coeff, Expr, SampleDomain, ZeroVerdict};
use crate::forms::{DifferentialForm, SmoothMap};
use crate::quadrature::{gauss_legendre, periodic, Rule};
use crate::residue::{multi_operator, residue_class, residue_multi, AdaptedFrame, SemiMeromorphicForm};

/// Default tube radius.
pub const DEFAULT_RADIUS: f64 = 0.5;
/// Default quadrature points per axis.
pub const DEFAULT_ORDER: usize = 32;
/// Default acceptance bound for quadrature comparisons.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

/// Coordinates `x1..xp` of the unit `p`-cube.
pub fn cube(p: usize) -> Arc<Coordinates> {
    Arc::new(Coordinates::numbered(p))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    map: SmoothMap,
    periodic: Vec<bool>,
    multiplicity: i64,
}

impl Cell {
    pub fn new(map: SmoothMap, periodic: Vec<bool>, multiplicity: i64) -> Result<Self> {
        if multiplicity == 0 {
            return Err(Error::Type("cell multiplicity must be nonzero".into()));
        }
        if periodic.len() != map.source().dim() {
            return Err(Error::DimensionMismatch {
                expected: map.source().dim(),
                found: periodic.len(),
            });
        }
        Ok(Cell {
            map,
            periodic,
            multiplicity,
        })
    }

    /// Cell over the cube with every axis periodic.
    pub fn closed(map: SmoothMap) -> Result<Self> {
        let p = map.source().dim();
        Cell::new(map, vec![true; p], 1)
    }

    /// A 0-cell at the given point.
    pub fn point(target: &Arc<Coordinates>, at: Vec<Expr>) -> Result<Self> {
        let map = SmoothMap::new(&cube(0), target, at)?;
        Cell::new(map, vec![], 1)
    }

    pub fn dim(&self) -> usize {
        self.map.source().dim()
    }

    pub fn map(&self) -> &SmoothMap {
        &self.map
    }

    pub fn periodic(&self) -> &[bool] {
        &self.periodic
    }

    pub fn multiplicity(&self) -> i64 {
        self.multiplicity
    }

    pub fn with_multiplicity(mut self, multiplicity: i64) -> Result<Self> {
        if multiplicity == 0 {
            return Err(Error::Type("cell multiplicity must be nonzero".into()));
        }
        self.multiplicity = multiplicity;
        Ok(self)
    }

    fn cube_domain(&self) -> SampleDomain {
        SampleDomain::new(vec![0.0; self.dim()], vec![1.0; self.dim()])
    }
}

/// Integer combination of cells of one dimension in one chart.
#[derive(Clone, Debug, PartialEq)]
pub struct Chain {
    target: Arc<Coordinates>,
    dim: usize,
    cells: Vec<Cell>,
}

impl Chain {
    pub fn new(cells: Vec<Cell>) -> Result<Self> {
        let first = cells
            .first()
            .ok_or_else(|| Error::Type("a chain needs at least one cell".into()))?;
        let target = first.map.target().clone();
        let dim = first.dim();
        for c in &cells {
            if c.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: c.dim(),
                });
            }
            if **c.map.target() != *target {
                return Err(Error::CoordinateMismatch);
            }
        }
        Ok(Chain { target, dim, cells })
    }

    pub fn single(cell: Cell) -> Self {
        Chain {
            target: cell.map.target().clone(),
            dim: cell.dim(),
            cells: vec![cell],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn target(&self) -> &Arc<Coordinates> {
        &self.target
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn neg(&self) -> Chain {
        let mut out = self.clone();
        for c in &mut out.cells {
            c.multiplicity = -c.multiplicity;
        }
        out
    }

    pub fn concat(&self, other: &Chain) -> Result<Chain> {
        let mut cells = self.cells.clone();
        cells.extend(other.cells.iter().cloned());
        Chain::new(cells)
    }

    /// Image of the chain under `f`.
    pub fn push_forward(&self, f: &SmoothMap) -> Result<Chain> {
        let cells = self
            .cells
            .iter()
            .map(|c| {
                Ok(Cell {
                    map: c.map.then(f)?,
                    periodic: c.periodic.clone(),
                    multiplicity: c.multiplicity,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Chain::new(cells)
    }
}

/// Radius and adapted frames for a (torus) tube.
#[derive(Clone, Debug, PartialEq)]
pub struct TubeSpec {
    radius: f64,
    frames: Vec<AdaptedFrame>,
}

impl TubeSpec {
    pub fn new(radius: f64, frames: Vec<AdaptedFrame>) -> Result<Self> {
        if !(radius > 0.0 && radius <= 1.0) {
            return Err(Error::Tube(format!("radius must lie in (0, 1], got {radius}")));
        }
        if frames.is_empty() {
            return Err(Error::Tube("at least one adapted frame is required".into()));
        }
        for (i, a) in frames.iter().enumerate() {
            for b in &frames[i + 1..] {
                let (u1, v1) = a.leaf();
                let (u2, v2) = b.leaf();
                if u1 == u2 || u1 == v2 || v1 == u2 || v1 == v2 {
                    return Err(Error::Tube("adapted frames share a leaf coordinate".into()));
                }
                if **a.coords() != **b.coords() {
                    return Err(Error::CoordinateMismatch);
                }
            }
        }
        Ok(TubeSpec { radius, frames })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn frames(&self) -> &[AdaptedFrame] {
        &self.frames
    }
}

/// Affine data `s = a·u + b·v + c` of a frame, with `c` free of `u`, `v`.
struct Affine {
    a: Coeff,
    b: Coeff,
    c: Expr,
    det: Coeff,
}

fn affine(fr: &AdaptedFrame) -> Result<Affine> {
    let (u, v) = fr.leaf();
    let s = fr.defining();
    let a = s.partial(u).simplify().as_constant();
    let b = s.partial(v).simplify().as_constant();
    let (a, b) = match (a, b) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(Error::Tube(
                "defining function must be affine in its leaf coordinates".into(),
            ))
        }
    };
    let c = s
        .sub(&Expr::var(u).scale(&a))
        .sub(&Expr::var(v).scale(&b))
        .simplify();
    let re = |x: &Coeff| Coeff::real(x.re.clone());
    let im = |x: &Coeff| Coeff::real(x.im.clone());
    let det = &(&re(&a) * &im(&b)) - &(&re(&b) * &im(&a));
    if det.is_zero() {
        return Err(Error::Tube("leaf coefficients of s are real-dependent".into()));
    }
    Ok(Affine { a, b, c, det })
}

/// Circle bundle of radius `t` over `gamma` (a chain in the host chart lying
/// on `{s = 0}`).
pub fn tube(gamma: &Chain, frame: &AdaptedFrame, t: f64) -> Result<Chain> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::Tube(format!("radius must lie in (0, 1], got {t}")));
    }
    if **gamma.target() != **frame.coords() {
        return Err(Error::CoordinateMismatch);
    }
    let aff = affine(frame)?;
    let radius = Coeff::from_f64(t).ok_or_else(|| Error::Tube("radius is not finite".into()))?;
    let (u, v) = frame.leaf();
    let re = |x: &Coeff| Coeff::real(x.re.clone());
    let im = |x: &Coeff| Coeff::real(x.im.clone());
    let inv = aff.det.recip().unwrap();
    let cells = gamma
        .cells
        .iter()
        .map(|cell| {
            let on_s = cell.map.pull_scalar(frame.defining())?;
            let verdict = if cell.dim() == 0 {
                on_s.is_zero_on(&SampleDomain::new(vec![], vec![]))
            } else {
                on_s.is_zero_on(&cell.cube_domain())
            };
            if !verdict.is_zero() {
                return Err(Error::Tube("cell does not lie on the polar locus".into()));
            }
            let shifted: Vec<Expr> = cell
                .map
                .comps()
                .iter()
                .map(|e| e.subst(&|i| Expr::var(i + 1)))
                .collect::<Result<_>>()?;
            let angle = Expr::var(0).mul(&Expr::pi()).scale(&Coeff::from_int(2));
            let w = Expr::cos(&angle)
                .add(&Expr::sin(&angle).scale(&Coeff::i()))
                .scale(&radius);
            let x = w.sub(&aff.c.subst(&|i| shifted[i].clone())?);
            let (r, s) = (x.re(), x.im());
            let uu = r.scale(&im(&aff.b)).sub(&s.scale(&re(&aff.b))).scale(&inv);
            let vv = s.scale(&re(&aff.a)).sub(&r.scale(&im(&aff.a))).scale(&inv);
            let mut comps = shifted;
            comps[u] = uu.simplify();
            comps[v] = vv.simplify();
            let map = SmoothMap::new(&cube(cell.dim() + 1), gamma.target(), comps)?;
            let mut periodic = vec![true];
            periodic.extend(cell.periodic.iter().copied());
            Cell::new(map, periodic, cell.multiplicity)
        })
        .collect::<Result<Vec<_>>>()?;
    Chain::new(cells)
}

/// Iterated tube over the frames in the declared order; the circle parameters
/// end up in reverse order, `(θ_m, …, θ_1, y)`.
pub fn torus_tube(gamma: &Chain, spec: &TubeSpec) -> Result<Chain> {
    let mut cur = gamma.clone();
    for fr in &spec.frames {
        cur = tube(&cur, fr, spec.radius)?;
    }
    Ok(cur)
}

/// `Σ multiplicity · ∫_{[0,1]^p} F*a` by tensor-product quadrature with
/// `order` points per axis.
pub fn integrate(chain: &Chain, a: &DifferentialForm, order: usize) -> Result<Complex64> {
    if order == 0 {
        return Err(Error::Type("quadrature order must be positive".into()));
    }
    if **a.coords() != **chain.target() {
        return Err(Error::CoordinateMismatch);
    }
    if a.degree() != chain.dim() && !a.is_zero() {
        return Err(Error::Degree(format!(
            "cannot integrate a {}-form over a {}-chain",
            a.degree(),
            chain.dim()
        )));
    }
    let mut total = Complex64::new(0.0, 0.0);
    for cell in &chain.cells {
        total += integrate_cell(cell, a, order)? * cell.multiplicity as f64;
    }
    Ok(total)
}

fn integrate_cell(cell: &Cell, a: &DifferentialForm, order: usize) -> Result<Complex64> {
    let p = cell.dim();
    let terms: Vec<(Vec<usize>, &Expr)> = a.terms().map(|(b, e)| (b.indices(), e)).collect();
    if terms.is_empty() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let comps = cell.map.comps();
    let jac: Vec<Vec<Expr>> = comps.iter().map(|c| (0..p).map(|j| c.partial(j)).collect()).collect();
    let rules: Vec<Rule> = cell
        .periodic
        .iter()
        .map(|&per| if per { periodic(order) } else { gauss_legendre(order) })
        .collect();
    let integrand = |u: &[f64]| -> Result<Complex64> {
        let x: Vec<f64> = comps
            .iter()
            .map(|c| c.eval(u).map(|v| v.re))
            .collect::<Result<_>>()?;
        let mut out = Complex64::new(0.0, 0.0);
        for (idx, coeff) in &terms {
            let f = coeff.eval(&x)?;
            let minor = if p == 0 {
                1.0
            } else {
                let m = DMatrix::from_fn(p, p, |r, c| jac[idx[r]][c].eval(u).map(|v| v.re).unwrap_or(f64::NAN));
                m.determinant()
            };
            out += f * minor;
        }
        if !out.re.is_finite() || !out.im.is_finite() {
            return Err(Error::SingularIntegrand(format!("non-finite integrand at {u:?}")));
        }
        Ok(out)
    };
    let singular = |e: Error| match e {
        Error::DivisionByZero | Error::Overflow => Error::SingularIntegrand(e.to_string()),
        other => other,
    };
    if p == 0 {
        return integrand(&[]).map_err(singular);
    }
    // Parallel over the first axis; partial sums are combined in index order
    // so the result does not depend on scheduling.
    let partials: Vec<Result<Complex64>> = (0..rules[0].len())
        .into_par_iter()
        .map(|i0| {
            let mut u = vec![0.0; p];
            u[0] = rules[0].nodes[i0];
            let mut idx = vec![0usize; p];
            let mut acc = Complex64::new(0.0, 0.0);
            loop {
                let mut w = rules[0].weights[i0];
                for k in 1..p {
                    u[k] = rules[k].nodes[idx[k]];
                    w *= rules[k].weights[idx[k]];
                }
                acc += integrand(&u)? * w;
                let mut k = p;
                loop {
                    k -= 1;
                    if k == 0 {
                        return Ok(acc);
                    }
                    idx[k] += 1;
                    if idx[k] < rules[k].len() {
                        break;
                    }
                    idx[k] = 0;
                }
            }
        })
        .collect();
    let mut sum = Complex64::new(0.0, 0.0);
    for part in partials {
        sum += part.map_err(singular)?;
    }
    Ok(sum)
}

/// Options for [`verify_residue_formula`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyOptions {
    pub radius: f64,
    pub order: usize,
    pub tolerance: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            radius: DEFAULT_RADIUS,
            order: DEFAULT_ORDER,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

/// Both sides of the tube/residue identity.
#[derive(Clone, Debug, PartialEq)]
pub struct FormulaReport {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub abs_error: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// The residue form integrated on the right-hand side.
    pub residue: DifferentialForm,
}

/// `∫_{δ^m γ} φ` against `(2πi)^m ∫_γ Res^m[φ]`.
///
/// `gamma` lives in the parameter coordinates of the polar locus. With one
/// divisor its own parametrization is used; with several, `locus` must
/// parametrize the intersection.
pub fn verify_residue_formula(
    phi: &SemiMeromorphicForm,
    gamma: &Chain,
    opts: VerifyOptions,
    locus: Option<&SmoothMap>,
) -> Result<FormulaReport> {
    let m = phi.divisors.len();
    let (res, locus) = if m == 1 {
        let d = &phi.divisors[0];
        let locus = locus.unwrap_or(d.sub.param()).clone();
        (residue_class(phi)?, locus)
    } else {
        let locus = locus
            .ok_or_else(|| Error::Type("an iterated residue needs a parametrization of the intersection".into()))?
            .clone();
        (residue_multi(phi, &locus)?, locus)
    };
    if **gamma.target() != **locus.source() {
        return Err(Error::CoordinateMismatch);
    }
    let spec = TubeSpec::new(opts.radius, phi.divisors.iter().map(|d| d.frame.clone()).collect())?;
    let host = gamma.push_forward(&locus)?;
    let lhs = integrate(&torus_tube(&host, &spec)?, &phi.total()?, opts.order)?;
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    let rhs = two_pi_i.powu(m as u32) * integrate(gamma, &res.form, opts.order)?;
    let abs_error = (lhs - rhs).norm();
    Ok(FormulaReport {
        lhs,
        rhs,
        abs_error,
        tolerance: opts.tolerance,
        pass: abs_error <= opts.tolerance,
        residue: res.form,
    })
}

/// A connected component `Z_i` of the polar locus with a cycle on it.
#[derive(Clone, Debug, PartialEq)]
pub struct Component {
    /// Parametrization of `Z_i` in the host chart.
    pub locus: SmoothMap,
    /// Cycle in the parameter coordinates of `locus`.
    pub cycle: Chain,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AbelReport {
    pub terms: Vec<Complex64>,
    pub sum: Complex64,
    pub tolerance: f64,
    pub pass: bool,
}

/// `Σ_i ∫_{Z_i} Res^m[φ]` on a compact chart.
///
/// Compactness is read from the chart's periods unless `certified` is set.
pub fn abel_sum(
    phi: &SemiMeromorphicForm,
    components: &[Component],
    order: usize,
    tolerance: f64,
    certified: bool,
) -> Result<AbelReport> {
    let coords = phi.omega.coords();
    let m = phi.divisors.len();
    let expected = coords.dim().checked_sub(m).unwrap_or(0);
    if phi.degree() != expected || coords.dim() < m {
        return Err(Error::Degree(format!(
            "the global residue sum needs a form of degree {expected}, found {}",
            phi.degree()
        )));
    }
    if !certified && !coords.all_periodic() {
        return Err(Error::NotCompact);
    }
    match phi.closedness()? {
        ZeroVerdict::Exact(true) | ZeroVerdict::Probable(true) => {}
        ZeroVerdict::Undecidable => return Err(Error::Undecidable("closedness could not be decided".into())),
        _ => return Err(Error::NotClosed),
    }
    let op = multi_operator(&phi.omega, &phi.divisors)?;
    let terms = components
        .iter()
        .map(|c| {
            if **c.locus.target() != **coords {
                return Err(Error::CoordinateMismatch);
            }
            integrate(&c.cycle, &op.pullback(&c.locus)?, order)
        })
        .collect::<Result<Vec<_>>>()?;
    let sum = terms.iter().sum::<Complex64>();
    Ok(AbelReport {
        pass: sum.norm() <= tolerance,
        terms,
        sum,
        tolerance,
    })
}
