//! Residue calculus against a defining function.
//!
//! Everything is driven by an [`AdaptedFrame`]: a defining function `s`
//! together with the vector field `V = ∂/∂s` dual to `ds` (so `ds(V) = 1`,
//! `ds̄(V) = 0`, and `V` has no component along the transverse coordinates).
//! Contraction with `V` splits a form as `ω = α + ds∧β` with `β = ι_V ω` and
//! `ι_V α = 0`, and `d/ds` acts on the `ι_V`-annihilated part as `ι_V d`.
//!
//! Iterated residues apply the single-divisor operators right to left, the
//! last divisor first. For `ω = f dz₁∧…∧dz_m` and `s_j = z_j` this yields
//! `(-1)^{m(m-1)/2}` times the iterated Laurent coefficient of `f`.

use std::sync::Arc;

use crate::coords::Coordinates;
use crate::cr::{check_cr_form, PolarSubmanifold, POINT_SAMPLES};
use crate::error::{Error, Result};
use crate::expr::{Coeff, Expr, SampleDomain, ZeroVerdict};
use crate::forms::{DifferentialForm, SmoothMap, VectorField};
use crate::linalg;

/// Tag recorded with every iterated-residue result.
pub const SIGN_CONVENTION: &str = "last-divisor-first";

fn factorial(n: u32) -> Coeff {
    let mut out = Coeff::one();
    for k in 2..=n {
        out = &out * &Coeff::from_int(k as i64);
    }
    out
}

/// Defining function with a chosen pair of leaf coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct AdaptedFrame {
    coords: Arc<Coordinates>,
    s: Expr,
    leaf: (usize, usize),
    dual: VectorField,
}

impl AdaptedFrame {
    /// `u`, `v` are the host coordinates in which `s` is inverted; all other
    /// coordinates are transverse.
    pub fn new(coords: &Arc<Coordinates>, s: Expr, u: usize, v: usize) -> Result<Self> {
        if u == v || u >= coords.dim() || v >= coords.dim() {
            return Err(Error::FrameViolated("leaf coordinates must be two distinct chart coordinates".into()));
        }
        let su = s.partial(u);
        let sv = s.partial(v);
        let det = su.mul(&sv.conj()).sub(&sv.mul(&su.conj())).simplify();
        if det.is_zero_on(&coords.sample_domain()).is_zero() {
            return Err(Error::FrameViolated(
                "ds and its conjugate are dependent modulo the transverse differentials".into(),
            ));
        }
        let inv = det.recip()?;
        let mut comps = vec![Expr::zero(); coords.dim()];
        comps[u] = sv.conj().mul(&inv).simplify();
        comps[v] = su.conj().mul(&inv).neg().simplify();
        let dual = VectorField::new(coords, comps)?;
        Ok(AdaptedFrame {
            coords: coords.clone(),
            s,
            leaf: (u, v),
            dual,
        })
    }

    /// Use the two coordinates `s` depends on. Fails when there are not
    /// exactly two.
    pub fn auto(coords: &Arc<Coordinates>, s: Expr) -> Result<Self> {
        let vars: Vec<usize> = s.free_vars().into_iter().collect();
        if vars.len() != 2 {
            return Err(Error::FrameViolated(format!(
                "cannot choose leaf coordinates automatically: s depends on {} coordinates",
                vars.len()
            )));
        }
        AdaptedFrame::new(coords, s, vars[0], vars[1])
    }

    pub fn coords(&self) -> &Arc<Coordinates> {
        &self.coords
    }

    pub fn defining(&self) -> &Expr {
        &self.s
    }

    pub fn leaf(&self) -> (usize, usize) {
        self.leaf
    }

    /// `∂/∂s`.
    pub fn dual(&self) -> &VectorField {
        &self.dual
    }

    pub fn ds(&self) -> DifferentialForm {
        DifferentialForm::scalar(&self.coords, self.s.clone()).d()
    }

    /// Verify the duality relations `ds(V) = 1`, `ds̄(V) = 0`.
    pub fn verify(&self) -> Result<ZeroVerdict> {
        let ds = self.ds();
        let one = ds.contract(&self.dual)?.as_scalar()?.sub(&Expr::one());
        let zero = ds.conj().contract(&self.dual)?.as_scalar()?;
        let domain = self.coords.sample_domain();
        let a = one.is_zero_on(&domain);
        let b = zero.is_zero_on(&domain);
        if !a.is_zero() || !b.is_zero() {
            return Err(Error::FrameViolated("dual field does not satisfy ds(V) = 1, ds̄(V) = 0".into()));
        }
        Ok(if matches!(a, ZeroVerdict::Exact(_)) && matches!(b, ZeroVerdict::Exact(_)) {
            ZeroVerdict::Exact(true)
        } else {
            ZeroVerdict::Probable(true)
        })
    }
}

/// `ω = α + ds∧β` with `β = ι_V ω`.
pub fn decompose(omega: &DifferentialForm, fr: &AdaptedFrame) -> Result<(DifferentialForm, DifferentialForm)> {
    if omega.degree() == 0 {
        return Ok((omega.clone(), DifferentialForm::zero(omega.coords(), 0)));
    }
    let beta = omega.contract(&fr.dual)?.simplify();
    let alpha = omega.sub(&fr.ds().wedge(&beta)?)?.simplify();
    Ok((alpha, beta))
}

/// `dλ/ds = ι_V dλ` for `λ` with no `ds` component.
pub fn d_ds(lambda: &DifferentialForm, fr: &AdaptedFrame) -> Result<DifferentialForm> {
    if lambda.degree() > 0 {
        let c = lambda.contract(&fr.dual)?;
        if !c.vanishes().is_zero() {
            return Err(Error::FrameViolated("form has a ds component".into()));
        }
    }
    Ok(lambda.d().contract(&fr.dual)?.simplify())
}

/// `(d/ds)^r ∘ ι_V`.
pub fn iterate_ds(omega: &DifferentialForm, fr: &AdaptedFrame, r: u32) -> Result<DifferentialForm> {
    if omega.degree() == 0 {
        return Err(Error::Degree("the ds-component of a 0-form is undefined".into()));
    }
    let mut cur = omega.contract(&fr.dual)?.simplify();
    for _ in 0..r {
        cur = cur.d().contract(&fr.dual)?.simplify();
    }
    Ok(cur)
}

/// Polar submanifold, its adapted frame, and a pole order.
#[derive(Clone, Debug, PartialEq)]
pub struct Divisor {
    pub sub: PolarSubmanifold,
    pub frame: AdaptedFrame,
    pub order: u32,
}

impl Divisor {
    pub fn new(sub: PolarSubmanifold, frame: AdaptedFrame, order: u32) -> Result<Self> {
        if order == 0 {
            return Err(Error::PoleOrder("pole order must be at least 1".into()));
        }
        if frame.defining() != sub.defining() {
            return Err(Error::FrameViolated("frame and submanifold use different defining functions".into()));
        }
        if **frame.coords() != **sub.host().coords() {
            return Err(Error::CoordinateMismatch);
        }
        Ok(Divisor { sub, frame, order })
    }

    /// Divisor with an automatically chosen adapted frame.
    pub fn auto(sub: PolarSubmanifold, order: u32) -> Result<Self> {
        let frame = AdaptedFrame::auto(sub.host().coords(), sub.defining().clone())?;
        Divisor::new(sub, frame, order)
    }

    pub fn s(&self) -> &Expr {
        self.frame.defining()
    }

    fn with_order(&self, order: u32) -> Divisor {
        Divisor {
            sub: self.sub.clone(),
            frame: self.frame.clone(),
            order,
        }
    }
}

/// Compatibility of two local defining functions, `s_α = g s_β` with `g`
/// nonvanishing. Only validated; residues are always computed in one chart.
pub fn check_transition(s_alpha: &Expr, s_beta: &Expr, g: &Expr, domain: &SampleDomain) -> Result<ZeroVerdict> {
    let mut evaluated = 0;
    for p in domain.points(POINT_SAMPLES) {
        match g.eval(&p) {
            Ok(v) if v.norm() < 1e-12 => {
                return Err(Error::FrameViolated(format!("transition function vanishes at {:?}", p)))
            }
            Ok(_) => evaluated += 1,
            Err(Error::DivisionByZero) | Err(Error::Overflow) => {}
            Err(e) => return Err(e),
        }
    }
    if evaluated == 0 {
        return Err(Error::Undecidable("no sample point could be evaluated".into()));
    }
    Ok(s_alpha.sub(&g.mul(s_beta)).is_zero_on(domain))
}

/// `ω / (s₁^{q₁} ⋯ s_m^{q_m})`.
#[derive(Clone, Debug, PartialEq)]
pub struct SemiMeromorphicForm {
    pub omega: DifferentialForm,
    pub divisors: Vec<Divisor>,
}

impl SemiMeromorphicForm {
    pub fn new(omega: DifferentialForm, divisors: Vec<Divisor>) -> Result<Self> {
        if divisors.is_empty() {
            return Err(Error::PoleOrder("at least one divisor is required".into()));
        }
        for d in &divisors {
            if **d.frame.coords() != **omega.coords() {
                return Err(Error::CoordinateMismatch);
            }
        }
        Ok(SemiMeromorphicForm { omega, divisors })
    }

    pub fn simple(omega: DifferentialForm, divisor: Divisor) -> Result<Self> {
        Self::new(omega, vec![divisor])
    }

    pub fn degree(&self) -> usize {
        self.omega.degree()
    }

    fn single(&self) -> Result<&Divisor> {
        match self.divisors.as_slice() {
            [d] => Ok(d),
            _ => Err(Error::PoleOrder(format!("expected a single divisor, found {}", self.divisors.len()))),
        }
    }

    /// The form as an ordinary form with rational coefficients.
    pub fn total(&self) -> Result<DifferentialForm> {
        let mut den = Expr::one();
        for d in &self.divisors {
            den = den.mul(&d.s().powi(d.order as i64)?);
        }
        let inv = den.recip()?;
        Ok(self.omega.scale(&inv))
    }

    /// Numerator of `dφ` over `Π s_j^{q_j+1}`:
    /// `(Π s_l) dω − Σ_j q_j (Π_{l≠j} s_l) ds_j∧ω`.
    pub fn closedness_numerator(&self) -> Result<DifferentialForm> {
        let m = self.divisors.len();
        let mut out = self.omega.d();
        for d in &self.divisors {
            out = out.scale(d.s());
        }
        for j in 0..m {
            let mut others = Expr::int(self.divisors[j].order as i64);
            for (l, d) in self.divisors.iter().enumerate() {
                if l != j {
                    others = others.mul(d.s());
                }
            }
            let term = self.divisors[j].frame.ds().wedge(&self.omega)?.scale(&others);
            out = out.sub(&term)?;
        }
        Ok(out)
    }

    /// Zero verdict for `dφ` off the polar locus.
    pub fn closedness(&self) -> Result<ZeroVerdict> {
        Ok(self.closedness_numerator()?.vanishes())
    }

    fn require_closed(&self) -> Result<ZeroVerdict> {
        let v = self.closedness()?;
        match v {
            ZeroVerdict::Exact(true) | ZeroVerdict::Probable(true) => Ok(v),
            ZeroVerdict::Undecidable => Err(Error::Undecidable("closedness could not be decided".into())),
            _ => Err(Error::NotClosed),
        }
    }
}

/// Residue form on `S`, in the parameter coordinates of `S`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidueResult {
    pub form: DifferentialForm,
    /// Representative on the host chart before restriction to `S`.
    pub ambient: DifferentialForm,
    pub closed_input: ZeroVerdict,
    pub closed_output: ZeroVerdict,
    /// Whether the restricted form passes the CR-form check on `S`, when an
    /// induced CR structure is available.
    pub cr_output: Option<bool>,
    pub sign_convention: &'static str,
}

fn finish(
    ambient: DifferentialForm,
    locus: &SmoothMap,
    induced: Option<crate::cr::CRChart>,
    closed_input: ZeroVerdict,
) -> Result<ResidueResult> {
    let form = ambient.pullback(locus)?.simplify();
    let closed_output = form.d().vanishes();
    let cr_output = match induced {
        Some(chart) => Some(check_cr_form(&chart, &form, form.degree())?.pass()),
        None => None,
    };
    Ok(ResidueResult {
        form,
        ambient,
        closed_input,
        closed_output,
        cr_output,
        sign_convention: SIGN_CONVENTION,
    })
}

/// `res[φ] = ι_V ω |_S` for a simple pole.
pub fn residue_simple(phi: &SemiMeromorphicForm) -> Result<ResidueResult> {
    let d = phi.single()?;
    if d.order != 1 {
        return Err(Error::PoleOrder(format!("simple-pole residue needs order 1, found {}", d.order)));
    }
    residue_class(phi)
}

/// `(1/(q−1)!) (d/ds)^{q−1} ι_V ω |_S`.
pub fn residue_class(phi: &SemiMeromorphicForm) -> Result<ResidueResult> {
    let d = phi.single()?;
    let closed = phi.require_closed()?;
    let q = d.order;
    let ambient = iterate_ds(&phi.omega, &d.frame, q - 1)?.scale_c(&factorial(q - 1).recip().unwrap());
    finish(ambient, d.sub.param(), d.sub.induced_chart().ok(), closed)
}

/// One pole-order reduction step `φ = φ̂ + dρ`.
#[derive(Clone, Debug, PartialEq)]
pub struct PoleReduction {
    /// `φ̂`, of order `q − 1`.
    pub reduced: SemiMeromorphicForm,
    /// `ρ = η / s^{q−1}`.
    pub rho: SemiMeromorphicForm,
}

impl PoleReduction {
    /// `s^q (φ̂ − φ + dρ)`; vanishes exactly for closed input.
    pub fn identity_numerator(&self, phi: &SemiMeromorphicForm) -> Result<DifferentialForm> {
        let d = phi.single()?;
        let s = d.s();
        let q = d.order as i64;
        let eta = &self.rho.omega;
        let ds = d.frame.ds();
        let lhs = self.reduced.omega.scale(s).sub(&phi.omega)?;
        let drho = eta.d().scale(s).sub(&ds.wedge(eta)?.scale(&Expr::int(q - 1)))?;
        Ok(lhs.add(&drho)?.simplify())
    }
}

/// Lower the pole order by one.
pub fn reduce_pole(phi: &SemiMeromorphicForm) -> Result<PoleReduction> {
    let d = phi.single()?;
    let q = d.order;
    if q < 2 {
        return Err(Error::PoleOrder("pole reduction needs order at least 2".into()));
    }
    phi.require_closed()?;
    let fr = &d.frame;
    let (alpha, beta) = decompose(&phi.omega, fr)?;
    let dbeta = beta.d();
    let dbeta_phi = if dbeta.degree() == 0 {
        dbeta.clone()
    } else {
        dbeta.sub(&fr.ds().wedge(&dbeta.contract(fr.dual())?)?)?
    };
    let alpha_s = if alpha.is_zero() {
        DifferentialForm::zero(alpha.coords(), alpha.degree())
    } else {
        alpha.d().contract(fr.dual())?
    };
    let qc = Coeff::from_int(q as i64);
    let q1 = Coeff::from_int(q as i64 - 1);
    let hat = alpha_s
        .sub(&dbeta_phi)?
        .scale_c(&qc.recip().unwrap())
        .add(&dbeta.scale_c(&q1.recip().unwrap()))?
        .simplify();
    let eta = beta.scale_c(&q1.recip().unwrap()).neg().simplify();
    Ok(PoleReduction {
        reduced: SemiMeromorphicForm::simple(hat, d.with_order(q - 1))?,
        rho: SemiMeromorphicForm::simple(eta, d.with_order(q - 1))?,
    })
}

/// `φ = ω⁽¹⁾/s + d(Σ_j η⁽ʲ⁾/s^j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentExpansion {
    /// `(j, η⁽ʲ⁾)` for `j = q−1, …, 1`.
    pub principal: Vec<(u32, DifferentialForm)>,
    pub simple_part: DifferentialForm,
    pub steps: Vec<PoleReduction>,
    pub reconstruction: ZeroVerdict,
}

pub fn laurent_expand(phi: &SemiMeromorphicForm) -> Result<LaurentExpansion> {
    let d = phi.single()?;
    let mut cur = phi.clone();
    let mut principal = Vec::new();
    let mut steps = Vec::new();
    while cur.divisors[0].order > 1 {
        let red = reduce_pole(&cur)?;
        principal.push((cur.divisors[0].order - 1, red.rho.omega.clone()));
        cur = red.reduced.clone();
        steps.push(red);
    }
    if principal.is_empty() {
        phi.require_closed()?;
    }
    let simple_part = cur.omega.clone();

    // s^q (φ − ω⁽¹⁾/s − Σ d(η⁽ʲ⁾/s^j))
    let s = d.s();
    let q = d.order as i64;
    let ds = d.frame.ds();
    let mut rest = phi.omega.sub(&simple_part.scale(&s.powi(q - 1)?))?;
    for (j, eta) in &principal {
        let j = *j as i64;
        let piece = eta
            .d()
            .scale(&s.powi(q - j)?)
            .sub(&ds.wedge(eta)?.scale(&s.powi(q - j - 1)?.scale(&Coeff::from_int(j))))?;
        rest = rest.sub(&piece)?;
    }
    let reconstruction = rest.simplify().vanishes();
    Ok(LaurentExpansion {
        principal,
        simple_part,
        steps,
        reconstruction,
    })
}

/// Normal-crossing checks for a list of divisors: mutual compatibility of
/// the adapted frames and independence of all `ds_j, ds̄_j`.
pub fn check_normal_crossings(divisors: &[Divisor]) -> Result<()> {
    let Some(first) = divisors.first() else { return Ok(()) };
    let coords = first.frame.coords().clone();
    let domain = coords.sample_domain();
    for (j, dj) in divisors.iter().enumerate() {
        for (l, dl) in divisors.iter().enumerate() {
            if j == l {
                continue;
            }
            let a = dj.frame.dual().apply(dl.s());
            let b = dj.frame.dual().apply(&dl.s().conj());
            if !a.is_zero_on(&domain).is_zero() || !b.is_zero_on(&domain).is_zero() {
                return Err(Error::NotTransversal(format!(
                    "the dual field of divisor {} differentiates divisor {}",
                    j + 1,
                    l + 1
                )));
            }
        }
    }
    let grads: Vec<(Vec<Expr>, Vec<Expr>)> = divisors
        .iter()
        .map(|d| {
            let g: Vec<Expr> = (0..coords.dim()).map(|i| d.s().partial(i)).collect();
            let gb = g.iter().map(|e| e.conj()).collect();
            (g, gb)
        })
        .collect();
    let mut evaluated = 0;
    for p in domain.points(POINT_SAMPLES) {
        let mut cols = Vec::new();
        let mut ok = true;
        for (g, gb) in &grads {
            for v in [g, gb] {
                match v.iter().map(|e| e.eval(&p)).collect::<Result<Vec<_>>>() {
                    Ok(c) => cols.push(c),
                    Err(_) => ok = false,
                }
            }
        }
        if !ok {
            continue;
        }
        evaluated += 1;
        if linalg::rank(&cols) < 2 * divisors.len() {
            return Err(Error::NotTransversal(format!("differentials are dependent at {:?}", p)));
        }
    }
    if evaluated == 0 {
        return Err(Error::Undecidable("no sample point could be evaluated".into()));
    }
    Ok(())
}

/// The iterated operator `∂^{Σq−m}/∂s₁^{q₁}⋯∂s_m^{q_m}` on the host chart,
/// scaled by `1/Π(q_j−1)!`, applied last divisor first.
pub fn multi_operator(omega: &DifferentialForm, divisors: &[Divisor]) -> Result<DifferentialForm> {
    if omega.degree() < divisors.len() {
        return Err(Error::Degree(format!(
            "a {}-form has no component along {} divisors",
            omega.degree(),
            divisors.len()
        )));
    }
    let mut cur = omega.clone();
    let mut scale = Coeff::one();
    for d in divisors.iter().rev() {
        cur = iterate_ds(&cur, &d.frame, d.order - 1)?;
        scale = &scale * &factorial(d.order - 1);
    }
    Ok(cur.scale_c(&scale.recip().unwrap()))
}

/// Iterated residue on `S = ∩ S_j`, parametrized by `locus`.
pub fn residue_multi(phi: &SemiMeromorphicForm, locus: &SmoothMap) -> Result<ResidueResult> {
    check_normal_crossings(&phi.divisors)?;
    let closed = phi.require_closed()?;
    let ambient = multi_operator(&phi.omega, &phi.divisors)?;
    finish(ambient, locus, None, closed)
}
