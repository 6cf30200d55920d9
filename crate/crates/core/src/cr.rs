//! CR charts and the checks that validate them.
//!
//! A chart of type `(n, k)` has real dimension `2n + k` and carries a frame
//! `L_1, …, L_n` of complex vector fields declared to span `T^{0,1}`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::coords::Coordinates;
use crate::error::{Error, Result};
use crate::expr::{Expr, SampleDomain, ZeroVerdict};
use crate::forms::{DifferentialForm, SmoothMap, VectorField};
use crate::linalg;

/// Sample points used by pointwise rank conditions.
pub const POINT_SAMPLES: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Exact,
    Sampled,
}

impl Method {
    pub fn of(v: ZeroVerdict) -> Method {
        match v {
            ZeroVerdict::Exact(_) => Method::Exact,
            _ => Method::Sampled,
        }
    }

    pub fn join(self, other: Method) -> Method {
        if self == Method::Exact && other == Method::Exact {
            Method::Exact
        } else {
            Method::Sampled
        }
    }
}

/// One named pass/fail condition.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub method: Method,
    pub detail: String,
    pub witness: Option<Vec<f64>>,
}

impl Check {
    fn new(name: &str, pass: bool, method: Method, detail: impl Into<String>) -> Self {
        Check {
            name: name.to_string(),
            pass,
            method,
            detail: detail.into(),
            witness: None,
        }
    }

    fn with_witness(mut self, w: Option<Vec<f64>>) -> Self {
        self.witness = w;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn method(&self) -> Method {
        self.checks.iter().fold(Method::Exact, |m, c| m.join(c.method))
    }
}

fn verdict_pass(v: ZeroVerdict) -> Result<bool> {
    match v {
        ZeroVerdict::Undecidable => Err(Error::Undecidable("zero test failed at too many sample points".into())),
        v => Ok(v.is_zero()),
    }
}

/// Point of `domain` where `e` is visibly nonzero.
fn nonzero_witness(e: &Expr, domain: &SampleDomain) -> Option<Vec<f64>> {
    domain
        .points(4 * POINT_SAMPLES)
        .into_iter()
        .find(|p| matches!(e.eval(p), Ok(v) if v.norm() > 1e-9))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CRChart {
    coords: Arc<Coordinates>,
    n: usize,
    k: usize,
    frame: Vec<VectorField>,
    domain: SampleDomain,
}

impl CRChart {
    pub fn new(coords: &Arc<Coordinates>, n: usize, k: usize, frame: Vec<VectorField>) -> Result<Self> {
        if 2 * n + k != coords.dim() {
            return Err(Error::DimensionMismatch {
                expected: coords.dim(),
                found: 2 * n + k,
            });
        }
        if frame.len() != n {
            return Err(Error::DegenerateFrame(format!("type ({}, {}) needs {} frame fields, got {}", n, k, n, frame.len())));
        }
        if frame.iter().any(|l| **l.coords() != **coords) {
            return Err(Error::CoordinateMismatch);
        }
        Ok(CRChart {
            coords: coords.clone(),
            n,
            k,
            frame,
            domain: coords.sample_domain(),
        })
    }

    /// Override the sampling box, e.g. to stay away from singular loci.
    pub fn with_domain(mut self, domain: SampleDomain) -> Result<Self> {
        if domain.dim() != self.coords.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.coords.dim(),
                found: domain.dim(),
            });
        }
        self.domain = domain;
        Ok(self)
    }

    pub fn coords(&self) -> &Arc<Coordinates> {
        &self.coords
    }

    pub fn cr_type(&self) -> (usize, usize) {
        (self.n, self.k)
    }

    pub fn frame(&self) -> &[VectorField] {
        &self.frame
    }

    pub fn domain(&self) -> &SampleDomain {
        &self.domain
    }

    fn sample_points(&self) -> Vec<Vec<f64>> {
        self.domain.points(POINT_SAMPLES)
    }

    /// Pointwise independence of the frame and `span L ∩ span L̄ = 0`.
    pub fn check_frame(&self) -> Result<()> {
        if self.n == 0 {
            return Ok(());
        }
        for p in self.sample_points() {
            let mut cols: Vec<Vec<Complex64>> = Vec::new();
            let mut ok = true;
            for l in &self.frame {
                match l.eval(&p) {
                    Ok(v) => cols.push(v),
                    Err(_) => ok = false,
                }
            }
            if !ok {
                continue;
            }
            if linalg::rank(&cols) < self.n {
                return Err(Error::DegenerateFrame(format!("frame rank drops below {} at {:?}", self.n, p)));
            }
            let conj: Vec<Vec<Complex64>> = cols.iter().map(|c| c.iter().map(|v| v.conj()).collect()).collect();
            cols.extend(conj);
            if linalg::rank(&cols) < 2 * self.n {
                return Err(Error::DegenerateFrame(format!("frame meets its conjugate at {:?}", p)));
            }
        }
        Ok(())
    }
}

/// Outcome of testing `[L_i, L_j] ∈ span{L}` for one pair.
#[derive(Clone, Debug, PartialEq)]
pub struct BracketCheck {
    pub i: usize,
    pub j: usize,
    pub bracket: VectorField,
    pub in_span: bool,
    pub method: Method,
    pub witness: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegrabilityReport {
    pub pairs: Vec<BracketCheck>,
}

impl IntegrabilityReport {
    pub fn integrable(&self) -> bool {
        self.pairs.iter().all(|p| p.in_span)
    }

    pub fn failures(&self) -> impl Iterator<Item = &BracketCheck> {
        self.pairs.iter().filter(|p| !p.in_span)
    }
}

/// Formal integrability `[T^{0,1}, T^{0,1}] ⊂ T^{0,1}`.
pub fn check_integrability(chart: &CRChart) -> Result<IntegrabilityReport> {
    chart.check_frame()?;
    let frame = &chart.frame;
    let rational = frame.iter().all(|l| l.comps().iter().all(|c| !c.has_transcendental()));
    let mut pairs = Vec::new();
    for i in 0..frame.len() {
        for j in i + 1..frame.len() {
            let br = frame[i].bracket(&frame[j])?.simplify();
            let check = if br.is_zero() {
                BracketCheck {
                    i,
                    j,
                    bracket: br,
                    in_span: true,
                    method: Method::Exact,
                    witness: None,
                }
            } else if rational && br.comps().iter().all(|c| !c.has_transcendental()) {
                let cols: Vec<Vec<Expr>> = frame.iter().map(|l| l.comps().to_vec()).collect();
                let sol = linalg::exact_span_member(&cols, br.comps(), &chart.domain)?;
                let witness = sol.residual.first().and_then(|r| nonzero_witness(r, &chart.domain));
                BracketCheck {
                    i,
                    j,
                    bracket: br,
                    in_span: sol.member,
                    method: if sol.sampled { Method::Sampled } else { Method::Exact },
                    witness,
                }
            } else {
                let mut witness = None;
                for p in chart.sample_points() {
                    let cols: Result<Vec<Vec<Complex64>>> = frame.iter().map(|l| l.eval(&p)).collect();
                    let (Ok(cols), Ok(b)) = (cols, br.eval(&p)) else { continue };
                    if linalg::lstsq_residual(&cols, &b) > linalg::RESIDUAL_TOL {
                        witness = Some(p);
                        break;
                    }
                }
                BracketCheck {
                    i,
                    j,
                    bracket: br,
                    in_span: witness.is_none(),
                    method: Method::Sampled,
                    witness,
                }
            };
            pairs.push(check);
        }
    }
    Ok(IntegrabilityReport { pairs })
}

/// `L_j f ≡ 0` for every frame field.
pub fn check_cr_function(chart: &CRChart, f: &Expr) -> Result<Report> {
    let mut report = Report::default();
    for (j, l) in chart.frame.iter().enumerate() {
        let v = l.apply(f);
        let verdict = v.is_zero_on(&chart.domain);
        let pass = verdict_pass(verdict)?;
        let names = chart.coords.printer();
        report.checks.push(
            Check::new(
                &format!("L{} f", j + 1),
                pass,
                Method::of(verdict),
                format!("L{} f = {}", j + 1, v.simplify().to_string_with(&names)),
            )
            .with_witness(if pass { None } else { nonzero_witness(&v, &chart.domain) }),
        );
    }
    Ok(report)
}

fn subsets(n: usize, q: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, q: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == q {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, q, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, q, &mut Vec::new(), &mut out);
    out
}

/// Membership of `a` in the `p`-th power of the ideal of forms vanishing on
/// `T^{0,1}`: every contraction with `deg a − p + 1` distinct frame fields
/// must vanish. Returns the first failing contraction.
pub fn ideal_membership(chart: &CRChart, a: &DifferentialForm, p: usize) -> Result<(bool, Method, Option<String>)> {
    if **a.coords() != *chart.coords {
        return Err(Error::CoordinateMismatch);
    }
    let r = a.degree();
    if p == 0 {
        return Ok((true, Method::Exact, None));
    }
    if p > r {
        let v = a.vanishes();
        return Ok((verdict_pass(v)?, Method::of(v), None));
    }
    let q = r - p + 1;
    let mut method = Method::Exact;
    for set in subsets(chart.n, q) {
        let mut c = a.clone();
        for j in &set {
            c = c.contract(&chart.frame[*j])?;
        }
        let v = c.is_zero_on(&chart.domain);
        method = method.join(Method::of(v));
        if !verdict_pass(v)? {
            let names: Vec<String> = set.iter().map(|j| format!("L{}", j + 1)).collect();
            return Ok((false, method, Some(format!("contraction by {} = {}", names.join(","), c.simplify()))));
        }
    }
    Ok((true, method, None))
}

/// CR form of degree `p`: `a ∈ I^p` and `da ∈ I^{p+1}`.
pub fn check_cr_form(chart: &CRChart, a: &DifferentialForm, p: usize) -> Result<Report> {
    let mut report = Report::default();
    let (ok, m, why) = ideal_membership(chart, a, p)?;
    report.checks.push(Check::new(
        "in_ideal",
        ok,
        m,
        why.unwrap_or_else(|| format!("form lies in I^{}", p)),
    ));
    let da = a.d();
    let (ok, m, why) = ideal_membership(chart, &da, p + 1)?;
    report.checks.push(Check::new(
        "d_in_ideal",
        ok,
        m,
        why.unwrap_or_else(|| format!("exterior derivative lies in I^{}", p + 1)),
    ));
    Ok(report)
}

/// Codimension-two submanifold given by a parametrization and a defining
/// function on the host chart.
#[derive(Clone, Debug, PartialEq)]
pub struct PolarSubmanifold {
    host: CRChart,
    param: SmoothMap,
    s: Expr,
    induced: Option<CRChart>,
}

impl PolarSubmanifold {
    pub fn new(host: &CRChart, param: SmoothMap, s: Expr) -> Result<Self> {
        if param.target().dim() != host.coords.dim() {
            return Err(Error::DimensionMismatch {
                expected: host.coords.dim(),
                found: param.target().dim(),
            });
        }
        if **param.target() != *host.coords {
            return Err(Error::CoordinateMismatch);
        }
        if let Some(v) = s.free_vars().into_iter().find(|v| *v >= host.coords.dim()) {
            return Err(Error::InvalidCoordinates(format!("defining function uses coordinate index {}", v)));
        }
        Ok(PolarSubmanifold {
            host: host.clone(),
            param,
            s,
            induced: None,
        })
    }

    /// Declare the CR structure induced on the parameter chart.
    pub fn with_induced(mut self, chart: CRChart) -> Result<Self> {
        if *chart.coords != **self.param.source() {
            return Err(Error::CoordinateMismatch);
        }
        self.induced = Some(chart);
        Ok(self)
    }

    pub fn host(&self) -> &CRChart {
        &self.host
    }

    pub fn param(&self) -> &SmoothMap {
        &self.param
    }

    pub fn defining(&self) -> &Expr {
        &self.s
    }

    pub fn param_coords(&self) -> &Arc<Coordinates> {
        self.param.source()
    }

    /// CR structure on the parameter chart: the declared one, or the empty
    /// frame of type `(0, k)` when the host has `n = 1`.
    pub fn induced_chart(&self) -> Result<CRChart> {
        if let Some(c) = &self.induced {
            return Ok(c.clone());
        }
        let (n, k) = self.host.cr_type();
        if n == 1 {
            CRChart::new(self.param.source(), 0, k, Vec::new())
        } else {
            Err(Error::Unsupported("the induced CR frame on S must be declared when n > 1".into()))
        }
    }

    fn param_domain(&self) -> SampleDomain {
        match &self.induced {
            Some(c) => c.domain.clone(),
            None => self.param.source().sample_domain(),
        }
    }
}

/// Validate the polar-submanifold conditions at sample points.
pub fn check_polar(sub: &PolarSubmanifold) -> Result<Report> {
    let host = &sub.host;
    let big_n = host.coords.dim();
    let pdim = sub.param.source().dim();
    let mut report = Report::default();
    report.checks.push(Check::new(
        "codimension",
        pdim + 2 == big_n,
        Method::Exact,
        format!("parameter dimension {} in a {}-dimensional chart", pdim, big_n),
    ));
    let domain = sub.param_domain();

    let on_s = sub.param.pull_scalar(&sub.s)?;
    let v = on_s.is_zero_on(&domain);
    let pass = verdict_pass(v)?;
    report.checks.push(
        Check::new("vanishes", pass, Method::of(v), "s vanishes on the parametrized image")
            .with_witness(if pass { None } else { nonzero_witness(&on_s, &domain) }),
    );

    let grad: Vec<Expr> = (0..big_n).map(|i| sub.s.partial(i)).collect();
    let grad_bar: Vec<Expr> = grad.iter().map(|g| g.conj()).collect();
    let points = domain.points(POINT_SAMPLES);
    let mut witness = None;
    let mut evaluated = 0;
    for u in &points {
        let Ok(x) = sub.param.eval(u) else { continue };
        let g: Result<Vec<Complex64>> = grad.iter().map(|e| e.eval(&x)).collect();
        let gb: Result<Vec<Complex64>> = grad_bar.iter().map(|e| e.eval(&x)).collect();
        let (Ok(g), Ok(gb)) = (g, gb) else { continue };
        evaluated += 1;
        if linalg::rank(&[g, gb]) < 2 {
            witness = Some(u.clone());
            break;
        }
    }
    report.checks.push(
        Check::new(
            "ds_independent",
            witness.is_none() && evaluated > 0,
            Method::Sampled,
            "ds and its conjugate are independent on S",
        )
        .with_witness(witness),
    );

    let mut tangential = Check::new("tangential_cr", true, Method::Exact, "L_j s vanishes on S");
    for (j, l) in host.frame.iter().enumerate() {
        let ls = sub.param.pull_scalar(&l.apply(&sub.s))?;
        let v = ls.is_zero_on(&domain);
        tangential.method = tangential.method.join(Method::of(v));
        if !verdict_pass(v)? {
            tangential.pass = false;
            tangential.detail = format!("L{} s does not vanish on S", j + 1);
            tangential.witness = nonzero_witness(&ls, &domain);
            break;
        }
    }
    report.checks.push(tangential);

    let mut witness = None;
    let mut evaluated = 0;
    for u in &points {
        let Ok(x) = sub.param.eval(u) else { continue };
        let Ok(mut cols) = sub.param.jacobian_at(u) else { continue };
        let mut ok = true;
        for l in &host.frame {
            match l.eval(&x) {
                Ok(v) => {
                    cols.push(v.iter().map(|c| c.conj()).collect());
                    cols.push(v);
                }
                Err(_) => ok = false,
            }
        }
        if !ok {
            continue;
        }
        evaluated += 1;
        if linalg::rank(&cols) < big_n {
            witness = Some(u.clone());
            break;
        }
    }
    report.checks.push(
        Check::new(
            "transversal",
            witness.is_none() && evaluated > 0,
            Method::Sampled,
            "tangent space of S and the Levi distribution span the tangent space",
        )
        .with_witness(witness),
    );
    Ok(report)
}
