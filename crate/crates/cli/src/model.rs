//! Resolution of a parsed manifest into engine objects. Every reference is
//! checked here, so a manifest that resolves only fails at task run time on
//! mathematical grounds.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use leray::chains::{cube, Component};
use leray::expr::{Ast, Span};
use leray::lang::{Env, Value};
use leray::{
    AdaptedFrame, CRChart, Cell, Chain, Coordinates, DifferentialForm, Divisor, Error, Expr, PolarSubmanifold,
    SemiMeromorphicForm, SmoothMap, VectorField,
};

use crate::manifest::{
    BindingKind, ChartDecl, CycleDecl, DivisorDecl, Item, Manifest, MapDecl, MapRef, MeromorphicDecl, Name, TaskDecl,
    TaskKind,
};

/// A problem with the manifest itself, reported with its position.
#[derive(Clone, Debug, PartialEq)]
pub struct InputError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}:{}: {}", self.line, self.column, self.message)
        }
    }
}

impl std::error::Error for InputError {}

impl InputError {
    pub fn at(span: Span, message: impl Into<String>) -> Self {
        InputError {
            line: span.line,
            column: span.column,
            message: message.into(),
        }
    }

    /// Engine error raised while resolving the declaration at `span`.
    pub fn engine(span: Span, e: Error) -> Self {
        match e {
            Error::Syntax { line, column, message } => InputError { line, column, message },
            Error::Located { line, column, inner } => InputError {
                line,
                column,
                message: inner.to_string(),
            },
            other => InputError::at(span, other.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, InputError>;

trait At<T> {
    fn at(self, span: Span) -> Result<T>;
}

impl<T> At<T> for leray::Result<T> {
    fn at(self, span: Span) -> Result<T> {
        self.map_err(|e| InputError::engine(span, e))
    }
}

pub struct Chart {
    pub cr: CRChart,
    env: Env,
}

#[derive(Clone, Debug)]
pub enum Job {
    Integrability(CRChart),
    CrFunction(CRChart, Expr),
    CrForm(CRChart, DifferentialForm),
    Polar(PolarSubmanifold),
    Closed(SemiMeromorphicForm),
    Residue(SemiMeromorphicForm),
    Reduce(SemiMeromorphicForm),
    Laurent(SemiMeromorphicForm),
    ResidueMulti(SemiMeromorphicForm, SmoothMap),
    Integrate(DifferentialForm, Chain),
    Verify(SemiMeromorphicForm, Chain, Option<SmoothMap>),
    Abel(SemiMeromorphicForm, Vec<Component>, bool),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub radius: Option<f64>,
    pub order: Option<usize>,
    pub tolerance: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Task {
    pub label: &'static str,
    pub text: String,
    pub job: Job,
    pub options: Overrides,
}

#[derive(Default)]
pub struct Model {
    charts: BTreeMap<String, Chart>,
    maps: BTreeMap<String, SmoothMap>,
    divisors: BTreeMap<String, Divisor>,
    values: BTreeMap<String, (String, Value)>,
    meromorphic: BTreeMap<String, SemiMeromorphicForm>,
    cycles: BTreeMap<String, (String, Chain)>,
    kinds: BTreeMap<String, &'static str>,
    /// Manifest-level `set` values.
    pub settings: Overrides,
    pub tasks: Vec<Task>,
}

/// A number given as a constant expression.
fn constant(ast: &Ast) -> Result<f64> {
    let empty = Arc::new(Coordinates::new::<&str>(&[]).unwrap());
    let e = Env::shared(&empty).eval_scalar(ast).at(ast.span)?;
    let v = e.eval(&[]).at(ast.span)?;
    if v.im != 0.0 || !v.re.is_finite() {
        return Err(InputError::at(ast.span, "expected a finite real number"));
    }
    Ok(v.re)
}

fn positive_integer(ast: &Ast) -> Result<usize> {
    let v = constant(ast)?;
    if v < 1.0 || v.fract() != 0.0 {
        return Err(InputError::at(ast.span, "expected a positive integer"));
    }
    Ok(v as usize)
}

pub fn resolve(manifest: &Manifest) -> Result<Model> {
    let mut m = Model::default();
    for item in &manifest.items {
        match item {
            Item::Chart(c) => m.chart(c)?,
            Item::Map(d) => m.map(d)?,
            Item::Divisor(d) => m.divisor(d)?,
            Item::Binding(b) => {
                let chart = m.chart_ref(&b.chart)?;
                let v = chart.env.eval(&b.value).at(b.value.span)?;
                let v = match b.kind {
                    BindingKind::Scalar => Value::Scalar(v.into_scalar().at(b.value.span)?),
                    BindingKind::Form => Value::Form(v.into_form(chart.cr.coords()).at(b.value.span)?),
                    BindingKind::Vector => Value::Vector(v.into_vector().at(b.value.span)?),
                };
                m.declare(&b.name, "binding")?;
                m.charts.get_mut(&b.chart.text).unwrap().env.bind(&b.name.text, v.clone());
                m.values.insert(b.name.text.clone(), (b.chart.text.clone(), v));
            }
            Item::Meromorphic(d) => m.meromorphic(d)?,
            Item::Cycle(c) => m.cycle(c)?,
            Item::Task(t) => {
                let task = m.task(t)?;
                m.tasks.push(task);
            }
            Item::Setting(n, v) => match n.text.as_str() {
                "tolerance" => m.settings.tolerance = Some(constant(v)?),
                "order" => m.settings.order = Some(positive_integer(v)?),
                other => return Err(InputError::at(n.span, format!("unknown setting `{}`", other))),
            },
        }
    }
    Ok(m)
}

impl Model {
    fn declare(&mut self, name: &Name, kind: &'static str) -> Result<()> {
        if let Some(prev) = self.kinds.get(&name.text) {
            return Err(InputError::at(name.span, format!("`{}` is already declared as a {}", name.text, prev)));
        }
        self.kinds.insert(name.text.clone(), kind);
        Ok(())
    }

    fn undeclared(&self, name: &Name, kind: &str) -> InputError {
        match self.kinds.get(&name.text) {
            Some(other) => InputError::at(name.span, format!("`{}` is a {}, not a {}", name.text, other, kind)),
            None => InputError::at(name.span, format!("undeclared {} `{}`", kind, name.text)),
        }
    }

    fn chart_ref(&self, name: &Name) -> Result<&Chart> {
        self.charts.get(&name.text).ok_or_else(|| self.undeclared(name, "chart"))
    }

    fn chart(&mut self, c: &ChartDecl) -> Result<()> {
        let names: Vec<&str> = c.coords.iter().map(|n| n.text.as_str()).collect();
        let mut coords = Coordinates::new(&names).at(c.name.span)?;
        let empty = Arc::new(Coordinates::new::<&str>(&[]).unwrap());
        for (n, period) in &c.periods {
            let v = Env::shared(&empty).eval_scalar(period).at(period.span)?.eval(&[]).at(period.span)?;
            coords = coords.with_period(&n.text, v.re).at(n.span)?;
        }
        for (z, re, im) in &c.complex {
            coords = coords.with_complex(&z.text, &re.text, &im.text).at(z.span)?;
        }
        let coords = Arc::new(coords);
        let env = Env::shared(&coords);
        let cr = match &c.frame {
            Some(fields) => {
                let frame = fields
                    .iter()
                    .map(|f| env.eval_vector(f).at(f.span))
                    .collect::<Result<Vec<VectorField>>>()?;
                let n = frame.len();
                if 2 * n > coords.dim() {
                    return Err(InputError::at(c.name.span, "frame has more fields than the chart allows"));
                }
                CRChart::new(&coords, n, coords.dim() - 2 * n, frame).at(c.name.span)?
            }
            None => {
                let frame: Vec<VectorField> = coords
                    .complex_coords()
                    .iter()
                    .map(|z| VectorField::d_dzbar(&coords, &z.name))
                    .collect::<leray::Result<_>>()
                    .at(c.name.span)?;
                let n = frame.len();
                CRChart::new(&coords, n, coords.dim() - 2 * n, frame).at(c.name.span)?
            }
        };
        self.declare(&c.name, "chart")?;
        self.charts.insert(c.name.text.clone(), Chart { cr, env });
        Ok(())
    }

    fn build_map(&self, source: &Name, target: &Arc<Coordinates>, comps: &[Ast]) -> Result<SmoothMap> {
        let src = self.chart_ref(source)?;
        let comps = comps
            .iter()
            .map(|a| src.env.eval_scalar(a).at(a.span))
            .collect::<Result<Vec<_>>>()?;
        SmoothMap::new(src.cr.coords(), target, comps).at(source.span)
    }

    fn map(&mut self, d: &MapDecl) -> Result<()> {
        let target = self.chart_ref(&d.target)?.cr.coords().clone();
        let f = self.build_map(&d.source, &target, &d.comps)?;
        self.declare(&d.name, "map")?;
        self.maps.insert(d.name.text.clone(), f);
        Ok(())
    }

    /// A named map, or an inline one into `target`.
    fn map_ref(&self, r: &MapRef, target: &Arc<Coordinates>) -> Result<SmoothMap> {
        match r {
            MapRef::Named(n) => {
                let f = self.maps.get(&n.text).ok_or_else(|| self.undeclared(n, "map"))?;
                if **f.target() != **target {
                    return Err(InputError::at(n.span, format!("map `{}` lands in a different chart", n.text)));
                }
                Ok(f.clone())
            }
            MapRef::Inline { source, comps, .. } => self.build_map(source, target, comps),
        }
    }

    fn chart_of(&self, coords: &Coordinates) -> Option<&Chart> {
        self.charts.values().find(|c| **c.cr.coords() == *coords)
    }

    fn divisor(&mut self, d: &DivisorDecl) -> Result<()> {
        let host = self.chart_ref(&d.host)?;
        let coords = host.cr.coords().clone();
        let s_ast = d.s.as_ref().ok_or_else(|| InputError::at(d.name.span, "divisor needs `s = …`"))?;
        let s = host.env.eval_scalar(s_ast).at(s_ast.span)?;
        let param_ref = d.param.as_ref().ok_or_else(|| InputError::at(d.name.span, "divisor needs `param …`"))?;
        let param = self.map_ref(param_ref, &coords)?;
        let mut sub = PolarSubmanifold::new(&host.cr, param.clone(), s.clone()).at(d.name.span)?;
        if let Some(induced) = self.chart_of(param.source()) {
            sub = sub.with_induced(induced.cr.clone()).at(d.name.span)?;
        }
        let frame = match &d.adapted {
            Some(a) => {
                let idx = |n: &Name| {
                    coords
                        .index(&n.text)
                        .ok_or_else(|| InputError::at(n.span, format!("`{}` is not a coordinate of `{}`", n.text, d.host.text)))
                };
                let (u, v) = (idx(&a.u)?, idx(&a.v)?);
                if !a.transverse.is_empty() {
                    let mut given = a.transverse.iter().map(idx).collect::<Result<Vec<_>>>()?;
                    given.sort_unstable();
                    let rest: Vec<usize> = (0..coords.dim()).filter(|i| *i != u && *i != v).collect();
                    if given != rest {
                        return Err(InputError::at(a.u.span, "transverse coordinates must be the remaining chart coordinates"));
                    }
                }
                AdaptedFrame::new(&coords, s, u, v).at(a.u.span)?
            }
            None => AdaptedFrame::auto(&coords, s).at(s_ast.span)?,
        };
        let order = d.order.map(|o| o.0).unwrap_or(1);
        let div = Divisor::new(sub, frame, order).at(d.name.span)?;
        self.declare(&d.name, "divisor")?;
        self.divisors.insert(d.name.text.clone(), div);
        Ok(())
    }

    fn form_ref(&self, name: &Name) -> Result<(&str, DifferentialForm)> {
        match self.values.get(&name.text) {
            Some((chart, Value::Form(f))) => Ok((chart, f.clone())),
            Some((chart, Value::Scalar(e))) => {
                Ok((chart, DifferentialForm::scalar(self.charts[chart].cr.coords(), e.clone())))
            }
            _ => Err(self.undeclared(name, "form")),
        }
    }

    fn meromorphic(&mut self, d: &MeromorphicDecl) -> Result<()> {
        let (_, omega) = self.form_ref(&d.numerator)?;
        let divisors = d
            .divisors
            .iter()
            .map(|n| self.divisors.get(&n.text).cloned().ok_or_else(|| self.undeclared(n, "divisor")))
            .collect::<Result<Vec<_>>>()?;
        let phi = SemiMeromorphicForm::new(omega, divisors).at(d.name.span)?;
        self.declare(&d.name, "meromorphic form")?;
        self.meromorphic.insert(d.name.text.clone(), phi);
        Ok(())
    }

    fn phi_ref(&self, name: &Name) -> Result<SemiMeromorphicForm> {
        self.meromorphic.get(&name.text).cloned().ok_or_else(|| self.undeclared(name, "meromorphic form"))
    }

    fn cycle(&mut self, c: &CycleDecl) -> Result<()> {
        let target = self.chart_ref(&c.chart)?.cr.coords().clone();
        let mut cells = Vec::new();
        for cell in &c.cells {
            let p = cell.params.len();
            if let Some((dim, span)) = c.dim {
                if dim != p {
                    return Err(InputError::at(span, format!("cycle dimension {} but a cell has {} parameters", dim, p)));
                }
            }
            let names: Vec<&str> = cell.params.iter().map(|n| n.text.as_str()).collect();
            let local = Arc::new(Coordinates::new(&names).at(cell.span)?);
            let env = Env::shared(&local);
            let comps = cell
                .comps
                .iter()
                .map(|a| env.eval_scalar(a).at(a.span))
                .collect::<Result<Vec<_>>>()?;
            // cell coordinates are positional; rename onto the unit cube
            let f = SmoothMap::new(&cube(p), &target, comps).at(cell.span)?;
            let mut periodic = vec![false; p];
            for n in &cell.periodic {
                let i = local
                    .index(&n.text)
                    .ok_or_else(|| InputError::at(n.span, format!("`{}` is not a cell parameter", n.text)))?;
                periodic[i] = true;
            }
            cells.push(Cell::new(f, periodic, cell.multiplicity).at(cell.span)?);
        }
        let chain = Chain::new(cells).at(c.name.span)?;
        self.declare(&c.name, "cycle")?;
        self.cycles.insert(c.name.text.clone(), (c.chart.text.clone(), chain));
        Ok(())
    }

    fn cycle_ref(&self, name: &Name) -> Result<(&str, Chain)> {
        match self.cycles.get(&name.text) {
            Some((chart, chain)) => Ok((chart, chain.clone())),
            None => Err(self.undeclared(name, "cycle")),
        }
    }

    fn cycle_on(&self, name: &Name, coords: &Coordinates) -> Result<Chain> {
        let (chart, chain) = self.cycle_ref(name)?;
        if **self.charts[chart].cr.coords() != *coords {
            return Err(InputError::at(name.span, format!("cycle `{}` lives on a different chart", name.text)));
        }
        Ok(chain)
    }

    fn task(&self, t: &TaskDecl) -> Result<Task> {
        let job = match &t.kind {
            TaskKind::CheckIntegrability(c) => Job::Integrability(self.chart_ref(c)?.cr.clone()),
            TaskKind::CheckCrFunction { f, chart } => {
                let c = self.chart_ref(chart)?;
                Job::CrFunction(c.cr.clone(), c.env.eval_scalar(f).at(f.span)?)
            }
            TaskKind::CheckCrForm(n) => {
                let (chart, f) = self.form_ref(n)?;
                Job::CrForm(self.charts[chart].cr.clone(), f)
            }
            TaskKind::CheckPolar(n) => {
                Job::Polar(self.divisors.get(&n.text).ok_or_else(|| self.undeclared(n, "divisor"))?.sub.clone())
            }
            TaskKind::CheckClosed(n) => Job::Closed(self.phi_ref(n)?),
            TaskKind::Residue(n) => Job::Residue(self.single(n)?),
            TaskKind::Reduce(n) => Job::Reduce(self.single(n)?),
            TaskKind::Laurent(n) => Job::Laurent(self.single(n)?),
            TaskKind::ResidueMulti { phi, locus } => {
                let p = self.phi_ref(phi)?;
                let host = p.omega.coords().clone();
                Job::ResidueMulti(p, self.map_ref(locus, &host)?)
            }
            TaskKind::Integrate { form, cycle } => {
                let (chart, f) = self.form_ref(form)?;
                let chain = self.cycle_on(cycle, self.charts[chart].cr.coords())?;
                Job::Integrate(f, chain)
            }
            TaskKind::Verify { phi, cycle, locus } => {
                let p = self.phi_ref(phi)?;
                let host = p.omega.coords().clone();
                let locus = locus.as_ref().map(|l| self.map_ref(l, &host)).transpose()?;
                let base = match (&locus, p.divisors.len()) {
                    (Some(l), _) => l.source().clone(),
                    (None, 1) => p.divisors[0].sub.param_coords().clone(),
                    (None, _) => {
                        return Err(InputError::at(phi.span, "several divisors: give the intersection with `at …`"))
                    }
                };
                Job::Verify(p, self.cycle_on(cycle, &base)?, locus)
            }
            TaskKind::Abel {
                phi,
                components,
                certified,
            } => {
                let p = self.phi_ref(phi)?;
                let host = p.omega.coords().clone();
                let mut comps = Vec::new();
                for (l, c) in components {
                    let locus = self.map_ref(l, &host)?;
                    let cycle = self.cycle_on(c, locus.source())?;
                    comps.push(Component { locus, cycle });
                }
                Job::Abel(p, comps, *certified)
            }
        };
        let allowed: &[&str] = match &t.kind {
            TaskKind::Integrate { .. } => &["order"],
            TaskKind::Verify { .. } => &["radius", "order", "tolerance"],
            TaskKind::Abel { .. } => &["order", "tolerance"],
            _ => &[],
        };
        let mut options = Overrides::default();
        for (key, value) in &t.options {
            if !allowed.contains(&key.text.as_str()) {
                return Err(InputError::at(key.span, format!("`{}` does not take option `{}`", t.kind.label(), key.text)));
            }
            match key.text.as_str() {
                "radius" => options.radius = Some(constant(value)?),
                "order" => options.order = Some(positive_integer(value)?),
                _ => options.tolerance = Some(constant(value)?),
            }
        }
        Ok(Task {
            label: t.kind.label(),
            text: t.text.clone(),
            job,
            options,
        })
    }

    fn single(&self, name: &Name) -> Result<SemiMeromorphicForm> {
        let p = self.phi_ref(name)?;
        if p.divisors.len() != 1 {
            return Err(InputError::at(name.span, format!("`{}` has {} divisors; expected one", name.text, p.divisors.len())));
        }
        Ok(p)
    }
}
