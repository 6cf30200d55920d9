//! Manifest syntax. Expression payloads reuse the engine's tokenizer and
//! expression parser; everything here is declarations around them.

use leray::expr::parse::{describe, lex, syntax_error, Parser, Tok};
use leray::expr::{Ast, Span};
use leray::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct Name {
    pub text: String,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChartDecl {
    pub name: Name,
    pub coords: Vec<Name>,
    /// `(z, re, im)`.
    pub complex: Vec<(Name, Name, Name)>,
    pub periods: Vec<(Name, Ast)>,
    pub frame: Option<Vec<Ast>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum MapRef {
    Named(Name),
    Inline { source: Name, comps: Vec<Ast>, span: Span },
}

#[derive(Clone, Debug, PartialEq)]
pub struct MapDecl {
    pub name: Name,
    pub source: Name,
    pub target: Name,
    pub comps: Vec<Ast>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Adapted {
    pub u: Name,
    pub v: Name,
    pub transverse: Vec<Name>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DivisorDecl {
    pub name: Name,
    pub host: Name,
    pub s: Option<Ast>,
    pub order: Option<(u32, Span)>,
    pub param: Option<MapRef>,
    pub adapted: Option<Adapted>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BindingKind {
    Scalar,
    Form,
    Vector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BindingDecl {
    pub kind: BindingKind,
    pub name: Name,
    pub chart: Name,
    pub value: Ast,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeromorphicDecl {
    pub name: Name,
    pub numerator: Name,
    pub divisors: Vec<Name>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellDecl {
    pub params: Vec<Name>,
    pub comps: Vec<Ast>,
    pub periodic: Vec<Name>,
    pub multiplicity: i64,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CycleDecl {
    pub name: Name,
    pub chart: Name,
    pub dim: Option<(usize, Span)>,
    pub cells: Vec<CellDecl>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TaskKind {
    CheckIntegrability(Name),
    CheckCrFunction { f: Ast, chart: Name },
    CheckCrForm(Name),
    CheckPolar(Name),
    CheckClosed(Name),
    Residue(Name),
    Reduce(Name),
    Laurent(Name),
    ResidueMulti { phi: Name, locus: MapRef },
    Integrate { form: Name, cycle: Name },
    Verify { phi: Name, cycle: Name, locus: Option<MapRef> },
    Abel { phi: Name, components: Vec<(MapRef, Name)>, certified: bool },
}

impl TaskKind {
    pub fn label(&self) -> &'static str {
        match self {
            TaskKind::CheckIntegrability(_) => "check integrability",
            TaskKind::CheckCrFunction { .. } => "check cr-function",
            TaskKind::CheckCrForm(_) => "check cr-form",
            TaskKind::CheckPolar(_) => "check polar",
            TaskKind::CheckClosed(_) => "check closed",
            TaskKind::Residue(_) => "residue",
            TaskKind::Reduce(_) => "reduce",
            TaskKind::Laurent(_) => "laurent",
            TaskKind::ResidueMulti { .. } => "residue-multi",
            TaskKind::Integrate { .. } => "integrate",
            TaskKind::Verify { .. } => "verify-residue-formula",
            TaskKind::Abel { .. } => "abel",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaskDecl {
    pub kind: TaskKind,
    pub options: Vec<(Name, Ast)>,
    /// Source text of the task, for the report.
    pub text: String,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Item {
    Chart(ChartDecl),
    Map(MapDecl),
    Divisor(DivisorDecl),
    Binding(BindingDecl),
    Meromorphic(MeromorphicDecl),
    Cycle(CycleDecl),
    Task(TaskDecl),
    /// `set tolerance = …;` or `set order = …;`
    Setting(Name, Ast),
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Manifest {
    pub items: Vec<Item>,
}

impl Manifest {
    pub fn tasks(&self) -> impl Iterator<Item = &TaskDecl> {
        self.items.iter().filter_map(|i| match i {
            Item::Task(t) => Some(t),
            _ => None,
        })
    }
}

pub fn parse_manifest(text: &str) -> Result<Manifest> {
    let tokens = lex(text)?;
    let mut p = Reader {
        p: Parser::new(&tokens),
        text,
    };
    let mut items = Vec::new();
    while !p.p.at_eof() {
        items.push(p.item()?);
    }
    Ok(Manifest { items })
}

const HYPHENATED: [&str; 4] = ["cr-function", "cr-form", "residue-multi", "verify-residue-formula"];

struct Reader<'t> {
    p: Parser<'t>,
    text: &'t str,
}

impl Reader<'_> {
    fn name(&mut self) -> Result<Name> {
        let (text, span) = self.p.expect_ident()?;
        Ok(Name { text, span })
    }

    fn keyword(&mut self, kw: &str) -> Result<Span> {
        self.p.expect_keyword(kw)
    }

    /// A keyword that may contain hyphens, such as `cr-function`.
    fn word(&mut self) -> Result<Name> {
        let mut n = self.name()?;
        while self.p.is_punct('-') {
            let Tok::Ident(rest) = &self.p.peek_at(1).tok else { break };
            let joined = format!("{}-{}", n.text, rest);
            if !HYPHENATED.iter().any(|k| k.starts_with(&joined)) {
                break;
            }
            self.p.next();
            self.p.next();
            n.text = joined;
        }
        Ok(n)
    }

    fn unexpected<T>(&self, what: &str) -> Result<T> {
        let t = self.p.peek();
        Err(syntax_error(t.span, format!("expected {}, found {}", what, describe(&t.tok))))
    }

    fn integer(&mut self) -> Result<(i64, Span)> {
        let neg = self.p.eat_punct('-');
        let t = self.p.next();
        match &t.tok {
            Tok::Number(s) => match s.parse::<i64>() {
                Ok(v) => Ok((if neg { -v } else { v }, t.span)),
                Err(_) => Err(syntax_error(t.span, format!("expected an integer, found `{}`", s))),
            },
            other => Err(syntax_error(t.span, format!("expected an integer, found {}", describe(other)))),
        }
    }

    fn names(&mut self, close: char) -> Result<Vec<Name>> {
        let mut out = Vec::new();
        if self.p.is_punct(close) {
            return Ok(out);
        }
        out.push(self.name()?);
        while self.p.eat_punct(',') {
            out.push(self.name()?);
        }
        Ok(out)
    }

    fn exprs(&mut self, close: char) -> Result<Vec<Ast>> {
        let mut out = Vec::new();
        if self.p.is_punct(close) {
            return Ok(out);
        }
        out.push(self.p.parse_expr()?);
        while self.p.eat_punct(',') {
            out.push(self.p.parse_expr()?);
        }
        Ok(out)
    }

    fn tuple(&mut self) -> Result<Vec<Ast>> {
        self.p.expect_punct('(')?;
        let v = self.exprs(')')?;
        self.p.expect_punct(')')?;
        Ok(v)
    }

    /// `NAME` or `CHART -> (e, …)`.
    fn map_ref(&mut self) -> Result<MapRef> {
        let n = self.name()?;
        if self.p.peek().tok == Tok::Arrow {
            self.p.next();
            let comps = self.tuple()?;
            Ok(MapRef::Inline {
                span: n.span,
                source: n,
                comps,
            })
        } else {
            Ok(MapRef::Named(n))
        }
    }

    fn item(&mut self) -> Result<Item> {
        let kw = self.p.peek().clone();
        let Tok::Ident(word) = &kw.tok else {
            return self.unexpected("a declaration");
        };
        match word.as_str() {
            "chart" => self.chart().map(Item::Chart),
            "map" => self.map().map(Item::Map),
            "divisor" => self.divisor().map(Item::Divisor),
            "scalar" | "form" | "vector" => self.binding().map(Item::Binding),
            "meromorphic" => self.meromorphic().map(Item::Meromorphic),
            "cycle" => self.cycle().map(Item::Cycle),
            "task" => self.task().map(Item::Task),
            "set" => {
                self.p.next();
                let n = self.name()?;
                self.p.expect_punct('=')?;
                let v = self.p.parse_expr()?;
                self.p.expect_punct(';')?;
                Ok(Item::Setting(n, v))
            }
            _ => self.unexpected("a declaration"),
        }
    }

    fn chart(&mut self) -> Result<ChartDecl> {
        self.keyword("chart")?;
        let name = self.name()?;
        self.p.expect_punct('{')?;
        let mut decl = ChartDecl {
            name,
            coords: Vec::new(),
            complex: Vec::new(),
            periods: Vec::new(),
            frame: None,
        };
        while !self.p.eat_punct('}') {
            let stmt = self.name()?;
            match stmt.text.as_str() {
                "coords" => decl.coords.extend(self.names(';')?),
                "complex" => {
                    let z = self.name()?;
                    self.p.expect_punct('=')?;
                    self.p.expect_punct('(')?;
                    let re = self.name()?;
                    self.p.expect_punct(',')?;
                    let im = self.name()?;
                    self.p.expect_punct(')')?;
                    decl.complex.push((z, re, im));
                }
                "periodic" => {
                    let n = self.name()?;
                    self.p.expect_punct('=')?;
                    decl.periods.push((n, self.p.parse_expr()?));
                }
                "frame" => {
                    self.p.expect_punct('[')?;
                    let v = self.exprs(']')?;
                    self.p.expect_punct(']')?;
                    decl.frame = Some(v);
                }
                _ => return Err(syntax_error(stmt.span, format!("unknown chart statement `{}`", stmt.text))),
            }
            self.p.expect_punct(';')?;
        }
        Ok(decl)
    }

    fn map(&mut self) -> Result<MapDecl> {
        self.keyword("map")?;
        let name = self.name()?;
        self.p.expect_punct(':')?;
        let source = self.name()?;
        if self.p.next().tok != Tok::Arrow {
            return Err(syntax_error(source.span, "expected `->` after the source chart"));
        }
        let target = self.name()?;
        self.p.expect_punct('=')?;
        let comps = self.tuple()?;
        self.p.expect_punct(';')?;
        Ok(MapDecl {
            name,
            source,
            target,
            comps,
        })
    }

    fn divisor(&mut self) -> Result<DivisorDecl> {
        self.keyword("divisor")?;
        let name = self.name()?;
        self.keyword("on")?;
        let host = self.name()?;
        self.p.expect_punct('{')?;
        let mut d = DivisorDecl {
            name,
            host,
            s: None,
            order: None,
            param: None,
            adapted: None,
        };
        while !self.p.eat_punct('}') {
            let stmt = self.name()?;
            match stmt.text.as_str() {
                "s" => {
                    self.p.expect_punct('=')?;
                    d.s = Some(self.p.parse_expr()?);
                }
                "order" => {
                    self.p.expect_punct('=')?;
                    let (q, span) = self.integer()?;
                    if q < 1 {
                        return Err(syntax_error(span, "pole order must be at least 1"));
                    }
                    d.order = Some((q as u32, span));
                }
                "param" => d.param = Some(self.map_ref()?),
                "adapted" => {
                    self.p.expect_punct('(')?;
                    let u = self.name()?;
                    self.p.expect_punct(',')?;
                    let v = self.name()?;
                    let transverse = if self.p.eat_punct('|') { self.names(')')? } else { Vec::new() };
                    self.p.expect_punct(')')?;
                    d.adapted = Some(Adapted { u, v, transverse });
                }
                _ => return Err(syntax_error(stmt.span, format!("unknown divisor statement `{}`", stmt.text))),
            }
            self.p.expect_punct(';')?;
        }
        Ok(d)
    }

    fn binding(&mut self) -> Result<BindingDecl> {
        let kw = self.name()?;
        let kind = match kw.text.as_str() {
            "scalar" => BindingKind::Scalar,
            "form" => BindingKind::Form,
            _ => BindingKind::Vector,
        };
        let name = self.name()?;
        self.keyword("on")?;
        let chart = self.name()?;
        self.p.expect_punct('=')?;
        let value = self.p.parse_expr()?;
        self.p.expect_punct(';')?;
        Ok(BindingDecl {
            kind,
            name,
            chart,
            value,
        })
    }

    fn meromorphic(&mut self) -> Result<MeromorphicDecl> {
        self.keyword("meromorphic")?;
        let name = self.name()?;
        self.p.expect_punct('=')?;
        let numerator = self.name()?;
        self.keyword("over")?;
        let mut divisors = vec![self.name()?];
        while self.p.eat_punct(',') {
            divisors.push(self.name()?);
        }
        self.p.expect_punct(';')?;
        Ok(MeromorphicDecl {
            name,
            numerator,
            divisors,
        })
    }

    fn cycle(&mut self) -> Result<CycleDecl> {
        self.keyword("cycle")?;
        let name = self.name()?;
        self.keyword("on")?;
        let chart = self.name()?;
        self.p.expect_punct('{')?;
        let mut c = CycleDecl {
            name,
            chart,
            dim: None,
            cells: Vec::new(),
        };
        while !self.p.eat_punct('}') {
            let stmt = self.name()?;
            match stmt.text.as_str() {
                "dim" => {
                    self.p.expect_punct('=')?;
                    let (n, span) = self.integer()?;
                    if n < 0 {
                        return Err(syntax_error(span, "dimension must be nonnegative"));
                    }
                    c.dim = Some((n as usize, span));
                }
                "cell" => {
                    self.p.expect_punct('(')?;
                    let params = self.names(')')?;
                    self.p.expect_punct(')')?;
                    if self.p.next().tok != Tok::Arrow {
                        return Err(syntax_error(stmt.span, "expected `->` after the cell parameters"));
                    }
                    let comps = self.tuple()?;
                    let mut cell = CellDecl {
                        params,
                        comps,
                        periodic: Vec::new(),
                        multiplicity: 1,
                        span: stmt.span,
                    };
                    loop {
                        if self.p.is_ident("periodic") {
                            self.p.next();
                            cell.periodic.push(self.name()?);
                            while self.p.eat_punct(',') {
                                cell.periodic.push(self.name()?);
                            }
                        } else if self.p.is_ident("times") {
                            self.p.next();
                            cell.multiplicity = self.integer()?.0;
                        } else {
                            break;
                        }
                    }
                    c.cells.push(cell);
                }
                _ => return Err(syntax_error(stmt.span, format!("unknown cycle statement `{}`", stmt.text))),
            }
            self.p.expect_punct(';')?;
        }
        Ok(c)
    }

    fn task(&mut self) -> Result<TaskDecl> {
        let span = self.keyword("task")?;
        let start = offset(self.text, self.p.peek().span);
        let kind_word = self.word()?;
        let kind = match kind_word.text.as_str() {
            "check" => {
                let what = self.word()?;
                match what.text.as_str() {
                    "integrability" => TaskKind::CheckIntegrability(self.name()?),
                    "cr-function" => {
                        let f = self.p.parse_expr()?;
                        self.keyword("on")?;
                        TaskKind::CheckCrFunction { f, chart: self.name()? }
                    }
                    "cr-form" => TaskKind::CheckCrForm(self.name()?),
                    "polar" => TaskKind::CheckPolar(self.name()?),
                    "closed" => TaskKind::CheckClosed(self.name()?),
                    other => return Err(syntax_error(what.span, format!("unknown check `{}`", other))),
                }
            }
            "residue" => TaskKind::Residue(self.name()?),
            "reduce" => TaskKind::Reduce(self.name()?),
            "laurent" => TaskKind::Laurent(self.name()?),
            "residue-multi" => {
                let phi = self.name()?;
                self.keyword("at")?;
                TaskKind::ResidueMulti {
                    phi,
                    locus: self.map_ref()?,
                }
            }
            "integrate" => {
                let form = self.name()?;
                self.keyword("over")?;
                TaskKind::Integrate {
                    form,
                    cycle: self.name()?,
                }
            }
            "verify-residue-formula" => {
                let phi = self.name()?;
                self.keyword("over")?;
                let cycle = self.name()?;
                let locus = if self.p.is_ident("at") {
                    self.p.next();
                    Some(self.map_ref()?)
                } else {
                    None
                };
                TaskKind::Verify { phi, cycle, locus }
            }
            "abel" => {
                let phi = self.name()?;
                self.p.expect_punct('{')?;
                let mut components = Vec::new();
                while !self.p.eat_punct('}') {
                    let locus = self.map_ref()?;
                    self.p.expect_punct(':')?;
                    components.push((locus, self.name()?));
                    if !self.p.eat_punct(',') && !self.p.is_punct('}') {
                        return self.unexpected("`,` or `}`");
                    }
                }
                let certified = self.p.is_ident("certified");
                if certified {
                    self.p.next();
                }
                TaskKind::Abel {
                    phi,
                    components,
                    certified,
                }
            }
            other => return Err(syntax_error(kind_word.span, format!("unknown task `{}`", other))),
        };
        let mut options = Vec::new();
        if self.p.is_ident("with") {
            self.p.next();
            loop {
                let key = self.name()?;
                self.p.expect_punct('=')?;
                options.push((key, self.p.parse_expr()?));
                if !self.p.eat_punct(',') {
                    break;
                }
            }
        }
        let end = offset(self.text, self.p.peek().span);
        self.p.expect_punct(';')?;
        let text = self.text[start..end].split_whitespace().collect::<Vec<_>>().join(" ");
        Ok(TaskDecl {
            kind,
            options,
            text,
            span,
        })
    }
}

/// Byte offset of a 1-based line/column position.
fn offset(text: &str, span: Span) -> usize {
    let mut line = 1;
    let mut col = 1;
    for (i, c) in text.char_indices() {
        if line == span.line && col == span.column {
            return i;
        }
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    text.len()
}
