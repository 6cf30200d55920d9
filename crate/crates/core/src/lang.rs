//! Typed evaluation of expression trees into scalars, forms and vector fields.
//!
//! Symbols resolve in this order: bound names, chart coordinates (including
//! complex coordinates `z` and `zbar`), differentials `dx`, `dz`, `dzbar`,
//! then the constants `i` and `pi`.
//!
//! Built-in functions: `exp`, `sin`, `cos`, `conj`, `re`, `im`, `d` (exterior
//! derivative), `D(x)` (coordinate vector field, also `D(z)` and `D(zbar)`),
//! `contract(X, form)`, `bracket(X, Y)` and
//! `lattice_sum(w, w1, w2, R, body)`, which sums `body` over the lattice points
//! `w = m·w1 + n·w2` with `0 < |w| ≤ R`.

use std::collections::HashMap;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::coords::Coordinates;
use crate::error::{Error, Result};
use crate::expr::{Accum, Ast, AstKind, Coeff, Expr};
use crate::expr::parse::BinOp;
use crate::forms::{DifferentialForm, VectorField};

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Scalar(Expr),
    Form(DifferentialForm),
    Vector(VectorField),
}

impl Value {
    pub fn kind(&self) -> &'static str {
        match self {
            Value::Scalar(_) => "scalar",
            Value::Form(_) => "form",
            Value::Vector(_) => "vector field",
        }
    }

    pub fn into_scalar(self) -> Result<Expr> {
        match self {
            Value::Scalar(e) => Ok(e),
            Value::Form(f) if f.degree() == 0 => f.as_scalar(),
            other => Err(Error::Type(format!("expected a scalar, found a {}", other.kind()))),
        }
    }

    pub fn into_form(self, coords: &Arc<Coordinates>) -> Result<DifferentialForm> {
        match self {
            Value::Scalar(e) => Ok(DifferentialForm::scalar(coords, e)),
            Value::Form(f) => Ok(f),
            other => Err(Error::Type(format!("expected a form, found a {}", other.kind()))),
        }
    }

    pub fn into_vector(self) -> Result<VectorField> {
        match self {
            Value::Vector(v) => Ok(v),
            other => Err(Error::Type(format!("expected a vector field, found a {}", other.kind()))),
        }
    }
}

/// Evaluation environment over one chart.
#[derive(Clone)]
pub struct Env {
    coords: Arc<Coordinates>,
    bindings: HashMap<String, Value>,
}

impl Env {
    pub fn new(coords: &Coordinates) -> Self {
        Env::shared(&Arc::new(coords.clone()))
    }

    pub fn shared(coords: &Arc<Coordinates>) -> Self {
        Env {
            coords: coords.clone(),
            bindings: HashMap::new(),
        }
    }

    pub fn coords(&self) -> &Arc<Coordinates> {
        &self.coords
    }

    pub fn bind(&mut self, name: &str, v: Value) {
        self.bindings.insert(name.to_string(), v);
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.bindings.get(name)
    }

    /// True when `name` already means something in this environment.
    pub fn is_defined(&self, name: &str) -> bool {
        self.bindings.contains_key(name) || self.lookup_builtin(name).is_some()
    }

    fn lookup_builtin(&self, name: &str) -> Option<Value> {
        if let Some(e) = self.coords.resolve(name) {
            return Some(Value::Scalar(e));
        }
        if let Some(rest) = name.strip_prefix('d') {
            if let Some(i) = self.coords.index(rest) {
                return Some(Value::Form(DifferentialForm::dx(&self.coords, i)));
            }
            if let Ok(f) = DifferentialForm::dz(&self.coords, rest) {
                return Some(Value::Form(f));
            }
            if let Some(base) = rest.strip_suffix("bar") {
                if let Ok(f) = DifferentialForm::dzbar(&self.coords, base) {
                    return Some(Value::Form(f));
                }
            }
        }
        match name {
            "i" => Some(Value::Scalar(Expr::imag_unit())),
            "pi" => Some(Value::Scalar(Expr::pi())),
            _ => None,
        }
    }

    pub fn eval(&self, ast: &Ast) -> Result<Value> {
        self.eval_inner(ast).map_err(|e| locate(e, ast))
    }

    pub fn eval_scalar(&self, ast: &Ast) -> Result<Expr> {
        self.eval(ast)?.into_scalar().map_err(|e| locate(e, ast))
    }

    pub fn eval_form(&self, ast: &Ast) -> Result<DifferentialForm> {
        self.eval(ast)?.into_form(&self.coords).map_err(|e| locate(e, ast))
    }

    pub fn eval_vector(&self, ast: &Ast) -> Result<VectorField> {
        self.eval(ast)?.into_vector().map_err(|e| locate(e, ast))
    }

    fn eval_inner(&self, ast: &Ast) -> Result<Value> {
        match &ast.kind {
            AstKind::Num(c) => Ok(Value::Scalar(Expr::constant(c.clone()))),
            AstKind::Sym(name) => {
                if let Some(v) = self.bindings.get(name) {
                    return Ok(v.clone());
                }
                self.lookup_builtin(name).ok_or_else(|| Error::UnknownSymbol(name.clone()))
            }
            AstKind::Neg(a) => neg(self.eval(a)?),
            AstKind::Bin(op, a, b) => match op {
                BinOp::Add => self.add(self.eval(a)?, self.eval(b)?),
                BinOp::Sub => {
                    let rhs = neg(self.eval(b)?)?;
                    self.add(self.eval(a)?, rhs)
                }
                BinOp::Mul => self.mul(self.eval(a)?, self.eval(b)?),
                BinOp::Div => {
                    let den = self.recip(b)?;
                    self.mul(self.eval(a)?, Value::Scalar(den))
                }
                BinOp::Pow => self.pow(self.eval(a)?, b),
            },
            AstKind::Call(name, args) => self.call(name, args),
        }
    }

    /// `1/b`, keeping powers and products of sums factored.
    fn recip(&self, b: &Ast) -> Result<Expr> {
        match &b.kind {
            AstKind::Bin(BinOp::Pow, base, e) => {
                let n = self.int_exponent(e)?;
                let base = self.eval_scalar_ctx(base, "denominator")?;
                base.powi(-n)
            }
            AstKind::Bin(BinOp::Mul, x, y) => Ok(self.recip(x)?.mul(&self.recip(y)?)),
            _ => self.eval_scalar_ctx(b, "denominator")?.recip(),
        }
    }

    fn eval_scalar_ctx(&self, ast: &Ast, what: &str) -> Result<Expr> {
        match self.eval(ast)? {
            Value::Scalar(e) => Ok(e),
            Value::Form(f) if f.degree() == 0 => f.as_scalar(),
            other => Err(locate(Error::Type(format!("{} must be a scalar, found a {}", what, other.kind())), ast)),
        }
    }

    fn int_exponent(&self, e: &Ast) -> Result<i64> {
        let v = self.eval_scalar_ctx(e, "exponent")?;
        v.as_constant()
            .and_then(|c| c.as_integer())
            .ok_or_else(|| locate(Error::Type("exponent must be an integer constant".into()), e))
    }

    fn add(&self, a: Value, b: Value) -> Result<Value> {
        Ok(match (a, b) {
            (Value::Scalar(x), Value::Scalar(y)) => Value::Scalar(x.add(&y)),
            (Value::Vector(x), Value::Vector(y)) => Value::Vector(x.add(&y)?),
            (Value::Vector(_), _) | (_, Value::Vector(_)) => {
                return Err(Error::Type("cannot add a vector field and a non-vector".into()))
            }
            (x, y) => Value::Form(x.into_form(&self.coords)?.add(&y.into_form(&self.coords)?)?),
        })
    }

    fn mul(&self, a: Value, b: Value) -> Result<Value> {
        Ok(match (a, b) {
            (Value::Scalar(x), Value::Scalar(y)) => Value::Scalar(x.mul(&y)),
            (Value::Scalar(x), Value::Form(f)) | (Value::Form(f), Value::Scalar(x)) => Value::Form(f.scale(&x)),
            (Value::Scalar(x), Value::Vector(v)) | (Value::Vector(v), Value::Scalar(x)) => Value::Vector(v.scale(&x)),
            (Value::Form(f), Value::Form(g)) if f.degree() == 0 || g.degree() == 0 => Value::Form(f.wedge(&g)?),
            (Value::Form(_), Value::Form(_)) => {
                return Err(Error::Type("product of two forms of positive degree; use `^` for the wedge".into()))
            }
            _ => return Err(Error::Type("unsupported product of a vector field".into())),
        })
    }

    fn pow(&self, a: Value, b: &Ast) -> Result<Value> {
        match a {
            Value::Scalar(x) => {
                let rhs = self.eval(b)?;
                match rhs {
                    Value::Scalar(_) => {
                        let n = self.int_exponent(b)?;
                        Ok(Value::Scalar(x.powi(n)?))
                    }
                    Value::Form(f) => Ok(Value::Form(f.scale(&x))),
                    Value::Vector(_) => Err(Error::Type("cannot raise to a vector field".into())),
                }
            }
            Value::Form(f) => {
                let g = self.eval(b)?.into_form(&self.coords)?;
                Ok(Value::Form(f.wedge(&g)?))
            }
            Value::Vector(_) => Err(Error::Type("`^` is not defined for vector fields".into())),
        }
    }

    fn call(&self, name: &str, args: &[Ast]) -> Result<Value> {
        let arity = |n: usize| -> Result<()> {
            if args.len() == n {
                Ok(())
            } else {
                Err(Error::Type(format!("`{}` takes {} argument(s), got {}", name, n, args.len())))
            }
        };
        match name {
            "exp" | "sin" | "cos" | "re" | "im" => {
                arity(1)?;
                let x = self.eval_scalar_ctx(&args[0], "argument")?;
                Ok(Value::Scalar(match name {
                    "exp" => Expr::exp(&x),
                    "sin" => Expr::sin(&x),
                    "cos" => Expr::cos(&x),
                    "re" => x.re(),
                    _ => x.im(),
                }))
            }
            "conj" => {
                arity(1)?;
                Ok(match self.eval(&args[0])? {
                    Value::Scalar(x) => Value::Scalar(x.conj()),
                    Value::Form(f) => Value::Form(f.conj()),
                    Value::Vector(v) => Value::Vector(v.conj()),
                })
            }
            "d" => {
                arity(1)?;
                Ok(Value::Form(self.eval(&args[0])?.into_form(&self.coords)?.d()))
            }
            "D" => {
                arity(1)?;
                let AstKind::Sym(c) = &args[0].kind else {
                    return Err(Error::Type("`D` expects a coordinate name".into()));
                };
                if let Some(i) = self.coords.index(c) {
                    return Ok(Value::Vector(VectorField::partial(&self.coords, i)));
                }
                if self.coords.complex(c).is_some() {
                    return Ok(Value::Vector(VectorField::d_dz(&self.coords, c)?));
                }
                if let Some(base) = c.strip_suffix("bar") {
                    if self.coords.complex(base).is_some() {
                        return Ok(Value::Vector(VectorField::d_dzbar(&self.coords, base)?));
                    }
                }
                Err(Error::UnknownCoordinate(c.clone()))
            }
            "contract" => {
                arity(2)?;
                let x = self.eval_vector(&args[0])?;
                let f = self.eval_form(&args[1])?;
                Ok(Value::Form(f.contract(&x)?))
            }
            "bracket" => {
                arity(2)?;
                let x = self.eval_vector(&args[0])?;
                let y = self.eval_vector(&args[1])?;
                Ok(Value::Vector(x.bracket(&y)?))
            }
            "lattice_sum" => {
                arity(5)?;
                self.lattice_sum(args).map(Value::Scalar)
            }
            _ => Err(Error::UnknownSymbol(name.to_string())),
        }
    }

    fn constant(&self, ast: &Ast, what: &str) -> Result<Coeff> {
        self.eval_scalar_ctx(ast, what)?
            .as_constant()
            .ok_or_else(|| locate(Error::Type(format!("{} must be a numeric constant", what)), ast))
    }

    fn lattice_sum(&self, args: &[Ast]) -> Result<Expr> {
        let AstKind::Sym(var) = &args[0].kind else {
            return Err(locate(Error::Type("first argument of `lattice_sum` must be a name".into()), &args[0]));
        };
        let w1 = self.constant(&args[1], "lattice generator")?;
        let w2 = self.constant(&args[2], "lattice generator")?;
        let r = self.constant(&args[3], "truncation radius")?;
        if !r.is_real() || r.to_complex().re <= 0.0 {
            return Err(locate(Error::Type("truncation radius must be a positive real".into()), &args[3]));
        }
        // Twice the signed area of the fundamental parallelogram.
        let area = (&w1.conj() * &w2).im.clone();
        if area == BigRational::from_integer(0.into()) {
            return Err(locate(Error::Type("lattice generators are linearly dependent".into()), &args[1]));
        }
        let a = area.to_f64().unwrap_or(f64::NAN).abs();
        let rf = r.to_complex().re;
        let bound_m = (rf * w2.to_complex().norm() / a).ceil() as i64 + 1;
        let bound_n = (rf * w1.to_complex().norm() / a).ceil() as i64 + 1;
        let r2 = r.norm_sqr();
        let mut env = self.clone();
        let mut acc = Accum::new();
        for m in -bound_m..=bound_m {
            for n in -bound_n..=bound_n {
                if m == 0 && n == 0 {
                    continue;
                }
                let w = &(&w1 * &Coeff::from_int(m)) + &(&w2 * &Coeff::from_int(n));
                if w.norm_sqr() > r2 {
                    continue;
                }
                env.bind(var, Value::Scalar(Expr::constant(w)));
                acc.push(&env.eval_scalar_ctx(&args[4], "lattice_sum body")?);
            }
        }
        Ok(acc.finish())
    }
}

fn neg(v: Value) -> Result<Value> {
    Ok(match v {
        Value::Scalar(x) => Value::Scalar(x.neg()),
        Value::Form(f) => Value::Form(f.neg()),
        Value::Vector(v) => Value::Vector(v.scale(&Expr::int(-1))),
    })
}

/// Attach a source position to errors that have none.
fn locate(e: Error, ast: &Ast) -> Error {
    match e {
        Error::Syntax { .. } | Error::Located { .. } => e,
        other => Error::Located {
            line: ast.span.line,
            column: ast.span.column,
            inner: Box::new(other),
        },
    }
}
