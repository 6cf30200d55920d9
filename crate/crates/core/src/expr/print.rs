use super::{Atom, Expr};

pub(crate) fn default_names(i: usize) -> String {
    format!("x{}", i + 1)
}

impl Expr {
    /// Canonical text that parses back to an equal expression.
    pub fn to_string_with<F: Fn(usize) -> String>(&self, names: &F) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (idx, (m, c)) in self.terms.iter().enumerate() {
            let (negative, mag) = c.split_sign();
            if idx == 0 {
                if negative {
                    out.push('-');
                }
            } else {
                out.push_str(if negative { " - " } else { " + " });
            }
            let mut num: Vec<String> = Vec::new();
            let mut den: Vec<String> = Vec::new();
            for (atom, k) in m.factors() {
                let base = atom_text(atom, names);
                let text = |p: i32| {
                    if p == 1 {
                        base.clone()
                    } else {
                        format!("{}^{}", base, p)
                    }
                };
                if *k > 0 {
                    num.push(text(*k));
                } else {
                    den.push(text(-*k));
                }
            }
            let coeff = mag.to_string();
            let mut term = if num.is_empty() {
                coeff
            } else if mag.is_one() {
                num.join("*")
            } else {
                format!("{}*{}", coeff, num.join("*"))
            };
            if !den.is_empty() {
                if den.len() == 1 {
                    term = format!("{}/{}", term, den[0]);
                } else {
                    term = format!("{}/({})", term, den.join("*"));
                }
            }
            out.push_str(&term);
        }
        out
    }
}

fn atom_text<F: Fn(usize) -> String>(atom: &Atom, names: &F) -> String {
    match atom {
        Atom::Var(i) => names(*i),
        Atom::Pi => "pi".to_string(),
        Atom::Exp(a) => format!("exp({})", a.to_string_with(names)),
        Atom::Sin(a) => format!("sin({})", a.to_string_with(names)),
        Atom::Cos(a) => format!("cos({})", a.to_string_with(names)),
        Atom::Poly(p) => format!("({})", p.to_string_with(names)),
    }
}

impl std::fmt::Display for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.to_string_with(&default_names))
    }
}
