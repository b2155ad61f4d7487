use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rel {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl Rel {
    pub fn holds(self, lhs: u64, rhs: u64) -> bool {
        match self {
            Rel::Lt => lhs < rhs,
            Rel::Le => lhs <= rhs,
            Rel::Eq => lhs == rhs,
            Rel::Ge => lhs >= rhs,
            Rel::Gt => lhs > rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Eq => "=",
            Rel::Ge => ">=",
            Rel::Gt => ">",
        }
    }
}

/// Quantifier-free monadic Presburger formula. Every atom mentions exactly
/// one variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Not(Box<Formula>),
    /// `var ⋈ bound`
    Threshold {
        var: String,
        rel: Rel,
        bound: u64,
    },
    /// `(var mod modulus) ⋈ bound`
    ModCmp {
        var: String,
        modulus: u64,
        rel: Rel,
        bound: u64,
    },
    /// `(var mod modulus) ∈ accepted`
    Mod {
        var: String,
        modulus: u64,
        accepted: BTreeSet<u64>,
    },
}

impl Formula {
    pub fn and(l: Formula, r: Formula) -> Formula {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Formula {
        Formula::Or(Box::new(l), Box::new(r))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn ge(var: &str, bound: u64) -> Formula {
        Formula::Threshold {
            var: var.to_owned(),
            rel: Rel::Ge,
            bound,
        }
    }

    pub fn modulo(var: &str, modulus: u64, accepted: impl IntoIterator<Item = u64>) -> Formula {
        Formula::Mod {
            var: var.to_owned(),
            modulus,
            accepted: accepted.into_iter().collect(),
        }
    }

    /// Free variables, sorted.
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::And(l, r) | Formula::Or(l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
            Formula::Not(f) => f.collect_vars(out),
            Formula::Threshold { var, .. }
            | Formula::ModCmp { var, .. }
            | Formula::Mod { var, .. } => {
                out.insert(var.clone());
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Or(..) => 1,
            Formula::And(..) => 2,
            _ => 3,
        }
    }

    fn write_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let wrap = self.precedence() < min;
        if wrap {
            f.write_str("(")?;
        }
        match self {
            Formula::Or(l, r) => {
                l.write_prec(f, 1)?;
                f.write_str(" | ")?;
                r.write_prec(f, 2)?;
            }
            Formula::And(l, r) => {
                l.write_prec(f, 2)?;
                f.write_str(" & ")?;
                r.write_prec(f, 3)?;
            }
            Formula::Not(inner) => {
                f.write_str("!")?;
                match inner.as_ref() {
                    Formula::Not(_) => inner.write_prec(f, 3)?,
                    _ => {
                        f.write_str("(")?;
                        inner.write_prec(f, 0)?;
                        f.write_str(")")?;
                    }
                }
            }
            Formula::Threshold { var, rel, bound } => {
                write!(f, "{var} {} {bound}", rel.symbol())?;
            }
            Formula::ModCmp {
                var,
                modulus,
                rel,
                bound,
            } => {
                write!(f, "{var} % {modulus} {} {bound}", rel.symbol())?;
            }
            Formula::Mod {
                var,
                modulus,
                accepted,
            } => {
                let items: Vec<String> = accepted.iter().map(u64::to_string).collect();
                write!(f, "{var} % {modulus} in {{{}}}", items.join(","))?;
            }
        }
        if wrap {
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// Canonical concrete syntax; [`super::parse`] reads it back to the same AST.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_prec(f, 0)
    }
}
