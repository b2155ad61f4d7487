use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use super::VerifyError;
use crate::model::{Input, Output};
use crate::presburger::{self, Formula};

/// Reference function from input counts to an output value.
#[derive(Clone, Debug, PartialEq)]
pub enum PredicateOracle {
    /// Truth value of a formula as `Int(0|1)`.
    Formula(Formula),
    /// `min(x, k)`
    Min {
        var: String,
        k: u64,
    },
    /// `x mod m`
    Mod {
        var: String,
        m: u64,
    },
    /// `[x >= k]` as `Int(0|1)`
    Ge {
        var: String,
        k: u64,
    },
    /// `(min(x, k), x mod m)`
    MinMod {
        var: String,
        k: u64,
        m: u64,
    },
    /// Tuple of the component values.
    Tuple(Vec<PredicateOracle>),
    Const(Output),
}

impl PredicateOracle {
    pub fn min(var: &str, k: u64) -> Self {
        PredicateOracle::Min { var: var.into(), k }
    }

    pub fn modulo(var: &str, m: u64) -> Self {
        PredicateOracle::Mod { var: var.into(), m }
    }

    pub fn ge(var: &str, k: u64) -> Self {
        PredicateOracle::Ge { var: var.into(), k }
    }

    pub fn min_mod(var: &str, k: u64, m: u64) -> Self {
        PredicateOracle::MinMod {
            var: var.into(),
            k,
            m,
        }
    }

    /// Value at `a`. Variables absent from `a` count as 0.
    pub fn eval(&self, a: &Input) -> Output {
        match self {
            PredicateOracle::Formula(f) => {
                let full: Input = f
                    .vars()
                    .into_iter()
                    .map(|v| {
                        let n = a.get(&v);
                        (v, n)
                    })
                    .collect();
                let b = presburger::eval(f, &full).expect("all formula variables assigned");
                Output::Int(u64::from(b))
            }
            PredicateOracle::Min { var, k } => Output::Int(a.get(var).min(*k)),
            PredicateOracle::Mod { var, m } => Output::Int(a.get(var) % m),
            PredicateOracle::Ge { var, k } => Output::Int(u64::from(a.get(var) >= *k)),
            PredicateOracle::MinMod { var, k, m } => {
                let x = a.get(var);
                Output::pair(x.min(*k), x % m)
            }
            PredicateOracle::Tuple(parts) => {
                Output::Tuple(parts.iter().map(|o| o.eval(a)).collect())
            }
            PredicateOracle::Const(o) => o.clone(),
        }
    }

    /// Variables the oracle reads.
    pub fn vars(&self) -> BTreeSet<String> {
        match self {
            PredicateOracle::Formula(f) => f.vars(),
            PredicateOracle::Min { var, .. }
            | PredicateOracle::Mod { var, .. }
            | PredicateOracle::Ge { var, .. }
            | PredicateOracle::MinMod { var, .. } => [var.clone()].into(),
            PredicateOracle::Tuple(parts) => parts.iter().flat_map(|p| p.vars()).collect(),
            PredicateOracle::Const(_) => BTreeSet::new(),
        }
    }
}

/// `{ f(A') : A' ≤ A, |A - A'| ≤ j, |A'| ≥ 1 }`.
pub fn permissible_outputs(f: &PredicateOracle, a: &Input, j: u64) -> BTreeSet<Output> {
    let vars: Vec<(&str, u64)> = a.iter().map(|(v, &n)| (v, n)).collect();
    let mut out = BTreeSet::new();
    let mut current = a.clone();
    fn go(
        f: &PredicateOracle,
        vars: &[(&str, u64)],
        i: usize,
        budget: u64,
        current: &mut Input,
        out: &mut BTreeSet<Output>,
    ) {
        if i == vars.len() {
            if current.size() >= 1 {
                out.insert(f.eval(current));
            }
            return;
        }
        let (var, n) = vars[i];
        for removed in 0..=budget.min(n) {
            current.set(var, n - removed);
            go(f, vars, i + 1, budget - removed, current, out);
        }
        current.set(var, n);
    }
    go(f, &vars, 0, j, &mut current, &mut out);
    out
}

impl fmt::Display for PredicateOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredicateOracle::Formula(g) => write!(f, "formula({g})"),
            PredicateOracle::Min { var, k } => write!(f, "min({var},{k})"),
            PredicateOracle::Mod { var, m } => write!(f, "mod({var},{m})"),
            PredicateOracle::Ge { var, k } => write!(f, "ge({var},{k})"),
            PredicateOracle::MinMod { var, k, m } => write!(f, "minmod({var},{k},{m})"),
            PredicateOracle::Tuple(parts) => {
                f.write_str("tuple(")?;
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{p}")?;
                }
                f.write_str(")")
            }
            PredicateOracle::Const(o) => write!(f, "const({o})"),
        }
    }
}

/// Reads a function descriptor: `min(x,3)`, `mod(x,2)`, `ge(x,3)`,
/// `minmod(x,2,2)`, `pair(d1,d2)` / `tuple(d1,..)`, `const(n)` or
/// `formula(<text>)`.
impl FromStr for PredicateOracle {
    type Err = VerifyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || VerifyError::BadDescriptor(s.to_owned());
        let s = s.trim();
        let open = s.find('(').ok_or_else(bad)?;
        if !s.ends_with(')') {
            return Err(bad());
        }
        let head = s[..open].trim();
        let body = &s[open + 1..s.len() - 1];
        if head == "formula" {
            let f =
                presburger::parse(body).map_err(|e| VerifyError::BadDescriptor(e.to_string()))?;
            return Ok(PredicateOracle::Formula(f));
        }
        let args = split_top_level(body).ok_or_else(bad)?;
        let num = |t: &str| t.trim().parse::<u64>().map_err(|_| bad());
        let var = |t: &str| {
            let t = t.trim();
            let ok = t
                .chars()
                .next()
                .is_some_and(|c| c.is_alphabetic() || c == '_')
                && t.chars().all(|c| c.is_alphanumeric() || c == '_');
            if ok {
                Ok(t.to_owned())
            } else {
                Err(bad())
            }
        };
        match (head, args.as_slice()) {
            ("min", [x, k]) => Ok(PredicateOracle::Min {
                var: var(x)?,
                k: num(k)?,
            }),
            ("mod", [x, m]) if num(m)? >= 1 => Ok(PredicateOracle::Mod {
                var: var(x)?,
                m: num(m)?,
            }),
            ("ge", [x, k]) => Ok(PredicateOracle::Ge {
                var: var(x)?,
                k: num(k)?,
            }),
            ("minmod", [x, k, m]) if num(m)? >= 1 => Ok(PredicateOracle::MinMod {
                var: var(x)?,
                k: num(k)?,
                m: num(m)?,
            }),
            ("pair", [l, r]) => Ok(PredicateOracle::Tuple(vec![l.parse()?, r.parse()?])),
            ("tuple", parts) if !parts.is_empty() => Ok(PredicateOracle::Tuple(
                parts.iter().map(|p| p.parse()).collect::<Result<_, _>>()?,
            )),
            ("const", [n]) => Ok(PredicateOracle::Const(Output::Int(num(n)?))),
            _ => Err(bad()),
        }
    }
}

/// Splits on commas not nested inside parentheses.
fn split_top_level(s: &str) -> Option<Vec<&str>> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return None;
                }
            }
            ',' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    (depth == 0).then(|| {
        parts.push(&s[start..]);
        parts
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn ints(v: &[u64]) -> BTreeSet<Output> {
        v.iter().map(|&n| Output::Int(n)).collect()
    }

    #[test]
    fn permissible_min6() {
        let f = PredicateOracle::min("x", 6);
        let a = Input::single("x", 7);
        assert_eq!(permissible_outputs(&f, &a, 0), ints(&[6]));
        assert_eq!(permissible_outputs(&f, &a, 1), ints(&[6]));
        assert_eq!(permissible_outputs(&f, &a, 2), ints(&[5, 6]));
    }

    #[test]
    fn permissible_threshold() {
        let f = PredicateOracle::ge("x", 3);
        assert_eq!(
            permissible_outputs(&f, &Input::single("x", 3), 1),
            ints(&[0, 1])
        );
    }

    #[test]
    fn permissible_excludes_empty() {
        let f = PredicateOracle::modulo("x", 2);
        assert_eq!(
            permissible_outputs(&f, &Input::single("x", 1), 5),
            ints(&[1])
        );
    }

    #[test]
    fn descriptors() {
        let cases = [
            ("min(x,3)", PredicateOracle::min("x", 3)),
            ("mod(x, 2)", PredicateOracle::modulo("x", 2)),
            ("ge(x,3)", PredicateOracle::ge("x", 3)),
            ("minmod(x,2,2)", PredicateOracle::min_mod("x", 2, 2)),
            (
                "pair(min(x,2),min(y,2))",
                PredicateOracle::Tuple(vec![
                    PredicateOracle::min("x", 2),
                    PredicateOracle::min("y", 2),
                ]),
            ),
        ];
        for (text, want) in cases {
            assert_eq!(text.parse::<PredicateOracle>().unwrap(), want, "{text}");
        }
        for bad in [
            "min(x)",
            "mod(x,0)",
            "foo(x,1)",
            "min(x,3",
            "min(1x,3)",
            "pair(min(x,1)",
        ] {
            assert!(bad.parse::<PredicateOracle>().is_err(), "{bad}");
        }
        let f: PredicateOracle = "formula(x >= 2 & y >= 2)".parse().unwrap();
        assert_eq!(f.eval(&Input::parse("x=2,y=3").unwrap()), Output::Int(1));
        assert_eq!(f.eval(&Input::single("x", 5)), Output::Int(0));
    }

    #[test]
    fn eval_pairs() {
        let f = PredicateOracle::min_mod("x", 2, 2);
        assert_eq!(f.eval(&Input::single("x", 5)), Output::pair(2, 1));
        let t: PredicateOracle = "pair(min(x,2),min(y,2))".parse().unwrap();
        assert_eq!(
            t.eval(&Input::parse("x=1,y=3").unwrap()),
            Output::pair(1, 2)
        );
    }

    proptest! {
        #[test]
        fn permissible_zero_is_singleton_and_monotone(n in 1u64..12, k in 1u64..8, m in 1u64..5) {
            let a = Input::single("x", n);
            for f in [PredicateOracle::min("x", k), PredicateOracle::modulo("x", m), PredicateOracle::ge("x", k)] {
                prop_assert_eq!(permissible_outputs(&f, &a, 0), [f.eval(&a)].into());
                let mut prev = BTreeSet::new();
                for j in 0..n {
                    let cur = permissible_outputs(&f, &a, j);
                    prop_assert!(prev.is_subset(&cur));
                    prev = cur;
                }
            }
        }

        #[test]
        fn descriptor_display_round_trips(k in 0u64..50, m in 1u64..9) {
            for f in [
                PredicateOracle::min("x", k),
                PredicateOracle::modulo("y", m),
                PredicateOracle::min_mod("z", k, m),
                PredicateOracle::Tuple(vec![PredicateOracle::ge("a", k), PredicateOracle::Const(Output::Int(m))]),
            ] {
                prop_assert_eq!(f.to_string().parse::<PredicateOracle>().unwrap(), f);
            }
        }
    }
}
