use std::collections::BTreeMap;

use num_integer::Integer;
use thiserror::Error;

use super::{Formula, Rel};
use crate::model::Input;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("variable `{0}` is not assigned")]
    UnboundVariable(String),
    #[error("profile tuple for `{var}` is ({sat}, {res}) but the profile is (t={t}, m={m})")]
    InconsistentTuple {
        var: String,
        sat: u64,
        res: u64,
        t: u64,
        m: u64,
    },
}

/// Rewrites thresholds to `≥` form and modulo comparisons to residue sets.
///
/// `x < t ⇒ ¬(x ≥ t)`, `x ≤ t ⇒ ¬(x ≥ t+1)`, `x > t ⇒ x ≥ t+1`,
/// `x = t ⇒ x ≥ t ∧ ¬(x ≥ t+1)`, `x % m ⋈ b ⇒ x % m ∈ {r : r ⋈ b}`.
pub fn normalize(f: &Formula) -> Formula {
    match f {
        Formula::And(l, r) => Formula::and(normalize(l), normalize(r)),
        Formula::Or(l, r) => Formula::or(normalize(l), normalize(r)),
        Formula::Not(g) => Formula::not(normalize(g)),
        Formula::Threshold { var, rel, bound } => {
            let t = *bound;
            match rel {
                Rel::Ge => Formula::ge(var, t),
                Rel::Gt => Formula::ge(var, t + 1),
                Rel::Lt => Formula::not(Formula::ge(var, t)),
                Rel::Le => Formula::not(Formula::ge(var, t + 1)),
                Rel::Eq => Formula::and(Formula::ge(var, t), Formula::not(Formula::ge(var, t + 1))),
            }
        }
        Formula::ModCmp {
            var,
            modulus,
            rel,
            bound,
        } => Formula::modulo(
            var,
            *modulus,
            (0..*modulus).filter(|&r| rel.holds(r, *bound)),
        ),
        Formula::Mod { .. } => f.clone(),
    }
}

pub fn is_normalized(f: &Formula) -> bool {
    match f {
        Formula::And(l, r) | Formula::Or(l, r) => is_normalized(l) && is_normalized(r),
        Formula::Not(g) => is_normalized(g),
        Formula::Threshold { rel, .. } => *rel == Rel::Ge,
        Formula::ModCmp { .. } => false,
        Formula::Mod { .. } => true,
    }
}

/// Truth value of `f` at `a`.
pub fn eval(f: &Formula, a: &Input) -> Result<bool, EvalError> {
    let value = |var: &String| {
        a.as_map()
            .get(var)
            .copied()
            .ok_or_else(|| EvalError::UnboundVariable(var.clone()))
    };
    Ok(match f {
        Formula::And(l, r) => eval(l, a)? & eval(r, a)?,
        Formula::Or(l, r) => eval(l, a)? | eval(r, a)?,
        Formula::Not(g) => !eval(g, a)?,
        Formula::Threshold { var, rel, bound } => rel.holds(value(var)?, *bound),
        Formula::ModCmp {
            var,
            modulus,
            rel,
            bound,
        } => rel.holds(value(var)? % modulus, *bound),
        Formula::Mod {
            var,
            modulus,
            accepted,
        } => accepted.contains(&(value(var)? % modulus)),
    })
}

/// Saturation threshold `t` and modulus `m` of one variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct VarProfile {
    pub threshold: u64,
    pub modulus: u64,
}

/// `(t_i, m_i)` per variable: the largest `≥`-bound and the lcm of all
/// moduli, over the normalized formula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SaturationProfile {
    vars: BTreeMap<String, VarProfile>,
}

/// `(min(a_i, t_i), a_i mod m_i)` per variable.
pub type ProfileTuple = BTreeMap<String, (u64, u64)>;

impl SaturationProfile {
    pub fn vars(&self) -> &BTreeMap<String, VarProfile> {
        &self.vars
    }

    pub fn get(&self, var: &str) -> Option<VarProfile> {
        self.vars.get(var).copied()
    }

    pub fn tuple_of(&self, a: &Input) -> ProfileTuple {
        self.vars
            .iter()
            .map(|(v, p)| {
                let x = a.get(v);
                (v.clone(), (x.min(p.threshold), x % p.modulus))
            })
            .collect()
    }
}

/// Saturation profile of `f`, computed on its normalized form.
pub fn profile(f: &Formula) -> SaturationProfile {
    fn walk(f: &Formula, vars: &mut BTreeMap<String, VarProfile>) {
        match f {
            Formula::And(l, r) | Formula::Or(l, r) => {
                walk(l, vars);
                walk(r, vars);
            }
            Formula::Not(g) => walk(g, vars),
            Formula::Threshold { var, bound, .. } => {
                let p = vars.entry(var.clone()).or_insert(UNCONSTRAINED);
                p.threshold = p.threshold.max(*bound);
            }
            Formula::Mod { var, modulus, .. } | Formula::ModCmp { var, modulus, .. } => {
                let p = vars.entry(var.clone()).or_insert(UNCONSTRAINED);
                p.modulus = p.modulus.lcm(modulus);
            }
        }
    }
    let mut vars = BTreeMap::new();
    walk(&normalize(f), &mut vars);
    SaturationProfile { vars }
}

const UNCONSTRAINED: VarProfile = VarProfile {
    threshold: 0,
    modulus: 1,
};

/// Truth value of normalized `f` from the profile tuple alone.
pub fn eval_from_profile(
    f: &Formula,
    p: &SaturationProfile,
    t: &ProfileTuple,
) -> Result<bool, EvalError> {
    for (var, vp) in &p.vars {
        let &(sat, res) = t
            .get(var)
            .ok_or_else(|| EvalError::UnboundVariable(var.clone()))?;
        if sat > vp.threshold || res >= vp.modulus {
            return Err(EvalError::InconsistentTuple {
                var: var.clone(),
                sat,
                res,
                t: vp.threshold,
                m: vp.modulus,
            });
        }
    }
    eval_profiled(&normalize(f), p, t)
}

fn eval_profiled(f: &Formula, p: &SaturationProfile, t: &ProfileTuple) -> Result<bool, EvalError> {
    let lookup = |var: &String| {
        t.get(var)
            .copied()
            .zip(p.get(var))
            .ok_or_else(|| EvalError::UnboundVariable(var.clone()))
    };
    Ok(match f {
        Formula::And(l, r) => eval_profiled(l, p, t)? & eval_profiled(r, p, t)?,
        Formula::Or(l, r) => eval_profiled(l, p, t)? | eval_profiled(r, p, t)?,
        Formula::Not(g) => !eval_profiled(g, p, t)?,
        // bound ≤ t_i, so x ≥ bound iff min(x, t_i) ≥ bound
        Formula::Threshold { var, rel, bound } => {
            debug_assert_eq!(*rel, Rel::Ge);
            lookup(var)?.0 .0 >= *bound
        }
        // modulus divides m_i, so x mod modulus = (x mod m_i) mod modulus
        Formula::Mod {
            var,
            modulus,
            accepted,
        } => accepted.contains(&(lookup(var)?.0 .1 % modulus)),
        Formula::ModCmp { .. } => unreachable!("normalized formulas have no ModCmp atoms"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presburger::parse;

    const RUNNING: &str = "(x >= 3 | y % 7 >= 2) & (x % 5 >= 1 | y % 2 >= 1) & (x >= 4 | y >= 17)";

    fn xy(x: u64, y: u64) -> Input {
        Input::new().with("x", x).with("y", y)
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(
            normalize(&parse("x <= 3").unwrap()),
            Formula::not(Formula::ge("x", 4))
        );
        assert_eq!(
            normalize(&parse("x % 5 >= 1").unwrap()),
            Formula::modulo("x", 5, [1, 2, 3, 4])
        );
        assert_eq!(
            normalize(&parse("x = 2").unwrap()),
            Formula::and(Formula::ge("x", 2), Formula::not(Formula::ge("x", 3)))
        );
        assert_eq!(normalize(&parse("x > 2").unwrap()), Formula::ge("x", 3));
        assert_eq!(
            normalize(&parse("x < 2").unwrap()),
            Formula::not(Formula::ge("x", 2))
        );
        assert!(is_normalized(&normalize(&parse(RUNNING).unwrap())));
    }

    #[test]
    fn profile_examples() {
        let p = profile(&parse(RUNNING).unwrap());
        assert_eq!(
            p.get("x"),
            Some(VarProfile {
                threshold: 4,
                modulus: 5
            })
        );
        assert_eq!(
            p.get("y"),
            Some(VarProfile {
                threshold: 17,
                modulus: 14
            })
        );
        let p = profile(&parse("x % 2 in {1}").unwrap());
        assert_eq!(
            p.get("x"),
            Some(VarProfile {
                threshold: 0,
                modulus: 2
            })
        );
        let p = profile(&parse("x >= 3").unwrap());
        assert_eq!(
            p.get("x"),
            Some(VarProfile {
                threshold: 3,
                modulus: 1
            })
        );
        // `x <= 3` saturates at 4 after normalization
        let p = profile(&parse("x <= 3").unwrap());
        assert_eq!(
            p.get("x"),
            Some(VarProfile {
                threshold: 4,
                modulus: 1
            })
        );
    }

    #[test]
    fn eval_examples() {
        let f = parse(RUNNING).unwrap();
        assert!(eval(&f, &xy(15, 41)).unwrap());
        assert!(!eval(&parse("x >= 3").unwrap(), &Input::single("x", 2)).unwrap());
        assert!(!eval(&parse("x % 5 >= 1").unwrap(), &Input::single("x", 15)).unwrap());
        assert_eq!(
            eval(&f, &Input::single("x", 1)),
            Err(EvalError::UnboundVariable("y".into()))
        );
    }

    #[test]
    fn eval_from_profile_examples() {
        let f = parse(RUNNING).unwrap();
        let p = profile(&f);
        let t: ProfileTuple = [("x".into(), (4, 0)), ("y".into(), (17, 13))].into();
        assert_eq!(p.tuple_of(&xy(15, 41)), t);
        assert!(eval_from_profile(&f, &p, &t).unwrap());

        let atom = parse("y % 7 >= 2").unwrap();
        let py = profile(&parse("y % 7 >= 2 | y % 2 >= 1 | y >= 17").unwrap());
        let ty: ProfileTuple = [("y".into(), (17, 13))].into();
        // residue 13 mod 14 gives 6 mod 7, and 6 >= 2
        assert!(eval_from_profile(&atom, &py, &ty).unwrap());
        let eq2 = parse("y % 7 = 2").unwrap();
        assert!(!eval_from_profile(&eq2, &py, &ty).unwrap());

        let bad: ProfileTuple = [("x".into(), (5, 0)), ("y".into(), (0, 0))].into();
        assert!(matches!(
            eval_from_profile(&f, &p, &bad),
            Err(EvalError::InconsistentTuple { .. })
        ));
    }

    #[test]
    fn saturation_agrees_on_box() {
        let f = parse(RUNNING).unwrap();
        let p = profile(&f);
        for x in 0..=(4 + 2 * 5) {
            for y in 0..=(17 + 2 * 14) {
                let a = xy(x, y);
                assert_eq!(
                    eval(&f, &a).unwrap(),
                    eval_from_profile(&f, &p, &p.tuple_of(&a)).unwrap(),
                    "at ({x},{y})"
                );
            }
        }
    }
}
