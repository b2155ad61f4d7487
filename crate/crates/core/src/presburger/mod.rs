//! Monadic Presburger formulas: syntax, semantics, saturation profiles and
//! compilation to protocols.

mod ast;
mod compile;
mod parse;
mod semantics;

pub use ast::{Formula, Rel};
pub use compile::{compile, plan, CompileError, CompilePlan, Component};
pub use parse::{parse, ParseError, ParseErrorKind};
pub use semantics::{
    eval, eval_from_profile, is_normalized, normalize, profile, EvalError, ProfileTuple,
    SaturationProfile, VarProfile,
};

#[cfg(test)]
pub(crate) mod strategies {
    use proptest::prelude::*;

    use super::{Formula, Rel};

    fn rel() -> impl Strategy<Value = Rel> {
        prop::sample::select(vec![Rel::Lt, Rel::Le, Rel::Eq, Rel::Ge, Rel::Gt])
    }

    pub fn atom(
        vars: &'static [&'static str],
        max_bound: u64,
        max_mod: u64,
    ) -> BoxedStrategy<Formula> {
        let var = prop::sample::select(vars.to_vec()).prop_map(str::to_owned);
        prop_oneof![
            (var.clone(), rel(), 0..=max_bound).prop_map(|(var, rel, bound)| Formula::Threshold {
                var,
                rel,
                bound
            }),
            (var.clone(), 2..=max_mod, rel(), 0..max_mod).prop_map(|(var, modulus, rel, bound)| {
                Formula::ModCmp {
                    var,
                    modulus,
                    rel,
                    bound: bound % modulus,
                }
            }),
            (var, 2..=max_mod, any::<u16>()).prop_map(|(var, modulus, mask)| Formula::Mod {
                accepted: (0..modulus).filter(|r| mask >> r & 1 == 1).collect(),
                var,
                modulus,
            }),
        ]
        .boxed()
    }

    pub fn formula(
        vars: &'static [&'static str],
        max_bound: u64,
        max_mod: u64,
    ) -> BoxedStrategy<Formula> {
        atom(vars, max_bound, max_mod)
            .prop_recursive(4, 16, 2, |inner| {
                prop_oneof![
                    (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::and(l, r)),
                    (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::or(l, r)),
                    inner.prop_map(Formula::not),
                ]
            })
            .boxed()
    }
}
