//! Compilation of monadic formulas to protocols.
//!
//! Each variable `x_i` gets a component computing `(min(x_i, t_i), x_i mod
//! m_i)`; components are composed in parallel (variables in lexicographic
//! order) and the composed output tuple is mapped to the formula's truth
//! value.

use num_bigint::BigUint;
use thiserror::Error;

use super::{
    eval, eval_from_profile, normalize, profile, EvalError, Formula, ProfileTuple,
    SaturationProfile, VarProfile,
};
use crate::model::{Input, ModelError, Output, Protocol};
use crate::zoo::{
    self, compose_all, compose_state_count, tower_mod_state_count, FunctionSpec, ZooError,
    MAX_STATES,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompileError {
    #[error("formula has no variables")]
    NoVariables,
    #[error("compiled protocol would have {states} states (limit {limit})")]
    TooLarge { states: BigUint, limit: u64 },
    #[error(transparent)]
    Zoo(#[from] ZooError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Protocol family chosen for one variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Component {
    /// `robust_min_mod(t, m)`
    MinMod { threshold: u64, modulus: u64 },
    /// `robust_min(t)`
    Min { threshold: u64 },
    /// `robust_mod(m)`
    Mod { modulus: u64 },
    /// one state, constant output `(0, 0)`
    Constant,
}

impl Component {
    pub fn for_profile(p: VarProfile) -> Component {
        match (p.threshold, p.modulus) {
            (0, 1) => Component::Constant,
            (t, 1) => Component::Min { threshold: t },
            (0, m) => Component::Mod { modulus: m },
            (t, m) => Component::MinMod {
                threshold: t,
                modulus: m,
            },
        }
    }

    pub fn state_count(self) -> BigUint {
        match self {
            Component::MinMod { threshold, modulus } => {
                let height = (modulus * modulus + 1).max(threshold + modulus);
                tower_mod_state_count(height, modulus)
            }
            Component::Min { threshold } => BigUint::from(threshold) * BigUint::from(threshold),
            Component::Mod { modulus } => tower_mod_state_count(modulus * modulus + 1, modulus),
            Component::Constant => BigUint::from(1u32),
        }
    }
}

/// What [`compile`] would build, without building it.
#[derive(Clone, Debug, PartialEq)]
pub struct CompilePlan {
    pub formula: Formula,
    pub profile: SaturationProfile,
    pub components: Vec<(String, Component)>,
    pub state_count: BigUint,
}

pub fn plan(f: &Formula) -> Result<CompilePlan, CompileError> {
    let formula = normalize(f);
    let profile = profile(&formula);
    if profile.vars().is_empty() {
        return Err(CompileError::NoVariables);
    }
    let components: Vec<(String, Component)> = profile
        .vars()
        .iter()
        .map(|(v, p)| (v.clone(), Component::for_profile(*p)))
        .collect();
    let mut count: Option<(BigUint, usize)> = None;
    for (var, comp) in &components {
        let p = profile.get(var).expect("component per profiled variable");
        let codomain = ((p.threshold + 1) * p.modulus) as usize;
        let states = comp.state_count();
        count = Some(match count {
            None => (states, codomain),
            Some((acc, acc_cod)) => (
                compose_state_count(&acc, acc_cod, &states, codomain),
                acc_cod * codomain,
            ),
        });
    }
    Ok(CompilePlan {
        formula,
        profile,
        components,
        state_count: count.map(|(c, _)| c).unwrap_or_default(),
    })
}

fn component_protocol(var: &str, comp: Component) -> Result<Protocol, ZooError> {
    let as_pair = |p: Protocol, f: fn(u64) -> Output| {
        p.map_outputs(p.name().to_owned(), None, |o| {
            f(o.as_int().expect("single-valued component output"))
        })
    };
    let p = match comp {
        Component::MinMod { threshold, modulus } => zoo::robust_min_mod(threshold, modulus)?,
        Component::Min { threshold } => {
            as_pair(zoo::robust_min(threshold)?, |h| Output::pair(h, 0))?
        }
        Component::Mod { modulus } => as_pair(zoo::robust_mod(modulus)?, |r| Output::pair(0, r))?,
        Component::Constant => return zoo::constant(var, Output::pair(0, 0)),
    };
    Ok(p.rename_variable("x", var)?)
}

/// Builds a protocol deciding `f`, with output alphabet `{0, 1}`.
///
/// The returned [`FunctionSpec`] has codomain `{0, 1}` and the formula's
/// value on the zero input.
pub fn compile(f: &Formula) -> Result<(Protocol, FunctionSpec), CompileError> {
    let plan = plan(f)?;
    if plan.state_count > BigUint::from(MAX_STATES) {
        return Err(CompileError::TooLarge {
            states: plan.state_count,
            limit: MAX_STATES,
        });
    }
    let mut parts = Vec::with_capacity(plan.components.len());
    for (var, comp) in &plan.components {
        let vp = plan.profile.get(var).expect("profiled variable");
        let codomain =
            (0..=vp.threshold).flat_map(|s| (0..vp.modulus).map(move |r| Output::pair(s, r)));
        let spec = FunctionSpec::new(codomain, Output::pair(0, 0))?;
        parts.push((component_protocol(var, *comp)?, spec));
    }
    let vars: Vec<String> = plan.components.iter().map(|(v, _)| v.clone()).collect();
    let (tuple_protocol, _) = compose_all(parts)?;

    let decide = |o: &Output| -> Result<Output, CompileError> {
        let items: Vec<&Output> = if vars.len() == 1 {
            vec![o]
        } else {
            o.as_tuple()
                .expect("composed output is a tuple")
                .iter()
                .collect()
        };
        let tuple: ProfileTuple = vars
            .iter()
            .zip(items)
            .map(|(v, pair)| {
                let pair = pair.as_tuple().expect("component output is a pair");
                let sat = pair[0].as_int().expect("integer saturation");
                let res = pair[1].as_int().expect("integer residue");
                (v.clone(), (sat, res))
            })
            .collect();
        Ok(Output::Int(u64::from(eval_from_profile(
            &plan.formula,
            &plan.profile,
            &tuple,
        )?)))
    };
    // validate every output before the infallible remap
    for o in tuple_protocol.output_alphabet() {
        decide(o)?;
    }
    let protocol = tuple_protocol.map_outputs(
        format!("compile({f})"),
        Some(vec![Output::Int(0), Output::Int(1)]),
        |o| decide(o).expect("validated above"),
    )?;
    let zero: Input = vars.iter().map(|v| (v.clone(), 0)).collect();
    let zero_value = Output::Int(u64::from(eval(&plan.formula, &zero)?));
    let spec = FunctionSpec::new([Output::Int(0), Output::Int(1)], zero_value)?;
    Ok((protocol, spec))
}
