use super::formula::{Formula, PartitionedFormula, PhiFormula, Term};
use super::structure::FiniteStructure;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("variable {0} has no assigned value")]
    UnassignedVariable(String),
    #[error("constant {0} has no value in this structure")]
    UnassignedConstant(String),
    #[error("element {0} is outside the domain of size {1}")]
    ElementOutOfRange(usize, usize),
    #[error("relation {0} is not declared in the signature")]
    UnknownRelation(String),
    #[error("tuple arity mismatch: expected {expected}, got {got}")]
    TupleArity { expected: usize, got: usize },
}

struct Env<'a> {
    base: &'a BTreeMap<String, usize>,
    scoped: Vec<(String, usize)>,
}

impl Env<'_> {
    fn lookup(&self, name: &str) -> Option<usize> {
        self.scoped
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
            .or_else(|| self.base.get(name).copied())
    }
}

fn term_value(m: &FiniteStructure, env: &Env, t: &Term) -> Result<usize, EvalError> {
    let v = match t {
        Term::Var(name) => env
            .lookup(name)
            .ok_or_else(|| EvalError::UnassignedVariable(name.clone()))?,
        Term::Const(name) => m
            .constant(name)
            .ok_or_else(|| EvalError::UnassignedConstant(name.clone()))?,
    };
    if v >= m.size {
        return Err(EvalError::ElementOutOfRange(v, m.size));
    }
    Ok(v)
}

fn eval_in(m: &FiniteStructure, f: &Formula, env: &mut Env) -> Result<bool, EvalError> {
    match f {
        Formula::Rel(name, args) => {
            if m.signature.relation_arity(name).is_none() {
                return Err(EvalError::UnknownRelation(name.clone()));
            }
            let mut tuple = Vec::with_capacity(args.len());
            for a in args {
                tuple.push(term_value(m, env, a)?);
            }
            Ok(m.holds(name, &tuple))
        }
        Formula::Eq(a, b) => Ok(term_value(m, env, a)? == term_value(m, env, b)?),
        Formula::Not(inner) => Ok(!eval_in(m, inner, env)?),
        Formula::And(a, b) => Ok(eval_in(m, a, env)? && eval_in(m, b, env)?),
        Formula::Or(a, b) => Ok(eval_in(m, a, env)? || eval_in(m, b, env)?),
        Formula::Implies(a, b) => Ok(!eval_in(m, a, env)? || eval_in(m, b, env)?),
        Formula::Exists(v, body) => {
            for e in 0..m.size {
                env.scoped.push((v.clone(), e));
                let holds = eval_in(m, body, env);
                env.scoped.pop();
                if holds? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        Formula::Forall(v, body) => {
            for e in 0..m.size {
                env.scoped.push((v.clone(), e));
                let holds = eval_in(m, body, env);
                env.scoped.pop();
                if !holds? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

/// Tarski evaluation of `f` in `m` under the assignment `env`.
pub fn evaluate(
    m: &FiniteStructure,
    f: &Formula,
    env: &BTreeMap<String, usize>,
) -> Result<bool, EvalError> {
    let mut env = Env {
        base: env,
        scoped: Vec::new(),
    };
    eval_in(m, f, &mut env)
}

/// Evaluates a partitioned formula at an object tuple and a parameter tuple.
pub fn eval_instance(
    m: &FiniteStructure,
    pf: &PartitionedFormula,
    objects: &[usize],
    params: &[usize],
) -> Result<bool, EvalError> {
    if objects.len() != pf.object_vars.len() {
        return Err(EvalError::TupleArity {
            expected: pf.object_vars.len(),
            got: objects.len(),
        });
    }
    if params.len() != pf.param_vars.len() {
        return Err(EvalError::TupleArity {
            expected: pf.param_vars.len(),
            got: params.len(),
        });
    }
    let mut env = BTreeMap::new();
    for (v, &e) in pf.object_vars.iter().zip(objects) {
        env.insert(v.clone(), e);
    }
    for (v, &e) in pf.param_vars.iter().zip(params) {
        env.insert(v.clone(), e);
    }
    evaluate(m, &pf.formula, &env)
}

/// Evaluates a Boolean combination of instances at the object tuple `a`.
pub fn evaluate_phi_formula(
    m: &FiniteStructure,
    theta: &PhiFormula,
    a: &[usize],
) -> Result<bool, EvalError> {
    theta.decide_with(&mut |pf, params| eval_instance(m, pf, a, params))
}
