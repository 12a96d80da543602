use std::collections::BTreeSet;
use std::fmt;

/// A term is a variable or a declared constant. The parser decides which by
/// consulting the signature.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn name(&self) -> &str {
        match self {
            Term::Var(n) | Term::Const(n) => n,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// First-order formula over a relational signature with equality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    Rel(String, Vec<Term>),
    Eq(Term, Term),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Exists(String, Box<Formula>),
    Forall(String, Box<Formula>),
}

impl Formula {
    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Implies(..) => 0,
            Formula::Or(..) => 1,
            Formula::And(..) => 2,
            Formula::Not(..) | Formula::Exists(..) | Formula::Forall(..) => 3,
            // Atoms rendered with an infix operator read looser than they
            // bind, so they keep a sub-negation precedence for display.
            Formula::Rel(name, args) if name == "lt" && args.len() == 2 => 3,
            Formula::Eq(..) => 3,
            Formula::Rel(..) => 4,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let prec = self.precedence();
        let parens = prec < min;
        if parens {
            f.write_str("(")?;
        }
        match self {
            Formula::Rel(name, args) => {
                if name == "lt" && args.len() == 2 {
                    write!(f, "{} < {}", args[0], args[1])?;
                } else {
                    let parts: Vec<String> = args.iter().map(|t| t.to_string()).collect();
                    write!(f, "{name}({})", parts.join(", "))?;
                }
            }
            Formula::Eq(a, b) => write!(f, "{a} = {b}")?,
            Formula::Not(inner) => {
                f.write_str("!")?;
                inner.fmt_prec(f, 4)?;
            }
            Formula::And(a, b) => {
                a.fmt_prec(f, 2)?;
                f.write_str(" & ")?;
                b.fmt_prec(f, 3)?;
            }
            Formula::Or(a, b) => {
                a.fmt_prec(f, 1)?;
                f.write_str(" | ")?;
                b.fmt_prec(f, 2)?;
            }
            Formula::Implies(a, b) => {
                a.fmt_prec(f, 1)?;
                f.write_str(" -> ")?;
                b.fmt_prec(f, 0)?;
            }
            Formula::Exists(v, body) => write!(f, "exists {v} ({body})")?,
            Formula::Forall(v, body) => write!(f, "forall {v} ({body})")?,
        }
        if parens {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// Free variables of a formula, sorted by name.
pub fn free_variables(formula: &Formula) -> BTreeSet<String> {
    fn walk(f: &Formula, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match f {
            Formula::Rel(_, args) => {
                for t in args {
                    if let Term::Var(v) = t {
                        if !bound.iter().any(|b| b == v) {
                            out.insert(v.clone());
                        }
                    }
                }
            }
            Formula::Eq(a, b) => {
                for t in [a, b] {
                    if let Term::Var(v) = t {
                        if !bound.iter().any(|b2| b2 == v) {
                            out.insert(v.clone());
                        }
                    }
                }
            }
            Formula::Not(inner) => walk(inner, bound, out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                walk(a, bound, out);
                walk(b, bound, out);
            }
            Formula::Exists(v, body) | Formula::Forall(v, body) => {
                bound.push(v.clone());
                walk(body, bound, out);
                bound.pop();
            }
        }
    }
    let mut out = BTreeSet::new();
    walk(formula, &mut Vec::new(), &mut out);
    out
}

/// A formula plus the split of its free variables into an object tuple and a
/// parameter tuple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionedFormula {
    pub formula: Formula,
    pub object_vars: Vec<String>,
    pub param_vars: Vec<String>,
}

impl PartitionedFormula {
    /// The dual formula: same syntax, object and parameter roles swapped.
    /// Applying it twice returns the original partition.
    pub fn dual(&self) -> PartitionedFormula {
        PartitionedFormula {
            formula: self.formula.clone(),
            object_vars: self.param_vars.clone(),
            param_vars: self.object_vars.clone(),
        }
    }

    pub fn object_arity(&self) -> usize {
        self.object_vars.len()
    }

    pub fn param_arity(&self) -> usize {
        self.param_vars.len()
    }
}

impl fmt::Display for PartitionedFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({} ; {}) {}",
            self.object_vars.join(", "),
            self.param_vars.join(", "),
            self.formula
        )
    }
}

/// Boolean combination of formula instances. Each instance fixes the
/// parameter tuple of a partitioned formula; the object tuple stays free and
/// is shared by every instance. An empty conjunction is true, an empty
/// disjunction is false.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PhiFormula {
    Instance {
        formula: PartitionedFormula,
        params: Vec<usize>,
    },
    Not(Box<PhiFormula>),
    And(Vec<PhiFormula>),
    Or(Vec<PhiFormula>),
}

impl PhiFormula {
    pub fn instance(formula: &PartitionedFormula, params: &[usize]) -> PhiFormula {
        PhiFormula::Instance {
            formula: formula.clone(),
            params: params.to_vec(),
        }
    }

    pub fn negated(self) -> PhiFormula {
        PhiFormula::Not(Box::new(self))
    }

    /// Object arity shared by all instances; `None` when the combination
    /// contains no instance at all.
    pub fn object_arity(&self) -> Option<usize> {
        match self {
            PhiFormula::Instance { formula, .. } => Some(formula.object_arity()),
            PhiFormula::Not(inner) => inner.object_arity(),
            PhiFormula::And(parts) | PhiFormula::Or(parts) => {
                parts.iter().find_map(|p| p.object_arity())
            }
        }
    }

    /// Applies `decide` to every instance and folds the Boolean structure.
    pub fn decide_with<E>(
        &self,
        decide: &mut impl FnMut(&PartitionedFormula, &[usize]) -> Result<bool, E>,
    ) -> Result<bool, E> {
        match self {
            PhiFormula::Instance { formula, params } => decide(formula, params),
            PhiFormula::Not(inner) => Ok(!inner.decide_with(decide)?),
            PhiFormula::And(parts) => {
                for p in parts {
                    if !p.decide_with(decide)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            PhiFormula::Or(parts) => {
                for p in parts {
                    if p.decide_with(decide)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
        }
    }

    /// Visits every instance, without the short-circuiting `decide_with`
    /// applies to conjunctions and disjunctions.
    pub fn for_each_instance<E>(
        &self,
        visit: &mut impl FnMut(&PartitionedFormula, &[usize]) -> Result<(), E>,
    ) -> Result<(), E> {
        match self {
            PhiFormula::Instance { formula, params } => visit(formula, params),
            PhiFormula::Not(inner) => inner.for_each_instance(visit),
            PhiFormula::And(parts) | PhiFormula::Or(parts) => {
                parts.iter().try_for_each(|p| p.for_each_instance(visit))
            }
        }
    }
}

impl fmt::Display for PhiFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhiFormula::Instance { formula, params } => {
                let parts: Vec<String> = params.iter().map(|p| p.to_string()).collect();
                write!(f, "phi[{}]({})", formula.formula, parts.join(", "))
            }
            PhiFormula::Not(inner) => write!(f, "!{inner}"),
            PhiFormula::And(parts) if parts.is_empty() => f.write_str("true"),
            PhiFormula::Or(parts) if parts.is_empty() => f.write_str("false"),
            PhiFormula::And(parts) => {
                let parts: Vec<String> = parts.iter().map(|p| format!("({p})")).collect();
                f.write_str(&parts.join(" & "))
            }
            PhiFormula::Or(parts) => {
                let parts: Vec<String> = parts.iter().map(|p| format!("({p})")).collect();
                f.write_str(&parts.join(" | "))
            }
        }
    }
}
