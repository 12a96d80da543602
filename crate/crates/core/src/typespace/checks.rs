use super::context::TypeError;
use super::space::TypeSpace;
use crate::logic::{evaluate_phi_formula, PhiFormula};

/// Outcome of a finite-satisfiability battery.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FsReport {
    pub satisfied: bool,
    /// Index of the first positively decided battery formula with no
    /// realizer among the fragment tuples.
    pub failing: Option<usize>,
    /// Battery formulas the atom decides positively.
    pub positive: Vec<usize>,
}

/// All `k`-tuples over the listed elements, lexicographic in list positions.
pub fn tuples_over(elements: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; k];
    loop {
        out.push(idx.iter().map(|&i| elements[i]).collect());
        let mut d = k;
        loop {
            if d == 0 {
                return out;
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < elements.len() {
                break;
            }
            idx[d] = 0;
        }
    }
}

/// Checks whether every battery formula the atom decides positively is
/// realized by a tuple drawn from `m_sub` inside the base structure.
pub fn atom_finitely_satisfiable_in(
    space: &TypeSpace,
    atom: usize,
    m_sub: &[usize],
    battery: &[PhiFormula],
) -> Result<FsReport, TypeError> {
    let arity = space.formula.object_arity();
    let candidates = tuples_over(m_sub, arity);
    let mut positive = Vec::new();
    for (i, theta) in battery.iter().enumerate() {
        if !space.decide_phi(atom, theta)? {
            continue;
        }
        positive.push(i);
        let mut realized = false;
        for t in &candidates {
            if evaluate_phi_formula(&space.base, theta, t)? {
                realized = true;
                break;
            }
        }
        if !realized {
            return Ok(FsReport {
                satisfied: false,
                failing: Some(i),
                positive,
            });
        }
    }
    Ok(FsReport {
        satisfied: true,
        failing: None,
        positive,
    })
}

/// The default battery over a fragment: every single instance and its
/// negation, for each parameter tuple drawn from `m_sub`.
pub fn fragment_battery(space: &TypeSpace, m_sub: &[usize]) -> Vec<PhiFormula> {
    let mut battery = Vec::new();
    for params in tuples_over(m_sub, space.formula.param_arity()) {
        battery.push(PhiFormula::instance(&space.formula, &params));
        battery.push(PhiFormula::instance(&space.formula, &params).negated());
    }
    battery
}
