use crate::logic::{EvalError, FiniteStructure};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TypeError {
    #[error("atom needs theory {expected:?}, context has {got:?}")]
    TheoryMismatch {
        expected: TheoryKind,
        got: TheoryKind,
    },
    #[error("cut position {0} is outside the base of size {1}")]
    CutOutOfRange(usize, usize),
    #[error("adjacency bitstring has length {got}, base has {expected} elements")]
    BitstringLength { expected: usize, got: usize },
    #[error("realized tuple element {0} is outside the base of size {1}")]
    TupleOutOfRange(usize, usize),
    #[error("atoms {0} and {1} have identical traces over the base")]
    DuplicateTrace(usize, usize),
    #[error("type space has no atoms")]
    EmptySpace,
    #[error("atom index {0} is out of range ({1} atoms)")]
    AtomOutOfRange(usize, usize),
    #[error("column index {0} is out of range ({1} columns)")]
    ColumnOutOfRange(usize, usize),
    #[error("order invariant violated after realize: {0}")]
    OrderInvariant(String),
    #[error("graph invariant violated after realize: {0}")]
    GraphInvariant(String),
    #[error("base structure does not satisfy the {0:?} theory: {1}")]
    BadBase(TheoryKind, String),
    #[error("limit atom cannot decide {0}")]
    Undecidable(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Which extension discipline a context enforces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TheoryKind {
    /// No extension rules; only realized atoms make sense here.
    Plain,
    /// Strict linear order through the relation `lt`.
    Dlo,
    /// Simple undirected graph through the relation `E`.
    RandomGraph,
}

/// Side of a cut: `Above` is the point just above the anchor, `Below` just
/// below it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutSide {
    Above,
    Below,
}

impl CutSide {
    pub fn symbol(&self) -> char {
        match self {
            CutSide::Above => '+',
            CutSide::Below => '-',
        }
    }

    pub fn from_symbol(c: char) -> Option<CutSide> {
        match c {
            '+' => Some(CutSide::Above),
            '-' => Some(CutSide::Below),
            _ => None,
        }
    }
}

/// One realization event: which atom, which fresh (or reused) elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RealizationRecord {
    pub atom: String,
    pub elements: Vec<usize>,
    pub fresh: bool,
}

/// A base structure plus the elements added by realizing limit atoms.
///
/// The extended structure is materialized after every insertion, so ordinary
/// Tarski evaluation works on it directly. Contexts are single-writer; clone
/// one to explore parallel branches.
#[derive(Debug, Clone)]
pub struct ExtensionContext {
    theory: TheoryKind,
    base_size: usize,
    structure: FiniteStructure,
    /// Element ids in ascending order position; `Dlo` only.
    order: Vec<usize>,
    pub log: Vec<RealizationRecord>,
}

impl ExtensionContext {
    pub fn new(base: &FiniteStructure, theory: TheoryKind) -> Result<Self, TypeError> {
        let ctx = ExtensionContext {
            theory,
            base_size: base.size,
            structure: base.clone(),
            order: match theory {
                TheoryKind::Dlo => {
                    sorted_by_lt(base).map_err(|m| TypeError::BadBase(TheoryKind::Dlo, m))?
                }
                _ => Vec::new(),
            },
            log: Vec::new(),
        };
        if theory == TheoryKind::RandomGraph {
            validate_graph(&ctx.structure).map_err(|m| TypeError::BadBase(theory, m))?;
        }
        if theory == TheoryKind::Dlo {
            validate_order(&ctx.structure).map_err(|m| TypeError::BadBase(theory, m))?;
        }
        Ok(ctx)
    }

    pub fn theory(&self) -> TheoryKind {
        self.theory
    }

    pub fn base_size(&self) -> usize {
        self.base_size
    }

    pub fn structure(&self) -> &FiniteStructure {
        &self.structure
    }

    pub fn is_fresh(&self, e: usize) -> bool {
        e >= self.base_size
    }

    /// Inserts a fresh order element next to `anchor`. With `Above` the new
    /// element lands immediately above the anchor, below every element that
    /// was already above it; later insertions at the same cut slide closer to
    /// the anchor. `Below` mirrors this from underneath.
    pub fn insert_order_element(
        &mut self,
        anchor: usize,
        side: CutSide,
    ) -> Result<usize, TypeError> {
        if self.theory != TheoryKind::Dlo {
            return Err(TypeError::TheoryMismatch {
                expected: TheoryKind::Dlo,
                got: self.theory,
            });
        }
        let pos = self
            .order
            .iter()
            .position(|&e| e == anchor)
            .ok_or(TypeError::CutOutOfRange(anchor, self.structure.size))?;
        let e = self.structure.push_element();
        let at = match side {
            CutSide::Above => pos + 1,
            CutSide::Below => pos,
        };
        self.order.insert(at, e);
        self.rebuild_order_relation();
        validate_order(&self.structure).map_err(TypeError::OrderInvariant)?;
        Ok(e)
    }

    /// Adds a fresh vertex adjacent to exactly `neighbors`.
    pub fn add_vertex(&mut self, neighbors: &[usize]) -> Result<usize, TypeError> {
        if self.theory != TheoryKind::RandomGraph {
            return Err(TypeError::TheoryMismatch {
                expected: TheoryKind::RandomGraph,
                got: self.theory,
            });
        }
        let e = self.structure.push_element();
        for &n in neighbors {
            if n >= e {
                return Err(TypeError::TupleOutOfRange(n, e));
            }
            self.structure
                .add_tuple("E", &[e, n])
                .map_err(|er| TypeError::GraphInvariant(er.to_string()))?;
            self.structure
                .add_tuple("E", &[n, e])
                .map_err(|er| TypeError::GraphInvariant(er.to_string()))?;
        }
        validate_graph(&self.structure).map_err(TypeError::GraphInvariant)?;
        Ok(e)
    }

    fn rebuild_order_relation(&mut self) {
        let pairs: Vec<(usize, usize)> = self
            .order
            .iter()
            .enumerate()
            .flat_map(|(i, &a)| self.order[i + 1..].iter().map(move |&b| (a, b)))
            .collect();
        let all: Vec<Vec<usize>> = self.structure.tuples("lt").cloned().collect();
        for t in all {
            self.structure.remove_tuple("lt", &t);
        }
        for (a, b) in pairs {
            self.structure.add_tuple("lt", &[a, b]).expect("in range");
        }
    }
}

fn sorted_by_lt(s: &FiniteStructure) -> Result<Vec<usize>, String> {
    if s.signature.relation_arity("lt") != Some(2) {
        return Err("missing binary relation lt".to_string());
    }
    let mut order: Vec<usize> = (0..s.size).collect();
    order.sort_by(|&a, &b| {
        if s.holds("lt", &[a, b]) {
            std::cmp::Ordering::Less
        } else if s.holds("lt", &[b, a]) {
            std::cmp::Ordering::Greater
        } else {
            std::cmp::Ordering::Equal
        }
    });
    Ok(order)
}

/// Exhaustive strict-total-order check of the `lt` table.
pub fn validate_order(s: &FiniteStructure) -> Result<(), String> {
    for a in 0..s.size {
        if s.holds("lt", &[a, a]) {
            return Err(format!("lt({a}, {a}) is reflexive"));
        }
        for b in 0..s.size {
            if a != b {
                let ab = s.holds("lt", &[a, b]);
                let ba = s.holds("lt", &[b, a]);
                if ab == ba {
                    return Err(format!("elements {a} and {b} are not strictly comparable"));
                }
            }
            for c in 0..s.size {
                if s.holds("lt", &[a, b]) && s.holds("lt", &[b, c]) && !s.holds("lt", &[a, c]) {
                    return Err(format!("transitivity fails on ({a}, {b}, {c})"));
                }
            }
        }
    }
    Ok(())
}

/// Simple undirected graph check of the `E` table.
pub fn validate_graph(s: &FiniteStructure) -> Result<(), String> {
    if s.signature.relation_arity("E") != Some(2) {
        return Err("missing binary relation E".to_string());
    }
    for t in s.tuples("E") {
        let (a, b) = (t[0], t[1]);
        if a == b {
            return Err(format!("loop at vertex {a}"));
        }
        if !s.holds("E", &[b, a]) {
            return Err(format!("edge ({a}, {b}) lacks its mirror"));
        }
    }
    Ok(())
}
