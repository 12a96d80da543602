use super::context::{CutSide, ExtensionContext, RealizationRecord, TheoryKind, TypeError};
use crate::logic::{eval_instance, PartitionedFormula};
use std::fmt;
use std::sync::Arc;

/// Extension rule for a user-defined limit atom.
///
/// `place` must be deterministic: realizing the same atom in equal contexts
/// has to produce elements with identical relations, otherwise the
/// well-definedness checks downstream will reject the atom.
pub trait AtomRule: Send + Sync {
    fn name(&self) -> String;
    fn object_arity(&self) -> usize {
        1
    }
    fn place(&self, ctx: &mut ExtensionContext) -> Result<Vec<usize>, TypeError>;
}

/// A point of a type space: either realized by a concrete tuple of the base
/// structure, or a limit atom that answers instances through an extension
/// rule.
#[derive(Clone)]
pub enum TypeAtom {
    /// The type of an explicit base tuple.
    Realized(Vec<usize>),
    /// Order type sitting immediately beside `position`. Realizations answer
    /// instances with the value witnessed by base elements on the cut's side,
    /// and successive realizations land ever closer to the cut.
    DloCut { position: usize, side: CutSide },
    /// Graph type with a fixed adjacency pattern over the base vertices;
    /// fresh vertices attach to nothing outside the base.
    RgGeneric(Vec<bool>),
    /// User-supplied extension rule.
    Custom(Arc<dyn AtomRule>),
}

impl TypeAtom {
    pub fn rg_generic_from_bits(bits: &str) -> Option<TypeAtom> {
        let mut v = Vec::with_capacity(bits.len());
        for c in bits.chars() {
            match c {
                '0' => v.push(false),
                '1' => v.push(true),
                _ => return None,
            }
        }
        Some(TypeAtom::RgGeneric(v))
    }

    pub fn is_realized(&self) -> bool {
        matches!(self, TypeAtom::Realized(_))
    }

    pub fn object_arity(&self) -> usize {
        match self {
            TypeAtom::Realized(t) => t.len(),
            TypeAtom::DloCut { .. } | TypeAtom::RgGeneric(_) => 1,
            TypeAtom::Custom(rule) => rule.object_arity(),
        }
    }

    /// Adds a fresh realization of this atom to `ctx` and returns its
    /// elements. Realized atoms realize in place: the original tuple is the
    /// one object guaranteed to satisfy every instance the type decides, so
    /// no fresh element is created for them.
    pub fn realize(&self, ctx: &mut ExtensionContext) -> Result<Vec<usize>, TypeError> {
        let (elements, fresh) = match self {
            TypeAtom::Realized(t) => {
                for &e in t {
                    if e >= ctx.base_size() {
                        return Err(TypeError::TupleOutOfRange(e, ctx.base_size()));
                    }
                }
                (t.clone(), false)
            }
            TypeAtom::DloCut { position, side } => {
                if *position >= ctx.base_size() {
                    return Err(TypeError::CutOutOfRange(*position, ctx.base_size()));
                }
                let e = ctx.insert_order_element(*position, *side)?;
                (vec![e], true)
            }
            TypeAtom::RgGeneric(bits) => {
                if bits.len() != ctx.base_size() {
                    return Err(TypeError::BitstringLength {
                        expected: ctx.base_size(),
                        got: bits.len(),
                    });
                }
                let neighbors: Vec<usize> = bits
                    .iter()
                    .enumerate()
                    .filter_map(|(i, &b)| b.then_some(i))
                    .collect();
                let e = ctx.add_vertex(&neighbors)?;
                (vec![e], true)
            }
            TypeAtom::Custom(rule) => (rule.place(ctx)?, true),
        };
        ctx.log.push(RealizationRecord {
            atom: self.to_string(),
            elements: elements.clone(),
            fresh,
        });
        Ok(elements)
    }

    /// Decides one instance against this atom. Realized atoms evaluate
    /// directly at their tuple; limit atoms realize in a cloned context and
    /// evaluate there. Parameters may reference fresh elements of `ctx`.
    pub fn decide(
        &self,
        ctx: &ExtensionContext,
        pf: &PartitionedFormula,
        params: &[usize],
    ) -> Result<bool, TypeError> {
        match self {
            TypeAtom::Realized(t) => Ok(eval_instance(ctx.structure(), pf, t, params)?),
            _ => {
                let mut scratch = ctx.clone();
                let elements = self.realize(&mut scratch)?;
                Ok(eval_instance(scratch.structure(), pf, &elements, params)?)
            }
        }
    }

    /// Elements standing for this atom inside `ctx`: the original tuple for
    /// realized atoms (no extension), a fresh realization otherwise.
    pub fn representative_in(&self, ctx: &mut ExtensionContext) -> Result<Vec<usize>, TypeError> {
        match self {
            TypeAtom::Realized(t) => Ok(t.clone()),
            _ => self.realize(ctx),
        }
    }

    /// Theory this atom's extension rule needs, if any.
    pub fn required_theory(&self) -> Option<TheoryKind> {
        match self {
            TypeAtom::Realized(_) => None,
            TypeAtom::DloCut { .. } => Some(TheoryKind::Dlo),
            TypeAtom::RgGeneric(_) => Some(TheoryKind::RandomGraph),
            TypeAtom::Custom(_) => None,
        }
    }
}

impl fmt::Display for TypeAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeAtom::Realized(t) => {
                let parts: Vec<String> = t.iter().map(|e| e.to_string()).collect();
                write!(f, "realized {}", parts.join(" "))
            }
            TypeAtom::DloCut { position, side } => {
                write!(f, "dlo-cut {position} {}", side.symbol())
            }
            TypeAtom::RgGeneric(bits) => {
                let s: String = bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
                write!(f, "rg-generic {s}")
            }
            TypeAtom::Custom(rule) => write!(f, "custom {}", rule.name()),
        }
    }
}

impl fmt::Debug for TypeAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TypeAtom({self})")
    }
}

impl PartialEq for TypeAtom {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (TypeAtom::Realized(a), TypeAtom::Realized(b)) => a == b,
            (
                TypeAtom::DloCut {
                    position: p1,
                    side: s1,
                },
                TypeAtom::DloCut {
                    position: p2,
                    side: s2,
                },
            ) => p1 == p2 && s1 == s2,
            (TypeAtom::RgGeneric(a), TypeAtom::RgGeneric(b)) => a == b,
            (TypeAtom::Custom(a), TypeAtom::Custom(b)) => a.name() == b.name(),
            _ => false,
        }
    }
}

impl Eq for TypeAtom {}
