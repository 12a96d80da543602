use super::atom::TypeAtom;
use super::context::{ExtensionContext, TheoryKind, TypeError};
use super::trace::{trace_matrix, TraceMatrix};
use crate::logic::{eval_instance, FiniteStructure, PartitionedFormula, PhiFormula};
use std::collections::BTreeMap;
use std::sync::Arc;

/// The space of formula types over a base structure: finitely many atoms
/// with pairwise distinct traces over the base parameter tuples.
#[derive(Debug, Clone)]
pub struct TypeSpace {
    pub base: Arc<FiniteStructure>,
    pub theory: TheoryKind,
    pub formula: PartitionedFormula,
    pub atoms: Vec<TypeAtom>,
    /// Trace rows are atoms, columns are the base parameter tuples.
    pub trace: TraceMatrix,
}

impl TypeSpace {
    /// Space of the types actually realized in the base: one atom per
    /// distinct trace row, represented by its first object tuple. Also
    /// returns the quotient map from object-tuple index to atom index.
    pub fn realized(
        base: Arc<FiniteStructure>,
        theory: TheoryKind,
        formula: PartitionedFormula,
        param_tuples: Option<Vec<Vec<usize>>>,
    ) -> Result<(TypeSpace, Vec<usize>), TypeError> {
        let rows = base.all_tuples(formula.object_arity());
        let cols = param_tuples.unwrap_or_else(|| base.all_tuples(formula.param_arity()));
        let full = trace_matrix(&base, &formula, rows.clone(), cols.clone())?;
        let (reps, map) = full.distinct_rows();
        let atoms: Vec<TypeAtom> = reps
            .iter()
            .map(|&r| TypeAtom::Realized(rows[r].clone()))
            .collect();
        let bits: Vec<Vec<bool>> = reps.iter().map(|&r| full.row_bits(r)).collect();
        let trace = TraceMatrix::from_rows(
            atoms
                .iter()
                .map(|a| match a {
                    TypeAtom::Realized(t) => t.clone(),
                    _ => unreachable!(),
                })
                .collect(),
            cols,
            bits,
        );
        Ok((
            TypeSpace {
                base,
                theory,
                formula,
                atoms,
                trace,
            },
            map,
        ))
    }

    /// Space spanned by an explicit atom list. Traces are computed through
    /// each atom's decision rule and must be pairwise distinct.
    pub fn from_atoms(
        base: Arc<FiniteStructure>,
        theory: TheoryKind,
        formula: PartitionedFormula,
        atoms: Vec<TypeAtom>,
        param_tuples: Option<Vec<Vec<usize>>>,
    ) -> Result<TypeSpace, TypeError> {
        if atoms.is_empty() {
            return Err(TypeError::EmptySpace);
        }
        let cols = param_tuples.unwrap_or_else(|| base.all_tuples(formula.param_arity()));
        let probe = ExtensionContext::new(&base, theory)?;
        let mut rows: Vec<Vec<bool>> = Vec::with_capacity(atoms.len());
        let mut row_tuples: Vec<Vec<usize>> = Vec::with_capacity(atoms.len());
        for atom in &atoms {
            let mut row = Vec::with_capacity(cols.len());
            match atom {
                TypeAtom::Realized(t) => {
                    for col in &cols {
                        row.push(eval_instance(&base, &formula, t, col)?);
                    }
                    row_tuples.push(t.clone());
                }
                _ => {
                    let mut scratch = probe.clone();
                    let elems = atom.realize(&mut scratch)?;
                    for col in &cols {
                        row.push(eval_instance(scratch.structure(), &formula, &elems, col)?);
                    }
                    row_tuples.push(elems);
                }
            }
            rows.push(row);
        }
        let mut seen: BTreeMap<Vec<bool>, usize> = BTreeMap::new();
        for (i, row) in rows.iter().enumerate() {
            if let Some(&j) = seen.get(row) {
                return Err(TypeError::DuplicateTrace(j, i));
            }
            seen.insert(row.clone(), i);
        }
        let trace = TraceMatrix::from_rows(row_tuples, cols, rows);
        Ok(TypeSpace {
            base,
            theory,
            formula,
            atoms,
            trace,
        })
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn param_tuples(&self) -> &[Vec<usize>] {
        &self.trace.col_tuples
    }

    /// Fresh single-writer context over the base.
    pub fn fresh_context(&self) -> Result<ExtensionContext, TypeError> {
        ExtensionContext::new(&self.base, self.theory)
    }

    fn check_atom(&self, atom: usize) -> Result<(), TypeError> {
        if atom >= self.atoms.len() {
            return Err(TypeError::AtomOutOfRange(atom, self.atoms.len()));
        }
        Ok(())
    }

    /// Column index of a parameter tuple, if it is one of the base columns.
    pub fn column_of(&self, params: &[usize]) -> Option<usize> {
        self.trace.col_tuples.iter().position(|c| c == params)
    }

    /// Decides an instance of the space's own formula at a base column via
    /// the trace, anything else through the atom's decision rule.
    pub fn decide_instance(
        &self,
        atom: usize,
        pf: &PartitionedFormula,
        params: &[usize],
    ) -> Result<bool, TypeError> {
        self.check_atom(atom)?;
        if *pf == self.formula {
            if let Some(c) = self.column_of(params) {
                return Ok(self.trace.get(atom, c));
            }
        }
        let ctx = self.fresh_context()?;
        self.atoms[atom].decide(&ctx, pf, params)
    }

    /// Decides a Boolean combination of instances against one atom.
    pub fn decide_phi(&self, atom: usize, theta: &PhiFormula) -> Result<bool, TypeError> {
        self.check_atom(atom)?;
        theta.decide_with(&mut |pf, params| self.decide_instance(atom, pf, params))
    }

    /// Quotient onto the space over a subset of the parameter columns.
    /// Returns the restricted space and the surjection from old atom index
    /// to new atom index.
    pub fn restrict_to_columns(
        &self,
        cols: &[usize],
    ) -> Result<(TypeSpace, Vec<usize>), TypeError> {
        for &c in cols {
            if c >= self.trace.n_cols() {
                return Err(TypeError::ColumnOutOfRange(c, self.trace.n_cols()));
            }
        }
        let restricted = self.trace.restrict_columns(cols);
        let (reps, map) = restricted.distinct_rows();
        let atoms: Vec<TypeAtom> = reps.iter().map(|&r| self.atoms[r].clone()).collect();
        let rows: Vec<Vec<bool>> = reps.iter().map(|&r| restricted.row_bits(r)).collect();
        let row_tuples: Vec<Vec<usize>> = reps
            .iter()
            .map(|&r| restricted.row_tuples[r].clone())
            .collect();
        let trace = TraceMatrix::from_rows(row_tuples, restricted.col_tuples.clone(), rows);
        Ok((
            TypeSpace {
                base: Arc::clone(&self.base),
                theory: self.theory,
                formula: self.formula.clone(),
                atoms,
                trace,
            },
            map,
        ))
    }

    /// Largest `n <= n_max` such that every atom's trace is matched by some
    /// object tuple of the base; tuples pick coordinates independently, so
    /// one unrealized atom already sinks every `n`. Returns the level and
    /// the unmatched atoms.
    pub fn saturation_level(&self, n_max: usize) -> (usize, Vec<usize>) {
        let rows = self.base.all_tuples(self.formula.object_arity());
        let mut base_rows: Vec<Vec<bool>> = Vec::with_capacity(rows.len());
        for t in &rows {
            let row: Result<Vec<bool>, _> = self
                .trace
                .col_tuples
                .iter()
                .map(|col| eval_instance(&self.base, &self.formula, t, col))
                .collect();
            match row {
                Ok(r) => base_rows.push(r),
                Err(_) => return (0, (0..self.atoms.len()).collect()),
            }
        }
        let missing: Vec<usize> = (0..self.atoms.len())
            .filter(|&a| {
                let row = self.trace.row_bits(a);
                !base_rows.contains(&row)
            })
            .collect();
        if missing.is_empty() {
            (n_max, missing)
        } else {
            (0, missing)
        }
    }
}
