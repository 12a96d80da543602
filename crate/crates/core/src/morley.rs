//! Products of measures through realization in a shared extension context.
//!
//! The product of two measures is evaluated on a bridge formula whose object
//! block belongs to the left factor and whose parameter block belongs to the
//! right factor. For each pair of atoms the right atom is realized first and
//! the left atom after it, so later factors sit deeper in the extension; the
//! pair's contribution is the product of the two weights when the extended
//! structure satisfies the bridge instance.
//!
//! Swapping the factors means evaluating the reversed product on the dual
//! bridge formula; the two values agree exactly for realized averages and
//! can differ for limit atoms, which is what the commutation report and the
//! epsilon-chain ledger measure.

use crate::logic::{
    evaluate, free_variables, EvalError, Formula, ParseError, PartitionedFormula, Signature,
};
use crate::measure::{KeislerMeasure, MeasureError};
use crate::typespace::{ExtensionContext, TheoryKind, TypeAtom, TypeError, TypeSpace};
use crate::weight::Weight;
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MorleyError {
    #[error("factors live over different base structures")]
    BaseMismatch,
    #[error("cannot mix extension theories {0:?} and {1:?}")]
    TheoryClash(TheoryKind, TheoryKind),
    #[error("bridge object block has arity {formula}, left factor has {measure}")]
    ObjectArity { formula: usize, measure: usize },
    #[error("bridge parameter block has arity {formula}, right factor has {measure}")]
    ParamArity { formula: usize, measure: usize },
    #[error("iterated products are capped at 6 factors, got {0}")]
    TooManyFactors(usize),
    #[error("formula has {blocks} blocks, product has {measures} factors")]
    BlockCount { blocks: usize, measures: usize },
    #[error("block {block} has arity {got}, factor expects {expected}")]
    BlockArity {
        block: usize,
        expected: usize,
        got: usize,
    },
    #[error("variable {0} appears in two blocks")]
    DuplicateBlockVariable(String),
    #[error("free variable {0} is not covered by any block")]
    UncoveredVariable(String),
    #[error("atom {0} of the right factor has no realized tuple with the same trace")]
    NoRealizedMatch(usize),
    #[error("denominator cap must be at least 1")]
    ZeroDenominator,
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

fn merged_theory(a: TheoryKind, b: TheoryKind) -> Result<TheoryKind, MorleyError> {
    match (a, b) {
        (x, y) if x == y => Ok(x),
        (TheoryKind::Plain, y) => Ok(y),
        (x, TheoryKind::Plain) => Ok(x),
        (x, y) => Err(MorleyError::TheoryClash(x, y)),
    }
}

fn shared_context(spaces: &[&TypeSpace]) -> Result<ExtensionContext, MorleyError> {
    let first = spaces[0];
    let mut theory = first.theory;
    for s in &spaces[1..] {
        if !Arc::ptr_eq(&first.base, &s.base) && *first.base != *s.base {
            return Err(MorleyError::BaseMismatch);
        }
        theory = merged_theory(theory, s.theory)?;
    }
    Ok(ExtensionContext::new(&first.base, theory)?)
}

fn check_bridge<W: Weight>(
    mu: &KeislerMeasure<W>,
    lam: &KeislerMeasure<W>,
    chi: &PartitionedFormula,
) -> Result<(), MorleyError> {
    let mu_arity = mu.space().formula.object_arity();
    if chi.object_arity() != mu_arity {
        return Err(MorleyError::ObjectArity {
            formula: chi.object_arity(),
            measure: mu_arity,
        });
    }
    let lam_arity = lam.space().formula.object_arity();
    if chi.param_arity() != lam_arity {
        return Err(MorleyError::ParamArity {
            formula: chi.param_arity(),
            measure: lam_arity,
        });
    }
    Ok(())
}

/// Mass the left factor puts on a bridge instance whose parameters already
/// live in an extension context.
fn left_mass_in_context<W: Weight>(
    mu: &KeislerMeasure<W>,
    ctx: &ExtensionContext,
    chi: &PartitionedFormula,
    params: &[usize],
) -> Result<W, MorleyError> {
    let mut total = W::zero();
    for (i, w) in mu.weights().iter().enumerate() {
        if *w > W::zero() && mu.space().atoms[i].decide(ctx, chi, params)? {
            total = total + w.clone();
        }
    }
    Ok(total)
}

/// One fiber: realize the right atom in a fresh copy of the context, then
/// measure the bridge instance it parameterizes.
fn fiber_of<W: Weight>(
    mu: &KeislerMeasure<W>,
    ctx0: &ExtensionContext,
    right_atom: &TypeAtom,
    chi: &PartitionedFormula,
) -> Result<W, MorleyError> {
    let mut ctx = ctx0.clone();
    let d = right_atom.realize(&mut ctx)?;
    left_mass_in_context(mu, &ctx, chi, &d)
}

/// Fiber values of the product, one per atom of the right factor.
pub fn fiber_values<W: Weight>(
    mu: &KeislerMeasure<W>,
    lam: &KeislerMeasure<W>,
    chi: &PartitionedFormula,
) -> Result<Vec<W>, MorleyError> {
    check_bridge(mu, lam, chi)?;
    let ctx0 = shared_context(&[mu.space(), lam.space()])?;
    lam.space()
        .atoms
        .iter()
        .map(|q| fiber_of(mu, &ctx0, q, chi))
        .collect()
}

/// A product value with its fibers and bookkeeping checks.
#[derive(Debug, Clone)]
pub struct ProductEvaluation<W> {
    pub value: W,
    /// `value` equals the weights of the right factor paired with these.
    pub fibers: Vec<W>,
    /// The same sum recomputed with both atom loops reversed; must match.
    pub reversed_value: W,
    pub order_invariant: bool,
    /// Right-factor atoms whose fiber changed when the atom was realized a
    /// second time before measuring; empty means the fiber map is stable
    /// under repeated realization.
    pub fiber_repeat_failures: Vec<usize>,
}

impl<W: Weight> ProductEvaluation<W> {
    pub fn fiber_well_defined(&self) -> bool {
        self.fiber_repeat_failures.is_empty()
    }
}

/// Evaluates the product of two measures on a bridge formula: the right
/// factor integrates the fiber values of the left.
pub fn morley_product<W: Weight>(
    mu: &KeislerMeasure<W>,
    lam: &KeislerMeasure<W>,
    chi: &PartitionedFormula,
) -> Result<ProductEvaluation<W>, MorleyError> {
    check_bridge(mu, lam, chi)?;
    let ctx0 = shared_context(&[mu.space(), lam.space()])?;
    let n = lam.space().atom_count();

    let mut fibers = Vec::with_capacity(n);
    let mut value = W::zero();
    for (q, w) in lam.space().atoms.iter().zip(lam.weights()) {
        let f = fiber_of(mu, &ctx0, q, chi)?;
        value = value + w.clone() * f.clone();
        fibers.push(f);
    }

    let mut reversed_value = W::zero();
    for qi in (0..n).rev() {
        let mut ctx = ctx0.clone();
        let d = lam.space().atoms[qi].realize(&mut ctx)?;
        let mut f = W::zero();
        for pi in (0..mu.space().atom_count()).rev() {
            let w = &mu.weights()[pi];
            if *w > W::zero() && mu.space().atoms[pi].decide(&ctx, chi, &d)? {
                f = f + w.clone();
            }
        }
        reversed_value = reversed_value + lam.weights()[qi].clone() * f;
    }

    let mut fiber_repeat_failures = Vec::new();
    for (qi, q) in lam.space().atoms.iter().enumerate() {
        if q.is_realized() {
            continue;
        }
        let mut ctx = ctx0.clone();
        let _first = q.realize(&mut ctx)?;
        let second = q.realize(&mut ctx)?;
        let repeated = left_mass_in_context(mu, &ctx, chi, &second)?;
        if repeated != fibers[qi] {
            fiber_repeat_failures.push(qi);
        }
    }

    let order_invariant = value == reversed_value;
    Ok(ProductEvaluation {
        value,
        fibers,
        reversed_value,
        order_invariant,
        fiber_repeat_failures,
    })
}

/// Forward product against the reversed product on the dual bridge.
#[derive(Debug, Clone)]
pub struct CommuteReport<W> {
    pub forward: W,
    pub backward: W,
    pub commutes: bool,
    pub forward_eval: ProductEvaluation<W>,
    pub backward_eval: ProductEvaluation<W>,
}

pub fn commutes<W: Weight>(
    mu: &KeislerMeasure<W>,
    lam: &KeislerMeasure<W>,
    chi: &PartitionedFormula,
) -> Result<CommuteReport<W>, MorleyError> {
    let forward_eval = morley_product(mu, lam, chi)?;
    let backward_eval = morley_product(lam, mu, &chi.dual())?;
    Ok(CommuteReport {
        forward: forward_eval.value.clone(),
        backward: backward_eval.value.clone(),
        commutes: forward_eval.value == backward_eval.value,
        forward_eval,
        backward_eval,
    })
}

/// A formula whose free variables are split into one block per product
/// factor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiFormula {
    pub formula: Formula,
    pub blocks: Vec<Vec<String>>,
}

impl MultiFormula {
    pub fn new(formula: Formula, blocks: Vec<Vec<String>>) -> Result<Self, MorleyError> {
        let mut seen = std::collections::BTreeSet::new();
        for block in &blocks {
            for v in block {
                if !seen.insert(v.clone()) {
                    return Err(MorleyError::DuplicateBlockVariable(v.clone()));
                }
            }
        }
        for v in free_variables(&formula) {
            if !seen.contains(&v) {
                return Err(MorleyError::UncoveredVariable(v));
            }
        }
        Ok(MultiFormula { formula, blocks })
    }

    /// Parses the text against the signature with all block variables free.
    pub fn parse(
        signature: &Signature,
        text: &str,
        blocks: &[&[&str]],
    ) -> Result<Self, MorleyError> {
        let all: Vec<&str> = blocks.iter().flat_map(|b| b.iter().copied()).collect();
        let pf = crate::logic::parse_formula(signature, text, &all, &[])?;
        MultiFormula::new(
            pf.formula,
            blocks
                .iter()
                .map(|b| b.iter().map(|v| v.to_string()).collect())
                .collect(),
        )
    }
}

/// An n-fold product value with an independent bracketing recomputation and
/// the values of every factor permutation.
#[derive(Debug, Clone)]
pub struct IteratedReport<W> {
    pub value: W,
    /// Recomputed by nesting: realize the last factor once and recurse on
    /// the rest inside that context.
    pub nested_value: W,
    pub bracketing_agrees: bool,
    /// Values of the permuted products (factors reordered together with
    /// their blocks), labeled by the permutation.
    pub permutation_values: Vec<(Vec<usize>, W)>,
}

fn bind_blocks(
    env: &mut BTreeMap<String, usize>,
    blocks: &[Vec<String>],
    factor: usize,
    elements: &[usize],
) {
    for (v, &e) in blocks[factor].iter().zip(elements) {
        env.insert(v.clone(), e);
    }
}

/// Direct evaluation of the permuted product: enumerate atom choices, and
/// for each choice realize the factors from the permutation's last entry
/// back to its first in one context.
fn permuted_value<W: Weight>(
    measures: &[&KeislerMeasure<W>],
    mf: &MultiFormula,
    order: &[usize],
    ctx0: &ExtensionContext,
) -> Result<W, MorleyError> {
    let n = measures.len();
    let counts: Vec<usize> = measures.iter().map(|m| m.space().atom_count()).collect();
    let mut idx = vec![0usize; n];
    let mut total = W::zero();
    loop {
        let mut weight = W::one();
        for f in 0..n {
            weight = weight * measures[f].weights()[idx[f]].clone();
        }
        if weight > W::zero() {
            let mut ctx = ctx0.clone();
            let mut env = BTreeMap::new();
            for &f in order.iter().rev() {
                let elems = measures[f].space().atoms[idx[f]].realize(&mut ctx)?;
                bind_blocks(&mut env, &mf.blocks, f, &elems);
            }
            if evaluate(ctx.structure(), &mf.formula, &env)? {
                total = total + weight;
            }
        }
        let mut d = n;
        loop {
            if d == 0 {
                return Ok(total);
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < counts[d] {
                break;
            }
            idx[d] = 0;
        }
    }
}

/// Nested evaluation: integrate factor `last` on the outside, realizing its
/// atom once per branch and reusing that context for the whole subtree.
fn nested_value<W: Weight>(
    measures: &[&KeislerMeasure<W>],
    mf: &MultiFormula,
    remaining: &[usize],
    ctx: &ExtensionContext,
    env: &BTreeMap<String, usize>,
) -> Result<W, MorleyError> {
    let Some((&factor, rest)) = remaining.split_last() else {
        return Ok(if evaluate(ctx.structure(), &mf.formula, env)? {
            W::one()
        } else {
            W::zero()
        });
    };
    let m = measures[factor];
    let mut total = W::zero();
    for (ai, w) in m.weights().iter().enumerate() {
        if !w.is_positive_weight() {
            continue;
        }
        let mut branch_ctx = ctx.clone();
        let elems = m.space().atoms[ai].realize(&mut branch_ctx)?;
        let mut branch_env = env.clone();
        bind_blocks(&mut branch_env, &mf.blocks, factor, &elems);
        let inner = nested_value(measures, mf, rest, &branch_ctx, &branch_env)?;
        total = total + w.clone() * inner;
    }
    Ok(total)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut items: Vec<usize> = (0..n).collect();
    fn heap(k: usize, items: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(items.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, items, out);
            if k.is_multiple_of(2) {
                items.swap(i, k - 1);
            } else {
                items.swap(0, k - 1);
            }
        }
    }
    heap(n, &mut items, &mut out);
    out
}

/// Product of up to six factors. The identity-order value is recomputed by
/// nesting as a bookkeeping check, and every permutation of the factors is
/// evaluated (permutations generally disagree when limit atoms are
/// involved).
pub fn iterated_product<W: Weight>(
    measures: &[&KeislerMeasure<W>],
    mf: &MultiFormula,
    with_permutations: bool,
) -> Result<IteratedReport<W>, MorleyError> {
    let n = measures.len();
    if n > 6 {
        return Err(MorleyError::TooManyFactors(n));
    }
    if mf.blocks.len() != n {
        return Err(MorleyError::BlockCount {
            blocks: mf.blocks.len(),
            measures: n,
        });
    }
    for (i, m) in measures.iter().enumerate() {
        let expected = m.space().formula.object_arity();
        if mf.blocks[i].len() != expected {
            return Err(MorleyError::BlockArity {
                block: i,
                expected,
                got: mf.blocks[i].len(),
            });
        }
    }
    let spaces: Vec<&TypeSpace> = measures.iter().map(|m| m.space().as_ref()).collect();
    let ctx0 = shared_context(&spaces)?;

    let identity: Vec<usize> = (0..n).collect();
    let value = permuted_value(measures, mf, &identity, &ctx0)?;
    let nested = nested_value(measures, mf, &identity, &ctx0, &BTreeMap::new())?;

    let mut permutation_values = Vec::new();
    if with_permutations {
        for order in permutations(n) {
            let v = permuted_value(measures, mf, &order, &ctx0)?;
            permutation_values.push((order, v));
        }
    }

    Ok(IteratedReport {
        bracketing_agrees: value == nested,
        nested_value: nested,
        value,
        permutation_values,
    })
}

/// Prefix averages of a realization sequence against a fixed left factor:
/// how fast do the products settle on the full-sequence value?
#[derive(Debug, Clone)]
pub struct ConvergenceTable<W> {
    /// Product value of each prefix average.
    pub prefix_values: Vec<W>,
    /// Product value of the full-sequence average.
    pub limit_value: W,
    /// `|prefix - limit|` per prefix.
    pub distances: Vec<W>,
}

/// Builds the averages `Av(seq[..=i])` on the given space, evaluates each
/// `Av ⊗ mu` on the bridge, and tabulates the distance to the full average.
pub fn average_convergence_check<W: Weight>(
    seq: &[usize],
    space: &Arc<TypeSpace>,
    mu: &KeislerMeasure<W>,
    chi: &PartitionedFormula,
) -> Result<ConvergenceTable<W>, MorleyError> {
    let full = KeislerMeasure::average(Arc::clone(space), seq)?;
    let limit_value = morley_product(&full, mu, chi)?.value;
    let mut prefix_values = Vec::with_capacity(seq.len());
    let mut distances = Vec::with_capacity(seq.len());
    for i in 0..seq.len() {
        let avg = KeislerMeasure::average(Arc::clone(space), &seq[..=i])?;
        let v = morley_product(&avg, mu, chi)?.value;
        distances.push((v.clone() - limit_value.clone()).abs());
        prefix_values.push(v);
    }
    Ok(ConvergenceTable {
        prefix_values,
        limit_value,
        distances,
    })
}

/// One link of the commutation ledger.
#[derive(Debug, Clone)]
pub struct ChainStep<W> {
    pub label: String,
    pub gap: W,
    pub bound: W,
    pub within: bool,
}

/// The five-step ledger bounding `|mu (x) lam (theta) - lam (x) mu (dual)|`.
///
/// Four epsilon links surround one exact middle equality:
/// 1. the product equals the weighted fiber sum (exact),
/// 2. the right factor is replaced by a realized average (within epsilon),
/// 3. the weighted average sum equals the product with the average (exact),
/// 4. the middle products commute because the average is realized (exact,
///    flagged separately), and
/// 5. the average is traded back for the right factor on the dual side
///    (within epsilon).
///
/// The endpoint difference is at most the sum of the four gaps, which the
/// headline bound caps at four epsilon.
#[derive(Debug, Clone)]
pub struct EpsilonChainReport<W> {
    pub steps: Vec<ChainStep<W>>,
    pub middle_gap: W,
    pub middle_exact: bool,
    /// `|forward - backward|`, the quantity the chain bounds.
    pub endpoint_gap: W,
    pub total_error: W,
    pub bound: W,
    pub within: bool,
    /// Realized tuple standing in for each right-factor atom.
    pub tilde_tuples: Vec<Vec<usize>>,
    /// Multiplicity of each tuple in the average.
    pub tilde_counts: Vec<u64>,
    pub tilde_denominator: u64,
    /// True when the average reproduces the right factor's weights exactly.
    pub tilde_exact: bool,
}

/// Largest integer `c` with `c <= value`, for nonnegative weights. Floats
/// give the first guess; exact comparisons settle the boundary.
fn floor_count<W: Weight>(value: &W) -> u64 {
    let mut c = value.to_f64_lossy().floor().max(0.0) as u64;
    while W::from_u64(c + 1).expect("count conversion") <= *value {
        c += 1;
    }
    while c > 0 && W::from_u64(c).expect("count conversion") > *value {
        c -= 1;
    }
    c
}

fn round_to_counts<W: Weight>(weights: &[W], cap: u64) -> (Vec<u64>, u64, bool) {
    // Exact path: the smallest denominator that clears every weight.
    for n in 1..=cap {
        let scale = W::from_u64(n).expect("count conversion");
        let mut counts = Vec::with_capacity(weights.len());
        let mut exact = true;
        for w in weights {
            let scaled = w.clone() * scale.clone();
            let c = floor_count(&scaled);
            if W::from_u64(c).expect("count conversion") == scaled {
                counts.push(c);
            } else {
                exact = false;
                break;
            }
        }
        if exact {
            return (counts, n, true);
        }
    }
    // Largest-remainder rounding at the cap.
    let n = cap;
    let scale = W::from_u64(n).expect("count conversion");
    let mut counts = Vec::with_capacity(weights.len());
    let mut remainders: Vec<(usize, W)> = Vec::with_capacity(weights.len());
    let mut assigned = 0u64;
    for (i, w) in weights.iter().enumerate() {
        let scaled = w.clone() * scale.clone();
        let c = floor_count(&scaled);
        remainders.push((i, scaled - W::from_u64(c).expect("count conversion")));
        counts.push(c);
        assigned += c;
    }
    remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
    let mut deficit = n.saturating_sub(assigned) as usize;
    for (i, _) in remainders {
        if deficit == 0 {
            break;
        }
        counts[i] += 1;
        deficit -= 1;
    }
    (counts, n, false)
}

/// Mass of a bridge instance at realized base parameters under the left
/// factor.
fn bridge_instance_mass<W: Weight>(
    mu: &KeislerMeasure<W>,
    chi: &PartitionedFormula,
    params: &[usize],
) -> Result<W, MorleyError> {
    let mut total = W::zero();
    for (i, w) in mu.weights().iter().enumerate() {
        if *w > W::zero() && mu.space().decide_instance(i, chi, params)? {
            total = total + w.clone();
        }
    }
    Ok(total)
}

/// Runs the five-step ledger. The realized average is built from base
/// tuples whose traces match the right factor's atoms; a missing match is
/// an error because the chain's hypothesis cannot even be stated then.
pub fn epsilon_chain_verify<W: Weight>(
    mu: &KeislerMeasure<W>,
    lam: &KeislerMeasure<W>,
    chi: &PartitionedFormula,
    epsilon: &W,
    denom_cap: u64,
) -> Result<EpsilonChainReport<W>, MorleyError> {
    if denom_cap == 0 {
        return Err(MorleyError::ZeroDenominator);
    }
    check_bridge(mu, lam, chi)?;
    let lam_space = lam.space();
    let base = &lam_space.base;

    // Realized stand-ins with the same trace per right-factor atom.
    let arity = lam_space.formula.object_arity();
    let base_tuples = base.all_tuples(arity);
    let mut base_rows: Vec<Vec<bool>> = Vec::with_capacity(base_tuples.len());
    for t in &base_tuples {
        let row: Result<Vec<bool>, EvalError> = lam_space
            .param_tuples()
            .iter()
            .map(|col| crate::logic::eval_instance(base, &lam_space.formula, t, col))
            .collect();
        base_rows.push(row?);
    }
    let mut tilde_tuples = Vec::with_capacity(lam_space.atom_count());
    let mut tilde_tuple_index = Vec::with_capacity(lam_space.atom_count());
    for a in 0..lam_space.atom_count() {
        let row = lam_space.trace.row_bits(a);
        match base_rows.iter().position(|r| *r == row) {
            Some(i) => {
                tilde_tuples.push(base_tuples[i].clone());
                tilde_tuple_index.push(i);
            }
            None => return Err(MorleyError::NoRealizedMatch(a)),
        }
    }

    let (tilde_counts, denom, tilde_exact) = round_to_counts(lam.weights(), denom_cap);

    // Step 1: product as a weighted fiber sum.
    let forward = morley_product(mu, lam, chi)?;
    let mut fiber_sum = W::zero();
    for (w, f) in lam.weights().iter().zip(&forward.fibers) {
        fiber_sum = fiber_sum + w.clone() * f.clone();
    }
    let gap1 = (forward.value.clone() - fiber_sum.clone()).abs();

    // Step 2: replace the right factor by the realized average.
    let mut tilde_sum = W::zero();
    for (i, t) in tilde_tuples.iter().enumerate() {
        if tilde_counts[i] == 0 {
            continue;
        }
        let coeff = W::from_ratio(tilde_counts[i] as i64, denom as i64);
        tilde_sum = tilde_sum + coeff * bridge_instance_mass(mu, chi, t)?;
    }
    let gap2 = (fiber_sum.clone() - tilde_sum.clone()).abs();

    // Step 3: the weighted sum is itself a product against the average.
    let (tilde_space, quotient) = TypeSpace::realized(
        Arc::clone(base),
        lam_space.theory,
        lam_space.formula.clone(),
        Some(lam_space.param_tuples().to_vec()),
    )?;
    let tilde_space = Arc::new(tilde_space);
    let mut tilde_weights = vec![W::zero(); tilde_space.atom_count()];
    for (i, &ti) in tilde_tuple_index.iter().enumerate() {
        if tilde_counts[i] == 0 {
            continue;
        }
        let atom = quotient[ti];
        tilde_weights[atom] =
            tilde_weights[atom].clone() + W::from_ratio(tilde_counts[i] as i64, denom as i64);
    }
    let lam_tilde = KeislerMeasure::new(Arc::clone(&tilde_space), tilde_weights)?;
    let mid_left = morley_product(mu, &lam_tilde, chi)?.value;
    let gap3 = (tilde_sum.clone() - mid_left.clone()).abs();

    // Middle: products with the realized average commute exactly.
    let dual = chi.dual();
    let mid_right = morley_product(&lam_tilde, mu, &dual)?.value;
    let middle_gap = (mid_left.clone() - mid_right.clone()).abs();
    let middle_exact = middle_gap == W::zero();

    // Step 4: trade the average back for the right factor, dual side.
    let backward = morley_product(lam, mu, &dual)?.value;
    let gap4 = (mid_right.clone() - backward.clone()).abs();

    let zero = W::zero();
    let steps = vec![
        ChainStep {
            label: "product equals weighted fiber sum".to_string(),
            within: gap1 <= zero,
            gap: gap1.clone(),
            bound: zero.clone(),
        },
        ChainStep {
            label: "realized average replaces the right factor".to_string(),
            within: gap2 <= *epsilon,
            gap: gap2.clone(),
            bound: epsilon.clone(),
        },
        ChainStep {
            label: "weighted sum equals product with the average".to_string(),
            within: gap3 <= zero,
            gap: gap3.clone(),
            bound: zero.clone(),
        },
        ChainStep {
            label: "average traded back on the dual side".to_string(),
            within: gap4 <= *epsilon,
            gap: gap4.clone(),
            bound: epsilon.clone(),
        },
    ];
    let total_error = gap1 + gap2 + gap3 + gap4;
    let four = W::from_ratio(4, 1);
    let bound = four * epsilon.clone();
    let within = steps.iter().all(|s| s.within) && middle_exact && total_error <= bound;
    let endpoint_gap = (forward.value - backward).abs();

    Ok(EpsilonChainReport {
        steps,
        middle_gap,
        middle_exact,
        endpoint_gap,
        total_error,
        bound,
        within,
        tilde_tuples,
        tilde_counts,
        tilde_denominator: denom,
        tilde_exact,
    })
}
