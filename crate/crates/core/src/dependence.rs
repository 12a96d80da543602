//! Dependence sets, dependence rank, and shattering numbers of a trace.
//!
//! A tuple of atoms belongs to the k-th dependence set when the columns of
//! the trace realize every 0/1 pattern of length k across the tuple. The
//! mass of that set under the k-fold product measure, divided by the k-th
//! power of the total mass, is the dependence ratio; the first k where the
//! ratio drops below one is the dependence rank.
//!
//! Enumeration always runs over distinct trace rows with multiplicity, so
//! spaces with many duplicate rows stay cheap. Budgets cap the number of
//! enumeration nodes; exceeding one is an error, never a silent truncation.

use crate::measure::KeislerMeasure;
use crate::typespace::{TraceMatrix, TypeSpace};
use crate::weight::{sum_w, Weight};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DependenceError {
    #[error("k must be at least 1")]
    KZero,
    #[error("enumeration needs more than the budget of {budget} nodes")]
    Budget { budget: u64 },
    #[error("column {0} is out of range ({1} columns)")]
    ColumnOutOfRange(usize, usize),
}

/// The k-th dependence set, summarized.
#[derive(Debug, Clone)]
pub struct DkReport<W> {
    pub k: usize,
    /// Product-measure mass of the dependence set.
    pub dk_mass: W,
    /// `dk_mass` normalized by the k-th power of the total mass.
    pub ratio: W,
    /// Number of atom tuples in the set.
    pub tuple_count: u128,
    /// Number of atom tuples overall.
    pub total_tuples: u128,
    /// Up to three member tuples, as atom indices.
    pub witnesses: Vec<Vec<usize>>,
    pub distinct_rows: usize,
    pub column_count: usize,
    /// Set when `2^k` exceeds the number of distinct columns, which forces
    /// the set to be empty without enumeration.
    pub empty_by_column_bound: bool,
    /// Set when a lower level already had mass zero, so this level is zero
    /// by monotonicity and was not enumerated.
    pub zero_by_monotonicity: bool,
    /// Set when all weights are equal and the mass was derived from the
    /// tuple count.
    pub uniform_fast_path: bool,
}

/// Dependence ratios for `k = 1..=k_max` and the first drop below one.
#[derive(Debug, Clone)]
pub struct RankReport<W> {
    pub rank: Option<usize>,
    pub reports: Vec<DkReport<W>>,
    pub k_max: usize,
}

/// Shattering summary of a trace.
#[derive(Debug, Clone)]
pub struct VcReport {
    pub vc_dim: usize,
    /// A shattered atom set of maximum size (empty when `vc_dim` is 0).
    pub witness: Vec<usize>,
    /// Pairs `(n, pi(n))` where `pi` is the maximum number of column
    /// patterns over any n atoms; only levels enumerated within budget.
    pub growth: Vec<(usize, u64)>,
    /// First k whose dependence set must be empty: `vc_dim + 1`.
    pub nip_threshold: usize,
    /// False when a budget forced the greedy fallback, making `vc_dim` a
    /// lower bound rather than an exact value.
    pub exhaustive: bool,
    pub distinct_columns: usize,
    pub distinct_rows: usize,
}

/// Atoms shattered by the columns, with one column per pattern. Bit `i` of
/// the pattern index gives the trace value at `atoms[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IpWitness {
    pub atoms: Vec<usize>,
    pub pattern_columns: Vec<usize>,
}

fn resolve_columns(
    trace: &TraceMatrix,
    columns: Option<&[usize]>,
) -> Result<Vec<usize>, DependenceError> {
    match columns {
        None => Ok((0..trace.n_cols()).collect()),
        Some(cols) => {
            for &c in cols {
                if c >= trace.n_cols() {
                    return Err(DependenceError::ColumnOutOfRange(c, trace.n_cols()));
                }
            }
            Ok(cols.to_vec())
        }
    }
}

/// Rows packed over the selected columns, with the partial-word mask.
struct Packed {
    rows: Vec<Vec<u64>>,
    mask: Vec<u64>,
    n_cols: usize,
}

fn pack(trace: &TraceMatrix, cols: &[usize]) -> Packed {
    let rows = trace.packed_rows(cols);
    let words = cols.len().div_ceil(64).max(1);
    let mut mask = vec![0u64; words];
    for c in 0..cols.len() {
        mask[c / 64] |= 1 << (c % 64);
    }
    Packed {
        rows,
        mask,
        n_cols: cols.len(),
    }
}

/// Distinct packed rows with their atom classes, in first-occurrence order.
struct RowClasses {
    rows: Vec<Vec<u64>>,
    members: Vec<Vec<usize>>,
}

fn group_rows(packed: &[Vec<u64>]) -> RowClasses {
    let mut index: std::collections::BTreeMap<Vec<u64>, usize> = std::collections::BTreeMap::new();
    let mut rows: Vec<Vec<u64>> = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for (atom, row) in packed.iter().enumerate() {
        match index.get(row) {
            Some(&i) => members[i].push(atom),
            None => {
                index.insert(row.clone(), rows.len());
                rows.push(row.clone());
                members.push(vec![atom]);
            }
        }
    }
    RowClasses { rows, members }
}

/// Column bitsets over the given rows, deduplicated.
fn distinct_columns_over_rows(rows: &[Vec<u64>], n_cols: usize) -> Vec<Vec<u64>> {
    let words = rows.len().div_ceil(64).max(1);
    let mut seen: std::collections::BTreeSet<Vec<u64>> = std::collections::BTreeSet::new();
    for c in 0..n_cols {
        let mut col = vec![0u64; words];
        for (r, row) in rows.iter().enumerate() {
            if row[c / 64] >> (c % 64) & 1 == 1 {
                col[r / 64] |= 1 << (r % 64);
            }
        }
        seen.insert(col);
    }
    seen.into_iter().collect()
}

fn w_from_u128<W: Weight>(n: u128) -> W {
    if let Some(w) = W::from_u128(n) {
        return w;
    }
    let two64 = W::from_u64(u64::MAX).expect("u64 conversion") + W::one();
    W::from_u64((n >> 64) as u64).expect("u64 conversion") * two64
        + W::from_u64(n as u64).expect("u64 conversion")
}

fn pow_w<W: Weight>(w: &W, k: usize) -> W {
    let mut acc = W::one();
    for _ in 0..k {
        acc = acc * w.clone();
    }
    acc
}

/// Accumulates members of the dependence set over distinct-row classes.
struct DkAccumulator<'a, W: Weight> {
    classes: &'a RowClasses,
    class_mass: &'a [W],
    tuple_count: u128,
    mass: W,
    witnesses: Vec<Vec<usize>>,
    track_mass: bool,
}

impl<W: Weight> DkAccumulator<'_, W> {
    fn admit(&mut self, chosen: &[usize]) {
        let mut count: u128 = 1;
        for &c in chosen {
            count *= self.classes.members[c].len() as u128;
        }
        self.tuple_count += count;
        if self.track_mass && chosen.iter().all(|&c| !self.class_mass[c].is_zero()) {
            let mut m = W::one();
            for &c in chosen {
                m = m * self.class_mass[c].clone();
            }
            self.mass = self.mass.clone() + m;
        }
        if self.witnesses.len() < 3 {
            self.witnesses
                .push(chosen.iter().map(|&c| self.classes.members[c][0]).collect());
        }
    }
}

/// A row qualifies alone when it shows both bit values on the masked
/// columns.
fn row_is_mixed(row: &[u64], mask: &[u64]) -> bool {
    let mut any_one = false;
    let mut any_zero = false;
    for (&r, &m) in row.iter().zip(mask) {
        any_one |= r & m != 0;
        any_zero |= !r & m != 0;
    }
    any_one && any_zero
}

/// A pair qualifies when the columns show all four joint patterns.
fn pair_qualifies(p: &[u64], q: &[u64], mask: &[u64]) -> bool {
    let mut p11 = false;
    let mut p10 = false;
    let mut p01 = false;
    let mut p00 = false;
    for ((&a, &b), &m) in p.iter().zip(q).zip(mask) {
        p11 |= a & b & m != 0;
        p10 |= a & !b & m != 0;
        p01 |= !a & b & m != 0;
        p00 |= !a & !b & m != 0;
    }
    p11 && p10 && p01 && p00
}

/// Depth-first walk for k of three or more. The columns are partitioned by
/// the pattern shown so far; a prefix missing one of its `2^depth` patterns
/// cannot be completed and is pruned.
fn dk_walk<W: Weight>(
    acc: &mut DkAccumulator<'_, W>,
    k: usize,
    buckets: &[Vec<u64>],
    chosen: &mut Vec<usize>,
    nodes_left: &mut u64,
) -> Result<(), ()> {
    if chosen.len() == k {
        acc.admit(chosen);
        return Ok(());
    }
    let n_classes = acc.classes.rows.len();
    for ci in 0..n_classes {
        if *nodes_left == 0 {
            return Err(());
        }
        *nodes_left -= 1;
        let row = &acc.classes.rows[ci];
        let mut next = Vec::with_capacity(buckets.len() * 2);
        let mut alive = true;
        for bucket in buckets {
            let mut ones = vec![0u64; bucket.len()];
            let mut zeros = vec![0u64; bucket.len()];
            let mut any_one = false;
            let mut any_zero = false;
            for (w, (&b, &r)) in bucket.iter().zip(row.iter()).enumerate() {
                ones[w] = b & r;
                zeros[w] = b & !r;
                any_one |= ones[w] != 0;
                any_zero |= zeros[w] != 0;
            }
            if !any_one || !any_zero {
                alive = false;
                break;
            }
            next.push(zeros);
            next.push(ones);
        }
        if alive {
            chosen.push(ci);
            dk_walk(acc, k, &next, chosen, nodes_left)?;
            chosen.pop();
        }
    }
    Ok(())
}

/// Summarizes the k-th dependence set of a measure's type space, using the
/// selected trace columns (all of them by default).
pub fn dk_report<W: Weight>(
    mu: &KeislerMeasure<W>,
    k: usize,
    columns: Option<&[usize]>,
    budget: u64,
) -> Result<DkReport<W>, DependenceError> {
    if k == 0 {
        return Err(DependenceError::KZero);
    }
    let space = mu.space();
    let cols = resolve_columns(&space.trace, columns)?;
    let packed = pack(&space.trace, &cols);
    let classes = group_rows(&packed.rows);
    let n_atoms = space.atom_count();
    let total_mass = sum_w(mu.weights().iter().cloned());
    let distinct_cols = distinct_columns_over_rows(&packed.rows, packed.n_cols).len();
    let uniform = mu.weights().windows(2).all(|w| w[0] == w[1]);

    let mut report = DkReport {
        k,
        dk_mass: W::zero(),
        ratio: W::zero(),
        tuple_count: 0,
        total_tuples: (n_atoms as u128).pow(k as u32),
        witnesses: Vec::new(),
        distinct_rows: classes.rows.len(),
        column_count: cols.len(),
        empty_by_column_bound: false,
        zero_by_monotonicity: false,
        uniform_fast_path: uniform,
    };

    if k >= 64 || (1u128 << k) > distinct_cols as u128 {
        report.empty_by_column_bound = true;
        return Ok(report);
    }

    let class_mass: Vec<W> = classes
        .members
        .iter()
        .map(|m| sum_w(m.iter().map(|&a| mu.weights()[a].clone())))
        .collect();
    let mut acc = DkAccumulator {
        classes: &classes,
        class_mass: &class_mass,
        tuple_count: 0,
        mass: W::zero(),
        witnesses: Vec::new(),
        track_mass: !uniform,
    };
    let dr = classes.rows.len() as u128;
    match k {
        1 => {
            if dr > budget as u128 {
                return Err(DependenceError::Budget { budget });
            }
            for ci in 0..classes.rows.len() {
                if row_is_mixed(&classes.rows[ci], &packed.mask) {
                    acc.admit(&[ci]);
                }
            }
        }
        2 => {
            if dr * dr > budget as u128 {
                return Err(DependenceError::Budget { budget });
            }
            for ci in 0..classes.rows.len() {
                for cj in 0..classes.rows.len() {
                    if pair_qualifies(&classes.rows[ci], &classes.rows[cj], &packed.mask) {
                        acc.admit(&[ci, cj]);
                    }
                }
            }
        }
        _ => {
            let mut nodes_left = budget;
            dk_walk(
                &mut acc,
                k,
                std::slice::from_ref(&packed.mask),
                &mut Vec::new(),
                &mut nodes_left,
            )
            .map_err(|()| DependenceError::Budget { budget })?;
        }
    }

    report.tuple_count = acc.tuple_count;
    report.witnesses = acc.witnesses;
    report.dk_mass = if uniform {
        if n_atoms == 0 {
            W::zero()
        } else {
            w_from_u128::<W>(acc.tuple_count) * pow_w(&mu.weights()[0], k)
        }
    } else {
        acc.mass
    };
    report.ratio = report.dk_mass.clone() / pow_w(&total_mass, k);
    Ok(report)
}

/// Lists the atom tuples of the k-th dependence set explicitly. Meant for
/// small spaces; the budget caps the tuples scanned.
pub fn dk_tuples(
    space: &TypeSpace,
    k: usize,
    columns: Option<&[usize]>,
    budget: u64,
) -> Result<Vec<Vec<usize>>, DependenceError> {
    if k == 0 {
        return Err(DependenceError::KZero);
    }
    let cols = resolve_columns(&space.trace, columns)?;
    let packed = pack(&space.trace, &cols);
    let n = space.atom_count();
    let mut out = Vec::new();
    if n == 0 {
        return Ok(out);
    }
    let mut scanned: u64 = 0;
    let mut idx = vec![0usize; k];
    loop {
        if scanned == budget {
            return Err(DependenceError::Budget { budget });
        }
        scanned += 1;
        if tuple_in_dk(&packed, &idx) {
            out.push(idx.clone());
        }
        let mut d = k;
        loop {
            if d == 0 {
                return Ok(out);
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < n {
                break;
            }
            idx[d] = 0;
        }
    }
}

/// Direct membership check: do the columns realize all `2^k` patterns
/// across the tuple's rows?
fn tuple_in_dk(packed: &Packed, tuple: &[usize]) -> bool {
    let k = tuple.len();
    if k >= 32 || packed.n_cols < (1usize << k) {
        return false;
    }
    let mut seen = vec![false; 1 << k];
    let mut remaining = 1usize << k;
    for c in 0..packed.n_cols {
        let mut pattern = 0usize;
        for (i, &row) in tuple.iter().enumerate() {
            if packed.rows[row][c / 64] >> (c % 64) & 1 == 1 {
                pattern |= 1 << i;
            }
        }
        if !seen[pattern] {
            seen[pattern] = true;
            remaining -= 1;
            if remaining == 0 {
                return true;
            }
        }
    }
    false
}

/// Ratios for `k = 1..=k_max` and the first k whose ratio is below one.
/// Once a level has mass zero the higher levels are zero by monotonicity
/// and are reported without enumeration.
pub fn dependence_rank<W: Weight>(
    mu: &KeislerMeasure<W>,
    k_max: usize,
    columns: Option<&[usize]>,
    budget: u64,
) -> Result<RankReport<W>, DependenceError> {
    let mut reports = Vec::new();
    let mut rank = None;
    let mut hit_zero = false;
    for k in 1..=k_max {
        let report = if hit_zero {
            dk_zero_report(mu, k, columns)?
        } else {
            dk_report(mu, k, columns, budget)?
        };
        if rank.is_none() && report.ratio < W::one() {
            rank = Some(k);
        }
        hit_zero = hit_zero || report.dk_mass == W::zero();
        reports.push(report);
    }
    Ok(RankReport {
        rank,
        reports,
        k_max,
    })
}

fn dk_zero_report<W: Weight>(
    mu: &KeislerMeasure<W>,
    k: usize,
    columns: Option<&[usize]>,
) -> Result<DkReport<W>, DependenceError> {
    let space = mu.space();
    let cols = resolve_columns(&space.trace, columns)?;
    let packed = pack(&space.trace, &cols);
    let classes = group_rows(&packed.rows);
    let distinct_cols = distinct_columns_over_rows(&packed.rows, packed.n_cols).len();
    Ok(DkReport {
        k,
        dk_mass: W::zero(),
        ratio: W::zero(),
        tuple_count: 0,
        total_tuples: (space.atom_count() as u128).pow(k as u32),
        witnesses: Vec::new(),
        distinct_rows: classes.rows.len(),
        column_count: cols.len(),
        empty_by_column_bound: k >= 64 || (1u128 << k) > distinct_cols as u128,
        zero_by_monotonicity: true,
        uniform_fast_path: false,
    })
}

/// Number of distinct column patterns over the chosen rows, stopping early
/// at `2^n`.
fn pattern_count(cols: &[Vec<u64>], subset: &[usize]) -> u64 {
    let n = subset.len();
    let full = 1u64 << n;
    let mut seen = vec![false; 1 << n];
    let mut count = 0u64;
    for col in cols {
        let mut pattern = 0usize;
        for (i, &r) in subset.iter().enumerate() {
            if col[r / 64] >> (r % 64) & 1 == 1 {
                pattern |= 1 << i;
            }
        }
        if !seen[pattern] {
            seen[pattern] = true;
            count += 1;
            if count == full {
                break;
            }
        }
    }
    count
}

fn is_shattered(cols: &[Vec<u64>], subset: &[usize]) -> bool {
    pattern_count(cols, subset) == 1u64 << subset.len()
}

fn combinations(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Visits every size-k index subset of `0..n` until `f` accepts one, and
/// returns the accepted subset.
fn first_subset(n: usize, k: usize, mut f: impl FnMut(&[usize]) -> bool) -> Option<Vec<usize>> {
    if k > n {
        return None;
    }
    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        if f(&subset) {
            return Some(subset);
        }
        let mut i = k;
        loop {
            if i == 0 {
                return None;
            }
            i -= 1;
            if subset[i] < n - k + i {
                subset[i] += 1;
                for j in i + 1..k {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Shattering dimension of the trace columns over atom sets, with the
/// growth function at each fully enumerated level. When a level's subset
/// count exceeds the budget the search falls back to a greedy lower bound
/// and clears the `exhaustive` flag.
pub fn vc_dimension(
    trace: &TraceMatrix,
    columns: Option<&[usize]>,
    budget: u64,
) -> Result<VcReport, DependenceError> {
    let cols_idx = resolve_columns(trace, columns)?;
    let packed = pack(trace, &cols_idx);
    let classes = group_rows(&packed.rows);
    let dr = classes.rows.len();
    let cols = distinct_columns_over_rows(&classes.rows, packed.n_cols);
    let dc = cols.len();

    let mut upper = 0usize;
    while upper < 60 && (1usize << (upper + 1)) <= dc {
        upper += 1;
    }
    let upper = upper.min(dr);

    let mut exhaustive = true;
    let mut found: Option<Vec<usize>> = None;
    let mut n = upper;
    while n > 0 {
        if combinations(dr, n) > budget as u128 {
            exhaustive = false;
            n -= 1;
            continue;
        }
        if let Some(subset) = first_subset(dr, n, |s| is_shattered(&cols, s)) {
            found = Some(subset);
            break;
        }
        n -= 1;
    }

    let mut witness_classes = found.unwrap_or_default();
    if !exhaustive {
        // The greedy pass can only improve the lower bound.
        let mut greedy: Vec<usize> = Vec::new();
        for r in 0..dr {
            if greedy.len() >= upper {
                break;
            }
            greedy.push(r);
            if !is_shattered(&cols, &greedy) {
                greedy.pop();
            }
        }
        if greedy.len() > witness_classes.len() {
            witness_classes = greedy;
        }
    }

    let vc_dim = witness_classes.len();
    let mut growth: Vec<(usize, u64)> = vec![(0, 1)];
    for level in 1..=(vc_dim + 1).min(dr) {
        if combinations(dr, level) > budget as u128 {
            continue;
        }
        let mut best = 0u64;
        first_subset(dr, level, |s| {
            best = best.max(pattern_count(&cols, s));
            false
        });
        growth.push((level, best));
    }

    Ok(VcReport {
        vc_dim,
        witness: witness_classes
            .into_iter()
            .map(|c| classes.members[c][0])
            .collect(),
        growth,
        nip_threshold: vc_dim + 1,
        exhaustive,
        distinct_columns: dc,
        distinct_rows: dr,
    })
}

pub fn vc_of_space(
    space: &TypeSpace,
    columns: Option<&[usize]>,
    budget: u64,
) -> Result<VcReport, DependenceError> {
    vc_dimension(&space.trace, columns, budget)
}

/// Searches for k atoms shattered by the columns and names one column per
/// pattern. Returns `Ok(None)` when no such set exists.
pub fn ip_witness(
    trace: &TraceMatrix,
    k: usize,
    columns: Option<&[usize]>,
    budget: u64,
) -> Result<Option<IpWitness>, DependenceError> {
    if k == 0 {
        return Err(DependenceError::KZero);
    }
    let cols_idx = resolve_columns(trace, columns)?;
    let packed = pack(trace, &cols_idx);
    let classes = group_rows(&packed.rows);
    let dr = classes.rows.len();
    if combinations(dr, k) > budget as u128 {
        return Err(DependenceError::Budget { budget });
    }
    let cols_bits = distinct_columns_over_rows(&classes.rows, packed.n_cols);
    let hit = first_subset(dr, k, |s| is_shattered(&cols_bits, s));
    Ok(hit.map(|subset| {
        let atoms: Vec<usize> = subset.iter().map(|&c| classes.members[c][0]).collect();
        let mut pattern_columns = vec![usize::MAX; 1 << k];
        let mut remaining = 1usize << k;
        for &c in &cols_idx {
            let mut pattern = 0usize;
            for (i, &atom) in atoms.iter().enumerate() {
                if trace.get(atom, c) {
                    pattern |= 1 << i;
                }
            }
            if pattern_columns[pattern] == usize::MAX {
                pattern_columns[pattern] = c;
                remaining -= 1;
                if remaining == 0 {
                    break;
                }
            }
        }
        debug_assert_eq!(remaining, 0);
        IpWitness {
            atoms,
            pattern_columns,
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{parse_formula, FiniteStructure};
    use crate::typespace::TheoryKind;
    use crate::Rat;
    use std::sync::Arc;

    fn l4_measure() -> KeislerMeasure<Rat> {
        let base = Arc::new(FiniteStructure::linear_order(4));
        let pf = parse_formula(&base.signature, "x < y", &["x"], &["y"]).unwrap();
        let (space, _) = TypeSpace::realized(base, TheoryKind::Dlo, pf, None).unwrap();
        KeislerMeasure::uniform(Arc::new(space)).unwrap()
    }

    #[test]
    fn order_ratios_drop_to_zero_at_two() {
        let mu = l4_measure();
        let r1 = dk_report(&mu, 1, None, 1 << 20).unwrap();
        assert_eq!(r1.ratio, crate::rat(3, 4));
        assert_eq!(r1.tuple_count, 3);
        let r2 = dk_report(&mu, 2, None, 1 << 20).unwrap();
        assert_eq!(r2.ratio, crate::rat(0, 1));
        let r3 = dk_report(&mu, 3, None, 1 << 20).unwrap();
        assert_eq!(r3.ratio, crate::rat(0, 1));
        assert!(r3.empty_by_column_bound);
    }

    #[test]
    fn order_rank_is_one() {
        let mu = l4_measure();
        let rank = dependence_rank(&mu, 3, None, 1 << 20).unwrap();
        assert_eq!(rank.rank, Some(1));
        assert_eq!(rank.reports.len(), 3);
        assert!(rank.reports[2].zero_by_monotonicity);
    }

    #[test]
    fn order_vc_is_one_with_nested_columns() {
        let mu = l4_measure();
        let report = vc_of_space(mu.space(), None, 1 << 20).unwrap();
        assert_eq!(report.vc_dim, 1);
        assert_eq!(report.nip_threshold, 2);
        assert!(report.exhaustive);
        assert_eq!(report.distinct_columns, 4);
        // Growth: 2 patterns on one atom, only 3 of 4 on any pair.
        assert!(report.growth.contains(&(1, 2)));
        assert!(report.growth.contains(&(2, 3)));
    }

    #[test]
    fn explicit_dependence_set_matches_report() {
        let mu = l4_measure();
        let tuples = dk_tuples(mu.space(), 1, None, 1 << 20).unwrap();
        assert_eq!(tuples, vec![vec![0], vec![1], vec![2]]);
        let report = dk_report(&mu, 1, None, 1 << 20).unwrap();
        assert_eq!(report.tuple_count as usize, tuples.len());
        assert_eq!(report.witnesses, tuples);
    }

    #[test]
    fn triangle_pairs_depend_at_two() {
        // Triangle adjacency: rows 011, 101, 110. Every atom alone sees
        // both bits, but only three distinct columns exist, so no pair can
        // show all four patterns.
        let base = Arc::new(FiniteStructure::graph(3, &[(0, 1), (0, 2), (1, 2)]));
        let pf = parse_formula(&base.signature, "E(x, y)", &["x"], &["y"]).unwrap();
        let (space, _) = TypeSpace::realized(base, TheoryKind::RandomGraph, pf, None).unwrap();
        let mu = KeislerMeasure::<Rat>::uniform(Arc::new(space)).unwrap();
        let r1 = dk_report(&mu, 1, None, 1 << 20).unwrap();
        assert_eq!(r1.ratio, crate::rat(1, 1));
        let r2 = dk_report(&mu, 2, None, 1 << 20).unwrap();
        assert_eq!(r2.ratio, crate::rat(0, 1));
        let rank = dependence_rank(&mu, 3, None, 1 << 20).unwrap();
        assert_eq!(rank.rank, Some(2));
    }

    #[test]
    fn budget_errors_instead_of_truncating() {
        let mu = l4_measure();
        assert!(matches!(
            dk_report(&mu, 2, None, 2),
            Err(DependenceError::Budget { .. })
        ));
        assert!(matches!(
            dk_tuples(mu.space(), 2, None, 3),
            Err(DependenceError::Budget { .. })
        ));
    }

    #[test]
    fn column_subsets_shrink_the_set() {
        let mu = l4_measure();
        // Only column 0 (x < 0, all zero): no atom sees both bits.
        let r = dk_report(&mu, 1, Some(&[0]), 1 << 20).unwrap();
        assert_eq!(r.ratio, crate::rat(0, 1));
        assert!(matches!(
            dk_report(&mu, 1, Some(&[7]), 1 << 20),
            Err(DependenceError::ColumnOutOfRange(7, 4))
        ));
    }

    #[test]
    fn shattering_witness_names_columns_per_pattern() {
        let mu = l4_measure();
        let w = ip_witness(&mu.space().trace, 1, None, 1 << 20)
            .unwrap()
            .unwrap();
        assert_eq!(w.atoms.len(), 1);
        let atom = w.atoms[0];
        assert!(!mu.space().trace.get(atom, w.pattern_columns[0]));
        assert!(mu.space().trace.get(atom, w.pattern_columns[1]));
        assert!(ip_witness(&mu.space().trace, 2, None, 1 << 20)
            .unwrap()
            .is_none());
    }

    #[test]
    fn nonuniform_masses_weight_the_tuples() {
        let base = Arc::new(FiniteStructure::linear_order(4));
        let pf = parse_formula(&base.signature, "x < y", &["x"], &["y"]).unwrap();
        let (space, _) = TypeSpace::realized(base, TheoryKind::Dlo, pf, None).unwrap();
        let mu = KeislerMeasure::new(
            Arc::new(space),
            vec![
                crate::rat(1, 2),
                crate::rat(1, 4),
                crate::rat(1, 8),
                crate::rat(1, 8),
            ],
        )
        .unwrap();
        // The singleton dependence set is {0, 1, 2}.
        let r = dk_report(&mu, 1, None, 1 << 20).unwrap();
        assert!(!r.uniform_fast_path);
        assert_eq!(r.dk_mass, crate::rat(7, 8));
    }

    #[test]
    fn bernoulli_pair_ratio_matches_inclusion_exclusion() {
        // All 16 edge patterns toward 4 fixed vertices, uniform: the pair
        // ratio is the chance that two independent uniform rows of length 4
        // show all four joint patterns, which is 4!/4^4.
        let base = Arc::new(FiniteStructure::graph(4, &[]));
        let pf = parse_formula(&base.signature, "E(x, y)", &["x"], &["y"]).unwrap();
        let atoms: Vec<crate::typespace::TypeAtom> = (0..16u32)
            .map(|bits| {
                crate::typespace::TypeAtom::RgGeneric((0..4).map(|i| bits >> i & 1 == 1).collect())
            })
            .collect();
        let space = TypeSpace::from_atoms(base, TheoryKind::RandomGraph, pf, atoms, None).unwrap();
        let mu = KeislerMeasure::<Rat>::uniform(Arc::new(space)).unwrap();
        let r2 = dk_report(&mu, 2, None, 1 << 24).unwrap();
        let mut expected = crate::rat(0, 1);
        for j in 0..=4i64 {
            let c = [1i64, 4, 6, 4, 1][j as usize];
            let sign = if j % 2 == 0 { 1 } else { -1 };
            let mut term = crate::rat(sign * c, 1);
            for _ in 0..4 {
                term *= crate::rat(4 - j, 4);
            }
            expected += term;
        }
        assert_eq!(expected, crate::rat(24, 256));
        assert_eq!(r2.ratio, expected);
        assert!(r2.uniform_fast_path);
        let vc = vc_of_space(mu.space(), None, 1 << 20).unwrap();
        assert_eq!(vc.vc_dim, 2);
    }

    #[test]
    fn three_way_walk_agrees_with_direct_enumeration() {
        // Sixteen neighborhoods toward 8 fixed vertices, including the
        // classic shattering triple 00001111, 00110011, 01010101. The
        // pruned walk and the explicit tuple scan must count the same
        // triples.
        let base = Arc::new(FiniteStructure::graph(8, &[]));
        let pf = parse_formula(&base.signature, "E(x, y)", &["x"], &["y"]).unwrap();
        let picks: [u32; 16] = [
            0, 15, 51, 85, 102, 153, 170, 204, 240, 255, 1, 2, 4, 8, 37, 73,
        ];
        let atoms: Vec<crate::typespace::TypeAtom> = picks
            .iter()
            .map(|&bits| {
                crate::typespace::TypeAtom::RgGeneric((0..8).map(|i| bits >> i & 1 == 1).collect())
            })
            .collect();
        let space = TypeSpace::from_atoms(base, TheoryKind::RandomGraph, pf, atoms, None).unwrap();
        let space = Arc::new(space);
        let mu = KeislerMeasure::<Rat>::uniform(Arc::clone(&space)).unwrap();
        let r3 = dk_report(&mu, 3, None, 1 << 24).unwrap();
        let explicit = dk_tuples(&space, 3, None, 1 << 24).unwrap();
        assert!(r3.tuple_count > 0);
        assert_eq!(r3.tuple_count as usize, explicit.len());
        assert_eq!(r3.ratio, crate::rat(explicit.len() as i64, 16 * 16 * 16));
        let all_cols: Vec<usize> = (0..8).collect();
        let packed = pack(&space.trace, &all_cols);
        for t in &explicit {
            assert!(tuple_in_dk(&packed, t));
        }
        let vc = vc_of_space(&space, None, 1 << 20).unwrap();
        assert_eq!(vc.vc_dim, 3);
    }
}
