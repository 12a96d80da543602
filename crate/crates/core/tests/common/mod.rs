//! Oracles for the integration suites. Everything here is deliberately
//! naive direct enumeration, no bit packing, no row grouping, no pruning,
//! so the oracles share no code path with the library internals they check.

#![allow(dead_code)]

use keisler_core::typespace::TraceMatrix;
use keisler_core::{rat, Rat};
use num_traits::{One, Zero};

/// Mass and ordered-tuple count of the k-th dependence set, by scanning
/// every atom tuple and every column pattern explicitly.
pub fn naive_dk(trace: &TraceMatrix, weights: &[Rat], k: usize) -> (Rat, u128) {
    let n = trace.n_rows();
    assert_eq!(n, weights.len());
    let mut mass = Rat::zero();
    let mut count: u128 = 0;
    if n == 0 {
        return (mass, count);
    }
    let mut tuple = vec![0usize; k];
    loop {
        if tuple_realizes_all_patterns(trace, &tuple) {
            count += 1;
            let mut w = Rat::one();
            for &a in &tuple {
                w *= weights[a].clone();
            }
            mass += w;
        }
        let mut d = k;
        loop {
            if d == 0 {
                return (mass, count);
            }
            d -= 1;
            tuple[d] += 1;
            if tuple[d] < n {
                break;
            }
            tuple[d] = 0;
        }
    }
}

fn tuple_realizes_all_patterns(trace: &TraceMatrix, tuple: &[usize]) -> bool {
    let k = tuple.len();
    let want = 1usize << k;
    let mut seen = vec![false; want];
    let mut found = 0usize;
    for c in 0..trace.n_cols() {
        let mut pattern = 0usize;
        for (i, &row) in tuple.iter().enumerate() {
            if trace.get(row, c) {
                pattern |= 1 << i;
            }
        }
        if !seen[pattern] {
            seen[pattern] = true;
            found += 1;
            if found == want {
                return true;
            }
        }
    }
    false
}

/// VC dimension by checking every subset of atoms for shattering.
pub fn brute_vc(trace: &TraceMatrix) -> usize {
    let n = trace.n_rows();
    assert!(
        n <= 20,
        "brute-force shattering is exponential in the atoms"
    );
    let mut best = 0usize;
    for mask in 0u32..(1u32 << n) {
        let atoms: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        if atoms.len() > best && subset_is_shattered(trace, &atoms) {
            best = atoms.len();
        }
    }
    best
}

fn subset_is_shattered(trace: &TraceMatrix, atoms: &[usize]) -> bool {
    let want = 1usize << atoms.len();
    if trace.n_cols() < want {
        return false;
    }
    let mut seen = vec![false; want];
    let mut found = 0usize;
    for c in 0..trace.n_cols() {
        let mut pattern = 0usize;
        for (i, &row) in atoms.iter().enumerate() {
            if trace.get(row, c) {
                pattern |= 1 << i;
            }
        }
        if !seen[pattern] {
            seen[pattern] = true;
            found += 1;
            if found == want {
                return true;
            }
        }
    }
    false
}

/// Fraction of ordered pattern pairs over the m-dimensional Bernoulli cube
/// whose two neighbourhood sets split the m vertices four ways, counted
/// pair by pair over all `4^m` combinations.
pub fn cube_rho2_by_pair_count(m: u32) -> Rat {
    assert!(m <= 13, "pair counting is quadratic in the pattern count");
    let n: u64 = 1 << m;
    let full: u64 = n - 1;
    let mut hits: u64 = 0;
    for a in 0..n {
        for b in 0..n {
            let both = a & b;
            let only_a = a & !b;
            let only_b = !a & b;
            let neither = !a & !b & full;
            if both != 0 && only_a != 0 && only_b != 0 && neither != 0 {
                hits += 1;
            }
        }
    }
    rat(hits as i64, 1) / rat((n * n) as i64, 1)
}

/// The same fraction through the inclusion-exclusion sum
/// `sum_j (-1)^j C(4, j) ((4 - j) / 4)^m`.
pub fn cube_rho2_inclusion_exclusion(m: u32) -> Rat {
    let binom = [1i64, 4, 6, 4, 1];
    let mut total = Rat::zero();
    for (j, &b) in binom.iter().enumerate() {
        let mut term = Rat::one();
        let base = rat(4 - j as i64, 4);
        for _ in 0..m {
            term *= base.clone();
        }
        let signed = if j % 2 == 0 { term } else { -term };
        total += rat(b, 1) * signed;
    }
    total
}

/// Hoeffding-style scale for the supremum deviation over `events` events
/// after `n` draws: `sqrt(ln(2 |E|) / (2 n))`.
pub fn hoeffding_sup_bound(events: usize, n: usize) -> f64 {
    ((2.0 * events as f64).ln() / (2.0 * n as f64)).sqrt()
}

/// Three standard deviations of a binomial frequency estimate.
pub fn binomial_three_sigma(p: f64, n: usize) -> f64 {
    3.0 * (p * (1.0 - p) / n as f64).sqrt()
}
