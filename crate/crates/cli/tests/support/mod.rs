//! Naive oracles for the acceptance checks: direct enumeration only, no
//! shared code with the library internals under test.

#![allow(dead_code)]

use keisler_core::typespace::TraceMatrix;
use keisler_core::{rat, Rat};
use num_traits::{One, Zero};

/// Mass and ordered-tuple count of the k-th alternation set by scanning
/// every atom tuple and every column pattern.
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
        if realizes_all_patterns(trace, &tuple) {
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

fn realizes_all_patterns(trace: &TraceMatrix, tuple: &[usize]) -> bool {
    let want = 1usize << tuple.len();
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

/// `sum_j (-1)^j C(4, j) ((4 - j) / 4)^m`: the fraction of ordered pattern
/// pairs on the m-dimensional cube whose neighbourhood sets split the
/// vertices four ways.
pub fn cube_rho2_closed_form(m: u32) -> Rat {
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

/// Hoeffding-style scale `sqrt(ln(2 |E|) / (2 n))` for the supremum
/// deviation over `events` events after `n` draws.
pub fn hoeffding_sup_bound(events: usize, n: usize) -> f64 {
    ((2.0 * events as f64).ln() / (2.0 * n as f64)).sqrt()
}
