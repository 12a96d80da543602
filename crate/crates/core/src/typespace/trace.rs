use crate::logic::{eval_instance, EvalError, FiniteStructure, PartitionedFormula};

/// Dense bit matrix stored row-major in 64-bit words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    n_rows: usize,
    n_cols: usize,
    words_per_row: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        let words_per_row = n_cols.div_ceil(64).max(1);
        BitMatrix {
            n_rows,
            n_cols,
            words_per_row,
            words: vec![0; n_rows * words_per_row],
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        let w = self.words[r * self.words_per_row + c / 64];
        (w >> (c % 64)) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        let w = &mut self.words[r * self.words_per_row + c / 64];
        if v {
            *w |= 1 << (c % 64);
        } else {
            *w &= !(1 << (c % 64));
        }
    }

    pub fn row_words(&self, r: usize) -> &[u64] {
        &self.words[r * self.words_per_row..(r + 1) * self.words_per_row]
    }
}

/// Truth table of a partitioned formula: rows are object tuples, columns are
/// parameter tuples, `bits[r][c] = phi(row_r, col_c)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceMatrix {
    pub row_tuples: Vec<Vec<usize>>,
    pub col_tuples: Vec<Vec<usize>>,
    bits: BitMatrix,
}

impl TraceMatrix {
    pub fn from_rows(
        row_tuples: Vec<Vec<usize>>,
        col_tuples: Vec<Vec<usize>>,
        rows: Vec<Vec<bool>>,
    ) -> Self {
        let mut bits = BitMatrix::new(row_tuples.len(), col_tuples.len());
        for (r, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), col_tuples.len(), "ragged trace row");
            for (c, &v) in row.iter().enumerate() {
                bits.set(r, c, v);
            }
        }
        TraceMatrix {
            row_tuples,
            col_tuples,
            bits,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.bits.n_rows()
    }

    pub fn n_cols(&self) -> usize {
        self.bits.n_cols()
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.bits.get(r, c)
    }

    /// Row as a 0/1 string, leftmost bit is column 0.
    pub fn row_string(&self, r: usize) -> String {
        (0..self.n_cols())
            .map(|c| if self.get(r, c) { '1' } else { '0' })
            .collect()
    }

    pub fn row_bits(&self, r: usize) -> Vec<bool> {
        (0..self.n_cols()).map(|c| self.get(r, c)).collect()
    }

    pub fn row_words(&self, r: usize) -> &[u64] {
        self.bits.row_words(r)
    }

    /// Packs the selected columns of every row into fresh little words, for
    /// the enumerators that only look at a column subset.
    pub fn packed_rows(&self, cols: &[usize]) -> Vec<Vec<u64>> {
        let words = cols.len().div_ceil(64).max(1);
        (0..self.n_rows())
            .map(|r| {
                let mut row = vec![0u64; words];
                for (i, &c) in cols.iter().enumerate() {
                    if self.get(r, c) {
                        row[i / 64] |= 1 << (i % 64);
                    }
                }
                row
            })
            .collect()
    }

    /// First-occurrence representatives of the distinct rows and the map
    /// sending each row index to its representative's position.
    pub fn distinct_rows(&self) -> (Vec<usize>, Vec<usize>) {
        let mut reps: Vec<usize> = Vec::new();
        let mut map = vec![0usize; self.n_rows()];
        let mut seen: std::collections::BTreeMap<&[u64], usize> = std::collections::BTreeMap::new();
        for (r, slot) in map.iter_mut().enumerate() {
            let key = self.row_words(r);
            match seen.get(key) {
                Some(&idx) => *slot = idx,
                None => {
                    let idx = reps.len();
                    seen.insert(key, idx);
                    reps.push(r);
                    *slot = idx;
                }
            }
        }
        (reps, map)
    }

    /// New matrix keeping only the listed columns, same rows.
    pub fn restrict_columns(&self, cols: &[usize]) -> TraceMatrix {
        let mut bits = BitMatrix::new(self.n_rows(), cols.len());
        for r in 0..self.n_rows() {
            for (i, &c) in cols.iter().enumerate() {
                bits.set(r, i, self.get(r, c));
            }
        }
        TraceMatrix {
            row_tuples: self.row_tuples.clone(),
            col_tuples: cols.iter().map(|&c| self.col_tuples[c].clone()).collect(),
            bits,
        }
    }
}

/// Evaluates `pf` on every (row tuple, column tuple) pair of `m`.
pub fn trace_matrix(
    m: &FiniteStructure,
    pf: &PartitionedFormula,
    row_tuples: Vec<Vec<usize>>,
    col_tuples: Vec<Vec<usize>>,
) -> Result<TraceMatrix, EvalError> {
    let mut bits = BitMatrix::new(row_tuples.len(), col_tuples.len());
    for (r, row) in row_tuples.iter().enumerate() {
        for (c, col) in col_tuples.iter().enumerate() {
            bits.set(r, c, eval_instance(m, pf, row, col)?);
        }
    }
    Ok(TraceMatrix {
        row_tuples,
        col_tuples,
        bits,
    })
}
