use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use thiserror::Error;

/// Relation names with arities plus constant names.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Signature {
    pub relations: Vec<(String, usize)>,
    pub constants: Vec<String>,
}

impl Signature {
    pub fn relation_arity(&self, name: &str) -> Option<usize> {
        self.relations
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, a)| *a)
    }

    pub fn has_constant(&self, name: &str) -> bool {
        self.constants.iter().any(|c| c == name)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StructureError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("relation {0} is not declared")]
    UnknownRelation(String),
    #[error("relation {name} expects arity {expected}, got {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("element {0} is outside the domain of size {1}")]
    ElementOutOfRange(usize, usize),
    #[error("constant {0} is not declared")]
    UnknownConstant(String),
}

/// A finite structure: domain `{0, .., size-1}`, relation tables, constants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteStructure {
    pub signature: Signature,
    pub size: usize,
    tables: BTreeMap<String, BTreeSet<Vec<usize>>>,
    constants: BTreeMap<String, usize>,
}

impl FiniteStructure {
    pub fn new(signature: Signature, size: usize) -> Self {
        let tables = signature
            .relations
            .iter()
            .map(|(n, _)| (n.clone(), BTreeSet::new()))
            .collect();
        FiniteStructure {
            signature,
            size,
            tables,
            constants: BTreeMap::new(),
        }
    }

    pub fn add_tuple(&mut self, relation: &str, tuple: &[usize]) -> Result<(), StructureError> {
        let arity = self
            .signature
            .relation_arity(relation)
            .ok_or_else(|| StructureError::UnknownRelation(relation.to_string()))?;
        if tuple.len() != arity {
            return Err(StructureError::Arity {
                name: relation.to_string(),
                expected: arity,
                got: tuple.len(),
            });
        }
        for &e in tuple {
            if e >= self.size {
                return Err(StructureError::ElementOutOfRange(e, self.size));
            }
        }
        self.tables
            .get_mut(relation)
            .expect("table exists for declared relation")
            .insert(tuple.to_vec());
        Ok(())
    }

    pub fn remove_tuple(&mut self, relation: &str, tuple: &[usize]) {
        if let Some(t) = self.tables.get_mut(relation) {
            t.remove(tuple);
        }
    }

    pub fn set_constant(&mut self, name: &str, value: usize) -> Result<(), StructureError> {
        if !self.signature.has_constant(name) {
            return Err(StructureError::UnknownConstant(name.to_string()));
        }
        if value >= self.size {
            return Err(StructureError::ElementOutOfRange(value, self.size));
        }
        self.constants.insert(name.to_string(), value);
        Ok(())
    }

    pub fn holds(&self, relation: &str, tuple: &[usize]) -> bool {
        self.tables
            .get(relation)
            .map(|t| t.contains(tuple))
            .unwrap_or(false)
    }

    pub fn constant(&self, name: &str) -> Option<usize> {
        self.constants.get(name).copied()
    }

    pub fn tuples(&self, relation: &str) -> impl Iterator<Item = &Vec<usize>> {
        self.tables.get(relation).into_iter().flatten()
    }

    /// All `k`-tuples over the domain, in lexicographic order.
    pub fn all_tuples(&self, k: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut cur = vec![0usize; k];
        if k == 0 {
            return vec![Vec::new()];
        }
        loop {
            out.push(cur.clone());
            let mut i = k;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                cur[i] += 1;
                if cur[i] < self.size {
                    break;
                }
                cur[i] = 0;
            }
        }
    }

    /// Grows the domain by one element and returns its id. The new element
    /// participates in no relation until tuples are added.
    pub fn push_element(&mut self) -> usize {
        self.size += 1;
        self.size - 1
    }

    /// True when `self` is the substructure induced by `elements` of `other`,
    /// read through the positional map `elements[i] <-> i`.
    pub fn is_induced_substructure(&self, other: &FiniteStructure, elements: &[usize]) -> bool {
        if self.signature != other.signature || self.size != elements.len() {
            return false;
        }
        if elements.iter().any(|&e| e >= other.size) {
            return false;
        }
        for (rel, arity) in &self.signature.relations {
            let mut idx = vec![0usize; *arity];
            loop {
                let local: Vec<usize> = idx.clone();
                let global: Vec<usize> = idx.iter().map(|&i| elements[i]).collect();
                if self.holds(rel, &local) != other.holds(rel, &global) {
                    return false;
                }
                let mut i = *arity;
                let mut done = *arity == 0;
                loop {
                    if i == 0 {
                        done = true;
                        break;
                    }
                    i -= 1;
                    idx[i] += 1;
                    if idx[i] < self.size {
                        break;
                    }
                    idx[i] = 0;
                }
                if done {
                    break;
                }
            }
        }
        true
    }

    /// Linear order on `n` elements with the binary relation `lt`.
    pub fn linear_order(n: usize) -> Self {
        let sig = Signature {
            relations: vec![("lt".to_string(), 2)],
            constants: vec![],
        };
        let mut s = FiniteStructure::new(sig, n);
        for a in 0..n {
            for b in (a + 1)..n {
                s.add_tuple("lt", &[a, b]).expect("in range");
            }
        }
        s
    }

    /// Simple undirected graph on `n` vertices with the symmetric relation
    /// `E`; `edges` lists unordered pairs.
    pub fn graph(n: usize, edges: &[(usize, usize)]) -> Self {
        let sig = Signature {
            relations: vec![("E".to_string(), 2)],
            constants: vec![],
        };
        let mut s = FiniteStructure::new(sig, n);
        for &(a, b) in edges {
            if a != b {
                s.add_tuple("E", &[a, b]).expect("in range");
                s.add_tuple("E", &[b, a]).expect("in range");
            }
        }
        s
    }

    /// Parses the line-oriented structure file format:
    ///
    /// ```text
    /// # comment
    /// domain 4
    /// relation lt/2:
    /// 0 1
    /// 0 2
    /// constant top = 3
    /// ```
    pub fn from_text(text: &str) -> Result<Self, StructureError> {
        let mut size: Option<usize> = None;
        let mut relations: Vec<(String, usize)> = Vec::new();
        let mut constants: Vec<(String, usize)> = Vec::new();
        let mut rows: Vec<(String, Vec<usize>, usize)> = Vec::new();
        let mut current_relation: Option<String> = None;

        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| StructureError::Parse {
                line: line_no,
                message,
            };

            if let Some(rest) = line.strip_prefix("domain ") {
                if size.is_some() {
                    return Err(err("duplicate domain line".to_string()));
                }
                size = Some(
                    rest.trim()
                        .parse::<usize>()
                        .map_err(|_| err(format!("bad domain size {:?}", rest.trim())))?,
                );
                current_relation = None;
            } else if let Some(rest) = line.strip_prefix("relation ") {
                let rest = rest.trim().trim_end_matches(':').trim();
                let (name, arity) = rest
                    .split_once('/')
                    .ok_or_else(|| err(format!("expected name/arity, got {rest:?}")))?;
                let arity: usize = arity
                    .trim()
                    .parse()
                    .map_err(|_| err(format!("bad arity {arity:?}")))?;
                let name = name.trim().to_string();
                if relations.iter().any(|(n, _)| *n == name) {
                    return Err(err(format!("relation {name} declared twice")));
                }
                relations.push((name.clone(), arity));
                current_relation = Some(name);
            } else if let Some(rest) = line.strip_prefix("constant ") {
                let (name, value) = rest
                    .split_once('=')
                    .ok_or_else(|| err(format!("expected name = value, got {rest:?}")))?;
                let value: usize = value
                    .trim()
                    .parse()
                    .map_err(|_| err(format!("bad constant value {:?}", value.trim())))?;
                constants.push((name.trim().to_string(), value));
                current_relation = None;
            } else if line.chars().next().is_some_and(|c| c.is_ascii_digit()) {
                let rel = current_relation
                    .clone()
                    .ok_or_else(|| err("tuple line outside a relation block".to_string()))?;
                let mut tuple = Vec::new();
                for part in line.split_whitespace() {
                    tuple.push(
                        part.parse::<usize>()
                            .map_err(|_| err(format!("bad element {part:?}")))?,
                    );
                }
                rows.push((rel, tuple, line_no));
            } else {
                return Err(err(format!("unrecognized directive {line:?}")));
            }
        }

        let size = size.ok_or(StructureError::Parse {
            line: 1,
            message: "missing domain line".to_string(),
        })?;
        let sig = Signature {
            relations,
            constants: constants.iter().map(|(n, _)| n.clone()).collect(),
        };
        let mut s = FiniteStructure::new(sig, size);
        for (rel, tuple, line) in rows {
            s.add_tuple(&rel, &tuple)
                .map_err(|e| StructureError::Parse {
                    line,
                    message: e.to_string(),
                })?;
        }
        for (name, value) in constants {
            s.set_constant(&name, value)?;
        }
        Ok(s)
    }

    /// Serializes back to the file format accepted by [`Self::from_text`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "domain {}", self.size);
        for (rel, arity) in &self.signature.relations {
            let _ = writeln!(out, "relation {rel}/{arity}:");
            for tuple in self.tuples(rel) {
                let parts: Vec<String> = tuple.iter().map(|e| e.to_string()).collect();
                let _ = writeln!(out, "{}", parts.join(" "));
            }
        }
        for (name, value) in &self.constants {
            let _ = writeln!(out, "constant {name} = {value}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_order_tuples() {
        let l4 = FiniteStructure::linear_order(4);
        assert!(l4.holds("lt", &[0, 3]));
        assert!(!l4.holds("lt", &[3, 0]));
        assert!(!l4.holds("lt", &[2, 2]));
        assert_eq!(l4.tuples("lt").count(), 6);
    }

    #[test]
    fn text_round_trip() {
        let mut s = FiniteStructure::linear_order(3);
        s.signature.constants.push("top".to_string());
        s.set_constant("top", 2).unwrap();
        let text = s.to_text();
        let back = FiniteStructure::from_text(&text).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn parse_reports_line_numbers() {
        let text = "domain 3\nrelation lt/2:\n0 1\n9 9\n";
        let err = FiniteStructure::from_text(text).unwrap_err();
        assert_eq!(
            err,
            StructureError::Parse {
                line: 4,
                message: "element 9 is outside the domain of size 3".to_string()
            }
        );
    }

    #[test]
    fn parse_rejects_stray_tuple() {
        let err = FiniteStructure::from_text("domain 2\n0 1\n").unwrap_err();
        assert!(matches!(err, StructureError::Parse { line: 2, .. }));
    }

    #[test]
    fn induced_substructure_check() {
        let l5 = FiniteStructure::linear_order(5);
        let l3 = FiniteStructure::linear_order(3);
        assert!(l3.is_induced_substructure(&l5, &[0, 2, 4]));
        assert!(!l3.is_induced_substructure(&l5, &[4, 2, 0]));
    }

    #[test]
    fn graph_is_symmetric() {
        let g = FiniteStructure::graph(3, &[(0, 1)]);
        assert!(g.holds("E", &[0, 1]));
        assert!(g.holds("E", &[1, 0]));
        assert!(!g.holds("E", &[0, 2]));
    }
}
