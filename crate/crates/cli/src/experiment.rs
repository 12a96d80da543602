//! Experiment files: a line-oriented description of one structure, one
//! partitioned formula, the type atoms spanning the space, and the measures
//! an invocation works with. `#` starts a comment, blank lines are skipped,
//! and every other line is `key value...`.

use crate::CliError;
use keisler_core::logic::{parse_formula, FiniteStructure, PartitionedFormula};
use keisler_core::measure::KeislerMeasure;
use keisler_core::typespace::{tuples_over, CutSide, TheoryKind, TypeAtom, TypeSpace};
use keisler_core::{rat, Measure, Rat};
use std::fs;
use std::path::Path;
use std::sync::Arc;

#[derive(Debug, Clone)]
enum StructureSpec {
    LinearOrder(usize),
    Graph(usize, Vec<(usize, usize)>),
}

#[derive(Debug, Clone)]
enum MeasureSpec {
    Uniform,
    Dirac(usize),
    Weights(Vec<Rat>),
    Average(Vec<usize>),
}

#[derive(Debug, Clone)]
struct AtomSpec {
    atom: TypeAtom,
}

/// Everything a subcommand needs, already built: the space, the formula,
/// the bridge formula for products, and the named measures in declaration
/// order.
pub struct Workbench {
    pub space: Arc<TypeSpace>,
    pub chi: PartitionedFormula,
    pub measures: Vec<(String, Measure)>,
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub epsilons: Vec<Rat>,
    pub n_max: usize,
    pub samples: usize,
    pub budget: u64,
    pub denom_cap: u64,
    pub k_max: usize,
    subject: Option<String>,
    left: Option<String>,
    right: Option<String>,
}

impl Workbench {
    fn named(&self, name: &str) -> Result<&Measure, CliError> {
        self.measures
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
            .ok_or_else(|| CliError::Validation(format!("no measure named {name}")))
    }

    /// The measure a single-measure subcommand works on: the `use` line,
    /// or the first declared measure.
    pub fn subject(&self) -> Result<&Measure, CliError> {
        match &self.subject {
            Some(name) => self.named(name),
            None => Ok(&self.measures[0].1),
        }
    }

    /// Left factor of a product: the `left` line, or the first measure.
    pub fn left(&self) -> Result<&Measure, CliError> {
        match &self.left {
            Some(name) => self.named(name),
            None => Ok(&self.measures[0].1),
        }
    }

    /// Right factor: the `right` line, the second measure, or the first.
    pub fn right(&self) -> Result<&Measure, CliError> {
        match &self.right {
            Some(name) => self.named(name),
            None => Ok(self
                .measures
                .get(1)
                .map(|(_, m)| m)
                .unwrap_or(&self.measures[0].1)),
        }
    }
}

pub fn load(path: &Path) -> Result<Workbench, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    build(&text)
}

fn err(line: usize, message: impl AsRef<str>) -> CliError {
    CliError::Validation(format!("spec line {line}: {}", message.as_ref()))
}

fn parse_usize(tok: &str, line: usize, what: &str) -> Result<usize, CliError> {
    tok.parse().map_err(|_| {
        err(
            line,
            format!("{what} must be a non-negative integer, got {tok}"),
        )
    })
}

fn parse_u64(tok: &str, line: usize, what: &str) -> Result<u64, CliError> {
    tok.parse().map_err(|_| {
        err(
            line,
            format!("{what} must be a non-negative integer, got {tok}"),
        )
    })
}

fn parse_fraction(tok: &str, line: usize) -> Result<Rat, CliError> {
    let (p, q) = match tok.split_once('/') {
        Some((p, q)) => (p, q),
        None => (tok, "1"),
    };
    let p: i64 = p
        .parse()
        .map_err(|_| err(line, format!("bad fraction numerator in {tok}")))?;
    let q: i64 = q
        .parse()
        .map_err(|_| err(line, format!("bad fraction denominator in {tok}")))?;
    if q == 0 {
        return Err(err(line, format!("zero denominator in {tok}")));
    }
    Ok(rat(p, q))
}

fn build(text: &str) -> Result<Workbench, CliError> {
    let mut structure: Option<StructureSpec> = None;
    let mut theory: Option<TheoryKind> = None;
    let mut formula_text: Option<String> = None;
    let mut objects: Vec<String> = Vec::new();
    let mut params: Vec<String> = Vec::new();
    let mut chi_text: Option<String> = None;
    let mut chi_objects: Vec<String> = Vec::new();
    let mut chi_params: Vec<String> = Vec::new();
    let mut pool: Option<Vec<usize>> = None;
    let mut atoms: Vec<AtomSpec> = Vec::new();
    let mut measures: Vec<(String, MeasureSpec)> = Vec::new();
    let mut subject = None;
    let mut left = None;
    let mut right = None;
    let mut sizes: Vec<usize> = vec![4, 16, 64, 256];
    let mut trials: usize = 200;
    let mut seed: u64 = 42;
    let mut epsilons: Vec<Rat> = Vec::new();
    let mut n_max: usize = 8;
    let mut samples: usize = 4096;
    let mut budget: u64 = 100_000_000;
    let mut denom_cap: u64 = 64;
    let mut k_max: usize = 3;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, rest) = body.split_once(char::is_whitespace).unwrap_or((body, ""));
        let rest = rest.trim();
        let toks: Vec<&str> = rest.split_whitespace().collect();
        match key {
            "structure" => {
                let kind = toks
                    .first()
                    .ok_or_else(|| err(line, "structure needs a kind"))?;
                match *kind {
                    "linear-order" => {
                        let n = parse_usize(
                            toks.get(1).ok_or_else(|| err(line, "missing size"))?,
                            line,
                            "size",
                        )?;
                        structure = Some(StructureSpec::LinearOrder(n));
                    }
                    "graph" => {
                        let n = parse_usize(
                            toks.get(1).ok_or_else(|| err(line, "missing size"))?,
                            line,
                            "size",
                        )?;
                        let mut edges = Vec::new();
                        for tok in &toks[2..] {
                            let (a, b) = tok
                                .split_once('-')
                                .ok_or_else(|| err(line, format!("edge {tok} is not a-b")))?;
                            edges.push((
                                parse_usize(a, line, "edge endpoint")?,
                                parse_usize(b, line, "edge endpoint")?,
                            ));
                        }
                        structure = Some(StructureSpec::Graph(n, edges));
                    }
                    other => return Err(err(line, format!("unknown structure kind {other}"))),
                }
            }
            "theory" => {
                theory = Some(match rest {
                    "plain" => TheoryKind::Plain,
                    "dlo" => TheoryKind::Dlo,
                    "random-graph" => TheoryKind::RandomGraph,
                    other => return Err(err(line, format!("unknown theory {other}"))),
                });
            }
            "formula" => formula_text = Some(rest.to_string()),
            "objects" => objects = toks.iter().map(|t| t.to_string()).collect(),
            "params" => params = toks.iter().map(|t| t.to_string()).collect(),
            "chi" => chi_text = Some(rest.to_string()),
            "chi-objects" => chi_objects = toks.iter().map(|t| t.to_string()).collect(),
            "chi-params" => chi_params = toks.iter().map(|t| t.to_string()).collect(),
            "pool" => {
                let mut elems = Vec::new();
                for t in &toks {
                    elems.push(parse_usize(t, line, "pool element")?);
                }
                pool = Some(elems);
            }
            "atom" => {
                let kind = toks.first().ok_or_else(|| err(line, "atom needs a kind"))?;
                let atom = match *kind {
                    "realized" => {
                        let mut tuple = Vec::new();
                        for t in &toks[1..] {
                            tuple.push(parse_usize(t, line, "tuple element")?);
                        }
                        if tuple.is_empty() {
                            return Err(err(line, "realized atom needs a tuple"));
                        }
                        TypeAtom::Realized(tuple)
                    }
                    "dlo-cut" => {
                        let pos = parse_usize(
                            toks.get(1)
                                .ok_or_else(|| err(line, "missing cut position"))?,
                            line,
                            "cut position",
                        )?;
                        let side = match toks.get(2).copied() {
                            Some("+") => CutSide::Above,
                            Some("-") => CutSide::Below,
                            _ => return Err(err(line, "cut side must be + or -")),
                        };
                        TypeAtom::DloCut {
                            position: pos,
                            side,
                        }
                    }
                    "rg-generic" => {
                        let bits = toks
                            .get(1)
                            .ok_or_else(|| err(line, "missing adjacency bits"))?;
                        let mut pattern = Vec::with_capacity(bits.len());
                        for c in bits.chars() {
                            match c {
                                '0' => pattern.push(false),
                                '1' => pattern.push(true),
                                _ => return Err(err(line, format!("bad bit {c}"))),
                            }
                        }
                        TypeAtom::RgGeneric(pattern)
                    }
                    other => return Err(err(line, format!("unknown atom kind {other}"))),
                };
                atoms.push(AtomSpec { atom });
            }
            "measure" => {
                let name = toks
                    .first()
                    .ok_or_else(|| err(line, "measure needs a name"))?
                    .to_string();
                let kind = toks
                    .get(1)
                    .ok_or_else(|| err(line, "measure needs a kind"))?;
                let spec = match *kind {
                    "uniform" => MeasureSpec::Uniform,
                    "dirac" => MeasureSpec::Dirac(parse_usize(
                        toks.get(2)
                            .ok_or_else(|| err(line, "dirac needs an atom"))?,
                        line,
                        "atom",
                    )?),
                    "weights" => {
                        let mut ws = Vec::new();
                        for t in &toks[2..] {
                            ws.push(parse_fraction(t, line)?);
                        }
                        if ws.is_empty() {
                            return Err(err(line, "weights need at least one entry"));
                        }
                        MeasureSpec::Weights(ws)
                    }
                    "average" => {
                        let mut picks = Vec::new();
                        for t in &toks[2..] {
                            picks.push(parse_usize(t, line, "atom")?);
                        }
                        if picks.is_empty() {
                            return Err(err(line, "average needs at least one atom"));
                        }
                        MeasureSpec::Average(picks)
                    }
                    other => return Err(err(line, format!("unknown measure kind {other}"))),
                };
                if measures.iter().any(|(n, _)| *n == name) {
                    return Err(err(line, format!("measure {name} declared twice")));
                }
                measures.push((name, spec));
            }
            "use" => subject = Some(rest.to_string()),
            "left" => left = Some(rest.to_string()),
            "right" => right = Some(rest.to_string()),
            "sizes" => {
                sizes = Vec::new();
                for t in &toks {
                    let n = parse_usize(t, line, "sample size")?;
                    if n == 0 {
                        return Err(err(line, "sample sizes must be at least 1"));
                    }
                    sizes.push(n);
                }
                if sizes.is_empty() {
                    return Err(err(line, "sizes needs at least one entry"));
                }
            }
            "trials" => trials = parse_usize(rest, line, "trials")?,
            "seed" => seed = parse_u64(rest, line, "seed")?,
            "epsilons" => {
                epsilons = Vec::new();
                for t in &toks {
                    epsilons.push(parse_fraction(t, line)?);
                }
            }
            "n-max" => n_max = parse_usize(rest, line, "n-max")?,
            "samples" => samples = parse_usize(rest, line, "samples")?,
            "budget" => budget = parse_u64(rest, line, "budget")?,
            "denom-cap" => denom_cap = parse_u64(rest, line, "denom-cap")?,
            "k-max" => k_max = parse_usize(rest, line, "k-max")?,
            other => return Err(err(line, format!("unknown key {other}"))),
        }
    }

    let structure =
        structure.ok_or_else(|| CliError::Validation("missing structure line".into()))?;
    let formula_text =
        formula_text.ok_or_else(|| CliError::Validation("missing formula line".into()))?;
    if objects.is_empty() {
        return Err(CliError::Validation("missing objects line".into()));
    }
    if params.is_empty() {
        return Err(CliError::Validation("missing params line".into()));
    }

    let (base, default_theory) = match &structure {
        StructureSpec::LinearOrder(n) => (FiniteStructure::linear_order(*n), TheoryKind::Dlo),
        StructureSpec::Graph(n, edges) => {
            (FiniteStructure::graph(*n, edges), TheoryKind::RandomGraph)
        }
    };
    let base = Arc::new(base);
    let theory = theory.unwrap_or(default_theory);

    let object_refs: Vec<&str> = objects.iter().map(|s| s.as_str()).collect();
    let param_refs: Vec<&str> = params.iter().map(|s| s.as_str()).collect();
    let pf = parse_formula(&base.signature, &formula_text, &object_refs, &param_refs)?;

    let chi = match chi_text {
        None => pf.clone(),
        Some(text) => {
            let obj: Vec<&str> = if chi_objects.is_empty() {
                object_refs.clone()
            } else {
                chi_objects.iter().map(|s| s.as_str()).collect()
            };
            let par: Vec<&str> = if chi_params.is_empty() {
                param_refs.clone()
            } else {
                chi_params.iter().map(|s| s.as_str()).collect()
            };
            parse_formula(&base.signature, &text, &obj, &par)?
        }
    };

    let param_tuples = pool.map(|elems| tuples_over(&elems, pf.param_arity()));

    let space = if atoms.is_empty() {
        let (space, _) = TypeSpace::realized(Arc::clone(&base), theory, pf.clone(), param_tuples)?;
        Arc::new(space)
    } else {
        Arc::new(TypeSpace::from_atoms(
            Arc::clone(&base),
            theory,
            pf.clone(),
            atoms.into_iter().map(|a| a.atom).collect(),
            param_tuples,
        )?)
    };

    if measures.is_empty() {
        measures.push(("uniform".to_string(), MeasureSpec::Uniform));
    }
    let mut built: Vec<(String, Measure)> = Vec::with_capacity(measures.len());
    for (name, spec) in measures {
        let m = match spec {
            MeasureSpec::Uniform => KeislerMeasure::uniform(Arc::clone(&space))?,
            MeasureSpec::Dirac(a) => KeislerMeasure::dirac(Arc::clone(&space), a)?,
            MeasureSpec::Weights(ws) => KeislerMeasure::new(Arc::clone(&space), ws)?,
            MeasureSpec::Average(picks) => KeislerMeasure::average(Arc::clone(&space), &picks)?,
        };
        built.push((name, m));
    }

    if trials == 0 {
        return Err(CliError::Validation("trials must be at least 1".into()));
    }
    if n_max == 0 {
        return Err(CliError::Validation("n-max must be at least 1".into()));
    }

    Ok(Workbench {
        space,
        chi,
        measures: built,
        sizes,
        trials,
        seed,
        epsilons,
        n_max,
        samples,
        budget,
        denom_cap,
        k_max,
        subject,
        left,
        right,
    })
}
