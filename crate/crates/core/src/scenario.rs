//! Named desk experiments with pinned inputs. Each scenario builds its
//! structures and measures, runs the relevant analyses, and returns a flat
//! report of rendered fields plus named self-checks, ready for the command
//! line runner to serialize.

use crate::dependence::{dependence_rank, dk_report, vc_of_space, DependenceError};
use crate::empirics::{
    dfs_nip_fim_scenario, fim_implies_dependent_experiment, gc_curve, EmpiricsError, EventFamily,
};
use crate::logic::{parse_formula, EvalError, FiniteStructure, ParseError};
use crate::measure::{KeislerMeasure, MeasureError};
use crate::morley::{commutes, epsilon_chain_verify, morley_product, MorleyError};
use crate::typespace::{fragment_battery, CutSide, TheoryKind, TypeAtom, TypeError, TypeSpace};
use crate::weight::Weight;
use crate::{rat, Rat};
use num_traits::{One, Zero};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown scenario {0}")]
    Unknown(String),
    #[error("cube dimension must be between 1 and 16, got {0}")]
    CubeDimension(usize),
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Morley(#[from] MorleyError),
    #[error(transparent)]
    Empirics(#[from] EmpiricsError),
    #[error(transparent)]
    Dependence(#[from] DependenceError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// One rendered report value. Fractions stay split into numerator and
/// denominator strings so emitters never reformat them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FieldValue {
    Fraction { num: String, den: String },
    Int(i64),
    Text(String),
    Flag(bool),
}

/// Flat scenario outcome: ordered fields and named pass/fail checks.
#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub name: String,
    pub fields: Vec<(String, FieldValue)>,
    pub checks: Vec<(String, bool)>,
}

impl ScenarioReport {
    fn new(name: &str) -> Self {
        ScenarioReport {
            name: name.to_string(),
            fields: Vec::new(),
            checks: Vec::new(),
        }
    }

    pub fn all_checks_pass(&self) -> bool {
        self.checks.iter().all(|(_, ok)| *ok)
    }

    pub fn field(&self, name: &str) -> Option<&FieldValue> {
        self.fields.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn check(&self, name: &str) -> Option<bool> {
        self.checks.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    fn frac(&mut self, name: &str, w: &Rat) {
        let (num, den) = w.fraction_parts();
        self.fields
            .push((name.to_string(), FieldValue::Fraction { num, den }));
    }

    fn int(&mut self, name: &str, v: i64) {
        self.fields.push((name.to_string(), FieldValue::Int(v)));
    }

    fn text(&mut self, name: &str, v: &str) {
        self.fields
            .push((name.to_string(), FieldValue::Text(v.to_string())));
    }

    fn flag(&mut self, name: &str, v: bool) {
        self.fields.push((name.to_string(), FieldValue::Flag(v)));
    }

    fn verify(&mut self, name: &str, ok: bool) {
        self.checks.push((name.to_string(), ok));
    }
}

/// Tunables shared by the scenarios; every field has a sensible default.
#[derive(Debug, Clone)]
pub struct ScenarioParams {
    /// Cube dimension for `bernoulli-cube`.
    pub m: usize,
    pub seed: u64,
    pub trials: usize,
    pub sizes: Vec<usize>,
    pub budget: u64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            m: 8,
            seed: 42,
            trials: 200,
            sizes: vec![4, 16, 64, 256],
            budget: 100_000_000,
        }
    }
}

pub fn scenario_names() -> &'static [&'static str] {
    &[
        "dlo-coheirs",
        "l4-uniform",
        "bernoulli-cube",
        "random-graph-trivial",
    ]
}

pub fn run_scenario(name: &str, params: &ScenarioParams) -> Result<ScenarioReport, ScenarioError> {
    match name {
        "dlo-coheirs" => dlo_coheirs(params),
        "l4-uniform" => l4_uniform(params),
        "bernoulli-cube" => bernoulli_cube(params),
        "random-graph-trivial" => random_graph_trivial(params),
        other => Err(ScenarioError::Unknown(other.to_string())),
    }
}

/// Two copies of the order type just above 5 in a 10-element order: their
/// product detects which factor was realized closer to the cut, so the two
/// orders disagree (values 1 and 0). Against the realized uniform measure
/// the product is stable. The fragment panel shows the type is finitely
/// satisfiable on the fragment but not definable over it, and the chain
/// ledger pins the failure on the realized-average replacement step.
fn dlo_coheirs(_params: &ScenarioParams) -> Result<ScenarioReport, ScenarioError> {
    let base = Arc::new(FiniteStructure::linear_order(10));
    let pf = parse_formula(&base.signature, "x < y", &["x"], &["y"])?;
    let fragment: Vec<usize> = vec![0, 1, 2, 3];

    let cut_space = Arc::new(TypeSpace::from_atoms(
        Arc::clone(&base),
        TheoryKind::Dlo,
        pf.clone(),
        vec![TypeAtom::DloCut {
            position: 5,
            side: CutSide::Above,
        }],
        None,
    )?);
    let p = KeislerMeasure::<Rat>::dirac(Arc::clone(&cut_space), 0)?;

    let pair = commutes(&p, &p, &pf)?;
    let (uspace, _) = TypeSpace::realized(Arc::clone(&base), TheoryKind::Dlo, pf.clone(), None)?;
    let uniform = KeislerMeasure::<Rat>::uniform(Arc::new(uspace))?;
    let mixed_forward = morley_product(&uniform, &p, &pf)?;
    let mixed_backward = morley_product(&p, &uniform, &pf.dual())?;

    let definability = p.definable_over_fragment(&fragment)?;
    let battery = fragment_battery(&cut_space, &fragment);
    let fs = p.finitely_satisfiable_in(&fragment, &battery)?;

    // The product gap between the two orders is a full unit, so the chain
    // bound 4 * epsilon only closes at epsilon = 1/4; the ledger shows the
    // boundary case, with the whole unit sitting on the average step.
    let eps = rat(1, 4);
    let chain = epsilon_chain_verify(&p, &p, &pf, &eps, 64)?;

    let mut r = ScenarioReport::new("dlo-coheirs");
    r.text("structure", "linear order on 10 elements");
    r.text("formula", "x < y");
    r.text("fragment", "0,1,2,3");
    r.text("atom", "order type just above 5");
    r.frac("p_tensor_q", &pair.forward);
    r.frac("q_tensor_p", &pair.backward);
    r.text(
        "verdict",
        if pair.commutes {
            "commuting"
        } else {
            "non-commuting"
        },
    );
    r.frac("uniform_tensor_p", &mixed_forward.value);
    r.frac("p_tensor_uniform_dual", &mixed_backward.value);
    r.flag("definable_over_fragment", definability.definable);
    r.flag("finitely_satisfiable_on_fragment", fs.satisfied);
    r.frac("chain_epsilon", &eps);
    r.frac("chain_total_error", &chain.total_error);
    r.frac("chain_bound", &chain.bound);
    r.frac("chain_middle_gap", &chain.middle_gap);
    r.frac("chain_average_step_gap", &chain.steps[1].gap);

    r.verify("forward_is_one", pair.forward == Rat::one());
    r.verify("backward_is_zero", pair.backward == Rat::zero());
    r.verify("non_commuting", !pair.commutes);
    r.verify("coheirs_not_definable_on_fragment", !definability.definable);
    r.verify("finitely_satisfiable_on_fragment", fs.satisfied);
    r.verify(
        "realized_coheir_pair_commutes",
        mixed_forward.value == mixed_backward.value,
    );
    r.verify(
        "realized_coheir_value_is_three_fifths",
        mixed_forward.value == rat(3, 5),
    );
    r.verify("chain_total_within_bound", chain.total_error <= chain.bound);
    r.verify("chain_middle_exact", chain.middle_exact);
    r.verify("chain_flags_average_step", !chain.steps[1].within);
    Ok(r)
}

/// The uniform measure on the four order types of a 4-element chain:
/// alternation ratio 3/4 at level one, rank one, shattering dimension one,
/// a decaying deviation curve, a certificate ladder at 1/2 and 1/4, and an
/// all-zero chain ledger.
fn l4_uniform(params: &ScenarioParams) -> Result<ScenarioReport, ScenarioError> {
    let base = Arc::new(FiniteStructure::linear_order(4));
    let pf = parse_formula(&base.signature, "x < y", &["x"], &["y"])?;
    let (space, _) = TypeSpace::realized(Arc::clone(&base), TheoryKind::Dlo, pf.clone(), None)?;
    let mu = KeislerMeasure::<Rat>::uniform(Arc::new(space))?;

    let rank = dependence_rank(&mu, 3, None, params.budget)?;
    let vc = vc_of_space(mu.space(), None, params.budget)?;
    let events = EventFamily::instance_columns(mu.space(), None)?;
    let gc = gc_curve(&mu, &events, &params.sizes, params.trials, params.seed, 0)?;
    let last = gc.summaries.last().expect("at least one size");

    let ladder = [rat(1, 2), rat(1, 4)];
    let panel = dfs_nip_fim_scenario(
        &mu,
        &[0, 1, 2, 3],
        &ladder,
        8,
        4096,
        params.seed,
        params.budget,
    )?;
    let fim = fim_implies_dependent_experiment(&mu, &events, &panel.certificate, 3, params.budget)?;

    let eps = rat(1, 8);
    let chain = epsilon_chain_verify(&mu, &mu, &pf, &eps, 64)?;

    let mut r = ScenarioReport::new("l4-uniform");
    r.text("structure", "linear order on 4 elements");
    r.text("formula", "x < y");
    r.frac("rho_1", &rank.reports[0].ratio);
    r.frac("rho_2", &rank.reports[1].ratio);
    r.frac("rho_3", &rank.reports[2].ratio);
    r.int("rank", rank.rank.map_or(-1, |k| k as i64));
    r.int("vc_dim", vc.vc_dim as i64);
    r.int("nip_threshold", vc.nip_threshold as i64);
    r.int("gc_final_n", last.n as i64);
    r.frac("gc_final_mean", &last.mean);
    r.frac("gc_final_max", &last.max);
    r.frac(
        "gc_final_fraction_below_tenth",
        &gc.fraction_below(gc.sizes.len() - 1, &rat(1, 10)),
    );
    for search in &panel.searches {
        let (en, ed) = search.epsilon.fraction_parts();
        let tag = format!("eps_{en}_{ed}");
        r.int(&format!("approx_n_{tag}"), search.n as i64);
        r.frac(&format!("approx_mass_{tag}"), &search.mass);
    }
    r.frac("chain_epsilon", &eps);
    r.frac("chain_total_error", &chain.total_error);
    r.frac("chain_bound", &chain.bound);

    r.verify("rho1_is_three_quarters", rank.reports[0].ratio == rat(3, 4));
    r.verify("rank_is_one", rank.rank == Some(1));
    r.verify("vc_is_one", vc.vc_dim == 1);
    r.verify("gc_mean_below_tenth", last.mean < rat(1, 10));
    r.verify("definable_over_base", panel.definability.definable);
    r.verify("finitely_satisfiable_in_base", panel.fs.satisfied);
    r.verify(
        "certificates_found",
        panel.found_per_epsilon.iter().all(|&f| f),
    );
    r.verify(
        "certificate_valid",
        !fim.verdicts.is_empty() && fim.verdicts.iter().all(|v| v.valid),
    );
    r.verify("good_set_masses_certified", fim.masses_certified);
    r.verify("fim_rank_is_one", fim.rank.rank == Some(1));
    r.verify("chain_all_links_zero", chain.total_error == Rat::zero());
    r.verify("chain_within_bound", chain.within);
    Ok(r)
}

fn floor_log2(m: usize) -> usize {
    let mut b = 0;
    while (1usize << (b + 1)) <= m {
        b += 1;
    }
    b
}

/// Inclusion-exclusion closed form of the level-two alternation ratio for
/// the uniform measure on all adjacency patterns over m lone vertices.
fn cube_rho2_closed_form(m: usize) -> Rat {
    let binom = [1i64, 4, 6, 4, 1];
    let mut total = Rat::zero();
    for (j, &c) in binom.iter().enumerate() {
        let mut term = Rat::one();
        let base = rat(4 - j as i64, 4);
        for _ in 0..m {
            term *= base.clone();
        }
        let signed = rat(if j % 2 == 0 { c } else { -c }, 1);
        total += signed * term;
    }
    total
}

/// The uniform measure on all 2^m one-vertex graph types over m isolated
/// vertices: the alternation ratio at level two follows an inclusion-
/// exclusion closed form and creeps toward one as m grows, the finitary
/// shadow of an independence configuration.
fn bernoulli_cube(params: &ScenarioParams) -> Result<ScenarioReport, ScenarioError> {
    let m = params.m;
    if m == 0 || m > 16 {
        return Err(ScenarioError::CubeDimension(m));
    }
    let base = Arc::new(FiniteStructure::graph(m, &[]));
    let pf = parse_formula(&base.signature, "E(x, y)", &["x"], &["y"])?;
    let atoms: Vec<TypeAtom> = (0..1usize << m)
        .map(|pat| TypeAtom::RgGeneric((0..m).map(|b| pat >> b & 1 == 1).collect()))
        .collect();
    let space = Arc::new(TypeSpace::from_atoms(
        Arc::clone(&base),
        TheoryKind::RandomGraph,
        pf,
        atoms,
        None,
    )?);
    let mu = KeislerMeasure::<Rat>::uniform(Arc::clone(&space))?;

    let r1 = dk_report(&mu, 1, None, params.budget)?;
    let r2 = dk_report(&mu, 2, None, params.budget)?;
    let closed = cube_rho2_closed_form(m);
    let vc = vc_of_space(&space, None, params.budget)?;
    let log_bound = floor_log2(m);

    let mut r = ScenarioReport::new("bernoulli-cube");
    r.int("m", m as i64);
    r.int("atoms", 1i64 << m);
    r.frac("rho_1", &r1.ratio);
    r.frac("rho_2", &r2.ratio);
    r.frac("rho_2_closed_form", &closed);
    r.int("vc_dim", vc.vc_dim as i64);
    r.int("vc_log_bound", log_bound as i64);
    r.flag("vc_exhaustive", vc.exhaustive);

    r.verify("rho2_matches_closed_form", r2.ratio == closed);
    r.verify(
        "rho2_strictly_inside_unit",
        r2.ratio > Rat::zero() && r2.ratio < Rat::one(),
    );
    r.verify("vc_within_log_bound", vc.vc_dim <= log_bound);
    r.verify(
        "vc_matches_log_bound_when_exhaustive",
        !vc.exhaustive || vc.vc_dim == log_bound,
    );
    r.verify("uniform_fast_path_used", r2.uniform_fast_path);
    Ok(r)
}

/// Measures supported entirely on realized tuples over a 5-cycle: products
/// commute exactly, the chain ledger is all zeros, and the triviality flag
/// separates them from a one-vertex generic type.
fn random_graph_trivial(_params: &ScenarioParams) -> Result<ScenarioReport, ScenarioError> {
    let base = Arc::new(FiniteStructure::graph(
        5,
        &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)],
    ));
    let pf = parse_formula(&base.signature, "E(x, y)", &["x"], &["y"])?;
    let (space, _) =
        TypeSpace::realized(Arc::clone(&base), TheoryKind::RandomGraph, pf.clone(), None)?;
    let space = Arc::new(space);
    let mu = KeislerMeasure::<Rat>::uniform(Arc::clone(&space))?;
    let nu = KeislerMeasure::new(
        Arc::clone(&space),
        vec![rat(1, 2), rat(1, 8), rat(1, 8), rat(1, 8), rat(1, 8)],
    )?;

    let pair = commutes(&mu, &nu, &pf)?;
    let eps = rat(1, 8);
    let chain = epsilon_chain_verify(&mu, &nu, &pf, &eps, 64)?;

    let generic_space = Arc::new(TypeSpace::from_atoms(
        Arc::clone(&base),
        TheoryKind::RandomGraph,
        pf,
        vec![TypeAtom::RgGeneric(vec![true, false, false, false, false])],
        None,
    )?);
    let generic = KeislerMeasure::<Rat>::dirac(generic_space, 0)?;

    let mut r = ScenarioReport::new("random-graph-trivial");
    r.text("structure", "5-cycle");
    r.text("formula", "E(x, y)");
    r.frac("mu_tensor_nu", &pair.forward);
    r.frac("nu_tensor_mu", &pair.backward);
    r.frac("chain_total_error", &chain.total_error);
    r.flag("uniform_purely_atomic", mu.is_purely_atomic_trivial());
    r.flag("weighted_purely_atomic", nu.is_purely_atomic_trivial());
    r.flag("generic_purely_atomic", generic.is_purely_atomic_trivial());

    r.verify("uniform_is_purely_atomic", mu.is_purely_atomic_trivial());
    r.verify("weighted_is_purely_atomic", nu.is_purely_atomic_trivial());
    r.verify("products_commute", pair.commutes);
    r.verify("order_stable", pair.forward_eval.order_invariant);
    r.verify("chain_within_bound", chain.within);
    r.verify("chain_all_links_zero", chain.total_error == Rat::zero());
    r.verify(
        "generic_dirac_not_purely_atomic",
        !generic.is_purely_atomic_trivial(),
    );
    Ok(r)
}
