//! Sampling against exact measures: i.i.d. draws, uniform deviation of
//! empirical averages over instance events, decay curves, searches for
//! approximation events, and the certificates built from them.
//!
//! Randomness comes from a seeded stream cipher; every (size, trial) cell
//! gets its own stream, so trials can execute in any order, or in
//! parallel, without changing a single draw.

use crate::dependence::{dependence_rank, vc_of_space, DependenceError, RankReport, VcReport};
use crate::measure::{DefinabilityReport, KeislerMeasure, MeasureError};
use crate::typespace::{fragment_battery, FsReport, TypeSpace};
use crate::weight::{max_w, sum_w, Weight};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Product levels are enumerated exhaustively up to this many tuples;
/// beyond it the mass is a flagged Monte-Carlo estimate.
pub const EXHAUSTIVE_CAP: u128 = 1_000_000;

#[derive(Debug, Error)]
pub enum EmpiricsError {
    #[error("sample size must be at least 1")]
    EmptySample,
    #[error("atom {0} out of range for a space with {1} atoms")]
    AtomOutOfRange(usize, usize),
    #[error("column {0} out of range for a pool of {1} instances")]
    ColumnOutOfRange(usize, usize),
    #[error("epsilon must be positive")]
    NonPositiveEpsilon,
    #[error("trial and sample counts must be at least 1")]
    NoTrials,
    #[error("certificate entry {entry}: tuple has length {got}, expected {expected}")]
    CertificateArity {
        entry: usize,
        expected: usize,
        got: usize,
    },
    #[error("certificate entry {entry}: sample size must be at least 1")]
    CertificateEmpty { entry: usize },
    #[error(transparent)]
    Dependence(#[from] DependenceError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// Labeled events over the atoms of one space. The basic family has one
/// event per parameter instance, namely the atoms deciding it positively;
/// intersecting with extra atom sets refines the family.
#[derive(Debug, Clone)]
pub struct EventFamily {
    pub members: Vec<Vec<bool>>,
    pub labels: Vec<String>,
}

impl EventFamily {
    /// One event per trace column, all columns by default.
    pub fn instance_columns(
        space: &TypeSpace,
        pool: Option<&[usize]>,
    ) -> Result<Self, EmpiricsError> {
        let n_cols = space.trace.n_cols();
        let cols: Vec<usize> = match pool {
            Some(p) => {
                for &c in p {
                    if c >= n_cols {
                        return Err(EmpiricsError::ColumnOutOfRange(c, n_cols));
                    }
                }
                p.to_vec()
            }
            None => (0..n_cols).collect(),
        };
        let atoms = space.atom_count();
        let mut members = Vec::with_capacity(cols.len());
        let mut labels = Vec::with_capacity(cols.len());
        for &c in &cols {
            members.push((0..atoms).map(|a| space.trace.get(a, c)).collect());
            let joined: Vec<String> = space.trace.col_tuples[c]
                .iter()
                .map(|e| e.to_string())
                .collect();
            labels.push(format!("b{}", joined.join("-")));
        }
        Ok(EventFamily { members, labels })
    }

    /// Crosses every event with every extra atom set.
    pub fn intersected(
        &self,
        extra: &[Vec<usize>],
        atom_count: usize,
    ) -> Result<Self, EmpiricsError> {
        let mut members = Vec::new();
        let mut labels = Vec::new();
        for (k, set) in extra.iter().enumerate() {
            let mut mask = vec![false; atom_count];
            for &a in set {
                if a >= atom_count {
                    return Err(EmpiricsError::AtomOutOfRange(a, atom_count));
                }
                mask[a] = true;
            }
            for (e, base) in self.members.iter().enumerate() {
                members.push(base.iter().zip(&mask).map(|(&x, &y)| x && y).collect());
                labels.push(format!("{}&X{}", self.labels[e], k));
            }
        }
        Ok(EventFamily { members, labels })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Exact mass of each event under the measure.
    pub fn masses<W: Weight>(&self, mu: &KeislerMeasure<W>) -> Vec<W> {
        self.members.iter().map(|m| mu.mass_of_mask(m)).collect()
    }
}

fn atom_counts(sample: &[usize], atom_count: usize) -> Result<Vec<u64>, EmpiricsError> {
    let mut counts = vec![0u64; atom_count];
    for &a in sample {
        if a >= atom_count {
            return Err(EmpiricsError::AtomOutOfRange(a, atom_count));
        }
        counts[a] += 1;
    }
    Ok(counts)
}

/// Signed gaps `Av(event) - mu(event)` of one sample, event by event.
fn trial_deltas<W: Weight>(counts: &[u64], n: usize, events: &EventFamily, masses: &[W]) -> Vec<W> {
    events
        .members
        .iter()
        .zip(masses)
        .map(|(member, mass)| {
            let hits: u64 = member
                .iter()
                .zip(counts)
                .filter(|(&m, _)| m)
                .map(|(_, &c)| c)
                .sum();
            W::from_ratio(hits as i64, n as i64) - mass.clone()
        })
        .collect()
}

fn deviation_from_counts<W: Weight>(
    counts: &[u64],
    n: usize,
    events: &EventFamily,
    masses: &[W],
) -> W {
    trial_deltas(counts, n, events, masses)
        .into_iter()
        .map(|d| d.abs())
        .fold(W::zero(), max_w)
}

/// Exact worst deviation of the sample's empirical averages from the
/// measure, over the event family.
pub fn sup_deviation<W: Weight>(
    sample: &[usize],
    mu: &KeislerMeasure<W>,
    events: &EventFamily,
) -> Result<W, EmpiricsError> {
    if sample.is_empty() {
        return Err(EmpiricsError::EmptySample);
    }
    let counts = atom_counts(sample, mu.space().atom_count())?;
    let masses = events.masses(mu);
    Ok(deviation_from_counts(
        &counts,
        sample.len(),
        events,
        &masses,
    ))
}

/// `sup_deviation` with the family built from the instance pool, each
/// event optionally intersected with the given atom sets.
pub fn sup_deviation_over_pool<W: Weight>(
    sample: &[usize],
    mu: &KeislerMeasure<W>,
    pool: Option<&[usize]>,
    extra_events: Option<&[Vec<usize>]>,
) -> Result<W, EmpiricsError> {
    let mut events = EventFamily::instance_columns(mu.space(), pool)?;
    if let Some(extra) = extra_events {
        events = events.intersected(extra, mu.space().atom_count())?;
    }
    sup_deviation(sample, mu, &events)
}

/// Inverse-CDF table: a uniform 64-bit draw is compared against the
/// cumulative weight thresholds. Zero-weight atoms are never chosen.
struct Sampler {
    thresholds: Vec<u64>,
    fallback: usize,
}

impl Sampler {
    fn new<W: Weight>(mu: &KeislerMeasure<W>) -> Self {
        let mut cum = W::zero();
        let mut thresholds = Vec::with_capacity(mu.weights().len());
        for w in mu.weights() {
            cum = cum + w.clone();
            thresholds.push(cum.sample_threshold());
        }
        let fallback = mu.support().last().copied().unwrap_or(0);
        Sampler {
            thresholds,
            fallback,
        }
    }

    fn draw(&self, rng: &mut impl RngCore) -> usize {
        let u = rng.next_u64();
        match self.thresholds.iter().position(|&t| u < t) {
            Some(i) => i,
            None => self.fallback,
        }
    }
}

/// `n` i.i.d. draws from the measure, by inverse CDF over the weights.
pub fn sample_tuple<W: Weight>(
    mu: &KeislerMeasure<W>,
    n: usize,
    rng: &mut impl RngCore,
) -> Result<Vec<usize>, EmpiricsError> {
    if n == 0 {
        return Err(EmpiricsError::EmptySample);
    }
    let sampler = Sampler::new(mu);
    Ok((0..n).map(|_| sampler.draw(rng)).collect())
}

/// The generator for one (size index, trial) cell: the master seed picks
/// the key, the cell picks the stream.
pub fn trial_rng(seed: u64, size_index: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((size_index as u64) << 32) | trial as u64);
    rng
}

/// Worst `|sum_e c_e (Av_e - mu_e)|` over random convex combinations of
/// the events, with small random rational coefficients.
fn hull_probe_max<W: Weight>(deltas: &[W], probes: usize, rng: &mut impl RngCore) -> W {
    if deltas.is_empty() {
        return W::zero();
    }
    let mut worst = W::zero();
    for _ in 0..probes {
        let ks: Vec<u64> = (0..deltas.len()).map(|_| 1 + rng.next_u64() % 8).collect();
        let total: u64 = ks.iter().sum();
        let mut mixed = W::zero();
        for (d, &k) in deltas.iter().zip(&ks) {
            mixed = mixed + W::from_ratio(k as i64, total as i64) * d.clone();
        }
        worst = max_w(worst, mixed.abs());
    }
    worst
}

fn run_trial<W: Weight>(
    sampler: &Sampler,
    atom_count: usize,
    events: &EventFamily,
    masses: &[W],
    n: usize,
    rng: &mut ChaCha8Rng,
    hull_probes: usize,
) -> Result<(W, Option<W>), EmpiricsError> {
    let sample: Vec<usize> = (0..n).map(|_| sampler.draw(rng)).collect();
    let counts = atom_counts(&sample, atom_count)?;
    let deltas = trial_deltas(&counts, n, events, masses);
    let dev = deltas.iter().map(|d| d.abs()).fold(W::zero(), max_w);
    let hull = if hull_probes > 0 {
        Some(hull_probe_max(&deltas, hull_probes, rng))
    } else {
        None
    };
    Ok((dev, hull))
}

/// One cell of a decay curve, reproducible on its own. Fan the trials out
/// however you like; with `trial_rng(seed, i, t)` the numbers match the
/// sequential run.
pub fn gc_trial<W: Weight>(
    mu: &KeislerMeasure<W>,
    events: &EventFamily,
    masses: &[W],
    n: usize,
    rng: &mut ChaCha8Rng,
    hull_probes: usize,
) -> Result<(W, Option<W>), EmpiricsError> {
    if n == 0 {
        return Err(EmpiricsError::EmptySample);
    }
    let sampler = Sampler::new(mu);
    run_trial(
        &sampler,
        mu.space().atom_count(),
        events,
        masses,
        n,
        rng,
        hull_probes,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct GcSummary<W> {
    pub n: usize,
    pub mean: W,
    pub max: W,
}

/// Deviation table of a sampling run: one row of trials per sample size,
/// with exact per-size summaries. Identical inputs and seed reproduce the
/// table no matter how the trials were scheduled.
#[derive(Debug, Clone, PartialEq)]
pub struct GcRun<W> {
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// `deviations[size_index][trial]`.
    pub deviations: Vec<Vec<W>>,
    /// Worst random convex-combination deviations, when probes were on.
    pub hull_deviations: Option<Vec<Vec<W>>>,
    pub summaries: Vec<GcSummary<W>>,
}

impl<W: Weight> GcRun<W> {
    /// Fraction of trials at one size with deviation at or below the bar.
    pub fn fraction_below(&self, size_index: usize, bar: &W) -> W {
        let row = &self.deviations[size_index];
        let hits = row.iter().filter(|d| *d <= bar).count();
        W::from_ratio(hits as i64, row.len() as i64)
    }
}

/// Samples the measure at each size for the given number of trials and
/// tabulates sup deviations over the events. `hull_probes` additionally
/// stresses random convex combinations of the events per trial.
pub fn gc_curve<W: Weight>(
    mu: &KeislerMeasure<W>,
    events: &EventFamily,
    sizes: &[usize],
    trials: usize,
    seed: u64,
    hull_probes: usize,
) -> Result<GcRun<W>, EmpiricsError> {
    if trials == 0 {
        return Err(EmpiricsError::NoTrials);
    }
    let masses = events.masses(mu);
    let sampler = Sampler::new(mu);
    let atom_count = mu.space().atom_count();
    let mut deviations = Vec::with_capacity(sizes.len());
    let mut hulls = Vec::with_capacity(sizes.len());
    let mut summaries = Vec::with_capacity(sizes.len());
    for (si, &n) in sizes.iter().enumerate() {
        if n == 0 {
            return Err(EmpiricsError::EmptySample);
        }
        let mut row = Vec::with_capacity(trials);
        let mut hull_row = Vec::with_capacity(trials);
        for t in 0..trials {
            let mut rng = trial_rng(seed, si, t);
            let (dev, hull) = run_trial(
                &sampler,
                atom_count,
                events,
                &masses,
                n,
                &mut rng,
                hull_probes,
            )?;
            row.push(dev);
            if let Some(h) = hull {
                hull_row.push(h);
            }
        }
        let mean = sum_w(row.iter().cloned()) * W::from_ratio(1, trials as i64);
        let max = row.iter().cloned().fold(W::zero(), max_w);
        summaries.push(GcSummary { n, mean, max });
        deviations.push(row);
        if hull_probes > 0 {
            hulls.push(hull_row);
        }
    }
    Ok(GcRun {
        sizes: sizes.to_vec(),
        trials,
        seed,
        deviations,
        hull_deviations: (hull_probes > 0).then_some(hulls),
        summaries,
    })
}

#[derive(Debug, Clone)]
pub struct ApproxStep<W> {
    pub n: usize,
    pub mass: W,
    pub exhaustive: bool,
    /// 95% confidence half-width when the mass is a Monte-Carlo estimate.
    pub ci_halfwidth: Option<f64>,
}

/// Outcome of the smallest-n search for a tuple event whose members all
/// epsilon-approximate the measure and whose product mass is at least
/// `1 - epsilon`. When no tested n qualifies, `found` is false and the
/// best tested level is reported.
#[derive(Debug, Clone)]
pub struct ApproxSearch<W> {
    pub epsilon: W,
    pub found: bool,
    pub n: usize,
    pub mass: W,
    pub exhaustive: bool,
    pub ci_halfwidth: Option<f64>,
    /// The qualifying tuples, explicit when the level was enumerated.
    /// Zero-weight atoms carry no mass and are left out.
    pub event_tuples: Vec<Vec<usize>>,
    /// Literal count of the event written out as a disjunction of tuple
    /// descriptions.
    pub formula_size: Option<u128>,
    pub trace: Vec<ApproxStep<W>>,
}

struct LevelState<'a, W: Weight> {
    mu: &'a KeislerMeasure<W>,
    events: &'a EventFamily,
    masses: &'a [W],
    support: &'a [usize],
    epsilon: &'a W,
    n: usize,
    hit_counts: Vec<u64>,
    tuple: Vec<usize>,
    good_mass: W,
    good: Vec<Vec<usize>>,
}

fn level_rec<W: Weight>(s: &mut LevelState<'_, W>, depth: usize, weight: W) {
    if depth == s.n {
        let ok = s.masses.iter().enumerate().all(|(e, mass)| {
            let emp = W::from_ratio(s.hit_counts[e] as i64, s.n as i64);
            (emp - mass.clone()).abs() <= *s.epsilon
        });
        if ok {
            s.good_mass = s.good_mass.clone() + weight;
            s.good.push(s.tuple.clone());
        }
        return;
    }
    for i in 0..s.support.len() {
        let a = s.support[i];
        let w = s.mu.weight(a).clone() * weight.clone();
        s.tuple.push(a);
        for e in 0..s.events.len() {
            if s.events.members[e][a] {
                s.hit_counts[e] += 1;
            }
        }
        level_rec(s, depth + 1, w);
        for e in 0..s.events.len() {
            if s.events.members[e][a] {
                s.hit_counts[e] -= 1;
            }
        }
        s.tuple.pop();
    }
}

fn exhaustive_level<W: Weight>(
    mu: &KeislerMeasure<W>,
    events: &EventFamily,
    masses: &[W],
    support: &[usize],
    n: usize,
    epsilon: &W,
) -> (W, Vec<Vec<usize>>) {
    let mut state = LevelState {
        mu,
        events,
        masses,
        support,
        epsilon,
        n,
        hit_counts: vec![0; events.len()],
        tuple: Vec::with_capacity(n),
        good_mass: W::zero(),
        good: Vec::new(),
    };
    level_rec(&mut state, 0, W::one());
    (state.good_mass, state.good)
}

fn mc_level<W: Weight>(
    mu: &KeislerMeasure<W>,
    events: &EventFamily,
    masses: &[W],
    n: usize,
    epsilon: &W,
    samples: usize,
    seed: u64,
) -> Result<(W, f64), EmpiricsError> {
    if samples == 0 {
        return Err(EmpiricsError::NoTrials);
    }
    let sampler = Sampler::new(mu);
    let atom_count = mu.space().atom_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(n as u64);
    let mut good = 0u64;
    for _ in 0..samples {
        let sample: Vec<usize> = (0..n).map(|_| sampler.draw(&mut rng)).collect();
        let counts = atom_counts(&sample, atom_count)?;
        if deviation_from_counts(&counts, n, events, masses) <= *epsilon {
            good += 1;
        }
    }
    let p = good as f64 / samples as f64;
    let hw = 1.96 * (p * (1.0 - p) / samples as f64).sqrt();
    Ok((W::from_ratio(good as i64, samples as i64), hw))
}

/// Searches `n = 1..=n_max` for the first level whose good-tuple set has
/// mass at least `1 - epsilon`. Levels with at most `exhaustive_cap`
/// support tuples are enumerated exactly; larger levels fall back to a
/// Monte-Carlo estimate and only count as found when the whole confidence
/// interval clears the target.
pub fn approx_event<W: Weight>(
    mu: &KeislerMeasure<W>,
    events: &EventFamily,
    epsilon: &W,
    n_max: usize,
    mc_samples: usize,
    seed: u64,
    exhaustive_cap: u128,
) -> Result<ApproxSearch<W>, EmpiricsError> {
    if !epsilon.is_positive_weight() {
        return Err(EmpiricsError::NonPositiveEpsilon);
    }
    if n_max == 0 {
        return Err(EmpiricsError::EmptySample);
    }
    let masses = events.masses(mu);
    let support = mu.support();
    let target = W::one() - epsilon.clone();
    let mut trace: Vec<ApproxStep<W>> = Vec::new();
    let mut best: Option<usize> = None;
    let mut best_tuples: Vec<Vec<usize>> = Vec::new();

    for n in 1..=n_max {
        let mut level_size: u128 = 1;
        for _ in 0..n {
            level_size = level_size.saturating_mul(support.len() as u128);
        }
        let (step, tuples, found_here) = if level_size <= exhaustive_cap {
            let (mass, tuples) = exhaustive_level(mu, events, &masses, &support, n, epsilon);
            let found = mass >= target;
            (
                ApproxStep {
                    n,
                    mass,
                    exhaustive: true,
                    ci_halfwidth: None,
                },
                tuples,
                found,
            )
        } else {
            let (mass, hw) = mc_level(mu, events, &masses, n, epsilon, mc_samples, seed)?;
            let found = mass.to_f64_lossy() - hw >= target.to_f64_lossy();
            (
                ApproxStep {
                    n,
                    mass,
                    exhaustive: false,
                    ci_halfwidth: Some(hw),
                },
                Vec::new(),
                found,
            )
        };
        let improves = match best {
            None => true,
            Some(b) => step.mass > trace[b].mass,
        };
        trace.push(step);
        let here = trace.len() - 1;
        if improves {
            best = Some(here);
            best_tuples = tuples.clone();
        }
        if found_here {
            let step = &trace[here];
            let formula_size = step.exhaustive.then(|| tuples.len() as u128 * n as u128);
            return Ok(ApproxSearch {
                epsilon: epsilon.clone(),
                found: true,
                n,
                mass: step.mass.clone(),
                exhaustive: step.exhaustive,
                ci_halfwidth: step.ci_halfwidth,
                event_tuples: tuples,
                formula_size,
                trace,
            });
        }
    }

    let b = best.expect("at least one level was tested");
    let step = trace[b].clone();
    let formula_size = step
        .exhaustive
        .then(|| best_tuples.len() as u128 * step.n as u128);
    Ok(ApproxSearch {
        epsilon: epsilon.clone(),
        found: false,
        n: step.n,
        mass: step.mass,
        exhaustive: step.exhaustive,
        ci_halfwidth: step.ci_halfwidth,
        event_tuples: best_tuples,
        formula_size,
        trace,
    })
}

/// One ladder entry: an explicit tuple event for one epsilon.
#[derive(Debug, Clone)]
pub struct FimEntry<W> {
    pub epsilon: W,
    pub n: usize,
    pub event: Vec<Vec<usize>>,
}

/// A ladder of approximation events, one per epsilon.
#[derive(Debug, Clone, Default)]
pub struct FimCertificate<W> {
    pub entries: Vec<FimEntry<W>>,
}

/// Exact verification outcome for one ladder entry: the event's product
/// mass must reach `1 - epsilon` and its worst member deviation must not
/// exceed epsilon.
#[derive(Debug, Clone)]
pub struct FimVerdict<W> {
    pub epsilon: W,
    pub n: usize,
    pub mass: W,
    pub worst_deviation: W,
    pub worst_tuple: Option<Vec<usize>>,
    pub mass_ok: bool,
    pub deviation_ok: bool,
    pub valid: bool,
}

pub fn check_fim_certificate<W: Weight>(
    mu: &KeislerMeasure<W>,
    events: &EventFamily,
    cert: &FimCertificate<W>,
) -> Result<Vec<FimVerdict<W>>, EmpiricsError> {
    let masses = events.masses(mu);
    let atom_count = mu.space().atom_count();
    let mut verdicts = Vec::with_capacity(cert.entries.len());
    for (ei, entry) in cert.entries.iter().enumerate() {
        if !entry.epsilon.is_positive_weight() {
            return Err(EmpiricsError::NonPositiveEpsilon);
        }
        if entry.n == 0 {
            return Err(EmpiricsError::CertificateEmpty { entry: ei });
        }
        for t in &entry.event {
            if t.len() != entry.n {
                return Err(EmpiricsError::CertificateArity {
                    entry: ei,
                    expected: entry.n,
                    got: t.len(),
                });
            }
            for &a in t {
                if a >= atom_count {
                    return Err(EmpiricsError::AtomOutOfRange(a, atom_count));
                }
            }
        }
        let mass = mu.product(entry.n).mass_of_tuples(&entry.event);
        let mut worst = W::zero();
        let mut worst_tuple = None;
        for t in &entry.event {
            let counts = atom_counts(t, atom_count)?;
            let dev = deviation_from_counts(&counts, entry.n, events, &masses);
            if worst_tuple.is_none() || dev > worst {
                worst = dev;
                worst_tuple = Some(t.clone());
            }
        }
        let mass_ok = mass >= W::one() - entry.epsilon.clone();
        let deviation_ok = worst <= entry.epsilon;
        verdicts.push(FimVerdict {
            epsilon: entry.epsilon.clone(),
            n: entry.n,
            mass,
            worst_deviation: worst,
            worst_tuple,
            mass_ok,
            deviation_ok,
            valid: mass_ok && deviation_ok,
        });
    }
    Ok(verdicts)
}

/// Runs the event search across the ladder and collects the exhaustively
/// found events into a certificate. Monte-Carlo finds are reported in the
/// searches but never certified.
pub fn fim_certificate_search<W: Weight>(
    mu: &KeislerMeasure<W>,
    events: &EventFamily,
    epsilons: &[W],
    n_max: usize,
    mc_samples: usize,
    seed: u64,
) -> Result<(FimCertificate<W>, Vec<ApproxSearch<W>>), EmpiricsError> {
    let mut entries = Vec::new();
    let mut searches = Vec::new();
    for eps in epsilons {
        let s = approx_event(mu, events, eps, n_max, mc_samples, seed, EXHAUSTIVE_CAP)?;
        if s.found && s.exhaustive {
            entries.push(FimEntry {
                epsilon: eps.clone(),
                n: s.n,
                event: s.event_tuples.clone(),
            });
        }
        searches.push(s);
    }
    Ok((FimCertificate { entries }, searches))
}

/// The two faces of "finitely approximated implies dependent": the
/// certificate's good-set masses, and the alternation-ratio trajectory.
#[derive(Debug, Clone)]
pub struct FimDependenceReport<W> {
    pub verdicts: Vec<FimVerdict<W>>,
    pub masses_certified: bool,
    pub rank: RankReport<W>,
}

pub fn fim_implies_dependent_experiment<W: Weight>(
    mu: &KeislerMeasure<W>,
    events: &EventFamily,
    cert: &FimCertificate<W>,
    k_max: usize,
    budget: u64,
) -> Result<FimDependenceReport<W>, EmpiricsError> {
    let verdicts = check_fim_certificate(mu, events, cert)?;
    let masses_certified = !verdicts.is_empty() && verdicts.iter().all(|v| v.mass_ok);
    let rank = dependence_rank(mu, k_max, None, budget)?;
    Ok(FimDependenceReport {
        verdicts,
        masses_certified,
        rank,
    })
}

/// Hypothesis panel for one measure over one fragment: definability over
/// the fragment, finite satisfiability in it, the shattering bound of the
/// formula, and a certificate search. Reports what holds and what was
/// found; a missing certificate is never treated as a refutation.
#[derive(Debug, Clone)]
pub struct DfsNipReport<W> {
    pub definability: DefinabilityReport,
    pub fs: FsReport,
    pub vc: VcReport,
    pub nip_bound: usize,
    pub searches: Vec<ApproxSearch<W>>,
    pub certificate: FimCertificate<W>,
    pub found_per_epsilon: Vec<bool>,
    pub hypotheses_hold: bool,
}

pub fn dfs_nip_fim_scenario<W: Weight>(
    mu: &KeislerMeasure<W>,
    m_sub: &[usize],
    epsilons: &[W],
    n_max: usize,
    mc_samples: usize,
    seed: u64,
    budget: u64,
) -> Result<DfsNipReport<W>, EmpiricsError> {
    let definability = mu.definable_over_fragment(m_sub)?;
    let space = mu.space();
    let battery = fragment_battery(space, m_sub);
    let fs = mu.finitely_satisfiable_in(m_sub, &battery)?;
    let vc = vc_of_space(space, None, budget)?;
    let nip_bound = vc.nip_threshold;
    let events = EventFamily::instance_columns(space, None)?;
    let (certificate, searches) =
        fim_certificate_search(mu, &events, epsilons, n_max, mc_samples, seed)?;
    let found_per_epsilon = searches.iter().map(|s| s.found).collect();
    let hypotheses_hold = definability.definable && fs.satisfied;
    Ok(DfsNipReport {
        definability,
        fs,
        vc,
        nip_bound,
        searches,
        certificate,
        found_per_epsilon,
        hypotheses_hold,
    })
}
