//! Finitely supported Keisler measures over type spaces.
//!
//! A measure assigns one weight per atom; weights are nonnegative and sum to
//! exactly one unit of mass (exact for rationals, tolerance-checked for
//! floats). Instances and Boolean combinations of instances are measured by
//! summing the weights of the atoms that decide them positively.

use crate::logic::{evaluate_phi_formula, EvalError, PhiFormula};
use crate::typespace::{tuples_over, TypeError, TypeSpace};
use crate::weight::{sum_w, Weight};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("expected {expected} weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("negative weight at atom {0}")]
    NegativeWeight(usize),
    #[error("weights sum to {0}, not to one unit of mass")]
    MassNotOne(String),
    #[error("atom index {0} is out of range ({1} atoms)")]
    AtomOutOfRange(usize, usize),
    #[error("average needs at least one atom")]
    EmptyAverage,
    #[error("parameter {0} is foreign to the base structure of size {1}")]
    ForeignParameter(usize, usize),
    #[error("coefficient {0} is outside [0, 1]")]
    BadCoefficient(String),
    #[error("measures live on different type spaces")]
    SpaceMismatch,
    #[error("pushforward map sends atom {0} to {1}, target has {2} atoms")]
    BadPushforwardTarget(usize, usize, usize),
    #[error("pushforward map covers {got} atoms, space has {expected}")]
    BadPushforwardLength { expected: usize, got: usize },
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A finitely additive probability measure with finite support: one weight
/// per atom of a type space.
#[derive(Debug, Clone)]
pub struct KeislerMeasure<W: Weight> {
    space: Arc<TypeSpace>,
    weights: Vec<W>,
}

impl<W: Weight> KeislerMeasure<W> {
    pub fn new(space: Arc<TypeSpace>, weights: Vec<W>) -> Result<Self, MeasureError> {
        if weights.len() != space.atom_count() {
            return Err(MeasureError::WeightCount {
                expected: space.atom_count(),
                got: weights.len(),
            });
        }
        if let Some(i) = weights.iter().position(|w| *w < W::zero()) {
            return Err(MeasureError::NegativeWeight(i));
        }
        let total = sum_w(weights.iter().cloned());
        if !total.is_unit_total() {
            return Err(MeasureError::MassNotOne(total.to_string()));
        }
        Ok(KeislerMeasure { space, weights })
    }

    /// Equal weight on every atom.
    pub fn uniform(space: Arc<TypeSpace>) -> Result<Self, MeasureError> {
        let n = space.atom_count() as i64;
        let w = W::from_ratio(1, n.max(1));
        Self::new(space, vec![w; n as usize])
    }

    /// All mass on one atom.
    pub fn dirac(space: Arc<TypeSpace>, atom: usize) -> Result<Self, MeasureError> {
        if atom >= space.atom_count() {
            return Err(MeasureError::AtomOutOfRange(atom, space.atom_count()));
        }
        let mut weights = vec![W::zero(); space.atom_count()];
        weights[atom] = W::one();
        Self::new(space, weights)
    }

    /// Counting average of the listed atoms (repetitions allowed).
    pub fn average(space: Arc<TypeSpace>, atoms: &[usize]) -> Result<Self, MeasureError> {
        if atoms.is_empty() {
            return Err(MeasureError::EmptyAverage);
        }
        let mut counts = vec![0i64; space.atom_count()];
        for &a in atoms {
            if a >= space.atom_count() {
                return Err(MeasureError::AtomOutOfRange(a, space.atom_count()));
            }
            counts[a] += 1;
        }
        let n = atoms.len() as i64;
        let weights = counts.into_iter().map(|c| W::from_ratio(c, n)).collect();
        Self::new(space, weights)
    }

    pub fn space(&self) -> &Arc<TypeSpace> {
        &self.space
    }

    pub fn weights(&self) -> &[W] {
        &self.weights
    }

    pub fn weight(&self, atom: usize) -> &W {
        &self.weights[atom]
    }

    /// Atoms carrying positive weight.
    pub fn support(&self) -> Vec<usize> {
        (0..self.weights.len())
            .filter(|&i| self.weights[i] > W::zero())
            .collect()
    }

    /// Whether the whole mass sits on realized atoms.
    pub fn is_purely_atomic_trivial(&self) -> bool {
        self.support()
            .into_iter()
            .all(|i| self.space.atoms[i].is_realized())
    }

    /// Mass of an explicit atom set.
    pub fn mass_of_atoms(&self, atoms: &[usize]) -> W {
        sum_w(atoms.iter().map(|&a| self.weights[a].clone()))
    }

    /// Mass of the atoms flagged true.
    pub fn mass_of_mask(&self, mask: &[bool]) -> W {
        sum_w(
            mask.iter()
                .zip(&self.weights)
                .filter(|(&m, _)| m)
                .map(|(_, w)| w.clone()),
        )
    }

    fn check_params(&self, params: &[usize]) -> Result<(), MeasureError> {
        for &p in params {
            if p >= self.space.base.size {
                return Err(MeasureError::ForeignParameter(p, self.space.base.size));
            }
        }
        Ok(())
    }

    /// Measure of one instance of the space's formula at a base parameter
    /// tuple.
    pub fn measure_of_instance(&self, params: &[usize]) -> Result<W, MeasureError> {
        self.check_params(params)?;
        let mut total = W::zero();
        for (i, w) in self.weights.iter().enumerate() {
            if *w > W::zero() && self.space.decide_instance(i, &self.space.formula, params)? {
                total = total + w.clone();
            }
        }
        Ok(total)
    }

    /// Measure of a Boolean combination of instances. Parameters must live
    /// in the base structure; extension elements have no measure-side
    /// decision rule here.
    pub fn measure_of_phi(&self, theta: &PhiFormula) -> Result<W, MeasureError> {
        let size = self.space.base.size;
        theta.for_each_instance(&mut |_, params| match params.iter().find(|&&p| p >= size) {
            Some(&p) => Err(MeasureError::ForeignParameter(p, size)),
            None => Ok(()),
        })?;
        let mut total = W::zero();
        for i in 0..self.weights.len() {
            if self.weights[i] > W::zero() && self.space.decide_phi(i, theta)? {
                total = total + self.weights[i].clone();
            }
        }
        Ok(total)
    }

    /// Image measure along an atom map into another space. The identity
    /// `pushforward(map, nu).mass_of_atoms(X) = self.mass_of_atoms(preimage
    /// of X)` holds by construction and is exercised in tests.
    pub fn pushforward(
        &self,
        map: &[usize],
        target: Arc<TypeSpace>,
    ) -> Result<KeislerMeasure<W>, MeasureError> {
        if map.len() != self.weights.len() {
            return Err(MeasureError::BadPushforwardLength {
                expected: self.weights.len(),
                got: map.len(),
            });
        }
        let mut weights = vec![W::zero(); target.atom_count()];
        for (i, &img) in map.iter().enumerate() {
            if img >= target.atom_count() {
                return Err(MeasureError::BadPushforwardTarget(
                    i,
                    img,
                    target.atom_count(),
                ));
            }
            weights[img] = weights[img].clone() + self.weights[i].clone();
        }
        KeislerMeasure::new(target, weights)
    }

    /// `r * self + (1 - r) * other`, on the same space.
    pub fn convex_combine(
        &self,
        r: &W,
        other: &KeislerMeasure<W>,
    ) -> Result<KeislerMeasure<W>, MeasureError> {
        if *r < W::zero() || *r > W::one() {
            return Err(MeasureError::BadCoefficient(r.to_string()));
        }
        if !self.same_space(other) {
            return Err(MeasureError::SpaceMismatch);
        }
        let one_minus = W::one() - r.clone();
        let weights = self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| r.clone() * a.clone() + one_minus.clone() * b.clone())
            .collect();
        KeislerMeasure::new(Arc::clone(&self.space), weights)
    }

    pub fn same_space(&self, other: &KeislerMeasure<W>) -> bool {
        Arc::ptr_eq(&self.space, &other.space)
            || (self.space.atoms == other.space.atoms && self.space.formula == other.space.formula)
    }

    /// The k-fold product, a measure on atom tuples.
    pub fn product(&self, k: usize) -> ProductMeasure<'_, W> {
        ProductMeasure { factor: self, k }
    }

    /// Every battery formula of positive measure must be realized by a
    /// tuple over `m_sub`; returns the first failure.
    pub fn finitely_satisfiable_in(
        &self,
        m_sub: &[usize],
        battery: &[PhiFormula],
    ) -> Result<crate::typespace::FsReport, MeasureError> {
        let arity = self.space.formula.object_arity();
        let candidates = tuples_over(m_sub, arity);
        let mut positive = Vec::new();
        for (i, theta) in battery.iter().enumerate() {
            if !self.measure_of_phi(theta)?.is_positive_weight() {
                continue;
            }
            positive.push(i);
            let mut realized = false;
            for t in &candidates {
                if evaluate_phi_formula(&self.space.base, theta, t)? {
                    realized = true;
                    break;
                }
            }
            if !realized {
                return Ok(crate::typespace::FsReport {
                    satisfied: false,
                    failing: Some(i),
                    positive,
                });
            }
        }
        Ok(crate::typespace::FsReport {
            satisfied: true,
            failing: None,
            positive,
        })
    }

    /// Checks that the instance map factors through traces over the
    /// fragment: parameter tuples with identical dual traces over `m_sub`
    /// must get equal measure. Returns the first violating pair otherwise.
    pub fn definable_over_fragment(
        &self,
        m_sub: &[usize],
    ) -> Result<DefinabilityReport, MeasureError> {
        let object_arity = self.space.formula.object_arity();
        let probes = tuples_over(m_sub, object_arity);
        let params = self.space.base.all_tuples(self.space.formula.param_arity());
        let mut groups: std::collections::BTreeMap<Vec<bool>, (Vec<usize>, W)> =
            std::collections::BTreeMap::new();
        for b in &params {
            let mut trace = Vec::with_capacity(probes.len());
            for a in &probes {
                trace.push(crate::logic::eval_instance(
                    &self.space.base,
                    &self.space.formula,
                    a,
                    b,
                )?);
            }
            let value = self.measure_of_instance(b)?;
            match groups.get(&trace) {
                None => {
                    groups.insert(trace, (b.clone(), value));
                }
                Some((first, expected)) => {
                    if *expected != value {
                        return Ok(DefinabilityReport {
                            definable: false,
                            violating: Some((first.clone(), b.clone())),
                            fragment: m_sub.to_vec(),
                        });
                    }
                }
            }
        }
        Ok(DefinabilityReport {
            definable: true,
            violating: None,
            fragment: m_sub.to_vec(),
        })
    }

    /// Convenience: one weight per realized element tuple, uniform.
    pub fn realized_uniform(
        base: Arc<crate::logic::FiniteStructure>,
        theory: crate::typespace::TheoryKind,
        formula: crate::logic::PartitionedFormula,
    ) -> Result<Self, MeasureError> {
        let (space, _) = TypeSpace::realized(base, theory, formula, None)?;
        Self::uniform(Arc::new(space))
    }
}

/// Two parameter tuples with equal fragment traces but different measures
/// witness a definability failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DefinabilityReport {
    pub definable: bool,
    pub violating: Option<(Vec<usize>, Vec<usize>)>,
    pub fragment: Vec<usize>,
}

/// The k-fold product of a measure, evaluated on tuple events by direct
/// enumeration.
pub struct ProductMeasure<'a, W: Weight> {
    pub factor: &'a KeislerMeasure<W>,
    pub k: usize,
}

impl<W: Weight> ProductMeasure<'_, W> {
    /// Mass of the event given as a predicate on atom index tuples.
    pub fn mass_where(&self, mut event: impl FnMut(&[usize]) -> bool) -> W {
        let n = self.factor.weights().len();
        if self.k == 0 {
            return if event(&[]) { W::one() } else { W::zero() };
        }
        let mut idx = vec![0usize; self.k];
        let mut total = W::zero();
        loop {
            if event(&idx) {
                let mut w = W::one();
                for &i in &idx {
                    w = w * self.factor.weights()[i].clone();
                }
                total = total + w;
            }
            let mut d = self.k;
            loop {
                if d == 0 {
                    return total;
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

    /// Mass of an explicit tuple list (duplicates counted once).
    pub fn mass_of_tuples(&self, tuples: &[Vec<usize>]) -> W {
        let mut seen: std::collections::BTreeSet<&[usize]> = std::collections::BTreeSet::new();
        let mut total = W::zero();
        for t in tuples {
            if t.len() == self.k && seen.insert(t.as_slice()) {
                let mut w = W::one();
                for &i in t {
                    w = w * self.factor.weights()[i].clone();
                }
                total = total + w;
            }
        }
        total
    }
}

/// The triangle bound `|av(theta) - combined(theta)|
/// <= r |av(theta) - mu(theta)| + (1-r) |av(theta) - nu(theta)|`
/// checked exactly on the supplied events.
pub fn convex_deviation_holds<W: Weight>(
    r: &W,
    mu: &KeislerMeasure<W>,
    nu: &KeislerMeasure<W>,
    av: &KeislerMeasure<W>,
    events: &[PhiFormula],
) -> Result<bool, MeasureError> {
    let combined = mu.convex_combine(r, nu)?;
    let one_minus = W::one() - r.clone();
    for theta in events {
        let a = av.measure_of_phi(theta)?;
        let lhs = (a.clone() - combined.measure_of_phi(theta)?).abs();
        let rhs = r.clone() * (a.clone() - mu.measure_of_phi(theta)?).abs()
            + one_minus.clone() * (a - nu.measure_of_phi(theta)?).abs();
        if lhs > rhs {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{parse_formula, FiniteStructure};
    use crate::typespace::{CutSide, TheoryKind};
    use crate::Rat;

    fn l4_space() -> Arc<TypeSpace> {
        let base = Arc::new(FiniteStructure::linear_order(4));
        let pf = parse_formula(&base.signature, "x < y", &["x"], &["y"]).unwrap();
        Arc::new(
            TypeSpace::realized(base, TheoryKind::Dlo, pf, None)
                .unwrap()
                .0,
        )
    }

    fn rat(p: i64, q: i64) -> Rat {
        crate::rat(p, q)
    }

    #[test]
    fn uniform_mass_is_exactly_one() {
        let mu = KeislerMeasure::<Rat>::uniform(l4_space()).unwrap();
        assert_eq!(sum_w(mu.weights().iter().cloned()), rat(1, 1));
    }

    #[test]
    fn dirac_is_an_indicator() {
        let space = l4_space();
        let mu = KeislerMeasure::<Rat>::dirac(Arc::clone(&space), 1).unwrap();
        // Instance x < 2 holds exactly on atoms 0 and 1.
        assert_eq!(mu.measure_of_instance(&[2]).unwrap(), rat(1, 1));
        assert_eq!(mu.measure_of_instance(&[1]).unwrap(), rat(0, 1));
    }

    #[test]
    fn uniform_instance_measure_counts_rows() {
        let mu = KeislerMeasure::<Rat>::uniform(l4_space()).unwrap();
        // x < 2 holds for elements 0 and 1.
        assert_eq!(mu.measure_of_instance(&[2]).unwrap(), rat(2, 4));
    }

    #[test]
    fn average_counts_multiplicity() {
        let space = l4_space();
        let mu = KeislerMeasure::<Rat>::average(space, &[0, 0, 2]).unwrap();
        assert_eq!(*mu.weight(0), rat(2, 3));
        assert_eq!(*mu.weight(2), rat(1, 3));
        assert_eq!(*mu.weight(1), rat(0, 1));
    }

    #[test]
    fn masses_must_sum_to_one() {
        let space = l4_space();
        let err = KeislerMeasure::<Rat>::new(
            Arc::clone(&space),
            vec![rat(1, 2), rat(1, 2), rat(1, 2), rat(-1, 2)],
        )
        .unwrap_err();
        assert!(matches!(err, MeasureError::NegativeWeight(3)));
        let err =
            KeislerMeasure::<Rat>::new(space, vec![rat(1, 2), rat(1, 4), rat(1, 8), rat(1, 16)])
                .unwrap_err();
        assert!(matches!(err, MeasureError::MassNotOne(_)));
    }

    #[test]
    fn pushforward_matches_preimage_mass() {
        let space = l4_space();
        let mu = KeislerMeasure::<Rat>::uniform(Arc::clone(&space)).unwrap();
        let (restricted, map) = space.restrict_to_columns(&[1, 2]).unwrap();
        let target = Arc::new(restricted);
        let nu = mu.pushforward(&map, Arc::clone(&target)).unwrap();
        assert_eq!(nu.weights(), &[rat(1, 4), rat(1, 4), rat(1, 2)]);
        // Pushforward identity on every subset of the three target atoms.
        for mask in 0u8..8 {
            let atoms: Vec<usize> = (0..3).filter(|&i| mask >> i & 1 == 1).collect();
            let direct = nu.mass_of_atoms(&atoms);
            let pre: Vec<usize> = (0..4).filter(|&i| atoms.contains(&map[i])).collect();
            assert_eq!(direct, mu.mass_of_atoms(&pre));
        }
    }

    #[test]
    fn product_of_diagonal_event() {
        let mu = KeislerMeasure::<Rat>::uniform(l4_space()).unwrap();
        let diag = mu.product(2).mass_where(|t| t[0] == t[1]);
        assert_eq!(diag, rat(1, 4));
        let full = mu.product(3).mass_where(|_| true);
        assert_eq!(full, rat(1, 1));
    }

    #[test]
    fn dirac_powers_concentrate() {
        let space = l4_space();
        let mu = KeislerMeasure::<Rat>::dirac(space, 2).unwrap();
        let mass = mu.product(3).mass_where(|t| t == [2, 2, 2]);
        assert_eq!(mass, rat(1, 1));
    }

    #[test]
    fn convex_combination_of_diracs_is_the_average() {
        let space = l4_space();
        let d0 = KeislerMeasure::<Rat>::dirac(Arc::clone(&space), 0).unwrap();
        let d1 = KeislerMeasure::<Rat>::dirac(Arc::clone(&space), 1).unwrap();
        let half = d0.convex_combine(&rat(1, 2), &d1).unwrap();
        let avg = KeislerMeasure::<Rat>::average(space, &[0, 1]).unwrap();
        assert_eq!(half.weights(), avg.weights());
        // r = 1 returns the left measure.
        let left = d0.convex_combine(&rat(1, 1), &d1).unwrap();
        assert_eq!(left.weights(), d0.weights());
    }

    #[test]
    fn support_and_triviality() {
        let space = l4_space();
        let mu = KeislerMeasure::<Rat>::average(Arc::clone(&space), &[1, 3]).unwrap();
        assert_eq!(mu.support(), vec![1, 3]);
        assert!(mu.is_purely_atomic_trivial());

        let base = Arc::new(FiniteStructure::linear_order(4));
        let pf = parse_formula(&base.signature, "x < y", &["x"], &["y"]).unwrap();
        let cut_space = Arc::new(
            TypeSpace::from_atoms(
                base,
                TheoryKind::Dlo,
                pf,
                vec![crate::typespace::TypeAtom::DloCut {
                    position: 1,
                    side: CutSide::Above,
                }],
                None,
            )
            .unwrap(),
        );
        let nu = KeislerMeasure::<Rat>::dirac(cut_space, 0).unwrap();
        assert!(!nu.is_purely_atomic_trivial());
    }

    #[test]
    fn foreign_parameters_are_rejected() {
        let mu = KeislerMeasure::<Rat>::uniform(l4_space()).unwrap();
        assert!(matches!(
            mu.measure_of_instance(&[9]),
            Err(MeasureError::ForeignParameter(9, 4))
        ));
    }

    #[test]
    fn phi_combination_measure() {
        let mu = KeislerMeasure::<Rat>::uniform(l4_space()).unwrap();
        let pf = mu.space().formula.clone();
        // x < 2 & !(x < 1): exactly element 1.
        let theta = PhiFormula::And(vec![
            PhiFormula::instance(&pf, &[2]),
            PhiFormula::instance(&pf, &[1]).negated(),
        ]);
        assert_eq!(mu.measure_of_phi(&theta).unwrap(), rat(1, 4));
        // Empty conjunction has full mass.
        assert_eq!(
            mu.measure_of_phi(&PhiFormula::And(vec![])).unwrap(),
            rat(1, 1)
        );
    }

    #[test]
    fn coheir_dirac_above_fragment_is_not_definable_there() {
        let base = Arc::new(FiniteStructure::linear_order(10));
        let pf = parse_formula(&base.signature, "x < y", &["x"], &["y"]).unwrap();
        let space = Arc::new(
            TypeSpace::from_atoms(
                base,
                TheoryKind::Dlo,
                pf,
                vec![crate::typespace::TypeAtom::DloCut {
                    position: 5,
                    side: CutSide::Above,
                }],
                None,
            )
            .unwrap(),
        );
        let mu = KeislerMeasure::<Rat>::dirac(space, 0).unwrap();
        let report = mu.definable_over_fragment(&[0, 1, 2, 3]).unwrap();
        assert!(!report.definable);
        // Parameters 4 and 5 (or 5 and 6) share the all-ones fragment trace
        // but straddle the cut.
        let (b, b2) = report.violating.unwrap();
        assert!(b[0] >= 4 && b2[0] >= 4 && b != b2);
    }

    #[test]
    fn realized_uniform_is_definable_over_the_full_base() {
        let mu = KeislerMeasure::<Rat>::uniform(l4_space()).unwrap();
        let report = mu.definable_over_fragment(&[0, 1, 2, 3]).unwrap();
        assert!(report.definable);
    }

    #[test]
    fn measure_satisfiability_follows_positive_mass() {
        let base = Arc::new(FiniteStructure::linear_order(4));
        let pf = parse_formula(&base.signature, "x < y", &["x"], &["y"]).unwrap();
        let space = Arc::new(
            TypeSpace::from_atoms(
                base,
                TheoryKind::Dlo,
                pf.clone(),
                vec![crate::typespace::TypeAtom::DloCut {
                    position: 1,
                    side: CutSide::Above,
                }],
                None,
            )
            .unwrap(),
        );
        let mu = KeislerMeasure::<Rat>::dirac(space, 0).unwrap();
        let battery: Vec<PhiFormula> = (0..4)
            .map(|b| PhiFormula::instance(&pf, &[b]).negated())
            .collect();
        // The cut above 1 decides !(x<b) positively only for b in {0, 1};
        // element 1 realizes both.
        let report = mu.finitely_satisfiable_in(&[0, 1, 2, 3], &battery).unwrap();
        assert!(report.satisfied);
        assert_eq!(report.positive, vec![0, 1]);
    }

    #[test]
    fn convexity_deviation_bound_holds_exactly() {
        let space = l4_space();
        let mu = KeislerMeasure::<Rat>::dirac(Arc::clone(&space), 0).unwrap();
        let nu = KeislerMeasure::<Rat>::uniform(Arc::clone(&space)).unwrap();
        let av = KeislerMeasure::<Rat>::average(Arc::clone(&space), &[1, 2]).unwrap();
        let pf = space.formula.clone();
        let events: Vec<PhiFormula> = (0..4).map(|b| PhiFormula::instance(&pf, &[b])).collect();
        assert!(convex_deviation_holds(&rat(1, 3), &mu, &nu, &av, &events).unwrap());
    }

    #[test]
    fn float_lane_compiles_and_agrees_on_simple_masses() {
        let mu = KeislerMeasure::<f64>::uniform(l4_space()).unwrap();
        assert!((mu.measure_of_instance(&[2]).unwrap() - 0.5).abs() < 1e-12);
    }
}
