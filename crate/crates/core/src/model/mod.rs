//! Continuous VASS, linear path schemes, runs, and run simulation.

mod format;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::rational::{Rational, RationalVec};

pub use format::{
    parse_configuration, parse_lps, parse_query, parse_vass, parse_witness, write_configuration,
    write_lps, write_query, write_vass, write_witness, QueryFile,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("duplicate state `{0}`")]
    DuplicateState(String),
    #[error("duplicate transition {0}->{1}")]
    DuplicateTransition(String, String),
    #[error("no transition {0}->{1}")]
    UnknownTransition(String, String),
    #[error("zero test on coordinate {coord} outside 1..={dim}")]
    BadZeroTest { coord: usize, dim: usize },
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("invalid scheme: {0}")]
    SchemeInvalid(String),
}

/// Semantics under which a run is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SemanticsMode {
    /// Counters range over the rationals.
    Q,
    /// Counters must stay nonnegative.
    QNonNeg,
    /// Rational counters with zero tests.
    ZTestContinuous,
    /// Integer counters, unit coefficients, zero tests.
    ZTestDiscrete,
}

impl SemanticsMode {
    pub fn name(self) -> &'static str {
        match self {
            SemanticsMode::Q => "q",
            SemanticsMode::QNonNeg => "qnonneg",
            SemanticsMode::ZTestContinuous => "ztest-cont",
            SemanticsMode::ZTestDiscrete => "ztest-disc",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "q" => SemanticsMode::Q,
            "qnonneg" => SemanticsMode::QNonNeg,
            "ztest-cont" => SemanticsMode::ZTestContinuous,
            "ztest-disc" => SemanticsMode::ZTestDiscrete,
            _ => return None,
        })
    }

    fn checks_zero_tests(self) -> bool {
        matches!(self, SemanticsMode::ZTestContinuous | SemanticsMode::ZTestDiscrete)
    }
}

impl fmt::Display for SemanticsMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A continuous vector addition system with states and optional zero tests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vass {
    dim: usize,
    states: Vec<String>,
    state_index: HashMap<String, usize>,
    transitions: Vec<(usize, usize)>,
    trans_index: HashMap<(usize, usize), usize>,
    labels: Vec<RationalVec>,
    /// Coordinates (0-based) tested at each state.
    tested: Vec<Vec<usize>>,
}

impl Vass {
    pub fn new(dim: usize) -> Result<Self, ModelError> {
        if dim == 0 {
            return Err(ModelError::ZeroDimension);
        }
        Ok(Vass {
            dim,
            states: Vec::new(),
            state_index: HashMap::new(),
            transitions: Vec::new(),
            trans_index: HashMap::new(),
            labels: Vec::new(),
            tested: Vec::new(),
        })
    }

    /// Adds a state; `ztests` lists 0-based coordinates that must be zero there.
    pub fn add_state(&mut self, name: &str, ztests: &[usize]) -> Result<usize, ModelError> {
        if self.state_index.contains_key(name) {
            return Err(ModelError::DuplicateState(name.to_string()));
        }
        let mut coords: Vec<usize> = ztests.to_vec();
        coords.sort_unstable();
        coords.dedup();
        if let Some(&c) = coords.iter().find(|&&c| c >= self.dim) {
            return Err(ModelError::BadZeroTest { coord: c + 1, dim: self.dim });
        }
        let id = self.states.len();
        self.states.push(name.to_string());
        self.state_index.insert(name.to_string(), id);
        self.tested.push(coords);
        Ok(id)
    }

    pub fn add_transition(
        &mut self,
        src: usize,
        dst: usize,
        label: RationalVec,
    ) -> Result<usize, ModelError> {
        if label.dim() != self.dim {
            return Err(ModelError::DimensionMismatch { expected: self.dim, found: label.dim() });
        }
        for s in [src, dst] {
            if s >= self.states.len() {
                return Err(ModelError::UnknownState(format!("#{s}")));
            }
        }
        if self.trans_index.contains_key(&(src, dst)) {
            return Err(ModelError::DuplicateTransition(
                self.states[src].clone(),
                self.states[dst].clone(),
            ));
        }
        let id = self.transitions.len();
        self.transitions.push((src, dst));
        self.trans_index.insert((src, dst), id);
        self.labels.push(label);
        Ok(id)
    }

    /// Convenience wrapper taking state names and integer labels.
    pub fn add_transition_named(
        &mut self,
        src: &str,
        dst: &str,
        label: RationalVec,
    ) -> Result<usize, ModelError> {
        let s = self.state_id(src)?;
        let t = self.state_id(dst)?;
        self.add_transition(s, t, label)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.transitions.len()
    }

    pub fn state_name(&self, s: usize) -> &str {
        &self.states[s]
    }

    pub fn state_id(&self, name: &str) -> Result<usize, ModelError> {
        self.state_index
            .get(name)
            .copied()
            .ok_or_else(|| ModelError::UnknownState(name.to_string()))
    }

    pub fn transition(&self, t: usize) -> (usize, usize) {
        self.transitions[t]
    }

    pub fn transitions(&self) -> &[(usize, usize)] {
        &self.transitions
    }

    pub fn label(&self, t: usize) -> &RationalVec {
        &self.labels[t]
    }

    pub fn find_transition(&self, src: usize, dst: usize) -> Option<usize> {
        self.trans_index.get(&(src, dst)).copied()
    }

    pub fn find_transition_named(&self, src: &str, dst: &str) -> Result<usize, ModelError> {
        let s = self.state_id(src)?;
        let t = self.state_id(dst)?;
        self.find_transition(s, t)
            .ok_or_else(|| ModelError::UnknownTransition(src.to_string(), dst.to_string()))
    }

    /// 0-based coordinates tested at `state`.
    pub fn zero_tests(&self, state: usize) -> &[usize] {
        &self.tested[state]
    }

    /// States in Z_j for the 0-based coordinate `coord`.
    pub fn tested_states(&self, coord: usize) -> Vec<usize> {
        (0..self.states.len()).filter(|&s| self.tested[s].contains(&coord)).collect()
    }

    pub fn has_zero_tests(&self) -> bool {
        self.tested.iter().any(|z| !z.is_empty())
    }

    pub fn transition_name(&self, t: usize) -> String {
        let (s, d) = self.transitions[t];
        format!("{}->{}", self.states[s], self.states[d])
    }

    /// True if `path` is chainable (consecutive transitions share endpoints).
    pub fn chains(&self, path: &[usize]) -> bool {
        path.iter().all(|&t| t < self.transitions.len())
            && path.windows(2).all(|w| self.transitions[w[0]].1 == self.transitions[w[1]].0)
    }

    /// Sum of the labels along `path`.
    pub fn effect(&self, path: &[usize]) -> RationalVec {
        let mut acc = RationalVec::zeros(self.dim);
        for &t in path {
            acc = &acc + &self.labels[t];
        }
        acc
    }
}

/// A state together with counter values.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    pub state: usize,
    pub values: RationalVec,
}

impl Configuration {
    pub fn new(state: usize, values: RationalVec) -> Self {
        Configuration { state, values }
    }
}

/// Transition support of a path.
pub fn support(path: &[usize]) -> BTreeSet<usize> {
    path.iter().copied().collect()
}

/// A linear path scheme `π0 χ1* π1 … χn* πn`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Lps {
    paths: Vec<Vec<usize>>,
    cycles: Vec<Vec<usize>>,
}

impl Lps {
    /// Builds a scheme; `paths.len()` must equal `cycles.len() + 1`.
    pub fn new(vass: &Vass, paths: Vec<Vec<usize>>, cycles: Vec<Vec<usize>>) -> Result<Self, ModelError> {
        if paths.len() != cycles.len() + 1 {
            return Err(ModelError::SchemeInvalid(format!(
                "{} paths for {} cycles",
                paths.len(),
                cycles.len()
            )));
        }
        for (i, c) in cycles.iter().enumerate() {
            if c.is_empty() {
                return Err(ModelError::SchemeInvalid(format!("cycle {} is empty", i + 1)));
            }
            if !vass.chains(c) || vass.transition(c[0]).0 != vass.transition(*c.last().unwrap()).1 {
                return Err(ModelError::SchemeInvalid(format!("cycle {} is not closed", i + 1)));
            }
        }
        let lps = Lps { paths, cycles };
        if !vass.chains(&lps.flatten()) {
            return Err(ModelError::SchemeInvalid("segments do not chain".into()));
        }
        Ok(lps)
    }

    /// Scheme consisting of a single path.
    pub fn from_path(vass: &Vass, path: Vec<usize>) -> Result<Self, ModelError> {
        Lps::new(vass, vec![path], Vec::new())
    }

    pub fn paths(&self) -> &[Vec<usize>] {
        &self.paths
    }

    pub fn cycles(&self) -> &[Vec<usize>] {
        &self.cycles
    }

    pub fn num_cycles(&self) -> usize {
        self.cycles.len()
    }

    /// Segments in order `π0, χ1, π1, …`, tagged with `true` for cycles.
    pub fn segments(&self) -> impl Iterator<Item = (bool, &[usize])> {
        let n = self.cycles.len();
        (0..2 * n + 1).map(move |i| {
            if i % 2 == 0 {
                (false, self.paths[i / 2].as_slice())
            } else {
                (true, self.cycles[i / 2].as_slice())
            }
        })
    }

    /// The path `π0 χ1 π1 … χn πn`.
    pub fn flatten(&self) -> Vec<usize> {
        self.segments().flat_map(|(_, s)| s.iter().copied()).collect()
    }

    /// The path `π0 π1 … πn`.
    pub fn path_concat(&self) -> Vec<usize> {
        self.paths.iter().flatten().copied().collect()
    }

    pub fn support(&self) -> BTreeSet<usize> {
        support(&self.flatten())
    }

    /// First source state of the scheme, if nonempty.
    pub fn first_state(&self, vass: &Vass) -> Option<usize> {
        self.flatten().first().map(|&t| vass.transition(t).0)
    }

    pub fn last_state(&self, vass: &Vass) -> Option<usize> {
        self.flatten().last().map(|&t| vass.transition(t).1)
    }

    pub fn is_empty(&self) -> bool {
        self.paths.iter().all(Vec::is_empty) && self.cycles.is_empty()
    }

    /// Total number of transition occurrences.
    pub fn len(&self) -> usize {
        self.paths.iter().chain(&self.cycles).map(Vec::len).sum()
    }
}

/// A run: start configuration and a sequence of (transition, coefficient) steps.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RunWitness {
    pub start: Configuration,
    pub steps: Vec<(usize, Rational)>,
}

impl RunWitness {
    pub fn new(start: Configuration) -> Self {
        RunWitness { start, steps: Vec::new() }
    }

    pub fn push(&mut self, t: usize, alpha: Rational) {
        self.steps.push((t, alpha));
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("step {step}: coefficient {alpha} outside (0, 1]")]
    CoefficientOutOfRange { step: usize, alpha: Rational },
    #[error("step {step}: coordinate {coord} is negative")]
    NegativeCounter { step: usize, coord: usize },
    #[error("step {step}: zero test on coordinate {coord} failed at state {state}")]
    ZeroTestFailed { state: String, coord: usize, step: usize },
    #[error("step {step}: transition does not continue the run")]
    BrokenChain { step: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("step {step}: discrete runs need coefficient 1")]
    NonUnitCoefficient { step: usize },
    #[error("step {step}: counter value is not an integer")]
    NonIntegerCounter { step: usize },
}

/// Checks the zero tests and sign constraints of `x` at `state`; `step` is
/// the position (0 = start configuration, i = after the i-th step).
fn check_position(
    vass: &Vass,
    state: usize,
    x: &RationalVec,
    step: usize,
    mode: SemanticsMode,
) -> Result<(), SimError> {
    if mode == SemanticsMode::QNonNeg {
        if let Some(c) = x.iter().position(Rational::is_negative) {
            return Err(SimError::NegativeCounter { step, coord: c + 1 });
        }
    }
    if mode == SemanticsMode::ZTestDiscrete && !x.is_integral() {
        return Err(SimError::NonIntegerCounter { step });
    }
    if mode.checks_zero_tests() {
        if let Some(&c) = vass.zero_tests(state).iter().find(|&&c| !x[c].is_zero()) {
            return Err(SimError::ZeroTestFailed {
                state: vass.state_name(state).to_string(),
                coord: c + 1,
                step,
            });
        }
    }
    Ok(())
}

/// Executes `w` in `vass` under `mode` and returns the final configuration.
pub fn simulate(vass: &Vass, w: &RunWitness, mode: SemanticsMode) -> Result<Configuration, SimError> {
    if w.start.values.dim() != vass.dim() {
        return Err(SimError::DimensionMismatch { expected: vass.dim(), found: w.start.values.dim() });
    }
    if w.start.state >= vass.num_states() {
        return Err(SimError::BrokenChain { step: 0 });
    }
    let mut state = w.start.state;
    let mut x = w.start.values.clone();
    check_position(vass, state, &x, 0, mode)?;
    for (i, (t, alpha)) in w.steps.iter().enumerate() {
        let step = i + 1;
        if *t >= vass.num_transitions() || vass.transition(*t).0 != state {
            return Err(SimError::BrokenChain { step });
        }
        if !alpha.is_positive() || *alpha > Rational::one() {
            return Err(SimError::CoefficientOutOfRange { step, alpha: alpha.clone() });
        }
        if mode == SemanticsMode::ZTestDiscrete && !alpha.is_one() {
            return Err(SimError::NonUnitCoefficient { step });
        }
        x.add_scaled(alpha, vass.label(*t));
        state = vass.transition(*t).1;
        check_position(vass, state, &x, step, mode)?;
    }
    Ok(Configuration { state, values: x })
}

/// Four-state doubling example used throughout the tests.
#[cfg(test)]
pub(crate) fn doubling() -> Vass {
    parse_vass(
        "vass 2\nstate q0\nstate q1\nstate q2\nstate q3\n\
         trans q0 q1 1 0\ntrans q0 q2 0 0\ntrans q1 q2 0 1\n\
         trans q2 q3 1 2\ntrans q3 q2 2 4\n",
    )
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qv};
    use proptest::prelude::*;

    #[test]
    fn doubling_run() {
        let v = doubling();
        let q0 = v.state_id("q0").unwrap();
        let mut w = RunWitness::new(Configuration::new(q0, qv("0 0")));
        w.push(v.find_transition_named("q0", "q1").unwrap(), q("3/10"));
        w.push(v.find_transition_named("q1", "q2").unwrap(), q("1/2"));
        let end = simulate(&v, &w, SemanticsMode::Q).unwrap();
        assert_eq!(v.state_name(end.state), "q2");
        assert_eq!(end.values, qv("3/10 1/2"));
    }

    #[test]
    fn empty_run_is_identity() {
        let v = doubling();
        let w = RunWitness::new(Configuration::new(2, qv("5/3 -1")));
        assert_eq!(simulate(&v, &w, SemanticsMode::Q).unwrap(), w.start);
    }

    #[test]
    fn nonneg_violation() {
        let mut v = Vass::new(2).unwrap();
        let p = v.add_state("p", &[]).unwrap();
        let t = v.add_transition(p, p, qv("-1 0")).unwrap();
        let mut w = RunWitness::new(Configuration::new(p, qv("1/2 0")));
        w.push(t, q("1"));
        assert_eq!(
            simulate(&v, &w, SemanticsMode::QNonNeg),
            Err(SimError::NegativeCounter { step: 1, coord: 1 })
        );
        assert!(simulate(&v, &w, SemanticsMode::Q).is_ok());
    }

    #[test]
    fn coefficient_range() {
        let v = doubling();
        for a in ["0", "-1/2", "3/2"] {
            let mut w = RunWitness::new(Configuration::new(0, qv("0 0")));
            w.push(0, q(a));
            assert!(matches!(
                simulate(&v, &w, SemanticsMode::Q),
                Err(SimError::CoefficientOutOfRange { step: 1, .. })
            ));
        }
    }

    #[test]
    fn broken_chain() {
        let v = doubling();
        let mut w = RunWitness::new(Configuration::new(0, qv("0 0")));
        w.push(v.find_transition_named("q2", "q3").unwrap(), q("1"));
        assert_eq!(simulate(&v, &w, SemanticsMode::Q), Err(SimError::BrokenChain { step: 1 }));
    }

    #[test]
    fn zero_test_checked_at_start() {
        let mut v = Vass::new(2).unwrap();
        let p = v.add_state("p", &[0]).unwrap();
        let w = RunWitness::new(Configuration::new(p, qv("1 0")));
        assert_eq!(
            simulate(&v, &w, SemanticsMode::ZTestContinuous),
            Err(SimError::ZeroTestFailed { state: "p".into(), coord: 1, step: 0 })
        );
        assert!(simulate(&v, &w, SemanticsMode::Q).is_ok());
    }

    #[test]
    fn discrete_mode_requires_unit_steps() {
        let mut v = Vass::new(1).unwrap();
        let p = v.add_state("p", &[]).unwrap();
        let t = v.add_transition(p, p, qv("1")).unwrap();
        let mut w = RunWitness::new(Configuration::new(p, qv("0")));
        w.push(t, q("1/2"));
        assert_eq!(
            simulate(&v, &w, SemanticsMode::ZTestDiscrete),
            Err(SimError::NonUnitCoefficient { step: 1 })
        );
        let w = RunWitness::new(Configuration::new(p, qv("1/2")));
        assert_eq!(
            simulate(&v, &w, SemanticsMode::ZTestDiscrete),
            Err(SimError::NonIntegerCounter { step: 0 })
        );
    }

    #[test]
    fn support_of_doubling_scheme() {
        let v = doubling();
        let t = |a: &str, b: &str| v.find_transition_named(a, b).unwrap();
        let lps = Lps::new(
            &v,
            vec![vec![t("q0", "q2"), t("q2", "q3")], vec![]],
            vec![vec![t("q3", "q2"), t("q2", "q3")]],
        )
        .unwrap();
        let expected: BTreeSet<usize> = [t("q0", "q2"), t("q2", "q3"), t("q3", "q2")].into();
        assert_eq!(lps.support(), expected);
        assert!(support(&[]).is_empty());
        assert_eq!(support(&[0, 2, 0]).len(), 2);
    }

    #[test]
    fn scheme_validation() {
        let v = doubling();
        let t = |a: &str, b: &str| v.find_transition_named(a, b).unwrap();
        assert!(Lps::new(&v, vec![vec![], vec![]], vec![vec![t("q2", "q3")]]).is_err());
        assert!(Lps::new(&v, vec![vec![t("q0", "q1")], vec![]], vec![vec![t("q3", "q2"), t("q2", "q3")]])
            .is_err());
        assert!(Lps::new(&v, vec![vec![]], vec![]).unwrap().is_empty());
    }

    #[test]
    fn duplicate_transition_rejected() {
        let mut v = Vass::new(1).unwrap();
        let p = v.add_state("p", &[]).unwrap();
        v.add_transition(p, p, qv("1")).unwrap();
        assert!(matches!(v.add_transition(p, p, qv("2")), Err(ModelError::DuplicateTransition(..))));
        assert!(matches!(v.add_transition(p, p, qv("2 3")), Err(ModelError::DimensionMismatch { .. })));
    }

    fn cycle_vass(labels: &[Vec<i64>]) -> (Vass, Vec<usize>) {
        let d = labels[0].len();
        let mut v = Vass::new(d).unwrap();
        let n = labels.len();
        for i in 0..n {
            v.add_state(&format!("s{i}"), &[]).unwrap();
        }
        let ts = labels
            .iter()
            .enumerate()
            .map(|(i, l)| v.add_transition(i, (i + 1) % n, RationalVec::from_ints(l)).unwrap())
            .collect();
        (v, ts)
    }

    fn small_q() -> impl Strategy<Value = Rational> {
        (-6i64..=6, 1i64..=4).prop_map(|(n, d)| Rational::new(n, d))
    }

    fn unit_coeff() -> impl Strategy<Value = Rational> {
        (1i64..=4, 1i64..=4).prop_map(|(n, d)| Rational::new(n.min(d), d))
    }

    proptest! {
        #[test]
        fn shift_invariance(
            labels in prop::collection::vec(prop::collection::vec(-3i64..=3, 2), 1..4),
            coeffs in prop::collection::vec(unit_coeff(), 1..8),
            x in prop::collection::vec(small_q(), 2),
        ) {
            let (v, ts) = cycle_vass(&labels);
            let x = RationalVec(x);
            let steps: Vec<_> = coeffs.iter().enumerate().map(|(i, a)| (ts[i % ts.len()], a.clone())).collect();
            let shifted = RunWitness { start: Configuration::new(0, x.clone()), steps: steps.clone() };
            let origin = RunWitness { start: Configuration::new(0, RationalVec::zeros(2)), steps };
            let a = simulate(&v, &shifted, SemanticsMode::Q).unwrap();
            let b = simulate(&v, &origin, SemanticsMode::Q).unwrap();
            prop_assert_eq!(a.state, b.state);
            prop_assert_eq!(&a.values - &x, b.values);
        }

        #[test]
        fn nonneg_implies_q(
            labels in prop::collection::vec(prop::collection::vec(-3i64..=3, 2), 1..4),
            coeffs in prop::collection::vec(unit_coeff(), 0..8),
            x in prop::collection::vec(0i64..=4, 2),
        ) {
            let (v, ts) = cycle_vass(&labels);
            let steps: Vec<_> = coeffs.iter().enumerate().map(|(i, a)| (ts[i % ts.len()], a.clone())).collect();
            let w = RunWitness { start: Configuration::new(0, RationalVec::from_ints(&x)), steps };
            if let Ok(end) = simulate(&v, &w, SemanticsMode::QNonNeg) {
                prop_assert_eq!(simulate(&v, &w, SemanticsMode::Q).unwrap(), end);
            }
        }
    }
}
