//! Reachability along linear path schemes and by bounded scheme enumeration.

mod encode;
mod enumerate;
mod expand;

use thiserror::Error;

use crate::csh::{self, CshOutcome};
use crate::model::{simulate, Configuration, Lps, RunWitness, SemanticsMode, Vass};

pub use enumerate::{solve_general, EnumBudget, EnumStats};
pub use expand::expand_cycle_q;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReachError {
    #[error("invalid scheme: {0}")]
    SchemeInvalid(String),
    #[error("endpoint has a negative coordinate")]
    NegativeEndpoint,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("mode {0} is not supported here")]
    UnsupportedMode(SemanticsMode),
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
}

/// A reachability question `p(x) →* q(y)`, optionally restricted to a scheme.
#[derive(Debug, Clone)]
pub struct Query<'a> {
    pub vass: &'a Vass,
    pub source: Configuration,
    pub target: Configuration,
    pub mode: SemanticsMode,
    pub scheme: Option<&'a Lps>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Reachable { witness: RunWitness, scheme: Lps },
    Unreachable,
    /// The search budget ran out before a verdict was certain.
    Inconclusive(String),
}

impl Verdict {
    pub fn is_reachable(&self) -> bool {
        matches!(self, Verdict::Reachable { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Reachable { .. } => "reachable",
            Verdict::Unreachable => "unreachable",
            Verdict::Inconclusive(_) => "inconclusive",
        }
    }
}

fn check_dims(vass: &Vass, c: &Configuration) -> Result<(), ReachError> {
    if c.values.dim() != vass.dim() {
        return Err(ReachError::DimensionMismatch { expected: vass.dim(), found: c.values.dim() });
    }
    if c.state >= vass.num_states() {
        return Err(ReachError::SchemeInvalid(format!("state #{} does not exist", c.state)));
    }
    Ok(())
}

/// Checks that `lps` can start at `source` and end at `target`.
fn check_scheme(vass: &Vass, lps: &Lps, source: &Configuration, target: &Configuration) -> Result<(), ReachError> {
    check_dims(vass, source)?;
    check_dims(vass, target)?;
    match (lps.first_state(vass), lps.last_state(vass)) {
        (Some(a), Some(b)) => {
            if a != source.state || b != target.state {
                return Err(ReachError::SchemeInvalid(format!(
                    "scheme runs from {} to {}, query from {} to {}",
                    vass.state_name(a),
                    vass.state_name(b),
                    vass.state_name(source.state),
                    vass.state_name(target.state)
                )));
            }
        }
        _ => {
            if source.state != target.state {
                return Err(ReachError::SchemeInvalid("empty scheme between distinct states".into()));
            }
        }
    }
    Ok(())
}

/// Confirms a constructed witness; failure indicates a solver bug.
fn confirm(
    vass: &Vass,
    w: &RunWitness,
    target: &Configuration,
    mode: SemanticsMode,
) -> Result<(), ReachError> {
    match simulate(vass, w, mode) {
        Ok(end) if end == *target => Ok(()),
        Ok(end) => Err(ReachError::InternalInconsistency(format!("witness ends at {:?}", end.values))),
        Err(e) => Err(ReachError::InternalInconsistency(format!("witness fails simulation: {e}"))),
    }
}

/// Decides `source →σ target` in ℚ semantics.
pub fn decide_lps_q(
    vass: &Vass,
    lps: &Lps,
    source: &Configuration,
    target: &Configuration,
) -> Result<Verdict, ReachError> {
    check_scheme(vass, lps, source, target)?;
    let delta = &target.values - &source.values;
    let (sys, layout) = encode::encode_q(vass, lps, &delta);
    match csh::solve(&sys) {
        CshOutcome::Infeasible => Ok(Verdict::Unreachable),
        CshOutcome::Feasible { witness, .. } => {
            let w = expand::expand_q(vass, lps, &layout, &witness, source);
            confirm(vass, &w, target, SemanticsMode::Q)?;
            Ok(Verdict::Reachable { witness: w, scheme: lps.clone() })
        }
    }
}

/// Decides `source →σ target` in ℚ≥0 semantics.
pub fn decide_lps_nonneg(
    vass: &Vass,
    lps: &Lps,
    source: &Configuration,
    target: &Configuration,
) -> Result<Verdict, ReachError> {
    check_scheme(vass, lps, source, target)?;
    if !source.values.is_nonneg() || !target.values.is_nonneg() {
        return Err(ReachError::NegativeEndpoint);
    }
    let (sys, layout) = encode::encode_nonneg(vass, lps, &source.values, &target.values);
    match csh::solve(&sys) {
        CshOutcome::Infeasible => Ok(Verdict::Unreachable),
        CshOutcome::Feasible { witness, .. } => {
            let w = expand::expand_nonneg(vass, lps, &layout, &witness, source)?;
            confirm(vass, &w, target, SemanticsMode::QNonNeg)?;
            Ok(Verdict::Reachable { witness: w, scheme: lps.clone() })
        }
    }
}

/// Dispatches a query: scheme queries go to the matching decision
/// procedure, others to bounded enumeration.
pub fn decide(query: &Query<'_>, budget: &EnumBudget) -> Result<Verdict, ReachError> {
    match (query.scheme, query.mode) {
        (Some(lps), SemanticsMode::Q) => decide_lps_q(query.vass, lps, &query.source, &query.target),
        (Some(lps), SemanticsMode::QNonNeg) => {
            decide_lps_nonneg(query.vass, lps, &query.source, &query.target)
        }
        (None, SemanticsMode::Q | SemanticsMode::QNonNeg) => Ok(solve_general(query, budget)?.0),
        (_, mode) => Err(ReachError::UnsupportedMode(mode)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{describe, member};
    use crate::model::{doubling, parse_lps, parse_vass, Configuration};
    use crate::rational::{q, qv};

    fn conf(v: &Vass, s: &str, x: &str) -> Configuration {
        Configuration::new(v.state_id(s).unwrap(), qv(x))
    }

    fn doubling_lps(v: &Vass) -> Lps {
        parse_lps("path q0->q2 q2->q3\ncycle q3->q2 q2->q3\n", v).unwrap()
    }

    #[test]
    fn doubling_q_reachable() {
        let v = doubling();
        let lps = doubling_lps(&v);
        for target in ["3/2 3", "1/2 1", "7 14"] {
            match decide_lps_q(&v, &lps, &conf(&v, "q0", "0 0"), &conf(&v, "q3", target)).unwrap() {
                Verdict::Reachable { witness, .. } => {
                    let end = simulate(&v, &witness, SemanticsMode::Q).unwrap();
                    assert_eq!(end.values, qv(target));
                }
                other => panic!("{target}: {other:?}"),
            }
        }
    }

    #[test]
    fn doubling_q_unreachable() {
        let v = doubling();
        let lps = doubling_lps(&v);
        let src = conf(&v, "q0", "0 0");
        for target in ["1 1", "0 0", "-1 -2"] {
            assert_eq!(decide_lps_q(&v, &lps, &src, &conf(&v, "q3", target)).unwrap(), Verdict::Unreachable);
        }
    }

    #[test]
    fn doubling_characterization_agrees() {
        let v = doubling();
        let lps = doubling_lps(&v);
        let d = describe(&lps, &v);
        for target in ["3/2 3", "1/2 1", "1 1", "0 0", "1 2", "1/3 2/3", "-1 -2", "9 18"] {
            let y = qv(target);
            let lp = decide_lps_q(&v, &lps, &conf(&v, "q0", "0 0"), &conf(&v, "q3", target)).unwrap();
            assert_eq!(lp.is_reachable(), member(&d, &y).unwrap(), "{target}");
        }
    }

    #[test]
    fn doubling_nonneg_reachable() {
        let v = doubling();
        let lps = doubling_lps(&v);
        match decide_lps_nonneg(&v, &lps, &conf(&v, "q0", "0 0"), &conf(&v, "q3", "3/2 3")).unwrap() {
            Verdict::Reachable { witness, .. } => {
                assert_eq!(simulate(&v, &witness, SemanticsMode::QNonNeg).unwrap().values, qv("3/2 3"));
            }
            other => panic!("{other:?}"),
        }
    }

    fn swap_vass() -> Vass {
        parse_vass("vass 2\nstate q\nstate r\ntrans q r -1 1\ntrans r q 1 -1\n").unwrap()
    }

    #[test]
    fn nonneg_swap_cycle() {
        let v = swap_vass();
        let lps = parse_lps("cycle q->r r->q\n", &v).unwrap();
        let src = conf(&v, "q", "1 0");
        match decide_lps_nonneg(&v, &lps, &src, &conf(&v, "q", "1/2 1/2")).unwrap() {
            Verdict::Reachable { witness, .. } => {
                assert_eq!(simulate(&v, &witness, SemanticsMode::QNonNeg).unwrap().values, qv("1/2 1/2"));
            }
            other => panic!("{other:?}"),
        }
        // Arriving at q with the first counter zero needs a negative predecessor.
        assert_eq!(decide_lps_nonneg(&v, &lps, &src, &conf(&v, "q", "0 1")).unwrap(), Verdict::Unreachable);
        assert!(decide_lps_q(&v, &lps, &src, &conf(&v, "q", "0 1")).unwrap().is_reachable());
        assert_eq!(decide_lps_nonneg(&v, &lps, &src, &conf(&v, "q", "1/2 1")).unwrap(), Verdict::Unreachable);
        // From the origin the cycle cannot start in ℚ≥0 but can in ℚ.
        let origin = conf(&v, "q", "0 0");
        let tgt = conf(&v, "q", "0 0");
        assert!(decide_lps_nonneg(&v, &lps, &origin, &tgt).unwrap().is_reachable());
        assert!(decide_lps_q(&v, &lps, &origin, &conf(&v, "q", "-1 1")).unwrap().is_reachable());
        assert_eq!(
            decide_lps_nonneg(&v, &lps, &origin, &conf(&v, "q", "1 0")).unwrap(),
            Verdict::Unreachable
        );
    }

    #[test]
    fn nonneg_dipping_path() {
        let v = parse_vass("vass 2\nstate p\nstate r\ntrans p r -1 0\n").unwrap();
        let lps = parse_lps("path p->r\n", &v).unwrap();
        let src = conf(&v, "p", "0 0");
        for t in ["0 0", "1 0", "0 1"] {
            assert_eq!(decide_lps_nonneg(&v, &lps, &src, &conf(&v, "r", t)).unwrap(), Verdict::Unreachable);
        }
        assert_eq!(
            decide_lps_nonneg(&v, &lps, &src, &conf(&v, "r", "-1 0")),
            Err(ReachError::NegativeEndpoint)
        );
    }

    #[test]
    fn empty_scheme() {
        let v = doubling();
        let lps = Lps::new(&v, vec![vec![]], vec![]).unwrap();
        let a = conf(&v, "q1", "1/2 0");
        match decide_lps_q(&v, &lps, &a, &a).unwrap() {
            Verdict::Reachable { witness, .. } => assert!(witness.steps.is_empty()),
            other => panic!("{other:?}"),
        }
        assert_eq!(decide_lps_q(&v, &lps, &a, &conf(&v, "q1", "0 0")).unwrap(), Verdict::Unreachable);
        assert!(matches!(
            decide_lps_q(&v, &lps, &a, &conf(&v, "q2", "1/2 0")),
            Err(ReachError::SchemeInvalid(_))
        ));
    }

    #[test]
    fn self_loop_mass() {
        let v = parse_vass("vass 1\nstate p\ntrans p p 1\n").unwrap();
        let lps = parse_lps("cycle p->p\n", &v).unwrap();
        let p0 = conf(&v, "p", "0");
        for mode in [SemanticsMode::Q, SemanticsMode::QNonNeg] {
            let verdict = if mode == SemanticsMode::Q {
                decide_lps_q(&v, &lps, &p0, &conf(&v, "p", "5")).unwrap()
            } else {
                decide_lps_nonneg(&v, &lps, &p0, &conf(&v, "p", "5")).unwrap()
            };
            match verdict {
                Verdict::Reachable { witness, .. } => {
                    assert_eq!(simulate(&v, &witness, mode).unwrap().values, qv("5"));
                    assert!(witness.steps.iter().all(|(_, a)| *a <= q("1")));
                }
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn multi_cycle_scheme() {
        let v = parse_vass(
            "vass 2\nstate a\nstate b\ntrans a a 1 0\ntrans a b 0 0\ntrans b b 0 -1\ntrans b a 0 0\n",
        )
        .unwrap();
        let lps = parse_lps("cycle a->a\npath a->b\ncycle b->b\n", &v).unwrap();
        let src = conf(&v, "a", "0 3");
        let tgt = conf(&v, "b", "5/2 1");
        for nonneg in [false, true] {
            let verdict = if nonneg {
                decide_lps_nonneg(&v, &lps, &src, &tgt).unwrap()
            } else {
                decide_lps_q(&v, &lps, &src, &tgt).unwrap()
            };
            assert!(verdict.is_reachable(), "nonneg={nonneg}");
        }
        let below = conf(&v, "b", "1 -1");
        assert!(decide_lps_q(&v, &lps, &src, &below).unwrap().is_reachable());
    }
}
