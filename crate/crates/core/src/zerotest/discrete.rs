//! Discrete zero-test reachability along a scheme: counters in ℤ, every
//! step taken with coefficient 1.

use std::collections::BTreeSet;

use super::ilp::{integer_feasible, IlpOutcome};
use super::ZeroTestError;
use crate::lp::{LinearSystem, Relation};
use crate::model::{simulate, Configuration, Lps, RunWitness, SemanticsMode, Vass};
use crate::rational::{Rational, RationalVec};
use crate::reach::Verdict;

/// How often a cycle can be followed from a given counter value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Trichotomy {
    Never,
    AtMostOnce,
    Arbitrary,
}

/// Coordinates tested at some state entered along `cycle`.
fn tested_coords(vass: &Vass, cycle: &[usize]) -> BTreeSet<usize> {
    cycle.iter().flat_map(|&t| vass.zero_tests(vass.transition(t).1).iter().copied()).collect()
}

/// Classifies `cycle` from `x`: `Never` if one traversal fails a zero test,
/// `Arbitrary` if the traversal leaves every tested coordinate unchanged,
/// `AtMostOnce` otherwise.
pub fn cycle_trichotomy(vass: &Vass, cycle: &[usize], x: &RationalVec) -> Result<Trichotomy, ZeroTestError> {
    if x.dim() != vass.dim() {
        return Err(ZeroTestError::DimensionMismatch { expected: vass.dim(), found: x.dim() });
    }
    if cycle.is_empty() || !vass.chains(cycle) || vass.transition(cycle[0]).0 != vass.transition(*cycle.last().unwrap()).1 {
        return Err(ZeroTestError::SchemeInvalid("not a cycle".into()));
    }
    let mut y = x.clone();
    for &t in cycle {
        y = &y + vass.label(t);
        if vass.zero_tests(vass.transition(t).1).iter().any(|&c| !y[c].is_zero()) {
            return Ok(Trichotomy::Never);
        }
    }
    let effect = vass.effect(cycle);
    if tested_coords(vass, cycle).iter().all(|&i| effect[i].is_zero()) {
        Ok(Trichotomy::Arbitrary)
    } else {
        Ok(Trichotomy::AtMostOnce)
    }
}

/// Affine form `c + Σ k_v · a_v` over the repetition variables.
#[derive(Debug, Clone)]
struct Affine {
    c: Rational,
    k: Vec<Rational>,
}

impl Affine {
    fn constant(c: Rational, nvars: usize) -> Self {
        Affine { c, k: vec![Rational::zero(); nvars] }
    }
}

/// Repetition choice for one cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Reps {
    Zero,
    Once,
    /// Two or more, as integer variable `v`.
    Many(usize),
}

/// Linear constraints collected while propagating symbolically.
struct Builder {
    nvars: usize,
    rows: Vec<(Affine, Relation)>,
    /// A constant row was violated.
    dead: bool,
}

impl Builder {
    /// Requires `a = 0`.
    fn zero(&mut self, a: &Affine) {
        if a.k.iter().all(Rational::is_zero) {
            self.dead |= !a.c.is_zero();
        } else {
            self.rows.push((a.clone(), Relation::Eq));
        }
    }

    fn system(&self) -> LinearSystem {
        let mut sys = LinearSystem::new(self.nvars);
        for (a, rel) in &self.rows {
            let terms: Vec<(usize, Rational)> = a.k.iter().cloned().enumerate().collect();
            sys.add_sparse(&terms, *rel, -&a.c);
        }
        for v in 0..self.nvars {
            sys.bound(v, Relation::Ge, Rational::from_int(2));
        }
        sys
    }
}

fn step(vass: &Vass, b: &mut Builder, x: &mut [Affine], t: usize) {
    for (xi, l) in x.iter_mut().zip(vass.label(t).iter()) {
        xi.c += l;
    }
    for &c in vass.zero_tests(vass.transition(t).1) {
        b.zero(&x[c]);
    }
}

fn is_integral_instance(vass: &Vass, lps: &Lps, source: &Configuration, target: &Configuration) -> bool {
    source.values.is_integral()
        && target.values.is_integral()
        && lps.support().iter().all(|&t| vass.label(t).is_integral())
}

/// Decides discrete zero-test reachability along `lps` exactly. Each cycle is
/// split into zero, one, or at least two traversals; the last case requires
/// an arbitrarily repeatable cycle and contributes an integer repetition
/// variable. Each of the `3^n` cases is an integer linear system over those
/// variables. Returns `Inconclusive` only if branch and bound exceeds its
/// node limit.
pub fn decide_lps_discrete_ztest(
    vass: &Vass,
    lps: &Lps,
    source: &Configuration,
    target: &Configuration,
) -> Result<Verdict, ZeroTestError> {
    for c in [source, target] {
        if c.values.dim() != vass.dim() {
            return Err(ZeroTestError::DimensionMismatch { expected: vass.dim(), found: c.values.dim() });
        }
    }
    let endpoints_ok = match (lps.first_state(vass), lps.last_state(vass)) {
        (Some(a), Some(b)) => a == source.state && b == target.state,
        _ => source.state == target.state,
    };
    if !endpoints_ok {
        return Err(ZeroTestError::SchemeInvalid("scheme endpoints do not match the query".into()));
    }
    if !is_integral_instance(vass, lps, source, target) {
        return Err(ZeroTestError::NonIntegerInstance);
    }
    if vass.zero_tests(source.state).iter().any(|&c| !source.values[c].is_zero()) {
        return Ok(Verdict::Unreachable);
    }
    let n = lps.num_cycles();
    let total = 3usize.checked_pow(n as u32).ok_or_else(|| ZeroTestError::InvalidInstance("too many cycles".into()))?;
    let mut unknown = false;
    for case in 0..total {
        let mut choice = Vec::with_capacity(n);
        let mut nvars = 0;
        let mut rest = case;
        for _ in 0..n {
            choice.push(match rest % 3 {
                0 => Reps::Zero,
                1 => Reps::Once,
                _ => {
                    nvars += 1;
                    Reps::Many(nvars - 1)
                }
            });
            rest /= 3;
        }
        match solve_case(vass, lps, source, target, &choice, nvars) {
            CaseResult::Found(w) => {
                return match simulate(vass, &w, SemanticsMode::ZTestDiscrete) {
                    Ok(end) if end == *target => Ok(Verdict::Reachable { witness: w, scheme: lps.clone() }),
                    _ => Err(ZeroTestError::InternalInconsistency("discrete run fails simulation".into())),
                };
            }
            CaseResult::None => {}
            CaseResult::Unknown => unknown = true,
        }
    }
    if unknown {
        Ok(Verdict::Inconclusive("branch and bound node limit reached".into()))
    } else {
        Ok(Verdict::Unreachable)
    }
}

enum CaseResult {
    Found(RunWitness),
    None,
    Unknown,
}

const MAX_NODES: usize = 2000;

fn solve_case(
    vass: &Vass,
    lps: &Lps,
    source: &Configuration,
    target: &Configuration,
    choice: &[Reps],
    nvars: usize,
) -> CaseResult {
    let mut b = Builder { nvars, rows: Vec::new(), dead: false };
    let mut x: Vec<Affine> = source.values.iter().map(|c| Affine::constant(c.clone(), nvars)).collect();
    let mut k = 0;
    for (is_cycle, seg) in lps.segments() {
        let reps = if is_cycle {
            k += 1;
            choice[k - 1]
        } else {
            Reps::Once
        };
        match reps {
            Reps::Zero => {}
            Reps::Once => seg.iter().for_each(|&t| step(vass, &mut b, &mut x, t)),
            Reps::Many(v) => {
                let effect = vass.effect(seg);
                if tested_coords(vass, seg).iter().any(|&i| !effect[i].is_zero()) {
                    return CaseResult::None;
                }
                let entry = x.clone();
                seg.iter().for_each(|&t| step(vass, &mut b, &mut x, t));
                // x = entry + k_v · effect
                x = entry;
                for (xi, e) in x.iter_mut().zip(effect.iter()) {
                    xi.k[v] += e;
                }
            }
        }
        if b.dead {
            return CaseResult::None;
        }
    }
    for (xi, y) in x.iter().zip(target.values.iter()) {
        let mut diff = xi.clone();
        diff.c -= y;
        b.zero(&diff);
    }
    if b.dead {
        return CaseResult::None;
    }
    let sys = b.system();
    let objective = RationalVec(vec![-Rational::one(); nvars]);
    let counts = match integer_feasible(&sys, Some(&objective), MAX_NODES) {
        IlpOutcome::Feasible(p) => p,
        IlpOutcome::Infeasible => return CaseResult::None,
        IlpOutcome::Unknown => return CaseResult::Unknown,
    };
    let mut w = RunWitness::new(source.clone());
    let mut k = 0;
    for (is_cycle, seg) in lps.segments() {
        let times = if is_cycle {
            k += 1;
            match choice[k - 1] {
                Reps::Zero => 0,
                Reps::Once => 1,
                Reps::Many(v) => counts[v].to_i64().expect("repetition count fits") as usize,
            }
        } else {
            1
        };
        for _ in 0..times {
            for &t in seg {
                w.push(t, Rational::one());
            }
        }
    }
    CaseResult::Found(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_lps, parse_vass};
    use crate::rational::qv;

    fn tested_loop(effect: &str) -> Vass {
        parse_vass(&format!("vass 2\nstate q z=1\ntrans q q {effect}\n")).unwrap()
    }

    fn conf(x: &str) -> Configuration {
        Configuration::new(0, qv(x))
    }

    #[test]
    fn trichotomy_cases() {
        let v = tested_loop("0 1");
        assert_eq!(cycle_trichotomy(&v, &[0], &qv("0 0")).unwrap(), Trichotomy::Arbitrary);
        assert_eq!(cycle_trichotomy(&v, &[0], &qv("1 0")).unwrap(), Trichotomy::Never);
        let v = tested_loop("1 1");
        assert_eq!(cycle_trichotomy(&v, &[0], &qv("0 0")).unwrap(), Trichotomy::Never);
        assert_eq!(cycle_trichotomy(&v, &[0], &qv("-1 0")).unwrap(), Trichotomy::AtMostOnce);
        // Test only at the middle state: at most once from (0, 0).
        let v = parse_vass("vass 2\nstate q\nstate r z=1\ntrans q r 0 1\ntrans r q 1 0\n").unwrap();
        assert_eq!(cycle_trichotomy(&v, &[0, 1], &qv("0 0")).unwrap(), Trichotomy::AtMostOnce);
        assert!(cycle_trichotomy(&v, &[0], &qv("0 0")).is_err());
    }

    #[test]
    fn tested_self_loop_counts() {
        let v = tested_loop("0 1");
        let lps = parse_lps("cycle q->q\n", &v).unwrap();
        match decide_lps_discrete_ztest(&v, &lps, &conf("0 0"), &conf("0 5")).unwrap() {
            Verdict::Reachable { witness, .. } => assert_eq!(witness.steps.len(), 5),
            other => panic!("{other:?}"),
        }
        assert_eq!(decide_lps_discrete_ztest(&v, &lps, &conf("0 0"), &conf("0 -1")).unwrap(), Verdict::Unreachable);
        let v = tested_loop("1 1");
        let lps = parse_lps("cycle q->q\n", &v).unwrap();
        assert_eq!(decide_lps_discrete_ztest(&v, &lps, &conf("0 0"), &conf("2 2")).unwrap(), Verdict::Unreachable);
    }

    #[test]
    fn empty_scheme() {
        let v = tested_loop("0 1");
        let lps = Lps::new(&v, vec![vec![]], vec![]).unwrap();
        match decide_lps_discrete_ztest(&v, &lps, &conf("0 3"), &conf("0 3")).unwrap() {
            Verdict::Reachable { witness, .. } => assert!(witness.steps.is_empty()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn entry_value_depends_on_earlier_counts() {
        // Loop a adds (1, 0) freely; loop b at r is tested on x and subtracts 1 once.
        let v = parse_vass(
            "vass 2\nstate p\nstate r\nstate s z=1\n\
             trans p p 1 0\ntrans p r 0 0\ntrans r s -1 1\ntrans s r 0 0\n",
        )
        .unwrap();
        let lps = parse_lps("cycle p->p\npath p->r\ncycle r->s s->r\n", &v).unwrap();
        let src = Configuration::new(0, qv("0 0"));
        let ok = Configuration::new(1, qv("0 1"));
        assert!(decide_lps_discrete_ztest(&v, &lps, &src, &ok).unwrap().is_reachable());
        let bad = Configuration::new(1, qv("0 2"));
        assert_eq!(decide_lps_discrete_ztest(&v, &lps, &src, &bad).unwrap(), Verdict::Unreachable);
    }

    #[test]
    fn rejects_fractions() {
        let v = tested_loop("0 1");
        let lps = parse_lps("cycle q->q\n", &v).unwrap();
        assert_eq!(
            decide_lps_discrete_ztest(&v, &lps, &conf("0 1/2"), &conf("0 5")),
            Err(ZeroTestError::NonIntegerInstance)
        );
    }
}
