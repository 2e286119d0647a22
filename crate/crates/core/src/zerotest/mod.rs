//! Zero-test semantics: the ExactCover reduction, forced-coefficient search
//! for continuous runs, and an exact decider for discrete schemes.

mod discrete;
pub mod ilp;

use num_bigint::BigInt;
use num_traits::One;
use thiserror::Error;

use crate::model::{simulate, Configuration, Lps, RunWitness, SemanticsMode, Vass};
use crate::rational::{Rational, RationalVec};
use crate::reach::Verdict;

pub use discrete::{cycle_trichotomy, decide_lps_discrete_ztest, Trichotomy};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ZeroTestError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("instance has non-integer entries")]
    NonIntegerInstance,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid scheme: {0}")]
    SchemeInvalid(String),
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
}

/// The first `n` primes.
pub fn first_primes(n: usize) -> Vec<u64> {
    let mut ps: Vec<u64> = Vec::with_capacity(n);
    let mut k = 2;
    while ps.len() < n {
        if ps.iter().all(|p| k % p != 0) {
            ps.push(k);
        }
        k += 1;
    }
    ps
}

fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|k| k * k <= n).all(|k| n % k != 0)
}

/// An ExactCover instance whose elements are distinct primes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactCoverInstance {
    universe: Vec<u64>,
    sets: Vec<Vec<u64>>,
}

impl ExactCoverInstance {
    pub fn new(universe: Vec<u64>, sets: Vec<Vec<u64>>) -> Result<Self, ZeroTestError> {
        let mut u = universe.clone();
        u.sort_unstable();
        u.dedup();
        if u.len() != universe.len() {
            return Err(ZeroTestError::InvalidInstance("universe elements must be distinct".into()));
        }
        if let Some(p) = universe.iter().find(|&&p| !is_prime(p)) {
            return Err(ZeroTestError::InvalidInstance(format!("{p} is not prime")));
        }
        if sets.is_empty() {
            return Err(ZeroTestError::InvalidInstance("the collection is empty".into()));
        }
        for s in &sets {
            let mut t = s.clone();
            t.sort_unstable();
            t.dedup();
            if s.is_empty() || t.len() != s.len() || s.iter().any(|p| !universe.contains(p)) {
                return Err(ZeroTestError::InvalidInstance(format!("bad set {s:?}")));
            }
        }
        Ok(ExactCoverInstance { universe, sets })
    }

    /// Maps abstract elements `0..n` to the first `n` primes.
    pub fn from_abstract(n: usize, sets: &[Vec<usize>]) -> Result<Self, ZeroTestError> {
        let ps = first_primes(n);
        let mapped = sets
            .iter()
            .map(|s| {
                s.iter()
                    .map(|&i| ps.get(i).copied().ok_or_else(|| ZeroTestError::InvalidInstance(format!("element {i} out of range"))))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(ps, mapped)
    }

    pub fn universe(&self) -> &[u64] {
        &self.universe
    }

    pub fn sets(&self) -> &[Vec<u64>] {
        &self.sets
    }

    /// `T`, the product of the universe.
    pub fn target_product(&self) -> BigInt {
        self.universe.iter().map(|&p| BigInt::from(p)).product()
    }

    /// Multiplier of set `i`.
    pub fn multiplier(&self, i: usize) -> BigInt {
        self.sets[i].iter().map(|&p| BigInt::from(p)).product()
    }

    /// Shared gadget exponent `⌈log₂ N⌉ + 1` with `N` the product of all multipliers.
    pub fn exponent(&self) -> u32 {
        let n: BigInt = (0..self.sets.len()).map(|i| self.multiplier(i)).product();
        let ceil_log = if n.is_one() { 0 } else { (n - 1u32).bits() as u32 };
        ceil_log + 1
    }

    /// Brute-force search for a subcollection whose multipliers multiply to
    /// `T`; returns the first one in subset-mask order.
    pub fn brute_force_cover(&self) -> Option<Vec<usize>> {
        let t = self.target_product();
        (0u64..1 << self.sets.len())
            .map(|mask| (0..self.sets.len()).filter(|i| mask >> i & 1 == 1).collect::<Vec<_>>())
            .find(|sub| sub.iter().map(|&i| self.multiplier(i)).product::<BigInt>() == t)
    }
}

/// The generated reachability instance.
#[derive(Debug, Clone)]
pub struct GadgetChain {
    pub vass: Vass,
    pub lps: Lps,
    pub source: Configuration,
    pub target: Configuration,
}

fn big_rat(n: &BigInt) -> Rational {
    Rational::from_bigint(n.clone())
}

/// Builds the chain of multiplier gadgets: per set `c` with multiplier `d`,
/// states `q_i` (second counter tested) and `r_i` (first counter tested) with
/// `q_i → r_i` labeled `(−d^e, d^(e+1))` and `r_i → q_i` labeled `(d^e, −d^e)`;
/// consecutive gadgets are linked by `(0, 0)` transitions.
pub fn gen_exactcover(inst: &ExactCoverInstance) -> GadgetChain {
    let e = inst.exponent();
    let n = inst.sets.len();
    let mut v = Vass::new(2).expect("dimension 2");
    for i in 1..=n {
        v.add_state(&format!("q{i}"), &[1]).expect("fresh state");
        v.add_state(&format!("r{i}"), &[0]).expect("fresh state");
    }
    let mut cycles = Vec::new();
    let mut links = Vec::new();
    for i in 0..n {
        let d = big_rat(&inst.multiplier(i));
        let de = d.pow(e);
        let (q, r) = (2 * i, 2 * i + 1);
        let fwd = v.add_transition(q, r, RationalVec(vec![-&de, &de * &d])).expect("fresh transition");
        let back = v.add_transition(r, q, RationalVec(vec![de.clone(), -&de])).expect("fresh transition");
        cycles.push(vec![fwd, back]);
    }
    for i in 0..n.saturating_sub(1) {
        links.push(v.add_transition(2 * i, 2 * i + 2, RationalVec::zeros(2)).expect("fresh transition"));
    }
    let mut paths = vec![Vec::new()];
    paths.extend(links.into_iter().map(|t| vec![t]));
    paths.push(Vec::new());
    let lps = Lps::new(&v, paths, cycles).expect("chain scheme is valid");
    let source = Configuration::new(0, RationalVec(vec![Rational::one(), Rational::zero()]));
    let target = Configuration::new(2 * (n - 1), RationalVec(vec![big_rat(&inst.target_product()), Rational::zero()]));
    GadgetChain { vass: v, lps, source, target }
}

/// One traversal of gadget `i` from `(x, 0)`, using the coefficients forced
/// by the zero tests.
fn gadget_steps(chain: &GadgetChain, i: usize, x: &Rational) -> Vec<(usize, Rational)> {
    let (fwd, back) = (chain.lps.cycles()[i][0], chain.lps.cycles()[i][1]);
    let a1 = x / &chain.vass.label(fwd)[0].abs();
    let y = &a1 * &chain.vass.label(fwd)[1];
    let a2 = &y / &chain.vass.label(back)[0];
    vec![(fwd, a1), (back, a2)]
}

/// The run taking exactly the gadgets in `subset` once each with forced
/// coefficients, if it is valid and ends at the chain's target.
pub fn forced_subset_run(chain: &GadgetChain, subset: &[usize]) -> Result<Option<RunWitness>, ZeroTestError> {
    let n = chain.lps.num_cycles();
    if subset.iter().any(|&i| i >= n) {
        return Err(ZeroTestError::InvalidInstance("subset index out of range".into()));
    }
    let mut w = RunWitness::new(chain.source.clone());
    let mut x = chain.source.values[0].clone();
    for i in 0..n {
        if subset.contains(&i) {
            let steps = gadget_steps(chain, i, &x);
            x = &steps[1].1 * &chain.vass.label(steps[1].0)[0];
            w.steps.extend(steps);
        }
        if i + 1 < n {
            w.push(chain.lps.paths()[i + 1][0], Rational::one());
        }
    }
    Ok(match simulate(&chain.vass, &w, SemanticsMode::ZTestContinuous) {
        Ok(end) if end == chain.target => Some(w),
        _ => None,
    })
}

/// Checks whether `subset` (indices into the collection) multiplies to `T`
/// and, if so, builds and validates the run taking exactly those gadgets once.
pub fn check_cover(inst: &ExactCoverInstance, subset: &[usize]) -> Result<Option<RunWitness>, ZeroTestError> {
    if subset.iter().any(|&i| i >= inst.sets.len()) {
        return Err(ZeroTestError::InvalidInstance("subset index out of range".into()));
    }
    let prod: BigInt = subset.iter().map(|&i| inst.multiplier(i)).product();
    if prod != inst.target_product() {
        return Ok(None);
    }
    match forced_subset_run(&gen_exactcover(inst), subset)? {
        Some(w) => Ok(Some(w)),
        None => Err(ZeroTestError::InternalInconsistency("cover run is invalid".into())),
    }
}

/// The coefficient of one step as determined by the zero tests at its target.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Forced {
    Alpha(Rational),
    Impossible,
    /// The tests leave the coefficient undetermined.
    Free,
}

fn forced_alpha(vass: &Vass, t: usize, x: &RationalVec) -> Forced {
    let l = vass.label(t);
    let tests = vass.zero_tests(vass.transition(t).1);
    if l.is_zero() {
        return if tests.iter().all(|&c| x[c].is_zero()) { Forced::Alpha(Rational::one()) } else { Forced::Impossible };
    }
    let mut alpha: Option<Rational> = None;
    for &c in tests {
        if l[c].is_zero() {
            if !x[c].is_zero() {
                return Forced::Impossible;
            }
            continue;
        }
        let a = -(&x[c] / &l[c]);
        match &alpha {
            Some(b) if *b != a => return Forced::Impossible,
            _ => alpha = Some(a),
        }
    }
    match alpha {
        None => Forced::Free,
        Some(a) if a.is_positive() && a <= Rational::one() => Forced::Alpha(a),
        Some(_) => Forced::Impossible,
    }
}

/// Outcome of following a path with forced coefficients.
enum Follow {
    Done(RationalVec, Vec<(usize, Rational)>),
    Blocked,
    Undetermined,
}

fn follow(vass: &Vass, path: &[usize], x: &RationalVec) -> Follow {
    let mut x = x.clone();
    let mut steps = Vec::with_capacity(path.len());
    for &t in path {
        match forced_alpha(vass, t, &x) {
            Forced::Alpha(a) => {
                x.add_scaled(&a, vass.label(t));
                steps.push((t, a));
            }
            Forced::Impossible => return Follow::Blocked,
            Forced::Free => return Follow::Undetermined,
        }
    }
    Follow::Done(x, steps)
}

/// Decides continuous zero-test reachability along `lps` when every step's
/// coefficient is forced by the zero tests (as in multiplier gadget chains).
/// Each cycle is repeated at most `max_reps` times unless a traversal leaves
/// the counters unchanged. Instances with unforced coefficients or with the
/// repetition bound reached yield `Inconclusive`.
pub fn decide_lps_continuous_ztest(
    vass: &Vass,
    lps: &Lps,
    source: &Configuration,
    target: &Configuration,
    max_reps: usize,
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
    if vass.zero_tests(source.state).iter().any(|&c| !source.values[c].is_zero()) {
        return Ok(Verdict::Unreachable);
    }
    let segs: Vec<(bool, &[usize])> = lps.segments().collect();
    let mut incomplete = false;
    let found = search(vass, &segs, 0, &source.values, &target.values, max_reps, &mut incomplete);
    match found {
        Some(steps) => {
            let w = RunWitness { start: source.clone(), steps };
            match simulate(vass, &w, SemanticsMode::ZTestContinuous) {
                Ok(end) if end == *target => Ok(Verdict::Reachable { witness: w, scheme: lps.clone() }),
                _ => Err(ZeroTestError::InternalInconsistency("forced run fails simulation".into())),
            }
        }
        None if incomplete => Ok(Verdict::Inconclusive("coefficients not forced or repetition bound reached".into())),
        None => Ok(Verdict::Unreachable),
    }
}

fn search(
    vass: &Vass,
    segs: &[(bool, &[usize])],
    k: usize,
    x: &RationalVec,
    target: &RationalVec,
    max_reps: usize,
    incomplete: &mut bool,
) -> Option<Vec<(usize, Rational)>> {
    let Some(&(is_cycle, seg)) = segs.get(k) else {
        return (x == target).then(Vec::new);
    };
    if !is_cycle {
        return match follow(vass, seg, x) {
            Follow::Done(y, mut steps) => {
                let rest = search(vass, segs, k + 1, &y, target, max_reps, incomplete)?;
                steps.extend(rest);
                Some(steps)
            }
            Follow::Blocked => None,
            Follow::Undetermined => {
                *incomplete = true;
                None
            }
        };
    }
    let mut cur = x.clone();
    let mut prefix: Vec<(usize, Rational)> = Vec::new();
    for reps in 0.. {
        if let Some(rest) = search(vass, segs, k + 1, &cur, target, max_reps, incomplete) {
            prefix.extend(rest);
            return Some(prefix);
        }
        if reps == max_reps {
            *incomplete = true;
            return None;
        }
        match follow(vass, seg, &cur) {
            Follow::Done(y, steps) => {
                if y == cur {
                    return None;
                }
                prefix.extend(steps);
                cur = y;
            }
            Follow::Blocked => return None,
            Follow::Undetermined => {
                *incomplete = true;
                return None;
            }
        }
    }
    unreachable!()
}

/// All multisets of nonempty subsets of an `n`-element universe with between
/// one and `max_sets` members, for `n` in `1..=max_universe`.
pub fn enumerate_instances(max_universe: usize, max_sets: usize) -> Vec<ExactCoverInstance> {
    let mut out = Vec::new();
    for n in 1..=max_universe {
        let subsets: Vec<Vec<usize>> =
            (1u32..1 << n).map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect()).collect();
        let mut stack: Vec<Vec<usize>> = vec![Vec::new()];
        while let Some(pick) = stack.pop() {
            if !pick.is_empty() {
                let sets: Vec<Vec<usize>> = pick.iter().map(|&i| subsets[i].clone()).collect();
                out.push(ExactCoverInstance::from_abstract(n, &sets).expect("valid instance"));
            }
            if pick.len() < max_sets {
                let start = pick.last().copied().unwrap_or(0);
                for i in (start..subsets.len()).rev() {
                    let mut next = pick.clone();
                    next.push(i);
                    stack.push(next);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SimError;
    use crate::rational::{q, qv};

    fn inst(universe: &[u64], sets: &[&[u64]]) -> ExactCoverInstance {
        ExactCoverInstance::new(universe.to_vec(), sets.iter().map(|s| s.to_vec()).collect()).unwrap()
    }

    #[test]
    fn instance_validation() {
        assert!(ExactCoverInstance::new(vec![2, 4], vec![vec![2]]).is_err());
        assert!(ExactCoverInstance::new(vec![2, 3], vec![vec![5]]).is_err());
        assert!(ExactCoverInstance::new(vec![2, 3], vec![vec![]]).is_err());
        assert!(ExactCoverInstance::new(vec![2, 3], vec![]).is_err());
        assert_eq!(first_primes(5), vec![2, 3, 5, 7, 11]);
        let i = ExactCoverInstance::from_abstract(2, &[vec![0], vec![0, 1]]).unwrap();
        assert_eq!(i.sets(), &[vec![2], vec![2, 3]]);
    }

    #[test]
    fn exponent_is_ceil_log_plus_one() {
        // N = 2·3·6 = 36, ⌈log₂ 36⌉ = 6.
        assert_eq!(inst(&[2, 3], &[&[2], &[3], &[2, 3]]).exponent(), 7);
        // N = 2, ⌈log₂ 2⌉ = 1.
        assert_eq!(inst(&[2], &[&[2]]).exponent(), 2);
    }

    #[test]
    fn single_gadget_doubles() {
        let i = inst(&[2], &[&[2]]);
        let chain = gen_exactcover(&i);
        let e = i.exponent() as i64;
        let steps = gadget_steps(&chain, 0, &q("1"));
        let de = 2i64.pow(e as u32);
        assert_eq!(steps[0].1, Rational::new(1, de));
        assert_eq!(steps[1].1, Rational::new(1, de / 2));
        let mut w = RunWitness::new(chain.source.clone());
        w.steps = steps;
        assert_eq!(simulate(&chain.vass, &w, SemanticsMode::ZTestContinuous).unwrap().values, qv("2 0"));
    }

    #[test]
    fn forced_pair_is_unique() {
        let i = inst(&[2], &[&[2]]);
        let chain = gen_exactcover(&i);
        let steps = gadget_steps(&chain, 0, &q("1"));
        for (k, bump) in [(0, q("1/1024")), (1, q("1/1024")), (0, q("-1/2048")), (1, q("-1/4096"))] {
            let mut w = RunWitness::new(chain.source.clone());
            w.steps = steps.clone();
            w.steps[k].1 += &bump;
            assert!(matches!(
                simulate(&chain.vass, &w, SemanticsMode::ZTestContinuous),
                Err(SimError::ZeroTestFailed { .. })
            ));
        }
    }

    #[test]
    fn gadget_guard() {
        let i = inst(&[2], &[&[2]]);
        let chain = gen_exactcover(&i);
        let e = i.exponent();
        let limit = Rational::from_int(2).pow(e - 1);
        let at = Configuration::new(0, RationalVec(vec![limit.clone(), q("0")]));
        let t = chain.lps.cycles()[0].clone();
        assert!(matches!(follow(&chain.vass, &t, &at.values), Follow::Done(..)));
        let over = RationalVec(vec![&limit + &q("1/7"), q("0")]);
        assert!(matches!(follow(&chain.vass, &t, &over), Follow::Blocked));
    }

    #[test]
    fn cover_checks() {
        let i = inst(&[2, 3], &[&[2], &[3], &[2, 3]]);
        let w = check_cover(&i, &[0, 1]).unwrap().unwrap();
        let chain = gen_exactcover(&i);
        assert_eq!(simulate(&chain.vass, &w, SemanticsMode::ZTestContinuous).unwrap().values, qv("6 0"));
        assert!(check_cover(&i, &[2]).unwrap().is_some());
        assert!(check_cover(&i, &[]).unwrap().is_none());
        assert!(check_cover(&i, &[0, 2]).unwrap().is_none());
    }

    #[test]
    fn reduction_agrees_with_brute_force() {
        for (u, sets) in [
            (&[2u64, 3][..], &[&[2u64][..], &[3], &[2, 3]][..]),
            (&[2, 3], &[&[2]]),
            (&[2, 3, 5], &[&[2, 3], &[3, 5], &[5]]),
        ] {
            let i = inst(u, sets);
            let chain = gen_exactcover(&i);
            let v = decide_lps_continuous_ztest(&chain.vass, &chain.lps, &chain.source, &chain.target, 4).unwrap();
            assert_eq!(v.is_reachable(), i.brute_force_cover().is_some(), "{u:?} {sets:?}");
            assert!(!matches!(v, Verdict::Inconclusive(_)));
        }
    }

    #[test]
    fn instance_enumeration_counts() {
        // Multisets of size 1..=2 over the 3 nonempty subsets of a 2-set: 3 + 6.
        let all = enumerate_instances(2, 2);
        assert_eq!(all.len(), 1 + 1 + 3 + 6);
    }

    #[test]
    fn unforced_is_inconclusive() {
        let mut v = Vass::new(1).unwrap();
        let p = v.add_state("p", &[]).unwrap();
        let r = v.add_state("r", &[]).unwrap();
        let t = v.add_transition(p, r, qv("1")).unwrap();
        let lps = Lps::from_path(&v, vec![t]).unwrap();
        let verdict = decide_lps_continuous_ztest(
            &v,
            &lps,
            &Configuration::new(p, qv("0")),
            &Configuration::new(r, qv("1/2")),
            4,
        )
        .unwrap();
        assert!(matches!(verdict, Verdict::Inconclusive(_)));
    }
}
