//! Group-disjunction Horn systems: a linear base plus clauses of the form
//! "every variable of J is zero, or every variable of J is positive".

use std::collections::BTreeSet;

use thiserror::Error;

use crate::lp::{self, FeasibleRegion, LinearSystem, LpOutcome, Relation};
use crate::rational::{Rational, RationalVec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CshError {
    #[error("malformed system: {0}")]
    MalformedSystem(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CshSystem {
    base: LinearSystem,
    groups: Vec<Vec<usize>>,
    mandatory: BTreeSet<usize>,
}

fn has_nonneg_row(base: &LinearSystem, v: usize) -> bool {
    base.rows().iter().any(|r| {
        r.rhs.is_zero()
            && r.coeffs.iter().enumerate().all(|(j, c)| (j == v) != c.is_zero())
            && match r.rel {
                Relation::Ge => r.coeffs[v].is_positive(),
                Relation::Le => r.coeffs[v].is_negative(),
                _ => false,
            }
    })
}

impl CshSystem {
    pub fn new(
        base: LinearSystem,
        groups: Vec<Vec<usize>>,
        mandatory: impl IntoIterator<Item = usize>,
    ) -> Result<Self, CshError> {
        let bad = |m: String| Err(CshError::MalformedSystem(m));
        if base.has_strict() {
            return bad("base contains strict rows".into());
        }
        let mut seen = BTreeSet::new();
        for (g, vars) in groups.iter().enumerate() {
            for &v in vars {
                if v >= base.nvars() {
                    return bad(format!("group {g} references variable {v} out of range"));
                }
                if !seen.insert(v) {
                    return bad(format!("variable {v} appears in more than one group"));
                }
                if !has_nonneg_row(&base, v) {
                    return bad(format!("group variable {v} lacks a nonnegativity row"));
                }
            }
        }
        let mandatory: BTreeSet<usize> = mandatory.into_iter().collect();
        if let Some(&m) = mandatory.iter().find(|&&m| m >= groups.len()) {
            return bad(format!("mandatory group {m} does not exist"));
        }
        Ok(CshSystem { base, groups, mandatory })
    }

    pub fn base(&self) -> &LinearSystem {
        &self.base
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn mandatory(&self) -> &BTreeSet<usize> {
        &self.mandatory
    }

    /// The base with every group variable outside `active` fixed to zero.
    pub fn restricted(&self, active: &BTreeSet<usize>) -> LinearSystem {
        let mut sys = self.base.clone();
        for (g, vars) in self.groups.iter().enumerate() {
            if !active.contains(&g) {
                for &v in vars {
                    sys.bound(v, Relation::Eq, Rational::zero());
                }
            }
        }
        sys
    }

    /// Upper bound on LP calls made by [`solve`].
    pub fn lp_call_bound(&self) -> usize {
        let vars: usize = self.groups.iter().map(Vec::len).sum();
        (1 + vars) * (1 + self.groups.len())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CshOutcome {
    Feasible { witness: RationalVec, activated: BTreeSet<usize> },
    Infeasible,
}

impl CshOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, CshOutcome::Feasible { .. })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CshStats {
    pub lp_calls: usize,
}

struct Fixpoint {
    active: BTreeSet<usize>,
    /// Points of the final round, one per witnessed variable batch.
    points: Vec<RationalVec>,
    /// The restricted base was infeasible.
    empty: bool,
    /// A mandatory group was removed.
    mandatory_lost: bool,
}

fn fixpoint(sys: &CshSystem, stats: &mut CshStats, stop_on_mandatory: bool) -> Fixpoint {
    let mut active: BTreeSet<usize> = (0..sys.groups.len()).collect();
    loop {
        let Some(mut region) = FeasibleRegion::new(&sys.restricted(&active)).expect("base has no strict rows") else {
            stats.lp_calls += 1;
            return Fixpoint { active: BTreeSet::new(), points: Vec::new(), empty: true, mandatory_lost: false };
        };
        let mut points = Vec::new();
        let mut open: BTreeSet<usize> = active.iter().flat_map(|&g| sys.groups[g].iter().copied()).collect();
        // Maximize the sum of the variables not yet seen positive. Group
        // variables are nonnegative, so an optimum of zero means none of
        // them can be positive.
        while !open.is_empty() {
            stats.lp_calls += 1;
            let mut obj = RationalVec::zeros(sys.base.nvars());
            for &v in &open {
                obj[v] = Rational::one();
            }
            let point = match region.maximize(&obj).expect("objective matches the system") {
                LpOutcome::Infeasible => unreachable!("region is feasible"),
                LpOutcome::Feasible(x) => x,
                LpOutcome::Unbounded { point, ray } => {
                    // Walk along the ray until every growing variable reaches 1.
                    let k = open
                        .iter()
                        .filter(|&&v| ray[v].is_positive())
                        .map(|&v| &(&Rational::one() - &point[v]) / &ray[v])
                        .fold(Rational::zero(), |a, b| Rational::max(&a, &b));
                    &point + &ray.scaled(&k)
                }
            };
            let hit: Vec<usize> = open.iter().copied().filter(|&v| point[v].is_positive()).collect();
            if hit.is_empty() {
                break;
            }
            for v in hit {
                open.remove(&v);
            }
            points.push(point);
        }
        let failed: BTreeSet<usize> =
            active.iter().copied().filter(|&g| sys.groups[g].iter().any(|v| open.contains(v))).collect();
        if failed.is_empty() {
            return Fixpoint { active, points, empty: false, mandatory_lost: false };
        }
        active.retain(|g| !failed.contains(g));
        if stop_on_mandatory && failed.iter().any(|g| sys.mandatory.contains(g)) {
            return Fixpoint { active, points: Vec::new(), empty: false, mandatory_lost: true };
        }
    }
}

/// The largest set of groups that can be simultaneously positive.
pub fn max_support(sys: &CshSystem) -> BTreeSet<usize> {
    fixpoint(sys, &mut CshStats::default(), false).active
}

pub fn solve(sys: &CshSystem) -> CshOutcome {
    solve_with_stats(sys).0
}

pub fn solve_with_stats(sys: &CshSystem) -> (CshOutcome, CshStats) {
    let mut stats = CshStats::default();
    let fp = fixpoint(sys, &mut stats, true);
    if fp.empty || fp.mandatory_lost || !sys.mandatory.is_subset(&fp.active) {
        return (CshOutcome::Infeasible, stats);
    }
    let witness = if fp.points.is_empty() {
        stats.lp_calls += 1;
        match lp::feasible(&sys.restricted(&fp.active)) {
            LpOutcome::Feasible(x) => x,
            _ => return (CshOutcome::Infeasible, stats),
        }
    } else {
        let k = Rational::from_int(fp.points.len() as i64).recip();
        let mut acc = RationalVec::zeros(sys.base.nvars());
        for p in &fp.points {
            acc.add_scaled(&k, p);
        }
        acc
    };
    debug_assert!(sys.base.satisfies(&witness));
    (CshOutcome::Feasible { witness, activated: fp.active }, stats)
}
