//! Master Horn systems for scheme reachability.

use crate::csh::CshSystem;
use crate::lp::{LinearSystem, Relation};
use crate::model::{Lps, Vass};
use crate::rational::{Rational, RationalVec};

/// Variable layout of a ℚ-semantics cycle: one coefficient per distinct label.
#[derive(Debug, Clone)]
pub(crate) struct CycleQ {
    pub offset: usize,
    pub labels: Vec<RationalVec>,
    /// For each position of the cycle, the index of its label in `labels`.
    pub occ_label: Vec<usize>,
}

#[derive(Debug, Clone)]
pub(crate) struct QLayout {
    /// One coefficient per transition occurrence of `π0 π1 … πn`, starting at 0.
    pub n_path: usize,
    pub cycles: Vec<CycleQ>,
}

pub(crate) fn cycle_q(vass: &Vass, cycle: &[usize], offset: usize) -> CycleQ {
    let mut labels: Vec<RationalVec> = Vec::new();
    let occ_label = cycle
        .iter()
        .map(|&t| {
            let l = vass.label(t);
            match labels.iter().position(|x| x == l) {
                Some(i) => i,
                None => {
                    labels.push(l.clone());
                    labels.len() - 1
                }
            }
        })
        .collect();
    CycleQ { offset, labels, occ_label }
}

/// `Σ α·labels + Σ β·generators = delta` with `0 ≤ α ≤ 1` in a mandatory
/// group and `β ≥ 0` grouped per cycle.
pub(crate) fn encode_q(vass: &Vass, lps: &Lps, delta: &RationalVec) -> (CshSystem, QLayout) {
    let path = lps.path_concat();
    let n_path = path.len();
    let mut n = n_path;
    let mut cycles = Vec::new();
    for c in lps.cycles() {
        let cq = cycle_q(vass, c, n);
        n += cq.labels.len();
        cycles.push(cq);
    }
    let mut sys = LinearSystem::new(n);
    for i in 0..vass.dim() {
        let mut terms: Vec<(usize, Rational)> =
            path.iter().enumerate().map(|(j, &t)| (j, vass.label(t)[i].clone())).collect();
        for cq in &cycles {
            terms.extend(cq.labels.iter().enumerate().map(|(j, g)| (cq.offset + j, g[i].clone())));
        }
        sys.add_sparse(&terms, Relation::Eq, delta[i].clone());
    }
    for v in 0..n {
        sys.nonneg(v);
    }
    for v in 0..n_path {
        sys.bound(v, Relation::Le, Rational::one());
    }
    let mut groups = vec![(0..n_path).collect::<Vec<_>>()];
    groups.extend(cycles.iter().map(|c| (c.offset..c.offset + c.labels.len()).collect()));
    let csh = CshSystem::new(sys, groups, [0]).expect("well-formed scheme system");
    (csh, QLayout { n_path, cycles })
}

/// A segment boundary: a fixed vector or `d` consecutive variables.
#[derive(Debug, Clone)]
pub(crate) enum Boundary {
    Const(RationalVec),
    Var(usize),
}

impl Boundary {
    /// Coordinate `i` as `(terms, constant)`.
    fn coord(&self, i: usize) -> (Vec<(usize, Rational)>, Rational) {
        match self {
            Boundary::Const(v) => (Vec::new(), v[i].clone()),
            Boundary::Var(off) => (vec![(off + i, Rational::one())], Rational::zero()),
        }
    }

    pub fn value(&self, witness: &RationalVec, dim: usize) -> RationalVec {
        match self {
            Boundary::Const(v) => v.clone(),
            Boundary::Var(off) => witness[*off..off + dim].iter().cloned().collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) enum SegmentN {
    /// Path coefficients at `offset..offset + len`.
    Path { offset: usize },
    /// Cycle coefficients β, γ, δ and the backward start point y'.
    Cycle { beta: usize },
}

#[derive(Debug, Clone)]
pub(crate) struct NLayout {
    /// Boundaries before each segment and after the last one.
    pub boundaries: Vec<Boundary>,
    pub segments: Vec<SegmentN>,
}

/// Row builder for `Σ terms + constant  rel  rhs`.
struct Rows {
    sys: LinearSystem,
}

impl Rows {
    fn add(&mut self, terms: Vec<(usize, Rational)>, constant: Rational, rel: Relation, rhs: Rational) {
        self.sys.add_sparse(&terms, rel, &rhs - &constant);
    }
}

/// Coordinate `i` of `b + Σ_{j<upto} coeffs[j] · label_j`.
fn prefix(
    vass: &Vass,
    b: &Boundary,
    seg: &[usize],
    coeff_offset: usize,
    upto: usize,
    i: usize,
) -> (Vec<(usize, Rational)>, Rational) {
    let (mut terms, c) = b.coord(i);
    for (j, &t) in seg[..upto].iter().enumerate() {
        let l = &vass.label(t)[i];
        if !l.is_zero() {
            terms.push((coeff_offset + j, l.clone()));
        }
    }
    (terms, c)
}

/// Nonnegative-semantics encoding: segments chained through boundary
/// vectors, path prefixes kept nonnegative, and each cycle described by an
/// effect vector β plus forward and backward single traversals γ and δ,
/// all in one activation group.
pub(crate) fn encode_nonneg(
    vass: &Vass,
    lps: &Lps,
    source: &RationalVec,
    target: &RationalVec,
) -> (CshSystem, NLayout) {
    let d = vass.dim();
    let segs: Vec<(bool, &[usize])> = lps.segments().collect();
    // Allocate variables first.
    let mut n = 0;
    let mut boundaries = vec![Boundary::Const(source.clone())];
    let mut segments = Vec::new();
    for (k, (is_cycle, seg)) in segs.iter().enumerate() {
        let m = seg.len();
        if *is_cycle {
            segments.push(SegmentN::Cycle { beta: n });
            n += 3 * m + d;
        } else {
            segments.push(SegmentN::Path { offset: n });
            n += m;
        }
        let next = if k + 1 == segs.len() {
            Boundary::Const(target.clone())
        } else if !is_cycle && m == 0 {
            boundaries[k].clone()
        } else {
            n += d;
            Boundary::Var(n - d)
        };
        boundaries.push(next);
    }

    let mut rows = Rows { sys: LinearSystem::new(n) };
    let mut path_group = Vec::new();
    let mut cycle_groups = Vec::new();
    let zero = Rational::zero;
    for (k, (_, seg)) in segs.iter().enumerate() {
        let (cur, next) = (&boundaries[k], &boundaries[k + 1]);
        if let Boundary::Var(off) = next {
            for i in 0..d {
                rows.sys.nonneg(off + i);
            }
        }
        let m = seg.len();
        match segments[k] {
            SegmentN::Path { offset } => {
                for j in 0..m {
                    rows.sys.nonneg(offset + j);
                    rows.sys.bound(offset + j, Relation::Le, Rational::one());
                    path_group.push(offset + j);
                }
                for i in 0..d {
                    for upto in 1..m {
                        let (t, c) = prefix(vass, cur, seg, offset, upto, i);
                        rows.add(t, c, Relation::Ge, zero());
                    }
                    let (mut t, c) = prefix(vass, cur, seg, offset, m, i);
                    let (nt, nc) = next.coord(i);
                    t.extend(nt.into_iter().map(|(v, a)| (v, -a)));
                    rows.add(t, &c - &nc, Relation::Eq, zero());
                }
            }
            SegmentN::Cycle { beta } => {
                let (gamma, delta, yp) = (beta + m, beta + 2 * m, beta + 3 * m);
                for j in 0..m {
                    rows.sys.nonneg(beta + j);
                    for v in [gamma + j, delta + j] {
                        rows.sys.nonneg(v);
                        rows.sys.bound(v, Relation::Le, Rational::one());
                    }
                }
                for i in 0..d {
                    rows.sys.nonneg(yp + i);
                }
                let yb = Boundary::Var(yp);
                for i in 0..d {
                    // next − cur = Σ β_j c_j
                    let (mut t, c) = prefix(vass, cur, seg, beta, m, i);
                    let (nt, nc) = next.coord(i);
                    t.extend(nt.into_iter().map(|(v, a)| (v, -a)));
                    rows.add(t, &c - &nc, Relation::Eq, zero());
                    // Forward traversal from cur.
                    for upto in 1..=m {
                        let (t, c) = prefix(vass, cur, seg, gamma, upto, i);
                        rows.add(t, c, Relation::Ge, zero());
                    }
                    // Backward traversal from y' ending at next.
                    for upto in 1..m {
                        let (t, c) = prefix(vass, &yb, seg, delta, upto, i);
                        rows.add(t, c, Relation::Ge, zero());
                    }
                    let (mut t, c) = prefix(vass, &yb, seg, delta, m, i);
                    let (nt, nc) = next.coord(i);
                    t.extend(nt.into_iter().map(|(v, a)| (v, -a)));
                    rows.add(t, &c - &nc, Relation::Eq, zero());
                }
                cycle_groups.push((beta..beta + 3 * m).collect::<Vec<_>>());
            }
        }
    }
    let mut groups = vec![path_group];
    groups.extend(cycle_groups);
    let csh = CshSystem::new(rows.sys, groups, [0]).expect("well-formed scheme system");
    (csh, NLayout { boundaries, segments })
}
