//! Cones, zonotopes, and the reachability-set descriptors built from them.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::csh::{self, CshOutcome, CshSystem};
use crate::lp::{self, LinearSystem, LpOutcome, Relation};
use crate::model::{Lps, Vass};
use crate::rational::{Rational, RationalVec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeomError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Rank of a set of vectors by exact Gaussian elimination.
pub fn rank(vectors: &[RationalVec]) -> usize {
    let mut rows: Vec<Vec<Rational>> = vectors.iter().map(|v| v.0.clone()).collect();
    let ncols = rows.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else { continue };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        for i in r + 1..rows.len() {
            if rows[i][c].is_zero() {
                continue;
            }
            let f = -(&rows[i][c] * &inv);
            for k in c..ncols {
                let v = rows[r][k].clone();
                rows[i][k].add_mul(&f, &v);
            }
        }
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    r
}

/// `span(a) = span(b)` iff `rank(a) = rank(b) = rank(a ∪ b)`.
pub fn same_span(a: &[RationalVec], b: &[RationalVec]) -> bool {
    let ra = rank(a);
    if ra != rank(b) {
        return false;
    }
    let both: Vec<RationalVec> = a.iter().chain(b).cloned().collect();
    rank(&both) == ra
}

/// `v = λu` for some `λ > 0`.
pub fn co_oriented(u: &RationalVec, v: &RationalVec) -> bool {
    let Some(i) = u.iter().position(|x| !x.is_zero()) else { return false };
    let lambda = &v[i] / &u[i];
    lambda.is_positive() && u.iter().zip(v.iter()).all(|(a, b)| &(a * &lambda) == b)
}

fn check_dim(expected: usize, y: &RationalVec) -> Result<(), GeomError> {
    if y.dim() != expected {
        return Err(GeomError::DimensionMismatch { expected, found: y.dim() });
    }
    Ok(())
}

/// Generator set of a cycle cone: distinct labels in first-occurrence order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConeGen {
    dim: usize,
    generators: Vec<RationalVec>,
}

impl ConeGen {
    pub fn new(dim: usize, labels: impl IntoIterator<Item = RationalVec>) -> Self {
        let mut generators: Vec<RationalVec> = Vec::new();
        for l in labels {
            assert_eq!(l.dim(), dim, "generator dimension");
            if !generators.contains(&l) {
                generators.push(l);
            }
        }
        ConeGen { dim, generators }
    }

    /// Generators of the cycle `path` in `vass`.
    pub fn of_cycle(vass: &Vass, path: &[usize]) -> Self {
        ConeGen::new(vass.dim(), path.iter().map(|&t| vass.label(t).clone()))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &[RationalVec] {
        &self.generators
    }

    pub fn rank(&self) -> usize {
        rank(&self.generators)
    }

    /// `cone(G)` equals its own span, i.e. `0 = Σ a_g g` with every `a_g > 0`.
    pub fn is_trivial(&self) -> bool {
        let nonzero: Vec<RationalVec> = self.generators.iter().filter(|g| !g.is_zero()).cloned().collect();
        nonzero.is_empty() || member_coeffs(self.dim, &[], &nonzero, &RationalVec::zeros(self.dim)).is_some()
    }

    pub fn merged(&self, other: &ConeGen) -> ConeGen {
        ConeGen::new(self.dim, self.generators.iter().chain(&other.generators).cloned())
    }
}

/// Zonotope generators obtained by summing co-oriented labels of a path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZonoGen {
    dim: usize,
    generators: Vec<RationalVec>,
    /// For each generator, the indices of the labels it sums.
    classes: Vec<Vec<usize>>,
    origin: Vec<RationalVec>,
}

impl ZonoGen {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &[RationalVec] {
        &self.generators
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    /// The label multiset this generator set was derived from.
    pub fn origin(&self) -> &[RationalVec] {
        &self.origin
    }

    /// `σ_G`, the sum of all generators.
    pub fn sigma(&self) -> RationalVec {
        let mut s = RationalVec::zeros(self.dim);
        for g in &self.generators {
            s = &s + g;
        }
        s
    }
}

/// Groups a label multiset into co-oriented classes. Zero labels are dropped;
/// each class is represented by its first occurrence.
pub fn group_multiset(dim: usize, labels: &[RationalVec]) -> ZonoGen {
    let mut reps: Vec<usize> = Vec::new();
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for (i, l) in labels.iter().enumerate() {
        assert_eq!(l.dim(), dim, "label dimension");
        if l.is_zero() {
            continue;
        }
        match reps.iter().position(|&r| co_oriented(&labels[r], l)) {
            Some(c) => classes[c].push(i),
            None => {
                reps.push(i);
                classes.push(vec![i]);
            }
        }
    }
    let generators = classes
        .iter()
        .map(|c| c.iter().fold(RationalVec::zeros(dim), |acc, &i| &acc + &labels[i]))
        .collect();
    ZonoGen { dim, generators, classes, origin: labels.to_vec() }
}

/// Solves `y = Σ a_i z_i + Σ b_j c_j` with `0 < a ≤ 1` and `b > 0`.
fn member_coeffs(
    dim: usize,
    zono: &[RationalVec],
    cone: &[RationalVec],
    y: &RationalVec,
) -> Option<RationalVec> {
    let n = zono.len() + cone.len();
    let mut sys = LinearSystem::new(n);
    for i in 0..dim {
        let terms: Vec<(usize, Rational)> =
            zono.iter().chain(cone).enumerate().map(|(j, g)| (j, g[i].clone())).collect();
        sys.add_sparse(&terms, Relation::Eq, y[i].clone());
    }
    for j in 0..zono.len() {
        sys.bound(j, Relation::Gt, Rational::zero());
        sys.bound(j, Relation::Le, Rational::one());
    }
    for j in zono.len()..n {
        sys.bound(j, Relation::Gt, Rational::zero());
    }
    match lp::feasible(&sys) {
        LpOutcome::Feasible(x) => Some(x),
        _ => None,
    }
}

/// Coefficients `a > 0` with `y = Σ a_i g_i`, an empty vector for `y = 0`,
/// or `None` if `y ∉ relint(cone(G)) ∪ {0}`.
pub fn cone_witness(g: &ConeGen, y: &RationalVec) -> Result<Option<RationalVec>, GeomError> {
    check_dim(g.dim, y)?;
    if y.is_zero() {
        return Ok(Some(RationalVec::zeros(g.generators.len())));
    }
    if g.generators.is_empty() {
        return Ok(None);
    }
    Ok(member_coeffs(g.dim, &[], &g.generators, y))
}

/// Membership in `relint(cone(G)) ∪ {0}`.
pub fn cone_member(g: &ConeGen, y: &RationalVec) -> Result<bool, GeomError> {
    Ok(cone_witness(g, y)?.is_some())
}

/// Coefficients `0 < a ≤ 1` with `y = Σ a_i g_i` over the zonotope generators.
pub fn zono_witness(g: &ZonoGen, y: &RationalVec) -> Result<Option<RationalVec>, GeomError> {
    check_dim(g.dim, y)?;
    Ok(member_coeffs(g.dim, &g.generators, &[], y))
}

/// Membership in `relint(zono(G_M)) ∪ adj(G_M)`.
pub fn zono_member(g: &ZonoGen, y: &RationalVec) -> Result<bool, GeomError> {
    Ok(zono_witness(g, y)?.is_some())
}

/// Reachability-set descriptor of a scheme: a zonotope part for the paths
/// plus one cone block per span class of cycles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachDescriptor {
    pub dim: usize,
    pub zono: ZonoGen,
    pub cone_blocks: Vec<ConeGen>,
    /// Cycle indices merged into each block.
    pub block_members: Vec<Vec<usize>>,
}

impl ReachDescriptor {
    /// Descriptor from raw generator data, merging cones with equal spans.
    pub fn from_parts(dim: usize, path_labels: &[RationalVec], cones: &[ConeGen]) -> Self {
        let zono = group_multiset(dim, path_labels);
        let mut cone_blocks: Vec<ConeGen> = Vec::new();
        let mut block_members: Vec<Vec<usize>> = Vec::new();
        for (i, c) in cones.iter().enumerate() {
            match cone_blocks.iter().position(|b| same_span(b.generators(), c.generators())) {
                Some(b) => {
                    cone_blocks[b] = cone_blocks[b].merged(c);
                    block_members[b].push(i);
                }
                None => {
                    cone_blocks.push(c.clone());
                    block_members.push(vec![i]);
                }
            }
        }
        ReachDescriptor { dim, zono, cone_blocks, block_members }
    }
}

pub fn describe(lps: &Lps, vass: &Vass) -> ReachDescriptor {
    let labels: Vec<RationalVec> = lps.path_concat().iter().map(|&t| vass.label(t).clone()).collect();
    let cones: Vec<ConeGen> = lps.cycles().iter().map(|c| ConeGen::of_cycle(vass, c)).collect();
    ReachDescriptor::from_parts(vass.dim(), &labels, &cones)
}

/// Decomposition `y = Σ a_i z_i + Σ_blocks Σ b_g g` returned by [`member_witness`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemberWitness {
    pub zono_coeffs: RationalVec,
    /// Per block: generator coefficients, all positive or all zero.
    pub block_coeffs: Vec<RationalVec>,
}

pub fn member_witness(desc: &ReachDescriptor, y: &RationalVec) -> Result<Option<MemberWitness>, GeomError> {
    check_dim(desc.dim, y)?;
    let nz = desc.zono.generators.len();
    let mut offsets = Vec::new();
    let mut n = nz;
    for b in &desc.cone_blocks {
        offsets.push(n);
        n += b.generators.len();
    }
    let mut base = LinearSystem::new(n);
    for i in 0..desc.dim {
        let mut terms: Vec<(usize, Rational)> =
            desc.zono.generators.iter().enumerate().map(|(j, g)| (j, g[i].clone())).collect();
        for (b, off) in desc.cone_blocks.iter().zip(&offsets) {
            terms.extend(b.generators.iter().enumerate().map(|(j, g)| (off + j, g[i].clone())));
        }
        base.add_sparse(&terms, Relation::Eq, y[i].clone());
    }
    for v in 0..n {
        base.nonneg(v);
    }
    for v in 0..nz {
        base.bound(v, Relation::Le, Rational::one());
    }
    let mut groups = vec![(0..nz).collect::<Vec<_>>()];
    for (b, off) in desc.cone_blocks.iter().zip(&offsets) {
        groups.push((*off..off + b.generators.len()).collect());
    }
    let sys = CshSystem::new(base, groups, [0]).expect("well-formed membership system");
    Ok(match csh::solve(&sys) {
        CshOutcome::Infeasible => None,
        CshOutcome::Feasible { witness, .. } => Some(MemberWitness {
            zono_coeffs: witness[..nz].iter().cloned().collect(),
            block_coeffs: desc
                .cone_blocks
                .iter()
                .zip(&offsets)
                .map(|(b, off)| witness[*off..off + b.generators.len()].iter().cloned().collect())
                .collect(),
        }),
    })
}

/// Membership in the reachability set described by `desc`.
pub fn member(desc: &ReachDescriptor, y: &RationalVec) -> Result<bool, GeomError> {
    Ok(member_witness(desc, y)?.is_some())
}

/// Planar variant of [`member`]: a disjunction of one strict LP per subset
/// of active blocks. Returns `None` unless `d = 2` with at most two blocks.
pub fn member_fast_d2(desc: &ReachDescriptor, y: &RationalVec) -> Result<Option<bool>, GeomError> {
    check_dim(desc.dim, y)?;
    if desc.dim != 2 || desc.cone_blocks.len() > 2 {
        return Ok(None);
    }
    let k = desc.cone_blocks.len();
    for mask in 0..(1usize << k) {
        let cone: Vec<RationalVec> = (0..k)
            .filter(|b| mask >> b & 1 == 1)
            .flat_map(|b| desc.cone_blocks[b].generators.iter().cloned())
            .collect();
        if member_coeffs(2, &desc.zono.generators, &cone, y).is_some() {
            return Ok(Some(true));
        }
    }
    Ok(Some(false))
}

/// Greedily drops cycles whose support is covered by the remaining cycles of
/// the same span; returns the kept indices in increasing order.
pub fn absorb_cycles(cycles: &[(ConeGen, BTreeSet<usize>)]) -> Vec<usize> {
    let n = cycles.len();
    let mut span_class = vec![usize::MAX; n];
    for i in 0..n {
        if span_class[i] != usize::MAX {
            continue;
        }
        span_class[i] = i;
        for j in i + 1..n {
            if span_class[j] == usize::MAX && same_span(cycles[i].0.generators(), cycles[j].0.generators()) {
                span_class[j] = i;
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| cycles[b].1.len().cmp(&cycles[a].1.len()).then(b.cmp(&a)));
    let mut kept = vec![true; n];
    for i in order {
        let covered: BTreeSet<usize> = (0..n)
            .filter(|&j| j != i && kept[j] && span_class[j] == span_class[i])
            .flat_map(|j| cycles[j].1.iter().copied())
            .collect();
        if cycles[i].1.is_subset(&covered) {
            kept[i] = false;
        }
    }
    (0..n).filter(|&i| kept[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_lps, parse_vass};
    use crate::rational::qv;

    fn vs(list: &[&str]) -> Vec<RationalVec> {
        list.iter().map(|s| qv(s)).collect()
    }

    fn zono() -> ZonoGen {
        group_multiset(2, &vs(&["3/2 1", "3/2 -1", "0 2"]))
    }

    #[test]
    fn grouping() {
        assert_eq!(group_multiset(2, &vs(&["1 0", "2 0"])).generators(), &vs(&["3 0"])[..]);
        assert_eq!(group_multiset(2, &vs(&["1 0", "-1 0"])).generators(), &vs(&["1 0", "-1 0"])[..]);
        assert!(group_multiset(2, &vs(&["0 0"])).generators().is_empty());
        let g = group_multiset(2, &vs(&["1 1", "0 0", "1 0", "2 2"]));
        assert_eq!(g.classes(), &[vec![0, 3], vec![2]]);
    }

    #[test]
    fn cone_examples() {
        let quad = ConeGen::new(2, vs(&["1 0", "0 1"]));
        assert!(cone_member(&quad, &qv("1/2 7/10")).unwrap());
        assert!(!cone_member(&quad, &qv("1 0")).unwrap());
        assert!(cone_member(&quad, &qv("0 0")).unwrap());
        let ray = ConeGen::new(2, vs(&["1 2", "2 4"]));
        assert!(cone_member(&ray, &qv("3 6")).unwrap());
        assert!(cone_member(&ray, &qv("0 0")).unwrap());
        assert!(!cone_member(&ray, &qv("-1 -2")).unwrap());
        assert!(matches!(cone_member(&ray, &qv("1")), Err(GeomError::DimensionMismatch { .. })));
    }

    #[test]
    fn cone_witness_is_positive() {
        let g = ConeGen::new(2, vs(&["1 2", "2 4"]));
        let a = cone_witness(&g, &qv("3 6")).unwrap().unwrap();
        assert!(a.iter().all(Rational::is_positive));
        assert_eq!(&qv("1 2").scaled(&a[0]) + &qv("2 4").scaled(&a[1]), qv("3 6"));
    }

    #[test]
    fn triviality() {
        assert!(ConeGen::new(2, vs(&["1 0", "-1 0"])).is_trivial());
        assert!(ConeGen::new(2, vs(&["1 0", "-1 1", "0 -1"])).is_trivial());
        assert!(!ConeGen::new(2, vs(&["1 0", "0 1"])).is_trivial());
        assert!(!ConeGen::new(2, vs(&["1 2"])).is_trivial());
        assert!(ConeGen::new(2, vs(&["0 0"])).is_trivial());
    }

    #[test]
    fn zono_zonotope() {
        let g = zono();
        assert_eq!(g.sigma(), qv("3 2"));
        assert!(zono_member(&g, &qv("3 2")).unwrap());
        assert!(!zono_member(&g, &qv("0 0")).unwrap());
        assert!(!zono_member(&g, &qv("3 0")).unwrap());
        assert!(!zono_member(&g, &qv("3/2 3")).unwrap());
        let a = zono_witness(&g, &qv("1 1")).unwrap().unwrap();
        let back = g.generators().iter().zip(a.iter()).fold(RationalVec::zeros(2), |acc, (v, k)| {
            &acc + &v.scaled(k)
        });
        assert_eq!(back, qv("1 1"));
        assert!(a.iter().all(|x| x.is_positive() && *x <= Rational::one()));
    }

    fn doubling() -> Vass {
        parse_vass(
            "vass 2\nstate q0\nstate q1\nstate q2\nstate q3\ntrans q0 q1 1 0\ntrans q0 q2 0 0\n\
             trans q1 q2 0 1\ntrans q2 q3 1 2\ntrans q3 q2 2 4\n",
        )
        .unwrap()
    }

    #[test]
    fn doubling_descriptor() {
        let v = doubling();
        let lps = parse_lps("path q0->q2 q2->q3\ncycle q3->q2 q2->q3\n", &v).unwrap();
        let d = describe(&lps, &v);
        assert_eq!(d.zono.generators(), &vs(&["1 2"])[..]);
        assert_eq!(d.cone_blocks.len(), 1);
        assert_eq!(d.cone_blocks[0].generators(), &vs(&["2 4", "1 2"])[..]);
        assert!(member(&d, &qv("3/2 3")).unwrap());
        assert!(!member(&d, &qv("1 1")).unwrap());
        assert_eq!(member_fast_d2(&d, &qv("3/2 3")).unwrap(), Some(true));
        assert_eq!(member_fast_d2(&d, &qv("1 1")).unwrap(), Some(false));
        let w = member_witness(&d, &qv("3/2 3")).unwrap().unwrap();
        assert_eq!(w.zono_coeffs.dim(), 1);
    }

    #[test]
    fn empty_descriptor() {
        let d = ReachDescriptor::from_parts(2, &[], &[]);
        assert!(member(&d, &qv("0 0")).unwrap());
        assert!(!member(&d, &qv("0 1")).unwrap());
        let v = doubling();
        let lps = parse_lps("path q0->q1\n", &v).unwrap();
        assert!(describe(&lps, &v).cone_blocks.is_empty());
    }

    #[test]
    fn equal_spans_merge() {
        let d = ReachDescriptor::from_parts(
            2,
            &[],
            &[ConeGen::new(2, vs(&["1 0"])), ConeGen::new(2, vs(&["2 0"])), ConeGen::new(2, vs(&["0 1"]))],
        );
        assert_eq!(d.block_members, vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn span_and_rank() {
        assert_eq!(rank(&vs(&["1 2 3", "2 4 6", "0 0 0"])), 1);
        assert_eq!(rank(&vs(&["1 0 0", "0 1 0", "1 1 0"])), 2);
        assert!(same_span(&vs(&["1 1"]), &vs(&["-2 -2"])));
        assert!(!same_span(&vs(&["1 0"]), &vs(&["1 0", "0 1"])));
        assert!(same_span(&[], &vs(&["0 0"])));
    }

    #[test]
    fn absorption() {
        let x = ConeGen::new(1, vs(&["1"]));
        let sup = |s: &[usize]| s.iter().copied().collect::<BTreeSet<_>>();
        assert_eq!(absorb_cycles(&[(x.clone(), sup(&[0])), (x.clone(), sup(&[0])), (x.clone(), sup(&[0]))]), vec![0]);
        assert_eq!(absorb_cycles(&[(x.clone(), sup(&[1])), (x.clone(), sup(&[2])), (x.clone(), sup(&[1, 2]))]), vec![0, 1]);
        let y = ConeGen::new(2, vs(&["0 1"]));
        let x2 = ConeGen::new(2, vs(&["1 0"]));
        assert_eq!(absorb_cycles(&[(x2, sup(&[0])), (y, sup(&[0]))]), vec![0, 1]);
    }
}
