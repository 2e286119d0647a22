//! General reachability by enumerating short linear path schemes.
//!
//! Candidate schemes are built from *minimal* walks: a walk is minimal when
//! none of its closed subwalks can be cut out without losing a visited
//! state. Every run decomposes into a minimal walk plus simple cycles through
//! its states, so in ℚ semantics it suffices to check each minimal walk with
//! all simple cycles through its states attached.

use std::collections::{BTreeSet, HashSet, VecDeque};

use rayon::prelude::*;

use super::{check_dims, decide_lps_nonneg, decide_lps_q, Query, ReachError, Verdict};
use crate::geometry::{absorb_cycles, ConeGen};
use crate::model::{support, Lps, SemanticsMode, Vass};

/// Search limits for [`solve_general`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnumBudget {
    /// Simple cycles considered.
    pub max_cycles: usize,
    pub max_cycle_len: usize,
    pub max_path_len: usize,
    /// Schemes checked before giving up.
    pub max_schemes: usize,
    /// Extra schemes tried by the ℚ≥0 closed-walk heuristic.
    pub heuristic_schemes: usize,
    /// Closed walks attached per heuristic scheme.
    pub heuristic_cycles: usize,
    /// Worker threads for scheme checking; 1 means sequential.
    pub jobs: usize,
}

impl EnumBudget {
    pub const CYCLE_CAP: usize = 64;

    /// Default limits: `d·|T|^(d+1)` cycles capped at [`Self::CYCLE_CAP`].
    pub fn for_vass(vass: &Vass) -> Self {
        let t = vass.num_transitions().max(1);
        let bound = (0..=vass.dim()).try_fold(vass.dim(), |acc, _| acc.checked_mul(t)).unwrap_or(usize::MAX);
        EnumBudget {
            max_cycles: bound.clamp(1, Self::CYCLE_CAP),
            max_cycle_len: 8,
            max_path_len: 16,
            max_schemes: 10_000,
            heuristic_schemes: 8,
            heuristic_cycles: 8,
            jobs: 1,
        }
    }

    /// Limits large enough that ℚ-semantics answers are always definitive.
    pub fn exhaustive(vass: &Vass) -> Self {
        let n = vass.num_states();
        EnumBudget {
            max_cycles: usize::MAX,
            max_cycle_len: n.max(1),
            max_path_len: (n * (n + 1) / 2).max(1),
            max_schemes: usize::MAX,
            heuristic_schemes: 64,
            heuristic_cycles: 16,
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EnumStats {
    pub walks: usize,
    pub simple_cycles: usize,
    pub schemes_checked: usize,
    /// The ℚ-semantics search space was covered completely.
    pub exhaustive: bool,
}

/// States reachable from `from` along `allowed` transitions (or backwards).
fn closure(vass: &Vass, from: usize, forward: bool) -> Vec<bool> {
    let mut seen = vec![false; vass.num_states()];
    seen[from] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(s) = queue.pop_front() {
        for &(a, b) in vass.transitions() {
            let (x, y) = if forward { (a, b) } else { (b, a) };
            if x == s && !seen[y] {
                seen[y] = true;
                queue.push_back(y);
            }
        }
    }
    seen
}

/// The useful part of the graph between source and target.
struct Graph {
    /// Useful outgoing transitions per state, in index order.
    out: Vec<Vec<usize>>,
    /// Shortest distance to the target.
    dist: Vec<usize>,
    useful: Vec<bool>,
}

impl Graph {
    fn new(vass: &Vass, p: usize, q: usize) -> Option<Self> {
        let fwd = closure(vass, p, true);
        if !fwd[q] {
            return None;
        }
        let bwd = closure(vass, q, false);
        let useful: Vec<bool> = (0..vass.num_states()).map(|s| fwd[s] && bwd[s]).collect();
        let mut out = vec![Vec::new(); vass.num_states()];
        for (t, &(a, b)) in vass.transitions().iter().enumerate() {
            if useful[a] && useful[b] {
                out[a].push(t);
            }
        }
        let mut dist = vec![usize::MAX; vass.num_states()];
        dist[q] = 0;
        let mut queue = VecDeque::from([q]);
        while let Some(s) = queue.pop_front() {
            for (t, &(a, b)) in vass.transitions().iter().enumerate() {
                let _ = t;
                if b == s && useful[a] && dist[a] == usize::MAX {
                    dist[a] = dist[s] + 1;
                    queue.push_back(a);
                }
            }
        }
        Some(Graph { out, dist, useful })
    }
}

/// A walk is minimal if no closed subwalk `s_i … s_j` can be removed while
/// keeping every visited state.
fn is_minimal(states: &[usize]) -> bool {
    let n = states.len();
    for i in 0..n {
        for j in i + 1..n {
            if states[i] != states[j] {
                continue;
            }
            let outside: HashSet<usize> = states[..=i].iter().chain(&states[j + 1..]).copied().collect();
            if states[i + 1..=j].iter().all(|s| outside.contains(s)) {
                return false;
            }
        }
    }
    true
}

/// Minimal walks from `p` to `q` of exactly `len` transitions, in
/// lexicographic order of transition indices.
fn walks_of_len(vass: &Vass, g: &Graph, p: usize, q: usize, len: usize, out: &mut Vec<Vec<usize>>) {
    fn rec(
        vass: &Vass,
        g: &Graph,
        q: usize,
        len: usize,
        trans: &mut Vec<usize>,
        states: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        let s = *states.last().unwrap();
        if trans.len() == len {
            if s == q {
                out.push(trans.clone());
            }
            return;
        }
        for &t in &g.out[s] {
            let nxt = vass.transition(t).1;
            if g.dist[nxt] > len - trans.len() - 1 {
                continue;
            }
            states.push(nxt);
            if is_minimal(states) {
                trans.push(t);
                rec(vass, g, q, len, trans, states, out);
                trans.pop();
            }
            states.pop();
        }
    }
    rec(vass, g, q, len, &mut Vec::new(), &mut vec![p], out);
}

/// True if some minimal walk from `p` has exactly `len` transitions.
fn minimal_walk_exists(vass: &Vass, g: &Graph, p: usize, len: usize) -> bool {
    fn rec(vass: &Vass, g: &Graph, len: usize, states: &mut Vec<usize>) -> bool {
        if states.len() == len + 1 {
            return true;
        }
        let s = *states.last().unwrap();
        for &t in &g.out[s] {
            states.push(vass.transition(t).1);
            let found = is_minimal(states) && rec(vass, g, len, states);
            states.pop();
            if found {
                return true;
            }
        }
        false
    }
    rec(vass, g, len, &mut vec![p])
}

/// Rotation with lexicographically least transition sequence.
fn canonical_rotation(c: &[usize]) -> Vec<usize> {
    (0..c.len())
        .map(|r| c[r..].iter().chain(&c[..r]).copied().collect::<Vec<_>>())
        .min()
        .unwrap_or_default()
}

/// Rotates `c` so that it starts at `state`.
fn rotate_to(vass: &Vass, c: &[usize], state: usize) -> Vec<usize> {
    let r = c.iter().position(|&t| vass.transition(t).0 == state).expect("cycle passes through state");
    c[r..].iter().chain(&c[..r]).copied().collect()
}

struct CycleSet {
    cycles: Vec<Vec<usize>>,
    /// A simple cycle was skipped for exceeding the length limit.
    length_cut: bool,
    /// Enumeration stopped at the count limit.
    count_cut: bool,
}

/// Simple cycles of the useful subgraph in canonical rotation, ordered by
/// length and then lexicographically.
fn simple_cycles(vass: &Vass, g: &Graph, budget: &EnumBudget) -> CycleSet {
    let n = vass.num_states();
    let mut found: Vec<Vec<usize>> = Vec::new();
    let mut length_cut = false;
    let mut count_cut = false;
    let limit = budget.max_cycles;
    'outer: for s in 0..n {
        if !g.useful[s] {
            continue;
        }
        // Depth-first over states > s, closing back at s.
        let mut stack: Vec<(usize, usize)> = vec![(s, 0)];
        let mut path: Vec<usize> = Vec::new();
        let mut on_path = vec![false; n];
        on_path[s] = true;
        while let Some(&mut (state, ref mut next)) = stack.last_mut() {
            if *next >= g.out[state].len() {
                stack.pop();
                if let Some(t) = path.pop() {
                    on_path[vass.transition(t).1] = false;
                }
                continue;
            }
            let t = g.out[state][*next];
            *next += 1;
            let dst = vass.transition(t).1;
            if dst == s {
                if path.len() + 1 > budget.max_cycle_len {
                    length_cut = true;
                } else {
                    let mut c = path.clone();
                    c.push(t);
                    found.push(canonical_rotation(&c));
                    if found.len() > limit {
                        count_cut = true;
                        found.pop();
                        break 'outer;
                    }
                }
            } else if dst > s && !on_path[dst] {
                on_path[dst] = true;
                path.push(t);
                stack.push((dst, 0));
            }
        }
    }
    found.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    CycleSet { cycles: found, length_cut, count_cut }
}

/// Inserts `cycles` into `walk`; each `(position, cycle)` pair places a cycle
/// at the state reached after `position` transitions. Pairs must be sorted by
/// position.
fn build_scheme(vass: &Vass, walk: &[usize], placed: &[(usize, Vec<usize>)]) -> Lps {
    let mut paths = Vec::new();
    let mut cycles = Vec::new();
    let mut start = 0;
    for (pos, c) in placed {
        paths.push(walk[start..*pos].to_vec());
        cycles.push(c.clone());
        start = *pos;
    }
    paths.push(walk[start..].to_vec());
    Lps::new(vass, paths, cycles).expect("constructed scheme is valid")
}

fn walk_states(vass: &Vass, p: usize, walk: &[usize]) -> Vec<usize> {
    std::iter::once(p).chain(walk.iter().map(|&t| vass.transition(t).1)).collect()
}

fn cycle_states(vass: &Vass, c: &[usize]) -> BTreeSet<usize> {
    c.iter().map(|&t| vass.transition(t).0).collect()
}

/// Scheme for `walk` with every simple cycle through its states attached at
/// its first visit, after dropping cycles absorbed by others of equal span.
fn attach_simple_cycles(vass: &Vass, p: usize, walk: &[usize], cycles: &[Vec<usize>]) -> Lps {
    let states = walk_states(vass, p, walk);
    let visited: BTreeSet<usize> = states.iter().copied().collect();
    let touching: Vec<&Vec<usize>> =
        cycles.iter().filter(|c| cycle_states(vass, c).iter().any(|s| visited.contains(s))).collect();
    let data: Vec<(ConeGen, BTreeSet<usize>)> =
        touching.iter().map(|c| (ConeGen::of_cycle(vass, c), support(c))).collect();
    let kept = absorb_cycles(&data);
    let mut placed: Vec<(usize, Vec<usize>)> = kept
        .into_iter()
        .map(|i| {
            let cs = cycle_states(vass, touching[i]);
            let pos = states.iter().position(|s| cs.contains(s)).unwrap();
            (pos, rotate_to(vass, touching[i], states[pos]))
        })
        .collect();
    placed.sort_by_key(|(pos, _)| *pos);
    build_scheme(vass, walk, &placed)
}

/// Closed walks at `state` of length at most `max_len`, shortest first.
fn closed_walks(vass: &Vass, g: &Graph, state: usize, max_len: usize, cap: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &frontier {
            let s = w.last().map_or(state, |&t| vass.transition(t).1);
            for &t in &g.out[s] {
                let mut x = w.clone();
                x.push(t);
                if vass.transition(t).1 == state {
                    out.push(x.clone());
                    if out.len() >= cap {
                        return out;
                    }
                }
                next.push(x);
            }
        }
        frontier = next;
        if frontier.len() > 4096 {
            break;
        }
    }
    out
}

/// Scheme for `walk` with closed walks of length ≤ `len` attached at every
/// position, at most `cap` in total.
fn attach_closed_walks(vass: &Vass, g: &Graph, p: usize, walk: &[usize], len: usize, cap: usize) -> (Lps, bool) {
    let states = walk_states(vass, p, walk);
    let mut placed = Vec::new();
    let mut truncated = false;
    'outer: for (pos, &s) in states.iter().enumerate() {
        for c in closed_walks(vass, g, s, len, cap) {
            if placed.len() >= cap {
                truncated = true;
                break 'outer;
            }
            placed.push((pos, c));
        }
    }
    (build_scheme(vass, walk, &placed), truncated)
}

type Check<'a> = dyn Fn(&Lps) -> Result<Option<Verdict>, ReachError> + Sync + 'a;

/// Checks schemes in order, in parallel batches when `jobs > 1`; the first
/// reachable scheme in sequence order wins.
fn first_hit(schemes: &[Lps], jobs: usize, check: &Check<'_>) -> Result<Option<Verdict>, ReachError> {
    if jobs <= 1 {
        for s in schemes {
            if let Some(v) = check(s)? {
                return Ok(Some(v));
            }
        }
        return Ok(None);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| ReachError::InternalInconsistency(e.to_string()))?;
    pool.install(|| {
        for batch in schemes.chunks(jobs * 4) {
            let results: Vec<Result<Option<Verdict>, ReachError>> = batch.par_iter().map(|s| check(s)).collect();
            for r in results {
                if let Some(v) = r? {
                    return Ok(Some(v));
                }
            }
        }
        Ok(None)
    })
}

/// Decides `p(x) →* q(y)` without a given scheme by checking candidate
/// schemes in order of increasing walk length.
///
/// ℚ mode reports `Unreachable` only when the search was exhaustive. ℚ≥0
/// mode reports `Unreachable` when the target is not even ℚ-reachable
/// (exhaustively) and otherwise falls back to a bounded heuristic search.
pub fn solve_general(query: &Query<'_>, budget: &EnumBudget) -> Result<(Verdict, EnumStats), ReachError> {
    let vass = query.vass;
    check_dims(vass, &query.source)?;
    check_dims(vass, &query.target)?;
    let nonneg = match query.mode {
        SemanticsMode::Q => false,
        SemanticsMode::QNonNeg => true,
        m => return Err(ReachError::UnsupportedMode(m)),
    };
    let mut stats = EnumStats::default();
    if nonneg && (!query.source.values.is_nonneg() || !query.target.values.is_nonneg()) {
        stats.exhaustive = true;
        return Ok((Verdict::Unreachable, stats));
    }
    let (p, q) = (query.source.state, query.target.state);
    let Some(g) = Graph::new(vass, p, q) else {
        stats.exhaustive = true;
        return Ok((Verdict::Unreachable, stats));
    };
    let cs = simple_cycles(vass, &g, budget);
    stats.simple_cycles = cs.cycles.len();

    // Candidate schemes, deduplicated on (transition multiset, visited states).
    let mut seen: HashSet<(Vec<usize>, BTreeSet<usize>)> = HashSet::new();
    let mut walks: Vec<Vec<usize>> = Vec::new();
    let mut schemes: Vec<Lps> = Vec::new();
    let mut scheme_cut = false;
    'len: for len in 0..=budget.max_path_len {
        let mut found = Vec::new();
        walks_of_len(vass, &g, p, q, len, &mut found);
        for w in found {
            stats.walks += 1;
            let mut key = w.clone();
            key.sort_unstable();
            let visited: BTreeSet<usize> = walk_states(vass, p, &w).into_iter().collect();
            if !seen.insert((key, visited)) {
                continue;
            }
            if schemes.len() >= budget.max_schemes {
                scheme_cut = true;
                break 'len;
            }
            schemes.push(attach_simple_cycles(vass, p, &w, &cs.cycles));
            walks.push(w);
        }
    }
    let path_cut = minimal_walk_exists(vass, &g, p, budget.max_path_len + 1);
    stats.exhaustive = !(path_cut || cs.length_cut || cs.count_cut || scheme_cut);

    let source = &query.source;
    let target = &query.target;
    let q_reachable = std::sync::atomic::AtomicBool::new(false);
    let check = |lps: &Lps| -> Result<Option<Verdict>, ReachError> {
        let qv = decide_lps_q(vass, lps, source, target)?;
        if !nonneg {
            return Ok(qv.is_reachable().then_some(qv));
        }
        if !qv.is_reachable() {
            return Ok(None);
        }
        q_reachable.store(true, std::sync::atomic::Ordering::Relaxed);
        let v = decide_lps_nonneg(vass, lps, source, target)?;
        Ok(v.is_reachable().then_some(v))
    };
    stats.schemes_checked += schemes.len();
    if let Some(v) = first_hit(&schemes, budget.jobs, &check)? {
        return Ok((v, stats));
    }
    let any_q = q_reachable.load(std::sync::atomic::Ordering::Relaxed);
    if stats.exhaustive && !any_q {
        return Ok((Verdict::Unreachable, stats));
    }
    if !nonneg {
        return Ok((Verdict::Inconclusive("search budget exhausted".into()), stats));
    }

    // Heuristic ℚ≥0 phase: closed walks at every position of each walk.
    let mut extra = Vec::new();
    let mut remaining = budget.heuristic_schemes;
    'walks: for len in 1..=budget.max_cycle_len {
        for w in &walks {
            if remaining == 0 {
                break 'walks;
            }
            let (lps, _) = attach_closed_walks(vass, &g, p, w, len, budget.heuristic_cycles);
            if lps.num_cycles() > 0 && !schemes.contains(&lps) && !extra.contains(&lps) {
                extra.push(lps);
                remaining -= 1;
            }
        }
    }
    stats.schemes_checked += extra.len();
    let check_nonneg = |lps: &Lps| -> Result<Option<Verdict>, ReachError> {
        let v = decide_lps_nonneg(vass, lps, source, target)?;
        Ok(v.is_reachable().then_some(v))
    };
    if let Some(v) = first_hit(&extra, budget.jobs, &check_nonneg)? {
        return Ok((v, stats));
    }
    Ok((Verdict::Inconclusive("no scheme found within the search budget".into()), stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{doubling, parse_vass, simulate, Configuration};
    use crate::rational::qv;

    fn query<'a>(v: &'a Vass, from: (&str, &str), to: (&str, &str), mode: SemanticsMode) -> Query<'a> {
        Query {
            vass: v,
            source: Configuration::new(v.state_id(from.0).unwrap(), qv(from.1)),
            target: Configuration::new(v.state_id(to.0).unwrap(), qv(to.1)),
            mode,
            scheme: None,
        }
    }

    fn assert_reaches(v: &Vass, q: &Query<'_>, budget: &EnumBudget) {
        match solve_general(q, budget).unwrap().0 {
            Verdict::Reachable { witness, .. } => {
                assert_eq!(simulate(v, &witness, q.mode).unwrap(), q.target);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn minimality() {
        assert!(is_minimal(&[0, 1, 2]));
        assert!(!is_minimal(&[0, 1, 0, 1]));
        assert!(is_minimal(&[0, 1, 0]));
        assert!(!is_minimal(&[0, 0]));
        assert!(is_minimal(&[0, 1, 1, 2]) == false);
        assert!(is_minimal(&[0, 1, 2, 1, 3]));
    }

    #[test]
    fn doubling_general() {
        let v = doubling();
        for mode in [SemanticsMode::Q, SemanticsMode::QNonNeg] {
            let q = query(&v, ("q0", "0 0"), ("q3", "3/2 3"), mode);
            assert_reaches(&v, &q, &EnumBudget::for_vass(&v));
        }
        let q = query(&v, ("q0", "0 0"), ("q3", "1 0"), SemanticsMode::Q);
        let (verdict, stats) = solve_general(&q, &EnumBudget::for_vass(&v)).unwrap();
        assert!(stats.exhaustive);
        assert_eq!(verdict, Verdict::Unreachable);
    }

    #[test]
    fn pruning() {
        let v = doubling();
        let q = query(&v, ("q3", "0 0"), ("q0", "0 0"), SemanticsMode::Q);
        assert_eq!(solve_general(&q, &EnumBudget::for_vass(&v)).unwrap().0, Verdict::Unreachable);
    }

    #[test]
    fn self_loop() {
        let v = parse_vass("vass 1\nstate p\ntrans p p 1\n").unwrap();
        for mode in [SemanticsMode::Q, SemanticsMode::QNonNeg] {
            assert_reaches(&v, &query(&v, ("p", "0"), ("p", "5"), mode), &EnumBudget::for_vass(&v));
        }
        let q = query(&v, ("p", "0"), ("p", "-1"), SemanticsMode::QNonNeg);
        assert_eq!(solve_general(&q, &EnumBudget::for_vass(&v)).unwrap().0, Verdict::Unreachable);
    }

    #[test]
    fn needs_composite_cycle_in_nonneg() {
        // Loop at p only usable after r's loop raised the counter.
        let v = parse_vass(
            "vass 1\nstate p\nstate r\ntrans p r 0\ntrans r p 0\ntrans r r 1\ntrans p p -1\n",
        )
        .unwrap();
        let q = query(&v, ("p", "0"), ("p", "0"), SemanticsMode::QNonNeg);
        assert_reaches(&v, &q, &EnumBudget::for_vass(&v));
        let q = query(&v, ("p", "0"), ("r", "3"), SemanticsMode::QNonNeg);
        assert_reaches(&v, &q, &EnumBudget::for_vass(&v));
    }

    #[test]
    fn budget_exhaustion_is_inconclusive() {
        let v = doubling();
        let q = query(&v, ("q0", "0 0"), ("q3", "1 1"), SemanticsMode::Q);
        let tiny = EnumBudget { max_path_len: 1, ..EnumBudget::for_vass(&v) };
        assert!(matches!(solve_general(&q, &tiny).unwrap().0, Verdict::Inconclusive(_)));
    }

    #[test]
    fn parallel_matches_sequential() {
        let v = doubling();
        let q = query(&v, ("q0", "0 0"), ("q3", "5 9"), SemanticsMode::Q);
        let seq = solve_general(&q, &EnumBudget::for_vass(&v)).unwrap().0;
        let par = solve_general(&q, &EnumBudget { jobs: 4, ..EnumBudget::for_vass(&v) }).unwrap().0;
        assert_eq!(seq, par);
    }

    #[test]
    fn canonical_rotations() {
        assert_eq!(canonical_rotation(&[3, 1, 2]), vec![1, 2, 3]);
        assert_eq!(canonical_rotation(&[2, 0, 1, 0]), vec![0, 1, 0, 2]);
    }
}
