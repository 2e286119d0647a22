//! Brute-force reference procedures used to validate the solvers. They are
//! deliberately exponential and bounded, and share no solver code.

pub mod random;

use std::collections::{HashMap, HashSet, VecDeque};

use num_traits::ToPrimitive;
use num_integer::Integer;
use thiserror::Error;

use crate::csh::CshSystem;
use crate::geometry::{member, GeomError, ReachDescriptor};
use crate::lp::{LinearSystem, Relation};
use crate::model::{simulate, Configuration, Lps, RunWitness, SemanticsMode, Vass};
use crate::rational::{Rational, RationalVec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{found} variables exceed the limit of {limit}")]
    VariableLimitExceeded { found: usize, limit: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("values too large for the grid search")]
    Overflow,
}

/// Coefficient grid `{1/D, …, 1}`, at most `max_reps` traversals per cycle and
/// `max_steps` steps in total.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub denom: u32,
    pub max_reps: usize,
    pub max_steps: usize,
}

impl GridSpec {
    pub fn new(denom: u32, max_reps: usize) -> Self {
        GridSpec { denom: denom.max(1), max_reps, max_steps: usize::MAX }
    }
}

type Point = Vec<i128>;

struct Node {
    parent: usize,
    step: Option<(usize, u32)>,
}

/// Layered search state: scaled points reached so far, each tied to an arena
/// node recording how it was reached.
struct Grid<'a> {
    vass: &'a Vass,
    mode: SemanticsMode,
    coeffs: Vec<u32>,
    denom: u32,
    /// Scale turning every relevant rational into an integer.
    scale: i128,
    labels: HashMap<usize, Vec<i128>>,
    nodes: Vec<Node>,
}

fn lcm_all<'a>(vals: impl Iterator<Item = &'a Rational>) -> Option<i128> {
    let mut l: i128 = 1;
    for v in vals {
        let d = v.denom().to_i128()?;
        l = l.lcm(&d);
        if l > 1 << 40 {
            return None;
        }
    }
    Some(l)
}

impl<'a> Grid<'a> {
    fn scaled(&self, x: &RationalVec) -> Option<Point> {
        x.iter()
            .map(|v| {
                let s = v * &Rational::from_int(self.scale as i64);
                if s.is_integer() { s.numer().to_i128() } else { None }
            })
            .collect()
    }

    fn ok(&self, state: usize, p: &Point) -> bool {
        match self.mode {
            SemanticsMode::QNonNeg => p.iter().all(|&v| v >= 0),
            SemanticsMode::ZTestContinuous | SemanticsMode::ZTestDiscrete => {
                self.vass.zero_tests(state).iter().all(|&c| p[c] == 0)
            }
            SemanticsMode::Q => true,
        }
    }

    /// All successors of `layer` along transition `t`.
    fn advance(&mut self, layer: &[(Point, usize)], t: usize) -> Vec<(Point, usize)> {
        let dst = self.vass.transition(t).1;
        let mut seen: HashSet<Point> = HashSet::new();
        let mut out = Vec::new();
        for (p, id) in layer {
            for &i in &self.coeffs {
                let l = &self.labels[&t];
                let q: Point = p.iter().zip(l).map(|(a, b)| a + b * i as i128).collect();
                if self.ok(dst, &q) && seen.insert(q.clone()) {
                    self.nodes.push(Node { parent: *id, step: Some((t, i)) });
                    out.push((q, self.nodes.len() - 1));
                }
            }
        }
        out
    }

    fn witness(&self, start: &Configuration, mut id: usize) -> RunWitness {
        let mut steps = Vec::new();
        while let Some((t, i)) = self.nodes[id].step {
            steps.push((t, Rational::new(i as i64, self.denom as i64)));
            id = self.nodes[id].parent;
        }
        steps.reverse();
        RunWitness { start: start.clone(), steps }
    }
}

/// Runs the layered grid search and returns every reachable end point with a
/// node id for witness reconstruction.
fn grid_explore<'a>(
    vass: &'a Vass,
    lps: &Lps,
    source: &Configuration,
    extra: &[&RationalVec],
    mode: SemanticsMode,
    grid: GridSpec,
) -> Result<(Grid<'a>, Vec<(Point, usize)>), OracleError> {
    if source.values.dim() != vass.dim() {
        return Err(OracleError::DimensionMismatch { expected: vass.dim(), found: source.values.dim() });
    }
    let denom = if mode == SemanticsMode::ZTestDiscrete { 1 } else { grid.denom };
    let support = lps.support();
    let l = lcm_all(
        support.iter().flat_map(|&t| vass.label(t).iter()).chain(source.values.iter()).chain(extra.iter().flat_map(|v| v.iter())),
    )
    .ok_or(OracleError::Overflow)?;
    let coeffs: Vec<u32> = if mode == SemanticsMode::ZTestDiscrete { vec![1] } else { (1..=denom).collect() };
    let mut g = Grid {
        vass,
        mode,
        coeffs,
        denom,
        scale: l * denom as i128,
        labels: HashMap::new(),
        nodes: vec![Node { parent: 0, step: None }],
    };
    for &t in &support {
        let lab: Option<Point> = vass.label(t).iter().map(|v| (v * &Rational::from_int(l as i64)).numer().to_i128()).collect();
        g.labels.insert(t, lab.ok_or(OracleError::Overflow)?);
    }
    let start = g.scaled(&source.values).ok_or(OracleError::Overflow)?;
    if !g.ok(source.state, &start) {
        return Ok((g, Vec::new()));
    }
    // Layers are tagged with the number of steps taken so far.
    let mut layer: Vec<(Point, usize, usize)> = vec![(start, 0, 0)];
    for (is_cycle, seg) in lps.segments() {
        if !is_cycle {
            for &t in seg {
                layer = advance_tagged(&mut g, &layer, t, grid.max_steps);
            }
            continue;
        }
        let mut all = layer.clone();
        let mut seen: HashSet<Point> = all.iter().map(|(p, ..)| p.clone()).collect();
        let mut cur = layer;
        for _ in 0..grid.max_reps {
            for &t in seg {
                cur = advance_tagged(&mut g, &cur, t, grid.max_steps);
            }
            cur.retain(|(p, ..)| seen.insert(p.clone()));
            if cur.is_empty() {
                break;
            }
            all.extend(cur.iter().cloned());
        }
        layer = all;
    }
    Ok((g, layer.into_iter().map(|(p, id, _)| (p, id)).collect()))
}

fn advance_tagged(g: &mut Grid<'_>, layer: &[(Point, usize, usize)], t: usize, max_steps: usize) -> Vec<(Point, usize, usize)> {
    // Points are grouped by step count so the budget applies per run.
    let mut by_steps: HashMap<usize, Vec<(Point, usize)>> = HashMap::new();
    for (p, id, s) in layer {
        if *s < max_steps {
            by_steps.entry(*s).or_default().push((p.clone(), *id));
        }
    }
    let mut keys: Vec<usize> = by_steps.keys().copied().collect();
    keys.sort_unstable();
    let mut seen: HashSet<Point> = HashSet::new();
    let mut out = Vec::new();
    for s in keys {
        for (p, id) in g.advance(&by_steps[&s], t) {
            if seen.insert(p.clone()) {
                out.push((p, id, s + 1));
            }
        }
    }
    out
}

/// Exhaustive search for a run along `lps` from `source` to `target` using
/// grid coefficients. Any returned witness simulates exactly to the target.
pub fn grid_search(
    vass: &Vass,
    lps: &Lps,
    source: &Configuration,
    target: &Configuration,
    mode: SemanticsMode,
    grid: GridSpec,
) -> Result<Option<RunWitness>, OracleError> {
    if lps.last_state(vass).unwrap_or(source.state) != target.state
        || lps.first_state(vass).unwrap_or(target.state) != source.state
    {
        return Ok(None);
    }
    let (g, ends) = grid_explore(vass, lps, source, &[&target.values], mode, grid)?;
    let Some(goal) = g.scaled(&target.values) else {
        return Ok(None);
    };
    Ok(ends.iter().find(|(p, _)| *p == goal).map(|(_, id)| {
        let w = g.witness(source, *id);
        assert_eq!(simulate(vass, &w, mode).as_ref(), Ok(target), "grid witness must simulate");
        w
    }))
}

/// Every end point reachable along `lps` with grid coefficients.
pub fn grid_reachable(
    vass: &Vass,
    lps: &Lps,
    source: &Configuration,
    mode: SemanticsMode,
    grid: GridSpec,
) -> Result<Vec<RationalVec>, OracleError> {
    let (g, ends) = grid_explore(vass, lps, source, &[], mode, grid)?;
    let mut pts: Vec<RationalVec> = ends
        .into_iter()
        .map(|(p, _)| p.iter().map(|&v| Rational::new(v as i64, g.scale as i64)).collect())
        .collect();
    pts.sort();
    Ok(pts)
}

/// Normalized row `a·x < b` (strict) or `a·x ≤ b`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct FmRow {
    a: Vec<Rational>,
    b: Rational,
    strict: bool,
}

impl FmRow {
    /// Scales so that the first nonzero coefficient has absolute value 1.
    fn normalized(mut self) -> Self {
        if let Some(p) = self.a.iter().find(|v| !v.is_zero()).map(Rational::abs) {
            self.a.iter_mut().for_each(|v| *v = &*v / &p);
            self.b = &self.b / &p;
        }
        self
    }
}

pub const FM_VAR_LIMIT: usize = 6;

/// Exact feasibility by Fourier–Motzkin elimination.
pub fn fm_feasible(sys: &LinearSystem) -> Result<bool, OracleError> {
    let n = sys.nvars();
    if n > FM_VAR_LIMIT {
        return Err(OracleError::VariableLimitExceeded { found: n, limit: FM_VAR_LIMIT });
    }
    let mut rows: Vec<FmRow> = Vec::new();
    for r in sys.rows() {
        let a: Vec<Rational> = r.coeffs.to_vec();
        let neg: Vec<Rational> = a.iter().map(|v| -v).collect();
        let b = r.rhs.clone();
        match r.rel {
            Relation::Le => rows.push(FmRow { a, b, strict: false }),
            Relation::Lt => rows.push(FmRow { a, b, strict: true }),
            Relation::Ge => rows.push(FmRow { a: neg, b: -&b, strict: false }),
            Relation::Gt => rows.push(FmRow { a: neg, b: -&b, strict: true }),
            Relation::Eq => {
                rows.push(FmRow { a, b: b.clone(), strict: false });
                rows.push(FmRow { a: neg, b: -&b, strict: false });
            }
        }
    }
    for v in 0..n {
        let (mut pos, mut negs, mut rest) = (Vec::new(), Vec::new(), Vec::new());
        for r in rows {
            if r.a[v].is_positive() {
                pos.push(r);
            } else if r.a[v].is_negative() {
                negs.push(r);
            } else {
                rest.push(r);
            }
        }
        for p in &pos {
            for q in &negs {
                // p.a[v] > 0 > q.a[v]: combine with multipliers −q.a[v] and p.a[v].
                let (mp, mq) = (-&q.a[v], p.a[v].clone());
                let a: Vec<Rational> = p.a.iter().zip(&q.a).map(|(x, y)| &(x * &mp) + &(y * &mq)).collect();
                let b = &(&p.b * &mp) + &(&q.b * &mq);
                rest.push(FmRow { a, b, strict: p.strict || q.strict });
            }
        }
        let mut seen = HashSet::new();
        rows = rest.into_iter().map(FmRow::normalized).filter(|r| seen.insert(r.clone())).collect();
    }
    Ok(rows.iter().all(|r| if r.strict { r.b.is_positive() } else { !r.b.is_negative() }))
}

/// Brute force over all activation subsets containing the mandatory groups;
/// each subset is one strict system decided by Fourier–Motzkin.
pub fn csh_case_split(sys: &CshSystem) -> Result<bool, OracleError> {
    let groups = sys.groups();
    let n = groups.len();
    for mask in 0u64..1 << n {
        if sys.mandatory().iter().any(|&g| mask >> g & 1 == 0) {
            continue;
        }
        let mut s = sys.base().clone();
        for (g, vars) in groups.iter().enumerate() {
            let rel = if mask >> g & 1 == 1 { Relation::Gt } else { Relation::Eq };
            for &v in vars {
                s.bound(v, rel, Rational::zero());
            }
        }
        if fm_feasible(&s)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Breadth-first search over discrete runs conforming to `lps` (every
/// coefficient 1, zero tests enforced) with counters kept in
/// `[−bound, bound]^d`.
pub fn bfs_discrete(vass: &Vass, lps: &Lps, source: &Configuration, target: &Configuration, bound: i64) -> bool {
    let segs: Vec<(bool, &[usize])> = lps.segments().collect();
    let to_int = |v: &RationalVec| -> Option<Vec<i64>> {
        v.iter().map(|r| if r.is_integer() { r.to_i64() } else { None }).collect()
    };
    let (Some(start), Some(goal)) = (to_int(&source.values), to_int(&target.values)) else {
        return false;
    };
    let labels: Option<Vec<Vec<i64>>> = (0..vass.num_transitions()).map(|t| to_int(vass.label(t))).collect();
    let Some(labels) = labels else {
        return false;
    };
    let tests_ok = |state: usize, x: &[i64]| vass.zero_tests(state).iter().all(|&c| x[c] == 0);
    if !tests_ok(source.state, &start) {
        return false;
    }
    let end_state = lps.last_state(vass).unwrap_or(source.state);
    if lps.first_state(vass).is_some_and(|s| s != source.state) {
        return false;
    }
    // Node: (segment, position within segment, counters).
    let mut seen: HashSet<(usize, usize, Vec<i64>)> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert((0, 0, start.clone()));
    queue.push_back((0usize, 0usize, start));
    while let Some((k, j, x)) = queue.pop_front() {
        if k == segs.len() {
            if end_state == target.state && x == goal {
                return true;
            }
            continue;
        }
        let (is_cycle, seg) = segs[k];
        let mut next = Vec::new();
        // Paths are left at their end, cycles at their start state.
        if j == if is_cycle { 0 } else { seg.len() } {
            next.push((k + 1, 0, x.clone()));
        }
        if j < seg.len() {
            let t = seg[j];
            let y: Vec<i64> = x.iter().zip(&labels[t]).map(|(a, b)| a + b).collect();
            if y.iter().all(|v| v.abs() <= bound) && tests_ok(vass.transition(t).1, &y) {
                let nj = if is_cycle { (j + 1) % seg.len() } else { j + 1 };
                next.push((k, nj, y));
            }
        }
        for node in next {
            if seen.insert(node.clone()) {
                queue.push_back(node);
            }
        }
    }
    false
}

/// Exact classification of `y` against `Reach(χ*)` in dimension 2 from the
/// generator directions alone: for collinear generators the closed cone,
/// otherwise its open interior plus the origin.
pub fn cone_classify_2d(gens: &[RationalVec], y: &RationalVec) -> bool {
    let cross = |a: &RationalVec, b: &RationalVec| &(&a[0] * &b[1]) - &(&a[1] * &b[0]);
    let dot = |a: &RationalVec, b: &RationalVec| &(&a[0] * &b[0]) + &(&a[1] * &b[1]);
    if y.is_zero() {
        return true;
    }
    let g: Vec<&RationalVec> = gens.iter().filter(|v| !v.is_zero()).collect();
    if g.is_empty() {
        return false;
    }
    let collinear = g.iter().all(|v| cross(g[0], v).is_zero());
    if collinear {
        if !cross(g[0], y).is_zero() {
            return false;
        }
        return g.iter().any(|v| dot(v, y).is_positive());
    }
    // Sort directions counterclockwise starting from the positive x-axis.
    let half = |v: &RationalVec| u8::from(!(v[1].is_positive() || (v[1].is_zero() && v[0].is_positive())));
    let mut dirs: Vec<&RationalVec> = g.clone();
    dirs.sort_by(|a, b| half(a).cmp(&half(b)).then_with(|| Rational::zero().cmp(&cross(a, b))));
    let k = dirs.len();
    // Find a gap of at least π between consecutive directions.
    for i in 0..k {
        let (u, w) = (dirs[i], dirs[(i + 1) % k]);
        let c = cross(u, w);
        let wide = c.is_negative() || (c.is_zero() && dot(u, w).is_negative());
        if wide {
            // Cone is the counterclockwise arc from w to u; interior is open.
            return cross(w, y).is_positive() && cross(y, u).is_positive();
        }
    }
    true
}

/// The run with every coefficient halved, traversed twice.
pub fn halve_twice(w: &RunWitness) -> RunWitness {
    let half = Rational::new(1, 2);
    let mut out = RunWitness::new(w.start.clone());
    for _ in 0..2 {
        for (t, a) in &w.steps {
            out.push(*t, a * &half);
        }
    }
    out
}

/// Membership raster of a 2-dimensional descriptor over
/// `[x0, x1] × [y0, y1]` with `resolution` points per axis.
pub fn rasterize(
    desc: &ReachDescriptor,
    window: (Rational, Rational, Rational, Rational),
    resolution: usize,
) -> Result<Vec<(RationalVec, bool)>, GeomError> {
    if desc.dim != 2 {
        return Err(GeomError::DimensionMismatch { expected: 2, found: desc.dim });
    }
    let (x0, x1, y0, y1) = window;
    let steps = Rational::from_int(resolution.saturating_sub(1).max(1) as i64);
    let dx = &(&x1 - &x0) / &steps;
    let dy = &(&y1 - &y0) / &steps;
    let mut out = Vec::with_capacity(resolution * resolution);
    for j in 0..resolution {
        for i in 0..resolution {
            let p = RationalVec(vec![
                &x0 + &(&dx * &Rational::from_int(i as i64)),
                &y0 + &(&dy * &Rational::from_int(j as i64)),
            ]);
            let bit = member(desc, &p)?;
            out.push((p, bit));
        }
    }
    Ok(out)
}

/// CSV form of a raster: `x,y,member` with a header line.
pub fn raster_csv(raster: &[(RationalVec, bool)]) -> String {
    let mut s = String::from("x,y,member\n");
    for (p, b) in raster {
        s.push_str(&format!("{},{},{}\n", p[0], p[1], u8::from(*b)));
    }
    s
}
