//! Exact rational linear programming.
//!
//! A dense two-phase simplex with Bland's rule. Variables are free unless a
//! row bounds them; strict rows are handled by maximizing one shared slack.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::rational::{Rational, RationalVec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("row has {found} coefficients, system has {expected} variables")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("strict rows are not allowed when optimizing")]
    StrictRow,
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Eq,
    Le,
    Lt,
    Ge,
    Gt,
}

impl Relation {
    pub fn is_strict(self) -> bool {
        matches!(self, Relation::Lt | Relation::Gt)
    }

    fn flipped(self) -> Self {
        match self {
            Relation::Eq => Relation::Eq,
            Relation::Le => Relation::Ge,
            Relation::Lt => Relation::Gt,
            Relation::Ge => Relation::Le,
            Relation::Gt => Relation::Lt,
        }
    }

    pub fn holds(self, lhs: &Rational, rhs: &Rational) -> bool {
        match self {
            Relation::Eq => lhs == rhs,
            Relation::Le => lhs <= rhs,
            Relation::Lt => lhs < rhs,
            Relation::Ge => lhs >= rhs,
            Relation::Gt => lhs > rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Eq => "=",
            Relation::Le => "<=",
            Relation::Lt => "<",
            Relation::Ge => ">=",
            Relation::Gt => ">",
        }
    }
}

impl FromStr for Relation {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s {
            "=" | "==" => Relation::Eq,
            "<=" => Relation::Le,
            "<" => Relation::Lt,
            ">=" => Relation::Ge,
            ">" => Relation::Gt,
            _ => return Err(()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Row {
    pub coeffs: RationalVec,
    pub rel: Relation,
    pub rhs: Rational,
}

impl Row {
    pub fn holds(&self, x: &[Rational]) -> bool {
        let lhs: Rational = self.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
        self.rel.holds(&lhs, &self.rhs)
    }
}

/// A conjunction of linear rows over `nvars` free rational variables.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LinearSystem {
    nvars: usize,
    rows: Vec<Row>,
}

impl LinearSystem {
    pub fn new(nvars: usize) -> Self {
        LinearSystem { nvars, rows: Vec::new() }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn add_row(&mut self, coeffs: RationalVec, rel: Relation, rhs: Rational) -> Result<(), LpError> {
        if coeffs.dim() != self.nvars {
            return Err(LpError::DimensionMismatch { expected: self.nvars, found: coeffs.dim() });
        }
        self.rows.push(Row { coeffs, rel, rhs });
        Ok(())
    }

    /// Adds a row given as sparse `(variable, coefficient)` pairs.
    pub fn add_sparse(&mut self, terms: &[(usize, Rational)], rel: Relation, rhs: Rational) {
        let mut coeffs = RationalVec::zeros(self.nvars);
        for (v, c) in terms {
            coeffs[*v] += c;
        }
        self.rows.push(Row { coeffs, rel, rhs });
    }

    /// Appends a fresh variable (zero in every existing row) and returns its index.
    pub fn add_var(&mut self) -> usize {
        for r in &mut self.rows {
            r.coeffs.0.push(Rational::zero());
        }
        self.nvars += 1;
        self.nvars - 1
    }

    pub fn bound(&mut self, var: usize, rel: Relation, value: Rational) {
        self.add_sparse(&[(var, Rational::one())], rel, value);
    }

    pub fn nonneg(&mut self, var: usize) {
        self.bound(var, Relation::Ge, Rational::zero());
    }

    pub fn has_strict(&self) -> bool {
        self.rows.iter().any(|r| r.rel.is_strict())
    }

    pub fn satisfies(&self, x: &[Rational]) -> bool {
        x.len() == self.nvars && self.rows.iter().all(|r| r.holds(x))
    }

    /// Debug dump: a `vars <n>` header and one `<coeffs> <rel> <rhs>` line per row.
    pub fn dump(&self) -> String {
        self.to_string()
    }

    pub fn parse(text: &str) -> Result<Self, LpError> {
        let mut sys: Option<LinearSystem> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let toks: Vec<&str> = raw.split('#').next().unwrap_or("").split_whitespace().collect();
            if toks.is_empty() {
                continue;
            }
            let err = |reason: &str| LpError::Parse { line, reason: reason.to_string() };
            if toks[0] == "vars" {
                if sys.is_some() || toks.len() != 2 {
                    return Err(err("misplaced `vars` header"));
                }
                sys = Some(LinearSystem::new(toks[1].parse().map_err(|_| err("invalid count"))?));
                continue;
            }
            if toks.len() < 2 {
                return Err(err("expected `<coeffs> <rel> <rhs>`"));
            }
            let rel: Relation = toks[toks.len() - 2].parse().map_err(|_| err("invalid relation"))?;
            let rhs: Rational = toks[toks.len() - 1].parse().map_err(|_| err("invalid rhs"))?;
            let coeffs: RationalVec = toks[..toks.len() - 2]
                .iter()
                .map(|t| t.parse::<Rational>())
                .collect::<Result<_, _>>()
                .map_err(|_| err("invalid coefficient"))?;
            let s = sys.get_or_insert_with(|| LinearSystem::new(coeffs.dim()));
            s.add_row(coeffs, rel, rhs).map_err(|e| err(&e.to_string()))?;
        }
        Ok(sys.unwrap_or_default())
    }
}

impl fmt::Display for LinearSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "vars {}", self.nvars)?;
        for r in &self.rows {
            if r.coeffs.dim() > 0 {
                write!(f, "{} ", r.coeffs)?;
            }
            writeln!(f, "{} {}", r.rel.symbol(), r.rhs)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    /// A satisfying point; for `maximize`, an optimal one.
    Feasible(RationalVec),
    Infeasible,
    /// The objective grows without bound along `point + k·ray`, `k ≥ 0`.
    Unbounded { point: RationalVec, ray: RationalVec },
}

impl LpOutcome {
    pub fn point(&self) -> Option<&RationalVec> {
        match self {
            LpOutcome::Feasible(p) | LpOutcome::Unbounded { point: p, .. } => Some(p),
            LpOutcome::Infeasible => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        !matches!(self, LpOutcome::Infeasible)
    }
}

/// How an original variable is represented by tableau columns.
#[derive(Clone, Copy)]
enum VarMap {
    Zero,
    NonNeg(usize),
    Free(usize, usize),
}

struct Tableau {
    a: Vec<Vec<Rational>>,
    b: Vec<Rational>,
    basis: Vec<usize>,
    ncols: usize,
}

/// Consecutive degenerate pivots tolerated before falling back to Bland's rule.
const BLAND_AFTER: usize = 32;

enum Phase {
    Optimal,
    Unbounded(usize),
}

impl Tableau {
    fn pivot(&mut self, r: usize, j: usize, obj: &mut [Rational], z: &mut Rational) {
        let inv = self.a[r][j].recip();
        if !inv.is_one() {
            for v in self.a[r].iter_mut() {
                if !v.is_zero() {
                    *v *= &inv;
                }
            }
            self.b[r] *= &inv;
        }
        let nz: Vec<usize> = (0..self.ncols).filter(|&k| !self.a[r][k].is_zero()).collect();
        let prow: Vec<Rational> = nz.iter().map(|&k| self.a[r][k].clone()).collect();
        let pb = self.b[r].clone();
        for i in 0..self.a.len() {
            if i == r || self.a[i][j].is_zero() {
                continue;
            }
            let f = -&self.a[i][j];
            let row = &mut self.a[i];
            for (&k, pv) in nz.iter().zip(&prow) {
                row[k].add_mul(&f, pv);
            }
            self.b[i].add_mul(&f, &pb);
        }
        if !obj[j].is_zero() {
            let f = obj[j].clone();
            let nf = -&f;
            for (&k, pv) in nz.iter().zip(&prow) {
                obj[k].add_mul(&nf, pv);
            }
            z.add_mul(&f, &pb);
        }
        self.basis[r] = j;
    }

    /// Maximizes with reduced costs `obj` over columns where `allowed` holds.
    /// Uses the largest reduced cost, switching to Bland's rule for good
    /// after a run of degenerate pivots.
    fn run(&mut self, obj: &mut [Rational], z: &mut Rational, allowed: &[bool]) -> Phase {
        let mut degenerate = 0;
        loop {
            let candidates = (0..self.ncols).filter(|&j| allowed[j] && obj[j].is_positive());
            let entering = if degenerate < BLAND_AFTER {
                candidates.max_by(|&a, &b| obj[a].cmp(&obj[b]).then(b.cmp(&a)))
            } else {
                candidates.min()
            };
            let Some(j) = entering else { return Phase::Optimal };
            let mut best: Option<(usize, Rational)> = None;
            for i in 0..self.a.len() {
                if !self.a[i][j].is_positive() {
                    continue;
                }
                let ratio = &self.b[i] / &self.a[i][j];
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                None => return Phase::Unbounded(j),
                Some((r, ratio)) => {
                    if ratio.is_zero() {
                        degenerate += 1;
                    } else if degenerate < BLAND_AFTER {
                        degenerate = 0;
                    }
                    self.pivot(r, j, obj, z);
                }
            }
        }
    }

    fn column_values(&self) -> Vec<Rational> {
        let mut x = vec![Rational::zero(); self.ncols];
        for (i, &bv) in self.basis.iter().enumerate() {
            x[bv] = self.b[i].clone();
        }
        x
    }
}

fn is_nonneg_row(r: &Row) -> Option<usize> {
    if !r.rhs.is_zero() {
        return None;
    }
    let mut nz = r.coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero());
    let (j, c) = nz.next()?;
    if nz.next().is_some() {
        return None;
    }
    match r.rel {
        Relation::Ge if c.is_positive() => Some(j),
        Relation::Le if c.is_negative() => Some(j),
        _ => None,
    }
}

/// True if `r` reads `c·x_j = 0` for a single variable `j`.
fn is_zero_row(r: &Row) -> Option<usize> {
    if r.rel != Relation::Eq || !r.rhs.is_zero() {
        return None;
    }
    let mut nz = r.coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero());
    let (j, _) = nz.next()?;
    nz.next().is_none().then_some(j)
}

/// The feasible region of a system without strict rows, kept as a feasible
/// simplex basis so that several objectives can be optimized in turn.
pub struct FeasibleRegion {
    n: usize,
    map: Vec<VarMap>,
    tab: Tableau,
    allowed: Vec<bool>,
}

impl FeasibleRegion {
    /// Runs phase 1; `None` if `sys` is infeasible.
    pub fn new(sys: &LinearSystem) -> Result<Option<Self>, LpError> {
        if sys.has_strict() {
            return Err(LpError::StrictRow);
        }
        Ok(Self::build(sys))
    }

    fn build(sys: &LinearSystem) -> Option<Self> {
        let n = sys.nvars;
        let mut rows: Vec<&Row> = Vec::new();
        for r in &sys.rows {
            if r.coeffs.is_zero() {
                if !r.rel.holds(&Rational::zero(), &r.rhs) {
                    return None;
                }
            } else {
                rows.push(r);
            }
        }
        let mut nonneg = vec![false; n];
        let mut zero = vec![false; n];
        rows.retain(|r| {
            if let Some(j) = is_nonneg_row(r) {
                nonneg[j] = true;
                false
            } else if let Some(j) = is_zero_row(r) {
                zero[j] = true;
                false
            } else {
                true
            }
        });

        let mut map = vec![VarMap::Zero; n];
        let mut ncols = 0;
        for j in 0..n {
            if zero[j] {
                continue;
            }
            if nonneg[j] {
                map[j] = VarMap::NonNeg(ncols);
                ncols += 1;
            } else {
                map[j] = VarMap::Free(ncols, ncols + 1);
                ncols += 2;
            }
        }
        let nstruct = ncols;
        // Normalized rows over structural columns with rhs ≥ 0.
        let mut a: Vec<Vec<Rational>> = Vec::with_capacity(rows.len());
        let mut b = Vec::with_capacity(rows.len());
        let mut rels = Vec::with_capacity(rows.len());
        for r in &rows {
            let flip = r.rhs.is_negative();
            let mut line = vec![Rational::zero(); nstruct];
            for j in 0..n {
                let c = if flip { -&r.coeffs[j] } else { r.coeffs[j].clone() };
                match map[j] {
                    VarMap::Zero => {}
                    VarMap::NonNeg(k) => line[k] = c,
                    VarMap::Free(p, q) => {
                        line[q] = -&c;
                        line[p] = c;
                    }
                }
            }
            let rhs = if flip { -&r.rhs } else { r.rhs.clone() };
            let rel = if flip { r.rel.flipped() } else { r.rel };
            if line.iter().all(Rational::is_zero) {
                if !rel.holds(&Rational::zero(), &rhs) {
                    return None;
                }
                continue;
            }
            a.push(line);
            b.push(rhs);
            rels.push(rel);
        }
        let m = a.len();
        // Slack, surplus, and artificial columns.
        let mut basis = vec![0; m];
        let mut artificial = Vec::new();
        let mut extra: Vec<(usize, Rational)> = Vec::new();
        for i in 0..m {
            match rels[i] {
                Relation::Le => {
                    extra.push((i, Rational::one()));
                    basis[i] = ncols;
                    ncols += 1;
                }
                Relation::Ge => {
                    extra.push((i, -Rational::one()));
                    ncols += 1;
                    extra.push((i, Rational::one()));
                    artificial.push(ncols);
                    basis[i] = ncols;
                    ncols += 1;
                }
                Relation::Eq => {
                    extra.push((i, Rational::one()));
                    artificial.push(ncols);
                    basis[i] = ncols;
                    ncols += 1;
                }
                Relation::Lt | Relation::Gt => unreachable!("strict rows are rejected earlier"),
            }
        }
        for row in a.iter_mut() {
            row.resize(ncols, Rational::zero());
        }
        let mut col = nstruct;
        for (i, v) in extra {
            a[i][col] = v;
            col += 1;
        }
        let mut tab = Tableau { a, b, basis, ncols };
        let mut is_art = vec![false; ncols];
        for &c in &artificial {
            is_art[c] = true;
        }

        // Phase 1: maximize -Σ artificials.
        if !artificial.is_empty() {
            let mut obj = vec![Rational::zero(); ncols];
            let mut z = Rational::zero();
            for &c in &artificial {
                obj[c] = -Rational::one();
            }
            for i in 0..m {
                if is_art[tab.basis[i]] {
                    for (k, v) in tab.a[i].iter().enumerate() {
                        if !v.is_zero() {
                            obj[k] += v;
                        }
                    }
                    z -= &tab.b[i];
                }
            }
            let all = vec![true; ncols];
            tab.run(&mut obj, &mut z, &all);
            if z.is_negative() {
                return None;
            }
            // Drive remaining artificials out of the basis; drop redundant rows.
            let mut i = 0;
            while i < tab.a.len() {
                if is_art[tab.basis[i]] {
                    match (0..ncols).find(|&k| !is_art[k] && !tab.a[i][k].is_zero()) {
                        Some(k) => {
                            let mut dummy = vec![Rational::zero(); ncols];
                            let mut dz = Rational::zero();
                            tab.pivot(i, k, &mut dummy, &mut dz);
                        }
                        None => {
                            tab.a.remove(i);
                            tab.b.remove(i);
                            tab.basis.remove(i);
                            continue;
                        }
                    }
                }
                i += 1;
            }
        }
        let allowed = (0..ncols).map(|k| !is_art[k]).collect();
        Some(FeasibleRegion { n, map, tab, allowed })
    }

    fn to_orig(&self, cols: &[Rational]) -> RationalVec {
        self.map
            .iter()
            .map(|m| match *m {
                VarMap::Zero => Rational::zero(),
                VarMap::NonNeg(k) => cols[k].clone(),
                VarMap::Free(p, q) => &cols[p] - &cols[q],
            })
            .collect()
    }

    /// The current basic feasible point.
    pub fn point(&self) -> RationalVec {
        self.to_orig(&self.tab.column_values())
    }

    /// Maximizes `objective · x`, starting from the current basis. The
    /// outcome is never `Infeasible`.
    pub fn maximize(&mut self, objective: &RationalVec) -> Result<LpOutcome, LpError> {
        if objective.dim() != self.n {
            return Err(LpError::DimensionMismatch { expected: self.n, found: objective.dim() });
        }
        let ncols = self.tab.ncols;
        let mut cost = vec![Rational::zero(); ncols];
        for (j, m) in self.map.iter().enumerate() {
            match *m {
                VarMap::Zero => {}
                VarMap::NonNeg(k) => cost[k] = objective[j].clone(),
                VarMap::Free(p, q) => {
                    cost[p] = objective[j].clone();
                    cost[q] = -&objective[j];
                }
            }
        }
        if cost.iter().all(Rational::is_zero) {
            return Ok(LpOutcome::Feasible(self.point()));
        }
        let mut obj = cost.clone();
        let mut z = Rational::zero();
        for i in 0..self.tab.a.len() {
            let cb = &cost[self.tab.basis[i]];
            if cb.is_zero() {
                continue;
            }
            for (k, v) in self.tab.a[i].iter().enumerate() {
                if !v.is_zero() {
                    obj[k].add_mul(&-cb, v);
                }
            }
            z.add_mul(cb, &self.tab.b[i]);
        }
        let phase = self.tab.run(&mut obj, &mut z, &self.allowed);
        let point = self.point();
        Ok(match phase {
            Phase::Optimal => LpOutcome::Feasible(point),
            Phase::Unbounded(j) => {
                let mut dir = vec![Rational::zero(); ncols];
                dir[j] = Rational::one();
                for (i, &bv) in self.tab.basis.iter().enumerate() {
                    dir[bv] = -&self.tab.a[i][j];
                }
                LpOutcome::Unbounded { point, ray: self.to_orig(&dir) }
            }
        })
    }
}

/// Core solver for a system without strict rows: maximize `objective`
/// (or just find a feasible point when `None`).
fn simplex(sys: &LinearSystem, objective: Option<&RationalVec>) -> LpOutcome {
    let Some(mut region) = FeasibleRegion::build(sys) else {
        return LpOutcome::Infeasible;
    };
    match objective {
        None => LpOutcome::Feasible(region.point()),
        Some(obj) => region.maximize(obj).expect("objective dimension checked"),
    }
}

/// Decides feasibility of `sys`, returning a witness that satisfies every row exactly.
pub fn feasible(sys: &LinearSystem) -> LpOutcome {
    let outcome = if !sys.has_strict() {
        simplex(sys, None)
    } else {
        // c·x < r  ~>  c·x + t ≤ r;  c·x > r  ~>  c·x − t ≥ r;  0 ≤ t ≤ 1.
        let mut relaxed = LinearSystem::new(sys.nvars + 1);
        let t = sys.nvars;
        for r in &sys.rows {
            let mut coeffs = r.coeffs.clone();
            let (c, rel) = match r.rel {
                Relation::Lt => (Rational::one(), Relation::Le),
                Relation::Gt => (-Rational::one(), Relation::Ge),
                rel => (Rational::zero(), rel),
            };
            coeffs.0.push(c);
            relaxed.rows.push(Row { coeffs, rel, rhs: r.rhs.clone() });
        }
        relaxed.nonneg(t);
        relaxed.bound(t, Relation::Le, Rational::one());
        let mut obj = RationalVec::zeros(t + 1);
        obj[t] = Rational::one();
        match simplex(&relaxed, Some(&obj)) {
            LpOutcome::Feasible(mut x) if x[t].is_positive() => {
                x.0.pop();
                LpOutcome::Feasible(x)
            }
            LpOutcome::Feasible(_) | LpOutcome::Infeasible => LpOutcome::Infeasible,
            LpOutcome::Unbounded { .. } => unreachable!("slack is bounded"),
        }
    };
    if let LpOutcome::Feasible(x) = &outcome {
        assert!(sys.satisfies(x), "simplex produced a point violating the system");
    }
    outcome
}

/// Maximizes `objective · x` over `sys`, which must not contain strict rows.
pub fn maximize(sys: &LinearSystem, objective: &RationalVec) -> Result<LpOutcome, LpError> {
    if objective.dim() != sys.nvars {
        return Err(LpError::DimensionMismatch { expected: sys.nvars, found: objective.dim() });
    }
    if sys.has_strict() {
        return Err(LpError::StrictRow);
    }
    let out = simplex(sys, Some(objective));
    if let Some(p) = out.point() {
        assert!(sys.satisfies(p), "simplex produced a point violating the system");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qv};
    use proptest::prelude::*;

    fn sys(text: &str) -> LinearSystem {
        LinearSystem::parse(text).unwrap()
    }

    #[test]
    fn strict_interval() {
        match feasible(&sys("1 > 0\n1 <= 1\n")) {
            LpOutcome::Feasible(x) => assert!(x[0].is_positive() && x[0] <= q("1")),
            other => panic!("{other:?}"),
        }
        assert_eq!(feasible(&sys("1 > 0\n1 <= 0\n")), LpOutcome::Infeasible);
    }

    #[test]
    fn zonotope_point() {
        let s = sys("1 0 = 1/2\n0 1 = 1/2\n1 0 > 0\n0 1 > 0\n1 0 <= 1\n0 1 <= 1\n");
        assert_eq!(feasible(&s), LpOutcome::Feasible(qv("1/2 1/2")));
    }

    #[test]
    fn maximize_examples() {
        assert_eq!(maximize(&sys("1 <= 3\n"), &qv("1")).unwrap(), LpOutcome::Feasible(qv("3")));
        match maximize(&sys("1 >= 0\n"), &qv("1")).unwrap() {
            LpOutcome::Unbounded { point, ray } => {
                assert!(!point[0].is_negative());
                assert!(ray[0].is_positive());
            }
            other => panic!("{other:?}"),
        }
        // a + t ≤ 1, −a + t ≤ 0 with a free: t = 1/2.
        match maximize(&sys("1 1 <= 1\n-1 1 <= 0\n"), &qv("0 1")).unwrap() {
            LpOutcome::Feasible(x) => assert_eq!(x[1], q("1/2")),
            other => panic!("{other:?}"),
        }
        assert_eq!(maximize(&sys("1 > 0\n"), &qv("1")), Err(LpError::StrictRow));
    }

    #[test]
    fn zero_variable_systems() {
        let mut s = LinearSystem::new(0);
        s.add_row(RationalVec::zeros(0), Relation::Le, q("1")).unwrap();
        assert_eq!(feasible(&s), LpOutcome::Feasible(RationalVec::zeros(0)));
        s.add_row(RationalVec::zeros(0), Relation::Lt, q("0")).unwrap();
        assert_eq!(feasible(&s), LpOutcome::Infeasible);
        assert!(feasible(&LinearSystem::new(0)).is_feasible());
    }

    #[test]
    fn redundant_equalities() {
        let s = sys("1 1 = 2\n2 2 = 4\n1 -1 = 0\n");
        assert_eq!(feasible(&s), LpOutcome::Feasible(qv("1 1")));
        assert_eq!(feasible(&sys("1 1 = 2\n2 2 = 5\n")), LpOutcome::Infeasible);
    }

    #[test]
    fn unbounded_ray_is_valid() {
        let s = sys("1 -1 <= 2\n0 1 >= -1\n");
        match maximize(&s, &qv("1 0")).unwrap() {
            LpOutcome::Unbounded { point, ray } => {
                let far: RationalVec = &point + &ray.scaled(&q("1000"));
                assert!(s.satisfies(&far));
                assert!(ray[0].is_positive());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dump_roundtrip() {
        let s = sys("vars 2\n1 -1/2 < 3\n0 1 = 0\n");
        assert_eq!(LinearSystem::parse(&s.dump()).unwrap(), s);
        assert!(LinearSystem::parse("1 2 3\n").is_err());
        assert!(LinearSystem::parse("1 <= 2\n1 1 <= 2\n").is_err());
    }

    fn row_strategy(nvars: usize) -> impl Strategy<Value = Row> {
        (
            prop::collection::vec(-3i64..=3, nvars),
            prop::sample::select(vec![Relation::Eq, Relation::Le, Relation::Lt, Relation::Ge, Relation::Gt]),
            -4i64..=4,
        )
            .prop_map(|(c, rel, r)| Row { coeffs: RationalVec::from_ints(&c), rel, rhs: Rational::from_int(r) })
    }

    fn system_strategy() -> impl Strategy<Value = LinearSystem> {
        (1usize..=4).prop_flat_map(|n| {
            prop::collection::vec(row_strategy(n), 0..=8).prop_map(move |rows| LinearSystem { nvars: n, rows })
        })
    }

    proptest! {
        #[test]
        fn strict_slack_reduction(s in system_strategy()) {
            // Feasible iff the relaxed system has a positive maximal slack.
            let n = s.nvars;
            let mut relaxed = LinearSystem::new(n + 1);
            for r in &s.rows {
                let mut c = r.coeffs.clone();
                let (t, rel) = match r.rel {
                    Relation::Lt => (Rational::one(), Relation::Le),
                    Relation::Gt => (-Rational::one(), Relation::Ge),
                    rel => (Rational::zero(), rel),
                };
                c.0.push(t);
                relaxed.add_row(c, rel, r.rhs.clone()).unwrap();
            }
            relaxed.nonneg(n);
            relaxed.bound(n, Relation::Le, Rational::one());
            let mut obj = RationalVec::zeros(n + 1);
            obj[n] = Rational::one();
            let positive = match maximize(&relaxed, &obj).unwrap() {
                LpOutcome::Feasible(x) => x[n].is_positive(),
                _ => false,
            };
            prop_assert_eq!(feasible(&s).is_feasible(), positive);
        }

        #[test]
        fn witnesses_check_exactly(s in system_strategy()) {
            if let LpOutcome::Feasible(x) = feasible(&s) {
                prop_assert!(s.satisfies(&x));
            }
        }

        #[test]
        fn optimum_dominates_feasible_points(s in system_strategy(), obj in prop::collection::vec(-2i64..=2, 4)) {
            let mut ns = s.clone();
            ns.rows.retain(|r| !r.rel.is_strict());
            let obj = RationalVec::from_ints(&obj[..ns.nvars]);
            match maximize(&ns, &obj).unwrap() {
                LpOutcome::Feasible(x) => {
                    // No feasible point beats the optimum.
                    let mut better = ns.clone();
                    better.add_row(obj.clone(), Relation::Gt, obj.dot(&x)).unwrap();
                    prop_assert_eq!(feasible(&better), LpOutcome::Infeasible);
                }
                LpOutcome::Unbounded { point, ray } => {
                    prop_assert!(obj.dot(&ray).is_positive());
                    let far = &point + &ray.scaled(&q("7"));
                    prop_assert!(ns.satisfies(&far));
                }
                LpOutcome::Infeasible => prop_assert_eq!(feasible(&ns), LpOutcome::Infeasible),
            }
        }
    }
}
