//! Seeded random instance generators for differential testing.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::csh::CshSystem;
use crate::lp::{LinearSystem, Relation};
use crate::model::{Configuration, Lps, Vass};
use crate::rational::{Rational, RationalVec};

/// A deterministic generator for `seed`.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform `p/q` with `|p| ≤ max_num` and `1 ≤ q ≤ max_den`.
pub fn rational<R: Rng>(rng: &mut R, max_num: i64, max_den: i64) -> Rational {
    Rational::new(rng.gen_range(-max_num..=max_num), rng.gen_range(1..=max_den.max(1)))
}

pub fn vector<R: Rng>(rng: &mut R, dim: usize, max_num: i64, max_den: i64) -> RationalVec {
    (0..dim).map(|_| rational(rng, max_num, max_den)).collect()
}

/// Shape of a random system.
#[derive(Debug, Clone, Copy)]
pub struct VassParams {
    pub dim: usize,
    pub states: usize,
    pub transitions: usize,
    pub max_num: i64,
    pub max_den: i64,
}

/// A random VASS with up to `transitions` distinct transitions; states are
/// named `s0, s1, …` and a spanning chain `s0 → s1 → …` is always present.
pub fn vass<R: Rng>(rng: &mut R, p: VassParams) -> Vass {
    let mut v = Vass::new(p.dim).expect("positive dimension");
    for i in 0..p.states {
        v.add_state(&format!("s{i}"), &[]).expect("fresh state");
    }
    for i in 1..p.states.min(p.transitions + 1) {
        v.add_transition(i - 1, i, vector(rng, p.dim, p.max_num, p.max_den)).expect("fresh pair");
    }
    let mut attempts = 0;
    while v.num_transitions() < p.transitions && attempts < 100 {
        attempts += 1;
        let (a, b) = (rng.gen_range(0..p.states), rng.gen_range(0..p.states));
        if v.find_transition(a, b).is_none() {
            v.add_transition(a, b, vector(rng, p.dim, p.max_num, p.max_den)).expect("fresh pair");
        }
    }
    v
}

/// Simple cycles through `s` (rotated to start there), in DFS order.
pub fn cycles_at(v: &Vass, s: usize, max_len: usize) -> Vec<Vec<usize>> {
    fn rec(v: &Vass, s: usize, max_len: usize, path: &mut Vec<usize>, on: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        let cur = path.last().map_or(s, |&t| v.transition(t).1);
        for (t, &(a, b)) in v.transitions().iter().enumerate() {
            if a != cur {
                continue;
            }
            if b == s {
                let mut c = path.clone();
                c.push(t);
                out.push(c);
            } else if !on[b] && path.len() + 1 < max_len {
                on[b] = true;
                path.push(t);
                rec(v, s, max_len, path, on, out);
                path.pop();
                on[b] = false;
            }
        }
    }
    let mut on = vec![false; v.num_states()];
    on[s] = true;
    let mut out = Vec::new();
    rec(v, s, max_len, &mut Vec::new(), &mut on, &mut out);
    out
}

fn random_walk<R: Rng>(rng: &mut R, v: &Vass, from: usize, len: usize) -> Vec<usize> {
    let mut path = Vec::new();
    let mut cur = from;
    for _ in 0..len {
        let outs: Vec<usize> = (0..v.num_transitions()).filter(|&t| v.transition(t).0 == cur).collect();
        let Some(&t) = outs.choose(rng) else { break };
        path.push(t);
        cur = v.transition(t).1;
    }
    path
}

/// A random scheme in `v` with at most `max_cycles` cycles and paths of at
/// most `max_path` transitions, starting at `start`.
pub fn lps<R: Rng>(rng: &mut R, v: &Vass, start: usize, max_cycles: usize, max_path: usize) -> Lps {
    let mut paths = Vec::new();
    let mut cycles = Vec::new();
    let mut cur = start;
    let n = rng.gen_range(0..=max_cycles);
    for _ in 0..n {
        let len = rng.gen_range(0..=max_path);
        let p = random_walk(rng, v, cur, len);
        cur = p.last().map_or(cur, |&t| v.transition(t).1);
        let options = cycles_at(v, cur, 3);
        let Some(c) = options.choose(rng) else {
            paths.push(p);
            break;
        };
        paths.push(p);
        cycles.push(c.clone());
    }
    // When a cycle was unavailable the last path is already final.
    if paths.len() == cycles.len() {
        let len = rng.gen_range(0..=max_path);
        paths.push(random_walk(rng, v, cur, len));
    }
    Lps::new(v, paths, cycles).expect("generated scheme is valid")
}

/// A single cycle of length `len` over fresh states `c0 … c(len−1)`.
pub fn cycle_vass<R: Rng>(rng: &mut R, dim: usize, len: usize, max_num: i64, max_den: i64) -> (Vass, Vec<usize>) {
    let mut v = Vass::new(dim).expect("positive dimension");
    for i in 0..len {
        v.add_state(&format!("c{i}"), &[]).expect("fresh state");
    }
    let cycle = (0..len)
        .map(|i| v.add_transition(i, (i + 1) % len, vector(rng, dim, max_num, max_den)).expect("fresh pair"))
        .collect();
    (v, cycle)
}

/// A random linear system with optional strict rows.
pub fn linear_system<R: Rng>(rng: &mut R, nvars: usize, nrows: usize, max_coef: i64, strict: bool) -> LinearSystem {
    let mut s = LinearSystem::new(nvars);
    let rels: &[Relation] = if strict {
        &[Relation::Le, Relation::Ge, Relation::Eq, Relation::Lt, Relation::Gt]
    } else {
        &[Relation::Le, Relation::Ge, Relation::Eq]
    };
    for _ in 0..nrows {
        let coeffs: RationalVec = (0..nvars).map(|_| Rational::from_int(rng.gen_range(-max_coef..=max_coef))).collect();
        let rel = *rels.choose(rng).unwrap();
        // Equalities are rarer so random systems are not almost always infeasible.
        let rel = if rel == Relation::Eq && rng.gen_bool(0.5) { Relation::Le } else { rel };
        s.add_row(coeffs, rel, Rational::from_int(rng.gen_range(-max_coef..=max_coef))).unwrap();
    }
    s
}

/// A random group-disjunction system: `groups` disjoint groups covering at
/// most `max_vars` nonnegative variables, random base rows, group 0 optionally
/// mandatory.
pub fn csh_system<R: Rng>(rng: &mut R, max_vars: usize, groups: usize, rows: usize) -> CshSystem {
    let nvars = rng.gen_range(groups.max(1)..=max_vars.max(groups));
    let mut order: Vec<usize> = (0..nvars).collect();
    order.shuffle(rng);
    let mut gs: Vec<Vec<usize>> = vec![Vec::new(); groups];
    for (i, v) in order.into_iter().enumerate() {
        if i < groups {
            gs[i].push(v);
        } else if rng.gen_bool(0.8) {
            let g = rng.gen_range(0..groups);
            gs[g].push(v);
        }
    }
    let mut base = linear_system(rng, nvars, rows, 3, false);
    for g in &gs {
        for &v in g {
            base.nonneg(v);
        }
    }
    let mandatory: Vec<usize> = if rng.gen_bool(0.5) { vec![0] } else { vec![] };
    CshSystem::new(base, gs, mandatory).expect("generated system is well formed")
}

/// A random integer instance with zero tests: a VASS of dimension 2 whose
/// states carry random tests, a scheme over it, and a small source.
pub fn ztest_instance<R: Rng>(rng: &mut R) -> (Vass, Lps, Configuration) {
    let states = rng.gen_range(1..=3);
    let mut v = Vass::new(2).expect("dimension 2");
    for i in 0..states {
        let tests: Vec<usize> = (0..2).filter(|_| rng.gen_bool(0.3)).collect();
        v.add_state(&format!("s{i}"), &tests).expect("fresh state");
    }
    let ntrans = rng.gen_range(states..=(states * states).min(5));
    for i in 1..states {
        v.add_transition(i - 1, i, vector(rng, 2, 2, 1)).expect("fresh pair");
    }
    let mut attempts = 0;
    while v.num_transitions() < ntrans && attempts < 50 {
        attempts += 1;
        let (a, b) = (rng.gen_range(0..states), rng.gen_range(0..states));
        if v.find_transition(a, b).is_none() {
            v.add_transition(a, b, vector(rng, 2, 2, 1)).expect("fresh pair");
        }
    }
    let scheme = loop {
        let s = lps(rng, &v, 0, 2, 2);
        if s.len() <= 6 {
            break s;
        }
    };
    let src: RationalVec = (0..2)
        .map(|c| if v.zero_tests(0).contains(&c) { Rational::zero() } else { Rational::from_int(rng.gen_range(0..=3)) })
        .collect();
    (v, scheme, Configuration::new(0, src))
}
