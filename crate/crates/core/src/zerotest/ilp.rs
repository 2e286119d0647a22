//! Integer feasibility for small linear systems: a lattice test on the
//! equality rows followed by LP-based branch and bound.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::lp::{self, LinearSystem, LpOutcome, Relation};
use crate::rational::{Rational, RationalVec};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IlpOutcome {
    /// An integral point satisfying every row.
    Feasible(RationalVec),
    Infeasible,
    /// The node limit was reached before a verdict.
    Unknown,
}

/// Scales a rational row to a primitive integer row.
fn integer_row(coeffs: &[Rational], rhs: &Rational) -> (Vec<BigInt>, BigInt) {
    let l = coeffs.iter().chain(std::iter::once(rhs)).fold(BigInt::one(), |acc, r| acc.lcm(&r.denom()));
    let scale = |r: &Rational| r.numer() * (&l / r.denom());
    (coeffs.iter().map(scale).collect(), scale(rhs))
}

/// Whether `A x = b` has an integer solution, via column-style Hermite
/// reduction with unimodular column operations.
pub fn lattice_solvable(a: &[Vec<BigInt>], b: &[BigInt]) -> bool {
    let m = a.len();
    if m == 0 {
        return true;
    }
    let n = a[0].len();
    let mut h: Vec<Vec<BigInt>> = a.to_vec();
    let mut pivots: Vec<Option<usize>> = vec![None; m];
    let mut col = 0;
    for i in 0..m {
        if col == n {
            break;
        }
        // Euclid on columns col..n of row i.
        loop {
            let nz: Vec<usize> = (col..n).filter(|&j| !h[i][j].is_zero()).collect();
            if nz.len() <= 1 {
                if let Some(&j) = nz.first() {
                    for row in h.iter_mut() {
                        row.swap(col, j);
                    }
                    pivots[i] = Some(col);
                    col += 1;
                }
                break;
            }
            let p = *nz.iter().min_by_key(|&&j| h[i][j].abs()).unwrap();
            for &j in &nz {
                if j == p {
                    continue;
                }
                let f = h[i][j].div_floor(&h[i][p]);
                for row in h.iter_mut() {
                    let sub = &f * &row[p];
                    row[j] -= sub;
                }
            }
        }
    }
    // Forward substitution on the lower-echelon form.
    let mut y: Vec<BigInt> = vec![BigInt::zero(); n];
    for i in 0..m {
        let known: BigInt = (0..n).filter(|&j| Some(j) != pivots[i]).map(|j| &h[i][j] * &y[j]).sum();
        let r = &b[i] - known;
        match pivots[i] {
            Some(p) => {
                if !r.is_multiple_of(&h[i][p]) {
                    return false;
                }
                y[p] = r / &h[i][p];
            }
            None => {
                if !r.is_zero() {
                    return false;
                }
            }
        }
    }
    true
}

/// Searches for an integral point of `sys`. LP relaxations are solved with
/// `objective` maximized when given; at most `max_nodes` relaxations are
/// explored.
pub fn integer_feasible(sys: &LinearSystem, objective: Option<&RationalVec>, max_nodes: usize) -> IlpOutcome {
    let eq: Vec<(Vec<BigInt>, BigInt)> = sys
        .rows()
        .iter()
        .filter(|r| r.rel == Relation::Eq)
        .map(|r| integer_row(&r.coeffs, &r.rhs))
        .collect();
    let (a, b): (Vec<_>, Vec<_>) = eq.into_iter().unzip();
    if !lattice_solvable(&a, &b) {
        return IlpOutcome::Infeasible;
    }
    let mut stack = vec![sys.clone()];
    let mut nodes = 0;
    while let Some(node) = stack.pop() {
        nodes += 1;
        if nodes > max_nodes {
            return IlpOutcome::Unknown;
        }
        let outcome = match objective {
            Some(obj) => lp::maximize(&node, obj).unwrap_or(LpOutcome::Infeasible),
            None => lp::feasible(&node),
        };
        let Some(x) = outcome.point().cloned() else {
            continue;
        };
        match x.iter().position(|v| !v.is_integer()) {
            None => return IlpOutcome::Feasible(x),
            Some(j) => {
                let fl = Rational::from_bigint(x[j].floor());
                let mut lo = node.clone();
                lo.bound(j, Relation::Le, fl.clone());
                let mut hi = node;
                hi.bound(j, Relation::Ge, fl + Rational::one());
                stack.push(hi);
                stack.push(lo);
            }
        }
    }
    IlpOutcome::Infeasible
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qv};

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn lattice() {
        assert!(lattice_solvable(&[big(&[2, 4])], &big(&[6])));
        assert!(!lattice_solvable(&[big(&[2, 4])], &big(&[3])));
        assert!(lattice_solvable(&[big(&[3, 5])], &big(&[1])));
        assert!(!lattice_solvable(&[big(&[1, 1]), big(&[1, -1])], &big(&[1, 0])));
        assert!(lattice_solvable(&[big(&[1, 1]), big(&[1, -1])], &big(&[2, 0])));
        assert!(!lattice_solvable(&[big(&[0, 0])], &big(&[1])));
    }

    #[test]
    fn branch_and_bound() {
        // 2a + 2b = 4, a ≥ 1/2, b ≥ 1/2 → (1, 1)
        let mut s = LinearSystem::new(2);
        s.add_row(qv("2 2"), Relation::Eq, q("4")).unwrap();
        s.bound(0, Relation::Ge, q("1/2"));
        s.bound(1, Relation::Ge, q("1/2"));
        assert_eq!(integer_feasible(&s, None, 100), IlpOutcome::Feasible(qv("1 1")));
        // 1/3 ≤ a ≤ 2/3 has no integer point.
        let mut s = LinearSystem::new(1);
        s.bound(0, Relation::Ge, q("1/3"));
        s.bound(0, Relation::Le, q("2/3"));
        assert_eq!(integer_feasible(&s, None, 100), IlpOutcome::Infeasible);
    }

    #[test]
    fn lattice_rejects_before_search() {
        // 2a − 2b = 1 is unbounded as an LP but has no integer solution.
        let mut s = LinearSystem::new(2);
        s.add_row(qv("2 -2"), Relation::Eq, q("1")).unwrap();
        assert_eq!(integer_feasible(&s, None, 10), IlpOutcome::Infeasible);
    }
}
