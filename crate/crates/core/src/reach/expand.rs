//! Turning solver coefficients into concrete runs.

use num_traits::ToPrimitive;

use super::encode::{cycle_q, NLayout, QLayout, SegmentN};
use super::ReachError;
use crate::model::{Configuration, Lps, RunWitness, Vass};
use crate::rational::{Rational, RationalVec};

fn ceil_usize(r: &Rational) -> usize {
    r.ceil().to_usize().expect("repetition count fits in usize")
}

/// Realizes cycle mass `a` (one coefficient per distinct label, in
/// first-occurrence order) as `D` traversals of `cycle`, where `D` is the
/// least positive integer with `a_g / (M(g)·D) ≤ 1` for every label `g` of
/// multiplicity `M(g)`.
pub fn expand_cycle_q(vass: &Vass, cycle: &[usize], a: &[Rational]) -> Vec<(usize, Rational)> {
    let cq = cycle_q(vass, cycle, 0);
    assert_eq!(cq.labels.len(), a.len(), "one coefficient per distinct label");
    if a.iter().all(Rational::is_zero) {
        return Vec::new();
    }
    let mult: Vec<Rational> = (0..a.len())
        .map(|g| Rational::from_int(cq.occ_label.iter().filter(|&&x| x == g).count() as i64))
        .collect();
    let per_occ: Vec<Rational> = a.iter().zip(&mult).map(|(ag, m)| ag / m).collect();
    let top = per_occ.iter().max().cloned().unwrap_or_else(Rational::zero);
    let reps = ceil_usize(&top).max(1);
    let scale = Rational::from_int(reps as i64).recip();
    let one: Vec<(usize, Rational)> =
        cycle.iter().zip(&cq.occ_label).map(|(&t, &g)| (t, &per_occ[g] * &scale)).collect();
    let mut steps = Vec::with_capacity(one.len() * reps);
    for _ in 0..reps {
        steps.extend(one.iter().cloned());
    }
    steps
}

pub(crate) fn expand_q(
    vass: &Vass,
    lps: &Lps,
    layout: &QLayout,
    witness: &RationalVec,
    source: &Configuration,
) -> RunWitness {
    let mut w = RunWitness::new(source.clone());
    let mut next_path = 0;
    for (k, (is_cycle, seg)) in lps.segments().enumerate() {
        if is_cycle {
            let cq = &layout.cycles[k / 2];
            let a = &witness[cq.offset..cq.offset + cq.labels.len()];
            w.steps.extend(expand_cycle_q(vass, seg, a));
        } else {
            for &t in seg {
                w.push(t, witness[next_path].clone());
                next_path += 1;
            }
        }
    }
    debug_assert_eq!(next_path, layout.n_path);
    w
}

/// A run along `cycle*` from `from` to `to` in ℚ≥0 semantics whose total
/// coefficient per position is `beta`. A short forward traversal with
/// geometrically decreasing coefficients moves every touched coordinate off
/// zero, a mirrored backward traversal lands on `to`, and the remaining mass
/// is spread evenly over enough middle traversals to stay nonnegative.
pub(crate) fn wiggle_cycle(
    vass: &Vass,
    cycle: &[usize],
    from: &RationalVec,
    to: &RationalVec,
    beta: &[Rational],
) -> Result<Vec<(usize, Rational)>, ReachError> {
    let d = vass.dim();
    let m = cycle.len();
    let labels: Vec<&RationalVec> = cycle.iter().map(|&t| vass.label(t)).collect();
    let touched: Vec<usize> = (0..d).filter(|&i| labels.iter().any(|l| !l[i].is_zero())).collect();
    let half = Rational::new(1, 2);
    let mut eps = half.clone();
    for _ in 0..512 {
        let fwd: Vec<Rational> = (0..m).map(|j| eps.pow(j as u32 + 1)).collect();
        let bwd: Vec<Rational> = (0..m).map(|j| eps.pow((m - j) as u32)).collect();
        let theta: Vec<Rational> = (0..m).map(|j| &(&beta[j] - &fwd[j]) - &bwd[j]).collect();
        let mut ok = theta.iter().all(Rational::is_positive);
        let mut x1 = from.clone();
        for j in 0..m {
            x1.add_scaled(&fwd[j], labels[j]);
            ok &= x1.is_nonneg();
        }
        let mut y1 = to.clone();
        for j in 0..m {
            y1.add_scaled(&-&bwd[j], labels[j]);
        }
        let mut y = y1.clone();
        ok &= y.is_nonneg();
        for j in 0..m {
            y.add_scaled(&bwd[j], labels[j]);
            ok &= y.is_nonneg();
        }
        ok &= touched.iter().all(|&i| x1[i].is_positive() && y1[i].is_positive());
        if !ok {
            eps = &eps * &half;
            continue;
        }
        let mut n = theta.iter().map(ceil_usize).max().unwrap_or(1).max(1);
        for &i in &touched {
            let spread: Rational = (0..m).map(|j| &theta[j] * &labels[j][i].abs()).sum();
            let mu = Rational::min(&x1[i], &y1[i]);
            n = n.max(ceil_usize(&(&spread / &mu)));
        }
        let scale = Rational::from_int(n as i64).recip();
        let mut steps: Vec<(usize, Rational)> = Vec::with_capacity(m * (n + 2));
        steps.extend(cycle.iter().copied().zip(fwd));
        let middle: Vec<(usize, Rational)> =
            cycle.iter().zip(&theta).map(|(&t, th)| (t, th * &scale)).collect();
        for _ in 0..n {
            steps.extend(middle.iter().cloned());
        }
        steps.extend(cycle.iter().copied().zip(bwd));
        return Ok(steps);
    }
    Err(ReachError::InternalInconsistency("cycle traversal could not be realized".into()))
}

pub(crate) fn expand_nonneg(
    vass: &Vass,
    lps: &Lps,
    layout: &NLayout,
    witness: &RationalVec,
    source: &Configuration,
) -> Result<RunWitness, ReachError> {
    let d = vass.dim();
    let mut w = RunWitness::new(source.clone());
    for (k, (_, seg)) in lps.segments().enumerate() {
        match layout.segments[k] {
            SegmentN::Path { offset } => {
                for (j, &t) in seg.iter().enumerate() {
                    w.push(t, witness[offset + j].clone());
                }
            }
            SegmentN::Cycle { beta } => {
                let b = &witness[beta..beta + seg.len()];
                if b.iter().all(Rational::is_zero) {
                    continue;
                }
                let from = layout.boundaries[k].value(witness, d);
                let to = layout.boundaries[k + 1].value(witness, d);
                w.steps.extend(wiggle_cycle(vass, seg, &from, &to, b)?);
            }
        }
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_vass, simulate, SemanticsMode};
    use crate::rational::{q, qv};

    #[test]
    fn bounded_repetitions() {
        let v = parse_vass("vass 2\nstate p\nstate r\ntrans p r 1 0\ntrans r p 0 1\n").unwrap();
        let steps = expand_cycle_q(&v, &[0, 1], &[q("3"), q("1")]);
        assert_eq!(steps.len(), 6);
        assert_eq!(steps[0], (0, q("1")));
        assert_eq!(steps[1], (1, q("1/3")));
        assert!(expand_cycle_q(&v, &[0, 1], &[q("0"), q("0")]).is_empty());
    }

    #[test]
    fn repeated_labels_share_mass() {
        let v = parse_vass("vass 1\nstate p\nstate r\ntrans p r 1\ntrans r p 1\n").unwrap();
        let steps = expand_cycle_q(&v, &[0, 1], &[q("3")]);
        // M = 2, so D = 2 traversals with 3/4 per step.
        assert_eq!(steps, vec![(0, q("3/4")), (1, q("3/4")), (0, q("3/4")), (1, q("3/4"))]);
    }

    #[test]
    fn wiggle_from_boundary() {
        // Swap cycle starting on an axis.
        let v = parse_vass("vass 2\nstate q\nstate r\ntrans q r -1 1\ntrans r q 1 -1\n").unwrap();
        let steps = wiggle_cycle(&v, &[0, 1], &qv("1 0"), &qv("1/2 1/2"), &[q("3/5"), q("1/10")]).unwrap();
        let mut w = RunWitness::new(Configuration::new(0, qv("1 0")));
        w.steps = steps;
        assert_eq!(simulate(&v, &w, SemanticsMode::QNonNeg).unwrap().values, qv("1/2 1/2"));
    }
}
