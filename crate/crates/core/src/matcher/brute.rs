//! Exhaustive perfect-matching enumeration, used to check the blossom solver.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{matching_weight, Matching, PairGraph};

/// Largest vertex count accepted (10,395 matchings).
pub const BRUTE_FORCE_MAX_N: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult<T = f64> {
    pub best: Matching<T>,
    /// Number of perfect matchings visited.
    pub enumerated: usize,
}

/// Visits every perfect matching of `0..n` (pairs sorted by lower vertex).
pub fn for_each_perfect_matching(n: usize, mut visit: impl FnMut(&[(usize, usize)])) {
    fn rec(used: &mut [bool], pairs: &mut Vec<(usize, usize)>, visit: &mut dyn FnMut(&[(usize, usize)])) {
        let Some(i) = used.iter().position(|u| !u) else {
            visit(pairs);
            return;
        };
        used[i] = true;
        for j in i + 1..used.len() {
            if used[j] {
                continue;
            }
            used[j] = true;
            pairs.push((i, j));
            rec(used, pairs, visit);
            pairs.pop();
            used[j] = false;
        }
        used[i] = false;
    }
    if !n.is_multiple_of(2) {
        return;
    }
    rec(&mut vec![false; n], &mut Vec::with_capacity(n / 2), &mut visit);
}

/// Exact minimum by enumeration; the first minimum found wins ties.
pub fn brute_force_matching<T: Scalar, D>(g: &PairGraph<T, D>) -> Result<BruteForceResult<T>> {
    let n = g.n();
    if !n.is_multiple_of(2) || n == 0 {
        return Err(Error::InvalidGraph(format!("perfect matching needs an even n >= 2, got {n}")));
    }
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::GraphTooLarge {
            n,
            max: BRUTE_FORCE_MAX_N,
        });
    }
    let mut best: Option<Matching<T>> = None;
    let mut enumerated = 0;
    for_each_perfect_matching(n, |pairs| {
        enumerated += 1;
        let total = matching_weight(g, pairs);
        if best.as_ref().is_none_or(|b| total < b.total) {
            best = Some(Matching {
                pairs: pairs.to_vec(),
                total,
            });
        }
    });
    Ok(BruteForceResult {
        best: best.expect("n >= 2 has a perfect matching"),
        enumerated,
    })
}
