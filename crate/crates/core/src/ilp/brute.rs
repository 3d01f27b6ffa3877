use std::time::Instant;

use super::{IlpModel, Solution, SolveStats};
use crate::error::{Error, Result};

/// Largest program (counting every variable) the enumerator accepts.
pub const BRUTE_FORCE_LIMIT: usize = 25;

/// Enumerates every 0-1 assignment and keeps the best feasible one, using the
/// same tie-break as the branch-and-bound solver. Test oracle.
pub fn brute_force(model: &IlpModel) -> Result<Solution> {
    let n = model.num_vars();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::Refused(format!(
            "brute force refuses {n} variables (limit {BRUTE_FORCE_LIMIT})"
        )));
    }
    let start = Instant::now();
    let bit = |v: usize| 1u32 << v;
    let pair_masks: Vec<u32> = model
        .pairwise()
        .iter()
        .map(|[a, b]| bit(*a) | bit(*b))
        .collect();
    let group_masks: Vec<u32> = model
        .groups()
        .iter()
        .map(|g| g.iter().fold(0, |m, &v| m | bit(v)))
        .collect();
    let coeff: Vec<f64> = model.vars().iter().map(|v| v.coeff).collect();

    let feasible = |mask: u32| {
        pair_masks.iter().all(|&p| mask & p != p)
            && group_masks.iter().all(|&g| (mask & g).count_ones() <= 1)
            && model.links().iter().all(|l| {
                let x = mask & bit(l.aux) != 0;
                let both = mask & bit(l.a) != 0 && mask & bit(l.b) != 0;
                x == both
            })
    };

    let mut best: Option<(f64, u32)> = None;
    let total: u64 = 1 << n;
    for m in 0..total {
        let mask = m as u32;
        if !feasible(mask) {
            continue;
        }
        let value: f64 = (0..n)
            .filter(|&v| mask & bit(v) != 0)
            .map(|v| coeff[v])
            .sum();
        let better = match best {
            None => true,
            Some((bv, bm)) => {
                value > bv
                    || (value == bv && {
                        // lowest differing variable must be selected in `mask`
                        let diff = mask ^ bm;
                        diff != 0 && mask & (diff & diff.wrapping_neg()) != 0
                    })
            }
        };
        if better {
            best = Some((value, mask));
        }
    }

    let (_, mask) = best.expect("the all-zero assignment is always feasible");
    let assignment: Vec<bool> = (0..n).map(|v| mask & bit(v) != 0).collect();
    Ok(Solution {
        objective_value: model.objective(&assignment),
        assignment,
        optimal: true,
        stats: SolveStats {
            nodes: total,
            components: 1,
            wall_time: start.elapsed(),
        },
    })
}
