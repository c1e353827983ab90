//! Occupation-time estimator for the box Green's function.
//!
//! The jump chain `P(x, y) = b(x,y) / deg(x)` is run from the pole and killed
//! when it leaves the box. Since `L = D (I - P)`, each visit to `x` adds
//! `1 / deg(x)`, and the expected total is exactly `G(pole, x)`.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::lattice::CoefficientField;
use crate::rng::task_rng;

/// Walkers simulated per independent task; part of the determinism contract.
pub const WALKERS_PER_CHUNK: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub walkers: u64,
}

pub fn random_walk_green(
    field: &CoefficientField,
    pole: &[i64],
    x: &[i64],
    walkers: u64,
    seed: u64,
) -> Result<WalkEstimate> {
    if walkers == 0 {
        return Err(invalid("walkers", "need at least one walker"));
    }
    let domain = field.domain();
    let start = domain.index_of(pole).ok_or_else(|| Error::OutsideBox(pole.to_vec()))?;
    let Some(target) = domain.index_of(x) else {
        return Ok(WalkEstimate { estimate: 0.0, stderr: 0.0, walkers });
    };
    let op = field.operator();
    let arity = 2 * domain.dim();
    let mut next = Vec::with_capacity(op.len() * arity);
    let mut cumulative = Vec::with_capacity(op.len() * arity);
    for i in 0..op.len() {
        let mut acc = 0.0;
        let deg = op.diagonal()[i];
        for (m, b) in op.neighbors(i) {
            acc += b / deg;
            next.push(m.map_or(u32::MAX, |m| m as u32));
            cumulative.push(acc);
        }
        *cumulative.last_mut().unwrap() = 1.0;
    }
    let credit = 1.0 / op.diagonal()[target];

    let chunks = walkers.div_ceil(WALKERS_PER_CHUNK);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = task_rng(seed, c);
            let count = WALKERS_PER_CHUNK.min(walkers - c * WALKERS_PER_CHUNK);
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let mut site = start;
                let mut visits = 0u64;
                loop {
                    if site == target {
                        visits += 1;
                    }
                    let u: f64 = rng.random();
                    let base = site * arity;
                    let slot = cumulative[base..base + arity].iter().position(|&c| u < c).unwrap_or(arity - 1);
                    let m = next[base + slot];
                    if m == u32::MAX {
                        break;
                    }
                    site = m as usize;
                }
                let v = visits as f64 * credit;
                s1 += v;
                s2 += v * v;
            }
            (s1, s2)
        })
        .collect();
    let (s1, s2) = sums.iter().fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d));
    let n = walkers as f64;
    let mean = s1 / n;
    let var = if walkers > 1 { ((s2 - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
    Ok(WalkEstimate { estimate: mean, stderr: (var / n).sqrt(), walkers })
}
