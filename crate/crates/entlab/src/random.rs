//! Seeded generators for random test corpora.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Dist, GridSpec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random joint law of two axes on `[0,1)^2` at `level`, with at most
/// `max_atoms` distinct values per axis and random positive weights.
pub fn random_joint<R: Rng>(rng: &mut R, level: u32, max_atoms: usize) -> Dist {
    let cells = 1i64 << level;
    let pick = |rng: &mut R| {
        let k = rng.random_range(1..=max_atoms.min(cells as usize));
        let mut vals: Vec<i64> = (0..cells).collect();
        for i in 0..k {
            let j = rng.random_range(i..vals.len());
            vals.swap(i, j);
        }
        vals.truncate(k);
        vals.sort_unstable();
        vals
    };
    let xs = pick(rng);
    let ys = pick(rng);
    let mut entries = Vec::new();
    for &x in &xs {
        for &y in &ys {
            if rng.random_bool(0.6) {
                entries.push((vec![x, y], rng.random_range(0.05..1.0)));
            }
        }
    }
    if entries.is_empty() {
        entries.push((vec![xs[0], ys[0]], 1.0));
    }
    Dist::from_weights(GridSpec::unit(2, level), entries).expect("valid random joint")
}

/// Random law on `[0,1)` at `level` supported on `atoms` distinct cells.
pub fn random_1d<R: Rng>(rng: &mut R, level: u32, atoms: usize) -> Dist {
    let cells = 1i64 << level;
    let atoms = atoms.clamp(1, cells as usize);
    let mut vals: Vec<i64> = (0..cells).collect();
    for i in 0..atoms {
        let j = rng.random_range(i..vals.len());
        vals.swap(i, j);
    }
    let entries = vals[..atoms].iter().map(|&k| (vec![k], rng.random_range(0.05..1.0)));
    Dist::from_weights(GridSpec::unit(1, level), entries).expect("valid random law")
}

/// Multiplicative cascade on `[0,1)` at `level`: each cell passes a share
/// in `[lo, 1 - lo]` of its mass to the left child. Full support, with
/// Frostman constants that stay moderate for exponents near 1.
pub fn random_cascade<R: Rng>(rng: &mut R, level: u32, lo: f64) -> Dist {
    let mut masses = vec![1.0f64];
    for _ in 0..level {
        let mut next = Vec::with_capacity(masses.len() * 2);
        for m in masses {
            let t = rng.random_range(lo..=1.0 - lo);
            next.push(m * t);
            next.push(m * (1.0 - t));
        }
        masses = next;
    }
    let entries = masses.into_iter().enumerate().map(|(k, m)| (vec![k as i64], m));
    Dist::from_weights(GridSpec::unit(1, level), entries).expect("valid cascade")
}
