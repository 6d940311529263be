//! Deterministic seeded sampling shared by the falsifiers.
//!
//! Every sample index owns its own RNG derived from `(seed, stream, index)`,
//! so batches can be evaluated in parallel and the first hit in sample order
//! does not depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::heis::HVec;

/// Stream tags. Checks that must see identical samples share a tag.
pub mod stream {
    pub const AXIOM_A: u64 = 1;
    pub const AXIOM_B: u64 = 2;
    pub const HORIZONTAL_PAIRS: u64 = 3;
    pub const FN_PAIRS: u64 = 4;
    pub const HOMOGENEITY: u64 = 5;
    pub const SUBDIFF: u64 = 6;
    pub const BOUNDARY: u64 = 7;
    pub const CH_PAIRS: u64 = 8;
    pub const FAMILY: u64 = 9;
    pub const RADIAL: u64 = 10;
    pub const CLOSED_FORM: u64 = 11;
}

const BATCH: usize = 2048;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_for(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let s = splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index);
    ChaCha8Rng::seed_from_u64(s)
}

/// Evaluates `probe(i)` for `i in 0..n` in parallel batches and returns the
/// smallest index whose probe produced a hit or an error.
pub fn first_hit<T, F>(n: usize, probe: F) -> Result<Option<(usize, T)>>
where
    T: Send,
    F: Fn(usize) -> Result<Option<T>> + Sync,
{
    let mut start = 0;
    while start < n {
        let end = (start + BATCH).min(n);
        let hit = (start..end)
            .into_par_iter()
            .filter_map(|i| match probe(i) {
                Ok(None) => None,
                other => Some((i, other)),
            })
            .min_by_key(|(i, _)| *i);
        if let Some((i, outcome)) = hit {
            return outcome.map(|t| t.map(|t| (i, t)));
        }
        start = end;
    }
    Ok(None)
}

/// Uniform direction on the unit circle.
pub fn unit_hvec<R: Rng>(rng: &mut R) -> HVec {
    let a = rng.gen_range(0.0..std::f64::consts::TAU);
    HVec::new(a.cos(), a.sin())
}

/// Uniform direction on the unit sphere of ℝ³.
pub fn unit_vec3<R: Rng>(rng: &mut R) -> [f64; 3] {
    let z: f64 = rng.gen_range(-1.0..=1.0);
    let a = rng.gen_range(0.0..std::f64::consts::TAU);
    let s = (1.0 - z * z).max(0.0).sqrt();
    [s * a.cos(), s * a.sin(), z]
}

/// Log-uniform magnitude in `[lo, hi]`.
pub fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    (rng.gen_range(lo.ln()..=hi.ln())).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn rngs_are_reproducible_and_distinct() {
        let a: f64 = rng_for(7, 1, 3).gen();
        let b: f64 = rng_for(7, 1, 3).gen();
        let c: f64 = rng_for(7, 1, 4).gen();
        let d: f64 = rng_for(7, 2, 3).gen();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn first_hit_is_minimum_index() {
        let hit = first_hit(10_000, |i| {
            Ok((i % 997 == 996 || i == 5000).then_some(i * 2))
        });
        assert_eq!(hit, Ok(Some((996, 1992))));
        let none = first_hit(100, |_| Ok(None::<()>));
        assert_eq!(none, Ok(None));
        let err = first_hit(100, |i| {
            if i == 40 {
                Err(Error::Precondition("x".into()))
            } else {
                Ok((i == 60).then_some(()))
            }
        });
        assert!(err.is_err());
    }
}
