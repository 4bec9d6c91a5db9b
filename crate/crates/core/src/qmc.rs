//! Scrambled Sobol points and seed splitting.
//!
//! The base digital sequence comes from the `sobol` crate (Joe–Kuo direction
//! numbers); scrambling is a hash-based nested uniform (Owen) permutation of
//! the 32-bit digits, seeded per dimension.

use std::sync::OnceLock;

use sobol::params::JoeKuoD6;
use sobol::Sobol;

use crate::kernels::UnitPoint;

fn params() -> &'static JoeKuoD6 {
    static PARAMS: OnceLock<JoeKuoD6> = OnceLock::new();
    PARAMS.get_or_init(JoeKuoD6::standard)
}

/// Largest dimension the bundled direction numbers support.
pub const MAX_SOBOL_DIM: usize = 1000;

/// SplitMix64 finalizer.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent sub-seed for `stream` from a master seed.
#[inline]
pub fn split_seed(master: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(master) ^ splitmix64(stream.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

#[inline]
fn laine_karras(mut x: u32, seed: u32) -> u32 {
    x = x.wrapping_add(seed);
    x ^= x.wrapping_mul(0x6c50_b47c);
    x ^= x.wrapping_mul(0xb82f_1e52);
    x ^= x.wrapping_mul(0xc7af_e638);
    x ^= x.wrapping_mul(0x8d22_f6e6);
    x
}

/// Nested uniform scramble of the binary digits of `x`.
#[inline]
pub fn owen_scramble(x: u32, seed: u32) -> u32 {
    laine_karras(x.reverse_bits(), seed).reverse_bits()
}

/// First `n` points of the `d`-dimensional Sobol sequence in `[0, 1)^d`,
/// Owen-scrambled when `scramble` carries a seed.
///
/// Panics if `d` exceeds [`MAX_SOBOL_DIM`].
pub fn sobol_points(d: usize, n: usize, scramble: Option<u64>) -> Vec<Vec<f64>> {
    if d == 0 || n == 0 {
        return vec![Vec::new(); n];
    }
    assert!(d <= MAX_SOBOL_DIM, "Sobol dimension {d} exceeds {MAX_SOBOL_DIM}");
    let dim_seeds: Option<Vec<u32>> =
        scramble.map(|s| (0..d).map(|j| split_seed(s, j as u64) as u32).collect());
    Sobol::<u32>::new(d, params())
        .take(n)
        .map(|p| {
            p.iter()
                .enumerate()
                .map(|(j, &v)| {
                    let v = match &dim_seeds {
                        Some(seeds) => owen_scramble(v, seeds[j]),
                        None => v,
                    };
                    v as f64 / 4_294_967_296.0
                })
                .collect()
        })
        .collect()
}

/// `n` scrambled Sobol points of the unit cube, deterministic in `seed`.
pub fn sobol_init(d: usize, n: usize, seed: u64) -> Vec<UnitPoint> {
    sobol_points(d, n, Some(seed))
        .into_iter()
        .map(|p| UnitPoint::new(p).expect("Sobol coordinates lie in [0, 1)"))
        .collect()
}
