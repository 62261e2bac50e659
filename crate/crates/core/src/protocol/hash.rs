//! The multiplication hash family `h_y(s) = low k bits of s·y` over `GF(2^N)`.

use crate::error::{usage, Error, Result};

/// Largest supported field degree.
pub const MAX_FIELD_BITS: usize = 64;

/// Low-order terms of a low-weight irreducible polynomial of each degree
/// `N = 1..=64`; the leading `x^N` is implicit.
const IRREDUCIBLE: [u64; MAX_FIELD_BITS] = [
    0x0, 0x3, 0x3, 0x3, 0x5, 0x3, 0x3, 0x1b, 0x3, 0x9, 0x5, 0x9, 0x1b, 0x21, 0x3, 0x2b, 0x9, 0x9, 0x27, 0x9, 0x5, 0x3,
    0x21, 0x1b, 0x9, 0x1b, 0x27, 0x3, 0x5, 0x3, 0x9, 0x8d, 0x401, 0x81, 0x5, 0x201, 0x53, 0x63, 0x11, 0x39, 0x9, 0x81,
    0x59, 0x21, 0x1b, 0x3, 0x21, 0x2d, 0x201, 0x1d, 0x4b, 0x9, 0x47, 0x201, 0x81, 0x95, 0x11, 0x80001, 0x95, 0x3, 0x27,
    0x20000001, 0x3, 0x1b,
];

/// Carry-less product of two 64-bit polynomials.
pub fn clmul(a: u64, b: u64) -> u128 {
    let mut acc = 0u128;
    let a = a as u128;
    let mut b = b;
    let mut shift = 0;
    while b != 0 {
        if b & 1 == 1 {
            acc ^= a << shift;
        }
        b >>= 1;
        shift += 1;
    }
    acc
}

/// Arithmetic in `GF(2^N)` with elements stored in the low `N` bits of a `u64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gf2n {
    bits: usize,
    poly: u64,
}

impl Gf2n {
    pub fn new(bits: usize) -> Result<Gf2n> {
        if !(1..=MAX_FIELD_BITS).contains(&bits) {
            return Err(usage(format!("field degree {bits} outside 1..={MAX_FIELD_BITS}")));
        }
        Ok(Gf2n {
            bits,
            poly: IRREDUCIBLE[bits - 1],
        })
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    /// The full modulus as a 128-bit polynomial, including `x^N`.
    pub fn modulus(&self) -> u128 {
        (1u128 << self.bits) | self.poly as u128
    }

    pub fn mask(&self) -> u64 {
        if self.bits == 64 {
            u64::MAX
        } else {
            (1u64 << self.bits) - 1
        }
    }

    pub fn reduce(&self, mut v: u128) -> u64 {
        let n = self.bits;
        let m = self.modulus();
        while v >> n != 0 {
            let top = 127 - v.leading_zeros() as usize;
            v ^= m << (top - n);
        }
        v as u64
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        let mask = self.mask();
        self.reduce(clmul(a & mask, b & mask))
    }
}

/// `k` low bits of `s · seed` in `GF(2^N)`.
pub fn privacy_amplify(field: &Gf2n, s: u64, seed: u64, k: usize) -> Result<u64> {
    if k > field.bits() {
        return Err(usage(format!("key length {k} exceeds the {} input bits", field.bits())));
    }
    let prod = field.mul(s, seed);
    Ok(if k == 64 { prod } else { prod & ((1u64 << k) - 1) })
}

/// Largest field for which the exhaustive seed scans below are allowed.
pub const MAX_EXHAUSTIVE_BITS: usize = 20;

fn check_exhaustive(field: &Gf2n, k: usize) -> Result<()> {
    if field.bits() > MAX_EXHAUSTIVE_BITS {
        return Err(Error::Resource(format!(
            "exhaustive seed scan limited to {MAX_EXHAUSTIVE_BITS} bits"
        )));
    }
    if k > field.bits() {
        return Err(usage(format!("key length {k} exceeds the {} input bits", field.bits())));
    }
    Ok(())
}

/// Exact probability over a uniform seed that `s` and `t` yield the same key.
pub fn collision_probability(field: &Gf2n, s: u64, t: u64, k: usize) -> Result<f64> {
    check_exhaustive(field, k)?;
    let seeds = 1u64 << field.bits();
    let mut hits = 0u64;
    for y in 0..seeds {
        if privacy_amplify(field, s, y, k)? == privacy_amplify(field, t, y, k)? {
            hits += 1;
        }
    }
    Ok(hits as f64 / seeds as f64)
}

/// Seed-averaged total-variation distance of the key from uniform when the
/// input is uniform on `support`.
pub fn seeded_distance(field: &Gf2n, support: &[u64], k: usize) -> Result<f64> {
    check_exhaustive(field, k)?;
    if support.is_empty() {
        return Err(usage("empty input support"));
    }
    let seeds = 1u64 << field.bits();
    let cells = 1usize << k;
    let (w, u) = (1.0 / support.len() as f64, 1.0 / cells as f64);
    let mut counts = vec![0u32; cells];
    let mut total = 0.0;
    for y in 0..seeds {
        counts.iter_mut().for_each(|c| *c = 0);
        for &s in support {
            counts[privacy_amplify(field, s, y, k)? as usize] += 1;
        }
        total += 0.5 * counts.iter().map(|&c| (c as f64 * w - u).abs()).sum::<f64>();
    }
    Ok(total / seeds as f64)
}

/// Leftover-hash prediction `2^{-(h_min - k)/2}` for the key's distance from uniform.
pub fn leftover_bound(h_min: f64, k: usize) -> f64 {
    (-(h_min - k as f64) / 2.0).exp2()
}
