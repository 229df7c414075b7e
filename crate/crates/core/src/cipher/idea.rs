//! IDEA over 64-bit blocks with a 128-bit key.
//!
//! The default form runs eight full rounds and stops there, without the
//! final output transformation. [`IdeaRounds::Standard`] restores the
//! half round so published IDEA vectors can be checked against the same
//! round code.

use crate::block::{Block64, MasterKey128};

/// Which way a key schedule runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Encrypt,
    Decrypt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum IdeaRounds {
    /// Eight full rounds, no output transformation.
    #[default]
    Eight,
    /// Standard 8.5-round IDEA.
    Standard,
}

impl IdeaRounds {
    pub const fn subkey_count(self) -> usize {
        match self {
            IdeaRounds::Eight => 48,
            IdeaRounds::Standard => 52,
        }
    }
}

const ROUNDS: usize = 8;

/// Multiplication modulo 2^16 + 1, where the word 0 stands for 2^16.
#[inline]
pub fn mul(a: u16, b: u16) -> u16 {
    if a == 0 {
        return 1u16.wrapping_sub(b);
    }
    if b == 0 {
        return 1u16.wrapping_sub(a);
    }
    let p = a as u32 * b as u32;
    let lo = p as u16;
    let hi = (p >> 16) as u16;
    lo.wrapping_sub(hi).wrapping_add((lo < hi) as u16)
}

/// Inverse under [`mul`]; 0 (that is 2^16 = -1) and 1 are their own
/// inverses. Computed as a^(p-2) mod p.
pub fn mul_inv(a: u16) -> u16 {
    if a <= 1 {
        return a;
    }
    let mut base = a;
    let mut exp: u32 = 0xFFFF;
    let mut acc: u16 = 1;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul(acc, base);
        }
        base = mul(base, base);
        exp >>= 1;
    }
    acc
}

#[inline]
pub fn add_inv(a: u16) -> u16 {
    a.wrapping_neg()
}

/// Expanded subkeys for one direction.
#[derive(Clone, PartialEq, Eq)]
pub struct IdeaKeySchedule {
    subkeys: [u16; 52],
    rounds: IdeaRounds,
    direction: Direction,
}

impl std::fmt::Debug for IdeaKeySchedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IdeaKeySchedule")
            .field("rounds", &self.rounds)
            .field("direction", &self.direction)
            .finish_non_exhaustive()
    }
}

/// The 52 raw encryption subkeys: eight words per 25-bit left rotation of
/// the key.
fn expand(key: &MasterKey128) -> [u16; 52] {
    let bytes = key.as_bytes();
    let mut z = [0u16; 52];
    for i in 0..8 {
        z[i] = u16::from_be_bytes([bytes[2 * i], bytes[2 * i + 1]]);
    }
    // rotating 128 bits left by 25 is a 16-bit word shift plus 9 bits
    for n in 8..52 {
        let prev = n - n % 8 - 8;
        let p = n % 8;
        z[n] = (z[prev + (p + 1) % 8] << 9) | (z[prev + (p + 2) % 8] >> 7);
    }
    z
}

impl IdeaKeySchedule {
    pub fn new(key: &MasterKey128, direction: Direction) -> Self {
        Self::with_rounds(key, direction, IdeaRounds::Eight)
    }

    pub fn with_rounds(key: &MasterKey128, direction: Direction, rounds: IdeaRounds) -> Self {
        let z = expand(key);
        let subkeys = match direction {
            Direction::Encrypt => z,
            Direction::Decrypt => invert(&z, rounds),
        };
        IdeaKeySchedule {
            subkeys,
            rounds,
            direction,
        }
    }

    pub fn subkeys(&self) -> &[u16] {
        &self.subkeys[..self.rounds.subkey_count()]
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn rounds(&self) -> IdeaRounds {
        self.rounds
    }
}

/// Decrypt layout: for the 8.5-round form the four output-transform
/// inverses come first; then, for encryption rounds 8 down to 1,
/// `[Z1^-1, -Z2, -Z3, Z4^-1, Z5, Z6]`.
fn invert(z: &[u16; 52], rounds: IdeaRounds) -> [u16; 52] {
    let mut d = [0u16; 52];
    let mut at = 0;
    if rounds == IdeaRounds::Standard {
        d[0] = mul_inv(z[48]);
        d[1] = add_inv(z[49]);
        d[2] = add_inv(z[50]);
        d[3] = mul_inv(z[51]);
        at = 4;
    }
    for r in (0..ROUNDS).rev() {
        let k = &z[6 * r..6 * r + 6];
        d[at..at + 6].copy_from_slice(&[
            mul_inv(k[0]),
            add_inv(k[1]),
            add_inv(k[2]),
            mul_inv(k[3]),
            k[4],
            k[5],
        ]);
        at += 6;
    }
    d
}

/// The multiply-add box; its output is XORed in, so the layer is an
/// involution.
#[inline]
fn ma_layer(x: &mut [u16; 4], k5: u16, k6: u16) {
    let t1 = mul(x[0] ^ x[2], k5);
    let t2 = mul(t1.wrapping_add(x[1] ^ x[3]), k6);
    let t3 = t1.wrapping_add(t2);
    x[0] ^= t2;
    x[2] ^= t2;
    x[1] ^= t3;
    x[3] ^= t3;
}

#[inline]
fn key_layer(x: &mut [u16; 4], k: &[u16]) {
    x[0] = mul(x[0], k[0]);
    x[1] = x[1].wrapping_add(k[1]);
    x[2] = x[2].wrapping_add(k[2]);
    x[3] = mul(x[3], k[3]);
}

pub fn encrypt(block: Block64, ks: &IdeaKeySchedule) -> Block64 {
    assert_eq!(
        ks.direction,
        Direction::Encrypt,
        "IDEA encrypt needs an encryption schedule"
    );
    let mut x = block.to_words16();
    for r in 0..ROUNDS {
        let k = &ks.subkeys[6 * r..6 * r + 6];
        key_layer(&mut x, k);
        ma_layer(&mut x, k[4], k[5]);
        x.swap(1, 2);
    }
    if ks.rounds == IdeaRounds::Standard {
        x.swap(1, 2);
        key_layer(&mut x, &ks.subkeys[48..52]);
    }
    Block64::from_words16(x)
}

pub fn decrypt(block: Block64, ks: &IdeaKeySchedule) -> Block64 {
    assert_eq!(
        ks.direction,
        Direction::Decrypt,
        "IDEA decrypt needs a decryption schedule"
    );
    let mut x = block.to_words16();
    let mut k = ks.subkeys();
    if ks.rounds == IdeaRounds::Standard {
        key_layer(&mut x, &k[..4]);
        x.swap(1, 2);
        k = &k[4..];
    }
    for round in k.chunks_exact(6) {
        x.swap(1, 2);
        ma_layer(&mut x, round[4], round[5]);
        key_layer(&mut x, round);
    }
    Block64::from_words16(x)
}
