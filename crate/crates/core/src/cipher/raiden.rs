//! Raiden, the TEA replacement: 16 Feistel-style rounds on two 32-bit words
//! with a key state that evolves every round.

use crate::block::{Block64, RaidenKey};

pub const ROUNDS: usize = 16;

#[inline]
fn next_subkey(k: &mut [u32; 4], round: usize) -> u32 {
    // the shift amount is data dependent; it is taken mod 32
    let sk = k[0]
        .wrapping_add(k[1])
        .wrapping_add(k[2].wrapping_add(k[3]) ^ k[0].wrapping_shl(k[2]));
    k[round % 4] = sk;
    sk
}

#[inline]
fn mix(sk: u32, x: u32) -> u32 {
    (sk.wrapping_add(x) << 9) ^ (sk.wrapping_sub(x) ^ (sk.wrapping_add(x) >> 14))
}

/// The sixteen round subkeys in encryption order.
pub fn subkeys(key: &RaidenKey) -> [u32; ROUNDS] {
    let mut k = key.0;
    std::array::from_fn(|i| next_subkey(&mut k, i))
}

/// Encrypt, reporting each subkey to `observe` as it is consumed.
pub fn encrypt_observed(block: Block64, key: &RaidenKey, mut observe: impl FnMut(u32)) -> Block64 {
    let [mut b0, mut b1] = block.to_words32();
    let mut k = key.0;
    for i in 0..ROUNDS {
        let sk = next_subkey(&mut k, i);
        observe(sk);
        b0 = b0.wrapping_add(mix(sk, b1));
        b1 = b1.wrapping_add(mix(sk, b0));
    }
    Block64::from_words32([b0, b1])
}

/// Decrypt, reporting each subkey to `observe` as it is consumed.
pub fn decrypt_observed(block: Block64, key: &RaidenKey, mut observe: impl FnMut(u32)) -> Block64 {
    let [mut b0, mut b1] = block.to_words32();
    for &sk in subkeys(key).iter().rev() {
        observe(sk);
        b1 = b1.wrapping_sub(mix(sk, b0));
        b0 = b0.wrapping_sub(mix(sk, b1));
    }
    Block64::from_words32([b0, b1])
}

#[inline]
pub fn encrypt(block: Block64, key: &RaidenKey) -> Block64 {
    encrypt_observed(block, key, |_| {})
}

#[inline]
pub fn decrypt(block: Block64, key: &RaidenKey) -> Block64 {
    decrypt_observed(block, key, |_| {})
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decrypt_consumes_reversed_subkeys() {
        let key = RaidenKey([0xdeadbeef, 1, 0x80000000, 31]);
        let b = Block64::new(0x0123_4567_89ab_cdef);
        let mut enc = Vec::new();
        let ct = encrypt_observed(b, &key, |k| enc.push(k));
        let mut dec = Vec::new();
        assert_eq!(decrypt_observed(ct, &key, |k| dec.push(k)), b);
        dec.reverse();
        assert_eq!(enc, dec);
        assert_eq!(enc, subkeys(&key).to_vec());
    }

    #[test]
    fn key_is_not_mutated() {
        let key = RaidenKey([1, 2, 3, 4]);
        let b = Block64::new(42);
        let first = encrypt(b, &key);
        assert_eq!(key, RaidenKey([1, 2, 3, 4]));
        assert_eq!(encrypt(b, &key), first);
    }
}
