//! Block and key value types shared by every cipher, plus their fixed-width
//! lowercase hex forms.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HexError {
    #[error("expected {expected} hex characters, got {found}")]
    Length { expected: usize, found: usize },
    #[error("invalid hex character {0:?}")]
    Digit(char),
}

fn decode_hex<const N: usize>(s: &str) -> Result<[u8; N], HexError> {
    let s = s.trim();
    let s = s
        .strip_prefix("0x")
        .or_else(|| s.strip_prefix("0X"))
        .unwrap_or(s);
    if s.len() != 2 * N {
        return Err(HexError::Length {
            expected: 2 * N,
            found: s.chars().count(),
        });
    }
    let mut out = [0u8; N];
    let digits = s.as_bytes();
    for (i, byte) in out.iter_mut().enumerate() {
        let hi = nibble(digits[2 * i])?;
        let lo = nibble(digits[2 * i + 1])?;
        *byte = (hi << 4) | lo;
    }
    Ok(out)
}

fn nibble(c: u8) -> Result<u8, HexError> {
    (c as char)
        .to_digit(16)
        .map(|d| d as u8)
        .ok_or(HexError::Digit(c as char))
}

fn write_hex(f: &mut fmt::Formatter<'_>, bytes: &[u8]) -> fmt::Result {
    for b in bytes {
        write!(f, "{b:02x}")?;
    }
    Ok(())
}

/// One 64-bit plaintext or ciphertext unit.
///
/// The canonical form is eight octets in big-endian order. The 16-bit views
/// used by IDEA and Skipjack put the most significant subword first, as does
/// the 32-bit view used by Raiden.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Block64(u64);

impl Block64 {
    pub const ZERO: Block64 = Block64(0);

    pub const fn new(value: u64) -> Self {
        Block64(value)
    }

    pub const fn value(self) -> u64 {
        self.0
    }

    pub const fn from_bytes(bytes: [u8; 8]) -> Self {
        Block64(u64::from_be_bytes(bytes))
    }

    pub const fn to_bytes(self) -> [u8; 8] {
        self.0.to_be_bytes()
    }

    pub const fn to_words16(self) -> [u16; 4] {
        let v = self.0;
        [(v >> 48) as u16, (v >> 32) as u16, (v >> 16) as u16, v as u16]
    }

    pub const fn from_words16(w: [u16; 4]) -> Self {
        Block64(((w[0] as u64) << 48) | ((w[1] as u64) << 32) | ((w[2] as u64) << 16) | w[3] as u64)
    }

    pub const fn to_words32(self) -> [u32; 2] {
        [(self.0 >> 32) as u32, self.0 as u32]
    }

    pub const fn from_words32(w: [u32; 2]) -> Self {
        Block64(((w[0] as u64) << 32) | w[1] as u64)
    }
}

impl From<u64> for Block64 {
    fn from(v: u64) -> Self {
        Block64(v)
    }
}

impl From<Block64> for u64 {
    fn from(b: Block64) -> Self {
        b.0
    }
}

impl fmt::Display for Block64 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl fmt::Debug for Block64 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Block64({:016x})", self.0)
    }
}

impl FromStr for Block64 {
    type Err = HexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        decode_hex::<8>(s).map(Block64::from_bytes)
    }
}

/// The 128-bit product-cipher key.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct MasterKey128([u8; 16]);

impl MasterKey128 {
    pub const ZERO: MasterKey128 = MasterKey128([0; 16]);

    pub const fn from_bytes(bytes: [u8; 16]) -> Self {
        MasterKey128(bytes)
    }

    pub const fn from_u128(v: u128) -> Self {
        MasterKey128(v.to_be_bytes())
    }

    pub const fn as_bytes(&self) -> &[u8; 16] {
        &self.0
    }

    pub const fn to_u128(self) -> u128 {
        u128::from_be_bytes(self.0)
    }

    /// Skipjack only sees the first 80 bits.
    pub fn skipjack_key(&self) -> SkipjackKey80 {
        let mut cv = [0u8; 10];
        cv.copy_from_slice(&self.0[..10]);
        SkipjackKey80(cv)
    }

    /// Four big-endian 32-bit words in key byte order.
    pub fn raiden_key(&self) -> RaidenKey {
        let mut words = [0u32; 4];
        for (i, w) in words.iter_mut().enumerate() {
            *w = u32::from_be_bytes([
                self.0[4 * i],
                self.0[4 * i + 1],
                self.0[4 * i + 2],
                self.0[4 * i + 3],
            ]);
        }
        RaidenKey(words)
    }
}

impl fmt::Display for MasterKey128 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_hex(f, &self.0)
    }
}

impl fmt::Debug for MasterKey128 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MasterKey128({self})")
    }
}

impl FromStr for MasterKey128 {
    type Err = HexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        decode_hex::<16>(s).map(MasterKey128)
    }
}

/// Skipjack's 80-bit cryptovariable.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct SkipjackKey80(pub [u8; 10]);

impl SkipjackKey80 {
    pub const fn as_bytes(&self) -> &[u8; 10] {
        &self.0
    }
}

impl fmt::Display for SkipjackKey80 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_hex(f, &self.0)
    }
}

impl fmt::Debug for SkipjackKey80 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SkipjackKey80({self})")
    }
}

impl FromStr for SkipjackKey80 {
    type Err = HexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        decode_hex::<10>(s).map(SkipjackKey80)
    }
}

/// Raiden's key as four 32-bit words. Encryption evolves a private copy.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default)]
pub struct RaidenKey(pub [u32; 4]);
