//! Straight transcriptions of the published cipher descriptions, kept apart
//! from the library so the tests have an independent route to every frozen
//! vector. Nothing in here is shared with `cipherpipe`.

#![allow(dead_code)]

pub mod idea {
    const MOD: u64 = 0x1_0001;

    /// Multiplication modulo 2^16 + 1 with 0 standing for 2^16.
    pub fn mul(a: u16, b: u16) -> u16 {
        let a = if a == 0 { 0x1_0000 } else { a as u64 };
        let b = if b == 0 { 0x1_0000 } else { b as u64 };
        let r = (a * b) % MOD;
        if r == 0x1_0000 {
            0
        } else {
            r as u16
        }
    }

    /// Brute force search over the group; slow but obviously right.
    pub fn mul_inv_bruteforce(a: u16) -> u16 {
        if a <= 1 {
            return a;
        }
        for x in 1..=0xFFFFu32 {
            if mul(a, x as u16) == 1 {
                return x as u16;
            }
        }
        unreachable!()
    }

    /// 52 subkeys: take eight 16-bit words of the key, rotate the whole
    /// 128-bit key left by 25 bits, repeat.
    pub fn expand(key: u128) -> Vec<u16> {
        let mut k = key;
        let mut out = Vec::with_capacity(56);
        while out.len() < 52 {
            for i in 0..8 {
                out.push((k >> (112 - 16 * i)) as u16);
            }
            k = k.rotate_left(25);
        }
        out.truncate(52);
        out
    }

    /// `rounds` full rounds; the output transformation is applied only
    /// when `half` is set (the standard 8.5 round form).
    pub fn encrypt(block: u64, key: u128, rounds: usize, half: bool) -> u64 {
        let z = expand(key);
        let mut x1 = (block >> 48) as u16;
        let mut x2 = (block >> 32) as u16;
        let mut x3 = (block >> 16) as u16;
        let mut x4 = block as u16;
        for r in 0..rounds {
            let k = &z[6 * r..6 * r + 6];
            let a = mul(x1, k[0]);
            let b = x2.wrapping_add(k[1]);
            let c = x3.wrapping_add(k[2]);
            let d = mul(x4, k[3]);
            let e = a ^ c;
            let f = b ^ d;
            let g = mul(e, k[4]);
            let h = mul(f.wrapping_add(g), k[5]);
            let i = g.wrapping_add(h);
            x1 = a ^ h;
            x2 = c ^ h;
            x3 = b ^ i;
            x4 = d ^ i;
        }
        if half {
            let k = &z[48..52];
            // undo the last middle swap, then the output transformation
            let (y1, y2, y3, y4) = (x1, x3, x2, x4);
            x1 = mul(y1, k[0]);
            x2 = y2.wrapping_add(k[1]);
            x3 = y3.wrapping_add(k[2]);
            x4 = mul(y4, k[3]);
        }
        ((x1 as u64) << 48) | ((x2 as u64) << 32) | ((x3 as u64) << 16) | x4 as u64
    }
}

pub mod skipjack {
    pub const FTABLE: [u8; 256] = [
        0xa3, 0xd7, 0x09, 0x83, 0xf8, 0x48, 0xf6, 0xf4, 0xb3, 0x21, 0x15, 0x78, 0x99, 0xb1, 0xaf, 0xf9,
        0xe7, 0x2d, 0x4d, 0x8a, 0xce, 0x4c, 0xca, 0x2e, 0x52, 0x95, 0xd9, 0x1e, 0x4e, 0x38, 0x44, 0x28,
        0x0a, 0xdf, 0x02, 0xa0, 0x17, 0xf1, 0x60, 0x68, 0x12, 0xb7, 0x7a, 0xc3, 0xe9, 0xfa, 0x3d, 0x53,
        0x96, 0x84, 0x6b, 0xba, 0xf2, 0x63, 0x9a, 0x19, 0x7c, 0xae, 0xe5, 0xf5, 0xf7, 0x16, 0x6a, 0xa2,
        0x39, 0xb6, 0x7b, 0x0f, 0xc1, 0x93, 0x81, 0x1b, 0xee, 0xb4, 0x1a, 0xea, 0xd0, 0x91, 0x2f, 0xb8,
        0x55, 0xb9, 0xda, 0x85, 0x3f, 0x41, 0xbf, 0xe0, 0x5a, 0x58, 0x80, 0x5f, 0x66, 0x0b, 0xd8, 0x90,
        0x35, 0xd5, 0xc0, 0xa7, 0x33, 0x06, 0x65, 0x69, 0x45, 0x00, 0x94, 0x56, 0x6d, 0x98, 0x9b, 0x76,
        0x97, 0xfc, 0xb2, 0xc2, 0xb0, 0xfe, 0xdb, 0x20, 0xe1, 0xeb, 0xd6, 0xe4, 0xdd, 0x47, 0x4a, 0x1d,
        0x42, 0xed, 0x9e, 0x6e, 0x49, 0x3c, 0xcd, 0x43, 0x27, 0xd2, 0x07, 0xd4, 0xde, 0xc7, 0x67, 0x18,
        0x89, 0xcb, 0x30, 0x1f, 0x8d, 0xc6, 0x8f, 0xaa, 0xc8, 0x74, 0xdc, 0xc9, 0x5d, 0x5c, 0x31, 0xa4,
        0x70, 0x88, 0x61, 0x2c, 0x9f, 0x0d, 0x2b, 0x87, 0x50, 0x82, 0x54, 0x64, 0x26, 0x7d, 0x03, 0x40,
        0x34, 0x4b, 0x1c, 0x73, 0xd1, 0xc4, 0xfd, 0x3b, 0xcc, 0xfb, 0x7f, 0xab, 0xe6, 0x3e, 0x5b, 0xa5,
        0xad, 0x04, 0x23, 0x9c, 0x14, 0x51, 0x22, 0xf0, 0x29, 0x79, 0x71, 0x7e, 0xff, 0x8c, 0x0e, 0xe2,
        0x0c, 0xef, 0xbc, 0x72, 0x75, 0x6f, 0x37, 0xa1, 0xec, 0xd3, 0x8e, 0x62, 0x8b, 0x86, 0x10, 0xe8,
        0x08, 0x77, 0x11, 0xbe, 0x92, 0x4f, 0x24, 0xc5, 0x32, 0x36, 0x9d, 0xcf, 0xf3, 0xa6, 0xbb, 0xac,
        0x5e, 0x6c, 0xa9, 0x13, 0x57, 0x25, 0xb5, 0xe3, 0xbd, 0xa8, 0x3a, 0x01, 0x05, 0x59, 0x2a, 0x46,
    ];

    // G^k: g1..g6 with cv bytes 4k, 4k+1, 4k+2, 4k+3 (mod 10).
    fn g(k: usize, w: u16, cv: &[u8; 10]) -> u16 {
        let mut g = [0u8; 6];
        g[0] = (w >> 8) as u8;
        g[1] = w as u8;
        for i in 2..6 {
            g[i] = FTABLE[(g[i - 1] ^ cv[(4 * k + i - 2) % 10]) as usize] ^ g[i - 2];
        }
        ((g[4] as u16) << 8) | g[5] as u16
    }

    pub fn encrypt(block: u64, cv: &[u8; 10]) -> u64 {
        let mut w = [
            (block >> 48) as u16,
            (block >> 32) as u16,
            (block >> 16) as u16,
            block as u16,
        ];
        let mut counter: u16 = 1;
        for k in 0..32usize {
            let rule_a = (k / 8) % 2 == 0;
            let [w1, w2, w3, w4] = w;
            let gw1 = g(k, w1, cv);
            w = if rule_a {
                [gw1 ^ w4 ^ counter, gw1, w2, w3]
            } else {
                [w4, gw1, w1 ^ w2 ^ counter, w3]
            };
            counter += 1;
        }
        ((w[0] as u64) << 48) | ((w[1] as u64) << 32) | ((w[2] as u64) << 16) | w[3] as u64
    }
}

pub mod raiden {
    /// Direct transcription of the reference C routine, 32-bit words.
    pub fn encrypt(data: [u32; 2], key: [u32; 4]) -> [u32; 2] {
        let [mut b0, mut b1] = data;
        let mut k = key;
        for i in 0..16usize {
            let sk = (k[0].wrapping_add(k[1]))
                .wrapping_add((k[2].wrapping_add(k[3])) ^ k[0].wrapping_shl(k[2]));
            k[i % 4] = sk;
            b0 = b0.wrapping_add(
                (sk.wrapping_add(b1) << 9) ^ (sk.wrapping_sub(b1) ^ (sk.wrapping_add(b1) >> 14)),
            );
            b1 = b1.wrapping_add(
                (sk.wrapping_add(b0) << 9) ^ (sk.wrapping_sub(b0) ^ (sk.wrapping_add(b0) >> 14)),
            );
        }
        [b0, b1]
    }

    pub fn encrypt_block(block: u64, key: u128) -> u64 {
        let k = [
            (key >> 96) as u32,
            (key >> 64) as u32,
            (key >> 32) as u32,
            key as u32,
        ];
        let [a, b] = encrypt([(block >> 32) as u32, block as u32], k);
        ((a as u64) << 32) | b as u64
    }
}
