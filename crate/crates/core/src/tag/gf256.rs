//! GF(256) arithmetic modulo x^8 + x^4 + x^3 + x^2 + 1 and the systematic
//! Reed–Solomon code used by QR symbols.

const PRIMITIVE: u16 = 0x11D;

struct Tables {
    exp: [u8; 512],
    log: [u8; 256],
}

const fn build_tables() -> Tables {
    let mut exp = [0u8; 512];
    let mut log = [0u8; 256];
    let mut x: u16 = 1;
    let mut i = 0;
    while i < 255 {
        exp[i] = x as u8;
        exp[i + 255] = x as u8;
        log[x as usize] = i as u8;
        x <<= 1;
        if x & 0x100 != 0 {
            x ^= PRIMITIVE;
        }
        i += 1;
    }
    Tables { exp, log }
}

static TABLES: Tables = build_tables();

pub fn mul(a: u8, b: u8) -> u8 {
    if a == 0 || b == 0 {
        return 0;
    }
    TABLES.exp[TABLES.log[a as usize] as usize + TABLES.log[b as usize] as usize]
}

/// α^i for the generator α = 2.
pub fn pow_alpha(i: usize) -> u8 {
    TABLES.exp[i % 255]
}

/// Coefficients of ∏_{i<degree} (x − α^i), highest power first with the
/// leading 1 omitted.
pub fn generator(degree: usize) -> Vec<u8> {
    assert!((1..=254).contains(&degree));
    let mut poly = vec![0u8; degree];
    poly[degree - 1] = 1;
    let mut root = 1u8;
    for _ in 0..degree {
        for j in 0..degree {
            poly[j] = mul(poly[j], root);
            if j + 1 < degree {
                poly[j] ^= poly[j + 1];
            }
        }
        root = mul(root, 2);
    }
    poly
}

/// Check symbols for `data` given a generator from [`generator`].
pub fn remainder(data: &[u8], generator: &[u8]) -> Vec<u8> {
    let mut rem = vec![0u8; generator.len()];
    for &b in data {
        let factor = b ^ rem.remove(0);
        rem.push(0);
        for (r, &g) in rem.iter_mut().zip(generator) {
            *r ^= mul(g, factor);
        }
    }
    rem
}

/// Codeword polynomial (highest power first) evaluated at α^0..α^(count−1).
pub fn syndromes(codeword: &[u8], count: usize) -> Vec<u8> {
    (0..count)
        .map(|i| {
            let x = pow_alpha(i);
            codeword.iter().fold(0u8, |acc, &c| mul(acc, x) ^ c)
        })
        .collect()
}
