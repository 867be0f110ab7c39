//! Arithmetic in GF(2^8) with the reduction polynomial x^8 + x^4 + x^3 + x^2 + 1 (0x11d).

const POLY: u16 = 0x11d;

const fn build_tables() -> ([u8; 512], [u8; 256]) {
    let mut exp = [0u8; 512];
    let mut log = [0u8; 256];
    let mut x: u16 = 1;
    let mut i = 0;
    while i < 255 {
        exp[i] = x as u8;
        log[x as usize] = i as u8;
        x <<= 1;
        if x & 0x100 != 0 {
            x ^= POLY;
        }
        i += 1;
    }
    // Doubled so that exp[log a + log b] never needs a modulo.
    while i < 512 {
        exp[i] = exp[i - 255];
        i += 1;
    }
    (exp, log)
}

const TABLES: ([u8; 512], [u8; 256]) = build_tables();
const EXP: [u8; 512] = TABLES.0;
const LOG: [u8; 256] = TABLES.1;

#[inline]
pub fn mul(a: u8, b: u8) -> u8 {
    if a == 0 || b == 0 {
        return 0;
    }
    EXP[LOG[a as usize] as usize + LOG[b as usize] as usize]
}

/// Multiplicative inverse. Panics on zero.
#[inline]
pub fn inv(a: u8) -> u8 {
    assert!(a != 0, "zero has no inverse in GF(256)");
    EXP[255 - LOG[a as usize] as usize]
}

/// `acc[i] ^= coef * src[i]` for every byte.
pub fn mul_acc(acc: &mut [u8], src: &[u8], coef: u8) {
    debug_assert_eq!(acc.len(), src.len());
    if coef == 0 {
        return;
    }
    if coef == 1 {
        for (a, s) in acc.iter_mut().zip(src) {
            *a ^= s;
        }
        return;
    }
    let lc = LOG[coef as usize] as usize;
    for (a, &s) in acc.iter_mut().zip(src) {
        if s != 0 {
            *a ^= EXP[lc + LOG[s as usize] as usize];
        }
    }
}

/// Inverts a square matrix in place by Gauss-Jordan elimination.
/// Returns `None` when the matrix is singular.
pub fn invert(mut m: Vec<Vec<u8>>) -> Option<Vec<Vec<u8>>> {
    let size = m.len();
    let mut out: Vec<Vec<u8>> = (0..size)
        .map(|i| (0..size).map(|j| u8::from(i == j)).collect())
        .collect();
    for col in 0..size {
        let pivot = (col..size).find(|&r| m[r][col] != 0)?;
        m.swap(col, pivot);
        out.swap(col, pivot);
        let scale = inv(m[col][col]);
        for j in 0..size {
            m[col][j] = mul(m[col][j], scale);
            out[col][j] = mul(out[col][j], scale);
        }
        for r in 0..size {
            if r == col || m[r][col] == 0 {
                continue;
            }
            let factor = m[r][col];
            for j in 0..size {
                let (mv, ov) = (m[col][j], out[col][j]);
                m[r][j] ^= mul(factor, mv);
                out[r][j] ^= mul(factor, ov);
            }
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Carry-less multiply followed by reduction; independent of the log tables.
    fn slow_mul(a: u8, b: u8) -> u8 {
        let mut acc: u16 = 0;
        for bit in 0..8 {
            if b & (1 << bit) != 0 {
                acc ^= (a as u16) << bit;
            }
        }
        for bit in (8..16).rev() {
            if acc & (1 << bit) != 0 {
                acc ^= POLY << (bit - 8);
            }
        }
        acc as u8
    }

    #[test]
    fn table_multiplication_matches_carryless_product() {
        for a in 0..=255u8 {
            for b in 0..=255u8 {
                assert_eq!(mul(a, b), slow_mul(a, b), "{a} * {b}");
            }
        }
    }

    #[test]
    fn every_nonzero_element_has_an_inverse() {
        for a in 1..=255u8 {
            assert_eq!(mul(a, inv(a)), 1);
        }
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let m = vec![vec![1, 2], vec![2, mul(2, 2)]];
        assert!(invert(m).is_none());
    }
}
