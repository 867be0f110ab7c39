//! Idealized storage accounting.
//!
//! A chunk is charged `D / k` bits regardless of the real encoded length, so
//! storage bounds are compared exactly. With byte-aligned values `D / k` is
//! often fractional (D = 1024, k = 3), hence the rational type.

use num_rational::Ratio;

/// An exact, non-negative number of idealized bits.
pub type Bits = Ratio<u64>;

/// Idealized size of one chunk of a `d_bits` value under a k-of-n code.
pub fn chunk_bits(d_bits: u64, k: usize) -> Bits {
    Ratio::new(d_bits, k as u64)
}

/// Idealized size of `chunks` chunks.
pub fn chunks_bits(chunks: u64, d_bits: u64, k: usize) -> Bits {
    chunk_bits(d_bits, k) * chunks
}

/// Renders `N` for whole numbers and `N/d` otherwise.
pub fn format_bits(b: Bits) -> String {
    if b.is_integer() {
        b.to_integer().to_string()
    } else {
        format!("{}/{}", b.numer(), b.denom())
    }
}

/// Inverse of [`format_bits`].
pub fn parse_bits(s: &str) -> Option<Bits> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let d: u64 = d.trim().parse().ok()?;
            if d == 0 {
                return None;
            }
            Some(Ratio::new(n.trim().parse().ok()?, d))
        }
        None => s.parse().ok().map(Ratio::from_integer),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whole_and_fractional_shares() {
        assert_eq!(format_bits(chunk_bits(1024, 2)), "512");
        assert_eq!(format_bits(chunk_bits(1024, 1)), "1024");
        assert_eq!(format_bits(chunk_bits(1024, 3)), "1024/3");
        // Three thirds add up exactly.
        assert_eq!(chunks_bits(3, 1024, 3), Ratio::from_integer(1024));
    }

    #[test]
    fn parse_round_trip() {
        for b in [
            chunk_bits(1000, 3),
            chunk_bits(1024, 4),
            Ratio::from_integer(0),
        ] {
            assert_eq!(parse_bits(&format_bits(b)), Some(b));
        }
        assert_eq!(parse_bits("3/0"), None);
        assert_eq!(parse_bits("x"), None);
    }
}
