//! k-of-n erasure coding of register values.
//!
//! The code is a systematic Reed-Solomon code over GF(2^8) whose parity rows
//! come from a Cauchy matrix. Every parity row is scaled so its first
//! coefficient is one, which keeps the code MDS and turns `k = 1` into plain
//! replication: all `n` pieces are byte-identical.
//!
//! Before splitting, the value is prefixed with a [`HEADER_BYTES`]-byte
//! big-endian bit length and zero padded to a multiple of `k` bytes, so
//! values of any length satisfy the any-k-of-n contract and every piece
//! carries at least one byte.

mod gf256;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Length of the bit-length prefix prepended to every encoded value.
pub const HEADER_BYTES: usize = 4;

/// Largest `n` the GF(2^8) Cauchy construction supports.
pub const MAX_PIECES: usize = 255;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("invalid code parameters n={n}, k={k}: need 1 <= k <= n <= {MAX_PIECES}")]
    InvalidParameters { n: usize, k: usize },
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("insufficient pieces: have {have} distinct, need {need}")]
    InsufficientPieces { have: usize, need: usize },
    #[error("corrupt input: {0}")]
    CorruptInput(String),
}

/// A register value: `bit_length` bits stored big-endian in `ceil(bit_length / 8)` bytes.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "ValueRepr", into = "ValueRepr")]
pub struct Value {
    bits: u64,
    bytes: Arc<[u8]>,
}

impl Value {
    /// A value whose bit length is exactly eight times the byte length.
    pub fn new(bytes: impl Into<Vec<u8>>) -> Result<Self, CodecError> {
        let bytes = bytes.into();
        let bits = bytes.len() as u64 * 8;
        Self::with_bit_length(bytes, bits)
    }

    pub fn with_bit_length(bytes: impl Into<Vec<u8>>, bits: u64) -> Result<Self, CodecError> {
        let bytes = bytes.into();
        if bits == 0 {
            return Err(CodecError::InvalidValue(
                "bit length must be positive".into(),
            ));
        }
        if bits > u32::MAX as u64 {
            return Err(CodecError::InvalidValue(format!(
                "bit length {bits} exceeds 32 bits"
            )));
        }
        if bytes.len() as u64 != bits.div_ceil(8) {
            return Err(CodecError::InvalidValue(format!(
                "{} bytes cannot hold exactly {bits} bits",
                bytes.len()
            )));
        }
        Ok(Self {
            bits,
            bytes: bytes.into(),
        })
    }

    /// The all-zero value of `bits` bits.
    pub fn zeroed(bits: u64) -> Result<Self, CodecError> {
        Self::with_bit_length(vec![0u8; bits.div_ceil(8) as usize], bits)
    }

    pub fn bit_length(&self) -> u64 {
        self.bits
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.bytes)
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hex = self.to_hex();
        if hex.len() > 24 {
            write!(f, "Value({}b, {}..)", self.bits, &hex[..24])
        } else {
            write!(f, "Value({}b, {hex})", self.bits)
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ValueRepr {
    bits: u64,
    hex: String,
}

impl From<Value> for ValueRepr {
    fn from(v: Value) -> Self {
        Self {
            bits: v.bits,
            hex: v.to_hex(),
        }
    }
}

impl TryFrom<ValueRepr> for Value {
    type Error = CodecError;

    fn try_from(r: ValueRepr) -> Result<Self, Self::Error> {
        let bytes = hex::decode(&r.hex).map_err(|e| CodecError::InvalidValue(e.to_string()))?;
        Value::with_bit_length(bytes, r.bits)
    }
}

/// One coded fragment `<payload, index>`; indices run from 1 to n.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Piece {
    index: usize,
    payload: Arc<[u8]>,
}

impl Piece {
    pub fn new(index: usize, payload: impl Into<Vec<u8>>) -> Self {
        Self {
            index,
            payload: payload.into().into(),
        }
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    pub fn payload_bits(&self) -> u64 {
        self.payload.len() as u64 * 8
    }
}

impl fmt::Debug for Piece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Piece#{}({}B)", self.index, self.payload.len())
    }
}

/// Size of one piece for a `d_bits`-bit value under a k-of-n code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PieceSize {
    /// `ceil(D / k)`: the metadata-free share used for storage accounting.
    pub ideal_bits: u64,
    /// Real payload size produced by [`encode`], header and padding included.
    pub encoded_bits: u64,
}

impl PieceSize {
    /// Header and padding bits carried on top of the idealized share.
    pub fn overhead_bits(&self) -> u64 {
        self.encoded_bits - self.ideal_bits
    }
}

pub fn piece_size_bits(d_bits: u64, k: usize) -> PieceSize {
    assert!(
        d_bits >= 1 && k >= 1,
        "piece_size_bits needs D >= 1 and k >= 1"
    );
    let k = k as u64;
    let data_bytes = HEADER_BYTES as u64 + d_bits.div_ceil(8);
    PieceSize {
        ideal_bits: d_bits.div_ceil(k),
        encoded_bits: data_bytes.div_ceil(k) * 8,
    }
}

fn check_params(n: usize, k: usize) -> Result<(), CodecError> {
    if k == 0 || k > n || n > MAX_PIECES {
        return Err(CodecError::InvalidParameters { n, k });
    }
    Ok(())
}

/// Row `row` (0-based) of the n x k generator matrix.
fn generator_row(row: usize, k: usize) -> Vec<u8> {
    if row < k {
        return (0..k).map(|j| u8::from(j == row)).collect();
    }
    // Cauchy entries 1 / (x_row + y_j) with x_row = row and y_j = j; the sets are
    // disjoint because row >= k > j. Scaling by the first entry keeps every
    // k x k minor nonsingular.
    let cauchy: Vec<u8> = (0..k)
        .map(|j| gf256::inv((row as u8) ^ (j as u8)))
        .collect();
    let norm = gf256::inv(cauchy[0]);
    cauchy.into_iter().map(|c| gf256::mul(c, norm)).collect()
}

/// Splits `value` into `n` pieces, any `k` of which reconstruct it.
pub fn encode(value: &Value, n: usize, k: usize) -> Result<Vec<Piece>, CodecError> {
    check_params(n, k)?;
    let mut data = Vec::with_capacity(HEADER_BYTES + value.bytes.len() + k);
    data.extend_from_slice(&(value.bits as u32).to_be_bytes());
    data.extend_from_slice(&value.bytes);
    let shard_len = data.len().div_ceil(k);
    data.resize(shard_len * k, 0);
    let shards: Vec<&[u8]> = data.chunks(shard_len).collect();

    let pieces = (0..n)
        .map(|row| {
            if row < k {
                return Piece::new(row + 1, shards[row].to_vec());
            }
            let mut out = vec![0u8; shard_len];
            for (coef, shard) in generator_row(row, k).into_iter().zip(&shards) {
                gf256::mul_acc(&mut out, shard, coef);
            }
            Piece::new(row + 1, out)
        })
        .collect();
    Ok(pieces)
}

/// Reconstructs a value from at least `k` distinct pieces of one encoding.
pub fn decode<'a, I>(pieces: I, n: usize, k: usize) -> Result<Value, CodecError>
where
    I: IntoIterator<Item = &'a Piece>,
{
    check_params(n, k)?;
    let mut by_index: BTreeMap<usize, &Piece> = BTreeMap::new();
    let mut size = None;
    for piece in pieces {
        if piece.index == 0 || piece.index > n {
            return Err(CodecError::CorruptInput(format!(
                "piece index {} outside 1..={n}",
                piece.index
            )));
        }
        match size {
            None => size = Some(piece.payload.len()),
            Some(s) if s != piece.payload.len() => {
                return Err(CodecError::CorruptInput(format!(
                    "piece sizes differ: {s} vs {} bytes",
                    piece.payload.len()
                )))
            }
            Some(_) => {}
        }
        if let Some(prev) = by_index.insert(piece.index, piece) {
            if prev.payload != piece.payload {
                return Err(CodecError::CorruptInput(format!(
                    "two different payloads for index {}",
                    piece.index
                )));
            }
        }
    }
    if by_index.len() < k {
        return Err(CodecError::InsufficientPieces {
            have: by_index.len(),
            need: k,
        });
    }
    let shard_len = size.unwrap_or(0);
    if shard_len == 0 {
        return Err(CodecError::CorruptInput("empty piece payloads".into()));
    }

    let chosen: Vec<&Piece> = by_index.values().take(k).copied().collect();
    let data = if chosen.iter().enumerate().all(|(j, p)| p.index == j + 1) {
        chosen
            .iter()
            .flat_map(|p| p.payload.iter().copied())
            .collect::<Vec<u8>>()
    } else {
        let matrix = chosen
            .iter()
            .map(|p| generator_row(p.index - 1, k))
            .collect();
        let inverse = gf256::invert(matrix)
            .ok_or_else(|| CodecError::CorruptInput("singular decoding matrix".into()))?;
        let mut data = vec![0u8; shard_len * k];
        for (j, row) in inverse.iter().enumerate() {
            let out = &mut data[j * shard_len..(j + 1) * shard_len];
            for (coef, piece) in row.iter().zip(&chosen) {
                gf256::mul_acc(out, &piece.payload, *coef);
            }
        }
        data
    };

    if data.len() < HEADER_BYTES {
        return Err(CodecError::CorruptInput("missing length header".into()));
    }
    let mut header = [0u8; HEADER_BYTES];
    header.copy_from_slice(&data[..HEADER_BYTES]);
    let bits = u32::from_be_bytes(header) as u64;
    let byte_len = bits.div_ceil(8) as usize;
    if bits == 0 || HEADER_BYTES + byte_len > data.len() {
        return Err(CodecError::CorruptInput(format!(
            "header claims {bits} bits"
        )));
    }
    Value::with_bit_length(&data[HEADER_BYTES..HEADER_BYTES + byte_len], bits)
}
