//! Generation-based random linear network coding over GF(2^8).
//!
//! A [`SourceFrame`] of `K` equal-length packets is turned into
//! [`CodedPacket`]s, each carrying its `K` coefficients in-band. A
//! [`Decoder`] keeps received rows in reduced row-echelon form so that
//! source packets become available as soon as their unit row appears, not
//! only once the full rank `K` is reached.

use std::collections::BTreeSet;

use rand::Rng;

use crate::error::{Error, Result};
use crate::gf256::{self, Gf256};

/// Generation size used when nothing else is configured.
pub const DEFAULT_GENERATION_SIZE: usize = 10;
/// Payload length in bytes used when nothing else is configured.
pub const DEFAULT_PAYLOAD_LEN: usize = 128;

/// `K` source packets of identical length `L`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceFrame {
    packets: Vec<Vec<u8>>,
}

impl SourceFrame {
    pub fn new(packets: Vec<Vec<u8>>) -> Result<Self> {
        let Some(first) = packets.first() else {
            return Err(Error::invalid("K", "a frame needs at least one packet"));
        };
        let len = first.len();
        if len == 0 {
            return Err(Error::invalid("L", "payload length must be at least 1 byte"));
        }
        if let Some(bad) = packets.iter().find(|p| p.len() != len) {
            return Err(Error::DimensionMismatch {
                what: "source packet length",
                expected: len,
                actual: bad.len(),
            });
        }
        Ok(SourceFrame { packets })
    }

    pub fn generation_size(&self) -> usize {
        self.packets.len()
    }

    pub fn payload_len(&self) -> usize {
        self.packets[0].len()
    }

    pub fn packets(&self) -> &[Vec<u8>] {
        &self.packets
    }

    pub fn packet(&self, i: usize) -> &[u8] {
        &self.packets[i]
    }
}

/// A coded packet: coefficient header plus coded payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedPacket {
    pub coeffs: Vec<Gf256>,
    pub payload: Vec<u8>,
}

impl CodedPacket {
    /// Wire layout: `K` coefficient bytes in index order, then `L` payload
    /// bytes. No length prefix or other framing.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.coeffs.len() + self.payload.len());
        out.extend(self.coeffs.iter().map(|c| c.0));
        out.extend_from_slice(&self.payload);
        out
    }

    /// Parse the wire layout for a known generation size `k`.
    pub fn from_bytes(k: usize, bytes: &[u8]) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("K", "generation size must be at least 1"));
        }
        if bytes.len() <= k {
            return Err(Error::DimensionMismatch {
                what: "coded packet length (K header bytes + at least 1 payload byte)",
                expected: k + 1,
                actual: bytes.len(),
            });
        }
        let (head, payload) = bytes.split_at(k);
        Ok(CodedPacket {
            coeffs: head.iter().copied().map(Gf256).collect(),
            payload: payload.to_vec(),
        })
    }
}

/// `k` coefficients drawn independently and uniformly over all 256 values.
pub fn draw_coefficients<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<Gf256> {
    (0..k).map(|_| Gf256(rng.gen())).collect()
}

/// A frame of `k` packets of `l` uniform random bytes.
pub fn make_random_frame<R: Rng + ?Sized>(rng: &mut R, k: usize, l: usize) -> Result<SourceFrame> {
    if k == 0 || l == 0 {
        return Err(Error::invalid("K/L", "generation size and payload length must be >= 1"));
    }
    let packets = (0..k)
        .map(|_| {
            let mut p = vec![0u8; l];
            rng.fill(p.as_mut_slice());
            p
        })
        .collect();
    SourceFrame::new(packets)
}

/// Linear combination of the frame's packets with the given coefficients.
pub fn encode(frame: &SourceFrame, coeffs: &[Gf256]) -> Result<CodedPacket> {
    if coeffs.len() != frame.generation_size() {
        return Err(Error::DimensionMismatch {
            what: "coefficient vector",
            expected: frame.generation_size(),
            actual: coeffs.len(),
        });
    }
    let mut payload = vec![0u8; frame.payload_len()];
    for (c, src) in coeffs.iter().zip(frame.packets()) {
        gf256::mul_add_slice(&mut payload, src, *c);
    }
    Ok(CodedPacket {
        coeffs: coeffs.to_vec(),
        payload,
    })
}

#[derive(Debug, Clone)]
struct Row {
    coeffs: Vec<u8>,
    payload: Vec<u8>,
}

/// Incremental Gaussian-elimination decoder for one generation.
///
/// Rows are stored by pivot column. Every stored row has a 1 at its pivot
/// and 0 at every other occupied pivot column, i.e. the stored set is always
/// in reduced row-echelon form.
#[derive(Debug, Clone)]
pub struct Decoder {
    k: usize,
    l: usize,
    rows: Vec<Option<Row>>,
    rank: usize,
}

impl Decoder {
    pub fn new(k: usize, l: usize) -> Result<Self> {
        if k == 0 || l == 0 {
            return Err(Error::invalid("K/L", "generation size and payload length must be >= 1"));
        }
        Ok(Decoder {
            k,
            l,
            rows: vec![None; k],
            rank: 0,
        })
    }

    pub fn generation_size(&self) -> usize {
        self.k
    }

    pub fn payload_len(&self) -> usize {
        self.l
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_complete(&self) -> bool {
        self.rank == self.k
    }

    /// Feed one coded packet. Returns whether it was innovative.
    pub fn receive(&mut self, pkt: &CodedPacket) -> Result<bool> {
        if pkt.coeffs.len() != self.k {
            return Err(Error::DimensionMismatch {
                what: "coefficient vector",
                expected: self.k,
                actual: pkt.coeffs.len(),
            });
        }
        if pkt.payload.len() != self.l {
            return Err(Error::DimensionMismatch {
                what: "payload",
                expected: self.l,
                actual: pkt.payload.len(),
            });
        }
        if self.is_complete() {
            return Ok(false);
        }

        let mut row = Row {
            coeffs: pkt.coeffs.iter().map(|c| c.0).collect(),
            payload: pkt.payload.clone(),
        };

        // Forward: clear every occupied pivot column.
        for (col, stored) in self.rows.iter().enumerate() {
            let Some(stored) = stored else { continue };
            let c = Gf256(row.coeffs[col]);
            if !c.is_zero() {
                gf256::mul_add_slice(&mut row.coeffs, &stored.coeffs, c);
                gf256::mul_add_slice(&mut row.payload, &stored.payload, c);
            }
        }

        let Some(pivot) = row.coeffs.iter().position(|&c| c != 0) else {
            return Ok(false);
        };

        let scale = Gf256(row.coeffs[pivot]).inv()?;
        gf256::scale_slice(&mut row.coeffs, scale);
        gf256::scale_slice(&mut row.payload, scale);

        // Backward: clear the new pivot column from the stored rows.
        for stored in self.rows.iter_mut().flatten() {
            let c = Gf256(stored.coeffs[pivot]);
            if !c.is_zero() {
                gf256::mul_add_slice(&mut stored.coeffs, &row.coeffs, c);
                gf256::mul_add_slice(&mut stored.payload, &row.payload, c);
            }
        }

        self.rows[pivot] = Some(row);
        self.rank += 1;
        Ok(true)
    }

    /// Indices `i` whose reduced row is the unit vector `e_i`.
    pub fn recovered_indices(&self) -> BTreeSet<usize> {
        self.rows
            .iter()
            .enumerate()
            .filter_map(|(i, r)| {
                let r = r.as_ref()?;
                let unit = r
                    .coeffs
                    .iter()
                    .enumerate()
                    .all(|(j, &c)| if j == i { c == 1 } else { c == 0 });
                unit.then_some(i)
            })
            .collect()
    }

    /// Payloads of all recovered source packets, in index order.
    pub fn recover(&self) -> Vec<(usize, Vec<u8>)> {
        self.recovered_indices()
            .into_iter()
            .filter_map(|i| self.rows[i].as_ref().map(|r| (i, r.payload.clone())))
            .collect()
    }
}

/// Probability that `n` i.i.d. uniform vectors over GF(q)^k span the space:
/// `prod_{i=0}^{k-1} (1 - q^(i-n))`, and 0 when `n < k`.
pub fn full_rank_probability(k: usize, n: usize, q: u64) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("K", "must be at least 1"));
    }
    if q < 2 {
        return Err(Error::invalid("q", "field size must be at least 2"));
    }
    if n < k {
        return Ok(0.0);
    }
    let q = q as f64;
    Ok((0..k)
        .map(|i| 1.0 - q.powi(i as i32 - n as i32))
        .product())
}
