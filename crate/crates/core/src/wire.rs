//! Byte-exact state serialization.
//!
//! Each structure has a five-byte ASCII tag followed by little-endian fixed
//! fields and a canonical payload, so equal states serialize to equal bytes:
//!
//! * hash state: `AMQH1`, domain u64, entry count u64, then (key, output)
//!   u64 pairs sorted by key;
//! * Bloom: `AMQB1`, bit count u32, then ceil(m/8) bytes, bit i at byte
//!   i/8 bit i%8;
//! * counting: `AMQC1`, counter count u32, bound u32, then counters packed
//!   at the minimal width ceil(log2(bound+1)) bits, LSB-first (the
//!   per-insert hash count is runtime context and is not stored);
//! * quotient: `AMQQ1`, quotient bits u8, remainder bits u8, then per
//!   bucket a u32 length and the sorted remainders as u64s;
//! * blocked: `AMQK1`, block count u32, then each block's own serial form.

use crate::blocked::BlockedState;
use crate::bloom::BloomState;
use crate::counting::CountingState;
use crate::hashing::HashState;
use crate::quotient::QuotientState;
use crate::{amq::Amq, AmqError};

pub const HASH_STATE_TAG: &[u8; 5] = b"AMQH1";
pub const BLOOM_TAG: &[u8; 5] = b"AMQB1";
pub const COUNTING_TAG: &[u8; 5] = b"AMQC1";
pub const QUOTIENT_TAG: &[u8; 5] = b"AMQQ1";
pub const BLOCKED_TAG: &[u8; 5] = b"AMQK1";

/// Streaming serialization; `read_bytes` advances `pos` past what it
/// consumed so containers can concatenate child payloads.
pub trait Wire: Sized {
    fn write_bytes(&self, out: &mut Vec<u8>);
    fn read_bytes(input: &[u8], pos: &mut usize) -> Result<Self, AmqError>;

    fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_bytes(&mut out);
        out
    }

    fn from_bytes(bytes: &[u8]) -> Result<Self, AmqError> {
        let mut pos = 0;
        let value = Self::read_bytes(bytes, &mut pos)?;
        if pos != bytes.len() {
            return Err(AmqError::MalformedData(format!(
                "{} trailing byte(s)",
                bytes.len() - pos
            )));
        }
        Ok(value)
    }
}

fn take<'a>(input: &'a [u8], pos: &mut usize, len: usize) -> Result<&'a [u8], AmqError> {
    let end = pos
        .checked_add(len)
        .filter(|&end| end <= input.len())
        .ok_or_else(|| AmqError::MalformedData("unexpected end of input".into()))?;
    let slice = &input[*pos..end];
    *pos = end;
    Ok(slice)
}

fn expect_tag(input: &[u8], pos: &mut usize, tag: &[u8; 5]) -> Result<(), AmqError> {
    let found = take(input, pos, 5)?;
    if found != tag {
        return Err(AmqError::MalformedData(format!(
            "expected tag {:?}, found {:?}",
            String::from_utf8_lossy(tag),
            String::from_utf8_lossy(found)
        )));
    }
    Ok(())
}

fn read_u8(input: &[u8], pos: &mut usize) -> Result<u8, AmqError> {
    Ok(take(input, pos, 1)?[0])
}

fn read_u32(input: &[u8], pos: &mut usize) -> Result<u32, AmqError> {
    Ok(u32::from_le_bytes(take(input, pos, 4)?.try_into().unwrap()))
}

fn read_u64(input: &[u8], pos: &mut usize) -> Result<u64, AmqError> {
    Ok(u64::from_le_bytes(take(input, pos, 8)?.try_into().unwrap()))
}

impl Wire for HashState {
    fn write_bytes(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(HASH_STATE_TAG);
        out.extend_from_slice(&self.domain_size().to_le_bytes());
        out.extend_from_slice(&(self.entries().len() as u64).to_le_bytes());
        for &(key, output) in self.entries() {
            out.extend_from_slice(&key.to_le_bytes());
            out.extend_from_slice(&output.to_le_bytes());
        }
    }

    fn read_bytes(input: &[u8], pos: &mut usize) -> Result<Self, AmqError> {
        expect_tag(input, pos, HASH_STATE_TAG)?;
        let domain = read_u64(input, pos)?;
        if domain == 0 {
            return Err(AmqError::MalformedData("hash domain of zero".into()));
        }
        let count = read_u64(input, pos)?;
        let mut entries = Vec::with_capacity(count.min(1 << 20) as usize);
        let mut previous: Option<u64> = None;
        for _ in 0..count {
            let key = read_u64(input, pos)?;
            let output = read_u64(input, pos)?;
            if output >= domain {
                return Err(AmqError::MalformedData(format!(
                    "hash output {output} outside domain {domain}"
                )));
            }
            if previous.is_some_and(|p| p >= key) {
                return Err(AmqError::MalformedData(
                    "hash entries not strictly sorted by key".into(),
                ));
            }
            previous = Some(key);
            entries.push((key, output));
        }
        Ok(HashState::from_entries(domain, entries))
    }
}

impl Wire for BloomState {
    fn write_bytes(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(BLOOM_TAG);
        let bits = self.bit_count();
        out.extend_from_slice(
            &u32::try_from(bits)
                .expect("bit count fits u32")
                .to_le_bytes(),
        );
        for byte_index in 0..bits.div_ceil(8) {
            let word = self.words()[(byte_index / 8) as usize];
            out.push((word >> (8 * (byte_index % 8))) as u8);
        }
    }

    fn read_bytes(input: &[u8], pos: &mut usize) -> Result<Self, AmqError> {
        expect_tag(input, pos, BLOOM_TAG)?;
        let bits = read_u32(input, pos)? as u64;
        if bits == 0 {
            return Err(AmqError::MalformedData("bloom filter of zero bits".into()));
        }
        let payload = take(input, pos, bits.div_ceil(8) as usize)?;
        let mut words = vec![0u64; bits.div_ceil(64) as usize];
        for (byte_index, &byte) in payload.iter().enumerate() {
            words[byte_index / 8] |= (byte as u64) << (8 * (byte_index % 8));
        }
        // Padding bits past the declared length must be clear.
        let tail_bits = bits % 64;
        if tail_bits != 0 && words[(bits / 64) as usize] >> tail_bits != 0 {
            return Err(AmqError::MalformedData(
                "set bits past declared length".into(),
            ));
        }
        Ok(BloomState::from_words(bits, words))
    }
}

/// Bits needed to store values in `[0, bound]`.
fn counter_width(bound: u64) -> u32 {
    u64::BITS - bound.leading_zeros()
}

impl Wire for CountingState {
    fn write_bytes(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(COUNTING_TAG);
        let counters = self.counter_count();
        out.extend_from_slice(
            &u32::try_from(counters)
                .expect("counter count fits u32")
                .to_le_bytes(),
        );
        out.extend_from_slice(
            &u32::try_from(self.bound())
                .expect("bound fits u32")
                .to_le_bytes(),
        );
        let width = counter_width(self.bound()) as u64;
        let mut payload = vec![0u8; (counters * width).div_ceil(8) as usize];
        for (i, &counter) in self.counters().iter().enumerate() {
            for bit in 0..width {
                if counter >> bit & 1 == 1 {
                    let position = i as u64 * width + bit;
                    payload[(position / 8) as usize] |= 1 << (position % 8);
                }
            }
        }
        out.extend_from_slice(&payload);
    }

    /// The wire format does not carry the per-insert hash count: the state
    /// comes back with `hashes_per_insert = 1`; restore the real value with
    /// [`CountingState::with_hashes_per_insert`].
    fn read_bytes(input: &[u8], pos: &mut usize) -> Result<Self, AmqError> {
        expect_tag(input, pos, COUNTING_TAG)?;
        let counters = read_u32(input, pos)? as u64;
        let bound = read_u32(input, pos)? as u64;
        if counters == 0 || bound == 0 {
            return Err(AmqError::MalformedData(
                "counting filter needs counters >= 1 and bound >= 1".into(),
            ));
        }
        let width = counter_width(bound) as u64;
        let payload = take(input, pos, (counters * width).div_ceil(8) as usize)?;
        let mut values = Vec::with_capacity(counters as usize);
        for i in 0..counters {
            let mut value = 0u64;
            for bit in 0..width {
                let position = i * width + bit;
                if payload[(position / 8) as usize] >> (position % 8) & 1 == 1 {
                    value |= 1 << bit;
                }
            }
            if value > bound {
                return Err(AmqError::MalformedData(format!(
                    "counter value {value} exceeds bound {bound}"
                )));
            }
            values.push(value);
        }
        let trailing = counters * width % 8;
        if trailing != 0 && payload[payload.len() - 1] >> trailing != 0 {
            return Err(AmqError::MalformedData("set bits past last counter".into()));
        }
        Ok(CountingState::from_parts(bound, 1, values))
    }
}

impl Wire for QuotientState {
    fn write_bytes(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(QUOTIENT_TAG);
        out.push(self.quotient_bits() as u8);
        out.push(self.remainder_bits() as u8);
        for bucket in self.buckets() {
            out.extend_from_slice(
                &u32::try_from(bucket.len())
                    .expect("bucket fits u32")
                    .to_le_bytes(),
            );
            for &remainder in bucket {
                out.extend_from_slice(&remainder.to_le_bytes());
            }
        }
    }

    fn read_bytes(input: &[u8], pos: &mut usize) -> Result<Self, AmqError> {
        expect_tag(input, pos, QUOTIENT_TAG)?;
        let quotient_bits = read_u8(input, pos)? as u32;
        let remainder_bits = read_u8(input, pos)? as u32;
        crate::analytic::QuotientParams::new(quotient_bits, remainder_bits)
            .map_err(|err| AmqError::MalformedData(err.to_string()))?;
        let remainder_domain = 1u64 << remainder_bits;
        let mut buckets = Vec::with_capacity(1 << quotient_bits);
        for _ in 0..1u64 << quotient_bits {
            let len = read_u32(input, pos)?;
            let mut bucket = Vec::with_capacity(len.min(1 << 20) as usize);
            let mut previous = 0u64;
            for i in 0..len {
                let remainder = read_u64(input, pos)?;
                if remainder >= remainder_domain {
                    return Err(AmqError::MalformedData(format!(
                        "remainder {remainder} outside {remainder_bits}-bit range"
                    )));
                }
                if i > 0 && remainder < previous {
                    return Err(AmqError::MalformedData("bucket not sorted".into()));
                }
                previous = remainder;
                bucket.push(remainder);
            }
            buckets.push(bucket);
        }
        Ok(QuotientState::from_buckets(
            quotient_bits,
            remainder_bits,
            buckets,
        ))
    }
}

impl<A: Amq + Wire + std::fmt::Debug + PartialEq> Wire for BlockedState<A> {
    fn write_bytes(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(BLOCKED_TAG);
        out.extend_from_slice(
            &u32::try_from(self.block_count())
                .expect("block count fits u32")
                .to_le_bytes(),
        );
        for block in self.blocks() {
            block.write_bytes(out);
        }
    }

    fn read_bytes(input: &[u8], pos: &mut usize) -> Result<Self, AmqError> {
        expect_tag(input, pos, BLOCKED_TAG)?;
        let count = read_u32(input, pos)?;
        if count == 0 {
            return Err(AmqError::MalformedData(
                "blocked state of zero blocks".into(),
            ));
        }
        let mut blocks = Vec::with_capacity(count.min(1 << 16) as usize);
        for _ in 0..count {
            blocks.push(A::read_bytes(input, pos)?);
        }
        Ok(BlockedState::from_blocks(blocks))
    }
}
