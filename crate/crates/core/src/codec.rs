//! Word layout and value codecs.
//!
//! A `W`-bit word holds a flag in the least significant bit. With flag = 1
//! the upper `V` bits carry an encoded value and bits `D..1` a delta below
//! `2^D`; with flag = 0 all `W-1` upper bits carry a delta and there is no
//! value. `W = V + D + 1`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use half::f16;
use serde::Serialize;
use std::fmt;
use std::str::FromStr;

/// How the `V` value bits are interpreted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Codec {
    /// IEEE binary16 stored verbatim; requires `V = 16`.
    Fp16Embed,
    /// 1 sign, 8 exponent, `Y = V - 9` mantissa bits: an FP32 value with its
    /// low `D + 1` mantissa bits dropped. Requires `W = 32`.
    E8my,
    /// Lossless FP32 in the top 32 value bits; requires `W = 64`, `V >= 32`.
    Fp32Embed,
}

impl Codec {
    pub fn id(self) -> u8 {
        match self {
            Codec::Fp16Embed => 0,
            Codec::E8my => 1,
            Codec::Fp32Embed => 2,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            0 => Some(Codec::Fp16Embed),
            1 => Some(Codec::E8my),
            2 => Some(Codec::Fp32Embed),
            _ => None,
        }
    }
}

impl FromStr for Codec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fp16" | "fp16embed" => Ok(Codec::Fp16Embed),
            "e8my" | "e8m" => Ok(Codec::E8my),
            "fp32" | "fp32embed" => Ok(Codec::Fp32Embed),
            _ => Err(Error::invalid(format!("unknown codec '{s}'"))),
        }
    }
}

/// Word width, delta width and value codec.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PackFormat {
    word_bits: u32,
    delta_bits: u32,
    codec: Codec,
}

impl PackFormat {
    pub fn new(word_bits: u32, delta_bits: u32, codec: Codec) -> Result<Self> {
        if word_bits != 32 && word_bits != 64 {
            return Err(Error::invalid(format!("word size {word_bits} not in {{32, 64}}")));
        }
        if delta_bits < 1 || delta_bits > word_bits - 2 {
            return Err(Error::invalid(format!(
                "delta bits {delta_bits} outside 1..={}",
                word_bits - 2
            )));
        }
        let v = word_bits - delta_bits - 1;
        let ok = match codec {
            Codec::Fp16Embed => v == 16,
            Codec::E8my => word_bits == 32 && v >= 9,
            Codec::Fp32Embed => word_bits == 64 && v >= 32,
        };
        if !ok {
            return Err(Error::invalid(format!(
                "codec {codec:?} cannot use W={word_bits}, D={delta_bits} (V={v})"
            )));
        }
        Ok(PackFormat {
            word_bits,
            delta_bits,
            codec,
        })
    }

    /// `W = 32`, `D = 15`, FP16 values.
    pub fn fp16() -> Self {
        PackFormat::new(32, 15, Codec::Fp16Embed).unwrap()
    }

    /// `W = 32`, E8MY with `Y` mantissa bits (`D = 22 - Y`).
    pub fn e8m(mantissa_bits: u32) -> Result<Self> {
        if mantissa_bits > 21 {
            return Err(Error::invalid(format!("E8M{mantissa_bits} needs D < 1")));
        }
        PackFormat::new(32, 22 - mantissa_bits, Codec::E8my)
    }

    /// `W = 64`, `D = 31`, lossless FP32 values.
    pub fn fp32_embed() -> Self {
        PackFormat::new(64, 31, Codec::Fp32Embed).unwrap()
    }

    pub fn word_bits(&self) -> u32 {
        self.word_bits
    }

    pub fn delta_bits(&self) -> u32 {
        self.delta_bits
    }

    pub fn value_bits(&self) -> u32 {
        self.word_bits - self.delta_bits - 1
    }

    pub fn codec(&self) -> Codec {
        self.codec
    }

    /// Mantissa bits `Y` for E8MY.
    pub fn mantissa_bits(&self) -> Option<u32> {
        (self.codec == Codec::E8my).then(|| self.value_bits() - 9)
    }

    pub fn max_direct_delta(&self) -> u64 {
        (1u64 << self.delta_bits) - 1
    }

    pub fn max_dummy_delta(&self) -> u64 {
        (1u64 << (self.word_bits - 1)) - 1
    }

    /// Bits of the value type this format replaces in a SELL matrix.
    pub fn sell_value_bits(&self) -> u32 {
        match self.codec {
            Codec::Fp16Embed => 16,
            Codec::E8my | Codec::Fp32Embed => 32,
        }
    }

    /// Encodes a finite value into a `V`-bit pattern.
    pub fn encode_value(&self, v: f64) -> Result<u64> {
        if !v.is_finite() {
            return Err(Error::Codec(format!("cannot encode non-finite value {v}")));
        }
        match self.codec {
            Codec::Fp16Embed => {
                let h = crate::scalar::f64_to_f16(v);
                if h.is_infinite() {
                    return Err(Error::Codec(format!("{v} overflows FP16")));
                }
                Ok(h.to_bits() as u64)
            }
            Codec::E8my => {
                let q = e8my_round(v as f32, self.delta_bits)
                    .ok_or_else(|| Error::Codec(format!("{v} overflows E8M{}", self.value_bits() - 9)))?;
                Ok((q.to_bits() >> (self.delta_bits + 1)) as u64)
            }
            Codec::Fp32Embed => {
                let f = v as f32;
                if f.is_infinite() {
                    return Err(Error::Codec(format!("{v} overflows FP32")));
                }
                Ok((f.to_bits() as u64) << (self.value_bits() - 32))
            }
        }
    }

    /// Reinterprets a `V`-bit pattern as a number.
    pub fn decode_value(&self, pattern: u64) -> f64 {
        decode_bits::<f64>(self.codec, pattern, self.layout())
    }

    /// `decode(encode(v))`.
    pub fn quantize(&self, v: f64) -> Result<f64> {
        self.encode_value(v).map(|p| self.decode_value(p))
    }

    /// Packs a value (or a bare delta when `value` is `None`) into a word.
    pub fn pack(&self, value: Option<f64>, delta: u64) -> Result<PackedWord> {
        match value {
            Some(v) => {
                if delta > self.max_direct_delta() {
                    return Err(Error::Codec(format!(
                        "delta {delta} does not fit in {} bits",
                        self.delta_bits
                    )));
                }
                let pattern = self.encode_value(v)?;
                Ok(PackedWord(
                    (pattern << (self.delta_bits + 1)) | (delta << 1) | 1,
                ))
            }
            None => {
                if delta > self.max_dummy_delta() {
                    return Err(Error::Codec(format!(
                        "delta {delta} exceeds dummy range 2^{}-1",
                        self.word_bits - 1
                    )));
                }
                Ok(PackedWord(delta << 1))
            }
        }
    }

    /// Unpacks any `W`-bit pattern (bits above `W` are ignored).
    pub fn unpack(&self, word: PackedWord) -> UnpackedEntry {
        let layout = self.layout();
        let (vbits, delta, flag) = if self.word_bits == 32 {
            let (v, d, f) = (word.0 as u32).split(layout);
            (v as u64, d as u64, f as u64)
        } else {
            word.0.split(layout)
        };
        UnpackedEntry {
            value: decode_bits::<f64>(self.codec, vbits, layout),
            delta,
            has_value: flag == 1,
        }
    }

    pub(crate) fn layout(&self) -> Layout {
        Layout {
            delta_bits: self.delta_bits,
            value_bits: self.value_bits(),
        }
    }

    /// Short preset-style name: `fp16`, `e8m20`, `fp32embed`, with the
    /// widths appended when they differ from the preset.
    pub fn name(&self) -> String {
        match self.codec {
            Codec::Fp16Embed if self.word_bits == 32 => "fp16".into(),
            Codec::E8my => format!("e8m{}", self.value_bits() - 9),
            Codec::Fp32Embed if self.delta_bits == 31 => "fp32embed".into(),
            c => format!("{c:?}-w{}-d{}", self.word_bits, self.delta_bits).to_lowercase(),
        }
    }
}

impl fmt::Display for PackFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (W={}, D={}, V={})",
            self.name(),
            self.word_bits,
            self.delta_bits,
            self.value_bits()
        )
    }
}

impl FromStr for PackFormat {
    type Err = Error;
    /// Accepts the preset names `fp16`, `e8mY` and `fp32embed`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        match s.as_str() {
            "fp16" => Ok(PackFormat::fp16()),
            "fp32embed" | "fp32" => Ok(PackFormat::fp32_embed()),
            _ => match s.strip_prefix("e8m").map(str::parse::<u32>) {
                Some(Ok(y)) => PackFormat::e8m(y),
                _ => Err(Error::invalid(format!("unknown format preset '{s}'"))),
            },
        }
    }
}

/// A packed `W`-bit word, zero-extended to 64 bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PackedWord(pub u64);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnpackedEntry {
    /// `+0` when `has_value` is false.
    pub value: f64,
    pub delta: u64,
    pub has_value: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Layout {
    pub delta_bits: u32,
    pub value_bits: u32,
}

/// Native word storage for the packed array.
pub(crate) trait Word: Copy + Send + Sync + 'static {
    /// Branch-free split into (value bits, delta, flag).
    fn split(self, layout: Layout) -> (Self, Self, Self);
    fn widen(self) -> u64;
}

macro_rules! impl_word {
    ($t:ty) => {
        impl Word for $t {
            #[inline(always)]
            fn split(self, layout: Layout) -> (Self, Self, Self) {
                let flag = self & 1;
                // Shift out the value bits only when a value is present.
                let shift = layout.value_bits * flag as u32;
                let delta = ((self << shift) >> shift) >> 1;
                let value = (self >> (layout.delta_bits + 1)) * flag;
                (value, delta, flag)
            }

            #[inline(always)]
            fn widen(self) -> u64 {
                self as u64
            }
        }
    };
}

impl_word!(u32);
impl_word!(u64);

#[inline(always)]
pub(crate) fn decode_bits<T: Scalar>(codec: Codec, vbits: u64, layout: Layout) -> T {
    match codec {
        Codec::Fp16Embed => T::from_f16(f16::from_bits(vbits as u16)),
        Codec::E8my => T::from_f32(f32::from_bits((vbits << (layout.delta_bits + 1)) as u32)),
        Codec::Fp32Embed => T::from_f32(f32::from_bits((vbits >> (layout.value_bits - 32)) as u32)),
    }
}

/// Value decoders specialised per codec for the SpMV kernel.
pub(crate) trait ValueDecoder: Send + Sync {
    fn decode<T: Scalar>(vbits: u64, layout: Layout) -> T;
}

pub(crate) struct Fp16Dec;
pub(crate) struct E8myDec;
pub(crate) struct Fp32Dec;

impl ValueDecoder for Fp16Dec {
    #[inline(always)]
    fn decode<T: Scalar>(vbits: u64, layout: Layout) -> T {
        decode_bits(Codec::Fp16Embed, vbits, layout)
    }
}

impl ValueDecoder for E8myDec {
    #[inline(always)]
    fn decode<T: Scalar>(vbits: u64, layout: Layout) -> T {
        decode_bits(Codec::E8my, vbits, layout)
    }
}

impl ValueDecoder for Fp32Dec {
    #[inline(always)]
    fn decode<T: Scalar>(vbits: u64, layout: Layout) -> T {
        decode_bits(Codec::Fp32Embed, vbits, layout)
    }
}

/// `2^k` as an `f32`, including subnormal powers.
fn pow2_f32(k: i32) -> f32 {
    debug_assert!((-149..=127).contains(&k));
    if k >= -126 {
        f32::from_bits(((k + 127) as u32) << 23)
    } else {
        f32::from_bits(1u32 << (k + 149))
    }
}

/// Rounds an FP32 value to `Y = 22 - D` mantissa bits: with
/// `v = m·2^e`, `m ∈ [0.5, 1)`, scale `s = 2^(e - 24 + D + 1)` and return
/// `round(v / s)·s` (ties away from zero). Subnormals flush to signed zero.
/// `None` on overflow.
pub(crate) fn e8my_round(v: f32, delta_bits: u32) -> Option<f32> {
    if v.is_infinite() || v.is_nan() {
        return None;
    }
    if !v.is_normal() {
        return Some(f32::from_bits(v.to_bits() & 0x8000_0000));
    }
    let e = ((v.to_bits() >> 23) & 0xff) as i32 - 126;
    let scale = pow2_f32(e - 24 + delta_bits as i32 + 1);
    let q = (v / scale).round() * scale;
    q.is_finite().then_some(q)
}
