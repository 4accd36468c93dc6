//! Working-precision scalars used by the SpMV kernels and solvers.

use half::f16;
use std::fmt::Debug;
use std::ops::{Add, Mul, Sub};

/// A floating-point type usable as SpMV input/output and accumulator.
///
/// Conversions from wider types round to nearest even. Every supported type
/// widens exactly to `f64`, so `from_f64(s.to_f64())` converts between any
/// two of them with a single rounding.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + Debug
    + PartialEq
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + 'static
{
    const ZERO: Self;
    const NAME: &'static str;
    /// Size of one element in bytes.
    const BYTES: usize;

    fn from_f64(v: f64) -> Self;
    fn from_f32(v: f32) -> Self;
    fn from_f16(v: f16) -> Self;
    fn to_f64(self) -> f64;
    /// Raw bit pattern, zero-extended.
    fn to_bits_u64(self) -> u64;
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    const NAME: &'static str = "f64";
    const BYTES: usize = 8;

    #[inline(always)]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline(always)]
    fn from_f32(v: f32) -> Self {
        v as f64
    }
    #[inline(always)]
    fn from_f16(v: f16) -> Self {
        v.to_f64()
    }
    #[inline(always)]
    fn to_f64(self) -> f64 {
        self
    }
    fn to_bits_u64(self) -> u64 {
        self.to_bits()
    }
}

impl Scalar for f32 {
    const ZERO: Self = 0.0;
    const NAME: &'static str = "f32";
    const BYTES: usize = 4;

    #[inline(always)]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    #[inline(always)]
    fn from_f32(v: f32) -> Self {
        v
    }
    #[inline(always)]
    fn from_f16(v: f16) -> Self {
        v.to_f32()
    }
    #[inline(always)]
    fn to_f64(self) -> f64 {
        self as f64
    }
    fn to_bits_u64(self) -> u64 {
        self.to_bits() as u64
    }
}

impl Scalar for f16 {
    const ZERO: Self = f16::ZERO;
    const NAME: &'static str = "f16";
    const BYTES: usize = 2;

    #[inline(always)]
    fn from_f64(v: f64) -> Self {
        f64_to_f16(v)
    }
    #[inline(always)]
    fn from_f32(v: f32) -> Self {
        f16::from_f32(v)
    }
    #[inline(always)]
    fn from_f16(v: f16) -> Self {
        v
    }
    #[inline(always)]
    fn to_f64(self) -> f64 {
        f16::to_f64(self)
    }
    fn to_bits_u64(self) -> u64 {
        self.to_bits() as u64
    }
}

/// Correctly rounded (nearest, ties to even) `f64` to `f16` conversion.
///
/// `half::f16::from_f64` may go through `f32` on targets with hardware
/// conversion, which rounds twice.
pub fn f64_to_f16(v: f64) -> f16 {
    let b = v.to_bits();
    let sign = ((b >> 48) & 0x8000) as u16;
    let exp = ((b >> 52) & 0x7ff) as i32;
    let man = b & ((1u64 << 52) - 1);
    if exp == 0x7ff {
        let nan = if man != 0 { 0x0200 } else { 0 };
        return f16::from_bits(sign | 0x7c00 | nan);
    }
    if exp == 0 {
        // f64 subnormals are far below the f16 range.
        return f16::from_bits(sign);
    }
    let e = exp - 1023;
    if e > 15 {
        return f16::from_bits(sign | 0x7c00);
    }
    let round = |q: u64, rem: u64, half: u64| -> u64 {
        if rem > half || (rem == half && q & 1 == 1) {
            q + 1
        } else {
            q
        }
    };
    if e >= -14 {
        let q = round(man >> 42, man & ((1 << 42) - 1), 1 << 41);
        // A mantissa carry ripples into the exponent (and up to infinity).
        let bits = (((e + 15) as u64) << 10) + q;
        f16::from_bits(sign | bits as u16)
    } else {
        let m = man | (1u64 << 52);
        let shift = (28 - e) as u32;
        if shift >= 54 {
            return f16::from_bits(sign);
        }
        let q = round(m >> shift, m & ((1u64 << shift) - 1), 1u64 << (shift - 1));
        f16::from_bits(sign | q as u16)
    }
}

/// Converts a slice between working precisions.
pub fn convert<S: Scalar, T: Scalar>(src: &[S]) -> Vec<T> {
    src.iter().map(|v| T::from_f64(v.to_f64())).collect()
}

/// True when both slices have the same length and identical bit patterns.
pub fn bitwise_eq<T: Scalar>(a: &[T], b: &[T]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits_u64() == y.to_bits_u64())
}
