//! Two's-complement fixed-point values as seen by the neuron datapath.
//!
//! A [`FixedPoint`] carries its [`Format`] so that values of different
//! precisions cannot be mixed silently. Decay by β = 0.5 is an arithmetic
//! right shift (floor toward −∞), which is what a shift register does.

use std::fmt;

use crate::error::Error;

/// Bit layout of a fixed-point quantity: `total_bits` two's-complement bits,
/// of which the lowest `frac_bits` are fractional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Format {
    frac_bits: u8,
    total_bits: u8,
}

impl Format {
    /// Default potential format: 16-bit signed, 8 fraction bits.
    pub const POTENTIAL: Format = Format {
        frac_bits: 8,
        total_bits: 16,
    };

    pub fn new(frac_bits: u8, total_bits: u8) -> Result<Self, Error> {
        if total_bits == 0 || total_bits > 32 || frac_bits >= total_bits {
            return Err(Error::InvalidFormat {
                frac_bits,
                total_bits,
            });
        }
        Ok(Format {
            frac_bits,
            total_bits,
        })
    }

    #[inline]
    pub fn frac_bits(self) -> u8 {
        self.frac_bits
    }

    #[inline]
    pub fn total_bits(self) -> u8 {
        self.total_bits
    }

    #[inline]
    pub fn min_raw(self) -> i64 {
        -(1i64 << (self.total_bits - 1))
    }

    #[inline]
    pub fn max_raw(self) -> i64 {
        (1i64 << (self.total_bits - 1)) - 1
    }

    #[inline]
    pub fn contains(self, raw: i64) -> bool {
        raw >= self.min_raw() && raw <= self.max_raw()
    }

    /// Raw encoding of 1.0.
    #[inline]
    pub fn one_raw(self) -> i64 {
        1i64 << self.frac_bits
    }

    /// Clamp `raw` into range; the flag reports whether clamping happened.
    #[inline]
    pub fn saturate(self, raw: i64) -> (i32, bool) {
        if raw > self.max_raw() {
            (self.max_raw() as i32, true)
        } else if raw < self.min_raw() {
            (self.min_raw() as i32, true)
        } else {
            (raw as i32, false)
        }
    }

    /// Re-align a raw value with `from_frac` fraction bits to this format's
    /// fraction bits. Widening is a left shift, narrowing a floor shift.
    #[inline]
    pub fn align_raw(self, raw: i64, from_frac: u8) -> i64 {
        let to = self.frac_bits as i32;
        let from = from_frac as i32;
        if to >= from {
            raw << (to - from)
        } else {
            raw >> (from - to).min(63)
        }
    }
}

impl Default for Format {
    fn default() -> Self {
        Format::POTENTIAL
    }
}

/// A signed fixed-point value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FixedPoint {
    raw: i32,
    format: Format,
}

impl FixedPoint {
    pub fn from_raw(raw: i64, format: Format) -> Result<Self, Error> {
        if !format.contains(raw) {
            return Err(Error::Overflow {
                value: raw as f64 / format.one_raw() as f64,
                format,
            });
        }
        Ok(FixedPoint {
            raw: raw as i32,
            format,
        })
    }

    pub fn zero(format: Format) -> Self {
        FixedPoint { raw: 0, format }
    }

    /// 1.0 in `format`; fails when 1.0 is not representable.
    pub fn one(format: Format) -> Result<Self, Error> {
        Self::from_raw(format.one_raw(), format)
    }

    /// Quantize a real number with round-half-to-even.
    pub fn from_real(x: f64, frac_bits: u8, total_bits: u8) -> Result<Self, Error> {
        let format = Format::new(frac_bits, total_bits)?;
        Self::from_real_in(x, format)
    }

    pub fn from_real_in(x: f64, format: Format) -> Result<Self, Error> {
        let scaled = (x * format.one_raw() as f64).round_ties_even();
        if !scaled.is_finite() || !format.contains(scaled as i64) || scaled.abs() > 2f64.powi(40) {
            return Err(Error::Overflow { value: x, format });
        }
        Ok(FixedPoint {
            raw: scaled as i32,
            format,
        })
    }

    #[inline]
    pub fn raw(self) -> i32 {
        self.raw
    }

    #[inline]
    pub fn format(self) -> Format {
        self.format
    }

    pub fn to_f64(self) -> f64 {
        self.raw as f64 / self.format.one_raw() as f64
    }

    /// Multiply by β^steps with β = 0.5: `steps` arithmetic right shifts.
    ///
    /// Non-negative values reach 0 after enough shifts; negative values
    /// settle at raw −1 because the shift floors toward −∞.
    #[inline]
    pub fn decay(self, steps: u64) -> Self {
        // Shifting an i32 by 31 already reaches the fixpoint 0 or -1.
        let s = steps.min(31) as u32;
        FixedPoint {
            raw: self.raw >> s,
            format: self.format,
        }
    }

    /// Saturating add of a raw value in the same format.
    #[inline]
    pub fn saturating_add_raw(self, rhs: i64) -> (Self, bool) {
        let (raw, sat) = self.format.saturate(self.raw as i64 + rhs);
        (
            FixedPoint {
                raw,
                format: self.format,
            },
            sat,
        )
    }

    /// Saturating add; `rhs` is aligned to this value's format first.
    pub fn saturating_add(self, rhs: FixedPoint) -> (Self, bool) {
        let aligned = self.format.align_raw(rhs.raw as i64, rhs.format.frac_bits);
        self.saturating_add_raw(aligned)
    }

    /// Exact subtraction in the same format (no saturation needed when both
    /// operands are non-negative and `self >= rhs`).
    #[inline]
    pub(crate) fn sub_raw(self, rhs: i32) -> Self {
        FixedPoint {
            raw: self.raw - rhs,
            format: self.format,
        }
    }
}

impl PartialOrd for FixedPoint {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        if self.format != other.format {
            return None;
        }
        Some(self.raw.cmp(&other.raw))
    }
}

impl fmt::Display for FixedPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (raw {}, Q{}.{})",
            self.to_f64(),
            self.raw,
            self.format.total_bits - self.format.frac_bits,
            self.format.frac_bits
        )
    }
}

/// Free-function form of [`FixedPoint::decay`].
#[inline]
pub fn fp_decay(p: FixedPoint, steps: u64) -> FixedPoint {
    p.decay(steps)
}

/// Free-function form of [`FixedPoint::from_real`].
pub fn fp_from_real(x: f64, frac_bits: u8, total_bits: u8) -> Result<FixedPoint, Error> {
    FixedPoint::from_real(x, frac_bits, total_bits)
}
