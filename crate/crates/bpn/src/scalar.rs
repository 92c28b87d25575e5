//! Scalar abstraction: all core math is generic over the float width.
//!
//! Experiments run in `f32` for throughput; gradient checks instantiate the
//! same code at `f64` so finite-difference tolerances hold.

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Default
    + std::fmt::Debug
    + std::fmt::Display
    + Send
    + Sync
    + 'static
{
    /// Serialized width in bytes (little-endian IEEE 754).
    const WIDTH: usize;

    /// Lossy conversion from `f64` (rounds when `Self = f32`).
    fn from_f64_lossy(v: f64) -> Self;

    /// Widening conversion to `f64`.
    fn to_f64_lossy(self) -> f64;

    fn write_le(self, out: &mut Vec<u8>);

    /// Reads `Self::WIDTH` bytes from the front of `src`.
    fn read_le(src: &[u8]) -> Self;
}

impl Scalar for f32 {
    const WIDTH: usize = 4;

    fn from_f64_lossy(v: f64) -> Self {
        v as f32
    }

    fn to_f64_lossy(self) -> f64 {
        f64::from(self)
    }

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(src: &[u8]) -> Self {
        f32::from_le_bytes([src[0], src[1], src[2], src[3]])
    }
}

impl Scalar for f64 {
    const WIDTH: usize = 8;

    fn from_f64_lossy(v: f64) -> Self {
        v
    }

    fn to_f64_lossy(self) -> f64 {
        self
    }

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(src: &[u8]) -> Self {
        f64::from_le_bytes([
            src[0], src[1], src[2], src[3], src[4], src[5], src[6], src[7],
        ])
    }
}
