//! 8×8 orthonormal DCT-II, uniform scalar quantization and PSNR.
//!
//! Samples are level-shifted by −128 before the forward transform and the
//! shift is undone after the inverse, as in baseline JPEG.

use std::sync::OnceLock;

use thiserror::Error;

use crate::pixelgrid::{GrayImage, Tile, BLOCK};

const N: usize = BLOCK * BLOCK;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransformError {
    #[error("quantization factor must be in 1..=255, got {0}")]
    InvalidQuant(u32),
    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
}

/// Scalar quantization step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuantSpec(u8);

impl QuantSpec {
    pub fn new(q: u32) -> Result<Self, TransformError> {
        match u8::try_from(q) {
            Ok(v) if v >= 1 => Ok(QuantSpec(v)),
            _ => Err(TransformError::InvalidQuant(q)),
        }
    }

    pub fn get(self) -> u32 {
        self.0 as u32
    }
}

/// Real-valued DCT coefficients, row-major, index = v * 8 + u.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealBlock(pub [f64; N]);

impl RealBlock {
    pub fn zero() -> Self {
        RealBlock([0.0; N])
    }
}

/// Quantized coefficients of one block together with the step that produced them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoeffBlock {
    pub values: [i32; N],
    pub quant: QuantSpec,
}

impl CoeffBlock {
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0)
    }

    /// Coefficient at frequency row `y`, column `x`.
    pub fn at(&self, y: usize, x: usize) -> i32 {
        self.values[y * BLOCK + x]
    }
}

/// basis[k][i] = c(k) cos((2i+1)kπ/16), with c(0)=√(1/8), c(k>0)=√(2/8).
fn basis() -> &'static [[f64; BLOCK]; BLOCK] {
    static BASIS: OnceLock<[[f64; BLOCK]; BLOCK]> = OnceLock::new();
    BASIS.get_or_init(|| {
        let mut m = [[0.0; BLOCK]; BLOCK];
        for (k, row) in m.iter_mut().enumerate() {
            let c = if k == 0 {
                (1.0 / BLOCK as f64).sqrt()
            } else {
                (2.0 / BLOCK as f64).sqrt()
            };
            for (i, v) in row.iter_mut().enumerate() {
                *v = c * (((2 * i + 1) * k) as f64 * std::f64::consts::PI / 16.0).cos();
            }
        }
        m
    })
}

/// Separable forward transform of a level-shifted real block.
fn forward(input: &[f64; N]) -> [f64; N] {
    let b = basis();
    let mut rows = [0.0; N];
    for y in 0..BLOCK {
        for u in 0..BLOCK {
            rows[y * BLOCK + u] = (0..BLOCK).map(|x| b[u][x] * input[y * BLOCK + x]).sum();
        }
    }
    let mut out = [0.0; N];
    for v in 0..BLOCK {
        for u in 0..BLOCK {
            out[v * BLOCK + u] = (0..BLOCK).map(|y| b[v][y] * rows[y * BLOCK + u]).sum();
        }
    }
    out
}

fn inverse(coeffs: &[f64; N]) -> [f64; N] {
    let b = basis();
    let mut cols = [0.0; N];
    for y in 0..BLOCK {
        for u in 0..BLOCK {
            cols[y * BLOCK + u] = (0..BLOCK).map(|v| b[v][y] * coeffs[v * BLOCK + u]).sum();
        }
    }
    let mut out = [0.0; N];
    for y in 0..BLOCK {
        for x in 0..BLOCK {
            out[y * BLOCK + x] = (0..BLOCK).map(|u| b[u][x] * cols[y * BLOCK + u]).sum();
        }
    }
    out
}

pub fn dct8x8(tile: &Tile) -> RealBlock {
    let mut shifted = [0.0; N];
    for (s, &t) in shifted.iter_mut().zip(tile.iter()) {
        *s = t as f64 - 128.0;
    }
    RealBlock(forward(&shifted))
}

/// Inverse transform with the +128 shift restored but before rounding and clamping.
pub fn idct8x8_real(rb: &RealBlock) -> [f64; N] {
    let mut out = inverse(&rb.0);
    for v in out.iter_mut() {
        *v += 128.0;
    }
    out
}

pub fn idct8x8(rb: &RealBlock) -> Tile {
    let real = idct8x8_real(rb);
    let mut tile = [0u8; N];
    for (t, r) in tile.iter_mut().zip(real.iter()) {
        *t = r.round().clamp(0.0, 255.0) as u8;
    }
    tile
}

/// Divide by Q and round half away from zero.
pub fn quantize(rb: &RealBlock, quant: QuantSpec) -> CoeffBlock {
    let q = quant.get() as f64;
    let mut values = [0i32; N];
    for (v, c) in values.iter_mut().zip(rb.0.iter()) {
        *v = (c / q).round() as i32;
    }
    CoeffBlock { values, quant }
}

pub fn dequantize(cb: &CoeffBlock) -> RealBlock {
    let q = cb.quant.get() as f64;
    let mut out = [0.0; N];
    for (o, &v) in out.iter_mut().zip(cb.values.iter()) {
        *o = v as f64 * q;
    }
    RealBlock(out)
}

/// Peak signal-to-noise ratio over the unpadded region of `a`.
///
/// Identical images yield `f64::INFINITY`.
pub fn psnr(a: &GrayImage, b: &GrayImage) -> Result<f64, TransformError> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(TransformError::DimensionMismatch(
            a.width(),
            a.height(),
            b.width(),
            b.height(),
        ));
    }
    let (w, h) = (a.orig_width(), a.orig_height());
    let mut sse = 0u64;
    for y in 0..h {
        for x in 0..w {
            let d = a.get(x, y) as i64 - b.get(x, y) as i64;
            sse += (d * d) as u64;
        }
    }
    if sse == 0 {
        return Ok(f64::INFINITY);
    }
    let mse = sse as f64 / (w * h) as f64;
    Ok(10.0 * (255.0f64 * 255.0 / mse).log10())
}
