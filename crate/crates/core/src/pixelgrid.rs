//! Grayscale rasters: netpbm PGM I/O, power-of-two padding and 8×8 tiling.

use std::fmt::Write as _;

use thiserror::Error;

/// Side length of a transform block.
pub const BLOCK: usize = 8;

/// One 8×8 tile of samples in row-major order.
pub type Tile = [u8; BLOCK * BLOCK];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PixelError {
    #[error("not a PGM file: expected magic P2 or P5")]
    BadMagic,
    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),
    #[error("unsupported PGM maxval {0} (only 1..=255 is accepted)")]
    UnsupportedMaxval(u32),
    #[error("truncated PGM payload: expected {expected} samples, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("sample {value} at index {index} exceeds maxval {maxval}")]
    SampleOutOfRange {
        index: usize,
        value: u32,
        maxval: u32,
    },
    #[error("sample buffer holds {found} values, {width}x{height} needs {expected}")]
    LengthMismatch {
        width: usize,
        height: usize,
        expected: usize,
        found: usize,
    },
    #[error("image {width}x{height} is not divisible into 8x8 blocks")]
    NotBlockAligned { width: usize, height: usize },
}

/// 8-bit grayscale raster.
///
/// `orig_width`/`orig_height` remember the size before any padding so that
/// distortion metrics and decoded output can be restricted to the real image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    orig_width: usize,
    orig_height: usize,
    samples: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Result<Self, PixelError> {
        let expected = width * height;
        if samples.len() != expected {
            return Err(PixelError::LengthMismatch {
                width,
                height,
                expected,
                found: samples.len(),
            });
        }
        Ok(Self {
            width,
            height,
            orig_width: width,
            orig_height: height,
            samples,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut samples = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                samples.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            orig_width: width,
            orig_height: height,
            samples,
        }
    }

    /// Re-declare the pre-padding size. Used when reassembling decoded output.
    pub fn with_original_size(mut self, orig_width: usize, orig_height: usize) -> Self {
        self.orig_width = orig_width.min(self.width);
        self.orig_height = orig_height.min(self.height);
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn orig_width(&self) -> usize {
        self.orig_width
    }

    pub fn orig_height(&self) -> usize {
        self.orig_height
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.samples[y * self.width + x]
    }

    pub fn is_pow2(&self) -> bool {
        self.width.is_power_of_two() && self.height.is_power_of_two()
    }

    /// Raise each axis to the next power of two, filling new samples with `fill`.
    pub fn pad_to_pow2(&self, fill: u8) -> GrayImage {
        self.pad_to(
            self.width.next_power_of_two(),
            self.height.next_power_of_two(),
            fill,
        )
    }

    /// Power-of-two padding followed by a floor of 8 per axis, so the result
    /// always splits into whole 8×8 blocks.
    pub fn pad_for_blocks(&self, fill: u8) -> GrayImage {
        let p = self.pad_to_pow2(fill);
        let (w, h) = (p.width.max(BLOCK), p.height.max(BLOCK));
        p.pad_to(w, h, fill)
    }

    fn pad_to(&self, width: usize, height: usize, fill: u8) -> GrayImage {
        if width == self.width && height == self.height {
            return self.clone();
        }
        let mut samples = vec![fill; width * height];
        for y in 0..self.height {
            samples[y * width..y * width + self.width]
                .copy_from_slice(&self.samples[y * self.width..(y + 1) * self.width]);
        }
        GrayImage {
            width,
            height,
            orig_width: self.orig_width,
            orig_height: self.orig_height,
            samples,
        }
    }

    /// Drop padding, returning an image of the original size.
    pub fn crop_to_original(&self) -> GrayImage {
        let (w, h) = (self.orig_width, self.orig_height);
        GrayImage::from_fn(w, h, |x, y| self.get(x, y))
    }

    /// Binary P5 encoding of the full (possibly padded) raster.
    pub fn write_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.samples);
        out
    }

    /// Plain-text P2 encoding, one raster row per line.
    pub fn write_pgm_ascii(&self) -> Vec<u8> {
        let mut out = format!("P2\n{} {}\n255\n", self.width, self.height);
        for row in self.samples.chunks(self.width.max(1)) {
            let mut first = true;
            for v in row {
                if !first {
                    out.push(' ');
                }
                first = false;
                let _ = write!(out, "{v}");
            }
            out.push('\n');
        }
        out.into_bytes()
    }
}

/// Header tokenizer that skips whitespace and `#` comments.
struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn next_uint(&mut self, what: &str) -> Result<u32, PixelError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(PixelError::MalformedHeader(format!("missing {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| PixelError::MalformedHeader(format!("{what} out of range")))
    }
}

/// Parse a P2 or P5 PGM. No padding is applied.
pub fn load_pgm(bytes: &[u8]) -> Result<GrayImage, PixelError> {
    let binary = match bytes.get(..2) {
        Some(b"P5") => true,
        Some(b"P2") => false,
        _ => return Err(PixelError::BadMagic),
    };
    let mut cur = HeaderCursor { bytes, pos: 2 };
    if cur.pos < bytes.len() && !bytes[cur.pos].is_ascii_whitespace() && bytes[cur.pos] != b'#' {
        return Err(PixelError::BadMagic);
    }
    let width = cur.next_uint("width")? as usize;
    let height = cur.next_uint("height")? as usize;
    let maxval = cur.next_uint("maxval")?;
    if maxval > 255 {
        return Err(PixelError::UnsupportedMaxval(maxval));
    }
    if maxval == 0 {
        return Err(PixelError::MalformedHeader(
            "maxval must be positive".into(),
        ));
    }
    let expected = width
        .checked_mul(height)
        .ok_or_else(|| PixelError::MalformedHeader("dimensions overflow".into()))?;

    let samples = if binary {
        // Exactly one whitespace byte separates the header from the raster.
        match bytes.get(cur.pos) {
            Some(c) if c.is_ascii_whitespace() => cur.pos += 1,
            _ if expected == 0 => {}
            _ => {
                return Err(PixelError::MalformedHeader(
                    "no separator after maxval".into(),
                ))
            }
        }
        let payload = &bytes[cur.pos.min(bytes.len())..];
        if payload.len() < expected {
            return Err(PixelError::Truncated {
                expected,
                found: payload.len(),
            });
        }
        payload[..expected].to_vec()
    } else {
        let mut samples = Vec::with_capacity(expected);
        for index in 0..expected {
            cur.skip_space_and_comments();
            if cur.pos >= bytes.len() {
                return Err(PixelError::Truncated {
                    expected,
                    found: index,
                });
            }
            let value = cur.next_uint("sample")?;
            if value > maxval {
                return Err(PixelError::SampleOutOfRange {
                    index,
                    value,
                    maxval,
                });
            }
            samples.push(value as u8);
        }
        samples
    };
    if let Some((index, &value)) = samples
        .iter()
        .enumerate()
        .find(|(_, &v)| u32::from(v) > maxval)
    {
        return Err(PixelError::SampleOutOfRange {
            index,
            value: value.into(),
            maxval,
        });
    }
    GrayImage::new(width, height, samples)
}

/// An image cut into 8×8 tiles in raster block order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockGrid {
    pub tiles: Vec<Tile>,
    pub rows: usize,
    pub cols: usize,
}

impl BlockGrid {
    /// Total block count.
    pub fn count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn tile(&self, row: usize, col: usize) -> &Tile {
        &self.tiles[row * self.cols + col]
    }

    /// Reassemble the raster. `orig` carries the pre-padding size forward.
    pub fn join(&self, orig_width: usize, orig_height: usize) -> GrayImage {
        let width = self.cols * BLOCK;
        let height = self.rows * BLOCK;
        GrayImage::from_fn(width, height, |x, y| {
            self.tile(y / BLOCK, x / BLOCK)[(y % BLOCK) * BLOCK + x % BLOCK]
        })
        .with_original_size(orig_width, orig_height)
    }
}

pub fn split_blocks(img: &GrayImage) -> Result<BlockGrid, PixelError> {
    if !img.width.is_multiple_of(BLOCK)
        || !img.height.is_multiple_of(BLOCK)
        || img.width == 0
        || img.height == 0
    {
        return Err(PixelError::NotBlockAligned {
            width: img.width,
            height: img.height,
        });
    }
    let rows = img.height / BLOCK;
    let cols = img.width / BLOCK;
    let mut tiles = Vec::with_capacity(rows * cols);
    for br in 0..rows {
        for bc in 0..cols {
            let mut t = [0u8; BLOCK * BLOCK];
            for y in 0..BLOCK {
                let src = (br * BLOCK + y) * img.width + bc * BLOCK;
                t[y * BLOCK..(y + 1) * BLOCK].copy_from_slice(&img.samples[src..src + BLOCK]);
            }
            tiles.push(t);
        }
    }
    Ok(BlockGrid { tiles, rows, cols })
}
