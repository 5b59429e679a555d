//! End-to-end runs: pixel-domain costing, the transform-domain pipeline
//! (DCT, quantize, encode, cost, dequantize, inverse DCT, PSNR) and CSV
//! reporting.

mod qct;
mod report;

pub use qct::{EncodedEntry, EncodedImage, QctError};
pub use report::{write_csv, write_mismatch_csv, CsvRow, CSV_HEADER};

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::blocktransform::{
    self, dct8x8, dequantize, idct8x8, quantize, CoeffBlock, QuantSpec, TransformError,
};
use crate::costmodel::{self, bpe_bits, CostError, CostInputs, CostParams, CostReport};
use crate::encoders::{
    self, block_data, build_circuit, count_nonzero, image_data, locate_blocks, BlockLocations,
    EncodeError, Scheme,
};
use crate::par::Execution;
use crate::pixelgrid::{split_blocks, BlockGrid, GrayImage, PixelError, BLOCK};
use crate::qcircuit::{Circuit, CircuitError, RegisterLayout};
use crate::simulator::{decode_block, decode_pixels, BasisMap, SimError};

pub use costmodel::compression_ratio;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Pixel(#[from] PixelError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("run needs at least one scheme and one quantization factor")]
    EmptyRun,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    Pixel,
    Dct,
}

impl Domain {
    pub fn name(self) -> &'static str {
        match self {
            Domain::Pixel => "pixel",
            Domain::Dct => "dct",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Domain {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pixel" => Ok(Domain::Pixel),
            "dct" => Ok(Domain::Dct),
            _ => Err(format!("unknown domain `{s}` (expected pixel or dct)")),
        }
    }
}

/// One point of a rate-distortion curve.
#[derive(Debug, Clone, PartialEq)]
pub struct RDPoint {
    pub scheme: Scheme,
    pub image: String,
    pub q: u32,
    pub bits_total: u64,
    pub br_mb: f64,
    pub psnr_db: f64,
    pub report: CostReport,
}

/// Everything a CLI invocation needs to drive a run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: std::path::PathBuf,
    pub schemes: Vec<Scheme>,
    pub quants: Vec<QuantSpec>,
    pub domain: Domain,
    pub params: CostParams,
    pub csv: Option<std::path::PathBuf>,
    pub seed: u64,
    pub exec: Execution,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.schemes.is_empty() || (self.domain == Domain::Dct && self.quants.is_empty()) {
            return Err(HarnessError::EmptyRun);
        }
        Ok(())
    }
}

/// Position qubits per axis for a pixel-domain encoding of `img`.
pub fn pixel_position_bits(img: &GrayImage) -> u8 {
    let side = img.width().max(img.height()).next_power_of_two();
    side.trailing_zeros() as u8
}

/// Pixel-domain data and layout: every nonzero pixel, addressed in full
/// image coordinates over a square `2^n × 2^n` space.
pub fn pixel_encoding(
    img: &GrayImage,
) -> Result<(Vec<encoders::EncodableDatum>, RegisterLayout), HarnessError> {
    let padded = img.pad_to_pow2(0);
    let layout = RegisterLayout::new(8, pixel_position_bits(&padded))?;
    Ok((image_data(&padded), layout))
}

/// Direct (untransformed, lossless) representation cost per scheme.
pub fn run_pixel_domain(
    img: &GrayImage,
    schemes: &[Scheme],
    params: &CostParams,
) -> Result<Vec<CostReport>, HarnessError> {
    let (data, layout) = pixel_encoding(img)?;
    let stats = count_nonzero(data.iter().map(|d| d.value));
    let extent = layout.extent() as u64;
    let inputs = CostInputs {
        stats,
        s_x: extent,
        s_y: extent,
        b_z: costmodel::zero_savings(&data, layout.n()),
        b_bpe: 0,
    };
    schemes
        .iter()
        .map(|&s| costmodel::total_bits(s, &inputs, params).map_err(HarnessError::from))
        .collect()
}

/// Quantized block coefficients of one image at one quantization factor.
#[derive(Debug, Clone)]
pub struct DctEncoding {
    pub quant: QuantSpec,
    pub rows: usize,
    pub cols: usize,
    pub blocks: Vec<CoeffBlock>,
    pub locations: BlockLocations,
    pub orig_width: usize,
    pub orig_height: usize,
}

impl DctEncoding {
    pub fn block(&self, row: usize, col: usize) -> &CoeffBlock {
        &self.blocks[row * self.cols + col]
    }

    pub fn b_bpe(&self) -> u64 {
        let l = &self.locations;
        bpe_bits(l.n_rb, l.n_cb, l.b_rbc, l.b_rbr)
    }
}

/// Pad, tile, transform and quantize.
pub fn forward_dct(
    img: &GrayImage,
    quant: QuantSpec,
    exec: Execution,
) -> Result<DctEncoding, HarnessError> {
    let padded = img.pad_for_blocks(0);
    let grid = split_blocks(&padded)?;
    let blocks = exec.map(&grid.tiles, |t| quantize(&dct8x8(t), quant));
    let locations = locate_blocks(&blocks, grid.rows, grid.cols);
    Ok(DctEncoding {
        quant,
        rows: grid.rows,
        cols: grid.cols,
        blocks,
        locations,
        orig_width: img.orig_width(),
        orig_height: img.orig_height(),
    })
}

/// Dequantize and inverse-transform every block, keeping the padded raster.
pub fn reconstruct_blocks(
    blocks: &[CoeffBlock],
    rows: usize,
    cols: usize,
    orig: (usize, usize),
    exec: Execution,
) -> GrayImage {
    let tiles = exec.map(blocks, |b| idct8x8(&dequantize(b)));
    BlockGrid { tiles, rows, cols }.join(orig.0, orig.1)
}

pub fn reconstruct(enc: &DctEncoding, exec: Execution) -> GrayImage {
    reconstruct_blocks(
        &enc.blocks,
        enc.rows,
        enc.cols,
        (enc.orig_width, enc.orig_height),
        exec,
    )
}

fn block_inputs(b: &CoeffBlock) -> CostInputs {
    let data = block_data(b);
    CostInputs {
        stats: count_nonzero(b.values.iter().copied()),
        s_x: BLOCK as u64,
        s_y: BLOCK as u64,
        b_z: costmodel::zero_savings(&data, 3),
        b_bpe: 0,
    }
}

/// Transform-domain cost: per-block reports summed, plus block addressing.
pub fn dct_cost(
    enc: &DctEncoding,
    scheme: Scheme,
    params: &CostParams,
    exec: Execution,
) -> Result<CostReport, HarnessError> {
    let per_block = exec.map(&enc.blocks, |b| {
        costmodel::total_bits(scheme, &block_inputs(b), params)
    });
    let mut total = CostReport::empty(scheme);
    total.s_x = BLOCK as u64;
    total.s_y = BLOCK as u64;
    for r in per_block {
        total.merge(&r?)?;
    }
    Ok(total.with_bpe(enc.b_bpe()))
}

/// Layout for one transform block: n = 3, q wide enough for its largest magnitude.
pub fn block_layout(b: &CoeffBlock) -> Result<RegisterLayout, HarnessError> {
    let max = b.values.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0);
    Ok(RegisterLayout::new(encoders::value_width(max), 3)?)
}

/// One circuit per nonzero block, in raster block order.
pub fn block_circuits(
    enc: &DctEncoding,
    scheme: Scheme,
    exec: Execution,
) -> Result<Vec<EncodedEntry>, HarnessError> {
    let addrs = &enc.locations.addresses;
    exec.map(addrs, |&(r, c)| -> Result<EncodedEntry, HarnessError> {
        let b = enc.block(r, c);
        let data = block_data(b);
        let circuit =
            build_circuit(&data, block_layout(b)?, scheme)?.with_source(format!("block:{r},{c}"));
        let negative = data
            .iter()
            .filter(|d| d.is_negative())
            .map(|d| (d.y, d.x))
            .collect();
        Ok(EncodedEntry {
            block: (r, c),
            negative,
            circuit,
        })
    })
    .into_iter()
    .collect()
}

/// Full transform-domain encoding of `img` into a circuit container.
pub fn encode_dct(
    img: &GrayImage,
    quant: QuantSpec,
    scheme: Scheme,
    exec: Execution,
) -> Result<EncodedImage, HarnessError> {
    let enc = forward_dct(img, quant, exec)?;
    Ok(EncodedImage {
        width: enc.cols * BLOCK,
        height: enc.rows * BLOCK,
        orig_width: enc.orig_width,
        orig_height: enc.orig_height,
        domain: Domain::Dct,
        quant: Some(quant),
        entries: block_circuits(&enc, scheme, exec)?,
    })
}

/// Pixel-domain encoding of `img` into a single-circuit container.
pub fn encode_pixels(img: &GrayImage, scheme: Scheme) -> Result<EncodedImage, HarnessError> {
    let padded = img.pad_to_pow2(0);
    let (data, layout) = pixel_encoding(&padded)?;
    let circuit = build_circuit(&data, layout, scheme)?.with_source("image");
    Ok(EncodedImage {
        width: padded.width(),
        height: padded.height(),
        orig_width: img.orig_width(),
        orig_height: img.orig_height(),
        domain: Domain::Pixel,
        quant: None,
        entries: vec![EncodedEntry {
            block: (0, 0),
            negative: Vec::new(),
            circuit,
        }],
    })
}

/// Rate-distortion points for every (scheme, Q) pair.
pub fn run_rd_curve(
    img: &GrayImage,
    image_id: &str,
    schemes: &[Scheme],
    quants: &[QuantSpec],
    params: &CostParams,
    exec: Execution,
) -> Result<Vec<RDPoint>, HarnessError> {
    if schemes.is_empty() || quants.is_empty() {
        return Err(HarnessError::EmptyRun);
    }
    let per_q = exec.map(quants, |&quant| -> Result<Vec<RDPoint>, HarnessError> {
        // Inner loops stay sequential when the sweep itself is parallel.
        let inner = Execution::Sequential;
        let enc = forward_dct(img, quant, inner)?;
        let recon = reconstruct(&enc, inner);
        let padded = img.pad_for_blocks(0);
        let psnr_db = blocktransform::psnr(&padded, &recon)?;
        schemes
            .iter()
            .map(|&scheme| {
                let report = dct_cost(&enc, scheme, params, inner)?;
                Ok(RDPoint {
                    scheme,
                    image: image_id.to_string(),
                    q: quant.get(),
                    bits_total: report.bits_total,
                    br_mb: report.br_mb(),
                    psnr_db,
                    report,
                })
            })
            .collect()
    });
    let mut out = Vec::new();
    for pts in per_q {
        out.extend(pts?);
    }
    Ok(out)
}

/// Qubit counts of each scheme for one register configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitComparison {
    pub q: u8,
    pub n: u8,
    /// `q + 2n + 1`; the auxiliary is allocated by every layout.
    pub zscneqr: usize,
    pub scmfrqi: usize,
    pub efrqi: usize,
    /// Qubits strict NEQR actually touches (`q + 2n`, no auxiliary).
    pub strict_active: usize,
}

impl QubitComparison {
    pub fn new(layout: RegisterLayout) -> Self {
        let total = layout.total();
        Self {
            q: layout.q(),
            n: layout.n(),
            zscneqr: total,
            scmfrqi: total,
            efrqi: total,
            strict_active: total - 1,
        }
    }

    /// Relative qubit saving of ZSCNEQR against `baseline` qubits.
    pub fn saving_vs(&self, baseline: usize) -> f64 {
        1.0 - self.zscneqr as f64 / baseline as f64
    }

    /// Baseline size at which ZSCNEQR would save `fraction` of the qubits.
    pub fn implied_baseline(&self, fraction: f64) -> f64 {
        self.zscneqr as f64 / (1.0 - fraction)
    }
}

/// Circuits of a container, for cost cross-checks.
pub fn circuits(img: &EncodedImage) -> impl Iterator<Item = &Circuit> {
    img.entries.iter().map(|e| &e.circuit)
}

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("{0} simulated maps for {1} circuits")]
    CountMismatch(usize, usize),
    #[error("block ({0}, {1}) lies outside the image")]
    BlockOutOfRange(usize, usize),
    #[error("dct container without a quantization factor")]
    MissingQuant,
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Rebuild the (cropped) image from per-entry simulated value maps.
pub fn decode_image(
    img: &EncodedImage,
    maps: &[BasisMap],
    exec: Execution,
) -> Result<GrayImage, DecodeError> {
    if maps.len() != img.entries.len() {
        return Err(DecodeError::CountMismatch(maps.len(), img.entries.len()));
    }
    match img.domain {
        Domain::Pixel => {
            let Some(map) = maps.first() else {
                return Ok(GrayImage::from_fn(img.width, img.height, |_, _| 0)
                    .with_original_size(img.orig_width, img.orig_height)
                    .crop_to_original());
            };
            Ok(decode_pixels(map, img.width, img.height)?
                .with_original_size(img.orig_width, img.orig_height)
                .crop_to_original())
        }
        Domain::Dct => {
            let quant = img.quant.ok_or(DecodeError::MissingQuant)?;
            let (rows, cols) = (img.height / BLOCK, img.width / BLOCK);
            let mut blocks = vec![
                CoeffBlock {
                    values: [0; BLOCK * BLOCK],
                    quant
                };
                rows * cols
            ];
            for (e, map) in img.entries.iter().zip(maps) {
                let (r, c) = e.block;
                if r >= rows || c >= cols {
                    return Err(DecodeError::BlockOutOfRange(r, c));
                }
                blocks[r * cols + c] = decode_block(map, &e.negative, quant)?;
            }
            Ok(
                reconstruct_blocks(&blocks, rows, cols, (img.orig_width, img.orig_height), exec)
                    .crop_to_original(),
            )
        }
    }
}
