//! Quantum image circuit workbench.
//!
//! Compiles grayscale images, or their quantized 8×8 block-DCT coefficients,
//! into gate-level circuits under four NEQR-family representation schemes
//! (strict NEQR, EFRQI, SCMFRQI and ZSCNEQR), prices them with a bit-level
//! connection cost model, checks encoding semantics by simulation, and
//! produces rate-distortion points for comparing the schemes.
//!
//! Module map:
//!
//! * [`pixelgrid`]: PGM I/O, power-of-two padding, 8×8 tiling.
//! * [`blocktransform`]: orthonormal DCT-II, scalar quantizer, PSNR.
//! * [`qcircuit`]: register layout, gate IR and its text format.
//! * [`encoders`]: scheme-specific gate emission and datum statistics.
//! * [`costmodel`]: connection-bit accounting and the gate-list cross-check.
//! * [`simulator`]: basis-state truth-table and statevector simulators.
//! * [`harness`]: end-to-end pixel and transform-domain runs, CSV output.
//!
//! Data-parallel loops (per block, per position branch, per quantizer step)
//! run on rayon when the `parallel` feature is enabled, which it is by
//! default. See [`Execution`].

pub mod blocktransform;
pub mod costmodel;
pub mod encoders;
pub mod harness;
pub mod par;
pub mod pixelgrid;
pub mod qcircuit;
pub mod simulator;

pub use par::Execution;
