use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::fixed::Format;
use crate::model::WeightKind;

/// Configuration and datapath errors.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid fixed-point format: {frac_bits} fraction bits in {total_bits} total bits")]
    InvalidFormat { frac_bits: u8, total_bits: u8 },

    #[error("value {value} does not fit fixed-point format {format:?}")]
    Overflow { value: f64, format: Format },

    #[error("synapse index {index} out of range for fan-in {fan_in}")]
    SynapseOutOfRange { index: u32, fan_in: usize },

    #[error("weight matrix {rows}x{cols} expects {expected} values, got {actual}")]
    WeightShape {
        rows: usize,
        cols: usize,
        expected: usize,
        actual: usize,
    },

    #[error("illegal {kind:?} weight {value} at row {row}, col {col}")]
    IllegalWeight {
        kind: WeightKind,
        row: usize,
        col: usize,
        value: i32,
    },

    #[error("unsupported weight width {0} bits (expected 8 or 16)")]
    WeightBits(u8),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("patch size {patch} invalid for image side {side}")]
    PatchSize { patch: usize, side: usize },

    #[error("threshold must encode exactly 1.0, got raw {raw} in {format:?}")]
    Threshold { raw: i32, format: Format },

    #[error(transparent)]
    WeightFile(#[from] WeightFileError),

    #[error(transparent)]
    Idx(#[from] IdxError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

/// Errors raised while parsing a `DTSN` weight file. Every variant names the
/// byte offset where the problem was detected.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum WeightFileError {
    #[error("bad magic {found:02x?} at offset 0 (expected \"DTSN\")")]
    BadMagic { found: Vec<u8> },

    #[error("unsupported version {version} at offset 4")]
    Version { version: u16 },

    #[error("size mismatch: expected {expected} bytes, file has {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("CRC mismatch at offset {offset}: stored {stored:#010x}, computed {computed:#010x}")]
    Crc {
        offset: usize,
        stored: u32,
        computed: u32,
    },

    #[error("layer {layer}: unknown weight kind {kind} at offset {offset}")]
    Kind {
        layer: usize,
        kind: u8,
        offset: usize,
    },

    #[error("layer {layer}: unsupported weight width {bits} at offset {offset}")]
    Width {
        layer: usize,
        bits: u8,
        offset: usize,
    },

    #[error(
        "layer {layer}: frac_bits {frac_bits} >= weight_bits {weight_bits} at offset {offset}"
    )]
    FracBits {
        layer: usize,
        frac_bits: u8,
        weight_bits: u8,
        offset: usize,
    },

    #[error("layer {layer}: shape chain break, in_count {in_count} != previous out_count {prev_out} at offset {offset}")]
    ShapeChain {
        layer: usize,
        in_count: usize,
        prev_out: usize,
        offset: usize,
    },

    #[error("layer {layer}: illegal value {value} at row {row}, col {col} (offset {offset})")]
    IllegalValue {
        layer: usize,
        row: usize,
        col: usize,
        value: i32,
        offset: usize,
    },

    #[error("file declares no layers")]
    Empty,
}

/// Errors raised while parsing IDX (MNIST) files.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum IdxError {
    #[error("{file}: bad magic {found:#010x}, expected {expected:#010x}")]
    BadMagic {
        file: &'static str,
        found: u32,
        expected: u32,
    },

    #[error("{file}: truncated, expected {expected} bytes, got {actual}")]
    Truncated {
        file: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("image count {images} != label count {labels}")]
    CountMismatch { images: usize, labels: usize },

    #[error("images are {rows}x{cols}, expected square images")]
    NotSquare { rows: usize, cols: usize },

    #[error("label {value} at index {index} is out of range 0..=9")]
    Label { index: usize, value: u8 },
}
