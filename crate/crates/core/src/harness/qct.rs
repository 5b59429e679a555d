//! Text container for an encoded image: image geometry, domain, and one
//! circuit per encoded region.
//!
//! ```text
//! QCT 1
//! IMAGE 512 512 512 512     # padded w h, original w h
//! DOMAIN dct
//! QUANT 32
//! CIRCUIT
//! BLOCK 0 0
//! NEG 0,1 2,3
//! QUBITS 15
//! LAYOUT q=8 n=3
//! ...
//! ```

use std::fmt::Write;

use thiserror::Error;

use super::Domain;
use crate::blocktransform::QuantSpec;
use crate::qcircuit::{strip_comment, write_gates, Circuit, CircuitParser, ParseErrorKind};

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedEntry {
    /// Block row and column; (0, 0) for a pixel-domain image.
    pub block: (usize, usize),
    /// Positions whose sign bit is set.
    pub negative: Vec<(usize, usize)>,
    pub circuit: Circuit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedImage {
    pub width: usize,
    pub height: usize,
    pub orig_width: usize,
    pub orig_height: usize,
    pub domain: Domain,
    pub quant: Option<QuantSpec>,
    pub entries: Vec<EncodedEntry>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QctError {
    #[error("line {line}: {msg}")]
    Header { line: usize, msg: String },
    #[error("line {line}: {kind}")]
    Circuit { line: usize, kind: ParseErrorKind },
}

impl EncodedImage {
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "QCT 1");
        let _ = writeln!(
            out,
            "IMAGE {} {} {} {}",
            self.width, self.height, self.orig_width, self.orig_height
        );
        let _ = writeln!(out, "DOMAIN {}", self.domain);
        if let Some(q) = self.quant {
            let _ = writeln!(out, "QUANT {}", q.get());
        }
        for e in &self.entries {
            let c = &e.circuit;
            let _ = writeln!(out, "CIRCUIT");
            if self.domain == Domain::Dct {
                let _ = writeln!(out, "BLOCK {} {}", e.block.0, e.block.1);
            }
            if !e.negative.is_empty() {
                out.push_str("NEG");
                for (y, x) in &e.negative {
                    let _ = write!(out, " {y},{x}");
                }
                out.push('\n');
            }
            let _ = writeln!(out, "QUBITS {}", c.layout().total());
            let _ = writeln!(out, "LAYOUT q={} n={}", c.layout().q(), c.layout().n());
            let _ = writeln!(out, "SCHEME {}", c.scheme());
            if !c.source().is_empty() {
                let _ = writeln!(out, "SOURCE {}", c.source());
            }
            write_gates(c, &mut out);
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, QctError> {
        struct Pending {
            block: (usize, usize),
            negative: Vec<(usize, usize)>,
            parser: CircuitParser,
            start: usize,
        }

        let mut image = None;
        let mut domain = None;
        let mut quant = None;
        let mut seen_magic = false;
        let mut entries = Vec::new();
        let mut pending: Option<Pending> = None;

        let finish = |p: Pending, entries: &mut Vec<EncodedEntry>| -> Result<(), QctError> {
            let circuit = p.parser.finish().map_err(|kind| QctError::Circuit {
                line: p.start,
                kind,
            })?;
            entries.push(EncodedEntry {
                block: p.block,
                negative: p.negative,
                circuit,
            });
            Ok(())
        };

        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = strip_comment(raw);
            if line.is_empty() {
                continue;
            }
            let header = |msg: &str| QctError::Header {
                line: line_no,
                msg: format!("{msg}: `{line}`"),
            };
            let mut parts = line.split_whitespace();
            let head = parts.next().unwrap_or("");
            let nums = |parts: std::str::SplitWhitespace| -> Option<Vec<usize>> {
                parts.map(|t| t.parse().ok()).collect()
            };
            if !seen_magic {
                if head != "QCT" || parts.next() != Some("1") {
                    return Err(header("expected `QCT 1`"));
                }
                seen_magic = true;
                continue;
            }
            match (head, pending.as_mut()) {
                ("CIRCUIT", _) => {
                    if let Some(p) = pending.take() {
                        finish(p, &mut entries)?;
                    }
                    pending = Some(Pending {
                        block: (0, 0),
                        negative: Vec::new(),
                        parser: CircuitParser::default(),
                        start: line_no,
                    });
                }
                ("IMAGE", None) => match nums(parts).as_deref() {
                    Some(&[w, h, ow, oh]) if ow <= w && oh <= h => image = Some((w, h, ow, oh)),
                    _ => return Err(header("IMAGE needs width height orig_width orig_height")),
                },
                ("DOMAIN", None) => {
                    domain = Some(
                        parts
                            .next()
                            .unwrap_or("")
                            .parse::<Domain>()
                            .map_err(|e| header(&e))?,
                    )
                }
                ("QUANT", None) => {
                    let q = parts
                        .next()
                        .and_then(|t| t.parse::<u32>().ok())
                        .and_then(|q| QuantSpec::new(q).ok())
                        .ok_or_else(|| header("QUANT needs a factor in 1..=255"))?;
                    quant = Some(q);
                }
                ("BLOCK", Some(p)) => match nums(parts).as_deref() {
                    Some(&[r, c]) => p.block = (r, c),
                    _ => return Err(header("BLOCK needs row col")),
                },
                ("NEG", Some(p)) => {
                    for tok in parts {
                        let pos = tok
                            .split_once(',')
                            .and_then(|(y, x)| Some((y.parse().ok()?, x.parse().ok()?)))
                            .ok_or_else(|| header("NEG entries are y,x"))?;
                        p.negative.push(pos);
                    }
                }
                (_, Some(p)) => p.parser.feed(line).map_err(|kind| QctError::Circuit {
                    line: line_no,
                    kind,
                })?,
                (_, None) => return Err(header("unexpected line before first CIRCUIT")),
            }
        }
        if let Some(p) = pending.take() {
            finish(p, &mut entries)?;
        }
        let eof = |msg: &str| QctError::Header {
            line: text.lines().count(),
            msg: msg.to_string(),
        };
        if !seen_magic {
            return Err(eof("empty container"));
        }
        let (width, height, orig_width, orig_height) = image.ok_or_else(|| eof("missing IMAGE"))?;
        let domain = domain.ok_or_else(|| eof("missing DOMAIN"))?;
        if domain == Domain::Dct && quant.is_none() {
            return Err(eof("dct container without QUANT"));
        }
        Ok(EncodedImage {
            width,
            height,
            orig_width,
            orig_height,
            domain,
            quant,
            entries,
        })
    }
}
