use std::io;

use super::Domain;
use crate::costmodel::CostReport;
use crate::simulator::Mismatch;

pub const CSV_HEADER: [&str; 16] = [
    "scheme",
    "image",
    "domain",
    "Q",
    "N_tcn",
    "q_o",
    "S_bit",
    "B_T",
    "B_rg",
    "B_z",
    "B_s0",
    "A_bit",
    "B_BPE",
    "bits_total",
    "BR_MB",
    "psnr_db",
];

/// One CSV line. `q` is empty for pixel-domain rows; a missing or infinite
/// PSNR is written as `inf` (lossless).
#[derive(Debug, Clone)]
pub struct CsvRow<'a> {
    pub image: &'a str,
    pub domain: Domain,
    pub q: Option<u32>,
    pub report: &'a CostReport,
    pub psnr_db: Option<f64>,
}

fn fmt_psnr(p: Option<f64>) -> String {
    match p {
        Some(v) if v.is_finite() => format!("{v:.4}"),
        _ => "inf".to_string(),
    }
}

pub fn write_csv<'a, W: io::Write>(
    out: W,
    rows: impl IntoIterator<Item = CsvRow<'a>>,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        let r = row.report;
        w.write_record([
            r.scheme.name().to_string(),
            row.image.to_string(),
            row.domain.name().to_string(),
            row.q.map(|q| q.to_string()).unwrap_or_default(),
            r.n_tcn.to_string(),
            r.q_o.to_string(),
            r.s_bit.to_string(),
            r.b_t.to_string(),
            r.b_rg.to_string(),
            r.b_z.to_string(),
            r.b_s0.to_string(),
            r.a_bit.to_string(),
            r.b_bpe.to_string(),
            r.bits_total.to_string(),
            format!("{:.6}", r.br_mb()),
            fmt_psnr(row.psnr_db),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Decode mismatches, one line per position, tagged with the block they belong to.
pub fn write_mismatch_csv<W: io::Write>(
    out: W,
    rows: &[((usize, usize), Mismatch)],
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["block_row", "block_col", "y", "x", "expected", "decoded"])?;
    for ((r, c), m) in rows {
        w.write_record(
            [r, c, &m.y, &m.x]
                .map(|v| v.to_string())
                .into_iter()
                .chain([m.expected.to_string(), m.decoded.to_string()]),
        )?;
    }
    w.flush()?;
    Ok(())
}
