//! Connection-bit accounting for the four schemes.
//!
//! Per nonzero datum, a connection costs one bit per position control plus a
//! target constant `C_T`:
//!
//! ```text
//! B_T   = (log2 S_X + log2 S_Y + C_T) * N_tcn
//! B_rg  = R_N * N_tcn
//! B_z   = zero position bits over all data
//! B_s0  = B_T + B_rg - B_z
//! B_BPE = N_rb * N_cb * (B_rbc + B_rbr)
//! total = q_o + S_bit + B_s0 + A_bit + B_BPE
//! ```
//!
//! Comparators are priced with the same terms: EFRQI pays `2 * B_T` with no
//! reset and no zero discard, SCMFRQI pays `B_T + B_rg`. Strict NEQR pays one
//! full-width connection per set value bit and has no auxiliary.
//!
//! Megabit figures use a decimal divisor of 1000 * 1000.

use thiserror::Error;

use crate::encoders::{EncodableDatum, NonzeroStats, Scheme};
use crate::qcircuit::{Circuit, GateKind, Qubit};

pub const MEGABIT: f64 = 1_000_000.0;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CostError {
    #[error("position extent {0} is not a power of two")]
    NonPowerOfTwoExtent(u64),
    #[error("inconsistent inputs: B_T={b_t} + B_rg={b_rg} < B_z={b_z}")]
    NegativeConnectionBits { b_t: u64, b_rg: u64, b_z: u64 },
    #[error("cost config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("baseline report has zero bits")]
    ZeroBaseline,
    #[error("cannot merge a {0} report into a {1} report")]
    SchemeMismatch(Scheme, Scheme),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostParams {
    /// Toffoli target-connection bits per datum.
    pub c_t: u64,
    /// Reset connection bits per datum.
    pub r_n: u64,
    /// Auxiliary engagement bits per datum.
    pub a_bit_per_datum: u64,
}

impl Default for CostParams {
    fn default() -> Self {
        Self {
            c_t: 1,
            r_n: 1,
            a_bit_per_datum: 1,
        }
    }
}

impl CostParams {
    /// Parse `C_T=1`, `R_N=1`, `A_BIT=1` lines. Missing keys keep defaults.
    pub fn parse_config(text: &str) -> Result<Self, CostError> {
        let mut p = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| CostError::Config { line: i + 1, msg };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, got `{line}`")))?;
            let value: u64 = value
                .trim()
                .parse()
                .map_err(|_| err(format!("`{}` is not a non-negative integer", value.trim())))?;
            match key.trim() {
                "C_T" => p.c_t = value,
                "R_N" => p.r_n = value,
                "A_BIT" => p.a_bit_per_datum = value,
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        Ok(p)
    }

    pub fn to_config(&self) -> String {
        format!(
            "C_T={}\nR_N={}\nA_BIT={}\n",
            self.c_t, self.r_n, self.a_bit_per_datum
        )
    }
}

fn log2_extent(extent: u64) -> Result<u64, CostError> {
    if extent == 0 || !extent.is_power_of_two() {
        return Err(CostError::NonPowerOfTwoExtent(extent));
    }
    Ok(extent.trailing_zeros() as u64)
}

pub fn toffoli_bits(s_x: u64, s_y: u64, params: &CostParams, n_tcn: u64) -> Result<u64, CostError> {
    Ok((log2_extent(s_x)? + log2_extent(s_y)? + params.c_t) * n_tcn)
}

pub fn reset_bits(params: &CostParams, n_tcn: u64) -> u64 {
    params.r_n * n_tcn
}

/// One saved connection per zero bit of each datum's n-bit (y, x) expansion.
pub fn zero_savings(data: &[EncodableDatum], n: u8) -> u64 {
    data.iter()
        .filter(|d| d.value != 0)
        .map(|d| d.zero_position_bits(n) as u64)
        .sum()
}

pub fn bpe_bits(n_rb: u64, n_cb: u64, b_rbc: u64, b_rbr: u64) -> u64 {
    n_rb * n_cb * (b_rbc + b_rbr)
}

/// Everything one encoding run contributes to a report.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CostInputs {
    pub stats: NonzeroStats,
    /// Per-axis position extents of the addressed space.
    pub s_x: u64,
    pub s_y: u64,
    pub b_z: u64,
    pub b_bpe: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostReport {
    pub scheme: Scheme,
    pub n_tcn: u64,
    pub q_o: u64,
    pub s_bit: u64,
    pub s_x: u64,
    pub s_y: u64,
    pub b_t: u64,
    pub b_rg: u64,
    pub b_z: u64,
    pub b_s0: u64,
    pub a_bit: u64,
    pub b_bpe: u64,
    pub bits_total: u64,
}

impl CostReport {
    pub fn empty(scheme: Scheme) -> Self {
        Self {
            scheme,
            n_tcn: 0,
            q_o: 0,
            s_bit: 0,
            s_x: 0,
            s_y: 0,
            b_t: 0,
            b_rg: 0,
            b_z: 0,
            b_s0: 0,
            a_bit: 0,
            b_bpe: 0,
            bits_total: 0,
        }
    }

    /// Total in megabits.
    pub fn br_mb(&self) -> f64 {
        self.bits_total as f64 / MEGABIT
    }

    /// Field-wise sum. Extents are echoed from whichever side has them.
    pub fn merge(&mut self, o: &CostReport) -> Result<(), CostError> {
        if o.scheme != self.scheme {
            return Err(CostError::SchemeMismatch(o.scheme, self.scheme));
        }
        self.n_tcn += o.n_tcn;
        self.q_o += o.q_o;
        self.s_bit += o.s_bit;
        self.b_t += o.b_t;
        self.b_rg += o.b_rg;
        self.b_z += o.b_z;
        self.b_s0 += o.b_s0;
        self.a_bit += o.a_bit;
        self.b_bpe += o.b_bpe;
        self.bits_total += o.bits_total;
        self.s_x = self.s_x.max(o.s_x);
        self.s_y = self.s_y.max(o.s_y);
        Ok(())
    }

    /// Add classical block-position bits after per-block accumulation.
    pub fn with_bpe(mut self, b_bpe: u64) -> Self {
        self.bits_total += b_bpe;
        self.b_bpe += b_bpe;
        self
    }
}

pub fn total_bits(
    scheme: Scheme,
    inputs: &CostInputs,
    params: &CostParams,
) -> Result<CostReport, CostError> {
    let NonzeroStats { n_tcn, q_o, s_bit } = inputs.stats;
    let (b_t, b_rg, b_z, b_s0, a_bit) = match scheme {
        Scheme::Zscneqr => {
            let b_t = toffoli_bits(inputs.s_x, inputs.s_y, params, n_tcn)?;
            let b_rg = reset_bits(params, n_tcn);
            let b_z = inputs.b_z;
            let b_s0 = (b_t + b_rg)
                .checked_sub(b_z)
                .ok_or(CostError::NegativeConnectionBits { b_t, b_rg, b_z })?;
            (b_t, b_rg, b_z, b_s0, params.a_bit_per_datum * n_tcn)
        }
        Scheme::Scmfrqi => {
            let b_t = toffoli_bits(inputs.s_x, inputs.s_y, params, n_tcn)?;
            let b_rg = reset_bits(params, n_tcn);
            (b_t, b_rg, 0, b_t + b_rg, params.a_bit_per_datum * n_tcn)
        }
        Scheme::Efrqi => {
            let b_t = toffoli_bits(inputs.s_x, inputs.s_y, params, n_tcn)?;
            (b_t, 0, 0, 2 * b_t, params.a_bit_per_datum * n_tcn)
        }
        Scheme::StrictNeqr => {
            let b_t = toffoli_bits(inputs.s_x, inputs.s_y, params, q_o)?;
            (b_t, 0, 0, b_t, 0)
        }
    };
    Ok(CostReport {
        scheme,
        n_tcn,
        q_o,
        s_bit,
        s_x: inputs.s_x,
        s_y: inputs.s_y,
        b_t,
        b_rg,
        b_z,
        b_s0,
        a_bit,
        b_bpe: inputs.b_bpe,
        bits_total: q_o + s_bit + b_s0 + a_bit + inputs.b_bpe,
    })
}

/// `b / a`, read as "b : 1 relative to a".
pub fn compression_ratio(a: &CostReport, b: &CostReport) -> Result<f64, CostError> {
    if a.bits_total == 0 {
        return Err(CostError::ZeroBaseline);
    }
    Ok(b.bits_total as f64 / a.bits_total as f64)
}

/// Connection bits tallied from gate lists: every connection gate (onto the
/// auxiliary, or straight onto a value qubit from position controls) costs
/// its position-control terminals plus `C_T`; every reset costs `R_N`.
pub fn gate_connection_bits<'a>(
    circuits: impl IntoIterator<Item = &'a Circuit>,
    params: &CostParams,
) -> u64 {
    let mut bits = 0;
    for c in circuits {
        for g in c.gates() {
            let position_terminals = g
                .controls
                .iter()
                .filter(|ctl| ctl.qubit.is_position())
                .count() as u64;
            match (g.kind, g.target) {
                (GateKind::Mcx | GateKind::PauliX, Qubit::Aux) => {
                    bits += position_terminals + params.c_t
                }
                (GateKind::Mcx, Qubit::Value(_)) if position_terminals > 0 => {
                    bits += position_terminals + params.c_t
                }
                (GateKind::Reset, _) => bits += params.r_n,
                _ => {}
            }
        }
    }
    bits
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrossCheck {
    pub formula: u64,
    pub gate_list: u64,
}

impl CrossCheck {
    pub fn agrees(&self) -> bool {
        self.formula == self.gate_list
    }
}

/// Compare a report's `B_s0` with the connection bits of the circuits it priced.
pub fn cross_check<'a>(
    circuits: impl IntoIterator<Item = &'a Circuit>,
    report: &CostReport,
    params: &CostParams,
) -> CrossCheck {
    CrossCheck {
        formula: report.b_s0,
        gate_list: gate_connection_bits(circuits, params),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toffoli_examples() {
        let p = CostParams::default();
        assert_eq!(toffoli_bits(8, 8, &p, 5).unwrap(), 35);
        assert_eq!(toffoli_bits(8, 8, &p, 0).unwrap(), 0);
        assert_eq!(toffoli_bits(512, 512, &p, 1).unwrap(), 19);
        assert_eq!(
            toffoli_bits(6, 8, &p, 1),
            Err(CostError::NonPowerOfTwoExtent(6))
        );
    }

    #[test]
    fn reset_examples() {
        let p = CostParams::default();
        assert_eq!(reset_bits(&p, 5), 5);
        assert_eq!(reset_bits(&p, 0), 0);
        let p2 = CostParams { r_n: 2, ..p };
        assert_eq!(reset_bits(&p2, 3), 6);
    }

    #[test]
    fn zero_savings_examples() {
        assert_eq!(zero_savings(&[EncodableDatum::new(9, 0, 0)], 3), 6);
        assert_eq!(zero_savings(&[EncodableDatum::new(9, 3, 0)], 3), 4);
        assert_eq!(zero_savings(&[EncodableDatum::new(9, 7, 7)], 3), 0);
    }

    #[test]
    fn total_examples() {
        let p = CostParams::default();
        let inputs = CostInputs {
            stats: NonzeroStats {
                n_tcn: 5,
                q_o: 10,
                s_bit: 5,
            },
            s_x: 8,
            s_y: 8,
            b_z: 18,
            b_bpe: 0,
        };
        let r = total_bits(Scheme::Zscneqr, &inputs, &p).unwrap();
        assert_eq!((r.b_t, r.b_rg, r.b_s0, r.a_bit), (35, 5, 22, 5));
        assert_eq!(r.bits_total, 42);
        assert!((r.br_mb() - 42e-6).abs() < 1e-15);

        let zero = total_bits(
            Scheme::Zscneqr,
            &CostInputs {
                s_x: 8,
                s_y: 8,
                ..Default::default()
            },
            &p,
        )
        .unwrap();
        assert_eq!(zero.br_mb(), 0.0);
    }

    #[test]
    fn inconsistent_zero_savings_rejected() {
        let inputs = CostInputs {
            stats: NonzeroStats {
                n_tcn: 1,
                q_o: 1,
                s_bit: 1,
            },
            s_x: 8,
            s_y: 8,
            b_z: 100,
            b_bpe: 0,
        };
        assert!(matches!(
            total_bits(Scheme::Zscneqr, &inputs, &CostParams::default()),
            Err(CostError::NegativeConnectionBits { .. })
        ));
    }

    #[test]
    fn bpe_examples() {
        assert_eq!(bpe_bits(0, 0, 0, 0), 0);
        assert_eq!(bpe_bits(2, 2, 1, 1), 8);
        assert_eq!(bpe_bits(64, 64, 6, 6), 49152);
    }

    #[test]
    fn config_parsing() {
        let p = CostParams::parse_config("# constants\nC_T=2\n R_N = 3 \nA_BIT=0\n").unwrap();
        assert_eq!(
            p,
            CostParams {
                c_t: 2,
                r_n: 3,
                a_bit_per_datum: 0
            }
        );
        assert_eq!(CostParams::parse_config(&p.to_config()).unwrap(), p);
        assert_eq!(CostParams::parse_config("").unwrap(), CostParams::default());
        assert!(matches!(
            CostParams::parse_config("C_T=1\nFOO=2"),
            Err(CostError::Config { line: 2, .. })
        ));
        assert!(CostParams::parse_config("C_T=-1").is_err());
        assert!(CostParams::parse_config("C_T").is_err());
    }

    #[test]
    fn ratios() {
        let mut a = CostReport::empty(Scheme::Zscneqr);
        a.bits_total = 100;
        let mut b = CostReport::empty(Scheme::Efrqi);
        b.bits_total = 444;
        assert!((compression_ratio(&a, &b).unwrap() - 4.44).abs() < 1e-12);
        assert_eq!(compression_ratio(&a, &a).unwrap(), 1.0);
        assert_eq!(
            compression_ratio(&CostReport::empty(Scheme::Zscneqr), &b),
            Err(CostError::ZeroBaseline)
        );
    }
}
