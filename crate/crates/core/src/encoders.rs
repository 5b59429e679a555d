//! Circuit emission for the four representation schemes.
//!
//! Every circuit opens with one Hadamard per position qubit. Each nonzero
//! datum then gets a position-addressed connection followed by one write per
//! set bit of its magnitude:
//!
//! * strict NEQR: one MCX per set value bit, controlled on all `2n` position
//!   qubits (open controls for zero bits), no auxiliary qubit.
//! * EFRQI: X-conjugated all-closed MCX onto `aux`, `CX(aux → v_i)` per set
//!   bit, then the same conjugated MCX again to uncompute `aux`.
//! * SCMFRQI: as EFRQI, with the uncompute replaced by `RESET aux`.
//! * ZSCNEQR: as SCMFRQI, but the aux MCX keeps only the controls whose
//!   position bit is 1. At position (0, 0) no controls remain and the
//!   connection becomes an uncontrolled `X aux`.
//!
//! Signs never enter the circuit; they are carried classically (one sign bit
//! per datum in the cost model).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::blocktransform::CoeffBlock;
use crate::pixelgrid::{GrayImage, BLOCK};
use crate::qcircuit::{
    Circuit, CircuitError, Control, Gate, GateKind, Polarity, Qubit, RegisterLayout,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    StrictNeqr,
    Efrqi,
    Scmfrqi,
    Zscneqr,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::StrictNeqr,
        Scheme::Efrqi,
        Scheme::Scmfrqi,
        Scheme::Zscneqr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::StrictNeqr => "strict-neqr",
            Scheme::Efrqi => "efrqi",
            Scheme::Scmfrqi => "scmfrqi",
            Scheme::Zscneqr => "zscneqr",
        }
    }

    /// Whether the scheme routes connections through the auxiliary qubit.
    pub fn uses_aux(self) -> bool {
        self != Scheme::StrictNeqr
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown scheme `{0}` (expected strict-neqr, efrqi, scmfrqi or zscneqr)")]
pub struct UnknownScheme(pub String);

impl FromStr for Scheme {
    type Err = UnknownScheme;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "strict-neqr" | "strict" | "neqr" | "strictneqr" => Ok(Scheme::StrictNeqr),
            "efrqi" => Ok(Scheme::Efrqi),
            "scmfrqi" | "scmefrqi" => Ok(Scheme::Scmfrqi),
            "zscneqr" => Ok(Scheme::Zscneqr),
            _ => Err(UnknownScheme(s.to_string())),
        }
    }
}

/// One nonzero pixel or coefficient with its position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EncodableDatum {
    pub value: i32,
    pub y: usize,
    pub x: usize,
}

impl EncodableDatum {
    pub fn new(value: i32, y: usize, x: usize) -> Self {
        Self { value, y, x }
    }

    pub fn magnitude(&self) -> u32 {
        self.value.unsigned_abs()
    }

    pub fn is_negative(&self) -> bool {
        self.value < 0
    }

    /// Number of 0 bits across the n-bit expansions of y and x.
    pub fn zero_position_bits(&self, n: u8) -> u32 {
        2 * n as u32 - self.one_position_bits()
    }

    pub fn one_position_bits(&self) -> u32 {
        self.y.count_ones() + self.x.count_ones()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodeError {
    #[error("value {value} does not fit in {q} value qubits")]
    MagnitudeTooLarge { value: i32, q: u8 },
    #[error("position (y={y}, x={x}) outside a {extent}x{extent} address space")]
    PositionOutOfRange { y: usize, x: usize, extent: usize },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// Value qubits needed for `max_magnitude`, never fewer than 8.
pub fn value_width(max_magnitude: u32) -> u8 {
    (32 - max_magnitude.leading_zeros()).max(8) as u8
}

fn position_qubits(layout: &RegisterLayout) -> impl Iterator<Item = Qubit> {
    let n = layout.n();
    (0..n).map(Qubit::PosY).chain((0..n).map(Qubit::PosX))
}

fn position_bit(d: &EncodableDatum, qb: Qubit) -> bool {
    match qb {
        Qubit::PosY(i) => (d.y >> i) & 1 == 1,
        Qubit::PosX(i) => (d.x >> i) & 1 == 1,
        _ => unreachable!("not a position qubit"),
    }
}

/// The Hadamard prefix shared by every scheme.
pub fn preparation(layout: RegisterLayout, scheme: Scheme) -> Circuit {
    let mut c = Circuit::new(layout, scheme.name());
    for qb in position_qubits(&layout) {
        c.push(Gate::h(qb)).expect("position qubit in layout");
    }
    c
}

/// Emit the circuit for `data` under `scheme`. Zero-valued data are skipped.
pub fn build_circuit(
    data: &[EncodableDatum],
    layout: RegisterLayout,
    scheme: Scheme,
) -> Result<Circuit, EncodeError> {
    let mut c = preparation(layout, scheme);
    let extent = layout.extent();
    for d in data {
        if d.y >= extent || d.x >= extent {
            return Err(EncodeError::PositionOutOfRange {
                y: d.y,
                x: d.x,
                extent,
            });
        }
        if layout.q() < 32 && d.magnitude() >> layout.q() != 0 {
            return Err(EncodeError::MagnitudeTooLarge {
                value: d.value,
                q: layout.q(),
            });
        }
        if d.value != 0 {
            emit_datum(&mut c, &layout, d, scheme)?;
        }
    }
    Ok(c)
}

fn emit_datum(
    c: &mut Circuit,
    layout: &RegisterLayout,
    d: &EncodableDatum,
    scheme: Scheme,
) -> Result<(), CircuitError> {
    let m = d.magnitude();
    let set_bits: Vec<u8> = (0..layout.q()).filter(|i| (m >> i) & 1 == 1).collect();
    let zeros: Vec<Qubit> = position_qubits(layout)
        .filter(|&qb| !position_bit(d, qb))
        .collect();

    let conjugate = |c: &mut Circuit| -> Result<(), CircuitError> {
        for &qb in &zeros {
            c.push(Gate::x(qb))?;
        }
        Ok(())
    };
    // All-closed connection onto aux, valid once zero bits are conjugated.
    let full_connect = |c: &mut Circuit| -> Result<(), CircuitError> {
        let controls: Vec<Control> = position_qubits(layout).map(Control::closed).collect();
        if controls.is_empty() {
            c.push(Gate::x(Qubit::Aux))
        } else {
            c.push(Gate::mcx(controls, Qubit::Aux))
        }
    };
    let write_value = |c: &mut Circuit| -> Result<(), CircuitError> {
        for &i in &set_bits {
            c.push(Gate::cx(Qubit::Aux, Qubit::Value(i)))?;
        }
        Ok(())
    };

    match scheme {
        Scheme::StrictNeqr => {
            let controls: Vec<Control> = position_qubits(layout)
                .map(|qb| {
                    if position_bit(d, qb) {
                        Control::closed(qb)
                    } else {
                        Control::open(qb)
                    }
                })
                .collect();
            for &i in &set_bits {
                if controls.is_empty() {
                    c.push(Gate::x(Qubit::Value(i)))?;
                } else {
                    c.push(Gate::mcx(controls.clone(), Qubit::Value(i)))?;
                }
            }
        }
        Scheme::Efrqi => {
            conjugate(c)?;
            full_connect(c)?;
            conjugate(c)?;
            write_value(c)?;
            conjugate(c)?;
            full_connect(c)?;
            conjugate(c)?;
        }
        Scheme::Scmfrqi => {
            conjugate(c)?;
            full_connect(c)?;
            conjugate(c)?;
            write_value(c)?;
            c.push(Gate::reset(Qubit::Aux))?;
        }
        Scheme::Zscneqr => {
            let ones: Vec<Control> = position_qubits(layout)
                .filter(|&qb| position_bit(d, qb))
                .map(Control::closed)
                .collect();
            if ones.is_empty() {
                c.push(Gate::x(Qubit::Aux))?;
            } else {
                c.push(Gate::mcx(ones, Qubit::Aux))?;
            }
            write_value(c)?;
            c.push(Gate::reset(Qubit::Aux))?;
        }
    }
    Ok(())
}

/// Per-datum totals that feed the cost model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NonzeroStats {
    /// Nonzero data.
    pub n_tcn: u64,
    /// Set bits across all nonzero magnitudes.
    pub q_o: u64,
    /// One sign bit per nonzero datum.
    pub s_bit: u64,
}

impl std::ops::Add for NonzeroStats {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            n_tcn: self.n_tcn + o.n_tcn,
            q_o: self.q_o + o.q_o,
            s_bit: self.s_bit + o.s_bit,
        }
    }
}

impl std::iter::Sum for NonzeroStats {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), |a, b| a + b)
    }
}

pub fn count_nonzero(values: impl IntoIterator<Item = i32>) -> NonzeroStats {
    let mut s = NonzeroStats::default();
    for v in values.into_iter().filter(|&v| v != 0) {
        s.n_tcn += 1;
        s.q_o += v.unsigned_abs().count_ones() as u64;
    }
    s.s_bit = s.n_tcn;
    s
}

pub fn count_nonzero_blocks(blocks: &[CoeffBlock]) -> NonzeroStats {
    blocks
        .iter()
        .map(|b| count_nonzero(b.values.iter().copied()))
        .sum()
}

/// Nonzero coefficients of one block in raster order, positions within the block.
pub fn block_data(cb: &CoeffBlock) -> Vec<EncodableDatum> {
    cb.values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0)
        .map(|(i, &v)| EncodableDatum::new(v, i / BLOCK, i % BLOCK))
        .collect()
}

/// Nonzero pixels in raster order, positions in full image coordinates.
pub fn image_data(img: &GrayImage) -> Vec<EncodableDatum> {
    let w = img.width();
    img.samples()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0)
        .map(|(i, &v)| EncodableDatum::new(v as i32, i / w, i % w))
        .collect()
}

/// Classical block addressing for data outside the first block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockLocations {
    /// Block rows holding a nonzero block other than (0, 0).
    pub n_rb: u64,
    /// Block columns holding a nonzero block other than (0, 0).
    pub n_cb: u64,
    /// Row address width, `ceil(log2(rows))`.
    pub b_rbr: u64,
    /// Column address width, `ceil(log2(cols))`.
    pub b_rbc: u64,
    /// (row, col) of every block carrying at least one nonzero coefficient.
    pub addresses: Vec<(usize, usize)>,
}

fn ceil_log2(v: usize) -> u64 {
    if v <= 1 {
        0
    } else {
        (usize::BITS - (v - 1).leading_zeros()) as u64
    }
}

/// `blocks` in raster block order, `rows × cols` of them.
pub fn locate_blocks(blocks: &[CoeffBlock], rows: usize, cols: usize) -> BlockLocations {
    debug_assert_eq!(blocks.len(), rows * cols);
    let addresses: Vec<(usize, usize)> = blocks
        .iter()
        .enumerate()
        .filter(|(_, b)| !b.is_zero())
        .map(|(i, _)| (i / cols, i % cols))
        .collect();
    let mut row_seen = vec![false; rows];
    let mut col_seen = vec![false; cols];
    for &(r, c) in addresses.iter().filter(|&&a| a != (0, 0)) {
        row_seen[r] = true;
        col_seen[c] = true;
    }
    BlockLocations {
        n_rb: row_seen.iter().filter(|&&s| s).count() as u64,
        n_cb: col_seen.iter().filter(|&&s| s).count() as u64,
        b_rbr: ceil_log2(rows),
        b_rbc: ceil_log2(cols),
        addresses,
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExtractError {
    #[error("gate {index}: value write with no active auxiliary connection")]
    DanglingWrite { index: usize },
    #[error("gate {index}: structure not produced by any supported scheme")]
    Unrecognized { index: usize },
}

/// Recover the intended (position, magnitude) data from a circuit's gate
/// structure alone, without simulating it.
///
/// The connection gate of each datum names its position: closed controls on
/// X-conjugated qubits mean 0, closed controls elsewhere mean 1, open
/// controls mean 0 and, for ZSCNEQR, absent controls mean 0.
pub fn extract_data(c: &Circuit) -> Result<Vec<EncodableDatum>, ExtractError> {
    let layout = *c.layout();
    let mut flipped: u64 = 0;
    let bit_of = |qb: Qubit| 1u64 << layout.index(qb);
    let mut acc: BTreeMap<(usize, usize), u32> = BTreeMap::new();
    let mut active: Option<(usize, usize)> = None;

    let decode_position = |controls: &[Control], flipped: u64| -> Option<(usize, usize)> {
        let (mut y, mut x) = (0usize, 0usize);
        for ctl in controls {
            let mut one = ctl.polarity == Polarity::Closed;
            if flipped & bit_of(ctl.qubit) != 0 {
                one = !one;
            }
            match (ctl.qubit, one) {
                (Qubit::PosY(i), true) => y |= 1 << i,
                (Qubit::PosX(i), true) => x |= 1 << i,
                (Qubit::PosY(_) | Qubit::PosX(_), false) => {}
                _ => return None,
            }
        }
        Some((y, x))
    };

    for (index, g) in c.gates().iter().enumerate() {
        match (g.kind, g.target) {
            (GateKind::Hadamard | GateKind::Identity, _) => {}
            (GateKind::PauliX, qb) if qb.is_position() => flipped ^= bit_of(qb),
            (GateKind::PauliX, Qubit::Aux) => {
                active = match active {
                    Some(_) => None,
                    None => Some((0, 0)),
                };
            }
            (GateKind::PauliX, Qubit::Value(i)) => {
                *acc.entry((0, 0)).or_default() ^= 1 << i;
            }
            (GateKind::Mcx, Qubit::Aux) => {
                let pos = decode_position(&g.controls, flipped)
                    .ok_or(ExtractError::Unrecognized { index })?;
                active = match active {
                    Some(p) if p == pos => None,
                    Some(_) => return Err(ExtractError::Unrecognized { index }),
                    None => Some(pos),
                };
            }
            (GateKind::Mcx, Qubit::Value(i)) => {
                if g.controls.len() == 1 && g.controls[0].qubit == Qubit::Aux {
                    let pos = active.ok_or(ExtractError::DanglingWrite { index })?;
                    *acc.entry(pos).or_default() ^= 1 << i;
                } else {
                    let pos = decode_position(&g.controls, flipped)
                        .ok_or(ExtractError::Unrecognized { index })?;
                    *acc.entry(pos).or_default() ^= 1 << i;
                }
            }
            (GateKind::Reset, Qubit::Aux) => active = None,
            _ => return Err(ExtractError::Unrecognized { index }),
        }
    }
    Ok(acc
        .into_iter()
        .filter(|&(_, v)| v != 0)
        .map(|((y, x), v)| EncodableDatum::new(v as i32, y, x))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocktransform::QuantSpec;
    use crate::qcircuit::serialize;

    fn body(c: &Circuit) -> Vec<String> {
        let n = c.layout().n() as usize;
        serialize(c)
            .lines()
            .skip(3 + 2 * n)
            .map(String::from)
            .collect()
    }

    fn l83() -> RegisterLayout {
        RegisterLayout::new(8, 3).unwrap()
    }

    #[test]
    fn zscneqr_pixel_125_at_origin() {
        let c = build_circuit(&[EncodableDatum::new(125, 0, 0)], l83(), Scheme::Zscneqr).unwrap();
        assert_eq!(
            body(&c),
            [
                "X aux",
                "MCX +aux v0",
                "MCX +aux v2",
                "MCX +aux v3",
                "MCX +aux v4",
                "MCX +aux v5",
                "MCX +aux v6",
                "RESET aux"
            ]
        );
        assert_eq!(c.unconditional_aux_flips(), 1);
    }

    #[test]
    fn zscneqr_pixel_16_at_y3() {
        let c = build_circuit(&[EncodableDatum::new(16, 3, 0)], l83(), Scheme::Zscneqr).unwrap();
        assert_eq!(body(&c), ["MCX +y0 +y1 aux", "MCX +aux v4", "RESET aux"]);
    }

    #[test]
    fn efrqi_connection_appears_twice_conjugated() {
        let c = build_circuit(&[EncodableDatum::new(16, 3, 0)], l83(), Scheme::Efrqi).unwrap();
        let conj = ["X y2", "X x0", "X x1", "X x2"];
        let mcx = "MCX +y0 +y1 +y2 +x0 +x1 +x2 aux";
        let mut expected: Vec<&str> = Vec::new();
        expected.extend(conj);
        expected.push(mcx);
        expected.extend(conj);
        expected.push("MCX +aux v4");
        expected.extend(conj);
        expected.push(mcx);
        expected.extend(conj);
        assert_eq!(body(&c), expected);
    }

    #[test]
    fn scmfrqi_resets_instead_of_uncomputing() {
        let c = build_circuit(&[EncodableDatum::new(1, 1, 0)], l83(), Scheme::Scmfrqi).unwrap();
        let b = body(&c);
        assert_eq!(b.last().unwrap(), "RESET aux");
        assert_eq!(
            b.iter()
                .filter(|l| l.ends_with(" aux") && l.starts_with("MCX"))
                .count(),
            1
        );
    }

    #[test]
    fn strict_uses_open_controls() {
        let c = build_circuit(&[EncodableDatum::new(5, 1, 2)], l83(), Scheme::StrictNeqr).unwrap();
        assert_eq!(
            body(&c),
            [
                "MCX +y0 -y1 -y2 -x0 +x1 -x2 v0",
                "MCX +y0 -y1 -y2 -x0 +x1 -x2 v2"
            ]
        );
    }

    #[test]
    fn prefix_and_budget() {
        for s in Scheme::ALL {
            let c = build_circuit(&[EncodableDatum::new(3, 2, 5)], l83(), s).unwrap();
            assert_eq!(c.layout().total(), 15);
            assert!(c.gates()[..6].iter().all(|g| g.kind == GateKind::Hadamard));
            assert!(c.gates()[6..].iter().all(|g| g.kind != GateKind::Hadamard));
        }
    }

    #[test]
    fn encode_errors() {
        assert_eq!(
            build_circuit(&[EncodableDatum::new(256, 0, 0)], l83(), Scheme::Zscneqr),
            Err(EncodeError::MagnitudeTooLarge { value: 256, q: 8 })
        );
        assert_eq!(
            build_circuit(&[EncodableDatum::new(-300, 0, 0)], l83(), Scheme::Efrqi),
            Err(EncodeError::MagnitudeTooLarge { value: -300, q: 8 })
        );
        assert_eq!(
            build_circuit(&[EncodableDatum::new(1, 8, 0)], l83(), Scheme::StrictNeqr),
            Err(EncodeError::PositionOutOfRange {
                y: 8,
                x: 0,
                extent: 8
            })
        );
    }

    #[test]
    fn nonzero_counts() {
        let s = count_nonzero([125, 1, 1, 4, 16]);
        assert_eq!(
            s,
            NonzeroStats {
                n_tcn: 5,
                q_o: 10,
                s_bit: 5
            }
        );
        assert_eq!(count_nonzero([0; 64]), NonzeroStats::default());
        assert_eq!(
            count_nonzero([-3]),
            NonzeroStats {
                n_tcn: 1,
                q_o: 2,
                s_bit: 1
            }
        );
    }

    fn block(v: i32) -> CoeffBlock {
        let mut values = [0; 64];
        values[0] = v;
        CoeffBlock {
            values,
            quant: QuantSpec::new(8).unwrap(),
        }
    }

    #[test]
    fn block_location_examples() {
        let one = locate_blocks(&[block(3)], 1, 1);
        assert_eq!((one.n_rb, one.n_cb, one.b_rbr, one.b_rbc), (0, 0, 0, 0));

        let four = locate_blocks(&[block(1), block(2), block(3), block(4)], 2, 2);
        assert_eq!((four.n_rb, four.n_cb, four.b_rbr, four.b_rbc), (2, 2, 1, 1));
        assert_eq!(four.addresses, [(0, 0), (0, 1), (1, 0), (1, 1)]);

        let big: Vec<CoeffBlock> = (0..64 * 64).map(|_| block(1)).collect();
        let loc = locate_blocks(&big, 64, 64);
        assert_eq!((loc.n_rb, loc.n_cb, loc.b_rbr, loc.b_rbc), (64, 64, 6, 6));

        let sparse = locate_blocks(&[block(1), block(0), block(0), block(0)], 2, 2);
        assert_eq!((sparse.n_rb, sparse.n_cb), (0, 0));
    }

    #[test]
    fn extraction_recovers_data_for_every_scheme() {
        let data = [
            EncodableDatum::new(125, 0, 0),
            EncodableDatum::new(1, 0, 1),
            EncodableDatum::new(1, 0, 4),
            EncodableDatum::new(4, 1, 0),
            EncodableDatum::new(16, 3, 0),
        ];
        let mut expected = data.to_vec();
        expected.sort_by_key(|d| (d.y, d.x));
        for s in Scheme::ALL {
            let c = build_circuit(&data, l83(), s).unwrap();
            assert_eq!(extract_data(&c).unwrap(), expected, "{s}");
        }
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert!("frqi".parse::<Scheme>().is_err());
    }

    #[test]
    fn value_width_floor() {
        assert_eq!(value_width(0), 8);
        assert_eq!(value_width(255), 8);
        assert_eq!(value_width(256), 9);
        assert_eq!(value_width(2048), 12);
    }
}
