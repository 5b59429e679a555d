//! Gate-level circuit IR over a value / position / auxiliary register layout.
//!
//! Qubit indices are laid out as `value[0..q)`, `posY[0..n)`, `posX[0..n)`,
//! then the single auxiliary qubit, for a total of `q + 2n + 1`. Bit 0 of
//! every register is its least significant bit.
//!
//! Text format, one construct per line, `#` starts a comment:
//!
//! ```text
//! QUBITS 15
//! LAYOUT q=8 n=3
//! SCHEME zscneqr
//! H y0
//! MCX +y0 +y1 aux
//! MCX +aux v4
//! RESET aux
//! ```
//!
//! A `+` control fires on |1⟩, a `-` control on |0⟩. An optional
//! `SOURCE <id>` header names the image or block the circuit encodes.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use thiserror::Error;

/// Largest supported per-register widths; keeps every basis state in a `u64`.
pub const MAX_VALUE_QUBITS: u8 = 31;
pub const MAX_POSITION_QUBITS: u8 = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CircuitError {
    #[error("layout needs q >= 1 (got q={0})")]
    EmptyValueRegister(u8),
    #[error("layout q={q} n={n} exceeds the supported widths")]
    LayoutTooWide { q: u8, n: u8 },
    #[error("qubit {0} is outside the layout")]
    OutOfRange(Qubit),
    #[error("qubit {0} appears twice among the controls")]
    DuplicateControl(Qubit),
    #[error("qubit {0} is both control and target")]
    ControlIsTarget(Qubit),
    #[error("{0:?} gates take no controls")]
    UnexpectedControls(GateKind),
    #[error("MCX needs at least one control")]
    MissingControls,
}

/// Symbolic qubit address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Qubit {
    Value(u8),
    PosY(u8),
    PosX(u8),
    Aux,
}

impl fmt::Display for Qubit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Qubit::Value(i) => write!(f, "v{i}"),
            Qubit::PosY(i) => write!(f, "y{i}"),
            Qubit::PosX(i) => write!(f, "x{i}"),
            Qubit::Aux => f.write_str("aux"),
        }
    }
}

impl Qubit {
    pub fn is_position(self) -> bool {
        matches!(self, Qubit::PosY(_) | Qubit::PosX(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RegisterLayout {
    q: u8,
    n: u8,
}

impl RegisterLayout {
    pub fn new(q: u8, n: u8) -> Result<Self, CircuitError> {
        if q == 0 {
            return Err(CircuitError::EmptyValueRegister(q));
        }
        if q > MAX_VALUE_QUBITS || n > MAX_POSITION_QUBITS {
            return Err(CircuitError::LayoutTooWide { q, n });
        }
        let layout = Self { q, n };
        debug_assert_eq!(layout.total(), q as usize + 2 * n as usize + 1);
        Ok(layout)
    }

    /// Value qubits.
    pub fn q(&self) -> u8 {
        self.q
    }

    /// Position qubits per axis.
    pub fn n(&self) -> u8 {
        self.n
    }

    /// `q + 2n + 1`.
    pub fn total(&self) -> usize {
        self.q as usize + 2 * self.n as usize + 1
    }

    /// Addressable positions per axis, `2^n`.
    pub fn extent(&self) -> usize {
        1usize << self.n
    }

    pub fn contains(&self, qb: Qubit) -> bool {
        match qb {
            Qubit::Value(i) => i < self.q,
            Qubit::PosY(i) | Qubit::PosX(i) => i < self.n,
            Qubit::Aux => true,
        }
    }

    /// Flat index of `qb`. Panics if `qb` is not in the layout.
    pub fn index(&self, qb: Qubit) -> usize {
        assert!(
            self.contains(qb),
            "{qb} outside layout q={} n={}",
            self.q,
            self.n
        );
        let (q, n) = (self.q as usize, self.n as usize);
        match qb {
            Qubit::Value(i) => i as usize,
            Qubit::PosY(i) => q + i as usize,
            Qubit::PosX(i) => q + n + i as usize,
            Qubit::Aux => q + 2 * n,
        }
    }

    pub fn qubit_at(&self, index: usize) -> Option<Qubit> {
        let (q, n) = (self.q as usize, self.n as usize);
        match index {
            i if i < q => Some(Qubit::Value(i as u8)),
            i if i < q + n => Some(Qubit::PosY((i - q) as u8)),
            i if i < q + 2 * n => Some(Qubit::PosX((i - q - n) as u8)),
            i if i == q + 2 * n => Some(Qubit::Aux),
            _ => None,
        }
    }

    /// Bit mask of the value register within a flat basis state.
    pub fn value_mask(&self) -> u64 {
        (1u64 << self.q) - 1
    }

    /// Bit offset of the position register (posY then posX) in a flat basis state.
    pub fn position_shift(&self) -> usize {
        self.q as usize
    }

    /// Position register index packing (y, x) as `x << n | y`, matching the
    /// qubit order posY[0..n) then posX[0..n).
    pub fn pack_position(&self, y: usize, x: usize) -> usize {
        (x << self.n) | y
    }

    pub fn unpack_position(&self, packed: usize) -> (usize, usize) {
        (packed & (self.extent() - 1), packed >> self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    /// Fires on |1⟩.
    Closed,
    /// Fires on |0⟩.
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Control {
    pub qubit: Qubit,
    pub polarity: Polarity,
}

impl Control {
    pub fn closed(qubit: Qubit) -> Self {
        Self {
            qubit,
            polarity: Polarity::Closed,
        }
    }

    pub fn open(qubit: Qubit) -> Self {
        Self {
            qubit,
            polarity: Polarity::Open,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    Identity,
    Hadamard,
    PauliX,
    Mcx,
    Reset,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Gate {
    pub kind: GateKind,
    pub target: Qubit,
    pub controls: Vec<Control>,
}

impl Gate {
    pub fn h(target: Qubit) -> Self {
        Self::bare(GateKind::Hadamard, target)
    }

    pub fn x(target: Qubit) -> Self {
        Self::bare(GateKind::PauliX, target)
    }

    pub fn reset(target: Qubit) -> Self {
        Self::bare(GateKind::Reset, target)
    }

    pub fn identity(target: Qubit) -> Self {
        Self::bare(GateKind::Identity, target)
    }

    pub fn mcx(controls: Vec<Control>, target: Qubit) -> Self {
        Self {
            kind: GateKind::Mcx,
            target,
            controls,
        }
    }

    /// Single closed-control X.
    pub fn cx(control: Qubit, target: Qubit) -> Self {
        Self::mcx(vec![Control::closed(control)], target)
    }

    fn bare(kind: GateKind, target: Qubit) -> Self {
        Self {
            kind,
            target,
            controls: Vec::new(),
        }
    }

    pub fn validate(&self, layout: &RegisterLayout) -> Result<(), CircuitError> {
        if !layout.contains(self.target) {
            return Err(CircuitError::OutOfRange(self.target));
        }
        match self.kind {
            GateKind::Mcx if self.controls.is_empty() => return Err(CircuitError::MissingControls),
            GateKind::Mcx => {}
            k if !self.controls.is_empty() => return Err(CircuitError::UnexpectedControls(k)),
            _ => {}
        }
        for (i, c) in self.controls.iter().enumerate() {
            if !layout.contains(c.qubit) {
                return Err(CircuitError::OutOfRange(c.qubit));
            }
            if c.qubit == self.target {
                return Err(CircuitError::ControlIsTarget(c.qubit));
            }
            if self.controls[..i].iter().any(|o| o.qubit == c.qubit) {
                return Err(CircuitError::DuplicateControl(c.qubit));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    layout: RegisterLayout,
    gates: Vec<Gate>,
    scheme: String,
    source: String,
}

impl Circuit {
    pub fn new(layout: RegisterLayout, scheme: impl Into<String>) -> Self {
        Self {
            layout,
            gates: Vec::new(),
            scheme: scheme.into(),
            source: String::new(),
        }
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = source.into();
        self
    }

    pub fn push(&mut self, gate: Gate) -> Result<(), CircuitError> {
        gate.validate(&self.layout)?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn scheme(&self) -> &str {
        &self.scheme
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Identity gates implied by the preparation step: one per value qubit plus
    /// the auxiliary. They are counted, never emitted.
    pub fn implied_identities(&self) -> usize {
        self.layout.q as usize + 1
    }

    /// Uncontrolled X gates on the auxiliary qubit. Under ZSCNEQR these mark
    /// data at the all-zero position, whose connection fires in every branch.
    pub fn unconditional_aux_flips(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| g.kind == GateKind::PauliX && g.target == Qubit::Aux)
            .count()
    }

    pub fn stats(&self) -> GateStats {
        gate_stats(self)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GateStats {
    pub identity: usize,
    pub hadamard: usize,
    pub pauli_x: usize,
    pub mcx: usize,
    pub reset: usize,
    pub control_terminals: usize,
}

impl GateStats {
    pub fn total_gates(&self) -> usize {
        self.identity + self.hadamard + self.pauli_x + self.mcx + self.reset
    }
}

pub fn gate_stats(c: &Circuit) -> GateStats {
    let mut s = GateStats::default();
    for g in &c.gates {
        match g.kind {
            GateKind::Identity => s.identity += 1,
            GateKind::Hadamard => s.hadamard += 1,
            GateKind::PauliX => s.pauli_x += 1,
            GateKind::Mcx => s.mcx += 1,
            GateKind::Reset => s.reset += 1,
        }
        s.control_terminals += g.controls.len();
    }
    s
}

fn mnemonic(kind: GateKind) -> &'static str {
    match kind {
        GateKind::Identity => "I",
        GateKind::Hadamard => "H",
        GateKind::PauliX => "X",
        GateKind::Mcx => "MCX",
        GateKind::Reset => "RESET",
    }
}

/// Append the gate lines of `c` (no headers) to `out`.
pub fn write_gates(c: &Circuit, out: &mut String) {
    for g in &c.gates {
        out.push_str(mnemonic(g.kind));
        for ctl in &g.controls {
            let sign = match ctl.polarity {
                Polarity::Closed => '+',
                Polarity::Open => '-',
            };
            let _ = write!(out, " {sign}{}", ctl.qubit);
        }
        let _ = writeln!(out, " {}", g.target);
    }
}

pub fn serialize(c: &Circuit) -> String {
    let mut out = String::with_capacity(64 + c.gates.len() * 16);
    let _ = writeln!(out, "QUBITS {}", c.layout.total());
    let _ = writeln!(out, "LAYOUT q={} n={}", c.layout.q, c.layout.n);
    let _ = writeln!(out, "SCHEME {}", c.scheme);
    if !c.source.is_empty() {
        let _ = writeln!(out, "SOURCE {}", c.source);
    }
    write_gates(c, &mut out);
    out
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    #[error("unknown mnemonic `{0}`")]
    UnknownMnemonic(String),
    #[error("unknown register in `{0}`")]
    UnknownRegister(String),
    #[error("malformed header: {0}")]
    BadHeader(String),
    #[error("missing {0} header before first gate")]
    MissingHeader(&'static str),
    #[error("QUBITS {declared} disagrees with layout total {actual}")]
    QubitCountMismatch { declared: usize, actual: usize },
    #[error("malformed gate line: {0}")]
    BadGate(String),
    #[error(transparent)]
    Invalid(#[from] CircuitError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

impl FromStr for Qubit {
    type Err = ParseErrorKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "aux" {
            return Ok(Qubit::Aux);
        }
        let unknown = || ParseErrorKind::UnknownRegister(s.to_string());
        let (reg, idx) = s.split_at(s.find(|c: char| c.is_ascii_digit()).ok_or_else(unknown)?);
        let idx: u8 = idx.parse().map_err(|_| unknown())?;
        match reg {
            "v" => Ok(Qubit::Value(idx)),
            "y" => Ok(Qubit::PosY(idx)),
            "x" => Ok(Qubit::PosX(idx)),
            _ => Err(unknown()),
        }
    }
}

/// Incremental parser shared by single-circuit and bundle readers.
#[derive(Debug, Default)]
pub(crate) struct CircuitParser {
    declared_qubits: Option<usize>,
    layout: Option<RegisterLayout>,
    scheme: Option<String>,
    source: String,
    gates: Vec<Gate>,
}

impl CircuitParser {
    /// Feed one non-comment, non-empty line.
    pub(crate) fn feed(&mut self, line: &str) -> Result<(), ParseErrorKind> {
        let mut parts = line.split_whitespace();
        let Some(head) = parts.next() else {
            return Ok(());
        };
        match head {
            "QUBITS" => {
                let v = parts
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| ParseErrorKind::BadHeader(line.to_string()))?;
                self.declared_qubits = Some(v);
            }
            "LAYOUT" => {
                let mut q = None;
                let mut n = None;
                for p in parts {
                    match p.split_once('=') {
                        Some(("q", v)) => q = v.parse::<u8>().ok(),
                        Some(("n", v)) => n = v.parse::<u8>().ok(),
                        _ => return Err(ParseErrorKind::BadHeader(line.to_string())),
                    }
                }
                let (Some(q), Some(n)) = (q, n) else {
                    return Err(ParseErrorKind::BadHeader(line.to_string()));
                };
                self.layout = Some(RegisterLayout::new(q, n)?);
            }
            "SCHEME" => {
                let name = parts
                    .next()
                    .ok_or_else(|| ParseErrorKind::BadHeader(line.to_string()))?;
                self.scheme = Some(name.to_string());
            }
            "SOURCE" => {
                self.source = line["SOURCE".len()..].trim().to_string();
            }
            "H" | "X" | "I" | "RESET" | "MCX" => {
                let layout = self.layout.ok_or(ParseErrorKind::MissingHeader("LAYOUT"))?;
                let gate = parse_gate(head, parts.collect(), line)?;
                gate.validate(&layout)?;
                self.gates.push(gate);
            }
            other => return Err(ParseErrorKind::UnknownMnemonic(other.to_string())),
        }
        Ok(())
    }

    pub(crate) fn finish(self) -> Result<Circuit, ParseErrorKind> {
        let layout = self.layout.ok_or(ParseErrorKind::MissingHeader("LAYOUT"))?;
        if let Some(declared) = self.declared_qubits {
            if declared != layout.total() {
                return Err(ParseErrorKind::QubitCountMismatch {
                    declared,
                    actual: layout.total(),
                });
            }
        } else {
            return Err(ParseErrorKind::MissingHeader("QUBITS"));
        }
        Ok(Circuit {
            layout,
            gates: self.gates,
            scheme: self.scheme.unwrap_or_default(),
            source: self.source,
        })
    }
}

fn parse_gate(head: &str, args: Vec<&str>, line: &str) -> Result<Gate, ParseErrorKind> {
    let bad = || ParseErrorKind::BadGate(line.to_string());
    let (target, ctl_tokens) = args.split_last().ok_or_else(bad)?;
    let target: Qubit = target.parse()?;
    let kind = match head {
        "H" => GateKind::Hadamard,
        "X" => GateKind::PauliX,
        "I" => GateKind::Identity,
        "RESET" => GateKind::Reset,
        _ => GateKind::Mcx,
    };
    let mut controls = Vec::with_capacity(ctl_tokens.len());
    for tok in ctl_tokens {
        let polarity = match tok.as_bytes().first() {
            Some(b'+') => Polarity::Closed,
            Some(b'-') => Polarity::Open,
            _ => return Err(bad()),
        };
        controls.push(Control {
            qubit: tok[1..].parse()?,
            polarity,
        });
    }
    Ok(Gate {
        kind,
        target,
        controls,
    })
}

pub fn parse(text: &str) -> Result<Circuit, ParseError> {
    let mut p = CircuitParser::default();
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        last_line = i + 1;
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        p.feed(line)
            .map_err(|kind| ParseError { line: i + 1, kind })?;
    }
    p.finish().map_err(|kind| ParseError {
        line: last_line,
        kind,
    })
}

pub(crate) fn strip_comment(raw: &str) -> &str {
    raw.split('#').next().unwrap_or("").trim()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout(q: u8, n: u8) -> RegisterLayout {
        RegisterLayout::new(q, n).unwrap()
    }

    #[test]
    fn layout_budget_and_index_map() {
        let l = layout(8, 3);
        assert_eq!(l.total(), 15);
        let mut seen = std::collections::HashSet::new();
        for i in 0..l.total() {
            let qb = l.qubit_at(i).unwrap();
            assert_eq!(l.index(qb), i);
            assert!(seen.insert(qb));
        }
        assert_eq!(l.qubit_at(15), None);
        assert_eq!(l.index(Qubit::Aux), 14);
        assert_eq!(l.index(Qubit::PosX(0)), 11);
        assert!(RegisterLayout::new(0, 3).is_err());
        assert_eq!(layout(1, 0).total(), 2);
    }

    #[test]
    fn empty_circuit_headers() {
        let c = Circuit::new(layout(8, 3), "zscneqr");
        let text = serialize(&c);
        assert_eq!(text, "QUBITS 15\nLAYOUT q=8 n=3\nSCHEME zscneqr\n");
    }

    #[test]
    fn gate_lines() {
        let mut c = Circuit::new(layout(8, 3), "t");
        c.push(Gate::h(Qubit::PosY(0))).unwrap();
        c.push(Gate::mcx(
            vec![
                Control::closed(Qubit::PosY(0)),
                Control::closed(Qubit::PosX(0)),
            ],
            Qubit::Aux,
        ))
        .unwrap();
        c.push(Gate::mcx(
            vec![Control::open(Qubit::PosY(2))],
            Qubit::Value(7),
        ))
        .unwrap();
        c.push(Gate::reset(Qubit::Aux)).unwrap();
        let text = serialize(&c);
        let body: Vec<&str> = text.lines().skip(3).collect();
        assert_eq!(body, ["H y0", "MCX +y0 +x0 aux", "MCX -y2 v7", "RESET aux"]);
        assert_eq!(parse(&text).unwrap(), c);
    }

    #[test]
    fn parse_errors_are_positioned() {
        let err = parse("QUBITS 15\nLAYOUT q=8 n=3\nMCX +y0 +y0 aux\n").unwrap_err();
        assert_eq!(err.line, 3);
        assert_eq!(
            err.kind,
            ParseErrorKind::Invalid(CircuitError::DuplicateControl(Qubit::PosY(0)))
        );

        let err = parse("QUBITS 15\nLAYOUT q=8 n=3\nH z9\n").unwrap_err();
        assert_eq!(err.line, 3);
        assert_eq!(err.kind, ParseErrorKind::UnknownRegister("z9".into()));

        let err = parse("QUBITS 15\nLAYOUT q=8 n=3\nH y3\n").unwrap_err();
        assert_eq!(
            err.kind,
            ParseErrorKind::Invalid(CircuitError::OutOfRange(Qubit::PosY(3)))
        );

        let err = parse("QUBITS 15\nLAYOUT q=8 n=3\n\nCZ y0 y1\n").unwrap_err();
        assert_eq!(err.line, 4);
        assert_eq!(err.kind, ParseErrorKind::UnknownMnemonic("CZ".into()));

        let err = parse("QUBITS 14\nLAYOUT q=8 n=3\n").unwrap_err();
        assert!(matches!(
            err.kind,
            ParseErrorKind::QubitCountMismatch { .. }
        ));

        let err = parse("QUBITS 15\nLAYOUT q=8 n=3\nH +y1 y0\n").unwrap_err();
        assert_eq!(
            err.kind,
            ParseErrorKind::Invalid(CircuitError::UnexpectedControls(GateKind::Hadamard))
        );
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let c =
            parse("# header\nQUBITS 3\n\nLAYOUT q=2 n=0  # tiny\nSCHEME s\nX v1 # flip\n").unwrap();
        assert_eq!(c.gates(), &[Gate::x(Qubit::Value(1))]);
    }

    #[test]
    fn stats_counting() {
        let mut c = Circuit::new(layout(8, 3), "t");
        for i in 0..3 {
            c.push(Gate::h(Qubit::PosY(i))).unwrap();
            c.push(Gate::h(Qubit::PosX(i))).unwrap();
        }
        for i in 0..3 {
            c.push(Gate::mcx(
                vec![
                    Control::closed(Qubit::PosY(i)),
                    Control::open(Qubit::PosX(i)),
                ],
                Qubit::Value(i),
            ))
            .unwrap();
        }
        c.push(Gate::reset(Qubit::Aux)).unwrap();
        assert_eq!(
            c.stats(),
            GateStats {
                hadamard: 6,
                mcx: 3,
                reset: 1,
                control_terminals: 6,
                ..Default::default()
            }
        );
        assert_eq!(
            Circuit::new(layout(8, 3), "e").stats(),
            GateStats::default()
        );
        assert_eq!(c.implied_identities(), 9);
    }

    #[test]
    fn control_equal_target_rejected() {
        let g = Gate::mcx(vec![Control::closed(Qubit::Aux)], Qubit::Aux);
        assert_eq!(
            g.validate(&layout(2, 1)),
            Err(CircuitError::ControlIsTarget(Qubit::Aux))
        );
    }
}
