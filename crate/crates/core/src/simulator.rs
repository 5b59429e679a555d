//! Circuit simulation and decoding.
//!
//! Two independent engines:
//!
//! * A basis-state (truth-table) simulator. After the Hadamard prefix every
//!   remaining gate is classical, so each position assignment is propagated
//!   as a bit string. Reset forces the qubit to 0 in every branch. This path
//!   scales to full images.
//! * A dense statevector simulator for at most [`MAX_STATEVECTOR_QUBITS`]
//!   qubits. Reset is a projective measurement of the qubit, with the outcome
//!   drawn from its Born probability using a seeded RNG, followed by
//!   re-initialisation to |0⟩. Each seed is one trajectory.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::blocktransform::{CoeffBlock, QuantSpec};
use crate::encoders::EncodableDatum;
use crate::par::Execution;
use crate::pixelgrid::{GrayImage, BLOCK};
use crate::qcircuit::{Circuit, Gate, GateKind, Polarity, Qubit, RegisterLayout};

pub const MAX_STATEVECTOR_QUBITS: usize = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("gate {index}: Hadamard outside the position-register prefix")]
    MidCircuitHadamard { index: usize },
    #[error("Hadamard prefix must cover each position qubit exactly once")]
    IncompletePrefix,
    #[error("circuit needs {needed} qubits, statevector limit is {limit}")]
    QubitBudgetExceeded { needed: usize, limit: usize },
    #[error("final position {position} is reached by branches holding different values")]
    AmbiguousReadout { position: usize },
    #[error("decoded value {value} at (y={y}, x={x}) does not fit the output type")]
    ValueOverflow { y: usize, x: usize, value: u64 },
    #[error("decode expects an 8x8 position space, got n={0}")]
    NotABlock(u8),
    #[error("position (y={y}, x={x}) missing from the decoded map")]
    MissingPosition { y: usize, x: usize },
}

/// Value register contents for every position, indexed by
/// [`RegisterLayout::pack_position`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisMap {
    pub layout: RegisterLayout,
    pub values: Vec<u64>,
}

impl BasisMap {
    pub fn zeros(layout: RegisterLayout) -> Self {
        Self {
            layout,
            values: vec![0; layout.extent() * layout.extent()],
        }
    }

    pub fn get(&self, y: usize, x: usize) -> u64 {
        self.values[self.layout.pack_position(y, x)]
    }

    pub fn set(&mut self, y: usize, x: usize, v: u64) {
        let i = self.layout.pack_position(y, x);
        self.values[i] = v;
    }
}

/// Flat-bit description of a controlled gate.
#[derive(Debug, Clone, Copy)]
struct FlatGate {
    kind: GateKind,
    target: u64,
    /// Bits that must be 1.
    ones: u64,
    /// Bits that must be 0.
    zeros: u64,
}

fn flatten(layout: &RegisterLayout, g: &Gate) -> FlatGate {
    let bit = |q: Qubit| 1u64 << layout.index(q);
    let mut ones = 0;
    let mut zeros = 0;
    for c in &g.controls {
        match c.polarity {
            Polarity::Closed => ones |= bit(c.qubit),
            Polarity::Open => zeros |= bit(c.qubit),
        }
    }
    FlatGate {
        kind: g.kind,
        target: bit(g.target),
        ones,
        zeros,
    }
}

fn position_bits_mask(layout: &RegisterLayout) -> u64 {
    ((1u64 << (2 * layout.n() as u32)) - 1) << layout.position_shift()
}

/// Validate the Hadamard prefix and return the index of the first body gate.
fn split_prefix(c: &Circuit) -> Result<usize, SimError> {
    let layout = c.layout();
    let pos_mask = position_bits_mask(layout);
    let mut covered = 0u64;
    let mut body = 0;
    for (i, g) in c.gates().iter().enumerate() {
        if g.kind != GateKind::Hadamard {
            body = i;
            break;
        }
        let b = 1u64 << layout.index(g.target);
        if b & pos_mask == 0 || covered & b != 0 {
            body = i;
            break;
        }
        covered |= b;
        body = i + 1;
    }
    if covered != pos_mask {
        return Err(SimError::IncompletePrefix);
    }
    if let Some(off) = c.gates()[body..]
        .iter()
        .position(|g| g.kind == GateKind::Hadamard)
    {
        return Err(SimError::MidCircuitHadamard { index: body + off });
    }
    Ok(body)
}

/// Apply one classical gate to a full basis state.
fn apply_classical(state: u64, g: &FlatGate) -> u64 {
    match g.kind {
        GateKind::Identity | GateKind::Hadamard => state,
        GateKind::PauliX => state ^ g.target,
        GateKind::Mcx => {
            if state & g.ones == g.ones && state & g.zeros == 0 {
                state ^ g.target
            } else {
                state
            }
        }
        GateKind::Reset => state & !g.target,
    }
}

/// Final full basis state of every branch, by direct per-branch propagation.
///
/// Branch `b` starts with position register `b` and everything else 0. This
/// is the reference engine: O(branches × gates), no structural assumptions
/// beyond the Hadamard prefix.
pub fn propagate_branches(c: &Circuit, exec: Execution) -> Result<Vec<u64>, SimError> {
    let body = split_prefix(c)?;
    let layout = *c.layout();
    let gates: Vec<FlatGate> = c.gates()[body..]
        .iter()
        .map(|g| flatten(&layout, g))
        .collect();
    let branches = 1usize << (2 * layout.n() as u32);
    let shift = layout.position_shift();
    Ok(exec.map_range(branches, |b| {
        gates.iter().fold((b as u64) << shift, apply_classical)
    }))
}

/// Basis simulation by direct per-branch propagation.
pub fn simulate_basis_dense(c: &Circuit, exec: Execution) -> Result<BasisMap, SimError> {
    let layout = *c.layout();
    let finals = propagate_branches(c, exec)?;
    let shift = layout.position_shift();
    let pos_mask = position_bits_mask(&layout);
    let mut map = BasisMap::zeros(layout);
    let mut seen = vec![false; finals.len()];
    for s in finals {
        let p = ((s & pos_mask) >> shift) as usize;
        let v = s & layout.value_mask();
        // Branches may meet on one position when only the auxiliary differs.
        if std::mem::replace(&mut seen[p], true) && map.values[p] != v {
            return Err(SimError::AmbiguousReadout { position: p });
        }
        map.values[p] = v;
    }
    Ok(map)
}

/// Gate split into position-field and local-field (value bits, then aux) parts.
#[derive(Debug, Clone, Copy)]
struct SplitGate {
    kind: GateKind,
    /// Target bit in the position field, or 0 for a local target.
    pos_target: u64,
    /// Target bit in the local field, or 0 for a position target.
    loc_target: u64,
    pos_ones: u64,
    pos_zeros: u64,
    loc_ones: u64,
    loc_zeros: u64,
}

fn split_gate(layout: &RegisterLayout, g: &FlatGate) -> SplitGate {
    let q = layout.q() as u32;
    let pos_width = 2 * layout.n() as u32;
    let pos = |flat: u64| (flat >> q) & ((1u64 << pos_width) - 1);
    let loc = |flat: u64| (flat & layout.value_mask()) | (((flat >> (q + pos_width)) & 1) << q);
    SplitGate {
        kind: g.kind,
        pos_target: pos(g.target),
        loc_target: loc(g.target),
        pos_ones: pos(g.ones),
        pos_zeros: pos(g.zeros),
        loc_ones: loc(g.ones),
        loc_zeros: loc(g.zeros),
    }
}

/// Basis simulation: for each of the `2^(2n)` position assignments, the value
/// register after running the circuit classically.
///
/// Circuits that only touch position qubits through uncontrolled X gates
/// (everything the encoders emit) take a sparse path whose cost follows the
/// number of branches each gate fires in rather than branches × gates. Other
/// circuits fall back to [`simulate_basis_dense`].
pub fn simulate_basis(c: &Circuit, exec: Execution) -> Result<BasisMap, SimError> {
    let body = split_prefix(c)?;
    let layout = *c.layout();
    let pos_mask = position_bits_mask(&layout);
    let flat: Vec<FlatGate> = c.gates()[body..]
        .iter()
        .map(|g| flatten(&layout, g))
        .collect();
    let sparse_ok = flat.iter().all(|g| {
        g.target & pos_mask == 0 || g.kind == GateKind::PauliX || g.kind == GateKind::Identity
    });
    if !sparse_ok {
        return simulate_basis_dense(c, exec);
    }
    let gates: Vec<SplitGate> = flat.iter().map(|g| split_gate(&layout, g)).collect();

    let pos_bits = 2 * layout.n() as u32;
    let chunk_bits = pos_bits.min(6);
    let low_bits = pos_bits - chunk_bits;
    let value_mask = layout.value_mask();

    let per_chunk = exec.map_range(1usize << chunk_bits, |chunk| {
        SparseChunk::new(
            layout.q() as usize + 1,
            (chunk as u64) << low_bits,
            low_bits,
        )
        .run(&gates)
    });

    let mut map = BasisMap::zeros(layout);
    for (chunk, (local, mask)) in per_chunk.into_iter().enumerate() {
        let high = (chunk as u64) << low_bits;
        for (low, v) in local.into_iter().enumerate() {
            map.values[((high | low as u64) ^ mask) as usize] = v & value_mask;
        }
    }
    Ok(map)
}

/// Branches sharing the same high position bits, simulated together.
///
/// Position qubits are only ever flipped globally, so a branch's physical
/// position is `branch ^ mask`. For each local qubit, `support` lists the
/// branches where it may be 1; stale entries are pruned when visited.
struct SparseChunk {
    high: u64,
    low_mask: u64,
    local: Vec<u64>,
    support: Vec<Vec<u32>>,
    listed: Vec<Vec<bool>>,
}

impl SparseChunk {
    fn new(local_qubits: usize, high: u64, low_bits: u32) -> Self {
        let size = 1usize << low_bits;
        Self {
            high,
            low_mask: (1u64 << low_bits) - 1,
            local: vec![0; size],
            support: vec![Vec::new(); local_qubits],
            listed: vec![vec![false; size]; local_qubits],
        }
    }

    fn flip(&mut self, low: usize, loc_target: u64) {
        self.local[low] ^= loc_target;
        let slot = loc_target.trailing_zeros() as usize;
        if self.local[low] & loc_target != 0 && !self.listed[slot][low] {
            self.listed[slot][low] = true;
            self.support[slot].push(low as u32);
        }
    }

    fn run(mut self, gates: &[SplitGate]) -> (Vec<u64>, u64) {
        let mut mask = 0u64;
        for g in gates {
            match g.kind {
                GateKind::Identity | GateKind::Hadamard => {}
                GateKind::PauliX if g.pos_target != 0 => mask ^= g.pos_target,
                GateKind::PauliX => {
                    for low in 0..self.local.len() {
                        self.flip(low, g.loc_target);
                    }
                }
                GateKind::Reset => {
                    let slot = g.loc_target.trailing_zeros() as usize;
                    for low in std::mem::take(&mut self.support[slot]) {
                        self.local[low as usize] &= !g.loc_target;
                        self.listed[slot][low as usize] = false;
                    }
                }
                GateKind::Mcx => self.apply_mcx(g, mask),
            }
        }
        (self.local, mask)
    }

    fn apply_mcx(&mut self, g: &SplitGate, mask: u64) {
        let care = g.pos_ones | g.pos_zeros;
        let want = g.pos_ones;
        let high_mask = !self.low_mask;
        if ((self.high ^ mask) & care & high_mask) != (want & high_mask) {
            return;
        }
        let pos_ok = |low: u64| ((self.high | low) ^ mask) & care == want;
        let loc_ok = |v: u64| v & g.loc_ones == g.loc_ones && v & g.loc_zeros == 0;

        if g.loc_ones != 0 {
            // Walk the shortest support list among the closed local controls.
            let slot = (0..64)
                .filter(|i| g.loc_ones >> i & 1 == 1)
                .min_by_key(|&i| self.support[i].len())
                .expect("nonzero mask");
            let bit = 1u64 << slot;
            let mut list = std::mem::take(&mut self.support[slot]);
            let mut fire = Vec::new();
            list.retain(|&low| {
                let live = self.local[low as usize] & bit != 0;
                if !live {
                    self.listed[slot][low as usize] = false;
                } else if pos_ok(low as u64) && loc_ok(self.local[low as usize]) {
                    fire.push(low as usize);
                }
                live
            });
            self.support[slot] = list;
            for low in fire {
                self.flip(low, g.loc_target);
            }
        } else {
            let base = ((want ^ mask) & care) & self.low_mask;
            let free = !care & self.low_mask;
            let mut sub = 0u64;
            loop {
                let low = (base | sub) as usize;
                if loc_ok(self.local[low]) {
                    self.flip(low, g.loc_target);
                }
                if sub == free {
                    break;
                }
                sub = sub.wrapping_sub(free) & free;
            }
        }
    }
}

/// Dense complex state over `layout.total()` qubits plus the reset outcomes
/// drawn along the trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    pub layout: RegisterLayout,
    pub amplitudes: Vec<Complex64>,
    /// Measured outcome of each reset, in gate order.
    pub reset_outcomes: Vec<bool>,
    pub seed: u64,
}

/// What the value register holds at one position of a statevector.
#[derive(Debug, Clone, PartialEq)]
pub enum PositionReadout {
    /// The position has (numerically) zero probability.
    Absent,
    /// A single value basis state.
    Definite(u64),
    /// Several value basis states with their conditional probabilities.
    Superposed(Vec<(u64, f64)>),
}

const PROB_EPS: f64 = 1e-12;

impl QuantumState {
    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Indices of basis states with nonzero probability.
    pub fn support(&self) -> Vec<usize> {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm_sqr() > PROB_EPS)
            .map(|(i, _)| i)
            .collect()
    }

    /// Probability mass on each position.
    pub fn position_marginals(&self) -> Vec<f64> {
        let l = &self.layout;
        let mut m = vec![0.0; l.extent() * l.extent()];
        let pos_mask = position_bits_mask(l);
        for (i, a) in self.amplitudes.iter().enumerate() {
            m[((i as u64 & pos_mask) >> l.position_shift()) as usize] += a.norm_sqr();
        }
        m
    }

    pub fn readout(&self) -> Vec<PositionReadout> {
        let l = &self.layout;
        let pos_mask = position_bits_mask(l);
        let mut per_pos: Vec<BTreeMap<u64, f64>> = vec![BTreeMap::new(); l.extent() * l.extent()];
        for (i, a) in self.amplitudes.iter().enumerate() {
            let p = a.norm_sqr();
            if p > PROB_EPS {
                let pos = ((i as u64 & pos_mask) >> l.position_shift()) as usize;
                *per_pos[pos].entry(i as u64 & l.value_mask()).or_default() += p;
            }
        }
        per_pos
            .into_iter()
            .map(|dist| {
                let total: f64 = dist.values().sum();
                match dist.len() {
                    0 => PositionReadout::Absent,
                    1 => PositionReadout::Definite(*dist.keys().next().unwrap()),
                    _ => PositionReadout::Superposed(
                        dist.into_iter().map(|(v, p)| (v, p / total)).collect(),
                    ),
                }
            })
            .collect()
    }

    /// Most probable value per position; absent positions read as 0.
    pub fn to_basis_map(&self) -> BasisMap {
        let mut map = BasisMap::zeros(self.layout);
        for (pos, r) in self.readout().into_iter().enumerate() {
            map.values[pos] = match r {
                PositionReadout::Absent => 0,
                PositionReadout::Definite(v) => v,
                PositionReadout::Superposed(d) => d
                    .into_iter()
                    .max_by(|a, b| a.1.total_cmp(&b.1))
                    .map(|(v, _)| v)
                    .unwrap_or(0),
            };
        }
        map
    }

    /// |⟨self|other⟩|².
    pub fn fidelity(&self, other: &QuantumState) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .norm_sqr()
    }
}

/// Run one trajectory of `c` from |0…0⟩.
pub fn simulate_statevector(c: &Circuit, seed: u64) -> Result<QuantumState, SimError> {
    let layout = *c.layout();
    let total = layout.total();
    if total > MAX_STATEVECTOR_QUBITS {
        return Err(SimError::QubitBudgetExceeded {
            needed: total,
            limit: MAX_STATEVECTOR_QUBITS,
        });
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << total];
    amps[0] = Complex64::new(1.0, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut outcomes = Vec::new();
    let h = std::f64::consts::FRAC_1_SQRT_2;

    for g in c.gates() {
        let f = flatten(&layout, g);
        let t = f.target as usize;
        match g.kind {
            GateKind::Identity => {}
            GateKind::Hadamard => {
                for i in (0..amps.len()).filter(|i| i & t == 0) {
                    let (a, b) = (amps[i], amps[i | t]);
                    amps[i] = (a + b) * h;
                    amps[i | t] = (a - b) * h;
                }
            }
            GateKind::PauliX | GateKind::Mcx => {
                let (ones, zeros) = (f.ones as usize, f.zeros as usize);
                for i in (0..amps.len()).filter(|i| i & t == 0) {
                    if i & ones == ones && i & zeros == 0 {
                        amps.swap(i, i | t);
                    }
                }
            }
            GateKind::Reset => {
                let p1: f64 = amps
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| i & t != 0)
                    .map(|(_, a)| a.norm_sqr())
                    .sum();
                let r: f64 = rng.gen();
                let one = r < p1;
                outcomes.push(one);
                let scale = 1.0 / if one { p1 } else { 1.0 - p1 }.sqrt();
                for i in (0..amps.len()).filter(|i| i & t == 0) {
                    let kept = if one { amps[i | t] } else { amps[i] };
                    amps[i] = kept * scale;
                    amps[i | t] = Complex64::new(0.0, 0.0);
                }
            }
        }
    }
    Ok(QuantumState {
        layout,
        amplitudes: amps,
        reset_outcomes: outcomes,
        seed,
    })
}

/// Independent trajectories, one per seed.
pub fn simulate_trajectories(
    c: &Circuit,
    seeds: &[u64],
    exec: Execution,
) -> Result<Vec<QuantumState>, SimError> {
    exec.map(seeds, |&s| simulate_statevector(c, s))
        .into_iter()
        .collect()
}

/// Pixel-domain decode: value register at (y, x) becomes the sample there.
pub fn decode_pixels(map: &BasisMap, width: usize, height: usize) -> Result<GrayImage, SimError> {
    let extent = map.layout.extent();
    if width > extent || height > extent {
        return Err(SimError::MissingPosition {
            y: height.saturating_sub(1),
            x: width.saturating_sub(1),
        });
    }
    let mut samples = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let v = map.get(y, x);
            samples.push(u8::try_from(v).map_err(|_| SimError::ValueOverflow {
                y,
                x,
                value: v,
            })?);
        }
    }
    Ok(GrayImage::new(width, height, samples).expect("sized above"))
}

/// Coefficient-domain decode of one 8×8 block. `negative` lists the (y, x)
/// positions whose classical sign bit is set.
pub fn decode_block(
    map: &BasisMap,
    negative: &[(usize, usize)],
    quant: QuantSpec,
) -> Result<CoeffBlock, SimError> {
    if map.layout.extent() != BLOCK {
        return Err(SimError::NotABlock(map.layout.n()));
    }
    let mut values = [0i32; BLOCK * BLOCK];
    for y in 0..BLOCK {
        for x in 0..BLOCK {
            let v = map.get(y, x);
            values[y * BLOCK + x] =
                i32::try_from(v).map_err(|_| SimError::ValueOverflow { y, x, value: v })?;
        }
    }
    for &(y, x) in negative {
        values[y * BLOCK + x] = -values[y * BLOCK + x];
    }
    Ok(CoeffBlock { values, quant })
}

/// A position whose decoded value differs from the encoded datum (0 if none).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Mismatch {
    pub y: usize,
    pub x: usize,
    pub expected: u64,
    pub decoded: u64,
}

/// Compare a decoded map against the magnitudes of the encoded data, in raster order.
pub fn mismatches(map: &BasisMap, data: &[EncodableDatum]) -> Vec<Mismatch> {
    let mut expected = BasisMap::zeros(map.layout);
    for d in data {
        expected.set(d.y, d.x, d.magnitude() as u64);
    }
    let l = map.layout;
    let mut out: Vec<Mismatch> = (0..map.values.len())
        .filter(|&p| map.values[p] != expected.values[p])
        .map(|p| {
            let (y, x) = l.unpack_position(p);
            Mismatch {
                y,
                x,
                expected: expected.values[p],
                decoded: map.values[p],
            }
        })
        .collect();
    out.sort_unstable();
    out
}

/// Value register a ZSCNEQR circuit leaves at each position, predicted by
/// subset-mask analysis rather than by running gates.
///
/// A datum's connection keeps only the controls on its 1 bits, so it fires
/// at every position whose 1-bit pattern contains the datum's. The value at
/// a position is therefore the XOR of the magnitudes of all data whose
/// pattern is a subset of the position's.
pub fn predict_zero_discard(data: &[EncodableDatum], layout: RegisterLayout) -> BasisMap {
    let mut map = BasisMap::zeros(layout);
    let e = layout.extent();
    for y in 0..e {
        for x in 0..e {
            let mut v = 0u64;
            for d in data.iter().filter(|d| d.value != 0) {
                if d.y & !y == 0 && d.x & !x == 0 {
                    v ^= d.magnitude() as u64;
                }
            }
            map.set(y, x, v);
        }
    }
    map
}

/// Positions whose 1-bit pattern strictly contains that of some encoded datum.
/// Every ZSCNEQR mismatch lies in this set; positions inside it decode
/// correctly only when the stray contributions cancel under XOR.
pub fn superset_positions(data: &[EncodableDatum], layout: RegisterLayout) -> Vec<(usize, usize)> {
    let e = layout.extent();
    let mut out = Vec::new();
    for y in 0..e {
        for x in 0..e {
            let hit = data
                .iter()
                .filter(|d| d.value != 0)
                .any(|d| (d.y, d.x) != (y, x) && d.y & !y == 0 && d.x & !x == 0);
            if hit {
                out.push((y, x));
            }
        }
    }
    out
}
