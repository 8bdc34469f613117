//! Exact and sampled execution of gold and faulted models.
//!
//! A [`Test`] prepares a computational basis state, optionally rotates every
//! wire with H (X-basis preparation), runs the model, optionally applies H
//! again (X-basis readout) and reads out all wires in the computational basis.
//! Stuck measurements then overwrite the reported bits.
//!
//! Models without Kraus channels run on a state vector; anything with a
//! channel runs on a density matrix.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::faults::{FaultedModel, Insertion, Logic};
use crate::qmath::{self, apply_on_qubits, ComplexMatrix, C64, ONE, ZERO};

pub const MAX_STATE_WIDTH: usize = 10;
pub const MAX_DENSITY_WIDTH: usize = 6;
/// Shots per independently seeded RNG stream in [`run_shots`].
pub const SHOT_CHUNK: u64 = 4096;

/// A fixed-width bitstring; qubit 0 is the leftmost character.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bits {
    width: usize,
    value: usize,
}

impl Bits {
    pub fn new(width: usize, value: usize) -> Self {
        debug_assert!(width >= usize::BITS as usize || value < (1usize << width));
        Self { width, value }
    }

    pub fn width(self) -> usize {
        self.width
    }

    pub fn value(self) -> usize {
        self.value
    }

    pub fn bit(self, qubit: usize) -> u8 {
        ((self.value >> (self.width - 1 - qubit)) & 1) as u8
    }

    pub fn with_bit(self, qubit: usize, bit: u8) -> Self {
        let mask = 1usize << (self.width - 1 - qubit);
        let value = if bit == 1 { self.value | mask } else { self.value & !mask };
        Self { value, ..self }
    }

    pub fn all(width: usize) -> impl Iterator<Item = Bits> {
        (0..1usize << width).map(move |v| Bits::new(width, v))
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.width {
            write!(f, "{}", self.bit(q))?;
        }
        Ok(())
    }
}

impl FromStr for Bits {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s.len() > 32 || !s.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(Error::InvalidTest(s.to_string()));
        }
        let value = s.bytes().fold(0usize, |acc, b| acc << 1 | usize::from(b - b'0'));
        Ok(Bits::new(s.len(), value))
    }
}

impl Serialize for Bits {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Bits {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    pub fn symbol(self) -> &'static str {
        match self {
            Basis::Z => "z",
            Basis::X => "x",
        }
    }
}

impl FromStr for Basis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "z" | "Z" => Ok(Basis::Z),
            "x" | "X" => Ok(Basis::X),
            other => Err(Error::InvalidTest(format!("unknown basis `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Test {
    pub prep: Bits,
    pub basis: Basis,
    #[serde(rename = "measure")]
    pub measure_basis: Basis,
}

impl Test {
    pub fn new(prep: Bits, basis: Basis, measure_basis: Basis) -> Self {
        Self {
            prep,
            basis,
            measure_basis,
        }
    }

    pub fn z(prep: &str) -> Self {
        Self::new(prep.parse().expect("bitstring literal"), Basis::Z, Basis::Z)
    }

    pub fn x(prep: &str) -> Self {
        Self::new(prep.parse().expect("bitstring literal"), Basis::X, Basis::X)
    }

    pub fn width(&self) -> usize {
        self.prep.width()
    }

    pub fn is_z(&self) -> bool {
        self.basis == Basis::Z && self.measure_basis == Basis::Z
    }

    pub fn is_x(&self) -> bool {
        self.basis == Basis::X && self.measure_basis == Basis::X
    }
}

impl fmt::Display for Test {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.prep, self.basis.symbol(), self.measure_basis.symbol())
    }
}

impl FromStr for Test {
    type Err = Error;

    /// `<bits> [<basis> [<measure>]]`; missing bases default to `z` and the
    /// measurement basis to the preparation basis.
    fn from_str(s: &str) -> Result<Self> {
        let tokens: Vec<&str> = s.split_whitespace().collect();
        let (prep, basis, measure) = match tokens.as_slice() {
            [p] => (p.parse()?, Basis::Z, Basis::Z),
            [p, b] => {
                let b: Basis = b.parse()?;
                (p.parse()?, b, b)
            }
            [p, b, m] => (p.parse()?, b.parse()?, m.parse()?),
            _ => return Err(Error::InvalidTest(s.to_string())),
        };
        Ok(Test::new(prep, basis, measure))
    }
}

/// Born-rule outcome probabilities indexed by bitstring value.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    width: usize,
    probs: Vec<f64>,
}

impl OutcomeDistribution {
    pub const SUM_TOL: f64 = 1e-9;
    const SUPPORT_EPS: f64 = 1e-12;

    pub fn new(width: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != 1 << width {
            return Err(Error::Dimension(format!(
                "{} probabilities for width {width}",
                probs.len()
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOL || probs.iter().any(|&p| p < -Self::SUM_TOL) {
            return Err(Error::Dimension(format!("probabilities sum to {sum}")));
        }
        Ok(Self {
            width,
            probs: probs.into_iter().map(|p| p.max(0.0)).collect(),
        })
    }

    pub fn point(bits: Bits) -> Self {
        let mut probs = vec![0.0; 1 << bits.width()];
        probs[bits.value()] = 1.0;
        Self {
            width: bits.width(),
            probs,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn prob(&self, bits: Bits) -> f64 {
        self.probs[bits.value()]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Outcomes with probability above 1e-12, ascending.
    pub fn support(&self) -> Vec<Bits> {
        self.iter().map(|(b, _)| b).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Bits, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > Self::SUPPORT_EPS)
            .map(|(i, &p)| (Bits::new(self.width, i), p))
    }

    /// The outcome with probability above `1 - tol`, if any.
    pub fn deterministic(&self, tol: f64) -> Option<Bits> {
        self.iter().find(|&(_, p)| p > 1.0 - tol).map(|(b, _)| b)
    }

    pub fn tvd(&self, other: &Self) -> f64 {
        0.5 * self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }

    pub fn to_map(&self) -> BTreeMap<Bits, f64> {
        self.iter().collect()
    }
}

fn check_width(width: usize, limit: usize, what: &'static str) -> Result<()> {
    if width > limit {
        return Err(Error::WidthLimit { width, limit, what });
    }
    Ok(())
}

fn check_test(m: &FaultedModel, t: &Test) -> Result<()> {
    if t.width() != m.width() {
        return Err(Error::InvalidTest(format!(
            "test `{t}` has width {} but the circuit has {} qubits",
            t.width(),
            m.width()
        )));
    }
    Ok(())
}

fn hadamard_all(amps: &mut [C64], n: usize) {
    let h = qmath::hadamard();
    for q in 0..n {
        apply_on_qubits(amps, n, &[q], &h);
    }
}

fn prepared_state(t: &Test) -> Vec<C64> {
    let n = t.width();
    let mut amps = vec![ZERO; 1 << n];
    amps[t.prep.value()] = ONE;
    if t.basis == Basis::X {
        hadamard_all(&mut amps, n);
    }
    amps
}

fn evolve_pure(m: &FaultedModel, amps: &mut [C64]) -> Result<()> {
    let n = m.width();
    for ins in m.insertions() {
        match ins {
            Insertion::Unitary { wires, matrix } => apply_on_qubits(amps, n, wires, matrix),
            Insertion::Channel { .. } => {
                return Err(Error::NotPhaseOnly("model contains a Kraus channel".into()))
            }
        }
    }
    Ok(())
}

/// Row-major density matrix seen as a `2n`-qubit vector: row wires are
/// `0..n`, column wires `n..2n`.
fn apply_density(rho: &mut Vec<C64>, n: usize, ins: &Insertion) {
    let shifted = |wires: &[usize]| wires.iter().map(|w| w + n).collect::<Vec<_>>();
    match ins {
        Insertion::Unitary { wires, matrix } => {
            apply_on_qubits(rho, 2 * n, wires, matrix);
            apply_on_qubits(rho, 2 * n, &shifted(wires), &matrix.conj());
        }
        Insertion::Channel { wires, kraus } => {
            let mut acc = vec![ZERO; rho.len()];
            for e in kraus {
                let mut term = rho.clone();
                apply_on_qubits(&mut term, 2 * n, wires, e);
                apply_on_qubits(&mut term, 2 * n, &shifted(wires), &e.conj());
                for (a, t) in acc.iter_mut().zip(term) {
                    *a += t;
                }
            }
            *rho = acc;
        }
    }
}

fn evolve_flat_density(m: &FaultedModel, rho: &mut Vec<C64>) {
    let n = m.width();
    for ins in m.insertions() {
        apply_density(rho, n, ins);
    }
}

/// Applies the model's insertions to an arbitrary `2^n x 2^n` operator.
/// Readout overrides are classical and play no part here.
pub fn evolve_operator(m: &FaultedModel, op: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = m.width();
    check_width(n, MAX_DENSITY_WIDTH, "density simulation")?;
    if op.rows() != 1 << n || op.cols() != 1 << n {
        return Err(Error::Dimension(format!(
            "{}x{} operator for a {n}-qubit model",
            op.rows(),
            op.cols()
        )));
    }
    let mut flat = op.data().to_vec();
    evolve_flat_density(m, &mut flat);
    ComplexMatrix::new(1 << n, 1 << n, flat)
}

/// Runs the model's initial-state insertions and body on a density matrix.
pub fn evolve_density(m: &FaultedModel, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = m.width();
    check_width(n, MAX_DENSITY_WIDTH, "density simulation")?;
    if rho.rows() != 1 << n {
        return Err(Error::Dimension(format!(
            "{}x{} density for a {n}-qubit model",
            rho.rows(),
            rho.cols()
        )));
    }
    rho.check_density()?;
    let mut flat = rho.data().to_vec();
    evolve_flat_density(m, &mut flat);
    ComplexMatrix::new(1 << n, 1 << n, flat)
}

fn apply_readout(m: &FaultedModel, raw: Vec<f64>) -> Vec<f64> {
    if m.meas_overrides.iter().all(Option::is_none) {
        return raw;
    }
    let n = m.width();
    let mut out = vec![0.0; raw.len()];
    for (i, p) in raw.into_iter().enumerate() {
        let mut bits = Bits::new(n, i);
        for (q, o) in m.meas_overrides.iter().enumerate() {
            if let Some(v) = o {
                bits = bits.with_bit(q, v.bit());
            }
        }
        out[bits.value()] += p;
    }
    out
}

/// Exact outcome distribution of `t` on `m`.
pub fn run_exact(m: &FaultedModel, t: &Test) -> Result<OutcomeDistribution> {
    check_test(m, t)?;
    let n = m.width();
    let raw = if m.has_channels() {
        check_width(n, MAX_DENSITY_WIDTH, "density simulation")?;
        let psi = prepared_state(t);
        let mut rho = ComplexMatrix::outer(&psi, &psi).into_data();
        evolve_flat_density(m, &mut rho);
        if t.measure_basis == Basis::X {
            hadamard_all(&mut rho, 2 * n);
        }
        let dim = 1usize << n;
        (0..dim).map(|i| rho[i * dim + i].re).collect()
    } else {
        check_width(n, MAX_STATE_WIDTH, "state-vector simulation")?;
        let mut amps = prepared_state(t);
        evolve_pure(m, &mut amps)?;
        if t.measure_basis == Basis::X {
            hadamard_all(&mut amps, n);
        }
        amps.iter().map(|a| a.norm_sqr()).collect()
    };
    OutcomeDistribution::new(n, apply_readout(m, raw))
}

fn sample_chunk(cumulative: &[f64], last_nonzero: usize, seed: u64, chunk: u64, shots: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    let mut counts = vec![0u64; cumulative.len()];
    for _ in 0..shots {
        let u: f64 = rng.random();
        let idx = cumulative.partition_point(|&c| c <= u).min(last_nonzero);
        counts[idx] += 1;
    }
    counts
}

/// Multinomial sample of the exact distribution.
///
/// Shots are split into chunks of [`SHOT_CHUNK`]; chunk `i` draws from
/// ChaCha8 seeded with `seed` on stream `i`, so the counts depend only on
/// `(model, test, shots, seed)` and not on how chunks are scheduled.
pub fn run_shots(m: &FaultedModel, t: &Test, shots: u64, seed: u64) -> Result<BTreeMap<Bits, u64>> {
    run_shots_with(m, t, shots, seed, Execution::default())
}

pub fn run_shots_with(
    m: &FaultedModel,
    t: &Test,
    shots: u64,
    seed: u64,
    exec: Execution,
) -> Result<BTreeMap<Bits, u64>> {
    let dist = run_exact(m, t)?;
    Ok(sample_distribution(&dist, shots, seed, exec))
}

pub fn sample_distribution(
    dist: &OutcomeDistribution,
    shots: u64,
    seed: u64,
    exec: Execution,
) -> BTreeMap<Bits, u64> {
    let mut cumulative = Vec::with_capacity(dist.probs().len());
    let mut acc = 0.0;
    for &p in dist.probs() {
        acc += p;
        cumulative.push(acc);
    }
    let last_nonzero = dist.probs().iter().rposition(|&p| p > 0.0).unwrap_or(0);
    let chunks = shots.div_ceil(SHOT_CHUNK);
    let partial = exec.map_range(chunks as usize, |i| {
        let i = i as u64;
        let len = SHOT_CHUNK.min(shots - i * SHOT_CHUNK);
        sample_chunk(&cumulative, last_nonzero, seed, i, len)
    });
    let mut totals = vec![0u64; cumulative.len()];
    for counts in partial {
        for (t, c) in totals.iter_mut().zip(counts) {
            *t += c;
        }
    }
    totals
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c > 0)
        .map(|(i, c)| (Bits::new(dist.width(), i), c))
        .collect()
}

/// Most frequent bitstring; ties go to the lexicographically smallest.
pub fn majority_vote(counts: &BTreeMap<Bits, u64>) -> Result<Bits> {
    let mut best: Option<(Bits, u64)> = None;
    for (&b, &c) in counts {
        if best.is_none_or(|(_, bc)| c > bc) {
            best = Some((b, c));
        }
    }
    best.map(|(b, _)| b).ok_or(Error::EmptyCounts)
}

pub fn total_variation(counts: &BTreeMap<Bits, u64>, dist: &OutcomeDistribution) -> f64 {
    let total: u64 = counts.values().sum();
    let mut freq = vec![0.0; dist.probs().len()];
    for (b, &c) in counts {
        freq[b.value()] = c as f64 / total as f64;
    }
    0.5 * freq.iter().zip(dist.probs()).map(|(f, p)| (f - p).abs()).sum::<f64>()
}

/// Per-term signs of the state after X-basis preparation of `prep` and the
/// model body, before readout. Defined only when every amplitude is
/// `+-1/sqrt(2^n)`.
pub fn phase_signature(m: &FaultedModel, prep: &Bits) -> Result<BTreeMap<Bits, i8>> {
    let t = Test::new(*prep, Basis::X, Basis::X);
    check_test(m, &t)?;
    check_width(m.width(), MAX_STATE_WIDTH, "state-vector simulation")?;
    let mut amps = prepared_state(&t);
    evolve_pure(m, &mut amps)?;
    let mag = (amps.len() as f64).sqrt().recip();
    let mut out = BTreeMap::new();
    for (i, a) in amps.iter().enumerate() {
        let sign = if (a - C64::new(mag, 0.0)).norm() < 1e-9 {
            1
        } else if (a + C64::new(mag, 0.0)).norm() < 1e-9 {
            -1
        } else {
            return Err(Error::NotPhaseOnly(format!(
                "amplitude {a} on |{}> is not +-1/sqrt({})",
                Bits::new(m.width(), i),
                amps.len()
            )));
        };
        out.insert(Bits::new(m.width(), i), sign);
    }
    Ok(out)
}

/// The state after preparation and body, for pure models.
pub fn final_state(m: &FaultedModel, t: &Test) -> Result<Vec<C64>> {
    check_test(m, t)?;
    check_width(m.width(), MAX_STATE_WIDTH, "state-vector simulation")?;
    let mut amps = prepared_state(t);
    evolve_pure(m, &mut amps)?;
    Ok(amps)
}

/// The reported bit for `qubit` when the readout is overridden, if it is.
pub fn stuck_readout(m: &FaultedModel, qubit: usize) -> Option<Logic> {
    m.meas_overrides.get(qubit).copied().flatten()
}
