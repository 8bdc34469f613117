//! Distances between quantum states, worst-case process distances over a
//! finite input set, and linear-inversion tomography for one and two qubits.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use rand::Rng;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::faults::FaultedModel;
use crate::qmath::{self, kron, kron_all, matrix_sqrt_psd, ComplexMatrix, PauliKind, StateVector, C64, I, ONE, ZERO};
use crate::simulator::evolve_operator;

/// Eigenvalue above which a density is treated as pure.
const PURE_TOL: f64 = 1e-12;

fn check_pair(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<()> {
    if rho.rows() != sigma.rows() || rho.cols() != sigma.cols() {
        return Err(Error::Dimension(format!(
            "{}x{} vs {}x{}",
            rho.rows(),
            rho.cols(),
            sigma.rows(),
            sigma.cols()
        )));
    }
    rho.check_density()?;
    sigma.check_density()
}

fn expectation(op: &ComplexMatrix, psi: &[C64]) -> C64 {
    let mut acc = ZERO;
    for i in 0..op.rows() {
        let mut row = ZERO;
        for j in 0..op.cols() {
            row += op[(i, j)] * psi[j];
        }
        acc += psi[i].conj() * row;
    }
    acc
}

fn pure_vector(rho: &ComplexMatrix) -> Result<Option<Vec<C64>>> {
    let (values, vecs) = rho.eigh()?;
    let top = values.len() - 1;
    if values[top] > 1.0 - PURE_TOL {
        return Ok(Some((0..rho.rows()).map(|r| vecs[(r, top)]).collect()));
    }
    Ok(None)
}

/// `F = (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`.
///
/// When either argument is pure this is evaluated as `<psi|other|psi>`;
/// otherwise as the squared nuclear norm of `sqrt(rho) sqrt(sigma)`.
pub fn fidelity(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    check_pair(rho, sigma)?;
    for (a, b) in [(rho, sigma), (sigma, rho)] {
        if let Some(psi) = pure_vector(a)? {
            return Ok(expectation(b, &psi).re.clamp(0.0, 1.0));
        }
    }
    let prod = matrix_sqrt_psd(rho)?.matmul(&matrix_sqrt_psd(sigma)?)?;
    let nuclear: f64 = prod.singular_values().iter().sum();
    Ok((nuclear * nuclear).clamp(0.0, 1.0))
}

/// `D = tr|rho - sigma| / 2`.
pub fn trace_distance(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    check_pair(rho, sigma)?;
    let (values, _) = (rho - sigma).eigh()?;
    Ok((0.5 * values.iter().map(|v| v.abs()).sum::<f64>()).clamp(0.0, 1.0))
}

pub fn bures(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    let f = fidelity(rho, sigma)?;
    Ok((2.0 - 2.0 * f.sqrt()).max(0.0).sqrt())
}

pub fn angle(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    Ok(fidelity(rho, sigma)?.sqrt().min(1.0).acos())
}

/// Row-major vectorisation of a square matrix.
fn vectorize(m: &ComplexMatrix) -> Vec<C64> {
    m.data().to_vec()
}

fn unvectorize(v: Vec<C64>) -> Result<ComplexMatrix> {
    let d = (v.len() as f64).sqrt().round() as usize;
    ComplexMatrix::new(d, d, v)
}

/// A linear map on `n`-qubit operators, stored as the `d^2 x d^2` matrix that
/// acts on row-major vectorised operators.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessMap {
    n: usize,
    superoperator: ComplexMatrix,
}

impl ProcessMap {
    pub fn new(n: usize, superoperator: ComplexMatrix) -> Result<Self> {
        let d2 = 1usize << (2 * n);
        if superoperator.rows() != d2 || superoperator.cols() != d2 {
            return Err(Error::Dimension(format!(
                "superoperator {}x{} for {n} qubits",
                superoperator.rows(),
                superoperator.cols()
            )));
        }
        Ok(Self { n, superoperator })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            superoperator: ComplexMatrix::identity(1 << (2 * n)),
        }
    }

    pub fn from_unitary(u: &ComplexMatrix) -> Result<Self> {
        Self::from_kraus(std::slice::from_ref(u))
    }

    pub fn from_kraus(kraus: &[ComplexMatrix]) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::Dimension("empty Kraus set".into()))?;
        let d = first.rows();
        if !d.is_power_of_two() || kraus.iter().any(|k| k.rows() != d || k.cols() != d) {
            return Err(Error::Dimension("Kraus operators must share a 2^n square shape".into()));
        }
        let mut s = ComplexMatrix::zeros(d * d, d * d);
        for k in kraus {
            s = &s + &kron(k, &k.conj());
        }
        Self::new(d.trailing_zeros() as usize, s)
    }

    /// The quantum part of a faulted model (preparation faults and body).
    pub fn from_model(m: &FaultedModel) -> Result<Self> {
        let d = 1usize << m.width();
        let cols = Execution::default().map_range(d * d, |k| {
            let mut e = ComplexMatrix::zeros(d, d);
            e[(k / d, k % d)] = ONE;
            evolve_operator(m, &e).map(|out| vectorize(&out))
        });
        let mut s = ComplexMatrix::zeros(d * d, d * d);
        for (k, col) in cols.into_iter().enumerate() {
            for (r, v) in col?.into_iter().enumerate() {
                s[(r, k)] = v;
            }
        }
        Self::new(m.width(), s)
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn superoperator(&self) -> &ComplexMatrix {
        &self.superoperator
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.rows() != 1 << self.n || rho.cols() != 1 << self.n {
            return Err(Error::Dimension(format!(
                "{}x{} operator for a {}-qubit process",
                rho.rows(),
                rho.cols(),
                self.n
            )));
        }
        unvectorize(self.superoperator.apply(&vectorize(rho))?)
    }

    /// Largest `|tr E(|i><j|) - delta_ij|` over the matrix units.
    pub fn trace_preservation_deviation(&self) -> f64 {
        let d = 1usize << self.n;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let col = i * d + j;
                let tr: C64 = (0..d).map(|r| self.superoperator[(r * d + r, col)]).sum();
                let want = if i == j { ONE } else { ZERO };
                worst = worst.max((tr - want).norm());
            }
        }
        worst
    }
}

/// Preparation states and measurement projectors for process tomography.
#[derive(Debug, Clone)]
pub struct OperatorBasisSet {
    pub n: usize,
    pub labels: Vec<String>,
    pub states: Vec<StateVector>,
    pub projectors: Vec<StateVector>,
}

impl OperatorBasisSet {
    pub fn from_labels(labels: &[&str], projectors: &[&str]) -> Result<Self> {
        let states = labels.iter().map(|l| parse_ket(l)).collect::<Result<Vec<_>>>()?;
        let projectors = projectors.iter().map(|l| parse_ket(l)).collect::<Result<Vec<_>>>()?;
        let n = states.first().map_or(0, StateVector::qubits);
        if states.iter().chain(&projectors).any(|s| s.qubits() != n) {
            return Err(Error::Dimension("basis states of mixed width".into()));
        }
        Ok(Self {
            n,
            labels: labels.iter().map(|s| s.to_string()).collect(),
            states,
            projectors,
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn densities(&self) -> Vec<ComplexMatrix> {
        self.states.iter().map(StateVector::density).collect()
    }

    /// Rank of the span of the preparation densities.
    pub fn rank(&self) -> usize {
        self.gram().rank(1e-10)
    }

    /// Columns are the vectorised preparation densities.
    fn gram(&self) -> ComplexMatrix {
        let d2 = 1usize << (2 * self.n);
        let mut m = ComplexMatrix::zeros(d2, self.len());
        for (k, rho) in self.densities().iter().enumerate() {
            for (r, v) in vectorize(rho).into_iter().enumerate() {
                m[(r, k)] = v;
            }
        }
        m
    }
}

const TWO_QUBIT_INPUTS: [&str; 16] = [
    "|00>", "|01>", "|10>", "|11>", "|0+>", "|0y->", "|1y->", "|1+>", "|++>", "|y+y->", "|y++>", "|+y+>",
    "|+1>", "|y+1>", "|+0>", "|y+0>",
];

const TWO_QUBIT_PROJECTORS: [&str; 16] = [
    "|00>", "|10>", "|+1>", "|y-0>", "|y-1>", "|11>", "|01>", "|0->", "|0y->", "|y-y->", "|y-->", "|+->",
    "|+y+>", "|1->", "|1y->", "|+0>",
];

/// The standard preparation set: `{|0>, |1>, |+>, |y+>}` for one qubit and
/// a 16-state product set for two.
pub fn default_basis(n: usize) -> Result<OperatorBasisSet> {
    match n {
        1 => {
            let one = ["|0>", "|1>", "|+>", "|y+>"];
            OperatorBasisSet::from_labels(&one, &one)
        }
        2 => OperatorBasisSet::from_labels(&TWO_QUBIT_INPUTS, &TWO_QUBIT_PROJECTORS),
        other => Err(Error::UnsupportedQubits(other)),
    }
}

fn single_ket(symbol: &str) -> Option<[C64; 2]> {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let ih = I * h;
    Some(match symbol {
        "0" => [ONE, ZERO],
        "1" => [ZERO, ONE],
        "+" => [h, h],
        "-" => [h, -h],
        "y+" => [h, ih],
        "y-" => [h, -ih],
        _ => return None,
    })
}

/// Parses product kets such as `|0>`, `|+y->` or `|1>|->`.
pub fn parse_ket(text: &str) -> Result<StateVector> {
    let bad = |why: &str| Error::Parse {
        line: 0,
        message: format!("ket `{text}`: {why}"),
    };
    let mut factors: Vec<[C64; 2]> = Vec::new();
    let mut rest = text.trim();
    if rest.is_empty() {
        return Err(bad("empty"));
    }
    while !rest.is_empty() {
        let inner = rest
            .strip_prefix('|')
            .and_then(|r| r.split_once('>'))
            .ok_or_else(|| bad("expected |...>"))?;
        let (body, tail) = inner;
        let chars: Vec<char> = body.chars().collect();
        let mut i = 0;
        if chars.is_empty() {
            return Err(bad("empty ket"));
        }
        while i < chars.len() {
            let take = if chars[i] == 'y' { 2 } else { 1 };
            let sym: String = chars[i..(i + take).min(chars.len())].iter().collect();
            factors.push(single_ket(&sym).ok_or_else(|| bad(&format!("unknown symbol `{sym}`")))?);
            i += take;
        }
        rest = tail.trim_start();
    }
    let amps = factors.iter().fold(vec![ONE], |acc, f| {
        acc.iter().flat_map(|a| f.iter().map(move |b| a * b)).collect()
    });
    StateVector::new(amps)
}

/// Pauli strings of length `n` in lexicographic `I < X < Y < Z` order.
pub fn pauli_strings(n: usize) -> Vec<String> {
    let mut out = vec![String::new()];
    for _ in 0..n {
        out = out
            .iter()
            .flat_map(|p| PauliKind::ALL.iter().map(move |k| format!("{p}{}", k.symbol().to_ascii_uppercase())))
            .collect();
    }
    out
}

fn pauli_operator(label: &str) -> Result<ComplexMatrix> {
    let factors = label
        .chars()
        .map(|c| PauliKind::from_symbol(c).map(qmath::pauli))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::MissingObservable(label.to_string()))?;
    Ok(kron_all(&factors))
}

/// `tr(P rho)` for every Pauli string `P`.
pub fn pauli_expectations(rho: &ComplexMatrix) -> Result<BTreeMap<String, f64>> {
    let d = rho.rows();
    if !rho.is_square() || !d.is_power_of_two() {
        return Err(Error::Dimension(format!("{}x{} operator", rho.rows(), rho.cols())));
    }
    let n = d.trailing_zeros() as usize;
    pauli_strings(n)
        .into_iter()
        .map(|p| {
            let op = pauli_operator(&p)?;
            Ok((p, op.matmul(rho)?.trace().re))
        })
        .collect()
}

/// `rho = 2^-n sum_P <P> P` from the expectations of all `4^n` Pauli strings.
pub fn state_tomography(expectations: &BTreeMap<String, f64>, n: usize) -> Result<ComplexMatrix> {
    let d = 1usize << n;
    let mut rho = ComplexMatrix::zeros(d, d);
    for p in pauli_strings(n) {
        let e = *expectations
            .get(&p)
            .ok_or_else(|| Error::MissingObservable(p.clone()))?;
        rho = &rho + &pauli_operator(&p)?.scale(C64::new(e / d as f64, 0.0));
    }
    Ok(rho)
}

/// Reconstructs a process from its action on `basis`, observed through
/// Pauli-expectation state tomography, by linear inversion.
pub fn process_characterize<F>(channel: F, basis: &OperatorBasisSet) -> Result<ProcessMap>
where
    F: Fn(&ComplexMatrix) -> Result<ComplexMatrix>,
{
    let n = basis.n;
    if n > 2 {
        return Err(Error::UnsupportedQubits(n));
    }
    let d2 = 1usize << (2 * n);
    let inputs = basis.gram();
    let rank = inputs.rank(1e-10);
    if basis.len() != d2 || rank < d2 {
        return Err(Error::RankDeficient { rank, needed: d2 });
    }
    let mut outputs = ComplexMatrix::zeros(d2, d2);
    for (k, rho) in basis.densities().iter().enumerate() {
        let observed = state_tomography(&pauli_expectations(&channel(rho)?)?, n)?;
        for (r, v) in vectorize(&observed).into_iter().enumerate() {
            outputs[(r, k)] = v;
        }
    }
    ProcessMap::new(n, outputs.matmul(&inputs.inverse()?)?)
}

fn check_processes(real: &ProcessMap, ideal: &ProcessMap, inputs: &OperatorBasisSet) -> Result<()> {
    if real.n != ideal.n || real.n != inputs.n {
        return Err(Error::Dimension(format!(
            "processes on {} and {} qubits with {}-qubit inputs",
            real.n, ideal.n, inputs.n
        )));
    }
    Ok(())
}

fn output_pairs(
    real: &ProcessMap,
    ideal: &ProcessMap,
    inputs: &OperatorBasisSet,
) -> Result<Vec<(ComplexMatrix, ComplexMatrix)>> {
    check_processes(real, ideal, inputs)?;
    inputs
        .densities()
        .iter()
        .map(|rho| Ok((real.apply(rho)?, ideal.apply(rho)?)))
        .collect()
}

/// Minimum output fidelity over the input set.
pub fn s_fidelity(real: &ProcessMap, ideal: &ProcessMap, inputs: &OperatorBasisSet) -> Result<f64> {
    output_pairs(real, ideal, inputs)?
        .iter()
        .try_fold(1.0f64, |acc, (a, b)| Ok(acc.min(fidelity(a, b)?)))
}

/// Maximum output trace distance over the input set.
pub fn s_distance(real: &ProcessMap, ideal: &ProcessMap, inputs: &OperatorBasisSet) -> Result<f64> {
    output_pairs(real, ideal, inputs)?
        .iter()
        .try_fold(0.0f64, |acc, (a, b)| Ok(acc.max(trace_distance(a, b)?)))
}

/// A random pure state with uniform real and imaginary parts, normalised.
pub fn random_pure_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> StateVector {
    loop {
        let amps: Vec<C64> = (0..1usize << n)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        if let Ok(s) = StateVector::normalized(amps) {
            return s;
        }
    }
}

/// `G G^dagger / tr(G G^dagger)` for a random `2^n x rank` matrix `G`.
/// Not Haar distributed; intended for property checks.
pub fn random_density<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> ComplexMatrix {
    let d = 1usize << n;
    let mut rho = ComplexMatrix::zeros(d, d);
    for _ in 0..rank.max(1) {
        let psi = random_pure_state(n, rng);
        let w = rng.random_range(0.05..1.0);
        rho = &rho + &psi.density().scale(C64::new(w, 0.0));
    }
    let tr = rho.trace().re;
    let mut rho = rho.scale(C64::new(1.0 / tr, 0.0));
    // enforce exact Hermiticity and unit trace after rounding
    rho = (&rho + &rho.dagger()).scale(C64::new(0.5, 0.0));
    let tr = rho.trace().re;
    rho.scale(C64::new(1.0 / tr, 0.0))
}
