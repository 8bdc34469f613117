//! Fault tables, test-set requirements and test-set generation.
//!
//! A test detects a fault when the total variation distance between the gold
//! and faulted outcome distributions reaches the threshold `tau`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::faults::{apply_fault, enumerate_faults, EnumParams, Fault, FaultClass, FaultSet, FaultedModel};
use crate::qmath::PauliKind;
use crate::simulator::{run_exact, Basis, Bits, OutcomeDistribution, Test};

pub const DEFAULT_TAU: f64 = 0.5;
/// Slack applied when comparing a TVD against `tau`.
pub const TAU_SLACK: f64 = 1e-12;
/// Widths above this use a sampled test vocabulary.
pub const MAX_EXHAUSTIVE_WIDTH: usize = 6;
/// Preparations drawn per basis for sampled vocabularies.
pub const SAMPLED_PREPS: usize = 64;
const VOCAB_SEED: u64 = 0x5eed;
/// Probability above which a gold-circuit state counts as a basis state.
const DETERMINISTIC_TOL: f64 = 1e-9;

pub fn detection_tvd(gc: &Circuit, f: &Fault, t: &Test) -> Result<f64> {
    let gold = run_exact(&FaultedModel::gold(gc), t)?;
    Ok(gold.tvd(&run_exact(&apply_fault(gc, f)?, t)?))
}

pub fn distinguishes(gc: &Circuit, f: &Fault, t: &Test, tau: f64) -> Result<bool> {
    Ok(detection_tvd(gc, f, t)? >= tau - TAU_SLACK)
}

/// Detection matrix with tests as rows and faults as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FaultTable {
    pub tests: Vec<Test>,
    pub faults: Vec<Fault>,
    pub detects: Vec<Vec<bool>>,
    pub tvd: Vec<Vec<f64>>,
    pub tau: f64,
}

#[derive(Serialize)]
struct FaultTableJson<'a> {
    tau: f64,
    tests: Vec<String>,
    faults: Vec<String>,
    detects: Vec<Vec<u8>>,
    tvd: &'a [Vec<f64>],
}

impl FaultTable {
    pub fn column(&self, fault: usize) -> Vec<bool> {
        self.detects.iter().map(|row| row[fault]).collect()
    }

    /// Faults no test in the table detects.
    pub fn uncoverable(&self) -> Vec<usize> {
        (0..self.faults.len())
            .filter(|&j| self.detects.iter().all(|row| !row[j]))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("test");
        for f in &self.faults {
            out.push(',');
            out.push_str(&csv_field(&f.to_string()));
        }
        out.push('\n');
        for (t, row) in self.tests.iter().zip(&self.detects) {
            out.push_str(&csv_field(&t.to_string()));
            for &d in row {
                out.push_str(if d { ",1" } else { ",0" });
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let view = FaultTableJson {
            tau: self.tau,
            tests: self.tests.iter().map(Test::to_string).collect(),
            faults: self.faults.iter().map(Fault::to_string).collect(),
            detects: self
                .detects
                .iter()
                .map(|r| r.iter().map(|&d| u8::from(d)).collect())
                .collect(),
            tvd: &self.tvd,
        };
        serde_json::to_string_pretty(&view).expect("fault table serialises")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl fmt::Display for FaultTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, fault) in self.faults.iter().enumerate() {
            writeln!(f, "f{:<3} {fault}", j + 1)?;
        }
        let label_w = self.tests.iter().map(|t| t.to_string().len()).max().unwrap_or(4).max(4);
        write!(f, "{:label_w$}", "test")?;
        for j in 0..self.faults.len() {
            write!(f, " {:>3}", format!("f{}", j + 1))?;
        }
        writeln!(f)?;
        for (t, row) in self.tests.iter().zip(&self.detects) {
            write!(f, "{:label_w$}", t.to_string())?;
            for &d in row {
                write!(f, " {:>3}", u8::from(d))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

pub fn build_fault_table(gc: &Circuit, fs: &FaultSet, tests: &[Test], tau: f64) -> Result<FaultTable> {
    build_fault_table_with(gc, fs, tests, tau, Execution::default())
}

/// Cells are evaluated independently (in parallel under
/// [`Execution::Parallel`]); the result does not depend on scheduling.
pub fn build_fault_table_with(
    gc: &Circuit,
    fs: &FaultSet,
    tests: &[Test],
    tau: f64,
    exec: Execution,
) -> Result<FaultTable> {
    let gold = FaultedModel::gold(gc);
    let golds = exec
        .map(tests, |t| run_exact(&gold, t))
        .into_iter()
        .collect::<Result<Vec<OutcomeDistribution>>>()?;
    let models = exec
        .map(&fs.faults, |f| apply_fault(gc, f))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let nf = models.len();
    let cells = exec
        .map_range(tests.len() * nf, |k| {
            let (i, j) = (k / nf, k % nf);
            run_exact(&models[j], &tests[i]).map(|d| golds[i].tvd(&d))
        })
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    let tvd: Vec<Vec<f64>> = if nf == 0 {
        vec![Vec::new(); tests.len()]
    } else {
        cells.chunks(nf).map(<[f64]>::to_vec).collect()
    };
    let detects = tvd
        .iter()
        .map(|row| row.iter().map(|&d| d >= tau - TAU_SLACK).collect())
        .collect();
    Ok(FaultTable {
        tests: tests.to_vec(),
        faults: fs.faults.clone(),
        detects,
        tvd,
        tau,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Requirement {
    R1,
    R2,
    R3,
    R4,
    R5,
    R6,
    R7,
}

impl Requirement {
    pub const ALL: [Requirement; 7] = [
        Requirement::R1,
        Requirement::R2,
        Requirement::R3,
        Requirement::R4,
        Requirement::R5,
        Requirement::R6,
        Requirement::R7,
    ];

    /// Whether a fault set containing `classes` calls for this requirement.
    pub fn applies_to(self, fs: &FaultSet) -> bool {
        let has = |c: FaultClass| fs.faults.iter().any(|f| f.class() == c);
        let pauli = |kinds: &[PauliKind]| {
            fs.faults
                .iter()
                .any(|f| matches!(f, Fault::Pauli { kind, .. } if kinds.contains(kind)))
        };
        match self {
            Requirement::R1 => pauli(&[PauliKind::X, PauliKind::Y]),
            Requirement::R2 => pauli(&[PauliKind::Z]),
            Requirement::R3 => has(FaultClass::InitRotation) || has(FaultClass::InitStuck),
            Requirement::R4 => has(FaultClass::LostPhase),
            Requirement::R5 => has(FaultClass::Faded) || has(FaultClass::PhaseKick) || has(FaultClass::CzAngle),
            Requirement::R6 => has(FaultClass::Forced),
            Requirement::R7 => has(FaultClass::Meas),
        }
    }
}

impl fmt::Display for Requirement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// One condition a test set must meet; a requirement passes when all of its
/// atoms are met.
#[derive(Debug, Clone, PartialEq)]
enum Atom {
    AnyZTest,
    DetectedByX(Fault),
    PrepBit { qubit: usize, bit: u8 },
    AllControlsOn { stage: usize },
    OnlyControlOff { stage: usize, control: usize },
    Activated { stage: usize, target: u8 },
    OutputBit { qubit: usize, bit: u8 },
}

impl Atom {
    fn requirement(&self, fault_is_pauli: bool) -> Requirement {
        match self {
            Atom::AnyZTest => Requirement::R1,
            Atom::DetectedByX(_) if fault_is_pauli => Requirement::R2,
            Atom::DetectedByX(_) => Requirement::R4,
            Atom::PrepBit { .. } => Requirement::R3,
            Atom::AllControlsOn { .. } | Atom::OnlyControlOff { .. } => Requirement::R5,
            Atom::Activated { .. } => Requirement::R6,
            Atom::OutputBit { .. } => Requirement::R7,
        }
    }

    fn req(&self) -> Requirement {
        self.requirement(matches!(self, Atom::DetectedByX(Fault::Pauli { .. })))
    }
}

/// The requirement atoms of a gold circuit and which atoms each test meets.
struct AtomIndex<'a> {
    gc: &'a Circuit,
    atoms: Vec<Atom>,
    tau: f64,
    gold: FaultedModel,
    prefixes: Vec<FaultedModel>,
    x_models: Vec<Option<FaultedModel>>,
}

impl<'a> AtomIndex<'a> {
    fn new(gc: &'a Circuit, tau: f64) -> Result<Self> {
        let n = gc.width();
        let mut atoms = vec![Atom::AnyZTest];
        let z_faults = enumerate_faults(
            gc,
            &[FaultClass::Pauli],
            &EnumParams {
                pauli_kinds: vec![PauliKind::Z],
                pauli_p: 1.0,
                ..EnumParams::default()
            },
        );
        let lost = enumerate_faults(gc, &[FaultClass::LostPhase], &EnumParams::default());
        atoms.extend(z_faults.faults.into_iter().chain(lost.faults).map(Atom::DetectedByX));
        for qubit in 0..n {
            for bit in [0, 1] {
                atoms.push(Atom::PrepBit { qubit, bit });
            }
        }
        for (stage, g) in gc.gates().iter().enumerate() {
            if !g.is_kcn() {
                continue;
            }
            atoms.push(Atom::AllControlsOn { stage });
            for &control in &g.controls {
                atoms.push(Atom::OnlyControlOff { stage, control });
            }
            for target in [0, 1] {
                atoms.push(Atom::Activated { stage, target });
            }
        }
        for qubit in 0..n {
            for bit in [0, 1] {
                atoms.push(Atom::OutputBit { qubit, bit });
            }
        }
        let prefixes = (0..gc.len())
            .map(|s| Circuit::from_gates(n, gc.gates()[..s].to_vec()).map(|c| FaultedModel::gold(&c)))
            .collect::<Result<Vec<_>>>()?;
        let x_models = atoms
            .iter()
            .map(|a| match a {
                Atom::DetectedByX(f) => apply_fault(gc, f).map(Some),
                _ => Ok(None),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            gc,
            atoms,
            tau,
            gold: FaultedModel::gold(gc),
            prefixes,
            x_models,
        })
    }

    /// Indices of the atoms `t` meets.
    fn met_by(&self, t: &Test) -> Result<BTreeSet<usize>> {
        let mut met = BTreeSet::new();
        let z = t.is_z();
        let gold_out = run_exact(&self.gold, t)?;
        let states: Vec<Option<Bits>> = if z {
            self.prefixes
                .iter()
                .map(|p| run_exact(p, t).map(|d| d.deterministic(DETERMINISTIC_TOL)))
                .collect::<Result<_>>()?
        } else {
            Vec::new()
        };
        let output = if z { gold_out.deterministic(DETERMINISTIC_TOL) } else { None };
        let state = |stage: usize| states.get(stage).copied().flatten();
        for (k, atom) in self.atoms.iter().enumerate() {
            let ok = match *atom {
                Atom::AnyZTest => z,
                Atom::DetectedByX(_) => {
                    let m = self.x_models[k].as_ref().expect("model built for X atom");
                    t.is_x() && gold_out.tvd(&run_exact(m, t)?) >= self.tau - TAU_SLACK
                }
                Atom::PrepBit { qubit, bit } => t.basis == Basis::Z && t.prep.bit(qubit) == bit,
                Atom::AllControlsOn { stage } => state(stage)
                    .is_some_and(|s| self.gc.gates()[stage].controls.iter().all(|&c| s.bit(c) == 1)),
                Atom::OnlyControlOff { stage, control } => state(stage).is_some_and(|s| {
                    self.gc.gates()[stage]
                        .controls
                        .iter()
                        .all(|&c| s.bit(c) == u8::from(c != control))
                }),
                Atom::Activated { stage, target } => state(stage).is_some_and(|s| {
                    let g = &self.gc.gates()[stage];
                    g.controls.iter().all(|&c| s.bit(c) == 1) && s.bit(g.target) == target
                }),
                Atom::OutputBit { qubit, bit } => output.is_some_and(|o| o.bit(qubit) == bit),
            };
            if ok {
                met.insert(k);
            }
        }
        Ok(met)
    }

    fn requirement_atoms(&self, r: Requirement) -> BTreeSet<usize> {
        (0..self.atoms.len()).filter(|&k| self.atoms[k].req() == r).collect()
    }
}

/// Pass/fail per requirement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequirementChecks(pub BTreeMap<Requirement, bool>);

impl RequirementChecks {
    pub fn passes(&self, r: Requirement) -> bool {
        self.0.get(&r).copied().unwrap_or(false)
    }

    pub fn all_pass(&self) -> bool {
        self.0.values().all(|&b| b)
    }
}

/// R1: some Z-prepared, Z-measured test. R2/R4: every p=1 sigma_z fault and
/// every lost-phase fault of the circuit is detected by an X-basis test.
/// R3: each qubit is Z-prepared in both 0 and 1. R5: every k-CN gate sees
/// all controls at 1, and each control alone at 0, in some test. R6: every
/// k-CN gate is activated with target 0 and with target 1. R7: each qubit's
/// gold output is 0 in some test and 1 in another.
///
/// R3, R5, R6 and R7 count only Z-basis tests whose gold state at the point
/// in question is a computational basis state.
pub fn check_requirements(gc: &Circuit, tests: &[Test]) -> Result<RequirementChecks> {
    check_requirements_with(gc, tests, DEFAULT_TAU)
}

pub fn check_requirements_with(gc: &Circuit, tests: &[Test], tau: f64) -> Result<RequirementChecks> {
    let index = AtomIndex::new(gc, tau)?;
    let mut met = BTreeSet::new();
    for t in tests {
        met.extend(index.met_by(t)?);
    }
    Ok(checks_from(&index, &met))
}

fn checks_from(index: &AtomIndex, met: &BTreeSet<usize>) -> RequirementChecks {
    RequirementChecks(
        Requirement::ALL
            .into_iter()
            .map(|r| {
                let need = index.requirement_atoms(r);
                // an empty test set meets nothing, including vacuous requirements
                (r, !met.is_empty() && need.is_subset(met))
            })
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RequirementStatus {
    Pass,
    Fail,
    #[serde(rename = "n/a")]
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotAdvice {
    pub fault: String,
    pub tvd: f64,
    pub shots: u64,
}

/// `ceil(8 / delta^2)` majority-vote repetitions for a detection margin
/// `delta`. A heuristic, not a guarantee.
pub fn shot_advice(delta: f64) -> u64 {
    (8.0 / (delta * delta)).ceil() as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSetReport {
    pub chosen: Vec<Test>,
    pub covered: Vec<String>,
    pub uncovered: Vec<String>,
    pub coverage: f64,
    pub requirements: BTreeMap<Requirement, RequirementStatus>,
    pub shot_advice: Vec<ShotAdvice>,
    pub complete: bool,
}

impl TestSetReport {
    pub fn prep_strings(&self) -> Vec<String> {
        self.chosen.iter().map(|t| t.prep.to_string()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    /// One test per line, as accepted by [`parse_test_list`].
    pub fn tests_text(&self) -> String {
        self.chosen.iter().map(|t| format!("{t}\n")).collect()
    }
}

impl fmt::Display for TestSetReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "tests:")?;
        for t in &self.chosen {
            writeln!(f, "  {t}")?;
        }
        writeln!(
            f,
            "coverage: {:.4} ({}/{})",
            self.coverage,
            self.covered.len(),
            self.covered.len() + self.uncovered.len()
        )?;
        for u in &self.uncovered {
            writeln!(f, "  uncovered: {u}")?;
        }
        let mut reqs = String::new();
        for (r, s) in &self.requirements {
            let s = match s {
                RequirementStatus::Pass => "pass",
                RequirementStatus::Fail => "fail",
                RequirementStatus::NotApplicable => "n/a",
            };
            let _ = write!(reqs, " {r}={s}");
        }
        if !reqs.is_empty() {
            writeln!(f, "requirements:{reqs}")?;
        }
        writeln!(f, "complete: {}", self.complete)
    }
}

/// Parses one test per line; blank lines and `#` comments are skipped.
pub fn parse_test_list(text: &str) -> Result<Vec<Test>> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::parse)
        .collect()
}

fn cover_report(ft: &FaultTable, rows: &[usize]) -> TestSetReport {
    let mut covered = Vec::new();
    let mut uncovered = Vec::new();
    let mut advice = Vec::new();
    for (j, f) in ft.faults.iter().enumerate() {
        let best = rows
            .iter()
            .filter(|&&i| ft.detects[i][j])
            .map(|&i| ft.tvd[i][j])
            .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.max(d))));
        match best {
            Some(tvd) => {
                covered.push(f.to_string());
                advice.push(ShotAdvice {
                    fault: f.to_string(),
                    tvd,
                    shots: shot_advice(tvd),
                });
            }
            None => uncovered.push(f.to_string()),
        }
    }
    let coverage = if ft.faults.is_empty() {
        1.0
    } else {
        covered.len() as f64 / ft.faults.len() as f64
    };
    TestSetReport {
        chosen: rows.iter().map(|&i| ft.tests[i]).collect(),
        complete: uncovered.is_empty(),
        covered,
        uncovered,
        coverage,
        requirements: BTreeMap::new(),
        shot_advice: advice,
    }
}

/// Greedy cover of `universe` by `sets`: repeatedly the set meeting the most
/// still-open elements, ties to the lowest index. Stops when nothing more can
/// be covered.
fn greedy_indices(sets: &[BTreeSet<usize>], universe: &BTreeSet<usize>, start: &[usize]) -> Vec<usize> {
    let mut open: BTreeSet<usize> = universe.clone();
    for &i in start {
        for e in &sets[i] {
            open.remove(e);
        }
    }
    let mut chosen = Vec::new();
    while !open.is_empty() {
        let best = sets
            .iter()
            .enumerate()
            .map(|(i, s)| (i, s.intersection(&open).count()))
            .fold((0, 0), |b, c| if c.1 > b.1 { c } else { b });
        if best.1 == 0 {
            break;
        }
        for e in &sets[best.0] {
            open.remove(e);
        }
        chosen.push(best.0);
    }
    chosen
}

/// Greedy set cover over the table's rows.
pub fn greedy_cover(ft: &FaultTable) -> TestSetReport {
    let rows = greedy_rows(ft);
    cover_report(ft, &rows)
}

fn greedy_rows(ft: &FaultTable) -> Vec<usize> {
    let sets: Vec<BTreeSet<usize>> = ft
        .detects
        .iter()
        .map(|row| (0..row.len()).filter(|&j| row[j]).collect())
        .collect();
    let universe = (0..ft.faults.len()).collect();
    greedy_indices(&sets, &universe, &[])
}

/// All Z-basis tests then all X-basis tests for widths up to
/// [`MAX_EXHAUSTIVE_WIDTH`]; beyond that [`SAMPLED_PREPS`] fixed-seed random
/// preparations per basis.
pub fn candidate_tests(width: usize) -> Vec<Test> {
    let preps: Vec<Bits> = if width <= MAX_EXHAUSTIVE_WIDTH {
        Bits::all(width).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(VOCAB_SEED);
        let space = 1usize << width;
        let mut v: Vec<Bits> = sample(&mut rng, space, SAMPLED_PREPS.min(space))
            .into_iter()
            .map(|x| Bits::new(width, x))
            .collect();
        v.sort();
        v
    };
    [Basis::Z, Basis::X]
        .into_iter()
        .flat_map(|b| preps.iter().map(move |&p| Test::new(p, b, b)))
        .collect()
}

/// Builds the fault table over [`candidate_tests`], extracts a greedy cover,
/// adds tests greedily until every applicable requirement is met (when the
/// vocabulary allows it), then drops tests that became redundant.
pub fn generate_complete_set(gc: &Circuit, fs: &FaultSet, tau: f64) -> Result<TestSetReport> {
    generate_complete_set_with(gc, fs, tau, Execution::default())
}

pub fn generate_complete_set_with(gc: &Circuit, fs: &FaultSet, tau: f64, exec: Execution) -> Result<TestSetReport> {
    let vocab = candidate_tests(gc.width());
    let ft = build_fault_table_with(gc, fs, &vocab, tau, exec)?;
    let mut rows = greedy_rows(&ft);

    let index = AtomIndex::new(gc, tau)?;
    let applicable: Vec<Requirement> = Requirement::ALL.into_iter().filter(|r| r.applies_to(fs)).collect();
    let needed: BTreeSet<usize> = applicable
        .iter()
        .flat_map(|&r| index.requirement_atoms(r))
        .collect();
    let met_sets = exec
        .map(&vocab, |t| index.met_by(t))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let restricted: Vec<BTreeSet<usize>> = met_sets
        .iter()
        .map(|s| s.intersection(&needed).copied().collect())
        .collect();
    rows.extend(greedy_indices(&restricted, &needed, &rows));

    // drop tests made redundant by later picks, last pick first
    let nf = ft.faults.len();
    let elements: Vec<BTreeSet<usize>> = (0..vocab.len())
        .map(|i| {
            let faults = (0..nf).filter(|&j| ft.detects[i][j]);
            faults.chain(restricted[i].iter().map(|a| a + nf)).collect()
        })
        .collect();
    let union = |rows: &[usize]| -> BTreeSet<usize> { rows.iter().flat_map(|&i| elements[i].iter().copied()).collect() };
    let target = union(&rows);
    for pos in (0..rows.len()).rev() {
        let mut without = rows.clone();
        without.remove(pos);
        if union(&without) == target {
            rows = without;
        }
    }

    let met: BTreeSet<usize> = rows.iter().flat_map(|&i| met_sets[i].iter().copied()).collect();
    let checks = checks_from(&index, &met);
    let mut report = cover_report(&ft, &rows);
    report.requirements = Requirement::ALL
        .into_iter()
        .map(|r| {
            let status = if !applicable.contains(&r) {
                RequirementStatus::NotApplicable
            } else if checks.passes(r) {
                RequirementStatus::Pass
            } else {
                RequirementStatus::Fail
            };
            (r, status)
        })
        .collect();
    report.complete = report.uncovered.is_empty()
        && report.requirements.values().all(|s| *s != RequirementStatus::Fail);
    Ok(report)
}

/// Coverage of a given test list against a fault set, with requirement checks
/// for the classes present.
pub fn verify_tests(gc: &Circuit, fs: &FaultSet, tests: &[Test], tau: f64) -> Result<TestSetReport> {
    if let Some(t) = tests.iter().find(|t| t.width() != gc.width()) {
        return Err(Error::InvalidTest(format!("test `{t}` does not match a {}-qubit circuit", gc.width())));
    }
    let ft = build_fault_table(gc, fs, tests, tau)?;
    let rows: Vec<usize> = (0..tests.len()).collect();
    let mut report = cover_report(&ft, &rows);
    let checks = check_requirements_with(gc, tests, tau)?;
    report.requirements = Requirement::ALL
        .into_iter()
        .map(|r| {
            let status = match (r.applies_to(fs), checks.passes(r)) {
                (false, _) => RequirementStatus::NotApplicable,
                (true, true) => RequirementStatus::Pass,
                (true, false) => RequirementStatus::Fail,
            };
            (r, status)
        })
        .collect();
    report.complete = report.uncovered.is_empty()
        && report.requirements.values().all(|s| *s != RequirementStatus::Fail);
    Ok(report)
}
