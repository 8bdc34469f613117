//! Logical fault models and their injection into a gold circuit.
//!
//! Textual forms (used by the CLI and in reports) round-trip through
//! [`Fault::parse`]:
//!
//! ```text
//! pauli:x@L7 p=1              init:rot q=0 axis=x theta=0.3
//! init:stuck q=1 to=0 gamma=0.5
//! lostphase:ctrl s=2 w=0      lostphase:gate s=2
//! kick s=2 eps=0.1            faded s=1 w=0
//! forced s=1 v=0              meas q=2 v=1
//! czangle s=0 phi=1.57
//! ```
//!
//! Location ids (`L7`) are those of [`enumerate_error_locations`].

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::circuit::{enumerate_error_locations, parse_angle, Circuit, ErrorLocation, Gate, GateKind, LocationPosition};
use crate::error::{Error, Result};
use crate::qmath::{self, Axis, ComplexMatrix, PauliKind, C64, ONE, UNITARY_TOL, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Logic {
    Zero,
    One,
}

impl Logic {
    pub fn bit(self) -> u8 {
        match self {
            Logic::Zero => 0,
            Logic::One => 1,
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "0" => Some(Logic::Zero),
            "1" => Some(Logic::One),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MissingPart {
    Control(usize),
    WholeGate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fault {
    /// Unwanted Pauli at an error location, present with probability `p`.
    Pauli {
        kind: PauliKind,
        location: ErrorLocation,
        p: f64,
    },
    InitRotation {
        qubit: usize,
        axis: Axis,
        theta: f64,
    },
    /// Preparation damped towards `stuck_to` with strength `gamma`.
    InitStuck {
        qubit: usize,
        stuck_to: Logic,
        gamma: f64,
    },
    LostPhase {
        stage: usize,
        missing: MissingPart,
    },
    PhaseKick {
        stage: usize,
        eps: f64,
    },
    FadedControl {
        stage: usize,
        control: usize,
    },
    ForcedGate {
        stage: usize,
        stuck: Logic,
    },
    MeasStuck {
        qubit: usize,
        value: Logic,
    },
    CzAngle {
        stage: usize,
        phi: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FaultClass {
    Pauli,
    InitRotation,
    InitStuck,
    LostPhase,
    PhaseKick,
    Faded,
    Forced,
    Meas,
    CzAngle,
}

impl FaultClass {
    pub const ALL: [FaultClass; 9] = [
        FaultClass::Pauli,
        FaultClass::InitRotation,
        FaultClass::InitStuck,
        FaultClass::LostPhase,
        FaultClass::PhaseKick,
        FaultClass::Faded,
        FaultClass::Forced,
        FaultClass::Meas,
        FaultClass::CzAngle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FaultClass::Pauli => "pauli",
            FaultClass::InitRotation => "initrot",
            FaultClass::InitStuck => "initstuck",
            FaultClass::LostPhase => "lostphase",
            FaultClass::PhaseKick => "kick",
            FaultClass::Faded => "faded",
            FaultClass::Forced => "forced",
            FaultClass::Meas => "meas",
            FaultClass::CzAngle => "czangle",
        }
    }

    /// Comma-separated class names; `init` expands to both init classes and
    /// `all` to every class.
    pub fn parse_list(s: &str) -> Result<Vec<FaultClass>> {
        let mut out = Vec::new();
        for name in s.split(',').map(str::trim).filter(|n| !n.is_empty()) {
            let expanded: Vec<FaultClass> = match name {
                "all" => FaultClass::ALL.to_vec(),
                "init" => vec![FaultClass::InitRotation, FaultClass::InitStuck],
                other => vec![other.parse()?],
            };
            for c in expanded {
                if !out.contains(&c) {
                    out.push(c);
                }
            }
        }
        out.sort();
        Ok(out)
    }
}

impl FromStr for FaultClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FaultClass::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidFault {
                text: s.to_string(),
                reason: "unknown fault class".into(),
            })
    }
}

impl fmt::Display for FaultClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Fault {
    pub fn class(&self) -> FaultClass {
        match self {
            Fault::Pauli { .. } => FaultClass::Pauli,
            Fault::InitRotation { .. } => FaultClass::InitRotation,
            Fault::InitStuck { .. } => FaultClass::InitStuck,
            Fault::LostPhase { .. } => FaultClass::LostPhase,
            Fault::PhaseKick { .. } => FaultClass::PhaseKick,
            Fault::FadedControl { .. } => FaultClass::Faded,
            Fault::ForcedGate { .. } => FaultClass::Forced,
            Fault::MeasStuck { .. } => FaultClass::Meas,
            Fault::CzAngle { .. } => FaultClass::CzAngle,
        }
    }

    /// Checks that every stage, wire and location the fault names exists in
    /// `c` and that parameters are in range.
    pub fn validate(&self, c: &Circuit) -> Result<()> {
        let mismatch = |m: String| Err(Error::FaultMismatch(format!("{self}: {m}")));
        let stage_gate = |stage: usize| -> Result<&Gate> {
            c.gates().get(stage).ok_or_else(|| {
                Error::FaultMismatch(format!("{self}: stage {stage} out of range ({} stages)", c.len()))
            })
        };
        let qubit_ok = |q: usize| q < c.width();
        match *self {
            Fault::Pauli { location, p, .. } => {
                if !(p > 0.0 && p <= 1.0) {
                    return mismatch(format!("placement probability {p} outside (0, 1]"));
                }
                let locs = enumerate_error_locations(c);
                if location.id == 0 || locs.get(location.id - 1) != Some(&location) {
                    return mismatch(format!("no error location L{}", location.id));
                }
            }
            Fault::InitRotation { qubit, .. } | Fault::MeasStuck { qubit, .. } if !qubit_ok(qubit) => {
                return mismatch(format!("qubit {qubit} out of range"));
            }
            Fault::InitStuck { qubit, gamma, .. } => {
                if !qubit_ok(qubit) {
                    return mismatch(format!("qubit {qubit} out of range"));
                }
                if !(0.0..=1.0).contains(&gamma) {
                    return mismatch(format!("gamma {gamma} outside [0, 1]"));
                }
            }
            Fault::LostPhase { stage, missing } => {
                let g = stage_gate(stage)?;
                if let MissingPart::Control(w) = missing {
                    if !g.controls.contains(&w) {
                        return mismatch(format!("wire {w} is not a control of stage {stage}"));
                    }
                }
            }
            Fault::FadedControl { stage, control } => {
                if !stage_gate(stage)?.controls.contains(&control) {
                    return mismatch(format!("wire {control} is not a control of stage {stage}"));
                }
            }
            Fault::ForcedGate { stage, .. } => {
                if !stage_gate(stage)?.is_kcn() {
                    return mismatch(format!("stage {stage} is not a k-CN gate"));
                }
            }
            Fault::PhaseKick { stage, .. } | Fault::CzAngle { stage, .. } => {
                let g = stage_gate(stage)?;
                if !(g.is_kcn() || matches!(g.kind, GateKind::Phase(_))) {
                    return mismatch(format!("stage {stage} is neither k-CN nor controlled phase"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Parses the textual form, resolving location ids against `c`.
    pub fn parse(text: &str, c: &Circuit) -> Result<Fault> {
        let fault = parse_fault_text(text.trim(), c).map_err(|reason| Error::InvalidFault {
            text: text.trim().to_string(),
            reason,
        })?;
        fault.validate(c)?;
        Ok(fault)
    }
}

fn fields(tokens: &[&str]) -> std::result::Result<BTreeMap<String, String>, String> {
    let mut map = BTreeMap::new();
    for t in tokens {
        let (k, v) = t.split_once('=').ok_or_else(|| format!("expected key=value, got `{t}`"))?;
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(format!("repeated field `{k}`"));
        }
    }
    Ok(map)
}

fn parse_fault_text(text: &str, c: &Circuit) -> std::result::Result<Fault, String> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let head = *tokens.first().ok_or("empty fault")?;
    let mut f = fields(&tokens[1..])?;
    let mut take = |key: &str| f.remove(key).ok_or_else(|| format!("missing field `{key}`"));
    let index = |v: String| v.parse::<usize>().map_err(|_| format!("bad index `{v}`"));
    let real = |v: String| parse_angle(&v).ok_or_else(|| format!("bad number `{v}`"));
    let logic = |v: String| Logic::parse(&v).ok_or_else(|| format!("bad logic value `{v}`"));

    let fault = if let Some(rest) = head.strip_prefix("pauli:") {
        let (kind, loc) = rest.split_once("@L").ok_or("expected pauli:<k>@L<id>")?;
        let kind = match kind {
            "x" => PauliKind::X,
            "y" => PauliKind::Y,
            "z" => PauliKind::Z,
            other => return Err(format!("bad Pauli kind `{other}`")),
        };
        let id = index(loc.to_string())?;
        let location = *enumerate_error_locations(c)
            .get(id.wrapping_sub(1))
            .ok_or_else(|| format!("no error location L{id}"))?;
        let p = match f.remove("p") {
            Some(v) => real(v)?,
            None => 1.0,
        };
        Fault::Pauli { kind, location, p }
    } else {
        match head {
            "init:rot" => Fault::InitRotation {
                qubit: index(take("q")?)?,
                axis: Axis::from_symbol(&take("axis")?).ok_or("bad axis")?,
                theta: real(take("theta")?)?,
            },
            "init:stuck" => Fault::InitStuck {
                qubit: index(take("q")?)?,
                stuck_to: logic(take("to")?)?,
                gamma: real(take("gamma")?)?,
            },
            "lostphase:ctrl" => Fault::LostPhase {
                stage: index(take("s")?)?,
                missing: MissingPart::Control(index(take("w")?)?),
            },
            "lostphase:gate" => Fault::LostPhase {
                stage: index(take("s")?)?,
                missing: MissingPart::WholeGate,
            },
            "kick" => Fault::PhaseKick {
                stage: index(take("s")?)?,
                eps: real(take("eps")?)?,
            },
            "faded" => Fault::FadedControl {
                stage: index(take("s")?)?,
                control: index(take("w")?)?,
            },
            "forced" => Fault::ForcedGate {
                stage: index(take("s")?)?,
                stuck: logic(take("v")?)?,
            },
            "meas" => Fault::MeasStuck {
                qubit: index(take("q")?)?,
                value: logic(take("v")?)?,
            },
            "czangle" => Fault::CzAngle {
                stage: index(take("s")?)?,
                phi: real(take("phi")?)?,
            },
            other => return Err(format!("unknown fault kind `{other}`")),
        }
    };
    if let Some(k) = f.keys().next() {
        return Err(format!("unexpected field `{k}`"));
    }
    Ok(fault)
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Fault::Pauli { kind, location, p } => {
                write!(f, "pauli:{}@L{} p={p}", kind.symbol(), location.id)
            }
            Fault::InitRotation { qubit, axis, theta } => {
                write!(f, "init:rot q={qubit} axis={} theta={theta}", axis.symbol())
            }
            Fault::InitStuck {
                qubit,
                stuck_to,
                gamma,
            } => write!(f, "init:stuck q={qubit} to={} gamma={gamma}", stuck_to.bit()),
            Fault::LostPhase {
                stage,
                missing: MissingPart::Control(w),
            } => write!(f, "lostphase:ctrl s={stage} w={w}"),
            Fault::LostPhase {
                stage,
                missing: MissingPart::WholeGate,
            } => write!(f, "lostphase:gate s={stage}"),
            Fault::PhaseKick { stage, eps } => write!(f, "kick s={stage} eps={eps}"),
            Fault::FadedControl { stage, control } => write!(f, "faded s={stage} w={control}"),
            Fault::ForcedGate { stage, stuck } => write!(f, "forced s={stage} v={}", stuck.bit()),
            Fault::MeasStuck { qubit, value } => write!(f, "meas q={qubit} v={}", value.bit()),
            Fault::CzAngle { stage, phi } => write!(f, "czangle s={stage} phi={phi}"),
        }
    }
}

/// Parameters used when enumerating parametrised fault classes.
#[derive(Debug, Clone, PartialEq)]
pub struct EnumParams {
    pub pauli_kinds: Vec<PauliKind>,
    pub pauli_p: f64,
    pub init_axes: Vec<Axis>,
    pub init_theta: f64,
    pub init_gamma: f64,
    pub kick_eps: f64,
    pub cz_phi: f64,
}

impl Default for EnumParams {
    fn default() -> Self {
        Self {
            pauli_kinds: vec![PauliKind::X, PauliKind::Y, PauliKind::Z],
            pauli_p: 1.0,
            init_axes: Axis::ALL.to_vec(),
            init_theta: PI,
            init_gamma: 1.0,
            kick_eps: FRAC_PI_2,
            cz_phi: FRAC_PI_2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FaultPolicy {
    /// At most one fault present per run.
    #[default]
    Single,
    /// All faults injected together.
    Multiple,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaultSet {
    pub host: Circuit,
    pub faults: Vec<Fault>,
    pub policy: FaultPolicy,
}

impl FaultSet {
    pub fn new(host: Circuit, faults: Vec<Fault>) -> Result<Self> {
        for f in &faults {
            f.validate(&host)?;
        }
        Ok(Self {
            host,
            faults,
            policy: FaultPolicy::Single,
        })
    }

    pub fn len(&self) -> usize {
        self.faults.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faults.is_empty()
    }

    pub fn classes(&self) -> Vec<FaultClass> {
        let mut out: Vec<FaultClass> = self.faults.iter().map(Fault::class).collect();
        out.sort();
        out.dedup();
        out
    }

    /// One model per fault under the single-fault policy, otherwise a single
    /// model carrying every fault.
    pub fn models(&self) -> Result<Vec<FaultedModel>> {
        match self.policy {
            FaultPolicy::Single => self.faults.iter().map(|f| apply_fault(&self.host, f)).collect(),
            FaultPolicy::Multiple => Ok(vec![apply_faults(&self.host, &self.faults)?]),
        }
    }
}

/// Deterministic enumeration; class order follows [`FaultClass::ALL`].
pub fn enumerate_faults(c: &Circuit, classes: &[FaultClass], params: &EnumParams) -> FaultSet {
    let mut faults = Vec::new();
    for class in FaultClass::ALL.into_iter().filter(|k| classes.contains(k)) {
        match class {
            FaultClass::Pauli => {
                for location in enumerate_error_locations(c) {
                    for &kind in &params.pauli_kinds {
                        faults.push(Fault::Pauli {
                            kind,
                            location,
                            p: params.pauli_p,
                        });
                    }
                }
            }
            FaultClass::InitRotation => {
                for qubit in 0..c.width() {
                    for &axis in &params.init_axes {
                        faults.push(Fault::InitRotation {
                            qubit,
                            axis,
                            theta: params.init_theta,
                        });
                    }
                }
            }
            FaultClass::InitStuck => {
                for qubit in 0..c.width() {
                    for stuck_to in [Logic::Zero, Logic::One] {
                        faults.push(Fault::InitStuck {
                            qubit,
                            stuck_to,
                            gamma: params.init_gamma,
                        });
                    }
                }
            }
            FaultClass::LostPhase => {
                for (stage, g) in c.gates().iter().enumerate() {
                    for &w in &g.controls {
                        faults.push(Fault::LostPhase {
                            stage,
                            missing: MissingPart::Control(w),
                        });
                    }
                    faults.push(Fault::LostPhase {
                        stage,
                        missing: MissingPart::WholeGate,
                    });
                }
            }
            FaultClass::PhaseKick | FaultClass::CzAngle => {
                for (stage, g) in c.gates().iter().enumerate() {
                    if g.is_kcn() || matches!(g.kind, GateKind::Phase(_)) {
                        faults.push(if class == FaultClass::PhaseKick {
                            Fault::PhaseKick {
                                stage,
                                eps: params.kick_eps,
                            }
                        } else {
                            Fault::CzAngle {
                                stage,
                                phi: params.cz_phi,
                            }
                        });
                    }
                }
            }
            FaultClass::Faded => {
                for (stage, g) in c.gates().iter().enumerate() {
                    for &control in &g.controls {
                        faults.push(Fault::FadedControl { stage, control });
                    }
                }
            }
            FaultClass::Forced => {
                for (stage, g) in c.gates().iter().enumerate() {
                    if g.is_kcn() {
                        faults.push(Fault::ForcedGate {
                            stage,
                            stuck: Logic::Zero,
                        });
                        faults.push(Fault::ForcedGate {
                            stage,
                            stuck: Logic::One,
                        });
                    }
                }
            }
            FaultClass::Meas => {
                for value in [Logic::Zero, Logic::One] {
                    for qubit in 0..c.width() {
                        faults.push(Fault::MeasStuck { qubit, value });
                    }
                }
            }
        }
    }
    FaultSet {
        host: c.clone(),
        faults,
        policy: FaultPolicy::Single,
    }
}

/// A unitary or a Kraus channel acting on a list of wires (first wire most
/// significant in the local matrices).
#[derive(Debug, Clone, PartialEq)]
pub enum Insertion {
    Unitary {
        wires: Vec<usize>,
        matrix: ComplexMatrix,
    },
    Channel {
        wires: Vec<usize>,
        kraus: Vec<ComplexMatrix>,
    },
}

impl Insertion {
    pub fn unitary(wires: Vec<usize>, matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_unitary(UNITARY_TOL) {
            return Err(Error::NotTracePreserving(f64::NAN));
        }
        Ok(Insertion::Unitary { wires, matrix })
    }

    pub fn channel(wires: Vec<usize>, kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let dev = kraus_completeness_deviation(&kraus);
        if dev > UNITARY_TOL {
            return Err(Error::NotTracePreserving(dev));
        }
        Ok(Insertion::Channel { wires, kraus })
    }

    pub fn wires(&self) -> &[usize] {
        match self {
            Insertion::Unitary { wires, .. } | Insertion::Channel { wires, .. } => wires,
        }
    }

    pub fn is_channel(&self) -> bool {
        matches!(self, Insertion::Channel { .. })
    }

    fn gate(g: &Gate) -> Self {
        Insertion::Unitary {
            wires: g.wires(),
            matrix: g.local_matrix(),
        }
    }
}

/// Max entry of `sum E^dagger E - I`.
pub fn kraus_completeness_deviation(kraus: &[ComplexMatrix]) -> f64 {
    let Some(first) = kraus.first() else {
        return f64::INFINITY;
    };
    let dim = first.cols();
    let sum = kraus
        .iter()
        .fold(ComplexMatrix::zeros(dim, dim), |acc, e| &acc + &(&e.dagger() * e));
    sum.max_abs_diff(&ComplexMatrix::identity(dim))
}

/// An executable, possibly faulted, circuit model: initial-state insertions,
/// the ordered body, and per-qubit stuck readouts.
#[derive(Debug, Clone, PartialEq)]
pub struct FaultedModel {
    pub base: Circuit,
    pub init: Vec<Insertion>,
    pub body: Vec<Insertion>,
    pub meas_overrides: Vec<Option<Logic>>,
}

impl FaultedModel {
    pub fn gold(c: &Circuit) -> Self {
        Self {
            base: c.clone(),
            init: Vec::new(),
            body: c.gates().iter().map(Insertion::gate).collect(),
            meas_overrides: vec![None; c.width()],
        }
    }

    pub fn width(&self) -> usize {
        self.base.width()
    }

    pub fn has_channels(&self) -> bool {
        self.init.iter().chain(&self.body).any(Insertion::is_channel)
    }

    pub fn insertions(&self) -> impl Iterator<Item = &Insertion> {
        self.init.iter().chain(&self.body)
    }
}

impl From<&Circuit> for FaultedModel {
    fn from(c: &Circuit) -> Self {
        FaultedModel::gold(c)
    }
}

/// `H_t . C^k Z(phi) . H_t` on the gate's wires.
fn phase_built_kcn(g: &Gate, phi: f64) -> ComplexMatrix {
    let k = g.controls.len();
    let dim = 1usize << (k + 1);
    let mut d = vec![ONE; dim];
    d[dim - 1] = C64::from_polar(1.0, phi);
    let cz = ComplexMatrix::from_diag(&d);
    let ht = qmath::kron(&ComplexMatrix::identity(dim / 2), &qmath::hadamard());
    &(&ht * &cz) * &ht
}

fn forced_kraus(k: usize, stuck: Logic) -> Vec<ComplexMatrix> {
    let dim = 1usize << (k + 1);
    let (t0, t1) = (dim - 2, dim - 1);
    let mut e0 = ComplexMatrix::identity(dim);
    let mut e1 = ComplexMatrix::zeros(dim, dim);
    match stuck {
        Logic::Zero => {
            e0[(t1, t1)] = ZERO;
            e1[(t0, t1)] = ONE;
        }
        Logic::One => {
            e0[(t0, t0)] = ZERO;
            e1[(t1, t0)] = ONE;
        }
    }
    vec![e0, e1]
}

/// Amplitude damping of a preparation towards `stuck_to`.
pub fn stuck_prep_kraus(stuck_to: Logic, gamma: f64) -> Vec<ComplexMatrix> {
    let keep = C64::new((1.0 - gamma).sqrt(), 0.0);
    let jump = C64::new(gamma.sqrt(), 0.0);
    match stuck_to {
        Logic::Zero => vec![
            ComplexMatrix::from_diag(&[ONE, keep]),
            ComplexMatrix::from_rows(&[&[ZERO, jump], &[ZERO, ZERO]]),
        ],
        Logic::One => vec![
            ComplexMatrix::from_diag(&[keep, ONE]),
            ComplexMatrix::from_rows(&[&[ZERO, ZERO], &[jump, ZERO]]),
        ],
    }
}

fn pauli_insertion(kind: PauliKind, wire: usize, p: f64) -> Result<Insertion> {
    let sigma = qmath::pauli(kind);
    if p >= 1.0 {
        Insertion::unitary(vec![wire], sigma)
    } else {
        Insertion::channel(
            vec![wire],
            vec![
                ComplexMatrix::identity(2).scale(C64::new((1.0 - p).sqrt(), 0.0)),
                sigma.scale(C64::new(p.sqrt(), 0.0)),
            ],
        )
    }
}

pub fn apply_fault(c: &Circuit, f: &Fault) -> Result<FaultedModel> {
    apply_faults(c, std::slice::from_ref(f))
}

/// Injects every fault in `faults` into one model.
pub fn apply_faults(c: &Circuit, faults: &[Fault]) -> Result<FaultedModel> {
    let n = c.len();
    let mut before: Vec<Vec<Insertion>> = vec![Vec::new(); n];
    let mut stages: Vec<Vec<Insertion>> = c.gates().iter().map(|g| vec![Insertion::gate(g)]).collect();
    let mut after: Vec<Vec<Insertion>> = vec![Vec::new(); n];
    let mut output = Vec::new();
    let mut model = FaultedModel::gold(c);

    for f in faults {
        f.validate(c)?;
        match *f {
            Fault::Pauli { kind, location, p } => {
                let ins = pauli_insertion(kind, location.wire, p)?;
                match location.position {
                    LocationPosition::BeforeGate(s) => before[s].push(ins),
                    LocationPosition::AfterGate(s) => after[s].push(ins),
                    LocationPosition::Output => output.push(ins),
                }
            }
            Fault::InitRotation { qubit, axis, theta } => {
                model
                    .init
                    .push(Insertion::unitary(vec![qubit], qmath::rotation(axis, theta))?);
            }
            Fault::InitStuck {
                qubit,
                stuck_to,
                gamma,
            } => {
                model
                    .init
                    .push(Insertion::channel(vec![qubit], stuck_prep_kraus(stuck_to, gamma))?);
            }
            Fault::LostPhase { stage, missing } => {
                stages[stage] = match missing {
                    MissingPart::WholeGate => Vec::new(),
                    MissingPart::Control(w) => vec![Insertion::gate(&without_control(&c.gates()[stage], w))],
                };
            }
            Fault::FadedControl { stage, control } => {
                stages[stage] = vec![Insertion::gate(&without_control(&c.gates()[stage], control))];
            }
            Fault::PhaseKick { stage, eps } => {
                stages[stage] = vec![phase_modified(&c.gates()[stage], |phi| phi + eps, PI + eps)?];
            }
            Fault::CzAngle { stage, phi } => {
                stages[stage] = vec![phase_modified(&c.gates()[stage], |_| phi, phi)?];
            }
            Fault::ForcedGate { stage, stuck } => {
                let g = &c.gates()[stage];
                stages[stage] = vec![Insertion::channel(g.wires(), forced_kraus(g.controls.len(), stuck))?];
            }
            Fault::MeasStuck { qubit, value } => model.meas_overrides[qubit] = Some(value),
        }
    }

    model.body = before
        .into_iter()
        .zip(stages)
        .zip(after)
        .flat_map(|((b, s), a)| b.into_iter().chain(s).chain(a))
        .chain(output)
        .collect();
    Ok(model)
}

fn without_control(g: &Gate, w: usize) -> Gate {
    Gate::new(g.kind, g.controls.iter().copied().filter(|&c| c != w).collect(), g.target)
}

/// A k-CN becomes its `H . C^kZ(kcn_phi) . H` construction; a controlled
/// phase gets `phase_gate(phi)` as its new angle.
fn phase_modified(g: &Gate, phase_gate: impl Fn(f64) -> f64, kcn_phi: f64) -> Result<Insertion> {
    match g.kind {
        GateKind::Phase(phi) => Ok(Insertion::gate(&Gate::new(
            GateKind::Phase(phase_gate(phi)),
            g.controls.clone(),
            g.target,
        ))),
        GateKind::Not => Insertion::unitary(g.wires(), phase_built_kcn(g, kcn_phi)),
        _ => Err(Error::FaultMismatch(format!("gate `{g}` has no phase to modify"))),
    }
}
