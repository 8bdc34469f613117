//! Circuit representation, the line-based circuit format, error locations and
//! k-CN decomposition.
//!
//! ```text
//! # comments start with '#'
//! qubits 3
//! cn c=0 t=1
//! cn c=0,1 t=2
//! g v c=1 t=2
//! g cz(pi/2) c=0 t=1
//! ```
//!
//! One gate per line, one gate per stage. Controls are positive.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::qmath::{self, apply_on_qubits, Axis, ComplexMatrix, PauliKind, C64, ONE, ZERO};

pub const MAX_UNITARY_WIDTH: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GateKind {
    /// k-CN; a NOT on the target gated by every control.
    Not,
    H,
    X,
    Y,
    Z,
    V,
    Vdag,
    /// `2^k`-th root of NOT (`k >= 2`; `k = 1` is [`GateKind::V`]).
    Root(u32),
    RootDag(u32),
    Rx(f64),
    Ry(f64),
    Rz(f64),
    /// Phase `e^{i phi}` on the all-ones state of controls and target.
    Phase(f64),
}

impl GateKind {
    /// Single-qubit action on the target when every control is 1. `None` for
    /// [`GateKind::Phase`], which is diagonal on all its wires.
    pub fn target_matrix(&self) -> Option<ComplexMatrix> {
        Some(match *self {
            GateKind::Not | GateKind::X => qmath::pauli(PauliKind::X),
            GateKind::H => qmath::hadamard(),
            GateKind::Y => qmath::pauli(PauliKind::Y),
            GateKind::Z => qmath::pauli(PauliKind::Z),
            GateKind::V => qmath::v_gate(),
            GateKind::Vdag => qmath::v_gate().dagger(),
            GateKind::Root(k) => qmath::root_of_not(k),
            GateKind::RootDag(k) => qmath::root_of_not(k).dagger(),
            GateKind::Rx(t) => qmath::rotation(Axis::X, t),
            GateKind::Ry(t) => qmath::rotation(Axis::Y, t),
            GateKind::Rz(t) => qmath::rotation(Axis::Z, t),
            GateKind::Phase(_) => return None,
        })
    }

    fn root(k: u32, dagger: bool) -> Self {
        match (k, dagger) {
            (0, _) => GateKind::Not,
            (1, false) => GateKind::V,
            (1, true) => GateKind::Vdag,
            (k, false) => GateKind::Root(k),
            (k, true) => GateKind::RootDag(k),
        }
    }

    fn parse(name: &str, param: Option<&str>) -> std::result::Result<Self, String> {
        let angle = || -> std::result::Result<f64, String> {
            let p = param.ok_or_else(|| format!("gate `{name}` needs a parameter"))?;
            parse_angle(p).ok_or_else(|| format!("bad angle `{p}`"))
        };
        let level = || -> std::result::Result<u32, String> {
            let p = param.ok_or_else(|| format!("gate `{name}` needs a parameter"))?;
            match p.trim().parse::<u32>() {
                Ok(k) if (1..=16).contains(&k) => Ok(k),
                _ => Err(format!("bad root level `{p}`")),
            }
        };
        let kind = match name {
            "h" => GateKind::H,
            "x" => GateKind::X,
            "y" => GateKind::Y,
            "z" => GateKind::Z,
            "v" => GateKind::V,
            "vdag" => GateKind::Vdag,
            "root" => GateKind::root(level()?, false),
            "rootdg" => GateKind::root(level()?, true),
            "rx" => GateKind::Rx(angle()?),
            "ry" => GateKind::Ry(angle()?),
            "rz" => GateKind::Rz(angle()?),
            "cz" => GateKind::Phase(if param.is_some() { angle()? } else { PI }),
            other => return Err(format!("unknown gate `{other}`")),
        };
        if param.is_some() && matches!(name, "h" | "x" | "y" | "z" | "v" | "vdag") {
            return Err(format!("gate `{name}` takes no parameter"));
        }
        Ok(kind)
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateKind::Not => write!(f, "cn"),
            GateKind::H => write!(f, "h"),
            GateKind::X => write!(f, "x"),
            GateKind::Y => write!(f, "y"),
            GateKind::Z => write!(f, "z"),
            GateKind::V => write!(f, "v"),
            GateKind::Vdag => write!(f, "vdag"),
            GateKind::Root(k) => write!(f, "root({k})"),
            GateKind::RootDag(k) => write!(f, "rootdg({k})"),
            GateKind::Rx(t) => write!(f, "rx({t})"),
            GateKind::Ry(t) => write!(f, "ry({t})"),
            GateKind::Rz(t) => write!(f, "rz({t})"),
            GateKind::Phase(p) => write!(f, "cz({p})"),
        }
    }
}

/// Parses `1.25`, `pi`, `-pi/4`, `3pi/4` or `3*pi/4`.
pub fn parse_angle(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<f64>() {
        return v.is_finite().then_some(v);
    }
    let lower = s.to_ascii_lowercase();
    let (sign, body) = match lower.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, lower.as_str()),
    };
    let (num, den) = match body.split_once('/') {
        Some((n, d)) => (n, d.trim().parse::<f64>().ok()?),
        None => (body, 1.0),
    };
    let coeff = num.trim().strip_suffix("pi")?.trim().trim_end_matches('*').trim();
    let coeff = if coeff.is_empty() { 1.0 } else { coeff.parse::<f64>().ok()? };
    Some(sign * coeff * PI / den)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub controls: Vec<usize>,
    pub target: usize,
}

impl Gate {
    pub fn new(kind: GateKind, controls: Vec<usize>, target: usize) -> Self {
        Self {
            kind,
            controls,
            target,
        }
    }

    pub fn kcn(controls: &[usize], target: usize) -> Self {
        Self::new(GateKind::Not, controls.to_vec(), target)
    }

    pub fn single(kind: GateKind, target: usize) -> Self {
        Self::new(kind, Vec::new(), target)
    }

    pub fn is_kcn(&self) -> bool {
        self.kind == GateKind::Not
    }

    /// Controls followed by the target; the wire order of [`Gate::local_matrix`].
    pub fn wires(&self) -> Vec<usize> {
        let mut w = self.controls.clone();
        w.push(self.target);
        w
    }

    pub fn touches(&self, wire: usize) -> bool {
        self.target == wire || self.controls.contains(&wire)
    }

    pub fn local_matrix(&self) -> ComplexMatrix {
        match self.kind {
            GateKind::Phase(phi) => {
                let dim = 1usize << (self.controls.len() + 1);
                let mut d = vec![ONE; dim];
                d[dim - 1] = C64::from_polar(1.0, phi);
                ComplexMatrix::from_diag(&d)
            }
            kind => qmath::controlled(
                &kind.target_matrix().expect("non-phase gate has a target matrix"),
                self.controls.len(),
            ),
        }
    }

    pub fn validate(&self, width: usize) -> std::result::Result<(), String> {
        if self.target >= width {
            return Err(format!("target wire {} out of range for {width} qubits", self.target));
        }
        for (i, &c) in self.controls.iter().enumerate() {
            if c >= width {
                return Err(format!("control wire {c} out of range for {width} qubits"));
            }
            if c == self.target {
                return Err(format!("control wire {c} is also the target"));
            }
            if self.controls[..i].contains(&c) {
                return Err(format!("duplicate control wire {c}"));
            }
        }
        if self.is_kcn() && self.controls.is_empty() {
            return Err("cn gate needs at least one control".into());
        }
        Ok(())
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let controls = self
            .controls
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(",");
        if self.is_kcn() {
            write!(f, "cn c={controls} t={}", self.target)
        } else if self.controls.is_empty() {
            write!(f, "g {} t={}", self.kind, self.target)
        } else {
            write!(f, "g {} c={controls} t={}", self.kind, self.target)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub name: String,
    width: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(width: usize) -> Self {
        Self {
            name: String::new(),
            width,
            gates: Vec::new(),
        }
    }

    pub fn from_gates(width: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut c = Self::new(width);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.width)
            .map_err(|message| Error::Parse {
                line: 0,
                message,
            })?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn serialize(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "qubits {}", self.width)?;
        if !self.name.is_empty() {
            writeln!(f, "name {}", self.name)?;
        }
        for g in &self.gates {
            writeln!(f, "{g}")?;
        }
        Ok(())
    }
}

impl FromStr for Circuit {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_circuit(s)
    }
}

fn parse_wire_list(v: &str) -> std::result::Result<Vec<usize>, String> {
    v.split(',')
        .map(|w| {
            w.trim()
                .parse::<usize>()
                .map_err(|_| format!("bad wire index `{w}`"))
        })
        .collect()
}

fn parse_gate_line(tokens: &[&str]) -> std::result::Result<Gate, String> {
    let (kind, rest) = match tokens[0] {
        "cn" => (GateKind::Not, &tokens[1..]),
        "g" => {
            let spec = tokens.get(1).ok_or("missing gate name after `g`")?.to_ascii_lowercase();
            let (name, param) = match spec.split_once('(') {
                Some((n, p)) => {
                    let p = p.strip_suffix(')').ok_or_else(|| format!("unclosed `(` in `{spec}`"))?;
                    (n.to_string(), Some(p.to_string()))
                }
                None => (spec.clone(), None),
            };
            (GateKind::parse(&name, param.as_deref())?, &tokens[2..])
        }
        other => return Err(format!("unknown directive `{other}`")),
    };
    let mut controls = None;
    let mut target = None;
    for tok in rest {
        match tok.split_once('=') {
            Some(("c", v)) if controls.is_none() => controls = Some(parse_wire_list(v)?),
            Some(("t", v)) if target.is_none() => {
                target = Some(v.parse::<usize>().map_err(|_| format!("bad target `{v}`"))?)
            }
            Some(("c" | "t", _)) => return Err(format!("repeated field in `{tok}`")),
            _ => return Err(format!("unexpected token `{tok}`")),
        }
    }
    let target = target.ok_or("missing target `t=`")?;
    Ok(Gate::new(kind, controls.unwrap_or_default(), target))
}

pub fn parse_circuit(text: &str) -> Result<Circuit> {
    let mut circuit: Option<Circuit> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { line, message };
        let tokens: Vec<&str> = content.split_whitespace().collect();
        match (&mut circuit, tokens[0]) {
            (None, "qubits") => {
                let n = match tokens.as_slice() {
                    [_, n] => n.parse::<usize>().map_err(|_| err(format!("bad qubit count `{n}`")))?,
                    _ => return Err(err("expected `qubits <n>`".into())),
                };
                if n == 0 {
                    return Err(err("qubit count must be positive".into()));
                }
                circuit = Some(Circuit::new(n));
            }
            (None, _) => return Err(err("first line must be `qubits <n>`".into())),
            (Some(_), "qubits") => return Err(err("duplicate `qubits` line".into())),
            (Some(c), "name") => {
                c.name = content["name".len()..].trim().to_string();
            }
            (Some(c), _) => {
                let gate = parse_gate_line(&tokens).map_err(err)?;
                gate.validate(c.width).map_err(err)?;
                c.gates.push(gate);
            }
        }
    }
    circuit.ok_or(Error::Parse {
        line: 1,
        message: "missing `qubits <n>` line".into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LocationPosition {
    BeforeGate(usize),
    AfterGate(usize),
    Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ErrorLocation {
    /// 1-based, wire-major with the top wire first.
    pub id: usize,
    pub wire: usize,
    pub position: LocationPosition,
}

/// Gate-external error locations: on each wire, one before every stage that
/// touches it, one after the last such stage, and one at the circuit output
/// when that is a different point.
pub fn enumerate_error_locations(c: &Circuit) -> Vec<ErrorLocation> {
    let mut out = Vec::new();
    let last_stage = c.len().checked_sub(1);
    for wire in 0..c.width() {
        let touching: Vec<usize> = (0..c.len()).filter(|&s| c.gates[s].touches(wire)).collect();
        let mut push = |position| {
            out.push(ErrorLocation {
                id: out.len() + 1,
                wire,
                position,
            })
        };
        for &s in &touching {
            push(LocationPosition::BeforeGate(s));
        }
        if let Some(&s) = touching.last() {
            push(LocationPosition::AfterGate(s));
        }
        if touching.last().copied() != last_stage || touching.is_empty() {
            push(LocationPosition::Output);
        }
    }
    out
}

fn controlled_root(controls: &[usize], target: usize, level: u32, dagger: bool, out: &mut Vec<Gate>) {
    match controls {
        [] => unreachable!("controlled_root needs at least one control"),
        [c] => out.push(Gate::new(GateKind::root(level, dagger), vec![*c], target)),
        [rest @ .., last] => {
            let half = level + 1;
            controlled_root(&[*last], target, half, dagger, out);
            controlled_root(rest, *last, 0, false, out);
            controlled_root(&[*last], target, half, !dagger, out);
            controlled_root(rest, *last, 0, false, out);
            controlled_root(rest, target, half, dagger, out);
        }
    }
}

/// Builds a k-CN (controls `0..k`, target `k`) from CN and singly-controlled
/// roots of NOT. `k = 2` gives the five-gate CV / CN / CV† / CN / CV network.
pub fn decompose_kcn(k: usize) -> Result<Circuit> {
    if !(1..=4).contains(&k) {
        return Err(Error::UnsupportedControls(k));
    }
    let controls: Vec<usize> = (0..k).collect();
    let mut gates = Vec::new();
    controlled_root(&controls, k, 0, false, &mut gates);
    Ok(Circuit::from_gates(k + 1, gates)?.with_name(format!("{k}-CN decomposition")))
}

/// The full `2^n x 2^n` unitary, stages applied in order.
pub fn unitary_of(c: &Circuit) -> Result<ComplexMatrix> {
    unitary_of_with(c, Execution::default())
}

pub fn unitary_of_with(c: &Circuit, exec: Execution) -> Result<ComplexMatrix> {
    let n = c.width();
    if n > MAX_UNITARY_WIDTH {
        return Err(Error::WidthLimit {
            width: n,
            limit: MAX_UNITARY_WIDTH,
            what: "unitary_of",
        });
    }
    let dim = 1usize << n;
    let locals: Vec<(Vec<usize>, ComplexMatrix)> =
        c.gates().iter().map(|g| (g.wires(), g.local_matrix())).collect();
    let columns = exec.map_range(dim, |j| {
        let mut v = vec![ZERO; dim];
        v[j] = ONE;
        for (wires, m) in &locals {
            apply_on_qubits(&mut v, n, wires, m);
        }
        v
    });
    let mut u = ComplexMatrix::zeros(dim, dim);
    for (j, col) in columns.into_iter().enumerate() {
        for (i, a) in col.into_iter().enumerate() {
            u[(i, j)] = a;
        }
    }
    Ok(u)
}

/// Permutation matrix of a k-CN on `k + 1` wires (controls first).
pub fn kcn_permutation(k: usize) -> ComplexMatrix {
    qmath::controlled(&qmath::pauli(PauliKind::X), k)
}
