//! Small dense complex linear algebra and the named one- and two-qubit
//! matrices used by the simulator.
//!
//! Matrices are stored row-major. Multi-qubit indices put qubit 0 in the most
//! significant bit, so `|abc>` has index `4a + 2b + c`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Tolerance for unitarity and Kraus completeness checks.
pub const UNITARY_TOL: f64 = 1e-12;
/// Trace tolerance for a matrix to count as a density operator.
pub const DENSITY_TRACE_TOL: f64 = 1e-12;
/// Most negative eigenvalue tolerated in a density operator or PSD input.
pub const PSD_EIG_TOL: f64 = 1e-10;
/// Hermiticity tolerance for inputs to the eigensolver.
pub const HERMITIAN_TOL: f64 = 1e-9;

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a square matrix from nested rows. Panics on ragged input, so it
    /// is meant for literals.
    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let n = rows.len();
        let cols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == cols), "ragged matrix literal");
        Self {
            rows: n,
            cols,
            data: rows.iter().flat_map(|r| r.iter().copied()).collect(),
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// `|a><b|` for column vectors `a` and `b`.
    pub fn outer(a: &[C64], b: &[C64]) -> Self {
        let mut m = Self::zeros(a.len(), b.len());
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                m[(i, j)] = x * y.conj();
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn diag(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn trace(&self) -> C64 {
        self.diag().into_iter().sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn dagger(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x.conj()).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if self.cols != v.len() {
            return Err(Error::Dimension(format!(
                "cannot apply {}x{} matrix to length-{} vector",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }

    /// `self * m * self^dagger`.
    pub fn conjugate(&self, m: &Self) -> Result<Self> {
        self.matmul(m)?.matmul(&self.dagger())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.max_abs_diff(other) <= tol
    }

    /// Equality up to a global phase `e^{i t}`, fixed from the largest entry
    /// of `other`.
    pub fn approx_eq_up_to_phase(&self, other: &Self, tol: f64) -> bool {
        if self.rows != other.rows || self.cols != other.cols {
            return false;
        }
        let Some((idx, _)) = other
            .data
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        else {
            return true;
        };
        if other.data[idx].norm() == 0.0 {
            return self.approx_eq(other, tol);
        }
        let ratio = self.data[idx] / other.data[idx];
        if (ratio.norm() - 1.0).abs() > tol.max(1e-12) * 10.0 {
            return false;
        }
        let phase = ratio / ratio.norm();
        self.approx_eq(&other.scale(phase), tol)
    }

    /// Compares with the `up_to_phase` flag used by the circuit checks.
    pub fn equals(&self, other: &Self, tol: f64, up_to_phase: bool) -> bool {
        if up_to_phase {
            self.approx_eq_up_to_phase(other, tol)
        } else {
            self.approx_eq(other, tol)
        }
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.is_square()
            && self
                .matmul(&self.dagger())
                .map(|p| p.approx_eq(&Self::identity(self.rows), tol))
                .unwrap_or(false)
    }

    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.max_abs_diff(&self.dagger())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// Hermitian, unit trace and no eigenvalue below `-PSD_EIG_TOL`.
    pub fn check_density(&self) -> Result<()> {
        if !self.is_square() {
            return Err(Error::NotDensity(format!(
                "{}x{} is not square",
                self.rows, self.cols
            )));
        }
        let dev = self.hermitian_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::NotDensity(format!("Hermitian deviation {dev:.3e}")));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > DENSITY_TRACE_TOL.max(1e-10) || tr.im.abs() > 1e-10 {
            return Err(Error::NotDensity(format!("trace {tr}")));
        }
        let (evals, _) = self.eigh()?;
        if let Some(&min) = evals.first() {
            if min < -PSD_EIG_TOL {
                return Err(Error::NotDensity(format!("eigenvalue {min:.3e}")));
            }
        }
        Ok(())
    }

    pub fn is_density(&self) -> bool {
        self.check_density().is_ok()
    }

    fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    fn from_nalgebra(m: &DMatrix<C64>) -> Self {
        let mut out = Self::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out[(i, j)] = m[(i, j)];
            }
        }
        out
    }

    /// Eigendecomposition of a Hermitian matrix. Eigenvalues ascend; the
    /// returned matrix holds the matching eigenvectors as columns.
    pub fn eigh(&self) -> Result<(Vec<f64>, ComplexMatrix)> {
        let dev = self.hermitian_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let sym = (self + &self.dagger()).scale(C64::new(0.5, 0.0));
        let eig = SymmetricEigen::new(sym.to_nalgebra());
        let mut order: Vec<usize> = (0..self.rows).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vecs = Self::zeros(self.rows, self.rows);
        for (col, &src) in order.iter().enumerate() {
            for row in 0..self.rows {
                vecs[(row, col)] = eig.eigenvectors[(row, src)];
            }
        }
        Ok((values, vecs))
    }

    pub fn singular_values(&self) -> Vec<f64> {
        self.to_nalgebra().svd(false, false).singular_values.iter().copied().collect()
    }

    /// Numerical rank from singular values above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        let svd = self.to_nalgebra().svd(false, false);
        svd.singular_values.iter().filter(|&&s| s > tol).count()
    }

    /// Inverse of a square matrix, failing when it is numerically singular.
    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::Dimension("inverse of a non-square matrix".into()));
        }
        let rank = self.rank(1e-10);
        if rank < self.rows {
            return Err(Error::RankDeficient {
                rank,
                needed: self.rows,
            });
        }
        self.to_nalgebra()
            .try_inverse()
            .map(|m| Self::from_nalgebra(&m))
            .ok_or(Error::RankDeficient {
                rank,
                needed: self.rows,
            })
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Panics on a shape mismatch; use [`ComplexMatrix::matmul`] for a checked
/// product.
impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("matrix shape mismatch")
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, " ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, " {:+.4}{:+.4}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = ComplexMatrix::zeros(rows, cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let x = a[(i, j)];
            if x == ZERO {
                continue;
            }
            for k in 0..b.rows {
                for l in 0..b.cols {
                    out[(i * b.rows + k, j * b.cols + l)] = x * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    factors
        .into_iter()
        .fold(ComplexMatrix::identity(1), |acc, m| kron(&acc, m))
}

pub fn dagger(a: &ComplexMatrix) -> ComplexMatrix {
    a.dagger()
}

/// Traces out subsystem `traced` of an operator on a product space with the
/// given subsystem dimensions (subsystem 0 most significant).
pub fn partial_trace(rho: &ComplexMatrix, dims: &[usize], traced: usize) -> Result<ComplexMatrix> {
    let total: usize = dims.iter().product();
    if !rho.is_square() || rho.rows() != total {
        return Err(Error::Dimension(format!(
            "{}x{} operator does not match subsystem dims {dims:?}",
            rho.rows(),
            rho.cols()
        )));
    }
    if traced >= dims.len() {
        return Err(Error::Dimension(format!(
            "subsystem {traced} out of range for {} subsystems",
            dims.len()
        )));
    }
    let pre: usize = dims[..traced].iter().product();
    let mid = dims[traced];
    let post: usize = dims[traced + 1..].iter().product();
    let reduced = pre * post;
    let mut out = ComplexMatrix::zeros(reduced, reduced);
    for a in 0..pre {
        for b in 0..post {
            let r = a * post + b;
            for a2 in 0..pre {
                for b2 in 0..post {
                    let c = a2 * post + b2;
                    let mut acc = ZERO;
                    for k in 0..mid {
                        acc += rho[((a * mid + k) * post + b, (a2 * mid + k) * post + b2)];
                    }
                    out[(r, c)] = acc;
                }
            }
        }
    }
    Ok(out)
}

/// Hermitian positive square root. Eigenvalues in `[-PSD_EIG_TOL, 0)` are
/// clamped to zero.
pub fn matrix_sqrt_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (values, vecs) = m.eigh()?;
    let mut roots = Vec::with_capacity(values.len());
    for v in values {
        if v < -PSD_EIG_TOL {
            return Err(Error::NotDensity(format!(
                "negative eigenvalue {v:.3e} in PSD square root"
            )));
        }
        roots.push(C64::new(v.max(0.0).sqrt(), 0.0));
    }
    vecs.conjugate(&ComplexMatrix::from_diag(&roots))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum PauliKind {
    I,
    X,
    Y,
    Z,
}

impl PauliKind {
    pub const ALL: [PauliKind; 4] = [PauliKind::I, PauliKind::X, PauliKind::Y, PauliKind::Z];

    pub fn symbol(self) -> char {
        match self {
            PauliKind::I => 'i',
            PauliKind::X => 'x',
            PauliKind::Y => 'y',
            PauliKind::Z => 'z',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c.to_ascii_lowercase() {
            'i' => Some(PauliKind::I),
            'x' => Some(PauliKind::X),
            'y' => Some(PauliKind::Y),
            'z' => Some(PauliKind::Z),
            _ => None,
        }
    }
}

pub fn pauli(kind: PauliKind) -> ComplexMatrix {
    match kind {
        PauliKind::I => ComplexMatrix::identity(2),
        PauliKind::X => ComplexMatrix::from_rows(&[&[ZERO, ONE], &[ONE, ZERO]]),
        PauliKind::Y => ComplexMatrix::from_rows(&[&[ZERO, I], &[-I, ZERO]]),
        PauliKind::Z => ComplexMatrix::from_diag(&[ONE, -ONE]),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn symbol(self) -> char {
        match self {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        match s {
            "x" | "X" => Some(Axis::X),
            "y" | "Y" => Some(Axis::Y),
            "z" | "Z" => Some(Axis::Z),
            _ => None,
        }
    }
}

pub fn rotation(axis: Axis, angle: f64) -> ComplexMatrix {
    let c = C64::new((angle / 2.0).cos(), 0.0);
    let s = (angle / 2.0).sin();
    match axis {
        Axis::X => {
            let off = C64::new(0.0, -s);
            ComplexMatrix::from_rows(&[&[c, off], &[off, c]])
        }
        Axis::Y => {
            let s = C64::new(s, 0.0);
            ComplexMatrix::from_rows(&[&[c, -s], &[s, c]])
        }
        Axis::Z => ComplexMatrix::from_diag(&[
            C64::from_polar(1.0, -angle / 2.0),
            C64::from_polar(1.0, angle / 2.0),
        ]),
    }
}

pub fn hadamard() -> ComplexMatrix {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    ComplexMatrix::from_rows(&[&[h, h], &[h, -h]])
}

/// The `2^k`-th root of NOT, `H diag(1, e^{i pi / 2^k}) H`. `k = 1` is V.
pub fn root_of_not(k: u32) -> ComplexMatrix {
    let h = hadamard();
    let phase = C64::from_polar(1.0, PI / f64::from(1u32 << k.min(30)));
    &(&h * &ComplexMatrix::from_diag(&[ONE, phase])) * &h
}

/// Two-qubit controlled phase `diag(1, 1, 1, e^{i phi})`.
pub fn controlled_phase(phi: f64) -> ComplexMatrix {
    ComplexMatrix::from_diag(&[ONE, ONE, ONE, C64::from_polar(1.0, phi)])
}

/// Controlled version of a single-qubit gate, controls first (all positive).
pub fn controlled(u: &ComplexMatrix, controls: usize) -> ComplexMatrix {
    let dim = u.rows() << controls;
    let mut out = ComplexMatrix::identity(dim);
    let base = dim - u.rows();
    for i in 0..u.rows() {
        for j in 0..u.cols() {
            out[(base + i, base + j)] = u[(i, j)];
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NamedGate {
    H,
    X,
    V,
    Vdag,
    /// Controlled phase on `|11>` with the given angle.
    Cz(f64),
    Cn,
    /// `2^k`-th root of NOT.
    RootOfNot(u32),
}

impl FromStr for NamedGate {
    type Err = Error;

    /// Accepts `h`, `x`, `v`, `vdag`, `cn`, `cz` (angle pi), `cz(<phi>)`
    /// and `root(<k>)`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (name, arg) = match lower.split_once('(') {
            Some((n, rest)) => (n.to_string(), Some(rest.trim_end_matches(')').to_string())),
            None => (lower.clone(), None),
        };
        let unknown = || Error::UnknownGate(s.to_string());
        let parsed = match (name.as_str(), arg) {
            ("h", None) => NamedGate::H,
            ("x", None) => NamedGate::X,
            ("v", None) => NamedGate::V,
            ("vdag", None) => NamedGate::Vdag,
            ("cn" | "cnot", None) => NamedGate::Cn,
            ("cz", None) => NamedGate::Cz(PI),
            ("cz", Some(a)) => NamedGate::Cz(a.parse().map_err(|_| unknown())?),
            ("root", Some(a)) => match a.parse::<u32>() {
                Ok(k) if (1..=16).contains(&k) => NamedGate::RootOfNot(k),
                _ => return Err(unknown()),
            },
            _ => return Err(unknown()),
        };
        Ok(parsed)
    }
}

pub fn gate(g: NamedGate) -> ComplexMatrix {
    match g {
        NamedGate::H => hadamard(),
        NamedGate::X => pauli(PauliKind::X),
        NamedGate::V => v_gate(),
        NamedGate::Vdag => v_gate().dagger(),
        NamedGate::Cz(phi) => controlled_phase(phi),
        NamedGate::Cn => controlled(&pauli(PauliKind::X), 1),
        NamedGate::RootOfNot(k) => root_of_not(k),
    }
}

/// `V = 1/2 [[1+i, 1-i], [1-i, 1+i]]`, normalised so that `V V = X`.
pub fn v_gate() -> ComplexMatrix {
    let a = C64::new(0.5, 0.5);
    let b = C64::new(0.5, -0.5);
    ComplexMatrix::from_rows(&[&[a, b], &[b, a]])
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub const NORM_TOL: f64 = 1e-12;

    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if !amplitudes.len().is_power_of_two() {
            return Err(Error::Dimension(format!(
                "state length {} is not a power of two",
                amplitudes.len()
            )));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > Self::NORM_TOL {
            return Err(Error::Dimension(format!("state norm^2 {norm} is not 1")));
        }
        Ok(Self { amplitudes })
    }

    /// Normalises the given amplitudes.
    pub fn normalized(mut amplitudes: Vec<C64>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Dimension("zero vector".into()));
        }
        for a in &mut amplitudes {
            *a /= norm;
        }
        Self::new(amplitudes)
    }

    pub fn basis(qubits: usize, index: usize) -> Self {
        let mut amplitudes = vec![ZERO; 1 << qubits];
        amplitudes[index] = ONE;
        Self { amplitudes }
    }

    pub fn qubits(&self) -> usize {
        self.amplitudes.len().trailing_zeros() as usize
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let amplitudes = self
            .amplitudes
            .iter()
            .flat_map(|a| other.amplitudes.iter().map(move |b| a * b))
            .collect();
        Self { amplitudes }
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn density(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amplitudes, &self.amplitudes)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// Applies a `2^k x 2^k` matrix to `qubits` (first listed is the most
/// significant local bit) of an `n`-qubit amplitude vector, in place.
pub fn apply_on_qubits(amps: &mut [C64], n: usize, qubits: &[usize], m: &ComplexMatrix) {
    let k = qubits.len();
    let dim = 1usize << k;
    debug_assert_eq!(m.rows(), dim);
    debug_assert_eq!(amps.len(), 1 << n);
    let masks: Vec<usize> = qubits.iter().map(|&q| 1usize << (n - 1 - q)).collect();
    let all: usize = masks.iter().fold(0, |acc, m| acc | m);
    let offsets: Vec<usize> = (0..dim)
        .map(|local| {
            (0..k)
                .filter(|j| local >> (k - 1 - j) & 1 == 1)
                .fold(0, |acc, j| acc | masks[j])
        })
        .collect();
    let mut buf = vec![ZERO; dim];
    for base in 0..amps.len() {
        if base & all != 0 {
            continue;
        }
        for (b, &off) in buf.iter_mut().zip(&offsets) {
            *b = amps[base + off];
        }
        for (r, &off) in offsets.iter().enumerate() {
            let row = &m.data()[r * dim..(r + 1) * dim];
            amps[base + off] = row.iter().zip(&buf).map(|(a, b)| a * b).sum();
        }
    }
}
