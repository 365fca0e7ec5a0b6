//! Hilbert-space structure, Hermitian observables, and quantum states.
//!
//! Composite indices are row-major: party 0 is the most significant digit,
//! so `|i_0 i_1 … i_{N-1}⟩` sits at `Σ_k i_k · Π_{j>k} d_j`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, HermitianEigen, C64, ONE, ZERO};

/// Entrywise tolerance for `A = A†`.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance on state normalization and density-matrix trace.
pub const NORM_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-10;
/// Most negative eigenvalue tolerated in a density matrix.
pub const PSD_TOL: f64 = 1e-10;
/// Imaginary residue of `Tr(ρA)` that is silently dropped.
pub const IMAG_TOL: f64 = 1e-10;
/// Dense representation cap (12 qubits).
pub const MAX_TOTAL_DIM: usize = 4096;

/// Local dimensions of each party.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawStructure", into = "RawStructure")]
pub struct HilbertStructure {
    local_dims: Vec<usize>,
    total_dim: usize,
}

#[derive(Serialize, Deserialize)]
struct RawStructure {
    local_dims: Vec<usize>,
}

impl TryFrom<RawStructure> for HilbertStructure {
    type Error = Error;
    fn try_from(raw: RawStructure) -> Result<Self> {
        HilbertStructure::new(raw.local_dims)
    }
}

impl From<HilbertStructure> for RawStructure {
    fn from(s: HilbertStructure) -> Self {
        RawStructure {
            local_dims: s.local_dims,
        }
    }
}

impl HilbertStructure {
    pub fn new(local_dims: Vec<usize>) -> Result<Self> {
        if local_dims.is_empty() {
            return Err(Error::DimensionTooSmall("no parties".into()));
        }
        if let Some(&d) = local_dims.iter().find(|&&d| d < 2) {
            return Err(Error::DimensionTooSmall(format!(
                "local dimension {d} (must be at least 2)"
            )));
        }
        let mut total: usize = 1;
        for &d in &local_dims {
            total = total
                .checked_mul(d)
                .filter(|&t| t <= MAX_TOTAL_DIM)
                .ok_or_else(|| {
                    Error::OutOfRange(format!(
                        "total dimension exceeds the dense cap of {MAX_TOTAL_DIM}"
                    ))
                })?;
        }
        Ok(Self {
            local_dims,
            total_dim: total,
        })
    }

    pub fn qubits(n: usize) -> Result<Self> {
        Self::new(vec![2; n])
    }

    pub fn local_dims(&self) -> &[usize] {
        &self.local_dims
    }

    pub fn parties(&self) -> usize {
        self.local_dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn is_qubits(&self) -> bool {
        self.local_dims.iter().all(|&d| d == 2)
    }

    pub fn concat(&self, other: &HilbertStructure) -> Result<Self> {
        let mut dims = self.local_dims.clone();
        dims.extend_from_slice(&other.local_dims);
        Self::new(dims)
    }

    /// Row-major strides: `stride[k] = Π_{j>k} d_j`.
    pub fn strides(&self) -> Vec<usize> {
        let n = self.parties();
        let mut strides = vec![1; n];
        for k in (0..n.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.local_dims[k + 1];
        }
        strides
    }

    /// Digits of a flat index, one per party.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.parties()];
        for k in (0..self.parties()).rev() {
            out[k] = index % self.local_dims[k];
            index /= self.local_dims[k];
        }
        out
    }
}

impl fmt::Display for HilbertStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.local_dims.iter().map(|d| d.to_string()).collect();
        write!(f, "{}", parts.join("x"))
    }
}

/// A Hermitian operator on a multipartite space.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianObservable {
    structure: HilbertStructure,
    matrix: CMatrix,
    label: String,
}

impl HermitianObservable {
    pub fn new(structure: HilbertStructure, matrix: CMatrix, label: impl Into<String>) -> Result<Self> {
        let d = structure.total_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{} but structure {structure} has dimension {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Record("matrix has non-finite entries".into()));
        }
        let deviation = linalg::hermiticity_deviation(&matrix);
        if deviation > HERMITIAN_TOL {
            return Err(Error::NonHermitianInput { deviation });
        }
        Ok(Self {
            structure,
            matrix,
            label: label.into(),
        })
    }

    pub fn identity(structure: HilbertStructure) -> Self {
        let d = structure.total_dim();
        Self {
            structure,
            matrix: CMatrix::identity(d, d),
            label: "I".into(),
        }
    }

    pub fn zero(structure: HilbertStructure) -> Self {
        let d = structure.total_dim();
        Self {
            structure,
            matrix: CMatrix::zeros(d, d),
            label: "0".into(),
        }
    }

    /// Projector `|ψ⟩⟨ψ|`.
    pub fn projector(state: &PureState) -> Self {
        let a = state.amplitudes();
        Self {
            structure: state.structure().clone(),
            matrix: a * a.adjoint(),
            label: "projector".into(),
        }
    }

    pub fn structure(&self) -> &HilbertStructure {
        &self.structure
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            structure: self.structure.clone(),
            matrix: &self.matrix * C64::new(s, 0.0),
            label: format!("{s}*{}", self.label),
        }
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// `Σ_k w_k A_k`. All operators must share one structure.
    pub fn linear_combination(weights: &[f64], ops: &[HermitianObservable]) -> Result<Self> {
        let first = ops
            .first()
            .ok_or_else(|| Error::DimensionMismatch("empty operator list".into()))?;
        if weights.len() != ops.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} operators",
                weights.len(),
                ops.len()
            )));
        }
        let d = first.structure.total_dim();
        let mut m = CMatrix::zeros(d, d);
        for (w, op) in weights.iter().zip(ops) {
            if op.structure != first.structure {
                return Err(Error::DimensionMismatch(format!(
                    "operator on {} mixed with operator on {}",
                    op.structure, first.structure
                )));
            }
            if *w != 0.0 {
                m += &op.matrix * C64::new(*w, 0.0);
            }
        }
        Ok(Self {
            structure: first.structure.clone(),
            matrix: m,
            label: "combination".into(),
        })
    }

    /// Smallest and largest eigenvalue.
    pub fn spectral_range(&self) -> (f64, f64) {
        let eig = HermitianEigen::new(&self.matrix);
        (eig.min_value(), eig.max_value())
    }
}

/// Block operators acting on the low levels of a single qudit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EmbeddedKind {
    X,
    Y,
    Z,
    /// `diag(1, 0, -1)` on the span of the first three levels.
    M,
}

/// Single-qudit operator of dimension `d` carrying a Pauli block (or the
/// three-level `M` block) and zeros elsewhere.
pub fn embedded_pauli(kind: EmbeddedKind, d: usize) -> Result<HermitianObservable> {
    let min = if kind == EmbeddedKind::M { 3 } else { 2 };
    if d < min {
        return Err(Error::DimensionTooSmall(format!(
            "{kind:?} block needs local dimension at least {min}, got {d}"
        )));
    }
    let mut m = CMatrix::zeros(d, d);
    let i = C64::new(0.0, 1.0);
    match kind {
        EmbeddedKind::X => {
            m[(0, 1)] = ONE;
            m[(1, 0)] = ONE;
        }
        EmbeddedKind::Y => {
            m[(0, 1)] = -i;
            m[(1, 0)] = i;
        }
        EmbeddedKind::Z => {
            m[(0, 0)] = ONE;
            m[(1, 1)] = -ONE;
        }
        EmbeddedKind::M => {
            m[(0, 0)] = ONE;
            m[(2, 2)] = -ONE;
        }
    }
    HermitianObservable::new(HilbertStructure::new(vec![d])?, m, format!("{kind:?}"))
}

/// Kronecker product in the listed party order.
pub fn tensor_product(factors: &[HermitianObservable]) -> Result<HermitianObservable> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| Error::DimensionMismatch("empty factor list".into()))?;
    let mut structure = first.structure.clone();
    let mut matrix = first.matrix.clone();
    let mut label = first.label.clone();
    for f in rest {
        structure = structure.concat(&f.structure)?;
        matrix = linalg::kron(&matrix, &f.matrix);
        label.push('⊗');
        label.push_str(&f.label);
    }
    HermitianObservable::new(structure, matrix, label)
}

/// One weighted Pauli string, e.g. `(2/3, "XXI")`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    pub coefficient: f64,
    pub letters: String,
}

/// Real linear combination of Pauli strings on qubits.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PauliTermSum {
    pub terms: Vec<PauliTerm>,
}

impl PauliTermSum {
    pub fn new<S: Into<String>>(terms: impl IntoIterator<Item = (f64, S)>) -> Self {
        Self {
            terms: terms
                .into_iter()
                .map(|(coefficient, letters)| PauliTerm {
                    coefficient,
                    letters: letters.into(),
                })
                .collect(),
        }
    }
}

impl fmt::Display for PauliTermSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|t| format!("{}*{}", t.coefficient, t.letters))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

fn pauli_2x2(letter: char) -> Option<CMatrix> {
    let i = C64::new(0.0, 1.0);
    let m = match letter {
        'I' => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ONE]),
        'X' => CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        'Y' => CMatrix::from_row_slice(2, 2, &[ZERO, -i, i, ZERO]),
        'Z' => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        _ => return None,
    };
    Some(m)
}

/// Dense matrix of a Pauli string such as `"ZXI"`.
fn pauli_string_matrix(letters: &str) -> Result<CMatrix> {
    let mut out = CMatrix::identity(1, 1);
    for c in letters.chars() {
        let p = pauli_2x2(c)
            .ok_or_else(|| Error::MalformedTerm(format!("letter {c:?} in {letters:?}")))?;
        out = linalg::kron(&out, &p);
    }
    Ok(out)
}

/// Builds `Σ c_j P_j` from weighted Pauli strings.
pub fn parse_pauli_sum(spec: &PauliTermSum) -> Result<HermitianObservable> {
    let first = spec
        .terms
        .first()
        .ok_or_else(|| Error::MalformedTerm("empty term list".into()))?;
    let n = first.letters.chars().count();
    if n == 0 {
        return Err(Error::MalformedTerm("empty Pauli string".into()));
    }
    let structure = HilbertStructure::qubits(n)?;
    let d = structure.total_dim();
    let mut m = CMatrix::zeros(d, d);
    for term in &spec.terms {
        if term.letters.chars().count() != n {
            return Err(Error::MalformedTerm(format!(
                "{:?} has {} letters, expected {n}",
                term.letters,
                term.letters.chars().count()
            )));
        }
        if !term.coefficient.is_finite() {
            return Err(Error::MalformedTerm(format!(
                "non-finite coefficient on {:?}",
                term.letters
            )));
        }
        m += pauli_string_matrix(&term.letters)? * C64::new(term.coefficient, 0.0);
    }
    HermitianObservable::new(structure, m, spec.to_string())
}

fn single_pauli_string(letters: &str) -> Result<HermitianObservable> {
    parse_pauli_sum(&PauliTermSum::new([(1.0, letters)])).map(|o| o.with_label(letters))
}

/// Stabilizer generators `Z_{k-1} X_k Z_{k+1}` of the linear cluster state,
/// with missing neighbours at the chain ends dropped.
pub fn cluster_stabilizer_generators(n: usize) -> Result<Vec<HermitianObservable>> {
    if n < 2 {
        return Err(Error::DimensionTooSmall(format!(
            "cluster needs at least 2 qubits, got {n}"
        )));
    }
    (0..n)
        .map(|k| {
            let letters: String = (0..n)
                .map(|j| {
                    if j == k {
                        'X'
                    } else if j + 1 == k || j == k + 1 {
                        'Z'
                    } else {
                        'I'
                    }
                })
                .collect();
            single_pauli_string(&letters)
        })
        .collect()
}

/// The three non-local stabilizers of `|W₃⟩`.
pub fn w3_stabilizers() -> Result<Vec<HermitianObservable>> {
    let third = 1.0 / 3.0;
    let specs = [
        [(-third, "ZZI"), (2.0 * third, "XXI"), (2.0 * third, "YIY")],
        [(-third, "IZZ"), (2.0 * third, "IXX"), (2.0 * third, "YYI")],
        [(-third, "ZIZ"), (2.0 * third, "XIX"), (2.0 * third, "IYY")],
    ];
    specs
        .iter()
        .enumerate()
        .map(|(k, s)| {
            parse_pauli_sum(&PauliTermSum::new(s.iter().copied()))
                .map(|o| o.with_label(format!("S{}(W3)", k + 1)))
        })
        .collect()
}

/// Correlators stabilizing the embedded Bell pair: `X⊗X`, `-Y⊗Y`, `Z⊗Z`, and
/// optionally `M⊗M` (which is not a stabilizer; its expectation on the pair is 1/2).
pub fn bell_correlators(d: usize, include_m: bool) -> Result<Vec<HermitianObservable>> {
    let pair = |kind| -> Result<HermitianObservable> {
        let a = embedded_pauli(kind, d)?;
        tensor_product(&[a.clone(), a])
    };
    let mut ops = vec![
        pair(EmbeddedKind::X)?.with_label("XX"),
        pair(EmbeddedKind::Y)?.scaled(-1.0).with_label("-YY"),
        pair(EmbeddedKind::Z)?.with_label("ZZ"),
    ];
    if include_m {
        ops.push(pair(EmbeddedKind::M)?.with_label("MM"));
    }
    Ok(ops)
}

/// Normalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    structure: HilbertStructure,
    amplitudes: CVector,
}

impl PureState {
    /// Validates that `‖ψ‖² = 1` within [`NORM_TOL`].
    pub fn new(structure: HilbertStructure, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != structure.total_dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for structure {structure}",
                amplitudes.len()
            )));
        }
        let n2 = amplitudes.norm_squared();
        if (n2 - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("squared norm {n2}")));
        }
        Ok(Self {
            structure,
            amplitudes,
        })
    }

    /// Rescales to unit norm.
    pub fn normalized(structure: HilbertStructure, amplitudes: CVector) -> Result<Self> {
        let n = amplitudes.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidState("zero or non-finite vector".into()));
        }
        Self::new(structure, amplitudes / C64::new(n, 0.0))
    }

    pub(crate) fn from_raw(structure: HilbertStructure, amplitudes: CVector) -> Self {
        debug_assert_eq!(amplitudes.len(), structure.total_dim());
        Self {
            structure,
            amplitudes,
        }
    }

    /// Computational basis state `|i_0 i_1 …⟩`.
    pub fn basis(structure: HilbertStructure, digits: &[usize]) -> Result<Self> {
        if digits.len() != structure.parties()
            || digits.iter().zip(structure.local_dims()).any(|(i, d)| i >= d)
        {
            return Err(Error::DimensionMismatch(format!(
                "basis label {digits:?} on structure {structure}"
            )));
        }
        let strides = structure.strides();
        let idx: usize = digits.iter().zip(&strides).map(|(i, s)| i * s).sum();
        let v = linalg::basis_vector(structure.total_dim(), idx);
        Ok(Self::from_raw(structure, v))
    }

    /// Tensor product of per-party vectors (each normalized here).
    pub fn product(factors: &[CVector]) -> Result<Self> {
        let dims: Vec<usize> = factors.iter().map(|f| f.len()).collect();
        let structure = HilbertStructure::new(dims)?;
        let mut amps = CVector::from_element(1, ONE);
        for f in factors {
            let f = linalg::normalize(f);
            amps = amps.kronecker(&f);
        }
        Self::new(structure, amps)
    }

    pub fn structure(&self) -> &HilbertStructure {
        &self.structure
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }
}

/// Trace-one positive semidefinite operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    structure: HilbertStructure,
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(structure: HilbertStructure, matrix: CMatrix) -> Result<Self> {
        let d = structure.total_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "density matrix is {}x{} but structure {structure} has dimension {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let deviation = linalg::hermiticity_deviation(&matrix);
        if deviation > HERMITIAN_TOL {
            return Err(Error::NonHermitianInput { deviation });
        }
        let tr = matrix.trace().re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        let min = HermitianEigen::new(&matrix).min_value();
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min}")));
        }
        Ok(Self { structure, matrix })
    }

    pub fn from_pure(state: &PureState) -> Self {
        let a = state.amplitudes();
        Self {
            structure: state.structure().clone(),
            matrix: a * a.adjoint(),
        }
    }

    pub fn maximally_mixed(structure: HilbertStructure) -> Self {
        let d = structure.total_dim();
        Self {
            structure,
            matrix: CMatrix::identity(d, d) / C64::new(d as f64, 0.0),
        }
    }

    pub fn structure(&self) -> &HilbertStructure {
        &self.structure
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

/// White-noise mixture `p·I/D + (1-p)|ψ⟩⟨ψ|`.
pub fn noisy_state(target: &PureState, p: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange(format!("noise weight {p} not in [0, 1]")));
    }
    let d = target.structure().total_dim();
    let a = target.amplitudes();
    let matrix = CMatrix::identity(d, d) * C64::new(p / d as f64, 0.0)
        + a * a.adjoint() * C64::new(1.0 - p, 0.0);
    Ok(DensityMatrix {
        structure: target.structure().clone(),
        matrix,
    })
}

/// Anything an observable can be evaluated on.
pub trait QuantumState {
    fn structure(&self) -> &HilbertStructure;
    /// `Tr(ρ A)` before discarding the imaginary part.
    fn raw_expectation(&self, a: &CMatrix) -> C64;
}

impl QuantumState for PureState {
    fn structure(&self) -> &HilbertStructure {
        &self.structure
    }
    fn raw_expectation(&self, a: &CMatrix) -> C64 {
        self.amplitudes.dotc(&(a * &self.amplitudes))
    }
}

impl QuantumState for DensityMatrix {
    fn structure(&self) -> &HilbertStructure {
        &self.structure
    }
    fn raw_expectation(&self, a: &CMatrix) -> C64 {
        // Tr(ρA) = Σ_ij ρ_ij A_ji
        let d = self.matrix.nrows();
        let mut acc = ZERO;
        for i in 0..d {
            for j in 0..d {
                acc += self.matrix[(i, j)] * a[(j, i)];
            }
        }
        acc
    }
}

/// `Tr(ρA)` as a real number.
pub fn expectation<S: QuantumState + ?Sized>(obs: &HermitianObservable, state: &S) -> Result<f64> {
    if obs.structure().total_dim() != state.structure().total_dim() {
        return Err(Error::DimensionMismatch(format!(
            "observable on {} evaluated on state on {}",
            obs.structure(),
            state.structure()
        )));
    }
    let v = state.raw_expectation(obs.matrix());
    if v.im.abs() > IMAG_TOL * (1.0 + v.re.abs()) {
        return Err(Error::NonHermitianInput {
            deviation: v.im.abs(),
        });
    }
    Ok(v.re)
}

/// The linear cluster state, built as a controlled-phase chain on `|+⟩^⊗N`
/// and checked against its stabilizer equations.
pub fn build_cluster_state(n: usize) -> Result<PureState> {
    let structure = HilbertStructure::qubits(n)?;
    if n < 2 {
        return Err(Error::DimensionTooSmall(format!(
            "cluster needs at least 2 qubits, got {n}"
        )));
    }
    let d = structure.total_dim();
    let amp = (d as f64).sqrt().recip();
    let amps = CVector::from_fn(d, |idx, _| {
        // bit k of the party-0-most-significant label
        let bit = |k: usize| (idx >> (n - 1 - k)) & 1;
        let phase: usize = (0..n - 1).map(|k| bit(k) & bit(k + 1)).sum();
        if phase.is_multiple_of(2) {
            C64::new(amp, 0.0)
        } else {
            C64::new(-amp, 0.0)
        }
    });
    let state = PureState::new(structure, amps)?;
    for g in cluster_stabilizer_generators(n)? {
        let e = expectation(&g, &state)?;
        if (e - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!(
                "cluster state violates {}: ⟨S⟩ = {e}",
                g.label()
            )));
        }
    }
    Ok(state)
}

/// Named target states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NamedState {
    /// `(|00⟩ + |11⟩)/√2` inside a `d × d` space.
    BellEmbedded(usize),
    /// `(|001⟩ + |010⟩ + |100⟩)/√3`.
    W3,
}

impl FromStr for NamedState {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("w3") {
            return Ok(NamedState::W3);
        }
        if let Some(rest) = s.strip_prefix("bell_embedded") {
            let inner = rest.trim().trim_start_matches('(').trim_end_matches(')');
            let d = if inner.is_empty() {
                2
            } else {
                inner
                    .parse()
                    .map_err(|_| Error::UnknownName(s.to_string()))?
            };
            return Ok(NamedState::BellEmbedded(d));
        }
        Err(Error::UnknownName(s.to_string()))
    }
}

pub fn build_named_state(name: NamedState) -> Result<PureState> {
    match name {
        NamedState::BellEmbedded(d) => {
            let structure = HilbertStructure::new(vec![d, d])?;
            let mut v = CVector::zeros(d * d);
            let h = std::f64::consts::FRAC_1_SQRT_2;
            v[0] = C64::new(h, 0.0);
            v[d + 1] = C64::new(h, 0.0);
            PureState::new(structure, v)
        }
        NamedState::W3 => {
            let structure = HilbertStructure::qubits(3)?;
            let mut v = CVector::zeros(8);
            let a = C64::new(1.0 / 3.0_f64.sqrt(), 0.0);
            v[1] = a;
            v[2] = a;
            v[4] = a;
            PureState::new(structure, v)
        }
    }
}

/// Observables paired with measured expectation values.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub observables: Vec<HermitianObservable>,
    pub values: Vec<f64>,
    pub sigmas: Option<Vec<f64>>,
}

impl MeasurementRecord {
    pub fn new(
        observables: Vec<HermitianObservable>,
        values: Vec<f64>,
        sigmas: Option<Vec<f64>>,
    ) -> Result<Self> {
        let first = observables
            .first()
            .ok_or_else(|| Error::DimensionMismatch("record has no observables".into()))?;
        if values.len() != observables.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} observables",
                values.len(),
                observables.len()
            )));
        }
        if let Some(s) = &sigmas {
            if s.len() != observables.len() {
                return Err(Error::DimensionMismatch(format!(
                    "{} sigmas for {} observables",
                    s.len(),
                    observables.len()
                )));
            }
            if s.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
                return Err(Error::OutOfRange("sigmas must be finite and nonnegative".into()));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::OutOfRange("values must be finite".into()));
        }
        if let Some(o) = observables.iter().find(|o| o.structure() != first.structure()) {
            return Err(Error::DimensionMismatch(format!(
                "observable {} is on {} but the record is on {}",
                o.label(),
                o.structure(),
                first.structure()
            )));
        }
        Ok(Self {
            observables,
            values,
            sigmas,
        })
    }

    pub fn structure(&self) -> &HilbertStructure {
        self.observables[0].structure()
    }

    pub fn len(&self) -> usize {
        self.observables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observables.is_empty()
    }
}
