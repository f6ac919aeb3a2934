//! Labeled qubit registers and density matrices.
//!
//! A [`RegisterLayout`] fixes the tensor-factor order once and for all: the
//! system qubit is always factor 0 (most significant index block), followed
//! by the environment window in collision order. Every operation that moves
//! between subsystems goes through labels, never raw bit positions.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, HERM_TOL};

/// Identifier of one qubit in a register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    /// The open system.
    Sys,
    /// Environment qubit `e_k` (absolute collision index).
    Env(u32),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Sys => write!(f, "S"),
            Label::Env(k) => write!(f, "E{k}"),
        }
    }
}

/// Ordered list of qubit labels defining tensor-factor positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterLayout {
    labels: Vec<Label>,
}

impl RegisterLayout {
    pub fn new(labels: Vec<Label>) -> Result<Self> {
        for (i, a) in labels.iter().enumerate() {
            if labels[i + 1..].contains(a) {
                return Err(Error::Config(format!("duplicate register label {a}")));
            }
        }
        if labels.is_empty() {
            return Err(Error::Config("register layout must not be empty".into()));
        }
        Ok(Self { labels })
    }

    /// System at factor 0 followed by environment qubits `first..first+count`.
    pub fn window(first: u32, count: usize) -> Self {
        let mut labels = vec![Label::Sys];
        labels.extend((0..count).map(|i| Label::Env(first + i as u32)));
        Self { labels }
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn num_qubits(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.labels.len()
    }

    /// Tensor-factor position of `label` (0 = leftmost / most significant).
    pub fn position(&self, label: Label) -> Result<usize> {
        self.labels
            .iter()
            .position(|&l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn contains(&self, label: Label) -> bool {
        self.labels.contains(&label)
    }

    /// Layout induced by keeping `keep`, preserving this layout's order.
    fn induced(&self, keep: &[Label]) -> Result<RegisterLayout> {
        if keep.is_empty() {
            return Err(Error::Config("keep set must not be empty".into()));
        }
        for &l in keep {
            if !self.contains(l) {
                return Err(Error::UnknownLabel(l.to_string()));
            }
        }
        let labels: Vec<Label> = self
            .labels
            .iter()
            .copied()
            .filter(|l| keep.contains(l))
            .collect();
        Ok(RegisterLayout { labels })
    }

    fn describe(&self) -> String {
        self.labels
            .iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Deviations of a matrix from the density-matrix invariants; used both for
/// validation and for drift reporting after long runs.
#[derive(Debug, Clone, Copy)]
pub struct StateDeviation {
    pub hermiticity: f64,
    pub trace: f64,
    pub negativity: f64,
}

impl StateDeviation {
    pub fn max(&self) -> f64 {
        self.hermiticity.max(self.trace).max(self.negativity)
    }
}

/// Hermitian, unit-trace, positive-semidefinite matrix over a labeled
/// register.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
    layout: RegisterLayout,
}

impl DensityMatrix {
    /// Validating constructor; checks Hermiticity, trace and positivity to
    /// within `1e-10`.
    pub fn new(matrix: CMatrix, layout: RegisterLayout) -> Result<Self> {
        if matrix.nrows() != layout.dim() || matrix.ncols() != layout.dim() {
            return Err(Error::InvalidState(format!(
                "matrix is {}x{} but layout [{}] requires dim {}",
                matrix.nrows(),
                matrix.ncols(),
                layout.describe(),
                layout.dim()
            )));
        }
        let state = Self { matrix, layout };
        let dev = state.deviation()?;
        if dev.max() > HERM_TOL {
            return Err(Error::InvalidState(format!(
                "hermiticity {:.3e}, trace deviation {:.3e}, negativity {:.3e}",
                dev.hermiticity, dev.trace, dev.negativity
            )));
        }
        Ok(state)
    }

    /// Constructor for matrices already known to be valid (engine internals,
    /// where validity is maintained by re-Hermitization).
    pub(crate) fn from_parts_unchecked(matrix: CMatrix, layout: RegisterLayout) -> Self {
        debug_assert_eq!(matrix.nrows(), layout.dim());
        Self { matrix, layout }
    }

    /// Pure state `|psi><psi|` on a single-qubit register.
    pub fn pure_qubit(amp0: Complex64, amp1: Complex64, label: Label) -> Result<Self> {
        let norm = (amp0.norm_sqr() + amp1.norm_sqr()).sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidState(format!(
                "qubit amplitudes not normalized (norm {norm})"
            )));
        }
        let amps = [amp0, amp1];
        let matrix = CMatrix::from_fn(2, 2, |i, j| amps[i] * amps[j].conj());
        Self::new(matrix, RegisterLayout::new(vec![label])?)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Tensor product; `self` occupies the more significant index block.
    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        let mut labels = self.layout.labels.clone();
        labels.extend_from_slice(&other.layout.labels);
        let layout = RegisterLayout::new(labels)?;
        Ok(DensityMatrix::from_parts_unchecked(
            linalg::tensor(&self.matrix, &other.matrix),
            layout,
        ))
    }

    /// Reduced state on `keep`, tracing out every other factor.
    pub fn partial_trace(&self, keep: &[Label]) -> Result<DensityMatrix> {
        let (out, out_layout) = partial_trace_matrix(&self.matrix, &self.layout, keep)?;
        Ok(DensityMatrix::from_parts_unchecked(out, out_layout))
    }

    /// Deviations from the density-matrix invariants.
    pub fn deviation(&self) -> Result<StateDeviation> {
        let hermiticity = linalg::hermiticity_error(&self.matrix);
        let trace: Complex64 = self.matrix.diagonal().iter().sum();
        let trace_dev = (trace - Complex64::new(1.0, 0.0)).norm();
        let mut h = self.matrix.clone();
        linalg::rehermitize(&mut h);
        let (values, _) = linalg::herm_eig(&h)?;
        let negativity = values.iter().fold(0.0_f64, |acc, &v| acc.max(-v)).max(0.0);
        Ok(StateDeviation {
            hermiticity,
            trace: trace_dev,
            negativity,
        })
    }

    /// Von Neumann entropy `-tr(ρ ln ρ)`, natural logarithm.
    pub fn von_neumann_entropy(&self) -> Result<f64> {
        linalg::spectrum_entropy(&self.matrix)
    }
}

/// Partial trace on a raw matrix over a labeled register. Returns the
/// reduced matrix and the induced layout. Unlike
/// [`DensityMatrix::partial_trace`] this places no constraints on the input
/// (it is also used on commutators and correlation matrices).
pub fn partial_trace_matrix(
    matrix: &CMatrix,
    layout: &RegisterLayout,
    keep: &[Label],
) -> Result<(CMatrix, RegisterLayout)> {
    let out_layout = layout.induced(keep)?;
    let n = layout.num_qubits();
    let kept: Vec<usize> = out_layout
        .labels
        .iter()
        .map(|&l| layout.position(l).expect("induced label"))
        .collect();
    let traced: Vec<usize> = (0..n).filter(|p| !kept.contains(p)).collect();
    if traced.is_empty() {
        return Ok((matrix.clone(), out_layout));
    }

    // Precompute full-register index offsets contributed by the kept and
    // traced bit groups; position p holds bit weight 2^(n-1-p).
    let weight = |p: usize| 1usize << (n - 1 - p);
    let kept_offsets: Vec<usize> = (0..1usize << kept.len())
        .map(|bits| {
            kept.iter()
                .enumerate()
                .filter(|(i, _)| bits >> (kept.len() - 1 - i) & 1 == 1)
                .map(|(_, &p)| weight(p))
                .sum()
        })
        .collect();
    let traced_offsets: Vec<usize> = (0..1usize << traced.len())
        .map(|bits| {
            traced
                .iter()
                .enumerate()
                .filter(|(i, _)| bits >> (traced.len() - 1 - i) & 1 == 1)
                .map(|(_, &p)| weight(p))
                .sum()
        })
        .collect();

    let out_dim = out_layout.dim();
    let mut out = CMatrix::zeros(out_dim, out_dim);
    for (a, &ka) in kept_offsets.iter().enumerate() {
        for (b, &kb) in kept_offsets.iter().enumerate() {
            let mut acc = Complex64::default();
            for &t in &traced_offsets {
                acc += matrix[(ka + t, kb + t)];
            }
            out[(a, b)] = acc;
        }
    }
    Ok((out, out_layout))
}

/// Computational-basis state |0><0| for one environment qubit.
pub fn ground_qubit(label: Label) -> DensityMatrix {
    let mut m = CMatrix::zeros(2, 2);
    m[(0, 0)] = Complex64::new(1.0, 0.0);
    DensityMatrix::from_parts_unchecked(m, RegisterLayout::new(vec![label]).unwrap())
}
