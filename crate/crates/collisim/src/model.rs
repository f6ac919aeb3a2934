//! Interaction Hamiltonians and collision unitaries.
//!
//! The system-environment coupling is the XX+YY exchange; environment
//! qubits talk to later ones through Heisenberg pair couplings, either one
//! partner at a time ("separate") or through a single exponential of the
//! summed pair Hamiltonians ("collective"). Couplings enter only as the
//! dimensionless products `g_se` and `g_ee` (coupling strength times
//! interaction time), which is all the dynamics ever depends on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix};
use crate::register::{Label, RegisterLayout};

/// Pauli axis selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// The 2x2 Pauli matrix for `axis`.
pub fn pauli(axis: Axis) -> CMatrix {
    let (r, z) = (c(1.0, 0.0), c(0.0, 0.0));
    match axis {
        Axis::X => CMatrix::from_row_slice(2, 2, &[z, r, r, z]),
        Axis::Y => CMatrix::from_row_slice(2, 2, &[z, c(0.0, -1.0), c(0.0, 1.0), z]),
        Axis::Z => CMatrix::from_row_slice(2, 2, &[r, z, z, -r]),
    }
}

/// System-environment pair Hamiltonian `σx⊗σx + σy⊗σy` (coupling factored
/// out into the angle).
pub fn h_se_pair() -> CMatrix {
    linalg::tensor(&pauli(Axis::X), &pauli(Axis::X))
        + linalg::tensor(&pauli(Axis::Y), &pauli(Axis::Y))
}

/// Heisenberg pair Hamiltonian `(σxσx + σyσy + σzσz)/2`, again without the
/// coupling factor.
pub fn h_heis_pair() -> CMatrix {
    (linalg::tensor(&pauli(Axis::X), &pauli(Axis::X))
        + linalg::tensor(&pauli(Axis::Y), &pauli(Axis::Y))
        + linalg::tensor(&pauli(Axis::Z), &pauli(Axis::Z)))
        * c(0.5, 0.0)
}

/// One stage of a consecutive environment interaction: a Heisenberg pair
/// coupling at distance `range` with its own strength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub range: u8,
    pub strength: f64,
}

/// Which environment-environment coupling is active after each collision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EnvModel {
    /// The fresh subenvironment couples to the single partner at distance `j`.
    Separate { j: u8 },
    /// One exponential of the summed pair Hamiltonians at distances `1..=r`.
    Collective { r: u8 },
    /// Pair couplings at increasing distances applied in sequence within one
    /// collision, each with its own strength (`g_ee` is ignored).
    Consecutive { stages: Vec<Stage> },
}

impl EnvModel {
    /// Farthest partner distance; the window holds this many environment
    /// qubits beyond the current one.
    pub fn max_range(&self) -> usize {
        match self {
            EnvModel::Separate { j } => *j as usize,
            EnvModel::Collective { r } => *r as usize,
            EnvModel::Consecutive { stages } => {
                stages.iter().map(|s| s.range as usize).max().unwrap_or(0)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EnvModel::Separate { j } => {
                if !(1..=4).contains(j) {
                    return Err(Error::Config(format!(
                        "env_model: separate distance must be 1..=4, got {j}"
                    )));
                }
            }
            EnvModel::Collective { r } => {
                if !(1..=4).contains(r) {
                    return Err(Error::Config(format!(
                        "env_model: collective range must be 1..=4, got {r}"
                    )));
                }
            }
            EnvModel::Consecutive { stages } => {
                if stages.is_empty() {
                    return Err(Error::Config(
                        "env_model: consecutive interaction needs at least one stage".into(),
                    ));
                }
                for w in stages.windows(2) {
                    if w[1].range <= w[0].range {
                        return Err(Error::Config(
                            "env_model: consecutive stages must be ordered by strictly \
                             increasing distance"
                                .into(),
                        ));
                    }
                }
                if stages.iter().any(|s| !(1..=4).contains(&s.range)) {
                    return Err(Error::Config(
                        "env_model: consecutive stage distances must be 1..=4".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Dimensionless couplings of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingConfig {
    /// `J_se · t`, the system-environment exchange angle.
    pub g_se: f64,
    /// `J_ee · t`, the environment-environment angle (unused by
    /// [`EnvModel::Consecutive`], which carries per-stage strengths).
    pub g_ee: f64,
    pub env_model: EnvModel,
}

impl CouplingConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.g_se.is_finite() || !self.g_ee.is_finite() {
            return Err(Error::Config("couplings must be finite".into()));
        }
        self.env_model.validate()
    }
}

/// Embed a 4x4 pair operator so that it acts on factors `(a, b)` of the
/// register (in that order) and as identity elsewhere.
pub fn embed_pair(
    h_pair: &CMatrix,
    layout: &RegisterLayout,
    a: Label,
    b: Label,
) -> Result<CMatrix> {
    if a == b {
        return Err(Error::Config(format!("embed_pair: labels coincide ({a})")));
    }
    let pa = layout.position(a)?;
    let pb = layout.position(b)?;
    let n = layout.num_qubits();
    let dim = layout.dim();
    let bit = |idx: usize, p: usize| (idx >> (n - 1 - p)) & 1;
    let rest_mask = !((1usize << (n - 1 - pa)) | (1usize << (n - 1 - pb))) & (dim - 1);
    let mut out = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        let row_pair = (bit(i, pa) << 1) | bit(i, pb);
        for j in 0..dim {
            if (i & rest_mask) != (j & rest_mask) {
                continue;
            }
            let col_pair = (bit(j, pa) << 1) | bit(j, pb);
            out[(i, j)] = h_pair[(row_pair, col_pair)];
        }
    }
    Ok(out)
}

/// Collision unitary `exp(-i g_se (XX+YY))` on the system and `env_label`,
/// embedded into the window register.
pub fn u_se(config: &CouplingConfig, layout: &RegisterLayout, env_label: Label) -> Result<CMatrix> {
    let h = embed_pair(&h_se_pair(), layout, Label::Sys, env_label)?;
    linalg::expm_herm(&h, config.g_se)
}

/// Summed environment Hamiltonian for the exponent of one `u_ee` stage,
/// sourced at `source`. Separate: the single pair at distance `j`.
/// Collective: the sum of pairs at distances `1..=r` (exponentiated jointly,
/// never as a product of pair exponentials).
fn ee_hamiltonian(
    model: &EnvModel,
    layout: &RegisterLayout,
    source: Label,
) -> Result<Vec<(CMatrix, f64)>> {
    let src_index = match source {
        Label::Env(k) => k,
        Label::Sys => return Err(Error::UnknownLabel("S is not an environment qubit".into())),
    };
    let pair = h_heis_pair();
    let embedded = |j: u8| -> Result<CMatrix> {
        embed_pair(&pair, layout, source, Label::Env(src_index + j as u32))
    };
    match model {
        EnvModel::Separate { j } => Ok(vec![(embedded(*j)?, 1.0)]),
        EnvModel::Collective { r } => {
            let mut sum = CMatrix::zeros(layout.dim(), layout.dim());
            for j in 1..=*r {
                sum += embedded(j)?;
            }
            Ok(vec![(sum, 1.0)])
        }
        EnvModel::Consecutive { stages } => stages
            .iter()
            .map(|s| Ok((embedded(s.range)?, s.strength)))
            .collect(),
    }
}

/// Environment-interaction unitary for one collision, sourced at `source`.
///
/// For the consecutive model this is the ordered product of the stage
/// unitaries (first stage applied first).
pub fn u_ee(config: &CouplingConfig, layout: &RegisterLayout, source: Label) -> Result<CMatrix> {
    let terms = ee_hamiltonian(&config.env_model, layout, source)?;
    let uses_g_ee = !matches!(config.env_model, EnvModel::Consecutive { .. });
    let mut u = linalg::identity(layout.dim());
    for (h, strength) in terms {
        let angle = if uses_g_ee { config.g_ee } else { strength };
        u = linalg::expm_herm(&h, angle)? * u;
    }
    Ok(u)
}

/// Dimensionless generator of one collision step:
/// `g_se · (XX+YY)_{S,source}` plus the weighted environment pair terms.
/// Used by the trace-distance-derivative bound.
pub fn step_hamiltonian(
    config: &CouplingConfig,
    layout: &RegisterLayout,
    source: Label,
) -> Result<CMatrix> {
    let mut h = embed_pair(&h_se_pair(), layout, Label::Sys, source)? * c(config.g_se, 0.0);
    let uses_g_ee = !matches!(config.env_model, EnvModel::Consecutive { .. });
    for (term, strength) in ee_hamiltonian(&config.env_model, layout, source)? {
        let angle = if uses_g_ee { config.g_ee } else { strength };
        h += term * c(angle, 0.0);
    }
    Ok(h)
}

/// Analytic form of `exp(-i g (XX+YY))` on two qubits: identity on
/// {|00>,|11>}, and `[[cos 2g, -i sin 2g], [-i sin 2g, cos 2g]]` on the
/// {|01>,|10>} block. Test oracle for [`u_se`].
pub fn closed_form_xxyy(g: f64) -> CMatrix {
    let (cos, sin) = ((2.0 * g).cos(), (2.0 * g).sin());
    let mut u = linalg::identity(4);
    u[(1, 1)] = c(cos, 0.0);
    u[(2, 2)] = c(cos, 0.0);
    u[(1, 2)] = c(0.0, -sin);
    u[(2, 1)] = c(0.0, -sin);
    u
}
