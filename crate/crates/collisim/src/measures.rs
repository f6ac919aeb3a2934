//! Distinguishability, coherence, correlation and bound quantities.
//!
//! This module holds the trace distance and its discretized accumulation
//! into the non-Markovianity measure, the l1-norm of coherence, mutual
//! information, the system-environment correlation matrix χ, and the two
//! terms of the upper bound on the trace-distance derivative.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix};
use crate::register::{partial_trace_matrix, DensityMatrix, Label};

/// Where the bound inputs are sampled within a collision step.
///
/// `PostErasure`: at the beginning of every step, on the factorized state
/// left by the previous step's erasure; the correlation term then vanishes
/// identically. `PreErasure`: after the s-e and e-e interactions and before
/// the correlations are erased.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundMode {
    PostErasure,
    PreErasure,
}

/// Which norm backs the bound terms. The trace norm matches the norm used
/// by the trace distance; the operator norm is provided as an alternative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormKind {
    Trace,
    Operator,
}

impl NormKind {
    fn apply(self, m: &CMatrix) -> Result<f64> {
        match self {
            NormKind::Trace => linalg::trace_norm(m),
            NormKind::Operator => linalg::operator_norm(m),
        }
    }
}

/// `D(ρ1, ρ2) = ½ ||ρ1 - ρ2||_1`; zero for identical states, one for
/// orthogonal ones.
pub fn trace_distance(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    if rho1.layout() != rho2.layout() {
        return Err(Error::LayoutMismatch(
            format!("{:?}", rho1.layout().labels()),
            format!("{:?}", rho2.layout().labels()),
        ));
    }
    let diff = rho1.matrix() - rho2.matrix();
    Ok(0.5 * linalg::trace_norm(&diff)?)
}

/// Sum of positive increments of a trace-distance series, together with the
/// raw increments for diagnostics. The maximization over initial-state
/// pairs is the caller's job (see [`blp_maximize`]).
pub fn blp_accumulate(d_series: &[f64]) -> (f64, Vec<f64>) {
    let increments: Vec<f64> = d_series.windows(2).map(|w| w[1] - w[0]).collect();
    let n = increments.iter().filter(|&&x| x > 0.0).sum();
    (n, increments)
}

/// `ΔD(k) = D_k - D_{k-1}`; may be negative.
pub fn delta_d(d_series: &[f64], k: usize) -> Result<f64> {
    if k == 0 || k >= d_series.len() {
        return Err(Error::IndexOutOfRange {
            index: k,
            len: d_series.len(),
        });
    }
    Ok(d_series[k] - d_series[k - 1])
}

/// l1-norm of coherence: sum of moduli of off-diagonal entries in the
/// computational basis.
pub fn l1_coherence(rho: &DensityMatrix) -> f64 {
    let m = rho.matrix();
    let n = m.nrows();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                total += m[(i, j)].norm();
            }
        }
    }
    total
}

/// Mutual information `I = S(ρ_s) + S(ρ_e) - S(ρ_se)` between two labels,
/// reducing the input first when the register is larger.
pub fn mutual_information(rho: &DensityMatrix, s: Label, e: Label) -> Result<f64> {
    let joint = if rho.layout().num_qubits() > 2 {
        rho.partial_trace(&[s, e])?
    } else {
        rho.clone()
    };
    let rho_s = joint.partial_trace(&[s])?;
    let rho_e = joint.partial_trace(&[e])?;
    Ok(rho_s.von_neumann_entropy()? + rho_e.von_neumann_entropy()?
        - joint.von_neumann_entropy()?)
}

/// Correlation matrix `χ = ρ_se - ρ_s ⊗ ρ_e`, split system vs rest.
#[derive(Debug, Clone)]
pub struct ChiMatrix {
    matrix: CMatrix,
}

impl ChiMatrix {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            matrix: CMatrix::zeros(dim, dim),
        }
    }
}

/// Compute χ for a joint state, splitting off the system factor from the
/// whole environment window.
pub fn chi(rho_se: &DensityMatrix) -> Result<ChiMatrix> {
    let env_labels: Vec<Label> = rho_se
        .layout()
        .labels()
        .iter()
        .copied()
        .filter(|&l| l != Label::Sys)
        .collect();
    if env_labels.len() == rho_se.layout().num_qubits() {
        return Err(Error::UnknownLabel("S".into()));
    }
    let rho_s = rho_se.partial_trace(&[Label::Sys])?;
    let rho_e = rho_se.partial_trace(&env_labels)?;
    let product = linalg::tensor(rho_s.matrix(), rho_e.matrix());
    Ok(ChiMatrix {
        matrix: rho_se.matrix() - product,
    })
}

/// Auxiliary states entering the bound: the joint operator is commuted with
/// the step Hamiltonian and the environment is traced out,
/// `ρ̃_s = Tr_e [H, ρ_s ⊗ ρ_e]` and `χ̃_s = Tr_e [H, χ]`. Both results are
/// traceless 2x2 (anti-Hermitian) matrices.
pub fn tilde_states(
    h_eff: &CMatrix,
    rho_s: &DensityMatrix,
    rho_e: &DensityMatrix,
    chi: &ChiMatrix,
) -> Result<(CMatrix, CMatrix)> {
    let joint = rho_s.tensor(rho_e)?;
    let layout = joint.layout().clone();
    let commute = |x: &CMatrix| h_eff * x - x * h_eff;
    let (tilde_rho, _) =
        partial_trace_matrix(&commute(joint.matrix()), &layout, &[Label::Sys])?;
    let (tilde_chi, _) =
        partial_trace_matrix(&commute(chi.matrix()), &layout, &[Label::Sys])?;
    Ok((tilde_rho, tilde_chi))
}

/// Antipodal pure-state pair: two orthogonal initial system states.
pub type StatePair = (crate::config::PureState, crate::config::PureState);

/// Grid of antipodal pairs over the Bloch sphere: `polar` values of θ from
/// the pole to the equator, each with `azimuthal` values of φ (a single
/// point at the pole itself).
pub fn antipodal_grid(polar: usize, azimuthal: usize) -> Vec<StatePair> {
    use crate::config::PureState;
    let mut pairs = Vec::new();
    for i in 0..polar.max(1) {
        let theta = if polar > 1 {
            std::f64::consts::FRAC_PI_2 * i as f64 / (polar - 1) as f64
        } else {
            std::f64::consts::FRAC_PI_2
        };
        let phis = if theta == 0.0 { 1 } else { azimuthal.max(1) };
        for j in 0..phis {
            let phi = std::f64::consts::TAU * j as f64 / phis as f64;
            let state = PureState { theta, phi };
            pairs.push((state, state.antipode()));
        }
    }
    pairs
}

/// Maximization of the measure over initial-state pairs: run the engine per
/// pair and keep the best. The default caller grid is the single
/// (|+>, |->) pair.
pub fn blp_maximize(
    config: &crate::config::ExperimentConfig,
    pair_grid: &[StatePair],
) -> Result<(f64, StatePair)> {
    if pair_grid.is_empty() {
        return Err(Error::Config("pair grid must not be empty".into()));
    }
    use rayon::prelude::*;
    let results: Vec<(f64, StatePair)> = pair_grid
        .par_iter()
        .map(|&pair| {
            let mut cfg = config.clone();
            cfg.initial_pair = pair;
            let n = crate::engine::Engine::new(&cfg)?.saturated_n()?;
            Ok((n, pair))
        })
        .collect::<Result<_>>()?;
    // first index achieving the maximum, for determinism under ties
    let best = results
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| a.0.total_cmp(&b.0).then(ib.cmp(ia)))
        .expect("nonempty");
    Ok(*best.1)
}

/// The two contributions to the trace-distance-derivative bound and their
/// half-sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundTerms {
    pub b_env: f64,
    pub b_corr: f64,
    pub bound: f64,
}

impl BoundTerms {
    pub fn zero() -> Self {
        Self {
            b_env: 0.0,
            b_corr: 0.0,
            bound: 0.0,
        }
    }
}

/// Norm of a difference of anti-Hermitian tilde outputs. Multiplying by i
/// gives a Hermitian matrix with identical singular values, which is what
/// the Hermitian-only norms need.
fn anti_hermitian_norm(diff: &CMatrix, norm: NormKind) -> Result<f64> {
    norm.apply(&(diff * c(0.0, 1.0)))
}

/// Bound terms from the two trajectories' joint window states.
///
/// `B_env` compares the tilde states built from trajectory 1's system
/// marginal against each trajectory's environment marginal; `B_corr`
/// compares the two tilde χ states. In `PostErasure` mode χ vanishes by
/// construction (the inputs are factorized states), so `B_corr` is exactly
/// zero rather than numerically small.
pub fn bound_terms(
    joint1: &DensityMatrix,
    joint2: &DensityMatrix,
    h_eff: &CMatrix,
    mode: BoundMode,
    norm: NormKind,
) -> Result<BoundTerms> {
    let env_labels: Vec<Label> = joint1
        .layout()
        .labels()
        .iter()
        .copied()
        .filter(|&l| l != Label::Sys)
        .collect();
    let rho_s1 = joint1.partial_trace(&[Label::Sys])?;
    let rho_e1 = joint1.partial_trace(&env_labels)?;
    let rho_e2 = joint2.partial_trace(&env_labels)?;

    let (chi1, chi2) = match mode {
        BoundMode::PostErasure => {
            let dim = joint1.dim();
            (ChiMatrix::zero(dim), ChiMatrix::zero(dim))
        }
        BoundMode::PreErasure => (chi(joint1)?, chi(joint2)?),
    };

    let (tilde_rho_11, tilde_chi_1) = tilde_states(h_eff, &rho_s1, &rho_e1, &chi1)?;
    let (tilde_rho_12, tilde_chi_2) = tilde_states(h_eff, &rho_s1, &rho_e2, &chi2)?;

    let b_env = anti_hermitian_norm(&(tilde_rho_11 - tilde_rho_12), norm)?;
    let b_corr = match mode {
        BoundMode::PostErasure => 0.0,
        BoundMode::PreErasure => anti_hermitian_norm(&(tilde_chi_1 - tilde_chi_2), norm)?,
    };
    Ok(BoundTerms {
        b_env,
        b_corr,
        bound: 0.5 * (b_env + b_corr),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, max_abs, max_abs_diff, tensor};
    use crate::model::{self, EnvModel};
    use crate::register::{ground_qubit, RegisterLayout};
    use num_complex::Complex64;

    const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn qubit(amp0: Complex64, amp1: Complex64, label: Label) -> DensityMatrix {
        DensityMatrix::pure_qubit(amp0, amp1, label).unwrap()
    }

    fn plus(label: Label) -> DensityMatrix {
        qubit(c(SQRT_HALF, 0.0), c(SQRT_HALF, 0.0), label)
    }

    fn minus(label: Label) -> DensityMatrix {
        qubit(c(SQRT_HALF, 0.0), c(-SQRT_HALF, 0.0), label)
    }

    fn bell() -> DensityMatrix {
        let mut m = CMatrix::zeros(4, 4);
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            m[(i, j)] = c(0.5, 0.0);
        }
        DensityMatrix::new(
            m,
            RegisterLayout::new(vec![Label::Sys, Label::Env(0)]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn trace_distance_basics() {
        let p = plus(Label::Sys);
        assert!(trace_distance(&p, &p).unwrap().abs() < 1e-15);
        assert!((trace_distance(&p, &minus(Label::Sys)).unwrap() - 1.0).abs() < 1e-12);
        let zero = qubit(c(1.0, 0.0), c(0.0, 0.0), Label::Sys);
        // oracle: eigenvalues of the 2x2 difference are ±1/√2
        assert!((trace_distance(&zero, &p).unwrap() - SQRT_HALF).abs() < 1e-12);
    }

    #[test]
    fn trace_distance_layout_mismatch() {
        let a = plus(Label::Sys);
        let b = plus(Label::Env(0));
        assert!(matches!(
            trace_distance(&a, &b),
            Err(Error::LayoutMismatch(_, _))
        ));
    }

    #[test]
    fn trace_distance_is_a_metric_on_samples() {
        let states = [
            plus(Label::Sys),
            minus(Label::Sys),
            qubit(c(1.0, 0.0), c(0.0, 0.0), Label::Sys),
            qubit(c(0.6, 0.0), c(0.0, 0.8), Label::Sys),
        ];
        for a in &states {
            for b in &states {
                let dab = trace_distance(a, b).unwrap();
                let dba = trace_distance(b, a).unwrap();
                assert!((dab - dba).abs() < 1e-14);
                for e in &states {
                    let dae = trace_distance(a, e).unwrap();
                    let deb = trace_distance(e, b).unwrap();
                    assert!(dab <= dae + deb + 1e-10);
                }
            }
        }
    }

    #[test]
    fn blp_accumulate_cases() {
        let (n, _) = blp_accumulate(&[1.0, 0.8, 0.6, 0.5]);
        assert_eq!(n, 0.0);
        let (n, inc) = blp_accumulate(&[1.0, 0.5, 0.7, 0.7]);
        assert!((n - 0.2).abs() < 1e-15);
        assert_eq!(inc.len(), 3);
    }

    #[test]
    fn delta_d_cases() {
        assert_eq!(delta_d(&[0.5, 0.5, 0.5], 2).unwrap(), 0.0);
        assert!((delta_d(&[1.0, 0.8], 1).unwrap() + 0.2).abs() < 1e-15);
        assert!(delta_d(&[1.0, 0.8], 0).is_err());
        assert!(delta_d(&[1.0, 0.8], 2).is_err());
    }

    #[test]
    fn coherence_values() {
        assert!(l1_coherence(&qubit(c(1.0, 0.0), c(0.0, 0.0), Label::Sys)).abs() < 1e-15);
        assert!((l1_coherence(&plus(Label::Sys)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mutual_information_values() {
        let product = plus(Label::Sys).tensor(&ground_qubit(Label::Env(0))).unwrap();
        assert!(mutual_information(&product, Label::Sys, Label::Env(0))
            .unwrap()
            .abs()
            < 1e-12);
        // Bell state: marginal entropies ln 2 each, joint entropy 0
        let mi = mutual_information(&bell(), Label::Sys, Label::Env(0)).unwrap();
        assert!((mi - 2.0 * 2.0_f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn mutual_information_local_unitary_invariant() {
        let state = bell();
        let u_s = linalg::expm_herm(&model::pauli(model::Axis::X), 0.7).unwrap();
        let u_e = linalg::expm_herm(&model::pauli(model::Axis::Z), 1.1).unwrap();
        let u = tensor(&u_s, &u_e);
        let rotated = DensityMatrix::new(
            &u * state.matrix() * u.adjoint(),
            state.layout().clone(),
        )
        .unwrap();
        let a = mutual_information(&state, Label::Sys, Label::Env(0)).unwrap();
        let b = mutual_information(&rotated, Label::Sys, Label::Env(0)).unwrap();
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn chi_of_product_is_zero() {
        let product = plus(Label::Sys).tensor(&ground_qubit(Label::Env(0))).unwrap();
        let x = chi(&product).unwrap();
        assert!(max_abs(x.matrix()) < 1e-14);
    }

    #[test]
    fn chi_invariants_on_bell() {
        let x = chi(&bell()).unwrap();
        let trace: Complex64 = x.matrix().diagonal().iter().sum();
        assert!(trace.norm() < 1e-14);
        assert!(linalg::hermiticity_error(x.matrix()) < 1e-14);
        assert!(max_abs(x.matrix()) > 0.1);
    }

    #[test]
    fn tilde_vanishes_for_environment_only_hamiltonian() {
        // algebraic identity: Tr_e([A_e, X]) = 0 by cyclicity within the
        // traced factor
        let layout = RegisterLayout::window(0, 2);
        let h_env = model::embed_pair(
            &model::h_heis_pair(),
            &layout,
            Label::Env(0),
            Label::Env(1),
        )
        .unwrap();
        let rho_s = plus(Label::Sys);
        let rho_e = ground_qubit(Label::Env(0))
            .tensor(&qubit(c(0.6, 0.0), c(0.8, 0.0), Label::Env(1)))
            .unwrap();
        let joint = rho_s.tensor(&rho_e).unwrap();
        let x = chi(&joint).unwrap();
        let (tr, tc) = tilde_states(&h_env, &rho_s, &rho_e, &x).unwrap();
        assert!(max_abs(&tr) < 1e-12);
        assert!(max_abs(&tc) < 1e-12);
    }

    #[test]
    fn tilde_zero_chi_gives_zero() {
        let layout = RegisterLayout::window(0, 1);
        let h = model::embed_pair(&model::h_se_pair(), &layout, Label::Sys, Label::Env(0))
            .unwrap();
        let (_, tc) = tilde_states(
            &h,
            &plus(Label::Sys),
            &ground_qubit(Label::Env(0)),
            &ChiMatrix::zero(4),
        )
        .unwrap();
        assert!(max_abs(&tc) < 1e-15);
    }

    #[test]
    fn tilde_matches_direct_commutator_evaluation() {
        // independent dense evaluation of Tr_e{[H, |+><+| ⊗ |0><0|]}
        let g = 0.05;
        let layout = RegisterLayout::window(0, 1);
        let h = model::embed_pair(&model::h_se_pair(), &layout, Label::Sys, Label::Env(0))
            .unwrap()
            * c(g, 0.0);
        let rho_s = plus(Label::Sys);
        let rho_e = ground_qubit(Label::Env(0));
        let (tilde, _) = tilde_states(&h, &rho_s, &rho_e, &ChiMatrix::zero(4)).unwrap();

        let joint = tensor(rho_s.matrix(), rho_e.matrix());
        let comm = &h * &joint - &joint * &h;
        let mut direct = CMatrix::zeros(2, 2);
        for a in 0..2 {
            for b in 0..2 {
                direct[(a, b)] = comm[(2 * a, 2 * b)] + comm[(2 * a + 1, 2 * b + 1)];
            }
        }
        assert!(max_abs_diff(&tilde, &direct) < 1e-12);
        // traceless: trace of a commutator vanishes
        let trace: Complex64 = tilde.diagonal().iter().sum();
        assert!(trace.norm() < 1e-12);
    }

    #[test]
    fn bound_terms_zero_at_start() {
        // identical initial environments and no correlations
        let layout = RegisterLayout::window(0, 2);
        let cfg = model::CouplingConfig {
            g_se: 0.05,
            g_ee: std::f64::consts::FRAC_PI_2,
            env_model: EnvModel::Separate { j: 1 },
        };
        let h = model::step_hamiltonian(&cfg, &layout, Label::Env(0)).unwrap();
        let env = ground_qubit(Label::Env(0))
            .tensor(&ground_qubit(Label::Env(1)))
            .unwrap();
        let joint1 = plus(Label::Sys).tensor(&env).unwrap();
        let joint2 = minus(Label::Sys).tensor(&env).unwrap();
        for mode in [BoundMode::PostErasure, BoundMode::PreErasure] {
            let t = bound_terms(&joint1, &joint2, &h, mode, NormKind::Trace).unwrap();
            assert!(t.b_env < 1e-12);
            assert!(t.b_corr < 1e-12);
        }
    }

    #[test]
    fn post_erasure_b_corr_is_exactly_zero() {
        let layout = RegisterLayout::window(0, 2);
        let cfg = model::CouplingConfig {
            g_se: 0.05,
            g_ee: 0.3,
            env_model: EnvModel::Separate { j: 1 },
        };
        let h = model::step_hamiltonian(&cfg, &layout, Label::Env(0)).unwrap();
        // correlated joint state: still must give b_corr == 0 in PostErasure
        let joint = bell().tensor(&ground_qubit(Label::Env(1))).unwrap();
        let t = bound_terms(&joint, &joint, &h, BoundMode::PostErasure, NormKind::Trace)
            .unwrap();
        assert_eq!(t.b_corr, 0.0);
    }

    #[test]
    fn operator_norm_never_exceeds_trace_norm() {
        let m = model::pauli(model::Axis::X) + model::pauli(model::Axis::Z);
        let t = linalg::trace_norm(&m).unwrap();
        let o = linalg::operator_norm(&m).unwrap();
        assert!(o <= t + 1e-12);
        let _ = identity(2);
    }
}
