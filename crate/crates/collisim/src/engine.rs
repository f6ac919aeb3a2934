//! The collision loop.
//!
//! Two system trajectories with identical environments are driven through
//! the same sequence of collisions. Each step applies the system-environment
//! exchange, then the environment-environment interaction sourced at the
//! current subenvironment, records observables, erases the s-e correlations
//! (keeping the environment window whole), and slides the window forward by
//! one qubit.
//!
//! The window is exact, not an approximation: a discarded subenvironment
//! never interacts again, so tracing it out commutes with everything that
//! follows. [`brute_force_run`] verifies this by holding every environment
//! qubit in one register.

use serde::Serialize;

use crate::config::{ExperimentConfig, MiHook};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::measures::{self, BoundMode, BoundTerms};
use crate::model;
use crate::register::{DensityMatrix, Label, RegisterLayout};

/// Per-collision observables for the trajectory pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollisionRecord {
    pub k: usize,
    /// Trace distance between the two system trajectories.
    pub d: f64,
    /// `D_k - D_{k-1}`.
    pub delta_d: f64,
    /// Running sum of positive increments.
    pub n_cumulative: f64,
    /// l1 coherence of each trajectory's system state.
    pub c_l1: [f64; 2],
    /// Mutual information between the system and the current subenvironment.
    pub mi: [f64; 2],
    pub b_env: f64,
    pub b_corr: f64,
    /// `(b_env + b_corr) / 2`.
    pub bound: f64,
}

/// Joint state over the sliding window `[S, E_k, ..., E_{k+w-1}]`.
#[derive(Debug, Clone)]
pub struct WindowState {
    pub joint: DensityMatrix,
    pub collision_index: usize,
}

/// The two trajectories plus everything recorded so far.
#[derive(Debug, Clone)]
pub struct TrajectoryPair {
    pub traj1: WindowState,
    pub traj2: WindowState,
    pub records: Vec<CollisionRecord>,
    /// Pre-erasure bound computed at the end of the previous step; it bounds
    /// the increment of the step about to run, so it is emitted with the
    /// next record.
    pub pending_bound: BoundTerms,
}

impl TrajectoryPair {
    pub fn d_series(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.d).collect()
    }
}

/// Knobs for a single run beyond what the experiment config fixes.
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    /// Stop early once the measure has been quiet for
    /// [`EARLY_STOP_WINDOW`] collisions.
    pub stop_at_saturation: bool,
    /// Skip the bound terms (they are the most expensive per-step quantity).
    pub compute_bounds: bool,
    /// Skip mutual information.
    pub compute_mi: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            stop_at_saturation: false,
            compute_bounds: true,
            compute_mi: true,
        }
    }
}

/// Saturation rule for reporting: the measure counts as saturated once this
/// many consecutive increments each stay below [`SATURATION_EPS`].
pub const SATURATION_WINDOW: usize = 100;
pub const SATURATION_EPS: f64 = 1e-8;

/// Early stopping uses a longer quiet window than the reporting rule, so a
/// plateau between two revival trains is not mistaken for saturation.
pub const EARLY_STOP_WINDOW: usize = 500;

/// First collision index at which the measure is saturated, i.e. the
/// `SATURATION_WINDOW` increments that follow are each below
/// `SATURATION_EPS`. `None` when the series never settles.
pub fn saturation_index(records: &[CollisionRecord]) -> Option<usize> {
    if records.len() <= SATURATION_WINDOW {
        return None;
    }
    let increments: Vec<f64> = records
        .windows(2)
        .map(|w| w[1].n_cumulative - w[0].n_cumulative)
        .collect();
    // increments[i] leads from record i to i+1
    'outer: for k in 0..increments.len().saturating_sub(SATURATION_WINDOW - 1) {
        for inc in &increments[k..k + SATURATION_WINDOW] {
            if *inc >= SATURATION_EPS {
                continue 'outer;
            }
        }
        return Some(records[k].k);
    }
    None
}

/// Precomputed step operators plus the experiment configuration. Everything
/// is immutable after construction, so one engine can drive any number of
/// runs, also from parallel workers.
pub struct Engine {
    config: ExperimentConfig,
    u_se: CMatrix,
    u_ee: CMatrix,
    h_eff: CMatrix,
    /// Exchange generator between the system and its next collision partner
    /// (positional factor 2). The pre-erasure bound treats the end-of-step
    /// state as the input of a fictitious next step, and only the s-e part
    /// of that step's Hamiltonian survives the partial trace over the
    /// environment.
    h_next: CMatrix,
    window: usize,
}

impl Engine {
    pub fn new(config: &ExperimentConfig) -> Result<Engine> {
        config.validate()?;
        let window = config.coupling().env_model.max_range() + 1;
        // The unitaries are positional: the system sits at factor 0 and the
        // current subenvironment at factor 1 in every step, so one set of
        // operators serves the whole run.
        let layout = RegisterLayout::window(0, window);
        let coupling = config.coupling();
        let u_se = model::u_se(&coupling, &layout, Label::Env(0))?;
        let u_ee = model::u_ee(&coupling, &layout, Label::Env(0))?;
        let h_eff = model::step_hamiltonian(&coupling, &layout, Label::Env(0))?;
        let h_next = model::embed_pair(&model::h_se_pair(), &layout, Label::Sys, Label::Env(1))?
            * linalg::c(coupling.g_se, 0.0);
        Ok(Engine {
            config: config.clone(),
            u_se,
            u_ee,
            h_eff,
            h_next,
            window,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    /// Both trajectories in the factorized initial state: the configured
    /// system state tensored with every window qubit in the environment
    /// initial state. Record 0 carries the initial observables.
    pub fn init(&self) -> Result<TrajectoryPair> {
        let (s1, s2) = self.config.initial_pair_states()?;
        let env = self.initial_environment(0, self.window)?;
        let traj1 = WindowState {
            joint: s1.tensor(&env)?,
            collision_index: 0,
        };
        let traj2 = WindowState {
            joint: s2.tensor(&env)?,
            collision_index: 0,
        };
        let mut pair = TrajectoryPair {
            traj1,
            traj2,
            records: Vec::new(),
            pending_bound: BoundTerms::zero(),
        };
        let d = measures::trace_distance(
            &pair.traj1.joint.partial_trace(&[Label::Sys])?,
            &pair.traj2.joint.partial_trace(&[Label::Sys])?,
        )?;
        let c1 = measures::l1_coherence(&pair.traj1.joint.partial_trace(&[Label::Sys])?);
        let c2 = measures::l1_coherence(&pair.traj2.joint.partial_trace(&[Label::Sys])?);
        pair.records.push(CollisionRecord {
            k: 0,
            d,
            delta_d: 0.0,
            n_cumulative: 0.0,
            c_l1: [c1, c2],
            mi: [0.0, 0.0],
            b_env: 0.0,
            b_corr: 0.0,
            bound: 0.0,
        });
        Ok(pair)
    }

    fn initial_environment(&self, first: u32, count: usize) -> Result<DensityMatrix> {
        let mut env = self.config.env_init_state(Label::Env(first))?;
        for i in 1..count {
            let q = self.config.env_init_state(Label::Env(first + i as u32))?;
            env = env.tensor(&q)?;
        }
        Ok(env)
    }

    /// One collision for both trajectories, with full recording.
    pub fn collide_step(&self, pair: &mut TrajectoryPair) -> Result<()> {
        self.collide_step_with(pair, &RunOptions::default())
    }

    pub fn collide_step_with(&self, pair: &mut TrajectoryPair, opts: &RunOptions) -> Result<()> {
        let k_next = pair.traj1.collision_index + 1;
        let env_label = current_env_label(&pair.traj1.joint);

        // PreErasure bound: computed at the end of the previous step,
        // before its erasure, and carried over as the bound on the
        // increment this step produces. The PostErasure bound is sampled
        // after this step's erasure instead, so that every row reports
        // quantities of the same post-collision snapshot.
        let mut bound = BoundTerms::zero();
        if opts.compute_bounds && self.config.bound_mode == BoundMode::PreErasure {
            bound = pair.pending_bound;
        }

        // s-e interaction
        conjugate(&mut pair.traj1.joint, &self.u_se);
        conjugate(&mut pair.traj2.joint, &self.u_se);

        let mut mi = [0.0, 0.0];
        if opts.compute_mi && self.config.mi_hook == MiHook::PreEe {
            mi = self.pair_mi(pair, env_label)?;
        }

        // e-e interaction
        conjugate(&mut pair.traj1.joint, &self.u_ee);
        conjugate(&mut pair.traj2.joint, &self.u_ee);

        if opts.compute_mi && self.config.mi_hook == MiHook::PostEe {
            mi = self.pair_mi(pair, env_label)?;
        }

        // PreErasure bound for the NEXT step: sampled after both
        // interactions and before the correlations are erased, against the
        // generator of the collision the system is about to have.
        if opts.compute_bounds && self.config.bound_mode == BoundMode::PreErasure {
            pair.pending_bound = measures::bound_terms(
                &pair.traj1.joint,
                &pair.traj2.joint,
                &self.h_next,
                BoundMode::PreErasure,
                self.config.norm,
            )?;
        }

        // distinguishability and coherence of the system marginals
        let s1 = pair.traj1.joint.partial_trace(&[Label::Sys])?;
        let s2 = pair.traj2.joint.partial_trace(&[Label::Sys])?;
        let d = measures::trace_distance(&s1, &s2)?;
        let prev = pair.records.last().expect("init record");
        let delta_d = d - prev.d;
        let n_cumulative = prev.n_cumulative + delta_d.max(0.0);
        let c_l1 = [measures::l1_coherence(&s1), measures::l1_coherence(&s2)];

        // erase s-e correlations (environment window stays whole), then
        // slide: drop the spent subenvironment, append a fresh one
        pair.traj1.joint = self.factorize_and_shift(&pair.traj1.joint, s1, env_label)?;
        pair.traj2.joint = self.factorize_and_shift(&pair.traj2.joint, s2, env_label)?;
        pair.traj1.collision_index = k_next;
        pair.traj2.collision_index = k_next;

        // PostErasure bound: sampled on the freshly factorized state, a
        // beginning-of-step state where the correlation matrix (and with
        // it B_corr) vanishes identically. After the window shift the
        // next collision partner sits at the leading slot again, so the
        // positional step generator applies unchanged.
        if opts.compute_bounds && self.config.bound_mode == BoundMode::PostErasure {
            bound = measures::bound_terms(
                &pair.traj1.joint,
                &pair.traj2.joint,
                &self.h_eff,
                BoundMode::PostErasure,
                self.config.norm,
            )?;
        }

        pair.records.push(CollisionRecord {
            k: k_next,
            d,
            delta_d,
            n_cumulative,
            c_l1,
            mi,
            b_env: bound.b_env,
            b_corr: bound.b_corr,
            bound: bound.bound,
        });
        Ok(())
    }

    fn pair_mi(&self, pair: &TrajectoryPair, env_label: Label) -> Result<[f64; 2]> {
        Ok([
            measures::mutual_information(&pair.traj1.joint, Label::Sys, env_label)?,
            measures::mutual_information(&pair.traj2.joint, Label::Sys, env_label)?,
        ])
    }

    fn factorize_and_shift(
        &self,
        joint: &DensityMatrix,
        mut system: DensityMatrix,
        env_label: Label,
    ) -> Result<DensityMatrix> {
        let env_labels: Vec<Label> = joint
            .layout()
            .labels()
            .iter()
            .copied()
            .filter(|&l| l != Label::Sys)
            .collect();
        let mut env = joint.partial_trace(&env_labels)?;
        // drop the spent subenvironment from the (whole) window marginal
        let surviving: Vec<Label> = env_labels
            .iter()
            .copied()
            .filter(|&l| l != env_label)
            .collect();
        if !surviving.is_empty() {
            env = env.partial_trace(&surviving)?;
        }
        rehermitize_state(&mut system);
        rehermitize_state(&mut env);
        let fresh_index = match env_label {
            Label::Env(k) => k + self.window as u32,
            Label::Sys => unreachable!(),
        };
        let fresh = self.config.env_init_state(Label::Env(fresh_index))?;
        let appended = if surviving.is_empty() {
            fresh
        } else {
            env.tensor(&fresh)?
        };
        system.tensor(&appended)
    }

    /// Run `collisions` steps (or fewer if saturation stopping is on) and
    /// return the record series, including the `k = 0` baseline row.
    pub fn run_with(&self, opts: &RunOptions) -> Result<Vec<CollisionRecord>> {
        let mut pair = self.init()?;
        for _ in 0..self.config.collisions {
            self.collide_step_with(&mut pair, opts)?;
            if opts.stop_at_saturation && quiet_tail(&pair.records, EARLY_STOP_WINDOW) {
                break;
            }
        }
        Ok(pair.records)
    }

    pub fn run(&self) -> Result<Vec<CollisionRecord>> {
        self.run_with(&RunOptions::default())
    }

    /// Saturated measure value with early stopping and the per-step
    /// diagnostics switched off; used by sweeps.
    pub fn saturated_n(&self) -> Result<f64> {
        let records = self.run_with(&RunOptions {
            stop_at_saturation: true,
            compute_bounds: false,
            compute_mi: false,
        })?;
        Ok(records.last().expect("records nonempty").n_cumulative)
    }
}

fn quiet_tail(records: &[CollisionRecord], window: usize) -> bool {
    if records.len() <= window {
        return false;
    }
    records[records.len() - window - 1..]
        .windows(2)
        .all(|w| w[1].n_cumulative - w[0].n_cumulative < SATURATION_EPS)
}

/// Label of the subenvironment the system collides with next (the earliest
/// environment qubit in the window).
fn current_env_label(joint: &DensityMatrix) -> Label {
    joint
        .layout()
        .labels()
        .iter()
        .copied()
        .filter(|l| matches!(l, Label::Env(_)))
        .min()
        .expect("window has environment qubits")
}

fn conjugate(state: &mut DensityMatrix, u: &CMatrix) {
    let mut m = linalg::conjugate_unitary(u, state.matrix());
    linalg::rehermitize(&mut m);
    *state = DensityMatrix::from_parts_unchecked(m, state.layout().clone());
}

/// Snap a marginal back onto the Hermitian unit-trace manifold. The step
/// unitaries come from eigendecompositions, so each conjugation drifts the
/// trace by a few ulps; left alone the drift compounds over long runs.
fn rehermitize_state(state: &mut DensityMatrix) {
    let mut m = state.matrix().clone();
    linalg::rehermitize(&mut m);
    let tr = m.trace().re;
    m.unscale_mut(tr);
    *state = DensityMatrix::from_parts_unchecked(m, state.layout().clone());
}

/// Run a complete experiment; convenience wrapper over [`Engine`].
pub fn run(config: &ExperimentConfig) -> Result<Vec<CollisionRecord>> {
    Engine::new(config)?.run()
}

/// Same protocol with every environment qubit held in a single register and
/// never discarded; verification oracle for the sliding window.
pub fn brute_force_run(
    config: &ExperimentConfig,
    total_env_qubits: usize,
) -> Result<Vec<CollisionRecord>> {
    config.validate()?;
    let coupling = config.coupling();
    let max_range = coupling.env_model.max_range();
    if total_env_qubits < config.collisions + max_range {
        return Err(Error::Config(format!(
            "brute force needs at least collisions + max range = {} environment qubits, got {}",
            config.collisions + max_range,
            total_env_qubits
        )));
    }
    const MAX_QUBITS: usize = 12;
    if total_env_qubits + 1 > MAX_QUBITS {
        return Err(Error::RegisterTooLarge {
            qubits: total_env_qubits + 1,
            max: MAX_QUBITS,
        });
    }

    let layout = RegisterLayout::window(0, total_env_qubits);
    let (s1, s2) = config.initial_pair_states()?;
    let mut env = config.env_init_state(Label::Env(0))?;
    for i in 1..total_env_qubits {
        env = env.tensor(&config.env_init_state(Label::Env(i as u32))?)?;
    }
    let mut joint1 = s1.tensor(&env)?;
    let mut joint2 = s2.tensor(&env)?;

    let env_labels: Vec<Label> = (0..total_env_qubits)
        .map(|i| Label::Env(i as u32))
        .collect();

    let mut records = Vec::with_capacity(config.collisions + 1);
    let d0 = measures::trace_distance(
        &joint1.partial_trace(&[Label::Sys])?,
        &joint2.partial_trace(&[Label::Sys])?,
    )?;
    records.push(CollisionRecord {
        k: 0,
        d: d0,
        delta_d: 0.0,
        n_cumulative: 0.0,
        c_l1: [
            measures::l1_coherence(&joint1.partial_trace(&[Label::Sys])?),
            measures::l1_coherence(&joint2.partial_trace(&[Label::Sys])?),
        ],
        mi: [0.0, 0.0],
        b_env: 0.0,
        b_corr: 0.0,
        bound: 0.0,
    });

    let mut pending_bound = BoundTerms::zero();
    for k in 0..config.collisions {
        let env_label = Label::Env(k as u32);
        let u_se = model::u_se(&coupling, &layout, env_label)?;
        let u_ee = model::u_ee(&coupling, &layout, env_label)?;
        // s-e generator of the following collision; only this part of a
        // step Hamiltonian survives the partial trace over the environment
        let h_next =
            model::embed_pair(&model::h_se_pair(), &layout, Label::Sys, Label::Env(k as u32 + 1))?
                * linalg::c(coupling.g_se, 0.0);

        let mut bound = match config.bound_mode {
            BoundMode::PostErasure => BoundTerms::zero(),
            BoundMode::PreErasure => pending_bound,
        };

        conjugate(&mut joint1, &u_se);
        conjugate(&mut joint2, &u_se);

        let mut mi = [0.0, 0.0];
        if config.mi_hook == MiHook::PreEe {
            mi = [
                measures::mutual_information(&joint1, Label::Sys, env_label)?,
                measures::mutual_information(&joint2, Label::Sys, env_label)?,
            ];
        }

        conjugate(&mut joint1, &u_ee);
        conjugate(&mut joint2, &u_ee);

        if config.mi_hook == MiHook::PostEe {
            mi = [
                measures::mutual_information(&joint1, Label::Sys, env_label)?,
                measures::mutual_information(&joint2, Label::Sys, env_label)?,
            ];
        }

        if config.bound_mode == BoundMode::PreErasure {
            pending_bound =
                measures::bound_terms(&joint1, &joint2, &h_next, BoundMode::PreErasure, config.norm)?;
        }

        let s1 = joint1.partial_trace(&[Label::Sys])?;
        let s2 = joint2.partial_trace(&[Label::Sys])?;
        let d = measures::trace_distance(&s1, &s2)?;
        let prev = records.last().unwrap();
        let delta_d = d - prev.d;
        let n_cumulative = prev.n_cumulative + delta_d.max(0.0);
        let c_l1 = [measures::l1_coherence(&s1), measures::l1_coherence(&s2)];

        // factorize the system from the FULL environment; nothing is
        // discarded here
        let mut e1 = joint1.partial_trace(&env_labels)?;
        let mut e2 = joint2.partial_trace(&env_labels)?;
        let mut s1m = s1;
        let mut s2m = s2;
        rehermitize_state(&mut e1);
        rehermitize_state(&mut e2);
        rehermitize_state(&mut s1m);
        rehermitize_state(&mut s2m);
        joint1 = s1m.tensor(&e1)?;
        joint2 = s2m.tensor(&e2)?;

        // PostErasure bound: sampled on the freshly factorized state
        // against the generator of the next collision
        if config.bound_mode == BoundMode::PostErasure {
            bound = measures::bound_terms(
                &joint1,
                &joint2,
                &h_next,
                BoundMode::PostErasure,
                config.norm,
            )?;
        }

        records.push(CollisionRecord {
            k: k + 1,
            d,
            delta_d,
            n_cumulative,
            c_l1,
            mi,
            b_env: bound.b_env,
            b_corr: bound.b_corr,
            bound: bound.bound,
        });
    }
    Ok(records)
}
