//! The two initialization protocols and their Pauli-scheme baselines.
//!
//! Protocol 1 (post-selected chain injection): all data qubits start in the
//! ground state; the temporary pair stabilizers `S^B_i S^B_j` along the
//! A-chain are measured and post-selected on +1, which raises the ground
//! coefficients to their d-th power on the chain; the remaining qubits are
//! driven to `|+>_B`; finally all tiles are measured. In the Pauli baseline
//! the chain qubits are instead driven to the target superposition by noisy
//! single-qubit gates before the pair measurements, and off-chain qubits stay
//! in |0>.
//!
//! Protocol 2 (transversal injection): every data qubit stays in the ground
//! state (baseline: driven to the physical target state), then all tiles are
//! measured once in canonical order. The resulting outcome tuple - the
//! stabilizer trajectory - heralds which logical state was prepared; the
//! reference for each trajectory comes from noiseless enumeration.
//!
//! Both protocols measure every tile twice and discard the attempt when the
//! two rounds disagree; a trial is a single attempt and ends in one of
//! accepted-correct, accepted-failed, or discarded-restart. Deterministic
//! tiles whose first-round value comes out wrong also discard the attempt.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::algebra::{build_basis, OperatorBasis, Su2Params};
use crate::error::ProtocolError;
use crate::lattice::{
    build_layout, deterministic_tiles_from_state, logical_chains, RotatedSurfaceLayout,
};
use crate::measurement::{double_measure_with_discard, measure_temporary_pair};
use crate::noise::{AppliedError, NoiseChannel};
use crate::statevector::{Gate2x2, RngStream, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    NonPauli,
    PauliBaseline,
}

impl Scheme {
    pub fn label(self) -> &'static str {
        match self {
            Scheme::NonPauli => "non-pauli",
            Scheme::PauliBaseline => "pauli",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolKind {
    /// Protocol 1: pair post-selection along the chain.
    PostSelection,
    /// Protocol 2: transversal injection via full tile measurement.
    Transversal,
}

impl ProtocolKind {
    pub fn number(self) -> u8 {
        match self {
            ProtocolKind::PostSelection => 1,
            ProtocolKind::Transversal => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialStatus {
    AcceptedCorrect,
    AcceptedFailed,
    DiscardedRestart,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiscardReason {
    /// A temporary pair stabilizer reported -1 during post-selection.
    PairRejected,
    /// The two rounds of a tile's double measurement disagreed.
    RoundMismatch,
    /// A deterministic tile reported the wrong first-round value.
    DeterministicMismatch,
}

#[derive(Debug, Clone)]
pub struct ProtocolConfig {
    pub protocol: ProtocolKind,
    pub scheme: Scheme,
    pub distance: usize,
    /// Stabilizer-basis parameters (non-Pauli scheme) or the angles of the
    /// physical state the baseline drives qubits into. Both readings share
    /// the same ground-coefficient decomposition.
    pub params: Su2Params,
    pub noise: NoiseChannel,
    /// Infidelity above which an accepted state counts as failed.
    pub tolerance: f64,
    pub restart_limit: u32,
}

impl ProtocolConfig {
    pub fn new(
        protocol: ProtocolKind,
        scheme: Scheme,
        distance: usize,
        params: Su2Params,
        noise: NoiseChannel,
    ) -> Self {
        Self {
            protocol,
            scheme,
            distance,
            params,
            noise,
            tolerance: 1e-6,
            restart_limit: 1000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrialResult {
    pub status: TrialStatus,
    /// Tile outcomes in canonical order (partial if the attempt was discarded
    /// mid-measurement).
    pub trajectory: Vec<i8>,
    /// Restart events triggered by this trial (0 or 1: a trial is one attempt).
    pub restarts: u32,
    pub fidelity_to_reference: f64,
    pub discard_reason: Option<DiscardReason>,
    /// Error branches that fired anywhere in the attempt.
    pub errors_fired: u32,
    /// Noisy preparation gates applied to chain qubits / off-chain qubits.
    pub prep_gates_chain: u32,
    pub prep_gates_off: u32,
}

/// Deterministic single-error injection at a driving location (hook for the
/// first-order tolerance analysis).
#[derive(Debug, Clone, Copy)]
pub struct DriveInjection {
    pub qubit: usize,
    pub error: AppliedError,
}

/// Immutable per-configuration context: layout, bases, drive gate,
/// deterministic-tile expectations, and (for d <= 3) the noiseless
/// trajectory reference table. Shared read-only across parallel trials.
#[derive(Debug, Clone)]
pub struct ProtocolContext {
    pub config: ProtocolConfig,
    pub layout: RotatedSurfaceLayout,
    /// Basis of the measured stabilizers: the configured one for the
    /// non-Pauli scheme, gamma = 0 for the baseline.
    pub stab_basis: OperatorBasis,
    /// Ground/drive coefficient magnitudes and relative phase (c, s, phi).
    pub coeffs: (f64, f64, f64),
    drive_gate: Gate2x2,
    pub chain: Vec<usize>,
    pub off_chain: Vec<usize>,
    pub pairs: Vec<(usize, usize)>,
    pub det_tiles: Vec<(usize, i8)>,
    pub table: Option<TrajectoryTable>,
}

impl ProtocolContext {
    pub fn new(config: ProtocolConfig) -> Result<Self, ProtocolError> {
        let mut ctx = Self::bare(config)?;
        let pre_tile = ctx.noiseless_init_state(false)?;
        ctx.det_tiles = deterministic_tiles_from_state(&ctx.layout, &pre_tile, &ctx.stab_basis);
        if ctx.config.distance <= 3 {
            ctx.table = Some(build_trajectory_table_from(&ctx, false)?);
        }
        Ok(ctx)
    }

    /// Context without the precomputed reference table or deterministic-tile
    /// scan (table construction itself starts here).
    fn bare(config: ProtocolConfig) -> Result<Self, ProtocolError> {
        let layout = build_layout(config.distance)?;
        let param_basis = build_basis(config.params);
        let coeffs = param_basis.ground_coeff_polar();
        let stab_basis = match config.scheme {
            Scheme::NonPauli => param_basis,
            Scheme::PauliBaseline => build_basis(Su2Params::pauli()),
        };
        let drive_gate = match config.scheme {
            // |0> -> |+>_B is the transformation U itself
            Scheme::NonPauli => stab_basis.u,
            Scheme::PauliBaseline => drive_gate_for(coeffs.0, coeffs.1, coeffs.2),
        };
        let chain = layout.a_chain_on_col(0).qubits;
        let off_chain: Vec<usize> = (0..layout.data_qubit_count())
            .filter(|q| !chain.contains(q))
            .collect();
        let pairs: Vec<(usize, usize)> = chain.windows(2).map(|w| (w[0], w[1])).collect();
        Ok(Self {
            config,
            layout,
            stab_basis,
            coeffs,
            drive_gate,
            chain,
            off_chain,
            pairs,
            det_tiles: Vec::new(),
            table: None,
        })
    }

    /// The single-qubit gate used for noisy preparation: `U` (non-Pauli
    /// off-chain driving) or the baseline target-state rotation.
    pub fn drive_gate(&self) -> &Gate2x2 {
        &self.drive_gate
    }

    fn error_gate(&self, error: AppliedError) -> Option<&Gate2x2> {
        match error {
            AppliedError::None => None,
            AppliedError::A => Some(&self.stab_basis.s_a),
            AppliedError::B => Some(&self.stab_basis.s_b),
            AppliedError::C => Some(&self.stab_basis.s_c),
        }
    }

    /// The noiseless state right before tile measurement: drives applied
    /// perfectly and (protocol 1) chain pairs projected onto +1.
    pub fn noiseless_init_state(
        &self,
        include_ancilla: bool,
    ) -> Result<StateVector, ProtocolError> {
        let n_data = self.layout.data_qubit_count();
        let ket0 = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let driven = self.drive_gate.apply_to(ket0);
        let mut factors = vec![ket0; n_data + usize::from(include_ancilla)];
        match (self.config.scheme, self.config.protocol) {
            (Scheme::NonPauli, ProtocolKind::PostSelection) => {
                for &q in &self.off_chain {
                    factors[q] = driven;
                }
            }
            (Scheme::NonPauli, ProtocolKind::Transversal) => {}
            (Scheme::PauliBaseline, ProtocolKind::PostSelection) => {
                for &q in &self.chain {
                    factors[q] = driven;
                }
            }
            (Scheme::PauliBaseline, ProtocolKind::Transversal) => {
                for f in factors.iter_mut().take(n_data) {
                    *f = driven;
                }
            }
        }
        let mut state = StateVector::product_state(&factors).map_err(ProtocolError::Engine)?;
        if self.config.protocol == ProtocolKind::PostSelection {
            for &(qi, qj) in &self.pairs {
                let ops = [(qi, self.stab_basis.s_b), (qj, self.stab_basis.s_b)];
                state
                    .project_factors_sign(&ops, 1)
                    .map_err(ProtocolError::Engine)?;
            }
        }
        Ok(state)
    }

    /// Noiseless reference state for a full trajectory, or `None` when the
    /// trajectory is unreachable without errors.
    pub fn reference_for(&self, trajectory: &[i8]) -> Option<StateVector> {
        if let Some(table) = &self.table {
            return table.lookup(trajectory).map(|e| e.state.clone());
        }
        noiseless_reference(self, trajectory)
    }
}

/// Unitary with first column `(c, s e^{i rel})`: drives |0> to the target
/// physical superposition.
pub fn drive_gate_for(c: f64, s: f64, rel: f64) -> Gate2x2 {
    let phase = Complex64::from_polar(1.0, rel);
    Gate2x2::new(
        Complex64::new(c, 0.0),
        -Complex64::new(s, 0.0) * phase.conj(),
        Complex64::new(s, 0.0) * phase,
        Complex64::new(c, 0.0),
    )
}

/// Forced-outcome noiseless rerun: project every tile onto its observed
/// outcome in canonical order.
pub fn noiseless_reference(ctx: &ProtocolContext, trajectory: &[i8]) -> Option<StateVector> {
    if trajectory.len() != ctx.layout.tiles.len() {
        return None;
    }
    let mut state = ctx.noiseless_init_state(true).ok()?;
    for tile in &ctx.layout.tiles {
        let p = state
            .project_factors_sign(&tile.factors(&ctx.stab_basis), trajectory[tile.tile_id])
            .ok()?;
        if p < 1e-12 {
            return None;
        }
    }
    Some(state)
}

/// Compare a prepared state against its noiseless reference.
pub fn classify(final_state: &StateVector, reference: &StateVector, tolerance: f64) -> TrialStatus {
    match final_state.fidelity(reference) {
        Ok(f) if f >= 1.0 - tolerance => TrialStatus::AcceptedCorrect,
        _ => TrialStatus::AcceptedFailed,
    }
}

struct Attempt {
    discard: Option<DiscardReason>,
    state: StateVector,
    trajectory: Vec<i8>,
    errors_fired: u32,
    prep_gates_chain: u32,
    prep_gates_off: u32,
}

fn run_attempt(
    ctx: &ProtocolContext,
    rng: &mut RngStream,
    inject: Option<DriveInjection>,
) -> Result<Attempt, ProtocolError> {
    let layout = &ctx.layout;
    let noise = &ctx.config.noise;
    let basis = &ctx.stab_basis;
    let ancilla = layout.ancilla_index;
    let mut state = StateVector::ground_state(layout.data_qubit_count() + 1)?;
    let mut errors_fired = 0u32;
    let mut prep_gates_chain = 0u32;
    let mut prep_gates_off = 0u32;

    let drive = |state: &mut StateVector,
                 q: usize,
                 errors_fired: &mut u32,
                 rng: &mut RngStream|
     -> Result<(), ProtocolError> {
        state.apply_single(ctx.drive_gate(), q)?;
        *errors_fired += u32::from(noise.apply_after_gate(state, q, basis, rng)?.fired());
        if let Some(injection) = inject {
            if injection.qubit == q {
                if let Some(gate) = ctx.error_gate(injection.error) {
                    state.apply_single(gate, q)?;
                    *errors_fired += 1;
                }
            }
        }
        Ok(())
    };

    // vulnerable preparation gates (Pauli baseline)
    if ctx.config.scheme == Scheme::PauliBaseline {
        match ctx.config.protocol {
            ProtocolKind::PostSelection => {
                for &q in &ctx.chain {
                    drive(&mut state, q, &mut errors_fired, rng)?;
                    prep_gates_chain += 1;
                }
            }
            ProtocolKind::Transversal => {
                for q in 0..layout.data_qubit_count() {
                    drive(&mut state, q, &mut errors_fired, rng)?;
                    if ctx.chain.contains(&q) {
                        prep_gates_chain += 1;
                    } else {
                        prep_gates_off += 1;
                    }
                }
            }
        }
    }

    // temporary pair stabilizers along the chain, post-selected on +1
    if ctx.config.protocol == ProtocolKind::PostSelection {
        for &(qi, qj) in &ctx.pairs {
            let outcome = measure_temporary_pair(
                &mut state,
                qi,
                qj,
                basis,
                noise,
                rng,
                ancilla,
                &mut errors_fired,
            )?;
            if outcome != 1 {
                return Ok(Attempt {
                    discard: Some(DiscardReason::PairRejected),
                    state,
                    trajectory: Vec::new(),
                    errors_fired,
                    prep_gates_chain,
                    prep_gates_off,
                });
            }
        }
        if ctx.config.scheme == Scheme::NonPauli {
            for &q in &ctx.off_chain {
                drive(&mut state, q, &mut errors_fired, rng)?;
                prep_gates_off += 1;
            }
        }
    }

    // full tile measurement, canonical order, double-measure with discard
    let mut trajectory = Vec::with_capacity(layout.tiles.len());
    for tile in &layout.tiles {
        let (outcome, discarded) = double_measure_with_discard(
            &mut state,
            tile,
            basis,
            noise,
            rng,
            ancilla,
            &mut errors_fired,
        )?;
        trajectory.push(outcome);
        if discarded {
            return Ok(Attempt {
                discard: Some(DiscardReason::RoundMismatch),
                state,
                trajectory,
                errors_fired,
                prep_gates_chain,
                prep_gates_off,
            });
        }
    }

    // restart rule: deterministic tiles must report their expected value
    for &(tile_id, expected) in &ctx.det_tiles {
        if trajectory[tile_id] != expected {
            return Ok(Attempt {
                discard: Some(DiscardReason::DeterministicMismatch),
                state,
                trajectory,
                errors_fired,
                prep_gates_chain,
                prep_gates_off,
            });
        }
    }

    Ok(Attempt {
        discard: None,
        state,
        trajectory,
        errors_fired,
        prep_gates_chain,
        prep_gates_off,
    })
}

/// Run one initialization attempt and classify it. A trial is a single
/// attempt: any restart condition ends it as `DiscardedRestart`.
pub fn run_trial(ctx: &ProtocolContext, rng: &mut RngStream) -> Result<TrialResult, ProtocolError> {
    run_trial_with_injection(ctx, rng, None)
}

pub fn run_trial_with_injection(
    ctx: &ProtocolContext,
    rng: &mut RngStream,
    inject: Option<DriveInjection>,
) -> Result<TrialResult, ProtocolError> {
    let attempt = run_attempt(ctx, rng, inject)?;
    if let Some(reason) = attempt.discard {
        return Ok(TrialResult {
            status: TrialStatus::DiscardedRestart,
            trajectory: attempt.trajectory,
            restarts: 1,
            fidelity_to_reference: 0.0,
            discard_reason: Some(reason),
            errors_fired: attempt.errors_fired,
            prep_gates_chain: attempt.prep_gates_chain,
            prep_gates_off: attempt.prep_gates_off,
        });
    }
    let (status, fidelity) = match ctx.reference_for(&attempt.trajectory) {
        None => (TrialStatus::AcceptedFailed, 0.0),
        Some(reference) => {
            let fidelity = attempt.state.fidelity(&reference)?;
            let status = if fidelity >= 1.0 - ctx.config.tolerance {
                TrialStatus::AcceptedCorrect
            } else {
                TrialStatus::AcceptedFailed
            };
            (status, fidelity)
        }
    };
    Ok(TrialResult {
        status,
        trajectory: attempt.trajectory,
        restarts: 0,
        fidelity_to_reference: fidelity,
        discard_reason: None,
        errors_fired: attempt.errors_fired,
        prep_gates_chain: attempt.prep_gates_chain,
        prep_gates_off: attempt.prep_gates_off,
    })
}

/// Post-selection protocol entry point (validates the configured kind).
pub fn run_protocol1(
    ctx: &ProtocolContext,
    rng: &mut RngStream,
) -> Result<TrialResult, ProtocolError> {
    assert_eq!(ctx.config.protocol, ProtocolKind::PostSelection);
    run_trial(ctx, rng)
}

/// Transversal protocol entry point (validates the configured kind).
pub fn run_protocol2(
    ctx: &ProtocolContext,
    rng: &mut RngStream,
) -> Result<TrialResult, ProtocolError> {
    assert_eq!(ctx.config.protocol, ProtocolKind::Transversal);
    run_trial(ctx, rng)
}

/// Repeat attempts until one is accepted; errors out once `restart_limit`
/// attempts are exhausted (callers count exhaustion separately).
pub fn run_until_accepted(
    ctx: &ProtocolContext,
    rng: &mut RngStream,
) -> Result<(TrialResult, u32), ProtocolError> {
    for attempt_index in 1..=ctx.config.restart_limit {
        let trial = run_trial(ctx, rng)?;
        if trial.status != TrialStatus::DiscardedRestart {
            return Ok((trial, attempt_index));
        }
    }
    Err(ProtocolError::RestartLimitExhausted {
        limit: ctx.config.restart_limit,
    })
}

/// One noiseless branch of the trajectory enumeration.
#[derive(Debug, Clone)]
pub struct TrajectoryEntry {
    pub trajectory: Vec<i8>,
    pub probability: f64,
    pub state: StateVector,
    /// Amplitudes on the sector logical basis `(|0~>, X_L |0~>)`.
    pub logical_amplitudes: (Complex64, Complex64),
}

#[derive(Debug, Clone)]
pub struct ClusteringReport {
    pub entries: usize,
    pub clusters: usize,
    /// Fraction of trajectories heralding the most common logical state.
    pub majority_fraction: f64,
    /// Probability mass of that majority cluster.
    pub majority_probability: f64,
}

#[derive(Debug, Clone)]
pub struct TrajectoryTable {
    pub entries: Vec<TrajectoryEntry>,
    index: HashMap<Vec<i8>, usize>,
}

impl TrajectoryTable {
    pub fn lookup(&self, trajectory: &[i8]) -> Option<&TrajectoryEntry> {
        self.index.get(trajectory).map(|&i| &self.entries[i])
    }

    pub fn total_probability(&self) -> f64 {
        self.entries.iter().map(|e| e.probability).sum()
    }

    /// Group entries by logical ray (overlap within 1e-6 of unity).
    pub fn clustering_report(&self) -> ClusteringReport {
        let mut clusters: Vec<(Complex64, Complex64, usize, f64)> = Vec::new();
        for e in &self.entries {
            let (a, b) = e.logical_amplitudes;
            let mut found = false;
            for cluster in &mut clusters {
                let overlap = (cluster.0.conj() * a + cluster.1.conj() * b).norm();
                if overlap > 1.0 - 1e-6 {
                    cluster.2 += 1;
                    cluster.3 += e.probability;
                    found = true;
                    break;
                }
            }
            if !found {
                clusters.push((a, b, 1, e.probability));
            }
        }
        let (majority_count, majority_probability) = clusters
            .iter()
            .map(|c| (c.2, c.3))
            .max_by(|x, y| x.0.cmp(&y.0))
            .unwrap_or((0, 0.0));
        ClusteringReport {
            entries: self.entries.len(),
            clusters: clusters.len(),
            majority_fraction: if self.entries.is_empty() {
                0.0
            } else {
                majority_count as f64 / self.entries.len() as f64
            },
            majority_probability,
        }
    }
}

/// Exhaustive noiseless enumeration of tile-outcome branches for the
/// context's protocol and scheme. Refuses the distance-4 blowup (32768
/// branches) unless `allow_large` is set.
pub fn build_trajectory_table_from(
    ctx: &ProtocolContext,
    allow_large: bool,
) -> Result<TrajectoryTable, ProtocolError> {
    let tile_count = ctx.layout.tiles.len();
    if tile_count > 8 && !allow_large {
        return Err(ProtocolError::TableTooLarge {
            distance: ctx.config.distance,
            branches: 1usize << tile_count,
        });
    }
    let init = ctx.noiseless_init_state(true)?;
    let mut entries = Vec::new();
    let mut stack: Vec<(StateVector, f64, Vec<i8>)> = vec![(init, 1.0, Vec::new())];
    while let Some((state, prob, trajectory)) = stack.pop() {
        if trajectory.len() == tile_count {
            let logical_amplitudes = sector_logical_amplitudes(ctx, &trajectory, &state)?;
            entries.push(TrajectoryEntry {
                trajectory,
                probability: prob,
                state,
                logical_amplitudes,
            });
            continue;
        }
        let tile = &ctx.layout.tiles[trajectory.len()];
        let factors = tile.factors(&ctx.stab_basis);
        for sign in [1i8, -1i8] {
            let mut branch = state.clone();
            let p = branch.project_factors_sign(&factors, sign)?;
            if p > 1e-12 {
                let mut t = trajectory.clone();
                t.push(sign);
                stack.push((branch, prob * p, t));
            }
        }
    }
    entries.sort_by(|a, b| a.trajectory.cmp(&b.trajectory));
    let index = entries
        .iter()
        .enumerate()
        .map(|(i, e)| (e.trajectory.clone(), i))
        .collect();
    Ok(TrajectoryTable { entries, index })
}

/// Spec-shaped wrapper: build the noiseless table for a configuration.
pub fn build_trajectory_table(
    config: &ProtocolConfig,
    allow_large: bool,
) -> Result<TrajectoryTable, ProtocolError> {
    let mut noiseless = config.clone();
    noiseless.noise = NoiseChannel::off(config.noise.mode);
    let ctx = ProtocolContext::bare(noiseless)?;
    build_trajectory_table_from(&ctx, allow_large)
}

/// Logical basis of the trajectory's stabilizer sector: `|0~>` is the +1
/// eigenvector of the canonical B-chain inside the sector (global phase fixed
/// on the first significant amplitude), `|1~> = X_L |0~>`.
pub fn sector_logical_basis(
    ctx: &ProtocolContext,
    trajectory: &[i8],
) -> Result<Option<(StateVector, StateVector)>, ProtocolError> {
    let layout = &ctx.layout;
    let basis = &ctx.stab_basis;
    let n_data = layout.data_qubit_count();
    let (x_chain, z_chain) = logical_chains(layout);
    'seed: for seed in 0..(1usize << n_data) {
        let mut state = StateVector::ground_state(n_data + 1)?;
        state.set_amplitude(0, Complex64::new(0.0, 0.0));
        state.set_amplitude(seed, Complex64::new(1.0, 0.0));
        for tile in &layout.tiles {
            let p = state.project_factors_sign(&tile.factors(basis), trajectory[tile.tile_id])?;
            if p < 1e-6 {
                continue 'seed;
            }
        }
        let p = state.project_factors_sign(&z_chain.factors(basis), 1)?;
        if p < 1e-6 {
            continue 'seed;
        }
        state.fix_global_phase();
        let mut one = state.clone();
        one.apply_factors(&x_chain.factors(basis))?;
        return Ok(Some((state, one)));
    }
    Ok(None)
}

fn sector_logical_amplitudes(
    ctx: &ProtocolContext,
    trajectory: &[i8],
    state: &StateVector,
) -> Result<(Complex64, Complex64), ProtocolError> {
    match sector_logical_basis(ctx, trajectory)? {
        None => Ok((Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))),
        Some((zero, one)) => Ok((zero.inner_product(state)?, one.inner_product(state)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{solve_params_for_target, target_a_amplitudes};
    use crate::noise::{BasisMode, SplitSpec};

    fn magic_params(d: usize) -> Su2Params {
        let (a, b) = target_a_amplitudes();
        solve_params_for_target(a, b, d).unwrap().params
    }

    fn ctx(protocol: ProtocolKind, scheme: Scheme, d: usize, p_s: f64) -> ProtocolContext {
        let chain_len = match protocol {
            ProtocolKind::PostSelection => d,
            ProtocolKind::Transversal => 1,
        };
        let mode = match scheme {
            Scheme::NonPauli => BasisMode::NonPauli,
            Scheme::PauliBaseline => BasisMode::Pauli,
        };
        let noise = NoiseChannel::new(mode, p_s, SplitSpec::Symmetric);
        ProtocolContext::new(ProtocolConfig::new(
            protocol,
            scheme,
            d,
            magic_params(chain_len),
            noise,
        ))
        .unwrap()
    }

    #[test]
    fn noiseless_protocol1_accepts_with_unit_fidelity() {
        let ctx = ctx(ProtocolKind::PostSelection, Scheme::NonPauli, 3, 0.0);
        let mut accepted = 0;
        for t in 0..40u64 {
            let mut rng = RngStream::for_trial(100, 0, t);
            let trial = run_protocol1(&ctx, &mut rng).unwrap();
            match trial.status {
                TrialStatus::AcceptedCorrect => {
                    accepted += 1;
                    assert!(trial.fidelity_to_reference >= 1.0 - 1e-9);
                    assert_eq!(trial.prep_gates_chain, 0);
                    assert_eq!(trial.prep_gates_off, 6);
                }
                TrialStatus::AcceptedFailed => panic!("noiseless attempt failed"),
                TrialStatus::DiscardedRestart => {
                    assert_eq!(trial.discard_reason, Some(DiscardReason::PairRejected));
                }
            }
        }
        assert!(accepted > 0);
    }

    #[test]
    fn pair_acceptance_rate_near_quarter_at_d3() {
        let ctx = ctx(ProtocolKind::PostSelection, Scheme::NonPauli, 3, 0.0);
        let shots = 4000u64;
        let mut accepted = 0u32;
        for t in 0..shots {
            let mut rng = RngStream::for_trial(7, 0, t);
            let trial = run_trial(&ctx, &mut rng).unwrap();
            accepted += u32::from(trial.status != TrialStatus::DiscardedRestart);
        }
        let rate = f64::from(accepted) / shots as f64;
        let sigma = (0.25f64 * 0.75 / shots as f64).sqrt();
        assert!((rate - 0.25).abs() < 4.0 * sigma, "rate {rate}");
    }

    #[test]
    fn protocol2_noiseless_matches_table_everywhere() {
        let ctx = ctx(ProtocolKind::Transversal, Scheme::NonPauli, 2, 0.0);
        let table = ctx.table.as_ref().unwrap();
        assert!(table.entries.len() <= 8);
        assert!((table.total_probability() - 1.0).abs() < 1e-9);
        for t in 0..60u64 {
            let mut rng = RngStream::for_trial(11, 0, t);
            let trial = run_protocol2(&ctx, &mut rng).unwrap();
            assert_eq!(trial.status, TrialStatus::AcceptedCorrect);
            assert!(trial.fidelity_to_reference >= 1.0 - 1e-9);
            assert_eq!(trial.prep_gates_chain + trial.prep_gates_off, 0);
        }
    }

    #[test]
    fn protocol2_pauli_reduction_heralds_logical_zero() {
        // gamma = 0, ground start: B tiles deterministic +1, one logical state
        let noise = NoiseChannel::off(BasisMode::NonPauli);
        let config = ProtocolConfig::new(
            ProtocolKind::Transversal,
            Scheme::NonPauli,
            3,
            Su2Params::pauli(),
            noise,
        );
        let ctx = ProtocolContext::new(config).unwrap();
        let b_count = ctx
            .layout
            .tiles_of_kind(crate::algebra::OperatorKind::B)
            .count();
        assert_eq!(ctx.det_tiles.len(), b_count);
        let table = ctx.table.as_ref().unwrap();
        // only all-(+1)-B trajectories appear, A outcomes free: 2^4 entries
        assert_eq!(table.entries.len(), 16);
        let report = table.clustering_report();
        assert_eq!(report.clusters, 1);
        assert!((report.majority_fraction - 1.0).abs() < 1e-12);
        for e in &table.entries {
            let (a, b) = e.logical_amplitudes;
            assert!((a.norm() - 1.0).abs() < 1e-9, "not |0>_L: {:?}", (a, b));
            assert!(b.norm() < 1e-9);
        }
    }

    #[test]
    fn single_drive_injection_never_accepts_failed() {
        let ctx = ctx(ProtocolKind::PostSelection, Scheme::NonPauli, 3, 0.0);
        for &q in &ctx.off_chain {
            for error in [AppliedError::A, AppliedError::B, AppliedError::C] {
                for t in 0..10u64 {
                    let mut rng = RngStream::for_trial(13, q as u64, t);
                    let trial = run_trial_with_injection(
                        &ctx,
                        &mut rng,
                        Some(DriveInjection { qubit: q, error }),
                    )
                    .unwrap();
                    assert_ne!(
                        trial.status,
                        TrialStatus::AcceptedFailed,
                        "q={q} error={error:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn baseline_gate_counts() {
        let c1 = ctx(ProtocolKind::PostSelection, Scheme::PauliBaseline, 3, 0.0);
        let mut rng = RngStream::from_seed(21);
        let (trial, _) = run_until_accepted(&c1, &mut rng).unwrap();
        assert_eq!(trial.prep_gates_chain, 3);
        assert_eq!(trial.prep_gates_off, 0);

        let c2 = ctx(ProtocolKind::Transversal, Scheme::PauliBaseline, 3, 0.0);
        let trial = run_trial(&c2, &mut rng).unwrap();
        assert_eq!(trial.prep_gates_chain + trial.prep_gates_off, 9);
    }

    #[test]
    fn baseline_protocol1_noiseless_equals_nonpauli_logical_content() {
        // the baseline drives the same coefficients into the Z basis; its
        // accepted noiseless state must carry amplitudes (c^3, s^3 e^{3i phi})
        let np = ctx(ProtocolKind::PostSelection, Scheme::NonPauli, 3, 0.0);
        let pb = ctx(ProtocolKind::PostSelection, Scheme::PauliBaseline, 3, 0.0);
        assert!((np.coeffs.0 - pb.coeffs.0).abs() < 1e-12);
        let np_table = np.table.as_ref().unwrap();
        let pb_table = pb.table.as_ref().unwrap();
        assert_eq!(np_table.entries.len(), pb_table.entries.len());
        for (a, b) in np_table.entries.iter().zip(pb_table.entries.iter()) {
            let (a0, a1) = a.logical_amplitudes;
            let (b0, b1) = b.logical_amplitudes;
            let overlap = (a0.conj() * b0 + a1.conj() * b1).norm();
            assert!(overlap > 1.0 - 1e-9, "{:?} vs {:?}", (a0, a1), (b0, b1));
        }
    }

    #[test]
    fn table_refuses_distance_4_without_flag() {
        let noise = NoiseChannel::off(BasisMode::NonPauli);
        let config = ProtocolConfig::new(
            ProtocolKind::Transversal,
            Scheme::NonPauli,
            4,
            magic_params(1),
            noise,
        );
        assert!(matches!(
            build_trajectory_table(&config, false),
            Err(ProtocolError::TableTooLarge { .. })
        ));
    }

    #[test]
    fn classification_detects_logical_flip() {
        let ctx = ctx(ProtocolKind::PostSelection, Scheme::NonPauli, 2, 0.0);
        let mut rng = RngStream::from_seed(3);
        let (trial, _) = run_until_accepted(&ctx, &mut rng).unwrap();
        let reference = ctx.reference_for(&trial.trajectory).unwrap();
        assert_eq!(classify(&reference, &reference, 1e-6), TrialStatus::AcceptedCorrect);
        let mut flipped = reference.clone();
        flipped
            .apply_factors(&ctx.layout.a_chain_on_col(0).factors(&ctx.stab_basis))
            .unwrap();
        assert_eq!(classify(&flipped, &reference, 1e-6), TrialStatus::AcceptedFailed);
        // one residual physical error also classifies as failed
        let mut damaged = reference.clone();
        damaged.apply_single(&ctx.stab_basis.s_a, 1).unwrap();
        assert_eq!(classify(&damaged, &reference, 1e-6), TrialStatus::AcceptedFailed);
    }
}
