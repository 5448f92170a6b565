//! Hadamard-test stabilizer measurement with one reused ancilla.
//!
//! The circuit for an operator `S = prod_q S_q`:
//! `H(ancilla); controlled-S_q for each factor (ascending qubit order);
//! H(ancilla); measure ancilla; reset`. Ancilla bit `b` maps to eigenvalue
//! `(-1)^b`: measuring the ancilla in the ground state projects the data
//! qubits onto the +1 eigenspace.
//!
//! The circuit noise model attaches the single-qubit channel after each `H`
//! on the ancilla; controlled legs and reset are noiseless unless the
//! channel's `p_t`/`p_r` hooks are enabled.

use crate::algebra::OperatorBasis;
use crate::error::EngineError;
use crate::lattice::StabilizerTile;
use crate::noise::NoiseChannel;
use crate::statevector::{Gate2x2, RngStream, StateVector};

/// One stabilizer (or temporary-pair, or seam-tile) measurement event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementRecord {
    pub tile_id: Option<usize>,
    pub outcome: i8,
    pub round: u32,
    pub discarded: bool,
}

/// Measure the eigenvalue of a product of single-qubit involutions via the
/// Hadamard test. Requires the ancilla in |0>; leaves it reset to |0>.
pub fn measure_tile_operator(
    state: &mut StateVector,
    factors: &[(usize, Gate2x2)],
    noise: &NoiseChannel,
    basis: &OperatorBasis,
    rng: &mut RngStream,
    ancilla: usize,
    errors_fired: &mut u32,
) -> Result<i8, EngineError> {
    let excited = 1.0 - state.prob_zero(ancilla)?;
    if excited > 1e-9 {
        return Err(EngineError::AncillaNotReset {
            qubit: ancilla,
            excited_probability: excited,
        });
    }
    let h = Gate2x2::hadamard();
    state.apply_single(&h, ancilla)?;
    *errors_fired += u32::from(noise.apply_after_gate(state, ancilla, basis, rng)?.fired());
    for (q, gate) in factors {
        state.apply_controlled(gate, ancilla, *q)?;
        *errors_fired += u32::from(noise.apply_after_controlled(state, *q, basis, rng)?.fired());
    }
    state.apply_single(&h, ancilla)?;
    *errors_fired += u32::from(noise.apply_after_gate(state, ancilla, basis, rng)?.fired());
    let bit = state.measure_and_project(ancilla, rng)?;
    if bit == 1 {
        state.apply_single(&Gate2x2::pauli_x(), ancilla)?;
    }
    *errors_fired += u32::from(noise.apply_after_reset(state, ancilla, rng)?);
    Ok(1 - 2 * i8::try_from(bit).expect("bit is 0 or 1"))
}

/// Measure one lattice tile in the operator basis of its kind.
pub fn measure_stabilizer(
    state: &mut StateVector,
    tile: &StabilizerTile,
    basis: &OperatorBasis,
    noise: &NoiseChannel,
    rng: &mut RngStream,
    ancilla: usize,
    errors_fired: &mut u32,
) -> Result<i8, EngineError> {
    measure_tile_operator(state, &tile.factors(basis), noise, basis, rng, ancilla, errors_fired)
}

/// Measure the temporary two-qubit stabilizer `S^B_i S^B_j`.
pub fn measure_temporary_pair(
    state: &mut StateVector,
    qi: usize,
    qj: usize,
    basis: &OperatorBasis,
    noise: &NoiseChannel,
    rng: &mut RngStream,
    ancilla: usize,
    errors_fired: &mut u32,
) -> Result<i8, EngineError> {
    if qi == qj {
        return Err(EngineError::ControlEqualsTarget { qubit: qi });
    }
    let factors = [(qi.min(qj), basis.s_b), (qi.max(qj), basis.s_b)];
    measure_tile_operator(state, &factors, noise, basis, rng, ancilla, errors_fired)
}

/// Measure a tile twice; the result is discarded when the rounds disagree,
/// otherwise the first-round value stands.
pub fn double_measure_with_discard(
    state: &mut StateVector,
    tile: &StabilizerTile,
    basis: &OperatorBasis,
    noise: &NoiseChannel,
    rng: &mut RngStream,
    ancilla: usize,
    errors_fired: &mut u32,
) -> Result<(i8, bool), EngineError> {
    let first = measure_stabilizer(state, tile, basis, noise, rng, ancilla, errors_fired)?;
    let second = measure_stabilizer(state, tile, basis, noise, rng, ancilla, errors_fired)?;
    Ok((first, first != second))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{build_basis, OperatorKind, Su2Params};
    use crate::noise::{BasisMode, NoiseChannel};
    use num_complex::Complex64;

    fn basis() -> OperatorBasis {
        build_basis(Su2Params::new(1.1, 0.6, 0.3).unwrap())
    }

    fn tile(kind: OperatorKind, qubits: Vec<usize>) -> StabilizerTile {
        StabilizerTile {
            tile_id: 0,
            kind,
            qubits,
        }
    }

    #[test]
    fn b_tile_on_plus_b_eigenstates_is_deterministic() {
        let basis = basis();
        let noise = NoiseChannel::off(BasisMode::NonPauli);
        let mut rng = RngStream::from_seed(3);
        let ket0 = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let mut state =
            StateVector::product_state(&[basis.eig_b_plus, basis.eig_b_plus, ket0]).unwrap();
        let reference = state.clone();
        let t = tile(OperatorKind::B, vec![0, 1]);
        for _ in 0..5 {
            let o = measure_stabilizer(&mut state, &t, &basis, &noise, &mut rng, 2, &mut 0).unwrap();
            assert_eq!(o, 1);
        }
        assert!(state.fidelity(&reference).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn xx_on_ground_pair_gives_bell_branches() {
        // gamma = 0 basis so the A tile is literally X(x)X
        let basis = build_basis(Su2Params::pauli());
        let noise = NoiseChannel::off(BasisMode::Pauli);
        let t = tile(OperatorKind::A, vec![0, 1]);
        let shots = 20_000u32;
        let mut plus = 0u32;
        for s in 0..shots {
            let mut rng = RngStream::for_trial(1234, 0, u64::from(s));
            let mut state = StateVector::ground_state(3).unwrap();
            let o = measure_stabilizer(&mut state, &t, &basis, &noise, &mut rng, 2, &mut 0).unwrap();
            if o == 1 {
                plus += 1;
                // +1 branch must be (|00> + |11>)/sqrt(2)
                let r = std::f64::consts::FRAC_1_SQRT_2;
                assert!((state.amplitude(0).norm() - r).abs() < 1e-12);
                assert!((state.amplitude(3).norm() - r).abs() < 1e-12);
            }
            // re-measurement repeats the outcome
            let again = measure_stabilizer(&mut state, &t, &basis, &noise, &mut rng, 2, &mut 0).unwrap();
            assert_eq!(o, again);
        }
        let f = f64::from(plus) / f64::from(shots);
        assert!((f - 0.5).abs() < 3.0 * (0.25f64 / f64::from(shots)).sqrt());
    }

    #[test]
    fn pair_measurement_statistics_match_projector() {
        // two ground qubits, generic basis: P(+1) = |c|^4 + |s|^4
        let basis = basis();
        let noise = NoiseChannel::off(BasisMode::NonPauli);
        let (c, s, _) = basis.ground_coeff_polar();
        let expect = c.powi(4) + s.powi(4);
        let shots = 50_000u32;
        let mut plus = 0u32;
        for t in 0..shots {
            let mut rng = RngStream::for_trial(99, 1, u64::from(t));
            let mut state = StateVector::ground_state(3).unwrap();
            let o = measure_temporary_pair(&mut state, 0, 1, &basis, &noise, &mut rng, 2, &mut 0).unwrap();
            plus += u32::from(o == 1);
        }
        let f = f64::from(plus) / f64::from(shots);
        let sigma = (expect * (1.0 - expect) / f64::from(shots)).sqrt();
        assert!((f - expect).abs() < 3.0 * sigma, "{f} vs {expect}");
    }

    #[test]
    fn pair_rejects_equal_qubits() {
        let basis = basis();
        let noise = NoiseChannel::off(BasisMode::NonPauli);
        let mut rng = RngStream::from_seed(1);
        let mut state = StateVector::ground_state(3).unwrap();
        assert!(measure_temporary_pair(&mut state, 1, 1, &basis, &noise, &mut rng, 2, &mut 0).is_err());
    }

    #[test]
    fn double_measure_noiseless_never_discards() {
        let basis = basis();
        let noise = NoiseChannel::off(BasisMode::NonPauli);
        let t = tile(OperatorKind::A, vec![0, 1]);
        for s in 0..50 {
            let mut rng = RngStream::for_trial(5, 0, s);
            let mut state = StateVector::ground_state(3).unwrap();
            let (_, discarded) =
                double_measure_with_discard(&mut state, &t, &basis, &noise, &mut rng, 2, &mut 0).unwrap();
            assert!(!discarded);
        }
    }

    #[test]
    fn injected_flip_between_rounds_is_discarded() {
        // S^A flip on a tile qubit between rounds of a B-type tile
        let basis = basis();
        let noise = NoiseChannel::off(BasisMode::NonPauli);
        let t = tile(OperatorKind::B, vec![0, 1]);
        let mut rng = RngStream::from_seed(8);
        let mut state =
            StateVector::product_state(&[basis.eig_b_plus, basis.eig_b_plus, [
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
            ]])
            .unwrap();
        let first = measure_stabilizer(&mut state, &t, &basis, &noise, &mut rng, 2, &mut 0).unwrap();
        state.apply_single(&basis.s_a, 0).unwrap();
        let second = measure_stabilizer(&mut state, &t, &basis, &noise, &mut rng, 2, &mut 0).unwrap();
        assert_eq!(first, 1);
        assert_eq!(second, -1);
    }

    #[test]
    fn ancilla_must_be_reset() {
        let basis = basis();
        let noise = NoiseChannel::off(BasisMode::NonPauli);
        let mut rng = RngStream::from_seed(2);
        let mut state = StateVector::ground_state(3).unwrap();
        state.apply_single(&Gate2x2::pauli_x(), 2).unwrap();
        let t = tile(OperatorKind::B, vec![0, 1]);
        assert!(matches!(
            measure_stabilizer(&mut state, &t, &basis, &noise, &mut rng, 2, &mut 0),
            Err(EngineError::AncillaNotReset { .. })
        ));
    }

    #[test]
    fn discard_rate_scales_down_with_p_s() {
        let basis = basis();
        let t = tile(OperatorKind::B, vec![0, 1]);
        let mut rates = Vec::new();
        for (i, p_s) in [0.2, 0.02, 0.0].into_iter().enumerate() {
            let noise = NoiseChannel::new(BasisMode::NonPauli, p_s, crate::noise::SplitSpec::Symmetric);
            let shots = 4000u32;
            let mut discards = 0u32;
            for s in 0..shots {
                let mut rng = RngStream::for_trial(17, i as u64, u64::from(s));
                let mut state = StateVector::product_state(&[
                    basis.eig_b_plus,
                    basis.eig_b_plus,
                    [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
                ])
                .unwrap();
                let (_, discarded) =
                    double_measure_with_discard(&mut state, &t, &basis, &noise, &mut rng, 2, &mut 0)
                        .unwrap();
                discards += u32::from(discarded);
            }
            rates.push(f64::from(discards) / f64::from(shots));
        }
        assert!(rates[0] > rates[1]);
        assert!(rates[1] > 0.0);
        assert_eq!(rates[2], 0.0);
    }
}
