//! Stochastic single-qubit error channels, applied as trajectory sampling.
//!
//! Every branch is unitary (identity or one of three involutions), so the
//! channel preserves the norm exactly; the twirled map is realized by
//! sampling, never by density matrices. In `NonPauli` mode the branches are
//! `S^A, S^B, S^C` of the active basis, in `Pauli` mode they are `X, Z, Y`.
//! The two modes coincide branch-for-branch at `gamma = 0` under a shared
//! random stream because both consume exactly one draw per application and
//! use the same branch ordering (A/X, B/Z, C/Y).

use crate::algebra::OperatorBasis;
use crate::error::EngineError;
use crate::statevector::{Gate2x2, RngStream, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisMode {
    Pauli,
    NonPauli,
}

/// Which error branch fired, for diagnostics and instrumentation.
/// In Pauli mode `A`, `B`, `C` read as `X`, `Z`, `Y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AppliedError {
    None,
    A,
    B,
    C,
}

impl AppliedError {
    pub fn fired(self) -> bool {
        self != AppliedError::None
    }
}

/// How to divide the total error probability over the three branches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitSpec {
    Symmetric,
    /// Relative weights for the A/X, B/Z, C/Y branches; normalized to `p_s`.
    Ratios(f64, f64, f64),
}

#[derive(Debug, Clone, Copy)]
pub struct NoiseChannel {
    pub mode: BasisMode,
    /// Total single-qubit gate error probability.
    pub p_s: f64,
    /// Absolute branch probabilities, summing to `p_s`.
    pub split: [f64; 3],
    /// Two-qubit gate error probability (hook after each controlled gate,
    /// applied to the target qubit). Default 0.
    pub p_t: f64,
    /// Reset error probability (hook after each ancilla reset). Default 0.
    pub p_r: f64,
}

impl NoiseChannel {
    pub fn new(mode: BasisMode, p_s: f64, split: SplitSpec) -> Self {
        assert!((0.0..=1.0).contains(&p_s), "p_s must be in [0, 1]");
        let split = match split {
            SplitSpec::Symmetric => [p_s / 3.0; 3],
            SplitSpec::Ratios(a, b, c) => {
                assert!(a >= 0.0 && b >= 0.0 && c >= 0.0, "ratios must be nonnegative");
                let total = a + b + c;
                assert!(total > 0.0 || p_s == 0.0, "ratios must not all vanish");
                if total > 0.0 {
                    [p_s * a / total, p_s * b / total, p_s * c / total]
                } else {
                    [0.0; 3]
                }
            }
        };
        Self {
            mode,
            p_s,
            split,
            p_t: 0.0,
            p_r: 0.0,
        }
    }

    pub fn off(mode: BasisMode) -> Self {
        Self::new(mode, 0.0, SplitSpec::Symmetric)
    }

    pub fn with_two_qubit(mut self, p_t: f64) -> Self {
        assert!((0.0..=1.0).contains(&p_t));
        self.p_t = p_t;
        self
    }

    pub fn with_reset(mut self, p_r: f64) -> Self {
        assert!((0.0..=1.0).contains(&p_r));
        self.p_r = p_r;
        self
    }

    fn branch_gate(&self, branch: AppliedError, basis: &OperatorBasis) -> Gate2x2 {
        match (self.mode, branch) {
            (BasisMode::NonPauli, AppliedError::A) => basis.s_a,
            (BasisMode::NonPauli, AppliedError::B) => basis.s_b,
            (BasisMode::NonPauli, AppliedError::C) => basis.s_c,
            (BasisMode::Pauli, AppliedError::A) => Gate2x2::pauli_x(),
            (BasisMode::Pauli, AppliedError::B) => Gate2x2::pauli_z(),
            (BasisMode::Pauli, AppliedError::C) => Gate2x2::pauli_y(),
            (_, AppliedError::None) => Gate2x2::identity(),
        }
    }

    fn sample_branch(probs: [f64; 3], rng: &mut RngStream) -> AppliedError {
        let u = rng.next_f64();
        let p_total = probs[0] + probs[1] + probs[2];
        if u >= p_total {
            return AppliedError::None;
        }
        if u < probs[0] {
            AppliedError::A
        } else if u < probs[0] + probs[1] {
            AppliedError::B
        } else {
            AppliedError::C
        }
    }

    /// Single-qubit error channel after a gate on `q`. Consumes exactly one
    /// random draw, always.
    pub fn apply_after_gate(
        &self,
        state: &mut StateVector,
        q: usize,
        basis: &OperatorBasis,
        rng: &mut RngStream,
    ) -> Result<AppliedError, EngineError> {
        let branch = Self::sample_branch(self.split, rng);
        if branch.fired() {
            state.apply_single(&self.branch_gate(branch, basis), q)?;
        }
        Ok(branch)
    }

    /// Two-qubit gate hook: a single-qubit channel of total weight `p_t` on
    /// the target qubit. Skipped (zero draws) when `p_t = 0`.
    pub fn apply_after_controlled(
        &self,
        state: &mut StateVector,
        target: usize,
        basis: &OperatorBasis,
        rng: &mut RngStream,
    ) -> Result<AppliedError, EngineError> {
        if self.p_t == 0.0 {
            return Ok(AppliedError::None);
        }
        let branch = Self::sample_branch([self.p_t / 3.0; 3], rng);
        if branch.fired() {
            state.apply_single(&self.branch_gate(branch, basis), target)?;
        }
        Ok(branch)
    }

    /// Reset hook: flips the freshly reset ancilla with probability `p_r`.
    /// Skipped (zero draws) when `p_r = 0`.
    pub fn apply_after_reset(
        &self,
        state: &mut StateVector,
        q: usize,
        rng: &mut RngStream,
    ) -> Result<bool, EngineError> {
        if self.p_r == 0.0 {
            return Ok(false);
        }
        let u = rng.next_f64();
        if u < self.p_r {
            state.apply_single(&Gate2x2::pauli_x(), q)?;
            return Ok(true);
        }
        Ok(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{build_basis, Su2Params};

    #[test]
    fn p_zero_is_identity() {
        let basis = build_basis(Su2Params::new(1.0, 1.0, 1.0).unwrap());
        let channel = NoiseChannel::off(BasisMode::NonPauli);
        let mut rng = RngStream::from_seed(5);
        let mut state = StateVector::ground_state(2).unwrap();
        let reference = state.clone();
        for _ in 0..100 {
            let tag = channel.apply_after_gate(&mut state, 0, &basis, &mut rng).unwrap();
            assert_eq!(tag, AppliedError::None);
        }
        assert!((state.fidelity(&reference).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn forced_a_branch_flips_b_eigenstate() {
        // p_a = 1: S^A maps |+>_B to |->_B (S^A U|0> = U X|0> = U|1>)
        let basis = build_basis(Su2Params::new(0.9, 0.4, 1.7).unwrap());
        let channel = NoiseChannel::new(BasisMode::NonPauli, 1.0, SplitSpec::Ratios(1.0, 0.0, 0.0));
        let mut rng = RngStream::from_seed(6);
        let mut state = StateVector::product_state(&[basis.eig_b_plus]).unwrap();
        let tag = channel.apply_after_gate(&mut state, 0, &basis, &mut rng).unwrap();
        assert_eq!(tag, AppliedError::A);
        let minus = StateVector::product_state(&[basis.eig_b_minus]).unwrap();
        assert!((state.fidelity(&minus).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn branch_frequencies_match_split() {
        let basis = build_basis(Su2Params::pauli());
        let p_s = 0.3;
        let channel = NoiseChannel::new(BasisMode::Pauli, p_s, SplitSpec::Ratios(3.0, 2.0, 1.0));
        let mut counts = [0u32; 4];
        let shots = 1_000_000u32;
        let mut rng = RngStream::from_seed(77);
        let mut state = StateVector::ground_state(1).unwrap();
        for _ in 0..shots {
            let tag = channel.apply_after_gate(&mut state, 0, &basis, &mut rng).unwrap();
            counts[match tag {
                AppliedError::None => 0,
                AppliedError::A => 1,
                AppliedError::B => 2,
                AppliedError::C => 3,
            }] += 1;
        }
        let expect = [1.0 - p_s, p_s * 0.5, p_s / 3.0, p_s / 6.0];
        for (i, e) in expect.iter().enumerate() {
            let f = f64::from(counts[i]) / f64::from(shots);
            let sigma = (e * (1.0 - e) / f64::from(shots)).sqrt();
            assert!((f - e).abs() < 3.0 * sigma, "branch {i}: {f} vs {e}");
        }
    }

    #[test]
    fn pauli_and_conjugated_channels_coincide_at_gamma_zero() {
        let basis = build_basis(Su2Params::pauli());
        let a = NoiseChannel::new(BasisMode::Pauli, 0.4, SplitSpec::Symmetric);
        let b = NoiseChannel::new(BasisMode::NonPauli, 0.4, SplitSpec::Symmetric);
        let mut rng_a = RngStream::from_seed(9);
        let mut rng_b = RngStream::from_seed(9);
        let mut sa = StateVector::ground_state(2).unwrap();
        sa.apply_single(&Gate2x2::hadamard(), 0).unwrap();
        let mut sb = sa.clone();
        for _ in 0..200 {
            let ta = a.apply_after_gate(&mut sa, 0, &basis, &mut rng_a).unwrap();
            let tb = b.apply_after_gate(&mut sb, 0, &basis, &mut rng_b).unwrap();
            assert_eq!(ta, tb);
        }
        assert!((sa.fidelity(&sb).unwrap() - 1.0).abs() < 1e-12);
    }
}
