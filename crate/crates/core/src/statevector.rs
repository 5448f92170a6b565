//! Dense statevector engine for up to [`MAX_QUBITS`] qubits.
//!
//! Amplitudes are stored little-endian: qubit `q` addresses bit `q` of the
//! amplitude index. Every public operation leaves the state normalized,
//! projective operations renormalize explicitly so drift does not accumulate
//! over long stabilizer-measurement sequences.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::EngineError;

/// Hard capacity limit: 2^26 amplitudes (1 GiB) is the largest register the
/// simulations here can need, with headroom over the 19-qubit hybrid-surgery case.
pub const MAX_QUBITS: usize = 26;

/// A single-qubit gate as a dense 2x2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gate2x2 {
    pub m: [[Complex64; 2]; 2],
}

impl Gate2x2 {
    pub fn new(m00: Complex64, m01: Complex64, m10: Complex64, m11: Complex64) -> Self {
        Self {
            m: [[m00, m01], [m10, m11]],
        }
    }

    pub fn identity() -> Self {
        Self::diag(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0))
    }

    pub fn diag(d0: Complex64, d1: Complex64) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self::new(d0, zero, zero, d1)
    }

    pub fn pauli_x() -> Self {
        let (zero, one) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
        Self::new(zero, one, one, zero)
    }

    pub fn pauli_y() -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self::new(zero, Complex64::new(0.0, -1.0), Complex64::new(0.0, 1.0), zero)
    }

    pub fn pauli_z() -> Self {
        Self::diag(Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0))
    }

    pub fn hadamard() -> Self {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::new(h, h, h, -h)
    }

    pub fn dagger(&self) -> Self {
        Self::new(
            self.m[0][0].conj(),
            self.m[1][0].conj(),
            self.m[0][1].conj(),
            self.m[1][1].conj(),
        )
    }

    /// Matrix product `self * rhs`.
    pub fn mul(&self, rhs: &Gate2x2) -> Self {
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, entry) in row.iter_mut().enumerate() {
                *entry = self.m[r][0] * rhs.m[0][c] + self.m[r][1] * rhs.m[1][c];
            }
        }
        Self { m: out }
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self::new(
            self.m[0][0] * factor,
            self.m[0][1] * factor,
            self.m[1][0] * factor,
            self.m[1][1] * factor,
        )
    }

    /// Max-entry residual of `G G† - I`.
    pub fn unitarity_residual(&self) -> f64 {
        let p = self.mul(&self.dagger());
        let mut r: f64 = 0.0;
        for row in 0..2 {
            for col in 0..2 {
                let expect = if row == col { 1.0 } else { 0.0 };
                r = r.max((p.m[row][col] - Complex64::new(expect, 0.0)).norm());
            }
        }
        r
    }

    pub fn apply_to(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }
}

/// Counter-derived random stream: the sequence is a pure function of
/// `(master_seed, point_index, trial_index)` so results never depend on
/// scheduling or worker count.
///
/// The generator is ChaCha8 keyed with
/// `SHA-256(le64(master_seed) || le64(point_index) || le64(trial_index))`.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn for_trial(master_seed: u64, point_index: u64, trial_index: u64) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(master_seed.to_le_bytes());
        hasher.update(point_index.to_le_bytes());
        hasher.update(trial_index.to_le_bytes());
        let digest = hasher.finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        Self {
            rng: ChaCha8Rng::from_seed(seed),
        }
    }

    pub fn from_seed(seed: u64) -> Self {
        Self::for_trial(seed, 0, 0)
    }

    /// Uniform draw in `[0, 1)`. Every stochastic decision in the simulator
    /// consumes exactly one draw, which keeps independently written
    /// implementations outcome-aligned under a shared stream.
    pub fn next_f64(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.gen::<u64>()
    }
}

/// Dense complex state over `num_qubits` qubits.
#[derive(Debug, Clone)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// All qubits in |0>.
    pub fn ground_state(num_qubits: usize) -> Result<Self, EngineError> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(EngineError::CapacityExceeded {
                requested: num_qubits,
                max: MAX_QUBITS,
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1usize << num_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { num_qubits, amps })
    }

    /// Product state from one single-qubit state per qubit (qubit i gets `factors[i]`).
    pub fn product_state(factors: &[[Complex64; 2]]) -> Result<Self, EngineError> {
        let n = factors.len();
        let mut state = Self::ground_state(n)?;
        for i in 0..(1usize << n) {
            let mut a = Complex64::new(1.0, 0.0);
            for (q, f) in factors.iter().enumerate() {
                a *= f[(i >> q) & 1];
            }
            state.amps[i] = a;
        }
        state.renormalize();
        Ok(state)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    pub fn set_amplitude(&mut self, index: usize, value: Complex64) {
        self.amps[index] = value;
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn renormalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            let inv = 1.0 / n;
            for a in &mut self.amps {
                *a *= inv;
            }
        }
    }

    fn check_qubit(&self, q: usize) -> Result<(), EngineError> {
        if q >= self.num_qubits {
            return Err(EngineError::QubitOutOfRange {
                qubit: q,
                num_qubits: self.num_qubits,
            });
        }
        Ok(())
    }

    /// Apply `gate` to qubit `q`, identity elsewhere.
    pub fn apply_single(&mut self, gate: &Gate2x2, q: usize) -> Result<(), EngineError> {
        self.check_qubit(q)?;
        let step = 1usize << q;
        let [[m00, m01], [m10, m11]] = gate.m;
        let len = self.amps.len();
        let mut base = 0usize;
        while base < len {
            for i in base..base + step {
                let j = i + step;
                let a = self.amps[i];
                let b = self.amps[j];
                self.amps[i] = m00 * a + m01 * b;
                self.amps[j] = m10 * a + m11 * b;
            }
            base += step << 1;
        }
        Ok(())
    }

    /// Apply `gate` to `target` on the `control`=|1> subspace only.
    pub fn apply_controlled(
        &mut self,
        gate: &Gate2x2,
        control: usize,
        target: usize,
    ) -> Result<(), EngineError> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(EngineError::ControlEqualsTarget { qubit: control });
        }
        let cbit = 1usize << control;
        let tbit = 1usize << target;
        let [[m00, m01], [m10, m11]] = gate.m;
        for i in 0..self.amps.len() {
            if i & cbit != 0 && i & tbit == 0 {
                let j = i | tbit;
                let a = self.amps[i];
                let b = self.amps[j];
                self.amps[i] = m00 * a + m01 * b;
                self.amps[j] = m10 * a + m11 * b;
            }
        }
        Ok(())
    }

    /// Apply a product of single-qubit operators, one factor per listed qubit.
    pub fn apply_factors(&mut self, factors: &[(usize, Gate2x2)]) -> Result<(), EngineError> {
        for (q, g) in factors {
            self.apply_single(g, *q)?;
        }
        Ok(())
    }

    /// Probability of reading 0 on qubit `q`.
    pub fn prob_zero(&self, q: usize) -> Result<f64, EngineError> {
        self.check_qubit(q)?;
        let bit = 1usize << q;
        let mut p = 0.0;
        for (i, a) in self.amps.iter().enumerate() {
            if i & bit == 0 {
                p += a.norm_sqr();
            }
        }
        Ok(p)
    }

    /// Born-rule measurement of qubit `q` in the computational basis;
    /// projects and renormalizes. Consumes exactly one random draw.
    pub fn measure_and_project(
        &mut self,
        q: usize,
        rng: &mut RngStream,
    ) -> Result<u8, EngineError> {
        let p0 = self.prob_zero(q)?;
        let u = rng.next_f64();
        let outcome: u8 = u8::from(u >= p0);
        let branch_prob = if outcome == 0 { p0 } else { 1.0 - p0 };
        if branch_prob < 1e-15 {
            return Err(EngineError::ProjectionUnderflow {
                qubit: q,
                probability: branch_prob,
            });
        }
        let bit = 1usize << q;
        let keep = usize::from(outcome) << q;
        let scale = 1.0 / branch_prob.sqrt();
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & bit == keep {
                *a *= scale;
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        Ok(outcome)
    }

    /// Project onto the `sign` (+1/-1) eigenspace of the involution
    /// `S = prod factors`; returns the branch probability. The state is
    /// renormalized when the branch has weight, otherwise left zeroed.
    pub fn project_factors_sign(
        &mut self,
        factors: &[(usize, Gate2x2)],
        sign: i8,
    ) -> Result<f64, EngineError> {
        let mut flipped = self.clone();
        flipped.apply_factors(factors)?;
        let s = f64::from(sign.signum());
        for (a, b) in self.amps.iter_mut().zip(flipped.amps.iter()) {
            *a = 0.5 * (*a + s * *b);
        }
        let p = {
            let n = self.norm();
            n * n
        };
        if p > 1e-15 {
            let inv = 1.0 / p.sqrt();
            for a in &mut self.amps {
                *a *= inv;
            }
        }
        Ok(p)
    }

    /// |<a|b>|^2, insensitive to global phase.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64, EngineError> {
        if self.num_qubits != other.num_qubits {
            return Err(EngineError::DimensionMismatch {
                left: self.num_qubits,
                right: other.num_qubits,
            });
        }
        let mut overlap = Complex64::new(0.0, 0.0);
        for (a, b) in self.amps.iter().zip(other.amps.iter()) {
            overlap += a.conj() * b;
        }
        Ok(overlap.norm_sqr())
    }

    pub fn inner_product(&self, other: &StateVector) -> Result<Complex64, EngineError> {
        if self.num_qubits != other.num_qubits {
            return Err(EngineError::DimensionMismatch {
                left: self.num_qubits,
                right: other.num_qubits,
            });
        }
        let mut overlap = Complex64::new(0.0, 0.0);
        for (a, b) in self.amps.iter().zip(other.amps.iter()) {
            overlap += a.conj() * b;
        }
        Ok(overlap)
    }

    /// Rotate the global phase so the first amplitude above `1e-9` in
    /// magnitude is real positive. Used for reproducible reference tables.
    pub fn fix_global_phase(&mut self) {
        if let Some(a) = self.amps.iter().find(|a| a.norm() > 1e-9) {
            let phase = a / a.norm();
            let inv = phase.conj();
            for amp in &mut self.amps {
                *amp *= inv;
            }
        }
    }

    /// Debug dump: one line per basis index, `index re im`, 17 significant digits.
    pub fn dump(&self) -> String {
        let mut out = String::with_capacity(self.amps.len() * 48);
        for (i, a) in self.amps.iter().enumerate() {
            out.push_str(&format!("{} {:.16e} {:.16e}\n", i, a.re, a.im));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn ground_state_definition() {
        let s = StateVector::ground_state(1).unwrap();
        assert_eq!(s.amplitudes(), &[c(1.0, 0.0), c(0.0, 0.0)]);

        let s3 = StateVector::ground_state(3).unwrap();
        assert_eq!(s3.amplitude(0), c(1.0, 0.0));
        assert!(s3.amplitudes()[1..].iter().all(|a| a.norm() == 0.0));

        let s9 = StateVector::ground_state(9).unwrap();
        assert_eq!(s9.amplitudes().len(), 512);
        assert!((s9.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn capacity_errors() {
        assert!(StateVector::ground_state(0).is_err());
        assert!(StateVector::ground_state(27).is_err());
    }

    #[test]
    fn x_and_h_on_ground() {
        let mut s = StateVector::ground_state(1).unwrap();
        s.apply_single(&Gate2x2::pauli_x(), 0).unwrap();
        assert!((s.amplitude(1) - c(1.0, 0.0)).norm() < 1e-15);

        let mut s = StateVector::ground_state(1).unwrap();
        s.apply_single(&Gate2x2::hadamard(), 0).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitude(0) - c(r, 0.0)).norm() < 1e-15);
        assert!((s.amplitude(1) - c(r, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn controlled_gate_basics() {
        // control in |0>: no-op
        let mut s = StateVector::ground_state(2).unwrap();
        s.apply_controlled(&Gate2x2::pauli_x(), 0, 1).unwrap();
        assert!((s.amplitude(0) - c(1.0, 0.0)).norm() < 1e-15);

        // |10> -> |11> with control on qubit 1 (index 2 is |q1=1,q0=0>)
        let mut s = StateVector::ground_state(2).unwrap();
        s.apply_single(&Gate2x2::pauli_x(), 1).unwrap();
        s.apply_controlled(&Gate2x2::pauli_x(), 1, 0).unwrap();
        assert!((s.amplitude(3) - c(1.0, 0.0)).norm() < 1e-15);

        let mut s = StateVector::ground_state(2).unwrap();
        assert!(s.apply_controlled(&Gate2x2::pauli_x(), 1, 1).is_err());
    }

    #[test]
    fn measurement_idempotence_and_eigenstate() {
        let mut rng = RngStream::from_seed(7);
        let mut s = StateVector::ground_state(1).unwrap();
        s.apply_single(&Gate2x2::pauli_x(), 0).unwrap();
        let o = s.measure_and_project(0, &mut rng).unwrap();
        assert_eq!(o, 1);
        let o2 = s.measure_and_project(0, &mut rng).unwrap();
        assert_eq!(o2, 1);
    }

    #[test]
    fn measurement_born_statistics() {
        let mut ones = 0u32;
        let shots = 100_000u32;
        for t in 0..shots {
            let mut rng = RngStream::for_trial(11, 0, u64::from(t));
            let mut s = StateVector::ground_state(1).unwrap();
            s.apply_single(&Gate2x2::hadamard(), 0).unwrap();
            ones += u32::from(s.measure_and_project(0, &mut rng).unwrap());
        }
        // 3 sigma at p=0.5: 0.5 +- 3*sqrt(0.25/1e5)
        let f = f64::from(ones) / f64::from(shots);
        assert!((f - 0.5).abs() < 3.0 * (0.25f64 / f64::from(shots)).sqrt());
    }

    #[test]
    fn fidelity_examples() {
        let s0 = StateVector::ground_state(1).unwrap();
        let mut s1 = StateVector::ground_state(1).unwrap();
        s1.apply_single(&Gate2x2::pauli_x(), 0).unwrap();
        let mut plus = StateVector::ground_state(1).unwrap();
        plus.apply_single(&Gate2x2::hadamard(), 0).unwrap();

        assert!((s0.fidelity(&s0).unwrap() - 1.0).abs() < 1e-15);
        assert!(s0.fidelity(&s1).unwrap() < 1e-15);
        assert!((s0.fidelity(&plus).unwrap() - 0.5).abs() < 1e-15);
        assert!(s0.fidelity(&StateVector::ground_state(2).unwrap()).is_err());
    }

    #[test]
    fn rng_stream_is_reproducible() {
        let mut a = RngStream::for_trial(42, 3, 1000);
        let mut b = RngStream::for_trial(42, 3, 1000);
        for _ in 0..64 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        let mut c = RngStream::for_trial(42, 3, 1001);
        assert_ne!(a.next_u64(), c.next_u64());
    }

    #[test]
    fn dump_format() {
        let s = StateVector::ground_state(1).unwrap();
        let d = s.dump();
        let first = d.lines().next().unwrap();
        assert!(first.starts_with("0 1.0000000000000000e0"));
        assert_eq!(d.lines().count(), 2);
    }
}
