//! SU(2)-conjugated operator bases.
//!
//! The conjugation `S^A = U X U^dag`, `S^B = U Z U^dag` of the Pauli pair by a
//! single-qubit unitary `U(gamma, theta, phi)` preserves everything stabilizer
//! construction needs: both operators square to identity, they anticommute on
//! one qubit, and two-qubit products of equal-type factors commute across
//! qubits. `S^C = i S^A S^B` completes the error basis.
//!
//! The ground state decomposes in the `S^B` eigenbasis as
//! `|0> = c_plus U|0> + c_minus U|1>` with `c_plus = conj(U00)`,
//! `c_minus = conj(U01)`. Those coefficients are what the initialization
//! protocols turn into logical amplitudes.

use num_complex::Complex64;

use crate::densemat::DenseOp;
use crate::error::AlgebraError;
use crate::statevector::Gate2x2;

const TAU: f64 = 2.0 * std::f64::consts::PI;

/// Rotation angle and axis of the transformation `U`, canonicalized to
/// `gamma in [0, 2pi)`, `theta in [0, pi]`, `phi in [0, 2pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Su2Params {
    pub gamma: f64,
    pub theta: f64,
    pub phi: f64,
}

impl Su2Params {
    pub fn new(gamma: f64, theta: f64, phi: f64) -> Result<Self, AlgebraError> {
        if !(gamma.is_finite() && theta.is_finite() && phi.is_finite()) {
            return Err(AlgebraError::NonFiniteParams { gamma, theta, phi });
        }
        let gamma = gamma.rem_euclid(TAU);
        let mut theta = theta.rem_euclid(TAU);
        let mut phi = phi;
        if theta > std::f64::consts::PI {
            // axis reflection keeps n(theta, phi) fixed
            theta = TAU - theta;
            phi += std::f64::consts::PI;
        }
        let phi = phi.rem_euclid(TAU);
        Ok(Self { gamma, theta, phi })
    }

    /// The Pauli case: `U = I`, so `S^A = X`, `S^B = Z`.
    pub fn pauli() -> Self {
        Self {
            gamma: 0.0,
            theta: 0.0,
            phi: 0.0,
        }
    }

    /// `U = cos(gamma/2) I + i sin(gamma/2) (n . sigma)` with
    /// `n = (sin theta cos phi, sin theta sin phi, cos theta)`.
    pub fn unitary(&self) -> Gate2x2 {
        let half = 0.5 * self.gamma;
        let c = half.cos();
        let s = half.sin();
        let ct = self.theta.cos();
        let st = self.theta.sin();
        let eip = Complex64::from_polar(1.0, self.phi);
        Gate2x2::new(
            Complex64::new(c, s * ct),
            Complex64::new(0.0, s * st) * eip.conj(),
            Complex64::new(0.0, s * st) * eip,
            Complex64::new(c, -s * ct),
        )
    }
}

/// Which of the two stabilizer letters an operator factor carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    /// X-like letter (`S^A`).
    A,
    /// Z-like letter (`S^B`).
    B,
}

impl OperatorKind {
    pub fn opposite(self) -> Self {
        match self {
            OperatorKind::A => OperatorKind::B,
            OperatorKind::B => OperatorKind::A,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            OperatorKind::A => "A",
            OperatorKind::B => "B",
        }
    }
}

/// The operator family generated by one `U`: matrices, eigenvectors, and the
/// ground-state decomposition coefficients.
///
/// Eigenvectors are stored as the columns of `U` (for `S^B`) and the
/// Hadamard-rotated columns (for `S^A`). That construction is analytic and
/// deterministic, and it is the convention under which
/// `|0> = ground_coeff_plus |+>_B + ground_coeff_minus |->_B` holds exactly.
#[derive(Debug, Clone)]
pub struct OperatorBasis {
    pub params: Su2Params,
    pub u: Gate2x2,
    pub s_a: Gate2x2,
    pub s_b: Gate2x2,
    pub s_c: Gate2x2,
    pub eig_a_plus: [Complex64; 2],
    pub eig_a_minus: [Complex64; 2],
    pub eig_b_plus: [Complex64; 2],
    pub eig_b_minus: [Complex64; 2],
    pub ground_coeff_plus: Complex64,
    pub ground_coeff_minus: Complex64,
}

/// Construct the full operator basis from canonical parameters.
pub fn build_basis(params: Su2Params) -> OperatorBasis {
    let u = params.unitary();
    let ud = u.dagger();
    let s_a = u.mul(&Gate2x2::pauli_x()).mul(&ud);
    let s_b = u.mul(&Gate2x2::pauli_z()).mul(&ud);
    let s_c = s_a.mul(&s_b).scaled(Complex64::new(0.0, 1.0));

    let col0 = [u.m[0][0], u.m[1][0]];
    let col1 = [u.m[0][1], u.m[1][1]];
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let plus = [
        (col0[0] + col1[0]) * r,
        (col0[1] + col1[1]) * r,
    ];
    let minus = [
        (col0[0] - col1[0]) * r,
        (col0[1] - col1[1]) * r,
    ];

    OperatorBasis {
        params,
        u,
        s_a,
        s_b,
        s_c,
        eig_a_plus: plus,
        eig_a_minus: minus,
        eig_b_plus: col0,
        eig_b_minus: col1,
        ground_coeff_plus: u.m[0][0].conj(),
        ground_coeff_minus: u.m[0][1].conj(),
    }
}

impl OperatorBasis {
    pub fn op(&self, kind: OperatorKind) -> &Gate2x2 {
        match kind {
            OperatorKind::A => &self.s_a,
            OperatorKind::B => &self.s_b,
        }
    }

    /// Magnitudes and relative phase of the ground-state decomposition:
    /// `(|c_plus|, |c_minus|, arg(c_minus) - arg(c_plus))`.
    pub fn ground_coeff_polar(&self) -> (f64, f64, f64) {
        let c = self.ground_coeff_plus;
        let s = self.ground_coeff_minus;
        let rel = if s.norm() < 1e-15 || c.norm() < 1e-15 {
            0.0
        } else {
            (s.arg() - c.arg()).rem_euclid(TAU)
        };
        (c.norm(), s.norm(), rel)
    }
}

/// Residual table for the algebraic conditions a valid basis must satisfy.
/// `mixed_control` is informational: it is the commutator of the *mismatched*
/// pair `X(x)X` vs `S^B(x)S^B`, which must stay far from zero for gamma away
/// from 0 and pi.
#[derive(Debug, Clone)]
pub struct CommutationReport {
    pub involution_a: f64,
    pub involution_b: f64,
    pub anticommutation: f64,
    pub s_c_product: f64,
    pub cross_commutator: f64,
    pub steane_commutator: f64,
    pub mixed_control: f64,
    pub threshold: f64,
}

impl CommutationReport {
    pub fn pass(&self) -> bool {
        self.involution_a < self.threshold
            && self.involution_b < self.threshold
            && self.anticommutation < self.threshold
            && self.s_c_product < self.threshold
            && self.cross_commutator < self.threshold
            && self.steane_commutator < self.threshold
    }
}

/// Verify on explicit matrices that the basis generates commuting stabilizers:
/// single-qubit involutions and anticommutation, the two-qubit cross
/// commutator `[S^A(x)S^A, S^B(x)S^B]`, and the Steane first-qubit
/// substitution pair `S^A XXX III` vs `S^B ZZZ III` on seven qubits.
pub fn check_cross_qubit_commutation(basis: &OperatorBasis) -> CommutationReport {
    let id = DenseOp::identity(2);
    let a = DenseOp::from_gate(&basis.s_a);
    let b = DenseOp::from_gate(&basis.s_b);
    let c = DenseOp::from_gate(&basis.s_c);
    let x = DenseOp::from_gate(&Gate2x2::pauli_x());
    let z = DenseOp::from_gate(&Gate2x2::pauli_z());

    let involution_a = a.mul(&a).sub(&id).max_norm();
    let involution_b = b.mul(&b).sub(&id).max_norm();
    let anticommutation = a.mul(&b).add(&b.mul(&a)).max_norm();
    let s_c_product = a.mul(&b).scale(Complex64::new(0.0, 1.0)).sub(&c).max_norm();

    let aa = a.kron(&a);
    let bb = b.kron(&b);
    let cross_commutator = aa.commutator(&bb).max_norm();

    // Steane stabilizers with the first qubit substituted: the trailing
    // identity factors cannot change a commutator, so three are kept to match
    // the seven-qubit form without inflating the matrices beyond 2^7.
    let steane_a = a.kron(&x).kron(&x).kron(&x).kron(&id).kron(&id).kron(&id);
    let steane_b = b.kron(&z).kron(&z).kron(&z).kron(&id).kron(&id).kron(&id);
    let steane_commutator = steane_a.commutator(&steane_b).max_norm();

    let xx = x.kron(&x);
    let mixed_control = xx.commutator(&bb).max_norm();

    CommutationReport {
        involution_a,
        involution_b,
        anticommutation,
        s_c_product,
        cross_commutator,
        steane_commutator,
        mixed_control,
        threshold: 1e-10,
    }
}

/// Result of inverting the chain-power map; `ill_conditioned` flags targets
/// whose d-th root amplifies amplitude error (one amplitude below 1e-6).
#[derive(Debug, Clone, Copy)]
pub struct SolveOutcome {
    pub params: Su2Params,
    pub ill_conditioned: bool,
}

/// Find parameters whose ground-state coefficients, raised to the d-th power
/// by the chain post-selection, reproduce the target logical amplitudes:
/// `(c^d, s^d e^{i d phi_rel}) ~ (alpha, beta)` after normalization.
///
/// Returns the solution with `theta = pi/2`, `gamma in [0, pi]`, and the
/// principal-branch relative phase, which makes the output deterministic.
pub fn solve_params_for_target(
    alpha: Complex64,
    beta: Complex64,
    chain_len: usize,
) -> Result<SolveOutcome, AlgebraError> {
    let norm = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
    if norm < 1e-300 {
        return Err(AlgebraError::ZeroTarget);
    }
    let alpha = alpha / norm;
    let beta = beta / norm;
    let d = chain_len.max(1) as f64;
    let ill_conditioned = alpha.norm() < 1e-6 || beta.norm() < 1e-6;

    let root_a = alpha.norm().powf(1.0 / d);
    let root_b = beta.norm().powf(1.0 / d);
    let scale = (root_a * root_a + root_b * root_b).sqrt();
    let r_c = root_a / scale;
    let r_s = root_b / scale;

    let rel_phase = if beta.norm() < 1e-300 || alpha.norm() < 1e-300 {
        0.0
    } else {
        (beta.arg() - alpha.arg()) / d
    };

    // theta = pi/2 makes c_plus = cos(gamma/2) real and
    // c_minus = sin(gamma/2) e^{i(phi - pi/2)}.
    let gamma = 2.0 * r_s.atan2(r_c);
    let phi = rel_phase + std::f64::consts::FRAC_PI_2;
    let params = Su2Params::new(gamma, std::f64::consts::FRAC_PI_2, phi)
        .expect("solved parameters are finite");
    Ok(SolveOutcome {
        params,
        ill_conditioned,
    })
}

/// The conventional non-Clifford target `|A> = (|0> + e^{i pi/4}|1>)/sqrt(2)`.
pub fn target_a_amplitudes() -> (Complex64, Complex64) {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    (
        Complex64::new(r, 0.0),
        Complex64::from_polar(r, std::f64::consts::FRAC_PI_4),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_case_reduces_to_x_and_z() {
        let basis = build_basis(Su2Params::pauli());
        assert!((basis.s_a.sub_norm(&Gate2x2::pauli_x())) < 1e-15);
        assert!((basis.s_b.sub_norm(&Gate2x2::pauli_z())) < 1e-15);
        assert!((basis.ground_coeff_plus - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(basis.ground_coeff_minus.norm() < 1e-15);
    }

    #[test]
    fn z_axis_quarter_turn_example() {
        // gamma = pi/2, theta = 0: U = diag(e^{i pi/4}, e^{-i pi/4}), S^A = -Y.
        let params = Su2Params::new(std::f64::consts::FRAC_PI_2, 0.0, 0.0).unwrap();
        let basis = build_basis(params);
        let e = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        assert!((basis.u.m[0][0] - e).norm() < 1e-15);
        assert!((basis.u.m[1][1] - e.conj()).norm() < 1e-15);
        let minus_y = Gate2x2::pauli_y().scaled(Complex64::new(-1.0, 0.0));
        assert!(basis.s_a.sub_norm(&minus_y) < 1e-12);
        assert!(basis.s_b.sub_norm(&Gate2x2::pauli_z()) < 1e-12);
    }

    #[test]
    fn ground_state_reconstruction() {
        let params = Su2Params::new(1.1, 0.7, 2.9).unwrap();
        let basis = build_basis(params);
        for i in 0..2 {
            let rebuilt = basis.ground_coeff_plus * basis.eig_b_plus[i]
                + basis.ground_coeff_minus * basis.eig_b_minus[i];
            let expect = if i == 0 { 1.0 } else { 0.0 };
            assert!((rebuilt - Complex64::new(expect, 0.0)).norm() < 1e-12);
        }
        let (c, s, _) = basis.ground_coeff_polar();
        assert!((c * c + s * s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigenvectors_satisfy_eigenvalue_equations() {
        let basis = build_basis(Su2Params::new(2.2, 1.9, 0.4).unwrap());
        for (op, vec, sign) in [
            (&basis.s_b, &basis.eig_b_plus, 1.0),
            (&basis.s_b, &basis.eig_b_minus, -1.0),
            (&basis.s_a, &basis.eig_a_plus, 1.0),
            (&basis.s_a, &basis.eig_a_minus, -1.0),
        ] {
            let out = op.apply_to(*vec);
            for i in 0..2 {
                assert!((out[i] - sign * vec[i]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn commutation_report_examples() {
        let basis = build_basis(Su2Params::new(0.9, 1.2, 5.1).unwrap());
        let report = check_cross_qubit_commutation(&basis);
        assert!(report.pass(), "{report:?}");
        assert!(report.cross_commutator < 1e-12);
        assert!(report.steane_commutator < 1e-12);
        // negative control: mismatched pair must not commute for generic gamma
        assert!(report.mixed_control > 1e-3);
    }

    #[test]
    fn solve_for_magic_target_distance_3() {
        let (alpha, beta) = target_a_amplitudes();
        let out = solve_params_for_target(alpha, beta, 3).unwrap();
        assert!(!out.ill_conditioned);
        let basis = build_basis(out.params);
        let (c, s, rel) = basis.ground_coeff_polar();
        assert!((c - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((s - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((rel - std::f64::consts::PI / 12.0).abs() < 1e-12);
    }

    #[test]
    fn solve_identity_and_degenerate_cases() {
        // d=1 equal superposition with no phase: equal coefficients
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let out =
            solve_params_for_target(Complex64::new(r, 0.0), Complex64::new(r, 0.0), 1).unwrap();
        let basis = build_basis(out.params);
        let (c, s, rel) = basis.ground_coeff_polar();
        assert!((c - r).abs() < 1e-12 && (s - r).abs() < 1e-12);
        assert!(rel.min((rel - TAU).abs()) < 1e-12);

        // target |0>_L: coeff_minus must vanish for any d
        let out =
            solve_params_for_target(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), 3).unwrap();
        assert!(out.ill_conditioned);
        let basis = build_basis(out.params);
        assert!(basis.ground_coeff_minus.norm() < 1e-12);
    }

    #[test]
    fn canonicalization() {
        let p = Su2Params::new(-1.0, 4.0, -0.5).unwrap();
        assert!(p.gamma >= 0.0 && p.gamma < TAU);
        assert!(p.theta >= 0.0 && p.theta <= std::f64::consts::PI);
        assert!(p.phi >= 0.0 && p.phi < TAU);
        assert!(Su2Params::new(f64::NAN, 0.0, 0.0).is_err());
        // reflected axis points the same way
        let raw_n = |theta: f64, phi: f64| {
            [
                theta.sin() * phi.cos(),
                theta.sin() * phi.sin(),
                theta.cos(),
            ]
        };
        let n0 = raw_n(4.0, -0.5);
        let n1 = raw_n(p.theta, p.phi);
        for i in 0..3 {
            assert!((n0[i] - n1[i]).abs() < 1e-12);
        }
    }
}
