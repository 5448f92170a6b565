//! Small dense complex matrices for explicit operator checks (dim <= 2^8).

use num_complex::Complex64;

use crate::statevector::Gate2x2;

#[derive(Debug, Clone)]
pub struct DenseOp {
    pub dim: usize,
    pub data: Vec<Complex64>,
}

impl DenseOp {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_gate(g: &Gate2x2) -> Self {
        Self {
            dim: 2,
            data: vec![g.m[0][0], g.m[0][1], g.m[1][0], g.m[1][1]],
        }
    }

    pub fn at(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.dim + c]
    }

    pub fn mul(&self, rhs: &DenseOp) -> Self {
        assert_eq!(self.dim, rhs.dim);
        let d = self.dim;
        let mut out = Self::zeros(d);
        for r in 0..d {
            for k in 0..d {
                let a = self.data[r * d + k];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for c in 0..d {
                    out.data[r * d + c] += a * rhs.data[k * d + c];
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &DenseOp) -> Self {
        assert_eq!(self.dim, rhs.dim);
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(rhs.data.iter()) {
            *a += b;
        }
        out
    }

    pub fn sub(&self, rhs: &DenseOp) -> Self {
        assert_eq!(self.dim, rhs.dim);
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(rhs.data.iter()) {
            *a -= b;
        }
        out
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        for a in &mut out.data {
            *a *= factor;
        }
        out
    }

    pub fn kron(&self, rhs: &DenseOp) -> Self {
        let d = self.dim * rhs.dim;
        let mut out = Self::zeros(d);
        for r1 in 0..self.dim {
            for c1 in 0..self.dim {
                let a = self.at(r1, c1);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for r2 in 0..rhs.dim {
                    for c2 in 0..rhs.dim {
                        out.data[(r1 * rhs.dim + r2) * d + (c1 * rhs.dim + c2)] =
                            a * rhs.at(r2, c2);
                    }
                }
            }
        }
        out
    }

    pub fn commutator(&self, rhs: &DenseOp) -> Self {
        self.mul(rhs).sub(&rhs.mul(self))
    }

    pub fn max_norm(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// Operator embedded on `n` qubits with little-endian qubit order:
    /// factor for qubit `q` acts on bit `q` of the index.
    pub fn embed_factors(n: usize, factors: &[(usize, Gate2x2)]) -> Self {
        let mut per_qubit = vec![None; n];
        for (q, g) in factors {
            per_qubit[*q] = Some(*g);
        }
        // index bit 0 is qubit 0, so qubit n-1 is the leftmost kron factor
        let mut out = DenseOp::identity(1);
        for q in (0..n).rev() {
            let f = match &per_qubit[q] {
                Some(g) => DenseOp::from_gate(g),
                None => DenseOp::identity(2),
            };
            out = out.kron(&f);
        }
        out
    }
}

impl Gate2x2 {
    /// Max-entry norm of the difference, for closeness assertions.
    pub fn sub_norm(&self, rhs: &Gate2x2) -> f64 {
        let mut r: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                r = r.max((self.m[i][j] - rhs.m[i][j]).norm());
            }
        }
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_and_embed_agree() {
        let x = Gate2x2::pauli_x();
        let z = Gate2x2::pauli_z();
        // X on qubit 0, Z on qubit 1 of a 2-qubit register: index = q1 q0
        let emb = DenseOp::embed_factors(2, &[(0, x), (1, z)]);
        let direct = DenseOp::from_gate(&z).kron(&DenseOp::from_gate(&x));
        assert!(emb.sub(&direct).max_norm() < 1e-15);
    }

    #[test]
    fn pauli_commutators() {
        let x = DenseOp::from_gate(&Gate2x2::pauli_x());
        let z = DenseOp::from_gate(&Gate2x2::pauli_z());
        assert!(x.commutator(&x).max_norm() < 1e-15);
        assert!(x.commutator(&z).max_norm() > 1.9);
        let xx = x.kron(&x);
        let zz = z.kron(&z);
        assert!(xx.commutator(&zz).max_norm() < 1e-15);
    }
}
