//! Rotated surface-code geometry.
//!
//! Data qubits sit on a `rows x cols` grid, indexed row-major with qubit
//! `(r, c) = r*cols + c`. Weight-4 tiles fill the bulk on a checkerboard,
//! weight-2 A-type (X-like) tiles close the top/bottom edges and weight-2
//! B-type (Z-like) tiles close the left/right edges. That orientation is
//! forced by the logical chains: the A-chain runs down a column and must
//! overlap every B-type tile on an even number of qubits, and vice versa.
//!
//! For distance 3 the numbering matches the usual figure: qubits 0-2 on the
//! top row, the A-chain on column {0, 3, 6}, the B-chain on row {0, 1, 2}.

use num_complex::Complex64;

use crate::algebra::{OperatorBasis, OperatorKind};
use crate::densemat::DenseOp;
use crate::error::LatticeError;
use crate::statevector::{Gate2x2, RngStream, StateVector};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabilizerTile {
    pub tile_id: usize,
    pub kind: OperatorKind,
    /// Data-qubit indices, ascending; weight 2 or 4.
    pub qubits: Vec<usize>,
}

impl StabilizerTile {
    /// One single-qubit operator factor per tile qubit, in ascending qubit
    /// order (fixed so measurement circuits are bit-exact reproducible).
    pub fn factors(&self, basis: &OperatorBasis) -> Vec<(usize, Gate2x2)> {
        self.qubits.iter().map(|&q| (q, *basis.op(self.kind))).collect()
    }
}

/// A logical operator chain: A-chains are X-like columns, B-chains Z-like rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogicalOperator {
    pub kind: OperatorKind,
    pub qubits: Vec<usize>,
}

impl LogicalOperator {
    pub fn factors(&self, basis: &OperatorBasis) -> Vec<(usize, Gate2x2)> {
        self.qubits.iter().map(|&q| (q, *basis.op(self.kind))).collect()
    }
}

#[derive(Debug, Clone)]
pub struct RotatedSurfaceLayout {
    pub distance: usize,
    pub rows: usize,
    pub cols: usize,
    /// Checkerboard origin: bulk tile at anchor (r, c) is A-type iff
    /// `(r + c + parity)` is odd. The mirror-image variant (parity 1) is what
    /// a patch needs to continue a neighbor's checkerboard across a seam.
    pub parity: usize,
    pub tiles: Vec<StabilizerTile>,
    /// The single reused measurement ancilla, appended after the data qubits.
    pub ancilla_index: usize,
}

impl RotatedSurfaceLayout {
    pub fn data_qubit_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn qubit_at(&self, r: usize, c: usize) -> usize {
        r * self.cols + c
    }

    pub fn tiles_of_kind(&self, kind: OperatorKind) -> impl Iterator<Item = &StabilizerTile> {
        self.tiles.iter().filter(move |t| t.kind == kind)
    }

    /// A-chain representative on column `c` (X-like).
    pub fn a_chain_on_col(&self, c: usize) -> LogicalOperator {
        LogicalOperator {
            kind: OperatorKind::A,
            qubits: (0..self.rows).map(|r| self.qubit_at(r, c)).collect(),
        }
    }

    /// B-chain representative on row `r` (Z-like).
    pub fn b_chain_on_row(&self, r: usize) -> LogicalOperator {
        LogicalOperator {
            kind: OperatorKind::B,
            qubits: (0..self.cols).map(|c| self.qubit_at(r, c)).collect(),
        }
    }

    /// Text dump: one line `tile_id kind q...` per tile (tile_id ascending),
    /// then the two logical chains.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for t in &self.tiles {
            out.push_str(&format!("{} {}", t.tile_id, t.kind.label()));
            for q in &t.qubits {
                out.push_str(&format!(" {q}"));
            }
            out.push('\n');
        }
        let (x_chain, z_chain) = logical_chains(self);
        out.push_str(&format!(
            "X_L{}\n",
            x_chain.qubits.iter().map(|q| format!(" {q}")).collect::<String>()
        ));
        out.push_str(&format!(
            "Z_L{}\n",
            z_chain.qubits.iter().map(|q| format!(" {q}")).collect::<String>()
        ));
        out
    }
}

/// Checkerboard tile set for a `rows x cols` grid. Used for square patches
/// and, with rectangular shapes, for merged-patch validation in surgery.
pub(crate) fn checkerboard_tiles(rows: usize, cols: usize, parity: usize) -> Vec<StabilizerTile> {
    let q = |r: usize, c: usize| r * cols + c;
    let mut a_tiles: Vec<Vec<usize>> = Vec::new();
    let mut b_tiles: Vec<Vec<usize>> = Vec::new();

    for r in 0..rows - 1 {
        for c in 0..cols - 1 {
            let tile = vec![q(r, c), q(r, c + 1), q(r + 1, c), q(r + 1, c + 1)];
            if (r + c + parity) % 2 == 1 {
                a_tiles.push(tile);
            } else {
                b_tiles.push(tile);
            }
        }
    }
    for c in 0..cols - 1 {
        // top edge continues the checkerboard at virtual anchor row -1
        if (c + parity) % 2 == 0 {
            a_tiles.push(vec![q(0, c), q(0, c + 1)]);
        }
        // bottom edge, virtual anchor row rows-1
        if (rows - 1 + c + parity) % 2 == 1 {
            a_tiles.push(vec![q(rows - 1, c), q(rows - 1, c + 1)]);
        }
    }
    for r in 0..rows - 1 {
        // left edge, virtual anchor col -1
        if (r + parity) % 2 == 1 {
            b_tiles.push(vec![q(r, 0), q(r + 1, 0)]);
        }
        // right edge, virtual anchor col cols-1
        if (r + cols - 1 + parity) % 2 == 0 {
            b_tiles.push(vec![q(r, cols - 1), q(r + 1, cols - 1)]);
        }
    }

    let mut tiles = Vec::new();
    for (kind, group) in [(OperatorKind::A, a_tiles), (OperatorKind::B, b_tiles)] {
        let mut group: Vec<Vec<usize>> = group
            .into_iter()
            .map(|mut t| {
                t.sort_unstable();
                t
            })
            .collect();
        group.sort();
        for qubits in group {
            tiles.push(StabilizerTile {
                tile_id: tiles.len(),
                kind,
                qubits,
            });
        }
    }
    tiles
}

pub fn build_layout(distance: usize) -> Result<RotatedSurfaceLayout, LatticeError> {
    build_layout_with_parity(distance, 0)
}

pub fn build_layout_with_parity(
    distance: usize,
    parity: usize,
) -> Result<RotatedSurfaceLayout, LatticeError> {
    if !(2..=4).contains(&distance) {
        return Err(LatticeError::DistanceOutOfRange { distance });
    }
    Ok(RotatedSurfaceLayout {
        distance,
        rows: distance,
        cols: distance,
        parity: parity % 2,
        tiles: checkerboard_tiles(distance, distance, parity % 2),
        ancilla_index: distance * distance,
    })
}

/// The canonical logical chain pair: A-chain on column 0, B-chain on row 0.
pub fn logical_chains(layout: &RotatedSurfaceLayout) -> (LogicalOperator, LogicalOperator) {
    (layout.a_chain_on_col(0), layout.b_chain_on_row(0))
}

/// Initial single-qubit assignment used to predict deterministic tiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QubitInit {
    Ground,
    PlusA,
    PlusB,
    /// Member of the post-selected logical chain (pairwise `S^B S^B = +1`).
    ChainMember,
}

/// Build the noiseless pre-measurement state for an init assignment:
/// product state per qubit, then the chain pairs projected onto +1.
pub fn initial_state_for_spec(
    layout: &RotatedSurfaceLayout,
    init_spec: &[QubitInit],
    basis: &OperatorBasis,
    include_ancilla: bool,
) -> Result<StateVector, LatticeError> {
    let n_data = layout.data_qubit_count();
    assert_eq!(init_spec.len(), n_data, "one init entry per data qubit");
    let chain: Vec<usize> = (0..n_data)
        .filter(|&q| init_spec[q] == QubitInit::ChainMember)
        .collect();
    if !chain.is_empty() {
        let expected = layout.a_chain_on_col(0).qubits;
        if chain != expected {
            return Err(LatticeError::InvalidChainSpec { qubits: chain });
        }
    }

    let n = n_data + usize::from(include_ancilla);
    let ket0 = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let mut factors = vec![ket0; n];
    for q in 0..n_data {
        factors[q] = match init_spec[q] {
            QubitInit::Ground | QubitInit::ChainMember => ket0,
            QubitInit::PlusA => basis.eig_a_plus,
            QubitInit::PlusB => basis.eig_b_plus,
        };
    }
    let mut state = StateVector::product_state(&factors).expect("register within capacity");
    for pair in chain.windows(2) {
        let ops = vec![(pair[0], basis.s_b), (pair[1], basis.s_b)];
        state
            .project_factors_sign(&ops, 1)
            .expect("factors in range");
    }
    Ok(state)
}

/// Every tile whose first-round noiseless measurement outcome is fixed by the
/// initialization, with the expected outcome (+1/-1).
pub fn deterministic_tiles(
    layout: &RotatedSurfaceLayout,
    init_spec: &[QubitInit],
    basis: &OperatorBasis,
) -> Result<Vec<(usize, i8)>, LatticeError> {
    let state = initial_state_for_spec(layout, init_spec, basis, false)?;
    Ok(deterministic_tiles_from_state(layout, &state, basis))
}

/// Deterministic-tile scan against an explicitly prepared pre-measurement
/// state (the state may or may not include the trailing ancilla).
pub fn deterministic_tiles_from_state(
    layout: &RotatedSurfaceLayout,
    state: &StateVector,
    basis: &OperatorBasis,
) -> Vec<(usize, i8)> {
    let mut out = Vec::new();
    for tile in &layout.tiles {
        let mut probe = state.clone();
        let p_plus = probe
            .project_factors_sign(&tile.factors(basis), 1)
            .expect("tile qubits in range");
        if p_plus >= 1.0 - 1e-9 {
            out.push((tile.tile_id, 1));
        } else if p_plus <= 1e-9 {
            out.push((tile.tile_id, -1));
        }
    }
    out
}

/// Structural and numerical layout validation report.
#[derive(Debug, Clone)]
pub struct LayoutReport {
    pub violations: Vec<String>,
}

impl LayoutReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

fn random_state(n: usize, seed: u64) -> StateVector {
    let mut rng = RngStream::from_seed(seed);
    let mut state = StateVector::ground_state(n).unwrap();
    for i in 0..(1usize << n) {
        state.set_amplitude(
            i,
            Complex64::new(rng.next_f64() - 0.5, rng.next_f64() - 0.5),
        );
    }
    state.renormalize();
    state
}

fn statevector_commutation_residual(
    n: usize,
    ops1: &[(usize, Gate2x2)],
    ops2: &[(usize, Gate2x2)],
    anticommute: bool,
) -> f64 {
    let mut worst: f64 = 0.0;
    for seed in [11u64, 12, 13] {
        let base = random_state(n, seed);
        let mut ab = base.clone();
        ab.apply_factors(ops2).unwrap();
        ab.apply_factors(ops1).unwrap();
        let mut ba = base.clone();
        ba.apply_factors(ops1).unwrap();
        ba.apply_factors(ops2).unwrap();
        let sign = if anticommute { 1.0 } else { -1.0 };
        let mut residual = 0.0f64;
        for i in 0..(1usize << n) {
            residual += (ab.amplitude(i) + sign * ba.amplitude(i)).norm_sqr();
        }
        worst = worst.max(residual.sqrt());
    }
    worst
}

/// Check every layout invariant plus numerical commutation of all tile pairs
/// and of tiles against the logical chains. Distance 2 uses explicit dense
/// 16x16 matrices; larger layouts use statevector conjugation on random states.
pub fn validate_layout(layout: &RotatedSurfaceLayout, basis: &OperatorBasis) -> LayoutReport {
    let mut violations = Vec::new();
    let n = layout.data_qubit_count();
    let expected_tiles = n - 1;
    if layout.tiles.len() != expected_tiles {
        violations.push(format!(
            "expected {expected_tiles} tiles, found {}",
            layout.tiles.len()
        ));
    }
    for t in &layout.tiles {
        if !(t.qubits.len() == 2 || t.qubits.len() == 4) {
            violations.push(format!("tile {} has weight {}", t.tile_id, t.qubits.len()));
        }
        let mut sorted = t.qubits.clone();
        sorted.dedup();
        if sorted.len() != t.qubits.len() || t.qubits.iter().any(|&q| q >= n) {
            violations.push(format!("tile {} has invalid qubit set {:?}", t.tile_id, t.qubits));
        }
    }

    for (i, t1) in layout.tiles.iter().enumerate() {
        for t2 in layout.tiles.iter().skip(i + 1) {
            let shared = t1.qubits.iter().filter(|q| t2.qubits.contains(q)).count();
            if t1.kind == t2.kind {
                if shared > 1 {
                    violations.push(format!(
                        "same-type tiles {} and {} share {} qubits",
                        t1.tile_id, t2.tile_id, shared
                    ));
                }
            } else if shared % 2 != 0 {
                violations.push(format!(
                    "distinct-type tiles {} and {} share odd count {}",
                    t1.tile_id, t2.tile_id, shared
                ));
            }
        }
    }

    // boundary orientation: A weight-2 on top/bottom rows, B weight-2 on side columns
    for t in &layout.tiles {
        if t.qubits.len() != 2 {
            continue;
        }
        let coords: Vec<(usize, usize)> = t
            .qubits
            .iter()
            .map(|&q| (q / layout.cols, q % layout.cols))
            .collect();
        match t.kind {
            OperatorKind::A => {
                let row = coords[0].0;
                if coords[1].0 != row || (row != 0 && row != layout.rows - 1) {
                    violations.push(format!("A-type weight-2 tile {} not on top/bottom edge", t.tile_id));
                }
            }
            OperatorKind::B => {
                let col = coords[0].1;
                if coords[1].1 != col || (col != 0 && col != layout.cols - 1) {
                    violations.push(format!("B-type weight-2 tile {} not on side edge", t.tile_id));
                }
            }
        }
    }

    // incidence: every data qubit sits in 1..=2 tiles of each kind
    for q in 0..n {
        for kind in [OperatorKind::A, OperatorKind::B] {
            let count = layout
                .tiles_of_kind(kind)
                .filter(|t| t.qubits.contains(&q))
                .count();
            if !(1..=2).contains(&count) {
                violations.push(format!(
                    "qubit {q} belongs to {count} tiles of kind {}",
                    kind.label()
                ));
            }
        }
    }

    let (x_chain, z_chain) = logical_chains(layout);
    if n <= 4 {
        // exhaustive dense check
        let ops: Vec<(String, DenseOp)> = layout
            .tiles
            .iter()
            .map(|t| (format!("tile {}", t.tile_id), DenseOp::embed_factors(n, &t.factors(basis))))
            .chain([
                ("X_L".to_string(), DenseOp::embed_factors(n, &x_chain.factors(basis))),
                ("Z_L".to_string(), DenseOp::embed_factors(n, &z_chain.factors(basis))),
            ])
            .collect();
        for (i, (name1, op1)) in ops.iter().enumerate() {
            for (name2, op2) in ops.iter().skip(i + 1) {
                let anticommute = name1 == "X_L" && name2 == "Z_L";
                let res = if anticommute {
                    op1.mul(op2).add(&op2.mul(op1)).max_norm()
                } else {
                    op1.commutator(op2).max_norm()
                };
                if res > 1e-10 {
                    violations.push(format!("{name1} vs {name2} residual {res:.3e}"));
                }
            }
        }
    } else {
        let mut ops: Vec<(String, Vec<(usize, Gate2x2)>)> = layout
            .tiles
            .iter()
            .map(|t| (format!("tile {}", t.tile_id), t.factors(basis)))
            .collect();
        ops.push(("X_L".to_string(), x_chain.factors(basis)));
        ops.push(("Z_L".to_string(), z_chain.factors(basis)));
        for (i, (name1, op1)) in ops.iter().enumerate() {
            for (name2, op2) in ops.iter().skip(i + 1) {
                let anticommute = name1 == "X_L" && name2 == "Z_L";
                let res = statevector_commutation_residual(n, op1, op2, anticommute);
                if res > 1e-10 {
                    violations.push(format!("{name1} vs {name2} residual {res:.3e}"));
                }
            }
        }
    }

    LayoutReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{build_basis, Su2Params};

    fn generic_basis() -> OperatorBasis {
        build_basis(Su2Params::new(1.3, 0.8, 2.1).unwrap())
    }

    #[test]
    fn distance_3_matches_reference_figure() {
        let layout = build_layout(3).unwrap();
        assert_eq!(layout.data_qubit_count(), 9);
        let a: Vec<_> = layout.tiles_of_kind(OperatorKind::A).collect();
        let b: Vec<_> = layout.tiles_of_kind(OperatorKind::B).collect();
        assert_eq!(a.len(), 4);
        assert_eq!(b.len(), 4);
        assert_eq!(a.iter().filter(|t| t.qubits.len() == 4).count(), 2);
        assert_eq!(a.iter().filter(|t| t.qubits.len() == 2).count(), 2);
        assert_eq!(b.iter().filter(|t| t.qubits.len() == 4).count(), 2);
        assert_eq!(b.iter().filter(|t| t.qubits.len() == 2).count(), 2);

        let a_sets: Vec<Vec<usize>> = a.iter().map(|t| t.qubits.clone()).collect();
        let b_sets: Vec<Vec<usize>> = b.iter().map(|t| t.qubits.clone()).collect();
        assert!(a_sets.contains(&vec![0, 1]));
        assert!(a_sets.contains(&vec![7, 8]));
        assert!(a_sets.contains(&vec![1, 2, 4, 5]));
        assert!(a_sets.contains(&vec![3, 4, 6, 7]));
        assert!(b_sets.contains(&vec![0, 1, 3, 4]));
        assert!(b_sets.contains(&vec![4, 5, 7, 8]));
        assert!(b_sets.contains(&vec![3, 6]));
        assert!(b_sets.contains(&vec![2, 5]));
    }

    #[test]
    fn chains_match_reference_figure() {
        let layout = build_layout(3).unwrap();
        let (x_chain, z_chain) = logical_chains(&layout);
        // figure labels are 1-based: X_L = {1,4,7}, Z_L = {1,2,3}
        assert_eq!(x_chain.qubits, vec![0, 3, 6]);
        assert_eq!(z_chain.qubits, vec![0, 1, 2]);

        let layout2 = build_layout(2).unwrap();
        assert_eq!(logical_chains(&layout2).0.qubits, vec![0, 2]);
    }

    #[test]
    fn layouts_validate_for_all_distances_and_parities() {
        let basis = generic_basis();
        for d in 2..=4 {
            for parity in 0..=1 {
                let layout = build_layout_with_parity(d, parity).unwrap();
                assert_eq!(layout.tiles.len(), d * d - 1);
                let report = validate_layout(&layout, &basis);
                assert!(report.pass(), "d={d} parity={parity}: {:?}", report.violations);
            }
        }
        assert!(build_layout(5).is_err());
        assert!(build_layout(1).is_err());
    }

    #[test]
    fn corrupted_tile_is_detected() {
        let basis = generic_basis();
        let mut layout = build_layout(3).unwrap();
        // swap one qubit of an A tile for a qubit that breaks even overlap
        let idx = layout
            .tiles
            .iter()
            .position(|t| t.kind == OperatorKind::A && t.qubits == vec![0, 1])
            .unwrap();
        layout.tiles[idx].qubits = vec![0, 5];
        let report = validate_layout(&layout, &basis);
        assert!(!report.pass());
    }

    #[test]
    fn deterministic_tiles_post_selected_chain() {
        let basis = generic_basis();
        let layout = build_layout(3).unwrap();
        let chain = layout.a_chain_on_col(0).qubits;
        let spec: Vec<QubitInit> = (0..9)
            .map(|q| {
                if chain.contains(&q) {
                    QubitInit::ChainMember
                } else {
                    QubitInit::PlusB
                }
            })
            .collect();
        let det = deterministic_tiles(&layout, &spec, &basis).unwrap();
        let b_ids: Vec<usize> = layout.tiles_of_kind(OperatorKind::B).map(|t| t.tile_id).collect();
        assert_eq!(det.len(), 4);
        for (tile_id, outcome) in det {
            assert!(b_ids.contains(&tile_id));
            assert_eq!(outcome, 1);
        }
    }

    #[test]
    fn deterministic_tiles_pauli_ground() {
        // gamma = 0 basis: |0> is the Z eigenstate, every B tile reads +1
        let basis = build_basis(Su2Params::pauli());
        let layout = build_layout(3).unwrap();
        let spec = vec![QubitInit::Ground; 9];
        let det = deterministic_tiles(&layout, &spec, &basis).unwrap();
        let b_count = layout.tiles_of_kind(OperatorKind::B).count();
        assert_eq!(det.len(), b_count);
        assert!(det.iter().all(|&(_, o)| o == 1));
    }

    #[test]
    fn deterministic_tiles_generic_ground_is_empty() {
        let basis = generic_basis();
        let layout = build_layout(3).unwrap();
        let spec = vec![QubitInit::Ground; 9];
        let det = deterministic_tiles(&layout, &spec, &basis).unwrap();
        assert!(det.is_empty(), "{det:?}");
    }

    #[test]
    fn dump_is_stable() {
        let layout = build_layout(2).unwrap();
        let dump = layout.dump();
        let lines: Vec<&str> = dump.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[0].starts_with("0 A"));
        assert!(lines[3].starts_with("X_L"));
    }
}
