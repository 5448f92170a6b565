//! Hybrid lattice surgery between a Pauli patch and a conjugated-basis patch.
//!
//! Merging measures the seam stabilizers that knit two patches into one
//! rotated code. A rough merge places the patches side by side and measures
//! the joint `X_L (x) X_L`; a smooth merge stacks them and measures
//! `Z_L (x) Z_L`. Seam tiles straddle the facing boundary columns/rows with
//! `X`/`Z` letters on Pauli-patch qubits and `S^A`/`S^B` letters on
//! conjugated-patch qubits. The product of the joint-type seam tiles equals
//! the joint logical operator built from the seam-adjacent chain
//! representatives, exactly; the off-type straddling tiles are byproduct
//! stabilizers (products of the two dropped facing boundary tiles) and read
//! +1 deterministically on noiseless input.
//!
//! Splitting re-measures each patch's own tiles. The formerly dropped
//! boundary tiles come back with random signs; a correction operator found by
//! a small symplectic solve returns the patches to their code spaces without
//! touching the surviving logical algebra.

use num_complex::Complex64;

use crate::algebra::{OperatorBasis, OperatorKind};
use crate::error::SurgeryError;
use crate::lattice::{build_layout_with_parity, checkerboard_tiles, RotatedSurfaceLayout};
use crate::measurement::measure_tile_operator;
use crate::noise::NoiseChannel;
use crate::statevector::{Gate2x2, RngStream, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    /// Side-by-side merge measuring `X_L (x) X_L`.
    Rough,
    /// Stacked merge measuring `Z_L (x) Z_L`.
    Smooth,
}

impl BoundaryKind {
    /// The letter whose seam tiles multiply to the joint logical operator.
    pub fn joint_kind(self) -> OperatorKind {
        match self {
            BoundaryKind::Rough => OperatorKind::A,
            BoundaryKind::Smooth => OperatorKind::B,
        }
    }
}

/// A stabilizer acting on qubits of both patches: `kind`-letters of the first
/// patch's basis on `qubits_p`, of the second patch's basis on `qubits_q`.
/// Qubit indices are global register indices.
#[derive(Debug, Clone)]
pub struct SeamTile {
    pub kind: OperatorKind,
    pub qubits_p: Vec<usize>,
    pub qubits_q: Vec<usize>,
}

impl SeamTile {
    pub fn factors(
        &self,
        basis_p: &OperatorBasis,
        basis_q: &OperatorBasis,
    ) -> Vec<(usize, Gate2x2)> {
        let mut out: Vec<(usize, Gate2x2)> = self
            .qubits_p
            .iter()
            .map(|&q| (q, *basis_p.op(self.kind)))
            .chain(self.qubits_q.iter().map(|&q| (q, *basis_q.op(self.kind))))
            .collect();
        out.sort_by_key(|(q, _)| *q);
        out
    }

    pub fn all_qubits(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .qubits_p
            .iter()
            .chain(self.qubits_q.iter())
            .copied()
            .collect();
        v.sort_unstable();
        v
    }
}

/// Two patches merged along one boundary, with the seam tiling, the dropped
/// facing boundary tiles, and the seam-adjacent logical representatives whose
/// product the joint-type seam tiles reproduce exactly.
#[derive(Debug, Clone)]
pub struct MergedLayout {
    pub distance: usize,
    pub boundary: BoundaryKind,
    pub patch_p: RotatedSurfaceLayout,
    pub offset_p: usize,
    pub patch_q: RotatedSurfaceLayout,
    pub offset_q: usize,
    pub seam_tiles: Vec<SeamTile>,
    /// tile_ids of patch P tiles absorbed by the merge (not merged-code
    /// stabilizers while the seam is measured).
    pub dropped_p: Vec<usize>,
    pub dropped_q: Vec<usize>,
    /// Joint logical representative on P (global qubits, joint-kind letters).
    pub rep_p: Vec<usize>,
    pub rep_q: Vec<usize>,
    /// Shared measurement ancilla for seam and split circuits.
    pub ancilla: usize,
}

#[derive(Debug, Clone)]
pub struct MergeOutcome {
    /// Joint logical measurement bit: 0 for +1, 1 for -1. `(-1)^m` is the
    /// product of the joint-kind seam outcomes.
    pub m: u8,
    /// Majority-voted value per seam tile, in seam order.
    pub seam_outcomes: Vec<i8>,
    pub rounds: u32,
    /// Stabilizer-frame letters applied to move the seam gauge to the
    /// canonical sector (all seam tiles +1 except the first joint-kind tile,
    /// which carries (-1)^m).
    pub gauge_correction: Vec<(usize, OperatorKind)>,
}

fn sym_vec(factors: &[(usize, OperatorKind)]) -> (u64, u64) {
    let mut x = 0u64;
    let mut z = 0u64;
    for &(q, kind) in factors {
        match kind {
            OperatorKind::A => x ^= 1u64 << q,
            OperatorKind::B => z ^= 1u64 << q,
        }
    }
    (x, z)
}

fn anticommute(a: (u64, u64), b: (u64, u64)) -> bool {
    ((a.0 & b.1).count_ones() + (a.1 & b.0).count_ones()) % 2 == 1
}

fn tile_sym(qubits: &[usize], kind: OperatorKind, offset: usize) -> (u64, u64) {
    let factors: Vec<(usize, OperatorKind)> =
        qubits.iter().map(|&q| (q + offset, kind)).collect();
    sym_vec(&factors)
}

fn seam_sym(tile: &SeamTile) -> (u64, u64) {
    let factors: Vec<(usize, OperatorKind)> = tile
        .qubits_p
        .iter()
        .chain(tile.qubits_q.iter())
        .map(|&q| (q, tile.kind))
        .collect();
    sym_vec(&factors)
}

/// Construct the merge of two distance-d patches. The first patch keeps
/// checkerboard parity 0; the second takes parity `d mod 2` so both continue
/// the merged lattice's checkerboard. The construction is validated
/// programmatically (tile matching, commutation, seam product, stabilizer
/// count) before being returned.
pub fn build_merged_pair(
    distance: usize,
    boundary: BoundaryKind,
    offset_p: usize,
    offset_q: usize,
    ancilla: usize,
) -> Result<MergedLayout, SurgeryError> {
    let d = distance;
    let patch_p = build_layout_with_parity(d, 0)?;
    let patch_q = build_layout_with_parity(d, d % 2)?;

    // merged checkerboard on the joined grid; map grid coords to global indices
    let (rows, cols) = match boundary {
        BoundaryKind::Rough => (d, 2 * d),
        BoundaryKind::Smooth => (2 * d, d),
    };
    let grid_to_global = |grid_q: usize| -> (usize, bool) {
        let (r, c) = (grid_q / cols, grid_q % cols);
        match boundary {
            BoundaryKind::Rough => {
                if c < d {
                    (offset_p + r * d + c, false)
                } else {
                    (offset_q + r * d + (c - d), true)
                }
            }
            BoundaryKind::Smooth => {
                if r < d {
                    (offset_p + r * d + c, false)
                } else {
                    (offset_q + (r - d) * d + c, true)
                }
            }
        }
    };

    let mut seam_tiles = Vec::new();
    let mut inside_p: Vec<(OperatorKind, Vec<usize>)> = Vec::new();
    let mut inside_q: Vec<(OperatorKind, Vec<usize>)> = Vec::new();
    for tile in checkerboard_tiles(rows, cols, 0) {
        let mapped: Vec<(usize, bool)> = tile.qubits.iter().map(|&g| grid_to_global(g)).collect();
        let in_q = mapped.iter().filter(|(_, q_side)| *q_side).count();
        if in_q == 0 {
            let mut qs: Vec<usize> = mapped.iter().map(|(g, _)| g - offset_p).collect();
            qs.sort_unstable();
            inside_p.push((tile.kind, qs));
        } else if in_q == mapped.len() {
            let mut qs: Vec<usize> = mapped.iter().map(|(g, _)| g - offset_q).collect();
            qs.sort_unstable();
            inside_q.push((tile.kind, qs));
        } else {
            let mut qubits_p: Vec<usize> =
                mapped.iter().filter(|(_, s)| !s).map(|(g, _)| *g).collect();
            let mut qubits_q: Vec<usize> =
                mapped.iter().filter(|(_, s)| *s).map(|(g, _)| *g).collect();
            qubits_p.sort_unstable();
            qubits_q.sort_unstable();
            seam_tiles.push(SeamTile {
                kind: tile.kind,
                qubits_p,
                qubits_q,
            });
        }
    }
    seam_tiles.sort_by_key(|t| (t.kind == OperatorKind::B, t.all_qubits()));

    // every interior merged tile must be a patch tile; the rest are dropped
    let match_tiles = |layout: &RotatedSurfaceLayout,
                       inside: &[(OperatorKind, Vec<usize>)]|
     -> Result<Vec<usize>, SurgeryError> {
        for (kind, qs) in inside {
            if !layout
                .tiles
                .iter()
                .any(|t| t.kind == *kind && t.qubits == *qs)
            {
                return Err(SurgeryError::SeamConstruction {
                    distance: d,
                    detail: format!("merged interior tile {kind:?} {qs:?} not a patch tile"),
                });
            }
        }
        Ok(layout
            .tiles
            .iter()
            .filter(|t| !inside.iter().any(|(k, qs)| t.kind == *k && t.qubits == *qs))
            .map(|t| t.tile_id)
            .collect())
    };
    let dropped_p = match_tiles(&patch_p, &inside_p)?;
    let dropped_q = match_tiles(&patch_q, &inside_q)?;

    // independent stabilizer count of the merged code
    let retained = inside_p.len() + inside_q.len() + seam_tiles.len();
    if retained != 2 * d * d - 1 {
        return Err(SurgeryError::SeamConstruction {
            distance: d,
            detail: format!("merged stabilizer count {retained} != {}", 2 * d * d - 1),
        });
    }

    // seam-adjacent logical representatives
    let (rep_p, rep_q): (Vec<usize>, Vec<usize>) = match boundary {
        BoundaryKind::Rough => (
            patch_p
                .a_chain_on_col(d - 1)
                .qubits
                .iter()
                .map(|&q| q + offset_p)
                .collect(),
            patch_q
                .a_chain_on_col(0)
                .qubits
                .iter()
                .map(|&q| q + offset_q)
                .collect(),
        ),
        BoundaryKind::Smooth => (
            patch_p
                .b_chain_on_row(d - 1)
                .qubits
                .iter()
                .map(|&q| q + offset_p)
                .collect(),
            patch_q
                .b_chain_on_row(0)
                .qubits
                .iter()
                .map(|&q| q + offset_q)
                .collect(),
        ),
    };

    let merged = MergedLayout {
        distance: d,
        boundary,
        patch_p,
        offset_p,
        patch_q,
        offset_q,
        seam_tiles,
        dropped_p,
        dropped_q,
        rep_p,
        rep_q,
        ancilla,
    };
    validate_merged(&merged)?;
    Ok(merged)
}

/// Standard hybrid arrangement: P at offset 0, Q at offset d^2, one shared
/// ancilla at 2d^2. Distances 2 and 3 fit the simulation budget.
pub fn build_merged_layout(
    distance: usize,
    boundary: BoundaryKind,
) -> Result<MergedLayout, SurgeryError> {
    if !(2..=3).contains(&distance) {
        return Err(SurgeryError::SeamConstruction {
            distance,
            detail: "merged register exceeds the simulation budget".to_string(),
        });
    }
    build_merged_pair(
        distance,
        boundary,
        0,
        distance * distance,
        2 * distance * distance,
    )
}

impl MergedLayout {
    pub fn register_qubits(&self) -> usize {
        self.ancilla + 1
    }

    /// `(qubit, kind)` letter list of the joint logical operator
    /// `rep_p (x) rep_q`.
    pub fn joint_letters(&self) -> Vec<(usize, OperatorKind)> {
        let kind = self.boundary.joint_kind();
        self.rep_p
            .iter()
            .chain(self.rep_q.iter())
            .map(|&q| (q, kind))
            .collect()
    }

    pub fn joint_factors(
        &self,
        basis_p: &OperatorBasis,
        basis_q: &OperatorBasis,
    ) -> Vec<(usize, Gate2x2)> {
        let kind = self.boundary.joint_kind();
        let mut out: Vec<(usize, Gate2x2)> = self
            .rep_p
            .iter()
            .map(|&q| (q, *basis_p.op(kind)))
            .chain(self.rep_q.iter().map(|&q| (q, *basis_q.op(kind))))
            .collect();
        out.sort_by_key(|(q, _)| *q);
        out
    }

    /// Desired seam-tile signs of the canonical gauge sector for outcome `m`.
    pub fn canonical_seam_signs(&self, m: u8) -> Vec<i8> {
        let first_joint = self
            .seam_tiles
            .iter()
            .position(|t| t.kind == self.boundary.joint_kind())
            .expect("seam has a joint-kind tile");
        self.seam_tiles
            .iter()
            .enumerate()
            .map(|(i, _)| {
                if i == first_joint && m == 1 {
                    -1
                } else {
                    1
                }
            })
            .collect()
    }

    /// Logical representatives surviving this merge: the joint-kind chains of
    /// each patch and the opposite-kind joint product.
    fn preserved_logicals(&self) -> [(u64, u64); 3] {
        let joint_kind = self.boundary.joint_kind();
        let other_kind = joint_kind.opposite();
        let rep = |layout: &RotatedSurfaceLayout, offset: usize, kind: OperatorKind| -> (u64, u64) {
            let chain = match kind {
                OperatorKind::A => layout.a_chain_on_col(0).qubits,
                OperatorKind::B => layout.b_chain_on_row(0).qubits,
            };
            tile_sym(&chain, kind, offset)
        };
        let same_p = rep(&self.patch_p, self.offset_p, joint_kind);
        let same_q = rep(&self.patch_q, self.offset_q, joint_kind);
        let other_p = rep(&self.patch_p, self.offset_p, other_kind);
        let other_q = rep(&self.patch_q, self.offset_q, other_kind);
        [same_p, same_q, (other_p.0 ^ other_q.0, other_p.1 ^ other_q.1)]
    }

    fn correction_qubits(&self) -> Vec<usize> {
        (0..self.patch_p.data_qubit_count())
            .map(|q| q + self.offset_p)
            .chain((0..self.patch_q.data_qubit_count()).map(|q| q + self.offset_q))
            .collect()
    }

    fn retained_syms(&self) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        for t in &self.patch_p.tiles {
            if !self.dropped_p.contains(&t.tile_id) {
                out.push(tile_sym(&t.qubits, t.kind, self.offset_p));
            }
        }
        for t in &self.patch_q.tiles {
            if !self.dropped_q.contains(&t.tile_id) {
                out.push(tile_sym(&t.qubits, t.kind, self.offset_q));
            }
        }
        out
    }
}

fn validate_merged(merged: &MergedLayout) -> Result<(), SurgeryError> {
    let fail = |detail: String| SurgeryError::SeamConstruction {
        distance: merged.distance,
        detail,
    };
    let retained = merged.retained_syms();
    let seams: Vec<(u64, u64)> = merged.seam_tiles.iter().map(seam_sym).collect();

    // every seam tile commutes with every retained tile and every other seam tile
    for (i, s) in seams.iter().enumerate() {
        for r in &retained {
            if anticommute(*s, *r) {
                return Err(fail(format!(
                    "seam tile {i} anticommutes with a retained tile"
                )));
            }
        }
        for (j, s2) in seams.iter().enumerate().skip(i + 1) {
            if anticommute(*s, *s2) {
                return Err(fail(format!("seam tiles {i} and {j} anticommute")));
            }
        }
    }

    // joint-kind seam product must cover rep_p + rep_q exactly once each
    let mut coverage: Vec<usize> = Vec::new();
    for tile in &merged.seam_tiles {
        if tile.kind == merged.boundary.joint_kind() {
            coverage.extend(tile.all_qubits());
        }
    }
    coverage.sort_unstable();
    let mut expected: Vec<usize> = merged
        .rep_p
        .iter()
        .chain(merged.rep_q.iter())
        .copied()
        .collect();
    expected.sort_unstable();
    if coverage != expected {
        return Err(fail(format!(
            "joint seam product covers {coverage:?}, expected {expected:?}"
        )));
    }

    // the joint operator commutes with everything retained and with the seam
    let joint = sym_vec(&merged.joint_letters());
    for op in retained.iter().chain(seams.iter()) {
        if anticommute(joint, *op) {
            return Err(fail(
                "joint logical anticommutes with a merged stabilizer".to_string(),
            ));
        }
    }

    // each dropped tile must conflict with the seam (dropping was forced)
    for (layout, offset, dropped) in [
        (&merged.patch_p, merged.offset_p, &merged.dropped_p),
        (&merged.patch_q, merged.offset_q, &merged.dropped_q),
    ] {
        for &tid in dropped.iter() {
            let t = &layout.tiles[tid];
            let sym = tile_sym(&t.qubits, t.kind, offset);
            if !seams.iter().any(|s| anticommute(sym, *s)) {
                return Err(fail(format!(
                    "dropped tile {tid} commutes with the whole seam"
                )));
            }
        }
    }
    Ok(())
}

/// Measure every seam tile `rounds` times (majority vote per tile, one
/// tie-break round if an even split occurs) and extract the joint logical
/// bit from the product of the joint-kind majorities.
pub fn merge_measure(
    state: &mut StateVector,
    merged: &MergedLayout,
    basis_p: &OperatorBasis,
    basis_q: &OperatorBasis,
    noise: &NoiseChannel,
    rng: &mut RngStream,
    rounds: u32,
) -> Result<MergeOutcome, SurgeryError> {
    let ancilla = merged.ancilla;
    let rounds = rounds.max(1);
    let mut seam_outcomes = Vec::with_capacity(merged.seam_tiles.len());
    let mut tally = 0u32;
    for tile in &merged.seam_tiles {
        let factors = tile.factors(basis_p, basis_q);
        let mut votes = 0i32;
        for _ in 0..rounds {
            let o =
                measure_tile_operator(state, &factors, noise, basis_q, rng, ancilla, &mut tally)?;
            votes += i32::from(o);
        }
        if votes == 0 {
            let o =
                measure_tile_operator(state, &factors, noise, basis_q, rng, ancilla, &mut tally)?;
            votes += i32::from(o);
        }
        seam_outcomes.push(if votes > 0 { 1 } else { -1 });
    }
    let mut product = 1i8;
    for (tile, outcome) in merged.seam_tiles.iter().zip(seam_outcomes.iter()) {
        if tile.kind == merged.boundary.joint_kind() {
            product *= outcome;
        }
    }
    let m = u8::from(product < 0);

    // move the seam gauge into the canonical sector for this m
    let desired = merged.canonical_seam_signs(m);
    let gauge_correction = if seam_outcomes == desired {
        Vec::new()
    } else {
        let mut constraints: Vec<((u64, u64), bool)> = merged
            .seam_tiles
            .iter()
            .zip(seam_outcomes.iter().zip(desired.iter()))
            .map(|(tile, (got, want))| (seam_sym(tile), got != want))
            .collect();
        for sym in merged.retained_syms() {
            constraints.push((sym, false));
        }
        for sym in merged.preserved_logicals() {
            constraints.push((sym, false));
        }
        let correction = solve_correction(&constraints, &merged.correction_qubits()).ok_or(
            SurgeryError::NoSplitCorrection {
                violated: Vec::new(),
            },
        )?;
        apply_correction(state, merged, basis_p, basis_q, &correction)?;
        correction
    };
    Ok(MergeOutcome {
        m,
        seam_outcomes,
        rounds,
        gauge_correction,
    })
}

/// Which layout, where in the register, which basis, and which logical
/// amplitudes a patch carries.
pub struct PatchState<'a> {
    pub layout: &'a RotatedSurfaceLayout,
    pub offset: usize,
    pub basis: &'a OperatorBasis,
    pub amplitudes: (Complex64, Complex64),
}

/// Build the product of patch codeword states on an `n`-qubit register
/// (remaining qubits in |0>): each patch carries `a |0>_L + b |1>_L` with
/// `|0>_L` the A-tile-projected all-`|+>_B` state and `|1>_L = X_L |0>_L` on
/// the canonical chain.
pub fn embed_patches(n: usize, patches: &[PatchState<'_>]) -> Result<StateVector, SurgeryError> {
    let ket0 = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let mut factors = vec![ket0; n];
    for p in patches {
        for q in 0..p.layout.data_qubit_count() {
            factors[p.offset + q] = p.basis.eig_b_plus;
        }
    }
    let mut state = StateVector::product_state(&factors).map_err(SurgeryError::Engine)?;
    for p in patches {
        for tile in p.layout.tiles_of_kind(OperatorKind::A) {
            let tile_factors: Vec<(usize, Gate2x2)> = tile
                .qubits
                .iter()
                .map(|&q| (q + p.offset, p.basis.s_a))
                .collect();
            state
                .project_factors_sign(&tile_factors, 1)
                .map_err(SurgeryError::Engine)?;
        }
    }
    // every patch now sits in |0>_L; superpose the requested amplitudes
    for p in patches {
        let chain: Vec<(usize, Gate2x2)> = p
            .layout
            .a_chain_on_col(0)
            .qubits
            .iter()
            .map(|&q| (q + p.offset, p.basis.s_a))
            .collect();
        let mut flipped = state.clone();
        flipped.apply_factors(&chain).map_err(SurgeryError::Engine)?;
        let (a, b) = p.amplitudes;
        let mut combined = state.clone();
        for i in 0..combined.amplitudes().len() {
            combined.set_amplitude(i, a * state.amplitude(i) + b * flipped.amplitude(i));
        }
        combined.renormalize();
        state = combined;
    }
    Ok(state)
}

/// The analytic post-merge state `Pi_m (|psi_P> (x) |psi_Q>)`: the `(-1)^m`
/// eigenspace projection of the joint logical operator.
pub fn merged_state_reference(
    merged: &MergedLayout,
    basis_p: &OperatorBasis,
    basis_q: &OperatorBasis,
    amps_p: (Complex64, Complex64),
    amps_q: (Complex64, Complex64),
    m: u8,
) -> Result<StateVector, SurgeryError> {
    let n = merged.register_qubits();
    let mut state = embed_patches(
        n,
        &[
            PatchState {
                layout: &merged.patch_p,
                offset: merged.offset_p,
                basis: basis_p,
                amplitudes: amps_p,
            },
            PatchState {
                layout: &merged.patch_q,
                offset: merged.offset_q,
                basis: basis_q,
                amplitudes: amps_q,
            },
        ],
    )?;
    for (tile, sign) in merged
        .seam_tiles
        .iter()
        .zip(merged.canonical_seam_signs(m).iter())
    {
        state
            .project_factors_sign(&tile.factors(basis_p, basis_q), *sign)
            .map_err(SurgeryError::Engine)?;
    }
    Ok(state)
}

/// GF(2) solve for a correction operator: one x/z variable pair per data
/// qubit of the two patches; each row demands anticommutation with a violated
/// tile or commutation with a healthy tile / preserved logical.
fn solve_correction(
    constraints: &[((u64, u64), bool)],
    qubits: &[usize],
) -> Option<Vec<(usize, OperatorKind)>> {
    let vars: Vec<(usize, OperatorKind)> = qubits
        .iter()
        .flat_map(|&q| [(q, OperatorKind::A), (q, OperatorKind::B)])
        .collect();
    let ncols = vars.len();
    let mut rows: Vec<(u128, bool)> = Vec::with_capacity(constraints.len());
    for ((tx, tz), rhs) in constraints {
        let mut row = 0u128;
        for (col, &(q, kind)) in vars.iter().enumerate() {
            // sym(w, T) picks up w.x & T.z and w.z & T.x
            let bit = match kind {
                OperatorKind::A => (tz >> q) & 1,
                OperatorKind::B => (tx >> q) & 1,
            };
            if bit == 1 {
                row |= 1u128 << col;
            }
        }
        rows.push((row, *rhs));
    }

    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut r = 0usize;
    for col in 0..ncols {
        if let Some(pivot) = (r..rows.len()).find(|&i| rows[i].0 >> col & 1 == 1) {
            rows.swap(r, pivot);
            let (prow, prhs) = rows[r];
            for (i, row) in rows.iter_mut().enumerate() {
                if i != r && row.0 >> col & 1 == 1 {
                    row.0 ^= prow;
                    row.1 ^= prhs;
                }
            }
            pivots.push((r, col));
            r += 1;
        }
    }
    if rows.iter().any(|(row, rhs)| *row == 0 && *rhs) {
        return None;
    }
    let mut solution = vec![false; ncols];
    for &(row, col) in &pivots {
        solution[col] = rows[row].1;
    }
    Some(
        vars.iter()
            .zip(solution.iter())
            .filter(|(_, &on)| on)
            .map(|(&v, _)| v)
            .collect(),
    )
}

#[derive(Debug, Clone)]
pub struct SplitOutcome {
    /// Tile outcomes for patch P then patch Q, in tile_id order.
    pub outcomes_p: Vec<i8>,
    pub outcomes_q: Vec<i8>,
    /// Correction letters applied (global qubit, kind).
    pub correction: Vec<(usize, OperatorKind)>,
}

/// Stop measuring the seam and re-project both patches into their own code
/// spaces: measure every patch tile once, then fix any violated (formerly
/// dropped) tiles with a solved correction that preserves the surviving
/// logical algebra.
pub fn split_patches(
    state: &mut StateVector,
    merged: &MergedLayout,
    basis_p: &OperatorBasis,
    basis_q: &OperatorBasis,
    noise: &NoiseChannel,
    rng: &mut RngStream,
) -> Result<SplitOutcome, SurgeryError> {
    let ancilla = merged.ancilla;
    let mut tally = 0u32;
    let mut outcomes_p = Vec::new();
    let mut outcomes_q = Vec::new();

    for (layout, offset, basis, outcomes) in [
        (&merged.patch_p, merged.offset_p, basis_p, &mut outcomes_p),
        (&merged.patch_q, merged.offset_q, basis_q, &mut outcomes_q),
    ] {
        for tile in &layout.tiles {
            let factors: Vec<(usize, Gate2x2)> = tile
                .qubits
                .iter()
                .map(|&q| (q + offset, *basis.op(tile.kind)))
                .collect();
            let o =
                measure_tile_operator(state, &factors, noise, basis_q, rng, ancilla, &mut tally)?;
            outcomes.push(o);
        }
    }

    let correction = split_corrections(merged, &outcomes_p, &outcomes_q)?;
    apply_correction(state, merged, basis_p, basis_q, &correction)?;

    Ok(SplitOutcome {
        outcomes_p,
        outcomes_q,
        correction,
    })
}

/// The correction fixing a split's violated tiles: anticommutes exactly with
/// the -1 tiles, commutes with the healthy ones and with the surviving
/// logical algebra (same-type representatives of each patch, opposite-type
/// joint representative).
pub fn split_corrections(
    merged: &MergedLayout,
    outcomes_p: &[i8],
    outcomes_q: &[i8],
) -> Result<Vec<(usize, OperatorKind)>, SurgeryError> {
    if outcomes_p.iter().chain(outcomes_q.iter()).all(|&o| o == 1) {
        return Ok(Vec::new());
    }
    let mut constraints: Vec<((u64, u64), bool)> = Vec::new();
    for (layout, offset, outcomes) in [
        (&merged.patch_p, merged.offset_p, outcomes_p),
        (&merged.patch_q, merged.offset_q, outcomes_q),
    ] {
        for (tile, &o) in layout.tiles.iter().zip(outcomes.iter()) {
            constraints.push((tile_sym(&tile.qubits, tile.kind, offset), o == -1));
        }
    }
    for sym in merged.preserved_logicals() {
        constraints.push((sym, false));
    }

    let qubits = merged.correction_qubits();
    let violated: Vec<usize> = constraints
        .iter()
        .enumerate()
        .filter(|(_, (_, v))| *v)
        .map(|(i, _)| i)
        .collect();
    solve_correction(&constraints, &qubits).ok_or(SurgeryError::NoSplitCorrection { violated })
}

fn apply_correction(
    state: &mut StateVector,
    merged: &MergedLayout,
    basis_p: &OperatorBasis,
    basis_q: &OperatorBasis,
    correction: &[(usize, OperatorKind)],
) -> Result<(), SurgeryError> {
    for &(q, kind) in correction {
        let on_q = q >= merged.offset_q && q < merged.offset_q + merged.patch_q.data_qubit_count();
        let basis = if on_q { basis_q } else { basis_p };
        state
            .apply_single(basis.op(kind), q)
            .map_err(SurgeryError::Engine)?;
    }
    Ok(())
}

/// Record of one sampled logical CNOT run.
#[derive(Debug, Clone)]
pub struct CnotRun {
    pub state: StateVector,
    /// Bits of the three logical measurements: `Z_L^P Z_L^R`, `X_L^R X_L^Q`,
    /// and the final `Z_L^R` readout.
    pub m1: u8,
    pub m2: u8,
    pub m3: u8,
    pub split1: SplitOutcome,
    pub split2: SplitOutcome,
    pub fidelity_to_ideal: f64,
}

struct CnotSetup {
    basis_pauli: OperatorBasis,
    basis_q: OperatorBasis,
    merge_pr: MergedLayout,
    merge_rq: MergedLayout,
    zr_factors: Vec<(usize, Gate2x2)>,
}

const CNOT_QUBITS: usize = 13;
const CNOT_ANCILLA: usize = 12;
const OFF_P: usize = 0;
const OFF_R: usize = 4;
const OFF_Q: usize = 8;

fn cnot_setup(params_q: crate::algebra::Su2Params) -> Result<CnotSetup, SurgeryError> {
    let basis_pauli = crate::algebra::build_basis(crate::algebra::Su2Params::pauli());
    let basis_q = crate::algebra::build_basis(params_q);
    // smooth parity measurement Z_L^P Z_L^R, then rough X_L^R X_L^Q
    let merge_pr = build_merged_pair(2, BoundaryKind::Smooth, OFF_P, OFF_R, CNOT_ANCILLA)?;
    let merge_rq = build_merged_pair(2, BoundaryKind::Rough, OFF_R, OFF_Q, CNOT_ANCILLA)?;
    let zr_factors: Vec<(usize, Gate2x2)> = merge_pr
        .patch_q
        .b_chain_on_row(0)
        .qubits
        .iter()
        .map(|&q| (q + OFF_R, basis_pauli.s_b))
        .collect();
    Ok(CnotSetup {
        basis_pauli,
        basis_q,
        merge_pr,
        merge_rq,
        zr_factors,
    })
}

fn cnot_initial_state(
    setup: &CnotSetup,
    amps_control: (Complex64, Complex64),
    amps_target: (Complex64, Complex64),
) -> Result<StateVector, SurgeryError> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let plus = (Complex64::new(r, 0.0), Complex64::new(r, 0.0));
    embed_patches(
        CNOT_QUBITS,
        &[
            PatchState {
                layout: &setup.merge_pr.patch_p,
                offset: OFF_P,
                basis: &setup.basis_pauli,
                amplitudes: amps_control,
            },
            PatchState {
                layout: &setup.merge_pr.patch_q,
                offset: OFF_R,
                basis: &setup.basis_pauli,
                amplitudes: plus,
            },
            PatchState {
                layout: &setup.merge_rq.patch_q,
                offset: OFF_Q,
                basis: &setup.basis_q,
                amplitudes: amps_target,
            },
        ],
    )
}

/// Ideal CNOT(P -> Q) output with the auxiliary patch collapsed to
/// `|m3>_L`: `sum_i c_i |i>_P (x) (X^i |psi>)_Q (x) |m3>_R`.
fn cnot_ideal_state(
    setup: &CnotSetup,
    amps_control: (Complex64, Complex64),
    amps_target: (Complex64, Complex64),
    m3: u8,
) -> Result<StateVector, SurgeryError> {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let r_amps = if m3 == 0 { (one, zero) } else { (zero, one) };
    let (a_q, b_q) = amps_target;
    let mut terms = Vec::new();
    for (c_p, p_amps, q_amps) in [
        (amps_control.0, (one, zero), (a_q, b_q)),
        (amps_control.1, (zero, one), (b_q, a_q)),
    ] {
        if c_p.norm() < 1e-15 {
            continue;
        }
        let term = embed_patches(
            CNOT_QUBITS,
            &[
                PatchState {
                    layout: &setup.merge_pr.patch_p,
                    offset: OFF_P,
                    basis: &setup.basis_pauli,
                    amplitudes: p_amps,
                },
                PatchState {
                    layout: &setup.merge_pr.patch_q,
                    offset: OFF_R,
                    basis: &setup.basis_pauli,
                    amplitudes: r_amps,
                },
                PatchState {
                    layout: &setup.merge_rq.patch_q,
                    offset: OFF_Q,
                    basis: &setup.basis_q,
                    amplitudes: q_amps,
                },
            ],
        )?;
        terms.push((c_p, term));
    }
    let mut out = StateVector::ground_state(CNOT_QUBITS).map_err(SurgeryError::Engine)?;
    for i in 0..out.amplitudes().len() {
        let mut a = Complex64::new(0.0, 0.0);
        for (c, term) in &terms {
            a += c * term.amplitude(i);
        }
        out.set_amplitude(i, a);
    }
    out.renormalize();
    Ok(out)
}

fn apply_final_frame(
    setup: &CnotSetup,
    state: &mut StateVector,
    m1: u8,
    m2: u8,
    m3: u8,
) -> Result<(), SurgeryError> {
    // Z_L on the control when the XX parity came out -1
    if m2 == 1 {
        for &q in &setup.merge_pr.patch_p.b_chain_on_row(0).qubits {
            state
                .apply_single(&setup.basis_pauli.s_b, q + OFF_P)
                .map_err(SurgeryError::Engine)?;
        }
    }
    // X_L on the target when the ZZ parity and the auxiliary readout disagree
    if m1 ^ m3 == 1 {
        for &q in &setup.merge_rq.patch_q.a_chain_on_col(0).qubits {
            state
                .apply_single(&setup.basis_q.s_a, q + OFF_Q)
                .map_err(SurgeryError::Engine)?;
        }
    }
    Ok(())
}

/// Surgery CNOT with control patch P (Pauli), auxiliary R (Pauli, |+>_L),
/// and target patch Q in the conjugated basis `params_q`; distance 2.
///
/// Smooth merge/split measures `Z_L^P Z_L^R`, rough merge/split measures
/// `X_L^R X_L^Q`, the auxiliary is read out in `Z_L`, and the standard
/// outcome-dependent logical frame corrections are applied physically.
pub fn logical_cnot(
    amps_control: (Complex64, Complex64),
    amps_target: (Complex64, Complex64),
    params_q: crate::algebra::Su2Params,
    rng: &mut RngStream,
    rounds: u32,
) -> Result<CnotRun, SurgeryError> {
    let setup = cnot_setup(params_q)?;
    let noise = NoiseChannel::off(crate::noise::BasisMode::NonPauli);
    let mut state = cnot_initial_state(&setup, amps_control, amps_target)?;

    let out1 = merge_measure(
        &mut state,
        &setup.merge_pr,
        &setup.basis_pauli,
        &setup.basis_pauli,
        &noise,
        rng,
        rounds,
    )?;
    let split1 = split_patches(
        &mut state,
        &setup.merge_pr,
        &setup.basis_pauli,
        &setup.basis_pauli,
        &noise,
        rng,
    )?;
    let out2 = merge_measure(
        &mut state,
        &setup.merge_rq,
        &setup.basis_pauli,
        &setup.basis_q,
        &noise,
        rng,
        rounds,
    )?;
    let split2 = split_patches(
        &mut state,
        &setup.merge_rq,
        &setup.basis_pauli,
        &setup.basis_q,
        &noise,
        rng,
    )?;
    let o3 = measure_tile_operator(
        &mut state,
        &setup.zr_factors,
        &noise,
        &setup.basis_pauli,
        rng,
        CNOT_ANCILLA,
        &mut 0,
    )?;
    let m3 = u8::from(o3 < 0);
    apply_final_frame(&setup, &mut state, out1.m, out2.m, m3)?;

    let ideal = cnot_ideal_state(&setup, amps_control, amps_target, m3)?;
    let fidelity_to_ideal = state.fidelity(&ideal).map_err(SurgeryError::Engine)?;
    Ok(CnotRun {
        state,
        m1: out1.m,
        m2: out2.m,
        m3,
        split1,
        split2,
        fidelity_to_ideal,
    })
}

/// Branch-exhaustive CNOT verification: enumerate every nonzero-probability
/// outcome assignment with direct projectors, apply the same corrections, and
/// compare each leaf against the ideal output for its auxiliary readout.
#[derive(Debug, Clone)]
pub struct CnotBranchReport {
    pub branches: usize,
    pub probability_sum: f64,
    pub min_fidelity: f64,
    /// Smallest pairwise overlap between leaves sharing the same readout bit.
    pub min_within_group: f64,
}

pub fn cnot_branch_exhaustive(
    amps_control: (Complex64, Complex64),
    amps_target: (Complex64, Complex64),
    params_q: crate::algebra::Su2Params,
) -> Result<CnotBranchReport, SurgeryError> {
    let setup = cnot_setup(params_q)?;
    let init = cnot_initial_state(&setup, amps_control, amps_target)?;

    enum Step {
        Measure(Vec<(usize, Gate2x2)>),
        SplitFix(usize),
    }
    let mut plan: Vec<Step> = Vec::new();
    for merge_idx in 0..2usize {
        let (merged, basis_second) = if merge_idx == 0 {
            (&setup.merge_pr, &setup.basis_pauli)
        } else {
            (&setup.merge_rq, &setup.basis_q)
        };
        for tile in &merged.seam_tiles {
            plan.push(Step::Measure(tile.factors(&setup.basis_pauli, basis_second)));
        }
        for (layout, offset, basis) in [
            (&merged.patch_p, merged.offset_p, &setup.basis_pauli),
            (&merged.patch_q, merged.offset_q, basis_second),
        ] {
            for tile in &layout.tiles {
                plan.push(Step::Measure(
                    tile.qubits
                        .iter()
                        .map(|&q| (q + offset, *basis.op(tile.kind)))
                        .collect(),
                ));
            }
        }
        plan.push(Step::SplitFix(merge_idx));
    }
    plan.push(Step::Measure(setup.zr_factors.clone()));

    // outcome bookkeeping offsets within the sign list
    let seam1 = setup.merge_pr.seam_tiles.len();
    let tiles1 = setup.merge_pr.patch_p.tiles.len() + setup.merge_pr.patch_q.tiles.len();
    let seam2 = setup.merge_rq.seam_tiles.len();
    let joint1: Vec<usize> = setup
        .merge_pr
        .seam_tiles
        .iter()
        .enumerate()
        .filter(|(_, t)| t.kind == setup.merge_pr.boundary.joint_kind())
        .map(|(i, _)| i)
        .collect();

    let mut leaves: Vec<(f64, u8, StateVector)> = Vec::new();
    let mut stack: Vec<(StateVector, f64, Vec<i8>, usize)> = vec![(init, 1.0, Vec::new(), 0)];
    while let Some((mut state, prob, signs, step_idx)) = stack.pop() {
        if step_idx == plan.len() {
            let m1 = u8::from(joint1.iter().map(|&i| signs[i]).product::<i8>() < 0);
            let m2_product: i8 = setup
                .merge_rq
                .seam_tiles
                .iter()
                .enumerate()
                .filter(|(_, t)| t.kind == setup.merge_rq.boundary.joint_kind())
                .map(|(i, _)| signs[seam1 + tiles1 + i])
                .product();
            let m2 = u8::from(m2_product < 0);
            let m3 = u8::from(*signs.last().expect("readout sign") < 0);
            apply_final_frame(&setup, &mut state, m1, m2, m3)?;
            leaves.push((prob, m3, state));
            continue;
        }
        match &plan[step_idx] {
            Step::SplitFix(merge_idx) => {
                let (merged, basis_second, base) = if *merge_idx == 0 {
                    (&setup.merge_pr, &setup.basis_pauli, seam1)
                } else {
                    (&setup.merge_rq, &setup.basis_q, seam1 + tiles1 + seam2)
                };
                let np = merged.patch_p.tiles.len();
                let nq = merged.patch_q.tiles.len();
                let outcomes_p: Vec<i8> = signs[base..base + np].to_vec();
                let outcomes_q: Vec<i8> = signs[base + np..base + np + nq].to_vec();
                let correction = split_corrections(merged, &outcomes_p, &outcomes_q)?;
                apply_correction(&mut state, merged, &setup.basis_pauli, basis_second, &correction)?;
                stack.push((state, prob, signs, step_idx + 1));
            }
            Step::Measure(factors) => {
                for sign in [1i8, -1i8] {
                    let mut branch = state.clone();
                    let p = branch
                        .project_factors_sign(factors, sign)
                        .map_err(SurgeryError::Engine)?;
                    if p > 1e-9 {
                        let mut s = signs.clone();
                        s.push(sign);
                        stack.push((branch, prob * p, s, step_idx + 1));
                    }
                }
            }
        }
    }

    let mut probability_sum = 0.0;
    let mut min_fidelity = f64::INFINITY;
    let mut min_within_group = f64::INFINITY;
    let mut group_rep: [Option<StateVector>; 2] = [None, None];
    for (prob, m3, state) in &leaves {
        probability_sum += prob;
        let ideal = cnot_ideal_state(&setup, amps_control, amps_target, *m3)?;
        min_fidelity = min_fidelity.min(state.fidelity(&ideal).map_err(SurgeryError::Engine)?);
        match &group_rep[*m3 as usize] {
            None => group_rep[*m3 as usize] = Some(state.clone()),
            Some(rep) => {
                min_within_group =
                    min_within_group.min(state.fidelity(rep).map_err(SurgeryError::Engine)?);
            }
        }
    }
    Ok(CnotBranchReport {
        branches: leaves.len(),
        probability_sum,
        min_fidelity,
        min_within_group: if min_within_group.is_finite() {
            min_within_group
        } else {
            1.0
        },
    })
}


/// One line of a verification report: label, measured value, threshold pass.
#[derive(Debug, Clone)]
pub struct CheckLine {
    pub label: String,
    pub value: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, Default)]
pub struct SurgeryVerifyReport {
    pub lines: Vec<CheckLine>,
}

impl SurgeryVerifyReport {
    pub fn pass(&self) -> bool {
        self.lines.iter().all(|l| l.ok)
    }

    fn push(&mut self, label: impl Into<String>, value: f64, ok: bool) {
        self.lines.push(CheckLine {
            label: label.into(),
            value,
            ok,
        });
    }
}

/// Eq.-12 style construction in the first patch's logical frame:
/// `|0_P> (x) |chi_Q> + (-1)^m |1_P> (x) X_L^Q |chi_Q>` with
/// `|chi_Q> = a_P |psi_Q> + (-1)^m b_P X_L^Q |psi_Q>`, gauge-projected onto
/// the canonical merged sector. Swapping the roles of the patches must give
/// the same state.
pub fn eq12_construction(
    merged: &MergedLayout,
    basis_p: &OperatorBasis,
    basis_q: &OperatorBasis,
    amps_p: (Complex64, Complex64),
    amps_q: (Complex64, Complex64),
    m: u8,
    q_frame: bool,
) -> Result<StateVector, SurgeryError> {
    let sign = if m == 0 {
        Complex64::new(1.0, 0.0)
    } else {
        Complex64::new(-1.0, 0.0)
    };
    let (frame_raw, carrier_raw) = if q_frame {
        (amps_q, amps_p)
    } else {
        (amps_p, amps_q)
    };
    // For a rough merge the frame expands in the Z_L eigenbasis and the
    // carrier is flipped by X_L; a smooth merge swaps the roles.
    let joint = merged.boundary.joint_kind();
    let flip = |amps: (Complex64, Complex64)| -> (Complex64, Complex64) {
        match joint {
            OperatorKind::A => (amps.1, amps.0),
            OperatorKind::B => (amps.0, -amps.1),
        }
    };
    let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let (fa, fb, frame0, frame1) = match joint {
        OperatorKind::A => {
            let one = Complex64::new(1.0, 0.0);
            let zero = Complex64::new(0.0, 0.0);
            (frame_raw.0, frame_raw.1, (one, zero), (zero, one))
        }
        OperatorKind::B => (
            (frame_raw.0 + frame_raw.1) * r,
            (frame_raw.0 - frame_raw.1) * r,
            (r, r),
            (r, -r),
        ),
    };
    let (ca, cb) = carrier_raw;
    let flipped = flip((ca, cb));
    let chi = (
        fa * ca + sign * fb * flipped.0,
        fa * cb + sign * fb * flipped.1,
    );
    let chi_flipped = flip(chi);

    let n = merged.register_qubits();
    let build = |frame: (Complex64, Complex64),
                 carrier: (Complex64, Complex64)|
     -> Result<StateVector, SurgeryError> {
        let (p_amps, q_amps) = if q_frame {
            (carrier, frame)
        } else {
            (frame, carrier)
        };
        embed_patches(
            n,
            &[
                PatchState {
                    layout: &merged.patch_p,
                    offset: merged.offset_p,
                    basis: basis_p,
                    amplitudes: p_amps,
                },
                PatchState {
                    layout: &merged.patch_q,
                    offset: merged.offset_q,
                    basis: basis_q,
                    amplitudes: q_amps,
                },
            ],
        )
    };
    let term0 = build(frame0, chi)?;
    let term1 = build(frame1, chi_flipped)?;
    let mut state = StateVector::ground_state(n).map_err(SurgeryError::Engine)?;
    for i in 0..state.amplitudes().len() {
        state.set_amplitude(i, term0.amplitude(i) + sign * term1.amplitude(i));
    }
    state.renormalize();
    for (tile, s) in merged
        .seam_tiles
        .iter()
        .zip(merged.canonical_seam_signs(m).iter())
    {
        state
            .project_factors_sign(&tile.factors(basis_p, basis_q), *s)
            .map_err(SurgeryError::Engine)?;
    }
    Ok(state)
}

fn deterministic_amps(seed: u64) -> (Complex64, Complex64) {
    let mut rng = RngStream::from_seed(seed);
    let a = Complex64::new(rng.next_f64() - 0.5, rng.next_f64() - 0.5);
    let b = Complex64::new(rng.next_f64() - 0.5, rng.next_f64() - 0.5);
    let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
    (a / n, b / n)
}

/// Run the full merge verification battery at one distance: seam-product
/// identity, byproduct determinism, circuit-vs-reference fidelity on both
/// outcome branches, the symmetric Eq.-12 constructions, and the all-Pauli
/// control case.
pub fn verify_surgery(
    distance: usize,
    params: crate::algebra::Su2Params,
) -> Result<SurgeryVerifyReport, SurgeryError> {
    let mut report = SurgeryVerifyReport::default();
    let basis_pauli = crate::algebra::build_basis(crate::algebra::Su2Params::pauli());
    let cases = [
        ("hybrid", crate::algebra::build_basis(params)),
        ("pauli-pauli", basis_pauli.clone()),
    ];
    let noise = NoiseChannel::off(crate::noise::BasisMode::NonPauli);

    for boundary in [BoundaryKind::Rough, BoundaryKind::Smooth] {
        let merged = build_merged_layout(distance, boundary)?;
        let bname = match boundary {
            BoundaryKind::Rough => "rough",
            BoundaryKind::Smooth => "smooth",
        };

        for (case, basis_q) in &cases {
            // operator identity: product of joint-kind seam tiles vs the
            // joint logical representative, on a random state
            let n = merged.register_qubits();
            let mut probe = {
                let mut rng = RngStream::from_seed(2024);
                let mut s = StateVector::ground_state(n).map_err(SurgeryError::Engine)?;
                for i in 0..s.amplitudes().len() {
                    s.set_amplitude(i, Complex64::new(rng.next_f64() - 0.5, rng.next_f64() - 0.5));
                }
                s.renormalize();
                s
            };
            let mut via_joint = probe.clone();
            via_joint
                .apply_factors(&merged.joint_factors(&basis_pauli, basis_q))
                .map_err(SurgeryError::Engine)?;
            for tile in &merged.seam_tiles {
                if tile.kind == boundary.joint_kind() {
                    probe
                        .apply_factors(&tile.factors(&basis_pauli, basis_q))
                        .map_err(SurgeryError::Engine)?;
                }
            }
            let op_fidelity = probe.fidelity(&via_joint).map_err(SurgeryError::Engine)?;
            report.push(
                format!("{bname}/{case}: seam product equals joint logical"),
                op_fidelity,
                op_fidelity >= 1.0 - 1e-12,
            );

            let amps_p = deterministic_amps(300 + distance as u64);
            let amps_q = deterministic_amps(400 + distance as u64);

            // byproduct seam tiles are +1 on code-state inputs
            let embedded = embed_patches(
                n,
                &[
                    PatchState {
                        layout: &merged.patch_p,
                        offset: merged.offset_p,
                        basis: &basis_pauli,
                        amplitudes: amps_p,
                    },
                    PatchState {
                        layout: &merged.patch_q,
                        offset: merged.offset_q,
                        basis: basis_q,
                        amplitudes: amps_q,
                    },
                ],
            )?;
            let mut byproduct_min: f64 = 1.0;
            for tile in &merged.seam_tiles {
                if tile.kind != boundary.joint_kind() {
                    let mut clone = embedded.clone();
                    let p = clone
                        .project_factors_sign(&tile.factors(&basis_pauli, basis_q), 1)
                        .map_err(SurgeryError::Engine)?;
                    byproduct_min = byproduct_min.min(p);
                }
            }
            report.push(
                format!("{bname}/{case}: byproduct seam tiles deterministic +1"),
                byproduct_min,
                byproduct_min >= 1.0 - 1e-9,
            );

            // circuit merge vs analytic reference, both branches
            let mut branch_fidelity = [f64::INFINITY; 2];
            let mut trial = 0u64;
            while (branch_fidelity[0].is_infinite() || branch_fidelity[1].is_infinite())
                && trial < 64
            {
                let mut state = embedded.clone();
                let mut rng = RngStream::for_trial(7000, trial, 0);
                let out = merge_measure(
                    &mut state,
                    &merged,
                    &basis_pauli,
                    basis_q,
                    &noise,
                    &mut rng,
                    distance as u32,
                )?;
                let reference = merged_state_reference(
                    &merged,
                    &basis_pauli,
                    basis_q,
                    amps_p,
                    amps_q,
                    out.m,
                )?;
                let f = state.fidelity(&reference).map_err(SurgeryError::Engine)?;
                let slot = &mut branch_fidelity[out.m as usize];
                *slot = slot.min(f);
                trial += 1;
            }
            for (m, f) in branch_fidelity.iter().enumerate() {
                report.push(
                    format!("{bname}/{case}: circuit merge matches reference, m={m}"),
                    *f,
                    f.is_finite() && *f >= 1.0 - 1e-9,
                );
            }

            // the two symmetric Eq.-12 constructions agree with the reference
            for m in 0..2u8 {
                let reference =
                    merged_state_reference(&merged, &basis_pauli, basis_q, amps_p, amps_q, m)?;
                let via_p =
                    eq12_construction(&merged, &basis_pauli, basis_q, amps_p, amps_q, m, false)?;
                let via_q =
                    eq12_construction(&merged, &basis_pauli, basis_q, amps_p, amps_q, m, true)?;
                let fp = via_p.fidelity(&reference).map_err(SurgeryError::Engine)?;
                let fq = via_q.fidelity(&reference).map_err(SurgeryError::Engine)?;
                report.push(
                    format!("{bname}/{case}: first-frame construction matches, m={m}"),
                    fp,
                    fp >= 1.0 - 1e-9,
                );
                report.push(
                    format!("{bname}/{case}: second-frame construction matches, m={m}"),
                    fq,
                    fq >= 1.0 - 1e-9,
                );
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod verify_tests {
    use super::*;
    use crate::algebra::{solve_params_for_target, target_a_amplitudes};

    #[test]
    fn surgery_verification_passes_at_d2() {
        let (a, b) = target_a_amplitudes();
        let params = solve_params_for_target(a, b, 2).unwrap().params;
        let report = verify_surgery(2, params).unwrap();
        for line in &report.lines {
            assert!(line.ok, "{}: {}", line.label, line.value);
        }
    }
}
