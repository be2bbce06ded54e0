//! Construction of weaved orthogonal matrices.
//!
//! A weaved matrix `W_M` is an M×M orthogonal matrix whose first column is
//! uniformly `1/√M` and whose rows carry at most `⌈log₂M⌉ + 1` non-zero
//! entries. Powers of two are built by recursively interleaving two copies of
//! the half-size matrix with a π/4 plane rotation; general dimensions follow
//! from the binary decomposition of M, gluing power-of-two blocks together
//! with one plane rotation per additional set bit.
//!
//! Every scalar multiplication performed while building a matrix is charged
//! to a [`CostLedger`]; entries copied through identity columns count as one
//! multiplication each, so a from-scratch build of `W_{2^m}` costs exactly
//! `m·2^{m+1}`.

use crate::error::{Error, Result};
use crate::sparse::{SparseRowMatrix, DROP_TOLERANCE};

/// Counter of scalar multiplications performed during a build.
///
/// The counter is monotone non-decreasing during a build; create a fresh
/// ledger (or call [`reset`](CostLedger::reset)) to meter a new one.
#[derive(Debug, Default, Clone)]
pub struct CostLedger {
    multiplications: u64,
}

impl CostLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn multiplications(&self) -> u64 {
        self.multiplications
    }

    pub fn reset(&mut self) {
        self.multiplications = 0;
    }

    fn charge(&mut self, n: u64) {
        self.multiplications += n;
    }
}

/// Binary decomposition of a target dimension M: set-bit positions, their
/// partial sums `b_j`, and the mixing angles between consecutive partial
/// blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct WeaveRecipe {
    pub target_dim: usize,
    /// Positions of the set bits of M, ascending.
    pub bit_positions: Vec<u32>,
    /// Partial sums `b_j = Σ_{i≤j} 2^{bit_positions[i]}`; the last equals M.
    pub partial_sums: Vec<usize>,
}

impl WeaveRecipe {
    /// Number of set bits.
    pub fn set_bit_count(&self) -> usize {
        self.bit_positions.len()
    }
}

/// Decompose M into its set-bit positions and partial sums.
pub fn binary_positions(m: usize) -> Result<WeaveRecipe> {
    if m == 0 {
        return Err(Error::invalid("target dimension must be positive"));
    }
    let mut bit_positions = Vec::new();
    let mut partial_sums = Vec::new();
    let mut sum = 0usize;
    for pos in 0..usize::BITS {
        if m & (1usize << pos) != 0 {
            bit_positions.push(pos);
            sum += 1usize << pos;
            partial_sums.push(sum);
        }
    }
    debug_assert_eq!(sum, m);
    Ok(WeaveRecipe {
        target_dim: m,
        bit_positions,
        partial_sums,
    })
}

/// Mixing angle θ_j between the first j partial blocks and block j+1,
/// for `j` in `1..=k−1` where k is the number of set bits.
///
/// Defined by `cos θ_j = (1 + 2^{m̃_{j+1}} / b_j)^{−1/2}`; always in (0, π/2).
pub fn weave_angle(recipe: &WeaveRecipe, j: usize) -> Result<f64> {
    let (c, _) = weave_angle_cos_sin(recipe, j)?;
    Ok(c.acos())
}

/// The (cos θ_j, sin θ_j) pair straight from the closed form, avoiding an
/// arccos/cos round trip.
pub fn weave_angle_cos_sin(recipe: &WeaveRecipe, j: usize) -> Result<(f64, f64)> {
    let k = recipe.set_bit_count();
    if j == 0 || j >= k {
        return Err(Error::invalid(format!(
            "angle index {} out of range 1..={} for dim {}",
            j,
            k.saturating_sub(1),
            recipe.target_dim
        )));
    }
    let next_block = (1usize << recipe.bit_positions[j]) as f64;
    let b_j = recipe.partial_sums[j - 1] as f64;
    let cos = (1.0 + next_block / b_j).powf(-0.5);
    let sin = (1.0 - cos * cos).sqrt();
    Ok((cos, sin))
}

/// Plane rotation by `theta` in the (i, j) coordinate plane of a
/// `dim`-dimensional space (0-based indices, `i < j < dim`).
pub fn givens(i: usize, j: usize, theta: f64, dim: usize) -> Result<SparseRowMatrix> {
    if i >= j || j >= dim {
        return Err(Error::invalid(format!(
            "plane indices must satisfy i < j < dim, got i={i}, j={j}, dim={dim}"
        )));
    }
    let (c, s) = (theta.cos(), theta.sin());
    let mut m = SparseRowMatrix::identity(dim);
    m.set(i, i, c);
    m.set(j, j, c);
    m.set(i, j, -s);
    m.set(j, i, s);
    Ok(m)
}

/// Build `W_{2^m}` and charge the ledger with every multiplication performed,
/// including one per entry copied through an identity column.
pub fn weave_pow2(m: u32, ledger: &mut CostLedger) -> SparseRowMatrix {
    weave_pow2_chain(m, ledger).pop().expect("chain is non-empty")
}

/// Build the whole chain `W_1, W_2, …, W_{2^m}` bottom-up. Returned vector is
/// indexed by the exponent.
fn weave_pow2_chain(m: u32, ledger: &mut CostLedger) -> Vec<SparseRowMatrix> {
    let mut chain = Vec::with_capacity(m as usize + 1);
    chain.push(SparseRowMatrix::identity(1));
    for level in 1..=m as usize {
        let doubled = weave_double(&chain[level - 1], ledger);
        chain.push(doubled);
    }
    chain
}

/// One weaving step: `diag(W, W) · T^{(1, 1+h)}(π/4)` where h is the
/// half-dimension. The rotation mixes the two uniform first columns into a
/// uniform first column of the doubled matrix and moves the complementary
/// combination into column h.
fn weave_double(prev: &SparseRowMatrix, ledger: &mut CostLedger) -> SparseRowMatrix {
    let half = prev.dim();
    let dim = 2 * half;
    let c = std::f64::consts::FRAC_1_SQRT_2; // cos(π/4) = sin(π/4)
    let mut rows = Vec::with_capacity(dim);
    // Top copy: first-column entry v mixes into cols 0 and half as (c·v, −s·v);
    // the remaining entries are copied in place.
    for r in 0..half {
        let src = prev.row(r);
        let mut row = Vec::with_capacity(src.len() + 1);
        debug_assert_eq!(src.first().map(|e| e.0), Some(0));
        let v0 = src[0].1;
        row.push((0, c * v0));
        ledger.charge(1);
        for &(col, v) in &src[1..] {
            row.push((col, v));
            ledger.charge(1);
        }
        row.push((half, -(c * v0)));
        ledger.charge(1);
        rows.push(row);
    }
    // Bottom copy: first-column entry v mixes into cols 0 and half as
    // (s·v, c·v); the rest shift right by half.
    for r in 0..half {
        let src = prev.row(r);
        let mut row = Vec::with_capacity(src.len() + 1);
        let v0 = src[0].1;
        row.push((0, c * v0));
        ledger.charge(1);
        row.push((half, c * v0));
        ledger.charge(1);
        for &(col, v) in &src[1..] {
            row.push((col + half, v));
            ledger.charge(1);
        }
        rows.push(row);
    }
    SparseRowMatrix::from_rows(dim, rows).expect("weave step produces valid rows")
}

/// Build the weaved matrix `W_M` for any positive M.
///
/// Powers of two delegate to [`weave_pow2`]; other dimensions place the
/// power-of-two blocks of the binary decomposition on the diagonal and apply
/// one plane rotation per extra set bit, mixing column 0 with the first
/// column of each successive block.
pub fn weave_general(m: usize, ledger: &mut CostLedger) -> Result<SparseRowMatrix> {
    let recipe = binary_positions(m)?;
    let k = recipe.set_bit_count();
    let top = *recipe.bit_positions.last().expect("k >= 1");
    let chain = weave_pow2_chain(top, ledger);
    if k == 1 {
        return Ok(chain.into_iter().last().expect("chain is non-empty"));
    }

    // Diagonal placement of the blocks; each copied entry costs one
    // multiplication, mirroring the power-of-two accounting.
    let blocks: Vec<&SparseRowMatrix> = recipe
        .bit_positions
        .iter()
        .map(|&p| &chain[p as usize])
        .collect();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(m);
    let mut offset = 0usize;
    for block in &blocks {
        for r in 0..block.dim() {
            let row: Vec<(usize, f64)> =
                block.row(r).iter().map(|&(c, v)| (c + offset, v)).collect();
            ledger.charge(row.len() as u64);
            rows.push(row);
        }
        offset += block.dim();
    }
    let mut w = SparseRowMatrix::from_rows(m, rows)?;

    // Left-to-right product of the plane rotations T^{(1, 1+b_j)}(θ_j),
    // applied as in-place column-pair updates.
    for j in 1..k {
        let (cos, sin) = weave_angle_cos_sin(&recipe, j)?;
        apply_column_rotation(&mut w, 0, recipe.partial_sums[j - 1], cos, sin, ledger);
    }
    Ok(w)
}

/// Right-multiply by a plane rotation in columns (ci, cj): for every row,
/// `(a, b) ↦ (c·a + s·b, −s·a + c·b)`. Two multiplications are charged per
/// non-zero operand.
fn apply_column_rotation(
    w: &mut SparseRowMatrix,
    ci: usize,
    cj: usize,
    cos: f64,
    sin: f64,
    ledger: &mut CostLedger,
) {
    for r in 0..w.dim() {
        let a = w.get(r, ci);
        let b = w.get(r, cj);
        if a == 0.0 && b == 0.0 {
            continue;
        }
        let mut new_a = 0.0;
        let mut new_b = 0.0;
        if a != 0.0 {
            new_a += cos * a;
            new_b -= sin * a;
            ledger.charge(2);
        }
        if b != 0.0 {
            new_a += sin * b;
            new_b += cos * b;
            ledger.charge(2);
        }
        if new_a.abs() <= DROP_TOLERANCE {
            new_a = 0.0;
        }
        if new_b.abs() <= DROP_TOLERANCE {
            new_b = 0.0;
        }
        w.set(r, ci, new_a);
        w.set(r, cj, new_b);
    }
}

/// Verification report for a candidate weaved matrix.
#[derive(Debug, Clone, serde::Serialize)]
pub struct VerifyReport {
    pub orthogonal: bool,
    pub uniform_first_column: bool,
    pub column_sums_ok: bool,
    pub max_orthogonality_defect: f64,
    pub max_first_column_error: f64,
    pub max_column_sum_error: f64,
}

impl VerifyReport {
    pub fn all_ok(&self) -> bool {
        self.orthogonal && self.uniform_first_column && self.column_sums_ok
    }
}

/// Check the three defining properties at tolerance `tol`: `W Wᵀ = I`, first
/// column uniformly `1/√dim`, and column sums `√dim · δ_{j,0}`.
pub fn verify_weaved(m: &SparseRowMatrix, tol: f64) -> Result<VerifyReport> {
    if tol <= 0.0 {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let dim = m.dim();
    let ortho = m.orthogonality_defect();
    let uniform = (0..dim)
        .map(|i| (m.get(i, 0) - 1.0 / (dim as f64).sqrt()).abs())
        .fold(0.0f64, f64::max);
    let sums = m.column_sums();
    let mut sum_err = 0.0f64;
    for (j, &s) in sums.iter().enumerate() {
        let target = if j == 0 { (dim as f64).sqrt() } else { 0.0 };
        sum_err = sum_err.max((s - target).abs());
    }
    Ok(VerifyReport {
        orthogonal: ortho <= tol,
        uniform_first_column: uniform <= tol,
        column_sums_ok: sum_err <= tol,
        max_orthogonality_defect: ortho,
        max_first_column_error: uniform,
        max_column_sum_error: sum_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT2_INV: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn assert_close(m: &SparseRowMatrix, expected: &[Vec<f64>], tol: f64) {
        let dense = m.to_dense();
        for (i, row) in expected.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert!(
                    (dense[i][j] - v).abs() <= tol,
                    "entry ({i},{j}): got {}, expected {}",
                    dense[i][j],
                    v
                );
            }
        }
    }

    #[test]
    fn givens_dim2_is_the_plane_rotation() {
        let th = 0.3;
        let t = givens(0, 1, th, 2).unwrap();
        assert_close(
            &t,
            &[vec![th.cos(), -th.sin()], vec![th.sin(), th.cos()]],
            0.0,
        );
    }

    #[test]
    fn givens_dim4_keeps_identity_rows() {
        let th = 0.7;
        let t = givens(0, 2, th, 4).unwrap();
        assert_eq!(t.get(1, 1), 1.0);
        assert_eq!(t.get(3, 3), 1.0);
        assert_eq!(t.get(0, 2), -th.sin());
        assert_eq!(t.get(2, 0), th.sin());
        assert!(t.orthogonality_defect() < 1e-15);
    }

    #[test]
    fn givens_zero_angle_is_identity() {
        let t = givens(0, 1, 0.0, 5).unwrap();
        assert_eq!(t, SparseRowMatrix::identity(5));
    }

    #[test]
    fn givens_rejects_bad_planes() {
        assert!(givens(1, 1, 0.5, 3).is_err());
        assert!(givens(2, 1, 0.5, 3).is_err());
        assert!(givens(0, 3, 0.5, 3).is_err());
    }

    #[test]
    fn weave_pow2_base_cases() {
        let mut ledger = CostLedger::new();
        let w1 = weave_pow2(0, &mut ledger);
        assert_eq!(w1.to_dense(), vec![vec![1.0]]);
        assert_eq!(ledger.multiplications(), 0);

        let w2 = weave_pow2(1, &mut ledger);
        assert_close(
            &w2,
            &[vec![SQRT2_INV, -SQRT2_INV], vec![SQRT2_INV, SQRT2_INV]],
            1e-16,
        );
    }

    #[test]
    fn weave_pow2_reproduces_w4() {
        let mut ledger = CostLedger::new();
        let w4 = weave_pow2(2, &mut ledger);
        let expected = [
            vec![0.5, -SQRT2_INV, -0.5, 0.0],
            vec![0.5, SQRT2_INV, -0.5, 0.0],
            vec![0.5, 0.0, 0.5, -SQRT2_INV],
            vec![0.5, 0.0, 0.5, SQRT2_INV],
        ];
        assert_close(&w4, &expected, 1e-15);
        assert_eq!(w4.sparsity(), 3);
    }

    #[test]
    fn pow2_cost_identity() {
        for m in 1..=10u32 {
            let mut ledger = CostLedger::new();
            let _ = weave_pow2(m, &mut ledger);
            assert_eq!(
                ledger.multiplications(),
                u64::from(m) * (1u64 << (m + 1)),
                "cost identity failed for m={m}"
            );
        }
    }

    #[test]
    fn pow2_nonzero_count() {
        let mut ledger = CostLedger::new();
        for m in 0..=10u32 {
            let w = weave_pow2(m, &mut ledger);
            assert_eq!(w.nnz(), (1usize << m) * (m as usize + 1));
        }
    }

    #[test]
    fn binary_positions_examples() {
        let r5 = binary_positions(5).unwrap();
        assert_eq!(r5.bit_positions, vec![0, 2]);
        assert_eq!(r5.partial_sums, vec![1, 5]);

        let r10 = binary_positions(10).unwrap();
        assert_eq!(r10.bit_positions, vec![1, 3]);
        assert_eq!(r10.partial_sums, vec![2, 10]);

        assert!(binary_positions(0).is_err());
    }

    #[test]
    fn recipe_invariants_hold() {
        for m in 1..=512usize {
            let r = binary_positions(m).unwrap();
            let total: usize = r.bit_positions.iter().map(|&p| 1usize << p).sum();
            assert_eq!(total, m);
            assert!(r.bit_positions.windows(2).all(|w| w[0] < w[1]));
            assert_eq!(
                *r.bit_positions.last().unwrap(),
                (m as f64).log2().floor() as u32
            );
            assert_eq!(*r.partial_sums.last().unwrap(), m);
            assert!(r.partial_sums.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn weave_angles_match_closed_form() {
        let r3 = binary_positions(3).unwrap();
        let (c, _) = weave_angle_cos_sin(&r3, 1).unwrap();
        assert!((c - 1.0 / 3.0f64.sqrt()).abs() < 1e-15);

        let r5 = binary_positions(5).unwrap();
        let (c, _) = weave_angle_cos_sin(&r5, 1).unwrap();
        assert!((c - 1.0 / 5.0f64.sqrt()).abs() < 1e-15);

        let theta = weave_angle(&r5, 1).unwrap();
        assert!(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2);

        // A power of two has a single set bit, hence no angles at all.
        let r8 = binary_positions(8).unwrap();
        assert_eq!(r8.set_bit_count(), 1);
        assert!(weave_angle(&r8, 1).is_err());
    }

    #[test]
    fn weave_general_dim3() {
        let mut ledger = CostLedger::new();
        let w3 = weave_general(3, &mut ledger).unwrap();
        let s3 = 1.0 / 3.0f64.sqrt();
        let expected = [
            vec![s3, -(2.0f64 / 3.0).sqrt(), 0.0],
            vec![s3, 1.0 / 6.0f64.sqrt(), -SQRT2_INV],
            vec![s3, 1.0 / 6.0f64.sqrt(), SQRT2_INV],
        ];
        assert_close(&w3, &expected, 1e-15);
        assert_eq!(w3.row_sparsity(0), 2);
    }

    #[test]
    fn weave_general_matches_pow2_on_powers() {
        let mut l1 = CostLedger::new();
        let mut l2 = CostLedger::new();
        let a = weave_general(4, &mut l1).unwrap();
        let b = weave_pow2(2, &mut l2);
        assert_eq!(a, b);
        assert_eq!(l1.multiplications(), l2.multiplications());
        assert_eq!(weave_general(1, &mut l1).unwrap().to_dense(), vec![vec![1.0]]);
        assert!(weave_general(0, &mut l1).is_err());
    }

    #[test]
    fn weaved_properties_hold_up_to_64() {
        let mut ledger = CostLedger::new();
        for m in 1..=64usize {
            let w = weave_general(m, &mut ledger).unwrap();
            let report = verify_weaved(&w, 1e-12).unwrap();
            assert!(report.all_ok(), "verification failed for M={m}: {report:?}");
            let expected = if m == 1 {
                1
            } else {
                (m as f64).log2().ceil() as usize + 1
            };
            assert_eq!(w.sparsity(), expected, "sparsity mismatch at M={m}");
        }
    }

    #[test]
    fn verify_flags_identity_as_non_uniform() {
        let id = SparseRowMatrix::identity(3);
        let report = verify_weaved(&id, 1e-12).unwrap();
        assert!(report.orthogonal);
        assert!(!report.uniform_first_column);
    }

    #[test]
    fn verify_accepts_hadamard_like_sign_pattern() {
        // Orthogonal, uniform first column, rows fully dense (η = 4).
        let h = SparseRowMatrix::from_dense(&[
            vec![0.5, 0.5, 0.5, 0.5],
            vec![0.5, 0.5, -0.5, -0.5],
            vec![0.5, -0.5, -0.5, 0.5],
            vec![0.5, -0.5, 0.5, -0.5],
        ])
        .unwrap();
        let report = verify_weaved(&h, 1e-12).unwrap();
        assert!(report.all_ok());
        assert_eq!(h.sparsity(), 4);
    }

    #[test]
    fn dimension_4_example_sparsities() {
        // The two dimension-4 examples with uniform first column: the weaved
        // one has η = 3, the sign-pattern one η = 4.
        let mut ledger = CostLedger::new();
        let omega_a = weave_pow2(2, &mut ledger);
        assert_eq!(omega_a.sparsity(), 3);
        let omega_b = SparseRowMatrix::from_dense(&[
            vec![0.5, 0.5, 0.5, 0.5],
            vec![0.5, 0.5, -0.5, -0.5],
            vec![0.5, -0.5, -0.5, 0.5],
            vec![0.5, -0.5, 0.5, -0.5],
        ])
        .unwrap();
        assert_eq!(omega_b.sparsity(), 4);
    }

    #[test]
    fn row_sparsity_counts() {
        let mut ledger = CostLedger::new();
        let w4 = weave_pow2(2, &mut ledger);
        assert_eq!(w4.row_sparsity(0), 3);
        let id = SparseRowMatrix::identity(7);
        for r in 0..7 {
            assert_eq!(id.row_sparsity(r), 1);
        }
    }
}
