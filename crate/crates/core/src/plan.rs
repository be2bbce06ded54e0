//! Partitioning, block-diagonal rotation assembly, degree-of-coupling
//! accounting and Trotter gate-cost estimates.
//!
//! The degree of coupling (DoC) of a term is the number of distinct operators
//! that must enter a single Trotterized exponential; for a function `F` of
//! `n` operators it is `min(n, deg F)`, with non-polynomial functions
//! imposing no degree cap. A block-diagonal weaved rotation trades the
//! maximal global DoC of `N` for `max(max_row_sparsity, N_S)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sparse::SparseRowMatrix;
use crate::weave::{weave_general, CostLedger};

/// A split of N operators into contiguous sub-blocks.
///
/// Offsets are 1-based positions: `offsets[i] = 1 + Σ_{n<i} block_dims[n]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Partition {
    total: usize,
    block_dims: Vec<usize>,
    offsets: Vec<usize>,
}

impl Partition {
    pub fn new(block_dims: Vec<usize>) -> Result<Self> {
        if block_dims.is_empty() {
            return Err(Error::invalid("partition needs at least one block"));
        }
        if block_dims.contains(&0) {
            return Err(Error::invalid("all block dimensions must be positive"));
        }
        let total = block_dims.iter().sum();
        let mut offsets = Vec::with_capacity(block_dims.len());
        let mut acc = 1usize;
        for &d in &block_dims {
            offsets.push(acc);
            acc += d;
        }
        Ok(Partition {
            total,
            block_dims,
            offsets,
        })
    }

    /// Split N operators into `n_subblocks` blocks of as-equal-as-possible
    /// sizes, larger blocks first.
    pub fn equal_split(total: usize, n_subblocks: usize) -> Result<Self> {
        if total == 0 {
            return Err(Error::invalid("operator count must be positive"));
        }
        if n_subblocks == 0 || n_subblocks > total {
            return Err(Error::invalid(format!(
                "sub-block count must be in 1..={total}, got {n_subblocks}"
            )));
        }
        let base = total / n_subblocks;
        let remainder = total % n_subblocks;
        let dims = (0..n_subblocks)
            .map(|i| if i < remainder { base + 1 } else { base })
            .collect();
        Partition::new(dims)
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    /// 1-based starting positions of the blocks.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn n_subblocks(&self) -> usize {
        self.block_dims.len()
    }

    /// True when every block has dimension one, making the rotation trivial.
    pub fn is_identity(&self) -> bool {
        self.block_dims.iter().all(|&d| d == 1)
    }
}

/// Default partition rule: `N_S = max(1, round(log₂ N))` sub-blocks (ties
/// round toward fewer blocks), sizes as equal as possible, larger first.
pub fn choose_partition(total: usize) -> Result<Partition> {
    if total == 0 {
        return Err(Error::invalid("operator count must be positive"));
    }
    let log = (total as f64).log2();
    // log₂N is irrational off powers of two, so an exact .5 tie cannot occur
    // for the sizes we handle; the explicit check pins the rule anyway.
    let rounded = if log.fract() == 0.5 {
        log.floor()
    } else {
        log.round()
    };
    let n_subblocks = (rounded as usize).clamp(1, total);
    Partition::equal_split(total, n_subblocks)
}

/// Block-diagonal rotation with a weaved block per partition entry.
pub fn assemble_rotation(p: &Partition) -> SparseRowMatrix {
    let mut ledger = CostLedger::new();
    let blocks: Vec<SparseRowMatrix> = p
        .block_dims()
        .iter()
        .map(|&d| weave_general(d, &mut ledger).expect("block dims are positive"))
        .collect();
    SparseRowMatrix::block_diag(&blocks)
}

/// Support of the rotated global-sum argument: exactly one `(offset, √d)`
/// pair per sub-block, 1-based positions.
pub fn rotated_global_argument(p: &Partition) -> Vec<(usize, f64)> {
    p.offsets()
        .iter()
        .zip(p.block_dims())
        .map(|(&off, &d)| (off, (d as f64).sqrt()))
        .collect()
}

/// Per-term coefficient rows of the rotated local functions: row k of block i
/// couples the original operators at `offset + j − 1` with the entries of the
/// k-th block row. Positions are 1-based.
pub fn rotated_local_terms(
    p: &Partition,
    rotation: &SparseRowMatrix,
) -> Result<Vec<Vec<(usize, f64)>>> {
    if rotation.dim() != p.total() {
        return Err(Error::DimensionMismatch(format!(
            "rotation dim {} does not match partition total {}",
            rotation.dim(),
            p.total()
        )));
    }
    Ok((0..p.total())
        .map(|r| rotation.row(r).iter().map(|&(c, v)| (c + 1, v)).collect())
        .collect())
}

/// Polynomial degree of a term function, or the distinguished
/// non-polynomial value which imposes no degree cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TermDegree {
    Polynomial(u32),
    #[serde(rename = "inf")]
    NonPolynomial,
}

impl TermDegree {
    /// `min(n_ops, deg)`, the DoC of a function of `n_ops` operators.
    pub fn doc(self, n_ops: usize) -> usize {
        match self {
            TermDegree::Polynomial(p) => n_ops.min(p as usize),
            TermDegree::NonPolynomial => n_ops,
        }
    }

    pub fn is_polynomial(self) -> bool {
        matches!(self, TermDegree::Polynomial(_))
    }
}

impl std::str::FromStr for TermDegree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inf" | "INF" | "infinite" => Ok(TermDegree::NonPolynomial),
            other => other
                .parse::<u32>()
                .map(TermDegree::Polynomial)
                .map_err(|_| Error::invalid(format!("bad degree `{other}`"))),
        }
    }
}

/// Abstract description of a Hamiltonian of the form
/// `Σᵢ (f[Qᵢ] + g[Pᵢ]) + F[Σᵢ Qᵢ] + G[Σᵢ Pᵢ]`.
#[derive(Debug, Clone, Serialize)]
pub struct HamiltonianShape {
    pub n_ops: usize,
    pub local_f_degree: TermDegree,
    pub local_g_degree: TermDegree,
    pub global_f_degree: TermDegree,
    pub global_g_degree: TermDegree,
    pub qubits_per_op: u32,
}

impl HamiltonianShape {
    pub fn validate(&self) -> Result<()> {
        if self.n_ops == 0 {
            return Err(Error::invalid("shape needs at least one operator"));
        }
        if self.qubits_per_op == 0 {
            return Err(Error::invalid("qubits per operator must be positive"));
        }
        for d in [
            self.local_f_degree,
            self.local_g_degree,
            self.global_f_degree,
            self.global_g_degree,
        ] {
            if d == TermDegree::Polynomial(0) {
                return Err(Error::invalid("degrees must be positive"));
            }
        }
        Ok(())
    }

    fn local_cap(&self) -> TermDegree {
        max_degree(self.local_f_degree, self.local_g_degree)
    }

    fn global_cap(&self) -> TermDegree {
        max_degree(self.global_f_degree, self.global_g_degree)
    }
}

fn max_degree(a: TermDegree, b: TermDegree) -> TermDegree {
    match (a, b) {
        (TermDegree::Polynomial(x), TermDegree::Polynomial(y)) => TermDegree::Polynomial(x.max(y)),
        _ => TermDegree::NonPolynomial,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TermDoc {
    pub term: String,
    pub operators: usize,
    pub doc: usize,
}

/// Degree-of-coupling report for a Hamiltonian shape, before and after an
/// optional block rotation.
#[derive(Debug, Clone, Serialize)]
pub struct DoCReport {
    pub doc_original: usize,
    pub doc_rotated: usize,
    pub max_phi: usize,
    pub n_subblocks: usize,
    pub per_term: Vec<TermDoc>,
}

/// DoC of the shape in the original basis and, when a partition is given, in
/// the weaved basis where local rows carry at most `max_phi` operators and
/// the global sum collapses onto `N_S` block leaders.
pub fn doc_of_shape(shape: &HamiltonianShape, partition: Option<&Partition>) -> Result<DoCReport> {
    shape.validate()?;
    let n = shape.n_ops;
    if let Some(p) = partition {
        if p.total() != n {
            return Err(Error::DimensionMismatch(format!(
                "partition covers {} operators, shape has {}",
                p.total(),
                n
            )));
        }
    }
    let doc_original = shape.global_cap().doc(n).max(shape.local_cap().doc(1));

    let mut per_term = vec![
        TermDoc {
            term: "local_f".into(),
            operators: 1,
            doc: shape.local_f_degree.doc(1),
        },
        TermDoc {
            term: "local_g".into(),
            operators: 1,
            doc: shape.local_g_degree.doc(1),
        },
        TermDoc {
            term: "global_F".into(),
            operators: n,
            doc: shape.global_f_degree.doc(n),
        },
        TermDoc {
            term: "global_G".into(),
            operators: n,
            doc: shape.global_g_degree.doc(n),
        },
    ];

    let (doc_rotated, max_phi, n_subblocks) = match partition {
        None => (doc_original, 1, n),
        Some(p) => {
            let rotation = assemble_rotation(p);
            let max_phi = rotation.sparsity();
            let ns = p.n_subblocks();
            per_term = vec![
                TermDoc {
                    term: "local_f".into(),
                    operators: max_phi,
                    doc: shape.local_f_degree.doc(max_phi),
                },
                TermDoc {
                    term: "local_g".into(),
                    operators: max_phi,
                    doc: shape.local_g_degree.doc(max_phi),
                },
                TermDoc {
                    term: "global_F".into(),
                    operators: ns,
                    doc: shape.global_f_degree.doc(ns),
                },
                TermDoc {
                    term: "global_G".into(),
                    operators: ns,
                    doc: shape.global_g_degree.doc(ns),
                },
            ];
            let rotated = shape
                .local_cap()
                .doc(max_phi)
                .max(shape.global_cap().doc(ns));
            (rotated, max_phi, ns)
        }
    };

    Ok(DoCReport {
        doc_original,
        doc_rotated,
        max_phi,
        n_subblocks,
        per_term,
    })
}

/// Gates for an arbitrary diagonal unitary on `n_q` qubits, without ancillas.
pub fn gates_for_diagonal(n_q: u32) -> u64 {
    (1u64 << (n_q + 1)) - 3
}

/// Exact-or-scaled gate count. Counts that fit in 128 bits stay exact;
/// larger ones switch to a (mantissa, base-2 exponent) pair which remains
/// exact in magnitude class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateCount {
    Exact(u128),
    Scaled { mantissa: f64, exp2: u32 },
}

impl GateCount {
    pub const ZERO: GateCount = GateCount::Exact(0);

    /// The diagonal-unitary cost `2^exp − 3` (with `exp = n_q·DoC + 1`).
    pub fn pow2_minus_3(exp: u64) -> GateCount {
        if exp < 128 {
            GateCount::Exact((1u128 << exp) - 3)
        } else {
            GateCount::Scaled {
                mantissa: 1.0,
                exp2: exp as u32,
            }
        }
    }

    fn to_log2(self) -> f64 {
        match self {
            GateCount::Exact(0) => f64::NEG_INFINITY,
            GateCount::Exact(n) => (n as f64).log2(),
            GateCount::Scaled { mantissa, exp2 } => mantissa.log2() + exp2 as f64,
        }
    }

    /// `floor(log₁₀ count)`, the decade the count falls in.
    pub fn magnitude_class(self) -> i64 {
        match self {
            GateCount::Exact(0) => 0,
            GateCount::Exact(n) if n < 1_000_000 => (n as f64).log10().floor() as i64,
            _ => (self.to_log2() * std::f64::consts::LOG10_2).floor() as i64,
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            GateCount::Exact(n) => n as f64,
            GateCount::Scaled { mantissa, exp2 } => mantissa * 2f64.powi(exp2 as i32),
        }
    }
}

fn from_log2(log2: f64) -> GateCount {
    if log2 < 127.0 {
        GateCount::Exact(log2.exp2().round() as u128)
    } else {
        let exp2 = log2.floor();
        GateCount::Scaled {
            mantissa: (log2 - exp2).exp2(),
            exp2: exp2 as u32,
        }
    }
}

impl std::ops::Add for GateCount {
    type Output = GateCount;

    fn add(self, other: GateCount) -> GateCount {
        match (self, other) {
            (GateCount::Exact(a), GateCount::Exact(b)) => match a.checked_add(b) {
                Some(sum) => GateCount::Exact(sum),
                None => from_log2((a as f64).log2().max((b as f64).log2()) + 1.0),
            },
            (a, b) => {
                let (la, lb) = (a.to_log2(), b.to_log2());
                if la == f64::NEG_INFINITY {
                    return b;
                }
                if lb == f64::NEG_INFINITY {
                    return a;
                }
                let hi = la.max(lb);
                from_log2(hi + (1.0 + 2f64.powf(la.min(lb) - hi)).log2())
            }
        }
    }
}

impl From<u64> for GateCount {
    fn from(n: u64) -> Self {
        GateCount::Exact(n as u128)
    }
}

impl Serialize for GateCount {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        match *self {
            GateCount::Exact(n) if n <= u64::MAX as u128 => ser.serialize_u64(n as u64),
            other => {
                let (mantissa, exp2) = match other {
                    GateCount::Exact(n) => {
                        let l = (n as f64).log2();
                        ((l - l.floor()).exp2(), l.floor() as u64)
                    }
                    GateCount::Scaled { mantissa, exp2 } => (mantissa, exp2 as u64),
                };
                let mut map = ser.serialize_map(Some(3))?;
                map.serialize_entry("mantissa", &mantissa)?;
                map.serialize_entry("exp2", &exp2)?;
                map.serialize_entry("magnitude_class", &other.magnitude_class())?;
                map.end()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Original,
    Weaved,
}

#[derive(Debug, Clone, Serialize)]
pub struct GateCostReport {
    pub basis: Basis,
    pub local_terms_gates: GateCount,
    pub global_term_gates: GateCount,
    pub total_gates: GateCount,
}

/// Gate estimate for Trotterizing the shape. Without a partition the global
/// non-polynomial term ties all N operators together and dominates with
/// `2^{n_q·N + 1} − 3` gates; with a partition the global term shrinks to the
/// `N_S` block leaders while each local row pays for its `φ` coupled
/// operators. Polynomial terms of degree p are modeled as `(φ·n_q)^p`.
pub fn gate_cost(shape: &HamiltonianShape, partition: Option<&Partition>) -> Result<GateCostReport> {
    shape.validate()?;
    if let Some(p) = partition {
        if p.total() != shape.n_ops {
            return Err(Error::DimensionMismatch(format!(
                "partition covers {} operators, shape has {}",
                p.total(),
                shape.n_ops
            )));
        }
    }
    let nq = shape.qubits_per_op as u64;
    let term_cost = |degree: TermDegree, phi: usize| -> GateCount {
        match degree {
            TermDegree::NonPolynomial => GateCount::pow2_minus_3(nq * phi as u64 + 1),
            TermDegree::Polynomial(p) => {
                GateCount::Exact((phi as u128 * nq as u128).pow(p))
            }
        }
    };

    let (basis, local, global) = match partition {
        None => {
            let per_op = term_cost(shape.local_f_degree, 1) + term_cost(shape.local_g_degree, 1);
            let mut local = GateCount::ZERO;
            for _ in 0..shape.n_ops {
                local = local + per_op;
            }
            let global = term_cost(shape.global_f_degree, shape.n_ops)
                + term_cost(shape.global_g_degree, shape.n_ops);
            (Basis::Original, local, global)
        }
        Some(p) => {
            let rotation = assemble_rotation(p);
            let mut local = GateCount::ZERO;
            for row in 0..rotation.dim() {
                let phi = rotation.row_sparsity(row);
                local = local
                    + term_cost(shape.local_f_degree, phi)
                    + term_cost(shape.local_g_degree, phi);
            }
            let ns = p.n_subblocks();
            let global =
                term_cost(shape.global_f_degree, ns) + term_cost(shape.global_g_degree, ns);
            (Basis::Weaved, local, global)
        }
    };

    Ok(GateCostReport {
        basis,
        local_terms_gates: local,
        global_term_gates: global,
        total_gates: local + global,
    })
}

/// JSON planning report for the CLI.
#[derive(Debug, Clone, Serialize)]
pub struct PlanReport {
    pub n: usize,
    pub n_q: u32,
    pub partition: Vec<usize>,
    pub doc: DocSummary,
    pub gates: GatesSummary,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DocSummary {
    pub original: usize,
    pub rotated: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct GatesSummary {
    pub original: GateCostReport,
    pub weaved: GateCostReport,
}

pub fn plan_report(shape: &HamiltonianShape, partition: &Partition) -> Result<PlanReport> {
    let doc = doc_of_shape(shape, Some(partition))?;
    let original = gate_cost(shape, None)?;
    let weaved = gate_cost(shape, Some(partition))?;
    let mut notes = Vec::new();
    let max_d = *partition.block_dims().iter().max().unwrap();
    let min_d = *partition.block_dims().iter().min().unwrap();
    if max_d > min_d + 1 {
        notes.push(format!(
            "sub-blocks are unequal ({min_d}..{max_d}); weaved gate costs assume similar-size \
             blocks and are extrapolated here"
        ));
    }
    Ok(PlanReport {
        n: shape.n_ops,
        n_q: shape.qubits_per_op,
        partition: partition.block_dims().to_vec(),
        doc: DocSummary {
            original: doc.doc_original,
            rotated: doc.doc_rotated,
        },
        gates: GatesSummary { original, weaved },
        notes,
    })
}
