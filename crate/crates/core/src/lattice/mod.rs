//! Exact integer lattices: normal forms, kernels and index tests.
//!
//! A lattice is stored as a basis of sparse rows. Spanning and index questions are
//! answered from ranks and from the product `d(L)` of the nonzero invariant factors of a
//! basis matrix: for lattices of equal rank with `S ⊆ L`, the index `[L : S]` equals
//! `d(S) / d(L)`. Those quantities come from a sparse unit-pivot elimination, so large
//! but sparse kernels (thousands of columns) stay cheap.

mod coeff;
mod dense;
mod echelon;
mod sparse;

use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::par::Execution;
use coeff::{with_fallback, Overflow, Precision};
use echelon::Echelon;
use sparse::{
    convert_rows, eliminate, pivot_index, rank_and_divisor_in, reduce_by_pivots, Attempt, Row,
};

pub(crate) use dense::json_integer;
pub use dense::IntegerMatrix;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("basis rows are linearly dependent (rank {rank} < {rows} rows)")]
    Dependent { rank: usize, rows: usize },
    #[error("vector lies outside the rational span of the lattice")]
    OutsideRationalSpan,
    #[error("lattice is not contained in the super-lattice")]
    NotContained,
    #[error("computation cancelled")]
    Cancelled,
}

/// Cooperative cancellation flag shared with long-running factorizations.
#[derive(Clone, Debug, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cancel(&self) {
        self.0.store(true, Ordering::Relaxed);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::Relaxed)
    }

    pub(crate) fn check(token: Option<&CancelToken>) -> Result<(), LatticeError> {
        match token {
            Some(t) if t.is_cancelled() => Err(LatticeError::Cancelled),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct LatticeOptions {
    pub cancel: Option<CancelToken>,
    pub execution: Execution,
}

impl LatticeOptions {
    pub fn sequential() -> Self {
        LatticeOptions {
            cancel: None,
            execution: Execution::Sequential,
        }
    }

    fn cancel(&self) -> Option<&CancelToken> {
        self.cancel.as_ref()
    }
}

/// A sparse integer vector: `(coordinate, nonzero value)` pairs sorted by coordinate.
pub type SparseVector = Vec<(usize, BigInt)>;

/// Sparse form of a dense vector.
pub fn sparse_from_dense<T: Into<BigInt> + Clone>(v: &[T]) -> SparseVector {
    v.iter()
        .enumerate()
        .map(|(i, x)| (i, x.clone().into()))
        .filter(|(_, x)| !x.is_zero())
        .collect()
}

/// Sparse vector from unsorted `(coordinate, value)` pairs; repeated coordinates add up.
pub fn sparse_from_pairs(pairs: &[(usize, i64)]) -> SparseVector {
    let mut acc = std::collections::BTreeMap::<usize, BigInt>::new();
    for &(i, x) in pairs {
        *acc.entry(i).or_default() += x;
    }
    acc.into_iter().filter(|(_, x)| !x.is_zero()).collect()
}

fn check_dim(dim: usize, vectors: &[SparseVector]) -> Result<(), LatticeError> {
    for v in vectors {
        if let Some(&(i, _)) = v.last() {
            if i >= dim {
                return Err(LatticeError::DimensionMismatch {
                    expected: dim,
                    found: i + 1,
                });
            }
        }
        if v.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(LatticeError::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
    }
    Ok(())
}

fn to_big_rows<C: coeff::Coeff>(rows: Vec<Row<C>>) -> Vec<SparseVector> {
    rows.into_iter()
        .map(|r| r.into_iter().map(|(c, v)| (c, v.to_big())).collect())
        .collect()
}

fn dispatch<T>(
    rows: &[SparseVector],
    f: impl Fn(Precision, &[SparseVector]) -> Attempt<T>,
) -> Result<T, LatticeError> {
    with_fallback(|p| f(p, rows))
}

/// Rank and product of the nonzero invariant factors of the matrix with the given rows.
pub fn rank_and_divisor(
    dim: usize,
    rows: &[SparseVector],
    opts: &LatticeOptions,
) -> Result<(usize, BigInt), LatticeError> {
    check_dim(dim, rows)?;
    dispatch(rows, |p, rows| match p {
        Precision::Machine => match convert_rows::<i128>(rows) {
            Ok(r) => rank_and_divisor_in(r, dim, opts.cancel()),
            Err(o) => Ok(Err(o)),
        },
        Precision::Big => rank_and_divisor_in(
            convert_rows::<BigInt>(rows).expect("exact"),
            dim,
            opts.cancel(),
        ),
    })
}

/// A lattice given by linearly independent generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeBasis {
    dim: usize,
    rows: Vec<SparseVector>,
}

impl LatticeBasis {
    /// Checks that the rows are independent.
    pub fn new(dim: usize, rows: Vec<SparseVector>) -> Result<Self, LatticeError> {
        let (rank, _) = rank_and_divisor(dim, &rows, &LatticeOptions::sequential())?;
        if rank != rows.len() {
            return Err(LatticeError::Dependent {
                rank,
                rows: rows.len(),
            });
        }
        Ok(LatticeBasis { dim, rows })
    }

    pub fn from_dense_rows<T: Into<BigInt> + Clone>(
        dim: usize,
        rows: &[Vec<T>],
    ) -> Result<Self, LatticeError> {
        for r in rows {
            if r.len() != dim {
                return Err(LatticeError::DimensionMismatch {
                    expected: dim,
                    found: r.len(),
                });
            }
        }
        LatticeBasis::new(dim, rows.iter().map(|r| sparse_from_dense(r)).collect())
    }

    /// The lattice spanned by arbitrary (possibly dependent) generators.
    pub fn from_generators(
        dim: usize,
        generators: &[SparseVector],
        opts: &LatticeOptions,
    ) -> Result<Self, LatticeError> {
        check_dim(dim, generators)?;
        let rows = dispatch(generators, |p, gens| match p {
            Precision::Machine => match convert_rows::<i128>(gens) {
                Ok(r) => echelon_basis(r, opts.cancel()),
                Err(o) => Ok(Err(o)),
            },
            Precision::Big => {
                echelon_basis(convert_rows::<BigInt>(gens).expect("exact"), opts.cancel())
            }
        })?;
        Ok(LatticeBasis { dim, rows })
    }

    /// The full lattice `Z^dim`.
    pub fn standard(dim: usize) -> Self {
        LatticeBasis {
            dim,
            rows: (0..dim).map(|i| vec![(i, BigInt::one())]).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[SparseVector] {
        &self.rows
    }

    pub fn to_matrix(&self) -> IntegerMatrix {
        let mut m = IntegerMatrix::zeros(self.rows.len(), self.dim);
        for (i, r) in self.rows.iter().enumerate() {
            for (c, v) in r {
                m.set(i, *c, v.clone());
            }
        }
        m
    }

    /// Canonical Hermite basis; dense, so meant for small lattices.
    pub fn hnf(&self) -> IntegerMatrix {
        let (h, _) = self.to_matrix().hnf();
        let nonzero: Vec<Vec<BigInt>> = h
            .to_rows()
            .into_iter()
            .filter(|r| r.iter().any(|x| !x.is_zero()))
            .collect();
        IntegerMatrix::from_rows(self.dim, &nonzero).expect("rows have ambient length")
    }

    pub fn contains(&self, v: &SparseVector, opts: &LatticeOptions) -> Result<bool, LatticeError> {
        match sublattice_index(
            self,
            &LatticeBasis {
                dim: self.dim,
                rows: vec![v.clone()],
            },
            opts,
        ) {
            Ok(_) => Ok(true),
            Err(LatticeError::NotContained) if !v.is_empty() => Ok(false),
            Err(e) => Err(e),
        }
    }
}

impl Serialize for LatticeBasis {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_matrix().serialize(s)
    }
}

fn echelon_basis<C: coeff::Coeff>(
    gens: Vec<Row<C>>,
    cancel: Option<&CancelToken>,
) -> Attempt<Vec<SparseVector>> {
    let mut e = Echelon::<C>::new();
    for (i, g) in gens.into_iter().enumerate() {
        if i % 256 == 0 {
            CancelToken::check(cancel)?;
        }
        if let Err(o) = e.insert(g, Vec::new()) {
            return Ok(Err(o));
        }
    }
    Ok(Ok(to_big_rows(e.into_rows())))
}

/// Dense kernels up to this many entries are returned in Hermite form.
const HNF_REDUCE_LIMIT: usize = 40_000;

/// Basis of `{x in Z^cols : A x = 0}`.
pub fn kernel_lattice(
    a: &IntegerMatrix,
    opts: &LatticeOptions,
) -> Result<LatticeBasis, LatticeError> {
    let columns: Vec<SparseVector> = (0..a.cols())
        .map(|c| {
            (0..a.rows())
                .map(|r| (r, a.get(r, c).clone()))
                .filter(|(_, x)| !x.is_zero())
                .collect()
        })
        .collect();
    kernel_of_columns(a.cols(), &columns, opts)
}

/// Kernel of the matrix whose columns are given as sparse vectors.
pub(crate) fn kernel_of_columns(
    cols: usize,
    columns: &[SparseVector],
    opts: &LatticeOptions,
) -> Result<LatticeBasis, LatticeError> {
    let rows = dispatch(columns, |p, columns| match p {
        Precision::Machine => match convert_rows::<i128>(columns) {
            Ok(c) => kernel_in(c, opts.cancel()),
            Err(o) => Ok(Err(o)),
        },
        Precision::Big => kernel_in(
            convert_rows::<BigInt>(columns).expect("exact"),
            opts.cancel(),
        ),
    })?;
    let basis = LatticeBasis { dim: cols, rows };
    if basis.rank() * cols <= HNF_REDUCE_LIMIT && basis.rank() > 0 {
        let h = basis.hnf();
        let rows = h.to_rows().iter().map(|r| sparse_from_dense(r)).collect();
        return Ok(LatticeBasis { dim: cols, rows });
    }
    Ok(basis)
}

fn kernel_in<C: coeff::Coeff>(
    columns: Vec<Row<C>>,
    cancel: Option<&CancelToken>,
) -> Attempt<Vec<SparseVector>> {
    let mut e = Echelon::<C>::new();
    let mut kernel = Vec::new();
    for (j, col) in columns.into_iter().enumerate() {
        if j % 256 == 0 {
            CancelToken::check(cancel)?;
        }
        match e.insert(col, vec![(j, C::from_i64(1))]) {
            Ok(Some(t)) => kernel.push(t),
            Ok(None) => {}
            Err(o) => return Ok(Err(o)),
        }
    }
    Ok(Ok(to_big_rows(kernel)))
}

/// True iff both bases span the same lattice (compared through Hermite forms).
pub fn lattice_equal(a: &LatticeBasis, b: &LatticeBasis) -> Result<bool, LatticeError> {
    if a.dim != b.dim {
        return Err(LatticeError::DimensionMismatch {
            expected: a.dim,
            found: b.dim,
        });
    }
    Ok(a.hnf() == b.hnf())
}

/// Rank and divisor of `super`, of `super ∪ extra` and of `extra` alone.
struct Comparison {
    rank_super: usize,
    d_super: BigInt,
    rank_union: usize,
    d_union: BigInt,
    rank_extra: usize,
    d_extra: BigInt,
}

fn compare_in<C: coeff::Coeff>(
    dim: usize,
    sup: Vec<Row<C>>,
    extra: Vec<Row<C>>,
    opts: &LatticeOptions,
) -> Attempt<Comparison> {
    let cancel = opts.cancel();
    let (sup_elim, extra_rank) = opts.execution.join(
        || eliminate(sup, dim, true, cancel),
        || rank_and_divisor_in(extra.clone(), dim, cancel),
    );
    let sup_elim = match sup_elim? {
        Ok(e) => e,
        Err(o) => return Ok(Err(o)),
    };
    let (rank_extra, d_extra) = match extra_rank? {
        Ok(x) => x,
        Err(o) => return Ok(Err(o)),
    };
    let steps = pivot_index(&sup_elim.pivots);
    let reduced: Result<Vec<Row<C>>, Overflow> = opts
        .execution
        .map(&extra, |v| reduce_by_pivots(v, &sup_elim.pivots, &steps))
        .into_iter()
        .collect();
    let reduced = match reduced {
        Ok(r) => r,
        Err(o) => return Ok(Err(o)),
    };
    CancelToken::check(cancel)?;
    let k = sup_elim.pivot_count();
    let (rank_rest, d_super) = sparse::dense_rank_and_divisor(&sup_elim.remainder, cancel)?;
    let mut union_rest = sup_elim.remainder;
    union_rest.extend(reduced.into_iter().filter(|r| !r.is_empty()));
    let (rank_union_rest, d_union) = match rank_and_divisor_in(union_rest, dim, cancel)? {
        Ok(x) => x,
        Err(o) => return Ok(Err(o)),
    };
    Ok(Ok(Comparison {
        rank_super: k + rank_rest,
        d_super,
        rank_union: k + rank_union_rest,
        d_union,
        rank_extra,
        d_extra,
    }))
}

fn compare(
    dim: usize,
    sup: &[SparseVector],
    extra: &[SparseVector],
    opts: &LatticeOptions,
) -> Result<Comparison, LatticeError> {
    check_dim(dim, sup)?;
    check_dim(dim, extra)?;
    with_fallback(|p| match p {
        Precision::Machine => match (convert_rows::<i128>(sup), convert_rows::<i128>(extra)) {
            (Ok(a), Ok(b)) => compare_in(dim, a, b, opts),
            _ => Ok(Err(Overflow)),
        },
        Precision::Big => compare_in(
            dim,
            convert_rows::<BigInt>(sup).expect("exact"),
            convert_rows::<BigInt>(extra).expect("exact"),
            opts,
        ),
    })
}

/// True iff the integer span of `vectors` equals `lattice`.
///
/// Fails with [`LatticeError::OutsideRationalSpan`] when some vector is not even a
/// rational combination of the basis; a vector in the rational span but outside the
/// lattice, or a proper sublattice, gives `Ok(false)`.
pub fn spans(
    vectors: &[SparseVector],
    lattice: &LatticeBasis,
    opts: &LatticeOptions,
) -> Result<bool, LatticeError> {
    let c = compare(lattice.dim, &lattice.rows, vectors, opts)?;
    if c.rank_union > c.rank_super {
        return Err(LatticeError::OutsideRationalSpan);
    }
    if c.d_union != c.d_super {
        // some vector lies in the rational span but not in the lattice
        return Ok(false);
    }
    Ok(c.rank_extra == c.rank_super && c.d_extra == c.d_super)
}

/// Index of a sublattice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LatticeIndex {
    Finite(BigInt),
    Infinite,
}

impl fmt::Display for LatticeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatticeIndex::Finite(n) => write!(f, "{n}"),
            LatticeIndex::Infinite => write!(f, "infinite"),
        }
    }
}

impl Serialize for LatticeIndex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            LatticeIndex::Finite(n) => json_integer(n).serialize(s),
            LatticeIndex::Infinite => s.serialize_str("infinite"),
        }
    }
}

/// `[super : sub]`, or infinite when `sub` has smaller rank.
pub fn sublattice_index(
    sup: &LatticeBasis,
    sub: &LatticeBasis,
    opts: &LatticeOptions,
) -> Result<LatticeIndex, LatticeError> {
    if sup.dim != sub.dim {
        return Err(LatticeError::DimensionMismatch {
            expected: sup.dim,
            found: sub.dim,
        });
    }
    let c = compare(sup.dim, &sup.rows, &sub.rows, opts)?;
    if c.rank_union > c.rank_super || c.d_union != c.d_super {
        return Err(LatticeError::NotContained);
    }
    if c.rank_extra < c.rank_super {
        return Ok(LatticeIndex::Infinite);
    }
    let (q, r) = c.d_extra.div_rem(&c.d_super);
    debug_assert!(r.is_zero() && q.is_positive());
    Ok(LatticeIndex::Finite(q))
}
