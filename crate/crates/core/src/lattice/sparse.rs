//! Sparse integer elimination with unit pivots.
//!
//! Pivoting on a `±1` entry is a unimodular step that splits off an invariant factor of
//! 1, so rank and the product of invariant factors can be read off a sparse elimination
//! that only falls back to a dense Smith form for whatever has no unit entries left.
//! Pivot columns are chosen by smallest live count to keep fill-in low.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use num_bigint::BigInt;
use num_traits::One;

use super::coeff::{Coeff, Overflow};
use super::dense::IntegerMatrix;
use super::{CancelToken, LatticeError};

/// A sparse row: `(column, nonzero coefficient)` pairs sorted by column.
pub(crate) type Row<C> = Vec<(usize, C)>;

/// Outer result: cancellation or other hard errors. Inner: `i128` overflow.
pub(crate) type Attempt<T> = Result<Result<T, Overflow>, LatticeError>;

/// `a + k * b`.
pub(crate) fn axpy<C: Coeff>(a: &Row<C>, k: &C, b: &Row<C>) -> Result<Row<C>, Overflow> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let ca = a.get(i).map_or(usize::MAX, |x| x.0);
        let cb = b.get(j).map_or(usize::MAX, |x| x.0);
        if ca < cb {
            out.push(a[i].clone());
            i += 1;
        } else if cb < ca {
            let v = k.mul(&b[j].1)?;
            if !v.is_zero() {
                out.push((cb, v));
            }
            j += 1;
        } else {
            let v = a[i].1.add(&k.mul(&b[j].1)?)?;
            if !v.is_zero() {
                out.push((ca, v));
            }
            i += 1;
            j += 1;
        }
    }
    Ok(out)
}

/// `x * a + y * b`.
pub(crate) fn lincomb<C: Coeff>(x: &C, a: &Row<C>, y: &C, b: &Row<C>) -> Result<Row<C>, Overflow> {
    let scaled: Row<C> = a
        .iter()
        .map(|(c, v)| x.mul(v).map(|v| (*c, v)))
        .filter(|r| r.as_ref().map_or(true, |(_, v)| !v.is_zero()))
        .collect::<Result<_, _>>()?;
    axpy(&scaled, y, b)
}

pub(crate) fn coefficient<C>(row: &Row<C>, col: usize) -> Option<&C> {
    row.binary_search_by_key(&col, |x| x.0)
        .ok()
        .map(|i| &row[i].1)
}

pub(crate) fn convert_rows<C: Coeff>(
    rows: &[Vec<(usize, BigInt)>],
) -> Result<Vec<Row<C>>, Overflow> {
    rows.iter()
        .map(|r| {
            r.iter()
                .map(|(c, v)| C::from_big(v).map(|v| (*c, v)))
                .collect()
        })
        .collect()
}

/// One unit pivot: `row` had coefficient `unit = ±1` at `col` when it was chosen.
#[derive(Clone, Debug)]
pub(crate) struct Pivot<C> {
    pub col: usize,
    pub unit: C,
    pub row: Row<C>,
}

#[derive(Debug)]
pub(crate) struct Elimination<C> {
    pub pivots: Vec<Pivot<C>>,
    /// Rows left after all unit pivots, none of which touch a pivot column.
    pub remainder: Vec<Row<C>>,
}

impl<C: Coeff> Elimination<C> {
    pub fn pivot_count(&self) -> usize {
        self.pivots.len()
    }
}

/// Eliminates with unit pivots until none remain.
pub(crate) fn eliminate<C: Coeff>(
    input: Vec<Row<C>>,
    dim: usize,
    keep_pivots: bool,
    cancel: Option<&CancelToken>,
) -> Attempt<Elimination<C>> {
    let mut rows: Vec<Option<Row<C>>> = input
        .into_iter()
        .map(|r| (!r.is_empty()).then_some(r))
        .collect();
    let mut col_rows: Vec<Vec<usize>> = vec![Vec::new(); dim];
    let mut col_count = vec![0usize; dim];
    for (i, r) in rows.iter().enumerate() {
        for (c, _) in r.iter().flatten() {
            if *c >= dim {
                return Err(LatticeError::DimensionMismatch {
                    expected: dim,
                    found: c + 1,
                });
            }
            col_rows[*c].push(i);
            col_count[*c] += 1;
        }
    }
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = (0..dim)
        .filter(|&c| col_count[c] > 0)
        .map(|c| Reverse((col_count[c], c)))
        .collect();
    let mut pivots = Vec::new();
    let mut touched = Vec::new();
    let mut steps = 0usize;

    while let Some(Reverse((count, col))) = heap.pop() {
        if count != col_count[col] || count == 0 {
            continue;
        }
        steps += 1;
        if steps.is_multiple_of(256) {
            CancelToken::check(cancel)?;
        }
        let mut live: Vec<usize> = col_rows[col]
            .iter()
            .copied()
            .filter(|&r| {
                rows[r]
                    .as_ref()
                    .is_some_and(|row| coefficient(row, col).is_some())
            })
            .collect();
        live.sort_unstable();
        live.dedup();
        col_rows[col].clone_from(&live);
        let pivot_id = live
            .iter()
            .copied()
            .filter(|&r| coefficient(rows[r].as_ref().expect("live"), col).is_some_and(C::is_unit))
            .min_by_key(|&r| (rows[r].as_ref().expect("live").len(), r));
        let Some(p) = pivot_id else { continue };
        let pivot = rows[p].take().expect("live");
        let unit = coefficient(&pivot, col).expect("pivot entry").clone();
        touched.clear();
        for &r in live.iter().filter(|&&r| r != p) {
            let old = rows[r].take().expect("live");
            let a = coefficient(&old, col).expect("live entry");
            let k = match a.mul(&unit).and_then(|x| x.neg()) {
                Ok(k) => k,
                Err(o) => return Ok(Err(o)),
            };
            let new = match axpy(&old, &k, &pivot) {
                Ok(v) => v,
                Err(o) => return Ok(Err(o)),
            };
            for (j, _) in &pivot {
                let before = coefficient(&old, *j).is_some();
                let after = coefficient(&new, *j).is_some();
                match (before, after) {
                    (false, true) => {
                        col_count[*j] += 1;
                        col_rows[*j].push(r);
                    }
                    (true, false) => col_count[*j] -= 1,
                    _ => {}
                }
            }
            if !new.is_empty() {
                rows[r] = Some(new);
            }
        }
        for (j, _) in &pivot {
            col_count[*j] -= 1;
            touched.push(*j);
        }
        for &j in &touched {
            if col_count[j] > 0 {
                heap.push(Reverse((col_count[j], j)));
            }
        }
        if keep_pivots {
            pivots.push(Pivot {
                col,
                unit,
                row: pivot,
            });
        } else {
            pivots.push(Pivot {
                col,
                unit,
                row: Vec::new(),
            });
        }
    }
    let remainder = rows.into_iter().flatten().collect();
    Ok(Ok(Elimination { pivots, remainder }))
}

/// Rank and product of the nonzero invariant factors of the remainder rows.
pub(crate) fn dense_rank_and_divisor<C: Coeff>(
    rows: &[Row<C>],
    cancel: Option<&CancelToken>,
) -> Result<(usize, BigInt), LatticeError> {
    if rows.is_empty() {
        return Ok((0, BigInt::one()));
    }
    let mut cols: Vec<usize> = rows.iter().flat_map(|r| r.iter().map(|x| x.0)).collect();
    cols.sort_unstable();
    cols.dedup();
    let index: HashMap<usize, usize> = cols.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut m = IntegerMatrix::zeros(rows.len(), cols.len());
    for (i, r) in rows.iter().enumerate() {
        for (c, v) in r {
            m.set(i, index[c], v.to_big());
        }
    }
    let factors = m.invariant_factors_with(cancel)?;
    let d = factors.iter().fold(BigInt::one(), |acc, x| acc * x);
    Ok((factors.len(), d))
}

/// Rank and product of nonzero invariant factors (the gcd of maximal nonzero minors).
pub(crate) fn rank_and_divisor_in<C: Coeff>(
    rows: Vec<Row<C>>,
    dim: usize,
    cancel: Option<&CancelToken>,
) -> Attempt<(usize, BigInt)> {
    let e = match eliminate(rows, dim, false, cancel)? {
        Ok(e) => e,
        Err(o) => return Ok(Err(o)),
    };
    let (r, d) = dense_rank_and_divisor(&e.remainder, cancel)?;
    Ok(Ok((e.pivot_count() + r, d)))
}

/// Reduces `v` by recorded pivots, in pivot order, so that no pivot column survives.
pub(crate) fn reduce_by_pivots<C: Coeff>(
    v: &Row<C>,
    pivots: &[Pivot<C>],
    step_of_col: &HashMap<usize, usize>,
) -> Result<Row<C>, Overflow> {
    let mut acc: HashMap<usize, C> = v.iter().cloned().collect();
    let mut queue: BinaryHeap<Reverse<usize>> = v
        .iter()
        .filter_map(|(c, _)| step_of_col.get(c))
        .map(|&s| Reverse(s))
        .collect();
    while let Some(Reverse(s)) = queue.pop() {
        let p = &pivots[s];
        let Some(a) = acc.get(&p.col) else { continue };
        let k = a.mul(&p.unit)?.neg()?;
        for (j, x) in &p.row {
            let add = k.mul(x)?;
            let entry = acc.entry(*j);
            let fresh = matches!(entry, std::collections::hash_map::Entry::Vacant(_));
            let value = entry.or_insert_with(C::zero);
            *value = value.add(&add)?;
            if value.is_zero() {
                acc.remove(j);
            } else if fresh {
                if let Some(&t) = step_of_col.get(j) {
                    debug_assert!(t > s, "pivot rows never contain earlier pivot columns");
                    queue.push(Reverse(t));
                }
            }
        }
    }
    let mut out: Row<C> = acc.into_iter().collect();
    out.sort_unstable_by_key(|x| x.0);
    Ok(out)
}

/// Column of a pivot to its step index.
pub(crate) fn pivot_index<C>(pivots: &[Pivot<C>]) -> HashMap<usize, usize> {
    pivots.iter().enumerate().map(|(i, p)| (p.col, i)).collect()
}
