//! Dense arbitrary-precision integer matrices with Hermite and Smith normal forms.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use super::{CancelToken, LatticeError};

#[derive(Clone, PartialEq, Eq)]
pub struct IntegerMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<BigInt>,
}

impl IntegerMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntegerMatrix {
            rows,
            cols,
            entries: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntegerMatrix::zeros(n, n);
        for i in 0..n {
            m.entries[i * n + i] = BigInt::one();
        }
        m
    }

    /// Builds a matrix from rows; every row must have length `cols`.
    pub fn from_rows<T: Into<BigInt> + Clone>(
        cols: usize,
        rows: &[Vec<T>],
    ) -> Result<Self, LatticeError> {
        let mut entries = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(LatticeError::DimensionMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
            entries.extend(r.iter().cloned().map(Into::into));
        }
        Ok(IntegerMatrix {
            rows: rows.len(),
            cols,
            entries,
        })
    }

    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        IntegerMatrix::from_rows(cols, rows).expect("rectangular input")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &BigInt {
        &self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: impl Into<BigInt>) {
        self.entries[r * self.cols + c] = v.into();
    }

    pub fn row(&self, r: usize) -> &[BigInt] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Zero::is_zero)
    }

    pub fn transpose(&self) -> Self {
        let mut t = IntegerMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.entries[c * self.rows + r] = self.get(r, c).clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &IntegerMatrix) -> Result<IntegerMatrix, LatticeError> {
        if self.cols != other.rows {
            return Err(LatticeError::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = IntegerMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        out.entries[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn determinant(&self) -> Result<BigInt, LatticeError> {
        if self.rows != self.cols {
            return Err(LatticeError::DimensionMismatch {
                expected: self.rows,
                found: self.cols,
            });
        }
        let n = self.rows;
        if n == 0 {
            return Ok(BigInt::one());
        }
        let mut a = self.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n {
            if a.get(k, k).is_zero() {
                match (k + 1..n).find(|&i| !a.get(i, k).is_zero()) {
                    Some(i) => {
                        a.swap_rows(i, k);
                        sign = -sign;
                    }
                    None => return Ok(BigInt::zero()),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = (a.get(i, j) * a.get(k, k) - a.get(i, k) * a.get(k, j)) / &prev;
                    a.set(i, j, v);
                }
            }
            prev = a.get(k, k).clone();
        }
        Ok(sign * a.get(n - 1, n - 1).clone())
    }

    /// Rational rank.
    pub fn rank(&self) -> usize {
        let (h, _) = self.hnf();
        (0..h.rows)
            .filter(|&r| h.row(r).iter().any(|x| !x.is_zero()))
            .count()
    }

    pub(crate) fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.entries.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for r in 0..self.rows {
            self.entries.swap(r * self.cols + a, r * self.cols + b);
        }
    }

    /// `row[dst] += k * row[src]`.
    fn add_row_multiple(&mut self, dst: usize, src: usize, k: &BigInt) {
        if k.is_zero() {
            return;
        }
        for c in 0..self.cols {
            let v = &self.entries[src * self.cols + c];
            if !v.is_zero() {
                let add = k * v;
                self.entries[dst * self.cols + c] += add;
            }
        }
    }

    /// `col[dst] += k * col[src]`.
    fn add_col_multiple(&mut self, dst: usize, src: usize, k: &BigInt) {
        if k.is_zero() {
            return;
        }
        for r in 0..self.rows {
            let v = &self.entries[r * self.cols + src];
            if !v.is_zero() {
                let add = k * v;
                self.entries[r * self.cols + dst] += add;
            }
        }
    }

    fn negate_row(&mut self, r: usize) {
        for c in 0..self.cols {
            let v = &mut self.entries[r * self.cols + c];
            *v = -std::mem::take(v);
        }
    }

    /// Rows `a`, `b` become `x*a + y*b` and `p*a + q*b`; `[[x, y], [p, q]]` must be unimodular.
    fn combine_rows(&mut self, a: usize, b: usize, m: [&BigInt; 4]) {
        let [x, y, p, q] = m;
        for c in 0..self.cols {
            let va = self.entries[a * self.cols + c].clone();
            let vb = self.entries[b * self.cols + c].clone();
            if va.is_zero() && vb.is_zero() {
                continue;
            }
            self.entries[a * self.cols + c] = x * &va + y * &vb;
            self.entries[b * self.cols + c] = p * &va + q * &vb;
        }
    }

    fn combine_cols(&mut self, a: usize, b: usize, m: [&BigInt; 4]) {
        let [x, y, p, q] = m;
        for r in 0..self.rows {
            let va = self.entries[r * self.cols + a].clone();
            let vb = self.entries[r * self.cols + b].clone();
            if va.is_zero() && vb.is_zero() {
                continue;
            }
            self.entries[r * self.cols + a] = x * &va + y * &vb;
            self.entries[r * self.cols + b] = p * &va + q * &vb;
        }
    }

    /// Row-style Hermite normal form: `H = U * A` with `U` unimodular, `H` in echelon
    /// form with positive pivots and entries above each pivot reduced into `[0, pivot)`.
    pub fn hnf(&self) -> (IntegerMatrix, IntegerMatrix) {
        self.hnf_with(None)
            .expect("no cancellation without a token")
    }

    pub fn hnf_with(
        &self,
        cancel: Option<&CancelToken>,
    ) -> Result<(IntegerMatrix, IntegerMatrix), LatticeError> {
        let mut h = self.clone();
        let mut u = IntegerMatrix::identity(self.rows);
        let mut pivot_row = 0;
        for c in 0..self.cols {
            if pivot_row == self.rows {
                break;
            }
            CancelToken::check(cancel)?;
            for r in pivot_row + 1..self.rows {
                let b = h.get(r, c).clone();
                if b.is_zero() {
                    continue;
                }
                let a = h.get(pivot_row, c).clone();
                let e = a.extended_gcd(&b);
                let (ag, bg) = (&a / &e.gcd, &b / &e.gcd);
                let neg_bg = -bg;
                let m = [&e.x, &e.y, &neg_bg, &ag];
                h.combine_rows(pivot_row, r, m);
                u.combine_rows(pivot_row, r, m);
            }
            if h.get(pivot_row, c).is_zero() {
                continue;
            }
            if h.get(pivot_row, c).is_negative() {
                h.negate_row(pivot_row);
                u.negate_row(pivot_row);
            }
            let p = h.get(pivot_row, c).clone();
            for r in 0..pivot_row {
                let q = -h.get(r, c).div_floor(&p);
                h.add_row_multiple(r, pivot_row, &q);
                u.add_row_multiple(r, pivot_row, &q);
            }
            pivot_row += 1;
        }
        Ok((h, u))
    }

    /// Smith normal form: `D = U * A * V`, diagonal with `d_i | d_(i+1)` and `d_i >= 0`.
    pub fn snf(&self) -> (IntegerMatrix, IntegerMatrix, IntegerMatrix) {
        let (d, u, v) = self
            .snf_impl(true, None)
            .expect("no cancellation without a token");
        (d, u.expect("tracked"), v.expect("tracked"))
    }

    /// Nonzero invariant factors, in divisibility order.
    pub fn invariant_factors(&self) -> Vec<BigInt> {
        self.invariant_factors_with(None)
            .expect("no cancellation without a token")
    }

    pub(crate) fn invariant_factors_with(
        &self,
        cancel: Option<&CancelToken>,
    ) -> Result<Vec<BigInt>, LatticeError> {
        let (d, _, _) = self.snf_impl(false, cancel)?;
        Ok((0..d.rows.min(d.cols))
            .map(|i| d.get(i, i).clone())
            .filter(|x| !x.is_zero())
            .collect())
    }

    #[allow(clippy::type_complexity)]
    fn snf_impl(
        &self,
        track: bool,
        cancel: Option<&CancelToken>,
    ) -> Result<(IntegerMatrix, Option<IntegerMatrix>, Option<IntegerMatrix>), LatticeError> {
        let (m, n) = (self.rows, self.cols);
        let mut d = self.clone();
        let mut u = track.then(|| IntegerMatrix::identity(m));
        let mut v = track.then(|| IntegerMatrix::identity(n));
        for t in 0..m.min(n) {
            CancelToken::check(cancel)?;
            // smallest nonzero entry of the trailing block becomes the pivot
            let Some((pr, pc)) = d.smallest_entry(t) else {
                break;
            };
            d.swap_rows(t, pr);
            d.swap_cols(t, pc);
            if let Some(u) = u.as_mut() {
                u.swap_rows(t, pr);
            }
            if let Some(v) = v.as_mut() {
                v.swap_cols(t, pc);
            }
            loop {
                let mut clean = true;
                for r in t + 1..m {
                    let b = d.get(r, t).clone();
                    if b.is_zero() {
                        continue;
                    }
                    let a = d.get(t, t).clone();
                    if (&b % &a).is_zero() {
                        let q = -(&b / &a);
                        d.add_row_multiple(r, t, &q);
                        if let Some(u) = u.as_mut() {
                            u.add_row_multiple(r, t, &q);
                        }
                    } else {
                        let e = a.extended_gcd(&b);
                        let (ag, bg) = (&a / &e.gcd, -(&b / &e.gcd));
                        let mm = [&e.x, &e.y, &bg, &ag];
                        d.combine_rows(t, r, mm);
                        if let Some(u) = u.as_mut() {
                            u.combine_rows(t, r, mm);
                        }
                        clean = false;
                    }
                }
                for c in t + 1..n {
                    let b = d.get(t, c).clone();
                    if b.is_zero() {
                        continue;
                    }
                    let a = d.get(t, t).clone();
                    if (&b % &a).is_zero() {
                        let q = -(&b / &a);
                        d.add_col_multiple(c, t, &q);
                        if let Some(v) = v.as_mut() {
                            v.add_col_multiple(c, t, &q);
                        }
                    } else {
                        let e = a.extended_gcd(&b);
                        let (ag, bg) = (&a / &e.gcd, -(&b / &e.gcd));
                        let mm = [&e.x, &e.y, &bg, &ag];
                        d.combine_cols(t, c, mm);
                        if let Some(v) = v.as_mut() {
                            v.combine_cols(t, c, mm);
                        }
                        clean = false;
                    }
                }
                if !clean {
                    continue;
                }
                // the pivot must divide the whole trailing block
                let p = d.get(t, t).clone();
                let bad = (t + 1..m).find(|&r| (t + 1..n).any(|c| !(d.get(r, c) % &p).is_zero()));
                match bad {
                    Some(r) => {
                        let one = BigInt::one();
                        d.add_row_multiple(t, r, &one);
                        if let Some(u) = u.as_mut() {
                            u.add_row_multiple(t, r, &one);
                        }
                    }
                    None => break,
                }
            }
            if d.get(t, t).is_negative() {
                d.negate_row(t);
                if let Some(u) = u.as_mut() {
                    u.negate_row(t);
                }
            }
        }
        Ok((d, u, v))
    }

    fn smallest_entry(&self, t: usize) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize, BigInt)> = None;
        for r in t..self.rows {
            for c in t..self.cols {
                let x = self.get(r, c);
                if x.is_zero() {
                    continue;
                }
                let a = x.abs();
                if best.as_ref().is_none_or(|b| a < b.2) {
                    let unit = a.is_one();
                    best = Some((r, c, a));
                    if unit {
                        return best.map(|(r, c, _)| (r, c));
                    }
                }
            }
        }
        best.map(|(r, c, _)| (r, c))
    }
}

impl fmt::Debug for IntegerMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<String>> = (0..self.rows)
            .map(|r| self.row(r).iter().map(|x| x.to_string()).collect())
            .collect();
        write!(f, "IntegerMatrix{rows:?}")
    }
}

/// JSON number when it fits in 53 bits, decimal string otherwise.
pub(crate) fn json_integer(x: &BigInt) -> serde_json::Value {
    const LIMIT: i64 = 1 << 53;
    match x.to_i64() {
        Some(v) if v.abs() < LIMIT => serde_json::Value::from(v),
        _ => serde_json::Value::String(x.to_string()),
    }
}

impl Serialize for IntegerMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let entries: Vec<Vec<serde_json::Value>> = (0..self.rows)
            .map(|r| self.row(r).iter().map(json_integer).collect())
            .collect();
        let mut st = s.serialize_struct("IntegerMatrix", 3)?;
        st.serialize_field("rows", &self.rows)?;
        st.serialize_field("cols", &self.cols)?;
        st.serialize_field("entries", &entries)?;
        st.end()
    }
}
