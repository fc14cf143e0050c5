//! Incremental integer row echelon form with optional transform tracking.
//!
//! Inserting the columns of `A` one by one while tracking how each echelon row was
//! built from unit vectors is the same as reducing `[A^T | I]` to Hermite form: the
//! inputs that reduce to zero carry kernel vectors in their transforms.

use super::coeff::{Coeff, Overflow};
use super::sparse::{axpy, lincomb, Row};

struct EchelonRow<C> {
    /// Leading coefficient is positive and sits at `vec[0]`.
    vec: Row<C>,
    transform: Row<C>,
}

pub(crate) struct Echelon<C> {
    rows: Vec<EchelonRow<C>>,
}

fn negate<C: Coeff>(row: &mut Row<C>) -> Result<(), Overflow> {
    for (_, v) in row.iter_mut() {
        *v = v.neg()?;
    }
    Ok(())
}

impl<C: Coeff> Echelon<C> {
    pub fn new() -> Self {
        Echelon { rows: Vec::new() }
    }

    /// Echelon rows in pivot order.
    pub fn into_rows(self) -> Vec<Row<C>> {
        self.rows.into_iter().map(|r| r.vec).collect()
    }

    /// Inserts `v` with transform `t`; returns the transform if `v` reduced to zero.
    pub fn insert(&mut self, mut v: Row<C>, mut t: Row<C>) -> Result<Option<Row<C>>, Overflow> {
        loop {
            let Some((p, b)) = v.first().cloned() else {
                return Ok(Some(t));
            };
            match self.rows.binary_search_by_key(&p, |r| r.vec[0].0) {
                Err(i) => {
                    if b.is_negative() {
                        negate(&mut v)?;
                        negate(&mut t)?;
                    }
                    self.rows.insert(
                        i,
                        EchelonRow {
                            vec: v,
                            transform: t,
                        },
                    );
                    return Ok(None);
                }
                Ok(i) => {
                    let h = &mut self.rows[i];
                    let a = h.vec[0].1.clone();
                    if a.divides(&b) {
                        let q = b.div_floor(&a)?.neg()?;
                        v = axpy(&v, &q, &h.vec)?;
                        t = axpy(&t, &q, &h.transform)?;
                    } else {
                        let (g, x, y) = C::ext_gcd(&a, &b)?;
                        let (ag, bg) = (a.div_floor(&g)?, b.div_floor(&g)?.neg()?);
                        let new_vec = lincomb(&x, &h.vec, &y, &v)?;
                        let new_t = lincomb(&x, &h.transform, &y, &t)?;
                        v = lincomb(&bg, &h.vec, &ag, &v)?;
                        t = lincomb(&bg, &h.transform, &ag, &t)?;
                        h.vec = new_vec;
                        h.transform = new_t;
                    }
                }
            }
        }
    }
}
