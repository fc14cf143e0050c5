//! Finite abelian groups presented as products of cyclic groups `Z_a1 x ... x Z_ak`.
//!
//! Elements are residue tuples. The presentation is kept exactly as written: no
//! reordering and no invariant-factor normalization, because the tripod bases and
//! the claw quadrics are built from the factors as given.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("malformed group spec {text:?}: {reason}")]
    Malformed { text: String, reason: String },
    #[error("cyclic factor Z{0} is invalid: every factor must be at least 2")]
    FactorTooSmall(u64),
    #[error("group order overflows")]
    OrderOverflow,
    #[error("element {element:?} does not belong to {spec}")]
    Mismatch { element: Vec<u32>, spec: String },
    #[error("factor index {index} out of range 1..={k}")]
    FactorIndex { index: usize, k: usize },
}

/// A finite abelian group `Z_a1 x ... x Z_ak`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupSpec {
    factors: Vec<u32>,
    order: usize,
}

/// A group element as a tuple of residues, one per cyclic factor.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement {
    residues: Vec<u32>,
}

impl GroupElement {
    pub fn residues(&self) -> &[u32] {
        &self.residues
    }

    pub fn is_zero(&self) -> bool {
        self.residues.iter().all(|&r| r == 0)
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.residues.len() == 1 {
            write!(f, "{}", self.residues[0])
        } else {
            write!(f, "(")?;
            for (i, r) in self.residues.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{r}")?;
            }
            write!(f, ")")
        }
    }
}

impl Serialize for GroupElement {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.residues.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GroupElement {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(GroupElement {
            residues: Vec::deserialize(deserializer)?,
        })
    }
}

impl GroupSpec {
    pub fn new(factors: Vec<u32>) -> Result<Self, GroupError> {
        if factors.is_empty() {
            return Err(GroupError::Malformed {
                text: String::new(),
                reason: "at least one cyclic factor is required".into(),
            });
        }
        let mut order: usize = 1;
        for &a in &factors {
            if a < 2 {
                return Err(GroupError::FactorTooSmall(a as u64));
            }
            order = order
                .checked_mul(a as usize)
                .ok_or(GroupError::OrderOverflow)?;
        }
        Ok(GroupSpec { factors, order })
    }

    /// The cyclic group `Z_n`.
    pub fn cyclic(n: u32) -> Result<Self, GroupError> {
        Self::new(vec![n])
    }

    pub fn factors(&self) -> &[u32] {
        &self.factors
    }

    pub fn rank(&self) -> usize {
        self.factors.len()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `G x H`, factors of `self` first.
    pub fn product(&self, other: &GroupSpec) -> GroupSpec {
        let mut factors = self.factors.clone();
        factors.extend_from_slice(&other.factors);
        GroupSpec {
            factors,
            order: self.order * other.order,
        }
    }

    pub fn zero(&self) -> GroupElement {
        GroupElement {
            residues: vec![0; self.factors.len()],
        }
    }

    /// Builds an element, reducing each residue modulo its factor.
    pub fn element(&self, residues: &[i64]) -> Result<GroupElement, GroupError> {
        if residues.len() != self.factors.len() {
            return Err(GroupError::Mismatch {
                element: residues.iter().map(|&r| r as u32).collect(),
                spec: self.to_string(),
            });
        }
        Ok(GroupElement {
            residues: residues
                .iter()
                .zip(&self.factors)
                .map(|(&r, &a)| r.rem_euclid(a as i64) as u32)
                .collect(),
        })
    }

    pub fn contains(&self, x: &GroupElement) -> bool {
        x.residues.len() == self.factors.len()
            && x.residues.iter().zip(&self.factors).all(|(&r, &a)| r < a)
    }

    fn check(&self, x: &GroupElement) -> Result<(), GroupError> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(GroupError::Mismatch {
                element: x.residues.clone(),
                spec: self.to_string(),
            })
        }
    }

    pub fn add(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement, GroupError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.add_unchecked(a, b))
    }

    pub fn neg(&self, a: &GroupElement) -> Result<GroupElement, GroupError> {
        self.check(a)?;
        Ok(self.neg_unchecked(a))
    }

    pub fn sub(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement, GroupError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.sub_unchecked(a, b))
    }

    pub(crate) fn add_unchecked(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        GroupElement {
            residues: a
                .residues
                .iter()
                .zip(&b.residues)
                .zip(&self.factors)
                .map(|((&x, &y), &m)| (x + y) % m)
                .collect(),
        }
    }

    pub(crate) fn neg_unchecked(&self, a: &GroupElement) -> GroupElement {
        GroupElement {
            residues: a
                .residues
                .iter()
                .zip(&self.factors)
                .map(|(&x, &m)| (m - x) % m)
                .collect(),
        }
    }

    pub(crate) fn sub_unchecked(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        GroupElement {
            residues: a
                .residues
                .iter()
                .zip(&b.residues)
                .zip(&self.factors)
                .map(|((&x, &y), &m)| (x + m - y) % m)
                .collect(),
        }
    }

    pub(crate) fn add_assign_unchecked(&self, acc: &mut GroupElement, b: &GroupElement) {
        for ((x, &y), &m) in acc.residues.iter_mut().zip(&b.residues).zip(&self.factors) {
            *x = (*x + y) % m;
        }
    }

    pub(crate) fn sum<'a>(
        &self,
        items: impl IntoIterator<Item = &'a GroupElement>,
    ) -> GroupElement {
        let mut acc = self.zero();
        for x in items {
            self.add_assign_unchecked(&mut acc, x);
        }
        acc
    }

    /// All elements in lexicographic mixed-radix order, zero first.
    pub fn elements(&self) -> Vec<GroupElement> {
        (0..self.order).map(|i| self.element_at(i)).collect()
    }

    /// Position of `x` in [`GroupSpec::elements`] order.
    pub fn index_of(&self, x: &GroupElement) -> usize {
        x.residues
            .iter()
            .zip(&self.factors)
            .fold(0usize, |acc, (&r, &a)| acc * a as usize + r as usize)
    }

    /// Inverse of [`GroupSpec::index_of`].
    pub fn element_at(&self, mut index: usize) -> GroupElement {
        let mut residues = vec![0u32; self.factors.len()];
        for (slot, &a) in residues.iter_mut().zip(&self.factors).rev() {
            *slot = (index % a as usize) as u32;
            index /= a as usize;
        }
        GroupElement { residues }
    }

    /// `m_j`: the image of `m` under the embedding of the `j`-th factor (1-based).
    pub fn unit_embed(&self, j: usize, m: i64) -> Result<GroupElement, GroupError> {
        if j == 0 || j > self.factors.len() {
            return Err(GroupError::FactorIndex {
                index: j,
                k: self.factors.len(),
            });
        }
        let mut x = self.zero();
        x.residues[j - 1] = m.rem_euclid(self.factors[j - 1] as i64) as u32;
        Ok(x)
    }

    /// Order of the element: the lcm of the residue orders.
    pub fn element_order(&self, x: &GroupElement) -> u64 {
        x.residues
            .iter()
            .zip(&self.factors)
            .fold(1u64, |acc, (&r, &a)| {
                let o = a as u64 / num_integer::gcd(r as u64, a as u64);
                num_integer::lcm(acc, o)
            })
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.factors.iter().enumerate() {
            if i > 0 {
                write!(f, "x")?;
            }
            write!(f, "Z{a}")?;
        }
        Ok(())
    }
}

/// Parses `Z<int> ( "x" Z<int> )*`, e.g. `Z2xZ3`.
pub fn parse_group_spec(text: &str) -> Result<GroupSpec, GroupError> {
    let malformed = |reason: &str| GroupError::Malformed {
        text: text.to_string(),
        reason: reason.into(),
    };
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(malformed("empty"));
    }
    let mut factors = Vec::new();
    for part in trimmed.split('x') {
        let digits = part
            .strip_prefix('Z')
            .ok_or_else(|| malformed("each factor must look like Z<int>"))?;
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(malformed("expected a decimal order after Z"));
        }
        let a: u64 = digits
            .parse()
            .map_err(|_| malformed("factor order too large"))?;
        if a < 2 {
            return Err(GroupError::FactorTooSmall(a));
        }
        factors.push(u32::try_from(a).map_err(|_| malformed("factor order too large"))?);
    }
    GroupSpec::new(factors)
}

impl FromStr for GroupSpec {
    type Err = GroupError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_group_spec(s)
    }
}

impl Serialize for GroupSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GroupSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_group_spec(&text).map_err(serde::de::Error::custom)
    }
}
