//! Admissible matrices and the tripod generators built from them.
//!
//! A `g x g` integer matrix `M`, rows and columns indexed by group elements, is admissible
//! when every row, every column and every class `{(i, j) : i + j = k}` sums to zero. An
//! admissible matrix is exactly a binomial relation among tripod flows: the entry in row
//! `i`, column `j` is the exponent of the flow with leaf values `[j, i, -i-j]`. Columns
//! carry the first leaf, which is the reading under which the worked `Z_3` example
//! `x[0,1,2]*x[1,2,0]*x[2,0,1] - x[0,2,1]*x[1,0,2]*x[2,1,0]` comes out as displayed.
//! Admissibility is symmetric under transposition, so nothing else depends on the choice.

use std::fmt;
use std::str::FromStr;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::flow::{Binomial, FlowError, FlowSpace};
use crate::group::{GroupElement, GroupError, GroupSpec};
use crate::tree::Tree;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AdmissibleError {
    #[error("matrix must be {expected}x{expected}, found {found}")]
    WrongSize { expected: usize, found: String },
    #[error("matrix is not admissible: {0}")]
    NotAdmissible(AdmissibilityReport),
    #[error("({i}, {j}) is not in K: need i != 0 and j not in {{0, 1}} in Z{g}")]
    NotInK { g: u32, i: u32, j: u32 },
    #[error("elementary matrix needs i != a and j != b")]
    DegenerateElementary,
    #[error("B-matrix needs j != 0 in G and k != 0 in H")]
    DegenerateB,
    #[error("basis for {group} must have {expected} matrices, found {found}")]
    BasisCardinality {
        group: String,
        expected: usize,
        found: usize,
    },
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

/// A condition of admissibility that fails, with the offending sum.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "condition", rename_all = "kebab-case")]
pub enum Violation {
    Row { row: usize, sum: i64 },
    Column { column: usize, sum: i64 },
    Class { class: usize, sum: i64 },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AdmissibilityReport {
    pub violations: Vec<Violation>,
}

impl AdmissibilityReport {
    pub fn is_admissible(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for AdmissibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .violations
            .iter()
            .map(|v| match v {
                Violation::Row { row, sum } => format!("row {row} sums to {sum}"),
                Violation::Column { column, sum } => format!("column {column} sums to {sum}"),
                Violation::Class { class, sum } => format!("class {class} sums to {sum}"),
            })
            .collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// Checks the three admissibility conditions; indices are element indices of `group`.
pub fn check_admissible(
    group: &GroupSpec,
    rows: &[Vec<i64>],
) -> Result<AdmissibilityReport, AdmissibleError> {
    let g = group.order();
    if rows.len() != g || rows.iter().any(|r| r.len() != g) {
        let found = format!("{}x{}", rows.len(), rows.first().map_or(0, Vec::len));
        return Err(AdmissibleError::WrongSize { expected: g, found });
    }
    let elements = group.elements();
    let mut report = AdmissibilityReport::default();
    for (i, r) in rows.iter().enumerate() {
        let sum: i64 = r.iter().sum();
        if sum != 0 {
            report.violations.push(Violation::Row { row: i, sum });
        }
    }
    for j in 0..g {
        let sum: i64 = rows.iter().map(|r| r[j]).sum();
        if sum != 0 {
            report.violations.push(Violation::Column { column: j, sum });
        }
    }
    let mut class = vec![0i64; g];
    for (i, r) in rows.iter().enumerate() {
        for (j, &m) in r.iter().enumerate() {
            class[group.index_of(&group.add_unchecked(&elements[i], &elements[j]))] += m;
        }
    }
    for (k, &sum) in class.iter().enumerate() {
        if sum != 0 {
            report.violations.push(Violation::Class { class: k, sum });
        }
    }
    Ok(report)
}

pub fn is_admissible(group: &GroupSpec, rows: &[Vec<i64>]) -> Result<bool, AdmissibleError> {
    Ok(check_admissible(group, rows)?.is_admissible())
}

/// An admissible matrix for a group, rows and columns in element order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdmissibleMatrix {
    group: GroupSpec,
    rows: Vec<Vec<i64>>,
    degree: u64,
}

impl AdmissibleMatrix {
    pub fn new(group: GroupSpec, rows: Vec<Vec<i64>>) -> Result<Self, AdmissibleError> {
        let report = check_admissible(&group, &rows)?;
        if !report.is_admissible() {
            return Err(AdmissibleError::NotAdmissible(report));
        }
        let degree = rows
            .iter()
            .flatten()
            .filter(|&&m| m > 0)
            .map(|&m| m as u64)
            .sum();
        Ok(AdmissibleMatrix {
            group,
            rows,
            degree,
        })
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn rows(&self) -> &[Vec<i64>] {
        &self.rows
    }

    pub fn entry(&self, i: usize, j: usize) -> i64 {
        self.rows[i][j]
    }

    /// Sum of the positive entries.
    pub fn degree(&self) -> u64 {
        self.degree
    }

    /// Row-major entries. The tripod exponent vector is the flattening of the transpose.
    pub fn flatten(&self) -> Vec<i64> {
        self.rows.iter().flatten().copied().collect()
    }

    pub fn transpose(&self) -> AdmissibleMatrix {
        let g = self.rows.len();
        let rows = (0..g)
            .map(|i| (0..g).map(|j| self.rows[j][i]).collect())
            .collect();
        AdmissibleMatrix {
            group: self.group.clone(),
            rows,
            degree: self.degree,
        }
    }

    /// The tripod binomial `prod x[j,i,-i-j]^m (m > 0) - prod x[j,i,-i-j]^-m (m < 0)`.
    pub fn to_binomial(&self, space: &FlowSpace) -> Result<Binomial, AdmissibleError> {
        let elements = self.group.elements();
        let (mut lhs, mut rhs) = (Vec::new(), Vec::new());
        for (i, r) in self.rows.iter().enumerate() {
            for (j, &m) in r.iter().enumerate() {
                if m == 0 {
                    continue;
                }
                let third = self
                    .group
                    .neg_unchecked(&self.group.add_unchecked(&elements[i], &elements[j]));
                let flow = space.from_leaves(&[elements[j].clone(), elements[i].clone(), third])?;
                let side = if m > 0 { &mut lhs } else { &mut rhs };
                side.extend(std::iter::repeat_n(flow, m.unsigned_abs() as usize));
            }
        }
        Ok(space.binomial(lhs, rhs)?)
    }

    /// Inverse of [`AdmissibleMatrix::to_binomial`] on the tripod.
    pub fn from_binomial(space: &FlowSpace, b: &Binomial) -> Result<Self, AdmissibleError> {
        let g = space.group().order();
        let mut rows = vec![vec![0i64; g]; g];
        for (idx, c) in b.exponent_vector(space) {
            rows[idx % g][idx / g] += c;
        }
        AdmissibleMatrix::new(space.group().clone(), rows)
    }
}

impl Serialize for AdmissibleMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("AdmissibleMatrix", 3)?;
        st.serialize_field("group", &self.group)?;
        st.serialize_field("entries", &self.rows)?;
        st.serialize_field("degree", &self.degree)?;
        st.end()
    }
}

/// `E^i_j + E^a_b - E^i_b - E^a_j`, rows before columns.
pub fn elementary_a(
    group: &GroupSpec,
    i: &GroupElement,
    a: &GroupElement,
    j: &GroupElement,
    b: &GroupElement,
) -> Result<Vec<Vec<i64>>, AdmissibleError> {
    for x in [i, a, j, b] {
        if !group.contains(x) {
            return Err(GroupError::Mismatch {
                element: x.residues().to_vec(),
                spec: group.to_string(),
            }
            .into());
        }
    }
    if i == a || j == b {
        return Err(AdmissibleError::DegenerateElementary);
    }
    let g = group.order();
    let mut m = vec![vec![0i64; g]; g];
    let (i, a, j, b) = (
        group.index_of(i),
        group.index_of(a),
        group.index_of(j),
        group.index_of(b),
    );
    m[i][j] += 1;
    m[a][b] += 1;
    m[i][b] -= 1;
    m[a][j] -= 1;
    Ok(m)
}

/// Accumulates `A(i, a; j, b)` for `Z_g` with arguments taken mod `g`.
/// `i == a` or `j == b` contributes nothing, as the four terms cancel.
fn add_a(m: &mut [Vec<i64>], g: i64, i: i64, a: i64, j: i64, b: i64) {
    let r = |x: i64| x.rem_euclid(g) as usize;
    m[r(i)][r(j)] += 1;
    m[r(a)][r(b)] += 1;
    m[r(i)][r(b)] -= 1;
    m[r(a)][r(j)] -= 1;
}

/// The generator `X(i, j)` of `adm(Z_g)` for `(i, j)` in `K`.
///
/// Representatives `0..g` decide the case: `2i < g` and `2i > g` use the two telescoping
/// sums, `2i = g` exchanges the roles of `i` and `j` in the tail (and falls back to the
/// first sum when `j = g/2` as well).
pub fn x_matrix(g: u32, i: u32, j: u32) -> Result<AdmissibleMatrix, AdmissibleError> {
    if g < 2 || i == 0 || i >= g || j < 2 || j >= g {
        return Err(AdmissibleError::NotInK { g, i, j });
    }
    let group = GroupSpec::cyclic(g)?;
    let n = g as usize;
    let (g, i, j) = (g as i64, i as i64, j as i64);
    let mut m = vec![vec![0i64; n]; n];
    add_a(&mut m, g, i, 0, j, 0);
    let first = |m: &mut [Vec<i64>]| {
        for t in 1..=i {
            add_a(m, g, i - t, j + t - 1, 1, 0);
        }
    };
    if 2 * i < g {
        first(&mut m);
    } else if 2 * i > g {
        for t in 1..=g - i {
            add_a(&mut m, g, j - t, i + t - 1, 1, 0);
        }
    } else if 2 * j == g {
        first(&mut m);
    } else if 2 * j < g {
        for t in 1..=j {
            add_a(&mut m, g, j - t, i + t - 1, 1, 0);
        }
    } else {
        for t in 1..=g - j {
            add_a(&mut m, g, i - t, j + t - 1, 1, 0);
        }
    }
    AdmissibleMatrix::new(group, m)
}

/// `{X(i, j) : i != 0, j not in {0, 1}}` ordered by `(i, j)`; `(g-1)(g-2)` matrices.
pub fn cyclic_basis(g: u32) -> Result<Vec<AdmissibleMatrix>, AdmissibleError> {
    GroupSpec::cyclic(g)?;
    let mut out = Vec::with_capacity(((g - 1) * (g.saturating_sub(2))) as usize);
    for i in 1..g {
        for j in 2..g {
            out.push(x_matrix(g, i, j)?);
        }
    }
    Ok(out)
}

/// Index of `(x, y)` in `G x H` from the indices of `x` in `G` and `y` in `H`.
fn pair_index(h: usize, x: usize, y: usize) -> usize {
    x * h + y
}

/// The cubic `B(i, j, k, l)` over `G x H`.
pub fn b_matrix(
    g_spec: &GroupSpec,
    h_spec: &GroupSpec,
    i: &GroupElement,
    j: &GroupElement,
    k: &GroupElement,
    l: &GroupElement,
) -> Result<AdmissibleMatrix, AdmissibleError> {
    for (x, s) in [(i, g_spec), (j, g_spec), (k, h_spec), (l, h_spec)] {
        if !s.contains(x) {
            return Err(GroupError::Mismatch {
                element: x.residues().to_vec(),
                spec: s.to_string(),
            }
            .into());
        }
    }
    if j.is_zero() || k.is_zero() {
        return Err(AdmissibleError::DegenerateB);
    }
    let product = g_spec.product(h_spec);
    let h = h_spec.order();
    let n = product.order();
    let gi = |x: &GroupElement| g_spec.index_of(x);
    let hi = |x: &GroupElement| h_spec.index_of(x);
    let ij = g_spec.add_unchecked(i, j);
    let kl = h_spec.add_unchecked(k, l);
    let (zg, zh) = (g_spec.zero(), h_spec.zero());
    let at = |x: &GroupElement, y: &GroupElement| pair_index(h, gi(x), hi(y));
    let mut m = vec![vec![0i64; n]; n];
    m[at(i, k)][at(j, l)] += 1;
    m[at(&ij, &zh)][at(&zg, l)] += 1;
    m[at(i, &zh)][at(&zg, &kl)] += 1;
    m[at(&ij, &zh)][at(&zg, &kl)] -= 1;
    m[at(i, k)][at(&zg, l)] -= 1;
    m[at(i, &zh)][at(j, l)] -= 1;
    AdmissibleMatrix::new(product, m)
}

/// Embeds a matrix over `G` (or `H`) into `G x H` along `x -> (x, 0)` (or `y -> (0, y)`).
fn embed(
    product: &GroupSpec,
    h: usize,
    m: &AdmissibleMatrix,
    first: bool,
) -> Result<AdmissibleMatrix, AdmissibleError> {
    let n = product.order();
    let place = |x: usize| {
        if first {
            pair_index(h, x, 0)
        } else {
            pair_index(h, 0, x)
        }
    };
    let mut out = vec![vec![0i64; n]; n];
    for (r, row) in m.rows().iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            out[place(r)][place(c)] = v;
        }
    }
    AdmissibleMatrix::new(product.clone(), out)
}

fn basis_len(order: usize) -> usize {
    (order - 1) * (order - 2)
}

/// Generators of `adm(G x H)` from generators of `adm(G)` and `adm(H)`, in family order:
/// the six B-families (with transposes), then the two embedded bases.
pub fn product_basis(
    g_spec: &GroupSpec,
    h_spec: &GroupSpec,
    basis_g: &[AdmissibleMatrix],
    basis_h: &[AdmissibleMatrix],
) -> Result<Vec<AdmissibleMatrix>, AdmissibleError> {
    for (spec, basis) in [(g_spec, basis_g), (h_spec, basis_h)] {
        if basis.len() != basis_len(spec.order()) || basis.iter().any(|m| m.group() != spec) {
            return Err(AdmissibleError::BasisCardinality {
                group: spec.to_string(),
                expected: basis_len(spec.order()),
                found: basis.len(),
            });
        }
    }
    let product = g_spec.product(h_spec);
    let g_nonzero: Vec<GroupElement> = g_spec.elements().into_iter().skip(1).collect();
    let h_nonzero: Vec<GroupElement> = h_spec.elements().into_iter().skip(1).collect();
    let (zg, zh) = (g_spec.zero(), h_spec.zero());
    let b = |i: &GroupElement, j: &GroupElement, k: &GroupElement, l: &GroupElement| {
        b_matrix(g_spec, h_spec, i, j, k, l)
    };
    let mut out = Vec::with_capacity(basis_len(product.order()));
    // (1)
    for i in &g_nonzero {
        for j in &g_nonzero {
            for k in &h_nonzero {
                for l in &h_nonzero {
                    out.push(b(i, j, k, l)?);
                }
            }
        }
    }
    // (2)
    let mut fam2 = Vec::new();
    for j in &g_nonzero {
        for k in &h_nonzero {
            for l in &h_nonzero {
                fam2.push(b(&zg, j, k, l)?);
            }
        }
    }
    // (3)
    let mut fam3 = Vec::new();
    for i in &g_nonzero {
        for j in &g_nonzero {
            for k in &h_nonzero {
                fam3.push(b(i, j, k, &zh)?);
            }
        }
    }
    let fam4: Vec<_> = fam2.iter().map(AdmissibleMatrix::transpose).collect();
    let fam5: Vec<_> = fam3.iter().map(AdmissibleMatrix::transpose).collect();
    out.extend(fam2);
    out.extend(fam3);
    out.extend(fam4);
    out.extend(fam5);
    // (6)
    for j in &g_nonzero {
        for k in &h_nonzero {
            out.push(b(&zg, j, k, &zh)?);
        }
    }
    let h = h_spec.order();
    for m in basis_g {
        out.push(embed(&product, h, m, true)?);
    }
    for m in basis_h {
        out.push(embed(&product, h, m, false)?);
    }
    Ok(out)
}

/// How the tripod basis is assembled for a composite cyclic factor.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum TripodMode {
    /// `X(i, j)` generators for every cyclic factor as written.
    #[default]
    DirectCyclic,
    /// Composite factors are first split into prime-power factors.
    Factored,
}

impl fmt::Display for TripodMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TripodMode::DirectCyclic => "direct-cyclic",
            TripodMode::Factored => "factored",
        })
    }
}

impl FromStr for TripodMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "direct-cyclic" => Ok(TripodMode::DirectCyclic),
            "factored" => Ok(TripodMode::Factored),
            other => Err(format!(
                "unknown mode {other:?}; expected direct-cyclic or factored"
            )),
        }
    }
}

/// Prime-power factors of `n` in increasing prime order.
fn prime_powers(mut n: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            let mut q = 1;
            while n.is_multiple_of(p) {
                n /= p;
                q *= p;
            }
            out.push(q);
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Basis of `adm(G)` folded left over the factors of `group`.
fn folded_basis(group: &GroupSpec) -> Result<Vec<AdmissibleMatrix>, AdmissibleError> {
    let factors = group.factors();
    let mut spec = GroupSpec::cyclic(factors[0])?;
    let mut basis = cyclic_basis(factors[0])?;
    for &a in &factors[1..] {
        let h = GroupSpec::cyclic(a)?;
        basis = product_basis(&spec, &h, &basis, &cyclic_basis(a)?)?;
        spec = spec.product(&h);
    }
    Ok(basis)
}

/// Generators of `adm(G)` with `(g-1)(g-2)` elements.
pub fn tripod_basis(
    group: &GroupSpec,
    mode: TripodMode,
) -> Result<Vec<AdmissibleMatrix>, AdmissibleError> {
    let split: Vec<Vec<u32>> = group.factors().iter().map(|&a| prime_powers(a)).collect();
    if mode == TripodMode::DirectCyclic || split.iter().all(|s| s.len() == 1) {
        return folded_basis(group);
    }
    let factored = GroupSpec::new(split.iter().flatten().copied().collect())?;
    let basis = folded_basis(&factored)?;
    // the CRT isomorphism, as an index map from `group` to `factored`
    let image: Vec<usize> = group
        .elements()
        .iter()
        .map(|x| {
            let residues: Vec<i64> = x
                .residues()
                .iter()
                .zip(&split)
                .flat_map(|(&r, qs)| qs.iter().map(move |&q| (r % q) as i64))
                .collect();
            factored.index_of(
                &factored
                    .element(&residues)
                    .expect("residues match the factors"),
            )
        })
        .collect();
    basis
        .into_iter()
        .map(|m| {
            let rows = image
                .iter()
                .map(|&x| image.iter().map(|&y| m.entry(x, y)).collect())
                .collect();
            AdmissibleMatrix::new(group.clone(), rows)
        })
        .collect()
}

/// Tripod invariants: the binomials of [`tripod_basis`].
pub fn tripod_invariants(
    group: &GroupSpec,
    mode: TripodMode,
) -> Result<Vec<Binomial>, AdmissibleError> {
    let space = FlowSpace::new(group.clone(), &Tree::tripod());
    tripod_basis(group, mode)?
        .iter()
        .map(|m| m.to_binomial(&space))
        .collect()
}
