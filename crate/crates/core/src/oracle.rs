//! Independent checks for generated invariant sets.
//!
//! The monomial map sends the flow variable `x_f` to `prod_e y_(e, f(e))`; its matrix has
//! one column `Q_f` per flow, with a single 1 in each edge block. Binomial relations are
//! the kernel of that matrix, so a set of `codim` binomials is a complete intersection on
//! the torus exactly when its exponent vectors span the kernel lattice over `Z`.

use num_bigint::BigInt;
use serde::Serialize;
use thiserror::Error;

use crate::flow::{FlowError, FlowSpace};
use crate::group::GroupSpec;
use crate::lattice::{
    kernel_of_columns, spans, sparse_from_pairs, sublattice_index, IntegerMatrix, LatticeBasis,
    LatticeError, LatticeIndex, LatticeOptions, SparseVector,
};
use crate::par::Execution;
use crate::pipeline::{InvariantSet, DEFAULT_FLOW_CAP};
use crate::tree::Tree;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

#[derive(Clone, Debug)]
pub struct OracleOptions {
    pub flow_cap: Option<usize>,
    pub lattice: LatticeOptions,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            flow_cap: Some(DEFAULT_FLOW_CAP),
            lattice: LatticeOptions::default(),
        }
    }
}

/// Sparse columns `Q_f` in flow order; coordinates are `edge * |G| + element index`.
fn columns(
    space: &FlowSpace,
    cap: Option<usize>,
    execution: Execution,
) -> Result<Vec<SparseVector>, OracleError> {
    let n = space.checked_flow_count(cap)?;
    Ok(execution.map_range(n, |f| {
        space
            .vertex_support(&space.flow_at(f))
            .into_iter()
            .map(|c| (c, BigInt::from(1)))
            .collect()
    }))
}

/// The `(|E| |G|) x |G|^(l-1)` matrix of the monomial map.
pub fn monomial_map_matrix(
    space: &FlowSpace,
    cap: Option<usize>,
) -> Result<IntegerMatrix, OracleError> {
    let cols = columns(space, cap, Execution::default())?;
    let mut m = IntegerMatrix::zeros(space.edge_count() * space.group().order(), cols.len());
    for (j, col) in cols.iter().enumerate() {
        for (r, v) in col {
            m.set(*r, j, v.clone());
        }
    }
    Ok(m)
}

/// Basis of the kernel of the monomial map.
pub fn oracle_kernel(space: &FlowSpace, opts: &OracleOptions) -> Result<LatticeBasis, OracleError> {
    let cols = columns(space, opts.flow_cap, opts.lattice.execution)?;
    Ok(kernel_of_columns(cols.len(), &cols, &opts.lattice)?)
}

/// `|G|^(l-1) - 1 - (|G|-1)|E|` as an exact integer.
pub fn codim(tree: &Tree, group: &GroupSpec) -> BigInt {
    let g = BigInt::from(group.order());
    g.pow(tree.leaf_count() as u32 - 1) - 1 - (g - 1) * tree.edge_count()
}

/// Dimension and index data of the character lattices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LatticeInfo {
    #[serde(rename = "dim_M0_tilde")]
    pub dim_m0_tilde: usize,
    pub expected_dim: usize,
    pub index: LatticeIndex,
    #[serde(serialize_with = "serialize_big")]
    pub expected_index: BigInt,
}

fn serialize_big<S: serde::Serializer>(x: &BigInt, s: S) -> Result<S::Ok, S::Error> {
    crate::lattice::json_integer(x).serialize(s)
}

impl LatticeInfo {
    pub fn ok(&self) -> bool {
        self.dim_m0_tilde == self.expected_dim
            && self.index == LatticeIndex::Finite(self.expected_index.clone())
    }
}

/// Compares `M0` (per-edge coordinate sums zero) with the lattice spanned by `Q_f - Q_0`.
pub fn lattice_report(space: &FlowSpace, opts: &OracleOptions) -> Result<LatticeInfo, OracleError> {
    let g = space.group().order();
    let e = space.edge_count();
    let dim = e * g;
    let m0_rows: Vec<SparseVector> = (0..e)
        .flat_map(|edge| {
            (1..g).map(move |x| sparse_from_pairs(&[(edge * g, -1), (edge * g + x, 1)]))
        })
        .collect();
    let m0 = LatticeBasis::new(dim, m0_rows)?;
    let cols = columns(space, opts.flow_cap, opts.lattice.execution)?;
    let q0 = &cols[0];
    let differences: Vec<SparseVector> = cols[1..]
        .iter()
        .map(|q| {
            let mut pairs: Vec<(usize, i64)> = q.iter().map(|(c, _)| (*c, 1)).collect();
            pairs.extend(q0.iter().map(|(c, _)| (*c, -1)));
            sparse_from_pairs(&pairs)
        })
        .filter(|v| !v.is_empty())
        .collect();
    let m0_tilde = LatticeBasis::from_generators(dim, &differences, &opts.lattice)?;
    let index = sublattice_index(&m0, &m0_tilde, &opts.lattice)?;
    let interior = space.tree().interior_node_count() as u32;
    Ok(LatticeInfo {
        dim_m0_tilde: m0_tilde.rank(),
        expected_dim: (g - 1) * e,
        index,
        expected_index: BigInt::from(g).pow(interior),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub pass: bool,
    pub count_ok: bool,
    pub kernel_membership_ok: bool,
    pub spans_ok: bool,
    pub degree_bound_ok: bool,
    pub expected_codim: usize,
    pub actual_count: usize,
    pub failures: Vec<String>,
    pub lattice_info: LatticeInfo,
}

/// Sublattice diagnostics are only attempted below this many flows.
const DIAGNOSE_LIMIT: usize = 5_000;

/// Checks `set` against the kernel of the monomial map and the degree bound.
pub fn verify_complete_intersection(
    set: &InvariantSet,
    opts: &OracleOptions,
) -> Result<VerificationReport, OracleError> {
    let space = set.space();
    let n = space.checked_flow_count(opts.flow_cap)?;
    let expected_codim = space.codim().unwrap_or(0);
    let mut failures = Vec::new();

    let count_ok = set.len() == expected_codim;
    if !count_ok {
        failures.push(format!(
            "count: expected {expected_codim} binomials, found {}",
            set.len()
        ));
    }

    let g = space.group().order();
    let rows = space.edge_count() * g;
    let vectors: Vec<SparseVector> = set
        .binomials()
        .map(|b| sparse_from_pairs(&b.exponent_vector(space)))
        .collect();
    let mut kernel_membership_ok = true;
    for (i, b) in set.binomials().enumerate() {
        let mut image = vec![0i64; rows];
        for f in b.lhs() {
            for c in space.vertex_support(f) {
                image[c] += 1;
            }
        }
        for f in b.rhs() {
            for c in space.vertex_support(f) {
                image[c] -= 1;
            }
        }
        if image.iter().any(|&x| x != 0) || vectors[i].is_empty() {
            kernel_membership_ok = false;
            failures.push(format!("binomial {i} is not a nonzero kernel vector"));
        }
    }

    let bound = set.degree_bound();
    let mut degree_bound_ok = true;
    for (i, b) in set.binomials().enumerate() {
        if b.degree() > bound {
            degree_bound_ok = false;
            failures.push(format!("binomial {i} has degree {} > {bound}", b.degree()));
        }
    }

    let kernel = oracle_kernel(space, opts)?;
    let spans_ok = match spans(&vectors, &kernel, &opts.lattice) {
        Ok(true) => true,
        Ok(false) => {
            let detail = if n <= DIAGNOSE_LIMIT {
                let generated = LatticeBasis::from_generators(n, &vectors, &opts.lattice)?;
                format!(
                    "index {}",
                    sublattice_index(&kernel, &generated, &opts.lattice)?
                )
            } else {
                "a proper sublattice".to_string()
            };
            failures.push(format!(
                "spans: the binomials generate {detail} in the kernel lattice"
            ));
            false
        }
        Err(LatticeError::OutsideRationalSpan) => {
            failures.push("spans: some exponent vector lies outside the kernel".to_string());
            false
        }
        Err(e) => return Err(e.into()),
    };

    let lattice_info = lattice_report(space, opts)?;
    Ok(VerificationReport {
        pass: count_ok && kernel_membership_ok && spans_ok && degree_bound_ok,
        count_ok,
        kernel_membership_ok,
        spans_ok,
        degree_bound_ok,
        expected_codim,
        actual_count: set.len(),
        failures,
        lattice_info,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::parse_group_spec;
    use crate::pipeline::{generate, GenerateOptions, Invariant};
    use crate::tree::parse_newick;

    fn space(nwk: &str, g: &str) -> FlowSpace {
        FlowSpace::new(parse_group_spec(g).unwrap(), &parse_newick(nwk).unwrap())
    }

    #[test]
    fn monomial_matrix_shape() {
        let s = space("(1,2,3);", "Z2");
        let m = monomial_map_matrix(&s, None).unwrap();
        assert_eq!((m.rows(), m.cols()), (6, 4));
        for j in 0..4 {
            let sum: BigInt = (0..6).map(|r| m.get(r, j).clone()).sum();
            assert_eq!(sum, BigInt::from(3));
        }
        let m3 = monomial_map_matrix(&space("(1,2,3);", "Z3"), None).unwrap();
        assert_eq!((m3.rows(), m3.cols()), (9, 9));
        assert_eq!(m3.rank(), 7);
    }

    #[test]
    fn kernel_ranks_match_codim() {
        for (nwk, g, rank) in [
            ("(1,2,3);", "Z2", 0usize),
            ("((1,2),(3,4));", "Z2", 2),
            ("(1,2,3);", "Z2xZ2", 6),
        ] {
            let s = space(nwk, g);
            let k = oracle_kernel(&s, &OracleOptions::default()).unwrap();
            assert_eq!(k.rank(), rank);
            assert_eq!(codim(s.tree(), s.group()), BigInt::from(rank));
        }
        let s = space("((1,2),3,(4,5));", "Z2");
        assert_eq!(codim(s.tree(), s.group()), BigInt::from(8));
        assert_eq!(
            codim(&Tree::claw(4).unwrap(), &parse_group_spec("Z3").unwrap()),
            BigInt::from(18)
        );
    }

    #[test]
    fn lattice_quantities() {
        for (nwk, g, dim, index) in [
            ("(1,2,3);", "Z3", 6usize, 3u32),
            ("((1,2),(3,4));", "Z2", 5, 4),
            ("(1,2,3);", "Z2", 3, 2),
        ] {
            let info = lattice_report(&space(nwk, g), &OracleOptions::default()).unwrap();
            assert_eq!(info.dim_m0_tilde, dim);
            assert_eq!(info.index, LatticeIndex::Finite(BigInt::from(index)));
            assert!(info.ok());
        }
    }

    #[test]
    fn verification_and_sabotage() {
        let group = parse_group_spec("Z4").unwrap();
        let set = generate(&Tree::tripod(), &group, &GenerateOptions::default()).unwrap();
        let report = verify_complete_intersection(&set, &OracleOptions::default()).unwrap();
        assert!(report.pass, "{:?}", report.failures);
        assert_eq!(report.actual_count, 6);

        let mut invariants = set.invariants().to_vec();
        let b = &invariants[0].binomial;
        let doubled = set
            .space()
            .binomial([b.lhs(), b.lhs()].concat(), [b.rhs(), b.rhs()].concat())
            .unwrap();
        invariants[0] = Invariant {
            binomial: doubled,
            provenance: invariants[0].provenance,
        };
        let bad = InvariantSet::new(set.space().clone(), invariants).unwrap();
        let report = verify_complete_intersection(&bad, &OracleOptions::default()).unwrap();
        assert!(report.count_ok && report.kernel_membership_ok && !report.spans_ok && !report.pass);
        assert!(report.failures.iter().any(|f| f.contains("index 2")));

        let quartet = generate(
            &parse_newick("((1,2),(3,4));").unwrap(),
            &parse_group_spec("Z2").unwrap(),
            &GenerateOptions::default(),
        )
        .unwrap();
        let report = verify_complete_intersection(&quartet, &OracleOptions::default()).unwrap();
        assert!(report.pass);
        let fewer =
            InvariantSet::new(quartet.space().clone(), quartet.invariants()[1..].to_vec()).unwrap();
        let report = verify_complete_intersection(&fewer, &OracleOptions::default()).unwrap();
        assert!(!report.count_ok && !report.spans_ok);
    }

    #[test]
    fn cap_is_reported() {
        let s = space("(1,2,3,4,5,6);", "Z5");
        let opts = OracleOptions {
            flow_cap: Some(1000),
            ..Default::default()
        };
        assert!(matches!(
            oracle_kernel(&s, &opts),
            Err(OracleError::Flow(FlowError::CapExceeded { .. }))
        ));
    }
}
