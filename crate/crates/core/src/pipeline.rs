//! Assembling a complete-intersection invariant set for any tree.
//!
//! Tripods come from the admissible-matrix bases. A join `T1 * T2` keeps the extended
//! invariants of both parts and adds the edge quadrics across the glued edge. A claw with
//! `l >= 4` leaves reuses the set of the tree that splits off leaves 1 and 2, plus `|G|-1`
//! quadrics. [`generate`] cuts a tree at interior edges until only claws remain.

use std::fmt;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::admissible::{tripod_invariants, AdmissibleError, TripodMode};
use crate::flow::{restrict_flow, Binomial, Flow, FlowError, FlowSpace};
use crate::group::{GroupElement, GroupError, GroupSpec};
use crate::par::Execution;
use crate::tree::{
    decompose_at_edge, join, Contraction, Junction, RootedTree, Side, Tree, TreeError,
};

/// Default bound on `|G|^(l-1)`.
pub const DEFAULT_FLOW_CAP: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PipelineError {
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Admissible(#[from] AdmissibleError),
    #[error("a claw needs at least {needed} leaves, got {found}")]
    TooFewLeaves { needed: usize, found: usize },
    #[error("{0} is zero or a unit vector; no nonspecial quadric")]
    NotNonspecial(String),
    #[error("invariant set on {tree} has {found} binomials, expected {expected}")]
    CountMismatch {
        tree: String,
        expected: usize,
        found: usize,
    },
    #[error("invariant sets are over different groups {0} and {1}")]
    GroupMismatch(String, String),
    #[error("binomial {0} is trivial")]
    TrivialBinomial(usize),
}

/// Which construction step produced a binomial; the outermost step wins.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Provenance {
    Tripod,
    JoinE1,
    JoinE2,
    JoinEdgeQuadric,
    ClawSpecial,
    ClawNonspecial,
    ContractedFromTPrime,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Tripod => "tripod",
            Provenance::JoinE1 => "join-E1",
            Provenance::JoinE2 => "join-E2",
            Provenance::JoinEdgeQuadric => "join-edge-quadric",
            Provenance::ClawSpecial => "claw-special",
            Provenance::ClawNonspecial => "claw-nonspecial",
            Provenance::ContractedFromTPrime => "contracted-from-T′",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Provenance {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Invariant {
    pub binomial: Binomial,
    pub provenance: Provenance,
}

/// Binomials on one `(tree, group)` pair with their provenance.
#[derive(Clone, Debug)]
pub struct InvariantSet {
    space: FlowSpace,
    invariants: Vec<Invariant>,
}

impl InvariantSet {
    /// Checks every binomial against the edge projections of `space`.
    pub fn new(space: FlowSpace, invariants: Vec<Invariant>) -> Result<Self, PipelineError> {
        for (i, inv) in invariants.iter().enumerate() {
            let b = space.binomial(inv.binomial.lhs().to_vec(), inv.binomial.rhs().to_vec())?;
            if b.is_zero() {
                return Err(PipelineError::TrivialBinomial(i));
            }
        }
        Ok(InvariantSet { space, invariants })
    }

    pub fn space(&self) -> &FlowSpace {
        &self.space
    }

    pub fn tree(&self) -> &Tree {
        self.space.tree()
    }

    pub fn rooted(&self) -> &RootedTree {
        self.space.rooted()
    }

    pub fn group(&self) -> &GroupSpec {
        self.space.group()
    }

    pub fn invariants(&self) -> &[Invariant] {
        &self.invariants
    }

    pub fn binomials(&self) -> impl Iterator<Item = &Binomial> {
        self.invariants.iter().map(|i| &i.binomial)
    }

    pub fn len(&self) -> usize {
        self.invariants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.invariants.is_empty()
    }

    /// `|G|^(l-1) - 1 - (|G|-1)|E|`, the size a complete intersection must have.
    pub fn codim(&self) -> Option<usize> {
        self.space.codim()
    }

    pub fn max_degree(&self) -> usize {
        self.binomials().map(Binomial::degree).max().unwrap_or(0)
    }

    /// `max(3, a_i)` over the cyclic factors.
    pub fn degree_bound(&self) -> usize {
        degree_bound(self.group())
    }

    fn check_count(&self) -> Result<(), PipelineError> {
        let expected = self.codim().unwrap_or(usize::MAX);
        if self.len() != expected {
            return Err(PipelineError::CountMismatch {
                tree: self.tree().to_newick(),
                expected,
                found: self.len(),
            });
        }
        Ok(())
    }

    /// One binomial per line in `x[..]` notation.
    pub fn to_algebra_text(&self) -> String {
        let mut out = String::new();
        for b in self.binomials() {
            out.push_str(&b.to_algebra(&self.space));
            out.push('\n');
        }
        out
    }

    /// The same binomials read on a tree obtained by contracting interior edges.
    fn contract_to(
        &self,
        target: &Tree,
        relabel: Option<Provenance>,
    ) -> Result<InvariantSet, PipelineError> {
        let contraction = Contraction::new(self.rooted().clone(), target.rooted())?;
        let space = FlowSpace::with_rooted(self.group().clone(), contraction.target().clone());
        let map = |flows: &[Flow]| -> Result<Vec<Flow>, FlowError> {
            flows
                .iter()
                .map(|f| restrict_flow(self.group(), &contraction, f))
                .collect()
        };
        let invariants = self
            .invariants
            .iter()
            .map(|inv| {
                Ok(Invariant {
                    binomial: space.binomial(map(inv.binomial.lhs())?, map(inv.binomial.rhs())?)?,
                    provenance: relabel.unwrap_or(inv.provenance),
                })
            })
            .collect::<Result<Vec<_>, FlowError>>()?;
        Ok(InvariantSet { space, invariants })
    }
}

impl Serialize for InvariantSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Entry<'a> {
            degree: usize,
            provenance: Provenance,
            lhs: Vec<&'a [GroupElement]>,
            rhs: Vec<&'a [GroupElement]>,
        }
        fn leaves<'a>(flows: &'a [Flow], space: &FlowSpace) -> Vec<&'a [GroupElement]> {
            flows.iter().map(|f| f.leaf_values(space)).collect()
        }
        let entries: Vec<Entry> = self
            .invariants
            .iter()
            .map(|inv| Entry {
                degree: inv.binomial.degree(),
                provenance: inv.provenance,
                lhs: leaves(inv.binomial.lhs(), &self.space),
                rhs: leaves(inv.binomial.rhs(), &self.space),
            })
            .collect();
        let mut tree = self.rooted().to_json_value();
        tree["newick"] = serde_json::Value::String(self.tree().to_newick());
        let mut st = s.serialize_struct("InvariantSet", 4)?;
        st.serialize_field("group", self.group())?;
        st.serialize_field("tree", &tree)?;
        st.serialize_field("codim", &self.codim())?;
        st.serialize_field("invariants", &entries)?;
        st.end()
    }
}

pub fn degree_bound(group: &GroupSpec) -> usize {
    group
        .factors()
        .iter()
        .map(|&a| a as usize)
        .max()
        .unwrap_or(1)
        .max(3)
}

/// Sizes of the three join families and the codimension they should add up to.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct JoinRecord {
    pub joined: String,
    pub left: String,
    pub right: String,
    pub families: [usize; 3],
    pub codim: usize,
}

impl JoinRecord {
    pub fn balanced(&self) -> bool {
        self.families.iter().sum::<usize>() == self.codim
    }
}

/// The values of `0..g^n` read as `n` digits in `G`, most significant first.
fn digits(group: &GroupSpec, mut index: usize, n: usize) -> Vec<GroupElement> {
    let g = group.order();
    let mut out = vec![group.zero(); n];
    for slot in out.iter_mut().rev() {
        *slot = group.element_at(index % g);
        index /= g;
    }
    out
}

fn checked_pow(g: usize, n: usize) -> Result<usize, PipelineError> {
    u32::try_from(n)
        .ok()
        .and_then(|n| g.checked_pow(n))
        .ok_or_else(|| {
            FlowError::CapExceeded {
                count: format!("{g}^{n}"),
                cap: usize::MAX,
            }
            .into()
        })
}

/// Join on an existing junction; `l1`, `l2` are part labels, not glue leaves.
pub fn join_at(
    junction: &Junction,
    s1: &InvariantSet,
    s2: &InvariantSet,
    l1: usize,
    l2: usize,
    execution: Execution,
) -> Result<(InvariantSet, JoinRecord), PipelineError> {
    if s1.group() != s2.group() {
        return Err(PipelineError::GroupMismatch(
            s1.group().to_string(),
            s2.group().to_string(),
        ));
    }
    s1.check_count()?;
    s2.check_count()?;
    let group = s1.group().clone();
    let space = FlowSpace::new(group.clone(), junction.joined());
    for (side, l) in [(Side::Left, l1), (Side::Right, l2)] {
        if junction.image(side, l).is_none() {
            return Err(FlowError::BadDistinguished(l).into());
        }
    }

    let extend = |set: &InvariantSet, side: Side, target: usize, tag: Provenance| {
        execution
            .map(set.invariants(), |inv| -> Result<Invariant, FlowError> {
                let map = |flows: &[Flow]| -> Result<Vec<Flow>, FlowError> {
                    flows
                        .iter()
                        .map(|f| space.extend(junction, side, f, target))
                        .collect()
                };
                let binomial =
                    space.binomial(map(inv.binomial.lhs())?, map(inv.binomial.rhs())?)?;
                Ok(Invariant {
                    binomial,
                    provenance: tag,
                })
            })
            .into_iter()
            .collect::<Result<Vec<_>, _>>()
    };
    let family1 = extend(s1, Side::Left, l2, Provenance::JoinE1)?;
    let family2 = extend(s2, Side::Right, l1, Provenance::JoinE2)?;

    // free leaves of each part: everything but the glue leaf and the distinguished leaf
    let free = |side: Side, l: usize| -> Vec<usize> {
        let part = junction.part(side);
        (1..=part.leaf_count())
            .filter(|&x| x != l && x != junction.glue(side))
            .collect()
    };
    let (free1, free2) = (free(Side::Left, l1), free(Side::Right, l2));
    let g = group.order();
    let (n1, n2) = (
        checked_pow(g, free1.len())? - 1,
        checked_pow(g, free2.len())? - 1,
    );
    let total = g * n1 * n2;
    let elements = group.elements();
    let label = |side: Side, l: usize| junction.image(side, l).expect("not a glue leaf") - 1;
    let (d1, d2) = (label(Side::Left, l1), label(Side::Right, l2));
    let family3 = execution
        .map_range(total, |k| -> Result<Invariant, FlowError> {
            let g0 = &elements[k / (n1 * n2)];
            let a = digits(&group, k % (n1 * n2) / n2 + 1, free1.len());
            let b = digits(&group, k % n2 + 1, free2.len());
            // left values sum to -g0 and right values to g0, so the glued edge carries g0
            let mut base = vec![group.zero(); space.leaf_count()];
            base[d1] = group.neg_unchecked(g0);
            base[d2] = g0.clone();
            let mut left = base.clone();
            let mut right = base.clone();
            let mut both = base.clone();
            for (x, v) in free1.iter().zip(&a) {
                let i = label(Side::Left, *x);
                left[i] = v.clone();
                both[i] = v.clone();
            }
            let sum_a = group.sum(&a);
            left[d1] = group.sub_unchecked(&left[d1], &sum_a);
            both[d1] = left[d1].clone();
            for (x, v) in free2.iter().zip(&b) {
                let i = label(Side::Right, *x);
                right[i] = v.clone();
                both[i] = v.clone();
            }
            let sum_b = group.sum(&b);
            right[d2] = group.sub_unchecked(&right[d2], &sum_b);
            both[d2] = right[d2].clone();
            let flow = |leaves: &[GroupElement]| space.from_leaves_unchecked(leaves);
            let binomial = space.binomial(
                vec![flow(&both), flow(&base)],
                vec![flow(&left), flow(&right)],
            )?;
            Ok(Invariant {
                binomial,
                provenance: Provenance::JoinEdgeQuadric,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;

    let record = JoinRecord {
        joined: junction.joined().to_newick(),
        left: junction.left().to_newick(),
        right: junction.right().to_newick(),
        families: [family1.len(), family2.len(), family3.len()],
        codim: space.codim().unwrap_or(usize::MAX),
    };
    let mut invariants = family1;
    invariants.extend(family2);
    invariants.extend(family3);
    let set = InvariantSet { space, invariants };
    set.check_count()?;
    Ok((set, record))
}

/// Invariants of `T1 * T2` glued along the leaves `v1` of `s1`'s tree and `v2` of `s2`'s.
pub fn join_invariants(
    s1: &InvariantSet,
    v1: usize,
    s2: &InvariantSet,
    v2: usize,
    l1: usize,
    l2: usize,
) -> Result<(InvariantSet, JoinRecord), PipelineError> {
    let junction = join(s1.tree(), v1, s2.tree(), v2)?;
    join_at(&junction, s1, s2, l1, l2, Execution::default())
}

fn claw_space(leaves: usize, group: &GroupSpec) -> Result<FlowSpace, PipelineError> {
    if leaves < 4 {
        return Err(PipelineError::TooFewLeaves {
            needed: 4,
            found: leaves,
        });
    }
    Ok(FlowSpace::new(group.clone(), &Tree::claw(leaves)?))
}

fn claw_flow(space: &FlowSpace, first: [GroupElement; 4]) -> Flow {
    let mut leaves = vec![space.group().zero(); space.leaf_count()];
    for (slot, v) in leaves.iter_mut().zip(first) {
        *slot = v;
    }
    space.from_leaves_unchecked(&leaves)
}

/// The special quadric for the `j`-th unit vector (1-based) on the `leaves`-claw.
pub fn special_quadric(
    j: usize,
    leaves: usize,
    group: &GroupSpec,
) -> Result<Binomial, PipelineError> {
    let space = claw_space(leaves, group)?;
    let one = group.unit_embed(j, 1)?;
    let minus = group.neg_unchecked(&one);
    let z = group.zero();
    let f = |a: &GroupElement, b: &GroupElement, c: &GroupElement, d: &GroupElement| {
        claw_flow(&space, [a.clone(), b.clone(), c.clone(), d.clone()])
    };
    let lhs = vec![f(&one, &z, &minus, &z), f(&z, &minus, &z, &one)];
    let rhs = vec![f(&z, &z, &minus, &one), f(&one, &minus, &z, &z)];
    Ok(space.binomial(lhs, rhs)?)
}

fn unit_index(group: &GroupSpec, b: &GroupElement) -> Option<usize> {
    (1..=group.rank()).find(|&j| group.unit_embed(j, 1).as_ref() == Ok(b))
}

/// The nonspecial quadric for `b`, using the last nonzero coordinate of `b`.
pub fn nonspecial_quadric(
    b: &GroupElement,
    leaves: usize,
    group: &GroupSpec,
) -> Result<Binomial, PipelineError> {
    let space = claw_space(leaves, group)?;
    if !group.contains(b) {
        return Err(GroupError::Mismatch {
            element: b.residues().to_vec(),
            spec: group.to_string(),
        }
        .into());
    }
    if b.is_zero() || unit_index(group, b).is_some() {
        return Err(PipelineError::NotNonspecial(b.to_string()));
    }
    let j = b
        .residues()
        .iter()
        .rposition(|&r| r != 0)
        .expect("b is nonzero")
        + 1;
    let one = group.unit_embed(j, 1)?;
    let z = group.zero();
    let bm = group.sub_unchecked(b, &one);
    let nb = group.neg_unchecked(b);
    let nbm = group.neg_unchecked(&bm);
    let f = |a: &GroupElement, b: &GroupElement, c: &GroupElement, d: &GroupElement| {
        claw_flow(&space, [a.clone(), b.clone(), c.clone(), d.clone()])
    };
    let lhs = vec![f(&one, &z, &bm, &nb), f(&z, &bm, &z, &nbm)];
    let rhs = vec![f(&z, &z, &bm, &nbm), f(&one, &bm, &z, &nb)];
    Ok(space.binomial(lhs, rhs)?)
}

fn tripod_set(group: &GroupSpec, mode: TripodMode) -> Result<InvariantSet, PipelineError> {
    let space = FlowSpace::new(group.clone(), &Tree::tripod());
    let invariants = tripod_invariants(group, mode)?
        .into_iter()
        .map(|binomial| Invariant {
            binomial,
            provenance: Provenance::Tripod,
        })
        .collect();
    Ok(InvariantSet { space, invariants })
}

fn claw_traced(
    leaves: usize,
    group: &GroupSpec,
    mode: TripodMode,
    execution: Execution,
    trace: &mut Vec<JoinRecord>,
) -> Result<InvariantSet, PipelineError> {
    if leaves < 3 {
        return Err(PipelineError::TooFewLeaves {
            needed: 3,
            found: leaves,
        });
    }
    if leaves == 3 {
        return tripod_set(group, mode);
    }
    let tripod = tripod_set(group, mode)?;
    let smaller = claw_traced(leaves - 1, group, mode, execution, trace)?;
    // T' splits off leaves 1 and 2: the tripod's leaf 3 is glued to leaf 1 of the smaller claw
    let junction = join(tripod.tree(), 3, smaller.tree(), 1)?;
    let (l1, l2) = (
        junction.default_distinguished(Side::Left),
        junction.default_distinguished(Side::Right),
    );
    let (t_prime, record) = join_at(&junction, &tripod, &smaller, l1, l2, execution)?;
    trace.push(record);
    let claw = Tree::claw(leaves)?;
    let mut set = t_prime.contract_to(&claw, Some(Provenance::ContractedFromTPrime))?;
    for b in group.elements().into_iter().skip(1) {
        let invariant = match unit_index(group, &b) {
            Some(j) => Invariant {
                binomial: special_quadric(j, leaves, group)?,
                provenance: Provenance::ClawSpecial,
            },
            None => Invariant {
                binomial: nonspecial_quadric(&b, leaves, group)?,
                provenance: Provenance::ClawNonspecial,
            },
        };
        set.invariants.push(invariant);
    }
    set.check_count()?;
    Ok(set)
}

/// Invariants of the claw with `leaves` leaves.
pub fn claw_invariants(
    leaves: usize,
    group: &GroupSpec,
    mode: TripodMode,
) -> Result<InvariantSet, PipelineError> {
    claw_traced(leaves, group, mode, Execution::default(), &mut Vec::new())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenerateOptions {
    pub mode: TripodMode,
    /// Largest admissible `|G|^(l-1)`; `None` disables the check.
    pub flow_cap: Option<usize>,
    /// Picks the cut edges at random instead of the default order.
    pub seed: Option<u64>,
    pub execution: Execution,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        GenerateOptions {
            mode: TripodMode::default(),
            flow_cap: Some(DEFAULT_FLOW_CAP),
            seed: None,
            execution: Execution::default(),
        }
    }
}

/// The interior edge to cut: by default the one at the root whose far side holds the most
/// leaves, lowest node id on ties; with a generator, any interior edge at random.
fn cut_edge(tree: &Tree, rng: Option<&mut StdRng>) -> Result<(usize, usize), PipelineError> {
    if let Some(rng) = rng {
        let interior: Vec<(usize, usize)> = tree
            .edges()
            .into_iter()
            .filter(|&(a, b)| tree.is_interior_edge(a, b))
            .collect();
        return Ok(interior[rng.gen_range(0..interior.len())]);
    }
    let root = tree.canonical_root();
    let mut best: Option<(usize, usize)> = None;
    for &c in tree.neighbors(root) {
        if tree.is_leaf(c) {
            continue;
        }
        let size = tree.leaves_beyond(root, c)?.len();
        if best.is_none_or(|(s, n)| size > s || (size == s && c < n)) {
            best = Some((size, c));
        }
    }
    let (_, c) = best.expect("a tree that is not a claw has an interior edge at its root");
    Ok((root, c))
}

fn generate_traced(
    tree: &Tree,
    group: &GroupSpec,
    options: &GenerateOptions,
    seed: Option<u64>,
) -> Result<(InvariantSet, Vec<JoinRecord>), PipelineError> {
    let mut trace = Vec::new();
    if tree.is_claw() {
        let set = claw_traced(
            tree.leaf_count(),
            group,
            options.mode,
            options.execution,
            &mut trace,
        )?;
        return Ok((set.contract_to(tree, None)?, trace));
    }
    let mut rng = seed.map(StdRng::seed_from_u64);
    let (a, b) = cut_edge(tree, rng.as_mut())?;
    let junction = decompose_at_edge(tree, a, b)?;
    let seeds: Option<(u64, u64)> = rng.as_mut().map(|r| (r.gen(), r.gen()));
    let (left, right) = options.execution.join(
        || generate_traced(junction.left(), group, options, seeds.map(|s| s.0)),
        || generate_traced(junction.right(), group, options, seeds.map(|s| s.1)),
    );
    let (left, left_trace) = left?;
    let (right, right_trace) = right?;
    trace.extend(left_trace);
    trace.extend(right_trace);
    let (l1, l2) = (
        junction.default_distinguished(Side::Left),
        junction.default_distinguished(Side::Right),
    );
    let (set, record) = join_at(&junction, &left, &right, l1, l2, options.execution)?;
    trace.push(record);
    Ok((set, trace))
}

fn check_cap(tree: &Tree, group: &GroupSpec, cap: Option<usize>) -> Result<(), PipelineError> {
    FlowSpace::new(group.clone(), tree).checked_flow_count(cap)?;
    Ok(())
}

/// A complete-intersection invariant set for `(tree, group)`, with every join performed.
pub fn generate_with_trace(
    tree: &Tree,
    group: &GroupSpec,
    options: &GenerateOptions,
) -> Result<(InvariantSet, Vec<JoinRecord>), PipelineError> {
    check_cap(tree, group, options.flow_cap)?;
    generate_traced(tree, group, options, options.seed)
}

pub fn generate(
    tree: &Tree,
    group: &GroupSpec,
    options: &GenerateOptions,
) -> Result<InvariantSet, PipelineError> {
    Ok(generate_with_trace(tree, group, options)?.0)
}
