//! Group-based flows on a rooted tree and binomials between multisets of flows.
//!
//! A flow assigns a group element to every edge so that, at each interior node, the
//! value on the incoming edge equals the sum over the outgoing edges. Pendant edges point
//! at the leaves, so a flow is fixed by its leaf values, which sum to zero. Edge values
//! are stored in the canonical edge order of [`RootedTree`], leaves first.

use std::collections::BTreeMap;
use std::fmt;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::group::{GroupElement, GroupError, GroupSpec};
use crate::tree::{Contraction, Junction, RootedTree, Side, Tree};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FlowError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("expected {expected} values, found {found}")]
    Length { expected: usize, found: usize },
    #[error("leaf values do not sum to zero")]
    NonzeroSum,
    #[error("flow is not conserved at node {0}")]
    Conservation(usize),
    #[error("{count} flows exceed the cap of {cap}")]
    CapExceeded { count: String, cap: usize },
    #[error("multisets have different sizes {0} and {1}")]
    DegreeMismatch(usize, usize),
    #[error("edge {0} projections differ; the binomial is not in the kernel")]
    Unbalanced(usize),
    #[error("flows {0} and {1} disagree on the glued edge")]
    Incompatible(String, String),
    #[error("leaf {0} is not a distinguished leaf candidate")]
    BadDistinguished(usize),
}

/// A flow, as its edge values in canonical edge order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Flow {
    values: Vec<GroupElement>,
}

impl Flow {
    pub fn values(&self) -> &[GroupElement] {
        &self.values
    }

    pub fn edge(&self, index: usize) -> &GroupElement {
        &self.values[index]
    }

    /// Value on the pendant edge of leaf `label`.
    pub fn leaf(&self, label: usize) -> &GroupElement {
        &self.values[label - 1]
    }

    pub fn leaf_values<'a>(&'a self, space: &FlowSpace) -> &'a [GroupElement] {
        &self.values[..space.leaf_count()]
    }
}

impl fmt::Display for Flow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "]")
    }
}

impl Serialize for Flow {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.values.serialize(s)
    }
}

/// The group and rooted tree that flows live on.
#[derive(Clone, Debug)]
pub struct FlowSpace {
    group: GroupSpec,
    tree: RootedTree,
}

impl FlowSpace {
    /// Flows on `tree` rooted at its canonical root.
    pub fn new(group: GroupSpec, tree: &Tree) -> Self {
        FlowSpace {
            group,
            tree: tree.rooted(),
        }
    }

    pub fn with_rooted(group: GroupSpec, tree: RootedTree) -> Self {
        FlowSpace { group, tree }
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn rooted(&self) -> &RootedTree {
        &self.tree
    }

    pub fn tree(&self) -> &Tree {
        self.tree.tree()
    }

    pub fn leaf_count(&self) -> usize {
        self.tree.leaf_count()
    }

    pub fn edge_count(&self) -> usize {
        self.tree.edge_count()
    }

    /// `|G|^(l-1)`, or `None` on overflow.
    pub fn flow_count(&self) -> Option<usize> {
        let exp = u32::try_from(self.leaf_count() - 1).ok()?;
        self.group.order().checked_pow(exp)
    }

    /// Expected number of invariants: `|G|^(l-1) - 1 - (|G|-1)|E|`.
    pub fn codim(&self) -> Option<usize> {
        let n = self.flow_count()?;
        let m = (self.group.order() - 1) * self.edge_count();
        n.checked_sub(1 + m)
    }

    /// Builds the flow with the given leaf values.
    pub fn from_leaves(&self, leaves: &[GroupElement]) -> Result<Flow, FlowError> {
        let l = self.leaf_count();
        if leaves.len() != l {
            return Err(FlowError::Length {
                expected: l,
                found: leaves.len(),
            });
        }
        for x in leaves {
            if !self.group.contains(x) {
                return Err(GroupError::Mismatch {
                    element: x.residues().to_vec(),
                    spec: self.group.to_string(),
                }
                .into());
            }
        }
        if !self.group.sum(leaves).is_zero() {
            return Err(FlowError::NonzeroSum);
        }
        Ok(self.from_leaves_unchecked(leaves))
    }

    pub(crate) fn from_leaves_unchecked(&self, leaves: &[GroupElement]) -> Flow {
        let rt = &self.tree;
        let n = rt.tree().node_count();
        let mut node_value: Vec<Option<GroupElement>> = vec![None; n];
        for (i, v) in leaves.iter().enumerate() {
            node_value[i] = Some(v.clone());
        }
        for &node in rt.postorder() {
            if node_value[node].is_some() {
                continue;
            }
            let total = self.group.sum(
                rt.children(node)
                    .iter()
                    .map(|&c| node_value[c].as_ref().expect("postorder")),
            );
            node_value[node] = Some(total);
        }
        let values = rt
            .edges()
            .iter()
            .map(|&(_, child)| node_value[child].clone().expect("every child visited"))
            .collect();
        Flow { values }
    }

    /// Builds a flow from all edge values, checking conservation at every interior node.
    pub fn from_edge_values(&self, values: Vec<GroupElement>) -> Result<Flow, FlowError> {
        let rt = &self.tree;
        if values.len() != rt.edge_count() {
            return Err(FlowError::Length {
                expected: rt.edge_count(),
                found: values.len(),
            });
        }
        for x in &values {
            if !self.group.contains(x) {
                return Err(GroupError::Mismatch {
                    element: x.residues().to_vec(),
                    spec: self.group.to_string(),
                }
                .into());
            }
        }
        let tree = rt.tree();
        for node in tree.leaf_count()..tree.node_count() {
            let out = self.group.sum(
                rt.children(node)
                    .iter()
                    .map(|&c| &values[rt.incoming_edge(c).expect("child")]),
            );
            let expected = match rt.incoming_edge(node) {
                Some(e) => values[e].clone(),
                None => self.group.zero(),
            };
            if out != expected {
                return Err(FlowError::Conservation(node));
            }
        }
        Ok(Flow { values })
    }

    /// Position of a flow in [`FlowSpace::enumerate`] order.
    pub fn index_of(&self, flow: &Flow) -> usize {
        let g = self.group.order();
        flow.values[..self.leaf_count() - 1]
            .iter()
            .fold(0, |acc, x| acc * g + self.group.index_of(x))
    }

    /// The flow at position `index`: leaves `1..l-1` read as base-`|G|` digits, most
    /// significant first; leaf `l` is forced.
    pub fn flow_at(&self, mut index: usize) -> Flow {
        let g = self.group.order();
        let l = self.leaf_count();
        let mut leaves = vec![self.group.zero(); l];
        for k in (0..l - 1).rev() {
            leaves[k] = self.group.element_at(index % g);
            index /= g;
        }
        leaves[l - 1] = self.group.neg_unchecked(&self.group.sum(&leaves[..l - 1]));
        self.from_leaves_unchecked(&leaves)
    }

    /// All flows, in index order. Fails when their number exceeds `cap`.
    pub fn enumerate(&self, cap: Option<usize>) -> Result<Vec<Flow>, FlowError> {
        let n = self.checked_flow_count(cap)?;
        Ok((0..n).map(|i| self.flow_at(i)).collect())
    }

    pub fn checked_flow_count(&self, cap: Option<usize>) -> Result<usize, FlowError> {
        let cap_value = cap.unwrap_or(usize::MAX);
        match self.flow_count() {
            Some(n) if n <= cap_value => Ok(n),
            Some(n) => Err(FlowError::CapExceeded {
                count: n.to_string(),
                cap: cap_value,
            }),
            None => Err(FlowError::CapExceeded {
                count: format!("{}^{}", self.group.order(), self.leaf_count() - 1),
                cap: cap_value,
            }),
        }
    }

    /// Positions of the ones in the 0/1 vertex vector of a flow, one per edge:
    /// `edge * |G| + element index`.
    pub fn vertex_support(&self, flow: &Flow) -> Vec<usize> {
        let g = self.group.order();
        flow.values
            .iter()
            .enumerate()
            .map(|(e, x)| e * g + self.group.index_of(x))
            .collect()
    }

    /// The 0/1 vertex vector of length `|E| * |G|`.
    pub fn vertex_point(&self, flow: &Flow) -> Vec<u8> {
        let mut out = vec![0; self.edge_count() * self.group.order()];
        for i in self.vertex_support(flow) {
            out[i] = 1;
        }
        out
    }

    /// Checks per-edge projection balance and cancels common flows.
    pub fn binomial(&self, mut lhs: Vec<Flow>, mut rhs: Vec<Flow>) -> Result<Binomial, FlowError> {
        if lhs.len() != rhs.len() {
            return Err(FlowError::DegreeMismatch(lhs.len(), rhs.len()));
        }
        for f in lhs.iter().chain(&rhs) {
            if f.values.len() != self.edge_count() {
                return Err(FlowError::Length {
                    expected: self.edge_count(),
                    found: f.values.len(),
                });
            }
        }
        for e in 0..self.edge_count() {
            let mut a: Vec<_> = lhs.iter().map(|f| &f.values[e]).collect();
            let mut b: Vec<_> = rhs.iter().map(|f| &f.values[e]).collect();
            a.sort_unstable();
            b.sort_unstable();
            if a != b {
                return Err(FlowError::Unbalanced(e));
            }
        }
        lhs.sort_unstable();
        rhs.sort_unstable();
        Ok(Binomial::reduce(lhs, rhs))
    }

    /// Flow of a part of a junction extended into the joined tree: the part's leaves keep
    /// their values, the other side's leaf `target` takes the glue leaf's value, and the
    /// remaining leaves carry zero.
    pub fn extend(
        &self,
        junction: &Junction,
        side: Side,
        flow: &Flow,
        target: usize,
    ) -> Result<Flow, FlowError> {
        let other = match side {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        };
        if target == 0
            || target > junction.part(other).leaf_count()
            || target == junction.glue(other)
        {
            return Err(FlowError::BadDistinguished(target));
        }
        let glue_value = flow.leaf(junction.glue(side));
        let leaves: Vec<_> = (1..=self.leaf_count())
            .map(|label| match junction.origin(label) {
                (s, l) if s == side => flow.leaf(l).clone(),
                (_, l) if l == target => glue_value.clone(),
                _ => self.group.zero(),
            })
            .collect();
        Ok(self.from_leaves_unchecked(&leaves))
    }

    /// Glues a left flow and a right flow whose glue-leaf values are opposite.
    pub fn join_flows(
        &self,
        junction: &Junction,
        left: &Flow,
        right: &Flow,
    ) -> Result<Flow, FlowError> {
        let a = left.leaf(junction.left_glue());
        let b = right.leaf(junction.right_glue());
        if *a != self.group.neg_unchecked(b) {
            return Err(FlowError::Incompatible(left.to_string(), right.to_string()));
        }
        let leaves: Vec<_> = (1..=self.leaf_count())
            .map(|label| match junction.origin(label) {
                (Side::Left, l) => left.leaf(l).clone(),
                (Side::Right, l) => right.leaf(l).clone(),
            })
            .collect();
        Ok(self.from_leaves_unchecked(&leaves))
    }

    /// The flow sending `g0` from the left distinguished leaf `l1` to the right one `l2`:
    /// `l1` carries `-g0`, `l2` carries `g0`, everything else zero.
    pub fn special_flow(
        &self,
        junction: &Junction,
        l1: usize,
        l2: usize,
        g0: &GroupElement,
    ) -> Result<Flow, FlowError> {
        let a = junction
            .image(Side::Left, l1)
            .ok_or(FlowError::BadDistinguished(l1))?;
        let b = junction
            .image(Side::Right, l2)
            .ok_or(FlowError::BadDistinguished(l2))?;
        let mut leaves = vec![self.group.zero(); self.leaf_count()];
        leaves[a - 1] = self.group.neg_unchecked(g0);
        leaves[b - 1] = g0.clone();
        Ok(self.from_leaves_unchecked(&leaves))
    }
}

/// Moves a flow across a contraction; leaf values are unchanged.
pub fn restrict_flow(
    group: &GroupSpec,
    contraction: &Contraction,
    flow: &Flow,
) -> Result<Flow, FlowError> {
    let source = contraction.source();
    if flow.values.len() != source.edge_count() {
        return Err(FlowError::Length {
            expected: source.edge_count(),
            found: flow.values.len(),
        });
    }
    let target = FlowSpace::with_rooted(group.clone(), contraction.target().clone());
    target.from_leaves(&flow.values[..source.leaf_count()])
}

/// A reduced binomial `x^lhs - x^rhs`, each side a sorted multiset of flows.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Binomial {
    lhs: Vec<Flow>,
    rhs: Vec<Flow>,
}

impl Binomial {
    /// Cancels flows common to both sorted sides.
    fn reduce(lhs: Vec<Flow>, rhs: Vec<Flow>) -> Binomial {
        let (mut l, mut r) = (Vec::new(), Vec::new());
        let (mut i, mut j) = (0, 0);
        while i < lhs.len() && j < rhs.len() {
            match lhs[i].cmp(&rhs[j]) {
                std::cmp::Ordering::Less => {
                    l.push(lhs[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    r.push(rhs[j].clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    i += 1;
                    j += 1;
                }
            }
        }
        l.extend_from_slice(&lhs[i..]);
        r.extend_from_slice(&rhs[j..]);
        Binomial { lhs: l, rhs: r }
    }

    pub fn lhs(&self) -> &[Flow] {
        &self.lhs
    }

    pub fn rhs(&self) -> &[Flow] {
        &self.rhs
    }

    pub fn degree(&self) -> usize {
        self.lhs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.lhs.is_empty()
    }

    /// Sparse exponent vector over flow indices: `+count` for lhs, `-count` for rhs.
    pub fn exponent_vector(&self, space: &FlowSpace) -> Vec<(usize, i64)> {
        let mut acc: BTreeMap<usize, i64> = BTreeMap::new();
        for f in &self.lhs {
            *acc.entry(space.index_of(f)).or_default() += 1;
        }
        for f in &self.rhs {
            *acc.entry(space.index_of(f)).or_default() -= 1;
        }
        acc.into_iter().filter(|&(_, c)| c != 0).collect()
    }

    /// Dense exponent vector of length `|G|^(l-1)`.
    pub fn dense_exponent_vector(&self, space: &FlowSpace) -> Vec<i64> {
        let mut out = vec![0; space.flow_count().expect("enumerable space")];
        for (i, c) in self.exponent_vector(space) {
            out[i] = c;
        }
        out
    }

    /// Text form such as `x[0,1,2]*x[1,2,0]^2 - x[0,2,1]`, variables named by leaf values.
    pub fn to_algebra(&self, space: &FlowSpace) -> String {
        let l = space.leaf_count();
        let side = |flows: &[Flow]| -> String {
            if flows.is_empty() {
                return "1".to_string();
            }
            let mut parts: Vec<String> = Vec::new();
            let mut i = 0;
            while i < flows.len() {
                let mut j = i;
                while j < flows.len() && flows[j] == flows[i] {
                    j += 1;
                }
                let leaves: Vec<String> =
                    flows[i].values[..l].iter().map(|x| x.to_string()).collect();
                let mut term = format!("x[{}]", leaves.join(","));
                if j - i > 1 {
                    term.push_str(&format!("^{}", j - i));
                }
                parts.push(term);
                i = j;
            }
            parts.join("*")
        };
        format!("{} - {}", side(&self.lhs), side(&self.rhs))
    }
}

impl Serialize for Binomial {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Binomial", 3)?;
        st.serialize_field("lhs", &self.lhs)?;
        st.serialize_field("rhs", &self.rhs)?;
        st.serialize_field("degree", &self.degree())?;
        st.end()
    }
}
