//! Leaf-labelled trees.
//!
//! Nodes are numbered with the leaves first: node `i < leaf_count` is the leaf labelled
//! `i + 1`, interior nodes follow. A [`RootedTree`] fixes an orientation away from an
//! interior root and the canonical edge order used everywhere else in the crate:
//! pendant edges by leaf label, then interior edges in BFS discovery order.

mod newick;

use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;
use thiserror::Error;

pub use newick::parse_newick;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("duplicate leaf label {0}")]
    DuplicateLabel(usize),
    #[error("leaf labels must be exactly 1..={expected}; label {found} is out of range")]
    NonContiguousLabels { expected: usize, found: usize },
    #[error("a tree needs at least 3 leaves, found {0}")]
    TooFewLeaves(usize),
    #[error("interior node {node} has valency {valency}; at least 3 is required")]
    InteriorValency { node: usize, valency: usize },
    #[error("edge list does not describe a tree: {0}")]
    NotATree(String),
    #[error("node {0} is not a leaf")]
    NotALeaf(usize),
    #[error("node {0} is not an interior node")]
    NotInterior(usize),
    #[error("node {0} is not in the tree")]
    UnknownNode(usize),
    #[error("edge {0:?} is not in the tree")]
    UnknownEdge((usize, usize)),
    #[error("edge {0:?} is pendant; an interior edge is required")]
    PendantEdge((usize, usize)),
    #[error("target tree is not a contraction of the source tree")]
    NotAContraction,
}

/// An unrooted leaf-labelled tree with `leaf_count >= 3` and interior valencies `>= 3`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tree {
    leaf_count: usize,
    adjacency: Vec<Vec<usize>>,
}

impl Tree {
    /// Builds and validates a tree. Nodes `0..leaf_count` are the leaves labelled `1..=leaf_count`.
    pub fn from_edges(
        leaf_count: usize,
        node_count: usize,
        edges: &[(usize, usize)],
    ) -> Result<Self, TreeError> {
        if leaf_count < 3 {
            return Err(TreeError::TooFewLeaves(leaf_count));
        }
        if edges.len() + 1 != node_count {
            return Err(TreeError::NotATree(format!(
                "{} nodes need {} edges, got {}",
                node_count,
                node_count.saturating_sub(1),
                edges.len()
            )));
        }
        let mut adjacency = vec![Vec::new(); node_count];
        for &(a, b) in edges {
            if a >= node_count || b >= node_count || a == b {
                return Err(TreeError::NotATree(format!("bad edge ({a}, {b})")));
            }
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(TreeError::NotATree("repeated edge".into()));
            }
        }
        let tree = Tree {
            leaf_count,
            adjacency,
        };
        if tree.bfs_order(0).len() != node_count {
            return Err(TreeError::NotATree("graph is disconnected".into()));
        }
        for (node, nbrs) in tree.adjacency.iter().enumerate() {
            if node < leaf_count && nbrs.len() != 1 {
                return Err(TreeError::NotATree(format!(
                    "leaf {} has degree {}",
                    node + 1,
                    nbrs.len()
                )));
            }
            if node >= leaf_count && nbrs.len() < 3 {
                return Err(TreeError::InteriorValency {
                    node,
                    valency: nbrs.len(),
                });
            }
        }
        Ok(tree)
    }

    /// The claw with `leaves` leaves and a single interior node.
    pub fn claw(leaves: usize) -> Result<Self, TreeError> {
        let edges: Vec<_> = (0..leaves).map(|i| (leaves, i)).collect();
        Tree::from_edges(leaves, leaves + 1, &edges)
    }

    pub fn tripod() -> Self {
        Tree::claw(3).expect("tripod is valid")
    }

    /// Caterpillar on `leaves >= 3` leaves: cherries {1,2} and {l-1,l} at the ends.
    pub fn caterpillar(leaves: usize) -> Result<Self, TreeError> {
        if leaves < 3 {
            return Err(TreeError::TooFewLeaves(leaves));
        }
        if leaves == 3 {
            return Tree::claw(3);
        }
        // spine node s sits at id leaves + s; leaf node k (2 <= k < leaves - 2) hangs off s = k - 1
        let spine = leaves - 2;
        let mut edges: Vec<_> = (0..spine - 1)
            .map(|s| (leaves + s, leaves + s + 1))
            .collect();
        edges.push((leaves, 0));
        edges.push((leaves, 1));
        edges.extend((2..leaves - 2).map(|k| (leaves + k - 1, k)));
        edges.push((leaves + spine - 1, leaves - 2));
        edges.push((leaves + spine - 1, leaves - 1));
        Tree::from_edges(leaves, leaves + spine, &edges)
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_count
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.len() - 1
    }

    pub fn interior_node_count(&self) -> usize {
        self.adjacency.len() - self.leaf_count
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        node < self.leaf_count
    }

    pub fn is_claw(&self) -> bool {
        self.interior_node_count() == 1
    }

    pub fn is_trivalent(&self) -> bool {
        (self.leaf_count..self.node_count()).all(|n| self.adjacency[n].len() == 3)
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn valency(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    /// Node id of the leaf with the given label.
    pub fn leaf_node(&self, label: usize) -> Result<usize, TreeError> {
        if label == 0 || label > self.leaf_count {
            return Err(TreeError::UnknownNode(label));
        }
        Ok(label - 1)
    }

    /// All edges as `(smaller, larger)` node pairs, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (a, nbrs) in self.adjacency.iter().enumerate() {
            for &b in nbrs {
                if a < b {
                    out.push((a, b));
                }
            }
        }
        out
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a < self.node_count() && self.adjacency[a].binary_search(&b).is_ok()
    }

    pub fn is_interior_edge(&self, a: usize, b: usize) -> bool {
        self.has_edge(a, b) && !self.is_leaf(a) && !self.is_leaf(b)
    }

    /// Interior node adjacent to leaf 1; the default root.
    pub fn canonical_root(&self) -> usize {
        self.adjacency[0][0]
    }

    fn bfs_order(&self, start: usize) -> Vec<usize> {
        let mut seen = vec![false; self.adjacency.len()];
        let mut order = Vec::with_capacity(self.adjacency.len());
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(n) = queue.pop_front() {
            order.push(n);
            for &m in &self.adjacency[n] {
                if !seen[m] {
                    seen[m] = true;
                    queue.push_back(m);
                }
            }
        }
        order
    }

    /// Node sequence of the unique path from `a` to `b`, both included.
    pub fn path_nodes(&self, a: usize, b: usize) -> Result<Vec<usize>, TreeError> {
        let n = self.node_count();
        for x in [a, b] {
            if x >= n {
                return Err(TreeError::UnknownNode(x));
            }
        }
        let mut prev = vec![usize::MAX; n];
        prev[a] = a;
        let mut queue = VecDeque::from([a]);
        while let Some(x) = queue.pop_front() {
            if x == b {
                break;
            }
            for &y in &self.adjacency[x] {
                if prev[y] == usize::MAX {
                    prev[y] = x;
                    queue.push_back(y);
                }
            }
        }
        let mut path = vec![b];
        let mut cur = b;
        while cur != a {
            cur = prev[cur];
            path.push(cur);
        }
        path.reverse();
        Ok(path)
    }

    /// Edges of the shortest path between two nodes, as node pairs in walking order.
    pub fn shortest_path(&self, a: usize, b: usize) -> Result<Vec<(usize, usize)>, TreeError> {
        let nodes = self.path_nodes(a, b)?;
        Ok(nodes.windows(2).map(|w| (w[0], w[1])).collect())
    }

    /// Leaves (as labels) on the `b` side of the edge `(a, b)`.
    pub fn leaves_beyond(&self, a: usize, b: usize) -> Result<Vec<usize>, TreeError> {
        if !self.has_edge(a, b) {
            return Err(TreeError::UnknownEdge((a, b)));
        }
        let mut out = Vec::new();
        let mut stack = vec![(b, a)];
        while let Some((x, from)) = stack.pop() {
            if self.is_leaf(x) {
                out.push(x + 1);
            }
            for &y in &self.adjacency[x] {
                if y != from {
                    stack.push((y, x));
                }
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    /// Nontrivial splits, each given by the side not containing leaf 1.
    /// Two trees on the same leaves are label-isomorphic iff their split sets agree.
    pub fn splits(&self) -> BTreeSet<Vec<usize>> {
        let mut out = BTreeSet::new();
        for (a, b) in self.edges() {
            if self.is_leaf(a) || self.is_leaf(b) {
                continue;
            }
            let side = self.leaves_beyond(a, b).expect("edge exists");
            let side = if side.contains(&1) {
                let set: BTreeSet<_> = side.into_iter().collect();
                (1..=self.leaf_count).filter(|l| !set.contains(l)).collect()
            } else {
                side
            };
            out.insert(side);
        }
        out
    }

    pub fn is_isomorphic(&self, other: &Tree) -> bool {
        self.leaf_count == other.leaf_count && self.splits() == other.splits()
    }

    /// Identifies the endpoints of the interior edge `(a, b)`; leaves keep their labels.
    pub fn contract_interior_edge(&self, a: usize, b: usize) -> Result<Tree, TreeError> {
        if !self.has_edge(a, b) {
            return Err(TreeError::UnknownEdge((a, b)));
        }
        if self.is_leaf(a) || self.is_leaf(b) {
            return Err(TreeError::PendantEdge((a, b)));
        }
        let (keep, gone) = (a.min(b), a.max(b));
        let relabel = |x: usize| -> usize {
            let x = if x == gone { keep } else { x };
            if x > gone {
                x - 1
            } else {
                x
            }
        };
        let edges: Vec<_> = self
            .edges()
            .into_iter()
            .filter(|&(x, y)| !((x == keep && y == gone) || (x == gone && y == keep)))
            .map(|(x, y)| (relabel(x), relabel(y)))
            .collect();
        Tree::from_edges(self.leaf_count, self.node_count() - 1, &edges)
    }

    /// Newick text rooted at the canonical root, children in node order.
    pub fn to_newick(&self) -> String {
        let mut out = String::new();
        self.write_newick(self.canonical_root(), usize::MAX, &mut out);
        out.push(';');
        out
    }

    fn write_newick(&self, node: usize, from: usize, out: &mut String) {
        if self.is_leaf(node) {
            out.push_str(&(node + 1).to_string());
            return;
        }
        out.push('(');
        let mut first = true;
        for &c in &self.adjacency[node] {
            if c == from {
                continue;
            }
            if !first {
                out.push(',');
            }
            first = false;
            self.write_newick(c, node, out);
        }
        out.push(')');
    }
}

/// A tree oriented away from an interior root, with the canonical edge order.
#[derive(Clone, Debug)]
pub struct RootedTree {
    tree: Tree,
    root: usize,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    /// Canonical edge order, each edge as `(parent, child)`.
    edges: Vec<(usize, usize)>,
    /// Index of the incoming edge of each non-root node.
    incoming: Vec<Option<usize>>,
    /// Non-root nodes, children before parents.
    postorder: Vec<usize>,
}

impl RootedTree {
    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn leaf_count(&self) -> usize {
        self.tree.leaf_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges in canonical order as `(parent, child)` pairs.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parent[node]
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    /// Index of the edge entering `node`; `None` for the root.
    pub fn incoming_edge(&self, node: usize) -> Option<usize> {
        self.incoming[node]
    }

    /// Index of the edge joining two adjacent nodes.
    pub fn edge_between(&self, a: usize, b: usize) -> Result<usize, TreeError> {
        if self.parent.get(b).copied().flatten() == Some(a) {
            Ok(self.incoming[b].expect("non-root"))
        } else if self.parent.get(a).copied().flatten() == Some(b) {
            Ok(self.incoming[a].expect("non-root"))
        } else {
            Err(TreeError::UnknownEdge((a, b)))
        }
    }

    pub fn is_pendant_edge(&self, edge: usize) -> bool {
        edge < self.tree.leaf_count
    }

    /// Non-root nodes ordered so that children precede parents.
    pub(crate) fn postorder(&self) -> &[usize] {
        &self.postorder
    }

    /// Edge indices of the shortest path from `a` to `b`, in walking order.
    pub fn shortest_path(&self, a: usize, b: usize) -> Result<Vec<usize>, TreeError> {
        self.tree
            .shortest_path(a, b)?
            .into_iter()
            .map(|(x, y)| self.edge_between(x, y))
            .collect()
    }

    /// JSON dump `{"leaves": l, "edges": [[parent, child], ...]}` with 1-based node numbers.
    pub fn to_json_value(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Dump {
            leaves: usize,
            edges: Vec<[usize; 2]>,
        }
        serde_json::to_value(Dump {
            leaves: self.tree.leaf_count,
            edges: self.edges.iter().map(|&(p, c)| [p + 1, c + 1]).collect(),
        })
        .expect("plain data")
    }
}

impl Tree {
    /// Orients the tree away from the interior node `root`.
    pub fn root_at(&self, root: usize) -> Result<RootedTree, TreeError> {
        if root >= self.node_count() {
            return Err(TreeError::UnknownNode(root));
        }
        if self.is_leaf(root) {
            return Err(TreeError::NotInterior(root));
        }
        let n = self.node_count();
        let order = self.bfs_order(root);
        let mut parent = vec![None; n];
        let mut children = vec![Vec::new(); n];
        let mut seen = vec![false; n];
        seen[root] = true;
        for &x in &order {
            for &y in &self.adjacency[x] {
                if !seen[y] {
                    seen[y] = true;
                    parent[y] = Some(x);
                    children[x].push(y);
                }
            }
        }
        let mut edges: Vec<(usize, usize)> = (0..self.leaf_count)
            .map(|leaf| (parent[leaf].expect("leaves are never the root"), leaf))
            .collect();
        edges.extend(
            order
                .iter()
                .filter(|&&x| x != root && !self.is_leaf(x))
                .map(|&x| (parent[x].expect("non-root"), x)),
        );
        let mut incoming = vec![None; n];
        for (i, &(_, c)) in edges.iter().enumerate() {
            incoming[c] = Some(i);
        }
        let postorder = order.iter().rev().copied().filter(|&x| x != root).collect();
        Ok(RootedTree {
            tree: self.clone(),
            root,
            parent,
            children,
            edges,
            incoming,
            postorder,
        })
    }

    /// Rooted at [`Tree::canonical_root`].
    pub fn rooted(&self) -> RootedTree {
        self.root_at(self.canonical_root())
            .expect("canonical root is interior")
    }
}

/// Which of the two joined trees a leaf came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// `T = T1 * T2`: two trees glued along the leaves `v1`, `v2`, which become the edge
/// epsilon. Records where every leaf of the joined tree came from.
#[derive(Clone, Debug)]
pub struct Junction {
    joined: Tree,
    left: Tree,
    right: Tree,
    left_glue: usize,
    right_glue: usize,
    epsilon: (usize, usize),
    origin: Vec<(Side, usize)>,
}

impl Junction {
    pub fn joined(&self) -> &Tree {
        &self.joined
    }

    pub fn left(&self) -> &Tree {
        &self.left
    }

    pub fn right(&self) -> &Tree {
        &self.right
    }

    /// Label of `v1` in the left tree.
    pub fn left_glue(&self) -> usize {
        self.left_glue
    }

    /// Label of `v2` in the right tree.
    pub fn right_glue(&self) -> usize {
        self.right_glue
    }

    /// The edge epsilon as `(left endpoint, right endpoint)` node ids of the joined tree.
    pub fn epsilon(&self) -> (usize, usize) {
        self.epsilon
    }

    pub fn part(&self, side: Side) -> &Tree {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    pub fn glue(&self, side: Side) -> usize {
        match side {
            Side::Left => self.left_glue,
            Side::Right => self.right_glue,
        }
    }

    /// Side and part label of the joined tree's leaf `label`.
    pub fn origin(&self, label: usize) -> (Side, usize) {
        self.origin[label - 1]
    }

    /// Joined-tree label of the part leaf `label`; `None` for the glue leaf.
    pub fn image(&self, side: Side, label: usize) -> Option<usize> {
        self.origin
            .iter()
            .position(|&o| o == (side, label))
            .map(|i| i + 1)
    }

    /// Lowest-labelled leaf of a part other than its glue leaf.
    pub fn default_distinguished(&self, side: Side) -> usize {
        if self.glue(side) == 1 {
            2
        } else {
            1
        }
    }
}

/// Glues `t1` and `t2` along the leaves labelled `v1` and `v2`.
///
/// Leaves of `t1` other than `v1` become `1..l1-1` in ascending order, leaves of `t2`
/// other than `v2` become `l1..l1+l2-2`.
pub fn join(t1: &Tree, v1: usize, t2: &Tree, v2: usize) -> Result<Junction, TreeError> {
    let leaf1 = t1.leaf_node(v1).map_err(|_| TreeError::NotALeaf(v1))?;
    let leaf2 = t2.leaf_node(v2).map_err(|_| TreeError::NotALeaf(v2))?;
    let (l1, l2) = (t1.leaf_count, t2.leaf_count);
    let leaves = l1 + l2 - 2;
    let n1 = t1.adjacency[leaf1][0];
    let n2 = t2.adjacency[leaf2][0];

    let mut origin = Vec::with_capacity(leaves);
    let mut map1 = vec![usize::MAX; t1.node_count()];
    let mut map2 = vec![usize::MAX; t2.node_count()];
    for leaf in (0..l1).filter(|&x| x != leaf1) {
        map1[leaf] = origin.len();
        origin.push((Side::Left, leaf + 1));
    }
    for leaf in (0..l2).filter(|&x| x != leaf2) {
        map2[leaf] = origin.len();
        origin.push((Side::Right, leaf + 1));
    }
    let mut next = leaves;
    for node in l1..t1.node_count() {
        map1[node] = next;
        next += 1;
    }
    for node in l2..t2.node_count() {
        map2[node] = next;
        next += 1;
    }
    let mut edges = Vec::with_capacity(t1.edge_count() + t2.edge_count() - 1);
    for (a, b) in t1.edges() {
        if a != leaf1 && b != leaf1 {
            edges.push((map1[a], map1[b]));
        }
    }
    for (a, b) in t2.edges() {
        if a != leaf2 && b != leaf2 {
            edges.push((map2[a], map2[b]));
        }
    }
    let epsilon = (map1[n1], map2[n2]);
    edges.push(epsilon);
    let joined = Tree::from_edges(leaves, next, &edges)?;
    Ok(Junction {
        joined,
        left: t1.clone(),
        right: t2.clone(),
        left_glue: v1,
        right_glue: v2,
        epsilon,
        origin,
    })
}

/// Splits a tree at the interior edge `(a, b)` (node ids): the left part contains `a`,
/// the right part `b`. In each part the glue leaf gets the highest label and the other
/// leaves keep their relative order.
pub fn decompose_at_edge(tree: &Tree, a: usize, b: usize) -> Result<Junction, TreeError> {
    if !tree.has_edge(a, b) {
        return Err(TreeError::UnknownEdge((a, b)));
    }
    if tree.is_leaf(a) || tree.is_leaf(b) {
        return Err(TreeError::PendantEdge((a, b)));
    }
    let side_nodes = |start: usize, from: usize| -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![(start, from)];
        while let Some((x, f)) = stack.pop() {
            out.push(x);
            for &y in &tree.adjacency[x] {
                if y != f {
                    stack.push((y, x));
                }
            }
        }
        out.sort_unstable();
        out
    };
    let build = |nodes: &[usize], attach: usize| -> Result<(Tree, Vec<usize>), TreeError> {
        let leaves: Vec<usize> = nodes.iter().copied().filter(|&x| tree.is_leaf(x)).collect();
        let interior: Vec<usize> = nodes
            .iter()
            .copied()
            .filter(|&x| !tree.is_leaf(x))
            .collect();
        let leaf_count = leaves.len() + 1;
        let mut map = vec![usize::MAX; tree.node_count()];
        for (i, &x) in leaves.iter().enumerate() {
            map[x] = i;
        }
        for (i, &x) in interior.iter().enumerate() {
            map[x] = leaf_count + i;
        }
        let mut edges = Vec::new();
        for &x in nodes {
            for &y in &tree.adjacency[x] {
                if x < y && map[y] != usize::MAX {
                    edges.push((map[x], map[y]));
                }
            }
        }
        let glue = leaf_count - 1;
        edges.push((map[attach], glue));
        let part = Tree::from_edges(leaf_count, leaf_count + interior.len(), &edges)?;
        Ok((part, leaves))
    };
    let (left, left_leaves) = build(&side_nodes(a, b), a)?;
    let (right, right_leaves) = build(&side_nodes(b, a), b)?;
    let mut origin = vec![(Side::Left, 0); tree.leaf_count];
    for (i, &x) in left_leaves.iter().enumerate() {
        origin[x] = (Side::Left, i + 1);
    }
    for (i, &x) in right_leaves.iter().enumerate() {
        origin[x] = (Side::Right, i + 1);
    }
    Ok(Junction {
        joined: tree.clone(),
        left_glue: left.leaf_count,
        right_glue: right.leaf_count,
        left,
        right,
        epsilon: (a, b),
        origin,
    })
}

/// `source >= target`: `target` is obtained from `source` by contracting interior edges.
#[derive(Clone, Debug)]
pub struct Contraction {
    source: RootedTree,
    target: RootedTree,
}

impl Contraction {
    pub fn new(source: RootedTree, target: RootedTree) -> Result<Self, TreeError> {
        let (s, t) = (source.tree(), target.tree());
        if s.leaf_count != t.leaf_count || !t.splits().is_subset(&s.splits()) {
            return Err(TreeError::NotAContraction);
        }
        Ok(Contraction { source, target })
    }

    pub fn source(&self) -> &RootedTree {
        &self.source
    }

    pub fn target(&self) -> &RootedTree {
        &self.target
    }
}
