//! Test oracles shared by the integration tests. Nothing here calls the code under test
//! to decide what the right answer is.

#![allow(dead_code)]

use std::collections::BTreeSet;

use num_bigint::BigInt;
use phylotorus::lattice::{kernel_lattice, IntegerMatrix, LatticeBasis, LatticeOptions};
use phylotorus::{GroupSpec, Tree};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

/// Rows: one per row sum, column sum and class `{(i, j) : i + j = k}`; columns: the
/// `g^2` entries of a matrix in row-major order.
pub fn adm_conditions(group: &GroupSpec) -> Vec<Vec<i64>> {
    let g = group.order();
    let elements = group.elements();
    let mut rows = vec![vec![0i64; g * g]; 3 * g];
    for i in 0..g {
        for j in 0..g {
            let k = group.index_of(&group.add(&elements[i], &elements[j]).unwrap());
            rows[i][i * g + j] = 1;
            rows[g + j][i * g + j] = 1;
            rows[2 * g + k][i * g + j] = 1;
        }
    }
    rows
}

/// The lattice of admissible matrices, as the kernel of [`adm_conditions`].
pub fn adm_lattice(group: &GroupSpec) -> LatticeBasis {
    let a = IntegerMatrix::from_i64_rows(&adm_conditions(group));
    kernel_lattice(&a, &LatticeOptions::default()).unwrap()
}

/// True iff the flattened matrix satisfies every condition.
pub fn satisfies_conditions(group: &GroupSpec, flat: &[i64]) -> bool {
    adm_conditions(group)
        .iter()
        .all(|row| row.iter().zip(flat).map(|(a, b)| a * b).sum::<i64>() == 0)
}

pub fn sparse(flat: &[i64]) -> Vec<(usize, BigInt)> {
    flat.iter()
        .enumerate()
        .filter(|(_, &x)| x != 0)
        .map(|(i, &x)| (i, BigInt::from(x)))
        .collect()
}

pub struct Instance {
    pub name: &'static str,
    pub newick: &'static str,
}

/// Trees of the end-to-end battery. The 5-leaf caterpillar appears with leaf 1 in a
/// cherry and with leaf 1 in the middle, so both rootings of that shape are exercised.
pub fn battery_trees() -> Vec<Instance> {
    vec![
        Instance {
            name: "tripod",
            newick: "(1,2,3);",
        },
        Instance {
            name: "quartet",
            newick: "((1,2),(3,4));",
        },
        Instance {
            name: "5-leaf trivalent, leaf 1 in a cherry",
            newick: "((1,2),3,(4,5));",
        },
        Instance {
            name: "5-leaf trivalent, leaf 1 in the middle",
            newick: "((2,3),1,(4,5));",
        },
        Instance {
            name: "5-leaf, cherry and 3-claw",
            newick: "((1,2),(3,4,5));",
        },
        Instance {
            name: "4-claw",
            newick: "(1,2,3,4);",
        },
        Instance {
            name: "5-claw",
            newick: "(1,2,3,4,5);",
        },
        Instance {
            name: "6-leaf caterpillar",
            newick: "(1,(2,(3,(4,(5,6)))));",
        },
    ]
}

pub const BATTERY_GROUPS: [&str; 6] = ["Z2", "Z3", "Z4", "Z5", "Z2xZ2", "Z2xZ3"];

/// `g^(l-1) - 1 - (g-1) e` from the tree's counts.
pub fn expected_codim(tree: &Tree, g: usize) -> usize {
    g.pow(tree.leaf_count() as u32 - 1) - 1 - (g - 1) * tree.edge_count()
}

/// A random rooted tree as nested clades.
#[derive(Clone, Debug)]
pub enum Clade {
    Leaf(usize),
    Inner(Vec<Clade>),
}

impl Clade {
    pub fn leaves(&self) -> Vec<usize> {
        match self {
            Clade::Leaf(l) => vec![*l],
            Clade::Inner(cs) => cs.iter().flat_map(Clade::leaves).collect(),
        }
    }

    /// Newick text; `label` rewrites leaf labels and `wrap` puts one leaf in its own
    /// parentheses.
    pub fn render(
        &self,
        label: &dyn Fn(usize) -> String,
        wrap: Option<usize>,
        spaced: bool,
    ) -> String {
        match self {
            Clade::Leaf(l) if Some(*l) == wrap => format!("({})", label(*l)),
            Clade::Leaf(l) => label(*l),
            Clade::Inner(cs) => {
                let sep = if spaced { ", " } else { "," };
                let parts: Vec<String> = cs.iter().map(|c| c.render(label, wrap, spaced)).collect();
                format!("({})", parts.join(sep))
            }
        }
    }

    fn collect_splits(&self, n: usize, is_root: bool, out: &mut BTreeSet<Vec<usize>>) {
        if let Clade::Inner(cs) = self {
            let side = self.leaves();
            if !is_root && side.len() >= 2 && side.len() <= n - 2 {
                let mut side = if side.contains(&1) {
                    (1..=n).filter(|l| !side.contains(l)).collect::<Vec<_>>()
                } else {
                    side
                };
                side.sort_unstable();
                out.insert(side);
            }
            for c in cs {
                c.collect_splits(n, false, out);
            }
        }
    }

    /// Nontrivial splits, each as the side without leaf 1.
    pub fn splits(&self, n: usize) -> BTreeSet<Vec<usize>> {
        let mut out = BTreeSet::new();
        self.collect_splits(n, true, &mut out);
        out
    }
}

fn random_clade(leaves: &[usize], rng: &mut StdRng) -> Clade {
    if leaves.len() == 1 {
        return Clade::Leaf(leaves[0]);
    }
    let k = rng.gen_range(2..=leaves.len().min(4));
    let mut cuts: Vec<usize> = (1..leaves.len()).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<usize> = cuts.into_iter().take(k - 1).collect();
    cuts.sort_unstable();
    let mut parts = Vec::with_capacity(k);
    let mut start = 0;
    for c in cuts.into_iter().chain(std::iter::once(leaves.len())) {
        parts.push(random_clade(&leaves[start..c], rng));
        start = c;
    }
    Clade::Inner(parts)
}

/// A random tree on `n` shuffled labels.
pub fn random_tree(n: usize, rng: &mut StdRng) -> Clade {
    let mut labels: Vec<usize> = (1..=n).collect();
    labels.shuffle(rng);
    random_clade(&labels, rng)
}

/// Parses a random tree, its round trip and four corrupted variants; returns the first
/// disagreement.
pub fn check_newick_case(n: usize, seed: u64) -> Result<(), String> {
    use phylotorus::{parse_newick, TreeError};
    use rand::SeedableRng;

    let mut rng = StdRng::seed_from_u64(seed);
    let clade = random_tree(n, &mut rng);
    let spaced = rng.gen_bool(0.5);
    let with_lengths = rng.gen_bool(0.3);
    let label = |l: usize| {
        if with_lengths {
            format!("{l}:0.{l}")
        } else {
            l.to_string()
        }
    };
    let text = format!("{};", clade.render(&label, None, spaced));
    let expected = clade.splits(n);

    let tree = parse_newick(&text).map_err(|e| format!("{text}: {e}"))?;
    if tree.leaf_count() != n || tree.splits() != expected {
        return Err(format!(
            "{text}: splits {:?}, expected {expected:?}",
            tree.splits()
        ));
    }
    let again =
        parse_newick(&tree.to_newick()).map_err(|e| format!("round trip of {text}: {e}"))?;
    if again.splits() != expected || again.node_count() != tree.node_count() {
        return Err(format!("round trip of {text} gave {}", tree.to_newick()));
    }

    let plain = |l: usize| l.to_string();
    let dup = format!(
        "{};",
        clade.render(
            &|l| if l == n { "1".into() } else { l.to_string() },
            None,
            false
        )
    );
    if !matches!(parse_newick(&dup), Err(TreeError::DuplicateLabel(1))) {
        return Err(format!("{dup}: duplicate label accepted or misreported"));
    }
    let wrap = rng.gen_range(1..=n);
    let wrapped = format!("{};", clade.render(&plain, Some(wrap), false));
    if !matches!(
        parse_newick(&wrapped),
        Err(TreeError::InteriorValency { valency: 2, .. })
    ) {
        return Err(format!("{wrapped}: valency-2 node accepted or misreported"));
    }
    let base = format!("{};", clade.render(&plain, None, false));
    let comma = base.find(',').expect("at least two leaves");
    let mut doubled = base.clone();
    doubled.insert(comma + 1, ',');
    match parse_newick(&doubled) {
        Err(TreeError::Syntax { position, .. }) if position == comma + 1 => {}
        other => {
            return Err(format!(
                "{doubled}: expected a syntax error at {}, got {other:?}",
                comma + 1
            ))
        }
    }
    let unterminated = &base[..base.len() - 1];
    match parse_newick(unterminated) {
        Err(TreeError::Syntax { position, .. }) if position == unterminated.len() => {}
        other => {
            return Err(format!(
                "{unterminated}: expected a syntax error at the end, got {other:?}"
            ))
        }
    }
    Ok(())
}
