//! Finite lattices of subgroups: order, covers, meets, joins and height levels.

mod builders;
pub mod text;

pub use builders::*;

use std::collections::BTreeSet;

use crate::group::{GroupAction, GroupDescriptor, GroupError, GroupKind};

#[derive(Debug, thiserror::Error)]
pub enum LatticeError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("lattice has no nodes")]
    Empty,
    #[error("nodes {0} and {1} describe the same subgroup")]
    DuplicateNode(String, String),
    #[error("declared relation {0} <= {1} contradicts the groups")]
    Contradiction(String, String),
    #[error("no unique bottom element")]
    NoBottom,
    #[error("no unique top element")]
    NoTop,
    #[error("bottom node '{0}' is not the trivial group")]
    BottomNotTrivial(String),
    #[error("nodes {0} and {1} have no unique {2}")]
    NotALattice(String, String, &'static str),
    #[error("{2} of {0} and {1} is not a node of the lattice")]
    NotClosed(String, String, &'static str),
    #[error("'{0}' is not a supergroup of every node")]
    NotASupergroup(String),
    #[error("unknown node id {0}")]
    UnknownNode(usize),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// One subgroup in a lattice.
#[derive(Clone, Debug)]
pub struct SubgroupNode {
    pub id: usize,
    pub group: GroupDescriptor,
    pub label: String,
    /// Length of the longest chain from the bottom.
    pub height: usize,
}

/// A finite lattice of subgroups ordered by inclusion.
///
/// Node ids are positions in [`Lattice::nodes`]. Lattices cut out of a larger
/// one keep the ids of the original in [`Lattice::origin`].
#[derive(Clone, Debug)]
pub struct Lattice {
    nodes: Vec<SubgroupNode>,
    leq: Vec<Vec<bool>>,
    covers: Vec<(usize, usize)>,
    meet: Vec<Vec<usize>>,
    join: Vec<Vec<usize>>,
    levels: Vec<Vec<usize>>,
    bottom: usize,
    top: usize,
    origin: Vec<usize>,
    action: Option<GroupAction>,
}

impl Lattice {
    /// Builds a lattice over `groups`.
    ///
    /// The order is computed wherever the group kinds make subgrouphood
    /// decidable; `declared` adds `(lower, upper)` facts for the rest (for
    /// instance a circle below `SO(3)` when the circle is a custom kind). The
    /// reflexive-transitive closure is taken before validation. The bottom
    /// must be the trivial group.
    pub fn from_groups(
        groups: Vec<GroupDescriptor>,
        declared: &[(usize, usize)],
    ) -> Result<Self, LatticeError> {
        Self::build(groups, declared, true)
    }

    /// Lattice of the given subgroups of one finite table.
    pub fn from_finite_subgroups(
        table: &std::sync::Arc<crate::group::CayleyTable>,
        subgroups: Vec<(BTreeSet<usize>, String)>,
    ) -> Result<Self, LatticeError> {
        let groups = subgroups
            .into_iter()
            .map(|(m, label)| GroupDescriptor::from_members(table, m, label))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_groups(groups, &[])
    }

    fn build(
        groups: Vec<GroupDescriptor>,
        declared: &[(usize, usize)],
        require_trivial_bottom: bool,
    ) -> Result<Self, LatticeError> {
        let n = groups.len();
        if n == 0 {
            return Err(LatticeError::Empty);
        }
        for g in &groups {
            g.validate()?;
        }
        let mut leq = vec![vec![false; n]; n];
        for a in 0..n {
            for b in 0..n {
                leq[a][b] = a == b || groups[a].is_subgroup_of(&groups[b]) == Some(true);
            }
        }
        for &(a, b) in declared {
            if a >= n || b >= n {
                return Err(LatticeError::UnknownNode(a.max(b)));
            }
            if groups[a].is_subgroup_of(&groups[b]) == Some(false) {
                return Err(LatticeError::Contradiction(
                    groups[a].label().to_string(),
                    groups[b].label().to_string(),
                ));
            }
            leq[a][b] = true;
        }
        for k in 0..n {
            for a in 0..n {
                if leq[a][k] {
                    for b in 0..n {
                        if leq[k][b] {
                            leq[a][b] = true;
                        }
                    }
                }
            }
        }
        let nodes: Vec<SubgroupNode> = groups
            .into_iter()
            .enumerate()
            .map(|(id, group)| SubgroupNode {
                id,
                label: group.label().to_string(),
                group,
                height: 0,
            })
            .collect();
        Self::finish(nodes, leq, (0..n).collect(), None, require_trivial_bottom)
    }

    fn finish(
        mut nodes: Vec<SubgroupNode>,
        leq: Vec<Vec<bool>>,
        origin: Vec<usize>,
        action: Option<GroupAction>,
        require_trivial_bottom: bool,
    ) -> Result<Self, LatticeError> {
        let n = nodes.len();
        let label = |i: usize| nodes[i].label.clone();
        for a in 0..n {
            for b in (a + 1)..n {
                if leq[a][b] && leq[b][a] {
                    return Err(LatticeError::DuplicateNode(label(a), label(b)));
                }
            }
        }
        let bottom = (0..n)
            .find(|&a| (0..n).all(|b| leq[a][b]))
            .ok_or(LatticeError::NoBottom)?;
        let top = (0..n)
            .find(|&a| (0..n).all(|b| leq[b][a]))
            .ok_or(LatticeError::NoTop)?;
        if require_trivial_bottom && !nodes[bottom].group.is_trivial() {
            return Err(LatticeError::BottomNotTrivial(label(bottom)));
        }

        let mut meet = vec![vec![0; n]; n];
        let mut join = vec![vec![0; n]; n];
        for a in 0..n {
            for b in a..n {
                let lower: Vec<usize> = (0..n).filter(|&c| leq[c][a] && leq[c][b]).collect();
                let m = lower
                    .iter()
                    .copied()
                    .find(|&c| lower.iter().all(|&d| leq[d][c]))
                    .ok_or_else(|| LatticeError::NotALattice(label(a), label(b), "meet"))?;
                let upper: Vec<usize> = (0..n).filter(|&c| leq[a][c] && leq[b][c]).collect();
                let j = upper
                    .iter()
                    .copied()
                    .find(|&c| upper.iter().all(|&d| leq[c][d]))
                    .ok_or_else(|| LatticeError::NotALattice(label(a), label(b), "join"))?;
                meet[a][b] = m;
                meet[b][a] = m;
                join[a][b] = j;
                join[b][a] = j;
            }
        }
        for a in 0..n {
            for b in 0..n {
                if meet[a][join[a][b]] != a || join[a][meet[a][b]] != a {
                    return Err(LatticeError::NotALattice(label(a), label(b), "absorption"));
                }
            }
        }
        verify_finite_meets_joins(&nodes, &meet, &join)?;

        let covers: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| (0..n).map(move |b| (a, b)))
            .filter(|&(a, b)| {
                a != b && leq[a][b] && !(0..n).any(|c| c != a && c != b && leq[a][c] && leq[c][b])
            })
            .collect();

        // Longest-chain heights, relaxing covers in a topological order.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&a| (0..n).filter(|&c| leq[c][a]).count());
        let mut height = vec![0usize; n];
        for &b in &order {
            height[b] = covers
                .iter()
                .filter(|&&(_, up)| up == b)
                .map(|&(low, _)| height[low] + 1)
                .max()
                .unwrap_or(0);
        }
        let max_h = height.iter().copied().max().unwrap_or(0);
        let mut levels = vec![Vec::new(); max_h + 1];
        for (id, node) in nodes.iter_mut().enumerate() {
            node.id = id;
            node.height = height[id];
            levels[height[id]].push(id);
        }

        Ok(Self {
            nodes,
            leq,
            covers,
            meet,
            join,
            levels,
            bottom,
            top,
            origin,
            action,
        })
    }

    /// Attaches the ambient action used to move feature vectors.
    pub fn with_action(mut self, action: GroupAction) -> Self {
        self.action = Some(action);
        self
    }

    pub fn action(&self) -> Option<&GroupAction> {
        self.action.as_ref()
    }

    /// The ambient action restricted to node `id`.
    pub fn node_action(&self, id: usize) -> Option<GroupAction> {
        self.action
            .as_ref()
            .map(|a| a.restricted_to(self.nodes[id].group.clone()))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[SubgroupNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &SubgroupNode {
        &self.nodes[id]
    }

    pub fn bottom(&self) -> usize {
        self.bottom
    }

    pub fn top(&self) -> usize {
        self.top
    }

    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.leq[a][b]
    }

    /// Hasse diagram edges `(lower, upper)`.
    pub fn covers(&self) -> &[(usize, usize)] {
        &self.covers
    }

    /// Nodes covered by `id`.
    pub fn lower_covers(&self, id: usize) -> Vec<usize> {
        self.covers
            .iter()
            .filter(|&&(_, up)| up == id)
            .map(|&(low, _)| low)
            .collect()
    }

    /// Nodes covering `id`.
    pub fn upper_covers(&self, id: usize) -> Vec<usize> {
        self.covers
            .iter()
            .filter(|&&(low, _)| low == id)
            .map(|&(_, up)| up)
            .collect()
    }

    pub fn meet(&self, a: usize, b: usize) -> usize {
        self.meet[a][b]
    }

    pub fn join(&self, a: usize, b: usize) -> usize {
        self.join[a][b]
    }

    /// Levels by longest-chain height; ids ascending within a level.
    pub fn enumerate_by_height(&self) -> &[Vec<usize>] {
        &self.levels
    }

    pub fn height(&self) -> usize {
        self.levels.len() - 1
    }

    /// Ids of this lattice's nodes in the lattice it was cut from.
    pub fn origin(&self) -> &[usize] {
        &self.origin
    }

    pub fn find(&self, label: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.label == label)
    }

    fn check(&self, id: usize) -> Result<(), LatticeError> {
        if id < self.nodes.len() {
            Ok(())
        } else {
            Err(LatticeError::UnknownNode(id))
        }
    }

    /// The induced lattice on `{H : g <= H}`, with `g` as its bottom.
    pub fn sublattice_above(&self, g: usize) -> Result<Lattice, LatticeError> {
        self.check(g)?;
        let keep: Vec<usize> = (0..self.len()).filter(|&h| self.leq[g][h]).collect();
        let nodes = keep.iter().map(|&i| self.nodes[i].clone()).collect();
        let leq = keep
            .iter()
            .map(|&a| keep.iter().map(|&b| self.leq[a][b]).collect())
            .collect();
        let origin = keep.iter().map(|&i| self.origin[i]).collect();
        Self::finish(nodes, leq, origin, self.action.clone(), false)
    }

    /// Appends `top` above every node.
    ///
    /// Finite nodes are checked against `top`; continuous ones are taken on trust.
    pub fn add_top(&self, top: GroupDescriptor) -> Result<Lattice, LatticeError> {
        top.validate()?;
        for node in &self.nodes {
            if node.group.is_subgroup_of(&top) == Some(false)
                || (node.group.is_finite() && top.is_finite() && node.group.is_subgroup_of(&top) != Some(true))
            {
                return Err(LatticeError::NotASupergroup(top.label().to_string()));
            }
        }
        let n = self.len();
        let mut leq: Vec<Vec<bool>> = self.leq.iter().map(|row| {
            let mut r = row.clone();
            r.push(true);
            r
        }).collect();
        let mut last = vec![false; n + 1];
        last[n] = true;
        leq.push(last);
        let mut nodes = self.nodes.clone();
        nodes.push(SubgroupNode {
            id: n,
            label: top.label().to_string(),
            group: top,
            height: 0,
        });
        let mut origin = self.origin.clone();
        origin.push(self.origin.iter().max().map_or(0, |m| m + 1).max(n));
        let trivial_bottom = self.nodes[self.bottom].group.is_trivial();
        Self::finish(nodes, leq, origin, self.action.clone(), trivial_bottom)
    }

    /// Nodes just outside the down-set of `gmax`: `H` not below `gmax`, every
    /// node strictly below `H` is below `gmax`, and `H` covers such a node.
    pub fn frontier(&self, gmax: usize) -> Result<BTreeSet<usize>, LatticeError> {
        self.check(gmax)?;
        Ok((0..self.len())
            .filter(|&h| !self.leq[h][gmax])
            .filter(|&h| {
                (0..self.len())
                    .filter(|&c| c != h && self.leq[c][h])
                    .all(|c| self.leq[c][gmax])
            })
            .filter(|&h| self.lower_covers(h).iter().any(|&c| self.leq[c][gmax]))
            .collect())
    }

    /// Nodes below `g`, including `g`.
    pub fn down_set(&self, g: usize) -> Vec<usize> {
        (0..self.len()).filter(|&h| self.leq[h][g]).collect()
    }
}

/// For nodes of one finite table, meets must be intersections and joins closures.
fn verify_finite_meets_joins(
    nodes: &[SubgroupNode],
    meet: &[Vec<usize>],
    join: &[Vec<usize>],
) -> Result<(), LatticeError> {
    let n = nodes.len();
    for a in 0..n {
        let Some((ta, ma)) = nodes[a].group.finite_members() else {
            continue;
        };
        for b in a..n {
            let Some((tb, mb)) = nodes[b].group.finite_members() else {
                continue;
            };
            if ta != tb {
                continue;
            }
            let inter: BTreeSet<usize> = ma.intersection(mb).copied().collect();
            let gens: Vec<usize> = ma.union(mb).copied().collect();
            let closure = ta.closure(&gens);
            let members_of = |id: usize| match nodes[id].group.kind() {
                GroupKind::Finite { members, .. } => Some(members.clone()),
                GroupKind::Trivial { .. } => Some(BTreeSet::from([ta.identity()])),
                _ => None,
            };
            if members_of(meet[a][b]) != Some(inter) {
                return Err(LatticeError::NotClosed(
                    nodes[a].label.clone(),
                    nodes[b].label.clone(),
                    "intersection",
                ));
            }
            if members_of(join[a][b]) != Some(closure) {
                return Err(LatticeError::NotClosed(
                    nodes[a].label.clone(),
                    nodes[b].label.clone(),
                    "generated subgroup",
                ));
            }
        }
    }
    Ok(())
}
