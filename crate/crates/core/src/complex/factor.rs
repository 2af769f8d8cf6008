//! Rooted trees used as the factors of grid and tree-product complexes.
//!
//! Nodes are numbered breadth-first with the root at 0, so the edge leading into
//! node `c` (from its parent) has index `c - 1`.

use serde::{Deserialize, Serialize};

pub const NO_PARENT: u32 = u32::MAX;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Factor {
    parent: Vec<u32>,
    depth: Vec<u32>,
    children: Vec<Vec<u32>>,
    is_path: bool,
}

impl Factor {
    /// The path 0 - 1 - ... - extent, rooted at 0.
    pub fn path(extent: usize) -> Self {
        let n = extent + 1;
        let parent = (0..n as u32)
            .map(|i| if i == 0 { NO_PARENT } else { i - 1 })
            .collect();
        let depth = (0..n as u32).collect();
        let children = (0..n as u32)
            .map(|i| if (i as usize) + 1 < n { vec![i + 1] } else { vec![] })
            .collect();
        Factor {
            parent,
            depth,
            children,
            is_path: true,
        }
    }

    /// Complete rooted tree where every internal node has `branch` children.
    pub fn regular_tree(branch: usize, depth: usize) -> Self {
        let mut parent = vec![NO_PARENT];
        let mut depths = vec![0u32];
        let mut children: Vec<Vec<u32>> = vec![Vec::new()];
        let mut level: Vec<u32> = vec![0];
        for d in 1..=depth {
            let mut next = Vec::with_capacity(level.len() * branch);
            for &p in &level {
                for _ in 0..branch {
                    let id = parent.len() as u32;
                    parent.push(p);
                    depths.push(d as u32);
                    children.push(Vec::new());
                    children[p as usize].push(id);
                    next.push(id);
                }
            }
            level = next;
        }
        Factor {
            parent,
            depth: depths,
            children,
            is_path: false,
        }
    }

    pub fn node_count_regular(branch: usize, depth: usize) -> u64 {
        let mut total = 0u64;
        let mut level = 1u64;
        for _ in 0..=depth {
            total = total.saturating_add(level);
            level = level.saturating_mul(branch as u64);
        }
        total
    }

    pub fn num_nodes(&self) -> usize {
        self.parent.len()
    }

    pub fn num_edges(&self) -> usize {
        self.parent.len() - 1
    }

    pub fn is_path(&self) -> bool {
        self.is_path
    }

    pub fn parent(&self, u: u32) -> Option<u32> {
        let p = self.parent[u as usize];
        (p != NO_PARENT).then_some(p)
    }

    pub fn depth(&self, u: u32) -> u32 {
        self.depth[u as usize]
    }

    pub fn children(&self, u: u32) -> &[u32] {
        &self.children[u as usize]
    }

    pub fn max_depth(&self) -> u32 {
        self.depth.iter().copied().max().unwrap_or(0)
    }

    /// Ancestor of `u` at depth `d` (requires `d <= depth(u)`).
    pub fn ancestor_at(&self, mut u: u32, d: u32) -> u32 {
        if self.is_path {
            return d;
        }
        while self.depth[u as usize] > d {
            u = self.parent[u as usize];
        }
        u
    }

    pub fn is_ancestor(&self, a: u32, b: u32) -> bool {
        let da = self.depth(a);
        da <= self.depth(b) && self.ancestor_at(b, da) == a
    }

    pub fn lca(&self, mut a: u32, mut b: u32) -> u32 {
        if self.is_path {
            return a.min(b);
        }
        while self.depth(a) > self.depth(b) {
            a = self.parent[a as usize];
        }
        while self.depth(b) > self.depth(a) {
            b = self.parent[b as usize];
        }
        while a != b {
            a = self.parent[a as usize];
            b = self.parent[b as usize];
        }
        a
    }

    pub fn dist(&self, a: u32, b: u32) -> u32 {
        if self.is_path {
            return a.abs_diff(b);
        }
        let l = self.lca(a, b);
        self.depth(a) + self.depth(b) - 2 * self.depth(l)
    }

    /// The neighbour of `u` on the tree geodesic towards `target` (`u != target`).
    pub fn step_toward(&self, u: u32, target: u32) -> u32 {
        if self.is_path {
            return if target > u { u + 1 } else { u - 1 };
        }
        if self.is_ancestor(u, target) {
            self.ancestor_at(target, self.depth(u) + 1)
        } else {
            self.parent[u as usize]
        }
    }

    /// Tree neighbours of `u`, parent first then children.
    pub fn neighbors(&self, u: u32) -> impl Iterator<Item = u32> + '_ {
        self.parent(u)
            .into_iter()
            .chain(self.children(u).iter().copied())
    }

    /// Nodes within `r` edges of `u`, with their distances.
    pub fn ball(&self, u: u32, r: u32) -> Vec<(u32, u32)> {
        let mut out = vec![(u, 0)];
        let mut stack = vec![(u, u32::MAX, 0)];
        while let Some((w, from, d)) = stack.pop() {
            if d == r {
                continue;
            }
            for nb in self.neighbors(w).filter(|&nb| nb != from) {
                out.push((nb, d + 1));
                stack.push((nb, w, d + 1));
            }
        }
        out
    }

    /// Nodes of the smallest subtree containing all of `nodes`.
    pub fn spanned_subtree(&self, nodes: &[u32]) -> Vec<u32> {
        let Some(&first) = nodes.first() else {
            return Vec::new();
        };
        if self.is_path {
            let lo = nodes.iter().copied().min().unwrap();
            let hi = nodes.iter().copied().max().unwrap();
            return (lo..=hi).collect();
        }
        let top = nodes.iter().fold(first, |acc, &n| self.lca(acc, n));
        let mut keep = std::collections::BTreeSet::new();
        keep.insert(top);
        for &n in nodes {
            let mut u = n;
            while keep.insert(u) {
                u = self.parent[u as usize];
            }
        }
        keep.into_iter().collect()
    }
}

/// A point of a tree: a node, or a point inside the edge into `child` at parameter
/// `t` in (0, 1) measured from the parent.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TreePoint {
    Node(u32),
    OnEdge(u32, crate::numeric::Q),
}

impl Factor {
    /// Exact distance between tree points in edge-length units.
    pub fn point_dist(&self, p: &TreePoint, q: &TreePoint) -> crate::numeric::Q {
        use crate::numeric::{qi, Q};
        use num_traits::{One, Signed};
        let ends = |x: &TreePoint| -> Vec<(u32, Q)> {
            match x {
                TreePoint::Node(u) => vec![(*u, Q::from_integer(0.into()))],
                TreePoint::OnEdge(c, t) => {
                    vec![(self.parent[*c as usize], t.clone()), (*c, Q::one() - t)]
                }
            }
        };
        if let (TreePoint::OnEdge(a, s), TreePoint::OnEdge(b, t)) = (p, q) {
            if a == b {
                return (s - t).abs();
            }
        }
        let mut best: Option<Q> = None;
        for (u, du) in ends(p) {
            for (v, dv) in ends(q) {
                let d = &du + &dv + qi(self.dist(u, v) as i64);
                if best.as_ref().is_none_or(|b| &d < b) {
                    best = Some(d);
                }
            }
        }
        best.unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{qi, qr};

    #[test]
    fn regular_tree_counts() {
        let t = Factor::regular_tree(2, 1);
        assert_eq!(t.num_nodes(), 3);
        assert_eq!(t.num_edges(), 2);
        let t = Factor::regular_tree(3, 3);
        assert_eq!(t.num_nodes() as u64, Factor::node_count_regular(3, 3));
        assert_eq!(t.num_nodes(), 40);
        assert_eq!(Factor::regular_tree(5, 0).num_nodes(), 1);
    }

    #[test]
    fn distances_and_steps() {
        let t = Factor::regular_tree(2, 3);
        // Leaves 7 and 14 sit in different halves of the tree.
        assert_eq!(t.depth(7), 3);
        assert_eq!(t.dist(7, 14), 6);
        assert_eq!(t.dist(7, 8), 2);
        let mut u = 7;
        let mut steps = 0;
        while u != 14 {
            u = t.step_toward(u, 14);
            steps += 1;
        }
        assert_eq!(steps, 6);
        let p = Factor::path(5);
        assert_eq!(p.dist(1, 4), 3);
        assert_eq!(p.step_toward(3, 0), 2);
    }

    #[test]
    fn point_distance_inside_edges() {
        let t = Factor::regular_tree(2, 2);
        let a = TreePoint::OnEdge(3, qr(1, 2));
        let b = TreePoint::OnEdge(4, qr(1, 4));
        // 3 and 4 share parent 1: 1/2 + 1/4.
        assert_eq!(t.point_dist(&a, &b), qr(3, 4));
        assert_eq!(t.point_dist(&a, &TreePoint::Node(0)), qr(3, 2));
        assert_eq!(t.point_dist(&a, &a), qi(0));
    }

    #[test]
    fn spanned_subtree_is_hull() {
        let t = Factor::regular_tree(2, 2);
        assert_eq!(t.spanned_subtree(&[3, 4]), vec![1, 3, 4]);
        assert_eq!(t.spanned_subtree(&[3, 6]), vec![0, 1, 2, 3, 6]);
        assert_eq!(Factor::path(9).spanned_subtree(&[5, 2]), vec![2, 3, 4, 5]);
    }
}
