//! Hop-count shortest paths with a deterministic tie-break.

use std::collections::VecDeque;

use super::world::{NodeId, World};

/// Breadth-first search over ascending adjacency lists.
///
/// Visiting neighbours in ascending id order makes the first path found the
/// lexicographically smallest among all minimum-hop paths.
pub fn shortest_path(
    n: usize,
    src: NodeId,
    dst: NodeId,
    neighbors: impl Fn(NodeId) -> Vec<NodeId>,
    passable: impl Fn(NodeId) -> bool,
) -> Option<Vec<NodeId>> {
    if src == dst {
        return Some(vec![src]);
    }
    let mut parent = vec![usize::MAX; n];
    parent[src] = src;
    let mut frontier = VecDeque::from([src]);
    while let Some(u) = frontier.pop_front() {
        for v in neighbors(u) {
            if parent[v] != usize::MAX {
                continue;
            }
            if v != dst && !passable(v) {
                continue;
            }
            parent[v] = u;
            if v == dst {
                let mut path = vec![dst];
                let mut at = dst;
                while at != src {
                    at = parent[at];
                    path.push(at);
                }
                path.reverse();
                return Some(path);
            }
            frontier.push_back(v);
        }
    }
    None
}

impl World {
    /// Minimum-hop route over active links. UEs never relay traffic.
    pub fn ospf_route(&self, src: NodeId, dst: NodeId) -> Option<Vec<NodeId>> {
        self.route_avoiding(src, dst, &[])
    }

    /// As [`World::ospf_route`] but never entering any node in `avoid`.
    pub fn route_avoiding(&self, src: NodeId, dst: NodeId, avoid: &[NodeId]) -> Option<Vec<NodeId>> {
        shortest_path(
            self.nodes.len(),
            src,
            dst,
            |u| self.adjacency[u].clone(),
            |v| self.nodes[v].kind.is_relay() && !avoid.contains(&v),
        )
    }

    /// Pre-set route: minimum-hop path over ground links only (UE-BS and BS-BS).
    pub fn ground_route(&self, src: NodeId, dst: NodeId) -> Option<Vec<NodeId>> {
        shortest_path(
            self.nodes.len(),
            src,
            dst,
            |u| {
                self.adjacency[u]
                    .iter()
                    .copied()
                    .filter(|&v| self.link(u, v).is_some_and(|l| l.class.is_ground()))
                    .collect()
            },
            |v| self.nodes[v].kind.is_relay(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        adj
    }

    fn route(adj: &[Vec<usize>], s: usize, d: usize) -> Option<Vec<usize>> {
        shortest_path(adj.len(), s, d, |u| adj[u].clone(), |_| true)
    }

    /// Enumerates every simple path and returns the shortest, smallest-sequence one.
    fn brute_force(adj: &[Vec<usize>], s: usize, d: usize) -> Option<Vec<usize>> {
        fn walk(adj: &[Vec<usize>], at: usize, d: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if at == d {
                out.push(path.clone());
                return;
            }
            for &v in &adj[at] {
                if !path.contains(&v) {
                    path.push(v);
                    walk(adj, v, d, path, out);
                    path.pop();
                }
            }
        }
        let mut all = Vec::new();
        walk(adj, s, d, &mut vec![s], &mut all);
        all.into_iter().min_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)))
    }

    #[test]
    fn adjacent_nodes() {
        let adj = graph(2, &[(0, 1)]);
        assert_eq!(route(&adj, 0, 1), Some(vec![0, 1]));
    }

    #[test]
    fn chain() {
        let adj = graph(3, &[(0, 1), (1, 2)]);
        assert_eq!(route(&adj, 0, 2), Some(vec![0, 1, 2]));
    }

    #[test]
    fn ring_of_five_takes_short_arc() {
        let adj = graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]);
        for s in 0..5 {
            for d in 0..5 {
                if s != d {
                    assert_eq!(route(&adj, s, d), brute_force(&adj, s, d));
                }
            }
        }
        assert_eq!(route(&adj, 0, 2), Some(vec![0, 1, 2]));
        assert_eq!(route(&adj, 0, 3), Some(vec![0, 4, 3]));
    }

    #[test]
    fn unreachable_is_none() {
        let adj = graph(4, &[(0, 1), (2, 3)]);
        assert_eq!(route(&adj, 0, 3), None);
    }

    #[test]
    fn impassable_nodes_are_skipped() {
        let adj = graph(4, &[(0, 1), (1, 3), (0, 2), (2, 3)]);
        let r = shortest_path(4, 0, 3, |u| adj[u].clone(), |v| v != 1);
        assert_eq!(r, Some(vec![0, 2, 3]));
    }

    #[test]
    fn matches_brute_force_on_random_graphs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for _ in 0..200 {
            let n = rng.random_range(2..8);
            let mut edges = Vec::new();
            for a in 0..n {
                for b in a + 1..n {
                    if rng.random_bool(0.4) {
                        edges.push((a, b));
                    }
                }
            }
            let adj = graph(n, &edges);
            let (s, d) = (rng.random_range(0..n), rng.random_range(0..n));
            if s != d {
                assert_eq!(route(&adj, s, d), brute_force(&adj, s, d), "{edges:?} {s}->{d}");
            }
        }
    }
}
