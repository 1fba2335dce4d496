use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Undirected coupling graph over physical qubits `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Connectivity {
    adjacency: Vec<Vec<usize>>,
    distance: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct ConnectivityFile {
    n_qubits: usize,
    edges: Vec<(usize, usize)>,
}

impl Connectivity {
    pub fn new(n_qubits: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n_qubits];
        for &(a, b) in edges {
            if a >= n_qubits || b >= n_qubits || a == b {
                return Err(Error::InvalidArgument(format!(
                    "invalid edge ({a}, {b}) for {n_qubits} qubits"
                )));
            }
            if !adjacency[a].contains(&b) {
                adjacency[a].push(b);
                adjacency[b].push(a);
            }
        }
        adjacency.iter_mut().for_each(|n| n.sort_unstable());
        let distance = (0..n_qubits).map(|s| bfs(&adjacency, s)).collect();
        Ok(Connectivity { adjacency, distance })
    }

    /// Qubit 0 in the centre, connected to every other qubit.
    pub fn star(n_qubits: usize) -> Self {
        let edges: Vec<_> = (1..n_qubits).map(|l| (0, l)).collect();
        Self::new(n_qubits, &edges).expect("valid star")
    }

    pub fn line(n_qubits: usize) -> Self {
        let edges: Vec<_> = (1..n_qubits).map(|q| (q - 1, q)).collect();
        Self::new(n_qubits, &edges).expect("valid line")
    }

    pub fn n_qubits(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, ns) in self.adjacency.iter().enumerate() {
            out.extend(ns.iter().filter(|&&b| b > a).map(|&b| (a, b)));
        }
        out
    }

    pub fn neighbors(&self, q: usize) -> &[usize] {
        &self.adjacency[q]
    }

    pub fn degree(&self, q: usize) -> usize {
        self.adjacency[q].len()
    }

    pub fn are_adjacent(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    /// Hop count, `usize::MAX` when unreachable.
    pub fn distance(&self, a: usize, b: usize) -> usize {
        self.distance[a][b]
    }

    pub fn is_connected(&self) -> bool {
        self.n_qubits() == 0 || self.distance[0].iter().all(|&d| d != usize::MAX)
    }

    /// All shortest paths from `a` to `b`, endpoints included, in
    /// lexicographic order.
    pub fn shortest_paths(&self, a: usize, b: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        if self.distance(a, b) == usize::MAX {
            return out;
        }
        let mut path = vec![a];
        self.extend_paths(b, &mut path, &mut out);
        out
    }

    fn extend_paths(&self, target: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let here = *path.last().unwrap();
        if here == target {
            out.push(path.clone());
            return;
        }
        let d = self.distance(here, target);
        for &n in &self.adjacency[here] {
            if self.distance(n, target) + 1 == d {
                path.push(n);
                self.extend_paths(target, path, out);
                path.pop();
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ConnectivityFile {
            n_qubits: self.n_qubits(),
            edges: self.edges(),
        })?)
    }

    /// `{"n_qubits": n, "edges": [[a, b], ...]}`
    pub fn from_json(text: &str) -> Result<Self> {
        let f: ConnectivityFile = serde_json::from_str(text)?;
        Self::new(f.n_qubits, &f.edges)
    }
}

fn bfs(adjacency: &[Vec<usize>], source: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; adjacency.len()];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        for &v in &adjacency[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_distances() {
        let s = Connectivity::star(5);
        assert_eq!(s.edges(), vec![(0, 1), (0, 2), (0, 3), (0, 4)]);
        assert_eq!(s.distance(1, 2), 2);
        assert_eq!(s.shortest_paths(1, 2), vec![vec![1, 0, 2]]);
        assert!(s.is_connected());
    }

    #[test]
    fn multiple_shortest_paths() {
        // square 0-1-2-3-0
        let c = Connectivity::new(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        assert_eq!(c.shortest_paths(0, 2), vec![vec![0, 1, 2], vec![0, 3, 2]]);
    }

    #[test]
    fn disconnected_and_invalid() {
        let c = Connectivity::new(4, &[(0, 1), (2, 3)]).unwrap();
        assert!(!c.is_connected());
        assert!(c.shortest_paths(0, 3).is_empty());
        assert!(Connectivity::new(2, &[(0, 0)]).is_err());
        assert!(Connectivity::new(2, &[(0, 2)]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let c = Connectivity::line(4);
        assert_eq!(Connectivity::from_json(&c.to_json().unwrap()).unwrap(), c);
    }
}
