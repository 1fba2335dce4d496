use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::routing::{executable_prefix, interaction_pairs, sabre_pass, SabreConfig};
use super::{Connectivity, Layout};
use crate::circuit::Circuit;
use crate::error::{Error, Result};

/// Initial-layout strategy.
#[derive(Debug, Clone, PartialEq)]
pub enum Placer {
    /// Logical qubit `i` on physical qubit `i`.
    Trivial,
    /// User map, `map[logical] = physical`.
    Custom(Vec<usize>),
    /// Best of `candidates` random layouts, scored by how many two-qubit
    /// gates run before the first SWAP would be needed.
    RandomGreedy { candidates: usize, seed: u64 },
    /// Embed the interaction graph of the longest possible prefix of
    /// two-qubit gates.
    SubgraphIsomorphism,
    /// Forward/backward SABRE passes starting from the trivial layout.
    ReverseTraversal { rounds: usize },
}

impl Placer {
    pub fn random_greedy(seed: u64) -> Self {
        Placer::RandomGreedy { candidates: 100, seed }
    }
}

pub fn place(circuit: &Circuit, conn: &Connectivity, placer: &Placer) -> Result<Layout> {
    let n = conn.n_qubits();
    if circuit.n_qubits() > n {
        return Err(Error::Transpile(format!(
            "circuit uses {} qubits but the device has {n}",
            circuit.n_qubits()
        )));
    }
    match placer {
        Placer::Trivial => Ok(Layout::trivial(n)),
        Placer::Custom(map) => {
            if map.len() != circuit.n_qubits() && map.len() != n {
                return Err(Error::Transpile(format!(
                    "custom layout has {} entries for a {}-qubit circuit",
                    map.len(),
                    circuit.n_qubits()
                )));
            }
            Layout::from_partial(map, n)
        }
        Placer::RandomGreedy { candidates, seed } => {
            let pairs = interaction_pairs(circuit);
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut best: Option<(usize, Layout)> = None;
            for _ in 0..(*candidates).max(1) {
                let mut perm: Vec<usize> = (0..n).collect();
                perm.shuffle(&mut rng);
                let layout = Layout::from_partial(&perm, n)?;
                let score = executable_prefix(&pairs, &layout, conn);
                if best.as_ref().is_none_or(|(s, _)| score > *s) {
                    best = Some((score, layout));
                }
            }
            Ok(best.expect("at least one candidate").1)
        }
        Placer::SubgraphIsomorphism => subgraph_layout(circuit, conn),
        Placer::ReverseTraversal { rounds } => {
            if !conn.is_connected() {
                return Err(Error::Transpile("connectivity graph is disconnected".into()));
            }
            let reversed = circuit.reversed();
            let config = SabreConfig::default();
            let mut layout = Layout::trivial(n);
            for _ in 0..*rounds {
                layout = sabre_pass(circuit, conn, layout, &config)?.final_layout;
                layout = sabre_pass(&reversed, conn, layout, &config)?.final_layout;
            }
            Ok(layout)
        }
    }
}

fn subgraph_layout(circuit: &Circuit, conn: &Connectivity) -> Result<Layout> {
    let pairs = interaction_pairs(circuit);
    let mut best = Vec::new();
    // prefixes that embed form a downward-closed set, so grow until failure
    let mut len = 1;
    while len <= pairs.len() {
        match embed(&pairs[..len], conn) {
            Some(map) => best = map,
            None => break,
        }
        len += 1;
    }
    let n = conn.n_qubits();
    let mut partial = vec![usize::MAX; circuit.n_qubits()];
    for (l, p) in best {
        partial[l] = p;
    }
    // logical qubits outside the embedded prefix take the lowest free slots
    let mut used = vec![false; n];
    partial.iter().filter(|&&p| p != usize::MAX).for_each(|&p| used[p] = true);
    let mut free = (0..n).filter(|p| !used[*p]);
    for slot in partial.iter_mut().filter(|p| **p == usize::MAX) {
        *slot = free.next().expect("width checked against device size");
    }
    Layout::from_partial(&partial, n)
}

/// Injective map of the logical qubits in `pairs` onto `conn` such that every
/// pair lands on an edge.
fn embed(pairs: &[(usize, usize)], conn: &Connectivity) -> Option<Vec<(usize, usize)>> {
    let mut order: Vec<usize> = Vec::new();
    for &(a, b) in pairs {
        for q in [a, b] {
            if !order.contains(&q) {
                order.push(q);
            }
        }
    }
    let mut edges: Vec<(usize, usize)> = pairs.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    edges.sort_unstable();
    edges.dedup();
    let width = order.iter().max().map_or(0, |m| m + 1);
    let mut degree = vec![0; width];
    for &(a, b) in &edges {
        degree[a] += 1;
        degree[b] += 1;
    }
    let mut assign = vec![usize::MAX; width];
    let mut used = vec![false; conn.n_qubits()];
    if backtrack(0, &order, &edges, &degree, conn, &mut assign, &mut used) {
        Some(order.iter().map(|&l| (l, assign[l])).collect())
    } else {
        None
    }
}

fn backtrack(
    k: usize,
    order: &[usize],
    edges: &[(usize, usize)],
    degree: &[usize],
    conn: &Connectivity,
    assign: &mut [usize],
    used: &mut [bool],
) -> bool {
    let Some(&l) = order.get(k) else { return true };
    for p in 0..conn.n_qubits() {
        if used[p] || conn.degree(p) < degree[l] {
            continue;
        }
        let consistent = edges.iter().all(|&(a, b)| {
            let other = if a == l { b } else if b == l { a } else { return true };
            assign[other] == usize::MAX || conn.are_adjacent(p, assign[other])
        });
        if !consistent {
            continue;
        }
        assign[l] = p;
        used[p] = true;
        if backtrack(k + 1, order, edges, degree, conn, assign, used) {
            return true;
        }
        assign[l] = usize::MAX;
        used[p] = false;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{random_cnot_circuit, Gate};
    use crate::transpiler::{route, Router};

    #[test]
    fn trivial_is_identity() {
        let c = random_cnot_circuit(3, 5, 2).unwrap();
        let l = place(&c, &Connectivity::star(5), &Placer::Trivial).unwrap();
        assert_eq!(l.as_slice(), &[0, 1, 2, 3, 4]);
    }

    #[test]
    fn custom_validated() {
        let c = Circuit::new(3);
        let conn = Connectivity::line(3);
        assert_eq!(place(&c, &conn, &Placer::Custom(vec![2, 0, 1])).unwrap().as_slice(), &[2, 0, 1]);
        assert!(place(&c, &conn, &Placer::Custom(vec![2, 2, 1])).is_err());
        assert!(place(&c, &conn, &Placer::Custom(vec![0, 1])).is_err());
        assert!(place(&Circuit::new(4), &conn, &Placer::Trivial).is_err());
    }

    #[test]
    fn subgraph_path_needs_no_swaps() {
        // interaction path 0-1-2 on a device path whose labels are scrambled
        let c = Circuit::new(3).with(Gate::Cz(0, 1)).unwrap().with(Gate::Cz(1, 2)).unwrap();
        let conn = Connectivity::new(3, &[(0, 2), (2, 1)]).unwrap();
        let layout = place(&c, &conn, &Placer::SubgraphIsomorphism).unwrap();
        let routed = route(&c, &conn, &layout, &Router::ShortestPaths).unwrap();
        assert_eq!(routed.swaps, 0);
        assert_eq!(layout.physical(1), 2);
    }

    #[test]
    fn random_greedy_is_deterministic() {
        let c = random_cnot_circuit(5, 20, 4).unwrap();
        let conn = Connectivity::star(5);
        let p = Placer::RandomGreedy { candidates: 1, seed: 11 };
        assert_eq!(place(&c, &conn, &p).unwrap(), place(&c, &conn, &p).unwrap());
        let best = place(&c, &conn, &Placer::random_greedy(11)).unwrap();
        let pairs = interaction_pairs(&c);
        let single = place(&c, &conn, &p).unwrap();
        assert!(executable_prefix(&pairs, &best, &conn) >= executable_prefix(&pairs, &single, &conn));
    }

    #[test]
    fn reverse_traversal_returns_full_layout() {
        let c = random_cnot_circuit(4, 12, 9).unwrap();
        let l = place(&c, &Connectivity::line(5), &Placer::ReverseTraversal { rounds: 2 }).unwrap();
        let mut sorted = l.as_slice().to_vec();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2, 3, 4]);
    }
}
