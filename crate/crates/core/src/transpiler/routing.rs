use super::{Connectivity, Layout};
use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};

/// SWAP-insertion algorithm.
#[derive(Debug, Clone, PartialEq)]
pub enum Router {
    /// Move one operand along a shortest path, choosing the path and meeting
    /// point that lets the most following two-qubit gates run unchanged.
    ShortestPaths,
    Sabre(SabreConfig),
    /// Baseline for star devices: the central qubit is swapped with whichever
    /// operand the following gate needs. Ignores the placer and places the
    /// most-interacting logical qubit in the centre.
    Star,
}

/// SABRE heuristic parameters.
///
/// Candidate SWAPs are scored by `sum(front distances) + w * sum(extended-set
/// distances)`, scaled by a per-qubit decay factor that discourages touching
/// the same qubits repeatedly.
#[derive(Debug, Clone, PartialEq)]
pub struct SabreConfig {
    pub lookahead: bool,
    /// Number of upcoming two-qubit gates in the extended set.
    pub window: usize,
    pub weight: f64,
    pub decay: f64,
}

impl Default for SabreConfig {
    fn default() -> Self {
        SabreConfig { lookahead: true, window: 20, weight: 0.5, decay: 0.001 }
    }
}

impl SabreConfig {
    pub fn without_lookahead() -> Self {
        SabreConfig { lookahead: false, ..Self::default() }
    }

    fn effective_weight(&self) -> f64 {
        if self.lookahead {
            self.weight
        } else {
            0.0
        }
    }
}

/// Circuit on physical qubits plus the layouts before and after it.
#[derive(Debug, Clone)]
pub struct RoutedCircuit {
    pub circuit: Circuit,
    pub initial_layout: Layout,
    pub final_layout: Layout,
    pub swaps: usize,
}

pub fn route(circuit: &Circuit, conn: &Connectivity, layout: &Layout, router: &Router) -> Result<RoutedCircuit> {
    let n = conn.n_qubits();
    if circuit.n_qubits() > n {
        return Err(Error::Transpile(format!(
            "circuit uses {} qubits but the device has {n}",
            circuit.n_qubits()
        )));
    }
    if layout.len() != n {
        return Err(Error::Transpile(format!("layout covers {} of {n} physical qubits", layout.len())));
    }
    if !conn.is_connected() {
        return Err(Error::Transpile("connectivity graph is disconnected".into()));
    }
    match router {
        Router::ShortestPaths => shortest_paths(circuit, conn, layout.clone()),
        Router::Sabre(config) => sabre_pass(circuit, conn, layout.clone(), config),
        Router::Star => star(circuit, conn),
    }
}

/// Logical operand pairs of the two-qubit gates, in order.
pub(crate) fn interaction_pairs(circuit: &Circuit) -> Vec<(usize, usize)> {
    circuit
        .gates()
        .iter()
        .filter(|g| g.is_two_qubit())
        .map(|g| {
            let q = g.qubits();
            (q[0], q[1])
        })
        .collect()
}

/// Number of leading pairs that are adjacent under `layout`.
pub(crate) fn executable_prefix(pairs: &[(usize, usize)], layout: &Layout, conn: &Connectivity) -> usize {
    pairs
        .iter()
        .take_while(|&&(a, b)| conn.are_adjacent(layout.physical(a), layout.physical(b)))
        .count()
}

struct Emitter {
    out: Circuit,
    layout: Layout,
    swaps: usize,
}

impl Emitter {
    fn new(n: usize, layout: Layout) -> Self {
        Emitter { out: Circuit::new(n), layout, swaps: 0 }
    }

    fn gate(&mut self, g: &Gate) {
        let layout = &self.layout;
        self.out.add(g.remap(|q| layout.physical(q))).expect("remapped gate stays in range");
    }

    fn swap(&mut self, a: usize, b: usize) {
        self.out.add(Gate::Swap(a, b)).expect("swap on device qubits");
        self.layout.swap_physical(a, b);
        self.swaps += 1;
    }

    fn finish(self, initial: Layout) -> RoutedCircuit {
        RoutedCircuit { circuit: self.out, initial_layout: initial, final_layout: self.layout, swaps: self.swaps }
    }
}

fn shortest_paths(circuit: &Circuit, conn: &Connectivity, layout: Layout) -> Result<RoutedCircuit> {
    let pairs = interaction_pairs(circuit);
    let mut em = Emitter::new(conn.n_qubits(), layout.clone());
    let mut next_pair = 0;
    for g in circuit.gates() {
        if g.is_two_qubit() {
            next_pair += 1;
            let q = g.qubits();
            let (pa, pb) = (em.layout.physical(q[0]), em.layout.physical(q[1]));
            if !conn.are_adjacent(pa, pb) {
                let mut best: Option<(usize, Vec<(usize, usize)>)> = None;
                for path in conn.shortest_paths(pa, pb) {
                    // operand a walks to path[k], operand b walks back to path[k + 1]
                    for k in 0..path.len() - 1 {
                        let mut swaps: Vec<(usize, usize)> = (0..k).map(|i| (path[i], path[i + 1])).collect();
                        swaps.extend((k + 1..path.len() - 1).rev().map(|i| (path[i + 1], path[i])));
                        let mut trial = em.layout.clone();
                        swaps.iter().for_each(|&(x, y)| trial.swap_physical(x, y));
                        let score = executable_prefix(&pairs[next_pair..], &trial, conn);
                        if best.as_ref().is_none_or(|(s, _)| score > *s) {
                            best = Some((score, swaps));
                        }
                    }
                }
                let (_, swaps) = best.expect("connected graph has a path");
                swaps.into_iter().for_each(|(x, y)| em.swap(x, y));
            }
        }
        em.gate(g);
    }
    Ok(em.finish(layout))
}

struct Dag {
    qubits: Vec<Vec<usize>>,
    succ: Vec<Vec<usize>>,
    indegree: Vec<usize>,
}

impl Dag {
    fn new(circuit: &Circuit) -> Self {
        let gates = circuit.gates();
        let mut last: Vec<Option<usize>> = vec![None; circuit.n_qubits()];
        let mut succ = vec![Vec::new(); gates.len()];
        let mut indegree = vec![0; gates.len()];
        let mut qubits = Vec::with_capacity(gates.len());
        for (i, g) in gates.iter().enumerate() {
            let qs = g.qubits();
            for &q in &qs {
                if let Some(p) = last[q] {
                    if !succ[p].contains(&i) {
                        succ[p].push(i);
                        indegree[i] += 1;
                    }
                }
                last[q] = Some(i);
            }
            qubits.push(qs);
        }
        Dag { qubits, succ, indegree }
    }
}

pub(crate) fn sabre_pass(
    circuit: &Circuit,
    conn: &Connectivity,
    layout: Layout,
    config: &SabreConfig,
) -> Result<RoutedCircuit> {
    let n = conn.n_qubits();
    let gates = circuit.gates();
    let mut dag = Dag::new(circuit);
    let weight = config.effective_weight();
    let mut em = Emitter::new(n, layout.clone());
    let mut front: Vec<usize> = (0..gates.len()).filter(|&i| dag.indegree[i] == 0).collect();
    let mut decay = vec![1.0; n];
    let mut stalled = 0usize;
    let release = 10 * n.max(2);

    while !front.is_empty() {
        let mut ready = Vec::new();
        let mut blocked = Vec::new();
        for &i in &front {
            let qs = &dag.qubits[i];
            let ok = !gates[i].is_two_qubit()
                || conn.are_adjacent(em.layout.physical(qs[0]), em.layout.physical(qs[1]));
            if ok {
                ready.push(i);
            } else {
                blocked.push(i);
            }
        }
        if !ready.is_empty() {
            for i in ready {
                em.gate(&gates[i]);
                for s in dag.succ[i].clone() {
                    dag.indegree[s] -= 1;
                    if dag.indegree[s] == 0 {
                        blocked.push(s);
                    }
                }
            }
            blocked.sort_unstable();
            front = blocked;
            decay.iter_mut().for_each(|d| *d = 1.0);
            stalled = 0;
            continue;
        }

        if stalled >= release {
            // walk the first blocked gate's operands together along a shortest path
            let qs = &dag.qubits[front[0]];
            let (pa, pb) = (em.layout.physical(qs[0]), em.layout.physical(qs[1]));
            let path = conn.shortest_paths(pa, pb).swap_remove(0);
            for w in path[..path.len() - 1].windows(2) {
                em.swap(w[0], w[1]);
            }
            stalled = 0;
            continue;
        }

        let front_pairs: Vec<(usize, usize)> = front.iter().map(|&i| (dag.qubits[i][0], dag.qubits[i][1])).collect();
        let extended = if weight > 0.0 { extended_set(&dag, gates, &front, config.window) } else { Vec::new() };

        let mut candidates: Vec<(usize, usize)> = Vec::new();
        for &(a, b) in &front_pairs {
            for p in [em.layout.physical(a), em.layout.physical(b)] {
                for &m in conn.neighbors(p) {
                    let e = (p.min(m), p.max(m));
                    if !candidates.contains(&e) {
                        candidates.push(e);
                    }
                }
            }
        }
        candidates.sort_unstable();

        let mut best: Option<(f64, (usize, usize))> = None;
        for &(x, y) in &candidates {
            let mut trial = em.layout.clone();
            trial.swap_physical(x, y);
            let dist = |pairs: &[(usize, usize)]| -> f64 {
                pairs.iter().map(|&(a, b)| conn.distance(trial.physical(a), trial.physical(b)) as f64).sum()
            };
            let score = f64::max(decay[x], decay[y]) * (dist(&front_pairs) + weight * dist(&extended));
            if best.is_none_or(|(s, _)| score < s - 1e-12) {
                best = Some((score, (x, y)));
            }
        }
        let (_, (x, y)) = best.expect("front gate has a neighbouring edge");
        em.swap(x, y);
        stalled += 1;
        if stalled.is_multiple_of(5) {
            decay.iter_mut().for_each(|d| *d = 1.0);
        } else {
            decay[x] += config.decay;
            decay[y] += config.decay;
        }
    }
    Ok(em.finish(layout))
}

/// Upcoming two-qubit gates reachable from the front layer, breadth first.
fn extended_set(dag: &Dag, gates: &[Gate], front: &[usize], window: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut seen = vec![false; gates.len()];
    let mut queue: std::collections::VecDeque<usize> = front.iter().copied().collect();
    front.iter().for_each(|&i| seen[i] = true);
    while let Some(i) = queue.pop_front() {
        for &s in &dag.succ[i] {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            if gates[s].is_two_qubit() {
                if out.len() >= window {
                    return out;
                }
                out.push((dag.qubits[s][0], dag.qubits[s][1]));
            }
            queue.push_back(s);
        }
    }
    out
}

fn star(circuit: &Circuit, conn: &Connectivity) -> Result<RoutedCircuit> {
    let n = conn.n_qubits();
    let centre = (0..n)
        .find(|&p| conn.degree(p) == n - 1)
        .ok_or_else(|| Error::Transpile("star router needs a star-shaped device".into()))?;
    let pairs = interaction_pairs(circuit);
    let mut counts = vec![0usize; n];
    for &(a, b) in &pairs {
        counts[a] += 1;
        counts[b] += 1;
    }
    let hub = (0..n).fold(0, |best, l| if counts[l] > counts[best] { l } else { best });
    // hub on the centre, the others fill the leaves in order
    let mut map = vec![usize::MAX; n];
    map[hub] = centre;
    let mut leaves = (0..n).filter(|&p| p != centre);
    for (l, slot) in map.iter_mut().enumerate() {
        if l != hub {
            *slot = leaves.next().expect("n - 1 leaves");
        }
    }
    let layout = Layout::from_partial(&map, n)?;

    let mut em = Emitter::new(n, layout.clone());
    let mut next_pair = 0;
    for g in circuit.gates() {
        if g.is_two_qubit() {
            next_pair += 1;
            let q = g.qubits();
            let (pa, pb) = (em.layout.physical(q[0]), em.layout.physical(q[1]));
            if pa != centre && pb != centre {
                // bring in the operand that the following gate also uses
                let keep = match pairs.get(next_pair) {
                    Some(&(x, y)) if (x == q[1] || y == q[1]) && x != q[0] && y != q[0] => pb,
                    _ => pa,
                };
                em.swap(centre, keep);
            }
        }
        em.gate(g);
    }
    Ok(em.finish(layout))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{random_cnot_circuit, unitary_of};
    use crate::linalg::CMatrix;
    use crate::transpiler::cnot_overhead;

    fn legal(c: &Circuit, conn: &Connectivity) -> bool {
        c.gates().iter().filter(|g| g.is_two_qubit()).all(|g| {
            let q = g.qubits();
            conn.are_adjacent(q[0], q[1])
        })
    }

    /// Basis permutation taking logical index bits to physical positions.
    pub(crate) fn permutation(layout: &Layout) -> CMatrix {
        let n = layout.len();
        let dim = 1 << n;
        let mut p = CMatrix::zeros(dim);
        for x in 0..dim {
            let mut y = 0;
            for l in 0..n {
                if x >> (n - 1 - l) & 1 == 1 {
                    y |= 1 << (n - 1 - layout.physical(l));
                }
            }
            p[(y, x)] = crate::linalg::C1;
        }
        p
    }

    fn padded(c: &Circuit, n: usize) -> Circuit {
        let mut out = Circuit::new(n);
        c.gates().iter().for_each(|g| {
            out.add(g.clone()).unwrap();
        });
        out
    }

    fn equivalent(original: &Circuit, routed: &RoutedCircuit) -> bool {
        let n = routed.circuit.n_qubits();
        let u = unitary_of(&padded(original, n)).unwrap();
        let r = unitary_of(&routed.circuit).unwrap();
        let lhs = &r * &permutation(&routed.initial_layout);
        let rhs = &permutation(&routed.final_layout) * &u;
        lhs.phase_aligned_diff(&rhs) < 1e-9
    }

    #[test]
    fn adjacent_gates_pass_through() {
        let conn = Connectivity::line(3);
        let c = Circuit::new(3).with(Gate::Cnot(0, 1)).unwrap().with(Gate::Cz(2, 1)).unwrap();
        for router in [Router::ShortestPaths, Router::Sabre(SabreConfig::default())] {
            let r = route(&c, &conn, &Layout::trivial(3), &router).unwrap();
            assert_eq!(r.circuit, c);
            assert_eq!(cnot_overhead(&c, &r.circuit).unwrap(), 1.0);
        }
    }

    #[test]
    fn star_leaf_pair_costs_one_swap() {
        let conn = Connectivity::star(5);
        let c = Circuit::new(5).with(Gate::Cnot(1, 2)).unwrap();
        for router in [Router::ShortestPaths, Router::Sabre(SabreConfig::default())] {
            let r = route(&c, &conn, &Layout::trivial(5), &router).unwrap();
            assert_eq!(r.swaps, 1);
            assert_eq!(cnot_overhead(&c, &r.circuit).unwrap(), 4.0);
            assert!(equivalent(&c, &r));
        }
    }

    #[test]
    fn random_circuits_are_legal_and_equivalent() {
        let conns = [Connectivity::star(5), Connectivity::line(5)];
        let routers = [
            Router::ShortestPaths,
            Router::Sabre(SabreConfig::default()),
            Router::Sabre(SabreConfig::without_lookahead()),
        ];
        for seed in 0..10 {
            let c = random_cnot_circuit(5, 20, seed).unwrap();
            for conn in &conns {
                for router in &routers {
                    let r = route(&c, conn, &Layout::trivial(5), router).unwrap();
                    assert!(legal(&r.circuit, conn));
                    assert!(equivalent(&c, &r), "seed {seed} {router:?}");
                }
            }
            let r = route(&c, &conns[0], &Layout::trivial(5), &Router::Star).unwrap();
            assert!(legal(&r.circuit, &conns[0]) && equivalent(&c, &r));
        }
    }

    #[test]
    fn narrow_circuit_on_wide_device() {
        let conn = Connectivity::line(4);
        let c = Circuit::new(2).with(Gate::H(0)).unwrap().with(Gate::Cnot(0, 1)).unwrap();
        let layout = Layout::from_partial(&[0, 3], 4).unwrap();
        let r = route(&c, &conn, &layout, &Router::Sabre(SabreConfig::default())).unwrap();
        assert!(legal(&r.circuit, &conn) && equivalent(&c, &r));
    }

    #[test]
    fn disconnected_device_rejected() {
        let conn = Connectivity::new(4, &[(0, 1), (2, 3)]).unwrap();
        let c = Circuit::new(2).with(Gate::Cnot(0, 1)).unwrap();
        assert!(route(&c, &conn, &Layout::trivial(4), &Router::ShortestPaths).is_err());
    }

    #[test]
    fn measurements_are_remapped() {
        let conn = Connectivity::star(3);
        let c = Circuit::new(3)
            .with(Gate::Cnot(1, 2))
            .unwrap()
            .with(Gate::Measure(vec![1, 2]))
            .unwrap();
        let r = route(&c, &conn, &Layout::trivial(3), &Router::Sabre(SabreConfig::default())).unwrap();
        let expect: Vec<usize> = [1, 2].iter().map(|&l| r.final_layout.physical(l)).collect();
        assert_eq!(r.circuit.measured_qubits(), expect);
    }
}
