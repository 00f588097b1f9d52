//! Graph-level analyses of typed topologies.
//!
//! The central classification is *convergence*: a typed topology is
//! converging when some simple undirected path `p0 -c1- p1 - … -cn- pn`
//! (n ≥ 1, all processes distinct) has its first endpoint unrestricted on the
//! first channel and its last endpoint unrestricted on the last channel.
//! Reachability questions are decidable for the eager semantics exactly when
//! the topology is **non**-converging, so analyses refuse converging inputs
//! and return the offending path as a witness.
//!
//! Two channels are *co-cyclic* when some simple undirected cycle carries
//! both. This is computed from biconnected components of the undirected
//! channel multigraph (two distinct edges share a cycle iff they share a
//! biconnected component); [`enumerate_simple_cycles`] is the independent
//! brute-force route used to cross-check it.

use std::collections::BTreeSet;
use std::fmt;

use crate::model::{ChannelId, ProcessId, TypedTopology};

/// A simple undirected path through the topology: a start process and a list
/// of `(channel, process)` hops. When the last process equals the start the
/// value denotes a simple cycle.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct UndirectedPath {
    pub start: ProcessId,
    pub hops: Vec<(ChannelId, ProcessId)>,
}

impl UndirectedPath {
    pub fn channels(&self) -> Vec<ChannelId> {
        self.hops.iter().map(|(c, _)| *c).collect()
    }

    pub fn end(&self) -> ProcessId {
        self.hops.last().map(|(_, p)| *p).unwrap_or(self.start)
    }

    pub fn display<'a>(&'a self, topo: &'a TypedTopology) -> PathDisplay<'a> {
        PathDisplay { path: self, topo }
    }
}

pub struct PathDisplay<'a> {
    path: &'a UndirectedPath,
    topo: &'a TypedTopology,
}

impl fmt::Display for PathDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.topo.processes[self.path.start.0])?;
        for (c, p) in &self.path.hops {
            write!(f, " -{}- {}", self.topo.channels[c.0].name, self.topo.processes[p.0])?;
        }
        Ok(())
    }
}

/// Decides convergence. Returns the witness path when converging, `None`
/// otherwise.
///
/// The search extends simple paths edge by edge; a path witnesses convergence
/// as soon as its first endpoint is unrestricted on its first channel and its
/// current endpoint is unrestricted on its last channel. Convergence is
/// monotone in the unrestricted set: removing restriction marks can only
/// create witnesses, never destroy them.
pub fn is_converging(topo: &TypedTopology) -> Option<UndirectedPath> {
    for p0 in topo.process_ids() {
        for c1 in topo.incident(p0) {
            if topo.is_restricted(p0, c1) {
                continue;
            }
            // grow simple paths whose start endpoint is already unrestricted
            let p1 = topo.peer(p0, c1).expect("incident channel");
            if p1 == p0 {
                continue; // self-loop; invalid topology, skip defensively
            }
            let mut visited = vec![p0, p1];
            let mut hops = vec![(c1, p1)];
            if let Some(path) = extend_converging(topo, p0, &mut visited, &mut hops) {
                return Some(path);
            }
        }
    }
    None
}

fn extend_converging(
    topo: &TypedTopology,
    start: ProcessId,
    visited: &mut Vec<ProcessId>,
    hops: &mut Vec<(ChannelId, ProcessId)>,
) -> Option<UndirectedPath> {
    let (last_c, last_p) = *hops.last().expect("nonempty path");
    if !topo.is_restricted(last_p, last_c) {
        return Some(UndirectedPath { start, hops: hops.clone() });
    }
    for c in topo.incident(last_p) {
        let q = topo.peer(last_p, c).expect("incident channel");
        if q == last_p || visited.contains(&q) {
            continue;
        }
        visited.push(q);
        hops.push((c, q));
        if let Some(path) = extend_converging(topo, start, visited, hops) {
            return Some(path);
        }
        hops.pop();
        visited.pop();
    }
    None
}

/// True when the undirected channel multigraph is a forest: no two parallel
/// or antiparallel channels between the same pair and no larger cycles.
pub fn is_polyforest(topo: &TypedTopology) -> bool {
    // union-find over processes; any edge closing a component is a cycle
    let mut parent: Vec<usize> = (0..topo.process_count()).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for ch in &topo.channels {
        let a = find(&mut parent, ch.src.0);
        let b = find(&mut parent, ch.dst.0);
        if a == b {
            return false;
        }
        parent[a] = b;
    }
    true
}

/// Enumerates every simple undirected cycle, each exactly once, up to
/// `max_len` channels. A cycle is returned as an [`UndirectedPath`] that
/// starts and ends at its smallest process id; of the two traversal
/// directions the one with the lexicographically smaller channel sequence is
/// kept. Cycles have at least two channels (channels never self-loop) and a
/// 2-cycle is a pair of distinct channels between the same two processes.
pub fn enumerate_simple_cycles(topo: &TypedTopology, max_len: usize) -> Vec<UndirectedPath> {
    let mut out: BTreeSet<UndirectedPath> = BTreeSet::new();
    for p0 in topo.process_ids() {
        let mut visited = vec![p0];
        let mut hops: Vec<(ChannelId, ProcessId)> = Vec::new();
        cycle_dfs(topo, p0, max_len, &mut visited, &mut hops, &mut out);
    }
    out.into_iter().collect()
}

fn cycle_dfs(
    topo: &TypedTopology,
    start: ProcessId,
    max_len: usize,
    visited: &mut Vec<ProcessId>,
    hops: &mut Vec<(ChannelId, ProcessId)>,
    out: &mut BTreeSet<UndirectedPath>,
) {
    if hops.len() >= max_len {
        return;
    }
    let here = hops.last().map(|(_, p)| *p).unwrap_or(start);
    for c in topo.incident(here) {
        if hops.iter().any(|(used, _)| *used == c) {
            continue;
        }
        let q = topo.peer(here, c).expect("incident channel");
        if q == here {
            continue;
        }
        if q == start && hops.len() >= 1 {
            let mut cycle = hops.clone();
            cycle.push((c, q));
            out.insert(canonical_cycle(&UndirectedPath { start, hops: cycle }));
            continue;
        }
        // only anchor each cycle at its minimal process: intermediates must
        // be strictly larger than the start
        if q.0 <= start.0 || visited.contains(&q) {
            continue;
        }
        visited.push(q);
        hops.push((c, q));
        cycle_dfs(topo, start, max_len, visited, hops, out);
        hops.pop();
        visited.pop();
    }
}

/// Rotates/reflects a simple cycle into its canonical representation:
/// anchored at the smallest process, smaller channel sequence of the two
/// directions.
fn canonical_cycle(cycle: &UndirectedPath) -> UndirectedPath {
    debug_assert_eq!(cycle.end(), cycle.start);
    let forward = cycle.channels();
    // reversed traversal: same start, hops walked backwards
    let mut rev_hops: Vec<(ChannelId, ProcessId)> = Vec::new();
    let mut procs: Vec<ProcessId> = vec![cycle.start];
    for (_, p) in &cycle.hops {
        procs.push(*p);
    }
    for i in (0..cycle.hops.len()).rev() {
        rev_hops.push((cycle.hops[i].0, procs[i]));
    }
    let backward: Vec<ChannelId> = rev_hops.iter().map(|(c, _)| *c).collect();
    if backward < forward {
        UndirectedPath { start: cycle.start, hops: rev_hops }
    } else {
        cycle.clone()
    }
}

/// Symmetric relation over channels: `related(c, d)` holds for distinct
/// channels lying on a common simple undirected cycle, plus reflexively for
/// every channel on at least one cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelRelation {
    pairs: BTreeSet<(ChannelId, ChannelId)>,
}

impl ChannelRelation {
    pub fn from_pairs(iter: impl IntoIterator<Item = (ChannelId, ChannelId)>) -> ChannelRelation {
        let mut pairs = BTreeSet::new();
        for (a, b) in iter {
            pairs.insert((a, b));
            pairs.insert((b, a));
        }
        ChannelRelation { pairs }
    }

    pub fn related(&self, a: ChannelId, b: ChannelId) -> bool {
        self.pairs.contains(&(a, b))
    }

    /// All ordered pairs, both directions included.
    pub fn pairs(&self) -> &BTreeSet<(ChannelId, ChannelId)> {
        &self.pairs
    }

    /// Distinct unordered pairs.
    pub fn unordered_pairs(&self) -> Vec<(ChannelId, ChannelId)> {
        self.pairs.iter().filter(|(a, b)| a < b).cloned().collect()
    }

    pub fn partners(&self, c: ChannelId) -> Vec<ChannelId> {
        self.pairs.iter().filter(|(a, _)| *a == c).map(|(_, b)| *b).collect()
    }
}

/// Computes the co-cyclicity relation from biconnected components of the
/// undirected channel multigraph: two distinct edges lie on a common simple
/// cycle iff they belong to the same biconnected component, and a component
/// that is a single edge (a bridge) carries no cycle at all.
pub fn co_cycle_relation(topo: &TypedTopology) -> ChannelRelation {
    let components = biconnected_edge_components(topo);
    let mut pairs = Vec::new();
    for comp in components {
        if comp.len() < 2 {
            continue;
        }
        for i in 0..comp.len() {
            for j in 0..comp.len() {
                pairs.push((comp[i], comp[j]));
            }
        }
    }
    ChannelRelation::from_pairs(pairs)
}

/// Partition of the channels into biconnected components of the undirected
/// multigraph. Iterative Tarjan DFS with an explicit edge stack; parallel
/// channels are distinct edges, so an antiparallel pair forms a component of
/// size two rather than a bridge.
pub fn biconnected_edge_components(topo: &TypedTopology) -> Vec<Vec<ChannelId>> {
    let n = topo.process_count();
    // adjacency as (edge, neighbour) lists
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (e, ch) in topo.channels.iter().enumerate() {
        if ch.src == ch.dst || ch.src.0 >= n || ch.dst.0 >= n {
            continue; // invalid, ignore defensively
        }
        adj[ch.src.0].push((e, ch.dst.0));
        adj[ch.dst.0].push((e, ch.src.0));
    }

    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut timer = 0usize;
    let mut edge_stack: Vec<usize> = Vec::new();
    let mut components: Vec<Vec<ChannelId>> = Vec::new();

    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        // frame: (vertex, entering edge or MAX, next adjacency index)
        let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        loop {
            let Some(&(v, pe, idx)) = stack.last() else { break };
            if idx < adj[v].len() {
                stack.last_mut().expect("nonempty").2 += 1;
                let (e, w) = adj[v][idx];
                if e == pe {
                    continue; // do not walk back through the entering edge
                }
                if disc[w] == usize::MAX {
                    edge_stack.push(e);
                    disc[w] = timer;
                    low[w] = timer;
                    timer += 1;
                    stack.push((w, e, 0));
                } else if disc[w] < disc[v] {
                    // back edge towards an ancestor
                    edge_stack.push(e);
                    if disc[w] < low[v] {
                        low[v] = disc[w];
                    }
                }
            } else {
                stack.pop();
                let Some(&(u, _, _)) = stack.last() else {
                    debug_assert!(edge_stack.is_empty());
                    break;
                };
                if low[v] < low[u] {
                    low[u] = low[v];
                }
                if low[v] >= disc[u] {
                    // u separates v's subtree: everything pushed since the
                    // tree edge `pe` (inclusive) is one component
                    let mut comp = Vec::new();
                    while let Some(e) = edge_stack.pop() {
                        comp.push(ChannelId(e));
                        if e == pe {
                            break;
                        }
                    }
                    comp.sort();
                    components.push(comp);
                }
            }
        }
    }
    components.sort();
    components
}

/// The *adjacent-on-a-cycle* relation: pairs of distinct channels that occur
/// consecutively on some simple undirected cycle. Since every rotation of a
/// cycle is again a cycle, quantifying "the first two channels" over all
/// cycles yields exactly the consecutive pairs. Used by the weak mutual
/// exclusion variant. Derived from [`enumerate_simple_cycles`].
pub fn cycle_adjacency_relation(topo: &TypedTopology) -> ChannelRelation {
    let cycles = enumerate_simple_cycles(topo, topo.channel_count().max(2));
    let mut pairs = Vec::new();
    for cycle in cycles {
        let cs = cycle.channels();
        let k = cs.len();
        for i in 0..k {
            let a = cs[i];
            let b = cs[(i + 1) % k];
            if a != b {
                pairs.push((a, b));
            }
        }
    }
    ChannelRelation::from_pairs(pairs)
}

/// Oracle counterpart of [`co_cycle_relation`], built by direct cycle
/// enumeration. Kept separate so the two routes stay independent.
pub fn co_cycle_relation_by_enumeration(topo: &TypedTopology) -> ChannelRelation {
    let cycles = enumerate_simple_cycles(topo, topo.channel_count().max(2));
    let mut pairs = Vec::new();
    for cycle in cycles {
        let cs = cycle.channels();
        for i in 0..cs.len() {
            for j in 0..cs.len() {
                pairs.push((cs[i], cs[j]));
            }
        }
    }
    ChannelRelation::from_pairs(pairs)
}

/// Graphviz rendering of a typed topology. Restricted endpoints are drawn as
/// `o`, unrestricted ones as `*`, in the tail/head labels of each edge.
pub fn to_dot(topo: &TypedTopology) -> String {
    use std::fmt::Write;
    let mut s = String::from("digraph topology {\n");
    for (i, name) in topo.processes.iter().enumerate() {
        writeln!(s, "  n{i} [label=\"{name}\"];").unwrap();
    }
    for (e, ch) in topo.channels.iter().enumerate() {
        let tail = if topo.is_restricted(ch.src, ChannelId(e)) { "o" } else { "*" };
        let head = if topo.is_restricted(ch.dst, ChannelId(e)) { "o" } else { "*" };
        writeln!(
            s,
            "  n{} -> n{} [label=\"{}\", taillabel=\"{}\", headlabel=\"{}\"];",
            ch.src.0, ch.dst.0, ch.name, tail, head
        )
        .unwrap();
    }
    s.push_str("}\n");
    s
}
