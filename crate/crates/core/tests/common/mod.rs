#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use nocsim::{LinkParams, LinkSpec, NodeId, Topology};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Adjacency sets rebuilt straight from the link list.
pub fn adjacency(topology: &Topology) -> Vec<BTreeSet<usize>> {
    let mut adj = vec![BTreeSet::new(); topology.node_count()];
    for link in topology.links() {
        let (a, b) = link.pair();
        adj[a.index()].insert(b.index());
        adj[b.index()].insert(a.index());
    }
    adj
}

/// Hop counts from `source` to every node; `None` when unreachable.
pub fn bfs(adj: &[BTreeSet<usize>], source: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; adj.len()];
    dist[source] = Some(0);
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].unwrap();
        for &v in &adj[u] {
            if dist[v].is_none() {
                dist[v] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

pub fn all_pairs(topology: &Topology) -> Vec<Vec<usize>> {
    let adj = adjacency(topology);
    (0..adj.len()).map(|s| bfs(&adj, s).into_iter().map(|d| d.expect("connected")).collect()).collect()
}

/// Connected graph on `n` nodes: a random spanning tree plus `extra` chords.
pub fn random_connected(n: usize, extra: usize, rng: &mut impl Rng) -> Topology {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut pairs = BTreeSet::new();
    for i in 1..n {
        let j = rng.random_range(0..i);
        let (a, b) = (order[i], order[j]);
        pairs.insert((a.min(b), a.max(b)));
    }
    for _ in 0..extra {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            pairs.insert((a.min(b), a.max(b)));
        }
    }
    let links = pairs
        .into_iter()
        .map(|(a, b)| LinkSpec::new(a, b, LinkParams::new(rng.random_range(0.5..4.0), rng.random_range(0.0..2.0))))
        .collect();
    Topology::custom(n, links).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Average delay recomputed from trace text: GEN and RCV lines paired by
/// packet id, delays summed in id order. `None` when nothing was received.
pub fn brute_force_average(trace_text: &str, warmup: f64) -> Option<f64> {
    let mut gen = BTreeMap::new();
    let mut rcv = BTreeMap::new();
    for line in trace_text.lines() {
        let f: Vec<&str> = line.split_whitespace().collect();
        let time: f64 = f[1].parse().unwrap();
        let id: u64 = f[3].parse().unwrap();
        match f[0] {
            "GEN" => {
                gen.insert(id, time);
            }
            "RCV" => {
                rcv.insert(id, time);
            }
            _ => {}
        }
    }
    let mut sum = 0.0;
    let mut count = 0u64;
    for (id, t_gen) in &gen {
        if *t_gen < warmup {
            continue;
        }
        if let Some(t_rcv) = rcv.get(id) {
            sum += t_rcv - t_gen;
            count += 1;
        }
    }
    (count > 0).then(|| sum / count as f64)
}

/// Expected destination distance under locality traffic, averaged over
/// sources.
pub fn locality_mean_hops(topology: &Topology, range1: f64) -> f64 {
    let adj = adjacency(topology);
    let n = adj.len();
    let mut total = 0.0;
    for s in 0..n {
        let dist = bfs(&adj, s);
        let far: Vec<usize> = (0..n).filter(|&d| d != s && !adj[s].contains(&d)).map(|d| dist[d].unwrap()).collect();
        let far_mean = if far.is_empty() { 0.0 } else { far.iter().sum::<usize>() as f64 / far.len() as f64 };
        total += range1 * 1.0 + (1.0 - range1) * far_mean;
    }
    total / n as f64
}

/// Mean hop count of the pairing s -> N-1-s over sources that move.
pub fn complement_mean_hops(topology: &Topology) -> f64 {
    let dist = all_pairs(topology);
    let n = dist.len();
    let hops: Vec<usize> = (0..n).filter(|&s| n - 1 - s != s).map(|s| dist[s][n - 1 - s]).collect();
    hops.iter().sum::<usize>() as f64 / hops.len() as f64
}

pub fn node(i: usize) -> NodeId {
    NodeId(i)
}
