//! Layer slicing of fused ZX diagrams and circuit partitioning.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::zx::{circuit_to_zx, fuse_all, NodeKind, ZxDiagram, DEFAULT_MAX_DEGREE};

/// One end of a connection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum End {
    Spider(usize),
    Input(usize),
    Output(usize),
}

/// A wire between two spiders or boundaries, possibly through a chain of
/// Hadamard boxes; `hadamard` holds the parity of that chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Conn {
    pub a: End,
    pub b: End,
    pub hadamard: bool,
    /// Diagram nodes from `a` to `b`, endpoints included.
    pub path: Vec<usize>,
}

impl Conn {
    pub fn other(&self, e: End) -> End {
        if self.a == e {
            self.b
        } else {
            self.a
        }
    }

    pub fn touches(&self, e: End) -> bool {
        self.a == e || self.b == e
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Layer {
    pub spiders: Vec<usize>,
    /// Connections from the previous layer.
    pub inputs: Vec<usize>,
    /// Connections to the next layer.
    pub outputs: Vec<usize>,
    /// Connections inside the layer.
    pub inner: Vec<usize>,
    /// Connections from input boundaries.
    pub port_inputs: Vec<usize>,
    /// Connections to output boundaries.
    pub port_outputs: Vec<usize>,
    /// Connections to single-wire spiders that carry no layer.
    pub primitives: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct SliceSchedule {
    pub diagram: ZxDiagram,
    pub layer_of: BTreeMap<usize, usize>,
    /// Inclusive `(first_layer, last_layer)` span of each block.
    pub blocks: Vec<(usize, usize)>,
    pub conns: Vec<Conn>,
    /// `layers[i]` describes layer `i + 1`.
    pub layers: Vec<Layer>,
    /// Input-to-output wires that meet no spider.
    pub idle_wires: Vec<usize>,
    pub warnings: Vec<String>,
}

impl SliceSchedule {
    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layer(&self, l: usize) -> &Layer {
        &self.layers[l - 1]
    }

    /// Spiders of layer `l` with at least one connection into layer `l + 1`.
    pub fn frontier(&self, l: usize) -> Vec<usize> {
        let layer = self.layer(l);
        let mut out = BTreeSet::new();
        for &k in &layer.outputs {
            let c = &self.conns[k];
            for e in [c.a, c.b] {
                if let End::Spider(s) = e {
                    if self.layer_of.get(&s) == Some(&l) {
                        out.insert(s);
                    }
                }
            }
        }
        out.into_iter().collect()
    }

    pub fn max_frontier(&self) -> usize {
        (1..=self.num_layers())
            .map(|l| self.frontier(l).len())
            .max()
            .unwrap_or(0)
    }

    pub fn conns_of(&self, e: End) -> Vec<usize> {
        (0..self.conns.len())
            .filter(|&k| self.conns[k].touches(e))
            .collect()
    }
}

/// Collapse Hadamard chains into connections between spiders/boundaries.
pub fn connections(g: &ZxDiagram) -> Vec<Conn> {
    let end_of = |v: usize| -> End {
        if let Some(q) = g.inputs.iter().position(|&x| x == v) {
            End::Input(q)
        } else if let Some(q) = g.outputs.iter().position(|&x| x == v) {
            End::Output(q)
        } else {
            End::Spider(v)
        }
    };
    let mut out = Vec::new();
    for u in g.node_ids() {
        if g.kind(u) == NodeKind::HBox {
            continue;
        }
        for &n in g.neighbors(u) {
            let mut path = vec![u];
            let (mut prev, mut cur, mut parity) = (u, n, false);
            while g.kind(cur) == NodeKind::HBox {
                path.push(cur);
                parity = !parity;
                let nb = g.neighbors(cur);
                let next = if nb[0] == prev { nb[1] } else { nb[0] };
                prev = cur;
                cur = next;
                if path.len() > g.capacity() {
                    break;
                }
            }
            path.push(cur);
            // each chain is seen from both ends; keep the copy that starts
            // at the smaller id (for loops through boxes, the one whose
            // first hop is smaller)
            let keep = u < cur || (u == cur && path[1] <= path[path.len() - 2]);
            if keep {
                out.push(Conn {
                    a: end_of(u),
                    b: end_of(cur),
                    hadamard: parity,
                    path,
                });
            }
        }
    }
    out
}

/// BFS slicing: spiders next to inputs form layer 1, each later spider sits
/// one layer above its discoverer. Single-wire spiders get no layer.
pub fn slice_layers(g: &ZxDiagram) -> SliceSchedule {
    let conns = connections(g);
    let mut adj: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    let mut wire_count: BTreeMap<usize, usize> = BTreeMap::new();
    let mut from_input = BTreeSet::new();
    let mut to_output = BTreeSet::new();
    for s in g.spider_ids() {
        adj.entry(s).or_default();
        wire_count.entry(s).or_default();
    }
    for c in &conns {
        for (x, y) in [(c.a, c.b), (c.b, c.a)] {
            if let End::Spider(s) = x {
                *wire_count.entry(s).or_default() += 1;
                match y {
                    End::Spider(t) if t != s => {
                        adj.entry(s).or_default().insert(t);
                    }
                    End::Input(_) => {
                        from_input.insert(s);
                    }
                    End::Output(_) => {
                        to_output.insert(s);
                    }
                    _ => {}
                }
            }
        }
    }
    let layered = |s: &usize| wire_count.get(s).copied().unwrap_or(0) >= 2;

    let mut layer_of = BTreeMap::new();
    let mut warnings = Vec::new();
    let bfs = |start: Vec<usize>, layer_of: &mut BTreeMap<usize, usize>| {
        let mut frontier = start;
        let mut level = 1;
        for &s in &frontier {
            layer_of.insert(s, level);
        }
        while !frontier.is_empty() {
            let mut next = BTreeSet::new();
            for s in &frontier {
                for t in &adj[s] {
                    if layered(t) && !layer_of.contains_key(t) {
                        next.insert(*t);
                    }
                }
            }
            level += 1;
            for &t in &next {
                layer_of.insert(t, level);
            }
            frontier = next.into_iter().collect();
        }
    };
    bfs(
        from_input.iter().copied().filter(layered).collect(),
        &mut layer_of,
    );

    let unreached: Vec<usize> = adj
        .keys()
        .copied()
        .filter(|s| layered(s) && !layer_of.contains_key(s))
        .collect();
    if !unreached.is_empty() {
        warnings.push(format!(
            "{} spider(s) unreachable from any input: {:?}",
            unreached.len(),
            unreached
        ));
        let mut starts: Vec<usize> = unreached
            .iter()
            .copied()
            .filter(|s| to_output.contains(s))
            .collect();
        loop {
            if starts.is_empty() {
                match adj
                    .keys()
                    .copied()
                    .find(|s| layered(s) && !layer_of.contains_key(s))
                {
                    Some(s) => starts.push(s),
                    None => break,
                }
            }
            bfs(std::mem::take(&mut starts), &mut layer_of);
        }
    }

    let n = layer_of.values().copied().max().unwrap_or(0);
    let mut s = assemble_schedule(g.clone(), conns, layer_of, vec![(1, n)]);
    s.warnings.splice(0..0, warnings);
    if n == 0 {
        s.blocks.clear();
    }
    s
}

fn assemble_schedule(
    diagram: ZxDiagram,
    conns: Vec<Conn>,
    layer_of: BTreeMap<usize, usize>,
    blocks: Vec<(usize, usize)>,
) -> SliceSchedule {
    let n = layer_of.values().copied().max().unwrap_or(0);
    let mut layers = vec![Layer::default(); n];
    for (&s, &l) in &layer_of {
        layers[l - 1].spiders.push(s);
    }
    let mut idle_wires = Vec::new();
    let mut warnings = Vec::new();
    let layer = |e: End| match e {
        End::Spider(s) => layer_of.get(&s).copied(),
        _ => None,
    };
    for (k, c) in conns.iter().enumerate() {
        match (c.a, c.b, layer(c.a), layer(c.b)) {
            (_, _, Some(la), Some(lb)) => {
                let (lo, hi) = (la.min(lb), la.max(lb));
                if lo == hi {
                    layers[lo - 1].inner.push(k);
                } else if hi == lo + 1 {
                    layers[lo - 1].outputs.push(k);
                    layers[hi - 1].inputs.push(k);
                } else {
                    warnings.push(format!("connection {k} spans layers {lo} and {hi}"));
                }
            }
            (End::Input(_), _, None, Some(l)) | (_, End::Input(_), Some(l), None) => {
                layers[l - 1].port_inputs.push(k)
            }
            (End::Output(_), _, None, Some(l)) | (_, End::Output(_), Some(l), None) => {
                layers[l - 1].port_outputs.push(k)
            }
            (End::Spider(_), _, None, Some(l)) | (_, End::Spider(_), Some(l), None) => {
                layers[l - 1].primitives.push(k)
            }
            (End::Input(_), End::Output(_), ..) | (End::Output(_), End::Input(_), ..) => {
                idle_wires.push(k)
            }
            _ => {}
        }
    }
    SliceSchedule {
        diagram,
        layer_of,
        blocks,
        conns,
        layers,
        idle_wires,
        warnings,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartitionMode {
    TopologyAware,
    Uniform,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PartitionConfig {
    pub mode: PartitionMode,
    /// Frontier cap; `None` means the circuit's qubit count.
    pub threshold: Option<usize>,
    pub uniform_stride: usize,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        PartitionConfig {
            mode: PartitionMode::TopologyAware,
            threshold: None,
            uniform_stride: 5,
        }
    }
}

impl PartitionConfig {
    pub fn uniform(stride: usize) -> Self {
        PartitionConfig {
            mode: PartitionMode::Uniform,
            threshold: None,
            uniform_stride: stride,
        }
    }

    pub fn none() -> Self {
        PartitionConfig {
            mode: PartitionMode::None,
            ..Default::default()
        }
    }

    pub fn topology(threshold: Option<usize>) -> Self {
        PartitionConfig {
            threshold,
            ..Default::default()
        }
    }
}

/// Parses `topo`, `topo:T`, `uniform:K` and `none`.
impl FromStr for PartitionConfig {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let num = |a: Option<&str>| -> Result<Option<usize>> {
            a.map(|v| {
                v.parse::<usize>()
                    .map_err(|_| Error::Config(format!("bad number '{v}' in '{s}'")))
            })
            .transpose()
        };
        match head {
            "topo" | "topology" => Ok(PartitionConfig::topology(num(arg)?)),
            "uniform" => Ok(PartitionConfig::uniform(num(arg)?.unwrap_or(5))),
            "none" if arg.is_none() => Ok(PartitionConfig::none()),
            _ => Err(Error::Config(format!("unknown partition mode '{s}'"))),
        }
    }
}

impl fmt::Display for PartitionConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.mode, self.threshold) {
            (PartitionMode::TopologyAware, Some(t)) => write!(f, "topo:{t}"),
            (PartitionMode::TopologyAware, None) => write!(f, "topo"),
            (PartitionMode::Uniform, _) => write!(f, "uniform:{}", self.uniform_stride),
            (PartitionMode::None, _) => write!(f, "none"),
        }
    }
}

struct Block {
    diagram: ZxDiagram,
    schedule: SliceSchedule,
}

fn make_block(c: &Circuit, moments: std::ops::Range<usize>) -> Block {
    let sub = c.slice_moments(moments);
    let diagram = fuse_all(&circuit_to_zx(&sub), DEFAULT_MAX_DEGREE);
    let schedule = slice_layers(&diagram);
    Block { diagram, schedule }
}

/// Splice independently sliced blocks into one diagram; each block's layers
/// start after the previous maximum, and idle spiders fill layer gaps.
fn splice(num_qubits: usize, blocks: &[&Block]) -> SliceSchedule {
    let mut g = ZxDiagram::new();
    let mut layer_of = BTreeMap::new();
    let mut spans = Vec::new();
    let mut open: Vec<usize> = (0..num_qubits).map(|_| g.add_input()).collect();
    let mut offset = 0;
    let mut warnings = Vec::new();
    for b in blocks {
        let d = &b.diagram;
        let mut map = vec![usize::MAX; d.capacity()];
        for v in d.node_ids() {
            if d.kind(v) != NodeKind::Boundary {
                let n = d.node(v);
                map[v] = g.add_node(n.kind, n.phase);
                if let Some(&l) = b.schedule.layer_of.get(&v) {
                    layer_of.insert(map[v], offset + l);
                }
            }
        }
        for (q, &i) in d.inputs.iter().enumerate() {
            map[i] = open[q];
        }
        let mut next_open = open.clone();
        for (q, &o) in d.outputs.iter().enumerate() {
            let src = d.neighbors(o)[0];
            next_open[q] = map[src];
            map[o] = usize::MAX;
        }
        for (u, v) in d.edges() {
            if map[u] != usize::MAX && map[v] != usize::MAX {
                g.add_edge(map[u], map[v]);
            }
        }
        open = next_open;
        let n = b.schedule.num_layers();
        if n > 0 {
            spans.push((offset + 1, offset + n));
        }
        offset += n;
        warnings.extend(b.schedule.warnings.iter().cloned());
    }
    for &o in &open {
        let out = g.add_output();
        g.add_edge(o, out);
    }

    // idle spiders restore unit layer steps along spliced wires
    for c in connections(&g) {
        let level = |e: End| match e {
            End::Spider(s) => layer_of.get(&s).copied(),
            End::Input(_) => Some(0),
            End::Output(_) => None,
        };
        let (la, lb) = match (level(c.a), level(c.b)) {
            (Some(a), Some(b)) => (a, b),
            _ => continue,
        };
        let (path, lo, hi): (Vec<usize>, usize, usize) = if la <= lb {
            (c.path.clone(), la, lb)
        } else {
            (c.path.iter().rev().copied().collect(), lb, la)
        };
        if hi <= lo + 1 {
            continue;
        }
        let v = path[path.len() - 1];
        let mut prev = path[path.len() - 2];
        g.remove_edge(prev, v);
        for l in lo + 1..hi {
            let idle = g.add_spider(NodeKind::Z, 0.0);
            layer_of.insert(idle, l);
            g.add_edge(prev, idle);
            prev = idle;
        }
        g.add_edge(prev, v);
    }
    let conns = connections(&g);
    let mut s = assemble_schedule(g, conns, layer_of, spans);
    s.warnings.splice(0..0, warnings);
    s
}

/// One idle spider per wire; appended when checking a candidate block so
/// wires leaving it are padded as they will be once the next block lands.
fn continuation(num_qubits: usize) -> Block {
    let mut diagram = ZxDiagram::new();
    let ins: Vec<usize> = (0..num_qubits).map(|_| diagram.add_input()).collect();
    for i in ins {
        let s = diagram.add_spider(NodeKind::Z, 0.0);
        let o = diagram.add_output();
        diagram.add_edge(i, s);
        diagram.add_edge(s, o);
    }
    let schedule = slice_layers(&diagram);
    Block { diagram, schedule }
}

fn frontier_ok(s: &SliceSchedule, upto: usize, threshold: usize) -> bool {
    (1..=upto.min(s.num_layers())).all(|l| s.frontier(l).len() <= threshold)
}

/// Partition `c` into blocks per `cfg` and return the assembled schedule.
pub fn partition_program(c: &Circuit, cfg: &PartitionConfig) -> Result<SliceSchedule> {
    c.validate()?;
    let threshold = cfg.threshold.unwrap_or(c.num_qubits);
    if threshold < 1 {
        return Err(Error::Config("partition threshold must be >= 1".into()));
    }
    if cfg.uniform_stride < 1 {
        return Err(Error::Config("uniform stride must be >= 1".into()));
    }
    let depth = c.depth();
    let whole = || {
        let g = fuse_all(&circuit_to_zx(c), DEFAULT_MAX_DEGREE);
        slice_layers(&g)
    };
    match cfg.mode {
        PartitionMode::None => Ok(whole()),
        PartitionMode::Uniform => {
            if depth <= cfg.uniform_stride {
                return Ok(whole());
            }
            let blocks: Vec<Block> = (0..depth)
                .step_by(cfg.uniform_stride)
                .map(|s| make_block(c, s..(s + cfg.uniform_stride).min(depth)))
                .collect();
            Ok(splice(c.num_qubits, &blocks.iter().collect::<Vec<_>>()))
        }
        PartitionMode::TopologyAware => {
            let mut done: Vec<Block> = Vec::new();
            let tail = continuation(c.num_qubits);
            let mut warnings = Vec::new();
            let mut start = 0;
            while start < depth {
                let check = |b: &Block| {
                    let refs: Vec<&Block> = done.iter().chain([b, &tail]).collect();
                    let upto = refs.iter().map(|r| r.schedule.num_layers()).sum::<usize>() - 1;
                    frontier_ok(&splice(c.num_qubits, &refs), upto, threshold)
                };
                let mut len = 2.min(depth - start);
                let mut best = make_block(c, start..start + len);
                if check(&best) {
                    while start + len < depth {
                        let cand = make_block(c, start..start + len + 1);
                        if !check(&cand) {
                            break;
                        }
                        best = cand;
                        len += 1;
                    }
                } else if len > 1 {
                    len = 1;
                    best = make_block(c, start..start + 1);
                    if !check(&best) {
                        warnings.push(format!("single-depth block at depth {start} exceeds frontier threshold {threshold}"));
                    }
                } else {
                    warnings.push(format!("single-depth block at depth {start} exceeds frontier threshold {threshold}"));
                }
                done.push(best);
                start += len;
            }
            let mut s = if done.len() <= 1 {
                whole()
            } else {
                splice(c.num_qubits, &done.iter().collect::<Vec<_>>())
            };
            s.warnings.extend(warnings);
            if s.max_frontier() > threshold && !s.warnings.iter().any(|w| w.contains("exceeds")) {
                s.warnings.push(format!(
                    "frontier {} exceeds threshold {threshold}",
                    s.max_frontier()
                ));
            }
            Ok(s)
        }
    }
}
