use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::route::{manhattan, Target};
use super::state::{Cell, EmbeddingState, Grid, Leaf};
use super::CompileConfig;
use crate::error::{Error, Result};
use crate::pipe::{Axis, Color, Cube, CubeKind, Dir, Pos};
use crate::schedule::{End, SliceSchedule};
use crate::zx::{phase_is_zero, NodeKind};

/// Placement of one spider: cell and orientation.
pub type Action = (Pos, Axis);

/// Reward standing in for −∞ once rewards are scaled to about −1.
const FAIL_REWARD: f64 = -10.0;

const LEAF_ORDER: [Dir; 6] = [
    Dir {
        axis: Axis::X,
        positive: true,
    },
    Dir {
        axis: Axis::X,
        positive: false,
    },
    Dir {
        axis: Axis::Y,
        positive: true,
    },
    Dir {
        axis: Axis::Y,
        positive: false,
    },
    Dir::PZ,
    Dir::NZ,
];

#[derive(Clone, Debug)]
struct SpiderInfo {
    kind: NodeKind,
    conns: Vec<usize>,
    leaves: Vec<Leaf>,
    /// Anchor of the nearest input by connection distance.
    home: Option<[i32; 2]>,
}

/// Valid candidates the fallback pass compares per spider.
const RELAXED_CHOICES: usize = 24;

/// UCT value of a child; unvisited children come first.
pub fn uct_score(reward_sum: f64, visits: u32, parent_visits: u32, c: f64) -> f64 {
    if visits == 0 {
        return f64::INFINITY;
    }
    let n = f64::from(visits);
    reward_sum / n + c * (f64::from(parent_visits.max(1)).ln() / n).sqrt()
}

#[derive(Clone, Debug, Default)]
pub struct SearchStats {
    pub iterations: usize,
    pub best_volume: Option<u64>,
    /// Best volume after each iteration that completed an embedding.
    pub trace: Vec<u64>,
}

#[derive(Clone, Debug)]
struct Best {
    volume: u64,
    cubes: usize,
    order: Vec<usize>,
    actions: Vec<Action>,
}

impl Best {
    fn key(&self) -> (u64, usize) {
        (self.volume, self.cubes)
    }
}

#[derive(Debug)]
struct Node {
    action: Option<Action>,
    parent: usize,
    children: Vec<usize>,
    untried: Option<Vec<Action>>,
    visits: u32,
    reward: f64,
    exhausted: bool,
}

impl Node {
    fn new(action: Option<Action>, parent: usize) -> Self {
        Node {
            action,
            parent,
            children: Vec::new(),
            untried: None,
            visits: 0,
            reward: 0.0,
            exhausted: false,
        }
    }
}

/// Drives the embedding of one sliced program.
pub struct Embedder<'a> {
    pub sched: &'a SliceSchedule,
    pub cfg: &'a CompileConfig,
    info: Vec<Option<SpiderInfo>>,
    input_cubes: Vec<usize>,
    idle_inputs: Vec<bool>,
    num_qubits: usize,
}

impl<'a> Embedder<'a> {
    pub fn anchor(cfg: &CompileConfig, q: usize) -> [i32; 2] {
        let p = cfg.pitch as i32;
        let (w, row) = (cfg.grid.0, q / cfg.grid.0);
        let col = if row % 2 == 0 { q % w } else { w - 1 - q % w };
        [p * col as i32, p * row as i32]
    }

    pub(crate) fn grid_for(cfg: &CompileConfig) -> Grid {
        let p = cfg.pitch;
        Grid::new([-1, -1], p * (cfg.grid.0 - 1) + 3, p * (cfg.grid.1 - 1) + 3)
    }

    /// Build the embedder and the initial state with input ports placed.
    pub fn new(
        sched: &'a SliceSchedule,
        cfg: &'a CompileConfig,
        num_qubits: usize,
    ) -> Result<(Self, EmbeddingState)> {
        let g = &sched.diagram;
        let mut info = vec![None; g.capacity()];
        for &s in sched.layer_of.keys() {
            let mut conns = Vec::new();
            let mut leaves = Vec::new();
            let mut faces = 0;
            if !phase_is_zero(g.phase(s)) {
                leaves.push(Leaf {
                    x_type: g.kind(s) == NodeKind::X,
                    angle: g.phase(s),
                });
            }
            for k in sched.conns_of(End::Spider(s)) {
                let c = &sched.conns[k];
                match c.other(End::Spider(s)) {
                    End::Spider(p) if p != s && !sched.layer_of.contains_key(&p) => {
                        leaves.push(Leaf {
                            x_type: (g.kind(p) == NodeKind::X) != c.hadamard,
                            angle: g.phase(p),
                        });
                    }
                    other => {
                        faces += if other == End::Spider(s) { 2 } else { 1 };
                        conns.push(k);
                    }
                }
            }
            faces += leaves.len();
            if faces > 4 {
                return Err(Error::Embed(format!(
                    "spider {s} needs {faces} faces, a cube has 4"
                )));
            }
            info[s] = Some(SpiderInfo {
                kind: g.kind(s),
                conns,
                leaves,
                home: None,
            });
        }
        let mut queue = std::collections::VecDeque::new();
        for (k, c) in sched.conns.iter().enumerate() {
            for (e, f) in [(c.a, c.b), (c.b, c.a)] {
                if let (End::Input(q), End::Spider(t)) = (e, f) {
                    queue.push_back((t, Self::anchor(cfg, q), k));
                }
            }
        }
        let mut order: Vec<_> = queue.drain(..).collect();
        order.sort_by_key(|&(_, a, _)| (a[1], a[0]));
        queue.extend(order);
        while let Some((t, a, _)) = queue.pop_front() {
            let Some(i) = info.get_mut(t).and_then(|i| i.as_mut()) else {
                continue;
            };
            if i.home.is_some() {
                continue;
            }
            i.home = Some(a);
            for &k in &i.conns.clone() {
                if let End::Spider(u) = sched.conns[k].other(End::Spider(t)) {
                    queue.push_back((u, a, k));
                }
            }
        }
        for c in &sched.conns {
            let layered = |e: End| matches!(e, End::Spider(s) if sched.layer_of.contains_key(&s));
            let boundary = |e: End| matches!(e, End::Input(_) | End::Output(_));
            if (boundary(c.a) && !layered(c.b) && !boundary(c.b))
                || (boundary(c.b) && !layered(c.a) && !boundary(c.a))
            {
                return Err(Error::Embed(
                    "boundary wire ends in a single-wire spider".into(),
                ));
            }
        }

        let mut st = EmbeddingState::new(
            Self::grid_for(cfg),
            cfg.grid,
            g.capacity(),
            sched.conns.len(),
        );
        let mut idle_inputs = vec![false; num_qubits];
        for &k in &sched.idle_wires {
            for e in [sched.conns[k].a, sched.conns[k].b] {
                if let End::Input(q) = e {
                    idle_inputs[q] = true;
                }
            }
        }
        let mut input_cubes = Vec::new();
        for (q, &idle) in idle_inputs.iter().enumerate() {
            let [x, y] = Self::anchor(cfg, q);
            let id = st.add_cube(Cube::plain(0, [x, y, 0], CubeKind::BoundaryPort));
            input_cubes.push(id);
            if idle {
                st.grid.block_column([x, y]);
            } else {
                st.set_pending(id, 1);
                st.reserve(id, [x, y, 1]);
            }
        }
        st.partial.inputs = input_cubes.clone();
        st.commit();
        Ok((
            Embedder {
                sched,
                cfg,
                info,
                input_cubes,
                idle_inputs,
                num_qubits,
            },
            st,
        ))
    }

    fn info(&self, s: usize) -> &SpiderInfo {
        self.info[s].as_ref().expect("layered spider")
    }

    /// Cube standing for a connection end, if already placed.
    fn end_cube(&self, st: &EmbeddingState, e: End) -> Option<usize> {
        match e {
            End::Spider(s) => st.cube_of(s),
            End::Input(q) => Some(self.input_cubes[q]),
            End::Output(_) => None,
        }
    }

    /// Placed neighbours of `s` over open connections: (cube, hadamard).
    fn placed_neighbours(&self, st: &EmbeddingState, s: usize) -> Vec<(usize, bool)> {
        let mut out = Vec::new();
        for &k in &self.info(s).conns {
            let c = &self.sched.conns[k];
            let other = c.other(End::Spider(s));
            if st.conn_done(k) || other == End::Spider(s) {
                continue;
            }
            if let Some(cube) = self.end_cube(st, other) {
                out.push((cube, c.hadamard));
            }
        }
        out
    }

    /// Where the pending connections of `s` are likely to lead: placed
    /// neighbours of the unplaced end, or straight up for outputs.
    fn hints(&self, st: &EmbeddingState, s: usize, at: Pos) -> Vec<Pos> {
        let mut out = Vec::new();
        for &k in &self.info(s).conns {
            let other = self.sched.conns[k].other(End::Spider(s));
            if st.conn_done(k) || other == End::Spider(s) {
                continue;
            }
            match other {
                End::Output(_) => out.push([at[0], at[1], at[2] + 8]),
                End::Spider(t) if st.cube_of(t).is_none() => {
                    for &j in &self.info(t).conns {
                        let e = self.sched.conns[j].other(End::Spider(t));
                        if e == End::Spider(s) || e == End::Spider(t) {
                            continue;
                        }
                        match (self.end_cube(st, e), e) {
                            (Some(c), _) => out.push(st.cube(c).pos),
                            (None, End::Spider(u)) => {
                                if let Some([x, y]) = self.info(u).home {
                                    out.push([x, y, at[2]]);
                                }
                            }
                            _ => {}
                        }
                    }
                }
                _ => {}
            }
        }
        out
    }

    fn hint_cost(hints: &[Pos], p: Pos) -> u32 {
        hints.iter().map(|&h| manhattan(h, p)).min().unwrap_or(0)
    }

    /// Raw placement candidates for `s`; validity is decided by `place`.
    pub fn candidates(&self, st: &EmbeddingState, s: usize, placement_opt: bool) -> Vec<Action> {
        let nbrs = self.placed_neighbours(st, s);
        let allowed = |p: Pos| -> bool {
            if p[2] < 1 {
                return false;
            }
            match st.cell(p) {
                Cell::Free => true,
                Cell::Reserved(o) => nbrs.iter().any(|&(c, h)| c == o && !h),
                _ => false,
            }
        };
        let mut cells: Vec<Pos> = Vec::new();
        for &(c, h) in &nbrs {
            let base = st.cube(c).pos;
            let dirs: &[Dir] = if placement_opt {
                &Dir::ORDER
            } else {
                &[Dir::PZ]
            };
            for &d in dirs {
                let p = d.step(base);
                // a Hadamard neighbour leaves room for the Hadamard cube,
                // straight on or around a corner
                let seconds: &[Dir] = if !h {
                    &[]
                } else if placement_opt {
                    &Dir::ORDER
                } else {
                    &[Dir::PZ]
                };
                let reach: Vec<Pos> = if h {
                    seconds
                        .iter()
                        .filter(|e| **e != d.rev())
                        .map(|e| e.step(p))
                        .collect()
                } else {
                    vec![p]
                };
                for p in reach {
                    if allowed(p) && !cells.contains(&p) {
                        cells.push(p);
                    }
                }
            }
        }
        if nbrs.is_empty() {
            let z = st.top_z() + 1;
            for q in 0..self.num_qubits {
                let [x, y] = Self::anchor(self.cfg, q);
                if allowed([x, y, z]) {
                    cells.push([x, y, z]);
                }
            }
        }
        let spread = |p: Pos| -> u32 {
            nbrs.iter()
                .map(|&(c, _)| manhattan(p, st.cube(c).pos))
                .sum()
        };
        cells.sort_by_key(|&p| spread(p));
        let orients = [Axis::X, Axis::Y, Axis::Z];
        let mut out = Vec::new();
        for &p in &cells {
            let hints = self.hints(st, s, p);
            let mut os: Vec<(u32, Axis)> = orients
                .iter()
                .map(|&o| {
                    let best = Dir::ORDER
                        .iter()
                        .filter(|d| d.axis != o)
                        .map(|d| Self::hint_cost(&hints, d.step(p)))
                        .min()
                        .unwrap_or(0);
                    (best, o)
                })
                .collect();
            os.sort_by_key(|x| x.0);
            out.extend(os.into_iter().map(|(_, o)| (p, o)));
        }
        out
    }

    /// Place spider `s` per `action`, routing every connection to placed
    /// ends, attaching its leaves and reserving a face per pending
    /// connection. Leaves the state untouched on failure.
    pub fn place(&self, st: &mut EmbeddingState, s: usize, action: Action) -> bool {
        let cp = st.checkpoint();
        if self.try_place(st, s, action) {
            true
        } else {
            st.rollback(cp);
            false
        }
    }

    fn try_place(&self, st: &mut EmbeddingState, s: usize, (pos, o): Action) -> bool {
        let info = self.info(s);
        match st.cell(pos) {
            Cell::Free | Cell::Reserved(_) if pos[2] >= 1 => {}
            _ => return false,
        }
        let color = if info.kind == NodeKind::Z {
            Color::Blue
        } else {
            Color::Red
        };
        let cube = st.add_cube(Cube::standard(0, pos, o, color));
        st.bind_spider(s, cube);
        let mut pending = 0;
        for &k in &info.conns {
            if st.conn_done(k) {
                continue;
            }
            let c = &self.sched.conns[k];
            let other = c.other(End::Spider(s));
            let from = if other == End::Spider(s) {
                Some(cube)
            } else {
                self.end_cube(st, other)
            };
            let Some(from) = from else {
                pending += 1;
                continue;
            };
            let Some(r) = st.route_connection(from, Target::Cube(cube), c.hadamard) else {
                return false;
            };
            st.apply_route(&r);
            st.mark_conn(k);
            if from != cube {
                let left = st.pending(from).saturating_sub(1);
                st.set_pending(from, left);
                if !Self::repair(st, from) {
                    return false;
                }
            }
        }
        for &leaf in &info.leaves {
            if !st.place_leaf(cube, leaf, &LEAF_ORDER, (1, i32::MAX)) {
                return false;
            }
        }
        let (mut free, mut plain) = (Vec::new(), Vec::new());
        for d in Dir::ORDER {
            let p = d.step(pos);
            if d.axis == o || p[2] < 1 {
                continue;
            }
            if st.chimney_free(p) {
                free.push(p);
            } else if st.cell(p) == Cell::Free {
                plain.push(p);
            }
        }
        if free.len() + plain.len() < pending {
            return false;
        }
        let hints = self.hints(st, s, pos);
        free.sort_by_key(|&p| Self::hint_cost(&hints, p));
        plain.sort_by_key(|&p| Self::hint_cost(&hints, p));
        st.set_pending(cube, pending);
        for &p in free.iter().take(pending) {
            st.reserve_chimney(cube, p);
        }
        for &p in plain.iter().take(pending.saturating_sub(free.len())) {
            st.reserve(cube, p);
        }
        st.reservations_escape()
    }

    /// Replace reservations of `owner` that routes have cut through with
    /// fresh ones on free faces; false when no face is left.
    fn repair(st: &mut EmbeddingState, owner: usize) -> bool {
        loop {
            let Some(i) = st
                .reservations(owner)
                .iter()
                .position(|&p| !st.intact(owner, p))
            else {
                return true;
            };
            st.release(owner, i);
            let c = st.cube(owner).clone();
            let faces: Vec<Pos> = Dir::ORDER
                .iter()
                .filter(|d| c.orientation.is_none_or(|o| d.axis != o))
                .map(|d| d.step(c.pos))
                .filter(|&p| p[2] >= 1)
                .collect();
            if let Some(&p) = faces.iter().find(|&&p| st.chimney_free(p)) {
                st.reserve_chimney(owner, p);
            } else if let Some(&p) = faces.iter().find(|&&p| st.cell(p) == Cell::Free) {
                st.reserve(owner, p);
            } else {
                return false;
            }
        }
    }

    /// Every valid successor state of placing `s`.
    pub fn expand_spider(
        &self,
        st: &EmbeddingState,
        s: usize,
        placement_opt: bool,
    ) -> Vec<EmbeddingState> {
        let mut out = Vec::new();
        for a in self.candidates(st, s, placement_opt) {
            let mut next = st.clone();
            if self.place(&mut next, s, a) {
                out.push(next);
            }
        }
        out
    }

    /// Extra positions for the fallback pass: fresh heights above the
    /// current top, over each placed neighbour and over every anchor.
    fn lifted(&self, st: &EmbeddingState, s: usize) -> Vec<Action> {
        let mut cols: Vec<[i32; 2]> = Vec::new();
        for (c, _) in self.placed_neighbours(st, s) {
            let p = st.cube(c).pos;
            cols.push([p[0], p[1]]);
        }
        cols.extend((0..self.num_qubits).map(|q| Self::anchor(self.cfg, q)));
        let mut out = Vec::new();
        for dz in 1..=3 {
            let z = st.top_z() + dz;
            for &[x, y] in &cols {
                if st.cell([x, y, z]) == Cell::Free {
                    out.extend([Axis::X, Axis::Y].iter().map(|&o| ([x, y, z], o)));
                }
            }
        }
        out
    }

    /// Among the first `limit` valid candidates, the one adding the fewest
    /// cubes, then the smallest volume; earlier candidates win ties.
    fn cheapest(
        &self,
        st: &mut EmbeddingState,
        s: usize,
        cands: &[Action],
        limit: usize,
    ) -> Option<Action> {
        let n0 = st.partial.cubes.len();
        let mut best: Option<((usize, u64), Action)> = None;
        let mut valid = 0;
        for &a in cands {
            if valid == limit {
                break;
            }
            let cp = st.checkpoint();
            if self.place(st, s, a) {
                valid += 1;
                let key = (st.partial.cubes.len() - n0, st.volume());
                if best.is_none_or(|(k, _)| key < k) {
                    best = Some((key, a));
                }
            }
            st.rollback(cp);
        }
        best.map(|(_, a)| a)
    }

    /// Greedy completion: each spider takes its first valid candidate, or
    /// the cheapest one in the relaxed pass.
    fn greedy(
        &self,
        st: &mut EmbeddingState,
        remaining: &[usize],
        relaxed: bool,
    ) -> Option<Vec<Action>> {
        let mut actions = Vec::new();
        for &s in remaining {
            let mut cands = self.candidates(st, s, relaxed || self.cfg.placement_opt);
            let a = if relaxed {
                cands.extend(self.lifted(st, s));
                let a = self.cheapest(st, s, &cands, RELAXED_CHOICES)?;
                self.place(st, s, a);
                a
            } else {
                cands.into_iter().find(|&a| self.place(st, s, a))?
            };
            actions.push(a);
        }
        Some(actions)
    }

    /// Complete the layer with the fixed rule; the negated volume of the
    /// result, or −∞ when a spider cannot be placed.
    pub fn rollout(&self, st: &mut EmbeddingState, remaining: &[usize]) -> f64 {
        match self.greedy(st, remaining, false) {
            Some(_) => -(st.volume() as f64),
            None => f64::NEG_INFINITY,
        }
    }

    /// One MCTS run over `order`; the best complete embedding it saw.
    fn search(
        &self,
        st: &mut EmbeddingState,
        order: &[usize],
        stats: &mut SearchStats,
    ) -> Option<Best> {
        let root_cp = st.checkpoint();
        let deadline = Instant::now() + Duration::from_millis(self.cfg.timeout_ms);
        let mut nodes = vec![Node::new(None, usize::MAX)];
        let mut best: Option<Best> = None;
        let mut scale: Option<f64> = None;
        let n = order.len();
        for it in 0..self.cfg.iterations {
            if nodes[0].exhausted || (it > 0 && Instant::now() >= deadline) {
                break;
            }
            stats.iterations += 1;
            st.rollback(root_cp);
            let mut path = vec![0usize];
            let mut actions: Vec<Action> = Vec::new();
            let mut node = 0;
            let mut expanded = false;
            let mut dead = false;
            let mut stuck = false;
            while actions.len() < n && !expanded {
                let s = order[actions.len()];
                if nodes[node].untried.is_none() {
                    let mut c = self.candidates(st, s, self.cfg.placement_opt);
                    c.reverse();
                    nodes[node].untried = Some(c);
                }
                if let Some(a) = self.pop_valid(st, s, &mut nodes[node]) {
                    let child = nodes.len();
                    nodes.push(Node::new(Some(a), node));
                    nodes[node].children.push(child);
                    node = child;
                    path.push(node);
                    actions.push(a);
                    expanded = true;
                    continue;
                }
                let parent_visits = nodes[node].visits;
                let pick = nodes[node]
                    .children
                    .iter()
                    .copied()
                    .filter(|&c| !nodes[c].exhausted)
                    .map(|c| {
                        (
                            uct_score(
                                nodes[c].reward,
                                nodes[c].visits,
                                parent_visits,
                                self.cfg.exploration_c,
                            ),
                            c,
                        )
                    })
                    .fold(None, |acc: Option<(f64, usize)>, x| match acc {
                        Some(b) if b.0 >= x.0 => Some(b),
                        _ => Some(x),
                    });
                let Some((_, child)) = pick else {
                    dead = nodes[node].children.is_empty();
                    stuck = !dead;
                    break;
                };
                let a = nodes[child].action.expect("child action");
                if !self.place(st, s, a) {
                    nodes[child].exhausted = true;
                    dead = true;
                    break;
                }
                node = child;
                path.push(node);
                actions.push(a);
            }

            if stuck {
                self.mark_exhausted(&mut nodes, node);
                continue;
            }
            let reward = if dead {
                self.mark_exhausted(&mut nodes, node);
                FAIL_REWARD
            } else {
                if actions.len() == n {
                    self.mark_exhausted(&mut nodes, node);
                }
                let rest = &order[actions.len()..];
                match self.greedy(st, rest, false) {
                    Some(tail) => {
                        let v = st.volume();
                        let cand = Best {
                            volume: v,
                            cubes: st.partial.cubes.len(),
                            order: order.to_vec(),
                            actions: actions.iter().copied().chain(tail).collect(),
                        };
                        if best.as_ref().is_none_or(|b| cand.key() < b.key()) {
                            best = Some(cand);
                        }
                        let scale = *scale.get_or_insert((v as f64).max(1.0));
                        stats.trace.push(best.as_ref().map_or(v, |b| b.volume));
                        -(v as f64) / scale
                    }
                    None => FAIL_REWARD,
                }
            };
            for &p in &path {
                nodes[p].visits += 1;
                nodes[p].reward += reward;
            }
            if !dead && nodes[node].untried.as_ref().is_some_and(Vec::is_empty) {
                self.refresh_exhausted(&mut nodes, node);
            }
        }
        st.rollback(root_cp);
        if let Some(b) = &best {
            stats.best_volume = Some(stats.best_volume.map_or(b.volume, |v| v.min(b.volume)));
        }
        best
    }

    /// Pop candidates until one places; the state keeps that placement.
    fn pop_valid(&self, st: &mut EmbeddingState, s: usize, node: &mut Node) -> Option<Action> {
        let untried = node.untried.as_mut().expect("generated");
        while let Some(a) = untried.pop() {
            if self.place(st, s, a) {
                return Some(a);
            }
        }
        None
    }

    fn mark_exhausted(&self, nodes: &mut [Node], n: usize) {
        nodes[n].exhausted = true;
        if n != 0 {
            self.refresh_exhausted(nodes, nodes[n].parent);
        }
    }

    fn refresh_exhausted(&self, nodes: &mut [Node], mut n: usize) {
        loop {
            let done = nodes[n].untried.as_ref().is_some_and(Vec::is_empty)
                && nodes[n].children.iter().all(|&c| nodes[c].exhausted);
            if !done {
                return;
            }
            nodes[n].exhausted = true;
            if n == 0 {
                return;
            }
            n = nodes[n].parent;
        }
    }

    /// Embed the not-yet-placed spiders of layer `l` (1-based), keeping
    /// the smallest result over the configured number of seeded searches.
    pub fn embed_layer_mcts(&self, st: &mut EmbeddingState, l: usize) -> Option<SearchStats> {
        let spiders: Vec<usize> = self
            .sched
            .layer(l)
            .spiders
            .iter()
            .copied()
            .filter(|&s| st.cube_of(s).is_none())
            .collect();
        st.current_layer = l;
        let mut stats = SearchStats::default();
        if spiders.is_empty() {
            return Some(stats);
        }
        let orders: Vec<Vec<usize>> = (0..self.cfg.seeds_per_layer)
            .map(|k| {
                let seed = self.cfg.rng_seed
                    ^ ((l as u64) << 20)
                    ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut o = spiders.clone();
                o.shuffle(&mut rng);
                o
            })
            .collect();
        let results: Vec<(Option<Best>, SearchStats)> = if self.cfg.threads > 1 && orders.len() > 1
        {
            std::thread::scope(|scope| {
                let handles: Vec<_> = orders
                    .iter()
                    .map(|o| {
                        let mut local = st.clone();
                        scope.spawn(move || {
                            let mut s = SearchStats::default();
                            let b = self.search(&mut local, o, &mut s);
                            (b, s)
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("search thread"))
                    .collect()
            })
        } else {
            orders
                .iter()
                .map(|o| {
                    let mut s = SearchStats::default();
                    let b = self.search(st, o, &mut s);
                    (b, s)
                })
                .collect()
        };
        let mut best: Option<Best> = None;
        for (b, s) in results {
            stats.iterations += s.iterations;
            stats.trace.extend(s.trace);
            if let Some(b) = b {
                if best.as_ref().is_none_or(|x| b.key() < x.key()) {
                    best = Some(b);
                }
            }
        }
        let best = best?;
        stats.best_volume = Some(best.volume);
        for (&s, &a) in best.order.iter().zip(&best.actions) {
            let ok = self.place(st, s, a);
            debug_assert!(ok, "best embedding must replay");
        }
        st.commit();
        Some(stats)
    }

    /// Greedy pass over layer `l` with every placement direction allowed.
    pub fn embed_layer_relaxed(&self, st: &mut EmbeddingState, l: usize) -> bool {
        let spiders: Vec<usize> = self
            .sched
            .layer(l)
            .spiders
            .iter()
            .copied()
            .filter(|&s| st.cube_of(s).is_none())
            .collect();
        let cp = st.checkpoint();
        if self.greedy(st, &spiders, true).is_some() {
            st.commit();
            true
        } else {
            st.rollback(cp);
            false
        }
    }

    /// Spiders of layer `l` still holding connections into later layers.
    pub fn placeholder_count(&self, st: &EmbeddingState, l: usize) -> usize {
        self.sched
            .layer(l)
            .spiders
            .iter()
            .filter(|&&s| {
                self.info(s).conns.iter().any(|&k| {
                    !st.conn_done(k)
                        && matches!(self.sched.conns[k].other(End::Spider(s)), End::Spider(_))
                })
            })
            .count()
    }

    /// Route outputs and idle wires to a port plane above everything else.
    pub fn finish(&self, st: &mut EmbeddingState) -> Result<()> {
        let mut outputs: Vec<(usize, usize, bool)> = Vec::new();
        for (k, c) in self.sched.conns.iter().enumerate() {
            if self.sched.idle_wires.contains(&k) {
                continue;
            }
            for (e, f) in [(c.a, c.b), (c.b, c.a)] {
                if let End::Output(q) = e {
                    let from = self.end_cube(st, f).ok_or_else(|| {
                        Error::Embed(format!("output {q} hangs off an unplaced spider"))
                    })?;
                    outputs.push((q, from, c.hadamard));
                }
            }
        }
        outputs.sort_unstable();
        let num_out = self.sched.diagram.outputs.len();
        let mut z_out = (st.top_z() + 1).max(2);
        let base = st.checkpoint();
        for _ in 0..4 {
            // a failed output moves to the front and the plane is retried
            for _ in 0..8 {
                let mut ports = vec![usize::MAX; num_out];
                let mut failed = None;
                for (i, &(q, from, h)) in outputs.iter().enumerate() {
                    match st.route_connection(from, Target::Plane(z_out), h) {
                        Some(r) => {
                            ports[q] = st.apply_route(&r).expect("plane route ends in a port");
                            let left = st.pending(from).saturating_sub(1);
                            st.set_pending(from, left);
                        }
                        None => {
                            failed = Some(i);
                            break;
                        }
                    }
                }
                match failed {
                    None => {
                        for &k in &self.sched.idle_wires {
                            let c = &self.sched.conns[k];
                            let (q_in, q_out) = match (c.a, c.b) {
                                (End::Input(i), End::Output(o))
                                | (End::Output(o), End::Input(i)) => (i, o),
                                _ => continue,
                            };
                            ports[q_out] = self.idle_column(st, q_in, z_out, c.hadamard);
                        }
                        st.partial.outputs = ports;
                        st.commit();
                        return Ok(());
                    }
                    Some(0) => {
                        st.rollback(base);
                        break;
                    }
                    Some(i) => {
                        st.rollback(base);
                        let o = outputs.remove(i);
                        outputs.insert(0, o);
                    }
                }
            }
            z_out += 1;
        }
        Err(Error::Embed("could not route the outputs".into()))
    }

    fn idle_column(&self, st: &mut EmbeddingState, q: usize, z_out: i32, hadamard: bool) -> usize {
        debug_assert!(self.idle_inputs[q]);
        let [x, y] = Self::anchor(self.cfg, q);
        st.grid.unblock_column([x, y]);
        let mut prev = self.input_cubes[q];
        let mut blue = Axis::X;
        for z in 1..=z_out {
            let cube = if z == z_out {
                Cube::plain(0, [x, y, z], CubeKind::BoundaryPort)
            } else if hadamard && z == 1 {
                Cube::plain(0, [x, y, z], CubeKind::Hadamard)
            } else {
                Cube::standard(0, [x, y, z], blue, Color::Blue)
            };
            let h = cube.kind == CubeKind::Hadamard;
            let id = st.add_cube(cube);
            st.connect(prev, id, blue);
            if h {
                blue = Axis::Y;
            }
            prev = id;
        }
        prev
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Circuit, Gate, GateKind};
    use crate::pipe::validate_pipe_diagram;
    use crate::schedule::partition_program;

    #[test]
    fn uct_formula() {
        let v = uct_score(-10.0, 2, 4, std::f64::consts::SQRT_2);
        assert!((v - (-5.0 + (4f64.ln() / 2.0).sqrt() * std::f64::consts::SQRT_2)).abs() < 1e-12);
        assert!((v + 3.8226).abs() < 1e-3);
        assert_eq!(uct_score(0.0, 0, 3, 1.0), f64::INFINITY);
        assert_eq!(uct_score(-7.0, 2, 9, 0.0), -3.5);
    }

    fn setup(c: &Circuit) -> (SliceSchedule, CompileConfig) {
        let cfg = CompileConfig {
            grid: (2, 2),
            ..CompileConfig::default()
        };
        (partition_program(c, &cfg.partition).unwrap(), cfg)
    }

    #[test]
    fn forced_placement_has_one_candidate() {
        let c = Circuit::with_gates(1, vec![Gate::single(GateKind::T, 0)]).unwrap();
        let (sched, mut cfg) = setup(&c);
        cfg.placement_opt = false;
        let (e, st) = Embedder::new(&sched, &cfg, 1).unwrap();
        let s = sched.layer(1).spiders[0];
        let cells: Vec<Pos> = e.candidates(&st, s, false).iter().map(|a| a.0).collect();
        assert_eq!(cells, vec![[0, 0, 1]; 3]);
        let next = e.expand_spider(&st, s, false);
        assert!(!next.is_empty());
        for n in &next {
            assert!(validate_pipe_diagram(&n.partial)
                .iter()
                .all(|v| matches!(v, crate::pipe::Violation::PortList { .. })));
        }
    }

    #[test]
    fn blocked_spider_has_no_successor() {
        let c = Circuit::with_gates(1, vec![Gate::single(GateKind::T, 0)]).unwrap();
        let (sched, cfg) = setup(&c);
        let (e, mut st) = Embedder::new(&sched, &cfg, 1).unwrap();
        for d in Dir::ORDER {
            let p = d.step([0, 0, 0]);
            if st.grid.contains(p) {
                st.set_cell(p, Cell::Blocked);
            }
        }
        let s = sched.layer(1).spiders[0];
        assert!(e.expand_spider(&st, s, true).is_empty());
        let mut probe = st.clone();
        assert_eq!(e.rollout(&mut probe, &[s]), f64::NEG_INFINITY);
        assert!(e.embed_layer_mcts(&mut st, 1).is_none());
    }

    #[test]
    fn rollout_reward_is_negative_volume() {
        let c = Circuit::with_gates(2, vec![Gate::cnot(0, 1)]).unwrap();
        let (sched, cfg) = setup(&c);
        let (e, st) = Embedder::new(&sched, &cfg, 2).unwrap();
        let mut probe = st.clone();
        assert_eq!(e.rollout(&mut probe, &[]), -(probe.volume() as f64));
        let r = e.rollout(&mut probe, &sched.layer(1).spiders);
        assert!(r.is_finite());
        let scan = crate::pipe::BoundingBox::of(
            probe
                .partial
                .cubes
                .iter()
                .filter(|c| c.kind != CubeKind::BoundaryPort)
                .map(|c| &c.pos),
        )
        .unwrap()
        .volume();
        assert_eq!(r, -(scan as f64));
    }

    #[test]
    fn single_spider_layer_matches_rollout() {
        let c = Circuit::with_gates(1, vec![Gate::single(GateKind::S, 0)]).unwrap();
        let (sched, cfg) = setup(&c);
        let (e, st) = Embedder::new(&sched, &cfg, 1).unwrap();
        let s = sched.layer(1).spiders[0];
        let mut a = st.clone();
        let r = e.rollout(&mut a, &[s]);
        let mut b = st.clone();
        let stats = e.embed_layer_mcts(&mut b, 1).unwrap();
        assert!(-(stats.best_volume.unwrap() as f64) >= r);
    }

    #[test]
    fn best_volume_never_increases() {
        let c = crate::circuit::random_circuit(4, 12, 5);
        let cfg = CompileConfig {
            grid: (2, 2),
            ..CompileConfig::default()
        };
        let sched = partition_program(&c, &cfg.partition).unwrap();
        let (e, mut st) = Embedder::new(&sched, &cfg, 4).unwrap();
        for l in 1..=sched.num_layers() {
            let stats = e.embed_layer_mcts(&mut st, l).unwrap();
            let per_seed_monotone =
                stats.trace.windows(2).filter(|w| w[1] > w[0]).count() < cfg.seeds_per_layer;
            assert!(per_seed_monotone);
        }
    }
}
