use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::state::{identity_cube, next_blue, perpendicular, Cell, EmbeddingState};
use crate::pipe::{Axis, Cube, CubeKind, Dir, Pos};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    Cube(usize),
    /// Any free cell of the plane `z`, where a boundary port is placed.
    Plane(i32),
}

/// A routed connection: `cells` become new cubes in order, `blues[i]` is
/// the blue axis of the pipe entering position `i` (the last entry leads
/// into the target cube).
#[derive(Clone, Debug, PartialEq)]
pub struct Route {
    pub from: usize,
    pub target: Target,
    pub cells: Vec<Pos>,
    pub blues: Vec<Axis>,
    pub hadamard_at: Option<usize>,
}

impl Route {
    /// Cubes this route adds, the port included.
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Inclusive search region.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Region {
    pub min: Pos,
    pub max: Pos,
}

impl Region {
    fn contains(&self, p: Pos) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    fn dims(&self) -> [usize; 3] {
        [0, 1, 2].map(|i| (self.max[i] - self.min[i] + 1).max(0) as usize)
    }

    fn index(&self, p: Pos) -> usize {
        let d = self.dims();
        let r = [0, 1, 2].map(|i| (p[i] - self.min[i]) as usize);
        (r[2] * d[1] + r[1]) * d[0] + r[0]
    }

    fn pos(&self, i: usize) -> Pos {
        let d = self.dims();
        [
            self.min[0] + (i % d[0]) as i32,
            self.min[1] + (i / d[0] % d[1]) as i32,
            self.min[2] + (i / (d[0] * d[1])) as i32,
        ]
    }
}

const PENALTY: u32 = 3;

fn state_index(cell: usize, d: Dir, blue: Axis, h: bool) -> usize {
    let b = usize::from(perpendicular(d.axis)[1] == blue);
    ((cell * 6 + d.index()) * 2 + b) * 2 + usize::from(h)
}

fn decode(i: usize) -> (usize, Dir, usize, bool) {
    (i / 24, Dir::from_index(i / 4 % 6), i / 2 % 2, i % 2 == 1)
}

/// Search labels reused across calls; an entry counts only when its stamp
/// matches the current generation.
#[derive(Default)]
struct Scratch {
    g: Vec<u32>,
    parent: Vec<usize>,
    stamp: Vec<u32>,
    generation: u32,
}

impl Scratch {
    fn reset(&mut self, n: usize) {
        if self.stamp.len() < n {
            self.g.resize(n, 0);
            self.parent.resize(n, 0);
            self.stamp.resize(n, 0);
        }
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.stamp.fill(0);
            self.generation = 1;
        }
    }

    fn g(&self, i: usize) -> u32 {
        if self.stamp[i] == self.generation {
            self.g[i]
        } else {
            u32::MAX
        }
    }

    fn parent(&self, i: usize) -> usize {
        if self.stamp[i] == self.generation {
            self.parent[i]
        } else {
            usize::MAX
        }
    }

    fn set(&mut self, i: usize, g: u32, parent: usize) {
        self.stamp[i] = self.generation;
        self.g[i] = g;
        self.parent[i] = parent;
    }

    /// Cells of the path ending in state `s`, the last one included.
    fn path_cells(&self, mut s: usize, out: &mut Vec<usize>) {
        out.clear();
        loop {
            out.push(s / 24);
            match self.parent(s) {
                usize::MAX => return,
                p => s = p / 2,
            }
        }
    }
}

thread_local! {
    static SCRATCH: std::cell::RefCell<Scratch> = std::cell::RefCell::new(Scratch::default());
}

pub(crate) fn manhattan(a: Pos, b: Pos) -> u32 {
    (0..3).map(|i| (a[i] - b[i]).unsigned_abs()).sum()
}

struct Goal {
    cost: u32,
    /// Last path state, or `None` for a direct pipe.
    last: Option<usize>,
    blue: Axis,
    h_here: bool,
    port: Option<Pos>,
}

impl EmbeddingState {
    /// Shortest frame-consistent path from cube `from` to `target` inside
    /// `region`, with exactly one Hadamard on it when `hadamard` is set.
    /// Cells above `top` cost extra. Cells must be free or reserved for
    /// `from`.
    pub fn find_route(
        &self,
        from: usize,
        target: Target,
        hadamard: bool,
        region: Region,
        top: i32,
    ) -> Option<Route> {
        let src = self.cube(from).clone();
        let goal_ok = |d: Dir, blue: Axis, h: bool, t: &Cube| -> bool {
            if h != hadamard {
                return false;
            }
            match (t.orientation, t.color) {
                (Some(o), Some(c)) => d.axis != o && blue == super::state::blue_for(d.axis, o, c),
                _ => true,
            }
        };
        let tgt_cube = match target {
            Target::Cube(t) => Some(self.cube(t).clone()),
            Target::Plane(_) => None,
        };
        let step_cost = |p: Pos| 1 + if p[2] > top { PENALTY } else { 0 };
        let heur = |p: Pos| -> u32 {
            match (&tgt_cube, target) {
                (Some(t), _) => manhattan(p, t.pos).saturating_sub(1),
                (None, Target::Plane(z)) => (z - p[2]).unsigned_abs(),
                _ => 0,
            }
        };
        let open =
            |p: Pos| matches!(self.cell(p), Cell::Free) || self.cell(p) == Cell::Reserved(from);
        let plane_ok =
            |p: Pos, z: i32| p[2] == z && open(p) && region.contains([p[0], p[1], region.min[2]]);

        let dims = region.dims();
        let ncells = dims[0] * dims[1] * dims[2];
        SCRATCH.with_borrow_mut(|sc| {
            sc.reset(ncells * 24);
            let mut heap = BinaryHeap::new();
            let mut seq = 0u64;
            let mut on_path = Vec::new();
            let mut best: Option<Goal> = None;
            let offer = |best: &mut Option<Goal>, goal: Goal| {
                if best.as_ref().is_none_or(|b| goal.cost < b.cost) {
                    *best = Some(goal);
                }
            };

            for (d, blues) in self.exits(from) {
                let n = d.step(src.pos);
                for &b in &blues {
                    match (&tgt_cube, target) {
                        (Some(t), Target::Cube(tid)) if n == t.pos => {
                            if tid != from
                                && !self.is_connected(from, tid)
                                && goal_ok(d, b, false, t)
                            {
                                offer(
                                    &mut best,
                                    Goal {
                                        cost: 0,
                                        last: None,
                                        blue: b,
                                        h_here: false,
                                        port: None,
                                    },
                                );
                            }
                            continue;
                        }
                        (None, Target::Plane(z)) if n[2] == z => {
                            if !hadamard && open(n) && region.contains([n[0], n[1], region.min[2]])
                            {
                                offer(
                                    &mut best,
                                    Goal {
                                        cost: 1,
                                        last: None,
                                        blue: b,
                                        h_here: false,
                                        port: Some(n),
                                    },
                                );
                            }
                            continue;
                        }
                        _ => {}
                    }
                    if !region.contains(n) || !open(n) {
                        continue;
                    }
                    let s = state_index(region.index(n), d, b, false);
                    let c = step_cost(n);
                    if c < sc.g(s) {
                        sc.set(s, c, usize::MAX);
                        heap.push(Reverse((c + heur(n), seq, s)));
                        seq += 1;
                    }
                }
            }

            while let Some(Reverse((f, _, s))) = heap.pop() {
                if best.as_ref().is_some_and(|b| b.cost <= f) {
                    break;
                }
                let (ci, din, bbit, h) = decode(s);
                let gs = sc.g(s);
                if f != gs + heur(region.pos(ci)) {
                    continue;
                }
                let p = region.pos(ci);
                let bin = perpendicular(din.axis)[bbit];
                sc.path_cells(s, &mut on_path);
                for dout in Dir::ORDER {
                    if dout == din.rev() {
                        continue;
                    }
                    let n = dout.step(p);
                    for hk in [false, true] {
                        if hk && (!hadamard || h) {
                            continue;
                        }
                        let bout = next_blue(din.axis, dout.axis, bin, hk);
                        let h2 = h || hk;
                        match (&tgt_cube, target) {
                            (Some(t), _) if n == t.pos => {
                                if goal_ok(dout, bout, h2, t) {
                                    offer(
                                        &mut best,
                                        Goal {
                                            cost: gs,
                                            last: Some(s),
                                            blue: bout,
                                            h_here: hk,
                                            port: None,
                                        },
                                    );
                                }
                                continue;
                            }
                            (None, Target::Plane(z)) if n[2] == z => {
                                if h2 == hadamard && plane_ok(n, z) {
                                    let cost = gs + 1;
                                    offer(
                                        &mut best,
                                        Goal {
                                            cost,
                                            last: Some(s),
                                            blue: bout,
                                            h_here: hk,
                                            port: Some(n),
                                        },
                                    );
                                }
                                continue;
                            }
                            _ => {}
                        }
                        if !region.contains(n) || !open(n) {
                            continue;
                        }
                        let ni = region.index(n);
                        if on_path.contains(&ni) {
                            continue;
                        }
                        let ns = state_index(ni, dout, bout, h2);
                        let c = gs + step_cost(n);
                        if c < sc.g(ns) {
                            sc.set(ns, c, s * 2 + usize::from(hk));
                            heap.push(Reverse((c + heur(n), seq, ns)));
                            seq += 1;
                        }
                    }
                }
            }

            let goal = best?;
            let mut cells = Vec::new();
            let mut blues = Vec::new();
            let mut hadamard_at = None;
            let mut h_flags = Vec::new();
            let mut cur = goal.last;
            let mut h_next = goal.h_here;
            while let Some(s) = cur {
                let (ci, d, bbit, _) = decode(s);
                cells.push(region.pos(ci));
                blues.push(perpendicular(d.axis)[bbit]);
                h_flags.push(h_next);
                let par = sc.parent(s);
                if par == usize::MAX {
                    cur = None;
                } else {
                    h_next = par % 2 == 1;
                    cur = Some(par / 2);
                }
            }
            cells.reverse();
            blues.reverse();
            h_flags.reverse();
            if let Some(i) = h_flags.iter().position(|&x| x) {
                hadamard_at = Some(i);
            }
            blues.push(goal.blue);
            if let Some(port) = goal.port {
                cells.push(port);
            }
            Some(Route {
                from,
                target,
                cells,
                blues,
                hadamard_at,
            })
        })
    }

    /// Materialise `r`, returning the port cube for plane targets.
    pub fn apply_route(&mut self, r: &Route) -> Option<usize> {
        let mut prev = r.from;
        let mut port = None;
        let n_inner = match r.target {
            Target::Cube(_) => r.cells.len(),
            Target::Plane(_) => r.cells.len() - 1,
        };
        let dir_of = |a: Pos, b: Pos| Dir::between(a, b).expect("route cells are adjacent").axis;
        let mut prev_pos = self.cube(r.from).pos;
        for (i, &p) in r.cells.iter().enumerate() {
            let d1 = dir_of(prev_pos, p);
            let cube = if i >= n_inner {
                Cube::plain(0, p, CubeKind::BoundaryPort)
            } else if r.hadamard_at == Some(i) {
                Cube::plain(0, p, CubeKind::Hadamard)
            } else {
                let next = r
                    .cells
                    .get(i + 1)
                    .copied()
                    .unwrap_or_else(|| match r.target {
                        Target::Cube(t) => self.cube(t).pos,
                        Target::Plane(_) => unreachable!(),
                    });
                let (o, c) = identity_cube(d1, dir_of(p, next), r.blues[i]);
                Cube::standard(0, p, o, c)
            };
            let id = self.add_cube(cube);
            self.connect(prev, id, r.blues[i]);
            if i >= n_inner {
                port = Some(id);
            }
            prev = id;
            prev_pos = p;
        }
        if let Target::Cube(t) = r.target {
            self.connect(prev, t, r.blues[r.cells.len()]);
        }
        port
    }

    /// Search region spanning both endpoints plus `margin`, clipped to the
    /// grid and to z in `[1, zmax]`.
    pub fn region_around(&self, a: Pos, b: Pos, margin: i32, zmax: i32) -> Region {
        let gmax = self.grid.max();
        let mut min = [0; 3];
        let mut max = [0; 3];
        for i in 0..2 {
            min[i] = (a[i].min(b[i]) - margin).max(self.grid.min[i]);
            max[i] = (a[i].max(b[i]) + margin).min(gmax[i]);
        }
        min[2] = (a[2].min(b[2]) - margin).max(1);
        max[2] = zmax;
        Region { min, max }
    }

    /// Cell-level flood fill ignoring frames: a necessary condition for
    /// `find_route` to succeed inside `region`.
    fn reachable(&self, from: usize, target: Target, region: Region) -> bool {
        let free = |p: Pos| {
            let c = self.cell(p);
            c == Cell::Free || c == Cell::Reserved(from)
        };
        let open = |p: Pos| region.contains(p) && free(p);
        let src = self.cube(from).pos;
        let entry: Vec<Pos> = match target {
            Target::Cube(t) => {
                let c = self.cube(t);
                let faces: Vec<Pos> = Dir::ORDER
                    .iter()
                    .filter(|d| c.orientation.is_none_or(|o| d.axis != o))
                    .map(|d| d.step(c.pos))
                    .collect();
                if faces.contains(&src) {
                    return true;
                }
                faces
            }
            Target::Plane(_) => Vec::new(),
        };
        let done = |p: Pos| match target {
            Target::Cube(_) => entry.contains(&p),
            Target::Plane(z) => p[2] == z - 1 && free([p[0], p[1], z]),
        };
        let dims = region.dims();
        let mut seen = vec![false; dims[0] * dims[1] * dims[2]];
        let mut stack = Vec::new();
        for (d, _) in self.exits(from) {
            let n = d.step(src);
            if let Target::Plane(z) = target {
                if n[2] == z && free(n) {
                    return true;
                }
            }
            if region.contains(n) && open(n) {
                seen[region.index(n)] = true;
                stack.push(n);
            }
        }
        while let Some(p) = stack.pop() {
            if done(p) {
                return true;
            }
            for d in Dir::ORDER {
                let n = d.step(p);
                if region.contains(n) && open(n) && !seen[region.index(n)] {
                    seen[region.index(n)] = true;
                    stack.push(n);
                }
            }
        }
        false
    }

    /// Route with a tight region first and the whole footprint second.
    pub fn route_connection(&self, from: usize, target: Target, hadamard: bool) -> Option<Route> {
        let a = self.cube(from).pos;
        let (b, zmax) = match target {
            Target::Cube(t) => {
                let b = self.cube(t).pos;
                (b, self.top_z().max(a[2]).max(b[2]) + 1)
            }
            Target::Plane(z) => ([a[0], a[1], z], z - 1),
        };
        let top = self.top_z().max(a[2]).max(b[2]);
        let gmax = self.grid.max();
        let wide = Region {
            min: [self.grid.min[0], self.grid.min[1], 1],
            max: [gmax[0], gmax[1], zmax],
        };
        if !self.reachable(from, target, wide) {
            return None;
        }
        let tight = self.region_around(a, b, 2, zmax);
        if let Some(r) = self.find_route(from, target, hadamard, tight, top) {
            return Some(r);
        }
        if wide == tight {
            return None;
        }
        self.find_route(from, target, hadamard, wide, top)
    }
}
