use std::f64::consts::FRAC_PI_2;

use crate::pipe::{Axis, BoundingBox, Color, Cube, CubeKind, Dir, PipeDiagram, Pos};
use crate::zx::normalize_phase;

/// Occupancy of one lattice cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cell {
    Free,
    Cube(usize),
    /// Held for a pending connection of the given cube.
    Reserved(usize),
    Blocked,
}

/// Dense occupancy over a fixed x/y footprint, growing upward in z.
#[derive(Clone, Debug)]
pub(crate) struct Grid {
    pub min: [i32; 2],
    pub nx: usize,
    pub ny: usize,
    cells: Vec<Cell>,
    /// Columns held for idle wires above the input plane.
    columns: Vec<bool>,
    /// Columns held for a cube's pending connection from a height upward.
    chimneys: Vec<Option<(usize, i32)>>,
}

impl Grid {
    pub fn new(min: [i32; 2], nx: usize, ny: usize) -> Self {
        Grid {
            min,
            nx,
            ny,
            cells: Vec::new(),
            columns: vec![false; nx * ny],
            chimneys: vec![None; nx * ny],
        }
    }

    fn column(&self, xy: [i32; 2]) -> usize {
        (xy[1] - self.min[1]) as usize * self.nx + (xy[0] - self.min[0]) as usize
    }

    pub fn block_column(&mut self, xy: [i32; 2]) {
        let i = self.column(xy);
        self.columns[i] = true;
    }

    pub fn unblock_column(&mut self, xy: [i32; 2]) {
        let i = self.column(xy);
        self.columns[i] = false;
    }

    pub fn max(&self) -> [i32; 2] {
        [
            self.min[0] + self.nx as i32 - 1,
            self.min[1] + self.ny as i32 - 1,
        ]
    }

    pub fn contains(&self, p: Pos) -> bool {
        let (x, y) = (p[0] - self.min[0], p[1] - self.min[1]);
        p[2] >= 0 && x >= 0 && y >= 0 && (x as usize) < self.nx && (y as usize) < self.ny
    }

    fn index(&self, p: Pos) -> usize {
        let (x, y) = ((p[0] - self.min[0]) as usize, (p[1] - self.min[1]) as usize);
        (p[2] as usize * self.ny + y) * self.nx + x
    }

    pub fn get(&self, p: Pos) -> Cell {
        if !self.contains(p) || (p[2] >= 1 && self.columns[self.column([p[0], p[1]])]) {
            return Cell::Blocked;
        }
        match self.cells.get(self.index(p)).copied().unwrap_or(Cell::Free) {
            Cell::Free => match self.chimneys[self.column([p[0], p[1]])] {
                Some((o, z0)) if p[2] >= z0 => Cell::Reserved(o),
                _ => Cell::Free,
            },
            c => c,
        }
    }

    fn raw(&self, p: Pos) -> Cell {
        self.cells.get(self.index(p)).copied().unwrap_or(Cell::Free)
    }

    pub(crate) fn chimney(&self, xy: [i32; 2]) -> Option<(usize, i32)> {
        self.chimneys[self.column(xy)]
    }

    fn set_chimney(&mut self, xy: [i32; 2], v: Option<(usize, i32)>) {
        let i = self.column(xy);
        self.chimneys[i] = v;
    }

    fn set(&mut self, p: Pos, c: Cell) {
        let i = self.index(p);
        if i >= self.cells.len() {
            let plane = self.nx * self.ny;
            self.cells.resize((i / plane + 1) * plane, Cell::Free);
        }
        self.cells[i] = c;
    }
}

/// Blue axis of the outgoing pipe after a cube joining a pipe along `d1`
/// (blue along `blue`) to one along `d2`.
pub fn next_blue(d1: Axis, d2: Axis, blue: Axis, hadamard: bool) -> Axis {
    if d1 == d2 {
        if hadamard {
            Axis::third(d1, blue)
        } else {
            blue
        }
    } else {
        let n = Axis::third(d1, d2);
        match (hadamard, blue == n) {
            (false, true) | (true, false) => n,
            (false, false) | (true, true) => d1,
        }
    }
}

/// Orientation and colour of an identity cube between pipes along `d1`
/// and `d2`, the first with blue along `blue`.
pub fn identity_cube(d1: Axis, d2: Axis, blue: Axis) -> (Axis, Color) {
    if d1 == d2 {
        (blue, Color::Blue)
    } else {
        let n = Axis::third(d1, d2);
        (n, if blue == n { Color::Blue } else { Color::Red })
    }
}

/// Blue axis a pipe along `d` needs to meet a cube of orientation `o` and
/// colour `c`.
pub fn blue_for(d: Axis, o: Axis, c: Color) -> Axis {
    match c {
        Color::Blue => o,
        Color::Red => Axis::third(d, o),
    }
}

/// The two axes orthogonal to `d`, in index order.
pub fn perpendicular(d: Axis) -> [Axis; 2] {
    match d {
        Axis::X => [Axis::Y, Axis::Z],
        Axis::Y => [Axis::X, Axis::Z],
        Axis::Z => [Axis::X, Axis::Y],
    }
}

/// A single-wire phase gadget hanging off a cube: a Z leaf is a port on
/// the face, an X leaf goes through a Hadamard first.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Leaf {
    pub x_type: bool,
    pub angle: f64,
}

impl Leaf {
    fn port(self, pos: Pos) -> Cube {
        let a = normalize_phase(self.angle);
        if (a - FRAC_PI_2).abs() < 1e-9 {
            Cube::plain(0, pos, CubeKind::YCap)
        } else {
            Cube::injection(0, pos, a)
        }
    }
}

#[derive(Clone, Debug)]
enum Undo {
    Cell(Pos, Cell),
    Cube,
    Pipe,
    Spider(usize),
    Pending(usize, usize),
    Reserve(usize),
    Release(usize, usize, Pos),
    Chimney([i32; 2], Option<(usize, i32)>),
    Conn(usize),
    BBox(Option<BoundingBox>),
}

/// A partial pipe diagram together with its occupancy map and the
/// bookkeeping that maps spiders to cubes. All mutation is logged, so any
/// sequence of changes can be rolled back to a checkpoint.
#[derive(Clone, Debug)]
pub struct EmbeddingState {
    pub partial: PipeDiagram,
    pub(crate) grid: Grid,
    adj: Vec<Vec<usize>>,
    /// `phi[cube]` is the spider a cube realises.
    phi: Vec<Option<usize>>,
    spider_cube: Vec<Option<usize>>,
    pending: Vec<usize>,
    reserved: Vec<Vec<Pos>>,
    conn_done: Vec<bool>,
    bbox: Option<BoundingBox>,
    pub current_layer: usize,
    pub footprint: (usize, usize),
    log: Vec<Undo>,
}

impl EmbeddingState {
    pub(crate) fn new(
        grid: Grid,
        footprint: (usize, usize),
        num_nodes: usize,
        num_conns: usize,
    ) -> Self {
        EmbeddingState {
            partial: PipeDiagram::new(),
            grid,
            adj: Vec::new(),
            phi: Vec::new(),
            spider_cube: vec![None; num_nodes],
            pending: Vec::new(),
            reserved: Vec::new(),
            conn_done: vec![false; num_conns],
            bbox: None,
            current_layer: 0,
            footprint,
            log: Vec::new(),
        }
    }

    pub fn checkpoint(&self) -> usize {
        self.log.len()
    }

    pub fn rollback(&mut self, to: usize) {
        while self.log.len() > to {
            match self.log.pop().expect("log entry") {
                Undo::Cell(p, c) => self.grid.set(p, c),
                Undo::Cube => {
                    self.partial.cubes.pop();
                    self.adj.pop();
                    self.phi.pop();
                    self.pending.pop();
                    self.reserved.pop();
                }
                Undo::Pipe => {
                    let e = self.partial.pipes.pop().expect("pipe");
                    self.adj[e.a].pop();
                    self.adj[e.b].pop();
                }
                Undo::Spider(s) => {
                    if let Some(c) = self.spider_cube[s].take() {
                        self.phi[c] = None;
                    }
                }
                Undo::Pending(c, v) => self.pending[c] = v,
                Undo::Reserve(c) => {
                    self.reserved[c].pop();
                }
                Undo::Release(c, i, p) => self.reserved[c].insert(i, p),
                Undo::Chimney(xy, v) => self.grid.set_chimney(xy, v),
                Undo::Conn(k) => self.conn_done[k] = false,
                Undo::BBox(b) => self.bbox = b,
            }
        }
    }

    /// Forget the undo history; later rollbacks stop here.
    pub fn commit(&mut self) {
        self.log.clear();
    }

    pub fn cell(&self, p: Pos) -> Cell {
        self.grid.get(p)
    }

    pub(crate) fn set_cell(&mut self, p: Pos, c: Cell) {
        self.log.push(Undo::Cell(p, self.grid.raw(p)));
        self.grid.set(p, c);
    }

    pub fn cube(&self, id: usize) -> &Cube {
        &self.partial.cubes[id]
    }

    pub fn cube_of(&self, spider: usize) -> Option<usize> {
        self.spider_cube.get(spider).copied().flatten()
    }

    pub fn spider_of(&self, cube: usize) -> Option<usize> {
        self.phi.get(cube).copied().flatten()
    }

    pub fn is_connected(&self, a: usize, b: usize) -> bool {
        self.adj[a].contains(&b)
    }

    pub fn degree(&self, cube: usize) -> usize {
        self.adj[cube].len()
    }

    pub fn conn_done(&self, k: usize) -> bool {
        self.conn_done[k]
    }

    pub fn pending(&self, cube: usize) -> usize {
        self.pending[cube]
    }

    /// Bounding box of the non-boundary cubes.
    pub fn bounding_box(&self) -> Option<BoundingBox> {
        self.bbox
    }

    pub fn volume(&self) -> u64 {
        self.bbox.map_or(0, |b| b.volume())
    }

    pub fn top_z(&self) -> i32 {
        self.bbox.map_or(0, |b| b.max[2])
    }

    pub fn add_cube(&mut self, cube: Cube) -> usize {
        let pos = cube.pos;
        if cube.kind != CubeKind::BoundaryPort {
            self.log.push(Undo::BBox(self.bbox));
            self.bbox = Some(match self.bbox {
                None => BoundingBox { min: pos, max: pos },
                Some(mut b) => {
                    for i in 0..3 {
                        b.min[i] = b.min[i].min(pos[i]);
                        b.max[i] = b.max[i].max(pos[i]);
                    }
                    b
                }
            });
        }
        let id = self.partial.add_cube(cube);
        self.adj.push(Vec::new());
        self.phi.push(None);
        self.pending.push(0);
        self.reserved.push(Vec::new());
        self.log.push(Undo::Cube);
        self.set_cell(pos, Cell::Cube(id));
        id
    }

    pub fn connect(&mut self, a: usize, b: usize, blue: Axis) {
        let k = self.partial.connect(a, b, blue);
        let e = self.partial.pipes[k];
        self.adj[e.a].push(e.b);
        self.adj[e.b].push(e.a);
        self.log.push(Undo::Pipe);
    }

    pub(crate) fn bind_spider(&mut self, spider: usize, cube: usize) {
        self.spider_cube[spider] = Some(cube);
        self.phi[cube] = Some(spider);
        self.log.push(Undo::Spider(spider));
    }

    /// Set the number of open connections of `cube`, dropping surplus
    /// reservations: consumed ones first, then the latest.
    pub(crate) fn set_pending(&mut self, cube: usize, n: usize) {
        self.log.push(Undo::Pending(cube, self.pending[cube]));
        self.pending[cube] = n;
        while self.reserved[cube].len() > n {
            let i = self.reserved[cube]
                .iter()
                .position(|&p| !self.intact(cube, p))
                .unwrap_or(self.reserved[cube].len() - 1);
            self.release(cube, i);
        }
    }

    /// Cells held for `owner`, one per pending connection.
    pub fn reservations(&self, owner: usize) -> &[Pos] {
        &self.reserved[owner]
    }

    /// Whether the reservation at `p` still leads straight up to free space.
    pub fn intact(&self, owner: usize, p: Pos) -> bool {
        let held = |q: Pos| self.grid.get(q) == Cell::Reserved(owner);
        let chimney = self
            .grid
            .chimney([p[0], p[1]])
            .is_some_and(|c| c == (owner, p[2] + 1));
        held(p) && (!chimney || (p[2] + 1..=self.top_z() + 1).all(|z| held([p[0], p[1], z])))
    }

    /// Whether every reservation without a chimney can still reach the
    /// space above the current top through free cells.
    pub fn reservations_escape(&self) -> bool {
        self.reserved.iter().enumerate().all(|(owner, cells)| {
            cells.iter().all(|&p| {
                self.grid.get(p) != Cell::Reserved(owner)
                    || self
                        .grid
                        .chimney([p[0], p[1]])
                        .is_some_and(|c| c == (owner, p[2] + 1))
                    || self.escapes(p)
            })
        })
    }

    fn escapes(&self, p: Pos) -> bool {
        let top = self.top_z() + 1;
        let mut seen = std::collections::HashSet::from([p]);
        let mut stack = vec![p];
        while let Some(q) = stack.pop() {
            if q[2] >= top {
                return true;
            }
            for d in Dir::ORDER.iter().rev() {
                let n = d.step(q);
                if n[2] >= 1 && matches!(self.grid.get(n), Cell::Free) && seen.insert(n) {
                    stack.push(n);
                }
            }
        }
        false
    }

    pub(crate) fn release(&mut self, owner: usize, i: usize) {
        let p = self.reserved[owner].remove(i);
        self.log.push(Undo::Release(owner, i, p));
        if self
            .grid
            .chimney([p[0], p[1]])
            .is_some_and(|c| c.0 == owner)
        {
            self.set_chimney([p[0], p[1]], None);
        }
        if self.grid.get(p) == Cell::Reserved(owner) {
            self.set_cell(p, Cell::Free);
        }
    }

    fn set_chimney(&mut self, xy: [i32; 2], v: Option<(usize, i32)>) {
        self.log.push(Undo::Chimney(xy, self.grid.chimney(xy)));
        self.grid.set_chimney(xy, v);
    }

    pub(crate) fn mark_conn(&mut self, k: usize) {
        self.conn_done[k] = true;
        self.log.push(Undo::Conn(k));
    }

    /// Hold `p` for a pending connection of `owner`.
    pub(crate) fn reserve(&mut self, owner: usize, p: Pos) {
        self.set_cell(p, Cell::Reserved(owner));
        self.reserved[owner].push(p);
        self.log.push(Undo::Reserve(owner));
    }

    /// Whether `p` and the whole column above it are free to hold.
    pub fn chimney_free(&self, p: Pos) -> bool {
        self.grid.get(p) == Cell::Free
            && self.grid.chimney([p[0], p[1]]).is_none()
            && (p[2] + 1..=self.top_z() + 1).all(|z| self.grid.get([p[0], p[1], z]) == Cell::Free)
    }

    /// Hold `p` and every cell above it for `owner`, so the connection can
    /// always leave straight upward.
    pub(crate) fn reserve_chimney(&mut self, owner: usize, p: Pos) {
        self.reserve(owner, p);
        self.set_chimney([p[0], p[1]], Some((owner, p[2] + 1)));
    }

    /// Cells currently held for pending connections, with their owners.
    pub fn frontier_ports(&self) -> Vec<(usize, Pos)> {
        let mut out = Vec::new();
        for (c, cells) in self.reserved.iter().enumerate() {
            for &p in cells {
                if self.grid.get(p) == Cell::Reserved(c) {
                    out.push((self.spider_of(c).unwrap_or(c), p));
                }
            }
        }
        out
    }

    /// Faces of `cube` a new pipe may leave through, with the blue axis the
    /// pipe must carry there. Ports allow either frame.
    pub fn exits(&self, cube: usize) -> Vec<(Dir, Vec<Axis>)> {
        let c = self.cube(cube);
        Dir::ORDER
            .iter()
            .filter_map(|&d| match (c.orientation, c.color) {
                (Some(o), Some(col)) if d.axis != o => Some((d, vec![blue_for(d.axis, o, col)])),
                (Some(_), _) => None,
                _ => Some((d, perpendicular(d.axis).to_vec())),
            })
            .collect()
    }

    /// Attach `leaf` to a free face of standard cube `cube`, trying faces
    /// in `order` and keeping every new cube within `zr`.
    pub fn place_leaf(&mut self, cube: usize, leaf: Leaf, order: &[Dir], zr: (i32, i32)) -> bool {
        let c = self.cube(cube).clone();
        let (Some(o), Some(col)) = (c.orientation, c.color) else {
            return false;
        };
        let ok = |s: &Self, p: Pos| s.cell(p) == Cell::Free && p[2] >= zr.0 && p[2] <= zr.1;
        for &f in order {
            if f.axis == o {
                continue;
            }
            let n = f.step(c.pos);
            if !ok(self, n) {
                continue;
            }
            let b1 = blue_for(f.axis, o, col);
            if !leaf.x_type {
                let port = self.add_cube(leaf.port(n));
                self.connect(cube, port, b1);
                return true;
            }
            let mut turns = vec![f];
            turns.extend(Dir::ORDER.iter().copied().filter(|g| g.axis != f.axis));
            for g in turns {
                let m = g.step(n);
                if !ok(self, m) {
                    continue;
                }
                let h = self.add_cube(Cube::plain(0, n, CubeKind::Hadamard));
                self.connect(cube, h, b1);
                let port = self.add_cube(leaf.port(m));
                self.connect(h, port, next_blue(f.axis, g.axis, b1, true));
                return true;
            }
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipe::validate_pipe_diagram;

    fn state() -> EmbeddingState {
        EmbeddingState::new(Grid::new([-1, -1], 5, 5), (2, 2), 4, 4)
    }

    #[test]
    fn frame_rules_pass_validation() {
        for d1 in Axis::ALL {
            for d2 in Axis::ALL {
                for blue in perpendicular(d1) {
                    for h in [false, true] {
                        let mut p = PipeDiagram::new();
                        let a = p.add_cube(Cube::plain(0, [0, 0, 0], CubeKind::BoundaryPort));
                        let pm = d1.unit();
                        let kind = if h {
                            CubeKind::Hadamard
                        } else {
                            CubeKind::Standard
                        };
                        let mut mid = Cube::plain(0, pm, kind);
                        if !h {
                            let (o, c) = identity_cube(d1, d2, blue);
                            mid = Cube::standard(0, pm, o, c);
                        }
                        let m = p.add_cube(mid);
                        let mut pe = pm;
                        pe[d2.index()] += 1;
                        let b = p.add_cube(Cube::plain(0, pe, CubeKind::BoundaryPort));
                        p.connect(a, m, blue);
                        p.connect(m, b, next_blue(d1, d2, blue, h));
                        p.inputs = vec![a];
                        p.outputs = vec![b];
                        let v = validate_pipe_diagram(&p);
                        assert!(v.is_empty(), "{d1:?} {d2:?} {blue:?} {h}: {v:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn rollback_restores_everything() {
        let mut s = state();
        let a = s.add_cube(Cube::standard(0, [0, 0, 1], Axis::X, Color::Blue));
        let cp = s.checkpoint();
        let b = s.add_cube(Cube::standard(0, [0, 0, 2], Axis::X, Color::Blue));
        s.connect(a, b, Axis::X);
        s.reserve(b, [0, 0, 3]);
        s.bind_spider(3, b);
        assert_eq!(s.volume(), 2);
        s.rollback(cp);
        assert_eq!(s.partial.cubes.len(), 1);
        assert!(s.partial.pipes.is_empty());
        assert_eq!(s.cell([0, 0, 2]), Cell::Free);
        assert_eq!(s.cell([0, 0, 3]), Cell::Free);
        assert_eq!(s.cube_of(3), None);
        assert_eq!(s.volume(), 1);
        assert_eq!(s.degree(a), 0);
    }

    #[test]
    fn chimney_holds_column_until_released() {
        let mut s = state();
        let a = s.add_cube(Cube::standard(0, [0, 0, 1], Axis::Z, Color::Blue));
        let cp = s.checkpoint();
        assert!(s.chimney_free([1, 0, 1]));
        s.reserve_chimney(a, [1, 0, 1]);
        s.set_pending(a, 1);
        assert_eq!(s.cell([1, 0, 1]), Cell::Reserved(a));
        assert_eq!(s.cell([1, 0, 7]), Cell::Reserved(a));
        assert_eq!(s.cell([1, 1, 7]), Cell::Free);
        assert!(!s.chimney_free([1, 0, 2]));
        let b = s.add_cube(Cube::standard(0, [1, 0, 3], Axis::Z, Color::Blue));
        s.set_pending(a, 0);
        assert_eq!(s.cell([1, 0, 1]), Cell::Free);
        assert_eq!(s.cell([1, 0, 3]), Cell::Cube(b));
        assert_eq!(s.cell([1, 0, 4]), Cell::Free);
        s.rollback(cp);
        for z in 1..6 {
            assert_eq!(s.cell([1, 0, z]), Cell::Free);
        }
        assert!(s.chimney_free([1, 0, 1]));
    }

    #[test]
    fn leaves_attach_validly() {
        for x_type in [false, true] {
            let mut s = state();
            let c = s.add_cube(Cube::standard(0, [0, 0, 1], Axis::Z, Color::Red));
            assert!(s.place_leaf(c, Leaf { x_type, angle: 0.3 }, &Dir::ORDER, (1, 1)));
            let v = validate_pipe_diagram(&s.partial);
            assert!(v.is_empty(), "{v:?}");
            assert_eq!(
                s.partial.count_kind(CubeKind::Hadamard),
                usize::from(x_type)
            );
        }
    }

    #[test]
    fn grid_bounds() {
        let s = state();
        assert_eq!(s.cell([-2, 0, 1]), Cell::Blocked);
        assert_eq!(s.cell([3, 3, 9]), Cell::Free);
        assert_eq!(s.cell([0, 0, -1]), Cell::Blocked);
    }
}
