//! Axis-aligned geometry over exact scalars: intervals, interval sets, step
//! profiles, rectangles and rectilinear regions stored as vertical-slab cell
//! decompositions.

use std::collections::BTreeMap;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GeometryError {
    #[error("interval has zero length")]
    ZeroLength,
    #[error("obstacles {0} and {1} overlap")]
    Overlap(usize, usize),
}

/// Closed interval `[lo, hi]`, possibly a single point.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: Scalar,
    pub hi: Scalar,
}

impl Interval {
    pub fn new(lo: Scalar, hi: Scalar) -> Self {
        assert!(lo <= hi, "interval with lo > hi: [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn len(&self) -> Scalar {
        &self.hi - &self.lo
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: &Scalar) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    /// Open interiors intersect (positive-length overlap).
    pub fn overlaps_open(&self, other: &Interval) -> bool {
        self.lo < other.hi && other.lo < self.hi
    }

    /// Closed intervals intersect, touching included.
    pub fn meets(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn overlap_len(&self, other: &Interval) -> Scalar {
        let lo = (&self.lo).max(&other.lo).clone();
        let hi = (&self.hi).min(&other.hi).clone();
        if hi > lo {
            hi - lo
        } else {
            Scalar::zero()
        }
    }
}

/// Sorted, pairwise disjoint, non-touching closed intervals.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IntervalSet {
    items: Vec<Interval>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet { items: Vec::new() }
    }

    pub fn single(lo: Scalar, hi: Scalar) -> Self {
        IntervalSet { items: vec![Interval::new(lo, hi)] }
    }

    /// Normalizes an arbitrary list: sorts and merges overlapping or touching
    /// intervals.
    pub fn from_intervals(mut v: Vec<Interval>) -> Self {
        v.sort_by(|a, b| a.lo.cmp(&b.lo).then(a.hi.cmp(&b.hi)));
        let mut items: Vec<Interval> = Vec::with_capacity(v.len());
        for iv in v {
            match items.last_mut() {
                Some(last) if iv.lo <= last.hi => {
                    if iv.hi > last.hi {
                        last.hi = iv.hi;
                    }
                }
                _ => items.push(iv),
            }
        }
        IntervalSet { items }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.items
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn total_len(&self) -> Scalar {
        self.items.iter().map(Interval::len).sum()
    }

    pub fn contains(&self, x: &Scalar) -> bool {
        let idx = self.items.partition_point(|iv| &iv.hi < x);
        self.items.get(idx).is_some_and(|iv| iv.contains(x))
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        let mut v = self.items.clone();
        v.extend(other.items.iter().cloned());
        IntervalSet::from_intervals(v)
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.items.len() && j < other.items.len() {
            let a = &self.items[i];
            let b = &other.items[j];
            let lo = (&a.lo).max(&b.lo);
            let hi = (&a.hi).min(&b.hi);
            if lo <= hi {
                out.push(Interval::new(lo.clone(), hi.clone()));
            }
            if a.hi < b.hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalSet::from_intervals(out)
    }

    /// Closure of `self \ other`.
    pub fn subtract(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        for a in &self.items {
            let mut pieces = vec![a.clone()];
            for b in other.items.iter().filter(|b| b.meets(a)) {
                let mut next = Vec::new();
                for p in pieces {
                    if !b.meets(&p) {
                        next.push(p);
                        continue;
                    }
                    if p.lo < b.lo {
                        next.push(Interval::new(p.lo.clone(), b.lo.clone()));
                    }
                    if b.hi < p.hi {
                        next.push(Interval::new(b.hi.clone(), p.hi.clone()));
                    }
                }
                pieces = next;
            }
            out.extend(pieces);
        }
        IntervalSet::from_intervals(out)
    }

    /// Keeps the intervals that meet (closed intersection) some interval of
    /// `seeds`.
    pub fn components_meeting(&self, seeds: &IntervalSet) -> IntervalSet {
        let items = self
            .items
            .iter()
            .filter(|iv| {
                let idx = seeds.items.partition_point(|s| s.hi < iv.lo);
                seeds.items.get(idx).is_some_and(|s| s.meets(iv))
            })
            .cloned()
            .collect();
        IntervalSet { items }
    }

    /// Closed complement inside `[lo, hi]` of a union of open intervals.
    pub fn complement_of_open(lo: &Scalar, hi: &Scalar, open: &[(Scalar, Scalar)]) -> IntervalSet {
        let mut pieces = vec![Interval::new(lo.clone(), hi.clone())];
        for (a, b) in open.iter().filter(|(a, b)| a < b) {
            let mut next = Vec::with_capacity(pieces.len() + 1);
            for p in pieces {
                if b <= &p.lo || a >= &p.hi {
                    next.push(p);
                    continue;
                }
                if &p.lo <= a {
                    next.push(Interval::new(p.lo.clone(), a.clone()));
                }
                if b <= &p.hi {
                    next.push(Interval::new(b.clone(), p.hi.clone()));
                }
            }
            pieces = next;
        }
        IntervalSet::from_intervals(pieces)
    }
}

/// Piecewise-constant function on `[0, 1]`: `values[i]` holds on the open
/// piece `(breaks[i], breaks[i + 1])`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepProfile {
    breaks: Vec<Scalar>,
    values: Vec<Scalar>,
}

impl StepProfile {
    pub fn flat(v: Scalar) -> Self {
        StepProfile { breaks: vec![Scalar::zero(), Scalar::one()], values: vec![v] }
    }

    pub fn breaks(&self) -> &[Scalar] {
        &self.breaks
    }

    pub fn values(&self) -> &[Scalar] {
        &self.values
    }

    pub fn pieces(&self) -> impl Iterator<Item = (&Scalar, &Scalar, &Scalar)> {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, v)| (&self.breaks[i], &self.breaks[i + 1], v))
    }

    /// Maximum over the open interior of `iv`; boundary-only contact is
    /// ignored.
    pub fn max_over(&self, iv: &Interval) -> Result<Scalar, GeometryError> {
        if iv.is_point() {
            return Err(GeometryError::ZeroLength);
        }
        let start = self.breaks.partition_point(|b| b <= &iv.lo).saturating_sub(1);
        let mut best: Option<&Scalar> = None;
        for i in start..self.values.len() {
            if self.breaks[i] >= iv.hi {
                break;
            }
            if self.breaks[i + 1] > iv.lo {
                let v = &self.values[i];
                if best.is_none_or(|b| v > b) {
                    best = Some(v);
                }
            }
        }
        Ok(best.cloned().unwrap_or_else(Scalar::zero))
    }

    fn split_at(&mut self, x: &Scalar) {
        let idx = self.breaks.partition_point(|b| b < x);
        if idx < self.breaks.len() && &self.breaks[idx] == x {
            return;
        }
        let v = self.values[idx - 1].clone();
        self.breaks.insert(idx, x.clone());
        self.values.insert(idx, v);
    }

    /// Pointwise `max(self, v)` on `[lo, hi]`.
    pub fn raise(&mut self, lo: &Scalar, hi: &Scalar, v: &Scalar) {
        if lo >= hi {
            return;
        }
        self.split_at(lo);
        self.split_at(hi);
        for i in 0..self.values.len() {
            if &self.breaks[i] >= lo && &self.breaks[i + 1] <= hi && &self.values[i] < v {
                self.values[i] = v.clone();
            }
        }
        self.coalesce();
    }

    fn coalesce(&mut self) {
        let mut breaks = vec![self.breaks[0].clone()];
        let mut values: Vec<Scalar> = Vec::new();
        for (i, v) in self.values.iter().enumerate() {
            if values.last() == Some(v) {
                *breaks.last_mut().unwrap() = self.breaks[i + 1].clone();
            } else {
                values.push(v.clone());
                breaks.push(self.breaks[i + 1].clone());
            }
        }
        self.breaks = breaks;
        self.values = values;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub x: Scalar,
    pub y: Scalar,
}

impl Point {
    pub fn new(x: Scalar, y: Scalar) -> Self {
        Point { x, y }
    }
}

/// Axis-aligned rectangle `xs × ys`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rect {
    pub xs: Interval,
    pub ys: Interval,
}

impl Rect {
    pub fn new(x0: Scalar, x1: Scalar, y0: Scalar, y1: Scalar) -> Self {
        Rect { xs: Interval::new(x0, x1), ys: Interval::new(y0, y1) }
    }

    pub fn width(&self) -> Scalar {
        self.xs.len()
    }

    pub fn height(&self) -> Scalar {
        self.ys.len()
    }

    pub fn area(&self) -> Scalar {
        self.width() * self.height()
    }

    pub fn is_degenerate(&self) -> bool {
        self.xs.is_point() || self.ys.is_point()
    }

    /// Interiors intersect.
    pub fn overlaps(&self, other: &Rect) -> bool {
        self.xs.overlaps_open(&other.xs) && self.ys.overlaps_open(&other.ys)
    }

    /// Area of the part where `a·x + b·y <= c`.
    pub fn halfplane_area(&self, a: &Scalar, b: &Scalar, c: &Scalar) -> Scalar {
        let corners = [
            Point::new(self.xs.lo.clone(), self.ys.lo.clone()),
            Point::new(self.xs.hi.clone(), self.ys.lo.clone()),
            Point::new(self.xs.hi.clone(), self.ys.hi.clone()),
            Point::new(self.xs.lo.clone(), self.ys.hi.clone()),
        ];
        let eval = |p: &Point| &(&(a * &p.x) + &(b * &p.y)) - c;
        let mut poly = Vec::new();
        for i in 0..4 {
            let p = &corners[i];
            let r = &corners[(i + 1) % 4];
            let (fp, fr) = (eval(p), eval(r));
            if !fp.is_positive() {
                poly.push(p.clone());
            }
            if (fp.is_negative() && fr.is_positive()) || (fp.is_positive() && fr.is_negative()) {
                let t = &fp / &(&fp - &fr);
                poly.push(Point::new(&p.x + &(&t * &(&r.x - &p.x)), &p.y + &(&t * &(&r.y - &p.y))));
            }
        }
        shoelace(&poly).abs()
    }
}

/// Signed area of a simple polygon (positive when counterclockwise).
pub fn shoelace(poly: &[Point]) -> Scalar {
    let n = poly.len();
    if n < 3 {
        return Scalar::zero();
    }
    let mut twice = Scalar::zero();
    for i in 0..n {
        let p = &poly[i];
        let r = &poly[(i + 1) % n];
        twice += &(&p.x * &r.y) - &(&r.x * &p.y);
    }
    twice.half()
}

/// Axis direction of a boundary edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dir {
    East,
    North,
    West,
    South,
}

impl Dir {
    fn clockwise(self) -> Dir {
        match self {
            Dir::North => Dir::East,
            Dir::East => Dir::South,
            Dir::South => Dir::West,
            Dir::West => Dir::North,
        }
    }

    fn reverse(self) -> Dir {
        self.clockwise().clockwise()
    }
}

/// Directed boundary edge; the region lies on its left.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub from: Point,
    pub to: Point,
}

impl Edge {
    pub fn dir(&self) -> Dir {
        if self.from.y == self.to.y {
            if self.to.x > self.from.x {
                Dir::East
            } else {
                Dir::West
            }
        } else if self.to.y > self.from.y {
            Dir::North
        } else {
            Dir::South
        }
    }

    pub fn len(&self) -> Scalar {
        (&self.to.x - &self.from.x).abs() + (&self.to.y - &self.from.y).abs()
    }

    pub fn is_horizontal(&self) -> bool {
        self.from.y == self.to.y
    }

    /// Whether `p` lies on the closed segment.
    pub fn contains(&self, p: &Point) -> bool {
        let (xlo, xhi) = minmax(&self.from.x, &self.to.x);
        let (ylo, yhi) = minmax(&self.from.y, &self.to.y);
        xlo <= &p.x && &p.x <= xhi && ylo <= &p.y && &p.y <= yhi
    }
}

fn minmax<'a>(a: &'a Scalar, b: &'a Scalar) -> (&'a Scalar, &'a Scalar) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// One connected open rectilinear region, stored as interior-disjoint open
/// cells (each cell lies inside one vertical slab) plus its boundary cycles.
/// `boundary[0]` is the outer cycle, traversed counterclockwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RectilinearRegion {
    cells: Vec<Rect>,
    boundary: Vec<Vec<Edge>>,
}

impl RectilinearRegion {
    pub fn from_cells(cells: Vec<Rect>) -> Self {
        let boundary = trace_boundary(&cells);
        RectilinearRegion { cells, boundary }
    }

    pub fn cells(&self) -> &[Rect] {
        &self.cells
    }

    pub fn area(&self) -> Scalar {
        self.cells.iter().map(Rect::area).sum()
    }

    pub fn outer_boundary(&self) -> &[Edge] {
        &self.boundary[0]
    }

    pub fn boundary_cycles(&self) -> &[Vec<Edge>] {
        &self.boundary
    }

    pub fn bbox(&self) -> Rect {
        let mut x0 = self.cells[0].xs.lo.clone();
        let mut x1 = self.cells[0].xs.hi.clone();
        let mut y0 = self.cells[0].ys.lo.clone();
        let mut y1 = self.cells[0].ys.hi.clone();
        for c in &self.cells[1..] {
            x0 = x0.min(c.xs.lo.clone());
            x1 = x1.max(c.xs.hi.clone());
            y0 = y0.min(c.ys.lo.clone());
            y1 = y1.max(c.ys.hi.clone());
        }
        Rect::new(x0, x1, y0, y1)
    }

    /// Whether the point lies in the open region (up to cell seams, which are
    /// interior to the region as well).
    pub fn contains_point(&self, p: &Point) -> bool {
        self.cells.iter().any(|c| c.xs.lo <= p.x && p.x <= c.xs.hi && c.ys.lo <= p.y && p.y <= c.ys.hi)
            && !self.outer_boundary().iter().chain(self.boundary[1..].iter().flatten()).any(|e| e.contains(p))
    }

    /// Whether the points just below the horizontal line `y`, over the open
    /// x-interval `(x0, x1)`, all belong to the region.
    pub fn covers_below(&self, x0: &Scalar, x1: &Scalar, y: &Scalar) -> bool {
        let run = self.run_below(x0, y);
        run.is_some_and(|end| &end >= x1)
    }

    /// Right end of the maximal run starting at `x0` along which the points
    /// just below the line `y` lie in the region; `None` if the run is empty.
    pub fn run_below(&self, x0: &Scalar, y: &Scalar) -> Option<Scalar> {
        let ivs: Vec<Interval> = self
            .cells
            .iter()
            .filter(|c| &c.ys.lo < y && y <= &c.ys.hi)
            .map(|c| c.xs.clone())
            .collect();
        let set = IntervalSet::from_intervals(ivs);
        set.intervals()
            .iter()
            .find(|iv| &iv.lo <= x0 && x0 < &iv.hi)
            .map(|iv| iv.hi.clone())
    }

    /// Splits the region along the horizontal segment `y × [x0, x1]` and
    /// returns the resulting connected pieces.
    pub fn split_horizontal(&self, y: &Scalar, x0: &Scalar, x1: &Scalar) -> Vec<RectilinearRegion> {
        let mut cells = Vec::new();
        for c in &self.cells {
            let mut xs = vec![c.xs.lo.clone()];
            for cut in [x0, x1] {
                if &c.xs.lo < cut && cut < &c.xs.hi {
                    xs.push(cut.clone());
                }
            }
            xs.push(c.xs.hi.clone());
            for w in xs.windows(2) {
                let inside = &w[0] >= x0 && &w[1] <= x1;
                if inside && &c.ys.lo < y && y < &c.ys.hi {
                    cells.push(Rect::new(w[0].clone(), w[1].clone(), c.ys.lo.clone(), y.clone()));
                    cells.push(Rect::new(w[0].clone(), w[1].clone(), y.clone(), c.ys.hi.clone()));
                } else {
                    cells.push(Rect::new(w[0].clone(), w[1].clone(), c.ys.lo.clone(), c.ys.hi.clone()));
                }
            }
        }
        let blocked = |a: &Rect, b: &Rect| -> bool {
            // Shared horizontal seam on the cut line.
            let seam_y = if a.ys.hi == b.ys.lo {
                &a.ys.hi
            } else {
                &a.ys.lo
            };
            seam_y == y && a.xs.lo >= *x0 && a.xs.hi <= *x1
        };
        components_of_cells(cells, |a, b| cells_adjacent(a, b) && !(horizontal_seam(a, b) && blocked(a, b)))
            .into_iter()
            .map(RectilinearRegion::from_cells)
            .collect()
    }
}

fn horizontal_seam(a: &Rect, b: &Rect) -> bool {
    (a.ys.hi == b.ys.lo || b.ys.hi == a.ys.lo) && a.xs.overlaps_open(&b.xs)
}

/// Cells share a boundary piece of positive length.
fn cells_adjacent(a: &Rect, b: &Rect) -> bool {
    let vertical = (a.xs.hi == b.xs.lo || b.xs.hi == a.xs.lo) && a.ys.overlaps_open(&b.ys);
    vertical || horizontal_seam(a, b)
}

fn components_of_cells(cells: Vec<Rect>, adjacent: impl Fn(&Rect, &Rect) -> bool) -> Vec<Vec<Rect>> {
    let n = cells.len();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if adjacent(&cells[i], &cells[j]) {
                uf.union(i, j);
            }
        }
    }
    group_by_root(cells, &mut uf)
}

fn group_by_root(cells: Vec<Rect>, uf: &mut UnionFind) -> Vec<Vec<Rect>> {
    let mut groups: BTreeMap<usize, Vec<Rect>> = BTreeMap::new();
    let mut order: Vec<usize> = Vec::new();
    for (i, c) in cells.into_iter().enumerate() {
        let r = uf.find(i);
        if !groups.contains_key(&r) {
            order.push(r);
        }
        groups.entry(r).or_default().push(c);
    }
    order.into_iter().map(|r| groups.remove(&r).unwrap()).collect()
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, i: usize) -> usize {
        let mut r = i;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut c = i;
        while self.parent[c] != r {
            let next = self.parent[c];
            self.parent[c] = r;
            c = next;
        }
        r
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Boundary of a union of open cells as closed edge cycles with the region
/// on the left. The outer cycle (largest positive area) comes first.
fn trace_boundary(cells: &[Rect]) -> Vec<Vec<Edge>> {
    let mut edges: Vec<Edge> = Vec::new();
    for c in cells {
        let (x0, x1, y0, y1) = (&c.xs.lo, &c.xs.hi, &c.ys.lo, &c.ys.hi);
        let uncovered_x = |y: &Scalar, above: bool| {
            let covered: Vec<Interval> = cells
                .iter()
                .filter(|o| if above { &o.ys.lo == y } else { &o.ys.hi == y })
                .filter(|o| o.xs.overlaps_open(&c.xs))
                .map(|o| o.xs.clone())
                .collect();
            IntervalSet::single(x0.clone(), x1.clone()).subtract(&IntervalSet::from_intervals(covered))
        };
        let uncovered_y = |x: &Scalar, right: bool| {
            let covered: Vec<Interval> = cells
                .iter()
                .filter(|o| if right { &o.xs.lo == x } else { &o.xs.hi == x })
                .filter(|o| o.ys.overlaps_open(&c.ys))
                .map(|o| o.ys.clone())
                .collect();
            IntervalSet::single(y0.clone(), y1.clone()).subtract(&IntervalSet::from_intervals(covered))
        };
        for iv in uncovered_x(y0, false).intervals().iter().filter(|iv| !iv.is_point()) {
            edges.push(Edge { from: Point::new(iv.lo.clone(), y0.clone()), to: Point::new(iv.hi.clone(), y0.clone()) });
        }
        for iv in uncovered_x(y1, true).intervals().iter().filter(|iv| !iv.is_point()) {
            edges.push(Edge { from: Point::new(iv.hi.clone(), y1.clone()), to: Point::new(iv.lo.clone(), y1.clone()) });
        }
        for iv in uncovered_y(x1, true).intervals().iter().filter(|iv| !iv.is_point()) {
            edges.push(Edge { from: Point::new(x1.clone(), iv.lo.clone()), to: Point::new(x1.clone(), iv.hi.clone()) });
        }
        for iv in uncovered_y(x0, false).intervals().iter().filter(|iv| !iv.is_point()) {
            edges.push(Edge { from: Point::new(x0.clone(), iv.hi.clone()), to: Point::new(x0.clone(), iv.lo.clone()) });
        }
    }
    // Split every edge at vertices lying in its interior.
    let mut vertices: Vec<Point> = edges.iter().flat_map(|e| [e.from.clone(), e.to.clone()]).collect();
    vertices.sort();
    vertices.dedup();
    let mut split: Vec<Edge> = Vec::new();
    for e in edges {
        let mut inner: Vec<&Point> = vertices
            .iter()
            .filter(|v| **v != e.from && **v != e.to && e.contains(v))
            .collect();
        let d = e.dir();
        inner.sort_by(|a, b| match d {
            Dir::East => a.x.cmp(&b.x),
            Dir::West => b.x.cmp(&a.x),
            Dir::North => a.y.cmp(&b.y),
            Dir::South => b.y.cmp(&a.y),
        });
        let mut cur = e.from.clone();
        for v in inner {
            split.push(Edge { from: cur, to: v.clone() });
            cur = v.clone();
        }
        split.push(Edge { from: cur, to: e.to });
    }
    let mut outgoing: BTreeMap<Point, Vec<usize>> = BTreeMap::new();
    for (i, e) in split.iter().enumerate() {
        outgoing.entry(e.from.clone()).or_default().push(i);
    }
    let mut used = vec![false; split.len()];
    let mut cycles: Vec<Vec<Edge>> = Vec::new();
    for start in 0..split.len() {
        if used[start] {
            continue;
        }
        let mut cycle = Vec::new();
        let mut cur = start;
        loop {
            used[cur] = true;
            cycle.push(split[cur].clone());
            let arrive = split[cur].dir();
            let outs = &outgoing[&split[cur].to];
            let mut d = arrive.reverse();
            let mut next = None;
            for _ in 0..3 {
                d = d.clockwise();
                if let Some(&i) = outs.iter().find(|&&i| split[i].dir() == d && !used[i]) {
                    next = Some(i);
                    break;
                }
            }
            match next {
                Some(i) => cur = i,
                None => break,
            }
        }
        cycles.push(merge_collinear(cycle));
    }
    cycles.sort_by(|a, b| {
        let area = |c: &Vec<Edge>| shoelace(&c.iter().map(|e| e.from.clone()).collect::<Vec<_>>());
        area(b).cmp(&area(a))
    });
    cycles
}

fn merge_collinear(cycle: Vec<Edge>) -> Vec<Edge> {
    let mut out: Vec<Edge> = Vec::new();
    for e in cycle {
        match out.last_mut() {
            Some(last) if last.dir() == e.dir() && last.to == e.from => last.to = e.to,
            _ => out.push(e),
        }
    }
    if out.len() > 1 {
        let first_dir = out[0].dir();
        let last = out.last().unwrap();
        if last.dir() == first_dir && last.to == out[0].from {
            let last = out.pop().unwrap();
            out[0].from = last.from;
        }
    }
    out
}

/// Bounded connected components of `([0,1] × [0, ceiling])` minus the
/// interiors of `obstacles`. A component is unbounded when it reaches the
/// ceiling line.
pub fn free_components(obstacles: &[Rect], ceiling: &Scalar) -> Result<Vec<RectilinearRegion>, GeometryError> {
    for i in 0..obstacles.len() {
        for j in i + 1..obstacles.len() {
            if obstacles[i].overlaps(&obstacles[j]) {
                return Err(GeometryError::Overlap(i, j));
            }
        }
    }
    let cells = free_cells(obstacles, ceiling);
    let mut uf = UnionFind::new(cells.len());
    // Cells in consecutive slabs are sorted by y; pair them with a sweep.
    let mut slabs: BTreeMap<&Scalar, Vec<usize>> = BTreeMap::new();
    for (i, c) in cells.iter().enumerate() {
        slabs.entry(&c.xs.lo).or_default().push(i);
    }
    let keys: Vec<&Scalar> = slabs.keys().copied().collect();
    for w in keys.windows(2) {
        let (left, right) = (&slabs[w[0]], &slabs[w[1]]);
        let (mut i, mut j) = (0, 0);
        while i < left.len() && j < right.len() {
            let (a, b) = (&cells[left[i]], &cells[right[j]]);
            if a.xs.hi == b.xs.lo && a.ys.overlaps_open(&b.ys) {
                uf.union(left[i], right[j]);
            }
            if a.ys.hi < b.ys.hi {
                i += 1;
            } else {
                j += 1;
            }
        }
    }
    let groups = group_by_root(cells, &mut uf);
    Ok(groups
        .into_iter()
        .filter(|g| g.iter().all(|c| &c.ys.hi != ceiling))
        .map(RectilinearRegion::from_cells)
        .collect())
}

/// Free open cells per vertical slab, sorted by slab then y.
fn free_cells(obstacles: &[Rect], ceiling: &Scalar) -> Vec<Rect> {
    let mut xs: Vec<Scalar> = vec![Scalar::zero(), Scalar::one()];
    for o in obstacles {
        xs.push(o.xs.lo.clone());
        xs.push(o.xs.hi.clone());
    }
    xs.sort();
    xs.dedup();
    let mut cells = Vec::new();
    for w in xs.windows(2) {
        let slab = Interval::new(w[0].clone(), w[1].clone());
        let covering: Vec<Interval> = obstacles
            .iter()
            .filter(|o| o.xs.overlaps_open(&slab))
            .map(|o| o.ys.clone())
            .collect();
        let free = IntervalSet::single(Scalar::zero(), ceiling.clone()).subtract(&IntervalSet::from_intervals(covering));
        for iv in free.intervals().iter().filter(|iv| !iv.is_point()) {
            cells.push(Rect { xs: slab.clone(), ys: iv.clone() });
        }
    }
    cells
}
