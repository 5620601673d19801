//! Holes of closed BottomLeft packings: extraction, boundary sequences,
//! classification, splitting along the left diagonal, area bounds and the
//! per-side charge ledger.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::bottomleft::close_packing;
use crate::geometry::{free_components, Dir, Edge, GeometryError, Point, Rect, RectilinearRegion};
use crate::packing::{packing_height, PackError, Packing};
use crate::report::Check;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalysisError {
    #[error("{lemma} violated: {detail}")]
    Lemma { lemma: &'static str, detail: String },
    #[error(transparent)]
    Pack(#[from] PackError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

fn fail<T>(lemma: &'static str, detail: impl Into<String>) -> Result<T, AnalysisError> {
    Err(AnalysisError::Lemma { lemma, detail: detail.into() })
}

/// What lies on the far side of a boundary piece. Squares are indexed by
/// position in the packing (0-based); floor, walls and cuts act as
/// fictitious squares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Owner {
    Square(usize),
    Floor,
    LeftWall,
    RightWall,
    /// Fictitious ground below a cut segment; the index numbers the cut.
    Cut(usize),
    /// The virtual copy of a square serving as a lid.
    Virtual(usize),
}

impl Owner {
    pub fn square(&self) -> Option<usize> {
        match self {
            Owner::Square(i) | Owner::Virtual(i) => Some(*i),
            _ => None,
        }
    }
}

impl fmt::Display for Owner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Owner::Square(i) => write!(f, "#{}", i + 1),
            Owner::Floor => f.write_str("floor"),
            Owner::LeftWall => f.write_str("left wall"),
            Owner::RightWall => f.write_str("right wall"),
            Owner::Cut(c) => write!(f, "cut{c}"),
            Owner::Virtual(i) => write!(f, "#{}'", i + 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Left,
    Bottom,
    Right,
    Top,
}

impl Side {
    /// Side of the owner traced by a hole edge heading in `d`.
    fn of_edge(d: Dir) -> Side {
        match d {
            Dir::West => Side::Bottom,
            Dir::East => Side::Top,
            Dir::South => Side::Right,
            Dir::North => Side::Left,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Side::Left => "L",
            Side::Bottom => "B",
            Side::Right => "R",
            Side::Top => "T",
        };
        f.write_str(s)
    }
}

/// The connected part of the hole boundary shared with one owner, in
/// counterclockwise order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contribution {
    pub owner: Owner,
    pub edges: Vec<Edge>,
}

impl Contribution {
    pub fn start(&self) -> &Point {
        &self.edges[0].from
    }

    pub fn end(&self) -> &Point {
        &self.edges[self.edges.len() - 1].to
    }

    /// Total length contributed by one side of the owner.
    pub fn side_len(&self, side: Side) -> Scalar {
        self.edges.iter().filter(|e| Side::of_edge(e.dir()) == side).map(Edge::len).sum()
    }

    fn contains(&self, p: &Point) -> bool {
        self.edges.iter().any(|e| e.contains(p))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LidKind {
    Real,
    /// Lid is the copy of `up` placed over the cut `m`–`n`; `parent_diag` is
    /// the constant `c` of the diagonal `x + y = c` that caused the split.
    Virtual { up: usize, low: usize, m: Point, n: Point, parent_diag: Scalar },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hole {
    pub region: RectilinearRegion,
    /// Boundary owners Ã_1..Ã_k, starting with the lid.
    pub seq: Vec<Contribution>,
    pub lid: LidKind,
    /// Bodies of the fictitious owners (cuts and virtual lids) seen so far.
    pub bodies: Vec<(Owner, Rect)>,
}

impl Hole {
    pub fn area(&self) -> Scalar {
        self.region.area()
    }

    pub fn k(&self) -> usize {
        self.seq.len()
    }

    /// Contribution of Ã_i, 1-based and cyclic.
    pub fn a(&self, i: usize) -> &Contribution {
        &self.seq[(i + self.seq.len() - 1) % self.seq.len()]
    }

    /// `P_{i,i+1}`, where the boundary leaves Ã_i.
    pub fn transition(&self, i: usize) -> &Point {
        self.a(i).end()
    }

    /// Left end of the lid segment.
    pub fn p(&self) -> &Point {
        self.seq[0].end()
    }

    /// Right end of the lid segment.
    pub fn q(&self) -> &Point {
        self.seq[0].start()
    }

    pub fn touches_left(&self) -> bool {
        self.seq.iter().any(|c| c.owner == Owner::LeftWall)
    }

    pub fn touches_right(&self) -> bool {
        self.seq.iter().any(|c| c.owner == Owner::RightWall)
    }

    pub fn lid_owner(&self) -> Owner {
        self.seq[0].owner
    }
}

/// Geometry shared by all holes of one packing.
pub struct Frame<'a> {
    pub packing: &'a Packing,
    rects: Vec<Rect>,
    far: Scalar,
}

impl<'a> Frame<'a> {
    pub fn new(packing: &'a Packing) -> Self {
        let far = packing_height(packing) + Scalar::from_int(2);
        Frame { packing, rects: packing.obstacles(), far }
    }

    pub fn side(&self, i: usize) -> &Scalar {
        self.packing.placements()[i].side()
    }

    /// Body of an owner, with fictitious owners extended far outside.
    pub fn body(&self, owner: Owner, bodies: &[(Owner, Rect)]) -> Rect {
        let neg = -Scalar::one();
        match owner {
            Owner::Square(i) => self.rects[i].clone(),
            Owner::Floor => Rect::new(Scalar::zero(), Scalar::one(), neg, Scalar::zero()),
            Owner::LeftWall => Rect::new(neg.clone(), Scalar::zero(), neg, self.far.clone()),
            Owner::RightWall => Rect::new(Scalar::one(), Scalar::from_int(2), neg, self.far.clone()),
            Owner::Cut(_) | Owner::Virtual(_) => bodies
                .iter()
                .find(|(o, _)| *o == owner)
                .map(|(_, r)| r.clone())
                .expect("fictitious owner has a body"),
        }
    }

    fn candidates(&self, bodies: &[(Owner, Rect)]) -> Vec<(Owner, Rect)> {
        // Virtual lids shadow the bottom of their original; cuts only apply
        // where no real square does.
        let mut v: Vec<(Owner, Rect)> = bodies.iter().filter(|(o, _)| matches!(o, Owner::Virtual(_))).cloned().collect();
        v.extend(self.rects.iter().enumerate().map(|(i, r)| (Owner::Square(i), r.clone())));
        v.extend(bodies.iter().filter(|(o, _)| matches!(o, Owner::Cut(_))).cloned());
        for o in [Owner::Floor, Owner::LeftWall, Owner::RightWall] {
            v.push((o, self.body(o, bodies)));
        }
        v
    }
}

/// Which side of `r` an edge heading in `d` would trace, as (fixed
/// coordinate, varying range).
fn side_segment(r: &Rect, d: Dir) -> (&Scalar, &Scalar, &Scalar) {
    match d {
        Dir::West => (&r.ys.lo, &r.xs.lo, &r.xs.hi),
        Dir::East => (&r.ys.hi, &r.xs.lo, &r.xs.hi),
        Dir::South => (&r.xs.hi, &r.ys.lo, &r.ys.hi),
        Dir::North => (&r.xs.lo, &r.ys.lo, &r.ys.hi),
    }
}

/// Fictitious owners stand in for one side only.
fn traced_side(o: Owner, d: Dir) -> bool {
    match o {
        Owner::Square(_) => true,
        Owner::Virtual(_) => d == Dir::West,
        Owner::Floor | Owner::Cut(_) => d == Dir::East,
        Owner::LeftWall => d == Dir::South,
        Owner::RightWall => d == Dir::North,
    }
}

/// Splits the outer boundary of `region` into pieces with a single owner.
fn attribute(frame: &Frame, region: &RectilinearRegion, bodies: &[(Owner, Rect)]) -> Result<Vec<(Owner, Edge)>, AnalysisError> {
    if region.boundary_cycles().len() != 1 {
        return fail("simple hole", format!("{} boundary cycles", region.boundary_cycles().len()));
    }
    let cands = frame.candidates(bodies);
    let mut out = Vec::new();
    for e in region.outer_boundary() {
        let d = e.dir();
        let (fixed, lo, hi) = match d {
            Dir::West | Dir::East => (&e.from.y, (&e.from.x).min(&e.to.x), (&e.from.x).max(&e.to.x)),
            Dir::North | Dir::South => (&e.from.x, (&e.from.y).min(&e.to.y), (&e.from.y).max(&e.to.y)),
        };
        let touching: Vec<&(Owner, Rect)> = cands
            .iter()
            .filter(|(o, r)| {
                if !traced_side(*o, d) {
                    return false;
                }
                let (f, a, b) = side_segment(r, d);
                f == fixed && a < hi && lo < b
            })
            .collect();
        let mut cuts: Vec<Scalar> = vec![lo.clone(), hi.clone()];
        for (_, r) in &touching {
            let (_, a, b) = side_segment(r, d);
            for v in [a, b] {
                if lo < v && v < hi {
                    cuts.push(v.clone());
                }
            }
        }
        cuts.sort();
        cuts.dedup();
        if matches!(d, Dir::West | Dir::South) {
            cuts.reverse();
        }
        for w in cuts.windows(2) {
            let (s0, s1) = (&w[0], &w[1]);
            let (mlo, mhi) = ((s0).min(s1), (s0).max(s1));
            let owner = touching
                .iter()
                .find(|(_, r)| {
                    let (_, a, b) = side_segment(r, d);
                    a <= mlo && mhi <= b
                })
                .map(|(o, _)| *o);
            let Some(owner) = owner else {
                return fail("boundary attribution", format!("no owner for edge piece at {fixed}"));
            };
            let piece = match d {
                Dir::West | Dir::East => Edge { from: Point::new(s0.clone(), fixed.clone()), to: Point::new(s1.clone(), fixed.clone()) },
                Dir::North | Dir::South => Edge { from: Point::new(fixed.clone(), s0.clone()), to: Point::new(fixed.clone(), s1.clone()) },
            };
            out.push((owner, piece));
        }
    }
    Ok(out)
}

/// Builds a hole from a region. With `lid = None` the lid is derived: the
/// owner before the left wall, after the right wall, or of the topmost
/// boundary edge (leftmost on ties).
pub fn build_hole(
    frame: &Frame,
    region: RectilinearRegion,
    lid: Option<Owner>,
    kind: LidKind,
    bodies: Vec<(Owner, Rect)>,
) -> Result<Hole, AnalysisError> {
    let pieces = attribute(frame, &region, &bodies)?;
    let n = pieces.len();
    let wall_at = |w: Owner| pieces.iter().position(|(o, _)| *o == w);
    let lid = match lid {
        Some(o) => o,
        None => match (wall_at(Owner::LeftWall), wall_at(Owner::RightWall)) {
            (Some(_), Some(_)) => return fail("single wall", "hole touches both walls"),
            (Some(i), None) => {
                // The wall contribution may wrap; step back to its start.
                let mut j = i;
                while pieces[(j + n - 1) % n].0 == Owner::LeftWall {
                    j = (j + n - 1) % n;
                }
                pieces[(j + n - 1) % n].0
            }
            (None, Some(i)) => {
                let mut j = i;
                while pieces[(j + 1) % n].0 == Owner::RightWall {
                    j = (j + 1) % n;
                }
                pieces[(j + 1) % n].0
            }
            (None, None) => {
                let top = region.bbox().ys.hi;
                pieces
                    .iter()
                    .filter(|(_, e)| e.dir() == Dir::West && e.from.y == top)
                    .min_by(|a, b| a.1.to.x.cmp(&b.1.to.x))
                    .map(|(o, _)| *o)
                    .expect("a bounded region has a top edge")
            }
        },
    };
    let start = (0..n)
        .find(|&i| pieces[i].0 == lid && pieces[(i + n - 1) % n].0 != lid)
        .or_else(|| (pieces.iter().all(|(o, _)| *o == lid)).then_some(0));
    let Some(start) = start else {
        return fail("boundary attribution", format!("lid {lid} not on the boundary"));
    };
    let mut seq: Vec<Contribution> = Vec::new();
    for i in 0..n {
        let (owner, edge) = &pieces[(start + i) % n];
        match seq.last_mut() {
            Some(c) if c.owner == *owner => c.edges.push(edge.clone()),
            _ => seq.push(Contribution { owner: *owner, edges: vec![edge.clone()] }),
        }
    }
    let mut seen = BTreeSet::new();
    for c in &seq {
        let single = matches!(c.owner, Owner::Square(_) | Owner::Virtual(_) | Owner::LeftWall | Owner::RightWall);
        if single && !seen.insert(c.owner) {
            return fail("Lemma 1", format!("{} contributes more than one boundary curve", c.owner));
        }
    }
    Ok(Hole { region, seq, lid: kind, bodies })
}

/// Bounded free components below the closing square, one per hole.
pub fn extract_holes(closed: &Packing) -> Result<Vec<Hole>, AnalysisError> {
    let frame = Frame::new(closed);
    let ceiling = packing_height(closed) + Scalar::one();
    let regions = free_components(&closed.obstacles(), &ceiling)?;
    regions
        .into_iter()
        .map(|r| build_hole(&frame, r, None, LidKind::Real, Vec::new()))
        .collect()
}

/// Closes a BottomLeft packing and returns it with its holes.
pub fn close_and_extract(p: &Packing) -> Result<(Packing, Vec<Hole>), AnalysisError> {
    let closed = close_packing(p)?;
    let holes = extract_holes(&closed)?;
    Ok((closed, holes))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HoleType {
    TypeI,
    TypeII,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HoleKind {
    Interior(HoleType),
    LeftWall,
    RightWall,
}

impl fmt::Display for HoleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            HoleKind::Interior(HoleType::TypeI) => "type-I",
            HoleKind::Interior(HoleType::TypeII) => "type-II",
            HoleKind::LeftWall => "left-wall",
            HoleKind::RightWall => "right-wall",
        };
        f.write_str(s)
    }
}

/// `x` is a right neighbor of `y`.
fn right_of(x: &Rect, y: &Rect) -> bool {
    x.xs.lo == y.xs.hi && x.ys.overlaps_open(&y.ys)
}

/// `x` sits on top of `y`.
fn on_top_of(x: &Rect, y: &Rect) -> bool {
    x.ys.lo == y.ys.hi && x.xs.overlaps_open(&y.xs)
}

/// Type of an interior hole from the last two boundary owners.
pub fn classify_hole(frame: &Frame, h: &Hole) -> Result<HoleType, AnalysisError> {
    let k = h.k();
    if k < 3 {
        return fail("Lemma 3", format!("only {k} boundary owners"));
    }
    let last = frame.body(h.a(k).owner, &h.bodies);
    let prev = frame.body(h.a(k - 1).owner, &h.bodies);
    if right_of(&last, &prev) {
        Ok(HoleType::TypeI)
    } else if on_top_of(&last, &prev) {
        Ok(HoleType::TypeII)
    } else {
        fail("Lemma 3", format!("{} is neither right nor top neighbor of {}", h.a(k).owner, h.a(k - 1).owner))
    }
}

pub fn hole_kind(frame: &Frame, h: &Hole) -> Result<HoleKind, AnalysisError> {
    match (h.touches_left(), h.touches_right()) {
        (true, true) => fail("single wall", "hole touches both walls"),
        (true, false) => Ok(HoleKind::LeftWall),
        (false, true) => Ok(HoleKind::RightWall),
        (false, false) => classify_hole(frame, h).map(HoleKind::Interior),
    }
}

/// Start `P'` of the left diagonal: `P_{2,3}` if it lies on the right side
/// of Ã_2, otherwise the lower right corner of Ã_2.
pub fn diagonal_origin(frame: &Frame, h: &Hole) -> Point {
    let r = frame.body(h.a(2).owner, &h.bodies);
    let p = h.transition(2);
    if p.x == r.xs.hi && r.ys.lo <= p.y && p.y <= r.ys.hi {
        p.clone()
    } else {
        Point::new(r.xs.hi.clone(), r.ys.lo.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Crossing {
    /// The diagonal leaves Ã_i through its right side.
    A,
    /// The diagonal leaves Ã_i through its bottom side (corner included).
    B,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossingPoint {
    /// 0-based index into the hole sequence.
    pub index: usize,
    pub f: Point,
    pub case: Crossing,
}

/// First point, walking counterclockwise from `P`, where the diagonal
/// `x + y = c` leaves a boundary square through a side lying on ∂H.
pub fn find_crossing(frame: &Frame, h: &Hole, c: &Scalar, origin: &Point) -> Option<CrossingPoint> {
    for (index, con) in h.seq.iter().enumerate().skip(1) {
        let Owner::Square(_) = con.owner else { continue };
        let r = frame.body(con.owner, &h.bodies);
        if !(&(&r.xs.lo + &r.ys.lo) < c && c < &(&r.xs.hi + &r.ys.hi)) {
            continue;
        }
        let y_right = c - &r.xs.hi;
        let (f, case) = if y_right > r.ys.lo {
            (Point::new(r.xs.hi.clone(), y_right), Crossing::A)
        } else {
            (Point::new(c - &r.ys.lo, r.ys.lo.clone()), Crossing::B)
        };
        if f.x > origin.x && con.contains(&f) && enters_below_right(&h.region, &f) {
            return Some(CrossingPoint { index, f, case });
        }
    }
    None
}

/// Whether the ray from `f` with direction `(1, -1)` starts inside the region.
fn enters_below_right(region: &RectilinearRegion, f: &Point) -> bool {
    region.cells().iter().any(|c| c.xs.lo <= f.x && f.x < c.xs.hi && c.ys.lo < f.y && f.y <= c.ys.hi)
}

/// Bookkeeping shared by all splits of one packing.
#[derive(Debug, Default)]
pub struct SplitState {
    pub virtual_copies: BTreeSet<usize>,
    cuts: usize,
}

/// Splits `h` along the crossing into `(H*, H^(1))`.
pub fn split_once(
    frame: &Frame,
    h: &Hole,
    c: &Scalar,
    cp: &CrossingPoint,
    state: &mut SplitState,
) -> Result<(Hole, Hole), AnalysisError> {
    let k = h.k();
    let (iu, il) = match cp.case {
        Crossing::A => (cp.index - 1, cp.index),
        Crossing::B => (cp.index, (cp.index + 1) % k),
    };
    let (up, low) = match (h.seq[iu].owner, h.seq[il].owner) {
        (Owner::Square(u), Owner::Square(l)) => (u, l),
        (u, l) => return fail("Lemma 5", format!("up {u} and low {l} are not both real squares")),
    };
    let (ru, rl) = (frame.body(Owner::Square(up), &[]), frame.body(Owner::Square(low), &[]));
    if !(rl.ys.hi == ru.ys.lo && rl.xs.overlaps_open(&ru.xs)) {
        return fail("Lemma 5", format!("#{} is not a bottom neighbor of #{}", low + 1, up + 1));
    }
    let m = Point::new(rl.xs.hi.clone(), rl.ys.hi.clone());
    let Some(nx) = h.region.run_below(&m.x, &m.y) else {
        return fail("Lemma 6", format!("no unsupported section right of M = ({}, {})", m.x, m.y));
    };
    let n = Point::new(nx, m.y.clone());
    let a_up = frame.side(up).clone();
    if &n.x - &m.x >= a_up {
        return fail("Lemma 7", format!("|MN| = {} not below side {} of #{}", &n.x - &m.x, a_up, up + 1));
    }
    if !state.virtual_copies.insert(up) {
        return fail("virtual copy uniqueness", format!("#{} gets a second virtual copy", up + 1));
    }
    let pieces = h.region.split_horizontal(&m.y, &m.x, &n.x);
    if pieces.len() != 2 {
        return fail("Corollary 1", format!("cut MN yields {} pieces", pieces.len()));
    }
    let below = |r: &RectilinearRegion| {
        r.cells().iter().any(|cell| cell.ys.hi == m.y && cell.xs.lo >= m.x && cell.xs.hi <= n.x)
    };
    let (star, rest) = if below(&pieces[0]) {
        (pieces[0].clone(), pieces[1].clone())
    } else {
        (pieces[1].clone(), pieces[0].clone())
    };
    let cut = Owner::Cut(state.cuts);
    state.cuts += 1;
    let neg = -Scalar::one();
    let mut bodies = h.bodies.clone();
    bodies.push((cut, Rect::new(m.x.clone(), n.x.clone(), neg, m.y.clone())));
    bodies.push((
        Owner::Virtual(up),
        Rect::new(&n.x - &a_up, n.x.clone(), m.y.clone(), &m.y + &a_up),
    ));
    let kind = LidKind::Virtual { up, low, m, n, parent_diag: c.clone() };
    let star = build_hole(frame, star, Some(Owner::Virtual(up)), kind, bodies.clone())?;
    let rest = build_hole(frame, rest, Some(h.lid_owner()), h.lid.clone(), bodies)?;
    Ok((star, rest))
}

/// Splits a hole until no part of its boundary lies beyond its left
/// diagonal. Holes touching the left wall are returned unchanged.
pub fn split_hole(frame: &Frame, h: Hole, state: &mut SplitState) -> Result<Vec<Hole>, AnalysisError> {
    let mut out = Vec::new();
    let mut stack = vec![h];
    let mut guard = 0usize;
    while let Some(mut cur) = stack.pop() {
        if cur.touches_left() {
            out.push(cur);
            continue;
        }
        let origin = diagonal_origin(frame, &cur);
        let c = &origin.x + &origin.y;
        while let Some(cp) = find_crossing(frame, &cur, &c, &origin) {
            guard += 1;
            if guard > 4 * frame.packing.len() + 16 {
                return fail("split termination", "too many splits");
            }
            let (star, rest) = split_once(frame, &cur, &c, &cp, state)?;
            stack.push(star);
            cur = rest;
        }
        out.push(cur);
    }
    Ok(out)
}

/// One term `coef · len²` of a hole's area bound, attributed to a side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub owner: Owner,
    pub side: Side,
    pub len: Scalar,
    pub coef: Scalar,
}

impl Term {
    fn new(c: &Contribution, side: Side, coef: Scalar) -> Self {
        Term { owner: c.owner, side, len: c.side_len(side), coef }
    }

    pub fn value(&self) -> Scalar {
        &self.coef * &self.len.square()
    }
}

pub fn bound_terms(h: &Hole, kind: HoleKind) -> Vec<Term> {
    let (one, half) = (Scalar::one(), Scalar::one().half());
    let k = h.k();
    let lid = Term::new(h.a(1), Side::Bottom, one.clone());
    match kind {
        HoleKind::LeftWall => vec![lid, Term::new(h.a(k), Side::Left, half)],
        HoleKind::RightWall | HoleKind::Interior(HoleType::TypeI) => {
            vec![lid, Term::new(h.a(2), Side::Right, half)]
        }
        HoleKind::Interior(HoleType::TypeII) => vec![
            lid,
            Term::new(h.a(2), Side::Right, half.clone()),
            Term::new(h.a(k), Side::Bottom, one),
            Term::new(h.a(k - 1), Side::Left, half),
        ],
    }
}

pub fn hole_area_bound(h: &Hole, kind: HoleKind) -> Scalar {
    bound_terms(h, kind).iter().map(Term::value).sum()
}

/// The right diagonal from `Q'` must not enter the open hole.
pub fn check_right_diagonal(h: &Hole, t: HoleType) -> Result<(), AnalysisError> {
    let k = h.k();
    let qp = match t {
        HoleType::TypeI => h.transition(k - 1),
        HoleType::TypeII => h.transition(k - 2),
    };
    let d = &qp.y - &qp.x;
    for cell in h.region.cells() {
        let lo = (&cell.xs.lo).max(&(&cell.ys.lo - &d)).clone();
        let hi = (&cell.xs.hi).min(&(&cell.ys.hi - &d)).min(&qp.x).clone();
        if lo < hi {
            return fail("Lemma 4", format!("D_r from ({}, {}) enters the hole", qp.x, qp.y));
        }
    }
    Ok(())
}

/// Consecutive inner boundary squares step down or right.
fn check_inner_steps(frame: &Frame, h: &Hole) -> Result<(), AnalysisError> {
    let k = h.k();
    for i in 2..k.saturating_sub(1) {
        let (x, y) = (h.a(i).owner, h.a(i + 1).owner);
        if !(x.square().is_some() && y.square().is_some()) {
            continue;
        }
        let (rx, ry) = (frame.body(x, &h.bodies), frame.body(y, &h.bodies));
        let below = ry.ys.hi == rx.ys.lo && ry.xs.overlaps_open(&rx.xs);
        if !(below || right_of(&ry, &rx)) {
            return fail("Lemma 2", format!("{y} is neither bottom nor right neighbor of {x}"));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SideKey {
    pub square: usize,
    pub side: Side,
    pub virtual_copy: bool,
}

impl fmt::Display for SideKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = if self.virtual_copy { "'" } else { "" };
        write!(f, "#{}{}.{}", self.square + 1, mark, self.side)
    }
}

/// Charge on one side: the largest coefficient used and the area charged.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SideCharge {
    pub coef: Scalar,
    pub amount: Scalar,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HoleRecord {
    pub kind: HoleKind,
    pub k: usize,
    pub area: Scalar,
    pub bound: Scalar,
    pub terms: Vec<Term>,
    pub lid: LidKind,
    pub region: RectilinearRegion,
    /// Index of the extracted hole this piece was split from.
    pub source: usize,
    pub source_touches_right: bool,
}

/// An extracted hole whose analysis hit a lemma violation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HoleFailure {
    pub source: usize,
    pub touches_right: bool,
    pub area: Scalar,
    pub error: AnalysisError,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChargeLedger {
    pub sides: BTreeMap<SideKey, SideCharge>,
}

impl ChargeLedger {
    fn add(&mut self, owner: Owner, side: Side, coef: Scalar, amount: Scalar) -> Result<(), AnalysisError> {
        let (square, virtual_copy) = match owner {
            Owner::Square(i) => (i, false),
            Owner::Virtual(i) => (i, true),
            o => {
                if amount.is_positive() {
                    return fail("charge target", format!("{amount} charged to {o}"));
                }
                return Ok(());
            }
        };
        let e = self.sides.entry(SideKey { square, side, virtual_copy }).or_default();
        if e.coef < coef {
            e.coef = coef;
        }
        e.amount += amount;
        Ok(())
    }

    fn add_term(&mut self, t: &Term) -> Result<(), AnalysisError> {
        if t.len.is_zero() {
            return Ok(());
        }
        self.add(t.owner, t.side, t.coef.clone(), t.value())
    }

    fn merge(&mut self, other: &ChargeLedger) {
        for (k, c) in &other.sides {
            let e = self.sides.entry(*k).or_default();
            if e.coef < c.coef {
                e.coef = c.coef.clone();
            }
            e.amount += c.amount.clone();
        }
    }

    /// Total coefficient `c_i` of square `i`, virtual copy included.
    pub fn total(&self, i: usize) -> Scalar {
        self.sides.iter().filter(|(k, _)| k.square == i).map(|(_, c)| c.coef.clone()).sum()
    }

    pub fn charged(&self) -> Scalar {
        self.sides.values().map(|c| c.amount.clone()).sum()
    }
}

/// Charges of one diagonal-free hole.
fn charge_hole(frame: &Frame, h: &Hole, kind: HoleKind, terms: &[Term], ledger: &mut ChargeLedger) -> Result<(), AnalysisError> {
    let LidKind::Virtual { up, low, m, n, parent_diag } = &h.lid else {
        return terms.iter().try_for_each(|t| ledger.add_term(t));
    };
    let (ru, rl) = (frame.body(Owner::Square(*up), &[]), frame.body(Owner::Square(*low), &[]));
    let half = Scalar::one().half();
    let extends_left = ru.xs.lo < rl.xs.lo && kind != HoleKind::LeftWall;
    if !extends_left {
        // The lid charge moves from the copy to the original's bottom.
        ledger.add(Owner::Square(*up), Side::Bottom, terms[0].coef.clone(), terms[0].value())?;
        return terms[1..].iter().try_for_each(|t| ledger.add_term(t));
    }
    // The copy's bottom keeps half the lid term; the part of R_1 below the
    // parent diagonal goes to the right side of Ã_low (triangle) and to the
    // bottom of Ã_up (rest).
    let beta = &terms[0].len;
    ledger.add(Owner::Virtual(*up), Side::Bottom, half.clone(), &half * &beta.square())?;
    let origin = diagonal_origin(frame, h);
    if origin.y < m.y {
        let r1 = Rect::new(m.x.clone(), n.x.clone(), origin.y.clone(), m.y.clone());
        let below = r1.halfplane_area(&Scalar::one(), &Scalar::one(), parent_diag);
        let rho = ((&m.y).min(&(parent_diag - &m.x)) - &origin.y).max(Scalar::zero());
        let tri = &half * &rho.square();
        let rest = (&below - &tri).max(Scalar::zero());
        if tri.is_positive() {
            ledger.add(Owner::Square(*low), Side::Right, half.clone(), tri)?;
        }
        if rest.is_positive() {
            ledger.add(Owner::Square(*up), Side::Bottom, Scalar::one(), rest)?;
        }
    }
    terms[2..].iter().try_for_each(|t| ledger.add_term(t))
}

#[derive(Debug, Clone)]
pub struct BlAnalysis {
    pub packing: Packing,
    pub closed: Packing,
    /// Total area of the holes before splitting.
    pub hole_sum: Scalar,
    pub holes: Vec<HoleRecord>,
    pub failures: Vec<HoleFailure>,
    pub ledger: ChargeLedger,
    pub virtual_copies: BTreeSet<usize>,
}

/// Closes `p`, extracts and splits its holes, and charges them. A lemma
/// violation drops the affected hole into `failures`; numeric bounds are
/// left to [`BlAnalysis::checks`].
pub fn analyze_bottomleft(p: &Packing) -> Result<BlAnalysis, AnalysisError> {
    let (closed, raw) = close_and_extract(p)?;
    let frame = Frame::new(&closed);
    let hole_sum = raw.iter().map(Hole::area).sum();
    let mut state = SplitState::default();
    let mut holes = Vec::new();
    let mut failures = Vec::new();
    let mut ledger = ChargeLedger::default();
    for (source, h) in raw.into_iter().enumerate() {
        let touches_right = h.touches_right();
        let area = h.area();
        let mut local = ChargeLedger::default();
        match analyze_one(&frame, h, source, &mut state, &mut local) {
            Ok(parts) => {
                holes.extend(parts);
                ledger.merge(&local);
            }
            Err(error) => failures.push(HoleFailure { source, touches_right, area, error }),
        }
    }
    Ok(BlAnalysis { packing: p.clone(), closed, hole_sum, holes, failures, ledger, virtual_copies: state.virtual_copies })
}

fn analyze_one(
    frame: &Frame,
    h: Hole,
    source: usize,
    state: &mut SplitState,
    ledger: &mut ChargeLedger,
) -> Result<Vec<HoleRecord>, AnalysisError> {
    let source_touches_right = h.touches_right();
    let mut out = Vec::new();
    for part in split_hole(frame, h, state)? {
        let kind = hole_kind(frame, &part)?;
        if let HoleKind::Interior(t) = kind {
            check_right_diagonal(&part, t)?;
            check_inner_steps(frame, &part)?;
        }
        let terms = bound_terms(&part, kind);
        charge_hole(frame, &part, kind, &terms, ledger)?;
        out.push(HoleRecord {
            kind,
            k: part.k(),
            area: part.area(),
            bound: terms.iter().map(Term::value).sum(),
            terms,
            lid: part.lid.clone(),
            region: part.region,
            source,
            source_touches_right,
        });
    }
    Ok(out)
}

impl BlAnalysis {
    pub fn area_sum(&self) -> Scalar {
        self.packing.area_sum()
    }

    /// Largest total charge over all squares, with its square.
    pub fn max_charge(&self) -> Option<(usize, Scalar)> {
        (0..self.closed.len()).map(|i| (i, self.ledger.total(i))).max_by(|a, b| a.1.cmp(&b.1))
    }

    pub fn checks(&self) -> Vec<Check> {
        let mut out = Vec::new();
        let height = packing_height(&self.packing);
        let area = self.area_sum();
        out.push(Check::eq("height-identity", height.clone(), &area + &self.hole_sum));
        out.push(Check::eq("lemma-violations", Scalar::from_int(self.failures.len() as i64), Scalar::zero()));
        let split_sum: Scalar = self.holes.iter().map(|h| h.area.clone()).chain(self.failures.iter().map(|f| f.area.clone())).sum();
        out.push(Check::eq("split-preserves-area", split_sum, self.hole_sum.clone()));
        for (i, h) in self.holes.iter().enumerate() {
            out.push(Check::le(format!("hole-bound[{i}]"), h.area.clone(), h.bound.clone()));
        }
        let sides = self.closed.placements();
        for (key, c) in &self.ledger.sides {
            let cap = &c.coef * &sides[key.square].side().square();
            out.push(Check::le(format!("side-charge[{key}]"), c.amount.clone(), cap));
        }
        let cap = Scalar::from_int(5).half();
        let (who, max) = self.max_charge().unwrap_or((0, Scalar::zero()));
        out.push(Check::le(format!("max-charge[#{}]", who + 1), max, cap.clone()));
        let charged = self.ledger.charged();
        let weighted: Scalar = (0..sides.len()).map(|i| self.ledger.total(i) * sides[i].side().square()).sum();
        out.push(Check::le("holes-covered-by-charges", self.hole_sum.clone(), charged.clone()));
        out.push(Check::le("charges-within-coefficients", charged, weighted));
        out.push(Check::le("aggregate-hole-bound", self.hole_sum.clone(), &cap * &self.closed.area_sum()));
        let t1 = &(&Scalar::from_int(7).half() * &area) + &cap;
        out.push(Check::le("height-competitive-bound", height, t1));
        out
    }

    /// Human-readable summary followed by the check lines.
    pub fn report(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("n {}\nheight {}\narea_sum {}\nhole_sum {}\n", self.packing.len(), packing_height(&self.packing), self.area_sum(), self.hole_sum));
        for (i, h) in self.holes.iter().enumerate() {
            let lid = match &h.lid {
                LidKind::Real => "real".to_string(),
                LidKind::Virtual { up, .. } => format!("virtual #{}'", up + 1),
            };
            s.push_str(&format!("hole {i} {} k={} lid={lid} area {} bound {}\n", h.kind, h.k, h.area, h.bound));
        }
        for f in &self.failures {
            s.push_str(&format!("hole-failure source {} area {}: {}\n", f.source, f.area, f.error));
        }
        for (key, c) in &self.ledger.sides {
            s.push_str(&format!("charge {key} coef {} amount {}\n", c.coef, c.amount));
        }
        for c in self.checks() {
            s.push_str(&format!("{c}\n"));
        }
        s
    }
}
