//! Packing model and the independent verifier for the Tetris and gravity
//! constraints.
//!
//! Squares are closed; two squares overlap only if their interiors meet.
//! Support needs contact of positive length. A square may slide along the
//! sides of placed squares, so configuration obstacles are open rectangles.

use std::fmt;

use crate::geometry::{GeometryError, Interval, IntervalSet, Rect, StepProfile};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PackError {
    #[error("item {id}: side {side} is not in (0, 1]")]
    SideOutOfRange { id: usize, side: Scalar },
    #[error("x = {x} out of range for side {side}")]
    XOutOfRange { x: Scalar, side: Scalar },
    #[error("item {0}: no feasible position found")]
    NoPosition(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SquareItem {
    /// 1-based arrival index.
    pub id: usize,
    pub side: Scalar,
}

impl SquareItem {
    pub fn new(id: usize, side: Scalar) -> Result<Self, PackError> {
        if !side.is_positive() || side > Scalar::one() {
            return Err(PackError::SideOutOfRange { id, side });
        }
        Ok(SquareItem { id, side })
    }
}

/// Builds items with ids `1..=n` from a list of sides.
pub fn items_from_sides(sides: &[Scalar]) -> Result<Vec<SquareItem>, PackError> {
    sides.iter().enumerate().map(|(i, s)| SquareItem::new(i + 1, s.clone())).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Placement {
    pub item: SquareItem,
    /// Left edge.
    pub x: Scalar,
    /// Bottom edge.
    pub y: Scalar,
}

impl Placement {
    pub fn new(item: SquareItem, x: Scalar, y: Scalar) -> Self {
        Placement { item, x, y }
    }

    pub fn side(&self) -> &Scalar {
        &self.item.side
    }

    pub fn left(&self) -> &Scalar {
        &self.x
    }

    pub fn right(&self) -> Scalar {
        &self.x + &self.item.side
    }

    pub fn bottom(&self) -> &Scalar {
        &self.y
    }

    pub fn top(&self) -> Scalar {
        &self.y + &self.item.side
    }

    pub fn x_range(&self) -> Interval {
        Interval::new(self.x.clone(), self.right())
    }

    pub fn rect(&self) -> Rect {
        Rect::new(self.x.clone(), self.right(), self.y.clone(), self.top())
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{} side {} at ({}, {})", self.item.id, self.item.side, self.x, self.y)
    }
}

/// Placements in arrival order plus a cached skyline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packing {
    placements: Vec<Placement>,
    skyline: StepProfile,
    height: Scalar,
}

impl Default for Packing {
    fn default() -> Self {
        Packing::new()
    }
}

impl Packing {
    pub fn new() -> Self {
        Packing { placements: Vec::new(), skyline: StepProfile::flat(Scalar::zero()), height: Scalar::zero() }
    }

    pub fn from_placements(pls: impl IntoIterator<Item = Placement>) -> Self {
        let mut p = Packing::new();
        for pl in pls {
            p.push(pl);
        }
        p
    }

    /// Appends without validation; use [`verify_packing`] to check.
    pub fn push(&mut self, pl: Placement) {
        let top = pl.top();
        self.skyline.raise(&pl.x, &pl.right(), &top);
        if top > self.height {
            self.height = top;
        }
        self.placements.push(pl);
    }

    pub fn placements(&self) -> &[Placement] {
        &self.placements
    }

    pub fn len(&self) -> usize {
        self.placements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.placements.is_empty()
    }

    pub fn skyline(&self) -> &StepProfile {
        &self.skyline
    }

    pub fn obstacles(&self) -> Vec<Rect> {
        self.placements.iter().map(Placement::rect).collect()
    }

    pub fn area_sum(&self) -> Scalar {
        self.placements.iter().map(|pl| pl.side().square()).sum()
    }
}

pub fn packing_height(p: &Packing) -> Scalar {
    p.height.clone()
}

/// Landing height of a vertical drop from above the packing.
pub fn rest_height(p: &Packing, x: &Scalar, a: &Scalar) -> Result<Scalar, PackError> {
    let right = x + a;
    if x.is_negative() || right > Scalar::one() || !a.is_positive() {
        return Err(PackError::XOutOfRange { x: x.clone(), side: a.clone() });
    }
    Ok(p.skyline.max_over(&Interval::new(x.clone(), right))?)
}

pub fn is_supported(p: &Packing, pl: &Placement) -> bool {
    if pl.y.is_zero() {
        return true;
    }
    let xr = pl.x_range();
    p.placements
        .iter()
        .any(|q| q.top() == pl.y && q.x_range().overlap_len(&xr).is_positive())
}

/// First placed square whose interior meets `pl`'s interior.
pub fn first_overlap(p: &Packing, pl: &Placement) -> Option<usize> {
    let r = pl.rect();
    p.placements.iter().position(|q| q.rect().overlaps(&r))
}

/// One horizontal band of the reachable configuration set. A line band has
/// `upper == Some(lower)`; otherwise the band is the open slab
/// `lower < y < upper` (unbounded above when `upper` is `None`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachBand {
    pub upper: Option<Scalar>,
    pub lower: Scalar,
    pub xs: IntervalSet,
}

impl ReachBand {
    pub fn is_line(&self) -> bool {
        self.upper.as_ref() == Some(&self.lower)
    }

    fn covers(&self, y: &Scalar) -> bool {
        if self.is_line() {
            y == &self.lower
        } else {
            y > &self.lower && self.upper.as_ref().is_none_or(|u| y < u)
        }
    }
}

/// Reachable left-bottom corners for a square of a given side, as bands in
/// descending order of height.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachMap {
    pub side: Scalar,
    pub bands: Vec<ReachBand>,
}

impl ReachMap {
    pub fn contains(&self, x: &Scalar, y: &Scalar) -> bool {
        self.band_at(y).is_some_and(|b| b.xs.contains(x))
    }

    pub fn band_at(&self, y: &Scalar) -> Option<&ReachBand> {
        // Bands are sorted by descending `lower`; a slab and the line at its
        // lower end share the same `lower`.
        let idx = self.bands.partition_point(|b| &b.lower > y);
        self.bands[idx..].iter().take(2).find(|b| b.covers(y))
    }

    /// Reachable set on the line `y`, if `y` was a sweep event.
    pub fn line(&self, y: &Scalar) -> Option<&IntervalSet> {
        self.band_at(y).filter(|b| b.is_line()).map(|b| &b.xs)
    }
}

/// Configuration obstacle: open `(x0, x1) × (y0, y1)`.
struct CObstacle {
    x0: Scalar,
    x1: Scalar,
    y0: Scalar,
    y1: Scalar,
}

/// Downward sweep in configuration space. Stops after the band containing
/// `floor` (use zero for the full map) or when nothing is reachable.
pub fn reachable_positions_to(p: &Packing, a: &Scalar, floor: &Scalar) -> Result<ReachMap, PackError> {
    if !a.is_positive() || a > &Scalar::one() {
        return Err(PackError::SideOutOfRange { id: 0, side: a.clone() });
    }
    let xmax = Scalar::one() - a;
    let mut obs: Vec<CObstacle> = p
        .placements
        .iter()
        .map(|q| CObstacle { x0: &q.x - a, x1: q.right(), y0: &q.y - a, y1: q.top() })
        .filter(|o| o.x0 < xmax && o.x1.is_positive())
        .collect();
    obs.sort_by(|u, v| v.y1.cmp(&u.y1));
    let mut events: Vec<Scalar> = obs
        .iter()
        .flat_map(|o| [o.y1.clone(), o.y0.clone()])
        .filter(|y| !y.is_negative())
        .collect();
    events.push(Scalar::zero());
    events.sort_by(|u, v| v.cmp(u));
    events.dedup();

    let mut bands = Vec::new();
    let mut reach = IntervalSet::single(Scalar::zero(), xmax.clone());
    bands.push(ReachBand { upper: None, lower: events[0].clone(), xs: reach.clone() });
    let mut active: Vec<&CObstacle> = Vec::new();
    let mut next = 0;
    for (i, e) in events.iter().enumerate() {
        while next < obs.len() && &obs[next].y1 >= e {
            active.push(&obs[next]);
            next += 1;
        }
        active.retain(|o| &o.y0 < e);
        let on_line: Vec<(Scalar, Scalar)> =
            active.iter().filter(|o| &o.y1 > e).map(|o| (o.x0.clone(), o.x1.clone())).collect();
        let line = IntervalSet::complement_of_open(&Scalar::zero(), &xmax, &on_line).components_meeting(&reach);
        bands.push(ReachBand { upper: Some(e.clone()), lower: e.clone(), xs: line.clone() });
        if line.is_empty() || e <= floor || i + 1 == events.len() {
            break;
        }
        let below = &events[i + 1];
        let in_slab: Vec<(Scalar, Scalar)> = active.iter().map(|o| (o.x0.clone(), o.x1.clone())).collect();
        reach = IntervalSet::complement_of_open(&Scalar::zero(), &xmax, &in_slab).components_meeting(&line);
        bands.push(ReachBand { upper: Some(e.clone()), lower: below.clone(), xs: reach.clone() });
        if reach.is_empty() || below < floor {
            break;
        }
    }
    Ok(ReachMap { side: a.clone(), bands })
}

pub fn reachable_positions(p: &Packing, a: &Scalar) -> Result<ReachMap, PackError> {
    reachable_positions_to(p, a, &Scalar::zero())
}

pub fn is_tetris_reachable(p: &Packing, pl: &Placement) -> bool {
    match reachable_positions_to(p, pl.side(), &pl.y) {
        Ok(map) => map.contains(&pl.x, &pl.y),
        Err(_) => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    OutOfStrip,
    Overlap,
    Unsupported,
    Unreachable,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationKind::OutOfStrip => "out-of-strip",
            ViolationKind::Overlap => "overlap",
            ViolationKind::Unsupported => "unsupported",
            ViolationKind::Unreachable => "unreachable",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// 1-based replay step.
    pub step: usize,
    pub kind: ViolationKind,
    /// For overlaps, the id of the square that was hit.
    pub other: Option<usize>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at step {}", self.kind, self.step)?;
        if let Some(o) = self.other {
            write!(f, " (with #{o})")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepVerdict {
    pub in_strip: bool,
    pub overlap_free: bool,
    pub supported: bool,
    pub reachable: bool,
}

impl StepVerdict {
    pub fn ok(&self) -> bool {
        self.in_strip && self.overlap_free && self.supported && self.reachable
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationReport {
    pub steps: Vec<StepVerdict>,
    pub first_violation: Option<Violation>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.first_violation.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VerifyError {
    #[error("{items} items but {placements} placements")]
    LengthMismatch { items: usize, placements: usize },
    #[error("step {step}: placement is for item {found}, expected {expected}")]
    IdMismatch { step: usize, expected: usize, found: usize },
    #[error("step {step}: side differs from the item's side")]
    SideMismatch { step: usize },
}

/// Replays the arrivals and checks every step. Replay stops at the first
/// violation.
pub fn verify_packing(seq: &[SquareItem], pls: &[Placement]) -> Result<VerificationReport, VerifyError> {
    if seq.len() != pls.len() {
        return Err(VerifyError::LengthMismatch { items: seq.len(), placements: pls.len() });
    }
    let mut p = Packing::new();
    let mut steps = Vec::with_capacity(pls.len());
    for (i, (item, pl)) in seq.iter().zip(pls).enumerate() {
        let step = i + 1;
        if item.id != pl.item.id {
            return Err(VerifyError::IdMismatch { step, expected: item.id, found: pl.item.id });
        }
        if item.side != pl.item.side {
            return Err(VerifyError::SideMismatch { step });
        }
        let in_strip = !pl.x.is_negative() && pl.right() <= Scalar::one() && !pl.y.is_negative();
        let hit = if in_strip { first_overlap(&p, pl) } else { None };
        let overlap_free = hit.is_none();
        let supported = in_strip && overlap_free && is_supported(&p, pl);
        let reachable = supported && is_tetris_reachable(&p, pl);
        let verdict = StepVerdict { in_strip, overlap_free, supported, reachable };
        steps.push(verdict);
        let kind = if !in_strip {
            Some(ViolationKind::OutOfStrip)
        } else if !overlap_free {
            Some(ViolationKind::Overlap)
        } else if !supported {
            Some(ViolationKind::Unsupported)
        } else if !reachable {
            Some(ViolationKind::Unreachable)
        } else {
            None
        };
        if let Some(kind) = kind {
            let other = hit.map(|j| p.placements[j].item.id);
            return Ok(VerificationReport { steps, first_violation: Some(Violation { step, kind, other }) });
        }
        p.push(pl.clone());
    }
    Ok(VerificationReport { steps, first_violation: None })
}

/// Convenience wrapper: verifies a packing against its own items.
pub fn verify(p: &Packing) -> VerificationReport {
    let seq: Vec<SquareItem> = p.placements.iter().map(|pl| pl.item.clone()).collect();
    verify_packing(&seq, &p.placements).expect("items taken from the placements")
}

/// An online strategy: places each arriving square into its own packing.
pub trait Strategy {
    fn name(&self) -> &'static str;
    fn packing(&self) -> &Packing;
    fn place(&mut self, item: &SquareItem) -> Result<Placement, PackError>;
}

/// Feeds a whole sequence to a strategy.
pub fn run_strategy<S: Strategy + ?Sized>(s: &mut S, seq: &[SquareItem]) -> Result<Packing, PackError> {
    for item in seq {
        s.place(item)?;
    }
    Ok(s.packing().clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q;
    use proptest::prelude::{prop_assert, prop_assume, proptest, Strategy as _};

    fn pl(id: usize, side: Scalar, x: Scalar, y: Scalar) -> Placement {
        Placement::new(SquareItem::new(id, side).unwrap(), x, y)
    }

    fn packing(v: &[(Scalar, Scalar, Scalar)]) -> Packing {
        Packing::from_placements(v.iter().enumerate().map(|(i, (x, y, s))| pl(i + 1, s.clone(), x.clone(), y.clone())))
    }

    #[test]
    fn rest_height_examples() {
        let empty = Packing::new();
        assert_eq!(rest_height(&empty, &q(0, 1), &q(1, 2)).unwrap(), q(0, 1));
        let one = packing(&[(q(0, 1), q(0, 1), q(1, 2))]);
        assert_eq!(rest_height(&one, &q(1, 2), &q(1, 2)).unwrap(), q(0, 1));
        let two = packing(&[(q(0, 1), q(0, 1), q(1, 2)), (q(1, 2), q(0, 1), q(1, 2))]);
        assert_eq!(rest_height(&two, &q(0, 1), &q(3, 5)).unwrap(), q(1, 2));
        assert!(rest_height(&two, &q(1, 2), &q(3, 5)).is_err());
    }

    #[test]
    fn support_examples() {
        let empty = Packing::new();
        assert!(is_supported(&empty, &pl(1, q(1, 1), q(0, 1), q(0, 1))));
        let one = packing(&[(q(0, 1), q(0, 1), q(1, 2))]);
        assert!(is_supported(&one, &pl(2, q(1, 4), q(1, 4), q(1, 2))));
        assert!(!is_supported(&one, &pl(2, q(1, 4), q(1, 2), q(1, 2))));
    }

    #[test]
    fn reach_empty_strip() {
        let map = reachable_positions(&Packing::new(), &q(1, 2)).unwrap();
        assert!(map.contains(&q(0, 1), &q(0, 1)));
        assert!(map.contains(&q(1, 2), &q(7, 1)));
        assert!(!map.contains(&q(3, 4), &q(0, 1)));
    }

    #[test]
    fn reach_slides_along_touching_side() {
        let one = packing(&[(q(0, 1), q(0, 1), q(1, 2))]);
        let map = reachable_positions(&one, &q(1, 2)).unwrap();
        assert_eq!(map.line(&q(0, 1)).unwrap(), &IntervalSet::single(q(1, 2), q(1, 2)));
    }

    fn towers() -> Packing {
        packing(&[
            (q(0, 1), q(0, 1), q(2, 5)),
            (q(0, 1), q(2, 5), q(2, 5)),
            (q(3, 5), q(0, 1), q(2, 5)),
            (q(3, 5), q(2, 5), q(2, 5)),
        ])
    }

    #[test]
    fn narrow_gap_is_unreachable() {
        let p = towers();
        let map = reachable_positions(&p, &q(1, 4)).unwrap();
        // The gap is 1/5 wide, so no left edge in (2/5 - 1/4, 3/5) survives at the floor.
        let floor = map.band_at(&q(0, 1)).map(|b| b.xs.clone()).unwrap_or_default();
        assert!(floor.intersect(&IntervalSet::single(q(3, 20), q(3, 5))).intervals().iter().all(|iv| iv.is_point()));
        assert!(!is_tetris_reachable(&p, &pl(5, q(1, 4), q(9, 20), q(0, 1))));
        assert!(is_tetris_reachable(&p, &pl(5, q(1, 4), q(0, 1), q(4, 5))));
    }

    #[test]
    fn sealed_lid_blocks() {
        let p = packing(&[(q(0, 1), q(0, 1), q(1, 2)), (q(1, 2), q(0, 1), q(1, 2)), (q(0, 1), q(1, 2), q(1, 1))]);
        assert!(!is_tetris_reachable(&p, &pl(4, q(1, 4), q(0, 1), q(1, 2) + q(1, 100))));
        assert!(is_tetris_reachable(&p, &pl(4, q(1, 4), q(0, 1), q(3, 2))));
    }

    #[test]
    fn height_examples() {
        assert_eq!(packing_height(&Packing::new()), q(0, 1));
        assert_eq!(packing_height(&packing(&[(q(0, 1), q(0, 1), q(1, 1))])), q(1, 1));
        assert_eq!(packing_height(&packing(&[(q(0, 1), q(0, 1), q(1, 2)), (q(0, 1), q(1, 2), q(1, 2))])), q(1, 1));
    }

    #[test]
    fn verify_examples() {
        let a = SquareItem::new(1, q(1, 1)).unwrap();
        let r = verify_packing(std::slice::from_ref(&a), &[Placement::new(a.clone(), q(0, 1), q(0, 1))]).unwrap();
        assert!(r.passed());

        let items = items_from_sides(&[q(1, 2), q(1, 2)]).unwrap();
        let pls = vec![
            Placement::new(items[0].clone(), q(0, 1), q(0, 1)),
            Placement::new(items[1].clone(), q(1, 4), q(0, 1)),
        ];
        let v = verify_packing(&items, &pls).unwrap().first_violation.unwrap();
        assert_eq!((v.step, v.kind, v.other), (2, ViolationKind::Overlap, Some(1)));

        let items = items_from_sides(&[q(1, 2)]).unwrap();
        let pls = vec![Placement::new(items[0].clone(), q(0, 1), q(1, 2))];
        let v = verify_packing(&items, &pls).unwrap().first_violation.unwrap();
        assert_eq!(v.kind, ViolationKind::Unsupported);

        assert!(matches!(verify_packing(&items, &[]), Err(VerifyError::LengthMismatch { .. })));
    }

    fn arb_packing() -> impl proptest::strategy::Strategy<Value = Packing> {
        proptest::collection::vec((1i64..=8, 0i64..16, 0i64..16), 0..8).prop_map(|v| {
            let mut p = Packing::new();
            for (s, x, y) in v {
                let side = q(s, 16);
                let x = q(x.min(16 - s), 16);
                let cand = pl(p.len() + 1, side, x, q(y, 16));
                if first_overlap(&p, &cand).is_none() {
                    p.push(cand);
                }
            }
            p
        })
    }

    proptest! {
        #[test]
        fn rest_height_never_decreases(p in arb_packing(), extra in (1i64..=8, 0i64..16, 0i64..16), s in 1i64..=16, x in 0i64..16) {
            let a = q(s, 16);
            let x = q(x.min(16 - s), 16);
            let before = rest_height(&p, &x, &a).unwrap();
            let mut bigger = p.clone();
            let side = q(extra.0, 16);
            let ex = q(extra.1.min(16 - extra.0), 16);
            let cand = pl(p.len() + 1, side, ex, q(extra.2, 16));
            if first_overlap(&p, &cand).is_none() {
                bigger.push(cand);
            }
            prop_assert!(rest_height(&bigger, &x, &a).unwrap() >= before);
        }

        #[test]
        fn removing_a_square_never_shrinks_reach(p in arb_packing(), s in 1i64..=8, drop in 0usize..8) {
            prop_assume!(!p.is_empty());
            let a = q(s, 16);
            let full = reachable_positions(&p, &a).unwrap();
            let kept: Vec<Placement> = p.placements().iter().enumerate().filter(|(i, _)| *i != drop % p.len()).map(|(_, q)| q.clone()).collect();
            let fewer = reachable_positions(&Packing::from_placements(kept), &a).unwrap();
            for xi in 0..=(16 - s) {
                for yi in 0..40 {
                    let (x, y) = (q(xi, 16), q(yi, 16));
                    if full.contains(&x, &y) {
                        prop_assert!(fewer.contains(&x, &y));
                    }
                }
            }
        }
    }
}
