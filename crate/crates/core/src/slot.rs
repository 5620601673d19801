//! The slot strategy: round each side up to a power of 1/2, pick the slot of
//! that width where the square lands lowest, and drop it along the slot's
//! left boundary.

use std::fmt;

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use crate::geometry::Interval;
use crate::packing::{rest_height, PackError, Packing, Placement, SquareItem, Strategy};
use crate::scalar::Scalar;

/// Deepest level kept in the height tree. Finer slots are still handled,
/// just without the cached bounds.
pub const MAX_TREE_LEVEL: u32 = 12;

/// Returns `(k, 2^-k)` with `2^-k >= a > 2^-(k+1)`.
pub fn round_to_dyadic(a: &Scalar) -> (u32, Scalar) {
    assert!(a.is_positive() && a <= &Scalar::one(), "side {a} not in (0, 1]");
    let mut k = 0;
    while a <= &Scalar::pow2_neg(k + 1) {
        k += 1;
    }
    (k, Scalar::pow2_neg(k))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SlotId {
    pub level: u32,
    pub index: u64,
}

impl SlotId {
    pub fn new(level: u32, index: u64) -> Self {
        assert!(level < 63 && index < (1u64 << level), "slot ({level},{index}) does not exist");
        SlotId { level, index }
    }

    pub fn width(&self) -> Scalar {
        Scalar::pow2_neg(self.level)
    }

    pub fn left(&self) -> Scalar {
        Scalar::from_int(self.index as i64) * self.width()
    }

    pub fn right(&self) -> Scalar {
        Scalar::from_int(self.index as i64 + 1) * self.width()
    }

    pub fn x_range(&self) -> Interval {
        Interval::new(self.left(), self.right())
    }

    /// The slot one level up that contains this one.
    pub fn parent(&self) -> Option<SlotId> {
        (self.level > 0).then(|| SlotId::new(self.level - 1, self.index / 2))
    }

    /// The slot of the given level containing this slot's left boundary.
    pub fn ancestor(&self, level: u32) -> SlotId {
        assert!(level <= self.level);
        SlotId::new(level, self.index >> (self.level - level))
    }
}

impl fmt::Display for SlotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.level, self.index)
    }
}

/// Packing plus a dyadic tree holding, for every slot, the highest top over
/// the slot's open x-interior.
#[derive(Debug, Clone)]
pub struct SlotState {
    packing: Packing,
    tree: Vec<Vec<Scalar>>,
    slots: Vec<SlotId>,
}

impl Default for SlotState {
    fn default() -> Self {
        SlotState::new()
    }
}

impl SlotState {
    pub fn new() -> Self {
        SlotState { packing: Packing::new(), tree: vec![vec![Scalar::zero()]], slots: Vec::new() }
    }

    pub fn packing(&self) -> &Packing {
        &self.packing
    }

    /// Slot chosen for each placement, in arrival order.
    pub fn slots(&self) -> &[SlotId] {
        &self.slots
    }

    pub fn tree_depth(&self) -> u32 {
        self.tree.len() as u32 - 1
    }

    fn ensure_level(&mut self, k: u32) {
        let k = k.min(MAX_TREE_LEVEL);
        while self.tree_depth() < k {
            let level = self.tree_depth() + 1;
            let row = (0..1u64 << level)
                .map(|j| self.measure(SlotId::new(level, j)))
                .collect();
            self.tree.push(row);
        }
    }

    /// Highest top over the slot's open interior, from raw geometry.
    pub fn measure(&self, s: SlotId) -> Scalar {
        rest_height(&self.packing, &s.left(), &s.width()).expect("slot inside the strip")
    }

    /// Cached slot height, if the slot's level is in the tree.
    pub fn cached(&self, s: SlotId) -> Option<&Scalar> {
        self.tree.get(s.level as usize).map(|row| &row[s.index as usize])
    }

    fn record(&mut self, pl: &Placement) {
        let top = pl.top();
        let xr = pl.x_range();
        for (level, row) in self.tree.iter_mut().enumerate() {
            let w = Scalar::pow2_neg(level as u32);
            let first = (&xr.lo / &w).floor();
            let last = (&xr.hi / &w).floor();
            let (first, last) = (to_index(&first), to_index(&last).min(row.len() as u64 - 1));
            for j in first..=last {
                let slot = Interval::new(Scalar::from_int(j as i64) * w.clone(), Scalar::from_int(j as i64 + 1) * w.clone());
                if slot.overlaps_open(&xr) && row[j as usize] < top {
                    row[j as usize] = top.clone();
                }
            }
        }
    }

    /// First slot whose cached height disagrees with the geometry.
    pub fn check_tree(&self) -> Option<SlotId> {
        for (level, row) in self.tree.iter().enumerate() {
            for (j, h) in row.iter().enumerate() {
                let s = SlotId::new(level as u32, j as u64);
                if &self.measure(s) != h {
                    return Some(s);
                }
            }
        }
        None
    }
}

fn to_index(n: &BigInt) -> u64 {
    n.to_u64().expect("slot index fits in u64")
}

/// Among the level-`k` slots, the one where a square of side `a` dropped
/// along the left boundary lands lowest; ties go to the smallest index.
pub fn choose_slot(s: &SlotState, k: u32, a: &Scalar) -> (SlotId, Scalar) {
    let mut best: Option<(SlotId, Scalar)> = None;
    for j in 0..1u64 << k {
        let slot = SlotId::new(k, j);
        // The square covers the slot's left half, so that half's height is a
        // lower bound for the landing height.
        if let (Some((_, h)), Some(lb)) = (&best, s.cached(SlotId::new(k + 1, 2 * j))) {
            if lb >= h {
                continue;
            }
        }
        let h = rest_height(&s.packing, &slot.left(), a).expect("square fits its slot");
        if best.as_ref().is_none_or(|(_, b)| &h < b) {
            best = Some((slot, h));
        }
    }
    best.expect("level has at least one slot")
}

/// Places `item` and updates the state.
pub fn slot_place_next(s: &mut SlotState, item: &SquareItem) -> Result<(Placement, SlotId), PackError> {
    let (k, _) = round_to_dyadic(&item.side);
    s.ensure_level(k + 1);
    let (slot, y) = choose_slot(s, k, &item.side);
    let pl = Placement::new(item.clone(), slot.left(), y);
    s.record(&pl);
    s.packing.push(pl.clone());
    s.slots.push(slot);
    Ok((pl, slot))
}

pub fn slot_run(seq: &[SquareItem]) -> Result<SlotState, PackError> {
    let mut s = SlotState::new();
    for item in seq {
        slot_place_next(&mut s, item)?;
    }
    Ok(s)
}

/// Appends the side-1 closing square by the slot rule.
pub fn close_slot_packing(s: &SlotState) -> Result<SlotState, PackError> {
    let mut closed = s.clone();
    let item = SquareItem::new(s.packing.len() + 1, Scalar::one())?;
    slot_place_next(&mut closed, &item)?;
    Ok(closed)
}

#[derive(Debug, Clone, Default)]
pub struct SlotAlgorithm {
    state: SlotState,
}

impl SlotAlgorithm {
    pub fn new() -> Self {
        SlotAlgorithm { state: SlotState::new() }
    }

    pub fn state(&self) -> &SlotState {
        &self.state
    }
}

impl Strategy for SlotAlgorithm {
    fn name(&self) -> &'static str {
        "slot"
    }

    fn packing(&self) -> &Packing {
        &self.state.packing
    }

    fn place(&mut self, item: &SquareItem) -> Result<Placement, PackError> {
        slot_place_next(&mut self.state, item).map(|(pl, _)| pl)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packing::{is_supported, items_from_sides, packing_height, verify};
    use crate::scalar::q;
    use proptest::prelude::{prop_assert, prop_assert_eq, proptest, Strategy as _};

    fn run(sides: &[Scalar]) -> SlotState {
        slot_run(&items_from_sides(sides).unwrap()).unwrap()
    }

    #[test]
    fn rounding_examples() {
        assert_eq!(round_to_dyadic(&q(1, 1)), (0, q(1, 1)));
        assert_eq!(round_to_dyadic(&q(1, 4)), (2, q(1, 4)));
        assert_eq!(round_to_dyadic(&q(26, 100)), (1, q(1, 2)));
        assert_eq!(round_to_dyadic(&(q(1, 2) + q(1, 100))), (0, q(1, 1)));
    }

    #[test]
    fn choose_slot_examples() {
        let s = SlotState::new();
        assert_eq!(choose_slot(&s, 1, &q(1, 2)).0, SlotId::new(1, 0));
        let s = run(&[q(1, 2)]);
        assert_eq!(choose_slot(&s, 1, &q(1, 2)).0, SlotId::new(1, 1));
        let s = run(&[q(1, 2), q(1, 2)]);
        assert_eq!(choose_slot(&s, 2, &q(1, 4)), (SlotId::new(2, 0), q(1, 2)));
    }

    #[test]
    fn place_examples() {
        let s = run(&[q(3, 10), q(3, 10), q(1, 5)]);
        let xy: Vec<_> = s.packing().placements().iter().map(|p| (p.x.clone(), p.y.clone())).collect();
        assert_eq!(xy, vec![(q(0, 1), q(0, 1)), (q(1, 2), q(0, 1)), (q(0, 1), q(3, 10))]);
    }

    #[test]
    fn run_examples() {
        assert_eq!(packing_height(run(&[q(1, 1)]).packing()), q(1, 1));
        let s = run(&[q(1, 2), q(1, 2), q(1, 2)]);
        assert_eq!(s.packing().placements()[2].y, q(1, 2));
        assert_eq!(packing_height(s.packing()), q(1, 1));
        let s = run(&vec![q(17, 64); 8]);
        assert_eq!(packing_height(s.packing()), q(17, 16));
    }

    #[test]
    fn drop_uses_the_true_footprint() {
        // Three eighths stack in slot (3,3) to 3/8 while the footprint of the
        // last square only meets the first square's top at 26/100. Dropping
        // to the whole-slot height 3/8 would leave it unsupported.
        let mut sides = vec![q(26, 100), q(1, 2)];
        sides.extend(vec![q(1, 8); 3]);
        sides.push(q(26, 100));
        let s = run(&sides);
        let last = &s.packing().placements()[5];
        assert_eq!((last.x.clone(), last.y.clone()), (q(0, 1), q(26, 100)));
        assert_eq!(s.cached(SlotId::new(1, 0)), Some(&(q(26, 100) + q(26, 100))));
        assert!(verify(s.packing()).passed());
        assert_eq!(s.check_tree(), None);
    }

    fn arb_sides() -> impl proptest::strategy::Strategy<Value = Vec<Scalar>> {
        proptest::collection::vec(1i64..=64, 1..24).prop_map(|v| v.into_iter().map(|k| q(k, 64)).collect())
    }

    proptest! {
        #[test]
        fn tree_matches_geometry_and_placements_are_valid(sides in arb_sides()) {
            let mut s = SlotState::new();
            for item in items_from_sides(&sides).unwrap() {
                let (pl, slot) = slot_place_next(&mut s, &item).unwrap();
                prop_assert_eq!(s.check_tree(), None);
                prop_assert!(pl.right() <= slot.right());
                let rest = Packing::from_placements(s.packing().placements()[..s.packing().len() - 1].iter().cloned());
                prop_assert!(is_supported(&rest, &pl));
            }
            prop_assert!(verify(s.packing()).passed());
        }
    }
}
