//! Shadows, widenings and charged regions of slot packings.
//!
//! Every point below the closing square that lies in no widening is charged
//! to the first widening met by the vertical ray going up from it.

use std::collections::BTreeSet;

use crate::geometry::{Interval, IntervalSet, Rect};
use crate::packing::{packing_height, PackError, Packing, Placement, SquareItem};
use crate::report::Check;
use crate::scalar::Scalar;
use crate::slot::{close_slot_packing, slot_run, SlotId, SlotState};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SlotAnalysisError {
    #[error("points over [{0}, {1}] reach no widening")]
    Uncovered(Scalar, Scalar),
    #[error(transparent)]
    Pack(#[from] PackError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shadow {
    pub parts: Vec<Rect>,
    /// Distance from the right side to the right boundary of the parent
    /// slot; `None` for sides above one half.
    pub delta: Option<Scalar>,
    /// Enlargement to the right.
    pub delta_prime: Scalar,
    /// Whether the strip cut part of the enlargement off.
    pub clipped: bool,
}

impl Shadow {
    pub fn area(&self) -> Scalar {
        self.parts.iter().map(Rect::area).sum()
    }
}

/// Shadow of a square placed in `slot`.
pub fn shadow_of(pl: &Placement, slot: SlotId) -> Shadow {
    let a = pl.side();
    let (x, y, t) = (&pl.x, &pl.y, pl.top());
    let band = |lo: Scalar, hi: Scalar| Rect::new(lo, hi, y.clone(), t.clone());
    let half = Scalar::one().half();
    if a > &half {
        let end = &pl.right() + a;
        let one = Scalar::one();
        let clipped = end > one;
        let hi = end.min(one);
        let parts = if hi > pl.right() { vec![band(pl.right(), hi)] } else { Vec::new() };
        return Shadow { parts, delta: None, delta_prime: a.clone(), clipped };
    }
    let parent = slot.parent().expect("sides up to one half sit below level 0");
    let delta = &parent.right() - &pl.right();
    let dp = a.clone().min(delta.clone());
    let left = a - &dp;
    let mut parts = Vec::new();
    if left.is_positive() {
        parts.push(band(x - &left, x.clone()));
    }
    if dp.is_positive() {
        parts.push(band(pl.right(), &pl.right() + &dp));
    }
    Shadow { parts, delta: Some(delta), delta_prime: dp, clipped: false }
}

/// `(A ∪ A^S) ∩ T` as a rectangle.
pub fn widening_of(pl: &Placement, slot: SlotId, shadow: &Shadow) -> Rect {
    let mut lo = pl.x.clone();
    let mut hi = pl.right();
    for r in &shadow.parts {
        lo = lo.min(r.xs.lo.clone());
        hi = hi.max(r.xs.hi.clone());
    }
    let t = slot.x_range();
    Rect::new(lo.max(t.lo), hi.min(t.hi), pl.y.clone(), pl.top())
}

/// Which points escape charging.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChargeRule {
    /// Points outside every widening are charged.
    #[default]
    Widening,
    /// Points inside a shadow are not charged either.
    Shadow,
}

#[derive(Debug, Clone)]
pub struct ChargeMap {
    pub shadows: Vec<Shadow>,
    pub widenings: Vec<Rect>,
    /// Charged region of each square, as rectangles.
    pub regions: Vec<Vec<Rect>>,
    pub areas: Vec<Scalar>,
    /// Bottom of the closing square.
    pub limit: Scalar,
    /// Area below `limit` that is not charged.
    pub covered: Scalar,
}

/// Charged regions of a closed slot packing.
pub fn charge_map(closed: &SlotState) -> Result<ChargeMap, SlotAnalysisError> {
    charge_map_with(closed, ChargeRule::Widening)
}

pub fn charge_map_with(closed: &SlotState, rule: ChargeRule) -> Result<ChargeMap, SlotAnalysisError> {
    let pls = closed.packing().placements();
    let n = pls.len();
    let shadows: Vec<Shadow> = pls.iter().zip(closed.slots()).map(|(pl, s)| shadow_of(pl, *s)).collect();
    let widenings: Vec<Rect> =
        pls.iter().zip(closed.slots()).zip(&shadows).map(|((pl, s), sh)| widening_of(pl, *s, sh)).collect();
    let limit = pls.last().map_or(Scalar::zero(), |pl| pl.y.clone());

    let mut xs: BTreeSet<Scalar> = BTreeSet::from([Scalar::zero(), Scalar::one()]);
    for w in &widenings {
        xs.insert(w.xs.lo.clone());
        xs.insert(w.xs.hi.clone());
    }
    let shadow_parts: Vec<&Rect> = match rule {
        ChargeRule::Widening => Vec::new(),
        ChargeRule::Shadow => shadows.iter().flat_map(|sh| &sh.parts).collect(),
    };
    for r in &shadow_parts {
        xs.insert(r.xs.lo.clone());
        xs.insert(r.xs.hi.clone());
    }
    let xs: Vec<Scalar> = xs.into_iter().collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| widenings[i].ys.lo.cmp(&widenings[j].ys.lo).then(i.cmp(&j)));

    let mut regions = vec![Vec::new(); n];
    let mut areas = vec![Scalar::zero(); n];
    let mut covered = Scalar::zero();
    for w in xs.windows(2) {
        let slab = Interval::new(w[0].clone(), w[1].clone());
        let width = slab.len();
        let shade = IntervalSet::from_intervals(
            shadow_parts.iter().filter(|r| r.xs.overlaps_open(&slab)).map(|r| r.ys.clone()).collect(),
        );
        let mut top = Scalar::zero();
        for &i in &order {
            let r = &widenings[i];
            if !r.xs.overlaps_open(&slab) || top >= limit {
                continue;
            }
            if r.ys.lo > top {
                let gap = IntervalSet::single(top.clone(), r.ys.lo.clone());
                covered += &width * &gap.intersect(&shade).total_len();
                for iv in gap.subtract(&shade).intervals().iter().filter(|iv| !iv.is_point()) {
                    let piece = Rect::new(slab.lo.clone(), slab.hi.clone(), iv.lo.clone(), iv.hi.clone());
                    areas[i] += piece.area();
                    regions[i].push(piece);
                }
            }
            let hi = (&r.ys.hi).min(&limit);
            let lo = (&r.ys.lo).max(&top);
            if hi > lo {
                covered += &width * &(hi - lo);
            }
            if r.ys.hi > top {
                top = r.ys.hi.clone();
            }
        }
        if top < limit {
            return Err(SlotAnalysisError::Uncovered(slab.lo, slab.hi));
        }
    }
    Ok(ChargeMap { shadows, widenings, regions, areas, limit, covered })
}

/// A slot packing before and after closing, with its charge map.
#[derive(Debug, Clone)]
pub struct SlotAnalysis {
    pub packing: Packing,
    pub closed: SlotState,
    pub map: ChargeMap,
}

pub fn analyze_slot(state: &SlotState) -> Result<SlotAnalysis, SlotAnalysisError> {
    analyze_slot_with(state, ChargeRule::Widening)
}

pub fn analyze_slot_with(state: &SlotState, rule: ChargeRule) -> Result<SlotAnalysis, SlotAnalysisError> {
    let closed = close_slot_packing(state)?;
    let map = charge_map_with(&closed, rule)?;
    Ok(SlotAnalysis { packing: state.packing().clone(), closed, map })
}

pub fn analyze_slot_run(seq: &[SquareItem]) -> Result<SlotAnalysis, SlotAnalysisError> {
    analyze_slot(&slot_run(seq)?)
}

impl SlotAnalysis {
    /// Square with the largest `|F| / a²`, with that ratio.
    pub fn worst_ratio(&self) -> (usize, Scalar) {
        let pls = self.closed.packing().placements();
        (0..pls.len())
            .map(|i| (i, &self.map.areas[i] / &pls[i].side().square()))
            .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
            .expect("the closing square is always present")
    }

    pub fn checks(&self) -> Vec<Check> {
        let eight_13 = Scalar::new(8, 13);
        let height = packing_height(&self.packing);
        let area = self.packing.area_sum();
        let charged: Scalar = self.map.areas.iter().cloned().sum();
        let two_area = Scalar::from_int(2) * area.clone();
        let (who, worst) = self.worst_ratio();
        vec![
            Check::eq("coverage", &charged + &self.map.covered, self.map.limit.clone()),
            Check::le(format!("max-charge-ratio[#{}]", who + 1), worst, eight_13.clone()),
            Check::le("height-vs-charges", height.clone(), &two_area + &charged),
            Check::le("height-vs-area", height.clone(), &two_area + &(&eight_13 * &self.closed.packing().area_sum())),
            Check::le("height-competitive-bound", height, &(Scalar::new(34, 13) * area) + &eight_13),
        ]
    }

    pub fn report(&self) -> String {
        let mut s = String::new();
        let pls = self.closed.packing().placements();
        s.push_str(&format!("n {}\nheight {}\narea_sum {}\n", self.packing.len(), packing_height(&self.packing), self.packing.area_sum()));
        for (i, pl) in pls.iter().enumerate() {
            let sh = &self.map.shadows[i];
            s.push_str(&format!(
                "square #{} slot {} delta' {} shadow {} F {}{}\n",
                i + 1,
                self.closed.slots()[i],
                sh.delta_prime,
                sh.area(),
                self.map.areas[i],
                if sh.clipped { " clipped" } else { "" }
            ));
            debug_assert_eq!(pl.item.id, i + 1);
        }
        for c in self.checks() {
            s.push_str(&format!("{c}\n"));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packing::items_from_sides;
    use crate::scalar::q;
    use crate::slot::slot_run;
    use proptest::prelude::{prop_assert, prop_assert_eq, proptest, Strategy as _};

    fn pl(a: Scalar, x: Scalar, y: Scalar) -> Placement {
        Placement::new(SquareItem::new(1, a).unwrap(), x, y)
    }

    fn run(sides: &[Scalar]) -> SlotAnalysis {
        analyze_slot_run(&items_from_sides(sides).unwrap()).unwrap()
    }

    #[test]
    fn shadow_examples() {
        let s = shadow_of(&pl(q(1, 2), q(0, 1), q(0, 1)), SlotId::new(1, 0));
        assert_eq!(s.parts, vec![Rect::new(q(1, 2), q(1, 1), q(0, 1), q(1, 2))]);
        assert_eq!((s.delta, s.delta_prime.clone()), (Some(q(1, 2)), q(1, 2)));

        let s = shadow_of(&pl(q(1, 4), q(1, 4), q(0, 1)), SlotId::new(2, 1));
        assert_eq!(s.parts, vec![Rect::new(q(0, 1), q(1, 4), q(0, 1), q(1, 4))]);
        assert_eq!(s.delta, Some(q(0, 1)));

        let p = pl(q(1, 1), q(0, 1), q(0, 1));
        let s = shadow_of(&p, SlotId::new(0, 0));
        assert!(s.parts.is_empty() && s.clipped);
        assert_eq!(widening_of(&p, SlotId::new(0, 0), &s), p.rect());
    }

    #[test]
    fn shadows_of_small_squares_have_the_square_area() {
        let p = pl(q(3, 16), q(1, 4), q(1, 2));
        let s = shadow_of(&p, SlotId::new(2, 1));
        assert_eq!(s.area(), q(9, 256));
        assert_eq!(widening_of(&p, SlotId::new(2, 1), &s), Rect::new(q(1, 4), q(1, 2), q(1, 2), q(11, 16)));
    }

    #[test]
    fn single_squares_charge_nothing() {
        let a = run(&[q(1, 1)]);
        assert!(a.map.areas.iter().all(Scalar::is_zero));
        let a = run(&[q(51, 100)]);
        assert!(a.map.areas.iter().all(Scalar::is_zero));
        assert!(a.checks().iter().all(|c| c.pass));
    }

    #[test]
    fn wide_square_on_two_small_ones_leaves_no_gap() {
        // The 5/8 square rests exactly on the 5/16 tops, and its widening
        // spans the strip, so every point is covered.
        let a = run(&[q(5, 16), q(5, 16), q(5, 8)]);
        let ys: Vec<_> = a.packing.placements().iter().map(|p| (p.x.clone(), p.y.clone())).collect();
        assert_eq!(ys, vec![(q(0, 1), q(0, 1)), (q(1, 2), q(0, 1)), (q(0, 1), q(5, 16))]);
        assert!(a.map.areas.iter().all(Scalar::is_zero));
        assert_eq!(a.map.covered, q(15, 16));
        assert!(a.checks().iter().all(|c| c.pass));
    }

    #[test]
    fn gaps_go_to_the_next_widening_up() {
        // 1/8 at the left corner lifts the second half; the gap beside the
        // small square goes to that half, the gap over the first half to the
        // closing square.
        let a = run(&[q(1, 8), q(1, 2), q(1, 2)]);
        let ys: Vec<_> = a.packing.placements().iter().map(|p| (p.x.clone(), p.y.clone())).collect();
        assert_eq!(ys, vec![(q(0, 1), q(0, 1)), (q(1, 2), q(0, 1)), (q(0, 1), q(1, 8))]);
        assert_eq!(a.map.areas, vec![q(0, 1), q(0, 1), q(3, 64), q(1, 16)]);
        assert!(a.checks().iter().all(|c| c.pass), "{}", a.report());
    }

    fn arb_sides() -> impl proptest::strategy::Strategy<Value = Vec<Scalar>> {
        proptest::collection::vec(1i64..=128, 1..24).prop_map(|v| v.into_iter().map(|k| q(k, 128)).collect())
    }

    #[test]
    fn shadow_outside_the_slot_is_charged_under_the_widening_rule() {
        // The 29/128 square sits in slot (2,0) but its shadow reaches 29/64,
        // past the slot. Only the widening blocks charging, so the wide square
        // above collects [1/4,1] x [0,29/128].
        let st = slot_run(&items_from_sides(&[q(29, 128), q(65, 128)]).unwrap()).unwrap();
        let a = analyze_slot(&st).unwrap();
        assert_eq!(a.map.areas[1], q(2784, 16384));
        assert_eq!(a.worst_ratio(), (1, q(2784, 4225)));
        let failed: Vec<_> = a.checks().into_iter().filter(|c| !c.pass).map(|c| c.name).collect();
        assert_eq!(failed, vec!["max-charge-ratio[#2]".to_string()]);

        let b = analyze_slot_with(&st, ChargeRule::Shadow).unwrap();
        assert_eq!(b.map.areas[1], q(2784 - 26 * 29, 16384));
        assert!(b.checks().iter().all(|c| c.pass));
    }

    fn partition_holds(a: &SlotAnalysis) -> Result<(), proptest::test_runner::TestCaseError> {
        let charged: Scalar = a.map.areas.iter().cloned().sum();
        prop_assert_eq!(&charged + &a.map.covered, a.map.limit.clone());
        for (i, regs) in a.map.regions.iter().enumerate() {
            for r in regs {
                prop_assert!(a.map.widenings.iter().all(|w| !w.overlaps(r)));
                for (j, other) in a.map.regions.iter().enumerate().skip(i + 1) {
                    prop_assert!(other.iter().all(|o| !o.overlaps(r)), "F{} meets F{}", i, j);
                }
            }
        }
        for (pl, sh) in a.closed.packing().placements().iter().zip(&a.map.shadows) {
            if pl.side() <= &Scalar::one().half() {
                prop_assert_eq!(sh.area(), pl.side().square());
            }
        }
        Ok(())
    }

    proptest! {
        #[test]
        fn charges_partition_the_uncovered_area(sides in arb_sides()) {
            let st = slot_run(&items_from_sides(&sides).unwrap()).unwrap();
            let a = analyze_slot(&st).unwrap();
            partition_holds(&a)?;
            let height_checks = a.checks().into_iter().filter(|c| c.name.starts_with("height") || c.name == "coverage");
            for c in height_checks {
                prop_assert!(c.pass, "{}", c);
            }
            let b = analyze_slot_with(&st, ChargeRule::Shadow).unwrap();
            partition_holds(&b)?;
            for r in b.map.regions.iter().flatten() {
                prop_assert!(b.map.shadows.iter().flat_map(|sh| &sh.parts).all(|p| !p.overlaps(r)));
            }
            prop_assert!(b.checks().iter().all(|c| c.pass), "{}", b.report());
        }
    }
}
