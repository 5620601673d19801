//! The adaptive 5/4 adversary, an optimum for its transcripts, and the
//! instance on which the slot strategy wastes half the area.

use std::fmt;

use crate::packing::{
    first_overlap, is_supported, is_tetris_reachable, packing_height, verify, PackError, Packing, Placement,
    SquareItem, Strategy,
};
use crate::scalar::Scalar;
use crate::slot::round_to_dyadic;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AdversaryError {
    #[error("{strategy} returned an invalid placement for #{id}: {what}")]
    InvalidPlacement { strategy: &'static str, id: usize, what: &'static str },
    #[error("constructed optimum fails verification: {0}")]
    Construction(String),
    #[error("delta {delta} must lie strictly between 0 and {limit}")]
    BadDelta { delta: Scalar, limit: Scalar },
    #[error("{0}")]
    BadParameter(&'static str),
    #[error(transparent)]
    Pack(#[from] PackError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterationType {
    I,
    II,
}

impl fmt::Display for IterationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IterationType::I => "I",
            IterationType::II => "II",
        })
    }
}

/// Type I iff the two quarters touch top to bottom with positive x-overlap
/// and the lower one starts at `h_prev`.
pub fn classify_iteration(pl1: &Placement, pl2: &Placement, h_prev: &Scalar) -> IterationType {
    let (lo, hi) = if pl1.y <= pl2.y { (pl1, pl2) } else { (pl2, pl1) };
    let stacked = hi.y == lo.top() && lo.x_range().overlaps_open(&hi.x_range());
    if stacked && &lo.y == h_prev {
        IterationType::I
    } else {
        IterationType::II
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Iteration {
    pub sides: Vec<Scalar>,
    pub kind: IterationType,
    /// Strategy height after the iteration.
    pub height: Scalar,
}

#[derive(Debug, Clone)]
pub struct AdversaryTranscript {
    pub strategy: &'static str,
    pub eps: Scalar,
    pub iterations: Vec<Iteration>,
    pub packing: Packing,
}

impl AdversaryTranscript {
    pub fn final_height(&self) -> Scalar {
        self.iterations.last().map_or(Scalar::zero(), |it| it.height.clone())
    }

    /// All emitted items in arrival order.
    pub fn items(&self) -> Vec<SquareItem> {
        self.packing.placements().iter().map(|pl| pl.item.clone()).collect()
    }

    /// One line per iteration: index, type, sides, height.
    pub fn to_text(&self) -> String {
        let mut s = format!("strategy {}\neps {}\n", self.strategy, self.eps);
        for (i, it) in self.iterations.iter().enumerate() {
            let sides: Vec<String> = it.sides.iter().map(ToString::to_string).collect();
            s.push_str(&format!("iter {} type {} sides {} H {}\n", i + 1, it.kind, sides.join(","), it.height));
        }
        s
    }
}

fn place_checked(s: &mut dyn Strategy, item: SquareItem) -> Result<Placement, AdversaryError> {
    let before = s.packing().clone();
    let pl = s.place(&item)?;
    let bad = |what| AdversaryError::InvalidPlacement { strategy: s.name(), id: item.id, what };
    if pl.item != item {
        return Err(bad("wrong item"));
    }
    if pl.x.is_negative() || pl.right() > Scalar::one() || pl.y.is_negative() {
        return Err(bad("out of strip"));
    }
    if first_overlap(&before, &pl).is_some() {
        return Err(bad("overlap"));
    }
    if !is_supported(&before, &pl) {
        return Err(bad("unsupported"));
    }
    if !is_tetris_reachable(&before, &pl) {
        return Err(bad("unreachable"));
    }
    Ok(pl)
}

/// Plays `m` adaptive iterations against `s`, checking every placement.
pub fn adversary_run(s: &mut dyn Strategy, m: usize, eps: &Scalar) -> Result<AdversaryTranscript, AdversaryError> {
    if m == 0 {
        return Err(AdversaryError::BadParameter("at least one iteration is needed"));
    }
    if !eps.is_positive() || eps >= &Scalar::new(1, 4) {
        return Err(AdversaryError::BadParameter("eps must lie in (0, 1/4)"));
    }
    let quarter = Scalar::new(1, 4);
    let half = Scalar::one().half();
    let mut next_id = s.packing().len() + 1;
    let mut emit = |s: &mut dyn Strategy, side: Scalar| {
        let item = SquareItem::new(next_id, side)?;
        next_id += 1;
        place_checked(s, item)
    };
    let mut iterations = Vec::with_capacity(m);
    let mut h_prev = packing_height(s.packing());
    for _ in 0..m {
        let pl1 = emit(s, quarter.clone())?;
        let pl2 = emit(s, quarter.clone())?;
        let kind = classify_iteration(&pl1, &pl2, &h_prev);
        let mut sides = vec![quarter.clone(), quarter.clone()];
        let rest = match kind {
            IterationType::I => vec![&Scalar::new(3, 4) + eps],
            IterationType::II => vec![&half + eps, half.clone(), half.clone()],
        };
        for a in rest {
            emit(s, a.clone())?;
            sides.push(a);
        }
        h_prev = packing_height(s.packing());
        iterations.push(Iteration { sides, kind, height: h_prev.clone() });
    }
    Ok(AdversaryTranscript { strategy: s.name(), eps: eps.clone(), iterations, packing: s.packing().clone() })
}

/// Band-by-band packing of the transcript's squares. Each band has height
/// 1 + eps: a Type I band lays the quarters on the floor with the big square
/// on them, a Type II band stacks the quarters right of the `1/2 + eps`
/// square and puts the halves on top.
pub fn optimal_packing_for_transcript(t: &AdversaryTranscript) -> Result<Packing, AdversaryError> {
    let eps = &t.eps;
    let quarter = Scalar::new(1, 4);
    let half = Scalar::one().half();
    let items = t.items();
    let mut items = items.into_iter();
    let mut p = Packing::new();
    let mut base = Scalar::zero();
    let mut put = |p: &mut Packing, x: Scalar, y: Scalar| {
        let item = items.next().ok_or_else(|| AdversaryError::Construction("transcript too short".into()))?;
        p.push(Placement::new(item, x, y));
        Ok::<(), AdversaryError>(())
    };
    for it in &t.iterations {
        match it.kind {
            IterationType::I => {
                put(&mut p, Scalar::zero(), base.clone())?;
                put(&mut p, quarter.clone(), base.clone())?;
                put(&mut p, Scalar::zero(), &base + &quarter)?;
            }
            IterationType::II => {
                let x = &half + eps;
                put(&mut p, x.clone(), base.clone())?;
                put(&mut p, x, &base + &quarter)?;
                put(&mut p, Scalar::zero(), base.clone())?;
                let y = &(&base + &half) + eps;
                put(&mut p, Scalar::zero(), y.clone())?;
                put(&mut p, half.clone(), y)?;
            }
        }
        base = &(&base + &Scalar::one()) + eps;
    }
    if items.next().is_some() {
        return Err(AdversaryError::Construction("transcript has more squares than its iterations".into()));
    }
    let report = verify(&p);
    match report.first_violation {
        Some(v) => Err(AdversaryError::Construction(v.to_string())),
        None => Ok(p),
    }
}

/// `n` squares of side `2^-k + delta`, each rounded up to `2^-(k-1)`.
pub fn slot_killer_instance(k: u32, delta: &Scalar, n: usize) -> Result<Vec<SquareItem>, AdversaryError> {
    if k == 0 || k > 60 {
        return Err(AdversaryError::BadParameter("k must lie in 1..=60"));
    }
    let limit = Scalar::pow2_neg(k);
    if !delta.is_positive() || delta >= &limit {
        return Err(AdversaryError::BadDelta { delta: delta.clone(), limit });
    }
    let side = &limit + delta;
    debug_assert_eq!(round_to_dyadic(&side).0, k - 1);
    (1..=n).map(|id| SquareItem::new(id, side.clone()).map_err(Into::into)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bottomleft::BottomLeft;
    use crate::scalar::q;
    use crate::slot::{slot_run, SlotAlgorithm};

    fn pl(a: Scalar, x: Scalar, y: Scalar) -> Placement {
        Placement::new(SquareItem::new(1, a).unwrap(), x, y)
    }

    /// Drops everything at the left wall on top of the whole packing.
    struct Tower(Packing);

    impl Strategy for Tower {
        fn name(&self) -> &'static str {
            "tower"
        }

        fn packing(&self) -> &Packing {
            &self.0
        }

        fn place(&mut self, item: &SquareItem) -> Result<Placement, PackError> {
            let pl = Placement::new(item.clone(), Scalar::zero(), packing_height(&self.0));
            self.0.push(pl.clone());
            Ok(pl)
        }
    }

    /// Puts every square at `x = 1/2`, overlapping after the first.
    struct Broken(Packing);

    impl Strategy for Broken {
        fn name(&self) -> &'static str {
            "broken"
        }

        fn packing(&self) -> &Packing {
            &self.0
        }

        fn place(&mut self, item: &SquareItem) -> Result<Placement, PackError> {
            let pl = Placement::new(item.clone(), q(1, 2), q(0, 1));
            self.0.push(pl.clone());
            Ok(pl)
        }
    }

    #[test]
    fn classification_examples() {
        let h = q(0, 1);
        assert_eq!(classify_iteration(&pl(q(1, 4), q(0, 1), q(0, 1)), &pl(q(1, 4), q(0, 1), q(1, 4)), &h), IterationType::I);
        assert_eq!(classify_iteration(&pl(q(1, 4), q(0, 1), q(0, 1)), &pl(q(1, 4), q(1, 4), q(0, 1)), &h), IterationType::II);
        assert_eq!(
            classify_iteration(&pl(q(1, 4), q(0, 1), q(1, 8)), &pl(q(1, 4), q(0, 1), q(3, 8)), &h),
            IterationType::II
        );
        // Touching only at a corner is not stacking.
        assert_eq!(classify_iteration(&pl(q(1, 4), q(0, 1), q(0, 1)), &pl(q(1, 4), q(1, 4), q(1, 4)), &h), IterationType::II);
    }

    #[test]
    fn one_iteration_against_bottomleft() {
        let t = adversary_run(&mut BottomLeft::new(), 1, &q(1, 100)).unwrap();
        assert_eq!(t.iterations[0].kind, IterationType::II);
        assert_eq!(t.final_height(), q(5, 4) + q(1, 100));
        assert!(verify(&t.packing).passed());
    }

    #[test]
    fn one_iteration_against_the_slot_strategy() {
        let mut s = SlotAlgorithm::new();
        let t = adversary_run(&mut s, 1, &q(1, 100)).unwrap();
        assert_eq!(t.iterations[0].kind, IterationType::II);
        let xs: Vec<_> = t.packing.placements()[..2].iter().map(|p| (p.x.clone(), p.y.clone())).collect();
        assert_eq!(xs, vec![(q(0, 1), q(0, 1)), (q(1, 4), q(0, 1))]);
        assert!(t.final_height() >= q(5, 4));
    }

    #[test]
    fn stacking_strategy_gets_type_one() {
        let t = adversary_run(&mut Tower(Packing::new()), 2, &q(1, 100)).unwrap();
        assert_eq!(t.iterations.iter().map(|i| i.kind).collect::<Vec<_>>(), vec![IterationType::I; 2]);
        assert_eq!(t.iterations[0].height, q(5, 4) + q(1, 100));
        assert_eq!(t.iterations[0].sides, vec![q(1, 4), q(1, 4), q(3, 4) + q(1, 100)]);
        let opt = optimal_packing_for_transcript(&t).unwrap();
        assert_eq!(packing_height(&opt), q(2, 1) + q(2, 100));
    }

    #[test]
    fn invalid_placements_abort_the_run() {
        let err = adversary_run(&mut Broken(Packing::new()), 1, &q(1, 100)).unwrap_err();
        assert_eq!(err, AdversaryError::InvalidPlacement { strategy: "broken", id: 2, what: "overlap" });
    }

    #[test]
    fn optimum_bands_have_height_one_plus_eps() {
        let eps = q(1, 100);
        let t = adversary_run(&mut BottomLeft::new(), 1, &eps).unwrap();
        let opt = optimal_packing_for_transcript(&t).unwrap();
        assert_eq!(packing_height(&opt), q(101, 100));
        for m in [3, 7] {
            for t in [
                adversary_run(&mut BottomLeft::new(), m, &eps).unwrap(),
                adversary_run(&mut SlotAlgorithm::new(), m, &eps).unwrap(),
                adversary_run(&mut Tower(Packing::new()), m, &eps).unwrap(),
            ] {
                let opt = optimal_packing_for_transcript(&t).unwrap();
                let bound = Scalar::from_int(m as i64) * (Scalar::one() + eps.clone());
                assert_eq!(packing_height(&opt), bound);
                let five_four = Scalar::new(5, 4) * Scalar::from_int(m as i64) - q(1, 4);
                assert!(t.final_height() >= five_four, "{}", t.to_text());
                let heights: Vec<_> = t.iterations.iter().map(|i| i.height.clone()).collect();
                assert!(heights.windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }

    #[test]
    fn killer_examples() {
        let items = slot_killer_instance(1, &q(1, 64), 2).unwrap();
        assert_eq!(items.iter().map(|i| i.side.clone()).collect::<Vec<_>>(), vec![q(33, 64); 2]);
        let s = slot_run(&items).unwrap();
        assert_eq!(packing_height(s.packing()), q(33, 32));
        assert!(matches!(slot_killer_instance(3, &q(0, 1), 4), Err(AdversaryError::BadDelta { .. })));
        assert!(matches!(slot_killer_instance(3, &q(1, 8), 4), Err(AdversaryError::BadDelta { .. })));
        assert!(slot_killer_instance(0, &q(1, 8), 4).is_err());
    }

    #[test]
    fn killer_wastes_about_half() {
        let items = slot_killer_instance(3, &q(1, 128), 32).unwrap();
        let s = slot_run(&items).unwrap();
        // Four columns of eight squares, side 17/128.
        assert_eq!(packing_height(s.packing()), q(17, 16));
        assert_eq!(s.packing().area_sum(), q(32 * 289, 16384));
    }
}
