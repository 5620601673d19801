//! BottomLeft: each square goes to the lowest reachable supported position,
//! leftmost among the lowest.

use std::collections::BTreeMap;

use crate::geometry::IntervalSet;
use crate::packing::{
    reachable_positions, PackError, Packing, Placement, SquareItem, Strategy,
};
use crate::scalar::Scalar;

/// Chooses the position for `item` without modifying the packing.
pub fn bl_place_next(p: &Packing, item: &SquareItem) -> Result<Placement, PackError> {
    let a = &item.side;
    let reach = reachable_positions(p, a)?;

    // Support intervals for the left edge, keyed by the supporting height.
    let mut by_top: BTreeMap<Scalar, Vec<(Scalar, Scalar)>> = BTreeMap::new();
    by_top.insert(Scalar::zero(), Vec::new());
    for q in p.placements() {
        by_top.entry(q.top()).or_default().push((&q.x - a, q.right()));
    }

    for (y, supports) in &by_top {
        let Some(line) = reach.line(y) else { continue };
        if line.is_empty() {
            continue;
        }
        let best = if y.is_zero() {
            line.intervals().first().map(|iv| iv.lo.clone())
        } else {
            leftmost_supported(line, supports).map_err(|_| PackError::NoPosition(item.id))?
        };
        if let Some(x) = best {
            return Ok(Placement::new(item.clone(), x, y.clone()));
        }
    }
    Err(PackError::NoPosition(item.id))
}

/// Smallest `x` in `line` lying in some open support interval, or `None` if
/// there is none. `Err` if the feasible set is nonempty but has no minimum,
/// which cannot happen at the lowest feasible height: the corner position
/// could drop further onto a supported spot.
fn leftmost_supported(line: &IntervalSet, supports: &[(Scalar, Scalar)]) -> Result<Option<Scalar>, ()> {
    let mut attained: Option<Scalar> = None;
    let mut open_inf: Option<Scalar> = None;
    for iv in line.intervals() {
        for (c, d) in supports {
            if !(c < &iv.hi && &iv.lo < d) {
                continue;
            }
            if c < &iv.lo {
                attained = Some(attained.map_or(iv.lo.clone(), |b| b.min(iv.lo.clone())));
            } else {
                open_inf = Some(open_inf.map_or(c.clone(), |b| b.min(c.clone())));
            }
        }
    }
    match (attained, open_inf) {
        (Some(x), Some(o)) if o < x => Err(()),
        (None, Some(_)) => Err(()),
        (x, _) => Ok(x),
    }
}

/// Runs BottomLeft over a sequence.
pub fn bl_run(seq: &[SquareItem]) -> Result<Packing, PackError> {
    let mut s = BottomLeft::new();
    for item in seq {
        s.place(item)?;
    }
    Ok(s.packing)
}

/// Appends the side-1 closing square. It always rests on top of the packing.
pub fn close_packing(p: &Packing) -> Result<Packing, PackError> {
    let item = SquareItem::new(p.len() + 1, Scalar::one())?;
    let pl = bl_place_next(p, &item)?;
    let mut closed = p.clone();
    closed.push(pl);
    Ok(closed)
}

#[derive(Debug, Clone, Default)]
pub struct BottomLeft {
    packing: Packing,
}

impl BottomLeft {
    pub fn new() -> Self {
        BottomLeft { packing: Packing::new() }
    }
}

impl Strategy for BottomLeft {
    fn name(&self) -> &'static str {
        "bottomleft"
    }

    fn packing(&self) -> &Packing {
        &self.packing
    }

    fn place(&mut self, item: &SquareItem) -> Result<Placement, PackError> {
        let pl = bl_place_next(&self.packing, item)?;
        self.packing.push(pl.clone());
        Ok(pl)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packing::{items_from_sides, packing_height, verify};
    use crate::scalar::q;

    fn run(sides: &[Scalar]) -> Packing {
        bl_run(&items_from_sides(sides).unwrap()).unwrap()
    }

    fn xy(p: &Packing) -> Vec<(Scalar, Scalar)> {
        p.placements().iter().map(|pl| (pl.x.clone(), pl.y.clone())).collect()
    }

    #[test]
    fn place_next_examples() {
        let item = SquareItem::new(1, q(1, 2)).unwrap();
        let pl = bl_place_next(&Packing::new(), &item).unwrap();
        assert_eq!((pl.x, pl.y), (q(0, 1), q(0, 1)));

        let p = run(&[q(1, 4), q(1, 4)]);
        assert_eq!(xy(&p), vec![(q(0, 1), q(0, 1)), (q(1, 4), q(0, 1))]);

        let item = SquareItem::new(3, q(51, 100)).unwrap();
        let pl = bl_place_next(&p, &item).unwrap();
        assert_eq!((pl.x, pl.y), (q(0, 1), q(1, 4)));
    }

    #[test]
    fn run_examples() {
        assert_eq!(packing_height(&run(&[q(1, 1)])), q(1, 1));
        let p = run(&[q(1, 2), q(1, 2), q(3, 5)]);
        assert_eq!(xy(&p), vec![(q(0, 1), q(0, 1)), (q(1, 2), q(0, 1)), (q(0, 1), q(1, 2))]);
        assert_eq!(packing_height(&p), q(11, 10));
        assert!(verify(&p).passed());
    }

    #[test]
    fn adversary_iteration_by_hand() {
        let e = q(1, 100);
        let p = run(&[q(1, 4), q(1, 4), q(1, 2) + e.clone(), q(1, 2), q(1, 2)]);
        assert_eq!(packing_height(&p), q(5, 4) + e);
        assert!(verify(&p).passed());
    }

    #[test]
    fn uses_the_shoulder_beside_a_wide_square() {
        // The 3/4 square leaves a 1/4 shoulder on the right half.
        let p = run(&[q(1, 2), q(1, 2), q(3, 4), q(1, 4)]);
        assert!(verify(&p).passed());
        let last = &p.placements()[3];
        assert_eq!((last.x.clone(), last.y.clone()), (q(3, 4), q(1, 2)));
    }

    #[test]
    fn close_examples() {
        let c = close_packing(&Packing::new()).unwrap();
        assert_eq!(xy(&c), vec![(q(0, 1), q(0, 1))]);
        let c = close_packing(&run(&[q(1, 2)])).unwrap();
        assert_eq!(xy(&c)[1], (q(0, 1), q(1, 2)));
        let c = close_packing(&run(&[q(1, 2), q(1, 2), q(3, 5)])).unwrap();
        assert_eq!(xy(&c)[3], (q(0, 1), q(11, 10)));
    }
}
