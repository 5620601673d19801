use proptest::prelude::*;
use squarepack::analysis::holes::analyze_bottomleft;
use squarepack::bottomleft::bl_run;
use squarepack::io::{gen_random, parse_instance, parse_placements_csv, placements_csv, format_instance};
use squarepack::packing::{items_from_sides, packing_height, verify, verify_packing, Packing};
use squarepack::scalar::Scalar;
use squarepack::slot::slot_run;
use squarepack::svg::render_svg;

fn both(sides: &[Scalar]) -> [Packing; 2] {
    let items = items_from_sides(sides).unwrap();
    [bl_run(&items).unwrap(), slot_run(&items).unwrap().packing().clone()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn outputs_verify_and_round_trip(n in 1usize..20, seed in any::<u64>()) {
        let sides = gen_random(n, seed, &Scalar::new(1, 64), &Scalar::one()).unwrap();
        let parsed = parse_instance(&format_instance(&sides)).unwrap();
        prop_assert_eq!(&parsed.sides, &sides);
        let items = parsed.items();
        for p in both(&sides) {
            prop_assert!(verify(&p).passed());
            let back = parse_placements_csv(&placements_csv(&p)).unwrap();
            prop_assert!(verify_packing(&items, &back).unwrap().passed());
            prop_assert_eq!(render_svg(&p, &[]), render_svg(&Packing::from_placements(back), &[]));
            prop_assert!(packing_height(&p) >= p.area_sum());
        }
    }

    #[test]
    fn hole_overlay_is_deterministic(n in 1usize..12, seed in any::<u64>()) {
        let sides = gen_random(n, seed, &Scalar::new(1, 16), &Scalar::one()).unwrap();
        let p = bl_run(&items_from_sides(&sides).unwrap()).unwrap();
        let a = analyze_bottomleft(&p).unwrap();
        let cells: Vec<_> = a.holes.iter().flat_map(|h| h.region.cells().iter().cloned()).collect();
        prop_assert_eq!(render_svg(&a.closed, &cells), render_svg(&a.closed, &cells));
    }
}
