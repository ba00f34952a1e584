mod common;

use blockmind::actions::{plan, Move, NavGoal};
use blockmind::world::Cell;
use common::{oracle, pick, terrain, Grid, N};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn astar_matches_breadth_first_oracle(
        seed in any::<u64>(),
        fill in 0.0f64..0.25,
        s in (0..N, 0..N),
        t in (0..N, 0..N),
        budget in 0u32..4,
    ) {
        let g = terrain(seed, fill);
        let (Some(start), Some(target)) = (pick(&g, s, true), pick(&g, t, false)) else {
            return Ok(());
        };
        let expect = oracle(&g, start, target, budget);
        let got = plan(&g, start, NavGoal::Near(target), budget);
        match expect {
            Some(d) => {
                let p = got.expect("oracle found a path");
                prop_assert!(p.complete);
                prop_assert_eq!(p.cost, d);
                let sum: u32 = p.moves.iter().map(|m| m.cost()).sum();
                prop_assert_eq!(sum, d);
            }
            None => prop_assert!(got.map(|p| !p.complete).unwrap_or(true)),
        }
    }
}

#[test]
fn flat_corridor_of_ten() {
    let mut solid = vec![false; (N * N * N) as usize];
    for x in 0..10 {
        solid[Grid::idx(Cell::new(x, 0, 0))] = true;
    }
    let g = Grid { solid };
    let start = Cell::new(0, 1, 0);
    let target = Cell::new(9, 1, 0);
    let p = plan(&g, start, NavGoal::Near(target), 0).unwrap();
    assert_eq!(p.moves.len(), 8);
    assert_eq!(Some(p.cost), oracle(&g, start, target, 0));
}

#[test]
fn three_pillars_to_reach_overhead_target() {
    let mut solid = vec![false; (N * N * N) as usize];
    solid[Grid::idx(Cell::new(5, 0, 5))] = true;
    let g = Grid { solid };
    let start = Cell::new(5, 1, 5);
    // three blocks above the head
    let target = start.offset(0, 4, 0);
    let p = plan(&g, start, NavGoal::Near(target), 3).unwrap();
    assert_eq!(p.moves.len(), 3);
    assert!(p.moves.iter().all(|m| matches!(m, Move::Pillar { .. })));
    assert_eq!(Some(p.cost), oracle(&g, start, target, 3));
}
