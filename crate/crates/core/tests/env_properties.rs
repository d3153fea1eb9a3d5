use std::collections::HashMap;

use asknav::env::grid::supercover;
use asknav::env::view::{window_cell, CH_CLASS0, CH_OCCUPIED, CH_VISIBLE};
use asknav::env::{
    generate_episode, geodesic_distance, render_egoview, Action, ActionSpace, Cell, EnvConfig, Episode, EpisodeSpec,
    EpisodeState, GridMap, Heading, ObjectInstance, Pose,
};
use asknav::ppo::RewardConfig;
use asknav::teacher::object_in_view_mask;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn spec_for(seed: u64) -> EpisodeSpec {
    let cfg = EnvConfig::default();
    let pool: Vec<usize> = (0..cfg.vocab_size).collect();
    generate_episode(&mut ChaCha8Rng::seed_from_u64(seed), &cfg, &pool).unwrap()
}

fn random_pose(spec: &EpisodeSpec, i: usize, h: usize) -> Pose {
    let free = spec.grid.free_cells();
    Pose {
        cell: free[i % free.len()],
        heading: Heading::from_index(h),
    }
}

fn state_at(spec: &EpisodeSpec, pose: Pose) -> EpisodeState {
    let mut s = EpisodeState::start(spec);
    s.pose = pose;
    s
}

/// Cells whose closed unit square meets the segment between the two cell
/// centers, by a separating-axis test in doubled integer coordinates.
fn closed_square_oracle(a: Cell, b: Cell) -> Vec<Cell> {
    let (ax, ay, bx, by) = (2 * a.x as i64, 2 * a.y as i64, 2 * b.x as i64, 2 * b.y as i64);
    let mut out = Vec::new();
    for x in a.x.min(b.x) - 1..=a.x.max(b.x) + 1 {
        for y in a.y.min(b.y) - 1..=a.y.max(b.y) + 1 {
            let (cx, cy) = (2 * x as i64, 2 * y as i64);
            let x_overlap = ax.min(bx) <= cx + 1 && ax.max(bx) >= cx - 1;
            let y_overlap = ay.min(by) <= cy + 1 && ay.max(by) >= cy - 1;
            if !(x_overlap && y_overlap) {
                continue;
            }
            let side = |px: i64, py: i64| ((bx - ax) * (py - ay) - (by - ay) * (px - ax)).signum();
            let s: Vec<i64> = [(-1, -1), (-1, 1), (1, -1), (1, 1)]
                .iter()
                .map(|(dx, dy)| side(cx + dx, cy + dy))
                .collect();
            let separated = s.iter().all(|&v| v > 0) || s.iter().all(|&v| v < 0);
            if !separated {
                out.push(Cell::new(x, y));
            }
        }
    }
    out
}

#[test]
fn supercover_matches_closed_square_oracle() {
    for ax in -4..=4 {
        for ay in -4..=4 {
            let a = Cell::new(0, 0);
            let b = Cell::new(ax, ay);
            let mut got = supercover(a, b);
            got.sort_by_key(|c| (c.x, c.y));
            got.dedup();
            let mut want = closed_square_oracle(a, b);
            want.sort_by_key(|c| (c.x, c.y));
            assert_eq!(got, want, "segment to ({ax}, {ay})");
        }
    }
}

#[test]
fn wall_on_segment_midpoint_blocks_sight() {
    // The segment (1,2)→(3,2) runs through the center of (2,2) only.
    let mut g = GridMap::empty(5, 5);
    let (a, b) = (Cell::new(1, 2), Cell::new(3, 2));
    assert!(g.line_of_sight(a, b));
    g.set_occupied(Cell::new(2, 2), true);
    assert!(!g.line_of_sight(a, b));
    assert!(!g.line_of_sight(b, a));
    // The diagonal (1,1)→(3,3) crosses two cell corners exactly, picking up
    // both side cells at each.
    let diag: Vec<Cell> = supercover(Cell::new(1, 1), Cell::new(3, 3));
    let want = [(1, 1), (2, 1), (1, 2), (2, 2), (3, 2), (2, 3), (3, 3)];
    assert_eq!(diag, want.map(|(x, y)| Cell::new(x, y)).to_vec());
}

#[test]
fn object_two_cells_ahead_lands_in_its_class_channel() {
    let cfg = EnvConfig::default();
    let grid = GridMap::empty(7, 7);
    let pose = Pose {
        cell: Cell::new(3, 5),
        heading: Heading::North,
    };
    let spec = EpisodeSpec {
        grid,
        objects: vec![ObjectInstance {
            class_id: 4,
            cell: Cell::new(3, 3),
        }],
        target_class: 4,
        start_pose: pose,
        teacher_present: true,
        max_steps: 200,
        success_radius_m: 1.0,
    };
    let view = render_egoview(&cfg, &spec, &state_at(&spec, pose), ActionSpace::new(true), None);
    // Agent sits at row 6, column 3; two ahead is row 4.
    for r in 0..7 {
        for c in 0..7 {
            let expect = if (r, c) == (4, 3) { 1.0 } else { 0.0 };
            assert_eq!(view.get(CH_CLASS0 + 4, r, c), expect, "({r}, {c})");
        }
    }
    let mask = object_in_view_mask(&cfg, &spec, pose);
    assert_eq!(mask.count(), 1);
    assert!(mask.get(4, 3));
}

/// Hand-evaluated visibility for a 7×7 map with a wall stub in front of the
/// agent.
#[test]
fn occlusion_on_hand_built_map() {
    let cfg = EnvConfig::default();
    let grid = GridMap::from_rows(&["#######", "#.....#", "#.....#", "#..#..#", "#.....#", "#.....#", "#######"]);
    let pose = Pose {
        cell: Cell::new(3, 5),
        heading: Heading::North,
    };
    let spec = EpisodeSpec {
        grid,
        objects: vec![ObjectInstance {
            class_id: 0,
            cell: Cell::new(3, 2),
        }],
        target_class: 0,
        start_pose: pose,
        teacher_present: true,
        max_steps: 200,
        success_radius_m: 1.0,
    };
    let view = render_egoview(&cfg, &spec, &state_at(&spec, pose), ActionSpace::new(true), None);
    // Wall cell (3,3) itself is visible and occupied.
    assert_eq!(view.get(CH_VISIBLE, 4, 3), 1.0);
    assert_eq!(view.get(CH_OCCUPIED, 4, 3), 1.0);
    // Straight behind it: (3,2) and (3,1) are hidden, so the object is too.
    assert_eq!(view.get(CH_VISIBLE, 3, 3), 0.0);
    assert_eq!(view.get(CH_VISIBLE, 2, 3), 0.0);
    assert_eq!(view.get(CH_CLASS0, 3, 3), 0.0);
    assert!(object_in_view_mask(&cfg, &spec, pose).is_zero());
    // (2,2): segment (3,5)→(2,2) passes exactly through the corner
    // (2.5, 3.5) of the wall cell, which counts as touching it.
    assert_eq!(view.get(CH_VISIBLE, 3, 2), 0.0);
    // (1,2): segment reaches y = 3 at x = 1.67, clear of the wall.
    assert_eq!(view.get(CH_VISIBLE, 3, 1), 1.0);
    // The border cell (1,0) sits at row 1, column 1, in clear sight.
    assert_eq!(view.get(CH_OCCUPIED, 1, 1), 1.0);
}

#[test]
fn geodesic_detour_matches_enumeration() {
    let g = GridMap::from_rows(&["#######", "#.....#", "#.###.#", "#.#.#.#", "#.#.#.#", "#.....#", "#######"]);
    // From inside the U at (3,3) the only exit is downward.
    let d = geodesic_distance(&g, Cell::new(3, 3), &[Cell::new(3, 1)]).unwrap();
    // (3,3)→(3,4)→(3,5)→(2,5)… up the left column and across: 2 + 2 + 4 + 2 = 10.
    assert_eq!(d, 10);
}

fn pose_after(spec: &EpisodeSpec, actions: &[u8]) -> Vec<(Pose, Option<u32>, Option<u32>)> {
    let cfg = EnvConfig::default();
    let mut ep = Episode::new(&cfg, &RewardConfig::default(), ActionSpace::new(true), spec.clone());
    let target = spec.target().cell;
    let mut out = vec![(ep.state().pose, ep.geodesic_to_goal(ep.state().pose.cell), geodesic_distance(&spec.grid, ep.state().pose.cell, &[target]))];
    for &a in actions {
        // Stop ends the episode; walk with the other actions.
        let action = [Action::MoveAhead, Action::MoveBack, Action::RotateLeft, Action::RotateRight, Action::Pass, Action::Ask][a as usize % 6];
        if ep.state().done {
            break;
        }
        ep.step(action).unwrap();
        let c = ep.state().pose.cell;
        out.push((ep.state().pose, ep.geodesic_to_goal(c), geodesic_distance(&spec.grid, c, &[target])));
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn agent_stays_on_free_cells(seed in 0u64..10_000, actions in prop::collection::vec(0u8..6, 0..150)) {
        let spec = spec_for(seed);
        for (pose, _, _) in pose_after(&spec, &actions) {
            prop_assert!(spec.grid.is_free(pose.cell));
        }
    }

    #[test]
    fn geodesic_changes_by_at_most_one_per_step(seed in 0u64..10_000, actions in prop::collection::vec(0u8..6, 1..150)) {
        let spec = spec_for(seed);
        let trace = pose_after(&spec, &actions);
        for w in trace.windows(2) {
            let (p0, r0, t0) = w[0];
            let (p1, r1, t1) = w[1];
            let (r0, r1, t0, t1) = (r0.unwrap() as i64, r1.unwrap() as i64, t0.unwrap() as i64, t1.unwrap() as i64);
            prop_assert!((r1 - r0).abs() <= 1);
            if p0.cell == p1.cell {
                prop_assert_eq!(r0, r1);
                prop_assert_eq!(t0, t1);
            } else {
                // The grid is bipartite, so a single goal cell always moves by one.
                prop_assert_eq!((t1 - t0).abs(), 1);
            }
        }
    }

    #[test]
    fn line_of_sight_is_symmetric_and_matches_oracle(seed in 0u64..10_000, i in 0usize..200, j in 0usize..200) {
        let spec = spec_for(seed);
        let free = spec.grid.free_cells();
        let (a, b) = (free[i % free.len()], free[j % free.len()]);
        let oracle = closed_square_oracle(a, b).into_iter().filter(|&c| c != a && c != b).all(|c| spec.grid.is_free(c));
        prop_assert_eq!(spec.grid.line_of_sight(a, b), oracle);
        prop_assert_eq!(spec.grid.line_of_sight(a, b), spec.grid.line_of_sight(b, a));
    }

    #[test]
    fn visible_cells_are_exactly_those_in_sight(seed in 0u64..10_000, i in 0usize..200, h in 0usize..4) {
        let cfg = EnvConfig::default();
        let spec = spec_for(seed);
        let pose = random_pose(&spec, i, h);
        let view = render_egoview(&cfg, &spec, &state_at(&spec, pose), ActionSpace::new(true), None);
        for r in 0..cfg.view_k {
            for c in 0..cfg.view_k {
                let w = window_cell(pose, cfg.view_k, r, c);
                let expect = spec.grid.in_bounds(w) && spec.grid.line_of_sight(pose.cell, w);
                prop_assert_eq!(view.get(CH_VISIBLE, r, c) == 1.0, expect);
            }
        }
    }

    #[test]
    fn headings_agree_on_world_content(seed in 0u64..10_000, i in 0usize..200) {
        let cfg = EnvConfig::default();
        let spec = spec_for(seed);
        let cell = random_pose(&spec, i, 0).cell;
        let k = cfg.view_k;
        let mut world: HashMap<Cell, Vec<f64>> = HashMap::new();
        for h in 0..4 {
            let pose = Pose { cell, heading: Heading::from_index(h) };
            let view = render_egoview(&cfg, &spec, &state_at(&spec, pose), ActionSpace::new(true), None);
            for r in 0..k {
                for c in 0..k {
                    let content: Vec<f64> = (0..cfg.channels()).map(|ch| view.get(ch, r, c)).collect();
                    let w = window_cell(pose, k, r, c);
                    if let Some(prev) = world.get(&w) {
                        prop_assert_eq!(prev, &content, "cell {:?} heading {}", w, h);
                    } else {
                        world.insert(w, content);
                    }
                }
            }
        }
        // Rotating the agent by 90° maps the column through its own cell to
        // the row through it: the cell 2 ahead facing North is 2 to the
        // right facing West.
        let north = Pose { cell, heading: Heading::North };
        let west = Pose { cell, heading: Heading::West };
        prop_assert_eq!(window_cell(north, k, k - 3, k / 2), window_cell(west, k, k - 1, k / 2 + 2));
    }

    #[test]
    fn mask_is_within_target_channel(seed in 0u64..10_000, i in 0usize..200, h in 0usize..4) {
        let cfg = EnvConfig::default();
        let spec = spec_for(seed);
        let pose = random_pose(&spec, i, h);
        let mask = object_in_view_mask(&cfg, &spec, pose);
        let view = render_egoview(&cfg, &spec, &state_at(&spec, pose), ActionSpace::new(true), None);
        for r in 0..cfg.view_k {
            for c in 0..cfg.view_k {
                prop_assert!(!mask.get(r, c) || view.get(CH_CLASS0 + spec.target_class, r, c) == 1.0);
            }
        }
    }

    #[test]
    fn mask_ignores_class_identity(seed in 0u64..10_000, i in 0usize..200, h in 0usize..4, shift in 1usize..12) {
        let cfg = EnvConfig::default();
        let spec = spec_for(seed);
        let pose = random_pose(&spec, i, h);
        let mut relabeled = spec.clone();
        for o in &mut relabeled.objects {
            o.class_id = (o.class_id + shift) % cfg.vocab_size;
        }
        relabeled.target_class = (spec.target_class + shift) % cfg.vocab_size;
        prop_assert_eq!(object_in_view_mask(&cfg, &spec, pose), object_in_view_mask(&cfg, &relabeled, pose));
    }

    #[test]
    fn presence_bit_is_constant_within_an_episode(seed in 0u64..10_000, present: bool, actions in prop::collection::vec(0u8..6, 1..60)) {
        let cfg = EnvConfig::default();
        let mut spec = spec_for(seed);
        spec.teacher_present = present;
        let mut ep = Episode::new(&cfg, &RewardConfig::default(), ActionSpace::new(true), spec);
        let bit = if present { 1.0 } else { 0.0 };
        prop_assert_eq!(ep.observe().aux[cfg.vocab_size], bit);
        for a in actions {
            if ep.state().done {
                break;
            }
            let action = [Action::MoveAhead, Action::MoveBack, Action::RotateLeft, Action::RotateRight, Action::Pass, Action::Ask][a as usize];
            let out = ep.step(action).unwrap();
            prop_assert_eq!(out.next_view.aux[cfg.vocab_size], bit);
            if !present {
                let fb = out.next_view.feedback_channel();
                prop_assert!((0..cfg.view_k * cfg.view_k).all(|p| out.next_view.get(fb, p / cfg.view_k, p % cfg.view_k) == 0.0));
            }
        }
    }
}
