use layercake_core::cake::{int, rat, Rational};
use layercake_core::field::{PreferenceField, Side, SimplexPoint, Square, TargetGeometry, Vertex};
use layercake_core::fptas::{solve_one_layer, solve_two_layer};
use layercake_core::generate::{random_instance, InstanceShape};
use layercake_core::valuation::{lipschitz_bound, top_layer, Agent, AdditiveValuation, Instance};
use layercake_core::verifier::{check_eps_envy_free_all_birthday, SizeBounds};
use num_traits::Signed;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn uniform(n: usize, m: usize) -> Instance {
    let agents = (0..n).map(|i| Agent::additive(format!("a{i}"), AdditiveValuation::uniform(m))).collect();
    Instance::new(m, agents).unwrap()
}

fn captures(field: &PreferenceField<'_>, sq: Square) -> bool {
    let crossings = field.segment_crossings(&sq.boundary()).unwrap();
    let has = |s: Side| crossings.iter().any(|c| c.side == s);
    has(Side::Center) || (has(Side::Left) && has(Side::Right))
}

#[test]
fn three_uniform_agents_get_one_bundle_each() {
    let inst = uniform(3, 2);
    let eps = rat(1, 10);
    let sol = solve_two_layer(&inst, &eps).unwrap();
    assert_eq!(sol.grid, 60);
    let report =
        check_eps_envy_free_all_birthday(&inst, &sol.division, &sol.assignments, &eps, &SizeBounds::Balanced).unwrap();
    assert!(report.passed(), "{report:?}");
    for g in &sol.assignments {
        assert_eq!(g.sizes(3), vec![1, 1, 1]);
    }
}

#[test]
fn coarse_epsilon_uses_a_single_square() {
    let inst = uniform(4, 2);
    let eps = int(6);
    let sol = solve_two_layer(&inst, &eps).unwrap();
    assert_eq!(sol.grid, 1);
    assert_eq!(sol.anchor_vertex, Vertex::new(0, 0));
    let report =
        check_eps_envy_free_all_birthday(&inst, &sol.division, &sol.assignments, &eps, &SizeBounds::Balanced).unwrap();
    assert!(report.passed());
}

#[test]
fn boundary_lines_start_on_opposite_sides() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 3..12 {
        let inst = random_instance(&mut rng, &InstanceShape { agents: n, layers: 2, segments: 4, max_density: 5 }).unwrap();
        let field =
            PreferenceField::new(&inst, inst.non_birthday(), top_layer(&inst).unwrap(), 40, TargetGeometry::two_layer(n - 1))
                .unwrap();
        let (left, right) = (field.line_crossing(0).unwrap(), field.line_crossing(40).unwrap());
        assert_ne!(left.side, Side::Center);
        assert_ne!(left.side, right.side);
    }
}

#[test]
fn uniform_boundary_crossings_mirror() {
    let inst = uniform(3, 2);
    let field = PreferenceField::new(&inst, inst.non_birthday(), 0, 12, TargetGeometry::two_layer(2)).unwrap();
    let (left, right) = (field.line_crossing(0).unwrap(), field.line_crossing(12).unwrap());
    assert_eq!(left.row, right.row);
    assert_eq!(left.point.0[1], right.point.0[2]);
    assert_eq!(left.point.0[2], right.point.0[1]);
    assert_ne!(left.side, right.side);
}

#[test]
fn crossing_between_first_two_vertices_is_right_of_split() {
    let g = TargetGeometry::two_layer(2);
    assert_eq!(g.delta, rat(1, 54));
    let (a, b) = (SimplexPoint::vertex(0), SimplexPoint::vertex(1));
    // z₁ falls linearly from 1 to 0
    let t = int(1) - g.level();
    let p = a.lerp(&b, &t);
    assert_eq!(p.0[0], rat(1, 3) - rat(1, 54));
    assert_eq!(g.classify(&p), Side::Right);
}

#[test]
fn one_layer_target_for_two_one_one() {
    let g = TargetGeometry::one_layer([2, 1, 1], 3);
    assert_eq!(g.omega, SimplexPoint::new(rat(5, 9), rat(2, 9), rat(2, 9)));
}

#[test]
fn one_layer_uniform_thirds() {
    let inst = uniform(3, 1);
    let eps = rat(1, 10);
    let sol = solve_one_layer(&inst, &eps, [1, 1, 1]).unwrap();
    let report = check_eps_envy_free_all_birthday(
        &inst,
        &sol.division,
        &sol.assignments,
        &eps,
        &SizeBounds::Exact(vec![1, 1, 1]),
    )
    .unwrap();
    assert!(report.passed());
    for g in &sol.assignments {
        assert_eq!(g.sizes(3), vec![1, 1, 1]);
    }
    for j in 0..3 {
        let len = sol.division.bundle(j).measure();
        assert!((len - rat(1, 3)).abs() <= rat(1, 10));
    }
}

#[test]
fn one_layer_boundary_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let n = 6;
    let inst = random_instance(&mut rng, &InstanceShape { agents: n, layers: 1, segments: 4, max_density: 5 }).unwrap();
    let padded = inst.padded(1);
    let grid = 16;
    let field =
        PreferenceField::new(&padded, inst.non_birthday(), 0, grid, TargetGeometry::one_layer([2, 2, 2], n - 1)).unwrap();
    for t in 0..=grid {
        assert_eq!(field.fbar(Vertex::new(t, grid)).unwrap().0[0], int(1));
        // with an empty bottom layer, the bundle holding the bottom layer
        // at x = 0 is worthless
        assert_eq!(field.fbar(Vertex::new(0, t)).unwrap().0[2], int(0));
    }
}

#[test]
fn returned_square_captures_on_small_grids() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for trial in 0..40 {
        let n = 3 + trial % 6;
        let inst = random_instance(&mut rng, &InstanceShape { agents: n, layers: 2, segments: 3, max_density: 4 }).unwrap();
        let k = lipschitz_bound(&inst).unwrap();
        let target_grid = 1 + (trial as i64 * 7) % 32;
        let eps: Rational = int(6) * k / int(target_grid);
        let sol = solve_two_layer(&inst, &eps).unwrap();
        assert!(sol.grid <= 32);
        let field = PreferenceField::new(&inst, inst.non_birthday(), sol.top_layer, sol.grid, TargetGeometry::two_layer(n - 1))
            .unwrap();
        let mut capturing = Vec::new();
        for i in 0..sol.grid {
            for k in 0..sol.grid {
                if captures(&field, Square { i, k }) {
                    capturing.push(Vertex::new(i, k));
                }
            }
        }
        assert!(!capturing.is_empty());
        assert!(
            capturing.contains(&sol.anchor_vertex),
            "anchor {:?} not among capturing squares {capturing:?}",
            sol.anchor_vertex
        );
    }
}
