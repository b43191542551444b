mod common;

use ptob_core::geometry::WheelGeometry;
use ptob_core::stepclimb::{hook_feasible, HookSolver, StepScenario, DEFAULT_HOOK_MARGIN};

/// Feasibility over a 20 × 20 (height, slide) grid agrees with direct
/// sampling, away from a thin band where the margin sits on the threshold.
#[test]
fn feasibility_matches_oracle_on_grid() {
    let g = WheelGeometry::prototype();
    let solver = HookSolver::default();
    let mut compared = 0;
    for i in 0..20 {
        let h = 3.0 + 6.0 * i as f64;
        let oracle = common::Oracle::new(&g, h, 45.0, 360);
        for j in 0..20 {
            let s = 60.0 * j as f64 / 19.0;
            let sc = StepScenario {
                plate_clearance: 1e3,
                ..StepScenario::new(h, s, 0.0)
            };
            let got = hook_feasible(&g, &sc).unwrap().feasible;
            let expected = if h <= solver.unassisted_ratio * 2.0 * g.r_w {
                true
            } else {
                let m = oracle.best_margin(s, 1201);
                if (m - DEFAULT_HOOK_MARGIN).abs() < 0.5 {
                    continue;
                }
                m >= DEFAULT_HOOK_MARGIN
            };
            assert_eq!(got, expected, "h = {h}, s = {s}");
            compared += 1;
        }
    }
    assert!(compared > 350, "only {compared} cells compared");
}

#[test]
fn hook_distance_matches_oracle() {
    let g = WheelGeometry::prototype();
    let solver = HookSolver::default();
    for (h, s) in [(40.0, 0.0), (44.45, 20.0), (45.0, 30.0), (60.0, 30.0)] {
        let got = solver.hook_distance(&g, h, 45.0, s).unwrap();
        let o = common::Oracle::new(&g, h, 45.0, 3600).best_margin(s, 4801);
        assert!((got - o).abs() < 0.05, "h = {h}, s = {s}: {got} vs {o}");
    }
}

#[test]
fn min_slide_matches_oracle_at_other_heights() {
    let g = WheelGeometry::prototype();
    for h in [40.0, 48.0] {
        let got = ptob_core::stepclimb::min_slide_for_hook(&g, h, 45.0, DEFAULT_HOOK_MARGIN).unwrap();
        let o = common::Oracle::new(&g, h, 45.0, 3600).min_slide(DEFAULT_HOOK_MARGIN);
        assert!((got - o).abs() <= 0.1, "h = {h}: {got} vs {o}");
    }
}
