use glmb_core::filter::SetLikelihood;
use glmb_core::rng::stream;
use glmb_core::sensor::{psf, synthesize_frame, template, Amplitude, Axis, RadarGrid, RadarLikelihood};
use glmb_core::{Kinematic, Label, LabeledState};
use proptest::prelude::*;

fn coarse_grid() -> RadarGrid {
    RadarGrid::new(
        Axis::new(1400.0, 20.0, 21).unwrap(),
        Axis::new(0.4, 2f64.to_radians(), 30).unwrap(),
        Axis::new(0.0, 2.0, 16).unwrap(),
        1.0,
    )
    .unwrap()
}

fn state(r: f64, b: f64, vx: f64, vy: f64) -> Kinematic {
    [r * b.cos(), vx, r * b.sin(), vy, 4.5]
}

fn states() -> impl Strategy<Value = Kinematic> {
    (1450.0f64..1750.0, 0.5f64..0.9, -15.0f64..-5.0, -15.0f64..-5.0).prop_map(|(r, b, vx, vy)| state(r, b, vx, vy))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn template_values_equal_the_psf(x in states()) {
        let grid = coarse_grid();
        let t = template(&x, &grid, 0.01).unwrap();
        let [_, na, nd] = grid.dims();
        for &(flat, h) in &t.cells {
            let (r, a, d) = (flat / (na * nd), (flat / nd) % na, flat % nd);
            let want = psf(&x, grid.centroid(r, a, d), &grid).unwrap();
            prop_assert!((h - want).abs() <= 1e-12, "cell {flat}: {h} vs {want}");
            prop_assert!(h >= 0.01);
        }
    }

    #[test]
    fn cached_joint_matches_direct_joint(xs in proptest::collection::vec(states(), 1..4), seed in any::<u64>()) {
        let grid = coarse_grid();
        let truth: Vec<LabeledState> = xs.iter().take(2).enumerate()
            .map(|(i, x)| LabeledState::new(*x, Label::new(0, i as u32))).collect();
        let frame = synthesize_frame(&truth, &grid, 0.01, &mut stream(seed, &[])).unwrap().frame;
        for amplitude in [Amplitude::Mean(4.0), Amplitude::State] {
            let lik = RadarLikelihood::new(&frame, &grid, 0.01, amplitude);
            let set: Vec<LabeledState> = xs.iter().enumerate()
                .map(|(i, x)| LabeledState::new(*x, Label::new(1, i as u32))).collect();
            let singles: Vec<_> = set.iter().map(|s| lik.single(s)).collect();
            let fps: Vec<_> = singles.iter().map(|s| &s.1).collect();
            let direct = lik.joint(&set);
            let cached = lik.joint_with(&set, &fps);
            prop_assert!((direct - cached).abs() <= 1e-9 * (1.0 + direct.abs()), "{direct} vs {cached}");
            for (s, single) in set.iter().zip(&singles) {
                let one = lik.joint(core::slice::from_ref(s));
                prop_assert!((single.0 - one).abs() <= 1e-9 * (1.0 + one.abs()));
            }
        }
    }
}
