use dmt::bernstein::BasisKind;
use dmt::init::{
    compose_density_map, init_animation, sample_stroke_seeds, stroke_width_schedule, DensityMap,
    InitConfig, MaskAreas,
};
use dmt::maps::GrayMap;
use dmt::optimize::consistency_loss_grad;
use dmt::synthetic::{dance_tracks, SyntheticConfig};
use dmt::tracking::{build_motion_heatmap, default_bandwidth, MotionHeatmap, TrackSet};
use dmt::trajectory::{SketchAnimation, Stroke, TrajectoryPoly};
use dmt::Point;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_tracks(num_points: usize, num_frames: usize, seed: u64) -> TrackSet {
    dance_tracks(&SyntheticConfig {
        num_points,
        num_frames,
        canvas: (128, 128),
        amplitude: 0.3,
        seed,
        ..Default::default()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transfer_identity_and_offsets(
        seed in 0u64..50,
        px in -10.0..140.0f64, py in -10.0..140.0f64,
        dx in -3.0..3.0f64, dy in -3.0..3.0f64,
        i in 0usize..12, t in 0usize..12,
    ) {
        let tracks = small_tracks(30, 12, seed);
        let p = Point::new(px, py);
        prop_assert_eq!(tracks.transfer_point(p, i, i).unwrap(), p);
        let q = p + Point::new(dx, dy);
        if tracks.nearest_index(p, i).unwrap() == tracks.nearest_index(q, i).unwrap() {
            let diff = tracks.transfer_point(p, i, t).unwrap() - tracks.transfer_point(q, i, t).unwrap();
            prop_assert!((diff - (p - q)).norm() <= 1e-9);
        }
    }

    #[test]
    fn nearest_sample_equals_brute_force(
        seed in 0u64..50,
        px in -50.0..180.0f64, py in -50.0..180.0f64,
        frame in 0usize..12,
    ) {
        let tracks = small_tracks(40, 12, seed);
        let p = Point::new(px, py);
        prop_assert_eq!(
            tracks.nearest_index(p, frame).unwrap(),
            tracks.nearest_index_brute_force(p, frame).unwrap()
        );
    }

    #[test]
    fn width_is_monotone_in_area(a in 0.0..=1.0f64, b in 0.0..=1.0f64, w_max in 0.1..10.0f64) {
        let canvas = (64, 32);
        let full = 64.0 * 32.0;
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let mask = MaskAreas::new(vec![lo * full, hi * full], canvas).unwrap();
        let w = stroke_width_schedule(&mask, w_max).unwrap();
        prop_assert!(w[0] <= w[1]);
    }
}

#[test]
fn ties_go_to_the_lowest_id() {
    use dmt::tracking::TrackedPoint;
    let tracks = TrackSet::new(
        1,
        vec![
            TrackedPoint { id: 9, coords: vec![Point::new(2.0, 0.0)] },
            TrackedPoint { id: 4, coords: vec![Point::new(-2.0, 0.0)] },
            TrackedPoint { id: 6, coords: vec![Point::new(0.0, 2.0)] },
        ],
    )
    .unwrap();
    assert_eq!(tracks.nearest_sample(Point::zeros(), 0).unwrap(), 4);
}

#[test]
fn heatmap_range_hits_both_bounds() {
    let tracks = small_tracks(25, 20, 3);
    let map = build_motion_heatmap(&tracks, 64, 64, default_bandwidth(64, 64)).unwrap();
    let lo = map.values.iter().cloned().fold(f64::MAX, f64::min);
    let hi = map.values.iter().cloned().fold(f64::MIN, f64::max);
    assert!(map.values.iter().all(|v| (0.0..=1.0).contains(v)));
    assert_eq!((lo, hi), (0.0, 1.0));
}

#[test]
fn raising_beta_favours_the_motion_peak() {
    let (w, h) = (16, 12);
    let xdog = GrayMap::uniform(w, h, 0.8);
    let attention = GrayMap::new(w, h, (0..w * h).map(|k| if k == 37 { 0.0 } else { 0.9 }).collect()).unwrap();
    let motion = MotionHeatmap {
        width: w,
        height: h,
        values: (0..w * h).map(|k| if k == 37 { 1.0 } else { 0.2 }).collect(),
    };
    let mut prev = f64::MIN;
    for step in 0..=10 {
        let d = compose_density_map(&xdog, &attention, &motion, step as f64 / 10.0).unwrap();
        assert!((d.probabilities.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        assert!(d.unnormalized[37] >= prev);
        prev = d.unnormalized[37];
    }
}

#[test]
fn peaked_density_places_most_seeds_in_the_top_decile() {
    let (w, h) = (40, 40);
    let peak = Point::new(12.0, 28.0);
    let values: Vec<f64> = (0..w * h)
        .map(|k| {
            let p = Point::new((k % w) as f64 + 0.5, (k / w) as f64 + 0.5);
            (-(p - peak).norm_squared() / 8.0).exp()
        })
        .collect();
    let map = GrayMap::new(w, h, values).unwrap();
    let one = GrayMap::uniform(w, h, 1.0);
    let motion = MotionHeatmap { width: w, height: h, values: vec![0.0; w * h] };
    let density = compose_density_map(&map, &one, &motion, 0.0).unwrap();
    let mut sorted = density.probabilities.clone();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let cutoff = sorted[sorted.len() / 10];
    let seeds = sample_stroke_seeds(&density, 16, 5).unwrap();
    let inside = seeds
        .iter()
        .filter(|s| density.get(s.x as usize, s.y as usize) > cutoff)
        .count();
    assert!(inside >= 12, "{inside} of 16");
}

fn random_like(anim: &SketchAnimation, rng: &mut ChaCha8Rng) -> SketchAnimation {
    let (w, h) = anim.canvas();
    let strokes = anim
        .strokes()
        .iter()
        .map(|s| {
            let trs = s
                .trajectories()
                .iter()
                .map(|tr| {
                    let coeffs = (0..=tr.degree())
                        .map(|_| Point::new(rng.random_range(0.0..w as f64), rng.random_range(0.0..h as f64)))
                        .collect();
                    TrajectoryPoly::new(BasisKind::Bernstein, coeffs).unwrap()
                })
                .collect();
            Stroke::new(trs).unwrap()
        })
        .collect();
    SketchAnimation::new(strokes, anim.num_frames(), anim.canvas(), anim.widths().to_vec()).unwrap()
}

#[test]
fn initialization_beats_random_coefficients() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for trial in 0..20 {
        let tracks = small_tracks(36, 16, trial);
        let mut cfg = InitConfig::for_clip(16, 128, 128);
        cfg.num_strokes = 4;
        cfg.rng_seed = trial;
        let density = DensityMap::uniform(128, 128).unwrap();
        let anim = init_animation(&cfg, &density, &tracks, vec![2.0; 16]).unwrap();
        assert_eq!(anim, init_animation(&cfg, &density, &tracks, vec![2.0; 16]).unwrap());
        let ours = consistency_loss_grad(&anim, &tracks, 8).unwrap().value;
        let random = consistency_loss_grad(&random_like(&anim, &mut rng), &tracks, 8).unwrap().value;
        assert!(ours.is_finite());
        assert!(ours <= random, "trial {trial}: init {ours:.3e} vs random {random:.3e}");
    }
}
