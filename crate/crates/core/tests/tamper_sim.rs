use proptest::prelude::*;
use vidseal_core::imaging::Frame;
use vidseal_core::tamper_sim::*;

fn mean_abs_diff(a: &Frame, b: &Frame) -> f64 {
    let total: u64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| u64::from(x.abs_diff(y)))
        .sum();
    total as f64 / a.data().len() as f64
}

fn changed_pixel_fraction(a: &Frame, b: &Frame) -> f64 {
    let changed = a
        .data()
        .chunks(3)
        .zip(b.data().chunks(3))
        .filter(|(x, y)| x != y)
        .count();
    changed as f64 / (a.width() * a.height()) as f64
}

#[test]
fn gradient_motion_is_deterministic_and_moving() {
    let a = synth_video(SynthKind::GradientMotion, 64, 96, 54, 7).unwrap();
    let b = synth_video(SynthKind::GradientMotion, 64, 96, 54, 7).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, synth_video(SynthKind::GradientMotion, 64, 96, 54, 8).unwrap());
    assert!(mean_abs_diff(&a[0], &a[32]) > 5.0);
}

#[test]
fn gradient_motion_frames_are_pairwise_distinct() {
    for seed in [1, 2, 3] {
        let video = synth_video(SynthKind::GradientMotion, 192, 64, 36, seed).unwrap();
        for i in 0..video.len() {
            for j in i + 1..video.len() {
                let f = changed_pixel_fraction(&video[i], &video[j]);
                assert!(f >= 0.01, "seed {seed}: frames {i} and {j} differ in {f}");
            }
        }
    }
}

#[test]
fn noise_texture_is_deterministic() {
    let a = synth_video(SynthKind::NoiseTexture, 3, 40, 30, 5).unwrap();
    assert_eq!(a, synth_video(SynthKind::NoiseTexture, 3, 40, 30, 5).unwrap());
    assert_ne!(a[0], a[1]);
}

#[test]
fn jpeg_quality_100_on_smooth_gradient() {
    let mut frame = Frame::filled(64, 64, [0; 3]).unwrap();
    for y in 0..64 {
        for x in 0..64 {
            frame.put_pixel(x, y, [(x * 4) as u8, (y * 4) as u8, ((x + y) * 2) as u8]);
        }
    }
    let out = distort_jpeg(std::slice::from_ref(&frame), 100).unwrap();
    let max_err = frame
        .data()
        .iter()
        .zip(out[0].data())
        .map(|(a, b)| a.abs_diff(*b))
        .max()
        .unwrap();
    assert!(max_err <= 4, "max error {max_err}");
}

#[test]
fn position_experiment_fixture_via_replace() {
    let n = 4;
    let white = synth_video(SynthKind::Solid { rgb: [255; 3] }, n * n, 8, 8, 0).unwrap();
    let black = synth_video(SynthKind::Solid { rgb: [0; 3] }, 1, 8, 8, 0).unwrap();
    for x in 0..n * n {
        let (video, truth) = apply_tamper(&white, &TamperSpec::new(TamperOp::Replace, [x]), Some(&black)).unwrap();
        for (i, f) in video.iter().enumerate() {
            assert_eq!(f.pixel(0, 0), if i == x { [0; 3] } else { [255; 3] });
        }
        assert_eq!(truth.operated_frames(), 1);
        assert_eq!(truth.block_labels(n).unwrap(), vec![true]);
    }
}

#[test]
fn distortions_leave_labels_alone() {
    let video = synth_video(SynthKind::GradientMotion, 20, 40, 24, 1).unwrap();
    let donor = synth_video(SynthKind::NoiseTexture, 5, 40, 24, 2).unwrap();
    let spec = SimulationSpec {
        tampers: vec![TamperSpec::new(TamperOp::Replace, [3, 4]).with_source("donor")],
        distortions: Distortion::instagram_like(),
    };
    let plain = SimulationSpec {
        distortions: vec![],
        ..spec.clone()
    };
    let a = spec.run(video.clone(), |_| Ok(Some(donor.as_slice()))).unwrap();
    let b = plain.run(video, |_| Ok(Some(donor.as_slice()))).unwrap();
    assert_eq!(a.truth, b.truth);
    assert_eq!(a.frames[0].dimensions(), (36, 21));
}

#[test]
fn simulation_spec_json() {
    let json = r#"{"tampers":[{"op":"replace","positions":[1,2],"source":"donor"},
                   {"op":"reorder","positions":[5,9],"seed":4}],
                   "distortions":[{"kind":"resize","scale":0.9},{"kind":"jpeg","quality":75}]}"#;
    let spec: SimulationSpec = serde_json::from_str(json).unwrap();
    assert_eq!(spec.tampers.len(), 2);
    assert_eq!(spec.tampers[1].seed, 4);
    assert_eq!(spec.distortions, Distortion::instagram_like());
    let empty: SimulationSpec = serde_json::from_str("{}").unwrap();
    assert_eq!(empty, SimulationSpec::default());
}

fn small_video(len: usize) -> Vec<Frame> {
    (0..len).map(|i| Frame::filled(2, 2, [i as u8, 7, 7]).unwrap()).collect()
}

proptest! {
    #[test]
    fn delete_shrinks_and_keeps_untouched_frames(
        len in 1usize..60,
        picks in prop::collection::btree_set(0usize..60, 0..20),
    ) {
        let positions: Vec<usize> = picks.into_iter().filter(|&p| p < len).collect();
        let video = small_video(len);
        let (out, truth) = apply_tamper(&video, &TamperSpec::new(TamperOp::Delete, positions.clone()), None).unwrap();
        prop_assert_eq!(out.len(), len - positions.len());
        prop_assert_eq!(truth.frame_flags.len(), out.len());
        let kept: Vec<&Frame> = video.iter().enumerate().filter(|(i, _)| !positions.contains(i)).map(|(_, f)| f).collect();
        prop_assert_eq!(out.iter().collect::<Vec<_>>(), kept);
        if positions.is_empty() {
            prop_assert_eq!(truth.operated_frames(), 0);
        }
    }

    #[test]
    fn reorder_is_a_permutation(
        len in 2usize..60,
        picks in prop::collection::btree_set(0usize..60, 0..20),
        seed in any::<u64>(),
    ) {
        let positions: Vec<usize> = picks.into_iter().filter(|&p| p < len).collect();
        let video = small_video(len);
        let (out, truth) = apply_tamper(&video, &TamperSpec::new(TamperOp::Reorder, positions.clone()).with_seed(seed), None).unwrap();
        for i in 0..len {
            if !positions.contains(&i) {
                prop_assert_eq!(&out[i], &video[i]);
                prop_assert!(!truth.frame_flags[i]);
            }
        }
        let mut a: Vec<_> = out.iter().map(|f| f.pixel(0, 0)).collect();
        let mut b: Vec<_> = video.iter().map(|f| f.pixel(0, 0)).collect();
        a.sort();
        b.sort();
        prop_assert_eq!(a, b);
        let expected = if positions.len() >= 2 { positions.len() } else { 0 };
        prop_assert_eq!(truth.operated_frames(), expected);
    }

    #[test]
    fn block_labels_recomputable(flags in prop::collection::vec(any::<bool>(), 1..300), n in 2usize..6) {
        let truth = GroundTruth { frame_flags: flags.clone() };
        let labels = truth.block_labels(n).unwrap();
        prop_assert_eq!(labels.len(), flags.len().div_ceil(n * n));
        for (b, &label) in labels.iter().enumerate() {
            let any = flags.iter().skip(b * n * n).take(n * n).any(|&f| f);
            prop_assert_eq!(label, any);
        }
    }
}
