mod common;

use common::{brute_cover_error, euclid, fv, separated};
use omt_core::eval::CoverTracker;
use omt_core::streams::read_csv;
use omt_core::{
    distance, harmonic_with_sink, infer_identity, normalize_dataset, similarity, CoverState,
    FeatureVector, LabeledStream, NnRecognizer, NormScale, OmtConfig, SimilarityGraph,
    StreamRecord,
};
use proptest::collection::vec;
use proptest::prelude::*;

fn point(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    vec(-1.0f64..1.0, dim)
}

fn points(dim: usize, max: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    vec(point(dim), 1..max)
}

proptest! {
    #[test]
    fn similarity_is_symmetric_and_bounded(a in point(4), b in point(4), sigma in 0.01f64..2.0) {
        let (a, b) = (fv(&a), fv(&b));
        let ab = similarity(&a, &b, sigma).unwrap();
        prop_assert_eq!(ab, similarity(&b, &a, sigma).unwrap());
        prop_assert!(ab > 0.0 || distance(&a, &b).unwrap() > 10.0 * sigma);
        prop_assert!(ab <= 1.0);
    }

    #[test]
    fn similarity_decreases_with_distance(d1 in 0.0f64..0.5, gap in 1e-6f64..0.5, sigma in 0.05f64..1.0) {
        let origin = fv(&[0.0, 0.0]);
        let near = similarity(&origin, &fv(&[d1, 0.0]), sigma).unwrap();
        let far = similarity(&origin, &fv(&[d1 + gap, 0.0]), sigma).unwrap();
        prop_assert!(near > far);
    }

    #[test]
    fn triangle_inequality(a in point(5), b in point(5), c in point(5)) {
        let (a, b, c) = (fv(&a), fv(&b), fv(&c));
        let ab = distance(&a, &b).unwrap();
        let bc = distance(&b, &c).unwrap();
        let ac = distance(&a, &c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-12);
    }

    #[test]
    fn normalization_bounds_and_idempotence(raw in points(3, 20), scale in 0.1f64..50.0) {
        let vs: Vec<FeatureVector> = raw
            .iter()
            .map(|p| fv(&p.iter().map(|x| x * scale).collect::<Vec<_>>()))
            .collect();
        prop_assume!(vs.iter().any(|v| v.norm() > 1e-9));
        let (once, _) = normalize_dataset(&vs).unwrap();
        let max = once.iter().map(|v| v.norm()).fold(0.0, f64::max);
        prop_assert!((max - 1.0).abs() < 1e-12);
        for a in &once {
            for b in &once {
                prop_assert!(distance(a, b).unwrap() <= 2.0 + 1e-12);
            }
        }
        let (twice, _) = normalize_dataset(&once).unwrap();
        for (x, y) in once.iter().zip(&twice) {
            for (p, q) in x.iter().zip(y.iter()) {
                prop_assert!((p - q).abs() < 1e-12);
            }
        }
    }

    /// Every cover invariant after every step, with the exact cover error
    /// checked against brute force.
    #[test]
    fn cover_invariants_hold_every_step(
        raw in points(3, 120),
        k in 1usize..8,
        r0 in 0.005f64..0.3,
        radius in 0.2f64..2.0,
    ) {
        let cfg = OmtConfig::new(fv(&[0.0, 0.0, 0.0]))
            .with_max_representatives(k)
            .with_initial_cover_radius(r0)
            .with_radius(radius);
        let mut cover = CoverState::new(r0);
        let mut tracker = CoverTracker::new();
        for (t, p) in raw.iter().enumerate() {
            let x = fv(p);
            let out = cover.quantize_step(t as u64, &x, &cfg).unwrap();
            tracker.observe(&x, out, &cover);
            prop_assert!(cover.len() <= k);
            prop_assert!(separated(&cover));
            let expected_r = r0 * 2f64.powi(cover.doubling_count() as i32);
            prop_assert_eq!(cover.radius(), expected_r);
            for rep in cover.representatives() {
                prop_assert!(euclid(&rep.vector, &cfg.anchor) <= radius);
            }
            let brute = brute_cover_error(tracker.history(), &cover);
            prop_assert!((tracker.d_max() - brute).abs() < 1e-12);
            prop_assert!(brute <= 2.0 * cover.radius() + 1e-12);
        }
    }

    #[test]
    fn scores_are_probabilities_and_decrease_in_gamma(
        raw in points(2, 25),
        sigma in 0.05f64..0.5,
        g1 in 0.0001f64..2.0,
        extra in 0.0f64..2.0,
    ) {
        let mut pts = raw;
        pts.push(vec![0.0, 0.0]);
        let w = common::kernel_weights(&pts, sigma);
        let g = SimilarityGraph::from_weights(w).unwrap();
        let f1 = harmonic_with_sink(&g, g1).unwrap();
        let f2 = harmonic_with_sink(&g, g1 + extra).unwrap();
        for (a, b) in f1.as_slice().iter().zip(f2.as_slice()) {
            prop_assert!((0.0..=1.0).contains(a));
            prop_assert!(*b <= *a + 1e-12);
        }
    }

    /// The recognizer never fires outside the nearest-neighbor ball.
    #[test]
    fn omt_never_fires_outside_gate(
        raw in points(2, 40),
        radius in 0.05f64..1.0,
        epsilon in 0.0f64..1.0,
    ) {
        let anchor = fv(&[0.0, 0.0]);
        let cfg = OmtConfig::new(anchor.clone())
            .with_radius(radius)
            .with_epsilon(epsilon)
            .with_sigma(0.2)
            .with_max_representatives(10);
        let nn = NnRecognizer::new(vec![anchor], radius).unwrap();
        let mut rec = omt_core::OmtRecognizer::new(cfg).unwrap();
        for p in &raw {
            let x = fv(p);
            let omt = rec.process_step(&x).unwrap().positive;
            prop_assert!(!omt || nn.nn_classify(&x).unwrap());
        }
    }

    #[test]
    fn nn_classify_matches_score(raw in points(3, 10), x in point(3), radius in 0.0f64..2.0) {
        let nn = NnRecognizer::new(raw.iter().map(|p| fv(p)).collect(), radius).unwrap();
        let x = fv(&x);
        prop_assert_eq!(nn.nn_classify(&x).unwrap(), nn.nn_score(&x).unwrap() <= radius);
    }

    /// Writing a stream and reading it back gives the same values.
    #[test]
    fn csv_round_trip(
        anchor in point(3),
        rows in vec((point(3), 0i64..3), 0..30),
    ) {
        let stream = LabeledStream {
            anchor: fv(&anchor),
            anchor_label: 1,
            records: rows
                .iter()
                .enumerate()
                .map(|(t, (v, label))| StreamRecord { t: 2 * t as u64, vector: fv(v), label: *label })
                .collect(),
            scale: NormScale::identity(),
        };
        let mut buf = Vec::new();
        stream.write_csv(&mut buf).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(&back, &stream);

        // normalized ingest differs only by the recorded factor
        let normalized = back.clone().normalized();
        if let Ok(n) = normalized {
            let f = n.scale.max_norm();
            for (a, b) in n.records.iter().zip(&stream.records) {
                for (p, q) in a.vector.iter().zip(b.vector.iter()) {
                    prop_assert!((p * f - q).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn infer_identity_scores_are_in_unit_interval_on_synthetic_data() {
    let s = omt_core::synth_stream(&omt_core::SynthSpec {
        seed: 9,
        n_steps: 150,
        ..Default::default()
    })
    .unwrap();
    let cfg = OmtConfig::new(s.anchor.clone()).with_max_representatives(40);
    let mut cover = CoverState::new(cfg.initial_cover_radius);
    for r in &s.records {
        cover.quantize_step(r.t, &r.vector, &cfg).unwrap();
        let p = infer_identity(&cover, &r.vector, &cfg).unwrap();
        if let Some(f) = p.score {
            assert!((0.0..=1.0).contains(&f));
        }
    }
}
