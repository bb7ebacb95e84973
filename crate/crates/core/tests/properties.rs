use std::f64::consts::PI;

use nalgebra::{Quaternion, UnitQuaternion};
use proptest::prelude::*;

use trailmark::dataset::split_indices;
use trailmark::eval::auroc;
use trailmark::geometry::{compose, project, to_cartesian, to_spherical, CameraModel, ImagePoint, RigidTransform, Vec3};
use trailmark::image::{BinaryMask, ImageTensor};
use trailmark::mask::{rasterize, Quad};
use trailmark::model::{masked_loss, Architecture, ModelConfig, Optimizer, OptimizerKind, ReconstructionModel, TrainConfig};
use trailmark::occlusion::{build_index, is_occluded, AngularTree, CloudClass, OcclusionParams, PointCloud};
use trailmark::risk::{classify, error_map, normalize, select_threshold, RiskClass, RiskMap, RiskThreshold};

fn vec3(range: f64) -> impl Strategy<Value = Vec3> {
    (-range..range, -range..range, -range..range).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn rotation() -> impl Strategy<Value = UnitQuaternion<f64>> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_filter("non-degenerate", |(a, b, c, d)| a * a + b * b + c * c + d * d > 0.01)
        .prop_map(|(a, b, c, d)| UnitQuaternion::from_quaternion(Quaternion::new(a, b, c, d)))
}

fn transform() -> impl Strategy<Value = RigidTransform> {
    (rotation(), vec3(50.0)).prop_map(|(r, t)| RigidTransform::new(r, t))
}

fn close(a: &Vec3, b: &Vec3, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
}

fn camera() -> CameraModel {
    CameraModel::new(300.0, 280.0, 160.0, 100.0, 320, 200, RigidTransform::identity()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn spherical_round_trip(p in vec3(100.0).prop_filter("away from origin", |p| p.norm() > 1e-3)) {
        let s = to_spherical(&p).unwrap();
        prop_assert!(s.azimuth > -PI && s.azimuth <= PI);
        prop_assert!(s.elevation.abs() <= PI / 2.0);
        prop_assert!(close(&to_cartesian(&s), &p, 1e-12));
    }

    #[test]
    fn spherical_scaling_changes_only_radius(p in vec3(100.0).prop_filter("away from origin", |p| p.norm() > 1e-3), k in -30i32..30) {
        let lambda = 2f64.powi(k);
        let (a, b) = (to_spherical(&p).unwrap(), to_spherical(&(p * lambda)).unwrap());
        prop_assert_eq!(a.azimuth, b.azimuth);
        prop_assert_eq!(a.elevation, b.elevation);
        prop_assert_eq!(a.radius * lambda, b.radius);
    }

    #[test]
    fn projection_is_scale_consistent(x in -5.0..5.0f64, y in -5.0..5.0f64, z in 0.1..50.0f64, lambda in 0.01..100.0f64) {
        let p = Vec3::new(x, y, z);
        let (a, b) = (project(&camera(), &p).unwrap(), project(&camera(), &(p * lambda)).unwrap());
        prop_assert!((a.u - b.u).abs() <= 1e-9 && (a.v - b.v).abs() <= 1e-9);
    }

    #[test]
    fn group_axioms(a in transform(), b in transform(), c in transform(), p in vec3(20.0)) {
        let id = RigidTransform::identity();
        prop_assert!(close(&compose(&a, &id).apply(&p), &a.apply(&p), 1e-12));
        prop_assert!(close(&compose(&id, &a).apply(&p), &a.apply(&p), 1e-12));
        prop_assert!(close(&compose(&a, &a.inverse()).apply(&p), &p, 1e-12));
        prop_assert!(close(&compose(&a.inverse(), &a).apply(&p), &p, 1e-12));
        let left = compose(&compose(&a, &b), &c).apply(&p);
        let right = compose(&a, &compose(&b, &c)).apply(&p);
        prop_assert!(close(&left, &right, 1e-12));
        prop_assert!(close(&compose(&a, &b).apply(&p), &a.apply(&b.apply(&p)), 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn split_partitions_frames(n in 1usize..500, fraction in 0.01..0.99f64, seed in any::<u64>()) {
        let (train, val) = split_indices(n, fraction, seed);
        let mut all: Vec<usize> = train.iter().chain(&val).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert!(train.windows(2).all(|w| w[0] < w[1]) && val.windows(2).all(|w| w[0] < w[1]));
        if n >= 2 {
            prop_assert!(!train.is_empty() && !val.is_empty());
        }
        prop_assert_eq!(split_indices(n, fraction, seed), (train, val));
    }
}

fn loss_case() -> impl Strategy<Value = (ImageTensor, ImageTensor, Vec<bool>, Vec<bool>)> {
    (1usize..6, 1usize..6, prop::sample::select(vec![1usize, 3])).prop_flat_map(|(w, h, c)| {
        (
            prop::collection::vec(0.0..=1.0f64, w * h * c),
            prop::collection::vec(0.0..=1.0f64, w * h * c),
            prop::collection::vec(any::<bool>(), w * h),
            prop::collection::vec(any::<bool>(), w * h),
        )
            .prop_map(move |(x, r, m, extra)| {
                (ImageTensor::new(w, h, c, x).unwrap(), ImageTensor::new(w, h, c, r).unwrap(), m, extra)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn loss_is_nonnegative_and_zero_only_on_agreement((x, r, m, _) in loss_case()) {
        let (w, h) = (x.width(), x.height());
        let mask = BinaryMask::from_vec(w, h, m.clone()).unwrap();
        let l = masked_loss(&x, &r, &mask).unwrap();
        prop_assert!(l >= 0.0);
        let c = x.channels();
        let agree = (0..w * h).filter(|&p| m[p]).all(|p| x.data()[p * c..(p + 1) * c] == r.data()[p * c..(p + 1) * c]);
        prop_assert_eq!(l == 0.0, agree);
        prop_assert_eq!(masked_loss(&x, &x, &mask).unwrap(), 0.0);
    }

    #[test]
    fn adding_mask_pixels_never_lowers_loss((x, r, m, extra) in loss_case()) {
        let (w, h) = (x.width(), x.height());
        let small = BinaryMask::from_vec(w, h, m.clone()).unwrap();
        let large = BinaryMask::from_vec(w, h, m.iter().zip(&extra).map(|(a, b)| *a || *b).collect()).unwrap();
        prop_assert!(masked_loss(&x, &r, &large).unwrap() >= masked_loss(&x, &r, &small).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 20, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn tiny_gradient_step_does_not_increase_loss(
        small_conv in any::<bool>(),
        seed in any::<u64>(),
        pixels in prop::collection::vec(0.0..=1.0f64, 8 * 8 * 3),
        bits in prop::collection::vec(any::<bool>(), 64),
    ) {
        let architecture = if small_conv { Architecture::SmallConv } else { Architecture::PatchLinear };
        let mc = ModelConfig { architecture, bottleneck: 4, patch_size: 4, conv_channels: [2, 3, 3], seed };
        let tc = TrainConfig { input_width: 8, input_height: 8, ..TrainConfig::default() };
        let model = ReconstructionModel::new(&mc, &tc, 3).unwrap();
        let x = ImageTensor::new(8, 8, 3, pixels).unwrap();
        let m = BinaryMask::from_vec(8, 8, bits).unwrap();
        let mut params = model.params().to_vec();
        let (before, grad) = model.loss_and_gradient_at(&params, &x, &m).unwrap();
        Optimizer::new(OptimizerKind::Sgd, 1e-6, params.len()).step(&mut params, &grad);
        let (after, _) = model.loss_and_gradient_at(&params, &x, &m).unwrap();
        prop_assert!(after <= before, "loss rose from {} to {}", before, after);
    }
}

fn cloud_point() -> impl Strategy<Value = (Vec3, CloudClass)> {
    (-0.5..0.5f64, -0.3..0.3f64, 0.5..40.0f64, prop::sample::select(vec![CloudClass::Obstacle, CloudClass::Surface, CloudClass::Ground]))
        .prop_map(|(az, el, r, c)| (Vec3::new(r * el.cos() * az.sin(), -r * el.sin(), r * el.cos() * az.cos()), c))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn ground_points_never_occlude(cloud in prop::collection::vec(cloud_point(), 1..100), wheel in prop::collection::vec(cloud_point(), 1..20)) {
        let ground: Vec<Vec3> = cloud.iter().map(|(p, _)| *p).collect();
        let n = ground.len();
        let params = OcclusionParams::default();
        let index = build_index(&PointCloud::with_classes(ground, vec![CloudClass::Ground; n]), &params);
        prop_assert!(index.is_empty());
        for (w, _) in wheel {
            prop_assert!(!is_occluded(&w, &index, &params));
        }
    }

    #[test]
    fn occlusion_monotone_in_rho(cloud in prop::collection::vec(cloud_point(), 1..100), wheel in prop::collection::vec(cloud_point(), 1..20), a in 0.0..2.0f64, b in 0.0..2.0f64) {
        let (points, classes): (Vec<Vec3>, Vec<CloudClass>) = cloud.into_iter().unzip();
        let cloud = PointCloud::with_classes(points, classes);
        let (lo, hi) = (OcclusionParams::with_rho(a.min(b)), OcclusionParams::with_rho(a.max(b)));
        let (il, ih) = (build_index(&cloud, &lo), build_index(&cloud, &hi));
        for (w, _) in wheel {
            prop_assert!(!is_occluded(&w, &il, &lo) || is_occluded(&w, &ih, &hi));
        }
    }

    #[test]
    fn tree_matches_linear_scan(
        points in prop::collection::vec((-PI..=PI, -1.5..1.5f64), 1..300),
        queries in prop::collection::vec((-PI..=PI, -1.6..1.6f64), 1..20),
    ) {
        let tree = AngularTree::build(&points);
        for q in queries {
            let got = tree.nearest(q).unwrap();
            let mut best = (usize::MAX, f64::INFINITY);
            for (i, p) in points.iter().enumerate() {
                let mut d = (q.0 - p.0).abs() % (2.0 * PI);
                if d > PI {
                    d = 2.0 * PI - d;
                }
                let dsq = d * d + (q.1 - p.1).powi(2);
                if dsq < best.1 {
                    best = (i, dsq);
                }
            }
            prop_assert_eq!((got.index, got.distance_sq), best);
        }
    }
}

fn quad(w: usize, h: usize) -> impl Strategy<Value = Quad> {
    prop::collection::vec((-5.0..w as f64 + 5.0, -5.0..h as f64 + 5.0), 4)
        .prop_map(|c| Quad([0, 1, 2, 3].map(|i| ImagePoint::new((c[i].0 * 2.0f64).round() / 2.0, (c[i].1 * 2.0f64).round() / 2.0))))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn rasterize_agrees_with_containment_and_is_monotone(quads in prop::collection::vec(quad(24, 16), 0..8), extra in quad(24, 16)) {
        let base = rasterize(&quads, 24, 16);
        for row in 0..16 {
            for col in 0..24 {
                let want = quads.iter().any(|q| q.contains(col as f64, row as f64));
                prop_assert_eq!(base.get(col, row), want);
            }
        }
        let mut more = quads.clone();
        more.push(extra);
        let grown = rasterize(&more, 24, 16);
        prop_assert!(base.data().iter().zip(grown.data()).all(|(a, b)| !*a || *b));
    }
}

fn scored() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    prop::collection::vec((0u8..20, any::<bool>()), 2..200)
        .prop_filter("both classes", |v| v.iter().any(|(_, l)| *l) && v.iter().any(|(_, l)| !*l))
        .prop_map(|v| v.into_iter().map(|(s, l)| (s as f64 / 20.0, l)).unzip())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn auroc_bounds_and_symmetry((scores, labels) in scored()) {
        let a = auroc(&scores, &labels).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        let flipped: Vec<bool> = labels.iter().map(|l| !l).collect();
        prop_assert!((a + auroc(&scores, &flipped).unwrap() - 1.0).abs() < 1e-12);
        // strictly increasing transform keeps the ranking
        let warped: Vec<f64> = scores.iter().map(|s| s * s * s + 3.0 * s).collect();
        prop_assert!((a - auroc(&warped, &labels).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn threshold_lies_among_candidates_and_classify_is_monotone((scores, labels) in scored(), lift in 0.0..0.5f64) {
        let t = select_threshold(&scores, &labels).unwrap();
        prop_assert!(t.distance >= 0.0 && t.distance <= 2f64.sqrt());
        let values: Vec<f64> = scores.iter().map(|s| s.clamp(0.0, 1.0)).collect();
        let risk = RiskMap::new(values.len(), 1, values).unwrap();
        let low = classify(&risk, &t);
        let high = classify(&risk, &RiskThreshold::fixed(t.value + lift));
        for (a, b) in low.iter().zip(&high) {
            prop_assert!(!(*a == RiskClass::LowRisk && *b == RiskClass::HighRisk));
        }
    }

    #[test]
    fn normalized_risk_stays_in_unit_interval(values in prop::collection::vec(0.0..=1.0f64, 6..60)) {
        let n = values.len() / 3 * 3;
        let x = ImageTensor::new(n / 3, 1, 3, values[..n].to_vec()).unwrap();
        let r = ImageTensor::filled(n / 3, 1, 3, 0.5).unwrap();
        let (maps, k) = normalize(&[error_map(&x, &r).unwrap()]).unwrap();
        prop_assert!(k.upper >= k.min);
        prop_assert!(maps[0].values.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
