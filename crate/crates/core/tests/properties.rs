mod common;

use proptest::prelude::*;

use rfassign::assigner::{assign, assign_fcos_baseline, assign_rfla_baseline, point_prior_mask};
use rfassign::distance::{gcd_squared, kld, similarity, wd_squared};
use rfassign::geometry::{gt_to_gaussian, BBox, FpnLevelSpec, Gaussian2D};
use rfassign::ingest::{bucket_of_size, parse_coco, to_coco_json, DatasetSlice, GTObject, ImageInfo, ScaleBucket};
use rfassign::loss::{cls_loss_positive, giou, iou, SampleWeights};
use rfassign::{AssignerConfig, LocationGrid, MetricKind};

fn gaussian() -> impl Strategy<Value = Gaussian2D> {
    (-100.0..100.0f64, -100.0..100.0f64, 0.1..400.0f64, 0.1..400.0f64)
        .prop_map(|(mx, my, vx, vy)| Gaussian2D::new(mx, my, vx, vy).unwrap())
}

fn bbox() -> impl Strategy<Value = BBox> {
    (-50.0..50.0f64, -50.0..50.0f64, 0.01..60.0f64, 0.01..60.0f64)
        .prop_map(|(x, y, w, h)| BBox::new(x, y, x + w, y + h).unwrap())
}

fn metric() -> impl Strategy<Value = MetricKind> {
    prop::sample::select(MetricKind::ALL.to_vec())
}

proptest! {
    #[test]
    fn similarity_in_unit_interval(a in gaussian(), b in gaussian(), kind in metric(), c in 0.5..20.0f64) {
        let s = similarity(kind, &a, &b, c).unwrap();
        prop_assert!(s > 0.0 && s <= 1.0);
        prop_assert_eq!(similarity(kind, &a, &a, c).unwrap(), 1.0);
    }

    #[test]
    fn symmetric_metrics(a in gaussian(), b in gaussian()) {
        let (g1, g2) = (gcd_squared(&a, &b), gcd_squared(&b, &a));
        prop_assert!((g1 - g2).abs() <= 1e-9 * g1.max(g2).max(1e-300));
        prop_assert_eq!(wd_squared(&a, &b), wd_squared(&b, &a));
        prop_assert!(kld(&a, &b) >= 0.0);
    }

    #[test]
    fn gcd_grows_with_mean_offset(a in gaussian(), d in 0.01..50.0f64, extra in 0.01..50.0f64) {
        let near = Gaussian2D::new(a.mu_x() + d, a.mu_y(), a.var_x(), a.var_y()).unwrap();
        let far = Gaussian2D::new(a.mu_x() + d + extra, a.mu_y(), a.var_x(), a.var_y()).unwrap();
        prop_assert!(gcd_squared(&a, &near) < gcd_squared(&a, &far));
    }

    #[test]
    fn giou_bounds_and_symmetry(a in bbox(), b in bbox(), dx in -30.0..30.0f64, dy in -30.0..30.0f64) {
        let g = giou(&a, &b);
        prop_assert!(g > -1.0 && g <= 1.0);
        prop_assert!((g - giou(&b, &a)).abs() < 1e-12);
        prop_assert!(g <= iou(&a, &b) + 1e-15);
        let moved = giou(&a.translate(dx, dy).unwrap(), &b.translate(dx, dy).unwrap());
        prop_assert!((g - moved).abs() < 1e-9);
    }

    #[test]
    fn cls_loss_monotone(s in 0.01..0.98f64, ds in 0.001..0.01f64) {
        let pos = SampleWeights::new(1.0, 0.0).unwrap();
        let neg = SampleWeights::new(0.0, 1.0).unwrap();
        prop_assert!(cls_loss_positive(s + ds, pos) < cls_loss_positive(s, pos));
        prop_assert!(cls_loss_positive(s + ds, neg) > cls_loss_positive(s, neg));
    }

    #[test]
    fn buckets_partition_sizes(size in 0.001..500.0f64) {
        let hits = ScaleBucket::ALL.iter().filter(|b| {
            let (lo, hi) = b.range();
            lo <= size && size < hi
        }).count();
        prop_assert_eq!(hits, 1);
        let (lo, hi) = bucket_of_size(size).range();
        prop_assert!(lo <= size && size < hi);
    }

    #[test]
    fn grid_size_is_ceil_product(w in 1u32..300, h in 1u32..300, s in prop::sample::select(vec![4u32, 8, 16, 32])) {
        let grid = LocationGrid::new(w, h, &[FpnLevelSpec::new("L", s, 2.0 * s as f64).unwrap()]).unwrap();
        prop_assert_eq!(grid.len(), (w.div_ceil(s) * h.div_ceil(s)) as usize);
        for loc in grid.iter() {
            prop_assert_eq!(grid.location(loc.index).unwrap(), loc);
        }
    }

    #[test]
    fn mask_invariants(seed in any::<u64>()) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let (grid, boxes, cfg) = common::random_instance(&mut rng);
        let m = assign(&grid, &boxes, &cfg).unwrap();
        for ((&p, &f), &r) in m.m_p().iter().zip(m.m_f()).zip(m.m_result()) {
            prop_assert!(p <= 1 && f <= 1);
            // supplements never overlap the point prior
            prop_assert!(!(p == 1 && f == 1));
            prop_assert_eq!(r, p | f);
        }
        prop_assert_eq!(m.m_p(), &point_prior_mask(&grid, &boxes));
        let fcos = assign_fcos_baseline(&grid, &boxes, &cfg).unwrap();
        for (a, b) in m.positives_per_gt().iter().zip(fcos.positives_per_gt()) {
            prop_assert!(*a >= b);
        }
        let rfla = assign_rfla_baseline(&grid, &boxes, &cfg).unwrap();
        for n in rfla.positives_per_gt() {
            prop_assert!(n <= cfg.top_k);
        }
        let off = AssignerConfig { band_lower: cfg.band_upper, ..cfg.clone() };
        let off = assign(&grid, &boxes, &off).unwrap();
        prop_assert_eq!(off.m_result(), fcos.m_result());
    }

    #[test]
    fn gt_gaussian_matches_box(b in bbox()) {
        let g = gt_to_gaussian(&b);
        prop_assert_eq!((g.mu_x(), g.mu_y()), b.center());
        prop_assert!((g.var_x() - b.width() * b.width() / 4.0).abs() <= 1e-12 * g.var_x());
    }

    #[test]
    fn coco_round_trip(boxes in prop::collection::vec((0u32..200, 0u32..200, 1u32..56, 1u32..56), 0..12)) {
        let images = vec![ImageInfo { id: 7, width: 256, height: 256 }];
        let gts = boxes
            .iter()
            .map(|&(x, y, w, h)| {
                let (x, y) = (f64::from(x), f64::from(y));
                GTObject::new(BBox::new(x, y, x + f64::from(w), y + f64::from(h)).unwrap(), 1, 7)
            })
            .collect();
        let slice = DatasetSlice::new(images, gts, vec![]).unwrap();
        let text = serde_json::to_string(&to_coco_json(&slice)).unwrap();
        let back = parse_coco(std::path::Path::new("mem.json"), &text).unwrap();
        prop_assert_eq!(back, slice);
    }
}
