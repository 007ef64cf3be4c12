#![allow(dead_code)]

use rand::Rng;
use rfassign::{AssignerConfig, AssignmentMatrix, BBox, FpnLevelSpec, Gaussian2D, LocationGrid, MetricKind};
use rfassign_oracle::{Gauss, Metric, NaiveAssignment, NaiveConfig};

pub fn oracle_metric(kind: MetricKind) -> Metric {
    match kind {
        MetricKind::Wd => Metric::Wd,
        MetricKind::Kld => Metric::Kld,
        MetricKind::Nwd => Metric::Nwd,
        MetricKind::Gcd => Metric::Gcd,
    }
}

pub fn oracle_config(cfg: &AssignerConfig) -> NaiveConfig {
    NaiveConfig {
        grf_scales: cfg.grf_scales.clone(),
        top_k: cfg.top_k,
        band_lower: cfg.band_lower,
        band_upper: cfg.band_upper,
        metric: oracle_metric(cfg.metric),
        nwd_c: cfg.nwd_c,
        rfla_background_threshold: cfg.rfla_background_threshold,
    }
}

pub fn oracle_gauss(g: &Gaussian2D) -> Gauss {
    Gauss::diag(g.mu_x(), g.mu_y(), g.var_x(), g.var_y())
}

pub fn oracle_boxes(boxes: &[BBox]) -> Vec<[f64; 4]> {
    boxes
        .iter()
        .map(|b| [b.x_min(), b.y_min(), b.x_max(), b.y_max()])
        .collect()
}

pub fn oracle_levels(fpn: &[FpnLevelSpec]) -> Vec<(u32, f64)> {
    fpn.iter().map(|l| (l.stride(), l.trf_diameter())).collect()
}

/// Exact equality of every matrix, with `rfd` compared by bit pattern.
pub fn matches_oracle(m: &AssignmentMatrix, o: &NaiveAssignment) -> bool {
    let n_l = m.n_locations();
    let n_g = m.n_gts();
    if o.rfd.len() != n_l {
        return false;
    }
    (0..n_l).all(|l| {
        (0..n_g).all(|g| {
            m.rfd()[(l, g)].to_bits() == o.rfd[l][g].to_bits()
                && m.m_p()[(l, g)] == o.m_p[l][g]
                && m.m_f()[(l, g)] == o.m_f[l][g]
                && m.m_result()[(l, g)] == o.m_result[l][g]
        })
    })
}

pub fn random_gaussian(rng: &mut impl Rng) -> Gaussian2D {
    let sx: f64 = rng.gen_range(0.5..60.0);
    let sy: f64 = rng.gen_range(0.5..60.0);
    Gaussian2D::new(
        rng.gen_range(-50.0..50.0),
        rng.gen_range(-50.0..50.0),
        sx * sx / 4.0,
        sy * sy / 4.0,
    )
    .unwrap()
}

/// Small random instance: ≤ 32 locations, 1-4 GTs.
pub fn random_instance(rng: &mut impl Rng) -> (LocationGrid, Vec<BBox>, AssignerConfig) {
    let stride = [4u32, 8][rng.gen_range(0..2)];
    let side = stride * rng.gen_range(2..=4);
    let mut fpn = vec![FpnLevelSpec::new("A", stride, rng.gen_range(stride as f64..6.0 * stride as f64)).unwrap()];
    if rng.gen_bool(0.5) {
        let s2 = stride * 2;
        fpn.push(FpnLevelSpec::new("B", s2, rng.gen_range(s2 as f64..5.0 * s2 as f64)).unwrap());
    }
    let grid = LocationGrid::new(side, side, &fpn).unwrap();
    assert!(grid.len() <= 32);
    let n_gts = rng.gen_range(1..=4);
    let boxes = (0..n_gts)
        .map(|_| {
            let w = rng.gen_range(0.5..side as f64 / 2.0);
            let h = rng.gen_range(0.5..side as f64 / 2.0);
            let x = rng.gen_range(0.0..side as f64 - w);
            let y = rng.gen_range(0.0..side as f64 - h);
            BBox::new(x, y, x + w, y + h).unwrap()
        })
        .collect();
    let metric = MetricKind::ALL[rng.gen_range(0..4)];
    let band_lower = rng.gen_range(0.0..0.9);
    let cfg = AssignerConfig {
        top_k: rng.gen_range(1..=12),
        band_lower,
        band_upper: rng.gen_range(band_lower..=1.0),
        metric,
        nwd_c: rng.gen_range(1.0..16.0),
        ..AssignerConfig::default()
    };
    (grid, boxes, cfg)
}
