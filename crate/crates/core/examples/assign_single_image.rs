//! RFAssigner on one image, printing positives per GT and where the
//! supplementary positives landed.

use rfassign::assigner::{assign, assign_fcos_baseline, assign_rfla_baseline};
use rfassign::{AssignerConfig, BBox, FpnLevelSpec, LocationGrid, MetricKind};

fn main() -> rfassign::Result<()> {
    let fpn = vec![FpnLevelSpec::new("P3", 8, 24.0)?, FpnLevelSpec::new("P4", 16, 48.0)?];
    let grid = LocationGrid::new(96, 64, &fpn)?;
    let gts = [
        BBox::from_xywh(9.0, 9.0, 3.0, 3.0)?,
        BBox::from_xywh(40.0, 20.0, 10.0, 6.0)?,
        BBox::from_xywh(50.0, 10.0, 40.0, 44.0)?,
    ];
    // KLD with a low band admits off-center locations for small boxes
    let cfg = AssignerConfig {
        metric: MetricKind::Kld,
        band_lower: 0.05,
        ..AssignerConfig::default()
    };
    println!("{} locations, {} GTs", grid.len(), gts.len());

    let m = assign(&grid, &gts, &cfg)?;
    let fcos = assign_fcos_baseline(&grid, &gts, &cfg)?;
    let rfla = assign_rfla_baseline(&grid, &gts, &cfg)?;
    println!("gt\tfcos\trfassigner\tsupplements\trfla");
    for g in 0..gts.len() {
        println!(
            "{g}\t{}\t{}\t{}\t{}",
            fcos.positives_per_gt()[g],
            m.positives_per_gt()[g],
            m.supplements_per_gt()[g],
            rfla.positives_per_gt()[g]
        );
    }
    for (l, g) in m.positive_pairs() {
        if m.m_f()[(l, g)] == 1 {
            let loc = grid.location(l).expect("index from the grid");
            println!(
                "supplement: gt {g} <- location {l} at ({}, {}) level {} score {:.4}",
                loc.cx,
                loc.cy,
                loc.level,
                m.rfd()[(l, g)]
            );
        }
    }
    Ok(())
}
