//! How each metric splits the synthetic dataset's positives between point
//! prior and supplementation, at a lowered band.

use rfassign::ingest::{per_gt_counts, ScaleBucket};
use rfassign::pipeline::run_assigner;
use rfassign::synthetic::{fixture_fpn, generate, SyntheticSpec};
use rfassign::{AssignerConfig, AssignerKind, MetricKind};

fn main() -> rfassign::Result<()> {
    let slice = generate(&SyntheticSpec {
        n_images: 25,
        ..SyntheticSpec::default()
    })?;
    println!("metric\tbucket\tpositives\tsupplements\tzero-positive GTs");
    for metric in MetricKind::ALL {
        let cfg = AssignerConfig {
            metric,
            band_lower: 0.2,
            nwd_c: 16.0,
            ..AssignerConfig::default()
        };
        let run = run_assigner(&slice, &fixture_fpn(), AssignerKind::Rfassigner, &cfg, None)?;
        let counts = per_gt_counts(&slice, &run.matrices)?;
        for bucket in ScaleBucket::ALL {
            let rows: Vec<_> = counts.iter().filter(|c| c.0 == bucket).collect();
            let pos: usize = rows.iter().map(|c| c.1).sum();
            let sup: usize = rows.iter().map(|c| c.2).sum();
            let zero = rows.iter().filter(|c| c.1 == 0).count();
            println!("{metric}\t{bucket}\t{pos}\t{sup}\t{zero}");
        }
    }
    Ok(())
}
