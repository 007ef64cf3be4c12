//! Distance and similarity of a tiny GT against receptive fields at growing
//! offsets, under each metric.

use rfassign::distance::{distance, similarity, MetricKind};
use rfassign::geometry::{gt_to_gaussian, rf_to_gaussian, BBox};

fn main() -> rfassign::Result<()> {
    let gt = gt_to_gaussian(&BBox::from_xywh(100.0, 100.0, 6.0, 6.0)?);
    println!("{:>6} {:>6} {:>14} {:>12}", "metric", "dx", "distance", "similarity");
    for kind in MetricKind::ALL {
        for dx in [0.0, 1.0, 2.0, 4.0] {
            let rf = rf_to_gaussian(103.0 + dx, 103.0, 6.0, 1.0)?;
            let d = distance(kind, &gt, &rf);
            let s = similarity(kind, &gt, &rf, 8.0)?;
            println!("{kind:>6} {dx:>6} {d:>14.6} {s:>12.6}");
        }
    }
    Ok(())
}
