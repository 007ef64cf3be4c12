//! Detection loss for a two-location, one-GT toy prediction.

use rfassign::assigner::assign;
use rfassign::loss::{cls_loss_positive, focal_loss_negative, giou, SampleWeights, UnitWeights};
use rfassign::{detection_loss, AssignerConfig, BBox, FocalParams, FpnLevelSpec, LocationGrid, Prediction};

fn main() -> rfassign::Result<()> {
    let unit = SampleWeights::new(1.0, 0.0)?;
    println!("cls_pos(0.5)  = {}", cls_loss_positive(0.5, unit));
    println!("focal(0.5)    = {}", focal_loss_negative(0.5, FocalParams::default()));
    let a = BBox::new(0.0, 0.0, 1.0, 1.0)?;
    let b = BBox::new(2.0, 0.0, 3.0, 1.0)?;
    println!("giou          = {}", giou(&a, &b));

    let grid = LocationGrid::new(16, 8, &[FpnLevelSpec::new("P3", 8, 16.0)?])?;
    let gt = BBox::new(1.0, 1.0, 7.0, 7.0)?;
    let m = assign(&grid, &[gt], &AssignerConfig::default())?;
    let prediction = Prediction::new(
        vec![vec![0.7, 0.1], vec![0.2, 0.05]],
        vec![BBox::new(1.5, 0.5, 7.0, 6.5)?, BBox::new(8.0, 0.0, 16.0, 8.0)?],
    )?;
    let loss = detection_loss(&m, &prediction, &[gt], &[0], &UnitWeights, FocalParams::default())?;
    println!("\n{loss:#?}");
    println!("total         = {}", loss.total());
    Ok(())
}
