//! Theoretical receptive fields of the default ResNet-50 FPN levels, plus a
//! custom stack.

use rfassign::geometry::{compute_trf, resnet50_fpn_paths, ConvLayerSpec};

fn main() -> rfassign::Result<()> {
    println!("level\tstride\tlayers\ttrf");
    for (name, stride, layers) in resnet50_fpn_paths() {
        println!("{name}\t{stride}\t{}\t{}", layers.len(), compute_trf(&layers)?);
    }

    let stem = [ConvLayerSpec::new(7, 2)?, ConvLayerSpec::new(3, 2)?];
    println!("\n7x7/2 + 3x3/2 stem: {}", compute_trf(&stem)?);
    Ok(())
}
