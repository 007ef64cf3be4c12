//! Writes the synthetic dataset as COCO JSON, reads it back and prints the
//! per-bucket report for all three assigners.
//!
//! `cargo run --example coco_report [path.json]` reports on an existing file
//! instead.

use rfassign::ingest::{load_coco, report, write_coco};
use rfassign::pipeline::run_assigners;
use rfassign::synthetic::{fixture_fpn, generate, SyntheticSpec};
use rfassign::{AssignerConfig, AssignerKind};

fn main() -> rfassign::Result<()> {
    let path = match std::env::args().nth(1) {
        Some(p) => p.into(),
        None => {
            let p = std::env::temp_dir().join("rfassign_fixture.json");
            write_coco(&generate(&SyntheticSpec::default())?, &p)?;
            p
        }
    };
    let slice = load_coco(&path)?;
    println!("{}: {} images, {} GTs", path.display(), slice.images().len(), slice.gt_count());
    let configs: Vec<_> = AssignerKind::ALL
        .iter()
        .map(|&k| (k, AssignerConfig::default()))
        .collect();
    let runs = run_assigners(&slice, &fixture_fpn(), &configs, None)?;
    print!("{}", report(&slice, &runs)?.to_csv()?);
    Ok(())
}
