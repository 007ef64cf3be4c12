mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rfassign::assigner::{assign, assign_rfla_baseline, supplement_mask};
use rfassign::{AssignerConfig, Mask};
use rfassign_oracle::{naive_assign, naive_grid, naive_rfla, selection_rank};

use common::*;

fn locations(grid: &rfassign::LocationGrid) -> Vec<(f64, f64, f64)> {
    let levels: Vec<_> = grid
        .levels()
        .iter()
        .map(|l| (l.spec().stride(), l.spec().trf_diameter()))
        .collect();
    naive_grid(grid.width(), grid.height(), &levels)
}

#[test]
fn rfla_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..300 {
        let (grid, boxes, mut cfg) = random_instance(&mut rng);
        cfg.rfla_background_threshold = rng.gen_range(0.0..1.0);
        let m = assign_rfla_baseline(&grid, &boxes, &cfg).unwrap();
        let o = naive_rfla(&locations(&grid), &oracle_boxes(&boxes), &oracle_config(&cfg));
        assert!(matches_oracle(&m, &o), "instance {i}");
    }
}

#[test]
fn default_config_matches_oracle_on_larger_grids() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for i in 0..40 {
        let (grid, boxes, cfg) = random_instance(&mut rng);
        let wide = rfassign::LocationGrid::new(
            grid.width() * 3,
            grid.height() * 2,
            &grid.levels().iter().map(|l| l.spec().clone()).collect::<Vec<_>>(),
        )
        .unwrap();
        for cfg in [cfg, AssignerConfig::default()] {
            let m = assign(&wide, &boxes, &cfg).unwrap();
            let o = naive_assign(&locations(&wide), &oracle_boxes(&boxes), &oracle_config(&cfg));
            assert!(matches_oracle(&m, &o), "instance {i}");
        }
    }
}

/// Ties, duplicates and lone candidates, fed straight into the supplement
/// step against the oracle's selection-sort ranking.
#[test]
fn supplement_on_quantized_scores_matches_ranking_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for i in 0..2000 {
        let n = rng.gen_range(1..16);
        let scores: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(0..8u8)) / 8.0).collect();
        let prior: Vec<u8> = (0..n).map(|_| u8::from(rng.gen_bool(0.2))).collect();
        let cfg = AssignerConfig {
            top_k: rng.gen_range(1..10),
            band_lower: 0.25,
            band_upper: 0.875,
            ..AssignerConfig::default()
        };
        let rfd = ndarray::Array2::from_shape_vec((n, 1), scores.clone()).unwrap();
        let m_p = Mask::from_shape_vec((n, 1), prior.clone()).unwrap();
        let got: Vec<u8> = supplement_mask(&rfd, &m_p, &cfg).unwrap().iter().copied().collect();

        let pool: Vec<_> = (0..n)
            .filter(|&l| prior[l] == 0 && (0.25..=0.875).contains(&scores[l]))
            .map(|l| (l, scores[l]))
            .collect();
        let mut want = vec![0u8; n];
        if pool.len() == 1 {
            want[pool[0].0] = 1;
        } else if !pool.is_empty() {
            let ranked = selection_rank(&pool);
            let taken = &ranked[..ranked.len().min(cfg.top_k)];
            let k = taken.len() as f64;
            let mean = taken.iter().fold(0.0, |a, t| a + t.1) / k;
            let var = taken.iter().fold(0.0, |a, t| a + (t.1 - mean) * (t.1 - mean)) / k;
            for &(l, s) in taken {
                if s > mean + var.sqrt() {
                    want[l] = 1;
                }
            }
        }
        assert_eq!(got, want, "case {i}: scores {scores:?} prior {prior:?} k {}", cfg.top_k);
    }
}
