//! Distances between diagonal 2-D Gaussians and their similarity scores.
//!
//! Four metrics are available: the 2-Wasserstein distance (WD), its
//! normalized form (NWD), the Kullback-Leibler divergence (KLD) and the
//! Gaussian combined distance (GCD). Every metric is mapped into a similarity
//! in `(0, 1]` so the assigner's thresholds apply uniformly. GCD is the
//! default; its similarity is the receptive-field distance score (RFD).
//!
//! Covariances are diagonal by construction, so matrix square roots and
//! inverses reduce to per-axis scalars.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Gaussian2D;

/// Smallest value a similarity may take. `exp(-d)` underflows to zero for
/// `d > ~745`, which would break the `(0, 1]` contract.
pub const SIMILARITY_FLOOR: f64 = f64::MIN_POSITIVE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Wd,
    Kld,
    Nwd,
    #[default]
    Gcd,
}

impl MetricKind {
    pub const ALL: [MetricKind; 4] = [MetricKind::Wd, MetricKind::Kld, MetricKind::Nwd, MetricKind::Gcd];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Wd => "wd",
            MetricKind::Kld => "kld",
            MetricKind::Nwd => "nwd",
            MetricKind::Gcd => "gcd",
        }
    }
}


impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wd" => Ok(MetricKind::Wd),
            "kld" => Ok(MetricKind::Kld),
            "nwd" => Ok(MetricKind::Nwd),
            "gcd" => Ok(MetricKind::Gcd),
            other => Err(Error::invalid(format!(
                "unknown metric '{other}' (expected one of wd, kld, nwd, gcd)"
            ))),
        }
    }
}

/// Receptive-field distance score, a similarity in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct RfdScore(f64);

impl RfdScore {
    pub fn value(self) -> f64 {
        self.0
    }
}

fn to_similarity(distance: f64) -> f64 {
    (-distance).exp().max(SIMILARITY_FLOOR)
}

/// Squared Gaussian combined distance, trace reading of the sandwich terms:
///
/// `2Δμᵀ Σa⁻¹ Δμ + 2Δμᵀ Σb⁻¹ Δμ + 2 tr(Σa⁻¹)‖Σa^½ − Σb^½‖²_F + 2 tr(Σb⁻¹)‖Σa^½ − Σb^½‖²_F`
pub fn gcd_squared(a: &Gaussian2D, b: &Gaussian2D) -> f64 {
    let dx = a.mu_x() - b.mu_x();
    let dy = a.mu_y() - b.mu_y();
    let mean_a = 2.0 * (dx * dx / a.var_x() + dy * dy / a.var_y());
    let mean_b = 2.0 * (dx * dx / b.var_x() + dy * dy / b.var_y());
    let sx = a.var_x().sqrt() - b.var_x().sqrt();
    let sy = a.var_y().sqrt() - b.var_y().sqrt();
    let frob = sx * sx + sy * sy;
    let cov_a = 2.0 * (1.0 / a.var_x() + 1.0 / a.var_y()) * frob;
    let cov_b = 2.0 * (1.0 / b.var_x() + 1.0 / b.var_y()) * frob;
    mean_a + mean_b + cov_a + cov_b
}

/// `exp(−sqrt(gcd²))`.
pub fn rfd(a: &Gaussian2D, b: &Gaussian2D) -> RfdScore {
    RfdScore(to_similarity(gcd_squared(a, b).sqrt()))
}

/// `D_KL(a ‖ b)`. Not symmetric.
pub fn kld(a: &Gaussian2D, b: &Gaussian2D) -> f64 {
    let dx = a.mu_x() - b.mu_x();
    let dy = a.mu_y() - b.mu_y();
    let trace = a.var_x() / b.var_x() + a.var_y() / b.var_y();
    let maha = dx * dx / b.var_x() + dy * dy / b.var_y();
    let log_det = ((b.var_x() * b.var_y()) / (a.var_x() * a.var_y())).ln();
    // rounding can push near-identical pairs a hair below zero
    (0.5 * (trace + maha - 2.0 + log_det)).max(0.0)
}

/// Squared 2-Wasserstein distance for commuting (diagonal) covariances.
pub fn wd_squared(a: &Gaussian2D, b: &Gaussian2D) -> f64 {
    let dx = a.mu_x() - b.mu_x();
    let dy = a.mu_y() - b.mu_y();
    let sx = a.var_x().sqrt() - b.var_x().sqrt();
    let sy = a.var_y().sqrt() - b.var_y().sqrt();
    dx * dx + dy * dy + (sx * sx + sy * sy)
}

/// Normalized Wasserstein distance `exp(−sqrt(wd²)/c)`.
pub fn nwd(a: &Gaussian2D, b: &Gaussian2D, c: f64) -> Result<f64> {
    check_constant(c)?;
    Ok(to_similarity(wd_squared(a, b).sqrt() / c))
}

fn check_constant(c: f64) -> Result<()> {
    if c > 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "normalizing constant must be positive, got {c}"
        )))
    }
}

/// The raw divergence behind `kind`: `gcd²`, `kld`, or `wd²` (for both WD
/// and NWD).
pub fn distance(kind: MetricKind, a: &Gaussian2D, b: &Gaussian2D) -> f64 {
    match kind {
        MetricKind::Gcd => gcd_squared(a, b),
        MetricKind::Kld => kld(a, b),
        MetricKind::Wd | MetricKind::Nwd => wd_squared(a, b),
    }
}

/// Similarity in `(0, 1]` under `kind`.
///
/// `a` is the ground-truth Gaussian and `b` the receptive field; only KLD
/// cares about the order (`D_KL(gt ‖ rf)`). `c` is used by WD and NWD.
pub fn similarity(kind: MetricKind, a: &Gaussian2D, b: &Gaussian2D, c: f64) -> Result<f64> {
    match kind {
        MetricKind::Gcd => Ok(rfd(a, b).value()),
        MetricKind::Kld => Ok(to_similarity(kld(a, b).sqrt())),
        MetricKind::Nwd | MetricKind::Wd => nwd(a, b, c),
    }
}
