//! Boxes and receptive fields as axis-aligned 2-D Gaussians.
//!
//! A ground-truth box `(x_min, y_min, x_max, y_max)` maps to a Gaussian whose
//! mean is the box center and whose diagonal covariance is `(w²/4, h²/4)`.
//! A feature point's receptive field maps the same way, using the theoretical
//! receptive field (TRF) diameter, optionally shrunk by a GRF scale, as both
//! the width and the height.
//!
//! All coordinates are continuous `f64` pixels. Nothing is snapped to the
//! integer grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box in corner form. Width and height are strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BBox {
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
}

impl BBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        let finite = [x_min, y_min, x_max, y_max].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid(format!(
                "box ({x_min}, {y_min}, {x_max}, {y_max}) has non-finite coordinates"
            )));
        }
        if !(x_max > x_min && y_max > y_min) {
            return Err(Error::invalid(format!(
                "degenerate box ({x_min}, {y_min}, {x_max}, {y_max}): width and height must be positive"
            )));
        }
        Ok(Self {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    /// Builds a box from COCO-style `[x, y, w, h]`.
    pub fn from_xywh(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        Self::new(x, y, x + w, y + h)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn y_min(&self) -> f64 {
        self.y_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Closed-interval containment on all four edges.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.x_min <= x && x <= self.x_max && self.y_min <= y && y <= self.y_max
    }

    /// Clips the box to `[0, width] x [0, height]`. Returns `None` when
    /// nothing of positive area remains.
    pub fn clip(&self, width: f64, height: f64) -> Option<Self> {
        let x_min = self.x_min.clamp(0.0, width);
        let y_min = self.y_min.clamp(0.0, height);
        let x_max = self.x_max.clamp(0.0, width);
        let y_max = self.y_max.clamp(0.0, height);
        Self::new(x_min, y_min, x_max, y_max).ok()
    }

    /// Shifts the box by `(dx, dy)`.
    pub fn translate(&self, dx: f64, dy: f64) -> Result<Self> {
        Self::new(
            self.x_min + dx,
            self.y_min + dy,
            self.x_max + dx,
            self.y_max + dy,
        )
    }
}

/// 2-D Gaussian with diagonal covariance `diag(var_x, var_y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Gaussian2D {
    mu_x: f64,
    mu_y: f64,
    var_x: f64,
    var_y: f64,
}

impl Gaussian2D {
    pub fn new(mu_x: f64, mu_y: f64, var_x: f64, var_y: f64) -> Result<Self> {
        if !(mu_x.is_finite() && mu_y.is_finite()) {
            return Err(Error::invalid(format!(
                "gaussian mean ({mu_x}, {mu_y}) is not finite"
            )));
        }
        if !(var_x > 0.0 && var_y > 0.0 && var_x.is_finite() && var_y.is_finite()) {
            return Err(Error::invalid(format!(
                "gaussian variances ({var_x}, {var_y}) must be finite and positive"
            )));
        }
        Ok(Self {
            mu_x,
            mu_y,
            var_x,
            var_y,
        })
    }

    pub fn mu_x(&self) -> f64 {
        self.mu_x
    }

    pub fn mu_y(&self) -> f64 {
        self.mu_y
    }

    pub fn var_x(&self) -> f64 {
        self.var_x
    }

    pub fn var_y(&self) -> f64 {
        self.var_y
    }

    /// Scales the distribution by `s`: mean becomes `s·μ`, variances `s²·var`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(
            s * self.mu_x,
            s * self.mu_y,
            s * s * self.var_x,
            s * s * self.var_y,
        )
    }
}

/// Gaussian of a ground-truth box: mean at the center, variances `w²/4, h²/4`.
pub fn gt_to_gaussian(bbox: &BBox) -> Gaussian2D {
    let (mu_x, mu_y) = bbox.center();
    let w = bbox.width();
    let h = bbox.height();
    // BBox guarantees w, h > 0.
    Gaussian2D {
        mu_x,
        mu_y,
        var_x: w * w / 4.0,
        var_y: h * h / 4.0,
    }
}

/// Gaussian receptive field of a feature point at `(cx, cy)`.
///
/// The effective diameter is `grf_scale * trf_diameter`, used for both axes.
pub fn rf_to_gaussian(cx: f64, cy: f64, trf_diameter: f64, grf_scale: f64) -> Result<Gaussian2D> {
    if !(trf_diameter > 0.0 && trf_diameter.is_finite()) {
        return Err(Error::invalid(format!(
            "TRF diameter must be positive, got {trf_diameter}"
        )));
    }
    if !(grf_scale > 0.0 && grf_scale <= 1.0) {
        return Err(Error::invalid(format!(
            "GRF scale must lie in (0, 1], got {grf_scale}"
        )));
    }
    let d = grf_scale * trf_diameter;
    let var = d * d / 4.0;
    Gaussian2D::new(cx, cy, var, var)
}

/// One convolution (or pooling) layer as seen by receptive-field arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawConvLayer")]
pub struct ConvLayerSpec {
    kernel: u32,
    stride: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConvLayer {
    kernel: u32,
    stride: u32,
}

impl TryFrom<RawConvLayer> for ConvLayerSpec {
    type Error = Error;

    fn try_from(raw: RawConvLayer) -> Result<Self> {
        ConvLayerSpec::new(raw.kernel, raw.stride)
    }
}

impl ConvLayerSpec {
    pub fn new(kernel: u32, stride: u32) -> Result<Self> {
        if kernel == 0 || stride == 0 {
            return Err(Error::invalid(format!(
                "conv layer needs kernel >= 1 and stride >= 1, got kernel={kernel} stride={stride}"
            )));
        }
        Ok(Self { kernel, stride })
    }

    pub fn kernel(&self) -> u32 {
        self.kernel
    }

    pub fn stride(&self) -> u32 {
        self.stride
    }
}

/// Theoretical receptive field diameter of a layer stack, in input pixels.
///
/// Iterates `r ← r + (k − 1)·j`, `j ← j·s` from `r = j = 1`.
pub fn compute_trf(layers: &[ConvLayerSpec]) -> Result<f64> {
    if layers.is_empty() {
        return Err(Error::invalid("TRF needs at least one layer"));
    }
    let mut rf: u64 = 1;
    let mut jump: u64 = 1;
    for layer in layers {
        rf += (u64::from(layer.kernel) - 1) * jump;
        jump *= u64::from(layer.stride);
    }
    Ok(rf as f64)
}

/// One FPN output level: its stride and TRF diameter (square).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FpnLevelSpec {
    level_name: String,
    stride: u32,
    trf_diameter: f64,
}

impl FpnLevelSpec {
    pub fn new(level_name: impl Into<String>, stride: u32, trf_diameter: f64) -> Result<Self> {
        let level_name = level_name.into();
        if stride == 0 {
            return Err(Error::invalid(format!("level {level_name}: stride must be positive")));
        }
        if !(trf_diameter.is_finite() && trf_diameter >= f64::from(stride)) {
            return Err(Error::invalid(format!(
                "level {level_name}: TRF diameter {trf_diameter} must be >= stride {stride}"
            )));
        }
        Ok(Self {
            level_name,
            stride,
            trf_diameter,
        })
    }

    pub fn level_name(&self) -> &str {
        &self.level_name
    }

    pub fn stride(&self) -> u32 {
        self.stride
    }

    pub fn trf_diameter(&self) -> f64 {
        self.trf_diameter
    }
}

fn conv(kernel: u32, stride: u32) -> ConvLayerSpec {
    ConvLayerSpec { kernel, stride }
}

/// Layer paths from the input to each FPN output of a ResNet-50 + FPN
/// detector (stride on the 3x3 conv of each bottleneck; 3x3 FPN output conv
/// on P3-P5; P6 and P7 as stride-2 3x3 convs stacked on P5).
///
/// 1x1 convolutions do not change the receptive field and are omitted.
pub fn resnet50_fpn_paths() -> Vec<(String, u32, Vec<ConvLayerSpec>)> {
    let mut path = vec![conv(7, 2), conv(3, 2)];
    // layer1: 3 bottlenecks at stride 4
    path.extend(std::iter::repeat_n(conv(3, 1), 3));
    let mut levels = Vec::new();
    for (name, stride, blocks) in [("P3", 8, 4), ("P4", 16, 6), ("P5", 32, 3)] {
        path.push(conv(3, 2));
        path.extend(std::iter::repeat_n(conv(3, 1), blocks - 1));
        let mut level = path.clone();
        level.push(conv(3, 1));
        levels.push((name.to_string(), stride, level));
    }
    let mut extra = levels.last().expect("P5 present").2.clone();
    for (name, stride) in [("P6", 64), ("P7", 128)] {
        extra.push(conv(3, 2));
        levels.push((name.to_string(), stride, extra.clone()));
    }
    levels
}

/// Default FPN levels P3-P7 with TRFs computed from [`resnet50_fpn_paths`].
pub fn default_fpn_levels() -> Vec<FpnLevelSpec> {
    resnet50_fpn_paths()
        .into_iter()
        .map(|(name, stride, layers)| {
            let trf = compute_trf(&layers).expect("non-empty path");
            FpnLevelSpec::new(name, stride, trf).expect("valid default level")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layers(spec: &[(u32, u32)]) -> Vec<ConvLayerSpec> {
        spec.iter()
            .map(|&(k, s)| ConvLayerSpec::new(k, s).unwrap())
            .collect()
    }

    #[test]
    fn gt_gaussian_examples() {
        let g = gt_to_gaussian(&BBox::new(8.0, 8.0, 16.0, 16.0).unwrap());
        assert_eq!((g.mu_x(), g.mu_y(), g.var_x(), g.var_y()), (12.0, 12.0, 16.0, 16.0));

        let g = gt_to_gaussian(&BBox::new(0.0, 0.0, 2.0, 4.0).unwrap());
        assert_eq!((g.mu_x(), g.mu_y(), g.var_x(), g.var_y()), (1.0, 2.0, 1.0, 4.0));

        assert!(BBox::new(10.0, 10.0, 10.0, 12.0).is_err());
        assert!(BBox::new(10.0, 10.0, 9.0, 12.0).is_err());
        assert!(BBox::new(0.0, f64::NAN, 1.0, 1.0).is_err());
    }

    #[test]
    fn rf_gaussian_examples() {
        let g = rf_to_gaussian(5.0, 5.0, 8.0, 1.0).unwrap();
        assert_eq!((g.mu_x(), g.mu_y(), g.var_x(), g.var_y()), (5.0, 5.0, 16.0, 16.0));
        let g = rf_to_gaussian(5.0, 5.0, 8.0, 0.5).unwrap();
        assert_eq!((g.var_x(), g.var_y()), (4.0, 4.0));
        assert!(rf_to_gaussian(5.0, 5.0, 0.0, 1.0).is_err());
        assert!(rf_to_gaussian(5.0, 5.0, 8.0, 0.0).is_err());
        assert!(rf_to_gaussian(5.0, 5.0, 8.0, 1.5).is_err());
    }

    #[test]
    fn trf_examples() {
        assert_eq!(compute_trf(&layers(&[(3, 1)])).unwrap(), 3.0);
        assert_eq!(compute_trf(&layers(&[(3, 1), (3, 1)])).unwrap(), 5.0);
        assert_eq!(compute_trf(&layers(&[(7, 2), (3, 2)])).unwrap(), 11.0);
        assert!(compute_trf(&[]).is_err());
        assert!(ConvLayerSpec::new(0, 1).is_err());
        assert!(ConvLayerSpec::new(3, 0).is_err());
    }

    #[test]
    fn default_trfs() {
        let trfs: Vec<_> = default_fpn_levels()
            .iter()
            .map(|l| (l.level_name().to_string(), l.stride(), l.trf_diameter()))
            .collect();
        assert_eq!(
            trfs,
            vec![
                ("P3".into(), 8, 107.0),
                ("P4".into(), 16, 299.0),
                ("P5".into(), 32, 491.0),
                ("P6".into(), 64, 555.0),
                ("P7".into(), 128, 683.0),
            ]
        );
    }

    #[test]
    fn fpn_level_rejects_trf_below_stride() {
        assert!(FpnLevelSpec::new("P3", 8, 7.5).is_err());
        assert!(FpnLevelSpec::new("P3", 8, 8.0).is_ok());
        assert!(FpnLevelSpec::new("P3", 0, 8.0).is_err());
    }

    #[test]
    fn clip_and_contains() {
        let b = BBox::new(-2.0, 3.0, 10.0, 40.0).unwrap();
        let c = b.clip(8.0, 32.0).unwrap();
        assert_eq!((c.x_min(), c.y_min(), c.x_max(), c.y_max()), (0.0, 3.0, 8.0, 32.0));
        assert!(BBox::new(50.0, 50.0, 60.0, 60.0).unwrap().clip(32.0, 32.0).is_none());
        assert!(c.contains(8.0, 32.0));
        assert!(!c.contains(8.0001, 32.0));
    }

    #[test]
    fn conv_layer_deserialize_validates() {
        #[derive(Deserialize)]
        struct Wrap {
            l: ConvLayerSpec,
        }
        let ok: Wrap = toml::from_str("l = { kernel = 3, stride = 2 }").unwrap();
        assert_eq!(ok.l, ConvLayerSpec::new(3, 2).unwrap());
        assert!(toml::from_str::<Wrap>("l = { kernel = 0, stride = 2 }").is_err());
    }
}
