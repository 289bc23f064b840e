//! sRGB to CIE L*a*b* (D65) and the affine-normalized Lab used for thresholds.

use serde::{Deserialize, Serialize};

/// D65 reference white.
const WHITE: [f64; 3] = [0.950_47, 1.0, 1.088_83];

fn srgb_to_linear(c: u8) -> f64 {
    let c = f64::from(c) / 255.0;
    if c <= 0.040_45 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

/// Standard sRGB (0..=255 per channel) to CIE L*a*b* under D65.
pub fn rgb_to_lab(rgb: [u8; 3]) -> [f64; 3] {
    let [r, g, b] = rgb.map(srgb_to_linear);
    let x = 0.412_456_4 * r + 0.357_576_1 * g + 0.180_437_5 * b;
    let y = 0.212_672_9 * r + 0.715_152_2 * g + 0.072_175_0 * b;
    let z = 0.019_333_9 * r + 0.119_192_0 * g + 0.950_304_1 * b;
    let fx = lab_f(x / WHITE[0]);
    let fy = lab_f(y / WHITE[1]);
    let fz = lab_f(z / WHITE[2]);
    [(116.0 * fy - 16.0).clamp(0.0, 100.0), 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// Affine map applied to L*a*b* before thresholding:
/// `L' = l_scale L* + l_offset`, `a' = a_scale a*`, `b' = b_scale b*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabNormalization {
    pub l_scale: f64,
    pub l_offset: f64,
    pub a_scale: f64,
    pub b_scale: f64,
}

impl LabNormalization {
    pub const IDENTITY: LabNormalization = LabNormalization {
        l_scale: 1.0,
        l_offset: 0.0,
        a_scale: 1.0,
        b_scale: 1.0,
    };

    /// Centered lightness, halved chroma, and a* negated so that green
    /// foliage maps to large positive a'.
    pub const SOYBEAN: LabNormalization = LabNormalization {
        l_scale: 1.0,
        l_offset: -50.0,
        a_scale: -0.5,
        b_scale: 0.5,
    };

    pub const MAIZE: LabNormalization = LabNormalization {
        l_scale: 1.0,
        l_offset: 0.0,
        a_scale: -0.5,
        b_scale: 0.5,
    };

    pub fn apply(&self, lab: [f64; 3]) -> [f64; 3] {
        [
            self.l_scale * lab[0] + self.l_offset,
            self.a_scale * lab[1],
            self.b_scale * lab[2],
        ]
    }

    pub fn convert(&self, rgb: [u8; 3]) -> [f64; 3] {
        self.apply(rgb_to_lab(rgb))
    }
}
