use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ORTHONORMAL_TOL: f64 = 1e-6;
pub const GIMBAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadPose {
    pub pitch: f64,
    pub yaw: f64,
    pub roll: f64,
    /// `|cos yaw|` is below the gimbal tolerance, so pitch and roll are not
    /// separately identifiable.
    pub gimbal_lock: bool,
}

/// `R = Rx(pitch) · Ry(yaw) · Rz(roll)`, row-major.
pub fn compose(pitch: f64, yaw: f64, roll: f64) -> [f64; 9] {
    let (sp, cp) = pitch.sin_cos();
    let (sy, cy) = yaw.sin_cos();
    let (sr, cr) = roll.sin_cos();
    [
        cy * cr,
        -cy * sr,
        sy,
        cp * sr + sp * sy * cr,
        cp * cr - sp * sy * sr,
        -sp * cy,
        sp * sr - cp * sy * cr,
        sp * cr + cp * sy * sr,
        cp * cy,
    ]
}

pub fn orthonormality_error(r: &[f64; 9]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let dot: f64 = (0..3).map(|k| r[3 * i + k] * r[3 * j + k]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).abs());
        }
    }
    let det = r[0] * (r[4] * r[8] - r[5] * r[7]) - r[1] * (r[3] * r[8] - r[5] * r[6])
        + r[2] * (r[3] * r[7] - r[4] * r[6]);
    worst.max((det - 1.0).abs())
}

/// Decomposes a rotation into intrinsic X-Y-Z (pitch, yaw, roll) angles.
pub fn head_pose(r: &[f64; 9]) -> Result<HeadPose> {
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("rotation matrix".into()));
    }
    let dev = orthonormality_error(r);
    if dev > ORTHONORMAL_TOL {
        return Err(Error::NotOrthonormal(dev));
    }
    let yaw = r[2].clamp(-1.0, 1.0).asin();
    if yaw.cos().abs() < GIMBAL_TOL {
        // Only pitch ± roll is determined; put it all in pitch.
        let pitch = r[7].atan2(r[4]);
        return Ok(HeadPose {
            pitch,
            yaw,
            roll: 0.0,
            gimbal_lock: true,
        });
    }
    Ok(HeadPose {
        pitch: (-r[5]).atan2(r[8]),
        yaw,
        roll: (-r[1]).atan2(r[0]),
        gimbal_lock: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GestureConfig {
    /// Minimum high-passed excursion that counts as a swing, in radians.
    pub amplitude_rad: f64,
    /// Window for both the moving-average filter and one gesture, in seconds.
    pub window_s: f64,
}

impl Default for GestureConfig {
    fn default() -> Self {
        GestureConfig {
            amplitude_rad: 0.03,
            window_s: 1.0,
        }
    }
}

/// Subtracts a centered moving average spanning `window` frames.
fn high_pass(x: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    let mut prefix = Vec::with_capacity(x.len() + 1);
    prefix.push(0.0);
    for v in x {
        prefix.push(prefix.last().copied().unwrap_or(0.0) + v);
    }
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(x.len());
            x[i] - (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Counts gestures in one contiguous series: three consecutive swings of
/// alternating sign whose onsets fall within one window. Gestures do not share
/// swings.
pub fn count_gestures(series: &[f64], step_s: f64, config: &GestureConfig) -> usize {
    if series.len() < 3 || !(step_s > 0.0) {
        return 0;
    }
    let window = ((config.window_s / step_s).round() as usize).max(1);
    let hp = high_pass(series, window);

    // (onset frame, sign) of each maximal excursion beyond the amplitude.
    let mut lobes: Vec<(usize, i8)> = Vec::new();
    let mut current = 0i8;
    for (i, v) in hp.iter().enumerate() {
        let s = if *v > config.amplitude_rad {
            1
        } else if *v < -config.amplitude_rad {
            -1
        } else {
            0
        };
        if s != 0 && s != current {
            lobes.push((i, s));
        }
        current = s;
    }
    // Same-sign excursions separated by a quiet gap are one swing.
    lobes.dedup_by(|b, a| a.1 == b.1);

    let mut events = 0;
    let mut k = 0;
    while k + 2 < lobes.len() {
        let span = (lobes[k + 2].0 - lobes[k].0) as f64 * step_s;
        if span <= config.window_s {
            events += 1;
            k += 3;
        } else {
            k += 1;
        }
    }
    events
}
