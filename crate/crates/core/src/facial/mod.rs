//! Facial features from shape-model parameter tracks: landmark distances of
//! the local shape, head pose, nod and shake rates, and smile intensity.

mod pose;
mod shape;

use serde::{Deserialize, Serialize};

use crate::corpus::{to_ms, FacialFrame, InterviewBundle};
use crate::error::{Error, Result};
use crate::stats;

pub use pose::{compose, count_gestures, head_pose, orthonormality_error, GestureConfig, HeadPose};
pub use shape::{
    geometric_features, reconstruct_local_shape, LandmarkConfig, Point, ShapeModel, LANDMARKS,
};

pub const FACIAL_FEATURES: [&str; 15] = [
    "obh",
    "ibh",
    "olh",
    "ilh",
    "eye_open",
    "lip_cdt",
    "pitch_mean",
    "pitch_sd",
    "yaw_mean",
    "yaw_sd",
    "roll_mean",
    "roll_sd",
    "nod_rate",
    "shake_rate",
    "smile",
];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FacialConfig {
    pub landmarks: LandmarkConfig,
    pub gestures: GestureConfig,
}

/// Interview-level facial features in [`FACIAL_FEATURES`] order. All fields
/// are `None` when no facial frame falls inside an answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacialVector {
    pub values: [Option<f64>; 15],
}

impl FacialVector {
    pub fn missing() -> Self {
        FacialVector { values: [None; 15] }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        let i = FACIAL_FEATURES.iter().position(|n| *n == name)?;
        self.values[i]
    }
}

/// Nod and shake rates in events per minute over the given answer pieces.
/// Precomputed per-frame counts win over the heuristic when every frame
/// carries them.
pub fn nod_shake(
    pieces: &[&[FacialFrame]],
    step_s: f64,
    total_s: f64,
    config: &GestureConfig,
) -> Result<(f64, f64)> {
    if !(total_s > 0.0) {
        return Ok((0.0, 0.0));
    }
    let all = || pieces.iter().flat_map(|p| p.iter());
    let precomputed = |get: fn(&FacialFrame) -> Option<u32>| -> Option<u64> {
        all().map(|f| get(f).map(u64::from)).sum::<Option<u64>>()
    };
    let (mut nods, mut shakes) = (precomputed(|f| f.nod_count), precomputed(|f| f.shake_count));
    if nods.is_none() || shakes.is_none() {
        let (mut n, mut s) = (0u64, 0u64);
        for piece in pieces {
            let poses = piece
                .iter()
                .map(|f| head_pose(&f.rotation))
                .collect::<Result<Vec<_>>>()?;
            let pitch: Vec<f64> = poses.iter().map(|p| p.pitch).collect();
            let yaw: Vec<f64> = poses.iter().map(|p| p.yaw).collect();
            n += count_gestures(&pitch, step_s, config) as u64;
            s += count_gestures(&yaw, step_s, config) as u64;
        }
        nods = nods.or(Some(n));
        shakes = shakes.or(Some(s));
    }
    let minutes = total_s / 60.0;
    Ok((
        nods.unwrap_or(0) as f64 / minutes,
        shakes.unwrap_or(0) as f64 / minutes,
    ))
}

/// Averages per-frame features over the frames inside the answer segments.
/// Smile comes from the smile track when there is one, otherwise from the
/// facial frames.
pub fn facial_aggregate(
    bundle: &InterviewBundle,
    model: Option<&ShapeModel>,
    config: &FacialConfig,
) -> Result<FacialVector> {
    let mut out = FacialVector::missing();
    let spans: Vec<(i64, i64)> = bundle
        .answers
        .iter()
        .map(|a| (to_ms(a.start_s), to_ms(a.end_s)))
        .collect();

    if let Some(track) = &bundle.facial {
        let pieces: Vec<&[FacialFrame]> = spans
            .iter()
            .map(|&(s, e)| track.frames_within(s, e))
            .collect();
        let frames: Vec<&FacialFrame> = pieces.iter().flat_map(|p| p.iter()).collect();
        if !frames.is_empty() {
            if let Some(model) = model {
                let mut sums = [0.0; 6];
                for f in &frames {
                    let pts = reconstruct_local_shape(model, &f.q)?;
                    let g = geometric_features(&pts, &config.landmarks)?;
                    for (s, v) in sums.iter_mut().zip(g) {
                        *s += v;
                    }
                }
                for (k, s) in sums.iter().enumerate() {
                    out.values[k] = Some(s / frames.len() as f64);
                }
            }

            let poses = frames
                .iter()
                .map(|f| head_pose(&f.rotation))
                .collect::<Result<Vec<_>>>()?;
            let angle = |get: fn(&HeadPose) -> f64, stable_only: bool| -> Vec<f64> {
                poses
                    .iter()
                    .filter(|p| !stable_only || !p.gimbal_lock)
                    .map(get)
                    .collect()
            };
            let fields: [fn(&HeadPose) -> f64; 3] = [|p| p.pitch, |p| p.yaw, |p| p.roll];
            for (k, get) in fields.into_iter().enumerate() {
                out.values[6 + 2 * k] = stats::mean(&angle(get, false));
                out.values[7 + 2 * k] = stats::pop_sd(&angle(get, true));
            }

            let step_s = track.step_s().ok_or_else(|| {
                Error::Degenerate(format!("facial track of {} has a single frame", bundle.id))
            })?;
            let total_s: f64 = bundle.answers.iter().map(|a| a.duration_s()).sum();
            let (nod, shake) = nod_shake(&pieces, step_s, total_s, &config.gestures)?;
            out.values[12] = Some(nod);
            out.values[13] = Some(shake);

            let smile: Vec<f64> = frames.iter().map(|f| f.smile).collect();
            out.values[14] = stats::mean(&smile);
        }
    }

    if let Some(track) = &bundle.smile {
        let smile: Vec<f64> = spans
            .iter()
            .flat_map(|&(s, e)| track.frames_within(s, e).iter().map(|f| f.smile))
            .collect();
        if let Some(m) = stats::mean(&smile) {
            out.values[14] = Some(m);
        }
    }
    Ok(out)
}
