//! Prosodic statistics of acoustic frame tracks.
//!
//! Every statistic is computed per answer segment and then averaged across
//! answers; `duration` is summed instead. Jitter and shimmer are frame-level
//! approximations of the usual local measures, since only frame tracks (not
//! glottal periods) are available.

use serde::{Deserialize, Serialize};

use crate::corpus::{slice_track, to_ms, AcousticTrack, InterviewBundle};
use crate::error::{Error, Result};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProsodyConfig {
    /// Shortest unvoiced run counted as a pause, in seconds.
    pub pause_threshold_s: f64,
    /// Weight each answer by its duration when averaging.
    pub duration_weighted: bool,
}

impl Default for ProsodyConfig {
    fn default() -> Self {
        ProsodyConfig {
            pause_threshold_s: 0.3,
            duration_weighted: false,
        }
    }
}

impl ProsodyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.pause_threshold_s > 0.0) || !self.pause_threshold_s.is_finite() {
            return Err(Error::Config("pause threshold must be positive".into()));
        }
        Ok(())
    }
}

macro_rules! prosody_vector {
    ($($field:ident),* $(,)?) => {
        /// One value per prosodic feature; `None` marks a field that could not
        /// be computed (for example F0 statistics of an unvoiced answer).
        #[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
        pub struct ProsodyVector {
            $(pub $field: Option<f64>,)*
        }

        pub const PROSODY_FEATURES: &[&str] = &[$(stringify!($field)),*];

        impl ProsodyVector {
            pub fn values(&self) -> Vec<Option<f64>> {
                vec![$(self.$field),*]
            }

            pub fn from_values(v: &[Option<f64>]) -> Self {
                let mut it = v.iter().copied();
                ProsodyVector { $($field: it.next().flatten(),)* }
            }
        }
    };
}

prosody_vector!(
    energy_mean,
    f0_mean,
    f0_min,
    f0_max,
    f0_range,
    f0_sd,
    int_mean,
    int_min,
    int_max,
    int_range,
    int_sd,
    f1_mean,
    f1_sd,
    f1_bw,
    f2_mean,
    f2_sd,
    f2_bw,
    f3_mean,
    f3_sd,
    f3_bw,
    f2f1_mean,
    f2f1_sd,
    f3f1_mean,
    f3f1_sd,
    jitter,
    shimmer,
    duration,
    pct_unvoiced,
    pct_breaks,
    max_pause,
    avg_pause,
);

/// Distributional statistics of one slice: F0 and formants over voiced frames,
/// intensity and energy over all frames. Pause, jitter and shimmer fields are
/// left empty.
pub fn segment_stats(track: &AcousticTrack) -> ProsodyVector {
    let frames = track.frames();
    let mut v = ProsodyVector::default();

    let energy: Vec<f64> = frames.iter().map(|f| f.energy).collect();
    v.energy_mean = stats::mean(&energy);

    let intensity: Vec<f64> = frames.iter().map(|f| f.intensity_db).collect();
    if let Some((lo, hi)) = stats::min_max(&intensity) {
        v.int_mean = stats::mean(&intensity);
        v.int_min = Some(lo);
        v.int_max = Some(hi);
        v.int_range = Some(hi - lo);
        v.int_sd = stats::pop_sd(&intensity);
    }

    let f0: Vec<f64> = frames
        .iter()
        .filter(|f| f.voiced)
        .filter_map(|f| f.f0_hz)
        .collect();
    if let Some((lo, hi)) = stats::min_max(&f0) {
        v.f0_mean = stats::mean(&f0);
        v.f0_min = Some(lo);
        v.f0_max = Some(hi);
        v.f0_range = Some(hi - lo);
        v.f0_sd = stats::pop_sd(&f0);
    }

    let voiced = || frames.iter().filter(|f| f.voiced);
    let formant = |k: usize| -> Vec<f64> { voiced().filter_map(|f| f.formants_hz[k]).collect() };
    let bandwidth =
        |k: usize| -> Vec<f64> { voiced().filter_map(|f| f.bandwidths_hz[k]).collect() };
    let ratio = |k: usize| -> Vec<f64> {
        voiced()
            .filter_map(|f| match (f.formants_hz[0], f.formants_hz[k]) {
                (Some(f1), Some(fk)) if f1 > 0.0 => Some(fk / f1),
                _ => None,
            })
            .collect()
    };
    let (f1, f2, f3) = (formant(0), formant(1), formant(2));
    v.f1_mean = stats::mean(&f1);
    v.f1_sd = stats::pop_sd(&f1);
    v.f1_bw = stats::mean(&bandwidth(0));
    v.f2_mean = stats::mean(&f2);
    v.f2_sd = stats::pop_sd(&f2);
    v.f2_bw = stats::mean(&bandwidth(1));
    v.f3_mean = stats::mean(&f3);
    v.f3_sd = stats::pop_sd(&f3);
    v.f3_bw = stats::mean(&bandwidth(2));
    let (r21, r31) = (ratio(1), ratio(2));
    v.f2f1_mean = stats::mean(&r21);
    v.f2f1_sd = stats::pop_sd(&r21);
    v.f3f1_mean = stats::mean(&r31);
    v.f3f1_sd = stats::pop_sd(&r31);
    v
}

/// Maximal runs of consecutive voiced frames, as index ranges.
fn voiced_runs(track: &AcousticTrack) -> Vec<std::ops::Range<usize>> {
    let frames = track.frames();
    let mut runs = Vec::new();
    let mut start = None;
    for (i, f) in frames.iter().enumerate() {
        match (f.voiced && f.f0_hz.is_some(), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push(s..i);
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push(s..frames.len());
    }
    runs
}

/// Mean absolute consecutive difference over the mean value, with differences
/// taken only inside voiced runs and pooled across runs.
fn local_perturbation(track: &AcousticTrack, value: impl Fn(usize) -> f64) -> Option<f64> {
    let mut diffs = Vec::new();
    let mut values = Vec::new();
    for run in voiced_runs(track).into_iter().filter(|r| r.len() >= 2) {
        for i in run.clone() {
            values.push(value(i));
        }
        for i in run.start + 1..run.end {
            diffs.push((value(i) - value(i - 1)).abs());
        }
    }
    let m = stats::mean(&values)?;
    if m <= 0.0 {
        return None;
    }
    Some(stats::mean(&diffs)? / m)
}

/// Local jitter of the period sequence `1 / f0`. `None` unless some voiced run
/// has at least two frames.
pub fn jitter(track: &AcousticTrack) -> Option<f64> {
    let frames = track.frames();
    local_perturbation(track, |i| 1.0 / frames[i].f0_hz.unwrap_or(f64::NAN))
}

/// Local shimmer of the linear amplitude `10^(dB / 20)`.
pub fn shimmer(track: &AcousticTrack) -> Option<f64> {
    let frames = track.frames();
    local_perturbation(track, |i| 10f64.powf(frames[i].intensity_db / 20.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauseFeatures {
    pub pct_unvoiced: f64,
    pub pct_breaks: f64,
    pub max_pause_s: f64,
    pub avg_pause_s: f64,
    pub duration_s: f64,
}

pub fn pause_features(track: &AcousticTrack, pause_threshold_s: f64) -> PauseFeatures {
    let frames = track.frames();
    let span_ms = track.end_ms() - track.start_ms();
    let duration_s = span_ms as f64 / 1000.0;
    if frames.is_empty() {
        return PauseFeatures {
            pct_unvoiced: 0.0,
            pct_breaks: 0.0,
            max_pause_s: 0.0,
            avg_pause_s: 0.0,
            duration_s,
        };
    }
    let step_ms = match track.step_s() {
        Some(s) => to_ms(s),
        None => span_ms,
    };
    let threshold_ms = to_ms(pause_threshold_s);

    let mut unvoiced = 0usize;
    let mut in_pauses = 0usize;
    let mut pauses_ms: Vec<i64> = Vec::new();
    let mut run = 0usize;
    let mut close = |run: usize, in_pauses: &mut usize| {
        let ms = run as i64 * step_ms;
        if run > 0 && ms >= threshold_ms {
            *in_pauses += run;
            pauses_ms.push(ms);
        }
    };
    for f in frames {
        if f.voiced {
            close(run, &mut in_pauses);
            run = 0;
        } else {
            unvoiced += 1;
            run += 1;
        }
    }
    close(run, &mut in_pauses);

    let n = frames.len() as f64;
    let (max_pause_s, avg_pause_s) = if pauses_ms.is_empty() {
        (0.0, 0.0)
    } else {
        let total: i64 = pauses_ms.iter().sum();
        (
            *pauses_ms.iter().max().unwrap_or(&0) as f64 / 1000.0,
            total as f64 / 1000.0 / pauses_ms.len() as f64,
        )
    };
    PauseFeatures {
        pct_unvoiced: 100.0 * unvoiced as f64 / n,
        pct_breaks: 100.0 * in_pauses as f64 / n,
        max_pause_s,
        avg_pause_s,
        duration_s,
    }
}

/// All prosodic features of one answer slice.
pub fn answer_prosody(track: &AcousticTrack, config: &ProsodyConfig) -> ProsodyVector {
    let mut v = segment_stats(track);
    v.jitter = jitter(track);
    v.shimmer = shimmer(track);
    let p = pause_features(track, config.pause_threshold_s);
    v.duration = Some(p.duration_s);
    if !track.is_empty() {
        v.pct_unvoiced = Some(p.pct_unvoiced);
        v.pct_breaks = Some(p.pct_breaks);
        v.max_pause = Some(p.max_pause_s);
        v.avg_pause = Some(p.avg_pause_s);
    }
    v
}

/// Averages per-answer vectors field by field, skipping answers where a field
/// is missing. `duration` is summed.
pub fn combine_answers(answers: &[(ProsodyVector, f64)], duration_weighted: bool) -> ProsodyVector {
    let rows: Vec<Vec<Option<f64>>> = answers.iter().map(|(v, _)| v.values()).collect();
    let dur_idx = PROSODY_FEATURES.iter().position(|n| *n == "duration");
    let mut out = vec![None; PROSODY_FEATURES.len()];
    for (j, cell) in out.iter_mut().enumerate() {
        let present = rows
            .iter()
            .zip(answers)
            .filter_map(|(r, (_, d))| r[j].map(|x| (x, if duration_weighted { *d } else { 1.0 })));
        let (mut s, mut w) = (0.0, 0.0);
        let mut any = false;
        for (x, wt) in present {
            any = true;
            s += x * if Some(j) == dur_idx { 1.0 } else { wt };
            w += wt;
        }
        if any {
            *cell = Some(if Some(j) == dur_idx { s } else { s / w });
        }
    }
    ProsodyVector::from_values(&out)
}

/// Interview-level prosody: per-answer vectors averaged across answers. An
/// interview without an acoustic track yields an all-missing vector.
pub fn aggregate_prosody(
    bundle: &InterviewBundle,
    config: &ProsodyConfig,
) -> Result<ProsodyVector> {
    let Some(track) = &bundle.acoustic else {
        return Ok(ProsodyVector::default());
    };
    let mut per_answer = Vec::with_capacity(bundle.answers.len());
    for a in &bundle.answers {
        let slice = slice_track(track, a)?;
        per_answer.push((answer_prosody(&slice, config), a.duration_s()));
    }
    Ok(combine_answers(&per_answer, config.duration_weighted))
}
