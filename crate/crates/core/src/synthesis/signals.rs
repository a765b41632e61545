//! Piecewise-stationary acoustic tracks and sinusoidal facial tracks whose
//! feature values follow in closed form from the generating parameters.

use std::f64::consts::{PI, SQRT_2};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{AcousticFrame, FacialFrame, SmileFrame};
use crate::facial::compose;
use crate::prosody::PROSODY_FEATURES;

pub(super) const ACOUSTIC_HZ: usize = 100;
pub(super) const FACIAL_HZ: usize = 20;
pub(super) const SMILE_HZ: usize = 10;
const SHORT_GAP: usize = 10;

/// One answer window in whole seconds: `[start, start + duration)`.
#[derive(Debug, Clone, Copy)]
pub(super) struct Window {
    pub start: usize,
    pub duration: usize,
}

impl Window {
    fn contains(&self, t: f64) -> Option<f64> {
        let u = t - self.start as f64;
        (u >= 0.0 && u < self.duration as f64).then_some(u)
    }
}

fn phase(windows: &[Window], t: f64) -> Option<f64> {
    windows.iter().find_map(|w| w.contains(t))
}

fn u(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

#[derive(Debug, Clone)]
pub(super) struct Voice {
    f0: [f64; 2],
    int_voiced: [f64; 2],
    int_unvoiced: f64,
    energy: [f64; 2],
    formants: [[f64; 2]; 3],
    bandwidths: [f64; 3],
    /// Pause lengths in frames, used in every answer.
    pauses: Vec<usize>,
    short_gaps: usize,
}

impl Voice {
    pub fn draw(rng: &mut ChaCha8Rng) -> Self {
        let b = u(rng, 110.0, 250.0);
        let d = u(rng, 2.0, 25.0);
        let iv = u(rng, 55.0, 75.0);
        let e = u(rng, 0.5, 4.0);
        let int_unvoiced = u(rng, 30.0, 45.0);
        let energy = [u(rng, 0.5, 2.0), u(rng, 0.01, 0.2)];
        let centers = [
            u(rng, 400.0, 800.0),
            u(rng, 1100.0, 1900.0),
            u(rng, 2300.0, 3100.0),
        ];
        let spreads = [u(rng, 5.0, 60.0), u(rng, 10.0, 100.0), u(rng, 10.0, 120.0)];
        let formants = [0, 1, 2].map(|k| [centers[k] + spreads[k], centers[k] - spreads[k]]);
        let bandwidths = [
            u(rng, 40.0, 120.0),
            u(rng, 60.0, 160.0),
            u(rng, 80.0, 220.0),
        ];
        let n_pauses = rng.random_range(1..=3);
        let pauses = (0..n_pauses)
            .map(|_| 2 * rng.random_range(15..=60))
            .collect();
        let short_gaps = rng.random_range(0..=4);
        Voice {
            f0: [b + d, b - d],
            int_voiced: [iv + e, iv - e],
            int_unvoiced,
            energy,
            formants,
            bandwidths,
            pauses,
            short_gaps,
        }
    }

    fn unvoiced_frames(&self) -> usize {
        self.pauses.iter().sum::<usize>() + SHORT_GAP * self.short_gaps
    }

    /// Voicing pattern of one answer: even-length voiced runs (so high and
    /// low frames pair up) separated by the pauses and short gaps in random
    /// order, voiced at both ends.
    fn layout(&self, rng: &mut ChaCha8Rng, n: usize) -> Vec<bool> {
        let mut gaps: Vec<usize> = self.pauses.clone();
        gaps.extend(std::iter::repeat_n(SHORT_GAP, self.short_gaps));
        gaps.shuffle(rng);
        let runs = gaps.len() + 1;
        let pairs = (n - self.unvoiced_frames()) / 2;
        let mut run_pairs = vec![1usize; runs];
        for _ in runs..pairs {
            run_pairs[rng.random_range(0..runs)] += 1;
        }
        let mut out = Vec::with_capacity(n);
        for (r, p) in run_pairs.iter().enumerate() {
            out.extend(std::iter::repeat_n(true, 2 * p));
            if let Some(&g) = gaps.get(r) {
                out.extend(std::iter::repeat_n(false, g));
            }
        }
        debug_assert_eq!(out.len(), n);
        out
    }

    fn frame(&self, i: usize, voiced: Option<usize>) -> AcousticFrame {
        let t_s = i as f64 / ACOUSTIC_HZ as f64;
        match voiced {
            Some(k) => {
                let h = k % 2;
                AcousticFrame {
                    t_s,
                    voiced: true,
                    f0_hz: Some(self.f0[h]),
                    intensity_db: self.int_voiced[h],
                    energy: self.energy[0],
                    formants_hz: [0, 1, 2].map(|f| Some(self.formants[f][h])),
                    bandwidths_hz: self.bandwidths.map(Some),
                }
            }
            None => AcousticFrame {
                t_s,
                voiced: false,
                f0_hz: None,
                intensity_db: self.int_unvoiced,
                energy: self.energy[1],
                formants_hz: [None; 3],
                bandwidths_hz: [None; 3],
            },
        }
    }

    /// The whole track, from time zero to one second past the last answer.
    pub fn track(
        &self,
        rng: &mut ChaCha8Rng,
        windows: &[Window],
        end_s: usize,
    ) -> Vec<AcousticFrame> {
        let mut frames: Vec<AcousticFrame> = (0..end_s * ACOUSTIC_HZ)
            .map(|i| self.frame(i, None))
            .collect();
        for w in windows {
            let first = w.start * ACOUSTIC_HZ;
            let mut run_pos = 0;
            for (k, v) in self
                .layout(rng, w.duration * ACOUSTIC_HZ)
                .into_iter()
                .enumerate()
            {
                if v {
                    frames[first + k] = self.frame(first + k, Some(run_pos));
                    run_pos += 1;
                } else {
                    run_pos = 0;
                }
            }
        }
        frames
    }

    /// Prosodic features of one answer of `duration` seconds, in census order.
    fn answer_features(&self, duration: usize) -> Vec<f64> {
        let n = (duration * ACOUSTIC_HZ) as f64;
        let nu = self.unvoiced_frames() as f64;
        let nv = n - nu;
        let half = nv / 2.0;
        let pair_mean = |p: [f64; 2]| (p[0] + p[1]) / 2.0;
        let pair_sd = |p: [f64; 2]| (p[0] - p[1]).abs() / 2.0;
        let perturbation = |p: [f64; 2]| (p[0] - p[1]).abs() / pair_mean(p);

        let [ih, il] = self.int_voiced;
        let iu = self.int_unvoiced;
        let im = (half * ih + half * il + nu * iu) / n;
        let ivar =
            (half * (ih - im).powi(2) + half * (il - im).powi(2) + nu * (iu - im).powi(2)) / n;
        let ratio = |k: usize| {
            [
                self.formants[k][0] / self.formants[0][0],
                self.formants[k][1] / self.formants[0][1],
            ]
        };
        let paused: usize = self.pauses.iter().sum();
        let longest = self.pauses.iter().copied().max().unwrap_or(0);

        let mut v = vec![
            (nv * self.energy[0] + nu * self.energy[1]) / n,
            pair_mean(self.f0),
            self.f0[1],
            self.f0[0],
            self.f0[0] - self.f0[1],
            pair_sd(self.f0),
            im,
            iu,
            ih,
            ih - iu,
            ivar.sqrt(),
        ];
        for k in 0..3 {
            v.extend([
                pair_mean(self.formants[k]),
                pair_sd(self.formants[k]),
                self.bandwidths[k],
            ]);
        }
        for k in [1, 2] {
            v.extend([pair_mean(ratio(k)), pair_sd(ratio(k))]);
        }
        v.extend([
            perturbation(self.f0.map(|f| 1.0 / f)),
            perturbation(self.int_voiced.map(|db| 10f64.powf(db / 20.0))),
            duration as f64,
            100.0 * nu / n,
            100.0 * paused as f64 / n,
            longest as f64 / ACOUSTIC_HZ as f64,
            paused as f64 / self.pauses.len() as f64 / ACOUSTIC_HZ as f64,
        ]);
        debug_assert_eq!(v.len(), PROSODY_FEATURES.len());
        v
    }

    /// Interview-level prosody: answers averaged, durations summed.
    pub fn features(&self, windows: &[Window]) -> Vec<f64> {
        let per: Vec<Vec<f64>> = windows
            .iter()
            .map(|w| self.answer_features(w.duration))
            .collect();
        let dur = PROSODY_FEATURES
            .iter()
            .position(|n| *n == "duration")
            .unwrap_or(usize::MAX);
        (0..PROSODY_FEATURES.len())
            .map(|j| {
                let s: f64 = per.iter().map(|r| r[j]).sum();
                if j == dur {
                    s
                } else {
                    s / per.len() as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub(super) struct Face {
    levels: [f64; 6],
    amplitudes: [f64; 6],
    pose_levels: [f64; 3],
    pose_amplitudes: [f64; 3],
    smile: [f64; 2],
    scale: f64,
    translation: [f64; 2],
}

impl Face {
    pub fn draw(rng: &mut ChaCha8Rng) -> Self {
        let levels = [(); 6].map(|_| u(rng, -0.03, 0.03));
        let amplitudes = [(); 6].map(|_| u(rng, 0.0, 0.02));
        let pose_levels = [u(rng, -0.2, 0.2), u(rng, -0.3, 0.3), u(rng, -0.15, 0.15)];
        let pose_amplitudes = [u(rng, 0.01, 0.1), u(rng, 0.01, 0.1), u(rng, 0.005, 0.05)];
        let level = u(rng, 0.1, 0.9);
        let smile = [level, u(rng, 0.0, 0.1)];
        Face {
            levels,
            amplitudes,
            pose_levels,
            pose_amplitudes,
            smile,
            scale: u(rng, 0.8, 1.2),
            translation: [u(rng, 200.0, 400.0), u(rng, 150.0, 300.0)],
        }
    }

    fn smile_at(&self, p: f64) -> f64 {
        self.smile[0] + self.smile[1] * (2.0 * PI * p).sin()
    }

    /// Facial frames over `[0, end_s)`. Inside an answer every signal is a
    /// whole number of 1 Hz or 2 Hz periods; outside, signals hold their level.
    pub fn track(&self, windows: &[Window], end_s: usize) -> Vec<FacialFrame> {
        (0..end_s * FACIAL_HZ)
            .map(|i| {
                let t_s = i as f64 / FACIAL_HZ as f64;
                let p = phase(windows, t_s).unwrap_or(0.0);
                let (s1, c1, s2) = (
                    (2.0 * PI * p).sin(),
                    (2.0 * PI * p).cos(),
                    (4.0 * PI * p).sin(),
                );
                let q = (0..6)
                    .map(|k| self.levels[k] + self.amplitudes[k] * s1)
                    .collect();
                let [lp, ly, lr] = self.pose_levels;
                let [ap, ay, ar] = self.pose_amplitudes;
                FacialFrame {
                    t_s,
                    scale: self.scale,
                    rotation: compose(lp + ap * s1, ly + ay * c1, lr + ar * s2),
                    translation: self.translation,
                    q,
                    smile: self.smile_at(p),
                    nod_count: None,
                    shake_count: None,
                }
            })
            .collect()
    }

    pub fn smile_track(&self, windows: &[Window], end_s: usize) -> Vec<SmileFrame> {
        (0..end_s * SMILE_HZ)
            .map(|i| {
                let t_s = i as f64 / SMILE_HZ as f64;
                SmileFrame {
                    t_s,
                    smile: self.smile_at(phase(windows, t_s).unwrap_or(0.0)),
                }
            })
            .collect()
    }

    /// Facial features in census order, with gesture rates left out. `base`
    /// holds the six landmark distances of the mean shape.
    pub fn features(&self, base: &[f64; 6]) -> [Option<f64>; 15] {
        let mut v = [None; 15];
        for k in 0..6 {
            v[k] = Some(base[k] + self.levels[k]);
        }
        for k in 0..3 {
            v[6 + 2 * k] = Some(self.pose_levels[k]);
            v[7 + 2 * k] = Some(self.pose_amplitudes[k] / SQRT_2);
        }
        v[14] = Some(self.smile[0]);
        v
    }
}
