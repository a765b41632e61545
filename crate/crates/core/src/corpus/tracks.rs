//! Frame tracks: acoustic, facial and smile streams with their CSV codecs.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::AnswerSegment;

/// Seconds to integer milliseconds, the timestamp resolution of the corpus.
pub fn to_ms(t_s: f64) -> i64 {
    (t_s * 1000.0).round() as i64
}

pub trait Frame: Clone {
    fn t_s(&self) -> f64;
}

/// A time-ordered frame sequence covering the half-open range
/// `[start_ms, end_ms)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Track<F> {
    frames: Vec<F>,
    start_ms: i64,
    end_ms: i64,
}

impl<F: Frame> Track<F> {
    /// Builds a track whose range runs from the first frame to one frame step
    /// past the last one.
    pub fn new(frames: Vec<F>) -> Result<Self> {
        for w in frames.windows(2) {
            if to_ms(w[1].t_s()) <= to_ms(w[0].t_s()) {
                return Err(Error::parse(
                    format!("t_s={}", w[1].t_s()),
                    "frame times must be strictly increasing",
                ));
            }
        }
        let (start_ms, end_ms) = match (frames.first(), frames.last()) {
            (Some(first), Some(last)) => {
                let step = if frames.len() > 1 {
                    to_ms(frames[1].t_s()) - to_ms(first.t_s())
                } else {
                    0
                };
                (to_ms(first.t_s()), to_ms(last.t_s()) + step)
            }
            _ => (0, 0),
        };
        Ok(Track {
            frames,
            start_ms,
            end_ms,
        })
    }

    pub fn frames(&self) -> &[F] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn start_ms(&self) -> i64 {
        self.start_ms
    }

    pub fn end_ms(&self) -> i64 {
        self.end_ms
    }

    /// Frame spacing in seconds, taken from the first two frames.
    pub fn step_s(&self) -> Option<f64> {
        if self.frames.len() < 2 {
            return None;
        }
        Some((to_ms(self.frames[1].t_s()) - to_ms(self.frames[0].t_s())) as f64 / 1000.0)
    }

    pub fn covers(&self, start_ms: i64, end_ms: i64) -> bool {
        start_ms >= self.start_ms && end_ms <= self.end_ms
    }

    /// Frames with `start ≤ t < end`, times preserved. The slice keeps the
    /// requested bounds as its range so that reslicing is idempotent.
    pub fn slice_ms(&self, start_ms: i64, end_ms: i64) -> Result<Track<F>> {
        if end_ms <= start_ms || !self.covers(start_ms, end_ms) {
            return Err(Error::Range(format!(
                "segment [{:.3}, {:.3}) s outside track range [{:.3}, {:.3}) s",
                start_ms as f64 / 1000.0,
                end_ms as f64 / 1000.0,
                self.start_ms as f64 / 1000.0,
                self.end_ms as f64 / 1000.0
            )));
        }
        let lo = self.frames.partition_point(|f| to_ms(f.t_s()) < start_ms);
        let hi = self.frames.partition_point(|f| to_ms(f.t_s()) < end_ms);
        Ok(Track {
            frames: self.frames[lo..hi].to_vec(),
            start_ms,
            end_ms,
        })
    }

    /// Frames inside the segment, without requiring the track to cover it.
    pub fn frames_within(&self, start_ms: i64, end_ms: i64) -> &[F] {
        let lo = self.frames.partition_point(|f| to_ms(f.t_s()) < start_ms);
        let hi = self.frames.partition_point(|f| to_ms(f.t_s()) < end_ms);
        &self.frames[lo..hi.max(lo)]
    }

    pub fn map_frames(&self, f: impl FnMut(&F) -> F) -> Track<F> {
        Track {
            frames: self.frames.iter().map(f).collect(),
            start_ms: self.start_ms,
            end_ms: self.end_ms,
        }
    }
}

/// Restricts a track to one answer segment.
pub fn slice_track<F: Frame>(track: &Track<F>, segment: &AnswerSegment) -> Result<Track<F>> {
    track.slice_ms(to_ms(segment.start_s), to_ms(segment.end_s))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcousticFrame {
    pub t_s: f64,
    pub voiced: bool,
    pub f0_hz: Option<f64>,
    pub intensity_db: f64,
    pub energy: f64,
    pub formants_hz: [Option<f64>; 3],
    pub bandwidths_hz: [Option<f64>; 3],
}

impl Frame for AcousticFrame {
    fn t_s(&self) -> f64 {
        self.t_s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FacialFrame {
    pub t_s: f64,
    pub scale: f64,
    /// Row-major 3×3 rotation; a 2-D rotation is embedded in the upper-left block.
    pub rotation: [f64; 9],
    pub translation: [f64; 2],
    pub q: Vec<f64>,
    pub smile: f64,
    pub nod_count: Option<u32>,
    pub shake_count: Option<u32>,
}

impl Frame for FacialFrame {
    fn t_s(&self) -> f64 {
        self.t_s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmileFrame {
    pub t_s: f64,
    pub smile: f64,
}

impl Frame for SmileFrame {
    fn t_s(&self) -> f64 {
        self.t_s
    }
}

pub type AcousticTrack = Track<AcousticFrame>;
pub type FacialTrack = Track<FacialFrame>;
pub type SmileTrack = Track<SmileFrame>;

pub const ACOUSTIC_HEADER: [&str; 11] = [
    "t_s",
    "voiced",
    "f0_hz",
    "intensity_db",
    "energy",
    "f1_hz",
    "f2_hz",
    "f3_hz",
    "b1_hz",
    "b2_hz",
    "b3_hz",
];

struct CsvRows {
    path: String,
    header: Vec<String>,
    rows: Vec<(u64, Vec<String>)>,
}

fn read_csv(path: &Path) -> Result<CsvRows> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let name = path.display().to_string();
    let header = rdr
        .headers()
        .map_err(|e| Error::parse(format!("{name}:1"), e))?
        .iter()
        .map(str::to_owned)
        .collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::parse(format!("{name}:{line}"), e)
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        rows.push((line, rec.iter().map(str::to_owned).collect()));
    }
    Ok(CsvRows {
        path: name,
        header,
        rows,
    })
}

fn col(header: &[String], name: &str, path: &str) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::parse(format!("{path}:1"), format!("missing column '{name}'")))
}

fn field<'a>(row: &'a [String], idx: usize, loc: &str) -> Result<&'a str> {
    row.get(idx)
        .map(String::as_str)
        .ok_or_else(|| Error::parse(loc, "short record"))
}

fn num(row: &[String], idx: usize, loc: &str, name: &str) -> Result<f64> {
    let s = field(row, idx, loc)?;
    let v: f64 = s
        .parse()
        .map_err(|_| Error::parse(loc, format!("{name}: not a number: '{s}'")))?;
    if !v.is_finite() {
        return Err(Error::parse(loc, format!("{name}: non-finite value")));
    }
    Ok(v)
}

fn opt_num(row: &[String], idx: usize, loc: &str, name: &str) -> Result<Option<f64>> {
    if field(row, idx, loc)?.is_empty() {
        Ok(None)
    } else {
        num(row, idx, loc, name).map(Some)
    }
}

fn parse_bool(s: &str, loc: &str) -> Result<bool> {
    match s {
        "1" | "true" | "TRUE" | "True" => Ok(true),
        "0" | "false" | "FALSE" | "False" => Ok(false),
        _ => Err(Error::parse(
            loc,
            format!("voiced: expected 0/1, got '{s}'"),
        )),
    }
}

pub fn read_acoustic_csv(path: &Path) -> Result<AcousticTrack> {
    let csv = read_csv(path)?;
    let idx: Vec<usize> = ACOUSTIC_HEADER
        .iter()
        .map(|h| col(&csv.header, h, &csv.path))
        .collect::<Result<_>>()?;
    let mut frames = Vec::with_capacity(csv.rows.len());
    for (line, row) in &csv.rows {
        let loc = format!("{}:{line}", csv.path);
        let voiced = parse_bool(field(row, idx[1], &loc)?, &loc)?;
        let f0 = opt_num(row, idx[2], &loc, "f0_hz")?;
        if voiced != f0.is_some() {
            return Err(Error::parse(
                &loc,
                "f0_hz must be present iff the frame is voiced",
            ));
        }
        let mut formants = [None; 3];
        let mut bws = [None; 3];
        for k in 0..3 {
            formants[k] = opt_num(row, idx[5 + k], &loc, ACOUSTIC_HEADER[5 + k])?;
            bws[k] = opt_num(row, idx[8 + k], &loc, ACOUSTIC_HEADER[8 + k])?;
            if !voiced && (formants[k].is_some() || bws[k].is_some()) {
                return Err(Error::parse(
                    &loc,
                    "formant values present on an unvoiced frame",
                ));
            }
        }
        frames.push(AcousticFrame {
            t_s: num(row, idx[0], &loc, "t_s")?,
            voiced,
            f0_hz: f0,
            intensity_db: num(row, idx[3], &loc, "intensity_db")?,
            energy: num(row, idx[4], &loc, "energy")?,
            formants_hz: formants,
            bandwidths_hz: bws,
        });
    }
    Track::new(frames).map_err(|e| relocate(e, &csv.path))
}

fn relocate(e: Error, path: &str) -> Error {
    match e {
        Error::Parse { locator, message } => Error::parse(format!("{path} ({locator})"), message),
        other => other,
    }
}

/// Parses a facial track; `m` is the shape model's basis dimension when known,
/// otherwise the number of `q` columns is taken from the header.
pub fn read_facial_csv(path: &Path) -> Result<FacialTrack> {
    let csv = read_csv(path)?;
    let h = &csv.header;
    let t = col(h, "t_s", &csv.path)?;
    let s = col(h, "s", &csv.path)?;
    let r: Vec<usize> = [
        "r11", "r12", "r13", "r21", "r22", "r23", "r31", "r32", "r33",
    ]
    .iter()
    .map(|n| col(h, n, &csv.path))
    .collect::<Result<_>>()?;
    let tx = col(h, "tx", &csv.path)?;
    let ty = col(h, "ty", &csv.path)?;
    let mut q_cols = Vec::new();
    for k in 1.. {
        match h.iter().position(|c| *c == format!("q{k}")) {
            Some(i) => q_cols.push(i),
            None => break,
        }
    }
    let smile = col(h, "smile", &csv.path)?;
    let nod = h.iter().position(|c| c == "nod_count");
    let shake = h.iter().position(|c| c == "shake_count");

    let count = |row: &[String], i: Option<usize>, loc: &str, name: &str| -> Result<Option<u32>> {
        match i {
            None => Ok(None),
            Some(i) => {
                let s = field(row, i, loc)?;
                if s.is_empty() {
                    return Ok(None);
                }
                s.parse()
                    .map(Some)
                    .map_err(|_| Error::parse(loc, format!("{name}: not a count: '{s}'")))
            }
        }
    };

    let mut frames = Vec::with_capacity(csv.rows.len());
    for (line, row) in &csv.rows {
        let loc = format!("{}:{line}", csv.path);
        let mut rotation = [0.0; 9];
        for (k, &i) in r.iter().enumerate() {
            rotation[k] = num(row, i, &loc, "rotation")?;
        }
        let q = q_cols
            .iter()
            .map(|&i| num(row, i, &loc, "q"))
            .collect::<Result<Vec<_>>>()?;
        frames.push(FacialFrame {
            t_s: num(row, t, &loc, "t_s")?,
            scale: num(row, s, &loc, "s")?,
            rotation,
            translation: [num(row, tx, &loc, "tx")?, num(row, ty, &loc, "ty")?],
            q,
            smile: num(row, smile, &loc, "smile")?,
            nod_count: count(row, nod, &loc, "nod_count")?,
            shake_count: count(row, shake, &loc, "shake_count")?,
        });
    }
    Track::new(frames).map_err(|e| relocate(e, &csv.path))
}

pub fn read_smile_csv(path: &Path) -> Result<SmileTrack> {
    let csv = read_csv(path)?;
    let t = col(&csv.header, "t_s", &csv.path)?;
    let s = col(&csv.header, "smile", &csv.path)?;
    let mut frames = Vec::with_capacity(csv.rows.len());
    for (line, row) in &csv.rows {
        let loc = format!("{}:{line}", csv.path);
        frames.push(SmileFrame {
            t_s: num(row, t, &loc, "t_s")?,
            smile: num(row, s, &loc, "smile")?,
        });
    }
    Track::new(frames).map_err(|e| relocate(e, &csv.path))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_acoustic_csv(path: &Path, track: &AcousticTrack) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "{}", ACOUSTIC_HEADER.join(",")).map_err(io)?;
    for f in track.frames() {
        writeln!(
            w,
            "{:.3},{},{},{},{},{},{},{},{},{},{}",
            f.t_s,
            u8::from(f.voiced),
            opt(f.f0_hz),
            f.intensity_db,
            f.energy,
            opt(f.formants_hz[0]),
            opt(f.formants_hz[1]),
            opt(f.formants_hz[2]),
            opt(f.bandwidths_hz[0]),
            opt(f.bandwidths_hz[1]),
            opt(f.bandwidths_hz[2]),
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_facial_csv(path: &Path, track: &FacialTrack) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    let m = track.frames().first().map_or(0, |f| f.q.len());
    let with_counts = track
        .frames()
        .iter()
        .any(|f| f.nod_count.is_some() || f.shake_count.is_some());
    let mut header = String::from("t_s,s,r11,r12,r13,r21,r22,r23,r31,r32,r33,tx,ty");
    for k in 1..=m {
        header.push_str(&format!(",q{k}"));
    }
    header.push_str(",smile");
    if with_counts {
        header.push_str(",nod_count,shake_count");
    }
    writeln!(w, "{header}").map_err(io)?;
    for f in track.frames() {
        let mut line = format!("{:.3},{}", f.t_s, f.scale);
        for r in f.rotation {
            line.push_str(&format!(",{r}"));
        }
        line.push_str(&format!(",{},{}", f.translation[0], f.translation[1]));
        for q in &f.q {
            line.push_str(&format!(",{q}"));
        }
        line.push_str(&format!(",{}", f.smile));
        if with_counts {
            let c = |v: Option<u32>| v.map(|x| x.to_string()).unwrap_or_default();
            line.push_str(&format!(",{},{}", c(f.nod_count), c(f.shake_count)));
        }
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_smile_csv(path: &Path, track: &SmileTrack) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "t_s,smile").map_err(io)?;
    for f in track.frames() {
        writeln!(w, "{:.3},{}", f.t_s, f.smile).map_err(io)?;
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn smile_track(n: usize, step: f64) -> SmileTrack {
        Track::new(
            (0..n)
                .map(|k| SmileFrame {
                    t_s: k as f64 * step,
                    smile: k as f64,
                })
                .collect(),
        )
        .unwrap()
    }

    fn seg(start_s: f64, end_s: f64) -> AnswerSegment {
        AnswerSegment {
            question: 1,
            start_s,
            end_s,
            tokens: vec![],
        }
    }

    #[test]
    fn slice_keeps_half_open_range() {
        let track = smile_track(3000, 0.1); // [0, 300) s
        let s = slice_track(&track, &seg(10.0, 70.0)).unwrap();
        assert_eq!(s.len(), 600);
        assert_eq!(to_ms(s.frames()[0].t_s), 10_000);
        assert_eq!(to_ms(s.frames().last().unwrap().t_s), 69_900);
    }

    #[test]
    fn full_range_slice_is_identity() {
        let track = smile_track(3000, 0.1);
        let s = slice_track(&track, &seg(0.0, 300.0)).unwrap();
        assert_eq!(s, track);
    }

    #[test]
    fn out_of_range_segment_is_rejected() {
        let track = smile_track(3000, 0.1);
        let err = slice_track(&track, &seg(290.0, 310.0)).unwrap_err();
        assert!(matches!(err, Error::Range(_)));
    }

    #[test]
    fn reslicing_is_idempotent() {
        let track = smile_track(1000, 0.01);
        let a = track.slice_ms(1_005, 5_555).unwrap();
        let b = a.slice_ms(1_005, 5_555).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn non_increasing_times_rejected() {
        let frames = vec![
            SmileFrame {
                t_s: 1.0,
                smile: 0.0,
            },
            SmileFrame {
                t_s: 1.0,
                smile: 0.0,
            },
        ];
        assert!(Track::new(frames).is_err());
    }
}
