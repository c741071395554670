//! Word-level alignment tracks from HTK-style label files and long-format TextGrids.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Utterance;

/// Labels treated as silence unless the caller configures otherwise.
pub const DEFAULT_PAUSE_LABELS: [&str; 4] = ["sp", "sil", "pau", ""];

/// 100 ns ticks per second.
const HTK_TICKS_PER_SECOND: f64 = 1e7;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AlignError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: negative time")]
    NegativeTime { line: usize },
    #[error("line {line}: segment ends before it starts")]
    Reversed { line: usize },
    #[error("line {line}: segment overlaps the previous one")]
    Overlap { line: usize },
    #[error("tier not found: {0:?}")]
    TierNotFound(String),
    #[error("tier {0:?} is a point tier, not an interval tier")]
    PointTier(String),
    #[error("token mismatch at index {index}: expected {expected:?}, found {found:?}")]
    TokenMismatch {
        index: usize,
        expected: Option<String>,
        found: Option<String>,
    },
    #[error("alignment ends at {track_end:.3}s but utterance lasts {duration:.3}s")]
    DurationMismatch { track_end: f64, duration: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnit {
    Seconds,
    /// HTK label times: integer multiples of 100 ns.
    Htk100ns,
}

impl FromStr for TimeUnit {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "seconds" | "s" => Ok(TimeUnit::Seconds),
            "htk" | "htk_100ns" | "100ns" => Ok(TimeUnit::Htk100ns),
            other => Err(format!("unknown time unit {other:?} (expected seconds or htk)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub label: String,
    pub t_start: f64,
    pub t_end: f64,
}

impl Segment {
    pub fn new(label: impl Into<String>, t_start: f64, t_end: f64) -> Self {
        Segment {
            label: label.into(),
            t_start,
            t_end,
        }
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }
}

/// Time-ordered, non-overlapping labelled segments covering one utterance. Gaps between
/// segments are allowed and count as pauses downstream.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentTrack {
    pub segments: Vec<Segment>,
    pub pause_labels: BTreeSet<String>,
}

impl AlignmentTrack {
    /// Builds a track with the default pause labels, checking ordering invariants.
    /// Errors carry 1-based segment numbers in the `line` field.
    pub fn new(segments: Vec<Segment>) -> Result<Self, AlignError> {
        check_order(segments.iter().enumerate().map(|(i, s)| (i + 1, s)))?;
        Ok(AlignmentTrack {
            segments,
            pause_labels: default_pause_labels(),
        })
    }

    pub fn with_pause_labels<I, S>(mut self, labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.pause_labels = labels.into_iter().map(Into::into).collect();
        self
    }

    pub fn is_pause(&self, seg: &Segment) -> bool {
        self.pause_labels.contains(seg.label.trim())
    }

    /// Non-pause segments in order.
    pub fn words(&self) -> impl Iterator<Item = &Segment> {
        self.segments.iter().filter(|s| !self.is_pause(s))
    }

    pub fn end_time(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.t_end)
    }

    /// Canonical `.lab` rendering in seconds; [`parse_lab`] reads it back exactly.
    pub fn to_lab(&self) -> String {
        let mut out = String::new();
        for s in &self.segments {
            let label = if s.label.is_empty() { "sil" } else { &s.label };
            let _ = writeln!(out, "{} {} {}", s.t_start, s.t_end, label);
        }
        out
    }
}

pub fn default_pause_labels() -> BTreeSet<String> {
    DEFAULT_PAUSE_LABELS.iter().map(|s| s.to_string()).collect()
}

fn check_order<'a>(segs: impl Iterator<Item = (usize, &'a Segment)>) -> Result<(), AlignError> {
    let mut prev_end: Option<f64> = None;
    for (line, s) in segs {
        if !(s.t_start.is_finite() && s.t_end.is_finite()) {
            return Err(AlignError::Malformed {
                line,
                message: "non-finite time".into(),
            });
        }
        if s.t_start < 0.0 || s.t_end < 0.0 {
            return Err(AlignError::NegativeTime { line });
        }
        if s.t_end < s.t_start {
            return Err(AlignError::Reversed { line });
        }
        if prev_end.is_some_and(|p| s.t_start < p) {
            return Err(AlignError::Overlap { line });
        }
        prev_end = Some(s.t_end);
    }
    Ok(())
}

/// Parses `start end label` lines. Columns past the third (HTK scores) are ignored.
pub fn parse_lab(source: &[u8], unit: TimeUnit) -> Result<AlignmentTrack, AlignError> {
    let text = decode_utf8(source)?;
    let scale = match unit {
        TimeUnit::Seconds => 1.0,
        TimeUnit::Htk100ns => HTK_TICKS_PER_SECOND,
    };
    let mut segments = Vec::new();
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let mut cols = raw.split_whitespace();
        let (Some(a), Some(b), Some(label)) = (cols.next(), cols.next(), cols.next()) else {
            if raw.trim().is_empty() {
                continue;
            }
            return Err(AlignError::Malformed {
                line,
                message: format!("expected `start end label`, got {raw:?}"),
            });
        };
        let time = |s: &str| {
            s.parse::<f64>().map_err(|_| AlignError::Malformed {
                line,
                message: format!("bad time {s:?}"),
            })
        };
        segments.push(Segment::new(label, time(a)? / scale, time(b)? / scale));
        lines.push(line);
    }
    check_order(lines.iter().copied().zip(segments.iter()))?;
    Ok(AlignmentTrack {
        segments,
        pause_labels: default_pause_labels(),
    })
}

fn decode_utf8(source: &[u8]) -> Result<&str, AlignError> {
    let source = source.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(source);
    std::str::from_utf8(source).map_err(|e| AlignError::Malformed {
        line: 1 + source[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count(),
        message: "invalid UTF-8 (transcode UTF-16 TextGrids first)".into(),
    })
}

#[derive(Debug, PartialEq)]
enum Token {
    Num(f64),
    Str(String),
    Exists,
}

/// Splits a TextGrid into its value tokens: numbers, quoted strings and `<exists>` flags.
/// Keys, `=`, and `item [n]:` style labels carry no information and are skipped.
fn textgrid_tokens(text: &str) -> Result<Vec<(usize, Token)>, AlignError> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c == '\n' {
            line += 1;
            chars.next();
        } else if c.is_whitespace() {
            chars.next();
        } else if c == '"' {
            chars.next();
            let start_line = line;
            let mut s = String::new();
            loop {
                match chars.next() {
                    Some('"') if chars.peek() == Some(&'"') => {
                        chars.next();
                        s.push('"');
                    }
                    Some('"') => break,
                    Some(ch) => {
                        if ch == '\n' {
                            line += 1;
                        }
                        s.push(ch);
                    }
                    None => {
                        return Err(AlignError::Malformed {
                            line: start_line,
                            message: "unterminated string".into(),
                        })
                    }
                }
            }
            out.push((start_line, Token::Str(s)));
        } else if c == '!' {
            while chars.peek().is_some_and(|&ch| ch != '\n') {
                chars.next();
            }
        } else {
            let mut word = String::new();
            while let Some(&ch) = chars.peek() {
                if ch.is_whitespace() || ch == '"' {
                    break;
                }
                word.push(ch);
                chars.next();
            }
            if word == "<exists>" {
                out.push((line, Token::Exists));
            } else if let Ok(v) = word.parse::<f64>() {
                out.push((line, Token::Num(v)));
            }
        }
    }
    Ok(out)
}

struct TokenStream {
    tokens: std::vec::IntoIter<(usize, Token)>,
    line: usize,
}

impl TokenStream {
    fn next(&mut self, what: &str) -> Result<Token, AlignError> {
        match self.tokens.next() {
            Some((line, t)) => {
                self.line = line;
                Ok(t)
            }
            None => Err(AlignError::Malformed {
                line: self.line,
                message: format!("unexpected end of file, expected {what}"),
            }),
        }
    }

    fn num(&mut self, what: &str) -> Result<f64, AlignError> {
        match self.next(what)? {
            Token::Num(v) => Ok(v),
            other => Err(self.unexpected(what, other)),
        }
    }

    fn count(&mut self, what: &str) -> Result<usize, AlignError> {
        let v = self.num(what)?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(AlignError::Malformed {
                line: self.line,
                message: format!("{what} must be a non-negative integer, got {v}"),
            });
        }
        Ok(v as usize)
    }

    fn string(&mut self, what: &str) -> Result<String, AlignError> {
        match self.next(what)? {
            Token::Str(s) => Ok(s),
            other => Err(self.unexpected(what, other)),
        }
    }

    fn unexpected(&self, what: &str, found: Token) -> AlignError {
        AlignError::Malformed {
            line: self.line,
            message: format!("expected {what}, found {found:?}"),
        }
    }
}

/// Reads interval tier `tier_name` from a long-format TextGrid. Empty interval texts become
/// the empty pause label.
pub fn parse_textgrid(source: &[u8], tier_name: &str) -> Result<AlignmentTrack, AlignError> {
    let text = decode_utf8(source)?;
    let mut ts = TokenStream {
        tokens: textgrid_tokens(text)?.into_iter(),
        line: 1,
    };
    let file_type = ts.string("file type")?;
    if file_type != "ooTextFile" {
        return Err(AlignError::Malformed {
            line: ts.line,
            message: format!("not a Praat text file (file type {file_type:?})"),
        });
    }
    let class = ts.string("object class")?;
    if class != "TextGrid" {
        return Err(AlignError::Malformed {
            line: ts.line,
            message: format!("object class {class:?} is not TextGrid"),
        });
    }
    ts.num("xmin")?;
    ts.num("xmax")?;
    match ts.next("tiers flag")? {
        Token::Exists => {}
        other => return Err(ts.unexpected("<exists>", other)),
    }
    let n_tiers = ts.count("tier count")?;
    let mut found = None;
    for _ in 0..n_tiers {
        let class = ts.string("tier class")?;
        let name = ts.string("tier name")?;
        ts.num("tier xmin")?;
        ts.num("tier xmax")?;
        let n = ts.count("item count")?;
        match class.as_str() {
            "IntervalTier" => {
                let mut segments = Vec::with_capacity(n);
                let mut lines = Vec::with_capacity(n);
                for _ in 0..n {
                    let xmin = ts.num("interval xmin")?;
                    let line = ts.line;
                    let xmax = ts.num("interval xmax")?;
                    let label = ts.string("interval text")?;
                    segments.push(Segment::new(label.trim(), xmin, xmax));
                    lines.push(line);
                }
                if name == tier_name && found.is_none() {
                    check_order(lines.iter().copied().zip(segments.iter()))?;
                    found = Some(segments);
                }
            }
            "TextTier" => {
                for _ in 0..n {
                    ts.num("point time")?;
                    ts.string("point mark")?;
                }
                if name == tier_name && found.is_none() {
                    return Err(AlignError::PointTier(name));
                }
            }
            other => {
                return Err(AlignError::Malformed {
                    line: ts.line,
                    message: format!("unknown tier class {other:?}"),
                })
            }
        }
    }
    if let Some((line, t)) = ts.tokens.next() {
        return Err(AlignError::Malformed {
            line,
            message: format!("trailing content {t:?} after the declared tiers"),
        });
    }
    let segments = found.ok_or_else(|| AlignError::TierNotFound(tier_name.to_owned()))?;
    Ok(AlignmentTrack {
        segments,
        pause_labels: default_pause_labels(),
    })
}

/// Checks that the track's words spell out `utt.tokens` and that it ends within
/// `tolerance` seconds of the utterance duration.
pub fn validate_alignment<'a>(
    track: &'a AlignmentTrack,
    utt: &Utterance,
    tolerance: f64,
) -> Result<&'a AlignmentTrack, AlignError> {
    let mut words = track.words();
    for index in 0.. {
        let expected = utt.tokens.get(index);
        let found = words.next();
        match (expected, found) {
            (None, None) => break,
            (Some(e), Some(f)) if *e == f.label => {}
            (e, f) => {
                return Err(AlignError::TokenMismatch {
                    index,
                    expected: e.cloned(),
                    found: f.map(|s| s.label.clone()),
                })
            }
        }
    }
    let track_end = track.end_time();
    if (track_end - utt.duration).abs() > tolerance {
        return Err(AlignError::DurationMismatch {
            track_end,
            duration: utt.duration,
        });
    }
    Ok(track)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"File type = "ooTextFile"
Object class = "TextGrid"

xmin = 0
xmax = 1.0
tiers? <exists>
size = 1
item []:
    item [1]:
        class = "IntervalTier"
        name = "words"
        xmin = 0
        xmax = 1.0
        intervals: size = 3
        intervals [1]:
            xmin = 0
            xmax = 0.5
            text = "w1"
        intervals [2]:
            xmin = 0.5
            xmax = 0.62
            text = ""
        intervals [3]:
            xmin = 0.62
            xmax = 1.0
            text = "w2"
"#;

    fn utt(tokens: &[&str], duration: f64) -> Utterance {
        Utterance {
            id: "u".into(),
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
            audio_path: "u.wav".into(),
            sample_rate: 22050,
            duration,
        }
    }

    #[test]
    fn lab_units() {
        let t = parse_lab(b"0 1000000 sp\n", TimeUnit::Htk100ns).unwrap();
        assert_eq!(t.segments, vec![Segment::new("sp", 0.0, 0.1)]);
        let t = parse_lab(b"0.0 0.5 w1\n", TimeUnit::Seconds).unwrap();
        assert_eq!(t.segments, vec![Segment::new("w1", 0.0, 0.5)]);
    }

    #[test]
    fn lab_overlap_reports_line() {
        let err = parse_lab(b"0 0.5 a\n0.4 0.9 b\n", TimeUnit::Seconds).unwrap_err();
        assert_eq!(err, AlignError::Overlap { line: 2 });
    }

    #[test]
    fn lab_errors() {
        assert!(matches!(
            parse_lab(b"0 0.5\n", TimeUnit::Seconds),
            Err(AlignError::Malformed { line: 1, .. })
        ));
        assert!(matches!(
            parse_lab(b"\n0 x a\n", TimeUnit::Seconds),
            Err(AlignError::Malformed { line: 2, .. })
        ));
        assert_eq!(
            parse_lab(b"-0.1 0.5 a\n", TimeUnit::Seconds).unwrap_err(),
            AlignError::NegativeTime { line: 1 }
        );
        assert_eq!(
            parse_lab(b"0.5 0.1 a\n", TimeUnit::Seconds).unwrap_err(),
            AlignError::Reversed { line: 1 }
        );
    }

    #[test]
    fn lab_tolerates_gaps_and_extra_columns() {
        let t = parse_lab(b"0 0.3 a -12.5\n\n0.4 0.9 b\n", TimeUnit::Seconds).unwrap();
        assert_eq!(t.segments.len(), 2);
        assert_eq!(t.segments[0].label, "a");
    }

    #[test]
    fn textgrid_minimal() {
        let t = parse_textgrid(MINIMAL.as_bytes(), "words").unwrap();
        assert_eq!(
            t.segments,
            vec![
                Segment::new("w1", 0.0, 0.5),
                Segment::new("", 0.5, 0.62),
                Segment::new("w2", 0.62, 1.0),
            ]
        );
        assert!(t.is_pause(&t.segments[1]));
        assert_eq!(t.words().count(), 2);
    }

    #[test]
    fn textgrid_missing_tier() {
        let err = parse_textgrid(MINIMAL.as_bytes(), "phones").unwrap_err();
        assert_eq!(err, AlignError::TierNotFound("phones".into()));
        assert!(err.to_string().contains("tier not found"));
    }

    #[test]
    fn textgrid_count_mismatch() {
        let broken = MINIMAL.replace(
            "        intervals [3]:\n            xmin = 0.62\n            xmax = 1.0\n            text = \"w2\"\n",
            "",
        );
        assert!(matches!(
            parse_textgrid(broken.as_bytes(), "words"),
            Err(AlignError::Malformed { .. })
        ));
        let too_many = MINIMAL.replace("intervals: size = 3", "intervals: size = 2");
        assert!(matches!(
            parse_textgrid(too_many.as_bytes(), "words"),
            Err(AlignError::Malformed { .. })
        ));
    }

    #[test]
    fn textgrid_point_tier_rejected() {
        let src = r#"File type = "ooTextFile"
Object class = "TextGrid"
xmin = 0
xmax = 1
tiers? <exists>
size = 1
item []:
    item [1]:
        class = "TextTier"
        name = "marks"
        xmin = 0
        xmax = 1
        points: size = 1
        points [1]:
            number = 0.5
            mark = "x"
"#;
        assert_eq!(
            parse_textgrid(src.as_bytes(), "marks").unwrap_err(),
            AlignError::PointTier("marks".into())
        );
    }

    #[test]
    fn textgrid_escaped_quotes() {
        let src = MINIMAL.replace("text = \"w1\"", "text = \"say \"\"hi\"\"\"");
        let t = parse_textgrid(src.as_bytes(), "words").unwrap();
        assert_eq!(t.segments[0].label, "say \"hi\"");
    }

    #[test]
    fn validation() {
        let track = parse_lab(b"0 0.4 w1\n0.4 0.5 sp\n0.5 1.0 w2\n", TimeUnit::Seconds).unwrap();
        assert!(validate_alignment(&track, &utt(&["w1", "w2"], 1.0), 0.02).is_ok());
        match validate_alignment(&track, &utt(&["w1", "w3"], 1.0), 0.02) {
            Err(AlignError::TokenMismatch { index, .. }) => assert_eq!(index, 1),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            validate_alignment(&track, &utt(&["w1", "w2"], 1.5), 0.02),
            Err(AlignError::DurationMismatch { .. })
        ));
        assert!(matches!(
            validate_alignment(&track, &utt(&["w1", "w2", "w3"], 1.0), 0.02),
            Err(AlignError::TokenMismatch { index: 2, found: None, .. })
        ));
    }

    #[test]
    fn phone_track_fails_word_validation() {
        let track = parse_lab(b"0 0.2 k\n0.2 0.4 a\n", TimeUnit::Seconds).unwrap();
        assert!(validate_alignment(&track, &utt(&["ka"], 0.4), 0.02).is_err());
    }

    #[test]
    fn lab_formatter_roundtrip() {
        let track = parse_textgrid(MINIMAL.as_bytes(), "words").unwrap();
        let back = parse_lab(track.to_lab().as_bytes(), TimeUnit::Seconds).unwrap();
        let labels: Vec<_> = back.segments.iter().map(|s| s.label.as_str()).collect();
        assert_eq!(labels, ["w1", "sil", "w2"]);
        assert_eq!(back.segments[1].t_end, 0.62);
    }
}
