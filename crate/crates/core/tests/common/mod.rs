#![allow(dead_code)]

use pausecut::{AlignmentTrack, AudioClip, Segment, Utterance};
use rand::Rng;

pub const SR: u32 = 16000;

/// Gap material between two words in a generated alignment.
#[derive(Debug, Clone, Copy)]
enum Between {
    Nothing,
    Sp(u32),
    Gap(u32),
    SpThenSil(u32, u32),
}

pub struct Generated {
    pub utt: Utterance,
    pub track: AlignmentTrack,
    pub clip: AudioClip,
}

fn pause_ms(rng: &mut impl Rng) -> u32 {
    // Mix of spurious blips, near-threshold pauses and long breaths.
    match rng.random_range(0..4) {
        0 => rng.random_range(1..25),
        1 => rng.random_range(80..130),
        _ => rng.random_range(25..600),
    }
}

/// Random word/pause alignment on a 1 ms grid with noise audio quantized to 16 bits so it
/// survives a WAV round trip unchanged.
pub fn generate(rng: &mut impl Rng, id: &str, max_words: usize) -> Generated {
    let n_words = rng.random_range(1..=max_words);
    let mut segs: Vec<Segment> = Vec::new();
    let mut t_ms: u32 = 0;
    let push = |segs: &mut Vec<Segment>, label: &str, len: u32, t: &mut u32| {
        segs.push(Segment::new(label, *t as f64 / 1000.0, (*t + len) as f64 / 1000.0));
        *t += len;
    };
    let lead = rng.random_range(0..300);
    if lead > 0 {
        push(&mut segs, "sil", lead, &mut t_ms);
    }
    let mut tokens = Vec::with_capacity(n_words);
    for i in 0..n_words {
        if i > 0 {
            let between = match rng.random_range(0..10) {
                0..=3 => Between::Nothing,
                4..=6 => Between::Sp(pause_ms(rng)),
                7..=8 => Between::Gap(pause_ms(rng)),
                _ => Between::SpThenSil(pause_ms(rng), pause_ms(rng)),
            };
            match between {
                Between::Nothing => {}
                Between::Sp(d) => push(&mut segs, "sp", d, &mut t_ms),
                Between::Gap(d) => t_ms += d,
                Between::SpThenSil(a, b) => {
                    push(&mut segs, "sp", a, &mut t_ms);
                    push(&mut segs, "sil", b, &mut t_ms);
                }
            }
        }
        let word = format!("w{}", rng.random_range(0..40));
        let len = rng.random_range(60..600);
        push(&mut segs, &word, len, &mut t_ms);
        tokens.push(word);
    }
    let trail = rng.random_range(0..300);
    if trail > 0 {
        push(&mut segs, "sil", trail, &mut t_ms);
    }
    let n_samples = (t_ms as usize) * SR as usize / 1000;
    let samples = (0..n_samples)
        .map(|_| rng.random_range(-30000i32..30000) as f64 / 32768.0)
        .collect();
    let clip = AudioClip::new(samples, SR).unwrap();
    let track = AlignmentTrack::new(segs).unwrap();
    let utt = Utterance {
        id: id.to_owned(),
        tokens,
        audio_path: format!("{id}.wav"),
        sample_rate: SR,
        duration: clip.duration(),
    };
    Generated { utt, track, clip }
}

pub fn corpus(rng: &mut impl Rng, n: usize, max_words: usize) -> Vec<Generated> {
    (0..n).map(|i| generate(rng, &format!("utt{i:04}"), max_words)).collect()
}
