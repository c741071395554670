//! Acceptance gate. Each criterion prints one `[PASS]`/`[FAIL]` line; the process exits
//! non-zero if any criterion fails. Run with `cargo test -p pausecut-cli --test acceptance`.

use std::collections::{HashMap, VecDeque};
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use pausecut::audio::{concat_with_gaps, estimate_f0, read_wav, wav_bytes, write_wav, F0Params};
use pausecut::audit::{align_tokens, eou_audit, error_rates, EouStatus};
use pausecut::ipu::{extract_corpus, extract_ipus, find_ipu_boundaries};
use pausecut::phrase::{segment_text, LexiconEntry};
use pausecut::stats::{fit_gamma, ngram_loglik, ngram_train, pc_tally, relative_reduction};
use pausecut::{
    AlignmentTrack, AudioClip, BreakLexicon, ErrorCounts, ExtractConfig, Manifest, Segment, Utterance,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(limit: Duration, start: Instant, what: &str) -> Result<Duration, String> {
    let took = start.elapsed();
    ensure(took < limit, format!("{what} took {took:?}, limit {limit:?}"))?;
    Ok(took)
}

// ---------------------------------------------------------------------------------------
// Synthetic corpus

const SR: u32 = 16000;

struct Synthetic {
    utt: Utterance,
    track: AlignmentTrack,
    clip: AudioClip,
}

/// Word/pause alignment on a 1 ms grid. Pauses are labelled `sp`/`sil` or left as bare
/// gaps, and their lengths straddle the usual thresholds. Audio is 16-bit-exact noise.
fn synthetic(rng: &mut ChaCha8Rng, id: &str, max_words: usize) -> Synthetic {
    let mut segs = Vec::new();
    let mut t = 0u32;
    fn push(segs: &mut Vec<Segment>, t: &mut u32, label: &str, len: u32) {
        segs.push(Segment::new(label, *t as f64 / 1000.0, (*t + len) as f64 / 1000.0));
        *t += len;
    }
    if rng.random_bool(0.7) {
        push(&mut segs, &mut t, "sil", rng.random_range(10..250));
    }
    let n_words = rng.random_range(1..=max_words);
    let mut tokens = Vec::new();
    for i in 0..n_words {
        if i > 0 {
            let pause = match rng.random_range(0..3) {
                0 => rng.random_range(1..30),
                1 => rng.random_range(90..320),
                _ => rng.random_range(30..700),
            };
            match rng.random_range(0..6) {
                0 | 1 => {}
                2 | 3 => push(&mut segs, &mut t, "sp", pause),
                // Unlabelled gap between words.
                4 => t += pause,
                _ => {
                    push(&mut segs, &mut t, "sp", pause);
                    push(&mut segs, &mut t, "sil", rng.random_range(5..200));
                }
            }
        }
        let word = format!("tok{}", rng.random_range(0..30));
        push(&mut segs, &mut t, &word, rng.random_range(80..500));
        tokens.push(word);
    }
    if rng.random_bool(0.7) {
        push(&mut segs, &mut t, "sil", rng.random_range(10..250));
    }
    let n = t as usize * SR as usize / 1000;
    let samples = (0..n).map(|_| rng.random_range(-20000i32..20000) as f64 / 32768.0).collect();
    let clip = AudioClip::new(samples, SR).unwrap();
    Synthetic {
        utt: Utterance {
            id: id.into(),
            tokens,
            audio_path: format!("{id}.wav"),
            sample_rate: SR,
            duration: clip.duration(),
        },
        track: AlignmentTrack::new(segs).unwrap(),
        clip,
    }
}

fn synthetic_corpus(seed: u64, n: usize, max_words: usize) -> Vec<Synthetic> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| synthetic(&mut rng, &format!("s{i:04}"), max_words)).collect()
}

// ---------------------------------------------------------------------------------------
// Criteria

fn c1_reduction_59_60() -> Check {
    let start = Instant::now();
    let r = relative_reduction(&[(5.36, 2.18), (6.23, 2.50)]).map_err(|e| e.to_string())?;
    let took = within(Duration::from_millis(1), start, "relative_reduction")?;
    ensure(format!("{r:.2}") == "59.60", format!("got {r}"))?;
    Ok(format!("{r:.2}% in {took:?}"))
}

fn c2_reduction_10_24() -> Check {
    let r = relative_reduction(&[(3.41, 3.13), (3.75, 3.29)]).map_err(|e| e.to_string())?;
    ensure(format!("{r:.2}") == "10.24", format!("got {r}"))?;
    Ok(format!("{r:.2}%"))
}

fn c3_error_rates() -> Check {
    let sentence = ErrorCounts {
        repetitions: 113,
        skips: 10,
        n_utterances: 400,
        ..Default::default()
    };
    let ipu = ErrorCounts {
        skips: 6,
        n_utterances: 400,
        ..Default::default()
    };
    let s = error_rates(&sentence).map_err(|e| e.to_string())?;
    let i = error_rates(&ipu).map_err(|e| e.to_string())?;
    let got = [s.repetitions, s.skips, i.skips, s.incorrect_eou];
    ensure(got == [28.25, 2.50, 1.50, 30.75], format!("got {got:?}"))?;
    Ok(format!(
        "repetitions {:.2}%, skips {:.2}%, IPU skips {:.2}%, incorrect EOU {:.2}%",
        got[0], got[1], got[2], got[3]
    ))
}

fn c4_lossless() -> Check {
    let corpus = synthetic_corpus(4, 50, 14);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for s in &corpus {
        fs::write(dir.path().join(&s.utt.audio_path), wav_bytes(&s.clip).unwrap()).unwrap();
    }
    let manifest = Manifest::Sentence(corpus.iter().map(|s| s.utt.clone()).collect());
    let aligns: HashMap<String, AlignmentTrack> =
        corpus.iter().map(|s| (s.utt.id.clone(), s.track.clone())).collect();

    let start = Instant::now();
    let stored = Mutex::new(HashMap::new());
    let (ipus, report) = extract_corpus(
        &manifest,
        &aligns,
        &ExtractConfig::default(),
        |u| read_wav(fs::File::open(dir.path().join(&u.audio_path)).map_err(|e| e.to_string())?).map_err(|e| e.to_string()),
        |rec, clip| {
            let mut buf = Vec::new();
            write_wav(clip, &mut buf).map_err(|e| e.to_string())?;
            stored.lock().unwrap().insert(rec.id(), buf);
            Ok(format!("{}.wav", rec.id()))
        },
    )
    .map_err(|e| e.to_string())?;
    ensure(report.is_complete(), format!("extraction incomplete: {:?}", report.failures))?;
    let stored = stored.into_inner().unwrap();
    let Manifest::Ipu(records) = &ipus else {
        return Err("extraction did not produce an IPU manifest".into());
    };
    for s in &corpus {
        let pieces: Vec<AudioClip> = records
            .iter()
            .filter(|r| r.parent_id == s.utt.id)
            .map(|r| read_wav(stored[&r.id()].as_slice()).unwrap())
            .collect();
        let joined = concat_with_gaps(&pieces, 0.0).map_err(|e| e.to_string())?;
        let original = read_wav(fs::File::open(dir.path().join(&s.utt.audio_path)).unwrap()).unwrap();
        ensure(joined == original, format!("{} does not reassemble exactly", s.utt.id))?;
    }
    let took = within(Duration::from_secs(10), start, "extract + reassemble")?;
    Ok(format!(
        "50 utterances, {} IPUs ({} boundaries) reassembled sample-exactly in {took:.2?}",
        report.n_ipus, report.n_boundaries
    ))
}

fn c5_threshold_sweep() -> Check {
    let corpus = synthetic_corpus(5, 50, 14);
    let mut counts = Vec::new();
    let mut means = Vec::new();
    for t_sil in [0.1, 0.2, 0.3] {
        let cfg = ExtractConfig::default().with_t_sil(t_sil);
        let mut n_bound = 0;
        let mut durations = Vec::new();
        for s in &corpus {
            n_bound += find_ipu_boundaries(&s.track, &cfg).len();
            for (rec, _) in extract_ipus(&s.utt, &s.clip, &s.track, &cfg).map_err(|e| e.to_string())? {
                durations.push(rec.duration());
            }
        }
        counts.push(n_bound);
        means.push(durations.iter().sum::<f64>() / durations.len() as f64);

        // A pause of exactly t_sil, expressed in awkward floats, is a boundary.
        let (a, b) = (0.7, 0.7 + t_sil);
        let exact = AlignmentTrack::new(vec![
            Segment::new("x", 0.0, a),
            Segment::new("sp", a, b),
            Segment::new("y", b, b + 0.4),
        ])
        .unwrap();
        ensure(
            find_ipu_boundaries(&exact, &cfg).len() == 1,
            format!("pause of exactly {t_sil} s was not a boundary"),
        )?;
    }
    ensure(counts.windows(2).all(|w| w[0] >= w[1]), format!("boundary counts {counts:?} increase"))?;
    ensure(means.windows(2).all(|w| w[0] <= w[1]), format!("mean IPU durations {means:?} decrease"))?;
    Ok(format!(
        "boundaries {counts:?}, mean IPU {:.3}/{:.3}/{:.3} s, pause == t_sil included",
        means[0], means[1], means[2]
    ))
}

fn random_lexicon(rng: &mut ChaCha8Rng, alphabet: &[&str]) -> BreakLexicon {
    let mut entries = Vec::new();
    for w in alphabet {
        if rng.random_bool(0.3) {
            entries.push(LexiconEntry {
                word: w.to_string(),
                count: rng.random_range(1..50),
            });
        }
    }
    let k = rng.random_range(0..=entries.len());
    BreakLexicon::from_entries(entries, k).unwrap()
}

fn random_text(rng: &mut ChaCha8Rng, alphabet: &[&str]) -> Vec<String> {
    let n = rng.random_range(1..40);
    (0..n)
        .map(|_| {
            let w = alphabet[rng.random_range(0..alphabet.len())];
            match rng.random_range(0..8) {
                0 => format!("{w},"),
                1 => format!("{w}."),
                2 => "?".to_string(),
                _ => w.to_string(),
            }
        })
        .collect()
}

fn c6_token_conservation() -> Check {
    let corpus = synthetic_corpus(6, 1000, 20);
    let mut n_ipus = 0;
    for (i, s) in corpus.iter().enumerate() {
        let cfg = ExtractConfig {
            min_ipu_words: (i % 3 == 0).then_some(3),
            ..ExtractConfig::default().with_t_sil([0.1, 0.2, 0.3][i % 3])
        };
        let ipus = extract_ipus(&s.utt, &s.clip, &s.track, &cfg).map_err(|e| e.to_string())?;
        n_ipus += ipus.len();
        let joined: Vec<String> = ipus.into_iter().flat_map(|(r, _)| r.tokens).collect();
        ensure(joined == s.utt.tokens, format!("{} lost tokens", s.utt.id))?;
    }

    let alphabet = ["ka", "ki", "hai", "ta", "enge", "ga", "po", "naa"];
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    for case in 0..1000 {
        let lex = random_lexicon(&mut rng, &alphabet);
        let text = random_text(&mut rng, &alphabet);
        let min = rng.random_range(1..5);
        let punct = rng.random_bool(0.5);
        let expected: Vec<String> = if punct {
            text.iter()
                .map(|t| t.trim_end_matches([',', '.', '?']).to_string())
                .filter(|t| !t.is_empty())
                .collect()
        } else {
            text.clone()
        };
        let got = segment_text(&text, &lex, min, punct).concat();
        ensure(got == expected, format!("segmentation case {case} lost tokens"))?;
    }
    Ok(format!("1000 utterances ({n_ipus} IPUs) and 1000 segmentations conserve tokens"))
}

fn c7_min_word_merge() -> Check {
    let toks = |s: &str| pausecut::tokenize(s);
    let hai = BreakLexicon::from_entries(
        vec![LexiconEntry {
            word: "hai".into(),
            count: 5,
        }],
        1,
    )
    .unwrap();
    let cases = [
        (segment_text(&toks("w1 w2 w3 hai w4 w5 w6"), &hai, 3, true), vec![toks("w1 w2 w3 hai"), toks("w4 w5 w6")]),
        (segment_text(&toks("w1 hai w2 w3 w4"), &hai, 3, true), vec![toks("w1 hai w2 w3 w4")]),
        (segment_text(&toks("w1, w2 w3 w4"), &BreakLexicon::empty(), 1, true), vec![toks("w1"), toks("w2 w3 w4")]),
    ];
    for (i, (got, want)) in cases.iter().enumerate() {
        ensure(got == want, format!("worked example {} gave {got:?}", i + 1))?;
    }

    let alphabet = ["a", "b", "c", "d", "e", "f"];
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for case in 0..2000 {
        let lex = random_lexicon(&mut rng, &alphabet);
        let text = random_text(&mut rng, &alphabet);
        let min = rng.random_range(1..6);
        let segs = segment_text(&text, &lex, min, true);
        if segs.len() > 1 {
            ensure(
                segs.iter().all(|s| s.len() >= min),
                format!("case {case}: a segment is shorter than {min}: {segs:?}"),
            )?;
        }
    }
    Ok("3 worked examples match; 2000 random cases keep every split segment >= min_words".into())
}

fn c8_gamma() -> Check {
    let start = Instant::now();
    let mut parts = Vec::new();
    for (i, k) in [0.5, 1.0, 2.0, 5.0].into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(800 + i as u64);
        let dist = Gamma::new(k, 1.7).unwrap();
        let xs: Vec<f64> = (0..100_000).map(|_| dist.sample(&mut rng)).collect();
        let fit = fit_gamma(&xs).map_err(|e| e.to_string())?;
        let rel = (fit.shape - k).abs() / k;
        ensure(rel < 0.03, format!("k={k}: fitted {} ({:.2}% off)", fit.shape, 100.0 * rel))?;
        parts.push(format!("{k}->{:.3}", fit.shape));
    }
    let took = within(Duration::from_secs(5), start, "gamma fits")?;
    Ok(format!("{} in {took:.2?}", parts.join(", ")))
}

/// All strings of length <= `max_len` over `0..alphabet`, each encoded as a byte vector.
fn all_strings(alphabet: u8, max_len: usize) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for c in 0..alphabet {
                let mut t: Vec<u8> = s.clone();
                t.push(c);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Unit-cost edit distances from `src` to every string of length <= `max_len`, by
/// breadth-first search over single insertions, deletions and substitutions. Staying
/// within the length bound loses nothing: deleting first, then substituting, then
/// inserting never exceeds max(|a|, |b|).
fn bfs_distances(src: &[u8], index: &HashMap<Vec<u8>, usize>, alphabet: u8, max_len: usize) -> Vec<u32> {
    let mut dist = vec![u32::MAX; index.len()];
    let mut queue = VecDeque::new();
    dist[index[src]] = 0;
    queue.push_back(src.to_vec());
    while let Some(s) = queue.pop_front() {
        let d = dist[index[&s]];
        let mut neighbours = Vec::new();
        for i in 0..s.len() {
            let mut t = s.clone();
            t.remove(i);
            neighbours.push(t);
            for c in 0..alphabet {
                if c != s[i] {
                    let mut t = s.clone();
                    t[i] = c;
                    neighbours.push(t);
                }
            }
        }
        if s.len() < max_len {
            for i in 0..=s.len() {
                for c in 0..alphabet {
                    let mut t = s.clone();
                    t.insert(i, c);
                    neighbours.push(t);
                }
            }
        }
        for t in neighbours {
            let j = index[&t];
            if dist[j] == u32::MAX {
                dist[j] = d + 1;
                queue.push_back(t);
            }
        }
    }
    dist
}

fn c9_edit_oracle() -> Check {
    let start = Instant::now();
    let strings = all_strings(3, 6);
    let index: HashMap<Vec<u8>, usize> = strings.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
    let names = ["x", "y", "z"];
    let tokens: Vec<Vec<&str>> = strings.iter().map(|s| s.iter().map(|&c| names[c as usize]).collect()).collect();
    let mut pairs = 0usize;
    for (i, s) in strings.iter().enumerate() {
        let oracle = bfs_distances(s, &index, 3, 6);
        for (j, want) in oracle.iter().enumerate() {
            let got = align_tokens(&tokens[i], &tokens[j]).cost();
            ensure(
                got as u32 == *want,
                format!("{:?} -> {:?}: cost {got}, minimum {want}", tokens[i], tokens[j]),
            )?;
            pairs += 1;
        }
    }
    let took = within(Duration::from_secs(30), start, "edit oracle")?;
    Ok(format!("{pairs} pairs over {} strings agree in {took:.2?}", strings.len()))
}

fn c10_binomial_oracle() -> Check {
    // Exhaustive enumeration: tally how many of the 2^n preference patterns give each
    // count, then sum the patterns at least as lopsided as the observed one.
    let mut checked = 0;
    for n in 0..=20u32 {
        let mut by_count = vec![0u64; n as usize + 1];
        for mask in 0u32..(1 << n) {
            by_count[mask.count_ones() as usize] += 1;
        }
        for a in 0..=n {
            let b = n - a;
            let extreme = (2 * a as i64 - n as i64).abs();
            let hits: u64 = (0..=n)
                .filter(|&k| (2 * k as i64 - n as i64).abs() >= extreme)
                .map(|k| by_count[k as usize])
                .sum();
            let oracle = hits as f64 / (1u64 << n) as f64;
            for equal in 0..=(20 - n) {
                if n + equal == 0 {
                    ensure(pc_tally(0, 0, 0).is_err(), "an empty tally must be rejected")?;
                    continue;
                }
                let p = pc_tally(a as u64, b as u64, equal as u64).map_err(|e| e.to_string())?.p_value;
                ensure((p - oracle).abs() < 1e-12, format!("({a},{b},{equal}): p={p}, oracle {oracle}"))?;
                checked += 1;
            }
        }
    }
    let r = pc_tally(9, 1, 0).map_err(|e| e.to_string())?;
    ensure(
        (r.p_value - 0.0215).abs() < 5e-5 && r.significant(0.05),
        format!("(9,1) p={}", r.p_value),
    )?;
    Ok(format!("{checked} tallies match enumeration; (9,1) p = {:.4} < 0.05", r.p_value))
}

fn c11_lm() -> Check {
    let s = |v: &[&str]| v.iter().map(|w| w.to_string()).collect::<Vec<_>>();
    let m = ngram_train(&[s(&["a", "b", "a", "b"])], 2).map_err(|e| e.to_string())?;
    let ll = ngram_loglik(&m, &s(&["a", "b"]));
    let hand = (2.0f64 / 5.0).ln() + (3.0f64 / 6.0).ln() + (2.0f64 / 6.0).ln();
    ensure((ll + 2.708).abs() < 1e-3, format!("score {ll}"))?;
    ensure((ll - hand).abs() < 1e-12, format!("score {ll}, hand count {hand}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for order in 1..=3 {
        let sents: Vec<Vec<String>> = (0..30)
            .map(|_| (0..rng.random_range(0..10)).map(|_| format!("v{}", rng.random_range(0..6))).collect())
            .collect();
        let m = ngram_train(&sents, order).map_err(|e| e.to_string())?;
        let mut histories: Vec<Vec<String>> = m.histories().map(<[String]>::to_vec).collect();
        histories.push(vec!["never".to_string(); order - 1]);
        for h in histories {
            let total: f64 = m.vocab().iter().map(|w| m.prob(&h, w)).sum();
            worst = worst.max((total - 1.0).abs());
        }
    }
    ensure(worst < 1e-9, format!("a distribution sums to 1 +- {worst}"))?;
    Ok(format!("score {ll:.4}; distributions sum to 1 within {worst:.1e}"))
}

fn c12_mock_pipeline() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let lex = dir.path().join("lexicon.json");
    fs::write(&lex, r#"[{"word": "hai", "count": 9}]"#).unwrap();
    let run = |wav: &Path| -> Result<Vec<u8>, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_pausecut"))
            .env_remove("PAUSECUT_ENDPOINT")
            .args(["synth", "--mock", "--gap", "0.1", "--text", "w1 w2 w3 hai w4 w5 w6", "--lexicon"])
            .arg(&lex)
            .arg("--wav")
            .arg(wav)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.success(), String::from_utf8_lossy(&out.stderr).into_owned())?;
        fs::read(wav).map_err(|e| e.to_string())
    };
    let first = run(&dir.path().join("a.wav"))?;
    let second = run(&dir.path().join("b.wav"))?;
    ensure(first == second, "the two runs wrote different bytes")?;
    let clip = read_wav(first.as_slice()).map_err(|e| e.to_string())?;
    ensure(
        clip.len() == 33075 && clip.sample_rate == 22050,
        format!("{} samples at {} Hz", clip.len(), clip.sample_rate),
    )?;
    Ok(format!("{:.3} s ({} samples), byte-identical across runs", clip.duration(), clip.len()))
}

fn c13_f0() -> Check {
    let mut parts = Vec::new();
    for (freq, tol) in [(220.0, 2.0), (100.0, 1.0)] {
        let samples = (0..SR)
            .map(|i| 0.6 * (std::f64::consts::TAU * freq * i as f64 / SR as f64).sin())
            .collect();
        let clip = AudioClip::new(samples, SR).unwrap();
        let (_, summary) = estimate_f0(&clip, &F0Params::default()).map_err(|e| e.to_string())?;
        let mean = summary.mean().ok_or(format!("{freq} Hz sine judged unvoiced"))?;
        ensure((mean - freq).abs() < tol, format!("{freq} Hz sine estimated at {mean}"))?;
        parts.push(format!("{freq} Hz -> {mean:.2}"));
    }
    Ok(parts.join(", "))
}

fn c14_eou() -> Check {
    let trace = |cross: usize| -> Vec<f64> { (0..320).map(|i| if i >= cross { 0.93 } else { 0.02 }).collect() };
    let good = eou_audit(&trace(230), 230, 0.5, 10).map_err(|e| e.to_string())?;
    let bad = eou_audit(&trace(252), 230, 0.5, 10).map_err(|e| e.to_string())?;
    ensure(good.status == EouStatus::OnTime, format!("crossing at 230: {:?}", good.status))?;
    ensure(bad.status == EouStatus::Late(22), format!("crossing at 252: {:?}", bad.status))?;
    Ok("crossing 230 -> on time, crossing 252 -> late by 22 frames".into())
}

fn main() {
    let criteria: [Criterion; 14] = [
        ("relative reduction, first pair set", c1_reduction_59_60),
        ("relative reduction, second pair set", c2_reduction_10_24),
        ("error-rate arithmetic", c3_error_rates),
        ("lossless splicing", c4_lossless),
        ("threshold sweep", c5_threshold_sweep),
        ("token conservation", c6_token_conservation),
        ("min-word merge", c7_min_word_merge),
        ("gamma shape recovery", c8_gamma),
        ("edit-script oracle", c9_edit_oracle),
        ("binomial oracle", c10_binomial_oracle),
        ("n-gram model", c11_lm),
        ("mock synthesis pipeline", c12_mock_pipeline),
        ("F0 of pure tones", c13_f0),
        ("end-of-utterance audit", c14_eou),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("[PASS] {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
