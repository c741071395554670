use std::collections::BTreeSet;

use pausecut::corpus::{read_manifest, read_manifest_as, split_train_val, write_manifest};
use pausecut::{IpuRecord, Manifest, ManifestKind, Position, Utterance};
use proptest::prelude::*;

fn token() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-z]{1,8}",
        "[\u{0900}-\u{097F}]{1,4}",
        "[\u{0B80}-\u{0BFF}]{1,4}",
    ]
}

fn utterances() -> impl Strategy<Value = Vec<Utterance>> {
    prop::collection::vec(
        (
            prop::collection::vec(token(), 1..12),
            prop_oneof![Just(16000u32), Just(22050), Just(48000)],
            0.0f64..30.0,
        ),
        1..40,
    )
    .prop_map(|items| {
        items
            .into_iter()
            .enumerate()
            .map(|(i, (tokens, sample_rate, duration))| Utterance {
                id: format!("spk1_{i:05}"),
                tokens,
                audio_path: format!("wav/spk1_{i:05}.wav"),
                sample_rate,
                duration,
            })
            .collect()
    })
}

fn ipu_records() -> impl Strategy<Value = Vec<IpuRecord>> {
    prop::collection::vec(prop::collection::vec(prop::collection::vec(token(), 1..5), 1..5), 1..10).prop_map(
        |parents| {
            let mut out = Vec::new();
            for (p, ipus) in parents.iter().enumerate() {
                let mut t = 0.0;
                for (index, tokens) in ipus.iter().enumerate() {
                    let d = 0.25 * tokens.len() as f64;
                    out.push(IpuRecord {
                        parent_id: format!("u{p}"),
                        index,
                        position: Position::for_index(index, ipus.len()),
                        tokens: tokens.clone(),
                        t_start: t,
                        t_end: t + d,
                        audio_path: format!("ipu/u{p}_{index:03}.wav"),
                    });
                    t += d;
                }
            }
            out
        },
    )
}

proptest! {
    #[test]
    fn sentence_manifest_roundtrips(utts in utterances()) {
        let m = Manifest::Sentence(utts);
        let mut buf = Vec::new();
        write_manifest(&m, &mut buf).unwrap();
        prop_assert_eq!(read_manifest(buf.as_slice()).unwrap(), m.clone());
        prop_assert_eq!(read_manifest_as(buf.as_slice(), ManifestKind::Sentence).unwrap(), m);
    }

    #[test]
    fn ipu_manifest_roundtrips(records in ipu_records()) {
        let m = Manifest::Ipu(records);
        let mut buf = Vec::new();
        write_manifest(&m, &mut buf).unwrap();
        prop_assert_eq!(read_manifest(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn split_is_a_seeded_partition(utts in utterances(), f in 0.05f64..=1.0, seed in any::<u64>()) {
        let m = Manifest::Sentence(utts);
        let (train, val) = split_train_val(&m, f, seed).unwrap();
        prop_assert_eq!(train.len() + val.len(), m.len());
        prop_assert_eq!(train.len(), ((f * m.len() as f64).round() as usize).min(m.len()));
        let a: BTreeSet<String> = train.ids().into_iter().collect();
        let b: BTreeSet<String> = val.ids().into_iter().collect();
        prop_assert!(a.is_disjoint(&b));
        let all: BTreeSet<String> = m.ids().into_iter().collect();
        prop_assert_eq!(a.union(&b).cloned().collect::<BTreeSet<_>>(), all);
        prop_assert_eq!(split_train_val(&m, f, seed).unwrap(), (train, val));
    }
}

#[test]
fn ninety_ten_split_of_a_thousand() {
    let utts = (0..1000)
        .map(|i| Utterance {
            id: format!("u{i}"),
            tokens: vec!["a".into()],
            audio_path: format!("u{i}.wav"),
            sample_rate: 22050,
            duration: 1.0,
        })
        .collect();
    let (train, val) = split_train_val(&Manifest::Sentence(utts), 0.9, 7).unwrap();
    assert_eq!((train.len(), val.len()), (900, 100));
}
