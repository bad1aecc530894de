mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use protoner::bridge::{decode_scores, DecodeMode, LogitsRecord};
use protoner::corpus::{
    bio_decode, bio_encode, parse_conll, repair_bio, split_dataset, validate_bio, write_conll, BioTag,
    ColumnSep, Corpus, Document, RepairMode, Sentence,
};
use protoner::eval::{cohen_kappa, evaluate, MatchMode};
use protoner::subword::{
    chunk_sentence, project_labels_to_pieces, project_piece_labels_to_words, tokenize_sentence, AlignedSentence,
    PieceLabel,
};

fn any_tag(types: &'static [&'static str]) -> impl Strategy<Value = BioTag> {
    prop_oneof![
        Just(BioTag::O),
        prop::sample::select(types).prop_map(BioTag::begin),
        prop::sample::select(types).prop_map(BioTag::inside),
    ]
}

fn any_tags(max: usize) -> impl Strategy<Value = Vec<BioTag>> {
    prop::collection::vec(any_tag(&["X", "Y"]), 0..=max)
}

fn valid_tags(max: usize) -> impl Strategy<Value = Vec<BioTag>> {
    any_tags(max).prop_map(|t| repair_bio(&t, RepairMode::Begin))
}

fn word() -> impl Strategy<Value = String> {
    "[a-z]{1,4}|[A-Z][a-z]{0,3}|[0-9]{1,3}|[a-z]{1,3}-[a-z]{1,2}|\\(|\\)|\\.|,"
}

/// Several documents of schema-valid tagged sentences over three entity types.
fn tagged_corpus(max_docs: usize) -> impl Strategy<Value = Corpus> {
    let sentence = prop::collection::vec((word(), any_tag(&["Reagent", "Action", "Device"])), 1..10)
        .prop_map(|pairs| {
            let (words, tags): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            let tags = repair_bio(&tags, RepairMode::Begin);
            Sentence::tagged(words.into_iter().zip(tags))
        });
    prop::collection::vec(prop::collection::vec(sentence, 1..5), 1..=max_docs).prop_map(|docs| {
        Corpus::from_documents(
            docs.into_iter()
                .enumerate()
                .map(|(i, s)| Document::new(format!("doc{i}"), s))
                .collect(),
        )
    })
}

/// Same words as `gold`, independently drawn tags.
fn paired_corpora() -> impl Strategy<Value = (Corpus, Corpus)> {
    tagged_corpus(3).prop_flat_map(|gold| {
        let lens: Vec<usize> = gold.sentences().map(Sentence::len).collect();
        let tag_sets: Vec<_> = lens
            .into_iter()
            .map(|n| prop::collection::vec(any_tag(&["Reagent", "Action", "Device"]), n))
            .collect();
        (Just(gold), tag_sets)
    })
    .prop_map(|(gold, tag_sets)| {
        let mut pred = gold.clone();
        let mut it = tag_sets.into_iter();
        for doc in &mut pred.documents {
            for s in &mut doc.sentences {
                s.tags = Some(repair_bio(&it.next().unwrap(), RepairMode::Begin));
            }
        }
        (gold, pred)
    })
}

fn swap_labels(corpus: &Corpus, a: &str, b: &str) -> Corpus {
    let mut out = corpus.clone();
    for doc in &mut out.documents {
        for s in &mut doc.sentences {
            for t in s.tags.iter_mut().flatten() {
                if let BioTag::Entity { label, .. } = t {
                    if label == a {
                        *label = b.to_string();
                    } else if label == b {
                        *label = a.to_string();
                    }
                }
            }
        }
    }
    out
}

fn aligned_from_fan_out(fan_out: &[usize]) -> AlignedSentence {
    let mut a = AlignedSentence {
        words: Vec::new(),
        pieces: Vec::new(),
        word_index: Vec::new(),
        first_piece_index: Vec::new(),
    };
    for (w, &k) in fan_out.iter().enumerate() {
        a.words.push(format!("w{w}"));
        a.first_piece_index.push(a.pieces.len());
        for j in 0..k {
            a.pieces.push(if j == 0 { format!("w{w}") } else { "##x".into() });
            a.word_index.push(w);
        }
    }
    a
}

/// Fewest chunks any contiguous partition can achieve, by exhaustive search.
fn fewest_chunks(fan_out: &[usize], capacity: usize) -> usize {
    let n = fan_out.len();
    let mut best = usize::MAX;
    for cuts in 0u32..(1 << n.saturating_sub(1)) {
        let mut chunks = 1;
        let mut used = 0;
        let mut ok = true;
        for (w, &k) in fan_out.iter().enumerate() {
            if w > 0 && cuts & (1 << (w - 1)) != 0 {
                chunks += 1;
                used = 0;
            }
            used += k;
            ok &= used <= capacity;
        }
        if ok {
            best = best.min(chunks);
        }
    }
    best
}

fn records_for(aligned: &AlignedSentence, rows: &[Vec<f64>]) -> Vec<LogitsRecord> {
    (0..aligned.piece_count())
        .map(|p| LogitsRecord {
            document: "d".into(),
            sentence: 0,
            piece: p,
            surface: aligned.pieces[p].clone(),
            word_index: aligned.word_index[p],
            scores: rows[p].clone(),
        })
        .collect()
}

fn score_rows(m: usize) -> impl Strategy<Value = (Vec<usize>, Vec<Vec<f64>>)> {
    prop::collection::vec(1usize..4, 1..10).prop_flat_map(move |fan_out| {
        let pieces: usize = fan_out.iter().sum();
        (Just(fan_out), prop::collection::vec(prop::collection::vec(-5.0f64..5.0, m), pieces))
    })
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn bio_round_trip(tags in valid_tags(12)) {
        let spans = bio_decode(&tags).unwrap();
        prop_assert_eq!(bio_encode(&spans, tags.len()).unwrap(), tags);
    }

    #[test]
    fn repair_always_validates(tags in any_tags(12)) {
        for mode in [RepairMode::Begin, RepairMode::Merge] {
            let fixed = repair_bio(&tags, mode);
            prop_assert!(validate_bio(&fixed).is_empty());
            prop_assert_eq!(fixed.len(), tags.len());
            if validate_bio(&tags).is_empty() {
                prop_assert_eq!(&fixed, &tags);
            }
        }
    }

    #[test]
    fn conll_round_trip(corpus in tagged_corpus(4)) {
        let text = write_conll(&corpus).unwrap();
        let parsed = parse_conll(text.as_bytes(), ColumnSep::Whitespace).unwrap();
        prop_assert_eq!(&parsed.documents, &corpus.documents);
        prop_assert_eq!(write_conll(&parsed).unwrap(), text);
    }

    #[test]
    fn alignment_is_onto_and_projection_inverts(corpus in tagged_corpus(2)) {
        let vocab = common::toy_vocab();
        for s in corpus.sentences() {
            let a = tokenize_sentence(s, &vocab);
            prop_assert_eq!(a.word_count(), s.len());
            prop_assert!(a.word_index.windows(2).all(|w| w[1] == w[0] || w[1] == w[0] + 1));
            prop_assert_eq!(a.word_index.first().copied(), Some(0));
            prop_assert_eq!(a.word_index.last().copied(), Some(s.len() - 1));
            for (w, &p) in a.first_piece_index.iter().enumerate() {
                prop_assert_eq!(a.word_index[p], w);
            }
            let tags = s.tags.clone().unwrap();
            let projected = project_labels_to_pieces(&a, &tags).unwrap();
            let piece_tags: Vec<BioTag> = projected
                .iter()
                .map(|(_, l)| match l {
                    PieceLabel::Tag(t) => t.clone(),
                    PieceLabel::Ignore => BioTag::begin("Junk"),
                })
                .collect();
            prop_assert_eq!(project_piece_labels_to_words(&a, &piece_tags).unwrap(), tags);
        }
    }

    #[test]
    fn greedy_chunking_is_optimal(fan_out in prop::collection::vec(1usize..6, 1..=12), budget in 7usize..20) {
        let aligned = aligned_from_fan_out(&fan_out);
        let plan = chunk_sentence(&aligned, budget).unwrap();
        prop_assert_eq!(plan.chunks.len(), fewest_chunks(&fan_out, budget - 2));
        let covered: Vec<usize> = plan.chunks.iter().flat_map(|c| c.clone()).collect();
        prop_assert_eq!(covered, (0..fan_out.len()).collect::<Vec<_>>());
        for r in plan.piece_ranges(&aligned) {
            prop_assert!(r.len() + 2 <= budget);
        }
    }

    #[test]
    fn partial_never_below_exact((gold, pred) in paired_corpora()) {
        let exact = evaluate(&gold, &pred, MatchMode::Exact).unwrap().micro;
        let partial = evaluate(&gold, &pred, MatchMode::Partial).unwrap().micro;
        prop_assert!(partial.f1 >= exact.f1);
        prop_assert!(partial.tp >= exact.tp);
    }

    #[test]
    fn exact_scores_swap_with_roles((gold, pred) in paired_corpora()) {
        let forward = evaluate(&gold, &pred, MatchMode::Exact).unwrap().micro;
        let backward = evaluate(&pred, &gold, MatchMode::Exact).unwrap().micro;
        prop_assert_eq!(forward.precision, backward.recall);
        prop_assert_eq!(forward.recall, backward.precision);
        prop_assert_eq!(forward.f1, backward.f1);
    }

    #[test]
    fn kappa_is_symmetric_and_label_blind((a, b) in paired_corpora()) {
        let k = cohen_kappa(&a, &b).unwrap();
        prop_assert!(k.kappa <= 1.0 + 1e-12);
        let back = cohen_kappa(&b, &a).unwrap();
        prop_assert!((k.kappa - back.kappa).abs() < 1e-12);
        let relabeled = cohen_kappa(&swap_labels(&a, "Reagent", "Device"), &swap_labels(&b, "Reagent", "Device")).unwrap();
        prop_assert!((k.kappa - relabeled.kappa).abs() < 1e-12);
    }

    #[test]
    fn split_is_a_partition(docs in 2usize..40, cut in 0.05f64..0.9, seed in any::<u64>()) {
        let corpus = Corpus::from_documents(
            (0..docs).map(|i| Document::new(format!("d{i}"), vec![Sentence::untagged(["x"])])).collect(),
        );
        let parts = split_dataset(&corpus, &[cut, 1.0 - cut], seed).unwrap();
        let ids: Vec<&str> = parts.iter().flat_map(|p| p.documents.iter().map(|d| d.id.as_str())).collect();
        prop_assert_eq!(ids.len(), docs);
        prop_assert_eq!(ids.iter().collect::<BTreeSet<_>>().len(), docs);
        prop_assert_eq!(split_dataset(&corpus, &[cut, 1.0 - cut], seed).unwrap(), parts);
    }

    #[test]
    fn too_few_documents_to_split(docs in 0usize..3, seed in any::<u64>()) {
        let corpus = Corpus::from_documents(
            (0..docs).map(|i| Document::new(format!("d{i}"), vec![Sentence::untagged(["x"])])).collect(),
        );
        prop_assert!(split_dataset(&corpus, &[0.6, 0.2, 0.2], seed).is_err());
    }

    #[test]
    fn brat_recovers_aligned_spans(
        lines in prop::collection::vec(prop::collection::vec("[a-z]{2,6}", 1..8), 1..4),
        picks in prop::collection::vec((any::<bool>(), 1usize..3, any::<bool>()), 0..20),
    ) {
        let text: String = lines.iter().map(|l| l.join(" ") + "\n").collect();
        // token char ranges, numbered across the whole text
        let mut tokens = Vec::new();
        let mut offset = 0;
        for (s, line) in lines.iter().enumerate() {
            for (w, word) in line.iter().enumerate() {
                let len = word.chars().count();
                tokens.push((s, w, offset, offset + len));
                offset += len + 1;
            }
        }
        // walk the tokens, placing non-touching annotations inside single lines
        let mut ann = String::new();
        let mut expected = Vec::new();
        let mut misaligned = 0;
        let mut i = 0;
        for (k, &(take, width, shrink)) in picks.iter().enumerate() {
            if i >= tokens.len() {
                break;
            }
            if !take {
                i += 1;
                continue;
            }
            let (s, w, start, _) = tokens[i];
            let mut last = i;
            while last + 1 < tokens.len() && last + 1 < i + width && tokens[last + 1].0 == s {
                last += 1;
            }
            let end = tokens[last].3;
            let label = if k % 2 == 0 { "Reagent" } else { "Action" };
            let start_char = if shrink { misaligned += 1; start + 1 } else { start };
            let surface: String = text.chars().skip(start_char).take(end - start_char).collect();
            ann.push_str(&format!("T{k}\t{label} {start_char} {end}\t{surface}\n"));
            expected.push((s, w, tokens[last].1, label));
            i = last + 2;
        }
        let parsed = protoner::corpus::parse_brat("doc", &text, ann.as_bytes()).unwrap();
        prop_assert_eq!(parsed.warnings.len(), misaligned);
        let mut found = Vec::new();
        for (s, sentence) in parsed.document.sentences.iter().enumerate() {
            for span in sentence.spans().unwrap() {
                found.push((s, span.start, span.end, span.label.clone()));
            }
        }
        let expected: Vec<_> = expected.into_iter().map(|(s, a, b, l)| (s, a, b, l.to_string())).collect();
        prop_assert_eq!(found, expected);
    }

    #[test]
    fn constrained_decoding_is_always_valid((fan_out, rows) in score_rows(5)) {
        let aligned = aligned_from_fan_out(&fan_out);
        let alphabet = common::tags("O B-X I-X B-Y I-Y");
        let tags = decode_scores(&records_for(&aligned, &rows), &aligned, &alphabet, DecodeMode::Constrained).unwrap();
        prop_assert!(validate_bio(&tags).is_empty());
        prop_assert_eq!(tags.len(), fan_out.len());
    }

    #[test]
    fn decoding_ignores_per_piece_shifts(
        (fan_out, rows) in score_rows(5),
        shifts in prop::collection::vec(-100.0f64..100.0, 40),
    ) {
        let aligned = aligned_from_fan_out(&fan_out);
        let alphabet = common::tags("O B-X I-X B-Y I-Y");
        let shifted: Vec<Vec<f64>> = rows
            .iter()
            .zip(shifts.iter().cycle())
            .map(|(r, s)| r.iter().map(|v| v + s).collect())
            .collect();
        for mode in [DecodeMode::Argmax, DecodeMode::Constrained] {
            prop_assert_eq!(
                decode_scores(&records_for(&aligned, &rows), &aligned, &alphabet, mode).unwrap(),
                decode_scores(&records_for(&aligned, &shifted), &aligned, &alphabet, mode).unwrap()
            );
        }
    }
}
