mod support;

use edsynth_core::dataset::{dataset_to_jsonl, parse_dataset};
use edsynth_core::scout::ExtractedTrigger;
use edsynth_core::{
    aggregate, anchor_trigger, filter_top_t, Dataset, EventType, Ontology, SentenceExtraction, SuffixSet,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn extraction_strategy() -> impl Strategy<Value = Vec<(String, String)>> {
    let event = prop::sample::select(vec!["Attack", "Arrest", "Infect"]);
    let trigger = prop::sample::select(vec!["raid", "Raid", "RAID", "war", "shot  dead", "shot dead", "got", "held"]);
    prop::collection::vec((event, trigger), 0..40)
        .prop_map(|v| v.into_iter().map(|(e, t)| (e.to_string(), t.to_string())).collect())
}

fn as_extractions(pairs: &[(String, String)]) -> Vec<SentenceExtraction> {
    pairs
        .iter()
        .enumerate()
        .map(|(i, (e, t))| SentenceExtraction {
            sentence_id: format!("s{i}"),
            mentions: vec![ExtractedTrigger {
                event_type: e.clone(),
                trigger: t.clone(),
            }],
        })
        .collect()
}

fn lexicon_rows(pairs: &[(String, String)], t: usize) -> Vec<(String, Vec<(String, usize)>)> {
    filter_top_t(&aggregate(&as_extractions(pairs)), t)
        .per_event
        .into_iter()
        .map(|(e, list)| (e, list.into_iter().map(|s| (s.trigger_key, s.count)).collect()))
        .collect()
}

proptest! {
    #[test]
    fn top_t_matches_counting_oracle(pairs in extraction_strategy(), t in 1usize..6) {
        let oracle: Vec<_> = support::oracle_top_t(&pairs, t).into_iter().collect();
        prop_assert_eq!(lexicon_rows(&pairs, t), oracle);
    }

    #[test]
    fn aggregate_is_order_invariant(pairs in extraction_strategy(), seed in any::<u64>()) {
        let mut shuffled = pairs.clone();
        use rand::seq::SliceRandom;
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(aggregate(&as_extractions(&pairs)), aggregate(&as_extractions(&shuffled)));
    }

    #[test]
    fn top_t_is_a_prefix_of_top_t_plus_one(pairs in extraction_strategy(), t in 1usize..5) {
        let a = lexicon_rows(&pairs, t);
        let b = lexicon_rows(&pairs, t + 1);
        for ((ea, la), (eb, lb)) in a.iter().zip(&b) {
            prop_assert_eq!(ea, eb);
            prop_assert!(la.len() <= t);
            prop_assert_eq!(&lb[..la.len()], &la[..]);
        }
    }

    #[test]
    fn anchor_matches_scanning_oracle(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let passage = support::random_passage(&mut rng, 6);
        let trigger = if rand::Rng::gen_bool(&mut rng, 0.3) {
            format!("{} {}", support::random_word(&mut rng), support::random_word(&mut rng))
        } else {
            support::random_word(&mut rng).to_string()
        };
        let got = anchor_trigger(&passage, &trigger, &SuffixSet::default())
            .map(|a| (a.start, a.end, a.tier as u8));
        prop_assert_eq!(got, support::oracle_anchor(&passage, &trigger, &support::SUFFIXES), "{:?} / {:?}", passage, trigger);
    }

    #[test]
    fn resolve_type_round_trips(idx in 0usize..3, upper in any::<bool>(), quoted in any::<bool>()) {
        let ont = Ontology::new(
            vec![
                EventType::new("Attack", "violent act"),
                EventType::new("Transfer-Money", "payment"),
                EventType::new("die", "loss of life").with_aliases(["death"]),
            ],
            "test",
            "en",
        ).unwrap();
        let name = ont.events()[idx].name.clone();
        let mut raw = if upper { name.to_uppercase() } else { name.to_lowercase() };
        if quoted {
            raw = format!("\"{raw}\".");
        }
        prop_assert_eq!(&ont.resolve_type(&raw).unwrap().name, &name);
    }

    #[test]
    fn dataset_jsonl_round_trip(seed in any::<u64>(), rows in 0usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let instances = (0..rows)
            .map(|i| support::random_instance(&mut rng, &format!("id-{i}"), &["Attack", "Infect"], 4))
            .collect();
        let ds = Dataset::new(instances).unwrap();
        let text = String::from_utf8(dataset_to_jsonl(&ds)).unwrap();
        let back = parse_dataset(&text, "mem", None).unwrap();
        prop_assert_eq!(back, ds);
    }
}
