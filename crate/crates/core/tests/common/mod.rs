#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use revcon::corpus::{
    build_corpus, AspectCategory, AspectLabel, CharSpan, Corpus, GoldLabel, LabelSet, Paper, Review, ReviewComment,
    Sentiment, Venue,
};

/// Per aspect: topics, positive phrase, negative phrase.
pub const TEMPLATES: &[(AspectCategory, &[&str], &str, &str)] = &[
    (AspectCategory::Soundness, &["proof", "derivation", "analysis"], "is rigorous", "is flawed"),
    (AspectCategory::Clarity, &["writing", "notation", "presentation"], "is clear", "is confusing"),
    (AspectCategory::MeaningfulComparison, &["baseline comparison", "related work"], "is thorough", "is incomplete"),
    (AspectCategory::Substance, &["evaluation", "experimental section"], "is extensive", "is too thin"),
    (AspectCategory::Originality, &["idea", "approach"], "is novel", "is incremental"),
    (AspectCategory::Motivation, &["problem", "application"], "is important", "is of little interest"),
    (AspectCategory::Replicability, &["code release", "hyperparameter list"], "is complete", "is missing"),
];

/// Review built from `(text, labels)` comments joined by single spaces.
pub fn review(paper_id: &str, review_id: &str, comments: Vec<(String, LabelSet)>) -> Review {
    let mut raw = String::new();
    let mut out = Vec::new();
    for (i, (text, labels)) in comments.into_iter().enumerate() {
        if !raw.is_empty() {
            raw.push(' ');
        }
        let start = raw.chars().count();
        raw.push_str(&text);
        out.push(ReviewComment {
            comment_id: format!("{review_id}#{i}"),
            char_span: CharSpan::new(start, raw.chars().count()),
            text,
            labels,
        });
    }
    Review {
        review_id: review_id.into(),
        paper_id: paper_id.into(),
        reviewer_alias: review_id.into(),
        raw_text: raw,
        unlabeled: !out.iter().any(|c| !c.labels.is_empty()),
        comments: out,
    }
}

pub fn labels(items: &[(AspectCategory, Option<Sentiment>)]) -> LabelSet {
    let mut set = LabelSet::new();
    for &(aspect, sentiment) in items {
        set.insert(AspectLabel::new(aspect, sentiment).unwrap()).unwrap();
    }
    set
}

pub fn paper(paper_id: &str, reviews: Vec<Review>) -> Paper {
    Paper {
        paper_id: paper_id.into(),
        venue: Venue::Iclr,
        year: 2020,
        title: format!("Paper {paper_id}"),
        r#abstract: String::new(),
        reviews,
    }
}

/// Comment text for an aspect judgment on a topic.
pub fn opinion(aspect: AspectCategory, topic: &str, sentiment: Sentiment) -> String {
    let (_, _, pos, neg) = TEMPLATES.iter().find(|t| t.0 == aspect).unwrap();
    let phrase = if sentiment == Sentiment::Positive { pos } else { neg };
    let mut s = format!("the {topic} {phrase}.");
    s[..1].make_ascii_uppercase();
    s
}

/// Topic named in a synthetic opinion comment.
pub fn topic_of(text: &str) -> Option<&'static str> {
    TEMPLATES
        .iter()
        .flat_map(|t| t.1.iter().copied())
        .find(|topic| text.to_lowercase().contains(topic))
}

/// Papers with 2..=4 reviews, each a summary sentence plus 2..=4 opinions. After
/// building pairs, comment pairs about the same topic are gold Contradiction and
/// the rest NonContradiction.
pub fn synthetic_corpus(seed: u64, papers: usize) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut corpus = Corpus::default();
    for p in 0..papers {
        let paper_id = format!("P{p}");
        let n_reviews = rng.gen_range(2..=4);
        let mut reviews = Vec::new();
        for r in 0..n_reviews {
            let review_id = format!("{paper_id}R{r}");
            let mut comments = vec![(
                format!("This paper studies topic number {p}."),
                labels(&[(AspectCategory::Summary, None)]),
            )];
            let mut aspects: Vec<_> = TEMPLATES.iter().collect();
            aspects.shuffle(&mut rng);
            for (aspect, topics, _, _) in aspects.into_iter().take(rng.gen_range(2..=4)) {
                let topic = topics.choose(&mut rng).unwrap();
                let sentiment = if rng.gen_bool(0.5) { Sentiment::Positive } else { Sentiment::Negative };
                comments.push((opinion(*aspect, topic, sentiment), labels(&[(*aspect, Some(sentiment))])));
            }
            reviews.push(review(&paper_id, &review_id, comments));
        }
        corpus.papers.insert(paper_id.clone(), paper(&paper_id, reviews));
    }
    let (mut corpus, _) = build_corpus(&corpus).unwrap();
    label_by_topic(&mut corpus);
    corpus
}

/// Gold label for every RPC: Contradiction iff both comments name the same topic.
pub fn label_by_topic(corpus: &mut Corpus) {
    let texts: BTreeMap<String, String> = corpus
        .reviews()
        .flat_map(|r| r.comments.iter().map(|c| (c.comment_id.clone(), c.text.clone())))
        .collect();
    for rpc in &mut corpus.rpcs {
        let same = topic_of(&texts[&rpc.comment_a_id]) == topic_of(&texts[&rpc.comment_b_id]);
        rpc.gold_label = Some(if same { GoldLabel::Contradiction } else { GoldLabel::NonContradiction });
    }
}
