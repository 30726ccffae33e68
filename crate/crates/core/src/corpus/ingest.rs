use std::collections::BTreeSet;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::segment::{segment_with, RuleSegmenter, Segmenter};
use super::types::{
    validate_comments, AspectCategory, AspectLabel, CharSpan, Corpus, LabelSet, Paper, Review,
    ReviewComment, Sentiment, Venue,
};
use super::CorpusError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    /// One paper per line, see [`parse_jsonl`].
    AsapJsonl,
    /// `<dir>/<paper_id>/<review_id>.txt` with an optional `<dir>/<paper_id>/paper.json`.
    PlainDir,
    /// A serialized [`Corpus`] including pairs, RPCs and gold labels.
    Snapshot,
}

impl CorpusFormat {
    /// Directories are plain dirs, `.jsonl` is the paper-per-line format, anything else a snapshot.
    pub fn detect(path: &Path) -> CorpusFormat {
        if path.is_dir() {
            CorpusFormat::PlainDir
        } else if path.extension().is_some_and(|e| e == "jsonl") {
            CorpusFormat::AsapJsonl
        } else {
            CorpusFormat::Snapshot
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct PaperRecord {
    paper_id: String,
    venue: String,
    #[serde(default)]
    year: i32,
    #[serde(default)]
    title: String,
    #[serde(default)]
    r#abstract: String,
    reviews: Vec<ReviewRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ReviewRecord {
    review_id: String,
    #[serde(default)]
    reviewer_alias: String,
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    comments: Option<Vec<CommentRecord>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CommentRecord {
    text: String,
    start: usize,
    end: usize,
    #[serde(default)]
    labels: Vec<LabelRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LabelRecord {
    aspect: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sentiment: Option<String>,
}

pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Corpus, CorpusError> {
    let corpus = match format {
        CorpusFormat::AsapJsonl => {
            let file = fs::File::open(path)?;
            parse_jsonl(BufReader::new(file), &RuleSegmenter::default())?
        }
        CorpusFormat::PlainDir => load_plain_dir(path, &RuleSegmenter::default())?,
        CorpusFormat::Snapshot => {
            let text = fs::read_to_string(path)?;
            serde_json::from_str(&text)?
        }
    };
    corpus.validate()?;
    Ok(corpus)
}

/// Reads paper-per-line JSON. Reviews without a `comments` array are segmented
/// with `segmenter` and flagged unlabeled.
pub fn parse_jsonl<R: BufRead>(reader: R, segmenter: &dyn Segmenter) -> Result<Corpus, CorpusError> {
    let mut corpus = Corpus::default();
    let mut review_ids = BTreeSet::new();
    for (index, line) in reader.lines().enumerate() {
        let line_no = index + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PaperRecord =
            serde_json::from_str(&line).map_err(|e| CorpusError::MalformedRecord {
                line: line_no,
                reason: e.to_string(),
            })?;
        let paper = paper_from_record(record, line_no, segmenter)?;
        for review in &paper.reviews {
            if !review_ids.insert(review.review_id.clone()) {
                return Err(CorpusError::DuplicateId(review.review_id.clone()));
            }
        }
        if corpus.papers.contains_key(&paper.paper_id) {
            return Err(CorpusError::DuplicateId(paper.paper_id));
        }
        corpus.papers.insert(paper.paper_id.clone(), paper);
    }
    Ok(corpus)
}

fn malformed(line: usize, reason: impl Into<String>) -> CorpusError {
    CorpusError::MalformedRecord {
        line,
        reason: reason.into(),
    }
}

fn paper_from_record(
    record: PaperRecord,
    line: usize,
    segmenter: &dyn Segmenter,
) -> Result<Paper, CorpusError> {
    if record.paper_id.is_empty() {
        return Err(malformed(line, "empty paper_id"));
    }
    let mut reviews = Vec::with_capacity(record.reviews.len());
    for r in record.reviews {
        if r.review_id.is_empty() {
            return Err(malformed(line, "empty review_id"));
        }
        let review = review_from_record(&record.paper_id, r, line, segmenter)?;
        reviews.push(review);
    }
    Ok(Paper {
        paper_id: record.paper_id,
        venue: Venue::parse_lenient(&record.venue),
        year: record.year,
        title: record.title,
        r#abstract: record.r#abstract,
        reviews,
    })
}

fn review_from_record(
    paper_id: &str,
    record: ReviewRecord,
    line: usize,
    segmenter: &dyn Segmenter,
) -> Result<Review, CorpusError> {
    let prefix = format!("{}#", record.review_id);
    let comments = match record.comments {
        None => segment_with(segmenter, &prefix, &record.text)
            .map_err(|e| malformed(line, format!("review {}: {e}", record.review_id)))?,
        Some(items) => {
            let mut comments = Vec::with_capacity(items.len());
            for (index, item) in items.into_iter().enumerate() {
                let mut labels = LabelSet::new();
                for label in item.labels {
                    labels
                        .insert(parse_label(&label, line)?)
                        .map_err(|e| malformed(line, e.to_string()))?;
                }
                comments.push(ReviewComment {
                    comment_id: format!("{prefix}{index}"),
                    text: item.text,
                    char_span: CharSpan::new(item.start, item.end),
                    labels,
                });
            }
            comments
        }
    };
    let review = Review {
        review_id: record.review_id,
        paper_id: paper_id.to_string(),
        reviewer_alias: record.reviewer_alias,
        raw_text: record.text,
        unlabeled: !comments.iter().any(ReviewComment::is_labeled),
        comments,
    };
    validate_comments(&review).map_err(|e| malformed(line, e.to_string()))?;
    Ok(review)
}

fn parse_label(label: &LabelRecord, line: usize) -> Result<AspectLabel, CorpusError> {
    let aspect: AspectCategory = label.aspect.parse()?;
    let sentiment = match &label.sentiment {
        None => None,
        Some(s) if s.trim().is_empty() => None,
        Some(s) => Some(
            s.parse::<Sentiment>()
                .map_err(|e| malformed(line, e.to_string()))?,
        ),
    };
    AspectLabel::new(aspect, sentiment).map_err(|e| malformed(line, e.to_string()))
}

#[derive(Debug, Default, Deserialize)]
struct PaperMeta {
    #[serde(default)]
    venue: String,
    #[serde(default)]
    year: i32,
    #[serde(default)]
    title: String,
    #[serde(default)]
    r#abstract: String,
}

fn load_plain_dir(root: &Path, segmenter: &dyn Segmenter) -> Result<Corpus, CorpusError> {
    let mut corpus = Corpus::default();
    let mut review_ids = BTreeSet::new();
    let mut paper_dirs: Vec<_> = fs::read_dir(root)?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    paper_dirs.sort();
    for (index, dir) in paper_dirs.iter().enumerate() {
        let paper_id = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let meta_path = dir.join("paper.json");
        let meta: PaperMeta = if meta_path.exists() {
            serde_json::from_str(&fs::read_to_string(&meta_path)?).map_err(|e| {
                malformed(index + 1, format!("{}: {e}", meta_path.display()))
            })?
        } else {
            PaperMeta::default()
        };
        let mut files: Vec<_> = fs::read_dir(dir)?
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|e| e == "txt"))
            .collect();
        files.sort();
        let mut reviews = Vec::new();
        for file in files {
            let stem = file
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let review_id = format!("{paper_id}/{stem}");
            if !review_ids.insert(review_id.clone()) {
                return Err(CorpusError::DuplicateId(review_id));
            }
            let text = fs::read_to_string(&file)?;
            let comments = segment_with(segmenter, &format!("{review_id}#"), &text)
                .map_err(|e| malformed(index + 1, format!("{}: {e}", file.display())))?;
            reviews.push(Review {
                review_id,
                paper_id: paper_id.clone(),
                reviewer_alias: stem,
                raw_text: text,
                comments,
                unlabeled: true,
            });
        }
        corpus.papers.insert(
            paper_id.clone(),
            Paper {
                paper_id,
                venue: Venue::parse_lenient(&meta.venue),
                year: meta.year,
                title: meta.title,
                r#abstract: meta.r#abstract,
                reviews,
            },
        );
    }
    Ok(corpus)
}

/// Writes papers in the paper-per-line format with canonical aspect names.
pub fn write_jsonl<W: Write>(corpus: &Corpus, mut out: W) -> Result<(), CorpusError> {
    for paper in corpus.papers.values() {
        let record = PaperRecord {
            paper_id: paper.paper_id.clone(),
            venue: paper.venue.as_str().to_string(),
            year: paper.year,
            title: paper.title.clone(),
            r#abstract: paper.r#abstract.clone(),
            reviews: paper
                .reviews
                .iter()
                .map(|r| ReviewRecord {
                    review_id: r.review_id.clone(),
                    reviewer_alias: r.reviewer_alias.clone(),
                    text: r.raw_text.clone(),
                    comments: Some(
                        r.comments
                            .iter()
                            .map(|c| CommentRecord {
                                text: c.text.clone(),
                                start: c.char_span.start,
                                end: c.char_span.end,
                                labels: c
                                    .labels
                                    .iter()
                                    .map(|l| LabelRecord {
                                        aspect: l.aspect.as_str().to_string(),
                                        sentiment: l.sentiment.map(|s| {
                                            match s {
                                                Sentiment::Positive => "Positive",
                                                Sentiment::Negative => "Negative",
                                            }
                                            .to_string()
                                        }),
                                    })
                                    .collect(),
                            })
                            .collect(),
                    ),
                })
                .collect(),
        };
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_snapshot(corpus: &Corpus, path: &Path) -> Result<(), CorpusError> {
    let file = fs::File::create(path)?;
    serde_json::to_writer(std::io::BufWriter::new(file), corpus)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Corpus, CorpusError> {
        parse_jsonl(text.as_bytes(), &RuleSegmenter::default())
    }

    const LABELED: &str = r#"{"paper_id":"P1","venue":"ICLR","year":2018,"title":"T","abstract":"A","reviews":[{"review_id":"r1","reviewer_alias":"R1","text":"Clear paper. Weak proofs.","comments":[{"text":"Clear paper.","start":0,"end":12,"labels":[{"aspect":"clarity","sentiment":"positive"}]},{"text":"Weak proofs.","start":13,"end":25,"labels":[{"aspect":"Soundness","sentiment":"Negative"},{"aspect":"summary"}]}]}]}"#;

    #[test]
    fn labeled_record_loads_with_canonical_labels() {
        let corpus = parse(LABELED).unwrap();
        let review = corpus.review("r1").unwrap();
        assert!(!review.unlabeled);
        assert_eq!(review.comments.len(), 2);
        assert_eq!(review.comments[1].comment_id, "r1#1");
        assert_eq!(
            review.comments[1].labels.sentiment(AspectCategory::Soundness),
            Some(Sentiment::Negative)
        );
        assert!(review.comments[1].labels.contains(AspectCategory::Summary));
        assert_eq!(corpus.paper("P1").unwrap().venue, Venue::Iclr);
    }

    #[test]
    fn missing_comments_are_segmented_and_flagged() {
        let line = r#"{"paper_id":"P1","venue":"NeurIPS","reviews":[{"review_id":"r1","text":"One. Two."}]}"#;
        let corpus = parse(line).unwrap();
        let review = corpus.review("r1").unwrap();
        assert!(review.unlabeled);
        assert_eq!(review.comments.len(), 2);
    }

    #[test]
    fn unknown_aspect_is_reported() {
        let line = LABELED.replace("\"clarity\"", "\"novelty\"");
        assert!(matches!(parse(&line), Err(CorpusError::UnknownAspectName(n)) if n == "novelty"));
    }

    #[test]
    fn bad_span_is_malformed_with_line_number() {
        let line = LABELED.replace("\"end\":12", "\"end\":11");
        let text = format!("\n{line}");
        assert!(matches!(parse(&text), Err(CorpusError::MalformedRecord { line: 2, .. })));
    }

    #[test]
    fn invalid_json_is_malformed() {
        assert!(matches!(parse("{not json"), Err(CorpusError::MalformedRecord { line: 1, .. })));
    }

    #[test]
    fn duplicate_review_ids_are_rejected() {
        let second = LABELED.replace("\"P1\"", "\"P2\"");
        let text = format!("{LABELED}\n{second}");
        assert!(matches!(parse(&text), Err(CorpusError::DuplicateId(id)) if id == "r1"));
    }

    #[test]
    fn jsonl_round_trip_preserves_papers() {
        let corpus = parse(LABELED).unwrap();
        let mut buf = Vec::new();
        write_jsonl(&corpus, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("\"aspect\":\"Clarity\""));
        assert_eq!(parse(&text).unwrap(), corpus);
    }

    #[test]
    fn plain_dir_loads_reviews_as_unlabeled() {
        let dir = tempfile::tempdir().unwrap();
        let paper = dir.path().join("P9");
        fs::create_dir(&paper).unwrap();
        fs::write(paper.join("paper.json"), r#"{"venue":"ICLR","year":2019,"title":"X"}"#).unwrap();
        fs::write(paper.join("a.txt"), "Good. Bad.").unwrap();
        fs::write(paper.join("b.txt"), "Fine").unwrap();
        let corpus = load_corpus(dir.path(), CorpusFormat::detect(dir.path())).unwrap();
        let p = corpus.paper("P9").unwrap();
        assert_eq!(p.reviews.len(), 2);
        assert_eq!(p.reviews[0].review_id, "P9/a");
        assert!(p.reviews.iter().all(|r| r.unlabeled));
        assert_eq!(p.year, 2019);
    }
}
