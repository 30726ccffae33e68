use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::types::{Corpus, GoldLabel, ReviewPairComment};
use super::CorpusError;

pub const ANNOTATION_HEADER: [&str; 8] = [
    "rpc_id",
    "paper_id",
    "title",
    "comment_a",
    "comment_b",
    "aspects",
    "label",
    "expert_label",
];

/// An annotation batch in memory: a file name and its CSV contents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationFile {
    pub name: String,
    pub contents: String,
}

impl AnnotationFile {
    pub fn read(path: &Path) -> Result<Self, CorpusError> {
        Ok(AnnotationFile {
            name: path.display().to_string(),
            contents: fs::read_to_string(path)?,
        })
    }
}

/// How RPCs are interleaved before chunking into batches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stratify {
    #[default]
    None,
    /// Balance batches over existing gold labels (unlabeled RPCs form their own stratum).
    GoldLabel,
    /// Balance single-aspect against multi-aspect RPCs.
    AspectCount,
}

impl Stratify {
    fn key(self, rpc: &ReviewPairComment) -> String {
        match self {
            Stratify::None => String::new(),
            Stratify::GoldLabel => rpc.gold_label.map(|g| g.token()).unwrap_or("").to_string(),
            Stratify::AspectCount => (rpc.shared_opposed_aspects.len() > 1).to_string(),
        }
    }
}

/// Shuffles `rpcs` with `seed`, interleaves the strata round-robin, and chunks
/// into CSV batches of `batch_size`. The label column carries any existing gold label.
pub fn export_annotation_batch(
    corpus: &Corpus,
    rpcs: &[ReviewPairComment],
    batch_size: usize,
    seed: u64,
    stratify: Stratify,
) -> Result<Vec<AnnotationFile>, CorpusError> {
    if batch_size == 0 {
        return Err(CorpusError::BadBatchSize);
    }
    if rpcs.is_empty() {
        return Err(CorpusError::EmptyInput);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut strata: BTreeMap<String, Vec<&ReviewPairComment>> = BTreeMap::new();
    for rpc in rpcs {
        strata.entry(stratify.key(rpc)).or_default().push(rpc);
    }
    let mut queues: Vec<std::vec::IntoIter<&ReviewPairComment>> = strata
        .into_values()
        .map(|mut items| {
            items.shuffle(&mut rng);
            items.into_iter()
        })
        .collect();
    let mut ordered = Vec::with_capacity(rpcs.len());
    while ordered.len() < rpcs.len() {
        for queue in queues.iter_mut() {
            if let Some(item) = queue.next() {
                ordered.push(item);
            }
        }
    }

    let comment_text: BTreeMap<&str, &str> = corpus
        .reviews()
        .flat_map(|r| r.comments.iter())
        .map(|c| (c.comment_id.as_str(), c.text.as_str()))
        .collect();
    let pair_paper: BTreeMap<&str, &str> = corpus
        .pairs
        .iter()
        .map(|p| (p.pair_id.as_str(), p.paper_id.as_str()))
        .collect();

    let mut files = Vec::new();
    for (index, chunk) in ordered.chunks(batch_size).enumerate() {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(ANNOTATION_HEADER)?;
        for rpc in chunk {
            let paper_id = pair_paper.get(rpc.pair_id.as_str()).copied().unwrap_or("");
            let title = corpus.paper(paper_id).map(|p| p.title.as_str()).unwrap_or("");
            let text = |id: &str| {
                comment_text
                    .get(id)
                    .copied()
                    .ok_or_else(|| CorpusError::Inconsistent(format!("unknown comment {id}")))
            };
            let aspects: Vec<&str> = rpc.shared_opposed_aspects.iter().map(|a| a.as_str()).collect();
            writer.write_record([
                rpc.rpc_id.as_str(),
                paper_id,
                title,
                text(&rpc.comment_a_id)?,
                text(&rpc.comment_b_id)?,
                &aspects.join(";"),
                rpc.gold_label.map(GoldLabel::token).unwrap_or(""),
                "",
            ])?;
        }
        let contents = String::from_utf8(
            writer
                .into_inner()
                .map_err(|e| CorpusError::Io(e.into_error()))?,
        )
        .expect("csv output is utf-8");
        files.push(AnnotationFile {
            name: format!("batch_{index:04}.csv"),
            contents,
        });
    }
    Ok(files)
}

/// Writes batches into `dir`, returning the written paths.
pub fn write_annotation_batches(files: &[AnnotationFile], dir: &Path) -> Result<Vec<PathBuf>, CorpusError> {
    fs::create_dir_all(dir)?;
    files
        .iter()
        .map(|f| {
            let path = dir.join(&f.name);
            fs::write(&path, &f.contents)?;
            Ok(path)
        })
        .collect()
}

#[derive(Debug, Default)]
struct Votes {
    annotators: Vec<(String, GoldLabel)>,
    experts: Vec<(String, GoldLabel)>,
}

fn parse_token(token: &str, file: &str, row: usize) -> Result<Option<GoldLabel>, CorpusError> {
    if token.is_empty() {
        return Ok(None);
    }
    GoldLabel::from_token(token)
        .map(Some)
        .ok_or_else(|| CorpusError::BadLabelToken {
            file: file.to_string(),
            row,
            token: token.to_string(),
        })
}

/// Per-file annotator labels, keyed by file name then rpc id. Expert overrides are ignored.
pub fn annotator_labels(
    files: &[AnnotationFile],
) -> Result<BTreeMap<String, BTreeMap<String, GoldLabel>>, CorpusError> {
    let mut out = BTreeMap::new();
    for file in files {
        let mut labels = BTreeMap::new();
        for row in read_rows(file)? {
            if let Some(label) = row.label {
                labels.insert(row.rpc_id, label);
            }
        }
        out.insert(file.name.clone(), labels);
    }
    Ok(out)
}

struct Row {
    rpc_id: String,
    label: Option<GoldLabel>,
    expert: Option<GoldLabel>,
}

fn read_rows(file: &AnnotationFile) -> Result<Vec<Row>, CorpusError> {
    let mut reader = csv::Reader::from_reader(file.contents.as_bytes());
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| CorpusError::MalformedRecord {
            line: 1,
            reason: format!("{}: missing column {name}", file.name),
        })
    };
    let (id_col, label_col) = (column("rpc_id")?, column("label")?);
    let expert_col = headers.iter().position(|h| h == "expert_label");
    let mut rows = Vec::new();
    for (index, record) in reader.records().enumerate() {
        let record = record?;
        let row_no = index + 2;
        let field = |col: usize| record.get(col).unwrap_or("").trim();
        rows.push(Row {
            rpc_id: field(id_col).to_string(),
            label: parse_token(field(label_col), &file.name, row_no)?,
            expert: match expert_col {
                Some(col) => parse_token(field(col), &file.name, row_no)?,
                None => None,
            },
        });
    }
    Ok(rows)
}

/// Applies annotation files to a copy of `corpus`. Expert labels override annotators;
/// disagreement without an override is an error.
pub fn import_annotations(corpus: &Corpus, files: &[AnnotationFile]) -> Result<Corpus, CorpusError> {
    let index: BTreeMap<&str, usize> = corpus
        .rpcs
        .iter()
        .enumerate()
        .map(|(i, r)| (r.rpc_id.as_str(), i))
        .collect();
    let mut votes: BTreeMap<String, Votes> = BTreeMap::new();
    for file in files {
        for row in read_rows(file)? {
            if !index.contains_key(row.rpc_id.as_str()) {
                return Err(CorpusError::UnknownRpcId(row.rpc_id));
            }
            let entry = votes.entry(row.rpc_id).or_default();
            if let Some(label) = row.label {
                entry.annotators.push((file.name.clone(), label));
            }
            if let Some(label) = row.expert {
                entry.experts.push((file.name.clone(), label));
            }
        }
    }
    let mut updated = corpus.clone();
    for (rpc_id, votes) in votes {
        let decisive = if votes.experts.is_empty() {
            &votes.annotators
        } else {
            &votes.experts
        };
        let Some((_, first)) = decisive.first() else {
            continue;
        };
        if let Some((_, other)) = decisive.iter().find(|(_, l)| l != first) {
            return Err(CorpusError::ConflictingLabels {
                rpc_id,
                first: first.token().to_string(),
                second: other.token().to_string(),
            });
        }
        updated.rpcs[index[rpc_id.as_str()]].gold_label = Some(*first);
    }
    Ok(updated)
}
