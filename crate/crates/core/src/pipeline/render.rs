use std::fmt::Write;

use html_escape::encode_text;

use super::{ContradictionFinding, FindingComment, PaperReport};
use crate::corpus::Paper;
use crate::metrics::Verdict;

/// Characters of surrounding review text shown on each side of a highlighted comment.
const CONTEXT_CHARS: usize = 160;

const STYLE: &str = "body{font-family:sans-serif;max-width:60em;margin:2em auto;color:#222}\
table{border-collapse:collapse}td,th{border:1px solid #ccc;padding:.2em .6em}\
.finding{border:1px solid #ddd;border-radius:4px;padding:.6em 1em;margin:1em 0}\
.side{margin:.4em 0}.ctx{color:#666}mark{background:#ffe38a}\
.prob{font-weight:bold}details{margin-top:2em}";

/// The comment highlighted inside a window of its review's raw text.
fn highlighted(comment: &FindingComment, paper: Option<&Paper>) -> String {
    let raw = paper
        .and_then(|p| p.reviews.iter().find(|r| r.review_id == comment.review_id))
        .map(|r| r.raw_text.as_str());
    let mark = format!("<mark>{}</mark>", encode_text(&comment.text));
    let Some(raw) = raw else { return mark };
    let chars: Vec<char> = raw.chars().collect();
    let (start, end) = (comment.span.start.min(chars.len()), comment.span.end.min(chars.len()));
    if start > end {
        return mark;
    }
    let before: String = chars[start.saturating_sub(CONTEXT_CHARS)..start].iter().collect();
    let after: String = chars[end..(end + CONTEXT_CHARS).min(chars.len())].iter().collect();
    let lead = if start > CONTEXT_CHARS { "…" } else { "" };
    let tail = if end + CONTEXT_CHARS < chars.len() { "…" } else { "" };
    format!(
        "<span class=\"ctx\">{lead}{}</span>{mark}<span class=\"ctx\">{}{tail}</span>",
        encode_text(&before),
        encode_text(&after)
    )
}

fn finding_html(out: &mut String, f: &ContradictionFinding, paper: Option<&Paper>) {
    let aspects: Vec<&str> = f.opposed_aspects.iter().map(|a| a.as_str()).collect();
    let _ = writeln!(
        out,
        "<div class=\"finding\"><div><span class=\"prob\">{:.3}</span> {} &middot; {} &middot; pair {}</div>\
<div class=\"side\"><b>{}</b>: {}</div><div class=\"side\"><b>{}</b>: {}</div></div>",
        f.probability,
        f.label,
        encode_text(&aspects.join(", ")),
        encode_text(&f.pair_id),
        encode_text(&f.comment_a.review_id),
        highlighted(&f.comment_a, paper),
        encode_text(&f.comment_b.review_id),
        highlighted(&f.comment_b, paper),
    );
}

/// Standalone HTML page. Findings below the decision threshold sit in a
/// collapsed section. Pass the paper to show each comment in its review context.
pub fn render_html(report: &PaperReport, paper: Option<&Paper>) -> String {
    let mut out = String::new();
    let title = format!("Reviewer disagreements for {}", report.paper_id);
    let _ = write!(
        out,
        "<!DOCTYPE html>\n<html lang=\"en\"><head><meta charset=\"utf-8\"><title>{0}</title><style>{STYLE}</style></head><body>\n<h1>{0}</h1>\n",
        encode_text(&title)
    );
    if let Some(p) = paper {
        let _ = writeln!(out, "<p><i>{}</i></p>", encode_text(&p.title));
    }
    let _ = writeln!(
        out,
        "<p>Generated {} &middot; decision threshold {} &middot; {} review pairs</p>",
        report.generated_at.to_rfc3339(),
        report.manifest.thresholds.decision,
        report.pairs.len()
    );
    out.push_str("<table><tr><th>Aspect</th><th>Candidates</th><th>Contradictions</th></tr>\n");
    for (aspect, c) in &report.aspect_counts {
        let _ = writeln!(out, "<tr><td>{aspect}</td><td>{}</td><td>{}</td></tr>", c.findings, c.contradictions);
    }
    out.push_str("</table>\n<h2>Likely contradictions</h2>\n");
    let (shown, hidden): (Vec<_>, Vec<_>) = report.findings.iter().partition(|f| f.label == Verdict::Contradiction);
    if shown.is_empty() {
        out.push_str("<p>None found.</p>\n");
    }
    for f in shown {
        finding_html(&mut out, f, paper);
    }
    if !hidden.is_empty() {
        let _ = writeln!(out, "<details><summary>{} candidate(s) below threshold</summary>", hidden.len());
        for f in hidden {
            finding_html(&mut out, f, paper);
        }
        out.push_str("</details>\n");
    }
    out.push_str("</body></html>\n");
    out
}

/// Plain-text listing of findings at or above the decision threshold.
pub fn render_text(report: &PaperReport) -> String {
    let mut out = format!(
        "{}: {} candidate(s), {} contradiction(s) over {} review pair(s)\n",
        report.paper_id,
        report.findings.len(),
        report.contradictions().count(),
        report.pairs.len()
    );
    for f in report.contradictions() {
        let aspects: Vec<&str> = f.opposed_aspects.iter().map(|a| a.as_str()).collect();
        let _ = write!(
            out,
            "\n[{:.3}] {} ({})\n  {}: {}\n  {}: {}\n",
            f.probability,
            f.pair_id,
            aspects.join(", "),
            f.comment_a.review_id,
            f.comment_a.text,
            f.comment_b.review_id,
            f.comment_b.text
        );
    }
    out
}
