use std::collections::BTreeMap;

use serde::Serialize;

use super::types::{AspectCategory, Corpus, GoldLabel, Venue, WeakLabel};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct VenueStats {
    pub papers: usize,
    pub reviews: usize,
    /// `n(n-1)/2` summed over papers, whether or not pairs were materialised.
    pub pairs: usize,
    pub no_contradiction_pairs: usize,
    pub candidate_pairs: usize,
    pub rpcs: usize,
}

impl VenueStats {
    fn add(&mut self, other: &VenueStats) {
        self.papers += other.papers;
        self.reviews += other.reviews;
        self.pairs += other.pairs;
        self.no_contradiction_pairs += other.no_contradiction_pairs;
        self.candidate_pairs += other.candidate_pairs;
        self.rpcs += other.rpcs;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AspectLabelCounts {
    pub contradiction: usize,
    pub non_contradiction: usize,
    pub cannot_decide: usize,
    pub unlabeled: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StatsTable {
    pub venues: BTreeMap<String, VenueStats>,
    pub total: VenueStats,
    /// RPC counts per opposed aspect; an RPC opposing on two aspects counts under both.
    pub aspects: BTreeMap<AspectCategory, AspectLabelCounts>,
}

pub fn corpus_stats(corpus: &Corpus) -> StatsTable {
    let mut per_venue: BTreeMap<Venue, VenueStats> =
        Venue::ALL.iter().map(|v| (*v, VenueStats::default())).collect();
    let mut venue_of_paper = BTreeMap::new();
    for paper in corpus.papers.values() {
        venue_of_paper.insert(paper.paper_id.as_str(), paper.venue);
        let n = paper.reviews.len();
        let row = per_venue.entry(paper.venue).or_default();
        row.papers += 1;
        row.reviews += n;
        row.pairs += n * n.saturating_sub(1) / 2;
    }
    let mut venue_of_pair = BTreeMap::new();
    for pair in &corpus.pairs {
        let venue = venue_of_paper
            .get(pair.paper_id.as_str())
            .copied()
            .unwrap_or(Venue::Other);
        venue_of_pair.insert(pair.pair_id.as_str(), venue);
        let row = per_venue.entry(venue).or_default();
        match pair.weak_label {
            Some(WeakLabel::NoContradiction) => row.no_contradiction_pairs += 1,
            Some(WeakLabel::Candidate) => row.candidate_pairs += 1,
            None => {}
        }
    }
    let mut aspects: BTreeMap<AspectCategory, AspectLabelCounts> = AspectCategory::ALL
        .iter()
        .filter(|a| a.sentiment_bearing())
        .map(|a| (*a, AspectLabelCounts::default()))
        .collect();
    for rpc in &corpus.rpcs {
        let venue = venue_of_pair
            .get(rpc.pair_id.as_str())
            .copied()
            .unwrap_or(Venue::Other);
        per_venue.entry(venue).or_default().rpcs += 1;
        for aspect in &rpc.shared_opposed_aspects {
            let counts = aspects.entry(*aspect).or_default();
            match rpc.gold_label {
                Some(GoldLabel::Contradiction) => counts.contradiction += 1,
                Some(GoldLabel::NonContradiction) => counts.non_contradiction += 1,
                Some(GoldLabel::CannotDecide) => counts.cannot_decide += 1,
                None => counts.unlabeled += 1,
            }
        }
    }
    let mut total = VenueStats::default();
    for row in per_venue.values() {
        total.add(row);
    }
    StatsTable {
        venues: per_venue
            .into_iter()
            .map(|(v, s)| (v.as_str().to_string(), s))
            .collect(),
        total,
        aspects,
    }
}

impl StatsTable {
    /// Venue rows followed by the total, in the column order Papers, Reviews, Pairs.
    pub fn render_text(&self) -> String {
        let mut out = format!("{:<10}{:>10}{:>10}{:>10}\n", "Venue", "Papers", "Reviews", "Pairs");
        for (venue, row) in self.venues.iter().filter(|(_, r)| r.papers > 0) {
            out.push_str(&format!(
                "{:<10}{:>10}{:>10}{:>10}\n",
                venue, row.papers, row.reviews, row.pairs
            ));
        }
        out.push_str(&format!(
            "{:<10}{:>10}{:>10}{:>10}\n",
            "Total", self.total.papers, self.total.reviews, self.total.pairs
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_corpus_is_all_zeros() {
        let stats = corpus_stats(&Corpus::default());
        assert_eq!(stats.total, VenueStats::default());
        assert!(stats.venues.values().all(|v| *v == VenueStats::default()));
        assert!(stats.aspects.values().all(|c| *c == AspectLabelCounts::default()));
    }
}
