//! Segmenter against hand-split reviews. Each fixture lists its sentences as a human
//! annotator split them; the review text is those sentences joined by the separator.

use revcon::corpus::segment_review;

struct Fixture {
    separator: &'static str,
    sentences: &'static [&'static str],
}

const FIXTURES: &[Fixture] = &[
    Fixture {
        separator: " ",
        sentences: &[
            "The paper proposes a new regularizer for GANs.",
            "As noted by Miyato et al. in their work, spectral normalization already addresses this.",
            "The comparison in Fig. 2 is therefore not convincing.",
        ],
    },
    Fixture {
        separator: " ",
        sentences: &[
            "The method is evaluated on CIFAR-10 and ImageNet.",
            "Results in Table 3 show a 0.5% improvement, i.e. within noise.",
            "I would like to see error bars.",
        ],
    },
    Fixture {
        separator: " ",
        sentences: &[
            "Overall feedback: I found the paper to be well motivated and the proposed approach to be interesting.",
        ],
    },
    Fixture {
        separator: " ",
        sentences: &[
            "The motivation of using the method for a very small improvement is not convincing.",
            "Why not simply tune the baseline?",
        ],
    },
    Fixture {
        separator: " ",
        sentences: &[
            "Eq. 4 seems to be missing a normalization term.",
            "Could the authors clarify Sec. 3.2 and App. B?",
            "Otherwise the derivation looks correct!",
        ],
    },
    Fixture {
        separator: "\n\n",
        sentences: &[
            "Summary: the authors study label noise in NLI.",
            "Strengths: clear writing, strong baselines (e.g. RoBERTa, XLNet).",
            "Weaknesses: limited novelty.",
        ],
    },
    Fixture {
        separator: "\n",
        sentences: &[
            "Minor comments:",
            "- typo in the abstract",
            "- Fig. 5 axis labels are unreadable",
            "- cite Vaswani et al. for the transformer",
        ],
    },
    Fixture {
        separator: " ",
        sentences: &[
            "However, the results are a visible improvement over JPEG 2000 and I don't know of any other learned encoding which has been shown to achieve this level of performance.",
            "This is a strong paper.",
        ],
    },
    Fixture {
        separator: " ",
        sentences: &[
            "The comparison to JPEG2000 is unfortunately not that interesting since that codec does not have widespread usage and likely never will.",
            "A comparison with WebP would be more relevant.",
        ],
    },
    Fixture {
        separator: " ",
        sentences: &[
            "The bound holds w.r.t. the empirical measure only.",
            "The i.i.d. assumption in Thm. 1 is strong.",
            "Does it hold for Markov chains?",
        ],
    },
    Fixture {
        separator: " ",
        sentences: &[
            "The argument of biological plausibility is not justified.",
            "Moreover the biological plausibility that is used as an argument at several places seems to be false advertising in my view.",
        ],
    },
    Fixture {
        separator: " ",
        sentences: &[
            "1. The notation in Alg. 1 differs from the text.",
            "2. The learning rate schedule is not given.",
            "3. Code is not released.",
        ],
    },
    Fixture {
        separator: " ",
        sentences: &[
            "This paper is not well-written.",
            "The results are reasonable and significant.",
        ],
    },
    Fixture {
        separator: " ",
        sentences: &[
            "The experiments follow Dr. Hinton's protocol closely, cf. the original paper.",
            "That said, the ablations (see Tab. 4) are thin.",
        ],
    },
    Fixture {
        separator: " ",
        sentences: &[
            "The work is original.",
            "The extension to the partially observable setting is interesting as the proposed form finds a common denominator to multiple estimators, but its underlying idea is not novel.",
        ],
    },
    Fixture {
        separator: " ",
        sentences: &[
            "The authors claim \"state of the art.\"",
            "I disagree, given the results of Zhang et al. (2019) on the same benchmark.",
        ],
    },
    Fixture {
        separator: " ",
        sentences: &[
            "While it is very interesting to apply adversarial noise in real data, this approach is not clearly motivated or explained.",
            "In overall, I liked its clear motivation and the simplicity of the method.",
        ],
    },
    Fixture {
        separator: " ",
        sentences: &[
            "The model reaches 93.4 accuracy vs. 92.1 for the baseline.",
            "Is this difference significant?",
            "Please report std. dev. over seeds.",
        ],
    },
    Fixture {
        separator: "\n\n",
        sentences: &[
            "Pros",
            "The idea is simple and the paper is easy to follow.",
            "Cons",
            "Experiments are limited to toy data, e.g. MNIST and its variants.",
        ],
    },
    Fixture {
        separator: " ",
        sentences: &[
            "This is an elegant intuitive algorithm that, to my knowledge, has not appeared in previous literature.",
            "The proofs in the appendix look correct to me...",
            "I recommend acceptance.",
        ],
    },
];

#[test]
fn twenty_fixture_reviews_match_manual_sentence_counts() {
    assert_eq!(FIXTURES.len(), 20);
    let mut mismatches = Vec::new();
    for (i, fixture) in FIXTURES.iter().enumerate() {
        let raw = fixture.sentences.join(fixture.separator);
        let got: Vec<String> = segment_review(&raw)
            .unwrap()
            .into_iter()
            .map(|c| c.text)
            .collect();
        let expected: Vec<String> = fixture.sentences.iter().map(|s| s.to_string()).collect();
        if got != expected {
            mismatches.push(format!("fixture {i}: expected {expected:#?}\n got {got:#?}"));
        }
    }
    assert!(mismatches.is_empty(), "{}", mismatches.join("\n"));
}
