//! Topic assignment with latent Dirichlet allocation over title + abstract +
//! keywords + journal name, trained by collapsed Gibbs sampling with a
//! seeded deterministic sampler.

use std::sync::OnceLock;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fitted LDA state: topic count, vocabulary, document-topic distribution
/// theta, topic-word distribution phi, and the fit configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModelState {
    pub format_version: u32,
    pub k: usize,
    pub vocab: Vec<String>,
    pub doc_topic: Vec<Vec<f64>>,
    pub topic_word: Vec<Vec<f64>>,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub n_iterations: usize,
}

pub const STATE_FORMAT_VERSION: u32 = 1;

/// Tokenize raw text: emails removed first, then non-alphabetic characters
/// become spaces, everything lowercased, whitespace collapsed.
pub fn preprocess(text: &str) -> Vec<String> {
    static EMAIL: OnceLock<Regex> = OnceLock::new();
    let no_emails = EMAIL
        .get_or_init(|| Regex::new(r"\S+@\S+").unwrap())
        .replace_all(text, " ");
    let cleaned: String = no_emails
        .chars()
        .map(|c| if c.is_alphabetic() { c } else { ' ' })
        .collect();
    cleaned
        .to_lowercase()
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

/// Collapsed Gibbs sampling. Deterministic for a fixed
/// (corpus, k, alpha, beta, seed, iterations) tuple.
pub fn fit_lda(
    corpus: &[Vec<String>],
    k: usize,
    alpha: f64,
    beta: f64,
    seed: u64,
    iterations: usize,
) -> Result<TopicModelState> {
    if corpus.is_empty() {
        return Err(Error::InvalidInput("empty corpus".into()));
    }
    if k < 2 {
        return Err(Error::InvalidInput("topic count must be >= 2".into()));
    }
    if alpha <= 0.0 || beta <= 0.0 {
        return Err(Error::InvalidInput("alpha and beta must be positive".into()));
    }
    if iterations < 1 {
        return Err(Error::InvalidInput("need at least one iteration".into()));
    }

    // vocabulary in first-occurrence order
    let mut vocab: Vec<String> = Vec::new();
    let mut index: std::collections::HashMap<&str, usize> = std::collections::HashMap::new();
    for doc in corpus {
        for tok in doc {
            if !index.contains_key(tok.as_str()) {
                index.insert(tok.as_str(), vocab.len());
                vocab.push(tok.clone());
            }
        }
    }
    let v = vocab.len();
    if v == 0 {
        return Err(Error::InvalidInput(
            "vocabulary is empty after preprocessing".into(),
        ));
    }

    let docs: Vec<Vec<usize>> = corpus
        .iter()
        .map(|doc| doc.iter().map(|t| index[t.as_str()]).collect())
        .collect();
    let total_tokens: usize = docs.iter().map(|d| d.len()).sum();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut n_dk = vec![vec![0usize; k]; docs.len()];
    let mut n_kw = vec![vec![0usize; v]; k];
    let mut n_k = vec![0usize; k];
    let mut assignment: Vec<Vec<usize>> = docs
        .iter()
        .enumerate()
        .map(|(d, doc)| {
            doc.iter()
                .map(|&w| {
                    let z = rng.random_range(0..k);
                    n_dk[d][z] += 1;
                    n_kw[z][w] += 1;
                    n_k[z] += 1;
                    z
                })
                .collect()
        })
        .collect();

    let vb = v as f64 * beta;
    let mut weights = vec![0.0; k];
    for _sweep in 0..iterations {
        for (d, doc) in docs.iter().enumerate() {
            for (i, &w) in doc.iter().enumerate() {
                let old = assignment[d][i];
                n_dk[d][old] -= 1;
                n_kw[old][w] -= 1;
                n_k[old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    let wgt = (n_dk[d][t] as f64 + alpha) * (n_kw[t][w] as f64 + beta)
                        / (n_k[t] as f64 + vb);
                    weights[t] = wgt;
                    total += wgt;
                }
                let u: f64 = rng.random::<f64>() * total;
                let mut acc = 0.0;
                let mut new = k - 1;
                for (t, &wgt) in weights.iter().enumerate() {
                    acc += wgt;
                    if u < acc {
                        new = t;
                        break;
                    }
                }
                assignment[d][i] = new;
                n_dk[d][new] += 1;
                n_kw[new][w] += 1;
                n_k[new] += 1;
            }
        }
        debug_assert_eq!(n_k.iter().sum::<usize>(), total_tokens, "token conservation");
    }

    let doc_topic: Vec<Vec<f64>> = n_dk
        .iter()
        .zip(&docs)
        .map(|(counts, doc)| {
            let nd = doc.len() as f64;
            counts
                .iter()
                .map(|&c| (c as f64 + alpha) / (nd + k as f64 * alpha))
                .collect()
        })
        .collect();
    let topic_word: Vec<Vec<f64>> = n_kw
        .iter()
        .zip(&n_k)
        .map(|(counts, &nk)| {
            counts
                .iter()
                .map(|&c| (c as f64 + beta) / (nk as f64 + vb))
                .collect()
        })
        .collect();

    Ok(TopicModelState {
        format_version: STATE_FORMAT_VERSION,
        k,
        vocab,
        doc_topic,
        topic_word,
        alpha,
        beta,
        seed,
        n_iterations: iterations,
    })
}

/// UMass coherence averaged over topics: per topic, sum over top-word pairs
/// i < j of ln((D(w_i, w_j) + 1) / D(w_j)) with document frequencies from
/// `corpus`. Words with zero document frequency are excluded from pairs.
pub fn coherence(state: &TopicModelState, corpus: &[Vec<String>], top_m: usize) -> Result<f64> {
    if top_m < 2 {
        return Err(Error::InvalidInput("top_m must be >= 2".into()));
    }
    let doc_sets: Vec<std::collections::HashSet<&str>> = corpus
        .iter()
        .map(|doc| doc.iter().map(String::as_str).collect())
        .collect();
    let doc_freq = |w: &str| doc_sets.iter().filter(|s| s.contains(w)).count();
    let co_freq = |a: &str, b: &str| {
        doc_sets
            .iter()
            .filter(|s| s.contains(a) && s.contains(b))
            .count()
    };

    let mut total = 0.0;
    for topic in 0..state.k {
        let words = top_words(state, topic, top_m)?;
        let mut score = 0.0;
        for i in 0..words.len() {
            for j in (i + 1)..words.len() {
                let dj = doc_freq(&words[j]);
                if dj == 0 {
                    continue;
                }
                let dij = co_freq(&words[i], &words[j]);
                score += ((dij as f64 + 1.0) / dj as f64).ln();
            }
        }
        total += score;
    }
    Ok(total / state.k as f64)
}

/// Highest-probability topic for a document; ties break to the lowest id.
pub fn assign_topic(state: &TopicModelState, doc_index: usize) -> Result<usize> {
    let row = state
        .doc_topic
        .get(doc_index)
        .ok_or_else(|| Error::InvalidInput(format!("doc index {doc_index} out of range")))?;
    let mut best = 0;
    for (t, &p) in row.iter().enumerate() {
        if p > row[best] {
            best = t;
        }
    }
    Ok(best)
}

/// Top-n words of a topic by phi, ties by vocabulary order; truncates at the
/// vocabulary size.
pub fn top_words(state: &TopicModelState, topic: usize, n: usize) -> Result<Vec<String>> {
    let row = state
        .topic_word
        .get(topic)
        .ok_or_else(|| Error::InvalidInput(format!("topic {topic} out of range")))?;
    if n == 0 {
        return Err(Error::InvalidInput("top_words needs n >= 1".into()));
    }
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[b].partial_cmp(&row[a]).unwrap().then(a.cmp(&b)));
    Ok(order
        .into_iter()
        .take(n)
        .map(|i| state.vocab[i].clone())
        .collect())
}

/// Relabel topics: new topic t is old topic perm[t]. Theta columns and phi
/// rows move together.
pub fn permute_topics(state: &TopicModelState, perm: &[usize]) -> Result<TopicModelState> {
    if perm.len() != state.k {
        return Err(Error::InvalidInput("permutation length != k".into()));
    }
    let mut seen = vec![false; state.k];
    for &p in perm {
        if p >= state.k || seen[p] {
            return Err(Error::InvalidInput("not a permutation".into()));
        }
        seen[p] = true;
    }
    let mut out = state.clone();
    out.topic_word = perm.iter().map(|&p| state.topic_word[p].clone()).collect();
    out.doc_topic = state
        .doc_topic
        .iter()
        .map(|row| perm.iter().map(|&p| row[p]).collect())
        .collect();
    Ok(out)
}

/// The document text handed to LDA: title + abstract + keywords + journal.
pub fn topic_document(record: &crate::ingest::ArticleRecord) -> String {
    format!(
        "{} {} {} {}",
        record.title,
        record.abstract_text,
        record.keywords,
        record.journal.as_str()
    )
}

pub fn save_state(state: &TopicModelState, path: &std::path::Path) -> Result<()> {
    let text = serde_json::to_string_pretty(state)
        .map_err(|e| Error::InvalidInput(format!("serialize model state: {e}")))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_state(path: &std::path::Path) -> Result<TopicModelState> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let state: TopicModelState = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidInput(format!("model state parse: {e}")))?;
    if state.format_version != STATE_FORMAT_VERSION {
        return Err(Error::InvalidInput(format!(
            "unsupported model state version {}",
            state.format_version
        )));
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tokens(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn preprocess_rules() {
        assert_eq!(
            preprocess("Traffic Flow!! contact a@b.com"),
            tokens(&["traffic", "flow", "contact"])
        );
        assert_eq!(preprocess(""), Vec::<String>::new());
        // digits stripped, year token vanishes
        assert_eq!(preprocess("CO2 emissions 2024"), tokens(&["co", "emissions"]));
        assert_eq!(preprocess("  many   spaces "), tokens(&["many", "spaces"]));
    }

    fn planted_corpus(seed: u64) -> (Vec<Vec<String>>, Vec<usize>) {
        // two disjoint uniform topics over 10 words each, 50 docs, 60 tokens
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut corpus = Vec::new();
        let mut truth = Vec::new();
        for d in 0..50 {
            let topic = d % 2;
            truth.push(topic);
            let doc: Vec<String> = (0..60)
                .map(|_| {
                    let w = rng.random_range(0..10) + topic * 10;
                    format!("w{w}")
                })
                .collect();
            corpus.push(doc);
        }
        (corpus, truth)
    }

    fn cosine(a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        dot / (na * nb)
    }

    fn truth_phi(state: &TopicModelState, topic: usize) -> Vec<f64> {
        // uniform over that topic's 10 planted words, in fitted vocab order
        state
            .vocab
            .iter()
            .map(|w| {
                let idx: usize = w[1..].parse().unwrap();
                if idx / 10 == topic {
                    0.1
                } else {
                    0.0
                }
            })
            .collect()
    }

    #[test]
    fn recovers_planted_disjoint_topics() {
        let (corpus, truth) = planted_corpus(99);
        let state = fit_lda(&corpus, 2, 0.1, 0.01, 7, 200).unwrap();
        // greedy match fitted topics to planted ones by cosine
        let sims: Vec<Vec<f64>> = (0..2)
            .map(|t| {
                (0..2)
                    .map(|p| cosine(&state.topic_word[t], &truth_phi(&state, p)))
                    .collect()
            })
            .collect();
        let (m0, m1) = if sims[0][0] + sims[1][1] >= sims[0][1] + sims[1][0] {
            (0, 1)
        } else {
            (1, 0)
        };
        assert!(sims[0][m0] > 0.9, "topic 0 similarity {}", sims[0][m0]);
        assert!(sims[1][m1] > 0.9, "topic 1 similarity {}", sims[1][m1]);
        // documents generated from planted topic land on the matched topic
        let matched = [m0, m1];
        let mut hits = 0;
        for (d, &t) in truth.iter().enumerate() {
            let assigned = assign_topic(&state, d).unwrap();
            if matched.iter().position(|&m| m == t).map(|i| i) == Some(assigned) {
                hits += 1;
            }
        }
        assert!(hits >= 48, "only {hits}/50 docs assigned to planted topic");
    }

    #[test]
    fn simplex_invariants_hold() {
        let (corpus, _) = planted_corpus(3);
        let state = fit_lda(&corpus, 3, 0.5, 0.01, 21, 30).unwrap();
        for row in &state.doc_topic {
            let s: f64 = row.iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|&p| p >= 0.0));
        }
        for row in &state.topic_word {
            let s: f64 = row.iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let (corpus, _) = planted_corpus(5);
        let a = fit_lda(&corpus, 4, 0.3, 0.01, 1234, 25).unwrap();
        let b = fit_lda(&corpus, 4, 0.3, 0.01, 1234, 25).unwrap();
        assert_eq!(a, b);
        let c = fit_lda(&corpus, 4, 0.3, 0.01, 1235, 25).unwrap();
        assert_ne!(a.doc_topic, c.doc_topic);
    }

    #[test]
    fn degenerate_single_word_document() {
        // with one word the topic-word term is uninformative and the
        // doc-topic urn must absorb; a small alpha makes absorption sticky
        let corpus = vec![vec!["only".to_string(); 200]];
        let state = fit_lda(&corpus, 2, 0.01, 0.01, 11, 500).unwrap();
        let assigned = assign_topic(&state, 0).unwrap();
        assert!(
            state.doc_topic[0][assigned] > 0.99,
            "mass {}",
            state.doc_topic[0][assigned]
        );
    }

    #[test]
    fn assign_topic_argmax_and_ties() {
        let mut state = fit_lda(&[tokens(&["a", "b"])], 3, 0.1, 0.1, 1, 1).unwrap();
        state.doc_topic = vec![vec![0.1, 0.7, 0.2], vec![0.5, 0.5, 0.0]];
        assert_eq!(assign_topic(&state, 0).unwrap(), 1);
        assert_eq!(assign_topic(&state, 1).unwrap(), 0, "tie breaks low");
        assert!(assign_topic(&state, 9).is_err());
    }

    #[test]
    fn top_words_ordering_and_truncation() {
        let mut state = fit_lda(&[tokens(&["a", "b", "c"])], 2, 0.1, 0.1, 1, 1).unwrap();
        state.vocab = vec!["a".into(), "b".into(), "c".into()];
        state.topic_word = vec![vec![0.2, 0.6, 0.2], vec![0.4, 0.4, 0.2]];
        assert_eq!(top_words(&state, 0, 1).unwrap(), vec!["b".to_string()]);
        // tie between a and b resolves by vocabulary order
        assert_eq!(
            top_words(&state, 1, 2).unwrap(),
            vec!["a".to_string(), "b".to_string()]
        );
        // n beyond vocab truncates
        assert_eq!(top_words(&state, 0, 13).unwrap().len(), 3);
    }

    #[test]
    fn coherence_hand_computed() {
        // 3 docs; co-occurrence counts enumerated by hand
        let corpus = vec![
            tokens(&["x", "y"]),
            tokens(&["x", "y"]),
            tokens(&["x", "z"]),
        ];
        let mut state = fit_lda(&corpus, 2, 0.1, 0.1, 1, 1).unwrap();
        state.vocab = vec!["x".into(), "y".into(), "z".into()];
        // both topics rank x then y: D(x,y) = 2, D(y) = 2
        state.topic_word = vec![vec![0.6, 0.3, 0.1], vec![0.5, 0.4, 0.1]];
        let got = coherence(&state, &corpus, 2).unwrap();
        let want = ((2.0 + 1.0) / 2.0f64).ln(); // identical per-topic scores
        assert!((got - want).abs() < 1e-12);

        // pair occurring in every document: ln((D+1)/D)
        let corpus2 = vec![tokens(&["x", "y"]); 4];
        let got2 = coherence(&state, &corpus2, 2).unwrap();
        assert!((got2 - (5.0f64 / 4.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn coherence_skips_zero_frequency_words() {
        let corpus = vec![tokens(&["x", "y"])];
        let mut state = fit_lda(&corpus, 2, 0.1, 0.1, 1, 1).unwrap();
        state.vocab = vec!["x".into(), "y".into(), "ghost".into()];
        state.topic_word = vec![vec![0.5, 0.1, 0.4], vec![0.5, 0.1, 0.4]];
        // top 2 are x and ghost; D(ghost) = 0 so the pair is dropped
        let got = coherence(&state, &corpus, 2).unwrap();
        assert_eq!(got, 0.0);
    }

    #[test]
    fn label_permutation_equivariance() {
        let (corpus, _) = planted_corpus(17);
        let state = fit_lda(&corpus, 3, 0.2, 0.01, 55, 20).unwrap();
        let perm = vec![2, 0, 1];
        let permuted = permute_topics(&state, &perm).unwrap();
        for d in 0..corpus.len() {
            // theta columns move with the permutation
            for t in 0..3 {
                assert_eq!(permuted.doc_topic[d][t], state.doc_topic[d][perm[t]]);
            }
            // assigned topic keeps its probability mass (ties may relabel)
            let orig = assign_topic(&state, d).unwrap();
            let new = assign_topic(&permuted, d).unwrap();
            assert_eq!(permuted.doc_topic[d][new], state.doc_topic[d][orig]);
        }
        for t in 0..3 {
            assert_eq!(permuted.topic_word[t], state.topic_word[perm[t]]);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(fit_lda(&[], 2, 0.1, 0.1, 1, 10).is_err());
        assert!(fit_lda(&[tokens(&["a"])], 1, 0.1, 0.1, 1, 10).is_err());
        assert!(fit_lda(&[tokens(&["a"])], 2, 0.0, 0.1, 1, 10).is_err());
        assert!(fit_lda(&[tokens(&["a"])], 2, 0.1, 0.1, 1, 0).is_err());
        assert!(fit_lda(&[vec![]], 2, 0.1, 0.1, 1, 5).is_err(), "empty vocab");
        assert!(coherence(&fit_lda(&[tokens(&["a"])], 2, 0.1, 0.1, 1, 1).unwrap(), &[], 1).is_err());
    }

    #[test]
    fn state_roundtrip() {
        let (corpus, _) = planted_corpus(1);
        let state = fit_lda(&corpus, 2, 0.1, 0.01, 9, 10).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.json");
        save_state(&state, &path).unwrap();
        assert_eq!(load_state(&path).unwrap(), state);
    }
}
