//! Latent Dirichlet allocation by collapsed Gibbs sampling.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CountMatrix, Vocabulary};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct LdaConfig {
    pub k: usize,
    /// Symmetric document-topic prior; `None` means `50 / k`.
    pub hyper_alpha: Option<f64>,
    pub hyper_beta: f64,
    pub sweeps: usize,
    pub seed: u64,
}

impl Default for LdaConfig {
    fn default() -> Self {
        Self { k: 100, hyper_alpha: None, hyper_beta: 0.01, sweeps: 200, seed: 0 }
    }
}

impl LdaConfig {
    pub fn alpha(&self) -> f64 {
        self.hyper_alpha.unwrap_or(50.0 / self.k as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    pub k: usize,
    pub hyper_alpha: f64,
    pub hyper_beta: f64,
    pub seed: u64,
    pub sweeps: usize,
    pub vocabulary: Vocabulary,
    /// Episode ids of the rows of `theta`. Documents with no in-vocabulary
    /// tokens are absent.
    pub doc_ids: Vec<String>,
    /// k x V topic-word probabilities.
    pub phi: Vec<Vec<f64>>,
    /// D x k document-topic proportions.
    pub theta: Vec<Vec<f64>>,
}

impl TopicModel {
    pub fn n_terms(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let mut m: TopicModel = serde_json::from_str(s)?;
        m.vocabulary.rebuild_index();
        Ok(m)
    }
}

/// Samples an index proportionally to `weights` given their total.
fn sample_index(weights: &[f64], total: f64, rng: &mut ChaCha8Rng) -> usize {
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        u -= w;
        if u < 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

fn expand(row: &[(usize, u32)]) -> Vec<usize> {
    row.iter().flat_map(|&(t, c)| std::iter::repeat_n(t, c as usize)).collect()
}

pub fn fit_lda(counts: &CountMatrix, config: &LdaConfig) -> Result<TopicModel> {
    let k = config.k;
    let v = counts.n_terms();
    if k == 0 {
        return Err(Error::Invalid("k must be at least 1".into()));
    }
    if config.sweeps == 0 {
        return Err(Error::Invalid("sweeps must be at least 1".into()));
    }
    if k > v {
        return Err(Error::Invalid(format!("k = {k} exceeds the {v} distinct terms")));
    }
    let alpha = config.alpha();
    let beta = config.hyper_beta;
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::Invalid("hyperparameters must be positive".into()));
    }

    let mut doc_ids = Vec::new();
    let mut docs = Vec::new();
    for (id, row) in counts.rows.iter().zip(&counts.counts) {
        let toks = expand(row);
        if toks.is_empty() {
            log::warn!("episode {id} has no in-vocabulary tokens; excluded from theta");
            continue;
        }
        doc_ids.push(id.clone());
        docs.push(toks);
    }
    if docs.is_empty() {
        return Err(Error::InsufficientData("every document is empty".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut n_dk = vec![vec![0u32; k]; docs.len()];
    let mut n_kw = vec![vec![0u32; v]; k];
    let mut n_k = vec![0u64; k];
    let mut z: Vec<Vec<usize>> = docs
        .iter()
        .enumerate()
        .map(|(d, toks)| {
            toks.iter()
                .map(|&w| {
                    let t = rng.random_range(0..k);
                    n_dk[d][t] += 1;
                    n_kw[t][w] += 1;
                    n_k[t] += 1;
                    t
                })
                .collect()
        })
        .collect();

    let v_beta = v as f64 * beta;
    let mut weights = vec![0.0; k];
    for _ in 0..config.sweeps {
        for (d, toks) in docs.iter().enumerate() {
            for (i, &w) in toks.iter().enumerate() {
                let old = z[d][i];
                n_dk[d][old] -= 1;
                n_kw[old][w] -= 1;
                n_k[old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    let p = (n_dk[d][t] as f64 + alpha) * (n_kw[t][w] as f64 + beta)
                        / (n_k[t] as f64 + v_beta);
                    weights[t] = p;
                    total += p;
                }
                let new = sample_index(&weights, total, &mut rng);
                z[d][i] = new;
                n_dk[d][new] += 1;
                n_kw[new][w] += 1;
                n_k[new] += 1;
            }
        }
    }

    let phi = (0..k)
        .map(|t| {
            let denom = n_k[t] as f64 + v_beta;
            n_kw[t].iter().map(|&c| (c as f64 + beta) / denom).collect()
        })
        .collect();
    let k_alpha = k as f64 * alpha;
    let theta = docs
        .iter()
        .enumerate()
        .map(|(d, toks)| {
            let denom = toks.len() as f64 + k_alpha;
            n_dk[d].iter().map(|&c| (c as f64 + alpha) / denom).collect()
        })
        .collect();

    Ok(TopicModel {
        k,
        hyper_alpha: alpha,
        hyper_beta: beta,
        seed: config.seed,
        sweeps: config.sweeps,
        vocabulary: counts.vocabulary.clone(),
        doc_ids,
        phi,
        theta,
    })
}

/// The `n` highest-weighted terms of a topic, ties broken lexicographically.
pub fn top_words(model: &TopicModel, topic_id: usize, n: usize) -> Result<Vec<(String, f64)>> {
    if topic_id >= model.k {
        return Err(Error::Invalid(format!("topic {topic_id} out of range 0..{}", model.k)));
    }
    if n == 0 {
        return Err(Error::Invalid("n must be at least 1".into()));
    }
    let row = &model.phi[topic_id];
    let terms = &model.vocabulary.terms;
    let mut idx: Vec<usize> = (0..row.len()).collect();
    idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then_with(|| terms[a].cmp(&terms[b])));
    Ok(idx.into_iter().take(n).map(|i| (terms[i].clone(), row[i])).collect())
}

/// Writes `topic_id,rank,term,weight` rows for every topic.
pub fn write_top_words_csv<W: Write>(model: &TopicModel, n: usize, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["topic_id", "rank", "term", "weight"])?;
    for t in 0..model.k {
        for (rank, (term, weight)) in top_words(model, t, n)?.into_iter().enumerate() {
            wtr.write_record([t.to_string(), (rank + 1).to_string(), term, weight.to_string()])?;
        }
    }
    wtr.flush().map_err(|e| Error::io("<top words>", e))?;
    Ok(())
}

/// Fold-in Gibbs estimate of one document's topic proportions with the
/// topic-word distributions held fixed.
fn infer_theta(model: &TopicModel, doc: &[usize], sweeps: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let k = model.k;
    let alpha = model.hyper_alpha;
    let mut n_k = vec![0u32; k];
    let mut z: Vec<usize> = doc
        .iter()
        .map(|_| {
            let t = rng.random_range(0..k);
            n_k[t] += 1;
            t
        })
        .collect();
    let mut weights = vec![0.0; k];
    for _ in 0..sweeps {
        for (i, &w) in doc.iter().enumerate() {
            n_k[z[i]] -= 1;
            let mut total = 0.0;
            for t in 0..k {
                weights[t] = (n_k[t] as f64 + alpha) * model.phi[t][w];
                total += weights[t];
            }
            let new = sample_index(&weights, total, rng);
            z[i] = new;
            n_k[new] += 1;
        }
    }
    let denom = doc.len() as f64 + k as f64 * alpha;
    n_k.iter().map(|&c| (c as f64 + alpha) / denom).collect()
}

/// Document-completion perplexity: even-indexed tokens of each held-out
/// document estimate its topic mix, odd-indexed tokens are scored.
pub fn held_out_perplexity(model: &TopicModel, docs: &[Vec<usize>], sweeps: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log_lik = 0.0;
    let mut n = 0usize;
    for doc in docs {
        let (est, eval): (Vec<_>, Vec<_>) = doc.iter().enumerate().partition(|(i, _)| i % 2 == 0);
        let est: Vec<usize> = est.into_iter().map(|(_, &w)| w).collect();
        let theta = infer_theta(model, &est, sweeps, &mut rng);
        for (_, &w) in eval {
            let p: f64 = (0..model.k).map(|t| theta[t] * model.phi[t][w]).sum();
            log_lik += p.ln();
            n += 1;
        }
    }
    (-log_lik / n.max(1) as f64).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(docs: &[&str]) -> CountMatrix {
        let toks: Vec<Vec<String>> =
            docs.iter().map(|d| d.split_whitespace().map(String::from).collect()).collect();
        let ids = (0..docs.len()).map(|i| format!("e{i}")).collect();
        CountMatrix::from_tokens(ids, &toks, 1, None).unwrap()
    }

    fn model_with_phi(terms: &[&str], phi: Vec<Vec<f64>>) -> TopicModel {
        TopicModel {
            k: phi.len(),
            hyper_alpha: 0.1,
            hyper_beta: 0.01,
            seed: 0,
            sweeps: 1,
            vocabulary: Vocabulary::new(terms.iter().map(|s| s.to_string()).collect(), vec![1; terms.len()]),
            doc_ids: vec![],
            phi,
            theta: vec![],
        }
    }

    #[test]
    fn single_topic_is_smoothed_frequency() {
        let m = matrix(&["a b b", "b c", "c c c a"]);
        let model = fit_lda(&m, &LdaConfig { k: 1, sweeps: 5, ..Default::default() }).unwrap();
        for row in &model.theta {
            assert_eq!(row, &vec![1.0]);
        }
        // counts a=2, b=3, c=4 of 9 tokens
        let beta = 0.01;
        let denom = 9.0 + 3.0 * beta;
        for (got, c) in model.phi[0].iter().zip([2.0, 3.0, 4.0]) {
            assert!((got - (c + beta) / denom).abs() < 1e-15);
        }
    }

    #[test]
    fn k_larger_than_vocab_errors() {
        let m = matrix(&["a b"]);
        assert!(fit_lda(&m, &LdaConfig { k: 3, ..Default::default() }).is_err());
    }

    #[test]
    fn empty_document_excluded() {
        let toks = vec![vec!["a".to_string(), "b".into()], vec![], vec!["b".into(), "a".into()]];
        let m = CountMatrix::from_tokens(vec!["x".into(), "y".into(), "z".into()], &toks, 1, None).unwrap();
        let model = fit_lda(&m, &LdaConfig { k: 2, sweeps: 3, ..Default::default() }).unwrap();
        assert_eq!(model.doc_ids, vec!["x", "z"]);
        assert_eq!(model.theta.len(), 2);
    }

    #[test]
    fn rows_are_stochastic() {
        let m = matrix(&["a b c d a", "c d e f", "a f f e b", "b c"]);
        let model = fit_lda(&m, &LdaConfig { k: 3, sweeps: 20, seed: 7, ..Default::default() }).unwrap();
        for row in model.phi.iter().chain(&model.theta) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn top_words_ordering() {
        let model = model_with_phi(&["x", "y", "z"], vec![vec![0.5, 0.3, 0.2]]);
        let words: Vec<_> = top_words(&model, 0, 2).unwrap().into_iter().map(|w| w.0).collect();
        assert_eq!(words, vec!["x", "y"]);
        assert_eq!(top_words(&model, 0, 10).unwrap().len(), 3);
        assert!(top_words(&model, 1, 2).is_err());
    }

    #[test]
    fn top_words_tie_is_lexicographic() {
        let model = model_with_phi(&["zebra", "apple", "mango"], vec![vec![0.4, 0.4, 0.2]]);
        let words: Vec<_> = top_words(&model, 0, 2).unwrap().into_iter().map(|w| w.0).collect();
        assert_eq!(words, vec!["apple", "zebra"]);
    }

    #[test]
    fn json_roundtrip_restores_index() {
        let m = matrix(&["a b", "b c"]);
        let model = fit_lda(&m, &LdaConfig { k: 2, sweeps: 2, ..Default::default() }).unwrap();
        let back = TopicModel::from_json(&serde_json::to_string(&model).unwrap()).unwrap();
        assert_eq!(back.vocabulary.id("c"), Some(2));
        assert_eq!(back.phi, model.phi);
    }
}
