//! Latent Dirichlet allocation fitted by collapsed Gibbs sampling.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::indexed_seed;

use super::WordSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub topics: usize,
    /// Document-topic concentration; `None` means `50 / topics`.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    /// Sweeps used when inferring proportions for a held-out document.
    pub infer_iterations: usize,
    pub seed: u64,
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig {
            topics: 20,
            alpha: None,
            beta: 0.01,
            iterations: 1000,
            infer_iterations: 200,
            seed: 0,
        }
    }
}

impl LdaConfig {
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.topics as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    pub topics: usize,
    /// Sorted vocabulary; a word's index is its position.
    pub vocabulary: Vec<String>,
    /// `topics × vocabulary.len()`, row-major; each row sums to one.
    pub topic_word: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub infer_iterations: usize,
    pub seed: u64,
}

impl TopicModel {
    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn word_index(&self, w: &str) -> Option<usize> {
        self.vocabulary.binary_search_by(|v| v.as_str().cmp(w)).ok()
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let v = self.vocab_size();
        &self.topic_word[k * v..(k + 1) * v]
    }
}

fn sample(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (k, w) in weights.iter().enumerate() {
        u -= w;
        if u < 0.0 {
            return k;
        }
    }
    weights.len() - 1
}

/// Fits a topic model. Stop words are dropped first; each document's tokens
/// are put in canonical (sorted) order so the result depends only on the bag
/// of words and the seed.
pub fn lda_fit<S: AsRef<str>>(
    corpus: &[Vec<S>],
    config: &LdaConfig,
    stopwords: &WordSet,
) -> Result<TopicModel> {
    if config.topics < 1 {
        return Err(Error::Config("topic count must be at least 1".into()));
    }
    if !(config.beta > 0.0) || !(config.alpha() > 0.0) {
        return Err(Error::Config(
            "Dirichlet hyperparameters must be positive".into(),
        ));
    }
    if corpus.is_empty() {
        return Err(Error::Degenerate("empty corpus".into()));
    }
    let mut vocab_map: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in corpus {
        for w in doc {
            let w = w.as_ref();
            if !stopwords.contains(w) {
                vocab_map.insert(w, 0);
            }
        }
    }
    if vocab_map.is_empty() {
        return Err(Error::Degenerate(
            "vocabulary is empty after stop-word removal".into(),
        ));
    }
    for (i, v) in vocab_map.values_mut().enumerate() {
        *v = i;
    }
    let vocabulary: Vec<String> = vocab_map.keys().map(|s| (*s).to_owned()).collect();
    let (k, v) = (config.topics, vocabulary.len());
    let (alpha, beta) = (config.alpha(), config.beta);

    let docs: Vec<Vec<usize>> = corpus
        .iter()
        .map(|d| {
            let mut ids: Vec<usize> = d
                .iter()
                .filter_map(|w| vocab_map.get(w.as_ref()).copied())
                .collect();
            ids.sort_unstable();
            ids
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut n_dk = vec![0u32; docs.len() * k];
    let mut n_kw = vec![0u32; k * v];
    let mut n_k = vec![0u32; k];
    let mut z: Vec<Vec<usize>> = Vec::with_capacity(docs.len());
    for (d, doc) in docs.iter().enumerate() {
        let zd: Vec<usize> = doc.iter().map(|_| rng.random_range(0..k)).collect();
        for (&w, &t) in doc.iter().zip(&zd) {
            n_dk[d * k + t] += 1;
            n_kw[t * v + w] += 1;
            n_k[t] += 1;
        }
        z.push(zd);
    }

    let vbeta = v as f64 * beta;
    let mut p = vec![0.0; k];
    for _ in 0..config.iterations {
        for (d, doc) in docs.iter().enumerate() {
            for (pos, &w) in doc.iter().enumerate() {
                let old = z[d][pos];
                n_dk[d * k + old] -= 1;
                n_kw[old * v + w] -= 1;
                n_k[old] -= 1;
                for t in 0..k {
                    p[t] = (f64::from(n_dk[d * k + t]) + alpha)
                        * (f64::from(n_kw[t * v + w]) + beta)
                        / (f64::from(n_k[t]) + vbeta);
                }
                let new = sample(&mut rng, &p);
                z[d][pos] = new;
                n_dk[d * k + new] += 1;
                n_kw[new * v + w] += 1;
                n_k[new] += 1;
            }
        }
    }

    let mut topic_word = vec![0.0; k * v];
    for t in 0..k {
        let den = f64::from(n_k[t]) + vbeta;
        for w in 0..v {
            topic_word[t * v + w] = (f64::from(n_kw[t * v + w]) + beta) / den;
        }
        // Renormalize to absorb rounding.
        let s: f64 = topic_word[t * v..(t + 1) * v].iter().sum();
        for x in &mut topic_word[t * v..(t + 1) * v] {
            *x /= s;
        }
    }

    Ok(TopicModel {
        topics: k,
        vocabulary,
        topic_word,
        alpha,
        beta,
        infer_iterations: config.infer_iterations,
        seed: config.seed,
    })
}

/// Topic proportions of a document with the model's topics held fixed.
/// Out-of-vocabulary tokens are ignored; a document with no known tokens gets
/// the uniform prior mean.
pub fn lda_infer<S: AsRef<str>>(model: &TopicModel, tokens: &[S]) -> Vec<f64> {
    let k = model.topics;
    let uniform = vec![1.0 / k as f64; k];
    let mut ids: Vec<usize> = tokens
        .iter()
        .filter_map(|t| model.word_index(t.as_ref()))
        .collect();
    if ids.is_empty() {
        if !tokens.is_empty() {
            log::warn!(
                "all {} tokens are out of vocabulary; using uniform topic proportions",
                tokens.len()
            );
        }
        return uniform;
    }
    if k == 1 {
        return vec![1.0];
    }
    ids.sort_unstable();

    // The stream depends only on the document's bag of words.
    let mut h: u64 = 0;
    for &w in &ids {
        h = indexed_seed(h, w as u64);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(indexed_seed(model.seed, h));

    let v = model.vocab_size();
    let mut n_dk = vec![0u32; k];
    let mut z: Vec<usize> = ids.iter().map(|_| rng.random_range(0..k)).collect();
    for &t in &z {
        n_dk[t] += 1;
    }
    let n = ids.len() as f64;
    let iters = model.infer_iterations.max(2);
    let burn_in = iters / 2;
    let mut theta = vec![0.0; k];
    let mut samples = 0usize;
    let mut p = vec![0.0; k];
    for it in 0..iters {
        for (pos, &w) in ids.iter().enumerate() {
            let old = z[pos];
            n_dk[old] -= 1;
            for t in 0..k {
                p[t] = (f64::from(n_dk[t]) + model.alpha) * model.topic_word[t * v + w];
            }
            let new = sample(&mut rng, &p);
            z[pos] = new;
            n_dk[new] += 1;
        }
        if it >= burn_in {
            for t in 0..k {
                theta[t] += (f64::from(n_dk[t]) + model.alpha) / (n + k as f64 * model.alpha);
            }
            samples += 1;
        }
    }
    let total: f64 = theta.iter().sum();
    debug_assert!(samples > 0);
    theta.iter().map(|x| x / total).collect()
}
