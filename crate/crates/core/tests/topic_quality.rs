use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gendisc::synth::planted_corpus;
use gendisc::topics::{fit_lda, held_out_perplexity, umass_coherence, umass_for_word_sets, CountMatrix, LdaConfig};

fn split() -> (CountMatrix, Vec<Vec<String>>) {
    let corpus = planted_corpus(21);
    let train_ids = &corpus.doc_ids[..240];
    let (train, test) = corpus.docs.split_at(240);
    (CountMatrix::from_tokens(train_ids.to_vec(), train, 1, None).unwrap(), test.to_vec())
}

#[test]
fn planted_structure_lowers_held_out_perplexity() {
    let (counts, test) = split();
    let held: Vec<Vec<usize>> = test.iter().map(|d| counts.vocabulary.encode(d)).collect();
    let fit = |k| fit_lda(&counts, &LdaConfig { k, sweeps: 100, seed: 4, ..Default::default() }).unwrap();
    let three = held_out_perplexity(&fit(3), &held, 30, 1);
    let one = held_out_perplexity(&fit(1), &held, 30, 1);
    let vocab = counts.n_terms() as f64;
    // one topic is close to the unigram baseline; three topics should beat it clearly
    assert!(one < vocab * 1.05, "k=1 perplexity {one} vs vocabulary {vocab}");
    assert!(three < 0.7 * one, "k=3 perplexity {three} vs k=1 {one}");
}

#[test]
fn fitted_topics_are_more_coherent_than_random_word_sets() {
    let (counts, _) = split();
    let model = fit_lda(&counts, &LdaConfig { k: 3, sweeps: 100, seed: 4, ..Default::default() }).unwrap();
    let fitted = umass_coherence(&model, &counts, 10).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let random: Vec<Vec<String>> =
        (0..20).map(|_| counts.vocabulary.terms.choose_multiple(&mut rng, 10).cloned().collect()).collect();
    let scores = umass_for_word_sets(&random, &counts).unwrap();
    let random_mean = scores.iter().sum::<f64>() / scores.len() as f64;
    assert!(fitted.mean > random_mean, "fitted {} vs random {random_mean}", fitted.mean);
    assert!(fitted.per_topic.iter().all(|s| *s > random_mean));
}

#[test]
fn different_seeds_still_recover_the_planted_partition() {
    let (counts, _) = split();
    let corpus = planted_corpus(21);
    for seed in [1, 2, 3] {
        let model = fit_lda(&counts, &LdaConfig { k: 3, sweeps: 100, seed, ..Default::default() }).unwrap();
        for t in 0..3 {
            let top = gendisc::topics::top_words(&model, t, 10).unwrap();
            let best = corpus
                .topics
                .iter()
                .map(|p| top.iter().filter(|(w, _)| p.contains(w)).count())
                .max()
                .unwrap();
            assert!(best >= 9, "seed {seed} topic {t}: {top:?}");
        }
    }
}
