use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::WorkloadError;
use crate::algorithms::Document;

#[derive(Clone, Debug, PartialEq)]
pub enum Distribution {
    /// Token ranks drawn i.i.d. with P(rank k) proportional to 1 / k^exponent.
    Zipf(f64),
    /// Exact frequency per vocabulary word; must sum to `total_tokens`.
    Explicit(Vec<u64>),
    /// Word 0 takes this fraction of all tokens; the rest are uniform over
    /// the remaining vocabulary.
    PlantedHeavy(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusSpec {
    pub num_docs: u64,
    pub vocab_size: u64,
    pub total_tokens: u64,
    pub distribution: Distribution,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusStats {
    pub total_tokens: u64,
    /// Indexed by vocabulary rank.
    pub frequencies: Vec<u64>,
    pub f_max: u64,
    /// Lowest-ranked word among those with frequency `f_max`.
    pub heaviest_word: Option<Vec<u8>>,
}

impl CorpusStats {
    /// Recounts statistics from documents alone.
    pub fn from_documents(docs: &[Document], vocab_size: u64) -> CorpusStats {
        let mut frequencies = vec![0u64; vocab_size as usize];
        for t in docs.iter().flat_map(|d| &d.tokens) {
            if let Some(rank) = rank_of(t) {
                if let Some(slot) = frequencies.get_mut(rank) {
                    *slot += 1;
                }
            }
        }
        CorpusStats::from_frequencies(frequencies)
    }

    fn from_frequencies(frequencies: Vec<u64>) -> CorpusStats {
        let f_max = frequencies.iter().copied().max().unwrap_or(0);
        let heaviest_word = (f_max > 0)
            .then(|| frequencies.iter().position(|&f| f == f_max))
            .flatten()
            .map(|rank| vocab_word(rank as u64));
        CorpusStats {
            total_tokens: frequencies.iter().sum(),
            frequencies,
            f_max,
            heaviest_word,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    pub docs: Vec<Document>,
    pub stats: CorpusStats,
}

/// Word for vocabulary rank `rank` (0-based): `w0`, `w1`, ...
pub fn vocab_word(rank: u64) -> Vec<u8> {
    format!("w{rank}").into_bytes()
}

fn rank_of(word: &[u8]) -> Option<usize> {
    std::str::from_utf8(word.strip_prefix(b"w")?).ok()?.parse().ok()
}

pub fn gen_corpus(spec: &CorpusSpec) -> Result<Corpus, WorkloadError> {
    if spec.vocab_size == 0 {
        return Err(WorkloadError::EmptyVocab);
    }
    if spec.num_docs == 0 && spec.total_tokens > 0 {
        return Err(WorkloadError::NoDocs(spec.total_tokens));
    }
    let m = spec.vocab_size as usize;
    let s = spec.total_tokens as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let ranks: Vec<u32> = match &spec.distribution {
        Distribution::Zipf(exponent) => {
            if !exponent.is_finite() || *exponent < 0.0 {
                return Err(WorkloadError::Distribution(format!("zipf exponent {exponent}")));
            }
            let mut cdf = Vec::with_capacity(m);
            let mut acc = 0.0;
            for k in 1..=m {
                acc += (k as f64).powf(-exponent);
                cdf.push(acc);
            }
            let total = acc;
            (0..s)
                .map(|_| {
                    let u = rng.gen::<f64>() * total;
                    cdf.partition_point(|&c| c <= u).min(m - 1) as u32
                })
                .collect()
        }
        Distribution::Explicit(freqs) => {
            if freqs.len() != m {
                return Err(WorkloadError::FrequencyLength {
                    expected: spec.vocab_size,
                    found: freqs.len(),
                });
            }
            let sum: u64 = freqs.iter().sum();
            if sum != spec.total_tokens {
                return Err(WorkloadError::FrequencySum {
                    sum,
                    total: spec.total_tokens,
                });
            }
            let mut ranks: Vec<u32> = freqs
                .iter()
                .enumerate()
                .flat_map(|(r, &f)| std::iter::repeat_n(r as u32, f as usize))
                .collect();
            ranks.shuffle(&mut rng);
            ranks
        }
        Distribution::PlantedHeavy(fraction) => {
            if !(0.0..=1.0).contains(fraction) {
                return Err(WorkloadError::Distribution(format!("planted fraction {fraction}")));
            }
            let heavy = if m == 1 { s } else { (fraction * s as f64).round() as usize };
            let mut ranks: Vec<u32> = std::iter::repeat_n(0u32, heavy)
                .chain((heavy..s).map(|_| rng.gen_range(1..m as u32)))
                .collect();
            ranks.shuffle(&mut rng);
            ranks
        }
    };

    let mut frequencies = vec![0u64; m];
    for &r in &ranks {
        frequencies[r as usize] += 1;
    }
    let n = spec.num_docs as usize;
    let docs = (0..n)
        .map(|i| {
            let (lo, hi) = (i * s / n, (i + 1) * s / n);
            Document {
                doc_id: i as u64,
                tokens: ranks[lo..hi].iter().map(|&r| vocab_word(r as u64)).collect(),
            }
        })
        .collect();
    Ok(Corpus {
        docs,
        stats: CorpusStats::from_frequencies(frequencies),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(vocab: u64, tokens: u64, distribution: Distribution, seed: u64) -> CorpusSpec {
        CorpusSpec {
            num_docs: 10,
            vocab_size: vocab,
            total_tokens: tokens,
            distribution,
            seed,
        }
    }

    #[test]
    fn single_word_vocab() {
        let c = gen_corpus(&spec(1, 5, Distribution::Zipf(1.0), 1)).unwrap();
        assert_eq!(c.stats.f_max, 5);
        assert_eq!(c.stats.total_tokens, 5);
        assert!(c.docs.iter().flat_map(|d| &d.tokens).all(|t| t == b"w0"));
    }

    #[test]
    fn explicit_frequencies() {
        let c = gen_corpus(&spec(3, 7, Distribution::Explicit(vec![4, 2, 1]), 3)).unwrap();
        assert_eq!(c.stats.f_max, 4);
        assert_eq!(c.stats.frequencies, vec![4, 2, 1]);
        assert_eq!(
            gen_corpus(&spec(3, 7, Distribution::Explicit(vec![4, 2]), 3)),
            Err(WorkloadError::FrequencyLength { expected: 3, found: 2 })
        );
        assert_eq!(
            gen_corpus(&spec(3, 8, Distribution::Explicit(vec![4, 2, 1]), 3)),
            Err(WorkloadError::FrequencySum { sum: 7, total: 8 })
        );
    }

    #[test]
    fn zipf_seed_replay_and_variation() {
        let a = gen_corpus(&spec(1000, 100_000, Distribution::Zipf(1.0), 1)).unwrap();
        let a2 = gen_corpus(&spec(1000, 100_000, Distribution::Zipf(1.0), 1)).unwrap();
        let b = gen_corpus(&spec(1000, 100_000, Distribution::Zipf(1.0), 2)).unwrap();
        assert_eq!(a, a2);
        assert_ne!(a.docs, b.docs);
        let mut fa = a.stats.frequencies.clone();
        let mut fa2 = a2.stats.frequencies.clone();
        fa.sort_unstable();
        fa2.sort_unstable();
        assert_eq!(fa, fa2);
        // rank 0 dominates under zipf(1)
        assert_eq!(a.stats.heaviest_word, Some(b"w0".to_vec()));
    }

    #[test]
    fn realized_stats_match_recount() {
        for d in [Distribution::Zipf(1.2), Distribution::PlantedHeavy(0.5), Distribution::Explicit(vec![3; 50])] {
            let c = gen_corpus(&spec(50, 150, d, 9)).unwrap();
            assert_eq!(CorpusStats::from_documents(&c.docs, 50), c.stats);
        }
    }

    #[test]
    fn planted_word_takes_its_share() {
        let c = gen_corpus(&spec(100, 10_000, Distribution::PlantedHeavy(0.5), 4)).unwrap();
        assert_eq!(c.stats.frequencies[0], 5000);
        assert_eq!(c.stats.heaviest_word, Some(b"w0".to_vec()));
    }

    #[test]
    fn rejects_bad_specs() {
        assert_eq!(gen_corpus(&spec(0, 5, Distribution::Zipf(1.0), 0)), Err(WorkloadError::EmptyVocab));
        let mut s = spec(5, 5, Distribution::Zipf(1.0), 0);
        s.num_docs = 0;
        assert_eq!(gen_corpus(&s), Err(WorkloadError::NoDocs(5)));
        assert!(gen_corpus(&spec(5, 5, Distribution::PlantedHeavy(1.5), 0)).is_err());
    }

    #[test]
    fn docs_split_tokens_evenly() {
        let c = gen_corpus(&spec(10, 95, Distribution::Zipf(1.0), 5)).unwrap();
        assert_eq!(c.docs.len(), 10);
        let sizes: Vec<usize> = c.docs.iter().map(|d| d.tokens.len()).collect();
        assert_eq!(sizes.iter().sum::<usize>(), 95);
        assert!(sizes.iter().all(|&n| n == 9 || n == 10));
    }
}
