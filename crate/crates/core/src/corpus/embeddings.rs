use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Half-width of the uniform range used for out-of-vocabulary vectors.
pub const OOV_RANGE: f32 = 0.01;

/// Pretrained word vectors plus deterministic out-of-vocabulary sampling.
///
/// Words missing from the file get a vector drawn from `U[-0.01, 0.01]` by a
/// generator seeded from the word and `oov_seed`, so a lookup never depends
/// on the order of earlier lookups.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dimension: usize,
    known: HashMap<String, Vec<f32>>,
    oov_seed: u64,
    skipped: usize,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl EmbeddingTable {
    /// A table with no pretrained vectors: every lookup is out-of-vocabulary.
    pub fn random(dimension: usize, oov_seed: u64) -> Self {
        Self::from_map(dimension, HashMap::new(), oov_seed)
    }

    pub fn from_map(dimension: usize, known: HashMap<String, Vec<f32>>, oov_seed: u64) -> Self {
        assert!(dimension > 0, "embedding dimension must be positive");
        assert!(known.values().all(|v| v.len() == dimension));
        EmbeddingTable {
            dimension,
            known,
            oov_seed,
            skipped: 0,
        }
    }

    /// Reads a whitespace-separated text file of `word v1 .. vd` lines.
    ///
    /// With `keep` set, only those words are retained, which keeps memory
    /// bounded when the file is much larger than the corpus vocabulary.
    pub fn load(
        path: &Path,
        dimension: usize,
        oov_seed: u64,
        keep: Option<&HashSet<String>>,
    ) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut known = HashMap::new();
        let mut skipped = 0;
        let mut usable = 0;
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let mut parts = line.split_whitespace();
            let Some(word) = parts.next() else {
                skipped += 1;
                continue;
            };
            let values: Option<Vec<f32>> = parts.map(|p| p.parse().ok()).collect();
            match values {
                Some(v) if v.len() == dimension => {
                    usable += 1;
                    if keep.is_none_or(|k| k.contains(word)) {
                        known.insert(word.to_string(), v);
                    }
                }
                _ => skipped += 1,
            }
        }
        if usable == 0 {
            return Err(Error::NoEmbeddings(path.to_path_buf()));
        }
        Ok(EmbeddingTable {
            dimension,
            known,
            oov_seed,
            skipped,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn oov_seed(&self) -> u64 {
        self.oov_seed
    }

    /// Malformed lines skipped while loading.
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    pub fn num_known(&self) -> usize {
        self.known.len()
    }

    pub fn is_known(&self, word: &str) -> bool {
        self.known.contains_key(word)
    }

    pub fn lookup(&self, word: &str) -> Vec<f32> {
        match self.known.get(word) {
            Some(v) => v.clone(),
            None => self.oov_vector(word),
        }
    }

    fn oov_vector(&self, word: &str) -> Vec<f32> {
        let seed = fnv1a(word.as_bytes()) ^ self.oov_seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..self.dimension)
            .map(|_| rng.gen_range(-OOV_RANGE..=OOV_RANGE))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn parses_and_skips_malformed() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "400000 3").unwrap();
        writeln!(f, "good 0.1 0.2 0.3").unwrap();
        writeln!(f, "bad 0.1 0.2").unwrap();
        writeln!(f, "ugly 1 x 2").unwrap();
        let t = EmbeddingTable::load(f.path(), 3, 0, None).unwrap();
        assert_eq!(t.lookup("good"), vec![0.1, 0.2, 0.3]);
        assert_eq!(t.skipped(), 3);
        assert_eq!(t.num_known(), 1);
    }

    #[test]
    fn no_usable_lines_is_an_error() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "a 1").unwrap();
        assert!(matches!(
            EmbeddingTable::load(f.path(), 3, 0, None),
            Err(Error::NoEmbeddings(_))
        ));
        assert!(matches!(
            EmbeddingTable::load(Path::new("/nonexistent/glove.txt"), 3, 0, None),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn keep_filter() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "a 1 2").unwrap();
        writeln!(f, "b 3 4").unwrap();
        let keep: HashSet<String> = ["b".to_string()].into();
        let t = EmbeddingTable::load(f.path(), 2, 0, Some(&keep)).unwrap();
        assert!(!t.is_known("a"));
        assert!(t.is_known("b"));
    }

    #[test]
    fn oov_is_bounded_and_order_free() {
        let t = EmbeddingTable::random(300, 42);
        let first = t.lookup("zyzzyva");
        let _ = t.lookup("other");
        assert_eq!(first, t.lookup("zyzzyva"));
        assert_eq!(first.len(), 300);
        assert!(first.iter().all(|v| v.abs() <= OOV_RANGE));
        assert_ne!(first, t.lookup("other"));
        assert_ne!(first, EmbeddingTable::random(300, 43).lookup("zyzzyva"));
    }
}
