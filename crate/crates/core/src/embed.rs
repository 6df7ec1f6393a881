//! Word vectors: word2vec text/binary tables and a deterministic hashed
//! fallback for words the table does not know.

use std::collections::HashMap;
use std::io::BufRead;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Reserved token standing in for positions beyond the sentence edge.
pub const PAD_TOKEN: &str = "<PAD>";

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("embedding format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TableFormat {
    TextWord2vec,
    BinaryWord2vec,
}

/// What unknown words map to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum OovPolicy {
    Zero,
    /// Standard-normal vector seeded by a stable hash of the word and `seed`.
    Hashed { seed: u64 },
}

#[derive(Clone, Debug)]
pub struct EmbeddingTable {
    dim: usize,
    vocab: HashMap<String, usize>,
    matrix: Vec<f64>,
    oov: OovPolicy,
    duplicates: usize,
}

/// 64-bit FNV-1a; stable across platforms and releases.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl EmbeddingTable {
    /// A table from explicit rows; the first occurrence of a word wins.
    pub fn from_rows(
        dim: usize,
        rows: impl IntoIterator<Item = (String, Vec<f64>)>,
        oov: OovPolicy,
    ) -> Result<Self, EmbedError> {
        if dim == 0 {
            return Err(EmbedError::Format("dimension must be positive".into()));
        }
        let mut table = EmbeddingTable {
            dim,
            vocab: HashMap::new(),
            matrix: Vec::new(),
            oov,
            duplicates: 0,
        };
        for (word, row) in rows {
            table.insert(word, &row)?;
        }
        Ok(table)
    }

    fn insert(&mut self, word: String, row: &[f64]) -> Result<(), EmbedError> {
        if row.len() != self.dim {
            return Err(EmbedError::Format(format!(
                "row for {:?} has {} values, expected {}",
                word,
                row.len(),
                self.dim
            )));
        }
        if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
            return Err(EmbedError::Format(format!("non-finite value {} for {:?}", bad, word)));
        }
        if self.vocab.contains_key(&word) {
            self.duplicates += 1;
            return Ok(());
        }
        self.vocab.insert(word, self.vocab.len());
        self.matrix.extend_from_slice(row);
        Ok(())
    }

    /// Empty vocabulary; every word is produced by the hashed policy.
    pub fn hashed(dim: usize, seed: u64) -> Self {
        assert!(dim >= 1, "embedding dimension must be positive");
        EmbeddingTable {
            dim,
            vocab: HashMap::new(),
            matrix: Vec::new(),
            oov: OovPolicy::Hashed { seed },
            duplicates: 0,
        }
    }

    pub fn load<R: BufRead>(
        source: R,
        format: TableFormat,
        oov: OovPolicy,
    ) -> Result<Self, EmbedError> {
        let table = match format {
            TableFormat::TextWord2vec => Self::load_text(source, oov)?,
            TableFormat::BinaryWord2vec => Self::load_binary(source, oov)?,
        };
        if table.duplicates > 0 {
            log::warn!("embedding table: {} duplicate words ignored", table.duplicates);
        }
        Ok(table)
    }

    fn parse_header(line: &str) -> Result<(usize, usize), EmbedError> {
        let mut it = line.split_whitespace().map(str::parse::<usize>);
        match (it.next(), it.next(), it.next()) {
            (Some(Ok(n)), Some(Ok(d)), None) if d > 0 => Ok((n, d)),
            _ => Err(EmbedError::Format(format!("bad header {:?}", line.trim()))),
        }
    }

    fn load_text<R: BufRead>(source: R, oov: OovPolicy) -> Result<Self, EmbedError> {
        let mut lines = source.lines();
        let header = lines
            .next()
            .ok_or_else(|| EmbedError::Format("missing header".into()))??;
        let (count, dim) = Self::parse_header(&header)?;
        let mut table = Self::from_rows(dim, std::iter::empty(), oov)?;
        let mut rows = 0;
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let word = fields.next().expect("non-empty line").to_string();
            let row = fields
                .map(|v| {
                    v.parse::<f64>().map_err(|_| {
                        EmbedError::Format(format!("line {}: bad number {:?}", n + 2, v))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            table.insert(word, &row)?;
            rows += 1;
        }
        if rows != count {
            return Err(EmbedError::Format(format!(
                "header declares {} words, found {}",
                count, rows
            )));
        }
        Ok(table)
    }

    fn load_binary<R: BufRead>(mut source: R, oov: OovPolicy) -> Result<Self, EmbedError> {
        let mut header = String::new();
        source.read_line(&mut header)?;
        let (count, dim) = Self::parse_header(&header)?;
        let mut table = Self::from_rows(dim, std::iter::empty(), oov)?;
        let mut buf = vec![0u8; 4 * dim];
        for i in 0..count {
            let mut word = Vec::new();
            source.read_until(b' ', &mut word)?;
            if word.last() != Some(&b' ') {
                return Err(EmbedError::Format(format!(
                    "header declares {} words, found {}",
                    count, i
                )));
            }
            word.pop();
            let word = String::from_utf8_lossy(&word).trim_start_matches('\n').to_string();
            source.read_exact(&mut buf).map_err(|_| {
                EmbedError::Format(format!("truncated vector for word {} ({:?})", i, word))
            })?;
            let row: Vec<f64> = buf
                .chunks_exact(4)
                .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
                .collect();
            table.insert(word, &row)?;
        }
        Ok(table)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    pub fn oov_policy(&self) -> OovPolicy {
        self.oov
    }

    pub fn contains(&self, word: &str) -> bool {
        self.vocab.contains_key(word)
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.matrix[i * self.dim..(i + 1) * self.dim]
    }

    /// Vector for `word`: stored row (exact, then lowercase), zero for
    /// [`PAD_TOKEN`], otherwise the OOV policy.
    pub fn lookup(&self, word: &str) -> Vec<f64> {
        if word == PAD_TOKEN {
            return vec![0.0; self.dim];
        }
        if let Some(&i) = self.vocab.get(word) {
            return self.row(i).to_vec();
        }
        let lower = word.to_lowercase();
        if let Some(&i) = self.vocab.get(&lower) {
            return self.row(i).to_vec();
        }
        match self.oov {
            OovPolicy::Zero => vec![0.0; self.dim],
            OovPolicy::Hashed { seed } => hashed_vector(word, seed, self.dim),
        }
    }
}

/// Standard-normal vector determined by `(word, seed)`.
pub fn hashed_vector(word: &str, seed: u64, dim: usize) -> Vec<f64> {
    let key = splitmix(fnv1a(word.as_bytes()) ^ splitmix(seed));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Reads a table from disk with the given format.
pub fn load_table_file(
    path: &std::path::Path,
    format: TableFormat,
    oov: OovPolicy,
) -> Result<EmbeddingTable, EmbedError> {
    let f = std::fs::File::open(path)?;
    EmbeddingTable::load(std::io::BufReader::new(f), format, oov)
}
