//! Pretrained word-vector table loaded from the plain-text word2vec/GloVe
//! layout: `word v1 v2 ... vE`, optionally preceded by a `count dim` header.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct WordVectors {
    dim: usize,
    table: HashMap<String, Vec<f64>>,
}

impl WordVectors {
    pub fn new(dim: usize, table: HashMap<String, Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Format("word vector dimension must be positive".into()));
        }
        if let Some((w, v)) = table.iter().find(|(_, v)| v.len() != dim) {
            return Err(Error::Format(format!(
                "vector for {w:?} has length {}, expected {dim}",
                v.len()
            )));
        }
        Ok(WordVectors { dim, table })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut dim: Option<usize> = None;
        let mut declared_count = None;
        let mut table = HashMap::new();
        let mut first = true;
        for (n, line) in text.lines().enumerate() {
            let line_no = n + 1;
            let mut fields = line.split_whitespace();
            let Some(word) = fields.next() else { continue };
            let rest: Vec<&str> = fields.collect();
            if first {
                first = false;
                if let ([d], Ok(count)) = (rest.as_slice(), word.parse::<usize>()) {
                    if let Ok(d) = d.parse::<usize>() {
                        dim = Some(d);
                        declared_count = Some(count);
                        continue;
                    }
                }
            }
            let values = rest
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| Error::parse(line_no, format!("bad vector component {s:?}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            let expected = *dim.get_or_insert(values.len());
            if values.len() != expected {
                return Err(Error::parse(
                    line_no,
                    format!("vector has {} components, expected {expected}", values.len()),
                ));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::parse(line_no, "non-finite vector component"));
            }
            table.insert(word.to_string(), values);
        }
        let dim = dim.ok_or_else(|| Error::Format("word vector file is empty".into()))?;
        if let Some(count) = declared_count {
            if count != table.len() {
                log::warn!("word vector header declares {count} entries, read {}", table.len());
            }
        }
        Self::new(dim, table)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Exact match first, then the lowercased word.
    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.table
            .get(word)
            .or_else(|| self.table.get(&word.to_lowercase()))
            .map(Vec::as_slice)
    }
}
