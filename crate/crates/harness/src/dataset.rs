//! Line-oriented ranking files.
//!
//! One ranking per line, best first, tokens separated by commas and/or
//! whitespace; blank lines are skipped. Three token conventions:
//!
//! * `tokens`: arbitrary strings, interned in order of first appearance;
//! * `ids`: positive integers used directly as item ids;
//! * `query`: the first two tokens are a query id and an engine id, the rest
//!   is that engine's ranked list (empty lists are dropped).

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use igm_core::{Dictionary, ItemId, TopTOrdering};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Tokens,
    Ids,
    Query,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "tokens" => Ok(Format::Tokens),
            "ids" => Ok(Format::Ids),
            "query" => Ok(Format::Query),
            other => Err(format!("unknown format '{other}' (expected tokens, ids or query)")),
        }
    }
}

/// Query and engine ids of one ranking in `query` files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryKey {
    pub query: String,
    pub engine: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RankingDataset {
    pub dictionary: Dictionary,
    pub rankings: Vec<TopTOrdering>,
    /// Parallel to `rankings` for `query` files.
    pub keys: Vec<QueryKey>,
    pub source: Option<String>,
}

impl RankingDataset {
    pub fn len(&self) -> usize {
        self.rankings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rankings.is_empty()
    }

    /// Dataset whose tokens are the decimal ids `1..=max_id`.
    pub fn from_ids(rankings: Vec<TopTOrdering>) -> Self {
        let max = rankings
            .iter()
            .flat_map(|r| r.items().iter().map(|i| i.0))
            .max()
            .unwrap_or(0);
        Self {
            dictionary: numeric_dictionary(max),
            rankings,
            keys: Vec::new(),
            source: None,
        }
    }

    pub fn token(&self, id: ItemId) -> String {
        self.dictionary
            .token(id)
            .map_or_else(|| id.to_string(), str::to_owned)
    }

    pub fn tokens_of(&self, items: &[ItemId]) -> Vec<String> {
        items.iter().map(|&i| self.token(i)).collect()
    }

    /// Rankings grouped by query id, in order of first appearance.
    pub fn by_query(&self) -> Vec<(String, Vec<TopTOrdering>)> {
        let mut groups: Vec<(String, Vec<TopTOrdering>)> = Vec::new();
        for (key, r) in self.keys.iter().zip(&self.rankings) {
            match groups.iter_mut().find(|(q, _)| *q == key.query) {
                Some((_, v)) => v.push(r.clone()),
                None => groups.push((key.query.clone(), vec![r.clone()])),
            }
        }
        groups
    }

    /// File text in `format`; `query` needs keys.
    pub fn to_text(&self, format: Format) -> String {
        let mut out = String::new();
        for (k, r) in self.rankings.iter().enumerate() {
            let tokens = match format {
                Format::Ids => r.items().iter().map(|i| i.to_string()).collect::<Vec<_>>(),
                _ => self.tokens_of(r.items()),
            };
            if format == Format::Query {
                if let Some(key) = self.keys.get(k) {
                    let _ = write!(out, "{},{},", key.query, key.engine);
                }
            }
            out.push_str(&tokens.join(","));
            out.push('\n');
        }
        out
    }
}

const MAX_NUMERIC_ID: u32 = 10_000_000;

fn numeric_dictionary(max: u32) -> Dictionary {
    let mut d = Dictionary::new();
    for k in 1..=max {
        d.intern(&k.to_string());
    }
    d
}

/// Tokens of a line with their 1-based character columns.
fn split_tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start: Option<(usize, usize)> = None;
    for (col, (byte, ch)) in line.char_indices().enumerate() {
        let sep = ch == ',' || ch.is_whitespace();
        match (sep, start) {
            (true, Some((b, c))) => {
                out.push((c + 1, &line[b..byte]));
                start = None;
            }
            (false, None) => start = Some((byte, col)),
            _ => {}
        }
    }
    if let Some((b, c)) = start {
        out.push((c + 1, &line[b..]));
    }
    out
}

pub fn parse_rankings(text: &str, format: Format) -> Result<RankingDataset> {
    let mut dictionary = Dictionary::new();
    let mut rankings = Vec::new();
    let mut keys = Vec::new();
    let mut max_id = 0u32;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let mut tokens = split_tokens(raw);
        if tokens.is_empty() {
            continue;
        }
        if format == Format::Query {
            if tokens.len() < 2 {
                return Err(HarnessError::Parse {
                    line,
                    column: tokens[0].0,
                    message: "expected a query id and an engine id".into(),
                });
            }
            let rest = tokens.split_off(2);
            let key = QueryKey {
                query: tokens[0].1.to_owned(),
                engine: tokens[1].1.to_owned(),
            };
            tokens = rest;
            if tokens.is_empty() {
                continue;
            }
            keys.push(key);
        }
        let mut seen = HashSet::new();
        let mut items = Vec::with_capacity(tokens.len());
        for (column, tok) in tokens {
            if !seen.insert(tok) {
                return Err(HarnessError::DuplicateToken {
                    line,
                    column,
                    token: tok.to_owned(),
                });
            }
            let id = match format {
                Format::Ids => {
                    let id: u32 = tok.parse().ok().filter(|v| (1..=MAX_NUMERIC_ID).contains(v)).ok_or_else(|| {
                        HarnessError::Parse {
                            line,
                            column,
                            message: format!("'{tok}' is not an item id in 1..={MAX_NUMERIC_ID}"),
                        }
                    })?;
                    max_id = max_id.max(id);
                    ItemId(id)
                }
                _ => dictionary.intern(tok),
            };
            items.push(id);
        }
        rankings.push(TopTOrdering::new(items)?);
    }
    if format == Format::Ids {
        dictionary = numeric_dictionary(max_id);
    }
    Ok(RankingDataset {
        dictionary,
        rankings,
        keys,
        source: None,
    })
}

pub fn load_rankings(path: impl AsRef<Path>, format: Format) -> Result<RankingDataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(HarnessError::io(path))?;
    let mut ds = parse_rankings(&text, format)?;
    ds.source = Some(path.display().to_string());
    Ok(ds)
}

pub fn save_rankings(ds: &RankingDataset, path: impl AsRef<Path>, format: Format) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, ds.to_text(format)).map_err(HarnessError::io(path))
}
