//! Rating-file ingestion, seeded train/test splitting and the split file
//! container.
//!
//! # Split generator
//!
//! Splits are drawn with `chacha8-u53`: a ChaCha8 stream seeded through
//! `rand_core`'s `seed_from_u64(seed)`. Unique links are visited in order of
//! first appearance in the ingested records; for each one the next `u64`
//! `x` is drawn and the link goes to training iff `(x >> 11) * 2^-53 < ratio`.
//! The generator name is recorded in every split file.
//!
//! # Split file
//!
//! A single JSON object with the fields, in order:
//!
//! | field       | content                                                  |
//! |-------------|----------------------------------------------------------|
//! | `format`    | always `"diffrec-split"`                                 |
//! | `version`   | `1`                                                      |
//! | `generator` | `"chacha8-u53"`                                          |
//! | `ratio`     | training fraction                                        |
//! | `seed`      | generator seed                                           |
//! | `users`     | raw user ids; position is the dense index                |
//! | `objects`   | raw object ids; position is the dense index              |
//! | `train`     | `[user, object]` pairs, sorted                           |
//! | `test`      | `[user, object]` pairs, sorted                           |
//! | `checksum`  | lowercase hex SHA-256 of the compact JSON encoding of every field above |

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;

pub const SPLIT_FORMAT: &str = "diffrec-split";
pub const SPLIT_VERSION: u32 = 1;
pub const SPLIT_GENERATOR: &str = "chacha8-u53";
pub const DEFAULT_SPLIT_RATIO: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Delimiter {
    Tab,
    Comma,
    Semicolon,
    Pipe,
    /// Any run of ASCII whitespace.
    Whitespace,
    Char(char),
}

impl Delimiter {
    fn split<'a>(&self, line: &'a str) -> Vec<&'a str> {
        match self {
            Delimiter::Tab => line.split('\t').collect(),
            Delimiter::Comma => line.split(',').collect(),
            Delimiter::Semicolon => line.split(';').collect(),
            Delimiter::Pipe => line.split('|').collect(),
            Delimiter::Whitespace => line.split_whitespace().collect(),
            Delimiter::Char(c) => line.split(*c).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Column {
    User,
    Object,
    Rating,
    Timestamp,
    Skip,
}

/// Describes how a delimited interaction file is laid out.
///
/// Textual form is `<delimiter>:<col>,<col>,...` where the delimiter is one
/// of `tab`, `comma`, `semicolon`, `pipe`, `ws` or a single character, and
/// each column is `user`, `object`, `rating`, `timestamp` or `_`.
/// `tsv` (also `ml100k`) and `csv` are shorthands for the MovieLens column
/// order with tab and comma delimiters.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldLayout {
    delimiter: Delimiter,
    columns: Vec<Column>,
}

impl Default for FieldLayout {
    fn default() -> Self {
        Self {
            delimiter: Delimiter::Tab,
            columns: vec![Column::User, Column::Object, Column::Rating, Column::Timestamp],
        }
    }
}

impl FieldLayout {
    pub fn new(delimiter: Delimiter, columns: Vec<Column>) -> Result<Self> {
        let count = |c: Column| columns.iter().filter(|&&x| x == c).count();
        if count(Column::User) != 1 || count(Column::Object) != 1 {
            return Err(Error::InvalidParameter(
                "layout needs exactly one user and one object column".into(),
            ));
        }
        if count(Column::Rating) > 1 || count(Column::Timestamp) > 1 {
            return Err(Error::InvalidParameter(
                "layout repeats the rating or timestamp column".into(),
            ));
        }
        Ok(Self { delimiter, columns })
    }

    pub fn has_rating(&self) -> bool {
        self.columns.contains(&Column::Rating)
    }

    fn parse_line(&self, line: &str) -> Option<InteractionRecord> {
        let fields = self.delimiter.split(line);
        if fields.len() != self.columns.len() {
            return None;
        }
        let mut record = InteractionRecord::default();
        for (field, column) in fields.into_iter().zip(&self.columns) {
            let field = field.trim();
            match column {
                Column::User => record.raw_user = field.to_owned(),
                Column::Object => record.raw_object = field.to_owned(),
                Column::Rating => {
                    let r: f64 = field.parse().ok()?;
                    if !r.is_finite() {
                        return None;
                    }
                    record.rating = Some(r);
                }
                Column::Timestamp => record.timestamp = Some(field.parse().ok()?),
                Column::Skip => {}
            }
        }
        if record.raw_user.is_empty() || record.raw_object.is_empty() {
            return None;
        }
        Some(record)
    }
}

impl FromStr for FieldLayout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "tsv" | "ml100k" => return Ok(Self::default()),
            "csv" => {
                return Ok(Self {
                    delimiter: Delimiter::Comma,
                    ..Self::default()
                })
            }
            _ => {}
        }
        let (delim, cols) = s.split_once(':').ok_or_else(|| {
            Error::InvalidParameter(format!(
                "unrecognised format '{s}' (expected tsv, csv or <delim>:<cols>)"
            ))
        })?;
        let delimiter = match delim {
            "tab" => Delimiter::Tab,
            "comma" => Delimiter::Comma,
            "semicolon" => Delimiter::Semicolon,
            "pipe" => Delimiter::Pipe,
            "ws" => Delimiter::Whitespace,
            other => {
                let mut chars = other.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) => Delimiter::Char(c),
                    _ => return Err(Error::InvalidParameter(format!("unknown delimiter '{other}'"))),
                }
            }
        };
        let columns = cols
            .split(',')
            .map(|c| match c.trim() {
                "user" => Ok(Column::User),
                "object" | "item" => Ok(Column::Object),
                "rating" => Ok(Column::Rating),
                "timestamp" => Ok(Column::Timestamp),
                "_" => Ok(Column::Skip),
                other => Err(Error::InvalidParameter(format!("unknown column '{other}'"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(delimiter, columns)
    }
}

impl fmt::Display for FieldLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.delimiter {
            Delimiter::Tab => write!(f, "tab")?,
            Delimiter::Comma => write!(f, "comma")?,
            Delimiter::Semicolon => write!(f, "semicolon")?,
            Delimiter::Pipe => write!(f, "pipe")?,
            Delimiter::Whitespace => write!(f, "ws")?,
            Delimiter::Char(c) => write!(f, "{c}")?,
        }
        let cols: Vec<&str> = self
            .columns
            .iter()
            .map(|c| match c {
                Column::User => "user",
                Column::Object => "object",
                Column::Rating => "rating",
                Column::Timestamp => "timestamp",
                Column::Skip => "_",
            })
            .collect();
        write!(f, ":{}", cols.join(","))
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct InteractionRecord {
    pub raw_user: String,
    pub raw_object: String,
    pub rating: Option<f64>,
    pub timestamp: Option<i64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct IngestStats {
    pub lines: usize,
    pub records: usize,
    pub malformed: usize,
    pub below_threshold: usize,
    pub blank: usize,
}

#[derive(Clone, Debug)]
pub struct Ingested {
    pub records: Vec<InteractionRecord>,
    pub stats: IngestStats,
}

/// Reads one record per line. Lines that do not match `layout` are counted
/// as malformed and skipped; blank lines are skipped silently. With a
/// threshold, records rated below it are dropped.
pub fn ingest<R: BufRead>(source: R, layout: &FieldLayout, rating_threshold: Option<f64>) -> Result<Ingested> {
    if rating_threshold.is_some() && !layout.has_rating() {
        return Err(Error::InvalidParameter(
            "a rating threshold needs a rating column in the layout".into(),
        ));
    }
    let mut stats = IngestStats::default();
    let mut records = Vec::new();
    for line in source.lines() {
        let line = line?;
        stats.lines += 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            stats.blank += 1;
            continue;
        }
        let Some(record) = layout.parse_line(line) else {
            stats.malformed += 1;
            continue;
        };
        if let (Some(threshold), Some(rating)) = (rating_threshold, record.rating) {
            if rating < threshold {
                stats.below_threshold += 1;
                continue;
            }
        }
        records.push(record);
    }
    stats.records = records.len();
    if records.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "no valid records ({} lines, {} malformed, {} below threshold)",
            stats.lines, stats.malformed, stats.below_threshold
        )));
    }
    Ok(Ingested { records, stats })
}

/// Bidirectional mapping between raw dataset ids and dense indices.
#[derive(Clone, Debug, Default)]
pub struct IdMaps {
    users: Vec<String>,
    objects: Vec<String>,
    user_index: HashMap<String, usize>,
    object_index: HashMap<String, usize>,
}

impl PartialEq for IdMaps {
    fn eq(&self, other: &Self) -> bool {
        self.users == other.users && self.objects == other.objects
    }
}

impl IdMaps {
    pub fn from_raw(users: Vec<String>, objects: Vec<String>) -> Result<Self> {
        let index = |ids: &[String], what: &str| -> Result<HashMap<String, usize>> {
            let mut map = HashMap::with_capacity(ids.len());
            for (i, id) in ids.iter().enumerate() {
                if id.is_empty() {
                    return Err(Error::Validation(format!("empty raw {what} id at index {i}")));
                }
                if map.insert(id.clone(), i).is_some() {
                    return Err(Error::Validation(format!("duplicate raw {what} id '{id}'")));
                }
            }
            Ok(map)
        };
        Ok(Self {
            user_index: index(&users, "user")?,
            object_index: index(&objects, "object")?,
            users,
            objects,
        })
    }

    fn intern_user(&mut self, raw: &str) -> usize {
        intern(&mut self.users, &mut self.user_index, raw)
    }

    fn intern_object(&mut self, raw: &str) -> usize {
        intern(&mut self.objects, &mut self.object_index, raw)
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn user_index(&self, raw: &str) -> Option<usize> {
        self.user_index.get(raw).copied()
    }

    pub fn object_index(&self, raw: &str) -> Option<usize> {
        self.object_index.get(raw).copied()
    }

    pub fn raw_user(&self, user: usize) -> &str {
        &self.users[user]
    }

    pub fn raw_object(&self, object: usize) -> &str {
        &self.objects[object]
    }
}

fn intern(ids: &mut Vec<String>, index: &mut HashMap<String, usize>, raw: &str) -> usize {
    if let Some(&i) = index.get(raw) {
        return i;
    }
    let i = ids.len();
    ids.push(raw.to_owned());
    index.insert(raw.to_owned(), i);
    i
}

/// Records mapped to dense indices, duplicates removed.
#[derive(Clone, Debug)]
pub struct IndexedLinks {
    pub id_maps: IdMaps,
    /// Unique links in order of first appearance.
    pub links: Vec<(usize, usize)>,
    pub duplicates: usize,
}

impl IndexedLinks {
    pub fn graph(&self) -> BipartiteGraph {
        BipartiteGraph::with_shape(self.id_maps.num_users(), self.id_maps.num_objects(), &self.links)
            .expect("indices come from the id maps")
    }
}

/// Assigns dense indices in order of first appearance and drops repeated
/// (user, object) pairs.
pub fn index_records(records: &[InteractionRecord]) -> IndexedLinks {
    let mut id_maps = IdMaps::default();
    let mut seen = HashSet::with_capacity(records.len());
    let mut links = Vec::with_capacity(records.len());
    let mut duplicates = 0;
    for r in records {
        let u = id_maps.intern_user(&r.raw_user);
        let o = id_maps.intern_object(&r.raw_object);
        if seen.insert((u, o)) {
            links.push((u, o));
        } else {
            duplicates += 1;
        }
    }
    IndexedLinks {
        id_maps,
        links,
        duplicates,
    }
}

/// Maps a raw `u64` draw onto `[0, 1)` using its top 53 bits.
pub fn unit_interval(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// A training network plus held-out links, sharing one set of id maps.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitDataset {
    train: BipartiteGraph,
    test_links: Vec<Vec<u32>>,
    num_test_links: usize,
    ratio: f64,
    seed: u64,
    id_maps: IdMaps,
}

/// Partitions the unique links of `records`: each goes to training with
/// probability `ratio`, independently, using the `chacha8-u53` generator.
pub fn split(records: &[InteractionRecord], ratio: f64, seed: u64) -> Result<SplitDataset> {
    split_indexed(index_records(records), ratio, seed)
}

pub fn split_indexed(indexed: IndexedLinks, ratio: f64, seed: u64) -> Result<SplitDataset> {
    check_ratio(ratio)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for &link in &indexed.links {
        if unit_interval(rng.next_u64()) < ratio {
            train.push(link);
        } else {
            test.push(link);
        }
    }
    SplitDataset::from_parts(indexed.id_maps, &train, &test, ratio, seed)
}

fn check_ratio(ratio: f64) -> Result<()> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "split ratio must lie strictly between 0 and 1, got {ratio}"
        )));
    }
    Ok(())
}

impl SplitDataset {
    /// Assembles a split and checks its invariants: indices in range, no
    /// repeated link within either part, no link in both parts.
    pub fn from_parts(
        id_maps: IdMaps,
        train_links: &[(usize, usize)],
        test_links: &[(usize, usize)],
        ratio: f64,
        seed: u64,
    ) -> Result<Self> {
        check_ratio(ratio).map_err(|e| Error::Validation(e.to_string()))?;
        let (m, n) = (id_maps.num_users(), id_maps.num_objects());
        let in_range = |&(u, o): &(usize, usize)| u < m && o < n;
        if let Some(l) = train_links.iter().chain(test_links).find(|l| !in_range(l)) {
            return Err(Error::Validation(format!(
                "link {l:?} outside id maps ({m} users, {n} objects)"
            )));
        }
        let train = BipartiteGraph::with_shape(m, n, train_links).map_err(|e| Error::Validation(e.to_string()))?;
        if train.num_links() != train_links.len() {
            return Err(Error::Validation("training links contain duplicates".into()));
        }
        let mut per_user = vec![Vec::new(); m];
        for &(u, o) in test_links {
            if train.has_link(u, o) {
                return Err(Error::Validation(format!(
                    "link ({}, {}) appears in both train and test",
                    id_maps.raw_user(u),
                    id_maps.raw_object(o)
                )));
            }
            per_user[u].push(o as u32);
        }
        for list in &mut per_user {
            list.sort_unstable();
            let before = list.len();
            list.dedup();
            if list.len() != before {
                return Err(Error::Validation("test links contain duplicates".into()));
            }
        }
        Ok(Self {
            train,
            test_links: per_user,
            num_test_links: test_links.len(),
            ratio,
            seed,
            id_maps,
        })
    }

    pub fn train(&self) -> &BipartiteGraph {
        &self.train
    }

    /// Held-out objects of `user`, ascending.
    pub fn test_objects(&self, user: usize) -> &[u32] {
        &self.test_links[user]
    }

    pub fn num_test_links(&self) -> usize {
        self.num_test_links
    }

    pub fn test_links(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.test_links
            .iter()
            .enumerate()
            .flat_map(|(u, objs)| objs.iter().map(move |&o| (u, o as usize)))
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn id_maps(&self) -> &IdMaps {
        &self.id_maps
    }

    pub fn num_users(&self) -> usize {
        self.train.num_users()
    }

    pub fn num_objects(&self) -> usize {
        self.train.num_objects()
    }

    fn body(&self) -> SplitBody {
        SplitBody {
            format: SPLIT_FORMAT.into(),
            version: SPLIT_VERSION,
            generator: SPLIT_GENERATOR.into(),
            ratio: self.ratio,
            seed: self.seed,
            users: self.id_maps.users.clone(),
            objects: self.id_maps.objects.clone(),
            train: self.train.links().map(|(u, o)| [u, o]).collect(),
            test: self.test_links().map(|(u, o)| [u, o]).collect(),
        }
    }

    /// Hex SHA-256 of the split's canonical encoding; identical to the
    /// `checksum` field of its file.
    pub fn checksum(&self) -> String {
        self.body().checksum()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let body = self.body();
        let checksum = body.checksum();
        let file = SplitFile { body, checksum };
        let mut out = serde_json::to_vec(&file).expect("split serializes");
        out.push(b'\n');
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let file: SplitFile = serde_json::from_slice(bytes).map_err(|e| Error::Corruption(e.to_string()))?;
        let body = file.body;
        if body.format != SPLIT_FORMAT {
            return Err(Error::Corruption(format!("unexpected format tag '{}'", body.format)));
        }
        if body.version != SPLIT_VERSION {
            return Err(Error::Corruption(format!("unsupported version {}", body.version)));
        }
        if body.generator != SPLIT_GENERATOR {
            return Err(Error::Corruption(format!("unknown generator '{}'", body.generator)));
        }
        let id_maps = IdMaps::from_raw(body.users.clone(), body.objects.clone())?;
        let pairs = |v: &[[usize; 2]]| v.iter().map(|&[u, o]| (u, o)).collect::<Vec<_>>();
        let ds = Self::from_parts(id_maps, &pairs(&body.train), &pairs(&body.test), body.ratio, body.seed)?;
        let expected = body.checksum();
        if expected != file.checksum {
            return Err(Error::Corruption(format!(
                "checksum mismatch (file says {}, content hashes to {expected})",
                file.checksum
            )));
        }
        Ok(ds)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        f.sync_all()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct SplitBody {
    format: String,
    version: u32,
    generator: String,
    ratio: f64,
    seed: u64,
    users: Vec<String>,
    objects: Vec<String>,
    train: Vec<[usize; 2]>,
    test: Vec<[usize; 2]>,
}

impl SplitBody {
    fn checksum(&self) -> String {
        let encoded = serde_json::to_vec(self).expect("split body serializes");
        Sha256::digest(&encoded).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct SplitFile {
    #[serde(flatten)]
    body: SplitBody,
    checksum: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn rec(u: &str, o: &str) -> InteractionRecord {
        InteractionRecord {
            raw_user: u.into(),
            raw_object: o.into(),
            rating: None,
            timestamp: None,
        }
    }

    #[test]
    fn single_movielens_line() {
        let got = ingest(Cursor::new("1\t2\t5\t881250949\n"), &FieldLayout::default(), None).unwrap();
        assert_eq!(got.records.len(), 1);
        let r = &got.records[0];
        assert_eq!((r.raw_user.as_str(), r.raw_object.as_str()), ("1", "2"));
        assert_eq!(r.rating, Some(5.0));
        assert_eq!(r.timestamp, Some(881250949));
    }

    #[test]
    fn malformed_lines_are_counted() {
        let input = "user\titem\trating\tts\n1\t2\t5\t1\n1\t3\n\n2\t3\tfive\t1\n2\t4\t3\t9\n";
        let got = ingest(Cursor::new(input), &FieldLayout::default(), None).unwrap();
        assert_eq!(got.records.len(), 2);
        assert_eq!(got.stats.malformed, 3);
        assert_eq!(got.stats.blank, 1);
    }

    #[test]
    fn threshold_drops_low_ratings() {
        let input = "1\t1\t2\t0\n1\t2\t3\t0\n2\t1\t4.5\t0\n";
        let got = ingest(Cursor::new(input), &FieldLayout::default(), Some(3.0)).unwrap();
        assert_eq!(got.records.len(), 2);
        assert_eq!(got.stats.below_threshold, 1);
    }

    #[test]
    fn empty_source_is_an_error() {
        assert!(matches!(
            ingest(Cursor::new(""), &FieldLayout::default(), None),
            Err(Error::EmptyDataset(_))
        ));
        assert!(matches!(
            ingest(Cursor::new("garbage\n"), &FieldLayout::default(), None),
            Err(Error::EmptyDataset(_))
        ));
    }

    #[test]
    fn layout_parsing() {
        let l: FieldLayout = "comma:_,object,user".parse().unwrap();
        let got = ingest(Cursor::new("x,10,u7\n"), &l, None).unwrap();
        assert_eq!(got.records[0].raw_user, "u7");
        assert_eq!(got.records[0].raw_object, "10");
        assert_eq!(l.to_string().parse::<FieldLayout>().unwrap(), l);
        assert_eq!("tsv".parse::<FieldLayout>().unwrap(), FieldLayout::default());
        assert!("tab:user,user,object".parse::<FieldLayout>().is_err());
        assert!("tab:user".parse::<FieldLayout>().is_err());
        assert!(ingest(Cursor::new("a\tb\n"), &"tab:user,object".parse().unwrap(), Some(1.0)).is_err());
    }

    #[test]
    fn index_records_dedups_in_first_appearance_order() {
        let recs = vec![rec("b", "x"), rec("a", "y"), rec("b", "x"), rec("a", "x")];
        let idx = index_records(&recs);
        assert_eq!(idx.links, vec![(0, 0), (1, 1), (1, 0)]);
        assert_eq!(idx.duplicates, 1);
        assert_eq!(idx.id_maps.raw_user(0), "b");
        assert_eq!(idx.id_maps.object_index("y"), Some(1));
    }

    fn toy_records(k: usize) -> Vec<InteractionRecord> {
        (0..k).map(|i| rec(&format!("u{}", i % 3), &format!("o{i}"))).collect()
    }

    #[test]
    fn ratio_out_of_range() {
        for r in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(split(&toy_records(4), r, 1), Err(Error::InvalidParameter(_))));
        }
    }

    #[test]
    fn toy_split_matches_generator_replay() {
        // Replay: ChaCha8 seeded from 7, one u64 per link in input order,
        // top 53 bits scaled to [0,1), train iff below 0.5.
        let records = toy_records(10);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let expected_train: Vec<bool> = (0..10)
            .map(|_| ((rng.next_u64() >> 11) as f64) / 9007199254740992.0 < 0.5)
            .collect();

        let ds = split(&records, 0.5, 7).unwrap();
        for (i, &in_train) in expected_train.iter().enumerate() {
            let u = ds.id_maps().user_index(&format!("u{}", i % 3)).unwrap();
            let o = ds.id_maps().object_index(&format!("o{i}")).unwrap();
            assert_eq!(ds.train().has_link(u, o), in_train, "link {i}");
            assert_eq!(ds.test_objects(u).contains(&(o as u32)), !in_train, "link {i}");
        }
        assert_eq!(ds.train().num_links() + ds.num_test_links(), 10);
    }

    #[test]
    fn split_is_deterministic_and_disjoint() {
        let records = toy_records(200);
        let a = split(&records, 0.7, 99).unwrap();
        let b = split(&records, 0.7, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_bytes(), b.to_bytes());
        for u in 0..a.num_users() {
            for &o in a.test_objects(u) {
                assert!(!a.train().has_link(u, o as usize));
            }
        }
        assert_ne!(a, split(&records, 0.7, 100).unwrap());
    }

    #[test]
    fn test_only_nodes_keep_their_index() {
        let records = toy_records(40);
        let ds = split(&records, 0.5, 3).unwrap();
        assert_eq!(ds.num_objects(), 40);
        assert!(ds.train().object_degrees().contains(&0));
    }

    #[test]
    fn file_round_trip() {
        let ds = split(&toy_records(50), 0.8, 5).unwrap();
        let bytes = ds.to_bytes();
        let back = SplitDataset::from_bytes(&bytes).unwrap();
        assert_eq!(back, ds);
        assert_eq!(back.to_bytes(), bytes);
        assert_eq!(back.checksum(), ds.checksum());
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let bytes = split(&toy_records(50), 0.8, 5).unwrap().to_bytes();
        let cut = &bytes[..bytes.len() / 2];
        assert!(matches!(SplitDataset::from_bytes(cut), Err(Error::Corruption(_))));
    }

    #[test]
    fn flipped_payload_fails_checksum() {
        let ds = split(&toy_records(50), 0.8, 5).unwrap();
        let text = String::from_utf8(ds.to_bytes()).unwrap();
        let edited = text.replacen("\"seed\":5", "\"seed\":6", 1);
        assert!(matches!(
            SplitDataset::from_bytes(edited.as_bytes()),
            Err(Error::Corruption(_))
        ));
    }

    #[test]
    fn link_in_both_parts_fails_validation() {
        let ds = split(&toy_records(50), 0.8, 5).unwrap();
        let mut value: serde_json::Value = serde_json::from_slice(&ds.to_bytes()).unwrap();
        let first_train = value["train"][0].clone();
        value["test"].as_array_mut().unwrap().push(first_train);
        let edited = serde_json::to_vec(&value).unwrap();
        assert!(matches!(SplitDataset::from_bytes(&edited), Err(Error::Validation(_))));
    }
}
