//! Annotation manifests and detection files.
//!
//! `annotations.csv`: `image_id,path,split,x,y,w,h[,cx,cy,r][,square]`, paths
//! relative to the manifest's directory. `detections.csv`:
//! `image_id,x,y,w,h,score,source`. Both are UTF-8 with a header row.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bbox::BBox;
use crate::daugman::CircleParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(format!("split must be train or test, got {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub image_id: String,
    /// Relative to the manifest directory.
    pub path: PathBuf,
    pub split: Split,
    pub bbox: BBox,
    pub circle: Option<CircleParams>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub name: String,
    pub sensor: String,
    /// Directory image paths are resolved against.
    pub root: PathBuf,
    pub entries: Vec<Annotation>,
}

const REQUIRED: [&str; 7] = ["image_id", "path", "split", "x", "y", "w", "h"];
const OPTIONAL: [&str; 4] = ["cx", "cy", "r", "square"];

fn parse_err(path: &Path, line: u64, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, msg: msg.into() }
}

fn field<T: FromStr>(rec: &csv::StringRecord, idx: usize, name: &str, path: &Path, line: u64) -> Result<T> {
    let raw = rec.get(idx).unwrap_or("").trim();
    raw.parse().map_err(|_| parse_err(path, line, format!("bad {name} value {raw:?}")))
}

fn column_index(headers: &csv::StringRecord, path: &Path, allowed: &[&str], required: &[&str]) -> Result<HashMap<String, usize>> {
    let mut cols = HashMap::new();
    for (i, h) in headers.iter().enumerate() {
        let h = h.trim();
        if !allowed.contains(&h) {
            return Err(parse_err(path, 1, format!("unknown column {h:?}")));
        }
        if cols.insert(h.to_string(), i).is_some() {
            return Err(parse_err(path, 1, format!("repeated column {h:?}")));
        }
    }
    if let Some(missing) = required.iter().find(|c| !cols.contains_key(**c)) {
        return Err(parse_err(path, 1, format!("missing column {missing:?}")));
    }
    Ok(cols)
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

fn csv_reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    parse_err(path, line, e.to_string())
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        load_manifest(path)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn image_path(&self, a: &Annotation) -> PathBuf {
        self.root.join(&a.path)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let has_circle = self.entries.iter().any(|a| a.circle.is_some());
        let has_rect = self.entries.iter().any(|a| !a.bbox.square);
        let mut header: Vec<&str> = REQUIRED.to_vec();
        if has_circle {
            header.extend(["cx", "cy", "r"]);
        }
        if has_rect {
            header.push("square");
        }
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
        w.write_record(&header).map_err(|e| csv_err(path, e))?;
        for a in &self.entries {
            let mut row = vec![
                a.image_id.clone(),
                a.path.to_string_lossy().replace('\\', "/"),
                a.split.to_string(),
                a.bbox.x.to_string(),
                a.bbox.y.to_string(),
                a.bbox.w.to_string(),
                a.bbox.h.to_string(),
            ];
            if has_circle {
                match a.circle {
                    Some(c) => row.extend([c.cx.to_string(), c.cy.to_string(), c.r.to_string()]),
                    None => row.extend([String::new(), String::new(), String::new()]),
                }
            }
            if has_rect {
                row.push(if a.bbox.square { "1" } else { "0" }.to_string());
            }
            w.write_record(&row).map_err(|e| csv_err(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Parse and validate a manifest. Duplicate ids, malformed rows and image
/// files that do not exist abort the load with the offending line.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let mut rdr = csv_reader(path)?;
    let allowed: Vec<&str> = REQUIRED.iter().chain(OPTIONAL.iter()).copied().collect();
    let headers = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    let cols = column_index(&headers, path, &allowed, &REQUIRED)?;
    let circle_cols = ["cx", "cy", "r"].iter().filter(|c| cols.contains_key(**c)).count();
    if circle_cols != 0 && circle_cols != 3 {
        return Err(parse_err(path, 1, "cx, cy and r must appear together"));
    }

    let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = line_of(&rec);
        let image_id: String = rec[cols["image_id"]].to_string();
        if image_id.is_empty() {
            return Err(parse_err(path, line, "empty image_id"));
        }
        let rel = PathBuf::from(&rec[cols["path"]]);
        let split: Split = rec[cols["split"]].parse().map_err(|m: String| parse_err(path, line, m))?;
        let x: i64 = field(&rec, cols["x"], "x", path, line)?;
        let y: i64 = field(&rec, cols["y"], "y", path, line)?;
        let w: i64 = field(&rec, cols["w"], "w", path, line)?;
        let h: i64 = field(&rec, cols["h"], "h", path, line)?;
        let mut bbox = BBox::new(x, y, w, h).map_err(|_| parse_err(path, line, format!("box size {w}x{h}")))?;
        let allow_rect = match cols.get("square") {
            Some(&i) => match rec.get(i).unwrap_or("") {
                "" | "1" | "true" => false,
                "0" | "false" => true,
                other => return Err(parse_err(path, line, format!("bad square flag {other:?}"))),
            },
            None => false,
        };
        if w != h && !allow_rect {
            return Err(parse_err(path, line, format!("box {w}x{h} is not square")));
        }
        bbox.square = !allow_rect;
        let circle = if circle_cols == 3 && !rec[cols["cx"]].is_empty() {
            Some(CircleParams::new(
                field(&rec, cols["cx"], "cx", path, line)?,
                field(&rec, cols["cy"], "cy", path, line)?,
                field(&rec, cols["r"], "r", path, line)?,
            ))
        } else {
            None
        };
        if !seen.insert(image_id.clone()) {
            return Err(Error::DuplicateId { path: path.to_path_buf(), line, id: image_id });
        }
        let full = root.join(&rel);
        if !full.is_file() {
            return Err(Error::MissingImage { path: path.to_path_buf(), line, image: full });
        }
        entries.push(Annotation { image_id, path: rel, split, bbox, circle });
    }

    let name = root
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    Ok(Manifest { sensor: name.clone(), name, root, entries })
}

/// Entries of one split, order preserved.
pub fn split_filter(m: &Manifest, split: Split) -> Manifest {
    Manifest {
        entries: m.entries.iter().filter(|a| a.split == split).cloned().collect(),
        ..m.clone()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRecord {
    pub image_id: String,
    pub bbox: BBox,
    pub score: f64,
    pub source: String,
}

pub fn load_detections(path: impl AsRef<Path>) -> Result<Vec<DetectionRecord>> {
    let path = path.as_ref();
    let mut rdr = csv_reader(path)?;
    let cols_all = ["image_id", "x", "y", "w", "h", "score", "source"];
    let headers = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    let cols = column_index(&headers, path, &cols_all, &cols_all)?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = line_of(&rec);
        let image_id = rec[cols["image_id"]].to_string();
        let source = rec[cols["source"]].to_string();
        if image_id.is_empty() {
            return Err(parse_err(path, line, "empty image_id"));
        }
        let x: i64 = field(&rec, cols["x"], "x", path, line)?;
        let y: i64 = field(&rec, cols["y"], "y", path, line)?;
        let w: i64 = field(&rec, cols["w"], "w", path, line)?;
        let h: i64 = field(&rec, cols["h"], "h", path, line)?;
        let score: f64 = field(&rec, cols["score"], "score", path, line)?;
        let bbox = BBox::new(x, y, w, h).map_err(|_| parse_err(path, line, format!("box size {w}x{h}")))?;
        if !seen.insert((image_id.clone(), source.clone())) {
            return Err(parse_err(path, line, format!("duplicate detection for ({image_id}, {source})")));
        }
        out.push(DetectionRecord { image_id, bbox, score, source });
    }
    Ok(out)
}

pub fn save_detections(records: &[DetectionRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_detections(records, file).map_err(|e| Error::io(path, e))
}

/// `detections.csv` content, header included.
pub fn write_detections(records: &[DetectionRecord], out: impl io::Write) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["image_id", "x", "y", "w", "h", "score", "source"])?;
    for d in records {
        w.write_record([
            d.image_id.clone(),
            d.bbox.x.to_string(),
            d.bbox.y.to_string(),
            d.bbox.w.to_string(),
            d.bbox.h.to_string(),
            d.score.to_string(),
            d.source.clone(),
        ])?;
    }
    w.flush()
}

/// Result of matching detections to manifest entries.
#[derive(Debug, Clone)]
pub struct Joined<'a> {
    /// One slot per manifest entry, in manifest order; `None` means missed.
    pub pairs: Vec<(&'a Annotation, Option<&'a DetectionRecord>)>,
    /// Detection ids with no manifest entry.
    pub unknown_ids: Vec<String>,
}

/// Match detections to entries by image id, optionally restricted to one
/// source tag. Every entry appears exactly once.
pub fn join_detections<'a>(
    manifest: &'a Manifest,
    detections: &'a [DetectionRecord],
    source: Option<&str>,
) -> Result<Joined<'a>> {
    let mut by_id: HashMap<&str, &DetectionRecord> = HashMap::new();
    for d in detections.iter().filter(|d| source.is_none_or(|s| d.source == s)) {
        if by_id.insert(d.image_id.as_str(), d).is_some() {
            return Err(Error::InvalidArgument(format!(
                "several detection sources for image {:?}; pick one with a source filter",
                d.image_id
            )));
        }
    }
    let known: HashSet<&str> = manifest.entries.iter().map(|a| a.image_id.as_str()).collect();
    let mut unknown_ids: Vec<String> =
        by_id.keys().filter(|id| !known.contains(**id)).map(|s| s.to_string()).collect();
    unknown_ids.sort();
    let pairs = manifest.entries.iter().map(|a| (a, by_id.get(a.image_id.as_str()).copied())).collect();
    Ok(Joined { pairs, unknown_ids })
}
