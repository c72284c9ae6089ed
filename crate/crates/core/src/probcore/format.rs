//! Distribution files.
//!
//! JSON:
//! `{"s": [...], "y": [...], "z": [...], "atoms": [{"s": .., "y": .., "z": .., "p": ..}]}`
//! with unlisted atoms at mass zero.
//!
//! TSV: header `s<TAB>y<TAB>z<TAB>p`, one atom per line, `#` comments.
//! Alphabets are the labels in order of first appearance.
//!
//! Writers print probabilities with 17 significant digits.

use std::fs;
use std::io::ErrorKind;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::alphabet::Alphabet;
use super::dist::{validate_joint, JointDist, RawJoint, ValidateOptions};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistFormat {
    Json,
    Tsv,
}

impl DistFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("tsv") || e.eq_ignore_ascii_case("txt") => {
                DistFormat::Tsv
            }
            _ => DistFormat::Json,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonAtom {
    s: String,
    y: String,
    z: String,
    p: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonDist {
    s: Vec<String>,
    y: Vec<String>,
    z: Vec<String>,
    atoms: Vec<JsonAtom>,
}

fn lookup(alph: &Alphabet, label: &str, var: &str) -> Result<usize> {
    alph.index_of(label)
        .ok_or_else(|| Error::Parse(format!("atom uses unknown {var} label `{label}`")))
}

/// Parses the JSON distribution format into an unvalidated table.
pub fn parse_json_raw(text: &str) -> Result<RawJoint> {
    let doc: JsonDist = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    json_to_raw(doc)
}

fn json_to_raw(doc: JsonDist) -> Result<RawJoint> {
    let s = Alphabet::new(doc.s)?;
    let y = Alphabet::new(doc.y)?;
    let z = Alphabet::new(doc.z)?;
    let (ny, nz) = (y.len(), z.len());
    let mut table = vec![0.0; s.len() * ny * nz];
    for a in doc.atoms {
        let i = lookup(&s, &a.s, "s")?;
        let j = lookup(&y, &a.y, "y")?;
        let k = lookup(&z, &a.z, "z")?;
        table[(i * ny + j) * nz + k] += a.p;
    }
    Ok(RawJoint { s, y, z, table })
}

/// Accepts a bare distribution document or any JSON object carrying one
/// under the key `"distribution"` (as written into reports).
pub fn parse_json_value(value: &serde_json::Value) -> Result<RawJoint> {
    let v = value.get("distribution").unwrap_or(value);
    let doc: JsonDist =
        serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))?;
    json_to_raw(doc)
}

/// Parses the TSV distribution format into an unvalidated table.
pub fn parse_tsv_raw(text: &str) -> Result<RawJoint> {
    let mut header_seen = false;
    let mut labels: [Vec<String>; 3] = Default::default();
    let mut atoms = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
        if !header_seen {
            if cols != ["s", "y", "z", "p"] {
                return Err(Error::Parse(format!(
                    "line {}: expected header `s\\ty\\tz\\tp`",
                    lineno + 1
                )));
            }
            header_seen = true;
            continue;
        }
        if cols.len() != 4 {
            return Err(Error::Parse(format!(
                "line {}: expected 4 tab-separated columns",
                lineno + 1
            )));
        }
        let p: f64 = cols[3].parse().map_err(|_| {
            Error::Parse(format!(
                "line {}: bad probability `{}`",
                lineno + 1,
                cols[3]
            ))
        })?;
        let mut idx = [0usize; 3];
        for v in 0..3 {
            let pos = labels[v].iter().position(|l| l == cols[v]);
            idx[v] = match pos {
                Some(i) => i,
                None => {
                    labels[v].push(cols[v].to_string());
                    labels[v].len() - 1
                }
            };
        }
        atoms.push((idx, p));
    }
    if !header_seen {
        return Err(Error::Parse("missing header".into()));
    }
    let [ls, ly, lz] = labels;
    let s = Alphabet::new(ls)?;
    let y = Alphabet::new(ly)?;
    let z = Alphabet::new(lz)?;
    let (ny, nz) = (y.len(), z.len());
    let mut table = vec![0.0; s.len() * ny * nz];
    for ([i, j, k], p) in atoms {
        table[(i * ny + j) * nz + k] += p;
    }
    Ok(RawJoint { s, y, z, table })
}

pub fn parse_json(text: &str, opts: ValidateOptions) -> Result<JointDist> {
    validate_joint(parse_json_raw(text)?, opts)
}

pub fn parse_tsv(text: &str, opts: ValidateOptions) -> Result<JointDist> {
    validate_joint(parse_tsv_raw(text)?, opts)
}

/// Reads and validates a distribution file; the format follows the extension
/// (`.tsv`/`.txt` for TSV, anything else JSON).
pub fn load(path: &Path, opts: ValidateOptions) -> Result<JointDist> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        ErrorKind::NotFound => Error::FileNotFound(path.display().to_string()),
        _ => Error::Io(format!("{}: {e}", path.display())),
    })?;
    match DistFormat::from_path(path) {
        DistFormat::Json => parse_json(&text, opts),
        DistFormat::Tsv => parse_tsv(&text, opts),
    }
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// The distribution as a JSON value (nonzero atoms only).
pub fn to_json_value(joint: &JointDist) -> serde_json::Value {
    let atoms: Vec<serde_json::Value> = joint
        .atoms()
        .filter(|(_, p)| *p > 0.0)
        .map(|([i, j, k], p)| {
            serde_json::json!({
                "s": joint.s().symbol(i),
                "y": joint.y().symbol(j),
                "z": joint.z().symbol(k),
                "p": p,
            })
        })
        .collect();
    serde_json::json!({
        "s": joint.s().symbols(),
        "y": joint.y().symbols(),
        "z": joint.z().symbols(),
        "atoms": atoms,
    })
}

/// Serializes to the JSON distribution format with 17-digit probabilities.
pub fn write_json(joint: &JointDist) -> String {
    write_value(&to_json_value(joint))
}

/// Pretty-prints any JSON value with 17-digit floats.
pub fn write_value(value: &serde_json::Value) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFormatter::default());
    value
        .serialize(&mut ser)
        .expect("serializing to memory cannot fail");
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

/// Serializes to TSV. Zero atoms are written only when they are needed to
/// reproduce every alphabet and its order.
pub fn write_tsv(joint: &JointDist) -> String {
    let sparse: Vec<([usize; 3], f64)> = joint.atoms().filter(|(_, p)| *p > 0.0).collect();
    let reproduces = (0..3).all(|v| {
        let mut order: Vec<usize> = Vec::new();
        for (idx, _) in &sparse {
            if !order.contains(&idx[v]) {
                order.push(idx[v]);
            }
        }
        let n = [joint.s(), joint.y(), joint.z()][v].len();
        order == (0..n).collect::<Vec<_>>()
    });
    let atoms: Vec<([usize; 3], f64)> = if reproduces {
        sparse
    } else {
        joint.atoms().collect()
    };
    let mut out = String::from("s\ty\tz\tp\n");
    for ([i, j, k], p) in atoms {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            joint.s().symbol(i),
            joint.y().symbol(j),
            joint.z().symbol(k),
            fmt_f64(p)
        ));
    }
    out
}

/// `serde_json` formatter that writes floats with 17 significant digits in
/// scientific notation and pretty-prints with two-space indentation.
pub struct SciFormatter<'a> {
    inner: serde_json::ser::PrettyFormatter<'a>,
}

impl Default for SciFormatter<'_> {
    fn default() -> Self {
        SciFormatter {
            inner: serde_json::ser::PrettyFormatter::with_indent(b"  "),
        }
    }
}

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(
            fn $name<W: ?Sized + std::io::Write>(&mut self, writer: &mut W $(, $arg: $ty)*) -> std::io::Result<()> {
                self.inner.$name(writer $(, $arg)*)
            }
        )*
    };
}

impl serde_json::ser::Formatter for SciFormatter<'_> {
    fn write_f64<W: ?Sized + std::io::Write>(
        &mut self,
        writer: &mut W,
        value: f64,
    ) -> std::io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }

    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        begin_object_value();
        end_object_value();
    }
}
