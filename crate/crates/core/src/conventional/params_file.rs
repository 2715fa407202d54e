//! Flat `key=value` parameter files. Each fit is one block terminated by a
//! blank line; re-fits append a new block so the file is an audit trail and
//! the last block is the current model.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{ConventionalModel, ModelKind, PathLossParams, ShadowingParams, VisibilityParams};
use crate::error::{Error, Result};

/// One fitted model with its provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamsRecord {
    pub model: ConventionalModel,
    /// Latest sample timestamp the fit saw (data time, not wall-clock).
    pub fit_timestamp: f64,
    pub sample_count: usize,
}

fn put_line(out: &mut String, prefix: &str, p: &PathLossParams) {
    let _ = writeln!(out, "{prefix}.pl_d0={}", p.pl_d0);
    let _ = writeln!(out, "{prefix}.eta={}", p.eta);
    let _ = writeln!(out, "{prefix}.d0={}", p.d0);
}

pub fn write_params_record(rec: &ParamsRecord) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "model={}", rec.model.kind());
    let _ = writeln!(out, "fit_timestamp={}", rec.fit_timestamp);
    let _ = writeln!(out, "sample_count={}", rec.sample_count);
    match &rec.model {
        ConventionalModel::Simple(p) => put_line(&mut out, "los", p),
        ConventionalModel::Visibility(v) => {
            put_line(&mut out, "los", &v.los);
            put_line(&mut out, "nlos", &v.nlos);
        }
        ConventionalModel::Shadowing(s) => {
            put_line(&mut out, "los", &s.los);
            let _ = writeln!(out, "alpha={}", s.alpha);
        }
        ConventionalModel::TwoRay(p) | ConventionalModel::KnifeEdge(p) | ConventionalModel::ReflectionDiffraction(p) => {
            put_line(&mut out, "los", p)
        }
    }
    out.push('\n');
    out
}

struct Block {
    start: usize,
    entries: BTreeMap<String, (usize, String)>,
}

impl Block {
    fn raw(&self, key: &str) -> Result<&(usize, String)> {
        self.entries
            .get(key)
            .ok_or_else(|| Error::format(self.start, format!("missing key `{key}`")))
    }

    fn num(&self, key: &str) -> Result<f64> {
        let (line, v) = self.raw(key)?;
        let x: f64 = v
            .parse()
            .map_err(|_| Error::format(*line, format!("`{key}` is not a number")))?;
        if !x.is_finite() {
            return Err(Error::format(*line, format!("`{key}` must be finite")));
        }
        Ok(x)
    }

    fn params(&self, prefix: &str) -> Result<PathLossParams> {
        let d0 = self.num(&format!("{prefix}.d0"))?;
        if d0 <= 0.0 {
            return Err(Error::format(self.raw(&format!("{prefix}.d0"))?.0, "d0 must be positive"));
        }
        Ok(PathLossParams {
            pl_d0: self.num(&format!("{prefix}.pl_d0"))?,
            eta: self.num(&format!("{prefix}.eta"))?,
            d0,
        })
    }

    fn record(&self) -> Result<ParamsRecord> {
        let (line, name) = self.raw("model")?;
        let kind: ModelKind = name.parse().map_err(|e: Error| Error::format(*line, e.to_string()))?;
        let model = match kind {
            ModelKind::Simple => ConventionalModel::Simple(self.params("los")?),
            ModelKind::Visibility => ConventionalModel::Visibility(VisibilityParams {
                los: self.params("los")?,
                nlos: self.params("nlos")?,
            }),
            ModelKind::Shadowing => ConventionalModel::Shadowing(ShadowingParams {
                los: self.params("los")?,
                alpha: self.num("alpha")?,
            }),
            ModelKind::TwoRay => ConventionalModel::TwoRay(self.params("los")?),
            ModelKind::KnifeEdge => ConventionalModel::KnifeEdge(self.params("los")?),
            ModelKind::ReflectionDiffraction => ConventionalModel::ReflectionDiffraction(self.params("los")?),
        };
        let (count_line, count) = self.raw("sample_count")?;
        Ok(ParamsRecord {
            model,
            fit_timestamp: self.num("fit_timestamp")?,
            sample_count: count
                .parse()
                .map_err(|_| Error::format(*count_line, "sample_count is not an integer"))?,
        })
    }
}

/// Parses every record in a params file, oldest first. `#` starts a comment line.
pub fn parse_params_file(text: &str) -> Result<Vec<ParamsRecord>> {
    let mut blocks: Vec<Block> = Vec::new();
    let mut current: Option<Block> = None;
    for (n, line) in text.lines().enumerate() {
        let ln = n + 1;
        let line = line.trim();
        if line.starts_with('#') {
            continue;
        }
        if line.is_empty() {
            blocks.extend(current.take());
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::format(ln, "expected `key=value`"))?;
        let block = current.get_or_insert_with(|| Block {
            start: ln,
            entries: BTreeMap::new(),
        });
        if block.entries.insert(k.trim().to_string(), (ln, v.trim().to_string())).is_some() {
            return Err(Error::format(ln, format!("duplicate key `{}`", k.trim())));
        }
    }
    blocks.extend(current);
    blocks.iter().map(Block::record).collect()
}

pub fn read_params_file(path: impl AsRef<Path>) -> Result<Vec<ParamsRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_params_file(&text)
}
