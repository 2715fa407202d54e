use std::fmt::Write as _;
use std::path::Path;

use super::{AdamState, MlpModel, Normalization, Provenance, Variant, HIDDEN};
use crate::error::{Error, Result};

const MAGIC: &str = "radiomap-mlp 1";

fn join(values: &[f64]) -> String {
    let mut s = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        write!(s, "{v:?}").unwrap();
    }
    s
}

/// Text serialization that round-trips every parameter exactly.
pub fn write_model_file(model: &MlpModel) -> String {
    let p = model.provenance();
    let n = model.normalization();
    let a = model.adam();
    let mut s = String::new();
    writeln!(s, "{MAGIC}").unwrap();
    writeln!(s, "variant {}", model.variant()).unwrap();
    writeln!(s, "input_dim {}", model.input_dim()).unwrap();
    writeln!(s, "hidden {HIDDEN}").unwrap();
    writeln!(s, "seed {}", p.seed).unwrap();
    writeln!(s, "offline_epochs {}", p.offline_epochs).unwrap();
    writeln!(s, "offline_samples {}", p.offline_samples).unwrap();
    writeln!(s, "online_steps {}", p.online_steps).unwrap();
    writeln!(s, "norm_mean {}", join(&n.mean)).unwrap();
    writeln!(s, "norm_std {}", join(&n.std)).unwrap();
    writeln!(s, "target_mean {:?}", n.target_mean).unwrap();
    writeln!(s, "target_std {:?}", n.target_std).unwrap();
    writeln!(s, "params {}", join(model.params())).unwrap();
    writeln!(s, "adam_t {}", a.t).unwrap();
    writeln!(s, "adam_m {}", join(&a.m)).unwrap();
    writeln!(s, "adam_v {}", join(&a.v)).unwrap();
    s
}

struct Lines<'a> {
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn field(&mut self, key: &str) -> Result<(usize, &'a str)> {
        let (i, line) = self
            .iter
            .next()
            .ok_or_else(|| Error::format(0, format!("missing field {key}")))?;
        let lineno = i + 1;
        let rest = line
            .strip_prefix(key)
            .and_then(|r| if r.is_empty() { Some(r) } else { r.strip_prefix(' ') })
            .ok_or_else(|| Error::format(lineno, format!("expected field {key}")))?;
        Ok((lineno, rest.trim()))
    }

    fn scalar<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let (line, v) = self.field(key)?;
        v.parse()
            .map_err(|_| Error::format(line, format!("bad value for {key}: {v:?}")))
    }

    fn real(&mut self, key: &str) -> Result<f64> {
        let (line, v) = self.field(key)?;
        parse_real(line, key, v)
    }

    fn reals(&mut self, key: &str, len: usize) -> Result<Vec<f64>> {
        let (line, v) = self.field(key)?;
        let out = v
            .split_ascii_whitespace()
            .map(|t| parse_real(line, key, t))
            .collect::<Result<Vec<_>>>()?;
        if out.len() != len {
            return Err(Error::format(line, format!("{key} needs {len} values, got {}", out.len())));
        }
        Ok(out)
    }
}

fn parse_real(line: usize, key: &str, t: &str) -> Result<f64> {
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::format(line, format!("bad number in {key}: {t:?}"))),
    }
}

pub fn parse_model_file(text: &str) -> Result<MlpModel> {
    let mut lines = Lines {
        iter: text.lines().enumerate(),
    };
    match lines.iter.next() {
        Some((_, l)) if l.trim_end() == MAGIC => {}
        _ => return Err(Error::format(1, "not a radiomap network file")),
    }
    let (line, v) = lines.field("variant")?;
    let variant: Variant = v.parse().map_err(|_| Error::format(line, format!("unknown variant {v:?}")))?;
    let dim: usize = lines.scalar("input_dim")?;
    let hidden: usize = lines.scalar("hidden")?;
    if dim != variant.input_dim() || hidden != HIDDEN {
        return Err(Error::format(3, format!("shape {dim}x{hidden} does not match variant {variant}")));
    }
    let provenance = Provenance {
        seed: lines.scalar("seed")?,
        offline_epochs: lines.scalar("offline_epochs")?,
        offline_samples: lines.scalar("offline_samples")?,
        online_steps: lines.scalar("online_steps")?,
    };
    let norm = Normalization {
        mean: lines.reals("norm_mean", dim)?,
        std: lines.reals("norm_std", dim)?,
        target_mean: lines.real("target_mean")?,
        target_std: lines.real("target_std")?,
    };
    let n = MlpModel::param_count(dim);
    let params = lines.reals("params", n)?;
    let t = lines.scalar("adam_t")?;
    let m = lines.reals("adam_m", n)?;
    let v = lines.reals("adam_v", n)?;
    if let Some((i, extra)) = lines.iter.find(|(_, l)| !l.trim().is_empty()) {
        return Err(Error::format(i + 1, format!("unexpected trailing content {extra:?}")));
    }
    MlpModel::from_parts(variant, params, norm, AdamState { m, v, t }, provenance)
}

pub fn read_model_file(path: impl AsRef<Path>) -> Result<MlpModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model_file(&text)
}
