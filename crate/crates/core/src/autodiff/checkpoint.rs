//! Plain-text parameter checkpoints.
//!
//! ```text
//! sdqn-checkpoint v1
//! meta <key> <value...>
//! param <name> <d0>x<d1>... <v0> <v1> ...
//! ```
//!
//! One record per line, fields separated by single spaces. Floats are written
//! in shortest round-trip exponent form, so a save/load cycle is bit-exact.
//! `meta` values run to the end of the line. Blank lines and lines starting
//! with `#` are ignored.

use std::io::{BufRead, Write};

use super::params::ParameterStore;
use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const CHECKPOINT_HEADER: &str = "sdqn-checkpoint v1";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Checkpoint {
    pub meta: Vec<(String, String)>,
    pub params: ParameterStore,
}

impl Checkpoint {
    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Adds every parameter of `store` under `{prefix}{name}`.
    pub fn add_store(&mut self, prefix: &str, store: &ParameterStore) -> Result<()> {
        for (name, t) in store.iter() {
            self.params.insert(format!("{prefix}{name}"), t.clone())?;
        }
        Ok(())
    }

    /// Overwrites the values of `store` from parameters saved under `prefix`.
    pub fn restore_store(&self, prefix: &str, store: &mut ParameterStore) -> Result<()> {
        let names: Vec<String> = store.iter().map(|(n, _)| n.to_string()).collect();
        for name in names {
            let saved = self.params.get(&format!("{prefix}{name}"))?;
            let slot = store.get_mut(&name)?;
            if saved.shape() != slot.shape() {
                return Err(Error::ParameterMismatch(format!(
                    "`{prefix}{name}` has shape {:?}, model expects {:?}",
                    saved.shape(),
                    slot.shape()
                )));
            }
            *slot = saved.clone();
        }
        Ok(())
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{CHECKPOINT_HEADER}")?;
        for (k, v) in &self.meta {
            writeln!(w, "meta {k} {v}")?;
        }
        for (name, t) in self.params.iter() {
            let shape: Vec<String> = t.shape().iter().map(|d| d.to_string()).collect();
            write!(w, "param {name} {}", shape.join("x"))?;
            for v in t.data() {
                write!(w, " {v:e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("checkpoint text is utf-8")
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let header = match lines.next() {
            Some((_, l)) => l?,
            None => return Err(ckpt_err(1, "empty file")),
        };
        if header.trim_end() != CHECKPOINT_HEADER {
            return Err(ckpt_err(
                1,
                format!("expected header `{CHECKPOINT_HEADER}`, found `{header}`"),
            ));
        }
        let mut out = Checkpoint::default();
        for (i, line) in lines {
            let lineno = i + 1;
            let line = line?;
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (kind, rest) = line.split_once(' ').unwrap_or((line, ""));
            match kind {
                "meta" => {
                    let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
                    if k.is_empty() {
                        return Err(ckpt_err(lineno, "meta record without key"));
                    }
                    out.meta.push((k.to_string(), v.to_string()));
                }
                "param" => {
                    let mut fields = rest.split(' ');
                    let name = fields
                        .next()
                        .filter(|n| !n.is_empty())
                        .ok_or_else(|| ckpt_err(lineno, "param record without name"))?;
                    let shape_str = fields
                        .next()
                        .ok_or_else(|| ckpt_err(lineno, "param record without shape"))?;
                    let shape = shape_str
                        .split('x')
                        .map(|d| d.parse::<usize>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|e| ckpt_err(lineno, format!("bad shape `{shape_str}`: {e}")))?;
                    let data = fields
                        .map(|f| f.parse::<f64>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|e| ckpt_err(lineno, format!("bad value: {e}")))?;
                    let t =
                        Tensor::new(shape, data).map_err(|e| ckpt_err(lineno, e.to_string()))?;
                    out.params
                        .insert(name, t)
                        .map_err(|e| ckpt_err(lineno, e.to_string()))?;
                }
                other => return Err(ckpt_err(lineno, format!("unknown record `{other}`"))),
            }
        }
        Ok(out)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::read_from(text.as_bytes())
    }
}

fn ckpt_err(line: usize, message: impl Into<String>) -> Error {
    Error::Checkpoint {
        line,
        message: message.into(),
    }
}
