//! On-disk artifacts: CSV histories, JSON summaries, PGM heatmaps and
//! model checkpoints.
//!
//! Every writer is deterministic, so equal inputs give byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{Grid, Study, StudySummary};
use crate::models::{FlatParams, Model, ModelConfig};
use crate::training::{DomainBox, TrainHistory};

pub const HISTORY_HEADER: &str = "epoch,train_mae,val_mae";
pub const PGM_MAXVAL: u32 = 65535;
const PGM_LINE_WIDTH: usize = 70;
const CHECKPOINT_FORMAT: &str = "kasam-checkpoint";
const CHECKPOINT_VERSION: u32 = 1;

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn to_json_pretty<T: Serialize>(value: &T, path: &Path) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    s.push('\n');
    Ok(s)
}

/// 17 significant digits, enough to round-trip any `f64`.
fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn history_csv(history: &TrainHistory) -> Result<String> {
    if history.train_mae.len() != history.val_mae.len() {
        return Err(Error::LengthMismatch {
            expected: history.train_mae.len(),
            found: history.val_mae.len(),
        });
    }
    let mut out = String::from(HISTORY_HEADER);
    out.push('\n');
    for (epoch, (t, v)) in history.train_mae.iter().zip(&history.val_mae).enumerate() {
        let _ = writeln!(out, "{epoch},{},{}", fmt_real(*t), fmt_real(*v));
    }
    Ok(out)
}

pub fn parse_history_csv(text: &str) -> Result<TrainHistory> {
    let malformed = |detail: String| Error::Malformed {
        what: "history CSV",
        detail,
    };
    let mut lines = text.lines();
    if lines.next() != Some(HISTORY_HEADER) {
        return Err(malformed(format!("expected header `{HISTORY_HEADER}`")));
    }
    let mut history = TrainHistory::default();
    for (row, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(malformed(format!("row {row}: expected 3 fields")));
        }
        if fields[0].parse::<usize>().ok() != Some(row) {
            return Err(malformed(format!("row {row}: bad epoch `{}`", fields[0])));
        }
        let real = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| malformed(format!("row {row}: bad number `{s}`")))
        };
        history.train_mae.push(real(fields[1])?);
        history.val_mae.push(real(fields[2])?);
    }
    Ok(history)
}

pub fn write_history_csv(history: &TrainHistory, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), history_csv(history)?.as_bytes())
}

pub fn read_history_csv(path: impl AsRef<Path>) -> Result<TrainHistory> {
    parse_history_csv(&read_file(path.as_ref())?)
}

/// `x,y` rows for a sampled curve.
pub fn write_curve_csv(points: &[(f64, f64)], path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::from("x,y\n");
    for &(x, y) in points {
        let _ = writeln!(out, "{},{}", fmt_real(x), fmt_real(y));
    }
    write_file(path.as_ref(), out.as_bytes())
}

pub fn write_summary_json(summary: &StudySummary, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_file(path, to_json_pretty(summary, path)?.as_bytes())
}

pub fn read_summary_json(path: impl AsRef<Path>) -> Result<StudySummary> {
    let path = path.as_ref();
    serde_json::from_str(&read_file(path)?).map_err(|e| Error::json(path, e))
}

/// Sidecar metadata written next to each PGM.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub min: f64,
    pub max: f64,
    pub resolution: usize,
    pub domain: DomainBox,
    /// Where pixel row 0, column 0 sits in the input square.
    pub origin: String,
    pub rows: String,
    pub columns: String,
}

impl GridMeta {
    pub fn of(grid: &Grid) -> Self {
        GridMeta {
            min: grid.min(),
            max: grid.max(),
            resolution: grid.resolution(),
            domain: grid.domain(),
            origin: "bottom-left".into(),
            rows: "x2".into(),
            columns: "x1".into(),
        }
    }
}

/// Grey level of `v` on `[min, max]`; all zero when the range is empty.
pub fn pgm_level(v: f64, min: f64, max: f64) -> u32 {
    if max <= min {
        return 0;
    }
    (PGM_MAXVAL as f64 * (v - min) / (max - min)).round() as u32
}

/// Plain (ASCII) PGM. The first pixel row is `x2 = lo`.
pub fn pgm_string(grid: &Grid) -> String {
    let (min, max) = (grid.min(), grid.max());
    let r = grid.resolution();
    let mut out = format!("P2\n{r} {r}\n{PGM_MAXVAL}\n");
    for row in 0..r {
        let mut line = String::new();
        for col in 0..r {
            let level = pgm_level(grid.get(row, col), min, max).to_string();
            if !line.is_empty() && line.len() + 1 + level.len() > PGM_LINE_WIDTH {
                out.push_str(&line);
                out.push('\n');
                line.clear();
            }
            if !line.is_empty() {
                line.push(' ');
            }
            line.push_str(&level);
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Path of the metadata file for a PGM: `name.pgm` becomes `name.json`.
pub fn sidecar_path(pgm: &Path) -> PathBuf {
    pgm.with_extension("json")
}

/// Writes the PGM and its JSON sidecar.
pub fn write_grid_pgm(grid: &Grid, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_file(path, pgm_string(grid).as_bytes())?;
    let meta_path = sidecar_path(path);
    write_file(&meta_path, to_json_pretty(&GridMeta::of(grid), &meta_path)?.as_bytes())
}

/// Header and pixel levels of a plain PGM.
pub fn parse_pgm(text: &str) -> Result<(usize, usize, u32, Vec<u32>)> {
    let malformed = |detail: &str| Error::Malformed {
        what: "PGM",
        detail: detail.into(),
    };
    let mut tokens = text.split_whitespace();
    if tokens.next() != Some("P2") {
        return Err(malformed("missing P2 magic"));
    }
    let mut num = || -> Result<u32> {
        tokens
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| malformed("truncated or non-numeric token"))
    };
    let (w, h, maxval) = (num()? as usize, num()? as usize, num()?);
    let pixels = (0..w * h).map(|_| num()).collect::<Result<Vec<_>>>()?;
    if pixels.iter().any(|&p| p > maxval) {
        return Err(malformed("pixel above maxval"));
    }
    Ok((w, h, maxval, pixels))
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    config: ModelConfig,
    params: FlatParams,
}

pub fn save_checkpoint(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let ck = Checkpoint {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        config: model.config(),
        params: model.params().clone(),
    };
    write_file(path, to_json_pretty(&ck, path)?.as_bytes())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let ck: Checkpoint =
        serde_json::from_str(&read_file(path)?).map_err(|e| Error::json(path, e))?;
    let malformed = |detail: String| Error::Malformed {
        what: "checkpoint",
        detail,
    };
    if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
        return Err(malformed(format!(
            "unsupported format `{}` version {}",
            ck.format, ck.version
        )));
    }
    if ck.params.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(malformed("non-finite parameter".into()));
    }
    Model::from_parts(ck.config, ck.params)
}

/// File names used by [`write_study`].
pub fn history_file(exp: &str, model: &str, trial: usize, task: u8) -> String {
    format!("{exp}_{model}_trial{trial:03}_task{task}.csv")
}

pub fn interference_file(exp: &str, model: &str) -> String {
    format!("{exp}_{model}_interference.pgm")
}

pub fn checkpoint_file(exp: &str, model: &str, task: u8) -> String {
    format!("{exp}_{model}_trial000_after_task{task}.json")
}

pub fn summary_file(exp: &str) -> String {
    format!("{exp}_summary.json")
}

/// Per-trial histories, trial-0 interference PGMs and checkpoints, and the
/// summary JSON. Returns the paths written, in order.
pub fn write_study(study: &Study, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let exp = study.spec.id.to_string();
    let mut written = Vec::new();
    for (t, trial) in study.trials.iter().enumerate() {
        for r in trial {
            for (task, history) in [(1u8, &r.task1), (2, &r.task2)] {
                let p = dir.join(history_file(&exp, r.kind.name(), t, task));
                write_history_csv(history, &p)?;
                written.push(p);
            }
        }
    }
    if let Some(first) = study.trials.first() {
        for r in first {
            if let Some(grid) = &r.interference {
                let p = dir.join(interference_file(&exp, r.kind.name()));
                write_grid_pgm(grid, &p)?;
                written.push(sidecar_path(&p));
                written.push(p);
            }
            for (task, model) in [(1u8, &r.after_task1), (2, &r.after_task2)] {
                if let Some(m) = model {
                    let p = dir.join(checkpoint_file(&exp, r.kind.name(), task));
                    save_checkpoint(m, &p)?;
                    written.push(p);
                }
            }
        }
    }
    let p = dir.join(summary_file(&exp));
    write_summary_json(&study.summary, &p)?;
    written.push(p);
    Ok(written)
}
