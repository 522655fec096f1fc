//! Plain-text event files, one detection per row:
//!
//! ```text
//! # shot x[m] y[m] t[s]
//! # statistics=boson
//! # empty_shots=3 7
//! 0 1.25e-4 -3.5e-5 3.0000012e-1
//! ```
//!
//! Reals are written in the shortest form that reads back to the same
//! `f64`. The `statistics` and `empty_shots` comment lines are optional;
//! the second keeps shots without detections, which still count for
//! normalization. Any other `#` line after the header is ignored.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use hbt_core::{DetectionEvent, Shot, Statistics};

use crate::error::{LabError, Result};

pub const HEADER: &str = "# shot x[m] y[m] t[s]";
const COLUMNS: [&str; 4] = ["shot", "x[m]", "y[m]", "t[s]"];

/// Writes shots in the order given; events keep their order within a shot.
pub fn write_events_to<W: Write>(shots: &[Shot], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{HEADER}")?;
    let tags: Vec<Statistics> = shots.iter().filter_map(|s| s.source_tag).collect();
    if let Some(&first) = tags.first() {
        if tags.len() == shots.len() && tags.iter().all(|&t| t == first) {
            writeln!(out, "# statistics={first}")?;
        }
    }
    let empty: Vec<String> = shots.iter().filter(|s| s.is_empty()).map(|s| s.shot_id.to_string()).collect();
    if !empty.is_empty() {
        writeln!(out, "# empty_shots={}", empty.join(" "))?;
    }
    for shot in shots {
        for e in &shot.events {
            writeln!(out, "{} {:e} {:e} {:e}", shot.shot_id, e.x, e.y, e.t)?;
        }
    }
    out.flush()
}

pub fn write_events(shots: &[Shot], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| LabError::io(path, e))?;
    write_events_to(shots, BufWriter::new(file)).map_err(|e| LabError::io(path, e))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> LabError {
    LabError::Parse { path: path.to_path_buf(), line, message: message.into() }
}

/// Reads an event file. Shots come back in ascending id order with events
/// sorted by arrival time. `path` is only used in error messages.
pub fn read_events_from<R: BufRead>(input: R, path: &Path) -> Result<Vec<Shot>> {
    let mut lines = input.lines().enumerate();
    match lines.next() {
        None => return Err(parse_err(path, 1, "empty file, expected header")),
        Some((_, line)) => {
            let line = line.map_err(|e| LabError::io(path, e))?;
            let cols: Vec<&str> = line.trim_start_matches('#').split_whitespace().collect();
            if !line.starts_with('#') || cols != COLUMNS {
                return Err(parse_err(
                    path,
                    1,
                    format!("unexpected columns {:?}, expected `{HEADER}`", cols),
                ));
            }
        }
    }
    let mut tag = None;
    let mut shots: BTreeMap<u64, Vec<DetectionEvent>> = BTreeMap::new();
    for (i, line) in lines {
        let n = i + 1;
        let line = line.map_err(|e| LabError::io(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(v) = comment.strip_prefix("statistics=") {
                tag = Some(v.trim().parse::<Statistics>().map_err(|e| parse_err(path, n, e.to_string()))?);
            } else if let Some(v) = comment.strip_prefix("empty_shots=") {
                for id in v.split_whitespace() {
                    let id = id.parse::<u64>().map_err(|_| parse_err(path, n, format!("bad shot id `{id}`")))?;
                    shots.entry(id).or_default();
                }
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(parse_err(path, n, format!("expected 4 columns, found {}", fields.len())));
        }
        let shot_id = fields[0]
            .parse::<u64>()
            .map_err(|_| parse_err(path, n, format!("bad shot id `{}`", fields[0])))?;
        let mut v = [0.0; 3];
        for (slot, (field, name)) in v.iter_mut().zip(fields[1..].iter().zip(&COLUMNS[1..])) {
            *slot = field
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| parse_err(path, n, format!("bad {name} value `{field}`")))?;
        }
        shots.entry(shot_id).or_default().push(DetectionEvent { shot_id, x: v[0], y: v[1], t: v[2] });
    }
    Ok(shots.into_iter().map(|(id, events)| Shot::new(id, tag, events)).collect())
}

pub fn read_events(path: &Path) -> Result<Vec<Shot>> {
    let file = File::open(path).map_err(|e| LabError::io(path, e))?;
    read_events_from(BufReader::new(file), path)
}
