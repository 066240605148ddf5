//! Plain-text model checkpoints.
//!
//! Format (line oriented, whitespace separated):
//!
//! ```text
//! FLOWCKPT 1
//! widths 4 32 32 2
//! eta 0.3
//! shape scaled 0.001 2
//! params 1282
//! <one parameter per line, shortest round-trip decimal>
//! ```
//!
//! Rust's default float formatting is shortest-round-trip, so save/load is
//! bit-exact.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::net::VelocityNet;
use super::{NoiseSchedule, NoiseShape};

const MAGIC: &str = "FLOWCKPT";
const VERSION: u32 = 1;

pub fn save_checkpoint(path: &Path, net: &VelocityNet, schedule: &NoiseSchedule) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("{MAGIC} {VERSION}\n"));
    out.push_str("widths");
    for w in net.widths() {
        out.push_str(&format!(" {w}"));
    }
    out.push('\n');
    out.push_str(&format!("eta {}\n", schedule.eta));
    match schedule.shape {
        NoiseShape::Scaled { delta, cap } => {
            out.push_str(&format!("shape scaled {delta} {cap}\n"));
        }
        NoiseShape::Constant => out.push_str("shape constant\n"),
    }
    out.push_str(&format!("params {}\n", net.param_count()));
    for p in net.params() {
        out.push_str(&format!("{p}\n"));
    }
    fs::write(path, out)?;
    Ok(())
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

pub fn load_checkpoint(path: &Path) -> Result<(VelocityNet, NoiseSchedule)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();

    let header = lines.next().ok_or_else(|| bad("empty file"))?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some(MAGIC) {
        return Err(bad("missing FLOWCKPT magic header"));
    }
    let version: u32 = parts
        .next()
        .ok_or_else(|| bad("missing version"))?
        .parse()
        .map_err(|_| bad("unparsable version"))?;
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }

    let widths_line = lines.next().ok_or_else(|| bad("missing widths"))?;
    let mut parts = widths_line.split_whitespace();
    if parts.next() != Some("widths") {
        return Err(bad("expected widths line"));
    }
    let widths: Vec<usize> = parts
        .map(|w| w.parse().map_err(|_| bad(format!("bad width '{w}'"))))
        .collect::<Result<_>>()?;

    let eta_line = lines.next().ok_or_else(|| bad("missing eta"))?;
    let mut parts = eta_line.split_whitespace();
    if parts.next() != Some("eta") {
        return Err(bad("expected eta line"));
    }
    let eta: f64 = parts
        .next()
        .ok_or_else(|| bad("missing eta value"))?
        .parse()
        .map_err(|_| bad("unparsable eta"))?;

    let shape_line = lines.next().ok_or_else(|| bad("missing shape"))?;
    let mut parts = shape_line.split_whitespace();
    if parts.next() != Some("shape") {
        return Err(bad("expected shape line"));
    }
    let shape = match parts.next() {
        Some("scaled") => {
            let delta: f64 = parts
                .next()
                .ok_or_else(|| bad("missing shape delta"))?
                .parse()
                .map_err(|_| bad("unparsable shape delta"))?;
            let cap: f64 = parts
                .next()
                .ok_or_else(|| bad("missing shape cap"))?
                .parse()
                .map_err(|_| bad("unparsable shape cap"))?;
            NoiseShape::Scaled { delta, cap }
        }
        Some("constant") => NoiseShape::Constant,
        other => return Err(bad(format!("unknown noise shape {other:?}"))),
    };

    let count_line = lines.next().ok_or_else(|| bad("missing params count"))?;
    let mut parts = count_line.split_whitespace();
    if parts.next() != Some("params") {
        return Err(bad("expected params line"));
    }
    let count: usize = parts
        .next()
        .ok_or_else(|| bad("missing params count"))?
        .parse()
        .map_err(|_| bad("unparsable params count"))?;

    let mut params = Vec::with_capacity(count);
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let p: f64 = line
            .trim()
            .parse()
            .map_err(|_| bad(format!("unparsable parameter '{line}'")))?;
        params.push(p);
    }
    if params.len() != count {
        return Err(bad(format!(
            "expected {count} parameters, found {}",
            params.len()
        )));
    }

    let net = VelocityNet::from_parts(widths, params)?;
    Ok((net, NoiseSchedule { eta, shape }))
}
