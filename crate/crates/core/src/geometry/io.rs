//! Curve CSV: header `k,x,y`, one row per node in parameter order.

use std::fmt::Write as _;
use std::path::Path;

use super::Curve;
use crate::error::{Error, Result};

pub fn curve_to_csv(curve: &Curve) -> String {
    let mut out = String::from("k,x,y\n");
    for k in 0..curve.len() {
        let _ = writeln!(out, "{k},{:e},{:e}", curve.x[k], curve.y[k]);
    }
    out
}

pub fn curve_from_csv(text: &str, origin: &Path) -> Result<Curve> {
    let parse_err = |message: String| Error::Parse { path: origin.to_path_buf(), message };
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == "k,x,y" => {}
        Some(h) => return Err(parse_err(format!("expected header `k,x,y`, found `{h}`"))),
        None => return Err(parse_err("empty curve file".into())),
    }
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (row, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(parse_err(format!("row {row}: expected 3 fields")));
        }
        let k: usize = fields[0].parse().map_err(|_| parse_err(format!("row {row}: bad index")))?;
        if k != row {
            return Err(parse_err(format!("row {row}: node index {k} out of order")));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| parse_err(format!("row {row}: bad number `{s}`")));
        x.push(num(fields[1])?);
        y.push(num(fields[2])?);
    }
    Curve::new(x, y)
}

pub fn read_curve(path: &Path) -> Result<Curve> {
    curve_from_csv(&std::fs::read_to_string(path)?, path)
}

pub fn write_curve(curve: &Curve, path: &Path) -> Result<()> {
    std::fs::write(path, curve_to_csv(curve))?;
    Ok(())
}
