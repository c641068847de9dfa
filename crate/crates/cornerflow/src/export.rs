//! Snapshot, event log, Glimm trace and diagram files.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use cornerflow_core::glimm::GlimmSnapshot;
use cornerflow_core::riemann::FrontKind;
use cornerflow_core::tracking::{FrontField, History, InteractionRecord};
use cornerflow_core::GasState;

use crate::CliError;

/// Lower bound written for the static-gas slab.
pub const STATIC_FLOOR: f64 = f64::MIN;

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// One row of a snapshot file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotRow {
    pub y_low: f64,
    pub y_high: f64,
    pub state: GasState,
}

/// Rows of the field at its current `x`, static slab first. The unbounded
/// ends are closed at `STATIC_FLOOR` and at the top front plus three mean slab widths.
pub fn snapshot_rows(field: &FrontField) -> Vec<SnapshotRow> {
    let slabs = field.slabs();
    let n = slabs.len();
    let bottom = slabs[0].y_high;
    let top = slabs[n - 1].y_low;
    let width = if n > 2 && top > bottom { (top - bottom) / (n - 2) as f64 } else { 1.0 };
    slabs
        .iter()
        .enumerate()
        .map(|(k, s)| SnapshotRow {
            y_low: if k == 0 { STATIC_FLOOR } else { s.y_low },
            y_high: if k == n - 1 { top + 3.0 * width } else { s.y_high },
            state: s.state,
        })
        .collect()
}

pub fn write_snapshot<W: Write>(rows: &[SnapshotRow], out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["y_low", "y_high", "u", "v", "p", "rho"])?;
    for r in rows {
        let s = r.state;
        w.write_record([r.y_low, r.y_high, s.u, s.v, s.p, s.rho].map(fmt_f64))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot<R: std::io::Read>(input: R) -> Result<Vec<SnapshotRow>, CliError> {
    let mut r = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let v: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| CliError::Parse(format!("{s}: {e}"))))
            .collect::<Result<_, _>>()?;
        if v.len() != 6 {
            return Err(CliError::Parse(format!("snapshot row with {} fields", v.len())));
        }
        rows.push(SnapshotRow { y_low: v[0], y_high: v[1], state: GasState::new(v[2], v[3], v[4], v[5]) });
    }
    Ok(rows)
}

/// One JSON object per line, no header.
pub fn write_events<W: Write>(events: &[InteractionRecord], mut out: W) -> Result<(), CliError> {
    for e in events {
        serde_json::to_writer(&mut out, e).map_err(|e| CliError::Io(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_events<R: BufRead>(input: R) -> Result<Vec<InteractionRecord>, CliError> {
    input
        .lines()
        .filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
        .map(|l| {
            let l = l?;
            serde_json::from_str(&l).map_err(|e| CliError::Parse(e.to_string()))
        })
        .collect()
}

pub const TRACE_HEADER: [&str; 12] = ["x", "L1", "L2", "L3", "L4", "Q0", "Q1", "Q2", "Q4", "S", "F1", "F"];

pub fn write_glimm_trace<W: Write>(trace: &[GlimmSnapshot], out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for t in trace {
        let row = [t.x, t.l[0], t.l[1], t.l[2], t.l[3], t.q[0], t.q[1], t.q[2], t.q[3], t.s, t.f1, t.f];
        w.write_record(row.map(fmt_f64))?;
    }
    w.flush()?;
    Ok(())
}

fn family_colour(kind: &FrontKind) -> &'static str {
    match kind.index() {
        1 => "#1f5fbf",
        2 => "#2a9d3a",
        3 => "#c0392b",
        _ => "#777777",
    }
}

/// SVG 1.1 wave diagram of a run: fronts coloured by family, the strong fan
/// shaded, the free boundary bold and non-physical fronts dashed.
pub fn render_diagram(history: &History) -> String {
    let x_max = history.x_end.max(1e-9);
    let (mut y_lo, mut y_hi) = (0.0f64, 0.0f64);
    for s in &history.segments {
        for y in [s.y_at(s.x_start), s.y_at(s.x_end)] {
            y_lo = y_lo.min(y);
            y_hi = y_hi.max(y);
        }
    }
    for b in &history.boundary {
        y_lo = y_lo.min(b.y_at(b.x_end)).min(b.y_start);
    }
    let pad = 0.05 * (y_hi - y_lo).max(1e-9);
    let (y_lo, y_hi) = (y_lo - pad, y_hi + pad);
    let (w, h) = (800.0, 600.0);
    let px = |x: f64| 40.0 + (w - 80.0) * x / x_max;
    let py = |y: f64| h - 40.0 - (h - 80.0) * (y - y_lo) / (y_hi - y_lo);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(svg, r##"<rect width="{w}" height="{h}" fill="#ffffff"/>"##);

    let steps = 200;
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for k in 0..=steps {
        let x = x_max * k as f64 / steps as f64;
        let ys = history
            .segments
            .iter()
            .filter(|s| s.is_strong && s.x_start <= x && x <= s.x_end)
            .map(|s| s.y_at(x));
        let (lo, hi) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
        if lo.is_finite() {
            lower.push((px(x), py(lo)));
            upper.push((px(x), py(hi)));
        }
    }
    if !upper.is_empty() {
        let pts: Vec<String> =
            upper.iter().chain(lower.iter().rev()).map(|(a, b)| format!("{a:.2},{b:.2}")).collect();
        let _ = writeln!(svg, r##"<polygon points="{}" fill="#f4c7c0" stroke="none"/>"##, pts.join(" "));
    }

    for s in &history.segments {
        let dash = if matches!(s.kind, FrontKind::NonPhysical(_)) { r#" stroke-dasharray="4 3""# } else { "" };
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="1"{dash}/>"#,
            px(s.x_start),
            py(s.y_at(s.x_start)),
            px(s.x_end),
            py(s.y_at(s.x_end)),
            family_colour(&s.kind),
        );
    }
    let mut pts = Vec::with_capacity(history.boundary.len() + 1);
    for b in &history.boundary {
        pts.push(format!("{:.2},{:.2}", px(b.x_start), py(b.y_start)));
    }
    if let Some(b) = history.boundary.last() {
        pts.push(format!("{:.2},{:.2}", px(b.x_end), py(b.y_at(b.x_end))));
    }
    let _ = writeln!(svg, r##"<polyline points="{}" fill="none" stroke="#000000" stroke-width="3"/>"##, pts.join(" "));
    let _ = writeln!(svg, "</svg>");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, 1e-300, -2.5e17, f64::MIN, 5e-324, 0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn empty_event_log_is_empty_file() {
        let mut buf = Vec::new();
        write_events(&[], &mut buf).unwrap();
        assert!(buf.is_empty());
        assert!(read_events(&buf[..]).unwrap().is_empty());
    }

    #[test]
    fn empty_trace_has_header_only() {
        let mut buf = Vec::new();
        write_glimm_trace(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x,L1,L2,L3,L4,Q0,Q1,Q2,Q4,S,F1,F\n");
    }
}
