//! CSV, SVG and frame-dump files.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use glmb_core::metrics::StepAggregate;
use glmb_core::sensor::RadarFrame;

use crate::trial::{TrialFailure, TrialOutcome};

/// At most nine significant digits, plain notation where it stays short.
pub fn fmt9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let e = x.abs().log10().floor() as i32;
    if (-4..9).contains(&e) {
        let s = format!("{:.*}", (8 - e).max(0) as usize, x);
        let s = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        };
        if s == "-0" { "0".into() } else { s }
    } else {
        format!("{x:.8e}")
    }
}

fn write_lines(path: &Path, header: &str, rows: impl Iterator<Item = String>) -> io::Result<()> {
    let mut f = BufWriter::new(fs::File::create(path)?);
    writeln!(f, "{header}")?;
    for r in rows {
        writeln!(f, "{r}")?;
    }
    f.flush()
}

pub fn write_ospa_csv(path: &Path, agg: &[StepAggregate]) -> io::Result<()> {
    write_lines(
        path,
        "time,mean_ospa,se_ospa",
        agg.iter()
            .enumerate()
            .map(|(k, a)| format!("{k},{},{}", fmt9(a.ospa.mean), fmt9(a.ospa.se))),
    )
}

pub fn write_cardinality_csv(path: &Path, agg: &[StepAggregate]) -> io::Result<()> {
    write_lines(
        path,
        "time,true_n,mean_est_n,se_est_n",
        agg.iter().enumerate().map(|(k, a)| {
            format!(
                "{k},{},{},{}",
                fmt9(a.true_card.mean),
                fmt9(a.est_card.mean),
                fmt9(a.est_card.se)
            )
        }),
    )
}

pub fn write_tracks_csv(path: &Path, outcomes: &[TrialOutcome]) -> io::Result<()> {
    let rows = outcomes.iter().flat_map(|o| {
        o.steps.iter().enumerate().flat_map(move |(k, s)| {
            s.tracks.iter().map(move |t| {
                let m = t.kinematic_mean;
                format!(
                    "{},{k},{},{},{},{},{},{},{}",
                    o.trial,
                    t.label.birth_time,
                    t.label.index,
                    fmt9(m[0]),
                    fmt9(m[2]),
                    fmt9(m[1]),
                    fmt9(m[3]),
                    fmt9(m[4])
                )
            })
        })
    });
    write_lines(path, "trial,time,label_birth,label_index,px,py,vx,vy,amp", rows)
}

pub fn write_failures_csv(path: &Path, failures: &[TrialFailure]) -> io::Result<()> {
    write_lines(
        path,
        "trial,time,message",
        failures
            .iter()
            .map(|f| format!("{},{},\"{}\"", f.trial, f.step, f.message.replace('"', "'"))),
    )
}

/// Little-endian `u32` dimensions (range, azimuth, Doppler) followed by the
/// powers as `f64` in C order.
pub fn write_frame_bin(path: &Path, frame: &RadarFrame) -> io::Result<()> {
    let mut f = BufWriter::new(fs::File::create(path)?);
    for d in frame.dims() {
        f.write_all(&(d as u32).to_le_bytes())?;
    }
    for p in frame.powers() {
        f.write_all(&p.to_le_bytes())?;
    }
    f.flush()
}

pub fn read_frame_bin(path: &Path) -> io::Result<RadarFrame> {
    let bytes = fs::read(path)?;
    let bad = || io::Error::new(io::ErrorKind::InvalidData, "malformed frame dump");
    if bytes.len() < 12 {
        return Err(bad());
    }
    let dim = |i: usize| u32::from_le_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap()) as usize;
    let dims = [dim(0), dim(1), dim(2)];
    let body = &bytes[12..];
    if body.len() != 8 * dims[0] * dims[1] * dims[2] {
        return Err(bad());
    }
    let powers = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    RadarFrame::new(dims, powers).map_err(|_| bad())
}

pub fn write_frame_csv(path: &Path, frame: &RadarFrame) -> io::Result<()> {
    let [nr, na, nd] = frame.dims();
    let rows = (0..nr).flat_map(move |r| {
        (0..na).flat_map(move |a| (0..nd).map(move |d| format!("{r},{a},{d},{}", fmt9(frame.get(r, a, d)))))
    });
    write_lines(path, "range_cell,azimuth_cell,doppler_cell,power", rows)
}

/// Reads a numeric CSV with a header line.
pub fn read_csv(path: &Path) -> io::Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, "empty csv"))?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split(',')
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("{v}: {e}")))
                })
                .collect()
        })
        .collect::<io::Result<_>>()?;
    Ok((header, rows))
}

/// One line of a plot.
pub struct Series<'a> {
    pub name: &'a str,
    pub points: Vec<(f64, f64)>,
    pub color: &'a str,
    pub dashed: bool,
    /// Half-width of a shaded band around each point.
    pub band: Option<Vec<f64>>,
}

/// A static line chart.
pub fn svg_chart(title: &str, x_label: &str, y_label: &str, series: &[Series<'_>]) -> String {
    let (w, h) = (640.0, 360.0);
    let (l, r, t, b) = (60.0, 20.0, 30.0, 45.0);
    let all = series.iter().flat_map(|s| {
        let band = s.band.clone().unwrap_or_else(|| vec![0.0; s.points.len()]);
        s.points
            .iter()
            .zip(band)
            .flat_map(|(p, e)| [(p.0, p.1 - e), (p.0, p.1 + e)])
            .collect::<Vec<_>>()
    });
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64, f64::NEG_INFINITY);
    for (x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y1) = (0.0, 1.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    y1 *= 1.05;
    let sx = |x: f64| l + (x - x0) / (x1 - x0) * (w - l - r);
    let sy = |y: f64| h - b - (y - y0) / (y1 - y0) * (h - t - b);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{title}</text>"#, w / 2.0);
    let _ = writeln!(
        s,
        r#"<line x1="{l}" y1="{}" x2="{}" y2="{}" stroke="black"/><line x1="{l}" y1="{t}" x2="{l}" y2="{}" stroke="black"/>"#,
        h - b,
        w - r,
        h - b,
        h - b
    );
    for i in 0..=5 {
        let fx = x0 + (x1 - x0) * i as f64 / 5.0;
        let fy = y0 + (y1 - y0) * i as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text><text x="{}" y="{:.1}" text-anchor="end">{}</text>"#,
            sx(fx),
            h - b + 16.0,
            fmt_tick(fx),
            l - 6.0,
            sy(fy) + 4.0,
            fmt_tick(fy)
        );
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#, (l + w - r) / 2.0, h - 8.0);
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{y_label}</text>"#,
        (t + h - b) / 2.0,
        (t + h - b) / 2.0
    );
    for (i, se) in series.iter().enumerate() {
        if let Some(band) = &se.band {
            let upper = se.points.iter().zip(band).map(|(p, e)| format!("{:.2},{:.2}", sx(p.0), sy(p.1 + e)));
            let lower = se
                .points
                .iter()
                .zip(band)
                .rev()
                .map(|(p, e)| format!("{:.2},{:.2}", sx(p.0), sy(p.1 - e)));
            let pts: Vec<String> = upper.chain(lower).collect();
            let _ = writeln!(
                s,
                r#"<polygon points="{}" fill="{}" fill-opacity="0.2" stroke="none"/>"#,
                pts.join(" "),
                se.color
            );
        }
        let pts: Vec<String> = se.points.iter().map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1))).collect();
        let dash = if se.dashed { r#" stroke-dasharray="5,4""# } else { "" };
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"{dash}/>"#,
            pts.join(" "),
            se.color
        );
        let ly = t + 14.0 + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="1.5"{dash}/><text x="{}" y="{}">{}</text>"#,
            w - r - 150.0,
            w - r - 125.0,
            se.color,
            w - r - 120.0,
            ly + 4.0,
            se.name
        );
    }
    s.push_str("</svg>\n");
    s
}

fn fmt_tick(v: f64) -> String {
    if v.abs() >= 100.0 || v == v.round() {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

/// Writes `cardinality.svg` and `ospa.svg` from the CSVs in `dir`.
pub fn plot_dir(dir: &Path) -> io::Result<()> {
    let (_, card) = read_csv(&dir.join("cardinality.csv"))?;
    let (_, ospa) = read_csv(&dir.join("ospa.csv"))?;
    let col = |rows: &[Vec<f64>], i: usize| rows.iter().map(|r| (r[0], r[i])).collect::<Vec<_>>();
    let svg = svg_chart(
        "Cardinality",
        "time step",
        "number of targets",
        &[
            Series {
                name: "truth",
                points: col(&card, 1),
                color: "black",
                dashed: true,
                band: None,
            },
            Series {
                name: "estimate (mean ± SE)",
                points: col(&card, 2),
                color: "#1f77b4",
                dashed: false,
                band: Some(card.iter().map(|r| r[3]).collect()),
            },
        ],
    );
    fs::write(dir.join("cardinality.svg"), svg)?;
    let svg = svg_chart(
        "OSPA",
        "time step",
        "OSPA (m)",
        &[Series {
            name: "mean ± SE",
            points: col(&ospa, 1),
            color: "#d62728",
            dashed: false,
            band: Some(ospa.iter().map(|r| r[2]).collect()),
        }],
    );
    fs::write(dir.join("ospa.svg"), svg)
}
