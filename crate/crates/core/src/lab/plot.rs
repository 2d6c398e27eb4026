use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::Table;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    /// `|S_i|` against round, from columns `i,size`.
    Layers,
    /// `L_t` against step, from a peel trace.
    Lt,
    /// `ζ̂_t` from a bin-process trace, with a fitted linear guide.
    Zeta,
    /// Mean `s_rounds` against `ξ` from a sweep, one series per side.
    Scaling,
}

impl std::str::FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "layers" => Ok(PlotKind::Layers),
            "Lt" | "lt" => Ok(PlotKind::Lt),
            "zeta" => Ok(PlotKind::Zeta),
            "scaling" => Ok(PlotKind::Scaling),
            _ => Err(Error::Schema(format!("unknown plot kind `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PlotOptions {
    pub log_x: bool,
    pub log_y: bool,
}

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 450.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Groups `(x, y)` pairs by the optional `series` column.
fn xy_series(table: &Table, x: &str, y: &str, default_label: &str) -> Result<Vec<Series>> {
    let (xc, yc) = (table.column(x)?, table.column(y)?);
    let sc = table.has("series").then(|| table.column("series")).transpose()?;
    let mut groups: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for i in 0..table.rows.len() {
        if let (Some(a), Some(b)) = (table.number(i, xc)?, table.number(i, yc)?) {
            let label = sc.map_or_else(|| default_label.to_owned(), |c| table.rows[i][c].clone());
            groups.entry(label).or_default().push((a, b));
        }
    }
    Ok(groups
        .into_iter()
        .map(|(label, points)| Series { label, points })
        .collect())
}

fn scaling_series(table: &Table) -> Result<Vec<Series>> {
    let (xc, yc, sc) = (table.column("xi")?, table.column("s_rounds")?, table.column("side")?);
    let mut groups: BTreeMap<String, BTreeMap<u64, (f64, f64, usize)>> = BTreeMap::new();
    for i in 0..table.rows.len() {
        if let (Some(x), Some(y)) = (table.number(i, xc)?, table.number(i, yc)?) {
            let e = groups
                .entry(table.rows[i][sc].clone())
                .or_default()
                .entry(x.to_bits())
                .or_insert((x, 0.0, 0));
            e.1 += y;
            e.2 += 1;
        }
    }
    Ok(groups
        .into_iter()
        .map(|(label, g)| {
            let mut points: Vec<(f64, f64)> = g.into_values().map(|(x, s, c)| (x, s / c as f64)).collect();
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            Series { label, points }
        })
        .collect())
}

fn linear_guide(points: &[(f64, f64)]) -> Option<Series> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx;
    let at = |x: f64| my + slope * (x - mx);
    let (x0, x1) = (points[0].0, points[points.len() - 1].0);
    Some(Series {
        label: format!("guide {:.4e}·t", slope),
        points: vec![(x0, at(x0)), (x1, at(x1))],
    })
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    }
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool) -> Axis {
        let vals: Vec<f64> = values
            .filter(|v| v.is_finite() && (!log || *v > 0.0))
            .map(|v| if log { v.log10() } else { v })
            .collect();
        let (mut lo, mut hi) = vals
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            (lo, hi) = (lo - 0.5, hi + 0.5);
        }
        Axis { lo, hi, log }
    }

    /// Position in `[0, 1]`, or `None` for values a log axis cannot show.
    fn frac(&self, v: f64) -> Option<f64> {
        let v = if self.log {
            if v <= 0.0 {
                return None;
            }
            v.log10()
        } else {
            v
        };
        v.is_finite().then(|| (v - self.lo) / (self.hi - self.lo))
    }

    fn ticks(&self) -> Vec<f64> {
        (0..=4)
            .map(|i| {
                let u = self.lo + (self.hi - self.lo) * i as f64 / 4.0;
                if self.log {
                    10f64.powf(u)
                } else {
                    u
                }
            })
            .collect()
    }
}

fn render(title: &str, xlabel: &str, ylabel: &str, series: &[Series], opts: PlotOptions) -> String {
    let xa = Axis::new(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)), opts.log_x);
    let ya = Axis::new(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)), opts.log_y);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |f: f64| LEFT + f * pw;
    let py = |f: f64| TOP + (1.0 - f) * ph;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + pw / 2.0,
        escape(title)
    );
    let _ = writeln!(s, r#"<g class="axes" stroke="black" fill="none">"#);
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{}" x2="{}" y2="{}"/>"#,
        TOP + ph,
        LEFT + pw,
        TOP + ph
    );
    let _ = writeln!(s, r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{}"/>"#, TOP + ph);
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g class="ticks">"#);
    for (i, t) in xa.ticks().into_iter().enumerate() {
        let x = px(i as f64 / 4.0);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/>"#,
            TOP + ph,
            TOP + ph + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#,
            TOP + ph + 18.0,
            tick_label(t)
        );
    }
    for (i, t) in ya.ticks().into_iter().enumerate() {
        let y = py(i as f64 / 4.0);
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#,
            LEFT - 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 8.0,
            y + 4.0,
            tick_label(t)
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0,
        escape(xlabel)
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{0}" text-anchor="middle" transform="rotate(-90 20 {0})">{1}</text>"#,
        TOP + ph / 2.0,
        escape(ylabel)
    );
    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = ser
            .points
            .iter()
            .filter_map(|&(x, y)| Some(format!("{:.2},{:.2}", px(xa.frac(x)?), py(ya.frac(y)?))))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="series" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
    }
    let _ = writeln!(s, r#"<g class="legend">"#);
    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let y = TOP + 10.0 + 20.0 * i as f64;
        let x = LEFT + pw + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"/>"#,
            x + 20.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{}</text>"#,
            x + 26.0,
            y + 4.0,
            escape(&ser.label)
        );
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders CSV `csv_text` as a standalone SVG document.
pub fn emit_plot(csv_text: &str, kind: PlotKind, opts: PlotOptions) -> Result<String> {
    let table = if csv_text.trim().is_empty() {
        Table::default()
    } else {
        Table::parse(csv_text)?
    };
    let empty = table.headers.is_empty();
    let svg = match kind {
        PlotKind::Layers => {
            let series = if empty {
                Vec::new()
            } else {
                xy_series(&table, "i", "size", "|S_i|")?
            };
            render("Layer sizes", "round i", "|S_i|", &series, opts)
        }
        PlotKind::Lt => {
            let series = if empty {
                Vec::new()
            } else {
                xy_series(&table, "t", "L", "L_t")?
            };
            render("Light degree", "step t", "L_t", &series, opts)
        }
        PlotKind::Zeta => {
            let mut series = if empty {
                Vec::new()
            } else {
                xy_series(&table, "t", "zetahat", "zeta_t")?
            };
            let guides: Vec<Series> = series.iter().filter_map(|s| linear_guide(&s.points)).collect();
            series.extend(guides);
            render("Mean heavy degree", "step t", "zeta", &series, opts)
        }
        PlotKind::Scaling => {
            let series = if empty { Vec::new() } else { scaling_series(&table)? };
            render("Stripping number", "xi", "mean s", &series, opts)
        }
    };
    Ok(svg)
}
