//! Line charts rendered as standalone SVG from the CSV tables the runners write.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::ExperimentError;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_R: f64 = 170.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 50.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

/// Which columns of a CSV table to draw.
#[derive(Clone, Debug)]
pub struct PlotSpec {
    pub title: String,
    pub x: String,
    /// One line per y column and per distinct value of the `split` columns.
    pub y: Vec<String>,
    pub split: Vec<String>,
    pub log_x: bool,
}

impl PlotSpec {
    pub fn new(title: &str, x: &str, y: &[&str], split: &[&str]) -> Self {
        Self {
            title: title.into(),
            x: x.into(),
            y: y.iter().map(|s| s.to_string()).collect(),
            split: split.iter().map(|s| s.to_string()).collect(),
            log_x: false,
        }
    }

    pub fn log_x(mut self) -> Self {
        self.log_x = true;
        self
    }
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize, ExperimentError> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| ExperimentError::Data(format!("plot: no column '{name}'")))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 6.0).unwrap_or(10.0 * mag);
    let start = (lo / step).ceil() as i64;
    let end = (hi / step).floor() as i64;
    (start..=end).map(|k| k as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    if v.abs() >= 1e4 || (v != 0.0 && v.abs() < 1e-3) {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Renders the table in `csv_text` as an SVG line chart.
pub fn line_chart(csv_text: &str, spec: &PlotSpec) -> Result<String, ExperimentError> {
    let mut rdr = csv::Reader::from_reader(csv_text.as_bytes());
    let headers = rdr.headers().map_err(|e| ExperimentError::Data(format!("plot: {e}")))?.clone();
    let xi = column(&headers, &spec.x)?;
    let yis = spec.y.iter().map(|c| column(&headers, c)).collect::<Result<Vec<_>, _>>()?;
    let sis = spec.split.iter().map(|c| column(&headers, c)).collect::<Result<Vec<_>, _>>()?;
    let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    let num = |cell: &str| -> Result<f64, ExperimentError> {
        cell.parse().map_err(|_| ExperimentError::Data(format!("plot: '{cell}' is not a number")))
    };
    for rec in rdr.records() {
        let rec = rec.map_err(|e| ExperimentError::Data(format!("plot: {e}")))?;
        let x = num(&rec[xi])?;
        let prefix: Vec<&str> = sis.iter().map(|&i| &rec[i]).collect();
        for (yi, yname) in yis.iter().zip(&spec.y) {
            let y = num(&rec[*yi])?;
            let mut key = prefix.join(" ");
            if spec.y.len() > 1 || key.is_empty() {
                if !key.is_empty() {
                    key.push(' ');
                }
                key.push_str(yname);
            }
            series.entry(key).or_default().push((x, y));
        }
    }
    if series.is_empty() {
        return Err(ExperimentError::Data("plot: table has no rows".into()));
    }
    let tx = |x: f64| if spec.log_x { x.max(f64::MIN_POSITIVE).log10() } else { x };
    let pts = series.values().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts.filter(|(x, y)| x.is_finite() && y.is_finite()) {
        x0 = x0.min(tx(x));
        x1 = x1.max(tx(x));
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        return Err(ExperimentError::Data("plot: no finite points".into()));
    }
    y0 = y0.min(0.0);
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let pw = WIDTH - MARGIN_L - MARGIN_R;
    let ph = HEIGHT - MARGIN_T - MARGIN_B;
    let px = |x: f64| MARGIN_L + (tx(x) - x0) / (x1 - x0) * pw;
    let py = |y: f64| MARGIN_T + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
        MARGIN_L + pw / 2.0,
        escape(&spec.title)
    );
    let _ = writeln!(
        s,
        r#"<path d="M{MARGIN_L},{MARGIN_T} V{:.1} H{:.1}" fill="none" stroke="black"/>"#,
        MARGIN_T + ph,
        MARGIN_L + pw
    );
    for t in ticks(y0, y1) {
        let y = py(t);
        let _ = writeln!(
            s,
            r##"<line x1="{:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
            MARGIN_L,
            MARGIN_L + pw,
            MARGIN_L - 6.0,
            y + 4.0,
            fmt_tick(t)
        );
    }
    let xt: Vec<f64> = if spec.log_x {
        (x0.floor() as i32..=x1.ceil() as i32)
            .map(|k| 10f64.powi(k))
            .filter(|v| (x0..=x1).contains(&v.log10()))
            .collect()
    } else {
        ticks(x0, x1)
    };
    for t in xt {
        let x = px(t);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            MARGIN_T + ph,
            MARGIN_T + ph + 5.0,
            MARGIN_T + ph + 18.0,
            fmt_tick(t)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        MARGIN_L + pw / 2.0,
        HEIGHT - 10.0,
        escape(&spec.x)
    );
    for (k, (name, points)) in series.iter_mut().enumerate() {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let colour = PALETTE[k % PALETTE.len()];
        let path: Vec<String> = points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#,
            path.join(" ")
        );
        for p in &path {
            let (cx, cy) = p.split_once(',').expect("formatted pair");
            let _ = writeln!(s, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="{colour}"/>"#);
        }
        let ly = MARGIN_T + 10.0 + 18.0 * k as f64;
        let lx = WIDTH - MARGIN_R + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{colour}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 20.0,
            lx + 25.0,
            ly + 4.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE: &str = "test,hypothesis,n,rejection_rate,replicates\n\
        asym,invariant,10,0.0,100\nasym,invariant,100,0.01,100\n\
        asym,non-invariant,10,0.3,100\nasym,non-invariant,100,1.0,100\n";

    #[test]
    fn one_line_per_series() {
        let spec = PlotSpec::new("power", "n", &["rejection_rate"], &["test", "hypothesis"]).log_x();
        let svg = line_chart(TABLE, &spec).unwrap();
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("<circle").count(), 4);
        assert!(svg.contains("asym non-invariant"));
        assert_eq!(svg, line_chart(TABLE, &spec).unwrap());
    }

    #[test]
    fn missing_columns_are_errors() {
        let spec = PlotSpec::new("p", "n", &["nope"], &[]);
        assert!(line_chart(TABLE, &spec).is_err());
        assert!(line_chart("n,y\n", &PlotSpec::new("p", "n", &["y"], &[])).is_err());
    }

    #[test]
    fn tick_steps_are_round() {
        assert_eq!(ticks(0.0, 1.0), vec![0.0, 0.2, 0.4, 0.6000000000000001, 0.8, 1.0]);
        assert_eq!(fmt_tick(0.6000000000000001), "0.6");
    }
}
