//! Learning-curve SVG from a sweep CSV: per arch, the mean test accuracy
//! over trials as a line with a min–max band.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 28.0;
const BOTTOM: f64 = 52.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub samples_per_class: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

/// Group rows by arch (in order of first appearance) and samples per class.
pub fn summarize(csv_text: &str) -> Result<Vec<(String, Vec<CurvePoint>)>> {
    let bad = |d: String| Error::format("sweep CSV", d);
    let declared = csv_text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .flat_map(|l| l.split_whitespace())
        .find_map(|kv| kv.strip_prefix("rows="))
        .map(|v| v.parse::<usize>().map_err(|_| bad(format!("bad rows={v}"))))
        .transpose()?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(false)
        .from_reader(csv_text.as_bytes());
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| bad(format!("missing column {name}")))
    };
    let (ca, cn, cacc) = (col("arch")?, col("samples_per_class")?, col("test_accuracy")?);
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    let mut count = 0;
    for rec in reader.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let arch = rec[ca].to_string();
        let n: usize = rec[cn].parse().map_err(|_| bad(format!("bad samples_per_class {:?}", &rec[cn])))?;
        let acc: f64 = rec[cacc].parse().map_err(|_| bad(format!("bad test_accuracy {:?}", &rec[cacc])))?;
        if !(0.0..=1.0).contains(&acc) {
            return Err(bad(format!("accuracy {acc} outside [0, 1]")));
        }
        let ai = match order.iter().position(|a| *a == arch) {
            Some(i) => i,
            None => {
                order.push(arch);
                order.len() - 1
            }
        };
        groups.entry((ai, n)).or_default().push(acc);
        count += 1;
    }
    if let Some(d) = declared {
        if d != count {
            return Err(bad(format!("header declares {d} rows, found {count}")));
        }
    }
    if count == 0 {
        return Err(bad("no data rows".into()));
    }
    Ok(order
        .into_iter()
        .enumerate()
        .map(|(ai, arch)| {
            let pts = groups
                .range((ai, 0)..(ai + 1, 0))
                .map(|(&(_, n), v)| CurvePoint {
                    samples_per_class: n,
                    mean: v.iter().sum::<f64>() / v.len() as f64,
                    min: v.iter().copied().fold(f64::INFINITY, f64::min),
                    max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    count: v.len(),
                })
                .collect();
            (arch, pts)
        })
        .collect())
}

pub fn render_svg(curves: &[(String, Vec<CurvePoint>)]) -> String {
    let xs: Vec<usize> = {
        let mut v: Vec<usize> = curves.iter().flat_map(|(_, p)| p.iter().map(|c| c.samples_per_class)).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let (x0, x1) = (xs[0] as f64, *xs.last().unwrap() as f64);
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let sx = |n: usize| {
        if x1 > x0 {
            LEFT + (n as f64 - x0) / (x1 - x0) * pw
        } else {
            LEFT + pw / 2.0
        }
    };
    let sy = |a: f64| TOP + (1.0 - a) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    for i in 0..=10 {
        let a = i as f64 / 10.0;
        let y = sy(a);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/><text x="{:.2}" y="{:.2}" text-anchor="end">{a:.1}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            y + 4.0
        );
    }
    for &n in &xs {
        let x = sx(n);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#000"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{n}</text>"##,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 18.0
        );
    }
    let _ = writeln!(
        s,
        r##"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="#000"/>"##
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">samples per class</text>"#,
        LEFT + pw / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">test accuracy</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );
    for (i, (arch, pts)) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut band: Vec<String> = pts
            .iter()
            .map(|p| format!("{:.2},{:.2}", sx(p.samples_per_class), sy(p.max)))
            .collect();
        band.extend(pts.iter().rev().map(|p| format!("{:.2},{:.2}", sx(p.samples_per_class), sy(p.min))));
        let _ = writeln!(
            s,
            r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            band.join(" ")
        );
        let line: Vec<String> = pts
            .iter()
            .map(|p| format!("{:.2},{:.2}", sx(p.samples_per_class), sy(p.mean)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            line.join(" ")
        );
        for p in pts {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                sx(p.samples_per_class),
                sy(p.mean)
            );
        }
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = LEFT + pw + 16.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 24.0,
            lx + 30.0,
            ly + 4.0,
            escape(arch)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Read a sweep CSV and write its learning-curve SVG.
pub fn plot_csv(input: impl AsRef<Path>, output: impl AsRef<Path>) -> Result<()> {
    let (input, output) = (input.as_ref(), output.as_ref());
    let text = fs::read_to_string(input).map_err(|e| Error::io(input, e))?;
    let svg = render_svg(&summarize(&text)?);
    fs::write(output, svg).map_err(|e| Error::io(output, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "# preset=x rows=4\narch,samples_per_class,test_accuracy\nmini,5,0.5\nmini,5,0.7\nmini,10,0.9\nsmall-cnn,5,0.6\n";

    #[test]
    fn summary_statistics() {
        let c = summarize(CSV).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].0, "mini");
        assert_eq!(c[0].1[0].count, 2);
        assert!((c[0].1[0].mean - 0.6).abs() < 1e-12);
        assert_eq!((c[0].1[0].min, c[0].1[0].max), (0.5, 0.7));
        assert_eq!(c[1].1.len(), 1);
    }

    #[test]
    fn degenerate_band() {
        let c = summarize("arch,samples_per_class,test_accuracy\na,5,0.5\na,5,0.5\n").unwrap();
        let p = &c[0].1[0];
        assert_eq!((p.min, p.mean, p.max), (0.5, 0.5, 0.5));
        let svg = render_svg(&c);
        assert!(svg.contains("<polyline"));
        assert_eq!(svg, render_svg(&c));
    }

    #[test]
    fn malformed_input() {
        assert!(summarize("arch,samples_per_class,test_accuracy\na,5\n").is_err());
        assert!(summarize("# rows=3\narch,samples_per_class,test_accuracy\na,5,0.5\n").is_err());
        assert!(summarize("arch,samples,test_accuracy\na,5,0.5\n").is_err());
        assert!(summarize("arch,samples_per_class,test_accuracy\na,5,1.5\n").is_err());
        assert!(summarize("arch,samples_per_class,test_accuracy\n").is_err());
    }
}
