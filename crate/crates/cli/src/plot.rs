//! Render experiment CSVs as self-contained SVG line plots: one polyline
//! per method, x = sweep value, y = median `err_l2` over the trials.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone)]
pub struct SeriesLine {
    pub method: String,
    /// `(sweep_value, median err_l2)` sorted by sweep value.
    pub points: Vec<(f64, f64)>,
}

/// Extract per-method median curves from experiment CSV text.
pub fn median_lines(csv: &str) -> CliResult<Vec<SeriesLine>> {
    let mut lines = csv.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Io("empty CSV".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    let find = |name: &str| {
        cols.iter()
            .position(|c| *c == name)
            .ok_or_else(|| CliError::Io(format!("CSV lacks a {name:?} column")))
    };
    let c_value = find("sweep_value")?;
    let c_method = find("method")?;
    let c_err = find("err_l2")?;

    // method -> sweep value bits -> errors
    let mut acc: BTreeMap<String, BTreeMap<u64, Vec<f64>>> = BTreeMap::new();
    let mut data_rows = 0usize;
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(CliError::Io(format!(
                "row with {} fields, expected {}",
                fields.len(),
                cols.len()
            )));
        }
        data_rows += 1;
        let err_field = fields[c_err].trim();
        if err_field.is_empty() {
            continue; // failed solve: excluded from the medians
        }
        let value: f64 = fields[c_value]
            .trim()
            .parse()
            .map_err(|_| CliError::Io(format!("bad sweep_value {:?}", fields[c_value])))?;
        let err: f64 = err_field
            .parse()
            .map_err(|_| CliError::Io(format!("bad err_l2 {err_field:?}")))?;
        acc.entry(fields[c_method].trim().to_string())
            .or_default()
            .entry(value.to_bits())
            .or_default()
            .push(err);
    }
    if data_rows == 0 {
        return Err(CliError::Io("CSV contains no data rows".into()));
    }

    Ok(acc
        .into_iter()
        .map(|(method, by_value)| SeriesLine {
            method,
            points: by_value
                .into_iter()
                .map(|(bits, mut errs)| {
                    errs.sort_by(f64::total_cmp);
                    let mid = errs.len() / 2;
                    let med = if errs.len() % 2 == 1 {
                        errs[mid]
                    } else {
                        0.5 * (errs[mid - 1] + errs[mid])
                    };
                    (f64::from_bits(bits), med)
                })
                .collect(),
        })
        .collect())
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// Render median curves as an SVG document. With `log_log` both axes are
/// log10-scaled (nonpositive values are dropped).
pub fn render_svg(
    lines: &[SeriesLine],
    log_log: bool,
    width: u32,
    height: u32,
    x_label: &str,
) -> CliResult<String> {
    let transform = |v: f64| if log_log { v.log10() } else { v };
    let usable: Vec<(&SeriesLine, Vec<(f64, f64)>)> = lines
        .iter()
        .map(|l| {
            let pts: Vec<(f64, f64)> = l
                .points
                .iter()
                .filter(|&&(x, y)| !log_log || (x > 0.0 && y > 0.0))
                .map(|&(x, y)| (transform(x), transform(y)))
                .collect();
            (l, pts)
        })
        .collect();
    let all: Vec<(f64, f64)> = usable.iter().flat_map(|(_, p)| p.iter().copied()).collect();
    if all.is_empty() {
        return Err(CliError::Io("nothing to plot".into()));
    }
    let (mut x_lo, mut x_hi) = all
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(x, _)| {
            (lo.min(x), hi.max(x))
        });
    let (mut y_lo, mut y_hi) = all
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, y)| {
            (lo.min(y), hi.max(y))
        });
    if x_hi == x_lo {
        x_lo -= 0.5;
        x_hi += 0.5;
    }
    if y_hi == y_lo {
        y_lo -= 0.5;
        y_hi += 0.5;
    }
    let margin = 62.0;
    let w = width as f64;
    let h = height as f64;
    let px = |x: f64| margin + (x - x_lo) / (x_hi - x_lo) * (w - 2.0 * margin);
    let py = |y: f64| h - margin - (y - y_lo) / (y_hi - y_lo) * (h - 2.0 * margin);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(
        svg,
        "<rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>"
    );
    // axes
    let _ = writeln!(
        svg,
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>",
        m = margin,
        b = h - margin,
        r = w - margin
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>",
        m = margin,
        t = margin,
        b = h - margin
    );
    // ticks
    let fmt_tick = |v: f64| -> String {
        let shown = if log_log { 10f64.powf(v) } else { v };
        if shown != 0.0 && (shown.abs() >= 1e4 || shown.abs() < 1e-2) {
            format!("{shown:.1e}")
        } else {
            format!("{shown:.3}")
                .trim_end_matches('0')
                .trim_end_matches('.')
                .to_string()
        }
    };
    for i in 0..=4 {
        let fx = x_lo + (x_hi - x_lo) * i as f64 / 4.0;
        let fy = y_lo + (y_hi - y_lo) * i as f64 / 4.0;
        let _ = writeln!(
            svg,
            "<line x1=\"{x}\" y1=\"{b}\" x2=\"{x}\" y2=\"{b2}\" stroke=\"black\"/><text x=\"{x}\" y=\"{ty}\" text-anchor=\"middle\">{lab}</text>",
            x = px(fx),
            b = h - margin,
            b2 = h - margin + 5.0,
            ty = h - margin + 18.0,
            lab = fmt_tick(fx)
        );
        let _ = writeln!(
            svg,
            "<line x1=\"{m}\" y1=\"{y}\" x2=\"{m2}\" y2=\"{y}\" stroke=\"black\"/><text x=\"{tx}\" y=\"{y2}\" text-anchor=\"end\">{lab}</text>",
            m = margin,
            m2 = margin - 5.0,
            y = py(fy),
            tx = margin - 8.0,
            y2 = py(fy) + 4.0,
            lab = fmt_tick(fy)
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{x}\" y=\"{y}\" text-anchor=\"middle\">{x_label}</text>",
        x = w / 2.0,
        y = h - 16.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"18\" y=\"{y}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {y})\">median err_l2</text>",
        y = h / 2.0
    );
    // data
    for (i, (line, pts)) in usable.iter().enumerate() {
        if pts.is_empty() {
            continue;
        }
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\" points=\"{}\"/>",
            coords.join(" ")
        );
        for &(x, y) in pts {
            let _ = writeln!(
                svg,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.6\" fill=\"{color}\"/>",
                px(x),
                py(y)
            );
        }
        let ly = margin + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            "<line x1=\"{x1}\" y1=\"{ly}\" x2=\"{x2}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"1.8\"/><text x=\"{tx}\" y=\"{ty}\">{name}</text>",
            x1 = w - margin - 110.0,
            x2 = w - margin - 86.0,
            tx = w - margin - 80.0,
            ty = ly + 4.0,
            name = line.method
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
sweep_param,sweep_value,trial,method,n,d,k,k_star,sigma,err_l2,iters,termination,wall_ms,seed
n,100,0,crr,100,3,4,2,1,0.5,7,converged,1.2,11
n,100,1,crr,100,3,4,2,1,0.3,6,converged,1.1,12
n,200,0,crr,200,3,8,4,1,0.25,8,converged,2.0,13
n,200,1,crr,200,3,8,4,1,0.15,9,converged,2.1,14
n,100,0,ols,100,3,0,2,1,1.5,0,converged,0.1,11
n,100,1,ols,100,3,0,2,1,1.7,0,converged,0.1,12
n,200,0,ols,200,3,0,4,1,1.4,0,converged,0.2,13
n,200,1,ols,200,3,0,4,1,1.6,0,converged,0.2,14
";

    #[test]
    fn medians_per_method_and_value() {
        let lines = median_lines(SAMPLE).unwrap();
        assert_eq!(lines.len(), 2);
        let crr = lines.iter().find(|l| l.method == "crr").unwrap();
        assert_eq!(crr.points, vec![(100.0, 0.4), (200.0, 0.2)]);
        let ols = lines.iter().find(|l| l.method == "ols").unwrap();
        assert_eq!(ols.points, vec![(100.0, 1.6), (200.0, 1.5)]);
    }

    #[test]
    fn svg_has_one_polyline_per_method() {
        let lines = median_lines(SAMPLE).unwrap();
        let svg = render_svg(&lines, false, 800, 520, "n").unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        let loglog = render_svg(&lines, true, 800, 520, "n").unwrap();
        assert_eq!(loglog.matches("<polyline").count(), 2);
    }

    #[test]
    fn empty_data_is_an_error() {
        let only_header = SAMPLE.lines().next().unwrap().to_string() + "\n";
        assert!(median_lines(&only_header).is_err());
    }

    #[test]
    fn failed_rows_are_skipped() {
        let mut csv = SAMPLE.to_string();
        csv.push_str("n,200,2,crr,200,3,8,4,1,,0,failed,0.1,15\n");
        let lines = median_lines(&csv).unwrap();
        let crr = lines.iter().find(|l| l.method == "crr").unwrap();
        assert_eq!(crr.points[1], (200.0, 0.2));
    }
}
