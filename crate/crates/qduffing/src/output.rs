//! CSV and SVG emission.
//!
//! Every CSV starts with a `#`-prefixed header block carrying the tool
//! version, the full configuration, and the seeds, so any output file can be
//! reproduced from its own header alone. Numbers are printed in Rust's
//! shortest round-trip form, which is a pure function of the bits — combined
//! with the deterministic engines this makes identical invocations
//! byte-identical.

use std::fmt::Write as _;
use std::io::{self, Write};

use crate::lyapunov::{LyapunovEstimate, LyapunovProtocol};
use crate::model::{NumericsConfig, SystemParams};
use crate::scans::{BifurcationScan, ComplexityMap, PoincareSection};

pub const TOOL_NAME: &str = "qduffing";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Ordered key=value metadata block for one output file.
#[derive(Debug, Clone, Default)]
pub struct Header {
    entries: Vec<(String, String)>,
}

impl Header {
    pub fn new(command: &str) -> Self {
        let mut h = Self::default();
        h.push("tool", format!("{TOOL_NAME} {TOOL_VERSION}"));
        h.push("command", command);
        h
    }

    pub fn push(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push_params(&mut self, params: &SystemParams) -> &mut Self {
        self.push("beta", params.beta())
            .push("gamma", params.gamma())
            .push("g", params.g())
            .push("omega", params.omega())
    }

    pub fn push_config(&mut self, config: &NumericsConfig) -> &mut Self {
        self.push("steps_per_period", config.steps_per_period)
            .push("sde_steps_per_period", config.sde_steps_per_period)
            .push("basis_tail_tolerance", config.basis_tail_tolerance)
            .push(
                "renormalize_each_step",
                config.renormalize_each_step,
            )
    }

    pub fn push_protocol(&mut self, protocol: &LyapunovProtocol, delta0: f64) -> &mut Self {
        self.push("delta0", delta0)
            .push("reset_periods", protocol.reset_periods)
            .push("n_periods", protocol.n_periods)
            .push("n_realizations", protocol.n_realizations)
            .push("transient_periods", protocol.transient_periods)
    }

    fn write_to(&self, out: &mut impl Write) -> io::Result<()> {
        for (k, v) in &self.entries {
            writeln!(out, "# {k}={v}")?;
        }
        Ok(())
    }
}

/// Trajectory CSV: engine-specific observable columns; the `seed` header
/// entry is empty for deterministic (classical) runs.
pub fn write_trajectory_csv(
    out: &mut impl Write,
    header: &Header,
    columns: &[&str],
    rows: &[Vec<f64>],
) -> io::Result<()> {
    header.write_to(out)?;
    writeln!(out, "{}", columns.join(","))?;
    for row in rows {
        let mut line = String::new();
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            let _ = write!(line, "{v}");
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Lyapunov CSV: one row per estimate.
pub fn write_lyapunov_csv(
    out: &mut impl Write,
    header: &Header,
    estimates: &[LyapunovEstimate],
) -> io::Result<()> {
    header.write_to(out)?;
    writeln!(
        out,
        "model,beta,gamma,g,omega,lambda,K,stderr,n_periods,n_realizations,delta0,reset_interval,base_seed"
    )?;
    for e in estimates {
        let p = &e.params;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            e.model,
            p.beta(),
            p.gamma(),
            p.g(),
            p.omega(),
            e.lambda,
            e.k,
            e.stderr,
            e.protocol.n_periods,
            e.protocol.n_realizations,
            e.delta0,
            e.protocol.reset_periods as f64 * p.period(),
            e.base_seed
        )?;
    }
    Ok(())
}

/// Bifurcation CSV: gamma, period_index, x (period_index counts from the
/// first recorded period after the transient).
pub fn write_bifurcation_csv(
    out: &mut impl Write,
    header: &Header,
    scan: &BifurcationScan,
) -> io::Result<()> {
    header.write_to(out)?;
    writeln!(out, "gamma,period_index,x")?;
    for cell in &scan.cells {
        match &cell.outcome {
            Ok(xs) => {
                for (i, x) in xs.iter().enumerate() {
                    writeln!(
                        out,
                        "{},{},{x}",
                        cell.gamma,
                        scan.discard as usize + i + 1
                    )?;
                }
            }
            Err(e) => {
                writeln!(out, "# cell gamma={} failed: {e}", cell.gamma)?;
            }
        }
    }
    Ok(())
}

/// Poincaré CSV: n, x, p.
pub fn write_poincare_csv(
    out: &mut impl Write,
    header: &Header,
    section: &PoincareSection,
) -> io::Result<()> {
    header.write_to(out)?;
    writeln!(out, "n,x,p")?;
    for (n, (x, p)) in section.points.iter().enumerate() {
        writeln!(out, "{n},{x},{p}")?;
    }
    Ok(())
}

/// Complexity-map CSV: model, beta, gamma, lambda, K, stderr, seed, status.
/// Failed cells keep their row with empty numeric fields and the error in
/// `status`.
pub fn write_kmap_csv(
    out: &mut impl Write,
    header: &Header,
    map: &ComplexityMap,
) -> io::Result<()> {
    header.write_to(out)?;
    writeln!(out, "model,beta,gamma,lambda,K,stderr,seed,status")?;
    for cell in &map.cells {
        match &cell.outcome {
            Ok(e) => writeln!(
                out,
                "{},{},{},{},{},{},{},ok",
                cell.model, cell.beta, cell.gamma, e.lambda, e.k, e.stderr, cell.seed
            )?,
            Err(msg) => writeln!(
                out,
                "{},{},{},,,,{},error: {}",
                cell.model,
                cell.beta,
                cell.gamma,
                cell.seed,
                msg.replace(',', ";")
            )?,
        }
    }
    Ok(())
}

/// Minimal self-contained scatter plot.
#[derive(Debug, Clone)]
pub struct SvgScatter {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Marker radius in pixels.
    pub radius: f64,
    pub points: Vec<(f64, f64)>,
}

impl SvgScatter {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.to_string(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            radius: 1.2,
            points: Vec::new(),
        }
    }

    pub fn write_to(&self, out: &mut impl Write) -> io::Result<()> {
        const W: f64 = 800.0;
        const H: f64 = 560.0;
        const ML: f64 = 64.0; // left margin
        const MR: f64 = 16.0;
        const MT: f64 = 36.0;
        const MB: f64 = 48.0;

        let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for &(x, y) in &self.points {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if self.points.is_empty() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 - x0 < 1e-300 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if y1 - y0 < 1e-300 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let pad_x = 0.03 * (x1 - x0);
        let pad_y = 0.05 * (y1 - y0);
        x0 -= pad_x;
        x1 += pad_x;
        y0 -= pad_y;
        y1 += pad_y;

        let sx = |x: f64| ML + (x - x0) / (x1 - x0) * (W - ML - MR);
        let sy = |y: f64| H - MB - (y - y0) / (y1 - y0) * (H - MT - MB);

        writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {W} {H}\" \
             font-family=\"sans-serif\" font-size=\"12\">"
        )?;
        writeln!(out, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>")?;
        writeln!(
            out,
            "<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">{}</text>",
            (ML + W - MR) / 2.0,
            xml_escape(&self.title)
        )?;
        // Axes box.
        writeln!(
            out,
            "<rect x=\"{ML}\" y=\"{MT}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
            W - ML - MR,
            H - MT - MB
        )?;
        // Ticks: five per axis.
        for i in 0..=4 {
            let fx = x0 + (x1 - x0) * i as f64 / 4.0;
            let px = sx(fx);
            writeln!(
                out,
                "<line x1=\"{px}\" y1=\"{}\" x2=\"{px}\" y2=\"{}\" stroke=\"black\"/>",
                H - MB,
                H - MB + 4.0
            )?;
            writeln!(
                out,
                "<text x=\"{px}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
                H - MB + 17.0,
                format_tick(fx)
            )?;
            let fy = y0 + (y1 - y0) * i as f64 / 4.0;
            let py = sy(fy);
            writeln!(
                out,
                "<line x1=\"{}\" y1=\"{py}\" x2=\"{ML}\" y2=\"{py}\" stroke=\"black\"/>",
                ML - 4.0
            )?;
            writeln!(
                out,
                "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
                ML - 7.0,
                py + 4.0,
                format_tick(fy)
            )?;
        }
        writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            (ML + W - MR) / 2.0,
            H - 10.0,
            xml_escape(&self.x_label)
        )?;
        writeln!(
            out,
            "<text x=\"14\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {})\">{}</text>",
            (MT + H - MB) / 2.0,
            (MT + H - MB) / 2.0,
            xml_escape(&self.y_label)
        )?;
        for &(x, y) in &self.points {
            writeln!(
                out,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{}\" fill=\"black\" fill-opacity=\"0.55\"/>",
                sx(x),
                sy(y),
                self.radius
            )?;
        }
        writeln!(out, "</svg>")
    }
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e5).contains(&a) {
        format!("{v:.4}")
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Model;
    use crate::scans::BifurcationCell;

    #[test]
    fn header_lines_are_comments() {
        let mut h = Header::new("poincare");
        h.push_params(&SystemParams::default());
        h.push("seed", 42u64);
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &h, &["t", "x", "p"], &[vec![0.0, 1.0, 2.0]]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# tool=qduffing"));
        assert!(text.contains("# command=poincare"));
        assert!(text.contains("# beta=0.25"));
        assert!(text.contains("# seed=42"));
        assert!(text.ends_with("0,1,2\n"));
    }

    #[test]
    fn identical_data_identical_bytes() {
        let section = PoincareSection {
            model: Model::Classical,
            params: SystemParams::default(),
            seed: 3,
            points: vec![(1.0, -2.0), (0.125, 3.5)],
        };
        let render = || {
            let mut buf = Vec::new();
            let mut h = Header::new("poincare");
            h.push("seed", 3u64);
            write_poincare_csv(&mut buf, &h, &section).unwrap();
            buf
        };
        assert_eq!(render(), render());
    }

    #[test]
    fn failed_bifurcation_cells_are_marked() {
        let scan = BifurcationScan {
            model: Model::Classical,
            params_template: SystemParams::default(),
            base_seed: 0,
            periods: 12,
            discard: 10,
            cells: vec![
                BifurcationCell {
                    gamma: 0.1,
                    seed: 1,
                    outcome: Ok(vec![4.0, 4.1]),
                },
                BifurcationCell {
                    gamma: 0.2,
                    seed: 2,
                    outcome: Err("boom".into()),
                },
            ],
        };
        let mut buf = Vec::new();
        write_bifurcation_csv(&mut buf, &Header::new("bifurcation"), &scan).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("0.1,11,4"));
        assert!(text.contains("0.1,12,4.1"));
        assert!(text.contains("# cell gamma=0.2 failed: boom"));
    }

    #[test]
    fn svg_is_self_contained() {
        let mut plot = SvgScatter::new("t<e>st & more", "x", "p");
        plot.points = vec![(0.0, 0.0), (1.0, 2.0), (-1.0, -2.0)];
        let mut buf = Vec::new();
        plot.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("<svg"));
        assert!(text.trim_end().ends_with("</svg>"));
        assert!(text.contains("t&lt;e&gt;st &amp; more"));
        assert_eq!(text.matches("<circle").count(), 3);
    }
}
