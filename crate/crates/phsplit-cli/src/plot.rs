//! Minimal static SVG plots: a log-log error chart for convergence
//! studies and a linear time-series chart for dissipation traces.

use phsplit::Real;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 160.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

pub struct Series {
    pub label: String,
    pub points: Vec<(Real, Real)>,
}

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        let span = (self.x_max - self.x_min).max(f64::MIN_POSITIVE);
        MARGIN_L + (v - self.x_min) / span * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn y(&self, v: f64) -> f64 {
        let span = (self.y_max - self.y_min).max(f64::MIN_POSITIVE);
        HEIGHT - MARGIN_B - (v - self.y_min) / span * (HEIGHT - MARGIN_T - MARGIN_B)
    }
}

fn header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        (WIDTH - MARGIN_R + MARGIN_L) / 2.0,
        escape(title)
    )
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes_box(frame: &Frame) -> String {
    format!(
        "<rect x=\"{}\" y=\"{MARGIN_T}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        MARGIN_L,
        frame.x(frame.x_max) - MARGIN_L,
        HEIGHT - MARGIN_T - MARGIN_B
    )
}

fn legend(labels: &[String]) -> String {
    let mut out = String::new();
    for (i, label) in labels.iter().enumerate() {
        let y = MARGIN_T + 14.0 + i as f64 * 18.0;
        let x = WIDTH - MARGIN_R + 12.0;
        let color = PALETTE[i % PALETTE.len()];
        out.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"{color}\" stroke-width=\"2\"/>\n\
             <text x=\"{}\" y=\"{}\">{}</text>\n",
            x + 24.0,
            x + 30.0,
            y + 4.0,
            escape(label)
        ));
    }
    out
}

fn polyline(points: &[(f64, f64)], frame: &Frame, color: &str) -> String {
    let coords: Vec<String> = points
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", frame.x(x), frame.y(y)))
        .collect();
    let mut out = format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
        coords.join(" ")
    );
    for &(x, y) in points {
        out.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>\n",
            frame.x(x),
            frame.y(y)
        ));
    }
    out
}

fn axis_labels(xlabel: &str, ylabel: &str) -> String {
    format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n\
         <text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        (WIDTH - MARGIN_R + MARGIN_L) / 2.0,
        HEIGHT - 14.0,
        escape(xlabel),
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(ylabel)
    )
}

/// Log-log chart; every point must have positive coordinates.
pub fn loglog(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let logged: Vec<(String, Vec<(f64, f64)>)> = series
        .iter()
        .map(|s| {
            let pts = s
                .points
                .iter()
                .filter(|&&(x, y)| x > 0.0 && y > 0.0)
                .map(|&(x, y)| (x.log10(), y.log10()))
                .collect();
            (s.label.clone(), pts)
        })
        .collect();
    let all: Vec<(f64, f64)> = logged.iter().flat_map(|(_, p)| p.iter().copied()).collect();
    let frame = bounds(&all);

    let mut svg = header(title);
    svg.push_str(&axes_box(&frame));
    // decade ticks
    for exp in (frame.x_min.floor() as i64)..=(frame.x_max.ceil() as i64) {
        let v = exp as f64;
        if v < frame.x_min || v > frame.x_max {
            continue;
        }
        let x = frame.x(v);
        svg.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"#cccccc\"/>\n\
             <text x=\"{x:.2}\" y=\"{}\" text-anchor=\"middle\">1e{exp}</text>\n",
            MARGIN_T,
            HEIGHT - MARGIN_B,
            HEIGHT - MARGIN_B + 16.0
        ));
    }
    for exp in (frame.y_min.floor() as i64)..=(frame.y_max.ceil() as i64) {
        let v = exp as f64;
        if v < frame.y_min || v > frame.y_max {
            continue;
        }
        let y = frame.y(v);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y:.2}\" x2=\"{}\" y2=\"{y:.2}\" stroke=\"#cccccc\"/>\n\
             <text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">1e{exp}</text>\n",
            MARGIN_L,
            WIDTH - MARGIN_R,
            MARGIN_L - 6.0,
            y + 4.0
        ));
    }
    for (i, (_, pts)) in logged.iter().enumerate() {
        svg.push_str(&polyline(pts, &frame, PALETTE[i % PALETTE.len()]));
    }
    svg.push_str(&legend(&logged.iter().map(|(l, _)| l.clone()).collect::<Vec<_>>()));
    svg.push_str(&axis_labels(xlabel, ylabel));
    svg.push_str("</svg>\n");
    svg
}

/// Linear time-series chart.
pub fn timeseries(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    let frame = bounds(&all);

    let mut svg = header(title);
    svg.push_str(&axes_box(&frame));
    for k in 0..=5 {
        let fx = frame.x_min + (frame.x_max - frame.x_min) * k as f64 / 5.0;
        let fy = frame.y_min + (frame.y_max - frame.y_min) * k as f64 / 5.0;
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{}\" text-anchor=\"middle\">{fx:.3}</text>\n",
            frame.x(fx),
            HEIGHT - MARGIN_B + 16.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">{fy:.3e}</text>\n",
            MARGIN_L - 6.0,
            frame.y(fy) + 4.0
        ));
    }
    if frame.y_min < 0.0 && frame.y_max > 0.0 {
        let y0 = frame.y(0.0);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y0:.2}\" x2=\"{}\" y2=\"{y0:.2}\" stroke=\"#999999\" stroke-dasharray=\"4 3\"/>\n",
            MARGIN_L,
            WIDTH - MARGIN_R
        ));
    }
    for (i, s) in series.iter().enumerate() {
        svg.push_str(&polyline(&s.points, &frame, PALETTE[i % PALETTE.len()]));
    }
    svg.push_str(&legend(&series.iter().map(|s| s.label.clone()).collect::<Vec<_>>()));
    svg.push_str(&axis_labels(xlabel, ylabel));
    svg.push_str("</svg>\n");
    svg
}

fn bounds(points: &[(f64, f64)]) -> Frame {
    let mut frame = Frame {
        x_min: f64::INFINITY,
        x_max: f64::NEG_INFINITY,
        y_min: f64::INFINITY,
        y_max: f64::NEG_INFINITY,
    };
    for &(x, y) in points {
        frame.x_min = frame.x_min.min(x);
        frame.x_max = frame.x_max.max(x);
        frame.y_min = frame.y_min.min(y);
        frame.y_max = frame.y_max.max(y);
    }
    if !frame.x_min.is_finite() {
        frame = Frame {
            x_min: 0.0,
            x_max: 1.0,
            y_min: 0.0,
            y_max: 1.0,
        };
    }
    if frame.x_min == frame.x_max {
        frame.x_max += 1.0;
    }
    if frame.y_min == frame.y_max {
        frame.y_max += 1.0;
    }
    frame
}
