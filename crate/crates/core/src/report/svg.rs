//! Self-contained SVG boxplot figures.
//!
//! No plotting dependency: the byte output is a pure function of the
//! dataset and the plot spec, so figures are diffable and reproducible.

use crate::dataset::{num_aware_cmp, Dataset};
use crate::error::{Error, Result};
use crate::stats::{box_summary, BoxSummary};

#[derive(Debug, Clone)]
pub struct PlotSpec {
    pub metric: String,
    /// Dataset column laid out along the x axis.
    pub x: String,
    /// Optional second grouping drawn as colored boxes within each x group.
    pub hue: Option<String>,
    pub filters: Vec<(String, String)>,
    pub title: Option<String>,
}

const PALETTE: [&str; 8] = [
    "#4878d0", "#ee854a", "#6acc64", "#d65f5f", "#956cb4", "#8c613c", "#dc7ec0", "#797979",
];

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let s = format!("{v:.4}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

struct Cell {
    x_idx: usize,
    hue_idx: usize,
    summary: BoxSummary,
}

pub fn boxplot_svg(dataset: &Dataset, spec: &PlotSpec) -> Result<String> {
    let rows = dataset.select(&spec.metric, &spec.filters)?;

    let mut x_labels: Vec<String> = Vec::new();
    let mut hue_labels: Vec<String> = Vec::new();
    let mut values: Vec<((usize, usize), Vec<f64>)> = Vec::new();
    for r in rows {
        if !r.value.is_finite() {
            continue;
        }
        let xl = r
            .field(&spec.x)
            .ok_or_else(|| Error::Invalid(format!("unknown x column {:?}", spec.x)))?;
        let hl = match &spec.hue {
            Some(h) => r
                .field(h)
                .ok_or_else(|| Error::Invalid(format!("unknown hue column {h:?}")))?,
            None => String::new(),
        };
        let xi = match x_labels.iter().position(|l| l == &xl) {
            Some(i) => i,
            None => {
                x_labels.push(xl);
                x_labels.len() - 1
            }
        };
        let hi = match hue_labels.iter().position(|l| l == &hl) {
            Some(i) => i,
            None => {
                hue_labels.push(hl);
                hue_labels.len() - 1
            }
        };
        match values.iter_mut().find(|(k, _)| *k == (xi, hi)) {
            Some((_, v)) => v.push(r.value),
            None => values.push(((xi, hi), vec![r.value])),
        }
    }
    if values.is_empty() {
        return Err(Error::Invalid(format!(
            "no finite {:?} values left after filters; nothing to plot",
            spec.metric
        )));
    }

    // canonical label order, numeric-aware
    let mut x_order: Vec<usize> = (0..x_labels.len()).collect();
    x_order.sort_by(|&a, &b| num_aware_cmp(&x_labels[a], &x_labels[b]));
    let mut hue_order: Vec<usize> = (0..hue_labels.len()).collect();
    hue_order.sort_by(|&a, &b| num_aware_cmp(&hue_labels[a], &hue_labels[b]));

    let mut cells: Vec<Cell> = Vec::new();
    for (xo, &xi) in x_order.iter().enumerate() {
        for (ho, &hi) in hue_order.iter().enumerate() {
            if let Some((_, vals)) = values.iter().find(|(k, _)| *k == (xi, hi)) {
                cells.push(Cell {
                    x_idx: xo,
                    hue_idx: ho,
                    summary: box_summary(vals)?,
                });
            }
        }
    }
    let x_sorted: Vec<&str> = x_order.iter().map(|&i| x_labels[i].as_str()).collect();
    let hue_sorted: Vec<&str> = hue_order.iter().map(|&i| hue_labels[i].as_str()).collect();

    // geometry
    let n_x = x_sorted.len();
    let n_hue = hue_sorted.len();
    let cell_w = 34.0f64;
    let group_gap = 26.0f64;
    let group_w = n_hue as f64 * cell_w + group_gap;
    let plot_w = (n_x as f64 * group_w).max(300.0);
    let plot_h = 280.0f64;
    let margin_l = 64.0;
    let margin_r = if spec.hue.is_some() { 150.0 } else { 24.0 };
    let margin_t = 42.0;
    let margin_b = 58.0;
    let width = margin_l + plot_w + margin_r;
    let height = margin_t + plot_h + margin_b;

    // y range over whiskers and outliers
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for c in &cells {
        y_min = y_min.min(c.summary.whisker_lo);
        y_max = y_max.max(c.summary.whisker_hi);
        for &o in &c.summary.outliers {
            y_min = y_min.min(o);
            y_max = y_max.max(o);
        }
    }
    let span = y_max - y_min;
    let (y_min, y_max) = if span == 0.0 {
        (y_min - 1.0, y_max + 1.0)
    } else {
        (y_min - 0.06 * span, y_max + 0.06 * span)
    };
    let y_of = |v: f64| margin_t + plot_h * (y_max - v) / (y_max - y_min);

    // tick step at a 1/2/5 decade multiple
    let raw_step = (y_max - y_min) / 5.0;
    let mag = 10f64.powf(raw_step.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| s >= raw_step)
        .unwrap_or(mag * 10.0);
    let mut ticks = Vec::new();
    let mut t = (y_min / step).ceil() * step;
    while t <= y_max + 1e-12 * step.abs() {
        ticks.push(t);
        t += step;
    }

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" \
         viewBox=\"0 0 {width:.0} {height:.0}\">\n"
    ));
    svg.push_str(
        "<style>text{font-family:sans-serif;font-size:11px;fill:#222;}\
         .title{font-size:13px;}</style>\n",
    );
    svg.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{width:.0}\" height=\"{height:.0}\" fill=\"#ffffff\"/>\n"
    ));

    let title = spec.title.clone().unwrap_or_else(|| match &spec.hue {
        Some(h) => format!("{} by {} / {}", spec.metric, spec.x, h),
        None => format!("{} by {}", spec.metric, spec.x),
    });
    svg.push_str(&format!(
        "<text class=\"title\" x=\"{:.2}\" y=\"20\" text-anchor=\"middle\">{}</text>\n",
        margin_l + plot_w / 2.0,
        xml_escape(&title)
    ));

    for &t in &ticks {
        let y = y_of(t);
        svg.push_str(&format!(
            "<line x1=\"{margin_l:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" \
             stroke=\"#dddddd\" stroke-width=\"1\"/>\n",
            margin_l + plot_w
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>\n",
            margin_l - 6.0,
            y + 3.5,
            fmt_tick(t)
        ));
    }

    // frame
    svg.push_str(&format!(
        "<rect x=\"{margin_l:.2}\" y=\"{margin_t:.2}\" width=\"{plot_w:.2}\" \
         height=\"{plot_h:.2}\" fill=\"none\" stroke=\"#444444\" stroke-width=\"1\"/>\n"
    ));

    for c in &cells {
        let color = PALETTE[c.hue_idx % PALETTE.len()];
        let gx = margin_l + c.x_idx as f64 * group_w + group_gap / 2.0;
        let bx = gx + c.hue_idx as f64 * cell_w + 4.0;
        let bw = cell_w - 8.0;
        let cx = bx + bw / 2.0;
        let s = &c.summary;

        svg.push_str(&format!(
            "<line x1=\"{cx:.2}\" y1=\"{:.2}\" x2=\"{cx:.2}\" y2=\"{:.2}\" \
             stroke=\"#333333\" stroke-width=\"1\"/>\n",
            y_of(s.whisker_hi),
            y_of(s.whisker_lo)
        ));
        for w in [s.whisker_lo, s.whisker_hi] {
            svg.push_str(&format!(
                "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" \
                 stroke=\"#333333\" stroke-width=\"1\"/>\n",
                cx - bw / 4.0,
                y_of(w),
                cx + bw / 4.0,
                y_of(w)
            ));
        }
        svg.push_str(&format!(
            "<rect class=\"box\" x=\"{bx:.2}\" y=\"{:.2}\" width=\"{bw:.2}\" height=\"{:.2}\" \
             fill=\"{color}\" fill-opacity=\"0.75\" stroke=\"#333333\" stroke-width=\"1\"/>\n",
            y_of(s.q3),
            (y_of(s.q1) - y_of(s.q3)).max(0.0)
        ));
        svg.push_str(&format!(
            "<line x1=\"{bx:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" \
             stroke=\"#111111\" stroke-width=\"1.5\"/>\n",
            y_of(s.median),
            bx + bw,
            y_of(s.median)
        ));
        for &o in &s.outliers {
            svg.push_str(&format!(
                "<circle cx=\"{cx:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"none\" \
                 stroke=\"{color}\" stroke-width=\"1\"/>\n",
                y_of(o)
            ));
        }
    }

    for (i, label) in x_sorted.iter().enumerate() {
        let cx = margin_l + i as f64 * group_w + group_w / 2.0;
        svg.push_str(&format!(
            "<text x=\"{cx:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n",
            margin_t + plot_h + 18.0,
            xml_escape(label)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n",
        margin_l + plot_w / 2.0,
        margin_t + plot_h + 40.0,
        xml_escape(&spec.x)
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{:.2}\" text-anchor=\"middle\" \
         transform=\"rotate(-90 16 {:.2})\">{}</text>\n",
        margin_t + plot_h / 2.0,
        margin_t + plot_h / 2.0,
        xml_escape(&spec.metric)
    ));

    if let Some(hue) = &spec.hue {
        let lx = margin_l + plot_w + 16.0;
        svg.push_str(&format!(
            "<text x=\"{lx:.2}\" y=\"{:.2}\">{}</text>\n",
            margin_t + 10.0,
            xml_escape(hue)
        ));
        for (i, label) in hue_sorted.iter().enumerate() {
            let y = margin_t + 24.0 + i as f64 * 18.0;
            svg.push_str(&format!(
                "<rect x=\"{lx:.2}\" y=\"{:.2}\" width=\"12\" height=\"12\" fill=\"{}\" \
                 fill-opacity=\"0.75\" stroke=\"#333333\"/>\n",
                y - 10.0,
                PALETTE[i % PALETTE.len()]
            ));
            svg.push_str(&format!(
                "<text x=\"{:.2}\" y=\"{y:.2}\">{}</text>\n",
                lx + 17.0,
                xml_escape(label)
            ));
        }
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::SentenceRecord;

    fn rec(cond: &str, car: &str, noise: &str, idx: i64, value: f64) -> SentenceRecord {
        SentenceRecord {
            condition_id: cond.to_string(),
            car: car.into(),
            noise: noise.into(),
            hp_fc: 100.0,
            lp_fc: 8000.0,
            peak_fc: -1.0,
            peak_q: -1.0,
            sentence_idx: idx,
            metric: "snr_a".into(),
            value,
        }
    }

    fn spec(x: &str, hue: Option<&str>) -> PlotSpec {
        PlotSpec {
            metric: "snr_a".into(),
            x: x.into(),
            hue: hue.map(str::to_string),
            filters: vec![],
            title: None,
        }
    }

    #[test]
    fn single_value_gives_one_degenerate_box() {
        let ds = Dataset::new(vec![rec("c", "sedan", "idle", 0, 5.0)]);
        let svg = boxplot_svg(&ds, &spec("car", None)).unwrap();
        assert_eq!(svg.matches("class=\"box\"").count(), 1);
        assert!(svg.contains("height=\"0.00\""));
        assert!(svg.contains("<svg "));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn byte_identical_for_identical_inputs() {
        let ds = Dataset::new(vec![
            rec("a", "sedan", "idle", 0, 30.0),
            rec("a", "sedan", "idle", 1, 31.0),
            rec("b", "sedan", "city", 0, 20.0),
            rec("b", "sedan", "city", 1, 21.5),
        ]);
        let s1 = boxplot_svg(&ds, &spec("car", Some("noise"))).unwrap();
        let s2 = boxplot_svg(&ds, &spec("car", Some("noise"))).unwrap();
        assert_eq!(s1, s2);
    }

    #[test]
    fn grid_of_boxes_counts_cells() {
        let mut records = Vec::new();
        for car in ["sedan", "suv", "van"] {
            for noise in ["idle", "city", "highway"] {
                for k in 0..4 {
                    records.push(rec(
                        &format!("{car}_{noise}"),
                        car,
                        noise,
                        k,
                        k as f64 + car.len() as f64,
                    ));
                }
            }
        }
        let ds = Dataset::new(records);
        let svg = boxplot_svg(&ds, &spec("car", Some("noise"))).unwrap();
        assert_eq!(svg.matches("class=\"box\"").count(), 9);
    }

    #[test]
    fn empty_selection_is_an_error() {
        let ds = Dataset::new(vec![rec("c", "sedan", "idle", 0, 5.0)]);
        let mut s = spec("car", None);
        s.filters = vec![("noise".into(), "highway".into())];
        assert!(boxplot_svg(&ds, &s).is_err());
        s.filters.clear();
        s.metric = "wer".into();
        assert!(boxplot_svg(&ds, &s).is_err());
    }
}
