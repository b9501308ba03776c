//! CSV report battery and the report index.

pub mod svg;

pub use svg::{boxplot_svg, PlotSpec};

use std::fs;
use std::path::{Path, PathBuf};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::stats::{anova_oneway, AnovaResult};

/// Standard grouping battery: the analysis axes of the study.
pub const REPORT_GROUPINGS: [&str; 6] = ["noise", "car", "hp_fc", "lp_fc", "peak_fc", "peak_q"];

/// Extra filtered analyses in the style of the corner-frequency tables:
/// (grouping, filter column, filter value).
pub const REPORT_FILTERED: [(&str, &str, &str); 2] =
    [("lp_fc", "hp_fc", "350"), ("hp_fc", "lp_fc", "8000")];

/// One row of `anova_report.csv`.
#[derive(Debug, Clone)]
pub struct AnovaRow {
    pub metric: String,
    pub grouping: String,
    pub filter: String,
    pub result: AnovaResult,
}

/// Run one grouped ANOVA over a dataset. Returns `None` when the grouping
/// cannot be tested (fewer than two groups, or a group with fewer than two
/// finite values).
pub fn grouped_anova(
    dataset: &Dataset,
    metric: &str,
    grouping: &str,
    filters: &[(String, String)],
) -> Result<Option<(Vec<String>, AnovaResult)>> {
    let groups = dataset.group_values(metric, grouping, filters)?;
    let labels: Vec<String> = groups.iter().map(|(l, _)| l.clone()).collect();
    let values: Vec<Vec<f64>> = groups.into_iter().map(|(_, v)| v).collect();
    if values.len() < 2 || values.iter().any(|g| g.len() < 2) {
        return Ok(None);
    }
    Ok(Some((labels, anova_oneway(&values)?)))
}

pub struct ReportOutput {
    pub index_path: PathBuf,
    pub files: Vec<String>,
    pub omitted: Vec<String>,
}

/// Emit the report battery into `out_dir`: `anova_report.csv`,
/// `box_summaries.csv`, `wer_by_condition.csv` (when WER rows exist), and
/// `index.txt` describing each file plus the manifest hash.
///
/// Regenerating from unchanged inputs yields identical bytes.
pub fn emit_report(
    dataset: &Dataset,
    manifest_hash: &str,
    out_dir: impl AsRef<Path>,
) -> Result<ReportOutput> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut files = Vec::new();
    let mut omitted = Vec::new();

    let metrics = dataset.metrics();

    // anova_report.csv
    let mut anova_csv = String::from("metric,grouping,filter,p,F,df1,df2\n");
    let mut anova_rows = 0usize;
    for metric in &metrics {
        let mut runs: Vec<(String, Vec<(String, String)>, String)> = REPORT_GROUPINGS
            .iter()
            .map(|g| (g.to_string(), vec![], String::new()))
            .collect();
        for (grouping, fcol, fval) in REPORT_FILTERED {
            runs.push((
                grouping.to_string(),
                vec![(fcol.to_string(), fval.to_string())],
                format!("{fcol}={fval}"),
            ));
        }
        for (grouping, filters, filter_label) in runs {
            if let Some((_, r)) = grouped_anova(dataset, metric, &grouping, &filters)? {
                anova_csv.push_str(&format!(
                    "{metric},{grouping},{filter_label},{},{},{},{}\n",
                    r.p_value, r.f_stat, r.df_between, r.df_within
                ));
                anova_rows += 1;
            }
        }
    }
    if anova_rows > 0 {
        let path = out_dir.join("anova_report.csv");
        fs::write(&path, &anova_csv).map_err(|e| Error::io(&path, e))?;
        files.push(format!(
            "anova_report.csv: {anova_rows} grouped ANOVA rows (metric,grouping,filter,p,F,df1,df2)"
        ));
    } else {
        omitted.push("anova_report.csv: no grouping had enough data".into());
    }

    // box_summaries.csv
    let mut box_csv =
        String::from("metric,grouping,group,n,median,q1,q3,whisker_lo,whisker_hi,n_outliers\n");
    let mut box_rows = 0usize;
    for metric in &metrics {
        for grouping in REPORT_GROUPINGS {
            let groups = dataset.group_values(metric, grouping, &[])?;
            for (label, values) in groups {
                if values.is_empty() {
                    continue;
                }
                let s = crate::stats::box_summary(&values)?;
                box_csv.push_str(&format!(
                    "{metric},{grouping},{label},{},{},{},{},{},{},{}\n",
                    values.len(),
                    s.median,
                    s.q1,
                    s.q3,
                    s.whisker_lo,
                    s.whisker_hi,
                    s.outliers.len()
                ));
                box_rows += 1;
            }
        }
    }
    if box_rows > 0 {
        let path = out_dir.join("box_summaries.csv");
        fs::write(&path, &box_csv).map_err(|e| Error::io(&path, e))?;
        files.push(format!(
            "box_summaries.csv: {box_rows} per-group five-number summaries"
        ));
    } else {
        omitted.push("box_summaries.csv: dataset empty".into());
    }

    // wer_by_condition.csv
    let wer_rows: Vec<String> = dataset
        .records
        .iter()
        .filter(|r| r.metric == "wer")
        .map(|r| {
            format!(
                "{},{},{},{},{},{},{},{}\n",
                r.condition_id,
                r.car,
                r.noise,
                crate::dataset::fmt_num(r.hp_fc),
                crate::dataset::fmt_num(r.lp_fc),
                crate::dataset::fmt_num(r.peak_fc),
                crate::dataset::fmt_num(r.peak_q),
                r.value
            )
        })
        .collect();
    if !wer_rows.is_empty() {
        let mut csv =
            String::from("condition_id,car,noise,hp_fc,lp_fc,peak_fc,peak_q,wer\n");
        for row in &wer_rows {
            csv.push_str(row);
        }
        let path = out_dir.join("wer_by_condition.csv");
        fs::write(&path, &csv).map_err(|e| Error::io(&path, e))?;
        files.push(format!(
            "wer_by_condition.csv: pooled word error rate for {} conditions",
            wer_rows.len()
        ));
    } else {
        omitted.push("wer_by_condition.csv: no wer rows in the dataset".into());
    }

    // index.txt
    let mut index = String::new();
    index.push_str("report index\n");
    index.push_str(&format!("manifest_sha256: {manifest_hash}\n"));
    index.push_str(&format!(
        "dataset: {} records, metrics: {}\n",
        dataset.records.len(),
        metrics.join(" ")
    ));
    index.push_str("files:\n");
    for f in &files {
        index.push_str(&format!("  {f}\n"));
    }
    if !omitted.is_empty() {
        index.push_str("omitted:\n");
        for o in &omitted {
            index.push_str(&format!("  {o}\n"));
        }
    }
    let index_path = out_dir.join("index.txt");
    fs::write(&index_path, &index).map_err(|e| Error::io(&index_path, e))?;

    Ok(ReportOutput {
        index_path,
        files,
        omitted,
    })
}
