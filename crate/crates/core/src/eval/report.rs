use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::cv::{AblationRow, CvResult};
use super::metrics::Confusion;
use super::svg;
use crate::error::{Error, Result};
use crate::selftrain::SelfTrainRun;

pub const ZERO_DIVISION_NOTE: &str = "precision, recall and F1 are 0 when undefined";
pub const MACRO_NOTE: &str = "unweighted mean over the suggestive and non-suggestive classes";

/// Something [`emit_report`] can write.
#[derive(Debug, Clone, Copy)]
pub enum Report<'a> {
    CrossValidation(&'a CvResult),
    SelfTraining(&'a SelfTrainRun),
    Ablation(&'a [AblationRow]),
}

#[derive(Serialize)]
struct Envelope<'a, R: Serialize> {
    zero_division: &'static str,
    macro_average: &'static str,
    #[serde(flatten)]
    body: &'a R,
}

/// Render a confusion matrix as a labelled TSV (rows gold, columns predicted).
pub fn confusion_tsv(c: &Confusion) -> String {
    format!(
        "gold\\predicted\t1\t0\n1\t{}\t{}\n0\t{}\t{}\n",
        c.tp, c.fn_, c.fp, c.tn
    )
}

/// Parse the output of [`confusion_tsv`].
pub fn parse_confusion_tsv(text: &str) -> Result<Confusion> {
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split('\t').collect()).collect();
    let cell = |r: usize, c: usize| -> Result<usize> {
        rows.get(r)
            .and_then(|row| row.get(c))
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| Error::InvalidArgument(format!("malformed confusion table at row {r}")))
    };
    if rows.len() != 3 || rows[1].first() != Some(&"1") || rows[2].first() != Some(&"0") {
        return Err(Error::InvalidArgument("malformed confusion table".into()));
    }
    Ok(Confusion {
        tp: cell(1, 1)?,
        fn_: cell(1, 2)?,
        fp: cell(2, 1)?,
        tn: cell(2, 2)?,
    })
}

fn write(dir: &Path, name: &str, content: impl AsRef<[u8]>) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn json<R: Serialize>(body: &R) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&Envelope {
        zero_division: ZERO_DIVISION_NOTE,
        macro_average: MACRO_NOTE,
        body,
    })?;
    s.push('\n');
    Ok(s)
}

fn prepare(out_dir: &Path) -> Result<()> {
    if out_dir.as_os_str().is_empty() {
        return Err(Error::InvalidArgument("output directory path is empty".into()));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))
}

fn emit_cv(result: &CvResult, dir: &Path, files: &mut Vec<PathBuf>) -> Result<()> {
    files.push(write(dir, "metrics.json", json(result)?)?);
    let mut total = Confusion::default();
    for fold in &result.folds {
        total.add(&fold.metrics.confusion);
        files.push(write(
            dir,
            &format!("confusion_fold{}.tsv", fold.fold_index + 1),
            confusion_tsv(&fold.metrics.confusion),
        )?);
    }
    files.push(write(
        dir,
        "confusion_heat.svg",
        svg::confusion_heat(&total, &format!("Confusion matrix, {} folds pooled", result.k)),
    )?);
    Ok(())
}

fn emit_selftrain(run: &SelfTrainRun, dir: &Path, files: &mut Vec<PathBuf>) -> Result<()> {
    files.push(write(dir, "selftrain.json", json(run)?)?);
    files.push(write(dir, "validation_curve.svg", svg::validation_curve(run))?);
    let best = &run.best().validation.confusion;
    files.push(write(dir, "confusion.tsv", confusion_tsv(best))?);
    files.push(write(
        dir,
        "confusion_heat.svg",
        svg::confusion_heat(best, &format!("Validation, iteration {}", run.best_iteration)),
    )?);
    Ok(())
}

fn ablation_table(rows: &[AblationRow]) -> String {
    let mut s = String::from(
        "variant\tmacro_precision\tmacro_recall\tmacro_f1\tmacro_f1_sd\tsuggestive_f1\n",
    );
    for r in rows {
        let m = &r.result.summary;
        s.push_str(&format!(
            "{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\n",
            r.variant,
            m.macro_precision.mean,
            m.macro_recall.mean,
            m.macro_f1.mean,
            m.macro_f1.sd,
            m.suggestive_f1.mean
        ));
    }
    s
}

/// Write report files under `out_dir` (created if missing); returns their paths.
pub fn emit_report(report: Report<'_>, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = out_dir.as_ref();
    prepare(dir)?;
    let mut files = Vec::new();
    match report {
        Report::CrossValidation(r) => emit_cv(r, dir, &mut files)?,
        Report::SelfTraining(r) => emit_selftrain(r, dir, &mut files)?,
        Report::Ablation(rows) => {
            #[derive(Serialize)]
            struct Variants<'a> {
                variants: &'a [AblationRow],
            }
            files.push(write(dir, "ablation.json", json(&Variants { variants: rows })?)?);
            files.push(write(dir, "ablation.tsv", ablation_table(rows))?);
            for row in rows {
                let sub = dir.join(row.variant.name());
                prepare(&sub)?;
                emit_cv(&row.result, &sub, &mut files)?;
            }
        }
    }
    Ok(files)
}
