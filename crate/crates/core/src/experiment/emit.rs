//! Result files. Every metric file is a pure function of the results, so
//! identical runs produce identical bytes; wall-clock times go to a separate
//! `timing.json`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::runner::{AblationResult, MeanStd, RunResult, SweepResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    /// `result.json`
    Json,
    /// `history.csv`
    Csv,
    /// `plotdata/<metric>_seed<seed>.tsv`
    Plotdata,
}

impl OutputFormat {
    pub const ALL: [OutputFormat; 3] = [OutputFormat::Json, OutputFormat::Csv, OutputFormat::Plotdata];
}

fn write(path: &Path, body: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const HISTORY_COLUMNS: [&str; 10] =
    ["seed", "epoch", "lr", "loss", "train_acc", "val_acc", "test_acc", "num_pseudo", "tc", "pseudo_acc"];

fn history_csv(result: &RunResult) -> String {
    let mut out = HISTORY_COLUMNS.join(",");
    out.push('\n');
    for s in &result.seeds {
        for r in &s.history {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                s.seed,
                r.epoch,
                r.lr,
                r.loss,
                r.train_acc,
                r.val_acc,
                opt(r.test_acc),
                r.num_pseudo,
                r.tc,
                opt(r.pseudo_acc)
            );
        }
    }
    out
}

/// Writes the requested files for one experiment into `dir`.
pub fn emit_results(result: &RunResult, dir: &Path, formats: &[OutputFormat]) -> Result<()> {
    if result.seeds.is_empty() {
        return Err(Error::Contract("no results to emit".into()));
    }
    for format in formats {
        match format {
            OutputFormat::Json => write(&dir.join("result.json"), &(serde_json::to_string_pretty(result)? + "\n"))?,
            OutputFormat::Csv => write(&dir.join("history.csv"), &history_csv(result))?,
            OutputFormat::Plotdata => {
                type Series = fn(&crate::train::EpochRecord) -> Option<f64>;
                let series: [(&str, Series); 7] = [
                    ("loss", |r| Some(r.loss)),
                    ("train_acc", |r| Some(r.train_acc)),
                    ("val_acc", |r| Some(r.val_acc)),
                    ("test_acc", |r| r.test_acc),
                    ("num_pseudo", |r| Some(r.num_pseudo as f64)),
                    ("tc", |r| Some(r.tc)),
                    ("pseudo_acc", |r| r.pseudo_acc),
                ];
                for s in &result.seeds {
                    for (name, f) in series {
                        let mut body = format!("epoch\t{name}\n");
                        for r in &s.history {
                            let _ = writeln!(body, "{}\t{}", r.epoch, opt(f(r)));
                        }
                        write(&dir.join("plotdata").join(format!("{name}_seed{}.tsv", s.seed)), &body)?;
                    }
                }
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct Timing {
    seed: u64,
    wall_clock_secs: f64,
}

/// All files for one experiment, plus `timing.json`.
pub fn write_run(result: &RunResult, dir: &Path) -> Result<()> {
    emit_results(result, dir, &OutputFormat::ALL)?;
    let timing: Vec<Timing> =
        result.seeds.iter().map(|s| Timing { seed: s.seed, wall_clock_secs: s.wall_clock_secs }).collect();
    write(&dir.join("timing.json"), &(serde_json::to_string_pretty(&timing)? + "\n"))
}

fn stat_cells(m: Option<MeanStd>) -> String {
    match m {
        Some(m) => format!("{},{}", m.mean, m.std),
        None => ",".into(),
    }
}

/// `sweep.csv` (one row per S), `sweep.json`, and one
/// `plotdata/sweep_<method>.tsv` series per method.
pub fn write_sweep(sweep: &SweepResult, dir: &Path) -> Result<()> {
    let methods: Vec<String> = sweep.config.sweep_methods.iter().map(|m| m.to_string()).collect();
    let mut csv = String::from("s,homophily");
    for m in &methods {
        let _ = write!(csv, ",{m}_test_acc_mean,{m}_test_acc_std");
    }
    csv.push('\n');
    for p in &sweep.points {
        let _ = write!(csv, "{},{}", p.s, p.homophily);
        for (_, r) in &p.results {
            let _ = write!(csv, ",{}", stat_cells(*r));
        }
        csv.push('\n');
    }
    write(&dir.join("sweep.csv"), &csv)?;
    write(&dir.join("sweep.json"), &(serde_json::to_string_pretty(sweep)? + "\n"))?;
    for (k, m) in methods.iter().enumerate() {
        let mut body = String::from("s\thomophily\ttest_acc_mean\ttest_acc_std\n");
        for p in &sweep.points {
            let (mean, std) = p.results[k].1.map(|r| (r.mean.to_string(), r.std.to_string())).unwrap_or_default();
            let _ = writeln!(body, "{}\t{}\t{mean}\t{std}", p.s, p.homophily);
        }
        write(&dir.join("plotdata").join(format!("sweep_{m}.tsv")), &body)?;
    }
    Ok(())
}

/// `ablation.csv` and `ablation.json` side by side, plus a subdirectory
/// with the full files of each variant.
pub fn write_ablation(ab: &AblationResult, dir: &Path) -> Result<()> {
    let mut csv = String::from(
        "variant,train_acc_mean,train_acc_std,val_acc_mean,val_acc_std,test_acc_mean,test_acc_std,gd_test_mean,gd_test_std\n",
    );
    for (name, run) in &ab.variants {
        let a = &run.aggregate;
        let _ = writeln!(
            csv,
            "{name},{},{},{},{}",
            stat_cells(a.train_acc),
            stat_cells(a.val_acc),
            stat_cells(a.test_acc),
            stat_cells(a.gd_test)
        );
        write_run(run, &dir.join(name))?;
    }
    write(&dir.join("ablation.csv"), &csv)?;
    write(&dir.join("ablation.json"), &(serde_json::to_string_pretty(ab)? + "\n"))
}
