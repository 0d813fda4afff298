//! Table-shaped comparisons of archives, normalized over their union.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use flowlenia::archive::{avg_pairwise_distance, bin_coverage, coverage_over_time, ArchiveIndex, Normalizer, DEFAULT_BINS};

use crate::{write_file, CliError, CliResult};

struct Column {
    label: String,
    total: usize,
    goals: Vec<Vec<f64>>,
}

fn label_of(path: &Path, i: usize) -> String {
    path.file_name().map_or_else(|| format!("archive{i}"), |n| n.to_string_lossy().into_owned())
}

/// Builds the comparison table and the coverage-over-time series.
fn build(columns: &[Column], names: &[String], stride: usize) -> CliResult<(String, Vec<(String, String)>)> {
    let sets: Vec<&[Vec<f64>]> = columns.iter().map(|c| c.goals.as_slice()).collect();
    let norm = Normalizer::union(&sets).map_err(|_| CliError::Usage("no successful discoveries to analyze".into()))?;
    let mut table = String::from("metric");
    for c in columns {
        table.push('\t');
        table.push_str(&c.label);
    }
    table.push('\n');
    let mut row = |name: &str, cells: Vec<String>| {
        table.push_str(name);
        for cell in cells {
            table.push('\t');
            table.push_str(&cell);
        }
        table.push('\n');
    };
    let normalized: Vec<Vec<Vec<f64>>> = columns.iter().map(|c| norm.apply_all(&c.goals)).collect();
    row("discoveries", columns.iter().map(|c| c.total.to_string()).collect());
    row("successful", columns.iter().map(|c| c.goals.len().to_string()).collect());
    row(
        "avg_pairwise_distance",
        normalized
            .iter()
            .map(|p| avg_pairwise_distance(p).map_or("-".into(), |d| format!("{d:.6e}")))
            .collect(),
    );
    row(
        &format!("coverage_{DEFAULT_BINS}_bins"),
        normalized.iter().map(|p| bin_coverage(p, DEFAULT_BINS).to_string()).collect(),
    );
    for (dim, name) in names.iter().enumerate() {
        row(
            &format!("mean_{name}"),
            columns
                .iter()
                .map(|c| {
                    if c.goals.is_empty() {
                        "-".into()
                    } else {
                        let sum: f64 = c.goals.iter().map(|g| g[dim]).sum();
                        format!("{:.6e}", sum / c.goals.len() as f64)
                    }
                })
                .collect(),
        );
    }
    let series = columns
        .iter()
        .zip(&normalized)
        .map(|(c, p)| {
            let mut out = String::from("discoveries\tcoverage\tavg_pairwise_distance\n");
            for point in coverage_over_time(p, DEFAULT_BINS, stride) {
                let apd = point.avg_pairwise_distance.map_or("-".into(), |d| format!("{d:.6e}"));
                let _ = writeln!(out, "{}\t{}\t{apd}", point.discoveries, point.coverage);
            }
            (c.label.clone(), out)
        })
        .collect();
    Ok((table, series))
}

fn column(archive: &ArchiveIndex, label: String) -> Column {
    Column {
        label,
        total: archive.len(),
        goals: archive.goals().into_iter().map(<[f64]>::to_vec).collect(),
    }
}

pub fn analyze_cmd(paths: &[PathBuf], out: Option<&Path>, stride: usize) -> CliResult<()> {
    let archives = paths
        .iter()
        .map(ArchiveIndex::open_read_only)
        .collect::<Result<Vec<_>, _>>()?;
    let names = archives[0].meta().goal_names.clone();
    for (a, p) in archives.iter().zip(paths).skip(1) {
        if a.meta().goal_names != names {
            return Err(CliError::Usage(format!(
                "{} explores goals {:?}, incompatible with {:?}",
                p.display(),
                a.meta().goal_names,
                names
            )));
        }
    }
    let mut labels: Vec<String> = paths.iter().enumerate().map(|(i, p)| label_of(p, i)).collect();
    for i in 0..labels.len() {
        if labels[..i].contains(&labels[i]) {
            labels[i] = format!("{}#{i}", labels[i]);
        }
    }
    let columns: Vec<Column> = archives.iter().zip(labels).map(|(a, l)| column(a, l)).collect();
    let (table, series) = build(&columns, &names, stride)?;
    print!("{table}");
    match out {
        Some(dir) => {
            write_file(&dir.join("table.tsv"), table.as_bytes())?;
            for (label, text) in &series {
                write_file(&dir.join(format!("coverage_{label}.tsv")), text.as_bytes())?;
            }
        }
        None => {
            for (label, text) in &series {
                println!("\n# coverage over time: {label}");
                print!("{text}");
            }
        }
    }
    Ok(())
}

/// Short report printed when a campaign finishes; also written next to the ledger.
pub fn print_single(archive: &ArchiveIndex) -> CliResult<()> {
    let names = archive.meta().goal_names.clone();
    let col = column(archive, label_of(archive.dir(), 0));
    if col.goals.is_empty() {
        println!("no successful discoveries; no coverage report");
        return Ok(());
    }
    let (table, series) = build(&[col], &names, 10)?;
    print!("{table}");
    write_file(&archive.dir().join("report.tsv"), table.as_bytes())?;
    write_file(&archive.dir().join("coverage.tsv"), series[0].1.as_bytes())?;
    Ok(())
}
