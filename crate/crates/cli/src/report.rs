//! Aggregation of trace files written by `simulate`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::failure::{CliResult, Failure};
use crate::output::OutputDir;

/// Mean and sample standard deviation; the deviation is 0 for one value.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Schema {
    Fp,
    Replicator,
    Probe,
    Clri,
    Society,
    SocietySummary,
}

impl Schema {
    fn name(self) -> &'static str {
        match self {
            Schema::Fp => "fictitious-play trace",
            Schema::Replicator => "replicator trace",
            Schema::Probe => "stability probe",
            Schema::Clri => "error trace",
            Schema::Society => "society trace",
            Schema::SocietySummary => "society summary",
        }
    }
}

fn detect(header: &[String]) -> Result<Schema, String> {
    let first = header.first().map(String::as_str).unwrap_or("");
    let second = header.get(1).map(String::as_str).unwrap_or("");
    let schema = match (first, second) {
        ("t", s) if s.starts_with("action_") => Schema::Fp,
        ("step", s) if s.starts_with("share_") => Schema::Replicator,
        ("step", s) if s.starts_with("predicted_") => Schema::Clri,
        ("step", s) if s.starts_with("action_") => Schema::Society,
        ("trial", "max_distance") => Schema::Probe,
        ("run", "agent") => Schema::SocietySummary,
        _ => {
            let column = if matches!(first, "t" | "step" | "trial" | "run") {
                second
            } else {
                first
            };
            return Err(column.to_string());
        }
    };
    Ok(schema)
}

/// Metrics extracted from one file: named scalars and, for per-step
/// traces, numeric columns keyed by step.
#[derive(Default)]
struct FileStats {
    scalars: Vec<(String, f64)>,
    columns: Vec<String>,
    rows: Vec<(u64, Vec<f64>)>,
}

struct Table {
    header: Vec<String>,
    records: Vec<csv::StringRecord>,
}

fn read_table(path: &Path) -> CliResult<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let header = reader
        .headers()
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    let records = reader
        .records()
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    Ok(Table { header, records })
}

fn number(path: &Path, column: &str, row: usize, field: &str) -> CliResult<f64> {
    field.parse().map_err(|_| {
        Failure::input(format!(
            "{}: column `{column}` row {row}: `{field}` is not a number",
            path.display()
        ))
    })
}

fn field<'a>(
    path: &Path,
    record: &'a csv::StringRecord,
    k: usize,
    column: &str,
) -> CliResult<&'a str> {
    record.get(k).ok_or_else(|| {
        Failure::input(format!(
            "{}: row is missing column `{column}`",
            path.display()
        ))
    })
}

/// Numeric per-step columns `keep` (by header index) plus `final_<name>`
/// scalars from the last row.
fn series(path: &Path, table: &Table, keep: &[usize]) -> CliResult<FileStats> {
    let mut stats = FileStats {
        columns: keep.iter().map(|&k| table.header[k].clone()).collect(),
        ..FileStats::default()
    };
    for (r, rec) in table.records.iter().enumerate() {
        let step = number(
            path,
            &table.header[0],
            r + 1,
            field(path, rec, 0, &table.header[0])?,
        )?;
        let mut values = Vec::with_capacity(keep.len());
        for &k in keep {
            let col = &table.header[k];
            values.push(number(path, col, r + 1, field(path, rec, k, col)?)?);
        }
        stats.rows.push((step as u64, values));
    }
    if let Some((_, last)) = stats.rows.last() {
        for (name, v) in stats.columns.iter().zip(last) {
            stats.scalars.push((format!("final_{name}"), *v));
        }
    }
    Ok(stats)
}

fn extract(schema: Schema, path: &Path, table: &Table) -> CliResult<FileStats> {
    let h = &table.header;
    match schema {
        Schema::Replicator | Schema::Clri => {
            let keep: Vec<usize> = (1..h.len()).collect();
            series(path, table, &keep)
        }
        Schema::Fp => fp_stats(path, table),
        Schema::Probe => {
            let mut returned = Vec::new();
            let mut distance = Vec::new();
            for (r, rec) in table.records.iter().enumerate() {
                distance.push(number(path, &h[1], r + 1, field(path, rec, 1, &h[1])?)?);
                returned.push(match field(path, rec, 2, &h[2])? {
                    "true" => 1.0,
                    "false" => 0.0,
                    other => {
                        return Err(Failure::input(format!(
                            "{}: column `{}` row {}: `{other}` is not a boolean",
                            path.display(),
                            h[2],
                            r + 1
                        )))
                    }
                });
            }
            Ok(FileStats {
                scalars: vec![
                    ("returned_fraction".into(), mean_sd(&returned).0),
                    ("mean_max_distance".into(), mean_sd(&distance).0),
                    (
                        "largest_max_distance".into(),
                        distance.iter().copied().fold(0.0, f64::max),
                    ),
                ],
                ..FileStats::default()
            })
        }
        Schema::Society => society_stats(path, table),
        Schema::SocietySummary => {
            let col = |name: &str| {
                h.iter().position(|c| c == name).ok_or_else(|| {
                    Failure::input(format!("{}: missing column `{name}`", path.display()))
                })
            };
            let (level_k, mean_k) = (col("level")?, col("mean_utility")?);
            let mut by_level: Vec<(String, Vec<f64>)> = Vec::new();
            for (r, rec) in table.records.iter().enumerate() {
                let level = field(path, rec, level_k, "level")?.to_string();
                let u = number(
                    path,
                    "mean_utility",
                    r + 1,
                    field(path, rec, mean_k, "mean_utility")?,
                )?;
                push_group(&mut by_level, level, u);
            }
            Ok(FileStats {
                scalars: by_level
                    .into_iter()
                    .map(|(level, v)| (format!("mean_utility_{level}"), mean_sd(&v).0))
                    .collect(),
                ..FileStats::default()
            })
        }
    }
}

fn push_group(groups: &mut Vec<(String, Vec<f64>)>, key: String, value: f64) {
    match groups.iter_mut().find(|(k, _)| *k == key) {
        Some((_, v)) => v.push(value),
        None => groups.push((key, vec![value])),
    }
}

/// Per-level mean reward, per step and over the whole run.
fn society_stats(path: &Path, table: &Table) -> CliResult<FileStats> {
    let h = &table.header;
    // reward_<agent>_<level>
    let rewards: Vec<(usize, String)> = h
        .iter()
        .enumerate()
        .filter_map(|(k, c)| {
            let rest = c.strip_prefix("reward_")?;
            let level = rest.rsplit_once('_').map_or(rest, |(_, l)| l);
            Some((k, level.to_string()))
        })
        .collect();
    if rewards.is_empty() {
        return Err(Failure::input(format!(
            "{}: no `reward_` columns",
            path.display()
        )));
    }
    let mut levels: Vec<String> = Vec::new();
    for (_, l) in &rewards {
        if !levels.contains(l) {
            levels.push(l.clone());
        }
    }
    let mut stats = FileStats {
        columns: levels.iter().map(|l| format!("reward_{l}")).collect(),
        ..FileStats::default()
    };
    let mut totals = vec![0.0; levels.len()];
    for (r, rec) in table.records.iter().enumerate() {
        let step = number(path, &h[0], r + 1, field(path, rec, 0, &h[0])?)?;
        let mut sums = vec![0.0; levels.len()];
        let mut counts = vec![0usize; levels.len()];
        for (k, level) in &rewards {
            let li = levels.iter().position(|l| l == level).unwrap_or(0);
            sums[li] += number(path, &h[*k], r + 1, field(path, rec, *k, &h[*k])?)?;
            counts[li] += 1;
        }
        let means: Vec<f64> = sums
            .iter()
            .zip(&counts)
            .map(|(s, &c)| s / c as f64)
            .collect();
        for (t, m) in totals.iter_mut().zip(&means) {
            *t += m;
        }
        stats.rows.push((step as u64, means));
    }
    let steps = table.records.len().max(1) as f64;
    stats.scalars = levels
        .iter()
        .zip(&totals)
        .map(|(l, t)| (format!("mean_utility_{l}"), t / steps))
        .collect();
    Ok(stats)
}

/// Run length, terminal status, mean payoff per player, and beliefs by step.
fn fp_stats(path: &Path, table: &Table) -> CliResult<FileStats> {
    let h = &table.header;
    let (body, status) = match table.records.last() {
        Some(rec) if rec.get(0) == Some("status") => (
            &table.records[..table.records.len() - 1],
            rec.get(1).unwrap_or("").to_string(),
        ),
        _ => {
            return Err(Failure::input(format!(
                "{}: missing `status` footer row",
                path.display()
            )))
        }
    };
    let body_table = Table {
        header: h.clone(),
        records: body.to_vec(),
    };
    let keep: Vec<usize> = (0..h.len())
        .filter(|&k| h[k].starts_with("belief_") || h[k].starts_with("payoff_"))
        .collect();
    let mut stats = series(path, &body_table, &keep)?;
    stats
        .scalars
        .retain(|(name, _)| !name.starts_with("final_payoff_"));
    let payoff_cols: Vec<usize> = (0..keep.len())
        .filter(|&i| stats.columns[i].starts_with("payoff_"))
        .collect();
    for &i in &payoff_cols {
        let v: Vec<f64> = stats.rows.iter().map(|(_, r)| r[i]).collect();
        stats
            .scalars
            .push((format!("mean_{}", stats.columns[i]), mean_sd(&v).0));
    }
    stats.scalars.push(("steps".into(), body.len() as f64));
    stats.scalars.push((
        "converged".into(),
        f64::from(u8::from(status.starts_with("converged"))),
    ));
    stats.scalars.push((
        "cycle".into(),
        f64::from(u8::from(status.starts_with("cycle"))),
    ));
    Ok(stats)
}

fn first_difference(a: &[String], b: &[String]) -> String {
    for (x, y) in a.iter().zip(b) {
        if x != y {
            return y.clone();
        }
    }
    if b.len() > a.len() {
        b[a.len()].clone()
    } else {
        a[b.len()].clone()
    }
}

pub fn run(paths: &[PathBuf], out: &mut OutputDir, out_root: &Path) -> CliResult<()> {
    if paths.is_empty() {
        return Err(Failure::input("no trace files given"));
    }
    let targets: Vec<PathBuf> = ["report.csv", "report.dat"]
        .iter()
        .filter_map(|n| out_root.join(n).canonicalize().ok())
        .collect();
    for p in paths {
        if p.canonicalize().is_ok_and(|c| targets.contains(&c)) {
            return Err(Failure::input(format!(
                "{} would be overwritten by the report",
                p.display()
            )));
        }
    }

    let mut schema = None;
    let mut reference: Option<(PathBuf, Vec<String>)> = None;
    let mut all = Vec::with_capacity(paths.len());
    for p in paths {
        let table = read_table(p)?;
        let this = detect(&table.header).map_err(|column| {
            Failure::input(format!(
                "{}: unrecognized trace schema at column `{column}`",
                p.display()
            ))
        })?;
        match &reference {
            None => reference = Some((p.clone(), table.header.clone())),
            Some((first, header)) if *header != table.header => {
                return Err(Failure::input(format!(
                    "schema mismatch: {} differs from {} at column `{}`",
                    p.display(),
                    first.display(),
                    first_difference(header, &table.header)
                )));
            }
            Some(_) => {}
        }
        schema = Some(this);
        all.push(extract(this, p, &table)?);
    }
    let schema = schema.expect("at least one file");

    // Scalars, in first-file order.
    let mut scalar_rows: Vec<(String, f64, f64, usize)> = Vec::new();
    for (name, _) in &all[0].scalars {
        let values: Vec<f64> = all
            .iter()
            .filter_map(|s| s.scalars.iter().find(|(n, _)| n == name).map(|(_, v)| *v))
            .collect();
        let (mean, sd) = mean_sd(&values);
        scalar_rows.push((name.clone(), mean, sd, values.len()));
    }

    let mut table = String::new();
    writeln!(table, "metric,mean,sd,n").unwrap();
    for (name, mean, sd, n) in &scalar_rows {
        writeln!(table, "{name},{mean},{sd},{n}").unwrap();
    }
    out.write_bytes("report.csv", table.as_bytes())?;

    let dat = if all[0].columns.is_empty() {
        let mut s = String::from("# index metric mean sd n\n");
        for (k, (name, mean, sd, n)) in scalar_rows.iter().enumerate() {
            writeln!(s, "{k} {name} {mean} {sd} {n}").unwrap();
        }
        s
    } else {
        series_dat(&all)
    };
    out.write_bytes("report.dat", dat.as_bytes())?;

    println!("{} file(s), {}", paths.len(), schema.name());
    let width = scalar_rows
        .iter()
        .map(|r| r.0.len())
        .max()
        .unwrap_or(6)
        .max(6);
    println!(
        "{:<width$} {:>14} {:>14} {:>5}",
        "metric", "mean", "sd", "n"
    );
    for (name, mean, sd, n) in &scalar_rows {
        println!("{name:<width$} {mean:>14.6} {sd:>14.6} {n:>5}");
    }
    Ok(())
}

/// Columns aligned by step: `step`, then `<column>_mean <column>_sd` pairs,
/// then the number of files contributing to the row.
fn series_dat(all: &[FileStats]) -> String {
    let columns = &all[0].columns;
    let mut by_step: BTreeMap<u64, Vec<Vec<f64>>> = BTreeMap::new();
    for stats in all {
        for (step, values) in &stats.rows {
            by_step
                .entry(*step)
                .or_insert_with(|| vec![Vec::new(); columns.len()])
                .iter_mut()
                .zip(values)
                .for_each(|(acc, v)| acc.push(*v));
        }
    }
    let mut s = String::from("# step");
    for c in columns {
        write!(s, " {c}_mean {c}_sd").unwrap();
    }
    s.push_str(" n\n");
    for (step, cols) in &by_step {
        write!(s, "{step}").unwrap();
        for values in cols {
            let (mean, sd) = mean_sd(values);
            write!(s, " {mean} {sd}").unwrap();
        }
        writeln!(s, " {}", cols.first().map_or(0, Vec::len)).unwrap();
    }
    s
}
