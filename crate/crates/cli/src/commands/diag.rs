use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use lcop_core::inference::{summarize_series, SUMMARY_MAX_LAG};

use crate::error::{CliError, CliResult};
use crate::io::{fmt_f64, read_bytes, read_numeric_csv, sha256_hex};
use crate::manifest::{OutputDir, RunManifest, MANIFEST_FILE};
use crate::DiagArgs;

pub fn run(args: &DiagArgs) -> CliResult<()> {
    let start = Instant::now();
    let bytes = read_bytes(&args.draws)?;
    let dir = args.draws.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    if dir.join(MANIFEST_FILE).exists() {
        let name = args.draws.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        RunManifest::load(dir)?.verify_output(dir, name, &bytes)?;
    } else {
        log::warn!("no manifest beside {}; its provenance cannot be checked", args.draws.display());
    }
    let (header, rows) = read_numeric_csv(&args.draws, &bytes)?;
    if rows.len() < 2 {
        return Err(CliError::Validation(format!("{}: need at least two draws", args.draws.display())));
    }
    let max_lag = SUMMARY_MAX_LAG.min(rows.len() - 1);
    let mut table_header = vec!["name".to_string(), "mean".into(), "sd".into(), "ess".into()];
    table_header.extend((1..=max_lag).map(|k| format!("acf_{k}")));
    let mut table = table_header.join(",");
    table.push('\n');
    let mut summaries = Vec::new();
    for (c, name) in header.iter().enumerate() {
        let column: Vec<f64> = rows.iter().map(|r| r[c]).collect();
        let s = summarize_series(name, &column);
        let mut cells = vec![name.clone(), fmt_f64(s.mean), fmt_f64(s.sd), s.ess.map(fmt_f64).unwrap_or_default()];
        cells.extend((0..max_lag).map(|k| s.acf.get(k).map(|&v| fmt_f64(v)).unwrap_or_default()));
        table.push_str(&cells.join(","));
        table.push('\n');
        summaries.push(s);
    }

    let mut files = OutputDir::new(&args.out);
    files.add("diag.csv", table);
    files.add_json("diag.json", &serde_json::json!({ "n_draws": rows.len(), "params": summaries }));
    let mut manifest = RunManifest::new("diag");
    manifest.add_input("draws", &args.draws, sha256_hex(&bytes));
    manifest.notes.push("ess uses Geyer's initial positive sequence, clipped to (0, G]; empty for constant columns".into());
    let timing = BTreeMap::from([("total".to_string(), start.elapsed().as_secs_f64())]);
    files.finish(manifest, &timing)
}
