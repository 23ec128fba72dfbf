pub mod avgprob;
pub mod compare;
pub mod diag;
pub mod effects;
pub mod fit;
pub mod simulate;

use std::path::Path;

use lcop_core::samplers::{PosteriorSample, SamplerKind};

use crate::config::ModelColumns;
use crate::error::{CliError, CliResult};
use crate::io::{load_dataset, parse_draws, read_bytes, LoadedData};
use crate::manifest::RunManifest;

/// Draws and dataset of an earlier `fit`, checked against its manifest.
pub struct FitOutput {
    pub data: LoadedData,
    pub sample: PosteriorSample,
    pub manifest: RunManifest,
    pub draws_sha256: String,
}

pub fn load_fit(draws_path: &Path, data_path: &Path) -> CliResult<FitOutput> {
    let dir = draws_path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let manifest = RunManifest::load(dir)?;
    if manifest.command != "fit" {
        return Err(CliError::Validation(format!("{} was written by '{}', expected 'fit'", dir.display(), manifest.command)));
    }
    let name = draws_path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    let bytes = read_bytes(draws_path)?;
    manifest.verify_output(dir, name, &bytes)?;

    let columns = ModelColumns { x: manifest.x_columns.clone(), w: manifest.w_columns.clone() };
    let data = load_dataset(data_path, &columns, manifest.category_labels.as_deref())?;
    manifest.verify_data(data_path, &data.sha256)?;
    let d = &data.dataset;
    let draws = parse_draws(draws_path, &bytes, d.p(), d.q(), d.n_categories())?;
    if draws.is_empty() {
        return Err(CliError::Validation(format!("{}: no draws", draws_path.display())));
    }
    let sampler = if manifest.sampler.as_deref() == Some("full") { SamplerKind::Full } else { SamplerKind::Collapsed };
    let sample = PosteriorSample {
        draws,
        u_draws: None,
        accept_rate_alpha: manifest.accept_rate_alpha.unwrap_or(f64::NAN),
        accept_rate_beta_delta: manifest.accept_rate_beta_delta,
        relabeled: manifest.relabeled.unwrap_or(false),
        swap_fraction: manifest.swap_fraction,
        sampler,
    };
    Ok(FitOutput { data, sample, manifest, draws_sha256: crate::io::sha256_hex(&bytes) })
}

/// Column names `class{s}_cat{j}` for per-draw class × category outputs.
pub fn class_category_header(first: &str, n_categories: usize) -> Vec<String> {
    let mut header = vec![first.to_string()];
    for s in 1..=2 {
        header.extend((1..=n_categories).map(|j| format!("class{s}_cat{j}")));
    }
    header
}

/// Rows `g, values[0][0][g], …, values[1][J−1][g]`.
pub fn per_draw_rows(values: &[Vec<Vec<f64>>; 2]) -> Vec<Vec<f64>> {
    let g = values[0][0].len();
    (0..g)
        .map(|k| {
            let mut row = vec![k as f64];
            for class in values {
                row.extend(class.iter().map(|cat| cat[k]));
            }
            row
        })
        .collect()
}
