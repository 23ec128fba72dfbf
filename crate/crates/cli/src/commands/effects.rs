use std::collections::BTreeMap;
use std::time::Instant;

use serde_json::json;

use lcop_core::inference::{covariate_effect, Perturbation};

use super::{class_category_header, load_fit, per_draw_rows};
use crate::error::{CliError, CliResult};
use crate::io::{csv_text, fmt_f64};
use crate::manifest::{OutputDir, RunManifest};
use crate::EffectsArgs;

pub fn run(args: &EffectsArgs) -> CliResult<()> {
    let start = Instant::now();
    let fit = load_fit(&args.draws, &args.data)?;
    let k = fit
        .data
        .x_names
        .iter()
        .position(|n| *n == args.covariate)
        .map(|pos| pos + 1)
        .ok_or_else(|| CliError::Validation(format!("covariate '{}' is not an ordinal-layer column of this fit ({:?})", args.covariate, fit.data.x_names)))?;
    let perturbation = match (&args.shift, &args.set) {
        (Some(amount), _) => Perturbation::Shift { amount: *amount },
        (None, Some(v)) => Perturbation::Set { from: v[0], to: v[1] },
        (None, None) => Perturbation::Default,
    };
    let effect = covariate_effect(&fit.sample, &fit.data.dataset, k, perturbation)?;
    let n_categories = fit.data.dataset.n_categories();

    let mut files = OutputDir::new(&args.out);
    files.add("effects_draws.csv", csv_text(&class_category_header("draw", n_categories), per_draw_rows(&effect.per_draw)));
    let mut table = String::from("class,category,label,mean,sd,ci95_lo,ci95_hi\n");
    let mut worst_closure: f64 = 0.0;
    for s in 0..2 {
        for j in 0..n_categories {
            let (lo, hi) = effect.ci_95[s][j];
            table.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                s + 1,
                j + 1,
                fit.data.labels[j],
                fmt_f64(effect.mean[s][j]),
                fmt_f64(effect.sd[s][j]),
                fmt_f64(lo),
                fmt_f64(hi)
            ));
        }
        for g in 0..fit.sample.len() {
            let total: f64 = effect.per_draw[s].iter().map(|cat| cat[g]).sum();
            worst_closure = worst_closure.max(total.abs());
        }
    }
    files.add("effects.csv", table);
    files.add_json(
        "effects.json",
        &json!({
            "covariate": args.covariate,
            "column_index": k,
            "applied": effect.applied,
            "mean": effect.mean,
            "sd": effect.sd,
            "ci_95": effect.ci_95,
            "max_abs_category_sum": worst_closure,
        }),
    );

    let mut manifest = RunManifest::new("effects");
    manifest.add_input("draws", &args.draws, fit.draws_sha256.clone());
    manifest.add_input("data", &args.data, fit.data.sha256.clone());
    manifest.category_labels = fit.manifest.category_labels.clone();
    manifest.notes.push("effect = P(y=j | x_k moved) - P(y=j | x_k at baseline), averaged over observations and draws".into());
    let timing = BTreeMap::from([("total".to_string(), start.elapsed().as_secs_f64())]);
    files.finish(manifest, &timing)
}
