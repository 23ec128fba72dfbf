use std::collections::BTreeMap;
use std::time::Instant;

use lcop_core::inference::{interval_sorted, LEVEL_2SD};

use super::{class_category_header, load_fit, per_draw_rows};
use crate::error::CliResult;
use crate::io::{csv_text, fmt_f64};
use crate::manifest::{OutputDir, RunManifest};
use crate::AvgProbArgs;

pub fn run(args: &AvgProbArgs) -> CliResult<()> {
    let start = Instant::now();
    let fit = load_fit(&args.draws, &args.data)?;
    let avg = lcop_core::inference::average_category_probs(&fit.sample, &fit.data.dataset)?;
    let n_categories = fit.data.dataset.n_categories();

    let mut files = OutputDir::new(&args.out);
    files.add("avgprob_draws.csv", csv_text(&class_category_header("draw", n_categories), per_draw_rows(&avg.values)));
    let mut table = String::from("class,category,label,mean,ci95_lo,ci95_hi\n");
    for s in 0..2 {
        for j in 0..n_categories {
            let mut sorted = avg.values[s][j].clone();
            sorted.sort_by(f64::total_cmp);
            let (lo, hi) = interval_sorted(&sorted, LEVEL_2SD);
            table.push_str(&format!(
                "{},{},{},{},{},{}\n",
                s + 1,
                j + 1,
                fit.data.labels[j],
                fmt_f64(avg.mean[s][j]),
                fmt_f64(lo),
                fmt_f64(hi)
            ));
        }
    }
    files.add("avgprob.csv", table);

    let mut manifest = RunManifest::new("avgprob");
    manifest.add_input("draws", &args.draws, fit.draws_sha256.clone());
    manifest.add_input("data", &args.data, fit.data.sha256.clone());
    manifest.category_labels = fit.manifest.category_labels.clone();
    manifest.notes.push("avgprob_draws.csv holds one row per draw; density plots are left to the user".into());
    let timing = BTreeMap::from([("total".to_string(), start.elapsed().as_secs_f64())]);
    files.finish(manifest, &timing)
}
