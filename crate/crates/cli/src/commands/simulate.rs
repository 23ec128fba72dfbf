use std::collections::BTreeMap;
use std::time::Instant;

use serde_json::json;

use lcop_core::model::param_names;
use lcop_core::sim::{builtin_setting, generate, SimSpec};

use crate::error::{CliError, CliResult};
use crate::io::{dataset_csv, fmt_f64, read_bytes, sha256_hex};
use crate::manifest::{Dimensions, OutputDir, RunManifest};
use crate::SimulateArgs;

pub fn run(args: &SimulateArgs) -> CliResult<()> {
    let start = Instant::now();
    let mut manifest = RunManifest::new("simulate");
    let mut spec: SimSpec = match (&args.setting, &args.spec) {
        (Some(id), _) => builtin_setting(*id)?,
        (None, Some(path)) => {
            let bytes = read_bytes(path)?;
            manifest.add_input("spec", path, sha256_hex(&bytes));
            serde_json::from_slice(&bytes).map_err(|e| CliError::Validation(format!("{}: invalid simulation design: {e}", path.display())))?
        }
        (None, None) => return Err(CliError::Validation("pass --setting or --spec".into())),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(n) = args.n {
        spec.n = n;
    }
    let out = generate(&spec)?;
    let d = &out.dataset;

    let mut files = OutputDir::new(&args.out);
    files.add("data.csv", dataset_csv(d));
    let mut truth_csv = String::from("row,s_true,z_true\n");
    for (i, (s, z)) in out.s_true.iter().zip(&out.z_true).enumerate() {
        truth_csv.push_str(&format!("{},{s},{}\n", i + 1, fmt_f64(*z)));
    }
    files.add("truth.csv", truth_csv);
    let names = param_names(d.p(), d.q(), d.n_categories());
    let values: BTreeMap<&String, f64> = names.iter().zip(spec.truth().flatten()).collect();
    files.add_json("truth.json", &json!({ "parameters": values, "class_cond_means": out.class_cond_means }));

    manifest.config = Some(serde_json::to_value(&spec).expect("serializable design"));
    manifest.dimensions = Some(Dimensions { n: d.n(), p: d.p(), q: d.q(), n_categories: d.n_categories() });
    manifest.category_labels = Some((1..=d.n_categories() as i64).collect());
    manifest.notes.push("covariate laws are N(mean, var): the second argument is a variance".into());
    manifest.notes.push("category 1 is the highest-utility band".into());
    let timing = BTreeMap::from([("total".to_string(), start.elapsed().as_secs_f64())]);
    files.finish(manifest, &timing)
}
