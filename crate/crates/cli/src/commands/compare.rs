use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

use lcop_core::comparison::{chib_marginal_likelihood_with, derive_seed, MarginalLikelihoodResult};
use lcop_core::samplers::{relabel, run_collapsed_gibbs};

use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::io::{fmt_f64, load_dataset};
use crate::manifest::{OutputDir, RunManifest};
use crate::CompareArgs;

#[derive(Debug, Serialize)]
struct ModelResult {
    index: usize,
    config: String,
    x_columns: Vec<String>,
    w_columns: Vec<String>,
    seed: u64,
    accept_rate_alpha: f64,
    marginal_likelihood: MarginalLikelihoodResult,
}

#[derive(Debug, Serialize)]
struct Comparison {
    models: Vec<ModelResult>,
    /// `log_bayes_factors[a][b] = ln m(y | a) − ln m(y | b)`.
    log_bayes_factors: Vec<Vec<f64>>,
    selected: usize,
    note: &'static str,
}

pub fn run(args: &CompareArgs) -> CliResult<()> {
    let start = Instant::now();
    let mut manifest = RunManifest::new("compare");
    let mut models = Vec::new();
    let mut timing = BTreeMap::new();
    let mut data_sha = None;
    for (index, path) in args.configs.iter().enumerate() {
        let t = Instant::now();
        let (mut config, sha) = Config::load(Some(path))?;
        config.run.seed = derive_seed(args.seed, index as u64);
        manifest.add_input(&format!("config{}", index + 1), path, sha.unwrap_or_default());
        let loaded = load_dataset(&args.data, &config.model, config.categories.as_deref())?;
        if data_sha.get_or_insert_with(|| loaded.sha256.clone()) != &loaded.sha256 {
            return Err(CliError::Validation(format!("{} changed while the comparison was running", args.data.display())));
        }
        let data = &loaded.dataset;
        let prior = config.resolve_prior(data.p(), data.q(), data.n_categories());
        prior.validate(data)?;
        let sample = relabel(run_collapsed_gibbs(data, &prior, &config.run)?);
        let ml = chib_marginal_likelihood_with(data, &prior, &config.run, &config.chib, &sample)?;
        models.push(ModelResult {
            index: index + 1,
            config: path.display().to_string(),
            x_columns: loaded.x_names.clone(),
            w_columns: loaded.w_names.clone(),
            seed: config.run.seed,
            accept_rate_alpha: sample.accept_rate_alpha,
            marginal_likelihood: ml,
        });
        timing.insert(format!("model{}", index + 1), t.elapsed().as_secs_f64());
    }
    manifest.add_input("data", &args.data, data_sha.unwrap_or_default());

    let log_ml: Vec<f64> = models.iter().map(|m| m.marginal_likelihood.log_ml).collect();
    let log_bayes_factors = log_ml.iter().map(|a| log_ml.iter().map(|b| a - b).collect()).collect();
    let selected = log_ml
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i + 1)
        .expect("at least one configuration");
    let mut table = String::from("model,config,log_ml,mc_se\n");
    for m in &models {
        table.push_str(&format!(
            "{},{},{},{}\n",
            m.index,
            m.config,
            fmt_f64(m.marginal_likelihood.log_ml),
            fmt_f64(m.marginal_likelihood.mc_se)
        ));
    }
    let comparison = Comparison {
        models,
        log_bayes_factors,
        selected,
        note: "equal prior model odds give posterior odds equal to the Bayes factors; other prior odds are left to the user",
    };

    let mut files = OutputDir::new(&args.out);
    files.add("compare.csv", table);
    files.add_json("compare.json", &comparison);
    manifest.notes.push(format!("model i runs with seed derive_seed({}, i - 1)", args.seed));
    timing.insert("total".to_string(), start.elapsed().as_secs_f64());
    files.finish(manifest, &timing)
}
