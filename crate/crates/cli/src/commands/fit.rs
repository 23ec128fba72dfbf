use std::collections::BTreeMap;
use std::time::Instant;

use lcop_core::inference::summarize;
use lcop_core::samplers::{relabel, run_collapsed_gibbs, run_full_gibbs};

use crate::config::{Config, ResolvedConfig};
use crate::error::CliResult;
use crate::io::{draws_csv, load_dataset};
use crate::manifest::{Dimensions, OutputDir, RunManifest};
use crate::{FitArgs, SamplerArg};

pub fn run(args: &FitArgs) -> CliResult<()> {
    let start = Instant::now();
    let (mut config, config_sha) = Config::load(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        config.run.seed = seed;
    }
    let loaded = load_dataset(&args.data, &config.model, config.categories.as_deref())?;
    let data = &loaded.dataset;
    let prior = config.resolve_prior(data.p(), data.q(), data.n_categories());
    prior.validate(data)?;

    let sampling = Instant::now();
    let raw = match args.sampler {
        SamplerArg::Collapsed => run_collapsed_gibbs(data, &prior, &config.run)?,
        SamplerArg::Full => run_full_gibbs(data, &prior, &config.run)?,
    };
    let sampling_secs = sampling.elapsed().as_secs_f64();
    let sample = relabel(raw);
    let summary = summarize(&sample)?;

    let mut files = OutputDir::new(&args.out);
    files.add("draws.csv", draws_csv(&sample.draws, data.p(), data.q(), data.n_categories()));
    files.add_json("summary.json", &summary);
    if let Some(us) = &sample.u_draws {
        let mut text = (1..=data.n()).map(|i| format!("u{i}")).collect::<Vec<_>>().join(",");
        text.push('\n');
        for row in us {
            text.push_str(&row.iter().map(u8::to_string).collect::<Vec<_>>().join(","));
            text.push('\n');
        }
        files.add("u_draws.csv", text);
    }

    let mut manifest = RunManifest::new("fit");
    manifest.add_input("data", &args.data, loaded.sha256.clone());
    if let (Some(path), Some(sha)) = (&args.config, config_sha) {
        manifest.add_input("config", path, sha);
    }
    let resolved = ResolvedConfig {
        prior,
        run: config.run.clone(),
        chib: config.chib,
        model: config.model.clone(),
        categories: loaded.labels.clone(),
    };
    manifest.config = Some(serde_json::to_value(&resolved).expect("serializable configuration"));
    manifest.dimensions = Some(Dimensions { n: data.n(), p: data.p(), q: data.q(), n_categories: data.n_categories() });
    manifest.category_labels = Some(loaded.labels.clone());
    manifest.x_columns = Some(loaded.x_names.clone());
    manifest.w_columns = Some(loaded.w_names.clone());
    manifest.sampler = Some(match args.sampler {
        SamplerArg::Collapsed => "collapsed".into(),
        SamplerArg::Full => "full".into(),
    });
    manifest.accept_rate_alpha = Some(sample.accept_rate_alpha);
    manifest.accept_rate_beta_delta = sample.accept_rate_beta_delta;
    manifest.relabeled = Some(sample.relabeled);
    manifest.swap_fraction = sample.swap_fraction;
    manifest.notes.push(format!("credible intervals: {}", summary.interval_method));
    manifest.notes.push("draws relabeled so that beta1_1 >= beta2_1".into());
    let timing = BTreeMap::from([
        ("sampling".to_string(), sampling_secs),
        ("total".to_string(), start.elapsed().as_secs_f64()),
    ]);
    files.finish(manifest, &timing)
}
