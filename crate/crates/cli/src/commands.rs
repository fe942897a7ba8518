use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use log::info;
use navcbn_core::counterfactual::{realize_trajectory, search, search_from_sample, SearchOutcome, WorldPose};
use navcbn_core::discretization::VariableKind;
use navcbn_core::evaluation::{loocv, nested_tune, participants, TuneConfig};
use navcbn_core::exec::Execution;
use navcbn_core::features::{compute_all, load_jsonl, write_csv, FeatureSample, RawSample};
use navcbn_core::pipeline::{discretization, discretize, ModelBundle};
use navcbn_core::synthdata::{generate_raw, Archetype, GeneratorConfig};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::PipelineConfig;
use crate::{Cli, Command, UsageError, EXIT_NO_SOLUTION};

pub struct Outcome {
    pub document: String,
    pub exit: u8,
}

fn ok(value: &impl Serialize) -> Result<Outcome> {
    Ok(Outcome {
        document: serde_json::to_string_pretty(value)?,
        exit: 0,
    })
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FeatureFormat {
    Csv,
    Jsonl,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    participants: Option<usize>,
    #[arg(long)]
    samples_per_participant: Option<usize>,
    /// Probability of flipping each label.
    #[arg(long)]
    label_noise: Option<f64>,
    /// Position noise standard deviation, meters.
    #[arg(long)]
    position_noise: Option<f64>,
    /// Bearing noise standard deviation, radians.
    #[arg(long)]
    rotation_noise: Option<f64>,
    #[arg(long)]
    delta_pos: Option<f64>,
    #[arg(long)]
    delta_rot: Option<f64>,
    #[arg(long)]
    delta_align: Option<f64>,
    /// Archetype weights, e.g. `direct_approach=2,stall=1`; unlisted ones get 0.
    #[arg(long)]
    mix: Option<String>,
}

impl SynthArgs {
    fn generator(&self, seed: u64) -> Result<GeneratorConfig> {
        let mut g = GeneratorConfig {
            seed,
            ..Default::default()
        };
        macro_rules! set {
            ($($flag:ident => $($field:ident).+),* $(,)?) => {
                $(if let Some(v) = self.$flag { g.$($field).+ = v; })*
            };
        }
        set!(
            participants => participants,
            samples_per_participant => samples_per_participant,
            label_noise => label_noise,
            position_noise => noise.position,
            rotation_noise => noise.rotation,
            delta_pos => oracle.delta_pos,
            delta_rot => oracle.delta_rot,
            delta_align => oracle.delta_align,
        );
        if let Some(mix) = &self.mix {
            g.archetype_mix = Archetype::ALL.iter().map(|a| (*a, 0.0)).collect();
            for part in mix.split(',').filter(|p| !p.trim().is_empty()) {
                let (name, weight) = part
                    .split_once('=')
                    .ok_or_else(|| usage(format!("mix entry `{part}` is not name=weight")))?;
                let a: Archetype = name.trim().parse().map_err(usage)?;
                let w: f64 = weight
                    .trim()
                    .parse()
                    .map_err(|e| usage(format!("mix weight `{weight}`: {e}")))?;
                g.archetype_mix.insert(a, w);
            }
        }
        g.validate().map_err(|e| usage(e.to_string()))?;
        Ok(g)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("writing {}", path.display()))?,
    ))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn dataset_path(cfg: &PipelineConfig, input: Option<&PathBuf>) -> Result<PathBuf> {
    input
        .or(cfg.dataset.as_ref())
        .cloned()
        .ok_or_else(|| usage("no dataset: pass --input or set `dataset` in the config"))
}

fn model_path(cfg: &PipelineConfig, model: Option<&PathBuf>) -> Result<PathBuf> {
    model
        .or(cfg.model.as_ref())
        .cloned()
        .ok_or_else(|| usage("no model: pass --model or set `model` in the config"))
}

fn load_raw(path: &Path, resample: bool) -> Result<Vec<RawSample>> {
    let raw = load_jsonl(path, resample).with_context(|| format!("reading {}", path.display()))?;
    info!("read {} windows from {}", raw.len(), path.display());
    Ok(raw)
}

fn load_features(cfg: &PipelineConfig, path: &Path, resample: bool) -> Result<Vec<FeatureSample>> {
    let raw = load_raw(path, resample)?;
    Ok(compute_all(&raw, cfg.total_rotation_mode)?)
}

fn load_bundle(path: &Path) -> Result<ModelBundle> {
    ModelBundle::load(path).with_context(|| format!("loading model {}", path.display()))
}

fn parse_floats<const N: usize>(s: &str, what: &str) -> Result<[f64; N]> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| usage(format!("{what} `{s}`: {e}")))?;
    v.try_into()
        .map_err(|_| usage(format!("{what} `{s}`: expected {N} comma-separated numbers")))
}

fn high_rate(raw: &[RawSample], pick: fn(&RawSample) -> i64) -> f64 {
    raw.iter().filter(|s| pick(s) >= 4).count() as f64 / raw.len() as f64
}

pub fn run(cli: Cli) -> Result<Outcome> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };

    match cli.command {
        Command::Synth(args) => {
            cfg.validate()?;
            let generator = args.generator(cfg.seed)?;
            let raw = generate_raw(&generator, exec)?;
            let out = cfg.output_path(args.out.as_ref(), cfg.dataset.as_ref(), "synthetic.jsonl");
            let mut w = create(&out)?;
            navcbn_core::features::write_jsonl(&mut w, &raw)?;
            w.flush()?;
            ok(&json!({
                "command": "synth",
                "output": out,
                "samples": raw.len(),
                "participants": generator.participants,
                "seed": generator.seed,
                "competence_high_rate": high_rate(&raw, |s| s.competence_likert),
                "intention_high_rate": high_rate(&raw, |s| s.intention_likert),
            }))
        }
        Command::Featurize {
            input,
            out,
            format,
            model,
        } => {
            model.apply(&mut cfg);
            cfg.validate()?;
            let path = dataset_path(&cfg, input.as_ref())?;
            let features = load_features(&cfg, &path, model.resample)?;
            let default_name = match format {
                FeatureFormat::Csv => "features.csv",
                FeatureFormat::Jsonl => "features.jsonl",
            };
            let out = cfg.output_path(out.as_ref(), None, default_name);
            let mut w = create(&out)?;
            match format {
                FeatureFormat::Csv => write_csv(&mut w, &features)?,
                FeatureFormat::Jsonl => {
                    for f in &features {
                        serde_json::to_writer(&mut w, f)?;
                        writeln!(w)?;
                    }
                }
            }
            w.flush()?;
            ok(&json!({
                "command": "featurize",
                "input": path,
                "output": out,
                "samples": features.len(),
                "total_rotation_mode": cfg.total_rotation_mode,
            }))
        }
        Command::Fit {
            input,
            out,
            model,
            search,
        } => {
            model.apply(&mut cfg);
            search.apply(&mut cfg);
            cfg.validate()?;
            let path = dataset_path(&cfg, input.as_ref())?;
            let features = load_features(&cfg, &path, model.resample)?;
            let bundle = ModelBundle::fit(&features, cfg.fit_config()?, cfg.search_config())?;
            let out = cfg.output_path(out.as_ref(), cfg.model.as_ref(), "model.json");
            write_json(&out, &bundle)?;
            let fitted: BTreeMap<String, usize> = discretization(&bundle.model)?.cardinalities();
            ok(&json!({
                "command": "fit",
                "input": path,
                "output": out,
                "samples": features.len(),
                "participants": participants(&features).len(),
                "cardinalities": bundle.config.cardinalities,
                "fitted_intervals": fitted,
                "alpha": bundle.config.alpha,
                "epsilon": bundle.search.epsilon,
                "min_count": bundle.search.min_count,
            }))
        }
        Command::Evaluate {
            input,
            table,
            out,
            f1_mode,
            model,
        } => {
            model.apply(&mut cfg);
            if let Some(m) = f1_mode {
                cfg.f1_mode = m;
            }
            cfg.validate()?;
            let path = dataset_path(&cfg, input.as_ref())?;
            let features = load_features(&cfg, &path, model.resample)?;
            let fit = cfg.fit_config()?;
            let report = loocv(&features, &fit, cfg.f1_mode, exec)?;
            if table {
                eprint!("{}", report.table());
            }
            let doc = json!({
                "command": "evaluate",
                "input": path,
                "cardinalities": fit.cardinalities,
                "alpha": fit.alpha,
                "seed": fit.seed,
                "report": report,
            });
            if let Some(out) = out {
                write_json(&out, &doc)?;
            }
            ok(&doc)
        }
        Command::Tune {
            input,
            table,
            out,
            grid,
            f1_mode,
            model,
        } => {
            model.apply(&mut cfg);
            if grid.is_some() {
                cfg.grid = grid;
            }
            if let Some(m) = f1_mode {
                cfg.f1_mode = m;
            }
            cfg.validate()?;
            let path = dataset_path(&cfg, input.as_ref())?;
            let features = load_features(&cfg, &path, model.resample)?;
            let tune = TuneConfig {
                grid: cfg.parsed_grid()?,
                base: cfg.fit_config()?,
                f1_mode: cfg.f1_mode,
            };
            let result = nested_tune(&features, &tune, exec)?;
            if table {
                eprint!("{}", result.report.table());
                eprintln!("modal interval counts: {} ({} of {} folds)", result.modal, result.modal_votes, result.folds.len());
            }
            let doc = json!({
                "command": "tune",
                "input": path,
                "grid": tune.grid,
                "result": result,
            });
            if let Some(out) = out {
                write_json(&out, &doc)?;
            }
            ok(&doc)
        }
        Command::Predict {
            model,
            input,
            out,
            resample,
        } => {
            let bundle = load_bundle(&model_path(&cfg, model.as_ref())?)?;
            let path = dataset_path(&cfg, input.as_ref())?;
            let features = compute_all(&load_raw(&path, resample)?, bundle.config.total_rotation_mode)?;
            let predictions = features
                .iter()
                .map(|f| {
                    let p = bundle.model.predict(&discretize(&bundle.model, f)?)?;
                    Ok(json!({
                        "participant_id": f.participant_id,
                        "scenario_id": f.scenario_id,
                        "p_competence_high": p.p_competence_high,
                        "p_intention_high": p.p_intention_high,
                        "competence": p.competence,
                        "intention": p.intention,
                    }))
                })
                .collect::<Result<Vec<Value>>>()?;
            let doc = json!({
                "command": "predict",
                "input": path,
                "predictions": predictions,
            });
            if let Some(out) = out {
                write_json(&out, &doc)?;
            }
            ok(&doc)
        }
        Command::Counterfactual {
            model,
            target,
            start,
            input,
            scenario,
            out,
            search: overrides,
        } => {
            let bundle = load_bundle(&model_path(&cfg, model.as_ref())?)?;
            let mut search_cfg = bundle.search.clone();
            if let Some(e) = overrides.epsilon {
                search_cfg.epsilon = e;
            }
            if let Some(m) = overrides.min_count {
                search_cfg.min_count = m;
            }
            search_cfg.validate().map_err(|e| usage(e.to_string()))?;
            let outcome = match (start, scenario) {
                (Some(start), _) => {
                    let indices: Vec<usize> = start
                        .split(',')
                        .map(|p| p.trim().parse::<usize>())
                        .collect::<Result<_, _>>()
                        .map_err(|e| usage(format!("--start `{start}`: {e}")))?;
                    search(&bundle.model, &indices, target, &search_cfg)?
                }
                (None, Some(id)) => {
                    let path = dataset_path(&cfg, input.as_ref())?;
                    let raw = load_raw(&path, false)?;
                    let sample = raw
                        .iter()
                        .find(|s| s.scenario_id == id)
                        .ok_or_else(|| usage(format!("no scenario `{id}` in {}", path.display())))?;
                    let f = navcbn_core::features::compute_features(sample, bundle.config.total_rotation_mode)?;
                    search_from_sample(&bundle.model, &discretize(&bundle.model, &f)?, target, &search_cfg)?
                }
                (None, None) => return Err(usage("pass --start or --input with --scenario")),
            };
            if let Some(out) = out {
                write_json(&out, &outcome)?;
            }
            let exit = match outcome {
                SearchOutcome::Found(_) => 0,
                SearchOutcome::NoSolution { .. } => EXIT_NO_SOLUTION,
            };
            Ok(Outcome {
                document: serde_json::to_string_pretty(&outcome)?,
                exit,
            })
        }
        Command::Realize {
            model,
            solution,
            start_pose,
            goal,
            csv,
        } => {
            let bundle = load_bundle(&model_path(&cfg, model.as_ref())?)?;
            let text = std::fs::read_to_string(&solution).with_context(|| format!("reading {}", solution.display()))?;
            let outcome: SearchOutcome = serde_json::from_str(&text)
                .map_err(navcbn_core::Error::from)
                .with_context(|| format!("parsing {}", solution.display()))?;
            let sol = outcome
                .solution()
                .ok_or_else(|| usage(format!("{} holds no solution", solution.display())))?;
            let [x, y, heading] = parse_floats::<3>(&start_pose, "--start-pose")?;
            let goal = parse_floats::<2>(&goal, "--goal")?;
            let traj = realize_trajectory(sol, discretization(&bundle.model)?, WorldPose { x, y, heading }, goal)?;
            if let Some(csv) = &csv {
                let mut w = create(csv)?;
                traj.write_csv(&mut w)?;
                w.flush()?;
            }
            ok(&traj)
        }
        Command::ExportClusters {
            model,
            variable,
            out_dir,
        } => {
            let bundle = load_bundle(&model_path(&cfg, model.as_ref())?)?;
            let disc = discretization(&bundle.model)?;
            let names: Vec<String> = match variable {
                Some(v) => {
                    let spec = disc
                        .specs
                        .iter()
                        .find(|s| s.name == v)
                        .ok_or_else(|| usage(format!("unknown variable `{v}`")))?;
                    if spec.kind != VariableKind::TimeSeries {
                        return Err(usage(format!("`{v}` is not a time-series variable")));
                    }
                    vec![v]
                }
                None => disc
                    .specs
                    .iter()
                    .filter(|s| s.kind == VariableKind::TimeSeries)
                    .map(|s| s.name.clone())
                    .collect(),
            };
            let dir = out_dir.unwrap_or_else(|| cfg.output_dir.clone());
            let mut files = Vec::new();
            for name in &names {
                let path = dir.join(format!("{name}.csv"));
                let mut w = create(&path)?;
                disc.write_cluster_csv(name, &mut w)?;
                w.flush()?;
                files.push(json!({"variable": name, "path": path, "clusters": disc.cardinality(name)}));
            }
            ok(&json!({"command": "export-clusters", "files": files}))
        }
    }
}
