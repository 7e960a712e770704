use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::Utc;
use minkdetect::detector::{self, CellResult, Stages, SweepHooks, SweepPlan};
use minkdetect::distance::DistanceSample;
use minkdetect::kde::{BandwidthRule, KdeModel};
use minkdetect::report;
use minkdetect::stats::KlSettings;
use minkdetect::store::{
    generate_synthetic, paired_test_count, parse_embeddings, question_count, write_embeddings,
    ClassParams, EmbeddingRecord, ExperimentConfig, FileManifest, Label, SyntheticSpec,
};
use minkdetect::{CellKey, Error, Result};
use serde_json::json;

use crate::args::{
    AnalyzeArgs, CommonArgs, DetectArgs, GridArgs, KdeArgs, KlArgs, SweepArgs, SynthArgs,
};
use crate::output::{read_input, InputDigest, RunManifest, Staged};
use crate::CliError;

pub fn synth(a: &SynthArgs) -> std::result::Result<(), CliError> {
    let started = Utc::now();
    let t = match a.t {
        Some(t) => t,
        None => paired_test_count(a.r as usize)
            .map(|t| t as u32)
            .ok_or_else(|| {
                CliError::usage(format!("r={} has no standard test count; pass --t", a.r))
            })?,
    };
    if let Some(n) = a.n.iter().find(|n| !(1..=10).contains(*n)) {
        return Err(CliError::usage(format!("n must be in 1..=10, got {n}")));
    }
    let spec = SyntheticSpec {
        q: a.q,
        r: a.r,
        t,
        d: a.d,
        hallucinated: ClassParams::isotropic(a.d, a.hall_mean, a.hall_sd),
        genuine: ClassParams::isotropic(a.d, a.gen_mean, a.gen_sd),
        seed: a.common.seed,
    };
    let staged = Staged::new(&a.common.out)?;
    let (train, test) = generate_synthetic(&spec)?;
    let manifest = FileManifest { dim: a.d, q: a.q };
    for (name, records) in [("train.jsonl", train), ("test.jsonl", test)] {
        let records: Vec<EmbeddingRecord> = records
            .into_iter()
            .filter(|r| a.n.contains(&r.n_keywords))
            .collect();
        let out = staged.create(name)?;
        write_embeddings(out, &records, Some(&manifest))
            .map_err(|e| CliError::write(&staged.path().join(name), e))?;
    }
    let config = json!({ "synthetic": spec, "n": a.n });
    staged.commit(RunManifest::new("synth", a.common.seed, started, config))?;
    Ok(())
}

pub fn analyze(a: &AnalyzeArgs) -> std::result::Result<(), CliError> {
    Pipeline {
        command: "analyze",
        stages: Stages::ANALYZE,
        train: &a.embeddings,
        test: None,
        dump_distances: a.dump_distances.as_deref(),
        grid: &a.grid,
        kl: Some(&a.kl),
        kde: None,
        common: &a.common,
    }
    .run()
}

pub fn detect(a: &DetectArgs) -> std::result::Result<(), CliError> {
    Pipeline {
        command: "detect",
        stages: Stages::DETECT,
        train: &a.train,
        test: Some(&a.test),
        dump_distances: a.dump_distances.as_deref(),
        grid: &a.grid,
        kl: None,
        kde: Some(&a.kde),
        common: &a.common,
    }
    .run()
}

pub fn sweep(a: &SweepArgs) -> std::result::Result<(), CliError> {
    Pipeline {
        command: "sweep",
        stages: Stages::ALL,
        train: &a.train,
        test: Some(&a.test),
        dump_distances: a.dump_distances.as_deref(),
        grid: &a.grid,
        kl: Some(&a.kl),
        kde: Some(&a.kde),
        common: &a.common,
    }
    .run()
}

fn cell_stem(cell: CellKey) -> String {
    format!("r{}_n{}_p{}", cell.r, cell.n, cell.p)
}

fn model_name(cell: CellKey, label: Label) -> String {
    format!("model_{}_{label}.json", cell_stem(cell))
}

struct CliHooks {
    distances: Option<PathBuf>,
    models_out: Option<PathBuf>,
    models_in: Option<PathBuf>,
}

impl SweepHooks for CliHooks {
    fn provide_models(&self, cell: CellKey) -> Result<Option<(KdeModel, KdeModel)>> {
        let Some(dir) = &self.models_in else {
            return Ok(None);
        };
        let hall = KdeModel::load(dir.join(model_name(cell, Label::Hallucinated)))?;
        let gen = KdeModel::load(dir.join(model_name(cell, Label::Genuine)))?;
        Ok(Some((hall, gen)))
    }

    fn on_samples(&self, hall: &DistanceSample, gen: &DistanceSample) -> Result<()> {
        let Some(dir) = &self.distances else {
            return Ok(());
        };
        for sample in [hall, gen] {
            let path = dir.join(format!(
                "distances_{}_{}.csv",
                cell_stem(sample.cell),
                sample.label
            ));
            let write_err = |source| Error::Write {
                path: path.clone(),
                source,
            };
            let file = std::fs::File::create(&path).map_err(write_err)?;
            sample.write_csv(BufWriter::new(file)).map_err(write_err)?;
        }
        Ok(())
    }

    fn on_models(&self, hall: &KdeModel, gen: &KdeModel) -> Result<()> {
        if let Some(dir) = &self.models_out {
            for model in [hall, gen] {
                model.save(dir.join(model_name(model.cell, model.label)))?;
            }
        }
        Ok(())
    }
}

struct Pipeline<'a> {
    command: &'static str,
    stages: Stages,
    train: &'a Path,
    test: Option<&'a Path>,
    dump_distances: Option<&'a Path>,
    grid: &'a GridArgs,
    kl: Option<&'a KlArgs>,
    kde: Option<&'a KdeArgs>,
    common: &'a CommonArgs,
}

impl Pipeline<'_> {
    fn kl_settings(&self) -> Result<KlSettings> {
        let settings = match self.kl {
            Some(kl) => KlSettings {
                direction: kl.kl_direction.into(),
                bins: kl.kl_bins,
                epsilon: kl.kl_epsilon,
            },
            None => KlSettings::default(),
        };
        settings.validate()?;
        Ok(settings)
    }

    fn plan(&self) -> SweepPlan {
        let g = self.grid;
        let full = SweepPlan::full(self.stages);
        let mut plan = if g.all {
            full
        } else {
            SweepPlan::new(
                if g.r.is_empty() {
                    full.r_values
                } else {
                    g.r.clone()
                },
                if g.n.is_empty() {
                    full.n_values
                } else {
                    g.n.clone()
                },
                if g.p.is_empty() {
                    full.p_values
                } else {
                    g.p.clone()
                },
                self.stages,
            )
        };
        plan.parallel_cells = g.parallel_cells;
        plan
    }

    fn load(
        &self,
        path: &Path,
        inputs: &mut Vec<InputDigest>,
    ) -> std::result::Result<Vec<EmbeddingRecord>, CliError> {
        let (bytes, digest) = read_input(path)?;
        inputs.push(digest);
        let file = parse_embeddings(bytes.as_slice(), self.grid.dim).map_err(|e| match e {
            e @ (Error::Malformed { .. }
            | Error::DimensionMismatch { .. }
            | Error::DuplicateKey { .. }
            | Error::UnknownLabel { .. }
            | Error::InvalidRecord { .. }) => CliError {
                code: 2,
                message: format!("{}: {e}", path.display()),
            },
            e => e.into(),
        })?;
        Ok(file.records)
    }

    fn run(&self) -> std::result::Result<(), CliError> {
        let started = Utc::now();
        let kl = self.kl_settings()?;
        let kde_rule = match self.kde {
            Some(k) => BandwidthRule::from_parts(k.kde_rule.as_deref(), k.kde_bandwidth)?,
            None => BandwidthRule::default(),
        };
        let plan = self.plan();
        if let Some(n) = plan.n_values.iter().find(|n| !(1..=10).contains(*n)) {
            return Err(CliError::usage(format!("n must be in 1..=10, got {n}")));
        }
        if let Some(r) = plan.r_values.iter().find(|r| **r < 2) {
            return Err(CliError::usage(format!("r must be >= 2, got {r}")));
        }
        if self.stages.evaluate && self.grid.t.is_none() {
            if let Some(r) = plan
                .r_values
                .iter()
                .find(|r| paired_test_count(**r).is_none())
            {
                return Err(CliError::usage(format!(
                    "r={r} has no standard test count; pass --t"
                )));
            }
        }

        let out = Staged::new(&self.common.out)?;
        let dump_dir = self.dump_distances.map(Staged::new).transpose()?;
        let models_dir = self
            .kde
            .and_then(|k| k.save_models.as_deref())
            .map(Staged::new)
            .transpose()?;

        let mut inputs = Vec::new();
        let train = self.load(self.train, &mut inputs)?;
        let test = self.test.map(|p| self.load(p, &mut inputs)).transpose()?;

        let q = match self.grid.q {
            Some(q) => q,
            None => question_count(&train),
        };
        let mut base =
            ExperimentConfig::new(q, plan.r_values[0], plan.n_values[0], plan.p_values[0]);
        base.kl = kl;
        base.kde_rule = kde_rule;
        if let Some(t) = self.grid.t {
            base.t = t;
            base.custom_pairs = true;
        }

        let hooks = CliHooks {
            distances: dump_dir.as_ref().map(|s| s.path().to_path_buf()),
            models_out: models_dir.as_ref().map(|s| s.path().to_path_buf()),
            models_in: self.kde.and_then(|k| k.load_models.clone()),
        };
        let results = detector::sweep(&train, test.as_deref(), &plan, &base, &hooks)?;

        self.write_reports(&out, &results)?;

        let config = json!({
            "base": base,
            "plan": plan,
            "train": self.train,
            "test": self.test,
            "dump_distances": self.dump_distances,
            "save_models": self.kde.and_then(|k| k.save_models.as_ref()),
            "load_models": self.kde.and_then(|k| k.load_models.as_ref()),
            "dump_scores": self.kde.is_some_and(|k| k.dump_scores),
        });
        let manifest = |command| {
            let mut m = RunManifest::new(command, self.common.seed, started, config.clone());
            m.inputs = inputs.clone();
            m
        };
        if let Some(dir) = dump_dir {
            dir.commit(manifest(self.command))?;
        }
        if let Some(dir) = models_dir {
            dir.commit(manifest(self.command))?;
        }
        out.commit(manifest(self.command))?;
        Ok(())
    }

    fn write_reports(
        &self,
        out: &Staged,
        results: &[CellResult],
    ) -> std::result::Result<(), CliError> {
        let write = |name: &str, f: &dyn Fn(&mut dyn Write) -> std::io::Result<()>| {
            let mut w = out.create(name)?;
            f(&mut w).map_err(|e| CliError::write(&out.path().join(name), e))
        };
        if self.stages.compare {
            let rows: Vec<_> = results
                .iter()
                .filter_map(|c| c.comparison.as_ref())
                .collect();
            write("comparison.csv", &|w| {
                report::write_comparison_csv(w, rows.iter().copied())
            })?;
            write("comparison.json", &|w| report::write_json(w, &rows))?;
            write("boxplot.csv", &|w| {
                report::write_boxplot_csv(w, rows.iter().copied())
            })?;
        }
        if self.stages.evaluate {
            let rows: Vec<_> = results
                .iter()
                .filter_map(|c| c.evaluation.as_ref())
                .collect();
            write("eval.csv", &|w| {
                report::write_eval_csv(w, rows.iter().copied())
            })?;
            write("eval.json", &|w| report::write_json(w, &rows))?;
            if self.kde.is_some_and(|k| k.dump_scores) {
                for e in &rows {
                    let name = format!("scores_{}.csv", cell_stem(e.cell));
                    write(&name, &|w| report::write_scores_csv(w, &e.scores))?;
                }
            }
        }
        Ok(())
    }
}
