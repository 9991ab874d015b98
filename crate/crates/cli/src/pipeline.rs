//! Stage runners and the run manifest.
//!
//! Every stage reads its inputs from, and writes its outputs to, the output
//! directory:
//!
//! ```text
//! data/                      dataset directory and instance.json
//! model.json                 trained checkpoint
//! training_log.csv, split.json
//! embeddings.json
//! days/{source}_k{K}.json    representative day sets
//! baseline.json              uncapped emission and caps per goal
//! plans/{source}_k{K}_g{G}.json
//! solutions/{source}_k{K}_g{G}.json, solutions/{source}_k{K}_g{G}_days.csv
//! comparison.csv, comparison.json, summary.csv, plots/
//! manifest.json
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use games_core::games::{embed_all, load_checkpoint, save_checkpoint, train, EmbeddingSet, Split, TrainingLog};
use games_core::gtep::{
    baseline_emission, check_feasibility, emission_cap_for_goal, evaluate_full_horizon_warm, solve_planning, summarize,
    ComparisonReport, ComparisonRow, CostBreakdown, GasInvestments, GtepInstance, GtepSolution, PowerInvestments,
};
use games_core::repdays::{kmedoids, kmedoids_raw, RepresentativeDaySet, Source};
use games_core::{Dataset, Model};
use games_solver::WarmStart;

use crate::config::{stage_seed, DataSource, ExperimentConfig, STAGES};
use crate::report::{read_comparison, report_plots};
use crate::synth::generate_synthetic;
use crate::{at, CliError, FailureKind};

const INGEST: &str = "ingest";
const SOURCES: [Source; 2] = [Source::Embeddings, Source::Raw];
const DAY_CSV_HEADER: &str = "day,ng_generation_mwh,fuel_mmbtu,power_shed_mwh,gas_shed_mmbtu";

/// Seeds, config digest, versions and output digests of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub master_seed: u64,
    pub stage_seeds: BTreeMap<String, u64>,
    pub config_sha256: String,
    pub stages: Vec<String>,
    /// SHA-256 of every output, keyed by path relative to the output directory.
    pub files: BTreeMap<String, String>,
}

impl Manifest {
    fn new(cfg: &ExperimentConfig) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed: cfg.seed,
            stage_seeds: STAGES.iter().map(|s| (s.to_string(), stage_seed(cfg.seed, s))).collect(),
            config_sha256: cfg.hash(),
            stages: Vec::new(),
            files: BTreeMap::new(),
        }
    }

    fn record(&mut self, root: &Path, stage: &str, files: &[PathBuf]) -> Result<(), CliError> {
        if !self.stages.iter().any(|s| s == stage) {
            self.stages.push(stage.to_string());
        }
        for f in files {
            let bytes = std::fs::read(f).map_err(at(stage))?;
            let rel = f.strip_prefix(root).unwrap_or(f).to_string_lossy().replace('\\', "/");
            self.files.insert(rel, hex(&Sha256::digest(&bytes)));
        }
        Ok(())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Output paths of a run.
struct Layout {
    root: PathBuf,
}

impl Layout {
    fn data(&self) -> PathBuf {
        self.root.join("data")
    }
    fn instance(&self) -> PathBuf {
        self.data().join("instance.json")
    }
    fn model(&self) -> PathBuf {
        self.root.join("model.json")
    }
    fn training_log(&self) -> PathBuf {
        self.root.join("training_log.csv")
    }
    fn split(&self) -> PathBuf {
        self.root.join("split.json")
    }
    fn embeddings(&self) -> PathBuf {
        self.root.join("embeddings.json")
    }
    fn day_set(&self, source: Source, k: usize) -> PathBuf {
        self.root.join("days").join(format!("{source}_k{k}.json"))
    }
    fn baseline(&self) -> PathBuf {
        self.root.join("baseline.json")
    }
    fn plan(&self, run: &Run) -> PathBuf {
        self.root.join("plans").join(format!("{}.json", run.stem()))
    }
    fn solution(&self, run: &Run) -> PathBuf {
        self.root.join("solutions").join(format!("{}.json", run.stem()))
    }
    fn solution_days(&self, run: &Run) -> PathBuf {
        self.root.join("solutions").join(format!("{}_days.csv", run.stem()))
    }
    fn comparison(&self) -> PathBuf {
        self.root.join("comparison.csv")
    }
    fn report(&self) -> PathBuf {
        self.root.join("comparison.json")
    }
    fn summary(&self) -> PathBuf {
        self.root.join("summary.csv")
    }
    fn plots(&self) -> PathBuf {
        self.root.join("plots")
    }
    fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }
}

/// One (K, source, goal) planning run.
#[derive(Debug, Clone, Copy)]
struct Run {
    k: usize,
    source: Source,
    goal: f64,
}

impl Run {
    fn stem(&self) -> String {
        format!("{}_k{}_g{}", self.source, self.k, (self.goal * 1e4).round() / 100.0)
    }
}

fn runs(cfg: &ExperimentConfig) -> Vec<Run> {
    let mut out = Vec::new();
    for &k in &cfg.k_list {
        for source in SOURCES {
            for &goal in &cfg.reduction_goals {
                out.push(Run { k, source, goal });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Baseline {
    emission: f64,
    /// `(goal, cap)` pairs.
    caps: Vec<(f64, f64)>,
}

/// Full-horizon outcome of one run, without the primal vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SolutionReport {
    k: usize,
    source: Source,
    goal: f64,
    emission_cap: Option<f64>,
    objective: f64,
    planning_objective: f64,
    medoids: Vec<usize>,
    x_e: PowerInvestments,
    x_g: GasInvestments,
    breakdown: CostBreakdown,
    max_violation: f64,
    worst_family: Option<String>,
}

fn create_parent(path: &Path, stage: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(at(stage))?;
    }
    Ok(())
}

fn read_json<T: DeserializeOwned>(path: &Path, stage: &str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        let kind = if e.kind() == std::io::ErrorKind::NotFound { FailureKind::Input } else { FailureKind::Io };
        CliError::stage(stage, kind, format!("{}: {e}", path.display()))
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::stage(stage, FailureKind::Input, format!("{}: {e}", path.display())))
}

/// Writes `value` and parses the file back as `T`.
fn write_json<T: Serialize + DeserializeOwned>(path: &Path, value: &T, stage: &str) -> Result<PathBuf, CliError> {
    create_parent(path, stage)?;
    let text = serde_json::to_string_pretty(value).map_err(at(stage))?;
    std::fs::write(path, text).map_err(at(stage))?;
    read_json::<T>(path, stage)?;
    Ok(path.to_path_buf())
}

/// Checks that a CSV file starts with `header` (after `#` comment lines)
/// and that every record has the header's width.
fn validate_csv(path: &Path, header: &str, stage: &str) -> Result<(), CliError> {
    let text = std::fs::read_to_string(path).map_err(at(stage))?;
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let found = rdr.headers().map_err(at(stage))?.iter().collect::<Vec<_>>().join(",");
    if found != header {
        return Err(CliError::stage(stage, FailureKind::Io, format!("{}: header {found:?}", path.display())));
    }
    for rec in rdr.records() {
        rec.map_err(at(stage))?;
    }
    Ok(())
}

fn load_dataset(l: &Layout) -> Result<(Dataset, GtepInstance), CliError> {
    let data = Dataset::load_dir(&l.data()).map_err(at(INGEST))?;
    let instance = GtepInstance::read_json(&l.instance()).map_err(at(INGEST))?;
    instance.validate().map_err(at(INGEST))?;
    Ok((data, instance))
}

fn synth_stage(cfg: &ExperimentConfig, l: &Layout) -> Result<Vec<PathBuf>, CliError> {
    let (data, instance) = match &cfg.data {
        DataSource::Synthetic(p) => generate_synthetic(p, stage_seed(cfg.seed, "synth"))?,
        DataSource::Files { dataset_dir, instance } => {
            let data = Dataset::load_dir(dataset_dir).map_err(at(INGEST))?;
            let inst = GtepInstance::read_json(instance).map_err(at(INGEST))?;
            (data, inst)
        }
    };
    instance.validate().map_err(at(INGEST))?;
    data.save_dir(&l.data()).map_err(at("synth"))?;
    instance.write_json(&l.instance()).map_err(at("synth"))?;
    let (reloaded, _) = load_dataset(l)?;
    if reloaded.len() != data.len() || reloaded.dims() != data.dims() {
        return Err(CliError::stage("synth", FailureKind::Io, "dataset directory does not round-trip"));
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(l.data())
        .map_err(at("synth"))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    files.sort();
    Ok(files)
}

fn train_stage(cfg: &ExperimentConfig, l: &Layout) -> Result<Vec<PathBuf>, CliError> {
    let (data, _) = load_dataset(l)?;
    let seed = stage_seed(cfg.seed, "train");
    let games = games_core::games::GamesConfig { rng_seed: seed, ..cfg.games.clone() };
    let split = Split::seeded(data.len(), games.validation_fraction, seed).map_err(at("train"))?;
    let (model, log): (Model, TrainingLog) = train(&data, &games, &split).map_err(at("train"))?;
    log::info!(
        "trained {} epochs, best validation loss {:.6e} at epoch {}",
        log.entries.len() - 1,
        log.best_val_loss(),
        log.best_epoch
    );
    save_checkpoint(&model, &l.model()).map_err(at("train"))?;
    load_checkpoint::<f64>(&l.model()).map_err(at("train"))?;
    log.write_csv(&l.training_log()).map_err(at("train"))?;
    validate_csv(&l.training_log(), "epoch,train_loss,val_loss", "train")?;
    let split_path = write_json(&l.split(), &split, "train")?;
    Ok(vec![l.model(), l.training_log(), split_path])
}

fn embed_stage(l: &Layout) -> Result<Vec<PathBuf>, CliError> {
    let (data, _) = load_dataset(l)?;
    let model: Model = load_checkpoint(&l.model()).map_err(at("embed"))?;
    let emb = embed_all(&model, &data).map_err(at("embed"))?;
    Ok(vec![write_json(&l.embeddings(), &emb, "embed")?])
}

fn cluster_stage(cfg: &ExperimentConfig, l: &Layout) -> Result<Vec<PathBuf>, CliError> {
    let stage = "cluster";
    let (data, _) = load_dataset(l)?;
    let emb: EmbeddingSet<f64> = read_json(&l.embeddings(), stage)?;
    if emb.len() != data.len() {
        return Err(CliError::stage(stage, FailureKind::Input, "embeddings do not match the dataset"));
    }
    let normalized = data.normalize();
    let seed = stage_seed(cfg.seed, stage);
    let mut files = Vec::new();
    for &k in &cfg.k_list {
        let sets = [kmedoids(&emb, k, seed).map_err(at(stage))?, kmedoids_raw(&normalized, k, seed).map_err(at(stage))?];
        for set in &sets {
            let path = l.day_set(set.source, k);
            create_parent(&path, stage)?;
            set.write_json(&path).map_err(at(stage))?;
            RepresentativeDaySet::read_json(&path).map_err(at(stage))?.check().map_err(at(stage))?;
            files.push(path);
        }
    }
    Ok(files)
}

fn read_day_set(l: &Layout, run: &Run, stage: &str) -> Result<RepresentativeDaySet, CliError> {
    let set = RepresentativeDaySet::read_json(&l.day_set(run.source, run.k)).map_err(at(stage))?;
    set.check().map_err(at(stage))?;
    Ok(set)
}

fn plan_stage(cfg: &ExperimentConfig, l: &Layout) -> Result<Vec<PathBuf>, CliError> {
    let stage = "plan";
    let (data, instance) = load_dataset(l)?;
    let opts = cfg.solver.options();
    let emission = baseline_emission(&instance, &data, &opts).map_err(at(stage))?;
    log::info!("baseline emission {emission:.6e} tCO2");
    let caps = cfg.reduction_goals.iter().map(|&g| (g, emission_cap_for_goal(emission, g))).collect();
    let mut files = vec![write_json(&l.baseline(), &Baseline { emission, caps }, stage)?];
    let mut cache: BTreeMap<(Vec<usize>, Vec<usize>, u64), GtepSolution> = BTreeMap::new();
    for run in runs(cfg) {
        let set = read_day_set(l, &run, stage)?;
        let key = (set.medoids.clone(), set.weights.clone(), run.goal.to_bits());
        let plan = match cache.get(&key) {
            Some(hit) => hit.clone(),
            None => {
                let inst = instance.with_emission_cap(Some(emission_cap_for_goal(emission, run.goal)));
                let plan = solve_planning(&inst, &set, &data, &opts).map_err(at(stage))?;
                if !plan.has_solution() {
                    let msg = format!("{}: status {:?}, certificate rows {:?}", run.stem(), plan.status, plan.infeasible_rows);
                    let kind = if plan.infeasible_rows.is_empty() { FailureKind::Numerical } else { FailureKind::Infeasible };
                    return Err(CliError::stage(stage, kind, msg));
                }
                log::info!("{}: planning objective {:.6e}", run.stem(), plan.objective);
                cache.insert(key, plan.clone());
                plan
            }
        };
        files.push(write_json(&l.plan(&run), &plan, stage)?);
    }
    Ok(files)
}

type Evaluated = (SolutionReport, GtepSolution);

fn evaluate_run(
    instance: &GtepInstance,
    data: &Dataset,
    plan: &GtepSolution,
    run: &Run,
    medoids: Vec<usize>,
    opts: &games_solver::SolverOptions,
    start: Option<&WarmStart>,
) -> Result<Evaluated, CliError> {
    let stage = "evaluate";
    let inst = instance.with_emission_cap(plan.emission_cap);
    let full = evaluate_full_horizon_warm(&inst, plan, data, opts, start).map_err(at(stage))?;
    let report = check_feasibility(&inst, &full, data);
    let max_violation = report.max_violation();
    log::info!("{}: total {:.6e}, max violation {max_violation:.2e}", run.stem(), full.breakdown.total);
    let summary = SolutionReport {
        k: run.k,
        source: run.source,
        goal: run.goal,
        emission_cap: plan.emission_cap,
        objective: full.objective,
        planning_objective: plan.objective,
        medoids,
        x_e: full.x_e.clone(),
        x_g: full.x_g.clone(),
        breakdown: full.breakdown,
        max_violation,
        worst_family: report.worst().map(|w| format!("{} at {}", w.family, w.location)),
    };
    Ok((summary, full))
}

/// Maps `f` over `items` on up to `available_parallelism` scoped threads,
/// returning results in input order.
fn par_map<I: Sync, O: Send>(items: &[I], f: impl Fn(&I) -> O + Sync) -> Vec<O> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(items.len().max(1));
    if workers <= 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(workers);
    std::thread::scope(|s| {
        let handles: Vec<_> = items.chunks(chunk).map(|c| s.spawn(|| c.iter().map(&f).collect::<Vec<_>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("evaluation worker panicked")).collect()
    })
}

fn day_csv(full: &GtepSolution, instance: &GtepInstance) -> String {
    let lay = &full.layout;
    let mut out = format!("{DAY_CSV_HEADER}\n");
    for (d, &(day, _)) in full.days.iter().enumerate() {
        let mut gen = 0.0;
        let mut shed = 0.0;
        for h in 0..lay.hours {
            for (p, plant) in instance.power.plants.iter().enumerate() {
                if plant.is_ng_fired() {
                    gen += full.x[lay.gen(d, h, p)];
                }
            }
            for z in 0..lay.zones {
                shed += full.x[lay.shed(d, h, z)];
            }
        }
        let fuel: f64 = (0..lay.edges).map(|e| full.x[lay.fuel(d, e)]).sum();
        let gas_shed: f64 = (0..lay.gas_nodes).map(|n| full.x[lay.gas_shed(d, n)]).sum();
        out.push_str(&format!("{day},{gen},{fuel},{shed},{gas_shed}\n"));
    }
    out
}

fn evaluate_stage(cfg: &ExperimentConfig, l: &Layout) -> Result<Vec<PathBuf>, CliError> {
    let stage = "evaluate";
    let (data, instance) = load_dataset(l)?;
    let opts = cfg.solver.options();
    let mut jobs = Vec::new();
    for run in runs(cfg) {
        let plan: GtepSolution = read_json(&l.plan(&run), stage)?;
        let medoids = read_day_set(l, &run, stage)?.medoids;
        jobs.push((run, plan, medoids));
    }
    let key = |plan: &GtepSolution| -> (Vec<u64>, Option<u64>) {
        let n = plan.layout.num_investment_cols();
        (plan.x[..n].iter().map(|v| v.round().to_bits()).collect(), plan.emission_cap.map(f64::to_bits))
    };
    let mut unique: BTreeMap<(Vec<u64>, Option<u64>), usize> = BTreeMap::new();
    let mut distinct = Vec::new();
    for (i, (_, plan, _)) in jobs.iter().enumerate() {
        unique.entry(key(plan)).or_insert_with(|| {
            distinct.push(i);
            distinct.len() - 1
        });
    }
    let evaluate = |i: usize, start: Option<&WarmStart>| {
        let (run, plan, medoids) = &jobs[i];
        evaluate_run(&instance, &data, plan, run, medoids.clone(), &opts, start)
    };
    // Runs sharing a goal are solved in a fixed chain, each starting from
    // the previous basis; chains are independent of each other.
    let mut chains: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (slot, &i) in distinct.iter().enumerate() {
        chains.entry(jobs[i].0.goal.to_bits()).or_default().push(slot);
    }
    let chains: Vec<Vec<usize>> = chains.into_values().collect();
    let solved = par_map(&chains, |chain| {
        let mut out: Vec<(usize, Evaluated)> = Vec::with_capacity(chain.len());
        for &slot in chain {
            let start = out.last().and_then(|(_, (_, full))| full.basis.as_ref());
            let result = evaluate(distinct[slot], start)?;
            out.push((slot, result));
        }
        Ok::<_, CliError>(out)
    });
    let mut results: Vec<Option<Evaluated>> = (0..distinct.len()).map(|_| None).collect();
    for chain in solved {
        for (slot, result) in chain? {
            results[slot] = Some(result);
        }
    }
    let results: Vec<Evaluated> = results.into_iter().map(|r| r.expect("every run evaluated")).collect();
    let mut files = Vec::new();
    for (run, plan, medoids) in &jobs {
        let (base, full) = &results[unique[&key(plan)]];
        let summary = SolutionReport { k: run.k, source: run.source, goal: run.goal, medoids: medoids.clone(), planning_objective: plan.objective, ..base.clone() };
        files.push(write_json(&l.solution(run), &summary, stage)?);
        let path = l.solution_days(run);
        std::fs::write(&path, day_csv(full, &instance)).map_err(at(stage))?;
        validate_csv(&path, DAY_CSV_HEADER, stage)?;
        files.push(path);
    }
    Ok(files)
}

fn compare_stage(cfg: &ExperimentConfig, l: &Layout) -> Result<Vec<PathBuf>, CliError> {
    let stage = "compare";
    let baseline: Baseline = read_json(&l.baseline(), stage)?;
    let mut rows = Vec::new();
    for run in runs(cfg) {
        let s: SolutionReport = read_json(&l.solution(&run), stage)?;
        let b = s.breakdown;
        rows.push(ComparisonRow {
            k: s.k,
            source: s.source,
            goal: s.goal,
            emission_cap: s.emission_cap.unwrap_or(f64::MAX),
            total: b.total,
            power: b.power_system,
            ng: b.ng_system,
            invest_fom: b.invest_fom_power,
            shed: b.shed_power + b.shed_gas,
            emission: b.emission_power,
            emission_total: b.emission_total,
            max_violation: s.max_violation,
            medoids: s.medoids,
        });
    }
    let summary = summarize(&rows);
    let report = ComparisonReport { baseline_emission: baseline.emission, rows, summary };
    std::fs::write(l.comparison(), report.to_csv()).map_err(at(stage))?;
    let parsed = read_comparison(&l.comparison()).map_err(|e| CliError::stage(stage, FailureKind::Io, e))?;
    if parsed.len() != report.rows.len() {
        return Err(CliError::stage(stage, FailureKind::Io, "comparison CSV row count mismatch"));
    }
    std::fs::write(l.summary(), report.summary_csv()).map_err(at(stage))?;
    validate_csv(&l.summary(), "goal,Total,Power,NG,Inv-FOM,Shedding,Emission", stage)?;
    let mut files = vec![l.comparison(), l.summary(), write_json(&l.report(), &report, stage)?];
    let plots = report_plots(&l.comparison(), &l.plots()).map_err(|e| CliError::stage(stage, FailureKind::Io, e))?;
    for p in &plots {
        validate_csv(p, &plot_header(p, &report), stage)?;
    }
    files.extend(plots);
    Ok(files)
}

fn plot_header(path: &Path, report: &ComparisonReport) -> String {
    if path.file_name().is_some_and(|n| n == "summary.csv") {
        return "goal,Total,Power,NG,Inv-FOM,Shedding,Emission".into();
    }
    let mut series: Vec<(f64, Source)> = report.rows.iter().map(|r| (r.goal, r.source)).collect();
    series.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    series.dedup();
    let mut h = String::from("K");
    for (goal, source) in series {
        h.push_str(&format!(",{source}_{goal}"));
    }
    h
}

fn update_manifest(cfg: &ExperimentConfig, l: &Layout, stage: &str, files: &[PathBuf]) -> Result<Manifest, CliError> {
    let path = l.manifest();
    let mut manifest = match read_json::<Manifest>(&path, stage) {
        Ok(m) if m.config_sha256 == cfg.hash() => m,
        _ => Manifest::new(cfg),
    };
    manifest.record(&l.root, stage, files)?;
    write_json(&path, &manifest, stage)?;
    Ok(manifest)
}

/// Runs one stage with its overrides applied and records its outputs in
/// `manifest.json`.
pub fn run_stage(cfg: &ExperimentConfig, stage: &str) -> Result<Manifest, CliError> {
    if !STAGES.contains(&stage) {
        return Err(CliError::Config(format!("unknown stage {stage}; expected one of {STAGES:?}")));
    }
    let scfg = cfg.for_stage(stage)?;
    let l = Layout { root: scfg.output_dir.clone() };
    std::fs::create_dir_all(&l.root).map_err(at(stage))?;
    log::info!("stage {stage}");
    let files = match stage {
        "synth" => synth_stage(&scfg, &l)?,
        "train" => train_stage(&scfg, &l)?,
        "embed" => embed_stage(&l)?,
        "cluster" => cluster_stage(&scfg, &l)?,
        "plan" => plan_stage(&scfg, &l)?,
        "evaluate" => evaluate_stage(&scfg, &l)?,
        _ => compare_stage(&scfg, &l)?,
    };
    update_manifest(cfg, &l, stage, &files)
}

/// Runs the stages in order, stopping after `until` when given.
pub fn run_pipeline(cfg: &ExperimentConfig, until: Option<&str>) -> Result<Manifest, CliError> {
    cfg.validate()?;
    let cfg = cfg.for_stage("pipeline")?;
    let last = match until {
        Some(s) => STAGES
            .iter()
            .position(|&x| x == s)
            .ok_or_else(|| CliError::Config(format!("unknown stage {s}; expected one of {STAGES:?}")))?,
        None => STAGES.len() - 1,
    };
    let root = cfg.output_dir.clone();
    let _ = std::fs::remove_file(root.join("manifest.json"));
    let mut manifest = None;
    for stage in &STAGES[..=last] {
        manifest = Some(run_stage(&cfg, stage)?);
    }
    Ok(manifest.expect("at least one stage runs"))
}
