use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use trafficbench::attack::{attack_windows, build_windows, defend_dataset, AttackKind, Dataset, PipelineConfig};
use trafficbench::defense::DefenseRegistry;
use trafficbench::eval::{
    adversary_confidence_sweep, emit_report, evaluate, topk_list, EnvironmentRecord, EvalReport, LedgerSummary,
    ReportMeta,
};
use trafficbench::imaging::{export_raster, Representation};
use trafficbench::ingest::{
    background_filter, parse_labels, parse_trace_at, split_stratified, synth_activity_home, validate_labels,
    ActivityCatalog, ActivityHomeSpec,
};
use trafficbench::seed::{stage_seed, Stage};
use trafficbench::Error;

use crate::config::InputSpec;
use crate::store::{align_traces, ledger_rows, read_store, write_store};
use crate::{AttackArgs, CliError, DefendArgs, EncodeArgs, EvalArgs, Globals, IngestArgs};

pub const PREDICTIONS_SCHEMA: &str = "trafficbench-predictions/1";

/// Test-split rankings of one attack run, ready for scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictions {
    pub schema: String,
    pub classes: Vec<usize>,
    pub labels: Vec<usize>,
    pub ranked: Vec<Vec<usize>>,
    pub ledger: Option<LedgerSummary>,
    pub metadata: ReportMeta,
    pub epoch_loss: Vec<f64>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn make_dir(dir: &Path) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn require_file(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("input file not found: {}", path.display())))
    }
}

fn in_file(path: &Path, e: Error) -> CliError {
    CliError::Runtime(Error::Format(format!("{}: {e}", path.display())))
}

fn synth_dataset(seed: u64) -> Result<Dataset, Error> {
    Ok(synth_activity_home(&ActivityHomeSpec::desk_fixture(stage_seed(seed, Stage::Synth)))?.into())
}

pub fn load_inputs(spec: &InputSpec) -> Result<Dataset, CliError> {
    require_file(&spec.traces)?;
    require_file(&spec.labels)?;
    let open = |p: &Path| File::open(p).map_err(|e| CliError::Runtime(Error::io(p, e)));
    let traces = parse_trace_at(open(&spec.traces)?, spec.granularity_s).map_err(|e| in_file(&spec.traces, e))?;
    let mut traces = align_traces(traces, spec.impute_k).map_err(|e| in_file(&spec.traces, e))?;
    if let Some(cap) = spec.background_cap_kb_s {
        let mut clipped = 0;
        for t in &mut traces {
            let f = background_filter(t, cap)?;
            clipped += f.clipped;
            *t = f.trace;
        }
        log::info!("clipped {clipped} samples above {cap} KB/s");
    }
    let labels = parse_labels(open(&spec.labels)?).map_err(|e| in_file(&spec.labels, e))?;
    let catalog = ActivityCatalog::from_labels(&labels);
    validate_labels(&labels, &catalog).map_err(|e| in_file(&spec.labels, e))?;
    Ok(Dataset {
        traces,
        labels,
        catalog,
    })
}

pub fn cmd_synth(g: &Globals) -> Result<(), CliError> {
    let out = g.out()?;
    let ds = synth_dataset(g.seed()?)?;
    write_store(&out, &ds, None, &[])?;
    log::info!("wrote {} traces and {} labels to {}", ds.traces.len(), ds.labels.len(), out.display());
    Ok(())
}

pub fn cmd_ingest(g: &Globals, a: &IngestArgs) -> Result<(), CliError> {
    let out = g.out()?;
    let spec = InputSpec {
        traces: a.traces.clone(),
        labels: a.labels.clone(),
        granularity_s: a.granularity,
        impute_k: a.impute_k,
        background_cap_kb_s: a.background_cap,
    };
    if a.granularity == 0 {
        return Err(CliError::Usage("--granularity must be positive".into()));
    }
    let ds = load_inputs(&spec)?;
    write_store(&out, &ds, None, &[])?;
    Ok(())
}

pub fn cmd_defend(g: &Globals, a: &DefendArgs) -> Result<(), CliError> {
    let out = g.out()?;
    let store = read_store(&a.store)?;
    if store.defense.is_some() {
        return Err(CliError::Usage(format!("{} is already defended", a.store.display())));
    }
    let cfg = g.experiment()?;
    let mut spec = cfg.defense.clone();
    if let Some(m) = &a.method {
        spec.method = m.clone();
    }
    if a.threshold.is_some() {
        spec.flatten_threshold_kb_s = a.threshold;
    }
    let registry = DefenseRegistry::new();
    let ds = &store.dataset;
    let dcfg = spec.resolve(&registry, &ds.traces, stage_seed(cfg.seed, Stage::Defense))?;
    let defended = defend_dataset(ds, &dcfg, &cfg.motif, &registry)?;
    let ledger = defended.ledger();
    log::info!(
        "{}: V = {:.3} KB/s, overhead {:?}%",
        defended.defense,
        dcfg.flatten_threshold_kb_s,
        ledger.overhead_pct
    );
    let out_ds = Dataset {
        traces: defended.traces.clone(),
        labels: ds.labels.clone(),
        catalog: ds.catalog.clone(),
    };
    write_store(&out, &out_ds, Some(&dcfg), &ledger_rows(&defended.outcomes))?;
    Ok(())
}

fn parse_representations(names: &[String]) -> Result<Vec<Representation>, CliError> {
    names
        .iter()
        .map(|n| Representation::from_name(n).ok_or_else(|| CliError::Usage(format!("unknown representation `{n}`"))))
        .collect()
}

pub fn cmd_encode(g: &Globals, a: &EncodeArgs) -> Result<(), CliError> {
    let out = g.out()?;
    let store = read_store(&a.store)?;
    let mut exp = g.experiment()?;
    if let Some(names) = &a.representations {
        exp.attack.representations = parse_representations(names)?;
    }
    if let Some(size) = a.size {
        exp.attack.image_size = size;
    }
    let mut cfg = exp.pipeline()?;
    cfg.attack = AttackKind::Fusion;
    cfg.augment_shifts_s.clear();
    let ds = &store.dataset;
    let windows = build_windows(&cfg, &ds.labels, &ds.traces)?;
    let img_dir = out.join("images");
    make_dir(&img_dir)?;
    let mut index = String::from("label_index,activity_id,start_index,end_index,representation,file\n");
    for (r, rep) in cfg.representations.iter().enumerate() {
        for (p, img) in windows.images[r].iter().enumerate() {
            let label = windows.label_index[p];
            let name = format!("{label:05}_{}.ppm", rep.name());
            export_raster(img, &img_dir.join(&name))?;
            let w = windows.ranges[p];
            writeln!(
                index,
                "{label},{},{},{},{},images/{name}",
                windows.classes[p],
                w.start,
                w.end,
                rep.name()
            )
            .expect("writing to a string");
        }
    }
    let path = out.join("index.csv");
    fs::write(&path, index).map_err(|e| Error::io(&path, e))?;
    log::info!(
        "encoded {} segments x {} representations, dropped {}",
        windows.len(),
        cfg.representations.len(),
        windows.dropped
    );
    Ok(())
}

fn write_loss_csv(path: &Path, initial: Option<f64>, epoch_loss: &[f64]) -> Result<(), Error> {
    let mut s = String::from("epoch,loss\n");
    if let Some(l) = initial {
        writeln!(s, "0,{l}").expect("writing to a string");
    }
    for (e, l) in epoch_loss.iter().enumerate() {
        writeln!(s, "{},{l}", e + 1).expect("writing to a string");
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn cmd_attack(g: &Globals, a: &AttackArgs) -> Result<(), CliError> {
    let out = g.out()?;
    let store = read_store(&a.store)?;
    let mut exp = g.experiment()?;
    if let Some(k) = &a.attack {
        exp.attack.kind = k.clone();
    }
    let cfg = exp.pipeline()?;
    let ds = &store.dataset;
    let defended = store.defended();
    let windows = build_windows(&cfg, &ds.labels, &defended.traces)?;
    let split = split_stratified(&ds.label_classes(), stage_seed(exp.seed, Stage::Split))?;
    let res = attack_windows(&cfg, ds, &defended, &windows, &split, stage_seed(exp.seed, Stage::Attack))?;
    make_dir(&out)?;
    let train = res.train.as_ref();
    write_loss_csv(
        &out.join("loss.csv"),
        train.map(|t| t.initial_loss),
        train.map_or(&[][..], |t| &t.epoch_loss),
    )?;
    let pred = Predictions {
        schema: PREDICTIONS_SCHEMA.into(),
        classes: ds.classes(),
        labels: res.labels,
        ranked: res.ranked,
        ledger: res.report.ledger.clone(),
        metadata: res.report.metadata.clone(),
        epoch_loss: train.map_or_else(Vec::new, |t| t.epoch_loss.clone()),
    };
    write_json(&out.join("predictions.json"), &pred)?;
    log::info!("{} on {}: top-1 {:.3}, MCC {:.3}", pred.metadata.attack, pred.metadata.defense, res.report.top1, res.report.mcc);
    Ok(())
}

fn score(pred: &Predictions, topk: &[usize]) -> Result<EvalReport, Error> {
    let mut report = evaluate(&pred.ranked, &pred.labels, &pred.classes)?;
    report.ledger = pred.ledger.clone();
    report.metadata = pred.metadata.clone();
    report.topk = topk_list(&pred.ranked, &pred.labels, topk)?;
    Ok(report)
}

pub fn cmd_eval(g: &Globals, a: &EvalArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let out = g.out()?;
    require_file(&a.predictions)?;
    let text = fs::read_to_string(&a.predictions).map_err(|e| Error::io(&a.predictions, e))?;
    let pred: Predictions = serde_json::from_str(&text).map_err(|e| in_file(&a.predictions, e.into()))?;
    if pred.schema != PREDICTIONS_SCHEMA {
        return Err(CliError::Usage(format!(
            "{}: unsupported predictions schema `{}`",
            a.predictions.display(),
            pred.schema
        )));
    }
    let topk = match (&a.topk, &g.config) {
        (Some(k), _) => k.clone(),
        (None, Some(c)) => c.eval.topk.clone(),
        (None, None) => vec![1, 5],
    };
    if topk.iter().any(|&k| k == 0) {
        return Err(CliError::Usage("--topk entries must be at least 1".into()));
    }
    let report = score(&pred, &topk)?;
    make_dir(&out)?;
    let env = EnvironmentRecord::capture(started.elapsed().as_secs_f64());
    emit_report(&[report], &out.join("report.json"), Some(&env))?;
    Ok(())
}

pub fn cmd_run(g: &Globals) -> Result<(), CliError> {
    let started = Instant::now();
    let exp = g.experiment()?;
    let out = g.out()?;
    let cfg: PipelineConfig = exp.pipeline()?;
    let ds = match &exp.inputs {
        Some(spec) => load_inputs(spec)?,
        None => synth_dataset(exp.seed)?,
    };
    let registry = DefenseRegistry::new();
    let dcfg = exp
        .defense
        .resolve(&registry, &ds.traces, stage_seed(exp.seed, Stage::Defense))?;
    let defended = defend_dataset(&ds, &dcfg, &exp.motif, &registry)?;
    let windows = build_windows(&cfg, &ds.labels, &defended.traces)?;
    let split = split_stratified(&ds.label_classes(), stage_seed(exp.seed, Stage::Split))?;
    let attack_seed = stage_seed(exp.seed, Stage::Attack);
    let res = attack_windows(&cfg, &ds, &defended, &windows, &split, attack_seed)?;

    make_dir(&out)?;
    let mut report = res.report.clone();
    report.topk = topk_list(&res.ranked, &res.labels, &exp.eval.topk)?;
    let mut reports = vec![report];
    let train = res.train.as_ref();
    write_loss_csv(
        &out.join("loss.csv"),
        train.map(|t| t.initial_loss),
        train.map_or(&[][..], |t| &t.epoch_loss),
    )?;
    if !exp.eval.knowledge_levels.is_empty() {
        let curve = adversary_confidence_sweep(
            &cfg,
            &ds,
            &defended,
            &windows,
            &split,
            &exp.eval.knowledge_levels,
            attack_seed,
        )?;
        let path = out.join("ac_curve.csv");
        let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
        curve.write_csv(BufWriter::new(f))?;
        log::info!("adversary confidence slope {:.3}", curve.slope());
        reports.extend(curve.reports);
    }
    write_json(&out.join("ledger.json"), &ledger_rows(&defended.outcomes))?;
    write_json(&out.join("config.json"), &exp)?;
    let env = EnvironmentRecord::capture(started.elapsed().as_secs_f64());
    emit_report(&reports, &out.join("report.json"), Some(&env))?;
    log::info!(
        "{} vs {}: top-1 {:.3}, MCC {:.3}",
        res.report.metadata.attack,
        res.report.metadata.defense,
        res.report.top1,
        res.report.mcc
    );
    Ok(())
}
