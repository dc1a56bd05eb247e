//! End-to-end attack: defend, segment, extract, encode, train, predict, evaluate.
//!
//! The adversary observes only the home aggregate: per-direction sums of the
//! (defended) device traces. Every labelled activity yields one window that
//! starts `lead_s` before the activity; windows without a motif in either
//! direction are dropped.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::defense::{
    build_motif_bank, fit_markov_model, rate_quantile, DefenseConfig, DefenseContext, DefenseMethod,
    DefenseOutcome, DefenseRegistry, IndexRange, MarkovUserModel, MotifBank,
};
use crate::error::{Error, Result, StageContext};
use crate::eval::{evaluate, EvalReport, LedgerSummary, ReportMeta};
use crate::imaging::{
    encode_gaf_composite, encode_heat_map, encode_line_chart, encode_scatter, GafConfig, ImageTensor,
    Representation, SourceWindow,
};
use crate::ingest::{sum_traces, ActivityCatalog, ActivityLabel, DatasetSplit, Direction, RateTrace, SynthHome, TraceKey};
use crate::matrix::Matrix;
use crate::motif::{compute_features, extract_motifs, Motif, FEATURE_DIM};

use super::classifier::{rank_classes, train_classifier, ClassifierHyper, ClassifierKind};
use super::fusion::{train_fusion, FusionArch, FusionData, FusionHyper, FusionNet, TrainReport};

/// Device id of the aggregate traces the adversary sees.
pub const HOME_DEVICE: &str = "home";
pub const WINDOW_FEATURE_DIM: usize = 2 * FEATURE_DIM;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentSpec {
    pub length_s: u32,
    pub lead_s: u32,
}

impl Default for SegmentSpec {
    fn default() -> Self {
        SegmentSpec { length_s: 40, lead_s: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MotifParams {
    pub threshold_kb_s: f64,
    pub window_half_n: usize,
}

impl Default for MotifParams {
    fn default() -> Self {
        MotifParams {
            threshold_kb_s: 1.0,
            window_half_n: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    Feature(ClassifierKind),
    Fusion,
}

impl AttackKind {
    pub fn name(self) -> String {
        match self {
            AttackKind::Feature(k) => k.name().to_string(),
            AttackKind::Fusion => "fusion".to_string(),
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        if s == "fusion" {
            return Some(AttackKind::Fusion);
        }
        ClassifierKind::from_name(s).map(AttackKind::Feature)
    }
}

/// Layer widths of the fusion net.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetShape {
    pub conv1: usize,
    pub conv2: usize,
    pub hidden: usize,
    pub pool_grid: usize,
}

impl Default for NetShape {
    fn default() -> Self {
        let a = FusionArch::new(&[Representation::Gaf], 2, 32);
        NetShape {
            conv1: a.conv1,
            conv2: a.conv2,
            hidden: a.hidden,
            pool_grid: a.pool_grid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub segment: SegmentSpec,
    pub motif: MotifParams,
    pub attack: AttackKind,
    pub classifier: ClassifierHyper,
    pub fusion: FusionHyper,
    pub net: NetShape,
    pub representations: Vec<Representation>,
    pub image_size: usize,
    pub gaf: GafConfig,
    /// Extra training windows at these offsets (seconds later than the
    /// nominal window); test windows are never shifted.
    pub augment_shifts_s: Vec<i32>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            segment: SegmentSpec::default(),
            motif: MotifParams::default(),
            attack: AttackKind::Feature(ClassifierKind::RandomForest),
            classifier: ClassifierHyper::default(),
            fusion: FusionHyper {
                epochs: 24,
                batch: 16,
                lr: 0.05,
                momentum: 0.9,
                ..FusionHyper::default()
            },
            net: NetShape::default(),
            representations: Representation::ALL.to_vec(),
            image_size: 32,
            gaf: GafConfig {
                gaf_num: 4,
                granularities: vec![1, 2, 4, 8],
                points: 16,
                ..GafConfig::default()
            },
            augment_shifts_s: vec![-4, -2, 2, 4],
        }
    }
}

/// Per-device traces with their activity labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub traces: Vec<RateTrace>,
    pub labels: Vec<ActivityLabel>,
    pub catalog: ActivityCatalog,
}

impl From<SynthHome> for Dataset {
    fn from(h: SynthHome) -> Self {
        Dataset {
            traces: h.traces,
            labels: h.labels,
            catalog: h.catalog,
        }
    }
}

impl Dataset {
    /// Catalog ids as class ids.
    pub fn classes(&self) -> Vec<usize> {
        self.catalog.ids().into_iter().map(|i| i as usize).collect()
    }

    pub fn label_classes(&self) -> Vec<usize> {
        self.labels.iter().map(|l| l.activity_id as usize).collect()
    }
}

/// Defense configuration for `method` with a home-wide level V: the 95th
/// percentile of all device rates, raised to the global maximum for RTP
/// (which may only pad upwards).
pub fn defense_config_for(method: DefenseMethod, traces: &[RateTrace], seed: u64) -> Result<DefenseConfig> {
    let q = rate_quantile(traces, 0.95).ok_or_else(|| Error::contract("no rates to set V from"))?;
    let max = traces.iter().map(RateTrace::max_rate).fold(0.0, f64::max);
    let v = if method == DefenseMethod::Rtp { q.max(max) } else { q };
    Ok(DefenseConfig::new(method, v.max(f64::MIN_POSITIVE), seed))
}

/// Device traces after a defense, with the ledger of every trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DefendedDataset {
    pub defense: String,
    pub traces: Vec<RateTrace>,
    pub outcomes: Vec<DefenseOutcome>,
}

impl DefendedDataset {
    pub fn ledger(&self) -> LedgerSummary {
        LedgerSummary::from_outcomes(&self.outcomes)
    }
}

/// Bank of device motifs and, for HTR, a user model fitted to the labels.
pub struct DefenseInputs {
    pub bank: MotifBank,
    pub model: Option<MarkovUserModel>,
}

impl DefenseInputs {
    pub fn prepare(ds: &Dataset, cfg: &DefenseConfig, motif: &MotifParams) -> Result<Self> {
        let bank = build_motif_bank(&ds.traces, motif.threshold_kb_s, motif.window_half_n)?;
        let model = if cfg.method == DefenseMethod::Htr {
            Some(fit_markov_model(&ds.labels, &bank, cfg.hmm_states, cfg.seed)?)
        } else {
            None
        };
        Ok(DefenseInputs { bank, model })
    }

    pub fn context(&self) -> DefenseContext<'_> {
        DefenseContext {
            bank: Some(&self.bank),
            model: self.model.as_ref(),
        }
    }
}

pub fn defend_dataset(
    ds: &Dataset,
    cfg: &DefenseConfig,
    motif: &MotifParams,
    registry: &DefenseRegistry,
) -> Result<DefendedDataset> {
    let outcomes = if cfg.method == DefenseMethod::Identity {
        registry.defend_all(&ds.traces, cfg, DefenseContext::default())
    } else {
        let inputs = DefenseInputs::prepare(ds, cfg, motif)?;
        registry.defend_all(&ds.traces, cfg, inputs.context())
    }
    .stage("defense")?;
    Ok(DefendedDataset {
        defense: cfg.method.name().to_string(),
        traces: outcomes.iter().map(|o| o.reshaped.clone()).collect(),
        outcomes,
    })
}

/// Home aggregate in/out traces and their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct HomeView {
    pub inbound: RateTrace,
    pub outbound: RateTrace,
    pub total: RateTrace,
}

impl HomeView {
    pub fn of(traces: &[RateTrace]) -> Result<Self> {
        let dir = |d: Direction| -> Result<RateTrace> {
            let sel: Vec<&RateTrace> = traces.iter().filter(|t| t.direction() == d).collect();
            if sel.is_empty() {
                // a home with traffic in one direction only
                let any = traces.first().ok_or_else(|| Error::contract("no traces"))?;
                return RateTrace::from_key(
                    TraceKey::new(HOME_DEVICE, d),
                    any.granularity_s(),
                    any.start_epoch_s(),
                    vec![0.0; any.len()],
                );
            }
            sum_traces(&sel, TraceKey::new(HOME_DEVICE, d))
        };
        let inbound = dir(Direction::In)?;
        let outbound = dir(Direction::Out)?;
        if !inbound.aligned_with(&outbound) {
            return Err(Error::contract("inbound and outbound aggregates are not aligned"));
        }
        let total = sum_traces(&[&inbound, &outbound], TraceKey::new(HOME_DEVICE, Direction::In))?;
        Ok(HomeView {
            inbound,
            outbound,
            total,
        })
    }
}

/// Window of each label on `trace`'s grid; `None` when it runs off the trace.
pub fn label_windows(labels: &[ActivityLabel], trace: &RateTrace, spec: &SegmentSpec) -> Vec<Option<IndexRange>> {
    let g = trace.granularity_s() as i64;
    let len = (spec.length_s as i64 / g).max(1) as usize;
    labels
        .iter()
        .map(|l| {
            let t0 = l.start_epoch_s - spec.lead_s as i64;
            if t0 < trace.start_epoch_s() {
                return None;
            }
            let a = ((t0 - trace.start_epoch_s()) / g) as usize;
            (a + len <= trace.len()).then(|| IndexRange::new(a, a + len))
        })
        .collect()
}

fn in_window<'m>(motifs: &'m [Motif], w: &IndexRange) -> impl Iterator<Item = &'m Motif> + 'm {
    let w = *w;
    motifs.iter().filter(move |m| w.contains(m.center_index))
}

/// The 12 motif features of the highest-peak motif in the window for each
/// direction (zeros when a direction has none).
pub fn window_features(inbound: &[Motif], outbound: &[Motif], w: &IndexRange) -> Vec<f64> {
    let mut row = Vec::with_capacity(WINDOW_FEATURE_DIM);
    for motifs in [inbound, outbound] {
        let best = in_window(motifs, w).fold(None::<&Motif>, |b, m| match b {
            Some(b) if b.peak() >= m.peak() => Some(b),
            _ => Some(m),
        });
        match best {
            Some(m) => row.extend(compute_features(m).to_array()),
            None => row.extend([0.0; FEATURE_DIM]),
        }
    }
    row
}

pub fn window_image(
    home: &HomeView,
    w: &IndexRange,
    rep: Representation,
    size: usize,
    gaf: &GafConfig,
) -> Result<ImageTensor> {
    let a = &home.inbound.rates()[w.start..w.end];
    let b = &home.outbound.rates()[w.start..w.end];
    let img = match rep {
        Representation::LineChart => encode_line_chart(a, b, size)?,
        Representation::HeatMap => encode_heat_map(a, b, size)?,
        Representation::ScatterPlot => encode_scatter(a, b, size)?,
        Representation::Gaf => encode_gaf_composite(&home.total, (w.start + w.end) / 2, gaf, size)?,
    };
    Ok(img.with_source(SourceWindow {
        trace: home.total.key().clone(),
        range: *w,
    }))
}

/// Windows of one defended dataset at one segment offset.
#[derive(Debug, Clone)]
pub struct WindowSet {
    /// Label index of each kept window.
    pub label_index: Vec<usize>,
    pub ranges: Vec<IndexRange>,
    pub classes: Vec<usize>,
    pub features: Matrix,
    /// Per representation, one image per kept window; empty for feature attacks.
    pub images: Vec<Vec<ImageTensor>>,
    pub dropped: usize,
    /// The same labels at the augmentation offsets; training draws on these too.
    pub shifted: Vec<WindowSet>,
}

/// Rows handed to a learner: classes, feature rows, and aligned images.
#[derive(Debug, Clone)]
pub struct Samples {
    pub classes: Vec<usize>,
    pub features: Matrix,
    pub images: Vec<Vec<ImageTensor>>,
}

impl Samples {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }
}

impl WindowSet {
    pub fn len(&self) -> usize {
        self.label_index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.label_index.is_empty()
    }

    /// Positions of kept windows whose label index is in `labels`, in the
    /// order of `labels`.
    pub fn positions_of(&self, labels: &[usize]) -> Vec<usize> {
        let pos: BTreeMap<usize, usize> = self.label_index.iter().enumerate().map(|(p, &l)| (l, p)).collect();
        labels.iter().filter_map(|l| pos.get(l).copied()).collect()
    }

    /// Kept windows of the given labels at this offset only.
    pub fn samples(&self, labels: &[usize]) -> Samples {
        let pos = self.positions_of(labels);
        Samples {
            classes: pos.iter().map(|&p| self.classes[p]).collect(),
            features: self.features.select_rows(&pos),
            images: self
                .images
                .iter()
                .map(|set| pos.iter().map(|&p| set[p].clone()).collect())
                .collect(),
        }
    }

    /// Kept windows of the given labels at this offset and every shifted one.
    pub fn training_samples(&self, labels: &[usize]) -> Samples {
        let mut s = self.samples(labels);
        for other in &self.shifted {
            let o = other.samples(labels);
            s.classes.extend(o.classes);
            let rows: Vec<&[f64]> = s.features.iter_rows().chain(o.features.iter_rows()).collect();
            s.features = if rows.is_empty() {
                Matrix::zeros(0, WINDOW_FEATURE_DIM)
            } else {
                Matrix::from_rows(&rows).expect("equal widths")
            };
            for (set, more) in s.images.iter_mut().zip(o.images) {
                set.extend(more);
            }
        }
        s
    }
}

fn windows_at(cfg: &PipelineConfig, labels: &[ActivityLabel], home: &HomeView, mi: &[Motif], mo: &[Motif], segment: &SegmentSpec) -> Result<WindowSet> {
    let mut out = WindowSet {
        label_index: Vec::new(),
        ranges: Vec::new(),
        classes: Vec::new(),
        features: Matrix::zeros(0, WINDOW_FEATURE_DIM),
        images: Vec::new(),
        dropped: 0,
        shifted: Vec::new(),
    };
    let mut rows = Vec::new();
    for (i, w) in label_windows(labels, &home.inbound, segment).into_iter().enumerate() {
        let Some(w) = w else {
            out.dropped += 1;
            continue;
        };
        if in_window(mi, &w).next().is_none() && in_window(mo, &w).next().is_none() {
            out.dropped += 1;
            continue;
        }
        rows.push(window_features(mi, mo, &w));
        out.label_index.push(i);
        out.ranges.push(w);
        out.classes.push(labels[i].activity_id as usize);
    }
    if !rows.is_empty() {
        out.features = Matrix::from_rows(&rows)?;
    }
    if cfg.attack == AttackKind::Fusion {
        out.images = cfg
            .representations
            .iter()
            .map(|&r| {
                out.ranges
                    .iter()
                    .map(|w| window_image(home, w, r, cfg.image_size, &cfg.gaf))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
            .stage("encode")?;
    }
    Ok(out)
}

pub fn build_windows(cfg: &PipelineConfig, labels: &[ActivityLabel], defended: &[RateTrace]) -> Result<WindowSet> {
    let home = HomeView::of(defended).stage("aggregate")?;
    let m = &cfg.motif;
    let mi = extract_motifs(&home.inbound, m.threshold_kb_s, m.window_half_n).stage("motifs")?;
    let mo = extract_motifs(&home.outbound, m.threshold_kb_s, m.window_half_n).stage("motifs")?;
    let mut out = windows_at(cfg, labels, &home, &mi, &mo, &cfg.segment)?;
    for &shift in &cfg.augment_shifts_s {
        let lead = cfg.segment.lead_s as i64 - shift as i64;
        if lead < 0 {
            return Err(Error::contract(format!(
                "augmentation shift {shift} s exceeds the {} s lead",
                cfg.segment.lead_s
            )));
        }
        let seg = SegmentSpec {
            lead_s: lead as u32,
            ..cfg.segment.clone()
        };
        out.shifted.push(windows_at(cfg, labels, &home, &mi, &mo, &seg)?);
    }
    if out.is_empty() && !labels.is_empty() {
        log::warn!("all {} segments dropped: no motifs in any window", labels.len());
    } else if out.dropped > 0 {
        log::info!("dropped {} of {} segments without motifs", out.dropped, labels.len());
    }
    Ok(out)
}

/// Predictions and scores of one attack run.
#[derive(Debug, Clone)]
pub struct AttackResult {
    pub report: EvalReport,
    /// Full class ranking per evaluated window.
    pub ranked: Vec<Vec<usize>>,
    pub labels: Vec<usize>,
    pub train: Option<TrainReport>,
}

/// Train on the windows of labels `train` (with their shifted copies) and
/// rank every catalog class for the windows of labels `test`.
pub fn fit_and_rank(
    cfg: &PipelineConfig,
    windows: &WindowSet,
    train: &[usize],
    test: &[usize],
    catalog: &[usize],
    seed: u64,
) -> Result<(Vec<Vec<usize>>, Vec<usize>, Option<TrainReport>)> {
    let tr = windows.training_samples(train);
    let te = windows.samples(test);
    if tr.is_empty() || te.is_empty() {
        return Err(Error::contract("attack needs training and test windows"));
    }
    match cfg.attack {
        AttackKind::Feature(kind) => {
            let model = train_classifier(kind, &tr.features, &tr.classes, &cfg.classifier, seed).stage("train")?;
            let proba = model.predict_proba(&te.features)?;
            let ranked = proba
                .iter_rows()
                .map(|r| {
                    // classes never seen in training rank last, smallest id first
                    let mut ranked = rank_classes(r, &model.classes);
                    ranked.extend(catalog.iter().filter(|c| !model.classes.contains(c)));
                    ranked
                })
                .collect();
            Ok((ranked, te.classes, None))
        }
        AttackKind::Fusion => {
            let index: BTreeMap<usize, usize> = catalog.iter().enumerate().map(|(i, &c)| (c, i)).collect();
            let yi: Vec<usize> = tr
                .classes
                .iter()
                .map(|c| index.get(c).copied().ok_or_else(|| Error::contract(format!("class {c} not in catalog"))))
                .collect::<Result<_>>()?;
            let arch = FusionArch {
                conv1: cfg.net.conv1,
                conv2: cfg.net.conv2,
                hidden: cfg.net.hidden,
                pool_grid: cfg.net.pool_grid,
                ..FusionArch::new(&cfg.representations, catalog.len(), cfg.image_size)
            };
            let mut net = FusionNet::with_arch(arch, seed)?;
            let data = FusionData {
                images: &tr.images,
                labels: &yi,
            };
            let report = train_fusion(&mut net, &data, None, &cfg.fusion, seed).stage("train")?;
            let proba = net.predict_proba(&te.images)?;
            let ranked = proba.iter_rows().map(|r| rank_classes(r, catalog)).collect();
            Ok((ranked, te.classes, Some(report)))
        }
    }
}

/// Attack one defended dataset under a fixed split of the labels. Training
/// uses the train and validation windows; scoring uses the test windows.
pub fn attack_pipeline(
    cfg: &PipelineConfig,
    ds: &Dataset,
    defended: &DefendedDataset,
    split: &DatasetSplit,
    seed: u64,
) -> Result<AttackResult> {
    let windows = build_windows(cfg, &ds.labels, &defended.traces)?;
    attack_windows(cfg, ds, defended, &windows, split, seed)
}

pub fn attack_windows(
    cfg: &PipelineConfig,
    ds: &Dataset,
    defended: &DefendedDataset,
    windows: &WindowSet,
    split: &DatasetSplit,
    seed: u64,
) -> Result<AttackResult> {
    let mut fit: Vec<usize> = split.train.iter().chain(&split.validation).copied().collect();
    fit.sort_unstable();
    let catalog = ds.classes();
    let (ranked, labels, train_report) = fit_and_rank(cfg, windows, &fit, &split.test, &catalog, seed)?;
    let mut report = evaluate(&ranked, &labels, &catalog).stage("evaluate")?;
    report.ledger = Some(defended.ledger());
    report.metadata = ReportMeta {
        seed,
        defense: defended.defense.clone(),
        attack: cfg.attack.name(),
        representations: match cfg.attack {
            AttackKind::Fusion => cfg.representations.iter().map(|r| r.name().to_string()).collect(),
            AttackKind::Feature(_) => Vec::new(),
        },
        n_train: windows.training_samples(&fit).len(),
        n_test: labels.len(),
        knowledge_level: 0.0,
    };
    Ok(AttackResult {
        report,
        ranked,
        labels,
        train: train_report,
    })
}
