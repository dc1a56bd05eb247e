//! Random-forest attack against every built-in defense on the synthetic
//! desk fixture, plus the fusion attack on HTR, for a handful of seeds.
//!
//! cargo run --release -p trafficbench --example fixture_experiment -- [seeds]

use std::time::Instant;

use trafficbench::attack::{attack_windows, build_windows, defend_dataset, defense_config_for, AttackKind, Dataset, PipelineConfig};
use trafficbench::defense::{DefenseMethod, DefenseRegistry};
use trafficbench::ingest::{split_stratified, synth_activity_home, ActivityHomeSpec};
use trafficbench::seed::{stage_seed, Stage};

fn main() -> trafficbench::Result<()> {
    let n: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let registry = DefenseRegistry::new();
    let rf = PipelineConfig::default();
    let fusion = PipelineConfig {
        attack: AttackKind::Fusion,
        ..PipelineConfig::default()
    };
    for s in 1..=n {
        let ds: Dataset = synth_activity_home(&ActivityHomeSpec::desk_fixture(s))?.into();
        let split = split_stratified(&ds.label_classes(), stage_seed(s, Stage::Split))?;
        let mut line = format!("seed {s} ({} labels)", ds.labels.len());
        for method in [DefenseMethod::Identity, DefenseMethod::Pti, DefenseMethod::Rtp, DefenseMethod::Htr] {
            let dcfg = defense_config_for(method.clone(), &ds.traces, stage_seed(s, Stage::Defense))?;
            let defended = defend_dataset(&ds, &dcfg, &rf.motif, &registry)?;
            let w = build_windows(&rf, &ds.labels, &defended.traces)?;
            let r = attack_windows(&rf, &ds, &defended, &w, &split, stage_seed(s, Stage::Attack))?;
            line += &format!(
                " | {} V={:.2} kept={} overhead={:.0}% rf={:.3}",
                defended.defense,
                dcfg.flatten_threshold_kb_s,
                w.len(),
                r.report.ledger.as_ref().and_then(|l| l.overhead_pct).unwrap_or(f64::NAN),
                r.report.mcc
            );
            if method == DefenseMethod::Htr {
                let t = Instant::now();
                let w = build_windows(&fusion, &ds.labels, &defended.traces)?;
                let f = attack_windows(&fusion, &ds, &defended, &w, &split, stage_seed(s, Stage::Attack))?;
                line += &format!(" fusion={:.3} ({:.1}s)", f.report.mcc, t.elapsed().as_secs_f64());
            }
        }
        println!("{line}");
    }
    Ok(())
}
