mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use bitext::error::BitextError;
use bitext::fake::FakeEncoder;
use bitext::formats::{pairs, read_json};
use bitext::pipeline::{run_pipeline, Layout, Stage, StageManifest, StagePlan, StageStatus};
use bitext_core::mine::MiningMode;
use common::*;

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for sub in ["ingest", "mine", "refine", "pivot", "sample", "index"] {
        let Ok(entries) = fs::read_dir(dir.join(sub)) else { continue };
        for e in entries {
            let p = e.unwrap().path();
            out.insert(p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap());
        }
    }
    out
}

#[test]
fn full_run_writes_every_stage_and_recovers_planted_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = comparable_config(dir.path(), 40);
    let summary = run_pipeline(&cfg, StagePlan::default()).unwrap();
    assert_eq!(summary.stages.len(), 7);
    assert!(summary.stages.iter().all(|s| s.status == StageStatus::Ran));

    let layout = Layout { out: cfg.out_dir.clone() };
    for stage in Stage::ORDER {
        let m: StageManifest = read_json(&layout.manifest(stage)).unwrap();
        assert_eq!(m.stage, stage.as_str());
        assert_eq!(m.seed, cfg.seed);
    }
    assert!(layout.effective_config().is_file());

    let mined = pairs::read_pairs(&layout.refined("cmp")).unwrap();
    assert_eq!(mined.len(), 80);
    for p in &mined {
        assert!(p.src_text.contains("planted") && p.tgt_text.starts_with("planted"));
        let i: String = p.src_text.split_whitespace().nth(4).unwrap().to_string();
        assert!(p.tgt_text.contains(&format!("संख्या {i} ")), "{p:?}");
        assert!(p.bucket.starts_with("month:2021-0"));
        assert!(p.las >= 0.75);
    }
    let keys: Vec<_> = mined.iter().map(|p| (p.tgt_id.clone(), p.src_id.clone())).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted, "canonical (tgt_id, src_id) order");
    assert!(layout.annotation_export().is_file());
    assert!(layout.annotation_key().is_file());
}

#[test]
fn rerun_skips_current_stages_and_force_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = comparable_config(dir.path(), 20);
    run_pipeline(&cfg, StagePlan::default()).unwrap();
    let first = snapshot(&cfg.out_dir);

    let again = run_pipeline(&cfg, StagePlan::default()).unwrap();
    assert!(again.stages.iter().all(|s| s.status == StageStatus::Skipped));
    assert_eq!(snapshot(&cfg.out_dir), first);

    cfg.out_dir = dir.path().join("out2");
    run_pipeline(&cfg, StagePlan { force: true, ..StagePlan::default() }).unwrap();
    assert_eq!(snapshot(&cfg.out_dir), first);

    // Changing a mining parameter reruns mining and everything after it.
    cfg.thresholds.comparable = 0.7;
    let changed = run_pipeline(&cfg, StagePlan::default()).unwrap();
    let ran: Vec<Stage> = changed
        .stages
        .iter()
        .filter(|s| s.status == StageStatus::Ran)
        .map(|s| s.stage)
        .collect();
    assert_eq!(ran[0], Stage::Mine);
}

#[test]
fn missing_embeddings_fail_at_index_and_keep_earlier_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = comparable_config(dir.path(), 10);
    cfg.corpora[0].tgt_embeddings = Some(dir.path().join("absent.semb"));
    let err = run_pipeline(&cfg, StagePlan::default()).unwrap_err();
    match &err {
        BitextError::StageFailure { stage, .. } => assert_eq!(stage, "index"),
        other => panic!("unexpected error {other:?}"),
    }
    assert_eq!(err.exit_code(), 2);
    let layout = Layout { out: cfg.out_dir.clone() };
    assert!(layout.sentences("cmp", bitext::pipeline::Side::Src).is_file());
    assert!(layout.manifest(Stage::Ingest).is_file());
    assert!(layout.manifest(Stage::Embed).is_file());
    assert!(!layout.manifest(Stage::Index).exists());
    assert!(!layout.mined("cmp").exists());
}

#[test]
fn config_errors_are_reported_before_any_stage() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = comparable_config(dir.path(), 5);
    cfg.corpora[0].src_docs = dir.path().join("nope.jsonl");
    let err = run_pipeline(&cfg, StagePlan::default()).unwrap_err();
    assert!(matches!(err, BitextError::Config(_)));
    assert_eq!(err.exit_code(), 1);
    assert!(!cfg.out_dir.exists());
}

#[test]
fn partial_plans_run_only_their_stages() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = comparable_config(dir.path(), 10);
    let s = run_pipeline(
        &cfg,
        StagePlan {
            to: Stage::Mine,
            ..StagePlan::default()
        },
    )
    .unwrap();
    assert_eq!(s.stages.last().unwrap().stage, Stage::Mine);
    let layout = Layout { out: cfg.out_dir.clone() };
    assert!(layout.mined("cmp").is_file());
    assert!(!layout.refined("cmp").exists());
    let s = run_pipeline(
        &cfg,
        StagePlan {
            from: Stage::Refine,
            ..StagePlan::default()
        },
    )
    .unwrap();
    assert_eq!(s.stages.first().unwrap().stage, Stage::Refine);
    assert!(layout.refined("cmp").is_file());
}

#[test]
fn docpair_monolingual_and_pivot_corpora() {
    let dir = tempfile::tempdir().unwrap();
    let enc = FakeEncoder::new(64, 5);
    let mut cfg = base_config(dir.path(), 64);

    // en-hi by document pair; en-mr monolingual. 30 English sentences are
    // shared between the two, so the pivot joins them.
    let en_hi: Vec<Line> = (0..60).map(|i| planted(english(i, "shared"), &format!("h{i}"))).collect();
    let hi: Vec<Line> = (0..60).map(|i| planted(hindi(i, "doc"), &format!("h{i}"))).collect();
    let pair_meta = |j: usize| (None, Some(format!("pair{j}")));
    add_corpus(&mut cfg, dir.path(), "dp", MiningMode::Docpair, ("en", &en_hi), ("hi", &hi), 10, &enc, pair_meta);

    let mut en_mr: Vec<Line> = (0..30).map(|i| planted(english(i, "shared"), &format!("m{i}"))).collect();
    en_mr.extend((0..300).map(|i| distractor(english(i, "pool"))));
    let mr: Vec<Line> = (0..30).map(|i| planted(marathi(i, "mono"), &format!("m{i}"))).collect();
    add_corpus(&mut cfg, dir.path(), "mono", MiningMode::Monolingual, ("en", &en_mr), ("mr", &mr), 10, &enc, |_| (None, None));
    cfg.pivots = vec![["hi".into(), "mr".into()]];

    run_pipeline(&cfg, StagePlan::default()).unwrap();
    let layout = Layout { out: cfg.out_dir.clone() };
    let dp = pairs::read_pairs(&layout.refined("dp")).unwrap();
    assert_eq!(dp.len(), 60);
    assert!(dp.iter().all(|p| p.bucket.starts_with("document_pair:pair")));
    let mono = pairs::read_pairs(&layout.refined("mono")).unwrap();
    assert_eq!(mono.len(), 30);
    assert!(layout.index("mono").is_file());
    assert!(!layout.index("dp").exists());

    let pivot = fs::read_to_string(layout.pivot("hi", "mr")).unwrap();
    let lines: Vec<&str> = pivot.lines().collect();
    assert_eq!(lines.len(), 30);
    for l in lines {
        let cols: Vec<&str> = l.split('\t').collect();
        assert_eq!(cols.len(), 13);
        assert!(cols[2].starts_with("doc "), "{l}");
        assert!(cols[3].starts_with("mono "), "{l}");
        assert_eq!(cols[5], "pivot");
        assert_eq!(&cols[7..13], &["dp", "docpair", cols[9], "mono", "monolingual", "global:*"]);
    }
}
