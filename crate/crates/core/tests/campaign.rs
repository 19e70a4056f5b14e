use std::fs;
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use riskscout::campaign::*;
use riskscout::dsl::{parse_campaign_spec, CampaignSpec, SamplerKind};
use riskscout::metrics::total_risk_scenes;

fn demo(kind: SamplerKind, iterations: u64, seed: u64) -> CampaignSpec {
    let mut spec = parse_campaign_spec(riskscout::DEMO_SPEC).unwrap();
    spec.sampler.kind = kind;
    spec.iterations = iterations;
    spec.seed = seed;
    spec
}

fn run(spec: CampaignSpec, deterministic_time: bool) -> CampaignResult {
    let prepared = prepare(spec, None).unwrap();
    run_campaign(&prepared, RunOptions { deterministic_time }, &mut |_| {}).unwrap()
}

/// A result with `high` of `n` scenes above the threshold.
fn synthetic(high: usize, n: usize, seed: u64) -> CampaignResult {
    let spec = demo(SamplerKind::Random, n as u64, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records: Vec<IterationRecord> = (0..n)
        .map(|i| {
            let s_risk = if i < high { 0.9 } else { 0.1 };
            IterationRecord {
                iteration: i as u64 + 1,
                values: spec.space.sample_uniform(&mut rng),
                rs: s_risk,
                is: 0.0,
                s_risk,
                high_risk: s_risk > 0.65,
                elapsed_ms: 0.0,
                origin: None,
            }
        })
        .collect();
    let aggregates = compute_aggregates(&records, &spec.space, 0.65, seed).unwrap();
    CampaignResult { spec, delta: 0.65, records, aggregates }
}

#[test]
fn single_iteration_run() {
    let r = run(demo(SamplerKind::Random, 1, 4), true);
    assert_eq!(r.records.len(), 1);
    assert!(r.aggregates.trs == 0.0 || r.aggregates.trs == 100.0);
    assert_eq!(r.aggregates.diversity, None);
}

#[test]
fn records_satisfy_their_invariants() {
    for kind in [SamplerKind::Random, SamplerKind::Rns, SamplerKind::Gbo] {
        let r = run(demo(kind, 40, 2), false);
        for rec in &r.records {
            assert_eq!(rec.s_risk, r.spec.w1 * rec.rs + r.spec.w2 * rec.is);
            assert_eq!(rec.high_risk, rec.s_risk > r.delta);
            assert!(rec.elapsed_ms >= 0.0);
        }
        assert_eq!(r.records.iter().map(|x| x.iteration).collect::<Vec<_>>(), (1..=40).collect::<Vec<_>>());
    }
}

#[test]
fn sink_sees_every_record() {
    let prepared = prepare(demo(SamplerKind::Halton, 12, 1), None).unwrap();
    let mut seen = Vec::new();
    let r = run_campaign(&prepared, RunOptions::default(), &mut |rec| seen.push(rec.iteration)).unwrap();
    assert_eq!(seen.len(), r.records.len());
}

#[test]
fn repeated_runs_produce_identical_files() {
    let dirs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for d in &dirs {
        write_results(&run(demo(SamplerKind::Gbo, 30, 9), true), d.path()).unwrap();
    }
    for f in ["records.csv", "summary.json", "spec.campaign", "scenes.txt"] {
        let a = fs::read(dirs[0].path().join(f)).unwrap();
        let b = fs::read(dirs[1].path().join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn csv_layout_and_round_trip() {
    let r = run(demo(SamplerKind::Random, 3, 5), false);
    let dir = tempfile::tempdir().unwrap();
    write_results(&r, dir.path()).unwrap();
    let text = fs::read_to_string(dir.path().join("records.csv")).unwrap();
    assert!(!text.contains('\r'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0], "iteration,RS,P,T,C,TD,blur,occlusion,rs,is,s_risk,high_risk,elapsed_ms");
    let back = read_records(&dir.path().join("records.csv"), &r.spec.space).unwrap();
    for (a, b) in back.iter().zip(&r.records) {
        assert_eq!(a.s_risk.to_bits(), b.s_risk.to_bits());
        assert_eq!(a.values, b.values);
        assert_eq!(a.elapsed_ms, b.elapsed_ms);
    }
}

#[test]
fn summary_agrees_with_records() {
    let r = run(demo(SamplerKind::Rns, 60, 3), false);
    let dir = tempfile::tempdir().unwrap();
    write_results(&r, dir.path()).unwrap();
    let summary = read_summary(dir.path()).unwrap();
    let records = read_records(&dir.path().join("records.csv"), &r.spec.space).unwrap();
    let risks: Vec<f64> = records.iter().map(|x| x.s_risk).collect();
    assert_eq!(summary.aggregates.trs, total_risk_scenes(&risks, summary.delta).unwrap());
    let (s, again) = recompute(dir.path()).unwrap();
    assert_eq!(again, s.aggregates);
    assert_eq!(s.spec_hash, spec_hash(&r.spec));
}

#[test]
fn tampered_flag_is_caught() {
    let r = run(demo(SamplerKind::Random, 5, 5), true);
    let dir = tempfile::tempdir().unwrap();
    write_results(&r, dir.path()).unwrap();
    let path = dir.path().join("records.csv");
    let text = fs::read_to_string(&path).unwrap();
    let flipped = if text.contains(",true,") {
        text.replacen(",true,", ",false,", 1)
    } else {
        text.replacen(",false,", ",true,", 1)
    };
    fs::write(&path, flipped).unwrap();
    assert!(recompute(dir.path()).is_err());
}

fn written(results: &[CampaignResult]) -> (Vec<tempfile::TempDir>, Vec<PathBuf>) {
    let dirs: Vec<tempfile::TempDir> = results.iter().map(|_| tempfile::tempdir().unwrap()).collect();
    for (r, d) in results.iter().zip(&dirs) {
        write_results(r, d.path()).unwrap();
    }
    let paths = dirs.iter().map(|d| d.path().to_path_buf()).collect();
    (dirs, paths)
}

#[test]
fn compare_ranks_by_trs() {
    let (_keep, paths) = written(&[synthetic(66, 100, 1), synthetic(92, 100, 2)]);
    let report = compare(&paths).unwrap();
    assert_eq!(report.rows[0].trs, 92.0);
    assert_eq!(report.rows[1].trs, 66.0);
    assert_eq!(report.rows[0].path, paths[1].display().to_string());
    assert_eq!(report.rows.iter().map(|r| r.rank).collect::<Vec<_>>(), [1, 2]);
    let text = format_comparison(&report);
    assert!(text.lines().count() == 3, "{text}");
}

#[test]
fn identical_results_give_identical_rows() {
    let (_keep, paths) = written(&[synthetic(50, 40, 7), synthetic(50, 40, 7)]);
    let report = compare(&paths).unwrap();
    let strip = |r: &ComparisonRow| ComparisonRow { rank: 0, path: String::new(), ..r.clone() };
    assert_eq!(strip(&report.rows[0]), strip(&report.rows[1]));
}

#[test]
fn tiny_results_report_na() {
    let (_keep, paths) = written(&[synthetic(1, 2, 1), synthetic(2, 10, 2)]);
    let report = compare(&paths).unwrap();
    let tiny = report.rows.iter().find(|r| r.path == paths[0].display().to_string()).unwrap();
    assert_eq!(tiny.diversity, serde_json::Value::from("n/a"));
    assert_eq!(tiny.clusters, serde_json::Value::from("n/a"));
    let other = report.rows.iter().find(|r| r.path == paths[1].display().to_string()).unwrap();
    assert!(other.diversity.is_number());
}

#[test]
fn schema_mismatch_is_an_error() {
    let (_keep, paths) = written(&[synthetic(3, 10, 1), synthetic(5, 10, 2)]);
    let path = paths[1].join("summary.json");
    let text = fs::read_to_string(&path).unwrap().replace(SUMMARY_SCHEMA, "riskscout.summary/0");
    fs::write(&path, text).unwrap();
    assert!(matches!(compare(&paths), Err(CampaignError::Schema(_))));

    // same schema, different variables
    let mut other = synthetic(3, 10, 4);
    other.spec = parse_campaign_spec("campaign x { var P : environmental range [0, 100]; sampler random; }").unwrap();
    other.records.iter_mut().for_each(|r| r.values.truncate(1));
    let (_keep2, more) = written(&[other]);
    assert!(matches!(compare(&[paths[0].clone(), more[0].clone()]), Err(CampaignError::Schema(_))));
    assert!(compare(&paths[..1]).is_err());
}

#[test]
fn grid_campaign_stops_when_exhausted() {
    let spec = parse_campaign_spec(
        "campaign g { iterations = 50; var P : environmental range [0, 100] step 50; var f : fault range [0, 1]; sampler grid; }",
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let landscape = dir.path().join("flat.landscape");
    fs::write(&landscape, "landscape flat { bump { center { P = 0.5; } width = 0.2; amplitude = 0.5; } }").unwrap();
    let mut spec = spec;
    spec.evaluator = Some(landscape.display().to_string());
    let r = run(spec, true);
    assert_eq!(r.records.len(), 6);
}

#[test]
fn sweep_groups_runs_by_sampler() {
    let mut spec = demo(SamplerKind::Random, 15, 10);
    spec.sampler.gbo.candidate_count = 64;
    let (grouped, skipped) = sweep(&spec, None, 2, RunOptions { deterministic_time: true }).unwrap();
    assert!(skipped.is_empty(), "{skipped:?}");
    assert_eq!(grouped.iter().map(|(k, _)| *k).collect::<Vec<_>>(), SamplerKind::ALL);
    for (_, runs) in &grouped {
        assert_eq!(runs.iter().map(|r| r.spec.seed).collect::<Vec<_>>(), [10, 11]);
    }
    let report = sweep_report(&spec.name, &grouped, skipped);
    let rns = report.rows.iter().find(|r| r.sampler == "rns").unwrap();
    let (m, s) = mean_and_stddev(&rns.trs);
    assert_eq!((rns.mean_trs, rns.stddev_trs), (m, s));
    let dir = tempfile::tempdir().unwrap();
    write_sweep(dir.path(), &grouped, &report).unwrap();
    assert!(dir.path().join("gbo/seed_11/records.csv").exists());
    assert!(dir.path().join("sweep.json").exists());
}

#[test]
fn sample_stddev() {
    assert_eq!(mean_and_stddev(&[4.0]), (4.0, 0.0));
    let (m, s) = mean_and_stddev(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
    assert_eq!(m, 5.0);
    assert!((s - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
}
