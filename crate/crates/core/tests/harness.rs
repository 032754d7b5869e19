use meanclt::harness::{self, ExperimentConfig, Preset, Target};
use meanclt::{Error, Fourier, ProcessSpec};

fn small(seed: u64) -> ExperimentConfig {
    ExperimentConfig::new(ProcessSpec::DoublingMap, Fourier::cosine(1, 1.0), vec![16, 64, 256], 400, seed)
        .with_targets(&[Target::EmpiricalD1, Target::Ks, Target::Thm21, Target::Thm22, Target::RateFit])
}

#[test]
fn rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut a = small(5);
    a.output = Some(dir.path().join("a"));
    let mut b = small(5);
    b.output = Some(dir.path().join("b"));
    let ma = harness::run(&a).unwrap();
    let mb = harness::run(&b).unwrap();
    let ca = std::fs::read(dir.path().join("a.csv")).unwrap();
    let cb = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(ca, cb);
    assert!(dir.path().join("a.manifest.json").exists());
    let (mut ma, mut mb) = (ma.without_timing(), mb.without_timing());
    ma.config.output = None;
    mb.config.output = None;
    assert_eq!(ma, mb);
}

#[test]
fn normalization_identity_and_columns() {
    let m = harness::run(&small(9)).unwrap();
    assert!(m.failure.is_none());
    for r in &m.rows {
        let d = r.d1_normalized.unwrap();
        let u = r.d1_unnormalized.unwrap();
        assert!((u - (r.n as f64).sqrt() * d).abs() <= 1e-12 * u.max(1.0), "{u} {d}");
        assert!(r.d1_se.unwrap() > 0.0);
        assert!(r.bound_t21.unwrap() >= u);
        assert!((r.bound_t21.unwrap() - r.bound_t22.unwrap()).abs() < 1e-10);
        assert_eq!(r.slope, m.rate_fit.map(|f| f.slope));
    }
    assert_eq!(m.seeds.per_n.len(), 3);
    assert_eq!(m.bounds.len(), 6);
}

#[test]
fn exact_rademacher_preset() {
    let c = Preset::IidRademacherExact.config(Some(1024), None, None).unwrap();
    let m = harness::run(&c).unwrap();
    for r in &m.rows {
        let u = r.d1_unnormalized.unwrap();
        assert!(u <= 0.6 && u > 0.3);
        assert_eq!(r.zolotarev, Some(0.5));
        assert!((u - (r.n as f64).sqrt() * r.d1_normalized.unwrap()).abs() < 1e-12);
    }
    let s = m.rate_fit.unwrap().slope;
    assert!((s + 0.5).abs() < 0.05, "{s}");
}

#[test]
fn degenerate_variance_is_recorded() {
    let c = ExperimentConfig::new(ProcessSpec::DoublingMap, Fourier::zero(), vec![8, 16, 32], 100, 1)
        .with_targets(&[Target::EmpiricalD1]);
    let m = harness::run(&c).unwrap();
    let f = m.failure.unwrap();
    assert_eq!(f.stage, "variance");
    assert_eq!(f.exit_code, 2);
    assert!(m.rows.iter().all(|r| r.d1_normalized.is_none()));
}

#[test]
fn nonadapted_skips_thm21() {
    let c = ExperimentConfig::new(ProcessSpec::DoublingMap, Fourier::cosine(2, 1.0), vec![16, 64, 256], 200, 2)
        .with_targets(&[Target::Thm21, Target::Thm22, Target::Thm23Terms]);
    let m = harness::run(&c).unwrap();
    assert!(m.failure.is_none());
    assert!(m.rows.iter().all(|r| r.bound_t21.is_none() && r.bound_t22.is_some() && r.thm23_series.is_some()));
    assert!(m.notes.iter().any(|n| n.contains("thm21")));
}

#[test]
fn merge_reports() {
    let dir = tempfile::tempdir().unwrap();
    let mut paths = Vec::new();
    for seed in [1, 2] {
        let mut c = small(seed);
        c.output = Some(dir.path().join(format!("run{seed}")));
        harness::run(&c).unwrap();
        paths.push(dir.path().join(format!("run{seed}.manifest.json")));
    }
    let one = harness::merge_reports(&paths[..1]).unwrap();
    let m = harness::read_manifest(&paths[0]).unwrap();
    assert_eq!(one.rows.len(), m.rows.len());
    assert_eq!(one.rows[0].d1_normalized, m.rows[0].d1_normalized);
    let both = harness::merge_reports(&paths).unwrap();
    assert_eq!(both.rows.len(), 6);
    let seeds: std::collections::BTreeSet<u64> = both.rows.iter().map(|r| r.seed).collect();
    assert_eq!(seeds.len(), 6);

    let mut iid = Preset::IidRademacherExact.config(Some(256), None, None).unwrap();
    iid.output = Some(dir.path().join("iid"));
    harness::run(&iid).unwrap();
    let mixed = harness::merge_reports(&[paths[0].clone(), dir.path().join("iid.manifest.json")]).unwrap();
    let slopes: std::collections::BTreeSet<String> =
        mixed.rows.iter().map(|r| format!("{}:{:?}", r.process, r.slope.is_some())).collect();
    assert_eq!(slopes.len(), 2);
    assert!(mixed.rows.iter().all(|r| r.slope.is_some()));

    let bad = dir.path().join("bad.manifest.json");
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&paths[0]).unwrap()).unwrap();
    v["schema_version"] = 7.into();
    v.as_object_mut().unwrap().remove("notes");
    std::fs::write(&bad, v.to_string()).unwrap();
    match harness::merge_reports(&[bad]) {
        Err(Error::Schema(msg)) => assert!(msg.contains("notes"), "{msg}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn appendix_and_diagnose() {
    let r = harness::check_appendix(200, 11).unwrap();
    assert!(r.all_passed());
    let d = harness::diagnose_conditions(&ProcessSpec::DoublingMap, &Fourier::cosine(2, 1.0), 10, None, 1).unwrap();
    assert_eq!(d.theta.len(), 9);
    assert_eq!(d.mixing.len(), 2);
}
