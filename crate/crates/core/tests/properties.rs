//! Cross-module properties: calibration and discrimination vary
//! independently, curve files round-trip, and group families behave.

use proptest::prelude::*;
use rand::Rng;

use riskfair::audit::AuditConfig;
use riskfair::bench::generate_two_group_example;
use riskfair::calibration::{drmsce, reliability_curve};
use riskfair::ranking::target_representation;
use riskfair::seed::stream_rng;
use riskfair::{
    auprg, auroc, enumerate_groups, eur, representation_curve, roc_curve, CurveSeries, GroupDefinition, GroupIndex,
};

fn calibrated(n: usize, seed: u64) -> (Vec<f64>, Vec<bool>) {
    let mut r = stream_rng(seed, "properties", 0);
    let s: Vec<f64> = (0..n).map(|_| r.random()).collect();
    let y = s.iter().map(|&p| r.random::<f64>() < p).collect();
    (s, y)
}

#[test]
fn monotone_distortion_breaks_calibration_but_not_ranking() {
    let (s, y) = calibrated(20_000, 1);
    let squashed: Vec<f64> = s.iter().map(|p| p * p * p).collect();
    assert_eq!(auroc(&s, &y).unwrap(), auroc(&squashed, &y).unwrap());
    assert_eq!(auprg(&s, &y).unwrap(), auprg(&squashed, &y).unwrap());
    let before = drmsce(&s, &y).unwrap();
    let after = drmsce(&squashed, &y).unwrap();
    assert!(before < 0.02, "{before}");
    assert!(after > 0.15, "{after}");
}

#[test]
fn base_rate_predictor_is_calibrated_without_discrimination() {
    let (_, y) = calibrated(20_000, 2);
    let rate = y.iter().filter(|&&v| v).count() as f64 / y.len() as f64;
    let flat = vec![rate; y.len()];
    assert_eq!(drmsce(&flat, &y).unwrap(), 0.0);
    assert_eq!(auroc(&flat, &y).unwrap(), 0.5);
    assert_eq!(auprg(&flat, &y).unwrap(), 0.0);
}

#[test]
fn reliability_curve_tracks_the_diagonal_when_calibrated() {
    let (s, y) = calibrated(20_000, 3);
    let c = reliability_curve(&s, &y, 0.75, 21).unwrap();
    c.check_invariants().unwrap();
    for p in &c.points {
        assert!((p.y - p.x).abs() < 0.05, "({}, {})", p.x, p.y);
    }
}

#[test]
fn curve_files_round_trip() {
    let (s, y) = calibrated(500, 4);
    let mut curve = roc_curve(&s, &y).unwrap();
    let mut buf = Vec::new();
    curve.write_csv(&mut buf).unwrap();
    assert_eq!(CurveSeries::read_csv(buf.as_slice()).unwrap(), curve);

    for (i, p) in curve.points.iter_mut().enumerate() {
        if i % 3 != 0 {
            p.band = Some(riskfair::curve::Band {
                lower: p.y - 0.01,
                upper: p.y + 0.5 / 3.0,
            });
        }
    }
    let mut buf = Vec::new();
    curve.write_csv(&mut buf).unwrap();
    let back = CurveSeries::read_csv(buf.as_slice()).unwrap();
    assert_eq!(back, curve);
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("false_positive_rate,true_positive_rate,lower,upper\n"));

    assert!(CurveSeries::read_csv("a,b,c\n1,2,3\n".as_bytes()).is_err());
    assert!(CurveSeries::read_csv("a,b\n1,x\n".as_bytes()).is_err());
}

#[test]
fn config_digest_ignores_output_location_and_workers() {
    let mut a = AuditConfig::default();
    let mut b = a.clone();
    b.output_dir = Some("elsewhere".into());
    b.workers = Some(3);
    assert_eq!(a.digest(), b.digest());
    assert_eq!(a.digest().len(), 64);
    a.seed = 1;
    assert_ne!(a.digest(), b.digest());
    let parsed = AuditConfig::from_toml_str(&toml::to_string(&b).unwrap()).unwrap();
    assert_eq!(parsed.digest(), b.digest());
}

#[test]
fn partition_targets_sum_to_one_and_someone_is_represented() {
    let ds = generate_two_group_example(400, 5).unwrap();
    let groups = enumerate_groups(&ds, &["group".to_string()], 1, 1).unwrap();
    let parts: Vec<&GroupIndex> = groups.iter().filter(|g| !g.definition.is_overall()).collect();
    assert_eq!(parts.len(), 2);
    let total: f64 = parts.iter().map(|g| target_representation(&ds, g).unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
    let eurs: Vec<f64> = parts.iter().map(|g| eur(&ds, g, None).unwrap().value).collect();
    assert!(eurs.iter().all(|e| (0.0..=1.0).contains(e)));
    let overall = GroupIndex::select(&ds, GroupDefinition::overall()).unwrap();
    assert_eq!(eur(&ds, &overall, None).unwrap().value, 1.0);

    let curves: Vec<CurveSeries> = parts
        .iter()
        .map(|g| representation_curve(&ds, g, None).unwrap())
        .collect();
    assert_eq!(curves[0].len(), curves[1].len());
    for (a, b) in curves[0].points.iter().zip(&curves[1].points) {
        assert_eq!(a.x, b.x);
        assert!(a.y.max(b.y) >= 1.0 - 1e-12, "both under-represented at {}", a.x);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eur_ignores_increasing_score_transforms(seed in 0u64..10_000) {
        let ds = generate_two_group_example(60, seed).unwrap();
        let scores: Vec<f64> = ds.records().iter().map(|r| r.score.sqrt()).collect();
        let mut records = ds.records().to_vec();
        for (r, s) in records.iter_mut().zip(scores) {
            r.score = s;
        }
        let moved = riskfair::Dataset::new(ds.schema().clone(), records).unwrap();
        for v in ["blue", "orange"] {
            let def = GroupDefinition::new([("group", v)]).unwrap();
            let a = eur(&ds, &GroupIndex::select(&ds, def.clone()).unwrap(), None);
            let b = eur(&moved, &GroupIndex::select(&moved, def).unwrap(), None);
            prop_assert_eq!(a.map(|e| e.value), b.map(|e| e.value));
        }
    }
}
