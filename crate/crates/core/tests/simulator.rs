use semitop_core::kernel3::{B, T};
use semitop_core::semantics::{denote, is_valid_in_model};
use semitop_core::simulator::{extract_model, run, run_and_check, Protocol, RunConfig, Strategy};
use semitop_core::syntax::fm;

#[test]
fn honest_bracha_extraction() {
    let cfg = RunConfig::classic(Protocol::Bracha, 1);
    let tr = run(&cfg).unwrap();
    let m = extract_model(&tr, &cfg).unwrap();
    assert_eq!(denote(&m, &fm("[S] broadcast('u)"), "p0").unwrap(), T);
    assert_eq!(denote(&m, &fm("[E] deliver('u)"), "p0").unwrap(), T);
    assert_eq!(denote(&m, &fm("[S] deliver('w)"), "p0").unwrap(), semitop_core::kernel3::F);
}

#[test]
fn byzantine_sender_never_splits_delivery() {
    for strategy in [Strategy::Equivocate, Strategy::Random, Strategy::Silent, Strategy::Conform] {
        for seed in 0..64 {
            let mut cfg = RunConfig::classic(Protocol::Bracha, 1);
            cfg.byzantine = [0].into();
            cfg.strategy = strategy;
            cfg.seed = seed;
            let tr = run(&cfg).unwrap();
            let delivered: Vec<Vec<&str>> = (1..4).map(|p| tr.values_of(p, "deliver")).collect();
            assert!(delivered.iter().all(|d| d.len() <= 1), "{strategy:?} {seed}: {delivered:?}");
            let first = &delivered[0];
            assert!(delivered.iter().all(|d| d == first), "{strategy:?} {seed}: {delivered:?}");
            let m = extract_model(&tr, &cfg).unwrap();
            for p in m.space().points() {
                assert_eq!(m.get("broadcast", p, "u").unwrap(), B);
            }
        }
    }
}

#[test]
fn crusader_same_inputs_output_the_input() {
    for input in [0u8, 1] {
        let mut cfg = RunConfig::classic(Protocol::Crusader, 1);
        cfg.inputs = vec![input; 4];
        cfg.byzantine = [2].into();
        cfg.strategy = Strategy::Equivocate;
        let (tr, m, report) = run_and_check(&cfg).unwrap();
        assert!(report.valid, "{}", report.to_text());
        for p in [0, 1, 3] {
            assert_eq!(tr.values_of(p, "output"), [input.to_string().as_str()]);
        }
        let valid1 = report.properties.iter().find(|v| v.name == "CaValid1").unwrap();
        assert_eq!(valid1.instances.len(), 6);
        assert!(is_valid_in_model(&m, &fm("[E] exists a. output(a)")).unwrap());
    }
}

#[test]
fn vote_with_equivocators() {
    for f in 1..=2 {
        for seed in 0..8 {
            let mut cfg = RunConfig::classic(Protocol::Vote, f);
            cfg.byzantine = (0..f).collect();
            cfg.strategy = Strategy::Equivocate;
            cfg.votes = (0..cfg.n).map(|i| !(i as u64 + seed).is_multiple_of(3)).collect();
            let (_, _, report) = run_and_check(&cfg).unwrap();
            assert!(report.valid, "{cfg:?}\n{}", report.to_text());
            assert_eq!(report.properties[0].name, "Agreement");
        }
    }
}

#[test]
fn single_output_mode_breaks_forward_output_rule() {
    let mut cfg = RunConfig::classic(Protocol::Crusader, 1);
    cfg.inputs = vec![0, 0, 1, 1];
    cfg.single_output = true;
    let (_, _, report) = run_and_check(&cfg).unwrap();
    assert_eq!(report.failures(), ["CaOutput!"]);
}

#[test]
fn explicit_round_limit_warns() {
    let mut cfg = RunConfig::classic(Protocol::Bracha, 1);
    cfg.max_rounds = Some(2);
    let tr = run(&cfg).unwrap();
    assert_eq!(tr.rounds.len(), 2);
    assert_eq!(tr.warnings.len(), 1);
}

#[test]
fn trace_json_shape() {
    let mut cfg = RunConfig::classic(Protocol::Vote, 1);
    cfg.byzantine = [3].into();
    cfg.strategy = Strategy::Silent;
    let tr = run(&cfg).unwrap();
    let v: serde_json::Value = serde_json::from_str(&tr.to_json()).unwrap();
    assert_eq!(v["protocol"], "vote");
    let round1 = v["rounds"][0].as_array().unwrap();
    assert_eq!(round1.len(), 12);
    assert_eq!(round1[0]["from"], "p0");
    assert_eq!(round1[0]["tag"], "vote");
    assert_eq!(v["events"]["p0"][1]["action"], "observe");
    assert_eq!(v["events"]["p0"][1]["value"], "T");
}
