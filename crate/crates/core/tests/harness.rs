use picorr::harness::{
    gen, random_structured_fixture, regenerate, replay, verify, FixtureKind, InstanceJson,
    TheoremId, TrialConfig,
};
use picorr::numerics::{partial_isometry_residual, Tolerance};
use picorr::{powers, Error};

fn tol() -> Tolerance {
    Tolerance::default()
}

#[test]
fn statement_ids_round_trip() {
    for id in TheoremId::ALL {
        assert_eq!(id.as_str().parse::<TheoremId>().unwrap(), id);
        let json = serde_json::to_string(&id).unwrap();
        assert_eq!(json, format!("\"{}\"", id.as_str()));
        assert!(!id.statement().is_empty());
    }
    assert!(matches!(
        "no-such-statement".parse::<TheoremId>(),
        Err(Error::Usage(_))
    ));
}

#[test]
fn bad_configs_are_usage_errors() {
    let id = TheoremId::ProductCommuting;
    let mut cfg = TrialConfig::for_theorem(id, 1, 0);
    assert!(matches!(
        verify(id, &cfg, &tol(), false),
        Err(Error::Usage(_))
    ));
    cfg.trials = 5;
    cfg.perturbation = 1e-7;
    assert!(matches!(
        verify(id, &cfg, &tol(), false),
        Err(Error::Usage(_))
    ));
    cfg.perturbation = 1e-3;
    cfg.h_dim = (4, 2);
    assert!(matches!(
        verify(id, &cfg, &tol(), false),
        Err(Error::Usage(_))
    ));
}

#[test]
fn statements_without_a_false_claim_refuse_falsification() {
    for id in TheoremId::ALL
        .into_iter()
        .filter(|t| t.false_claim().is_none())
    {
        let cfg = TrialConfig::for_theorem(id, 1, 3);
        assert!(
            matches!(verify(id, &cfg, &tol(), true), Err(Error::Usage(_))),
            "{id}"
        );
    }
}

#[test]
fn every_statement_runs_clean_on_a_few_trials() {
    for id in TheoremId::ALL {
        let trials = if id == TheoremId::WeightedShift {
            3
        } else {
            12
        };
        let r = verify(id, &TrialConfig::for_theorem(id, 99, trials), &tol(), false).unwrap();
        assert_eq!(
            r.equivalence_violations,
            0,
            "{id}: {:?}",
            r.counterexamples.first().map(|c| &c.detail)
        );
        assert!(r.equivalence_violations + r.hypothesis_skips <= r.trials_run);
        assert!(r.success());
        assert_eq!(r.tolerance, tol());
    }
}

#[test]
fn counterexamples_replay_and_regenerate() {
    for id in TheoremId::ALL
        .into_iter()
        .filter(|t| t.false_claim().is_some())
    {
        let trials = if id == TheoremId::WeightedShift {
            3
        } else {
            40
        };
        let cfg = TrialConfig::for_theorem(id, 5, trials);
        let r = verify(id, &cfg, &tol(), true).unwrap();
        assert!(
            r.equivalence_violations > 0,
            "{id}: false claim never refuted"
        );
        assert!(!r.success());
        for c in r.counterexamples.iter().take(5) {
            // through text, as a user would store it
            let text = picorr::io::to_json_string(&c.instance).unwrap();
            let back: InstanceJson = serde_json::from_str(&text).unwrap();
            assert!(
                replay(id, &back, &cfg, &tol(), true).unwrap().is_some(),
                "{id} trial {}",
                c.trial
            );
            let again = regenerate(id, &cfg, &tol(), true, c.trial, c.attempt).unwrap();
            assert_eq!(InstanceJson::from(&again), c.instance);
        }
    }
}

#[test]
fn reports_are_sorted_and_repeatable() {
    let id = TheoremId::PowerStep;
    let cfg = TrialConfig::for_theorem(id, 17, 40);
    let a = verify(id, &cfg, &tol(), true).unwrap();
    let b = verify(id, &cfg, &tol(), true).unwrap();
    assert_eq!(
        picorr::io::to_json_string(&a).unwrap(),
        picorr::io::to_json_string(&b).unwrap()
    );
    assert!(a
        .counterexamples
        .windows(2)
        .all(|w| w[0].trial < w[1].trial));
    let other = verify(
        id,
        &TrialConfig {
            master_seed: 18,
            ..cfg
        },
        &tol(),
        true,
    )
    .unwrap();
    assert_ne!(a.counterexamples, other.counterexamples);
}

#[test]
fn fixture_kinds_parse() {
    assert_eq!(
        "unitary".parse::<FixtureKind>().unwrap(),
        FixtureKind::Unitary
    );
    assert_eq!(
        "perturbed_pi(0.01)".parse::<FixtureKind>().unwrap(),
        FixtureKind::PerturbedPi(0.01)
    );
    assert_eq!(
        "direct_sum(truncated_shift, direct_sum(unitary, isometric))"
            .parse::<FixtureKind>()
            .unwrap(),
        FixtureKind::DirectSum(vec![
            FixtureKind::TruncatedShift,
            FixtureKind::DirectSum(vec![FixtureKind::Unitary, FixtureKind::Isometric]),
        ])
    );
    assert!(matches!(
        "moebius".parse::<FixtureKind>(),
        Err(Error::Usage(_))
    ));
    assert!(matches!(
        "perturbed_pi(2)".parse::<FixtureKind>(),
        Err(Error::Usage(_))
    ));
}

#[test]
fn unitary_fixture_is_isometric_and_coisometric() {
    let mut rng = gen::stream_rng(1, 0, 0);
    let rep = random_structured_fixture(&FixtureKind::Unitary, 3, &mut rng, &tol()).unwrap();
    let c = rep.classify().unwrap();
    assert!(c.is_isometric && c.is_coisometric && c.is_partial_isometric);
}

#[test]
fn perturbed_fixture_is_not_pi() {
    let mut rng = gen::stream_rng(2, 0, 0);
    let rep =
        random_structured_fixture(&FixtureKind::PerturbedPi(1e-2), 4, &mut rng, &tol()).unwrap();
    let c = rep.classify().unwrap();
    assert!(!c.is_partial_isometric);
    assert!(partial_isometry_residual(rep.tilde()) >= 1e-3);
    assert!(c.is_contractive);
}

#[test]
fn shift_plus_unitary_is_pi_but_not_regular() {
    // the truncated shift has zero generalized range but a nonzero range
    let mut rng = gen::stream_rng(3, 0, 0);
    let kind: FixtureKind = "direct_sum(truncated_shift, unitary)".parse().unwrap();
    let rep = random_structured_fixture(&kind, 3, &mut rng, &tol()).unwrap();
    assert_eq!(rep.h_dim(), 6);
    assert!(rep.is_partial_isometric());
    assert!(!powers::is_regular(&rep).unwrap());
}

#[test]
fn weighted_shift_fixture_is_pi() {
    let mut rng = gen::stream_rng(4, 0, 0);
    let rep =
        random_structured_fixture(&"weighted_shift".parse().unwrap(), 0, &mut rng, &tol()).unwrap();
    assert!(rep.is_partial_isometric());
}
