use fieldsup::constants::ConstantRegistry;
use fieldsup::validation::*;
use fieldsup::Error;

fn scenario(kind: ScenarioKind, thresholds: &[f64], reps: u64, dt: f64, seed: u64) -> Scenario {
    Scenario { kind, thresholds: thresholds.to_vec(), replications: reps, seed, dt: Some(dt) }
}

fn registry() -> ConstantRegistry {
    ConstantRegistry::new().with_user(fieldsup::constants::ConstantKind::Pickands { alpha: 1.5 }, 0.76, 0.01).unwrap()
}

#[test]
fn finer_grids_do_not_lower_exceedance_probabilities() {
    let damped = StationaryModel::DampedCosine { lambda: 1.0, omega: 4.0 };
    let cases = [
        (ScenarioKind::SheppBb, vec![0.75, 1.0, 1.25]),
        (ScenarioKind::BbSpan, vec![1.25, 1.5, 1.75]),
        (ScenarioKind::FbmSpan { alpha: 1.0 }, vec![2.0, 2.5, 3.0]),
        (ScenarioKind::MaxLoss { model: damped }, vec![2.5, 3.0, 3.5]),
        (ScenarioKind::SheppFbm { alpha: 1.5, s: 1.0 }, vec![1.5, 2.0, 2.5]),
        (ScenarioKind::BridgeSupOracle, vec![0.5, 0.75, 1.0]),
    ];
    let reg = registry();
    for (kind, us) in cases {
        let coarse = estimate_tail(&scenario(kind, &us, 20_000, 1.0 / 16.0, 1), &reg).unwrap();
        let fine = estimate_tail(&scenario(kind, &us, 20_000, 1.0 / 32.0, 2), &reg).unwrap();
        for (c, f) in coarse.iter().zip(&fine) {
            let se = (c.p_hat * (1.0 - c.p_hat) / c.replications as f64
                + f.p_hat * (1.0 - f.p_hat) / f.replications as f64)
                .sqrt();
            assert!(f.p_hat >= c.p_hat - 3.0 * se, "{kind} u={}: {} at dt/2 vs {} at dt", c.u, f.p_hat, c.p_hat);
            assert_eq!(c.asymptotic, f.asymptotic);
        }
    }
}

#[test]
fn exceedances_decrease_with_the_threshold() {
    let us = [0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0];
    let est = estimate_tail(&scenario(ScenarioKind::SheppBb, &us, 5000, 1.0 / 64.0, 3), &registry()).unwrap();
    assert!(est.windows(2).all(|w| w[0].exceedances >= w[1].exceedances));
    for e in &est {
        assert!(e.ci_low <= e.p_hat && e.p_hat <= e.ci_high);
        assert_eq!(e.grid_scale, 1.0 / 64.0);
    }
    // The counts agree with the raw functional values.
    let values = simulate_functional(&scenario(ScenarioKind::SheppBb, &us, 5000, 1.0 / 64.0, 3)).unwrap();
    for e in &est {
        assert_eq!(e.exceedances, values.iter().filter(|&&v| v > e.u).count() as u64);
    }
}

#[test]
fn brownian_oracle_is_close_on_a_fine_grid() {
    let sc = scenario(ScenarioKind::BmSupOracle, &[0.5, 1.0, 1.5], 20_000, 1.0 / 4096.0, 4);
    for e in estimate_tail(&sc, &registry()).unwrap() {
        let r = e.ratio.unwrap();
        assert!(r > 0.93 && r < 1.03, "u = {}: ratio {r}", e.u);
    }
}

#[test]
fn ratio_report_needs_three_usable_rows() {
    let sc = scenario(ScenarioKind::BridgeSupOracle, &[0.5, 1.0, 2.5, 3.0], 2000, 1.0 / 64.0, 5);
    let est = estimate_tail(&sc, &registry()).unwrap();
    assert_eq!(est[3].exceedances, 0);
    assert_eq!(est[3].ratio, None);
    assert!(matches!(ratio_report(&est), Err(Error::InsufficientData { usable: 2, required: 3 })));

    let sc = scenario(ScenarioKind::BridgeSupOracle, &[0.25, 0.5, 0.75], 2000, 1.0 / 64.0, 5);
    let report = ratio_report(&estimate_tail(&sc, &registry()).unwrap()).unwrap();
    assert_eq!(report.deviations.len(), 3);
    assert_eq!(report.trend_toward_one, report.deviations.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn missing_constants_and_bad_grids_are_reported() {
    let sc = scenario(ScenarioKind::SheppFbm { alpha: 1.3, s: 1.0 }, &[2.0], 10, 1.0 / 16.0, 0);
    assert!(matches!(estimate_tail(&sc, &ConstantRegistry::new()), Err(Error::MissingConstant(_))));
    let off = scenario(ScenarioKind::SheppFbm { alpha: 1.3, s: 1.0 }, &[2.0], 10, 0.3, 0);
    assert!(matches!(estimate_tail(&off, &ConstantRegistry::new()), Err(Error::InvalidGrid(_))));
    let slepian = ScenarioKind::SheppStationary { model: StationaryModel::Slepian, s: 1.0, t: 1.0 };
    assert!(estimate_tail(&scenario(slepian, &[2.0], 10, 1.0 / 16.0, 0), &registry()).is_err());
}

#[test]
fn scenarios_and_records_round_trip() {
    let sc = Scenario {
        kind: ScenarioKind::SheppStationary {
            model: StationaryModel::DampedCosine { lambda: 1.0, omega: 2.0 },
            s: 1.0,
            t: 0.5,
        },
        thresholds: vec![1.0, 2.0],
        replications: 100,
        seed: 3,
        dt: None,
    };
    let json = serde_json::to_string(&sc).unwrap();
    assert_eq!(serde_json::from_str::<Scenario>(&json).unwrap(), sc);
    assert_eq!(sc.step(), default_step(2.0, 1.0));

    assert!(matches!(estimate_tail(&sc, &registry()), Err(Error::MissingConstant(_))));

    let sc = Scenario { kind: ScenarioKind::BbSpan, dt: Some(1.0 / 32.0), ..sc };
    let est = estimate_tail(&sc, &registry()).unwrap();
    let recs = records(&sc, &est);
    assert_eq!(from_csv(&to_csv(&recs).unwrap()).unwrap(), recs);
}
