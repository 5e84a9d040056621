use fwrde::classifier::{Activation, DistortionObjective, FeedforwardNetwork, GaussianInputModel, Layer};
use fwrde::evaluation::{aggregate, default_rate_grid, map_to_curve};
use fwrde::rde::{
    mr_rde, multirate_map, ord_rde, rc_rde, sensitivity_map, single_rate_maps, Method, OrderingSolver,
    RelevanceMap,
};
use fwrde::regions::{BirkhoffPolytope, FeasibleRegion};
use fwrde::solvers::{Objective, SfwPreset, SolverConfig, SolverKind};
use fwrde::synthetic::{planted_instance, random_instance, PlantedSpec};

fn linear_objective(w: Vec<f64>, x: Vec<f64>) -> DistortionObjective {
    let n = w.len();
    let l = Layer::new(vec![w], vec![0.0], Activation::Identity).unwrap();
    let net = FeedforwardNetwork::new(n, vec![l]).unwrap();
    let noise = GaussianInputModel::new(vec![0.0; n], vec![1.0; n]).unwrap();
    DistortionObjective::new(net, x, noise).unwrap()
}

#[test]
fn dominant_weight_gets_the_mass() {
    let obj = linear_objective(vec![0.1, 5.0, 0.2, 0.1], vec![1.0; 4]);
    let config = SolverConfig::default();
    for kind in SolverKind::ALL {
        let res = rc_rde(&obj, 3, kind, &config).unwrap();
        assert!(res.distortion <= obj.value(&[0.0; 4]));
        assert!(res.map.rate() <= 3.0 + 1e-9);
        assert_eq!(res.map.ordering()[0], 1, "{kind}");
        assert!(res.map.scores()[1] > 0.99);
    }
}

#[test]
fn planted_pair_is_recovered() {
    let config = SolverConfig::default();
    for seed in 0..5 {
        let inst = planted_instance(seed, PlantedSpec::new(8, 2)).unwrap();
        let obj = inst.objective().unwrap();
        for kind in SolverKind::ALL {
            let map = rc_rde(&obj, 2, kind, &config).unwrap().map;
            let on: f64 = inst.support.iter().map(|&i| map.scores()[i]).sum();
            assert!(on >= 0.9 * map.rate(), "seed {seed} {kind}");
            assert!(map.rate() <= 2.0 + 1e-9);
        }
    }
}

#[test]
fn multi_rate_prefers_planted_features() {
    let config = SolverConfig::default();
    let inst = planted_instance(3, PlantedSpec::new(10, 3)).unwrap();
    let obj = inst.objective().unwrap();
    let mr = mr_rde(&obj, &[4, 1, 2, 2], SolverKind::Afw, &config).unwrap();
    assert_eq!(mr.map.rates, vec![1, 2, 4]);
    assert_eq!(mr.map.method, Method::Mr);
    let scores = mr.map.scores();
    let lowest_planted = inst.support.iter().map(|&i| scores[i]).fold(f64::INFINITY, f64::min);
    let highest_other = (0..10)
        .filter(|i| !inst.support.contains(i))
        .map(|i| scores[i])
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(lowest_planted > highest_other);

    // exact arithmetic mean of the parts, in increasing rate order
    for i in 0..10 {
        let mean = mr.parts.iter().map(|p| p.map.scores()[i]).sum::<f64>() / 3.0;
        assert_eq!(scores[i], mean);
    }
}

#[test]
fn identical_sub_solutions_average_to_themselves() {
    let obj = linear_objective(vec![2.0, 1.0, 0.5], vec![1.0, -1.0, 2.0]);
    let config = SolverConfig::default();
    let single = rc_rde(&obj, 1, SolverKind::Lcg, &config).unwrap();
    let mr = mr_rde(&obj, &[1, 1, 1], SolverKind::Lcg, &config).unwrap();
    assert_eq!(mr.map.scores(), single.map.scores());
}

#[test]
fn ordering_maps_are_consistent() {
    let inst = random_instance(5, 5, 6, 3).unwrap();
    let obj = inst.objective().unwrap();
    let config = SolverConfig::default().with_max_iterations(300);
    for solver in [
        OrderingSolver::Deterministic(SolverKind::Lafw),
        OrderingSolver::Stochastic(SfwPreset::C.config(4)),
    ] {
        let res = ord_rde(&obj, solver, &config).unwrap();
        assert!(BirkhoffPolytope::new(5).unwrap().contains(&res.pi, 1e-9));
        for (k, map) in single_rate_maps(&res.pi, 5).iter().enumerate() {
            assert!(map.iter().all(|&v| (-1e-9..=1.0 + 1e-9).contains(&v)));
            assert!((map.iter().sum::<f64>() - (k + 1) as f64).abs() <= 1e-9);
            assert_eq!(map, &res.single_rate_map(k + 1));
        }
        assert_eq!(res.multirate_scores(), multirate_map(&res.pi, 5).as_slice());
        assert_eq!(res.map.rates, vec![1, 2, 3, 4]);
    }
}

#[test]
fn ordering_needs_two_features() {
    let obj = linear_objective(vec![1.0], vec![1.0]);
    assert!(ord_rde(&obj, OrderingSolver::Deterministic(SolverKind::Fw), &SolverConfig::default()).is_err());
}

#[test]
fn curves_depend_only_on_the_ordering() {
    let inst = planted_instance(2, PlantedSpec::new(8, 3)).unwrap();
    let grid = default_rate_grid();
    let map = RelevanceMap::new(vec![0.1, 0.9, 0.3, 0.0, 0.5, 0.2, 0.7, 0.4], Method::Rc).unwrap();
    let cube = RelevanceMap::new(map.scores().iter().map(|s| s.powi(3)).collect(), Method::Rc).unwrap();
    let run = |m: &RelevanceMap| map_to_curve(&inst.network, &inst.input, m, &grid, &inst.noise, 64, 9).unwrap();
    let (a, b, c) = (run(&map), run(&map), run(&cube));
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_eq!(a.mean_distortion[63], 0.0);
    assert_eq!(a.mean_accuracy[63], 1.0);

    let agg = aggregate(std::slice::from_ref(&a)).unwrap();
    assert_eq!(agg.mean_distortion, a.mean_distortion);
    assert!(agg.std_distortion.iter().all(|&s| s == 0.0));

    let wrong = RelevanceMap::new(vec![0.5; 7], Method::Rc).unwrap();
    assert!(map_to_curve(&inst.network, &inst.input, &wrong, &grid, &inst.noise, 64, 9).is_err());
}

#[test]
fn sensitivity_map_is_normalized() {
    let inst = random_instance(6, 9, 7, 3).unwrap();
    let map = sensitivity_map(&inst.network, &inst.input).unwrap();
    let max = map.scores().iter().copied().fold(0.0, f64::max);
    assert_eq!(max, 1.0);
    assert!(map.scores().iter().all(|&s| s >= 0.0));
    assert!(sensitivity_map(&inst.network, &[0.0; 3]).is_err());
}
