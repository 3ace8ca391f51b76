use lig_core::convex::{
    detect_degenerate, fix_degenerate, hinge_primal_objective, logistic_loss, simul_logistic_loss,
    simultaneous_logistic_smooth, train, train_independent, train_simultaneous_hinge, ConvexMethod,
    ConvexTrainConfig,
};
use lig_core::{
    enumerate_equilibria, EquilibriaSet, InfluenceGame, JointActionDataset, MixtureModel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn coordination_data() -> JointActionDataset {
    JointActionDataset::from_indices(2, vec![3, 0, 3, 3, 0, 0, 3, 0, 3, 0]).unwrap()
}

fn random_dataset(rng: &mut ChaCha8Rng, n: usize, m: usize) -> JointActionDataset {
    let samples = (0..m).map(|_| rng.random_range(0..1u64 << n)).collect();
    JointActionDataset::from_indices(n, samples).unwrap()
}

fn random_game(rng: &mut ChaCha8Rng, n: usize) -> InfluenceGame {
    let mut g = InfluenceGame::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                g.set_weight(i, j, rng.random_range(-1.0..1.0)).unwrap();
            }
        }
        g.set_threshold(i, rng.random_range(-1.0..1.0)).unwrap();
    }
    g
}

#[test]
fn all_learners_recover_coordination_equilibria() {
    let d = coordination_data();
    for method in ConvexMethod::ALL {
        let r = train(&d, &ConvexTrainConfig::new(method, 0.01)).unwrap();
        let ne = enumerate_equilibria(&r.game, 1e-9).unwrap();
        assert!(
            ne.contains(0) && ne.contains(3),
            "{method:?}: {:?}",
            ne.members()
        );
        for i in 0..2 {
            assert_eq!(r.game.weight(i, i), 0.0);
        }
    }
}

#[test]
fn balanced_player_is_degenerate() {
    // all four joint actions once: every balance count is m/2
    let d = JointActionDataset::from_indices(2, vec![0, 1, 2, 3]).unwrap();
    for method in [ConvexMethod::IndSvm, ConvexMethod::IndLogistic] {
        let r = train_independent(&d, &ConvexTrainConfig::new(method, 0.05)).unwrap();
        assert_eq!(r.per_player_degenerate, vec![true, true], "{method:?}");
        assert!(r.game.is_absolutely_indifferent(0));
        assert!(detect_degenerate(&d, 0, method).unwrap());
    }
}

#[test]
fn huge_penalty_zeroes_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let d = random_dataset(&mut rng, 4, 30);
    for method in ConvexMethod::ALL {
        let r = train(&d, &ConvexTrainConfig::new(method, 1e3)).unwrap();
        assert_eq!(r.game.l1_norm(), 0.0, "{method:?}");
    }
    // with a balanced dataset the thresholds vanish as well
    let bal = JointActionDataset::from_indices(3, (0..8).collect()).unwrap();
    for method in ConvexMethod::ALL {
        let r = train(&bal, &ConvexTrainConfig::new(method, 1e3)).unwrap();
        assert!(r.per_player_degenerate.iter().all(|&f| f), "{method:?}");
    }
}

#[test]
fn independent_detector_cases() {
    // x0 balanced and independent of x1, half-half counts
    let d = JointActionDataset::from_indices(2, vec![0, 1, 2, 3, 0, 1, 2, 3]).unwrap();
    assert!(detect_degenerate(&d, 0, ConvexMethod::IndSvm).unwrap());
    let plus = JointActionDataset::from_indices(2, vec![1, 3, 1, 3]).unwrap();
    assert!(!detect_degenerate(&plus, 0, ConvexMethod::IndSvm).unwrap());
    let odd = JointActionDataset::from_indices(2, vec![0, 1, 2]).unwrap();
    assert!(!detect_degenerate(&odd, 0, ConvexMethod::IndLogistic).unwrap());
    assert!(detect_degenerate(&d, 2, ConvexMethod::IndSvm).is_err());
}

#[test]
fn fixup_follows_majority_rule() {
    // player 0 plays -1 in 7 of 10 samples, player 1 plays +1 in 7 of 10
    let mut samples = vec![0b10; 7];
    samples.extend([0b01, 0b01, 0b01]);
    let d = JointActionDataset::from_indices(2, samples).unwrap();
    let r = train(&d, &ConvexTrainConfig::new(ConvexMethod::SimLogistic, 1e3)).unwrap();
    let mut flagged = r.clone();
    flagged.per_player_degenerate = vec![true, true];
    flagged.game = InfluenceGame::zeros(2);
    let fixed = fix_degenerate(&flagged, &d).unwrap();
    assert_eq!(fixed.threshold(0), 1.0);
    assert_eq!(fixed.threshold(1), -1.0);
    // no flags: unchanged
    let mut clean = r.clone();
    clean.per_player_degenerate = vec![false, false];
    assert_eq!(fix_degenerate(&clean, &d).unwrap(), clean.game);
}

#[test]
fn hinge_single_sample_is_an_equilibrium() {
    let d = JointActionDataset::from_indices(4, vec![15; 5]).unwrap();
    let r =
        train_simultaneous_hinge(&d, &ConvexTrainConfig::new(ConvexMethod::SimSvm, 0.1)).unwrap();
    assert!(enumerate_equilibria(&r.game, 1e-9).unwrap().contains(15));
}

#[test]
fn hinge_separable_data_without_penalty() {
    let r = train_simultaneous_hinge(
        &coordination_data(),
        &ConvexTrainConfig::new(ConvexMethod::SimSvm, 0.0),
    )
    .unwrap();
    assert!(r.objective.abs() < 1e-9, "{}", r.objective);
}

#[test]
fn hinge_duality_gap_and_slack_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let n = rng.random_range(2..=6);
        let m = rng.random_range(2..=20);
        let rho = rng.random_range(0.001..0.2);
        let d = random_dataset(&mut rng, n, m);
        let r = train_simultaneous_hinge(&d, &ConvexTrainConfig::new(ConvexMethod::SimSvm, rho))
            .unwrap();
        let dual = r.dual_objective.unwrap();
        assert!((r.objective - dual).abs() <= 1e-6 * (1.0 + r.objective.abs()));
        assert!(r.converged);
        let direct = hinge_primal_objective(&d, &r.game, rho);
        // degenerate rows are zeroed after the solve; only compare when untouched
        if !r.per_player_degenerate.iter().any(|&f| f) {
            assert!((direct - r.objective).abs() < 1e-9);
        }
    }
}

#[test]
fn logistic_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let d = random_dataset(&mut rng, 5, 10);
    let g = random_game(&mut rng, 5);
    let (_, gw, gb) = simultaneous_logistic_smooth(&d, &g).unwrap();
    let h = 1e-5;
    for i in 0..5 {
        for j in 0..5 {
            if i == j {
                continue;
            }
            let mut p = g.clone();
            p.set_weight(i, j, g.weight(i, j) + h).unwrap();
            let mut q = g.clone();
            q.set_weight(i, j, g.weight(i, j) - h).unwrap();
            let fd = (simultaneous_logistic_smooth(&d, &p).unwrap().0
                - simultaneous_logistic_smooth(&d, &q).unwrap().0)
                / (2.0 * h);
            let rel = (fd - gw[i * 5 + j]).abs() / gw[i * 5 + j].abs().max(1e-3);
            assert!(rel <= 1e-5, "w[{i}][{j}] fd={fd} an={}", gw[i * 5 + j]);
        }
        let mut p = g.clone();
        p.set_threshold(i, g.threshold(i) + h).unwrap();
        let mut q = g.clone();
        q.set_threshold(i, g.threshold(i) - h).unwrap();
        let fd = (simultaneous_logistic_smooth(&d, &p).unwrap().0
            - simultaneous_logistic_smooth(&d, &q).unwrap().0)
            / (2.0 * h);
        assert!((fd - gb[i]).abs() / gb[i].abs().max(1e-3) <= 1e-5);
    }
}

#[test]
fn logistic_objective_independent_of_seed() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let d = random_dataset(&mut rng, 5, 40);
    for method in [ConvexMethod::SimLogistic, ConvexMethod::IndLogistic] {
        let mut c = ConvexTrainConfig::new(method, 0.02);
        c.seed = 1;
        let a = train(&d, &c).unwrap();
        c.seed = 99;
        let b = train(&d, &c).unwrap();
        assert!(
            a.converged && b.converged,
            "{method:?} {} {}",
            a.residual,
            b.residual
        );
        assert!((a.objective - b.objective).abs() <= 1e-6);
    }
}

#[test]
fn l1_norm_shrinks_with_rho() {
    let truth = EquilibriaSet::new(4, vec![0, 3, 12, 15]).unwrap();
    let d = lig_core::sample(&MixtureModel::new(truth, 0.8).unwrap(), 4, 60).unwrap();
    for method in ConvexMethod::ALL {
        let mut prev = f64::INFINITY;
        for rho in [0.001, 0.01, 0.03, 0.1, 0.3, 1.0] {
            let r = train(&d, &ConvexTrainConfig::new(method, rho)).unwrap();
            let norm = r.game.l1_norm();
            assert!(norm <= prev + 1e-6, "{method:?} rho={rho}: {norm} > {prev}");
            prev = norm;
        }
    }
}

#[test]
fn simultaneous_loss_inequalities() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..200 {
        let n = rng.random_range(2..=10);
        let z: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let l = simul_logistic_loss(&z);
        let max = z.iter().map(|&v| logistic_loss(v)).fold(f64::MIN, f64::max);
        let sum: f64 = z.iter().map(|&v| logistic_loss(v)).sum();
        let lse = z.iter().map(|&v| logistic_loss(v).exp()).sum::<f64>().ln();
        assert!(max <= l + 1e-12 && l < sum && l < lse);
    }
}
