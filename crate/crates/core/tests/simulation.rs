use fountain_core::dcp::{fit_tilt_scan, RamseyPulse, TiltAxis};
use fountain_core::evaluation::{evaluate_campaign, CampaignData, Constants, Evaluation};
use fountain_core::simulator::{
    ballistic_timing, nominal_field_map, simulate_campaign, simulate_launch_scan, simulate_tilt_scan, FountainConfig,
    SyntheticCampaign, DEFAULT_TILT_ANGLES_MRAD,
};
use fountain_core::zeeman::{
    reconstruct_field_map, time_averaged_field, trajectory_field_stats, FieldMap, ReconstructionOptions,
    ZeemanConstants,
};
use fountain_core::CLOCK_FREQUENCY_HZ;

const SEEDS: u64 = 100;
const COVERAGE_K: f64 = 2.0;
/// Two-sided 95 % Student-t factor for the 11 degrees of freedom of a 13-point line fit.
const LINE_FIT_K: f64 = 2.201;

fn run(seed: u64, n_cycles: usize) -> (FountainConfig, SyntheticCampaign, Evaluation) {
    let cfg = FountainConfig {
        seed,
        fringe_noise_hz: 0.05,
        ..FountainConfig::default()
    };
    let camp = simulate_campaign(&cfg, n_cycles).unwrap();
    let mut constants = Constants::default();
    constants.dcp.mc_trials = 1000;
    constants.dcp.seed = seed;
    let ev = evaluate_campaign(&CampaignData::from_synthetic(&camp, &cfg).unwrap(), &constants).unwrap();
    (cfg, camp, ev)
}

/// Statistical spread of the low-density collisional shift, from the fitted
/// white-FM levels over the time spent at each density.
fn shift_stat_sigma(ev: &Evaluation) -> f64 {
    let s = &ev.stability;
    let k = ev.collisional.stats.k;
    (2.0 * (s.a_h.powi(2) + s.a_l.powi(2)) / s.duration_s).sqrt() / (k - 1.0)
}

#[test]
fn evaluation_covers_injected_truth() {
    let mut hits = [0u32; 6];
    for seed in 0..SEEDS {
        let (cfg, camp, ev) = run(seed, 4000);
        let truth = camp.dataset.truth;

        let n_low: Vec<f64> = camp
            .dataset
            .cycles
            .iter()
            .filter(|c| c.density == fountain_core::density::Density::Low)
            .map(|c| c.n_atoms)
            .collect();
        let mean_low = n_low.iter().sum::<f64>() / n_low.len() as f64;
        let true_shift = truth.collision_shift_low * mean_low / cfg.n_low;
        let u_shift = ev.collisional.u_b.hypot(shift_stat_sigma(&ev));
        hits[0] += ((ev.collisional.shift_low.value() - true_shift).abs() <= COVERAGE_K * u_shift) as u32;
        hits[1] += ((ev.collisional.y_zero - truth.zero_density_y).abs() <= COVERAGE_K * ev.stability.u_a) as u32;

        let kin = cfg.kinematics();
        let b_true = time_averaged_field(&cfg.true_field_map, camp.routine_apogee_mm, &kin).unwrap();
        let z_true = ZeemanConstants::default().shift(b_true).unwrap().value();
        let z = &ev.zeeman.result;
        hits[2] += ((z.bias.value() - z_true).abs() <= COVERAGE_K * z.u_b) as u32;

        for (i, axis) in [(3, &ev.dcp.x), (4, &ev.dcp.y)] {
            let t = cfg
                .tilt_truth
                .iter()
                .find(|t| t.axis == axis.axis && t.pulse == RamseyPulse::HalfPi)
                .unwrap();
            hits[i] += ((axis.fit.gamma - t.gradient_per_mrad).abs() <= LINE_FIT_K * axis.fit.gamma_sigma) as u32;
        }
        hits[5] += (ev.zeeman.reconstruction.residual_rms_nt <= 0.1 + 1e-9) as u32;
    }
    let floor = (0.9 * SEEDS as f64).ceil() as u32;
    let labels = [
        "collision shift",
        "zero-density frequency",
        "Zeeman",
        "DCP X gradient",
        "DCP Y gradient",
        "map residual",
    ];
    for (h, l) in hits.iter().zip(labels) {
        eprintln!("{l}: {h}/{SEEDS}");
        assert!(*h >= floor, "{l} covered in only {h}/{SEEDS} runs");
    }
}

#[test]
fn evaluation_is_deterministic() {
    let (_, a_camp, a) = run(11, 2000);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let (_, b_camp, b) = pool.install(|| run(11, 2000));
    assert_eq!(a_camp, b_camp);
    assert_eq!(a, b);
}

#[test]
fn nominal_map_matches_operating_field() {
    let cfg = FountainConfig::default();
    let kin = cfg.kinematics();
    let apogee = ballistic_timing(&cfg).unwrap().apogee_m * 1000.0;
    let scan = simulate_launch_scan(&cfg, &fountain_core::simulator::default_scan_heights(&cfg)).unwrap();
    let rec = reconstruct_field_map(&scan, &kin, &ReconstructionOptions::default()).unwrap();
    let stats = trajectory_field_stats(&rec.map, apogee, &kin).unwrap();
    assert!((stats.mean_nt - 125.2).abs() < 0.5, "{}", stats.mean_nt);
    assert!(stats.peak_to_peak_nt < 0.7, "{}", stats.peak_to_peak_nt);
    let routine = time_averaged_field(&rec.map, 850.0, &kin).unwrap();
    assert!((routine - 125.2).abs() < 0.5);
}

#[test]
fn bumpy_map_round_trip() {
    let truth = FieldMap::from_fn(0.0, 1000.0, 401, |z: f64| {
        125.2 + 0.3 * (-((z - 720.0) / 70.0).powi(2)).exp() - 0.25 * (-((z - 620.0) / 50.0).powi(2)).exp()
            + 0.1 * (z / 120.0).cos()
    })
    .unwrap();
    let cfg = FountainConfig {
        true_field_map: truth.clone(),
        ..FountainConfig::default()
    };
    let kin = cfg.kinematics();
    let heights = fountain_core::simulator::default_scan_heights(&cfg);
    let scan = simulate_launch_scan(&cfg, &heights).unwrap();
    let rec = reconstruct_field_map(&scan, &kin, &ReconstructionOptions::default()).unwrap();
    let interior: Vec<f64> = rec
        .map
        .z_mm()
        .iter()
        .copied()
        .filter(|z| *z > 560.0 && *z < 930.0)
        .collect();
    let ss: f64 = interior
        .iter()
        .map(|z| (rec.map.field_at(*z).unwrap() - truth.field_at(*z).unwrap()).powi(2))
        .sum();
    let rms = (ss / interior.len() as f64).sqrt();
    assert!(rms < 0.2, "interior RMS {rms}");
    eprintln!("bumpy map interior RMS {rms:.3} nT");
}

#[test]
fn uniform_map_gives_operating_fringe() {
    let cfg = FountainConfig {
        true_field_map: FieldMap::uniform(0.0, 1000.0, 11, 125.2).unwrap(),
        ..FountainConfig::default()
    };
    let scan = simulate_launch_scan(&cfg, &[600.0, 850.0]).unwrap();
    for e in scan.entries() {
        assert!((e.fringe_hz - 877.4).abs() < 0.05, "{}", e.fringe_hz);
    }
}

#[test]
fn realistic_tilt_scan() {
    let (mut slope_ok, mut theta_ok) = (0, 0);
    let mut spread = 0.0;
    let n = 100;
    for seed in 0..n {
        let cfg = FountainConfig {
            seed,
            ..FountainConfig::default()
        };
        let truth = cfg.tilt_truth[0];
        let s = simulate_tilt_scan(
            &cfg,
            TiltAxis::X,
            RamseyPulse::HalfPi,
            &DEFAULT_TILT_ANGLES_MRAD,
            truth.noise,
        )
        .unwrap();
        let f = fit_tilt_scan(&s, 2000, seed).unwrap();
        slope_ok += ((f.gamma - truth.gradient_per_mrad).abs() <= LINE_FIT_K * f.gamma_sigma) as u32;
        theta_ok += ((f.theta_opt_mrad - truth.theta_opt_mrad).abs() <= LINE_FIT_K * f.theta_opt_u_mrad) as u32;
        spread += f.theta_opt_u_mrad;
    }
    let mean_u = spread / n as f64;
    assert!(slope_ok as f64 >= 0.9 * n as f64, "slope {slope_ok}/{n}");
    assert!(theta_ok as f64 >= 0.9 * n as f64, "optimum {theta_ok}/{n}");
    assert!((mean_u / 0.11 - 1.0).abs() < 0.3, "mean MC spread {mean_u}");
}

#[test]
fn zeeman_bias_from_nominal_map() {
    let cfg = FountainConfig::default();
    let b = time_averaged_field(&nominal_field_map(), 857.0, &cfg.kinematics()).unwrap();
    let shift = 4.2745e-8 * b * b / CLOCK_FREQUENCY_HZ;
    assert!((shift * 1e15 - 72.88).abs() < 0.6, "{shift:e}");
}
