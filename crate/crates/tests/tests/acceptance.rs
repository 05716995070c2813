//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::time::{Duration, Instant};

use nosig::audit::{
    no_signalling_audit, receiver_probability, receiver_probability_after_sender_measurement, PacketParams, Scenario,
    ScenarioConfig, Variant,
};
use nosig::measurement::{in_out_partition, probability, three_counter_partition, Projector, ProjectorSet};
use nosig::mode::label;
use nosig::optics::{is_isometry, mach_zehnder_circuit, shiekh_circuit, Circuit, Element, PhaseSetting};
use nosig::wavepacket::{
    orthogonal_pair, recombine, recombine_raw, window_probability, Calibration, DetectorWindow, Grid,
};
use nosig::{ModeState, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nosig_tests::*;

type Criterion = (&'static str, fn() -> Result<Outcome>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome {
        pass,
        detail: detail.into(),
    })
}

fn sweep() -> Vec<PhaseSetting<f64>> {
    PhaseSetting::sweep_with_canonical(SWEEP)
}

fn asset(name: &str) -> std::path::PathBuf {
    cli_asset(name)
}

fn frozen_calibration() -> Calibration {
    serde_json::from_str(&std::fs::read_to_string(asset("calibration.json")).unwrap()).unwrap()
}

fn calibrated_params() -> PacketParams<f64> {
    let c = frozen_calibration();
    PacketParams {
        d_over_sigma: c.d_over_sigma,
        halfwidth_over_sigma: c.window_halfwidth_over_sigma,
        ..PacketParams::default()
    }
}

fn no_signalling_identity() -> Result<Outcome> {
    let start = Instant::now();
    let mut max_dev = 0.0f64;
    let mut rows = 0;
    for v in [Variant::ShiekhDensity, Variant::MachZehnder] {
        let sc = Scenario::new(v, PacketParams::default())?;
        let s = sc.build_initial()?;
        for phi in sweep() {
            max_dev = max_dev.max((receiver_probability(&sc.evolve_sender(&s, phi)) - 0.5).abs());
            rows += 1;
        }
    }
    let took = start.elapsed();
    outcome(
        max_dev <= RECEIVER_TOL && took < Duration::from_secs(IDENTITY_BUDGET_SECS),
        format!("{rows} rows, max |P_receiver - 1/2| = {max_dev:.3e}, {took:.2?}"),
    )
}

fn random_partition(rng: &mut ChaCha8Rng, g: &Grid<f64>) -> Result<ProjectorSet<f64>> {
    let k = rng.gen_range(1..=6);
    let mut cuts: Vec<f64> = (0..k).map(|_| rng.gen_range(g.r_min()..g.r_max())).collect();
    cuts.push(g.r_min());
    cuts.push(g.r_max());
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let projectors = cuts
        .windows(2)
        .enumerate()
        .map(|(i, c)| Ok(Projector::window(format!("w{i}"), DetectorWindow::new(c[0], c[1])?)))
        .collect::<Result<Vec<_>>>()?;
    ProjectorSet::new(projectors)
}

fn measurement_invariance() -> Result<Outcome> {
    let sc = Scenario::new(Variant::ShiekhDensity, PacketParams::default())?;
    let g = sc.grid()?;
    let w = *sc.window().expect("window");
    let s0 = sc.build_initial()?;
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let randoms = (0..RANDOM_PARTITIONS)
        .map(|_| random_partition(&mut rng, &g))
        .collect::<Result<Vec<_>>>()?;
    let mut max_dev = 0.0f64;
    let mut checked = 0;
    for phi in [
        PhaseSetting::zero(),
        PhaseSetting::pi(),
        PhaseSetting::new(1.0),
        PhaseSetting::new(4.0),
    ] {
        let e = sc.evolve_sender(&s0, phi);
        let mut sets = vec![in_out_partition(w, &g)?, three_counter_partition(w, &g)?];
        sets.extend(randoms.iter().cloned());
        for set in &sets {
            let p = receiver_probability_after_sender_measurement(&e, set)?;
            max_dev = max_dev.max((p - 0.5).abs());
            checked += 1;
        }
    }
    let mz = Scenario::new(Variant::MachZehnder, PacketParams::default())?;
    let s0 = mz.build_initial()?;
    for phi in sweep() {
        let p = receiver_probability_after_sender_measurement(&mz.evolve_sender(&s0, phi), &mz.sender_set()?)?;
        max_dev = max_dev.max((p - 0.5).abs());
        checked += 1;
    }
    outcome(
        max_dev <= INVARIANCE_TOL,
        format!("{checked} (state, partition) cases, max deviation {max_dev:.3e}"),
    )
}

fn mach_zehnder_contrast() -> Result<Outcome> {
    let sc = Scenario::new(Variant::MachZehnder, PacketParams::default())?;
    let s0 = sc.build_initial()?;
    let h = Projector::modes("H", [label("H")]);
    let v = Projector::modes("V", [label("V")]);
    let joint = |phi: PhaseSetting<f64>| -> Result<(f64, f64)> {
        let e = sc.evolve_sender(&s0, phi);
        Ok((probability(&e, &h)?, probability(&e, &v)?))
    };
    let mut max_dev = 0.0f64;
    for phi in sweep() {
        let (ph, pv) = joint(phi)?;
        let half = phi.radians() / 2.0;
        max_dev = max_dev
            .max((ph - half.cos().powi(2) / 2.0).abs())
            .max((pv - half.sin().powi(2) / 2.0).abs());
    }
    let (h0, v0) = joint(PhaseSetting::zero())?;
    let (hp, vp) = joint(PhaseSetting::pi())?;
    let exact = [(h0 - 0.5).abs(), v0.abs(), hp.abs(), (vp - 0.5).abs()];
    let exact_dev = exact.iter().cloned().fold(0.0, f64::max);
    outcome(
        max_dev <= MZ_TOL && exact_dev <= MZ_EXACT_TOL,
        format!("sweep deviation {max_dev:.3e}, endpoints (H,V) = ({h0}, {v0}) and ({hp}, {vp})"),
    )
}

fn unitarity() -> Result<Outcome> {
    let tol = ISOMETRY_TOL;
    let mut worst_physical = 0.0f64;
    let mut physical_ok = true;
    for phi in sweep() {
        for c in [shiekh_circuit(phi), mach_zehnder_circuit(phi)] {
            for e in c.elements() {
                let (ok, dev) = is_isometry(&e.matrix(), tol);
                physical_ok &= ok;
                worst_physical = worst_physical.max(dev);
            }
            let (ok, dev) = is_isometry(&c.transfer_matrix()?, tol);
            physical_ok &= ok && c.validate()?.physical;
            worst_physical = worst_physical.max(dev);
        }
    }
    let bundled = Circuit::<f64>::from_json(&std::fs::read_to_string(asset("shiekh.circuit.json")).unwrap())?;
    physical_ok &= bundled.validate()?.physical;

    let mut canceller_dev = 0.0f64;
    for phi in PhaseSetting::sweep(SWEEP) {
        let (ok, dev) = is_isometry(&Element::canceller("u", "l", "c", phi).matrix(), tol);
        canceller_dev = canceller_dev.max((dev - 0.5).abs());
        physical_ok &= !ok;
    }

    let reductio = Circuit::<f64>::from_json(&std::fs::read_to_string(asset("canceller.circuit.json")).unwrap())?;
    let input = ModeState::basis(label("h+"));
    let refused = reductio.apply(&input).is_err();
    let vanished = reductio.apply_non_physical(&input)?.norm();
    outcome(
        physical_ok && canceller_dev <= ISOMETRY_TOL && refused && vanished <= ISOMETRY_TOL,
        format!(
            "physical max deviation {worst_physical:.3e}, canceller |dev - 1/2| {canceller_dev:.3e}, \
             opted-in canceller output norm {vanished:.3e}"
        ),
    )
}

fn wavepacket_norms() -> Result<Outcome> {
    let sc = Scenario::new(Variant::ShiekhDensity, PacketParams::default())?;
    let pair = sc.pair().expect("pair");
    let w = *sc.window().expect("window");
    let g = sc.grid()?;
    let outside = w.complement(&g);
    let s = pair.raw_overlap();
    let (mut norm_dev, mut sum_dev, mut raw_dev) = (0.0f64, 0.0f64, 0.0f64);
    for phi in PhaseSetting::<f64>::sweep(SWEEP) {
        let psi = recombine(pair, phi);
        norm_dev = norm_dev.max((psi.norm() - 1.0).abs());
        let p_in = window_probability(&psi, &w)?;
        let p_out = psi.project(&outside)?.norm_sqr();
        sum_dev = sum_dev.max((p_in + p_out - 1.0).abs());
        let closed = (1.0 + s * phi.radians().cos()).sqrt();
        raw_dev = raw_dev.max((recombine_raw(pair, phi).norm() - closed).abs());
    }
    outcome(
        norm_dev <= NORM_TOL && sum_dev <= NORM_TOL && raw_dev <= RAW_NORM_TOL,
        format!("|norm - 1| {norm_dev:.3e}, |P_in + P_out - 1| {sum_dev:.3e}, raw norm vs closed form {raw_dev:.3e} (s = {s:.6})"),
    )
}

fn density_reproduction() -> Result<Outcome> {
    let cal = frozen_calibration();
    let sc = Scenario::new(Variant::ShiekhDensity, calibrated_params())?;
    let pair = sc.pair().expect("pair");
    let w = *sc.window().expect("window");
    let g = sc.grid()?;
    let p0 = window_probability(&recombine(pair, PhaseSetting::zero()), &w)?;
    let pp = window_probability(&recombine(pair, PhaseSetting::pi()), &w)?;
    let node = recombine(pair, PhaseSetting::pi()).value_at(g.center()).norm_sqr();
    let audit_in = probability(
        &sc.evolve_sender(&sc.build_initial()?, PhaseSetting::zero()),
        &Projector::window("in", w),
    )?;
    outcome(
        p0 >= P_IN_CONSTRUCTIVE_MIN && pp <= P_IN_DESTRUCTIVE_MAX && node <= NODE_TOL,
        format!(
            "d/sigma = {:.4}, w/sigma = {:.4}: P_in(0) = {p0:.6} (need >= {P_IN_CONSTRUCTIVE_MIN}), \
             P_in(pi) = {pp:.6} (need <= {P_IN_DESTRUCTIVE_MAX}), sender in at 0 = {audit_in:.6} \
             (need >= {}), density(pi, r=0) = {node:.1e}",
            cal.d_over_sigma,
            cal.window_halfwidth_over_sigma,
            P_IN_CONSTRUCTIVE_MIN / 2.0
        ),
    )
}

fn monte_carlo() -> Result<Outcome> {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut retries = 0;
    let mut verdicts = true;
    for v in [Variant::ShiekhDensity, Variant::MachZehnder] {
        let mut cfg = ScenarioConfig::<f64>::new(v);
        cfg.phis = vec![PhaseSetting::zero(), PhaseSetting::pi()];
        cfg.trials = MC_TRIALS;
        cfg.seed = 2024;
        let rep = no_signalling_audit(&cfg)?;
        verdicts &= rep.verdict == nosig::audit::Verdict::Pass;
        for r in &rep.rows {
            worst = worst.max((r.receiver_empirical - 0.5).abs());
            retries += r.retried as usize;
        }
    }
    let took = start.elapsed();
    outcome(
        worst <= MC_BAND && verdicts && took < Duration::from_secs(MONTE_CARLO_BUDGET_SECS),
        format!(
            "max |f - 1/2| = {worst:.5} over 4 rows of {MC_TRIALS} (band {MC_BAND}), {retries} reseeded, {took:.2?}"
        ),
    )
}

fn determinism() -> Result<Outcome> {
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 4] = [
        &[
            "audit",
            "--variant",
            "shiekh-density",
            "--seed",
            "7",
            "--trials",
            "20000",
        ],
        &["audit", "--variant", "mach-zehnder", "--seed", "7", "--trials", "20000"],
        &["density", "--phi", "1.3"],
        &["calibrate"],
    ];
    let mut identical = true;
    let mut bytes = 0;
    for (i, args) in runs.iter().enumerate() {
        let mut outs = Vec::new();
        for k in 0..2 {
            let p = dir.path().join(format!("{i}-{k}"));
            let mut argv = vec!["nosig".to_string()];
            argv.extend(args.iter().map(|a| a.to_string()));
            argv.extend(["--out".to_string(), p.display().to_string()]);
            let status = nosig_cli::run(argv);
            identical &= status != nosig_cli::EXIT_USAGE;
            outs.push(std::fs::read(&p).unwrap_or_default());
        }
        identical &= !outs[0].is_empty() && outs[0] == outs[1];
        bytes += outs[0].len();
    }
    outcome(
        identical,
        format!("{} commands run twice, {bytes} bytes compared", runs.len()),
    )
}

fn grid_convergence() -> Result<Outcome> {
    let p = calibrated_params();
    let coarse = p.grid()?;
    let fine = coarse.refined();
    let probs = |g: &Grid<f64>| -> Result<[f64; 2]> {
        let pair = orthogonal_pair(g, p.d_over_sigma * p.sigma, p.sigma)?;
        let w = DetectorWindow::centered(g.center(), p.halfwidth_over_sigma * p.sigma)?;
        Ok([
            window_probability(&recombine(&pair, PhaseSetting::zero()), &w)?,
            window_probability(&recombine(&pair, PhaseSetting::pi()), &w)?,
        ])
    };
    let a = probs(&coarse)?;
    let b = probs(&fine)?;
    let change = (a[0] - b[0]).abs().max((a[1] - b[1]).abs());
    outcome(
        change <= CONVERGENCE_TOL,
        format!("{} -> {} points, max change {change:.3e}", coarse.len(), fine.len()),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("no-signalling identity", no_signalling_identity),
        ("measurement invariance", measurement_invariance),
        ("Mach-Zehnder contrast", mach_zehnder_contrast),
        ("unitarity", unitarity),
        ("wave-packet norm preservation", wavepacket_norms),
        ("density profile reproduction", density_reproduction),
        ("Monte Carlo consistency", monte_carlo),
        ("determinism", determinism),
        ("grid convergence", grid_convergence),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (pass, detail) = match check() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += !pass as usize;
        println!("{} {}. {name}: {detail}", if pass { "PASS" } else { "FAIL" }, i + 1);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
