use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use nosig::audit::{no_signalling_audit, AuditReport, PacketParams, Scenario, ScenarioConfig, Variant, Verdict};
use nosig::measurement::probability;
use nosig::optics::{Circuit, PhaseSetting};
use nosig::wavepacket::{calibrate as scan, recombine, window_probability, Calibration, Grid, TARGET_CONTRAST};
use nosig::Error;

use crate::config::{self, Common, Format, GeometryFlags, GridFlags, RunConfig};
use crate::output::{emit, json_pretty, num};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Self::Pass
        } else {
            Self::Fail
        }
    }
}

fn format_of(common: &Common, file: &RunConfig, default: Format) -> Format {
    common.format.or(file.format).unwrap_or(default)
}

fn out_of<'a>(common: &'a Common, file: &'a RunConfig) -> Option<&'a Path> {
    common.out.as_deref().or(file.out.as_deref())
}

pub struct AuditArgs {
    pub variant: Option<String>,
    pub phi_sweep: Option<usize>,
    pub phi: Vec<String>,
    pub trials: Option<u64>,
    pub grid: GridFlags,
    pub geometry: GeometryFlags,
}

pub fn audit(common: &Common, file: &RunConfig, args: AuditArgs) -> anyhow::Result<Status> {
    let Some(variant) = args.variant.as_deref().or(file.variant.as_deref()) else {
        bail!("--variant is required (shiekh-density or mach-zehnder)");
    };
    let variant = config::parse_variant(variant)?;
    let mut cfg = ScenarioConfig::<f64>::new(variant);
    cfg.phis = if !args.phi.is_empty() {
        args.phi
            .iter()
            .map(|s| config::parse_phase(s))
            .collect::<anyhow::Result<_>>()?
    } else if let Some(n) = args.phi_sweep {
        sweep(n)?
    } else if let Some(list) = file.phase_list()? {
        list
    } else if let Some(n) = file.phi_sweep {
        sweep(n)?
    } else {
        cfg.phis
    };
    cfg.trials = args.trials.or(file.trials).unwrap_or(cfg.trials);
    cfg.seed = common.seed.or(file.seed).unwrap_or(cfg.seed);
    cfg.packet = config::packet_params(&args.grid, &args.geometry, file)?;
    let report = no_signalling_audit(&cfg)?;
    let bytes = match format_of(common, file, Format::Json) {
        Format::Json => json_pretty(&report)?,
        Format::Csv => audit_csv(&report).into_bytes(),
    };
    emit(out_of(common, file), &bytes)?;
    eprintln!(
        "{}: {} phases, max |P_receiver - 1/2| = {:e}, verdict {}",
        report.variant,
        report.rows.len(),
        report.max_deviation,
        if report.verdict == Verdict::Pass {
            "pass"
        } else {
            "fail"
        }
    );
    Ok(Status::from_bool(report.verdict == Verdict::Pass))
}

fn sweep(n: usize) -> anyhow::Result<Vec<PhaseSetting<f64>>> {
    if n == 0 {
        bail!("--phi-sweep must be at least 1");
    }
    Ok(PhaseSetting::sweep_with_canonical(n))
}

fn audit_csv(r: &AuditReport) -> String {
    let keys: Vec<&String> = r.rows.first().map(|x| x.sender.keys().collect()).unwrap_or_default();
    let mut s = String::from("phi");
    for k in &keys {
        let _ = write!(s, ",sender_{k}");
    }
    s.push_str(",receiver_analytic,receiver_empirical,trials,seed\n");
    for row in &r.rows {
        s.push_str(&num(row.phi));
        for k in &keys {
            let _ = write!(s, ",{}", num(row.sender[*k]));
        }
        let _ = writeln!(
            s,
            ",{},{},{},{}",
            num(row.receiver_analytic),
            num(row.receiver_empirical),
            row.trials,
            row.seed
        );
    }
    s
}

pub struct DensityArgs {
    pub phi: Option<String>,
    pub calibration: Option<PathBuf>,
    pub verify: bool,
    pub grid: GridFlags,
    pub geometry: GeometryFlags,
}

fn read_calibration(path: &Path) -> anyhow::Result<Calibration> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing calibration {}", path.display()))
}

pub fn density(common: &Common, file: &RunConfig, args: DensityArgs) -> anyhow::Result<Status> {
    let mut geometry = args.geometry.clone();
    if let Some(p) = &args.calibration {
        let c = read_calibration(p)?;
        geometry.d_over_sigma = geometry.d_over_sigma.or(Some(c.d_over_sigma));
        geometry.halfwidth_over_sigma = geometry.halfwidth_over_sigma.or(Some(c.window_halfwidth_over_sigma));
    }
    let params: PacketParams<f64> = config::packet_params(&args.grid, &geometry, file)?;
    let scenario = Scenario::new(Variant::ShiekhDensity, params)?;
    let pair = scenario.pair().expect("packet scenario");
    let window = *scenario.window().expect("packet scenario");
    let grid = *pair.grid();

    let mut phases = vec![
        ("density_phi0", PhaseSetting::zero()),
        ("density_phipi", PhaseSetting::pi()),
    ];
    if let Some(p) = &args.phi {
        phases.push(("density_phi", config::parse_phase(p)?));
    }
    let profiles: Vec<_> = phases.iter().map(|(_, phi)| recombine(pair, *phi)).collect();
    let columns: Vec<Vec<f64>> = profiles.iter().map(|w| w.density()).collect();

    let out = out_of(common, file);
    let bytes = match format_of(common, file, Format::Csv) {
        Format::Csv => {
            let mut s = String::from("r");
            for (name, _) in &phases {
                let _ = write!(s, ",{name}");
            }
            s.push('\n');
            for (i, r) in grid.points().enumerate() {
                s.push_str(&num(r));
                for c in &columns {
                    let _ = write!(s, ",{}", num(c[i]));
                }
                s.push('\n');
            }
            s.into_bytes()
        }
        Format::Json => {
            let mut m = serde_json::Map::new();
            m.insert("r".into(), grid.points().collect::<Vec<_>>().into());
            for ((name, _), c) in phases.iter().zip(&columns) {
                m.insert((*name).into(), c.clone().into());
            }
            json_pretty(&m)?
        }
    };
    emit(out, &bytes)?;

    let initial = scenario.build_initial()?;
    let sender = scenario.sender_set()?;
    let mut echo = String::new();
    let _ = writeln!(echo, "window [{}, {}]", num(window.a()), num(window.b()));
    for ((_, phi), psi) in phases.iter().zip(&profiles) {
        let p_in = window_probability(psi, &window)?;
        let evolved = scenario.evolve_sender(&initial, *phi);
        let _ = write!(
            echo,
            "phi={} P_in={} P_out={}",
            num(phi.radians()),
            num(p_in),
            num(1.0 - p_in)
        );
        for p in sender.projectors() {
            let _ = write!(echo, " sender_{}={}", p.label(), num(probability(&evolved, p)?));
        }
        echo.push('\n');
    }

    let mut ok = true;
    if args.verify {
        for ((name, _), c) in phases.iter().zip(&columns) {
            let total = grid.integrate(c, grid.r_min(), grid.r_max());
            let good = (total - 1.0).abs() <= 1e-8;
            ok &= good;
            let _ = writeln!(
                echo,
                "verify {name}: integral {} {}",
                num(total),
                if good { "ok" } else { "FAIL" }
            );
        }
        let node = profiles[1].value_at(grid.center()).norm_sqr();
        let good = node <= 1e-12;
        ok &= good;
        let _ = writeln!(
            echo,
            "verify density_phipi at centre: {} {}",
            num(node),
            if good { "ok" } else { "FAIL" }
        );
    }
    if out.is_none() {
        eprint!("{echo}");
    } else {
        print!("{echo}");
    }
    Ok(Status::from_bool(ok))
}

pub fn validate(common: &Common, file: &RunConfig, path: &Path) -> anyhow::Result<Status> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let circuit = Circuit::<f64>::from_json(&text).with_context(|| format!("parsing circuit {}", path.display()))?;
    let report = circuit.validate()?;
    let bytes = match common.format.or(file.format) {
        Some(Format::Json) => json_pretty(&report)?,
        Some(Format::Csv) => bail!("validate has no csv output"),
        None => format!("{report}\n").into_bytes(),
    };
    emit(out_of(common, file), &bytes)?;
    Ok(Status::from_bool(report.physical))
}

pub fn calibrate(common: &Common, file: &RunConfig, flags: &GridFlags) -> anyhow::Result<Status> {
    let p = config::packet_params(flags, &GeometryFlags::default(), file)?;
    let grid = Grid::symmetric(p.sigma, p.extent_over_sigma, p.n_points)?;
    let cal = match scan(&grid, p.sigma) {
        Ok(c) => c,
        Err(
            e @ (Error::Calibration { .. }
            | Error::Truncated { .. }
            | Error::Window { .. }
            | Error::Conditioning { .. }),
        ) => {
            eprintln!("calibration failed: {e}");
            return Ok(Status::Fail);
        }
        Err(e) => return Err(e.into()),
    };
    let bytes = match format_of(common, file, Format::Json) {
        Format::Json => json_pretty(&cal)?,
        Format::Csv => format!(
            "d_over_sigma,window_halfwidth_over_sigma,contrast\n{},{},{}\n",
            num(cal.d_over_sigma),
            num(cal.window_halfwidth_over_sigma),
            num(cal.contrast)
        )
        .into_bytes(),
    };
    emit(out_of(common, file), &bytes)?;
    let ok = cal.contrast >= TARGET_CONTRAST;
    if !ok {
        eprintln!("best contrast {} is below the target {TARGET_CONTRAST}", cal.contrast);
    }
    Ok(Status::from_bool(ok))
}
