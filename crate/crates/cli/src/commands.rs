use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use casimir_core::blackhole::BlackHoleState;
use casimir_core::casimir::{self, CasimirState};
use casimir_core::constants;
use casimir_core::driven::{self, DriveParams, EffectiveModel, SweepGrid};
use casimir_core::dynamics::{self, SimulationConfig, Termination};
use casimir_core::modesum::{self, RegulatorKind, RegulatorSpec};
use casimir_core::stability::{self, IsothermSamples};
use casimir_core::PhysicalConstants;

use crate::config::{self, MeasureConfig, SimulateConfig, SweepConfig};
use crate::error::CliError;
use crate::output::{num, opt_num, Cell, Format, Report, Table};
use crate::{
    BlackholeArgs, CasimirArgs, Command, ConfigArgs, EquilibriumArgs, RegulatorChoice,
    StabilityArgs, VerifyArgs,
};

/// erg cm^2 to J m^2.
const KAPITZA_CGS_TO_SI: f64 = 1e-11;

pub struct Outcome {
    pub report: Report,
    pub default_format: Format,
    /// Secondary file written alongside the main output.
    pub side_output: Option<(PathBuf, String)>,
    /// Set when output was produced but the computation did not succeed.
    pub failure: Option<CliError>,
}

impl Outcome {
    fn ok(report: Report, default_format: Format) -> Self {
        Self {
            report,
            default_format,
            side_output: None,
            failure: None,
        }
    }
}

fn params(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => Map::new(),
    }
}

fn constants_json(c: &PhysicalConstants) -> Value {
    json!({ "hbar": c.hbar(), "c": c.c(), "k_b": c.k_b(), "g": c.g() })
}

pub fn execute(cmd: &Command, consts: &PhysicalConstants) -> Result<Outcome, CliError> {
    match cmd {
        Command::Casimir(a) => casimir_cmd(a, consts),
        Command::Blackhole(a) => blackhole_cmd(a, consts),
        Command::Stability(a) => stability_cmd(a),
        Command::Equilibrium(a) => equilibrium_cmd(a, consts),
        Command::Sweep(a) => sweep_cmd(a, consts),
        Command::Simulate(a) => simulate_cmd(a, consts),
        Command::VerifyCasimir(a) => verify_cmd(a),
        Command::MeasureK(a) => measure_cmd(a, consts),
    }
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    if !(3..=4).contains(&parts.len()) {
        return Err(CliError::Config(format!(
            "--grid expects zmin,zmax,n[,log|lin], got `{spec}`"
        )));
    }
    let bad = |what: &str| CliError::Config(format!("--grid: cannot parse {what} in `{spec}`"));
    let z_min: f64 = parts[0].parse().map_err(|_| bad("zmin"))?;
    let z_max: f64 = parts[1].parse().map_err(|_| bad("zmax"))?;
    let n: usize = parts[2].parse().map_err(|_| bad("n"))?;
    let log = match parts.get(3).copied().unwrap_or("log") {
        "log" => true,
        "lin" | "linear" => false,
        _ => return Err(bad("spacing (log|lin)")),
    };
    Ok(casimir::gap_grid(z_min, z_max, n, log)?)
}

fn casimir_cmd(a: &CasimirArgs, consts: &PhysicalConstants) -> Result<Outcome, CliError> {
    let (zs, p) = match (&a.z, &a.grid) {
        (Some(z), _) => (vec![*z], json!({ "z": z })),
        (None, Some(g)) => (parse_grid(g)?, json!({ "grid": g })),
        (None, None) => return Err(CliError::Config("one of --z or --grid is required".into())),
    };
    let states = zs
        .iter()
        .map(|&z| CasimirState::at(z, consts))
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(&["z", "epsilon", "pressure", "compressibility"]);
    for s in &states {
        table.push(vec![
            s.z.into(),
            s.epsilon.into(),
            s.pressure.into(),
            s.compressibility.into(),
        ]);
    }
    let mut pm = params(p);
    pm.insert("constants".into(), constants_json(consts));
    let json = serde_json::to_value(&states).unwrap_or(Value::Null);
    Ok(Outcome::ok(
        Report::new("casimir", pm, table, json),
        Format::Csv,
    ))
}

fn blackhole_cmd(a: &BlackholeArgs, consts: &PhysicalConstants) -> Result<Outcome, CliError> {
    let (s, p) = match (a.mass, a.temperature) {
        (Some(m), _) => (BlackHoleState::from_mass(m, consts)?, json!({ "mass": m })),
        (None, Some(t)) => (
            BlackHoleState::from_temperature(t, consts)?,
            json!({ "temperature": t }),
        ),
        (None, None) => {
            return Err(CliError::Config(
                "one of --mass or --temperature is required".into(),
            ))
        }
    };
    let mut table = Table::new(&[
        "mass",
        "entropy",
        "temperature",
        "heat_capacity",
        "heat_capacity_kb",
    ]);
    table.push(vec![
        s.mass.into(),
        s.entropy.into(),
        s.temperature.into(),
        s.heat_capacity.into(),
        s.heat_capacity_kb.into(),
    ]);
    let mut pm = params(p);
    pm.insert("constants".into(), constants_json(consts));
    let json = serde_json::to_value(s).unwrap_or(Value::Null);
    Ok(Outcome::ok(
        Report::new("blackhole", pm, table, json),
        Format::Json,
    ))
}

fn read_isotherm(path: &Path) -> Result<Vec<(f64, f64)>, CliError> {
    let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(io)?;
    let headers = rdr.headers().map_err(io)?.clone();
    let names: Vec<String> = headers.iter().map(|h| h.to_ascii_lowercase()).collect();
    if names != ["z", "p"] {
        return Err(CliError::Config(format!(
            "{}: expected columns `z,P`, found `{}`",
            path.display(),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut points = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(io)?;
        let field = |j: usize| -> Result<f64, CliError> {
            rec.get(j).unwrap_or("").parse().map_err(|_| {
                CliError::Config(format!(
                    "{}: row {}: cannot parse `{}`",
                    path.display(),
                    i + 1,
                    rec.get(j).unwrap_or("")
                ))
            })
        };
        points.push((field(0)?, field(1)?));
    }
    Ok(points)
}

fn stability_cmd(a: &StabilityArgs) -> Result<Outcome, CliError> {
    let points = read_isotherm(&a.input)?;
    let iso = IsothermSamples::new(points, a.temperature)?;
    let report = stability::compressibility_profile(&iso);
    let mut table = Table::new(&["z", "K_T", "ok"]);
    for r in &report.records {
        let ok = match r.second_law_ok() {
            Some(b) => Cell::from(b),
            None => Cell::Empty,
        };
        table.push(vec![r.z.into(), r.k_t.into(), ok]);
    }
    let n_viol = report
        .records
        .iter()
        .filter(|r| r.status == stability::PointStatus::Violation)
        .count();
    let n_indet = report
        .records
        .iter()
        .filter(|r| r.status == stability::PointStatus::Indeterminate)
        .count();
    let summary = json!({
        "points": report.records.len(),
        "violations": n_viol,
        "indeterminate": n_indet,
        "all_violating": report.all_violating(),
        "violation_intervals": report.violation_intervals,
    });
    let json = json!({
        "records": report.records,
        "summary": summary,
    });
    let pm =
        params(json!({ "input": a.input.display().to_string(), "temperature": a.temperature }));
    let mut rep = Report::new("stability", pm.clone(), table, json);
    rep.notes.push(format!(
        "summary: {}",
        crate::output::round_json(summary.clone())
    ));
    let mut out = Outcome::ok(rep, Format::Csv);
    if let Some(path) = &a.summary {
        let side = Report::new("stability", pm, Table::default(), summary);
        out.side_output = Some((path.clone(), side.render(Format::Json)));
    }
    Ok(out)
}

fn equilibrium_json(e: &driven::Equilibrium, model: &EffectiveModel) -> Value {
    json!({
        "classification": e.classification,
        "z": opt_num(e.z_si()),
        "ebar": opt_num(e.ebar_si()),
        "curvature": opt_num(e.curvature_si()),
        "slow_frequency": opt_num(e.slow_frequency(model.drive.mu)),
        "kapitza_coefficient": num(model.kapitza_coefficient * KAPITZA_CGS_TO_SI),
        "cgs": {
            "z": opt_num(e.z),
            "ebar": opt_num(e.ebar),
            "curvature": opt_num(e.curvature),
            "kapitza_coefficient": num(model.kapitza_coefficient),
        },
        "warnings": e.warnings,
    })
}

fn equilibrium_cmd(a: &EquilibriumArgs, consts: &PhysicalConstants) -> Result<Outcome, CliError> {
    let drive = DriveParams::from_si(a.u, a.u_ac, a.omega, a.mu)?;
    let model = EffectiveModel::new(drive, consts)?.with_terms(!a.no_casimir, !a.no_coulomb);
    let e = driven::find_equilibrium(
        &model,
        constants::length_si_to_cgs(a.z_lo),
        constants::length_si_to_cgs(a.z_hi),
        a.tol,
    )?;
    let mut table = Table::new(&["z", "ebar", "curvature", "classification"]);
    table.push(vec![
        e.z_si().into(),
        e.ebar_si().into(),
        e.curvature_si().into(),
        Cell::Text(classification_name(&e).into()),
    ]);
    let mut pm = params(json!({
        "u": a.u, "u_ac": a.u_ac, "omega": a.omega, "mu": a.mu,
        "casimir": !a.no_casimir, "coulomb": !a.no_coulomb,
        "z_lo": a.z_lo, "z_hi": a.z_hi, "tol": a.tol,
    }));
    pm.insert("constants".into(), constants_json(consts));
    let json = equilibrium_json(&e, &model);
    Ok(Outcome::ok(
        Report::new("equilibrium", pm, table, json),
        Format::Json,
    ))
}

fn classification_name(e: &driven::Equilibrium) -> &'static str {
    if e.is_stable() {
        "stable-minimum"
    } else {
        "none-found"
    }
}

fn sweep_cmd(a: &ConfigArgs, consts: &PhysicalConstants) -> Result<Outcome, CliError> {
    let cfg: SweepConfig = config::load(&a.config)?;
    if cfg.u.is_empty() || cfg.u_ac.is_empty() || cfg.omega.is_empty() {
        return Err(CliError::Config(
            "sweep axes u, u_ac and omega must be non-empty".into(),
        ));
    }
    if !(cfg.z_lo > 0.0 && cfg.z_lo < cfg.z_hi) {
        return Err(CliError::Config(format!(
            "need 0 < z_lo < z_hi, got {} and {}",
            cfg.z_lo, cfg.z_hi
        )));
    }
    let grid = SweepGrid {
        u: cfg
            .u
            .iter()
            .map(|&v| constants::volt_to_statvolt(v))
            .collect(),
        u_omega: cfg
            .u_ac
            .iter()
            .map(|&v| constants::volt_to_statvolt(v))
            .collect(),
        omega: cfg.omega.clone(),
    };
    let cells = driven::stability_map(
        &grid,
        constants::areal_mass_si_to_cgs(cfg.mu),
        (
            constants::length_si_to_cgs(cfg.z_lo),
            constants::length_si_to_cgs(cfg.z_hi),
        ),
        cfg.tol,
        consts,
        cfg.casimir,
        cfg.coulomb,
    );
    let mut si_axes = Vec::with_capacity(cells.len());
    for &u in &cfg.u {
        for &ua in &cfg.u_ac {
            for &w in &cfg.omega {
                si_axes.push((u, ua, w));
            }
        }
    }
    let mut table = Table::new(&["u", "u_ac", "omega", "Z", "curvature", "status"]);
    let mut rows = Vec::with_capacity(cells.len());
    for (&(u, ua, w), cell) in si_axes.iter().zip(&cells) {
        let (z, curv, msg) = match &cell.result {
            Ok(e) => (e.z_si(), e.curvature_si(), None),
            Err(m) => (None, None, Some(m.clone())),
        };
        table.push(vec![
            u.into(),
            ua.into(),
            w.into(),
            z.into(),
            curv.into(),
            cell.status().into(),
        ]);
        rows.push(json!({
            "u": u, "u_ac": ua, "omega": w,
            "Z": opt_num(z), "curvature": opt_num(curv),
            "status": cell.status(), "message": msg,
        }));
    }
    let mut pm = params(serde_json::to_value(&cfg).unwrap_or(Value::Null));
    pm.insert("constants".into(), constants_json(consts));
    Ok(Outcome::ok(
        Report::new("sweep", pm, table, Value::Array(rows)),
        Format::Csv,
    ))
}

fn simulate_cmd(a: &ConfigArgs, consts: &PhysicalConstants) -> Result<Outcome, CliError> {
    let cfg: SimulateConfig = config::load(&a.config)?;
    let drive = DriveParams::from_si(cfg.u, cfg.u_ac, cfg.omega, cfg.mu)?;
    let mut sim = SimulationConfig::new(drive, cfg.z0, cfg.t_end);
    sim.v0 = cfg.v0;
    sim.rel_tol = cfg.rel_tol;
    sim.abs_tol = cfg.abs_tol;
    sim.casimir_enabled = cfg.casimir;
    sim.coulomb_enabled = cfg.coulomb;
    sim.holding_pressure = cfg.holding_pressure;
    if let Some(dt) = cfg.sample_interval {
        sim.sample_interval = dt;
    }
    sim.collapse_floor = cfg.collapse_floor;
    let tr = dynamics::simulate(&sim, consts)?;

    let mut table = Table::new(&["t", "z", "v"]);
    for s in &tr.samples {
        table.push(vec![s.t.into(), s.z.into(), s.v.into()]);
    }
    let diag = serde_json::to_value(&tr.diagnostics).unwrap_or(Value::Null);
    let mut pm = params(serde_json::to_value(&cfg).unwrap_or(Value::Null));
    pm.insert("sample_interval".into(), num(sim.sample_interval));
    pm.insert("constants".into(), constants_json(consts));
    let json = json!({
        "termination": tr.termination,
        "diagnostics": diag,
        "samples": tr.samples,
    });
    let mut rep = Report::new("simulate", pm, table, json);
    rep.notes.push(format!(
        "termination: {}",
        serde_json::to_value(tr.termination).unwrap_or(Value::Null)
    ));
    rep.notes.push(format!(
        "diagnostics: {}",
        crate::output::round_json(diag.clone())
    ));
    let mut out = Outcome::ok(rep, Format::Csv);
    if tr.termination != Termination::Completed {
        let (kind, message) = match tr.termination {
            Termination::Collapse => (
                "collapse",
                format!(
                    "gap reached the collapse floor at t = {:e} s",
                    tr.diagnostics.t_final
                ),
            ),
            _ => (
                "step-failure",
                format!("integration stopped at t = {:e} s", tr.diagnostics.t_final),
            ),
        };
        out.failure = Some(CliError::Failed {
            kind,
            message,
            details: diag,
        });
    }
    Ok(out)
}

fn verify_cmd(a: &VerifyArgs) -> Result<Outcome, CliError> {
    let kinds: Vec<RegulatorKind> = match a.regulator {
        RegulatorChoice::Exp => vec![RegulatorKind::ExponentialCutoff],
        RegulatorChoice::Em => vec![RegulatorKind::ZetaEulerMaclaurin],
        RegulatorChoice::Both => vec![
            RegulatorKind::ExponentialCutoff,
            RegulatorKind::ZetaEulerMaclaurin,
        ],
    };
    let target = modesum::TARGET_COEFFICIENT;
    let mut table = Table::new(&[
        "regulator",
        "coefficient",
        "error_bar",
        "target",
        "relative_error",
        "pass",
    ]);
    let mut results = Vec::new();
    let mut all_pass = true;
    for kind in kinds {
        let spec = RegulatorSpec {
            kind,
            cutoff_scale: a.cutoff_scale,
            extrapolation_orders: a.orders,
            tolerance: a.tol,
        };
        let r = modesum::mode_sum_coefficient(&spec)?;
        let rel = r.relative_error_vs_target();
        let pass = rel <= a.tol;
        all_pass &= pass;
        let name = match kind {
            RegulatorKind::ExponentialCutoff => "exp",
            RegulatorKind::ZetaEulerMaclaurin => "em",
        };
        table.push(vec![
            name.into(),
            r.coefficient.into(),
            r.error_bar.into(),
            target.into(),
            rel.into(),
            pass.into(),
        ]);
        results.push((name, r, rel, pass));
    }
    let agree = if results.len() == 2 {
        let (a0, a1) = (&results[0].1, &results[1].1);
        let ok = (a0.coefficient - a1.coefficient).abs() <= a0.error_bar + a1.error_bar;
        all_pass &= ok;
        Some(ok)
    } else {
        None
    };
    let json = json!({
        "target": target,
        "results": results.iter().map(|(n, r, rel, pass)| json!({
            "regulator": n,
            "coefficient": r.coefficient,
            "error_bar": r.error_bar,
            "relative_error": rel,
            "pass": pass,
            "regulators": r.regulators,
            "raw_estimates": r.raw_estimates,
            "extrapolated": r.extrapolated,
        })).collect::<Vec<_>>(),
        "regulators_agree": agree,
        "pass": all_pass,
    });
    let pm = params(json!({
        "regulator": format!("{:?}", a.regulator).to_lowercase(),
        "tol": a.tol, "cutoff_scale": a.cutoff_scale, "orders": a.orders,
    }));
    let mut rep = Report::new("verify-casimir", pm, table, json);
    if let Some(ok) = agree {
        rep.notes
            .push(format!("regulators agree within error bars: {ok}"));
    }
    rep.notes.push(format!("pass: {all_pass}"));
    let mut out = Outcome::ok(rep, Format::Csv);
    if !all_pass {
        out.failure = Some(CliError::Failed {
            kind: "verification-failed",
            message: "mode-sum coefficient outside tolerance or regulators disagree".into(),
            details: Value::Null,
        });
    }
    Ok(out)
}

fn measure_cmd(a: &ConfigArgs, consts: &PhysicalConstants) -> Result<Outcome, CliError> {
    let cfg: MeasureConfig = config::load(&a.config)?;
    let drive = DriveParams::from_si(cfg.u, cfg.u_ac, cfg.omega, cfg.mu)?;
    let mc = dynamics::MeasureConfig {
        rel_tol: cfg.rel_tol,
        abs_tol: cfg.abs_tol,
        casimir_enabled: cfg.casimir,
        coulomb_enabled: cfg.coulomb,
        ..Default::default()
    };
    let gaps: Vec<f64> = cfg
        .probe_gaps
        .iter()
        .map(|&z| constants::length_si_to_cgs(z))
        .collect();
    let m = dynamics::measure_kapitza_coefficient(&drive, &gaps, &mc, consts)?;

    let mut table = Table::new(&[
        "z",
        "omega_ratio",
        "mean_force",
        "static_force",
        "residual_force",
        "k_local",
    ]);
    let mut probes = Vec::new();
    for p in &m.probes {
        let z = constants::length_cgs_to_si(p.mean_gap);
        let f = constants::pressure_cgs_to_si;
        table.push(vec![
            z.into(),
            p.omega_ratio.into(),
            f(p.mean_force).into(),
            f(p.static_force).into(),
            f(p.residual_force).into(),
            (p.k_local * KAPITZA_CGS_TO_SI).into(),
        ]);
        probes.push(json!({
            "z": z,
            "omega_ratio": p.omega_ratio,
            "holding_pressure": f(p.holding),
            "mean_force": f(p.mean_force),
            "static_force": f(p.static_force),
            "residual_force": f(p.residual_force),
            "k_local": p.k_local * KAPITZA_CGS_TO_SI,
        }));
    }
    let json = json!({
        "K_fit": m.k_fit * KAPITZA_CGS_TO_SI,
        "K_eq35": m.k_eq35 * KAPITZA_CGS_TO_SI,
        "ratio": opt_num(m.ratio),
        "residual": m.residual,
        "exponent": opt_num(m.exponent),
        "spread": m.spread,
        "cgs": { "K_fit": m.k_fit, "K_eq35": m.k_eq35 },
        "probes": probes,
    });
    let mut pm = params(serde_json::to_value(&cfg).unwrap_or(Value::Null));
    pm.insert("constants".into(), constants_json(consts));
    let mut rep = Report::new("measure-k", pm, table, json);
    rep.notes.push(format!(
        "K_fit = {} J m^2, K_eq35 = {} J m^2, ratio = {}, exponent = {}, residual = {}",
        crate::output::fmt_num(m.k_fit * KAPITZA_CGS_TO_SI),
        crate::output::fmt_num(m.k_eq35 * KAPITZA_CGS_TO_SI),
        m.ratio.map_or("n/a".into(), crate::output::fmt_num),
        m.exponent.map_or("n/a".into(), crate::output::fmt_num),
        crate::output::fmt_num(m.residual),
    ));
    Ok(Outcome::ok(rep, Format::Json))
}
