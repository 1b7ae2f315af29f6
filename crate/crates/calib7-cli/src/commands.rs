use std::io::Write;
use std::path::Path;

use calib7::cr::{
    coassociativity_residual, cr_residual, gamma_construction, ruling_ideal_residual, Fourfold,
};
use calib7::families::{
    binormal_fixture, default_intervals, fiber_fixture, hl_implicit_residual, n2_plane_lift, random_lift,
    round_bundle_map, round_s2_conformal_lift, round_s2_frame_field, surface_bundle, verification_framing,
    BundlePiece, ProfileCurve, RoundS2, RoundS2Grid, ASYMPTOTE_SLOPE,
};
use calib7::forms::phi_eval;
use calib7::g2::{CurveLift, FdOrder, G2Frame};
use calib7::invariants::{covariant_holomorphy_residual, extract_ab, holomorphy_residual, invariants_of, DZ_FIT_TOL};
use calib7::{basis, Report};
use serde_json::{json, Value};

use crate::config::{Cli, Command, Family, Format, RunConfig};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_PRECONDITION: u8 = 3;

#[derive(Debug)]
pub struct CmdError {
    pub code: u8,
    pub message: String,
}

impl CmdError {
    fn input(message: impl Into<String>) -> Self {
        CmdError { code: EXIT_INPUT, message: message.into() }
    }

    fn precondition(message: impl Into<String>) -> Self {
        CmdError { code: EXIT_PRECONDITION, message: message.into() }
    }
}

impl From<calib7::Error> for CmdError {
    fn from(e: calib7::Error) -> Self {
        let code = if e.is_precondition() { EXIT_PRECONDITION } else { EXIT_INPUT };
        CmdError { code, message: e.to_string() }
    }
}

type CmdResult<T> = Result<T, CmdError>;

pub fn run(cli: &Cli) -> CmdResult<u8> {
    let (name, cfg) = match &cli.command {
        Command::Verify(c) => ("verify", c),
        Command::Invariants(c) => ("invariants", c),
        Command::Profile(c) => ("profile", c),
        Command::Export(c) => ("export", c),
    };
    cfg.validate().map_err(CmdError::input)?;
    match name {
        "verify" => cmd_verify(cfg),
        "invariants" => cmd_invariants(cfg),
        "profile" => cmd_profile(cfg),
        _ => cmd_export(cfg),
    }
}

fn emit(cfg: &RunConfig, text: &str) -> CmdResult<()> {
    match &cfg.out {
        Some(p) => std::fs::write(p, text).map_err(|e| CmdError::input(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| CmdError::input(e.to_string()))
        }
    }
}

fn provenance(cfg: &RunConfig, tol: f64) -> Value {
    json!({
        "seed": cfg.seed,
        "version": calib7::VERSION,
        "family": cfg.family.map(|f| format!("{f:?}").to_lowercase()),
        "input": cfg.input.as_ref().map(|p| p.display().to_string()),
        "k": cfg.k,
        "grid": cfg.grid,
        "t_range": cfg.t_range,
        "tol": tol,
        "fd_step": cfg.fd_step,
    })
}

fn read_lift(path: &Path) -> CmdResult<CurveLift> {
    CurveLift::read(path).map_err(|e| match e {
        calib7::Error::Io(io) => CmdError::input(format!("cannot read {}: {io}", path.display())),
        other => CmdError::input(format!("invalid lift {}: {other}", path.display())),
    })
}

fn fixture_lift(cfg: &RunConfig, family: Family) -> CmdResult<CurveLift> {
    Ok(match family {
        Family::Fiber => fiber_fixture()?,
        Family::Binormal => binormal_fixture()?.lift,
        Family::RoundS2 => round_s2_conformal_lift(cfg.grid.unwrap_or([11, 11]), [0.0, -0.3], 0.02, FdOrder::Fourth)?,
        Family::Random => random_lift(cfg.seed, cfg.grid.unwrap_or([9, 9]), cfg.fd_step.unwrap_or(0.05), FdOrder::Fourth),
        Family::TPlane => t_plane_lift(cfg.grid.unwrap_or([9, 9]))?,
        Family::Hl | Family::Bundle => {
            return Err(CmdError::input("this family is a 4-fold, not a lift; use `verify --family`"))
        }
    })
}

/// Planes `e1 ^ e2` of `exp(x A) exp(y B)` for the block diagonal round generators: they
/// stay inside the coassociative plane `x5 = x6 = x7 = 0`.
fn t_plane_lift(grid: [usize; 2]) -> CmdResult<CurveLift> {
    Ok(round_s2_frame_field(grid, [-0.2, -0.2], 0.05, FdOrder::Fourth)?)
}

fn source_lift(cfg: &RunConfig) -> CmdResult<CurveLift> {
    match (&cfg.input, cfg.family) {
        (Some(p), _) => read_lift(p),
        (None, Some(f)) => fixture_lift(cfg, f),
        (None, None) => Err(CmdError::input("give --family or --input")),
    }
}

fn finish(cfg: &RunConfig, command: &str, reports: Vec<Report>, tol: f64) -> CmdResult<u8> {
    let passed = !reports.is_empty() && reports.iter().all(|r| r.passed);
    let doc = json!({
        "command": command,
        "passed": passed,
        "reports": reports,
        "provenance": provenance(cfg, tol),
    });
    emit(cfg, &(serde_json::to_string_pretty(&doc).expect("serializable") + "\n"))?;
    Ok(if passed { EXIT_PASS } else { EXIT_FAIL })
}

const R_GRID: [(f64, f64); 4] = [(1.0, 0.0), (0.0, 1.0), (0.6, 0.8), (-1.5, 0.7)];

fn lift_checks(lift: &CurveLift, tol: Option<f64>) -> CmdResult<Vec<Report>> {
    if lift.dim() == 1 {
        return Ok(vec![lift.maurer_cartan_report(tol.unwrap_or(1e-5))]);
    }
    let t = tol.unwrap_or(1e-5);
    let gamma = gamma_construction(lift, &R_GRID)?;
    Ok(vec![cr_residual(lift, t)?, ruling_ideal_residual(lift, t)?, coassociativity_residual(&gamma, t)])
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1).max(1) as f64).collect()
}

fn angles(n: usize) -> Vec<f64> {
    (0..n).map(|i| std::f64::consts::TAU * i as f64 / n as f64).collect()
}

fn t_samples(cfg: &RunConfig, n: usize) -> Vec<f64> {
    match cfg.t_range {
        Some((a, b)) => linspace(a, b, n),
        None => default_intervals()
            .iter()
            .flat_map(|&(a, b)| linspace(a.max(0.2), b.min(4.0) - 0.05 * (b.min(4.0) - a.max(0.2)), n / 2))
            .collect(),
    }
}

fn verify_hl(cfg: &RunConfig) -> CmdResult<Vec<Report>> {
    let k = cfg.k.unwrap_or(1.0);
    if k <= 0.0 {
        return Err(CmdError::precondition("the hl family needs k > 0 (use --family bundle for k = 0)"));
    }
    let [n, m] = cfg.grid.unwrap_or([8, 8]);
    let base = RoundS2Grid::centered(n, m, 1.5, 1.2);
    let ts = t_samples(cfg, 8);
    let angs = angles(8);
    let bundle = surface_bundle(&base, k, &ts, &angs)?;
    let tol = cfg.tol.unwrap_or(1e-8);
    let mut reports = Vec::new();
    for c in &bundle.components {
        let mut r = coassociativity_residual(&c.fourfold, tol);
        r.check = format!("coassociativity-analytic-{:?}", c.piece).to_lowercase();
        reports.push(r);
        let vals: Vec<f64> = c.fourfold.samples.iter().map(|s| hl_implicit_residual(&s.point, k).abs()).collect();
        let mut r = Report::from_values("implicit-equation", tol, &vals, 0);
        r.check = format!("implicit-equation-{:?}", c.piece).to_lowercase();
        reports.push(r);
    }
    let h = cfg.fd_step.unwrap_or(1e-5);
    let fd = Fourfold::from_map(["sigma1", "sigma2", "t", "angle"], &[base.alphas, base.betas, ts, angs], h, |p| {
        round_bundle_map(k, p).expect("admissible t")
    });
    let mut r = coassociativity_residual(&fd, 1e-5_f64.max(cfg.tol.unwrap_or(0.0)));
    r.check = "coassociativity-fd".into();
    reports.push(r);
    Ok(reports)
}

fn verify_bundle(cfg: &RunConfig) -> CmdResult<Vec<Report>> {
    let k = cfg.k.unwrap_or(1.0);
    let [n, m] = cfg.grid.unwrap_or([8, 8]);
    let base = RoundS2Grid::centered(n, m, 1.5, 1.2);
    let angs = angles(8);
    let mut reports = Vec::new();
    if k > 0.0 {
        let ts = t_samples(cfg, 10);
        let tol = cfg.tol.unwrap_or(1e-10);
        let mut vals = Vec::new();
        for &a in &base.alphas {
            for &b in &base.betas {
                let f = G2Frame::new(RoundS2.frame(a, b))?;
                for &t in &ts {
                    for &ang in &angs {
                        let h = verification_framing(&f, t, ang)?;
                        for (i, j, l) in [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)] {
                            vals.push(phi_eval(&h[i], &h[j], &h[l]).abs());
                        }
                    }
                }
            }
        }
        reports.push(Report::from_values("framing-phi", tol, &vals, 0));
        let bundle = surface_bundle(&base, k, &ts, &angs)?;
        for c in &bundle.components {
            let mut r = coassociativity_residual(&c.fourfold, cfg.tol.unwrap_or(1e-8));
            r.check = format!("coassociativity-{:?}", c.piece).to_lowercase();
            reports.push(r);
        }
    } else {
        let ss = match cfg.t_range {
            Some((a, b)) => linspace(a, b, 6),
            None => linspace(0.25, 2.0, 6),
        };
        let bundle = surface_bundle(&base, 0.0, &ss, &angs)?;
        let tol = cfg.tol.unwrap_or(1e-10);
        for c in &bundle.components {
            if c.piece == BundlePiece::Cone {
                let vals: Vec<f64> = c.cylindrical.iter().map(|[w, z]| (w - ASYMPTOTE_SLOPE * z).abs()).collect();
                reports.push(Report::from_values("cone-relation", tol, &vals, 0));
            }
            let mut r = coassociativity_residual(&c.fourfold, cfg.tol.unwrap_or(1e-8));
            r.check = format!("coassociativity-{:?}", c.piece).to_lowercase();
            reports.push(r);
        }
        let lift = round_s2_frame_field([n.max(5), m.max(5)], [-0.3, -0.3], 0.02, FdOrder::Fourth)?;
        let mut r = ruling_ideal_residual(&n2_plane_lift(&lift)?, cfg.tol.unwrap_or(1e-5))?;
        r.check = "ruling-ideal-plane-piece".into();
        reports.push(r);
    }
    Ok(reports)
}

fn verify_t_plane(cfg: &RunConfig) -> CmdResult<Vec<Report>> {
    let g = linspace(-1.0, 1.0, 4);
    let m = Fourfold::from_analytic(["x1", "x2", "x3", "x4"], &[g.clone(), g.clone(), g.clone(), g], |p| {
        let mut x = calib7::Vector7::zeros();
        x.rows_mut(0, 4).copy_from_slice(&p);
        (x, [basis(1), basis(2), basis(3), basis(4)])
    });
    let tol = cfg.tol.unwrap_or(1e-12);
    let mut plane = coassociativity_residual(&m, tol);
    plane.check = "coassociativity-t-plane".into();
    let lift = t_plane_lift(cfg.grid.unwrap_or([9, 9]))?;
    let mut ruled = coassociativity_residual(&gamma_construction(&lift, &R_GRID)?, cfg.tol.unwrap_or(1e-10));
    ruled.check = "coassociativity-rotating-planes".into();
    Ok(vec![plane, ruled])
}

pub fn cmd_verify(cfg: &RunConfig) -> CmdResult<u8> {
    if matches!(cfg.format, Some(Format::Csv | Format::Svg)) {
        return Err(CmdError::input("verify writes JSON reports only"));
    }
    let reports = match (cfg.family, &cfg.input) {
        (Some(Family::Hl), None) => verify_hl(cfg)?,
        (Some(Family::Bundle), None) => verify_bundle(cfg)?,
        (Some(Family::TPlane), None) => verify_t_plane(cfg)?,
        _ => lift_checks(&source_lift(cfg)?, cfg.tol)?,
    };
    finish(cfg, "verify", reports, cfg.tol.unwrap_or(f64::NAN))
}

pub fn cmd_invariants(cfg: &RunConfig) -> CmdResult<u8> {
    let lift = source_lift(cfg)?;
    if lift.dim() != 2 {
        return Err(CmdError::precondition("invariants need a 2D lift"));
    }
    let tol = cfg.tol.unwrap_or(1e-6);
    let cr = cr_residual(&lift, tol)?;
    if !cr.passed {
        return Err(CmdError::precondition(format!(
            "input is not CR-holomorphic: cr residual {:.3e} exceeds {tol:.1e}",
            cr.max()
        )));
    }
    let ab = extract_ab(&lift, DZ_FIT_TOL)?;
    let inv = invariants_of(&ab);
    let plain = holomorphy_residual(&ab).map_err(CmdError::from);
    let cov = covariant_holomorphy_residual(&ab).map_err(CmdError::from);
    let text = match cfg.format.unwrap_or(Format::Json) {
        Format::Csv => {
            let mut s = String::from("i,j,a,b,rho_abs\n");
            for (n, v) in ab.source_nodes.iter().zip(&inv.nodes) {
                s.push_str(&format!("{},{},{:.17e},{:.17e},{:.17e}\n", n[0], n[1], v.a, v.b, v.rho_abs));
            }
            s
        }
        Format::Json => {
            let nodes: Vec<Value> = ab
                .source_nodes
                .iter()
                .zip(&inv.nodes)
                .map(|(n, v)| json!({"node": n, "a": v.a, "b": v.b, "rho_abs": v.rho_abs}))
                .collect();
            let doc = json!({
                "command": "invariants",
                "classification": inv.classification,
                "a_max": inv.a_max,
                "b_max": inv.b_max,
                "rho_max": inv.rho_max,
                "threshold": {"tau": inv.tau, "tau_rel": inv.tau_rel},
                "orientation": ab.orientation,
                "cr_fit_residual": ab.cr_fit_residual,
                "cr_residual": cr.max(),
                "holomorphy": {
                    "plain": plain.as_ref().ok(),
                    "covariant": cov.as_ref().ok(),
                    "error": plain.as_ref().err().map(|e| e.message.clone()),
                },
                "nodes": nodes,
                "provenance": provenance(cfg, tol),
            });
            serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
        }
        Format::Svg => return Err(CmdError::input("invariants writes JSON or CSV")),
    };
    emit(cfg, &text)?;
    Ok(EXIT_PASS)
}

pub fn cmd_profile(cfg: &RunConfig) -> CmdResult<u8> {
    let k = cfg.k.unwrap_or(1.0);
    let n = cfg.grid.map(|g| g[0]).unwrap_or(500);
    let intervals = match cfg.t_range {
        Some(r) => vec![r],
        None => default_intervals(),
    };
    let curve = ProfileCurve::sample(k, &intervals, n)?;
    let text = match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut buf = Vec::new();
            curve.write_csv(&mut buf)?;
            String::from_utf8(buf).expect("ascii")
        }
        Format::Svg => curve.to_svg(),
        Format::Json => serde_json::to_string_pretty(&curve).expect("serializable") + "\n",
    };
    emit(cfg, &text)?;
    Ok(EXIT_PASS)
}

pub fn cmd_export(cfg: &RunConfig) -> CmdResult<u8> {
    let family = cfg.family.ok_or_else(|| CmdError::input("export needs --family"))?;
    let lift = fixture_lift(cfg, family)?;
    let text = serde_json::to_string(&lift.to_json()).expect("serializable") + "\n";
    emit(cfg, &text)?;
    Ok(EXIT_PASS)
}
