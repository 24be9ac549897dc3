use serde::Serialize;

use super::config::{cartesian_with, expr, required, RunConfig, SeedSpec};
use super::{CliError, CommandKind};
use crate::coords::{Chart2D, Chart3D, CoordError};
use crate::expr::Expr;
use crate::hierarchy::{build_hierarchy, embed_2d, HierarchyError, Seed};
use crate::integrability::{check_n4, check_n5, check_pfaffian_conditions, preset_table1, ConstraintReport};
use crate::numerics::{
    intertwining_convergence, partner_spectrum_check, separated_2d_solve, solve_values, symmetry_convergence,
    Convergence, NumericsError, SeparatedSpec,
};
use crate::output::csv_row;
use crate::potentials::{
    build_1d_pair, build_2d_pair, build_3d_pair, build_constant_shift, build_general_pair, build_translational,
    free_motion_partners_2d, free_motion_partners_3d, halton_point, IdentityResiduals, PotentialError, PotentialPair,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

/// Result of a command: the pass flag selects exit code 0 or 2.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub passed: bool,
    /// JSON printed on stdout
    pub summary: String,
    pub files: Vec<OutputFile>,
}

impl Outcome {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|f| f.name == name).map(|f| f.contents.as_str())
    }
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn file(name: &str, contents: String) -> OutputFile {
    OutputFile {
        name: name.into(),
        contents,
    }
}

fn potential_err(e: PotentialError) -> CliError {
    match e {
        PotentialError::NotIntegrable(_) => CliError::Compute(e.to_string()),
        other => CliError::Config(other.to_string()),
    }
}

fn numerics_err(e: NumericsError) -> CliError {
    match e {
        NumericsError::Invalid(_) | NumericsError::Expr(_) => CliError::Config(e.to_string()),
        other => CliError::Compute(other.to_string()),
    }
}

fn hierarchy_err(e: HierarchyError) -> CliError {
    match e {
        HierarchyError::Invalid(_) | HierarchyError::Expr(_) => CliError::Config(e.to_string()),
        other => CliError::Compute(other.to_string()),
    }
}

pub fn execute(kind: CommandKind, cfg: &RunConfig) -> Result<Outcome, CliError> {
    match kind {
        CommandKind::Validate => cmd_validate(cfg),
        CommandKind::Construct => cmd_construct(cfg),
        CommandKind::Verify => cmd_verify(cfg),
        CommandKind::Spectrum => cmd_spectrum(cfg),
        CommandKind::Hierarchy => cmd_hierarchy(cfg),
        CommandKind::ConvertCoords => cmd_convert_coords(cfg),
        CommandKind::Presets => cmd_presets(cfg),
    }
}

fn validation_report(params: &crate::euclid::IntertwinerParams) -> ConstraintReport {
    let special = match params.n() {
        4 => check_n4(params).ok(),
        5 => check_n5(params).ok(),
        _ => None,
    };
    special.unwrap_or_else(|| check_pfaffian_conditions(params))
}

fn cmd_validate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let params = cfg.params()?;
    #[derive(Serialize)]
    struct Out<'a> {
        params: &'a crate::euclid::IntertwinerParams,
        report: ConstraintReport,
    }
    let report = validation_report(&params);
    let passed = report.all_satisfied;
    if !passed {
        log::warn!("constraints violated: {}", report.failed().join(", "));
    }
    let text = json(&Out { params: &params, report });
    Ok(Outcome {
        passed,
        files: vec![file("validate.json", text.clone())],
        summary: text,
    })
}

fn cmd_presets(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let rows: Vec<usize> = match cfg.preset {
        Some(r) => vec![r],
        None => (1..=10).collect(),
    };
    #[derive(Serialize)]
    struct Row {
        preset: crate::integrability::Preset,
        report: ConstraintReport,
    }
    let mut out = Vec::new();
    let mut csv = String::from("row,constraints,eta,a1,a2,a3,c1,c2,c3,passed\n");
    for r in rows {
        let preset = preset_table1(r).map_err(|e| CliError::Config(e.to_string()))?;
        let report = check_pfaffian_conditions(&preset.params);
        let p = &preset.params;
        let cv = p.c_vector().expect("presets are 3D");
        csv.push_str(&format!(
            "{},\"{}\",{},{},{},{}\n",
            r,
            preset.constraints,
            preset.eta.polynomial_name(),
            csv_row(p.a()),
            csv_row(&cv),
            report.all_satisfied
        ));
        out.push(Row { preset, report });
    }
    let passed = out.iter().all(|r| r.report.all_satisfied);
    let text = json(&out);
    Ok(Outcome {
        passed,
        files: vec![file("presets.json", text.clone()), file("presets.csv", csv)],
        summary: text,
    })
}

fn family(cfg: &RunConfig) -> Result<String, CliError> {
    if let Some(f) = &cfg.family {
        return Ok(f.clone());
    }
    let n = match (cfg.preset, cfg.n, &cfg.a) {
        (Some(_), _, _) => 3,
        (None, Some(n), _) => n,
        (None, None, Some(a)) => a.len(),
        _ => return Err(CliError::Config("missing family (or n, a, c to infer it)".into())),
    };
    Ok(match n {
        2 => "2d".into(),
        3 => "3d".into(),
        _ => "general".into(),
    })
}

fn opt_expr(field: &str, src: &Option<String>, vars: &[&str]) -> Result<Expr, CliError> {
    match src {
        Some(s) => expr(field, s, vars),
        None => Ok(Expr::constant(0.0)),
    }
}

fn strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

/// Builds the pair selected by `family`, shifted by `corrupt` if set.
pub(crate) fn build_pair(cfg: &RunConfig) -> Result<PotentialPair, CliError> {
    let fam = family(cfg)?;
    let pair = match fam.as_str() {
        "1d" => {
            let l0 = expr("f", required(&cfg.f, "f (L0 in x)")?, &["x"])?;
            build_1d_pair(&l0, cfg.b_scalar()?)
        }
        "translational" | "constant-shift" => {
            let a = cfg.a.clone().ok_or_else(|| CliError::Config("missing a".into()))?;
            let n = a.len();
            let extra: Vec<String> = (1..n).map(|k| format!("s{k}")).collect();
            let gvars = cartesian_with(n, &strs(&extra));
            let g = opt_expr("g", &cfg.g, &strs(&gvars))?;
            if fam == "translational" {
                let f = expr("f", required(&cfg.f, "f (in zeta)")?, &["zeta"])?;
                build_translational(&a, &f, &g)
            } else {
                let p0 = cfg.p0.ok_or_else(|| CliError::Config("missing p0".into()))?;
                let b = cfg.b.as_ref().map_or(vec![0.0; n], |b| b.to_vec());
                build_constant_shift(&a, p0, &b, &g)
            }
        }
        "2d" => {
            let (a1, a2, c) = cfg.planar()?;
            let f = opt_expr("f", &cfg.f, &["eta"])?;
            let h = opt_expr("h", &cfg.h, &["kappa"])?;
            build_2d_pair(a1, a2, c, &f, &h)
        }
        "free-motion-2d" => {
            let (a1, a2, c) = cfg.planar()?;
            free_motion_partners_2d(cfg.b_scalar()?, cfg.b1(), c, a1, a2)
        }
        "general" => {
            let params = cfg.params()?;
            let [i, j] = cfg.pair.ok_or_else(|| CliError::Config("missing pair i,j".into()))?;
            if i == 0 || j == 0 {
                return Err(CliError::Config("pair indices are 1-based".into()));
            }
            let f = opt_expr("f", &cfg.f, &["eta"])?;
            let hv = cartesian_with(params.n(), &["Lsq"]);
            let h = opt_expr("h", &cfg.h, &strs(&hv))?;
            build_general_pair(&params, (i - 1, j - 1), &f, &h)
        }
        "3d" => {
            let params = cfg.params()?;
            let f = opt_expr("f", &cfg.f, &["eta"])?;
            let h = opt_expr("h", &cfg.h, &["beta", "gamma"])?;
            build_3d_pair(&params, &f, &h, cfg.eta_variant())
        }
        "free-motion-3d" => {
            let params = cfg.params()?;
            let kind = cfg.kind.unwrap_or(2).try_into().map_err(potential_err)?;
            free_motion_partners_3d(&params, kind, cfg.b1(), cfg.eta_variant())
        }
        "embed-2d" => return embedded_pair(cfg),
        other => return Err(CliError::Config(format!("unknown family {other:?}"))),
    }
    .map_err(potential_err)?;
    match cfg.corrupt {
        Some(s) => pair.corrupted(s).map_err(potential_err),
        None => Ok(pair),
    }
}

fn embedded_pair(cfg: &RunConfig) -> Result<PotentialPair, CliError> {
    let calv = expr("V", required(&cfg.calv, "V")?, &["xi"])?;
    let calh = opt_expr("H", &cfg.calh, &["rho"])?;
    let phi = expr("phi", required(&cfg.phi, "phi")?, &["xi"])?;
    let e_n = cfg.energy.ok_or_else(|| CliError::Config("missing energy".into()))?;
    let c = match &cfg.c {
        Some(super::CSpec::Num(c)) => *c,
        _ => return Err(CliError::Config("embedding needs a scalar c".into())),
    };
    let a = match cfg.a.as_deref() {
        None => [0.0, 1.0],
        Some([a1, a2]) => [*a1, *a2],
        Some(v) => return Err(CliError::Config(format!("a must have 2 entries, got {}", v.len()))),
    };
    let pair = embed_2d(&calv, &calh, e_n, &phi, c, a).map_err(hierarchy_err)?;
    match cfg.corrupt {
        Some(s) => pair.corrupted(s).map_err(potential_err),
        None => Ok(pair),
    }
}

#[derive(Debug, Serialize)]
struct PairDescription<'a> {
    metadata: &'a crate::potentials::PairMetadata,
    v0: String,
    v1: String,
    l0: String,
    p: String,
    guards: Vec<&'a str>,
}

fn describe(pair: &PotentialPair) -> PairDescription<'_> {
    PairDescription {
        metadata: &pair.meta,
        v0: pair.v0_expr.to_string(),
        v1: pair.v1_expr.to_string(),
        l0: pair.l0_expr.to_string(),
        p: pair.p_expr.to_string(),
        guards: pair.guards.iter().map(|g| g.label.as_str()).collect(),
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn clean_label(s: &str) -> String {
    s.replace([',', '"', '\n'], ";")
}

fn cmd_construct(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let pair = build_pair(cfg)?;
    let n = pair.n();
    let (lo, hi, count) = cfg.sample_box(n)?;
    let axes: Vec<Vec<f64>> = (0..n).map(|k| linspace(lo[k], hi[k], count)).collect();
    let mut csv = pair.var_names().join(",");
    csv.push_str(",V0,V1,L0,singular\n");
    let total = count.pow(n as u32);
    let mut singular_rows = 0;
    for flat in 0..total {
        let mut rem = flat;
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            x[k] = axes[k][rem % count];
            rem /= count;
        }
        let vals = [pair.v0.eval(&x), pair.v1.eval(&x), pair.l0.eval(&x)];
        let label = pair.singular_at(&x).or_else(|| {
            vals.iter()
                .find_map(|v| v.as_ref().err().map(|e| e.to_string()))
        });
        csv.push_str(&csv_row(&x));
        match label {
            Some(l) => {
                singular_rows += 1;
                csv.push_str(&format!(",,,,{}\n", clean_label(&l)));
            }
            None => {
                let v: Vec<f64> = vals.into_iter().map(|v| v.expect("checked")).collect();
                csv.push_str(&format!(",{},\n", csv_row(&v)));
            }
        }
    }
    if singular_rows > 0 {
        log::warn!("{singular_rows} of {total} sample points are singular");
    }
    let text = json(&describe(&pair));
    Ok(Outcome {
        passed: true,
        files: vec![file("pair.json", text.clone()), file("samples.csv", csv)],
        summary: text,
    })
}

#[derive(Debug, Clone, Serialize)]
pub(crate) struct VerifyReport {
    family: String,
    n: usize,
    center: Vec<f64>,
    width: f64,
    sigma: f64,
    identity_points: usize,
    identities: IdentityResiduals,
    identities_pass: bool,
    intertwining: Convergence,
    #[serde(skip_serializing_if = "Option::is_none")]
    symmetry: Option<Convergence>,
    min_order: f64,
    passed: bool,
}

fn default_cells(n: usize) -> Vec<usize> {
    match n {
        1 => vec![32, 64, 128, 256],
        2 => vec![16, 32, 64, 128],
        3 => vec![8, 16, 32, 64],
        _ => vec![4, 8, 16],
    }
}

/// A regular point with a comfortable guard margin: the origin if it has
/// one, else the best of a fixed quasi-random set in `[-3, 3]^n`.
fn auto_center(pair: &PotentialPair) -> Vec<f64> {
    let n = pair.n();
    let score = |x: &[f64]| {
        if pair.v0.eval(x).is_err() || pair.v1.eval(x).is_err() {
            return f64::NEG_INFINITY;
        }
        pair.guard_distance(x).min(4.0)
    };
    let mut best = vec![0.0; n];
    let mut best_score = score(&best);
    for i in 1..=256 {
        let x = halton_point(i, n, -3.0, 3.0);
        let s = score(&x);
        if s > best_score {
            best = x;
            best_score = s;
        }
    }
    best
}

/// Worst residual at least this small counts as exact (no order to fit).
const EXACT_RESIDUAL: f64 = 1e-10;

fn converged(c: &Convergence, min_order: f64) -> bool {
    c.passes(min_order) || c.residuals.iter().all(|r| *r <= EXACT_RESIDUAL)
}

pub(crate) fn verify_pair(pair: &PotentialPair, cfg: &RunConfig) -> Result<VerifyReport, CliError> {
    let n = pair.n();
    let count = cfg.samples.unwrap_or(20);
    let points = pair.sample_regular_points(count, cfg.seed(), -2.0, 2.0, 0.05);
    if points.len() < count {
        return Err(CliError::Compute(format!(
            "found only {} of {count} regular sample points",
            points.len()
        )));
    }
    let identities = pair
        .checker()
        .and_then(|c| c.max_over(&points))
        .map_err(|e| CliError::Compute(e.to_string()))?;
    let tol = cfg.tolerance();
    // a constant shift of V1 only shows in the P = V1 − V0 split
    let identities_pass =
        identities.eq11 <= tol && identities.eq14 <= tol && identities.eq15 <= tol && identities.p_split <= tol;
    let center = match &cfg.center {
        Some(c) if c.len() == n => c.clone(),
        Some(c) => return Err(CliError::Config(format!("center has {} entries, n = {n}", c.len()))),
        None => auto_center(pair),
    };
    let width = cfg.width.unwrap_or(0.5);
    let sigma = cfg.sigma.unwrap_or(0.4);
    let cells = cfg.cells.clone().unwrap_or_else(|| default_cells(n));
    if cells.len() < 2 {
        return Err(CliError::Config("cells needs at least two refinements".into()));
    }
    let hint = |e: NumericsError| match e {
        NumericsError::SingularRegion(m) => CliError::Compute(format!("{m}; choose another center or width")),
        other => numerics_err(other),
    };
    let intertwining = intertwining_convergence(pair, &center, sigma, width, &cells).map_err(hint)?;
    let symmetry = if cfg.symmetry.unwrap_or(n <= 2) {
        Some(symmetry_convergence(pair, &center, sigma, width, &cells).map_err(hint)?)
    } else {
        None
    };
    let min_order = cfg.min_order();
    let passed = identities_pass
        && converged(&intertwining, min_order)
        && symmetry.as_ref().is_none_or(|s| converged(s, min_order));
    Ok(VerifyReport {
        family: pair.meta.family.clone(),
        n,
        center,
        width,
        sigma,
        identity_points: points.len(),
        identities,
        identities_pass,
        intertwining,
        symmetry,
        min_order,
        passed,
    })
}

fn convergence_csv(rows: &[(&str, &Convergence)]) -> String {
    let mut s = String::from("study,cells,spacing,residual\n");
    for (name, c) in rows {
        for i in 0..c.cells.len() {
            s.push_str(&format!("{name},{},{}\n", c.cells[i], csv_row(&[c.spacing[i], c.residuals[i]])));
        }
    }
    s
}

fn cmd_verify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    if let Some(sweep) = &cfg.sweep {
        return verify_sweep(cfg, sweep);
    }
    let pair = build_pair(cfg)?;
    let report = verify_pair(&pair, cfg)?;
    let mut rows = vec![("intertwining", &report.intertwining)];
    if let Some(s) = &report.symmetry {
        rows.push(("symmetry", s));
    }
    let csv = convergence_csv(&rows);
    let text = json(&report);
    Ok(Outcome {
        passed: report.passed,
        files: vec![file("verify.json", text.clone()), file("convergence.csv", csv)],
        summary: text,
    })
}

#[derive(Debug, Serialize)]
struct SweepRow {
    b: f64,
    b1: f64,
    passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<VerifyReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

/// Verifies one free-motion partner per `(b, b1)`; the combinations run on
/// independent worker threads and are reported in input order.
fn verify_sweep(cfg: &RunConfig, sweep: &super::SweepSpec) -> Result<Outcome, CliError> {
    let fam = family(cfg)?;
    if fam != "free-motion-2d" && fam != "free-motion-3d" {
        return Err(CliError::Config(format!("sweeps apply to free-motion families, not {fam:?}")));
    }
    if fam == "free-motion-3d" && !sweep.b.is_empty() {
        return Err(CliError::Config("free-motion-3d has no b; sweep b1 only".into()));
    }
    let bs = if sweep.b.is_empty() { vec![cfg.b_scalar()?] } else { sweep.b.clone() };
    let b1s = if sweep.b1.is_empty() { vec![cfg.b1()] } else { sweep.b1.clone() };
    let combos: Vec<(f64, f64)> = bs.iter().flat_map(|b| b1s.iter().map(move |b1| (*b, *b1))).collect();
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(combos.len()).max(1);
    let run_one = |&(b, b1): &(f64, f64)| -> SweepRow {
        let mut c = cfg.clone();
        c.sweep = None;
        c.b = Some(super::NumOrVec::Num(b));
        c.b1 = Some(b1);
        match build_pair(&c).and_then(|p| verify_pair(&p, &c)) {
            Ok(r) => SweepRow {
                b,
                b1,
                passed: r.passed,
                report: Some(r),
                error: None,
            },
            Err(e) => SweepRow {
                b,
                b1,
                passed: false,
                report: None,
                error: Some(e.to_string()),
            },
        }
    };
    let chunk = combos.len().div_ceil(workers);
    let rows: Vec<SweepRow> = std::thread::scope(|s| {
        let handles: Vec<_> = combos
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(run_one).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    let mut csv = String::from("b,b1,order,identity_max,passed,error\n");
    for r in &rows {
        let (order, ident) = r
            .report
            .as_ref()
            .map_or((f64::NAN, f64::NAN), |v| (v.intertwining.order, v.identities.max()));
        csv.push_str(&format!(
            "{},{},{}\n",
            csv_row(&[r.b, r.b1, order, ident]),
            r.passed,
            r.error.as_deref().map(clean_label).unwrap_or_default()
        ));
    }
    let passed = rows.iter().all(|r| r.passed);
    let text = json(&rows);
    Ok(Outcome {
        passed,
        files: vec![file("sweep.json", text.clone()), file("sweep.csv", csv)],
        summary: text,
    })
}

fn cmd_spectrum(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let grid = cfg.line_grid(cfg.grid.as_ref(), (-10.0, 10.0, 2000))?;
    let k = cfg.k();
    if cfg.level.is_some() || cfg.rho_grid.is_some() {
        return separated(cfg, grid, k);
    }
    if let Some(f) = &cfg.f {
        let f = expr("f", f, &["xi"])?;
        let report = partner_spectrum_check(&f, "xi", &grid, k).map_err(numerics_err)?;
        let mut spectra = String::from("k,e_minus,e_plus\n");
        for i in 0..k {
            spectra.push_str(&format!(
                "{i},{}\n",
                csv_row(&[report.minus.eigenvalues[i], report.plus.eigenvalues[i]])
            ));
        }
        let text = json(&report);
        return Ok(Outcome {
            passed: report.transformed_ok(),
            files: vec![
                file("spectrum.json", text.clone()),
                file("spectra.csv", spectra),
                file("pairing.csv", report.pairing_csv()),
            ],
            summary: text,
        });
    }
    let v = expr("V", required(&cfg.calv, "f or V")?, &["xi"])?;
    let values = grid.sample(&v, "xi").map_err(numerics_err)?;
    let spectrum = solve_values(&values, &grid, k).map_err(numerics_err)?;
    let text = spectrum.to_json() + "\n";
    Ok(Outcome {
        passed: true,
        files: vec![file("spectrum.json", text.clone()), file("spectrum.csv", spectrum.to_csv())],
        summary: text,
    })
}

fn separated(cfg: &RunConfig, xi_grid: crate::numerics::Grid1D, k: usize) -> Result<Outcome, CliError> {
    let c = match &cfg.c {
        Some(super::CSpec::Num(c)) => *c,
        _ => return Err(CliError::Config("the separated problem needs a scalar c".into())),
    };
    let spec = SeparatedSpec {
        calv: expr("V", required(&cfg.calv, "V")?, &["xi"])?,
        calh: opt_expr("H", &cfg.calh, &["rho"])?,
        c,
        n: cfg.level.unwrap_or(0),
        n_plus: cfg.level_plus,
        m: cfg.m.unwrap_or(0.0),
        rho_grid: cfg.line_grid(cfg.rho_grid.as_ref(), (-4.0, 4.0, 800))?,
        xi_grid,
        k,
    };
    let report = separated_2d_solve(&spec).map_err(numerics_err)?;
    let passed = report.seed_nodes.is_empty()
        && report
            .u1()
            .is_some_and(|t| t.residual.is_none_or(|r| r <= report.transformed_tolerance));
    let mut scan = String::from("e0,eigenvalue,mismatch\n");
    for s in &report.scan {
        scan.push_str(&csv_row(&[s.e0, s.eigenvalue, s.mismatch]));
        scan.push('\n');
    }
    let text = json(&report);
    Ok(Outcome {
        passed,
        files: vec![
            file("separated.json", text.clone()),
            file("xi_spectrum.csv", report.xi.to_csv()),
            file("scan.csv", scan),
        ],
        summary: text,
    })
}

fn cmd_hierarchy(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let grid = cfg.line_grid(cfg.grid.as_ref(), (-10.0, 10.0, 2000))?;
    let v = expr("V", required(&cfg.calv, "V")?, &["xi"])?;
    let values = grid.sample(&v, "xi").map_err(numerics_err)?;
    let seeds: Vec<Seed> = cfg
        .seeds
        .clone()
        .unwrap_or_default()
        .into_iter()
        .map(|s| match s {
            SeedSpec::Eigen(i) => Ok(Seed::Eigen(i)),
            SeedSpec::Closed { phi, lambda } => Ok(Seed::Closed {
                phi: expr("seed phi", &phi, &["xi"])?,
                var: "xi".into(),
                lambda,
            }),
        })
        .collect::<Result<_, CliError>>()?;
    let chain = build_hierarchy(&values, &seeds, &grid, cfg.k()).map_err(hierarchy_err)?;
    if let Some(l) = chain.levels.iter().find(|l| l.singular) {
        log::warn!("level {} is singular: its seed has nodes at {:?}", l.level, l.seed_nodes);
    }
    let mut files = vec![file("chain.csv", chain.to_csv()), file("chain.json", chain.to_json() + "\n")];
    let mut passed = true;
    let mut summary = chain.to_json() + "\n";
    if cfg.phi.is_some() {
        let pair = embedded_pair(cfg)?;
        let report = verify_pair(&pair, cfg)?;
        passed = report.passed;
        #[derive(Serialize)]
        struct Embed<'a> {
            pair: PairDescription<'a>,
            verification: &'a VerifyReport,
        }
        let text = json(&Embed {
            pair: describe(&pair),
            verification: &report,
        });
        files.push(file("embed.json", text.clone()));
        summary = text;
    }
    Ok(Outcome {
        passed,
        files,
        summary,
    })
}

fn read_points(cfg: &RunConfig, dim: usize) -> Result<Vec<Vec<f64>>, CliError> {
    let path = cfg
        .points
        .as_ref()
        .ok_or_else(|| CliError::Config("missing points file".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match super::config::parse_list(line) {
            Ok(v) if v.len() == dim => out.push(v),
            Ok(v) => {
                return Err(CliError::Config(format!(
                    "points line {}: expected {dim} values, got {}",
                    i + 1,
                    v.len()
                )))
            }
            // a non-numeric first line is a header
            Err(_) if i == 0 => continue,
            Err(e) => return Err(CliError::Config(format!("points line {}: {e}", i + 1))),
        }
    }
    Ok(out)
}

fn locus(e: CoordError) -> String {
    match e {
        CoordError::Singular { locus, .. } => clean_label(&locus),
        other => clean_label(&other.to_string()),
    }
}

fn cmd_convert_coords(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let params = cfg.params()?;
    let mut csv = String::new();
    let mut flagged = 0;
    match params.n() {
        2 => {
            let chart = Chart2D::new(params.a()[0], params.a()[1], params.c_at(0, 1))
                .map_err(|e| CliError::Config(e.to_string()))?;
            csv.push_str("x,y,kappa,eta,rho,xi,x_back,y_back,singular\n");
            for p in read_points(cfg, 2)? {
                csv.push_str(&csv_row(&p));
                match chart.forward(p[0], p[1]).and_then(|u| Ok((u, chart.inverse(u.rho, u.xi)?))) {
                    Ok((u, (xb, yb))) => {
                        csv.push_str(&format!(",{},\n", csv_row(&[u.kappa, u.eta, u.rho, u.xi, xb, yb])));
                    }
                    Err(e) => {
                        flagged += 1;
                        csv.push_str(&format!(",,,,,,,{}\n", locus(e)));
                    }
                }
            }
        }
        3 => {
            let chart = Chart3D::new(&params, cfg.eta_variant()).map_err(|e| CliError::Config(e.to_string()))?;
            let name = cfg.eta_variant().polynomial_name().replace('p', "eta");
            csv.push_str(&format!("x,y,z,beta,gamma,{name},x_back,y_back,z_back,singular\n"));
            for p in read_points(cfg, 3)? {
                let r = [p[0], p[1], p[2]];
                csv.push_str(&csv_row(&p));
                match chart.forward(&r).and_then(|u| Ok((u, chart.inverse(&u)?))) {
                    Ok((u, back)) => {
                        csv.push_str(&format!(",{},{},\n", csv_row(&u), csv_row(&back)));
                    }
                    Err(e) => {
                        flagged += 1;
                        csv.push_str(&format!(",,,,,,,{}\n", locus(e)));
                    }
                }
            }
        }
        n => return Err(CliError::Config(format!("charts exist for n = 2 and 3, got n = {n}"))),
    }
    if flagged > 0 {
        log::warn!("{flagged} points lie on a singular locus");
    }
    #[derive(Serialize)]
    struct Summary {
        n: usize,
        points: usize,
        singular: usize,
    }
    let rows = csv.lines().count() - 1;
    let text = json(&Summary {
        n: params.n(),
        points: rows,
        singular: flagged,
    });
    Ok(Outcome {
        passed: true,
        files: vec![file("converted.csv", csv)],
        summary: text,
    })
}
