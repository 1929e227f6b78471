//! The five subcommands and their output tables.

use serde::{Deserialize, Serialize};
use srwalk_core::analysis::{fit_gamma_windowed, ScanResult};
use srwalk_core::coupling::{fit_bounds, CouplingField};
use srwalk_core::oracle::{
    energy_identity_deviation, enumerate_spins, enumerate_walks, equivalence_diff, factorization_deviation, griffiths_check,
    ExactResult, GriffithsReport, GRIFFITHS_CAP, WALK_DISTRIBUTION_CAP,
};
use srwalk_core::{classify, sampler, BoundFit, GammaFit, ModelParams, Regime, SampleStats, ScalingPoint};

use crate::config::{Command, Format, RunConfig};
use crate::output::{self, fmt_f64, CsvDocument, Table};
use crate::Failure;

pub const EQUIVALENCE_TOLERANCE: f64 = 1e-10;
pub const ENERGY_IDENTITY_TOLERANCE: f64 = 1e-10;
pub const FACTORIZATION_TOLERANCE: f64 = 1e-12;
/// Largest chain of the factorization check (4^N walks against 2^N spin states).
pub const FACTORIZATION_N: usize = 6;
/// Uniform coupling scale of the Griffiths monotonicity check.
pub const GRIFFITHS_SCALE: f64 = 1.5;

pub fn execute(cfg: &RunConfig) -> Result<(), Failure> {
    match cfg.command {
        Command::Enumerate => enumerate(cfg),
        Command::Check => check(cfg),
        Command::Sample => sample(cfg),
        Command::Scan => scan(cfg),
        Command::Fit => fit(cfg),
    }
}

fn params(cfg: &RunConfig) -> Result<ModelParams, Failure> {
    Ok(ModelParams::new(cfg.model.n, cfg.model.alpha, cfg.model.beta)?)
}

fn write<T: Serialize>(cfg: &RunConfig, result: &T, table: impl FnOnce() -> Table) -> Result<(), Failure> {
    let text = match cfg.output.format {
        Format::Json => output::json_document(cfg, result)?,
        Format::Csv => output::csv_document(cfg, &table())?,
    };
    output::emit(cfg, &text)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnumerateResult {
    pub walk: ExactResult,
    pub spin: ExactResult,
    pub equivalence_diff: f64,
    pub tolerance: f64,
    pub passed: bool,
}

pub const ENUMERATE_COLUMNS: [&str; 8] =
    ["ensemble", "N", "alpha", "beta", "log_Z", "mean_omega_sq", "mean_M_sq", "equivalence_diff"];

fn enumerate(cfg: &RunConfig) -> Result<(), Failure> {
    let p = params(cfg)?;
    let walk = enumerate_walks(&p)?;
    let spin = enumerate_spins(&p, &CouplingField::dense(p))?;
    let diff = equivalence_diff(&walk, &spin);
    let result = EnumerateResult { walk, spin, equivalence_diff: diff, tolerance: EQUIVALENCE_TOLERANCE, passed: diff <= EQUIVALENCE_TOLERANCE };
    write(cfg, &result, || Table {
        header: ENUMERATE_COLUMNS.to_vec(),
        rows: [(&result.walk, "walk"), (&result.spin, "spin")]
            .iter()
            .map(|(r, name)| {
                vec![
                    name.to_string(),
                    r.params.n.to_string(),
                    fmt_f64(r.params.alpha),
                    fmt_f64(r.params.beta),
                    fmt_f64(r.log_z),
                    fmt_f64(r.mean_omega_sq),
                    fmt_f64(r.mean_m_sq),
                    fmt_f64(diff),
                ]
            })
            .collect(),
    })?;
    if result.passed {
        Ok(())
    } else {
        Err(Failure::Check(format!("walk/spin equivalence differs by {diff:e} (tolerance {EQUIVALENCE_TOLERANCE:e})")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub n: usize,
    pub deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl IdentityCheck {
    fn new(n: usize, deviation: f64, tolerance: f64) -> Self {
        Self { n, deviation, tolerance, passed: deviation <= tolerance }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub bounds: BoundFit,
    /// `c1_hat > 0` and no pair outside the bulk exceeds `c2_hat |i-j|^{2-α}`.
    pub bounds_passed: bool,
    pub griffiths: GriffithsReport,
    pub energy_identity: IdentityCheck,
    pub factorization: IdentityCheck,
    pub passed: bool,
}

pub const CHECK_COLUMNS: [&str; 5] = ["check", "N", "value", "tolerance", "passed"];

fn check(cfg: &RunConfig) -> Result<(), Failure> {
    let p = params(cfg)?;
    let bounds = fit_bounds(&CouplingField::with_default_storage(p), cfg.epsilon)?;
    let bounds_passed = bounds.c1_hat > 0.0 && bounds.outside_violations == 0;

    let n_g = p.n.min(GRIFFITHS_CAP);
    let pg = ModelParams::new(n_g, p.alpha, 0.0)?;
    let griffiths = griffiths_check(&pg, &CouplingField::dense(pg), &cfg.grids.griffiths_betas, GRIFFITHS_SCALE)?;

    let n_e = p.n.min(WALK_DISTRIBUTION_CAP);
    let energy_identity =
        IdentityCheck::new(n_e, energy_identity_deviation(&ModelParams::new(n_e, p.alpha, p.beta)?)?, ENERGY_IDENTITY_TOLERANCE);
    let n_f = p.n.min(FACTORIZATION_N);
    let factorization =
        IdentityCheck::new(n_f, factorization_deviation(&ModelParams::new(n_f, p.alpha, p.beta)?)?, FACTORIZATION_TOLERANCE);

    let passed = bounds_passed && griffiths.passed() && energy_identity.passed && factorization.passed;
    let result = CheckResult { bounds, bounds_passed, griffiths, energy_identity, factorization, passed };
    write(cfg, &result, || check_table(&result))?;
    if result.passed {
        return Ok(());
    }
    let mut items = Vec::new();
    if !result.bounds_passed {
        items.push(format!(
            "bounds: c1_hat = {:e}, {} violations outside the bulk, e.g. {:?}",
            result.bounds.c1_hat, result.bounds.outside_violations, result.bounds.violation_examples
        ));
    }
    for v in &result.griffiths.violations {
        items.push(format!("griffiths: {:?} at beta={} pair ({}, {}): {} < {}", v.kind, v.beta, v.i, v.j, v.value, v.reference));
    }
    for (name, c) in [("energy identity", &result.energy_identity), ("factorization", &result.factorization)] {
        if !c.passed {
            items.push(format!("{name}: deviation {:e} > {:e} at N={}", c.deviation, c.tolerance, c.n));
        }
    }
    for item in &items {
        eprintln!("  {item}");
    }
    Err(Failure::Check(format!("{} check(s) failed", items.len())))
}

fn check_table(r: &CheckResult) -> Table {
    let row = |name: &str, n: usize, value: f64, tol: f64, passed: bool| {
        vec![name.to_string(), n.to_string(), fmt_f64(value), fmt_f64(tol), passed.to_string()]
    };
    let b = &r.bounds;
    Table {
        header: CHECK_COLUMNS.to_vec(),
        rows: vec![
            row("bound_c1", b.n, b.c1_hat, 0.0, b.c1_hat > 0.0),
            row("bound_c2", b.n, b.c2_hat, f64::INFINITY, true),
            row("bound_spread", b.n, b.spread(), f64::INFINITY, true),
            row("outside_violations", b.n, b.outside_violations as f64, 0.0, b.outside_violations == 0),
            row("griffiths_violations", r.griffiths.n, r.griffiths.violations.len() as f64, 0.0, r.griffiths.passed()),
            row("energy_identity", r.energy_identity.n, r.energy_identity.deviation, r.energy_identity.tolerance, r.energy_identity.passed),
            row("factorization", r.factorization.n, r.factorization.deviation, r.factorization.tolerance, r.factorization.passed),
        ],
    }
}

pub const SAMPLE_COLUMNS: [&str; 14] = [
    "N",
    "alpha",
    "beta",
    "seed",
    "mean_M_sq",
    "err_M_sq",
    "tau_int",
    "acceptance",
    "mean_cluster_size",
    "n_sweeps",
    "mean_abs_m",
    "mean_energy",
    "n_therm",
    "error_underestimated",
];

pub fn sample_row(s: &SampleStats) -> Vec<String> {
    vec![
        s.n.to_string(),
        fmt_f64(s.alpha),
        fmt_f64(s.beta),
        s.seed.to_string(),
        fmt_f64(s.mean_m_sq),
        fmt_f64(s.err_m_sq),
        fmt_f64(s.tau_int),
        fmt_f64(s.acceptance),
        fmt_f64(s.mean_cluster_size),
        s.n_sweeps.to_string(),
        fmt_f64(s.mean_abs_m),
        fmt_f64(s.mean_energy),
        s.n_therm.to_string(),
        s.error_underestimated.to_string(),
    ]
}

/// Sample estimates of one CSV row; block means are only kept in JSON output.
pub fn parse_sample_row(doc: &CsvDocument, row: usize) -> Result<SampleStats, Failure> {
    Ok(SampleStats {
        n: doc.get(row, "N")?,
        alpha: doc.get(row, "alpha")?,
        beta: doc.get(row, "beta")?,
        seed: doc.get(row, "seed")?,
        mean_m_sq: doc.get(row, "mean_M_sq")?,
        err_m_sq: doc.get(row, "err_M_sq")?,
        mean_abs_m: doc.get(row, "mean_abs_m")?,
        mean_energy: doc.get(row, "mean_energy")?,
        tau_int: doc.get(row, "tau_int")?,
        n_sweeps: doc.get(row, "n_sweeps")?,
        n_therm: doc.get(row, "n_therm")?,
        acceptance: doc.get(row, "acceptance")?,
        mean_cluster_size: doc.get(row, "mean_cluster_size")?,
        error_underestimated: doc.get(row, "error_underestimated")?,
        block_means: Vec::new(),
    })
}

fn sample(cfg: &RunConfig) -> Result<(), Failure> {
    let p = params(cfg)?;
    let c = CouplingField::with_default_storage(p);
    let stats = sampler::run(&p, &cfg.plan, &c)?;
    if stats.error_underestimated {
        log::warn!("binning did not plateau; err_M_sq is likely underestimated");
    }
    write(cfg, &stats, || Table { header: SAMPLE_COLUMNS.to_vec(), rows: vec![sample_row(&stats)] })
}

pub const SCAN_FIT_COLUMNS: [&str; 8] =
    ["stream", "gamma", "gamma_err", "intercept", "chi2_per_dof", "regime", "dropped_N", "cell_error"];

pub fn scan_header() -> Vec<&'static str> {
    SAMPLE_COLUMNS.iter().chain(SCAN_FIT_COLUMNS.iter()).copied().collect()
}

/// One row per `(α, β, N)` cell: the run estimates followed by the fit of its `(α, β)` column.
pub fn scan_table(r: &ScanResult) -> Table {
    let rows = r
        .cells
        .iter()
        .map(|cell| {
            let mut row = match &cell.stats {
                Some(s) => sample_row(s),
                None => {
                    let mut empty = vec![String::new(); SAMPLE_COLUMNS.len()];
                    empty[0] = cell.n.to_string();
                    empty[1] = fmt_f64(cell.alpha);
                    empty[2] = fmt_f64(cell.beta);
                    empty[3] = cell.seed.to_string();
                    empty
                }
            };
            let record = r.record(cell.alpha, cell.beta);
            let fit = record.and_then(|rec| rec.fit);
            let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
            row.push(cell.stream.to_string());
            row.push(opt(fit.map(|f| f.gamma)));
            row.push(opt(fit.map(|f| f.gamma_err)));
            row.push(opt(fit.map(|f| f.intercept)));
            row.push(opt(fit.map(|f| f.chi2_per_dof)));
            row.push(record.map(|rec| rec.regime.to_string()).unwrap_or_default());
            row.push(record.map(|rec| rec.dropped.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" ")).unwrap_or_default());
            row.push(cell.error.clone().unwrap_or_default());
            row
        })
        .collect();
    Table { header: scan_header(), rows }
}

fn scan(cfg: &RunConfig) -> Result<(), Failure> {
    let g = &cfg.grids;
    let result = srwalk_core::scan(&g.alphas, &g.betas, &g.ns, &cfg.plan, cfg.jobs)?;
    for b in &result.brackets {
        log::info!("alpha={}: diffusive up to beta={:?}, ballistic from beta={:?}", b.alpha, b.diffusive_beta, b.ballistic_beta);
    }
    write(cfg, &result, || scan_table(&result))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitGroup {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub points: Vec<ScalingPoint>,
    pub fit: GammaFit,
    pub regime: Regime,
    pub dropped: Vec<usize>,
}

pub const FIT_COLUMNS: [&str; 9] =
    ["alpha", "beta", "n_points", "gamma", "gamma_err", "intercept", "chi2_per_dof", "regime", "dropped_N"];

type Keyed = (Option<f64>, Option<f64>, ScalingPoint);

fn points_from_csv(doc: &CsvDocument) -> Result<Vec<Keyed>, Failure> {
    let n_col = doc.any_column(&["N", "n"]).ok_or_else(|| Failure::usage("missing column N"))?;
    let mean_col = doc.any_column(&["mean_M_sq", "mean"]).ok_or_else(|| Failure::usage("missing column mean_M_sq"))?;
    let err_col = doc.any_column(&["err_M_sq", "err"]).ok_or_else(|| Failure::usage("missing column err_M_sq"))?;
    let (alpha_col, beta_col) = (doc.column("alpha"), doc.column("beta"));
    let cell = |row: &[String], col: usize, name: &str| -> Result<f64, Failure> {
        row[col].parse().map_err(|_| Failure::usage(format!("cannot parse {name} = {:?}", row[col])))
    };
    let mut out = Vec::new();
    for row in &doc.rows {
        if row[mean_col].is_empty() {
            continue; // failed scan cell
        }
        let n: usize = row[n_col].parse().map_err(|_| Failure::usage(format!("cannot parse N = {:?}", row[n_col])))?;
        let alpha = alpha_col.map(|c| cell(row, c, "alpha")).transpose()?;
        let beta = beta_col.map(|c| cell(row, c, "beta")).transpose()?;
        out.push((alpha, beta, ScalingPoint { n, mean: cell(row, mean_col, "mean")?, err: cell(row, err_col, "err")? }));
    }
    Ok(out)
}

fn points_from_json(text: &str) -> Result<Vec<Keyed>, Failure> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Failure::usage(e.to_string()))?;
    let schema = value.get("schema").and_then(|s| s.as_str()).unwrap_or_default().to_string();
    let result = value.get("result").cloned().unwrap_or_default();
    let bad = |e: serde_json::Error| Failure::usage(format!("{schema}: {e}"));
    let keyed = |s: &SampleStats| (Some(s.alpha), Some(s.beta), ScalingPoint { n: s.n, mean: s.mean_m_sq, err: s.err_m_sq });
    if schema.starts_with("srwalk.sample/") {
        let s: SampleStats = serde_json::from_value(result).map_err(bad)?;
        Ok(vec![keyed(&s)])
    } else if schema.starts_with("srwalk.scan/") {
        let r: ScanResult = serde_json::from_value(result).map_err(bad)?;
        Ok(r.cells.iter().filter_map(|c| c.stats.as_ref()).map(keyed).collect())
    } else {
        Err(Failure::usage(format!("cannot fit a document with schema {schema:?}")))
    }
}

/// Fit every `(α, β)` group of points found in the inputs.
pub fn fit_inputs(cfg: &RunConfig) -> Result<Vec<FitGroup>, Failure> {
    if cfg.inputs.is_empty() {
        return Err(Failure::usage("fit needs at least one --input file"));
    }
    let mut all = Vec::new();
    for path in &cfg.inputs {
        let text = output::read_to_string(path)?;
        let is_json = path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
        all.extend(if is_json { points_from_json(&text)? } else { points_from_csv(&output::parse_csv(&text)?)? });
    }
    let mut groups: Vec<(Option<f64>, Option<f64>, Vec<ScalingPoint>)> = Vec::new();
    for (alpha, beta, point) in all {
        match groups.iter_mut().find(|g| g.0 == alpha && g.1 == beta) {
            Some(g) => g.2.push(point),
            None => groups.push((alpha, beta, vec![point])),
        }
    }
    groups
        .into_iter()
        .map(|(alpha, beta, mut points)| {
            points.sort_by_key(|p| p.n);
            let w = fit_gamma_windowed(&points)
                .map_err(|e| Failure::usage(format!("alpha={alpha:?} beta={beta:?}: {e}")))?;
            Ok(FitGroup { alpha, beta, points, fit: w.fit, regime: classify(&w.fit), dropped: w.dropped })
        })
        .collect()
}

fn fit(cfg: &RunConfig) -> Result<(), Failure> {
    let groups = fit_inputs(cfg)?;
    write(cfg, &groups, || Table {
        header: FIT_COLUMNS.to_vec(),
        rows: groups
            .iter()
            .map(|g| {
                vec![
                    g.alpha.map(fmt_f64).unwrap_or_default(),
                    g.beta.map(fmt_f64).unwrap_or_default(),
                    g.fit.n_points.to_string(),
                    fmt_f64(g.fit.gamma),
                    fmt_f64(g.fit.gamma_err),
                    fmt_f64(g.fit.intercept),
                    fmt_f64(g.fit.chi2_per_dof),
                    g.regime.to_string(),
                    g.dropped.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" "),
                ]
            })
            .collect(),
    })
}
