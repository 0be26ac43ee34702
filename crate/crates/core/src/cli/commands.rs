use std::f64::consts::PI;
use std::path::Path;

use serde_json::{json, Value};

use super::config::{CriterionArg, FormatArg, MixArg, RunConfig, SliceArg, StateKind};
use super::{parse, provenance};
use crate::error::{Error, Result};
use crate::families::{
    amplitude_flags, cat_state, coherent_levels, coherent_product, random_haar_state, CatParams, NoonParams,
    RandomStateSpec,
};
use crate::fock::{FockCutoff, StateJson, TwoModeState, C64, DEFAULT_CUTOFF_GUARD};
use crate::measurement::{
    estimate_from_histograms, estimator_configs, physical_displacement, simulate_configs, MeasurementConfig, Mix,
    OutcomeHistogram,
};
use crate::phase_space::{
    detect, evaluate_criterion, guard_flags, second_order_minor, second_order_report, validate_derivative_identities,
    CriterionKind, PhasePoint, Verdict, WidthAssignment, WidthParam, DETECT_TOL,
};
use crate::ppt::{ppt_compression_check, ppt_confirmed, ppt_min_eig_tol, sv_moment_minor, PPT_TOL};
use crate::scan::{
    detection_rate_on, grid_scan, refine_minimum, sigma_sweep, Axis, ScanRegion, ScanResult, ScanRow, DEFAULT_BUDGET,
};

/// Coherent tail left out by automatically chosen cutoffs.
const AUTO_TAIL: f64 = 1e-20;

pub(super) fn dispatch(name: &str, cfg: &RunConfig) -> Result<String> {
    let mut cfg = cfg.clone();
    for (v, what) in [(cfg.detect_tol, "detect-tol"), (cfg.ppt_tol, "ppt-tol"), (cfg.step, "step")] {
        if let Some(v) = v {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("--{what} must be positive")));
            }
        }
    }
    cfg.seed = Some(cfg.seed.unwrap_or(0));
    match name {
        "witness" => witness(cfg),
        "scan" => scan(cfg),
        "sweep" => sweep(cfg),
        "rate" => rate(cfg),
        "ppt" => ppt(cfg),
        "simulate" => simulate(cfg),
        "hierarchy" => hierarchy(cfg),
        "validate" => validate(cfg),
        other => Err(Error::InvalidArgument(format!("unknown subcommand {other}"))),
    }
}

fn detect_tol(cfg: &RunConfig) -> f64 {
    cfg.detect_tol.unwrap_or(DETECT_TOL)
}

fn format(cfg: &RunConfig, default: FormatArg) -> FormatArg {
    cfg.format.unwrap_or(default)
}

fn json_only(cfg: &RunConfig, command: &str) -> Result<()> {
    match cfg.format {
        Some(FormatArg::Csv) => Err(Error::InvalidArgument(format!("{command} writes JSON only"))),
        _ => Ok(()),
    }
}

fn pretty(v: &Value) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn point_or_origin(cfg: &RunConfig) -> Result<PhasePoint> {
    cfg.point.as_deref().map_or(Ok(PhasePoint::origin()), parse::point)
}

fn gamma_delta(cfg: &RunConfig) -> Result<(C64, C64)> {
    let gamma = parse::complex(
        cfg.gamma
            .as_deref()
            .ok_or_else(|| Error::InvalidArgument("this state needs --gamma".into()))?,
    )?;
    let delta = cfg.delta.as_deref().map_or(Ok(gamma), parse::complex)?;
    Ok((gamma, delta))
}

fn noon_params(cfg: &RunConfig) -> Result<NoonParams> {
    let n = cfg.n.ok_or_else(|| Error::InvalidArgument("this state needs --N".into()))?;
    let c = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let tau = match cfg.state {
        Some(StateKind::LossyNoon) => cfg
            .tau
            .ok_or_else(|| Error::InvalidArgument("lossy-noon needs --tau".into()))?,
        _ => 1.0,
    };
    NoonParams::new(n, c, c, tau)
}

fn random_spec(cfg: &RunConfig) -> RandomStateSpec {
    RandomStateSpec {
        d: cfg.d.unwrap_or(2),
        seed: cfg.seed.unwrap_or(0),
        count: cfg.count.unwrap_or(500),
    }
}

fn state_kind(cfg: &RunConfig) -> Result<StateKind> {
    cfg.state
        .ok_or_else(|| Error::InvalidArgument("--state is required".into()))
}

fn load_state_file(cfg: &RunConfig) -> Result<TwoModeState> {
    let path = cfg
        .state_file
        .as_deref()
        .ok_or_else(|| Error::InvalidArgument("--state file needs --state-file".into()))?;
    let text = std::fs::read_to_string(Path::new(path))
        .map_err(|e| Error::InvalidArgument(format!("cannot read {path}: {e}")))?;
    let doc: StateJson = serde_json::from_str(&text)?;
    TwoModeState::from_json(&doc)
}

/// Smallest cutoff that holds the state itself.
fn family_levels(cfg: &RunConfig) -> Result<FockCutoff> {
    match state_kind(cfg)? {
        StateKind::Noon | StateKind::LossyNoon => FockCutoff::square(noon_params(cfg)?.n + 1),
        StateKind::Cat | StateKind::Coherent => {
            let (g, d) = gamma_delta(cfg)?;
            FockCutoff::new(coherent_levels(g, AUTO_TAIL).max(2), coherent_levels(d, AUTO_TAIL).max(2))
        }
        StateKind::Random => FockCutoff::square(random_spec(cfg).d),
        StateKind::Vacuum => FockCutoff::square(2),
        StateKind::File => Ok(load_state_file(cfg)?.cutoff()),
    }
}

fn build_state(cfg: &RunConfig, cutoff: FockCutoff) -> Result<TwoModeState> {
    match state_kind(cfg)? {
        StateKind::Noon | StateKind::LossyNoon => noon_params(cfg)?.state(cutoff),
        StateKind::Cat => {
            let (g, d) = gamma_delta(cfg)?;
            cat_state(&CatParams::new(g, d, cfg.p.unwrap_or(0.0), cfg.theta.unwrap_or(PI))?, cutoff)
        }
        StateKind::Coherent => {
            let (g, d) = gamma_delta(cfg)?;
            coherent_product(g, d, cutoff)
        }
        StateKind::Random => random_haar_state(&random_spec(cfg), cfg.index.unwrap_or(0), cutoff),
        StateKind::Vacuum => Ok(TwoModeState::vacuum(cutoff)),
        StateKind::File => load_state_file(cfg)?.embed(cutoff),
    }
}

fn guard_levels(amp_sq: f64) -> usize {
    (amp_sq / DEFAULT_CUTOFF_GUARD).ceil() as usize
}

/// The cutoff for this run: `--cutoff` when given (refused if the state or
/// the evaluation points break the guard), otherwise the smallest one that
/// holds the state and keeps every point inside the guard.
fn resolve_cutoff(cfg: &RunConfig, extremes: &[PhasePoint], floor: usize) -> Result<FockCutoff> {
    let need = family_levels(cfg)?;
    if let Some(text) = &cfg.cutoff {
        let c = parse::cutoff(text)?;
        if matches!(state_kind(cfg)?, StateKind::Noon | StateKind::LossyNoon | StateKind::Random | StateKind::File)
            && (c.dim_a() < need.dim_a() || c.dim_b() < need.dim_b())
        {
            return Err(Error::InvalidCutoff(format!("{c} cannot hold the state; it needs {need}")));
        }
        if matches!(state_kind(cfg)?, StateKind::Cat | StateKind::Coherent) {
            let (g, d) = gamma_delta(cfg)?;
            if let Some(f) = amplitude_flags(g, d, c).first() {
                return Err(Error::TruncationRefused(format!("state amplitude outside cutoff {c}: {f}")));
            }
        }
        for p in extremes {
            if let Some(f) = guard_flags(c, *p).first() {
                return Err(Error::TruncationRefused(format!("point {p} outside cutoff {c}: {f}")));
            }
        }
        return Ok(c);
    }
    let (mut da, mut db) = (need.dim_a().max(floor), need.dim_b().max(floor));
    for p in extremes {
        da = da.max(guard_levels(p.alpha.norm_sqr()));
        db = db.max(guard_levels(p.beta.norm_sqr()));
    }
    FockCutoff::new(da, db)
}

/// Builds the state and records the cutoff actually used in `cfg`.
fn setup(cfg: &mut RunConfig, extremes: &[PhasePoint]) -> Result<TwoModeState> {
    setup_with_floor(cfg, extremes, 0)
}

/// [`setup`] with at least `floor` levels per mode unless `--cutoff` is given.
fn setup_with_floor(cfg: &mut RunConfig, extremes: &[PhasePoint], floor: usize) -> Result<TwoModeState> {
    let cutoff = resolve_cutoff(cfg, extremes, floor)?;
    cfg.cutoff = Some(format!("{},{}", cutoff.dim_a(), cutoff.dim_b()));
    build_state(cfg, cutoff)
}

fn criterion(cfg: &RunConfig) -> CriterionKind {
    match cfg.criterion.unwrap_or(CriterionArg::M2) {
        CriterionArg::M2 => CriterionKind::M2,
        CriterionArg::Husimi => CriterionKind::Husimi,
        CriterionArg::Wigner => CriterionKind::Wigner,
        CriterionArg::Mineig => CriterionKind::MinEig(cfg.order.unwrap_or(2)),
    }
}

fn single_width(cfg: &RunConfig) -> Result<WidthParam> {
    let list = parse::width_list(cfg.sigma.as_deref().unwrap_or("1"))?;
    match list.as_slice() {
        [s] => Ok(*s),
        _ => Err(Error::InvalidArgument("this criterion takes a single --sigma".into())),
    }
}

fn csv_rows(rows: Vec<ScanRow>, state: &TwoModeState, label: String) -> Result<String> {
    ScanResult::new(rows, state.cutoff(), label).to_csv()
}

fn witness(mut cfg: RunConfig) -> Result<String> {
    let point = point_or_origin(&cfg)?;
    let state = setup(&mut cfg, &[point])?;
    let tol = detect_tol(&cfg);
    let kind = criterion(&cfg);
    let rows = parse::width_list(cfg.sigma.as_deref().unwrap_or("1"))?;
    let first = rows[0];
    let report = match (kind, rows.len()) {
        (CriterionKind::M2, n) if n > 1 => {
            second_order_report(&state, point, &WidthAssignment::symmetric(rows)?, "m2", false, tol)?
        }
        (_, 1) => evaluate_criterion(&state, point, kind, first, tol)?,
        _ => return Err(Error::InvalidArgument(format!("{kind} takes a single --sigma"))),
    };
    if format(&cfg, FormatArg::Json) == FormatArg::Csv {
        let row = ScanRow {
            point,
            sigma: first.value(),
            value: report.value,
            verdict: report.verdict,
        };
        return csv_rows(vec![row], &state, kind.to_string());
    }
    let mut out = json!({ "provenance": provenance("witness", &cfg), "report": report });
    if cfg.compare_ppt.unwrap_or(false) {
        out["ppt"] = serde_json::to_value(ppt_min_eig_tol(&state, cfg.ppt_tol.unwrap_or(PPT_TOL))?)?;
    }
    pretty(&out)
}

fn region(cfg: &RunConfig) -> Result<ScanRegion> {
    let range = cfg.range.as_deref().unwrap_or("-3:3:121");
    let r = match cfg.slice.unwrap_or(SliceArg::Real) {
        SliceArg::Real => {
            let a = parse::axes(range, 2)?;
            ScanRegion::real_plane(a[0], a[1])
        }
        SliceArg::Diagonal => ScanRegion::diagonal(cfg.phase.unwrap_or(0.0), parse::axes(range, 1)?[0]),
        SliceArg::Full => {
            let a = parse::axes(range, 4)?;
            ScanRegion::full([a[0], a[1], a[2], a[3]])
        }
    };
    Ok(r.with_budget(cfg.budget.unwrap_or(DEFAULT_BUDGET)))
}

fn reach(a: &Axis) -> f64 {
    a.min.abs().max(a.max.abs())
}

/// A point with the largest amplitudes the region reaches on each mode.
fn region_extreme(r: &ScanRegion) -> PhasePoint {
    let ax = &r.axes;
    match ax.len() {
        1 => PhasePoint::from_reals([reach(&ax[0]), 0.0, reach(&ax[0]), 0.0]),
        2 => PhasePoint::from_reals([reach(&ax[0]), 0.0, reach(&ax[1]), 0.0]),
        _ => PhasePoint::from_reals([reach(&ax[0]), reach(&ax[1]), reach(&ax[2]), reach(&ax[3])]),
    }
}

fn with_tol(mut rows: Vec<ScanRow>, tol: f64) -> Vec<ScanRow> {
    for r in &mut rows {
        if r.verdict != Verdict::Withheld {
            r.verdict = if r.value < -tol { Verdict::Entangled } else { Verdict::Inconclusive };
        }
    }
    rows
}

fn scan(mut cfg: RunConfig) -> Result<String> {
    let region = region(&cfg)?;
    region.points()?;
    let state = setup(&mut cfg, &[region_extreme(&region)])?;
    let kind = criterion(&cfg);
    let sigma = single_width(&cfg)?;
    let mut result = grid_scan(&state, &region, sigma, kind)?;
    result.rows = with_tol(result.rows, detect_tol(&cfg));
    if format(&cfg, FormatArg::Csv) == FormatArg::Csv {
        return result.to_csv();
    }
    let mut out = result.summary_json();
    out["provenance"] = provenance("scan", &cfg);
    out["region"] = serde_json::to_value(&region)?;
    if cfg.refine.unwrap_or(false) {
        if let Some(min) = result.minimum() {
            out["refined"] = serde_json::to_value(refine_minimum(&state, min.point, sigma, kind)?)?;
        }
    }
    out["rows"] = serde_json::to_value(&result.rows)?;
    pretty(&out)
}

/// Search box for the sweep point when none is given.
const SWEEP_SEARCH: f64 = 2.0;

fn husimi_optimum(state: &TwoModeState) -> Result<PhasePoint> {
    let axis = Axis::new(-SWEEP_SEARCH, SWEEP_SEARCH, 9)?;
    let coarse = grid_scan(state, &ScanRegion::full([axis; 4]), WidthParam::HUSIMI, CriterionKind::Husimi)?;
    let start = coarse.minimum().map_or(PhasePoint::origin(), |r| r.point);
    Ok(refine_minimum(state, start, WidthParam::HUSIMI, CriterionKind::Husimi)?.point)
}

fn sweep(mut cfg: RunConfig) -> Result<String> {
    let given = cfg.point.as_deref().map(parse::point).transpose()?;
    let extreme = given.unwrap_or(PhasePoint::from_reals([SWEEP_SEARCH; 4]));
    let state = setup(&mut cfg, &[extreme])?;
    let point = match given {
        Some(p) => p,
        None => husimi_optimum(&state)?,
    };
    let sigmas = parse::width_list(cfg.sigma.as_deref().unwrap_or("0.1:1:10"))?;
    let tol = detect_tol(&cfg);
    let mut result = sigma_sweep(&state, point, &sigmas)?;
    result.rows = with_tol(result.rows, tol);
    if format(&cfg, FormatArg::Csv) == FormatArg::Csv {
        return result.to_csv();
    }
    let threshold = result
        .rows
        .iter()
        .filter(|r| r.sigma <= 1.0)
        .find(|r| r.value < -tol)
        .map(|r| r.sigma);
    let mut out = result.summary_json();
    out["provenance"] = provenance("sweep", &cfg);
    out["point"] = serde_json::to_value(point)?;
    out["threshold_sigma"] = json!(threshold);
    out["rows"] = serde_json::to_value(&result.rows)?;
    pretty(&out)
}

fn rate(mut cfg: RunConfig) -> Result<String> {
    if cfg.state.is_some_and(|s| s != StateKind::Random) {
        return Err(Error::InvalidArgument("rate samples random states; drop --state or use --state random".into()));
    }
    cfg.state = Some(StateKind::Random);
    let spec = random_spec(&cfg);
    cfg.d = Some(spec.d);
    cfg.count = Some(spec.count);
    let points = parse::points(cfg.point.as_deref().unwrap_or("0,0,0,0;1,0,1,0;2,0,2,0"))?;
    let sigmas = parse::width_list(cfg.sigma.as_deref().unwrap_or("1"))?;
    // Random states live on d levels exactly; only an explicit cutoff is
    // held to the guard.
    let cutoff = match &cfg.cutoff {
        Some(_) => resolve_cutoff(&cfg, &points, 0)?,
        None => FockCutoff::square(spec.d)?,
    };
    cfg.cutoff = Some(format!("{},{}", cutoff.dim_a(), cutoff.dim_b()));
    let table = detection_rate_on(&spec, &points, &sigmas, cutoff, detect_tol(&cfg))?;
    if format(&cfg, FormatArg::Json) == FormatArg::Csv {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(["re_alpha", "im_alpha", "re_beta", "im_beta", "sigma", "detected", "total", "rate"])
            .map_err(io)?;
        for r in &table.rows {
            let [a, b, c, d] = r.point.reals();
            w.write_record([
                a.to_string(),
                b.to_string(),
                c.to_string(),
                d.to_string(),
                r.sigma.to_string(),
                r.detected.to_string(),
                r.total.to_string(),
                r.rate.to_string(),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        return String::from_utf8(bytes).map_err(|e| Error::Io(std::io::Error::other(e)));
    }
    let warnings = table.monotonicity_warnings();
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    pretty(&json!({
        "provenance": provenance("rate", &cfg),
        "table": table,
        "warnings": warnings,
    }))
}

fn ppt(mut cfg: RunConfig) -> Result<String> {
    json_only(&cfg, "ppt")?;
    let point = point_or_origin(&cfg)?;
    let floor = cfg.order.map_or(0, |k| 2 * k.min(3) + 2);
    let state = setup_with_floor(&mut cfg, &[point], floor)?;
    let tol = cfg.ppt_tol.unwrap_or(PPT_TOL);
    let verdict = if state_kind(&cfg)? == StateKind::File {
        ppt_min_eig_tol(&state, tol)?
    } else {
        let base = state.cutoff();
        let probe = cfg.clone();
        ppt_confirmed(|c| if c == base { Ok(state.clone()) } else { build_state(&probe, c) }, base, tol)?
    };
    let compression = match cfg.order {
        Some(k) => Some(ppt_compression_check(&state, point, k)?),
        None => None,
    };
    pretty(&json!({
        "provenance": provenance("ppt", &cfg),
        "ppt": verdict,
        "point": point,
        "moment_minor": sv_moment_minor(&state, point)?,
        "husimi_minor": second_order_minor(&state, point, &WidthAssignment::husimi())?,
        "compression_residual": compression,
    }))
}

fn mix(m: MixArg) -> Mix {
    match m {
        MixArg::None => Mix::None,
        MixArg::Balanced => Mix::Balanced,
        MixArg::Transmit => Mix::TransmitOnly,
        MixArg::Reflect => Mix::ReflectOnly,
    }
}

fn simulate(mut cfg: RunConfig) -> Result<String> {
    json_only(&cfg, "simulate")?;
    let widths = parse::widths(cfg.sigma.as_deref().unwrap_or("1"))?;
    if let Some(list) = cfg.input.clone() {
        let hists = list
            .split(',')
            .map(|path| {
                let text = std::fs::read_to_string(path.trim())
                    .map_err(|e| Error::InvalidArgument(format!("cannot read {path}: {e}")))?;
                OutcomeHistogram::from_json(&serde_json::from_str(&text)?)
            })
            .collect::<Result<Vec<_>>>()?;
        let estimate = estimate_from_histograms(&hists, &widths)?;
        return pretty(&json!({ "provenance": provenance("simulate", &cfg), "estimate": estimate }));
    }
    let point = point_or_origin(&cfg)?;
    let state = setup(&mut cfg, &[point])?;
    let shots = cfg.shots.unwrap_or(0);
    let seed = cfg.seed.unwrap_or(0);
    let efficiency = cfg.efficiency.unwrap_or(1.0);
    if let Some(m) = cfg.mix {
        let config = MeasurementConfig {
            point,
            theta: cfg.phase.unwrap_or(0.0),
            mix: mix(m),
            efficiency,
            shots,
            seed,
        };
        let h = simulate_configs(&state, &[config])?.remove(0);
        let mut out = h.to_json();
        out["provenance"] = provenance("simulate", &cfg);
        return pretty(&out);
    }
    let hists = simulate_configs(&state, &estimator_configs(point, efficiency, shots, seed))?;
    let estimate = estimate_from_histograms(&hists, &widths)?;
    let mut out = json!({
        "provenance": provenance("simulate", &cfg),
        "estimate": estimate,
        "direct_minor": second_order_minor(&state, point, &widths)?,
    });
    if let Some(tau) = cfg.ancilla_tau {
        let phys = physical_displacement(&state, point, tau)?;
        out["physical_displacement"] = json!({
            "ancilla_tau": tau,
            "ancilla_a": [phys.ancillas.0.re, phys.ancillas.0.im],
            "ancilla_b": [phys.ancillas.1.re, phys.ancillas.1.im],
            "fidelity": phys.fidelity,
        });
    }
    pretty(&out)
}

fn hierarchy(mut cfg: RunConfig) -> Result<String> {
    json_only(&cfg, "hierarchy")?;
    let point = point_or_origin(&cfg)?;
    let top = cfg.order.unwrap_or(3);
    if top == 0 {
        return Err(Error::InvalidArgument("--order must be at least 1".into()));
    }
    // Leave room for the partial-transpose comparison.
    let state = setup_with_floor(&mut cfg, &[point], 2 * top.min(3) + 2)?;
    let sigma = single_width(&cfg)?;
    let tol = detect_tol(&cfg);
    let orders = (1..=top)
        .map(|k| {
            let r = detect(&state, point, k, &WidthAssignment::uniform(sigma), tol)?;
            Ok(json!({
                "order": k,
                "min_eig": r.min_eigenvalue,
                "worst_minor": r.worst_minor,
                "verdict": r.verdict,
                "flags": r.flags,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    let k = top.min(3);
    let c = state.cutoff();
    let compression = if c.dim_a() >= 2 * k + 2 && c.dim_b() >= 2 * k + 2 {
        Some(ppt_compression_check(&state, point, k)?)
    } else {
        None
    };
    pretty(&json!({
        "provenance": provenance("hierarchy", &cfg),
        "point": point,
        "sigma": sigma.value(),
        "orders": orders,
        "ppt": ppt_min_eig_tol(&state, cfg.ppt_tol.unwrap_or(PPT_TOL))?,
        "compression_residual": compression,
    }))
}

fn validate(mut cfg: RunConfig) -> Result<String> {
    json_only(&cfg, "validate")?;
    let point = point_or_origin(&cfg)?;
    let state = setup(&mut cfg, &[point])?;
    let sigma = single_width(&cfg)?;
    let report = validate_derivative_identities(&state, point, sigma, cfg.step.unwrap_or(1e-3))?;
    pretty(&json!({ "provenance": provenance("validate", &cfg), "report": report }))
}
