//! The four experiments: alpha sweep, SNR sweep, correlation sweep and a
//! single operating point.
//!
//! All grid points share the master seed, so curves are compared under
//! common random numbers. Output rows are ordered by grid key.

use coopbeam_core::baseline::{mimo_outage_on, MimoConfig};
use coopbeam_core::chanmodel::exponential_correlation;
use coopbeam_core::db_to_linear;
use coopbeam_core::exec::Executor;
use coopbeam_core::outage::{
    analytical_outage_variant, monte_carlo_outage_on, BoundVariant, OutageConfig, OutageEstimate,
};
use coopbeam_core::powerplan::{
    argmin, grid_feasible_node_power, optimize_alpha_on, plan_point, point_config, AlphaOptimum, AlphaPoint,
    AlphaSearch, BroadcastSpec, Infeasibility,
};

use crate::analysis::{crossings, ls_slope};
use crate::config::{Experiment, ExperimentConfig};
use crate::error::HarnessError;
use crate::output::{flag, num, opt, Report, Table};

/// Power budget shared by every point of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub p_s: f64,
    pub p_total: f64,
    pub broadcast: BroadcastSpec,
}

impl Budget {
    /// Uses the configured `P_s`, or the smallest one keeping the whole
    /// alpha grid broadcast-feasible after rounding `K`.
    pub fn for_config(cfg: &ExperimentConfig) -> Result<Self, HarnessError> {
        let p_s = match cfg.p_s {
            Some(p) => p,
            None => grid_feasible_node_power(&cfg.alpha_grid, cfg.ratio_ptotal_ps, cfg.r_br, cfg.sigma_nbr2)?,
        };
        Ok(Self {
            p_s,
            p_total: cfg.ratio_ptotal_ps * p_s,
            broadcast: BroadcastSpec::new(cfg.r_br, cfg.sigma_nbr2, p_s)?,
        })
    }

    /// Noise variance giving overall SNR `p_total / sigma^2 = snr_db`.
    pub fn sigma_n2(&self, snr_db: f64) -> f64 {
        self.p_total / db_to_linear(snr_db)
    }
}

fn base_config(cfg: &ExperimentConfig) -> OutageConfig {
    OutageConfig {
        trials: cfg.trials,
        seed: cfg.seed,
        gain_mode: cfg.gain_mode,
        correlation_scaling: cfg.corr_scaling,
        ..OutageConfig::new(cfg.m, 1, cfg.r_tr, 1.0, 1.0)
    }
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut v = v.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn required_power(p: &AlphaPoint) -> Option<f64> {
    match p.infeasible {
        Some(Infeasibility::BroadcastBound { required, .. }) => Some(required),
        _ => None,
    }
}

fn list(v: &[f64]) -> String {
    if v.is_empty() {
        "none".into()
    } else {
        v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(",")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaGroup {
    pub snr_db: f64,
    pub sigma_n2: f64,
    pub optimum: AlphaOptimum,
    /// Analytical outage per curve point, where `K` is defined.
    pub analytical: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSweep {
    pub budget: Budget,
    pub groups: Vec<AlphaGroup>,
    pub report: Report,
}

impl AlphaSweep {
    pub fn alpha_star(&self, snr_db: f64) -> Option<f64> {
        self.groups.iter().find(|g| g.snr_db == snr_db).map(|g| g.optimum.alpha_star)
    }
}

const ALPHA_COLUMNS: &[&str] = &[
    "kind",
    "snr_db",
    "alpha",
    "k_real",
    "k",
    "feasible",
    "p1",
    "p2",
    "sigma_n2",
    "broadcast_required",
    "p_out_mc",
    "std_err",
    "p_out_analytical",
];

fn alpha_row(kind: &str, g_snr: f64, sigma_n2: f64, p: &AlphaPoint, analytical: Option<f64>) -> Vec<String> {
    vec![
        kind.into(),
        num(g_snr),
        num(p.alpha),
        num(p.k_nominal),
        opt(p.k),
        flag(p.is_feasible()),
        num(p.p1),
        num(p.p2),
        num(sigma_n2),
        opt(required_power(p).map(num)),
        opt(p.estimate.map(|e| num(e.probability))),
        opt(p.estimate.map(|e| num(e.std_error))),
        opt(analytical.map(num)),
    ]
}

/// Outage against the split `alpha` at each SNR, with the per-SNR optimum.
pub fn run_alpha_sweep<E: Executor + ?Sized>(cfg: &ExperimentConfig, exec: &E) -> Result<AlphaSweep, HarnessError> {
    cfg.validate()?;
    let budget = Budget::for_config(cfg)?;
    let mut table = Table::new(ALPHA_COLUMNS);
    let mut groups = Vec::new();
    let mut skipped = 0;
    for snr_db in sorted(&cfg.snr_db_grid) {
        let sigma_n2 = budget.sigma_n2(snr_db);
        let search = AlphaSearch {
            p_total: budget.p_total,
            broadcast: budget.broadcast,
            base: OutageConfig { sigma_n2, ..base_config(cfg) },
        };
        let optimum = optimize_alpha_on(&cfg.alpha_grid, &search, exec)?;
        let analytical: Vec<Option<f64>> = optimum
            .curve
            .iter()
            .map(|p| {
                p.k.map(|k| analytical_outage_variant(cfg.bound_variant, cfg.m, k, cfg.r_tr, p.p2, sigma_n2))
                    .transpose()
            })
            .collect::<Result<_, _>>()?;
        for (p, a) in optimum.curve.iter().zip(&analytical) {
            table.push(alpha_row("data", snr_db, sigma_n2, p, *a));
        }
        let best = check_summary(&optimum, snr_db)?;
        table.push(alpha_row("alpha_star", snr_db, sigma_n2, &optimum.curve[best], analytical[best]));
        skipped = optimum.skipped().count();
        groups.push(AlphaGroup { snr_db, sigma_n2, optimum, analytical });
    }
    let mut results = vec![("infeasible_alpha_points_per_snr".to_string(), skipped.to_string())];
    for g in &groups {
        results.push((format!("alpha_star_at_{}db", num(g.snr_db)), num(g.optimum.alpha_star)));
    }
    let report = Report::new(cfg, budget.p_s, budget.p_total, table, results);
    Ok(AlphaSweep { budget, groups, report })
}

/// Recomputes the row-wise minimum over feasible rows and checks it against
/// the reported optimum.
fn check_summary(opt: &AlphaOptimum, snr_db: f64) -> Result<usize, HarnessError> {
    let feasible: Vec<(usize, f64)> = opt
        .curve
        .iter()
        .enumerate()
        .filter(|(_, p)| p.is_feasible())
        .filter_map(|(i, p)| p.estimate.map(|e| (i, e.probability)))
        .collect();
    let min = feasible.iter().map(|&(_, v)| v).fold(f64::INFINITY, f64::min);
    let first = feasible.iter().find(|&&(_, v)| v == min).map(|&(i, _)| i);
    match first {
        Some(i) if opt.curve[i].alpha == opt.alpha_star && Some(i) == argmin(&opt.curve) => Ok(i),
        _ => {
            Err(HarnessError::Consistency(format!("alpha* = {} at {snr_db} dB is not the row minimum", opt.alpha_star)))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub id: String,
    /// `None` for the MIMO baseline.
    pub alpha: Option<f64>,
    pub k: Option<usize>,
    pub feasible: bool,
    /// One entry per SNR; `None` where the point is infeasible.
    pub estimates: Vec<Option<OutageEstimate>>,
}

impl Series {
    pub fn probabilities(&self) -> Option<Vec<f64>> {
        self.estimates.iter().map(|e| e.map(|e| e.probability)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnrSweep {
    pub budget: Budget,
    pub snr_db: Vec<f64>,
    pub series: Vec<Series>,
    pub report: Report,
}

impl SnrSweep {
    pub fn series(&self, id: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.id == id)
    }

    /// Lowest outage among the feasible alpha series at each SNR.
    pub fn best_alpha_envelope(&self) -> Option<Vec<f64>> {
        envelope(&self.series, self.snr_db.len())
    }
}

fn envelope(series: &[Series], len: usize) -> Option<Vec<f64>> {
    let curves: Vec<Vec<f64>> = series.iter().filter(|s| s.alpha.is_some()).filter_map(Series::probabilities).collect();
    if curves.is_empty() {
        return None;
    }
    Some((0..len).map(|i| curves.iter().map(|c| c[i]).fold(f64::INFINITY, f64::min)).collect())
}

pub fn alpha_series_id(alpha: f64) -> String {
    format!("alpha_{}", num(alpha))
}

pub fn mimo_series_id(n: usize) -> String {
    format!("mimo{n}x{n}")
}

/// Outage against SNR for each split in the alpha grid, plus the MIMO
/// baseline at equal total power.
pub fn run_snr_sweep<E: Executor + ?Sized>(cfg: &ExperimentConfig, exec: &E) -> Result<SnrSweep, HarnessError> {
    cfg.validate()?;
    let budget = Budget::for_config(cfg)?;
    let snrs = sorted(&cfg.snr_db_grid);
    let base = base_config(cfg);
    let mut series = Vec::new();
    let mut points = Vec::new();
    for alpha in sorted(&cfg.alpha_grid) {
        let point = plan_point(alpha, budget.p_total, &budget.broadcast)?;
        let estimates = snrs
            .iter()
            .map(|&snr_db| {
                let base = OutageConfig { sigma_n2: budget.sigma_n2(snr_db), ..base.clone() };
                point_config(&point, &base).map(|c| monte_carlo_outage_on(&c, exec)).transpose()
            })
            .collect::<Result<_, _>>()?;
        series.push(Series {
            id: alpha_series_id(alpha),
            alpha: Some(alpha),
            k: point.k,
            feasible: point.is_feasible(),
            estimates,
        });
        points.push(Some(point));
    }
    let n = cfg.mimo_antennas;
    if cfg.baseline {
        let template = MimoConfig {
            n_tx: n,
            n_rx: n,
            trials: cfg.trials,
            seed: cfg.seed,
            ..MimoConfig::new(budget.p_total, 1.0, cfg.r_tr)
        };
        let estimates = snrs
            .iter()
            .map(|&snr_db| {
                let m = MimoConfig { sigma_n2: budget.sigma_n2(snr_db), ..template };
                mimo_outage_on(&m, exec).map(Some)
            })
            .collect::<Result<_, _>>()?;
        series.push(Series { id: mimo_series_id(n), alpha: None, k: Some(n), feasible: true, estimates });
        points.push(None);
    }

    let mut table =
        Table::new(&["snr_db", "series_id", "alpha", "k", "feasible", "p1", "p2", "sigma_n2", "p_out", "std_err"]);
    for (i, &snr_db) in snrs.iter().enumerate() {
        for (s, point) in series.iter().zip(&points) {
            let est = s.estimates[i];
            table.push(vec![
                num(snr_db),
                s.id.clone(),
                opt(s.alpha.map(num)),
                opt(s.k),
                flag(s.feasible),
                opt(point.as_ref().map(|p| num(p.p1))),
                num(point.as_ref().map_or(budget.p_total, |p| p.p2)),
                num(budget.sigma_n2(snr_db)),
                opt(est.map(|e| num(e.probability))),
                opt(est.map(|e| num(e.std_error))),
            ]);
        }
    }

    let results = snr_results(&snrs, &series, n, cfg.baseline);
    let report = Report::new(cfg, budget.p_s, budget.p_total, table, results);
    Ok(SnrSweep { budget, snr_db: snrs, series, report })
}

fn snr_results(x: &[f64], series: &[Series], n: usize, baseline: bool) -> Vec<(String, String)> {
    let alphas: Vec<(&Series, Vec<f64>)> =
        series.iter().filter(|s| s.alpha.is_some()).filter_map(|s| s.probabilities().map(|p| (s, p))).collect();
    let mut out = Vec::new();
    for pair in alphas.windows(2) {
        let (lo, hi) = (&pair[0], &pair[1]);
        out.push((format!("crossover_db[{}|{}]", lo.0.id, hi.0.id), list(&crossings(x, &hi.1, &lo.1))));
    }
    let mimo_id = mimo_series_id(n);
    let mimo = series.iter().find(|s| s.id == mimo_id).filter(|_| baseline).and_then(Series::probabilities);
    if let Some(mimo) = mimo {
        for (s, p) in &alphas {
            out.push((format!("crossover_db[{}|{mimo_id}]", s.id), list(&crossings(x, p, &mimo))));
        }
        if let Some(env) = envelope(series, x.len()) {
            out.push((format!("crossover_db[best_alpha|{mimo_id}]"), list(&crossings(x, &env, &mimo))));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrPoint {
    pub snr_db: f64,
    pub alpha: f64,
    pub k: Option<usize>,
    pub corr_r: f64,
    pub rho_level: f64,
    pub estimate: Option<OutageEstimate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrSweep {
    pub budget: Budget,
    pub points: Vec<CorrPoint>,
    pub report: Report,
}

impl CorrSweep {
    /// Points at one SNR and split, in ascending correlation.
    pub fn slice(&self, snr_db: f64, alpha: f64) -> Vec<&CorrPoint> {
        self.points.iter().filter(|p| p.snr_db == snr_db && p.alpha == alpha).collect()
    }
}

/// Outage against receive correlation under the exponential model.
pub fn run_corr_sweep<E: Executor + ?Sized>(cfg: &ExperimentConfig, exec: &E) -> Result<CorrSweep, HarnessError> {
    cfg.validate()?;
    let budget = Budget::for_config(cfg)?;
    let alphas = sorted(&cfg.alpha_grid);
    let rs = sorted(&cfg.corr_r_grid);
    let corrs = rs.iter().map(|&r| exponential_correlation(cfg.m, r)).collect::<Result<Vec<_>, _>>()?;
    let plans =
        alphas.iter().map(|&a| plan_point(a, budget.p_total, &budget.broadcast)).collect::<Result<Vec<_>, _>>()?;
    let base = base_config(cfg);
    let mut table =
        Table::new(&["snr_db", "alpha", "k", "feasible", "corr_r", "rho_level", "p2", "sigma_n2", "p_out", "std_err"]);
    let mut points = Vec::new();
    for snr_db in sorted(&cfg.snr_db_grid) {
        let sigma_n2 = budget.sigma_n2(snr_db);
        for plan in &plans {
            for (&corr_r, c) in rs.iter().zip(&corrs) {
                let base = OutageConfig { sigma_n2, correlation: Some(c.clone()), ..base.clone() };
                let estimate = point_config(plan, &base).map(|c| monte_carlo_outage_on(&c, exec)).transpose()?;
                table.push(vec![
                    num(snr_db),
                    num(plan.alpha),
                    opt(plan.k),
                    flag(plan.is_feasible()),
                    num(corr_r),
                    num(c.level()),
                    num(plan.p2),
                    num(sigma_n2),
                    opt(estimate.map(|e| num(e.probability))),
                    opt(estimate.map(|e| num(e.std_error))),
                ]);
                points.push(CorrPoint { snr_db, alpha: plan.alpha, k: plan.k, corr_r, rho_level: c.level(), estimate });
            }
        }
    }
    let mut results = Vec::new();
    for snr_db in sorted(&cfg.snr_db_grid) {
        for &alpha in &alphas {
            let slice: Vec<(f64, f64)> = points
                .iter()
                .filter(|p| p.snr_db == snr_db && p.alpha == alpha)
                .filter_map(|p| p.estimate.map(|e| (p.rho_level, e.probability)))
                .collect();
            let (x, y): (Vec<f64>, Vec<f64>) = slice.into_iter().unzip();
            if let Some(s) = ls_slope(&x, &y) {
                results.push((format!("slope_vs_rho[{}@{}db]", alpha_series_id(alpha), num(snr_db)), num(s)));
            }
        }
    }
    let report = Report::new(cfg, budget.p_s, budget.p_total, table, results);
    Ok(CorrSweep { budget, points, report })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinglePoint {
    pub budget: Budget,
    pub snr_db: f64,
    pub sigma_n2: f64,
    pub point: AlphaPoint,
    pub estimate: Option<OutageEstimate>,
    pub analytical_printed: Option<f64>,
    pub analytical_complex: Option<f64>,
    pub report: Report,
}

impl SinglePoint {
    /// Human-readable summary.
    pub fn describe(&self) -> String {
        let p = &self.point;
        let mut s = format!(
            "alpha = {}, snr = {} dB (P_total = {}, sigma_n^2 = {})\n\
             P1 = {}, P2 = {}, P1/P_total = {}\n\
             K = {} (nominal {})\n",
            num(p.alpha),
            num(self.snr_db),
            num(self.budget.p_total),
            num(self.sigma_n2),
            num(p.p1),
            num(p.p2),
            num(p.p1 / self.budget.p_total),
            opt(p.k),
            num(p.k_nominal),
        );
        match p.infeasible {
            None => s.push_str("broadcast feasible: yes\n"),
            Some(Infeasibility::NoNodes) => s.push_str("broadcast feasible: no (budget covers no node)\n"),
            Some(Infeasibility::BroadcastBound { required, available }) => {
                s.push_str(&format!("broadcast feasible: no (needs P1 >= {}, has {})\n", num(required), num(available)))
            }
        }
        if let Some(e) = self.estimate {
            s.push_str(&format!(
                "P_out (Monte Carlo, {} trials) = {} +/- {}\n",
                e.trials,
                num(e.probability),
                num(e.std_error)
            ));
        }
        if let (Some(a), Some(b)) = (self.analytical_printed, self.analytical_complex) {
            s.push_str(&format!("P_out analytical: printed = {}, complex-convention = {}\n", num(a), num(b)));
        }
        s
    }
}

/// One `(alpha, SNR)` point with full detail.
///
/// An infeasible point still yields a report; the caller decides how to
/// surface it.
pub fn run_single_point<E: Executor + ?Sized>(cfg: &ExperimentConfig, exec: &E) -> Result<SinglePoint, HarnessError> {
    cfg.validate()?;
    let budget = Budget::for_config(cfg)?;
    let (alpha, snr_db) = (cfg.alpha_grid[0], cfg.snr_db_grid[0]);
    let sigma_n2 = budget.sigma_n2(snr_db);
    let point = plan_point(alpha, budget.p_total, &budget.broadcast)?;
    let base = OutageConfig { sigma_n2, ..base_config(cfg) };
    let estimate = point_config(&point, &base).map(|c| monte_carlo_outage_on(&c, exec)).transpose()?;
    let bound = |v: BoundVariant| {
        point.k.map(|k| analytical_outage_variant(v, cfg.m, k, cfg.r_tr, point.p2, sigma_n2)).transpose()
    };
    let analytical_printed = bound(BoundVariant::Printed)?;
    let analytical_complex = bound(BoundVariant::ComplexConvention)?;

    let mut table = Table::new(&[
        "alpha",
        "snr_db",
        "p_total",
        "p1",
        "p2",
        "k_real",
        "k",
        "feasible",
        "broadcast_required",
        "sigma_n2",
        "p_out_mc",
        "std_err",
        "p_out_printed",
        "p_out_complex_convention",
    ]);
    table.push(vec![
        num(alpha),
        num(snr_db),
        num(budget.p_total),
        num(point.p1),
        num(point.p2),
        num(point.k_nominal),
        opt(point.k),
        flag(point.is_feasible()),
        opt(point.k.map(|k| num(k as f64 * BroadcastSpec::min_node_power(cfg.r_br, cfg.sigma_nbr2)))),
        num(sigma_n2),
        opt(estimate.map(|e| num(e.probability))),
        opt(estimate.map(|e| num(e.std_error))),
        opt(analytical_printed.map(num)),
        opt(analytical_complex.map(num)),
    ]);
    let mut results = Vec::new();
    if cfg.trials == 1 {
        results.push(("warning".to_string(), "trials = 1: estimate is 0 or 1 with zero standard error".to_string()));
    }
    let report = Report::new(cfg, budget.p_s, budget.p_total, table, results);
    Ok(SinglePoint { budget, snr_db, sigma_n2, point, estimate, analytical_printed, analytical_complex, report })
}

/// Runs whichever experiment `cfg` selects.
pub fn run<E: Executor + ?Sized>(cfg: &ExperimentConfig, exec: &E) -> Result<Report, HarnessError> {
    Ok(match cfg.experiment {
        Experiment::AlphaSweep => run_alpha_sweep(cfg, exec)?.report,
        Experiment::SnrSweep => run_snr_sweep(cfg, exec)?.report,
        Experiment::CorrSweep => run_corr_sweep(cfg, exec)?.report,
        Experiment::SinglePoint => run_single_point(cfg, exec)?.report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use coopbeam_core::exec::Sequential;

    fn small(e: Experiment) -> ExperimentConfig {
        ExperimentConfig { trials: 500, ..ExperimentConfig::defaults(e) }
    }

    #[test]
    fn default_budget_keeps_grid_feasible() {
        let cfg = small(Experiment::AlphaSweep);
        let b = Budget::for_config(&cfg).unwrap();
        assert!((b.p_s - 10.0 / 3.0).abs() < 1e-12);
        for &a in &cfg.alpha_grid {
            assert!(plan_point(a, b.p_total, &b.broadcast).unwrap().is_feasible(), "alpha {a}");
        }
    }

    #[test]
    fn single_alpha_single_snr() {
        let cfg = ExperimentConfig { alpha_grid: vec![0.4], snr_db_grid: vec![4.0], ..small(Experiment::AlphaSweep) };
        let sweep = run_alpha_sweep(&cfg, &Sequential).unwrap();
        let kinds: Vec<&str> = sweep.report.table.rows.iter().map(|r| r[0].as_str()).collect();
        assert_eq!(kinds, ["data", "alpha_star"]);
    }

    #[test]
    fn infeasible_rows_are_flagged_not_dropped() {
        // Bare minimum P_s: rounding K up at alpha = 0.3 breaks the bound.
        let cfg = ExperimentConfig {
            p_s: Some(3.0),
            alpha_grid: vec![0.2, 0.3, 0.4],
            snr_db_grid: vec![6.0],
            ..small(Experiment::AlphaSweep)
        };
        let sweep = run_alpha_sweep(&cfg, &Sequential).unwrap();
        let rows = &sweep.report.table.rows;
        assert_eq!(rows.len(), 4);
        let feasible = sweep.report.table.column("feasible").unwrap();
        assert_eq!(rows[1][feasible], "0");
        assert_eq!(rows[1][sweep.report.table.column("p_out_mc").unwrap()], "");
        assert_ne!(sweep.groups[0].optimum.alpha_star, 0.3);
    }

    #[test]
    fn single_point_defaults() {
        let sp = run_single_point(&small(Experiment::SinglePoint), &Sequential).unwrap();
        assert_eq!(sp.point.k, Some(6));
        assert!((sp.point.p1 / sp.budget.p_total - 0.4).abs() < 1e-15);
        assert!(sp.point.is_feasible());
        assert_ne!(sp.analytical_printed, sp.analytical_complex);
        assert!(sp.describe().contains("broadcast feasible: yes"));
    }

    #[test]
    fn single_point_can_be_infeasible() {
        let cfg = ExperimentConfig { p_s: Some(2.0), ..small(Experiment::SinglePoint) };
        let sp = run_single_point(&cfg, &Sequential).unwrap();
        assert!(!sp.point.is_feasible());
        assert!(sp.estimate.is_none());
    }
}
