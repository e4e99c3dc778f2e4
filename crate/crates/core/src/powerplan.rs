//! Two-phase power budget.
//!
//! A fraction `alpha` of the total power `P_total` pays for the intra-cluster
//! broadcast (`P1`), the rest for beamforming (`P2`). With each node needing
//! `P_s` to broadcast, the cluster holds `K = alpha * P_total / P_s` nodes,
//! rounded half away from zero and never below one.

use alloc::vec::Vec;

use crate::exec::{Executor, Sequential};
use crate::outage::{monte_carlo_outage_on, OutageConfig, OutageEstimate};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerAllocation {
    pub p_total: f64,
    pub alpha: f64,
    /// Broadcast-phase power, `alpha * p_total`.
    pub p1: f64,
    /// Beamforming-phase power, `p_total - p1`.
    pub p2: f64,
    /// Cluster size, once known.
    pub k: Option<usize>,
}

/// Splits `p_total` into broadcast and beamforming power.
pub fn split(p_total: f64, alpha: f64) -> Result<PowerAllocation> {
    if !(p_total > 0.0 && p_total.is_finite()) {
        return Err(Error::InvalidArgument("total power must be positive"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument("alpha must lie in (0, 1)"));
    }
    let p1 = alpha * p_total;
    let p2 = p_total - p1;
    Ok(PowerAllocation { p_total, alpha, p1, p2, k: None })
}

/// Real-valued cluster size `alpha * p_total / p_s`.
pub fn nominal_cluster_size(alpha: f64, p_total: f64, p_s: f64) -> f64 {
    alpha * p_total / p_s
}

/// Integer cluster size: nominal size rounded half away from zero.
pub fn cluster_size(alpha: f64, p_total: f64, p_s: f64) -> Result<usize> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument("alpha must lie in (0, 1)"));
    }
    if !(p_total > 0.0 && p_total.is_finite()) || !(p_s > 0.0 && p_s.is_finite()) {
        return Err(Error::InvalidArgument("powers must be positive"));
    }
    let nominal = nominal_cluster_size(alpha, p_total, p_s);
    if nominal < 0.5 {
        return Err(Error::InfeasibleAllocation("broadcast budget does not cover a single node"));
    }
    Ok(libm::round(nominal) as usize)
}

/// Intra-cluster broadcast link parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BroadcastSpec {
    /// Broadcast rate, bits/s/Hz.
    pub r_br: f64,
    /// Broadcast-channel noise variance.
    pub sigma_nbr2: f64,
    /// Per-node broadcast power.
    pub p_s: f64,
}

impl BroadcastSpec {
    pub fn new(r_br: f64, sigma_nbr2: f64, p_s: f64) -> Result<Self> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(r_br) || !positive(sigma_nbr2) || !positive(p_s) {
            return Err(Error::InvalidArgument("broadcast rate, noise and node power must be positive"));
        }
        Ok(Self { r_br, sigma_nbr2, p_s })
    }

    /// Least per-node power, `(2^R_br - 1) sigma_nbr^2`, for which one node's
    /// share of the broadcast is decodable.
    pub fn min_node_power(r_br: f64, sigma_nbr2: f64) -> f64 {
        (libm::exp2(r_br) - 1.0) * sigma_nbr2
    }
}

/// `K (2^R_br - 1) sigma_nbr^2`: least broadcast power for `k` nodes.
pub fn broadcast_power_bound(k: usize, spec: &BroadcastSpec) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("cluster must hold at least one node"));
    }
    Ok(k as f64 * BroadcastSpec::min_node_power(spec.r_br, spec.sigma_nbr2))
}

/// Relative slack on the broadcast bound, absorbing rounding in `alpha * p_total`.
const FEASIBILITY_SLACK: f64 = 1e-12;

/// Whether `p1` covers the broadcast bound for `k` nodes.
pub fn broadcast_feasible(p1: f64, k: usize, spec: &BroadcastSpec) -> bool {
    broadcast_power_bound(k, spec).is_ok_and(|bound| p1 >= bound * (1.0 - FEASIBILITY_SLACK))
}

/// Per-node power that keeps every `alpha` in `grid` broadcast-feasible when
/// `p_total = ratio * p_s`.
///
/// Rounding `K` up (e.g. 4.5 -> 5) asks more nodes to share `alpha * p_total`,
/// so the bare per-node minimum is raised by the worst rounding ratio on the
/// grid.
pub fn grid_feasible_node_power(grid: &[f64], ratio: f64, r_br: f64, sigma_nbr2: f64) -> Result<f64> {
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(Error::InvalidArgument("power ratio must be positive"));
    }
    let mut worst = 1.0f64;
    for &alpha in grid {
        let k = cluster_size(alpha, ratio, 1.0)?;
        worst = worst.max(k as f64 / nominal_cluster_size(alpha, ratio, 1.0));
    }
    Ok(BroadcastSpec::min_node_power(r_br, sigma_nbr2) * worst)
}

/// Why a grid point was left out of the optimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Infeasibility {
    /// Fewer than half a node's worth of broadcast power.
    NoNodes,
    /// `p1` is below the broadcast bound for the rounded cluster size.
    BroadcastBound { required: f64, available: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaPoint {
    pub alpha: f64,
    pub k_nominal: f64,
    /// Rounded cluster size; `None` when no node fits.
    pub k: Option<usize>,
    pub p1: f64,
    pub p2: f64,
    pub infeasible: Option<Infeasibility>,
    /// Monte Carlo estimate, feasible points only.
    pub estimate: Option<OutageEstimate>,
}

impl AlphaPoint {
    pub fn is_feasible(&self) -> bool {
        self.infeasible.is_none()
    }
}

/// Inputs to [`optimize_alpha`] besides the grid.
///
/// `base` supplies the receiver, rate, noise, trial budget, seed and gain
/// mode; its `k` and `p2` are overwritten per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSearch {
    pub p_total: f64,
    pub broadcast: BroadcastSpec,
    pub base: OutageConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaOptimum {
    pub alpha_star: f64,
    pub k_star: usize,
    pub p_out_star: OutageEstimate,
    /// Every grid point in ascending `alpha`, infeasible ones included.
    pub curve: Vec<AlphaPoint>,
}

impl AlphaOptimum {
    pub fn skipped(&self) -> impl Iterator<Item = &AlphaPoint> {
        self.curve.iter().filter(|p| !p.is_feasible())
    }
}

/// Allocation and feasibility for one `alpha`, without running Monte Carlo.
pub fn plan_point(alpha: f64, p_total: f64, broadcast: &BroadcastSpec) -> Result<AlphaPoint> {
    let alloc = split(p_total, alpha)?;
    let k_nominal = nominal_cluster_size(alpha, p_total, broadcast.p_s);
    let (k, infeasible) = match cluster_size(alpha, p_total, broadcast.p_s) {
        Ok(k) => {
            let required = broadcast_power_bound(k, broadcast)?;
            let flag = (!broadcast_feasible(alloc.p1, k, broadcast))
                .then_some(Infeasibility::BroadcastBound { required, available: alloc.p1 });
            (Some(k), flag)
        }
        Err(Error::InfeasibleAllocation(_)) => (None, Some(Infeasibility::NoNodes)),
        Err(e) => return Err(e),
    };
    Ok(AlphaPoint { alpha, k_nominal, k, p1: alloc.p1, p2: alloc.p2, infeasible, estimate: None })
}

/// Outage configuration for a feasible planned point.
pub fn point_config(point: &AlphaPoint, base: &OutageConfig) -> Option<OutageConfig> {
    let k = point.k?;
    point.is_feasible().then(|| OutageConfig { k, p2: point.p2, ..base.clone() })
}

/// Grid search for the outage-minimizing split.
pub fn optimize_alpha(grid: &[f64], search: &AlphaSearch) -> Result<AlphaOptimum> {
    optimize_alpha_on(grid, search, &Sequential)
}

/// [`optimize_alpha`] with Monte Carlo trials dispatched through `exec`.
///
/// Infeasible points stay in the curve, flagged, and never win. Ties go to
/// the smaller `alpha`.
pub fn optimize_alpha_on<E: Executor + ?Sized>(grid: &[f64], search: &AlphaSearch, exec: &E) -> Result<AlphaOptimum> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("alpha grid is empty"));
    }
    let mut alphas = grid.to_vec();
    alphas.sort_by(f64::total_cmp);
    let mut curve = Vec::with_capacity(alphas.len());
    for alpha in alphas {
        let mut point = plan_point(alpha, search.p_total, &search.broadcast)?;
        if let Some(cfg) = point_config(&point, &search.base) {
            point.estimate = Some(monte_carlo_outage_on(&cfg, exec)?);
        }
        curve.push(point);
    }
    let best = argmin(&curve).ok_or(Error::InfeasibleAllocation("no feasible alpha on the grid"))?;
    let point = &curve[best];
    Ok(AlphaOptimum {
        alpha_star: point.alpha,
        k_star: point.k.expect("feasible point has a cluster size"),
        p_out_star: point.estimate.expect("feasible point has an estimate"),
        curve,
    })
}

/// Index of the feasible point with the lowest estimate, first one on ties.
pub fn argmin(curve: &[AlphaPoint]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in curve.iter().enumerate() {
        let Some(est) = p.estimate.filter(|_| p.is_feasible()) else { continue };
        if best.is_none_or(|(_, v)| est.probability < v) {
            best = Some((i, est.probability));
        }
    }
    best.map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn split_examples() {
        let a = split(10.0, 0.3).unwrap();
        assert_eq!((a.p1, a.p2), (3.0, 7.0));
        let b = split(10.0, 0.5).unwrap();
        assert_eq!((b.p1, b.p2), (5.0, 5.0));
        let c = split(15.0, 0.4).unwrap();
        assert_eq!((c.p1, c.p2), (6.0, 9.0));
        assert!(split(10.0, 0.0).is_err());
        assert!(split(10.0, 1.0).is_err());
        assert!(split(0.0, 0.5).is_err());
    }

    #[test]
    fn cluster_size_examples() {
        assert_eq!(cluster_size(0.2, 15.0, 1.0).unwrap(), 3);
        assert_eq!(cluster_size(0.4, 15.0, 1.0).unwrap(), 6);
        assert_eq!(cluster_size(1.0 / 3.0, 15.0, 1.0).unwrap(), 5);
        // 15 * 0.3 = 4.5 rounds away from zero.
        assert_eq!(cluster_size(0.3, 15.0, 1.0).unwrap(), 5);
        assert_eq!(cluster_size(0.2, 4.0, 1.0).unwrap(), 1);
        // 0.4 nodes' worth of budget rounds to none.
        assert!(matches!(cluster_size(0.1, 4.0, 1.0), Err(Error::InfeasibleAllocation(_))));
        assert!(cluster_size(1.2, 15.0, 1.0).is_err());
    }

    #[test]
    fn broadcast_bound_examples() {
        let spec = BroadcastSpec::new(2.0, 1.0, 3.0).unwrap();
        assert_eq!(broadcast_power_bound(3, &spec).unwrap(), 9.0);
        assert_eq!(broadcast_power_bound(6, &spec).unwrap(), 18.0);
        let one = BroadcastSpec::new(1.0, 1.0, 1.0).unwrap();
        assert_eq!(broadcast_power_bound(1, &one).unwrap(), 1.0);
        assert!(broadcast_power_bound(0, &spec).is_err());

        assert!(broadcast_feasible(9.0, 3, &spec));
        assert!(!broadcast_feasible(8.99, 3, &spec));
        assert!(broadcast_feasible(18.0, 6, &spec));
        assert!(!broadcast_feasible(100.0, 0, &spec));
        assert!(BroadcastSpec::new(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn grid_node_power_makes_grid_feasible() {
        let grid: Vec<f64> = (0..13).map(|i| 0.2 + 0.05 * i as f64).collect();
        let p_s = grid_feasible_node_power(&grid, 15.0, 2.0, 1.0).unwrap();
        // Worst case on this grid is alpha = 0.3: K = 5 for a nominal 4.5.
        assert!((p_s - 3.0 * 5.0 / 4.5).abs() < 1e-12);
        let spec = BroadcastSpec::new(2.0, 1.0, p_s).unwrap();
        for &alpha in &grid {
            assert!(plan_point(alpha, 15.0 * p_s, &spec).unwrap().is_feasible(), "alpha {alpha}");
        }
        // Exactly integral grids need only the bare minimum.
        let p_s = grid_feasible_node_power(&[0.2, 0.4], 15.0, 2.0, 1.0).unwrap();
        assert!((p_s - 3.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_points_are_flagged() {
        let spec = BroadcastSpec::new(2.0, 1.0, 3.0).unwrap();
        // p_total = 45: alpha = 0.3 gives p1 = 13.5 < 5 * 3.
        let p = plan_point(0.3, 45.0, &spec).unwrap();
        assert_eq!(p.k, Some(5));
        assert!(matches!(p.infeasible, Some(Infeasibility::BroadcastBound { .. })));
        let p = plan_point(0.4, 45.0, &spec).unwrap();
        assert!(p.is_feasible());
        let p = plan_point(0.01, 45.0, &spec).unwrap();
        assert_eq!(p.infeasible, Some(Infeasibility::NoNodes));
    }

    fn search(seed: u64) -> AlphaSearch {
        let spec = BroadcastSpec::new(2.0, 1.0, 3.0).unwrap();
        let p_total = 45.0;
        let mut base = OutageConfig::new(3, 1, 3.0, 1.0, p_total / libm::pow(10.0, 0.6));
        base.trials = 3_000;
        base.seed = seed;
        AlphaSearch { p_total, broadcast: spec, base }
    }

    #[test]
    fn single_point_grid() {
        let s = search(4);
        let mut s = s;
        s.broadcast.p_s = 10.0 / 3.0;
        s.p_total = 50.0;
        let opt = optimize_alpha(&[0.3], &s).unwrap();
        assert_eq!(opt.alpha_star, 0.3);
        assert_eq!(opt.k_star, 5);
        assert_eq!(opt.curve.len(), 1);
        assert_eq!(Some(opt.p_out_star), opt.curve[0].estimate);
    }

    #[test]
    fn optimum_is_row_minimum_and_skips_infeasible() {
        let s = search(8);
        let grid = [0.6, 0.2, 0.3, 0.4, 0.5];
        let opt = optimize_alpha(&grid, &s).unwrap();
        let alphas: Vec<f64> = opt.curve.iter().map(|p| p.alpha).collect();
        assert_eq!(alphas, vec![0.2, 0.3, 0.4, 0.5, 0.6]);
        // 0.3 and 0.5 round K up and break the broadcast bound at P_s = 3.
        let skipped: Vec<f64> = opt.skipped().map(|p| p.alpha).collect();
        assert_eq!(skipped, vec![0.3, 0.5]);
        for p in &opt.curve {
            assert_eq!(p.estimate.is_some(), p.is_feasible());
            if let Some(e) = p.estimate {
                assert!(opt.p_out_star.probability <= e.probability);
            }
        }
        assert_eq!(optimize_alpha(&grid, &s).unwrap(), opt);
    }

    #[test]
    fn ties_prefer_smaller_alpha() {
        let est = OutageEstimate::from_counts(1, 10, 1.0);
        let pt = |alpha| AlphaPoint {
            alpha,
            k_nominal: 1.0,
            k: Some(1),
            p1: 1.0,
            p2: 1.0,
            infeasible: None,
            estimate: Some(est),
        };
        assert_eq!(argmin(&[pt(0.2), pt(0.3)]), Some(0));
    }

    #[test]
    fn empty_or_fully_infeasible_grid() {
        let s = search(1);
        assert!(optimize_alpha(&[], &s).is_err());
        assert!(matches!(optimize_alpha(&[0.3, 0.5], &s), Err(Error::InfeasibleAllocation(_))));
    }

    proptest! {
        #[test]
        fn split_is_exact(p_total in 1e-3f64..1e6, alpha in 0.001f64..0.999) {
            let a = split(p_total, alpha).unwrap();
            // p2 is p_total - p1, so the sum is off by at most one rounding.
            prop_assert!((a.p1 + a.p2 - p_total).abs() <= f64::EPSILON * p_total);
            prop_assert_eq!(a.p1, alpha * p_total);
        }

        #[test]
        fn cluster_size_non_decreasing(ratio in 2.0f64..40.0, a in 0.05f64..0.95, b in 0.05f64..0.95) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            if let (Ok(kl), Ok(kh)) = (cluster_size(lo, ratio, 1.0), cluster_size(hi, ratio, 1.0)) {
                prop_assert!(kl <= kh);
            }
        }

        #[test]
        fn bound_is_linear_in_k(k in 1usize..1000, r in 0.1f64..6.0, sigma in 0.01f64..10.0) {
            let spec = BroadcastSpec::new(r, sigma, 1.0).unwrap();
            let one = broadcast_power_bound(k, &spec).unwrap();
            let two = broadcast_power_bound(2 * k, &spec).unwrap();
            prop_assert!((two - 2.0 * one).abs() <= 1e-12 * two);
        }
    }
}
