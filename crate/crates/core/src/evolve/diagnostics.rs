use super::EnergyLog;
use crate::error::{Error, Result};
use crate::kernel::HighFreqBound;
use crate::norms::{sobolev_norm, SobolevIndex};
use crate::report::{json_num, ExperimentReport};
use crate::trajectory::Trajectory;

/// Relative roundoff allowance in the Gronwall comparison.
pub const ENERGY_RTOL: f64 = 1e-10;
/// Largest accepted max/min ratio of the weighted smoothing profile.
pub const SMOOTHING_SPREAD_MAX: f64 = 10.0;

/// Checks `l2sq(t) <= exp(2 c_low (t - t0)) l2sq(t0)` for every sampled
/// pair `t0 < t`, using the certified `c_low` of `bound`.
///
/// One row per `t0` reports its tightest pair; `rel_margin` is
/// `(rhs - lhs) / rhs`.
pub fn energy_check(log: &EnergyLog, bound: &HighFreqBound) -> ExperimentReport {
    let mut report = ExperimentReport::new("energy_check", &["t0", "t", "lhs", "rhs", "rel_margin", "pass"]);
    let c = bound.c_low;
    let k = log.len();
    let mut pairs = 0usize;
    let mut failures = 0usize;
    let mut worst = f64::INFINITY;
    for a in 0..k {
        let mut row: Option<(f64, f64, f64, f64)> = None;
        for b in a + 1..k {
            pairs += 1;
            let lhs = log.l2sq[b];
            let rhs = (2.0 * c * (log.times[b] - log.times[a])).exp() * log.l2sq[a];
            let ok = lhs <= rhs * (1.0 + ENERGY_RTOL);
            if !ok {
                failures += 1;
            }
            let margin = if rhs > 0.0 {
                (rhs - lhs) / rhs
            } else if lhs == 0.0 {
                0.0
            } else {
                f64::NEG_INFINITY
            };
            if row.is_none_or(|r| margin < r.3) {
                row = Some((log.times[b], lhs, rhs, margin));
            }
        }
        if let Some((t, lhs, rhs, margin)) = row {
            worst = worst.min(margin);
            report.push_row(vec![
                log.times[a].into(),
                t.into(),
                lhs.into(),
                rhs.into(),
                margin.into(),
                (lhs <= rhs * (1.0 + ENERGY_RTOL)).into(),
            ]);
        }
    }
    report.pass = failures == 0;
    report.set_summary("c_low", json_num(c));
    report.set_summary("pairs", pairs);
    report.set_summary("failures", failures);
    report.set_summary("worst_rel_margin", json_num(if pairs == 0 { 0.0 } else { worst }));
    report
}

/// Tabulates `t^{(sigma - s)/4} ||u(t)||_{H^sigma}` over the positive sample
/// times. PASS when the profile is finite and its max/min ratio stays
/// below [`SMOOTHING_SPREAD_MAX`].
pub fn smoothing_profile(traj: &Trajectory, s: SobolevIndex, sigma: SobolevIndex) -> Result<ExperimentReport> {
    if sigma.value() <= s.value() {
        return Err(Error::InvalidSobolev(format!(
            "sigma > s required, got sigma={sigma} s={s}"
        )));
    }
    let power = (sigma.value() - s.value()) / 4.0;
    let mut report = ExperimentReport::new("smoothing_profile", &["t", "hsigma_norm", "weighted"]);
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for (t, u) in traj.iter().filter(|(t, _)| *t > 0.0) {
        let norm = sobolev_norm(u, sigma);
        let w = t.powf(power) * norm;
        lo = lo.min(w);
        hi = hi.max(w);
        report.push_row(vec![t.into(), norm.into(), w.into()]);
    }
    if report.rows.is_empty() {
        return Err(Error::InvalidConfig("trajectory has no samples with t > 0".into()));
    }
    let spread = hi / lo;
    report.pass = hi.is_finite() && spread.is_finite() && spread < SMOOTHING_SPREAD_MAX;
    report.set_summary("weight_power", json_num(power));
    report.set_summary("max", json_num(hi));
    report.set_summary("min", json_num(lo));
    report.set_summary("spread", json_num(spread));
    Ok(report)
}
