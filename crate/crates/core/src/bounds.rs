//! Threshold formulas and explicit finite-`n` probability bounds.
//!
//! Asymptotic `ω(1)` terms are replaced by a caller-supplied `slack` in
//! natural-log units (default 0). All logarithms are natural.

use serde::{Deserialize, Serialize, Serializer};

use crate::combinatorics::CycleType;
use crate::error::{Error, Result};
use crate::model::{format_ratio, pair_count, JointEdgeDistribution, PROB_TOL};

/// `p00` at or above this marks the sparse regime.
pub const SPARSE_P00_CUTOFF: f64 = 0.99;
/// `p11 p00 / (p01 p10)` at or above this marks significant correlation.
pub const SIGNIFICANT_RATIO_CUTOFF: f64 = 100.0;
/// Relative slack for threshold comparisons, so that a law placed exactly on
/// a boundary is not rejected by rounding.
pub const BOUNDARY_REL_TOL: f64 = 1e-12;

fn check_n(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::InvalidInput(format!("n = {n}, need n >= 3")));
    }
    Ok(())
}

fn check_slack(slack: f64) -> Result<()> {
    if !(slack >= 0.0 && slack.is_finite()) {
        return Err(Error::InvalidInput(format!("slack = {slack} must be finite and >= 0")));
    }
    Ok(())
}

fn at_least(value: f64, threshold: f64) -> bool {
    value >= threshold * (1.0 - BOUNDARY_REL_TOL)
}

fn achievability_level(n: usize, slack: f64) -> f64 {
    2.0 * ((n as f64).ln() + slack) / n as f64
}

fn converse_level(n: usize, slack: f64) -> f64 {
    ((n as f64).ln() - slack) / n as f64
}

/// `2 (ln n + slack) / n`: `q` at or above this admits a deanonymizer.
pub fn achievability_q_threshold(n: usize, slack: f64) -> Result<f64> {
    check_n(n)?;
    check_slack(slack)?;
    Ok(achievability_level(n, slack))
}

/// Sparse, significantly correlated regime: `(achievability, converse)`
/// thresholds on `p11`.
pub fn sparse_thresholds(n: usize, slack: f64) -> Result<(f64, f64)> {
    check_n(n)?;
    check_slack(slack)?;
    Ok((achievability_level(n, slack), converse_level(n, slack)))
}

/// Negatively correlated regime: `(achievability, converse)` thresholds on
/// the product `p01 p10`.
pub fn negative_thresholds(n: usize, slack: f64) -> Result<(f64, f64)> {
    sparse_thresholds(n, slack)
}

/// Earlier sufficient condition for symmetric laws:
/// `p11^2 / (p10 + p01 + p11) >= 8 (ln n + slack) / n`.
pub fn pg_condition(p: &JointEdgeDistribution, n: usize, slack: f64) -> Result<bool> {
    check_n(n)?;
    check_slack(slack)?;
    if (p.p10 - p.p01).abs() > PROB_TOL {
        return Err(Error::InvalidInput(format!(
            "condition requires p10 = p01, got {} and {}",
            p.p10, p.p01
        )));
    }
    if p.p11 == 0.0 {
        return Ok(false);
    }
    let lhs = p.p11 * p.p11 / (p.p10 + p.p01 + p.p11);
    Ok(at_least(lhs, 4.0 * achievability_level(n, slack)))
}

/// Union bound on `P[some π ≠ id has d(π) <= 0]`:
/// with `x = n exp(-q (n-2) / 2)`, `x^2 / (1 - x)` capped at 1, and 1 when
/// `x >= 1`.
pub fn union_bound_failure(n: usize, q: f64) -> Result<f64> {
    check_n(n)?;
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidInput(format!("q = {q} outside [0, 1]")));
    }
    let x = n as f64 * (-q * (n as f64 - 2.0) / 2.0).exp();
    if x >= 1.0 {
        return Ok(1.0);
    }
    Ok((x * x / (1.0 - x)).min(1.0))
}

/// `E[d(π)] = 2 (N - c_1) (p00 p11 - p01 p10)`.
pub fn expected_d(ct: &CycleType, p: &JointEdgeDistribution) -> f64 {
    2.0 * ct.non_fixed() as f64 * (p.p00 * p.p11 - p.p01 * p.p10)
}

/// Moments of the isolated-vertex count of `ER(n, p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsolatedMoments {
    pub mean: f64,
    pub second_moment: f64,
}

impl IsolatedMoments {
    pub fn variance(&self) -> f64 {
        (self.second_moment - self.mean * self.mean).max(0.0)
    }
}

pub fn isolated_moments(n: usize, p: f64) -> IsolatedMoments {
    let nf = n as f64;
    let mean = nf * (1.0 - p).powf(nf - 1.0);
    let pairs = pair_count(n) as f64;
    let second_moment = 2.0 * pairs * (1.0 - p).powf(2.0 * nf - 3.0) + mean;
    IsolatedMoments { mean, second_moment }
}

fn ln_factorial(k: u64) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// Upper bound on the success probability of any deanonymizer, from the
/// isolated vertices of `G_a ∩ G_b ~ ER(n, p11)`:
/// `P[X <= E/2] + 1/floor(E/2)!` with Chebyshev for the first term.
pub fn converse_success_bound(n: usize, p11: f64) -> Result<f64> {
    check_n(n)?;
    if !(0.0..=1.0).contains(&p11) {
        return Err(Error::InvalidProbability(format!("p11 = {p11}")));
    }
    let m = isolated_moments(n, p11);
    if m.mean <= 0.0 {
        return Ok(1.0);
    }
    let chebyshev = 4.0 * m.variance() / (m.mean * m.mean);
    let half = (m.mean / 2.0).floor() as u64;
    let automorphism_term = (-ln_factorial(half)).exp();
    Ok((chebyshev + automorphism_term).min(1.0))
}

/// One row of the correlation/density trade-off plot, in units of
/// `n p1* / ln n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub s: f64,
    /// Converse: `1/s`.
    pub lb: f64,
    /// Achievability: `2/s`.
    pub ub: f64,
    /// Earlier sufficient condition: `8 (2 - s) / s^2`.
    pub pg: f64,
}

pub fn tradeoff_curves(s_grid: &[f64]) -> Result<Vec<CurveRow>> {
    s_grid
        .iter()
        .map(|&s| {
            if !(s > 0.0 && s <= 1.0) {
                return Err(Error::InvalidInput(format!("s = {s} outside (0, 1]")));
            }
            Ok(CurveRow {
                s,
                lb: 1.0 / s,
                ub: 2.0 / s,
                pg: 8.0 * (2.0 - s) / (s * s),
            })
        })
        .collect()
}

pub fn curves_csv(rows: &[CurveRow]) -> String {
    let mut out = String::from("s,lb,ub,pg\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.s, r.lb, r.ub, r.pg));
    }
    out
}

/// `s = i/steps` for `i = 1..=steps`.
pub fn uniform_s_grid(steps: usize) -> Vec<f64> {
    (1..=steps).map(|i| i as f64 / steps as f64).collect()
}

fn serialize_ratio<S: Serializer>(value: &f64, ser: S) -> std::result::Result<S::Ok, S::Error> {
    if value.is_finite() {
        ser.serialize_f64(*value)
    } else {
        ser.serialize_str(&format_ratio(*value))
    }
}

/// Thresholds and regime classification for one law at one `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub n: usize,
    pub slack: f64,
    pub p: JointEdgeDistribution,
    pub q_actual: f64,
    pub q_required: f64,
    /// `q_actual >= q_required`.
    pub achievable: bool,
    /// The law sits at or below the converse threshold of its regime
    /// (`p11` for positive, `p01 p10` for negative correlation), where no
    /// deanonymizer succeeds asymptotically.
    pub converse_violated: bool,
    pub sparse: bool,
    pub significant: bool,
    pub negative: bool,
    #[serde(serialize_with = "serialize_ratio")]
    pub sig_ratio: f64,
    pub rho: f64,
    pub sparse_p00_cutoff: f64,
    pub significant_ratio_cutoff: f64,
    pub union_bound_failure: f64,
    /// Isolated-vertex bound on success probability (positive correlation only).
    pub converse_success_bound: Option<f64>,
    /// Earlier sufficient condition; present only for symmetric laws.
    pub pg_condition: Option<bool>,
    pub notes: Vec<String>,
}

pub fn threshold_report(p: &JointEdgeDistribution, n: usize, slack: f64) -> Result<ThresholdReport> {
    check_n(n)?;
    check_slack(slack)?;
    let derived = p.derive();
    let q_required = achievability_level(n, slack);
    let conv = converse_level(n, slack);
    let negative = derived.sig_ratio < 1.0;
    let positive = p.p11 * p.p00 > p.p01 * p.p10;
    let converse_violated = if negative {
        p.p01 * p.p10 <= conv
    } else {
        positive && p.p11 <= conv
    };
    let sparse = p.p00 >= SPARSE_P00_CUTOFF;
    let symmetric = (p.p10 - p.p01).abs() <= PROB_TOL;
    let mut notes = Vec::new();
    if symmetric {
        notes.push(
            "pg_condition does not check its extra hypothesis p11/p1* = omega(1/n), which has no finite-n form"
                .to_string(),
        );
    }
    if !(sparse && (derived.sig_ratio >= SIGNIFICANT_RATIO_CUTOFF || negative)) {
        notes.push("converse thresholds are stated for the sparse regime with significant (positive or negative) correlation".to_string());
    }
    Ok(ThresholdReport {
        n,
        slack,
        p: *p,
        q_actual: derived.q,
        q_required,
        achievable: at_least(derived.q, q_required),
        converse_violated,
        sparse,
        significant: derived.sig_ratio >= SIGNIFICANT_RATIO_CUTOFF,
        negative,
        sig_ratio: derived.sig_ratio,
        rho: derived.rho,
        sparse_p00_cutoff: SPARSE_P00_CUTOFF,
        significant_ratio_cutoff: SIGNIFICANT_RATIO_CUTOFF,
        union_bound_failure: union_bound_failure(n, derived.q.min(1.0))?,
        converse_success_bound: if positive {
            Some(converse_success_bound(n, p.p11)?)
        } else {
            None
        },
        pg_condition: if symmetric {
            Some(pg_condition(p, n, slack)?)
        } else {
            None
        },
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(p11: f64, p10: f64, p01: f64, p00: f64) -> JointEdgeDistribution {
        JointEdgeDistribution::new(p11, p10, p01, p00).unwrap()
    }

    #[test]
    fn achievability_examples() {
        let t = achievability_q_threshold(20, 0.0).unwrap();
        assert!((t - 0.299_573_227_355_399).abs() < 1e-12);
        for n in [3, 50, 10_000] {
            let t = achievability_q_threshold(n, 0.0).unwrap();
            assert!((t * n as f64 / (2.0 * (n as f64).ln()) - 1.0).abs() < 1e-15);
            let bumped = achievability_q_threshold(n, 1.5).unwrap();
            let doubled = achievability_q_threshold(n, 3.0).unwrap();
            assert!((doubled - bumped - 2.0 * 1.5 / n as f64).abs() < 1e-15);
        }
        assert!(achievability_q_threshold(2, 0.0).is_err());
        assert!(achievability_q_threshold(10, -1.0).is_err());
    }

    #[test]
    fn sparse_and_negative_examples() {
        let (ach, conv) = sparse_thresholds(500, 0.0).unwrap();
        assert!((ach - 2.0 * conv).abs() < 1e-15);
        let (ach, conv) = sparse_thresholds(1000, 3.0).unwrap();
        assert!((ach - 0.019_815_510_557_964).abs() < 1e-12);
        assert!((conv - 0.003_907_755_278_982).abs() < 1e-12);

        let (ach, conv) = negative_thresholds(100, 0.0).unwrap();
        assert!((ach - 2.0 * conv).abs() < 1e-15);
        assert!((ach - 0.092_103_403_719_762).abs() < 1e-12);
        let anti = p(0.0, 0.5, 0.5, 0.0);
        assert!(anti.p01 * anti.p10 >= ach);
    }

    #[test]
    fn pg_condition_examples() {
        let n = 5000;
        let level = 8.0 * (n as f64).ln() / n as f64;
        // s = 1: p11 = r, p10 = p01 = 0
        assert!(pg_condition(&p(level, 0.0, 0.0, 1.0 - level), n, 0.0).unwrap());
        assert!(!pg_condition(&p(level * 0.99, 0.0, 0.0, 1.0 - level * 0.99), n, 0.0).unwrap());
        assert!(!pg_condition(&p(0.0, 0.3, 0.3, 0.4), n, 0.0).unwrap());

        // s = 0.5 with r s^3/(2-s) on the boundary
        let s: f64 = 0.5;
        let r = level * (2.0 - s) / s.powi(3);
        let law = p(r * s * s, r * s * (1.0 - s), r * s * (1.0 - s), 1.0 - r * (2.0 * s - s * s));
        assert!(pg_condition(&law, n, 0.0).unwrap());
        let below = p(0.99 * r * s * s, 0.99 * r * s * (1.0 - s), 0.99 * r * s * (1.0 - s), 1.0 - 0.99 * r * (2.0 * s - s * s));
        assert!(!pg_condition(&below, n, 0.0).unwrap());

        assert!(pg_condition(&p(0.1, 0.2, 0.1, 0.6), n, 0.0).is_err());
    }

    #[test]
    fn union_bound_examples() {
        assert_eq!(union_bound_failure(50, 0.0).unwrap(), 1.0);
        let x = 100.0 * (-9.8f64).exp();
        let b = union_bound_failure(100, 0.2).unwrap();
        assert!((b - x * x / (1.0 - x)).abs() < 1e-18);
        assert!((b - 3.092_025_656e-5).abs() < 1e-13);
        assert!((b / 3.074e-5 - 1.0).abs() < 1e-2);
        let mut last = 1.0;
        for step in 0..=100 {
            let v = union_bound_failure(100, step as f64 / 100.0).unwrap();
            assert!(v <= last);
            last = v;
        }
        assert!(union_bound_failure(100, 1.5).is_err());
    }

    #[test]
    fn union_bound_dominates_grouped_sum() {
        for n in 3..=12 {
            for step in 0..=100 {
                let q = step as f64 / 100.0;
                let x = n as f64 * (-q * (n as f64 - 2.0) / 2.0).exp();
                if x < 1.0 {
                    let sum: f64 = (2..=n).map(|m| x.powi(m as i32)).sum();
                    let closed = x * x / (1.0 - x);
                    assert!(sum <= closed * (1.0 + 1e-12));
                    assert_eq!(union_bound_failure(n, q).unwrap(), closed.min(1.0));
                }
            }
        }
    }

    #[test]
    fn expected_d_examples() {
        let ident = CycleType::from_lengths(&[1; 6]);
        assert_eq!(expected_d(&ident, &p(0.5, 0.0, 0.0, 0.5)), 0.0);
        let transposition = CycleType::from_lengths(&[1, 1, 2, 2]);
        assert!(expected_d(&transposition, &JointEdgeDistribution::independent(0.3, 0.4).unwrap()).abs() < 1e-15);
        assert_eq!(expected_d(&transposition, &p(0.5, 0.0, 0.0, 0.5)), 2.0);
        assert!(expected_d(&transposition, &p(0.0, 0.5, 0.5, 0.0)) < 0.0);
    }

    #[test]
    fn converse_bound_examples() {
        assert_eq!(converse_success_bound(20, 1.0).unwrap(), 1.0);
        let b = converse_success_bound(20, 0.0).unwrap();
        assert!((b - 1.0 / 3_628_800.0).abs() < 1e-18);
        assert!(b < 1e-6);
        let n = 1000;
        let p11 = 0.5 * (n as f64).ln() / n as f64;
        let m = isolated_moments(n, p11);
        assert!((m.mean - 31.54).abs() < 0.01);
        let b = converse_success_bound(n, p11).unwrap();
        assert!(b < 0.2, "{b}");
    }

    #[test]
    fn curve_examples() {
        let rows = tradeoff_curves(&[1.0, 0.5]).unwrap();
        assert_eq!((rows[0].lb, rows[0].ub, rows[0].pg), (1.0, 2.0, 8.0));
        assert_eq!((rows[1].lb, rows[1].ub, rows[1].pg), (2.0, 4.0, 48.0));
        let grid = uniform_s_grid(40);
        let rows = tradeoff_curves(&grid).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].lb < w[0].lb && w[1].ub < w[0].ub && w[1].pg < w[0].pg);
        }
        assert!(tradeoff_curves(&[0.0]).is_err());
        assert!(tradeoff_curves(&[1.2]).is_err());
        let csv = curves_csv(&tradeoff_curves(&[0.5, 1.0]).unwrap());
        assert_eq!(csv, "s,lb,ub,pg\n0.5,2,4,48\n1,1,2,8\n");
    }

    #[test]
    fn sparse_identity_for_q() {
        use crate::rng::stream;
        use rand::Rng;
        let mut rng = stream(31, 0, 0);
        for _ in 0..1000 {
            let p11: f64 = rng.gen_range(1e-4..5e-3);
            let p10: f64 = rng.gen_range(0.0..p11 / 20.0);
            let p01: f64 = rng.gen_range(0.0..p11 / 20.0);
            let law = p(p11, p10, p01, 1.0 - p11 - p10 - p01);
            let d = law.derive();
            assert!(law.p00 >= SPARSE_P00_CUTOFF);
            if d.sig_ratio < SIGNIFICANT_RATIO_CUTOFF {
                continue;
            }
            let alt = law.p11 * law.p00 * (1.0 - (law.p10 * law.p01 / (law.p11 * law.p00)).sqrt()).powi(2);
            assert!((d.q - alt).abs() <= 1e-12);
        }
    }

    #[test]
    fn negative_regime_correlation_is_small() {
        // p11 = 0 forces p10 = pa, p01 = pb, so |rho| = sqrt(pa pb / ((1-pa)(1-pb)))
        for i in 1..=20 {
            for j in 1..=20 {
                let (pa, pb) = (i as f64 / 200.0, j as f64 / 200.0);
                let law = p(0.0, pa, pb, 1.0 - pa - pb);
                let rho = law.derive().rho;
                let exact = (pa * pb / ((1.0 - pa) * (1.0 - pb))).sqrt();
                assert!((rho.abs() - exact).abs() < 1e-15);
                assert!(rho < 0.0);
                assert!(rho.abs() <= (pa * pb).sqrt() / (1.0 - pa.max(pb)) + 1e-15);
                if pa.max(pb) <= 0.005 {
                    assert!(rho.abs() <= (pa * pb).sqrt() * 1.01, "pa={pa} pb={pb} rho={rho}");
                }
            }
        }
    }

    #[test]
    fn report_flags() {
        let law = p(0.005, 0.00002, 0.00002, 0.99496);
        let r = threshold_report(&law, 1000, 0.0).unwrap();
        assert!(r.sparse && r.significant && !r.negative);
        assert!(r.achievable == (r.q_actual >= r.q_required));
        assert!(r.pg_condition.is_some());
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["sparse_p00_cutoff"], 0.99);

        let anti = threshold_report(&p(0.0, 0.5, 0.5, 0.0), 100, 0.0).unwrap();
        assert!(anti.negative && anti.achievable && !anti.converse_violated);
        assert!(anti.converse_success_bound.is_none());
        assert_eq!(serde_json::to_value(&anti).unwrap()["sig_ratio"], 0.0);
        let flat = threshold_report(&p(0.0, 0.5, 0.0, 0.5), 100, 0.0).unwrap();
        assert_eq!(serde_json::to_value(&flat).unwrap()["sig_ratio"], "undefined");

        let faint = p(0.001, 0.0, 0.0, 0.999);
        let r = threshold_report(&faint, 1000, 0.0).unwrap();
        assert!(r.converse_violated && !r.achievable);
        assert_eq!(serde_json::to_value(&r).unwrap()["sig_ratio"], "inf");
    }
}
