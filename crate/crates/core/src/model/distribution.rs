use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance used for every probability-validity check.
pub const PROB_TOL: f64 = 1e-12;

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() || !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidProbability(format!("{name}={v} is not in [0,1]")));
    }
    Ok(())
}

/// Joint law of `(G_a(e), G_b(e))` for a single vertex pair.
///
/// Construction rejects vectors that do not sum to one within [`PROB_TOL`];
/// [`JointEdgeDistribution::normalized`] is the explicit opt-in for rescaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawJoint")]
pub struct JointEdgeDistribution {
    pub p11: f64,
    pub p10: f64,
    pub p01: f64,
    pub p00: f64,
}

#[derive(Deserialize)]
struct RawJoint {
    p11: f64,
    p10: f64,
    p01: f64,
    p00: f64,
}

impl TryFrom<RawJoint> for JointEdgeDistribution {
    type Error = Error;

    fn try_from(raw: RawJoint) -> Result<Self> {
        Self::new(raw.p11, raw.p10, raw.p01, raw.p00)
    }
}

impl JointEdgeDistribution {
    pub fn new(p11: f64, p10: f64, p01: f64, p00: f64) -> Result<Self> {
        check_unit("p11", p11)?;
        check_unit("p10", p10)?;
        check_unit("p01", p01)?;
        check_unit("p00", p00)?;
        let total = p11 + p10 + p01 + p00;
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidProbability(format!(
                "p11+p10+p01+p00 = {total}, expected 1"
            )));
        }
        Ok(Self { p11, p10, p01, p00 })
    }

    /// Rescales nonnegative weights so they sum to one.
    pub fn normalized(p11: f64, p10: f64, p01: f64, p00: f64) -> Result<Self> {
        let weights = [p11, p10, p01, p00];
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidProbability(format!(
                "weights {weights:?} must be finite and nonnegative"
            )));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidProbability("weights sum to zero".into()));
        }
        Self::new(p11 / total, p10 / total, p01 / total, p00 / total)
    }

    /// Product law of two independent marginals.
    pub fn independent(pa: f64, pb: f64) -> Result<Self> {
        check_unit("pa", pa)?;
        check_unit("pb", pb)?;
        Self::new(pa * pb, pa * (1.0 - pb), (1.0 - pa) * pb, (1.0 - pa) * (1.0 - pb))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain struct serializes")
    }

    /// Outcome probabilities in the order (1,1), (1,0), (0,1), (0,0).
    pub fn as_array(&self) -> [f64; 4] {
        [self.p11, self.p10, self.p01, self.p00]
    }

    pub fn p1s(&self) -> f64 {
        self.p11 + self.p10
    }

    pub fn p0s(&self) -> f64 {
        self.p01 + self.p00
    }

    pub fn ps1(&self) -> f64 {
        self.p11 + self.p01
    }

    pub fn ps0(&self) -> f64 {
        self.p10 + self.p00
    }

    /// `(sqrt(p11 p00) - sqrt(p01 p10))^2`.
    pub fn q(&self) -> f64 {
        let d = (self.p11 * self.p00).sqrt() - (self.p01 * self.p10).sqrt();
        d * d
    }

    /// Sign of `p11 p00 - p01 p10`, with exact ties reported as zero.
    pub fn correlation_sign(&self) -> std::cmp::Ordering {
        (self.p11 * self.p00)
            .partial_cmp(&(self.p01 * self.p10))
            .expect("finite products")
    }

    pub fn derive(&self) -> DerivedParams {
        derive_params(self)
    }
}

/// Quantities derived from a [`JointEdgeDistribution`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    pub p1s: f64,
    pub p0s: f64,
    pub ps1: f64,
    pub ps0: f64,
    /// Pearson correlation of the two edge indicators; 0 when either
    /// indicator is constant.
    pub rho: f64,
    pub q: f64,
    /// `p11 p00 / (p01 p10)`; `+inf` when only the denominator vanishes,
    /// NaN ("undefined") when both do.
    pub sig_ratio: f64,
}

impl DerivedParams {
    pub fn sig_ratio_label(&self) -> String {
        format_ratio(self.sig_ratio)
    }
}

pub(crate) fn format_ratio(r: f64) -> String {
    if r.is_nan() {
        "undefined".to_string()
    } else if r.is_infinite() {
        "inf".to_string()
    } else {
        r.to_string()
    }
}

pub fn derive_params(p: &JointEdgeDistribution) -> DerivedParams {
    let (p1s, p0s, ps1, ps0) = (p.p1s(), p.p0s(), p.ps1(), p.ps0());
    let cov = p.p11 * p.p00 - p.p01 * p.p10;
    let var = p1s * p0s * ps1 * ps0;
    let rho = if var > 0.0 {
        (cov / var.sqrt()).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    let num = p.p11 * p.p00;
    let den = p.p01 * p.p10;
    let sig_ratio = if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        f64::NAN
    };
    DerivedParams {
        p1s,
        p0s,
        ps1,
        ps0,
        rho,
        q: p.q(),
        sig_ratio,
    }
}

/// Parent graph `ER(n, r)` observed through independent edge retention with
/// probabilities `s_a` and `s_b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsampleParams {
    pub r: f64,
    pub s_a: f64,
    pub s_b: f64,
}

impl SubsampleParams {
    pub fn new(r: f64, s_a: f64, s_b: f64) -> Result<Self> {
        check_unit("r", r)?;
        check_unit("s_a", s_a)?;
        check_unit("s_b", s_b)?;
        Ok(Self { r, s_a, s_b })
    }
}

pub fn subsample_to_joint(sp: &SubsampleParams) -> Result<JointEdgeDistribution> {
    let SubsampleParams { r, s_a, s_b } = *sp;
    let p11 = r * s_a * s_b;
    let p10 = r * s_a * (1.0 - s_b);
    let p01 = r * (1.0 - s_a) * s_b;
    let p00 = 1.0 - r * (s_a + s_b - s_a * s_b);
    JointEdgeDistribution::new(p11, p10, p01, p00.clamp(0.0, 1.0))
}

/// Inverse of [`subsample_to_joint`]; defined only for `p11 > 0` and
/// nonnegative correlation.
pub fn joint_to_subsample(p: &JointEdgeDistribution) -> Result<SubsampleParams> {
    if p.p11 <= 0.0 {
        return Err(Error::InvalidInput(
            "subsampling parameters need p11 > 0".into(),
        ));
    }
    let cov = p.p11 * p.p00 - p.p01 * p.p10;
    if cov < -PROB_TOL {
        return Err(Error::InvalidInput(format!(
            "negative correlation (p11*p00 - p01*p10 = {cov}) has no subsampling form"
        )));
    }
    let r = p.p1s() * p.ps1() / p.p11;
    let s_a = p.p11 / p.ps1();
    let s_b = p.p11 / p.p1s();
    SubsampleParams::new(r.min(1.0), s_a.min(1.0), s_b.min(1.0))
}

/// Row-stochastic 2x2 transition matrix; row = hidden state, column = observation.
pub type Channel = [[f64; 2]; 2];

fn check_channel(name: &str, m: &Channel) -> Result<()> {
    for (row_idx, row) in m.iter().enumerate() {
        for (col_idx, v) in row.iter().enumerate() {
            check_unit(&format!("{name}[{row_idx}][{col_idx}]"), *v)?;
        }
        let sum = row[0] + row[1];
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidProbability(format!(
                "{name} row {row_idx} sums to {sum}, expected 1"
            )));
        }
    }
    Ok(())
}

/// `[[p00, p01], [p10, p11]] = A^T diag(1-r, r) B`.
pub fn channel_to_joint(r: f64, a: &Channel, b: &Channel) -> Result<JointEdgeDistribution> {
    check_unit("r", r)?;
    check_channel("A", a)?;
    check_channel("B", b)?;
    let weight = [1.0 - r, r];
    let entry = |x: usize, y: usize| -> f64 { (0..2).map(|h| a[h][x] * weight[h] * b[h][y]).sum() };
    JointEdgeDistribution::new(entry(1, 1), entry(1, 0), entry(0, 1), entry(0, 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12
    }

    #[test]
    fn rejects_bad_vectors() {
        assert!(JointEdgeDistribution::new(0.5, 0.5, 0.5, 0.0).is_err());
        assert!(JointEdgeDistribution::new(-0.1, 0.5, 0.3, 0.3).is_err());
        assert!(JointEdgeDistribution::new(f64::NAN, 0.5, 0.5, 0.0).is_err());
        let p = JointEdgeDistribution::normalized(1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(p.as_array(), [0.25; 4]);
    }

    #[test]
    fn derive_examples() {
        let d = JointEdgeDistribution::new(0.25, 0.25, 0.25, 0.25).unwrap().derive();
        assert!(close(d.rho, 0.0) && close(d.q, 0.0));
        assert!(close(d.sig_ratio, 1.0));

        let d = JointEdgeDistribution::new(0.5, 0.0, 0.0, 0.5).unwrap().derive();
        assert!(close(d.rho, 1.0) && close(d.q, 0.25));
        assert!(d.sig_ratio.is_infinite());
        assert_eq!(d.sig_ratio_label(), "inf");

        let d = JointEdgeDistribution::new(0.0, 0.5, 0.5, 0.0).unwrap().derive();
        assert!(close(d.rho, -1.0) && close(d.q, 0.25));
        assert_eq!(d.sig_ratio, 0.0);

        let d = JointEdgeDistribution::new(0.0, 0.0, 0.0, 1.0).unwrap().derive();
        assert!(d.sig_ratio.is_nan());
        assert_eq!(d.sig_ratio_label(), "undefined");
        assert_eq!(d.rho, 0.0);
    }

    #[test]
    fn subsample_examples() {
        let p = subsample_to_joint(&SubsampleParams::new(1.0, 0.3, 0.7).unwrap()).unwrap();
        assert!(close(p.p11, p.p1s() * p.ps1()));
        assert!(close(p.p11, 0.21));

        let p = subsample_to_joint(&SubsampleParams::new(0.5, 1.0, 1.0).unwrap()).unwrap();
        assert_eq!(p.as_array(), [0.5, 0.0, 0.0, 0.5]);

        let p = subsample_to_joint(&SubsampleParams::new(0.0, 0.4, 0.9).unwrap()).unwrap();
        assert_eq!(p.as_array(), [0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn joint_to_subsample_examples() {
        let sp = joint_to_subsample(&JointEdgeDistribution::new(0.5, 0.0, 0.0, 0.5).unwrap()).unwrap();
        assert!(close(sp.r, 0.5) && close(sp.s_a, 1.0) && close(sp.s_b, 1.0));

        let sp =
            joint_to_subsample(&JointEdgeDistribution::new(0.21, 0.09, 0.49, 0.21).unwrap()).unwrap();
        assert!(close(sp.r, 1.0) && close(sp.s_a, 0.3) && close(sp.s_b, 0.7));

        assert!(joint_to_subsample(&JointEdgeDistribution::new(0.0, 0.5, 0.5, 0.0).unwrap()).is_err());
        // positive p11 but negatively correlated
        assert!(joint_to_subsample(&JointEdgeDistribution::new(0.1, 0.4, 0.4, 0.1).unwrap()).is_err());
    }

    #[test]
    fn channel_examples() {
        let id = [[1.0, 0.0], [0.0, 1.0]];
        let p = channel_to_joint(0.5, &id, &id).unwrap();
        assert_eq!(p.as_array(), [0.5, 0.0, 0.0, 0.5]);

        let erase = [[1.0, 0.0], [1.0, 0.0]];
        for r in [0.0, 0.3, 1.0] {
            let p = channel_to_joint(r, &erase, &erase).unwrap();
            assert_eq!(p.as_array(), [0.0, 0.0, 0.0, 1.0]);
        }

        let noisy = [[0.9, 0.1], [0.2, 0.8]];
        let p = channel_to_joint(0.5, &id, &noisy).unwrap();
        assert!(close(p.p11, 0.4) && close(p.p10, 0.1) && close(p.p01, 0.05) && close(p.p00, 0.45));

        assert!(channel_to_joint(0.5, &[[0.9, 0.2], [0.0, 1.0]], &id).is_err());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let p = JointEdgeDistribution::new(0.02, 0.01, 0.01, 0.96).unwrap();
        assert_eq!(JointEdgeDistribution::from_json(&p.to_json()).unwrap(), p);
        assert!(JointEdgeDistribution::from_json(r#"{"p11":0.5,"p10":0.5,"p01":0.5,"p00":0.5}"#).is_err());
    }
}
