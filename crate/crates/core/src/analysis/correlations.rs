//! Density correlations between sites placed symmetrically about the centre.

use serde::{Deserialize, Serialize};

use crate::exact::ObservableRecord;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationPoint {
    /// 1-based sites i < j with i + j = N + 1.
    pub sites: (usize, usize),
    /// (j − i) / N.
    pub r: f64,
    pub value: f64,
    pub magnitude: f64,
    /// True when either site is a chain end.
    pub boundary: bool,
}

/// C_{i, N+1−i} for every symmetric pair, ordered by increasing separation.
pub fn correlation_profile(record: &ObservableRecord) -> Vec<CorrelationPoint> {
    let n = record.correlations.len();
    let mut out: Vec<CorrelationPoint> = (1..=n / 2)
        .map(|i| {
            let j = n + 1 - i;
            let v = record.correlations[i - 1][j - 1];
            CorrelationPoint {
                sites: (i, j),
                r: (j - i) as f64 / n as f64,
                value: v,
                magnitude: v.abs(),
                boundary: i == 1,
            }
        })
        .collect();
    out.reverse();
    out
}

/// First r at which the correlation changes sign, by linear interpolation.
pub fn first_sign_change(profile: &[CorrelationPoint]) -> Option<f64> {
    profile.windows(2).find_map(|w| {
        let (a, b) = (w[0], w[1]);
        (a.value * b.value < 0.0).then(|| a.r + (b.r - a.r) * a.value / (a.value - b.value))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(c: Vec<Vec<f64>>) -> ObservableRecord {
        let n = c.len();
        ObservableRecord {
            current: 0.0,
            current_profile: vec![0.0; n - 1],
            density_profile: vec![0.5; n],
            correlations: c,
            entropy: 0.0,
            purity: 1.0,
            sector_probs: vec![0.0; n + 1],
            dissipation: 0.0,
        }
    }

    #[test]
    fn pairs_and_sign_change() {
        let mut c = vec![vec![0.0; 6]; 6];
        c[2][3] = 0.2;
        c[1][4] = 0.1;
        c[0][5] = -0.1;
        let prof = correlation_profile(&record(c));
        assert_eq!(prof.iter().map(|p| p.sites).collect::<Vec<_>>(), vec![(3, 4), (2, 5), (1, 6)]);
        assert!(prof[2].boundary && !prof[0].boundary);
        let r = first_sign_change(&prof).unwrap();
        assert!((r - 2.0 / 3.0).abs() < 1e-12, "{r}");
    }
}
