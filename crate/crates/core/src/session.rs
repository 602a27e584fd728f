//! Synthetic radio-bearer session records and their statistical descriptors.
//!
//! A session holds six periodic-report series. Drop sessions end in a
//! degradation ramp: uplink SINR falls while the uplink HARQ and RLC NACK
//! ratios climb. Normal sessions are stationary, but some carry a transient
//! dip that recovers before the end.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};

use crate::distance::dtw;
use crate::error::{ensure_dim, Error, Result};
use crate::math::sqrt;

pub const SERIES: usize = 6;
pub const SERIES_NAMES: [&str; SERIES] = [
    "cqi_avg",
    "harqnack_dl",
    "harqnack_ul",
    "rlc_dl",
    "rlc_ul",
    "sinr_pusch",
];
pub const SERIES_RANGES: [(f64, f64); SERIES] = [
    (1.0, 15.0),
    (0.0, 1.0),
    (0.0, 1.0),
    (0.0, 1.0),
    (0.0, 1.0),
    (-4.0, 18.0),
];
/// Statistics per series: five over the values and five over the gradient.
pub const DESCRIPTOR_LEN: usize = SERIES * 10;
pub const STAT_NAMES: [&str; 5] = ["min", "max", "mode", "mean", "var"];

pub const CQI: usize = 0;
pub const HARQ_DL: usize = 1;
pub const HARQ_UL: usize = 2;
pub const RLC_DL: usize = 3;
pub const RLC_UL: usize = 4;
pub const SINR: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct SessionRecord {
    pub id: u64,
    series: [Vec<f64>; SERIES],
    pub drop: bool,
}

impl SessionRecord {
    pub fn new(id: u64, series: [Vec<f64>; SERIES], drop: bool) -> Result<Self> {
        let len = series[0].len();
        if len == 0 {
            return Err(Error::Empty("session series"));
        }
        for (s, (lo, hi)) in series.iter().zip(SERIES_RANGES) {
            ensure_dim(len, s.len())?;
            if s.iter().any(|v| !(*v >= lo && *v <= hi)) {
                return Err(Error::param("series", alloc::format!("value outside [{lo}, {hi}]")));
            }
        }
        Ok(SessionRecord { id, series, drop })
    }

    pub fn len(&self) -> usize {
        self.series[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn series(&self, i: usize) -> &[f64] {
        &self.series[i]
    }

    pub fn all_series(&self) -> &[Vec<f64>; SERIES] {
        &self.series
    }

    /// The session without its last `truncate_at` reports.
    pub fn truncated(&self, truncate_at: usize) -> Result<SessionRecord> {
        if truncate_at >= self.len() {
            return Err(Error::param(
                "truncate_at",
                alloc::format!("{truncate_at} reports removed from a session of {}", self.len()),
            ));
        }
        let keep = self.len() - truncate_at;
        Ok(SessionRecord {
            id: self.id,
            series: core::array::from_fn(|i| self.series[i][..keep].to_vec()),
            drop: self.drop,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_drop: usize,
    pub n_normal: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub seed: u64,
}

impl SynthConfig {
    pub fn new(n_drop: usize, n_normal: usize, seed: u64) -> Self {
        SynthConfig {
            n_drop,
            n_normal,
            min_len: 15,
            max_len: 60,
            seed,
        }
    }
}

/// AR(1) noise with unit stationary variance scaled by `sd`.
fn ar1(rng: &mut ChaCha8Rng, len: usize, phi: f64, sd: f64) -> Vec<f64> {
    let innov = Normal::new(0.0, sd * sqrt(1.0 - phi * phi)).expect("finite sd");
    let mut e = Normal::new(0.0, sd).expect("finite sd").sample(rng);
    (0..len)
        .map(|_| {
            let v = e;
            e = phi * e + innov.sample(rng);
            v
        })
        .collect()
}

fn synth_one(rng: &mut ChaCha8Rng, id: u64, len: usize, drop: bool) -> SessionRecord {
    let sinr_base = rng.random_range(0.0..14.0);
    let mut sinr: Vec<f64> = ar1(rng, len, 0.6, 1.8).into_iter().map(|e| sinr_base + e).collect();
    let ratio = |rng: &mut ChaCha8Rng, hi: f64| -> Vec<f64> {
        let base = rng.random_range(0.0..hi);
        ar1(rng, len, 0.5, 0.03).into_iter().map(|e| base + e).collect()
    };
    let mut harq_dl = ratio(rng, 0.2);
    let mut harq_ul = ratio(rng, 0.2);
    let rlc_dl = ratio(rng, 0.08);
    let mut rlc_ul = ratio(rng, 0.08);

    // transient dips hit both classes and recover
    if rng.random::<f64>() < 0.35 && len > 12 {
        let width = rng.random_range(3..9);
        let start = rng.random_range(0..len - width - 2);
        let depth = rng.random_range(2.0..8.0);
        for t in start..start + width {
            sinr[t] -= depth;
            harq_ul[t] += depth * 0.03;
        }
    }

    if drop {
        let ramp = rng.random_range(6..=12).min(len);
        let strength = rng.random_range(0.4..1.0);
        for step in 0..ramp {
            let t = len - ramp + step;
            let u = (step + 1) as f64 / ramp as f64;
            sinr[t] -= 12.0 * strength * u;
            harq_ul[t] += 0.45 * strength * u;
            rlc_ul[t] += 0.35 * strength * u;
            harq_dl[t] += 0.1 * strength * u;
        }
    }

    let noise = Normal::new(0.0, 0.4).expect("finite sd");
    let cqi: Vec<f64> = sinr
        .iter()
        .map(|s| 1.0 + (s + 4.0) / 22.0 * 14.0 + noise.sample(rng))
        .collect();
    let mut series = [cqi, harq_dl, harq_ul, rlc_dl, rlc_ul, sinr];
    for (s, (lo, hi)) in series.iter_mut().zip(SERIES_RANGES) {
        for v in s.iter_mut() {
            *v = v.clamp(lo, hi);
        }
    }
    for v in series[CQI].iter_mut() {
        *v = libm::round(*v * 10.0) / 10.0;
    }
    SessionRecord { id, series, drop }
}

/// Drop sessions come first, ids `0..n_drop`, then the normal ones.
pub fn generate_sessions(config: &SynthConfig) -> Result<Vec<SessionRecord>> {
    if config.n_drop == 0 || config.n_normal == 0 {
        return Err(Error::param("counts", "both classes need at least one session"));
    }
    if config.min_len == 0 || config.max_len < config.min_len {
        return Err(Error::param("min_len", "need 1 <= min_len <= max_len"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let total = config.n_drop + config.n_normal;
    Ok((0..total)
        .map(|i| {
            let len = rng.random_range(config.min_len..=config.max_len);
            synth_one(&mut rng, i as u64, len, i < config.n_drop)
        })
        .collect())
}

/// Buckets per unit used when taking the mode (reporting granularity).
fn granularity(series: usize) -> f64 {
    match series {
        CQI => 1.0,
        SINR => 10.0,
        _ => 100.0,
    }
}

fn five_stats(values: &[f64], per_unit: f64) -> [f64; 5] {
    let n = values.len() as f64;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mean, var) = if min == max {
        // summation would smear a constant by an ulp
        (min, 0.0)
    } else {
        let mean = values.iter().sum::<f64>() / n;
        (mean, values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n)
    };
    let mut buckets: Vec<i64> = values.iter().map(|v| libm::round(v * per_unit) as i64).collect();
    buckets.sort_unstable();
    // most frequent bucket, smallest value on ties
    let (mut mode, mut best, mut run) = (buckets[0], 0usize, 0usize);
    for i in 0..buckets.len() {
        run = if i > 0 && buckets[i] == buckets[i - 1] {
            run + 1
        } else {
            1
        };
        if run > best {
            best = run;
            mode = buckets[i];
        }
    }
    [min, max, mode as f64 / per_unit, mean, var]
}

/// 60 statistics of the session after removing its last `truncate_at` reports.
///
/// Layout: for every series in `SERIES_NAMES` order, `[min, max, mode, mean,
/// var]` of the values followed by the same five over the forward difference.
pub fn describe_session(session: &SessionRecord, truncate_at: usize) -> Result<Vec<f64>> {
    let s = session.truncated(truncate_at)?;
    if s.len() < 2 {
        return Err(Error::param("truncate_at", "fewer than two reports remain"));
    }
    let mut out = Vec::with_capacity(DESCRIPTOR_LEN);
    for (i, values) in s.series.iter().enumerate() {
        out.extend(five_stats(values, granularity(i)));
        let grad: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
        out.extend(five_stats(&grad, granularity(i)));
    }
    Ok(out)
}

/// `7·|S|` distances: for every reference session, the six per-series DTW
/// distances and then the Euclidean distance of the descriptors.
pub fn session_distance_columns(
    session: &SessionRecord,
    samples: &[SessionRecord],
    truncate_at: usize,
) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::Empty("reference sessions"));
    }
    let x = session.truncated(truncate_at)?;
    let dx = describe_session(session, truncate_at)?;
    let mut out = Vec::with_capacity(7 * samples.len());
    for s in samples {
        let st = s.truncated(truncate_at)?;
        for i in 0..SERIES {
            out.push(dtw(&x.series[i], &st.series[i])?);
        }
        let ds = describe_session(s, truncate_at)?;
        out.push(sqrt(dx.iter().zip(&ds).map(|(a, b)| (a - b) * (a - b)).sum()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn constant(len: usize) -> SessionRecord {
        SessionRecord::new(
            0,
            [
                vec![7.0; len],
                vec![0.1; len],
                vec![0.2; len],
                vec![0.0; len],
                vec![0.05; len],
                vec![3.0; len],
            ],
            false,
        )
        .unwrap()
    }

    #[test]
    fn generator_is_deterministic_balanced_and_in_range() {
        let cfg = SynthConfig::new(40, 60, 12);
        let a = generate_sessions(&cfg).unwrap();
        assert_eq!(a, generate_sessions(&cfg).unwrap());
        assert_eq!(a.iter().filter(|s| s.drop).count(), 40);
        assert_eq!(a.len(), 100);
        for s in &a {
            assert!(s.len() >= 15 && s.len() <= 60);
            for (i, (lo, hi)) in SERIES_RANGES.iter().enumerate() {
                assert!(s.series(i).iter().all(|v| v >= lo && v <= hi));
            }
        }
        assert!(generate_sessions(&SynthConfig::new(0, 5, 1)).is_err());
    }

    #[test]
    fn drop_sessions_lose_sinr() {
        let all = generate_sessions(&SynthConfig::new(500, 1, 3)).unwrap();
        let drops: Vec<_> = all.iter().filter(|s| s.drop).collect();
        let falling = drops
            .iter()
            .filter(|s| {
                let v = s.series(SINR);
                let head = v[..3].iter().sum::<f64>() / 3.0;
                let tail = v[v.len() - 3..].iter().sum::<f64>() / 3.0;
                tail < head
            })
            .count();
        assert!(falling as f64 >= 0.9 * drops.len() as f64, "{falling}");
    }

    #[test]
    fn constant_session_descriptor() {
        let d = describe_session(&constant(10), 0).unwrap();
        assert_eq!(d.len(), 60);
        for i in 0..SERIES {
            let b = &d[i * 10..i * 10 + 10];
            assert_eq!(b[0], b[1]);
            assert_eq!(b[0], b[3]);
            assert!((b[2] - b[0]).abs() < 1e-12);
            assert_eq!(b[4], 0.0);
            assert_eq!(&b[5..], &[0.0; 5]);
        }
    }

    #[test]
    fn ramp_gradient_stats() {
        let mut s = constant(3);
        s.series[CQI] = vec![1.0, 2.0, 3.0];
        let d = describe_session(&s, 0).unwrap();
        assert_eq!(&d[0..5], &[1.0, 3.0, 1.0, 2.0, 2.0 / 3.0]);
        assert_eq!(&d[5..10], &[1.0, 1.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn truncation_rules() {
        let s = generate_sessions(&SynthConfig::new(1, 1, 5)).unwrap().remove(0);
        assert_eq!(
            describe_session(&s, 0).unwrap(),
            describe_session(&s.truncated(0).unwrap(), 0).unwrap()
        );
        assert!(describe_session(&s, s.len() - 1).is_err());
        assert!(describe_session(&s, s.len()).is_err());
        assert!(describe_session(&s, s.len() - 2).is_ok());
    }

    #[test]
    fn base_stats_ignore_order_but_gradients_do_not() {
        let mut s = constant(6);
        s.series[SINR] = vec![1.0, 5.0, -2.0, 7.5, 3.0, 3.0];
        let mut r = s.clone();
        r.series[SINR].reverse();
        r.series[SINR].swap(0, 3);
        let (a, b) = (describe_session(&s, 0).unwrap(), describe_session(&r, 0).unwrap());
        let base = SINR * 10;
        for k in 0..5 {
            assert!((a[base + k] - b[base + k]).abs() < 1e-12);
        }
        assert_ne!(&a[base + 5..base + 10], &b[base + 5..base + 10]);
    }

    #[test]
    fn distance_columns() {
        let all = generate_sessions(&SynthConfig::new(20, 20, 9)).unwrap();
        let refs = &all[..30];
        let cols = session_distance_columns(&all[4], refs, 5).unwrap();
        assert_eq!(cols.len(), 210);
        assert_eq!(&cols[4 * 7..5 * 7], &[0.0; 7]);
        let x = all[7].truncated(5).unwrap();
        let y = refs[2].truncated(5).unwrap();
        let c7 = session_distance_columns(&all[7], refs, 5).unwrap();
        assert_eq!(c7[2 * 7 + 3], dtw(x.series(RLC_DL), y.series(RLC_DL)).unwrap());
        assert!(session_distance_columns(&all[0], &[], 5).is_err());
    }

    #[test]
    fn out_of_range_values_rejected() {
        let mut series = constant(3).series;
        series[SINR][1] = 19.0;
        assert!(SessionRecord::new(1, series, true).is_err());
    }
}
