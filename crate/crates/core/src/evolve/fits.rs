//! Estimators comparing quench maps with analytic predictions.

use serde::Serialize;

use super::SpatiotemporalMap;
use crate::error::{Error, Result};
use crate::optim::{levenberg_marquardt, LmOptions};

/// Front velocity extracted from first-passage times.
#[derive(Debug, Clone, Serialize)]
pub struct LightConeFit {
    /// Sites per unit time (units of J).
    pub velocity: f64,
    pub intercept: f64,
    /// RMS deviation of distances from the fitted line.
    pub residual: f64,
    /// Bond where the charge starts.
    pub origin: i32,
    pub points: Vec<(f64, f64)>,
}

/// Bloch (Wannier-Stark) fit of a confined charge.
#[derive(Debug, Clone, Serialize)]
pub struct BlochFit {
    /// Breathing amplitude in sites.
    pub amplitude: f64,
    pub amplitude_err: f64,
    /// Oscillation period in units of 1/J.
    pub period: f64,
    pub period_err: f64,
    pub origin: i32,
    /// Root-mean-square residual of the profile fit.
    pub residual: f64,
}

fn argmax(row: &[f64]) -> usize {
    row.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
            if v > bv {
                (i, v)
            } else {
                (bi, bv)
            }
        })
        .0
}

/// Least-squares light-cone velocity.
///
/// For every bond other than the starting one, the first time its signal
/// reaches `threshold` times that bond's own maximum over the window is
/// located by linear interpolation. The slope of distance against that time
/// is the front velocity. Bonds already above threshold at the first time, or
/// with no positive signal, carry no front and are skipped.
pub fn fit_light_cone(map: &SpatiotemporalMap, threshold: f64) -> Result<LightConeFit> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InsufficientSpread(format!(
            "threshold {threshold} must lie in (0, 1)"
        )));
    }
    if map.n_times() < 2 {
        return Err(Error::InsufficientSpread(
            "fewer than two time slices".into(),
        ));
    }
    let x0 = argmax(&map.values[0]);
    let origin = map.sites[x0];
    let mut points = Vec::new();
    for (x, &site) in map.sites.iter().enumerate() {
        if x == x0 {
            continue;
        }
        let col = map.column(x);
        let peak = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if peak <= 1e-9 {
            continue;
        }
        let level = threshold * peak;
        let Some(k) = col.iter().position(|&v| v >= level) else {
            continue;
        };
        if k == 0 {
            continue;
        }
        let (t0, t1) = (map.times[k - 1], map.times[k]);
        let (v0, v1) = (col[k - 1], col[k]);
        let t = t0 + (level - v0) / (v1 - v0) * (t1 - t0);
        points.push((t, f64::from((site - origin).abs())));
    }
    let max_dist = points.iter().map(|p| p.1).fold(0.0, f64::max);
    if points.len() < 2 || max_dist <= 1.0 {
        return Err(Error::InsufficientSpread(format!(
            "front reached {} bonds, farthest {max_dist} sites",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mt = points.iter().map(|p| p.0).sum::<f64>() / n;
    let md = points.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = points.iter().map(|p| (p.0 - mt).powi(2)).sum();
    if stt <= 0.0 {
        return Err(Error::InsufficientSpread(
            "all crossings at the same time".into(),
        ));
    }
    let std: f64 = points.iter().map(|p| (p.0 - mt) * (p.1 - md)).sum();
    let velocity = std / stt;
    let intercept = md - velocity * mt;
    let residual = (points
        .iter()
        .map(|p| (p.1 - intercept - velocity * p.0).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(LightConeFit {
        velocity,
        intercept,
        residual,
        origin,
        points,
    })
}

/// `J_n(x)` for all `0 ≤ n ≤ nmax` via Miller's backward recurrence.
fn bessel_table(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let start = 2 * ((nmax.max(ax as usize) + 30 + (ax.sqrt() * 10.0) as usize) / 2);
    let mut jp1 = 0.0;
    let mut j = 1e-300;
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let jm1 = 2.0 * k as f64 / ax * j - jp1;
        jp1 = j;
        j = jm1;
        let idx = k - 1;
        if idx <= nmax {
            out[idx] = j;
        }
        if idx > 0 && idx % 2 == 0 {
            norm += 2.0 * j;
        }
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp1 *= 1e-250;
            norm *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    norm += j;
    for (n, v) in out.iter_mut().enumerate() {
        *v /= norm;
        if x < 0.0 && n % 2 == 1 {
            *v = -*v;
        }
    }
    out
}

/// Bessel function of the first kind of integer order.
pub fn bessel_j(n: i32, x: f64) -> f64 {
    let m = n.unsigned_abs() as usize;
    let v = bessel_table(m, x)[m];
    if n < 0 && m % 2 == 1 {
        -v
    } else {
        v
    }
}

/// Fits `q_{x0+n}(t) ≈ J_n(A·|sin(πt/T)|)²`, the breathing profile of a
/// particle in a linear potential started on one site, over amplitude `A`
/// and period `T`.
///
/// A coarse grid seeds a Levenberg-Marquardt refinement. The mean charge
/// position is not used: for a kink started on a site the breathing is
/// symmetric and the mean stays put. Returns `NoOscillation` when the best
/// period exceeds the window or no breathing is visible.
pub fn fit_bloch(map: &SpatiotemporalMap) -> Result<BlochFit> {
    if map.n_times() < 4 {
        return Err(Error::NoOscillation("fewer than four time slices".into()));
    }
    let x0 = argmax(&map.values[0]);
    let origin = map.sites[x0];
    let offsets: Vec<usize> = map
        .sites
        .iter()
        .map(|&s| (s - origin).unsigned_abs() as usize)
        .collect();
    let nmax = offsets.iter().copied().max().unwrap_or(0);
    let t_start = map.times[0];
    let ts: Vec<f64> = map.times.iter().map(|t| t - t_start).collect();
    let window = *ts.last().expect("non-empty");

    let residuals = |p: &[f64]| -> Vec<f64> {
        let (a, period) = (p[0], p[1]);
        let mut r = Vec::with_capacity(ts.len() * offsets.len());
        for (row, &t) in map.values.iter().zip(&ts) {
            let gamma = a * (std::f64::consts::PI * t / period).sin().abs();
            let table = bessel_table(nmax, gamma);
            for (&v, &n) in row.iter().zip(&offsets) {
                r.push(v - table[n] * table[n]);
            }
        }
        r
    };
    let cost = |p: &[f64]| residuals(p).iter().map(|v| v * v).sum::<f64>();

    let mut best = (f64::INFINITY, 0.0, 0.0);
    let mut a = 0.2;
    while a < 7.0 {
        let mut period = 0.5;
        while period < window {
            let c = cost(&[a, period]);
            if c < best.0 {
                best = (c, a, period);
            }
            period += 0.1;
        }
        a += 0.1;
    }
    if !best.0.is_finite() {
        return Err(Error::NoOscillation(
            "window shorter than the smallest trial period".into(),
        ));
    }
    let fit = levenberg_marquardt(residuals, &[best.1, best.2], LmOptions::default())?;
    let amplitude = fit.params[0].abs();
    let period = fit.params[1].abs();
    if amplitude < 0.05 {
        return Err(Error::NoOscillation(format!(
            "no breathing of the charge profile (amplitude {amplitude:.3})"
        )));
    }
    if period > window {
        return Err(Error::NoOscillation(format!(
            "best period {period:.2} exceeds the window {window:.2}"
        )));
    }
    let errs = fit.std_errors.unwrap_or_else(|| vec![f64::NAN; 2]);
    Ok(BlochFit {
        amplitude,
        amplitude_err: errs[0],
        period,
        period_err: errs[1],
        origin,
        residual: (fit.objective / (ts.len() * offsets.len()) as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_reference_values() {
        let cases = [
            (0, 1.0, 0.765_197_686_557_966_6),
            (1, 1.0, 0.440_050_585_744_933_5),
            (0, 10.0, -0.245_935_764_451_348_3),
            (5, 10.0, -0.234_061_528_186_793_6),
            (3, 2.5, 0.216_600_391_039_113_6),
            (10, 0.5, 2.613_177_360_822_802e-13),
        ];
        for (n, x, want) in cases {
            let got = bessel_j(n, x);
            assert!(
                (got - want).abs() < 1e-13 * want.abs().max(1e-3),
                "J_{n}({x}) = {got}"
            );
        }
        assert!((bessel_j(-1, 1.0) + 0.440_050_585_744_933_5).abs() < 1e-14);
        assert_eq!(bessel_j(0, 0.0), 1.0);
    }

    #[test]
    fn bessel_sum_rule() {
        for &x in &[0.3, 2.0, 6.5, 15.0] {
            let t = bessel_table(60, x);
            let s = t[0] * t[0] + 2.0 * t[1..].iter().map(|v| v * v).sum::<f64>();
            assert!((s - 1.0).abs() < 1e-13);
        }
    }

    fn synthetic_bloch(a: f64, period: f64, t_max: f64) -> SpatiotemporalMap {
        let sites: Vec<i32> = (-7..=8).collect();
        let mut m = SpatiotemporalMap::new("q", sites.clone());
        for k in 0..=160 {
            let t = t_max * k as f64 / 160.0;
            let gamma = a * (std::f64::consts::PI * t / period).sin().abs();
            m.push(
                t,
                sites.iter().map(|&s| bessel_j(s, gamma).powi(2)).collect(),
            )
            .unwrap();
        }
        m
    }

    #[test]
    fn bloch_recovers_synthetic_parameters() {
        let fit = fit_bloch(&synthetic_bloch(2.5, 7.85, 16.0)).unwrap();
        assert!((fit.amplitude - 2.5).abs() < 1e-6);
        assert!((fit.period - 7.85).abs() < 1e-6);
        assert_eq!(fit.origin, 0);
    }

    #[test]
    fn bloch_long_period_is_no_oscillation() {
        let r = fit_bloch(&synthetic_bloch(6.0, 30.0, 16.0));
        assert!(matches!(r, Err(Error::NoOscillation(_))));
    }

    #[test]
    fn light_cone_on_synthetic_front() {
        let sites: Vec<i32> = (-6..=6).collect();
        let mut m = SpatiotemporalMap::new("rho", sites.clone());
        for k in 0..=200 {
            let t = k as f64 * 0.02;
            let row = sites
                .iter()
                .map(|&s| {
                    let d = f64::from(s.abs());
                    if s == 0 {
                        1.0
                    } else {
                        (1.0 / (1.0 + (-(2.0 * t - d) * 4.0).exp())) / (1.0 + d)
                    }
                })
                .collect();
            m.push(t, row).unwrap();
        }
        let fit = fit_light_cone(&m, 0.5).unwrap();
        assert!((fit.velocity - 2.0).abs() < 0.1, "{}", fit.velocity);
    }

    #[test]
    fn frozen_map_has_no_spread() {
        let mut m = SpatiotemporalMap::new("rho", vec![-1, 0, 1]);
        for k in 0..10 {
            m.push(k as f64, vec![0.0, 1.0, 0.0]).unwrap();
        }
        assert!(matches!(
            fit_light_cone(&m, 0.5),
            Err(Error::InsufficientSpread(_))
        ));
    }
}
