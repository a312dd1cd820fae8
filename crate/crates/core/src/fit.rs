//! Rate estimates and threshold fits from finite-size curves.
//!
//! The finite-size-scaling fit models every rate as
//! `A + B·x + C·x²` with `x = (p − p_th)·d^(1/ν)`. For fixed `(p_th, ν)` the
//! coefficients are a weighted linear least-squares problem; `(p_th, ln ν)`
//! is found by Nelder–Mead on the resulting χ². Pairwise crossings of
//! linearly interpolated curves seed the search and serve as the fallback.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Observed failure frequency at one point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub failures: u64,
    pub trials: u64,
    pub rate: f64,
    /// Wald standard error.
    pub stderr: f64,
    /// 95% Wilson score interval.
    pub wilson: (f64, f64),
}

impl RateEstimate {
    pub fn new(failures: u64, trials: u64) -> Self {
        assert!(trials > 0 && failures <= trials, "invalid counts {failures}/{trials}");
        let n = trials as f64;
        let r = failures as f64 / n;
        let z = 1.959_963_984_540_054;
        let z2 = z * z;
        let centre = (r + z2 / (2.0 * n)) / (1.0 + z2 / n);
        let half = z / (1.0 + z2 / n) * (r * (1.0 - r) / n + z2 / (4.0 * n * n)).sqrt();
        Self {
            failures,
            trials,
            rate: r,
            stderr: (r * (1.0 - r) / n).sqrt(),
            wilson: ((centre - half).max(0.0), (centre + half).min(1.0)),
        }
    }

    /// Variance used for fit weights, floored so that empty or saturated
    /// points still carry finite weight.
    fn fit_variance(&self) -> f64 {
        let n = self.trials as f64;
        (self.rate * (1.0 - self.rate)).max(1.0 / n) / n
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitKind {
    PairwiseCrossing,
    FiniteSizeScaling,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub p_th: f64,
    pub uncertainty: f64,
    pub kind: FitKind,
    /// Scaling exponent; finite-size-scaling fits only.
    pub nu: Option<f64>,
    /// χ² per degree of freedom of the scaling fit.
    pub chi2_per_dof: Option<f64>,
    /// Mean of the pairwise crossings.
    pub pairwise: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("need at least 2 sizes, got {0}")]
    TooFewSizes(usize),
    #[error("size {d} has {n} points, need at least 4")]
    TooFewPoints { d: usize, n: usize },
    #[error("no crossing in the swept range")]
    NoCrossing,
}

/// Rate curves keyed by linear size `d`, each a list of `(p, rate)`.
pub type Curves = BTreeMap<usize, Vec<(f64, RateEstimate)>>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub bootstrap_reps: usize,
    pub bootstrap_seed: u64,
    pub nu_init: f64,
    /// Points per size, nearest the pairwise crossing, entering the scaling
    /// fit; 0 uses every point.
    pub window: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            bootstrap_reps: 100,
            bootstrap_seed: 0x5eed,
            nu_init: 1.0,
            window: 4,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Point {
    p: f64,
    d: f64,
    rate: f64,
    weight: f64,
}

fn check(curves: &Curves) -> Result<(), FitError> {
    if curves.len() < 2 {
        return Err(FitError::TooFewSizes(curves.len()));
    }
    for (&d, c) in curves {
        if c.len() < 4 {
            return Err(FitError::TooFewPoints { d, n: c.len() });
        }
    }
    Ok(())
}

fn interpolate(curve: &[(f64, f64)], p: f64) -> Option<f64> {
    curve.windows(2).find_map(|w| {
        let ((p0, r0), (p1, r1)) = (w[0], w[1]);
        if p0 <= p && p <= p1 && p1 > p0 {
            Some(r0 + (r1 - r0) * (p - p0) / (p1 - p0))
        } else {
            None
        }
    })
}

/// Linearly interpolated crossings of every pair of sizes, averaged.
pub fn pairwise_crossing(curves: &BTreeMap<usize, Vec<(f64, f64)>>) -> Option<f64> {
    let sorted: Vec<(usize, Vec<(f64, f64)>)> = curves
        .iter()
        .map(|(&d, c)| {
            let mut c = c.clone();
            c.sort_by(|a, b| a.0.total_cmp(&b.0));
            (d, c)
        })
        .collect();
    let mut found = Vec::new();
    for a in 0..sorted.len() {
        for b in a + 1..sorted.len() {
            let (small, big) = (&sorted[a].1, &sorted[b].1);
            let mut grid: Vec<f64> = small.iter().chain(big.iter()).map(|x| x.0).collect();
            grid.sort_by(f64::total_cmp);
            grid.dedup();
            let diffs: Vec<(f64, f64)> = grid
                .iter()
                .filter_map(|&p| Some((p, interpolate(big, p)? - interpolate(small, p)?)))
                .collect();
            for w in diffs.windows(2) {
                let ((p0, g0), (p1, g1)) = (w[0], w[1]);
                if g0 <= 0.0 && g1 > 0.0 {
                    found.push(p0 + (p1 - p0) * (-g0) / (g1 - g0));
                }
            }
        }
    }
    if found.is_empty() {
        None
    } else {
        Some(found.iter().sum::<f64>() / found.len() as f64)
    }
}

/// Solves the 3×3 system `m·x = v` by Gaussian elimination.
#[allow(clippy::needless_range_loop)]
fn solve3(mut m: [[f64; 3]; 3], mut v: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        v.swap(col, piv);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            v[row] -= f * v[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (v[row] - s) / m[row][row];
    }
    Some(x)
}

/// χ² of the best quadratic in the scaling variable.
fn chi2(points: &[Point], p_th: f64, nu: f64) -> f64 {
    let mut m = [[0.0; 3]; 3];
    let mut v = [0.0; 3];
    let xs: Vec<f64> = points
        .iter()
        .map(|pt| (pt.p - p_th) * pt.d.powf(1.0 / nu))
        .collect();
    for (pt, &x) in points.iter().zip(&xs) {
        let basis = [1.0, x, x * x];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += pt.weight * basis[i] * basis[j];
            }
            v[i] += pt.weight * basis[i] * pt.rate;
        }
    }
    let Some(c) = solve3(m, v) else {
        return f64::INFINITY;
    };
    points
        .iter()
        .zip(&xs)
        .map(|(pt, &x)| {
            let r = pt.rate - (c[0] + c[1] * x + c[2] * x * x);
            pt.weight * r * r
        })
        .sum()
}

/// Minimises `f` over two variables by Nelder–Mead.
fn nelder_mead(f: impl Fn([f64; 2]) -> f64, start: [f64; 2], step: [f64; 2], iters: usize) -> ([f64; 2], f64) {
    let mut s = [
        start,
        [start[0] + step[0], start[1]],
        [start[0], start[1] + step[1]],
    ];
    let mut fs = s.map(&f);
    for _ in 0..iters {
        let mut idx = [0, 1, 2];
        idx.sort_by(|&a, &b| fs[a].total_cmp(&fs[b]));
        s = idx.map(|i| s[i]);
        fs = idx.map(|i| fs[i]);
        let spread = (fs[2] - fs[0]).abs();
        let size = (0..2).map(|k| (s[2][k] - s[0][k]).abs().max((s[1][k] - s[0][k]).abs())).fold(0.0, f64::max);
        if spread < 1e-10 * (1.0 + fs[0].abs()) && size < 1e-9 {
            break;
        }
        let c = [(s[0][0] + s[1][0]) / 2.0, (s[0][1] + s[1][1]) / 2.0];
        let along = |t: f64| [c[0] + t * (s[2][0] - c[0]), c[1] + t * (s[2][1] - c[1])];
        let xr = along(-1.0);
        let fr = f(xr);
        if fr < fs[0] {
            let xe = along(-2.0);
            let fe = f(xe);
            if fe < fr {
                s[2] = xe;
                fs[2] = fe;
            } else {
                s[2] = xr;
                fs[2] = fr;
            }
        } else if fr < fs[1] {
            s[2] = xr;
            fs[2] = fr;
        } else {
            let xc = if fr < fs[2] { along(-0.5) } else { along(0.5) };
            let fc = f(xc);
            if fc < fs[2].min(fr) {
                s[2] = xc;
                fs[2] = fc;
            } else {
                for k in 1..3 {
                    s[k] = [(s[0][0] + s[k][0]) / 2.0, (s[0][1] + s[k][1]) / 2.0];
                    fs[k] = f(s[k]);
                }
            }
        }
    }
    let best = (0..3).min_by(|&a, &b| fs[a].total_cmp(&fs[b])).unwrap();
    (s[best], fs[best])
}

struct PointFit {
    p_th: f64,
    kind: FitKind,
    nu: Option<f64>,
    chi2_per_dof: Option<f64>,
    pairwise: f64,
}

fn fit_once(curves: &BTreeMap<usize, Vec<(f64, f64, u64)>>, opts: &FitOptions) -> Result<PointFit, FitError> {
    let plain: BTreeMap<usize, Vec<(f64, f64)>> = curves
        .iter()
        .map(|(&d, c)| (d, c.iter().map(|&(p, r, _)| (p, r)).collect()))
        .collect();
    let pairwise = pairwise_crossing(&plain).ok_or(FitError::NoCrossing)?;
    let points: Vec<Point> = curves
        .iter()
        .flat_map(|(&d, c)| {
            let mut c = c.clone();
            if opts.window > 0 && opts.window < c.len() {
                c.sort_by(|a, b| (a.0 - pairwise).abs().total_cmp(&(b.0 - pairwise).abs()));
                c.truncate(opts.window);
            }
            c.into_iter().map(move |(p, r, n)| {
                let est = RateEstimate::new((r * n as f64).round() as u64, n);
                Point {
                    p,
                    d: d as f64,
                    rate: r,
                    weight: 1.0 / est.fit_variance(),
                }
            })
        })
        .collect();
    let (lo, hi) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), pt| (a.min(pt.p), b.max(pt.p)));
    let objective = |x: [f64; 2]| {
        let nu = x[1].exp();
        if !(lo..=hi).contains(&x[0]) || !(0.05..=20.0).contains(&nu) {
            return f64::INFINITY;
        }
        chi2(&points, x[0], nu)
    };
    let (best, value) = nelder_mead(objective, [pairwise, opts.nu_init.ln()], [(hi - lo) / 10.0, 0.2], 400);
    let dof = points.len() as f64 - 5.0;
    if value.is_finite() {
        Ok(PointFit {
            p_th: best[0],
            kind: FitKind::FiniteSizeScaling,
            nu: Some(best[1].exp()),
            chi2_per_dof: Some(value / dof.max(1.0)),
            pairwise,
        })
    } else {
        Ok(PointFit {
            p_th: pairwise,
            kind: FitKind::PairwiseCrossing,
            nu: None,
            chi2_per_dof: None,
            pairwise,
        })
    }
}

fn raw(curves: &Curves) -> BTreeMap<usize, Vec<(f64, f64, u64)>> {
    curves
        .iter()
        .map(|(&d, c)| (d, c.iter().map(|(p, e)| (*p, e.rate, e.trials)).collect()))
        .collect()
}

/// Threshold from rate curves of at least two sizes, with a parametric
/// bootstrap over the binomial trial counts for the uncertainty. A scaling
/// fit with `chi2_per_dof > 1` has its spread scaled by `sqrt(chi2_per_dof)`.
pub fn fit_threshold(curves: &Curves, opts: &FitOptions) -> Result<ThresholdEstimate, FitError> {
    check(curves)?;
    let data = raw(curves);
    let base = fit_once(&data, opts)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.bootstrap_seed);
    let mut samples = Vec::with_capacity(opts.bootstrap_reps);
    for _ in 0..opts.bootstrap_reps {
        let resampled: BTreeMap<usize, Vec<(f64, f64, u64)>> = data
            .iter()
            .map(|(&d, c)| {
                let c = c
                    .iter()
                    .map(|&(p, r, n)| {
                        let k = Binomial::new(n, r.clamp(0.0, 1.0))
                            .expect("valid binomial")
                            .sample(&mut rng);
                        (p, k as f64 / n as f64, n)
                    })
                    .collect();
                (d, c)
            })
            .collect();
        if let Ok(f) = fit_once(&resampled, opts) {
            samples.push(if f.kind == base.kind { f.p_th } else { f.pairwise });
        }
    }
    let spread = if samples.len() >= 2 {
        let m = samples.iter().sum::<f64>() / samples.len() as f64;
        (samples.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (samples.len() - 1) as f64).sqrt()
    } else {
        (base.p_th - base.pairwise).abs()
    };
    let birge = base.chi2_per_dof.map_or(1.0, |c| c.max(1.0).sqrt());
    Ok(ThresholdEstimate {
        p_th: base.p_th,
        uncertainty: (spread * birge).max(1e-9),
        kind: base.kind,
        nu: base.nu,
        chi2_per_dof: base.chi2_per_dof,
        pairwise: base.pairwise,
    })
}
