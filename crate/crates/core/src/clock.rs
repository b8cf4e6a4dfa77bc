//! Clock analytics on a sampled time profile: cumulative probability, tick extraction and
//! accuracy metrics.

use serde::Serialize;

use crate::error::{Error, Result};

/// W(t_k) = ∫_{t_0}^{t_k} P by the trapezoid rule; W(t_0) = 0.
pub fn cumulative(times: &[f64], density: &[f64]) -> Vec<f64> {
    assert_eq!(times.len(), density.len());
    let mut w = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    for k in 0..times.len() {
        if k > 0 {
            acc += 0.5 * (times[k] - times[k - 1]) * (density[k] + density[k - 1]);
        }
        w.push(acc);
    }
    w
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tick {
    /// Peak center, refined by a parabola through the three top samples.
    pub t: f64,
    /// Probability between the flanking valleys.
    pub weight: f64,
    /// FWHM; valley-to-valley span if the profile never drops to half height.
    pub width: f64,
    pub height: f64,
    /// Valley-to-valley span used for the weight.
    pub start: f64,
    pub end: f64,
    /// False when a neighbour overlaps above half height.
    pub resolved: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TickTrain {
    pub ticks: Vec<Tick>,
    pub grid_step: f64,
    pub t_start: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct TickOptions {
    /// Minimum prominence as a fraction of the profile maximum.
    pub prominence: f64,
}

impl Default for TickOptions {
    fn default() -> Self {
        Self { prominence: 0.05 }
    }
}

/// Topographic prominence of every strict local maximum.
fn prominences(y: &[f64], peaks: &[usize]) -> Vec<f64> {
    peaks
        .iter()
        .map(|&p| {
            let h = y[p];
            let side = |range: &mut dyn Iterator<Item = usize>| {
                let mut low = h;
                for k in range {
                    if y[k] > h {
                        return low;
                    }
                    low = low.min(y[k]);
                }
                low
            };
            let left = side(&mut (0..p).rev());
            let right = side(&mut (p + 1..y.len()));
            h - left.max(right)
        })
        .collect()
}

fn refine_center(x: &[f64], y: &[f64], p: usize) -> f64 {
    if p == 0 || p + 1 >= y.len() {
        return x[p];
    }
    let (a, b, c) = (y[p - 1], y[p], y[p + 1]);
    let denom = a - 2.0 * b + c;
    if denom >= 0.0 {
        return x[p];
    }
    let shift = 0.5 * (a - c) / denom;
    x[p] + shift.clamp(-1.0, 1.0) * 0.5 * (x[p + 1] - x[p - 1])
}

fn crossing(x: &[f64], y: &[f64], from: usize, to: usize, level: f64) -> Option<f64> {
    let step: isize = if to > from { 1 } else { -1 };
    let mut k = from as isize;
    while k != to as isize {
        let next = k + step;
        let (y0, y1) = (y[k as usize], y[next as usize]);
        if y1 < level && y0 >= level {
            let f = (y0 - level) / (y0 - y1);
            return Some(x[k as usize] + f * (x[next as usize] - x[k as usize]));
        }
        k = next;
    }
    None
}

/// Peaks with prominence above `opts.prominence` of the maximum; weights integrate the
/// density between the minima separating neighbouring ticks.
pub fn extract_ticks(times: &[f64], density: &[f64], opts: TickOptions) -> Result<TickTrain> {
    assert_eq!(times.len(), density.len());
    let n = density.len();
    if n < 3 {
        return Err(Error::NoTicks);
    }
    let ymax = density.iter().copied().fold(0.0, f64::max);
    if !(ymax > 0.0) {
        return Err(Error::NoTicks);
    }
    // plateaus count once, at their left edge
    let candidates: Vec<usize> = (1..n - 1)
        .filter(|&k| density[k] > density[k - 1] && density[k] >= density[k + 1])
        .collect();
    let prom = prominences(density, &candidates);
    let peaks: Vec<usize> =
        candidates.iter().zip(&prom).filter(|(_, &p)| p >= opts.prominence * ymax).map(|(&k, _)| k).collect();
    if peaks.is_empty() {
        return Err(Error::NoTicks);
    }
    let valleys: Vec<usize> = peaks
        .windows(2)
        .map(|w| (w[0]..=w[1]).min_by(|&a, &b| density[a].total_cmp(&density[b])).unwrap())
        .collect();
    let w = cumulative(times, density);
    let ticks = peaks
        .iter()
        .enumerate()
        .map(|(j, &p)| {
            // edge ticks stop at the lowest sample towards the grid boundary
            let argmin = |r: std::ops::RangeInclusive<usize>| r.min_by(|&a, &b| density[a].total_cmp(&density[b])).unwrap();
            let lo = if j == 0 { argmin(0..=p) } else { valleys[j - 1] };
            let hi = if j + 1 == peaks.len() { argmin(p..=n - 1) } else { valleys[j] };
            let half = 0.5 * density[p];
            let left = crossing(times, density, p, lo, half);
            let right = crossing(times, density, p, hi, half);
            let resolved = left.is_some() && right.is_some();
            let width = right.unwrap_or(times[hi]) - left.unwrap_or(times[lo]);
            Tick {
                t: refine_center(times, density, p),
                weight: w[hi] - w[lo],
                width,
                height: density[p],
                start: times[lo],
                end: times[hi],
                resolved,
            }
        })
        .collect();
    Ok(TickTrain { ticks, grid_step: times[1] - times[0], t_start: times[0], t_end: times[n - 1] })
}

#[derive(Debug, Clone, Serialize)]
pub struct ClockReport {
    pub ticks: Vec<Tick>,
    pub tau_expected: f64,
    pub mean_spacing: f64,
    /// Sample standard deviation of the spacings.
    pub spacing_jitter: f64,
    /// Least-squares slope of width against tick time.
    pub width_growth: f64,
    /// Index of the last tick in the leading run with width < spacing/2.
    pub last_resolvable: Option<usize>,
    pub last_resolvable_time: Option<f64>,
}

pub fn clock_quality(tt: &TickTrain, tau_expected: f64) -> Result<ClockReport> {
    let ticks = &tt.ticks;
    if ticks.len() < 2 {
        return Err(Error::InsufficientTicks { found: ticks.len() });
    }
    let spacings: Vec<f64> = ticks.windows(2).map(|w| w[1].t - w[0].t).collect();
    let ns = spacings.len() as f64;
    let mean_spacing = spacings.iter().sum::<f64>() / ns;
    let spacing_jitter = if spacings.len() > 1 {
        (spacings.iter().map(|s| (s - mean_spacing).powi(2)).sum::<f64>() / (ns - 1.0)).sqrt()
    } else {
        0.0
    };
    let ts: Vec<f64> = ticks.iter().map(|k| k.t).collect();
    let ws: Vec<f64> = ticks.iter().map(|k| k.width).collect();
    let width_growth = linear_fit(&ts, &ws).slope;
    let local = |j: usize| {
        let left = if j > 0 { spacings[j - 1] } else { f64::INFINITY };
        let right = spacings.get(j).copied().unwrap_or(f64::INFINITY);
        left.min(right)
    };
    let mut last_resolvable = None;
    for (j, k) in ticks.iter().enumerate() {
        if k.resolved && k.width < 0.5 * local(j) {
            last_resolvable = Some(j);
        } else {
            break;
        }
    }
    Ok(ClockReport {
        ticks: ticks.clone(),
        tau_expected,
        mean_spacing,
        spacing_jitter,
        width_growth,
        last_resolvable,
        last_resolvable_time: last_resolvable.map(|j| ticks[j].t),
    })
}

/// Fraction of Σ P inside [t_a, t_b] lying more than a quarter period from every nominal
/// tick time t_0 + nτ. Near 0 for a working clock, near 1/2 once ticks have washed out.
pub fn off_tick_fraction(times: &[f64], density: &[f64], t0: f64, tau: f64, window: (f64, f64)) -> f64 {
    let (mut off, mut total) = (0.0, 0.0);
    for (&t, &p) in times.iter().zip(density) {
        if t < window.0 || t > window.1 {
            continue;
        }
        total += p;
        let phase = ((t - t0) / tau).rem_euclid(1.0);
        if (0.25..0.75).contains(&phase) {
            off += p;
        }
    }
    if total > 0.0 {
        off / total
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares y ≈ slope·x + intercept.
pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return LinearFit { slope: 0.0, intercept: my, r_squared: 0.0 };
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    LinearFit { slope, intercept: my - slope * mx, r_squared }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::LocalizationMatrix;
    use crate::modes::ModeSpace;
    use crate::probability::{timescales, DensityEvaluator, Normalization};
    use crate::states::{coherent_state, CoherentParams, RingState};
    use num_complex::Complex64;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn profile(ms: &ModeSpace, cp: &CoherentParams, phi: f64, times: &[f64]) -> Vec<f64> {
        let s = coherent_state(ms, cp).unwrap();
        let det = LocalizationMatrix::maximal(-ms.m_max..=ms.m_max);
        let e = DensityEvaluator::new(&s, &det, ms, None, Normalization::UnitPeriod).unwrap();
        e.grid(times, &[phi]).unwrap().density
    }

    fn grid(t_end: f64, dt: f64) -> Vec<f64> {
        (0..).map(|j| j as f64 * dt).take_while(|&t| t <= t_end).collect()
    }

    #[test]
    fn massless_staircase() {
        let ms = ModeSpace::new(0.0, 1.0, 400).unwrap();
        let cp = CoherentParams::new(0.0, 150.0, 10.0).unwrap();
        let phi = 1.0;
        let tau = 2.0 * PI;
        let times = grid(5.0 * tau, tau / 400.0);
        let p = profile(&ms, &cp, phi, &times);
        let w = cumulative(&times, &p);
        assert!(w.windows(2).all(|x| x[1] >= x[0]));
        let tt = extract_ticks(&times, &p, TickOptions::default()).unwrap();
        assert_eq!(tt.ticks.len(), 5);
        let dt = times[1] - times[0];
        for (n, k) in tt.ticks.iter().enumerate() {
            assert!((k.t - (phi + n as f64 * tau)).abs() < dt, "{n}: {}", k.t);
            assert!((k.weight - 1.0).abs() < 1e-6);
        }
        // flat treads: between ticks W moves by < 1% of a step
        for n in 0..4 {
            let a = phi + n as f64 * tau + 0.3 * tau;
            let b = phi + (n + 1) as f64 * tau - 0.3 * tau;
            let at = |t: f64| w[times.iter().position(|&x| x >= t).unwrap()];
            assert!(at(b) - at(a) < 0.01);
        }
        let q = clock_quality(&tt, tau).unwrap();
        assert!((q.mean_spacing - tau).abs() < dt);
        assert!(q.spacing_jitter < dt);
        assert!(q.width_growth.abs() < 1e-6);
        assert_eq!(q.last_resolvable, Some(4));
    }

    #[test]
    fn single_mode_is_linear() {
        let ms = ModeSpace::new(1.0, 1.0, 10).unwrap();
        let s = RingState::from_modes(&ms, &[(3, Complex64::new(1.0, 0.0))]).unwrap();
        let det = LocalizationMatrix::maximal(-10..=10);
        let e = DensityEvaluator::new(&s, &det, &ms, None, Normalization::UnitPeriod).unwrap();
        let times = grid(20.0, 0.1);
        let p = e.grid(&times, &[0.5]).unwrap().density;
        let w = cumulative(&times, &p);
        let fit = linear_fit(&times, &w);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(matches!(extract_ticks(&times, &p, TickOptions::default()), Err(Error::NoTicks)));
    }

    #[test]
    fn one_tick_is_insufficient() {
        let times = grid(10.0, 0.01);
        let p: Vec<f64> = times.iter().map(|t| (-(t - 5.0) * (t - 5.0)).exp()).collect();
        let tt = extract_ticks(&times, &p, TickOptions::default()).unwrap();
        assert_eq!(tt.ticks.len(), 1);
        assert!((tt.ticks[0].width - 2.0 * 2f64.ln().sqrt()).abs() < 1e-3);
        assert!(matches!(clock_quality(&tt, 1.0), Err(Error::InsufficientTicks { found: 1 })));
    }

    #[test]
    fn massive_clock_spacing_and_breakdown() {
        let ms = ModeSpace::new(1000.0, 1.0, 1200).unwrap();
        let cp = CoherentParams::new(0.0, 1000.0, 10.0).unwrap();
        let ts = timescales(&ms, cp.xi, cp.alpha);
        let dt = ts.tau / 40.0;
        let times = grid(3.0 * ts.t_q, dt);
        let p = profile(&ms, &cp, PI, &times);
        let tt = extract_ticks(&times, &p, TickOptions::default()).unwrap();
        let early: Vec<&Tick> = tt.ticks.iter().filter(|k| k.t < 0.5 * ts.t_q).collect();
        for w in early.windows(2) {
            assert!((w[1].t - w[0].t - ts.tau).abs() < 2.0 * dt, "{} {}", w[1].t - w[0].t, ts.tau);
        }
        let q = clock_quality(&tt, ts.tau).unwrap();
        let last = q.last_resolvable_time.unwrap();
        assert!(last > 0.5 * ts.t_q && last < 2.0 * ts.t_q, "{last} vs T_q = {}", ts.t_q);
        // widths grow while the ticks are resolved
        assert!(early.last().unwrap().width > early[0].width);
    }

    proptest! {
        #[test]
        fn cumulative_monotone(ys in proptest::collection::vec(0.0f64..5.0, 2..200)) {
            let xs: Vec<f64> = (0..ys.len()).map(|j| j as f64 * 0.1).collect();
            let w = cumulative(&xs, &ys);
            prop_assert_eq!(w[0], 0.0);
            prop_assert!(w.windows(2).all(|p| p[1] >= p[0]));
        }
    }
}
