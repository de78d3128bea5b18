//! Least-squares lineshape fitting.

mod lm;

pub use lm::{levenberg_marquardt, FitResult, LmOptions};

use crate::error::{Error, Result};

/// How a parameter transforms when the data axes are rescaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    /// A location on the x axis.
    Position,
    /// A length on the x axis.
    Width,
    /// A value on the y axis.
    Amplitude,
}

/// A parametric model `y = f(p; x)` with an analytic gradient in `p`.
pub trait FitModel {
    fn name(&self) -> &str;
    fn kinds(&self) -> &[ParamKind];
    fn eval(&self, p: &[f64], x: f64) -> f64;
    /// Writes `∂f/∂p_i` at `x` into `out`.
    fn gradient(&self, p: &[f64], x: f64, out: &mut [f64]);
}

/// `offset + amplitude / (1 + (2(x - center)/fwhm)²)`.
///
/// Parameters: `[center, fwhm, amplitude, offset]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Lorentzian;

impl FitModel for Lorentzian {
    fn name(&self) -> &str {
        "lorentzian"
    }

    fn kinds(&self) -> &[ParamKind] {
        use ParamKind::*;
        &[Position, Width, Amplitude, Amplitude]
    }

    fn eval(&self, p: &[f64], x: f64) -> f64 {
        let u = 2.0 * (x - p[0]) / p[1];
        p[3] + p[2] / (1.0 + u * u)
    }

    fn gradient(&self, p: &[f64], x: f64, out: &mut [f64]) {
        let (c, w, a) = (p[0], p[1], p[2]);
        let u = 2.0 * (x - c) / w;
        let d = 1.0 + u * u;
        out[0] = 4.0 * a * u / (w * d * d);
        out[1] = 2.0 * a * u * u / (w * d * d);
        out[2] = 1.0 / d;
        out[3] = 1.0;
    }
}

fn gauss(x: f64, c: f64, s: f64) -> (f64, f64) {
    let z = (x - c) / s;
    ((-0.5 * z * z).exp(), z)
}

/// `offset + amplitude exp(-(x - center)²/(2σ²))`.
///
/// Parameters: `[center, sigma, amplitude, offset]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Gaussian;

impl FitModel for Gaussian {
    fn name(&self) -> &str {
        "gaussian"
    }

    fn kinds(&self) -> &[ParamKind] {
        use ParamKind::*;
        &[Position, Width, Amplitude, Amplitude]
    }

    fn eval(&self, p: &[f64], x: f64) -> f64 {
        p[3] + p[2] * gauss(x, p[0], p[1]).0
    }

    fn gradient(&self, p: &[f64], x: f64, out: &mut [f64]) {
        let (e, z) = gauss(x, p[0], p[1]);
        out[0] = p[2] * e * z / p[1];
        out[1] = p[2] * e * z * z / p[1];
        out[2] = e;
        out[3] = 1.0;
    }
}

/// Two Gaussians on a common offset.
///
/// Parameters: `[c1, σ1, a1, c2, σ2, a2, offset]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct GaussianSum2;

impl FitModel for GaussianSum2 {
    fn name(&self) -> &str {
        "gaussian_sum2"
    }

    fn kinds(&self) -> &[ParamKind] {
        use ParamKind::*;
        &[Position, Width, Amplitude, Position, Width, Amplitude, Amplitude]
    }

    fn eval(&self, p: &[f64], x: f64) -> f64 {
        p[6] + p[2] * gauss(x, p[0], p[1]).0 + p[5] * gauss(x, p[3], p[4]).0
    }

    fn gradient(&self, p: &[f64], x: f64, out: &mut [f64]) {
        Gaussian.gradient(&[p[0], p[1], p[2], 0.0], x, &mut out[0..4]);
        Gaussian.gradient(&[p[3], p[4], p[5], 0.0], x, &mut out[3..7]);
        out[6] = 1.0;
    }
}

fn argmax(ys: &[f64]) -> usize {
    ys.iter()
        .enumerate()
        .fold(0, |best, (i, &y)| if y > ys[best] { i } else { best })
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median of the outer tenth of the data on each side.
fn tail_level(ys: &[f64]) -> f64 {
    let k = (ys.len() / 10).max(1);
    median(ys[..k].iter().chain(&ys[ys.len() - k..]).copied().collect())
}

/// Interpolated positions where `ys` falls through `level` on either side
/// of `peak`.
fn crossings(xs: &[f64], ys: &[f64], peak: usize, level: f64) -> (Option<f64>, Option<f64>) {
    let interp = |i: usize, j: usize| {
        let t = (level - ys[i]) / (ys[j] - ys[i]);
        xs[i] + t * (xs[j] - xs[i])
    };
    let left = (0..peak).rev().find(|&i| ys[i] < level).map(|i| interp(i, i + 1));
    let right = (peak + 1..ys.len()).find(|&i| ys[i] < level).map(|i| interp(i - 1, i));
    (left, right)
}

fn check_sorted(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::invalid(format!(
            "{} x values but {} y values",
            xs.len(),
            ys.len()
        )));
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("fit abscissae must be strictly increasing"));
    }
    Ok(())
}

/// Fits a single Lorentzian peak, initialized from the data.
///
/// Fails when the data do not fall below half of the peak height on both
/// sides of the maximum.
pub fn fit_lorentzian(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    check_sorted(xs, ys)?;
    if xs.len() < 8 {
        return Err(Error::invalid(format!(
            "a Lorentzian fit needs at least 8 points, got {}",
            xs.len()
        )));
    }
    let offset = tail_level(ys);
    let peak = argmax(ys);
    let amp = ys[peak] - offset;
    let (left, right) = crossings(xs, ys, peak, offset + 0.5 * amp);
    let (Some(left), Some(right)) = (left, right) else {
        return Err(Error::invalid(
            "no half-maximum crossing on both sides of the peak; widen the fit window",
        ));
    };
    let init = [xs[peak], right - left, amp, offset];
    levenberg_marquardt(&Lorentzian, xs, ys, &init, LmOptions::default())
}

/// Fits a single Gaussian peak, initialized from the data.
pub fn fit_gaussian(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    check_sorted(xs, ys)?;
    if xs.len() < 8 {
        return Err(Error::invalid(format!(
            "a Gaussian fit needs at least 8 points, got {}",
            xs.len()
        )));
    }
    let offset = tail_level(ys);
    let peak = argmax(ys);
    let sigma = lobe_sigma(xs, ys, peak, offset);
    let init = [xs[peak], sigma, ys[peak] - offset, offset];
    levenberg_marquardt(&Gaussian, xs, ys, &init, LmOptions::default())
}

/// σ estimated from whichever half-maximum crossings exist around `peak`.
fn lobe_sigma(xs: &[f64], ys: &[f64], peak: usize, offset: f64) -> f64 {
    const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_4;
    let level = offset + 0.5 * (ys[peak] - offset);
    let half = match crossings(xs, ys, peak, level) {
        (Some(l), Some(r)) => 0.5 * (r - l),
        (Some(l), None) => xs[peak] - l,
        (None, Some(r)) => r - xs[peak],
        (None, None) => (xs[xs.len() - 1] - xs[0]) / 6.0,
    };
    (2.0 * half / FWHM_PER_SIGMA).max(f64::EPSILON * (xs[xs.len() - 1] - xs[0]).abs())
}

/// Fits a pair of Gaussians.
///
/// With `splitting` the second component starts that far above the main
/// peak; otherwise it starts on the second-highest separated local maximum.
/// When the data show only one lobe and no splitting is given, a single
/// Gaussian is fitted instead and reported with `a2 = 0`, the second
/// component sitting on the first, infinite errors for it, and `degenerate`
/// set.
pub fn fit_gaussian_sum2(xs: &[f64], ys: &[f64], splitting: Option<f64>) -> Result<FitResult> {
    check_sorted(xs, ys)?;
    if xs.len() < 14 {
        return Err(Error::invalid(format!(
            "a two-Gaussian fit needs at least 14 points, got {}",
            xs.len()
        )));
    }
    let offset = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let p1 = argmax(ys);
    let a1 = ys[p1] - offset;
    let s1 = lobe_sigma(xs, ys, p1, offset);
    let c1 = xs[p1];
    let first = |x: f64| a1 * gauss(x, c1, s1).0;

    let second = match splitting {
        Some(d) => {
            let c2 = c1 + d;
            let near = (0..xs.len())
                .min_by(|&i, &j| (xs[i] - c2).abs().total_cmp(&(xs[j] - c2).abs()))
                .unwrap();
            let excess = ys[near] - offset - first(xs[near]);
            let shape = gauss(xs[near], c2, s1).0;
            let a2 = if shape > 1e-3 { excess / shape } else { 0.0 };
            Some((c2, s1, a2.clamp(0.01 * a1, a1)))
        }
        None => {
            // Local maxima at least one σ from the main peak.
            let mut candidates: Vec<usize> = (1..xs.len() - 1)
                .filter(|&i| ys[i] >= ys[i - 1] && ys[i] > ys[i + 1])
                .filter(|&i| (xs[i] - c1).abs() > s1)
                .collect();
            candidates.sort_by(|&i, &j| ys[j].total_cmp(&ys[i]));
            candidates
                .first()
                .map(|&i| (xs[i], s1, (ys[i] - offset - first(xs[i])).max(0.01 * a1)))
        }
    };
    let Some((c2, s2, a2)) = second else {
        return single_lobe_fallback(xs, ys, [c1, s1, a1, offset]);
    };
    let init = [c1, s1, a1, c2, s2, a2, offset];
    levenberg_marquardt(&GaussianSum2, xs, ys, &init, LmOptions::default())
}

/// A one-Gaussian fit expressed in two-Gaussian parameters.
fn single_lobe_fallback(xs: &[f64], ys: &[f64], init: [f64; 4]) -> Result<FitResult> {
    let one = levenberg_marquardt(&Gaussian, xs, ys, &init, LmOptions::default())?;
    let [c, s, a, off] = [one.params[0], one.params[1], one.params[2], one.params[3]];
    let e = &one.param_errors;
    Ok(FitResult {
        model: GaussianSum2.name().to_string(),
        params: vec![c, s, a, c, s, 0.0, off],
        param_errors: vec![e[0], e[1], e[2], f64::INFINITY, f64::INFINITY, f64::INFINITY, e[3]],
        degenerate: true,
        ..one
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(model: &dyn FitModel, p: &[f64], xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| model.eval(p, x)).collect()
    }

    fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn lorentzian_recovers_exact_parameters() {
        let xs = axis(-300.0, 300.0, 301);
        let truth = [12.0, 80.0, 0.09, 0.001];
        let ys = sample(&Lorentzian, &truth, &xs);
        let fit = fit_lorentzian(&xs, &ys).unwrap();
        assert!(fit.converged);
        for (a, b) in fit.params.iter().zip(truth) {
            assert!((a - b).abs() <= 1e-6 * b.abs().max(1.0), "{:?}", fit.params);
        }
    }

    #[test]
    fn start_at_truth_stops_immediately() {
        let xs = axis(-300.0, 300.0, 201);
        let truth = [0.0, 80.0, 1.0, 0.0];
        let ys = sample(&Lorentzian, &truth, &xs);
        let fit = levenberg_marquardt(&Lorentzian, &xs, &ys, &truth, LmOptions::default()).unwrap();
        assert!(fit.converged);
        assert!(fit.iterations <= 2);
    }

    #[test]
    fn costs_never_increase() {
        let xs = axis(-400.0, 400.0, 161);
        let ys = sample(&Lorentzian, &[30.0, 60.0, 2.0, 0.1], &xs);
        let fit = levenberg_marquardt(&Lorentzian, &xs, &ys, &[-50.0, 200.0, 1.0, 0.0], LmOptions::default())
            .unwrap();
        assert!(fit.cost_history.windows(2).all(|w| w[1] <= w[0]));
        assert!(fit.residual_rms <= fit.initial_rms);
    }

    #[test]
    fn missing_half_max_is_an_error() {
        let xs = axis(0.0, 10.0, 20);
        let ys: Vec<f64> = xs.iter().map(|x| x * 0.1).collect();
        assert!(fit_lorentzian(&xs, &ys).is_err());
    }

    #[test]
    fn too_few_points() {
        let xs = axis(0.0, 1.0, 5);
        let ys = vec![0.0, 1.0, 2.0, 1.0, 0.0];
        assert!(fit_lorentzian(&xs, &ys).is_err());
        assert!(levenberg_marquardt(&GaussianSum2, &xs, &ys, &[0.0; 7], LmOptions::default()).is_err());
    }

    #[test]
    fn gaussian_pair_with_known_splitting() {
        let xs = axis(-1500.0, 2500.0, 801);
        let truth = [0.0, 230.0, 1.0, 814.5, 230.0, 0.4, 0.0];
        let ys = sample(&GaussianSum2, &truth, &xs);
        let fit = fit_gaussian_sum2(&xs, &ys, Some(814.5)).unwrap();
        assert!(fit.converged);
        for (a, b) in fit.params.iter().zip(truth) {
            assert!((a - b).abs() < 1e-5 * b.abs().max(1.0), "{:?}", fit.params);
        }
    }

    #[test]
    fn single_lobe_pair_fit_is_degenerate() {
        let xs = axis(-1000.0, 1000.0, 401);
        let ys = sample(&Gaussian, &[50.0, 200.0, 1.0, 0.0], &xs);
        let fit = fit_gaussian_sum2(&xs, &ys, None).unwrap();
        assert!(fit.degenerate);
        assert!(fit.params[5].abs() < 1e-6, "{:?}", fit.params);
        assert!((fit.params[0] - 50.0).abs() < 1e-6);
        assert!((fit.params[1] - 200.0).abs() < 1e-6);
    }

    #[test]
    fn gaussian_fit() {
        let xs = axis(-1000.0, 1000.0, 401);
        let truth = [-20.0, 150.0, 3.0, 0.5];
        let fit = fit_gaussian(&xs, &sample(&Gaussian, &truth, &xs)).unwrap();
        for (a, b) in fit.params.iter().zip(truth) {
            assert!((a - b).abs() < 1e-6 * b.abs().max(1.0));
        }
    }
}
