//! Globally adaptive Gauss-Kronrod (G10/K21) quadrature for vector-valued
//! integrands on a finite interval with user breakpoints.
//!
//! Each component has its own absolute and relative tolerance; the relative
//! one is measured against the integral of `|f_c|`. The error of an interval
//! is the QUADPACK estimate built from the difference between the embedded
//! 10-point Gauss rule and the 21-point Kronrod rule.

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_22,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_725,
    0.054_755_896_574_351_995,
    0.075_039_674_810_919_96,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_84,
    0.134_709_217_311_473_34,
    0.142_775_938_577_060_09,
    0.147_739_104_901_338_49,
    0.149_445_554_002_916_9,
];

// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

/// Per-component accuracy target: `err <= max(abs, rel * int |f|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Tolerance { abs, rel }
    }

    pub fn target(&self, abs_integral: f64) -> f64 {
        self.abs.max(self.rel * abs_integral)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Integral {
    pub value: Vec<f64>,
    pub error: Vec<f64>,
    /// Integral of `|f_c|`.
    pub abs_value: Vec<f64>,
    pub intervals: usize,
    pub evaluations: usize,
    pub converged: bool,
}

struct Piece {
    a: f64,
    b: f64,
    value: Vec<f64>,
    error: Vec<f64>,
    abs_value: Vec<f64>,
}

fn gk21<F: FnMut(f64, &mut [f64])>(f: &mut F, a: f64, b: f64, m: usize, buf: &mut [f64]) -> Piece {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = vec![0.0; m];
    let mut g = vec![0.0; m];
    let mut abs = vec![0.0; m];
    let mut fv = vec![0.0; 21 * m];
    // Node order: 10 left, centre, 10 right.
    for j in 0..10 {
        f(c - h * XGK[j], buf);
        fv[j * m..(j + 1) * m].copy_from_slice(buf);
        f(c + h * XGK[j], buf);
        fv[(20 - j) * m..(21 - j) * m].copy_from_slice(buf);
    }
    f(c, buf);
    fv[10 * m..11 * m].copy_from_slice(buf);
    for j in 0..10 {
        let (l, r) = (j * m, (20 - j) * m);
        for i in 0..m {
            let s = fv[l + i] + fv[r + i];
            k[i] += WGK[j] * s;
            abs[i] += WGK[j] * (fv[l + i].abs() + fv[r + i].abs());
            if j % 2 == 1 {
                g[i] += WG[j / 2] * s;
            }
        }
    }
    for i in 0..m {
        k[i] += WGK[10] * fv[10 * m + i];
        abs[i] += WGK[10] * fv[10 * m + i].abs();
    }
    let mut error = vec![0.0; m];
    for i in 0..m {
        let mean = 0.5 * k[i];
        let mut asc = WGK[10] * (fv[10 * m + i] - mean).abs();
        for j in 0..10 {
            asc += WGK[j] * ((fv[j * m + i] - mean).abs() + (fv[(20 - j) * m + i] - mean).abs());
        }
        let asc = asc * h.abs();
        let mut err = ((k[i] - g[i]) * h).abs();
        if asc != 0.0 && err != 0.0 {
            err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
        }
        let resabs = abs[i] * h.abs();
        if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
            err = err.max(50.0 * f64::EPSILON * resabs);
        }
        error[i] = err;
    }
    Piece {
        a,
        b,
        value: k.iter().map(|v| v * h).collect(),
        error,
        abs_value: abs.iter().map(|v| v * h.abs()).collect(),
    }
}

/// Integrates the `m`-component function `f` over the partition given by
/// the sorted `breakpoints` (first and last are the limits).
///
/// `f(x, out)` writes the components at `x` into `out`. Refinement stops when
/// every component meets its tolerance or `max_intervals` is reached; in the
/// latter case `converged` is false and the error estimate is still reported.
pub fn integrate<F>(mut f: F, breakpoints: &[f64], tol: &[Tolerance], max_intervals: usize) -> Integral
where
    F: FnMut(f64, &mut [f64]),
{
    let m = tol.len();
    let mut buf = vec![0.0; m];
    let mut pieces: Vec<Piece> = breakpoints
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gk21(&mut f, w[0], w[1], m, &mut buf))
        .collect();
    let mut evaluations = 21 * pieces.len();
    loop {
        let mut out = integrate_sum(&pieces, m, evaluations);
        let targets: Vec<f64> = (0..m).map(|i| tol[i].target(out.abs_value[i])).collect();
        out.converged = (0..m).all(|i| out.error[i] <= targets[i]);
        if out.converged || pieces.len() >= max_intervals || pieces.is_empty() {
            return out;
        }
        // Split the piece contributing most to the worst relative excess.
        let score = |p: &Piece| {
            (0..m)
                .map(|i| if targets[i] > 0.0 { p.error[i] / targets[i] } else { p.error[i] * 1e300 })
                .fold(0.0, f64::max)
        };
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .map(|(j, p)| (j, score(p)))
            .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        let p = pieces.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if !(mid > p.a && mid < p.b) {
            // Interval exhausted at machine precision: keep it and stop.
            pieces.push(p);
            return integrate_sum(&pieces, m, evaluations);
        }
        pieces.push(gk21(&mut f, p.a, mid, m, &mut buf));
        pieces.push(gk21(&mut f, mid, p.b, m, &mut buf));
        evaluations += 42;
    }
}

fn integrate_sum(pieces: &[Piece], m: usize, evaluations: usize) -> Integral {
    let mut value = vec![0.0; m];
    let mut error = vec![0.0; m];
    let mut abs_value = vec![0.0; m];
    for p in pieces {
        for i in 0..m {
            value[i] += p.value[i];
            error[i] += p.error[i];
            abs_value[i] += p.abs_value[i];
        }
    }
    Integral {
        value,
        error,
        abs_value,
        intervals: pieces.len(),
        evaluations,
        converged: false,
    }
}

/// Scalar convenience wrapper around [`integrate`].
pub fn integrate_scalar<F>(mut f: F, breakpoints: &[f64], tol: Tolerance, max_intervals: usize) -> (f64, f64, bool)
where
    F: FnMut(f64) -> f64,
{
    let r = integrate(|x, out| out[0] = f(x), breakpoints, &[tol], max_intervals);
    (r.value[0], r.error[0], r.converged)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        // K21 integrates degree 31 exactly.
        let (v, e, ok) = integrate_scalar(|x| x.powi(30), &[-1.0, 1.0], Tolerance::new(1e-14, 0.0), 10);
        assert!(ok);
        assert!((v - 2.0 / 31.0).abs() < 1e-14, "{v} {e}");
    }

    #[test]
    fn vector_components_converge_independently() {
        let r = integrate(
            |x, out| {
                out[0] = x.sin();
                out[1] = (50.0 * x).cos();
                out[2] = x.sqrt();
            },
            &[0.0, 1.0, std::f64::consts::PI],
            &[Tolerance::new(1e-13, 0.0), Tolerance::new(1e-13, 0.0), Tolerance::new(1e-11, 0.0)],
            500,
        );
        assert!(r.converged);
        assert!((r.value[0] - 2.0).abs() < 1e-13);
        assert!((r.value[1] - (50.0 * std::f64::consts::PI).sin() / 50.0).abs() < 1e-12);
        let want = 2.0 / 3.0 * std::f64::consts::PI.powf(1.5);
        assert!((r.value[2] - want).abs() < 1e-10);
        assert!((0..3).all(|i| r.error[i] >= 0.0));
    }

    #[test]
    fn error_estimate_bounds_true_error() {
        for n in [3.0, 10.0, 40.0] {
            let r = integrate(
                |x, out| out[0] = (n * x).cos() * (-x).exp(),
                &[0.0, 2.0],
                &[Tolerance::new(1e-9, 0.0)],
                200,
            );
            let want = {
                // int_0^2 e^-x cos(nx) dx
                let e = (-2.0f64).exp();
                (1.0 - e * (2.0 * n).cos() + n * e * (2.0 * n).sin()) / (1.0 + n * n)
            };
            assert!((r.value[0] - want).abs() <= r.error[0].max(1e-15));
        }
    }

    #[test]
    fn reports_non_convergence() {
        let r = integrate(
            |x, out| out[0] = (1.0 / x).sin(),
            &[1e-6, 1.0],
            &[Tolerance::new(1e-15, 0.0)],
            5,
        );
        assert!(!r.converged);
        assert_eq!(r.intervals, 5);
    }
}
