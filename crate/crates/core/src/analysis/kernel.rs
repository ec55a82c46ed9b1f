//! The decoherence kernel
//!
//! `Gamma(x, y) = (pi r^2)^(-3/2) int dx_f exp(i r_G [law(|x - x_f|) - law(|y - x_f|)])
//!                exp(-((x - x_f)^2 + (y - x_f)^2) / 2r^2)`.
//!
//! With `s = |x - y|`, `h = s/2` and `u` the flash position relative to the
//! midpoint, the Gaussian factor is `exp(-s^2/4r^2) w(u)` with `w` a
//! normalised Gaussian of width `r / sqrt(2)` per axis. The integral is split
//! into components
//!
//! * `C0 = int w`,
//! * `C1 = int w 2 sin^2(phi/2)`,
//! * `C2 = int w sin(phi)`,
//!
//! so that `Gamma = exp(-s^2/4r^2) (C0 - C1 + i C2)`. `C1` carries the
//! gravitational deficit without cancellation against `C0`.
//!
//! The 3D domain is split into two balls around the singular points, handled
//! in local spherical coordinates with dyadic radial breakpoints, and the
//! remainder in spherical coordinates about the midpoint. Both use nested
//! adaptive Gauss-Kronrod rules; the error of the inner rule is integrated
//! alongside the values and added to the outer error.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::hash::{DefaultHasher, Hash, Hasher};

use dashmap::DashMap;
use libm::erfc;
use num_complex::Complex64;

use crate::exec::{map_slice, Execution};
use crate::gravity::PhaseLaw;
use crate::quadrature::{integrate, Tolerance};
use crate::state::GridSpec;
use crate::units::PhysicalParams;
use crate::{Error, Result};

/// Physics entering one kernel evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelModel {
    pub r_g: f64,
    pub r_c: f64,
    pub law: PhaseLaw,
    /// 3 for the physical kernel, 1 for the line harness.
    pub dim: usize,
}

impl KernelModel {
    /// Self-pair kernel of particle 0 under `params`.
    pub fn from_params(params: &PhysicalParams, softening: f64, dim: usize) -> Result<Self> {
        params.check()?;
        Ok(KernelModel {
            r_g: params.r_g(0, 0)?,
            r_c: params.r_c,
            law: PhaseLaw::new(params.smearing, softening),
            dim,
        })
    }

    pub fn with_r_g(self, r_g: f64) -> Self {
        KernelModel { r_g, ..self }
    }

    fn hash_into<H: Hasher>(&self, h: &mut H) {
        self.r_g.to_bits().hash(h);
        self.r_c.to_bits().hash(h);
        self.law.key().hash(h);
        self.dim.hash(h);
    }
}

/// Accuracy targets and refinement limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Targets for `C0`, `C1`, `C2`; relative parts are measured against
    /// `int |c_i|`.
    pub tolerances: [Tolerance; 3],
    pub max_outer: usize,
    pub max_inner: usize,
    /// Integration radius beyond the pair, in units of `r_C`.
    pub margin: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            tolerances: [
                Tolerance::new(1e-13, 1e-12),
                Tolerance::new(1e-300, 1e-8),
                Tolerance::new(1e-12, 1e-8),
            ],
            max_outer: 2000,
            max_inner: 400,
            margin: 8.0,
        }
    }
}

impl QuadratureSpec {
    fn hash_into<H: Hasher>(&self, h: &mut H) {
        for t in &self.tolerances {
            t.abs.to_bits().hash(h);
            t.rel.to_bits().hash(h);
        }
        self.max_outer.hash(h);
        self.max_inner.hash(h);
        self.margin.to_bits().hash(h);
    }

    pub fn describe(&self) -> String {
        format!(
            "adaptive Gauss-Kronrod 21, nested spherical, radius s/2 + {} r_C",
            self.margin
        )
    }
}

/// Kernel at one separation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub separation: f64,
    pub value: Complex64,
    /// Bound on `|value - exact|`.
    pub error: f64,
    /// `exp(-s^2/4r^2) (C1 - i C2)`: the part of `1 - Gamma` due to gravity.
    pub deficit: Complex64,
    pub deficit_error: f64,
    pub evaluations: usize,
}

impl KernelValue {
    fn unit() -> Self {
        KernelValue {
            separation: 0.0,
            value: Complex64::new(1.0, 0.0),
            error: 0.0,
            deficit: Complex64::new(0.0, 0.0),
            deficit_error: 0.0,
            evaluations: 0,
        }
    }
}

#[derive(Default, Clone, Copy)]
struct Parts {
    value: [f64; 3],
    error: [f64; 3],
    abs: [f64; 3],
    evaluations: usize,
    converged: bool,
}

impl Parts {
    fn add(&mut self, o: &Parts) {
        for i in 0..3 {
            self.value[i] += o.value[i];
            self.error[i] += o.error[i];
            self.abs[i] += o.abs[i];
        }
        self.evaluations += o.evaluations;
        self.converged &= o.converged;
    }
}

#[inline]
fn components(weight: f64, phi: f64, out: &mut [f64]) {
    let s = (0.5 * phi).sin();
    out[0] = weight;
    out[1] = weight * 2.0 * s * s;
    out[2] = weight * phi.sin();
}

/// `r_g (law(d1) - law(d2))`, given `d2^2 - d1^2` to avoid cancellation in
/// the bare law.
#[inline]
fn phase(model: &KernelModel, d1: f64, d2: f64, diff_sq: f64) -> f64 {
    if model.r_g == 0.0 {
        return 0.0;
    }
    match model.law {
        PhaseLaw::Coulomb => model.r_g * diff_sq / (d1 * d2 * (d1 + d2)),
        law => model.r_g * (law.value(d1) - law.value(d2)),
    }
}

/// Nested integral: outer variable over `outer_bp`, inner over the interval
/// returned by `inner_range`, integrand `f(outer, inner, out)` already
/// including all Jacobians.
fn nested<R, F>(outer_bp: &[f64], inner_range: R, f: F, spec: &QuadratureSpec, outer_len: f64) -> Parts
where
    R: Fn(f64) -> Vec<f64>,
    F: Fn(f64, f64, &mut [f64]),
{
    let tol = spec.tolerances;
    let mut outer_tol = [Tolerance::new(f64::INFINITY, 0.0); 6];
    outer_tol[..3].copy_from_slice(&tol);
    let cell = std::cell::Cell::new((0usize, true));
    let res = integrate(
        |x, out| {
            let bp = inner_range(x);
            // Inner targets are shared out over the outer range.
            let inner_tol: Vec<Tolerance> = tol
                .iter()
                .map(|t| Tolerance::new(t.abs / (4.0 * outer_len), 0.1 * t.rel))
                .collect();
            let r = integrate(|c, o| f(x, c, o), &bp, &inner_tol, spec.max_inner);
            let (e, ok) = cell.get();
            cell.set((e + r.evaluations, ok && r.converged));
            out[..3].copy_from_slice(&r.value);
            out[3..].copy_from_slice(&r.error);
        },
        outer_bp,
        &outer_tol,
        spec.max_outer,
    );
    let (inner_evals, inner_ok) = cell.get();
    let mut p = Parts {
        evaluations: inner_evals + res.evaluations,
        converged: res.converged && inner_ok,
        ..Parts::default()
    };
    for i in 0..3 {
        p.value[i] = res.value[i];
        p.error[i] = res.error[i] + res.value[3 + i].abs() + res.error[3 + i];
        p.abs[i] = res.abs_value[i];
    }
    p
}

fn gaussian_weight(r: f64, dim: usize) -> impl Fn(f64) -> f64 {
    let norm = (PI.sqrt() * r).powi(-(dim as i32));
    move |u2: f64| norm * (-u2 / (r * r)).exp()
}

/// Mass of the normalised weight beyond radius `big` (3D).
fn tail_3d(big: f64, r: f64) -> f64 {
    let t = big / r;
    erfc(t) + 2.0 / PI.sqrt() * t * (-t * t).exp()
}

/// Largest phase beyond radius `big` of the midpoint. The laws are convex
/// and decreasing, so the difference peaks on the near side.
fn tail_phase(model: &KernelModel, big: f64, h: f64) -> f64 {
    if model.r_g == 0.0 {
        return 0.0;
    }
    let near = (big - h).max(0.0);
    model.r_g * (model.law.value(near) - model.law.value(big + h))
}

/// Bounds the contribution of a weight mass `tail` with phases up to `phi`.
fn add_tail(error: &mut [f64; 3], tail: f64, phi: f64) {
    error[0] += tail;
    error[1] += tail * (0.5 * phi * phi).min(2.0);
    error[2] += tail * phi.min(1.0);
}

fn kernel_3d(s: f64, model: &KernelModel, spec: &QuadratureSpec) -> Parts {
    let r = model.r_c;
    let h = 0.5 * s;
    let rb = (0.25 * s).min(0.5 * r);
    let big = h + spec.margin * r;
    let w = gaussian_weight(r, 3);
    let mut total = Parts {
        converged: true,
        ..Parts::default()
    };

    // Balls around x (sign +1) and y (sign -1).
    let mut radial = vec![rb];
    while radial.len() < 42 {
        let v = radial.last().unwrap() * 0.5;
        radial.push(v);
    }
    radial.push(0.0);
    radial.reverse();
    let ball_len = rb;
    for sign in [1.0, -1.0] {
        let f = |v: f64, c: f64, out: &mut [f64]| {
            let u2 = h * h + v * v + 2.0 * h * v * c;
            let far_sq = s * s + v * v + 2.0 * s * v * c;
            let far = far_sq.max(0.0).sqrt();
            // d_near = v, d_far^2 - v^2 = s^2 + 2 s v c.
            let phi = phase(model, v, far, s * s + 2.0 * s * v * c);
            components(w(u2), sign * phi, out);
            let jac = 2.0 * PI * v * v;
            out.iter_mut().for_each(|o| *o *= jac);
        };
        let part = nested(&radial, |_| vec![-1.0, 0.0, 1.0], f, spec, ball_len);
        total.add(&part);
    }

    // Remainder, about the midpoint.
    let mut bp = vec![0.0];
    let lo = h - rb;
    if lo > 0.0 {
        let mut g = lo;
        let mut ladder = Vec::new();
        while g > 1e-3 * lo {
            g *= 0.5;
            ladder.push(g);
        }
        ladder.reverse();
        bp.extend(ladder);
        bp.push(lo);
    }
    bp.push(h);
    bp.push(h + rb);
    let mut g = h + rb;
    while g * 2.0 < r {
        g *= 2.0;
        bp.push(g);
    }
    let mut m = 1.0;
    while h + m * r < big {
        if h + m * r > *bp.last().unwrap() {
            bp.push(h + m * r);
        }
        m += 1.0;
    }
    bp.push(big);
    bp.dedup();
    let inner = |u: f64| {
        if u > 0.0 && (u - h).abs() < rb {
            let cs = ((u * u + h * h - rb * rb) / (2.0 * u * h)).clamp(-1.0, 1.0);
            vec![-cs, 0.0, cs]
        } else {
            vec![-1.0, 0.0, 1.0]
        }
    };
    let f = |u: f64, c: f64, out: &mut [f64]| {
        let base = u * u + h * h;
        let cross = 2.0 * u * h * c;
        let d1 = (base - cross).max(0.0).sqrt();
        let d2 = (base + cross).max(0.0).sqrt();
        let phi = phase(model, d1, d2, 2.0 * cross);
        components(w(u * u), phi, out);
        let jac = 2.0 * PI * u * u;
        out.iter_mut().for_each(|o| *o *= jac);
    };
    let part = nested(&bp, inner, f, spec, big);
    total.add(&part);

    // The balls reach at most h + rb < big, so the only tail is the
    // Gaussian beyond `big` around the midpoint.
    add_tail(&mut total.error, tail_3d(big, r), tail_phase(model, big, h));
    total
}

fn kernel_1d(s: f64, model: &KernelModel, spec: &QuadratureSpec) -> Parts {
    let r = model.r_c;
    let h = 0.5 * s;
    let big = h + spec.margin * r;
    let w = gaussian_weight(r, 1);
    let scale = match model.law {
        PhaseLaw::Softened { a } => a,
        PhaseLaw::Smeared { width } => width,
        PhaseLaw::Coulomb => 0.0,
    };
    let mut bp = vec![-big, big, 0.0];
    for c in [h, -h] {
        bp.push(c);
        for k in [0.5, 1.0, 2.0, 4.0, 8.0] {
            bp.push(c + k * scale);
            bp.push(c - k * scale);
        }
        for m in [1.0, 2.0, 4.0] {
            bp.push(c + m * r);
            bp.push(c - m * r);
        }
    }
    let mut bp: Vec<f64> = bp.into_iter().filter(|v| v.abs() <= big).collect();
    bp.sort_by(f64::total_cmp);
    bp.dedup_by(|a, b| (*a - *b).abs() < 1e-12 * big);
    let tol = spec.tolerances;
    let res = integrate(
        |u, out| {
            let d1 = (u - h).abs();
            let d2 = (u + h).abs();
            let phi = phase(model, d1, d2, d2 * d2 - d1 * d1);
            components(w(u * u), phi, out);
        },
        &bp,
        &tol,
        spec.max_outer,
    );
    let tail = erfc(spec.margin);
    let phi = tail_phase(model, big, h);
    let mut p = Parts {
        evaluations: res.evaluations,
        converged: res.converged,
        ..Parts::default()
    };
    for i in 0..3 {
        p.value[i] = res.value[i];
        p.error[i] = res.error[i];
        p.abs[i] = res.abs_value[i];
    }
    add_tail(&mut p.error, tail, phi);
    p
}

/// Kernel at separation `s`.
pub fn gamma_at_separation(s: f64, model: &KernelModel, spec: &QuadratureSpec) -> Result<KernelValue> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::InvalidInput(format!("separation must be nonnegative, got {s}")));
    }
    if !(model.r_c > 0.0) || !(model.r_g >= 0.0) {
        return Err(Error::InvalidParams("kernel needs r_c > 0 and r_g >= 0".into()));
    }
    if s == 0.0 {
        return Ok(KernelValue::unit());
    }
    let parts = match model.dim {
        3 => kernel_3d(s, model, spec),
        1 => {
            if model.law.is_singular() {
                return Err(Error::UndefinedPhase(
                    "the line kernel needs a softened or smeared law".into(),
                ));
            }
            kernel_1d(s, model, spec)
        }
        d => return Err(Error::InvalidInput(format!("kernel dimension must be 1 or 3, got {d}"))),
    };
    for i in 0..3 {
        let target = spec.tolerances[i].target(parts.abs[i]);
        if !(parts.error[i] <= target) {
            return Err(Error::Quadrature(format!(
                "component {i} at separation {s}: error {:e} above target {:e}",
                parts.error[i], target
            )));
        }
    }
    let env = (-s * s / (4.0 * model.r_c * model.r_c)).exp();
    let [c0, c1, c2] = parts.value;
    let [e0, e1, e2] = parts.error;
    Ok(KernelValue {
        separation: s,
        value: Complex64::new(env * (c0 - c1), env * c2),
        error: env * (e0 + e1 + e2),
        deficit: Complex64::new(env * c1, -env * c2),
        deficit_error: env * (e1 + e2),
        evaluations: parts.evaluations,
    })
}

/// Kernel for the pair `(x, y)`; the line harness is used for 1-component
/// positions.
pub fn gamma_kernel(x: &[f64], y: &[f64], model: &KernelModel, spec: &QuadratureSpec) -> Result<KernelValue> {
    if x.len() != y.len() || x.len() != model.dim {
        return Err(Error::InvalidInput(format!(
            "positions of length {} and {} for a {}-dimensional kernel",
            x.len(),
            y.len(),
            model.dim
        )));
    }
    let s = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let mut v = gamma_at_separation(s, model, spec)?;
    // Gamma(x, y) is a function of the separation; its imaginary part is odd
    // under exchange, which the component split already respects.
    v.separation = s;
    Ok(v)
}

/// Concurrent cache of kernel values keyed on separation and model.
#[derive(Debug, Default)]
pub struct KernelCache {
    map: DashMap<(u64, u64), KernelValue>,
}

impl KernelCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    fn key(s: f64, model: &KernelModel, spec: &QuadratureSpec) -> (u64, u64) {
        let mut h = DefaultHasher::new();
        model.hash_into(&mut h);
        spec.hash_into(&mut h);
        (s.to_bits(), h.finish())
    }

    pub fn get_or_compute(&self, s: f64, model: &KernelModel, spec: &QuadratureSpec) -> Result<KernelValue> {
        let key = Self::key(s, model, spec);
        if let Some(v) = self.map.get(&key) {
            return Ok(*v);
        }
        let v = gamma_at_separation(s, model, spec)?;
        self.map.insert(key, v);
        Ok(v)
    }
}

/// Kernel values for a list of pairs.
#[derive(Debug, Clone)]
pub struct KernelResult {
    pub pairs: Vec<(Vec<f64>, Vec<f64>)>,
    pub values: Vec<Complex64>,
    pub errors: Vec<f64>,
    pub model: KernelModel,
    pub spec: QuadratureSpec,
    index: HashMap<i64, usize>,
}

fn quantise(s: f64) -> i64 {
    (s * 1e9).round() as i64
}

impl KernelResult {
    /// Evaluates the kernel for every pair, concurrently when `exec` allows.
    pub fn evaluate(
        pairs: Vec<(Vec<f64>, Vec<f64>)>,
        model: KernelModel,
        spec: QuadratureSpec,
        exec: Execution,
        cache: Option<&KernelCache>,
    ) -> Result<Self> {
        let values = map_slice(exec, &pairs, |(x, y)| {
            if x.len() != model.dim || y.len() != model.dim {
                return Err(Error::InvalidInput("pair dimension differs from the model's".into()));
            }
            let s = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            match cache {
                Some(c) => c.get_or_compute(s, &model, &spec),
                None => gamma_at_separation(s, &model, &spec),
            }
        });
        let values = values.into_iter().collect::<Result<Vec<_>>>()?;
        let index = values
            .iter()
            .enumerate()
            .map(|(i, v)| (quantise(v.separation), i))
            .collect();
        Ok(KernelResult {
            values: values.iter().map(|v| v.value).collect(),
            errors: values.iter().map(|v| v.error).collect(),
            pairs,
            model,
            spec,
            index,
        })
    }

    /// Every separation occurring between nodes of `grid`, as pairs
    /// `(displacement, origin)`.
    pub fn for_grid(
        grid: &GridSpec,
        model: KernelModel,
        spec: QuadratureSpec,
        exec: Execution,
    ) -> Result<Self> {
        let n = grid.n_points;
        let h = grid.spacing;
        let mut seen = HashMap::new();
        let mut pairs = Vec::new();
        let mut push = |d: Vec<f64>| {
            let s = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            if seen.insert(quantise(s), ()).is_none() {
                let zero = vec![0.0; d.len()];
                pairs.push((d, zero));
            }
        };
        match grid.dim {
            1 => (0..n).for_each(|a| push(vec![a as f64 * h])),
            _ => {
                for a in 0..n {
                    for b in 0..=a {
                        for c in 0..=b {
                            push(vec![a as f64 * h, b as f64 * h, c as f64 * h]);
                        }
                    }
                }
            }
        }
        Self::evaluate(pairs, model, spec, exec, None)
    }

    /// Value and error at separation `s`, if it was evaluated.
    pub fn lookup(&self, s: f64) -> Option<(Complex64, f64)> {
        self.index.get(&quantise(s)).map(|&i| (self.values[i], self.errors[i]))
    }

    pub fn separations(&self) -> Vec<f64> {
        self.pairs
            .iter()
            .map(|(x, y)| x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
            .collect()
    }
}
