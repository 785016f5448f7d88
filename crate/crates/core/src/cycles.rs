//! Limit cycles of the fast Lienard layer problem, the averaged drift along
//! them, the exit point of the delayed loss of stability, and zero counts of
//! the Weber equation.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::integrate::{integrate, poincare_return, Event, IntegrateError, IntegratorConfig};
use crate::numerics::{brent, quad, NumericsError};
use crate::vfields::{rhs_lienard_fast, rhs_weber, Params};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CycleError {
    #[error("{0}")]
    Precondition(String),
    #[error("Newton iteration for the cycle at y2 = {y2} did not converge (defect {defect:e})")]
    NewtonDiverged { y2: f64, defect: f64 },
    #[error("cycle at y2 = {y2} collapsed to amplitude {amplitude:e}")]
    CycleCollapsed { y2: f64, amplitude: f64 },
    #[error("c2 = {c2} outside the tabulated range [{lo}, {hi}]{}", hint.map(|h| format!(" ({h})")).unwrap_or_default())]
    OutOfRange { c2: f64, lo: f64, hi: f64, hint: Option<&'static str> },
    #[error("mu = {0} is an integer: the bounded Hermite solution breaks transversality")]
    IntegerResonance(f64),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Closure defect accepted by the Newton iteration.
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Backward periods spent relaxing toward the cycle before Newton.
    pub max_relax: usize,
    /// Target change of `mean_u2_sq` between successive sample doublings.
    pub mean_tol: f64,
}

impl Default for CycleConfig {
    fn default() -> Self {
        CycleConfig { rtol: 1e-12, atol: 1e-14, newton_tol: 1e-10, max_newton: 30, max_relax: 60, mean_tol: 1e-11 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitCycle {
    pub y2: f64,
    pub period: f64,
    /// Crossing of the half-line `u2 = 0, z2 < 0`.
    pub anchor: [f64; 2],
    /// Uniform samples `(t, [u2, z2])` over one period starting at the anchor.
    pub samples: Vec<(f64, [f64; 2])>,
    pub mean_u2_sq: f64,
    /// Logarithm of the nontrivial Floquet multiplier in forward time.
    pub log_multiplier: f64,
    pub closure_defect: f64,
    /// `max |u2|` over the samples.
    pub amplitude: f64,
}

/// Radius of the small cycle born at the Hopf point `y2 = 0`.
pub fn melnikov_radius(y2: f64, p: &Params) -> f64 {
    2.0 * (-y2 * p.v_s() / p.cusp_k()).sqrt()
}

/// Slope of the averaged drift at `y2 = 0`.
pub fn melnikov_slope(p: &Params) -> f64 {
    let vs = p.v_s();
    (3.0 * vs * vs + p.g) / (2.0 * p.g * p.cusp_k())
}

fn section<'a>() -> Event<'a, 2> {
    Event::new("u2=0, z2<0", |_t, s: &[f64; 2]| s[0]).guard(|_t, s| s[1] < 0.0)
}

fn section6<'a>() -> Event<'a, 6> {
    Event::new("u2=0, z2<0", |_t, s: &[f64; 6]| s[0]).guard(|_t, s| s[1] < 0.0)
}

pub fn find_limit_cycle(y2: f64, p: &Params) -> Result<LimitCycle, CycleError> {
    find_limit_cycle_with(y2, p, &CycleConfig::default())
}

pub fn find_limit_cycle_with(y2: f64, p: &Params, cfg: &CycleConfig) -> Result<LimitCycle, CycleError> {
    if !(y2 < 0.0) {
        return Err(CycleError::Precondition(format!("cycles exist only for y2 < 0 (got {y2})")));
    }
    if !(p.g < 0.0) {
        return Err(CycleError::Precondition(format!("g = {} must be negative", p.g)));
    }
    let icfg = IntegratorConfig { event_tol: 1e-13, ..IntegratorConfig::with_tol(cfg.rtol, cfg.atol) };
    let f = |_t: f64, s: &[f64; 2]| rhs_lienard_fast(*s, y2, p);
    let horizon = -1e4;
    let back = |z: f64| -> Result<f64, CycleError> { Ok(poincare_return(f, section(), [0.0, z], horizon, &icfg)?.state[1]) };

    let mut z = -melnikov_radius(y2, p);
    for _ in 0..cfg.max_relax {
        let zn = back(z)?;
        let step = (zn - z).abs();
        z = zn;
        if z.abs() < 1e-8 {
            return Err(CycleError::CycleCollapsed { y2, amplitude: z.abs() });
        }
        if step < 1e-4 * z.abs() {
            break;
        }
    }

    let k = p.cusp_k();
    let vs = p.v_s();
    let g = p.g;
    let var = |_t: f64, s: &[f64; 6]| {
        let (u, zz) = (s[0], s[1]);
        let a = -(3.0 * vs * y2 + 3.0 * k * u * u) / g;
        [
            -zz - (3.0 * vs * y2 + k * u * u) * u / g,
            u,
            a * s[2] - s[4],
            a * s[3] - s[5],
            s[2],
            s[3],
        ]
    };
    let mut defect = f64::INFINITY;
    let mut converged = false;
    for _ in 0..cfg.max_newton {
        let r = poincare_return(var, section6(), [0.0, z, 1.0, 0.0, 0.0, 1.0], horizon, &icfg)?;
        let pz = r.state[1];
        // u2 = z2' vanishes on the section, so the return-time correction drops out
        let slope = r.state[5];
        defect = (pz - z).abs();
        if defect < cfg.newton_tol {
            converged = true;
            break;
        }
        let mut dz = -(pz - z) / (slope - 1.0);
        while z + dz >= 0.0 {
            dz *= 0.5;
        }
        z += dz;
        if z.abs() < 1e-8 {
            return Err(CycleError::CycleCollapsed { y2, amplitude: z.abs() });
        }
    }
    if !converged {
        return Err(CycleError::NewtonDiverged { y2, defect });
    }

    let tr = integrate(f, 0.0, horizon, [0.0, z], &icfg, vec![section().terminal()])?;
    let (t_end, end) = tr.last();
    let period = -t_end;
    let closure_defect = ((end[0]).powi(2) + (end[1] - z).powi(2)).sqrt();
    let at = |s: f64| -> [f64; 2] {
        // forward time s from the anchor is backward time s - T
        if s == 0.0 { [0.0, z] } else { tr.eval(s - period).expect("inside the period") }
    };
    let sample = |n: usize| -> Vec<(f64, [f64; 2])> { (0..n).map(|i| i as f64 * period / n as f64).map(|s| (s, at(s))).collect() };
    let mean = |v: &[(f64, [f64; 2])]| v.iter().map(|(_, s)| s[0] * s[0]).sum::<f64>() / v.len() as f64;
    let mut n = 128;
    let mut samples = sample(n);
    let mut m = mean(&samples);
    loop {
        n *= 2;
        let finer = sample(n);
        let mf = mean(&finer);
        let change = (mf - m).abs();
        samples = finer;
        m = mf;
        if change < cfg.mean_tol || n >= 1 << 16 {
            break;
        }
    }
    let amplitude = samples.iter().map(|(_, s)| s[0].abs()).fold(0.0, f64::max);
    if amplitude < 1e-8 {
        return Err(CycleError::CycleCollapsed { y2, amplitude });
    }
    // the trivial multiplier is 1, so the other one is exp of the integrated divergence
    let log_multiplier = -(period / g) * (3.0 * vs * y2 + 3.0 * k * m);
    Ok(LimitCycle { y2, period, anchor: [0.0, z], samples, mean_u2_sq: m, log_multiplier, closure_defect, amplitude })
}

impl LimitCycle {
    pub fn multiplier(&self) -> f64 {
        self.log_multiplier.exp()
    }

    pub fn g_avg(&self, p: &Params) -> f64 {
        averaged_drift(self.y2, self.mean_u2_sq, p)
    }
}

/// `y2/(2g) + (3 v_s/(2g)) <u2^2>`.
pub fn averaged_drift(y2: f64, mean_u2_sq: f64, p: &Params) -> f64 {
    y2 / (2.0 * p.g) + 3.0 * p.v_s() * mean_u2_sq / (2.0 * p.g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AveragedPoint {
    pub y2: f64,
    pub period: f64,
    pub mean_u2_sq: f64,
    pub g_avg: f64,
    pub melnikov: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AveragedCurve {
    /// Sorted by increasing `y2`.
    pub points: Vec<AveragedPoint>,
    pub failures: Vec<(f64, String)>,
    pub strictly_decreasing: bool,
    pub melnikov_slope: f64,
}

pub fn averaged_curve(p: &Params, y2_grid: &[f64]) -> AveragedCurve {
    let slope = melnikov_slope(p);
    let results: Vec<(f64, Result<LimitCycle, CycleError>)> = y2_grid.par_iter().map(|&y2| (y2, find_limit_cycle(y2, p))).collect();
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for (y2, r) in results {
        match r {
            Ok(c) => points.push(AveragedPoint { y2, period: c.period, mean_u2_sq: c.mean_u2_sq, g_avg: c.g_avg(p), melnikov: slope * y2 }),
            Err(e) => failures.push((y2, e.to_string())),
        }
    }
    points.sort_by(|a, b| a.y2.total_cmp(&b.y2));
    let strictly_decreasing = points.windows(2).all(|w| w[1].g_avg < w[0].g_avg);
    AveragedCurve { points, failures, strictly_decreasing, melnikov_slope: slope }
}

impl AveragedCurve {
    /// Secant slope of `g_avg` between the grid points closest to `a` and `b`.
    pub fn secant_slope(&self, a: f64, b: f64) -> Option<f64> {
        let near = |x: f64| self.points.iter().min_by(|p, q| (p.y2 - x).abs().total_cmp(&(q.y2 - x).abs()));
        let (pa, pb) = (near(a)?, near(b)?);
        (pa.y2 != pb.y2).then(|| (pb.g_avg - pa.g_avg) / (pb.y2 - pa.y2))
    }

    pub fn write_csv<W: Write>(&self, mut w: W, header: &[String]) -> std::io::Result<()> {
        for line in header {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "# strictly_decreasing = {}, melnikov_slope = {:.12}", self.strictly_decreasing, self.melnikov_slope)?;
        for (y2, e) in &self.failures {
            writeln!(w, "# failed at y2 = {y2}: {e}")?;
        }
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["y2", "T", "mean_u2_sq", "g_avg", "melnikov_line"])?;
        for q in &self.points {
            out.write_record([q.y2, q.period, q.mean_u2_sq, q.g_avg, q.melnikov].map(|v| format!("{v:.12e}")))?;
        }
        out.flush()
    }
}

/// Layer value `y2*` at which the averaged drift equals `c2`.
pub fn solve_c2_equilibrium(c2: f64, p: &Params, curve: &AveragedCurve) -> Result<f64, CycleError> {
    let pts = &curve.points;
    if pts.len() < 2 {
        return Err(CycleError::Precondition("averaged curve needs at least two points".into()));
    }
    let lo = pts.iter().map(|q| q.g_avg).fold(f64::INFINITY, f64::min);
    let hi = pts.iter().map(|q| q.g_avg).fold(f64::NEG_INFINITY, f64::max);
    if c2 == 0.0 {
        return Err(CycleError::OutOfRange { c2, lo, hi, hint: Some("boundary: y2* = 0, the Hopf point") });
    }
    if !(c2 >= lo && c2 <= hi) {
        return Err(CycleError::OutOfRange { c2, lo, hi, hint: None });
    }
    let k = pts
        .windows(2)
        .position(|w| (w[0].g_avg - c2) * (w[1].g_avg - c2) <= 0.0)
        .ok_or(CycleError::OutOfRange { c2, lo, hi, hint: Some("curve not monotone here") })?;
    let (a, b) = (pts[k], pts[k + 1]);
    if a.g_avg == c2 {
        return Ok(a.y2);
    }
    if b.g_avg == c2 {
        return Ok(b.y2);
    }
    let mut failure = None;
    let root = brent(
        |y2| match find_limit_cycle(y2, p) {
            Ok(c) => c.g_avg(p) - c2,
            Err(e) => {
                failure = Some(e);
                f64::NAN
            }
        },
        a.y2,
        b.y2,
        1e-13,
        100,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let y = root?;
    let residual = (find_limit_cycle(y, p)?.g_avg(p) - c2).abs();
    if residual > 1e-8 {
        return Err(CycleError::NewtonDiverged { y2: y, defect: residual });
    }
    Ok(y)
}

/// Real part of the more unstable eigenvalue of the layer problem linearized at `(0, y2, 0)`.
pub fn layer_growth_rate(y2: f64, p: &Params) -> f64 {
    let a = -3.0 * p.v_s() * y2 / p.g;
    0.5 * a + 0.5 * (a * a - 4.0).max(0.0).sqrt()
}

pub fn layer_eigenvalues(y2: f64, p: &Params) -> [Complex64; 2] {
    let a = -3.0 * p.v_s() * y2 / p.g;
    let root = Complex64::new(a * a - 4.0, 0.0).sqrt();
    let half = Complex64::new(a / 2.0, 0.0);
    [half + root / 2.0, half - root / 2.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExitRegime {
    /// Exit through the repelling-focus part of the layer critical line.
    Focus,
    Node,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExitPoint {
    pub c2: f64,
    pub y_exit: f64,
    pub regime: ExitRegime,
    /// Accumulated contraction `W(0)` on the attracting side.
    pub w0: f64,
    /// `ln(2 c2 g - y_exit)`; the gap itself underflows as `c2 -> 0`.
    pub log_gap: f64,
}

const QUAD_ABS: f64 = 1e-12;
const QUAD_REL: f64 = 1e-10;

fn check_exit_pre(c2: f64, p: &Params) -> Result<(), CycleError> {
    if !(c2 < 0.0) {
        return Err(CycleError::Precondition(format!("exit point needs c2 < 0 (got {c2})")));
    }
    if !(p.g < 0.0) {
        return Err(CycleError::Precondition(format!("g = {} must be negative", p.g)));
    }
    Ok(())
}

/// `W(Y)` for `Y <= 0`: the integral of growth rate over drift from `-inf` to `Y`.
fn contraction_below_zero(y_top: f64, c2: f64, p: &Params) -> Result<f64, CycleError> {
    let g = p.g;
    let phi = |y: f64| layer_growth_rate(y, p) / (-c2 + y / (2.0 * g));
    let kink = 2.0 * g / (3.0 * p.v_s());
    let split = kink.min(y_top);
    // y = 1/s maps (-inf, split] onto [1/split, 0)
    let (tail, _) = quad(|s: f64| phi(1.0 / s) / (s * s), 1.0 / split, 0.0, QUAD_ABS, QUAD_REL)?;
    let (mid, _) = if y_top > split { quad(phi, split, y_top, QUAD_ABS, QUAD_REL)? } else { (0.0, 0.0) };
    Ok(tail + mid)
}

/// `W(0) + int_0^t 2|g| Re nu_+(b (1 - e^-s)) ds`, which equals `W(b (1 - e^-t))`.
fn contraction_above_zero(t: f64, w0: f64, c2: f64, p: &Params) -> Result<f64, CycleError> {
    let b = 2.0 * c2 * p.g;
    let rate = |s: f64| -2.0 * p.g * layer_growth_rate(-b * (-s).exp_m1(), p);
    let y_kink = -2.0 * p.g / (3.0 * p.v_s());
    let mut total = w0;
    if y_kink < b {
        let t_kink = -(1.0 - y_kink / b).ln();
        if t < t_kink {
            total += quad(rate, 0.0, t, QUAD_ABS, QUAD_REL)?.0;
        } else {
            total += quad(rate, 0.0, t_kink, QUAD_ABS, QUAD_REL)?.0 + quad(rate, t_kink, t, QUAD_ABS, QUAD_REL)?.0;
        }
    } else {
        total += quad(rate, 0.0, t, QUAD_ABS, QUAD_REL)?.0;
    }
    Ok(total)
}

/// `W(Y)` for `Y < 2 c2 g`.
pub fn exit_integral(y: f64, c2: f64, p: &Params) -> Result<f64, CycleError> {
    check_exit_pre(c2, p)?;
    let b = 2.0 * c2 * p.g;
    if y <= 0.0 {
        return contraction_below_zero(y, c2, p);
    }
    if y >= b {
        return Err(CycleError::Precondition(format!("W diverges at the equilibrium y2 = {b}")));
    }
    let w0 = contraction_below_zero(0.0, c2, p)?;
    contraction_above_zero(-(-y / b).ln_1p(), w0, c2, p)
}

pub fn exit_point(c2: f64, p: &Params) -> Result<ExitPoint, CycleError> {
    check_exit_pre(c2, p)?;
    let b = 2.0 * c2 * p.g;
    let w0 = contraction_below_zero(0.0, c2, p)?;
    let w = |t: f64| contraction_above_zero(t, w0, c2, p);
    let mut hi = 1.0;
    while w(hi)? <= 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(NumericsError::NoRootInBracket { a: 0.0, b: hi, fa: w0, fb: w(hi)? }.into());
        }
    }
    let mut failure = None;
    let t = brent(
        |t| match w(t) {
            Ok(v) => v,
            Err(e) => {
                failure = Some(e);
                f64::NAN
            }
        },
        0.0,
        hi,
        1e-13,
        200,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let t = t?;
    let y_exit = -b * (-t).exp_m1();
    let regime = if y_exit < -2.0 * p.g / (3.0 * p.v_s()) { ExitRegime::Focus } else { ExitRegime::Node };
    Ok(ExitPoint { c2, y_exit, regime, w0, log_gap: b.ln() - t })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExitPointCurve {
    pub points: Vec<ExitPoint>,
    pub failures: Vec<(f64, String)>,
}

pub fn exit_point_curve(p: &Params, c2_grid: &[f64]) -> ExitPointCurve {
    let results: Vec<(f64, Result<ExitPoint, CycleError>)> = c2_grid.par_iter().map(|&c2| (c2, exit_point(c2, p))).collect();
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for (c2, r) in results {
        match r {
            Ok(e) => points.push(e),
            Err(e) => failures.push((c2, e.to_string())),
        }
    }
    points.sort_by(|a, b| a.c2.total_cmp(&b.c2));
    ExitPointCurve { points, failures }
}

impl ExitPointCurve {
    pub fn write_csv<W: Write>(&self, mut w: W, header: &[String]) -> std::io::Result<()> {
        for line in header {
            writeln!(w, "# {line}")?;
        }
        for (c2, e) in &self.failures {
            writeln!(w, "# failed at c2 = {c2}: {e}")?;
        }
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["c2", "y_exit", "regime"])?;
        for q in &self.points {
            let regime = match q.regime {
                ExitRegime::Focus => "focus",
                ExitRegime::Node => "node",
            };
            out.write_record([format!("{:.12e}", q.c2), format!("{:.12e}", q.y_exit), regime.to_string()])?;
        }
        out.flush()
    }
}

pub const WEBER_L: f64 = 8.0;

/// Number of sign changes on `[-L, L]` of the solution of `U'' = Y U' - mu U`
/// that grows algebraically as `Y -> -inf`.
pub fn weber_zero_count(mu: f64, l: f64) -> Result<usize, CycleError> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(CycleError::Precondition(format!("mu = {mu} must be positive")));
    }
    if (mu - mu.round()).abs() < 1e-9 {
        return Err(CycleError::IntegerResonance(mu));
    }
    if !(l > 0.0) {
        return Err(CycleError::Precondition(format!("half-width L = {l} must be positive")));
    }
    let cfg = IntegratorConfig { keep_dense: false, ..IntegratorConfig::with_tol(1e-11, 1e-14) };
    let zero = Event::new("U=0", |_y, s: &[f64; 2]| s[0]);
    // normalized by L^mu
    let tr = integrate(|y, s: &[f64; 2]| rhs_weber(y, *s, mu), -l, l, [1.0, -mu / l], &cfg, vec![zero])?;
    Ok(tr.events.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LayerRegime {
    Attracting,
    /// The Hopf point `y2 = 0`.
    Neutral,
    RepellingFocus,
    RepellingNode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EquilibriumType {
    Attracting,
    SaddleFocus,
    /// Saddle whose unstable directions form a node.
    SaddleNodal,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Gamma2Report {
    pub regime: LayerRegime,
    pub eigenvalues: [Complex64; 2],
    /// Layer coordinate of the equilibrium on the critical line.
    pub q2_y2: f64,
    pub q2_type: EquilibriumType,
}

fn layer_regime(y2: f64, p: &Params) -> LayerRegime {
    let node = -2.0 * p.g / (3.0 * p.v_s());
    if y2 < 0.0 {
        LayerRegime::Attracting
    } else if y2 == 0.0 {
        LayerRegime::Neutral
    } else if y2 < node {
        LayerRegime::RepellingFocus
    } else {
        LayerRegime::RepellingNode
    }
}

pub fn gamma2_classify(y2: f64, c2: f64, p: &Params) -> Gamma2Report {
    let q2 = 2.0 * c2 * p.g;
    let q2_type = match layer_regime(q2, p) {
        LayerRegime::Attracting => EquilibriumType::Attracting,
        LayerRegime::Neutral => EquilibriumType::Degenerate,
        LayerRegime::RepellingFocus => EquilibriumType::SaddleFocus,
        LayerRegime::RepellingNode => EquilibriumType::SaddleNodal,
    };
    Gamma2Report { regime: layer_regime(y2, p), eigenvalues: layer_eigenvalues(y2, p), q2_y2: q2, q2_type }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn p() -> Params {
        Params::new(-1.0, 1.24, 0.01)
    }

    #[test]
    fn small_cycle_near_hopf() {
        let c = find_limit_cycle(-0.01, &p()).unwrap();
        assert_relative_eq!(melnikov_radius(-0.01, &p()), 0.060734, epsilon = 1e-6);
        assert!((c.amplitude / 0.060734 - 1.0).abs() < 0.05, "{}", c.amplitude);
        assert!((c.period / (2.0 * PI) - 1.0).abs() < 0.01, "{}", c.period);
        assert!(c.closure_defect < 1e-9);
        assert!(c.multiplier() > 1.0);
    }

    #[test]
    fn multiplier_matches_monodromy_trace() {
        let p = p();
        let c = find_limit_cycle(-0.3, &p).unwrap();
        assert!(c.multiplier() > 1.0);
        // forward monodromy matrix has eigenvalues 1 and the multiplier
        let (vs, k, g, y2) = (p.v_s(), p.cusp_k(), p.g, c.y2);
        let var = |_t: f64, s: &[f64; 6]| {
            let a = -(3.0 * vs * y2 + 3.0 * k * s[0] * s[0]) / g;
            let f = rhs_lienard_fast([s[0], s[1]], y2, &p);
            [f[0], f[1], a * s[2] - s[4], a * s[3] - s[5], s[2], s[3]]
        };
        let tr = integrate(var, 0.0, c.period, [0.0, c.anchor[1], 1.0, 0.0, 0.0, 1.0], &IntegratorConfig::with_tol(1e-12, 1e-14), vec![]).unwrap();
        let m = tr.last().1;
        assert_relative_eq!(m[2] + m[5] - 1.0, c.multiplier(), max_relative = 1e-5);
        let large = find_limit_cycle(-1.0, &p).unwrap();
        assert!(large.log_multiplier > c.log_multiplier);
    }

    #[test]
    fn cycle_needs_negative_y2() {
        assert!(matches!(find_limit_cycle(0.5, &p()), Err(CycleError::Precondition(_))));
    }

    #[test]
    fn mean_square_agrees_with_augmented_quadrature() {
        let p = p();
        let c = find_limit_cycle(-0.5, &p).unwrap();
        let y2 = c.y2;
        // integrate u^2 as an extra state over one period, backward since the cycle repels
        let cfg = IntegratorConfig::with_tol(1e-12, 1e-14);
        let tr = integrate(
            |_t, s: &[f64; 3]| {
                let f = rhs_lienard_fast([s[0], s[1]], y2, &p);
                [f[0], f[1], s[0] * s[0]]
            },
            0.0,
            -c.period,
            [c.anchor[0], c.anchor[1], 0.0],
            &cfg,
            vec![],
        )
        .unwrap();
        assert_relative_eq!(-tr.last().1[2] / c.period, c.mean_u2_sq, epsilon = 1e-9);
    }

    #[test]
    fn averaged_curve_starts_on_melnikov_line() {
        let p = p();
        let curve = averaged_curve(&p, &[-0.05, -0.02, -0.005]);
        assert!(curve.failures.is_empty());
        assert!(curve.strictly_decreasing);
        assert_relative_eq!(curve.melnikov_slope, -1.0 / 7.0, epsilon = 1e-12);
        let s = curve.secant_slope(-0.05, -0.005).unwrap();
        assert!((s / curve.melnikov_slope - 1.0).abs() < 0.05, "{s}");
    }

    #[test]
    fn tiny_cycle_drift_vanishes() {
        let c = find_limit_cycle(-1e-3, &p()).unwrap();
        assert!(c.g_avg(&p()).abs() < 1e-3);
    }

    #[test]
    fn c2_equilibrium_round_trip() {
        let p = p();
        let curve = averaged_curve(&p, &[-0.8, -0.6, -0.5, -0.4, -0.3]);
        let c2 = find_limit_cycle(-0.5, &p).unwrap().g_avg(&p);
        assert!(c2 > 0.0);
        let y = solve_c2_equilibrium(c2, &p, &curve).unwrap();
        assert!((y + 0.5).abs() < 1e-8, "{y}");
        let ys: Vec<f64> = [0.9, 1.0, 1.1].iter().map(|f| solve_c2_equilibrium(f * c2, &p, &curve).unwrap()).collect();
        assert!(ys[0] > ys[1] && ys[1] > ys[2]);
        assert!(matches!(solve_c2_equilibrium(0.0, &p, &curve), Err(CycleError::OutOfRange { hint: Some(_), .. })));
        assert!(matches!(solve_c2_equilibrium(10.0, &p, &curve), Err(CycleError::OutOfRange { .. })));
    }

    #[test]
    fn exit_point_small_shift() {
        let p = p();
        let e = exit_point(-0.1, &p).unwrap();
        assert!(e.y_exit > 0.0 && e.y_exit < 0.2, "{}", e.y_exit);
        assert_eq!(e.regime, ExitRegime::Focus);
        assert!(exit_integral(e.y_exit, -0.1, &p).unwrap().abs() < 1e-8);
    }

    #[test]
    fn exit_point_tends_to_zero() {
        let p = p();
        let e = exit_point(-1e-4, &p).unwrap();
        assert!(e.y_exit > 0.0 && e.y_exit <= 2e-4 && e.log_gap.is_finite());
        assert!(matches!(exit_point(0.1, &p), Err(CycleError::Precondition(_))));
    }

    #[test]
    fn exit_integral_shape() {
        let p = p();
        let c2 = -0.3;
        let ys = [-5.0, -2.0, -1.0, -0.5, -0.1, 0.0];
        let w: Vec<f64> = ys.iter().map(|&y| exit_integral(y, c2, &p).unwrap()).collect();
        assert!(w.windows(2).all(|v| v[1] < v[0]));
        let b = 2.0 * c2 * p.g;
        let up: Vec<f64> = [0.1, 0.3, 0.5, 0.55, 0.59, 0.5999].iter().map(|&y: &f64| exit_integral(y.min(b * 0.9999), c2, &p).unwrap()).collect();
        assert!(up.windows(2).all(|v| v[1] > v[0]));
        assert!(exit_integral(b, c2, &p).is_err());
    }

    #[test]
    fn tail_integral_matches_direct_quadrature() {
        // integrate directly on a long finite range and add the 1/y tail estimate
        let p = p();
        let c2 = -0.2;
        let g = p.g;
        let phi = |y: f64| layer_growth_rate(y, &p) / (-c2 + y / (2.0 * g));
        let kink = 2.0 * g / (3.0 * p.v_s());
        let (body, _) = quad(phi, -1e4, kink, 1e-12, 1e-12).unwrap();
        let (near, _) = quad(phi, kink, 0.0, 1e-12, 1e-12).unwrap();
        // phi ~ k / y^2 for y -> -inf, with Re nu_+ ~ -g / (3 v_s y)
        let k = -2.0 * g * g / (3.0 * p.v_s());
        let tail = k / 1e4;
        let w0 = exit_integral(0.0, c2, &p).unwrap();
        assert_relative_eq!(w0, body + near + tail, epsilon = 1e-7);
    }

    #[test]
    fn weber_counts() {
        for (mu, n) in [(0.5, 1), (1.5, 2), (2.7, 3), (4.06, 5), (6.3, 7)] {
            assert_eq!(weber_zero_count(mu, WEBER_L).unwrap(), n, "mu = {mu}");
            assert_eq!(weber_zero_count(mu, 2.0 * WEBER_L).unwrap(), n, "mu = {mu}, 2L");
        }
        assert!(matches!(weber_zero_count(3.0, WEBER_L), Err(CycleError::IntegerResonance(_))));
        assert!(weber_zero_count(-1.0, WEBER_L).is_err());
    }

    #[test]
    fn gamma2_regimes() {
        let p = p();
        let r = gamma2_classify(0.2, -0.1, &p);
        assert_relative_eq!(r.q2_y2, 0.2, epsilon = 1e-15);
        assert_eq!(r.q2_type, EquilibriumType::SaddleFocus);
        assert_eq!(r.regime, LayerRegime::RepellingFocus);
        let r = gamma2_classify(1.0, -0.5, &p);
        assert_relative_eq!(r.q2_y2, 1.0);
        assert_eq!(r.q2_type, EquilibriumType::SaddleNodal);
        assert_eq!(r.regime, LayerRegime::RepellingNode);
        let r = gamma2_classify(-0.2, 0.1, &p);
        assert_relative_eq!(r.q2_y2, -0.2);
        assert_eq!(r.q2_type, EquilibriumType::Attracting);
        assert_eq!(r.regime, LayerRegime::Attracting);
        assert!(r.eigenvalues.iter().all(|e| e.re < 0.0));
        let node = gamma2_classify(0.6, -0.1, &p);
        let a = 3.0 * p.v_s() * 0.6;
        assert_relative_eq!(a, 2.323790, epsilon = 1e-6);
        assert_relative_eq!(a * a - 4.0, 1.4, epsilon = 1e-6);
        assert!(node.eigenvalues.iter().all(|e| e.im == 0.0 && e.re > 0.0));
    }
}
