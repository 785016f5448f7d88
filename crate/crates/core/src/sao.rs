//! Passages of the full system past the cusp point and the small-amplitude
//! oscillations (SAOs) they pick up on the way.
//!
//! A passage starts on the attracting sheet below the cusp, counts the zeros
//! of `u` inside the window `y_in <= y <= y_out`, and ends at the first of:
//! `y = y_out`, `|u| = escape_radius`, or the horizon.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::integrate::{Event, IntegrateError, Integrator, IntegratorConfig, Status, Trajectory};
use crate::numerics::linear_fit;
use crate::vfields::{cusp_q, from_sym, rhs_full_array, rhs_sym_array, to_sym, FieldError, Params, StateFull, StateSym};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SaoError {
    #[error("seed u0 = 0 lies on the synchronous line")]
    SeedOnSymmetricAxis,
    #[error("seed (u0 = {u0}, y0 = {y0}) is not below the fold y = {fold}")]
    SeedNotAttracting { u0: f64, y0: f64, fold: f64 },
    #[error("delta = {0} must lie in (0, 1)")]
    BadDelta(f64),
    #[error("invalid passage setting: {0}")]
    BadSpec(String),
    #[error("trajectory left the cusp neighbourhood at y = {y} before reaching y_in = {y_in}")]
    EscapeBeforeEntry { y: f64, y_in: f64 },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Coordinates {
    /// Integrate in `(x, u, y, z)`, where `u = 0` is exactly invariant.
    Symmetric,
    /// Integrate in `(v1, v2, w1, w2)`.
    Original,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassageSpec {
    pub params: Params,
    pub u0: f64,
    pub y0: f64,
    pub delta: f64,
    pub z_guard: f64,
    pub escape_radius: f64,
    /// Integration time; estimated from the slow drift when `None`.
    pub horizon: Option<f64>,
    pub rtol: f64,
    pub atol: f64,
    pub coordinates: Coordinates,
    /// Scaled amplitude `|z| / eps^(3/4)` above which a zero counts as an O(1) oscillation.
    pub o1_threshold: f64,
}

impl PassageSpec {
    pub fn new(params: Params) -> Self {
        PassageSpec {
            params,
            u0: 0.05,
            y0: -0.5,
            delta: 0.1,
            z_guard: 0.2,
            escape_radius: 0.5,
            horizon: None,
            rtol: 1e-9,
            atol: 1e-12,
            coordinates: Coordinates::Symmetric,
            o1_threshold: 0.01,
        }
    }

    pub fn with_params(&self, params: Params) -> Self {
        PassageSpec { params, ..*self }
    }

    pub fn y_in(&self) -> f64 {
        -(self.params.eps / self.delta).sqrt()
    }

    pub fn y_out(&self) -> f64 {
        (self.params.eps / self.delta).sqrt()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon.unwrap_or_else(|| {
            let p = &self.params;
            let drift = (p.v_s() - p.c).abs().max(0.05 * p.eps.sqrt());
            10.0 * self.y0.abs().max(0.1) / (p.eps * drift)
        })
    }

    pub fn validate(&self) -> Result<(), SaoError> {
        self.params.validate()?;
        if !(self.params.eps > 0.0) {
            return Err(SaoError::BadSpec(format!("eps = {} must be positive", self.params.eps)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(SaoError::BadDelta(self.delta));
        }
        for (name, v) in [("z_guard", self.z_guard), ("escape_radius", self.escape_radius), ("rtol", self.rtol), ("atol", self.atol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SaoError::BadSpec(format!("{name} = {v} must be positive")));
            }
        }
        Ok(())
    }
}

/// A point `(u0, y0, Q(u0, y0))` of the attracting sheet, lifted to the full system.
pub fn seed_on_attracting_sheet(spec: &PassageSpec) -> Result<StateFull, SaoError> {
    Ok(from_sym(&seed_sym(spec)?, &spec.params))
}

fn seed_sym(spec: &PassageSpec) -> Result<StateSym, SaoError> {
    let p = &spec.params;
    let (u, y) = (spec.u0, spec.y0);
    if u == 0.0 {
        return Err(SaoError::SeedOnSymmetricAxis);
    }
    let vs = p.v_s();
    let fold = -(p.cusp_k() / vs) * u * u;
    if !(y < fold) {
        return Err(SaoError::SeedNotAttracting { u0: u, y0: y, fold });
    }
    let x = vs + y / (2.0 * p.g) + 3.0 * vs * u * u / (2.0 * p.g);
    Ok(StateSym { x, u, y, z: cusp_q(u, y, p) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub t: f64,
    pub u: f64,
    pub y: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PassageEnd {
    /// Reached `y = y_out`.
    Section,
    /// `|u|` reached the escape radius.
    Escaped,
    Horizon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    /// Rotation count equals the predicted count.
    Agree,
    Disagree,
    /// Inside the saddle-node band, where exact agreement is not expected.
    Band,
    /// Amplitudes fell below the integrator's absolute tolerance.
    Underflow,
    /// No prediction outside the node interval.
    NoPrediction,
}

impl Verdict {
    pub fn tag(&self) -> &'static str {
        match self {
            Verdict::Agree => "agree",
            Verdict::Disagree => "disagree",
            Verdict::Band => "saddle-node-band",
            Verdict::Underflow => "underflow",
            Verdict::NoPrediction => "no-prediction",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SaoReport {
    pub params: Params,
    pub y_in: f64,
    pub y_out: f64,
    pub zeros: usize,
    /// Half-turns of `(u, z)` after the first counted zero; `None` without zeros.
    pub rotations: Option<usize>,
    pub predicted: Option<usize>,
    pub zero_crossings: Vec<Crossing>,
    /// `|u|` at the last zero of `z` in the window.
    pub u_exit: Option<f64>,
    /// `|z|` at the last counted zero of `u`.
    pub z_exit: Option<f64>,
    /// Amplitude of the last rotation, `|z|` at the final counted zero of `u`.
    pub last_amplitude: Option<f64>,
    pub end: PassageEnd,
    pub end_state: StateSym,
    pub underflow: bool,
    pub in_band: bool,
    pub verdict: Verdict,
}

impl SaoReport {
    pub fn flags(&self) -> Vec<&'static str> {
        let mut f = Vec::new();
        if self.in_band {
            f.push("band");
        }
        if self.underflow {
            f.push("underflow");
        }
        match self.end {
            PassageEnd::Escaped => f.push("escaped"),
            PassageEnd::Horizon => f.push("horizon"),
            PassageEnd::Section => {}
        }
        f
    }
}

/// A passage in symmetric coordinates together with its report.
#[derive(Debug, Clone)]
pub struct Passage {
    pub trajectory: Trajectory<4>,
    /// Coordinates of `trajectory.y`.
    pub coordinates: Coordinates,
    /// Samples in `(x, u, y, z)`.
    pub sym: Vec<(f64, StateSym)>,
    pub report: SaoReport,
}

/// Lower edge of the saddle-node band `v_s - sqrt(eps)/(3 v_s)`.
pub fn band_boundary(p: &Params) -> f64 {
    p.v_s() - p.eps.sqrt() / (3.0 * p.v_s())
}

pub fn predicted_count(p: &Params) -> Option<usize> {
    let l1 = p.lambda1();
    (l1 < 0.0).then(|| p.mu()).filter(|m| *m > 0.0 && m.is_finite()).map(|m| m.floor() as usize)
}

fn wrap(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}

/// Accumulated angle of `(u, z)` along the points, assuming increments below `pi`.
pub fn angle_lift<I: IntoIterator<Item = (f64, f64)>>(points: I) -> f64 {
    let mut it = points.into_iter();
    let Some((u, z)) = it.next() else { return 0.0 };
    let mut prev = z.atan2(u);
    let mut total = 0.0;
    for (u, z) in it {
        let a = z.atan2(u);
        total += wrap(a - prev);
        prev = a;
    }
    total
}

const EV_U: usize = 0;
const EV_Z: usize = 1;
const EV_ESCAPE: usize = 2;
const EV_OUT: usize = 3;

pub fn run_passage(spec: &PassageSpec) -> Result<Passage, SaoError> {
    spec.validate()?;
    let p = spec.params;
    let s0 = seed_sym(spec)?;
    let (y_in, y_out) = (spec.y_in(), spec.y_out());
    let cfg = IntegratorConfig { event_tol: 1e-10, ..IntegratorConfig::with_tol(spec.rtol, spec.atol) };
    let ws = p.w_s();
    let sym_of = |s: &[f64; 4]| -> [f64; 4] {
        match spec.coordinates {
            Coordinates::Symmetric => *s,
            Coordinates::Original => [0.5 * (s[0] + s[1]), 0.5 * (s[0] - s[1]), 0.5 * (s[2] + s[3]) - ws, 0.5 * (s[2] - s[3])],
        }
    };
    let in_window = move |s: &[f64; 4]| {
        let q = sym_of(s);
        q[2] >= y_in && q[2] <= y_out && q[3].abs() <= spec.z_guard
    };
    let r = spec.escape_radius;
    let integ = Integrator::new(cfg)
        .event(Event::new("u=0", move |_t, s: &[f64; 4]| sym_of(s)[1]).guard(move |_t, s| in_window(s)))
        .event(Event::new("z=0", move |_t, s: &[f64; 4]| sym_of(s)[3]).guard(move |_t, s| in_window(s)))
        .event(Event::new("escape", move |_t, s: &[f64; 4]| sym_of(s)[1].abs() - r).rising().terminal())
        .event(Event::new("y=y_out", move |_t, s: &[f64; 4]| sym_of(s)[2] - y_out).rising().terminal())
        .step_guard(move |a, b| {
            let (qa, qb) = (sym_of(a), sym_of(b));
            wrap(qb[3].atan2(qb[1]) - qa[3].atan2(qa[1])).abs() < 0.5 * PI
        });
    let horizon = spec.horizon();
    let tr = match spec.coordinates {
        Coordinates::Symmetric => integ.run(|_t, s| rhs_sym_array(s, &p), 0.0, horizon, s0.to_array())?,
        Coordinates::Original => integ.run(|_t, s| rhs_full_array(s, &p), 0.0, horizon, from_sym(&s0, &p).to_array())?,
    };
    let sym: Vec<(f64, StateSym)> = tr.t.iter().zip(&tr.y).map(|(t, s)| (*t, StateSym::from_array(sym_of(s)))).collect();
    let end = match tr.status {
        Status::Terminated { event: EV_ESCAPE } => PassageEnd::Escaped,
        Status::Terminated { event: EV_OUT } => PassageEnd::Section,
        _ => PassageEnd::Horizon,
    };
    let end_state = sym.last().expect("non-empty").1;
    if end == PassageEnd::Escaped && end_state.y < y_in {
        return Err(SaoError::EscapeBeforeEntry { y: end_state.y, y_in });
    }
    let crossing = |i: usize| -> Vec<Crossing> {
        tr.events_of(i)
            .map(|e| {
                let q = sym_of(&e.y);
                Crossing { t: e.t, u: q[1], y: q[2], z: q[3] }
            })
            .collect()
    };
    let zero_crossings = crossing(EV_U);
    let z_crossings = crossing(EV_Z);
    let zeros = zero_crossings.len();
    let rotations = zero_crossings.first().map(|first| {
        let pts = std::iter::once((first.u, first.z)).chain(sym.iter().filter(|(t, _)| *t > first.t).map(|(_, s)| (s.u, s.z)));
        (angle_lift(pts).abs() / PI).floor() as usize
    });
    let z_exit = zero_crossings.last().map(|c| c.z.abs());
    let u_exit = z_crossings.last().map(|c| c.u.abs());

    let floor = 10.0 * spec.atol;
    let underflow = zero_crossings.iter().any(|c| c.z.abs() < floor) || z_crossings.iter().any(|c| c.u.abs() < floor);
    let predicted = predicted_count(&p);
    let in_band = p.c > band_boundary(&p);
    let verdict = if underflow {
        Verdict::Underflow
    } else if in_band {
        Verdict::Band
    } else {
        match (predicted, rotations) {
            (None, _) => Verdict::NoPrediction,
            (Some(n), Some(r)) if n == r => Verdict::Agree,
            (Some(0), None) => Verdict::Agree,
            _ => Verdict::Disagree,
        }
    };
    let report = SaoReport {
        params: p,
        y_in,
        y_out,
        zeros,
        rotations,
        predicted,
        zero_crossings,
        u_exit,
        z_exit,
        last_amplitude: z_exit,
        end,
        end_state,
        underflow,
        in_band,
        verdict,
    };
    Ok(Passage { trajectory: tr, coordinates: spec.coordinates, sym, report })
}

impl Passage {
    /// States in the original coordinates.
    pub fn full_states(&self) -> Vec<(f64, StateFull)> {
        let p = &self.report.params;
        self.sym.iter().map(|(t, s)| (*t, from_sym(s, p))).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub c: f64,
    pub c2: Option<f64>,
    pub eps: f64,
    pub predicted: Option<usize>,
    pub zeros: Option<usize>,
    pub rotations: Option<usize>,
    pub u_exit: Option<f64>,
    pub z_exit: Option<f64>,
    pub last_amplitude: Option<f64>,
    pub verdict: String,
    pub flags: Vec<String>,
}

impl SweepRow {
    fn from_result(p: &Params, r: Result<SaoReport, SaoError>) -> Self {
        match r {
            Ok(rep) => SweepRow {
                c: p.c,
                c2: p.c2,
                eps: p.eps,
                predicted: rep.predicted,
                zeros: Some(rep.zeros),
                rotations: rep.rotations,
                u_exit: rep.u_exit,
                z_exit: rep.z_exit,
                last_amplitude: rep.last_amplitude,
                verdict: rep.verdict.tag().into(),
                flags: rep.flags().into_iter().map(String::from).collect(),
            },
            Err(e) => SweepRow {
                c: p.c,
                c2: p.c2,
                eps: p.eps,
                predicted: predicted_count(p),
                zeros: None,
                rotations: None,
                u_exit: None,
                z_exit: None,
                last_amplitude: None,
                verdict: "error".into(),
                flags: vec![e.to_string()],
            },
        }
    }
}

/// One passage per threshold `c`, run in parallel; rows keep the grid order.
pub fn sweep_counts(base: &PassageSpec, c_grid: &[f64], eps: f64) -> Vec<SweepRow> {
    c_grid
        .par_iter()
        .map(|&c| {
            let p = Params { c, eps, c2: None, ..base.params };
            SweepRow::from_result(&p, run_passage(&base.with_params(p)).map(|ps| ps.report))
        })
        .collect()
}

/// Like [`sweep_counts`] over saddle-node offsets, `c = v_s + sqrt(eps) c2`.
pub fn sweep_offsets(base: &PassageSpec, c2_grid: &[f64], eps: f64) -> Vec<SweepRow> {
    c2_grid
        .par_iter()
        .map(|&c2| {
            let p = Params::saddle_node(base.params.g, c2, eps);
            SweepRow::from_result(&p, run_passage(&base.with_params(p)).map(|ps| ps.report))
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut w: W, header: &[String]) -> std::io::Result<()> {
    for line in header {
        writeln!(w, "# {line}")?;
    }
    let by_c2 = rows.iter().any(|r| r.c2.is_some());
    let mut out = csv::Writer::from_writer(w);
    out.write_record([if by_c2 { "c2" } else { "c" }, "eps", "predicted", "zeros", "rotations", "u_exit", "z_exit", "last_amplitude", "verdict", "flags"])?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.10e}")).unwrap_or_default();
    let opt_n = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        out.write_record([
            format!("{:.10}", if by_c2 { r.c2.unwrap_or(f64::NAN) } else { r.c }),
            format!("{:e}", r.eps),
            opt_n(r.predicted),
            opt_n(r.zeros),
            opt_n(r.rotations),
            opt(r.u_exit),
            opt(r.z_exit),
            opt(r.last_amplitude),
            r.verdict.clone(),
            r.flags.join(";"),
        ])?;
    }
    out.flush()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub rows: Vec<SweepRow>,
    /// Slope of `ln u_exit` against `ln eps`.
    pub u_slope: f64,
    pub z_slope: f64,
    /// Grid values left out of the fit.
    pub excluded: Vec<f64>,
}

/// Fits the exit amplitudes against `eps` at fixed `c`.
pub fn amplitude_scaling(base: &PassageSpec, eps_grid: &[f64]) -> ScalingFit {
    let rows: Vec<SweepRow> = eps_grid
        .par_iter()
        .map(|&eps| {
            let p = Params { eps, ..base.params };
            SweepRow::from_result(&p, run_passage(&base.with_params(p)).map(|ps| ps.report))
        })
        .collect();
    let mut le = Vec::new();
    let mut lu = Vec::new();
    let mut lz = Vec::new();
    let mut excluded = Vec::new();
    for r in &rows {
        match (r.u_exit, r.z_exit, r.verdict.as_str()) {
            (Some(u), Some(z), v) if v != "underflow" && v != "error" => {
                le.push(r.eps.ln());
                lu.push(u.ln());
                lz.push(z.ln());
            }
            _ => excluded.push(r.eps),
        }
    }
    let (u_slope, z_slope) = if le.len() >= 2 { (linear_fit(&le, &lu).0, linear_fit(&le, &lz).0) } else { (f64::NAN, f64::NAN) };
    ScalingFit { rows, u_slope, z_slope, excluded }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SaddleNodeReport {
    pub c2: f64,
    pub report: SaoReport,
    /// Zeros of `u` whose scaled amplitude `|z| / eps^(3/4)` reaches the threshold.
    pub o1_count: usize,
    /// Regular equilibrium in `(x, u, y, z)`.
    pub q: StateSym,
    /// Closest approach in blown-up coordinates: `x - q.x`, `y - q.y` over `eps^(1/2)`, `u` over `eps^(1/4)`, `z` over `eps^(3/4)`.
    pub closest_time: f64,
    pub closest_distance: f64,
    /// Angle lift of `(u, z)` from the closest approach to the end of the passage.
    pub lift_after_closest: f64,
    /// Same lift measured from the closest approach in unscaled coordinates.
    pub lift_after_closest_unscaled: f64,
    /// Escaped after spiralling more than three half-turns away from `q`.
    pub outward_spiral: bool,
    pub final_distance: f64,
    pub converged_to_q: bool,
}

/// Passage with `c = v_s + sqrt(eps) c2`.
pub fn saddle_node_passage(base: &PassageSpec, c2: f64) -> Result<SaddleNodeReport, SaoError> {
    let p = Params::saddle_node(base.params.g, c2, base.params.eps);
    let spec = base.with_params(p);
    let run = run_passage(&spec)?;
    let c = p.c;
    let q_full = StateFull { v1: c, v2: c, w1: -c * c * c + 3.0 * c, w2: -c * c * c + 3.0 * c };
    let q = to_sym(&q_full, &p);
    let (e4, e2, e34) = (p.eps.powf(0.25), p.eps.sqrt(), p.eps.powf(0.75));
    let scaled = |s: &StateSym| {
        (((s.x - q.x) / e2).powi(2) + (s.u / e4).powi(2) + ((s.y - q.y) / e2).powi(2) + (s.z / e34).powi(2)).sqrt()
    };
    let euclid = |s: &StateSym| ((s.x - q.x).powi(2) + s.u.powi(2) + (s.y - q.y).powi(2) + s.z.powi(2)).sqrt();
    let nearest = |d: &dyn Fn(&StateSym) -> f64| {
        run.sym.iter().enumerate().map(|(k, (_, s))| (k, d(s))).min_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty")
    };
    let lift_from = |k: usize| angle_lift(run.sym[k..].iter().map(|(_, s)| (s.u, s.z))).abs();
    let (k, closest) = nearest(&scaled);
    let (ke, _) = nearest(&euclid);
    let lift = lift_from(k);
    let o1_count = run.report.zero_crossings.iter().filter(|z| z.z.abs() / e34 >= spec.o1_threshold).count();
    let final_distance = euclid(&run.report.end_state);
    let escaped = run.report.end == PassageEnd::Escaped;
    Ok(SaddleNodeReport {
        c2,
        o1_count,
        q,
        closest_time: run.sym[k].0,
        closest_distance: closest,
        lift_after_closest: lift,
        lift_after_closest_unscaled: lift_from(ke),
        outward_spiral: escaped && lift > 3.0 * PI,
        final_distance,
        converged_to_q: !escaped && final_distance < 1e-6,
        report: run.report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec(c: f64) -> PassageSpec {
        PassageSpec::new(Params::new(-1.0, c, 0.01))
    }

    #[test]
    fn seed_lies_on_truncated_sheet() {
        let s = spec(1.24);
        let full = seed_on_attracting_sheet(&s).unwrap();
        let sym = to_sym(&full, &s.params);
        assert_relative_eq!(sym.u, 0.05, epsilon = 1e-15);
        assert_relative_eq!(sym.y, -0.5, epsilon = 1e-14);
        assert_relative_eq!(sym.z, -0.0950746, epsilon = 1e-7);
    }

    #[test]
    fn seed_errors() {
        let mut s = spec(1.24);
        s.u0 = 0.0;
        assert_eq!(seed_on_attracting_sheet(&s), Err(SaoError::SeedOnSymmetricAxis));
        let mut s = spec(1.24);
        s.y0 = 0.1;
        assert!(matches!(seed_on_attracting_sheet(&s), Err(SaoError::SeedNotAttracting { .. })));
        let mut s = spec(1.24);
        s.delta = 1.5;
        assert!(matches!(run_passage(&s), Err(SaoError::BadDelta(_))));
    }

    #[test]
    fn angle_lift_of_circle() {
        let pts = (0..=40).map(|k| {
            let a = k as f64 * PI / 10.0;
            (a.cos(), a.sin())
        });
        assert_relative_eq!(angle_lift(pts), 4.0 * PI, epsilon = 1e-12);
    }

    #[test]
    fn band_edge() {
        assert_relative_eq!(band_boundary(&Params::new(-1.0, 1.0, 0.01)), 1.265174, epsilon = 1e-6);
    }

    #[test]
    fn predictions() {
        assert_eq!(predicted_count(&Params::new(-1.0, 1.24, 0.01)), Some(4));
        assert_eq!(predicted_count(&Params::new(-1.0, 1.22, 0.01)), Some(2));
        assert_eq!(predicted_count(&Params::new(-1.0, 1.18, 0.01)), Some(1));
        assert_eq!(predicted_count(&Params::new(-1.0, 1.35, 0.01)), None);
    }

    #[test]
    fn four_rotations_at_1_24() {
        let r = run_passage(&spec(1.24)).unwrap().report;
        assert_eq!(r.zeros, 5);
        assert_eq!(r.rotations, Some(4));
        assert_eq!(r.verdict, Verdict::Agree);
        assert_eq!(r.end, PassageEnd::Escaped);
    }

    #[test]
    fn mirrored_seed_mirrors_passage() {
        let a = run_passage(&spec(1.22)).unwrap().report;
        let mut s = spec(1.22);
        s.u0 = -s.u0;
        let b = run_passage(&s).unwrap().report;
        assert_eq!(a.zeros, b.zeros);
        assert_eq!(a.rotations, b.rotations);
        for (x, y) in a.zero_crossings.iter().zip(&b.zero_crossings) {
            assert_relative_eq!(x.z, -y.z, epsilon = 1e-9 * x.z.abs().max(1e-12));
        }
    }

    #[test]
    fn csv_columns() {
        let rows = sweep_counts(&spec(1.2), &[1.18, 1.2], 0.01);
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf, &["band".into()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("c,eps,predicted,zeros,rotations,u_exit,z_exit,last_amplitude,verdict,flags"));
        assert_eq!(text.lines().count(), 4);
    }
}
