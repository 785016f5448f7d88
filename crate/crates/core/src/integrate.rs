//! Dormand-Prince 5(4) integration with dense output, guarded events and
//! reverse time.
//!
//! ```
//! use fhn_cusp::integrate::{integrate, Event, IntegratorConfig};
//!
//! // harmonic oscillator, first downward zero of x
//! let ev = Event::new("x=0", |_t, y: &[f64; 2]| y[0]).falling().terminal();
//! let tr = integrate(|_t, y: &[f64; 2]| [y[1], -y[0]], 0.0, 10.0, [1.0, 0.0], &IntegratorConfig::default(), vec![ev]).unwrap();
//! assert!((tr.events[0].t - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
//! ```

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrateError {
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("step budget of {0} exhausted")]
    TooManySteps(usize),
    #[error("no section crossing before the horizon t = {t}")]
    NoReturn { t: f64 },
    #[error("section crossed tangentially at t = {t} (dg/dt = {rate:e})")]
    TangencyDetected { t: f64, rate: f64 },
    #[error("invalid integrator setting: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    /// First trial step; estimated when `None`.
    pub h0: Option<f64>,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
    /// Time resolution of event location.
    pub event_tol: f64,
    /// Take fixed steps of this size without error control.
    pub fixed_step: Option<f64>,
    /// Keep the interpolation polynomials of every step.
    pub keep_dense: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rtol: 1e-9,
            atol: 1e-12,
            h0: None,
            h_max: f64::INFINITY,
            h_min: 1e-13,
            max_steps: 20_000_000,
            event_tol: 1e-12,
            fixed_step: None,
            keep_dense: true,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tol(rtol: f64, atol: f64) -> Self {
        IntegratorConfig { rtol, atol, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Crossing {
    Rising,
    Falling,
    Either,
}

type EventFn<'a, const N: usize> = Box<dyn Fn(f64, &[f64; N]) -> f64 + 'a>;
type GuardFn<'a, const N: usize> = Box<dyn Fn(f64, &[f64; N]) -> bool + 'a>;
type StepGuardFn<'a, const N: usize> = Box<dyn Fn(&[f64; N], &[f64; N]) -> bool + 'a>;

/// A zero of `func` along the trajectory. Directions refer to the order of integration.
pub struct Event<'a, const N: usize> {
    pub name: String,
    func: EventFn<'a, N>,
    direction: Crossing,
    guard: Option<GuardFn<'a, N>>,
    terminal: bool,
}

impl<'a, const N: usize> Event<'a, N> {
    pub fn new(name: impl Into<String>, func: impl Fn(f64, &[f64; N]) -> f64 + 'a) -> Self {
        Event { name: name.into(), func: Box::new(func), direction: Crossing::Either, guard: None, terminal: false }
    }

    pub fn rising(mut self) -> Self {
        self.direction = Crossing::Rising;
        self
    }

    pub fn falling(mut self) -> Self {
        self.direction = Crossing::Falling;
        self
    }

    pub fn terminal(mut self) -> Self {
        self.terminal = true;
        self
    }

    /// Only crossings where `guard` holds are recorded.
    pub fn guard(mut self, guard: impl Fn(f64, &[f64; N]) -> bool + 'a) -> Self {
        self.guard = Some(Box::new(guard));
        self
    }

    pub fn value(&self, t: f64, y: &[f64; N]) -> f64 {
        (self.func)(t, y)
    }

    fn accepts(&self, gl: f64, gr: f64) -> bool {
        let rising = gl < 0.0 && gr >= 0.0;
        let falling = gl > 0.0 && gr <= 0.0;
        match self.direction {
            Crossing::Rising => rising,
            Crossing::Falling => falling,
            Crossing::Either => rising || falling,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventHit<const N: usize> {
    /// Index into the event list.
    pub event: usize,
    pub t: f64,
    #[serde(serialize_with = "ser_array")]
    pub y: [f64; N],
}

fn ser_array<S: serde::Serializer, const N: usize>(a: &[f64; N], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(a.iter())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    /// Reached the end of the time span.
    Horizon,
    /// Stopped at a terminal event.
    Terminated { event: usize },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub guard_rejected: usize,
    pub evaluations: usize,
}

/// Quartic interpolant over one accepted step.
#[derive(Debug, Clone, Copy)]
pub struct DenseSegment<const N: usize> {
    pub t0: f64,
    pub h: f64,
    r: [[f64; N]; 5],
}

impl<const N: usize> DenseSegment<N> {
    pub fn eval(&self, t: f64) -> [f64; N] {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let mut out = [0.0; N];
        for i in 0..N {
            let r = &self.r;
            out[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
        out
    }

    pub fn contains(&self, t: f64) -> bool {
        let th = (t - self.t0) / self.h;
        (-1e-12..=1.0 + 1e-12).contains(&th)
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory<const N: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
    pub events: Vec<EventHit<N>>,
    pub status: Status,
    pub stats: Stats,
    pub dense: Vec<DenseSegment<N>>,
}

impl<const N: usize> Trajectory<N> {
    pub fn last(&self) -> (f64, [f64; N]) {
        (*self.t.last().expect("non-empty"), *self.y.last().expect("non-empty"))
    }

    /// Dense-output state at time `t`, if it lies inside the integrated span.
    pub fn eval(&self, t: f64) -> Option<[f64; N]> {
        if self.dense.is_empty() {
            return None;
        }
        let forward = self.dense[0].h > 0.0;
        let idx = self.dense.partition_point(|s| if forward { s.t0 + s.h < t } else { s.t0 + s.h > t });
        let seg = self.dense.get(idx).or(self.dense.last())?;
        seg.contains(t).then(|| seg.eval(t))
    }

    pub fn events_of(&self, event: usize) -> impl Iterator<Item = &EventHit<N>> {
        self.events.iter().filter(move |e| e.event == event)
    }

    /// CSV with columns `t`, the state names, `is_event`, `event_id`. Lines of
    /// `header` are written first, each prefixed by `# `.
    pub fn write_csv<W: Write>(&self, mut w: W, names: &[&str; N], header: &[String]) -> std::io::Result<()> {
        for line in header {
            writeln!(w, "# {line}")?;
        }
        let mut out = csv::Writer::from_writer(w);
        let mut head = vec!["t".to_string()];
        head.extend(names.iter().map(|s| s.to_string()));
        head.push("is_event".into());
        head.push("event_id".into());
        out.write_record(&head)?;
        let forward = self.t.len() < 2 || self.t[1] >= self.t[0];
        let before = |a: f64, b: f64| if forward { a <= b } else { a >= b };
        let mut k = 0;
        let row = |t: f64, y: &[f64; N], ev: Option<usize>| {
            let mut r = vec![format!("{t:.17e}")];
            r.extend(y.iter().map(|v| format!("{v:.17e}")));
            r.push(if ev.is_some() { "1".into() } else { "0".into() });
            r.push(ev.map(|e| e.to_string()).unwrap_or_default());
            r
        };
        for (t, y) in self.t.iter().zip(&self.y) {
            while k < self.events.len() && before(self.events[k].t, *t) {
                let e = &self.events[k];
                out.write_record(row(e.t, &e.y, Some(e.event)))?;
                k += 1;
            }
            out.write_record(row(*t, y, None))?;
        }
        for e in &self.events[k..] {
            out.write_record(row(e.t, &e.y, Some(e.event)))?;
        }
        out.flush()
    }

    pub fn to_json(&self, names: &[&str; N], event_names: &[String]) -> serde_json::Value {
        serde_json::json!({
            "names": names.as_slice(),
            "t": self.t,
            "state": self.y.iter().map(|s| s.to_vec()).collect::<Vec<_>>(),
            "events": self.events,
            "event_names": event_names,
            "status": self.status,
            "stats": self.stats,
        })
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut s = 0.0;
        for (a, k) in terms {
            s += a * k[i];
        }
        out[i] += h * s;
    }
    out
}

fn all_finite<const N: usize>(y: &[f64; N]) -> bool {
    y.iter().all(|v| v.is_finite())
}

/// Integrator with events and an optional step acceptance test.
pub struct Integrator<'a, const N: usize> {
    pub config: IntegratorConfig,
    events: Vec<Event<'a, N>>,
    step_guard: Option<StepGuardFn<'a, N>>,
}

impl<'a, const N: usize> Integrator<'a, N> {
    pub fn new(config: IntegratorConfig) -> Self {
        Integrator { config, events: Vec::new(), step_guard: None }
    }

    pub fn event(mut self, e: Event<'a, N>) -> Self {
        self.events.push(e);
        self
    }

    pub fn events(mut self, es: Vec<Event<'a, N>>) -> Self {
        self.events.extend(es);
        self
    }

    /// Steps from `y0` to `y1` for which `guard(y0, y1)` is false are rejected and retried with half the step.
    pub fn step_guard(mut self, guard: impl Fn(&[f64; N], &[f64; N]) -> bool + 'a) -> Self {
        self.step_guard = Some(Box::new(guard));
        self
    }

    fn check(&self) -> Result<(), IntegrateError> {
        let c = &self.config;
        if !(c.rtol > 0.0 && c.atol > 0.0) {
            return Err(IntegrateError::InvalidConfig(format!("tolerances must be positive (rtol {}, atol {})", c.rtol, c.atol)));
        }
        if let Some(h) = c.fixed_step {
            if !(h > 0.0 && h.is_finite()) {
                return Err(IntegrateError::InvalidConfig(format!("fixed step {h}")));
            }
        }
        Ok(())
    }

    fn initial_step<F: FnMut(f64, &[f64; N]) -> [f64; N]>(&self, rhs: &mut F, t0: f64, y0: &[f64; N], f0: &[f64; N], dir: f64, span: f64) -> f64 {
        let c = &self.config;
        let sk: Vec<f64> = y0.iter().map(|v| c.atol + c.rtol * v.abs()).collect();
        let norm = |v: &[f64; N]| (v.iter().zip(&sk).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / N as f64).sqrt();
        let d0 = norm(y0);
        let d1 = norm(f0);
        let mut h0 = if d0 < 1e-10 || d1 < 1e-10 { 1e-6 } else { 0.01 * d0 / d1 };
        h0 = h0.min(c.h_max).min(span);
        let y1 = axpy(y0, dir * h0, &[(1.0, f0)]);
        let f1 = rhs(t0 + dir * h0, &y1);
        let mut diff = [0.0; N];
        for i in 0..N {
            diff[i] = f1[i] - f0[i];
        }
        let d2 = norm(&diff) / h0;
        let dm = d1.max(d2);
        let h1 = if dm <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / dm).powf(0.2) };
        (100.0 * h0).min(h1).min(c.h_max).min(span)
    }

    /// Integrate from `t0` to `t_end`; `t_end < t0` runs backward in time.
    pub fn run<F>(&self, mut rhs: F, t0: f64, t_end: f64, y0: [f64; N]) -> Result<Trajectory<N>, IntegrateError>
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
    {
        self.check()?;
        if !all_finite(&y0) {
            return Err(IntegrateError::NonFiniteState { t: t0 });
        }
        let c = self.config;
        let dir = if t_end >= t0 { 1.0 } else { -1.0 };
        let span = (t_end - t0).abs();
        let mut tr = Trajectory {
            t: vec![t0],
            y: vec![y0],
            events: Vec::new(),
            status: Status::Horizon,
            stats: Stats::default(),
            dense: Vec::new(),
        };
        if span == 0.0 {
            return Ok(tr);
        }
        let mut t = t0;
        let mut y = y0;
        let mut k1 = rhs(t, &y);
        tr.stats.evaluations += 1;
        if !all_finite(&k1) {
            return Err(IntegrateError::NonFiniteState { t });
        }
        let mut g_prev: Vec<f64> = self.events.iter().map(|e| e.value(t, &y)).collect();
        let mut h = match c.fixed_step {
            Some(hf) => hf.min(span),
            None => c.h0.map(|v| v.abs()).unwrap_or_else(|| {
                tr.stats.evaluations += 2;
                self.initial_step(&mut rhs, t, &y, &k1, dir, span)
            }),
        };
        let mut facold: f64 = 1e-4;
        let mut last_rejected = false;
        let beta = 0.04;
        let expo1 = 0.2 - beta * 0.75;
        loop {
            if tr.stats.accepted + tr.stats.rejected >= c.max_steps {
                return Err(IntegrateError::TooManySteps(c.max_steps));
            }
            let remaining = (t_end - t).abs();
            let mut last = false;
            if h >= remaining * (1.0 - 1e-12) {
                h = remaining;
                last = true;
            }
            if c.fixed_step.is_none() && h < c.h_min * (1.0 + t.abs()) {
                return Err(IntegrateError::StepSizeUnderflow { t, h });
            }
            let hs = dir * h;
            let k2 = rhs(t + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]));
            let k3 = rhs(t + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]));
            let k4 = rhs(t + C4 * hs, &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = rhs(t + C5 * hs, &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
            let y6 = axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
            let k6 = rhs(t + hs, &y6);
            let y1 = axpy(&y, hs, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let t1 = if last { t_end } else { t + hs };
            let k7 = rhs(t1, &y1);
            tr.stats.evaluations += 6;

            let finite = all_finite(&y1) && all_finite(&k7);
            let err = if c.fixed_step.is_some() {
                0.0
            } else if !finite {
                f64::INFINITY
            } else {
                let mut s = 0.0;
                for i in 0..N {
                    let e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                    let sk = c.atol + c.rtol * y[i].abs().max(y1[i].abs());
                    s += (e / sk).powi(2);
                }
                (s / N as f64).sqrt()
            };
            if c.fixed_step.is_some() && !finite {
                return Err(IntegrateError::NonFiniteState { t: t1 });
            }

            if err > 1.0 {
                tr.stats.rejected += 1;
                let fac11 = err.powf(expo1);
                let shrink = if err.is_finite() { (fac11 / 0.9).min(5.0) } else { 10.0 };
                h /= shrink;
                last_rejected = true;
                continue;
            }
            if let Some(guard) = &self.step_guard {
                if !guard(&y, &y1) {
                    tr.stats.guard_rejected += 1;
                    h *= 0.5;
                    if c.fixed_step.is_some() {
                        return Err(IntegrateError::InvalidConfig("step guard rejected a fixed step".into()));
                    }
                    last_rejected = true;
                    continue;
                }
            }

            // accepted
            tr.stats.accepted += 1;
            let mut r = [[0.0; N]; 5];
            for i in 0..N {
                let ydiff = y1[i] - y[i];
                let bspl = hs * k1[i] - ydiff;
                r[0][i] = y[i];
                r[1][i] = ydiff;
                r[2][i] = bspl;
                r[3][i] = ydiff - hs * k7[i] - bspl;
                r[4][i] = hs * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            let seg = DenseSegment { t0: t, h: t1 - t, r };

            let mut stop: Option<(usize, f64, [f64; N])> = None;
            if !self.events.is_empty() {
                let mut hits = self.locate_events(&seg, &mut g_prev, t1, &y1);
                hits.sort_by(|a, b| (dir * a.t).total_cmp(&(dir * b.t)));
                for hit in hits {
                    tr.events.push(hit);
                    if self.events[hit.event].terminal {
                        stop = Some((hit.event, hit.t, hit.y));
                        break;
                    }
                }
            }
            if c.keep_dense {
                tr.dense.push(seg);
            }
            if let Some((ev, te, ye)) = stop {
                tr.t.push(te);
                tr.y.push(ye);
                tr.status = Status::Terminated { event: ev };
                return Ok(tr);
            }
            t = t1;
            y = y1;
            k1 = k7;
            tr.t.push(t);
            tr.y.push(y);
            if last {
                return Ok(tr);
            }

            if let Some(hf) = c.fixed_step {
                h = hf;
                continue;
            }
            let fac11 = err.powf(expo1);
            let mut fac = fac11 / facold.powf(beta);
            fac = (fac / 0.9).clamp(0.1, 5.0);
            let mut hnew = h / fac;
            if last_rejected {
                hnew = hnew.min(h);
            }
            facold = err.max(1e-4);
            last_rejected = false;
            h = hnew.min(c.h_max);
        }
    }

    fn locate_events(&self, seg: &DenseSegment<N>, g_prev: &mut [f64], t1: f64, y1: &[f64; N]) -> Vec<EventHit<N>> {
        const SCAN: usize = 4;
        let mut hits = Vec::new();
        let tol = self.config.event_tol;
        for (k, ev) in self.events.iter().enumerate() {
            let mut tl = seg.t0;
            let mut gl = g_prev[k];
            for j in 1..=SCAN {
                let (tr, gr) = if j == SCAN {
                    (t1, ev.value(t1, y1))
                } else {
                    let tj = seg.t0 + seg.h * j as f64 / SCAN as f64;
                    (tj, ev.value(tj, &seg.eval(tj)))
                };
                if ev.accepts(gl, gr) {
                    let (mut a, mut b, mut ga) = (tl, tr, gl);
                    while (b - a).abs() > tol {
                        let m = 0.5 * (a + b);
                        let gm = ev.value(m, &seg.eval(m));
                        if gm == 0.0 {
                            a = m;
                            b = m;
                            break;
                        }
                        if gm.signum() == ga.signum() {
                            a = m;
                            ga = gm;
                        } else {
                            b = m;
                        }
                    }
                    let te = if j == SCAN && b == t1 && a == b { t1 } else { 0.5 * (a + b) };
                    let ye = if te == t1 { *y1 } else { seg.eval(te) };
                    if ev.guard.as_ref().map_or(true, |gd| gd(te, &ye)) {
                        hits.push(EventHit { event: k, t: te, y: ye });
                    }
                }
                tl = tr;
                gl = gr;
            }
            g_prev[k] = gl;
        }
        hits
    }
}

/// Integrate with the given events and no step guard.
pub fn integrate<'a, F, const N: usize>(rhs: F, t0: f64, t_end: f64, y0: [f64; N], config: &IntegratorConfig, events: Vec<Event<'a, N>>) -> Result<Trajectory<N>, IntegrateError>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    Integrator::new(*config).events(events).run(rhs, t0, t_end, y0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Return<const N: usize> {
    /// Elapsed time, signed like the integration direction.
    pub time: f64,
    pub state: [f64; N],
    /// Rate of change of the section function along the flow at the crossing.
    pub rate: f64,
}

/// Next crossing of `section` starting from `y0`, searched over a time span of
/// `horizon` (negative for backward returns).
pub fn poincare_return<F, const N: usize>(mut rhs: F, section: Event<'_, N>, y0: [f64; N], horizon: f64, config: &IntegratorConfig) -> Result<Return<N>, IntegrateError>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let section = section.terminal();
    let cfg = IntegratorConfig { keep_dense: false, ..*config };
    let tr = {
        let integ = Integrator::new(cfg).event(section);
        let tr = integ.run(&mut rhs, 0.0, horizon, y0)?;
        let Status::Terminated { .. } = tr.status else {
            return Err(IntegrateError::NoReturn { t: horizon });
        };
        let hit = *tr.events.last().expect("terminal hit recorded");
        let f = rhs(hit.t, &hit.y);
        let dt = 1e-7;
        let ev = &integ.events[0];
        let rate = (ev.value(hit.t + dt, &axpy(&hit.y, dt, &[(1.0, &f)])) - ev.value(hit.t - dt, &axpy(&hit.y, -dt, &[(1.0, &f)]))) / (2.0 * dt);
        let scale = f.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
        if rate.abs() < 1e-10 * scale.max(1.0) || rate.abs() < 1e-14 {
            return Err(IntegrateError::TangencyDetected { t: hit.t, rate });
        }
        Return { time: hit.t, state: hit.y, rate }
    };
    Ok(tr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn harmonic(_t: f64, y: &[f64; 2]) -> [f64; 2] {
        [y[1], -y[0]]
    }

    #[test]
    fn exponential_decay() {
        let tr = integrate(|_t, y: &[f64; 1]| [-y[0]], 0.0, 1.0, [1.0], &IntegratorConfig::with_tol(1e-10, 1e-12), vec![]).unwrap();
        assert_relative_eq!(tr.last().1[0], (-1f64).exp(), epsilon = 1e-9);
        assert_eq!(tr.status, Status::Horizon);
    }

    #[test]
    fn harmonic_first_falling_zero() {
        let ev = Event::new("x", |_t, y: &[f64; 2]| y[0]).falling();
        let tr = integrate(harmonic, 0.0, 10.0, [1.0, 0.0], &IntegratorConfig::with_tol(1e-10, 1e-12), vec![ev]).unwrap();
        assert_relative_eq!(tr.events[0].t, PI / 2.0, epsilon = 1e-9);
        // only falling zeros: pi/2 and 5pi/2
        assert_eq!(tr.events.len(), 2);
    }

    #[test]
    fn rising_and_guarded_events() {
        let rising = Event::new("x up", |_t, y: &[f64; 2]| y[0]).rising();
        let guarded = Event::new("x any, v<0", |_t, y: &[f64; 2]| y[0]).guard(|_t, y| y[1] < 0.0);
        let tr = integrate(harmonic, 0.0, 10.0, [1.0, 0.0], &IntegratorConfig::default(), vec![rising, guarded]).unwrap();
        let ups: Vec<f64> = tr.events_of(0).map(|e| e.t).collect();
        let guarded: Vec<f64> = tr.events_of(1).map(|e| e.t).collect();
        assert_eq!(ups.len(), 1);
        assert_relative_eq!(ups[0], 1.5 * PI, epsilon = 1e-8);
        assert_eq!(guarded.len(), 2);
        assert_relative_eq!(guarded[0], 0.5 * PI, epsilon = 1e-8);
    }

    #[test]
    fn terminal_event_truncates() {
        let ev = Event::new("x", |_t, y: &[f64; 2]| y[0]).terminal();
        let tr = integrate(harmonic, 0.0, 10.0, [1.0, 0.0], &IntegratorConfig::default(), vec![ev]).unwrap();
        assert_eq!(tr.status, Status::Terminated { event: 0 });
        assert_relative_eq!(tr.last().0, PI / 2.0, epsilon = 1e-9);
    }

    #[test]
    fn start_on_event_surface_is_not_reported() {
        let ev = Event::new("x", |_t, y: &[f64; 2]| y[0]);
        let tr = integrate(harmonic, 0.0, 1.0, [0.0, 1.0], &IntegratorConfig::default(), vec![ev]).unwrap();
        assert!(tr.events.is_empty());
    }

    #[test]
    fn backward_run_retraces_forward_run() {
        let cfg = IntegratorConfig::with_tol(1e-11, 1e-13);
        let f = |_t: f64, y: &[f64; 2]| [y[1], -y[0] - 0.3 * (y[0] * y[0] - 1.0) * y[1]];
        let fw = integrate(f, 0.0, 7.0, [0.3, 0.2], &cfg, vec![]).unwrap();
        let bw = integrate(f, 7.0, 0.0, fw.last().1, &cfg, vec![]).unwrap();
        let back = bw.last().1;
        assert!((back[0] - 0.3).abs() < 1e-8 && (back[1] - 0.2).abs() < 1e-8);
        assert!(bw.t.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn dense_output_matches_exact_solution() {
        let tr = integrate(harmonic, 0.0, 6.0, [1.0, 0.0], &IntegratorConfig::with_tol(1e-10, 1e-12), vec![]).unwrap();
        for k in 0..60 {
            let t = 0.1 * k as f64 + 0.037;
            let y = tr.eval(t).unwrap();
            assert!((y[0] - t.cos()).abs() < 1e-8, "t = {t}");
        }
        assert!(tr.eval(7.0).is_none());
    }

    #[test]
    fn fixed_step_convergence_order_is_five() {
        // y' = y cos t with y(0) = 1 has y = exp(sin t)
        let err = |h: f64| {
            let cfg = IntegratorConfig { fixed_step: Some(h), ..Default::default() };
            let tr = integrate(|t, y: &[f64; 1]| [y[0] * t.cos()], 0.0, 1.0, [1.0], &cfg, vec![]).unwrap();
            (tr.last().1[0] - 1f64.sin().exp()).abs()
        };
        let (e1, e2) = (err(0.1), err(0.05));
        let order = (e1 / e2).log2();
        assert!((order - 5.0).abs() < 0.5, "order {order}");
    }

    #[test]
    fn step_guard_limits_steps() {
        let cfg = IntegratorConfig::with_tol(1e-6, 1e-8);
        let free = integrate(harmonic, 0.0, 20.0, [1.0, 0.0], &cfg, vec![]).unwrap();
        let guarded = Integrator::new(cfg)
            .step_guard(|a: &[f64; 2], b: &[f64; 2]| (a[0] - b[0]).abs() < 0.05)
            .run(harmonic, 0.0, 20.0, [1.0, 0.0])
            .unwrap();
        assert!(guarded.stats.accepted > free.stats.accepted);
        assert!(guarded.y.windows(2).all(|w| (w[0][0] - w[1][0]).abs() < 0.05));
    }

    #[test]
    fn blowup_is_reported() {
        let r = integrate(|_t, y: &[f64; 1]| [y[0] * y[0]], 0.0, 2.0, [1.0], &IntegratorConfig::default(), vec![]);
        assert!(matches!(r, Err(IntegrateError::StepSizeUnderflow { .. }) | Err(IntegrateError::NonFiniteState { .. })));
    }

    #[test]
    fn harmonic_return_time() {
        let sec = Event::new("x", |_t, y: &[f64; 2]| y[0]).guard(|_t, y| y[1] < 0.0);
        let r = poincare_return(harmonic, sec, [0.0, -1.0], 100.0, &IntegratorConfig::with_tol(1e-11, 1e-13)).unwrap();
        assert_relative_eq!(r.time, 2.0 * PI, epsilon = 1e-9);
        assert_relative_eq!(r.state[1], -1.0, epsilon = 1e-9);
    }

    #[test]
    fn equilibrium_has_no_return() {
        let sec = Event::new("x", |_t, y: &[f64; 2]| y[0]);
        let r = poincare_return(harmonic, sec, [0.0, 0.0], 50.0, &IntegratorConfig::default());
        assert!(matches!(r, Err(IntegrateError::NoReturn { .. })));
    }

    #[test]
    fn csv_and_json_output() {
        let ev = Event::new("x", |_t, y: &[f64; 2]| y[0]);
        let tr = integrate(harmonic, 0.0, 5.0, [1.0, 0.0], &IntegratorConfig::default(), vec![ev]).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf, &["x", "v"], &["run: test".into()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# run: test"));
        assert_eq!(lines.next(), Some("t,x,v,is_event,event_id"));
        assert_eq!(text.lines().filter(|l| l.ends_with(",1,0")).count(), 2);
        let js = tr.to_json(&["x", "v"], &["x".into()]);
        assert_eq!(js["events"].as_array().unwrap().len(), 2);
        assert_eq!(js["state"][0][0].as_f64(), Some(1.0));
    }
}
