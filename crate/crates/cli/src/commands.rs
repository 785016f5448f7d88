use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use fhn_cusp::cycles::{self, CycleError, WEBER_L};
use fhn_cusp::geometry::{self, GeometryError, SingularityReport};
use fhn_cusp::integrate::{integrate, Event, IntegratorConfig};
use fhn_cusp::numerics::brent;
use fhn_cusp::sao::{self, PassageSpec, SaoError};
use fhn_cusp::vfields::{rhs_full_array, to_sym, Params, StateFull};

use crate::config::{check_grid, parse_grid, Common, FileConfig, Format, ParamFlags, RunConfig};
use crate::CliError;

fn numerical(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

fn from_sao(e: SaoError) -> CliError {
    match e {
        SaoError::Integrate(_) | SaoError::EscapeBeforeEntry { .. } => numerical(e),
        _ => CliError::Config(e.to_string()),
    }
}

fn from_cycles(e: CycleError) -> CliError {
    match e {
        CycleError::IntegerResonance(_) | CycleError::Precondition(_) => CliError::Config(e.to_string()),
        _ => numerical(e),
    }
}

fn from_geometry(e: GeometryError) -> CliError {
    match e {
        GeometryError::AsymptoteParameter { .. } | GeometryError::BadRange(..) => CliError::Config(e.to_string()),
        _ => numerical(e),
    }
}

fn grid(name: &str, flag: Option<&str>, file: Option<&Vec<f64>>, default: &str) -> Result<Vec<f64>, CliError> {
    let g = match (flag, file) {
        (Some(s), _) => parse_grid(s).map_err(|e| CliError::Config(format!("{name}: {e}")))?,
        (None, Some(v)) => v.clone(),
        (None, None) => parse_grid(default).expect("default grid"),
    };
    check_grid(name, &g)?;
    Ok(g)
}

fn write_file(cfg: &RunConfig, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(&cfg.out)?;
    let path = cfg.out.join(name);
    let mut w = BufWriter::new(File::create(&path)?);
    body(&mut w)?;
    w.flush()?;
    println!("wrote {}", path.display());
    Ok(path)
}

fn write_json(cfg: &RunConfig, name: &str, value: serde_json::Value) -> Result<PathBuf, CliError> {
    write_file(cfg, name, |w| {
        serde_json::to_writer_pretty(&mut *w, &json!({ "provenance": cfg.header(), "config": cfg, "data": value })).map_err(std::io::Error::from)?;
        writeln!(w)
    })
}

fn comment_lines<W: Write>(w: &mut W, lines: &[String]) -> std::io::Result<()> {
    for l in lines {
        writeln!(w, "# {l}")?;
    }
    Ok(())
}

pub fn simulate(common: &Common, params: &ParamFlags, file: &FileConfig, horizon: Option<f64>, init: Option<&str>) -> Result<(), CliError> {
    let mut cfg = RunConfig::resolve("simulate", common, params, file, Some(1.27))?;
    let horizon = horizon.or(file.horizon).unwrap_or(400.0);
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(CliError::Config(format!("horizon = {horizon} must be positive")));
    }
    let p = cfg.params();
    let s0 = match init {
        Some(s) => {
            let v = parse_grid(s).map_err(CliError::Config)?;
            let [v1, v2, w1, w2] = v.as_slice() else {
                return Err(CliError::Config("init needs four values v1,v2,w1,w2".into()));
            };
            StateFull { v1: *v1, v2: *v2, w1: *w1, w2: *w2 }
        }
        // close to the cusp so the first passage starts early
        None => sao::seed_on_attracting_sheet(&PassageSpec { y0: -0.05, ..PassageSpec::new(p) }).map_err(from_sao)?,
    };
    cfg.note("horizon", horizon);
    cfg.note("init", s0.to_array());
    let ic = IntegratorConfig::with_tol(cfg.rtol, cfg.atol);
    let zero = Event::new("u=0", |_t, s: &[f64; 4]| 0.5 * (s[0] - s[1]));
    let tr = integrate(|_t, s: &[f64; 4]| rhs_full_array(s, &p), 0.0, horizon, s0.to_array(), &ic, vec![zero]).map_err(numerical)?;

    let sym: Vec<[f64; 4]> = tr.y.iter().map(|s| to_sym(&StateFull::from_array(*s), &p).to_array()).collect();
    let header = cfg.header();
    match cfg.format {
        Format::Csv => {
            write_file(&cfg, "trajectory.csv", |w| tr.write_csv(w, &["v1", "v2", "w1", "w2"], &header))?;
            write_file(&cfg, "projection.csv", |w| {
                comment_lines(w, &header)?;
                writeln!(w, "t,u,y,z")?;
                for (t, s) in tr.t.iter().zip(&sym) {
                    writeln!(w, "{t:.12e},{:.12e},{:.12e},{:.12e}", s[1], s[2], s[3])?;
                }
                Ok(())
            })?;
        }
        Format::Json => {
            let proj: Vec<[f64; 4]> = tr.t.iter().zip(&sym).map(|(t, s)| [*t, s[1], s[2], s[3]]).collect();
            write_json(&cfg, "trajectory.json", json!({
                "trajectory": tr.to_json(&["v1", "v2", "w1", "w2"], &["u=0".to_string()]),
                "projection": { "columns": ["t", "u", "y", "z"], "rows": proj },
            }))?;
        }
    }
    let (t_end, last) = tr.last();
    let c = p.c;
    let wq = -c * c * c + 3.0 * c;
    let dist = ((last[0] - c).powi(2) + (last[1] - c).powi(2) + (last[2] - wq).powi(2) + (last[3] - wq).powi(2)).sqrt();
    let speed = rhs_full_array(&last, &p).iter().map(|x| x * x).sum::<f64>().sqrt();
    println!("t = {t_end}: state {last:?}");
    println!("distance to equilibrium q = {dist:.3e}, |rhs| = {speed:.3e}, zero crossings of u = {}", tr.events.len());
    Ok(())
}

fn passage_spec(cfg: &RunConfig, file: &FileConfig, delta: Option<f64>, z_guard: Option<f64>) -> Result<PassageSpec, CliError> {
    let mut spec = PassageSpec::new(cfg.params());
    spec.delta = delta.or(file.delta).unwrap_or(spec.delta);
    spec.z_guard = z_guard.or(file.z_guard).unwrap_or(spec.z_guard);
    spec.rtol = cfg.rtol;
    spec.atol = cfg.atol;
    spec.horizon = file.horizon;
    spec.validate().map_err(from_sao)?;
    Ok(spec)
}

#[allow(clippy::too_many_arguments)]
pub fn sao(common: &Common, params: &ParamFlags, file: &FileConfig, c_grid: Option<&str>, c2_grid: Option<&str>, delta: Option<f64>, z_guard: Option<f64>) -> Result<(), CliError> {
    let mut cfg = RunConfig::resolve("sao", common, params, file, None)?;
    let by_offset = c2_grid.is_some() || (c_grid.is_none() && file.c2_grid.is_some());
    let spec = passage_spec(&cfg, file, delta, z_guard)?;
    let band = sao::band_boundary(&spec.params);
    let rows = if by_offset {
        let g = grid("c2_grid", c2_grid, file.c2_grid.as_ref(), "-0.25:0.1:0.05")?;
        cfg.note("c2_grid", &g);
        sao::sweep_offsets(&spec, &g, cfg.eps)
    } else {
        let g = grid("c_grid", c_grid, file.c_grid.as_ref(), "1.17:1.29:0.005")?;
        cfg.note("c_grid", &g);
        sao::sweep_counts(&spec, &g, cfg.eps)
    };
    cfg.note("delta", spec.delta);
    cfg.note("z_guard", spec.z_guard);
    let mut header = cfg.header();
    header.push(format!("saddle-node band: c > v_s - sqrt(eps)/(3 v_s) = {band:.6}"));
    match cfg.format {
        Format::Csv => write_file(&cfg, "sao_sweep.csv", |w| sao::write_sweep_csv(&rows, w, &header))?,
        Format::Json => write_json(&cfg, "sao_sweep.json", json!({ "band_boundary": band, "rows": rows }))?,
    };
    println!("band boundary c = {band:.6}");
    for r in &rows {
        let key = r.c2.map_or(format!("c = {:.4}", r.c), |c2| format!("c2 = {c2:+.4}"));
        let n = |v: Option<usize>| v.map_or("-".to_string(), |x| x.to_string());
        println!("{key}  predicted {:>3}  rotations {:>3}  zeros {:>3}  {}", n(r.predicted), n(r.rotations), n(r.zeros), r.verdict);
    }
    Ok(())
}

pub fn scaling(common: &Common, params: &ParamFlags, file: &FileConfig, eps_grid: Option<&str>, delta: Option<f64>) -> Result<(), CliError> {
    let mut cfg = RunConfig::resolve("scaling", common, params, file, Some(1.22))?;
    let g = grid("eps_grid", eps_grid, file.eps_grid.as_ref(), "1e-4,3e-4,1e-3,3e-3,1e-2")?;
    if g[0] <= 0.0 {
        return Err(CliError::Config("eps_grid must be positive".into()));
    }
    let spec = passage_spec(&cfg, file, delta, None)?;
    cfg.note("eps_grid", &g);
    cfg.note("delta", spec.delta);
    let fit = sao::amplitude_scaling(&spec, &g);
    let half_mu = 0.5 * spec.params.mu();
    let mut header = cfg.header();
    header.push(format!("u_exponent = {:.6}, z_exponent = {:.6}, predicted mu/2 = {half_mu:.6}, excluded eps = {:?}", fit.u_slope, fit.z_slope, fit.excluded));
    match cfg.format {
        Format::Csv => write_file(&cfg, "scaling.csv", |w| sao::write_sweep_csv(&fit.rows, w, &header))?,
        Format::Json => write_json(&cfg, "scaling.json", json!({ "fit": fit, "predicted_u_exponent": half_mu }))?,
    };
    println!("u exponent {:.4} (mu/2 = {half_mu:.4}), z exponent {:.4}, gap {:.4}", fit.u_slope, fit.z_slope, fit.z_slope - fit.u_slope);
    if !fit.excluded.is_empty() {
        println!("excluded from fit: {:?}", fit.excluded);
    }
    if !fit.u_slope.is_finite() {
        return Err(numerical("fewer than two usable grid points"));
    }
    Ok(())
}

fn singularity_rows(reports: &[SingularityReport]) -> Vec<String> {
    reports
        .iter()
        .map(|r| {
            let [a, b] = r.eigenvalues;
            format!(
                "{:?},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{},{},{:.3e},{:.3e}",
                r.label, r.v[0], r.v[1], r.x, r.u, r.y, r.z, a.re, a.im, b.re, b.im, r.kind.tag(), r.region.tag(), r.det_dh, r.residual
            )
        })
        .collect()
}

pub fn geometry(common: &Common, params: &ParamFlags, file: &FileConfig, c_grid: Option<&str>, samples: usize) -> Result<(), CliError> {
    let mut cfg = RunConfig::resolve("geometry", common, params, file, Some(1.24))?;
    let p = cfg.params();
    let g = grid("c_grid", c_grid, file.c_grid.as_ref(), "0.5:1.6:0.005")?;
    if g.len() < 2 || g[0] <= 0.0 {
        return Err(CliError::Config("c_grid needs at least two positive values".into()));
    }
    cfg.note("c_range", [g[0], g[g.len() - 1]]);
    cfg.note("c_points", g.len());
    cfg.note("samples", samples);

    let mut reports = vec![geometry::regular_singularity(&p)];
    reports.extend(geometry::folded_singularities(&p).map_err(from_geometry)?);
    let diagram = geometry::bifurcation_scan(&p, (g[0], g[g.len() - 1]), g.len()).map_err(from_geometry)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let (v1, v2) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let m = geometry::critical_graph(v1, v2, &p);
        let lhs = m.trace * m.trace - 4.0 * m.det;
        let rhs = 9.0 * (v1 * v1 - v2 * v2).powi(2) + 4.0 * p.g * p.g;
        worst = worst.max((lhs - rhs).abs() / rhs);
    }
    let mut header = cfg.header();
    header.push(format!("discriminant identity tr^2 - 4 det = 9 (v1^2 - v2^2)^2 + 4 g^2: max relative deviation {worst:.3e} over {samples} seeded samples"));

    match cfg.format {
        Format::Csv => {
            write_file(&cfg, "singularities.csv", |w| {
                comment_lines(w, &header)?;
                writeln!(w, "label,v1,v2,x,u,y,z,eig1_re,eig1_im,eig2_re,eig2_im,kind,region,det_dh,residual")?;
                for line in singularity_rows(&reports) {
                    writeln!(w, "{line}")?;
                }
                Ok(())
            })?;
            write_file(&cfg, "bifurcation.csv", |w| diagram.write_csv(w, &header))?;
        }
        Format::Json => {
            write_json(&cfg, "geometry.json", json!({ "singularities": reports, "bifurcation": diagram, "discriminant_max_relative_deviation": worst }))?;
        }
    }
    for r in &reports {
        println!("{:?}: v = ({:.6}, {:.6}), {} on {}", r.label, r.v[0], r.v[1], r.kind.tag(), r.region.tag());
    }
    for e in &diagram.events {
        println!("{:?} at c = {:.9}", e.kind, e.c);
    }
    println!("discriminant identity: max relative deviation {worst:.3e}");
    Ok(())
}

pub fn cycles(common: &Common, params: &ParamFlags, file: &FileConfig, y2_grid: Option<&str>, c2_grid: Option<&str>) -> Result<(), CliError> {
    let mut cfg = RunConfig::resolve("cycles", common, params, file, None)?;
    let p = Params { c2: None, ..cfg.params() };
    let ys = grid("y2_grid", y2_grid, file.y2_grid.as_ref(), "-3:-0.005:0.005")?;
    let cs = grid("c2_grid", c2_grid, file.c2_grid.as_ref(), "-1:-0.005:0.005")?;
    if ys[ys.len() - 1] >= 0.0 || cs[cs.len() - 1] >= 0.0 {
        return Err(CliError::Config("y2_grid and c2_grid must be negative".into()));
    }
    cfg.note("y2_range", [ys[0], ys[ys.len() - 1]]);
    cfg.note("y2_points", ys.len());
    cfg.note("c2_range", [cs[0], cs[cs.len() - 1]]);
    cfg.note("c2_points", cs.len());

    let curve = cycles::averaged_curve(&p, &ys);
    let exits = cycles::exit_point_curve(&p, &cs);
    let level = -2.0 * p.g / (3.0 * p.v_s());
    let crossing = exits.points.windows(2).find(|w| (w[0].y_exit - level) * (w[1].y_exit - level) <= 0.0).map(|w| {
        brent(|c2| cycles::exit_point(c2, &p).map_or(f64::NAN, |e| e.y_exit - level), w[0].c2, w[1].c2, 1e-12, 100)
    });
    let crossing = crossing.transpose().map_err(numerical)?;
    let near_zero = curve.secant_slope(-0.05, -0.005);

    let mut header = cfg.header();
    header.push(format!("melnikov slope {:.9}, secant slope on [-0.05, -0.005] {near_zero:?}", curve.melnikov_slope));
    header.push(format!("exit point crosses y = {level:.6} at c2 = {crossing:?}"));
    match cfg.format {
        Format::Csv => {
            write_file(&cfg, "averaged_curve.csv", |w| curve.write_csv(w, &header))?;
            write_file(&cfg, "exit_points.csv", |w| exits.write_csv(w, &header))?;
        }
        Format::Json => {
            write_json(&cfg, "cycles.json", json!({ "averaged_curve": curve, "exit_points": exits, "crossing_c2": crossing }))?;
        }
    }
    println!("averaged curve: {} points, {} failures, strictly decreasing: {}", curve.points.len(), curve.failures.len(), curve.strictly_decreasing);
    if let Some(s) = near_zero {
        println!("secant slope near 0: {s:.6} (melnikov {:.6})", curve.melnikov_slope);
    }
    match crossing {
        Some(c2) => println!("exit point crosses y = {level:.6} at c2 = {c2:.6}"),
        None => println!("exit point does not cross y = {level:.6} on the grid"),
    }
    if !curve.failures.is_empty() || !exits.failures.is_empty() {
        return Err(numerical(format!("{} cycle and {} exit-point failures", curve.failures.len(), exits.failures.len())));
    }
    Ok(())
}

pub fn weber(common: &Common, file: &FileConfig, mu: &[String], l: Option<f64>) -> Result<(), CliError> {
    let mut cfg = RunConfig::resolve("weber", common, &ParamFlags::default(), file, None)?;
    let mut mus = Vec::new();
    for m in mu {
        mus.extend(parse_grid(m).map_err(CliError::Config)?);
    }
    if mus.is_empty() {
        mus = file.mu.clone().unwrap_or_default();
    }
    if mus.is_empty() {
        return Err(CliError::Config("no mu values given".into()));
    }
    let l = l.unwrap_or(WEBER_L);
    cfg.note("mu", &mus);
    cfg.note("L", l);
    let counts: Vec<usize> = mus.iter().map(|&m| cycles::weber_zero_count(m, l)).collect::<Result<_, _>>().map_err(from_cycles)?;
    match cfg.format {
        Format::Csv => write_file(&cfg, "weber.csv", |w| {
            comment_lines(w, &cfg.header())?;
            writeln!(w, "mu,L,zeros")?;
            for (m, n) in mus.iter().zip(&counts) {
                writeln!(w, "{m},{l},{n}")?;
            }
            Ok(())
        })?,
        Format::Json => write_json(&cfg, "weber.json", json!(mus.iter().zip(&counts).map(|(m, n)| json!({ "mu": m, "zeros": n })).collect::<Vec<_>>()))?,
    };
    for (m, n) in mus.iter().zip(&counts) {
        println!("mu = {m}: {n} zeros");
    }
    Ok(())
}
