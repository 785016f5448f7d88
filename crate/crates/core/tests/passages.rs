use fhn_cusp::sao::*;
use fhn_cusp::vfields::Params;

fn spec(c: f64, eps: f64) -> PassageSpec {
    PassageSpec::new(Params::new(-1.0, c, eps))
}

#[test]
fn rotation_count_is_floor_of_eigenvalue_ratio() {
    for (c, n) in [(1.22, 2), (1.18, 1)] {
        let r = run_passage(&spec(c, 0.01)).unwrap().report;
        assert_eq!(r.predicted, Some(n));
        assert_eq!(r.rotations, Some(n), "c = {c}");
    }
}

#[test]
fn rotations_are_zeros_minus_one() {
    let grid: Vec<f64> = (0..=9).map(|k| 1.17 + 0.01 * k as f64).collect();
    for row in sweep_counts(&spec(1.2, 0.01), &grid, 0.01) {
        assert_eq!(row.rotations.unwrap() + 1, row.zeros.unwrap(), "c = {}", row.c);
    }
}

#[test]
fn sweep_matches_prediction_below_band() {
    let grid: Vec<f64> = (0..=8).map(|k| 1.17 + 0.01 * k as f64).collect();
    let rows = sweep_counts(&spec(1.2, 0.01), &grid, 0.01);
    assert_eq!(rows.iter().map(|r| r.c).collect::<Vec<_>>(), grid);
    for r in &rows {
        assert_eq!(r.verdict, "agree", "c = {}", r.c);
        assert_eq!(r.rotations, r.predicted);
    }
}

#[test]
fn last_amplitude_increases_toward_v_s() {
    let grid: Vec<f64> = (0..=8).map(|k| 1.17 + 0.01 * k as f64).collect();
    let rows = sweep_counts(&spec(1.2, 0.01), &grid, 0.01);
    let amp: Vec<f64> = rows.iter().map(|r| r.last_amplitude.unwrap()).collect();
    assert!(amp.windows(2).all(|w| w[1] > w[0]), "last amplitudes {amp:?}");
}

#[test]
fn counts_survive_tighter_tolerance() {
    for c in [1.18, 1.22, 1.24] {
        let a = run_passage(&spec(c, 0.01)).unwrap().report;
        let mut s = spec(c, 0.01);
        s.rtol /= 10.0;
        let b = run_passage(&s).unwrap().report;
        assert_eq!((a.zeros, a.rotations), (b.zeros, b.rotations), "c = {c}");
    }
}

#[test]
fn original_coordinates_agree() {
    for c in [1.18, 1.24] {
        let a = run_passage(&spec(c, 0.01)).unwrap().report;
        let mut s = spec(c, 0.01);
        s.coordinates = Coordinates::Original;
        let b = run_passage(&s).unwrap().report;
        assert_eq!((a.zeros, a.rotations), (b.zeros, b.rotations), "c = {c}");
    }
}

#[test]
fn mirrored_seed_gives_mirrored_counts() {
    let mut s = spec(1.24, 0.01);
    let a = run_passage(&s).unwrap().report;
    s.u0 = -s.u0;
    let b = run_passage(&s).unwrap().report;
    assert_eq!((a.zeros, a.rotations), (b.zeros, b.rotations));
    let (ea, eb) = (a.end_state, b.end_state);
    assert!((ea.u + eb.u).abs() < 1e-8 && (ea.z + eb.z).abs() < 1e-8);
}

const EPS_GRID: [f64; 5] = [1e-4, 3e-4, 1e-3, 3e-3, 1e-2];

#[test]
fn exit_amplitudes_scale_with_eigenvalue_ratio() {
    let base = spec(1.22, 0.01);
    let fit = amplitude_scaling(&base, &EPS_GRID);
    let half_mu = 0.5 * base.params.mu();
    assert!(fit.excluded.is_empty());
    assert!((fit.u_slope - half_mu).abs() < 0.1 * half_mu, "u slope {}", fit.u_slope);
    assert!((fit.z_slope - fit.u_slope - 0.5).abs() < 0.1, "gap {}", fit.z_slope - fit.u_slope);
}

#[test]
fn doubling_delta_keeps_slopes() {
    let base = spec(1.22, 0.01);
    let a = amplitude_scaling(&base, &EPS_GRID);
    let b = amplitude_scaling(&PassageSpec { delta: 2.0 * base.delta, ..base }, &EPS_GRID);
    assert!((a.u_slope - b.u_slope).abs() < 0.05);
    assert!((a.z_slope - b.z_slope).abs() < 0.05);
}

#[test]
fn saddle_node_spirals_out_past_q() {
    let r = saddle_node_passage(&spec(1.2, 0.01), -0.1).unwrap();
    assert_eq!(r.report.end, PassageEnd::Escaped);
    assert!(r.outward_spiral, "lift after closest approach {} pi", r.lift_after_closest / std::f64::consts::PI);
}

#[test]
fn saddle_node_zero_count_grows_as_eps_shrinks() {
    let a = saddle_node_passage(&spec(1.2, 0.01), -0.1).unwrap();
    let b = saddle_node_passage(&spec(1.2, 0.0025), -0.1).unwrap();
    assert!(b.report.zeros > a.report.zeros, "{} vs {}", b.report.zeros, a.report.zeros);
}

#[test]
fn positive_offset_settles_without_saos() {
    let r = saddle_node_passage(&spec(1.2, 0.01), 0.1).unwrap();
    assert_eq!(r.o1_count, 0);
    assert!(r.converged_to_q, "final distance {}", r.final_distance);
}

#[test]
fn deep_band_reports_underflow() {
    let r = run_passage(&spec(1.29, 0.01)).unwrap().report;
    assert!(r.underflow);
    assert_eq!(r.verdict, Verdict::Underflow);
}
