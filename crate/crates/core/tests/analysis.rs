use cvdistill::analysis::bounds::{find_lambda_opt, find_tl};
use cvdistill::analysis::sweep::{figure, Figure};
use cvdistill::analysis::{Cell, EvalOptions};
use cvdistill::detector::{DetectorModel, Scenario};

fn det(s: &str) -> Scenario {
    Scenario::Distilled(s.parse::<DetectorModel>().unwrap())
}

#[test]
fn onoff_bound_tends_to_one_half_at_weak_squeezing() {
    let r = find_tl(1e-4, 1.0, &det("onoff"), &EvalOptions::default()).unwrap();
    assert!((r.t_l - 0.5).abs() < 1e-4, "{}", r.t_l);
}

#[test]
fn pnr_bound_tends_to_one_over_l_plus_one_at_weak_squeezing() {
    let r = find_tl(1e-4, 0.5, &det("pnr:3"), &EvalOptions::default()).unwrap();
    assert!((r.t_l - 0.25).abs() < 1e-3, "{}", r.t_l);
}

#[test]
fn reported_bounds_have_small_residual() {
    for d in ["onoff", "pnr:1", "pnr:2"] {
        for l in [0.1, 0.4, 0.8] {
            for e in [0.3, 1.0] {
                let r = find_tl(l, e, &det(d), &EvalOptions::default()).unwrap();
                assert!(r.residual < 1e-6, "{d} λ={l} η={e}: {}", r.residual);
                assert!(r.single_crossing);
            }
        }
    }
}

#[test]
fn peak_entanglement_grows_with_subtraction_transmittance() {
    let o = EvalOptions::default();
    let a = find_lambda_opt(1.0, 0.9, &det("onoff"), &o).unwrap();
    let b = find_lambda_opt(1.0, 0.99, &det("onoff"), &o).unwrap();
    assert!(b.en_max > a.en_max + 1.0, "{} vs {}", a.en_max, b.en_max);
    assert!(a.lambda_opt < 1.0 && b.lambda_opt < 1.0);
}

#[test]
fn photon_resolving_detectors_beat_onoff_at_weak_squeezing() {
    let tables = figure(Figure::Fig5, &EvalOptions::default()).unwrap();
    let t = &tables[0];
    let (d, l, en) = (
        t.column("detector").unwrap(),
        t.column("lambda").unwrap(),
        t.column("en_after").unwrap(),
    );
    let value = |name: &str, lambda: f64| {
        t.rows
            .iter()
            .find(|r| {
                matches!(&r[d], Cell::Text(s) if s == name)
                    && matches!(r[l], Cell::Num(x) if (x - lambda).abs() < 1e-12)
            })
            .and_then(|r| match r[en] {
                Cell::Num(x) => Some(x),
                _ => None,
            })
            .unwrap()
    };
    let lambda = t.numbers("lambda")[2].unwrap();
    for p in ["pnr:2", "pnr:3", "pnr:4"] {
        assert!(
            value(p, lambda) > value("onoff", lambda),
            "{p} at λ={lambda}"
        );
    }
}

#[test]
fn higher_photon_numbers_peak_inside_the_squeezing_window() {
    let tables = figure(Figure::Fig5, &EvalOptions::default()).unwrap();
    let t = tables
        .iter()
        .find(|t| t.name == "probability_vs_r")
        .unwrap();
    let (d, r, p) = (
        t.column("detector").unwrap(),
        t.column("r").unwrap(),
        t.column("p_succ").unwrap(),
    );
    for name in ["pnr:3", "pnr:4"] {
        let curve: Vec<(f64, f64)> = t
            .rows
            .iter()
            .filter(|row| matches!(&row[d], Cell::Text(s) if s == name))
            .filter_map(|row| match (&row[r], &row[p]) {
                (Cell::Num(a), Cell::Num(b)) if (3.0..=5.0).contains(a) => Some((*a, *b)),
                _ => None,
            })
            .collect();
        let best = curve
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
            .unwrap()
            .0;
        assert!(
            best > 0 && best + 1 < curve.len(),
            "{name}: maximum at the window edge"
        );
    }
}
