//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

mod common;

use std::path::PathBuf;
use std::time::Instant;

use rand::Rng;
use twophase::estimation::closed_form_from_moments;
use twophase::experiment::{run_fig2, run_fig3, ScenarioConfig};
use twophase::fisher::{
    crb_pseudo, fim_exact, fim_noise_asymptotic, fim_noise_leading, fim_signal_asymptotic,
    fim_total_asymptotic, phi_bound_asymptotic,
};
use twophase::gaussian::{symplectic_form, ModeUnitary, SymplecticRotation};
use twophase::homodyne::{output_distribution, output_distribution_propagated};
use twophase::interferometer::mzi_unitary;
use twophase::{LoSetting, PhasePair, Probe};

use common::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn config(name: &str) -> ScenarioConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name);
    ScenarioConfig::load(path).expect("bundled config loads")
}

fn fim_oracle() -> Outcome {
    let mut rng = rng(101);
    let mut worst_fd = 0.0f64;
    let mut worst_sigma = 0.0f64;
    for point in 0..20 {
        let beta = if point % 2 == 0 { 0.0 } else { 0.5 };
        let ns: f64 = rng.random_range(1.0..50.0);
        let nc: f64 = rng.random_range(1.0..50.0);
        let phases = random_phases(&mut rng);
        let probe = Probe::from_photons(ns, nc, beta);
        let exact = fim_exact(phases, &probe, &LoSetting::tuned(0.25)).unwrap();
        let theta = exact.theta;
        let fd = fd_fim(phases, &probe, theta);
        worst_fd = worst_fd.max(rel_frobenius(&exact.total.matrix, &fd));
        let mc = mc_score(phases, &probe, theta, 1_000_000, 5000 + point);
        for i in 0..2 {
            for j in 0..2 {
                let z = (mc.outer[(i, j)] - exact.total.matrix[(i, j)]).abs() / mc.outer_se[(i, j)];
                worst_sigma = worst_sigma.max(z);
            }
        }
    }
    outcome(
        worst_fd < 1e-5 && worst_sigma < 3.0,
        format!("max FD rel err {worst_fd:.2e} (< 1e-5), max MC deviation {worst_sigma:.2} SE (< 3)"),
    )
}

fn asymptotic_pinning() -> Outcome {
    let phases = PhasePair::new(0.7, 1.1);
    let nc = 10.0;
    let (k, k1, k2) = (0.25, 0.3, 0.1);
    let ns_grid = [10.0, 30.0, 100.0, 300.0];
    let mut lines = Vec::new();
    let mut pass = true;
    for &beta in &[0.0, 0.5] {
        let mut errs: Vec<(&str, Vec<f64>)> = ["signal", "noise-leading", "total", "signal-general-k", "noise-general-k"]
            .iter()
            .map(|n| (*n, Vec::new()))
            .collect();
        for &ns in &ns_grid {
            let probe = Probe::from_photons(ns, nc, beta);
            let eq = fim_exact(phases, &probe, &LoSetting::tuned(k)).unwrap();
            let gen = fim_exact(phases, &probe, &LoSetting::Tuned { k1, k2 }).unwrap();
            let pairs = [
                (fim_signal_asymptotic(beta, ns, nc, k, k, phases.phi_d).matrix, eq.signal.matrix),
                (fim_noise_leading(ns, k).matrix, eq.noise.matrix),
                (fim_total_asymptotic(beta, ns, nc, k).matrix, eq.total.matrix),
                (fim_signal_asymptotic(beta, ns, nc, k1, k2, phases.phi_d).matrix, gen.signal.matrix),
                (fim_noise_asymptotic(ns, k1, k2, phases.phi_d).matrix, gen.noise.matrix),
            ];
            for (slot, (asym, exact)) in errs.iter_mut().zip(pairs) {
                slot.1.push(rel_frobenius(&asym, &exact));
            }
        }
        for (name, e) in &errs {
            let monotone = e.windows(2).all(|w| w[1] < w[0]);
            let last = *e.last().unwrap();
            pass &= monotone && last < 0.05;
            lines.push(format!("β={beta} {name} {last:.2e}{}", if monotone { "" } else { " (not monotone)" }));
        }
    }
    outcome(pass, format!("rel err at N_s=300: {}", lines.join(", ")))
}

fn determinant_structure() -> Outcome {
    let mut rng = rng(303);
    let mut worst_vacuum = 0.0f64;
    for _ in 0..50 {
        let phases = PhasePair::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let theta = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let probe = Probe::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), 0.0);
        let (_, sigma) = moments(phases, &probe, theta);
        let lib = output_distribution(phases, &probe, theta.0, theta.1).unwrap();
        worst_vacuum = worst_vacuum
            .max((sigma.determinant() - 0.25).abs())
            .max((lib.det_sigma - 0.25).abs());
    }
    let mut worst_tuned = 0.0f64;
    for &k in &[0.1, 0.25, 0.5] {
        for &phi_d in &[0.4, 1.1, 2.3] {
            let phases = PhasePair::new(0.7, phi_d);
            let probe = Probe::from_photons(100.0, 10.0, 0.0);
            let theta = tuned_theta(phases, &probe, k, k);
            let (_, sigma) = moments(phases, &probe, theta);
            let target = k * k + 1.0 / 16.0;
            worst_tuned = worst_tuned.max((100.0 * sigma.determinant() - target).abs() / target);
        }
    }
    outcome(
        worst_vacuum < 1e-13 && worst_tuned < 0.05,
        format!("r=0: |det−¼| ≤ {worst_vacuum:.1e}; tuned N_s=100: N_s·det within {:.2}% of k²+1/16", 100.0 * worst_tuned),
    )
}

fn pseudo_inverse_bound() -> Outcome {
    let mut worst = 0.0f64;
    for &beta in &[0.0, 0.1, 0.36, 0.5, 0.8, 1.0] {
        for &(ns, nc, k, nu) in &[(7.0, 10.0, 0.25, 2000u64), (40.0, 3.0, 0.1, 50), (1.5, 80.0, 0.6, 10_000)] {
            let f = fim_signal_asymptotic(beta, ns, nc, k, k, 0.9);
            let w = [beta.sqrt(), (1.0 - beta).sqrt()];
            let got = crb_pseudo(&f, w, nu).unwrap();
            let want = (16.0 * k * k + 1.0) / (4.0 * ns * nc * nu as f64);
            worst = worst.max((got - want).abs() / want);
            worst = worst.max((phi_bound_asymptotic(ns, nc, k, nu) - want).abs() / want);
        }
    }
    outcome(worst < 1e-10, format!("max rel err {worst:.1e} (< 1e-10)"))
}

fn fig2_reproduction() -> Outcome {
    let cfg = config("fig2.toml");
    let res = run_fig2(&cfg).unwrap();
    let mut pass = true;
    let mut notes = Vec::new();
    for row in &res.rows {
        let zs = row.stats.bias_s.abs() / row.stats.stderr_s;
        let zd = row.stats.bias_d.abs() / row.stats.stderr_d;
        pass &= zs < 3.0 && zd < 3.0;
        notes.push(format!("ν={} bias {:.1}/{:.1} SE", row.nu, zs, zd));
    }
    let last = res.rows.iter().find(|r| r.nu == 2000).expect("ν = 2000 row");
    let crb_ok = (last.crb_s - 2.259e-3).abs() < 5e-7 && (last.crb_d - 1.890e-3).abs() < 5e-7;
    let ratio_s = last.stats.rmse_s / last.crb_s;
    let ratio_d = last.stats.rmse_d / last.crb_d;
    let in_band = |r: f64| (0.9..=1.3).contains(&r);
    pass &= crb_ok && in_band(ratio_s) && in_band(ratio_d);
    outcome(
        pass,
        format!(
            "{}; ν=2000 crb {:.4e}/{:.4e}, rmse/CRB s {:.3} d {:.3} (in [0.9, 1.3])",
            notes.join(", "),
            last.crb_s,
            last.crb_d,
            ratio_s,
            ratio_d
        ),
    )
}

fn fig3_reproduction() -> Outcome {
    let cfg = config("fig3.toml");
    let res = run_fig3(&cfg).unwrap();
    let fits = res.fits.expect("scaling fit");
    let equal = res
        .rows
        .iter()
        .all(|r| (r.crb_s - r.crb_d).abs() <= 1e-12 * r.crb_s);
    let ok = |s: f64| (-1.1..=-0.9).contains(&s);
    outcome(
        ok(fits.rmse_s.slope) && ok(fits.rmse_d.slope) && equal,
        format!(
            "slope s {:.3} ± {:.3}, d {:.3} ± {:.3}; CRB_s = CRB_d at all N: {equal}",
            fits.rmse_s.slope, fits.rmse_s.slope_stderr, fits.rmse_d.slope, fits.rmse_d.slope_stderr
        ),
    )
}

fn estimator_round_trip() -> Outcome {
    let mut rng = rng(707);
    let probe = Probe::from_photons(7.0, 10.0, 0.0);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let truth = PhasePair::new(rng.random_range(-3.1..3.1), rng.random_range(0.05..3.09));
        let theta = tuned_theta(truth, &probe, 0.25, 0.25);
        let (mu, sigma) = moments(truth, &probe, theta);
        let est = closed_form_from_moments(&mu, &sigma, probe.r, theta.0, truth).unwrap();
        worst = worst
            .max((est.phi_s_hat - truth.phi_s).abs())
            .max((est.phi_d_hat - truth.phi_d).abs());
    }
    outcome(worst < 1e-8, format!("max |error| {worst:.1e} rad (< 1e-8)"))
}

fn property_suite() -> Outcome {
    let mut rng = rng(808);
    let mut worst_sym = 0.0f64;
    let mut worst_unc = f64::INFINITY;
    let mut worst_photon = 0.0f64;
    let mut worst_dual = 0.0f64;
    let mut worst_score = 0.0f64;
    for i in 0..100 {
        let phases = random_phases(&mut rng);
        let theta = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let probe = Probe::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(0.0..2.0));
        let net = ModeUnitary::phase_shifts(&[-theta.0, -theta.1])
            .then_after(&mzi_unitary(phases))
            .unwrap();
        let r = SymplecticRotation::from_unitary(&net);
        let m = r.matrix();
        let omega = symplectic_form(2);
        let orth = (m * m.transpose() - nalgebra::DMatrix::<f64>::identity(4, 4)).amax();
        let sym = (m * &omega * m.transpose() - &omega).amax();
        worst_sym = worst_sym.max(orth).max(sym);

        let out = probe.state().apply_network(&net).unwrap();
        worst_unc = worst_unc.min(out.uncertainty_margin());
        worst_photon = worst_photon.max((out.mean_photon_number() - probe.state().mean_photon_number()).abs());

        let closed = output_distribution(phases, &probe, theta.0, theta.1).unwrap();
        let prop = output_distribution_propagated(phases, &probe, theta.0, theta.1).unwrap();
        let scale = 1.0 + prop.sigma.amax().max(prop.mu.amax());
        worst_dual = worst_dual
            .max((closed.mu - prop.mu).amax() / scale)
            .max((closed.sigma - prop.sigma).amax() / scale);

        if i < 5 {
            let mc = mc_score(phases, &probe, theta, 200_000, 9000 + i);
            for k in 0..2 {
                worst_score = worst_score.max(mc.mean[k].abs() / mc.mean_se[k]);
            }
        }
    }
    let pass = worst_sym < 1e-12 && worst_unc >= -1e-10 && worst_photon < 1e-10 && worst_dual < 1e-10 && worst_score < 4.0;
    outcome(
        pass,
        format!(
            "symplectic {worst_sym:.1e}, min uncertainty margin {worst_unc:.2e}, photon drift {worst_photon:.1e}, \
             dual path {worst_dual:.1e}, score mean {worst_score:.2} SE"
        ),
    )
}

fn main() {
    // The harness passes test-runner flags; honour a name filter only.
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("AC1 FIM oracle equivalence", fim_oracle),
        ("AC2 asymptotic formula pinning", asymptotic_pinning),
        ("AC3 determinant structure", determinant_structure),
        ("AC4 pseudo-inverse bound", pseudo_inverse_bound),
        ("AC5 fig2 reproduction", fig2_reproduction),
        ("AC6 fig3 reproduction", fig3_reproduction),
        ("AC7 estimator round-trip", estimator_round_trip),
        ("AC8 property suite", property_suite),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        if let Some(f) = &filter {
            if !name.contains(f.as_str()) {
                continue;
            }
        }
        let start = Instant::now();
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("{verdict} {name}: {} [{:.1}s]", o.detail, start.elapsed().as_secs_f64());
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
