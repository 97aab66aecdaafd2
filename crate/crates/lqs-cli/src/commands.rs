use crate::output::{emit_csv, mat, num, write_text, RunReport};
use crate::{fixtures, Cli, Command, FaultArg, ObserverType, Outcome, SystemArg};
use anyhow::{anyhow, bail, Context, Result};
use lqs::corpus::sample_points;
use lqs::invert::{
    build_classical_observer, build_quantum_inverse_observer, classify_system, co_part, forced_zero_output, reconstruction_run,
    signal, simulate_mean, verify_inverse_identity, Waveform,
};
use lqs::kalman::{check_assumption1, kalman_decompose};
use lqs::matcore::{c, C64};
use lqs::model::{check_physical_realizability, StateSpace};
use lqs::network::{self, DiagonalPlant, Network, SweepPoint, SWEEP_HEADER};
use lqs::selftest::{run_selftest, Fault};
use lqs::spectra::{check_imaginary_axis_pairing, spectrum_report, verify_correspondences};
use lqs::sysfile::{parse_str, quadrature_of, System};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use std::path::Path;

fn load(arg: &SystemArg) -> Result<(System, StateSpace)> {
    if !(arg.rank_tol > 0.0 && arg.rank_tol < 1.0) {
        bail!("--rank-tol must lie in (0, 1), got {}", arg.rank_tol);
    }
    let path = Path::new(&arg.system);
    let text = if path.exists() {
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?
    } else {
        fixtures::lookup(&arg.system)
            .ok_or_else(|| anyhow!("no such file or fixture: {}", arg.system))?
            .to_string()
    };
    let sys = parse_str(&text).with_context(|| format!("in {}", arg.system))?;
    let ss = quadrature_of(&sys)?;
    Ok((sys, ss))
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        bail!("--{name} must be positive and finite, got {v}");
    }
    Ok(())
}

fn samples(seed: u64, k: usize) -> Vec<C64> {
    sample_points(&mut ChaCha8Rng::seed_from_u64(seed), k)
}

fn check_signal(input: &[Waveform], ss: &StateSpace) -> Result<()> {
    if input.len() != 2 * ss.m {
        bail!("--input needs {} waveforms (one per quadrature channel), got {}", 2 * ss.m, input.len());
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let out = cli.output.as_deref();
    match &cli.command {
        Command::CheckPr { sys, tol, expect_pr } => {
            positive("tol", *tol)?;
            let (_, ss) = load(sys)?;
            let pr = check_physical_realizability(&ss, *tol);
            RunReport::new("check-pr", Some(&sys.system), cli.seed)
                .tol("pr", *tol)
                .result(json!({ "n": ss.n, "m": ss.m, "pr": pr }))?
                .emit(out, cli.timing)?;
            Ok(if *expect_pr && !pr.passed { Outcome::Negative } else { Outcome::Done })
        }
        Command::Spectrum { sys, tol } => {
            positive("tol", *tol)?;
            let (_, ss) = load(sys)?;
            let rep = spectrum_report(&ss, sys.rank_tol)?;
            let corr = verify_correspondences(&ss, *tol)?;
            let pairing = check_imaginary_axis_pairing(&ss, *tol)?;
            RunReport::new("spectrum", Some(&sys.system), cli.seed)
                .tol("correspondence", *tol)
                .tol("rank", sys.rank_tol)
                .result(json!({ "spectrum": rep, "correspondences": corr, "imaginary_axis_pairing": pairing }))?
                .emit(out, cli.timing)?;
            Ok(Outcome::Done)
        }
        Command::Kalman { sys, tol } => {
            let (_, ss) = load(sys)?;
            let kf = kalman_decompose(&ss, sys.rank_tol)?;
            let blocks: serde_json::Map<String, serde_json::Value> =
                kf.blocks().into_iter().map(|(k, v)| (k.to_string(), json!(mat(&v)))).collect();
            let tf = kf.transfer_residual(&samples(cli.seed, 10));
            RunReport::new("kalman", Some(&sys.system), cli.seed)
                .tol("rank", sys.rank_tol)
                .tol("eigenvalue_real_part", *tol)
                .result(json!({
                    "stages": kf.stages,
                    "mode_pairs": { "co": kf.n1, "cbar_obar": kf.n2, "h": kf.n3 },
                    "minimal": kf.is_minimal(),
                    "ambiguous_rank": kf.ambiguous,
                    "co_symplectic": kf.co_symplectic,
                    "transform_condition": kf.transform_condition,
                    "pattern_residual": kf.pattern_residual,
                    "transfer_residual": tf,
                    "eigenvalues": {
                        "co": kf.co_eigenvalues(),
                        "cbar_obar": kf.cbar_obar_eigenvalues(),
                        "h": kf.h_eigenvalues(),
                    },
                    "assumption1": check_assumption1(&kf, *tol),
                    "transform": mat(&kf.transform),
                    "a": mat(&kf.a),
                    "b": mat(&kf.b),
                    "c": mat(&kf.c),
                    "blocks": blocks,
                }))?
                .emit(out, cli.timing)?;
            Ok(Outcome::Done)
        }
        Command::Invertibility { sys, tol } => {
            let (_, ss) = load(sys)?;
            let v = classify_system(&ss, sys.rank_tol, *tol)?;
            RunReport::new("invertibility", Some(&sys.system), cli.seed)
                .tol("rank", sys.rank_tol)
                .tol("eigenvalue_real_part", *tol)
                .result(v)?
                .emit(out, cli.timing)?;
            Ok(Outcome::Done)
        }
        Command::Observer { sys, kind, input, t_end, dt, csv } => {
            let (_, ss) = load(sys)?;
            let co = co_part(&ss, sys.rank_tol)?;
            let mut extra = json!({});
            let obs = match kind {
                ObserverType::Classical => build_classical_observer(&co)?,
                ObserverType::Quantum => {
                    let q = build_quantum_inverse_observer(&co)?;
                    extra = json!({
                        "hamiltonian_residual": q.hamiltonian_residual,
                        "reflection_residual": q.reflection_residual,
                        "pr_residual": q.pr_residual,
                    });
                    q.observer
                }
            };
            let id = verify_inverse_identity(&ss, &obs, &samples(cli.seed, 10))?;
            let mut report = RunReport::new("observer", Some(&sys.system), cli.seed).tol("rank", sys.rank_tol);
            let mut recon = serde_json::Value::Null;
            if !input.is_empty() || csv.is_some() {
                check_signal(input, &ss)?;
                // random unit plant state, observer started at zero
                let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
                let mut x0: Vec<f64> = (0..2 * ss.n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let norm = x0.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                x0.iter_mut().for_each(|v| *v /= norm);
                let xi0 = vec![0.0; obs.a.nrows()];
                let r = reconstruction_run(&ss, &obs, signal(input), &x0, &xi0, *t_end, *dt)?;
                if let Some(p) = csv {
                    let f = std::fs::File::create(p).with_context(|| format!("cannot write {}", p.display()))?;
                    let rows = r.csv_rows().into_iter().map(|r| r.into_iter().map(num).collect());
                    crate::output::write_csv(f, &r.csv_header(), rows)?;
                    report.files.push(p.display().to_string());
                }
                recon = json!({
                    "x0": x0,
                    "t_end": t_end,
                    "dt": dt,
                    "final_error": r.err_norm.last(),
                    "fitted_rate": r.fitted_rate,
                    "unstable_observer": r.unstable_observer,
                    "step_warning": r.plant.step_warning,
                });
            }
            report
                .result(json!({
                    "kind": match kind { ObserverType::Classical => "classical", ObserverType::Quantum => "quantum_inverse" },
                    "a": mat(&obs.a),
                    "b": mat(&obs.b),
                    "c": mat(&obs.c),
                    "d": mat(&obs.d),
                    "stability": obs.stability,
                    "hurwitz": obs.is_hurwitz(),
                    "inverse_identity": id,
                    "structure": extra,
                    "reconstruction": recon,
                }))?
                .emit(out, cli.timing)?;
            Ok(Outcome::Done)
        }
        Command::Simulate { sys, input, x0, t_end, dt, forced_zero_output: forced } => {
            let (_, ss) = load(sys)?;
            let input = if input.is_empty() { vec![Waveform::Zero; 2 * ss.m] } else { input.clone() };
            check_signal(&input, &ss)?;
            let x0 = if x0.is_empty() { vec![0.0; 2 * ss.n] } else { x0.clone() };
            let tr = if forced.is_empty() {
                simulate_mean(&ss, signal(&input), &x0, *t_end, *dt)?
            } else {
                forced_zero_output(&ss, forced, signal(&input), &x0, *t_end, *dt)?
            };
            if tr.step_warning {
                log::warn!("step size is large compared with the fastest mode");
            }
            let rows = tr.csv_rows().into_iter().map(|r| r.into_iter().map(num).collect());
            emit_csv(out, &tr.csv_header(), rows)?;
            Ok(Outcome::Done)
        }
        Command::NetworkSweep { kappa, epsilon, alpha, controller_kappa, controller_epsilon, wmin, wmax, points, scale } => {
            let (plant, _) = network::dpa(*kappa, *epsilon)?;
            let controller = match (controller_kappa, controller_epsilon) {
                (Some(k), Some(e)) => network::dpa(*k, *e)?.0,
                _ => DiagonalPlant::unit(),
            };
            let net = Network::new(plant, controller, *alpha)?;
            let r = network::sweep(&net, *wmin, *wmax, *points, *scale)?;
            let header: Vec<String> = SWEEP_HEADER.iter().map(|s| s.to_string()).collect();
            emit_csv(out, &header, r.points.iter().map(SweepPoint::csv_record))?;
            Ok(Outcome::Done)
        }
        Command::Dpa { kappa, epsilon, quadrature } => {
            let (plant, ss) = network::dpa(*kappa, *epsilon)?;
            let pr = check_physical_realizability(&ss, 1e-12);
            let spec = spectrum_report(&ss, lqs::kalman::DEFAULT_RANK_TOL)?;
            let ideal = match network::solve_bs_alpha(&plant, *quadrature) {
                Ok(alpha) => {
                    let net = Network::new(plant, DiagonalPlant::unit(), alpha)?;
                    let other = match quadrature {
                        network::Quadrature::Q => network::Quadrature::P,
                        network::Quadrature::P => network::Quadrature::Q,
                    };
                    json!({
                        "alpha": alpha,
                        "t_at_zero": net.t(*quadrature, c(0.0, 0.0)),
                        "sensitivity_near_zero": net.s(*quadrature, c(0.0, 1e-8)),
                        "other_quadrature_t_near_zero": net.t(other, c(0.0, 1e-8)),
                    })
                }
                Err(e) => json!({ "infeasible": e.to_string() }),
            };
            RunReport::new("dpa", None, cli.seed)
                .tol("pr", 1e-12)
                .result(json!({
                    "kappa": kappa,
                    "epsilon": epsilon,
                    "quadrature": quadrature,
                    "a": mat(&ss.a_r()),
                    "b": mat(&ss.b_r()),
                    "c": mat(&ss.c_r()),
                    "d": mat(&ss.d_r()),
                    "pr": pr,
                    "poles": spec.poles,
                    "invariant_zeros": spec.invariant_zeros,
                    "ideal_squeezing": ideal,
                }))?
                .emit(out, cli.timing)?;
            Ok(Outcome::Done)
        }
        Command::Selftest { fault } => {
            let fault = match fault {
                Some(FaultArg::ZeroSign) => Fault::ZeroSign,
                None => Fault::None,
            };
            let r = run_selftest(cli.seed, fault);
            let mut text = String::new();
            for s in &r.suites {
                text += &format!(
                    "{:<20} {:>4} cases {:>4} failed  worst {:.3e}  tol {:.0e}  {}\n",
                    s.name,
                    s.cases,
                    s.failures,
                    s.worst_residual,
                    s.tol,
                    if s.passed() { "PASS" } else { "FAIL" }
                );
            }
            let npass = r.suites.iter().filter(|s| s.passed()).count();
            text += &format!("seed {}: {npass}/{} suites passed\n", r.seed, r.suites.len());
            match out {
                Some(_) => RunReport::new("selftest", None, cli.seed).result(&r)?.emit(out, cli.timing)?,
                None => write_text(None, &text)?,
            }
            Ok(if r.passed { Outcome::Done } else { Outcome::Negative })
        }
        Command::Fixtures { name } => {
            match name {
                None => {
                    let list: String = fixtures::FIXTURES.iter().map(|(n, _)| format!("{n}\n")).collect();
                    write_text(out, &list)?
                }
                Some(n) => write_text(out, fixtures::lookup(n).ok_or_else(|| anyhow!("no fixture named {n}"))?)?,
            }
            Ok(Outcome::Done)
        }
    }
}
