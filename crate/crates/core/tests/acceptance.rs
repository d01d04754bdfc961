//! End-to-end acceptance suite. Runs as a plain binary (`harness = false`) and prints
//! one PASS/FAIL line per criterion; the process fails if any criterion fails.

use nalgebra::{Complex, DMatrix};
use orthosync::certificate::{certify, correlation, theory_bounds, CertifyOptions, Verdict};
use orthosync::cli::config::ExperimentConfig;
use orthosync::cli::sweep::{run_sweep, sweep_csv, SweepRow};
use orthosync::field::{gaussian_matrix, inner, Scalar};
use orthosync::graphs::{Graph, GraphSpec};
use orthosync::instance::{noise_operator_norm, sample_rotations, NoiseModel, SyncInstance};
use orthosync::io::{parse_instance_str, write_edge_measurements, write_g2o, AnyMeasurements, InstanceFormat};
use orthosync::kuramoto::{integrate_flow, twisted_state, FlowOptions, Termination};
use orthosync::linalg::{fro, mix_seed, seeded_rng};
use orthosync::solver::{
    gradient, hess_quadratic, hess_vec, objective_change, solve_from, tangent_dimension, Init, SolveOptions,
    SolveStatus,
};
use orthosync::stiefel::{tangent_second_moment, StiefelProductPoint, TangentConstruction};
use rand::Rng;
use std::time::Instant;

/// An SOC point seen somewhere in the suite, kept for the certificate consistency check.
struct SocRecord {
    source: &'static str,
    p: usize,
    rank: usize,
    s_min_eig: f64,
    lhat_norm: f64,
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn solve_opts(seed: u64) -> SolveOptions {
    SolveOptions {
        seed,
        ..SolveOptions::default()
    }
}

fn record(
    log: &mut Vec<SocRecord>,
    source: &'static str,
    status: SolveStatus,
    p: usize,
    cert: &orthosync::certificate::CertificateReport,
) {
    if status == SolveStatus::SocPoint {
        log.push(SocRecord {
            source,
            p,
            rank: cert.numerical_rank,
            s_min_eig: cert.s_min_eig,
            lhat_norm: cert.lhat_norm,
        });
    }
}

fn noiseless_landscape(log: &mut Vec<SocRecord>) -> orthosync::Result<Outcome> {
    let graph = Graph::circulant(100, 6)?;
    let inst = SyncInstance::<f64>::generate(&graph, 2, NoiseModel::None, 101)?;
    let lhat = inst.connection_laplacian();
    let z = inst.truth_stacked();
    let (mut good, mut worst) = (0, f64::INFINITY);
    for k in 0..50 {
        let rep = solve_from(&lhat, 4, Init::Random, &solve_opts(1000 + k))?;
        let cert = certify(&lhat, &rep.point, &CertifyOptions::default())?;
        record(log, "noiseless", rep.status, 4, &cert);
        let corr = correlation(&z, rep.point.data()).1;
        worst = worst.min(corr);
        if rep.status == SolveStatus::SocPoint && corr >= 1.0 - 1e-9 && cert.verdict == Verdict::CertifiedGlobal {
            good += 1;
        }
    }
    Ok(outcome(
        good == 50,
        format!("{good}/50 certified with correlation >= 1 - 1e-9 (worst {worst:.12})"),
    ))
}

fn tightness(log: &mut Vec<SocRecord>) -> orthosync::Result<Outcome> {
    let graph = Graph::cycle(20)?;
    let inst = SyncInstance::<f64>::generate(&graph, 1, NoiseModel::None, 0)?.with_identity_truth();
    let lhat = inst.connection_laplacian();
    let z = inst.truth_stacked();

    let rep = solve_from(&lhat, 2, Init::Given(twisted_state(20, 1, 2)?), &solve_opts(0))?;
    let cert = certify(&lhat, &rep.point, &CertifyOptions::default())?;
    record(log, "twisted", rep.status, 2, &cert);
    let corr = correlation(&z, rep.point.data()).1;
    let spurious = rep.status == SolveStatus::SocPoint && corr < 0.9 && cert.s_min_eig < 0.0;

    let mut good = 0;
    for k in 0..50 {
        let rep = solve_from(&lhat, 3, Init::Random, &solve_opts(2000 + k))?;
        let cert = certify(&lhat, &rep.point, &CertifyOptions::default())?;
        record(log, "cycle p=3", rep.status, 3, &cert);
        good += usize::from(cert.verdict == Verdict::CertifiedGlobal);
    }
    Ok(outcome(
        spurious && good == 50,
        format!(
            "p=2 twisted: {:?}, correlation {corr:.3}, lambda_min(S) {:.3e}; p=3: {good}/50 certified",
            rep.status, cert.s_min_eig
        ),
    ))
}

// Returns (max standardized entry deviation, relative Frobenius error).
fn moment_check<T: Scalar>(r: usize, p: usize, seed: u64) -> (f64, f64) {
    let draws = 100_000;
    let y = StiefelProductPoint::<T>::random(2, r, p, seed);
    let mut rng = seeded_rng(seed + 1);
    let mut sum = DMatrix::<T>::zeros(r, r);
    let mut sq_re = DMatrix::<f64>::zeros(r, r);
    let mut sq_im = DMatrix::<f64>::zeros(r, r);
    for _ in 0..draws {
        let v = y.random_tangent_with(&mut rng, TangentConstruction::Standard);
        let m = v.rows(0, r) * v.rows(r, r).adjoint();
        sq_re += m.map(|x| x.re() * x.re());
        sq_im += m.map(|x| x.im() * x.im());
        sum += m;
    }
    let nd = draws as f64;
    let mean = sum / T::from_real(nd);
    let exact = tangent_second_moment(
        &y.block(0).into_owned(),
        &y.block(1).into_owned(),
        TangentConstruction::Standard,
    );
    let mut worst: f64 = 0.0;
    for idx in 0..r * r {
        let (m, e) = (mean[idx], exact[idx]);
        let se_re = ((sq_re[idx] / nd - m.re() * m.re()) / nd).sqrt();
        worst = worst.max((m.re() - e.re()).abs() / se_re);
        if T::FIELD == orthosync::field::Field::Complex {
            let se_im = ((sq_im[idx] / nd - m.im() * m.im()) / nd).sqrt();
            worst = worst.max((m.im() - e.im()).abs() / se_im);
        }
    }
    (worst, fro(&(mean - &exact)) / fro(&exact))
}

fn second_moments() -> orthosync::Result<Outcome> {
    let results = [
        ("real r=1 p=2", moment_check::<f64>(1, 2, 301)),
        ("real r=2 p=3", moment_check::<f64>(2, 3, 302)),
        ("real r=2 p=6", moment_check::<f64>(2, 6, 303)),
        ("complex r=1 p=4", moment_check::<Complex<f64>>(1, 4, 304)),
        ("complex r=2 p=4", moment_check::<Complex<f64>>(2, 4, 305)),
    ];
    let passed = results.iter().all(|(_, (z, rel))| *z <= 3.0 && *rel <= 0.02);
    let detail = results
        .iter()
        .map(|(name, (z, rel))| format!("{name}: {z:.2} SE, {:.2}%", 100.0 * rel))
        .collect::<Vec<_>>()
        .join("; ");
    Ok(outcome(passed, detail))
}

fn noisy_bounds(log: &mut Vec<SocRecord>) -> orthosync::Result<(Outcome, Outcome)> {
    let (n, r, p) = (50, 2, 6);
    let sigmas = [0.05, 0.1, 0.2];
    let (mut soc, mut corr_viol, mut rank_viol) = (0, 0, 0);
    let mut min_slack = f64::INFINITY;
    for k in 0..20u64 {
        let graph = Graph::erdos_renyi(n, 10.0 / (n - 1) as f64, mix_seed(400, &[k]))?;
        let sigma = sigmas[k as usize % 3];
        let inst = SyncInstance::<f64>::generate(&graph, r, NoiseModel::Gaussian { sigma }, mix_seed(401, &[k]))?;
        let lhat = inst.connection_laplacian();
        let lambda2 = graph.laplacian_summary()?.lambda2;
        let bounds = theory_bounds(p, r, n, lambda2, noise_operator_norm(&inst.noise_matrix()))?;
        let rep = solve_from(&lhat, p, Init::Random, &solve_opts(mix_seed(402, &[k])))?;
        let cert = certify(&lhat, &rep.point, &CertifyOptions::default())?;
        record(log, "ER noisy", rep.status, p, &cert);
        if rep.status != SolveStatus::SocPoint {
            continue;
        }
        soc += 1;
        let raw = correlation(&inst.truth_stacked(), rep.point.data()).0;
        let lower = bounds.thm4_corr_lower.expect("p > r + 2");
        min_slack = min_slack.min(raw - lower);
        corr_viol += usize::from(raw < lower);
        rank_viol += usize::from(cert.numerical_rank as f64 > bounds.thm2_rank_bound.expect("p > r + 2").ceil());
    }
    let all = soc == 20;
    Ok((
        outcome(
            all && corr_viol == 0,
            format!("{soc}/20 SOC points, {corr_viol} correlation violations (min slack {min_slack:.1})"),
        ),
        outcome(
            all && rank_viol == 0,
            format!("{soc}/20 SOC points, {rank_viol} rank violations"),
        ),
    ))
}

fn rank_deficient_certificates(log: &[SocRecord]) -> Outcome {
    let deficient: Vec<_> = log.iter().filter(|s| s.rank < s.p).collect();
    let bad: Vec<_> = deficient
        .iter()
        .filter(|s| s.s_min_eig < -1e-6 * s.lhat_norm)
        .map(|s| s.source)
        .collect();
    outcome(
        bad.is_empty() && !deficient.is_empty(),
        format!(
            "{} rank-deficient SOC points out of {}, {} violations {:?}",
            deficient.len(),
            log.len(),
            bad.len(),
            bad
        ),
    )
}

// (gradient error, Hessian quadratic error, self-adjointness error), all relative.
fn derivative_triple<T: Scalar>(seed: u64) -> orthosync::Result<(f64, f64, f64)> {
    let mut rng = seeded_rng(seed);
    let r = rng.random_range(1..=2);
    let mut p = r + rng.random_range(0..=3);
    if tangent_dimension(1, r, p, T::FIELD) == 0 {
        // St(1, 1) over the reals is a finite set with no tangent directions.
        p += 1;
    }
    let n_max = 200 / (r * p);
    let n = rng.random_range(3..=n_max.min(12));
    let sigma = rng.random_range(0.0..1.0);
    let graph = Graph::erdos_renyi(n, 0.6, seed)?;
    let inst = SyncInstance::<T>::generate(&graph, r, NoiseModel::Gaussian { sigma }, seed + 1)?;
    let lhat = inst.connection_laplacian();
    let y = StiefelProductPoint::<T>::random(n, r, p, seed + 2);
    let v = y.random_tangent(seed + 3);
    let w = y.project_tangent(&gaussian_matrix(n * r, p, &mut rng));

    let h = 1e-5;
    let fd = objective_change(&lhat, &y.retract(&v, -h)?, &y.retract(&v, h)?) / (2.0 * h);
    let g = inner(&gradient(&lhat, &y), &v);
    let grad_err = (fd - g).abs() / g.abs();

    let h = 1e-4;
    let second =
        (objective_change(&lhat, &y, &y.retract(&v, h)?) + objective_change(&lhat, &y, &y.retract(&v, -h)?)) / (h * h);
    let q = hess_quadratic(&lhat, &y, &v);
    let hess_err = (second - q).abs() / q.abs();

    let hv = hess_vec(&lhat, &y, &v);
    let hw = hess_vec(&lhat, &y, &w);
    let adj_err = (inner(&hv, &w) - inner(&v, &hw)).abs() / (fro(&hv) * fro(&w)).max(fro(&hw) * fro(&v));
    Ok((grad_err, hess_err, adj_err))
}

fn derivatives() -> orthosync::Result<Outcome> {
    let (mut g, mut h, mut a) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..20 {
        let (ge, he, ae) = if k % 2 == 0 {
            derivative_triple::<f64>(700 + k)?
        } else {
            derivative_triple::<Complex<f64>>(700 + k)?
        };
        g = g.max(ge);
        h = h.max(he);
        a = a.max(ae);
    }
    Ok(outcome(
        g <= 1e-4 && h <= 1e-3 && a <= 1e-10,
        format!("max relative errors: gradient {g:.2e}, Hessian form {h:.2e}, self-adjointness {a:.2e}"),
    ))
}

fn kuramoto() -> orthosync::Result<Outcome> {
    let opts = FlowOptions::default();
    let ring = Graph::cycle(10)?;
    let mut real_sync = 0;
    let mut complex_sync = 0;
    for k in 0..20 {
        let rep = integrate_flow(&ring, StiefelProductPoint::<f64>::random(10, 2, 4, 800 + k), &opts)?;
        real_sync += usize::from(rep.termination == Termination::Synchronized && rep.final_sync_error <= 1e-10);
        let rep = integrate_flow(
            &ring,
            StiefelProductPoint::<Complex<f64>>::random(10, 1, 2, 900 + k),
            &opts,
        )?;
        complex_sync += usize::from(rep.termination == Termination::Synchronized && rep.final_sync_error <= 1e-10);
    }
    let twisted = integrate_flow(&Graph::cycle(20)?, twisted_state(20, 1, 2)?, &opts)?;
    Ok(outcome(
        real_sync == 20 && complex_sync == 20 && twisted.termination == Termination::EquilibriumNonsync,
        format!(
            "real r=2 p=4: {real_sync}/20 synchronized; complex r=1 p=2: {complex_sync}/20; twisted C20: {:?}",
            twisted.termination
        ),
    ))
}

fn first_sigma(rows: &[&SweepRow], pred: impl Fn(&SweepRow) -> bool) -> Option<f64> {
    rows.iter().find(|r| pred(r)).map(|r| r.sigma)
}

fn phase_transition() -> orthosync::Result<Outcome> {
    let cfg = ExperimentConfig {
        graph: GraphSpec::Circulant { n: 100, degree: 10 },
        r: 2,
        p: vec![4, 6],
        sigma: (1..=8).map(|k| k as f64 / 5.0).collect(),
        trials: 10,
        seed: 2024,
        ..ExperimentConfig::default()
    };
    let (rows, records) = run_sweep(&cfg)?;
    let failed = records.iter().filter(|r| r.outcome.is_none()).count();
    let mut passed = failed == 0;
    let mut parts = Vec::new();
    for &p in &cfg.p {
        let curve: Vec<&SweepRow> = rows.iter().filter(|r| r.p == p).collect();
        let inversions = curve.windows(2).filter(|w| w[1].corr_mean > w[0].corr_mean).count();
        let starts_full = curve[0].rank_r_frac == 1.0;
        let rank_drop = first_sigma(&curve, |r| r.rank_r_frac < 1.0);
        let rank_low = first_sigma(&curve, |r| r.rank_r_frac < 0.5);
        let corr_drop = first_sigma(&curve, |r| r.corr_mean < 0.95);
        let ordered = matches!((rank_drop, corr_drop), (Some(a), Some(b)) if a <= b + 1e-12);
        passed &= inversions <= 1 && starts_full && rank_low.is_some() && ordered;
        parts.push(format!(
            "p={p}: corr {}, {inversions} inversions, rank_r_frac < 1 from sigma {rank_drop:?}, < 0.5 from {rank_low:?}, corr < 0.95 from {corr_drop:?}",
            curve.iter().map(|r| format!("{:.3}", r.corr_mean)).collect::<Vec<_>>().join("/")
        ));
    }
    parts.push(format!("{failed} failed trials"));
    print!("{}", sweep_csv(&rows));
    Ok(outcome(passed, parts.join("; ")))
}

fn strip_timing(csv: &str) -> String {
    let col = orthosync::cli::sweep::CSV_HEADER
        .split(',')
        .position(|c| c == "time_mean_s")
        .expect("timing column");
    csv.lines()
        .map(|l| {
            l.split(',')
                .enumerate()
                .filter(|(i, _)| *i != col)
                .map(|(_, f)| f)
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn determinism_and_formats() -> orthosync::Result<Outcome> {
    let cfg = ExperimentConfig {
        graph: GraphSpec::Circulant { n: 30, degree: 4 },
        p: vec![2, 4],
        sigma: vec![0.1, 0.5],
        trials: 3,
        seed: 77,
        ..ExperimentConfig::default()
    };
    std::env::set_var("SYNC_THREADS", "1");
    let first = sweep_csv(&run_sweep(&cfg)?.0);
    std::env::set_var("SYNC_THREADS", "3");
    let second = sweep_csv(&run_sweep(&cfg)?.0);
    std::env::remove_var("SYNC_THREADS");
    let identical = strip_timing(&first) == strip_timing(&second);

    let graph = Graph::erdos_renyi(25, 0.3, 5)?;
    let real = SyncInstance::<f64>::generate(&graph, 3, NoiseModel::Gaussian { sigma: 0.4 }, 6)?;
    let text = write_edge_measurements(real.measurements());
    let back = parse_instance_str(&text, InstanceFormat::EdgeMeasurements)?.measurements;
    let real_exact = back == AnyMeasurements::Real(real.measurements().clone())
        && orthosync::io::write_any_edge_measurements(&back) == text;

    let complex = SyncInstance::<Complex<f64>>::generate(&graph, 2, NoiseModel::Gaussian { sigma: 0.4 }, 7)?;
    let text = write_edge_measurements(complex.measurements());
    let back = parse_instance_str(&text, InstanceFormat::EdgeMeasurements)?.measurements;
    let complex_exact = back == AnyMeasurements::Complex(complex.measurements().clone())
        && orthosync::io::write_any_edge_measurements(&back) == text;

    // g2o stores an angle, so only rotation-valued measurements are representable and
    // they come back within a few ulps rather than bitwise.
    let planar = SyncInstance::with_truth(&graph, sample_rotations(graph.n(), 2, 8), NoiseModel::None, 9)?;
    let text = write_g2o(planar.measurements())?;
    let AnyMeasurements::Real(back) = parse_instance_str(&text, InstanceFormat::G2o2d)?.measurements else {
        return Ok(outcome(false, "g2o parsed as complex".into()));
    };
    let g2o_dev = back
        .blocks()
        .iter()
        .zip(planar.measurements().blocks())
        .map(|(a, b)| (a - b).amax())
        .fold(0.0, f64::max);
    let g2o_ok =
        back.graph() == planar.graph() && g2o_dev <= 1e-14 && write_g2o(&back)?.lines().count() == text.lines().count();

    Ok(outcome(
        identical && real_exact && complex_exact && g2o_ok,
        format!(
            "sweep CSV identical across runs and pool sizes: {identical}; edge-measurement round trip exact (real {real_exact}, complex {complex_exact}); g2o topology exact, max rotation deviation {g2o_dev:.1e}"
        ),
    ))
}

fn report(id: usize, name: &str, budget_s: f64, start: Instant, result: orthosync::Result<Outcome>) -> bool {
    let elapsed = start.elapsed().as_secs_f64();
    let (passed, detail) = match result {
        Ok(o) => (o.passed, o.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    let in_time = elapsed < budget_s;
    let ok = passed && in_time;
    println!(
        "{} criterion {id:>2} {name}: {detail} [{elapsed:.1} s, budget {budget_s} s]",
        if ok { "PASS" } else { "FAIL" }
    );
    ok
}

fn main() {
    let mut log = Vec::new();
    let mut results = Vec::new();

    let t = Instant::now();
    let r = noiseless_landscape(&mut log);
    results.push(report(1, "noiseless benign landscape", 60.0, t, r));

    let t = Instant::now();
    let r = tightness(&mut log);
    results.push(report(2, "tightness below p = r + 2", 30.0, t, r));

    let t = Instant::now();
    results.push(report(3, "tangent second moments", 60.0, t, second_moments()));

    let t = Instant::now();
    match noisy_bounds(&mut log) {
        Ok((corr, rank)) => {
            results.push(report(4, "correlation lower bound", 120.0, t, Ok(corr)));
            results.push(report(5, "rank bound", 120.0, t, Ok(rank)));
        }
        Err(e) => {
            let msg = e.to_string();
            results.push(report(4, "correlation lower bound", 120.0, t, Err(e)));
            results.push(report(5, "rank bound", 120.0, t, Ok(outcome(false, msg))));
        }
    }

    let t = Instant::now();
    results.push(report(
        6,
        "certificate of rank-deficient SOC points",
        1.0,
        t,
        Ok(rank_deficient_certificates(&log)),
    ));

    let t = Instant::now();
    results.push(report(7, "derivative correctness", 10.0, t, derivatives()));

    let t = Instant::now();
    results.push(report(8, "Kuramoto synchronization", 60.0, t, kuramoto()));

    let t = Instant::now();
    results.push(report(
        9,
        "phase transition at desk scale",
        600.0,
        t,
        phase_transition(),
    ));

    let t = Instant::now();
    results.push(report(
        10,
        "determinism and formats",
        10.0,
        t,
        determinism_and_formats(),
    ));

    let passed = results.iter().filter(|ok| **ok).count();
    println!("{passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
