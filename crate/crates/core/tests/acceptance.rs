//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use hfconv::analysis::{fit_geometric_rate, lojasiewicz_probe, lojasiewicz_probe_trace, shift_scaling_study};
use hfconv::hamiltonian::{fcidump, hubbard_ring, native, random_system};
use hfconv::manifold::{
    commutator_norm, energy_along_descent, geodesic_step, random_density, tangent_project,
};
use hfconv::matops::{commutator, frobenius_norm};
use hfconv::solvers::{
    auto_shift, core_guess, detect_oscillation, estimate_alpha, random_guess, run, search_oscillating_seeds,
    Algorithm, IterationRecord, RunStatus, SeedSearch, SolverConfig, StepPolicy,
};
use hfconv::{DensityMatrix, ElectronicSystem, Error, OccupationConvention, SymMatrix};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RHF: OccupationConvention = OccupationConvention::RestrictedClosedShell;
const SPINLESS: OccupationConvention = OccupationConvention::Spinless;

/// Seed of the random system on which Roothaan oscillates, as found by the
/// seed-search harness over the family below.
const OSCILLATING_SEED: u64 = 1;
const OSCILLATING_FAMILY: SeedSearch =
    SeedSearch { n_basis: 4, n_electrons: 2, convention: SPINLESS, interaction_scale: 1.0 };

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ok<T>(r: hfconv::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

/// The 25 seeded random systems shared by several criteria: `n_basis` from
/// 4 to 10, alternating conventions, each with a seeded random start.
fn ci_systems() -> Vec<(ElectronicSystem, DensityMatrix)> {
    (0..25u64)
        .map(|i| {
            let conv = if i % 2 == 0 { SPINLESS } else { RHF };
            let n = 4 + (i as usize % 7);
            let pairs = 1 + i as usize % 3;
            let n_electrons = if conv == SPINLESS { pairs } else { 2 * pairs };
            let system = random_system(100 + i, n, n_electrons, conv, 0.5).expect("ci system");
            let d0 = random_guess(&system, i, 1.0).expect("ci start");
            (system, d0)
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let s = ok(hubbard_ring(2, 1.0, 2.0, 2, RHF))?;
    let d0 = ok(core_guess(&s))?;
    let algorithms = [
        Algorithm::GradientDescent(StepPolicy::backtracking()),
        Algorithm::Roothaan,
        Algorithm::LevelShifting(1.0),
    ];
    let mut parts = Vec::new();
    for alg in algorithms {
        let r = ok(run(&s, &d0, &SolverConfig::new(alg)))?;
        ensure(r.status == RunStatus::Converged, || format!("{}: {:?}", alg.name(), r.status))?;
        ensure((r.final_energy() + 1.0).abs() <= 1e-10, || format!("{}: E = {}", alg.name(), r.final_energy()))?;
        ensure(r.iterations() <= 5, || format!("{}: {} iterations", alg.name(), r.iterations()))?;
        parts.push(format!("{} k={}", alg.name(), r.iterations()));
    }
    Ok(format!("E = -1 from the core guess; {}", parts.join(", ")))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let h = 1e-4;
    let mut worst = 0.0f64;
    for (s, d) in ci_systems() {
        let fock = ok(s.fock(d.matrix()))?;
        let c = commutator_norm(&d, &fock);
        let exact = -s.occupation_factor() * c * c;
        let plus = ok(energy_along_descent(&s, &d, h))?;
        let minus = ok(energy_along_descent(&s, &d, -h))?;
        let fd = (plus - minus) / (2.0 * h);
        worst = worst.max(((fd - exact) / exact).abs());
    }
    let elapsed = start.elapsed();
    ensure(worst <= 1e-5, || format!("max relative error {worst:e}"))?;
    ensure(elapsed < Duration::from_secs(10), || format!("runtime {elapsed:?}"))?;
    Ok(format!("max relative error {worst:.2e} over 25 systems in {elapsed:.2?}"))
}

fn criterion_3() -> Outcome {
    let c = 0.5;
    let mut max_iter = 0;
    for (i, (s, d0)) in ci_systems().into_iter().enumerate() {
        let cfg = SolverConfig::new(Algorithm::GradientDescent(StepPolicy::backtracking()));
        let r = ok(run(&s, &d0, &cfg))?;
        ensure(r.status == RunStatus::Converged, || format!("system {i}: {:?}", r.status))?;
        ensure(r.final_grad_norm() <= 1e-8, || format!("system {i}: final gradient {}", r.final_grad_norm()))?;
        let f = s.occupation_factor();
        for w in r.trace.records.windows(2) {
            let t = w[1].step.unwrap_or(f64::NAN);
            let bound = w[0].energy - c * t * f * w[0].grad_norm.powi(2) + 1e-12;
            ensure(w[1].energy <= bound, || format!("system {i}, step {}: Armijo violated", w[1].k))?;
        }
        max_iter = max_iter.max(r.iterations());
    }
    Ok(format!("25/25 converged to 1e-8, at most {max_iter} iterations, every step Armijo-compliant"))
}

fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix {
    SymMatrix::new(DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0))).expect("symmetric")
}

fn criterion_4() -> Outcome {
    let (n, n_occ) = (8, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let mut d = ok(random_density(n, n_occ, 4))?;
    let mut worst_idem = 0.0f64;
    let mut worst_trace = 0.0f64;
    for step in 0..100_000 {
        let m = random_sym(&mut rng, n);
        d = ok(geodesic_step(&d, &m, 0.05))?;
        worst_idem = worst_idem.max(d.idempotency_residual());
        worst_trace = worst_trace.max(d.trace_error());
        ensure(worst_idem <= 1e-10 * n as f64 && worst_trace <= 1e-8, || {
            format!("step {step}: idempotency {worst_idem:e}, trace {worst_trace:e}")
        })?;
    }
    let mut worst_norm = 0.0f64;
    for seed in 0..1000u64 {
        let dim = 2 + seed as usize % 9;
        let occ = 1 + seed as usize % (dim - 1);
        let dm = ok(random_density(dim, occ, seed))?;
        let m = random_sym(&mut rng, dim);
        let projected = ok(tangent_project(&dm, &m))?.norm();
        let comm = frobenius_norm(&ok(commutator(dm.matrix(), &m))?);
        worst_norm = worst_norm.max((projected - comm).abs());
    }
    ensure(worst_norm <= 1e-12, || format!("norm identity error {worst_norm:e}"))?;
    Ok(format!(
        "1e5 steps: max |D^2-D| {worst_idem:.1e}, max |Tr D - N| {worst_trace:.1e}; norm identity error {worst_norm:.1e}"
    ))
}

fn criterion_5() -> Outcome {
    let mut runs: Vec<(String, ElectronicSystem, DensityMatrix)> = ci_systems()
        .into_iter()
        .enumerate()
        .map(|(i, (s, d))| (format!("random {i}"), s, d))
        .collect();
    for (l, u, n) in [(4, 1.0, 2), (6, 1.0, 6), (6, 2.0, 6), (6, 4.0, 6), (8, 2.0, 6)] {
        let s = ok(hubbard_ring(l, 1.0, u, n, RHF))?;
        let d = ok(random_guess(&s, 1, 1.0))?;
        runs.push((format!("hubbard L={l} U={u} N={n}"), s, d));
    }
    let mut qualifying = 0;
    for (name, s, d0) in &runs {
        let r = ok(run(s, d0, &SolverConfig::new(Algorithm::Roothaan)))?;
        let gaps: Vec<f64> = r.trace.records.iter().filter_map(|x| x.gap).collect();
        if gaps.iter().any(|&g| g < 0.05) {
            continue;
        }
        qualifying += 1;
        let lyap: Vec<f64> = r.trace.records.iter().filter_map(|x| x.lyapunov).collect();
        for (k, w) in lyap.windows(2).enumerate() {
            ensure(w[1] <= w[0] + 1e-10, || format!("{name}: Lyapunov increases at step {}", k + 2))?;
        }
    }
    ensure(qualifying > 0, || "no run kept its gaps above 0.05".into())?;
    Ok(format!("{qualifying}/{} Roothaan runs kept gap >= 0.05; all non-increasing", runs.len()))
}

fn criterion_6() -> Outcome {
    let synthetic: Vec<IterationRecord> = (0..40)
        .map(|k| IterationRecord {
            k,
            energy: 0.0,
            grad_norm: 1.0,
            dd1: (k > 0).then_some(1.0),
            dd2: (k > 1).then_some(0.0),
            gap: None,
            lyapunov: None,
            step: None,
        })
        .collect();
    ensure(detect_oscillation(&synthetic, 20, 1e6, 1e-10), || "synthetic period-2 trace not detected".into())?;

    let cfg = SolverConfig::default();
    let found = search_oscillating_seeds(OSCILLATING_FAMILY, 0..40, &cfg);
    ensure(found.contains(&OSCILLATING_SEED), || format!("seed search found {found:?}"))?;
    let s = ok(random_system(
        OSCILLATING_SEED,
        OSCILLATING_FAMILY.n_basis,
        OSCILLATING_FAMILY.n_electrons,
        OSCILLATING_FAMILY.convention,
        OSCILLATING_FAMILY.interaction_scale,
    ))?;
    let d0 = ok(core_guess(&s))?;
    let roothaan = ok(run(&s, &d0, &cfg))?;
    ensure(roothaan.status == RunStatus::Oscillating, || format!("Roothaan status {:?}", roothaan.status))?;
    let (b, shifted) = ok(auto_shift(&s, &d0, &cfg))?;
    ensure(shifted.status == RunStatus::Converged && b.is_finite(), || "auto_shift did not converge".into())?;
    Ok(format!(
        "synthetic trace detected; {} oscillating seeds in 0..40; seed {OSCILLATING_SEED}: Roothaan oscillates at k={}, auto_shift converges with b = {b} in {} iterations",
        found.len(),
        roothaan.iterations(),
        shifted.iterations()
    ))
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let s = ok(hubbard_ring(6, 1.0, 4.0, 6, RHF))?;
    let d0 = ok(random_guess(&s, 1, 1.0))?;
    let grid = [8.0, 16.0, 32.0, 64.0, 128.0, 256.0];
    let study = ok(shift_scaling_study(&s, &d0, &grid, &SolverConfig::default()))?;
    let elapsed = start.elapsed();
    ensure((-1.15..=-0.85).contains(&study.slope), || format!("slope {}", study.slope))?;
    ensure(elapsed < Duration::from_secs(60), || format!("runtime {elapsed:?}"))?;
    let nus: Vec<String> = study.points.iter().map(|p| format!("{:.4}", p.nu.unwrap_or(f64::NAN))).collect();
    Ok(format!(
        "slope {:.4}, nu = [{}], nu(256)/nu(128) = {:.3}, {elapsed:.2?}",
        study.slope,
        nus.join(", "),
        study.last_ratio
    ))
}

fn criterion_8() -> Outcome {
    let xs: Vec<f64> = (0..40).map(|k| 0.5f64.powi(k)).collect();
    let quad = ok(lojasiewicz_probe(
        &xs.iter().map(|x| x * x).collect::<Vec<_>>(),
        &xs.iter().map(|x| 2.0 * x).collect::<Vec<_>>(),
        Some(0.0),
    ))?;
    let quart = ok(lojasiewicz_probe(
        &xs.iter().map(|x| x.powi(4)).collect::<Vec<_>>(),
        &xs.iter().map(|x| 4.0 * x.powi(3)).collect::<Vec<_>>(),
        Some(0.0),
    ))?;
    ensure((quad.theta_raw - 0.5).abs() <= 1e-6, || format!("quadratic theta {}", quad.theta_raw))?;
    ensure((quart.theta_raw - 0.25).abs() <= 1e-6, || format!("quartic theta {}", quart.theta_raw))?;

    let gradient = SolverConfig::new(Algorithm::GradientDescent(StepPolicy::backtracking())).with_tol(1e-12);
    let preset = ok(hubbard_ring(6, 1.0, 4.0, 6, RHF))?;
    let random = ok(random_system(7, 8, 3, SPINLESS, 1.0))?;
    let mut thetas = Vec::new();
    for (name, s) in [("hubbard L=6 U=4", &preset), ("random n=8 N=3", &random)] {
        let d0 = ok(random_guess(s, 1, 1.0))?;
        let r = ok(run(s, &d0, &gradient))?;
        ensure(r.status == RunStatus::Converged, || format!("{name}: {:?}", r.status))?;
        let fit = ok(lojasiewicz_probe_trace(&r.trace, Some(r.final_energy())))?;
        ensure((fit.theta_raw - 0.5).abs() <= 0.05, || format!("{name}: theta {}", fit.theta_raw))?;
        thetas.push(format!("{name}: {:.4} ({} points)", fit.theta_raw, fit.points));
    }
    Ok(format!(
        "synthetic {:.8}/{:.8}; {}",
        quad.theta_raw,
        quart.theta_raw,
        thetas.join("; ")
    ))
}

fn criterion_9() -> Outcome {
    let s = ok(hubbard_ring(6, 1.0, 1.0, 6, RHF))?;
    let d0 = ok(random_guess(&s, 1, 1.0))?;
    let alpha = ok(estimate_alpha(&s, &d0, 8))?;
    let roothaan = ok(run(&s, &d0, &SolverConfig::new(Algorithm::Roothaan)))?;
    let gradient = ok(run(&s, &d0, &SolverConfig::new(Algorithm::GradientDescent(StepPolicy::FixedStep(1.0 / alpha)))))?;
    let kr = roothaan.trace.iterations_to(1e-8).ok_or("Roothaan never reached 1e-8")?;
    let kg = gradient.trace.iterations_to(1e-8).ok_or("gradient never reached 1e-8")?;
    let de = (roothaan.final_energy() - gradient.final_energy()).abs();
    ensure(kr < kg, || format!("Roothaan {kr} vs gradient {kg} iterations"))?;
    ensure(de <= 1e-8, || format!("energies differ by {de:e}"))?;
    Ok(format!("alpha = {alpha:.4}; Roothaan {kr} vs gradient {kg} iterations; |dE| = {de:.1e}"))
}

fn criterion_10() -> Outcome {
    let mut worst = 0.0f64;
    for nu in [0.01, 0.1, 0.5, 0.9] {
        let len = if nu == 0.9 { 14 } else { 60 };
        let series: Vec<f64> = (0..len).map(|k| 3.0 * (1.0f64 - nu).powi(k)).collect();
        let fit = ok(fit_geometric_rate(&series))?;
        ensure(!fit.degenerate, || format!("nu = {nu} flagged degenerate"))?;
        worst = worst.max((fit.nu - nu).abs());
    }
    ensure(worst <= 1e-9, || format!("planted rate error {worst:e}"))?;
    let power: Vec<f64> = (1..=40).map(|k| (k as f64).powi(-2)).collect();
    let fit = ok(fit_geometric_rate(&power))?;
    ensure(fit.degenerate, || "k^-2 series not flagged".into())?;
    Ok(format!(
        "max planted error {worst:.1e}; k^-2: semilog r2 {:.4}, log-log exponent {:.4}, flagged",
        fit.full_r2, fit.loglog_exponent
    ))
}

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/random6.fcidump")
}

fn criterion_11() -> Outcome {
    let from_fcidump = ok(fcidump::read_fcidump(&fixture(), RHF))?;
    let json = native::to_string(&from_fcidump);
    let from_native = ok(native::from_str(&json, "converted"))?;
    ensure(from_native == from_fcidump, || "systems differ after conversion".into())?;
    for alg in [Algorithm::Roothaan, Algorithm::GradientDescent(StepPolicy::backtracking())] {
        let cfg = SolverConfig::new(alg);
        let a = ok(run(&from_fcidump, &ok(random_guess(&from_fcidump, 5, 1.0))?, &cfg))?;
        let b = ok(run(&from_native, &ok(random_guess(&from_native, 5, 1.0))?, &cfg))?;
        let bits = |r: &hfconv::solvers::RunResult| -> Vec<u64> {
            r.trace.records.iter().flat_map(|x| [x.energy.to_bits(), x.grad_norm.to_bits()]).collect()
        };
        ensure(a.trace.to_csv() == b.trace.to_csv() && bits(&a) == bits(&b), || format!("{}: traces differ", alg.name()))?;
    }

    let text = std::fs::read_to_string(fixture()).map_err(|e| e.to_string())?;
    let mut checked = 0;
    for (line_no, bad) in [(9, "0.5 1 x 1 1"), (12, "0.25 1 1 1"), (20, "1.0 7 1 1 1")] {
        let mut lines: Vec<&str> = text.lines().collect();
        lines[line_no - 1] = bad;
        let corrupted = lines.join("\n");
        match fcidump::parse_fcidump(&corrupted, "corrupted", RHF) {
            Err(Error::Parse { line, .. }) if line == line_no => checked += 1,
            other => return Err(format!("line {line_no}: expected a parse error, got {other:?}")),
        }
    }
    Ok(format!("native round trip bit-exact, traces identical; {checked}/3 malformed lines reported with line numbers"))
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        (1, "Hubbard-dimer exactness", criterion_1),
        (2, "gradient consistency", criterion_2),
        (3, "monotone descent", criterion_3),
        (4, "manifold invariants soak", criterion_4),
        (5, "Roothaan Lyapunov", criterion_5),
        (6, "oscillation machinery", criterion_6),
        (7, "nu proportional to 1/b", criterion_7),
        (8, "Lojasiewicz exponent", criterion_8),
        (9, "algorithm comparison", criterion_9),
        (10, "rate-fit correctness", criterion_10),
        (11, "format round trip", criterion_11),
    ];
    let mut failures = 0;
    for (id, name, check) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {id:>2} PASS [{name}] {detail} ({secs:.2}s)"),
            Err(detail) => {
                failures += 1;
                println!("criterion {id:>2} FAIL [{name}] {detail} ({secs:.2}s)");
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
