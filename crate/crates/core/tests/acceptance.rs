//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p eigenwork-core --test acceptance`.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use faer::Mat;
use rayon::prelude::*;

use eigenwork_core::harness::archive::{final_ee_report, write_run};
use eigenwork_core::harness::sweep::entry_name;
use eigenwork_core::harness::{run, run_threshold_sweep, ExperimentConfig, RunOutcome};
use eigenwork_core::linalg::{hermitian_eigen, SectorMatrix, C64, ZERO};
use eigenwork_core::optimize::{default_norm_bound, default_vanish_tol, l2_norm, work_rate};
use eigenwork_core::propagate::control_hamiltonian;
use eigenwork_core::sector::embedding_matrix;
use eigenwork_core::{
    build_basis, build_ising, compute_y, diagonalize, evolve, expm_step, optimize, project_operator, reward,
    reward_grad, solve_gamma, Error, use_sequential_kernels, work_density, ControlBasis, IsingParams, Kick,
    ManifestKind, OptimizerConfig, Preset, Problem, ProjectedControls, Result, RewardParams, SampleSchedule,
    SectorBasis, StateBatch,
};

const SHELL: (f64, f64) = (-0.25, -0.1);
const EPS: f64 = 0.15;
const SIZES: [usize; 3] = [8, 10, 12];
const PRESETS: [Preset; 2] = [Preset::Integrable, Preset::Nonintegrable];
const THRESHOLDS: [f64; 3] = [0.10, 0.125, 0.15];

/// Final-time `D_pos` recorded when the suite was first run; drift is reported.
const BASELINE_LOCAL: [(Preset, usize, usize); 6] = [
    (Preset::Integrable, 8, 3),
    (Preset::Integrable, 10, 6),
    (Preset::Integrable, 12, 13),
    (Preset::Nonintegrable, 8, 2),
    (Preset::Nonintegrable, 10, 6),
    (Preset::Nonintegrable, 12, 10),
];
const BASELINE_HALF: [(Preset, usize, usize); 6] = [
    (Preset::Integrable, 8, 3),
    (Preset::Integrable, 10, 9),
    (Preset::Integrable, 12, 20),
    (Preset::Nonintegrable, 8, 2),
    (Preset::Nonintegrable, 10, 9),
    (Preset::Nonintegrable, 12, 22),
];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Result<Verdict> {
    Ok(Verdict { pass, detail: detail.into() })
}

fn report(id: usize, name: &str, start: Instant, v: Result<Verdict>) -> bool {
    let secs = start.elapsed().as_secs_f64();
    let (pass, detail) = match v {
        Ok(v) => (v.pass, v.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    println!(
        "criterion {id} {:<4} {name} ({secs:.1} s): {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

fn problem(preset: Preset, l: usize) -> Result<Problem> {
    Problem::new(preset.params(l), SHELL.0, SHELL.1)
}

fn local_controls(p: &Problem, k: usize) -> Result<(ControlBasis, ProjectedControls)> {
    let cb = ControlBasis::build(ManifestKind::Local { k }, p.n_sites())?;
    let pc = ProjectedControls::new(&cb, &p.sector)?;
    Ok((cb, pc))
}

// ---------------------------------------------------------------------------
// 1. Quench

fn quench_null() -> Result<Verdict> {
    let cfg = ExperimentConfig::quench_preset(Preset::Nonintegrable, 12).resolve()?;
    let out = run(&cfg)?;
    let traj = &out.trajectory;
    let t_end = traj.steps.last().map_or(0.0, |s| s.t);
    let worst = traj.steps.iter().map(|s| s.d_pos).max().unwrap_or(usize::MAX);
    let max_w = traj
        .samples
        .iter()
        .flat_map(|s| s.w.iter().copied())
        .fold(f64::NEG_INFINITY, f64::max);
    verdict(
        worst == 0 && (t_end - 10.0).abs() < 1e-9,
        format!(
            "{} steps to t={t_end:.2}, shell {}, max D_pos {worst}, max w {max_w:.4}",
            traj.steps.len(),
            traj.shell_size()
        ),
    )
}

// ---------------------------------------------------------------------------
// 2, 3, 4, 8. Optimized runs at L = 8, 10, 12

struct Entry {
    preset: Preset,
    l: usize,
    k: usize,
    dir: PathBuf,
    out: RunOutcome,
}

fn sweep(root: &Path) -> Result<Vec<Entry>> {
    let mut jobs = BTreeSet::new();
    for preset in PRESETS {
        for l in SIZES {
            jobs.insert((preset.name(), l, 4));
            jobs.insert((preset.name(), l, l / 2));
        }
    }
    let jobs: Vec<(Preset, usize, usize)> = jobs
        .into_iter()
        .map(|(name, l, k)| (PRESETS.into_iter().find(|p| p.name() == name).unwrap(), l, k))
        .collect();
    jobs.par_iter()
        .map(|&(preset, l, k)| {
            let cfg = ExperimentConfig::optimize_preset(preset, l, k).resolve()?;
            let out = run(&cfg)?;
            let dir = root.join(entry_name(preset, l, k));
            write_run(&out, &dir)?;
            Ok(Entry { preset, l, k, dir, out })
        })
        .collect()
}

fn find(entries: &[Entry], preset: Preset, l: usize, k: usize) -> &Entry {
    entries
        .iter()
        .find(|e| e.preset == preset && e.l == l && e.k == k)
        .expect("sweep entry")
}

fn dpos(entries: &[Entry], preset: Preset, l: usize, k: usize) -> usize {
    find(entries, preset, l, k).out.trajectory.final_d_pos()
}

fn baseline_drift(entries: &[Entry], table: &[(Preset, usize, usize)], k_of: impl Fn(usize) -> usize) -> Vec<String> {
    table
        .iter()
        .filter_map(|&(p, l, want)| {
            let got = dpos(entries, p, l, k_of(l));
            (got != want).then(|| format!("{} L={l}: {got} (baseline {want})", p.name()))
        })
        .collect()
}

fn local_contrast(entries: &[Entry]) -> Result<Verdict> {
    let mut ok = true;
    let mut parts = Vec::new();
    for l in SIZES {
        let i = dpos(entries, Preset::Integrable, l, 4);
        let n = dpos(entries, Preset::Nonintegrable, l, 4);
        ok &= i >= n;
        parts.push(format!("L={l} int {i} / nonint {n}"));
    }
    let i12 = dpos(entries, Preset::Integrable, 12, 4);
    ok &= i12 > 0;
    verdict(ok, parts.join(", "))
}

fn global_growth(entries: &[Entry]) -> Result<Verdict> {
    let mut ok = true;
    let mut parts = Vec::new();
    for preset in PRESETS {
        let series: Vec<usize> = SIZES.iter().map(|&l| dpos(entries, preset, l, l / 2)).collect();
        ok &= series.windows(2).all(|w| w[1] > w[0]);
        parts.push(format!("{} {series:?}", preset.name()));
    }
    verdict(ok, format!("D_pos at L={SIZES:?}, k=L/2: {}", parts.join(", ")))
}

fn entropy_mechanism(entries: &[Entry]) -> Result<Verdict> {
    let traj = &find(entries, Preset::Integrable, 12, 4).out.trajectory;
    let Some(ee) = final_ee_report(traj) else {
        return verdict(false, "no entropy data in the L=12 run");
    };
    let w = traj.final_w();
    let counted: Vec<f64> = ee
        .records
        .iter()
        .zip(w)
        .filter(|(_, &w)| w >= EPS)
        .map(|(r, _)| r.st - r.s0)
        .collect();
    let up = counted.iter().filter(|&&d| d > 0.0).count();
    let frac = up as f64 / counted.len().max(1) as f64;
    let min_gain = counted.iter().copied().fold(f64::INFINITY, f64::min);
    verdict(
        !counted.is_empty() && frac >= 0.95,
        format!(
            "{up} of {} counted states gained entropy ({:.1}%), smallest St-S0 {min_gain:.4}",
            counted.len(),
            100.0 * frac
        ),
    )
}

fn threshold_robustness(entries: &[Entry]) -> Result<Verdict> {
    let dirs = [
        find(entries, Preset::Integrable, 12, 4).dir.clone(),
        find(entries, Preset::Nonintegrable, 12, 4).dir.clone(),
    ];
    let rows = run_threshold_sweep(&dirs, &THRESHOLDS)?;
    let (int_rows, non_rows) = rows.split_at(THRESHOLDS.len());
    let gaps: Vec<i64> = int_rows
        .iter()
        .zip(non_rows)
        .map(|(i, n)| i.d_pos as i64 - n.d_pos as i64)
        .collect();
    let signs: BTreeSet<i64> = gaps.iter().map(|g| g.signum()).collect();
    let detail = int_rows
        .iter()
        .zip(non_rows)
        .map(|(i, n)| format!("eps={} int {} / nonint {}", i.epsilon, i.d_pos, n.d_pos))
        .collect::<Vec<_>>()
        .join(", ");
    verdict(signs.len() == 1, format!("L=12 k=4 archives: {detail}"))
}

// ---------------------------------------------------------------------------
// 5. KKT and gradient properties at L = 8

fn kkt_suite() -> Result<Verdict> {
    let l = 8;
    let ld = l as f64 * (l as f64).exp2();
    let c = default_norm_bound(l);
    let params = RewardParams::default();
    let mut notes = Vec::new();
    let mut ok = true;

    // (i) and (v) along a full optimized run, with dr/dt recomputed from dw/dt.
    let p = problem(Preset::Integrable, l)?;
    let (_, pc) = local_controls(&p, 4)?;
    let cfg = OptimizerConfig::new(0.002, 1.0)?;
    let out = optimize(&cfg, &p, &pc)?;
    let mut worst_norm = 0.0f64;
    let mut min_dr = f64::INFINITY;
    let mut active = 0;
    for (rec, gamma) in out.trajectory.steps.iter().zip(&out.protocol.gammas) {
        if rec.vanished {
            continue;
        }
        active += 1;
        let sq: f64 = gamma.iter().map(|g| g * g).sum();
        worst_norm = worst_norm.max((sq - 2.0).abs());
        min_dr = min_dr.min(rec.dr_dt);
    }
    let mut worst_dr = 0.0f64;
    let mut dr_checks = 0;
    evolve(
        &mut StateBatch::from_shell(&p.eig, &p.shell),
        &out.protocol,
        &pc,
        SampleSchedule { every: 100 },
        |step, b| {
            if step >= out.protocol.steps() {
                return Ok(());
            }
            let w = work_density(b, &p.h_target, l)?;
            let g = reward_grad(&w, &params);
            let y = compute_y(b, &p.h_target, &pc.mats, &g, l)?;
            let rate = work_rate(b, &p.h_target, &pc.mats, &out.protocol.gammas[step], l)?;
            let dr: f64 = rate.iter().zip(&g).map(|(r, g)| r * g).sum();
            let closed = c * l2_norm(&y) / ld.sqrt();
            worst_dr = worst_dr.max((dr - closed).abs() / closed.max(1.0));
            dr_checks += 1;
            Ok(())
        },
    )?;
    let i_ok = active > 0 && worst_norm < 1e-9;
    let v_ok = min_dr >= 0.0 && dr_checks > 0 && worst_dr < 1e-9;
    ok &= i_ok && v_ok;
    notes.push(format!("(i) {active} active steps, max |Σγ²-2| {worst_norm:.1e}"));
    notes.push(format!("(v) min dr/dt {min_dr:.3e}, chain-rule deviation {worst_dr:.1e} at {dr_checks} steps"));

    // (ii) Unkicked eigenstates give Y = 0 for every weighting.
    let mut worst_y = 0.0f64;
    for preset in PRESETS {
        let p = problem(preset, l)?;
        let (_, pc) = local_controls(&p, 4)?;
        let b = StateBatch::from_shell(&p.eig, &p.shell);
        let tol = default_vanish_tol(pc.len());
        let mut weights = vec![vec![1.0; b.len()]];
        weights.extend((0..b.len()).map(|j| (0..b.len()).map(|i| (i == j) as u8 as f64).collect()));
        for g in &weights {
            let y = compute_y(&b, &p.h_target, &pc.mats, g, l)?;
            worst_y = worst_y.max(l2_norm(&y) / tol);
        }
    }
    ok &= worst_y <= 1.0;
    notes.push(format!("(ii) max |Y|/tol {worst_y:.1e}"));

    // (iii) Finite-difference dw/dt with first-order convergence.
    let p = problem(Preset::Nonintegrable, l)?;
    let (_, pc) = local_controls(&p, 3)?;
    let mut b = StateBatch::from_shell(&p.eig, &p.shell);
    pc.apply_kick(&mut b, Kick { duration: 0.05 })?;
    let w0 = work_density(&b, &p.h_target, l)?;
    let g = reward_grad(&w0, &params);
    let y = compute_y(&b, &p.h_target, &pc.mats, &g, l)?;
    let gamma = solve_gamma(&y, c, l, default_vanish_tol(y.len())).gamma;
    let rate = work_rate(&b, &p.h_target, &pc.mats, &gamma, l)?;
    let h = control_hamiltonian(&gamma, &pc.mats)?;
    let errs = [4e-3, 2e-3, 1e-3, 5e-4]
        .iter()
        .map(|&dt| {
            let mut bb = b.clone();
            bb.apply(&expm_step(&h, dt)?, dt);
            let w1 = work_density(&bb, &p.h_target, l)?;
            Ok(w0
                .iter()
                .zip(&w1)
                .zip(&rate)
                .map(|((a, c), r)| ((c - a) / dt - r).abs())
                .fold(0.0, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?;
    let ratios: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
    let iii_ok = ratios.iter().all(|r| (1.8..2.2).contains(r));
    ok &= iii_ok;
    notes.push(format!(
        "(iii) error ratios under halving {}",
        ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join("/")
    ));

    // (iv) reward_grad against central differences.
    let hstep = 1e-6;
    let ws: Vec<f64> = (0..=600).map(|i| -0.5 + i as f64 * 0.002 + 3e-5).collect();
    let grad = reward_grad(&ws, &params);
    let worst_grad = ws
        .iter()
        .zip(&grad)
        .map(|(&w, g)| {
            let fd = (reward(&[w + hstep], &params) - reward(&[w - hstep], &params)) / (2.0 * hstep);
            (g - fd).abs()
        })
        .fold(0.0, f64::max);
    ok &= worst_grad < 1e-6;
    notes.push(format!("(iv) max |grad - fd| {worst_grad:.1e}"));

    verdict(ok, notes.join("; "))
}

// ---------------------------------------------------------------------------
// 6. Operator sets

/// Number of `B_k` elements by brute force: dihedral orbits of non-identity
/// letter strings whose support fits some cyclic window of `k` sites.
fn dihedral_orbit_count(l: usize, k: usize) -> usize {
    let mut orbits = BTreeSet::new();
    let mut letters = vec![0u8; l];
    for code in 1..4usize.pow(l as u32) {
        for (i, slot) in letters.iter_mut().enumerate() {
            *slot = ((code >> (2 * i)) & 3) as u8;
        }
        let fits = (0..l).any(|s| (0..l).all(|i| letters[i] == 0 || (i + l - s) % l < k));
        if !fits {
            continue;
        }
        let canon = (0..l)
            .flat_map(|s| {
                let fwd: Vec<u8> = (0..l).map(|i| letters[(i + s) % l]).collect();
                let rev: Vec<u8> = (0..l).map(|i| letters[(l + s - i) % l]).collect();
                [fwd, rev]
            })
            .min()
            .unwrap();
        orbits.insert(canon);
    }
    orbits.len()
}

fn operator_suite() -> Result<Verdict> {
    let mut worst_gram = 0.0f64;
    let mut worst_dense = 0.0f64;
    let mut asym = Vec::new();
    let mut count_mismatch = Vec::new();
    for l in [4, 6, 8] {
        for k in [2, 3, 4] {
            let ops = build_basis(l, k)?;
            let ld = l as f64 * (l as f64).exp2();
            for (i, a) in ops.iter().enumerate() {
                if !(a.is_translation_invariant() && a.is_inversion_invariant()) {
                    asym.push(format!("L={l} {}", a.label()));
                }
                for (j, b) in ops.iter().enumerate().skip(i) {
                    let want = if i == j { ld } else { 0.0 };
                    worst_gram = worst_gram.max((a.frobenius_inner(b) - C64::new(want, 0.0)).norm() / ld);
                }
            }
            if l <= 6 {
                let dense: Vec<Mat<C64>> = ops.iter().map(|o| o.to_full_matrix()).collect();
                for (i, a) in dense.iter().enumerate() {
                    for (j, b) in dense.iter().enumerate().skip(i) {
                        let mut tr = ZERO;
                        for c in 0..a.ncols() {
                            for r in 0..a.nrows() {
                                tr += a[(r, c)].conj() * b[(r, c)];
                            }
                        }
                        let want = if i == j { ld } else { 0.0 };
                        worst_dense = worst_dense.max((tr - C64::new(want, 0.0)).norm() / ld);
                    }
                }
            }
            let oracle = dihedral_orbit_count(l, k);
            if oracle != ops.len() {
                count_mismatch.push(format!("L={l} k={k}: {} vs {oracle}", ops.len()));
            }
        }
    }
    let b2 = build_basis(8, 2)?.len();
    let ok = worst_gram < 1e-9 && worst_dense < 1e-9 && asym.is_empty() && count_mismatch.is_empty() && b2 == 9;
    verdict(
        ok,
        format!(
            "Gram deviation {worst_gram:.1e} (dense {worst_dense:.1e}), {} non-invariant, |B_2|={b2}, count mismatches {:?}",
            asym.len(),
            count_mismatch
        ),
    )
}

// ---------------------------------------------------------------------------
// 7. Spectra and sectors

fn spectral_suite() -> Result<Verdict> {
    let mut worst_sub = 0.0f64;
    for l in 2..=6 {
        for params in [
            Preset::Integrable.params(l),
            Preset::Nonintegrable.params(l),
            IsingParams { h: -0.37, g: 1.21, n_sites: l },
        ] {
            let op = build_ising(&params)?;
            let sector = SectorBasis::new(l)?;
            let sec = diagonalize(&project_operator(&op, &sector)?, l)?;
            let full = hermitian_eigen(&SectorMatrix::new(op.to_full_matrix())?)?;
            for e in &sec.energies {
                let d = full.values.iter().map(|f| (f - e).abs()).fold(f64::INFINITY, f64::min);
                worst_sub = worst_sub.max(d);
            }
        }
    }

    let sector = SectorBasis::new(4)?;
    let classical = build_ising(&IsingParams { h: 0.0, g: 0.0, n_sites: 4 })?;
    let e4 = diagonalize(&project_operator(&classical, &sector)?, 4)?.energies;
    let want = [-4.0, 0.0, 0.0, 0.0, 4.0, 4.0];
    let l4_ok = e4.len() == want.len() && e4.iter().zip(&want).all(|(a, b)| (a - b).abs() < 1e-9);

    let mut worst_ortho = 0.0f64;
    for l in 2..=12 {
        let sector = SectorBasis::new(l)?;
        let e = embedding_matrix(&sector);
        let mut vs = vec![e.clone()];
        if l % 2 == 0 && l <= 10 {
            let p = problem(Preset::Nonintegrable, l)?;
            vs.push(&e * &p.eig.states);
        }
        for v in vs {
            let gram = v.adjoint() * &v;
            for j in 0..gram.ncols() {
                for i in 0..gram.nrows() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    worst_ortho = worst_ortho.max((gram[(i, j)] - C64::new(want, 0.0)).norm());
                }
            }
        }
    }
    verdict(
        worst_sub < 1e-9 && l4_ok && worst_ortho < 1e-12,
        format!("sector-in-full deviation {worst_sub:.1e}, L=4 classical {e4:?}, orthonormality {worst_ortho:.1e}"),
    )
}

// ---------------------------------------------------------------------------

/// Reruns the L = 12, k = 4 pair at half the time step and compares.
fn half_step_convergence(entries: &[Entry]) -> Result<String> {
    let parts = PRESETS
        .par_iter()
        .map(|&preset| {
            let coarse = &find(entries, preset, 12, 4).out;
            let mut cfg = ExperimentConfig::optimize_preset(preset, 12, 4);
            cfg.time.dt = Some(coarse.config.dt / 2.0);
            cfg.time.entropy = Some(false);
            let fine = run(&cfg.resolve()?)?;
            let dw = coarse
                .trajectory
                .final_w()
                .iter()
                .zip(fine.trajectory.final_w())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            Ok(format!(
                "{} D_pos {} -> {}, max |dw| {dw:.2e}",
                preset.name(),
                coarse.trajectory.final_d_pos(),
                fine.trajectory.final_d_pos()
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.join("; "))
}

// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    use_sequential_kernels();
    let mut all = true;

    let t = Instant::now();
    all &= report(1, "quench null result", t, quench_null());

    let root = tempfile::tempdir().expect("temporary directory");
    let t = Instant::now();
    let entries = sweep(root.path()).map_err(|e| e.to_string());
    let sweep_secs = t.elapsed().as_secs_f64();
    match &entries {
        Ok(entries) => {
            println!("optimized sweep: {} runs in {sweep_secs:.1} s", entries.len());
            let t = Instant::now();
            all &= report(2, "local control contrast", t, local_contrast(entries));
            let t = Instant::now();
            all &= report(3, "global control growth", t, global_growth(entries));
            let t = Instant::now();
            all &= report(4, "entropy mechanism", t, entropy_mechanism(entries));
        }
        Err(e) => {
            for (id, name) in [(2, "local control contrast"), (3, "global control growth"), (4, "entropy mechanism")] {
                all &= report(id, name, t, Err(Error::Numerical(e.clone())));
            }
        }
    }

    let t = Instant::now();
    all &= report(5, "KKT and gradient properties", t, kkt_suite());
    let t = Instant::now();
    all &= report(6, "operator sets", t, operator_suite());
    let t = Instant::now();
    all &= report(7, "spectra and sectors", t, spectral_suite());

    let t = Instant::now();
    match &entries {
        Ok(entries) => all &= report(8, "threshold robustness", t, threshold_robustness(entries)),
        Err(e) => all &= report(8, "threshold robustness", t, Err(Error::Numerical(e.clone()))),
    }

    if let Ok(entries) = &entries {
        let mut drift = baseline_drift(entries, &BASELINE_LOCAL, |_| 4);
        drift.extend(baseline_drift(entries, &BASELINE_HALF, |l| l / 2));
        if drift.is_empty() {
            println!("baselines: all 12 final D_pos values match");
        } else {
            println!("baselines: drift in {}", drift.join(", "));
        }
    }

    if let Ok(entries) = &entries {
        match half_step_convergence(entries) {
            Ok(line) => println!("convergence at dt/2: {line}"),
            Err(e) => println!("convergence at dt/2: error: {e}"),
        }
    }

    if all {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: at least one criterion failed");
        ExitCode::FAILURE
    }
}
