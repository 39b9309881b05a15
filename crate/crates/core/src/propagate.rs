//! Piecewise-constant unitary evolution of batches of sector states.

use std::collections::HashMap;
use std::fmt::Write as _;

use faer::Mat;

use crate::basis::{ControlBasis, ManifestKind};
use crate::error::{Error, Result};
use crate::linalg::{expm_hermitian, SectorMatrix, SparseSectorMatrix, C64};
use crate::model::{EigenDecomposition, EnergyShell, IsingParams};
use crate::operator::SymmetrizedOperator;
use crate::pauli::{Axis, PauliString};
use crate::sector::{project_operator_sparse, SectorBasis};

/// Column-norm drift allowed before a run is declared inconsistent.
pub const NORM_DRIFT_TOL: f64 = 1e-8;

/// Shell eigenstates evolved together; column `j` started as eigenstate
/// `alphas[j]` with energy `energies[j]`.
#[derive(Clone, Debug)]
pub struct StateBatch {
    states: Mat<C64>,
    time: f64,
    energies: Vec<f64>,
    alphas: Vec<usize>,
}

impl StateBatch {
    pub fn from_shell(eig: &EigenDecomposition, shell: &EnergyShell) -> Self {
        let dim = eig.dim();
        let states = Mat::from_fn(dim, shell.len(), |i, j| eig.states[(i, shell.members[j])]);
        StateBatch {
            states,
            time: 0.0,
            energies: shell.members.iter().map(|&a| eig.energies[a]).collect(),
            alphas: shell.members.clone(),
        }
    }

    pub fn new(states: Mat<C64>, energies: Vec<f64>, alphas: Vec<usize>) -> Result<Self> {
        if states.ncols() != energies.len() || energies.len() != alphas.len() {
            return Err(Error::InvalidArgument("batch column bookkeeping mismatch".into()));
        }
        Ok(StateBatch {
            states,
            time: 0.0,
            energies,
            alphas,
        })
    }

    pub fn states(&self) -> &Mat<C64> {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.states.ncols() == 0
    }

    pub fn dim(&self) -> usize {
        self.states.nrows()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn alphas(&self) -> &[usize] {
        &self.alphas
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.dim()).map(|i| self.states[(i, j)]).collect()
    }

    /// Left-multiplies every column by `u` and advances the clock.
    pub fn apply(&mut self, u: &Mat<C64>, dt: f64) {
        self.states = u * &self.states;
        self.time += dt;
    }

    /// Largest `| ‖ψ_j‖ - 1 |` over columns.
    pub fn max_norm_drift(&self) -> f64 {
        (0..self.len())
            .map(|j| (self.states.col(j).norm_l2() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn check_norms(&self) -> Result<()> {
        let drift = self.max_norm_drift();
        if drift > NORM_DRIFT_TOL {
            return Err(Error::Numerical(format!("state norm drift {drift:e}")));
        }
        Ok(())
    }
}

/// `exp(-i δt H)`.
pub fn expm_step(h: &SectorMatrix, dt: f64) -> Result<Mat<C64>> {
    expm_hermitian(h, dt)
}

/// `Σ_i γ_i Q_i` as a dense sector matrix.
pub fn control_hamiltonian(gamma: &[f64], mats: &[SparseSectorMatrix]) -> Result<SectorMatrix> {
    let dim = mats.first().map_or(0, SparseSectorMatrix::dim);
    let mut h = Mat::zeros(dim, dim);
    for (g, m) in gamma.iter().zip(mats) {
        if *g != 0.0 {
            m.add_scaled_into(&mut h, *g);
        }
    }
    SectorMatrix::new(h)
}

/// The symmetry-breaking kick `Σ_l X_l`.
pub fn kick_generator(n_sites: usize) -> Result<SymmetrizedOperator> {
    let x = PauliString::new(&[(0, Axis::X)], n_sites)?;
    SymmetrizedOperator::new("kick:sum-x", 1, n_sites, SymmetrizedOperator::translation_sum(1.0, &x))
}

/// Evolution for `duration` under `Σ_l X_l`, applied before the first step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kick {
    pub duration: f64,
}

/// Header fields that make a protocol file replayable on its own.
#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolHeader {
    pub model: IsingParams,
    pub shell_lo: f64,
    pub shell_hi: f64,
    pub kind: ManifestKind,
    pub basis_checksum: String,
    pub dt: f64,
    pub kick: Option<Kick>,
}

/// Time grid plus one coefficient row per step over an operator manifest.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlProtocol {
    pub header: ProtocolHeader,
    pub gammas: Vec<Vec<f64>>,
}

const PROTOCOL_TAG: &str = "# eigenwork protocol v1";

impl ControlProtocol {
    pub fn steps(&self) -> usize {
        self.gammas.len()
    }

    pub fn duration(&self) -> f64 {
        self.gammas.len() as f64 * self.header.dt
    }

    /// The inverse evolution: steps reversed with negated coefficients, no kick.
    pub fn reversed(&self) -> Self {
        ControlProtocol {
            header: ProtocolHeader {
                kick: None,
                ..self.header.clone()
            },
            gammas: self
                .gammas
                .iter()
                .rev()
                .map(|row| row.iter().map(|g| -g).collect())
                .collect(),
        }
    }

    pub fn to_text(&self) -> String {
        let h = &self.header;
        let mut out = String::new();
        let _ = writeln!(out, "{PROTOCOL_TAG}");
        let _ = writeln!(out, "L={}", h.model.n_sites);
        let _ = writeln!(out, "model h={:.16e} g={:.16e}", h.model.h, h.model.g);
        let _ = writeln!(out, "shell lo={:.16e} hi={:.16e}", h.shell_lo, h.shell_hi);
        let _ = writeln!(out, "basis {}", h.kind);
        let _ = writeln!(out, "basis_checksum={}", h.basis_checksum);
        let _ = writeln!(out, "dt={:.16e}", h.dt);
        let _ = writeln!(out, "steps={}", self.gammas.len());
        let _ = writeln!(out, "duration={:.16e}", self.duration());
        match h.kick {
            Some(k) => {
                let _ = writeln!(out, "kick sum-x {:.16e}", k.duration);
            }
            None => {
                let _ = writeln!(out, "kick none");
            }
        }
        for row in &self.gammas {
            out.push_str("gamma");
            for g in row {
                let _ = write!(out, " {g:.16e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |what: &str| Error::Parse(format!("protocol file: {what}"));
        let mut lines = text.lines();
        if lines.next() != Some(PROTOCOL_TAG) {
            return Err(bad("missing format tag"));
        }
        let mut field = |prefix: &str| -> Result<String> {
            lines
                .next()
                .and_then(|l| l.strip_prefix(prefix))
                .map(str::to_string)
                .ok_or_else(|| bad(prefix.trim()))
        };
        let num = |s: &str| -> Result<f64> { s.parse().map_err(|_| bad(&format!("number {s:?}"))) };
        let n_sites: usize = field("L=")?.parse().map_err(|_| bad("L"))?;
        let model = field("model ")?;
        let (mh, mg) = model.split_once(' ').ok_or_else(|| bad("model"))?;
        let h = num(mh.strip_prefix("h=").ok_or_else(|| bad("model h"))?)?;
        let g = num(mg.strip_prefix("g=").ok_or_else(|| bad("model g"))?)?;
        let shell = field("shell ")?;
        let (slo, shi) = shell.split_once(' ').ok_or_else(|| bad("shell"))?;
        let shell_lo = num(slo.strip_prefix("lo=").ok_or_else(|| bad("shell lo"))?)?;
        let shell_hi = num(shi.strip_prefix("hi=").ok_or_else(|| bad("shell hi"))?)?;
        let kind: ManifestKind = field("basis ")?.parse()?;
        let basis_checksum = field("basis_checksum=")?;
        let dt = num(&field("dt=")?)?;
        let steps: usize = field("steps=")?.parse().map_err(|_| bad("steps"))?;
        let duration = num(&field("duration=")?)?;
        let kick_line = field("kick ")?;
        let kick = if kick_line == "none" {
            None
        } else {
            let d = kick_line.strip_prefix("sum-x ").ok_or_else(|| bad("kick"))?;
            Some(Kick { duration: num(d)? })
        };
        let mut gammas = Vec::with_capacity(steps);
        for line in lines {
            let row = line.strip_prefix("gamma").ok_or_else(|| bad("gamma row"))?;
            gammas.push(row.split_whitespace().map(num).collect::<Result<Vec<f64>>>()?);
        }
        if gammas.len() != steps {
            return Err(bad(&format!("expected {steps} rows, found {}", gammas.len())));
        }
        if (steps as f64 * dt - duration).abs() > 1e-12 {
            return Err(bad("steps * dt disagrees with declared duration"));
        }
        Ok(ControlProtocol {
            header: ProtocolHeader {
                model: IsingParams { h, g, n_sites },
                shell_lo,
                shell_hi,
                kind,
                basis_checksum,
                dt,
                kick,
            },
            gammas,
        })
    }
}

/// Sector matrices of a control manifest together with the kick generator.
pub struct ProjectedControls {
    pub kind: ManifestKind,
    pub checksum: String,
    pub mats: Vec<SparseSectorMatrix>,
    pub kick: SparseSectorMatrix,
}

impl ProjectedControls {
    pub fn new(basis: &ControlBasis, sector: &SectorBasis) -> Result<Self> {
        Ok(ProjectedControls {
            kind: basis.kind,
            checksum: basis.checksum(),
            mats: basis.project(sector)?,
            kick: project_operator_sparse(&kick_generator(sector.n_sites())?, sector)?,
        })
    }

    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }

    pub fn apply_kick(&self, batch: &mut StateBatch, kick: Kick) -> Result<()> {
        let u = expm_step(&self.kick.to_sector_matrix()?, kick.duration)?;
        batch.apply(&u, 0.0);
        Ok(())
    }
}

/// Which step indices the observer sees.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleSchedule {
    pub every: usize,
}

impl SampleSchedule {
    pub fn is_sample(&self, step: usize, total: usize) -> bool {
        step == total || (self.every > 0 && step % self.every == 0)
    }
}

/// Replays `protocol` on `batch`.
///
/// The kick (if any) is applied first and the clock restarts at zero after
/// it. `observer(step, batch)` runs on the state at `t = step·δt` for every
/// sampled step in `0..=N_t`.
pub fn evolve<F>(
    batch: &mut StateBatch,
    protocol: &ControlProtocol,
    controls: &ProjectedControls,
    schedule: SampleSchedule,
    mut observer: F,
) -> Result<()>
where
    F: FnMut(usize, &StateBatch) -> Result<()>,
{
    let header = &protocol.header;
    if header.basis_checksum != controls.checksum || header.kind != controls.kind {
        return Err(Error::ManifestMismatch(format!(
            "protocol expects {} ({}), controls are {} ({})",
            header.kind, header.basis_checksum, controls.kind, controls.checksum
        )));
    }
    if let Some(row) = protocol.gammas.iter().find(|r| r.len() != controls.len()) {
        return Err(Error::ManifestMismatch(format!(
            "row of length {} for a manifest of {} operators",
            row.len(),
            controls.len()
        )));
    }
    if batch.dim() != controls.kick.dim() {
        return Err(Error::ManifestMismatch("batch and controls live in different sectors".into()));
    }
    if let Some(kick) = header.kick {
        controls.apply_kick(batch, kick)?;
    }
    batch.set_time(0.0);
    let total = protocol.steps();
    // Fixed action sets revisit the same few unitaries.
    let cacheable = !matches!(controls.kind, ManifestKind::Local { .. });
    let mut cache: HashMap<Vec<u64>, Mat<C64>> = HashMap::new();
    for (step, row) in protocol.gammas.iter().enumerate() {
        if schedule.is_sample(step, total) {
            observer(step, batch)?;
        }
        let key: Vec<u64> = row.iter().map(|g| g.to_bits()).collect();
        let u = match cache.get(&key) {
            Some(u) => u.clone(),
            None => {
                let u = expm_step(&control_hamiltonian(row, &controls.mats)?, header.dt)?;
                if cacheable {
                    cache.insert(key, u.clone());
                }
                u
            }
        };
        batch.apply(&u, header.dt);
        batch.set_time((step + 1) as f64 * header.dt);
    }
    if schedule.is_sample(total, total) {
        observer(total, batch)?;
    }
    batch.check_norms()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, ZERO};
    use crate::model::{build_ising, diagonalize, select_shell, Preset};
    use crate::sector::{embedding_matrix, project_operator};

    fn setup(l: usize, k: usize) -> (SectorBasis, EigenDecomposition, EnergyShell, ControlBasis, ProjectedControls) {
        let sector = SectorBasis::new(l).unwrap();
        let h = project_operator(&build_ising(&Preset::Nonintegrable.params(l)).unwrap(), &sector).unwrap();
        let eig = diagonalize(&h, l).unwrap();
        let shell = select_shell(&eig.energies, l, -1.0, 0.5).unwrap();
        let cb = ControlBasis::build(ManifestKind::Local { k }, l).unwrap();
        let pc = ProjectedControls::new(&cb, &sector).unwrap();
        (sector, eig, shell, cb, pc)
    }

    fn protocol(cb: &ControlBasis, l: usize, gammas: Vec<Vec<f64>>, dt: f64) -> ControlProtocol {
        ControlProtocol {
            header: ProtocolHeader {
                model: Preset::Nonintegrable.params(l),
                shell_lo: -1.0,
                shell_hi: 0.5,
                kind: cb.kind,
                basis_checksum: cb.checksum(),
                dt,
                kick: Some(Kick { duration: 0.001 }),
            },
            gammas,
        }
    }

    fn pseudo_random_rows(n_rows: usize, width: usize) -> Vec<Vec<f64>> {
        let mut x = 0x2545_f491_4f6c_dd1du64;
        (0..n_rows)
            .map(|_| {
                (0..width)
                    .map(|_| {
                        x ^= x << 13;
                        x ^= x >> 7;
                        x ^= x << 17;
                        (x % 2001) as f64 / 1000.0 - 1.0
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn empty_protocol_leaves_batch_unchanged() {
        let (_, eig, shell, cb, pc) = setup(6, 2);
        let mut batch = StateBatch::from_shell(&eig, &shell);
        let before = batch.states().clone();
        let mut p = protocol(&cb, 6, vec![], 0.01);
        p.header.kick = None;
        let mut seen = Vec::new();
        evolve(&mut batch, &p, &pc, SampleSchedule { every: 1 }, |s, _| {
            seen.push(s);
            Ok(())
        })
        .unwrap();
        assert_eq!(seen, vec![0]);
        assert_eq!(max_abs_diff(before.as_ref(), batch.states().as_ref()), 0.0);
    }

    #[test]
    fn unitarity_over_a_thousand_steps() {
        let (_, eig, shell, cb, pc) = setup(6, 2);
        let mut batch = StateBatch::from_shell(&eig, &shell);
        let p = protocol(&cb, 6, pseudo_random_rows(1000, cb.len()), 0.01);
        evolve(&mut batch, &p, &pc, SampleSchedule { every: 0 }, |_, _| Ok(())).unwrap();
        assert!(batch.max_norm_drift() < 1e-8);
        assert!((batch.time() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn reversed_protocol_undoes_evolution() {
        let (_, eig, shell, cb, pc) = setup(6, 2);
        let mut batch = StateBatch::from_shell(&eig, &shell);
        let start = batch.states().clone();
        let mut p = protocol(&cb, 6, pseudo_random_rows(500, cb.len()), 0.004);
        p.header.kick = None;
        evolve(&mut batch, &p, &pc, SampleSchedule { every: 0 }, |_, _| Ok(())).unwrap();
        assert!(max_abs_diff(start.as_ref(), batch.states().as_ref()) > 1e-3);
        evolve(&mut batch, &p.reversed(), &pc, SampleSchedule { every: 0 }, |_, _| Ok(())).unwrap();
        assert!(max_abs_diff(start.as_ref(), batch.states().as_ref()) < 1e-7);
    }

    #[test]
    fn manifest_mismatch_is_rejected() {
        let (_, eig, shell, cb, pc) = setup(4, 2);
        let mut batch = StateBatch::from_shell(&eig, &shell);
        let mut p = protocol(&cb, 4, vec![vec![0.0; cb.len() + 1]], 0.01);
        assert!(matches!(
            evolve(&mut batch, &p, &pc, SampleSchedule { every: 1 }, |_, _| Ok(())),
            Err(Error::ManifestMismatch(_))
        ));
        p.gammas = vec![vec![0.0; cb.len()]];
        p.header.basis_checksum = "feed".into();
        assert!(evolve(&mut batch, &p, &pc, SampleSchedule { every: 1 }, |_, _| Ok(())).is_err());
    }

    #[test]
    fn sector_step_commutes_with_embedding() {
        for l in [3, 4] {
            let sector = SectorBasis::new(l).unwrap();
            let cb = ControlBasis::build(ManifestKind::Local { k: 2 }, l).unwrap();
            let gamma: Vec<f64> = (0..cb.len()).map(|i| 0.3 - 0.1 * i as f64).collect();
            let parts: Vec<(f64, &SymmetrizedOperator)> = gamma.iter().copied().zip(&cb.ops).collect();
            let h_op = SymmetrizedOperator::linear_combination("h", &parts).unwrap();
            let u_sec = expm_step(&project_operator(&h_op, &sector).unwrap(), 0.37).unwrap();
            let u_full = expm_step(&SectorMatrix::new(h_op.to_full_matrix()).unwrap(), 0.37).unwrap();
            let e = embedding_matrix(&sector);
            let lhs = &e * &u_sec;
            let rhs = &u_full * &e;
            assert!(max_abs_diff(lhs.as_ref(), rhs.as_ref()) < 1e-9);
        }
    }

    #[test]
    fn protocol_text_round_trip_is_bit_exact() {
        let (_, _, _, cb, _) = setup(4, 2);
        let mut rows = pseudo_random_rows(5, cb.len());
        rows[0][0] = 0.1 + 0.2;
        rows[1][1] = std::f64::consts::PI * 1e-17;
        let p = protocol(&cb, 4, rows, 0.002);
        let back = ControlProtocol::parse(&p.to_text()).unwrap();
        assert_eq!(back, p);
        for (a, b) in back.gammas.iter().flatten().zip(p.gammas.iter().flatten()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let q = ControlProtocol { header: ProtocolHeader { kick: None, ..p.header.clone() }, gammas: vec![] };
        assert_eq!(ControlProtocol::parse(&q.to_text()).unwrap(), q);
        assert!(ControlProtocol::parse("garbage").is_err());
        let truncated: String = p.to_text().lines().take(12).map(|l| format!("{l}\n")).collect();
        assert!(ControlProtocol::parse(&truncated).is_err());
    }

    #[test]
    fn control_hamiltonian_sums_projected_elements() {
        let (_, _, _, _, pc) = setup(4, 2);
        let g: Vec<f64> = (0..pc.len()).map(|i| i as f64).collect();
        let h = control_hamiltonian(&g, &pc.mats).unwrap();
        let mut expect = Mat::<C64>::zeros(h.dim(), h.dim());
        for (i, m) in pc.mats.iter().enumerate() {
            let d = m.to_dense();
            for c in 0..h.dim() {
                for r in 0..h.dim() {
                    expect[(r, c)] += d[(r, c)] * i as f64;
                }
            }
        }
        assert!(max_abs_diff(h.as_ref(), expect.as_ref()) < 1e-12);
        let _ = ZERO;
    }
}
