use rayon::prelude::*;
use serde_json::Value;

use super::{derive_seed, Context, ExperimentRecord, Probe, ResolvedConfig, RunError};
use crate::channels::{
    apply_channel, bitflip_qfi_formula, dephased_delta_theta_ed, ghz_dephased_delta_theta,
    global_dephasing_sensitivity_ed, ChannelKind, ChannelSpec,
};
use crate::deformed::{
    averaged_qfi, averaged_qfi_from_decoded, decoded_correlator, decoded_correlator_sampled, deform,
    enumerate_outcomes, sample_outcomes, DeformationSpec, Strength,
};
use crate::fermion::{fit_power_law, qfi_scaling_tfim, PowerLawFit};
use crate::metrology::{qfi_mixed, qfi_pure};
use crate::models::{
    ghz_state, ladder_qubit, luttinger_k, oat_aligned_state, optimal_oat_twist, solve, spin_coherent_state, ModelKind, ModelSpec,
};
use crate::numeric::TOL;
use crate::qcore::{Letter, MixedState, PauliOperator, PureState};
use crate::subsys::{parity_theta_curve, predicted_exponents, window_report, SubsystemProtocol};
use crate::symmetry::{build_symmetry, hadamard_cfi, symmetry_theta_curve, SymmetryKind, SymmetryOperator};

type Rows = Result<Vec<ExperimentRecord>, RunError>;

fn staggered_z(l: usize) -> PauliOperator {
    PauliOperator::weighted_sum(l, Letter::Z, |j| if j % 2 == 0 { 1.0 } else { -1.0 })
}

fn kind_name(k: &ModelKind) -> &'static str {
    match k {
        ModelKind::Tfim { .. } => "tfim",
        ModelKind::Xxz { .. } => "xxz",
        ModelKind::Rydberg { .. } => "rydberg",
        ModelKind::ClusterLadder { .. } => "cluster_ladder",
    }
}

/// `key=value` pairs joined by `;`, keys sorted, `kind` and size dropped.
fn params_string<T: serde::Serialize>(x: &T, skip: &[&str]) -> String {
    let Ok(Value::Object(map)) = serde_json::to_value(x) else { return String::new() };
    map.iter()
        .filter(|(k, _)| !skip.contains(&k.as_str()))
        .map(|(k, v)| match v {
            Value::String(s) => format!("{k}={s}"),
            Value::Null => format!("{k}="),
            v => format!("{k}={v}"),
        })
        .collect::<Vec<_>>()
        .join(";")
}

fn enum_name<T: serde::Serialize>(x: &T) -> String {
    match serde_json::to_value(x) {
        Ok(Value::String(s)) => s,
        _ => String::new(),
    }
}

fn tfim_couplings(model: &ModelSpec) -> (f64, f64) {
    match model.kind {
        ModelKind::Tfim { j, h } => (j.abs(), h),
        _ => (1.0, 1.0),
    }
}

/// Blank record carrying the configuration columns.
fn base(cfg: &ResolvedConfig, model: &ModelSpec, probe: &str, l: usize, observable: &str, value: f64) -> ExperimentRecord {
    let (channel, channel_params) = match &cfg.channel {
        Some(c) => (enum_name(&c.kind), params_string(c, &["kind", "p"])),
        None => ("none".to_string(), String::new()),
    };
    ExperimentRecord {
        scenario: cfg.scenario,
        model: kind_name(&model.kind).to_string(),
        model_params: params_string(model, &["kind", "sites"]),
        channel,
        channel_params,
        probe: probe.to_string(),
        l,
        l_sub: None,
        theta: None,
        p: None,
        beta: None,
        observable: observable.to_string(),
        value,
        variance: None,
        delta_theta: None,
        qfi: None,
        reference: None,
        fit_exponent: None,
        fit_prefactor: None,
        fit_r2: None,
        seed: cfg.seed,
        config_hash: cfg.config_hash.clone(),
    }
}

fn with_fit(mut r: ExperimentRecord, f: &PowerLawFit) -> ExperimentRecord {
    r.fit_exponent = Some(f.exponent);
    r.fit_prefactor = Some(f.prefactor);
    r.fit_r2 = Some(f.r_squared);
    r
}

/// Probe state with its imprinting generator.
fn probe_state(cfg: &ResolvedConfig, probe: Probe, l: usize) -> Result<(PureState, PauliOperator), RunError> {
    let (j, h) = tfim_couplings(&cfg.model);
    let sum_z = PauliOperator::sum_of(l, Letter::Z);
    Ok(match probe {
        Probe::Critical => {
            let spec = ModelSpec { sites: l, ..cfg.model.clone() };
            let psi = solve(&spec).ctx("models", "solve")?.state;
            let antiferro = match spec.kind {
                ModelKind::Tfim { j, .. } => j < 0.0,
                ModelKind::Xxz { .. } => true,
                _ => false,
            };
            (psi, if antiferro { staggered_z(l) } else { sum_z })
        }
        Probe::CriticalFm => {
            let spec = ModelSpec::tfim(l, j, h).with_boundary(cfg.model.boundary);
            (solve(&spec).ctx("models", "solve")?.state, sum_z)
        }
        Probe::CriticalAfm => {
            let spec = ModelSpec::tfim(l, -j, h).with_boundary(cfg.model.boundary);
            (solve(&spec).ctx("models", "solve")?.state, staggered_z(l))
        }
        Probe::Ghz => (ghz_state(l).ctx("models", "ghz_state")?, sum_z),
        Probe::SpinCoherent => (spin_coherent_state(l).ctx("models", "spin_coherent_state")?, sum_z),
        Probe::Oat => {
            let t = optimal_oat_twist(l).ctx("models", "optimal_oat_twist")?.twist_time;
            (oat_aligned_state(l, t).ctx("models", "oat_aligned_state")?, sum_z)
        }
    })
}

fn fit_rows(cfg: &ResolvedConfig, rows: &[ExperimentRecord], probe: &str, observable: &str, fit_name: &str) -> Rows {
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.probe == probe && r.observable == observable)
        .map(|r| (r.l as f64, r.value))
        .unzip();
    if xs.len() < 3 {
        return Ok(vec![]);
    }
    let f = fit_power_law(&xs, &ys, None).ctx("fermion", "fit_power_law")?;
    let l_max = xs.iter().fold(0.0f64, |a, &b| a.max(b)) as usize;
    Ok(vec![with_fit(base(cfg, &cfg.model, probe, l_max, fit_name, f.exponent), &f)])
}

pub(super) fn qfi_scaling(cfg: &ResolvedConfig) -> Rows {
    let points: Vec<(Probe, usize)> = cfg.probes.iter().flat_map(|&p| cfg.sizes.iter().map(move |&l| (p, l))).collect();
    let mut rows: Vec<ExperimentRecord> = points
        .par_iter()
        .map(|&(probe, l)| {
            let (psi, o) = probe_state(cfg, probe, l)?;
            let f = qfi_pure(&psi, &o).ctx("metrology", "qfi_pure")?;
            let mut r = base(cfg, &cfg.model, probe.name(), l, "qfi", f);
            r.qfi = Some(f);
            r.delta_theta = Some(1.0 / f.sqrt());
            Ok(r)
        })
        .collect::<Result<_, RunError>>()?;
    let mut fits = Vec::new();
    for p in &cfg.probes {
        fits.extend(fit_rows(cfg, &rows, p.name(), "qfi", "qfi_fit")?);
    }
    if !cfg.fermion_sizes.is_empty() {
        let (j, h) = tfim_couplings(&cfg.model);
        let s = qfi_scaling_tfim(&cfg.fermion_sizes, j, h).ctx("fermion", "qfi_scaling_tfim")?;
        for (&l, &f) in s.sizes.iter().zip(&s.qfi) {
            let mut r = base(cfg, &cfg.model, "critical_fm_free_fermion", l, "qfi", f);
            r.qfi = Some(f);
            r.delta_theta = Some(1.0 / f.sqrt());
            rows.push(r);
        }
        let l_max = *s.sizes.iter().max().unwrap();
        fits.push(with_fit(base(cfg, &cfg.model, "critical_fm_free_fermion", l_max, "qfi_fit", s.fit.exponent), &s.fit));
    }
    rows.extend(fits);
    Ok(rows)
}

fn symmetry_name(k: SymmetryKind) -> &'static str {
    match k {
        SymmetryKind::ParityX => "parity_x",
        SymmetryKind::ParityZ => "parity_z",
        SymmetryKind::Translation => "translation",
        SymmetryKind::Reflection => "reflection",
    }
}

/// Probe and symmetry for each supported protocol: `∏X` on the ferromagnet, the rest on the antiferromagnet.
fn symmetry_protocol(cfg: &ResolvedConfig, kind: SymmetryKind, l: usize) -> Result<(Probe, PureState, PauliOperator, SymmetryOperator), RunError> {
    let (probe, center) = match kind {
        SymmetryKind::ParityX => (Probe::CriticalFm, None),
        SymmetryKind::Reflection => (Probe::CriticalAfm, Some(l / 2 - 1)),
        SymmetryKind::Translation => (Probe::CriticalAfm, None),
        SymmetryKind::ParityZ => {
            return Err(RunError::Config(super::ConfigError::field("symmetries", "parity_z does not anticommute with a Z imprinter")))
        }
    };
    let (psi, o) = probe_state(cfg, probe, l)?;
    let u = build_symmetry(kind, l, center, cfg.model.boundary).ctx("symmetry", "build_symmetry")?;
    Ok((probe, psi, o, u))
}

pub(super) fn theta_curves(cfg: &ResolvedConfig) -> Rows {
    let mut rows = Vec::new();
    for &l in &cfg.sizes {
        for &kind in &cfg.symmetries {
            let (probe, psi, o, u) = symmetry_protocol(cfg, kind, l)?;
            let values = symmetry_theta_curve(&psi, &u, &o, &cfg.thetas).ctx("symmetry", "symmetry_theta_curve")?;
            let q = qfi_pure(&psi, &o).ctx("metrology", "qfi_pure")?;
            let cfi: Vec<Option<f64>> = cfg
                .thetas
                .par_iter()
                .map(|&t| {
                    if t.abs() < 1e-12 {
                        return Ok(None);
                    }
                    hadamard_cfi(&psi, &u, &o, t).map(Some).ctx("symmetry", "hadamard_cfi")
                })
                .collect::<Result<_, RunError>>()?;
            for ((&t, &v), f) in cfg.thetas.iter().zip(&values).zip(cfi) {
                let mut r = base(cfg, &cfg.model, probe.name(), l, symmetry_name(kind), v);
                r.theta = Some(t);
                r.variance = Some((1.0 - v * v).max(0.0));
                r.delta_theta = f.filter(|&f| f > 0.0).map(|f| 1.0 / f.sqrt());
                r.qfi = Some(q);
                rows.push(r);
            }
        }
    }
    Ok(rows)
}

pub(super) fn hadamard(cfg: &ResolvedConfig) -> Rows {
    let points: Vec<(usize, f64)> = cfg.sizes.iter().flat_map(|&l| cfg.thetas.iter().map(move |&t| (l, t))).collect();
    let mut rows: Vec<ExperimentRecord> = points
        .par_iter()
        .map(|&(l, t)| {
            let (probe, psi, o, u) = symmetry_protocol(cfg, SymmetryKind::Translation, l)?;
            let f = hadamard_cfi(&psi, &u, &o, t).ctx("symmetry", "hadamard_cfi")?;
            let mut r = base(cfg, &cfg.model, probe.name(), l, "translation_cfi", f);
            r.theta = Some(t);
            r.qfi = Some(qfi_pure(&psi, &o).ctx("metrology", "qfi_pure")?);
            r.delta_theta = Some(1.0 / f.sqrt());
            Ok(r)
        })
        .collect::<Result<_, RunError>>()?;
    let mut fits = Vec::new();
    for &t in &cfg.thetas {
        let (xs, ys): (Vec<f64>, Vec<f64>) =
            rows.iter().filter(|r| r.theta == Some(t)).map(|r| (r.l as f64, r.value)).unzip();
        if xs.len() >= 3 {
            let f = fit_power_law(&xs, &ys, None).ctx("fermion", "fit_power_law")?;
            let mut r = with_fit(base(cfg, &cfg.model, "critical_afm", *cfg.sizes.iter().max().unwrap(), "translation_cfi_fit", f.exponent), &f);
            r.theta = Some(t);
            fits.push(r);
        }
    }
    rows.extend(fits);
    Ok(rows)
}

pub(super) fn channel_sweep(cfg: &ResolvedConfig) -> Rows {
    let channel = cfg.channel.as_ref().expect("validated");
    let ps: Vec<Option<f64>> = if channel.kind == ChannelKind::GlobalDephase {
        vec![None]
    } else {
        cfg.p_values.iter().map(|&p| Some(p)).collect()
    };
    let mut points = Vec::new();
    for &pr in &cfg.probes {
        for &l in &cfg.sizes {
            points.extend(ps.iter().map(|&p| (pr, l, p)));
        }
    }
    let rows: Vec<Vec<ExperimentRecord>> = points
        .par_iter()
        .map(|&(probe, l, p)| channel_point(cfg, channel, probe, l, p))
        .collect::<Result<_, RunError>>()?;
    Ok(rows.into_iter().flatten().collect())
}

fn channel_point(cfg: &ResolvedConfig, channel: &ChannelSpec, probe: Probe, l: usize, p: Option<f64>) -> Rows {
    let (psi, o) = probe_state(cfg, probe, l)?;
    let spec = ChannelSpec { p: p.unwrap_or(channel.p), ..channel.clone() };
    let rho = MixedState::from_pure(&psi).ctx("qcore", "from_pure")?;
    let noisy = apply_channel(&rho, &spec).ctx("channels", "apply_channel")?;
    let f = qfi_mixed(&noisy, &o, TOL.spectral_cutoff).ctx("metrology", "qfi_mixed")?.value;
    let mut r = base(cfg, &cfg.model, probe.name(), l, "qfi", f);
    r.p = p;
    r.qfi = Some(f);
    r.delta_theta = Some(1.0 / f.sqrt());
    let mut out = Vec::new();
    match spec.kind {
        ChannelKind::BitflipX => {
            let o2 = psi.expectation(&(&o * &o)).ctx("qcore", "expectation")?.re;
            r.reference = Some(bitflip_qfi_formula(l, spec.p, o2));
        }
        ChannelKind::Zz => r.reference = Some(qfi_pure(&psi, &o).ctx("metrology", "qfi_pure")?),
        ChannelKind::DephaseZ => {
            let (name, d) = if probe == Probe::Ghz {
                ("delta_theta_parity", ghz_dephased_delta_theta(l, spec.p).ctx("channels", "ghz_dephased_delta_theta")?)
            } else {
                ("delta_theta_sy", dephased_delta_theta_ed(&psi, spec.p).ctx("channels", "dephased_delta_theta_ed")?)
            };
            let mut s = base(cfg, &cfg.model, probe.name(), l, name, d);
            s.p = p;
            s.delta_theta = Some(d);
            out.push(s);
        }
        ChannelKind::GlobalDephase => {
            if probe != Probe::Ghz {
                let d = global_dephasing_sensitivity_ed(&psi, spec.t, spec.chi)
                    .ctx("channels", "global_dephasing_sensitivity_ed")?;
                let mut s = base(cfg, &cfg.model, probe.name(), l, "delta_theta_sy", d);
                s.delta_theta = Some(d);
                out.push(s);
            }
        }
    }
    out.push(r);
    Ok(out)
}

pub(super) fn deformed(cfg: &ResolvedConfig) -> Rows {
    let points: Vec<(usize, usize, Strength)> = cfg
        .sizes
        .iter()
        .flat_map(|&r| cfg.betas.iter().map(move |&b| (r, b)))
        .enumerate()
        .map(|(i, (r, b))| (i, r, b))
        .collect();
    let rows: Vec<Vec<ExperimentRecord>> = points
        .par_iter()
        .map(|&(i, rungs, strength)| deformed_point(cfg, i, rungs, strength))
        .collect::<Result<_, RunError>>()?;
    Ok(rows.into_iter().flatten().collect())
}

fn deformed_point(cfg: &ResolvedConfig, index: usize, rungs: usize, strength: Strength) -> Rows {
    let model = ModelSpec { sites: rungs, ..cfg.model.clone() };
    let psi = solve(&model).ctx("models", "solve")?.state;
    let n = 2 * rungs;
    let sites: Vec<usize> = (0..rungs).map(|j| ladder_qubit(j, 1)).collect();
    let uniform = DeformationSpec::uniform(strength, Letter::X, sites, 1);
    let ops = uniform.observables(n);
    let far = rungs - 1;
    let zz = PauliOperator::term(n, 1.0, &[(ladder_qubit(0, 2), Letter::Z), (ladder_qubit(far, 2), Letter::Z)]);
    let beta = strength.beta();
    let row = |obs: &str, v: f64| {
        let mut r = base(cfg, &model, "critical", rungs, obs, v);
        r.beta = Some(beta);
        r
    };

    let lro = deform(&psi, &uniform).ctx("deformed", "deform")?.expectation(&zz).ctx("qcore", "expectation")?.re;
    let ens = enumerate_outcomes(&psi, &ops, strength).ctx("deformed", "enumerate_outcomes")?;
    let exact = decoded_correlator(&ens, 0, far).ctx("deformed", "decoded_correlator")?;
    let seed = derive_seed(cfg.seed, index as u64);
    let samples = sample_outcomes(&psi, &ops, strength, seed, cfg.shots).ctx("deformed", "sample_outcomes")?;
    let est = decoded_correlator_sampled(&psi, &ops, strength, &samples, 0, far).ctx("deformed", "decoded_correlator_sampled")?;
    let q_enum = averaged_qfi(&ens).ctx("deformed", "averaged_qfi")?;
    let q_dec = averaged_qfi_from_decoded(&ens).ctx("deformed", "averaged_qfi_from_decoded")?;

    let mut sampled = row("decoded_zz_sampled", est.mean);
    sampled.variance = Some(est.stderr * est.stderr);
    sampled.reference = Some(exact);
    let mut qfi = row("averaged_qfi", q_enum);
    qfi.qfi = Some(q_enum);
    qfi.reference = Some(q_dec);
    Ok(vec![row("uniform_zz", lro), row("decoded_zz_exact", exact), sampled, qfi])
}

pub(super) fn subsystem(cfg: &ResolvedConfig) -> Rows {
    let mut rows = Vec::new();
    for &l in &cfg.sizes {
        let model = ModelSpec { sites: l, ..cfg.model.clone() };
        let psi = solve(&model).ctx("models", "solve")?.state;
        let xxz = match model.kind {
            ModelKind::Xxz { anisotropy } => Some(anisotropy),
            _ => None,
        };
        let (probe, signal) = if xxz.is_some() { ("critical", "string_parity") } else { ("critical", "parity") };
        let mut reports = Vec::new();
        for &l_sub in &cfg.l_sub {
            let protocol = match xxz {
                Some(_) => SubsystemProtocol::string_parity(l, l_sub, 1, 2),
                None => SubsystemProtocol::parity(l, l_sub, model.boundary),
            }
            .ctx("subsys", "protocol")?;
            let curve = parity_theta_curve(&psi, &protocol, &cfg.thetas).ctx("subsys", "parity_theta_curve")?;
            let rep = window_report(&curve, l_sub).ctx("subsys", "window_report")?;
            for k in 0..curve.thetas.len() {
                let mut r = base(cfg, &model, probe, l, signal, curve.signal[k]);
                r.l_sub = Some(l_sub);
                r.theta = Some(curve.thetas[k]);
                r.variance = Some(curve.variance[k]);
                r.delta_theta = Some(curve.delta_theta[k]);
                r.reference = Some(rep.sql_reference);
                rows.push(r);
            }
            let mut summary = |obs: &str, v: f64, theta: Option<f64>| {
                let mut r = base(cfg, &model, probe, l, obs, v);
                r.l_sub = Some(l_sub);
                r.theta = theta;
                r.reference = Some(rep.sql_reference);
                rows.push(r);
            };
            summary("delta_min", rep.delta_min, rep.theta_min);
            summary("interior_minimum", if rep.interior { 1.0 } else { 0.0 }, None);
            summary("sub_sql_window", if rep.window { 1.0 } else { 0.0 }, None);
            for (name, v) in [("theta_l", rep.theta_l), ("theta_min", rep.theta_min), ("theta_r", rep.theta_r)] {
                if let Some(v) = v {
                    summary(name, v, None);
                }
            }
            reports.push(rep);
        }
        // exponent fits over L_sub at desk-scale sizes are indicative only
        let predicted = match xxz {
            Some(d) => Some(predicted_exponents(luttinger_k(d).ctx("models", "luttinger_k")?)),
            None => None,
        };
        let series: [(&str, Vec<(f64, f64)>, Option<f64>); 2] = [
            (
                "delta_min_fit_indicative",
                reports.iter().map(|r| (r.l_sub as f64, r.delta_min)).collect(),
                predicted.as_ref().map(|p| p.delta_min).or(Some(-5.0 / 8.0)),
            ),
            (
                "theta_min_fit_indicative",
                reports.iter().filter_map(|r| Some((r.l_sub as f64, r.theta_min?))).collect(),
                predicted.as_ref().map(|p| p.theta_min).or(Some(-7.0 / 8.0)),
            ),
        ];
        for (name, pts, reference) in series {
            if pts.len() < 3 {
                continue;
            }
            let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            let f = fit_power_law(&xs, &ys, None).ctx("fermion", "fit_power_law")?;
            let mut r = with_fit(base(cfg, &model, probe, l, name, f.exponent), &f);
            r.reference = reference;
            rows.push(r);
        }
    }
    Ok(rows)
}
