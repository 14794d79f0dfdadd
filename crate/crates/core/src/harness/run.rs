use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use super::{aggregate, Ensemble, ExperimentConfig, ExperimentKind, HarnessError, SeedPartial, SpectrumOperator};
use crate::dynamics::{log_time_grid, spin_correlator, spin_flip_experiment};
use crate::greens::{seed_moments, standard_pairs_1d, MomentEstimate, MomentPair, MomentScanConfig, SeedMoments};
use crate::matching::{
    find_corresponding_pairs, min_spacing, minami_statistic, pair_count_audit, scale_sequence, MinamiSetup,
    SectorSystems,
};
use crate::model::{
    build_anderson, build_rank_one_family, build_spin_hamiltonian, sample_potential, DisorderSpec, LatticeBox, Site,
};
use crate::spectral::{
    diagonalize, fmt_f64, fmt_site, localization_center, localization_centers, spectrum_rows,
    write_eigenvector_dump, EigenSystem, DEFAULT_EIGEN_TOL,
};
use crate::stats::{mean_stderr, weighted_line_fit};

/// Environment variable setting the worker count; defaults to the available cores.
pub const THREADS_ENV: &str = "SPINLOC_THREADS";

pub fn thread_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// CSV table with a fixed column order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| HarnessError::Internal(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedStatus {
    pub seed: u64,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputHash {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub kind: ExperimentKind,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub threads: usize,
    pub seeds: Vec<SeedStatus>,
    pub stages: Vec<StageTiming>,
    pub outputs: Vec<OutputHash>,
}

impl RunManifest {
    pub fn failed_seeds(&self) -> Vec<u64> {
        self.seeds.iter().filter(|s| !s.ok).map(|s| s.seed).collect()
    }

    /// 0 when every seed succeeded, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.seeds.iter().all(|s| s.ok) {
            0
        } else {
            2
        }
    }
}

/// Everything a run produces, before it is written to disk.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub config_hash: String,
    pub statuses: Vec<SeedStatus>,
    pub ensemble: Ensemble,
    pub tables: BTreeMap<String, Table>,
    /// summary.json contents.
    pub summary: serde_json::Value,
    /// Extra JSON files (fit.json for moment scans).
    pub json: BTreeMap<String, serde_json::Value>,
    pub binaries: BTreeMap<String, Vec<u8>>,
    pub stages: Vec<StageTiming>,
    pub threads: usize,
}

/// Kind-specific per-seed data kept for the ensemble step.
enum SeedData {
    None,
    Moments(Vec<SeedMoments>),
    DeltaMin(f64),
    Rates(Vec<(u64, f64)>),
}

struct SeedResult {
    partial: SeedPartial,
    rows: BTreeMap<&'static str, Vec<Vec<String>>>,
    data: SeedData,
    binary: Option<(String, Vec<u8>)>,
}

impl SeedResult {
    fn new(kind: ExperimentKind, seed: u64) -> Self {
        SeedResult {
            partial: SeedPartial {
                kind,
                seed,
                metrics: BTreeMap::new(),
            },
            rows: BTreeMap::new(),
            data: SeedData::None,
            binary: None,
        }
    }

    fn metric(&mut self, name: impl Into<String>, v: f64) {
        self.partial.metrics.insert(name.into(), v);
    }

    fn row(&mut self, table: &'static str, seed: u64, hash: &str, cells: Vec<String>) {
        let mut r = vec![seed.to_string(), hash.to_string()];
        r.extend(cells);
        self.rows.entry(table).or_default().push(r);
    }
}

fn headers(kind: ExperimentKind, cfg: &ExperimentConfig) -> Vec<(&'static str, Table)> {
    let t = |name: &'static str, cols: &[&str]| {
        let mut h = vec!["seed", "config_hash"];
        h.extend_from_slice(cols);
        (name, Table::new(&h))
    };
    match kind {
        ExperimentKind::Spectrum => vec![t("spectrum.csv", &["index", "eigenvalue", "center", "participation_ratio"])],
        ExperimentKind::Match => {
            let mut v = vec![
                t(
                    "pairs.csv",
                    &[
                        "k",
                        "index_plus",
                        "index_minus",
                        "overlap",
                        "gap",
                        "lambda_plus",
                        "lambda_minus",
                        "center_plus",
                        "center_minus",
                    ],
                ),
                t("spacing.csv", &["sector", "box_size", "delta_min"]),
            ];
            if cfg.matching.scale.is_some() {
                v.push(t(
                    "audit.csv",
                    &["k", "count", "lower_bound", "outer_delta_min", "spacing_threshold", "status"],
                ));
            }
            v
        }
        ExperimentKind::Tunnel => vec![t("trace.csv", &["t", "fidelity_up", "fidelity_down", "containment"])],
        ExperimentKind::Greens => vec![t(
            "moments_raw.csv",
            &["g", "target", "target_spin", "source", "source_spin", "pair_kind", "d_gamma", "value"],
        )],
        ExperimentKind::Minami => vec![t("spacing.csv", &["box_size", "delta_min"])],
        ExperimentKind::Correlator => vec![t(
            "correlator.csv",
            &["x", "y", "r", "d_gamma", "sup_amp", "sup_rate", "certified_upper_bound", "certified_rate_bound"],
        )],
    }
}

/// Shared, immutable inputs of every per-seed task.
struct Plan {
    cfg: ExperimentConfig,
    hash: String,
    lattice: LatticeBox,
    moment_cfgs: Vec<(MomentScanConfig, Vec<MomentPair>)>,
    minami: Option<MinamiSetup>,
}

impl Plan {
    fn new(cfg: &ExperimentConfig) -> Result<Self, HarnessError> {
        cfg.validate()?;
        let lattice = cfg.lattice_box()?;
        let moment_cfgs = if cfg.kind == ExperimentKind::Greens {
            let gs = &cfg.greens;
            cfg.g_values()
                .into_iter()
                .map(|g| {
                    let mc = MomentScanConfig {
                        lattice: lattice.clone(),
                        gamma: cfg.model.gamma,
                        g,
                        zeta: cfg.zeta()?,
                        law: cfg.model.disorder.clone(),
                        s: gs.s,
                        energy: gs.energy,
                        eta_im: gs.eta_im,
                        pairs: standard_pairs_1d(gs.offset, gs.r_max, gs.x_max),
                        boundary_margin: gs.boundary_margin,
                        apriori_c: gs.apriori_c,
                    };
                    let kept = mc.kept_pairs();
                    if kept.is_empty() {
                        return Err(HarnessError::Validation {
                            field: "greens".into(),
                            message: "no pair survives the boundary margin".into(),
                        });
                    }
                    Ok((mc, kept))
                })
                .collect::<Result<Vec<_>, _>>()?
        } else {
            Vec::new()
        };
        let minami = (cfg.kind == ExperimentKind::Minami).then(|| MinamiSetup {
            lattice: lattice.clone(),
            gamma: cfg.model.gamma,
            law: cfg.model.disorder.clone(),
            zeta: None,
        });
        Ok(Plan {
            cfg: cfg.clone(),
            hash: cfg.hash()?,
            lattice,
            moment_cfgs,
            minami,
        })
    }

    fn spec(&self, seed: u64) -> DisorderSpec {
        DisorderSpec {
            law: self.cfg.model.disorder.clone(),
            seed,
        }
    }

    fn sectors(&self, seed: u64) -> Result<SectorSystems, String> {
        let v = sample_potential(&self.lattice, &self.spec(seed)).map_err(|e| e.to_string())?;
        let params = self.cfg.params().map_err(|e| e.to_string())?;
        SectorSystems::build(&self.lattice, &params, &v).map_err(|e| e.to_string())
    }

    fn run_seed(&self, seed: u64) -> Result<SeedResult, String> {
        let mut out = SeedResult::new(self.cfg.kind, seed);
        let h = self.hash.as_str();
        match self.cfg.kind {
            ExperimentKind::Spectrum => {
                let v = sample_potential(&self.lattice, &self.spec(seed)).map_err(|e| e.to_string())?;
                let params = self.cfg.params().map_err(|e| e.to_string())?;
                let op = match self.cfg.spectrum.operator {
                    SpectrumOperator::Anderson => build_anderson(&self.lattice, params.gamma, &v),
                    SpectrumOperator::Plus => build_rank_one_family(&self.lattice, &params, &v),
                    SpectrumOperator::Minus => build_rank_one_family(&self.lattice, &params.with_g(-params.g), &v),
                    SpectrumOperator::Spin => build_spin_hamiltonian(&self.lattice, &params, &v),
                }
                .map_err(|e| e.to_string())?;
                let es = diagonalize(&op, DEFAULT_EIGEN_TOL).map_err(|e| e.to_string())?;
                let centers = centers_any(&es, &self.lattice)?;
                for r in spectrum_rows(&es, &centers) {
                    out.row(
                        "spectrum.csv",
                        seed,
                        h,
                        vec![r.index.to_string(), r.eigenvalue, r.center, r.participation_ratio],
                    );
                }
                let ev = es.eigenvalues();
                out.metric("lambda_min", ev[0]);
                out.metric("lambda_max", ev[ev.len() - 1]);
                out.metric("delta_min", min_spacing(ev.as_slice()).map_err(|e| e.to_string())?);
                out.metric("residual_max", es.residual_max());
                if self.cfg.spectrum.eigenvector_dump {
                    let mut buf = Vec::new();
                    write_eigenvector_dump(&mut buf, es.vectors()).map_err(|e| e.to_string())?;
                    out.binary = Some((format!("eigenvectors_{seed}.bin"), buf));
                }
            }
            ExperimentKind::Match => {
                let s = self.sectors(seed)?;
                let mc = &self.cfg.matching;
                let mut regions: Vec<(u32, LatticeBox, Option<crate::matching::ScaleLevel>)> = Vec::new();
                match &mc.scale {
                    None => regions.push((0, self.lattice.clone(), None)),
                    Some(sc) => {
                        let seq = scale_sequence(
                            &Site::new(sc.u0.clone()),
                            sc.k_max,
                            sc.beta,
                            sc.alpha,
                            sc.p,
                            Some(&s.params.zeta),
                        )
                        .map_err(|e| e.to_string())?;
                        for lvl in seq.levels {
                            if self.lattice.contains_box(&lvl.plus) {
                                regions.push((lvl.k, lvl.inner.clone(), Some(lvl)));
                            }
                        }
                    }
                }
                let mut total = 0usize;
                let mut max_overlap = 0.0f64;
                for (k, region, level) in &regions {
                    let pairs =
                        find_corresponding_pairs(&s.plus, &s.centers_plus, &s.minus, &s.centers_minus, region, mc.eps);
                    for p in &pairs {
                        max_overlap = max_overlap.max(p.overlap);
                        out.row(
                            "pairs.csv",
                            seed,
                            h,
                            vec![
                                k.to_string(),
                                p.index_plus.to_string(),
                                p.index_minus.to_string(),
                                fmt_f64(p.overlap),
                                fmt_f64(p.eigenvalue_gap),
                                fmt_f64(p.lambda_plus),
                                fmt_f64(p.lambda_minus),
                                fmt_site(&p.center_plus),
                                fmt_site(&p.center_minus),
                            ],
                        );
                    }
                    total += pairs.len();
                    if let (Some(level), Some(sc)) = (level, &mc.scale) {
                        let v = sample_potential(&self.lattice, &self.spec(seed)).map_err(|e| e.to_string())?;
                        let outer = build_anderson(&self.lattice, self.cfg.model.gamma, &v)
                            .and_then(|op| op.restrict(&level.plus))
                            .map_err(|e| e.to_string())?;
                        let outer_es = diagonalize(&outer, DEFAULT_EIGEN_TOL).map_err(|e| e.to_string())?;
                        let a = pair_count_audit(&pairs, level, outer_es.eigenvalues().as_slice(), sc.alpha);
                        let status = serde_json::to_value(a.status).map_err(|e| e.to_string())?;
                        out.row(
                            "audit.csv",
                            seed,
                            h,
                            vec![
                                k.to_string(),
                                a.count.to_string(),
                                fmt_f64(a.lower_bound),
                                fmt_f64(a.outer_delta_min),
                                fmt_f64(a.spacing_threshold),
                                status.as_str().unwrap_or_default().to_string(),
                            ],
                        );
                    }
                }
                for (name, es) in [("plus", &s.plus), ("minus", &s.minus)] {
                    let d = min_spacing(es.eigenvalues().as_slice()).map_err(|e| e.to_string())?;
                    out.row(
                        "spacing.csv",
                        seed,
                        h,
                        vec![name.to_string(), self.lattice.len().to_string(), fmt_f64(d)],
                    );
                    out.metric(format!("delta_min_{name}"), d);
                }
                out.metric("pairs", total as f64);
                out.metric("regions", regions.len() as f64);
                out.metric("max_overlap", max_overlap);
            }
            ExperimentKind::Tunnel => {
                let s = self.sectors(seed)?;
                let tc = &self.cfg.tunnel;
                let pairs =
                    find_corresponding_pairs(&s.plus, &s.centers_plus, &s.minus, &s.centers_minus, &s.lattice, tc.eps);
                let pair = pairs
                    .iter()
                    .filter(|p| p.overlap >= tc.min_overlap && p.eigenvalue_gap.abs() >= tc.min_gap)
                    .max_by(|a, b| {
                        a.center_plus
                            .l1_norm()
                            .cmp(&b.center_plus.l1_norm())
                            .then(b.index_plus.cmp(&a.index_plus))
                    })
                    .ok_or_else(|| "no corresponding pair meets the overlap and gap thresholds".to_string())?;
                let trace = spin_flip_experiment(&s, pair, tc.eps, &tc.grid).map_err(|e| e.to_string())?;
                for k in 0..trace.times.len() {
                    out.row(
                        "trace.csv",
                        seed,
                        h,
                        vec![
                            fmt_f64(trace.times[k]),
                            fmt_f64(trace.fidelity_up[k]),
                            fmt_f64(trace.fidelity_down[k]),
                            fmt_f64(trace.containment[k]),
                        ],
                    );
                }
                if let Some(tau) = trace.tau {
                    out.metric("tau", tau);
                    out.metric("fidelity_down_tau", trace.fidelity_down_at(tau));
                    out.metric("fidelity_up_2tau", trace.fidelity_up_at(2.0 * tau));
                }
                out.metric("overlap", pair.overlap);
                out.metric("center", pair.center_plus.l1_norm() as f64);
                out.metric("min_containment", trace.min_containment());
                out.metric("max_defect", trace.defect.max_defect);
                out.metric("norm_deviation_max", trace.norm_deviation_max);
            }
            ExperimentKind::Greens => {
                let mut all = Vec::with_capacity(self.moment_cfgs.len());
                for (mc, pairs) in &self.moment_cfgs {
                    let sm = seed_moments(mc, pairs, seed).map_err(|e| e.to_string())?;
                    let gs = fmt_f64(mc.g);
                    let mut bins: BTreeMap<(crate::greens::PairKind, u64), (f64, usize)> = BTreeMap::new();
                    for (p, v) in pairs.iter().zip(&sm.values) {
                        let kind = serde_json::to_value(p.kind()).map_err(|e| e.to_string())?;
                        out.row(
                            "moments_raw.csv",
                            seed,
                            h,
                            vec![
                                gs.clone(),
                                fmt_site(&p.target.x),
                                p.target.spin.sign().to_string(),
                                fmt_site(&p.source.x),
                                p.source.spin.sign().to_string(),
                                kind.as_str().unwrap_or_default().to_string(),
                                p.distance().to_string(),
                                fmt_f64(*v),
                            ],
                        );
                        let b = bins.entry((p.kind(), p.distance())).or_default();
                        b.0 += v;
                        b.1 += 1;
                    }
                    for ((kind, d), (sum, n)) in bins {
                        let kind = serde_json::to_value(kind).map_err(|e| e.to_string())?;
                        out.metric(
                            format!("g={}/{}/{d}", mc.g, kind.as_str().unwrap_or_default()),
                            sum / n as f64,
                        );
                    }
                    all.push(sm);
                }
                out.data = SeedData::Moments(all);
            }
            ExperimentKind::Minami => {
                let setup = self.minami.as_ref().expect("planned");
                let d = setup.delta_min(seed).map_err(|e| e.to_string())?;
                out.row(
                    "spacing.csv",
                    seed,
                    h,
                    vec![self.lattice.len().to_string(), fmt_f64(d)],
                );
                out.metric("delta_min", d);
                out.data = SeedData::DeltaMin(d);
            }
            ExperimentKind::Correlator => {
                let s = self.sectors(seed)?;
                let c = &self.cfg.correlator;
                let times = log_time_grid(c.t_min, c.t_max, c.points);
                let mut rates = Vec::new();
                for &r in &c.distances {
                    let x = Site::new(vec![r as i64]);
                    let rec = spin_correlator(&s, &x, &x, &times).map_err(|e| e.to_string())?;
                    out.row(
                        "correlator.csv",
                        seed,
                        h,
                        vec![
                            fmt_site(&rec.x),
                            fmt_site(&rec.y),
                            r.to_string(),
                            rec.distance.to_string(),
                            fmt_f64(rec.sup_amp),
                            fmt_f64(rec.sup_rate),
                            fmt_f64(rec.certified_amp),
                            fmt_f64(rec.certified_rate),
                        ],
                    );
                    out.metric(format!("sup_rate/r={r}"), rec.sup_rate);
                    out.metric(format!("sup_amp/r={r}"), rec.sup_amp);
                    out.metric(format!("certified_rate/r={r}"), rec.certified_rate);
                    rates.push((r, rec.sup_rate));
                }
                out.data = SeedData::Rates(rates);
            }
        }
        Ok(out)
    }
}

/// Localization centers for site-basis or spin-basis eigenvectors; a spin vector is
/// reduced to its site profile (|ψ(x,+1)|² + |ψ(x,−1)|²)^{1/2}.
fn centers_any(es: &EigenSystem, lattice: &LatticeBox) -> Result<Vec<Site>, String> {
    let n = lattice.len();
    if es.dim() == n {
        return localization_centers(es, lattice).map_err(|e| e.to_string());
    }
    (0..es.dim())
        .map(|k| {
            let v = es.vector(k);
            let profile = DVector::from_fn(n, |i, _| v[i].hypot(v[n + i]));
            localization_center(profile.as_view(), lattice).map_err(|e| e.to_string())
        })
        .collect()
}

/// ln(mean) against x with weights mean²/se²; None with fewer than three usable points.
fn log_linear_fit(points: &[(f64, f64, f64)]) -> Option<crate::stats::LineFit> {
    let usable: Vec<&(f64, f64, f64)> = points.iter().filter(|p| p.1 > 0.0 && p.2 > 0.0).collect();
    let x: Vec<f64> = usable.iter().map(|p| p.0).collect();
    let y: Vec<f64> = usable.iter().map(|p| p.1.ln()).collect();
    let w: Vec<f64> = usable.iter().map(|p| (p.1 / p.2).powi(2)).collect();
    weighted_line_fit(&x, &y, &w)
}

/// summary.json, extra JSON files and an optional ensemble-level table.
type EnsembleOutputs = (serde_json::Value, BTreeMap<String, serde_json::Value>, Option<Table>);

fn ensemble_summary(plan: &Plan, results: &[&SeedResult], ensemble: &Ensemble) -> Result<EnsembleOutputs, HarnessError> {
    let cfg = &plan.cfg;
    let mut json_files = BTreeMap::new();
    let mut extra_table = None;
    let extra = match cfg.kind {
        ExperimentKind::Greens => {
            let mut table = Table::new(&[
                "config_hash",
                "s",
                "E",
                "eta_im",
                "g",
                "pair_kind",
                "d_gamma_bin",
                "mean",
                "stderr",
                "n",
            ]);
            let mut fits = Vec::new();
            let mut estimates = Vec::new();
            for (gi, (mc, pairs)) in plan.moment_cfgs.iter().enumerate() {
                let samples: Vec<SeedMoments> = results
                    .iter()
                    .filter_map(|r| match &r.data {
                        SeedData::Moments(m) => Some(m[gi].clone()),
                        _ => None,
                    })
                    .collect();
                let est = MomentEstimate::from_samples(mc, pairs.clone(), &samples);
                for b in &est.bins {
                    let kind = serde_json::to_value(b.kind)?;
                    table.rows.push(vec![
                        plan.hash.clone(),
                        fmt_f64(est.s),
                        fmt_f64(est.energy),
                        fmt_f64(est.eta_im),
                        fmt_f64(est.g),
                        kind.as_str().unwrap_or_default().to_string(),
                        b.distance.to_string(),
                        fmt_f64(b.mean),
                        fmt_f64(b.stderr),
                        b.n.to_string(),
                    ]);
                }
                fits.push(json!({
                    "g": est.g,
                    "same_spin": est.fit_same,
                    "cross_spin": est.fit_cross,
                    "joint": est.fit_joint,
                    "apriori_envelope": est.apriori_envelope,
                    "envelope_violations": est.envelope_violations,
                    "max_bin_mean": est.bins.iter().map(|b| b.mean).fold(0.0, f64::max),
                    "cross_monotonicity_violations": est.cross_monotonicity_violations(),
                    "dropped_pairs": est.dropped_pairs,
                }));
                estimates.push(est);
            }
            let mut compat = Vec::new();
            for (i, a) in estimates.iter().enumerate() {
                for b in &estimates[i + 1..] {
                    for (kind, fa, fb) in [
                        ("same_spin", a.fit_same, b.fit_same),
                        ("cross_spin", a.fit_cross, b.fit_cross),
                    ] {
                        if let (Some(fa), Some(fb)) = (fa, fb) {
                            compat.push(json!({
                                "g_a": a.g, "g_b": b.g, "pair_kind": kind,
                                "compatible": fa.compatible_with(&fb),
                            }));
                        }
                    }
                }
            }
            let fit = json!({
                "config_hash": plan.hash,
                "s": cfg.greens.s,
                "energy": cfg.greens.energy,
                "eta_im": cfg.greens.eta_im,
                "fits": fits,
                "rate_compatibility": compat,
            });
            json_files.insert("fit.json".to_string(), fit.clone());
            extra_table = Some(table);
            fit
        }
        ExperimentKind::Minami => {
            let setup = plan.minami.as_ref().expect("planned");
            let dm: Vec<f64> = results
                .iter()
                .filter_map(|r| match r.data {
                    SeedData::DeltaMin(d) => Some(d),
                    _ => None,
                })
                .collect();
            let stats: Vec<_> = cfg.minami.eps.iter().map(|&e| minami_statistic(&dm, e, setup)).collect();
            json!({ "box_size": plan.lattice.len(), "spectral_width": setup.spectral_width(), "stats": stats })
        }
        ExperimentKind::Correlator => {
            let mut per_r = Vec::new();
            let mut pts = Vec::new();
            for &r in &cfg.correlator.distances {
                let vals: Vec<f64> = results
                    .iter()
                    .filter_map(|res| match &res.data {
                        SeedData::Rates(v) => v.iter().find(|p| p.0 == r).map(|p| p.1),
                        _ => None,
                    })
                    .collect();
                let (m, se) = mean_stderr(&vals);
                per_r.push(json!({ "r": r, "mean_sup_rate": m, "stderr": se, "n": vals.len() }));
                pts.push((2.0 * r as f64, m, se));
            }
            json!({ "rates": per_r, "fit_log_rate_vs_2r": log_linear_fit(&pts) })
        }
        _ => serde_json::Value::Null,
    };
    let summary = json!({
        "kind": cfg.kind,
        "config_hash": plan.hash,
        "seeds_ok": results.len(),
        "metrics": ensemble.summary(),
        "details": extra,
    });
    Ok((summary, json_files, extra_table))
}

/// Runs every seed on a worker pool and assembles tables and summaries in memory.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    let t0 = Instant::now();
    let plan = Plan::new(cfg)?;
    let seeds = cfg.seed_list();
    let mut stages = vec![StageTiming {
        stage: "validate".into(),
        seconds: t0.elapsed().as_secs_f64(),
    }];

    let threads = thread_count();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::Internal(e.to_string()))?;
    let t1 = Instant::now();
    let results: Vec<Result<SeedResult, String>> =
        pool.install(|| seeds.par_iter().map(|&s| plan.run_seed(s)).collect());
    stages.push(StageTiming {
        stage: "compute".into(),
        seconds: t1.elapsed().as_secs_f64(),
    });

    let t2 = Instant::now();
    let statuses: Vec<SeedStatus> = seeds
        .iter()
        .zip(&results)
        .map(|(&seed, r)| SeedStatus {
            seed,
            ok: r.is_ok(),
            error: r.as_ref().err().cloned(),
        })
        .collect();
    let ok: Vec<&SeedResult> = results.iter().filter_map(|r| r.as_ref().ok()).collect();
    let partials: Vec<SeedPartial> = ok.iter().map(|r| r.partial.clone()).collect();
    let ensemble = if partials.is_empty() {
        Ensemble::empty(cfg.kind)
    } else {
        aggregate(&partials)?
    };
    let mut tables: BTreeMap<String, Table> = BTreeMap::new();
    for (name, mut table) in headers(cfg.kind, cfg) {
        for r in &ok {
            if let Some(rows) = r.rows.get(name) {
                table.rows.extend(rows.iter().cloned());
            }
        }
        tables.insert(name.to_string(), table);
    }
    let (summary, json, extra_table) = ensemble_summary(&plan, &ok, &ensemble)?;
    if let Some(t) = extra_table {
        tables.insert("moments.csv".into(), t);
    }
    let binaries = ok.iter().filter_map(|r| r.binary.clone()).collect();
    stages.push(StageTiming {
        stage: "aggregate".into(),
        seconds: t2.elapsed().as_secs_f64(),
    });
    Ok(RunOutput {
        config_hash: plan.hash,
        statuses,
        ensemble,
        tables,
        summary,
        json,
        binaries,
        stages,
        threads,
    })
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Runs the experiment and writes its tables, summaries and manifest.json into `out_dir`
/// (or the configured output directory when `out_dir` is None).
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<RunManifest, HarnessError> {
    let dir: PathBuf = match (out_dir, &cfg.output_dir) {
        (Some(d), _) => d.to_path_buf(),
        (None, Some(d)) => d.clone(),
        (None, None) => {
            return Err(HarnessError::Validation {
                field: "output_dir".into(),
                message: "no output directory given".into(),
            })
        }
    };
    let run = execute(cfg)?;
    let t = Instant::now();
    std::fs::create_dir_all(&dir)?;
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    for (name, table) in &run.tables {
        files.push((name.clone(), table.to_csv()?));
    }
    files.push(("summary.json".into(), serde_json::to_vec_pretty(&run.summary)?));
    for (name, v) in &run.json {
        files.push((name.clone(), serde_json::to_vec_pretty(v)?));
    }
    for (name, b) in &run.binaries {
        files.push((name.clone(), b.clone()));
    }
    let mut outputs = Vec::new();
    for (name, bytes) in &files {
        std::fs::write(dir.join(name), bytes)?;
        outputs.push(OutputHash {
            file: name.clone(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
    }
    outputs.sort_by(|a, b| a.file.cmp(&b.file));
    let mut stages = run.stages;
    stages.push(StageTiming {
        stage: "write".into(),
        seconds: t.elapsed().as_secs_f64(),
    });
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        kind: cfg.kind,
        config_hash: run.config_hash,
        config: cfg.clone(),
        threads: run.threads,
        seeds: run.statuses,
        stages,
        outputs,
    };
    std::fs::write(dir.join("manifest.json"), serde_json::to_vec_pretty(&manifest)?)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column_f64(t: &Table, name: &str) -> Vec<f64> {
        let c = t.column(name).unwrap();
        t.rows.iter().map(|r| r[c].parse().unwrap()).collect()
    }

    #[test]
    fn zero_hopping_spectrum_is_sorted_potential() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Spectrum, 0.0, 0.5, 10);
        cfg.seeds.list = Some(vec![11]);
        let run = execute(&cfg).unwrap();
        let eig = column_f64(&run.tables["spectrum.csv"], "eigenvalue");
        let lattice = cfg.lattice_box().unwrap();
        let v = sample_potential(&lattice, &DisorderSpec::uniform(0.5, 11)).unwrap();
        let mut expected = v.on_box(&lattice).unwrap();
        expected.sort_by(f64::total_cmp);
        assert_eq!(eig, expected);
        let seeds = &run.tables["spectrum.csv"].rows;
        assert!(seeds.iter().all(|r| r[0] == "11" && r[1] == run.config_hash));
    }

    #[test]
    fn rows_carry_seed_and_hash_for_every_kind() {
        for kind in ExperimentKind::ALL {
            let mut cfg = ExperimentConfig::new(kind, 0.1, 0.5, 12);
            cfg.seeds.n_seeds = 2;
            cfg.greens.offset = 1;
            cfg.greens.r_max = 2;
            cfg.greens.x_max = 2;
            cfg.greens.boundary_margin = 2;
            cfg.correlator.distances = vec![1, 2];
            cfg.correlator.points = 20;
            cfg.tunnel.grid.points_per_tau = 16;
            cfg.tunnel.grid.window_points = 4;
            cfg.tunnel.min_overlap = 0.9;
            cfg.tunnel.eps = 0.1;
            let run = execute(&cfg).unwrap();
            for (name, t) in &run.tables {
                if name == "moments.csv" {
                    // ensemble table: hash and seed count, per-seed values are in moments_raw.csv
                    assert_eq!(t.header[0], "config_hash");
                    assert!(t.rows.iter().all(|r| r[0] == run.config_hash && r[9] == "2"));
                    continue;
                }
                assert_eq!(t.header[..2], ["seed", "config_hash"][..], "{name}");
                let seeds: Vec<String> = cfg.seed_list().iter().map(u64::to_string).collect();
                for r in &t.rows {
                    assert!(seeds.contains(&r[0]));
                    assert_eq!(r[1], run.config_hash);
                }
            }
        }
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Correlator, 0.1, 0.5, 16);
        cfg.seeds.n_seeds = 6;
        cfg.correlator.distances = vec![2, 4];
        cfg.correlator.points = 50;
        let plan = Plan::new(&cfg).unwrap();
        let seq: Vec<_> = cfg
            .seed_list()
            .iter()
            .map(|&s| plan.run_seed(s).unwrap().rows)
            .collect();
        let run = execute(&cfg).unwrap();
        let flat: Vec<Vec<String>> = seq.into_iter().flat_map(|r| r["correlator.csv"].clone()).collect();
        assert_eq!(run.tables["correlator.csv"].rows, flat);
    }

    #[test]
    fn per_seed_failures_are_recorded() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Tunnel, 0.1, 0.5, 8);
        cfg.seeds.n_seeds = 3;
        // no pair can reach overlap 1 at nonzero splitting under this gap floor
        cfg.tunnel.min_gap = 10.0;
        let dir = tempfile::tempdir().unwrap();
        let m = run_experiment(&cfg, Some(dir.path())).unwrap();
        assert_eq!(m.exit_code(), 2);
        assert_eq!(m.failed_seeds().len(), 3);
        assert!(dir.path().join("manifest.json").exists());
    }
}
