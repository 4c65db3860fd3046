use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::Args;
use serde::Serialize;

use cuntzlab::cuntz::{
    ell_invariant, rank_gap_certificate, rank_gap_holds, rank_obstruction_lower_bound, standard_traces, uniform_dims,
    w_leq, witness_search, Certificate, CuntzClassRepr, TraceMeasure, WElement,
};
use cuntzlab::exact::{format_q, parse_q, Rational, F17, Q};
use cuntzlab::io::{build_traces, parse_json, DecompositionDoc, FieldDoc, SequenceDoc, SpaceDoc, SpaceSpec, TraceDoc};
use cuntzlab::matfield::{KitFunction, MatrixField, ScalarKit};
use cuntzlab::rsh::{matrix_amplify, rc_upper_bound, slow_dimension_growth_check, stage_rc_bound, DEFAULT_N};
use cuntzlab::space::{make_grid, SampledSpace};
use cuntzlab::villadsen::{
    chern_obstruction_holds, composed_defect, intertwine_defect, stage_table, validate_params, MarginalMeasure,
    VilladsenParams,
};

use crate::output::{csv_table, json, unsupported, write, Format, Outcome};
use crate::Common;

fn read_doc<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_space(path: &Path) -> anyhow::Result<Arc<SampledSpace>> {
    let spec: SpaceSpec = read_doc(path)?;
    let space = spec.build().with_context(|| format!("building space from {}", path.display()))?;
    Ok(Arc::new(space))
}

/// The space from `--space`, or else the one embedded in the first field.
fn resolve_space(explicit: Option<&Path>, docs: &[(&Path, &FieldDoc)]) -> anyhow::Result<Arc<SampledSpace>> {
    if let Some(p) = explicit {
        return read_space(p);
    }
    for (path, doc) in docs {
        if let Some(space) = doc.embedded_space().with_context(|| format!("space in {}", path.display()))? {
            return Ok(space);
        }
    }
    bail!("no space given: pass --space or embed a \"space\" object in a field file")
}

fn load_field(path: &Path, doc: &FieldDoc, space: &Arc<SampledSpace>) -> anyhow::Result<MatrixField> {
    doc.to_field(Arc::clone(space)).with_context(|| format!("field {}", path.display()))
}

fn load_traces(path: Option<&Path>, space: &Arc<SampledSpace>, n: usize) -> anyhow::Result<Vec<TraceMeasure>> {
    match path {
        None => Ok(standard_traces(space, n)),
        Some(p) => {
            let docs: Vec<TraceDoc> = read_doc(p)?;
            build_traces(&docs, space).with_context(|| format!("traces {}", p.display()))
        }
    }
}

#[derive(Serialize)]
struct DryRun<'a> {
    command: &'a str,
    valid: bool,
}

fn finish(common: &Common, body: String, outcome: Outcome) -> anyhow::Result<Outcome> {
    write(common.out.as_deref(), &body)?;
    Ok(outcome)
}

fn dry_run(common: &Common, command: &str) -> anyhow::Result<Outcome> {
    finish(common, json(&DryRun { command, valid: true })?, Outcome::Holds)
}

fn check_tol(tol: f64) -> anyhow::Result<()> {
    if !(tol > 0.0) {
        bail!("--rank-tol must be positive, got {tol}");
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Field expected to be the smaller one.
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    /// Per-point dimensions `{id: d}`; defaults to the space's covering dimension.
    #[arg(long)]
    dims: Option<PathBuf>,
    /// Space file, when the fields do not embed one.
    #[arg(long)]
    space: Option<PathBuf>,
    /// Also run the numerical witness search.
    #[arg(long)]
    witness: bool,
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    #[arg(long, default_value_t = 500)]
    iters: usize,
    /// Write the best witness as a field file.
    #[arg(long, requires = "witness")]
    witness_out: Option<PathBuf>,
}

#[derive(Serialize)]
struct PointRow {
    id: String,
    rank_a: usize,
    rank_b: usize,
    dim: u64,
    holds: bool,
}

#[derive(Serialize)]
struct WitnessReport {
    restarts: usize,
    iters: usize,
    seed: u64,
    residual: F17,
    point_residuals: BTreeMap<String, F17>,
}

#[derive(Serialize)]
struct CompareReport {
    certificate: Certificate,
    points: Vec<PointRow>,
    obstruction_lower_bound: F17,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness_search: Option<WitnessReport>,
}

pub fn compare(args: &CompareArgs, common: &Common) -> anyhow::Result<Outcome> {
    check_tol(common.rank_tol)?;
    let (da, db): (FieldDoc, FieldDoc) = (read_doc(&args.a)?, read_doc(&args.b)?);
    let space = resolve_space(args.space.as_deref(), &[(&args.a, &da), (&args.b, &db)])?;
    let a = load_field(&args.a, &da, &space)?;
    let b = load_field(&args.b, &db, &space)?;
    let dims: BTreeMap<String, u64> = match &args.dims {
        Some(p) => read_doc(p)?,
        None => uniform_dims(&space),
    };
    if let Some(extra) = dims.keys().find(|k| space.index_of(k).is_none()) {
        bail!("dims: unknown point {extra:?}");
    }
    a.check_compatible(&b)?;
    if common.dry_run {
        return dry_run(common, "compare");
    }

    let certificate = rank_gap_certificate(&a, &b, &dims, common.rank_tol)?;
    let points: Vec<PointRow> = space
        .sorted_indices()
        .into_iter()
        .map(|i| {
            let id = space.id(i).to_string();
            let dim = dims.get(&id).copied().unwrap_or(space.covering_dim());
            let (rank_a, rank_b) = (a.rank_at(i, common.rank_tol), b.rank_at(i, common.rank_tol));
            PointRow {
                holds: rank_gap_holds(rank_a, rank_b, dim),
                id,
                rank_a,
                rank_b,
                dim,
            }
        })
        .collect();
    let witness = if args.witness {
        let w = witness_search(&a, &b, args.restarts, args.iters, common.seed)?;
        if let Some(path) = &args.witness_out {
            write(Some(path), &json(&FieldDoc::from_operator(&w.v))?)?;
        }
        Some(WitnessReport {
            restarts: args.restarts,
            iters: args.iters,
            seed: common.seed,
            residual: F17(w.residual),
            point_residuals: (0..space.len())
                .map(|i| (space.id(i).to_string(), F17(w.point_residuals[i])))
                .collect(),
        })
    } else {
        None
    };
    let outcome = Outcome::of(certificate.holds);
    let body = match common.format.unwrap_or(Format::Json) {
        Format::Json => json(&CompareReport {
            certificate,
            points,
            obstruction_lower_bound: F17(rank_obstruction_lower_bound(&a, &b, common.rank_tol)?),
            witness_search: witness,
        })?,
        Format::Csv => csv_table(
            &["id", "rank_a", "rank_b", "dim", "holds"],
            &points
                .iter()
                .map(|p| {
                    vec![
                        p.id.clone(),
                        p.rank_a.to_string(),
                        p.rank_b.to_string(),
                        p.dim.to_string(),
                        p.holds.to_string(),
                    ]
                })
                .collect::<Vec<_>>(),
        )?,
        Format::Text => format!("{}\n", certificate.holds),
    };
    finish(common, body, outcome)
}

#[derive(Debug, Args)]
pub struct RcBoundArgs {
    #[arg(long)]
    decomp: PathBuf,
    /// Report the bound for `M_m` of the decomposition.
    #[arg(long, default_value_t = 1)]
    amplify: u64,
}

#[derive(Serialize)]
struct RcReport {
    label: String,
    rc_upper_bound: Rational,
    stage_bounds: Vec<Rational>,
}

pub fn rc_bound(args: &RcBoundArgs, common: &Common) -> anyhow::Result<Outcome> {
    let doc: DecompositionDoc = read_doc(&args.decomp)?;
    let d = doc.build().with_context(|| format!("decomposition {}", args.decomp.display()))?;
    let d = matrix_amplify(&d, args.amplify)?;
    if common.dry_run {
        return dry_run(common, "rc-bound");
    }
    let bound = rc_upper_bound(&d);
    let body = match common.format.unwrap_or(Format::Text) {
        Format::Text => format!("{}\n", format_q(&bound)),
        Format::Json => json(&RcReport {
            label: d.label().to_string(),
            rc_upper_bound: Rational(bound),
            stage_bounds: d
                .stages()
                .iter()
                .map(|s| Rational(stage_rc_bound(s.dim(), s.matrix_size)))
                .collect(),
        })?,
        f => unsupported(f, "rc-bound")?,
    };
    finish(common, body, Outcome::Holds)
}

#[derive(Debug, Args)]
pub struct SdgArgs {
    #[arg(long)]
    seq: PathBuf,
    /// Growth constant: require `n_j(k) ≥ N·dim X_{j,k}`.
    #[arg(long = "growth", default_value_t = DEFAULT_N)]
    growth: u64,
    /// Look for `j0` beyond this term index.
    #[arg(long, default_value_t = 0)]
    from: usize,
}

#[derive(Serialize)]
struct SdgReport {
    growth: u64,
    from: usize,
    terms: usize,
    j0: Option<usize>,
}

pub fn sdg_check(args: &SdgArgs, common: &Common) -> anyhow::Result<Outcome> {
    let doc: SequenceDoc = read_doc(&args.seq)?;
    let seq = doc.build().with_context(|| format!("sequence {}", args.seq.display()))?;
    if args.from >= seq.terms().len() {
        bail!("--from {} is outside the {} terms", args.from, seq.terms().len());
    }
    if common.dry_run {
        return dry_run(common, "sdg-check");
    }
    let r = slow_dimension_growth_check(&seq, args.growth, args.from);
    let body = match common.format.unwrap_or(Format::Json) {
        Format::Json => json(&SdgReport {
            growth: args.growth,
            from: args.from,
            terms: seq.terms().len(),
            j0: r.j0,
        })?,
        Format::Text => format!("{}\n", r.j0.map_or("none".to_string(), |j| j.to_string())),
        f => unsupported(f, "sdg-check")?,
    };
    finish(common, body, Outcome::of(r.j0.is_some()))
}

#[derive(Debug, Args)]
pub struct VilladsenArgs {
    #[arg(long)]
    params: PathBuf,
    /// Last stage to tabulate; defaults to the end of the prefix.
    #[arg(long)]
    stages: Option<usize>,
    /// Emit the parameter validation report instead of the table.
    #[arg(long)]
    validate: bool,
    /// Largest q in the divisibility check.
    #[arg(long, default_value_t = 10)]
    q_max: u64,
    /// Evaluate the rank obstruction at `i,j,rank,eta` (eta as p/q).
    #[arg(long, value_name = "I,J,RANK,ETA", conflicts_with = "validate")]
    chern: Option<String>,
}

fn parse_chern(s: &str) -> anyhow::Result<(usize, usize, u64, Q)> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [i, j, rank, eta] = parts[..] else {
        bail!("--chern expects I,J,RANK,ETA, got {s:?}");
    };
    Ok((i.parse()?, j.parse()?, rank.parse()?, parse_q(eta)?))
}

pub fn villadsen(args: &VilladsenArgs, common: &Common) -> anyhow::Result<Outcome> {
    let p: VilladsenParams = read_doc(&args.params)?;
    p.validate_shape()?;
    let stages = args.stages.unwrap_or(p.last_stage());
    if stages > p.last_stage() {
        bail!("--stages {stages} exceeds the {} stages in {}", p.last_stage(), args.params.display());
    }
    let chern = args.chern.as_deref().map(parse_chern).transpose()?;
    if common.dry_run {
        return dry_run(common, "villadsen");
    }
    if let Some((i, j, rank, eta)) = chern {
        let r = chern_obstruction_holds(&p, i, j, rank, &eta)?;
        let holds = r.holds;
        return match common.format.unwrap_or(Format::Json) {
            Format::Json => finish(common, json(&r)?, Outcome::of(holds)),
            f => unsupported(f, "villadsen --chern").map(|_| Outcome::Holds),
        };
    }
    if args.validate {
        let r = validate_params(&p, stages, args.q_max)?;
        let passed = r.passed;
        return match common.format.unwrap_or(Format::Json) {
            Format::Json => finish(common, json(&r)?, Outcome::of(passed)),
            f => unsupported(f, "villadsen --validate").map(|_| Outcome::Holds),
        };
    }
    let rows = stage_table(&p, stages)?;
    let body = match common.format.unwrap_or(Format::Csv) {
        Format::Csv => csv_table(
            &["i", "m_i", "N_i", "rc_i", "ratio_i"],
            &rows
                .iter()
                .map(|r| {
                    vec![
                        r.i.to_string(),
                        r.m_i.to_string(),
                        r.big_n_i.to_string(),
                        format_q(&r.rc_i),
                        format_q(&r.ratio_i),
                    ]
                })
                .collect::<Vec<_>>(),
        )?,
        Format::Json => json(&rows)?,
        f => unsupported(f, "villadsen")?,
    };
    finish(common, body, Outcome::Holds)
}

#[derive(Debug, Args)]
pub struct IntertwineArgs {
    #[arg(long)]
    n1: u64,
    #[arg(long)]
    m1: u64,
    #[arg(long)]
    n2: u64,
    /// Measure on `[0,1]^{N2}` on which to evaluate the composed defect.
    #[arg(long)]
    measure: Option<PathBuf>,
}

#[derive(Serialize)]
struct IntertwineReport {
    #[serde(rename = "L")]
    l: u64,
    bound: Rational,
    #[serde(skip_serializing_if = "Option::is_none")]
    composed_defect: Option<Rational>,
    #[serde(skip_serializing_if = "Option::is_none")]
    within_bound: Option<bool>,
}

pub fn intertwine(args: &IntertwineArgs, common: &Common) -> anyhow::Result<Outcome> {
    let d = intertwine_defect(args.n1, args.m1, args.n2)?;
    let measure: Option<MarginalMeasure> = args.measure.as_deref().map(read_doc).transpose()?;
    if let Some(mu) = &measure {
        mu.validate()?;
    }
    if common.dry_run {
        return dry_run(common, "intertwine");
    }
    let composed = measure
        .as_ref()
        .map(|mu| composed_defect(mu, args.n1, args.m1, args.n2))
        .transpose()?;
    let within = composed.as_ref().map(|c| *c <= d.bound);
    let body = match common.format.unwrap_or(Format::Json) {
        Format::Json => json(&IntertwineReport {
            l: d.l,
            bound: Rational(d.bound.clone()),
            composed_defect: composed.map(Rational),
            within_bound: within,
        })?,
        f => unsupported(f, "intertwine")?,
    };
    finish(common, body, Outcome::of(within.unwrap_or(true)))
}

#[derive(Debug, Args)]
pub struct SemigroupArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long)]
    space: Option<PathBuf>,
    /// Trace list; defaults to the uniform trace and all point evaluations.
    #[arg(long)]
    traces: Option<PathBuf>,
}

#[derive(Serialize)]
struct SemigroupReport {
    a: CuntzClassRepr,
    b: CuntzClassRepr,
    a_le_b: bool,
    b_le_a: bool,
    certificate: Certificate,
    violation: bool,
}

pub fn semigroup(args: &SemigroupArgs, common: &Common) -> anyhow::Result<Outcome> {
    check_tol(common.rank_tol)?;
    let (da, db): (FieldDoc, FieldDoc) = (read_doc(&args.a)?, read_doc(&args.b)?);
    let space = resolve_space(args.space.as_deref(), &[(&args.a, &da), (&args.b, &db)])?;
    let a = load_field(&args.a, &da, &space)?;
    let b = load_field(&args.b, &db, &space)?;
    a.check_compatible(&b)?;
    let traces = load_traces(args.traces.as_deref(), &space, a.n())?;
    if common.dry_run {
        return dry_run(common, "semigroup");
    }
    let ca = CuntzClassRepr::from_field(&a, &traces, common.rank_tol, "a")?;
    let cb = CuntzClassRepr::from_field(&b, &traces, common.rank_tol, "b")?;
    let (ea, eb) = (WElement::Class(ca.clone()), WElement::Class(cb.clone()));
    let a_le_b = w_leq(&ea, &eb)?;
    let b_le_a = w_leq(&eb, &ea)?;
    let certificate = rank_gap_certificate(&a, &b, &uniform_dims(&space), common.rank_tol)?;
    let violation = certificate.holds && !a_le_b;
    let body = match common.format.unwrap_or(Format::Json) {
        Format::Json => json(&SemigroupReport {
            a: ca,
            b: cb,
            a_le_b,
            b_le_a,
            certificate,
            violation,
        })?,
        f => unsupported(f, "semigroup")?,
    };
    finish(common, body, Outcome::of(a_le_b))
}

#[derive(Debug, Args)]
pub struct EllArgs {
    #[arg(long)]
    a: PathBuf,
    /// Second field; the command then reports whether the invariants match.
    #[arg(long)]
    b: Option<PathBuf>,
    #[arg(long)]
    space: Option<PathBuf>,
    #[arg(long)]
    traces: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    bins: u64,
}

pub fn ell(args: &EllArgs, common: &Common) -> anyhow::Result<Outcome> {
    if args.bins == 0 {
        bail!("--bins must be positive");
    }
    let da: FieldDoc = read_doc(&args.a)?;
    let db: Option<FieldDoc> = args.b.as_deref().map(read_doc).transpose()?;
    let mut docs = vec![(args.a.as_path(), &da)];
    if let (Some(p), Some(d)) = (&args.b, &db) {
        docs.push((p.as_path(), d));
    }
    let space = resolve_space(args.space.as_deref(), &docs)?;
    let a = load_field(&args.a, &da, &space)?;
    let b = match (&args.b, &db) {
        (Some(p), Some(d)) => Some(load_field(p, d, &space)?),
        _ => None,
    };
    let traces = load_traces(args.traces.as_deref(), &space, a.n())?;
    if common.dry_run {
        return dry_run(common, "ell");
    }
    let ia = ell_invariant(&a, &traces, args.bins)?;
    let ib = b.as_ref().map(|b| ell_invariant(b, &traces, args.bins)).transpose()?;
    let matches = ib.as_ref().map(|ib| ia.matches(ib));

    #[derive(Serialize)]
    struct EllReport<T: Serialize> {
        a: T,
        #[serde(skip_serializing_if = "Option::is_none")]
        b: Option<T>,
        #[serde(skip_serializing_if = "Option::is_none")]
        matches: Option<bool>,
    }
    let body = match common.format.unwrap_or(Format::Json) {
        Format::Json => json(&EllReport { a: &ia, b: ib.as_ref(), matches })?,
        Format::Csv => {
            let mut rows = Vec::new();
            for (field, inv) in std::iter::once(("a", &ia)).chain(ib.as_ref().map(|i| ("b", i))) {
                for (trace, hist) in &inv.distributions {
                    for (bin, mass) in hist {
                        rows.push(vec![field.to_string(), trace.clone(), bin.to_string(), format_q(mass)]);
                    }
                }
            }
            csv_table(&["field", "trace", "bin", "mass"], &rows)?
        }
        f => unsupported(f, "ell")?,
    };
    finish(common, body, Outcome::of(matches.unwrap_or(true)))
}

#[derive(Debug, Args)]
pub struct KitArgs {
    /// Samples of `t` in `[0,1]`.
    #[arg(long, default_value_t = 1000)]
    t_steps: usize,
    /// Samples of `δ` in `(0,1]`.
    #[arg(long, default_value_t = 20)]
    delta_steps: usize,
    /// Samples of `s` in `[0,1]`.
    #[arg(long, default_value_t = 20)]
    s_steps: usize,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Tabulate every kit function at this `δ` (requires `--s`).
    #[arg(long, requires = "s")]
    delta: Option<f64>,
    #[arg(long, requires = "delta")]
    s: Option<f64>,
}

#[derive(Serialize)]
struct KitReport {
    points: usize,
    tol: F17,
    t_g_minus_f: F17,
    h_gs_minus_f: F17,
    f_above_rw: F17,
    rw_above_one: F17,
    holds: bool,
}

pub fn kit_test(args: &KitArgs, common: &Common) -> anyhow::Result<Outcome> {
    if args.t_steps < 2 || args.delta_steps == 0 || args.s_steps < 2 {
        bail!("need at least 2 t samples, 1 δ sample and 2 s samples");
    }
    if let (Some(d), Some(s)) = (args.delta, args.s) {
        if !(d > 0.0 && d <= 1.0 && (0.0..=1.0).contains(&s)) {
            bail!("need δ in (0,1] and s in [0,1]");
        }
    }
    if common.dry_run {
        return dry_run(common, "kit-test");
    }
    if let (Some(d), Some(s)) = (args.delta, args.s) {
        let kit = ScalarKit::new(d, s);
        let ts: Vec<f64> = (0..args.t_steps).map(|i| i as f64 / (args.t_steps - 1) as f64).collect();
        let mut header = vec!["t".to_string()];
        header.extend(KitFunction::ALL.iter().map(|k| k.to_string()));
        let rows: Vec<Vec<String>> = ts
            .iter()
            .map(|&t| {
                let mut row = vec![cuntzlab::exact::format_f64(t)];
                row.extend(KitFunction::ALL.iter().map(|&k| cuntzlab::exact::format_f64(kit.eval(k, t))));
                row
            })
            .collect();
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let body = match common.format.unwrap_or(Format::Csv) {
            Format::Csv => csv_table(&header, &rows)?,
            f => unsupported(f, "kit-test --delta")?,
        };
        return finish(common, body, Outcome::Holds);
    }
    let mut worst = [0.0f64; 4];
    let mut points = 0;
    for i in 0..args.t_steps {
        let t = i as f64 / (args.t_steps - 1) as f64;
        for j in 1..=args.delta_steps {
            let d = j as f64 / args.delta_steps as f64;
            for k in 0..args.s_steps {
                let kit = ScalarKit::new(d, k as f64 / (args.s_steps - 1) as f64);
                let (f, rw) = (kit.f(t), kit.r(t) * kit.w(t));
                let e = [
                    (t * kit.g(t) - f).abs(),
                    (kit.h(t) * kit.g_s(t) - f).abs(),
                    (f - rw).max(0.0),
                    (rw - 1.0).max(0.0),
                ];
                for (w, e) in worst.iter_mut().zip(e) {
                    *w = w.max(e);
                }
                points += 1;
            }
        }
    }
    let holds = worst.iter().all(|&w| w <= args.tol);
    let body = match common.format.unwrap_or(Format::Json) {
        Format::Json => json(&KitReport {
            points,
            tol: F17(args.tol),
            t_g_minus_f: F17(worst[0]),
            h_gs_minus_f: F17(worst[1]),
            f_above_rw: F17(worst[2]),
            rw_above_one: F17(worst[3]),
            holds,
        })?,
        f => unsupported(f, "kit-test")?,
    };
    finish(common, body, Outcome::of(holds))
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Factor dimensions, e.g. `1,2` for `[0,1] × [0,1]^2`.
    #[arg(long, value_delimiter = ',', required = true)]
    dims: Vec<u64>,
    #[arg(long)]
    resolution: u64,
}

pub fn grid(args: &GridArgs, common: &Common) -> anyhow::Result<Outcome> {
    let space = make_grid(&args.dims, args.resolution)?;
    if common.dry_run {
        return dry_run(common, "grid");
    }
    let body = match common.format.unwrap_or(Format::Json) {
        Format::Json => json(&SpaceDoc::from_space(&space))?,
        f => unsupported(f, "grid")?,
    };
    finish(common, body, Outcome::Holds)
}
