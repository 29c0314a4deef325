//! Front-end plumbing for the quadmap command line: job descriptions, the
//! map text grammar, report assembly, and the seeded fuzz driver.
//!
//! Exit-code contract: 0 success, 1 verification failure, 2 parse errors,
//! 3 contract violations, 4 anything else.  Reports are JSON with stable key
//! order; a report is only written after its inputs parsed cleanly, and
//! `"verified": true` appears only when the library-level re-verification
//! passed inside this process.

pub mod parse;

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{anyhow, Context};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use quadmap_core::classify::{classify_rk3, classify_rkr};
use quadmap_core::field::{make_field, FieldCtx};
use quadmap_core::generators::{
    hexad_family, random_invertible, random_map_of_rank, random_triangular_quadratic, wing_family,
};
use quadmap_core::keller::tame_decompose;
use quadmap_core::maps::{conjugate, jacobian, verify_certificate, PolyMap, TameCertificate, VerifyMode};
use quadmap_core::matpoly::rank_kx;
use quadmap_core::Error;

pub use parse::{format_map, parse_map};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Classify,
    Decompose,
    Verify,
    Fuzz,
    Report,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeChoice {
    Exact,
    SquareFree,
}

#[derive(Debug, Clone)]
pub enum MapSource {
    Path(PathBuf),
    Inline(String),
}

/// One unit of work; see the module docs for the exit-code contract.
#[derive(Debug, Clone)]
pub struct JobSpec {
    pub command: Command,
    pub field: Option<String>,
    pub input: Option<MapSource>,
    pub seed: u64,
    pub count: usize,
    pub nvars: usize,
    pub ncomps: usize,
    pub output: Option<PathBuf>,
    pub mode: Option<ModeChoice>,
}

impl JobSpec {
    pub fn new(command: Command) -> JobSpec {
        JobSpec {
            command,
            field: None,
            input: None,
            seed: 0,
            count: 100,
            nvars: 6,
            ncomps: 6,
            output: None,
            mode: None,
        }
    }
}

/// Result of [`run`]: process exit code, optional JSON report, optional
/// human-readable text.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub report: Option<Value>,
    pub text: Option<String>,
}

/// Map an error to the documented exit code.
pub fn exit_code_for(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<Error>() {
        Some(Error::Parse(_)) | Some(Error::CtxMismatch) => 2,
        Some(Error::ContractViolation(_)) => 3,
        _ => 4,
    }
}

pub fn run(job: &JobSpec) -> anyhow::Result<Outcome> {
    match job.command {
        Command::Classify => run_classify(job),
        Command::Decompose => run_decompose(job),
        Command::Verify => run_verify(job),
        Command::Fuzz => run_fuzz(job),
        Command::Report => run_report(job),
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

fn field_from_flag(job: &JobSpec) -> anyhow::Result<Option<FieldCtx>> {
    match job.field.as_deref() {
        Some(spec) => Ok(Some(make_field(spec)?)),
        None => Ok(None),
    }
}

fn load_input_text(job: &JobSpec) -> anyhow::Result<String> {
    match &job.input {
        Some(MapSource::Path(p)) => {
            std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
        }
        Some(MapSource::Inline(s)) => Ok(s.clone()),
        None => Err(anyhow!("this command needs an input map (--input or --inline)")),
    }
}

fn load_map(job: &JobSpec) -> anyhow::Result<(FieldCtx, PolyMap)> {
    let flag = field_from_flag(job)?;
    let text = load_input_text(job)?;
    let parsed = parse_map(&text, flag.as_ref())?;
    Ok(parsed)
}

fn parse_json(text: &str) -> anyhow::Result<Value> {
    serde_json::from_str(text).map_err(|e| {
        anyhow::Error::new(Error::Parse(format!(
            "line {}, column {}: {}",
            e.line(),
            e.column(),
            e
        )))
    })
}

fn verify_mode(job: &JobSpec, ctx: &FieldCtx) -> VerifyMode {
    match job.mode {
        Some(ModeChoice::Exact) => VerifyMode::Exact,
        Some(ModeChoice::SquareFree) => VerifyMode::UpToSquarePart,
        None => {
            if ctx.characteristic() == 2 {
                VerifyMode::UpToSquarePart
            } else {
                VerifyMode::Exact
            }
        }
    }
}

fn mode_name(mode: VerifyMode) -> &'static str {
    match mode {
        VerifyMode::Exact => "exact",
        VerifyMode::UpToSquarePart => "square-free",
    }
}

fn comp_strings(map: &PolyMap) -> Vec<String> {
    map.comps().iter().map(|p| p.to_string()).collect()
}

// ---------------------------------------------------------------------------
// classify
// ---------------------------------------------------------------------------

fn run_classify(job: &JobSpec) -> anyhow::Result<Outcome> {
    let (ctx, h) = load_map(job)?;
    let r = rank_kx(&jacobian(&h));
    let (kind, inner, verified, label) = if r == 3 {
        let rep = classify_rk3(&h)?;
        let verified = rep.verify(&h).is_ok();
        let label = format!("rank 3, case {}", rep.case);
        ("rk3", rep.to_json_value(verified), verified, label)
    } else {
        let rep = classify_rkr(&h)?;
        let verified = rep.verify(&h).is_ok();
        let label = format!("rank {r}");
        ("rkr", rep.to_json_value(verified), verified, label)
    };
    let report = json!({
        "command": "classify",
        "field": ctx.to_string(),
        "map": format_map(&h),
        "rank": r,
        "kind": kind,
        "report": inner,
        "verified": verified,
    });
    let text = format!(
        "classify over {}: {} (verified: {})",
        ctx, label, verified
    );
    Ok(Outcome {
        code: if verified { 0 } else { 1 },
        report: Some(report),
        text: Some(text),
    })
}

// ---------------------------------------------------------------------------
// decompose
// ---------------------------------------------------------------------------

fn run_decompose(job: &JobSpec) -> anyhow::Result<Outcome> {
    let (ctx, f) = load_map(job)?;
    let dec = tame_decompose(&f)?;
    let mode = verify_mode(job, &ctx);
    let outcome = verify_certificate(&dec.certificate, &f, mode)?;
    let verified = outcome.ok;
    let report = json!({
        "command": "decompose",
        "field": ctx.to_string(),
        "map": format_map(&f),
        "keller": true,
        "rank": dec.rank,
        "case": dec.case,
        "certificate": dec.certificate.to_json_value(),
        "square_part": dec.square_part.as_ref().map(comp_strings),
        "mode": mode_name(mode),
        "verified": verified,
    });
    let text = format!(
        "decompose over {}: rank {}, {} factor(s), verified: {}",
        ctx,
        dec.rank,
        dec.certificate.len(),
        verified
    );
    Ok(Outcome {
        code: if verified { 0 } else { 1 },
        report: Some(report),
        text: Some(text),
    })
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

fn run_verify(job: &JobSpec) -> anyhow::Result<Outcome> {
    let text = load_input_text(job)?;
    let v = parse_json(&text)?;
    let map_text = v
        .get("map")
        .and_then(|m| m.as_str())
        .ok_or_else(|| Error::Parse("report has no \"map\" field".into()))?;
    let flag = field_from_flag(job)?;
    let (ctx, f) = parse_map(map_text, flag.as_ref())?;
    let cert_v = v
        .get("certificate")
        .ok_or_else(|| Error::Parse("report has no \"certificate\" field".into()))?;
    let cert = TameCertificate::from_json_value(&ctx, cert_v)?;
    let mode = verify_mode(job, &ctx);
    let outcome = verify_certificate(&cert, &f, mode)?;
    let report = json!({
        "command": "verify",
        "field": ctx.to_string(),
        "map": map_text,
        "mode": mode_name(mode),
        "verified": outcome.ok,
        "discrepancy": outcome.discrepancy.as_ref().map(comp_strings),
    });
    let text = if outcome.ok {
        format!("verify over {}: certificate matches ({})", ctx, mode_name(mode))
    } else {
        format!(
            "verify over {}: MISMATCH; discrepancy = [{}]",
            ctx,
            outcome
                .discrepancy
                .as_ref()
                .map(|d| comp_strings(d).join(", "))
                .unwrap_or_default()
        )
    };
    Ok(Outcome {
        code: if outcome.ok { 0 } else { 1 },
        report: Some(report),
        text: Some(text),
    })
}

// ---------------------------------------------------------------------------
// fuzz
// ---------------------------------------------------------------------------

fn thread_pool() -> anyhow::Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("QUADMAP_THREADS") {
        let k: usize = v
            .trim()
            .parse()
            .context("QUADMAP_THREADS must be a positive integer")?;
        builder = builder.num_threads(k.max(1));
    }
    builder.build().context("building the worker pool")
}

fn fuzz_one(ctx: &FieldCtx, job: &JobSpec, i: usize) -> anyhow::Result<(Value, String, bool)> {
    let mut rng =
        ChaCha8Rng::seed_from_u64(job.seed ^ (i as u64).wrapping_mul(0x9E3779B97F4A7C15));
    let n = rng.gen_range(2..=job.nvars.max(2));
    if i % 2 == 0 {
        // Classification arm: a random map of prescribed Jacobian rank.
        let m = rng.gen_range(1..=job.ncomps.max(1));
        let rmax = 3.min(n).min(m);
        let r = rng.gen_range(0..=rmax);
        let h = random_map_of_rank(ctx, n, m, r, &mut rng);
        let rank = rank_kx(&jacobian(&h));
        let (label, verified) = if rank == 3 {
            let rep = classify_rk3(&h)?;
            (format!("case {}", rep.case), rep.verify(&h).is_ok())
        } else {
            let rep = classify_rkr(&h)?;
            (format!("rank {rank}"), rep.verify(&h).is_ok())
        };
        Ok((
            json!({
                "index": i,
                "arm": "classify",
                "nvars": n,
                "ncomps": m,
                "rank": rank,
                "label": label,
                "verified": verified,
            }),
            label,
            verified,
        ))
    } else {
        // Decomposition arm: a Keller map built from a rank-≤3 family and
        // hidden behind a random linear similarity.
        let pick = rng.gen_range(0..3u32);
        let h0 = if pick == 1 && n >= 5 {
            wing_family(ctx, n, &mut rng, true)
        } else if pick == 2 && n >= 6 && ctx.characteristic() == 2 {
            hexad_family(ctx, n, &mut rng, true)
        } else {
            random_triangular_quadratic(ctx, n, 3, &mut rng)
        };
        let l = random_invertible(ctx, n, &mut rng);
        let h = conjugate(&h0, &l.inverse()?, &l)?;
        let f = h.plus_identity()?;
        let dec = tame_decompose(&f)?;
        let mode = if ctx.characteristic() == 2 {
            VerifyMode::UpToSquarePart
        } else {
            VerifyMode::Exact
        };
        let verified = verify_certificate(&dec.certificate, &f, mode)?.ok;
        let label = match dec.case {
            Some(c) => format!("decompose case {c}"),
            None => "decompose triangular".to_string(),
        };
        Ok((
            json!({
                "index": i,
                "arm": "decompose",
                "nvars": n,
                "rank": dec.rank,
                "factors": dec.certificate.len(),
                "label": label,
                "verified": verified,
            }),
            label,
            verified,
        ))
    }
}

fn run_fuzz(job: &JobSpec) -> anyhow::Result<Outcome> {
    if job.count == 0 || job.nvars == 0 || job.ncomps == 0 {
        return Err(anyhow!("fuzz bounds (count, nvars, ncomps) must be positive"));
    }
    let ctx = match field_from_flag(job)? {
        Some(c) => c,
        None => make_field("Q")?,
    };
    let pool = thread_pool()?;
    let results: Vec<anyhow::Result<(Value, String, bool)>> = pool.install(|| {
        (0..job.count)
            .into_par_iter()
            .map(|i| fuzz_one(&ctx, job, i))
            .collect()
    });

    let mut rows = Vec::with_capacity(job.count);
    let mut by_case: BTreeMap<String, usize> = BTreeMap::new();
    let mut failures = 0usize;
    for r in results {
        let (row, label, verified) = r?;
        *by_case.entry(label).or_insert(0) += 1;
        if !verified {
            failures += 1;
        }
        rows.push(row);
    }
    let all_ok = failures == 0;
    let report = json!({
        "command": "fuzz",
        "field": ctx.to_string(),
        "seed": job.seed,
        "count": job.count,
        "nvars": job.nvars,
        "ncomps": job.ncomps,
        "results": rows,
        "summary": {
            "total": job.count,
            "by_case": by_case,
            "failures": failures,
        },
        "verified": all_ok,
    });
    let mut text = format!(
        "fuzz over {} (seed {}, {} inputs)\n{:<24} {:>6}\n",
        ctx, job.seed, job.count, "outcome", "count"
    );
    let by_case = report["summary"]["by_case"].as_object().unwrap();
    for (label, count) in by_case {
        text.push_str(&format!("{:<24} {:>6}\n", label, count));
    }
    text.push_str(&format!("{:<24} {:>6}", "failures", failures));
    Ok(Outcome {
        code: if all_ok { 0 } else { 1 },
        report: Some(report),
        text: Some(text),
    })
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

fn render_certificate(v: &Value, out: &mut String) {
    if let Some(factors) = v.get("factors").and_then(|f| f.as_array()) {
        out.push_str(&format!("  factors ({}), applied right to left:\n", factors.len()));
        for f in factors {
            match f.get("kind").and_then(|k| k.as_str()) {
                Some("elem") => out.push_str(&format!(
                    "    E[x{} += {}]\n",
                    f["i"],
                    f["a"].as_str().unwrap_or("?")
                )),
                Some("affine") => out.push_str("    affine linear factor\n"),
                _ => out.push_str("    (unrecognized factor)\n"),
            }
        }
    }
}

fn run_report(job: &JobSpec) -> anyhow::Result<Outcome> {
    let text = load_input_text(job)?;
    let v = parse_json(&text)?;
    let mut out = String::new();
    let command = v.get("command").and_then(|c| c.as_str()).unwrap_or("?");
    out.push_str(&format!("report for `{}` run\n", command));
    for key in ["field", "map", "rank", "case", "kind", "mode"] {
        if let Some(val) = v.get(key) {
            if !val.is_null() {
                out.push_str(&format!("  {}: {}\n", key, val));
            }
        }
    }
    if let Some(cert) = v.get("certificate") {
        render_certificate(cert, &mut out);
    }
    if let Some(sp) = v.get("square_part") {
        if !sp.is_null() {
            out.push_str(&format!("  square part: {}\n", sp));
        }
    }
    if let Some(summary) = v.get("summary") {
        out.push_str(&format!("  summary: {}\n", summary));
    }

    // Re-verify when the report is self-contained.
    let mut code = 0;
    let mut verified: Option<bool> = v.get("verified").and_then(|b| b.as_bool());
    if let (Some(map_text), Some(cert_v)) = (
        v.get("map").and_then(|m| m.as_str()),
        v.get("certificate"),
    ) {
        let flag = field_from_flag(job)?;
        let (ctx, f) = parse_map(map_text, flag.as_ref())?;
        let cert = TameCertificate::from_json_value(&ctx, cert_v)?;
        let mode = verify_mode(job, &ctx);
        let ok = verify_certificate(&cert, &f, mode)?.ok;
        out.push_str(&format!("  re-verified ({}): {}\n", mode_name(mode), ok));
        verified = Some(ok);
    }
    if verified == Some(false) {
        code = 1;
    }
    out.push_str(&format!("  verified: {}", verified.map(|b| b.to_string()).unwrap_or_else(|| "unknown".into())));
    Ok(Outcome {
        code,
        report: None,
        text: Some(out),
    })
}

// ---------------------------------------------------------------------------
