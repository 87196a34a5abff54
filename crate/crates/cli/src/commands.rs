use std::collections::BTreeMap;
use std::fmt::Write;

use serde::Serialize;
use serde_json::value::RawValue;
use serde_json::Value;
use toda_core::cartan::{cartan_inverse_closed, cartan_k};
use toda_core::exact::{rat_string, rmat_inverse};
use toda_core::grading::{
    canonical_block_operator, graded_decomposition, labels_to_block_structure, levi_type,
    operator_from_labels, operator_from_labels_detailed, DynkinLabels,
};
use toda_core::liealg::{group_membership, Series, SeriesTag};
use toda_core::matfn::expm;
use toda_core::solver::{
    convergence_study, march, refinement_sequence, LiouvilleSource, Reference,
};
use toda_core::toda::{
    assemble_gamma, block_residuals, build_system, connection, curvature_residual, emit_equations,
    residual_full, EquationFormat, Stencil, TodaSystem,
};
use toda_core::{CBlocks, CMatrix, CharacteristicData, Rational, C64};

use crate::error::{CliError, CliResult, Exit};
use crate::files::{self, BoundaryFile, SystemFile};
use crate::{EquationsArgs, Format, GradeArgs, Outcome, SelftestArgs, SolveArgs, VerifyArgs};

fn no_latex(format: Format, command: &str) -> CliResult<()> {
    if format == Format::Latex {
        return Err(CliError::input(format!(
            "usage: --format latex is not available for {command}"
        )));
    }
    Ok(())
}

fn rat_text(x: &Rational) -> String {
    x.to_string()
}

fn rat_latex(x: &Rational) -> String {
    if x.is_integer() {
        return x.to_string();
    }
    let sign = if x.numer() < &0.into() { "-" } else { "" };
    format!(
        "{sign}\\tfrac{{{}}}{{{}}}",
        x.numer().magnitude(),
        x.denom()
    )
}

fn csv<T: ToString>(items: &[T]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

#[derive(Serialize)]
struct GradeJson {
    format: &'static str,
    series: String,
    rank: usize,
    labels: Box<RawValue>,
    sigma: bool,
    q: Box<RawValue>,
    rho: Box<RawValue>,
    blocks: Box<RawValue>,
    steps: Box<RawValue>,
    l: u64,
    dims: BTreeMap<String, usize>,
    levi: String,
}

pub fn grade(args: &GradeArgs) -> CliResult<Outcome> {
    let tag = files::series_tag(&args.series, args.rank)?;
    let labels = DynkinLabels::new(tag, args.labels.clone())?;
    let detail = operator_from_labels_detailed(&labels)?;
    let blocks = labels_to_block_structure(&labels)?;
    let op = &detail.operator;
    let dims = graded_decomposition(op)?.dims();
    let levi = levi_type(&blocks);
    let q = op.q.diagonal();
    let mut out = String::new();
    match args.format {
        Format::Text => {
            let diag: Vec<String> = q.iter().map(rat_text).collect();
            let _ = writeln!(out, "algebra  {tag}");
            let _ = writeln!(out, "labels   ({})", csv(labels.labels()));
            let _ = writeln!(out, "q        diag({})", diag.join(", "));
            if detail.sigma {
                let _ = writeln!(out, "sigma    applied (labels r-1 and r exchanged)");
            }
            let _ = writeln!(
                out,
                "blocks   k=({}) m=({}) l={}",
                csv(blocks.sizes()),
                csv(blocks.steps()),
                blocks.l()
            );
            let degrees: Vec<String> = dims.iter().map(|(m, d)| format!("g[{m}]={d}")).collect();
            let _ = writeln!(out, "degrees  {}", degrees.join(" "));
            let _ = writeln!(out, "G0       {levi}");
        }
        Format::Latex => {
            let diag: Vec<String> = q.iter().map(rat_latex).collect();
            let factors: Vec<String> = levi
                .factors
                .iter()
                .map(|(kind, k)| format!("\\mathrm{{{kind:?}}}({k})"))
                .collect();
            let _ = writeln!(out, "q = \\operatorname{{diag}}({})", diag.join(", "));
            let degrees: Vec<String> = dims
                .iter()
                .map(|(m, d)| format!("\\dim\\mathfrak{{g}}_{{{m}}} = {d}"))
                .collect();
            let _ = writeln!(out, "{}", degrees.join(",\\quad "));
            let _ = writeln!(out, "G_0 \\cong {}", factors.join(" \\times "));
        }
        Format::Json => {
            out = files::to_document(&GradeJson {
                format: "toda-grade/1",
                series: tag.series.letter().to_string(),
                rank: tag.rank,
                labels: files::raw(labels.labels())?,
                sigma: detail.sigma,
                q: files::raw(&q.iter().map(rat_string).collect::<Vec<_>>())?,
                rho: files::raw(&op.rho.iter().map(rat_string).collect::<Vec<_>>())?,
                blocks: files::raw(blocks.sizes())?,
                steps: files::raw(blocks.steps())?,
                l: blocks.l(),
                dims: dims.iter().map(|(m, d)| (m.to_string(), *d)).collect(),
                levi: levi.to_string(),
            })?;
        }
    }
    Ok(Outcome::ok(out))
}

/// Rank implied by a total matrix size.
fn implied_rank(series: Series, n: usize) -> CliResult<usize> {
    let rank = match series {
        Series::A => n.checked_sub(1),
        Series::B => (n % 2 == 1).then(|| (n - 1) / 2),
        Series::C | Series::D => n.is_multiple_of(2).then_some(n / 2),
    };
    rank.ok_or_else(|| {
        CliError::input(format!(
            "--blocks: sizes sum to {n}, which is no matrix size of series {}",
            series.letter()
        ))
    })
}

pub fn equations(args: &EquationsArgs) -> CliResult<Outcome> {
    let system = match (&args.system, &args.series, &args.blocks) {
        (Some(path), _, _) => SystemFile::load(path)?.system,
        (None, Some(series), Some(blocks)) => {
            let s: Series = series.parse()?;
            let rank = match args.rank {
                Some(r) => r,
                None => implied_rank(s, blocks.iter().sum())?,
            };
            build_system(SeriesTag::new(s, rank)?, blocks)?
        }
        _ => {
            return Err(CliError::input(
                "usage: give a system file or --series with --blocks",
            ))
        }
    };
    let format = match args.format {
        Format::Text => EquationFormat::Text,
        Format::Latex => EquationFormat::Latex,
        Format::Json => EquationFormat::Structured,
    };
    Ok(Outcome::ok(emit_equations(&system, format)))
}

#[derive(Serialize)]
struct NormsJson {
    max: Box<RawValue>,
    l2: Box<RawValue>,
}

impl NormsJson {
    fn new(max: f64, l2: f64) -> CliResult<Self> {
        Ok(Self {
            max: files::raw(&max)?,
            l2: files::raw(&l2)?,
        })
    }
}

#[derive(Serialize)]
struct BlockNormsJson {
    block: usize,
    label: String,
    max: Box<RawValue>,
    l2: Box<RawValue>,
}

#[derive(Serialize)]
struct VerifyJson {
    format: &'static str,
    system: String,
    stencil: &'static str,
    grid: Box<RawValue>,
    tol: Box<RawValue>,
    pass: bool,
    residual: NormsJson,
    blocks: Vec<BlockNormsJson>,
    curvature: NormsJson,
}

pub fn verify(args: &VerifyArgs) -> CliResult<Outcome> {
    no_latex(args.format, "verify")?;
    if !(args.tol.is_finite() && args.tol >= 0.0) {
        return Err(CliError::input(format!(
            "--tol {}: must be a nonnegative number",
            args.tol
        )));
    }
    let sys = SystemFile::load(&args.system)?;
    let field = files::load_grid(&args.grid)?;
    field
        .check(&sys.system)
        .map_err(|e| CliError::from(e).context(args.grid.display()))?;
    let stencil: Stencil = args.stencil.into();
    let c = sys.c.clone().into();
    let full = residual_full(&sys.system, &field, &c, stencil)?;
    let blocks = block_residuals(&sys.system, &field, &c, stencil)?;
    let curvature = curvature_residual(&connection(&sys.system, &field, &c, stencil)?)?;
    let max = full.max_norm();
    let pass = max <= args.tol;
    let spec = field.spec;
    let mut out = String::new();
    match args.format {
        Format::Json => {
            out = files::to_document(&VerifyJson {
                format: "toda-verify/1",
                system: sys.system.to_string(),
                stencil: stencil.name(),
                grid: files::raw(&[spec.n_minus, spec.n_plus])?,
                tol: files::raw(&args.tol)?,
                pass,
                residual: NormsJson::new(max, full.l2_norm())?,
                blocks: blocks
                    .blocks
                    .iter()
                    .map(|b| {
                        Ok(BlockNormsJson {
                            block: b.block.unwrap_or(0),
                            label: b.label.clone(),
                            max: files::raw(&b.max_norm)?,
                            l2: files::raw(&b.l2_norm)?,
                        })
                    })
                    .collect::<CliResult<_>>()?,
                curvature: NormsJson::new(curvature.max_norm(), curvature.l2_norm())?,
            })?;
        }
        _ => {
            let _ = writeln!(out, "system     {}", sys.system);
            let _ = writeln!(
                out,
                "grid       {}x{} stencil {}",
                spec.n_minus, spec.n_plus, stencil
            );
            let _ = writeln!(out, "residual   max {:.6e} l2 {:.6e}", max, full.l2_norm());
            for b in &blocks.blocks {
                let _ = writeln!(
                    out,
                    "  {:<8} max {:.6e} l2 {:.6e}",
                    b.label, b.max_norm, b.l2_norm
                );
            }
            let _ = writeln!(
                out,
                "curvature  max {:.6e} l2 {:.6e}",
                curvature.max_norm(),
                curvature.l2_norm()
            );
            let _ = writeln!(
                out,
                "result     {} (tol {:e})",
                if pass { "PASS" } else { "FAIL" },
                args.tol
            );
        }
    }
    Ok(if pass {
        Outcome::ok(out)
    } else {
        Outcome {
            stdout: out,
            exit: Exit::VerifyFailed,
            diagnostic: Some(CliError::new(
                Exit::VerifyFailed,
                format!(
                    "residual max norm {max:.6e} exceeds tolerance {:e}",
                    args.tol
                ),
            )),
        }
    })
}

#[derive(Serialize)]
struct SolveJson {
    format: &'static str,
    system: String,
    out: String,
    scheme: &'static str,
    grid: Box<RawValue>,
    h: Box<RawValue>,
    cells: usize,
    iterations: usize,
    max_cell_iterations: usize,
    residual: NormsJson,
    hint: String,
}

pub fn solve(args: &SolveArgs) -> CliResult<Outcome> {
    no_latex(args.format, "solve")?;
    let sys = SystemFile::load(&args.system)?;
    let boundary = BoundaryFile::load(&args.boundary)?;
    let data = boundary
        .resample(args.grid)
        .map_err(|e| e.context(args.boundary.display()))?;
    let result = march(&sys.system, &sys.c.clone().into(), &data)?;
    let mut metadata = BTreeMap::new();
    metadata.insert("scheme".to_string(), Value::from(result.scheme.name));
    metadata.insert("system".to_string(), Value::from(sys.system.to_string()));
    let text = files::grid_to_json(&result.field, &metadata)?;
    std::fs::write(&args.out, text)
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", args.out.display())))?;
    let s = result.scheme.clone();
    let (max, l2) = (result.report.max_norm(), result.report.l2_norm());
    let hint = "second-order scheme: halving h should cut the error about fourfold".to_string();
    let spec = result.field.spec;
    let out = match args.format {
        Format::Json => files::to_document(&SolveJson {
            format: "toda-solve/1",
            system: sys.system.to_string(),
            out: args.out.display().to_string(),
            scheme: s.name,
            grid: files::raw(&[spec.n_minus, spec.n_plus])?,
            h: files::raw(&[s.h_minus, s.h_plus])?,
            cells: s.cells,
            iterations: s.total_iterations,
            max_cell_iterations: s.max_iterations,
            residual: NormsJson::new(max, l2)?,
            hint,
        })?,
        _ => {
            let mut out = String::new();
            let _ = writeln!(out, "system     {}", sys.system);
            let _ = writeln!(
                out,
                "scheme     {} on {}x{} (h- {:.6e}, h+ {:.6e})",
                s.name, spec.n_minus, spec.n_plus, s.h_minus, s.h_plus
            );
            let _ = writeln!(
                out,
                "iterations {} over {} cells (max {} per cell)",
                s.total_iterations, s.cells, s.max_iterations
            );
            let _ = writeln!(
                out,
                "residual   max {max:.6e} l2 {l2:.6e} (block equations, centered2)"
            );
            let _ = writeln!(out, "hint       {hint}");
            let _ = writeln!(out, "wrote      {}", args.out.display());
            out
        }
    };
    Ok(Outcome::ok(out))
}

struct Check {
    name: &'static str,
    result: Result<String, String>,
}

fn check_cartan() -> Result<String, String> {
    let mut count = 0;
    for series in [Series::A, Series::B, Series::C, Series::D] {
        for rank in series.min_rank()..=8 {
            let tag = SeriesTag::new(series, rank).map_err(|e| e.to_string())?;
            let inv = rmat_inverse(&cartan_k(&tag)).map_err(|e| e.to_string())?;
            let closed = cartan_inverse_closed(&tag).map_err(|e| e.to_string())?;
            if inv != closed {
                return Err(format!("{tag}: closed form differs from exact inverse"));
            }
            count += 1;
        }
    }
    Ok(format!("{count} Cartan matrices inverted exactly"))
}

fn check_grading() -> Result<String, String> {
    let mut count = 0;
    for series in [Series::A, Series::B, Series::C, Series::D] {
        for rank in series.min_rank()..=5 {
            let tag = SeriesTag::new(series, rank).map_err(|e| e.to_string())?;
            for i in 0..rank {
                let mut l = vec![0; rank];
                l[i] = 1;
                let labels = DynkinLabels::new(tag, l).map_err(|e| e.to_string())?;
                let a = operator_from_labels(&labels).map_err(|e| e.to_string())?;
                let blocks = labels_to_block_structure(&labels).map_err(|e| e.to_string())?;
                let b = canonical_block_operator(&blocks).map_err(|e| e.to_string())?;
                if a.q != b.q {
                    return Err(format!("{tag} {:?}: operators differ", labels.labels()));
                }
                count += 1;
            }
        }
    }
    Ok(format!("{count} single-label gradings agree"))
}

fn check_march() -> Result<String, String> {
    let sys = build_system(SeriesTag::a(1).map_err(|e| e.to_string())?, &[1, 1])
        .map_err(|e| e.to_string())?;
    let s = |x: f64| CMatrix::scalar(C64::new(x, 0.0));
    let c = CBlocks::new(&sys, vec![s(-1.0)], vec![s(1.0)]).map_err(|e| e.to_string())?;
    let grids = refinement_sequence((0.0, 1.0), (2.0, 3.0), 17, 3).map_err(|e| e.to_string())?;
    let study = convergence_study(
        &sys,
        &c,
        |g| CharacteristicData::from_source(*g, &LiouvilleSource),
        &grids,
        Reference::Exact(&LiouvilleSource),
    )
    .map_err(|e| e.to_string())?;
    let finest = study.points.last().map_or(f64::NAN, |p| p.error);
    let detail = format!("order {:.3}, error {finest:.3e} at 65x65", study.order);
    if (1.8..=2.2).contains(&study.order) && finest <= 5e-4 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn check_constraints() -> Result<String, String> {
    let e = |x: toda_core::Error| x.to_string();
    let sys = build_system(SeriesTag::b(2).map_err(e)?, &[1, 3, 1]).map_err(e)?;
    let x = CMatrix::from_fn(3, 3, |i, j| {
        C64::new((i as f64) - 0.5 * (j as f64) + 0.25, 0.0)
    });
    let gen = (&x - &x.t_transpose()).scale_real(0.5);
    let spec = toda_core::GridSpec::on_box((0.0, 1.0), (0.0, 1.0), 17, 17).map_err(e)?;
    let src = toda_core::toda::ClosureSource(|zm: f64, zp: f64| {
        Ok(vec![
            CMatrix::scalar(C64::new((0.3 * zm - 0.2 * zp).exp(), 0.0)),
            expm(&gen.scale_real(zm + 0.5 * zp))?,
        ])
    });
    let data = CharacteristicData::from_source(spec, &src).map_err(e)?;
    let cm = CMatrix::from_fn(3, 1, |i, _| C64::new(0.5 + i as f64 * 0.25, 0.0));
    let cp = CMatrix::from_fn(1, 3, |_, j| C64::new(0.75 - j as f64 * 0.5, 0.0));
    let c = CBlocks::new(&sys, vec![cm], vec![cp]).map_err(e)?;
    let out = march(&sys, &c.into(), &data).map_err(e)?;
    let mut worst: f64 = 0.0;
    for i in 0..spec.n_minus {
        for j in 0..spec.n_plus {
            let g = assemble_gamma(&sys, &out.field.point(i, j)).map_err(e)?;
            worst = worst.max(group_membership(&sys.tag, &g, &1e-9).map_err(e)?.defect);
        }
    }
    let detail = format!("B2 k=(1,3,1) marched, worst group defect {worst:.2e}");
    if worst <= 1e-9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn check_equations() -> Result<String, String> {
    let mut count = 0;
    for (series, rank, k) in [
        (Series::A, 2, vec![1, 2]),
        (Series::B, 2, vec![1, 3, 1]),
        (Series::C, 2, vec![1, 2, 1]),
        (Series::D, 3, vec![1, 4, 1]),
    ] {
        let sys: TodaSystem = SeriesTag::new(series, rank)
            .and_then(|t| build_system(t, &k))
            .map_err(|e| e.to_string())?;
        let text = emit_equations(&sys, EquationFormat::Text);
        let lines = text.lines().filter(|l| l.contains(" = ")).count();
        if lines < sys.independent_count() {
            return Err(format!("{sys}: {lines} equations"));
        }
        count += 1;
    }
    Ok(format!("{count} systems rendered"))
}

#[derive(Serialize)]
struct CheckJson {
    name: &'static str,
    pass: bool,
    detail: String,
}

#[derive(Serialize)]
struct SelftestJson {
    format: &'static str,
    pass: bool,
    checks: Vec<CheckJson>,
}

pub fn selftest(args: &SelftestArgs) -> CliResult<Outcome> {
    no_latex(args.format, "selftest")?;
    let checks = [
        Check {
            name: "cartan",
            result: check_cartan(),
        },
        Check {
            name: "grading",
            result: check_grading(),
        },
        Check {
            name: "equations",
            result: check_equations(),
        },
        Check {
            name: "march",
            result: check_march(),
        },
        Check {
            name: "constraints",
            result: check_constraints(),
        },
    ];
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| c.result.is_err())
        .map(|c| c.name)
        .collect();
    let pass = failed.is_empty();
    let out = match args.format {
        Format::Json => files::to_document(&SelftestJson {
            format: "toda-selftest/1",
            pass,
            checks: checks
                .iter()
                .map(|c| CheckJson {
                    name: c.name,
                    pass: c.result.is_ok(),
                    detail: match &c.result {
                        Ok(d) | Err(d) => d.clone(),
                    },
                })
                .collect(),
        })?,
        _ => {
            let mut out = String::new();
            for c in &checks {
                let (word, d) = match &c.result {
                    Ok(d) => ("PASS", d),
                    Err(d) => ("FAIL", d),
                };
                let _ = writeln!(out, "{:<12} {word} {d}", c.name);
            }
            out
        }
    };
    Ok(if pass {
        Outcome::ok(out)
    } else {
        Outcome {
            stdout: out,
            exit: Exit::VerifyFailed,
            diagnostic: Some(CliError::new(
                Exit::VerifyFailed,
                format!("selftest failed: {}", failed.join(", ")),
            )),
        }
    })
}
