//! The independent block equations as data, shared by the renderers and
//! the numerical residuals.

use std::fmt::Write as _;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::liealg::symplectic_form;
use crate::scalar::Real;
use crate::CMat;

use super::{CBlocks, ConstraintSet, TodaSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symbol {
    Beta(usize),
    CPlus(usize),
    CMinus(usize),
    /// `J̃_{k/2}` acting on a block of size `k`.
    JTilde(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transpose {
    None,
    /// Antidiagonal transpose `a^T = Ĩ aᵗ Ĩ`.
    T,
    /// Ordinary transpose `aᵗ`.
    Plain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Factor {
    pub symbol: Symbol,
    pub inverse: bool,
    pub transpose: Transpose,
}

impl Factor {
    fn new(symbol: Symbol) -> Self {
        Self {
            symbol,
            inverse: false,
            transpose: Transpose::None,
        }
    }

    fn inv(mut self) -> Self {
        self.inverse = true;
        self
    }

    fn big_t(mut self) -> Self {
        self.transpose = Transpose::T;
        self
    }

    fn small_t(mut self) -> Self {
        self.transpose = Transpose::Plain;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    /// `+1` or `−1`.
    pub sign: i8,
    pub factors: Vec<Factor>,
}

/// `∂₊(β_a⁻¹∂₋β_a) = Σ terms`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equation {
    pub block: usize,
    pub terms: Vec<Term>,
}

fn beta(a: usize) -> Factor {
    Factor::new(Symbol::Beta(a))
}

fn cp(a: usize) -> Factor {
    Factor::new(Symbol::CPlus(a))
}

fn cm(a: usize) -> Factor {
    Factor::new(Symbol::CMinus(a))
}

/// The independent equations of `system`, one per independent block.
pub fn equations(system: &TodaSystem) -> Vec<Equation> {
    let p = system.p();
    let s = system.s();
    let ind = system.independent_count();
    (1..=ind)
        .map(|a| {
            let mut terms = Vec::new();
            let closing = match system.constraint {
                ConstraintSet::ANone => None,
                ConstraintSet::BdOddP | ConstraintSet::COddP if a == s + 1 => {
                    Some(system.constraint)
                }
                ConstraintSet::BdEvenP | ConstraintSet::CEvenP if a == s => Some(system.constraint),
                _ => None,
            };
            match closing {
                Some(ConstraintSet::BdOddP) => terms.push(Term {
                    sign: -1,
                    factors: vec![
                        beta(a).big_t(),
                        cp(s).big_t(),
                        beta(s).inv().big_t(),
                        cm(s).big_t(),
                    ],
                }),
                Some(ConstraintSet::COddP) => {
                    let j = Factor::new(Symbol::JTilde(system.k(a)));
                    terms.push(Term {
                        sign: 1,
                        factors: vec![
                            beta(a).inv(),
                            j,
                            cp(s).small_t(),
                            beta(s).inv().small_t(),
                            cm(s).small_t(),
                            j,
                        ],
                    })
                }
                Some(_) => terms.push(Term {
                    sign: -1,
                    factors: vec![beta(s).inv(), cp(s), beta(s).inv().big_t(), cm(s)],
                }),
                None if a < p => terms.push(Term {
                    sign: -1,
                    factors: vec![beta(a).inv(), cp(a), beta(a + 1), cm(a)],
                }),
                None => {}
            }
            if a > 1 {
                terms.push(Term {
                    sign: 1,
                    factors: vec![cm(a - 1), beta(a - 1).inv(), cp(a - 1), beta(a)],
                });
            }
            Equation { block: a, terms }
        })
        .collect()
}

/// Constraint relations of `system` as (text, LaTeX) pairs.
fn constraint_lines(system: &TodaSystem) -> Vec<(String, String)> {
    let p = system.p();
    let s = system.s();
    let mut out = Vec::new();
    if !system.is_constrained() {
        return out;
    }
    for a in 1..p {
        let b = p - a;
        if a > b {
            break;
        }
        for (sg, lsg) in [("-", "-"), ("+", "+")] {
            let txt_sg = if sg == "-" { "₋" } else { "₊" };
            if a == b {
                let sym = system.constraint == ConstraintSet::CEvenP;
                out.push((
                    format!(
                        "C{txt_sg}{}ᵀ = {}C{txt_sg}{}",
                        sub(a),
                        if sym { "" } else { "−" },
                        sub(a)
                    ),
                    format!(
                        "C_{{{lsg}{a}}}^T = {}C_{{{lsg}{a}}}",
                        if sym { "" } else { "-" }
                    ),
                ));
            } else if system.constraint == ConstraintSet::COddP && a == s {
                let kc = system.k(s + 1) / 2;
                if sg == "-" {
                    out.push((
                        format!(
                            "Ĩ{}C₋{}ᵗJ̃{} = −C₋{}",
                            sub(system.k(s)),
                            sub(s),
                            sub(kc),
                            sub(s + 1)
                        ),
                        format!(
                            "\\tilde I_{{{}}} C_{{-{s}}}^t \\tilde J_{{{kc}}} = -C_{{-{}}}",
                            system.k(s),
                            s + 1
                        ),
                    ));
                } else {
                    out.push((
                        format!(
                            "J̃{}C₊{}ᵗĨ{} = C₊{}",
                            sub(kc),
                            sub(s),
                            sub(system.k(s)),
                            sub(s + 1)
                        ),
                        format!(
                            "\\tilde J_{{{kc}}} C_{{+{s}}}^t \\tilde I_{{{}}} = C_{{+{}}}",
                            system.k(s),
                            s + 1
                        ),
                    ));
                }
            } else {
                out.push((
                    format!("C{txt_sg}{}ᵀ = −C{txt_sg}{}", sub(a), sub(b)),
                    format!("C_{{{lsg}{a}}}^T = -C_{{{lsg}{b}}}"),
                ));
            }
        }
    }
    for a in system.independent_count() + 1..=p {
        let partner = p - a + 1;
        out.push((
            format!("β{}ᵀ = β{}⁻¹", sub(partner), sub(a)),
            format!("\\beta_{{{partner}}}^T = \\beta_{{{a}}}^{{-1}}"),
        ));
    }
    if let Some(c) = system.central() {
        let k = system.k(c);
        if system.constraint == ConstraintSet::COddP {
            out.push((
                format!(
                    "J̃{}β{}ᵗJ̃{} = −β{}⁻¹",
                    sub(k / 2),
                    sub(c),
                    sub(k / 2),
                    sub(c)
                ),
                format!(
                    "\\tilde J_{{{}}} \\beta_{{{c}}}^t \\tilde J_{{{}}} = -\\beta_{{{c}}}^{{-1}}",
                    k / 2,
                    k / 2
                ),
            ));
        } else {
            out.push((
                format!("β{}ᵀ = β{}⁻¹", sub(c), sub(c)),
                format!("\\beta_{{{c}}}^T = \\beta_{{{c}}}^{{-1}}"),
            ));
        }
    }
    out
}

fn sub(n: usize) -> String {
    const DIGITS: [char; 10] = ['₀', '₁', '₂', '₃', '₄', '₅', '₆', '₇', '₈', '₉'];
    n.to_string()
        .chars()
        .map(|c| DIGITS[c.to_digit(10).expect("digit") as usize])
        .collect()
}

fn text_factor(f: &Factor) -> String {
    let mut out = match f.symbol {
        Symbol::Beta(a) => format!("β{}", sub(a)),
        Symbol::CPlus(a) => format!("C₊{}", sub(a)),
        Symbol::CMinus(a) => format!("C₋{}", sub(a)),
        Symbol::JTilde(k) => format!("J̃{}", sub(k / 2)),
    };
    if f.inverse {
        out.push_str("⁻¹");
    }
    match f.transpose {
        Transpose::None => {}
        Transpose::T => out.push('ᵀ'),
        Transpose::Plain => out.push('ᵗ'),
    }
    out
}

fn latex_factor(f: &Factor) -> String {
    let base = match f.symbol {
        Symbol::Beta(a) => format!("\\beta_{{{a}}}"),
        Symbol::CPlus(a) => format!("C_{{+{a}}}"),
        Symbol::CMinus(a) => format!("C_{{-{a}}}"),
        Symbol::JTilde(k) => format!("\\tilde J_{{{}}}", k / 2),
    };
    let mut sup = String::new();
    if f.inverse {
        sup.push_str("-1");
    }
    match f.transpose {
        Transpose::None => {}
        Transpose::T => sup.push('T'),
        Transpose::Plain => sup.push('t'),
    }
    if sup.is_empty() {
        base
    } else {
        format!("{base}^{{{sup}}}")
    }
}

fn render(eq: &Equation, latex: bool) -> String {
    let a = eq.block;
    let mut out = if latex {
        format!("\\partial_+(\\beta_{{{a}}}^{{-1}} \\partial_- \\beta_{{{a}}}) =")
    } else {
        format!("∂₊(β{0}⁻¹∂₋β{0}) =", sub(a))
    };
    if eq.terms.is_empty() {
        out.push_str(" 0");
    }
    for (idx, t) in eq.terms.iter().enumerate() {
        let sign = match (idx, t.sign < 0, latex) {
            (0, true, true) => " -",
            (0, true, false) => " −",
            (0, false, _) => " ",
            (_, true, true) => " - ",
            (_, true, false) => " − ",
            (_, false, _) => " + ",
        };
        out.push_str(sign);
        let parts: Vec<String> = t
            .factors
            .iter()
            .map(|f| {
                if latex {
                    latex_factor(f)
                } else {
                    text_factor(f)
                }
            })
            .collect();
        out.push_str(&parts.join(if latex { " " } else { "" }));
    }
    out
}

fn json_str(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn json_factor(f: &Factor) -> String {
    let (symbol, index) = match f.symbol {
        Symbol::Beta(a) => ("beta", a),
        Symbol::CPlus(a) => ("c_plus", a),
        Symbol::CMinus(a) => ("c_minus", a),
        Symbol::JTilde(k) => ("j_tilde", k / 2),
    };
    let transpose = match f.transpose {
        Transpose::None => "none",
        Transpose::T => "T",
        Transpose::Plain => "t",
    };
    format!(
        "{{\"symbol\": \"{symbol}\", \"index\": {index}, \"inverse\": {}, \"transpose\": \"{transpose}\"}}",
        f.inverse
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquationFormat {
    Text,
    Latex,
    Structured,
}

impl std::str::FromStr for EquationFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(Self::Text),
            "latex" => Ok(Self::Latex),
            "json" | "structured" => Ok(Self::Structured),
            other => Err(Error::Domain(format!("unknown equation format {other:?}"))),
        }
    }
}

/// Renders the independent equations and the constraint relations.
pub fn emit_equations(system: &TodaSystem, format: EquationFormat) -> String {
    let eqs = equations(system);
    let constraints = constraint_lines(system);
    let mut out = String::new();
    match format {
        EquationFormat::Text => {
            let _ = writeln!(out, "# {system}");
            for eq in &eqs {
                let _ = writeln!(out, "{}", render(eq, false));
            }
            if !constraints.is_empty() {
                let _ = writeln!(out, "# constraints");
                for (t, _) in &constraints {
                    let _ = writeln!(out, "{t}");
                }
            }
        }
        EquationFormat::Latex => {
            let _ = writeln!(out, "\\begin{{align*}}");
            let lines: Vec<String> = eqs
                .iter()
                .map(|e| format!("&{}", render(e, true)))
                .collect();
            let _ = writeln!(out, "{}", lines.join(" \\\\\n"));
            let _ = writeln!(out, "\\end{{align*}}");
            if !constraints.is_empty() {
                let _ = writeln!(out, "\\begin{{gather*}}");
                let lines: Vec<&str> = constraints.iter().map(|(_, l)| l.as_str()).collect();
                let _ = writeln!(out, "{}", lines.join(" \\\\\n"));
                let _ = writeln!(out, "\\end{{gather*}}");
            }
        }
        EquationFormat::Structured => {
            let sizes: Vec<String> = system.sizes().iter().map(|k| k.to_string()).collect();
            let _ = writeln!(out, "{{");
            let _ = writeln!(out, "  \"format\": \"toda-equations/1\",");
            let _ = writeln!(out, "  \"series\": \"{}\",", system.tag.series.letter());
            let _ = writeln!(out, "  \"rank\": {},", system.tag.rank);
            let _ = writeln!(out, "  \"blocks\": [{}],", sizes.join(", "));
            let _ = writeln!(out, "  \"constraint_set\": \"{}\",", system.constraint);
            let _ = writeln!(out, "  \"equations\": [");
            for (ei, eq) in eqs.iter().enumerate() {
                let _ = writeln!(out, "    {{");
                let _ = writeln!(out, "      \"block\": {},", eq.block);
                let _ = writeln!(out, "      \"text\": {},", json_str(&render(eq, false)));
                let _ = writeln!(out, "      \"terms\": [");
                for (ti, t) in eq.terms.iter().enumerate() {
                    let fs: Vec<String> = t.factors.iter().map(json_factor).collect();
                    let _ = writeln!(
                        out,
                        "        {{\"sign\": {}, \"factors\": [{}]}}{}",
                        t.sign,
                        fs.join(", "),
                        if ti + 1 < eq.terms.len() { "," } else { "" }
                    );
                }
                let _ = writeln!(out, "      ]");
                let _ = writeln!(out, "    }}{}", if ei + 1 < eqs.len() { "," } else { "" });
            }
            let _ = writeln!(out, "  ],");
            let cs: Vec<String> = constraints
                .iter()
                .map(|(t, _)| format!("    {}", json_str(t)))
                .collect();
            if cs.is_empty() {
                let _ = writeln!(out, "  \"constraints\": []");
            } else {
                let _ = writeln!(out, "  \"constraints\": [\n{}\n  ]", cs.join(",\n"));
            }
            let _ = writeln!(out, "}}");
        }
    }
    out
}

/// Per-point operands for evaluating terms.
pub(crate) struct PointData<'a, F: Real> {
    pub betas: &'a [CMat<F>],
    pub inverses: &'a [CMat<F>],
    pub c_minus: &'a CBlocks<F>,
    pub c_plus: &'a CBlocks<F>,
}

fn factor_value<F: Real>(f: &Factor, d: &PointData<'_, F>) -> Result<CMat<F>> {
    let base = match (f.symbol, f.inverse) {
        (Symbol::Beta(a), false) => d.betas[a - 1].clone(),
        (Symbol::Beta(a), true) => d.inverses[a - 1].clone(),
        (Symbol::CPlus(a), inv) => {
            let m = d.c_plus.plus(a).clone();
            if inv {
                m.inverse()?
            } else {
                m
            }
        }
        (Symbol::CMinus(a), inv) => {
            let m = d.c_minus.minus(a).clone();
            if inv {
                m.inverse()?
            } else {
                m
            }
        }
        (Symbol::JTilde(k), inv) => {
            let j = symplectic_form::<Complex<F>>(k / 2);
            if inv {
                -&j
            } else {
                j
            }
        }
    };
    Ok(match f.transpose {
        Transpose::None => base,
        Transpose::T => base.t_transpose(),
        Transpose::Plain => base.transpose(),
    })
}

/// Value of the right-hand side of `eq` at one point.
pub(crate) fn evaluate_rhs<F: Real>(eq: &Equation, d: &PointData<'_, F>) -> Result<CMat<F>> {
    let a = eq.block;
    let k = d.betas[a - 1].rows();
    let mut acc = CMat::<F>::zeros(k, k);
    for t in &eq.terms {
        let mut prod = factor_value(&t.factors[0], d)?;
        for f in &t.factors[1..] {
            prod = prod.try_mul(&factor_value(f, d)?)?;
        }
        acc = if t.sign < 0 {
            acc.try_sub(&prod)?
        } else {
            acc.try_add(&prod)?
        };
    }
    Ok(acc)
}
