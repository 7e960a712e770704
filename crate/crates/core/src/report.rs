//! CSV and JSON emission of result grids.
//!
//! Floats use Rust's shortest round-trip formatting (`{:?}`), so the output
//! is byte-for-byte reproducible and re-parses to the same values.

use std::io::{self, Write};

use crate::detector::{ClassScores, EvalReport};
use crate::stats::{BoxplotStats, DistributionComparison};
use crate::store::Label;

pub const COMPARISON_HEADER: &str = "r,n,p,kl,delta,wilcoxon_p,stars";
pub const BOXPLOT_HEADER: &str = "r,n,p,class,min,q1,median,q3,max";
pub const EVAL_HEADER: &str = "r,n,p,accuracy,f1,tp,fp,tn,fn";
pub const SCORES_HEADER: &str = "question_id,response_id,s_hall,s_nohall,predicted,truth";

pub fn write_comparison_csv<'a, W: Write>(
    mut out: W,
    rows: impl IntoIterator<Item = &'a DistributionComparison>,
) -> io::Result<()> {
    writeln!(out, "{COMPARISON_HEADER}")?;
    for c in rows {
        writeln!(
            out,
            "{},{},{},{:?},{:?},{:?},{}",
            c.cell.r,
            c.cell.n,
            c.cell.p,
            c.kl_divergence,
            c.median_difference,
            c.wilcoxon_p,
            c.significance
        )?;
    }
    out.flush()
}

fn boxplot_row<W: Write>(
    out: &mut W,
    c: &DistributionComparison,
    label: Label,
    b: &BoxplotStats,
) -> io::Result<()> {
    writeln!(
        out,
        "{},{},{},{},{:?},{:?},{:?},{:?},{:?}",
        c.cell.r, c.cell.n, c.cell.p, label, b.min, b.q1, b.median, b.q3, b.max
    )
}

/// Two rows per cell, hallucinated first.
pub fn write_boxplot_csv<'a, W: Write>(
    mut out: W,
    rows: impl IntoIterator<Item = &'a DistributionComparison>,
) -> io::Result<()> {
    writeln!(out, "{BOXPLOT_HEADER}")?;
    for c in rows {
        boxplot_row(&mut out, c, Label::Hallucinated, &c.boxplot_hallucinated)?;
        boxplot_row(&mut out, c, Label::Genuine, &c.boxplot_genuine)?;
    }
    out.flush()
}

pub fn write_eval_csv<'a, W: Write>(
    mut out: W,
    rows: impl IntoIterator<Item = &'a EvalReport>,
) -> io::Result<()> {
    writeln!(out, "{EVAL_HEADER}")?;
    for e in rows {
        let c = &e.confusion;
        writeln!(
            out,
            "{},{},{},{:?},{:?},{},{},{},{}",
            e.cell.r, e.cell.n, e.cell.p, e.accuracy, e.f1_hallucinated, c.tp, c.fp, c.tn, c.fn_
        )?;
    }
    out.flush()
}

pub fn write_scores_csv<'a, W: Write>(
    mut out: W,
    rows: impl IntoIterator<Item = &'a ClassScores>,
) -> io::Result<()> {
    writeln!(out, "{SCORES_HEADER}")?;
    for s in rows {
        writeln!(
            out,
            "{},{},{:?},{:?},{},{}",
            s.question_id, s.response_id, s.s_hall, s.s_nohall, s.predicted, s.truth
        )?;
    }
    out.flush()
}

/// Pretty-printed JSON array followed by a newline.
pub fn write_json<T: serde::Serialize + ?Sized, W: Write>(mut out: W, value: &T) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()
}
