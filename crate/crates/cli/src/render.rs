use mbc_core::axioms::Verdict;
use mbc_core::rational::{format_decimal, format_rational};
use mbc_core::rules::Mode;
use mbc_core::{AxiomReport, RuleValue, Q};

#[derive(Clone, Copy, Debug)]
pub struct Style {
    pub decimals: Option<usize>,
}

impl Style {
    pub fn cell(&self, v: &Q) -> String {
        match self.decimals {
            Some(k) => format_decimal(v, k),
            None => format_rational(v),
        }
    }
}

/// Exact values as fractions (or decimals); sampled values as decimals with a half-width.
pub fn allocation_cells(value: &RuleValue, style: Style) -> Vec<String> {
    let values = value.allocation.values();
    match &value.mode {
        Mode::Exact => values.iter().map(|v| style.cell(v)).collect(),
        Mode::Sampled(summary) => {
            let digits = style.decimals.unwrap_or(4);
            values
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    let mean = format_decimal(v, digits);
                    match &summary.half_width {
                        Some(h) => format!("{mean} +/- {:.*}", digits, h[j]),
                        None => mean,
                    }
                })
                .collect()
        }
    }
}

/// Left-aligned first column, right-aligned value columns.
pub fn table(header: Vec<String>, rows: Vec<Vec<String>>) -> String {
    let cols = header.len();
    let mut widths = vec![0; cols];
    for row in std::iter::once(&header).chain(&rows) {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    for row in std::iter::once(&header).chain(&rows) {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(k, cell)| {
                if k == 0 {
                    format!("{cell:<width$}", width = widths[0])
                } else {
                    format!("{cell:>width$}", width = widths[k])
                }
            })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

pub fn render_report(report: &AxiomReport) -> String {
    let mut out = match (&report.verdict, &report.witness) {
        (Verdict::Violated, Some(w)) => format!("{:<6} violated: {w}\n", report.axiom.tag()),
        (Verdict::Violated, None) => format!("{:<6} violated\n", report.axiom.tag()),
        (Verdict::HoldsOnInstance, _) => {
            format!("{:<6} holds on this instance\n", report.axiom.tag())
        }
    };
    for note in &report.notes {
        out.push_str(&format!("       note: {note}\n"));
    }
    out
}
