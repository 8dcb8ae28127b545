//! Bayesian FDR across cutoffs for an inclusion-probability matrix read from CSV, or a built-in one.
//!
//! `cargo run --release --example fdr_table -- [p_matrix.csv]`

use nalgebra::DMatrix;
use regnet::inference::{bayesian_fdr, fdr_curve, select_edges};
use regnet::io::table::read_table;

fn main() -> regnet::Result<()> {
    let (p, genes, regs) = match std::env::args().nth(1) {
        Some(path) => {
            let t = read_table(path.as_ref(), false)?;
            let p = DMatrix::from_fn(t.ids.len(), t.columns.len(), |i, j| t.cells[i][j].unwrap_or(0.0));
            (p, t.ids, t.columns)
        }
        None => {
            let p = DMatrix::from_row_slice(4, 3, &[0.99, 0.10, 0.85, 0.02, 0.93, 0.40, 0.81, 0.05, 0.60, 0.30, 0.97, 0.20]);
            let genes = (1..=4).map(|i| format!("gene{i}")).collect();
            let regs = (1..=3).map(|i| format!("reg{i}")).collect();
            (p, genes, regs)
        }
    };
    println!("cutoff  edges  FDR");
    let cutoffs: Vec<f64> = (1..=19).map(|i| f64::from(i) * 0.05).collect();
    for pt in fdr_curve(&p, &cutoffs)? {
        println!("{:>6.2}  {:>5}  {:.4}", pt.cutoff, pt.selected, pt.fdr);
    }
    let at = bayesian_fdr(&p, 0.8)?;
    println!("\n{} edges at P ≥ 0.8, expected {:.2} false", at.selected, at.fdr * at.selected as f64);
    for e in select_edges(&p, 0.8)? {
        println!("  {} <- {}  P = {:.3}", genes[e.g], regs[e.m], e.p);
    }
    Ok(())
}
