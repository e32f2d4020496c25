//! Recovers branches from the densities of the walled two-box process,
//! checks the tree axioms, and evaluates the permanence residuals and the
//! residence statistic on a sampled ensemble.
//!
//!     cargo run --release --example tree_extraction

use qcp::compat::{build_compatible_ensemble, EnsembleMethod};
use qcp::scenarios::find;
use qcp::tree::{extract_tree, permanence_residuals, residence_statistic, validate_tree, ExtractOptions};

fn main() -> qcp::Result<()> {
    let info = find("einstein_boxes")?;
    let setup = info.build(&info.default_config())?;
    let qp = &setup.process;
    let grid = qp.space().as_grid().expect("grid process");
    let opts = ExtractOptions::for_grid(grid);
    let tree = extract_tree(qp, qp.time_grid(), opts.gap_threshold, opts.mass_floor)?;
    println!("extracted {} branches over {} times", tree.len(), tree.times().len());
    for i in 0..tree.len() {
        let last = tree.branch(i).last().expect("times");
        let xs: Vec<f64> = last.indices().map(|j| grid.coordinate(0, j)).collect();
        println!("  branch {i}: final support [{:.2}, {:.2}]", xs[0], xs[xs.len() - 1]);
    }
    println!("axiom violations: {}", validate_tree(&tree).len());
    let p = permanence_residuals(qp, &tree)?;
    println!("support residual {:.3e}, overlap residual {:.3e}", p.support_residual, p.overlap_residual);

    let ens = build_compatible_ensemble(qp, qp.time_grid(), 20_000, 7, EnsembleMethod::MonotoneTransport)?;
    let after: Vec<f64> = qp.time_grid().iter().copied().filter(|&t| t >= 2.0).collect();
    let r = residence_statistic(&ens, &tree, &after, 1e-3)?;
    println!("residence: E(Y) = {:.6}, P(Y <= 1 - 1e-3) = {}", r.summary.mean, r.summary.tail);
    println!("\n{}", tree.to_json()?.lines().take(6).collect::<Vec<_>>().join("\n"));
    Ok(())
}
