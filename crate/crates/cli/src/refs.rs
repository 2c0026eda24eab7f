//! Reference minimizer/saddle sets for the benchmark suites, generated
//! by brute force (dense value grids or multistart Newton plus
//! quasi-Newton polish) and checked into the repository. `gen-refs`
//! regenerates them; the bench suites load them.

use std::path::Path;

use chebmin::bruteforce::{
    dedupe_points, fd_critical_points, fd_hessian_eigs, grid_local_minima, RefOptions,
};
use chebmin::driver::polish;
use chebmin::oracle::{deuflhard2d, make_benchmark, Benchmark, BoxDomain};

use crate::{write_atomic, CliError};

pub fn load_points(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        err: e.to_string(),
    })?;
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(|t| t.trim().parse()).collect();
        out.push(row.map_err(|e| CliError::Other(format!("bad reference row {line:?}: {e}")))?);
    }
    Ok(out)
}

fn points_csv(points: &[Vec<f64>]) -> String {
    let mut s = String::new();
    for p in points {
        let row: Vec<String> = p.iter().map(|v| format!("{v:.17e}")).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Local minima of a built-in 2-D benchmark in original coordinates:
/// strict minima on a dense value grid, polished by quasi-Newton descent.
fn benchmark_minima(bench: Benchmark, res: usize) -> Vec<Vec<f64>> {
    let dom = bench.default_domain();
    let o = make_benchmark(bench, &dom).expect("benchmark oracle");
    let f = |x: &[f64]| o.evaluate(x, 0.0);
    let unit = BoxDomain::unit(2);
    let seeds = grid_local_minima(&f, &unit, res);
    let mut mins: Vec<Vec<f64>> = seeds.iter().map(|s| polish(&o, s, 400)).collect();
    mins.sort_by(|a, b| a.partial_cmp(b).unwrap());
    dedupe_points(mins, 1e-4)
        .into_iter()
        .map(|m| dom.from_unit(&m))
        .collect()
}

/// The five ring critical points of the 2-D factor inside the stretched
/// (+,-) orthant (three minima, two saddles); the published study counts
/// exclude the central saddle at the orthant corner.
pub fn factor_ring_critical_points() -> Vec<(Vec<f64>, bool)> {
    let bx = BoxDomain::new(vec![-0.1, -1.1], vec![1.1, 0.1]).expect("factor box");
    let f = |x: &[f64]| deuflhard2d(x[0], x[1]);
    let opts = RefOptions {
        starts_per_axis: 61,
        residual_tol: 1e-9,
        dedupe_radius: 1e-6,
        interior_margin: 1e-6,
        ..RefOptions::default()
    };
    fd_critical_points(&f, &bx, &opts)
        .into_iter()
        .filter(|c| c[0].abs() + c[1].abs() > 0.5)
        .map(|c| {
            let eigs = fd_hessian_eigs(&f, &c, 1e-4);
            let is_min = eigs.iter().all(|&e| e > 1e-6);
            (c, is_min)
        })
        .collect()
}

/// Tensor products of the factor ring points: 9 minima and 16 saddles of
/// the 4-D composite inside the stretched orthant.
pub fn composite_orthant_reference() -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let ring = factor_ring_critical_points();
    let mut minima = Vec::new();
    let mut saddles = Vec::new();
    for (a, amin) in &ring {
        for (b, bmin) in &ring {
            let p = vec![a[0], a[1], b[0], b[1]];
            if *amin && *bmin {
                minima.push(p);
            } else {
                saddles.push(p);
            }
        }
    }
    minima.sort_by(|a, b| a.partial_cmp(b).unwrap());
    saddles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    (minima, saddles)
}

/// Regenerates every reference set under `dir`, verifying the expected
/// cardinalities.
pub fn generate_all(dir: &Path) -> Result<(), CliError> {
    let dejong = benchmark_minima(Benchmark::DeJong5, 2001);
    expect_count("dejong5 minima", dejong.len(), 25)?;
    write_atomic(&dir.join("dejong5_minima.csv"), &points_csv(&dejong))?;

    let deufl = benchmark_minima(Benchmark::Deuflhard2d, 1201);
    expect_count("deuflhard2d minima", deufl.len(), 6)?;
    write_atomic(&dir.join("deuflhard2d_minima.csv"), &points_csv(&deufl))?;

    let holder = benchmark_minima(Benchmark::HolderTable2, 2001);
    expect_count("holder_table2 minima", holder.len(), 42)?;
    write_atomic(&dir.join("holder_table2_minima.csv"), &points_csv(&holder))?;

    let (minima, saddles) = composite_orthant_reference();
    expect_count("deuflhard4d orthant minima", minima.len(), 9)?;
    expect_count("deuflhard4d orthant saddles", saddles.len(), 16)?;
    write_atomic(
        &dir.join("deuflhard4d_orthant_minima.csv"),
        &points_csv(&minima),
    )?;
    write_atomic(
        &dir.join("deuflhard4d_orthant_saddles.csv"),
        &points_csv(&saddles),
    )?;
    Ok(())
}

fn expect_count(what: &str, got: usize, want: usize) -> Result<(), CliError> {
    if got != want {
        return Err(CliError::Other(format!(
            "reference generation produced {got} {what}, expected {want}"
        )));
    }
    Ok(())
}
