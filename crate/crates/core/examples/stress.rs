// scratch: Table-1 grid-size sensitivity (deleted before finalizing)
use chebmin::bruteforce::{euclid, fd_critical_points, fd_hessian_eigs, RefOptions};
use chebmin::driver::{minimizers_split, RunOptions, SamplingMode};
use chebmin::dlsp::FitMethod;
use chebmin::oracle::{deuflhard2d, make_benchmark, Benchmark, BoxDomain};
use chebmin::planner::Plan;

fn refs() -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let bx2 = BoxDomain::new(vec![-0.1, -1.1], vec![1.1, 0.1]).unwrap();
    let f2 = |x: &[f64]| deuflhard2d(x[0], x[1]);
    let crit2: Vec<Vec<f64>> = fd_critical_points(&f2, &bx2, &RefOptions {
        starts_per_axis: 61, residual_tol: 1e-9, dedupe_radius: 1e-6,
        interior_margin: 1e-6, ..RefOptions::default()
    }).into_iter().filter(|c| c[0].abs() + c[1].abs() > 0.5).collect();
    let mut ref_min = Vec::new();
    let mut ref_sad = Vec::new();
    for a in &crit2 {
        let ea = fd_hessian_eigs(&f2, a, 1e-4);
        for b in &crit2 {
            let eb = fd_hessian_eigs(&f2, b, 1e-4);
            let amin = ea.iter().all(|&v| v > 1e-6);
            let bmin = eb.iter().all(|&v| v > 1e-6);
            let p = vec![a[0], a[1], b[0], b[1]];
            if amin && bmin { ref_min.push(p); } else { ref_sad.push(p); }
        }
    }
    (ref_min, ref_sad)
}

fn main() {
    let (ref_min, ref_sad) = refs();
    for (label, dom) in [
        ("orthant", BoxDomain::new(vec![-0.1, -1.1, -0.1, -1.1], vec![1.1, 0.1, 1.1, 0.1]).unwrap()),
        ("fullbox", BoxDomain::cube(4, -1.1, 1.1).unwrap()),
    ] {
        let o = make_benchmark(Benchmark::Deuflhard4d, &dom).unwrap();
        for side in [12u64] {
            for d in [3u32, 4, 5, 6, 8] {
                let plan = Plan::forced(4, 0.1, d, 0.0, side.pow(4) as u128);
                let opts = RunOptions { method: FitMethod::NormalEq, ..RunOptions::default() };
                let run = minimizers_split(&o, &plan, 2, SamplingMode::Grid, &opts).unwrap();
                let kmins: Vec<Vec<f64>> = run.merged_critical.iter()
                    .filter(|p| matches!(p.kind, chebmin::psolve::Kind::Minimizer))
                    .map(|p| dom.from_unit(&p.location)).collect();
                let ksads: Vec<Vec<f64>> = run.merged_critical.iter()
                    .filter(|p| matches!(p.kind, chebmin::psolve::Kind::Saddle))
                    .map(|p| dom.from_unit(&p.location)).collect();
                let nearest = |set: &[Vec<f64>], r: &[f64]| set.iter().map(|c| euclid(c, r)).fold(f64::INFINITY, f64::min);
                let dm: Vec<f64> = ref_min.iter().map(|r| nearest(&kmins, r)).collect();
                let ds: Vec<f64> = ref_sad.iter().map(|r| nearest(&ksads, r)).collect();
                let cm = dm.iter().filter(|&&v| v <= 0.1).count();
                let cs = ds.iter().filter(|&&v| v <= 0.1).count();
                let mm = dm.iter().filter(|&&v| v <= 0.1).fold(0.0f64, |a, &b| a.max(b));
                let ms = ds.iter().filter(|&&v| v <= 0.1).fold(0.0f64, |a, &b| a.max(b));
                eprintln!("{label} side={side} d={d}: min {cm}/9 (max {mm:.2e}) sad {cs}/16 (max {ms:.2e})");
            }
        }
    }
}
