use std::fs;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use pbhfsp_core::metrics::friedman_mean_ranks;
use pbhfsp_core::model::{benchmark_suite, generate_instance, read_instance, write_instance, GeneratorConfig, Instance};
use pbhfsp_core::moead::{solve as run_solver, SolverParams, Variant};
use pbhfsp_core::schedule::{check_feasibility, compute_timing, machine_energy, read_schedule, write_schedule, FeasibilityReport};
use rayon::prelude::*;

use crate::fronts::{read_front, score_fronts, Scores};
use crate::{CheckArgs, CompareArgs, GenArgs, MetricsArgs, SolveArgs};

/// Exit code of `check` for an infeasible schedule.
pub const EXIT_INFEASIBLE: u8 = 2;

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn load(path: &Path) -> Result<Instance> {
    read_instance(path).with_context(|| format!("loading instance {}", path.display()))
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "instance".into(), |s| s.to_string_lossy().into_owned())
}

pub fn gen(a: &GenArgs) -> Result<ExitCode> {
    create_dir(&a.out)?;
    let configs: Vec<(String, GeneratorConfig)> = if a.suite {
        benchmark_suite(a.seed)
    } else {
        let cfg = GeneratorConfig::new(a.jobs, a.stages, a.machines, a.batch_prob, a.seed);
        vec![(format!("n{}_s{}_m{}_seed{}", a.jobs, a.stages, a.machines, a.seed), cfg)]
    };
    for (name, cfg) in configs {
        let inst = generate_instance(&cfg)?;
        let path = a.out.join(format!("{name}.json"));
        write_instance(&inst, &path)?;
        println!("{}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

pub fn solve(a: &SolveArgs) -> Result<ExitCode> {
    let inst = load(&a.instance)?;
    let params = a.solver.params();
    let out = run_solver(&inst, &params, a.seed)?;
    create_dir(&a.out)?;
    fs::write(a.out.join("report.json"), out.report.to_json()?)?;
    fs::write(a.out.join("front.csv"), out.report.front_csv())?;
    let dir = a.out.join("schedules");
    create_dir(&dir)?;
    for (k, s) in out.archive.iter().enumerate() {
        write_schedule(&s.schedule, dir.join(format!("front_{k}.json")))?;
    }
    let r = &out.report;
    println!(
        "{} on {}: {} front points, {} evaluations, {} generations",
        params.variant,
        a.instance.display(),
        r.front.len(),
        r.counters.evaluations,
        r.generations
    );
    for o in &r.front {
        println!("  makespan {} tec {}", o.makespan, o.tec);
    }
    Ok(ExitCode::SUCCESS)
}

pub fn check(a: &CheckArgs) -> Result<ExitCode> {
    let inst = load(&a.instance)?;
    let sched = read_schedule(&a.schedule).with_context(|| format!("loading schedule {}", a.schedule.display()))?;
    let timing = compute_timing(&inst, &sched);
    match check_feasibility(&inst, &sched, &timing) {
        FeasibilityReport::Pass => {
            let tec: f64 = machine_energy(&inst, &sched, timing.makespan).iter().map(|e| e.load + e.idle).sum();
            println!("feasible: makespan {} tec {}", timing.makespan, tec);
            if let Some(out) = &a.out {
                fs::write(out, timing.to_csv(inst.n_stages()))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        FeasibilityReport::Violated(v) => {
            println!("infeasible: {v}");
            Ok(ExitCode::from(EXIT_INFEASIBLE))
        }
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".into(), |v| v.to_string())
}

pub fn metrics(a: &MetricsArgs) -> Result<ExitCode> {
    let fronts: Vec<Vec<[f64; 2]>> = a.fronts.iter().map(|p| read_front(p)).collect::<Result<_>>()?;
    if let Some((p, _)) = a.fronts.iter().zip(&fronts).find(|(_, f)| f.is_empty()) {
        bail!("front {} has no points", p.display());
    }
    let scores = score_fronts(&fronts)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["front", "points", "hv", "igd", "spread"])?;
    for ((p, f), s) in a.fronts.iter().zip(&fronts).zip(&scores) {
        w.write_record([
            p.display().to_string(),
            f.len().to_string(),
            s.hv.to_string(),
            s.igd.to_string(),
            fmt_opt(s.spread),
        ])?;
    }
    let text = String::from_utf8(w.into_inner()?)?;
    match &a.out {
        Some(out) => fs::write(out, text)?,
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

struct Run {
    instance: usize,
    variant: Variant,
    seed: u64,
    front: Vec<[f64; 2]>,
}

pub fn compare(a: &CompareArgs) -> Result<ExitCode> {
    if a.runs == 0 || a.variants.is_empty() {
        bail!("need at least one run and one variant");
    }
    let insts: Vec<Instance> = a.instance.iter().map(|p| load(p)).collect::<Result<_>>()?;
    let names: Vec<String> = a.instance.iter().map(|p| stem(p)).collect();
    let base = a.solver.params();
    base.validate()?;
    let jobs: Vec<(usize, Variant, u64)> = (0..insts.len())
        .flat_map(|k| a.variants.iter().flat_map(move |&v| (0..a.runs).map(move |r| (k, v, a.seed + r))))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(a.workers.max(1)).build()?;
    // collect keeps job order, so the merge below is independent of scheduling
    let runs: Vec<Run> = pool.install(|| {
        jobs.par_iter()
            .map(|&(k, variant, seed)| {
                let params = SolverParams { variant, ..base.clone() };
                let out = run_solver(&insts[k], &params, seed)?;
                log::info!("{} {} seed {}: {} points", names[k], variant, seed, out.report.front.len());
                Ok(Run {
                    instance: k,
                    variant,
                    seed,
                    front: out.report.front.iter().map(|o| o.as_array()).collect(),
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;

    create_dir(&a.out)?;
    let fronts_dir = a.out.join("fronts");
    create_dir(&fronts_dir)?;
    let mut scores: Vec<Option<Scores>> = vec![None; runs.len()];
    for k in 0..insts.len() {
        let idx: Vec<usize> = (0..runs.len()).filter(|&i| runs[i].instance == k).collect();
        let fronts: Vec<Vec<[f64; 2]>> = idx.iter().map(|&i| runs[i].front.clone()).collect();
        for (&i, s) in idx.iter().zip(score_fronts(&fronts)?) {
            scores[i] = Some(s);
        }
    }

    let mut w = csv::Writer::from_path(a.out.join("runs.csv"))?;
    w.write_record(["instance", "variant", "seed", "points", "hv", "igd", "spread"])?;
    for (run, s) in runs.iter().zip(&scores) {
        let s = s.expect("every run scored");
        w.write_record([
            names[run.instance].clone(),
            run.variant.to_string(),
            run.seed.to_string(),
            run.front.len().to_string(),
            s.hv.to_string(),
            s.igd.to_string(),
            fmt_opt(s.spread),
        ])?;
        let mut fw = csv::Writer::from_path(fronts_dir.join(format!("{}_{}_{}.csv", names[run.instance], run.variant, run.seed)))?;
        fw.write_record(["makespan", "tec"])?;
        for p in &run.front {
            fw.write_record([p[0].to_string(), p[1].to_string()])?;
        }
        fw.flush()?;
    }
    w.flush()?;

    // one case per (instance, seed); rows are variants in the given order
    let case_matrix = |metric: &dyn Fn(&Scores) -> f64| -> Vec<Vec<f64>> {
        a.variants
            .iter()
            .map(|&v| {
                runs.iter()
                    .zip(&scores)
                    .filter(|(r, _)| r.variant == v)
                    .map(|(_, s)| metric(s.as_ref().expect("scored")))
                    .collect()
            })
            .collect()
    };
    let mut table = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["metric".to_string(), "chi_square".to_string()];
    header.extend(a.variants.iter().map(|v| v.to_string()));
    table.write_record(&header)?;
    let rows: [(&str, bool, Box<dyn Fn(&Scores) -> f64>); 3] = [
        ("hv", true, Box::new(|s: &Scores| s.hv)),
        ("igd", false, Box::new(|s: &Scores| s.igd)),
        ("spread", false, Box::new(|s: &Scores| s.spread.unwrap_or(f64::INFINITY))),
    ];
    if a.variants.len() >= 2 {
        for (name, higher, f) in rows.iter() {
            let r = friedman_mean_ranks(&case_matrix(f.as_ref()), *higher)?;
            let mut rec = vec![name.to_string(), r.chi_square.to_string()];
            rec.extend(r.mean_ranks.iter().map(|x| x.to_string()));
            table.write_record(&rec)?;
        }
    }
    let text = String::from_utf8(table.into_inner()?)?;
    fs::write(a.out.join("ranks.csv"), &text)?;
    println!("mean ranks (higher is better), {} runs:", runs.len());
    print!("{text}");
    Ok(ExitCode::SUCCESS)
}
