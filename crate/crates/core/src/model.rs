//! Problem instances: data model, validation, random generation and the
//! on-disk JSON format.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub type Time = u64;
pub type JobId = usize;
pub type StageId = usize;
/// Global machine index; machines are numbered stage by stage.
pub type MachineId = usize;

/// Version string written into generated instance files.
pub const GENERATOR_VERSION: &str = concat!("pbhfsp-gen/", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StageKind {
    /// One job at a time.
    Discrete,
    /// Parallel batching: several jobs share the machine, bounded by capacity.
    Batch,
}

impl StageKind {
    pub fn is_batch(self) -> bool {
        matches!(self, StageKind::Batch)
    }

    fn flag(self) -> u8 {
        match self {
            StageKind::Discrete => 0,
            StageKind::Batch => 1,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub seed: Option<u64>,
    pub generator_version: String,
}

/// An immutable PBHFSP instance.
///
/// Processing times are indexed `[job][stage][local machine]`; a zero entry
/// marks the machine as ineligible for that operation.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance<F = f64> {
    n_jobs: usize,
    n_stages: usize,
    stage_kinds: Vec<StageKind>,
    capacities: Vec<Vec<u32>>,
    job_sizes: Vec<u32>,
    proc_time: Vec<Vec<Vec<Time>>>,
    power_load: F,
    power_idle: F,
    meta: InstanceMeta,
    // derived machine numbering
    stage_offset: Vec<MachineId>,
    machine_stage: Vec<StageId>,
}

impl<F: Scalar> Instance<F> {
    /// Builds and validates an instance.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        stage_kinds: Vec<StageKind>,
        capacities: Vec<Vec<u32>>,
        job_sizes: Vec<u32>,
        proc_time: Vec<Vec<Vec<Time>>>,
        power_load: F,
        power_idle: F,
        meta: InstanceMeta,
    ) -> Result<Self> {
        let n_jobs = job_sizes.len();
        let n_stages = stage_kinds.len();
        let mut stage_offset = Vec::with_capacity(n_stages + 1);
        let mut machine_stage = Vec::new();
        stage_offset.push(0);
        for (j, caps) in capacities.iter().enumerate() {
            machine_stage.extend(std::iter::repeat(j).take(caps.len()));
            stage_offset.push(machine_stage.len());
        }
        let inst = Instance {
            n_jobs,
            n_stages,
            stage_kinds,
            capacities,
            job_sizes,
            proc_time,
            power_load,
            power_idle,
            meta,
            stage_offset,
            machine_stage,
        };
        inst.validate()?;
        Ok(inst)
    }

    fn validate(&self) -> Result<()> {
        if self.n_jobs == 0 {
            return Err(Error::invalid("job_sizes", "at least one job is required"));
        }
        if self.n_stages == 0 {
            return Err(Error::invalid("stage_types", "at least one stage is required"));
        }
        if self.capacities.len() != self.n_stages {
            return Err(Error::invalid(
                "machines",
                format!("{} stage entries for {} stages", self.capacities.len(), self.n_stages),
            ));
        }
        for (j, caps) in self.capacities.iter().enumerate() {
            if caps.is_empty() {
                return Err(Error::invalid(format!("machines[{j}]"), "stage has no machines"));
            }
            if let Some(k) = caps.iter().position(|&c| c == 0) {
                return Err(Error::invalid(format!("machines[{j}][{k}].capacity"), "must be positive"));
            }
        }
        if let Some(i) = self.job_sizes.iter().position(|&v| v == 0) {
            return Err(Error::invalid(format!("job_sizes[{i}]"), "must be positive"));
        }
        if self.proc_time.len() != self.n_jobs {
            return Err(Error::invalid(
                "proc_time",
                format!("{} job rows for {} jobs", self.proc_time.len(), self.n_jobs),
            ));
        }
        for (i, rows) in self.proc_time.iter().enumerate() {
            if rows.len() != self.n_stages {
                return Err(Error::invalid(
                    format!("proc_time[{i}]"),
                    format!("{} stage rows for {} stages", rows.len(), self.n_stages),
                ));
            }
            for (j, row) in rows.iter().enumerate() {
                if row.len() != self.capacities[j].len() {
                    return Err(Error::invalid(
                        format!("proc_time[{i}][{j}]"),
                        format!("{} entries for {} machines", row.len(), self.capacities[j].len()),
                    ));
                }
                if row.iter().all(|&p| p == 0) {
                    return Err(Error::invalid(
                        format!("proc_time[{i}][{j}]"),
                        "operation has no eligible machine",
                    ));
                }
                if self.stage_kinds[j].is_batch() {
                    for (k, &p) in row.iter().enumerate() {
                        if p > 0 && self.job_sizes[i] > self.capacities[j][k] {
                            return Err(Error::invalid(
                                format!("job_sizes[{i}]"),
                                format!(
                                    "size {} exceeds capacity {} of eligible machine {k} at batch stage {j}",
                                    self.job_sizes[i], self.capacities[j][k]
                                ),
                            ));
                        }
                    }
                }
            }
        }
        for (name, p) in [("power_load", self.power_load), ("power_idle", self.power_idle)] {
            if !p.is_finite() || p < F::zero() {
                return Err(Error::invalid(name, "must be finite and non-negative"));
            }
        }
        Ok(())
    }

    pub fn n_jobs(&self) -> usize {
        self.n_jobs
    }

    pub fn n_stages(&self) -> usize {
        self.n_stages
    }

    pub fn n_machines(&self) -> usize {
        self.machine_stage.len()
    }

    pub fn n_operations(&self) -> usize {
        self.n_jobs * self.n_stages
    }

    pub fn stage_kind(&self, stage: StageId) -> StageKind {
        self.stage_kinds[stage]
    }

    pub fn stage_kinds(&self) -> &[StageKind] {
        &self.stage_kinds
    }

    /// Global ids of the machines at `stage`.
    pub fn stage_machines(&self, stage: StageId) -> std::ops::Range<MachineId> {
        self.stage_offset[stage]..self.stage_offset[stage + 1]
    }

    pub fn machine_stage(&self, machine: MachineId) -> StageId {
        self.machine_stage[machine]
    }

    pub fn capacity(&self, machine: MachineId) -> u32 {
        let j = self.machine_stage[machine];
        self.capacities[j][machine - self.stage_offset[j]]
    }

    pub fn job_size(&self, job: JobId) -> u32 {
        self.job_sizes[job]
    }

    pub fn job_sizes(&self) -> &[u32] {
        &self.job_sizes
    }

    /// Processing time of `job` on `machine` at that machine's stage; 0 if ineligible.
    #[inline]
    pub fn pt(&self, job: JobId, machine: MachineId) -> Time {
        let j = self.machine_stage[machine];
        self.proc_time[job][j][machine - self.stage_offset[j]]
    }

    pub fn is_eligible(&self, job: JobId, machine: MachineId) -> bool {
        self.pt(job, machine) > 0
    }

    /// Eligible machines for operation (job, stage).
    pub fn eligible_machines(&self, job: JobId, stage: StageId) -> impl Iterator<Item = MachineId> + '_ {
        self.stage_machines(stage).filter(move |&m| self.pt(job, m) > 0)
    }

    /// Shortest processing time of (job, stage) over its eligible machines.
    pub fn min_pt(&self, job: JobId, stage: StageId) -> Time {
        self.eligible_machines(job, stage)
            .map(|m| self.pt(job, m))
            .min()
            .expect("every operation has an eligible machine")
    }

    pub fn power_load(&self) -> F {
        self.power_load
    }

    pub fn power_idle(&self) -> F {
        self.power_idle
    }

    pub fn meta(&self) -> &InstanceMeta {
        &self.meta
    }

    /// Converts the energy scalar, e.g. to run an `f64` instance with `f32` arithmetic.
    pub fn cast<G: Scalar>(&self) -> Instance<G> {
        Instance {
            n_jobs: self.n_jobs,
            n_stages: self.n_stages,
            stage_kinds: self.stage_kinds.clone(),
            capacities: self.capacities.clone(),
            job_sizes: self.job_sizes.clone(),
            proc_time: self.proc_time.clone(),
            power_load: G::from(self.power_load).expect("finite power"),
            power_idle: G::from(self.power_idle).expect("finite power"),
            meta: self.meta.clone(),
            stage_offset: self.stage_offset.clone(),
            machine_stage: self.machine_stage.clone(),
        }
    }

    /// Serializes to the JSON instance format.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&InstanceFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile<F> = serde_json::from_str(text)?;
        file.try_into()
    }
}

pub fn read_instance<F: Scalar>(path: impl AsRef<Path>) -> Result<Instance<F>> {
    Instance::from_json(&fs::read_to_string(path)?)
}

pub fn write_instance<F: Scalar>(instance: &Instance<F>, path: impl AsRef<Path>) -> Result<()> {
    let mut text = instance.to_json()?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct MachineFile {
    capacity: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
struct InstanceFile<F> {
    n_jobs: usize,
    n_stages: usize,
    stage_types: Vec<u8>,
    machines: Vec<Vec<MachineFile>>,
    job_sizes: Vec<u32>,
    proc_time: Vec<Vec<Vec<Time>>>,
    power_load: F,
    power_idle: F,
    #[serde(default)]
    meta: InstanceMeta,
}

impl<F: Scalar> From<&Instance<F>> for InstanceFile<F> {
    fn from(inst: &Instance<F>) -> Self {
        InstanceFile {
            n_jobs: inst.n_jobs,
            n_stages: inst.n_stages,
            stage_types: inst.stage_kinds.iter().map(|k| k.flag()).collect(),
            machines: inst
                .capacities
                .iter()
                .map(|caps| caps.iter().map(|&capacity| MachineFile { capacity }).collect())
                .collect(),
            job_sizes: inst.job_sizes.clone(),
            proc_time: inst.proc_time.clone(),
            power_load: inst.power_load,
            power_idle: inst.power_idle,
            meta: inst.meta.clone(),
        }
    }
}

impl<F: Scalar> TryFrom<InstanceFile<F>> for Instance<F> {
    type Error = Error;

    fn try_from(file: InstanceFile<F>) -> Result<Self> {
        if file.job_sizes.len() != file.n_jobs {
            return Err(Error::invalid(
                "job_sizes",
                format!("{} sizes for n_jobs = {}", file.job_sizes.len(), file.n_jobs),
            ));
        }
        if file.stage_types.len() != file.n_stages {
            return Err(Error::invalid(
                "stage_types",
                format!("{} flags for n_stages = {}", file.stage_types.len(), file.n_stages),
            ));
        }
        let kinds = file
            .stage_types
            .iter()
            .enumerate()
            .map(|(j, &t)| match t {
                0 => Ok(StageKind::Discrete),
                1 => Ok(StageKind::Batch),
                other => Err(Error::invalid(format!("stage_types[{j}]"), format!("expected 0 or 1, got {other}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let capacities = file
            .machines
            .into_iter()
            .map(|ms| ms.into_iter().map(|m| m.capacity).collect())
            .collect();
        Instance::new(
            kinds,
            capacities,
            file.job_sizes,
            file.proc_time,
            file.power_load,
            file.power_idle,
            file.meta,
        )
    }
}

/// Parameters of the random instance generator.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorConfig<F = f64> {
    pub n_jobs: usize,
    pub n_stages: usize,
    pub max_machines_per_stage: usize,
    pub batch_probability: f64,
    pub seed: u64,
    pub power_load: F,
    pub power_idle: F,
}

impl<F: Scalar> GeneratorConfig<F> {
    /// Config with the default power constants `Ep = 2`, `Es = 1`.
    pub fn new(n_jobs: usize, n_stages: usize, max_machines_per_stage: usize, batch_probability: f64, seed: u64) -> Self {
        GeneratorConfig {
            n_jobs,
            n_stages,
            max_machines_per_stage,
            batch_probability,
            seed,
            power_load: F::lit(2.0),
            power_idle: F::lit(1.0),
        }
    }
}

pub const CAPACITY_RANGE: std::ops::RangeInclusive<u32> = 10..=15;
pub const SIZE_RANGE: std::ops::RangeInclusive<u32> = 1..=10;
pub const PT_RANGE: std::ops::RangeInclusive<Time> = 1..=30;

/// Draws a random instance.
///
/// Machine counts are uniform in `1..=max_machines_per_stage`, each stage is a
/// batch stage with probability `batch_probability`, capacities are uniform in
/// 10..=15, job sizes in 1..=10 and processing times in 1..=30, drawn
/// independently for every machine.
pub fn generate_instance<F: Scalar>(cfg: &GeneratorConfig<F>) -> Result<Instance<F>> {
    if cfg.n_jobs == 0 {
        return Err(Error::param("n_jobs", "must be at least 1"));
    }
    if cfg.n_stages == 0 {
        return Err(Error::param("n_stages", "must be at least 1"));
    }
    if cfg.max_machines_per_stage == 0 {
        return Err(Error::param("max_machines_per_stage", "must be at least 1"));
    }
    if !(0.0..=1.0).contains(&cfg.batch_probability) {
        return Err(Error::param("batch_probability", "must lie in [0, 1]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut kinds = Vec::with_capacity(cfg.n_stages);
    let mut counts = Vec::with_capacity(cfg.n_stages);
    for _ in 0..cfg.n_stages {
        counts.push(rng.gen_range(1..=cfg.max_machines_per_stage));
        kinds.push(if rng.gen_bool(cfg.batch_probability) {
            StageKind::Batch
        } else {
            StageKind::Discrete
        });
    }
    let capacities: Vec<Vec<u32>> = counts
        .iter()
        .map(|&c| (0..c).map(|_| rng.gen_range(CAPACITY_RANGE)).collect())
        .collect();
    let job_sizes: Vec<u32> = (0..cfg.n_jobs).map(|_| rng.gen_range(SIZE_RANGE)).collect();
    let proc_time = (0..cfg.n_jobs)
        .map(|_| {
            counts
                .iter()
                .map(|&c| (0..c).map(|_| rng.gen_range(PT_RANGE)).collect())
                .collect()
        })
        .collect();
    Instance::new(
        kinds,
        capacities,
        job_sizes,
        proc_time,
        cfg.power_load,
        cfg.power_idle,
        InstanceMeta {
            seed: Some(cfg.seed),
            generator_version: GENERATOR_VERSION.to_string(),
        },
    )
}

/// The 45-instance benchmark grid: N in {20..60 step 10}, S and max machines in {3,4,5}.
///
/// Returns `(name, config)` pairs; seeds are `base_seed + index`.
pub fn benchmark_suite<F: Scalar>(base_seed: u64) -> Vec<(String, GeneratorConfig<F>)> {
    let mut out = Vec::with_capacity(45);
    for n in [20, 30, 40, 50, 60] {
        for s in [3, 4, 5] {
            for ms in [3, 4, 5] {
                let seed = base_seed + out.len() as u64;
                out.push((format!("n{n}_s{s}_m{ms}"), GeneratorConfig::new(n, s, ms, 0.5, seed)));
            }
        }
    }
    out
}

/// Two jobs, a one-machine batch stage (capacity 10) followed by a one-machine
/// discrete stage. Used throughout the tests.
pub fn tiny_a<F: Scalar>() -> Instance<F> {
    Instance::new(
        vec![StageKind::Batch, StageKind::Discrete],
        vec![vec![10], vec![1]],
        vec![4, 5],
        vec![vec![vec![3], vec![2]], vec![vec![5], vec![4]]],
        F::lit(2.0),
        F::lit(1.0),
        InstanceMeta::default(),
    )
    .expect("TINY-A is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_instance() {
        let inst: Instance = generate_instance(&GeneratorConfig::new(1, 1, 1, 0.0, 3)).unwrap();
        assert_eq!(inst.n_machines(), 1);
        assert_eq!(inst.stage_kind(0), StageKind::Discrete);
        assert!(PT_RANGE.contains(&inst.pt(0, 0)));
    }

    #[test]
    fn generator_is_deterministic() {
        let cfg = GeneratorConfig::new(20, 4, 4, 0.5, 77);
        let a: Instance = generate_instance(&cfg).unwrap();
        let b: Instance = generate_instance(&cfg).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    #[test]
    fn generator_rejects_bad_parameters() {
        assert!(generate_instance::<f64>(&GeneratorConfig::new(0, 1, 1, 0.5, 0)).is_err());
        assert!(generate_instance::<f64>(&GeneratorConfig::new(1, 0, 1, 0.5, 0)).is_err());
        assert!(generate_instance::<f64>(&GeneratorConfig::new(1, 1, 0, 0.5, 0)).is_err());
        assert!(generate_instance::<f64>(&GeneratorConfig::new(1, 1, 1, 1.5, 0)).is_err());
    }

    #[test]
    fn generated_instances_are_valid_and_cover_ranges() {
        let (mut caps, mut sizes, mut pts) = (vec![false; 16], vec![false; 11], vec![false; 31]);
        for seed in 0..1000 {
            let inst: Instance = generate_instance(&GeneratorConfig::new(8, 3, 4, 0.5, seed)).unwrap();
            // re-validation through the file format catches any invariant breach
            let back = Instance::<f64>::from_json(&inst.to_json().unwrap()).unwrap();
            assert_eq!(back, inst);
            for m in 0..inst.n_machines() {
                caps[inst.capacity(m) as usize] = true;
                for i in 0..inst.n_jobs() {
                    pts[inst.pt(i, m) as usize] = true;
                }
            }
            for &v in inst.job_sizes() {
                sizes[v as usize] = true;
            }
        }
        let covered = |v: &[bool]| v.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect::<Vec<_>>();
        assert_eq!(covered(&caps), (10..=15).collect::<Vec<_>>());
        assert_eq!(covered(&sizes), (1..=10).collect::<Vec<_>>());
        assert_eq!(covered(&pts), (1..=30).collect::<Vec<_>>());
    }

    #[test]
    fn suite_has_45_instances() {
        let suite = benchmark_suite::<f64>(1000);
        assert_eq!(suite.len(), 45);
        for (_, cfg) in &suite {
            let inst = generate_instance(cfg).unwrap();
            assert!(inst.n_jobs() >= 20 && inst.n_jobs() <= 60);
            assert!((3..=5).contains(&inst.n_stages()));
        }
    }

    #[test]
    fn tiny_a_round_trips_through_file() {
        let inst: Instance = tiny_a();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tiny.json");
        write_instance(&inst, &path).unwrap();
        assert_eq!(read_instance::<f64>(&path).unwrap(), inst);
    }

    fn tiny_json() -> serde_json::Value {
        serde_json::from_str(&tiny_a::<f64>().to_json().unwrap()).unwrap()
    }

    #[test]
    fn oversized_job_is_rejected() {
        let mut v = tiny_json();
        v["job_sizes"][0] = 12.into();
        let err = Instance::<f64>::from_json(&v.to_string()).unwrap_err();
        match err {
            Error::Validation { field, .. } => assert_eq!(field, "job_sizes[0]"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn all_zero_row_is_rejected() {
        let mut v = tiny_json();
        v["proc_time"][1][0] = serde_json::json!([0]);
        let err = Instance::<f64>::from_json(&v.to_string()).unwrap_err();
        match err {
            Error::Validation { field, .. } => assert_eq!(field, "proc_time[1][0]"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_file_is_an_error() {
        assert!(Instance::<f64>::from_json("{\"n_jobs\": 2").is_err());
        let mut v = tiny_json();
        v["stage_types"][0] = 7.into();
        assert!(Instance::<f64>::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn cast_to_f32_keeps_structure() {
        let inst: Instance = tiny_a();
        let small: Instance<f32> = inst.cast();
        assert_eq!(small.pt(1, 0), 5);
        assert_eq!(small.power_load(), 2.0f32);
    }
}
