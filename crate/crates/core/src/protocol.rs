//! In-process master/worker protocol: partition planning, sub-adjacency
//! extraction, message encoding, and the detection engine.
//!
//! Messages are length-prefixed binary frames — a tag byte, a little-endian
//! `u32` payload length, then the payload with every integer as little-endian
//! `u64` — so the same schema could back a socket transport unchanged. The
//! engine round-trips every task and result through this encoding even
//! in-process, which keeps the wire format exercised on every run and makes
//! the communication pattern measurable: after task distribution, the only
//! master-to-worker traffic is one broadcast of `k` pseudo-center positions,
//! `8·k` payload bytes total.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::master::{largest_remainder, master_cluster, PilotPolicy, PilotSet};
use crate::sbm::GroundTruth;
use crate::seeding::rng;
use crate::sparse::CsrMatrix;
use crate::worker::{worker_detect, WorkerResult, WorkerTask};

use rand::seq::SliceRandom;

/// How non-pilot nodes are split across workers.
#[derive(Debug, Clone, PartialEq)]
pub enum PartitionMode {
    /// Seeded shuffle into near-equal chunks (sizes differ by at most one).
    Even,
    /// Per-worker target block mixtures: row `m` of the matrix gives worker
    /// `m`'s desired fraction of each block (rows sum to 1). Used to study
    /// how skewed worker compositions degrade accuracy.
    Proportions(Array2<f64>),
}

impl PartitionMode {
    pub fn name(&self) -> &'static str {
        match self {
            PartitionMode::Even => "even",
            PartitionMode::Proportions(_) => "proportions",
        }
    }
}

/// A complete assignment of the graph: the pilot set plus one disjoint node
/// list per worker, together covering every node exactly once.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionPlan {
    pub pilot: PilotSet,
    /// Sorted node lists, one per worker; disjoint from each other and from
    /// the pilots, jointly covering the rest of the graph.
    pub worker_assignments: Vec<Vec<usize>>,
    pub mode: PartitionMode,
    pub seed: u64,
}

impl PartitionPlan {
    /// Validates disjointness and exact coverage of `0..num_nodes`.
    pub fn new(
        pilot: PilotSet,
        worker_assignments: Vec<Vec<usize>>,
        mode: PartitionMode,
        seed: u64,
        num_nodes: usize,
    ) -> Result<Self> {
        if worker_assignments.is_empty() {
            return Err(Error::InvalidParameter("plan needs at least one worker".into()));
        }
        let mut seen = vec![false; num_nodes];
        let mut mark = |u: usize| -> Result<()> {
            if u >= num_nodes {
                return Err(Error::InvalidParameter(format!(
                    "node {u} out of range for {num_nodes} nodes"
                )));
            }
            if seen[u] {
                return Err(Error::InvalidParameter(format!(
                    "node {u} assigned more than once"
                )));
            }
            seen[u] = true;
            Ok(())
        };
        for &p in pilot.indices() {
            mark(p)?;
        }
        for assignment in &worker_assignments {
            for w in assignment.windows(2) {
                if w[1] <= w[0] {
                    return Err(Error::InvalidParameter(
                        "worker assignments must be sorted and distinct".into(),
                    ));
                }
            }
            for &u in assignment {
                mark(u)?;
            }
        }
        if let Some(u) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidParameter(format!(
                "node {u} is neither pilot nor assigned to any worker"
            )));
        }
        Ok(Self {
            pilot,
            worker_assignments,
            mode,
            seed,
        })
    }

    pub fn num_workers(&self) -> usize {
        self.worker_assignments.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.pilot.len() + self.worker_assignments.iter().map(Vec::len).sum::<usize>()
    }
}

/// Splits the non-pilot nodes across `num_workers` workers.
///
/// Even mode shuffles them (seeded) and deals near-equal chunks. Proportions
/// mode distributes each block's remaining nodes across workers by
/// largest-remainder apportionment of the per-worker column weights, so each
/// block's availability is spent exactly and realized worker mixtures track
/// the requested rows as closely as integer counts allow.
pub fn plan_partition(
    num_nodes: usize,
    pilot: &PilotSet,
    num_workers: usize,
    mode: PartitionMode,
    truth: Option<&GroundTruth>,
    seed: u64,
) -> Result<PartitionPlan> {
    if num_workers == 0 {
        return Err(Error::InvalidParameter("need at least one worker".into()));
    }
    if *pilot.indices().last().unwrap() >= num_nodes {
        return Err(Error::InvalidParameter(
            "pilot set does not fit the graph".into(),
        ));
    }
    let mut in_pilot = vec![false; num_nodes];
    for &p in pilot.indices() {
        in_pilot[p] = true;
    }
    let rest: Vec<usize> = (0..num_nodes).filter(|&u| !in_pilot[u]).collect();
    let mut r = rng(seed);
    let mut assignments: Vec<Vec<usize>> = vec![Vec::new(); num_workers];
    match &mode {
        PartitionMode::Even => {
            let mut pool = rest;
            pool.shuffle(&mut r);
            let base = pool.len() / num_workers;
            let extra = pool.len() % num_workers;
            let mut cursor = 0;
            for (w, assignment) in assignments.iter_mut().enumerate() {
                let take = base + usize::from(w < extra);
                assignment.extend_from_slice(&pool[cursor..cursor + take]);
                cursor += take;
            }
        }
        PartitionMode::Proportions(pi) => {
            let t = truth.ok_or_else(|| {
                Error::InvalidParameter(
                    "proportions partitioning requires ground-truth labels".into(),
                )
            })?;
            if t.len() != num_nodes {
                return Err(Error::ShapeMismatch {
                    expected: format!("{num_nodes} labels"),
                    got: format!("{}", t.len()),
                });
            }
            let k = t.num_blocks();
            if pi.dim() != (num_workers, k) {
                return Err(Error::ShapeMismatch {
                    expected: format!("{num_workers} x {k} proportion matrix"),
                    got: format!("{} x {}", pi.nrows(), pi.ncols()),
                });
            }
            for w in 0..num_workers {
                let mut sum = 0.0;
                for blk in 0..k {
                    let p = pi[[w, blk]];
                    if !p.is_finite() || p < 0.0 {
                        return Err(Error::IncompatibleProportions(format!(
                            "entry ({w}, {blk}) is {p}"
                        )));
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::IncompatibleProportions(format!(
                        "row {w} sums to {sum}, not 1"
                    )));
                }
            }
            let mut avail: Vec<Vec<usize>> = vec![Vec::new(); k];
            for &u in &rest {
                avail[t.labels()[u]].push(u);
            }
            for blk in 0..k {
                let list = &mut avail[blk];
                if list.is_empty() {
                    continue;
                }
                let weights: Vec<f64> = (0..num_workers).map(|w| pi[[w, blk]]).collect();
                if weights.iter().sum::<f64>() <= 0.0 {
                    return Err(Error::IncompatibleProportions(format!(
                        "no worker accepts block {blk}, but {} of its nodes need placement",
                        list.len()
                    )));
                }
                list.shuffle(&mut r);
                let counts = largest_remainder(&weights, list.len());
                let mut cursor = 0;
                for (w, assignment) in assignments.iter_mut().enumerate() {
                    assignment.extend_from_slice(&list[cursor..cursor + counts[w]]);
                    cursor += counts[w];
                }
            }
        }
    }
    for assignment in &mut assignments {
        assignment.sort_unstable();
    }
    PartitionPlan::new(pilot.clone(), assignments, mode, seed, num_nodes)
}

/// Builds worker `m`'s task: the `(l + n_m) x l` adjacency block whose rows
/// are the pilots (in pilot order) followed by the worker's own nodes, and
/// whose columns are the pilots. The leading `l x l` block is therefore the
/// pilot graph itself, identical across workers.
pub fn extract_subadjacency(
    a: &SparseGraph,
    plan: &PartitionPlan,
    m: usize,
) -> Result<WorkerTask> {
    if m >= plan.num_workers() {
        return Err(Error::InvalidParameter(format!(
            "worker {m} out of range for {} workers",
            plan.num_workers()
        )));
    }
    let pilots = plan.pilot.indices();
    let locals = &plan.worker_assignments[m];
    let mut rows = Vec::with_capacity(pilots.len() + locals.len());
    rows.extend_from_slice(pilots);
    rows.extend_from_slice(locals);
    let sub = a.adjacency_block(&rows, pilots)?;
    Ok(WorkerTask {
        worker_id: m,
        pilot_indices: pilots.to_vec(),
        local_indices: locals.clone(),
        sub_adjacency: sub,
    })
}

const TAG_ASSIGN_TASK: u8 = 1;
const TAG_BROADCAST_CENTERS: u8 = 2;
const TAG_RETURN_LABELS: u8 = 3;

/// Frame overhead: one tag byte plus the little-endian `u32` payload length.
pub const FRAME_HEADER_BYTES: usize = 5;

/// A protocol message. `BroadcastCenters` deliberately carries nothing but
/// the `k` pseudo-center positions: pilot labels never leave the master.
#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    AssignTask(WorkerTask),
    BroadcastCenters { center_positions: Vec<usize> },
    ReturnLabels(WorkerResult),
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_usize(out: &mut Vec<u8>, v: usize) {
    put_u64(out, v as u64);
}

fn put_slice(out: &mut Vec<u8>, xs: &[usize]) {
    put_usize(out, xs.len());
    for &x in xs {
        put_usize(out, x);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn u64(&mut self) -> Result<u64> {
        let end = self.pos + 8;
        if end > self.buf.len() {
            return Err(Error::MalformedMessage("truncated integer field".into()));
        }
        let v = u64::from_le_bytes(self.buf[self.pos..end].try_into().unwrap());
        self.pos = end;
        Ok(v)
    }

    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?)
            .map_err(|_| Error::MalformedMessage("integer field exceeds platform size".into()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    fn u8(&mut self) -> Result<u8> {
        if self.pos >= self.buf.len() {
            return Err(Error::MalformedMessage("truncated byte field".into()));
        }
        let v = self.buf[self.pos];
        self.pos += 1;
        Ok(v)
    }

    fn list(&mut self) -> Result<Vec<usize>> {
        let n = self.usize()?;
        self.check_remaining(n, 8)?;
        (0..n).map(|_| self.usize()).collect()
    }

    /// Guards length prefixes before allocation.
    fn check_remaining(&self, items: usize, bytes_each: usize) -> Result<()> {
        if items.checked_mul(bytes_each).map_or(true, |b| b > self.buf.len() - self.pos) {
            return Err(Error::MalformedMessage(
                "length prefix exceeds payload size".into(),
            ));
        }
        Ok(())
    }

    fn finish(self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::MalformedMessage(format!(
                "{} trailing bytes after payload",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

fn encode_task(out: &mut Vec<u8>, task: &WorkerTask) {
    put_usize(out, task.worker_id);
    put_slice(out, &task.pilot_indices);
    put_slice(out, &task.local_indices);
    let a = &task.sub_adjacency;
    put_usize(out, a.nrows());
    put_usize(out, a.ncols());
    put_usize(out, a.nnz());
    for &o in a.row_offsets() {
        put_usize(out, o);
    }
    for &c in a.col_indices() {
        put_usize(out, c);
    }
    // Entries are always 1.0 in an adjacency block, so values are not sent.
}

fn decode_task(r: &mut Reader) -> Result<WorkerTask> {
    let worker_id = r.usize()?;
    let pilot_indices = r.list()?;
    let local_indices = r.list()?;
    let nrows = r.usize()?;
    let ncols = r.usize()?;
    let nnz = r.usize()?;
    r.check_remaining(nrows + 1 + nnz, 8)?;
    let row_offsets: Vec<usize> = (0..=nrows).map(|_| r.usize()).collect::<Result<_>>()?;
    let col_indices: Vec<usize> = (0..nnz).map(|_| r.usize()).collect::<Result<_>>()?;
    let sub_adjacency = CsrMatrix::new(nrows, ncols, row_offsets, col_indices, vec![1.0; nnz])
        .map_err(|e| Error::MalformedMessage(format!("invalid CSR block: {e}")))?;
    let task = WorkerTask {
        worker_id,
        pilot_indices,
        local_indices,
        sub_adjacency,
    };
    task.validate()
        .map_err(|e| Error::MalformedMessage(format!("task violates its invariants: {e}")))?;
    Ok(task)
}

fn encode_result(out: &mut Vec<u8>, result: &WorkerResult) {
    put_usize(out, result.worker_id);
    put_slice(out, &result.labels);
    put_slice(out, &result.degenerate_nodes);
    match &result.left_singular {
        None => out.push(0),
        Some(u) => {
            out.push(1);
            put_usize(out, u.nrows());
            put_usize(out, u.ncols());
            for v in u.iter() {
                put_u64(out, v.to_bits());
            }
        }
    }
}

fn decode_result(r: &mut Reader) -> Result<WorkerResult> {
    let worker_id = r.usize()?;
    let labels = r.list()?;
    let degenerate_nodes = r.list()?;
    let left_singular = match r.u8()? {
        0 => None,
        1 => {
            let nrows = r.usize()?;
            let ncols = r.usize()?;
            r.check_remaining(nrows.checked_mul(ncols).ok_or_else(|| {
                Error::MalformedMessage("embedding dimensions overflow".into())
            })?, 8)?;
            let mut u = Array2::zeros((nrows, ncols));
            for i in 0..nrows {
                for j in 0..ncols {
                    u[[i, j]] = r.f64()?;
                }
            }
            Some(u)
        }
        other => {
            return Err(Error::MalformedMessage(format!(
                "bad embedding marker {other}"
            )))
        }
    };
    Ok(WorkerResult {
        worker_id,
        labels,
        degenerate_nodes,
        left_singular,
    })
}

impl Message {
    /// Serializes to one frame: tag byte, `u32` little-endian payload length,
    /// payload.
    pub fn encode(&self) -> Vec<u8> {
        let mut payload = Vec::new();
        let tag = match self {
            Message::AssignTask(task) => {
                encode_task(&mut payload, task);
                TAG_ASSIGN_TASK
            }
            Message::BroadcastCenters { center_positions } => {
                for &p in center_positions {
                    put_usize(&mut payload, p);
                }
                TAG_BROADCAST_CENTERS
            }
            Message::ReturnLabels(result) => {
                encode_result(&mut payload, result);
                TAG_RETURN_LABELS
            }
        };
        let len = u32::try_from(payload.len()).expect("payload exceeds u32 framing");
        let mut out = Vec::with_capacity(FRAME_HEADER_BYTES + payload.len());
        out.push(tag);
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(&payload);
        out
    }

    /// Decodes one complete frame, validating structure and invariants.
    pub fn decode(bytes: &[u8]) -> Result<Message> {
        if bytes.len() < FRAME_HEADER_BYTES {
            return Err(Error::MalformedMessage("frame shorter than header".into()));
        }
        let tag = bytes[0];
        let len = u32::from_le_bytes(bytes[1..5].try_into().unwrap()) as usize;
        if bytes.len() != FRAME_HEADER_BYTES + len {
            return Err(Error::MalformedMessage(format!(
                "frame length mismatch: header says {len}, payload has {}",
                bytes.len() - FRAME_HEADER_BYTES
            )));
        }
        let mut r = Reader::new(&bytes[FRAME_HEADER_BYTES..]);
        let message = match tag {
            TAG_ASSIGN_TASK => Message::AssignTask(decode_task(&mut r)?),
            TAG_BROADCAST_CENTERS => {
                if len == 0 || len % 8 != 0 {
                    return Err(Error::MalformedMessage(format!(
                        "center broadcast payload of {len} bytes is not a positive multiple of 8"
                    )));
                }
                let center_positions = (0..len / 8).map(|_| r.usize()).collect::<Result<_>>()?;
                Message::BroadcastCenters { center_positions }
            }
            TAG_RETURN_LABELS => Message::ReturnLabels(decode_result(&mut r)?),
            other => {
                return Err(Error::MalformedMessage(format!("unknown tag {other}")));
            }
        };
        r.finish()?;
        Ok(message)
    }
}

/// Worker execution strategy. Both must produce identical results; parallel
/// mode exists to exploit independent workers, not to change semantics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Sequential,
    Parallel,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Sequential => "sequential",
            Engine::Parallel => "parallel",
        })
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sequential" => Ok(Engine::Sequential),
            "parallel" => Ok(Engine::Parallel),
            other => Err(Error::InvalidParameter(format!(
                "unknown engine '{other}' (expected 'sequential' or 'parallel')"
            ))),
        }
    }
}

/// Optional knobs for a detection run.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Ask every worker to return its left singular vectors (needed by
    /// estimation-error metrics; costs `(l + n_m) x k` floats per worker).
    pub keep_embeddings: bool,
}

/// Wall-clock seconds per pipeline phase.
#[derive(Debug, Clone, Copy, Default)]
pub struct PhaseTimings {
    /// Pilot subgraph plus per-worker task construction and encoding.
    pub extract_s: f64,
    /// Master-side clustering and center selection.
    pub master_s: f64,
    /// All worker computation, including message decode/encode.
    pub workers_s: f64,
    /// Label gathering and result assembly.
    pub gather_s: f64,
}

impl PhaseTimings {
    pub fn total_s(&self) -> f64 {
        self.extract_s + self.master_s + self.workers_s + self.gather_s
    }
}

/// The gathered output of a detection run.
#[derive(Debug, Clone)]
pub struct ClusteringResult {
    pub num_nodes: usize,
    pub k: usize,
    /// Final label per node: pilots carry the master's labels, locals their
    /// worker's assignment.
    pub labels: Vec<usize>,
    /// The plan the run executed (kept for provenance and replay).
    pub plan: PartitionPlan,
    /// Global node ids of the pseudo centers, in cluster order.
    pub pseudo_center_nodes: Vec<usize>,
    /// Sorted global ids of nodes with no usable connectivity: pilots
    /// isolated within the pilot graph, plus locals without pilot links.
    pub degenerate_nodes: Vec<usize>,
    /// Payload bytes of the one master-to-workers broadcast.
    pub broadcast_payload_bytes: usize,
    pub seed: u64,
    pub engine: Engine,
    pub timings: PhaseTimings,
    /// Per-worker left singular vectors, present iff requested.
    pub worker_embeddings: Option<Vec<Array2<f64>>>,
}

impl ClusteringResult {
    /// Canonical little-endian encoding of the run's semantic content. Two
    /// runs agree exactly iff their canonical bytes agree. Wall-clock
    /// timings, the engine tag, and diagnostic embeddings are measurements
    /// about a run rather than results of it and are deliberately excluded.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        put_usize(&mut out, self.num_nodes);
        put_usize(&mut out, self.k);
        put_u64(&mut out, self.seed);
        put_usize(&mut out, self.broadcast_payload_bytes);
        put_slice(&mut out, &self.labels);
        out.push(match self.plan.pilot.policy {
            PilotPolicy::Stratified => 0,
            PilotPolicy::Uniform => 1,
        });
        put_u64(&mut out, self.plan.pilot.seed);
        put_slice(&mut out, self.plan.pilot.indices());
        put_u64(&mut out, self.plan.seed);
        match &self.plan.mode {
            PartitionMode::Even => out.push(0),
            PartitionMode::Proportions(pi) => {
                out.push(1);
                put_usize(&mut out, pi.nrows());
                put_usize(&mut out, pi.ncols());
                for v in pi.iter() {
                    put_u64(&mut out, v.to_bits());
                }
            }
        }
        put_usize(&mut out, self.plan.num_workers());
        for assignment in &self.plan.worker_assignments {
            put_slice(&mut out, assignment);
        }
        put_slice(&mut out, &self.pseudo_center_nodes);
        put_slice(&mut out, &self.degenerate_nodes);
        out
    }
}

/// Runs the full pipeline: extract tasks, cluster pilots on the master,
/// broadcast the pseudo-center positions, run every worker, gather labels.
///
/// The seed drives only the master's k-means (everything else is
/// deterministic given the plan), so a single-worker plan whose pilot set is
/// the whole graph reproduces the full-graph baseline exactly under the same
/// seed. Any worker failure aborts the run with the failing worker attached;
/// when several fail, the lowest worker id wins, regardless of engine.
pub fn run_detection(
    a: &SparseGraph,
    k: usize,
    plan: &PartitionPlan,
    engine: Engine,
    seed: u64,
) -> Result<ClusteringResult> {
    run_detection_with(a, k, plan, engine, seed, RunOptions::default())
}

/// [`run_detection`] with explicit options.
pub fn run_detection_with(
    a: &SparseGraph,
    k: usize,
    plan: &PartitionPlan,
    engine: Engine,
    seed: u64,
    options: RunOptions,
) -> Result<ClusteringResult> {
    let n = a.num_nodes();
    if plan.num_nodes() != n {
        return Err(Error::ShapeMismatch {
            expected: format!("plan covering {n} nodes"),
            got: format!("{}", plan.num_nodes()),
        });
    }

    let t0 = Instant::now();
    let a0 = a.induced_subgraph(plan.pilot.indices())?;
    let task_frames: Vec<Vec<u8>> = (0..plan.num_workers())
        .map(|m| Ok(Message::AssignTask(extract_subadjacency(a, plan, m)?).encode()))
        .collect::<Result<_>>()?;
    let extract_s = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let (_pilot_eigvecs, centers) = master_cluster(&a0, k, seed)?;
    let broadcast = Message::BroadcastCenters {
        center_positions: centers.pilot_local_indices.clone(),
    }
    .encode();
    let broadcast_payload_bytes = broadcast.len() - FRAME_HEADER_BYTES;
    let master_s = t1.elapsed().as_secs_f64();

    let t2 = Instant::now();
    let run_worker = |frame: &[u8]| -> Result<Vec<u8>> {
        let Message::AssignTask(task) = Message::decode(frame)? else {
            return Err(Error::MalformedMessage("expected a task frame".into()));
        };
        let Message::BroadcastCenters { center_positions } = Message::decode(&broadcast)? else {
            return Err(Error::MalformedMessage("expected a center broadcast".into()));
        };
        let worker_id = task.worker_id;
        let result = worker_detect(&task, &center_positions, k, options.keep_embeddings)
            .map_err(|e| Error::WorkerFailed {
                worker_id,
                source: Box::new(e),
            })?;
        Ok(Message::ReturnLabels(result).encode())
    };
    let outcomes: Vec<Result<Vec<u8>>> = match engine {
        Engine::Sequential => task_frames.iter().map(|f| run_worker(f)).collect(),
        Engine::Parallel => std::thread::scope(|scope| {
            let handles: Vec<_> = task_frames
                .iter()
                .map(|f| scope.spawn(|| run_worker(f)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("worker thread panicked"))
                .collect()
        }),
    };
    let workers_s = t2.elapsed().as_secs_f64();

    let t3 = Instant::now();
    let mut results = Vec::with_capacity(plan.num_workers());
    for (m, outcome) in outcomes.into_iter().enumerate() {
        let frame = outcome?;
        let Message::ReturnLabels(result) = Message::decode(&frame)? else {
            return Err(Error::MalformedMessage("expected a label return".into()));
        };
        if result.worker_id != m {
            return Err(Error::MalformedMessage(format!(
                "worker {m} answered with id {}",
                result.worker_id
            )));
        }
        if result.labels.len() != plan.worker_assignments[m].len() {
            return Err(Error::MalformedMessage(format!(
                "worker {m} returned {} labels for {} nodes",
                result.labels.len(),
                plan.worker_assignments[m].len()
            )));
        }
        results.push(result);
    }
    let mut labels = vec![0usize; n];
    for (pos, &g) in plan.pilot.indices().iter().enumerate() {
        labels[g] = centers.master_labels[pos];
    }
    for (m, result) in results.iter().enumerate() {
        for (j, &g) in plan.worker_assignments[m].iter().enumerate() {
            if result.labels[j] >= k {
                return Err(Error::MalformedMessage(format!(
                    "worker {m} returned label {} with k = {k}",
                    result.labels[j]
                )));
            }
            labels[g] = result.labels[j];
        }
    }
    let mut degenerate: Vec<usize> = a0
        .isolated_nodes()
        .into_iter()
        .map(|p| plan.pilot.indices()[p])
        .collect();
    for result in &results {
        degenerate.extend_from_slice(&result.degenerate_nodes);
    }
    degenerate.sort_unstable();
    degenerate.dedup();
    let pseudo_center_nodes: Vec<usize> = centers
        .pilot_local_indices
        .iter()
        .map(|&p| plan.pilot.indices()[p])
        .collect();
    let worker_embeddings = options.keep_embeddings.then(|| {
        results
            .into_iter()
            .map(|r| r.left_singular.expect("embedding was requested"))
            .collect()
    });
    let gather_s = t3.elapsed().as_secs_f64();

    Ok(ClusteringResult {
        num_nodes: n,
        k,
        labels,
        plan: plan.clone(),
        pseudo_center_nodes,
        degenerate_nodes: degenerate,
        broadcast_payload_bytes,
        seed,
        engine,
        timings: PhaseTimings {
            extract_s,
            master_s,
            workers_s,
            gather_s,
        },
        worker_embeddings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sbm::{make_connectivity, sample_sbm, SbmParams};
    use crate::sc::spectral_cluster;

    fn pilots(indices: Vec<usize>, n: usize) -> PilotSet {
        PilotSet::from_indices(indices, PilotPolicy::Uniform, 0, n).unwrap()
    }

    fn small_sbm(n: usize, k: usize, seed: u64) -> (SparseGraph, GroundTruth) {
        let b = make_connectivity(0.7, 0.8, k).unwrap();
        let params = SbmParams::new(n, SbmParams::even_blocks(n, k), b).unwrap();
        sample_sbm(&params, seed)
    }

    #[test]
    fn even_partition_balances_sizes() {
        let plan = plan_partition(10, &pilots(vec![0, 3, 5, 9], 10), 2, PartitionMode::Even, None, 7)
            .unwrap();
        assert_eq!(plan.worker_assignments[0].len(), 3);
        assert_eq!(plan.worker_assignments[1].len(), 3);
        let plan = plan_partition(10, &pilots(vec![0, 3, 5, 9], 10), 4, PartitionMode::Even, None, 7)
            .unwrap();
        let sizes: Vec<usize> = plan.worker_assignments.iter().map(Vec::len).collect();
        assert_eq!(sizes.iter().sum::<usize>(), 6);
        assert!(sizes.iter().all(|&s| s == 1 || s == 2));
    }

    #[test]
    fn all_pilot_plan_leaves_workers_empty() {
        let plan = plan_partition(
            4,
            &pilots(vec![0, 1, 2, 3], 4),
            2,
            PartitionMode::Even,
            None,
            0,
        )
        .unwrap();
        assert!(plan.worker_assignments.iter().all(Vec::is_empty));
    }

    #[test]
    fn proportions_partition_spends_each_block_exactly() {
        let labels: Vec<usize> = (0..24).map(|i| i / 12).collect();
        let truth = GroundTruth::new(labels, 2).unwrap();
        let pi = crate::sbm::unbalanced_proportions(2, 3, 0.5).unwrap();
        let pilot = pilots(vec![0, 12], 24);
        let plan = plan_partition(24, &pilot, 3, PartitionMode::Proportions(pi), Some(&truth), 3)
            .unwrap();
        assert_eq!(plan.num_nodes(), 24);
        // 11 nodes of each block remain; they must all be placed.
        let mut per_block = [0usize; 2];
        for assignment in &plan.worker_assignments {
            for &u in assignment {
                per_block[truth.labels()[u]] += 1;
            }
        }
        assert_eq!(per_block, [11, 11]);
    }

    #[test]
    fn proportions_reject_unusable_matrices() {
        let labels: Vec<usize> = (0..8).map(|i| i / 4).collect();
        let truth = GroundTruth::new(labels, 2).unwrap();
        let pilot = pilots(vec![0, 4], 8);
        let dead_column = ndarray::array![[1.0, 0.0], [1.0, 0.0]];
        assert!(matches!(
            plan_partition(8, &pilot, 2, PartitionMode::Proportions(dead_column), Some(&truth), 0),
            Err(Error::IncompatibleProportions(_))
        ));
        let bad_rows = ndarray::array![[0.7, 0.7], [0.5, 0.5]];
        assert!(matches!(
            plan_partition(8, &pilot, 2, PartitionMode::Proportions(bad_rows), Some(&truth), 0),
            Err(Error::IncompatibleProportions(_))
        ));
    }

    #[test]
    fn extraction_matches_hand_built_block() {
        let g = SparseGraph::from_edges(3, &[(0, 1), (0, 2), (1, 2)]).unwrap().0;
        let plan = PartitionPlan::new(
            pilots(vec![0, 1], 3),
            vec![vec![2]],
            PartitionMode::Even,
            0,
            3,
        )
        .unwrap();
        let task = extract_subadjacency(&g, &plan, 0).unwrap();
        let dense = task.sub_adjacency.to_dense();
        assert_eq!(
            dense,
            ndarray::array![[0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]
        );
    }

    #[test]
    fn every_worker_sees_the_same_pilot_block() {
        let (g, truth) = small_sbm(40, 2, 5);
        let pilot = crate::master::sample_pilots(
            40,
            10,
            PilotPolicy::Stratified,
            Some(&truth),
            1,
        )
        .unwrap();
        let plan = plan_partition(40, &pilot, 3, PartitionMode::Even, None, 2).unwrap();
        let blocks: Vec<Vec<f64>> = (0..3)
            .map(|m| {
                let task = extract_subadjacency(&g, &plan, m).unwrap();
                let dense = task.sub_adjacency.to_dense();
                dense.slice(ndarray::s![..10, ..]).iter().copied().collect()
            })
            .collect();
        assert_eq!(blocks[0], blocks[1]);
        assert_eq!(blocks[1], blocks[2]);
    }

    #[test]
    fn messages_round_trip() {
        let (g, _) = small_sbm(20, 2, 9);
        let plan = plan_partition(20, &pilots((0..8).collect(), 20), 2, PartitionMode::Even, None, 4)
            .unwrap();
        let task = extract_subadjacency(&g, &plan, 1).unwrap();
        let encoded = Message::AssignTask(task.clone()).encode();
        assert_eq!(Message::decode(&encoded).unwrap(), Message::AssignTask(task));

        let centers = Message::BroadcastCenters {
            center_positions: vec![3, 0, 7],
        };
        let frame = centers.encode();
        assert_eq!(frame.len(), FRAME_HEADER_BYTES + 3 * 8);
        assert_eq!(Message::decode(&frame).unwrap(), centers);

        for embedding in [None, Some(Array2::from_shape_fn((4, 2), |(i, j)| i as f64 - j as f64))] {
            let result = Message::ReturnLabels(WorkerResult {
                worker_id: 1,
                labels: vec![0, 1, 1],
                degenerate_nodes: vec![14],
                left_singular: embedding,
            });
            assert_eq!(Message::decode(&result.encode()).unwrap(), result);
        }
    }

    #[test]
    fn decode_rejects_broken_frames() {
        let frame = Message::BroadcastCenters {
            center_positions: vec![1, 2],
        }
        .encode();
        assert!(Message::decode(&frame[..3]).is_err());
        assert!(Message::decode(&frame[..frame.len() - 1]).is_err());
        let mut bad_tag = frame.clone();
        bad_tag[0] = 9;
        assert!(matches!(
            Message::decode(&bad_tag),
            Err(Error::MalformedMessage(_))
        ));
        let mut trailing = frame.clone();
        trailing.extend_from_slice(&[0; 4]);
        assert!(Message::decode(&trailing).is_err());

        // A tampered task must not decode: this block puts a self-loop on
        // the pilot diagonal, which is structurally valid CSR but violates
        // the task invariants.
        let bad_block =
            CsrMatrix::new(3, 2, vec![0, 1, 2, 3], vec![0, 0, 1], vec![1.0; 3]).unwrap();
        let tampered = Message::AssignTask(WorkerTask {
            worker_id: 0,
            pilot_indices: vec![0, 1],
            local_indices: vec![2],
            sub_adjacency: bad_block,
        })
        .encode();
        assert!(matches!(
            Message::decode(&tampered),
            Err(Error::MalformedMessage(_))
        ));
    }

    #[test]
    fn single_all_pilot_worker_reproduces_the_baseline() {
        let (g, _) = small_sbm(30, 2, 21);
        let plan = plan_partition(
            30,
            &pilots((0..30).collect(), 30),
            1,
            PartitionMode::Even,
            None,
            0,
        )
        .unwrap();
        let seed = 4242;
        let distributed = run_detection(&g, 2, &plan, Engine::Sequential, seed).unwrap();
        let baseline = spectral_cluster(&g, 2, seed).unwrap();
        assert_eq!(distributed.labels, baseline.labels);
        assert_eq!(distributed.broadcast_payload_bytes, 16);
    }

    #[test]
    fn engines_agree_byte_for_byte() {
        let (g, truth) = small_sbm(60, 3, 33);
        let pilot =
            crate::master::sample_pilots(60, 24, PilotPolicy::Stratified, Some(&truth), 8).unwrap();
        let plan = plan_partition(60, &pilot, 3, PartitionMode::Even, None, 5).unwrap();
        let sequential = run_detection(&g, 3, &plan, Engine::Sequential, 99).unwrap();
        let parallel = run_detection(&g, 3, &plan, Engine::Parallel, 99).unwrap();
        assert_eq!(sequential.canonical_bytes(), parallel.canonical_bytes());
        assert_eq!(sequential.labels, parallel.labels);
    }

    #[test]
    fn worker_rank_deficiency_aborts_with_worker_id() {
        // Pilot path 0-1-2 has rank-2 adjacency; locals hang off node 1 only,
        // so the worker's 3-column block has two proportional columns and a
        // third singular value of exactly zero.
        let g = SparseGraph::from_edges(5, &[(0, 1), (1, 2), (1, 3), (1, 4)])
            .unwrap()
            .0;
        let plan = PartitionPlan::new(
            pilots(vec![0, 1, 2], 5),
            vec![vec![3, 4]],
            PartitionMode::Even,
            0,
            5,
        )
        .unwrap();
        let err = run_detection(&g, 3, &plan, Engine::Sequential, 1).unwrap_err();
        match err {
            Error::WorkerFailed { worker_id, source } => {
                assert_eq!(worker_id, 0);
                assert!(matches!(*source, Error::RankDeficient { .. }));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn degenerate_nodes_are_flagged_globally() {
        // Pilot 3 has no edges at all; locals 5 and 6 only touch each other,
        // so neither reaches any pilot.
        let g = SparseGraph::from_edges(7, &[(0, 1), (0, 2), (1, 2), (0, 4), (5, 6)])
            .unwrap()
            .0;
        let plan = PartitionPlan::new(
            pilots(vec![0, 1, 2, 3], 7),
            vec![vec![4, 5, 6]],
            PartitionMode::Even,
            0,
            7,
        )
        .unwrap();
        let result = run_detection(&g, 2, &plan, Engine::Sequential, 3).unwrap();
        assert_eq!(result.degenerate_nodes, vec![3, 5, 6]);
        assert_eq!(result.labels.len(), 7);
        assert_eq!(result.labels[5], 0);
        assert_eq!(result.labels[6], 0);
    }

    #[test]
    fn plan_validation_rejects_overlap_and_gaps() {
        let pilot = pilots(vec![0, 1], 5);
        assert!(PartitionPlan::new(
            pilot.clone(),
            vec![vec![1, 2], vec![3, 4]],
            PartitionMode::Even,
            0,
            5
        )
        .is_err());
        assert!(PartitionPlan::new(
            pilot.clone(),
            vec![vec![2], vec![3]],
            PartitionMode::Even,
            0,
            5
        )
        .is_err());
        assert!(PartitionPlan::new(
            pilot,
            vec![vec![2, 3, 4]],
            PartitionMode::Even,
            0,
            5
        )
        .is_ok());
    }
}
