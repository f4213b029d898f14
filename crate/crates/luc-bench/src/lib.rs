//! Access-counting benchmark over the client fleet.
//!
//! Each thread drives one client through a randomized operation stream,
//! recording per-operation wall-clock intervals and (optionally) the
//! shared-memory access delta. Interval contention `k` is derived post hoc
//! from the timestamps: for every sampled operation it is the number of
//! distinct processes (including the owner) with an invocation interval
//! overlapping the operation's own interval. Results are emitted as CSV,
//! one row per sampled operation, and simple least-squares fits turn the
//! samples into checks of the access-bound model
//! `accesses <= C1*n + C2*k*w + C3` (with `w` the object's declared
//! per-operation access bound).

use luc::client::{build_fleet_hooked, Variant};
use luc::workload::{Mix, OpStream};
use luc::{AccessHook, AccessKind, ObjectKind, ProcId};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

/// Per-operation think-time distribution, in microseconds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ThinkTime {
    None,
    Const(u64),
    Uniform(u64, u64),
    /// Exponential with the given mean.
    Exp(f64),
}

impl ThinkTime {
    pub fn sample(&self, rng: &mut impl Rng) -> Option<Duration> {
        match *self {
            ThinkTime::None => None,
            ThinkTime::Const(us) => Some(Duration::from_micros(us)),
            ThinkTime::Uniform(a, b) => Some(Duration::from_micros(rng.random_range(a..=b))),
            ThinkTime::Exp(mean) => {
                let u: f64 = 1.0 - rng.random::<f64>();
                Some(Duration::from_micros((-mean * u.ln()).round() as u64))
            }
        }
    }
}

impl FromStr for ThinkTime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "none" {
            return Ok(ThinkTime::None);
        }
        let mut parts = s.split(':');
        let head = parts.next().unwrap_or("");
        let nums: Vec<&str> = parts.collect();
        let parse_u = |t: &str| {
            t.parse::<u64>()
                .map_err(|e| format!("bad think-time number {t:?}: {e}"))
        };
        match (head, nums.as_slice()) {
            ("const", [x]) => Ok(ThinkTime::Const(parse_u(x)?)),
            ("uniform", [a, b]) => {
                let (a, b) = (parse_u(a)?, parse_u(b)?);
                if a > b {
                    return Err(format!("uniform think time has lo {a} > hi {b}"));
                }
                Ok(ThinkTime::Uniform(a, b))
            }
            ("exp", [m]) => {
                let m = m
                    .parse::<f64>()
                    .map_err(|e| format!("bad think-time mean {m:?}: {e}"))?;
                if !(m >= 0.0) {
                    return Err(format!("exp think time mean {m} must be >= 0"));
                }
                Ok(ThinkTime::Exp(m))
            }
            _ => Err(format!(
                "unknown think-time {s:?} (expected none, const:X, uniform:A:B, or exp:M)"
            )),
        }
    }
}

impl std::fmt::Display for ThinkTime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            ThinkTime::None => write!(f, "none"),
            ThinkTime::Const(x) => write!(f, "const:{x}"),
            ThinkTime::Uniform(a, b) => write!(f, "uniform:{a}:{b}"),
            ThinkTime::Exp(m) => write!(f, "exp:{m}"),
        }
    }
}

/// Which shared accesses the contention shaper may preempt.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum YieldAt {
    /// Any shared access.
    Any,
    /// Only the announce-side accesses (request store and toggle flip):
    /// parking a thread right there leaves its request pending, so other
    /// processes' phases pick it up and batch sizes actually grow with the
    /// yield probability instead of merely stretching wall-clock intervals.
    Announce,
}

impl FromStr for YieldAt {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "any" => Ok(YieldAt::Any),
            "announce" => Ok(YieldAt::Announce),
            other => Err(format!(
                "unknown yield point {other:?} (expected any or announce)"
            )),
        }
    }
}

/// Contention shaper: yields the OS thread with the given probability on
/// matching shared accesses, forcing mid-operation preemption and therefore
/// interval contention even on machines with few cores. Installed only on
/// the runtime variant (baselines have no access hook path).
pub struct YieldHook {
    ppm: u64,
    at: YieldAt,
    /// Consecutive yields per triggered preemption; longer bursts keep the
    /// thread parked across more of its peers' operations.
    burst: u32,
    /// Cap on simultaneously parked threads. With announce-side parking
    /// this pins the batch size the remaining runners encounter, giving a
    /// controllable contention ladder (`cap` parked + 1 runner).
    park_cap: u32,
    /// Announce-side parks suspend for this long (a real sleep, so parks
    /// from different threads reliably overlap and pending requests pile
    /// up to the cap); `Any`-mode preemptions use yield bursts instead.
    park: Duration,
    parked: AtomicU64,
    states: Box<[AtomicU64]>,
}

impl YieldHook {
    pub fn new(
        n: usize,
        prob: f64,
        at: YieldAt,
        burst: u32,
        park_cap: u32,
        park_us: u64,
        seed: u64,
    ) -> Arc<Self> {
        let ppm = (prob.clamp(0.0, 1.0) * 1_000_000.0) as u64;
        let states = (0..n)
            .map(|pid| {
                let s = seed ^ (pid as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
                AtomicU64::new(if s == 0 { 0x9e37_79b9_7f4a_7c15 } else { s })
            })
            .collect();
        Arc::new(YieldHook {
            ppm,
            at,
            burst: burst.max(1),
            park_cap,
            park: Duration::from_micros(park_us),
            parked: AtomicU64::new(0),
            states,
        })
    }

    /// Try to claim a parking slot; parking must never exceed the cap.
    fn claim_slot(&self) -> bool {
        let mut cur = self.parked.load(Ordering::Relaxed);
        loop {
            if cur >= self.park_cap as u64 {
                return false;
            }
            match self.parked.compare_exchange_weak(
                cur,
                cur + 1,
                Ordering::Relaxed,
                Ordering::Relaxed,
            ) {
                Ok(_) => return true,
                Err(now) => cur = now,
            }
        }
    }
}

impl AccessHook for YieldHook {
    fn on_access(&self, pid: ProcId, kind: AccessKind, _words: u32) {
        if self.at == YieldAt::Announce && !matches!(kind, AccessKind::FadToggle) {
            return;
        }
        let st = &self.states[pid];
        let mut x = st.load(Ordering::Relaxed);
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        st.store(x, Ordering::Relaxed);
        if x % 1_000_000 >= self.ppm {
            return;
        }
        if !self.claim_slot() {
            return;
        }
        match self.at {
            YieldAt::Announce => std::thread::sleep(self.park),
            YieldAt::Any => {
                for _ in 0..self.burst {
                    std::thread::yield_now();
                }
            }
        }
        self.parked.fetch_sub(1, Ordering::Relaxed);
    }
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub variant: Variant,
    pub object: ObjectKind,
    pub threads: usize,
    /// Operations per thread.
    pub ops: usize,
    pub mix: Option<Mix>,
    pub think: ThinkTime,
    pub seed: u64,
    /// Record per-operation access deltas (costs two counter reads per op).
    pub count_steps: bool,
    /// Probability of an OS yield per matching shared access (runtime
    /// variant only).
    pub yield_prob: f64,
    /// Which accesses may trigger a yield.
    pub yield_at: YieldAt,
    /// Consecutive yields per triggered preemption.
    pub yield_burst: u32,
    /// Cap on simultaneously parked threads (None: up to all of them).
    pub park_cap: Option<u32>,
    /// Park duration for announce-side parking, microseconds.
    pub park_us: u64,
}

/// One sampled operation. Timestamps are nanoseconds from the run origin.
#[derive(Clone, Copy, Debug)]
pub struct OpSample {
    pub pid: ProcId,
    pub start_ns: u64,
    pub end_ns: u64,
    /// Shared accesses consumed by this op (0 when not counting steps).
    pub accesses: u64,
}

impl OpSample {
    pub fn latency_ns(&self) -> u64 {
        self.end_ns.saturating_sub(self.start_ns)
    }
}

#[derive(Debug)]
pub struct BenchResult {
    /// The variant that actually ran (CAS-retry falls back to lock for
    /// objects without a hand-written implementation).
    pub effective: Variant,
    pub object: ObjectKind,
    pub n: usize,
    /// The object's declared worst-case accesses per sequential operation.
    pub w_bound: usize,
    /// Samples grouped by pid, each pid's ops in program order.
    pub samples: Vec<OpSample>,
    pub elapsed: Duration,
}

impl BenchResult {
    pub fn total_ops(&self) -> usize {
        self.samples.len()
    }

    pub fn throughput(&self) -> f64 {
        self.samples.len() as f64 / self.elapsed.as_secs_f64().max(1e-9)
    }

    pub fn max_accesses(&self) -> u64 {
        self.samples.iter().map(|s| s.accesses).max().unwrap_or(0)
    }

    pub fn mean_accesses(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.accesses).sum::<u64>() as f64 / self.samples.len() as f64
    }

    /// Interval contention per sample, parallel to `samples`.
    pub fn measured_k(&self) -> Vec<usize> {
        measured_k(&self.samples, self.n)
    }
}

/// Run the benchmark: `threads` OS threads, each applying `ops` operations
/// from its own seeded stream against its own client.
pub fn run_bench(cfg: &BenchConfig) -> BenchResult {
    let extra: Option<Arc<dyn AccessHook>> = if cfg.yield_prob > 0.0 {
        Some(YieldHook::new(
            cfg.threads,
            cfg.yield_prob,
            cfg.yield_at,
            cfg.yield_burst,
            cfg.park_cap.unwrap_or(cfg.threads as u32),
            cfg.park_us,
            cfg.seed,
        ))
    } else {
        None
    };
    let (fleet, effective) = build_fleet_hooked(cfg.variant, cfg.object, cfg.threads, extra);
    let w_bound = cfg.object.build().access_bound();

    let origin = Instant::now();
    let mut lanes: Vec<Vec<OpSample>> = Vec::with_capacity(cfg.threads);
    std::thread::scope(|scope| {
        let mut joins = Vec::with_capacity(cfg.threads);
        for (pid, mut client) in fleet.clients.into_iter().enumerate() {
            let cfg = cfg.clone();
            joins.push(scope.spawn(move || {
                let mut stream = OpStream::new(cfg.object, pid, cfg.seed);
                if let Some(mix) = cfg.mix.clone() {
                    stream = stream.with_mix(mix);
                }
                let mut rng = ChaCha8Rng::seed_from_u64(
                    cfg.seed ^ (pid as u64).wrapping_mul(0xd134_2543_de82_ef95) ^ 0xbe5c,
                );
                let mut out = Vec::with_capacity(cfg.ops);
                for _ in 0..cfg.ops {
                    if let Some(pause) = cfg.think.sample(&mut rng) {
                        if !pause.is_zero() {
                            std::thread::sleep(pause);
                        }
                    }
                    let req = stream.next_request();
                    let a0 = if cfg.count_steps { client.accesses() } else { 0 };
                    let start_ns = origin.elapsed().as_nanos() as u64;
                    client.apply(req.opcode, &req.args);
                    let end_ns = origin.elapsed().as_nanos() as u64;
                    let accesses = if cfg.count_steps {
                        client.accesses() - a0
                    } else {
                        0
                    };
                    out.push(OpSample {
                        pid,
                        start_ns,
                        end_ns,
                        accesses,
                    });
                }
                out
            }));
        }
        for j in joins {
            lanes.push(j.join().expect("bench thread panicked"));
        }
    });
    let elapsed = origin.elapsed();

    BenchResult {
        effective,
        object: cfg.object,
        n: cfg.threads,
        w_bound,
        samples: lanes.into_iter().flatten().collect(),
        elapsed,
    }
}

/// Interval contention per sample: the number of distinct pids (including
/// the sample's own) with an invocation interval overlapping the sample's
/// closed interval `[start_ns, end_ns]`. Computed post hoc from timestamps.
pub fn measured_k(samples: &[OpSample], n: usize) -> Vec<usize> {
    let mut per: Vec<Vec<(u64, u64)>> = vec![Vec::new(); n];
    for s in samples {
        per[s.pid].push((s.start_ns, s.end_ns));
    }
    // Per-pid ops never overlap each other, so sorting by start also sorts
    // the ends, which the binary search below relies on.
    for iv in &mut per {
        iv.sort_unstable();
    }
    samples
        .iter()
        .map(|s| {
            (0..n)
                .filter(|&q| q == s.pid || overlaps_any(&per[q], s.start_ns, s.end_ns))
                .count()
        })
        .collect()
}

fn overlaps_any(intervals: &[(u64, u64)], start: u64, end: u64) -> bool {
    // First interval whose end reaches `start`; it overlaps iff it begins
    // before `end` does.
    let i = intervals.partition_point(|&(_, e)| e < start);
    i < intervals.len() && intervals[i].0 <= end
}

/// Least squares `y ~= slope*x + intercept`; returns `(slope, intercept, r2)`.
pub fn fit_affine(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    assert!(n >= 2.0, "need at least two points to fit a line");
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    let slope = if denom.abs() < 1e-12 {
        0.0
    } else {
        (n * sxy - sx * sy) / denom
    };
    let intercept = (sy - slope * sx) / n;
    let pred: Vec<f64> = xs.iter().map(|x| slope * x + intercept).collect();
    (slope, intercept, r_squared(&pred, ys))
}

/// Least squares `y ~= c1*x1 + c2*x2 + c3` via the 3x3 normal equations.
/// Fails when the design matrix is singular (e.g. a regressor is constant
/// and collinear with the intercept).
pub fn fit_plane(x1: &[f64], x2: &[f64], ys: &[f64]) -> Result<(f64, f64, f64), String> {
    assert!(x1.len() == x2.len() && x2.len() == ys.len());
    let n = ys.len() as f64;
    if ys.len() < 3 {
        return Err("need at least three points to fit a plane".into());
    }
    let mut a = [[0.0f64; 4]; 3];
    let (mut s11, mut s12, mut s1, mut s22, mut s2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut s1y, mut s2y, mut sy) = (0.0, 0.0, 0.0);
    for i in 0..ys.len() {
        s11 += x1[i] * x1[i];
        s12 += x1[i] * x2[i];
        s1 += x1[i];
        s22 += x2[i] * x2[i];
        s2 += x2[i];
        s1y += x1[i] * ys[i];
        s2y += x2[i] * ys[i];
        sy += ys[i];
    }
    a[0] = [s11, s12, s1, s1y];
    a[1] = [s12, s22, s2, s2y];
    a[2] = [s1, s2, n, sy];
    // Gaussian elimination with partial pivoting.
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col].abs() < 1e-9 {
            return Err("singular normal equations (regressors lack variation)".into());
        }
        a.swap(col, pivot);
        for row in 0..3 {
            if row == col {
                continue;
            }
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    Ok((a[0][3] / a[0][0], a[1][3] / a[1][1], a[2][3] / a[2][2]))
}

/// Coefficient of determination; 1.0 when the targets are constant and
/// matched exactly.
pub fn r_squared(pred: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(pred.len(), ys.len());
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    let ss_res: f64 = pred.iter().zip(ys).map(|(p, y)| (p - y).powi(2)).sum();
    if ss_tot < 1e-12 {
        if ss_res < 1e-9 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    }
}

pub const CSV_HEADER: &str = "variant,object,n,measured_k,w_bound,accesses,latency_ns";

/// One emitted CSV row (also the parse target for downstream analysis).
#[derive(Clone, Debug, PartialEq)]
pub struct CsvRow {
    pub variant: String,
    pub object: String,
    pub n: usize,
    pub measured_k: usize,
    pub w_bound: usize,
    pub accesses: u64,
    pub latency_ns: u64,
}

/// Render the result as CSV: header first, then one row per sampled op.
/// No field needs quoting (variant and object names are bare words).
pub fn emit_csv(result: &BenchResult) -> String {
    let ks = result.measured_k();
    let mut out = String::with_capacity(64 * (result.samples.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (s, k) in result.samples.iter().zip(ks) {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            result.effective,
            result.object,
            result.n,
            k,
            result.w_bound,
            s.accesses,
            s.latency_ns()
        ));
    }
    out
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        Some(h) => return Err(format!("bad CSV header {h:?}")),
        None => return Err("empty CSV".into()),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(format!("row {} has {} fields, expected 7", i + 2, f.len()));
        }
        let num = |j: usize| -> Result<u64, String> {
            f[j].parse::<u64>()
                .map_err(|e| format!("row {} field {}: {e}", i + 2, j + 1))
        };
        rows.push(CsvRow {
            variant: f[0].to_string(),
            object: f[1].to_string(),
            n: num(2)? as usize,
            measured_k: num(3)? as usize,
            w_bound: num(4)? as usize,
            accesses: num(5)?,
            latency_ns: num(6)?,
        });
    }
    Ok(rows)
}

pub fn write_csv(result: &BenchResult, path: &std::path::Path) -> std::io::Result<()> {
    std::fs::write(path, emit_csv(result))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn think_time_parses_and_prints() {
        for (s, want) in [
            ("none", ThinkTime::None),
            ("const:25", ThinkTime::Const(25)),
            ("uniform:10:50", ThinkTime::Uniform(10, 50)),
            ("exp:40", ThinkTime::Exp(40.0)),
        ] {
            let got: ThinkTime = s.parse().unwrap();
            assert_eq!(got, want);
            assert_eq!(got.to_string().parse::<ThinkTime>().unwrap(), want);
        }
        for bad in ["", "const", "const:x", "uniform:9", "uniform:5:1", "exp:-1"] {
            assert!(bad.parse::<ThinkTime>().is_err(), "{bad:?} should not parse");
        }
    }

    #[test]
    fn think_time_samples_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert_eq!(ThinkTime::None.sample(&mut rng), None);
        for _ in 0..100 {
            let d = ThinkTime::Uniform(10, 50).sample(&mut rng).unwrap();
            assert!((10..=50).contains(&(d.as_micros() as u64)));
            assert_eq!(
                ThinkTime::Const(25).sample(&mut rng).unwrap(),
                Duration::from_micros(25)
            );
            assert!(ThinkTime::Exp(30.0).sample(&mut rng).unwrap() < Duration::from_secs(1));
        }
    }

    fn sample(pid: ProcId, start_ns: u64, end_ns: u64) -> OpSample {
        OpSample {
            pid,
            start_ns,
            end_ns,
            accesses: 0,
        }
    }

    #[test]
    fn measured_k_counts_overlapping_pids() {
        // pid0 [0,10], pid1 [5,15], pid2 [20,30]: the first two overlap each
        // other, the third runs alone.
        let samples = vec![sample(0, 0, 10), sample(1, 5, 15), sample(2, 20, 30)];
        assert_eq!(measured_k(&samples, 3), vec![2, 2, 1]);
    }

    #[test]
    fn measured_k_touching_endpoints_count() {
        // Closed intervals: meeting at a single instant still overlaps.
        let samples = vec![sample(0, 0, 10), sample(1, 10, 20)];
        assert_eq!(measured_k(&samples, 2), vec![2, 2]);
        let apart = vec![sample(0, 0, 10), sample(1, 11, 20)];
        assert_eq!(measured_k(&apart, 2), vec![1, 1]);
    }

    #[test]
    fn measured_k_scans_past_earlier_ops_of_same_pid() {
        // pid1 has an early non-overlapping op before the overlapping one.
        let samples = vec![
            sample(1, 0, 2),
            sample(1, 30, 40),
            sample(0, 25, 35),
            sample(2, 100, 110),
        ];
        assert_eq!(measured_k(&samples, 3), vec![1, 2, 2, 1]);
    }

    #[test]
    fn affine_fit_recovers_exact_line() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.5 * x + 2.0).collect();
        let (a, b, r2) = fit_affine(&xs, &ys);
        assert!((a - 3.5).abs() < 1e-9 && (b - 2.0).abs() < 1e-9);
        assert!((r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn plane_fit_recovers_exact_coefficients() {
        // y = 3*x1 + 5*x2 + 7 over a grid with real variation.
        let mut x1 = Vec::new();
        let mut x2 = Vec::new();
        let mut ys = Vec::new();
        for i in 1..=4u32 {
            for j in 0..=3u32 {
                x1.push(i as f64);
                x2.push((j * j) as f64);
                ys.push(3.0 * i as f64 + 5.0 * (j * j) as f64 + 7.0);
            }
        }
        let (c1, c2, c3) = fit_plane(&x1, &x2, &ys).unwrap();
        assert!((c1 - 3.0).abs() < 1e-6, "c1 = {c1}");
        assert!((c2 - 5.0).abs() < 1e-6, "c2 = {c2}");
        assert!((c3 - 7.0).abs() < 1e-6, "c3 = {c3}");
    }

    #[test]
    fn plane_fit_rejects_degenerate_input() {
        let x1 = [2.0, 2.0, 2.0, 2.0];
        let x2 = [1.0, 2.0, 3.0, 4.0];
        let ys = [5.0, 6.0, 7.0, 8.0];
        assert!(fit_plane(&x1, &x2, &ys).is_err());
    }

    #[test]
    fn csv_roundtrips() {
        let cfg = BenchConfig {
            variant: Variant::Luc,
            object: ObjectKind::Counter,
            threads: 2,
            ops: 8,
            mix: None,
            think: ThinkTime::None,
            seed: 3,
            count_steps: true,
            yield_prob: 0.0,
            yield_at: YieldAt::Any,
            yield_burst: 1,
            park_cap: None,
            park_us: 100,
        };
        let result = run_bench(&cfg);
        let text = emit_csv(&result);
        assert!(text.starts_with(CSV_HEADER));
        let rows = parse_csv(&text).unwrap();
        assert_eq!(rows.len(), 16);
        for row in &rows {
            assert_eq!(row.variant, "luc");
            assert_eq!(row.object, "counter");
            assert_eq!(row.n, 2);
            assert!(row.measured_k >= 1 && row.measured_k <= 2);
            assert!(row.accesses > 0);
        }
        assert!(parse_csv("nonsense\n1,2,3").is_err());
        assert!(parse_csv("").is_err());
    }

    #[test]
    fn solo_runtime_counter_accesses_are_flat() {
        // One thread, no contention: every inc() should cost the same number
        // of shared accesses, and the per-op deltas must add up to the
        // universe's own total.
        let cfg = BenchConfig {
            variant: Variant::Luc,
            object: ObjectKind::Counter,
            threads: 1,
            ops: 64,
            mix: Some(Mix::new(vec![("inc", 1)])),
            think: ThinkTime::None,
            seed: 11,
            count_steps: true,
            yield_prob: 0.0,
            yield_at: YieldAt::Any,
            yield_burst: 1,
            park_cap: None,
            park_us: 100,
        };
        let result = run_bench(&cfg);
        assert_eq!(result.effective, Variant::Luc);
        assert_eq!(result.samples.len(), 64);
        let first = result.samples[0].accesses;
        assert!(first > 0);
        for s in &result.samples {
            assert_eq!(s.accesses, first, "solo op cost drifted");
        }
        assert_eq!(result.measured_k(), vec![1; 64]);
    }

    #[test]
    fn baselines_report_accesses_too() {
        for variant in [Variant::Lock, Variant::CasRetry] {
            let cfg = BenchConfig {
                variant,
                object: ObjectKind::Counter,
                threads: 2,
                ops: 16,
                mix: None,
                think: ThinkTime::None,
                seed: 5,
                count_steps: true,
                yield_prob: 0.0,
                yield_at: YieldAt::Any,
                yield_burst: 1,
                park_cap: None,
                park_us: 100,
            };
            let result = run_bench(&cfg);
            assert_eq!(result.effective, variant);
            assert!(result.samples.iter().all(|s| s.accesses > 0));
        }
    }

    #[test]
    fn yield_hook_runs_without_disturbing_results() {
        let cfg = BenchConfig {
            variant: Variant::Luc,
            object: ObjectKind::Queue,
            threads: 2,
            ops: 32,
            mix: None,
            think: ThinkTime::None,
            seed: 9,
            count_steps: true,
            yield_prob: 0.5,
            yield_at: YieldAt::Any,
            yield_burst: 1,
            park_cap: None,
            park_us: 100,
        };
        let result = run_bench(&cfg);
        assert_eq!(result.samples.len(), 64);
        assert!(result.samples.iter().all(|s| s.accesses > 0));
    }
}
