//! End-to-end acceptance checks, one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the summary lines are always shown.
//! The process exits nonzero when any criterion fails.

use std::collections::HashMap;
use std::io::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use phylozdd::bench::{self, BenchConfig, BenchRecord, Method, Status, CSV_HEADER};
use phylozdd::bnb::bnb_enumerate;
use phylozdd::datagen::{compression_family, generate, GenConfig};
use phylozdd::feasibility::{brute_force_solutions, feasible};
use phylozdd::reductions::{brute_force_matching_count, matching_to_idbpp, BipartiteGraph};
use phylozdd::zdd::{VarId, ZddRef, ZddStore};
use phylozdd::zdd_enum::{self, PairSchedule, VarOrder, ZddSolution};
use phylozdd::{canonical_key, is_laminar, is_sandwiched, Instance, Phylogeny};

type Outcome = Result<String, String>;

/// (peak, final) of every diagram built here.
static ZDD_SIZES: Mutex<Vec<(usize, usize)>> = Mutex::new(Vec::new());

fn zdd(inst: &Instance) -> ZddSolution {
    let sol = zdd_enum::solve(inst, VarOrder::CharacterMajor, PairSchedule::Lexicographic, None)
        .unwrap()
        .complete()
        .unwrap();
    ZDD_SIZES
        .lock()
        .unwrap()
        .push((sol.stats.peak_nodes, sol.stats.final_nodes));
    sol
}

fn sorted_keys<'a>(sols: impl IntoIterator<Item = &'a Phylogeny>) -> Vec<Vec<u8>> {
    let mut keys: Vec<Vec<u8>> = sols.into_iter().map(canonical_key).collect();
    keys.sort();
    keys
}

fn bnb_all(inst: &Instance) -> (Vec<Phylogeny>, phylozdd::bnb::BnbStats) {
    let mut out = Vec::new();
    let stats = bnb_enumerate(inst, |p| out.push(p.clone()), None);
    (out, stats)
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn compression_exactness() -> Outcome {
    let limit = Duration::from_secs(1);
    let mut slowest = Duration::ZERO;
    for c in 1..=5 {
        for k in 1..=4 {
            let inst = compression_family(c, k);
            let want = BigUint::from(1u8) << (k * c);
            let t = Instant::now();
            let z = zdd(&inst).count();
            let tz = t.elapsed();
            let t = Instant::now();
            let b = bnb_enumerate(&inst, |_| {}, None);
            let tb = t.elapsed();
            check(z == want, || format!("zdd count {z} != {want} at c={c} k={k}"))?;
            check(b.completed && b.found == want, || {
                format!("bnb count {} != {want} at c={c} k={k}", b.found)
            })?;
            check(tz < limit && tb < limit, || {
                format!("c={c} k={k}: zdd {tz:?}, bnb {tb:?}")
            })?;
            slowest = slowest.max(tz).max(tb);
        }
    }
    let big = zdd(&compression_family(5, 13)).count().to_string();
    check(big == "36893488147419103232", || format!("2^65 came out as {big}"))?;
    Ok(format!("20 cells exact, slowest solve {slowest:.2?}, (5,13) = {big}"))
}

fn compression_linearity() -> Outcome {
    let mut worst_ratio: f64 = 0.0;
    for k in 1..=4 {
        let mut size = HashMap::new();
        for c in [2, 4, 8, 16, 32] {
            let sol = zdd(&compression_family(c, k));
            check(sol.count() == BigUint::from(1u8) << (k * c), || {
                format!("count at c={c} k={k}")
            })?;
            size.insert(c, sol.node_count());
        }
        for c in [2, 4, 8, 16] {
            let (a, b) = (size[&c], size[&(2 * c)]);
            check(b as f64 <= 2.5 * a as f64, || {
                format!("k={k}: size {b} at c={} vs {a} at c={c}", 2 * c)
            })?;
            check(a <= 16 * (k * c + 1), || {
                format!("k={k} c={c}: size {a} above 16(kc+1)")
            })?;
            worst_ratio = worst_ratio.max(b as f64 / a as f64);
        }
    }
    Ok(format!("largest doubling ratio {worst_ratio:.3}"))
}

/// Instances with m, n <= 6 and at most 16 free pairs: perturbed laminar
/// truths, which are always feasible, alternated with unconstrained bounds.
fn oracle_suite() -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    let mut out = Vec::new();
    while out.len() < 600 {
        let (m, n) = (rng.random_range(1..=6), rng.random_range(1..=6));
        let inst = if out.len() % 2 == 0 {
            let p = *[0.1, 0.2, 0.3, 0.5].choose(&mut rng).unwrap();
            generate(&GenConfig {
                m,
                n,
                p,
                seed: rng.random(),
            })
            .unwrap()
        } else {
            let mut bounds = Vec::new();
            for _ in 0..m {
                let l: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.3)).collect();
                let u: Vec<usize> = (0..n).filter(|e| l.contains(e) || rng.random_bool(0.4)).collect();
                bounds.push((l, u));
            }
            let refs: Vec<(&[usize], &[usize])> = bounds.iter().map(|(l, u)| (l.as_slice(), u.as_slice())).collect();
            Instance::from_lists(n, &refs).unwrap()
        };
        if inst.free_count() <= 16 {
            out.push(inst);
        }
    }
    out
}

fn oracle_equivalence(suite: &[Instance]) -> Outcome {
    let started = Instant::now();
    let mut total = 0usize;
    let mut empty = 0;
    for (idx, inst) in suite.iter().enumerate() {
        let brute = sorted_keys(&brute_force_solutions(inst, usize::MAX).unwrap());
        let sol = zdd(inst);
        let z = sorted_keys(&sol.solutions(inst).unwrap());
        let (b, stats) = bnb_all(inst);
        let b = sorted_keys(&b);
        check(sol.count() == BigUint::from(brute.len()), || {
            format!("instance {idx}: zdd count")
        })?;
        check(stats.found == BigUint::from(brute.len()), || {
            format!("instance {idx}: bnb count")
        })?;
        check(z == brute, || format!("instance {idx}: zdd key set differs"))?;
        check(b == brute, || format!("instance {idx}: bnb key set differs"))?;
        total += brute.len();
        empty += usize::from(brute.is_empty());
    }
    let took = started.elapsed();
    check(took < Duration::from_secs(60), || format!("took {took:.1?}"))?;
    Ok(format!(
        "{} instances ({empty} infeasible), {total} solutions, {took:.2?}",
        suite.len()
    ))
}

fn random_graph(rng: &mut ChaCha8Rng) -> BipartiteGraph {
    let (a, b) = (rng.random_range(1..=5), rng.random_range(1..=5));
    let q = rng.random_range(0.2..0.9);
    let mut edges: Vec<(usize, usize)> = (0..a)
        .flat_map(|x| (0..b).map(move |y| (x, y)))
        .filter(|_| rng.random_bool(q))
        .collect();
    edges.shuffle(rng);
    edges.truncate(14);
    BipartiteGraph::new(a, b, edges).unwrap()
}

fn matching_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut largest = BigUint::ZERO;
    for idx in 0..240 {
        let g = random_graph(&mut rng);
        let want = brute_force_matching_count(&g).unwrap();
        let inst = matching_to_idbpp(&g);
        let z = zdd(&inst).count();
        let b = bnb_enumerate(&inst, |_| {}, None).found;
        check(z == want, || format!("graph {idx}: zdd {z} vs {want} matchings"))?;
        check(b == want, || format!("graph {idx}: bnb {b} vs {want} matchings"))?;
        largest = largest.max(want);
    }
    Ok(format!("240 graphs, up to {largest} matchings"))
}

fn bnb_recursion_bound(suite: &[Instance]) -> Outcome {
    let mut tightest: f64 = 0.0;
    for (idx, inst) in suite.iter().enumerate() {
        let (sols, stats) = bnb_all(inst);
        let keys = sorted_keys(&sols);
        check(keys.windows(2).all(|w| w[0] != w[1]), || {
            format!("instance {idx}: duplicate output")
        })?;
        let h = sols.len() as u64;
        let k = inst.free_count() as u64;
        if h == 0 {
            check(stats.calls == 1, || {
                format!("instance {idx}: {} calls while infeasible", stats.calls)
            })?;
        } else {
            let bound = 2 * (k + 1) * h + 1;
            check(stats.calls <= bound, || {
                format!("instance {idx}: {} calls > {bound}", stats.calls)
            })?;
            tightest = tightest.max(stats.calls as f64 / bound as f64);
        }
    }
    Ok(format!("largest calls/bound {tightest:.3}"))
}

fn feasibility_correctness(suite: &[Instance]) -> Outcome {
    let mut feasible_count = 0;
    for (idx, inst) in suite.iter().enumerate() {
        let nonempty = !brute_force_solutions(inst, usize::MAX).unwrap().is_empty();
        let r = feasible(inst);
        check(r.feasible == nonempty, || {
            format!("instance {idx}: feasible() = {}", r.feasible)
        })?;
        check(r.witness.is_some() == r.feasible, || {
            format!("instance {idx}: witness presence")
        })?;
        if let Some(w) = &r.witness {
            check(is_laminar(&w.sets).unwrap(), || {
                format!("instance {idx}: witness not laminar")
            })?;
            check(is_sandwiched(w, inst).unwrap(), || {
                format!("instance {idx}: witness outside bounds")
            })?;
        }
        feasible_count += usize::from(r.feasible);
    }
    Ok(format!("{feasible_count} feasible of {}", suite.len()))
}

const TABLE1_CONFIG: &str = "\
m = 50
n = 50
p = 0.1
instances = 20
seed = 1
methods = zdd,bnb
timeout_ms = 120000
pair_order = deferred-nearest
";

fn table_one(records: &[BenchRecord]) -> Outcome {
    let of = |method| records.iter().filter(move |r| r.method == method);
    let solved = |method| of(method).filter(|r| r.status == Status::Solved).count();
    let (zs, bs) = (solved(Method::Zdd), solved(Method::Bnb));
    let total = of(Method::Zdd).count();
    for z in of(Method::Zdd) {
        if let Some(b) = of(Method::Bnb).find(|b| b.instance_id == z.instance_id) {
            if z.status == Status::Solved && b.status == Status::Solved {
                check(z.count == b.count, || format!("{}: counts differ", z.instance_id))?;
            }
        }
    }
    let detail = format!("zdd solved {zs}/{total}, bnb solved {bs}/{total}");
    check(total == 20 && zs * 5 >= total * 4, || detail.clone())?;
    check(zs >= bs, || detail.clone())?;
    Ok(detail)
}

fn compression_ratio(records: &[BenchRecord]) -> Outcome {
    let ratios: Vec<f64> = records
        .iter()
        .filter(|r| r.method == Method::Zdd && r.count.as_ref().is_some_and(|h| *h >= BigUint::from(10u8)))
        .filter_map(BenchRecord::compression_ratio)
        .collect();
    let (mean, sd) = bench::mean_and_sd(&ratios).ok_or("no solved instance with h >= 10")?;
    let detail = format!(
        "mean log10(nodes/h) {mean:.2} (sd {sd:.2}) over {} instances",
        ratios.len()
    );
    check(mean <= -1.0, || detail.clone())?;
    Ok(detail)
}

fn peak_instrumentation(records: &[BenchRecord]) -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("table1.csv");
    let mut file = std::fs::File::create(&path).map_err(|e| e.to_string())?;
    writeln!(file, "{CSV_HEADER}").map_err(|e| e.to_string())?;
    for r in records {
        writeln!(file, "{}", r.csv_row()).map_err(|e| e.to_string())?;
    }
    drop(file);
    let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or(format!("no {name} column"))
    };
    let (method, status, nodes, peak) = (
        col("method")?,
        col("status")?,
        col("zdd_nodes")?,
        col("zdd_peak_nodes")?,
    );
    let mut csv_rows = 0;
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        if f[method] == "zdd" && f[status] == "solved" {
            let (n, p): (usize, usize) = (f[nodes].parse().unwrap(), f[peak].parse().unwrap());
            check(p >= n, || format!("csv row {line}: peak below final"))?;
            csv_rows += 1;
        }
    }
    let sizes = ZDD_SIZES.lock().unwrap();
    if let Some((p, f)) = sizes.iter().find(|(p, f)| p < f) {
        return Err(format!("a build reported peak {p} < final {f}"));
    }
    let max_ratio = sizes
        .iter()
        .filter(|(_, f)| *f > 2)
        .map(|&(p, f)| p as f64 / f as f64)
        .fold(1.0, f64::max);
    Ok(format!(
        "{} builds and {csv_rows} csv rows with peak >= final, largest peak/final {max_ratio:.2}",
        sizes.len()
    ))
}

const VARS: u32 = 4;
const SUBSETS: u32 = 1 << VARS;

/// Families over `VARS` variables as bitmasks: bit `b` stands for the member
/// whose variables are the set bits of `b`.
fn model_filter(f: u32, keep: impl Fn(u32) -> bool) -> u32 {
    (0..SUBSETS)
        .filter(|&b| f >> b & 1 == 1 && keep(b))
        .fold(0, |acc, b| acc | 1 << b)
}

fn model_onset(f: u32, v: u32) -> u32 {
    (0..SUBSETS)
        .filter(|&b| b >> v & 1 == 1 && f >> b & 1 == 1)
        .fold(0, |acc, b| acc | 1 << (b ^ 1 << v))
}

fn build_family(store: &mut ZddStore, members: &[u32], level: u32) -> ZddRef {
    if level == VARS {
        return if members.is_empty() {
            store.empty()
        } else {
            store.unit()
        };
    }
    let (hi, lo): (Vec<u32>, Vec<u32>) = members.iter().partition(|&&b| b >> level & 1 == 1);
    let lo = build_family(store, &lo, level + 1);
    let hi: Vec<u32> = hi.iter().map(|b| b ^ 1 << level).collect();
    let hi = build_family(store, &hi, level + 1);
    store.make_node(VarId(level), lo, hi).unwrap()
}

fn family_mask(store: &ZddStore, f: ZddRef) -> u32 {
    store
        .members(f)
        .unwrap()
        .iter()
        .map(|m| m.iter().fold(0u32, |acc, v| acc | 1 << v.0))
        .fold(0, |acc, b| acc | 1 << b)
}

fn engine_canonicity() -> Outcome {
    let mut store = ZddStore::new(VARS);
    let all = 1u32 << SUBSETS;
    let table: Vec<ZddRef> = (0..all)
        .map(|f| {
            let members: Vec<u32> = (0..SUBSETS).filter(|b| f >> b & 1 == 1).collect();
            build_family(&mut store, &members, 0)
        })
        .collect();
    let mut seen = HashMap::new();
    for (f, &r) in table.iter().enumerate() {
        check(seen.insert(r, f).is_none(), || {
            format!("families {f} and {} share a node", seen[&r])
        })?;
        check(family_mask(&store, r) == f as u32, || {
            format!("family {f} reads back wrong")
        })?;
        check(store.count(r).unwrap() == BigUint::from(f.count_ones()), || {
            format!("count of {f}")
        })?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let partners: Vec<u32> = (0..48)
        .map(|_| rng.random_range(0..all))
        .chain([0, all - 1, 1, 0x8000])
        .collect();
    let mut checked = 0u64;
    for f in 0..all {
        let r = table[f as usize];
        let expect =
            |got: ZddRef, want: u32, what: &str| check(got == table[want as usize], || format!("{what} on {f}"));
        for v in 0..VARS {
            let var = VarId(v);
            expect(
                store.cofactor(r, var, false).unwrap(),
                model_filter(f, |b| b >> v & 1 == 0),
                "offset",
            )?;
            expect(store.cofactor(r, var, true).unwrap(), model_onset(f, v), "onset")?;
            expect(
                store.with_var(r, var).unwrap(),
                model_filter(f, |b| b >> v & 1 == 1),
                "with_var",
            )?;
            for u in 0..VARS {
                if u == v {
                    continue;
                }
                let imp = model_filter(f, |b| b >> u & 1 == 0 || b >> v & 1 == 1);
                expect(store.filter_implication(r, VarId(u), var).unwrap(), imp, "implication")?;
                let exc = model_filter(f, |b| b >> u & 1 == 0 || b >> v & 1 == 0);
                expect(store.filter_exclusion(r, VarId(u), var).unwrap(), exc, "exclusion")?;
                checked += 2;
            }
            checked += 3;
        }
        for &g in &partners {
            expect(store.union(r, table[g as usize]).unwrap(), f | g, "union")?;
            expect(store.intersection(r, table[g as usize]).unwrap(), f & g, "intersection")?;
            checked += 2;
        }
    }
    let sequences = random_op_sequences()?;
    Ok(format!(
        "{all} families, {checked} operations, {sequences} op sequences canonical"
    ))
}

/// Random op sequences in fresh stores; handles must be equal exactly when
/// the modeled families are.
fn random_op_sequences() -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let all = 1u32 << SUBSETS;
    for seq in 0..1000 {
        let mut store = ZddStore::new(VARS);
        let mut pool: Vec<(ZddRef, u32)> = Vec::new();
        for _ in 0..3 {
            let f = rng.random_range(0..all);
            let members: Vec<u32> = (0..SUBSETS).filter(|b| f >> b & 1 == 1).collect();
            pool.push((build_family(&mut store, &members, 0), f));
        }
        for _ in 0..12 {
            let (a, fa) = pool[rng.random_range(0..pool.len())];
            let (b, fb) = pool[rng.random_range(0..pool.len())];
            let v = rng.random_range(0..VARS);
            let u = (v + rng.random_range(1..VARS)) % VARS;
            let next = match rng.random_range(0..7) {
                0 => (store.union(a, b).unwrap(), fa | fb),
                1 => (store.intersection(a, b).unwrap(), fa & fb),
                2 => (
                    store.cofactor(a, VarId(v), false).unwrap(),
                    model_filter(fa, |x| x >> v & 1 == 0),
                ),
                3 => (store.cofactor(a, VarId(v), true).unwrap(), model_onset(fa, v)),
                4 => (
                    store.with_var(a, VarId(v)).unwrap(),
                    model_filter(fa, |x| x >> v & 1 == 1),
                ),
                5 => (
                    store.filter_implication(a, VarId(u), VarId(v)).unwrap(),
                    model_filter(fa, |x| x >> u & 1 == 0 || x >> v & 1 == 1),
                ),
                _ => (
                    store.filter_exclusion(a, VarId(u), VarId(v)).unwrap(),
                    model_filter(fa, |x| x >> u & 1 == 0 || x >> v & 1 == 0),
                ),
            };
            pool.push(next);
        }
        for (x, fx) in &pool {
            check(family_mask(&store, *x) == *fx, || {
                format!("sequence {seq}: wrong family")
            })?;
            for (y, fy) in &pool {
                check((x == y) == (fx == fy), || format!("sequence {seq}: equality mismatch"))?;
            }
        }
    }
    Ok(1000)
}

fn run(results: &mut Vec<bool>, label: &str, f: impl FnOnce() -> Outcome) {
    let started = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let took = started.elapsed();
    match &outcome {
        Ok(detail) => println!("PASS {label}: {detail} [{took:.1?}]"),
        Err(detail) => println!("FAIL {label}: {detail} [{took:.1?}]"),
    }
    std::io::stdout().flush().ok();
    results.push(outcome.is_ok());
}

fn main() {
    // libtest flags such as --nocapture are accepted and ignored
    let mut results = Vec::new();
    let suite = oracle_suite();
    run(&mut results, "1 compression family exactness", compression_exactness);
    run(&mut results, "2 compression family linearity", compression_linearity);
    run(&mut results, "3 oracle equivalence", || oracle_equivalence(&suite));
    run(&mut results, "4 matching reduction", matching_reduction);
    run(&mut results, "5 bnb recursion bound", || bnb_recursion_bound(&suite));
    run(&mut results, "6 feasibility correctness", || {
        feasibility_correctness(&suite)
    });
    run(&mut results, "10 engine canonicity", engine_canonicity);
    // the corpus run takes minutes, so it goes last
    let mut records = Vec::new();
    run(&mut results, "7 random (50,50,0.1) corpus", || {
        let cfg: BenchConfig = TABLE1_CONFIG.parse().map_err(|e| format!("{e}"))?;
        records = bench::run_bench(&cfg, 1).map_err(|e| format!("{e}"))?;
        for r in records.iter().filter(|r| r.method == Method::Zdd) {
            if let (Some(p), Some(f)) = (r.zdd_peak_nodes, r.zdd_nodes) {
                ZDD_SIZES.lock().unwrap().push((p, f));
            }
        }
        table_one(&records)
    });
    run(&mut results, "8 compression ratio direction", || {
        compression_ratio(&records)
    });
    run(&mut results, "9 peak size instrumentation", || {
        peak_instrumentation(&records)
    });
    let passed = results.iter().filter(|&&ok| ok).count();
    println!("{passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
