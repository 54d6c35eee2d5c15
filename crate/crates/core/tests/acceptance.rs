use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Instant;

use mcdc::came::{assign_objects, choose_seeds, objective, update_modes, update_theta, CameState};
use mcdc::metrics::{accuracy, ami_from_table, ari_from_table, fm_from_table};
use mcdc::mgcpl::{run_epoch, seed_clusters, LearnerState};
use mcdc::similarity::{object_cluster_similarity, update_feature_weights};
use mcdc::{
    drop_missing, generate_synthetic, load_csv, run_bench, run_came, run_cluster, run_mgcpl, run_once, BenchAxis,
    BenchConfig, CameConfig, ClusterModel, ContingencyTable, CsvOptions, Dataset, RunConfig, SynthSpec, Variant,
    MISSING,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// One criterion at a time.
static SERIAL: Mutex<()> = Mutex::new(());

fn report(criterion: u32, pass: bool, detail: &str) {
    println!("criterion {criterion}: {} {detail}", if pass { "PASS" } else { "FAIL" });
}

fn lock() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

/// Every set partition of `0..n` as a restricted growth string.
fn partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0; n];
    fn grow(i: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for v in 0..=max + 1 {
            cur[i] = v;
            grow(i + 1, max.max(v), cur, out);
        }
    }
    if n > 0 {
        grow(1, 0, &mut cur, &mut out);
    }
    out
}

/// Pair counts: together in both, only in `u`, only in `v`, in neither.
fn pair_counts(u: &[usize], v: &[usize]) -> (f64, f64, f64, f64) {
    let (mut a, mut b, mut c, mut d) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..u.len() {
        for j in i + 1..u.len() {
            match (u[i] == u[j], v[i] == v[j]) {
                (true, true) => a += 1.0,
                (true, false) => b += 1.0,
                (false, true) => c += 1.0,
                (false, false) => d += 1.0,
            }
        }
    }
    (a, b, c, d)
}

fn oracle_ari(u: &[usize], v: &[usize]) -> f64 {
    let (a, b, c, d) = pair_counts(u, v);
    let den = (a + b) * (b + d) + (a + c) * (c + d);
    if den == 0.0 {
        return if u == v { 1.0 } else { 0.0 };
    }
    2.0 * (a * d - b * c) / den
}

fn oracle_fm(u: &[usize], v: &[usize]) -> f64 {
    let (a, b, c, _) = pair_counts(u, v);
    if a + b == 0.0 || a + c == 0.0 {
        return 0.0;
    }
    a / ((a + b) * (a + c)).sqrt()
}

fn mi(u: &[usize], v: &[usize]) -> f64 {
    let n = u.len() as f64;
    let mut joint: HashMap<(usize, usize), f64> = HashMap::new();
    let mut pu: HashMap<usize, f64> = HashMap::new();
    let mut pv: HashMap<usize, f64> = HashMap::new();
    for (&x, &y) in u.iter().zip(v) {
        *joint.entry((x, y)).or_default() += 1.0 / n;
        *pu.entry(x).or_default() += 1.0 / n;
        *pv.entry(y).or_default() += 1.0 / n;
    }
    joint.iter().map(|(&(x, y), &p)| p * (p / (pu[&x] * pv[&y])).ln()).sum()
}

fn entropy(u: &[usize]) -> f64 {
    let n = u.len() as f64;
    let mut counts: HashMap<usize, f64> = HashMap::new();
    for &x in u {
        *counts.entry(x).or_default() += 1.0;
    }
    -counts.values().map(|&c| c / n * (c / n).ln()).sum::<f64>()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn sizes(u: &[usize]) -> Vec<usize> {
    let mut counts = vec![0; u.iter().max().map_or(0, |&m| m + 1)];
    for &x in u {
        counts[x] += 1;
    }
    counts.sort_unstable();
    counts
}

/// Expected mutual information as the average over every relabeling of the
/// objects in `v`, cached by the two size profiles.
fn oracle_emi(
    u: &[usize],
    v: &[usize],
    perms: &[Vec<usize>],
    cache: &mut HashMap<(Vec<usize>, Vec<usize>), f64>,
) -> f64 {
    let key = (sizes(u), sizes(v));
    *cache.entry(key).or_insert_with(|| {
        let total: f64 = perms
            .iter()
            .map(|p| {
                let shuffled: Vec<usize> = p.iter().map(|&i| v[i]).collect();
                mi(u, &shuffled)
            })
            .sum();
        total / perms.len() as f64
    })
}

fn oracle_ami(u: &[usize], v: &[usize], emi: f64) -> f64 {
    if u == v {
        return 1.0;
    }
    let den = 0.5 * (entropy(u) + entropy(v)) - emi;
    if den.abs() < 1e-12 {
        return 0.0;
    }
    (mi(u, v) - emi) / den
}

/// Best agreement over every one-to-one relabeling of `pred`.
fn oracle_acc(pred: &[usize], truth: &[usize], perms: &[Vec<Vec<usize>>]) -> f64 {
    let kp = pred.iter().max().unwrap() + 1;
    let kt = truth.iter().max().unwrap() + 1;
    let size = kp.max(kt);
    let best = perms[size].iter().map(|p| pred.iter().zip(truth).filter(|&(&x, &y)| p[x] == y).count()).max().unwrap();
    best as f64 / pred.len() as f64
}

#[test]
fn criterion_1_metric_oracles() {
    let _guard = lock();
    let start = Instant::now();
    let parts = partitions(6);
    assert_eq!(parts.len(), 203);
    let small_perms: Vec<Vec<Vec<usize>>> = (0..=6).map(permutations).collect();
    let object_perms = permutations(6);
    let mut cache = HashMap::new();
    let tol = 1e-9;
    let mut worst = [0.0f64; 4];
    let mut failures = Vec::new();
    for u in &parts {
        for v in &parts {
            let table = ContingencyTable::new(u, v).unwrap();
            let emi = oracle_emi(u, v, &object_perms, &mut cache);
            let pairs = [
                (ari_from_table(&table), oracle_ari(u, v)),
                (ami_from_table(&table), oracle_ami(u, v, emi)),
                (fm_from_table(&table), oracle_fm(u, v)),
                (accuracy(u, v).unwrap(), oracle_acc(u, v, &small_perms)),
            ];
            for (m, (got, want)) in pairs.into_iter().enumerate() {
                let err = (got - want).abs();
                worst[m] = worst[m].max(err);
                if !(err <= tol) && failures.len() < 10 {
                    failures.push(format!("metric {m} u={u:?} v={v:?} got {got} want {want}"));
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = failures.is_empty() && secs < 60.0;
    report(
        1,
        pass,
        &format!(
            "{} pairs, max error ari {:.1e} ami {:.1e} fm {:.1e} acc {:.1e}, {secs:.1}s",
            parts.len() * parts.len(),
            worst[0],
            worst[1],
            worst[2],
            worst[3]
        ),
    );
    assert!(pass, "{failures:#?}");
}

fn random_dataset(rng: &mut ChaCha8Rng) -> Dataset {
    let n = rng.gen_range(2..=50);
    let d = rng.gen_range(1..=6);
    let cards: Vec<u32> = (0..d).map(|_| rng.gen_range(1..=4)).collect();
    let rows: Vec<Vec<u32>> = (0..n)
        .map(|_| cards.iter().map(|&m| if rng.gen_bool(0.05) { MISSING } else { rng.gen_range(0..m) }).collect())
        .collect();
    Dataset::from_rows(&rows).unwrap()
}

fn in_unit(x: f64) -> bool {
    (-1e-12..=1.0 + 1e-12).contains(&x)
}

fn check_dataset(ds: &Dataset, seed: u64, rng: &mut ChaCha8Rng) -> Result<(), String> {
    let cards = ds.cardinalities();
    let config = RunConfig { seed, ..RunConfig::default() };
    let mg = run_mgcpl::<f64>(ds, &config.mgcpl_config(seed)).map_err(|e| e.to_string())?;

    if mg.kappa.windows(2).any(|w| w[1] >= w[0]) {
        return Err(format!("kappa not strictly decreasing: {:?}", mg.kappa));
    }
    for (j, labels) in mg.levels.iter().enumerate() {
        let k = mg.kappa[j];
        let assignment: Vec<Option<usize>> = labels.iter().map(|&l| Some(l)).collect();
        let model = ClusterModel::from_assignment(&cards, k, ds.rows(), &assignment);
        let weights = update_feature_weights::<f64>(&model);
        for l in 0..k {
            let sum: f64 = (0..ds.d()).map(|r| weights.omega(r, l)).sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(format!("level {j} cluster {l} weights sum to {sum}"));
            }
            for r in 0..ds.d() {
                let (a, b) = (weights.alpha(r, l), weights.beta(r, l));
                if !in_unit(a) || !in_unit(b) {
                    return Err(format!("alpha {a} beta {b} out of range"));
                }
            }
            for x in ds.rows() {
                let s = object_cluster_similarity(x, model.table(l), weights.cluster(l)).map_err(|e| e.to_string())?;
                if !in_unit(s) {
                    return Err(format!("similarity {s} out of range"));
                }
            }
        }
        for (l, w) in mg.weights[j].iter().enumerate() {
            let sum: f64 = w.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(format!("learned weights of level {j} cluster {l} sum to {sum}"));
            }
        }
    }

    // Incremental tables after a learning epoch.
    let k0 = rng.gen_range(1..=ds.n().min(8));
    let mut seed_rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut model, assignment) = seed_clusters(ds, k0, &mut seed_rng).map_err(|e| e.to_string())?;
    let mut state = LearnerState::<f64>::new(k0, ds.d(), 0.03, assignment);
    run_epoch(ds, &mut state, &mut model, 5).map_err(|e| e.to_string())?;
    let rebuilt = ClusterModel::from_assignment(&cards, k0, ds.rows(), state.assignment());
    if rebuilt != model {
        return Err("epoch tables differ from rebuilt tables".into());
    }

    // Incremental tables under random moves.
    let k = rng.gen_range(1..=4);
    let mut model = ClusterModel::new(&cards, k);
    let mut assignment = vec![None; ds.n()];
    for _ in 0..200 {
        let i = rng.gen_range(0..ds.n());
        match assignment[i] {
            Some(l) if rng.gen_bool(0.5) => {
                model.remove(l, ds.row(i)).map_err(|e| e.to_string())?;
                assignment[i] = None;
            }
            Some(_) => {}
            None => {
                let l = rng.gen_range(0..k);
                model.add(l, ds.row(i));
                assignment[i] = Some(l);
            }
        }
    }
    if ClusterModel::from_assignment(&cards, k, ds.rows(), &assignment) != model {
        return Err("tables after random moves differ from rebuilt tables".into());
    }

    // Aggregation objective and weights.
    let data = mg.gamma();
    let distinct = data.distinct_rows().len();
    let k = rng.gen_range(1..=distinct.min(4));
    let seeds = choose_seeds(&data, k, seed).map_err(|e| e.to_string())?;
    let mut came = CameState::<f64>::from_seeds(&data, &seeds);
    assign_objects(&data, &mut came);
    for _ in 0..20 {
        let before = objective(&data, &came);
        update_modes(&data, &mut came);
        let after_modes = objective(&data, &came);
        let changed = assign_objects(&data, &mut came);
        let after_assign = objective(&data, &came);
        if after_modes > before + 1e-12 || after_assign > after_modes + 1e-12 {
            return Err(format!("objective rose: {before} -> {after_modes} -> {after_assign}"));
        }
        update_theta(&mut came);
        let sum: f64 = came.theta().iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(format!("theta sums to {sum}"));
        }
        if !changed {
            break;
        }
    }
    let result =
        run_came::<f64>(&data, &CameConfig { restarts: 3, ..CameConfig::new(k, seed) }).map_err(|e| e.to_string())?;
    let sum: f64 = result.theta.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(format!("final theta sums to {sum}"));
    }

    // Replay.
    let replay = RunConfig { seed, repeats: 2, ..RunConfig::default() };
    let render = || -> Result<String, String> {
        let report = run_cluster(ds, &replay).map_err(|e| e.to_string())?;
        let mut value = serde_json::to_value(&report).map_err(|e| e.to_string())?;
        value.as_object_mut().unwrap().remove("timings");
        serde_json::to_string(&value).map_err(|e| e.to_string())
    };
    if render()? != render()? {
        return Err("replay differs".into());
    }
    Ok(())
}

#[test]
fn criterion_2_invariants() {
    let _guard = lock();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut failures = Vec::new();
    for t in 0..100u64 {
        let ds = random_dataset(&mut rng);
        if let Err(e) = check_dataset(&ds, t, &mut rng) {
            failures.push(format!("dataset {t} (n={}, d={}): {e}", ds.n(), ds.d()));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = failures.is_empty() && secs < 120.0;
    report(2, pass, &format!("100 datasets, {} failures, {secs:.1}s", failures.len()));
    assert!(pass, "{failures:#?}");
}

fn synthetic(purity: f64, seed: u64) -> (Dataset, Vec<usize>) {
    generate_synthetic(&SynthSpec { n: 900, d: 10, k_true: 3, purity, m: 5, seed }).unwrap()
}

#[test]
fn criterion_3_cluster_count_recovery() {
    let _guard = lock();
    let start = Instant::now();
    let config = RunConfig { k0: Some(30), eta: 0.03, ..RunConfig::default() };
    let finals: Vec<usize> = (0..20u64)
        .map(|seed| {
            let (ds, _) = synthetic(0.9, seed);
            run_mgcpl::<f64>(&ds, &config.mgcpl_config(seed)).unwrap().final_k()
        })
        .collect();
    let hits = finals.iter().filter(|&&k| k == 3).count();
    let secs = start.elapsed().as_secs_f64();
    let pass = hits >= 16 && secs < 60.0;
    report(3, pass, &format!("{hits}/20 runs end at 3 clusters {finals:?}, {secs:.1}s"));
    assert!(pass);
}

fn mean_acc(ds: &Dataset, runs: usize) -> f64 {
    let config = RunConfig { k: Some(2), repeats: runs, ..RunConfig::default() };
    run_cluster(ds, &config).unwrap().indices.unwrap().mean.acc
}

#[test]
fn criterion_4_reproduction() {
    let _guard = lock();
    let mut pass = true;
    let mut details = Vec::new();

    let file = std::env::var_os("MCDC_UCI_DIR").map(|dir| PathBuf::from(dir).join("house-votes-84.data"));
    match file.filter(|f| f.exists()) {
        Some(file) => {
            let raw = CsvOptions { has_header: false, label_column: Some("0".into()), missing_token: None };
            let congressional = load_csv(&file, &raw).unwrap();
            assert_eq!(congressional.n(), 435);
            let acc = mean_acc(&congressional, 50);
            let ok = (acc - 0.874).abs() <= 0.05;
            pass &= ok;
            details.push(format!("congressional acc {acc:.3}{}", if ok { "" } else { " out of range" }));

            let coded = CsvOptions { missing_token: Some("?".into()), ..raw };
            let vote = drop_missing(&load_csv(&file, &coded).unwrap()).unwrap();
            assert_eq!(vote.n(), 232);
            let acc = mean_acc(&vote, 50);
            let ok = (acc - 0.905).abs() <= 0.05;
            pass &= ok;
            details.push(format!("vote acc {acc:.3}{}", if ok { "" } else { " out of range" }));
        }
        None => details.push("uci files absent, skipped".into()),
    }

    let mut totals = [0.0f64; 3];
    let variants = [Variant::Full, Variant::Mcdc3, Variant::Mcdc1];
    for seed in 0..20u64 {
        let (ds, truth) = synthetic(0.8, seed);
        for (total, variant) in totals.iter_mut().zip(variants) {
            let config = RunConfig { k0: Some(30), k: Some(3), variant, ..RunConfig::default() };
            let run = run_once(&ds, &config, seed).unwrap();
            *total += mcdc::metrics::ari(&run.labels, &truth).unwrap();
        }
    }
    let [full, mcdc3, mcdc1] = totals.map(|t| t / 20.0);
    let ok = full >= mcdc3 - 0.02 && mcdc3 >= mcdc1 - 0.02;
    pass &= ok;
    details.push(format!("ablation ari full {full:.4} mcdc3 {mcdc3:.4} mcdc1 {mcdc1:.4}"));

    report(4, pass, &details.join("; "));
    assert!(pass);
}

#[test]
fn criterion_5_linear_scaling() {
    let _guard = lock();
    let start = Instant::now();
    let axes = [
        (BenchAxis::N, vec![25_000, 50_000, 100_000, 200_000]),
        (BenchAxis::D, vec![125, 250, 500, 1000]),
        (BenchAxis::K, vec![2, 4, 8, 16]),
    ];
    let mut pass = true;
    let mut details = Vec::new();
    for (axis, grid) in axes {
        let mut cfg = BenchConfig::new(axis, grid);
        cfg.repeats = 3;
        if axis == BenchAxis::D {
            cfg.n = 20_000;
        }
        let rows = run_bench(&cfg).unwrap();
        let ratios: Vec<f64> = rows.windows(2).map(|w| w[1].mean_s / w[0].mean_s).collect();
        pass &= ratios.iter().all(|r| (1.6..=2.6).contains(r));
        let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.2}")).collect();
        details.push(format!("{axis:?} ratios [{}]", shown.join(", ")));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 1800.0;
    report(5, pass, &format!("{}; {secs:.0}s", details.join("; ")));
    assert!(pass);
}
