//! Acceptance criteria 1 to 8. Each criterion prints one PASS or FAIL line.

mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use coldstart::cli::run_from;
use coldstart::data::{
    assign_test_groups, generate_synthetic, generic_split, kuairec_split, Group, SplitConfig, SyntheticSpec,
};
use coldstart::eval::{evaluate_scenario, ndcg_at_k, roc_auc, InferencePath, Metric};
use coldstart::nn::{deepset_forward, Activation, AdaptScope, Mlp, Model, ModelContext, ModelParams, ModelSpec, Task};
use coldstart::search::{random_search, SearchSpace};
use coldstart::tensor::{check_gradient, Axis, Graph};
use coldstart::train::{
    evaluation_loss, meta_gradient, meta_update, train_meta, train_standard, MetaOrder, TrainConfig,
};
use common::*;
use rand::seq::SliceRandom;
use rand::Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    type Case = (&'static str, fn(&mut Graph, coldstart::tensor::Var) -> coldstart::Result<coldstart::tensor::Var>);
    let cases: Vec<Case> = vec![
        ("matmul", |g, x| {
            let t = g.transpose(x)?;
            g.matmul(x, t)
        }),
        ("add", |g, x| g.add(x, x)),
        ("sub", |g, x| {
            let s = g.scale(x, 0.3)?;
            g.sub(x, s)
        }),
        ("mul", |g, x| g.mul(x, x)),
        ("relu", |g, x| g.relu(x)),
        ("sigmoid", |g, x| g.sigmoid(x)),
        ("exp", |g, x| g.exp(x)),
        ("softmax_rows", |g, x| g.softmax_rows(x)),
        ("sum_rows", |g, x| g.reduce_sum(x, Axis::Rows)),
        ("mean_cols", |g, x| g.reduce_mean(x, Axis::Cols)),
        ("concat", |g, x| g.concat(&[x, x])),
        ("gather_rows", |g, x| g.gather_rows(x, &[2, 0, 2])),
    ];
    let mut worst_primitive = 0.0f64;
    for (name, op) in &cases {
        for _ in 0..20 {
            let mut x = random_tensor(&mut r, 3, 4);
            for v in x.data_mut() {
                // keep away from the relu kink
                if v.abs() < 0.05 {
                    *v += 0.1;
                }
            }
            let shape = {
                let mut g = Graph::new();
                let v = g.leaf(x.clone());
                let o = op(&mut g, v).unwrap();
                g.shape(o)
            };
            let w = random_tensor(&mut r, shape.0, shape.1);
            let err = check_gradient(
                |g, v| {
                    let o = op(g, v)?;
                    weighted_sum(g, o, &w)
                },
                &x,
                1e-5,
            )
            .map_err(|e| format!("{name}: {e}"))?;
            worst_primitive = worst_primitive.max(err);
            ensure(err < 1e-4, format!("primitive {name}: relative error {err:.2e}"))?;
        }
    }
    let blocks = block_gradient_errors(20, 2);
    for (name, err) in &blocks {
        ensure(*err < 1e-4, format!("block {name}: relative error {err:.2e}"))?;
    }
    let elapsed = start.elapsed().as_secs_f64();
    ensure(elapsed < 60.0, format!("took {elapsed:.1}s"))?;
    let worst_block = blocks.iter().map(|b| b.1).fold(0.0, f64::max);
    Ok(format!(
        "{} primitives and {} blocks x 20 instances; worst relative error {:.1e} (primitives), {:.1e} (blocks); {elapsed:.1}s",
        cases.len(),
        blocks.len(),
        worst_primitive,
        worst_block
    ))
}

fn criterion_2() -> Outcome {
    let q = quadratic();
    let alpha = 0.25;
    let cfg = |order| TrainConfig { lr: 1.0, inner_lr: alpha, inner_steps: 1, order, ..TrainConfig::default() };
    let second =
        meta_update(&q.model, &q.ctx, &q.params, &[&q.episode], &cfg(MetaOrder::Second)).map_err(|e| e.to_string())?;
    let first =
        meta_update(&q.model, &q.ctx, &q.params, &[&q.episode], &cfg(MetaOrder::First)).map_err(|e| e.to_string())?;
    let theta_adapted = 0.5;
    let analytic = 2.0 * (theta_adapted - 1.0) * (1.0 - 2.0 * alpha);
    let g2 = second.gradient[0].item();
    let g1 = first.gradient[0].item();
    ensure((g2 - analytic).abs() < 1e-6, format!("second-order gradient {g2}, expected {analytic}"))?;
    ensure((second.params.tensors()[0].item() - 0.5).abs() < 1e-12, "second-order step did not reach 0.5")?;
    ensure((g1 - 2.0 * (theta_adapted - 1.0)).abs() < 1e-6, format!("first-order gradient {g1}, expected -1"))?;
    ensure((g2 / g1 - (1.0 - 2.0 * alpha)).abs() < 1e-12, format!("order ratio {} != 1 - 2 alpha", g2 / g1))?;

    let (model, ctx, params, episodes) = tiny_framework(Task::Classification);
    let count = params.scalar_count();
    ensure(count <= 100, format!("fixture has {count} parameters"))?;
    let mlp_cfg = TrainConfig { inner_lr: 0.4, inner_steps: 2, order: MetaOrder::Second, ..TrainConfig::default() };
    let batch: Vec<_> = episodes.iter().collect();
    let (grad, _) = meta_gradient(&model, &ctx, &params, &batch, &mlp_cfg, 2).map_err(|e| e.to_string())?;
    let analytic: Vec<f64> = grad.iter().flat_map(|t| t.data().to_vec()).collect();
    let numeric = finite_difference(&params, 1e-5, |p| {
        evaluation_loss(&model, &ctx, p, &episodes, 0.4, 2, AdaptScope::All).unwrap()
    });
    let err = relative_error(&analytic, &numeric);
    ensure(err < 1e-4, format!("MLP meta-gradient relative error {err:.2e}"))?;
    Ok(format!(
        "quadratic: second {g2:+.6}, first {g1:+.6}, ratio {:.6}; {count}-parameter MLP relative error {err:.1e}",
        g2 / g1
    ))
}

fn criterion_3() -> Outcome {
    let mut r = rng(3);
    for case in 0..200 {
        let n = r.gen_range(1..=6);
        let scores: Vec<f64> = (0..n).map(|_| (r.gen_range(0..5) as f64) / 4.0).collect();
        let rels: Vec<f64> = (0..n).map(|_| r.gen_range(0..4) as f64).collect();
        let k = r.gen_range(1..=6);
        let got = ndcg_at_k(&scores, &rels, k).map_err(|e| e.to_string())?;
        let want = ndcg_oracle(&scores, &rels, k);
        ensure(got == want, format!("ndcg case {case}: {got} vs oracle {want}"))?;
    }
    let mut worst_auc = 0.0f64;
    for case in 0..200 {
        let n = r.gen_range(2..=30);
        let mut labels: Vec<f64> = (0..n).map(|_| if r.gen_bool(0.4) { 1.0 } else { 0.0 }).collect();
        labels[0] = 1.0;
        labels[1] = 0.0;
        let scores: Vec<f64> = (0..n).map(|_| (r.gen_range(0..20) as f64) / 19.0).collect();
        let got = roc_auc(&scores, &labels).map_err(|e| e.to_string())?;
        let want = auc_oracle(&scores, &labels);
        worst_auc = worst_auc.max((got - want).abs());
        ensure((got - want).abs() < 1e-12, format!("auc case {case}: {got} vs oracle {want}"))?;
    }
    for case in 0..100 {
        let n = r.gen_range(2..=12);
        let scores: Vec<f64> = (0..n).map(|_| (r.gen_range(-50..50) as f64) / 50.0).collect();
        let mut labels: Vec<f64> = (0..n).map(|_| if r.gen_bool(0.5) { 1.0 } else { 0.0 }).collect();
        labels[0] = 1.0;
        labels[1] = 0.0;
        let rels: Vec<f64> = (0..n).map(|_| r.gen_range(0..4) as f64).collect();
        let (a, b, c) = (r.gen_range(0.1..3.0), r.gen_range(0.1..3.0), r.gen_range(-5.0..5.0));
        let transformed: Vec<f64> = match case % 3 {
            0 => scores.iter().map(|x| a * x + c).collect(),
            1 => scores.iter().map(|x| (a * x).exp()).collect(),
            _ => scores.iter().map(|x| a * x * x * x + b * x + c).collect(),
        };
        let k = r.gen_range(1..=n);
        let same_auc = roc_auc(&scores, &labels).unwrap() == roc_auc(&transformed, &labels).unwrap();
        let same_ndcg = ndcg_at_k(&scores, &rels, k).unwrap() == ndcg_at_k(&transformed, &rels, k).unwrap();
        ensure(same_auc && same_ndcg, format!("monotone transform {case} changed a metric"))?;
    }
    Ok(format!("200 nDCG lists exact; 200 AUC sets max deviation {worst_auc:.1e}; 100 monotone transforms invariant"))
}

fn criterion_4() -> Outcome {
    let mut r = rng(4);
    for set in 0..100 {
        let mut params = ModelParams::new();
        let phi = Mlp::new(&mut params, &mut r, "phi", &[4, 8], Activation::Relu);
        let rho = Mlp::new(&mut params, &mut r, "rho", &[8, 3], Activation::Identity);
        let n = r.gen_range(1..=12);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..4).map(|_| r.gen_range(-3.0..3.0)).collect()).collect();
        let mut ids: Vec<usize> = (0..40).collect();
        ids.shuffle(&mut r);
        ids.truncate(n);
        let run = |order: &[usize]| -> Vec<u64> {
            let mut g = Graph::new();
            let p = params.bind(&mut g);
            let members =
                coldstart::tensor::Tensor::from_rows(&order.iter().map(|&k| rows[k].clone()).collect::<Vec<_>>())
                    .unwrap();
            let m = g.leaf(members);
            let order_ids: Vec<usize> = order.iter().map(|&k| ids[k]).collect();
            let out = deepset_forward(&mut g, &p, m, &order_ids, &phi, &rho).unwrap();
            g.value(out).data().iter().map(|v| v.to_bits()).collect()
        };
        let base = run(&(0..n).collect::<Vec<_>>());
        for _ in 0..100 {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut r);
            ensure(run(&perm) == base, format!("set {set}: output changed under a permutation"))?;
        }
    }
    Ok("100 sets x 100 permutations bit-identical".into())
}

fn criterion_5() -> Outcome {
    let spec = SyntheticSpec {
        users: 70,
        items: 30,
        block: Some((20, 30)),
        density: 0.2,
        seed: 5,
        ..SyntheticSpec::default()
    };
    let d = generate_synthetic(&spec).map_err(|e| e.to_string())?.dataset;
    let (part, bundle) = kuairec_split(&d, &SplitConfig::default(), 5).map_err(|e| e.to_string())?;
    // The partition replayed on counts: 10% of 30 items, then 10% of 20 users,
    // then 10% of the remaining block cells.
    let cold_items = (30.0f64 * 0.1).round() as usize;
    let item_cold = 20 * cold_items;
    let cold_users = (20.0f64 * 0.1).round() as usize;
    let user_cold = cold_users * (30 - cold_items);
    let remaining = (20 - cold_users) * (30 - cold_items);
    let warm = (remaining as f64 * 0.1).round() as usize;
    let train = remaining - warm;
    let outside = d.interactions.len() - 20 * 30;
    let expected = [item_cold, user_cold, warm, train, outside];
    let got =
        [part.item_cold.len(), part.user_cold.len(), part.warm.len(), part.train.len(), part.user_item_cold.len()];
    ensure(got == expected, format!("set sizes {got:?}, oracle {expected:?}"))?;

    let mut seen: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (_, set) in part.sets() {
        for it in set {
            *seen.entry((it.user, it.item)).or_default() += 1;
        }
    }
    let all: BTreeMap<(usize, usize), usize> = d.interactions.iter().map(|it| ((it.user, it.item), 1)).collect();
    ensure(seen == all, "the five sets do not partition the interactions")?;

    let train_ds = d.with_interactions(part.train.clone());
    let train_users = train_ds.users_with_interactions();
    let train_items = train_ds.items_with_interactions();
    let tests: Vec<_> = bundle.tests.iter().cloned().collect();
    let relabelled = assign_test_groups(&train_ds, tests);
    let mut checked = 0;
    for e in relabelled.iter() {
        let user_seen = train_users.contains(&e.user);
        for (item, _) in &e.target {
            let expected = Group::classify(user_seen, train_items.contains(item));
            ensure(
                e.group == expected,
                format!("episode {} labelled {} but raw membership gives {expected}", e.id, e.group),
            )?;
        }
        checked += 1;
    }
    ensure(checked > 0, "no test episodes")?;
    Ok(format!(
        "sizes item_cold {} user_cold {} warm {} train {} user_item_cold {}; partition holds; {checked} episodes consistent",
        got[0], got[1], got[2], got[3], got[4]
    ))
}

/// User-cold AUC of the meta and augmented standard models on one seed:
/// (meta direct, meta adapted, standard direct).
fn learning_run(seed: u64) -> Result<(f64, f64, f64), String> {
    let data = generate_synthetic(&SyntheticSpec { seed, ..SyntheticSpec::default() }).map_err(|e| e.to_string())?;
    let bundle = generic_split(&data.dataset, &SplitConfig::default(), seed);
    let train_ds = data.dataset.with_interactions(bundle.train_interactions.clone());
    let eps = bundle.tests.get(Group::UserCold);
    let spec = |interactions: bool, augmentation: bool| {
        let mut s = ModelSpec::for_dataset(&train_ds, Task::Classification);
        s.embedding_dim = 4;
        s.hidden = 64;
        s.user_dim = 32;
        s.item_dim = 32;
        s.components.interactions = interactions;
        s.label_augmentation = augmentation;
        s
    };
    let inner_lr = 0.5;
    let meta_spec = spec(false, false);
    let (meta, init) = Model::new(&meta_spec, seed).map_err(|e| e.to_string())?;
    let ctx = ModelContext::new(&meta_spec, &train_ds).map_err(|e| e.to_string())?;
    let meta_cfg = TrainConfig {
        epochs: 150,
        batch_size: 16,
        lr: 0.5,
        inner_lr,
        inner_steps: 2,
        eval_inner_steps: 2,
        order: MetaOrder::Second,
        patience: 20,
        seed,
        ..TrainConfig::default()
    };
    let trained =
        train_meta(&meta, &ctx, &init, &bundle.train, &bundle.validation, &meta_cfg).map_err(|e| e.to_string())?;
    let auc = |model: &Model, ctx: &ModelContext, p: &ModelParams, path| {
        evaluate_scenario(model, ctx, p, eps, path, Metric::Auc).map(|r| r.mean).map_err(|e| e.to_string())
    };
    let direct = auc(&meta, &ctx, &trained.params, InferencePath::Direct)?;
    let adapted =
        auc(&meta, &ctx, &trained.params, InferencePath::Meta { inner_lr, steps: 2, scope: AdaptScope::All })?;

    let std_spec = spec(true, true);
    let (standard, init) = Model::new(&std_spec, seed).map_err(|e| e.to_string())?;
    let ctx = ModelContext::new(&std_spec, &train_ds).map_err(|e| e.to_string())?;
    let std_cfg =
        TrainConfig { epochs: 500, batch_size: 32, lr: 0.2, l2: 3e-4, patience: 20, seed, ..TrainConfig::default() };
    let trained = train_standard(&standard, &ctx, &init, &bundle.train, &bundle.validation, &std_cfg)
        .map_err(|e| e.to_string())?;
    let std_auc = auc(&standard, &ctx, &trained.params, InferencePath::Direct)?;
    Ok((direct, adapted, std_auc))
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let runs: Vec<(f64, f64, f64)> = [1, 2, 3].into_iter().map(learning_run).collect::<Result<_, _>>()?;
    let mean = |f: fn(&(f64, f64, f64)) -> f64| runs.iter().map(f).sum::<f64>() / runs.len() as f64;
    let (direct, adapted, standard) = (mean(|r| r.0), mean(|r| r.1), mean(|r| r.2));
    let elapsed = start.elapsed().as_secs_f64();
    let detail = format!(
        "mean over seeds 1-3: meta zero-shot {direct:.4}, meta adapted {adapted:.4} (gain {:+.4}), standard+labels {standard:.4} (gap {:+.4}); {elapsed:.0}s",
        adapted - direct,
        standard - adapted
    );
    ensure(adapted - direct >= 0.05, format!("(a) adaptation gain below 0.05: {detail}"))?;
    ensure((standard - adapted).abs() <= 0.05, format!("(b) standard outside meta +-0.05: {detail}"))?;
    ensure(standard > 0.70 && adapted > 0.70, format!("(b) AUC not above 0.70: {detail}"))?;
    ensure(elapsed < 600.0, format!("runtime over 10 minutes: {detail}"))?;
    Ok(detail)
}

fn cli(args: &[&str]) -> Result<(), String> {
    let mut full = vec!["coldstart"];
    full.extend_from_slice(args);
    match run_from(full) {
        0 => Ok(()),
        code => Err(format!("`{}` exited with {code}", args.join(" "))),
    }
}

/// Every file under `dir` with its bytes; history files drop the timing column.
fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        let mut bytes = std::fs::read(&path).unwrap();
        if name == "history.csv" {
            let text = String::from_utf8(bytes).unwrap();
            bytes = text
                .lines()
                .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_string() + "\n")
                .collect::<String>()
                .into_bytes();
        }
        out.insert(name, bytes);
    }
    out
}

fn criterion_7() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |s: &str| tmp.path().join(s).display().to_string();
    cli(&[
        "generate",
        "--seed",
        "7",
        "--set",
        "synthetic.users=80",
        "--set",
        "synthetic.items=40",
        "--set",
        "synthetic.density=0.5",
        "--out",
        &p("data"),
    ])?;
    let cfg = format!(
        "data.dir = {}\nmodel.task = classification\nmodel.hidden = 8\ntrain.epochs = 3\ntrain.batch_size = 8\nseed = 7\n",
        p("data")
    );
    std::fs::write(tmp.path().join("run.cfg"), cfg).map_err(|e| e.to_string())?;
    std::fs::write(tmp.path().join("space.txt"), "model.hidden = 4, 8\ntrain.lr = 0.1, 0.01\ntrain.epochs = 1, 2\n")
        .map_err(|e| e.to_string())?;
    let config = p("run.cfg");
    let space = p("space.txt");
    for run in ["a", "b"] {
        cli(&["split", "--config", &config, "--out", &p(&format!("split_{run}"))])?;
        cli(&["train", "--config", &config, "--split-dir", &p("split_a"), "--out", &p(&format!("train_{run}"))])?;
        cli(&[
            "search",
            "--config",
            &config,
            "--split-dir",
            &p("split_a"),
            "--space",
            &space,
            "--budget",
            "3",
            "--out",
            &p(&format!("search_{run}")),
        ])?;
    }
    let mut files = 0;
    for stage in ["split", "train", "search"] {
        let a = snapshot(&tmp.path().join(format!("{stage}_a")));
        let b = snapshot(&tmp.path().join(format!("{stage}_b")));
        ensure(a.keys().eq(b.keys()), format!("{stage}: different file sets"))?;
        for (name, bytes) in &a {
            ensure(&b[name] == bytes, format!("{stage}/{name} differs between runs"))?;
        }
        files += a.len();
    }
    Ok(format!("split, train and search reruns byte-identical over {files} files (history timing column excluded)"))
}

fn criterion_8() -> Outcome {
    let grid = SearchSpace::default_grid();
    let fake = |c: &BTreeMap<String, String>| -> f64 {
        c.iter()
            .enumerate()
            .map(|(k, (_, v))| {
                let x: f64 = match v.as_str() {
                    "true" => 1.0,
                    "false" => 0.0,
                    s => s.parse().unwrap(),
                };
                ((k + 1) as f64 * x).sin()
            })
            .sum()
    };
    for budget in [1usize, 10, 100] {
        let outcome = random_search(&grid, budget, 8, |c, _| Ok(fake(c))).map_err(|e| e.to_string())?;
        ensure(outcome.trials.len() == budget, format!("budget {budget}: log has {} trials", outcome.trials.len()))?;
        let mut best = 0;
        for (k, t) in outcome.trials.iter().enumerate() {
            ensure(t.val_loss == fake(&t.config), "logged loss differs from the trainer's value")?;
            if fake(&t.config) < fake(&outcome.trials[best].config) {
                best = k;
            }
        }
        ensure(
            outcome.best == best,
            format!("budget {budget}: search picked {} but oracle picked {best}", outcome.best),
        )?;
    }
    let text = grid.to_string();
    let back = SearchSpace::parse("default", &text).map_err(|e| e.to_string())?;
    ensure(back == grid, "default grid does not round-trip through the file format")?;
    let dim = |k: &str| back.dims.get(k).cloned().unwrap_or_default();
    ensure(dim("model.hidden") == ["32", "64", "128"], "hidden sizes")?;
    ensure(dim("train.inner_steps") == ["1", "2", "4"], "inner-loop steps")?;
    ensure(dim("model.same_rating_k") == ["3"], "same-rating k")?;
    Ok(format!("argmin matches the oracle for budgets 1, 10, 100; {} grid dimensions round-trip", grid.dims.len()))
}

/// Criteria that do not hold at desk scale. They are still run and printed
/// as FAIL; the reasons are given in the README.
const KNOWN_SHORTFALLS: &[usize] = &[6];

fn main() {
    let criteria: [(usize, fn() -> Outcome); 8] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
    ];
    let mut failed = Vec::new();
    for (n, check) in criteria {
        match check() {
            Ok(detail) => println!("criterion {n}: PASS: {detail}"),
            Err(detail) => {
                let note = if KNOWN_SHORTFALLS.contains(&n) { " [known shortfall]" } else { "" };
                println!("criterion {n}: FAIL{note}: {detail}");
                failed.push(n);
            }
        }
    }
    let unexpected: Vec<usize> = failed.iter().copied().filter(|n| !KNOWN_SHORTFALLS.contains(n)).collect();
    if !unexpected.is_empty() {
        eprintln!("failed criteria: {unexpected:?}");
        std::process::exit(1);
    }
}
