use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use coldstart::data::load_dir;
use coldstart::eval::parse_report_csv;
use coldstart::nn::load_checkpoint;

fn coldstart(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coldstart")).args(args).env_remove("COLDSTART_OUT").output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = coldstart(args);
    assert!(
        out.status.success(),
        "`{}` failed with {:?}: {}",
        args.join(" "),
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> (i32, String) {
    let out = coldstart(args);
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn s(p: &Path) -> String {
    p.display().to_string()
}

/// Generated binary data, a generic split and a small config.
struct Pipeline {
    _tmp: tempfile::TempDir,
    root: PathBuf,
    config: String,
}

fn pipeline() -> Pipeline {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().to_path_buf();
    let data = root.join("data");
    ok(&[
        "generate",
        "--seed",
        "3",
        "--set",
        "synthetic.users=150",
        "--set",
        "synthetic.items=60",
        "--set",
        "synthetic.density=0.4",
        "--out",
        &s(&data),
    ]);
    let config = root.join("run.cfg");
    fs::write(
        &config,
        format!(
            "seed = 3\ndata.dir = {}\nsplit.dir = {}\nmodel.task = classification\nmodel.hidden = 8\n\
             model.embedding_dim = 4\ntrain.epochs = 2\ntrain.batch_size = 16\n",
            s(&data),
            s(&root.join("split"))
        ),
    )
    .unwrap();
    let config = s(&config);
    ok(&["split", "--config", &config, "--out", &s(&root.join("split"))]);
    Pipeline { _tmp: tmp, root, config }
}

#[test]
fn usage_and_configuration_errors_exit_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = s(&tmp.path().join("o"));
    let missing = s(&tmp.path().join("absent.cfg"));
    let (c, err) = code(&["train", "--config", &missing, "--out", &out]);
    assert_eq!(c, 2);
    assert!(err.contains("config file not found"), "{err}");

    assert_eq!(code(&["train", "--out", &out]).0, 2);
    assert_eq!(code(&["frobnicate"]).0, 2);
    assert_eq!(code(&["split", "--no-such-flag"]).0, 2);

    let (c, err) = code(&["generate", "--set", "train.lr=-1", "--set", "model.bogus=1", "--out", &out]);
    assert_eq!(c, 2);
    assert!(err.contains("train.lr") && err.contains("model.bogus"), "{err}");

    let (c, err) = code(&["generate", "--set", "noequals"]);
    assert_eq!(c, 2);
    assert!(err.contains("KEY=VALUE"), "{err}");

    let (c, err) = code(&["generate"]);
    assert_eq!(c, 2);
    assert!(err.contains("output directory"), "{err}");
}

#[test]
fn runtime_errors_exit_with_1() {
    let tmp = tempfile::tempdir().unwrap();
    let (c, err) = code(&["split", "--data-dir", &s(&tmp.path().join("nope")), "--out", &s(&tmp.path().join("o"))]);
    assert_eq!(c, 1, "{err}");
    assert!(err.contains("nope"), "{err}");
}

#[test]
fn output_directory_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("from_env");
    let status = Command::new(env!("CARGO_BIN_EXE_coldstart"))
        .args(["generate", "--set", "synthetic.users=20", "--set", "synthetic.items=10"])
        .env("COLDSTART_OUT", &out)
        .output()
        .unwrap();
    assert!(status.status.success());
    assert!(out.join("interactions.csv").is_file());
    assert!(out.join("config.txt").is_file());
}

#[test]
fn generate_split_train_eval_report() {
    let p = pipeline();
    let split = p.root.join("split");
    for name in ["train", "validation", "user_cold", "item_cold", "user_item_cold", "warm"] {
        assert!(split.join(format!("{name}.episodes")).is_file(), "{name}");
    }
    let summary = fs::read_to_string(split.join("summary.txt")).unwrap();
    let fp = fs::read_to_string(split.join("fingerprint.txt")).unwrap();
    assert!(summary.starts_with(&format!("# fingerprint {}", fp.trim())));

    let train = p.root.join("train");
    let stdout = ok(&["train", "--config", &p.config, "--out", &s(&train)]);
    assert!(stdout.contains("best epoch"), "{stdout}");
    let history = fs::read_to_string(train.join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 4);
    let ckpt = s(&train.join("model.ckpt"));
    let eps = [s(&split.join("user_cold.episodes")), s(&split.join("warm.episodes"))];

    let report_dirs: Vec<PathBuf> = ["direct", "meta0", "meta2"].iter().map(|n| p.root.join(n)).collect();
    ok(&[
        "eval",
        "--config",
        &p.config,
        "--checkpoint",
        &ckpt,
        "--episodes",
        &eps[0],
        &eps[1],
        "--path",
        "direct",
        "--metric",
        "auc",
        "--out",
        &s(&report_dirs[0]),
    ]);
    ok(&[
        "eval",
        "--config",
        &p.config,
        "--checkpoint",
        &ckpt,
        "--episodes",
        &eps[0],
        &eps[1],
        "--path",
        "meta",
        "--inner-steps",
        "0",
        "--metric",
        "auc",
        "--out",
        &s(&report_dirs[1]),
    ]);
    ok(&[
        "eval",
        "--config",
        &p.config,
        "--checkpoint",
        &ckpt,
        "--episodes",
        &eps[0],
        &eps[1],
        "--path",
        "meta",
        "--inner-steps",
        "2",
        "--metric",
        "auc",
        "--name",
        "adapted",
        "--out",
        &s(&report_dirs[2]),
    ]);
    let read = |d: &Path| fs::read_to_string(d.join("report.csv")).unwrap();
    assert_eq!(read(&report_dirs[0]), read(&report_dirs[1]));
    assert!(report_dirs[0].join("user_cold_auc.txt").is_file());
    assert!(report_dirs[0].join("warm_auc.csv").is_file());

    let merged = p.root.join("merged");
    let grid = ok(&[
        "report",
        &s(&report_dirs[0].join("report.csv")),
        &s(&report_dirs[2].join("report.csv")),
        "--out",
        &s(&merged),
    ]);
    assert!(grid.contains("adapted") && grid.contains("model"), "{grid}");
    let rows = parse_report_csv("merged", &fs::read_to_string(merged.join("merged.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 4);
}

#[test]
fn single_report_is_marked_and_round_trips() {
    let p = pipeline();
    let train = p.root.join("train");
    ok(&["train", "--config", &p.config, "--trainer", "standard", "--out", &s(&train)]);
    let eval = p.root.join("eval");
    ok(&[
        "eval",
        "--config",
        &p.config,
        "--checkpoint",
        &s(&train.join("model.ckpt")),
        "--episodes",
        &s(&p.root.join("split/item_cold.episodes")),
        "--out",
        &s(&eval),
    ]);
    let csv = fs::read_to_string(eval.join("report.csv")).unwrap();
    let merged = p.root.join("merged");
    let grid = ok(&["report", &s(&eval.join("report.csv")), "--out", &s(&merged)]);
    assert!(grid.contains('*'), "{grid}");
    assert_eq!(fs::read_to_string(merged.join("merged.csv")).unwrap(), csv);
}

#[test]
fn oracle_checkpoint_ranks_held_out_items() {
    let p = pipeline();
    let eval = p.root.join("oracle");
    ok(&[
        "eval",
        "--config",
        &p.config,
        "--checkpoint",
        &s(&p.root.join("data/oracle.ckpt")),
        "--episodes",
        &s(&p.root.join("split/user_cold.episodes")),
        &s(&p.root.join("split/warm.episodes")),
        "--path",
        "direct",
        "--metric",
        "auc",
        "--out",
        &s(&eval),
    ]);
    let rows = parse_report_csv("r", &fs::read_to_string(eval.join("report.csv")).unwrap()).unwrap();
    for r in rows {
        assert!(r.value >= 0.95, "{}: {}", r.scenario, r.value);
    }
}

#[test]
fn kuairec_split_writes_partitions() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    ok(&[
        "generate",
        "--set",
        "synthetic.users=40",
        "--set",
        "synthetic.items=20",
        "--set",
        "synthetic.block=10x20",
        "--out",
        &s(&data),
    ]);
    assert!(load_dir(&data, None).unwrap().block.is_some());
    let out = tmp.path().join("split");
    ok(&["split", "--data-dir", &s(&data), "--mode", "kuairec", "--out", &s(&out)]);
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    for name in ["item_cold", "user_cold", "warm", "train", "user_item_cold"] {
        assert!(out.join(format!("partition_{name}.csv")).is_file(), "{name}");
        assert!(summary.contains(&format!("partition_{name}\t")), "{summary}");
    }
    assert!(summary.contains("partition_item_cold\t20\n"), "{summary}");
}

#[test]
fn search_writes_trials_and_winner() {
    let p = pipeline();
    let space = p.root.join("space.txt");
    fs::write(&space, "model.hidden = 4, 8\ntrain.lr = 0.1, 0.01\n").unwrap();
    let out = p.root.join("search");
    ok(&["search", "--config", &p.config, "--space", &s(&space), "--budget", "3", "--out", &s(&out)]);
    let trials = fs::read_to_string(out.join("trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 4);
    let best = fs::read_to_string(out.join("best_config.txt")).unwrap();
    assert!(best.starts_with("# fingerprint "));

    fs::write(&space, "model.hidden = 4, many\n").unwrap();
    let (c, err) = code(&["search", "--config", &p.config, "--space", &s(&space), "--out", &s(&out)]);
    assert_eq!(c, 2);
    assert!(err.contains("model.hidden = many"), "{err}");
}

/// One user, two items rated 1, a constant model starting at 0: one inner
/// step at rate 1/4 reaches 1/2 and one outer step at rate 1 moves the
/// shared value to 1/2.
#[test]
fn quadratic_trace_through_the_cli() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let split = tmp.path().join("split");
    fs::create_dir_all(&data).unwrap();
    fs::create_dir_all(&split).unwrap();
    fs::write(data.join("users.csv"), "user_id,f1\nu0,a\n").unwrap();
    fs::write(data.join("items.csv"), "item_id,g1\ni0,a\ni1,a\n").unwrap();
    let interactions = "user_id,item_id,rating\nu0,i0,1\nu0,i1,1\n";
    fs::write(data.join("interactions.csv"), interactions).unwrap();
    fs::write(split.join("train_interactions.csv"), interactions).unwrap();
    fs::write(split.join("train.episodes"), "e0\tu0\ttrain\tsupport:i0=1\ttarget:i1=1\n").unwrap();
    fs::write(split.join("validation.episodes"), "v0\tu0\tvalidation\tsupport:i0=1\ttarget:i1=1\n").unwrap();
    let config = tmp.path().join("q.cfg");
    fs::write(
        &config,
        format!(
            "data.dir = {}\ndata.rating_kind = scale:0-1\nsplit.dir = {}\nmodel.kind = constant\nmodel.task = rating\n\
             train.epochs = 1\ntrain.batch_size = 1\ntrain.lr = 1\ntrain.inner_lr = 0.25\ntrain.inner_steps = 1\n\
             train.eval_inner_steps = 1\ntrain.order = second\n",
            s(&data),
            s(&split)
        ),
    )
    .unwrap();
    let out = tmp.path().join("train");
    ok(&["train", "--config", &s(&config), "--out", &s(&out)]);
    let ckpt = load_checkpoint(&out.join("model.ckpt")).unwrap();
    assert!((ckpt.params.tensors()[0].item() - 0.5).abs() < 1e-12);
    let history = fs::read_to_string(out.join("history.csv")).unwrap();
    let val: Vec<f64> = history.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    // Validation adapts one step: theta' = theta + (1 - theta) / 2.
    assert!((val[0] - 0.25).abs() < 1e-12, "{history}");
    assert!((val[1] - 0.0625).abs() < 1e-12, "{history}");
}
