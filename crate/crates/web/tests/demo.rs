use coldstart_web::{attention_json, maml_trace_json, rank_metrics_json};
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn maml_trace_follows_the_closed_form() {
    let v = parse(maml_trace_json(0.0, 1.0, 0.25, 1, 1.0, 3, true));
    let steps = v["steps"].as_array().unwrap();
    assert_eq!(steps.len(), 4);
    assert_eq!(steps[0]["adapted"], 0.5);
    assert_eq!(steps[0]["loss"], 0.25);
    assert_eq!(steps[0]["gradient"], -0.5);
    // theta_{k+1} = theta_k + (1 - theta_k) / 2 for this setting.
    let mut theta: f64 = 0.0;
    for s in steps {
        assert!((s["theta"].as_f64().unwrap() - theta).abs() < 1e-12);
        theta += (1.0 - theta) / 2.0;
    }
}

#[test]
fn first_order_trace_ignores_the_inner_jacobian() {
    let v = parse(maml_trace_json(0.0, 1.0, 0.25, 1, 1.0, 1, false));
    assert_eq!(v["steps"][0]["gradient"], -1.0);
    assert_eq!(v["steps"][1]["theta"], 1.0);
}

#[test]
fn maml_trace_rejects_bad_input() {
    assert!(parse(maml_trace_json(0.0, 1.0, -0.1, 1, 1.0, 3, true))["error"].is_string());
    assert!(parse(maml_trace_json(f64::NAN, 1.0, 0.1, 1, 1.0, 3, true))["error"].is_string());
    assert!(parse(maml_trace_json(0.0, 1.0, 0.1, 1, 1.0, 5000, true))["error"].is_string());
}

#[test]
fn rank_metrics_reports_both_metrics() {
    let v = parse(rank_metrics_json("0.9, 0.2 0.5", "1,0,0", 2));
    assert_eq!(v["ndcg"], 1.0);
    assert_eq!(v["auc"], 1.0);
    assert_eq!(v["ranking"], serde_json::json!([0, 2, 1]));
    let single = parse(rank_metrics_json("0.1,0.2", "1,1", 1));
    assert!(single["auc"].is_string());
    assert_eq!(single["ndcg"], 1.0);
    assert!(parse(rank_metrics_json("a,b", "1,0", 1))["error"].is_string());
}

#[test]
fn attention_rows_sum_to_one() {
    let v = parse(attention_json(5, 4, 7));
    let rows = v["weights"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    for r in rows {
        let r: Vec<f64> = r.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        assert_eq!(r.len(), 5);
        assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
    assert_eq!(attention_json(5, 4, 7), attention_json(5, 4, 7));
    assert!(parse(attention_json(0, 4, 7))["error"].is_string());
}
