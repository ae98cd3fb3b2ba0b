mod common;

use coldstart::data::{Dataset, RatingKind};
use coldstart::nn::{
    checkpoint_to_string, deepset_forward, fm_interaction, normalized_adjacency, parse_checkpoint,
    self_attention_forward, user_representation, Activation, Components, Mlp, Model, ModelContext, ModelParams,
    ModelSpec, Task, UserGraph,
};
use coldstart::tensor::{Graph, Tensor};
use common::*;
use rand::seq::SliceRandom;

#[test]
fn block_gradients_match_finite_differences() {
    for (name, err) in block_gradient_errors(5, 21) {
        assert!(err < 1e-6, "{name}: relative error {err}");
    }
}

#[test]
fn fm_equals_sum_of_pairwise_dot_products() {
    let mut r = rng(3);
    for fields in 2..7 {
        let x = random_tensor(&mut r, fields, 4);
        let mut g = Graph::new();
        let v = g.leaf(x.clone());
        let out = fm_interaction(&mut g, v).unwrap();
        let mut oracle = 0.0;
        for i in 0..fields {
            for j in i + 1..fields {
                oracle += x.row_slice(i).iter().zip(x.row_slice(j)).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        assert!((g.value(out).item() - oracle).abs() < 1e-12);
    }
}

#[test]
fn fm_rejects_a_single_field() {
    let mut g = Graph::new();
    let v = g.leaf(Tensor::row(&[1.0, 2.0]));
    assert!(fm_interaction(&mut g, v).is_err());
}

#[test]
fn normalized_adjacency_matches_degree_formula() {
    let edges = [(0, 1), (1, 2), (1, 2), (2, 3)];
    let a = normalized_adjacency(&edges, 5).unwrap();
    // Degrees with self-loops: 2, 3, 3, 2, 1.
    let deg = [2.0f64, 3.0, 3.0, 2.0, 1.0];
    let linked = |i: usize, j: usize| i == j || edges.iter().any(|&(u, v)| (u, v) == (i, j) || (v, u) == (i, j));
    for i in 0..5 {
        for j in 0..5 {
            let expected = if linked(i, j) { 1.0 / (deg[i] * deg[j]).sqrt() } else { 0.0 };
            assert!((a.get(i, j) - expected).abs() < 1e-15, "({i}, {j})");
        }
    }
    assert!(normalized_adjacency(&[(1, 1)], 3).is_err());
    assert!(normalized_adjacency(&[(0, 3)], 3).is_err());
}

#[test]
fn user_graph_sub_adjacency_restricts_the_full_matrix() {
    let edges = [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)];
    let graph = UserGraph::new("g", 6, &edges);
    let full = normalized_adjacency(&edges, 6).unwrap();
    assert_eq!(graph.ego(0, 1), vec![0, 1, 4]);
    assert_eq!(graph.ego(0, 2), vec![0, 1, 2, 3, 4]);
    assert_eq!(graph.ego(5, 3), vec![5]);
    let nodes = graph.ego(0, 1);
    let sub = graph.sub_adjacency(&nodes);
    for (i, &u) in nodes.iter().enumerate() {
        for (j, &v) in nodes.iter().enumerate() {
            assert!((sub.get(i, j) - full.get(u, v)).abs() < 1e-15);
        }
    }
}

#[test]
fn attention_weights_are_row_stochastic_and_match_direct_formula() {
    let mut r = rng(8);
    let items = random_tensor(&mut r, 4, 3);
    let w: Vec<Tensor> = (0..3).map(|_| random_tensor(&mut r, 3, 3)).collect();
    let mut g = Graph::new();
    let x = g.leaf(items.clone());
    let vars: Vec<_> = w.iter().map(|t| g.leaf(t.clone())).collect();
    let (out, weights) = self_attention_forward(&mut g, x, vars[0], vars[1], vars[2]).unwrap();

    let q = items.matmul(&w[0]).unwrap();
    let k = items.matmul(&w[1]).unwrap();
    let v = items.matmul(&w[2]).unwrap();
    for i in 0..4 {
        let logits: Vec<f64> =
            (0..4).map(|j| (0..3).map(|c| q.get(i, c) * k.get(j, c)).sum::<f64>() / 3f64.sqrt()).collect();
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = logits.iter().map(|l| (l - m).exp()).sum();
        let a: Vec<f64> = logits.iter().map(|l| (l - m).exp() / z).collect();
        let row_sum: f64 = g.value(weights).row_slice(i).iter().sum();
        assert!((row_sum - 1.0).abs() < 1e-12);
        for (j, aj) in a.iter().enumerate() {
            assert!((g.value(weights).get(i, j) - aj).abs() < 1e-12);
        }
        for c in 0..3 {
            let expected: f64 = (0..4).map(|j| a[j] * v.get(j, c)).sum();
            assert!((g.value(out).get(i, c) - expected).abs() < 1e-12);
        }
    }
}

#[test]
fn deepset_is_bit_identical_under_member_reordering() {
    let mut r = rng(13);
    let mut params = ModelParams::new();
    let phi = Mlp::new(&mut params, &mut r, "phi", &[3, 5], Activation::Relu);
    let rho = Mlp::new(&mut params, &mut r, "rho", &[5, 2], Activation::Identity);
    let members = random_tensor(&mut r, 6, 3);
    let ids: Vec<usize> = (10..16).collect();
    let run = |order: &[usize]| {
        let mut g = Graph::new();
        let p = params.bind(&mut g);
        let rows: Vec<Vec<f64>> = order.iter().map(|&k| members.row_slice(k).to_vec()).collect();
        let m = g.leaf(Tensor::from_rows(&rows).unwrap());
        let shuffled: Vec<usize> = order.iter().map(|&k| ids[k]).collect();
        let out = deepset_forward(&mut g, &p, m, &shuffled, &phi, &rho).unwrap();
        g.value(out).data().to_vec()
    };
    let base = run(&(0..6).collect::<Vec<_>>());
    for _ in 0..20 {
        let mut order: Vec<usize> = (0..6).collect();
        order.shuffle(&mut r);
        assert_eq!(run(&order), base);
    }
}

#[test]
fn deepset_rejects_duplicate_ids() {
    let mut r = rng(1);
    let mut params = ModelParams::new();
    let phi = Mlp::new(&mut params, &mut r, "phi", &[2, 2], Activation::Relu);
    let rho = Mlp::new(&mut params, &mut r, "rho", &[2, 1], Activation::Identity);
    let mut g = Graph::new();
    let p = params.bind(&mut g);
    let m = g.leaf(random_tensor(&mut r, 2, 2));
    assert!(deepset_forward(&mut g, &p, m, &[4, 4], &phi, &rho).is_err());
}

#[test]
fn user_representation_is_the_component_mean() {
    let mut g = Graph::new();
    let a = g.leaf(Tensor::row(&[1.0, 2.0]));
    let b = g.leaf(Tensor::row(&[3.0, -2.0]));
    let c = g.leaf(Tensor::row(&[2.0, 6.0]));
    let m = user_representation(&mut g, &[a, b, c]).unwrap();
    assert_eq!(g.value(m).data(), &[2.0, 2.0]);
    let bad = g.leaf(Tensor::row(&[1.0]));
    assert!(user_representation(&mut g, &[a, bad]).is_err());
    assert!(user_representation(&mut g, &[]).is_err());
}

fn social_dataset() -> Dataset {
    let ratings: Vec<(usize, usize, f64)> =
        (0..6).flat_map(|u| (0..5).map(move |i| (u, i, ((u + i) % 5 + 1) as f64))).collect();
    let interactions = ratings.iter().map(|&(u, i, r)| interaction(u, i, r)).collect();
    Dataset::new(
        table("u", 6, 2, 3),
        table("i", 5, 2, 2),
        interactions,
        vec![(0, 1), (1, 2), (3, 4)],
        RatingKind::Scale { min: 1, max: 5 },
        None,
    )
    .unwrap()
}

fn full_spec(d: &Dataset) -> ModelSpec {
    let mut spec = ModelSpec::for_dataset(d, Task::Rating);
    spec.components = Components {
        interactions: true,
        social: true,
        same_rating: true,
        same_attribute: Some(1),
        ..Default::default()
    };
    spec.same_rating_k = 1;
    spec.fm = true;
    spec.label_augmentation = true;
    spec.embedding_dim = 3;
    spec.user_dim = 4;
    spec.item_dim = 4;
    spec.attention_dim = 4;
    spec.hidden = 5;
    spec
}

fn scores_of(model: &Model, ctx: &ModelContext, params: &ModelParams) -> Vec<f64> {
    let mut g = Graph::new();
    let p = params.bind(&mut g);
    let s = model.scores(&mut g, &p, ctx, 2, &[(0, 3.0), (1, 4.0)], &[2, 3, 4]).unwrap();
    g.value(s).data().to_vec()
}

#[test]
fn full_framework_gradient_matches_finite_differences() {
    let d = social_dataset();
    let spec = full_spec(&d);
    let (model, params) = Model::new(&spec, 4).unwrap();
    let ctx = ModelContext::new(&spec, &d).unwrap();
    let mut g = Graph::new();
    let p = params.bind(&mut g);
    let s = model.scores(&mut g, &p, &ctx, 2, &[(0, 3.0), (1, 4.0)], &[2, 3, 4]).unwrap();
    let w = Tensor::new(3, 1, vec![0.3, -0.7, 1.1]).unwrap();
    let out = weighted_sum(&mut g, s, &w).unwrap();
    let grads = g.grad(out, &p, false).unwrap();
    let analytic: Vec<f64> = grads.iter().flat_map(|&v| g.value(v).data().to_vec()).collect();
    let numeric =
        finite_difference(&params, 1e-6, |q| scores_of(&model, &ctx, q).iter().zip(w.data()).map(|(a, b)| a * b).sum());
    let err = relative_error(&analytic, &numeric);
    assert!(err < 1e-6, "relative error {err}");
}

#[test]
fn checkpoint_round_trip_preserves_predictions() {
    let d = social_dataset();
    let spec = full_spec(&d);
    let (model, params) = Model::new(&spec, 9).unwrap();
    let ctx = ModelContext::new(&spec, &d).unwrap();
    let text = checkpoint_to_string(&spec, &params, "abc123");
    let loaded = parse_checkpoint("mem", &text).unwrap();
    assert_eq!(loaded.fingerprint, "abc123");
    assert_eq!(loaded.params.names(), params.names());
    assert_eq!(loaded.params.tensors(), params.tensors());
    assert_eq!(scores_of(&loaded.model, &ctx, &loaded.params), scores_of(&model, &ctx, &params));
    assert_eq!(checkpoint_to_string(&spec, &loaded.params, "abc123"), text);
}

#[test]
fn corrupt_checkpoints_are_rejected() {
    let d = social_dataset();
    let spec = full_spec(&d);
    let (_, params) = Model::new(&spec, 9).unwrap();
    let text = checkpoint_to_string(&spec, &params, "f");
    assert!(parse_checkpoint("mem", "not a checkpoint\n").is_err());
    let truncated: String = text.lines().take(text.lines().count() - 1).map(|l| format!("{l}\n")).collect();
    assert!(parse_checkpoint("mem", &truncated).is_err());
    let nan = text.replace(" 0.", " NaN0.");
    assert!(parse_checkpoint("mem", &nan).is_err());
}

#[test]
fn models_with_the_same_seed_are_identical() {
    let d = social_dataset();
    let spec = full_spec(&d);
    let (_, a) = Model::new(&spec, 5).unwrap();
    let (_, b) = Model::new(&spec, 5).unwrap();
    let (_, c) = Model::new(&spec, 6).unwrap();
    assert_eq!(a.tensors(), b.tensors());
    assert_ne!(a.tensors(), c.tensors());
}
