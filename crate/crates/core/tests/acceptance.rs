#![allow(clippy::needless_range_loop)]

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::Instant;

use iacn_core::linalg::{softmax, sq_dist};
use iacn_core::model::gradient_check;
use iacn_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    skipped: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            skipped: false,
            detail: detail.into(),
        }
    }

    fn skip(detail: impl Into<String>) -> Self {
        Outcome {
            pass: true,
            skipped: true,
            detail: detail.into(),
        }
    }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("gradient suite", gradients),
        ("fusion exactness", fusion),
        ("attention softmax", attention),
        ("scalar oracle equivalence", oracle),
        ("influence ablation, directional", influence_ablation),
        ("metrics", metrics),
        ("lsh retrieval", lsh),
        ("neighborhood statistic", neighborhood_statistic),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let out = check();
        let tag = if out.skipped {
            "SKIP"
        } else if out.pass {
            "PASS"
        } else {
            failed += 1;
            "FAIL"
        };
        println!(
            "[{tag}] {name}: {} ({:.1}s)",
            out.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}

fn random_log(
    rng: &mut ChaCha8Rng,
    users: usize,
    items: usize,
    features: usize,
    n: usize,
) -> Vec<Interaction> {
    let mut t = 0.0;
    (0..n)
        .map(|_| {
            t += rng.random_range(0.05..1.0);
            let q = (0..features).map(|_| rng.random_range(-1.0..1.0)).collect();
            Interaction::new(rng.random_range(0..users), rng.random_range(0..items), t, q)
        })
        .collect()
}

fn gradients() -> Outcome {
    let start = Instant::now();
    let dims = Dims::new(6, 5, 8, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let events = random_log(&mut rng, 6, 5, 3, 2000);
    let per_mode = 100;
    let mut worst: f64 = 0.0;
    let mut worst_at = String::new();
    let mut counts = Vec::new();
    for ablation in [
        Ablation::None,
        Ablation::InfluenceOff,
        Ablation::LatentCross,
    ] {
        let config = ModelConfig {
            ablation,
            history_cap: 6,
            lambda_user: 0.5,
            lambda_item: 0.5,
            ..ModelConfig::default()
        };
        let model = Model::new(dims, config, 3).unwrap();
        let optimizer = Optimizer::new(OptimizerKind::Adam, &dims, 0.01);
        let mut trainer = Trainer::new(model, optimizer);
        let mut checked = 0;
        for e in &events {
            if checked == per_mode {
                break;
            }
            let m = &trainer.model;
            if let Some(last) = m.state.user_last_t[e.user] {
                let window = m
                    .neighborhood()
                    .events_in_window(e.user, last, e.time)
                    .len();
                if window > 0
                    && !m.user_history(e.user).is_empty()
                    && !m.item_history(e.item).is_empty()
                {
                    let g = gradient_check(m, e).unwrap();
                    if g.max_rel_error > worst {
                        worst = g.max_rel_error;
                        worst_at =
                            format!("{} {}[{}]", ablation.label(), g.worst_block, g.worst_index);
                    }
                    checked += 1;
                }
            }
            trainer.event_step(e, Mode::Train).unwrap();
        }
        counts.push(checked);
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        worst <= 1e-5 && counts.iter().all(|&c| c == per_mode) && secs < 120.0,
        format!("{counts:?} events per mode, max rel error {worst:.2e} at {worst_at} (<= 1e-5)"),
    )
}

fn fusion() -> Outcome {
    let u = [0.3, -1.2, 2.5, 0.0];
    let i = [1.1, 0.4, -0.7, 3.0];
    let mut ok = fuse(&u, &i, 0.8, 0.0).unwrap() == u;
    let beta = 0.37;
    let mid = fuse(&u, &i, beta, std::f64::consts::LN_2 / beta).unwrap();
    let mid_err = mid
        .iter()
        .zip(u.iter().zip(&i))
        .map(|(f, (a, b))| (f - (a + b) / 2.0).abs())
        .fold(0.0, f64::max);
    let far = fuse(&u, &i, beta, 50.0 / beta).unwrap();
    let far_err = far
        .iter()
        .zip(&i)
        .map(|(f, b)| (f - b).abs())
        .fold(0.0, f64::max);
    ok &= mid_err <= 1e-12 && far_err <= 1e-12;

    let dims = Dims::new(2, 2, 4, 0).unwrap();
    let (_, params) = init_states(&dims, 5, DynamicInit::default()).unwrap();
    let theta_off = influence_weight(&u, &i, &params, false).unwrap();
    let theta_on = influence_weight(&u, &i, &params, true).unwrap();
    ok &= theta_off == 0.0 && theta_on != 0.0;
    Outcome::new(
        ok,
        format!(
            "midpoint err {mid_err:.1e}, far err {far_err:.1e}, non-neighbor weight {theta_off}"
        ),
    )
}

fn attention() -> Outcome {
    let dims = Dims::new(3, 3, 6, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut sum_err: f64 = 0.0;
    let mut perm_err: f64 = 0.0;
    let mut shift_err: f64 = 0.0;
    for trial in 0..200 {
        let (_, params) = init_states(&dims, trial, DynamicInit::default()).unwrap();
        let len = rng.random_range(1..12);
        let embs: Vec<Vec<f64>> = (0..len)
            .map(|_| (0..6).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let feats: Vec<Vec<f64>> = (0..len)
            .map(|_| (0..2).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let me: Vec<f64> = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
        let hist: Vec<AttentionInput> = embs
            .iter()
            .zip(&feats)
            .map(|(e, f)| AttentionInput {
                embedding: e,
                features: f,
            })
            .collect();
        let (out, br) = update_user_embedding(&hist, &me, &params).unwrap();
        sum_err = sum_err.max((br.weights.iter().sum::<f64>() - 1.0).abs());

        let mut order: Vec<usize> = (0..len).collect();
        order.reverse();
        order.rotate_left(len / 2);
        let permuted: Vec<AttentionInput> = order.iter().map(|&k| hist[k]).collect();
        let (out_p, _) = update_user_embedding(&permuted, &me, &params).unwrap();
        perm_err = perm_err.max(
            out.iter()
                .zip(&out_p)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        );

        let c = rng.random_range(-50.0..50.0);
        let shifted: Vec<f64> = br.scores.iter().map(|s| s + c).collect();
        let w2 = softmax(&shifted);
        shift_err = shift_err.max(
            br.weights
                .iter()
                .zip(&w2)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        );
    }
    Outcome::new(
        sum_err <= 1e-9 && perm_err <= 1e-12 && shift_err <= 1e-12,
        format!("sum err {sum_err:.1e}, permutation err {perm_err:.1e}, shift err {shift_err:.1e}"),
    )
}

fn hand_value(block: usize, k: usize) -> f64 {
    0.4 * (1.3 * k as f64 + 0.7 * block as f64 + 0.5).sin()
}

fn mv(a: &[f64], rows: usize, cols: usize, x: &[f64]) -> Vec<f64> {
    (0..rows)
        .map(|r| (0..cols).map(|c| a[r * cols + c] * x[c]).sum())
        .collect()
}

fn inner(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Plain transcription of one attention update over `(embedding, features)`.
#[allow(clippy::too_many_arguments)]
fn oracle_attend(
    entries: &[(Vec<f64>, Vec<f64>)],
    me: &[f64],
    q: &[f64],
    v: &[f64],
    fm: &[f64],
    d: usize,
    f: usize,
) -> Vec<f64> {
    let query = mv(q, d, d, me);
    let scores: Vec<f64> = entries
        .iter()
        .map(|(e, x)| inner(&mv(v, d, d, e), &query) + inner(&mv(fm, d, f, x), &query))
        .collect();
    let top = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - top).exp()).collect();
    let z: f64 = exps.iter().sum();
    let mut acc = vec![0.0; d];
    for ((e, _), w) in entries.iter().zip(&exps) {
        let val = mv(v, d, d, e);
        for r in 0..d {
            acc[r] += w / z * val[r];
        }
    }
    acc.iter().map(|x| x.tanh()).collect()
}

/// Independent per-event losses for a tiny log under hand-set parameters.
fn oracle_losses(model: &Model, events: &[Interaction]) -> Vec<f64> {
    let Dims {
        users: m,
        items: n,
        dim: d,
        features: f,
    } = model.dims;
    let p = &model.params;
    let blk = |name: &str| -> Vec<f64> {
        p.blocks()
            .iter()
            .find(|(b, _)| *b == name)
            .unwrap()
            .1
            .to_vec()
    };
    let (w_user, w_item, w_feat) = (blk("w_user"), blk("w_item"), blk("w_feat"));
    let (v_user, v_item, v_feat) = (blk("v_user"), blk("v_item"), blk("v_feat"));
    let (w1, w2) = (blk("w_infl_neighbor"), blk("w_infl_user"));
    let (decay_raw, fusion_raw) = (blk("decay_raw"), blk("fusion_raw"));
    let (w_pred, b_pred, w_ctx) = (blk("w_pred"), blk("b_pred"), blk("w_ctx"));
    let sp = |x: f64| (1.0 + x.exp()).ln();
    let lam_u = model.config.lambda_user;
    let lam_i = model.config.lambda_item;
    let ablation = model.config.ablation;

    let mut udyn: Vec<Vec<f64>> = (0..m).map(|u| model.state.user(u).to_vec()).collect();
    let mut idyn: Vec<Vec<f64>> = (0..n).map(|i| model.state.item(i).to_vec()).collect();
    let mut last_t: Vec<Option<f64>> = vec![None; m];
    let mut last_item: Vec<Option<usize>> = vec![None; m];
    let mut uhist: Vec<Vec<(Vec<f64>, Vec<f64>)>> = vec![Vec::new(); m];
    let mut ihist: Vec<Vec<(Vec<f64>, Vec<f64>)>> = vec![Vec::new(); n];
    let mut neighbors: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); m];
    let mut first_visit: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    // (owner, neighbor, time, neighbor embedding)
    let mut delivered: Vec<(usize, usize, f64, Vec<f64>)> = Vec::new();

    let mut losses = Vec::new();
    for e in events {
        let (u, i, t) = (e.user, e.item, e.time);
        let u_prev = udyn[u].clone();
        let i_prev = idyn[i].clone();
        let dt = last_t[u].map_or(0.0, |l| t - l);

        let mut infl = vec![0.0; d];
        if let Some(l) = last_t[u] {
            let delta = sp(decay_raw[u]);
            let wu = mv(&w2, d, d, &u_prev);
            for (owner, _, tv, emb) in &delivered {
                if *owner == u && *tv > l && *tv < t {
                    let theta = inner(&mv(&w1, d, d, emb), &wu);
                    let k = theta * (-delta * (t - tv)).exp();
                    for r in 0..d {
                        infl[r] += k * emb[r];
                    }
                }
            }
        }
        let fused: Vec<f64> = match ablation {
            Ablation::InfluenceOff => u_prev.clone(),
            Ablation::LatentCross => (0..d)
                .map(|r| (1.0 + w_ctx[r] * dt) * u_prev[r] + infl[r])
                .collect(),
            Ablation::None => {
                let lam = 1.0 - (-sp(fusion_raw[u]) * dt).exp();
                (0..d)
                    .map(|r| u_prev[r] + lam * (infl[r] - u_prev[r]))
                    .collect()
            }
        };

        let mut x = fused.clone();
        x.extend((0..m).map(|k| if k == u { 1.0 } else { 0.0 }));
        match last_item[u] {
            Some(j) => x.extend(&idyn[j]),
            None => x.extend(vec![0.0; d]),
        }
        x.extend((0..n).map(|k| if Some(k) == last_item[u] { 1.0 } else { 0.0 }));
        let cols = x.len();
        let pred: Vec<f64> = mv(&w_pred, n + d, cols, &x)
            .iter()
            .zip(&b_pred)
            .map(|(a, b)| a + b)
            .collect();
        let mut target: Vec<f64> = (0..n).map(|k| if k == i { 1.0 } else { 0.0 }).collect();
        target.extend(&i_prev);
        let pred_loss: f64 = pred.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum();

        let mut u_set = uhist[u].clone();
        u_set.push((i_prev.clone(), e.features.clone()));
        let u_new = oracle_attend(&u_set, &u_prev, &w_user, &w_item, &w_feat, d, f);
        let mut i_set = ihist[i].clone();
        i_set.push((u_prev.clone(), e.features.clone()));
        let i_new = oracle_attend(&i_set, &i_prev, &v_item, &v_user, &v_feat, d, f);

        let du: f64 = u_new
            .iter()
            .zip(&u_prev)
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        let di: f64 = i_new
            .iter()
            .zip(&i_prev)
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        losses.push(pred_loss + lam_u * du + lam_i * di);

        for &(v, tv) in &first_visit[i] {
            if v != u && tv < t {
                neighbors[u].insert(v);
            }
        }
        if !first_visit[i].iter().any(|&(v, _)| v == u) {
            first_visit[i].push((u, t));
        }
        for w in 0..m {
            if neighbors[w].contains(&u) {
                delivered.push((w, u, t, u_new.clone()));
            }
        }
        udyn[u] = u_new.clone();
        idyn[i] = i_new.clone();
        last_t[u] = Some(t);
        last_item[u] = Some(i);
        uhist[u].push((i_new, e.features.clone()));
        ihist[i].push((u_new, e.features.clone()));
    }
    losses
}

fn oracle() -> Outcome {
    let dims = Dims::new(2, 2, 3, 1).unwrap();
    let events = vec![
        Interaction::new(0, 0, 1.0, vec![0.5]),
        Interaction::new(1, 0, 2.0, vec![-0.3]),
        Interaction::new(0, 1, 3.0, vec![0.8]),
        Interaction::new(1, 1, 4.5, vec![0.1]),
        Interaction::new(0, 0, 6.0, vec![-0.6]),
    ];
    let mut worst: f64 = 0.0;
    let mut windows = 0;
    for ablation in [
        Ablation::None,
        Ablation::InfluenceOff,
        Ablation::LatentCross,
    ] {
        let config = ModelConfig {
            ablation,
            neighborhood_cap: None,
            lambda_user: 0.7,
            lambda_item: 0.3,
            ..ModelConfig::default()
        };
        let mut model = Model::new(dims, config, 9).unwrap();
        for (b, (_, block)) in model.params.blocks_mut().into_iter().enumerate() {
            for (k, x) in block.iter_mut().enumerate() {
                *x = hand_value(b, k);
            }
        }
        for (k, x) in model.state.user_dyn.as_mut_slice().iter_mut().enumerate() {
            *x = 0.5 * (0.9 * k as f64 + 0.2).cos();
        }
        for (k, x) in model.state.item_dyn.as_mut_slice().iter_mut().enumerate() {
            *x = 0.5 * (1.1 * k as f64 - 0.4).sin();
        }
        let expected = oracle_losses(&model, &events);
        let mut trainer = Trainer::new(model, Optimizer::new(OptimizerKind::Adam, &dims, 1e-3));
        for (e, want) in events.iter().zip(&expected) {
            let tape = trainer.model.forward(e).unwrap();
            windows += tape.query.window_len();
            let got = trainer.event_step(e, Mode::Frozen).unwrap();
            worst = worst.max((got - want).abs()).max((tape.loss - want).abs());
        }
    }
    Outcome::new(
        worst <= 1e-10 && windows > 0,
        format!("max |loss - oracle| {worst:.1e} over 3 modes x 5 events (<= 1e-10)"),
    )
}

fn directional_run(seed: u64, ablation: Ablation) -> (Vec<f64>, f64) {
    let cfg = SynthConfig::random(&RandomSynth::default(), seed).unwrap();
    let (log, _) = generate(&cfg).unwrap();
    let log = log.normalize_time().unwrap();
    let (train, val, test) = chronological_split(&log, [0.8, 0.1, 0.1]).unwrap();
    let config = TrainConfig {
        dim: 16,
        learning_rate: 3e-3,
        lambda_user: 0.0,
        lambda_item: 0.0,
        epochs: 5,
        neighborhood_cap: None,
        seed,
        ablation,
        ..TrainConfig::default()
    };
    let mut trainer = Trainer::from_config(log.num_users(), log.num_items(), 0, &config).unwrap();
    let losses = (0..config.epochs)
        .map(|_| {
            trainer
                .train_epoch(train.events(), Mode::Train)
                .unwrap()
                .mean_loss
        })
        .collect();
    let report = replay_then_evaluate(
        &mut trainer.model,
        val.events(),
        test.events(),
        Ranking::Exact,
    )
    .unwrap();
    (losses, report.recall10)
}

fn influence_ablation() -> Outcome {
    let start = Instant::now();
    let mut wins = 0;
    let mut drops_ok = true;
    let mut lines = Vec::new();
    for seed in 1..=3 {
        let (full_loss, full_r) = directional_run(seed, Ablation::None);
        let (off_loss, off_r) = directional_run(seed, Ablation::InfluenceOff);
        for l in [&full_loss, &off_loss] {
            drops_ok &= l[4] <= 0.8 * l[0];
        }
        if full_r > off_r {
            wins += 1;
        }
        lines.push(format!(
            "seed {seed}: recall10 {full_r:.4} vs {off_r:.4}, loss drop {:.1}%/{:.1}%",
            100.0 * (1.0 - full_loss[4] / full_loss[0]),
            100.0 * (1.0 - off_loss[4] / off_loss[0])
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        wins >= 2 && drops_ok && secs < 900.0,
        format!("full wins {wins}/3; {}", lines.join("; ")),
    )
}

fn brute_mrr(ranks: &[usize]) -> f64 {
    let mut s = 0.0;
    for &r in ranks {
        s += 1.0 / r as f64;
    }
    s / ranks.len() as f64
}

fn brute_recall(ranks: &[usize], k: usize) -> f64 {
    let mut hits = 0usize;
    for &r in ranks {
        for pos in 1..=k {
            if r == pos {
                hits += 1;
            }
        }
    }
    hits as f64 / ranks.len() as f64
}

fn metrics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut exact = true;
    for _ in 0..500 {
        let len = rng.random_range(1..60);
        let ranks: Vec<usize> = (0..len).map(|_| rng.random_range(1..200)).collect();
        let k = rng.random_range(1..25);
        exact &= mrr(&ranks).unwrap() == brute_mrr(&ranks);
        exact &= recall_at_k(&ranks, k).unwrap() == brute_recall(&ranks, k);
    }

    let spec = RandomSynth {
        users: 300,
        items: 1000,
        events: 6000,
        num_edges: 300,
        concentration: 1.0,
        ..RandomSynth::default()
    };
    let (log, _) = generate(&SynthConfig::random(&spec, 4).unwrap()).unwrap();
    let log = log.normalize_time().unwrap();
    let mut model = Model::new(
        Dims::new(log.num_users(), log.num_items(), 16, 0).unwrap(),
        ModelConfig::default(),
        4,
    )
    .unwrap();
    let (warmup, test) = log.events().split_at(1000);
    let report = replay_then_evaluate(&mut model, warmup, test, Ranking::Exact).unwrap();
    let r = report.recall10;
    Outcome::new(
        exact && (0.005..=0.02).contains(&r),
        format!(
            "brute-force agreement {exact}; untrained recall10 {r:.4} over {} events on {} items",
            report.events.len(),
            log.num_items()
        ),
    )
}

fn lsh() -> Outcome {
    let (n, d) = (100, 16);
    let dim = n + d;
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let normal = rand_distr::StandardNormal;
    let centers: Vec<Vec<f64>> = (0..50)
        .map(|_| (0..dim).map(|_| rng.sample::<f64, _>(normal)).collect())
        .collect();
    let mut data = Vec::with_capacity(1000 * dim);
    for p in 0..1000 {
        let c = &centers[p % centers.len()];
        data.extend(c.iter().map(|x| x + 0.3 * rng.sample::<f64, _>(normal)));
    }
    let items = Matrix::from_vec(1000, dim, data);
    let index = LshIndex::build(&items, 16, 8, 7).unwrap();
    let mut overlap = 0.0;
    let mut ordered = true;
    let queries = 200;
    for _ in 0..queries {
        let base = items.row(rng.random_range(0..1000));
        let q: Vec<f64> = base
            .iter()
            .map(|x| x + 0.1 * rng.sample::<f64, _>(normal))
            .collect();
        let truth: BTreeSet<usize> = exact_topk(&items, &q, 10)
            .unwrap()
            .into_iter()
            .map(|(j, _)| j)
            .collect();
        let got = index.query(&q, 10).unwrap();
        overlap += got.iter().filter(|(j, _)| truth.contains(j)).count() as f64 / 10.0;
        for (j, dist) in &got {
            ordered &= *dist == sq_dist(items.row(*j), &q);
        }
        for w in got.windows(2) {
            ordered &= w[0].1 < w[1].1 || (w[0].1 == w[1].1 && w[0].0 < w[1].0);
        }
    }
    let mean = overlap / queries as f64;
    Outcome::new(
        mean >= 0.9 && ordered,
        format!("mean top-10 overlap {mean:.3} (>= 0.9), ordering consistent {ordered}"),
    )
}

fn neighborhood_statistic() -> Outcome {
    let Ok(path) = std::env::var("IACN_WIKIPEDIA_CSV") else {
        return Outcome::skip("set IACN_WIKIPEDIA_CSV to the public dump to run");
    };
    let file = match std::fs::File::open(&path) {
        Ok(f) => f,
        Err(e) => return Outcome::new(false, format!("cannot open {path}: {e}")),
    };
    let log = match EventLog::parse_csv(std::io::BufReader::new(file)) {
        Ok(l) => l,
        Err(e) => return Outcome::new(false, format!("cannot parse {path}: {e}")),
    };
    let state = replay_neighborhoods(&log, None).unwrap();
    let count = state.nonzero_influence_count() as f64;
    let avg = state.avg_neighborhood_size();
    let within = |x: f64, r: f64| (x - r).abs() <= 0.5 * r;
    Outcome::new(
        within(count, 191_307.0) && within(avg, 23.2),
        format!("nonzero weights {count} vs 191307, mean neighborhood {avg:.1} vs 23.2 (+-50%)"),
    )
}

fn determinism() -> Outcome {
    let spec = RandomSynth {
        users: 60,
        items: 20,
        events: 1500,
        num_edges: 80,
        ..RandomSynth::default()
    };
    let (log, _) = generate(&SynthConfig::random(&spec, 2).unwrap()).unwrap();
    let log = log.normalize_time().unwrap();
    let config = TrainConfig {
        dim: 8,
        epochs: 2,
        seed: 17,
        ..TrainConfig::default()
    };
    let run = || {
        let mut trainer =
            Trainer::from_config(log.num_users(), log.num_items(), 0, &config).unwrap();
        for _ in 0..config.epochs {
            trainer.train_epoch(log.events(), Mode::Train).unwrap();
        }
        Checkpoint::from_trainer(&trainer, log.time_scale()).to_bytes()
    };
    let (a, b) = (run(), run());
    Outcome::new(
        a == b,
        format!(
            "two runs, {} checkpoint bytes, identical {}",
            a.len(),
            a == b
        ),
    )
}
