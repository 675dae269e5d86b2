//! Acceptance criteria, run in order with one PASS/FAIL line each.
//!
//! `ACCEPTANCE_FILTER=a,c` restricts the run to the listed criterion ids.
//! `ACCEPTANCE_WORKERS=N` sets the simulation thread count (results do not
//! depend on it; the default is the machine's available parallelism).

use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use qpadmm::admm::{decode_with_state, residual, stationarity_report};
use qpadmm::certify::{certificate_verdict, replay_with_map, RelativeMap, SWAP_TABLE};
use qpadmm::channel::{frame_rng, llr, modulate_with_noise, standard_noise};
use qpadmm::codes::{builtin, gallager_regular, hamming_7_4, wimax_rate_half};
use qpadmm::model::DENSE_CAP;
use qpadmm::sim::{
    run_sim, scaling_bench, sweep, BenchOptions, DecoderChoice, DecoderKind, SimConfig, SimReport,
    SweepAxis, SweepRow,
};
use qpadmm::{
    decode, symmetry_replay, ChannelConfig, Codebook, DecoderParams, DecomposedModel, Encoder,
    ParityCheckMatrix,
};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

struct Criterion {
    id: &'static str,
    name: &'static str,
    run: fn() -> Outcome,
}

fn workers() -> usize {
    std::env::var("ACCEPTANCE_WORKERS")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn noisy_llr(c: &[u8], cfg: &ChannelConfig, seed: u64, stream: u64, frame: u64) -> Vec<f64> {
    let noise = standard_noise(c.len(), &mut frame_rng(seed, stream, frame));
    llr(&modulate_with_noise(c, cfg.sigma(), &noise), cfg)
}

fn standard_codes() -> Vec<(&'static str, ParityCheckMatrix)> {
    [
        "wimax-576",
        "wimax-1152",
        "wimax-2304",
        "gallager-1008",
        "gallager-2640",
    ]
    .into_iter()
    .map(|name| (name, builtin(name).expect("builtin exists")))
    .collect()
}

fn model_counts() -> Outcome {
    let start = Instant::now();
    let m = DecomposedModel::decompose(&hamming_7_4());
    let mut ok = m.gamma_c() == 6 && m.gamma_a() == 3;
    let mut detail = format!("hamming gamma_c={} gamma_a={}", m.gamma_c(), m.gamma_a());
    for (name, h) in standard_codes() {
        let m = DecomposedModel::decompose(&h);
        let d = h.max_row_degree();
        let bound = h.m() * (d - 3);
        let gc: usize = h.rows().iter().map(|r| r.len() - 2).sum();
        let ga: usize = h.rows().iter().map(|r| r.len() - 3).sum();
        ok &= m.gamma_a() <= bound && m.gamma_a() == ga && m.gamma_c() == gc;
        detail += &format!("; {name} gamma_a={} <= {bound}", m.gamma_a());
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(1);
    Outcome::new(ok, detail)
}

fn operator_oracle() -> Outcome {
    let codes = [
        ("hamming", hamming_7_4()),
        ("gallager-504", gallager_regular(504, 3, 6, 2).unwrap()),
        ("wimax-576", wimax_rate_half(24).unwrap()),
    ];
    let start = Instant::now();
    let mut rng = frame_rng(2024, 0, 0);
    // k / 1024 values: every partial sum is exact, so any summation order
    // gives bit-identical results.
    let mut dyadic = |len: usize| -> Vec<f64> {
        (0..len)
            .map(|_| f64::from(rng.random_range(-4096i32..=4096)) / 1024.0)
            .collect()
    };
    let mut mismatches = 0usize;
    let mut off_diagonal = 0usize;
    let mut sizes = Vec::new();
    for (name, h) in &codes {
        let m = DecomposedModel::decompose(h);
        let dense = match m.materialize_dense(DENSE_CAP) {
            Ok(d) => d,
            Err(e) => return Outcome::new(false, format!("{name}: {e}")),
        };
        sizes.push(format!("{name} {}x{}", dense.rows, dense.cols));
        for _ in 0..100 {
            let v = dyadic(m.n_ext());
            let s = dyadic(m.n_rows());
            let rows: Vec<f64> = (0..m.n_rows())
                .map(|j| m.row_dot(j / 4, j % 4, &v))
                .collect();
            let cols: Vec<f64> = (0..m.n_ext()).map(|i| m.col_dot(i, &s)).collect();
            mismatches += usize::from(rows != dense.mul(&v));
            mismatches += usize::from(cols != dense.mul_transpose(&s));
        }
        let g = dense.gram();
        let c = dense.cols;
        for r in 0..c {
            for k in 0..c {
                let want = if r == k { m.e()[r] as i64 } else { 0 };
                off_diagonal += usize::from(g[r * c + k] != want);
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome::new(
        mismatches == 0 && off_diagonal == 0 && elapsed < Duration::from_secs(10),
        format!(
            "{}; 100 vectors each; {mismatches} product mismatches; {off_diagonal} bad Gram entries; {:.1} s",
            sizes.join(", "),
            elapsed.as_secs_f64()
        ),
    )
}

fn stationarity() -> Outcome {
    let h = wimax_rate_half(24).unwrap();
    let m = DecomposedModel::decompose(&h);
    let params = DecoderParams {
        mu: 1.0,
        alpha: 0.9,
        epsilon: 1e-5,
        max_iters: 1000,
        early_exit: false,
    };
    let cfg = ChannelConfig::new(3.0, h.design_rate(), 31).unwrap();
    let zeros = vec![0u8; h.n()];
    let (mut converged, mut skipped, mut bad) = (0, 0, 0);
    let (mut worst_res, mut worst_y, mut worst_slack) = (0.0f64, f64::INFINITY, 0.0f64);
    let mut frame = 0;
    while converged < 1000 {
        let g = noisy_llr(&zeros, &cfg, 31, 0, frame);
        frame += 1;
        let (r, st) = decode_with_state(&m, &g, &params).expect("valid parameters");
        if !r.converged {
            skipped += 1;
            continue;
        }
        converged += 1;
        let rep = stationarity_report(&m, &st, &params);
        let res = residual(&m, &st);
        worst_res = worst_res.max(res);
        worst_y = worst_y.min(rep.min_multiplier);
        worst_slack = worst_slack.max(rep.complementary_slackness);
        if !(res < 1e-5 && rep.min_multiplier >= -1e-8 && rep.complementary_slackness <= 1e-4) {
            bad += 1;
        }
    }
    Outcome::new(
        bad == 0,
        format!(
            "{converged} converged ({skipped} not converged, excluded); max residual {worst_res:.2e}, min y {worst_y:.2e}, max |y'z| {worst_slack:.2e}"
        ),
    )
}

fn certificate() -> Outcome {
    let h = hamming_7_4();
    let m = DecomposedModel::decompose(&h);
    let book = Codebook::new(&h).unwrap();
    let params = DecoderParams::default();
    let cfg = ChannelConfig::new(4.0, h.design_rate(), 41).unwrap();
    let (mut integral, mut certified, mut ties, mut counterexamples, mut objective_disagree) =
        (0, 0, 0, 0, 0);
    for f in 0..10_000 {
        let g = noisy_llr(&[0; 7], &cfg, 41, 0, f);
        let r = decode(&m, &g, &params).expect("valid parameters");
        if !(r.integral && r.parity_ok) {
            continue;
        }
        integral += 1;
        let verdict = certificate_verdict(&m, &r, &g, &params).expect("integral output");
        if verdict.fixed_point != verdict.objective_non_decreasing {
            objective_disagree += 1;
        }
        if !verdict.fixed_point {
            continue;
        }
        let ml = book.ml(&g);
        if ml.is_tie() {
            ties += 1;
            continue;
        }
        certified += 1;
        if r.x_hat != ml.codeword {
            counterexamples += 1;
        }
    }
    Outcome::new(
        counterexamples == 0 && certified > 0,
        format!(
            "10000 frames, {integral} integral, {certified} certified, {ties} ties excluded, {counterexamples} counterexamples; objective reading differs on {objective_disagree}"
        ),
    )
}

fn replay_pairs(h: &ParityCheckMatrix, pairs: u64, ebno: f64, seed: u64) -> (usize, f64) {
    let m = DecomposedModel::decompose(h);
    let enc = Encoder::new(h);
    let cfg = ChannelConfig::new(ebno, h.design_rate(), seed).unwrap();
    let params = DecoderParams::default();
    let (mut failures, mut worst) = (0, 0.0f64);
    for f in 0..pairs {
        let c = enc.random_codeword(&mut frame_rng(seed, 1, f));
        let g = noisy_llr(&c, &cfg, seed, 0, f);
        let rep = symmetry_replay(&m, &c, &g, &params).expect("codeword and parameters valid");
        failures += usize::from(!rep.passed());
        worst = worst.max(rep.max_deviation);
    }
    (failures, worst)
}

fn symmetry() -> Outcome {
    let (ham_fail, ham_dev) = replay_pairs(&hamming_7_4(), 100, 2.0, 51);
    let (w_fail, w_dev) = replay_pairs(&wimax_rate_half(24).unwrap(), 20, 2.0, 52);

    // Negative controls: a corrupted block permutation, and the map of a
    // different codeword, must both be caught.
    let h = hamming_7_4();
    let m = DecomposedModel::decompose(&h);
    let cfg = ChannelConfig::new(2.0, h.design_rate(), 53).unwrap();
    let params = DecoderParams::default();
    let words: Vec<Vec<u8>> = Codebook::new(&h)
        .unwrap()
        .words()
        .iter()
        .filter(|c| c.contains(&1))
        .cloned()
        .collect();
    let mut bad_table = SWAP_TABLE;
    bad_table[1] = [0, 1, 2, 3];
    bad_table[2] = [0, 1, 2, 3];
    bad_table[3] = [0, 1, 2, 3];
    let (mut caught, mut trials) = (0, 0);
    for (k, c) in words.iter().enumerate() {
        let g = noisy_llr(c, &cfg, 53, 0, k as u64);
        let corrupted = RelativeMap::with_table(&m, m.aux_extend(c).unwrap(), bad_table).unwrap();
        let wrong_word = &words[(k + 1) % words.len()];
        let wrong_ref = RelativeMap::for_codeword(&m, wrong_word).unwrap();
        for map in [corrupted, wrong_ref] {
            trials += 1;
            let rep = replay_with_map(&m, &map, c, &g, &params).unwrap();
            caught += usize::from(!rep.passed());
        }
    }
    Outcome::new(
        ham_fail == 0 && w_fail == 0 && caught == trials,
        format!(
            "hamming 100 pairs, {ham_fail} failed, max dev {ham_dev:.1e}; wimax-576 20 pairs, {w_fail} failed, max dev {w_dev:.1e}; mutations caught {caught}/{trials}"
        ),
    )
}

/// Shared 3 dB run on the (576,288) code with both decoders.
fn operating_point() -> &'static SimReport {
    static REPORT: OnceLock<SimReport> = OnceLock::new();
    REPORT.get_or_init(|| {
        let h = wimax_rate_half(24).unwrap();
        let cfg = SimConfig {
            code_label: "wimax-576".into(),
            decoder: DecoderChoice::Both,
            ebno_list: vec![3.0],
            admm: DecoderParams {
                mu: 1.0,
                alpha: 0.9,
                epsilon: 1e-5,
                max_iters: 1000,
                early_exit: false,
            },
            min_errors: 100,
            max_frames: 10_000_000,
            seed: 2016,
            workers: workers(),
            ..Default::default()
        };
        run_sim(&h, &cfg).expect("simulation runs")
    })
}

fn bp_parity() -> Outcome {
    let rep = operating_point();
    let qp = rep.point(DecoderKind::QpAdmm, 3.0).unwrap();
    let bp = rep.point(DecoderKind::Bp, 3.0).unwrap();
    let enough = qp.frame_errors >= 100 && bp.frame_errors >= 100;
    let ratio_ok = qp.fer <= 1.25 * bp.fer;
    let overlap = qp.fer_ci.0 <= bp.fer_ci.1 && bp.fer_ci.0 <= qp.fer_ci.1;
    Outcome::new(
        enough && (ratio_ok || overlap),
        format!(
            "qpadmm {}/{} FER {:.3e} [{:.3e}, {:.3e}]; bp {}/{} FER {:.3e} [{:.3e}, {:.3e}]; ratio {:.2}",
            qp.frame_errors,
            qp.frames,
            qp.fer,
            qp.fer_ci.0,
            qp.fer_ci.1,
            bp.frame_errors,
            bp.frames,
            bp.fer,
            bp.fer_ci.0,
            bp.fer_ci.1,
            qp.fer / bp.fer
        ),
    )
}

fn iteration_distribution() -> Outcome {
    let qp = operating_point().point(DecoderKind::QpAdmm, 3.0).unwrap();
    let share = qp.fraction_converged_below(100);
    Outcome::new(
        share >= 0.9,
        format!(
            "{:.2}% of {} frames converged in < 100 iterations; mean {:.1}, median {:.0}",
            100.0 * share,
            qp.frames,
            qp.mean_iters,
            qp.median_iters
        ),
    )
}

fn linearity() -> Outcome {
    let codes: Vec<(String, ParityCheckMatrix)> = [24, 48, 96]
        .into_iter()
        .map(|z| (format!("wimax-{}", 24 * z), wimax_rate_half(z).unwrap()))
        .collect();
    let opts = BenchOptions {
        qp_iterations: 10_000,
        bp_iterations: 50,
        repeats: 5,
        ..BenchOptions::default()
    };
    let rows = scaling_bench(&codes, &opts).expect("bench runs");
    let mut ok = true;
    let mut detail: Vec<String> = rows
        .iter()
        .map(|r| format!("n+aux {} {:.0} ns/iter", r.n_ext, r.qp_ns_per_iter))
        .collect();
    for w in rows.windows(2) {
        let size = w[1].n_ext as f64 / w[0].n_ext as f64;
        let time = w[1].qp_ns_per_iter / w[0].qp_ns_per_iter;
        ok &= time <= 1.25 * size;
        detail.push(format!("time ratio {time:.2} vs size ratio {size:.2}"));
    }
    Outcome::new(ok, detail.join("; "))
}

const SWEEP_EBNO: f64 = 1.6;

fn sweep_rows(axis: SweepAxis, grid: &[f64]) -> Vec<SweepRow> {
    let h = builtin("gallager-2640").unwrap();
    let cfg = SimConfig {
        code_label: "gallager-2640".into(),
        ebno_list: vec![SWEEP_EBNO],
        admm: DecoderParams {
            mu: 1.0,
            alpha: 0.6,
            ..DecoderParams::default()
        },
        min_errors: 200,
        max_frames: 1_000_000,
        seed: 77,
        workers: workers(),
        ..Default::default()
    };
    sweep(&h, &cfg, axis, grid).expect("sweep runs")
}

fn sweep_outcome(rows: &[SweepRow], lo: f64, hi: f64) -> Outcome {
    let valid: Vec<&SweepRow> = rows.iter().filter(|r| r.is_valid()).collect();
    let enough = valid.iter().all(|r| r.frame_errors >= 50);
    let best = valid.iter().min_by(|a, b| a.fer.total_cmp(&b.fer)).unwrap();
    let points: Vec<String> = valid
        .iter()
        .map(|r| format!("{}:{:.2e}", r.value, r.fer))
        .collect();
    Outcome::new(
        enough && best.value >= lo - 1e-12 && best.value <= hi + 1e-12,
        format!(
            "best {} (FER {:.3e}); {}",
            best.value,
            best.fer,
            points.join(" ")
        ),
    )
}

fn mu_sweep() -> Outcome {
    let rows = sweep_rows(SweepAxis::Mu, &[0.3, 0.5, 0.7, 0.9, 1.1, 1.3, 1.5]);
    sweep_outcome(&rows, 0.7, 1.1)
}

fn alpha_sweep() -> Outcome {
    let rows = sweep_rows(SweepAxis::Alpha, &[0.0, 0.15, 0.3, 0.6, 1.0, 1.5, 2.0]);
    sweep_outcome(&rows, 0.3, 1.0)
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            id: "a",
            name: "model construction counts",
            run: model_counts,
        },
        Criterion {
            id: "b",
            name: "implicit operator vs dense oracle",
            run: operator_oracle,
        },
        Criterion {
            id: "c",
            name: "feasibility/stationarity post-conditions",
            run: stationarity,
        },
        Criterion {
            id: "d",
            name: "ML certificate vs brute force",
            run: certificate,
        },
        Criterion {
            id: "e",
            name: "all-zeros symmetry replay",
            run: symmetry,
        },
        Criterion {
            id: "f",
            name: "QP-ADMM vs BP FER at 3 dB [slow]",
            run: bp_parity,
        },
        Criterion {
            id: "g",
            name: "iteration distribution at 3 dB",
            run: iteration_distribution,
        },
        Criterion {
            id: "h",
            name: "per-iteration time linear in size",
            run: linearity,
        },
        Criterion {
            id: "i1",
            name: "mu sweep best in [0.7, 1.1] [slow]",
            run: mu_sweep,
        },
        Criterion {
            id: "i2",
            name: "alpha sweep best in [0.3, 1.0] [slow]",
            run: alpha_sweep,
        },
    ];
    let filter: Option<Vec<String>> = std::env::var("ACCEPTANCE_FILTER")
        .ok()
        .map(|s| s.split(',').map(|x| x.trim().to_string()).collect());

    let mut failed = 0;
    let mut ran = 0;
    for c in &criteria {
        if let Some(f) = &filter {
            if !f.iter().any(|x| x == c.id) {
                continue;
            }
        }
        let start = Instant::now();
        let out = (c.run)();
        ran += 1;
        failed += usize::from(!out.pass);
        println!(
            "{} [{}] {}: {} ({:.1} s)",
            if out.pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            out.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
