//! Acceptance suite: runs each criterion at its stated tolerance and prints one
//! pass/fail line per criterion. Criteria 1-8 run on an 8-thread pool; the
//! determinism criterion reruns all of them on one thread and compares the
//! serialized outputs byte for byte, then does the same through the binary.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use tdfinite::harness::{
    geometric_grid, rate_sweep, run_experiment, with_jobs, Algorithm, AutoOr, AutoTag, ExperimentConfig,
    InstanceSource, OutputSpec, ScheduleSpec, SCHEMA_VERSION,
};
use tdfinite::sampling::{MarkovSampler, ObservationModel, Replay};
use tdfinite::verify::{generate_instance, run_checks, Check, GeneratorConfig, VerifyConfig};
use tdfinite::{
    mean_path_td, optstop_fixed_point, run_td0, run_td_lambda, td0_fixed_point, td_lambda_fixed_point, trial_rng,
    FeatureMap, Instance, Recording, RunConfig, StepSchedule, Variant,
};

const SEED: u64 = 20_240_601;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

struct Outcome {
    passed: bool,
    detail: String,
    /// Serialized outputs compared by the determinism criterion.
    digest: String,
}

// ---------------------------------------------------------------- oracles --

type M = DMatrix<f64>;
type V = DVector<f64>;

struct Dense {
    p: M,
    rbar: V,
    phi: M,
    pi: V,
    gamma: f64,
}

impl Dense {
    fn of(inst: &Instance) -> Self {
        let p = inst.mrp.transition().clone();
        let r = inst.mrp.reward();
        let n = p.nrows();
        let rbar = V::from_fn(n, |s, _| (0..n).map(|t| p[(s, t)] * r[(s, t)]).sum());
        // π from the null space of (Pᵀ - I) with Σπ = 1, by an independent
        // route (augmented least squares via SVD).
        let mut a = M::zeros(n + 1, n);
        a.view_mut((0, 0), (n, n)).copy_from(&(p.transpose() - M::identity(n, n)));
        a.row_mut(n).fill(1.0);
        let mut b = V::zeros(n + 1);
        b[n] = 1.0;
        let pi = a.svd(true, true).solve(&b, 1e-14).unwrap();
        Self {
            p,
            rbar,
            phi: inst.features.matrix().clone(),
            pi,
            gamma: inst.gamma(),
        }
    }

    fn d(&self) -> M {
        M::from_diagonal(&self.pi)
    }

    fn d_norm(&self, v: &V) -> f64 {
        v.iter().zip(self.pi.iter()).map(|(x, w)| w * x * x).sum::<f64>().sqrt()
    }

    fn project(&self, v: &V) -> V {
        let sigma = self.phi.transpose() * self.d() * &self.phi;
        &self.phi * sigma.lu().solve(&(self.phi.transpose() * self.d() * v)).unwrap()
    }

    fn t_lambda(&self, lambda: f64, v: &V) -> V {
        let n = self.p.nrows();
        let a = M::identity(n, n) - &self.p * (self.gamma * lambda);
        a.lu()
            .solve(&(&self.rbar + &self.p * v * (self.gamma * (1.0 - lambda))))
            .unwrap()
    }

    fn v_mu(&self) -> V {
        let n = self.p.nrows();
        (M::identity(n, n) - &self.p * self.gamma).lu().solve(&self.rbar).unwrap()
    }

    /// Expected TD(λ) update `ΦᵀD(I-γλP)⁻¹(R̄ + γPΦθ - Φθ) = ΦᵀD(T^λΦθ - Φθ)`.
    fn lambda_update(&self, lambda: f64, theta: &V) -> V {
        let v = &self.phi * theta;
        self.phi.transpose() * self.d() * (self.t_lambda(lambda, &v) - &v)
    }
}

/// Q* by plain value iteration to machine precision.
fn q_star_oracle(p: &M, gamma: f64, u: &V, stop: &V) -> V {
    let mut q = V::zeros(u.len());
    loop {
        let best = q.zip_map(stop, f64::max);
        let next = u + p * best * gamma;
        if (&next - &q).amax() <= 1e-15 {
            return next;
        }
        q = next;
    }
}

fn f_operator(p: &M, gamma: f64, u: &V, stop: &V, q: &V) -> V {
    u + p * q.zip_map(stop, f64::max) * gamma
}

// ------------------------------------------------------------- criteria --

fn criterion_1() -> Outcome {
    let cfg = GeneratorConfig::default();
    let mut worst = [0.0_f64; 7];
    for i in 0..100 {
        let g = generate_instance(&cfg, SEED, i).unwrap();
        let inst = &g.instance;
        let o = Dense::of(inst);

        let theta = td0_fixed_point(inst).unwrap().theta_star;
        let v = &o.phi * &theta;
        let gbar = o.phi.transpose() * o.d() * (&o.rbar + &o.p * &v * o.gamma - &v);
        worst[0] = worst[0].max(gbar.norm());
        worst[1] = worst[1].max(o.d_norm(&(&v - o.project(&o.t_lambda(0.0, &v)))));

        for lambda in [0.25, 0.5, 0.9, 1.0] {
            let theta = td_lambda_fixed_point(inst, lambda).unwrap().theta_star;
            let v = &o.phi * &theta;
            worst[2] = worst[2].max(o.lambda_update(lambda, &theta).norm());
            worst[3] = worst[3].max(o.d_norm(&(&v - o.project(&o.t_lambda(lambda, &v)))));
        }

        let problem = &g.stopping;
        let so = Dense::of(&g.stopping_instance);
        let (u, stop) = (problem.continuation().clone(), problem.termination().clone());
        let theta = optstop_fixed_point(problem, &g.stopping_instance, 1e-12).unwrap().theta_star;
        let q = &so.phi * &theta;
        let fq = f_operator(&so.p, so.gamma, &u, &stop, &q);
        worst[4] = worst[4].max((so.phi.transpose() * so.d() * (&fq - &q)).norm());
        worst[5] = worst[5].max(so.d_norm(&(&q - so.project(&fq))));

        // Φ = I recovers V_μ, V_μ^λ-independent, and Q*.
        let full = Instance::new(inst.mrp.clone(), FeatureMap::identity(inst.n())).unwrap();
        let v_mu = o.v_mu();
        let mut err = (td0_fixed_point(&full).unwrap().theta_star - &v_mu).amax();
        for lambda in [0.25, 0.5, 0.9, 1.0] {
            err = err.max((td_lambda_fixed_point(&full, lambda).unwrap().theta_star - &v_mu).amax());
        }
        let full_stop = Instance::new(problem.chain().clone(), FeatureMap::identity(inst.n())).unwrap();
        let q_star = q_star_oracle(&so.p, so.gamma, &u, &stop);
        err = err.max((optstop_fixed_point(problem, &full_stop, 1e-12).unwrap().theta_star - q_star).amax());
        worst[6] = worst[6].max(err);
    }
    let limits = [1e-10, 1e-9, 1e-10, 1e-9, 1e-10, 1e-9, 1e-9];
    let passed = worst.iter().zip(limits).all(|(w, l)| *w <= l);
    Outcome {
        passed,
        detail: format!(
            "|gbar(θ*)|={:.1e} td0_proj={:.1e} |xbar_λ(θ*)|={:.1e} λ_proj={:.1e} |gbar_F(θ*)|={:.1e} F_proj={:.1e} Φ=I={:.1e}",
            worst[0], worst[1], worst[2], worst[3], worst[4], worst[5], worst[6]
        ),
        digest: format!("{worst:?}"),
    }
}

fn criterion_2() -> Outcome {
    let cfg = VerifyConfig {
        master_seed: SEED,
        ..VerifyConfig::default()
    };
    let reports = run_checks(&Check::ALL, &cfg).unwrap();
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed).map(|r| r.check_name.as_str()).collect();
    let worst = reports.iter().map(|r| r.max_violation).fold(f64::NEG_INFINITY, f64::max);
    Outcome {
        passed: failed.is_empty() && reports.iter().all(|r| r.instances_tested == 100),
        detail: format!("15 checks x 100 instances x 100 draws, max violation {worst:.1e}, failed {failed:?}"),
        digest: serde_json::to_string(&reports).unwrap(),
    }
}

fn criterion_3() -> Outcome {
    let cfg = GeneratorConfig::default();
    let horizon = 10_000;
    let mut worst = f64::NEG_INFINITY;
    let mut path_gap = 0.0_f64;
    for i in 0..20 {
        let g = generate_instance(&cfg, SEED + 3, i).unwrap();
        let inst = &g.instance;
        let o = Dense::of(inst);
        let gamma = o.gamma;
        let sigma = o.phi.transpose() * o.d() * &o.phi;
        let a = o.phi.transpose() * o.d() * (&o.phi - &o.p * &o.phi * gamma);
        let b = o.phi.transpose() * o.d() * &o.rbar;
        let theta_star = a.clone().lu().solve(&b).unwrap();
        let omega = sigma.clone().symmetric_eigen().eigenvalues.min();
        let theta0 = V::from_fn(inst.d(), |k, _| if k == 0 { 1.0 } else { -0.5 });
        let d0 = (&theta_star - &theta0).norm_squared();
        let alpha = (1.0 - gamma) / 4.0;

        let path = mean_path_td(inst, &theta0, horizon);
        let mut theta = theta0.clone();
        let mut bar = V::zeros(inst.d());
        let sn = |x: &V| x.dot(&(&sigma * x));
        for t in 0..horizon {
            path_gap = path_gap.max((&path[t] - &theta).amax());
            let next = &theta + (&b - &a * &theta) * alpha;
            let now = (&theta_star - &theta).norm_squared();
            let after = (&theta_star - &next).norm_squared();
            worst = worst.max(after - now);
            bar += (&theta - &bar) / (t as f64 + 1.0);
            let tt = (t + 1) as f64;
            worst = worst.max(sn(&(&theta_star - &bar)) - 4.0 * d0 / (tt * (1.0 - gamma).powi(2)));
            worst = worst.max(after - (-(1.0 - gamma).powi(2) * omega / 4.0 * tt).exp() * d0);
            theta = next;
        }
    }
    Outcome {
        passed: worst <= 1e-10 && path_gap <= 1e-10,
        detail: format!("20 instances, T=1e4: max slack violation {worst:.2e}, |library path - oracle path| {path_gap:.1e}"),
        digest: format!("{worst:e} {path_gap:e}"),
    }
}

fn experiment(
    instance: InstanceSource,
    algorithm: Algorithm,
    model: ObservationModel,
    schedule: ScheduleSpec,
    horizon: usize,
    trials: usize,
    seed: u64,
) -> ExperimentConfig {
    ExperimentConfig {
        schema_version: SCHEMA_VERSION,
        instance,
        algorithm,
        observation_model: model,
        schedule,
        radius: algorithm.is_projected().then_some(AutoOr::Auto(AutoTag::Auto)),
        horizon,
        trials,
        master_seed: seed,
        record_stride: 0,
        theta0: None,
        start_distribution: None,
        output: OutputSpec::default(),
        base_dir: Some(configs()),
    }
}

const PARTS: [ScheduleSpec; 3] = [
    ScheduleSpec::RobustSqrt,
    ScheduleSpec::Constant {
        alpha0: AutoOr::Auto(AutoTag::Auto),
    },
    ScheduleSpec::Decay,
];

/// Five generated instances at each γ, every part and horizon, 200 trials.
fn theorem_protocol(algorithm: Algorithm, model: ObservationModel, seed: u64) -> Outcome {
    let mut total = 0;
    let mut failures = Vec::new();
    let mut skipped = 0;
    let mut digest = String::new();
    let mut tightest = 0.0_f64;
    for gamma in [0.5, 0.9] {
        let gen = GeneratorConfig {
            n_max: 10,
            d_max: 3,
            gamma_min: gamma,
            gamma_max: gamma,
            ..GeneratorConfig::default()
        };
        for index in 0..5 {
            for schedule in PARTS {
                for horizon in [1_000, 10_000, 100_000] {
                    if schedule == ScheduleSpec::RobustSqrt
                        && model == ObservationModel::Iid
                        && (horizon as f64) < (8.0 / (1.0 - gamma)).powi(2)
                    {
                        skipped += 1;
                        continue;
                    }
                    let source = InstanceSource::Generator {
                        config: gen.clone(),
                        seed,
                        index,
                    };
                    let cfg = experiment(source, algorithm, model, schedule, horizon, 200, seed ^ index);
                    let r = run_experiment(&cfg).unwrap().report;
                    total += 1;
                    tightest = tightest.max((r.empirical_mean + r.empirical_ci95) / r.bound_value);
                    if !r.satisfied {
                        failures.push(format!("{}@γ={gamma},i={index},T={horizon}", r.bound_name));
                    }
                    digest.push_str(&r.to_json());
                }
            }
        }
    }
    Outcome {
        passed: failures.is_empty(),
        detail: format!(
            "{total} (part, instance, T) cases, {skipped} skipped below T=(8/(1-γ))², max (mean+ci)/bound {tightest:.2e}, failures {failures:?}"
        ),
        digest,
    }
}

fn criterion_4() -> Outcome {
    theorem_protocol(Algorithm::Td0, ObservationModel::Iid, SEED + 4)
}

fn criterion_5() -> Outcome {
    theorem_protocol(Algorithm::ProjectedTd0, ObservationModel::Markov, SEED + 5)
}

fn criterion_6() -> Outcome {
    let mut parts = Vec::new();
    for lambda in [0.25, 0.5, 0.9] {
        parts.push(theorem_protocol(
            Algorithm::TdLambda { lambda },
            ObservationModel::Markov,
            SEED + 6,
        ));
    }
    // λ = 0 against projected TD(0) on one recorded stream.
    let g = generate_instance(&GeneratorConfig::default(), SEED + 6, 99).unwrap();
    let inst = &g.instance;
    let horizon = 20_000;
    let mut sampler = MarkovSampler::new(&inst.mrp, inst.geometry.pi(), trial_rng(SEED, 0)).unwrap();
    let mut replay = Replay::record(&mut sampler, horizon);
    let cfg = RunConfig {
        variant: Variant::Projected { radius: 50.0 },
        schedule: StepSchedule::Constant { alpha0: 0.05 },
        theta0: tdfinite::Vector::zeros(inst.d()),
        horizon,
        recording: Recording::default(),
    };
    let a = run_td_lambda(&cfg, 0.0, &mut replay, inst, None).unwrap().state;
    replay.rewind();
    let b = run_td0(&cfg, &mut replay, inst, None).unwrap().state;
    let bits = |v: &tdfinite::Vector| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    let identical = bits(&a.theta) == bits(&b.theta) && bits(&a.theta_bar) == bits(&b.theta_bar);
    Outcome {
        passed: parts.iter().all(|p| p.passed) && identical,
        detail: format!(
            "λ=0.25: {} | λ=0.5: {} | λ=0.9: {} | λ=0 bit-identical to TD(0): {identical}",
            parts[0].detail, parts[1].detail, parts[2].detail
        ),
        digest: parts.iter().map(|p| p.digest.as_str()).collect::<String>() + &format!("{:?}", bits(&a.theta)),
    }
}

fn criterion_7() -> Outcome {
    let grid = geometric_grid(1_000, 1_000_000, 7);
    let path = |name: &str| InstanceSource::Path(PathBuf::from(name));
    let iid = (Algorithm::Td0, ObservationModel::Iid);
    let markov = (Algorithm::ProjectedTd0, ObservationModel::Markov);
    // (label, instance, algorithm/model, schedule, last decade only, trials, range)
    // The plateau checks use 1000 trials: with 100 the last-decade slope of a
    // flat curve has a standard deviation near 0.07 against a +0.05 edge.
    let cases = [
        ("T2a", "rate_crossover.json", iid, PARTS[0], false, 100, (-0.8, -0.3)),
        ("T3a", "rate_crossover.json", markov, PARTS[0], false, 100, (-0.8, -0.3)),
        ("T2c", "rate_wellcond.json", iid, PARTS[2], false, 100, (-1.3, -0.7)),
        ("T3c", "rate_wellcond.json", markov, PARTS[2], false, 100, (-1.3, -0.7)),
        ("T2b", "rate_wellcond.json", iid, PARTS[1], true, 1000, (-0.2, 0.05)),
        ("T3b", "rate_wellcond.json", markov, PARTS[1], true, 1000, (-0.2, 0.05)),
    ];
    let mut passed = true;
    let mut detail = Vec::new();
    let mut digest = String::new();
    for (k, (label, file, (alg, model), schedule, tail, trials, (lo, hi))) in cases.into_iter().enumerate() {
        let cfg = experiment(path(file), alg, model, schedule, grid[0], trials, SEED + 70 + k as u64);
        let r = rate_sweep(&cfg, &grid).unwrap();
        let slope = if tail { r.last_decade.slope } else { r.fit.slope };
        let ok = (lo..=hi).contains(&slope);
        passed &= ok;
        detail.push(format!(
            "{label}{}={slope:.3}±{:.3}{}",
            if tail { "[last decade]" } else { "" },
            if tail { r.last_decade.slope_ci95 } else { r.fit.slope_ci95 },
            if ok { "" } else { "(!)" }
        ));
        digest.push_str(&r.to_json());
    }
    // Not gating: the robust schedule on the well-conditioned instance, and
    // the plateau fits at 100 trials.
    let cfg = experiment(path("rate_wellcond.json"), iid.0, iid.1, PARTS[0], grid[0], 100, SEED + 79);
    let info = rate_sweep(&cfg, &grid).unwrap().fit.slope;
    detail.push(format!("(info: T2a on well-conditioned instance {info:.3};"));
    for (k, (label, (alg, model))) in [("T2b", iid), ("T3b", markov)].into_iter().enumerate() {
        let cfg = experiment(path("rate_wellcond.json"), alg, model, PARTS[1], grid[0], 100, SEED + 74 + k as u64);
        let r = rate_sweep(&cfg, &grid).unwrap();
        detail.push(format!("{label} last decade at 100 trials {:.3}", r.last_decade.slope));
    }
    detail.push(")".into());
    Outcome {
        passed,
        detail: detail.join(" "),
        digest,
    }
}

fn criterion_8() -> Outcome {
    let cfg = ExperimentConfig::read(&configs().join("optstop20_t3b.json")).unwrap();
    let out = run_experiment(&cfg).unwrap();
    let r = &out.report;
    let loaded = cfg.load_instance().unwrap();
    let problem = loaded.stopping().unwrap();
    let inst = loaded.instance();
    assert_eq!((inst.n(), inst.d()), (20, 4));

    // Dense dynamic programming: V* from Q*, V_μ̃ by solving the linear system
    // of the policy that stops where U ≥ Φθ*.
    let p = problem.transition().clone();
    let (u, stop) = (problem.continuation().clone(), problem.termination().clone());
    let gamma = problem.gamma();
    let q_star = q_star_oracle(&p, gamma, &u, &stop);
    let v_star = q_star.zip_map(&stop, f64::max);
    let policy_value = |theta: &V| {
        let q = inst.features.matrix() * theta;
        let stops: Vec<bool> = (0..20).map(|s| stop[s] >= q[s]).collect();
        // C(s) = u(s) + γ Σ P(s,s') [stop(s') ? U(s') : C(s')]
        let mut a = M::identity(20, 20);
        let mut rhs = u.clone();
        for s in 0..20 {
            for t in 0..20 {
                if stops[t] {
                    rhs[s] += gamma * p[(s, t)] * stop[t];
                } else {
                    a[(s, t)] -= gamma * p[(s, t)];
                }
            }
        }
        let c = a.lu().solve(&rhs).unwrap();
        V::from_fn(20, |s, _| if stops[s] { stop[s] } else { c[s] })
    };
    let o = Dense::of(inst);
    let gap = |theta: &V| o.pi.dot(&(&v_star - policy_value(theta)));
    let residual = o.d_norm(&(o.project(&q_star) - &q_star));
    let bound = 2.0 / ((1.0 - gamma) * (1.0 - gamma * gamma).sqrt()) * residual;
    let theta_star = V::from_vec(r.theta_star.clone());
    let gap_star = gap(&theta_star);
    let learned: Vec<f64> = out.runs.iter().map(|run| gap(&run.state.theta)).collect();
    let learned_mean = learned.iter().sum::<f64>() / learned.len() as f64;
    Outcome {
        passed: r.satisfied && gap_star <= bound + 1e-12 && learned_mean <= bound,
        detail: format!(
            "{} E|θ_T-θ*|²={:.3e}+{:.1e} <= {:.3e}: {}; gap(θ*)={gap_star:.3e}, mean gap(θ_T)={learned_mean:.3e} <= bound {bound:.3e}",
            r.bound_name, r.empirical_mean, r.empirical_ci95, r.bound_value, r.satisfied
        ),
        digest: r.to_json() + &format!("{learned:?}"),
    }
}

// --------------------------------------------------------- determinism ----

fn cli_identical() -> (bool, String) {
    let bin = env!("CARGO_BIN_EXE_tdfinite");
    let dir = tempfile::tempdir().unwrap();
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, args) in [
        ("run", vec!["run", "--config", "t3b_markov.json", "--format", "json"]),
        ("sweep", vec!["sweep", "--config", "t4c_lambda.json", "--t-max", "10000", "--format", "json"]),
        ("verify", vec!["verify", "--instances", "20", "--draws", "20", "--format", "json"]),
    ] {
        let mut outputs = Vec::new();
        for jobs in ["1", "8"] {
            let out_dir = dir.path().join(format!("{name}-{jobs}"));
            let out = Command::new(bin)
                .args(&args)
                .args(["--jobs", jobs, "--out-dir"])
                .arg(&out_dir)
                .current_dir(configs())
                .output()
                .unwrap();
            let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&out_dir)
                .unwrap()
                .map(|e| {
                    let e = e.unwrap();
                    (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
                })
                .collect();
            files.sort();
            outputs.push((out.status.code(), out.stdout, files));
        }
        let same = outputs[0] == outputs[1] && outputs[0].0 == Some(0);
        ok &= same;
        notes.push(format!("{name}:{}", if same { "identical" } else { "DIFFERENT" }));
    }
    (ok, notes.join(" "))
}

// ------------------------------------------------------------------ main --

type Criterion = (&'static str, &'static str, f64, fn() -> Outcome);

#[test]
fn acceptance() {
    let criteria: [Criterion; 8] = [
        ("1", "fixed-point exactness", 10.0, criterion_1),
        ("2", "lemma suite", 60.0, criterion_2),
        ("3", "mean-path bounds", 5.0, criterion_3),
        ("4", "i.i.d. bounds", 300.0, criterion_4),
        ("5", "Markov bounds", 600.0, criterion_5),
        ("6", "TD(λ) bounds", 600.0, criterion_6),
        ("7", "rate fits", 900.0, criterion_7),
        ("8", "optimal stopping", 120.0, criterion_8),
    ];
    // ACCEPTANCE_ONLY=4,7 restricts the run (and the determinism rerun).
    let only: Option<Vec<String>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|v| v.split(',').map(|s| s.trim().to_string()).collect());
    let criteria: Vec<Criterion> = criteria
        .into_iter()
        .filter(|c| only.as_ref().is_none_or(|o| o.iter().any(|id| id == c.0)))
        .collect();
    let mut lines = Vec::new();
    let mut all = true;
    let mut digests = Vec::new();
    for &(id, name, budget, f) in &criteria {
        let start = Instant::now();
        let out = with_jobs(Some(8), f).unwrap();
        let secs = start.elapsed().as_secs_f64();
        let ok = out.passed && secs <= budget;
        all &= ok;
        let line = format!(
            "criterion {id} [{name}]: {} ({secs:.1}s, budget {budget:.0}s) {}",
            if ok { "PASS" } else { "FAIL" },
            out.detail
        );
        println!("{line}");
        lines.push(line);
        digests.push(out.digest);
    }

    let start = Instant::now();
    let mut mismatched = Vec::new();
    for ((id, _, _, f), digest) in criteria.iter().zip(&digests) {
        let again = with_jobs(Some(1), f).unwrap();
        if &again.digest != digest {
            mismatched.push(*id);
        }
    }
    let (cli_ok, cli_notes) = cli_identical();
    let ok = mismatched.is_empty() && cli_ok;
    all &= ok;
    let line = format!(
        "criterion 9 [determinism]: {} ({:.1}s) criteria rerun on 1 vs 8 threads, mismatches {mismatched:?}; binary --jobs 1 vs 8: {cli_notes}",
        if ok { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    println!("{line}");
    lines.push(line);

    assert!(all, "acceptance failures:\n{}", lines.join("\n"));
}
