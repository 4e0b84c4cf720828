mod common;

use lmea::backend::{ChatBackend, ScriptedTransport};
use lmea::prompt::render_response;
use lmea::seed::derive_seed;
use lmea::{
    evolve, gen_rue, init_population, solve_exact, BuiltinBackend, BuiltinConfig, EvolveConfig,
    RunLog, RunStatus,
};

fn builtin_run(n: usize, seed: u64, config: EvolveConfig) -> (RunLog, f64) {
    let inst = gen_rue(n, seed).unwrap();
    let opt = solve_exact(&inst).unwrap().optimal_length;
    let mut backend = BuiltinBackend::new(BuiltinConfig {
        seed,
        ..Default::default()
    });
    (
        evolve(&inst, &config, &mut backend, Some(opt)).unwrap(),
        opt,
    )
}

#[test]
fn single_generation_gives_single_record() {
    let config = EvolveConfig {
        generations: 1,
        ..Default::default()
    };
    let (log, _) = builtin_run(8, 1, config);
    assert_eq!(log.records.len(), 1);
    assert_eq!(log.records[0].gen, 1);
    assert_eq!(log.evaluations, 32);
    common::assert_elitist(&log, 16);
}

#[test]
fn fixed_temperature_without_self_adaptation() {
    let config = EvolveConfig {
        generations: 80,
        self_adapt: false,
        ..Default::default()
    };
    let (log, _) = builtin_run(10, 2, config);
    assert!(log.records.iter().all(|r| r.temperature == 1.0));
    common::assert_elitist(&log, 16);
}

#[test]
fn rue_ten_mostly_reaches_optimum() {
    let mut hits = 0;
    for seed in 0..10 {
        let config = EvolveConfig {
            seed,
            ..Default::default()
        };
        let (log, opt) = builtin_run(10, 300 + seed, config);
        common::assert_elitist(&log, 16);
        assert!(log.evaluations <= 16 + 250 * 16);
        if log.generations_to_optimum.is_some() {
            hits += 1;
            assert!(lmea::tsp::approx_eq(log.best.length, opt));
        }
    }
    assert!(hits >= 8, "{hits}/10");
}

/// Script that answers every generation with copies of the initial best
/// tour, so the best length can never strictly improve.
fn stagnating_backend(
    inst: &lmea::Instance,
    config: &EvolveConfig,
) -> ChatBackend<ScriptedTransport> {
    let init = init_population(
        inst,
        config.population_size,
        derive_seed(config.seed, "init"),
    );
    let best = init.best().unwrap().tour.clone();
    let answer = render_response(&vec![best; config.population_size]);
    ChatBackend::new(
        "scripted",
        ScriptedTransport::new(vec![answer; config.generations]),
        0,
    )
}

#[test]
fn stagnating_script_bumps_temperature_on_schedule() {
    let inst = gen_rue(8, 0).unwrap();
    let config = EvolveConfig {
        generations: 45,
        ..Default::default()
    };
    let log = evolve(
        &inst,
        &config,
        &mut stagnating_backend(&inst, &config),
        None,
    )
    .unwrap();
    common::assert_elitist(&log, 16);
    assert!(log.records.iter().all(|r| !r.improved));
    let temps: Vec<f64> = log.records.iter().map(|r| r.temperature).collect();
    assert!(temps[..20].iter().all(|&t| t == 1.0));
    assert!(temps[20..40].iter().all(|&t| t == 1.1));
    assert!(temps[40..].iter().all(|&t| t == 1.2));

    let fixed = EvolveConfig {
        self_adapt: false,
        ..config
    };
    let log = evolve(&inst, &fixed, &mut stagnating_backend(&inst, &fixed), None).unwrap();
    assert!(log.records.iter().all(|r| r.temperature == 1.0));
}

#[test]
fn script_underrun_aborts_run() {
    let inst = gen_rue(6, 0).unwrap();
    let answer = render_response(&[lmea::Tour::identity(6)]);
    let mut backend = ChatBackend::new("scripted", ScriptedTransport::new(vec![answer; 3]), 0);
    let config = EvolveConfig {
        generations: 10,
        ..Default::default()
    };
    let log = evolve(&inst, &config, &mut backend, None).unwrap();
    assert_eq!(log.records.len(), 3);
    assert!(matches!(
        log.status,
        RunStatus::Aborted { generation: 4, .. }
    ));
    common::assert_elitist(&log, 16);
}

#[test]
fn run_log_round_trips_and_is_deterministic() {
    let config = EvolveConfig {
        generations: 40,
        seed: 9,
        ..Default::default()
    };
    let (a, _) = builtin_run(9, 4, config.clone());
    let (b, _) = builtin_run(9, 4, config);
    assert_eq!(a.to_jsonl(), b.to_jsonl());
    let back = RunLog::from_jsonl(&a.to_jsonl()).unwrap();
    assert_eq!(back.records, a.records);
    assert_eq!(back.best, a.best);
    assert_eq!(back.to_jsonl(), a.to_jsonl());
}
