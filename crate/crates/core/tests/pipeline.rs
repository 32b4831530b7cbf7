use lsc_core::circuit::random_circuit;
use lsc_core::embed::{compile_baseline, compile_full, CompileConfig, OptLevel};
use lsc_core::pipe::{
    diagram_from_json, diagram_to_json, interpret_pipe_as_zx, space_time_volume,
    validate_pipe_diagram, CubeKind,
};
use lsc_core::schedule::partition_program;
use lsc_core::verify::check_semantic_equivalence;
use lsc_core::{generate_benchmark, parse_qasm, Family};
use proptest::prelude::*;

fn grid(g: (usize, usize), opt: OptLevel) -> CompileConfig {
    CompileConfig {
        grid: g,
        ..CompileConfig::default()
    }
    .with_opt(opt)
}

#[test]
fn qasm_to_json_round_trip() {
    let c = parse_qasm(
        "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[3];\n\
         h q[0]; cx q[0],q[1]; t q[1]; cx q[1],q[2]; // tail\nrz(pi/8) q[2];\n",
    )
    .unwrap();
    let r = compile_full(&c, &grid((2, 2), OptLevel::Full)).unwrap();
    let text = diagram_to_json(&r.pipe);
    let back = diagram_from_json(&text).unwrap();
    assert_eq!(back, r.pipe);
    assert_eq!(r.volume, space_time_volume(&back));
    assert!(check_semantic_equivalence(&c, &back, 1e-9).unwrap());
    assert!(interpret_pipe_as_zx(&back).is_ok());
}

#[test]
fn every_level_compiles_ghz() {
    let c = generate_benchmark(Family::Ghz, 6, 0).unwrap();
    for opt in [
        OptLevel::None,
        OptLevel::Place,
        OptLevel::Part,
        OptLevel::Full,
    ] {
        let r = compile_full(&c, &grid((3, 2), opt)).unwrap();
        assert!(validate_pipe_diagram(&r.pipe).is_empty(), "{opt}");
        assert!(
            check_semantic_equivalence(&c, &r.pipe, 1e-9).unwrap(),
            "{opt}"
        );
        let base = compile_baseline(&c, &grid((3, 2), opt)).unwrap();
        assert!(r.volume <= space_time_volume(&base), "{opt}");
    }
}

#[test]
fn layer_stats_follow_the_schedule() {
    let c = generate_benchmark(Family::Bv, 9, 0).unwrap();
    let cfg = grid((3, 3), OptLevel::Full);
    let sched = partition_program(&c, &cfg.partition).unwrap();
    let r = compile_full(&c, &cfg).unwrap();
    assert!(!r.used_baseline);
    assert_eq!(r.layers.len(), sched.num_layers());
    for (i, l) in r.layers.iter().enumerate() {
        assert_eq!(l.layer, i + 1);
        assert_eq!(l.spiders, sched.layer(l.layer).spiders.len());
        assert_eq!(l.placeholder_ports, sched.frontier(l.layer).len());
    }
    assert!(r.layers.windows(2).all(|w| w[0].volume <= w[1].volume));
}

#[test]
fn phases_become_ports() {
    let c = parse_qasm("qreg q[2]; t q[0]; s q[1]; rz(0.4) q[1]; cx q[0],q[1];").unwrap();
    let r = compile_full(&c, &grid((2, 1), OptLevel::Full)).unwrap();
    let ports = r.pipe.count_kind(CubeKind::InjectionPort) + r.pipe.count_kind(CubeKind::YCap);
    assert!(ports >= 2);
    assert!(check_semantic_equivalence(&c, &r.pipe, 1e-9).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn compiled_diagrams_are_valid_and_faithful(n in 1usize..4, g in 0usize..9, seed in 0u64..1_000_000) {
        let c = random_circuit(n, g, seed);
        let cfg = CompileConfig { iterations: 200, ..grid((2, 2), OptLevel::Full) };
        let r = compile_full(&c, &cfg).unwrap();
        prop_assert!(validate_pipe_diagram(&r.pipe).is_empty());
        prop_assert_eq!(r.volume, space_time_volume(&r.pipe));
        prop_assert!(check_semantic_equivalence(&c, &r.pipe, 1e-9).unwrap());
        let base = compile_baseline(&c, &cfg).unwrap();
        prop_assert!(validate_pipe_diagram(&base).is_empty());
        prop_assert!(check_semantic_equivalence(&c, &base, 1e-9).unwrap());
    }
}
