use tceer_core::radio::RadioModel;
use tceer_core::topology::Field;
use tceer_core::{run, run_baseline, RouteOutcome, RouteTrace, RouterKind, SimConfig, SimOutput, Simulation, Topology};

fn topology(points: &[(f64, f64)]) -> Topology {
    Topology::from_positions(
        points.iter().map(|&(x, y)| tceer_core::Position::new(x, y)).collect(),
        tceer_core::Position::new(100.0, 100.0),
        50.0,
        Field::new(200.0, 200.0),
    )
    .unwrap()
}

fn quiet(n: usize) -> SimConfig {
    SimConfig {
        n,
        e_idle: 0.0,
        ..SimConfig::default()
    }
}

fn tx(d: f64) -> f64 {
    let r = RadioModel::default();
    r.e_elec * r.packet_bits + r.eps_amp * r.packet_bits * d * d
}

fn rx() -> f64 {
    let r = RadioModel::default();
    r.e_elec * r.packet_bits
}

#[test]
fn lone_node_beside_bs_dies_on_schedule() {
    // 10 m from the base station: every round costs exactly one transmission.
    let d = 10.0;
    let cfg = SimConfig {
        sources_per_round: 1,
        rounds: 10_000,
        ..quiet(1)
    };
    let mut sim = Simulation::from_topology(cfg, topology(&[(100.0, 90.0)]), RouterKind::Tceer).unwrap();
    let expected_death = (0.5 / tx(d)).floor() as u64;
    let mut delivered = 0;
    while sim.alive_count() > 0 {
        let (stats, _) = sim.step_round();
        delivered += stats.delivered as u64;
    }
    assert_eq!(sim.death_round(0), Some(expected_death));
    assert_eq!(delivered, expected_death);
    assert!((sim.energy_consumed() - 0.5).abs() < 1e-12);
}

/// 0 -> 1 -> 2 -> BS on a vertical line; 0 can only reach 1.
fn chain_with_dropper(p_drop: f64) -> (SimConfig, Topology) {
    let mut cfg = quiet(3);
    cfg.malicious.ids = vec![1];
    cfg.malicious.p_drop = p_drop;
    (cfg, topology(&[(100.0, 0.0), (100.0, 40.0), (100.0, 80.0)]))
}

#[test]
fn dropper_on_the_only_path_is_blocked_then_voids() {
    let (cfg, topo) = chain_with_dropper(1.0);
    let mut sim = Simulation::from_topology(cfg, topo, RouterKind::Tceer).unwrap();
    let mut outcomes = Vec::new();
    for _ in 0..12 {
        let (_, traces) = sim.run_round_with(&[0]);
        outcomes.push(traces[0].outcome);
    }
    // The first update runs at the end of round 0.
    assert_eq!(outcomes[0], RouteOutcome::DroppedMalicious);
    assert!(outcomes[1..].iter().all(|&o| o == RouteOutcome::DroppedVoid));
    assert_eq!(sim.ledger().blocked_round(1), Some(0));
    assert_eq!(sim.ledger().blocked().iter().copied().collect::<Vec<_>>(), vec![1]);

    // Observer 0 has no other neighbor to consult: DT = 0, IT = 0.5.
    let pair = sim.ledger().pair(0, 1).unwrap();
    assert_eq!(pair.direct, 0.0);
    assert_eq!(pair.indirect, 0.5);
    assert!((pair.overall - 0.15).abs() < 1e-12);
}

#[test]
fn baseline_keeps_feeding_the_dropper() {
    let (cfg, topo) = chain_with_dropper(1.0);
    let mut sim = Simulation::from_topology(cfg, topo, RouterKind::Greedy).unwrap();
    for _ in 0..12 {
        let (_, traces) = sim.run_round_with(&[0]);
        assert_eq!(traces[0].outcome, RouteOutcome::DroppedMalicious);
        assert_eq!(traces[0].hops, vec![0, 1]);
    }
    assert!(sim.ledger().blocked().is_empty());
}

#[test]
fn blocking_waits_for_the_next_update() {
    let (cfg, topo) = chain_with_dropper(1.0);
    let mut sim = Simulation::from_topology(cfg, topo, RouterKind::Tceer).unwrap();
    // Round 0 has no traffic, so the drop in round 1 is judged at round 5.
    sim.run_round_with(&[]);
    for _ in 1..=5 {
        let (_, traces) = sim.run_round_with(&[0]);
        assert_eq!(traces[0].outcome, RouteOutcome::DroppedMalicious);
    }
    assert_eq!(sim.ledger().blocked_round(1), Some(5));
    let (_, traces) = sim.run_round_with(&[0]);
    assert_eq!(traces[0].outcome, RouteOutcome::DroppedVoid);
}

#[test]
fn modifier_is_caught_through_address_integrity() {
    let mut cfg = quiet(3);
    cfg.malicious.ids = vec![1];
    cfg.malicious.kind = tceer_core::AttackKind::Modifier;
    cfg.malicious.p_modify = 1.0;
    let topo = topology(&[(100.0, 0.0), (100.0, 40.0), (100.0, 80.0)]);
    let mut sim = Simulation::from_topology(cfg, topo, RouterKind::Tceer).unwrap();
    let (_, traces) = sim.run_round_with(&[0]);
    assert_eq!(traces[0].outcome, RouteOutcome::DroppedMalicious);
    assert_eq!(traces[0].hops, vec![0, 1, 2]);
    assert!(sim.ledger().is_blocked(1));
    assert!(!sim.ledger().is_blocked(2));
}

#[test]
fn isolated_node_always_voids_without_spending() {
    // Node 1 is 65 m from node 0 and 95 m from the base station.
    let cfg = SimConfig {
        sources_per_round: 1,
        rounds: 50,
        ..quiet(2)
    };
    let mut sim =
        Simulation::from_topology(cfg, topology(&[(100.0, 130.0), (100.0, 195.0)]), RouterKind::Tceer).unwrap();
    for _ in 0..50 {
        let (stats, traces) = sim.run_round_with(&[1]);
        assert_eq!(stats.dropped_void, 1);
        assert_eq!(traces[0].hops, vec![1]);
    }
    assert_eq!(sim.nodes()[1].residual_energy, 0.5);
}

fn energy_from_traces(out: &SimOutput) -> f64 {
    let topo = &out.topology;
    out.traces
        .iter()
        .map(|t: &RouteTrace| {
            let relay: f64 = t
                .hops
                .windows(2)
                .map(|w| tx(topo.distance_between(w[0], w[1])) + rx())
                .sum();
            let last = *t.hops.last().unwrap();
            let to_bs = if t.outcome == RouteOutcome::Delivered {
                tx(topo.distance_to_bs(last))
            } else {
                0.0
            };
            relay + to_bs
        })
        .sum()
}

#[test]
fn energy_matches_an_independent_recount() {
    let mut cfg = SimConfig {
        rounds: 200,
        ..SimConfig::default()
    };
    cfg.malicious.count = 5;
    let out = run(&cfg).unwrap();
    assert!(out.death_round.iter().all(Option::is_none));
    let idle = cfg.e_idle * (cfg.n as f64) * (cfg.rounds as f64);
    let expected = energy_from_traces(&out) + idle;
    assert!(
        (out.energy_consumed - expected).abs() < 1e-9,
        "{} vs {expected}",
        out.energy_consumed
    );
    let last = out.rounds.last().unwrap();
    assert_eq!(last.energy_j, out.energy_consumed);
}

#[test]
fn zero_sources_per_round_changes_nothing_but_the_round() {
    let cfg = SimConfig {
        sources_per_round: 0,
        rounds: 20,
        ..quiet(50)
    };
    let out = run(&cfg).unwrap();
    assert_eq!(out.rounds.len(), 20);
    assert!(out.traces.is_empty());
    assert_eq!(out.energy_consumed, 0.0);
    assert!(out.final_energy.iter().all(|&e| e == 0.5));
}

#[test]
fn honest_network_never_drops_maliciously() {
    let cfg = SimConfig {
        rounds: 3000,
        ..SimConfig::default()
    };
    for out in [run(&cfg).unwrap(), run_baseline(&cfg).unwrap()] {
        assert!(out.rounds.iter().all(|r| r.dropped_malicious == 0));
    }
}

#[test]
fn baseline_never_blocks() {
    let mut cfg = SimConfig {
        rounds: 500,
        ..SimConfig::default()
    };
    cfg.malicious.count = 10;
    let out = run_baseline(&cfg).unwrap();
    assert!(out.blocked.is_empty());
    assert!(out.trust_log.is_empty());
}

#[test]
fn seeds_change_outputs() {
    let a = SimConfig {
        rounds: 300,
        ..SimConfig::default()
    };
    let b = SimConfig { seed: 9, ..a.clone() };
    assert_ne!(run(&a).unwrap().rounds_csv(), run(&b).unwrap().rounds_csv());
}

#[test]
fn topology_file_feeds_the_run() {
    let dir = std::env::temp_dir().join(format!("tceer-topo-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let topo = topology(&[(100.0, 0.0), (100.0, 40.0), (100.0, 80.0)]);
    let path = dir.join("chain.topo");
    std::fs::write(&path, topo.to_text()).unwrap();
    let cfg = SimConfig {
        topology_file: Some(path),
        rounds: 10,
        sources_per_round: 3,
        ..quiet(3)
    };
    let out = run(&cfg).unwrap();
    assert_eq!(out.topology.positions(), topo.positions());
    assert_eq!(out.traces.len(), 30);

    let wrong = SimConfig { n: 4, ..cfg };
    assert!(run(&wrong).unwrap_err().to_string().contains('n'));
    std::fs::remove_dir_all(dir).unwrap();
}
