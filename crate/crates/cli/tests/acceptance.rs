//! Acceptance gate: prints one PASS/FAIL line per criterion and exits nonzero
//! if any criterion failed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use sha2::{Digest, Sha256};

use emdarp_core::charging::charge_curve;
use emdarp_core::generator::{generate, BatteryPreset, GenConfig};
use emdarp_core::graph::{expand_graph, ExpandedGraph, NodeKind};
use emdarp_core::instance::{Instance, SEGMENT1_END, SEGMENT2_END};
use emdarp_core::io::{encode_plan, run_external, ExternalConfig, SOLVER_CMD_ENV};
use emdarp_core::milp::{build_model_on, compute_big_m, Tag};
use emdarp_core::solver::{branch_and_bound, exhaustive_oracle, BnbConfig, BnbResult, OracleCaps, SolveStatus};
use emdarp_core::validator::validate;

type Verdict = Result<String, String>;

struct Case {
    label: String,
    instance: Instance,
    graph: ExpandedGraph,
    result: BnbResult,
}

fn corpus_config(seed: u64) -> GenConfig {
    let n_stations = ((seed / 2) % 2) as usize;
    GenConfig {
        seed,
        n_requests: 1 + (seed % 3) as usize,
        n_agents: 1 + ((seed / 3) % 2) as usize,
        n_stations,
        duplicate_visits: n_stations * ((seed / 5) % 2) as usize,
        preset: if seed % 4 == 3 { BatteryPreset::HighDischarge } else { BatteryPreset::Typical },
        selective: seed % 7 != 6,
        open_vrp: seed % 5 == 4,
        ..GenConfig::default()
    }
}

fn label(cfg: &GenConfig) -> String {
    format!(
        "seed {} R{} K{} m{} n{} {:?}{}{}",
        cfg.seed,
        cfg.n_requests,
        cfg.n_agents,
        cfg.n_stations,
        cfg.duplicate_visits,
        cfg.preset,
        if cfg.selective { "" } else { " non-selective" },
        if cfg.open_vrp { " open" } else { "" }
    )
}

fn corpus() -> Vec<Case> {
    (0..30)
        .map(|seed| {
            let cfg = corpus_config(seed);
            let instance = generate(&cfg).unwrap();
            let graph = expand_graph(&instance).unwrap();
            let result = branch_and_bound(&instance, &graph, &BnbConfig::default());
            Case { label: label(&cfg), instance, graph, result }
        })
        .collect()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn criterion_1(cases: &[Case]) -> Verdict {
    let t0 = Instant::now();
    let mut feasible = 0;
    for c in cases {
        let oracle = exhaustive_oracle(&c.instance, &c.graph, &OracleCaps::default())
            .map_err(|e| format!("{}: {e}", c.label))?;
        match (&oracle, c.result.status) {
            (None, SolveStatus::Infeasible) => {}
            (Some(o), SolveStatus::Optimal) => {
                if !close(o.objective, c.result.objective, 1e-6) {
                    return Err(format!(
                        "{}: oracle {} vs branch-and-bound {}",
                        c.label, o.objective, c.result.objective
                    ));
                }
                feasible += 1;
            }
            (o, s) => return Err(format!("{}: oracle feasible={} but solver status {s:?}", c.label, o.is_some())),
        }
    }
    let solve_secs: f64 = cases.iter().map(|c| c.result.seconds).sum();
    let total = solve_secs + t0.elapsed().as_secs_f64();
    if total >= 60.0 {
        return Err(format!("agreement holds but took {total:.1} s"));
    }
    Ok(format!("{} instances ({} feasible) agree within 1e-6 in {total:.2} s", cases.len(), feasible))
}

fn criterion_2(cases: &[Case]) -> Verdict {
    let mut checked = 0;
    for c in cases {
        let Some(plan) = &c.result.plan else { continue };
        let report = validate(&c.instance, &c.graph, plan, 1e-6).map_err(|e| format!("{}: {e}", c.label))?;
        if let Some(v) = report.violations.first() {
            return Err(format!(
                "{}: {} violations, first {} {:?} by {:.3e}",
                c.label,
                report.violations.len(),
                v.check,
                v.index,
                v.magnitude
            ));
        }
        if !close(report.recomputed_objective, c.result.objective, 1e-6) {
            return Err(format!(
                "{}: recomputed {} vs reported {}",
                c.label, report.recomputed_objective, c.result.objective
            ));
        }
        checked += 1;
    }
    Ok(format!("{checked} plans clean at tol 1e-6 with matching objectives"))
}

/// The configured external solver: `$EMDARP_SOLVER_CMD`, else the bundled
/// HiGHS script when `highspy` imports.
fn external_solver() -> Option<String> {
    if let Ok(cmd) = std::env::var(SOLVER_CMD_ENV) {
        return Some(cmd);
    }
    let script = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scripts/highs_solve.py");
    let ok = Command::new("python3").args(["-c", "import highspy"]).output().is_ok_and(|o| o.status.success());
    (ok && script.exists()).then(|| format!("python3 {} {{model}} {{solution}}", script.display()))
}

fn external_config() -> ExternalConfig {
    ExternalConfig {
        timeout: Some(Duration::from_secs(120)),
        exit_codes: BTreeMap::from([(2, SolveStatus::Infeasible), (3, SolveStatus::Unknown)]),
    }
}

fn external_objective(
    instance: &Instance,
    graph: &ExpandedGraph,
    template: &str,
) -> Result<(SolveStatus, Option<f64>), String> {
    let model = build_model_on(instance, graph).map_err(|e| e.to_string())?;
    let sol = run_external(&model, template, &external_config()).map_err(|e| e.to_string())?;
    Ok((sol.status, sol.objective_reported))
}

fn criterion_3(cases: &[Case], solver: Option<&str>) -> Verdict {
    let Some(template) = solver else {
        return Ok("no external solver configured; conditional criterion not exercised".into());
    };
    let mut worst: f64 = 0.0;
    for c in cases {
        let (status, objective) =
            external_objective(&c.instance, &c.graph, template).map_err(|e| format!("{}: {e}", c.label))?;
        match (status, c.result.status) {
            (SolveStatus::Infeasible, SolveStatus::Infeasible) => {}
            (SolveStatus::Optimal, SolveStatus::Optimal) => {
                let obj = objective.ok_or_else(|| format!("{}: no objective reported", c.label))?;
                let d = (obj - c.result.objective).abs();
                worst = worst.max(d);
                if d > 1e-5 {
                    return Err(format!("{}: external {obj} vs builtin {}", c.label, c.result.objective));
                }
            }
            (e, b) => return Err(format!("{}: external {e:?} vs builtin {b:?}", c.label)),
        }
    }
    Ok(format!("{} instances match the external solver (max difference {worst:.2e})", cases.len()))
}

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn station_fixture() -> Instance {
    Instance::from_json(
        r#"{
          "meta": { "time_unit": "seconds" },
          "requests": [{ "id": 0, "pickup": [0.0, 10.0], "delivery": [0.0, 20.0], "passengers": 1, "equipment": 0,
                         "service_time": 2.0, "tw_kind": "delivery", "tw_lo": 0.0, "tw_hi": 100.0, "priority": 1.0 }],
          "agents": [{ "id": 0, "start": [0.0, 0.0], "initial_delay": 0.0, "cap_passengers": 4, "cap_equipment": 2,
                       "conversion": 2.0, "max_duration": 1000.0, "station_service_time": 3.0, "soc_min": 0.25,
                       "soc_init": 1.0, "soc_target": 0.85 }],
          "stations": [{ "id": 0, "pos": [0.0, 40.0] }],
          "depots": [{ "id": 0, "pos": [0.0, 30.0] }],
          "costs": { "mode": "euclidean" },
          "battery": { "alpha0": 0.005, "alpha1": 0.002, "alpha2": 0.003, "beta1": 0.05, "beta2": 0.02, "beta3": 0.01 },
          "config": { "duplicate_visits": 0, "selective": true, "open_vrp": false }
        }"#,
    )
    .unwrap()
}

fn criterion_4() -> Verdict {
    let inst = station_fixture();
    let g = expand_graph(&inst).unwrap();
    let model = build_model_on(&inst, &g).unwrap();
    let b = &inst.battery;
    let betas = b.betas();
    if !(betas[0] > betas[1] && betas[1] > betas[2]) {
        return Err(format!("rates {betas:?} are not strictly decreasing"));
    }
    let f = g.station(0, 0).0;
    let d = g.delivery(0).0;
    let var = |name: String| model.lookup(&name).unwrap_or_else(|| panic!("no variable {name}"));
    let x = var(format!("x_0_{d}_{f}"));
    let phi = var(format!("phi_{f}_0"));
    let xi = [1, 2, 3].map(|l| var(format!("xi_{f}_{l}")));
    let z = [1, 2].map(|l| var(format!("z_{f}_{l}")));
    let rows: Vec<_> = model.constraints().iter().filter(|c| c.tag == Tag::Eq(41) && c.index[0] == f).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for n in 0..1000 {
        let arrival = SEGMENT1_END * unit(&mut rng);
        let time = 1.2
            * ((SEGMENT1_END - arrival) / betas[0]
                + (SEGMENT2_END - SEGMENT1_END) / betas[1]
                + (1.0 - SEGMENT2_END) / betas[2])
            * unit(&mut rng);
        let out = charge_curve(arrival, time, b).map_err(|e| e.to_string())?;
        let mut values = vec![0.0; model.variables().len()];
        values[x.0] = 1.0;
        values[phi.0] = arrival;
        for l in 0..3 {
            values[xi[l].0] = out.xi[l];
        }
        let consistent: Vec<[f64; 2]> = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]
            .into_iter()
            .filter(|zz| {
                values[z[0].0] = zz[0];
                values[z[1].0] = zz[1];
                rows.iter().all(|r| r.violation(&values) <= 1e-9)
            })
            .collect();
        if consistent.is_empty() {
            return Err(format!(
                "pair {n} (arrival {arrival}, time {time}): no binary completion flags satisfy the charging rows"
            ));
        }
        let milp_final = arrival + (0..3).map(|l| betas[l] * out.xi[l]).sum::<f64>();
        worst = worst.max((milp_final - out.final_soc).abs());
        if !close(milp_final, out.final_soc, 1e-9) || milp_final > 1.0 + 1e-12 {
            return Err(format!("pair {n}: rows give {milp_final}, curve gives {}", out.final_soc));
        }
    }
    for arrival in [0.0, 0.3, SEGMENT1_END] {
        let out = charge_curve(arrival, 1e6, b).map_err(|e| e.to_string())?;
        if out.final_soc != 1.0 {
            return Err(format!("saturation from {arrival} ends at {}", out.final_soc));
        }
    }
    // measured slope inside each segment
    let slope = |a: f64, t: f64| {
        let h = 0.5;
        (charge_curve(a, t + h, b).unwrap().final_soc - charge_curve(a, t, b).unwrap().final_soc) / h
    };
    let into_third = (SEGMENT2_END - SEGMENT1_END) / betas[1] + 1.0;
    let s = [slope(0.5, 1.0), slope(SEGMENT1_END, 1.0), slope(SEGMENT1_END, into_third)];
    if !(s[0] > s[1] && s[1] > s[2]) {
        return Err(format!("measured slopes {s:?} are not decreasing"));
    }
    Ok(format!("1000 pairs agree (max difference {worst:.1e}); slopes {s:?}; saturation exact"))
}

fn criterion_5() -> Verdict {
    let cfg = GenConfig::scenario_one(1);
    let inst = generate(&cfg).unwrap();
    let g = expand_graph(&inst).unwrap();
    let res =
        branch_and_bound(&inst, &g, &BnbConfig { time_limit: Some(Duration::from_secs(300)), ..BnbConfig::default() });
    let plan = res.plan.as_ref().ok_or_else(|| format!("no plan within the cap (status {:?})", res.status))?;
    let report = validate(&inst, &g, plan, 1e-6).map_err(|e| e.to_string())?;
    if !report.is_clean() {
        return Err(format!("plan has {} violations", report.violations.len()));
    }
    // (agent, node, visit) per station duplicate
    let mut visits: Vec<(usize, usize, usize, f64)> = Vec::new();
    for a in &plan.agents {
        for v in &a.visits {
            if let NodeKind::Station { station, visit } = g.kind(v.node) {
                let t = v.time.ok_or("station visit without a time")?;
                let charge = v.charge.map_or(0.0, |c| c.total_time());
                visits.push((station, visit, a.agent, t + inst.agents[a.agent].station_service_time + charge));
            }
        }
    }
    if visits.len() < 2 {
        return Err(format!("only {} station visits (status {:?}, {:.1} s)", visits.len(), res.status, res.seconds));
    }
    visits.sort_by_key(|v| (v.0, v.1));
    let mut pairs = Vec::new();
    for w in visits.windows(2) {
        if w[0].0 == w[1].0 && w[1].1 == w[0].1 + 1 {
            let next = plan.agents[w[1].2]
                .visits
                .iter()
                .find(|v| g.kind(v.node) == (NodeKind::Station { station: w[1].0, visit: w[1].1 }));
            let start = next.and_then(|v| v.time).unwrap();
            if w[0].3 > start + 1e-6 {
                return Err(format!(
                    "duplicate {} finishes at {:.3} after duplicate {} begins at {start:.3}",
                    w[0].1, w[0].3, w[1].1
                ));
            }
            pairs.push(format!("f{}^{} done {:.1} <= f{}^{} at {start:.1}", w[0].0, w[0].1, w[0].3, w[1].0, w[1].1));
        }
    }
    if pairs.is_empty() {
        return Err("station visits are not consecutive duplicates".into());
    }
    Ok(format!("{:?} in {:.1} s, {} station visits; {}", res.status, res.seconds, visits.len(), pairs.join("; ")))
}

fn criterion_6(cases: &[Case]) -> Verdict {
    // non-selective
    let mut strict = 0;
    for seed in 0..12 {
        let cfg = GenConfig { selective: false, ..corpus_config(seed) };
        let inst = generate(&cfg).unwrap();
        let g = expand_graph(&inst).unwrap();
        let res = branch_and_bound(&inst, &g, &BnbConfig::default());
        match (&res.plan, res.status) {
            (Some(p), _) if p.requests.iter().all(|r| r.accepted) => strict += 1,
            (None, SolveStatus::Infeasible) => strict += 1,
            _ => return Err(format!("{}: non-selective plan rejects a request", label(&cfg))),
        }
    }

    // selective with no usable agent time
    for c in cases.iter().filter(|c| c.instance.config.selective) {
        let mut inst = c.instance.clone();
        for a in &mut inst.agents {
            a.max_duration = 0.0;
        }
        let g = expand_graph(&inst).unwrap();
        let res = branch_and_bound(&inst, &g, &BnbConfig::default());
        let plan = res.plan.as_ref().ok_or_else(|| format!("{}: no plan with D = 0", c.label))?;
        let eta = inst.config.weights.eta;
        let expected: f64 = inst.requests.iter().map(|r| eta * r.priority).sum();
        if plan.requests.iter().any(|r| r.accepted)
            || plan.mission_duration != 0.0
            || !close(plan.objective, expected, 1e-9 * expected.max(1.0))
        {
            return Err(format!(
                "{}: D = 0 gives objective {} (expected {expected}), T = {}",
                c.label, plan.objective, plan.mission_duration
            ));
        }
    }

    // open routes
    let mut open_routes = 0;
    for seed in 0..10 {
        let cfg = GenConfig { open_vrp: true, ..corpus_config(seed) };
        let inst = generate(&cfg).unwrap();
        let g = expand_graph(&inst).unwrap();
        let res = branch_and_bound(&inst, &g, &BnbConfig::default());
        let Some(plan) = &res.plan else { continue };
        for a in plan.agents.iter().filter(|a| !a.is_idle()) {
            let n = a.visits.len();
            let last = &a.visits[n - 2];
            let end = match g.kind(last.node) {
                NodeKind::Delivery { request } => last.time.unwrap() + inst.requests[request].service_time,
                NodeKind::Station { .. } => {
                    last.time.unwrap()
                        + inst.agents[a.agent].station_service_time
                        + last.charge.map_or(0.0, |c| c.total_time())
                }
                k => return Err(format!("{}: agent {} ends its service at {k:?}", label(&cfg), a.agent)),
            };
            if !matches!(g.kind(a.visits[n - 1].node), NodeKind::Depot { .. }) {
                return Err(format!("{}: agent {} has no closing hub node", label(&cfg), a.agent));
            }
            if !close(a.duration, end, 1e-6) {
                return Err(format!(
                    "{}: agent {} T^k = {} but its last service ends at {end}",
                    label(&cfg),
                    a.agent,
                    a.duration
                ));
            }
            open_routes += 1;
        }
    }
    Ok(format!("non-selective: {strict}/12 accept all or are infeasible; D = 0 rejects everything; {open_routes} open routes stop at their last service"))
}

fn two_requests(lambda_b: f64) -> Instance {
    let doc = format!(
        r#"{{
          "meta": {{ "time_unit": "seconds" }},
          "requests": [
            {{ "id": 0, "pickup": [0.0, 100.0], "delivery": [0.0, 200.0], "passengers": 1, "equipment": 0,
               "service_time": 2.0, "tw_kind": "delivery", "tw_lo": 0.0, "tw_hi": 1000.0, "priority": 1.0 }},
            {{ "id": 1, "pickup": [0.0, -110.0], "delivery": [0.0, -210.0], "passengers": 1, "equipment": 0,
               "service_time": 2.0, "tw_kind": "delivery", "tw_lo": 0.0, "tw_hi": 1000.0, "priority": {lambda_b} }}
          ],
          "agents": [{{ "id": 0, "start": [0.0, 0.0], "initial_delay": 0.0, "cap_passengers": 4, "cap_equipment": 2,
                        "conversion": 2.0, "max_duration": 500.0, "station_service_time": 3.0, "soc_min": 0.25,
                        "soc_init": 1.0, "soc_target": 0.85 }}],
          "depots": [{{ "id": 0, "pos": [0.0, 0.0] }}],
          "costs": {{ "mode": "euclidean" }},
          "battery": {{ "alpha0": 0.0005, "alpha1": 0.0002, "alpha2": 0.0003, "beta1": 0.05, "beta2": 0.02, "beta3": 0.01 }},
          "config": {{ "duplicate_visits": 0, "selective": true, "open_vrp": false }}
        }}"#
    );
    Instance::from_json(&doc).unwrap()
}

fn accepted(lambda_b: f64) -> Result<Vec<bool>, String> {
    let inst = two_requests(lambda_b);
    let g = expand_graph(&inst).unwrap();
    let res = branch_and_bound(&inst, &g, &BnbConfig::default());
    let plan = res.plan.ok_or("no plan")?;
    Ok(plan.requests.iter().map(|r| r.accepted).collect())
}

fn criterion_7() -> Verdict {
    // serving one request takes 404 s or 424 s, serving both at least 804 s, D = 500 s
    let before = accepted(1.0)?;
    let after = accepted(1.5)?;
    if before != [true, false] {
        return Err(format!("equal priorities accept {before:?}, expected the shorter request only"));
    }
    if after != [false, true] {
        return Err(format!("raised priority accepts {after:?}"));
    }
    Ok(format!("lambda_1 = 1.0 accepts {before:?}; lambda_1 = 1.5 accepts {after:?}"))
}

fn criterion_8(cases: &[Case], solver: Option<&str>) -> Verdict {
    let mut checked = 0;
    let mut external = 0;
    let mut worst: f64 = 0.0;
    for c in cases {
        let big = compute_big_m(&c.instance, &c.graph).unwrap();
        let mut inst = c.instance.clone();
        inst.config.weights.big_m_override = Some(10.0 * big.objective);
        let g = expand_graph(&inst).unwrap();
        let res = branch_and_bound(&inst, &g, &BnbConfig::default());
        if res.status != c.result.status {
            return Err(format!("{}: status {:?} becomes {:?}", c.label, c.result.status, res.status));
        }
        let Some(plan) = &c.result.plan else { continue };
        if !close(res.objective, c.result.objective, 1e-6) {
            return Err(format!("{}: objective {} becomes {}", c.label, c.result.objective, res.objective));
        }
        // the optimum stays feasible and keeps its value in the scaled model
        let model = build_model_on(&inst, &g).unwrap();
        let values = encode_plan(&inst, &g, &model, plan).map_err(|e| format!("{}: {e}", c.label))?;
        let rows = model.violated_rows(&values, 1e-6);
        if !rows.is_empty() || !model.violated_bounds(&values, 1e-6).is_empty() {
            return Err(format!("{}: optimal plan violates {} rows of the 10x model", c.label, rows.len()));
        }
        if !close(model.objective_value(&values), c.result.objective, 1e-6) {
            return Err(format!("{}: 10x model values the plan at {}", c.label, model.objective_value(&values)));
        }
        if let Some(template) = solver {
            if external < 8 {
                let (s1, o1) = external_objective(&c.instance, &c.graph, template)?;
                let (s10, o10) = external_objective(&inst, &g, template)?;
                if s1 == SolveStatus::Optimal && s10 == SolveStatus::Optimal {
                    let d = (o1.unwrap() - o10.unwrap()).abs();
                    worst = worst.max(d);
                    if d >= 1e-6 {
                        return Err(format!(
                            "{}: external solver gives {} at M and {} at 10M",
                            c.label,
                            o1.unwrap(),
                            o10.unwrap()
                        ));
                    }
                    external += 1;
                }
            }
        }
        checked += 1;
    }
    let ext = if solver.is_some() {
        format!("; external solver agrees on {external} (max difference {worst:.1e})")
    } else {
        String::new()
    };
    Ok(format!("{checked} optima unchanged under 10x big-M{ext}"))
}

fn sha(path: &Path) -> String {
    Sha256::digest(std::fs::read(path).unwrap()).iter().map(|b| format!("{b:02x}")).collect()
}

fn criterion_9() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_emdarp");
    let run = |args: &[&str]| -> Result<(), String> {
        let out = Command::new(bin).args(args).output().map_err(|e| e.to_string())?;
        if out.status.success() {
            Ok(())
        } else {
            Err(format!("emdarp {args:?} failed: {}", String::from_utf8_lossy(&out.stderr)))
        }
    };
    let p = |name: &str| -> PathBuf { dir.path().join(name) };
    let s = |path: &PathBuf| path.to_str().unwrap().to_owned();
    let mut artifacts = Vec::new();
    for round in ["a", "b"] {
        let inst = p(&format!("inst_{round}.json"));
        let mps = p(&format!("model_{round}.mps"));
        let plan = p(&format!("plan_{round}.json"));
        run(&[
            "gen",
            "--seed",
            "11",
            "--requests",
            "4",
            "--agents",
            "2",
            "--preset",
            "highdischarge",
            "--out",
            &s(&inst),
        ])?;
        run(&["build", &s(&inst), "--out", &s(&mps)])?;
        run(&["solve", &s(&inst), "--out", &s(&plan)])?;
        artifacts.push([sha(&inst), sha(&mps), sha(&plan)]);
    }
    for (i, name) in ["gen", "build", "solve"].iter().enumerate() {
        if artifacts[0][i] != artifacts[1][i] {
            return Err(format!("{name} output differs between runs"));
        }
    }
    Ok(format!(
        "gen {}.., build {}.., solve {}.. identical across runs",
        &artifacts[0][0][..12],
        &artifacts[0][1][..12],
        &artifacts[0][2][..12]
    ))
}

fn main() -> std::process::ExitCode {
    let cases = corpus();
    let solver = external_solver();
    let criteria: Vec<Box<dyn Fn() -> Verdict + '_>> = vec![
        Box::new(|| criterion_1(&cases)),
        Box::new(|| criterion_2(&cases)),
        Box::new(|| criterion_3(&cases, solver.as_deref())),
        Box::new(criterion_4),
        Box::new(criterion_5),
        Box::new(|| criterion_6(&cases)),
        Box::new(criterion_7),
        Box::new(|| criterion_8(&cases, solver.as_deref())),
        Box::new(criterion_9),
    ];
    let mut failed = Vec::new();
    for (i, run) in criteria.iter().enumerate() {
        let n = i + 1;
        match run() {
            Ok(detail) => println!("criterion {n}: PASS: {detail}"),
            Err(detail) => {
                println!("criterion {n}: FAIL: {detail}");
                failed.push(n);
            }
        }
    }
    if failed.is_empty() {
        std::process::ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        std::process::ExitCode::FAILURE
    }
}
