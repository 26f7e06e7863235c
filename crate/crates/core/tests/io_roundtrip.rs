use std::collections::BTreeMap;
use std::fs;

use roadflow::io::{emit_results, parse_scenario, scenario_to_json, Emit};
use roadflow::network::{BoundaryCondition, BoundarySpec, End, InitialSpec};
use roadflow::scenarios::{riemann_document, run_comparison, scenario_document, SCENARIO_NAMES};
use roadflow::sim::SolverState;
use roadflow::{Execution, Scenario, SolverKind};

const ALL: [Emit; 3] = [Emit::Profiles, Emit::Timeseries, Emit::Report];

#[test]
fn scenario_files_roundtrip() {
    for name in SCENARIO_NAMES {
        let doc = scenario_document(name).unwrap();
        let text = scenario_to_json(&doc);
        let back = parse_scenario(&text).unwrap();
        assert_eq!(back.document(), &doc, "{name}");
        assert_eq!(scenario_to_json(back.document()), text, "{name}");
    }

    let mut doc = riemann_document(0.3, 0.7, 10, 1.0);
    doc.boundary[0] = BoundarySpec::arc(
        "road",
        End::In,
        BoundaryCondition::Table { t: vec![0.0, 0.5, 1.0], value: vec![0.1, 1.0 / 3.0, 0.2] },
    );
    doc.initial = InitialSpec::Arcs { values: BTreeMap::from([("road".into(), vec![0.1 + 1e-17; 20])]) };
    let back = parse_scenario(&scenario_to_json(&doc)).unwrap();
    assert_eq!(back.document(), &doc);
}

#[test]
fn emission_is_deterministic() {
    let sc = Scenario::from_document(scenario_document("two_in_two_out").unwrap()).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let files_a = emit_results(&sc, &run_comparison(&sc, Execution::Sequential).unwrap(), a.path(), &ALL).unwrap();
    emit_results(&sc, &run_comparison(&sc, Execution::Parallel).unwrap(), b.path(), &ALL).unwrap();
    for f in files_a {
        let name = f.file_name().unwrap();
        let (x, y) = (fs::read(&f).unwrap(), fs::read(b.path().join(name)).unwrap());
        if name == "report.json" {
            // wall-clock timings differ; everything else must not
            let strip = |v: &[u8]| -> Vec<String> {
                String::from_utf8_lossy(v).lines().filter(|l| !l.contains("elapsed_secs")).map(String::from).collect()
            };
            assert_eq!(strip(&x), strip(&y));
        } else {
            assert_eq!(x, y, "{name:?}");
        }
    }
}

#[test]
fn profiles_parse_back_to_the_state() {
    let sc = Scenario::from_document(scenario_document("two_in_one_out_timedep").unwrap()).unwrap();
    let report = run_comparison(&sc, Execution::Sequential).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_results(&sc, &report, dir.path(), &[Emit::Profiles]).unwrap();

    let r = report.run(SolverKind::Multipath).unwrap();
    let SolverState::Paths(st) = &r.final_state else { panic!() };
    let mut rdr = csv::Reader::from_path(dir.path().join("profile_multipath.csv")).unwrap();
    assert_eq!(
        rdr.headers().unwrap().iter().collect::<Vec<_>>(),
        ["path", "cell", "arc", "arc_cell", "x", "mu", "omega"]
    );
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let p = sc.network().path_index(&rec[0]).unwrap();
        let k: usize = rec[1].parse::<usize>().unwrap() - 1;
        let mu: f64 = rec[5].parse().unwrap();
        let omega: f64 = rec[6].parse().unwrap();
        assert_eq!(mu.to_bits(), st.paths[p][k].to_bits());
        let c = sc.map().to_physical(p, k);
        assert_eq!(omega.to_bits(), r.final_arcs.get(c).to_bits());
        rows += 1;
    }
    assert_eq!(rows, 80);
}

#[test]
fn timeseries_parses_back() {
    let sc = Scenario::from_document(scenario_document("two_in_one_out_const").unwrap()).unwrap();
    let report = run_comparison(&sc, Execution::Sequential).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_results(&sc, &report, dir.path(), &[Emit::Timeseries]).unwrap();
    let mut rdr = csv::Reader::from_path(dir.path().join("timeseries_J.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap().len(), 1 + 3 * sc.probes().len());
    let c = report.run(SolverKind::Classical).unwrap();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.unwrap();
        assert_eq!(rec[0].parse::<f64>().unwrap().to_bits(), c.times[n].to_bits());
        assert_eq!(rec[1].parse::<f64>().unwrap().to_bits(), c.probes[0][n].to_bits());
    }
}
