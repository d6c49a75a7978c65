use qcmi::experiments::{
    emit_outputs, figure1_experiment, read_csv, svg_scatter, ExperimentRecord, OutputPaths,
    RunConfig, Summary, CSV_HEADER,
};

fn cfg(seed: u64, n: usize) -> RunConfig {
    RunConfig {
        seed,
        n_samples: n,
        ..RunConfig::default()
    }
}

fn record(id: u64, cmi: f64, relent: f64) -> ExperimentRecord {
    let f: f64 = 0.8;
    ExperimentRecord {
        sample_id: id,
        cmi_bits: cmi,
        relent_transpose_bits: relent,
        fidelity_transpose: f,
        shalf_transpose_bits: -2.0 * f.log2(),
        measured_re_transpose_bits: None,
        strict: relent < cmi - 1e-9,
    }
}

fn emit(records: &[ExperimentRecord], summary: &serde_json::Value, ms: bool) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let paths = OutputPaths {
        csv: Some(dir.path().join("out.csv")),
        json: Some(dir.path().join("out.json")),
        svg: Some(dir.path().join("out.svg")),
    };
    emit_outputs(records, summary, ms, &paths).unwrap();
    dir
}

#[test]
fn empty_records_give_header_only() {
    let c = cfg(1, 1);
    let summary = Summary::from_records(&c, &[], &[], 0.0).to_json(&c);
    let dir = emit(&[], &summary, false);
    let text = std::fs::read_to_string(dir.path().join("out.csv")).unwrap();
    assert_eq!(text, format!("{}\n", CSV_HEADER.join(",")));
    assert!(read_csv(&dir.path().join("out.csv")).unwrap().is_empty());
}

#[test]
fn three_synthetic_records() {
    let records = vec![
        record(0, 0.5, 0.2),
        record(1, 0.3, 0.4),
        record(2, 0.7, f64::INFINITY),
    ];
    let c = cfg(1, 3);
    let summary = Summary::from_records(&c, &records, &[], 0.1).to_json(&c);
    let dir = emit(&records, &summary, false);
    let text = std::fs::read_to_string(dir.path().join("out.csv")).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.contains(",inf,"));

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out.json")).unwrap())
            .unwrap();
    assert!((json["strict_fraction"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(json["config"]["seed"], 1);
    assert_eq!(json["n_infinite_relent"], 1);
    assert!(json["runtime_seconds"].is_number());

    let back = read_csv(&dir.path().join("out.csv")).unwrap();
    assert_eq!(back, records);
}

fn same_to_12_digits(a: f64, b: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300)
}

#[test]
fn csv_round_trip_reproduces_records() {
    let c = RunConfig {
        measured_re: true,
        ..cfg(5, 30)
    };
    let run = figure1_experiment(&c).unwrap();
    let dir = emit(&run.records, &run.summary.to_json(&c), true);
    let back = read_csv(&dir.path().join("out.csv")).unwrap();
    assert_eq!(back.len(), run.records.len());
    for (a, b) in run.records.iter().zip(&back) {
        assert_eq!(a.sample_id, b.sample_id);
        assert_eq!(a.strict, b.strict);
        for (x, y) in [
            (a.cmi_bits, b.cmi_bits),
            (a.relent_transpose_bits, b.relent_transpose_bits),
            (a.fidelity_transpose, b.fidelity_transpose),
            (a.shalf_transpose_bits, b.shalf_transpose_bits),
            (
                a.measured_re_transpose_bits.unwrap(),
                b.measured_re_transpose_bits.unwrap(),
            ),
        ] {
            assert!(same_to_12_digits(x, y), "{x} vs {y}");
        }
    }
}

#[test]
fn measured_re_column_is_bracketed() {
    let run = figure1_experiment(&RunConfig {
        measured_re: true,
        ..cfg(8, 40)
    })
    .unwrap();
    for r in &run.records {
        let ms = r.measured_re_transpose_bits.unwrap();
        assert!(ms <= r.relent_transpose_bits + 1e-7);
        assert!(ms >= r.shalf_transpose_bits - 1e-6);
    }
}

#[test]
fn svg_structure() {
    let run = figure1_experiment(&cfg(3, 200)).unwrap();
    let dir = emit(&run.records, &run.summary.to_json(&cfg(3, 200)), false);
    let svg = std::fs::read_to_string(dir.path().join("out.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<circle").count(), 200);
    assert_eq!(svg.matches("class=\"diagonal\"").count(), 1);
    assert_eq!(svg_scatter(&run.records), svg);
}

#[test]
fn strict_fraction_is_statistically_consistent() {
    let n = 400;
    let seeds = 40;
    let mut within = 0;
    for seed in 0..seeds {
        let small = figure1_experiment(&cfg(seed, n))
            .unwrap()
            .summary
            .strict_fraction;
        let large = figure1_experiment(&cfg(seed, 2 * n))
            .unwrap()
            .summary
            .strict_fraction;
        let p = large;
        let bound = 4.0 * (p * (1.0 - p) / n as f64).sqrt();
        within += usize::from((small - large).abs() < bound);
    }
    assert!(within as f64 >= 0.95 * seeds as f64, "{within} of {seeds}");
}

#[test]
fn determinism_across_workers_and_runs() {
    let a = figure1_experiment(&RunConfig {
        workers: 1,
        ..cfg(42, 300)
    })
    .unwrap();
    let b = figure1_experiment(&RunConfig {
        workers: 3,
        ..cfg(42, 300)
    })
    .unwrap();
    assert_eq!(a.records, b.records);
    let c = figure1_experiment(&RunConfig {
        workers: 1,
        ..cfg(43, 300)
    })
    .unwrap();
    assert_ne!(a.records, c.records);
}
