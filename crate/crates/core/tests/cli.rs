use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn homsim(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_homsim"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("HOMSIM_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn error_record(out: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("stderr has an error line");
    serde_json::from_str(line).expect("error record is JSON")
}

/// Splits a CSV file into its metadata header, column names and raw rows.
fn read_csv(path: &Path) -> (Value, Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let meta = lines
        .next()
        .unwrap()
        .strip_prefix("# ")
        .expect("metadata line");
    let meta: Value = serde_json::from_str(meta).unwrap();
    let columns = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (meta, columns, rows)
}

const CONTRACTS: &[(&str, &str, &str)] = &[
    ("dip", "dip", "tau,r_hat,g2"),
    ("maps", "maps", "tau,delta_f,r_ab,i_a,i_b"),
    (
        "intensities",
        "intensities",
        "tau,ia_mean_full,ib_mean_full,ia_mean_filtered,ib_mean_filtered",
    ),
    (
        "filtered",
        "filtered",
        "tau,ia_mean,ib_mean,visibility,r_hat",
    ),
    ("filtered", "filtered_maps", "tau,delta_f,r_ab,i_a,i_b"),
    ("g2", "g2", "tau,r_hat,g2_no_swap,g2_swap"),
    ("dephasing", "dephasing", "zeta_halfwidth,r_hat_zero"),
    ("dephasing", "dephasing_curves", "zeta_halfwidth,tau,r_hat"),
    ("classical", "classical", "tau,r_hat,g2,ia_mean,ib_mean"),
];

#[test]
fn csv_column_contracts() {
    let tmp = tempfile::tempdir().unwrap();
    for (scenario, table, header) in CONTRACTS {
        let dir = tmp.path().join(scenario);
        let out = homsim(&[scenario, "--nodes", "21", "--seed", "5"], &dir);
        assert!(
            out.status.success(),
            "{scenario}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let (meta, columns, rows) = read_csv(&dir.join(format!("{table}.csv")));
        assert_eq!(columns.join(","), *header, "{table}");
        assert!(!rows.is_empty(), "{table}");
        for row in &rows {
            assert_eq!(row.len(), columns.len(), "{table}");
            for cell in row.iter().filter(|c| !c.is_empty()) {
                cell.parse::<f64>()
                    .unwrap_or_else(|_| panic!("{table}: bad number {cell}"));
            }
        }
        assert_eq!(meta["tool"], "homsim");
        assert_eq!(meta["version"], env!("CARGO_PKG_VERSION"));
        assert_eq!(meta["scenario"], *scenario);
        assert_eq!(meta["seed"], 5);
        assert_eq!(meta["table"], *table);
        assert_eq!(meta["config"]["nodes"], 21);
    }
}

#[test]
fn numbers_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(homsim(&["dip", "--nodes", "21"], tmp.path())
        .status
        .success());
    let (_, _, rows) = read_csv(&tmp.path().join("dip.csv"));
    let tau: f64 = rows[1][0].parse().unwrap();
    assert_eq!(rows[1][0], format!("{tau:.16e}"));
    assert_eq!(rows[0][0], "0.0000000000000000e0");
}

#[test]
fn json_output_matches_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let (csv_dir, json_dir) = (tmp.path().join("csv"), tmp.path().join("json"));
    assert!(homsim(&["maps", "--nodes", "21"], &csv_dir)
        .status
        .success());
    assert!(
        homsim(&["maps", "--nodes", "21", "--format", "json"], &json_dir)
            .status
            .success()
    );

    let doc: Value =
        serde_json::from_str(&fs::read_to_string(json_dir.join("maps.json")).unwrap()).unwrap();
    assert_eq!(doc["metadata"]["scenario"], "maps");
    let table = &doc["tables"]["maps"];
    let (_, columns, rows) = read_csv(&csv_dir.join("maps.csv"));
    let json_columns: Vec<&str> = table["columns"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c.as_str().unwrap())
        .collect();
    assert_eq!(json_columns, columns);
    let json_rows = table["rows"].as_array().unwrap();
    assert_eq!(json_rows.len(), rows.len());
    for (j, c) in json_rows.iter().zip(&rows) {
        for (jv, cv) in j.as_array().unwrap().iter().zip(c) {
            assert_eq!(jv.as_f64().unwrap(), cv.parse::<f64>().unwrap());
        }
    }
}

#[test]
fn undefined_g2_is_a_gap() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["dip", "--nodes", "21", "--swap", "off"];
    assert!(homsim(&args, tmp.path()).status.success());
    let (_, _, rows) = read_csv(&tmp.path().join("dip.csv"));
    assert_eq!(rows[0][2], "");
    assert!(rows[1][2].parse::<f64>().is_ok());

    let json_dir = tmp.path().join("json");
    let mut with_json = args.to_vec();
    with_json.extend(["--format", "json"]);
    assert!(homsim(&with_json, &json_dir).status.success());
    let doc: Value =
        serde_json::from_str(&fs::read_to_string(json_dir.join("dip.json")).unwrap()).unwrap();
    assert!(doc["tables"]["dip"]["rows"][0][2].is_null());
}

#[test]
fn config_file_and_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("run.json");
    fs::write(
        &config,
        r#"{"tau_start": 0, "tau_stop": 1, "tau_points": 5, "phi_prime": "-pi/2", "seed": 1}"#,
    )
    .unwrap();
    let out = homsim(
        &[
            "dip",
            "--config",
            config.to_str().unwrap(),
            "--seed",
            "9",
            "--nodes",
            "11",
        ],
        tmp.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (meta, _, rows) = read_csv(&tmp.path().join("dip.csv"));
    assert_eq!(rows.len(), 5);
    assert_eq!(meta["seed"], 9);
    assert_eq!(meta["config"]["nodes"], 11);
    assert!(meta["config"]["phi_prime"].as_f64().unwrap() < 0.0);
}

#[test]
fn unknown_key_exits_with_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("bad.json");
    fs::write(&config, r#"{"nodes": 21, "spann": 3}"#).unwrap();
    let out = homsim(&["dip", "--config", config.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let err = error_record(&out);
    assert_eq!(err["error"]["kind"], "config");
    assert_eq!(err["error"]["key"], "spann");
}

#[test]
fn invalid_values_exit_with_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"zeta": {"uniform": 4}}"#, "zeta"),
        (r#"{"nodes": 1}"#, "nodes"),
        (r#"{"phi_prime": "half pi"}"#, "phi_prime"),
        (r#"{"tau_start": 0.5}"#, "tau_start"),
    ];
    for (i, (body, key)) in cases.iter().enumerate() {
        let config = tmp.path().join(format!("bad{i}.json"));
        fs::write(&config, body).unwrap();
        let out = homsim(&["dip", "--config", config.to_str().unwrap()], tmp.path());
        assert_eq!(out.status.code(), Some(2), "{body}");
        let err = error_record(&out);
        assert_eq!(err["error"]["kind"], "config", "{body}");
        let text = err.to_string();
        assert!(text.contains(key), "{body}: {text}");
    }
    let out = homsim(&["dip", "--config", "/nonexistent/run.json"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = homsim(&["dip", "--nodes", "11"], &blocker.join("sub"));
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_record(&out)["error"]["kind"], "runtime");
}
