use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_perpetual"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Values of `column` in a CSV document.
fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

fn number(csv: &str, name: &str) -> f64 {
    column(csv, name)[0].parse().unwrap()
}

#[test]
fn boundary_examples() {
    let out = run(&["boundary", "--model", "rapm", "--lambda", "0.2"]);
    assert!(out.status.success());
    let rho = number(&stdout(&out), "rho");
    assert!((rho - 64.7181).abs() < 0.05, "{rho}");

    let out = run(&["boundary", "--model", "constant"]);
    let rho = number(&stdout(&out), "rho");
    assert!((rho - 68.9655).abs() < 1e-3);
}

#[test]
fn boundary_methods_agree() {
    let general = run(&["boundary", "--lambda", "0", "--method", "general"]);
    let h = run(&["boundary", "--lambda", "0", "--method", "h-quad"]);
    let (a, b) = (number(&stdout(&general), "rho"), number(&stdout(&h), "rho"));
    assert!(((a - b) / b).abs() < 1e-6);
    assert_eq!(column(&stdout(&general), "method"), vec!["general"]);
}

#[test]
fn boundary_json_and_verbose_trajectory() {
    let out = run(&["boundary", "--lambda", "1", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["rho"].as_f64().unwrap() > 50.0);
    assert!(v.get("trajectory").is_none());
    let out = run(&["boundary", "--lambda", "1", "--format", "json", "--verbose"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["trajectory"].as_array().unwrap().len() > 10);
}

#[test]
fn table_check_reports_reference_deviations() {
    // two reference boundaries lie outside 0.05 of the exact solution
    let out = run(&["table", "--check", "--tol-rho", "0.05", "--tol-v", "0.05"]);
    assert_eq!(out.status.code(), Some(1));
    let csv = stdout(&out);
    assert_eq!(column(&csv, "lambda").len(), 7);
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("lambda=1.2") && stderr.contains("lambda=1.6"));

    // a looser boundary tolerance passes, the closed-form row still held to 1e-3
    let out = run(&["table", "--check", "--tol-rho", "0.35"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = stdout(&out);
    let d0: f64 = column(&csv, "rho_dev")[0].parse().unwrap();
    assert!(d0 < 1e-3);
}

#[test]
fn table_rejects_empty_lambda_list() {
    assert_eq!(run(&["table", "--lambdas", ""]).status.code(), Some(2));
    assert_eq!(run(&["table", "--lambdas", "0.2,x"]).status.code(), Some(2));
    assert_eq!(run(&["table", "--model", "constant"]).status.code(), Some(2));
}

#[test]
fn price_curve_sandwich_and_formats() {
    let args = ["price", "--lambda", "1", "--s-max", "300", "--n", "200", "--log-grid"];
    let out = run(&args);
    assert!(out.status.success());
    let csv = stdout(&out);
    assert!(csv.starts_with("S,V,delta,H,residual,V_sub,V_super\n"));
    let parse = |name: &str| -> Vec<f64> { column(&csv, name).iter().map(|s| s.parse().unwrap()).collect() };
    let (v, lo, hi) = (parse("V"), parse("V_sub"), parse("V_super"));
    assert_eq!(v.len(), 200);
    for i in 0..v.len() {
        assert!(lo[i] - 1e-6 <= v[i] && v[i] <= hi[i] + 1e-6, "row {i}");
    }
    assert!(parse("residual").iter().all(|r| r.abs() < 1e-5));

    let mut json_args = args.to_vec();
    json_args.extend(["--format", "json"]);
    let rows: Vec<serde_json::Value> = serde_json::from_slice(&run(&json_args).stdout).unwrap();
    assert_eq!(rows.len(), 200);
    assert_eq!(rows[17]["V"].as_f64().unwrap(), v[17]);
}

#[test]
fn price_rejects_inverted_grid() {
    assert_eq!(
        run(&["price", "--s-min", "400", "--s-max", "300"]).status.code(),
        Some(2)
    );
}

#[test]
fn output_is_deterministic_and_written_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for path in [&a, &b] {
        let out = run(&[
            "price",
            "--lambda",
            "0.6",
            "--n",
            "40",
            "--output",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        assert!(out.stdout.is_empty());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(
        &path,
        r#"{"model": {"variant": "constant", "sigma0": 0.2}, "market": {"r": 0.05}}"#,
    )
    .unwrap();
    let out = run(&["boundary", "--config", path.to_str().unwrap(), "--sigma0", "0.3"]);
    assert!(out.status.success());
    // gamma = 2 * 0.05 / 0.09
    let gamma = 0.1 / 0.09;
    let rho = number(&stdout(&out), "rho");
    assert!((rho - 100.0 * gamma / (1.0 + gamma)).abs() < 1e-6);

    std::fs::write(&path, "{not json").unwrap();
    assert_eq!(
        run(&["boundary", "--config", path.to_str().unwrap()]).status.code(),
        Some(2)
    );
}

#[test]
fn sweeps() {
    let out = run(&["sweep", "--param", "lambda", "--values", "0,0.2,0.4,0.6,1.2,1.6,2"]);
    assert!(out.status.success());
    let table = run(&["table"]);
    assert_eq!(column(&stdout(&out), "rho"), column(&stdout(&table), "rho"));
    assert!(column(&stdout(&out), "rho_trend")[1..]
        .iter()
        .all(|t| t == "decreasing"));

    let out = run(&[
        "sweep", "--model", "constant", "--param", "sigma0", "--values", "0.2,0.3",
    ]);
    let rhos: Vec<f64> = column(&stdout(&out), "rho")
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    for (sigma0, rho) in [0.2f64, 0.3].iter().zip(rhos) {
        let gamma = 0.2 / (sigma0 * sigma0);
        assert!((rho - 100.0 * gamma / (1.0 + gamma)).abs() < 1e-6);
    }

    let out = run(&[
        "sweep",
        "--model",
        "barles-soner",
        "--param",
        "a",
        "--values",
        "0,0.1,0.2",
    ]);
    assert!(out.status.success());
    let rhos: Vec<f64> = column(&stdout(&out), "rho")
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    assert!((rhos[0] - 68.96551724).abs() < 1e-6);
    assert!(rhos.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn sweep_row_failure_continues() {
    let out = run(&[
        "sweep",
        "--model",
        "constant",
        "--param",
        "sigma0",
        "--values",
        "0.2,-1,0.4",
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(column(&stdout(&out), "sigma0").len(), 3);
    assert_eq!(
        run(&["sweep", "--param", "a", "--values", "0.1"]).status.code(),
        Some(2)
    );
}

#[test]
fn bounds_command() {
    let out = run(&["bounds", "--lambda", "1"]);
    let csv = stdout(&out);
    assert!((number(&csv, "gamma_plus") - 0.9847201697).abs() < 1e-9);
    assert!((number(&csv, "rho_minus") - 68.96551724).abs() < 1e-7);
    assert_eq!(
        run(&["bounds", "--model", "barles-soner", "--a", "0.05"]).status.code(),
        Some(2)
    );
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["boundary", "--model", "leland"]).status.code(), Some(2));
    assert_eq!(run(&["boundary", "--r", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["boundary", "--tol", "0"]).status.code(), Some(2));
}
