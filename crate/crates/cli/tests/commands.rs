use std::path::Path;
use std::process::{Command, Output};

use clap::Parser;
use slq_cli::{compare_rows, run, Cli, CommandOutput};
use slq_core::bounds::Theorem;
use slq_core::operators::{decay_eigenvalues, SpectrumBounds};
use slq_core::LinearOperator;

fn slq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slq"))
        .args(args)
        .env_remove(slq_cli::ND3K_ENV)
        .output()
        .expect("binary runs")
}

fn in_process(args: &[&str]) -> slq_core::Result<CommandOutput> {
    let mut full = vec!["slq"];
    full.extend_from_slice(args);
    run(Cli::try_parse_from(full).expect("arguments parse"))
}

fn field(stdout: &str, key: &str) -> Option<String> {
    stdout.lines().find_map(|l| {
        let mut parts = l.split_whitespace();
        (parts.next() == Some(key)).then(|| parts.next().unwrap_or_default().to_string())
    })
}

#[test]
fn plan_relative_record() {
    let out = in_process(&[
        "plan",
        "--theorem",
        "relative",
        "--lambda-min",
        "0.0443",
        "--lambda-max",
        "0.99",
        "--n",
        "500",
        "--eps",
        "0.1",
        "--eta",
        "0.1",
    ])
    .unwrap();
    assert_eq!(field(&out.stdout, "N").as_deref(), Some("7190"));
    assert!(field(&out.stdout, "rho").is_some());
    assert!(field(&out.stdout, "alpha_star").is_none());
}

#[test]
fn plan_optimized_reports_alpha_and_c_in_json() {
    let out = in_process(&[
        "plan",
        "--theorem",
        "optimized",
        "--lambda-min",
        "0.0443",
        "--lambda-max",
        "0.99",
        "--n",
        "500",
        "--eps",
        "0.1",
        "--eta",
        "0.1",
        "--json",
    ])
    .unwrap();
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert!(v["alpha_star"].as_f64().unwrap() > 2.0);
    assert!(v["c"].as_f64().unwrap() > 0.0);
    assert_eq!(v["theorem"], "optimized");
    assert_eq!(
        v["mvm_total"].as_u64().unwrap(),
        v["N"].as_u64().unwrap() * (v["m"].as_u64().unwrap() + 1)
    );
}

#[test]
fn degenerate_plan_exits_2() {
    let o = slq(&[
        "plan",
        "--theorem",
        "relative",
        "--lambda-min",
        "0.5",
        "--lambda-max",
        "0.5",
        "--n",
        "10",
        "--eps",
        "0.1",
        "--eta",
        "0.1",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("degenerate"));
}

#[test]
fn relative_plan_with_large_lambda_max_exits_2() {
    let o = slq(&[
        "plan",
        "--theorem",
        "relative",
        "--lambda-min",
        "0.5",
        "--lambda-max",
        "3",
        "--n",
        "10",
        "--eps",
        "0.1",
        "--eta",
        "0.1",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn estimate_scaled_identity_is_exact() {
    let out = in_process(&[
        "estimate",
        "--matrix",
        "decay:n=7,r=0,scale=3",
        "--m",
        "1",
        "--N",
        "1",
    ])
    .unwrap();
    let est: f64 = field(&out.stdout, "estimate").unwrap().parse().unwrap();
    assert!((est - 7.0 * 3f64.ln()).abs() <= 1e-12);
}

#[test]
fn estimate_auto_relative_is_reproducible_and_accurate() {
    let args = [
        "estimate",
        "--matrix",
        "decay:n=500,r=0.5,scale=0.99",
        "--auto",
        "--eps",
        "0.1",
        "--eta",
        "0.1",
        "--theorem",
        "relative",
        "--seed",
        "7",
    ];
    let a = in_process(&args).unwrap();
    let b = in_process(&args).unwrap();
    assert_eq!(a, b);
    let rel: f64 = field(&a.stdout, "rel_err").unwrap().parse().unwrap();
    assert!(rel <= 0.1);
    assert_eq!(field(&a.stdout, "m").as_deref(), Some("18"));
}

#[test]
fn estimate_rescales_when_lambda_max_exceeds_one() {
    let out = in_process(&[
        "estimate",
        "--matrix",
        "decay:n=100,r=1,scale=5",
        "--auto",
        "--eps",
        "0.2",
        "--eta",
        "0.2",
        "--theorem",
        "optimized",
        "--seed",
        "3",
    ])
    .unwrap();
    assert!(field(&out.stdout, "scale_correction").is_some());
    let rel: f64 = field(&out.stdout, "rel_err").unwrap().parse().unwrap();
    assert!(rel <= 0.2);
    let refused = slq(&[
        "estimate",
        "--matrix",
        "decay:n=100,r=1,scale=5",
        "--auto",
        "--eps",
        "0.2",
        "--eta",
        "0.2",
        "--theorem",
        "optimized",
        "--no-rescale",
    ]);
    assert_eq!(refused.status.code(), Some(2));
}

#[test]
fn malformed_spec_exits_2() {
    let o = slq(&[
        "estimate",
        "--matrix",
        "decay:n=ten,r=1,scale=1",
        "--m",
        "2",
        "--N",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n is not an integer"));
    let o = slq(&["estimate", "--matrix", "mystery", "--m", "2", "--N", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.display().to_string()
}

#[test]
fn indefinite_matrix_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let eigs = write(dir.path(), "eigs.txt", "# mixed signs\n-1\n2\n3\n4\n");
    let o = slq(&[
        "estimate",
        "--matrix",
        &format!("householder:file={eigs}"),
        "--m",
        "3",
        "--N",
        "4",
    ]);
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn estimate_csv_schema() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("row.csv");
    let o = slq(&[
        "estimate",
        "--matrix",
        "decay:n=40,r=1,scale=0.9",
        "--m",
        "6",
        "--N",
        "10",
        "--seed",
        "1",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "theorem,n,m,N,mvm,estimate,exact,rel_err,seed");
    let cols: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(cols[0], "manual");
    assert_eq!(cols[4], "70");
    assert_eq!(cols[8], "1");
}

#[test]
fn matrix_market_input_uses_probe_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let mut body = String::from("%%MatrixMarket matrix coordinate real symmetric\n30 30 59\n");
    for i in 1..=30 {
        body.push_str(&format!("{i} {i} 2.5\n"));
    }
    for i in 2..=30 {
        body.push_str(&format!("{i} {} -1\n", i - 1));
    }
    let mm = write(dir.path(), "lap.mtx", &body);
    let out = in_process(&[
        "estimate",
        "--matrix",
        &format!("mm:file={mm}"),
        "--auto",
        "--eps",
        "0.2",
        "--eta",
        "0.2",
        "--theorem",
        "relative",
        "--seed",
        "2",
    ])
    .unwrap();
    assert!(out.notices.iter().any(|n| n.contains("heuristic")));
    let rel: f64 = field(&out.stdout, "rel_err").unwrap().parse().unwrap();
    assert!(rel <= 0.2, "{rel}");
}

#[test]
fn compare_single_point_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let o = slq(&[
        "compare",
        "--matrix",
        "decay:n=200,r=1,scale=0.99",
        "--eps-star",
        "0.05",
        "--theorems",
        "relative,optimized",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let csv = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "eps_star,theorem,m,N,mvm");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("0.05,relative,"));
    let svg = std::fs::read_to_string(dir.path().join("compare.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
    assert_eq!(
        std::fs::read_to_string(dir.path().join("compare.csv")).unwrap(),
        csv
    );
}

#[test]
fn compare_skips_absolute_series_without_logdet() {
    let eigs = decay_eigenvalues(50, 1.0, 0.99);
    let bounds = SpectrumBounds::from_spectrum(&eigs).unwrap();
    let op = LinearOperator::diagonal(eigs).unwrap();
    let mut notices = Vec::new();
    let rows = compare_rows(
        &op,
        &bounds,
        &[0.1],
        0.1,
        &[Theorem::CorrectedAbsolute, Theorem::Relative],
        None,
        &mut notices,
    )
    .unwrap();
    assert_eq!(rows.len(), 1);
    assert!(notices
        .iter()
        .any(|n| n.contains("corrected_absolute: skipped")));
}

#[test]
fn compare_with_explicit_logdet_includes_absolute_series() {
    let out = in_process(&[
        "compare",
        "--matrix",
        "decay:n=100,r=0.5,scale=0.99",
        "--eps-star",
        "0.1,0.2",
        "--logdet",
        "-150",
    ])
    .unwrap();
    assert_eq!(
        out.stdout
            .lines()
            .filter(|l| l.contains(",corrected_absolute,"))
            .count(),
        2
    );
}

#[test]
fn slower_decay_needs_fewer_optimized_mvms() {
    let mvm = |r: f64| {
        let eigs = decay_eigenvalues(500, r, 0.99);
        let bounds = SpectrumBounds::from_spectrum(&eigs).unwrap();
        let op = LinearOperator::diagonal(eigs).unwrap();
        compare_rows(
            &op,
            &bounds,
            &[0.05],
            0.1,
            &[Theorem::Optimized],
            None,
            &mut Vec::new(),
        )
        .unwrap()[0]
            .plan
            .mvm_total
    };
    let counts: Vec<u64> = [0.5, 1.0, 2.0, 3.0].into_iter().map(mvm).collect();
    assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{counts:?}");
}

#[test]
fn symmetry_all_writes_three_csv_pairs_and_skips_case_four() {
    let dir = tempfile::tempdir().unwrap();
    let o = slq(&[
        "symmetry",
        "--case",
        "all",
        "--m",
        "9",
        "--nd3k",
        "/nonexistent/nd3k.mtx",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let mut files: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    files.sort();
    assert_eq!(
        files,
        [
            "case1_measure.csv",
            "case1_nodes.csv",
            "case2_measure.csv",
            "case2_nodes.csv",
            "case3_measure.csv",
            "case3_nodes.csv"
        ]
    );
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.lines().next().unwrap().contains("verdict=symmetric"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("case 4"));
    let measure = std::fs::read_to_string(dir.path().join("case1_measure.csv")).unwrap();
    assert_eq!(measure.lines().count(), 1001);
    let nodes = std::fs::read_to_string(dir.path().join("case3_nodes.csv")).unwrap();
    assert_eq!(nodes.lines().count(), 11);
}

#[test]
fn symmetry_case_four_from_file() {
    // a small symmetric sparse stand-in for the large matrix
    let dir = tempfile::tempdir().unwrap();
    let mut body = String::from("%%MatrixMarket matrix coordinate real symmetric\n20 20 39\n");
    for i in 1..=20 {
        body.push_str(&format!("{i} {i} {}\n", 1.0 + i as f64 / 10.0));
    }
    for i in 2..=20 {
        body.push_str(&format!("{i} {} 0.3\n", i - 1));
    }
    let mm = write(dir.path(), "small.mtx", &body);
    let out = in_process(&[
        "symmetry",
        "--case",
        "4",
        "--m",
        "5",
        "--nd3k",
        &mm,
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ])
    .unwrap();
    assert!(out.stdout.starts_with("case 4:"));
    assert_eq!(out.files.len(), 2);
}

#[test]
fn symmetry_rejects_unknown_case() {
    assert_eq!(slq(&["symmetry", "--case", "7"]).status.code(), Some(2));
}

#[test]
fn nodes_reference_domain() {
    let spec = "decay:n=60,r=1,scale=0.99";
    let phys = in_process(&["nodes", "--matrix", spec, "--m", "7", "--seed", "4"])
        .unwrap()
        .stdout;
    let refd = in_process(&[
        "nodes",
        "--matrix",
        spec,
        "--m",
        "7",
        "--seed",
        "4",
        "--reference",
    ])
    .unwrap()
    .stdout;
    let parse = |s: &str| -> Vec<(f64, f64)> {
        s.lines()
            .skip(1)
            .map(|l| {
                let c: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
                (c[1], c[2])
            })
            .collect()
    };
    let (p, r) = (parse(&phys), parse(&refd));
    assert_eq!(phys.lines().next(), Some("k,theta,tau"));
    assert_eq!((p.len(), r.len()), (8, 8));
    assert!(r.iter().all(|(t, _)| t.abs() <= 1.0 + 1e-12));
    for (a, b) in p.iter().zip(&r) {
        assert_eq!(a.1, b.1);
    }
}

#[test]
fn oracle_values() {
    let out = in_process(&["oracle", "--matrix", "decay:n=9,r=0,scale=1"]).unwrap();
    assert_eq!(out.stdout, "logdet 0\n");
    let out = in_process(&["oracle", "--matrix", "decay:n=4,r=1,scale=0.99"]).unwrap();
    let v: f64 = out
        .stdout
        .trim_start_matches("logdet ")
        .trim()
        .parse()
        .unwrap();
    assert!((v - (0.99f64.powi(4) / 24.0).ln()).abs() <= 1e-14);
}

#[test]
fn oracle_cap_exceeded_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let mm = write(
        dir.path(),
        "d.mtx",
        "%%MatrixMarket matrix coordinate real symmetric\n3 3 3\n1 1 1\n2 2 2\n3 3 3\n",
    );
    let o = slq(&["oracle", "--matrix", &format!("mm:file={mm}"), "--cap", "2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = slq(&["oracle", "--matrix", &format!("mm:file={mm}")]);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("logdet 1.79175946922805"));
}

#[test]
fn every_command_accepts_seed() {
    for cmd in ["plan", "estimate", "compare", "symmetry", "nodes", "oracle"] {
        let help = slq(&[cmd, "--help"]);
        assert!(
            String::from_utf8_lossy(&help.stdout).contains("--seed"),
            "{cmd}"
        );
    }
}
