mod common;

use std::io::Write;
use std::process::{Command, Output};
use std::time::Instant;

use common::*;
use zacr::analysis::{
    format_survival_table, kaplan_meier, load_dataset, read_dataset, survival_table, write_dataset,
};
use zacr::simulate::{calibrate_uniform_censoring, sample_dataset, CensoringSpec};
use zacr::{SurvivalDataset, ZacrError};

fn zacr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zacr"))
        .args(args)
        .output()
        .expect("run zacr")
}

fn write_csv(dir: &tempfile::TempDir, name: &str, d: &SurvivalDataset) -> String {
    let path = dir.path().join(name);
    let mut f = std::fs::File::create(&path).unwrap();
    write_dataset(d, &mut f).unwrap();
    f.flush().unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn km_without_censoring_is_empirical_survival() {
    let d = sample_dataset(
        &mixture_sim(),
        500,
        &CensoringSpec::uniform(30.0).unwrap(),
        3,
    )
    .unwrap();
    let events_only =
        SurvivalDataset::new(d.iter().filter(|o| o.is_event()).cloned().collect()).unwrap();
    let km = kaplan_meier(&events_only);
    let n = events_only.len() as f64;
    for step in &km.steps {
        // the product-limit factors telescope to the empirical share above t
        let above = events_only.iter().filter(|o| o.time > step.time).count() as f64;
        assert!((step.survival - above / n).abs() < 1e-12, "t={}", step.time);
    }
}

#[test]
fn km_first_step_is_the_zero_share() {
    let mut pairs = vec![(0.0, 1u8)];
    pairs.extend((1..10).map(|i| (i as f64, 1u8)));
    let km = kaplan_meier(&SurvivalDataset::from_pairs(&pairs).unwrap());
    assert!((km.survival_at(0.0) - 0.9).abs() < 1e-15);
    assert_eq!(km.steps[0].events, 1);
}

#[test]
fn km_tracks_the_geometric_model() {
    let m = geo_app();
    let cens = calibrate_uniform_censoring(&m, 0.2).unwrap();
    let d = sample_dataset(&m, 10_000, &cens, 21).unwrap();
    let km = kaplan_meier(&d);
    assert!((km.survival_at(12.0) - m.population_survival(12.0).unwrap()).abs() < 0.02);
    assert!(km
        .steps
        .windows(2)
        .all(|w| w[1].survival <= w[0].survival && w[0].time < w[1].time));
}

#[test]
fn survival_table_application_values() {
    let rows = survival_table(&geo_app(), &[0.0, 6.0, 12.0, 18.0]).unwrap();
    let want = [0.9546, 0.6182, 0.3753, 0.2616];
    for (r, w) in rows.iter().zip(want) {
        assert!(
            (r.survival - w).abs() <= 5e-4,
            "t={}: {}",
            r.time,
            r.survival
        );
    }
    let text = format_survival_table(&rows);
    for pct in ["95.46%", "61.82%", "26.16%"] {
        assert!(text.contains(pct), "{text}");
    }
    let ends = survival_table(&geo_app(), &[0.0, 1e12]).unwrap();
    assert!((ends[0].survival - (1.0 - geo_app().zero_fraction())).abs() < 1e-15);
    assert!((ends[1].survival - geo_app().cure_fraction()).abs() < 1e-15);
}

#[test]
fn csv_round_trip_and_large_file() {
    let dir = tempfile::tempdir().unwrap();
    let m = geo_app();
    let d = sample_dataset(&m, 7062, &calibrate_uniform_censoring(&m, 0.2).unwrap(), 22).unwrap();
    let path = write_csv(&dir, "app.csv", &d);
    let start = Instant::now();
    let back = load_dataset(path.as_ref()).unwrap();
    assert!(start.elapsed().as_secs_f64() < 1.0);
    assert_eq!(back, d);
    let with_inf = SurvivalDataset::from_pairs(&[(0.0, 1), (3.0, 1)]).unwrap();
    let mut obs = with_inf.observations().to_vec();
    obs.push(zacr::Observation::censored(f64::INFINITY));
    let d = SurvivalDataset::new(obs).unwrap();
    let mut buf = Vec::new();
    write_dataset(&d, &mut buf).unwrap();
    assert_eq!(read_dataset(buf.as_slice()).unwrap(), d);
}

#[test]
fn csv_rejections_carry_line_numbers() {
    match read_dataset("time,status\n0,1\n5.2,1\n0,0\n".as_bytes()) {
        Err(ZacrError::Data { line: Some(4), msg }) => {
            assert!(msg.contains("zero-time observation cannot be censored"))
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(
        read_dataset("status,time\n1,1\n".as_bytes()),
        Err(ZacrError::Data { line: Some(1), .. })
    ));
    assert!(matches!(
        read_dataset("time,status\n1,1\ninf,1\n".as_bytes()),
        Err(ZacrError::Data { line: Some(3), .. })
    ));
}

#[test]
fn cli_fit_emits_estimates_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let m = geo_app();
    let d = sample_dataset(&m, 3000, &calibrate_uniform_censoring(&m, 0.2).unwrap(), 23).unwrap();
    let path = write_csv(&dir, "geo.csv", &d);
    let out = zacr(&["fit", "--input", &path, "--variant", "geo", "--json", "-"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["variant"], "geo");
    assert_eq!(v["eta"].as_f64(), Some(1.0));
    assert_eq!(v["estimates"].as_array().unwrap().len(), 4);
    assert!(v["std_errors"]
        .as_array()
        .unwrap()
        .iter()
        .all(|s| s.as_f64().unwrap() > 0.0));
    for key in ["log_lik", "aic", "converged", "param_names", "covariance"] {
        assert!(!v[key].is_null(), "{key}");
    }
    // 17 significant digits
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("e0,") || text.contains("e0\n"), "{text}");

    let text_out = zacr(&["fit", "--input", &path, "--variant", "geo"]);
    let table = String::from_utf8(text_out.stdout).unwrap();
    assert!(table.contains("alpha0") && table.contains("AIC"), "{table}");

    let nb_without_eta = zacr(&["fit", "--input", &path, "--variant", "nb"]);
    assert_eq!(nb_without_eta.status.code(), Some(2));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "time,status\n1,1\n0,0\n").unwrap();
    let out = zacr(&["fit", "--input", bad.to_str().unwrap(), "--variant", "geo"]);
    assert_eq!(out.status.code(), Some(3));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "data");
    assert_eq!(err["line"], 3);

    let missing = zacr(&[
        "fit",
        "--input",
        "/nonexistent/file.csv",
        "--variant",
        "geo",
    ]);
    assert_eq!(missing.status.code(), Some(3));

    assert_eq!(zacr(&["fit", "--bogus"]).status.code(), Some(2));
    assert_eq!(zacr(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn cli_simulate_and_mc_study_are_reproducible() {
    let sim = |seed: &str| {
        zacr(&[
            "simulate",
            "--variant",
            "promotion",
            "--params",
            "1.2,2.3",
            "--n",
            "300",
            "--target-censoring",
            "0.372",
            "--seed",
            seed,
        ])
    };
    let (a, b, c) = (sim("4"), sim("4"), sim("5"));
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let d = read_dataset(a.stdout.as_slice()).unwrap();
    assert_eq!(d.len(), 300);

    let mc = || {
        zacr(&[
            "mc-study",
            "--variant",
            "mixture",
            "--n",
            "200",
            "--B",
            "20",
            "--seed",
            "7",
            "--json",
            "-",
        ])
    };
    let (x, y) = (mc(), mc());
    assert!(x.status.success(), "{}", String::from_utf8_lossy(&x.stderr));
    assert_eq!(x.stdout, y.stdout);
    let v: serde_json::Value = serde_json::from_slice(&x.stdout).unwrap();
    assert_eq!(v["B"], 20);
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);
    assert_eq!(v["rows"][2]["name"], "p0");

    let text = zacr(&[
        "mc-study",
        "--variant",
        "mixture",
        "--n",
        "100",
        "--B",
        "5",
        "--seed",
        "7",
    ]);
    let text = String::from_utf8(text.stdout).unwrap();
    assert!(
        text.contains("bias") && text.contains("rmse") && text.contains("sigma"),
        "{text}"
    );
}

#[test]
fn cli_compare_km_and_curves() {
    let dir = tempfile::tempdir().unwrap();
    let m = geo_app();
    let d = sample_dataset(&m, 2000, &calibrate_uniform_censoring(&m, 0.2).unwrap(), 24).unwrap();
    let path = write_csv(&dir, "geo.csv", &d);
    let json_path = dir.path().join("bundle.json");
    let out = zacr(&[
        "compare",
        "--input",
        &path,
        "--json",
        json_path.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("AIC ranking") && text.contains('%'), "{text}");
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(v["fits"].as_array().unwrap().len(), 4);
    let ranking: Vec<&str> = v["aic_ranking"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s.as_str().unwrap())
        .collect();
    let mut sorted = ranking.clone();
    sorted.sort();
    assert_eq!(sorted, ["geo", "mixture", "nb", "promotion"]);
    let aics: Vec<f64> = ranking
        .iter()
        .map(|r| {
            v["fits"]
                .as_array()
                .unwrap()
                .iter()
                .find(|f| f["variant"] == *r)
                .unwrap()["aic"]
                .as_f64()
                .unwrap()
        })
        .collect();
    assert!(aics.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(v["survival_table"][0]["rows"].as_array().unwrap().len(), 4);

    let km = zacr(&["km", "--input", &path]);
    let km_text = String::from_utf8(km.stdout).unwrap();
    let mut lines = km_text.lines();
    assert_eq!(lines.next(), Some("time,survival,at_risk,events,censored"));
    assert!(lines.next().unwrap().starts_with("0,"));

    let curves_path = dir.path().join("curves.csv");
    let cv = zacr(&[
        "curves",
        "--input",
        &path,
        "--grid-points",
        "11",
        "--output",
        curves_path.to_str().unwrap(),
    ]);
    assert!(cv.status.success());
    let csv = std::fs::read_to_string(&curves_path).unwrap();
    assert_eq!(csv.lines().next(), Some("time,km,mixture,promotion,nb,geo"));
    assert_eq!(csv.lines().count(), 12);
}
