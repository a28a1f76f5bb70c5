use std::path::{Path, PathBuf};

use frametime::cli::run;

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn call(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("frametime").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let ch_cfg = configs().join("characterization.toml");
    let rt_cfg = configs().join("runtime.toml");
    let ch = dir.path().join("ch.csv");
    let rt = dir.path().join("rt.csv");
    let spec = dir.path().join("spec.toml");

    let (code, out, _) = call(&["characterize", "--config", s(&ch_cfg), "--out", s(&ch)]);
    assert_eq!(code, 0);
    assert!(out.contains("5760 rows"));

    let (code, out, _) = call(&[
        "select-features",
        "--trace",
        s(&ch),
        "--config",
        s(&ch_cfg),
        "--rule",
        "one_se",
        "--out",
        s(&spec),
    ]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("eta,cv_mse,cv_std_err,features"));
    assert!(out.contains("busy: r = ") && out.contains("dropped"));
    let spec_text = std::fs::read_to_string(&spec).unwrap();
    assert!(spec_text.contains("\"vs\"") && spec_text.contains("\"zfail\""));

    let (code, ..) = call(&["characterize", "--config", s(&rt_cfg), "--out", s(&rt)]);
    assert_eq!(code, 0);
    for algo in ["rls", "dcd", "arlms"] {
        let out_path = dir.path().join(format!("{algo}.csv"));
        let (code, out, err) = call(&[
            "replay",
            "--trace",
            s(&rt),
            "--config",
            s(&rt_cfg),
            "--spec",
            s(&spec),
            "--algo",
            algo,
            "--out",
            s(&out_path),
        ]);
        assert_eq!(code, 0, "{err}");
        assert!(out.contains("mape_pct,"));
        let table = std::fs::read_to_string(&out_path).unwrap();
        assert!(table.starts_with("k,f_k,t_actual,t_pred,abs_pct_err,dtf_df\n"));
    }

    let sens = dir.path().join("sens.csv");
    let (code, out, err) = call(&[
        "sensitivity",
        "--trace",
        s(&rt),
        "--config",
        s(&rt_cfg),
        "--spec",
        s(&spec),
        "--jumps",
        "20",
        "--out",
        s(&sens),
    ]);
    assert_eq!(code, 0);
    assert!(err.contains("clipped to 8"));
    assert!(out.contains("derivative_nrmse_pct,") && out.contains("jump_8_mape_pct,"));
    let header = std::fs::read_to_string(&sens).unwrap();
    assert!(header.starts_with("k,f_k,t_actual,dtf_df,method,t_at_-8,"));
}

#[test]
fn govern_reports_every_policy() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("gov.csv");
    let cfg = configs().join("governor_heavy.toml");
    let (code, out, _) = call(&["govern", "--config", s(&cfg), "--out", s(&out_path)]);
    assert_eq!(code, 0);
    assert!(out.contains("heavy-sine,oracle,") && out.contains("suite_mean,ondemand,"));
    let rows = std::fs::read_to_string(&out_path).unwrap();
    assert!(rows.starts_with("workload,k,policy,f,t_frame,energy_j,violation\n"));
    assert_eq!(rows.lines().filter(|l| l.contains(",total,")).count(), 12);

    let (code, out, _) = call(&[
        "govern",
        "--config",
        s(&cfg),
        "--policy",
        "ondemand",
        "--seed",
        "3",
        "--out",
        s(&out_path),
    ]);
    assert_eq!(code, 0);
    assert!(!out.contains(",oracle,"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");

    let (code, _, err) = call(&[
        "replay",
        "--trace",
        "/no/such/file",
        "--spec",
        "x",
        "--out",
        s(&out),
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("/no/such/file"));

    assert_eq!(call(&["frobnicate"]).0, 2);
    assert_eq!(call(&["replay", "--trace"]).0, 2);
    assert_eq!(call(&["--help"]).0, 0);

    let single = dir.path().join("single.csv");
    let mut text = String::from("time,frame_time_ms,frame_count,gpu_freq_mhz,a,b\n");
    for k in 0..20 {
        text += &format!(
            "{},{},3,400,{},{}\n",
            k as f64 * 0.05,
            10.0 + k as f64 % 3.0,
            100 + k,
            50 + 2 * k
        );
    }
    std::fs::write(&single, &text).unwrap();
    let (code, _, err) = call(&["select-features", "--trace", s(&single), "--out", s(&out)]);
    assert_eq!(code, 3, "{err}");

    let spec = dir.path().join("spec.toml");
    std::fs::write(
        &spec,
        "counter_indices = [1]\ncounter_names = [\"zfail\"]\n",
    )
    .unwrap();
    let (code, _, err) = call(&[
        "replay",
        "--trace",
        s(&single),
        "--spec",
        s(&spec),
        "--out",
        s(&out),
    ]);
    assert_eq!(code, 4, "{err}");

    let cfg = configs().join("governor_light.toml");
    let (code, _, err) = call(&[
        "govern",
        "--config",
        s(&cfg),
        "--policy",
        "oracle",
        "--trace",
        s(&single),
        "--out",
        s(&out),
    ]);
    assert_eq!(code, 5);
    assert!(err.contains("oracle"));

    let (code, ..) = call(&[
        "govern",
        "--config",
        s(&cfg),
        "--policy",
        "magic",
        "--out",
        s(&out),
    ]);
    assert_eq!(code, 2);
}

#[test]
fn binary_exits_with_the_run_code() {
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_frametime"))
        .args([
            "replay",
            "--trace",
            "/no/such/file",
            "--spec",
            "x",
            "--out",
            "y",
        ])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
}
