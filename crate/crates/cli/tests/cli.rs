//! Black-box runs of the binary: output shapes, frozen values, error exit
//! codes, and byte determinism under different worker caps.

use serde_json::Value;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const L4_SPEC: &str = "\
# uniform measure on the order types of a four point chain
structure linear-order 4
formula x < y
objects x
params y
measure mu uniform
epsilons 1/2 1/4
sizes 4 16
trials 40
seed 42
";

const CUT_SPEC: &str = "\
structure linear-order 10
formula x < y
objects x
params y
atom dlo-cut 5 +
measure p dirac 0
left p
right p
";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_keisler-lab"))
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("keisler-lab-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_spec(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("experiment.spec");
    fs::write(&path, body).unwrap();
    path
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().unwrap();
    assert!(
        out.status.success(),
        "command {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json_file(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn dep_prints_the_frozen_ladder() {
    let dir = scratch("dep");
    let spec = write_spec(&dir, L4_SPEC);
    run_ok(&[
        "dep",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    let got = fs::read_to_string(dir.join("dep.csv")).unwrap();
    let want = "\
k,dk_mass_num,dk_mass_den,ratio_num,ratio_den,tuple_count,total_tuples,distinct_rows,column_count,empty_by_column_bound,zero_by_monotonicity,uniform_fast_path,rank
1,3,4,3,4,3,4,4,4,false,false,true,1
2,0,1,0,1,0,16,4,4,false,false,true,1
3,0,1,0,1,0,64,4,4,true,true,false,1
";
    assert_eq!(got, want);
}

#[test]
fn vc_reports_dimension_and_growth() {
    let dir = scratch("vc");
    let spec = write_spec(&dir, L4_SPEC);
    run_ok(&[
        "vc",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    let v = json_file(&dir.join("vc.json"));
    assert_eq!(v["vc_dim"], 1);
    assert_eq!(v["nip_threshold"], 2);
    assert_eq!(v["exhaustive"], true);
    assert_eq!(v["distinct_rows"], 4);
}

#[test]
fn morley_emits_value_fibers_and_chain() {
    let dir = scratch("morley");
    let spec = write_spec(&dir, L4_SPEC);
    run_ok(&[
        "morley",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    let v = json_file(&dir.join("morley.json"));
    assert_eq!(v["value"]["num"], "3");
    assert_eq!(v["value"]["den"], "8");
    assert_eq!(v["order_invariant"], true);
    assert_eq!(v["fiber_well_defined"], true);
    assert_eq!(v["fibers"].as_array().unwrap().len(), 4);
    assert_eq!(v["chain"]["within"], true);
    assert_eq!(v["chain"]["total_error"]["num"], "0");
}

#[test]
fn commute_flags_the_ordered_cut_pair() {
    let dir = scratch("commute");
    let spec = write_spec(&dir, CUT_SPEC);
    run_ok(&[
        "commute",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    let v = json_file(&dir.join("commute.json"));
    assert_eq!(v["forward"]["num"], "1");
    assert_eq!(v["forward"]["den"], "1");
    assert_eq!(v["backward"]["num"], "0");
    assert_eq!(v["commutes"], false);
}

#[test]
fn fim_certifies_the_uniform_ladder() {
    let dir = scratch("fim");
    let spec = write_spec(&dir, L4_SPEC);
    run_ok(&[
        "fim",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    let v = json_file(&dir.join("fim.json"));
    assert_eq!(v["masses_certified"], true);
    assert_eq!(v["rank"], 1);
    let verdicts = v["verdicts"].as_array().unwrap();
    assert_eq!(verdicts.len(), 2);
    assert!(verdicts.iter().all(|x| x["valid"] == true));
}

#[test]
fn scenario_panel_passes_and_lists() {
    let dir = scratch("scenario");
    run_ok(&["scenario", "dlo-coheirs", "--out", dir.to_str().unwrap()]);
    let v = json_file(&dir.join("scenario-dlo-coheirs.json"));
    assert_eq!(v["all_checks_pass"], true);
    let fields = v["fields"].as_array().unwrap();
    let field = |name: &str| {
        fields
            .iter()
            .find(|f| f["name"] == name)
            .unwrap_or_else(|| panic!("missing field {name}"))["value"]
            .clone()
    };
    assert_eq!(field("p_tensor_q")["num"], "1");
    assert_eq!(field("q_tensor_p")["num"], "0");

    let out = run_ok(&["scenario", "--list"]);
    let listed = String::from_utf8(out.stdout).unwrap();
    for name in [
        "dlo-coheirs",
        "l4-uniform",
        "bernoulli-cube",
        "random-graph-trivial",
    ] {
        assert!(listed.contains(name), "missing {name} in {listed}");
    }
}

#[test]
fn gc_table_is_identical_across_worker_caps() {
    let dir = scratch("gc-caps");
    let spec = write_spec(&dir, L4_SPEC);
    let mut tables = Vec::new();
    for cap in ["1", "3", "8"] {
        let out_dir = dir.join(format!("cap{cap}"));
        let out = bin()
            .args([
                "gc",
                "--spec",
                spec.to_str().unwrap(),
                "--out",
                out_dir.to_str().unwrap(),
            ])
            .env("KEISLER_LAB_THREADS", cap)
            .output()
            .unwrap();
        assert!(out.status.success());
        tables.push(fs::read(out_dir.join("gc.csv")).unwrap());
    }
    assert_eq!(tables[0], tables[1]);
    assert_eq!(tables[0], tables[2]);
    let header = String::from_utf8_lossy(&tables[0]);
    assert!(header.starts_with("n,trial,sup_dev_num,sup_dev_den\n"));
    assert!(header.contains("\n4,mean,"));
    assert!(header.contains("\n4,max,"));
}

#[test]
fn broken_inputs_exit_with_code_two() {
    let dir = scratch("errors");
    let missing = bin()
        .args(["dep", "--spec", dir.join("nope.spec").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));

    let bad_key = write_spec(&dir, "structur linear-order 4\n");
    let out = bin()
        .args(["dep", "--spec", bad_key.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));

    let bad_formula = write_spec(
        &dir,
        "structure linear-order 4\nformula x <\nobjects x\nparams y\n",
    );
    let out = bin()
        .args(["vc", "--spec", bad_formula.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = bin().args(["scenario", "no-such-panel"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let no_eps = write_spec(
        &dir,
        "structure linear-order 4\nformula x < y\nobjects x\nparams y\n",
    );
    let out = bin()
        .args(["fim", "--spec", no_eps.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exhausted_budgets_exit_with_code_three() {
    let dir = scratch("budget");
    let spec = write_spec(&dir, L4_SPEC);
    let out = bin()
        .args([
            "dep",
            "--spec",
            spec.to_str().unwrap(),
            "--budget-tuples",
            "2",
            "--out",
            dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}
