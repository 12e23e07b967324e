use std::path::Path;
use std::process::{Command, Output};

use quadreg_cli::io::{read_json, to_canonical_json, write_json, FactorFile, PartitionFile, SetFile};
use quadreg_cli::verify::{planted_factor, planted_union, space3};

fn quadreg(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quadreg")).args(args).current_dir(dir).output().expect("binary runs")
}

fn planted_set(dir: &Path) {
    let space = space3(3);
    write_json(&dir.join("a.json"), &SetFile::from_set(&space, &planted_union(&space))).unwrap();
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["gen", "--kind", "random", "--p", "3", "--n", "2", "--density", "0.5", "--seed", "7"];
    let a = quadreg(&args, dir.path());
    let b = quadreg(&args, dir.path());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let set: SetFile = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(to_canonical_json(&set).unwrap().as_bytes(), a.stdout.as_slice());
}

#[test]
fn gen_coset_is_hyperplane() {
    let dir = tempfile::tempdir().unwrap();
    let out = quadreg(&["gen", "--kind", "coset", "--p", "3", "--n", "2", "--vectors", "1,0", "--offsets", "1"], dir.path());
    let set: SetFile = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(set.members, vec![1, 4, 7]);
}

#[test]
fn decompose_is_deterministic_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    planted_set(dir.path());
    for (mode, out) in [("cylinder", "c1"), ("cylinder", "c2"), ("global", "g"), ("main", "m")] {
        let r = quadreg(&["decompose", "--mode", mode, "--set", "a.json", "--delta", "0.4", "--out", out], dir.path());
        assert_eq!(r.status.code(), Some(0), "{mode}: {}", String::from_utf8_lossy(&r.stderr));
    }
    for f in ["partition.json", "trace.csv"] {
        let a = std::fs::read(dir.path().join("c1").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("c2").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs between identical runs");
    }
    for out in ["c1", "g", "m"] {
        let path = dir.path().join(out).join("partition.json");
        let part: PartitionFile = read_json(&path).unwrap();
        part.check().unwrap();
        assert_eq!(to_canonical_json(&part).unwrap(), std::fs::read_to_string(&path).unwrap());
    }
    let assembly: serde_json::Value = read_json(&dir.path().join("m").join("assembly.json")).unwrap();
    assert_eq!(assembly["sym_diff"], 0);
}

#[test]
fn factor_file_round_trips() {
    let f = planted_factor(&space3(3));
    let file = FactorFile::from_factor(&f);
    let back: FactorFile = serde_json::from_str(&to_canonical_json(&file).unwrap()).unwrap();
    assert_eq!(back.to_factor().unwrap(), f);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    planted_set(dir.path());
    let budget = quadreg(&["decompose", "--mode", "cylinder", "--set", "a.json", "--delta", "0.4", "--max-steps", "0", "--out", "o"], dir.path());
    assert_eq!(budget.status.code(), Some(3));
    let part: PartitionFile = read_json(&dir.path().join("o").join("partition.json")).unwrap();
    assert_eq!(part.status, "budget-exceeded");
    assert_eq!(quadreg(&["decompose", "--mode", "cylinder"], dir.path()).status.code(), Some(64));
    assert_eq!(quadreg(&["verify", "--level", "never"], dir.path()).status.code(), Some(64));
    let bad_delta = quadreg(&["decompose", "--mode", "cylinder", "--set", "a.json", "--delta", "1.5", "--out", "o"], dir.path());
    assert_eq!(bad_delta.status.code(), Some(64));
    assert_eq!(quadreg(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn vc2_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    planted_set(dir.path());
    let out = quadreg(&["vc2", "--set", "a.json", "--kmax", "3"], dir.path());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!((v["vc_dim"].as_u64(), v["vc2_dim"].as_u64()), (Some(3), Some(1)));
    assert!(v["witnesses"]["vc2"]["c"].is_array());

    let t = quadreg(&["chain-bounds", "--rho", "linear:1", "--max-len", "2"], dir.path());
    let text = String::from_utf8(t.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("sigma,length,ones,disc,a,b"));
    assert!(text.contains("+-,2,1,0,3,0"));
    assert_eq!(text.lines().count(), 1 + 1 + 2 + 4);

    let f = dir.path().join("f.json");
    write_json(&f, &FactorFile::from_factor(&planted_factor(&space3(3)))).unwrap();
    let n = quadreg(&["norms", "--set", "a.json", "--factor", "f.json"], dir.path());
    let text = String::from_utf8(n.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("label,atom_size,omega_count,omega_predicted,normP8,normTW8,diff"));
    assert_eq!(text.lines().count(), 10);
}
