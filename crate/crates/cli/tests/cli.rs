use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn kbmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kbmap")).args(args).output().expect("binary runs")
}

fn fixture(name: &str, file: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name).join(file).display().to_string()
}

fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn generate(fx: &str, out: &Path) -> Output {
    kbmap(&[
        "generate",
        "--source",
        &fixture(fx, "source.nt"),
        "--source",
        &fixture(fx, "source_instances.nt"),
        "--target",
        &fixture(fx, "target.nt"),
        "--alignment",
        &fixture(fx, "alignment.json"),
        "--count-all",
        "--out",
        out.to_str().unwrap(),
    ])
}

#[test]
fn missing_alignment_fails_at_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = kbmap(&[
        "generate",
        "--source",
        &fixture("running", "source.nt"),
        "--target",
        &fixture("running", "target.nt"),
        "--alignment",
        dir.path().join("absent.json").to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("stage=config"), "{err}");
    assert!(err.contains("absent.json"), "{err}");
}

#[test]
fn generate_is_byte_for_byte_repeatable() {
    for fx in ["running", "offices"] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        assert!(generate(fx, a.path()).status.success());
        assert!(generate(fx, b.path()).status.success());
        let (ta, tb) = (tree(a.path()), tree(b.path()));
        assert!(ta.keys().any(|k| k.starts_with("queries")));
        assert_eq!(ta, tb, "{fx}");
    }
}

#[test]
fn synth_writes_fifteen_concepts_per_side() {
    let dir = tempfile::tempdir().unwrap();
    let out = kbmap(&["synth", "--L", "3", "--C", "2", "--D", "10", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for side in ["source.nt", "target.nt"] {
        let text = fs::read_to_string(dir.path().join(side)).unwrap();
        let classes = text.lines().filter(|l| l.ends_with("<http://www.w3.org/2002/07/owl#Class> .")).count();
        assert_eq!(classes, 15, "{side}");
    }
    let bad = kbmap(&["synth", "--L", "1", "--C", "0", "--D", "1", "--out", dir.path().join("x").to_str().unwrap()]);
    assert!(!bad.status.success());
}

#[test]
fn exchange_groups_office_contacts() {
    let dir = tempfile::tempdir().unwrap();
    assert!(generate("offices", dir.path()).status.success());
    let q = dir.path().join("queries/001_Office__Office.rq");
    assert!(q.is_file(), "{:?}", tree(dir.path()).keys().collect::<Vec<_>>());
    let out = kbmap(&["exchange", "--mapping", q.to_str().unwrap(), "--source", &fixture("offices", "source_instances.nt")]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let contacts = text.lines().filter(|l| l.contains("trgt#contact>")).count();
    assert_eq!(contacts, 3, "{text}");

    let empty = dir.path().join("empty.nt");
    fs::write(&empty, "").unwrap();
    let out = kbmap(&["exchange", "--mapping", q.to_str().unwrap(), "--source", empty.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
}

#[test]
fn exchange_reports_query_errors_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let q = dir.path().join("bad.rq");
    fs::write(&q, "CONSTRUCT { ?s ?p ?o }\nWHERE {\n  ?s ?p ?o .\n  FILTER(?o = 1)\n}\n").unwrap();
    let out = kbmap(&["exchange", "--mapping", q.to_str().unwrap(), "--source", &fixture("offices", "source_instances.nt")]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("stage=exchange") && err.contains("4"), "{err}");
}

#[test]
fn fragment_depth_zero_keeps_aligned_elements() {
    let out = kbmap(&["fragment", "--source", &fixture("offices", "target.nt"), "--alignment", &fixture("offices", "alignment.json"), "--side", "target", "--depth", "0"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("trgt#Office>") && text.contains("trgt#Contact>") && text.contains("trgt#phone>"));
    assert!(!text.contains("trgt#contact>"), "{text}");
}
