mod common;

use std::collections::BTreeSet;

use common::*;
use proptest::prelude::*;
use runjob::builtins::RunMode;
use runjob::macro_lang::execute_script;
use runjob::scriptgen::{composite_header, DagFile, ScriptKind, COMPOSITE_FOOTER, DAG, SHELL};
use runjob::{Error, Linker};

fn run(linker: &Linker, script: &str) {
    execute_script(linker, script).unwrap();
}

fn steps(linker: &Linker, names: &[&str], deps: &[(&str, &str)]) {
    let mut script = String::from("attach ShellScriptGen\nattach DagGen\n");
    for n in names {
        script.push_str(&format!(
            "attach Step named {n}\ncfg Step named {n} define Executable /bin/true\n"
        ));
    }
    for (parent, child) in deps {
        script.push_str(&format!(
            "cfg Step named {child} addreq Step named {parent}\n"
        ));
    }
    script.push_str("cfg ShellScriptGen register Step\n");
    run(linker, &script);
}

fn materialize_all(linker: &Linker) {
    for obj in linker.script_objects() {
        linker.materialize(&obj).unwrap();
    }
}

fn dag(linker: &Linker) -> DagFile {
    let objs = linker.collect_script_objects(DAG, |o| o.kind == ScriptKind::Dag);
    assert_eq!(objs.len(), 1);
    DagFile::parse(&objs[0].payload).expect("well-formed dag")
}

fn edge_set(d: &DagFile) -> BTreeSet<(String, String)> {
    d.edges.iter().cloned().collect()
}

fn job_edges(pairs: &[(&str, &str)]) -> BTreeSet<(String, String)> {
    pairs
        .iter()
        .map(|(p, c)| (format!("job_{p}"), format!("job_{c}")))
        .collect()
}

#[test]
fn register_applies_to_existing_and_future_delegators() {
    let linker = Linker::new();
    run(&linker, "attach ShellScriptGen\nattach Step named A\ncfg ShellScriptGen register Step\nattach Step named B");
    for name in ["Step named A", "Step named B"] {
        let cfg = linker.get(name).unwrap();
        assert_eq!(
            cfg.delegation("MakeJob").unwrap().to_string(),
            "ShellScriptGen"
        );
        assert!(cfg
            .dynamic_requirements()
            .iter()
            .any(|r| r.type_name == "ShellScriptGen"));
    }
}

#[test]
fn register_twice_is_idempotent() {
    let linker = Linker::new();
    run(
        &linker,
        "attach ShellScriptGen\nattach Step named A\n\
         cfg Step named A define Executable /bin/true\n\
         cfg ShellScriptGen register Step\ncfg ShellScriptGen register Step",
    );
    let a = linker.get("Step named A").unwrap();
    assert_eq!(a.dynamic_requirements().len(), 1);
    linker.run_messages(&["Reset", "MakeJob"]).unwrap();
    assert_eq!(
        linker
            .collect_script_objects(SHELL, |o| o.kind == ScriptKind::Fragment)
            .len(),
        1
    );
}

#[test]
fn register_rejects_bad_types() {
    let linker = Linker::new();
    run(&linker, "attach ShellScriptGen\nattach Fork");
    let err = execute_script(&linker, "cfg ShellScriptGen register Ghost").unwrap_err();
    assert!(matches!(err.root(), Error::UnknownType(t) if t == "Ghost"));
    let err = execute_script(&linker, "cfg ShellScriptGen register Fork").unwrap_err();
    assert!(matches!(err.root(), Error::UnsupportedDelegator { .. }));
    let err = execute_script(&linker, "cfg Fork register Step").unwrap_err();
    assert!(matches!(err.root(), Error::UnknownMacro(_)));
    assert!(linker.get("Fork").unwrap().delegation("MakeJob").is_none());
}

#[test]
fn failed_fragment_leaves_no_object() {
    let linker = Linker::new();
    run(
        &linker,
        "attach ShellScriptGen\nattach Step named A\ncfg ShellScriptGen register Step",
    );
    let err = linker.run_messages(&["Reset", "MakeJob"]).unwrap_err();
    assert!(matches!(err.root(), Error::MissingValue { key, .. } if key == "Executable"));
    assert!(linker.script_objects().is_empty());
}

#[test]
fn fragment_ids_are_unique_per_delegator() {
    let linker = hello_linker();
    linker.run_messages(&["Reset", "MakeJob"]).unwrap();
    let ids: Vec<String> = linker.script_objects().into_iter().map(|o| o.id).collect();
    assert_eq!(ids, ["job_English", "job_French", "job_German"]);
}

#[test]
fn fragment_ids_fall_back_to_type_prefix_on_collision() {
    let linker = Linker::new();
    run(
        &linker,
        "attach ShellScriptGen\nattach Step named X\nattach HelloWorld named X\n\
         cfg Step named X define Executable /bin/true\n\
         cfg HelloWorld named X define HelloMessage hi\n\
         cfg ShellScriptGen register Step\ncfg ShellScriptGen register HelloWorld",
    );
    linker.run_messages(&["Reset", "MakeJob"]).unwrap();
    let ids: BTreeSet<String> = linker.script_objects().into_iter().map(|o| o.id).collect();
    assert_eq!(ids.len(), 2);
}

#[test]
fn composite_concatenates_fragments_in_order() {
    let linker = Linker::new();
    load(&linker, "chain.mac");
    linker
        .run_messages(&["Reset", "MakeJob", "MakeScript"])
        .unwrap();
    let composite = &linker.collect_script_objects(SHELL, |o| o.kind == ScriptKind::Composite)[0];
    let a = composite.payload.find("# job_A").unwrap();
    let b = composite.payload.find("# job_B").unwrap();
    let c = composite.payload.find("# job_C").unwrap();
    assert!(a < b && b < c);
    assert!(composite.payload.ends_with(COMPOSITE_FOOTER));
}

#[test]
fn chain_composite_executes_steps_in_order() {
    let linker = Linker::new();
    load(&linker, "chain.mac");
    let out = tempfile::tempdir().unwrap();
    linker.set_output_dir(out.path());
    linker.set_run_mode(RunMode::DryRun);
    linker
        .run_messages(&["Reset", "MakeJob", "MakeScript", "RunJob"])
        .unwrap();

    let b = linker.get("Step named B").unwrap();
    let a = linker.get("Step named A").unwrap();
    assert_eq!(
        b.resolve_value("InputFile", &linker).unwrap(),
        a.resolve_value("OutputFile", &linker).unwrap()
    );

    materialize_all(&linker);
    let (code, _) = run_sh(&out.path().join("composite_ShellScriptGen.sh"), out.path());
    assert_eq!(code, 0);
    for f in ["a.out", "b.out", "c.out"] {
        let text = std::fs::read_to_string(out.path().join(f)).unwrap();
        assert_eq!(text, "step-A\n", "{f}");
    }
}

#[test]
fn empty_composite_still_exits_zero() {
    let linker = Linker::new();
    let out = tempfile::tempdir().unwrap();
    linker.set_output_dir(out.path());
    run(&linker, "attach ShellScriptGen");
    linker
        .run_messages(&["Reset", "MakeJob", "MakeScript"])
        .unwrap();
    materialize_all(&linker);
    let composite = &linker.script_objects()[0];
    let sg = linker.get("ShellScriptGen").unwrap();
    assert_eq!(
        composite.payload,
        format!("{}{}", composite_header(sg.description()), COMPOSITE_FOOTER)
    );
    let (code, stdout) = run_sh(&out.path().join("composite_ShellScriptGen.sh"), out.path());
    assert_eq!((code, stdout.as_str()), (0, ""));
}

#[test]
fn dag_chain_has_two_edges() {
    let linker = Linker::new();
    load(&linker, "chain.mac");
    run(&linker, "attach DagGen");
    linker
        .run_messages(&["Reset", "MakeJob", "MakeScript"])
        .unwrap();
    let d = dag(&linker);
    assert_eq!(d.jobs.len(), 3);
    assert_eq!(edge_set(&d), job_edges(&[("A", "B"), ("B", "C")]));
}

#[test]
fn dag_diamond_has_four_edges() {
    let linker = Linker::new();
    steps(
        &linker,
        &["A", "B", "C", "D"],
        &[("A", "B"), ("A", "C"), ("B", "D"), ("C", "D")],
    );
    linker
        .run_messages(&["Reset", "MakeJob", "MakeScript"])
        .unwrap();
    assert_eq!(
        edge_set(&dag(&linker)),
        job_edges(&[("A", "B"), ("A", "C"), ("B", "D"), ("C", "D")])
    );
}

#[test]
fn dag_independent_steps_have_no_edges() {
    let linker = Linker::new();
    steps(&linker, &["A", "B", "C"], &[]);
    linker
        .run_messages(&["Reset", "MakeJob", "MakeScript"])
        .unwrap();
    let d = dag(&linker);
    assert_eq!(d.jobs.len(), 3);
    assert!(d.edges.is_empty());
}

#[test]
fn dag_rejects_cycles() {
    let linker = Linker::new();
    steps(&linker, &["A", "B"], &[("A", "B"), ("B", "A")]);
    let err = linker
        .run_messages(&["Reset", "MakeJob", "MakeScript"])
        .unwrap_err();
    let Error::CyclicWorkflow(nodes) = err.root() else {
        panic!("{err}")
    };
    assert_eq!(nodes, &["job_A", "job_B"]);
    assert!(linker.collect_script_objects(DAG, |_| true).is_empty());
}

#[test]
fn dag_jobs_point_at_materialized_fragments() {
    let linker = Linker::new();
    steps(&linker, &["A", "B"], &[("A", "B")]);
    let out = tempfile::tempdir().unwrap();
    linker.set_output_dir(out.path());
    linker
        .run_messages(&["Reset", "MakeJob", "MakeScript"])
        .unwrap();
    materialize_all(&linker);
    for (_, file) in dag(&linker).jobs {
        let (code, _) = run_sh(&out.path().join(file), out.path());
        assert_eq!(code, 0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn dag_is_isomorphic_to_requirement_graph(
        n in 1usize..7,
        bits in proptest::collection::vec(any::<bool>(), 21),
    ) {
        let names: Vec<String> = (0..n).map(|i| format!("S{i}")).collect();
        let mut deps = Vec::new();
        let mut k = 0;
        for j in 0..n {
            for i in 0..j {
                if bits[k] {
                    deps.push((names[i].as_str(), names[j].as_str()));
                }
                k += 1;
            }
        }
        let linker = Linker::new();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        steps(&linker, &refs, &deps);
        linker.run_messages(&["Reset", "MakeJob", "MakeScript"]).unwrap();
        let d = dag(&linker);
        prop_assert_eq!(d.jobs.len(), n);
        prop_assert_eq!(edge_set(&d), job_edges(&deps));
    }
}
