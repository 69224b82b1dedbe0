mod common;

use common::*;
use proptest::prelude::*;
use runjob::macro_lang::{check_file, execute_script, parse_text, tokenize, Interpreter};
use runjob::{Error, Linker};

fn instances(linker: &Linker) -> Vec<String> {
    linker
        .configurators()
        .iter()
        .map(|c| c.description().to_string())
        .collect()
}

#[test]
fn loop_attaches_numbered_instances() {
    let linker = Linker::new();
    execute_script(
        &linker,
        "loop i 1 3\n  attach Step named run$(i)\n  cfg Step named run$(i) define OutputFile out$(i).txt\nendloop",
    )
    .unwrap();
    assert_eq!(
        instances(&linker),
        ["Step named run1", "Step named run2", "Step named run3"]
    );
    let run2 = linker.get("Step named run2").unwrap();
    assert_eq!(
        run2.resolve_value("OutputFile", &linker).unwrap(),
        "out2.txt"
    );
}

#[test]
fn empty_range_runs_zero_times() {
    let linker = Linker::new();
    execute_script(&linker, "loop i 3 1\n  attach Step named run$(i)\nendloop").unwrap();
    assert!(linker.configurators().is_empty());
}

#[test]
fn nested_loops_shadow_outer_variable() {
    let linker = Linker::new();
    execute_script(
        &linker,
        "loop i 1 2\n  loop j 1 2\n    attach Step named s$(i)_$(j)\n  endloop\nendloop\n\
         loop i 1 1\n  loop i 7 7\n    attach Step named inner$(i)\n  endloop\nendloop",
    )
    .unwrap();
    assert_eq!(
        instances(&linker),
        [
            "Step named s1_1",
            "Step named s1_2",
            "Step named s2_1",
            "Step named s2_2",
            "Step named inner7"
        ]
    );
}

#[test]
fn loop_errors_carry_body_line() {
    let linker = Linker::new();
    let err = execute_script(&linker, "loop i 1 2\n  attach Step named a\nendloop").unwrap_err();
    assert!(matches!(err.root(), Error::DuplicateIdentifier(_)));
    assert_eq!(err.line(), Some(2));
}

#[test]
fn unbalanced_loops_are_parse_errors() {
    for (text, line) in [
        ("loop i 1 2\nattach Step", 1),
        ("attach Step\nendloop", 2),
        ("loop i a 2\nendloop", 1),
    ] {
        let err = parse_text(text).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{text}");
        assert_eq!(err.line(), Some(line), "{text}");
    }
}

#[test]
fn undefined_variable_is_an_error() {
    let linker = Linker::new();
    let err = execute_script(&linker, "attach Step named $(k)").unwrap_err();
    assert!(matches!(err.root(), Error::Parse { .. }));
    assert_eq!(err.line(), Some(1));
}

#[test]
fn self_source_is_a_cycle_at_line_two() {
    let linker = Linker::new();
    let err = Interpreter::new(&linker)
        .execute_file(&fixture("self.mac"))
        .unwrap_err();
    assert!(matches!(err.root(), Error::SourceCycle { .. }));
    assert_eq!(err.line(), Some(2));
    assert!(err.to_string().contains("self.mac:2"));
}

#[test]
fn mutual_source_cycle_points_at_closing_line() {
    let linker = Linker::new();
    let err = Interpreter::new(&linker)
        .execute_file(&fixture("cycle_a.mac"))
        .unwrap_err();
    let Error::SourceCycle { chain, .. } = err.root() else {
        panic!("{err}")
    };
    assert_eq!(chain.len(), 3);
    assert_eq!(err.line(), Some(3));
    assert!(err.to_string().contains("cycle_b.mac:3"), "{err}");

    let err = check_file(&fixture("cycle_a.mac")).unwrap_err();
    assert!(matches!(err.root(), Error::SourceCycle { .. }));
}

#[test]
fn dangling_continuation_reports_its_line_and_leaves_state_alone() {
    let linker = Linker::new();
    let err = Interpreter::new(&linker)
        .execute_file(&fixture("dangling.mac"))
        .unwrap_err();
    assert!(matches!(
        err.root(),
        Error::DanglingContinuation { line: 3 }
    ));
    assert_eq!(err.line(), Some(3));
    assert!(linker.configurators().is_empty());
}

#[test]
fn parse_errors_do_not_mutate_the_linker() {
    let linker = Linker::new();
    let err = execute_script(
        &linker,
        "attach Step named A\nattach\ncfg Step named A define x y",
    )
    .unwrap_err();
    assert!(matches!(err.root(), Error::Parse { line: 2, .. }));
    assert!(linker.configurators().is_empty());
}

#[test]
fn missing_source_file() {
    let linker = Linker::new();
    let err = execute_script(&linker, "source definitely_missing.mac").unwrap_err();
    assert!(matches!(err.root(), Error::FileNotFound(_)));
}

#[test]
fn continuation_lines_join() {
    let lines = tokenize("cfg Step \\\n  define \\\n  X y\n# c\n").unwrap();
    assert_eq!(lines[0].line, 1);
    assert_eq!(lines[0].tokens, ["cfg", "Step", "define", "X", "y"]);
    assert!(lines.last().unwrap().comment);
}

#[test]
fn crlf_and_comments() {
    let linker = Linker::new();
    execute_script(
        &linker,
        "attach Step named A   # trailing\r\n# whole line\r\ncfg Step named A define k v\r\n",
    )
    .unwrap();
    assert_eq!(
        linker
            .get("Step named A")
            .unwrap()
            .resolve_value("k", &linker)
            .unwrap(),
        "v"
    );
}

#[test]
fn execution_log_records_each_directive() {
    let linker = Linker::new();
    let mut interp = Interpreter::new(&linker);
    interp.execute_file(&fixture("helloworld.mac")).unwrap();
    let log = interp.into_log();
    let attaches = log
        .entries
        .iter()
        .filter(|e| e.directive.starts_with("attach"))
        .count();
    assert_eq!(attaches, 5);
    assert!(log
        .entries
        .iter()
        .all(|e| e.file.ends_with("helloworld.mac")));
}

#[test]
fn check_file_parses_without_executing() {
    assert!(check_file(&fixture("helloworld.mac")).unwrap() > 0);
    assert!(matches!(
        check_file(&fixture("dangling.mac")).unwrap_err().root(),
        Error::DanglingContinuation { line: 3 }
    ));
}

#[test]
fn dump_tokenizes_like_canonical_directives() {
    let linker = hello_linker();
    let dump = linker.dump_state(false).unwrap();
    let statements = parse_text(&dump).unwrap();
    let rendered: String = statements
        .iter()
        .map(|s| format!("{}\n", s.directive))
        .collect();
    let again = parse_text(&rendered).unwrap();
    let directives = |v: &[runjob::macro_lang::Statement]| -> Vec<_> {
        v.iter().map(|s| s.directive.clone()).collect()
    };
    assert_eq!(directives(&statements), directives(&again));
}

proptest! {
    #[test]
    fn directive_display_round_trips(
        kind in 0usize..4,
        ty in "[A-Z][a-zA-Z]{0,8}",
        name in proptest::option::of("[a-z][a-z0-9]{0,5}"),
        args in proptest::collection::vec("[a-zA-Z0-9_:.]{1,6}", 1..5),
    ) {
        let id = match &name {
            Some(n) => format!("{ty} named {n}"),
            None => ty.clone(),
        };
        let text = match kind {
            0 => format!("attach {id}"),
            1 => format!("cfg {id} {}", args.join(" ")),
            2 => format!("framework run {}", args.join(" ")),
            _ => format!("framework group {ty} {}", args.join(" ")),
        };
        let parsed = parse_text(&text).unwrap();
        prop_assert_eq!(parsed.len(), 1);
        prop_assert_eq!(parsed[0].directive.to_string(), text);
    }
}
