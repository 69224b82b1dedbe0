//! Script generation.
//!
//! A ScriptGen is a configurator that other configurators delegate framework
//! calls to. It produces one fragment [`ScriptObject`] per delegator on
//! `MakeJob` and assembles its fragments into a composite shell script on
//! `MakeScript`. [`make_dag`] wraps all fragments into a DAGMan-style graph.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::configurator::{Configurator, ConfiguratorDescription, RequirementPattern};
use crate::error::{Error, Result};
use crate::linker::Linker;

pub const MAKE_JOB: &str = "MakeJob";
pub const MAKE_SCRIPT: &str = "MakeScript";
pub const RUN_JOB: &str = "RunJob";

pub const SHELL: &str = "shell";
pub const DAG: &str = "dag";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScriptKind {
    Fragment,
    Composite,
    Dag,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScriptObject {
    pub id: String,
    pub target: String,
    pub kind: ScriptKind,
    pub payload: String,
    pub producer: ConfiguratorDescription,
    /// ScriptGen that generated a fragment on the producer's behalf.
    pub generator: Option<ConfiguratorDescription>,
    /// Assigned by the linker when the object is stored.
    pub sequence: u64,
}

impl ScriptObject {
    pub fn new(
        id: impl Into<String>,
        target: &str,
        kind: ScriptKind,
        payload: impl Into<String>,
        producer: ConfiguratorDescription,
    ) -> Self {
        Self {
            id: id.into(),
            target: target.to_owned(),
            kind,
            payload: payload.into(),
            producer,
            generator: None,
            sequence: 0,
        }
    }

    /// File name used when the object is written to disk.
    pub fn file_name(&self) -> String {
        match self.kind {
            ScriptKind::Dag => format!("{}.dag", self.id),
            _ => format!("{}.sh", self.id),
        }
    }

    /// Text written to disk: fragments get a shebang so they run standalone.
    pub fn file_contents(&self) -> String {
        match self.kind {
            ScriptKind::Fragment => format!("#!/bin/sh\nset -e\n{}\n", self.payload),
            _ => self.payload.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScriptGenRegistration {
    pub delegator_type: String,
    pub messages: Vec<String>,
}

/// Implemented by configurators that generate code for others.
pub trait ScriptGen {
    fn target(&self) -> &str {
        SHELL
    }

    fn supports(&self, delegator_type: &str) -> bool;

    /// Shell code for one delegator; no trailing newline.
    fn fragment(&self, delegator: &Configurator, linker: &Linker) -> Result<String>;
}

impl fmt::Debug for dyn ScriptGen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScriptGen({})", self.target())
    }
}

/// Makes every attached (and later attached) configurator of
/// `delegator_type` delegate `MakeJob` to `sg_cfg`, and gives each of them a
/// requirement on it.
pub fn register_delegator(
    sg_cfg: &Configurator,
    delegator_type: &str,
    linker: &Linker,
) -> Result<()> {
    let sg = sg_cfg
        .scriptgen()
        .ok_or_else(|| Error::NotAScriptGen(sg_cfg.description().to_string()))?;
    if !linker.registry().contains(delegator_type) {
        return Err(Error::UnknownType(delegator_type.to_owned()));
    }
    if !sg.supports(delegator_type) {
        return Err(Error::UnsupportedDelegator {
            scriptgen: sg_cfg.description().to_string(),
            delegator: delegator_type.to_owned(),
        });
    }
    let reg = ScriptGenRegistration {
        delegator_type: delegator_type.to_owned(),
        messages: vec![MAKE_JOB.to_owned()],
    };
    sg_cfg.push_registration(reg.clone());
    for cfg in linker.configurators() {
        if cfg.description().type_name == delegator_type {
            apply_registration(sg_cfg.description(), &reg, &cfg, linker)?;
        }
    }
    Ok(())
}

pub(crate) fn apply_registration(
    sg: &ConfiguratorDescription,
    reg: &ScriptGenRegistration,
    delegator: &Configurator,
    linker: &Linker,
) -> Result<()> {
    for message in &reg.messages {
        delegator.set_delegation(message, sg.clone());
    }
    delegator.add_requirement(RequirementPattern::on(sg), linker)
}

pub(crate) fn delegated_call(
    sg: &dyn ScriptGen,
    sg_cfg: &Configurator,
    message: &str,
    delegator: &Configurator,
    linker: &Linker,
) -> Result<()> {
    if message == MAKE_JOB {
        delegated_make_job(sg, sg_cfg, delegator, linker)?;
    }
    Ok(())
}

/// Generates the delegator's fragment and stores it in the repository.
pub fn delegated_make_job(
    sg: &dyn ScriptGen,
    sg_cfg: &Configurator,
    delegator: &Configurator,
    linker: &Linker,
) -> Result<ScriptObject> {
    let payload = sg.fragment(delegator, linker)?;
    let base = format!("job_{}", delegator.slug());
    let taken: BTreeSet<String> = linker
        .collect_script_objects(sg.target(), |_| true)
        .into_iter()
        .map(|o| o.id)
        .collect();
    let id = (1..)
        .map(|n| {
            if n == 1 {
                base.clone()
            } else {
                format!("{base}_{n}")
            }
        })
        .find(|candidate| !taken.contains(candidate))
        .expect("unbounded");
    let mut obj = ScriptObject::new(
        id,
        sg.target(),
        ScriptKind::Fragment,
        payload,
        delegator.description().clone(),
    );
    obj.generator = Some(sg_cfg.description().clone());
    Ok(linker.add_script_object(obj))
}

pub const COMPOSITE_FOOTER: &str = "exit 0\n";

pub fn composite_header(sg: &ConfiguratorDescription) -> String {
    format!("#!/bin/sh\n# composite workflow generated by runjob for {sg}\nset -e\n")
}

/// Concatenates `sg_cfg`'s fragments in sequence order, each in its own
/// subshell, and stores the result (replacing any previous composite).
pub fn make_composite(sg_cfg: &Configurator, linker: &Linker) -> Result<ScriptObject> {
    let me = sg_cfg.description();
    let target = sg_cfg
        .scriptgen()
        .map_or(SHELL.to_owned(), |sg| sg.target().to_owned());
    let fragments = linker.collect_script_objects(&target, |o| {
        o.kind == ScriptKind::Fragment && o.generator.as_ref() == Some(me)
    });
    let mut payload = composite_header(me);
    for frag in &fragments {
        payload.push_str(&format!(
            "# {} ({})\n(\n{}\n)\n",
            frag.id, frag.producer, frag.payload
        ));
    }
    payload.push_str(COMPOSITE_FOOTER);

    let id = format!("composite_{}", sg_cfg.slug());
    linker.remove_script_objects(|o| o.kind == ScriptKind::Composite && o.id == id);
    Ok(linker.add_script_object(ScriptObject::new(
        id,
        &target,
        ScriptKind::Composite,
        payload,
        me.clone(),
    )))
}

/// Parent and child fragment ids.
pub type Edge = (String, String);

/// Parent/child edges between fragment producers: `a -> b` when `b`
/// requires `a`.
pub fn fragment_edges(linker: &Linker) -> Result<(Vec<ScriptObject>, Vec<Edge>)> {
    let fragments = linker.collect_script_objects(SHELL, |o| o.kind == ScriptKind::Fragment);
    let mut producers: Vec<ConfiguratorDescription> = Vec::new();
    for f in &fragments {
        if !producers.contains(&f.producer) {
            producers.push(f.producer.clone());
        }
    }
    let cfgs: HashMap<ConfiguratorDescription, _> = producers
        .iter()
        .map(|p| Ok((p.clone(), linker.configurator(&p.id())?)))
        .collect::<Result<_>>()?;

    let mut edges = Vec::new();
    for parent in &fragments {
        for child in &fragments {
            if parent.producer != child.producer && cfgs[&child.producer].requires(&parent.producer)
            {
                edges.push((parent.id.clone(), child.id.clone()));
            }
        }
    }
    check_acyclic(&fragments, &edges)?;
    Ok((fragments, edges))
}

fn check_acyclic(nodes: &[ScriptObject], edges: &[(String, String)]) -> Result<()> {
    let mut indegree: HashMap<&str, usize> = nodes.iter().map(|n| (n.id.as_str(), 0)).collect();
    for (_, child) in edges {
        *indegree
            .get_mut(child.as_str())
            .expect("edge endpoint is a node") += 1;
    }
    let mut ready: Vec<&str> = nodes
        .iter()
        .map(|n| n.id.as_str())
        .filter(|id| indegree[id] == 0)
        .collect();
    let mut seen = 0;
    while let Some(node) = ready.pop() {
        seen += 1;
        for (parent, child) in edges {
            if parent == node {
                let d = indegree.get_mut(child.as_str()).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.push(child);
                }
            }
        }
    }
    if seen == nodes.len() {
        return Ok(());
    }
    let mut stuck: Vec<String> = indegree
        .into_iter()
        .filter(|(_, d)| *d > 0)
        .map(|(id, _)| id.to_owned())
        .collect();
    stuck.sort();
    Err(Error::CyclicWorkflow(stuck))
}

/// Emits a DAG with one `JOB` line per fragment and one `PARENT .. CHILD ..`
/// line per requirement edge between fragment producers.
pub fn make_dag(producer: &ConfiguratorDescription, linker: &Linker) -> Result<ScriptObject> {
    let (fragments, edges) = fragment_edges(linker)?;
    let mut text = String::from("# workflow DAG generated by runjob\n");
    for f in &fragments {
        text.push_str(&format!("JOB {} {}\n", f.id, f.file_name()));
    }
    for (parent, child) in &edges {
        text.push_str(&format!("PARENT {parent} CHILD {child}\n"));
    }
    linker.remove_script_objects(|o| o.kind == ScriptKind::Dag);
    Ok(linker.add_script_object(ScriptObject::new(
        "workflow",
        DAG,
        ScriptKind::Dag,
        text,
        producer.clone(),
    )))
}

/// Parsed form of a DAG file: job names and parent/child pairs.
#[derive(Debug, Default, PartialEq, Eq)]
pub struct DagFile {
    pub jobs: Vec<(String, String)>,
    pub edges: Vec<(String, String)>,
}

impl DagFile {
    pub fn parse(text: &str) -> Option<Self> {
        let mut dag = DagFile::default();
        for line in text.lines().map(str::trim) {
            let tokens: Vec<&str> = line.split_whitespace().collect();
            match tokens.as_slice() {
                [] => {}
                [c, ..] if c.starts_with('#') => {}
                ["JOB", name, file] => dag.jobs.push((name.to_string(), file.to_string())),
                ["PARENT", p, "CHILD", c] => dag.edges.push((p.to_string(), c.to_string())),
                _ => return None,
            }
        }
        Some(dag)
    }
}

/// Double-quotes `s` for POSIX sh.
pub fn sh_quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if matches!(c, '"' | '\\' | '$' | '`') {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::process::Command;

    fn sh_echo(arg: &str) -> String {
        let out = Command::new("sh")
            .arg("-c")
            .arg(format!("printf '%s' {}", sh_quote(arg)))
            .output()
            .unwrap();
        String::from_utf8(out.stdout).unwrap()
    }

    #[test]
    fn quoting_survives_the_shell() {
        for s in ["Hello World", "say \"hi\"", "$HOME `id` \\n", "", "it's"] {
            assert_eq!(sh_echo(s), s);
        }
    }

    #[test]
    fn dag_parse() {
        let dag = DagFile::parse("# c\nJOB a a.sh\nJOB b b.sh\nPARENT a CHILD b\n").unwrap();
        assert_eq!(dag.jobs.len(), 2);
        assert_eq!(dag.edges, [("a".to_string(), "b".to_string())]);
        assert!(DagFile::parse("JOB a").is_none());
    }
}
