//! Runs a manifest of declarations and verification tasks against the
//! `leray` engine and reports per-task outcomes.

pub mod manifest;
pub mod model;
pub mod tasks;

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

pub use model::{InputError, Overrides};
pub use tasks::{Status, TaskReport};

pub const SCHEMA: &str = "leray-report/1";

#[derive(Clone, Debug, Default)]
pub struct Options {
    pub tolerance: Option<f64>,
    pub order: Option<usize>,
    pub parallel: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub manifest: String,
    pub pass: bool,
    pub tasks: Vec<TaskReport>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let width = self.tasks.iter().map(|t| t.task.len()).max().unwrap_or(4).max(4);
        let _ = writeln!(out, "{:>3}  {:<6} {:<width$}  summary", "#", "status", "task", width = width);
        for t in &self.tasks {
            let status = match t.status {
                Status::Pass => "pass",
                Status::Fail => "FAIL",
                Status::Error => "ERROR",
            };
            let _ = writeln!(out, "{:>3}  {:<6} {:<width$}  {}", t.index, status, t.task, t.summary, width = width);
        }
        let failed = self.tasks.iter().filter(|t| t.status != Status::Pass).count();
        let _ = writeln!(out, "{} tasks, {} failed", self.tasks.len(), failed);
        out
    }

    /// 0 when every task passes, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }
}

/// Parses, resolves and runs manifest text. `name` is only echoed in the
/// report.
pub fn run_text(name: &str, text: &str, opts: &Options) -> Result<RunReport, InputError> {
    let manifest = manifest::parse_manifest(text).map_err(|e| InputError::engine(Default::default(), e))?;
    let model = model::resolve(&manifest)?;
    let cli = Overrides {
        radius: None,
        order: opts.order,
        tolerance: opts.tolerance,
    };
    let base = [&cli, &model.settings];
    let tasks: Vec<TaskReport> = if opts.parallel {
        std::thread::scope(|scope| {
            let handles: Vec<_> = model
                .tasks
                .iter()
                .enumerate()
                .map(|(i, t)| scope.spawn(move || tasks::run_task(i + 1, t, &base)))
                .collect();
            handles.into_iter().map(|h| h.join().expect("task thread panicked")).collect()
        })
    } else {
        model.tasks.iter().enumerate().map(|(i, t)| tasks::run_task(i + 1, t, &base)).collect()
    };
    Ok(RunReport {
        schema: SCHEMA,
        manifest: name.to_string(),
        pass: tasks.iter().all(|t| t.status == Status::Pass),
        tasks,
    })
}

#[derive(Debug)]
pub enum RunError {
    Io(std::io::Error),
    Input(InputError),
}

pub fn run(path: &Path, opts: &Options) -> Result<RunReport, RunError> {
    let text = std::fs::read_to_string(path).map_err(RunError::Io)?;
    run_text(&path.display().to_string(), &text, opts).map_err(RunError::Input)
}
