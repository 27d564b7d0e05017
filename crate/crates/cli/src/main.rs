//! `honeycomb`: batch runs of the emitter/honeycomb-bath model.

mod commands;
mod config;
mod error;
mod presets;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use crate::config::{value_name, Args, Command, Format, RunConfig, Task};
use crate::error::CliError;
use crate::table::{write_atomic, ResultTable};

/// Output file layout: the primary table goes to `dir/stem.ext`, every
/// further table to `dir/stem_name.ext`.
pub struct Output {
    dir: PathBuf,
    stem: String,
}

impl Output {
    fn new(cfg: &RunConfig) -> Self {
        let default_stem = match &cfg.task {
            Task::Command(c) => value_name(*c),
            Task::Preset(p) => value_name(*p),
        };
        match &cfg.out {
            Some(path) => Output {
                dir: path.parent().map(PathBuf::from).unwrap_or_default(),
                stem: path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or(default_stem),
            },
            None => Output { dir: PathBuf::new(), stem: default_stem },
        }
    }

    fn path(&self, suffix: Option<&str>, format: Format) -> PathBuf {
        let name = match suffix {
            Some(s) => format!("{}_{}.{}", self.stem, s, format.extension()),
            None => format!("{}.{}", self.stem, format.extension()),
        };
        self.dir.join(name)
    }

    fn write(&self, suffix: Option<&str>, table: &ResultTable, format: Format) -> Result<String, CliError> {
        let path = self.path(suffix, format);
        write_atomic(&path, &table.encode(format))?;
        Ok(path.display().to_string())
    }

    pub fn write_secondary(&self, table: &ResultTable, format: Format) -> Result<String, CliError> {
        self.write(Some(&table.name), table, format)
    }
}

fn run(cfg: &RunConfig) -> Result<Vec<String>, CliError> {
    let out = Output::new(cfg);
    let tables = match &cfg.task {
        Task::Command(Command::Dynamics) => commands::dynamics(cfg)?,
        Task::Command(Command::SelfEnergy) => commands::self_energy(cfg)?,
        Task::Command(Command::Poles) => commands::poles(cfg)?,
        Task::Command(Command::TwoEmitter) => commands::two_emitter(cfg)?,
        Task::Command(Command::Losses) => commands::losses(cfg)?,
        Task::Command(Command::Sweep) => commands::sweep(cfg, &out)?,
        Task::Preset(p) => presets::run_preset(*p, cfg)?,
    };
    let mut written = Vec::with_capacity(tables.len());
    for (i, t) in tables.iter().enumerate() {
        let suffix = (i > 0).then_some(t.name.as_str());
        written.push(out.write(suffix, t, cfg.format)?);
    }
    Ok(written)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = args.resolve().and_then(|cfg| run(&cfg));
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{p}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
