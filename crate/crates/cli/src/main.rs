use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use hammerstein_cli::{
    cmd_check, cmd_constants, cmd_reproduce, cmd_solve, cmd_spectral, load, CliError, CliResult, Mode, Output,
    Overrides, EXIT_USAGE,
};

#[derive(Parser, Debug)]
#[command(name = "hammerstein", version, about = "Check and solve systems of perturbed Hammerstein equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Grid resolution (overrides the problem file).
    #[arg(long, global = true)]
    resolution: Option<usize>,

    /// Solver tolerance; for `spectral`, the power-iteration tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Write the report here instead of stdout. Solution tables go next to
    /// it as `<stem>.solution-<k>.txt`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Kernel constants, γ norms, characteristic values, positivity check.
    Constants { file: PathBuf },
    /// Spectral radius and eigenfunction of each level-0 kernel.
    Spectral { file: PathBuf },
    /// Check the existence or non-existence hypotheses.
    Check {
        file: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
    },
    /// Multistart fixed-point iteration.
    Solve { file: PathBuf },
    /// Run a bundled example.
    Reproduce {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=2))]
        example: u32,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ModeArg {
    Existence,
    Nonexistence,
}

fn read(path: &Path, overrides: &Overrides) -> CliResult<hammerstein::ProblemFile> {
    let text = fs::read_to_string(path).map_err(|e| CliError::NoInput(format!("{}: {e}", path.display())))?;
    load(&text, overrides).map_err(|e| match e {
        CliError::Data(m) => CliError::Data(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn run(cli: &Cli) -> CliResult<Output> {
    let overrides = Overrides {
        resolution: cli.resolution,
        tol: cli.tol,
        seed: cli.seed,
    };
    match &cli.command {
        Command::Constants { file } => cmd_constants(&read(file, &overrides)?),
        Command::Spectral { file } => cmd_spectral(&read(file, &overrides)?, cli.tol),
        Command::Check { file, mode } => {
            let mode = match mode {
                ModeArg::Existence => Mode::Existence,
                ModeArg::Nonexistence => Mode::Nonexistence,
            };
            cmd_check(&read(file, &overrides)?, mode)
        }
        Command::Solve { file } => cmd_solve(&read(file, &overrides)?),
        Command::Reproduce { example } => cmd_reproduce(*example, &overrides),
    }
}

fn emit(output: &Output, out: Option<&Path>) -> CliResult<()> {
    let body = output.render()?;
    let Some(path) = out else {
        print!("{body}");
        return Ok(());
    };
    let write = |p: &Path, text: &str| {
        fs::write(p, text).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))
    };
    write(path, &body)?;
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    for table in &output.tables {
        write(&path.with_file_name(format!("{stem}.{}.txt", table.name)), &table.text)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let result = run(&cli).and_then(|output| emit(&output, cli.out.as_deref()).map(|_| output.exit_code));
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("hammerstein: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
