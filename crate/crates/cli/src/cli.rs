use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "shallow", version, about = "Experiments on shallow circuits, symmetric ensembles and 1D QCA")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Tell shallow symmetric circuits from global symmetric unitaries.
    Distinguish(Common),
    /// Learn a hidden shallow circuit and assemble its doubled circuit.
    Learn(Common),
    /// Quantum cellular automaton tools.
    #[command(subcommand)]
    Qca(QcaCommand),
}

#[derive(Subcommand, Debug)]
pub enum QcaCommand {
    /// Index of a QCA.
    Index(Common),
    /// Compile shifts, a pump and a circuit into one gate list.
    Compile(Common),
    /// Staircase circuit pumping one tensor factor along the ring.
    Pump(Common),
    /// Two-layer block split of a translation-invariant circuit.
    Decompose(Common),
    /// Check that an image table defines a QCA.
    Verify(Common),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exact,
    Sampled,
    Analytic,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// JSON configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long)]
    pub reps: Option<usize>,
    /// Shots per measurement setting.
    #[arg(long)]
    pub shots: Option<u64>,
}
