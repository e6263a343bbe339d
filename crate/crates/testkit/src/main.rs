//! Writes a synthetic spin CSV, and the generating model when there is one.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use clap::Parser;
use critscan_testkit::{fixture_generators, fixture_model, FixtureKind, FixtureParams};

#[derive(Parser)]
#[command(about = "Generate reproducible synthetic spin data")]
struct Args {
    /// independent-coins, ordered-pair, maxent-sampled, sk-sampled or ising-sampled
    kind: FixtureKind,
    /// Output CSV path
    output: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = FixtureParams::default().n)]
    n: usize,
    #[arg(long, default_value_t = FixtureParams::default().m)]
    m: usize,
    /// Also write the maxent model as JSON
    #[arg(long)]
    model: Option<PathBuf>,
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args = Args::parse();
    let params = FixtureParams {
        n: args.n,
        m: args.m,
        ..FixtureParams::default()
    };
    let data = fixture_generators(args.kind, &params, args.seed)?;
    data.write_csv(BufWriter::new(File::create(&args.output)?))?;
    if let Some(path) = args.model {
        if args.kind != FixtureKind::MaxentSampled {
            return Err("--model is only meaningful for maxent-sampled".into());
        }
        fixture_model(&params, args.seed).write_json(BufWriter::new(File::create(path)?))?;
    }
    Ok(())
}
