//! `compreg transform`: ALR-transform component columns, preserving every
//! other column as-is.

use std::path::PathBuf;

use clap::Args;

use compreg::simplex::alr_forward;

use crate::error::CliError;
use crate::ingest::compositions_from_table;
use crate::table::{fmt6, write_csv, Table};

#[derive(Debug, Clone, Args)]
pub struct TransformArgs {
    /// Input CSV (UTF-8, header row, dot decimal)
    #[arg(long)]
    pub data: PathBuf,
    /// Component columns in order; the last one is the ALR reference
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub components: Vec<String>,
    /// Output CSV path
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &TransformArgs) -> Result<(), CliError> {
    let table = Table::read(&args.data)?;
    let compositions = compositions_from_table(&table, &args.components)?;
    let g = compositions.num_parts() - 1;

    let passthrough: Vec<usize> = table
        .headers
        .iter()
        .enumerate()
        .filter(|(_, h)| !args.components.contains(h))
        .map(|(i, _)| i)
        .collect();

    let mut headers: Vec<String> = (1..=g).map(|j| format!("alr_{j}")).collect();
    headers.extend(passthrough.iter().map(|&i| table.headers[i].clone()));
    let header_refs: Vec<&str> = headers.iter().map(|s| s.as_str()).collect();

    let mut rows = Vec::with_capacity(table.rows.len());
    for (i, composition) in compositions.rows().iter().enumerate() {
        let coords = alr_forward(composition)
            .map_err(|e| CliError::Data(format!("row {}: {e}", i + 1)))?;
        let mut row: Vec<String> = coords.iter().map(|&v| fmt6(v)).collect();
        row.extend(passthrough.iter().map(|&c| table.rows[i][c].clone()));
        rows.push(row);
    }
    write_csv(&args.out, &header_refs, &rows)
}
