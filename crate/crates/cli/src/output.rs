use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use owc_rlnc_noma::sim::{SicKind, SweepRow};

use crate::CliError;

pub const CSV_HEADER: &str = "alpha,ber_noma_perfect,ber_noma_imperfect,ber_rlnc_perfect,ber_rlnc_imperfect,\
rate_noma_sum,rate_oma_sum,sinr_g1_db,sinr_g2_db,feasible,ci_ber_noma,ci_ber_rlnc";

/// Run metadata written as `#` comment lines ahead of the CSV header.
pub struct Metadata<'a> {
    pub command: &'a str,
    pub seed: u64,
    pub config_json: String,
}

/// Render rows as CSV. Floats use Rust's shortest round-trip formatting.
/// The two CI columns belong to the configured SIC mode.
pub fn render_csv(rows: &[SweepRow], sic: SicKind, meta: &Metadata<'_>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "# command: {}", meta.command);
    let _ = writeln!(out, "# seed: {}", meta.seed);
    let _ = writeln!(out, "# config: {}", meta.config_json);
    out.push_str(CSV_HEADER);
    out.push('\n');
    let (noma_ci, rlnc_ci) = match sic {
        SicKind::Perfect => (0, 2),
        SicKind::Imperfect => (1, 3),
    };
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.alpha,
            r.ber_noma_perfect,
            r.ber_noma_imperfect,
            r.ber_rlnc_perfect,
            r.ber_rlnc_imperfect,
            r.rate_noma_sum,
            r.rate_oma_sum,
            r.sinr_g1_db,
            r.sinr_g2_db,
            r.feasible,
            r.ci_ber[noma_ci],
            r.ci_ber[rlnc_ci],
        );
    }
    out
}

pub fn emit_csv(rows: &[SweepRow], sic: SicKind, meta: &Metadata<'_>, path: &Path) -> Result<(), CliError> {
    if rows.is_empty() {
        return Err(CliError::Validation("no sweep rows to write".into()));
    }
    fs::write(path, render_csv(rows, sic, meta)).map_err(|e| CliError::Io(path.display().to_string(), e))
}
