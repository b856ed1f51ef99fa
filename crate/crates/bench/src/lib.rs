//! Shared fixtures for the benchmarks.

use pbs_lex::colgen::{price_all_pilots, ColgenParams, RestrictedMaster, RunStats};
use pbs_lex::{build_dag, generate, lex_solve, DualBundle, GeneratorOptions, Instance};

/// A generated instance at the size of a small real-world month.
pub fn scale_instance() -> Instance {
    generate(7, 17, 69, 30, &GeneratorOptions::default()).expect("generator")
}

/// Master program after `rounds` pricing rounds, with its current duals.
pub fn warm_master(inst: &Instance, rounds: usize) -> (RestrictedMaster, DualBundle) {
    let dag = build_dag(inst);
    let params = ColgenParams::default();
    let mut stats = RunStats::default();
    let mut master = RestrictedMaster::new(inst);
    let mut duals = lex_solve(master.llp()).expect("master solves").duals;
    for _ in 0..rounds {
        let round = price_all_pilots(inst, &dag, &duals, &params, &mut stats).expect("pricing");
        if round.columns.is_empty() {
            break;
        }
        for col in round.columns {
            master.add(col);
        }
        duals = lex_solve(master.llp()).expect("master solves").duals;
    }
    (master, duals)
}
