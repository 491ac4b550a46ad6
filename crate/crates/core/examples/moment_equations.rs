//! Moment equations of the 8-state roll/filter SDE at closure orders 2
//! and 3, integrated to steady state.
//!
//! ```sh
//! cargo run --release --example moment_equations
//! ```

use parroll::arma_fit::ArmaFilter;
use parroll::moment_odes::{build_system, rk4_integrate, steady_state_stats};
use parroll::moments::MultiIndex;
use parroll::ship::ShipModel;

fn main() -> parroll::Result<()> {
    let ship = ShipModel::c11_like();
    let filter = ArmaFilter::reference();

    let s2 = build_system(&ship, &filter, 2)?;
    println!("first rows at closure order 2:");
    for i in [0, 1, 8, 9] {
        println!("  {}", s2.describe_row(i));
    }

    for p in [2, 3] {
        let system = build_system(&ship, &filter, p)?;
        let t0 = std::time::Instant::now();
        let traj = rk4_integrate(&system, &vec![0.01; system.len()], 2000.0, 0.01, 100)?;
        let stats = steady_state_stats(&traj, 0.5)?;
        println!(
            "\nclosure {p}: {} equations, 2000 s in {:.1?}",
            system.len(),
            t0.elapsed()
        );
        for e in [
            [1u8, 0, 0, 0, 0, 0, 0, 0],
            [2, 0, 0, 0, 0, 0, 0, 0],
            [0, 2, 0, 0, 0, 0, 0, 0],
            [0, 0, 2, 0, 0, 0, 0, 0],
        ] {
            let idx = MultiIndex::new(e.to_vec());
            println!(
                "  {:<10} mean {:+.4e}  oscillation {:.2e}",
                idx.expectation(),
                stats.mean(&idx).expect("tracked"),
                stats.oscillation(&idx).expect("tracked")
            );
        }
    }
    Ok(())
}
