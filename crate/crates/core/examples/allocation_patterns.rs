//! Sample layouts under the four allocation patterns.

use fwer_seh::design::Treatment;
use fwer_seh::numerics::RngStream;
use fwer_seh::sim::{draw_layout, Allocation, Structure};

fn main() -> fwer_seh::Result<()> {
    let design = Structure::Nested.design();
    let prevalences = [0.25, 0.35, 0.4];
    for allocation in [Allocation::A, Allocation::B, Allocation::C, Allocation::D] {
        // same stream per pattern, so A to C share their strata sizes
        let mut rng = RngStream::new(21).rng();
        let (layout, redraws) = draw_layout(&design, &prevalences, 301, allocation, &mut rng)?;
        let cells: Vec<String> = (0..design.n_subgroups())
            .map(|i| format!("({:.1}, {:.1})", layout.cell(i, Treatment(1)), layout.cell(i, Treatment::CONTROL)))
            .collect();
        println!("{allocation}: E/C per stratum {}  redraws {redraws}", cells.join(" "));
    }
    Ok(())
}
