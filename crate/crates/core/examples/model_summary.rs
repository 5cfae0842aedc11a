//! Node table and parameter counts at desk and full scale.

use dune::net::{Dune, ModelConfig, FULL_SCALE_WIDTHS};

fn main() -> dune::Result<()> {
    let desk = Dune::new(ModelConfig::desk(1, 4, 32, 64))?;
    println!("{:<8} {:>5} {:>5} {:>9}  inputs", "node", "in", "out", "size");
    for n in &desk.graph().nodes {
        println!(
            "X^{{{},{}}}   {:>5} {:>5} {:>4}x{:<4}  {}",
            n.i,
            n.j,
            n.in_channels,
            n.out_channels,
            n.height,
            n.width,
            n.inputs.join(" + ")
        );
    }
    println!("heads on {:?}", desk.graph().heads);
    println!("desk scale: {} parameters", desk.param_count());

    for window in [1, 3, 12] {
        let mut full = ModelConfig::desk(window, 4, 720, 1440);
        full.widths = FULL_SCALE_WIDTHS.to_vec();
        println!(
            "full scale, W={window:>2}: {} parameters",
            Dune::new(full)?.param_count()
        );
    }
    Ok(())
}
