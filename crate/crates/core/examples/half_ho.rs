use affine_quant::domain_grid::build_grid;
use affine_quant::eigensolve::eigen_bisection;
use affine_quant::operators::assemble;
use affine_quant::ModelF64;

fn main() -> affine_quant::Result<()> {
    let model = ModelF64::half_harmonic_oscillator(1.0);
    let grid = build_grid(&model.domain, 4000, Some(10.0))?.primary().clone();
    let op = assemble(&model, &grid)?;
    let spec = eigen_bisection(&op, 5)?;
    // the affine ladder is 2, 4, 6, ... where the canonical one is 1.5, 3.5, 5.5, ...
    for (k, e) in spec.eigenvalues.iter().enumerate() {
        println!("{k} {e:.6}");
    }
    Ok(())
}
