//! Mixed-radix basis of the six-subsystem protocol space.
//!
//! The first subsystem is the most significant digit, so `|1,0,0,0,g,g⟩`
//! sits one full stride of mode A into the vector.

use cavity_teleport::fock::BasisKet;
use cavity_teleport::protocol::canonical_space;

fn main() -> cavity_teleport::Result<()> {
    let space = canonical_space(4)?;
    println!("{space}  (dim {})", space.dim());
    for (i, s) in space.subsystems().iter().enumerate() {
        println!("  {:<6} levels {}  stride {:>3}", s.label, s.levels, space.stride(i));
    }

    for digits in [[0, 0, 0, 0, 0, 0], [1, 0, 0, 0, 0, 0], [0, 0, 1, 0, 1, 1], [3, 3, 3, 3, 1, 1]] {
        let ket = BasisKet::from(digits);
        let index = space.basis_index(&ket)?;
        assert_eq!(space.basis_ket(index)?, ket);
        println!("{ket:<16} -> {index}");
    }
    Ok(())
}
