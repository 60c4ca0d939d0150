//! Writing kernels to a dump file and reading them back.

use hyperbolic_backstepping::config::sha256_hex;
use hyperbolic_backstepping::io::{controller_fields, read_kernel_dump, write_kernel_dump};
use hyperbolic_backstepping::kernels::{ControllerKernels, PicardOptions};
use hyperbolic_backstepping::verify::heterodirectional_test_system;

fn main() -> hyperbolic_backstepping::Result<()> {
    let kern = ControllerKernels::solve(&heterodirectional_test_system(), 40, PicardOptions::default())?;
    let path = std::env::temp_dir().join("hb_kernels_example.txt");
    let hash = sha256_hex(b"kernel dump example");
    write_kernel_dump(&path, &hash, &controller_fields(&kern))?;
    let (read_hash, fields) = read_kernel_dump(&path)?;
    println!("hash matches: {}", read_hash == hash);
    for f in &fields {
        println!("{:8} ({},{}) {:?} with {} values", f.name, f.i, f.j, f.kind, f.values.len());
    }
    std::fs::remove_file(&path)?;
    Ok(())
}
