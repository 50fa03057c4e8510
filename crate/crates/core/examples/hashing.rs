//! Draws a few hash functions and shows how evenly they spread keys.
//!
//!     cargo run --release --example hashing

use adaptive_sparse::hashing::{reduction_independence, KWiseHash, SignHash, UnitUniforms};

fn main() -> adaptive_sparse::Result<()> {
    let (domain, range) = (1u64 << 16, 64u64);
    for t in [2, 4, reduction_independence(1 << 12)] {
        let h = KWiseHash::new(t, domain, range, 42)?;
        let mut load = vec![0u32; range as usize];
        for i in 0..domain {
            load[h.eval(i)? as usize] += 1;
        }
        let (lo, hi) = (load.iter().min().unwrap(), load.iter().max().unwrap());
        println!(
            "t={t:<3} p={} bucket load min={lo} max={hi} (mean {})",
            h.modulus(),
            domain / range
        );
    }

    let s = SignHash::new(2, domain, 7)?;
    let sum: f64 = (0..domain).map(|i| s.eval(i).unwrap()).sum();
    println!("sign hash: sum of {domain} signs = {sum}");

    let u = UnitUniforms::new(4, domain, 7)?;
    let mean = (0..domain).map(|i| u.eval(i).unwrap()).sum::<f64>() / domain as f64;
    println!("4-wise uniforms: mean {mean:.4}");
    Ok(())
}
