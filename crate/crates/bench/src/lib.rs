//! Benchmark fixtures shared by the bench targets.

use lmea::{gen_clu, gen_rue, CluParams, Instance};

pub fn rue(n: usize) -> Instance {
    gen_rue(n, 42).expect("valid size")
}

pub fn clu(n: usize) -> Instance {
    let p = CluParams::default_for(n);
    gen_clu(n, 42, p.num_clusters, p.sigma).expect("valid size")
}
