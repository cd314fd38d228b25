use sparse_ksum::seed::{child_seed, derive_seed, PathSegment};

fn main() {
    println!("{}", derive_seed(0, &[PathSegment::Label("trial"), PathSegment::Index(0)]));
    for i in 0..4 {
        println!("trial {i}: {}", child_seed(42, "trial", i));
    }
}
