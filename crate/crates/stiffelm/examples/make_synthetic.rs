//! Regenerates the checked-in synthetic test image.
//!
//! Usage: cargo run -p stiffelm --example make_synthetic [-- <path>]

use std::path::PathBuf;

use stiffelm::io::{synthetic_image, write_pgm};

fn main() {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("crates/stiffelm/assets/synthetic_128.pgm"));
    let pixels = synthetic_image(128, 128);
    write_pgm(&path, 128, 128, &pixels, &["synthetic multi-frequency test image".to_string()])
        .expect("write failed");
    println!("wrote {}", path.display());
}
