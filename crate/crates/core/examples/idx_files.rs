//! Write a tiny u8 IDX image file, read it back, and split it into batches.
//!
//! cargo run --example idx_files [path/to/images.idx]

use tdopt::harness::dataset::encode_idx_u8;
use tdopt::harness::{batch_dataset, load_idx, parse_idx};

fn main() -> tdopt::Result<()> {
    let tensor = match std::env::args().nth(1) {
        Some(path) => load_idx(path)?,
        None => {
            // five 3x4 gradient images
            let pixels: Vec<u8> = (0..5 * 12).map(|i| ((i % 12) * 20 + i / 12) as u8).collect();
            parse_idx(&encode_idx_u8([5, 3, 4], &pixels)?)?
        }
    };
    println!("tensor {:?}, values in [0, 1]", tensor.dims());
    for (i, b) in batch_dataset(&tensor, 2)?.iter().enumerate() {
        println!("batch {i}: {:?}, first pixel {:.3}", b.dims(), b.data()[0]);
    }
    // corrupt the magic number
    let mut bytes = encode_idx_u8([1, 1, 1], &[9])?;
    bytes[3] = 0x01;
    if let Err(e) = parse_idx(&bytes) {
        println!("corrupt file: {e}");
    }
    Ok(())
}
