//! Masks on the wire: row-major run lengths starting with a background run.

use reasonseg::model::{decode_mask_rle, encode_mask_rle, BinaryMask, Rect, RleMask};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mask = BinaryMask::from_rect(16, 16, Rect::new(2, 3, 4, 5));
    let rle = encode_mask_rle(&mask);
    let json = rle.to_json();
    println!("{json}");

    let back = decode_mask_rle(&RleMask::from_json(&json)?)?;
    assert_eq!(back, mask);
    println!("round trip ok, {} foreground pixels", back.count());

    let full = encode_mask_rle(&BinaryMask::full(3, 2));
    println!("full 3x2: {}", full.to_json());
    Ok(())
}
