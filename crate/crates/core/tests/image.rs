use proptest::prelude::*;

use irisloc::image::{crop_resize, decode_grayscale, encode_pgm, gaussian_blur, gradients};
use irisloc::{BBox, GrayImage};

fn raster_at_least(min_side: usize, max_side: usize) -> impl Strategy<Value = GrayImage> {
    (min_side..=max_side, min_side..=max_side).prop_flat_map(|(w, h)| {
        proptest::collection::vec(any::<u8>(), w * h).prop_map(move |data| GrayImage::new(w, h, data).unwrap())
    })
}

fn raster(max_side: usize) -> impl Strategy<Value = GrayImage> {
    raster_at_least(1, max_side)
}

proptest! {
    #[test]
    fn pgm_round_trip_is_bit_exact(img in raster(40)) {
        let back = decode_grayscale(&encode_pgm(&img)).unwrap();
        prop_assert_eq!(back, img);
    }

    #[test]
    fn gradients_ignore_intensity_offsets(
        w in 3usize..24,
        h in 3usize..24,
        seed in proptest::collection::vec(0u8..=200, 576),
        c in 0u8..=55,
    ) {
        let img = GrayImage::from_fn(w, h, |x, y| seed[y * 24 + x]);
        let lifted = GrayImage::from_fn(w, h, |x, y| img.get(x, y) + c);
        let (a, b) = (gradients(&img).unwrap(), gradients(&lifted).unwrap());
        prop_assert_eq!(a.gx, b.gx);
        prop_assert_eq!(a.gy, b.gy);
        prop_assert_eq!(a.magnitude, b.magnitude);
        prop_assert_eq!(a.orientation, b.orientation);
    }

    #[test]
    fn blur_keeps_the_mean_when_the_border_is_flat(
        sigma in 0.5f64..2.5,
        blob in proptest::collection::vec(any::<u8>(), 16 * 16),
        background in any::<u8>(),
    ) {
        // Content sits at least 3 sigma away from the edges, so edge
        // replication adds nothing that zero-sum convolution would not.
        let pad = (3.0 * sigma).ceil() as usize + 1;
        let side = 16 + 2 * pad;
        let img = GrayImage::from_fn(side, side, |x, y| {
            if (pad..pad + 16).contains(&x) && (pad..pad + 16).contains(&y) {
                blob[(y - pad) * 16 + x - pad]
            } else {
                background
            }
        });
        let blurred = gaussian_blur(&img, sigma).unwrap();
        prop_assert!((blurred.mean() - img.mean()).abs() <= 0.5);
    }

    #[test]
    fn aligned_crop_resize_is_a_crop(
        (img, x, y, side) in (8usize..24).prop_flat_map(|side| (raster_at_least(side, 40), Just(side)))
            .prop_flat_map(|(img, side)| {
                let (w, h) = (img.width(), img.height());
                (Just(img), 0..=w - side, 0..=h - side, Just(side))
            })
    ) {
        let out = crop_resize(&img, &BBox::square(x as i64, y as i64, side as i64), side).unwrap();
        let want = GrayImage::from_fn(side, side, |i, j| img.get(x + i, y + j));
        prop_assert_eq!(out, want);
    }
}
