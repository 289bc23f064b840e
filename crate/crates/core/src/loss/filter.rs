//! Separable Gaussian blur and 3x3 Sobel gradients on f64 images with
//! replicated borders.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Conventional size-to-sigma rule for a Gaussian kernel of odd size `k`.
pub fn sigma_for_kernel(k: usize) -> f64 {
    0.3 * ((k as f64 - 1.0) * 0.5 - 1.0) + 0.8
}

/// Normalized 1D Gaussian taps.
pub fn gaussian_kernel(k: usize, sigma: f64) -> Result<Vec<f64>> {
    if k % 2 == 0 {
        return Err(Error::domain(format!("blur kernel size {k} must be odd")));
    }
    if !(sigma > 0.0) {
        return Err(Error::domain("blur sigma must be positive"));
    }
    let r = (k / 2) as isize;
    let mut taps: Vec<f64> = (-r..=r)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    Ok(taps)
}

pub fn gaussian_blur(img: &[f64], width: usize, height: usize, k: usize, sigma: f64) -> Result<Vec<f64>> {
    let taps = gaussian_kernel(k, sigma)?;
    let r = (k / 2) as isize;
    let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;

    let mut tmp = vec![0.0; img.len()];
    tmp.par_chunks_mut(width).enumerate().for_each(|(y, out)| {
        let row = &img[y * width..(y + 1) * width];
        let padded: Vec<f64> = (-r..width as isize + r).map(|i| row[clamp(i, width)]).collect();
        for (x, o) in out.iter_mut().enumerate() {
            *o = taps.iter().zip(&padded[x..x + k]).map(|(w, v)| w * v).sum();
        }
    });
    let mut out = vec![0.0; img.len()];
    out.par_chunks_mut(width).enumerate().for_each(|(y, line)| {
        for (t, w) in taps.iter().enumerate() {
            let src = clamp(y as isize + t as isize - r, height);
            let src_row = &tmp[src * width..(src + 1) * width];
            for (o, s) in line.iter_mut().zip(src_row) {
                *o += w * s;
            }
        }
    });
    Ok(out)
}

/// `|gx| + |gy|` with the unnormalized 3x3 Sobel stencils.
pub fn sobel_magnitude(img: &[f64], width: usize, height: usize) -> Vec<f64> {
    let mut out = vec![0.0; img.len()];
    out.par_chunks_mut(width).enumerate().for_each(|(y, line)| {
        let row = |yy: isize| {
            let yy = yy.clamp(0, height as isize - 1) as usize;
            &img[yy * width..(yy + 1) * width]
        };
        let (up, mid, down) = (row(y as isize - 1), row(y as isize), row(y as isize + 1));
        for (x, o) in line.iter_mut().enumerate() {
            let l = x.saturating_sub(1);
            let r = (x + 1).min(width - 1);
            let gx = (up[r] + 2.0 * mid[r] + down[r]) - (up[l] + 2.0 * mid[l] + down[l]);
            let gy = (down[l] + 2.0 * down[x] + down[r]) - (up[l] + 2.0 * up[x] + up[r]);
            *o = gx.abs() + gy.abs();
        }
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_sigma_rule() {
        assert!((sigma_for_kernel(3) - 0.8).abs() < 1e-12);
        assert!((sigma_for_kernel(25) - 4.1).abs() < 1e-12);
        let taps = gaussian_kernel(25, 4.1).unwrap();
        assert!((taps.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(gaussian_kernel(4, 1.0).is_err());
    }

    #[test]
    fn blur_preserves_interior_mean_of_ramp() {
        let (w, h) = (40, 30);
        let img: Vec<f64> = (0..w * h).map(|i| 0.5 + 0.001 * (i % w) as f64 + 0.002 * (i / w) as f64).collect();
        let out = gaussian_blur(&img, w, h, 7, sigma_for_kernel(7)).unwrap();
        let interior: Vec<usize> = (0..w * h).filter(|i| (3..w - 3).contains(&(i % w)) && (3..h - 3).contains(&(i / w))).collect();
        let mean_in: f64 = interior.iter().map(|&i| img[i]).sum::<f64>() / interior.len() as f64;
        let mean_out: f64 = interior.iter().map(|&i| out[i]).sum::<f64>() / interior.len() as f64;
        assert!((mean_in - mean_out).abs() < 1e-6);
        assert!(interior.iter().all(|&i| (img[i] - out[i]).abs() < 1e-9));
    }

    #[test]
    fn sobel_on_ramp() {
        let (w, h, a) = (16, 12, 0.0003);
        let img: Vec<f64> = (0..w * h).map(|i| 1.0 + a * (i % w) as f64).collect();
        let g = sobel_magnitude(&img, w, h);
        for y in 0..h {
            for x in 1..w - 1 {
                assert!((g[y * w + x] - 8.0 * a).abs() < 1e-12);
            }
        }
    }
}
