//! Heatmap rendering: perceptually uniform colormap, colorbar with
//! min/max labels, and a raw CSV dump of the grid.

use anyhow::{Context, Result};
use image::{Rgb, RgbImage};
use std::path::Path;

use lddim_fvm::ScalarField2D;

// viridis anchors, sampled uniformly in [0, 1]
const VIRIDIS: [[f64; 3]; 9] = [
    [0.267004, 0.004874, 0.329415],
    [0.281412, 0.155834, 0.469201],
    [0.244972, 0.287675, 0.537260],
    [0.190631, 0.407061, 0.556089],
    [0.147607, 0.511733, 0.557049],
    [0.127568, 0.566949, 0.550556],
    [0.209670, 0.718701, 0.472873],
    [0.565498, 0.842150, 0.262877],
    [0.993248, 0.906157, 0.143936],
];

fn viridis(t: f64) -> Rgb<u8> {
    let t = t.clamp(0.0, 1.0) * (VIRIDIS.len() - 1) as f64;
    let lo = t.floor() as usize;
    let hi = (lo + 1).min(VIRIDIS.len() - 1);
    let f = t - lo as f64;
    let mut c = [0u8; 3];
    for (k, ch) in c.iter_mut().enumerate() {
        let v = VIRIDIS[lo][k] + f * (VIRIDIS[hi][k] - VIRIDIS[lo][k]);
        *ch = (v * 255.0).round() as u8;
    }
    Rgb(c)
}

// 3x5 glyphs for colorbar labels
fn glyph(c: char) -> [u8; 5] {
    match c {
        '0' => [0b111, 0b101, 0b101, 0b101, 0b111],
        '1' => [0b010, 0b110, 0b010, 0b010, 0b111],
        '2' => [0b111, 0b001, 0b111, 0b100, 0b111],
        '3' => [0b111, 0b001, 0b111, 0b001, 0b111],
        '4' => [0b101, 0b101, 0b111, 0b001, 0b001],
        '5' => [0b111, 0b100, 0b111, 0b001, 0b111],
        '6' => [0b111, 0b100, 0b111, 0b101, 0b111],
        '7' => [0b111, 0b001, 0b001, 0b010, 0b010],
        '8' => [0b111, 0b101, 0b111, 0b101, 0b111],
        '9' => [0b111, 0b101, 0b111, 0b001, 0b111],
        '-' => [0b000, 0b000, 0b111, 0b000, 0b000],
        '+' => [0b000, 0b010, 0b111, 0b010, 0b000],
        '.' => [0b000, 0b000, 0b000, 0b000, 0b010],
        'e' => [0b000, 0b111, 0b111, 0b100, 0b111],
        _ => [0; 5],
    }
}

fn draw_text(img: &mut RgbImage, x0: u32, y0: u32, text: &str) {
    let mut x = x0;
    for c in text.chars() {
        let g = glyph(c);
        for (row, bits) in g.iter().enumerate() {
            for col in 0..3u32 {
                if bits & (0b100 >> col) != 0 {
                    let (px, py) = (x + col, y0 + row as u32);
                    if px < img.width() && py < img.height() {
                        img.put_pixel(px, py, Rgb([0, 0, 0]));
                    }
                }
            }
        }
        x += 4;
    }
}

/// Render `field` to a PNG heatmap with a labelled colorbar, and dump
/// the raw values (row per grid row) next to it as CSV.
pub fn plot_field(field: &ScalarField2D, png_path: &Path, csv_path: &Path) -> Result<()> {
    let (nx, ny) = (field.nx, field.ny);
    let lo = field.values().iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = field
        .values()
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };

    let scale = (256 / nx.max(ny)).clamp(1, 16) as u32;
    let field_w = nx as u32 * scale;
    let field_h = (ny as u32 * scale).max(24);
    let bar_panel = 56u32;
    let mut img = RgbImage::from_pixel(field_w + bar_panel, field_h, Rgb([255, 255, 255]));

    for j in 0..ny {
        for i in 0..nx {
            let t = (field.at(i, j) - lo) / span;
            let color = viridis(t);
            for dy in 0..scale {
                for dx in 0..scale {
                    // row 0 at the bottom of the image
                    let py = field_h - 1 - (j as u32 * scale + dy).min(field_h - 1);
                    img.put_pixel(i as u32 * scale + dx, py, color);
                }
            }
        }
    }

    // colorbar strip with min / max labels
    let bar_x = field_w + 6;
    let bar_w = 10u32;
    let bar_top = 8u32;
    let bar_h = field_h.saturating_sub(16).max(8);
    for y in 0..bar_h {
        let t = 1.0 - y as f64 / (bar_h - 1).max(1) as f64;
        let color = viridis(t);
        for x in 0..bar_w {
            img.put_pixel(bar_x + x, bar_top + y, color);
        }
    }
    draw_text(&mut img, bar_x + bar_w + 3, bar_top, &format!("{hi:.1e}"));
    draw_text(
        &mut img,
        bar_x + bar_w + 3,
        bar_top + bar_h - 5,
        &format!("{lo:.1e}"),
    );

    img.save(png_path)
        .with_context(|| format!("writing {}", png_path.display()))?;

    let mut csv = String::new();
    for j in 0..ny {
        let row: Vec<String> = (0..nx).map(|i| format!("{:.17e}", field.at(i, j))).collect();
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    std::fs::write(csv_path, csv).with_context(|| format!("writing {}", csv_path.display()))?;
    Ok(())
}
