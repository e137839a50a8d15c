//! A small software rasterizer for particle snapshots: each particle is a
//! square sprite with [`sprite_intensity`] falloff, blended additively.
//! Used for offline images; it follows the same math an on-screen renderer
//! would.

use nalgebra::Vector4;

use crate::engine::Snapshot;
use crate::model::{Interval, SystemDefinition};
use crate::view::{blend_additive, color_for_position, sprite_intensity, sprite_quad, Camera};

#[derive(Debug, Clone, PartialEq)]
pub struct RenderSettings {
    pub width: u32,
    pub height: u32,
    pub sprite_radius_px: f64,
    /// Alpha multiplier applied to every sprite.
    pub gain: f64,
}

impl Default for RenderSettings {
    fn default() -> Self {
        RenderSettings {
            width: 800,
            height: 600,
            sprite_radius_px: crate::view::DEFAULT_SPRITE_RADIUS_PX,
            gain: 1.0,
        }
    }
}

/// Linear RGB frame buffer, rows top to bottom.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<[f32; 3]>,
}

impl Frame {
    pub fn new(width: u32, height: u32) -> Frame {
        Frame {
            width,
            height,
            pixels: vec![[0.0; 3]; (width * height) as usize],
        }
    }

    pub fn pixel(&self, x: u32, y: u32) -> [f32; 3] {
        self.pixels[(y * self.width + x) as usize]
    }

    /// Interleaved 8-bit RGB.
    pub fn to_rgb8(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .flat_map(|p| p.map(|c| (c.clamp(0.0, 1.0) * 255.0).round() as u8))
            .collect()
    }

    /// Sum of all channels, a cheap brightness measure.
    pub fn energy(&self) -> f64 {
        self.pixels.iter().flatten().map(|c| *c as f64).sum()
    }
}

/// Splat one sprite centred at clip-space `clip`.
pub fn splat(frame: &mut Frame, clip: Vector4<f64>, color: [f64; 3], settings: &RenderSettings) {
    let Some(quad) = sprite_quad(clip, settings.sprite_radius_px, [frame.width, frame.height])
    else {
        return;
    };
    let depth = clip.z / clip.w;
    if !(-1.0..=1.0).contains(&depth) {
        return;
    }
    let (w, h) = (frame.width as f64, frame.height as f64);
    let to_px = |ndc: [f64; 2]| [(ndc[0] + 1.0) * 0.5 * w, (1.0 - ndc[1]) * 0.5 * h];
    let lo = to_px([quad[0][0], quad[2][1]]);
    let hi = to_px([quad[2][0], quad[0][1]]);
    let centre = [(lo[0] + hi[0]) * 0.5, (lo[1] + hi[1]) * 0.5];
    let r = settings.sprite_radius_px;
    let x0 = lo[0].floor().max(0.0) as i64;
    let y0 = lo[1].floor().max(0.0) as i64;
    let x1 = (hi[0].ceil() as i64).min(frame.width as i64);
    let y1 = (hi[1].ceil() as i64).min(frame.height as i64);
    for y in y0..y1 {
        for x in x0..x1 {
            let dx = x as f64 + 0.5 - centre[0];
            let dy = y as f64 + 0.5 - centre[1];
            let alpha = sprite_intensity((dx * dx + dy * dy).sqrt() / r) * settings.gain;
            if alpha > 0.0 {
                let px = &mut frame.pixels[(y as u64 * frame.width as u64 + x as u64) as usize];
                *px = blend_additive(*px, color, alpha);
            }
        }
    }
}

/// Render a snapshot: each particle is drawn with its group's technique
/// (axes and colour) through `camera`.
pub fn render_snapshot(
    def: &SystemDefinition,
    snapshot: &Snapshot,
    camera: &Camera,
    settings: &RenderSettings,
) -> Frame {
    let mut frame = Frame::new(settings.width, settings.height);
    let vp = camera.view_projection(settings.width as f64 / settings.height as f64);
    // per group: axis indices, their bounds, colour mode
    let styles: Vec<Option<(Vec<usize>, Vec<Interval>, _)>> = def
        .groups
        .iter()
        .map(|g| {
            let t = def.technique(&g.technique)?;
            let axes: Vec<usize> = t.axes.iter().filter_map(|a| def.state_index(a)).collect();
            let bounds = axes.iter().map(|&i| def.state_variables[i].bounds).collect();
            Some((axes, bounds, t.color.clone()))
        })
        .collect();
    let mut coords = Vec::with_capacity(3);
    for (i, p) in snapshot.particles().enumerate() {
        let Some((axes, bounds, mode)) = &styles[snapshot.group_ids[i] as usize] else {
            continue;
        };
        coords.clear();
        coords.extend(axes.iter().map(|&a| p[a] as f64));
        if coords.iter().any(|c| !c.is_finite()) {
            continue;
        }
        let world = Vector4::new(
            coords[0],
            coords.get(1).copied().unwrap_or(0.0),
            coords.get(2).copied().unwrap_or(0.0),
            1.0,
        );
        let color = color_for_position(&coords, bounds, mode);
        splat(&mut frame, vp * world, color, settings);
    }
    frame
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_sprite_is_centred_and_bounded() {
        let settings = RenderSettings {
            width: 21,
            height: 21,
            sprite_radius_px: 3.0,
            gain: 1.0,
        };
        let mut f = Frame::new(21, 21);
        splat(&mut f, Vector4::new(0.0, 0.0, 0.0, 1.0), [1.0, 1.0, 1.0], &settings);
        let centre = f.pixel(10, 10)[0];
        assert!(centre > 0.8);
        assert!(f.pixel(10, 12)[0] < centre);
        assert_eq!(f.pixel(10, 14), [0.0; 3]);
        assert_eq!(f.pixel(0, 0), [0.0; 3]);
    }

    #[test]
    fn overlapping_sprites_add_then_saturate() {
        let settings = RenderSettings {
            width: 9,
            height: 9,
            sprite_radius_px: 2.0,
            gain: 0.2,
        };
        let mut f = Frame::new(9, 9);
        let c = Vector4::new(0.0, 0.0, 0.0, 1.0);
        splat(&mut f, c, [1.0, 0.0, 0.0], &settings);
        let one = f.pixel(4, 4)[0];
        splat(&mut f, c, [1.0, 0.0, 0.0], &settings);
        assert!((f.pixel(4, 4)[0] - 2.0 * one).abs() < 1e-6);
        for _ in 0..20 {
            splat(&mut f, c, [1.0, 0.0, 0.0], &settings);
        }
        assert_eq!(f.pixel(4, 4)[0], 1.0);
    }
}
