//! Deterministic raster and SVG rendering of panels.
//!
//! | type       | drawn as                      |
//! |------------|-------------------------------|
//! | `triangle` | regular triangle, apex up     |
//! | `square`   | axis-aligned square           |
//! | `pentagon` | regular pentagon, apex up     |
//! | `hexagon`  | regular hexagon, flat sides   |
//! | `circle`   | disc                          |
//!
//! Unknown type names fall back to a polygon with `3 + index % 4` sides.
//! Size level `s` of `L` scales the circumradius to `(400 + 500 s / (L - 1))`
//! thousandths of half the slot extent. Color level `c` fills with grey
//! `255 - 255 c / (L - 1)`, so level 0 is white. Every shape gets a black
//! two-pixel border. With a rotation seed each object is turned by a random
//! multiple of 15°.

mod raster;

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{AttributeDomain, Configuration, SlotGeometry, SlotSet};
use crate::error::{Error, Result};
use crate::execution::PredictedScene;
use crate::generator::{ComponentSymbol, PanelSymbol};
use crate::logspace::LogDist;
use raster::{draw, Outline};

pub const BACKGROUND: u8 = 255;
pub const STROKE: u8 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RenderOptions {
    pub width: usize,
    pub height: usize,
    pub rotation_seed: Option<u64>,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            width: 160,
            height: 160,
            rotation_seed: None,
        }
    }
}

/// Greyscale image, row-major, 0 is black.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PanelRaster {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
    svg: String,
}

impl PanelRaster {
    pub fn pixel(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Binary PGM (P5).
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    /// SVG 1.1 document of the same drawing.
    pub fn to_svg(&self) -> &str {
        &self.svg
    }

    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_pgm()).map_err(|e| Error::io(path, e))
    }

    pub fn write_svg(&self, path: &Path) -> Result<()> {
        std::fs::write(path, &self.svg).map_err(|e| Error::io(path, e))
    }
}

pub fn grey_level(color: u32, levels: u32) -> u8 {
    if levels <= 1 {
        return BACKGROUND;
    }
    let c = color.min(levels - 1);
    (255 - 255 * c / (levels - 1)) as u8
}

fn sides(name: &str, index: u32) -> i64 {
    match name {
        "triangle" => 3,
        "square" => 4,
        "pentagon" => 5,
        "hexagon" => 6,
        "circle" => 0,
        _ => 3 + (index % 4) as i64,
    }
}

fn base_angle(sides: i64) -> i64 {
    match sides {
        4 => 45,
        6 => 0,
        _ => -90,
    }
}

fn outline(
    symbol: &ComponentSymbol,
    slot: &SlotGeometry,
    domain: &AttributeDomain,
    options: &RenderOptions,
    rotation: i64,
) -> Outline {
    let (w, h) = (options.width as i64, options.height as i64);
    let cx = (slot.center_x * w as f64).round() as i64;
    let cy = (slot.center_y * h as f64).round() as i64;
    let extent = (slot.max_extent * w.min(h) as f64).round() as i64;
    let top = (domain.sizes.max(2) - 1) as i64;
    let scale = 400 + 500 * (symbol.size as i64).min(top) / top;
    let r = (extent * scale / 2000).max(2);
    let name = domain.types.get(symbol.shape as usize).map_or("", String::as_str);
    match sides(name, symbol.shape) {
        0 => Outline::Circle { cx, cy, r },
        n => Outline::regular(cx, cy, r, n, base_angle(n) + rotation),
    }
}

/// Draws every object of `panel`, components in order.
pub fn render_panel(
    panel: &PanelSymbol,
    config: Configuration,
    domain: &AttributeDomain,
    options: &RenderOptions,
) -> Result<PanelRaster> {
    if options.width == 0 || options.height == 0 {
        return Err(Error::contract("raster dimensions must be positive"));
    }
    let layouts = config.components();
    if layouts.len() != panel.components.len() {
        return Err(Error::contract("panel does not match configuration"));
    }
    let mut rng = options.rotation_seed.map(ChaCha8Rng::seed_from_u64);
    let mut pixels = vec![BACKGROUND; options.width * options.height];
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n<rect width=\"{0}\" height=\"{1}\" fill=\"#ffffff\"/>",
        options.width, options.height
    );
    for (comp, layout) in panel.components.iter().zip(&layouts) {
        for slot in comp.occupied.slots() {
            let rotation = rng.as_mut().map_or(0, |r| 15 * r.gen_range(0..24i64));
            let o = outline(comp, &layout.slots[slot], domain, options, rotation);
            let grey = grey_level(comp.color, domain.colors);
            draw(&mut pixels, options.width, options.height, &o, grey, STROKE);
            let fill = format!("#{grey:02x}{grey:02x}{grey:02x}");
            match &o {
                Outline::Circle { cx, cy, r } => {
                    let _ = writeln!(
                        svg,
                        "<circle cx=\"{cx}\" cy=\"{cy}\" r=\"{r}\" fill=\"{fill}\" stroke=\"#000000\" stroke-width=\"2\"/>"
                    );
                }
                Outline::Polygon(v) => {
                    let points: Vec<String> = v.iter().map(|(x, y)| format!("{x},{y}")).collect();
                    let _ = writeln!(
                        svg,
                        "<polygon points=\"{}\" fill=\"{fill}\" stroke=\"#000000\" stroke-width=\"2\"/>",
                        points.join(" ")
                    );
                }
            }
        }
    }
    svg.push_str("</svg>\n");
    Ok(PanelRaster {
        width: options.width,
        height: options.height,
        pixels,
        svg,
    })
}

fn sample_index<R: Rng>(dist: &LogDist, rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut cum = 0.0;
    let mut last = 0;
    for (i, p) in dist.probs().into_iter().enumerate() {
        if p > 0.0 {
            cum += p;
            last = i;
            if u < cum {
                return i;
            }
        }
    }
    last
}

/// Draws a concrete panel from the prediction: the occupied subset first,
/// then type, size and color per component.
pub fn sample_symbol(pred: &PredictedScene, seed: u64) -> Result<PanelSymbol> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let components = pred
        .belief
        .components
        .iter()
        .map(|c| {
            for d in c.all_dists() {
                if !(d.total() - 1.0).abs().le(&1e-9) {
                    return Err(Error::DegenerateBelief("prediction is not normalized".into()));
                }
            }
            let mask = sample_index(&c.position, &mut rng) + 1;
            Ok(ComponentSymbol {
                occupied: SlotSet::from_mask(mask as u16),
                shape: sample_index(&c.shape, &mut rng) as u32,
                size: sample_index(&c.size, &mut rng) as u32,
                color: sample_index(&c.color, &mut rng) as u32,
            })
        })
        .collect::<Result<_>>()?;
    Ok(PanelSymbol { components })
}

pub fn sample_and_render(
    pred: &PredictedScene,
    config: Configuration,
    domain: &AttributeDomain,
    seed: u64,
    options: &RenderOptions,
) -> Result<(PanelSymbol, PanelRaster)> {
    let symbol = sample_symbol(pred, seed)?;
    let raster = render_panel(&symbol, config, domain, options)?;
    Ok((symbol, raster))
}
