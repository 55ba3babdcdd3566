//! Integer-only shape rasterization.

/// `round(sin(3k°) · 65536)` for `k = 0..=30`.
const SIN_Q1: [i64; 31] = [
    0, 3430, 6850, 10252, 13626, 16962, 20252, 23486, 26656, 29753, 32768, 35693, 38521, 41243,
    43852, 46341, 48703, 50931, 53020, 54963, 56756, 58393, 59870, 61183, 62328, 63303, 64104,
    64729, 65177, 65446, 65536,
];

/// Fixed-point sine (scale 65536) of an angle in whole degrees divisible by 3.
pub(crate) fn sin_fp(degrees: i64) -> i64 {
    debug_assert_eq!(degrees % 3, 0);
    let d = degrees.rem_euclid(360);
    match d {
        0..=90 => SIN_Q1[(d / 3) as usize],
        91..=180 => SIN_Q1[((180 - d) / 3) as usize],
        181..=270 => -SIN_Q1[((d - 180) / 3) as usize],
        _ => -SIN_Q1[((360 - d) / 3) as usize],
    }
}

pub(crate) fn cos_fp(degrees: i64) -> i64 {
    sin_fp(degrees + 90)
}

/// Drawable outline in pixel coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Outline {
    Circle { cx: i64, cy: i64, r: i64 },
    /// Convex polygon, vertices in order.
    Polygon(Vec<(i64, i64)>),
}

impl Outline {
    /// Regular polygon with circumradius `r`, first vertex at `start` degrees
    /// (screen coordinates, y down).
    pub(crate) fn regular(cx: i64, cy: i64, r: i64, sides: i64, start: i64) -> Self {
        let step = 360 / sides;
        Outline::Polygon(
            (0..sides)
                .map(|k| {
                    let a = start + k * step;
                    (
                        cx + div_round(r * cos_fp(a), 65536),
                        cy + div_round(r * sin_fp(a), 65536),
                    )
                })
                .collect(),
        )
    }

    /// Whether the center of pixel `(x, y)` lies inside or on the outline.
    fn contains(&self, x: i64, y: i64) -> bool {
        // half-pixel units so pixel centers are integers
        let (px, py) = (2 * x + 1, 2 * y + 1);
        match self {
            Outline::Circle { cx, cy, r } => {
                let (dx, dy) = (px - 2 * cx, py - 2 * cy);
                dx * dx + dy * dy <= 4 * r * r
            }
            Outline::Polygon(v) => {
                let n = v.len();
                let mut sign = 0i64;
                for i in 0..n {
                    let (ax, ay) = (2 * v[i].0, 2 * v[i].1);
                    let (bx, by) = (2 * v[(i + 1) % n].0, 2 * v[(i + 1) % n].1);
                    let cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax);
                    if cross != 0 {
                        if sign == 0 {
                            sign = cross.signum();
                        } else if cross.signum() != sign {
                            return false;
                        }
                    }
                }
                true
            }
        }
    }

    fn bounds(&self) -> (i64, i64, i64, i64) {
        match self {
            Outline::Circle { cx, cy, r } => (cx - r - 1, cy - r - 1, cx + r + 1, cy + r + 1),
            Outline::Polygon(v) => {
                let xs = v.iter().map(|p| p.0);
                let ys = v.iter().map(|p| p.1);
                (
                    xs.clone().min().unwrap() - 1,
                    ys.clone().min().unwrap() - 1,
                    xs.max().unwrap() + 1,
                    ys.max().unwrap() + 1,
                )
            }
        }
    }
}

fn div_round(a: i64, b: i64) -> i64 {
    (2 * a + b).div_euclid(2 * b)
}

/// Fills `outline` with `fill` and strokes its border (pixels inside with an
/// outside 8-neighbour) with `stroke`.
pub(crate) fn draw(pixels: &mut [u8], width: usize, height: usize, outline: &Outline, fill: u8, stroke: u8) {
    let (x0, y0, x1, y1) = outline.bounds();
    let (w, h) = (width as i64, height as i64);
    for y in y0.max(0)..=y1.min(h - 1) {
        for x in x0.max(0)..=x1.min(w - 1) {
            if !outline.contains(x, y) {
                continue;
            }
            let border = (-1..=1).any(|dy| (-1..=1).any(|dx| !outline.contains(x + dx, y + dy)));
            pixels[(y * w + x) as usize] = if border { stroke } else { fill };
        }
    }
}
