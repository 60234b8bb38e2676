//! SVG figures through a stereographic chart.
//!
//! A [`Scene`] is a list of named layers drawn in order. Rendering is a pure
//! function of the scene: numbers are printed with six decimals, element ids
//! come from layer names only, and nothing depends on time or hashing.

use crate::circle::ChartCircle;
use crate::construction::{enumerate_arrangements, Configuration, ConstructionCertificate};
use crate::kleinian::{thin_points, LimitSetCloud};
use crate::moebius::{project_from_sphere, ExtComplex};
use crate::polyline::arc_distance;
use crate::vec3::Mat3;
use crate::{Circle, Point};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenderError {
    #[error("projection pole is within {clearance} of {what} in layer '{layer}'; choose another pole")]
    PoleTooClose { layer: String, what: String, clearance: f64 },
    #[error("invalid scene: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    /// Point of the sphere sent to infinity.
    pub pole: Point,
    /// SVG units per chart unit.
    pub scale: f64,
    /// Minimum angular distance between the pole and any drawn object.
    pub clearance: f64,
}

impl Default for Projection {
    fn default() -> Self {
        Projection { pole: Point::e3(), scale: 400.0, clearance: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Style {
    pub stroke: String,
    pub fill: String,
    pub width: f64,
    pub dash: Option<String>,
}

impl Style {
    pub fn stroke(color: &str, width: f64) -> Self {
        Style { stroke: color.into(), fill: "none".into(), width, dash: None }
    }

    pub fn dashed(mut self, pattern: &str) -> Self {
        self.dash = Some(pattern.into());
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Item {
    Circle { circle: Circle, style: Style },
    Polyline { points: Vec<Point>, closed: bool, style: Style },
    /// Drawn as one path of round dots of the given diameter.
    Points { points: Vec<Point>, diameter: f64, color: String },
    Label { at: Point, text: String, size: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub name: String,
    pub items: Vec<Item>,
}

impl Layer {
    pub fn new(name: &str) -> Self {
        Layer { name: name.into(), items: vec![] }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Scene {
    pub layers: Vec<Layer>,
    pub projection: Projection,
    pub title: Option<String>,
}

fn num(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn layer_id(name: &str) -> String {
    let id: String = name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '-' }).collect();
    format!("layer-{id}")
}

enum Shape {
    Circle { cx: f64, cy: f64, r: f64, style: Style },
    Polyline { points: String, style: Style },
    Dots { d: String, style: Style },
    Text { x: f64, y: f64, text: String, size: f64 },
}

struct Chart {
    rot: Mat3<f64>,
    scale: f64,
    clearance: f64,
    pole: Point,
    lo: (f64, f64),
    hi: (f64, f64),
}

impl Chart {
    fn extend(&mut self, x: f64, y: f64, pad: f64) {
        self.lo = (self.lo.0.min(x - pad), self.lo.1.min(y - pad));
        self.hi = (self.hi.0.max(x + pad), self.hi.1.max(y + pad));
    }

    /// SVG coordinates (y down) of a point, with the pole clearance checked by the caller.
    fn point(&mut self, p: Point) -> (f64, f64) {
        match project_from_sphere(self.rot.apply(p)) {
            ExtComplex::Finite(w) => {
                let xy = (w.re * self.scale, -w.im * self.scale);
                self.extend(xy.0, xy.1, 0.0);
                xy
            }
            ExtComplex::Infinity => unreachable!("pole clearance is checked first"),
        }
    }
}

pub fn render_svg(scene: &Scene) -> Result<String, RenderError> {
    let pr = &scene.projection;
    if !(pr.scale > 0.0 && pr.scale.is_finite()) {
        return Err(RenderError::Invalid(format!("scale must be positive, got {}", pr.scale)));
    }
    if !((pr.pole.norm() - 1.0).abs() < 1e-9) {
        return Err(RenderError::Invalid("pole is not on the unit sphere".into()));
    }
    let mut chart = Chart {
        rot: Mat3::rotation_between(pr.pole, Point::e3()),
        scale: pr.scale,
        clearance: pr.clearance,
        pole: pr.pole,
        lo: (f64::INFINITY, f64::INFINITY),
        hi: (f64::NEG_INFINITY, f64::NEG_INFINITY),
    };
    let mut groups = vec![];
    for layer in &scene.layers {
        let clearance = chart.clearance;
        let too_close = |what: String| RenderError::PoleTooClose { layer: layer.name.clone(), what, clearance };
        let mut shapes = vec![];
        for (k, item) in layer.items.iter().enumerate() {
            match item {
                Item::Circle { circle, style } => {
                    let d = (chart.pole.angle_to(circle.center()) - circle.angular_radius()).abs();
                    let inside = circle.disk_contains(chart.pole);
                    if d < chart.clearance || (inside && style.fill != "none") {
                        return Err(too_close(format!("circle {k}")));
                    }
                    match circle.rotated(&chart.rot).chart() {
                        ChartCircle::Circle { center, radius, .. } => {
                            let (cx, cy, r) = (center.re * chart.scale, -center.im * chart.scale, radius * chart.scale);
                            chart.extend(cx, cy, r);
                            shapes.push(Shape::Circle { cx, cy, r, style: style.clone() });
                        }
                        ChartCircle::Line { .. } => return Err(too_close(format!("circle {k}"))),
                    }
                }
                Item::Polyline { points, closed, style } => {
                    if points.is_empty() {
                        continue;
                    }
                    let m = points.len();
                    let segs = if *closed { m } else { m - 1 };
                    let near = (0..segs.max(1)).any(|i| {
                        let (a, b) = (points[i], points[(i + 1) % m]);
                        arc_distance(chart.pole, a, b).0 < chart.clearance
                    });
                    if near {
                        return Err(too_close(format!("polyline {k}")));
                    }
                    let mut pts = String::new();
                    let first = if *closed { Some(&points[0]) } else { None };
                    for p in points.iter().chain(first) {
                        let (x, y) = chart.point(*p);
                        if !pts.is_empty() {
                            pts.push(' ');
                        }
                        let _ = write!(pts, "{},{}", num(x), num(y));
                    }
                    shapes.push(Shape::Polyline { points: pts, style: style.clone() });
                }
                Item::Points { points, diameter, color } => {
                    if points.iter().any(|p| p.angle_to(chart.pole) < chart.clearance) {
                        return Err(too_close(format!("point cloud {k}")));
                    }
                    let mut d = String::new();
                    for p in points {
                        let (x, y) = chart.point(*p);
                        if !d.is_empty() {
                            d.push(' ');
                        }
                        let _ = write!(d, "M{} {}h0", num(x), num(y));
                    }
                    let style = Style { stroke: color.clone(), fill: "none".into(), width: *diameter, dash: None };
                    shapes.push(Shape::Dots { d, style });
                }
                Item::Label { at, text, size } => {
                    if at.angle_to(chart.pole) < chart.clearance {
                        return Err(too_close(format!("label {k}")));
                    }
                    let (x, y) = chart.point(*at);
                    shapes.push(Shape::Text { x, y, text: text.clone(), size: *size });
                }
            }
        }
        groups.push((layer_id(&layer.name), shapes));
    }

    if !chart.lo.0.is_finite() {
        chart.lo = (-chart.scale, -chart.scale);
        chart.hi = (chart.scale, chart.scale);
    }
    let pad = 0.02 * (chart.hi.0 - chart.lo.0).max(chart.hi.1 - chart.lo.1).max(1.0);
    let (x0, y0) = (chart.lo.0 - pad, chart.lo.1 - pad);
    let (w, h) = (chart.hi.0 - chart.lo.0 + 2.0 * pad, chart.hi.1 - chart.lo.1 + 2.0 * pad);

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" viewBox=\"{} {} {} {}\">",
        num(w),
        num(h),
        num(x0),
        num(y0),
        num(w),
        num(h)
    );
    if let Some(t) = &scene.title {
        let _ = writeln!(out, "<title>{}</title>", escape(t));
    }
    for (id, shapes) in groups {
        let _ = writeln!(out, "<g id=\"{id}\">");
        for s in shapes {
            match s {
                Shape::Circle { cx, cy, r, style } => {
                    let _ = writeln!(out, "<circle cx=\"{}\" cy=\"{}\" r=\"{}\"{}/>", num(cx), num(cy), num(r), attrs(&style));
                }
                Shape::Polyline { points, style } => {
                    let _ = writeln!(out, "<polyline points=\"{points}\"{} stroke-linejoin=\"round\"/>", attrs(&style));
                }
                Shape::Dots { d, style } => {
                    let _ = writeln!(out, "<path d=\"{d}\"{} stroke-linecap=\"round\"/>", attrs(&style));
                }
                Shape::Text { x, y, text, size } => {
                    let _ = writeln!(
                        out,
                        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"{}\">{}</text>",
                        num(x),
                        num(y),
                        num(size),
                        escape(&text)
                    );
                }
            }
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn attrs(s: &Style) -> String {
    let mut a = format!(" fill=\"{}\" stroke=\"{}\" stroke-width=\"{}\"", escape(&s.fill), escape(&s.stroke), num(s.width));
    if let Some(d) = &s.dash {
        let _ = write!(a, " stroke-dasharray=\"{}\"", escape(d));
    }
    a
}

/// Options for [`configuration_scene`].
#[derive(Clone, Debug, Default)]
pub struct ConfigView<'a> {
    pub certificate: Option<&'a ConstructionCertificate>,
    /// Highlight the stations of this arrangement index.
    pub arrangement: Option<usize>,
    pub show_chain: bool,
    pub projection: Projection,
}

/// The generating curve as one polyline and every station as two circles.
pub fn configuration_scene(cfg: &Configuration, view: &ConfigView) -> Result<Scene, RenderError> {
    let n = cfg.spec.n;
    let chosen = match view.arrangement {
        Some(k) => {
            let all = enumerate_arrangements(n, &cfg.stations);
            let a = all
                .get(k)
                .ok_or_else(|| RenderError::Invalid(format!("arrangement {k} out of range (0..{})", all.len())))?;
            Some((a.stations.clone(), a.label()))
        }
        None => None,
    };
    let lw = 0.5;
    let mut layers = vec![];
    if view.show_chain {
        let mut chain = Layer::new("chain");
        for c in &cfg.chain.circles {
            chain.items.push(Item::Circle { circle: *c, style: Style::stroke("#9ecae1", 0.1) });
        }
        layers.push(chain);
    }
    let mut curve = Layer::new("curve");
    curve.items.push(Item::Polyline {
        points: cfg.curve.polyline.vertices().to_vec(),
        closed: true,
        style: Style::stroke("#000000", lw),
    });
    layers.push(curve);

    let mut stations = Layer::new("stations");
    for (i, s) in cfg.stations.iter().enumerate() {
        let style = match &chosen {
            Some((sel, _)) if sel.contains(&i) => Style::stroke("#d62728", 2.0 * lw),
            Some(_) => Style::stroke("#7f7f7f", lw).dashed("2 2"),
            None => Style::stroke("#1f77b4", lw),
        };
        for c in &s.circles {
            stations.items.push(Item::Circle { circle: *c, style: style.clone() });
        }
    }
    layers.push(stations);

    if let Some(cert) = view.certificate {
        let mut notes = Layer::new("annotations");
        let size = 10.0;
        for s in &cfg.stations {
            notes.items.push(Item::Label { at: s.circles[0].center(), text: s.kind.label(), size });
        }
        layers.push(notes);
        let mut title = format!("N = {n}: {}", cert.status);
        if let Some((_, label)) = &chosen {
            let pass = cert.arrangements.iter().find(|a| &a.label == label).map(|a| a.pass);
            let _ = write!(title, ", arrangement {label}");
            if let Some(p) = pass {
                let _ = write!(title, " {}", if p { "certified" } else { "not certified" });
            }
        }
        return Ok(Scene { layers, projection: view.projection.clone(), title: Some(title) });
    }
    Ok(Scene { layers, projection: view.projection.clone(), title: Some(format!("N = {n}")) })
}

/// Points closer than about one drawing unit are merged before drawing.
pub fn cloud_scene(cloud: &LimitSetCloud, projection: Projection) -> Scene {
    let points = thin_points(cloud.points.clone(), 1.0 / projection.scale);
    let mut layer = Layer::new("limit-set");
    layer.items.push(Item::Points { points, diameter: 1.0, color: "#000000".into() });
    Scene {
        layers: vec![layer],
        projection,
        title: Some(format!("limit set: {} points, depth {}", cloud.points.len(), cloud.depth)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_scene_is_minimal_svg() {
        let s = render_svg(&Scene::default()).unwrap();
        assert!(s.starts_with("<?xml"));
        assert!(s.contains("version=\"1.1\""));
        assert!(s.trim_end().ends_with("</svg>"));
        assert!(!s.contains("<g"));
    }

    #[test]
    fn negative_zero_is_normalised() {
        assert_eq!(num(-0.0), "0.000000");
        assert_eq!(num(-1e-9), "0.000000");
        assert_eq!(num(1.5), "1.500000");
    }

    #[test]
    fn circle_through_pole_is_rejected() {
        let mut l = Layer::new("x");
        let c = Circle::cap(Point::e1(), std::f64::consts::FRAC_PI_2).unwrap();
        l.items.push(Item::Circle { circle: c, style: Style::stroke("#000", 1.0) });
        let scene = Scene { layers: vec![l], ..Scene::default() };
        assert!(matches!(render_svg(&scene), Err(RenderError::PoleTooClose { .. })));
    }

    #[test]
    fn equator_projects_to_unit_circle() {
        let mut l = Layer::new("eq");
        l.items.push(Item::Circle { circle: Circle::new(Point::e3(), 0.0).unwrap(), style: Style::stroke("#000", 1.0) });
        let scene = Scene { layers: vec![l], projection: Projection { scale: 100.0, ..Projection::default() }, title: None };
        let s = render_svg(&scene).unwrap();
        assert!(s.contains("<circle cx=\"0.000000\" cy=\"0.000000\" r=\"100.000000\""), "{s}");
    }

    #[test]
    fn text_is_escaped() {
        let mut l = Layer::new("a b");
        l.items.push(Item::Label { at: -Point::e3(), text: "<&>".into(), size: 3.0 });
        let s = render_svg(&Scene { layers: vec![l], ..Scene::default() }).unwrap();
        assert!(s.contains("&lt;&amp;&gt;"));
        assert!(s.contains("id=\"layer-a-b\""));
    }
}
