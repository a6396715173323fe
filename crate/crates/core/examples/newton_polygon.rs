//! Newton polygon of a phase: vertices, edge slopes and the SVG drawing.

use oscint::parser::parse_phase;
use oscint::polygon::reduced_polygon_of;

fn main() {
    let s = parse_phase("x^5*y - x^3*y^2 + x^2*y^4").unwrap();
    let poly = reduced_polygon_of(&s).unwrap();
    println!("{}", serde_json::to_string_pretty(&poly.to_json()).unwrap());
    for e in &poly.edges {
        println!("edge of slope parameter m = {}", e.m);
    }
    std::fs::write("polygon.svg", poly.to_svg()).unwrap();
    println!("wrote polygon.svg");
}
