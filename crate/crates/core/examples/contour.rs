//! Builds the default contour and loop system for the genus-2 fixture and
//! writes the geometry as JSON for plotting.
//!
//!     cargo run --example contour -- contour.json

use nls_rhp::contour::{build_contour, LoopKind};
use nls_rhp::fixtures;

fn main() -> nls_rhp::Result<()> {
    let fx = fixtures::post_break();
    let cs = build_contour(&fx.seed, fx.params.mu)?;
    println!("pinch point z0 = {}", cs.z0);
    println!("branchpoints: {:?}", cs.alphas.upper());
    println!("offsets: small {:.4}, big {:.4}, arc scale {:.4}", cs.small_offset, cs.big_offset, cs.arc_scale());
    for kind in std::iter::once(LoopKind::Big).chain(cs.row_loops()) {
        let lp = cs.loop_by_kind(kind);
        let verts: usize = lp.parts.iter().map(|p| p.vertices.len()).sum();
        println!("{kind:?}: {} part(s), {verts} vertices", lp.parts.len());
    }
    match std::env::args().nth(1) {
        Some(path) => {
            std::fs::write(&path, cs.dump_json())?;
            println!("geometry written to {path}");
        }
        None => println!("(pass a file name to write the geometry as JSON)"),
    }
    Ok(())
}
