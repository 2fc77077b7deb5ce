//! Sign conditions on an admissible contour and genus detection at the two
//! fixtures. Takes about half a minute.

use std::collections::BTreeMap;

use nls_rhp::analysis::{check_signs, detect_genus, SignOptions};
use nls_rhp::contour::build_contour;
use nls_rhp::rhp::RhpSolution;
use nls_rhp::{fixtures, Tolerances};

fn main() -> nls_rhp::Result<()> {
    let tols = Tolerances::default();
    let opts = SignOptions::default();

    let fx = fixtures::post_break();
    let rep = fx.solve(&tols)?;
    let sol = RhpSolution::new(build_contour(&rep.alphas, fx.params.mu)?, fx.params, tols.quad)?;
    let signs = check_signs(&sol, &opts)?;
    println!("genus-2 fixture: passed = {}", signs.passed);
    for m in &signs.main_arcs {
        println!(
            "  main arc {}: |Im h| on arc <= {:.1e}, Im h beside it <= {:.2e} / {:.2e}",
            m.index, m.on_arc_max_abs, m.side_max_near, m.side_max_far
        );
    }
    for c in &signs.comp_arcs {
        println!("  complementary arc {}: min Im h = {:.2e}", c.index, c.min_im_h);
    }
    println!("  tail: min Im h = {:.2e} (path), {:.2e} (axis)", signs.tail.min_im_h_path, signs.tail.min_im_h_axis);
    println!("  min |h'/R| = {:.3e}", signs.hprime_over_r_min);

    for fx in [fixtures::pre_break(), fixtures::post_break()] {
        let seeds = BTreeMap::from([
            (0, if fx.params.genus == 0 { fx.seed.clone() } else { fixtures::post_break_genus_zero_seed() }),
            (2, fixtures::post_break().seed),
        ]);
        let d = detect_genus(&fx.params, &seeds, &tols, &opts)?;
        println!("{} fixture: genus {:?}", fx.name, d.genus);
    }
    Ok(())
}
