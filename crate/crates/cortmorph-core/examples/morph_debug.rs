use cortmorph_core::pipeline::{morph, planar_baseline, Diagnostics, MorphConfig};
use cortmorph_core::shapes;
use std::fmt::Write;

fn ascii(img: &cortmorph_core::Image) -> String {
    let mut s = String::new();
    for y in 0..img.height() {
        for x in 0..img.width() {
            let v = img.get(x, y);
            let c = if v > 0.8 { '#' } else if v > 0.5 { '+' } else if v > 0.25 { '.' } else if v > 0.08 { ',' } else { ' ' };
            s.push(c);
        }
        s.push('\n');
    }
    s
}

fn main() {
    let cfg = MorphConfig::with_image_size(32);
    let i0 = shapes::letter_t(32);
    let i1 = shapes::rotate_nearest(&i0, std::f64::consts::FRAC_PI_4);
    let cort = morph(&i0, &i1, &cfg).unwrap();
    let base = planar_baseline(&i0, &i1, &cfg).unwrap();
    let mut out = String::new();
    if let Diagnostics::Morph(d) = &cort.diagnostics {
        writeln!(out, "frame constant {}", d.frame_constant).unwrap();
        for ch in &d.channels {
            for (sign, leg) in [("+", &ch.pos), ("-", &ch.neg)] {
                if let Some(l) = leg {
                    writeln!(out, "{}{}: {}x{} iters {} res {:.2e} m0 {:.3} m1 {:.3}",
                        ch.channel, sign, l.support_src, l.support_dst,
                        l.sinkhorn_iterations, l.sinkhorn_residual, l.mass_src, l.mass_dst).unwrap();
                }
            }
        }
    }
    for f in &cort.frames {
        let mx = f.raw.pixels().iter().cloned().fold(0.0, f64::max);
        let tr = shapes::rotate_nearest(&i0, f.t * std::f64::consts::FRAC_PI_4);
        writeln!(out, "== cortical t={} raw_max={mx:.3}\n{}", f.t, ascii(&f.raw)).unwrap();
        writeln!(out, "== cortical t={} SHARP\n{}", f.t, ascii(&f.sharpened)).unwrap();
        writeln!(out, "== truth t={}\n{}", f.t, ascii(&tr)).unwrap();
    }
    for f in &base.frames {
        writeln!(out, "== baseline t={} SHARP\n{}", f.t, ascii(&f.sharpened)).unwrap();
    }
    std::fs::write("/tmp/morphdbg.txt", out).unwrap();
    println!("written /tmp/morphdbg.txt");
}
