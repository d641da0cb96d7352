//! Areas of lenses and of unions of equal discs.
//!
//! Union areas are integrated exactly over horizontal slabs. Slab edges are
//! placed at every disc top/bottom and every circle-circle crossing, so inside
//! a slab the order of all chord endpoints is fixed and the covered length is
//! a signed sum of terms `cx +- sqrt(R^2 - (y - cy)^2)` with a closed-form
//! antiderivative.

use std::cmp::Ordering;

use super::Point;
use crate::scalar::Scalar;

/// Area of `B(0, R/2) ∩ B(x, R/2)` for `|x| = r`.
pub fn disc_overlap_area<T: Scalar>(r: T, radius: T) -> T {
    if r >= radius {
        return T::zero();
    }
    let r = r.max(T::zero());
    let half = T::lit(0.5);
    let ratio = (r / radius).min(T::one());
    let val = half * (radius * radius * ratio.acos() - r * (radius * radius - r * r).max(T::zero()).sqrt());
    val.max(T::zero())
}

/// Uncovered part of `B(new_center, R)` given discs of the same radius at
/// `existing`. Only centers closer than `2R` matter.
pub fn added_disc_area<T: Scalar>(new_center: &Point<T>, radius: T, existing: &[Point<T>]) -> T {
    let four_r2 = T::lit(4.0) * radius * radius;
    let mut local = Vec::new();
    for e in existing {
        let d2 = e.dist2(new_center);
        if d2 == T::zero() {
            return T::zero();
        }
        if d2 < four_r2 {
            local.push(Point::new(e.x - new_center.x, e.y - new_center.y));
        }
    }
    let full = T::PI() * radius * radius;
    if local.is_empty() {
        return full;
    }
    covered_area(&[Point::new(T::zero(), T::zero())], &local, radius)
        .max(T::zero())
        .min(full)
}

/// Area of `⋃ B(c, R)` over `centers`.
pub fn union_disc_area<T: Scalar>(centers: &[Point<T>], radius: T) -> T {
    match centers.first() {
        None => T::zero(),
        Some(o) => {
            let shifted: Vec<_> = centers.iter().map(|c| Point::new(c.x - o.x, c.y - o.y)).collect();
            covered_area(&shifted, &[], radius)
        }
    }
}

#[derive(Clone, Copy)]
struct Disc<T> {
    c: Point<T>,
    include: bool,
}

/// Chord endpoint `cx + side * sqrt(R^2 - (y - cy)^2)` of disc `disc`.
#[derive(Clone, Copy)]
struct Endpoint<T> {
    x: T,
    disc: usize,
    side: i8,
}

/// Area of `(⋃ include B(c,R)) \ (⋃ exclude B(c,R))`.
pub fn covered_area<T: Scalar>(include: &[Point<T>], exclude: &[Point<T>], radius: T) -> T {
    if include.is_empty() || !(radius > T::zero()) {
        return T::zero();
    }
    let r2 = radius * radius;
    let mut discs: Vec<Disc<T>> = include
        .iter()
        .map(|&c| Disc { c, include: true })
        .chain(exclude.iter().map(|&c| Disc { c, include: false }))
        .collect();
    discs.sort_by(|a, b| a.c.y.partial_cmp(&b.c.y).unwrap_or(Ordering::Equal));

    let (mut ylo, mut yhi) = (T::infinity(), T::neg_infinity());
    for d in discs.iter().filter(|d| d.include) {
        ylo = ylo.min(d.c.y - radius);
        yhi = yhi.max(d.c.y + radius);
    }

    let mut cuts: Vec<T> = Vec::with_capacity(4 * discs.len());
    for d in &discs {
        cuts.push(d.c.y - radius);
        cuts.push(d.c.y + radius);
    }
    let two_r = radius + radius;
    let four_r2 = T::lit(4.0) * r2;
    let half = T::lit(0.5);
    for i in 0..discs.len() {
        for j in i + 1..discs.len() {
            let (a, b) = (discs[i].c, discs[j].c);
            if b.y - a.y >= two_r {
                break;
            }
            let d2 = a.dist2(&b);
            if d2 >= four_r2 || d2 == T::zero() {
                continue;
            }
            let d = d2.sqrt();
            let h = (r2 - d2 * T::lit(0.25)).max(T::zero()).sqrt();
            let my = (a.y + b.y) * half;
            let uy = (b.x - a.x) / d;
            cuts.push(my + h * uy);
            cuts.push(my - h * uy);
        }
    }
    cuts.retain(|&y| y >= ylo && y <= yhi);
    cuts.push(ylo);
    cuts.push(yhi);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    cuts.dedup();

    let antiderivative = |t: T| {
        let t = t.max(-radius).min(radius);
        half * (t * (r2 - t * t).max(T::zero()).sqrt() + r2 * (t / radius).max(-T::one()).min(T::one()).asin())
    };

    let mut lo_ptr = 0usize;
    let mut inc: Vec<(Endpoint<T>, Endpoint<T>)> = Vec::new();
    let mut exc: Vec<(Endpoint<T>, Endpoint<T>)> = Vec::new();
    let mut pieces: Vec<(Endpoint<T>, Endpoint<T>)> = Vec::new();
    let mut total = T::zero();

    for w in cuts.windows(2) {
        let (y0, y1) = (w[0], w[1]);
        if !(y1 > y0) {
            continue;
        }
        let ym = (y0 + y1) * half;
        while lo_ptr < discs.len() && discs[lo_ptr].c.y + radius <= ym {
            lo_ptr += 1;
        }
        inc.clear();
        exc.clear();
        for (k, d) in discs.iter().enumerate().skip(lo_ptr) {
            let dy = ym - d.c.y;
            if dy <= -radius {
                break;
            }
            if dy >= radius {
                continue;
            }
            let hw = (r2 - dy * dy).sqrt();
            let seg = (
                Endpoint { x: d.c.x - hw, disc: k, side: -1 },
                Endpoint { x: d.c.x + hw, disc: k, side: 1 },
            );
            if d.include {
                inc.push(seg);
            } else {
                exc.push(seg);
            }
        }
        if inc.is_empty() {
            continue;
        }
        merge_segments(&mut inc);
        merge_segments(&mut exc);
        pieces.clear();
        subtract_segments(&inc, &exc, &mut pieces);

        let dy = y1 - y0;
        let integral = |e: &Endpoint<T>| {
            let c = discs[e.disc].c;
            let s = if e.side > 0 { T::one() } else { -T::one() };
            c.x * dy + s * (antiderivative(y1 - c.y) - antiderivative(y0 - c.y))
        };
        for (l, r) in &pieces {
            total += integral(r) - integral(l);
        }
    }
    total.max(T::zero())
}

fn merge_segments<T: Scalar>(segs: &mut Vec<(Endpoint<T>, Endpoint<T>)>) {
    if segs.len() < 2 {
        return;
    }
    segs.sort_by(|a, b| a.0.x.partial_cmp(&b.0.x).unwrap_or(Ordering::Equal));
    let mut out: Vec<(Endpoint<T>, Endpoint<T>)> = Vec::with_capacity(segs.len());
    for &s in segs.iter() {
        match out.last_mut() {
            Some(last) if s.0.x <= last.1.x => {
                if s.1.x > last.1.x {
                    last.1 = s.1;
                }
            }
            _ => out.push(s),
        }
    }
    *segs = out;
}

fn subtract_segments<T: Scalar>(
    inc: &[(Endpoint<T>, Endpoint<T>)],
    exc: &[(Endpoint<T>, Endpoint<T>)],
    out: &mut Vec<(Endpoint<T>, Endpoint<T>)>,
) {
    for &(l, r) in inc {
        let mut cur = l;
        for &(el, er) in exc {
            if er.x <= cur.x {
                continue;
            }
            if el.x >= r.x {
                break;
            }
            if el.x > cur.x {
                out.push((cur, el));
            }
            if er.x > cur.x {
                cur = er;
            }
            if cur.x >= r.x {
                break;
            }
        }
        if cur.x < r.x {
            out.push((cur, r));
        }
    }
}
