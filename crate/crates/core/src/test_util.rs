//! Shared helpers for unit tests.

use alloc::vec::Vec;

use rand::Rng;

use crate::channel::{sample_paths, AngleBounds, IrsAngles, PathSet};
use crate::geometry::{wrap_diff, ArrayKind, HALF_WAVELENGTH};

/// Redraw path sets until every angle group (and the wrapped composite IRS
/// coordinates) is separated by at least `min_sep` in the cosine domain.
/// Subspace methods cannot resolve arbitrarily close directions, so tests of
/// exact recovery use separated draws.
pub fn separated_paths<R: Rng + ?Sized>(
    l_f: usize,
    l_g: usize,
    min_sep: f64,
    kind: ArrayKind,
    rng: &mut R,
) -> PathSet {
    loop {
        let p = sample_paths(l_f, l_g, &AngleBounds::default(), kind, rng);
        if paths_separated(&p, min_sep) {
            return p;
        }
    }
}

pub fn paths_separated(p: &PathSet, min_sep: f64) -> bool {
    let mut ok = true;
    for group in [&p.phi_t, &p.theta_r] {
        ok &= pairwise_separated(group, min_sep);
    }
    match &p.irs {
        IrsAngles::Ula { aoa, aod } => {
            let mut psis = Vec::new();
            for &a in aoa {
                for &d in aod {
                    psis.push(wrap_diff(d - a, HALF_WAVELENGTH));
                }
            }
            ok &= pairwise_separated(&psis, min_sep);
        }
        IrsAngles::Upa { aoa, aod } => {
            let mut us = Vec::new();
            let mut vs = Vec::new();
            for a in aoa {
                for d in aod {
                    us.push(wrap_diff(d.u - a.u, HALF_WAVELENGTH));
                    vs.push(wrap_diff(d.v - a.v, HALF_WAVELENGTH));
                }
            }
            ok &= pairwise_separated(&us, min_sep) && pairwise_separated(&vs, min_sep);
        }
    }
    ok
}

fn pairwise_separated(values: &[f64], min_sep: f64) -> bool {
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            if (values[i] - values[j]).abs() < min_sep {
                return false;
            }
        }
    }
    true
}
