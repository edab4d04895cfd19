//! Two-dimensional Nelder-Mead minimizer used by the GARCH likelihood.

use crate::float::Float;

pub(crate) struct NelderMead2Outcome<F> {
    pub point: [F; 2],
    pub value: F,
    pub converged: bool,
}

/// Minimizes `f` over two unconstrained coordinates starting from `start`.
///
/// Standard reflection/expansion/contraction/shrink steps; stops when the
/// function-value spread and the simplex diameter are both below `tol`.
pub(crate) fn nelder_mead_2d<F: Float>(
    mut f: impl FnMut(&[F; 2]) -> F,
    start: [F; 2],
    step: F,
    tol: F,
    max_iter: usize,
) -> NelderMead2Outcome<F> {
    let mut simplex = [
        start,
        [start[0] + step, start[1]],
        [start[0], start[1] + step],
    ];
    let mut values = [f(&simplex[0]), f(&simplex[1]), f(&simplex[2])];

    let mut converged = false;
    for _ in 0..max_iter {
        // Order best -> worst.
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        simplex = [simplex[order[0]], simplex[order[1]], simplex[order[2]]];
        values = [values[order[0]], values[order[1]], values[order[2]]];

        let spread = (values[2] - values[0]).abs();
        let diameter = simplex_diameter(&simplex);
        if spread <= tol && diameter <= tol {
            converged = true;
            break;
        }

        let centroid = [
            (simplex[0][0] + simplex[1][0]) / F::cast(2.0),
            (simplex[0][1] + simplex[1][1]) / F::cast(2.0),
        ];
        let reflected = affine(&centroid, &simplex[2], F::cast(-1.0));
        let f_reflected = f(&reflected);

        if f_reflected < values[0] {
            let expanded = affine(&centroid, &simplex[2], F::cast(-2.0));
            let f_expanded = f(&expanded);
            if f_expanded < f_reflected {
                simplex[2] = expanded;
                values[2] = f_expanded;
            } else {
                simplex[2] = reflected;
                values[2] = f_reflected;
            }
        } else if f_reflected < values[1] {
            simplex[2] = reflected;
            values[2] = f_reflected;
        } else {
            let contracted = affine(&centroid, &simplex[2], F::cast(0.5));
            let f_contracted = f(&contracted);
            if f_contracted < values[2] {
                simplex[2] = contracted;
                values[2] = f_contracted;
            } else {
                for i in 1..3 {
                    simplex[i] = [
                        (simplex[i][0] + simplex[0][0]) / F::cast(2.0),
                        (simplex[i][1] + simplex[0][1]) / F::cast(2.0),
                    ];
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }

    let mut best = 0;
    for i in 1..3 {
        if values[i] < values[best] {
            best = i;
        }
    }
    NelderMead2Outcome {
        point: simplex[best],
        value: values[best],
        converged,
    }
}

fn affine<F: Float>(centroid: &[F; 2], worst: &[F; 2], coef: F) -> [F; 2] {
    [
        centroid[0] + coef * (worst[0] - centroid[0]),
        centroid[1] + coef * (worst[1] - centroid[1]),
    ]
}

fn simplex_diameter<F: Float>(simplex: &[[F; 2]; 3]) -> F {
    let mut d = F::zero();
    for i in 0..3 {
        for j in (i + 1)..3 {
            let dx = simplex[i][0] - simplex[j][0];
            let dy = simplex[i][1] - simplex[j][1];
            d = d.max((dx * dx + dy * dy).sqrt());
        }
    }
    d
}
