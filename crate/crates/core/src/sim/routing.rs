//! Straight-line routing through the cube grid.

use crate::geometry::{CubeGrid, CubeIdx, Point3};

/// Cubes crossed by the segment `a -> b`, in order, by parametric voxel
/// stepping. Each step moves one face; the axis with the smallest crossing
/// parameter goes first, ties broken x, y, z. An axis stops once it reaches
/// the target cube, so the path always has `L1 + 1` cubes.
pub fn route_segment(a: &Point3, b: &Point3, grid: &CubeGrid) -> Vec<CubeIdx> {
    let start = grid.cube_index_unchecked(a);
    let end = grid.cube_index_unchecked(b);
    let pa = [a.x, a.y, a.z];
    let pb = [b.x, b.y, b.z];
    let s = grid.side;

    let mut cur = start;
    let mut remaining = [0u32; 3];
    let mut step = [0i64; 3];
    let mut t_max = [f64::INFINITY; 3];
    let mut t_delta = [f64::INFINITY; 3];
    for ax in 0..3 {
        remaining[ax] = start[ax].abs_diff(end[ax]);
        if remaining[ax] == 0 {
            continue;
        }
        let d = pb[ax] - pa[ax];
        if end[ax] > start[ax] {
            step[ax] = 1;
            t_max[ax] = ((start[ax] as f64 + 1.0) * s - pa[ax]) / d;
        } else {
            step[ax] = -1;
            t_max[ax] = (start[ax] as f64 * s - pa[ax]) / d;
        }
        t_delta[ax] = s / d.abs();
    }

    let total: u32 = remaining.iter().sum();
    let mut path = Vec::with_capacity(total as usize + 1);
    path.push(cur);
    for _ in 0..total {
        let mut ax = 3;
        for cand in 0..3 {
            if remaining[cand] > 0 && (ax == 3 || t_max[cand] < t_max[ax]) {
                ax = cand;
            }
        }
        cur[ax] = (cur[ax] as i64 + step[ax]) as u32;
        remaining[ax] -= 1;
        t_max[ax] += t_delta[ax];
        path.push(cur);
    }
    path
}

/// Route of an ad hoc flow between two node positions.
pub fn route_adhoc(src: &Point3, dst: &Point3, grid: &CubeGrid) -> Vec<CubeIdx> {
    route_segment(src, dst, grid)
}
