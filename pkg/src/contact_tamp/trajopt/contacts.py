"""Contact constraint residuals for point-on-patch and patch-on-patch pairs.

All functions broadcast over leading batch dimensions. Frames follow the
package convention: the support patch frame `j` has +z as the push direction
on the attached side; wrenches are expressed in patch-frame axes with the
force acting on the attached body at the attached frame's origin.

Friction cones use the squared form (fx^2 + fy^2 <= mu^2 fz^2 together with
fz >= 0), which is smooth at zero force. Center-of-pressure bounds pair the
moment about x with the y half-extent and vice versa. The strict
limb-halfspace inequality is relaxed by a 1e-3 margin.
"""

import numpy as np

from ..se3 import so3_log_batch

HALFSPACE_MARGIN = 1e-3


def _rot_t_apply(R, x):
    """R^T x with broadcasting: (..., 3, 3), (..., 3) -> (..., 3)."""
    return np.einsum("...ji,...j->...i", R, x)


def point_patch_equalities(p_point, R_patch, p_patch, v_point, v_patch_pt):
    """Sticking point contact: on-plane height and in-plane relative velocity.

    Returns (..., 3): [height, v_rel_x, v_rel_y] in patch axes.
    """
    rel = _rot_t_apply(R_patch, p_point - p_patch)
    vrel = _rot_t_apply(R_patch, v_point - v_patch_pt)
    return np.concatenate([rel[..., 2:3], vrel[..., 0:2]], axis=-1)


def patch_bound_inequalities(p_point, R_patch, p_patch, margin_xy):
    """|r_xy| <= margin componentwise, as 4 rows <= 0."""
    rel = _rot_t_apply(R_patch, p_point - p_patch)[..., 0:2]
    return np.concatenate([rel - margin_xy, -rel - margin_xy], axis=-1)


def rotated_half_extents(R_patch, R_attached, extents_attached):
    """Attached-patch half extents seen in support axes (componentwise bound)."""
    rel = np.einsum("...ji,...jk->...ik", R_patch, R_attached)
    return np.abs(rel[..., 0:2, 0:2]) @ np.asarray(extents_attached)


def halfspace_inequality(R_patch, R_limb):
    """Limb stays on the positive side: margin - (R_j^T R_i e_z)_z <= 0."""
    cos_tilt = np.einsum("...ji,...jk->...ik", R_patch, R_limb)[..., 2, 2]
    return HALFSPACE_MARGIN - cos_tilt[..., None]


def patch_alignment_equalities(R_patch, R_attached, w_attached, w_patch):
    """Patch-on-patch orientation rows: log xy and relative yaw rate.

    Returns (..., 3): [log_x, log_y, w_rel_z] in support axes.
    """
    rel = np.einsum("...ji,...jk->...ik", R_patch, R_attached)
    log_xy = so3_log_batch(rel)[..., 0:2]
    wrel = _rot_t_apply(R_patch, w_attached - w_patch)
    return np.concatenate([log_xy, wrel[..., 2:3]], axis=-1)


def friction_cone_inequalities(wrench, mu):
    """Unilateral force rows: [fx^2 + fy^2 - mu^2 fz^2, -fz] <= 0."""
    f = wrench[..., 0:3]
    cone = f[..., 0] ** 2 + f[..., 1] ** 2 - (mu**2) * f[..., 2] ** 2
    return np.stack([cone, -f[..., 2]], axis=-1)


def cop_inequalities(wrench, extents_attached, mu_r):
    """Torsional friction and center-of-pressure rows (6 rows <= 0).

    |k_z| <= mu_r fz, |k_x| <= fz * ext_y, |k_y| <= fz * ext_x.
    """
    f = wrench[..., 0:3]
    k = wrench[..., 3:6]
    ex, ey = extents_attached[0], extents_attached[1]
    fz = f[..., 2]
    return np.stack(
        [
            k[..., 2] - mu_r * fz,
            -k[..., 2] - mu_r * fz,
            k[..., 0] - fz * ey,
            -k[..., 0] - fz * ey,
            k[..., 1] - fz * ex,
            -k[..., 1] - fz * ex,
        ],
        axis=-1,
    )


def point_patch_residual(
    p_point,
    R_limb,
    v_point,
    R_patch,
    p_patch,
    v_patch_pt,
    wrench,
    unilateral,
    bounded_extents=None,
    mu=0.7,
):
    """Full residual set for one point-on-patch contact.

    Returns (eq, ineq) row vectors (scalar inputs) following the contact
    model: sticking position/velocity equalities, optional in-plane bounds,
    the limb halfspace inequality, and the friction cone for unilateral
    contacts (bilateral contacts carry no force constraints; their moment is
    free as well).
    """
    eq = point_patch_equalities(p_point, R_patch, p_patch, v_point, v_patch_pt)
    ineqs = [halfspace_inequality(R_patch, R_limb)]
    if bounded_extents is not None:
        ineqs.append(
            patch_bound_inequalities(p_point, R_patch, p_patch, np.asarray(bounded_extents))
        )
    if unilateral:
        ineqs.append(friction_cone_inequalities(wrench, mu))
    return eq, np.concatenate(ineqs, axis=-1)


def patch_patch_residual(
    p_attached,
    R_attached,
    v_attached,
    w_attached,
    R_patch,
    p_patch,
    v_patch_pt,
    w_patch,
    wrench,
    unilateral,
    extents_attached,
    extents_support=None,
    mu=0.7,
    mu_r=0.01,
):
    """Full residual set for one patch-on-patch contact.

    `extents_support=None` means an unbounded support patch (no in-plane
    bound rows). Unilateral contacts add the friction cone plus torsional
    and center-of-pressure limits using the attached patch's half extents.
    """
    eq = np.concatenate(
        [
            point_patch_equalities(p_attached, R_patch, p_patch, v_attached, v_patch_pt),
            patch_alignment_equalities(R_patch, R_attached, w_attached, w_patch),
        ],
        axis=-1,
    )
    ineqs = []
    if extents_support is not None:
        margin = np.asarray(extents_support) - rotated_half_extents(
            R_patch, R_attached, np.asarray(extents_attached)
        )
        ineqs.append(patch_bound_inequalities(p_attached, R_patch, p_patch, margin))
    if unilateral:
        ineqs.append(friction_cone_inequalities(wrench, mu))
        ineqs.append(cop_inequalities(wrench, np.asarray(extents_attached), mu_r))
    if ineqs:
        return eq, np.concatenate(ineqs, axis=-1)
    return eq, np.zeros(eq.shape[:-1] + (0,))
