"""Smooth collision penalties: sigmoid activations over penetration metrics.

Three penalty shapes: frame against plane, frame against box, box against
box (half-sizes of the second box re-expressed along the first box's axes by
componentwise absolute rotation). Penalties are costs, never constraints.
"""

import numpy as np


def sigmoid(x, sharpness):
    return 1.0 / (1.0 + np.exp(-sharpness * np.asarray(x)))


def frame_plane_penalty(p_frame, R_plane, p_plane, weight, sharpness):
    """weight * sigmoid(-z) where z is the frame height over the plane."""
    z = np.einsum("...ji,...j->...i", R_plane, p_frame - p_plane)[..., 2]
    return weight * sigmoid(-z, sharpness)


def frame_box_penalty(p_frame, R_box, p_box, half_sizes, weight, sharpness):
    """weight * prod_i sigmoid(H_i - |p_i|) with p in box axes."""
    local = np.einsum("...ji,...j->...i", R_box, p_frame - p_box)
    terms = sigmoid(np.asarray(half_sizes) - np.abs(local), sharpness)
    return weight * np.prod(terms, axis=-1)


def box_box_penalty(R1, p1, half1, R2, p2, half2, weight, sharpness):
    """weight * prod_i sigmoid(H1_i + (|R12| H2)_i - |p12_i|)."""
    R12 = np.einsum("...ji,...jk->...ik", R1, R2)
    ext2 = np.abs(R12) @ np.asarray(half2)
    local = np.einsum("...ji,...j->...i", R1, p2 - p1)
    terms = sigmoid(np.asarray(half1) + ext2 - np.abs(local), sharpness)
    return weight * np.prod(terms, axis=-1)
