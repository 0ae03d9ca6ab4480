"""Reduced test models and demo scenes.

The reference robot is a 3D biped with arms: floating base plus 12 actuated
joints (3 per limb), about 28 kg. Feet are bounded patches rigidly attached
to the shanks; hands are point interfaces at the forearm tips with +z along
the forearm, pointing away from the contact.
"""

import numpy as np

from .kinodynamics import ForwardKinematics, com_position, tree_from_dict
from .scene import ContactType, SceneDescription, scene_from_dict

POINT_UNI = ContactType.POINT_UNILATERAL.value
POINT_BI = ContactType.POINT_BILATERAL.value
PATCH_UNI = ContactType.PATCH_UNILATERAL.value

HIP_PITCH = -0.15
KNEE = 0.15
SHOULDER_PITCH = 0.25
ELBOW = -0.5


def biped_dict(leg_torque=60.0, arm_torque=40.0):
    """Robot-file dictionary for the reduced biped."""
    joints = [
        {
            "name": "base",
            "kind": "floating",
            "body": {"mass": 15.6, "box": [0.15, 0.10, 0.20]},
        }
    ]

    def leg(side, sign):
        return [
            {
                "name": f"{side}_hip_roll",
                "kind": "revolute",
                "parent": "base",
                "axis": [1, 0, 0],
                "origin": {"xyz": [0.0, sign * 0.10, -0.20]},
                "body": {"mass": 0.5, "box": [0.04, 0.04, 0.04]},
                "torque_min": -leg_torque,
                "torque_max": leg_torque,
            },
            {
                "name": f"{side}_hip_pitch",
                "kind": "revolute",
                "parent": f"{side}_hip_roll",
                "axis": [0, 1, 0],
                "body": {"mass": 2.2, "com": [0, 0, -0.125], "box": [0.05, 0.05, 0.125]},
                "torque_min": -leg_torque,
                "torque_max": leg_torque,
            },
            {
                "name": f"{side}_knee",
                "kind": "revolute",
                "parent": f"{side}_hip_pitch",
                "axis": [0, 1, 0],
                "origin": {"xyz": [0, 0, -0.25]},
                "body": {"mass": 1.6, "com": [0, 0, -0.125], "box": [0.04, 0.04, 0.125]},
                "torque_min": -leg_torque,
                "torque_max": leg_torque,
            },
        ]

    def arm(side, sign):
        return [
            {
                "name": f"{side}_shoulder_pitch",
                "kind": "revolute",
                "parent": "base",
                "axis": [0, 1, 0],
                "origin": {"xyz": [0.0, sign * 0.15, 0.20]},
                "body": {"mass": 0.4, "box": [0.04, 0.04, 0.04]},
                "torque_min": -arm_torque,
                "torque_max": arm_torque,
            },
            {
                "name": f"{side}_shoulder_roll",
                "kind": "revolute",
                "parent": f"{side}_shoulder_pitch",
                "axis": [1, 0, 0],
                "body": {"mass": 0.8, "com": [0, 0, -0.10], "box": [0.04, 0.04, 0.10]},
                "torque_min": -arm_torque,
                "torque_max": arm_torque,
            },
            {
                "name": f"{side}_elbow",
                "kind": "revolute",
                "parent": f"{side}_shoulder_roll",
                "axis": [0, 1, 0],
                "origin": {"xyz": [0, 0, -0.20]},
                "body": {"mass": 0.6, "com": [0, 0, -0.10], "box": [0.035, 0.035, 0.10]},
                "torque_min": -arm_torque,
                "torque_max": arm_torque,
            },
        ]

    joints += leg("l", 1) + leg("r", -1) + arm("l", 1) + arm("r", -1)
    frames = {
        "l_foot": {"joint": "l_knee", "xyz": [0, 0, -0.25]},
        "r_foot": {"joint": "r_knee", "xyz": [0, 0, -0.25]},
        "l_hand": {"joint": "l_elbow", "xyz": [0, 0, -0.20]},
        "r_hand": {"joint": "r_elbow", "xyz": [0, 0, -0.20]},
        "torso": {"joint": "base", "xyz": [0, 0, 0]},
    }
    return {"schema_version": 1, "name": "biped12", "joints": joints, "frames": frames}


JOINT_ORDER = [
    "l_hip_roll",
    "l_hip_pitch",
    "l_knee",
    "r_hip_roll",
    "r_hip_pitch",
    "r_knee",
    "l_shoulder_pitch",
    "l_shoulder_roll",
    "l_elbow",
    "r_shoulder_pitch",
    "r_shoulder_roll",
    "r_elbow",
]


def standing_posture():
    """Joint vector of the nominal crouch with flat feet."""
    q = dict.fromkeys(JOINT_ORDER, 0.0)
    for side in "lr":
        q[f"{side}_hip_pitch"] = HIP_PITCH
        q[f"{side}_knee"] = KNEE
        q[f"{side}_shoulder_pitch"] = SHOULDER_PITCH
        q[f"{side}_elbow"] = ELBOW
    return np.array([q[name] for name in JOINT_ORDER])


def standing_configuration(tree, base_xy=(0.0, 0.0)):
    """Full configuration with the feet exactly on the z=0 plane."""
    q = tree.neutral_configuration()
    q[7:] = standing_posture()
    q[0] = base_xy[0]
    q[1] = base_xy[1]
    fk = ForwardKinematics(tree, q)
    foot_z = fk.frame_pose("l_foot").p[2]
    q[2] = -foot_z
    return q


def reduced_biped(leg_torque=60.0, arm_torque=40.0):
    return tree_from_dict(biped_dict(leg_torque, arm_torque))


def _hand_iface(side):
    return {
        "id": f"{side}_hand",
        "frame": f"{side}_hand",
        "geometry": "point",
        "allowed_types": [POINT_UNI, POINT_BI],
    }


def _foot_iface(side):
    return {
        "id": f"{side}_foot",
        "frame": f"{side}_foot",
        "geometry": "patch",
        "half_extents": [0.09, 0.05],
        "allowed_types": [PATCH_UNI],
    }


def standing_scene_dict(leg_torque=60.0, arm_torque=40.0):
    """Flat ground, both feet planted, no objects."""
    tree = reduced_biped(leg_torque, arm_torque)
    q0 = standing_configuration(tree)
    return {
        "schema_version": 1,
        "robot": biped_dict(leg_torque, arm_torque),
        "robot_interfaces": [
            _foot_iface("l"),
            _foot_iface("r"),
            _hand_iface("l"),
            _hand_iface("r"),
        ],
        "environment": {
            "patches": [
                {
                    "id": "floor",
                    "geometry": "patch",
                    "allowed_types": [PATCH_UNI],
                    "mu": 0.7,
                }
            ]
        },
        "initial_contacts": [
            ["l_foot", "floor", PATCH_UNI],
            ["r_foot", "floor", PATCH_UNI],
        ],
        "initial_state": {
            "robot_q": q0.tolist(),
            "robot_v": np.zeros(tree.nv).tolist(),
        },
    }


def standing_scene(**kw):
    return scene_from_dict(standing_scene_dict(**kw))


def platform_scene_dict(
    platform_height=0.35,
    platform_x=0.42,
    leg_torque=60.0,
    arm_torque=40.0,
    platform_extent=0.22,
):
    """Flat ground plus a raised platform the robot can climb."""
    doc = standing_scene_dict(leg_torque, arm_torque)
    doc["environment"]["patches"].append(
        {
            "id": "platform_top",
            "geometry": "patch",
            "xyz": [platform_x, 0.0, platform_height],
            "half_extents": [platform_extent, platform_extent],
            "allowed_types": [PATCH_UNI, POINT_UNI],
            "mu": 0.7,
        }
    )
    doc["environment"]["boxes"] = [
        {
            "id": "platform_box",
            "xyz": [platform_x, 0.0, platform_height / 2],
            "half_sizes": [platform_extent, platform_extent, platform_height / 2],
        }
    ]
    return doc


def platform_scene(**kw):
    return scene_from_dict(platform_scene_dict(**kw))


def box_scene_dict(
    table_height=0.30,
    table_x=0.34,
    src_y=-0.20,
    dst_y=0.20,
    box_half=0.06,
    box_mass=1.0,
    leg_torque=60.0,
    arm_torque=40.0,
):
    """Pick-and-place: one 1 kg box with a graspable handle, two tables."""
    doc = standing_scene_dict(leg_torque, arm_torque)
    doc["environment"]["patches"] += [
        {
            "id": "table_src",
            "geometry": "patch",
            "xyz": [table_x, src_y, table_height],
            "half_extents": [0.12, 0.12],
            "allowed_types": [PATCH_UNI],
        },
        {
            "id": "table_dst",
            "geometry": "patch",
            "xyz": [table_x, dst_y, table_height],
            "half_extents": [0.12, 0.12],
            "allowed_types": [PATCH_UNI],
        },
    ]
    doc["objects"] = [
        {
            "name": "box_a",
            "mass": box_mass,
            "half_sizes": [box_half, box_half, box_half],
            "xyz": [table_x, src_y, table_height + box_half],
            "interfaces": [
                {
                    "id": "box_a_bottom",
                    "geometry": "patch",
                    "xyz": [0, 0, -box_half],
                    "half_extents": [box_half, box_half],
                    "allowed_types": [PATCH_UNI],
                },
                {
                    "id": "box_a_handle",
                    "geometry": "patch",
                    "xyz": [0, 0, box_half],
                    "half_extents": [0.02, 0.02],
                    "allowed_types": [POINT_BI],
                },
            ],
            "grasps": [{"slots": ["box_a_handle"], "type": POINT_BI}],
            "support_faces": ["box_a_bottom"],
        }
    ]
    doc["initial_contacts"].append(["box_a_bottom", "table_src", PATCH_UNI])
    return doc


def box_scene(**kw):
    return scene_from_dict(box_scene_dict(**kw))


def two_box_scene_dict(**kw):
    """Second box with opposite side faces for a two-handed squeeze grasp."""
    doc = box_scene_dict(**kw)
    bh = 0.05
    doc["objects"].append(
        {
            "name": "box_b",
            "mass": 1.0,
            "half_sizes": [bh, bh, bh],
            "xyz": [0.34, 0.0, 0.30 + bh],
            "interfaces": [
                {
                    "id": "box_b_bottom",
                    "geometry": "patch",
                    "xyz": [0, 0, -bh],
                    "half_extents": [bh, bh],
                    "allowed_types": [PATCH_UNI],
                },
                {
                    "id": "box_b_left",
                    "geometry": "patch",
                    "xyz": [0, bh, 0],
                    "rpy": [-np.pi / 2, 0, 0],
                    "half_extents": [bh, bh],
                    "allowed_types": [POINT_UNI],
                },
                {
                    "id": "box_b_right",
                    "geometry": "patch",
                    "xyz": [0, -bh, 0],
                    "rpy": [np.pi / 2, 0, 0],
                    "half_extents": [bh, bh],
                    "allowed_types": [POINT_UNI],
                },
            ],
            "grasps": [{"slots": ["box_b_left", "box_b_right"], "type": POINT_UNI}],
            "support_faces": ["box_b_bottom"],
        }
    )
    doc["environment"]["patches"].append(
        {
            "id": "table_mid",
            "geometry": "patch",
            "xyz": [0.34, 0.0, 0.30],
            "half_extents": [0.12, 0.12],
            "allowed_types": [PATCH_UNI],
        }
    )
    doc["initial_contacts"].append(["box_b_bottom", "table_mid", PATCH_UNI])
    return doc


def two_box_scene(**kw):
    return scene_from_dict(two_box_scene_dict(**kw))
