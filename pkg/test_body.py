"""Procedural body, skinning, dress proxy and motion files."""

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from uvdrape.body.actions import action_catalog, make_action, parse_action_name
from uvdrape.body.model import build_procedural_body
from uvdrape.body.motion import MotionSequence, load_motion, save_motion
from uvdrape.body.proxy import bridge_axes, build_dress_proxy
from uvdrape.body.skeleton import BONE_NAMES, ShapeParams, build_skeleton
from uvdrape.body.skinning import Pose, bone_transforms, pose_body, pose_capsules
from uvdrape.errors import MotionFormatError, PoseError, ShapeParamError
from uvdrape.geometry.bvh import build_bvh, intersect
from uvdrape.geometry.mesh import Ray


def test_default_body_height(body):
    lo, hi = body.template.bounding_box()
    assert 1.65 <= hi[1] - lo[1] <= 1.75
    assert lo[1] >= 0.0


def test_body_has_uvs_and_unit_weights(body):
    assert body.template.uv_coords is not None
    np.testing.assert_allclose(body.bone_weights.sum(axis=1), 1.0, atol=1e-9)
    np.testing.assert_allclose(body.dense_weights().sum(axis=1), 1.0, atol=1e-9)
    assert not body.is_proxy


def test_body_is_deterministic(body):
    again = build_procedural_body()
    np.testing.assert_array_equal(again.template.vertices, body.template.vertices)
    np.testing.assert_array_equal(again.template.faces, body.template.faces)


def test_leg_factor_scales_leg_bones():
    base = build_skeleton(ShapeParams())
    long_legs = build_skeleton(ShapeParams(legs=1.2))
    for name in ("upper_leg_l", "lower_leg_r"):
        i = base.index(name)
        assert long_legs.lengths()[i] == pytest.approx(1.2 * base.lengths()[i])
    i = base.index("spine")
    assert long_legs.lengths()[i] == pytest.approx(base.lengths()[i])


@pytest.mark.parametrize("value", [0.4, 2.5])
def test_shape_factor_range(value):
    with pytest.raises(ShapeParamError):
        ShapeParams(arms=value)


def test_skeleton_order():
    skeleton = build_skeleton(ShapeParams())
    assert skeleton.names == BONE_NAMES
    assert skeleton.parents()[0] is None


def test_identity_pose_keeps_template(body):
    posed = pose_body(body, Pose.identity(len(BONE_NAMES)))
    np.testing.assert_allclose(posed.vertices, body.template.vertices, atol=1e-12)


def test_root_translation(body):
    pose = Pose(Pose.identity(len(BONE_NAMES)).rotations, np.array([0.1, -0.2, 0.3]))
    posed = pose_body(body, pose)
    np.testing.assert_allclose(posed.vertices - body.template.vertices, np.tile([0.1, -0.2, 0.3], (body.vertex_count, 1)),
                               atol=1e-12)


def test_root_rotation_is_rigid(body):
    rotvecs = np.zeros((len(BONE_NAMES), 3))
    rotvecs[0] = (0.0, np.pi / 2.0, 0.0)
    posed = pose_body(body, Pose.from_rotvecs(rotvecs))
    expected = Rotation.from_rotvec(rotvecs[0]).apply(body.template.vertices)
    np.testing.assert_allclose(posed.vertices, expected, atol=1e-9)


def test_child_bone_follows_parent():
    skeleton = build_skeleton(ShapeParams())
    rotvecs = np.zeros((len(BONE_NAMES), 3))
    rotvecs[skeleton.index("upper_arm_l")] = (0.0, 0.0, -np.pi / 2.0)
    rot, offset = bone_transforms(skeleton, Pose.from_rotvecs(rotvecs))
    lower = skeleton.index("lower_arm_l")
    upper = skeleton.index("upper_arm_l")
    elbow = rot[upper] @ skeleton.bones[upper].tail + offset[upper]
    np.testing.assert_allclose(rot[lower] @ skeleton.bones[lower].head + offset[lower], elbow, atol=1e-12)
    # the arm now hangs down from the shoulder
    assert elbow[1] < skeleton.bones[upper].head[1] - 0.2


def test_pose_bone_count_mismatch(body):
    with pytest.raises(PoseError):
        pose_body(body, Pose.identity(3))


def test_capsules_follow_translation(body):
    pose = Pose(Pose.identity(len(BONE_NAMES)).rotations, np.array([0.0, 0.5, 0.0]))
    rest = pose_capsules(body, Pose.identity(len(BONE_NAMES)))
    moved = pose_capsules(body, pose)
    assert moved.count == len(body.capsule_bones)
    np.testing.assert_allclose(moved.a - rest.a, np.tile([0.0, 0.5, 0.0], (moved.count, 1)), atol=1e-12)


def test_dress_proxy_extends_body(body):
    proxy = build_dress_proxy(body)
    assert proxy.is_proxy
    assert proxy.vertex_count > body.vertex_count
    np.testing.assert_array_equal(proxy.template.vertices[:body.vertex_count], body.template.vertices)
    assert "bridge" in proxy.part_names
    assert proxy.part_mask("bridge").sum() == proxy.vertex_count - body.vertex_count
    np.testing.assert_allclose(proxy.bone_weights.sum(axis=1), 1.0, atol=1e-9)


def test_proxy_closes_the_leg_gap(body):
    proxy = build_dress_proxy(body)
    center, semi = bridge_axes(body)
    # front to back between the thighs
    ray = Ray.create((0.0, center[1] - 0.5 * semi[1], 1.0), (0.0, 0.0, -1.0))
    assert intersect(build_bvh(body.template), body.template, ray) is None
    hit = intersect(build_bvh(proxy.template), proxy.template, ray)
    assert hit is not None
    assert proxy.part_mask("bridge")[proxy.template.faces[hit.face_index]].all()


def test_motion_round_trip(tmp_path):
    motion = make_action("walking", frames=12)
    path = tmp_path / "walk.txt"
    save_motion(motion, path)
    back = load_motion(path)
    assert back.frame_count == 12
    assert back.frame_rate == motion.frame_rate
    assert back.bone_names == motion.bone_names
    np.testing.assert_allclose(back.rotations, motion.rotations, atol=1e-8)
    np.testing.assert_allclose(back.translations, motion.translations, atol=1e-8)


def test_motion_bad_line_is_reported(tmp_path):
    motion = MotionSequence.identity(6)
    path = tmp_path / "idle.txt"
    save_motion(motion, path)
    lines = path.read_text().splitlines()
    lines[4] = "1 2 3"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(MotionFormatError) as info:
        load_motion(path)
    assert info.value.line_no == 5


def test_motion_unknown_bone(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("bones: pelvis tail\nfps: 30\n")
    with pytest.raises(MotionFormatError) as info:
        load_motion(path)
    assert info.value.line_no == 1


def test_motion_needs_five_frames():
    with pytest.raises(PoseError):
        MotionSequence.identity(4)


def test_motion_rejects_non_unit_quaternions():
    motion = MotionSequence.identity(5)
    with pytest.raises(PoseError):
        MotionSequence(30.0, motion.bone_names, motion.rotations * 2.0, motion.translations)


def test_action_variants():
    assert parse_action_name("walking_v2") == ("walking", 0.7)
    assert parse_action_name("jump") == ("jump", 1.0)
    with pytest.raises(KeyError):
        parse_action_name("cartwheel")


def test_action_catalog_is_distinct():
    names = action_catalog(34)
    assert len(set(names)) == 34
    with pytest.raises(ValueError):
        action_catalog(1000)


def test_actions_start_at_rest():
    motion = make_action("punch", frames=10)
    np.testing.assert_allclose(motion.rotations[0], Pose.identity(len(BONE_NAMES)).rotations, atol=1e-12)
    np.testing.assert_allclose(motion.translations[0], 0.0, atol=1e-12)
