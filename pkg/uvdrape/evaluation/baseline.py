"""Linear-blend-skinning baseline: garments follow the body with no dynamics."""

import numpy as np

from ..body.model import BodyModel
from ..body.skinning import Pose, bone_transforms, skin_dense, surface_weights
from ..errors import GarmentBindingError, MapMismatchError
from ..geometry.mesh import TriMesh
from ..transfer.binding import GarmentBinding


class LbsBaseline:
    """
    Each garment vertex takes the skin weights of its bound body point
    (barycentric blend of the body triangle's vertex weights) and is posed
    with them.
    """

    def __init__(self, garment: TriMesh, body: BodyModel, binding: GarmentBinding):
        if binding.vertex_count != garment.vertex_count:
            raise MapMismatchError(
                f"binding has {binding.vertex_count} vertices, garment has {garment.vertex_count}"
            )
        if binding.body_vertex_count != body.vertex_count:
            raise MapMismatchError("binding was made against a different body")
        unbound = np.flatnonzero(~binding.bound)
        if unbound.size:
            raise GarmentBindingError(f"{unbound.size} garment vertices are unbound (first: {unbound[0]})")
        self.garment = garment
        self.body = body
        self.weights = surface_weights(body, binding.face_index, binding.barycentric)

    def __call__(self, pose: Pose) -> TriMesh:
        rot, offset = bone_transforms(self.body.skeleton, pose)
        return self.garment.with_vertices(skin_dense(self.garment.vertices, self.weights, rot, offset))


def lbs_predict(garment: TriMesh, body: BodyModel, binding: GarmentBinding, pose: Pose) -> TriMesh:
    return LbsBaseline(garment, body, binding)(pose)
