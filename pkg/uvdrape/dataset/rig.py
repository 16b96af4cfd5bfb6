"""Everything derived once per body shape and resolution."""

import logging
from dataclasses import dataclass
from typing import Dict, Optional

from ..body.model import BodyModel, build_procedural_body
from ..body.proxy import build_dress_proxy
from ..body.skeleton import ShapeParams
from ..config import TEMPLATES
from ..maps.raster import UvTransferMap, rasterize_uv_layout
from ..sim.garments import Garment, build_garment
from ..transfer.body_to_cloth import BodyToClothTransfer, compute_body_to_cloth

logger = logging.getLogger(__name__)

# offsets of these templates are baked against the proxy body
PROXY_TEMPLATES = ("dress",)


@dataclass(frozen=True)
class Rig:
    """
    Body, dress proxy, their rasterized layouts, the garment templates and
    the T-pose body-to-cloth correspondences.
    """

    body: BodyModel
    proxy: BodyModel
    body_uv: UvTransferMap
    proxy_uv: UvTransferMap
    garments: Dict[str, Garment]
    transfers: Dict[str, BodyToClothTransfer]

    @property
    def resolution(self) -> int:
        return self.body_uv.width

    def bake_body(self, template: str) -> BodyModel:
        """Body the template's offsets are measured from."""
        return self.proxy if template in PROXY_TEMPLATES else self.body

    def bake_uv(self, template: str) -> UvTransferMap:
        return self.proxy_uv if template in PROXY_TEMPLATES else self.body_uv


def build_rig(shape: Optional[ShapeParams] = None, resolution: int = 64,
              garments: Optional[Dict[str, Garment]] = None) -> Rig:
    """Build the rig; garments default to the procedural templates."""
    body = build_procedural_body(shape)
    proxy = build_dress_proxy(body)
    body_uv = rasterize_uv_layout(body.template, resolution)
    proxy_uv = rasterize_uv_layout(proxy.template, resolution)
    garments = garments or {name: build_garment(name, body) for name in TEMPLATES}
    transfers = {}
    for name, garment in garments.items():
        uv_body = proxy if name in PROXY_TEMPLATES else body
        uv_map = proxy_uv if name in PROXY_TEMPLATES else body_uv
        transfers[name] = compute_body_to_cloth(uv_body.template, uv_map, garment.mesh, name)
    logger.info("rig ready: %dx%d maps, %d body pixels", resolution, resolution, body_uv.valid_count)
    return Rig(body, proxy, body_uv, proxy_uv, garments, transfers)
