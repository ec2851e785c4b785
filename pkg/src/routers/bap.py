"""
BAP router - forward a packet over a routing topology.
"""

from pathlib import Path

from fastapi import APIRouter

from iabplan.routing import BapHeader, Topology, bap_encode, forward

from ..config import settings
from ..schemas import ForwardRequest, ForwardResponse

router = APIRouter(prefix="/bap", tags=["bap"])

ROOT_DIR = Path(__file__).resolve().parents[2]


def default_topology() -> Topology:
    path = Path(settings.BAP_TOPOLOGY_FILE)
    if not path.is_absolute():
        path = ROOT_DIR / path
    return Topology.load(path)


@router.post("/forward", response_model=ForwardResponse)
async def forward_packet(request: ForwardRequest):
    """Walk a packet hop by hop; the destination strips the header."""
    topology = Topology.from_dict(request.topology) if request.topology else default_topology()
    header = BapHeader(bap_address=request.bap_address, path_id=request.path_id)
    result = forward(header, topology, request.ingress)
    return ForwardResponse(
        path=result.path,
        delivered=result.delivered,
        reason=result.reason,
        header_hex=bap_encode(header).hex(),
    )
