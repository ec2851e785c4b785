"""
BAP header codec and hop-by-hop forwarding.
"""
import pytest
from hypothesis import given
from hypothesis import strategies as st

from iabplan.errors import BapDecodeError, BapEncodeError, LoopDetectedError, RoutingTableError
from iabplan.routing import BapHeader, Topology, bap_decode, bap_encode, forward, validate_tables

from .conftest import TOPOLOGY_FILE


@pytest.fixture
def topology() -> Topology:
    return Topology.load(TOPOLOGY_FILE)


def _triangle(tables):
    return {
        "nodes": [{"id": n, "bap_address": i} for i, n in enumerate("ABC")],
        "links": [["A", "B"], ["B", "C"], ["C", "A"]],
        "tables": tables,
    }


@pytest.mark.unit
class TestCodec:
    def test_known_encoding(self):
        assert bap_encode(BapHeader(bap_address=5, path_id=1)) == b"\x00\x14\x01"

    def test_flag_and_reserved_bits(self):
        data = bap_encode(BapHeader(bap_address=0x3FF, path_id=0x3FF, flag=1, reserved=0b101))
        assert data == bytes([0b11011111, 0xFF, 0xFF])

    @pytest.mark.acceptance
    def test_every_address_and_path_roundtrips(self):
        for address in range(1024):
            for path_id in range(1024):
                header = BapHeader(bap_address=address, path_id=path_id)
                assert bap_decode(bap_encode(header)) == header

    @given(
        st.integers(0, 1023), st.integers(0, 1023), st.integers(0, 1), st.integers(0, 7)
    )
    def test_roundtrip_with_flags(self, address, path_id, flag, reserved):
        header = BapHeader(address, path_id, flag, reserved)
        assert bap_decode(header.encode()) == header

    @pytest.mark.parametrize(
        "header",
        [
            BapHeader(bap_address=1024, path_id=0),
            BapHeader(bap_address=0, path_id=-1),
            BapHeader(bap_address=True, path_id=0),
            BapHeader(bap_address=0, path_id=0, flag=2),
            BapHeader(bap_address=0, path_id=0, reserved=8),
        ],
    )
    def test_out_of_range_fields(self, header):
        with pytest.raises(BapEncodeError):
            bap_encode(header)

    @pytest.mark.parametrize("data", [b"", b"\x00\x01", b"\x00\x00\x00\x00"])
    def test_decode_requires_three_octets(self, data):
        with pytest.raises(BapDecodeError):
            bap_decode(data)


class TestForwarding:
    @pytest.mark.parametrize(
        "address,path_id,ingress,expected",
        [
            (5, 1, "donor-DU", ["donor-DU", "IAB2", "IAB4", "IAB5"]),
            (5, 2, "donor-DU", ["donor-DU", "IAB1", "IAB3", "IAB4", "IAB5"]),
            (0, 1, "IAB5", ["IAB5", "IAB4", "IAB2", "donor-DU"]),
            (0, 2, "IAB5", ["IAB5", "IAB4", "IAB3", "IAB1", "donor-DU"]),
        ],
    )
    def test_example_paths(self, topology, address, path_id, ingress, expected):
        result = forward(BapHeader(address, path_id), topology, ingress)
        assert result.delivered
        assert result.path == expected
        assert result.hops == len(expected) - 1

    def test_forward_accepts_wire_bytes(self, topology):
        result = forward(b"\x00\x14\x01", topology, "donor-DU")
        assert result.path[-1] == "IAB5"

    def test_example_tables_are_valid(self, topology):
        validate_tables(topology)

    def test_missing_route_drops(self, topology):
        result = forward(BapHeader(5, 3), topology, "donor-DU")
        assert not result.delivered
        assert result.path == ["donor-DU"]
        assert "no route" in result.reason

    def test_already_at_destination(self, topology):
        result = forward(BapHeader(5, 1), topology, "IAB5")
        assert result.delivered and result.path == ["IAB5"]

    def test_loop_is_detected(self):
        topo = Topology.from_dict(
            _triangle({
                "A": [{"address": 9, "path_id": 0, "next_hop": "B"}],
                "B": [{"address": 9, "path_id": 0, "next_hop": "C"}],
                "C": [{"address": 9, "path_id": 0, "next_hop": "A"}],
            })
        )
        with pytest.raises(LoopDetectedError):
            forward(BapHeader(9, 0), topo, "A")
        with pytest.raises(RoutingTableError):
            validate_tables(topo)

    def test_unknown_ingress(self, topology):
        with pytest.raises(RoutingTableError):
            forward(BapHeader(5, 1), topology, "IAB9")


class TestTopologyValidation:
    def test_next_hop_must_be_neighbour(self):
        raw = _triangle({"A": [{"address": 2, "path_id": 0, "next_hop": "C"}]})
        raw["links"] = [["A", "B"], ["B", "C"]]
        with pytest.raises(RoutingTableError) as info:
            validate_tables(Topology.from_dict(raw))
        assert info.value.detail["node"] == "A"

    def test_bounce_back_rejected(self):
        topo = Topology.from_dict(
            _triangle({
                "A": [{"address": 2, "path_id": 0, "next_hop": "B"}],
                "B": [{"address": 2, "path_id": 0, "next_hop": "A"}],
            })
        )
        with pytest.raises(RoutingTableError):
            validate_tables(topo)

    def test_duplicate_address(self):
        raw = _triangle({})
        raw["nodes"][2]["bap_address"] = 0
        with pytest.raises(RoutingTableError):
            Topology.from_dict(raw)

    def test_unknown_link_endpoint(self):
        raw = _triangle({})
        raw["links"].append(["A", "Z"])
        with pytest.raises(RoutingTableError):
            Topology.from_dict(raw)

    def test_schema_errors_are_reported(self):
        with pytest.raises(RoutingTableError) as info:
            Topology.from_dict({"nodes": [{"id": "A", "bap_address": 2000}], "links": []})
        assert info.value.detail
