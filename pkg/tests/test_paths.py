from __future__ import annotations

import pytest

from vsa.errors import PathNotFound
from vsa.paths import DottedPath, is_valid_path, resolve_path, write_path


def test_parse_render_round_trip():
    path = DottedPath.parse("parent.specs.origin")
    assert path.segments == ("parent", "specs", "origin")
    assert path.render() == "parent.specs.origin"


@pytest.mark.parametrize("bad", ["", ".", "a..b", "1abc", "a-b", "a.b.", "spec s"])
def test_rejects_bad_segments(bad):
    assert not is_valid_path(bad)


def test_resolve_nested_value():
    root = {"specs": {"origin": "Meyers Rd"}}
    assert resolve_path(root, "specs.origin") == "Meyers Rd"


def test_resolve_single_segment():
    assert resolve_path({"origin": "Meyers Rd"}, "origin") == "Meyers Rd"


def test_empty_root_not_found_with_empty_prefix():
    with pytest.raises(PathNotFound) as excinfo:
        resolve_path({}, "specs.dest")
    assert excinfo.value.prefix == ""


def test_longest_resolvable_prefix():
    root = {"specs": {"origin": "x"}}
    with pytest.raises(PathNotFound) as excinfo:
        resolve_path(root, "specs.dest.street")
    assert excinfo.value.prefix == "specs"


def test_resolve_through_non_map_fails():
    with pytest.raises(PathNotFound) as excinfo:
        resolve_path({"specs": "flat"}, "specs.origin")
    assert excinfo.value.prefix == "specs"


def test_write_creates_intermediate_maps():
    root: dict = {}
    write_path(root, "specs.origin", "Meyers Rd")
    assert root == {"specs": {"origin": "Meyers Rd"}}


def test_write_does_not_clobber_siblings():
    root = {"specs": {"origin": "a"}}
    write_path(root, "specs.destination", "b")
    assert root == {"specs": {"origin": "a", "destination": "b"}}
