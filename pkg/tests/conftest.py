import pytest

import tmdsl


@pytest.fixture(scope="session")
def johndoe():
    return tmdsl.load_bundled("johndoe.tm")


@pytest.fixture(scope="session")
def cheesehut():
    return tmdsl.load_bundled("cheesehut.tm")


@pytest.fixture(scope="session")
def bad_transit():
    return tmdsl.load_bundled("bad-transit.tm")


@pytest.fixture
def write_model(tmp_path):
    """Write ``text`` to a .tm file under tmp_path and return its path."""

    def write(text, name="model.tm"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return write
