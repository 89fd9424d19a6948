import importlib.resources as importlib_resources

import pytest

from xrteleop import parse_chain


def resource_text(name: str) -> str:
    return (importlib_resources.files("xrteleop") / "resources" / name).read_text()


def load_chain(name: str):
    return parse_chain(resource_text(name))


@pytest.fixture(scope="session")
def planar2():
    return load_chain("planar2.xml")


@pytest.fixture(scope="session")
def arm6():
    return load_chain("arm6.xml")


@pytest.fixture(scope="session")
def spatial3():
    return load_chain("spatial3.xml")


@pytest.fixture(scope="session")
def finger1():
    return load_chain("finger1.xml")


@pytest.fixture(scope="session")
def finger2():
    return load_chain("finger2.xml")


@pytest.fixture(scope="session")
def hand_two_finger():
    return load_chain("hand_two_finger.xml")
