"""Bundled kinematic-chain descriptions (toy fingers, a 6-dof arm, ...)."""

import importlib.resources as _resources


def resource_names() -> list[str]:
    return sorted(
        entry.name
        for entry in _resources.files(__name__).iterdir()
        if entry.name.endswith((".xml", ".yaml"))
    )


def resource_text(name: str) -> str:
    return (_resources.files(__name__) / name).read_text()


def resource_path(name: str):
    """Filesystem path of a bundled resource (the package is installed flat)."""
    import pathlib

    return pathlib.Path(str(_resources.files(__name__) / name))


def load_chain(name: str):
    """Parse a bundled chain by name: load_chain("arm6") or load_chain("arm6.xml")."""
    from ..chain import parse_chain

    if not name.endswith(".xml"):
        name += ".xml"
    return parse_chain(resource_text(name))
