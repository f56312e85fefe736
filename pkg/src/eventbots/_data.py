from functools import lru_cache
from importlib import resources


@lru_cache(maxsize=None)
def data_text(name: str) -> str:
    """Contents of a bundled file under ``eventbots/data``."""
    return resources.files("eventbots").joinpath("data", name).read_text(encoding="utf-8")
