import json
from pathlib import Path

import pytest

from scriptocr.fixtures import FIXTURE_METADATA, build_fixture_fonts, write_metadata

DATA = Path(__file__).parent / "data"
DEJAVU = Path("/usr/share/fonts/truetype/dejavu/DejaVuSans.ttf")


@pytest.fixture(scope="session")
def oracles():
    return json.loads((DATA / "oracles.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def font_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("fonts")
    build_fixture_fonts(d)
    return d


@pytest.fixture(scope="session")
def fonts(font_dir):
    return {
        "latin": font_dir / "FixLatin.ttf",
        "hebrew": font_dir / "FixHebrew.ttf",
        "deva": font_dir / "FixDeva.ttf",
        "wrong_script": font_dir / "FixWrong.ttf",
        "pruned": font_dir / "FixPruned.ttf",
        "empty_om": font_dir / "FixEmptyOm.ttf",
    }


@pytest.fixture(scope="session")
def metadata_path(tmp_path_factory):
    return write_metadata(tmp_path_factory.mktemp("meta") / "meta.json", FIXTURE_METADATA)


@pytest.fixture(scope="session")
def catalog(font_dir, metadata_path):
    from scriptocr.fontcat import index_fonts

    return index_fonts(font_dir, metadata_path)


@pytest.fixture
def dejavu():
    if not DEJAVU.exists():
        pytest.skip("DejaVu Sans not installed")
    return DEJAVU
