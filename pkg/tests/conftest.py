import sys
from pathlib import Path

import pytest

HERE = Path(__file__).parent
sys.path.insert(0, str(HERE))

from unclone.syntax import parse_program  # noqa: E402
from unclone.syntax.ast import MethodRef  # noqa: E402
from unclone.syntax.binding import check_program  # noqa: E402

FIXTURE = HERE / "fixtures" / "report.minij"
GOLDEN = HERE / "golden"
ADULTS = MethodRef("Report", "adults")
CHILDREN = MethodRef("Report", "children")


@pytest.fixture
def source():
    return FIXTURE.read_text()


@pytest.fixture
def program(source):
    return parse_program(source)


@pytest.fixture
def typer(program):
    return check_program(program)


@pytest.fixture
def adults_pdg(program, typer):
    from unclone.pdg import build_pdg
    return build_pdg(program, ADULTS, typer)


@pytest.fixture
def children_pdg(program, typer):
    from unclone.pdg import build_pdg
    return build_pdg(program, CHILDREN, typer)
