import pytest

from amc_codes.complexes import amc_build, css_extract
from amc_codes.group_algebra import AbelianGroup, parse_elements
from amc_codes.search import REFERENCE_TABLE, build_table_row


@pytest.fixture(autouse=True)
def configure_caplog(caplog):
    caplog.set_level("INFO")


@pytest.fixture
def c7():
    return AbelianGroup.cyclic(7)


@pytest.fixture
def c7_elements(c7):
    return parse_elements(c7, "1+x,1+x^2,1+x^3,1+x^4")


@pytest.fixture
def c7_complex(c7, c7_elements):
    return amc_build(c7, c7_elements)


@pytest.fixture(scope="session")
def code_42():
    """The [[42,6,4]] code of the first table row."""
    return build_table_row(REFERENCE_TABLE[0])


@pytest.fixture(scope="session")
def code_66():
    return build_table_row(REFERENCE_TABLE[2])


@pytest.fixture
def small_code():
    """D = 2 AMC code over C_3: [[6, 2, 2]] with weight-4 checks."""
    group = AbelianGroup.cyclic(3)
    return css_extract(amc_build(group, parse_elements(group, "1+x,1+x")), 1)
