import pytest

from coinforge import formula as fml


def _toy_builds():
    # depth-2 derandomized formulas over lines-type designs with at most 24 variables
    out = []
    for m in (2, 3, 4):
        for f2 in (5, 6, 9, 12, 16):
            out.append(fml.gamma_spec(None, 2, force=True, m=m, fanins=[m, f2], ell=2))
    for m in (2, 3):
        for f2 in (20, 25, 36, 49, 64):
            out.append(fml.gamma_spec(None, 2, force=True, m=m, fanins=[m, f2], ell=2))
    return out


@pytest.fixture(scope="session")
def toy_gamma2():
    return _toy_builds()
