from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from twpa_flux_sim.constants.presets import REFERENCE_RUNS
from twpa_flux_sim.models.circuit import Netlist
from twpa_flux_sim.models.harmonic import HarmonicGrid
from twpa_flux_sim.netlist import build_twpa, parse_netlist, reference_design
from twpa_flux_sim.util.csv import write_frame

GOLDEN_DIR = Path(__file__).parent / "goldens"


def pytest_addoption(parser):
    parser.addoption(
        "--update-goldens",
        action="store_true",
        help="Rewrite the archived full-device gain CSVs instead of comparing against them.",
    )


@pytest.fixture(scope="session")
def update_goldens(request) -> bool:
    return request.config.getoption("--update-goldens")


@pytest.fixture(scope="session")
def lossless_design():
    return reference_design(n_cells=3, tan_delta=0.0)


@pytest.fixture(scope="session")
def lossless_device(lossless_design) -> Netlist:
    return build_twpa(lossless_design)


@pytest.fixture(scope="session")
def lossy_design():
    return reference_design(n_cells=3)


@pytest.fixture(scope="session")
def lossy_device(lossy_design) -> Netlist:
    return build_twpa(lossy_design)


@pytest.fixture(scope="session")
def full_device() -> Netlist:
    """The 700-cell device with measured loss; slow tests only."""
    return build_twpa(reference_design())


@pytest.fixture(scope="session")
def grid() -> HarmonicGrid:
    return HarmonicGrid(f_pump=REFERENCE_RUNS[0].f_pump)


@pytest.fixture(scope="session")
def lc_ladder() -> Netlist:
    """Two-port lossless LC ladder without junctions."""
    return parse_netlist(
        """
        # 50 Ohm-ish low-pass ladder
        P1 in 0 R=50 port=1
        L1 in a 2.5n
        C1 a 0 1p
        L2 a b 2.5n
        C2 b 0 1p
        L3 b out 2.5n
        P2 out 0 R=50 port=2
        """,
    )


@pytest.fixture(scope="session")
def check_golden(update_goldens):
    """Compare a gain frame against its archived CSV at 0.1 dB, or archive it."""

    def check(frame: pd.DataFrame, name: str) -> None:
        path = GOLDEN_DIR / name
        if update_goldens:
            write_frame(frame, path)
            return
        if not path.exists():
            pytest.fail(f"No archived {path.name}; create it with `inv test.unit --update-goldens`")

        golden = pd.read_csv(path)
        assert len(golden) == len(frame)
        np.testing.assert_allclose(frame["f_signal_hz"], golden["f_signal_hz"], rtol=1e-12)
        np.testing.assert_allclose(frame["gain_db"], golden["gain_db"], atol=0.1)

    return check
