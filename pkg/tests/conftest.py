import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from facs3d.au_rules import label_dataset  # noqa: E402
from facs3d.features import extract_dataset  # noqa: E402
from facs3d.synthgen import generate_dataset  # noqa: E402


@pytest.fixture(scope="session")
def clean_sequences():
    return generate_dataset(30, 30, base_seed=7)


@pytest.fixture(scope="session")
def clean_labeled(clean_sequences):
    return label_dataset(extract_dataset(clean_sequences))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.RESULTS, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
