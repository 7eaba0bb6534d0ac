import subprocess
import sys
from pathlib import Path

import pytest

# Make the oracle helpers importable as a plain module from any test file.
sys.path.insert(0, str(Path(__file__).parent))

FIXTURE_DIR = Path(__file__).parent / "_fixtures"
CONVERTER_DIR = Path(__file__).parents[1] / "converter"


@pytest.fixture(scope="session")
def shd_fixture() -> Path:
    """Synthetic spoken-digit-style dataset, produced once by the converter.

    Generates an SHD-layout HDF5 archive and runs the offline converter on it
    (the acceptance experiments consume converter output, never HDF5
    directly). Results are cached under tests/_fixtures across sessions.
    """
    train = FIXTURE_DIR / "shd_train.jsonl"
    test = FIXTURE_DIR / "shd_test.jsonl"
    if train.exists() and test.exists():
        return FIXTURE_DIR
    FIXTURE_DIR.mkdir(exist_ok=True)
    for name, per_class, seed in (("train", 60, 0), ("test", 20, 1)):
        h5 = FIXTURE_DIR / f"shd_{name}.h5"
        out = FIXTURE_DIR / f"shd_{name}.jsonl"
        subprocess.run(
            [
                sys.executable, str(CONVERTER_DIR / "synth.py"),
                "--out", str(h5), "--samples-per-class", str(per_class), "--seed", str(seed),
            ],
            check=True, capture_output=True,
        )
        subprocess.run(
            [
                sys.executable, str(CONVERTER_DIR / "convert.py"),
                "--in", str(h5), "--out", str(out),
                "--groups", "5", "--bins", "100", "--binarize", "--duration", "1.0",
            ],
            check=True, capture_output=True,
        )
    return FIXTURE_DIR
