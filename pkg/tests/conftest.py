import os
from pathlib import Path

import numpy as np
import pytest

from gpmfs.dataset import Dataset, load_dataset

HERE = Path(__file__).parent

EMOTIONS_LABELS = ["amazed-suprised", "happy-pleased", "relaxing-calm", "quiet-still",
                   "sad-lonely", "angry-aggresive"]


def make_synthetic(n=120, F=20, L=4, latent=6, noise=1.0, seed=0):
    """Features driven by a low-rank latent factor; labels threshold the first L latents."""
    rng = np.random.default_rng(seed)
    Z = rng.normal(size=(n, latent))
    X = Z @ rng.normal(size=(latent, F)) + noise * rng.normal(size=(n, F))
    Y = (Z[:, :L] + 0.7 * rng.normal(size=(n, L)) > 0.4).astype(int)
    Y[Y.sum(axis=1) == 0, 0] = 1
    return Dataset(X, Y, source=f"synthetic-{seed}")


@pytest.fixture
def synthetic():
    return make_synthetic()


def find_emotions():
    """Locate the Mulan Emotions ARFF (and optional XML header).

    Looks at $GPMFS_EMOTIONS, then tests/data/ and data/ under the project root.
    """
    candidates = []
    if os.environ.get("GPMFS_EMOTIONS"):
        candidates.append(Path(os.environ["GPMFS_EMOTIONS"]))
    for d in (HERE / "data", HERE.parent / "data"):
        candidates.append(d / "emotions.arff")
    for path in candidates:
        if path.is_file():
            xml = Path(os.environ.get("GPMFS_EMOTIONS_XML", path.with_suffix(".xml")))
            return path, (xml if xml.is_file() else None)
    return None, None


def load_emotions():
    path, xml = find_emotions()
    if path is None:
        return None
    if xml is not None:
        return load_dataset(path, "arff-with-xml", xml_path=xml)
    return load_dataset(path, "arff-trailing", label_count=len(EMOTIONS_LABELS))


@pytest.fixture(scope="session")
def emotions():
    ds = load_emotions()
    if ds is None:
        pytest.skip("Emotions ARFF not available (set GPMFS_EMOTIONS or add tests/data/emotions.arff)")
    return ds


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
