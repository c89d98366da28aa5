import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from socioscope.ingest import load_default_directory


@pytest.fixture(scope="session")
def directory():
    return load_default_directory()


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """A small generated corpus shared by parsing/pipeline tests."""
    from socioscope.synth import SynthSpec, generate

    outdir = tmp_path_factory.mktemp("corpus")
    spec = SynthSpec(n_users=300, n_edges=900, homophily_strength=0.6, seed=5)
    truth = generate(spec, outdir)
    return outdir, truth
