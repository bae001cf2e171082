import math

import numpy as np
import pytest
from hypothesis import strategies as st

from fist.metrics import TokenLogProb

# filled by tests/test_acceptance.py; echoed after the run so the
# per-criterion lines survive output capture
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

WORDS = "alpha bravo cats delta eagle fox grid hotel iris jolt kite lima".split()


def make_token(fragment, probs, vocab_offset=0):
    """Build a TokenLogProb whose alternatives carry the given probs (desc)."""
    probs = sorted(probs, reverse=True)
    alts = [(fragment, math.log(probs[0]))]
    for i, p in enumerate(probs[1:]):
        alts.append((f" alt{vocab_offset + i}", math.log(p)))
    return TokenLogProb(token=fragment, chosen_logprob=math.log(probs[0]),
                        alternatives=tuple(alts))


def random_probs(rng, k=5, peak=1.0):
    w = rng.uniform(0.5, 1.5, size=k)
    w[0] *= peak
    w[::-1].sort()
    return list(w / w.sum())


def random_tokens(rng, n_tokens, k=5, peak=1.0):
    return [
        make_token(f" w{i}", random_probs(rng, k=k, peak=peak), vocab_offset=i)
        for i in range(n_tokens)
    ]


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


# hypothesis strategies ------------------------------------------------------

def _token_from_weights(weights, idx):
    total = sum(weights)
    probs = sorted((w / total for w in weights), reverse=True)
    return make_token(f" t{idx}", probs, vocab_offset=idx)


st_token = st.builds(
    _token_from_weights,
    st.lists(st.floats(min_value=0.05, max_value=10.0), min_size=1, max_size=5),
    st.integers(min_value=0, max_value=999),
)

st_token_seq = st.lists(st_token, min_size=1, max_size=24)

st_text = st.lists(st.sampled_from(WORDS), min_size=1, max_size=10).map(" ".join)
