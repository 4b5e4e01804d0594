import importlib.resources

import numpy as np
import pytest

from tempograd.automata import parse_hoa, translate_fragment
from tempograd.envs import Env, EnvSpec
from tempograd.diff import ops
from tempograd.ltl import atoms, parse_ltl
from tempograd.verify import load_corpus

PHI_P = 'FG(("x>10" & "x<20") | ("x>30" & "x<40")) & G!("x>20" & "x<30")'
PHI_CARTPOLE = (
    'G("position_x>-10" & "position_x<10") & G("velocity_x>-10.0" & "velocity_x<10.0") '
    '& F("cos_theta<-0.5" & F"cos_theta>0.5")'
)
PHI_LEGGED = 'G"torso_height>-11.0" & GF"torso_height>-10.5" & F("torso_vx>0.5" & F"torso_vx<0.0")'


def data_text(name):
    return importlib.resources.files("tempograd").joinpath("data", name).read_text()


def corpus():
    return load_corpus(data_text("corpus.ltl"))


class SignalEnv(Env):
    """Signals a, b, c (and anything else named) driven directly by the action."""

    def __init__(self, names=("a", "b", "c")):
        names = tuple(names)
        self.spec = EnvSpec("signals", names, len(names), (-1.0,) * len(names), (1.0,) * len(names), 1.0, 10, names)

    def initial(self, n, rng):
        return tuple(rng.uniform(-1, 1, n) for _ in self.spec.features)

    def step(self, s, action):
        return tuple(ops.add(x, u) for x, u in zip(s, action))


def bundled_automata():
    """(label, ldba, aps) for every corpus formula, the parking formula and
    the bundled cartpole HOA file."""
    out = []
    for text in corpus():
        f = parse_ltl(text)
        out.append((text, translate_fragment(f), atoms(f)))
    f = parse_ltl(PHI_P)
    out.append(("parking", translate_fragment(f), atoms(f)))
    a = parse_hoa(data_text("cartpole.hoa"))
    out.append(("cartpole.hoa", a, atoms(parse_ltl(PHI_CARTPOLE))))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(0)


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
