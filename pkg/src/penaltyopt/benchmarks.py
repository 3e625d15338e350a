"""Small benchmark problems with feasible starts and valid lower bounds.

Every entry is a problem document. ``SMOOTH`` lists the ones whose
objective and constraints are smooth, used for iteration-count sweeps.
"""
from __future__ import annotations

from .problemfile import parse_problem

_ball10 = ", ".join(f'"x{i}"' for i in range(1, 11))
_lin10 = " + ".join(f"0.31622776601683794*x{i}" for i in range(1, 11))
_quad10 = " + ".join(f"{0.5 * i}*(x{i} - 1)^2" for i in range(1, 11))
_cap10 = ", ".join(f'"x{i} - 0.5"' for i in range(1, 11))

DOCUMENTS = {
    "oned": """\
variables = 1
objective = x1
constraint = {"expr": "1 - x1", "set": "orthant-"}
start = [1]
M = 0
rho0 = 1
""",
    "conic2d": """\
variables = 2
objective = x1 + x2
constraint = {"expr": "x1^2 + x2^2 - 2", "set": "orthant-"}
start = [0, 0]
M = 3
rho0 = 1
""",
    "boxquad3": """\
variables = 3
objective = (x1 - 2)^2 + (x2 + 1)^2 + (x3 - 0.5)^2
constraint = {"expr": ["x1", "x2", "x3"], "set": {"kind": "box", "lower": [-1, -1, -1], "upper": [1, 1, 1]}}
start = [0, 0, 0]
M = 0
rho0 = 0
""",
    "orthant5": """\
variables = 5
objective = (x1 - 1)^2 + (x2 + 1)^2 + (x3 - 2)^2 + (x4 + 0.5)^2 + (x5 - 0.3)^2
constraint = {"expr": ["x1", "x2", "x3", "x4", "x5"], "set": "orthant-"}
start = [0, 0, 0, 0, 0]
M = 0
rho0 = 0
""",
    "ball10": f"""\
variables = 10
objective = {_lin10}
constraint = {{"expr": [{_ball10}], "set": {{"kind": "ball", "center": [0, 0, 0, 0, 0, 0, 0, 0, 0, 0], "radius": 1}}}}
start = [0, 0, 0, 0, 0, 0, 0, 0, 0, 0]
M = 1.5
rho0 = 1
""",
    "eqquad2": """\
variables = 2
objective = x1^2 + 2*x2^2
constraint = {"expr": "x1 + x2 - 1", "set": "zeros"}
start = [1, 0]
M = 0
rho0 = 0
""",
    "maxobj2": """\
variables = 2
objective = abs(x1 - x2) + 0.5*(x1 + x2)^2
constraint = {"expr": "1 - x1 - x2", "set": "orthant-"}
start = [1, 1]
M = 0
rho0 = 0
""",
    "minobj2": """\
variables = 2
objective = min(x1^2 + (x2 - 1)^2, (x1 - 1)^2 + x2^2)
constraint = {"expr": "x1 + x2 - 0.5", "set": "orthant-"}
start = [0, 0]
M = 0
rho0 = 0
""",
    "finite1": """\
variables = 1
objective = (x1 - 0.3)^2
constraint = {"expr": "x1", "set": {"kind": "finite", "points": [[-1], [1]]}}
start = [1]
M = 0
rho0 = 0
""",
    "lorentz3": """\
variables = 3
objective = x3 + x1^2 + x2^2
constraint = {"expr": ["x1 - 1", "x2", "x3"], "set": "lorentz"}
start = [1, 0, 1]
M = 1
rho0 = 1
""",
    "quad10": f"""\
variables = 10
objective = {_quad10}
constraint = {{"expr": [{_cap10}], "set": "orthant-"}}
start = [0, 0, 0, 0, 0, 0, 0, 0, 0, 0]
M = 0
rho0 = 0
""",
    "sphere2": """\
variables = 2
objective = x1 + 2*x2
constraint = {"expr": ["x1", "x2"], "set": {"kind": "sphere", "center": [0, 0], "radius": 1}}
start = [1, 0]
M = 4
rho0 = 1
""",
}

SMOOTH = ("oned", "conic2d", "boxquad3", "orthant5", "eqquad2", "quad10", "ball10")

# the worked conic example as an exact-penalty fixture, started at its KKT point
CONIC_KKT = """\
variables = 2
objective = x1 + x2
constraint = {"expr": "x1^2 + x2^2 - 2", "set": "orthant-"}
start = [-1, -1]
M = 3
rho0 = 1
alpha = 1
"""


def load(name):
    return parse_problem(DOCUMENTS[name])


def names():
    return list(DOCUMENTS)
