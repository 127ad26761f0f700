"""Income-maximizing link selection and link weighting for teleporting
random-surfer chains.

Submodules load lazily so the command line can pin thread pools before
the numeric stack comes up.
"""

import importlib

__version__ = "0.1.0"

_MODULES = ("analysis", "chain", "cli", "errors", "graph", "oracle",
            "polytopes", "simplex", "solver_coupled", "solver_local", "sparse")

_EXPORTS = {
    "load_instance": ("graph", "load_instance"),
    "load_strategy": ("graph", "load_strategy"),
    "build_transition": ("graph", "build_transition"),
    "Strategy": ("graph", "Strategy"),
    "stationary": ("chain", "stationary"),
    "occupation": ("chain", "occupation"),
    "utility": ("chain", "utility"),
    "value_iterate": ("solver_local", "value_iterate"),
    "SolverConfig": ("solver_local", "SolverConfig"),
    "solve_coupled": ("solver_coupled", "solve_coupled"),
    "CoupledConfig": ("solver_coupled", "CoupledConfig"),
    "brute_force_optimum": ("oracle", "brute_force_optimum"),
    "master_ordering": ("analysis", "master_ordering"),
}

__all__ = sorted((*_MODULES, *_EXPORTS, "__version__"))


def __getattr__(name):
    if name in _MODULES:
        return importlib.import_module(f".{name}", __name__)
    if name in _EXPORTS:
        module, attr = _EXPORTS[name]
        return getattr(importlib.import_module(f".{module}", __name__), attr)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return __all__
