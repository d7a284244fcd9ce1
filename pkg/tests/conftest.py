import numpy as np
import pytest

from cmgsolve import GameModel, PolicyPair


def random_model(rng, n_states=3, n_min=2, n_max=2, gamma=0.8, rho_conc=4.0):
    """Random dense model with strictly positive initial distribution."""
    P = rng.dirichlet(np.ones(n_states), size=(n_states, n_min, n_max))
    rho = rng.dirichlet(np.ones(n_states) * rho_conc)
    rho = np.maximum(rho, 1e-3)
    rho = rho / rho.sum()
    return GameModel(P, rho, gamma)


def random_pair(rng, model, explore_min=0.0, explore_max=0.0):
    x = rng.dirichlet(np.ones(model.n_actions_min), size=model.n_states)
    y = rng.dirichlet(np.ones(model.n_actions_max), size=model.n_states)
    return PolicyPair(x, y, explore_min, explore_max)


def interior_pair(rng, model, floor=0.05):
    """Random pair bounded away from the simplex boundary."""
    pair = random_pair(rng, model)
    x = (1 - floor * model.n_actions_min) * pair.min_policy + floor
    y = (1 - floor * model.n_actions_max) * pair.max_policy + floor
    return PolicyPair(x, y)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
