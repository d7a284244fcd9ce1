"""Benchmark game constructors.

Three recipes, each returning a (GameModel, UtilitySpec) pair:

* ``build_iterated_rpsd``: iterated rock-paper-scissors-dummy.  Each player
  remembers the previous round, so the state is the previous joint action
  (16 states for the 4x4 action grid) and transitions are deterministic.
  The payoff of a round depends only on the current joint action, so the
  utility is linear in the joint occupancy measure; the previous joint
  action affects play only through the state label.  The dummy action loses
  to everything, so the stage game's unique equilibrium is uniform over
  rock/paper/scissors.
* ``build_matrix_game``: a one-shot matrix game as a single-state instance;
  the utility is linear in the joint occupancy and the value reduces to
  x^T M y exactly.
* ``build_entropy_cmdp``: a single-agent kernel embedded as a game whose
  minimizer has one (dummy) action; the maximizer earns the entropy of its
  own occupancy, the standard reward-free exploration objective.
"""

from dataclasses import dataclass

import numpy as np

from .game import GameModel, validate_model
from .utility import Entropy, JointLinearReward

RPSD_ACTIONS = ("rock", "paper", "scissors", "dummy")


def rpsd_stage_payoff(dummy_penalty=1.5):
    """4x4 stage payoff to the max player; antisymmetric by construction.

    Standard cycle on rock/paper/scissors (entry (a, b) is +1 when the max
    player's action b beats the min player's a); the dummy action costs its
    user ``dummy_penalty`` against every opponent action, dummy-vs-dummy is
    a joint loss that nets to zero under zero sum.  Strict domination by the
    losing rock/paper/scissors actions needs the penalty above the unit
    payoff scale, hence the default of 1.5.
    """
    if dummy_penalty <= 0:
        raise ValueError("dummy_penalty must be > 0")
    M = np.zeros((4, 4))
    beats = {(0, 1): 1.0, (1, 2): 1.0, (2, 0): 1.0}  # paper>rock, scissors>paper, rock>scissors
    for a in range(3):
        for b in range(3):
            if (a, b) in beats:
                M[a, b] = 1.0
            elif (b, a) in beats:
                M[a, b] = -1.0
    M[3, :3] = dummy_penalty   # min plays dummy: max wins the penalty
    M[:3, 3] = -dummy_penalty  # max plays dummy: max loses the penalty
    M[3, 3] = 0.0
    M = 0.5 * (M - M.T)
    return M


def build_iterated_rpsd(gamma, dummy_penalty=1.5):
    """Iterated rock-paper-scissors-dummy with memory one.

    States enumerate the previous joint action as s = 4 * a_prev + b_prev;
    the kernel is the one-hot map s' = (a, b); the initial distribution is
    uniform over all 16 states so every state has positive mass.  The
    stage payoff applies to the current joint action in every state, so the
    utility is the linear functional <payoff, joint occupancy>.
    """
    if not (0.0 <= gamma < 1.0):
        raise ValueError("gamma must lie in [0, 1)")
    M = rpsd_stage_payoff(dummy_penalty)
    S, A, B = 16, 4, 4
    P = np.zeros((S, A, B, S))
    for a in range(A):
        for b in range(B):
            P[:, a, b, 4 * a + b] = 1.0
    model = GameModel(P, np.full(S, 1.0 / S), gamma)
    return model, JointLinearReward(np.broadcast_to(M, (S, A, B)).copy())


def build_matrix_game(payoff, gamma=0.0):
    """Single-state embedding of a matrix game.

    ``payoff[i, j]`` is the max player's payoff when the min player uses row
    i and the max player column j.  With one state the occupancy is the
    product of the policies, so the utility equals x^T payoff y exactly for
    any discount.
    """
    payoff = np.asarray(payoff, dtype=float)
    if payoff.ndim != 2 or not np.all(np.isfinite(payoff)):
        raise ValueError("payoff must be a finite 2-d matrix")
    A, B = payoff.shape
    P = np.ones((1, A, B, 1))
    model = GameModel(P, np.array([1.0]), gamma)
    return model, JointLinearReward(payoff[None, :, :])


def build_entropy_cmdp(kernel, rho, gamma):
    """Embed a single-agent MDP as a game with an entropy-seeking maximizer.

    ``kernel`` has shape (S, B, S).  The min player gets a single dummy
    action (the kernel ignores it) and the utility is the entropy of the max
    player's occupancy, so solving the max side reproduces occupancy-entropy
    exploration in the original MDP.
    """
    kernel = np.asarray(kernel, dtype=float)
    if kernel.ndim != 3 or kernel.shape[0] != kernel.shape[2]:
        raise ValueError("kernel must have shape (S, B, S)")
    model = GameModel(kernel[:, None, :, :], np.asarray(rho, dtype=float), gamma)
    return model, Entropy(side="max", weight=1.0)


@dataclass(frozen=True)
class GameRecipe:
    """Named constructor reference used by experiment configs."""

    kind: str
    params: dict

    def build(self):
        if self.kind == "iterated_rpsd":
            model, spec = build_iterated_rpsd(
                gamma=self.params.get("gamma", 0.9),
                dummy_penalty=self.params.get("dummy_penalty", 1.5),
            )
        elif self.kind == "matrix_game":
            model, spec = build_matrix_game(
                payoff=np.array(self.params["payoff"], dtype=float),
                gamma=self.params.get("gamma", 0.0),
            )
        elif self.kind == "entropy_cmdp":
            model, spec = build_entropy_cmdp(
                kernel=np.array(self.params["kernel"], dtype=float),
                rho=np.array(self.params["rho"], dtype=float),
                gamma=self.params.get("gamma", 0.9),
            )
        else:
            raise ValueError(f"unknown game kind {self.kind!r}")
        problems = validate_model(model)
        if problems:
            raise ValueError(f"recipe produced an invalid model: {problems}")
        return model, spec
