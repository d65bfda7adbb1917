"""Consensus-based dual decomposition with primal recovery (CoBa-DD).

Every node keeps its own dual pair (mu_i, G_i) inside the compact
projection sets.  One iteration runs, per node: the local Lagrangian
minimization at the node's own duals, the ergodic primal update, then a
dual update in which each node forms the payload

    ( mu_i + alpha g_i(x_i~),  G_i - alpha (A0/n + A_i x_i~) ),

the network mixes the stacked payloads with phi synchronous consensus
steps, and each node projects its mixed payload back onto the sets.  As
in the centralized baseline, the pass at the initial duals only feeds
the first dual update; the ergodic mean starts at the first updated
duals.  Replacing the weights by the exact averaging matrix makes every
node reproduce the centralized bounded iteration with stepsize alpha/n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bounds import compute_c0, default_beta0, theoretical_bounds
from .network import ConsensusMatrix, Graph, MessageLedger, consensus_round, metropolis_weights
from .problem import (DualPoint, DualSetSpec, ProblemInstance,
                      constraint_values, dual_function_values, evaluate_primal,
                      minimize_node_lagrangians, subgradient_bounds)
from .spectral import project_psd_ball_stack
from .trace import RunTrace


@dataclass(frozen=True)
class CobaddConfig:
    """Run parameters: stepsize, consensus steps per iteration, budget,
    projection sets, and a seed echoed into the trace."""

    alpha: float
    phi: int
    K: int
    sets: DualSetSpec
    seed: int = 0
    beta0: float | None = None

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.phi < 1:
            raise ValueError("phi must be at least 1")
        if self.K < 1:
            raise ValueError("K must be at least 1")


@dataclass
class NodeState:
    """One node's view after k recorded iterations."""

    dual: DualPoint
    tilde_x: float
    ergodic_x: float
    tilde_sum: float
    k: int


def _unpack(instance: ProblemInstance, states: list[NodeState]):
    mus = np.array([s.dual.mu for s in states])
    Gs = np.stack([s.dual.G for s in states]) if instance.d else None
    tilde_sum = np.array([s.tilde_sum for s in states])
    return mus, Gs, tilde_sum, states[0].k


def _pack(instance: ProblemInstance, mus, Gs, x_tilde, tilde_sum, k) -> list[NodeState]:
    out = []
    for i in range(instance.n):
        G = Gs[i] if Gs is not None else np.zeros((0, 0))
        erg = tilde_sum[i] / k if k >= 1 else math.nan
        out.append(NodeState(DualPoint(mus[i], G), float(x_tilde[i]), erg,
                             float(tilde_sum[i]), k))
    return out


def _mix_and_project(instance: ProblemInstance, W: ConsensusMatrix,
                     payload_mu: np.ndarray, payload_G: np.ndarray | None,
                     phi: int, sets: DualSetSpec,
                     ledger: MessageLedger | None):
    n, d = instance.n, instance.d
    if d:
        stacked = np.concatenate([payload_mu[:, None], payload_G.reshape(n, d * d)], axis=1)
    else:
        stacked = payload_mu[:, None]
    mixed = consensus_round(W, stacked, phi, ledger)
    new_mus = np.clip(mixed[:, 0], 0.0, sets.Lambda)
    new_Gs = None
    if d:
        new_Gs = project_psd_ball_stack(mixed[:, 1:].reshape(n, d, d), sets.Gamma)
    return new_mus, new_Gs


def _advance(instance, W, config, mus, Gs, ledger):
    """Oracle pass at the current duals followed by the projected
    consensus update; returns the minimizers and the new duals."""
    x_tilde, q_local = minimize_node_lagrangians(instance, mus, Gs)
    h, Qm = constraint_values(instance, x_tilde)
    payload_mu = mus + config.alpha * h
    payload_G = Gs + config.alpha * Qm if instance.d else None
    new_mus, new_Gs = _mix_and_project(
        instance, W, payload_mu, payload_G, config.phi, config.sets, ledger)
    return x_tilde, q_local, new_mus, new_Gs


def cobadd_init(instance: ProblemInstance, W: ConsensusMatrix, config: CobaddConfig,
                initial_duals: list[DualPoint] | None = None,
                ledger: MessageLedger | None = None) -> list[NodeState]:
    """Bootstrap: sample at the initial duals, run the first consensus
    update, and return the per-node states holding the updated duals."""
    n = instance.n
    if initial_duals is None:
        mus = np.zeros(n)
        Gs = np.zeros((n, instance.d, instance.d)) if instance.d else None
    else:
        if len(initial_duals) != n:
            raise ValueError(f"expected {n} initial duals")
        mus = np.array([z.mu for z in initial_duals])
        Gs = np.stack([z.G for z in initial_duals]) if instance.d else None
    x_tilde, _, new_mus, new_Gs = _advance(instance, W, config, mus, Gs, ledger)
    return _pack(instance, new_mus, new_Gs, x_tilde, np.zeros(n), 0)


def cobadd_step(instance: ProblemInstance, states: list[NodeState],
                W: ConsensusMatrix, config: CobaddConfig,
                ledger: MessageLedger | None = None) -> list[NodeState]:
    """One recorded iteration from explicit per-node states."""
    mus, Gs, tilde_sum, k = _unpack(instance, states)
    x_tilde, _, new_mus, new_Gs = _advance(instance, W, config, mus, Gs, ledger)
    return _pack(instance, new_mus, new_Gs, x_tilde, tilde_sum + x_tilde, k + 1)


def cobadd_solve(instance: ProblemInstance, network: "Graph | ConsensusMatrix",
                 config: CobaddConfig,
                 initial_duals: list[DualPoint] | None = None,
                 record_duals: bool = False) -> RunTrace:
    """Full CoBa-DD run over a simulated synchronous network.

    ``network`` is either a Graph (Metropolis-Hastings weights are built
    and certified) or a ready ConsensusMatrix (e.g. the exact averaging
    matrix for equivalence experiments).  The trace carries one row per
    recorded iteration plus the theoretical bound curves; beta0 defaults
    to max(c0, 10 alpha M) with c0 evaluated at this run's phi.
    """
    W = metropolis_weights(network) if isinstance(network, Graph) else network
    n, d = instance.n, instance.d
    K, alpha = config.K, config.alpha
    ledger = MessageLedger()

    if initial_duals is None:
        mus = np.zeros(n)
        Gs = np.zeros((n, d, d)) if d else None
        init_list = None
    else:
        mus = np.array([z.mu for z in initial_duals])
        Gs = np.stack([z.G for z in initial_duals]) if d else None
        init_list = list(initial_duals)

    c0 = compute_c0(instance, W, config.phi, init_list, alpha)
    if config.beta0 is not None:
        beta0 = config.beta0
    else:
        beta0 = default_beta0(c0, alpha, subgradient_bounds(instance).M)
    bounds = theoretical_bounds(instance, config.sets, W.nu, config, beta0)

    # bootstrap: consensus round 1 produces the duals used at row 1
    _, _, mus, Gs = _advance(instance, W, config, mus, Gs, ledger)

    cols = {name: np.zeros(K) for name in
            ("f_ergodic", "viol_ineq", "viol_lmi", "q_best_node", "q_mean",
             "disagreement")}
    mu_dis = np.zeros(K)
    G_dis = np.zeros(K)
    mu_hist = np.zeros((K, n)) if record_duals else None
    G_hist = np.zeros((K, n, d, d)) if (record_duals and d) else None
    tilde_sum = np.zeros(n)

    for k in range(1, K + 1):
        # per-node dual values and disagreement at the duals used this round
        q_nodes = dual_function_values(instance, mus, Gs)
        mu_bar = mus.mean()
        dev_mu = np.abs(mus - mu_bar)
        if d:
            G_bar = Gs.mean(axis=0)
            dev_G = np.linalg.norm(Gs - G_bar, axis=(1, 2))
        else:
            dev_G = np.zeros(n)
        mu_dis[k - 1] = float(dev_mu.max())
        G_dis[k - 1] = float(dev_G.max())
        cols["disagreement"][k - 1] = float((dev_mu + dev_G).max())
        cols["q_best_node"][k - 1] = float(q_nodes.max())
        cols["q_mean"][k - 1] = float(q_nodes.mean())
        if record_duals:
            mu_hist[k - 1] = mus
            if d:
                G_hist[k - 1] = Gs

        x_tilde, _, mus, Gs = _advance(instance, W, config, mus, Gs, ledger)
        tilde_sum += x_tilde
        f, vi, vl = evaluate_primal(instance, tilde_sum / k)
        cols["f_ergodic"][k - 1] = f
        cols["viol_ineq"][k - 1] = vi
        cols["viol_lmi"][k - 1] = vl

    ks = np.arange(1, K + 1)
    messages_cum = np.cumsum(ledger.per_iteration)[:K]
    config_echo = {"solver": "cobadd", "alpha": alpha, "phi": config.phi,
                   "K": K, "radius": config.sets.Lambda, "seed": config.seed,
                   "beta0": bounds.beta0, "c0": c0, "nu": W.nu,
                   "instance": dict(instance.meta)}
    return RunTrace(
        config=config_echo,
        k=ks,
        f_ergodic=cols["f_ergodic"],
        viol_ineq=cols["viol_ineq"],
        viol_lmi=cols["viol_lmi"],
        q_best_node=cols["q_best_node"],
        q_mean=cols["q_mean"],
        disagreement=cols["disagreement"],
        messages_cum=messages_cum,
        bound_upper=bounds.primal_upper_deviation(ks),
        bound_lower=bounds.primal_lower_deviation(ks),
        beta_k=bounds.beta_k.copy(),
        bounds=bounds,
        mu_disagreement=mu_dis,
        G_disagreement=G_dis,
        mu_history=mu_hist,
        G_history=G_hist,
        final_mus=mus.copy(),
        final_Gs=Gs.copy() if d else None,
        extras={"ledger_total": ledger.total_messages},
    )
