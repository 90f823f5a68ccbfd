"""Per-step entropy production of the full-dipole probe against the leading small-coupling rate."""
import argparse
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from ris_landauer import channel, models, perturbation, simulate
from ris_landauer.linalg import kron, trace_norm
from ris_landauer.quantum import gibbs_state


@dataclass
class RateConfig:
    E: float = 0.9
    E0: float = 0.8
    tau: float = 0.5
    beta: float = 1.0
    lambdas: list[float] = field(default_factory=lambda: [0.2, 0.1, 0.05, 0.025])


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--lambdas", type=float, nargs="+", default=RateConfig().lambdas)
    p.add_argument("--beta", type=float, default=RateConfig.beta)
    cfg = RateConfig(**vars(p.parse_args()))
    model = models.QubitModel("qubit_fd", cfg.E)
    h_E = model.h_E(cfg.E0)
    xi = gibbs_state(h_E, cfg.beta)
    rho0 = models.fd_invariant_state(cfg.E, cfg.E0, 0.0, cfg.tau, cfg.beta)
    M = perturbation.first_order_M(model.h_S, h_E, model.v, cfg.tau, rho0, np.zeros((2, 2)), xi)
    rows = []
    for lam in cfg.lambdas:
        U = channel.step_unitary(model.h_S, h_E, model.v, lam, cfg.tau)
        rho = channel.invariant_state(channel.channel_from_unitary(U, xi, 2))
        _, rec = simulate.simulate_step(rho, model.h_S, h_E, model.v, lam, cfg.tau, cfg.beta)
        pred = perturbation.sigma_small_coupling(M, np.zeros_like(M), lam, rho0, xi)
        closed = models.fd_sigma_per_step(lam, cfg.beta, cfg.E, cfg.E0, cfg.tau)
        ref = kron(rho, xi)
        rows.append({"lambda": lam, "sigma": rec.sigma, "prediction": pred.value, "closed_form": closed,
                     "relative_error": abs(rec.sigma - closed) / closed,
                     "X_norm": float(trace_norm(U @ ref @ U.conj().T - ref))})
        print(json.dumps(rows[-1]))
    lams = np.array(cfg.lambdas)
    resid = [abs(r["sigma"] - r["closed_form"]) for r in rows]
    print(json.dumps({"config": asdict(cfg),
                      "residual_slope": float(np.polyfit(np.log(lams), np.log(resid), 1)[0])}, indent=2))


if __name__ == "__main__":
    main()
