"""Print the spectrum of the full-dipole channel and compare with reference values."""
import argparse
import json
from dataclasses import asdict, dataclass

import numpy as np

from ris_landauer import channel, models
from ris_landauer.quantum import gibbs_state

REFERENCE = [1.0, 0.554087, 0.685604 + 0.289887j, 0.685604 - 0.289887j]


@dataclass
class SpectrumConfig:
    E: float = 0.9
    E0: float = 0.8
    lam: float = 2.0
    tau: float = 0.5
    beta: float = 1.0


def main():
    p = argparse.ArgumentParser(description=__doc__)
    for name, default in asdict(SpectrumConfig()).items():
        p.add_argument(f"--{name}", type=float, default=default)
    cfg = SpectrumConfig(**vars(p.parse_args()))
    model = models.QubitModel("qubit_fd", cfg.E)
    h_E = model.h_E(cfg.E0)
    L = channel.reduced_dynamics(model.h_S, h_E, model.v, cfg.lam, cfg.tau, gibbs_state(h_E, cfg.beta))
    sp = channel.spectral(L)
    eigs = sorted(sp.eigs, key=lambda e: (-abs(e), e.imag))
    out = {
        "config": asdict(cfg),
        "eigenvalues": [[e.real, e.imag] for e in eigs],
        "z": sp.z,
        "ell_spr": sp.ell_spr,
        "max_deviation_from_reference": float(max(np.min(np.abs(np.array(eigs) - r)) for r in REFERENCE)),
    }
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
