"""Tracking error and adiabatic-propagator error of the rotating-wave m-RIS against T."""
import argparse
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from ris_landauer import adiabatic, scenario, simulate


@dataclass
class ScalingConfig:
    config: str = "configs/rotating_wave.json"
    T: list[int] = field(default_factory=lambda: [64, 128, 256, 512])
    stride_divisor: int = 32


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--config", default=ScalingConfig.config)
    p.add_argument("--T", type=int, nargs="+", default=ScalingConfig().T)
    cfg = ScalingConfig(**vars(p.parse_args()))
    sc_cfg = scenario.ScenarioConfig.from_file(cfg.config)
    m = scenario.resolve_m(sc_cfg)
    rows = []
    for T in cfg.T:
        sched = scenario.make_schedule(sc_cfg, T, m=m)
        tr = simulate.adiabatic_state_tracking(sched, scenario.initial_state(sc_cfg, sched))
        path = adiabatic.ProjectorPath.from_sampler(sched.channel, T, m)
        prop = adiabatic.build_propagator(path)
        err = adiabatic.adiabatic_error(path, prop, stride=max(1, T // cfg.stride_divisor))
        rows.append({"T": T, "mid_run_distance": tr.max_in(), "max_E1": err.max_E1,
                     "identity_residual": max(prop.identity_residuals(path).values()), "c_P": path.c_P})
        print(json.dumps(rows[-1]))
    Ts = np.array([r["T"] for r in rows])
    slope = np.polyfit(np.log(Ts), np.log([r["mid_run_distance"] for r in rows]), 1)[0]
    print(json.dumps({"config": asdict(cfg), "m": m, "tracking_slope": float(slope)}, indent=2))


if __name__ == "__main__":
    main()
