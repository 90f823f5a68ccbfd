"""Total entropy production against T for a detailed-balance and a non-detailed-balance probe."""
import argparse
import json
from dataclasses import dataclass, field

from ris_landauer import scenario


@dataclass
class TrichotomyConfig:
    configs: list[str] = field(default_factory=lambda: ["configs/rotating_wave.json", "configs/full_dipole.json"])
    out: str | None = None


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("configs", nargs="*", default=TrichotomyConfig().configs)
    p.add_argument("--out", help="write ledgers, sweep.csv and SVG charts here")
    cfg = TrichotomyConfig(**vars(p.parse_args()))
    for path in cfg.configs:
        sc_cfg = scenario.ScenarioConfig.from_file(path)
        out = scenario.output_dir(sc_cfg, f"{cfg.out}/{sc_cfg.model}") if cfg.out else None
        result = scenario.sweep(sc_cfg, out)
        verdict = scenario.verify_suite(sc_cfg).X_verdict
        rows = [{k: r[k] for k in ("T", "m", "sigma_tot", "landauer_gap", "max_adiabatic_error")} for r in result.rows]
        print(json.dumps({"config": path, "X_verdict": verdict, "rows": rows}, indent=2))


if __name__ == "__main__":
    main()
