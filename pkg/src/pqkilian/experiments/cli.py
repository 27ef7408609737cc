"""``pqkilian``: list and run the desk-scale scenarios."""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from ..errors import InvalidParameter
from . import runner
from .scenarios import REGISTRY


@click.group()
def main():
    """Scenario runner for the rewinding and Kilian experiments."""


@main.command("list")
def list_scenarios():
    """Print every scenario with its default seed range."""
    width = max(map(len, REGISTRY))
    for name, sc in REGISTRY.items():
        click.echo(f"{name:<{width}}  seeds {sc.seeds:<8}  {sc.summary}")


@main.command("defaults")
@click.argument("scenario")
def defaults(scenario):
    """Print a config file with the default parameters of SCENARIO."""
    if scenario not in REGISTRY:
        raise click.BadParameter(f"unknown scenario {scenario!r}")
    sc = REGISTRY[scenario]
    click.echo(json.dumps({"scenario": scenario, "params": sc.defaults, "seeds": sc.seeds},
                          indent=1))


@main.command("run")
@click.argument("scenario")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(file_okay=False), help="Directory for raw.jsonl and summary.json.")
@click.option("--seeds", help="Inclusive range a..b; overrides the config.")
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--quiet", is_flag=True)
def run_scenario(scenario, config_path, out, seeds, jobs, quiet):
    """Run SCENARIO; exit status 0 iff every declared bound holds."""
    raw = json.loads(Path(config_path).read_text()) if config_path else {}
    try:
        cfg = runner.make_config(scenario, raw, seeds, out)
    except InvalidParameter as e:
        raise click.UsageError(str(e))
    report = runner.run(cfg, jobs)
    if cfg.out:
        runner.write(report, cfg.out)
    if not quiet:
        for c in report["checks"]:
            mark = "PASS" if c["passed"] else "FAIL"
            click.echo(f"{mark}  {c['name']}: {c['value']:.6g} {c['relation']} {c['bound']:.6g}"
                       f"  (se {c['sigma']:.3g}, {c['tag']})")
        click.echo(f"{scenario}: {len(cfg.seeds)} seeds in {report['wall_clock_s']:.1f}s")
    sys.exit(0 if report["passed"] else 1)


if __name__ == "__main__":
    main()
