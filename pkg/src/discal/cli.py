"""Command-line entry points."""

import json
import sys
from pathlib import Path

import click

from .discrepancy import CalibrationDataset
from .errors import DiscalError
from .fem import ScenarioConfig
from .hyperinit import initialize_hyperparams
from .prior import HyperParams
from .studio import StudioSession
from .workflows import build_scenario, run_pipeline


def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


def _dump_json(doc, path):
    path = Path(path)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


@click.group()
def main():
    """Discrepancy-prior construction, calibration, and sample studio."""


@main.command("init-hyper")
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--scenario", "scenario_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--delta-kappa", type=float, default=None, help="Correlation search increment.")
@click.option("--mc-gamma", type=int, default=200, help="Monte Carlo draws for the sensitivity magnitude.")
@click.option("--mc-eig", type=int, default=10000, help="Monte Carlo draws for the spectral ratio.")
@click.option("--seed", type=int, default=0)
def init_hyper(dataset_path, scenario_path, out_path, delta_kappa, mc_gamma, mc_eig, seed):
    """Initialize hyper-parameters from a dataset JSON and scenario JSON."""
    scenario = ScenarioConfig.from_dict(_load_json(scenario_path))
    dataset = CalibrationDataset.from_dict(_load_json(dataset_path))
    bundle = build_scenario(scenario)
    hyper = initialize_hyperparams(
        dataset,
        bundle.state_space,
        bundle.control_space,
        bundle.lowfi,
        delta_kappa=delta_kappa,
        n_mc_gamma=mc_gamma,
        n_mc_eig=mc_eig,
        seed=seed,
    )
    _dump_json(hyper.to_dict(), out_path)
    click.echo(f"wrote {out_path}")


@main.command("run")
@click.option("--scenario", "scenario_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--n-data", type=int, default=2, help="Model evaluation pairs to generate.")
@click.option("--ensemble-n", type=int, default=200)
@click.option("--seed", type=int, default=0)
@click.option("--mc-gamma", type=int, default=200)
@click.option("--mc-eig", type=int, default=10000)
def run(scenario_path, out_dir, n_data, ensemble_n, seed, mc_gamma, mc_eig):
    """Full pipeline: data, hyper-parameters, calibration, optimum ensemble."""
    doc = _load_json(scenario_path)
    if "n_data" in doc:
        n_data = int(doc.pop("n_data"))
    scenario = ScenarioConfig.from_dict(doc)
    result = run_pipeline(
        scenario,
        n_data=n_data,
        ensemble_n=ensemble_n,
        seed=seed,
        n_mc_gamma=mc_gamma,
        n_mc_eig=mc_eig,
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _dump_json(result["hyperparams"].to_dict(), out / "hyperparams.json")
    _dump_json(result["dataset"].to_dict(), out / "dataset.json")
    _dump_json(result["ensemble"], out / "ensemble.json")
    click.echo(f"wrote {out / 'hyperparams.json'}")
    click.echo(f"wrote {out / 'dataset.json'}")
    click.echo(f"wrote {out / 'ensemble.json'}")


@main.command("sample")
@click.option("--scenario", "scenario_path", required=True, type=click.Path(exists=True))
@click.option("--q", type=int, default=200)
@click.option("--seed", type=int, default=0)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--hyperparams", "hyper_path", type=click.Path(exists=True), default=None)
@click.option("--n-data", type=int, default=2)
def sample(scenario_path, q, seed, out_path, hyper_path, n_data):
    """Generate a prior-sample dataset snapshot for offline inspection."""
    doc = _load_json(scenario_path)
    if "n_data" in doc:
        n_data = int(doc.pop("n_data"))
    scenario = ScenarioConfig.from_dict(doc)
    session = StudioSession(scenario, n_data=n_data)
    if hyper_path is not None:
        hyper = HyperParams.from_dict(_load_json(hyper_path))
        session.update_hyperparams(hyper.to_dict())
    session.generate(q=q, seed=seed)
    _dump_json(session.export(), out_path)
    click.echo(f"wrote {out_path}")


@main.command("serve")
@click.option("--port", type=int, default=8000)
@click.option("--host", default="127.0.0.1")
@click.option("--static", "static_dir", type=click.Path(), default=None,
              help="Optional built frontend directory to serve at /.")
def serve(port, host, static_dir):
    """Run the studio HTTP service."""
    import uvicorn

    from .service import create_app

    app = create_app(static_dir=static_dir)
    uvicorn.run(app, host=host, port=port)


def entry():
    try:
        main(standalone_mode=True)
    except DiscalError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    entry()
