#
# Copyright 2024 The pangrc Authors.
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU Affero General Public License as
# published by the Free Software Foundation, either version 3 of the
# License, or (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU Affero General Public License for more details.
#
# You should have received a copy of the GNU Affero General Public License
# along with this program.  If not, see <https://www.gnu.org/licenses/>.
#
"""Runs the experiment commands and writes their artifacts."""
import csv
import json
import math
import os

import numpy as np
from pangrc.analysis.bifurcation import compare_diagrams
from pangrc.analysis.bifurcation import find_tipping
from pangrc.analysis.bifurcation import ground_truth_bifurcation
from pangrc.analysis.bifurcation import ks_statistic
from pangrc.analysis.bifurcation import local_maxima
from pangrc.analysis.bifurcation import reconstruct_bifurcation
from pangrc.analysis.lyapunov import benettin_lle
from pangrc.analysis.lyapunov import rosenstein_lle
from pangrc.analysis.sweep import gamma_sweep
from pangrc.analysis.sweep import reference_exponents
from pangrc.analysis.sweep import validate
from pangrc.config import build_model
from pangrc.config import config_hash
from pangrc.config import generation_recipe
from pangrc.config import lyapunov_params
from pangrc.config import make_grid
from pangrc.config import ngrc_config
from pangrc.config import run_settings
from pangrc.features import feature_dim
from pangrc.manifest import artifact
from pangrc.manifest import artifacts_of_kind
from pangrc.manifest import read_manifest
from pangrc.manifest import write_manifest
from pangrc.models import integrate
from pangrc.models import Trajectory
from pangrc.predictor import detect_collapse
from pangrc.predictor import free_run_nonstationary
from pangrc.predictor import load_model
from pangrc.predictor import make_warmup
from pangrc.predictor import ParameterSchedule
from pangrc.predictor import save_model
from pangrc.predictor import TrainedModel
from pangrc.training import fit
from pangrc.training import TrainingSample
from pangrc.training import TrainingSet
from pangrc.util import ConfigError
from pangrc.util import DataError
from pangrc.util import LOG
from pangrc.util import NumericalError

MODEL_FILE = "model.json"
TRAINING = "training"
MODEL = "model"
DIAGRAM_PARTS = ("scatter", "summary", "tipping")


def _format(value):
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_csv(output_file, data, header):
    """Output csv file data."""
    LOG.info(f"Writing to {os.path.basename(output_file)}")
    with open(output_file, "w", newline="") as file:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(header)
        for row in data:
            writer.writerow([_format(value) for value in row])
    return output_file


def _plain_json(objekt):
    if isinstance(objekt, dict):
        return {str(key): _plain_json(value) for key, value in objekt.items()}
    if isinstance(objekt, (list, tuple)):
        return [_plain_json(value) for value in objekt]
    if isinstance(objekt, (float, np.floating)):
        return float(objekt) if math.isfinite(objekt) else None
    if isinstance(objekt, np.integer):
        return int(objekt)
    return objekt


def _write_json(output_file, data):
    """Output a JSON document with sorted keys."""
    LOG.info(f"Writing to {os.path.basename(output_file)}")
    with open(output_file, "w") as file:
        file.write(json.dumps(_plain_json(data), indent=2, sort_keys=True))
        file.write("\n")
    return output_file


def write_trajectory_csv(output_file, traj, thetas=None):
    """Write t,x0..x{d-1}[,theta] rows."""
    header = ["t"] + [f"x{index}" for index in range(traj.dim)] + (["theta"] if thetas is not None else [])
    times = traj.times
    rows = (
        [times[step]] + list(traj.states[step]) + ([thetas[step]] if thetas is not None else [])
        for step in range(len(traj))
    )
    return _write_csv(output_file, rows, header)


def read_trajectory_csv(input_file):
    """Read a trajectory CSV written by write_trajectory_csv; returns (Trajectory, thetas or None)."""
    try:
        with open(input_file, newline="") as file:
            reader = csv.reader(file)
            header = next(reader)
            rows = [[float(value) for value in row] for row in reader if row]
    except (OSError, StopIteration, ValueError) as err:
        raise DataError(f"Cannot read trajectory {input_file}: {err}") from err
    if not header or header[0] != "t" or len(rows) < 2:
        raise DataError(f"Trajectory {input_file} needs a 't' column and at least two rows.")
    data = np.array(rows)
    state_columns = [position for position, name in enumerate(header) if name.startswith("x")]
    thetas = data[:, header.index("theta")] if "theta" in header else None
    dt = float(data[1, 0] - data[0, 0])
    if not dt > 0:
        raise DataError(f"Trajectory {input_file} has non-increasing times.")
    return Trajectory(data[:, state_columns], dt, float(data[0, 0])), thetas


def write_diagram(directory, prefix, diagram, tipping):
    """Write long-format scatter, per-theta summary and tipping points of a diagram."""
    scatter = _write_csv(os.path.join(directory, f"{prefix}_scatter.csv"), diagram.scatter_points(), ["theta", "value"])
    summary = _write_csv(
        os.path.join(directory, f"{prefix}_summary.csv"), diagram.summary(), ["theta", "lambda_max", "collapse"]
    )
    points = [vars(point) for point in tipping]
    errors = [{"theta": row.theta, "error": row.error} for row in diagram.rows if row.error]
    report = _write_json(os.path.join(directory, f"{prefix}_tipping.json"), {"tipping": points, "errors": errors})
    return scatter, summary, report


def _diagram_artifacts(directory, prefix, diagram, tipping, kind, digest):
    paths = write_diagram(directory, prefix, diagram, tipping)
    return [artifact(path, f"{kind}-{part}", digest) for path, part in zip(paths, DIAGRAM_PARTS)]


def _out_dir(config):
    directory = config.output.directory
    os.makedirs(directory, exist_ok=True)
    return directory


def _training_file(model, position):
    return f"train_{model.name.replace('-', '_')}_{position:02d}.csv"


def simulate_training_set(config, model):
    """Integrate the ODE at every training theta."""
    recipe = generation_recipe(config, model)
    samples = []
    thetas = config.training.thetas
    for position, theta in enumerate(thetas, start=1):
        LOG.info(f"Integrating training sample {position}/{len(thetas)} at {model.parameter_name}={theta}")
        traj = integrate(model.with_theta(theta), recipe.x0, recipe.dt, recipe.n_steps)
        collapse = detect_collapse(traj, model.collapse_rules())
        if collapse is not None:
            LOG.warning(f"Training sample at {theta} collapses ({collapse.kind}) at step {collapse.step}")
        samples.append(TrainingSample(traj, float(theta)))
    return TrainingSet(samples)


def load_training_set(directory):
    """Read the training trajectories listed in a directory manifest."""
    entries = artifacts_of_kind(read_manifest(directory), TRAINING)
    if not entries:
        raise DataError(f"No training data in {directory}: run generate first.")
    samples = []
    for entry in entries:
        traj, _ = read_trajectory_csv(os.path.join(directory, entry["file"]))
        samples.append(TrainingSample(traj, float(entry["theta"])))
    return TrainingSet(samples)


def cmd_generate(config, threads=1):
    """Write the training trajectories and the ground-truth diagram."""
    directory = _out_dir(config)
    model = build_model(config)
    digest = config_hash(config)
    artifacts = []
    training_set = simulate_training_set(config, model)
    for position, sample in enumerate(training_set, start=1):
        name = _training_file(model, position)
        write_trajectory_csv(os.path.join(directory, name), sample.trajectory)
        artifacts.append(artifact(name, TRAINING, digest, sample.theta))
    grid = make_grid(config.generation.grid)
    if grid:
        diagram = ground_truth_bifurcation(model, grid, generation_recipe(config, model), threads)
        tipping = find_tipping(diagram, config.tipping.jump_factor, config.tipping.window)
        artifacts.extend(_diagram_artifacts(directory, "ground_truth", diagram, tipping, "ground-truth", digest))
    write_manifest(directory, "generate", model.name, digest, artifacts)
    return artifacts


def cmd_train(config, data_dir=None, threads=1):
    """Fit the readout on generated training data and write the model JSON."""
    directory = _out_dir(config)
    model = build_model(config)
    digest = config_hash(config)
    training_set = load_training_set(data_dir or directory)
    ngrc = ngrc_config(config, model.dim)
    readout = fit(training_set, ngrc, threads)
    readout.training.update({"model": model.name, "settings_hash": digest})
    trained = TrainedModel(readout)
    path = os.path.join(directory, MODEL_FILE)
    save_model(trained, path)
    monomials = os.path.join(directory, "monomials.csv")
    trained.table.to_csv(monomials)
    write_manifest(
        directory,
        "train",
        model.name,
        digest,
        [artifact(path, MODEL, digest, feature_dim=feature_dim(ngrc)), artifact(monomials, "monomials", digest)],
    )
    print(f"feature dimension: {feature_dim(ngrc)}")
    print(f"samples: {len(training_set)}")
    print(f"columns per sample: {', '.join(str(count) for count in readout.training['columns_per_sample'])}")
    print(f"total columns: {readout.training['total_columns']}")
    degrees = ", ".join(f"{order}: {count}" for order, count in readout.training["monomials_per_degree"].items())
    print(f"monomials per degree: {degrees}")
    return trained


def _rollout(config, model, trained, schedule, n_steps):
    prediction = config.prediction
    recipe = generation_recipe(config, model, n_steps)
    thetas = schedule.resolve(n_steps, recipe.dt)
    warmup_theta = thetas[0]
    if prediction.warmup == "fixed" and prediction.warmup_theta is not None:
        warmup_theta = prediction.warmup_theta
    warmup = make_warmup(model.with_theta(warmup_theta), recipe.x0, recipe.dt, trained)
    return free_run_nonstationary(warmup, trained, schedule, n_steps, model.collapse_rules())


def _write_rollout(directory, prefix, result, digest):
    paths = [write_trajectory_csv(os.path.join(directory, f"{prefix}.csv"), result.trajectory, result.thetas)]
    artifacts = [artifact(paths[0], "trajectory", digest, float(result.thetas[0]))]
    if result.collapse is not None:
        LOG.warning(f"Rollout collapsed ({result.collapse.kind}) at step {result.collapse.step}")
        sidecar = _write_json(
            os.path.join(directory, f"{prefix}_collapse.json"),
            {
                "step": result.collapse.step,
                "kind": result.collapse.kind,
                "t": float(result.trajectory.t0 + result.collapse.step * result.trajectory.dt),
                "theta": float(result.thetas[min(result.collapse.step, len(result.thetas) - 1)]),
            },
        )
        artifacts.append(artifact(sidecar, "collapse", digest))
    return artifacts


def cmd_predict(config, model_path=None, theta=None):
    """Free-run the trained model at a fixed theta."""
    directory = _out_dir(config)
    model = build_model(config)
    digest = config_hash(config)
    trained = load_model(model_path or os.path.join(directory, MODEL_FILE))
    theta = theta if theta is not None else config.prediction.theta
    if theta is None:
        theta = config.training.thetas[0]
    result = _rollout(config, model, trained, ParameterSchedule.constant(theta), config.prediction.n_steps)
    artifacts = _write_rollout(directory, "prediction", result, digest)
    write_manifest(directory, "predict", model.name, digest, artifacts)
    return result


def cmd_nonstationary(config, model_path=None):
    """Free-run the trained model under the configured parameter schedule."""
    if config.schedule is None:
        raise ConfigError("schedule: required for nonstationary runs.")
    directory = _out_dir(config)
    model = build_model(config)
    digest = config_hash(config)
    trained = load_model(model_path or os.path.join(directory, MODEL_FILE))
    schedule = ParameterSchedule.from_dict(config.schedule)
    result = _rollout(config, model, trained, schedule, config.prediction.n_steps)
    artifacts = _write_rollout(directory, "nonstationary", result, digest)
    if schedule.kind == "step":
        switch = int(schedule.settings["switch_step"])
        series = result.trajectory.states[:, _observable(config, model)]
        fraction = config.generation.transient_fraction
        before = local_maxima(series[:switch], int(round(fraction * switch)))
        after = local_maxima(series[switch:], int(round(fraction * max(len(series) - switch, 0))))
        summary = _write_json(
            os.path.join(directory, "nonstationary_summary.json"),
            {
                "switch_step": switch,
                "maxima_before": len(before),
                "maxima_after": len(after),
                "ks_statistic": ks_statistic(before, after),
                "steps": len(result.trajectory) - 1,
                "collapse": result.collapse.kind if result.collapse else None,
            },
        )
        artifacts.append(artifact(summary, "switch-summary", digest))
    write_manifest(directory, "nonstationary", model.name, digest, artifacts)
    return result


def _observable(config, model):
    return model.default_observable if config.generation.observable is None else config.generation.observable


def cmd_bifurcation(config, model_path=None, ground_truth=None, threads=1):
    """Reconstruct the bifurcation diagram, optionally with the ground-truth overlay."""
    directory = _out_dir(config)
    model = build_model(config)
    digest = config_hash(config)
    trained = load_model(model_path or os.path.join(directory, MODEL_FILE))
    grid = make_grid(config.prediction.grid)
    if not grid:
        raise ConfigError("prediction.grid: required for bifurcation runs.")
    settings = run_settings(config, model)
    diagram = reconstruct_bifurcation(trained, grid, settings, threads)
    tipping = find_tipping(diagram, config.tipping.jump_factor, config.tipping.window)
    artifacts = _diagram_artifacts(directory, "predicted", diagram, tipping, "predicted", digest)
    for point in tipping:
        LOG.info(f"Tipping ({point.kind}) near {model.parameter_name}={point.theta_critical} {point.detail}")

    training_grid = [theta for theta in config.training.thetas if diagram.row_at(float(theta)) is not None]
    if training_grid:
        reference = reference_exponents(
            simulate_training_set_at(config, model, training_grid), settings, _observable(config, model)
        )
        points = validate(diagram, reference)
        for point in points:
            print(
                f"{model.parameter_name}={point.theta}: lambda_true={point.lambda_true:.6g} "
                f"lambda_pred={point.lambda_pred:.6g} tolerance={point.tolerance:.6g} "
                f"{'PASS' if point.passed else 'FAIL'}"
            )
        path = _write_json(os.path.join(directory, "predicted_validation.json"), [vars(point) for point in points])
        artifacts.append(artifact(path, "validation", digest))

    if ground_truth is None:
        ground_truth = config.prediction.ground_truth
    if ground_truth:
        recipe = generation_recipe(config, model, config.prediction.n_steps)
        truth = ground_truth_bifurcation(model, grid, recipe, threads)
        truth_tipping = find_tipping(truth, config.tipping.jump_factor, config.tipping.window)
        artifacts.extend(_diagram_artifacts(directory, "overlay_truth", truth, truth_tipping, "ground-truth", digest))
        path = _write_csv(
            os.path.join(directory, "overlay_ks.csv"), compare_diagrams(truth, diagram), ["theta", "ks_statistic"]
        )
        artifacts.append(artifact(path, "ks", digest))
    write_manifest(directory, "bifurcation", model.name, digest, artifacts)
    return diagram, tipping


def simulate_training_set_at(config, model, thetas):
    """Integrate the ODE at the given thetas with the generation recipe."""
    subset = config.copy()
    subset.training = subset.training.copy()
    subset.training.thetas = list(thetas)
    return simulate_training_set(subset, model)


def cmd_gamma_sweep(config, data_dir=None, threads=1):
    """Train and validate one model per gamma; write the sweep table and lambda envelope."""
    directory = _out_dir(config)
    model = build_model(config)
    digest = config_hash(config)
    if not config.sweep.gammas:
        raise ConfigError("sweep.gammas: must not be empty.")
    source = data_dir or directory
    if artifacts_of_kind(read_manifest(source), TRAINING):
        training_set = load_training_set(source)
    else:
        training_set = simulate_training_set(config, model)
    grid = make_grid(config.sweep.grid) or list(config.training.thetas)
    result = gamma_sweep(
        training_set, ngrc_config(config, model.dim), config.sweep.gammas, grid, run_settings(config, model), threads
    )
    sweep_path = _write_json(os.path.join(directory, "gamma_sweep.json"), result.to_dict())
    envelope_path = _write_csv(
        os.path.join(directory, "gamma_envelope.csv"),
        [(entry["theta"], entry["lambda_min"], entry["lambda_max"], entry["count"]) for entry in result.envelope],
        ["theta", "lambda_min", "lambda_max", "count"],
    )
    for entry in result.results:
        suffix = f" ({entry.error})" if entry.error else ""
        print(f"gamma={entry.gamma}: {'PASS' if entry.passed else 'FAIL'}{suffix}")
    write_manifest(
        directory,
        "gamma-sweep",
        model.name,
        digest,
        [artifact(sweep_path, "gamma-sweep", digest), artifact(envelope_path, "lambda-envelope", digest)],
    )
    return result


def cmd_lyapunov(config, trajectory=None, column=None):
    """Estimate largest Lyapunov exponents.

    With a trajectory CSV the Rosenstein estimate of one column is reported.
    Otherwise the ODE is integrated at each configured theta and the
    Rosenstein and Benettin estimates are compared.
    """
    directory = _out_dir(config)
    model = build_model(config)
    digest = config_hash(config)
    params = lyapunov_params(config)
    recipe = generation_recipe(config, model)
    rows = []
    if trajectory is not None:
        traj, thetas = read_trajectory_csv(trajectory)
        index = _observable(config, model) if column is None else column
        if not 0 <= index < traj.dim:
            raise DataError(f"Column x{index} is not in {trajectory}.")
        discard = int(round(recipe.transient_fraction * len(traj)))
        estimate = rosenstein_lle(traj.states[discard:, index], traj.dt, params)
        theta = float(thetas[0]) if thetas is not None else None
        rows.append((theta, estimate.lambda_max, None))
    else:
        thetas = config.lyapunov.thetas or config.training.thetas
        for position, theta in enumerate(thetas, start=1):
            LOG.info(f"Lyapunov estimates {position}/{len(thetas)} at {model.parameter_name}={theta}")
            system = model.with_theta(theta)
            traj = integrate(system, recipe.x0, recipe.dt, recipe.n_steps)
            if detect_collapse(traj, system.collapse_rules()) is not None:
                rows.append((float(theta), math.nan, math.nan))
                continue
            series = traj.states[recipe.discard() :, _observable(config, model)]
            try:
                rosenstein = rosenstein_lle(series, recipe.dt, params).lambda_max
                benettin = benettin_lle(
                    system,
                    recipe.x0,
                    recipe.dt,
                    recipe.n_steps - recipe.discard(),
                    renorm_interval=config.lyapunov.renorm_interval,
                    d0=config.lyapunov.d0,
                    transient_steps=recipe.discard(),
                ).lambda_max
            except (DataError, NumericalError) as err:
                LOG.warning(f"No Lyapunov estimate at {model.parameter_name}={theta}: {err}")
                rosenstein = benettin = math.nan
            rows.append((float(theta), rosenstein, benettin))
    path = _write_csv(os.path.join(directory, "lyapunov.csv"), rows, ["theta", "rosenstein", "benettin"])
    for theta, rosenstein, benettin in rows:
        print(f"theta={_format(theta)}: rosenstein={_format(rosenstein)} benettin={_format(benettin)}")
    write_manifest(directory, "lyapunov", model.name, digest, [artifact(path, "lyapunov", digest)])
    return rows
