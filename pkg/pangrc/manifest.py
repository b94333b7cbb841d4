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
"""Creates the run manifest listing every artifact of an output directory."""
import json
import os

import jinja2
from pangrc import __version__
from pangrc.util import DataError
from pangrc.util import LOG

TEMPLATE_DIR = os.path.dirname(__file__)
MANIFEST_TEMPLATE_FILE = "manifest-template.json"
MANIFEST_FILE = "manifest.json"


def artifact(file_name, kind, settings_hash, theta=None, **extra):
    """Describe one emitted file."""
    entry = {"file": os.path.basename(file_name), "kind": kind, "settings_hash": settings_hash, "theta": theta}
    entry.update(extra)
    return entry


def generate_manifest(template_data):
    """Render the manifest template.

    Args:
        template_data (Dict): model, settings_hash, commands and artifacts
    Returns:
        (String): Rendered template data

    """
    render_data = {
        "version": __version__,
        "model": template_data.get("model"),
        "settings_hash": template_data.get("settings_hash"),
        "commands": json.dumps(sorted(set(template_data.get("commands", [])))),
        "artifacts": json.dumps(
            sorted(template_data.get("artifacts", []), key=lambda entry: entry["file"]), indent=8, sort_keys=True
        ),
    }
    template_loader = jinja2.FileSystemLoader(searchpath=TEMPLATE_DIR)
    template_env = jinja2.Environment(loader=template_loader, keep_trailing_newline=True)
    template = template_env.get_template(MANIFEST_TEMPLATE_FILE)
    return template.render(render_data)


def read_manifest(directory):
    """Return the parsed manifest of a directory, or None if there is none."""
    path = os.path.join(directory, MANIFEST_FILE)
    if not os.path.isfile(path):
        return None
    try:
        with open(path) as manifest_file:
            return json.load(manifest_file)
    except json.JSONDecodeError as err:
        raise DataError(f"Manifest {path} is not valid JSON: {err}") from err


def write_manifest(directory, command, model, settings_hash, artifacts):
    """Merge new artifacts into the directory manifest and write it.

    Entries for the same file name are replaced. Files of earlier runs with
    another settings hash are kept so train can find the generate output.
    """
    existing = read_manifest(directory) or {}
    merged = {entry["file"]: entry for entry in existing.get("artifacts", [])}
    for entry in artifacts:
        merged[entry["file"]] = entry
    commands = list(existing.get("commands", [])) + [command]
    output = generate_manifest(
        {
            "model": model,
            "settings_hash": settings_hash,
            "commands": commands,
            "artifacts": list(merged.values()),
        }
    )
    path = os.path.join(directory, MANIFEST_FILE)
    LOG.info(f"Writing to {MANIFEST_FILE}")
    with open(path, "w") as manifest_file:
        manifest_file.write(output)
    return path


def artifacts_of_kind(manifest, kind):
    """Return manifest entries of one kind in file-name order."""
    if not manifest:
        return []
    entries = [entry for entry in manifest.get("artifacts", []) if entry.get("kind") == kind]
    return sorted(entries, key=lambda entry: entry["file"])
