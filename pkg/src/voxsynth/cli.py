"""Command-line interface.

Exit codes: 0 success, 1 configuration error, 2 I/O or usage error,
3 generation error.
"""

from __future__ import annotations

import os
import sys

import click

from .config import default_config, parse_config, serialize_config
from .errors import ConfigError, GenerationError, VolumeIOError
from .io import export_slice, load_volume, save_volume
from .pipeline import DEFAULT_PREVIEW_COUNT, generate, qc_flags

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_GENERATION = 3


def _load_config(path):
    if path is None:
        return default_config()
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise VolumeIOError(str(exc)) from exc
    return parse_config(text)


def _load_roster(paths):
    roster = []
    for path in paths:
        volume, _ = load_volume(path, kind="integer-labels")
        roster.append((os.path.basename(str(path)), volume))
    return roster


def _run(body):
    try:
        return body() or EXIT_OK
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        return EXIT_CONFIG
    except (VolumeIOError, OSError) as exc:
        click.echo(f"i/o error: {exc}", err=True)
        return EXIT_IO
    except GenerationError as exc:
        click.echo(f"generation error: {exc}", err=True)
        return EXIT_GENERATION


@click.group()
def main():
    """Synthesize randomized training images from anatomical label maps."""


@main.command("generate")
@click.option("--labels", "label_paths", multiple=True, required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Label-map volume(s); seeds round-robin across them.")
@click.option("--config", "config_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Config document; omitted fields take the defaults.")
@click.option("--seed", default=0, show_default=True,
              help="First seed; samples use seed..seed+count-1.")
@click.option("--count", default=DEFAULT_PREVIEW_COUNT, show_default=True,
              help="Number of pairs to generate.")
@click.option("--out", "out_dir", required=True,
              type=click.Path(file_okay=False),
              help="Output directory for image/label volumes.")
@click.option("--preview-png", is_flag=True,
              help="Also export a center-slice PNG per pair.")
def cli_generate(label_paths, config_path, seed, count, out_dir,
                 preview_png):
    """Write COUNT sample pairs (image, labels, provenance) named by seed."""

    def body():
        cfg = _load_config(config_path)
        roster = _load_roster(label_paths)
        os.makedirs(out_dir, exist_ok=True)
        flagged = 0
        for z in range(seed, seed + count):
            name, volume = roster[(z - seed) % len(roster)]
            pair = generate(volume, cfg, z)
            prov = dict(pair.provenance)
            prov["label_map"] = name
            save_volume(pair.image,
                        os.path.join(out_dir, f"{z:010d}_image.nii.gz"),
                        provenance=prov)
            save_volume(pair.labels,
                        os.path.join(out_dir, f"{z:010d}_labels.nii.gz"),
                        provenance=prov)
            if preview_png:
                axis = pair.image.ndim - 1
                index = pair.image.shape[axis] // 2
                export_slice(pair.image, axis, index,
                             os.path.join(out_dir, f"{z:010d}_image.png"))
                export_slice(pair.labels, axis, index,
                             os.path.join(out_dir, f"{z:010d}_labels.png"))
            flags = qc_flags(pair)
            if flags:
                flagged += 1
                click.echo(f"seed {z}: qc flags {flags}", err=True)
        click.echo(f"wrote {count} pairs to {out_dir}"
                   + (f" ({flagged} flagged)" if flagged else ""))

    sys.exit(_run(body))


@main.command("stream")
@click.option("--labels", "label_paths", multiple=True, required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", default=None,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--seed-base", default=0, show_default=True)
@click.option("--count", default=100, show_default=True)
@click.option("--workers", default=4, show_default=True)
@click.option("--capacity", default=8, show_default=True)
@click.option("--out", "out_dir", required=True,
              type=click.Path(file_okay=False))
def cli_stream(label_paths, config_path, seed_base, count, workers,
               capacity, out_dir):
    """Continuously generate pair files into OUT (restart-safe)."""

    def body():
        from .stream import StreamJob, run_stream
        cfg = _load_config(config_path)
        job = StreamJob(roster=tuple(_load_roster(label_paths)), config=cfg,
                        seed_base=seed_base, count=count, capacity=capacity,
                        workers=workers, out_dir=out_dir)
        result = run_stream(job)
        click.echo(f"wrote {len(result.written)} pairs "
                   f"({len(result.skipped)} already present, "
                   f"{len(result.failures)} failed)")
        if result.failures:
            for z, message in sorted(result.failures.items()):
                click.echo(f"seed {z}: {message}", err=True)
            return EXIT_GENERATION

    sys.exit(_run(body))


@main.command("serve")
@click.option("--roster", "roster_dir",
              default=lambda: os.environ.get("VOXSYNTH_ROSTER"),
              type=click.Path(exists=True, file_okay=False), required=True,
              help="Directory of label-map volumes "
                   "(or set VOXSYNTH_ROSTER).")
@click.option("--config", "config_path", default=None,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=lambda: int(os.environ.get("VOXSYNTH_PORT",
                                                            "8000")),
              show_default="8000 (or VOXSYNTH_PORT)")
def cli_serve(roster_dir, config_path, host, port):
    """Run the HTTP preview service for the tuning UI."""

    def body():
        import uvicorn

        from .server import create_app, load_roster
        cfg = _load_config(config_path)
        app = create_app(load_roster(roster_dir), cfg)
        uvicorn.run(app, host=host, port=port)

    sys.exit(_run(body))


@main.command("config")
@click.option("--out", "out_path", default=None,
              type=click.Path(dir_okay=False),
              help="Write the default config document here instead of "
                   "stdout.")
def cli_config(out_path):
    """Print (or write) the default configuration document."""

    def body():
        text = serialize_config(default_config())
        if out_path:
            with open(out_path, "w") as fh:
                fh.write(text)
        else:
            click.echo(text, nl=False)

    sys.exit(_run(body))


if __name__ == "__main__":
    main()
