"""Fetch matrices from the SuiteSparse Matrix Collection into a local cache.

Archives are downloaded as <group>/<name>.tar.gz from the collection's
Matrix Market mirror, verified (nonempty, parseable), and extracted; a warm
cache skips the network entirely.
"""

from __future__ import annotations

import os
import tarfile
import urllib.error
import urllib.request
from pathlib import Path

from .mmio import read_matrix_market

BASE_URL = "https://suitesparse-collection-website.herokuapp.com/MM"
CACHE_ENV = "SPECFP_CACHE_DIR"
DEFAULT_CACHE = "~/.cache/specfp/suitesparse"

E3_MATRICES = ("HB/bcsstk01", "HB/bcsstk06", "HB/gr_30_30", "AG-Monien/netz4504")


class FetchError(RuntimeError):
    """Download failed; message lists the missing matrices."""


def cache_dir(override=None) -> Path:
    if override is not None:
        return Path(override)
    return Path(os.environ.get(CACHE_ENV, os.path.expanduser(DEFAULT_CACHE)))


def _cached_mtx(name: str, cache: Path) -> Path:
    group, mat = name.split("/")
    return cache / group / mat / f"{mat}.mtx"


def _download(url: str, dest: Path, timeout: float = 60.0) -> None:
    dest.parent.mkdir(parents=True, exist_ok=True)
    with urllib.request.urlopen(url, timeout=timeout) as resp, open(dest, "wb") as out:
        out.write(resp.read())


def _fetch_one(name: str, cache: Path) -> Path:
    if "/" not in name:
        raise FetchError(f"matrix name must be '<group>/<name>': {name!r}")
    target = _cached_mtx(name, cache)
    if target.exists():
        return target
    group, mat = name.split("/")
    url = f"{BASE_URL}/{group}/{mat}.tar.gz"
    archive = cache / group / f"{mat}.tar.gz"
    for attempt in range(2):
        try:
            _download(url, archive)
            if archive.stat().st_size == 0:
                raise FetchError(f"empty archive for {name}")
            with tarfile.open(archive) as tf:
                member = next(
                    (m for m in tf.getmembers() if m.name.endswith(f"{mat}.mtx")), None
                )
                if member is None:
                    raise FetchError(f"archive for {name} has no {mat}.mtx")
                member.name = f"{mat}.mtx"
                tf.extract(member, path=target.parent)
            read_matrix_market(target)  # integrity: must parse
            archive.unlink(missing_ok=True)
            return target
        except (tarfile.TarError, FetchError, ValueError, OSError) as err:
            archive.unlink(missing_ok=True)
            if isinstance(err, (urllib.error.URLError, OSError)) and attempt == 0:
                continue  # corrupt/failed download: delete and retry once
            if attempt == 0 and not isinstance(err, urllib.error.URLError):
                continue
            raise FetchError(f"could not fetch {name}: {err}") from err
    raise FetchError(f"could not fetch {name}")


def fetch_suitesparse(names, cache=None) -> list[Path]:
    """Fetch all named matrices; idempotent on a warm cache.

    Raises :class:`FetchError` listing every matrix that could not be
    obtained (unknown name, network failure, corrupt archive).
    """
    cache = cache_dir(cache)
    paths = []
    missing = []
    for name in names:
        try:
            paths.append(_fetch_one(name, cache))
        except FetchError as err:
            missing.append(f"{name} ({err})")
    if missing:
        raise FetchError("unfetchable matrices: " + "; ".join(missing))
    return paths


def cache_is_warm(names, cache=None) -> bool:
    cache = cache_dir(cache)
    return all(_cached_mtx(n, cache).exists() for n in names if "/" in n)
