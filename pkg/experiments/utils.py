import hashlib
import os
from typing import Dict


def create_directory(directory: str) -> None:
    """
    Create directory if it doesn't exist.
    :param directory:
    """
    if not os.path.exists(directory):
        os.makedirs(directory)


def output_directories(output_dir: str) -> Dict[str, str]:
    """
    reports/, checkpoints/ and sweeps/ under the experiment output directory.
    """
    directories = {
        name: os.path.join(output_dir, name)
        for name in ("reports", "checkpoints", "sweeps")
    }
    for directory in directories.values():
        create_directory(directory)
    return directories


def file_hash(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as file:
        for block in iter(lambda: file.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()
