from pathlib import Path

PACKAGE_DIR = Path(__file__).resolve().parent.parent

# Relative to the working directory of a run.
DEFAULT_OUTPUT_DIR = Path("out")
RUN_METADATA_NAME = "run.json"
