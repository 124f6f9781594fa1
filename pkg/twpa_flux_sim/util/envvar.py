import os

ENVVAR_PREFIX = "TWPA_FLUX_SIM"


def envvar_is_true(envvar_name: str) -> bool:
    """Return `True` if environment variable is set with the value 'true'.

    Case insensitive.
    """
    return os.environ.get(envvar_name, "false").lower() == "true"


def envvar_or(envvar_name: str, default: str) -> str:
    return os.environ.get(envvar_name, default)


def log_level() -> str:
    return envvar_or(f"{ENVVAR_PREFIX}_LOG_LEVEL", "INFO").upper()


def fd_jacobian_enabled() -> bool:
    """Debug switch: assemble the pump Jacobian by finite differences."""
    return envvar_is_true(f"{ENVVAR_PREFIX}_FD_JACOBIAN")


def oracle_override_enabled() -> bool:
    """Lift the cell-count guard of the transient oracle."""
    return envvar_is_true(f"{ENVVAR_PREFIX}_ORACLE_OVERRIDE")
