"""Python access to the polygnn core library."""

from ._core import (
    ConfigError,
    DescriptorMatrices,
    IoError,
    NumericError,
    Orientation,
    Polycrystal,
    Surrogate,
    __version__,
    bunge_rotation,
    default_config,
    descriptor_matrices,
    ecdf_steps,
    from_voigt,
    fung_response,
    generate_polycrystal,
    load_polycrystal,
    propagation_operator,
    run,
    save_polycrystal,
    scaled_mse,
    steady_state_damage,
    taylor_homogenize,
    to_voigt,
)

__all__ = [name for name in dir() if not name.startswith("_")]
