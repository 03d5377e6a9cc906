"""Python access to the agrimon core."""

from ._core import (  # noqa: F401
    CropGenome,
    FormatError,
    GaConfig,
    JobFailure,
    PixelResult,
    SimState,
    ValidationError,
    WeatherSeries,
    assimilate_pixel,
    observe,
    parse_sensor_xml,
    parse_weather_csv,
    predicted_messages,
    read_raster,
    rmse,
    run_synthetic_job,
    simulate,
    synthesize,
    synthetic_weather,
    template_genome,
    write_raster,
)
