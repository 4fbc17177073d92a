"""Configuration: process settings, run configuration schema and logging"""

from .schema import (
    CLASS_NAMES,
    UNET_PRESETS,
    AugmentPolicy,
    DataConfig,
    LossConfig,
    RenderConfig,
    RunConfig,
    TeacherConfig,
    TrainConfig,
    TsneConfig,
    UNetConfig,
)
from .settings import (
    ConfigLoader,
    Settings,
    configure_logging,
    get_settings,
    get_settings_for_environment,
    validate_configuration,
)
