"""Online bilevel data selection."""

from ._dsel import (
    Config,
    ConfigError,
    ContractError,
    NumericError,
    RunResult,
    Task,
    WeightTrajectory,
    build_task,
    cds,
    classifier,
    curriculum,
    filter,
    finetune,
    mixing,
    oracle,
    pretrain_bilevel,
    pretrain_uniform,
    run_cli,
    sha256_file,
    transfer,
)

__all__ = [
    "Config",
    "ConfigError",
    "ContractError",
    "NumericError",
    "RunResult",
    "Task",
    "WeightTrajectory",
    "build_task",
    "cds",
    "classifier",
    "curriculum",
    "filter",
    "finetune",
    "mixing",
    "oracle",
    "pretrain_bilevel",
    "pretrain_uniform",
    "run_cli",
    "sha256_file",
    "transfer",
]
