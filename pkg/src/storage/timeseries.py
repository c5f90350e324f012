from pathlib import Path
from typing import Mapping, Sequence, Union
import pandas as pd
from loguru import logger

SeriesLike = Union[pd.DataFrame, Mapping[str, Sequence[float]]]


#Write a CSV with `t` first, 17 significant digits and LF line endings
def write_timeseries(series: SeriesLike, path: Union[str, Path]) -> None:
    if isinstance(series, pd.DataFrame):
        frame = series.copy()
    else:
        lengths = {key: len(values) for key, values in series.items()}
        if len(set(lengths.values())) > 1:
            raise ValueError(f"time series columns are not aligned: {lengths}")
        frame = pd.DataFrame({key: list(values) for key, values in series.items()})

    if "t" not in frame.columns:
        raise ValueError("time series needs a 't' column")
    frame = frame[["t"] + [c for c in frame.columns if c != "t"]]

    write_table(frame, path)


#Any table in the same CSV dialect, e.g. one row per parameter draw
def write_table(frame: pd.DataFrame, path: Union[str, Path]) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    except OSError as e:
        logger.error(f"Failed to write table {path}: {e}")
        raise OSError(f"cannot write '{path}': {e.strerror or e}") from e
    logger.debug(f"Wrote {len(frame)} rows to {path}")


#Read a CSV written by write_timeseries; doubles round-trip exactly
def read_timeseries(path: Union[str, Path]) -> pd.DataFrame:
    return pd.read_csv(path, float_precision="round_trip")
