from dataclasses import dataclass
import numpy as np
import pandas as pd

from src.mesh.grid import Field
from src.mesh.operators import gradient_faces, lp_norm


#Scalar quantity sampled at snapshot times
@dataclass(frozen=True)
class TimeSeries:
    t: np.ndarray
    values: np.ndarray
    label: str = "value"

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if t.shape != values.shape:
            raise ValueError(f"time series misaligned: {t.shape} times, {values.shape} values")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.t)

    def after(self, t_min: float) -> "TimeSeries":
        keep = self.t >= t_min
        return TimeSeries(self.t[keep], self.values[keep], self.label)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"t": self.t, self.label: self.values})


#(t_i, ||field(t_i)||_gamma) over the recorded snapshots; `which` may be "u+w"
def norm_series(traj, which: str, gamma: float) -> TimeSeries:
    values = []
    for state in traj.states:
        try:
            field = state.get(which)
        except (KeyError, AttributeError):
            raise ValueError(f"field '{which}' is not recorded in this {traj.kind} trajectory")
        values.append(lp_norm(field, gamma))
    label = f"{which}_L{'inf' if np.isinf(gamma) else f'{gamma:g}'}"
    return TimeSeries(np.array(traj.times), np.array(values), label)


#Cell-centered |grad f| from the averaged face differences
def gradient_magnitude(f: Field) -> Field:
    grad = gradient_faces(f)
    gx = 0.5 * (grad.vx[:, :-1] + grad.vx[:, 1:])
    gy = 0.5 * (grad.vy[:-1, :] + grad.vy[1:, :])
    return f.with_values(np.hypot(gx, gy))
